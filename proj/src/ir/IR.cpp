//===- ir/IR.cpp - IR printing, parsing and normalization ----------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/ir/IR.h"

#include "forge/selectors/Selectors.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace forge::ir {

std::string_view ty_name(Ty t) {
  switch (t) {
  case Ty::Void:
    return "void";
  case Ty::I32:
    return "i32";
  case Ty::U32:
    return "u32";
  case Ty::I64:
    return "i64";
  case Ty::U64:
    return "u64";
  case Ty::Ptr:
    return "ptr";
  }
  return "?";
}

std::optional<Ty> parse_ty(std::string_view s) {
  for (Ty t : {Ty::Void, Ty::I32, Ty::U32, Ty::I64, Ty::U64, Ty::Ptr})
    if (ty_name(t) == s)
      return t;
  return std::nullopt;
}

unsigned ty_bytes(Ty t) {
  switch (t) {
  case Ty::Void:
    return 0;
  case Ty::I32:
  case Ty::U32:
    return 4;
  default:
    return 8;
  }
}

bool ty_signed(Ty t) { return t == Ty::I32 || t == Ty::I64; }

const Function *Module::find_function(std::string_view name) const {
  for (const Function &f : functions)
    if (f.name == name)
      return &f;
  return nullptr;
}

Function *Module::find_function(std::string_view name) {
  for (Function &f : functions)
    if (f.name == name)
      return &f;
  return nullptr;
}

const Global *Module::find_global(std::string_view name) const {
  for (const Global &g : globals)
    if (g.name == name)
      return &g;
  return nullptr;
}

//===----------------------------------------------------------------------===//
// Printing
//===----------------------------------------------------------------------===//

namespace {

const char *opcode_name(Opcode op) {
  switch (op) {
  case Opcode::Add:
    return "add";
  case Opcode::Sub:
    return "sub";
  case Opcode::Mul:
    return "mul";
  case Opcode::Div:
    return "div";
  case Opcode::Rem:
    return "rem";
  case Opcode::And:
    return "and";
  case Opcode::Or:
    return "or";
  case Opcode::Xor:
    return "xor";
  case Opcode::Shl:
    return "shl";
  case Opcode::Shr:
    return "shr";
  case Opcode::ICmp:
    return "icmp";
  case Opcode::Conv:
    return "conv";
  case Opcode::Load:
    return "load";
  case Opcode::Store:
    return "store";
  case Opcode::Gep:
    return "gep";
  case Opcode::Alloca:
    return "alloca";
  case Opcode::Call:
    return "call";
  case Opcode::Intrinsic:
    return "intrinsic";
  case Opcode::Atomic:
    return "atomic";
  case Opcode::Phi:
    return "phi";
  case Opcode::Br:
    return "br";
  case Opcode::Jmp:
    return "jmp";
  case Opcode::Ret:
    return "ret";
  case Opcode::Trap:
    return "trap";
  case Opcode::GridTeams:
    return "grid.teams";
  case Opcode::GridThreads:
    return "grid.threads";
  case Opcode::TgtTarget:
    return "tgt.target";
  }
  return "?";
}

constexpr Opcode kBinaryOps[] = {Opcode::Add, Opcode::Sub, Opcode::Mul,
                                 Opcode::Div, Opcode::Rem, Opcode::And,
                                 Opcode::Or,  Opcode::Xor, Opcode::Shl,
                                 Opcode::Shr};

bool is_binary(Opcode op) {
  return std::find(std::begin(kBinaryOps), std::end(kBinaryOps), op) !=
         std::end(kBinaryOps);
}

std::string quote(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\', out += c;
    else if (c == '\n')
      out += "\\n";
    else
      out += c;
  }
  return out + "\"";
}

std::string value_text(const Value &v, Ty t) {
  switch (v.kind) {
  case Value::Kind::Temp:
    return "%" + std::to_string(v.num);
  case Value::Kind::Imm:
    if (t == Ty::I32)
      return std::to_string(static_cast<int32_t>(v.num));
    if (t == Ty::I64)
      return std::to_string(static_cast<int64_t>(v.num));
    return std::to_string(v.num);
  case Value::Kind::Global:
    return "@" + v.name;
  case Value::Kind::Undef:
    return "undef";
  case Value::Kind::Str:
    return quote(v.name);
  }
  return "?";
}

std::string typed_args(const Instr &in) {
  std::string out = "(";
  for (size_t i = 0; i < in.args.size(); ++i) {
    if (i)
      out += ", ";
    Ty t = i < in.arg_types.size() ? in.arg_types[i] : Ty::Void;
    if (in.args[i].kind == Value::Kind::Str)
      out += "str " + quote(in.args[i].name);
    else
      out += std::string(ty_name(t)) + " " + value_text(in.args[i], t);
  }
  return out + ")";
}

} // namespace

static std::string print_instr(const Instr &in) {
  std::ostringstream os;
  if (in.result >= 0)
    os << "%" << in.result << " = ";
  auto v = [&](size_t i, Ty t) { return value_text(in.args[i], t); };
  if (is_binary(in.op)) {
    os << opcode_name(in.op) << " " << ty_name(in.type) << " " << v(0, in.type)
       << ", " << v(1, in.type);
    return os.str();
  }
  switch (in.op) {
  case Opcode::ICmp:
    os << "icmp " << in.name << " " << ty_name(in.type) << " " << v(0, in.type)
       << ", " << v(1, in.type);
    break;
  case Opcode::Conv:
    os << "conv " << ty_name(in.from) << " " << v(0, in.from) << " to "
       << ty_name(in.type);
    break;
  case Opcode::Load:
    os << "load " << ty_name(in.type) << " " << v(0, Ty::Ptr);
    break;
  case Opcode::Store:
    os << "store " << ty_name(in.type) << " " << v(0, in.type) << ", "
       << v(1, Ty::Ptr);
    break;
  case Opcode::Gep:
    os << "gep " << ty_name(in.type) << " " << v(0, Ty::Ptr) << ", "
       << v(1, Ty::I64);
    break;
  case Opcode::Alloca:
    os << "alloca " << ty_name(in.type) << " x " << in.count;
    break;
  case Opcode::Call:
    os << "call " << ty_name(in.type) << " @" << in.name << typed_args(in);
    break;
  case Opcode::Intrinsic:
    os << "intrinsic " << ty_name(in.type) << " " << in.name << typed_args(in);
    break;
  case Opcode::Atomic:
    os << "atomic." << in.name << ".seq_cst " << ty_name(in.type) << " "
       << v(0, Ty::Ptr);
    for (size_t i = 1; i < in.args.size(); ++i)
      os << ", " << v(i, in.type);
    break;
  case Opcode::Phi:
    os << "phi " << ty_name(in.type);
    for (size_t i = 0; i < in.args.size(); ++i)
      os << (i ? ", [" : " [") << v(i, in.type) << ", " << in.labels[i] << "]";
    break;
  case Opcode::Br:
    os << "br " << v(0, Ty::I32) << ", " << in.labels[0] << ", "
       << in.labels[1];
    break;
  case Opcode::Jmp:
    os << "jmp " << in.labels[0];
    break;
  case Opcode::Ret:
    os << "ret";
    if (!in.args.empty())
      os << " " << ty_name(in.type) << " " << v(0, in.type);
    break;
  case Opcode::Trap:
    os << "trap " << in.name;
    break;
  case Opcode::GridTeams:
  case Opcode::GridThreads:
    os << opcode_name(in.op) << " " << in.count;
    break;
  case Opcode::TgtTarget:
    os << "tgt.target " << in.count << ", " << v(0, Ty::U32) << ", "
       << v(1, Ty::U32) << " (";
    for (size_t i = 0; i < in.kernel_args.size(); ++i) {
      const KernelArg &ka = in.kernel_args[i];
      if (i)
        os << ", ";
      if (ka.buffer)
        os << "buf " << ty_name(ka.type) << " x " << ka.count << " "
           << v(i + 2, Ty::Ptr);
      else
        os << "val " << ty_name(ka.type) << " " << v(i + 2, ka.type);
    }
    os << ")";
    break;
  default:
    break;
  }
  return os.str();
}

static std::string global_line(const Global &g) {
  std::ostringstream os;
  os << "global @" << g.name << " " << ty_name(g.type) << " x " << g.count
     << (g.space == GlobalSpace::shared ? " shared" : " global");
  switch (g.init) {
  case GlobalInit::zero:
    os << " zero";
    break;
  case GlobalInit::none:
    os << " none";
    break;
  case GlobalInit::explicit_values:
    os << " init";
    for (uint64_t v : g.values)
      os << " " << value_text(Value::imm(v), g.type);
    break;
  }
  return os.str();
}

static std::string function_header(const Function &f) {
  std::ostringstream os;
  os << (f.kernel ? "kernel @" : "func @") << f.name << "(";
  for (size_t i = 0; i < f.params.size(); ++i)
    os << (i ? ", " : "") << ty_name(f.params[i]) << " %" << i;
  os << ") -> " << ty_name(f.ret) << " {";
  return os.str();
}

static void print_body(std::ostream &os, const Function &f) {
  os << function_header(f) << "\n";
  for (const Block &b : f.blocks) {
    os << b.label << ":\n";
    for (const Instr &in : b.instrs)
      os << "  " << print_instr(in) << "\n";
  }
  os << "}\n";
}

std::string print_module(const Module &m) {
  std::ostringstream os;
  os << "; forge ir module\n";
  os << "target " << selectors::arch_name(m.target) << "\n";
  for (const auto &[base, symbol] : m.aliases)
    os << "alias @" << base << " = @" << symbol << "\n";
  for (const Global &g : m.globals)
    os << global_line(g) << "\n";
  for (const Function &f : m.functions) {
    os << "\n";
    if (!f.comment.empty())
      os << "; " << f.comment << "\n";
    print_body(os, f);
  }
  return os.str();
}

//===----------------------------------------------------------------------===//
// Parsing
//===----------------------------------------------------------------------===//

namespace {

struct Tok {
  enum Kind { Word, Temp, Sym, Int, Str, Punct, End } kind = End;
  std::string text;
  uint64_t num = 0;
  bool negative = false;
};

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
         c == '.';
}

class LineLexer {
public:
  explicit LineLexer(std::string_view line) : s_(line) {}

  bool tokenize(std::vector<Tok> &out, std::string &error) {
    while (true) {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      if (pos_ >= s_.size() || s_[pos_] == ';')
        break;
      char c = s_[pos_];
      Tok t;
      if (c == '%') {
        ++pos_;
        if (!read_int(t)) {
          error = "expected temp number after '%'";
          return false;
        }
        t.kind = Tok::Temp;
      } else if (c == '@') {
        ++pos_;
        t.kind = Tok::Sym;
        t.text = read_word();
        if (t.text.empty()) {
          error = "expected symbol name after '@'";
          return false;
        }
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
        if (c == '-' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '>') {
          t.kind = Tok::Punct;
          t.text = "->";
          pos_ += 2;
        } else {
          if (c == '-') {
            t.negative = true;
            ++pos_;
          }
          if (!read_int(t)) {
            error = "malformed integer";
            return false;
          }
          t.kind = Tok::Int;
        }
      } else if (c == '"') {
        ++pos_;
        t.kind = Tok::Str;
        bool closed = false;
        while (pos_ < s_.size()) {
          char d = s_[pos_++];
          if (d == '"') {
            closed = true;
            break;
          }
          if (d == '\\' && pos_ < s_.size()) {
            char e = s_[pos_++];
            t.text += e == 'n' ? '\n' : e;
          } else {
            t.text += d;
          }
        }
        if (!closed) {
          error = "unterminated string";
          return false;
        }
      } else if (word_char(c)) {
        t.kind = Tok::Word;
        t.text = read_word();
      } else if (std::string_view("(),[]={}:").find(c) != std::string_view::npos) {
        t.kind = Tok::Punct;
        t.text = std::string(1, c);
        ++pos_;
      } else {
        error = std::string("unexpected character '") + c + "'";
        return false;
      }
      out.push_back(std::move(t));
    }
    out.push_back(Tok{});
    return true;
  }

private:
  std::string read_word() {
    size_t start = pos_;
    while (pos_ < s_.size() && word_char(s_[pos_]))
      ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  bool read_int(Tok &t) {
    size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    if (start == pos_)
      return false;
    auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, t.num);
    return ec == std::errc();
  }

  std::string_view s_;
  size_t pos_ = 0;
};

class Cursor {
public:
  Cursor(std::vector<Tok> toks, unsigned line)
      : toks_(std::move(toks)), line_(line) {}

  const Tok &peek() const { return toks_[i_]; }
  const Tok &peek_at(size_t k) const {
    return toks_[std::min(i_ + k, toks_.size() - 1)];
  }
  Tok next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  bool at_end() const { return peek().kind == Tok::End; }
  bool accept(std::string_view punct_or_word) {
    const Tok &t = peek();
    if ((t.kind == Tok::Punct || t.kind == Tok::Word) &&
        t.text == punct_or_word) {
      ++i_;
      return true;
    }
    return false;
  }

  void expect(std::string_view text) {
    if (!accept(text))
      fail("expected '" + std::string(text) + "'");
  }

  std::string word() {
    if (peek().kind != Tok::Word)
      fail("expected identifier");
    return next().text;
  }

  std::string sym() {
    if (peek().kind != Tok::Sym)
      fail("expected '@' symbol");
    return next().text;
  }

  int64_t temp() {
    if (peek().kind != Tok::Temp)
      fail("expected temp");
    return static_cast<int64_t>(next().num);
  }

  uint64_t integer() {
    if (peek().kind != Tok::Int || peek().negative)
      fail("expected non-negative integer");
    return next().num;
  }

  Ty ty() {
    std::string w = word();
    std::optional<Ty> t = parse_ty(w);
    if (!t)
      fail("unknown type '" + w + "'");
    return *t;
  }

  Value value(Ty t) {
    Tok tok = next();
    switch (tok.kind) {
    case Tok::Temp:
      return Value::temp(tok.num);
    case Tok::Sym:
      return Value::global(tok.text);
    case Tok::Str:
      return Value::str(tok.text);
    case Tok::Int: {
      uint64_t bits = tok.negative ? ~tok.num + 1 : tok.num;
      if (ty_bytes(t) == 4)
        bits &= 0xFFFFFFFFull;
      return Value::imm(bits);
    }
    case Tok::Word:
      if (tok.text == "undef")
        return Value::undef();
      [[fallthrough]];
    default:
      fail("expected operand");
    }
  }

  void done() {
    if (!at_end())
      fail("unexpected trailing tokens");
  }

  [[noreturn]] void fail(const std::string &msg) const {
    throw Diagnostic{DiagKind::Parse, SourceLoc{line_, 0}, msg};
  }

private:
  std::vector<Tok> toks_;
  size_t i_ = 0;
  unsigned line_;
};

void parse_typed_args(Cursor &c, Instr &in) {
  c.expect("(");
  if (!c.accept(")")) {
    do {
      std::string w = c.word();
      if (w == "str") {
        in.arg_types.push_back(Ty::Ptr);
        if (c.peek().kind != Tok::Str)
          c.fail("expected string literal");
        in.args.push_back(Value::str(c.next().text));
        continue;
      }
      std::optional<Ty> t = parse_ty(w);
      if (!t)
        c.fail("unknown type '" + w + "'");
      in.arg_types.push_back(*t);
      in.args.push_back(c.value(*t));
    } while (c.accept(","));
    c.expect(")");
  }
}

Instr parse_instr(Cursor &c) {
  Instr in;
  if (c.peek().kind == Tok::Temp) {
    in.result = c.temp();
    c.expect("=");
  }
  std::string op = c.word();
  for (Opcode b : kBinaryOps) {
    if (op == opcode_name(b)) {
      in.op = b;
      in.type = c.ty();
      in.args.push_back(c.value(in.type));
      c.expect(",");
      in.args.push_back(c.value(in.type));
      return in;
    }
  }
  if (op == "icmp") {
    in.op = Opcode::ICmp;
    in.name = c.word();
    static const char *preds[] = {"eq", "ne", "lt", "le", "gt", "ge"};
    if (std::find(std::begin(preds), std::end(preds), in.name) ==
        std::end(preds))
      c.fail("unknown icmp predicate '" + in.name + "'");
    in.type = c.ty();
    in.args.push_back(c.value(in.type));
    c.expect(",");
    in.args.push_back(c.value(in.type));
  } else if (op == "conv") {
    in.op = Opcode::Conv;
    in.from = c.ty();
    in.args.push_back(c.value(in.from));
    c.expect("to");
    in.type = c.ty();
  } else if (op == "load") {
    in.op = Opcode::Load;
    in.type = c.ty();
    in.args.push_back(c.value(Ty::Ptr));
  } else if (op == "store") {
    in.op = Opcode::Store;
    in.type = c.ty();
    in.args.push_back(c.value(in.type));
    c.expect(",");
    in.args.push_back(c.value(Ty::Ptr));
  } else if (op == "gep") {
    in.op = Opcode::Gep;
    in.type = c.ty();
    in.args.push_back(c.value(Ty::Ptr));
    c.expect(",");
    in.args.push_back(c.value(Ty::I64));
  } else if (op == "alloca") {
    in.op = Opcode::Alloca;
    in.type = c.ty();
    c.expect("x");
    in.count = c.integer();
  } else if (op == "call") {
    in.op = Opcode::Call;
    in.type = c.ty();
    in.name = c.sym();
    parse_typed_args(c, in);
  } else if (op == "intrinsic") {
    in.op = Opcode::Intrinsic;
    in.type = c.ty();
    in.name = c.word();
    parse_typed_args(c, in);
  } else if (op.rfind("atomic.", 0) == 0) {
    in.op = Opcode::Atomic;
    std::string rest = op.substr(7);
    size_t dot = rest.find('.');
    if (dot == std::string::npos || rest.substr(dot + 1) != "seq_cst")
      c.fail("atomic instructions must be seq_cst");
    in.name = rest.substr(0, dot);
    static const char *kinds[] = {"add", "max", "min", "xchg", "cas"};
    if (std::find(std::begin(kinds), std::end(kinds), in.name) ==
        std::end(kinds))
      c.fail("unknown atomic kind '" + in.name + "'");
    in.type = c.ty();
    in.args.push_back(c.value(Ty::Ptr));
    while (c.accept(","))
      in.args.push_back(c.value(in.type));
    if (in.args.size() != (in.name == "cas" ? 3u : 2u))
      c.fail("wrong operand count for atomic." + in.name);
  } else if (op == "phi") {
    in.op = Opcode::Phi;
    in.type = c.ty();
    do {
      c.expect("[");
      in.args.push_back(c.value(in.type));
      c.expect(",");
      in.labels.push_back(c.word());
      c.expect("]");
    } while (c.accept(","));
  } else if (op == "br") {
    in.op = Opcode::Br;
    in.args.push_back(c.value(Ty::I32));
    c.expect(",");
    in.labels.push_back(c.word());
    c.expect(",");
    in.labels.push_back(c.word());
  } else if (op == "jmp") {
    in.op = Opcode::Jmp;
    in.labels.push_back(c.word());
  } else if (op == "ret") {
    in.op = Opcode::Ret;
    if (!c.at_end()) {
      in.type = c.ty();
      in.args.push_back(c.value(in.type));
    }
  } else if (op == "trap") {
    in.op = Opcode::Trap;
    in.name = c.word();
  } else if (op == "grid.teams" || op == "grid.threads") {
    in.op = op == "grid.teams" ? Opcode::GridTeams : Opcode::GridThreads;
    in.type = Ty::U32;
    in.count = c.integer();
  } else if (op == "tgt.target") {
    in.op = Opcode::TgtTarget;
    in.type = Ty::I32;
    in.count = c.integer();
    c.expect(",");
    in.args.push_back(c.value(Ty::U32));
    c.expect(",");
    in.args.push_back(c.value(Ty::U32));
    c.expect("(");
    if (!c.accept(")")) {
      do {
        KernelArg ka;
        std::string kind = c.word();
        if (kind == "buf") {
          ka.buffer = true;
          ka.type = c.ty();
          c.expect("x");
          ka.count = c.integer();
          in.args.push_back(c.value(Ty::Ptr));
        } else if (kind == "val") {
          ka.type = c.ty();
          in.args.push_back(c.value(ka.type));
        } else {
          c.fail("expected 'buf' or 'val'");
        }
        in.kernel_args.push_back(ka);
      } while (c.accept(","));
      c.expect(")");
    }
  } else {
    c.fail("unknown instruction '" + op + "'");
  }
  return in;
}

} // namespace

Expected<Module> parse_module(std::string_view text) {
  Module m;
  bool saw_target = false;
  Function *fn = nullptr;
  unsigned line_no = 0;
  std::string comment;
  try {
    size_t start = 0;
    while (start <= text.size()) {
      size_t end = text.find('\n', start);
      if (end == std::string_view::npos)
        end = text.size();
      std::string_view line = text.substr(start, end - start);
      start = end + 1;
      ++line_no;
      if (!fn) {
        size_t first = line.find_first_not_of(" \t");
        if (first != std::string_view::npos && line[first] == ';') {
          std::string_view body = line.substr(first + 1);
          if (!body.empty() && body.front() == ' ')
            body.remove_prefix(1);
          if (body != "forge ir module")
            comment = std::string(body);
          continue;
        }
      }
      std::vector<Tok> toks;
      std::string err;
      if (!LineLexer(line).tokenize(toks, err))
        throw Diagnostic{DiagKind::Parse, SourceLoc{line_no, 0}, err};
      Cursor c(std::move(toks), line_no);
      if (c.at_end()) {
        if (end == text.size())
          break;
        continue;
      }
      if (fn) {
        if (c.accept("}")) {
          c.done();
          if (fn->blocks.empty())
            c.fail("function '" + fn->name + "' has no blocks");
          fn = nullptr;
          continue;
        }
        if (c.peek().kind == Tok::Word && c.peek_at(1).kind == Tok::Punct &&
            c.peek_at(1).text == ":") {
          std::string label = c.word();
          c.expect(":");
          c.done();
          fn->blocks.push_back(Block{label, {}});
          continue;
        }
        if (fn->blocks.empty())
          c.fail("instruction outside of a block");
        fn->blocks.back().instrs.push_back(parse_instr(c));
        c.done();
        continue;
      }
      std::string kw = c.word();
      if (kw == "target") {
        std::string a = c.word();
        std::optional<selectors::Arch> arch = selectors::parse_arch(a);
        if (!arch)
          c.fail("unknown target '" + a + "'");
        m.target = *arch;
        saw_target = true;
      } else if (kw == "alias") {
        std::string base = c.sym();
        c.expect("=");
        m.aliases[base] = c.sym();
      } else if (kw == "global") {
        Global g;
        g.name = c.sym();
        g.type = c.ty();
        c.expect("x");
        g.count = c.integer();
        std::string space = c.word();
        if (space != "global" && space != "shared")
          c.fail("expected 'global' or 'shared'");
        g.space = space == "shared" ? GlobalSpace::shared : GlobalSpace::global;
        std::string init = c.word();
        if (init == "zero") {
          g.init = GlobalInit::zero;
        } else if (init == "none") {
          g.init = GlobalInit::none;
        } else if (init == "init") {
          g.init = GlobalInit::explicit_values;
          while (!c.at_end())
            g.values.push_back(c.value(g.type).num);
          if (g.values.size() != g.count)
            c.fail("initializer count does not match global size");
        } else {
          c.fail("expected 'zero', 'none' or 'init'");
        }
        if (m.find_global(g.name))
          c.fail("duplicate global '@" + g.name + "'");
        m.globals.push_back(std::move(g));
      } else if (kw == "func" || kw == "kernel") {
        Function f;
        f.comment = std::move(comment);
        comment.clear();
        f.kernel = kw == "kernel";
        f.name = c.sym();
        c.expect("(");
        if (!c.accept(")")) {
          do {
            f.params.push_back(c.ty());
            if (c.temp() != static_cast<int64_t>(f.params.size() - 1))
              c.fail("parameters must be numbered %0, %1, ...");
          } while (c.accept(","));
          c.expect(")");
        }
        c.expect("->");
        f.ret = c.ty();
        c.expect("{");
        if (m.find_function(f.name))
          c.fail("duplicate function '@" + f.name + "'");
        m.functions.push_back(std::move(f));
        fn = &m.functions.back();
      } else {
        c.fail("unexpected '" + kw + "' at module level");
      }
      c.done();
    }
    if (fn)
      throw Diagnostic{DiagKind::Parse, SourceLoc{line_no, 0},
                       "unterminated function '" + fn->name + "'"};
    if (!saw_target)
      throw Diagnostic{DiagKind::Parse, SourceLoc{1, 0},
                       "missing 'target' line"};
  } catch (Diagnostic &d) {
    return d;
  }
  return m;
}

//===----------------------------------------------------------------------===//
// Normalization and diffing
//===----------------------------------------------------------------------===//

std::string normalize_ir(const Module &m) {
  Module n;
  n.target = m.target;
  n.globals = m.globals;
  std::sort(n.globals.begin(), n.globals.end(),
            [](const Global &a, const Global &b) { return a.name < b.name; });
  for (const Function &src : m.functions) {
    Function f = src;
    f.comment.clear();
    f.name = selectors::demangle_variant(f.name);
    std::map<uint64_t, uint64_t> temps;
    std::map<std::string, std::string> labels;
    uint64_t next_temp = f.params.size();
    for (uint64_t i = 0; i < f.params.size(); ++i)
      temps[i] = i;
    for (size_t b = 0; b < f.blocks.size(); ++b)
      labels[f.blocks[b].label] = b == 0 ? "entry" : "L" + std::to_string(b);
    for (const Block &b : f.blocks)
      for (const Instr &in : b.instrs)
        if (in.result >= 0 && !temps.count(in.result))
          temps[in.result] = next_temp++;
    for (Block &b : f.blocks) {
      b.label = labels[b.label];
      for (Instr &in : b.instrs) {
        if (in.result >= 0)
          in.result = static_cast<int64_t>(temps[in.result]);
        if (in.op == Opcode::Call)
          in.name = selectors::demangle_variant(in.name);
        for (Value &v : in.args) {
          if (v.kind == Value::Kind::Temp) {
            auto it = temps.find(v.num);
            // Uses of undefined temps keep a stable, distinct spelling.
            v.num = it != temps.end() ? it->second : next_temp + v.num;
          }
        }
        for (std::string &l : in.labels) {
          auto it = labels.find(l);
          if (it != labels.end())
            l = it->second;
        }
      }
    }
    n.functions.push_back(std::move(f));
  }
  std::stable_sort(
      n.functions.begin(), n.functions.end(),
      [](const Function &a, const Function &b) { return a.name < b.name; });

  std::ostringstream os;
  os << "target " << selectors::arch_name(n.target) << "\n";
  for (const Global &g : n.globals)
    os << global_line(g) << "\n";
  for (const Function &f : n.functions)
    print_body(os, f);
  return os.str();
}

Expected<DiffReport> diff_ir(const Module &a, const Module &b) {
  if (a.target != b.target)
    return make_diag(DiagKind::Semantic,
                     "cannot compare IR for different targets (" +
                         std::string(selectors::arch_name(a.target)) + " vs " +
                         std::string(selectors::arch_name(b.target)) + ")");
  auto split = [](const std::string &s) {
    std::vector<std::string> lines;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);)
      lines.push_back(l);
    return lines;
  };
  std::vector<std::string> la = split(normalize_ir(a));
  std::vector<std::string> lb = split(normalize_ir(b));
  DiffReport report;
  std::string where = "module";
  size_t count = std::max(la.size(), lb.size());
  for (size_t i = 0; i < count; ++i) {
    const std::string &l = i < la.size() ? la[i] : std::string();
    const std::string &r = i < lb.size() ? lb[i] : std::string();
    const std::string &head = !l.empty() ? l : r;
    if (head.rfind("func @", 0) == 0 || head.rfind("kernel @", 0) == 0)
      where = head.substr(0, head.find('('));
    if (l != r) {
      report.semantically_equal = false;
      report.differences.push_back(
          {where + " (line " + std::to_string(i + 1) + ")", l, r});
    }
  }
  return report;
}

} // namespace forge::ir
