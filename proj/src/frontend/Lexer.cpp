//===- frontend/Lexer.cpp - Tokenizer for .mc sources --------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "Lexer.h"

#include <array>
#include <cctype>

namespace forge::frontend {

namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool ident_cont(char c) {
  return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) ||
         c == '.';
}

constexpr std::array<std::string_view, 10> kThreeAndTwoCharPuncts = {
    "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "<<", ">>"};
constexpr std::array<std::string_view, 10> kTwoCharPuncts = {
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "++", "--"};

class Lexer {
public:
  Lexer(std::string_view text, SourceLoc origin, DiagnosticList &diags)
      : text_(text), line_(origin.line), col_(origin.column), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> toks;
    bool line_start = true;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        advance();
        line_start = true;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      if (c == '/' && peek(1) == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n')
          advance();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        SourceLoc start = loc();
        advance(2);
        while (pos_ < text_.size() && !(text_[pos_] == '*' && peek(1) == '/'))
          advance();
        if (pos_ >= text_.size()) {
          diags_.push_back(
              make_diag(DiagKind::Parse, "unterminated comment", start));
          break;
        }
        advance(2);
        continue;
      }
      if (c == '#') {
        SourceLoc start = loc();
        if (!line_start) {
          diags_.push_back(make_diag(DiagKind::Parse, "stray '#'", start));
          advance();
          continue;
        }
        toks.push_back(lex_directive(start));
        line_start = true;
        continue;
      }
      line_start = false;
      if (ident_start(c)) {
        toks.push_back(lex_ident());
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        toks.push_back(lex_number());
        continue;
      }
      if (c == '"') {
        toks.push_back(lex_string());
        continue;
      }
      toks.push_back(lex_punct());
    }
    Token eof;
    eof.kind = TokKind::Eof;
    eof.loc = loc();
    toks.push_back(eof);
    return toks;
  }

private:
  char peek(size_t ahead) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }
  SourceLoc loc() const { return SourceLoc{line_, col_}; }
  void advance(size_t n = 1) {
    for (size_t i = 0; i < n && pos_ < text_.size(); ++i) {
      if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  Token lex_directive(SourceLoc start) {
    std::string line;
    // Join continuation lines; drop the trailing newline.
    while (pos_ < text_.size() && text_[pos_] != '\n') {
      if (text_[pos_] == '\\' &&
          (peek(1) == '\n' || (peek(1) == '\r' && peek(2) == '\n'))) {
        advance(peek(1) == '\r' ? 3 : 2);
        line.push_back(' ');
        continue;
      }
      line.push_back(text_[pos_]);
      advance();
    }
    Token tok;
    tok.kind = TokKind::Pragma;
    tok.loc = start;
    std::string_view body(line);
    body.remove_prefix(1); // '#'
    while (!body.empty() && std::isspace(static_cast<unsigned char>(body[0])))
      body.remove_prefix(1);
    if (body.substr(0, 6) != "pragma") {
      diags_.push_back(make_diag(DiagKind::Parse,
                                 "preprocessor directives are not supported",
                                 start));
      tok.text.clear();
      return tok;
    }
    body.remove_prefix(6);
    tok.text = std::string(body);
    return tok;
  }

  Token lex_ident() {
    Token tok;
    tok.kind = TokKind::Ident;
    tok.loc = loc();
    while (pos_ < text_.size() && ident_cont(text_[pos_])) {
      tok.text.push_back(text_[pos_]);
      advance();
    }
    return tok;
  }

  Token lex_number() {
    Token tok;
    tok.kind = TokKind::Int;
    tok.loc = loc();
    unsigned base = 10;
    if (text_[pos_] == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
      base = 16;
      tok.text += text_.substr(pos_, 2);
      advance(2);
    }
    uint64_t value = 0;
    bool any = false;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      unsigned digit;
      if (std::isdigit(static_cast<unsigned char>(c)))
        digit = static_cast<unsigned>(c - '0');
      else if (base == 16 && std::isxdigit(static_cast<unsigned char>(c)))
        digit = static_cast<unsigned>(std::tolower(c) - 'a' + 10);
      else
        break;
      if (value > (UINT64_MAX - digit) / base)
        tok.overflow = true;
      value = value * base + digit;
      any = true;
      tok.text.push_back(c);
      advance();
    }
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == 'u' || c == 'U')
        tok.unsigned_suffix = true;
      else if (c == 'l' || c == 'L')
        tok.long_suffix = true;
      else
        break;
      tok.text.push_back(c);
      advance();
    }
    if (!any || (pos_ < text_.size() && ident_start(text_[pos_])))
      diags_.push_back(make_diag(DiagKind::Parse, "malformed number", tok.loc));
    if (tok.overflow)
      diags_.push_back(
          make_diag(DiagKind::Parse, "integer literal too large", tok.loc));
    tok.value = value;
    return tok;
  }

  Token lex_string() {
    Token tok;
    tok.kind = TokKind::String;
    tok.loc = loc();
    advance();
    while (pos_ < text_.size() && text_[pos_] != '"' && text_[pos_] != '\n') {
      char c = text_[pos_];
      if (c == '\\') {
        char n = peek(1);
        switch (n) {
        case 'n':
          tok.text.push_back('\n');
          break;
        case 't':
          tok.text.push_back('\t');
          break;
        case '\\':
        case '"':
          tok.text.push_back(n);
          break;
        default:
          diags_.push_back(
              make_diag(DiagKind::Parse, "unknown escape sequence", loc()));
          tok.text.push_back(n);
        }
        advance(2);
        continue;
      }
      tok.text.push_back(c);
      advance();
    }
    if (pos_ >= text_.size() || text_[pos_] != '"') {
      diags_.push_back(
          make_diag(DiagKind::Parse, "unterminated string literal", tok.loc));
      return tok;
    }
    advance();
    return tok;
  }

  Token lex_punct() {
    Token tok;
    tok.kind = TokKind::Punct;
    tok.loc = loc();
    std::string_view rest = text_.substr(pos_);
    for (std::string_view p : kThreeAndTwoCharPuncts) {
      if (rest.substr(0, p.size()) == p) {
        tok.text = std::string(p);
        advance(p.size());
        return tok;
      }
    }
    for (std::string_view p : kTwoCharPuncts) {
      if (rest.substr(0, p.size()) == p) {
        tok.text = std::string(p);
        advance(p.size());
        return tok;
      }
    }
    static constexpr std::string_view kSingles = "(){}[];,*+-/%&|^~!<>=?:";
    if (kSingles.find(rest[0]) == std::string_view::npos)
      diags_.push_back(make_diag(DiagKind::Parse,
                                 std::string("unexpected character '") +
                                     rest[0] + "'",
                                 tok.loc));
    tok.text = std::string(1, rest[0]);
    advance();
    return tok;
  }

  std::string_view text_;
  size_t pos_ = 0;
  unsigned line_;
  unsigned col_;
  DiagnosticList &diags_;
};

} // namespace

std::vector<Token> tokenize(std::string_view text, SourceLoc origin,
                            DiagnosticList &diags) {
  return Lexer(text, origin, diags).run();
}

} // namespace forge::frontend
