//===- codegen/Link.cpp - Device runtime linking -------------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Linking copies runtime functions into the user module on demand, the way a
// bitcode library is linked: only what is transitively referenced survives.
//
//===----------------------------------------------------------------------===//

#include "forge/codegen/CodeGen.h"

#include "forge/devicert/DeviceRuntime.h"

#include <deque>
#include <set>

namespace forge::codegen {

using ir::Instr;
using ir::Opcode;
using ir::Value;

namespace {

Diagnostic link_error(std::string message) {
  return make_diag(DiagKind::Link, std::move(message));
}

} // namespace

Expected<ir::Module> link_runtime(const ir::Module &user,
                                  const ir::Module &runtime) {
  if (user.target != runtime.target)
    return link_error("runtime target does not match module target");

  std::map<std::string, const ir::Function *> rt_functions;
  for (const ir::Function &f : runtime.functions)
    rt_functions[f.name] = &f;
  std::map<std::string, const ir::Global *> rt_globals;
  for (const ir::Global &g : runtime.globals)
    rt_globals[g.name] = &g;

  DiagnosticList diags;
  for (const ir::Function &f : user.functions)
    if (rt_functions.count(f.name) || runtime.aliases.count(f.name))
      diags.push_back(link_error("symbol collision: '" + f.name +
                                 "' is defined by the module and by the "
                                 "device runtime"));
  for (const ir::Global &g : user.globals)
    if (rt_globals.count(g.name))
      diags.push_back(link_error("symbol collision: global '" + g.name +
                                 "' is defined by the module and by the "
                                 "device runtime"));
  if (!diags.empty())
    return diags;

  ir::Module out = user;
  std::set<std::string> defined;
  for (const ir::Function &f : out.functions)
    defined.insert(f.name);
  std::set<std::string> globals;
  for (const ir::Global &g : out.globals)
    globals.insert(g.name);

  std::deque<size_t> work;
  for (size_t i = 0; i < out.functions.size(); ++i)
    work.push_back(i);
  std::set<std::string> missing;
  while (!work.empty()) {
    size_t index = work.front();
    work.pop_front();
    // Collect first: appending to out.functions invalidates references.
    std::vector<std::string> callees;
    std::vector<std::string> used_globals;
    for (ir::Block &b : out.functions[index].blocks) {
      for (Instr &in : b.instrs) {
        if (in.op == Opcode::Call) {
          auto alias = runtime.aliases.find(in.name);
          if (alias != runtime.aliases.end() && !defined.count(in.name))
            in.name = alias->second;
          callees.push_back(in.name);
        }
        for (const Value &v : in.args)
          if (v.kind == Value::Kind::Global)
            used_globals.push_back(v.name);
      }
    }
    for (const std::string &name : used_globals) {
      if (globals.count(name))
        continue;
      auto it = rt_globals.find(name);
      if (it == rt_globals.end()) {
        if (missing.insert("@" + name).second)
          diags.push_back(link_error("undefined global '" + name + "'"));
        continue;
      }
      out.globals.push_back(*it->second);
      globals.insert(name);
    }
    for (const std::string &name : callees) {
      if (defined.count(name))
        continue;
      auto it = rt_functions.find(name);
      if (it == rt_functions.end()) {
        if (missing.insert(name).second)
          diags.push_back(link_error("undefined function '" + name + "'"));
        continue;
      }
      out.functions.push_back(*it->second);
      defined.insert(name);
      work.push_back(out.functions.size() - 1);
    }
  }
  if (!diags.empty())
    return diags;
  for (const auto &[base, symbol] : runtime.aliases)
    if (defined.count(symbol))
      out.aliases[base] = symbol;
  return out;
}

Expected<ir::Module> link_runtime(const ir::Module &user,
                                  const selectors::TargetDesc &target) {
  Expected<ir::Module> runtime = devicert::runtime_ir(target);
  if (!runtime) {
    // Some runtime function does not compile for this target; retry with
    // just the functions the module references.
    std::set<std::string> defined, roots;
    for (const ir::Function &f : user.functions)
      defined.insert(f.name);
    for (const ir::Function &f : user.functions)
      for (const ir::Block &b : f.blocks)
        for (const Instr &in : b.instrs)
          if (in.op == Opcode::Call && !defined.count(in.name))
            roots.insert(in.name);
    runtime = devicert::runtime_ir(target, roots);
    if (!runtime)
      return runtime;
  }
  return link_runtime(user, *runtime);
}

} // namespace forge::codegen
