//===- codegen/HostGen.cpp - Host program emission -----------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "Emitter.h"

#include "forge/devicert/DeviceRuntime.h"

#include "json.hpp"

#include <algorithm>

namespace forge::codegen {

using namespace frontend;
using nlohmann::json;

Expected<HostProgram> emit_host_program(const SourceModule &module) {
  const selectors::TargetDesc &host = selectors::target_desc(selectors::Arch::host);
  Expected<lowering::SpecializedModule> spec = lowering::specialize(module, host);
  if (!spec)
    return spec.diags();

  ModuleEmitter m(*spec, host, devicert::runtime_signatures(), true);
  m.emit_globals(false);
  for (const Decl &d : spec->module.declarations) {
    auto *f = std::get_if<FunctionDecl>(&d);
    if (!f || f->variant_of || !f->is_definition())
      continue;
    const ModuleEmitter::FunctionInfo *fi = m.function(f->name);
    if (fi && !fi->device)
      m.request(f->name);
  }
  for (const TargetRegion &region : spec->module.target_regions) {
    m.emit_kernel(region);
    m.emit_fallback(region);
  }
  m.drain();
  if (!m.diags().empty())
    return m.diags();

  Expected<ir::Module> linked = link_runtime(m.module(), host);
  if (!linked)
    return linked.diags();

  HostProgram program;
  program.module = std::move(*linked);
  for (const TargetRegion &region : spec->module.target_regions) {
    TargetCall call;
    call.kernel_id = region.id;
    call.kernel = kernel_name(region.id);
    call.fallback = fallback_name(region.id);
    call.num_teams = region.num_teams.value_or(1);
    call.thread_limit = region.thread_limit.value_or(1);
    for (const CapturedArg &a : region.captured_args) {
      ArgDescriptor desc;
      desc.name = a.name;
      desc.buffer = a.kind == CaptureKind::Buffer;
      desc.type = lower_type(a.type);
      if (desc.buffer) {
        desc.element_count = a.element_count;
        desc.size_bytes = a.element_count * ir::ty_bytes(desc.type);
        HostBuffer buffer{region.enclosing_function, a.name, desc.size_bytes};
        if (std::find(program.buffers.begin(), program.buffers.end(),
                      buffer) == program.buffers.end())
          program.buffers.push_back(buffer);
      }
      call.args.push_back(std::move(desc));
    }
    program.target_calls.push_back(std::move(call));
  }
  return program;
}

std::string serialize_host_program(const HostProgram &program) {
  json calls = json::array();
  for (const TargetCall &c : program.target_calls) {
    json args = json::array();
    for (const ArgDescriptor &a : c.args)
      args.push_back({{"name", a.name},
                      {"kind", a.buffer ? "buffer" : "scalar"},
                      {"type", std::string(ir::ty_name(a.type))},
                      {"count", a.element_count},
                      {"size", a.size_bytes}});
    calls.push_back({{"id", c.kernel_id},
                     {"kernel", c.kernel},
                     {"fallback", c.fallback},
                     {"num_teams", c.num_teams},
                     {"thread_limit", c.thread_limit},
                     {"args", std::move(args)}});
  }
  json buffers = json::array();
  for (const HostBuffer &b : program.buffers)
    buffers.push_back(
        {{"function", b.function}, {"name", b.name}, {"size", b.size_bytes}});
  json doc = {{"format", "forge-host-1"},
              {"target_calls", std::move(calls)},
              {"buffers", std::move(buffers)},
              {"ir", ir::print_module(program.module)}};
  return doc.dump(1) + "\n";
}

Expected<HostProgram> deserialize_host_program(std::string_view text) {
  auto bad = [](const std::string &why) {
    return make_diag(DiagKind::Bundle, "malformed host program: " + why);
  };
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object())
    return bad("not a JSON object");
  if (doc.value("format", "") != "forge-host-1")
    return bad("unknown format");
  HostProgram program;
  try {
    Expected<ir::Module> m = ir::parse_module(doc.at("ir").get<std::string>());
    if (!m)
      return m.diags();
    program.module = std::move(*m);
    for (const json &c : doc.at("target_calls")) {
      TargetCall call;
      call.kernel_id = c.at("id").get<unsigned>();
      call.kernel = c.at("kernel").get<std::string>();
      call.fallback = c.at("fallback").get<std::string>();
      call.num_teams = c.at("num_teams").get<uint32_t>();
      call.thread_limit = c.at("thread_limit").get<uint32_t>();
      for (const json &a : c.at("args")) {
        ArgDescriptor desc;
        desc.name = a.at("name").get<std::string>();
        desc.buffer = a.at("kind").get<std::string>() == "buffer";
        std::optional<ir::Ty> t = ir::parse_ty(a.at("type").get<std::string>());
        if (!t)
          return bad("unknown argument type");
        desc.type = *t;
        desc.element_count = a.at("count").get<uint64_t>();
        desc.size_bytes = a.at("size").get<uint64_t>();
        call.args.push_back(std::move(desc));
      }
      program.target_calls.push_back(std::move(call));
    }
    for (const json &b : doc.at("buffers"))
      program.buffers.push_back({b.at("function").get<std::string>(),
                                 b.at("name").get<std::string>(),
                                 b.at("size").get<uint64_t>()});
  } catch (const json::exception &e) {
    return bad(e.what());
  }
  return program;
}

} // namespace forge::codegen
