//===- driver/Driver.cpp - Compilation pipeline and CLI ------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/driver/Driver.h"

#include "forge/bundler/Bundler.h"
#include "forge/codegen/CodeGen.h"
#include "forge/devicert/DeviceRuntime.h"
#include "forge/frontend/Parser.h"
#include "forge/host/Host.h"
#include "forge/lowering/Lowering.h"
#include "forge/selectors/Selectors.h"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

namespace forge::driver {

namespace fs = std::filesystem;
using selectors::Arch;

Expected<ir::Module> compile_device(const frontend::SourceModule &module,
                                    const selectors::TargetDesc &target) {
  Expected<lowering::SpecializedModule> spec =
      lowering::specialize(module, target);
  if (!spec)
    return spec.diags();
  Expected<ir::Module> user = codegen::emit_device_ir(*spec, target);
  if (!user)
    return user;
  return codegen::link_runtime(*user, target);
}

namespace {

Expected<CompileOutput> compile_parsed(const frontend::SourceModule &module,
                                       const std::vector<Arch> &targets) {
  std::vector<std::future<Expected<ir::Module>>> passes;
  for (Arch arch : targets)
    passes.push_back(std::async(std::launch::async, [&module, arch] {
      return compile_device(module, selectors::target_desc(arch));
    }));
  Expected<codegen::HostProgram> host = codegen::emit_host_program(module);

  DiagnosticList diags;
  if (!host)
    for (Diagnostic d : host.diags()) {
      d.message = "host: " + d.message;
      diags.push_back(std::move(d));
    }
  CompileOutput out;
  std::vector<bundler::Entry> images;
  for (size_t i = 0; i < passes.size(); ++i) {
    Expected<ir::Module> m = passes[i].get();
    if (!m) {
      for (Diagnostic d : m.diags()) {
        d.message = std::string(selectors::arch_name(targets[i])) + ": " +
                    d.message;
        diags.push_back(std::move(d));
      }
      continue;
    }
    std::string text = ir::print_module(*m);
    out.device_ir.emplace_back(targets[i], text);
    images.push_back({std::string(selectors::arch_name(targets[i])), text});
  }
  if (!diags.empty())
    return diags;
  Expected<std::string> bytes = bundler::bundle(
      codegen::serialize_host_program(*host), std::move(images));
  if (!bytes)
    return bytes.diags();
  out.bundle = std::move(*bytes);
  return out;
}

} // namespace

Expected<CompileOutput> compile_source(std::string_view source,
                                       const std::vector<Arch> &targets) {
  Expected<frontend::SourceModule> module = frontend::parse_module(source);
  if (!module)
    return module.diags();
  return compile_parsed(*module, targets);
}

//===----------------------------------------------------------------------===//
// Command line
//===----------------------------------------------------------------------===//

namespace {

bool read_file(const std::string &path, std::string &out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "forge: error: cannot read '" << path << "'\n";
    return false;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

bool write_file(const std::string &path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(data.data(), std::streamsize(data.size()))) {
    std::cerr << "forge: error: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

std::optional<Arch> parse_device_target(std::string_view name) {
  std::optional<Arch> arch = selectors::parse_arch(name);
  if (!arch || *arch == Arch::host)
    return std::nullopt;
  return arch;
}

struct CompileArgs {
  std::string input;
  std::vector<std::string> targets{"vgpu"};
  std::string output;
  std::string emit_ir;
  std::string dump_runtime;
};

int cmd_compile(const CompileArgs &a) {
  if (!a.dump_runtime.empty()) {
    std::optional<Arch> arch = selectors::parse_arch(a.dump_runtime);
    if (!arch) {
      std::cerr << "forge: error: unknown target '" << a.dump_runtime << "'\n";
      return kExitDiagnostics;
    }
    Expected<ir::Module> rt =
        devicert::runtime_ir(selectors::target_desc(*arch));
    if (!rt) {
      print_diagnostics(std::cerr, "<device runtime>", rt.diags());
      return kExitDiagnostics;
    }
    std::string text = ir::print_module(*rt);
    if (a.output.empty()) {
      std::cout << text;
      return kExitOk;
    }
    return write_file(a.output, text) ? kExitOk : kExitDiagnostics;
  }
  if (a.input.empty()) {
    std::cerr << "forge: error: no input file\n";
    return kExitDiagnostics;
  }
  std::vector<Arch> targets;
  for (const std::string &t : a.targets) {
    std::optional<Arch> arch = parse_device_target(t);
    if (!arch) {
      std::cerr << "forge: error: unknown target '" << t << "'\n";
      return kExitDiagnostics;
    }
    if (std::find(targets.begin(), targets.end(), *arch) != targets.end()) {
      std::cerr << "forge: error: duplicate target '" << t << "'\n";
      return kExitDiagnostics;
    }
    targets.push_back(*arch);
  }
  std::string source;
  if (!read_file(a.input, source))
    return kExitDiagnostics;
  Expected<CompileOutput> out = compile_source(source, targets);
  if (!out) {
    print_diagnostics(std::cerr, a.input, out.diags());
    return kExitDiagnostics;
  }
  fs::path stem = fs::path(a.input).stem();
  if (!a.emit_ir.empty()) {
    std::error_code ec;
    fs::create_directories(a.emit_ir, ec);
    for (const auto &[arch, text] : out->device_ir) {
      fs::path file = fs::path(a.emit_ir) /
                      (stem.string() + "." +
                       std::string(selectors::arch_name(arch)) + ".ir");
      if (!write_file(file.string(), text))
        return kExitDiagnostics;
    }
  }
  std::string output = a.output.empty()
                           ? (fs::path(a.input).parent_path() / stem).string() +
                                 ".o"
                           : a.output;
  return write_file(output, out->bundle) ? kExitOk : kExitDiagnostics;
}

struct RunArgs {
  std::string input;
  std::string device;
  bool force_fail = false;
  uint64_t seed = 0;
  bool check_uninit = false;
  std::string grid;
  std::string trace;
};

int cmd_run(const RunArgs &a) {
  host::RunOptions opts;
  std::string device = a.device;
  if (device.empty()) {
    const char *env = std::getenv("FORGE_DEFAULT_DEVICE");
    device = env && *env ? env : "vgpu";
  }
  std::optional<Arch> arch = selectors::parse_arch(device);
  if (!arch) {
    std::cerr << "forge: error: unknown device '" << device << "'\n";
    return kExitDiagnostics;
  }
  opts.device = *arch;
  opts.force_fail = a.force_fail;
  opts.sched_seed = a.seed;
  opts.check_uninit = a.check_uninit;
  if (!a.grid.empty()) {
    unsigned teams = 0, threads = 0;
    char x = 0, extra = 0;
    std::istringstream in(a.grid);
    if (!(in >> teams >> x >> threads) || x != 'x' || in >> extra ||
        teams < 1 || threads < 1 || teams > vgpu::kMaxGridDim ||
        threads > vgpu::kMaxGridDim) {
      std::cerr << "forge: error: --grid expects TEAMSxTHREADS, each in "
                   "1..1024\n";
      return kExitDiagnostics;
    }
    opts.teams = teams;
    opts.threads = threads;
  }
  std::string bytes;
  if (!read_file(a.input, bytes))
    return kExitDiagnostics;
  Expected<host::RunResult> r = host::run_bundle(bytes, opts);
  if (!r) {
    print_diagnostics(std::cerr, a.input, r.diags());
    return kExitDiagnostics;
  }
  std::cout << r->output << std::flush;
  if (!a.trace.empty() && !write_file(a.trace, vgpu::format_trace(r->trace)))
    return kExitDiagnostics;
  if (r->trap) {
    std::cerr << "forge: trap: " << r->trap->kind << " in team "
              << r->trap->team << " thread " << r->trap->thread << ": "
              << r->trap->detail << '\n';
    return kExitTrap;
  }
  return r->exit_status;
}

int cmd_diff_ir(const std::string &left, const std::string &right) {
  std::string a, b;
  if (!read_file(left, a) || !read_file(right, b))
    return kExitDiagnostics;
  Expected<ir::Module> ma = ir::parse_module(a);
  Expected<ir::Module> mb = ir::parse_module(b);
  if (!ma)
    print_diagnostics(std::cerr, left, ma.diags());
  if (!mb)
    print_diagnostics(std::cerr, right, mb.diags());
  if (!ma || !mb)
    return kExitDiagnostics;
  Expected<ir::DiffReport> report = ir::diff_ir(*ma, *mb);
  if (!report) {
    print_diagnostics(std::cerr, left, report.diags());
    return kExitDiagnostics;
  }
  if (report->semantically_equal) {
    std::cout << "semantically equal\n";
    return kExitOk;
  }
  for (const ir::Difference &d : report->differences)
    std::cout << d.location << "\n- " << d.left << "\n+ " << d.right << '\n';
  return kExitDiffMismatch;
}

int cmd_inspect(const std::string &input) {
  std::string bytes;
  if (!read_file(input, bytes))
    return kExitDiagnostics;
  Expected<bundler::Bundle> b = bundler::unbundle(bytes);
  if (!b) {
    print_diagnostics(std::cerr, input, b.diags());
    return kExitDiagnostics;
  }
  std::cout << "bundle " << input << ": " << b->entries.size()
            << " entries\n";
  for (const bundler::Entry &e : b->entries)
    std::cout << "  " << e.target << ' ' << e.payload.size() << " bytes\n";
  return kExitOk;
}

int cmd_dump_ast(const std::string &input) {
  std::string source;
  if (!read_file(input, source))
    return kExitDiagnostics;
  Expected<frontend::SourceModule> module = frontend::parse_module(source);
  if (!module) {
    print_diagnostics(std::cerr, input, module.diags());
    return kExitDiagnostics;
  }
  std::cout << frontend::print_module(*module);
  std::vector<frontend::FunctionDecl> variants;
  for (const frontend::Decl &d : module->declarations) {
    auto *f = std::get_if<frontend::FunctionDecl>(&d);
    if (!f)
      continue;
    if (f->variant_of)
      variants.push_back(*f);
  }
  std::set<std::string> seen;
  int status = kExitOk;
  for (const frontend::FunctionDecl &v : variants) {
    if (!seen.insert(v.variant_of->base).second)
      continue;
    const frontend::FunctionDecl *base =
        module->find_function(v.variant_of->base);
    if (!base)
      continue;
    std::vector<frontend::FunctionDecl> candidates;
    for (const frontend::FunctionDecl &c : variants)
      if (c.variant_of->base == base->name)
        candidates.push_back(c);
    for (Arch arch : selectors::kAllArchs) {
      Expected<std::string> chosen = selectors::resolve_variant(
          *base, candidates, selectors::target_desc(arch));
      std::cout << "; variant " << base->name << " on "
                << selectors::arch_name(arch) << ": ";
      if (chosen) {
        std::cout << *chosen << '\n';
        continue;
      }
      std::cout << "error: " << chosen.diags().front().message << '\n';
      status = kExitDiagnostics;
    }
  }
  return status;
}

} // namespace

int run_cli(int argc, char **argv) {
  CLI::App app{"forge: portable OpenMP offloading toolchain"};
  app.require_subcommand(1);

  CompileArgs compile;
  CLI::App *c = app.add_subcommand("compile", "Compile a .mc file to a bundle");
  c->add_option("input", compile.input, "Source file");
  c->add_option("--targets", compile.targets, "Device targets")
      ->delimiter(',');
  c->add_option("-o,--output", compile.output, "Output bundle");
  c->add_option("--emit-ir", compile.emit_ir,
                "Write each target's IR into this directory");
  c->add_option("--dump-runtime", compile.dump_runtime,
                "Write the device runtime IR for a target");

  RunArgs run;
  CLI::App *r = app.add_subcommand("run", "Run a bundle");
  r->add_option("input", run.input, "Bundle")->required();
  r->add_option("--device", run.device, "Offload device");
  r->add_flag("--force-offload-fail", run.force_fail,
              "Make every target launch fail");
  r->add_option("--sched-seed", run.seed, "Scheduler seed");
  r->add_flag("--check-uninit", run.check_uninit,
              "Trap on reads of uninitialized shared memory");
  r->add_option("--grid", run.grid, "Override grid as TEAMSxTHREADS");
  r->add_option("--trace", run.trace, "Write the device event trace");

  std::string left, right;
  CLI::App *d = app.add_subcommand("diff-ir", "Compare two IR files");
  d->add_option("left", left)->required();
  d->add_option("right", right)->required();

  std::string bundle;
  CLI::App *i = app.add_subcommand("inspect", "List bundle entries");
  i->add_option("bundle", bundle)->required();

  std::string ast_input;
  CLI::App *a = app.add_subcommand("dump-ast",
                                   "Print the AST and variant resolution");
  a->add_option("input", ast_input)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitDiagnostics;
  }
  if (c->parsed())
    return cmd_compile(compile);
  if (r->parsed())
    return cmd_run(run);
  if (d->parsed())
    return cmd_diff_ir(left, right);
  if (i->parsed())
    return cmd_inspect(bundle);
  return cmd_dump_ast(ast_input);
}

} // namespace forge::driver
