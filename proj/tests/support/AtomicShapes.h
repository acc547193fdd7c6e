//===- tests/support/AtomicShapes.h - Atomic construct samples -*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_TESTS_ATOMICSHAPES_H
#define FORGE_TESTS_ATOMICSHAPES_H

#include "forge/frontend/AST.h"
#include "forge/selectors/Target.h"

#include <string>
#include <vector>

namespace forge::test {

struct AtomicShape {
  std::string clauses; // "capture" or "compare capture"
  std::string block;
};

struct CanonicalShape {
  frontend::AtomicKind kind;
  AtomicShape shape;
  /// Runtime function implementing it and its intrinsic-call twin.
  std::string function;
};

inline const std::vector<CanonicalShape> &canonical_shapes() {
  using K = frontend::AtomicKind;
  static const std::vector<CanonicalShape> shapes = {
      {K::ADD, {"capture", "{ V = *X; *X += E; }"}, "atomic_add"},
      {K::MAX, {"compare capture", "{ V = *X; if (*X < E) { *X = E; } }"},
       "atomic_max"},
      {K::MIN, {"compare capture", "{ V = *X; if (*X > E) { *X = E; } }"},
       "atomic_min"},
      {K::XCHG, {"capture", "{ V = *X; *X = E; }"}, "atomic_exchange"},
      {K::CAS, {"compare capture", "{ V = *X; if (*X == E) { *X = D; } }"},
       "atomic_cas"},
  };
  return shapes;
}

/// The wrapping increment written as an atomic construct.
inline AtomicShape inc_shape() {
  return {"compare capture", "{ V = *X; *X = *X >= E ? 0 : *X + 1; }"};
}

/// Near misses of the canonical shapes.
inline const std::vector<AtomicShape> &mutated_shapes() {
  static const std::vector<AtomicShape> shapes = {
      {"compare capture", "{ V = *X; if (*X >= E) { *X = 0; } else { *X = *X + 1; } }"},
      {"compare capture", "{ V = *X; if (*X <= E) { *X = E; } }"},
      {"compare capture", "{ V = *X; if (*X >= E) { *X = E; } }"},
      {"compare capture", "{ V = *X; if (*X != E) { *X = D; } }"},
      {"compare capture", "{ V = *X; if (*X < E) { *X = D; } }"},
      {"compare capture", "{ V = *X; if (*X < E) { *X = E; } else { *X = D; } }"},
      {"compare capture", "{ V = *X; if (*X == E) { *Y = D; } }"},
      {"compare capture", "{ V = *X; if (*Y < E) { *X = E; } }"},
      {"capture", "{ V = *X; if (*X < E) { *X = E; } }"},
      {"capture", "{ V = *X; *X -= E; }"},
      {"capture", "{ *X += E; V = *X; }"},
      {"capture", "{ V = *Y; *X += E; }"},
      {"capture", "{ V = *X; *X += E; *X += E; }"},
      {"capture", "{ V = *X; *X = *X + 1; }"},
      {"capture", "{ V = *X; }"},
  };
  return shapes;
}

/// A function wrapping one atomic construct.
inline std::string atomic_function(const std::string &name,
                                   const AtomicShape &shape) {
  return "uint32_t " + name +
         "(uint32_t *X, uint32_t *Y, uint32_t E, uint32_t D) {\n"
         "  uint32_t V;\n"
         "#pragma omp atomic " +
         shape.clauses + " seq_cst\n  " + shape.block +
         "\n  return V;\n}\n";
}

inline selectors::IntrinsicKind intrinsic_kind(frontend::AtomicKind kind) {
  using I = selectors::IntrinsicKind;
  switch (kind) {
  case frontend::AtomicKind::ADD:
    return I::AtomicAdd;
  case frontend::AtomicKind::MAX:
    return I::AtomicMax;
  case frontend::AtomicKind::MIN:
    return I::AtomicMin;
  case frontend::AtomicKind::XCHG:
    return I::AtomicXchg;
  case frontend::AtomicKind::CAS:
    return I::AtomicCas;
  case frontend::AtomicKind::INC:
    break;
  }
  return I::AtomicInc;
}

/// Same signature as atomic_function(), calling the target intrinsic.
inline std::string intrinsic_function(const std::string &name,
                                      frontend::AtomicKind kind,
                                      const selectors::TargetDesc &target) {
  std::string callee = target.intrinsic_table.at(intrinsic_kind(kind));
  std::string args = kind == frontend::AtomicKind::CAS ? "X, E, D" : "X, E";
  return "uint32_t " + name +
         "(uint32_t *X, uint32_t *Y, uint32_t E, uint32_t D) {\n"
         "  uint32_t V;\n  V = " +
         callee + "(" + args + ");\n  return V;\n}\n";
}

inline std::string device_module(const std::string &body) {
  return "#pragma omp begin declare target\n" + body +
         "#pragma omp end declare target\n";
}

/// A module whose one target region calls `f`, the atomic construct of
/// `shape`. With `intrinsic`, a variant for `target` calls the intrinsic
/// instead.
inline std::string twin_program(const CanonicalShape &shape,
                                const selectors::TargetDesc &target,
                                bool intrinsic) {
  std::string f = atomic_function("f", shape.shape);
  if (intrinsic)
    f += "#pragma omp begin declare variant match(device={arch(" +
         std::string(selectors::arch_name(target.arch)) + ")})\n" +
         intrinsic_function("f", shape.kind, target) +
         "#pragma omp end declare variant\n";
  return device_module(f) + "int32_t main() {\n"
                            "  uint32_t x[1];\n"
                            "  uint32_t y[1];\n"
                            "  uint32_t in[2];\n"
                            "  uint32_t v[1];\n"
                            "#pragma omp target\n"
                            "  { v[0] = f(x, y, in[0], in[1]); }\n"
                            "  return 0;\n"
                            "}\n";
}

} // namespace forge::test

#endif // FORGE_TESTS_ATOMICSHAPES_H
