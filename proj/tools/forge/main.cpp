//===- tools/forge/main.cpp - forge command line tool --------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/driver/Driver.h"

int main(int argc, char **argv) { return forge::driver::run_cli(argc, argv); }
