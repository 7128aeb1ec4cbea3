// kgrescore/cli.h

// Copyright 2026  kgrescore authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef KGRESCORE_CLI_H_
#define KGRESCORE_CLI_H_

#include <iosfwd>
#include <string>

namespace kgr {

/// Entry point of the kgrescore tool.  Returns 0 on success, 1 on runtime
/// errors and 2 on usage or input parse errors.
int RunCli(int argc, const char *const *argv, std::ostream &out,
           std::ostream &err);

/// Hex SHA-256 of a file's contents.  Throws if it cannot be read.
std::string Sha256File(const std::string &path);

}  // namespace kgr

#endif  // KGRESCORE_CLI_H_
