// kgrescore/common.h

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

#ifndef KGRESCORE_COMMON_H_
#define KGRESCORE_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgr {

using Label = int32_t;
using StateId = int32_t;
using Weight = double;
using EntityIndex = int32_t;

inline constexpr StateId kNoState = -1;

// Reserved labels.  Ordinary words start at kFirstWordLabel; feature end tags
// live in their own range starting at kEndTagBase (end tag of feature id k is
// kEndTagBase + k).
inline constexpr Label kEpsilon = 0;
inline constexpr Label kSigma = 1;
inline constexpr Label kFeatureStart = 2;
inline constexpr Label kFirstWordLabel = 3;
inline constexpr Label kEndTagBase = Label{1} << 30;

inline bool IsEndTag(Label l) { return l >= kEndTagBase; }
inline int EndTagFeature(Label l) { return static_cast<int>(l - kEndTagBase); }
inline Label EndTagLabel(int feature_id) { return kEndTagBase + feature_id; }

// Boundary words used to pad hypotheses and templates.
inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

// All library errors are reported as kgr::Error.  ParseError is used for
// malformed input documents so that front ends can map it to a usage exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// ASCII helpers shared by all file readers.
std::vector<std::string> SplitWords(std::string_view text);
std::vector<std::string> SplitTabs(std::string_view line);
std::string JoinWords(const std::vector<std::string> &words,
                      std::string_view sep = " ");
std::string ToLower(std::string_view text);
std::string_view TrimView(std::string_view text);

// Shortest representation that parses back to the same double.
std::string FormatWeight(double w);
double ParseWeight(std::string_view text);
long ParseInt(std::string_view text);

/// Calls fn(i) for i in [0, n) on up to `workers` threads.  `fn` must not
/// throw; callers record per-item failures themselves.
void ParallelFor(size_t n, int workers, const std::function<void(size_t)> &fn);

}  // namespace kgr

#endif  // KGRESCORE_COMMON_H_
