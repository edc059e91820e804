// weakspk/selfcheck.h

// Copyright 2026 The weakspk Authors
//
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

// Runtime sanity checks of an installed build: analytic gradients against
// central differences, pooling bounds, and metrics against a brute-force
// threshold sweep.

#ifndef WEAKSPK_SELFCHECK_H_
#define WEAKSPK_SELFCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "weakspk/embedder.h"

namespace weakspk {

// Central differences of f over every entry of every tensor of `at`.
Model NumericGradient(const Model &at, const std::function<double(const Model &)> &f, double step = 1e-5);

// max over tensors of |a - n| / (|a| + |n|), Frobenius norms; 0 when both
// tensors vanish.
double GradientRelativeError(const Model &analytic, const Model &numeric);

enum class GradPath { kMaxBag, kLseBag, kSegmentAam, kExtended };
const char *GradPathName(GradPath path);

/// Builds a small random model and batch for `path` (inputs kept clear of
/// ReLU kinks and, for MAX, of argmax ties) and returns the relative error
/// between analytic and numeric gradients.  `tau` is used by kLseBag.
double CheckGradientPath(GradPath path, uint64_t seed, double tau = 0.5);

struct CheckOutcome {
  std::string name;
  bool ok = false;
  std::string detail;
};

std::vector<CheckOutcome> RunSelfChecks(uint64_t seed = 1);

}  // namespace weakspk

#endif  // WEAKSPK_SELFCHECK_H_
