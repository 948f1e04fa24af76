/*
 * Copyright 2026 The EDL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Seeded problem generators shared by the benchmark commands.

#include <cstdint>
#include <random>

#include "edl/tensor.hpp"

namespace edl
{

/// Independent stream for trial `index` of a run seeded with `master`
/// (splitmix64 finalizer over the pair), so trial outcomes do not depend on
/// execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct ProblemShape
{
    Index rows = 16;
    Index cols = 16;
    Index in_channels = 1;   // C
    Index out_channels = 4;  // D
    Index kernel_size = 3;   // k
    double density = 0.05;
    double magnitude_lo = 0.5;
    double magnitude_hi = 1.5;

    void validate() const;
};

struct PlantedProblem
{
    Dictionary<double> dict;
    Code<double> code;      // z*
    Signal<double> signal;  // A*(z*)
};

/// Unit-normalized Gaussian dictionary and a code with Bernoulli(density)
/// support, magnitudes uniform in [lo, hi] and random signs.
PlantedProblem planted_problem(const ProblemShape& shape, std::mt19937_64& rng);

}  // namespace edl
