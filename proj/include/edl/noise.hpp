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

#include <array>
#include <cstdint>
#include <string_view>

#include "edl/tensor.hpp"

namespace edl
{

enum class NoiseKind
{
    Impulse
};

struct NoiseSpec
{
    NoiseKind kind = NoiseKind::Impulse;
    double rate = 0.0;  // fraction of corrupted entries
    std::uint64_t seed = 0;

    void validate() const;
};

struct NoisePreset
{
    std::string_view label;
    double rate;
};

/// Ordinal impulse levels L1..L5.
inline constexpr std::array<NoisePreset, 5> kImpulsePresets{{
    {"L1", 0.02},
    {"L2", 0.05},
    {"L3", 0.1},
    {"L4", 0.2},
    {"L5", 0.3},
}};

/// Replaces round(rate * size) entries, drawn uniformly without replacement,
/// by 0 or 1 with equal probability.
Signal<double> generate_impulse_noise(const Signal<double>& x, const NoiseSpec& spec);

}  // namespace edl
