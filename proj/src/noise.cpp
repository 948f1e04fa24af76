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

#include "edl/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "edl/errors.hpp"

namespace edl
{

void NoiseSpec::validate() const
{
    if (!(rate >= 0.0 && rate <= 1.0))
    {
        throw InvalidArgument("noise rate must lie in [0, 1]");
    }
}

Signal<double> generate_impulse_noise(const Signal<double>& x, const NoiseSpec& spec)
{
    spec.validate();
    Signal<double> out = x;
    const Index n = x.size();
    const auto count = static_cast<Index>(std::llround(spec.rate * static_cast<double>(n)));
    if (count == 0)
    {
        return out;
    }

    std::mt19937_64 rng(spec.seed);
    // partial Fisher-Yates: the first `count` slots end up a uniform sample
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::bernoulli_distribution coin(0.5);
    for (Index i = 0; i < count; ++i)
    {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.flat()[idx[i]] = coin(rng) ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace edl
