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

#include "edl/synthetic.hpp"

#include "edl/conv_ops.hpp"
#include "edl/errors.hpp"

namespace edl
{

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(master) ^ index);
}

void ProblemShape::validate() const
{
    if (rows < 1 || cols < 1 || in_channels < 1 || out_channels < 1)
    {
        throw InvalidArgument("problem dimensions must be >= 1");
    }
    if (kernel_size < 1 || kernel_size % 2 == 0)
    {
        throw InvalidArgument("kernel size must be a positive odd integer");
    }
    if (!(density >= 0.0 && density <= 1.0))
    {
        throw InvalidArgument("planted code density must lie in [0, 1]");
    }
    if (!(magnitude_lo >= 0.0 && magnitude_lo <= magnitude_hi))
    {
        throw InvalidArgument("planted magnitudes need 0 <= lo <= hi");
    }
}

PlantedProblem planted_problem(const ProblemShape& shape, std::mt19937_64& rng)
{
    shape.validate();
    PlantedProblem p{random_dictionary<double>(shape.out_channels, shape.in_channels,
                                               shape.kernel_size, rng),
                     Code<double>(shape.rows, shape.cols, shape.out_channels),
                     Signal<double>(shape.rows, shape.cols, shape.in_channels)};
    std::bernoulli_distribution on(shape.density);
    std::bernoulli_distribution positive(0.5);
    std::uniform_real_distribution<double> mag(shape.magnitude_lo, shape.magnitude_hi);
    for (Index n = 0; n < p.code.size(); ++n)
    {
        if (on(rng))
        {
            const double m = mag(rng);
            p.code.flat()[n] = positive(rng) ? m : -m;
        }
    }
    p.signal = apply_adjoint(p.dict, p.code);
    return p;
}

}  // namespace edl
