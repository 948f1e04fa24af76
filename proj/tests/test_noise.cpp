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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "edl/errors.hpp"
#include "edl/noise.hpp"
#include "edl/proximal.hpp"
#include "edl/synthetic.hpp"

using namespace edl;

namespace
{

Signal<double> interior(Index H, Index W, Index C, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    Signal<double> x(H, W, C);
    fill_uniform(x, rng, 0.2, 0.8);
    return x;
}

Index count_changed(const Signal<double>& a, const Signal<double>& b)
{
    Index n = 0;
    for (Index i = 0; i < a.size(); ++i) n += a.flat()[i] != b.flat()[i];
    return n;
}

}  // namespace

TEST_CASE("impulse noise: rate 0, rate 1, exact corruption count")
{
    const auto x = interior(10, 10, 1, 1);
    CHECK(count_changed(generate_impulse_noise(x, {NoiseKind::Impulse, 0.0, 7}), x) == 0);

    const auto all = generate_impulse_noise(x, {NoiseKind::Impulse, 1.0, 7});
    for (Index i = 0; i < all.size(); ++i) CHECK((all.flat()[i] == 0.0 || all.flat()[i] == 1.0));

    for (std::uint64_t seed = 0; seed < 50; ++seed)
    {
        const auto y = generate_impulse_noise(x, {NoiseKind::Impulse, 0.1, seed});
        CHECK(count_changed(y, x) == 10);
        for (Index i = 0; i < y.size(); ++i)
            if (y.flat()[i] != x.flat()[i]) CHECK((y.flat()[i] == 0.0 || y.flat()[i] == 1.0));
    }

    const auto multi = interior(6, 5, 3, 2);
    CHECK(count_changed(generate_impulse_noise(multi, {NoiseKind::Impulse, 0.2, 3}), multi) == 18);
}

TEST_CASE("impulse noise: seeded, both values appear, rate validated")
{
    const auto x = interior(16, 16, 1, 3);
    const NoiseSpec spec{NoiseKind::Impulse, 0.3, 11};
    CHECK((generate_impulse_noise(x, spec).array() == generate_impulse_noise(x, spec).array()).all());
    CHECK_FALSE((generate_impulse_noise(x, spec).array()
                 == generate_impulse_noise(x, {NoiseKind::Impulse, 0.3, 12}).array())
                    .all());

    const auto y = generate_impulse_noise(x, {NoiseKind::Impulse, 1.0, 5});
    CHECK((y.array() == 0.0).count() > 64);
    CHECK((y.array() == 1.0).count() > 64);

    CHECK_THROWS_AS(generate_impulse_noise(x, {NoiseKind::Impulse, -0.1, 1}), InvalidArgument);
    CHECK_THROWS_AS(generate_impulse_noise(x, {NoiseKind::Impulse, 1.5, 1}), InvalidArgument);
}

TEST_CASE("impulse presets are increasing")
{
    for (std::size_t i = 1; i < kImpulsePresets.size(); ++i)
        CHECK(kImpulsePresets[i].rate > kImpulsePresets[i - 1].rate);
    CHECK(kImpulsePresets.front().label == "L1");
    CHECK(kImpulsePresets.back().rate == 0.3);
}

TEST_CASE("derive_seed and planted problems")
{
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));

    ProblemShape shape;
    std::mt19937_64 a(5), b(5);
    const auto p = planted_problem(shape, a);
    const auto q = planted_problem(shape, b);
    CHECK((p.signal.array() == q.signal.array()).all());
    CHECK(p.code.rows() == 16);
    CHECK(p.code.channels() == 4);
    CHECK((residual(p.signal, p.dict, p.code).array().abs() <= 1e-12).all());
    for (Index n = 0; n < p.code.size(); ++n)
    {
        const double m = std::abs(p.code.flat()[n]);
        CHECK((m == 0.0 || (m >= 0.5 && m <= 1.5)));
    }

    // density near 5% over many draws
    std::mt19937_64 rng(9);
    double nz = 0;
    for (int i = 0; i < 50; ++i) nz += density(planted_problem(shape, rng).code);
    CHECK(nz / 50 == doctest::Approx(0.05).epsilon(0.2));

    shape.kernel_size = 4;
    CHECK_THROWS_AS(planted_problem(shape, rng), InvalidArgument);
}
