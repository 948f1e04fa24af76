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

#include <Eigen/Eigenvalues>

#include <limits>

#include "edl/conv_ops.hpp"
#include "oracles.hpp"

using namespace edl;
using oracle::Mat;

TEST_CASE("correlate2d: scalar and identity kernels")
{
    Mat plane(1, 1);
    plane << 3;
    Mat kernel(1, 1);
    kernel << 2;
    CHECK(correlate2d(plane, kernel)(0, 0) == 6.0);
    CHECK(transpose_convolve2d(plane, kernel)(0, 0) == 6.0);

    std::mt19937_64 rng(3);
    Mat p = Mat::Random(5, 7);
    Mat one = Mat::Ones(1, 1);
    CHECK(correlate2d(p, one) == p);
}

TEST_CASE("correlate2d: ones kernel on ones plane counts in-range neighbours")
{
    const Mat out = correlate2d(Mat::Ones(3, 3), Mat::Ones(3, 3));
    CHECK(out(1, 1) == 9.0);
    CHECK(out(0, 1) == 6.0);
    CHECK(out(1, 0) == 6.0);
    CHECK(out(2, 1) == 6.0);
    CHECK(out(1, 2) == 6.0);
    CHECK(out(0, 0) == 4.0);
    CHECK(out(2, 2) == 4.0);
    CHECK(out(0, 2) == 4.0);
    CHECK(out(2, 0) == 4.0);
    CHECK(oracle::max_abs_diff(out, oracle::correlate(Mat::Ones(3, 3), Mat::Ones(3, 3))) == 0.0);
}

TEST_CASE("correlate2d and transpose_convolve2d match the double-loop oracle")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Index k = 2 * (trial % 3) + 1;
        const Mat plane = Mat::Random(4 + trial % 5, 3 + trial % 4);
        const Mat kernel = Mat::Random(k, k);
        CHECK(oracle::max_abs_diff(correlate2d(plane, kernel), oracle::correlate(plane, kernel))
              <= 1e-12);
        CHECK(oracle::max_abs_diff(transpose_convolve2d(plane, kernel),
                                   oracle::transpose_convolve(plane, kernel))
              <= 1e-12);
        // flip duality
        CHECK(oracle::max_abs_diff(transpose_convolve2d(plane, kernel),
                                   correlate2d(plane, oracle::flip(kernel)))
              <= 1e-12);
    }
}

TEST_CASE("transpose_convolve2d equals correlate2d for point-symmetric kernels")
{
    Mat kernel = Mat::Random(3, 3);
    kernel = (kernel + kernel.reverse()).eval();
    const Mat plane = Mat::Random(6, 6);
    CHECK(oracle::max_abs_diff(transpose_convolve2d(plane, kernel), correlate2d(plane, kernel))
          <= 1e-14);
}

TEST_CASE("2d kernels reject even sizes and non-finite input")
{
    CHECK_THROWS_AS(correlate2d(Mat::Ones(3, 3), Mat::Ones(2, 2)), InvalidArgument);
    CHECK_THROWS_AS(transpose_convolve2d(Mat::Ones(3, 3), Mat::Ones(4, 4)), InvalidArgument);
    Mat bad = Mat::Ones(3, 3);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(correlate2d(bad, Mat::Ones(1, 1)), InvalidArgument);
    CHECK_THROWS_AS(correlate2d(Mat::Ones(3, 3), bad), InvalidArgument);
    CHECK_THROWS_AS(Dictionary<double>(1, 1, 2), InvalidArgument);
}

TEST_CASE("apply: identity, zero input, channel mismatch")
{
    std::mt19937_64 rng(5);
    Dictionary<double> id(1, 1, 1);
    id.coeffs()[0] = 1.0;
    const auto x = oracle::random_field<SignalTag>(4, 5, 1, rng);
    CHECK((apply(id, x).array() == x.array()).all());

    const auto A = oracle::random_dict(2, 3, 3, rng);
    CHECK(apply(A, Signal<double>(4, 4, 3)).array().abs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(apply(A, Signal<double>(4, 4, 2)), ShapeError);
    CHECK_THROWS_AS(apply_adjoint(A, Code<double>(4, 4, 3)), ShapeError);
}

TEST_CASE("apply and apply_adjoint match the nested-loop oracle")
{
    std::mt19937_64 rng(17);
    const auto A = oracle::random_dict(2, 3, 3, rng);
    const auto x = oracle::random_field<SignalTag>(4, 4, 3, rng);
    const auto z = oracle::random_field<CodeTag>(4, 4, 2, rng);

    const auto ax = apply(A, x);
    const auto ax_ref = oracle::apply(A, x);
    CHECK(ax.rows() == 4);
    CHECK(ax.channels() == 2);
    CHECK((ax.array() - ax_ref.array()).abs().maxCoeff()
          <= 1e-10 * ax_ref.array().abs().maxCoeff());

    const auto atz = apply_adjoint(A, z);
    const auto atz_ref = oracle::apply_adjoint(A, z);
    CHECK(atz.channels() == 3);
    CHECK((atz.array() - atz_ref.array()).abs().maxCoeff()
          <= 1e-10 * atz_ref.array().abs().maxCoeff());
}

TEST_CASE("apply_adjoint: zero code and scalar kernel")
{
    std::mt19937_64 rng(23);
    const auto A = oracle::random_dict(3, 2, 5, rng);
    CHECK(apply_adjoint(A, Code<double>(6, 6, 3)).array().abs().maxCoeff() == 0.0);

    Dictionary<double> scale(1, 1, 1);
    scale.coeffs()[0] = 2.5;
    const auto z = oracle::random_field<CodeTag>(3, 4, 1, rng);
    CHECK(((apply_adjoint(scale, z).array() - 2.5 * z.array()).abs() <= 1e-15).all());
}

TEST_CASE("property: adjointness, linearity and shape preservation")
{
    std::mt19937_64 rng(29);
    std::uniform_int_distribution<int> dim(1, 9), ch(1, 4), half(0, 2);
    for (int trial = 0; trial < 200; ++trial)
    {
        const Index H = dim(rng), W = dim(rng), C = ch(rng), D = ch(rng), k = 2 * half(rng) + 1;
        const auto A = oracle::random_dict(D, C, k, rng);
        const auto x1 = oracle::random_field<SignalTag>(H, W, C, rng);
        const auto x2 = oracle::random_field<SignalTag>(H, W, C, rng);
        const auto z1 = oracle::random_field<CodeTag>(H, W, D, rng);
        const auto z2 = oracle::random_field<CodeTag>(H, W, D, rng);

        const auto ax = apply(A, x1);
        const auto atz = apply_adjoint(A, z1);
        REQUIRE(ax.rows() == H);
        REQUIRE(ax.cols() == W);
        REQUIRE(atz.rows() == H);
        REQUIRE(atz.cols() == W);

        const double lhs = dot(ax, z1);
        const double rhs = dot(x1, atz);
        CHECK(std::abs(lhs - rhs) <= 1e-8 * (1 + std::abs(lhs)));

        const double a = 0.7, b = -1.3;
        Signal<double> mix(H, W, C);
        mix.array() = a * x1.array() + b * x2.array();
        const auto lin = apply(A, mix);
        const auto expect = (a * ax.array() + b * apply(A, x2).array()).eval();
        CHECK((lin.array() - expect).abs().maxCoeff()
              <= 1e-10 * (1 + expect.abs().maxCoeff()));

        Code<double> zmix(H, W, D);
        zmix.array() = a * z1.array() + b * z2.array();
        const auto lin_t = apply_adjoint(A, zmix);
        const auto expect_t = (a * atz.array() + b * apply_adjoint(A, z2).array()).eval();
        CHECK((lin_t.array() - expect_t).abs().maxCoeff()
              <= 1e-10 * (1 + expect_t.abs().maxCoeff()));
    }
}

TEST_CASE("kernel gradients match finite differences of the bilinear forms")
{
    std::mt19937_64 rng(31);
    const auto A = oracle::random_dict(2, 2, 3, rng);
    const auto x = oracle::random_field<SignalTag>(5, 4, 2, rng);
    const auto z = oracle::random_field<CodeTag>(5, 4, 2, rng);
    const auto g_apply = apply_dictionary_gradient(A, x, z);
    const auto g_adj = adjoint_dictionary_gradient(A, z, x);
    // Both forms are linear in A, so a unit probe gives the exact partial.
    for (Index n = 0; n < A.coeffs().size(); ++n)
    {
        Dictionary<double> e = Dictionary<double>::zeros_like(A);
        e.coeffs()[n] = 1.0;
        CHECK(g_apply.coeffs()[n] == doctest::Approx(dot(oracle::apply(e, x), z)).epsilon(1e-12));
        CHECK(g_adj.coeffs()[n]
              == doctest::Approx(dot(x, oracle::apply_adjoint(e, z))).epsilon(1e-12));
    }
}

TEST_CASE("operator_norm_sq: scalar operator, zero operator, determinism")
{
    Dictionary<double> two(1, 1, 1);
    two.coeffs()[0] = 2.0;
    const auto est = operator_norm_sq(two, 4, 4);
    CHECK(est.value == doctest::Approx(4.0).epsilon(1e-12));
    CHECK_FALSE(est.degenerate);

    Dictionary<double> zero(2, 1, 3);
    const auto z = operator_norm_sq(zero, 4, 4);
    CHECK(z.value == 0.0);
    CHECK(z.degenerate);

    std::mt19937_64 rng(37);
    const auto A = oracle::random_dict(2, 2, 3, rng);
    CHECK(operator_norm_sq(A, 6, 6, 20, 9).value == operator_norm_sq(A, 6, 6, 20, 9).value);
    CHECK_THROWS_AS(operator_norm_sq(A, 6, 6, 0, 9), InvalidArgument);
}

TEST_CASE("operator_norm_sq: within 1% of the dense eigensolver and monotone in iters")
{
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial)
    {
        const auto A = oracle::random_dict(2, 2, 3, rng);
        const Mat G = oracle::gram_matrix(A, 4, 4);
        Eigen::SelfAdjointEigenSolver<Mat> eig(G);
        const double top = eig.eigenvalues().maxCoeff();
        const double est = operator_norm_sq(A, 4, 4).value;
        CHECK(est <= top * (1 + 1e-12));
        CHECK(est >= 0.99 * top);

        double prev = 0;
        for (int iters = 1; iters <= 30; ++iters)
        {
            const double v = operator_norm_sq(A, 4, 4, iters, 3).value;
            CHECK(v >= prev);
            prev = v;
        }
    }
}
