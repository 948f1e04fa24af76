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

// Multi-channel convolution operator A (signal -> code) and its adjoint A*
// (code -> signal). Stride 1, zero padding, "same" output size, so the pair
// is an exact adjoint: <A x, z> = <x, A* z>.

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <random>

#include "edl/errors.hpp"
#include "edl/tensor.hpp"

namespace edl
{

namespace detail
{

// out[i, j] += sum_{p,q} weight[p, q] * in[i + sign*p, j + sign*q], zero padded.
template <typename Scalar, typename Out, typename In, typename Kernel>
void accumulate_shifted(Out& out, const In& in, const Kernel& kernel, int sign)
{
    const Index rows = in.rows();
    const Index cols = in.cols();
    const Index r = kernel.rows() / 2;
    for (Index q = -r; q <= r; ++q)
    {
        const Index dj = sign * q;
        const Index j0 = std::max<Index>(0, -dj);
        const Index j1 = std::min<Index>(cols, cols - dj);
        if (j1 <= j0)
        {
            continue;
        }
        for (Index p = -r; p <= r; ++p)
        {
            const Scalar weight = kernel(p + r, q + r);
            if (weight == Scalar(0))
            {
                continue;
            }
            const Index di = sign * p;
            const Index i0 = std::max<Index>(0, -di);
            const Index i1 = std::min<Index>(rows, rows - di);
            if (i1 <= i0)
            {
                continue;
            }
            out.block(i0, j0, i1 - i0, j1 - j0).noalias()
                += weight * in.block(i0 + di, j0 + dj, i1 - i0, j1 - j0);
        }
    }
}

template <typename Derived>
void require_odd_square(const Eigen::MatrixBase<Derived>& kernel)
{
    if (kernel.rows() != kernel.cols() || kernel.rows() % 2 == 0)
    {
        throw InvalidArgument("kernel must be square with odd size, got "
                              + std::to_string(kernel.rows()) + "x"
                              + std::to_string(kernel.cols()));
    }
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what)
{
    if (!m.allFinite())
    {
        throw InvalidArgument(std::string(what) + " contains non-finite entries");
    }
}

}  // namespace detail

/// (kernel ⋆ plane)[i, j] = sum_{p,q} plane[i + p, j + q] * kernel[p, q].
template <typename PlaneDerived, typename KernelDerived>
Plane<typename PlaneDerived::Scalar> correlate2d(const Eigen::MatrixBase<PlaneDerived>& plane,
                                                 const Eigen::MatrixBase<KernelDerived>& kernel)
{
    using Scalar = typename PlaneDerived::Scalar;
    detail::require_odd_square(kernel);
    detail::require_finite(plane, "plane");
    detail::require_finite(kernel, "kernel");
    Plane<Scalar> out = Plane<Scalar>::Zero(plane.rows(), plane.cols());
    detail::accumulate_shifted<Scalar>(out, plane.derived(), kernel.derived(), +1);
    return out;
}

/// (kernel * plane)[i, j] = sum_{p,q} plane[i - p, j - q] * kernel[p, q].
template <typename PlaneDerived, typename KernelDerived>
Plane<typename PlaneDerived::Scalar> transpose_convolve2d(
    const Eigen::MatrixBase<PlaneDerived>& plane, const Eigen::MatrixBase<KernelDerived>& kernel)
{
    using Scalar = typename PlaneDerived::Scalar;
    detail::require_odd_square(kernel);
    detail::require_finite(plane, "plane");
    detail::require_finite(kernel, "kernel");
    Plane<Scalar> out = Plane<Scalar>::Zero(plane.rows(), plane.cols());
    detail::accumulate_shifted<Scalar>(out, plane.derived(), kernel.derived(), -1);
    return out;
}

/// A(x): code channel d = sum_c alpha_dc ⋆ xi_c.
template <typename Scalar>
Code<Scalar> apply(const Dictionary<Scalar>& dict, const Signal<Scalar>& x)
{
    if (dict.in_channels() != x.channels())
    {
        throw ShapeError("apply: dictionary expects " + std::to_string(dict.in_channels())
                         + " input channels, signal has " + std::to_string(x.channels()));
    }
    if (!x.all_finite() || !dict.all_finite())
    {
        throw InvalidArgument("apply: non-finite input");
    }
    Code<Scalar> z(x.rows(), x.cols(), dict.out_channels());
    for (Index d = 0; d < dict.out_channels(); ++d)
    {
        auto out = z.plane(d);
        for (Index c = 0; c < dict.in_channels(); ++c)
        {
            detail::accumulate_shifted<Scalar>(out, x.plane(c), dict.atom(d, c), +1);
        }
    }
    return z;
}

/// A*(z): signal channel c = sum_d alpha_dc * eta_d.
template <typename Scalar>
Signal<Scalar> apply_adjoint(const Dictionary<Scalar>& dict, const Code<Scalar>& z)
{
    if (dict.out_channels() != z.channels())
    {
        throw ShapeError("apply_adjoint: dictionary has " + std::to_string(dict.out_channels())
                         + " output channels, code has " + std::to_string(z.channels()));
    }
    if (!z.all_finite() || !dict.all_finite())
    {
        throw InvalidArgument("apply_adjoint: non-finite input");
    }
    Signal<Scalar> x(z.rows(), z.cols(), dict.in_channels());
    for (Index c = 0; c < dict.in_channels(); ++c)
    {
        auto out = x.plane(c);
        for (Index d = 0; d < dict.out_channels(); ++d)
        {
            detail::accumulate_shifted<Scalar>(out, z.plane(d), dict.atom(d, c), -1);
        }
    }
    return x;
}

/// Gradient of <out, kernel ⋆ in> with respect to the kernel:
/// G[p, q] = sum_{i,j} out[i, j] * in[i + p, j + q]. The same expression is the
/// kernel gradient of <in, kernel * out>, which covers both A and A*.
template <typename InDerived, typename OutDerived>
Plane<typename InDerived::Scalar> correlation_kernel_gradient(
    const Eigen::MatrixBase<InDerived>& in, const Eigen::MatrixBase<OutDerived>& out,
    Index kernel_size)
{
    using Scalar = typename InDerived::Scalar;
    const Index rows = in.rows();
    const Index cols = in.cols();
    const Index r = kernel_size / 2;
    Plane<Scalar> grad = Plane<Scalar>::Zero(kernel_size, kernel_size);
    for (Index q = -r; q <= r; ++q)
    {
        const Index j0 = std::max<Index>(0, -q);
        const Index j1 = std::min<Index>(cols, cols - q);
        for (Index p = -r; p <= r; ++p)
        {
            const Index i0 = std::max<Index>(0, -p);
            const Index i1 = std::min<Index>(rows, rows - p);
            if (i1 <= i0 || j1 <= j0)
            {
                continue;
            }
            grad(p + r, q + r) = out.block(i0, j0, i1 - i0, j1 - j0)
                                     .cwiseProduct(in.block(i0 + p, j0 + q, i1 - i0, j1 - j0))
                                     .sum();
        }
    }
    return grad;
}

/// Kernel-bank gradient of <code_weights, A(x)>.
template <typename Scalar>
Dictionary<Scalar> apply_dictionary_gradient(const Dictionary<Scalar>& dict,
                                             const Signal<Scalar>& x,
                                             const Code<Scalar>& code_weights)
{
    Dictionary<Scalar> grad = Dictionary<Scalar>::zeros_like(dict);
    for (Index d = 0; d < dict.out_channels(); ++d)
    {
        for (Index c = 0; c < dict.in_channels(); ++c)
        {
            grad.atom(d, c) =
                correlation_kernel_gradient(x.plane(c), code_weights.plane(d), dict.kernel_size());
        }
    }
    return grad;
}

/// Kernel-bank gradient of <signal_weights, A*(z)>.
template <typename Scalar>
Dictionary<Scalar> adjoint_dictionary_gradient(const Dictionary<Scalar>& dict,
                                               const Code<Scalar>& z,
                                               const Signal<Scalar>& signal_weights)
{
    Dictionary<Scalar> grad = Dictionary<Scalar>::zeros_like(dict);
    for (Index d = 0; d < dict.out_channels(); ++d)
    {
        for (Index c = 0; c < dict.in_channels(); ++c)
        {
            grad.atom(d, c) = correlation_kernel_gradient(signal_weights.plane(c), z.plane(d),
                                                          dict.kernel_size());
        }
    }
    return grad;
}

template <typename Scalar>
struct NormEstimate
{
    Scalar value = 0;
    /// Set when the operator annihilated the iterate (A identically zero).
    bool degenerate = false;
};

/// Power-iteration estimate of the largest eigenvalue of A* A on H x W
/// signals. Each iterate reports the Rayleigh quotient of A*A at (A*A)^n v0,
/// which is non-decreasing in n for a positive semi-definite operator.
template <typename Scalar>
NormEstimate<Scalar> operator_norm_sq(const Dictionary<Scalar>& dict, Index rows, Index cols,
                                      int iters = 50, std::uint64_t seed = 0)
{
    if (iters < 1)
    {
        throw InvalidArgument("operator_norm_sq: iters must be >= 1");
    }
    std::mt19937_64 rng(seed);
    Signal<Scalar> v(rows, cols, dict.in_channels());
    fill_normal(v, rng);
    v.array() /= std::sqrt(squared_norm(v));

    NormEstimate<Scalar> est;
    for (int n = 0; n < iters; ++n)
    {
        Signal<Scalar> next = apply_adjoint(dict, apply(dict, v));
        const Scalar norm = std::sqrt(squared_norm(next));
        if (!(norm > Scalar(0)))
        {
            est.value = 0;
            est.degenerate = true;
            return est;
        }
        est.value = std::max(est.value, dot(v, next));
        v.array() = next.array() / norm;
    }
    return est;
}

}  // namespace edl
