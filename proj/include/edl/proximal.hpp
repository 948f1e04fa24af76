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

// Shrinkage, residual reweighting and the sparse-coding objectives:
//   vanilla  ||x - A*z||_2^2 + lambda ||z||_1
//   robust   ||x - A*z||_1   + lambda ||z||_1
//   elastic  beta/2 ||x - A*z||_2^2 + (1 - beta)/2 ||x - A*z||_1 + lambda ||z||_1
// and the quadratic majorizer U(z, z*) of the l1 fidelity R(z) = ||x - A*z||_1.

#include <cmath>
#include <string>

#include "edl/conv_ops.hpp"
#include "edl/errors.hpp"
#include "edl/tensor.hpp"

namespace edl
{

template <typename Scalar>
struct SolverConfig
{
    Scalar lambda = Scalar(0.1);
    Scalar beta = Scalar(1);
    Scalar gamma = Scalar(0.1);
    int steps = 10;
    Scalar epsilon = Scalar(1e-3);

    void validate() const
    {
        if (!(lambda >= 0) || !std::isfinite(lambda))
        {
            throw InvalidArgument("lambda must be finite and >= 0");
        }
        if (!(beta >= 0 && beta <= 1))
        {
            throw InvalidArgument("beta must lie in [0, 1], got " + std::to_string(beta));
        }
        if (!(gamma > 0) || !std::isfinite(gamma))
        {
            throw InvalidArgument("gamma must be finite and > 0");
        }
        if (steps < 1)
        {
            throw InvalidArgument("steps must be >= 1");
        }
        if (!(epsilon > 0) || !std::isfinite(epsilon))
        {
            throw InvalidArgument("epsilon must be finite and > 0");
        }
    }
};

namespace detail
{
inline void require_beta(double beta)
{
    if (!(beta >= 0 && beta <= 1))
    {
        throw InvalidArgument("beta must lie in [0, 1], got " + std::to_string(beta));
    }
}
}  // namespace detail

template <typename Scalar>
Scalar soft_threshold(Scalar v, Scalar tau)
{
    if (!(tau >= 0))
    {
        throw InvalidArgument("soft_threshold: tau must be >= 0");
    }
    const Scalar mag = std::abs(v) - tau;
    return mag > 0 ? std::copysign(mag, v) : Scalar(0);
}

/// Elementwise sign(v) * max(|v| - tau, 0).
template <typename Scalar, typename Tag>
Field<Scalar, Tag> soft_threshold(const Field<Scalar, Tag>& v, Scalar tau)
{
    if (!(tau >= 0))
    {
        throw InvalidArgument("soft_threshold: tau must be >= 0");
    }
    Field<Scalar, Tag> out = Field<Scalar, Tag>::zeros_like(v);
    out.array() = v.array().sign() * (v.array().abs() - tau).max(Scalar(0));
    return out;
}

/// x - A*(z).
template <typename Scalar>
Signal<Scalar> residual(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                        const Code<Scalar>& z)
{
    Signal<Scalar> r = apply_adjoint(dict, z);
    if (!r.same_shape(x))
    {
        throw ShapeError("residual: signal " + x.shape() + " vs reconstruction " + r.shape());
    }
    r.array() = x.array() - r.array();
    return r;
}

/// w = 1 / (2 (|r| + epsilon)) for a precomputed residual r.
template <typename Scalar>
Signal<Scalar> weights_from_residual(const Signal<Scalar>& r, Scalar epsilon)
{
    if (!(epsilon > 0))
    {
        throw InvalidArgument("epsilon must be > 0");
    }
    Signal<Scalar> w = Signal<Scalar>::zeros_like(r);
    w.array() = Scalar(0.5) / (r.array().abs() + epsilon);
    return w;
}

template <typename Scalar>
Signal<Scalar> residual_weights(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                                const Code<Scalar>& z, Scalar epsilon)
{
    return weights_from_residual(residual(x, dict, z), epsilon);
}

/// beta * 1 + (1 - beta) * w.
template <typename Scalar>
Signal<Scalar> elastic_reweight(const Signal<Scalar>& w, Scalar beta)
{
    detail::require_beta(beta);
    Signal<Scalar> m = Signal<Scalar>::zeros_like(w);
    m.array() = beta + (Scalar(1) - beta) * w.array();
    return m;
}

template <typename Scalar>
Scalar vanilla_objective(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                         const Code<Scalar>& z, Scalar lambda)
{
    return squared_norm(residual(x, dict, z)) + lambda * l1_norm(z);
}

/// R(z) = ||x - A*(z)||_1.
template <typename Scalar>
Scalar robust_fidelity(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                       const Code<Scalar>& z)
{
    return l1_norm(residual(x, dict, z));
}

template <typename Scalar>
Scalar robust_objective(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                        const Code<Scalar>& z, Scalar lambda)
{
    return robust_fidelity(x, dict, z) + lambda * l1_norm(z);
}

template <typename Scalar>
Scalar elastic_objective(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                         const Code<Scalar>& z, Scalar lambda, Scalar beta)
{
    detail::require_beta(beta);
    const Signal<Scalar> r = residual(x, dict, z);
    return beta / 2 * squared_norm(r) + (Scalar(1) - beta) / 2 * l1_norm(r)
           + lambda * l1_norm(z);
}

/// U(z, z*) = ||w^{1/2} ⊙ (x - A*z)||_2^2 + sum (|x - A*z*| + epsilon) / 2, w taken at z*.
///
/// Per entry this is the tangent bound |a| <= a^2 / (2c) + c / 2 with
/// c = |b| + epsilon, so U(z, z*) >= R(z) holds exactly and
/// 0 <= U(z*, z*) - R(z*) <= epsilon / 2 per entry. As epsilon -> 0 the
/// constant tends to R(z*) / 2, the value that makes U(z*, z*) = R(z*).
template <typename Scalar>
Scalar local_upper_bound(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                         const Code<Scalar>& z, const Code<Scalar>& z_star, Scalar epsilon)
{
    const Signal<Scalar> r_star = residual(x, dict, z_star);
    const Signal<Scalar> w = weights_from_residual(r_star, epsilon);
    const Signal<Scalar> r = residual(x, dict, z);
    return (w.array() * r.array().square()).sum() + (r_star.array().abs() + epsilon).sum() / 2;
}

}  // namespace edl
