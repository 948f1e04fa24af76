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

// Influence-function analysis of the single-step reweighted residual.
//
// With E(x) = x - A*(A(x)) and w = 1 / (2(|E(x)| + eps)):
//   vanilla  P(x) = E(x)
//   robust   P(x) = w ⊙ E(x)
//   elastic  P(x) = (beta + (1 - beta) w) ⊙ E(x)
// and IF(delta; P, x) = lim_{t->0+} (P(t delta + (1 - t) x) - P(x)) / t.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "edl/conv_ops.hpp"
#include "edl/errors.hpp"
#include "edl/tensor.hpp"

namespace edl
{

struct OperatorKind
{
    enum class Kind
    {
        Vanilla,
        Robust,
        Elastic
    };

    Kind kind = Kind::Vanilla;
    double beta = 1.0;
    double epsilon = 0.01;

    static OperatorKind vanilla(double epsilon = 0.01) { return {Kind::Vanilla, 1.0, epsilon}; }
    static OperatorKind robust(double epsilon = 0.01) { return {Kind::Robust, 0.0, epsilon}; }
    static OperatorKind elastic(double beta, double epsilon = 0.01)
    {
        return {Kind::Elastic, beta, epsilon};
    }

    void validate() const
    {
        if (!(epsilon > 0))
        {
            throw InvalidArgument("operator epsilon must be > 0");
        }
        if (!(beta >= 0 && beta <= 1))
        {
            throw InvalidArgument("operator beta must lie in [0, 1]");
        }
    }
};

inline const char* to_string(OperatorKind::Kind kind)
{
    switch (kind)
    {
        case OperatorKind::Kind::Vanilla:
            return "vanilla";
        case OperatorKind::Kind::Robust:
            return "robust";
        case OperatorKind::Kind::Elastic:
            return "elastic";
    }
    return "unknown";
}

/// E(x) = x - A*(A(x)).
template <typename Scalar>
Signal<Scalar> residual_operator(const Dictionary<Scalar>& dict, const Signal<Scalar>& x)
{
    Signal<Scalar> e = apply_adjoint(dict, apply(dict, x));
    e.array() = x.array() - e.array();
    return e;
}

namespace detail
{
// Per-entry multiplier of E(x) in P(x).
template <typename Scalar>
Signal<Scalar> operator_gain(const OperatorKind& kind, const Signal<Scalar>& e)
{
    const auto eps = static_cast<Scalar>(kind.epsilon);
    const auto beta = static_cast<Scalar>(kind.beta);
    Signal<Scalar> gain = Signal<Scalar>::zeros_like(e);
    switch (kind.kind)
    {
        case OperatorKind::Kind::Vanilla:
            gain.array().setOnes();
            break;
        case OperatorKind::Kind::Robust:
            gain.array() = Scalar(0.5) / (e.array().abs() + eps);
            break;
        case OperatorKind::Kind::Elastic:
            gain.array() = beta + (Scalar(1) - beta) * Scalar(0.5) / (e.array().abs() + eps);
            break;
    }
    return gain;
}
}  // namespace detail

template <typename Scalar>
Signal<Scalar> apply_operator(const OperatorKind& kind, const Dictionary<Scalar>& dict,
                              const Signal<Scalar>& x)
{
    kind.validate();
    Signal<Scalar> e = residual_operator(dict, x);
    e.array() *= detail::operator_gain(kind, e).array();
    return e;
}

/// Closed-form influence at x toward delta, w evaluated at x:
///   vanilla E(delta - x), robust 2 eps w^2 ⊙ E(delta - x),
///   elastic (beta + 2 (1 - beta) eps w^2) ⊙ E(delta - x).
template <typename Scalar>
Signal<Scalar> influence_closed_form(const OperatorKind& kind, const Dictionary<Scalar>& dict,
                                     const Signal<Scalar>& x, const Signal<Scalar>& delta)
{
    kind.validate();
    if (!x.same_shape(delta))
    {
        throw ShapeError("influence: x " + x.shape() + " vs delta " + delta.shape());
    }
    const auto eps = static_cast<Scalar>(kind.epsilon);
    const auto beta = static_cast<Scalar>(kind.beta);

    Signal<Scalar> direction = Signal<Scalar>::zeros_like(x);
    direction.array() = delta.array() - x.array();
    Signal<Scalar> influence = residual_operator(dict, direction);
    if (kind.kind == OperatorKind::Kind::Vanilla)
    {
        return influence;
    }
    const Signal<Scalar> e = residual_operator(dict, x);
    const auto w = (Scalar(0.5) / (e.array().abs() + eps)).eval();
    const auto damping = (2 * eps * w.square()).eval();
    if (kind.kind == OperatorKind::Kind::Robust)
    {
        influence.array() *= damping;
    }
    else
    {
        influence.array() *= beta + (Scalar(1) - beta) * damping;
    }
    return influence;
}

template <typename Scalar>
struct NumericInfluence
{
    Signal<Scalar> quotient;
    /// Flat indices where sign(E(x_t)) != sign(E(x)); the closed form does not
    /// describe the quotient there.
    std::vector<Index> sign_flips;
};

/// Difference quotient (P(t delta + (1 - t) x) - P(x)) / t for 0 < t <= 0.1.
template <typename Scalar>
NumericInfluence<Scalar> influence_numeric(const OperatorKind& kind, const Dictionary<Scalar>& dict,
                                           const Signal<Scalar>& x, const Signal<Scalar>& delta,
                                           Scalar t)
{
    kind.validate();
    if (!(t > 0 && t <= Scalar(0.1)))
    {
        throw InvalidArgument("influence_numeric: t must lie in (0, 0.1]");
    }
    if (!x.same_shape(delta))
    {
        throw ShapeError("influence: x " + x.shape() + " vs delta " + delta.shape());
    }
    Signal<Scalar> xt = Signal<Scalar>::zeros_like(x);
    xt.array() = t * delta.array() + (Scalar(1) - t) * x.array();

    const Signal<Scalar> e = residual_operator(dict, x);
    const Signal<Scalar> et = residual_operator(dict, xt);

    NumericInfluence<Scalar> out;
    out.quotient = Signal<Scalar>::zeros_like(x);
    out.quotient.array() = (et.array() * detail::operator_gain(kind, et).array()
                            - e.array() * detail::operator_gain(kind, e).array())
                           / t;
    for (Index n = 0; n < e.size(); ++n)
    {
        const Scalar a = e.array().data()[n];
        const Scalar b = et.array().data()[n];
        if ((a > 0) != (b > 0) || (a < 0) != (b < 0))
        {
            out.sign_flips.push_back(n);
        }
    }
    return out;
}

template <typename Scalar>
struct InfluenceConvergence
{
    std::vector<Scalar> relative_errors;  // one per t, over the stable entries
    Scalar slope = 0;                      // least-squares slope of log10 error vs log10 t
    Index stable_entries = 0;
    Index excluded_entries = 0;
};

/// Measures how fast the difference quotients approach the closed form.
/// An entry is stable when the largest step moves its residual by at most
/// `margin` of its magnitude, |E(x)| >= t_max |E(delta - x)| / margin, and no
/// quotient reported a sign flip there. Errors are ||numeric - closed|| /
/// ||closed|| restricted to stable entries.
template <typename Scalar>
InfluenceConvergence<Scalar> influence_convergence(const OperatorKind& kind,
                                                   const Dictionary<Scalar>& dict,
                                                   const Signal<Scalar>& x,
                                                   const Signal<Scalar>& delta,
                                                   std::span<const Scalar> ts,
                                                   Scalar margin = Scalar(0.1))
{
    if (ts.size() < 2)
    {
        throw InvalidArgument("influence_convergence: need at least two step sizes");
    }
    const Signal<Scalar> closed = influence_closed_form(kind, dict, x, delta);
    const Signal<Scalar> e = residual_operator(dict, x);
    Signal<Scalar> direction = Signal<Scalar>::zeros_like(x);
    direction.array() = delta.array() - x.array();
    const Signal<Scalar> moved = residual_operator(dict, direction);

    Scalar t_max = 0;
    for (Scalar t : ts) t_max = std::max(t_max, t);
    Eigen::Array<bool, Eigen::Dynamic, 1> stable =
        e.flat().array().abs() * margin >= t_max * moved.flat().array().abs();

    std::vector<Signal<Scalar>> quotients;
    for (Scalar t : ts)
    {
        auto num = influence_numeric(kind, dict, x, delta, t);
        for (Index n : num.sign_flips) stable(n) = false;
        quotients.push_back(std::move(num.quotient));
    }

    InfluenceConvergence<Scalar> out;
    out.stable_entries = stable.count();
    out.excluded_entries = x.size() - out.stable_entries;
    const auto mask = stable.template cast<Scalar>();
    const Scalar ref = std::sqrt((closed.flat().array().square() * mask).sum());

    Scalar sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i)
    {
        const Scalar err =
            std::sqrt(((quotients[i].flat().array() - closed.flat().array()).square() * mask).sum());
        const Scalar rel = ref > 0 ? err / ref : err;
        out.relative_errors.push_back(rel);
        const Scalar lx = std::log10(ts[i]), ly = std::log10(rel);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const auto n = static_cast<Scalar>(ts.size());
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return out;
}

}  // namespace edl
