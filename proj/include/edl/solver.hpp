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

// Reweighted iterative shrinkage-thresholding (RISTA) for the elastic
// sparse-coding objective. beta = 1 is plain ISTA on the half-scaled l2
// problem, beta = 0 minimizes the l1-fidelity problem through the quadratic
// majorizer of proximal.hpp.

#include <cstdint>
#include <string>
#include <vector>

#include "edl/conv_ops.hpp"
#include "edl/errors.hpp"
#include "edl/proximal.hpp"
#include "edl/tensor.hpp"

namespace edl
{

enum class SolverMode
{
    Vanilla,
    Robust,
    Elastic
};

inline const char* to_string(SolverMode mode)
{
    switch (mode)
    {
        case SolverMode::Vanilla:
            return "vanilla";
        case SolverMode::Robust:
            return "robust";
        case SolverMode::Elastic:
            return "elastic";
    }
    return "unknown";
}

template <typename Scalar>
struct TraceEntry
{
    int step = 0;
    Scalar elastic_objective = 0;  // at the solve's beta
    Scalar robust_fidelity = 0;    // ||x - A*z_t||_1
    Scalar l2_fidelity = 0;        // ||x - A*z_t||_2^2
    Scalar sparsity = 0;           // ||z_t||_1
    Scalar density = 0;            // fraction of nonzero code entries
    Scalar upper_bound = 0;        // U(z_t, z_{t-1}); U(z_0, z_0) on step 0
    Scalar tangent_bound = 0;      // U(z_t, z_t)
};

template <typename Scalar>
struct IterationTrace
{
    Scalar lambda = 0;
    Scalar beta = 1;
    Scalar epsilon = 0;
    std::vector<TraceEntry<Scalar>> entries;

    std::size_t size() const noexcept { return entries.size(); }
};

template <typename Scalar>
struct SolveResult
{
    Code<Scalar> code;
    IterationTrace<Scalar> trace;
};

/// z_0 = A(x).
template <typename Scalar>
Code<Scalar> init_code(const Signal<Scalar>& x, const Dictionary<Scalar>& dict)
{
    return apply(dict, x);
}

/// Step size 0.9 / (||A||^2 (beta + (1 - beta) max w_0)), the inverse Lipschitz
/// constant of the reweighted quadratic at the initial code, with margin.
template <typename Scalar>
Scalar default_step_size(const Signal<Scalar>& x, const Dictionary<Scalar>& dict, Scalar beta,
                         Scalar epsilon, int power_iters = 50, std::uint64_t seed = 0)
{
    detail::require_beta(beta);
    const NormEstimate<Scalar> norm = operator_norm_sq(dict, x.rows(), x.cols(), power_iters, seed);
    if (norm.degenerate || !(norm.value > 0))
    {
        return Scalar(1);
    }
    const Scalar max_w = residual_weights(x, dict, init_code(x, dict), epsilon).array().maxCoeff();
    const Scalar curvature = std::max(beta, (Scalar(1) - beta) * max_w + beta);
    return Scalar(0.9) / (norm.value * curvature);
}

namespace detail
{
template <typename Scalar>
struct StepParts
{
    Signal<Scalar> residual;  // x - A*(z_t)
    Code<Scalar> preactivation;  // z_t + gamma A(r_t)
    Code<Scalar> next;
};

template <typename Scalar>
StepParts<Scalar> rista_step_parts(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                                   const Code<Scalar>& z, const SolverConfig<Scalar>& cfg)
{
    StepParts<Scalar> parts;
    parts.residual = residual(x, dict, z);
    Signal<Scalar> r = parts.residual;
    if (cfg.beta < Scalar(1))
    {
        const Signal<Scalar> w = weights_from_residual(parts.residual, cfg.epsilon);
        r.array() *= cfg.beta + (Scalar(1) - cfg.beta) * w.array();
    }
    parts.preactivation = apply(dict, r);
    parts.preactivation.array() = z.array() + cfg.gamma * parts.preactivation.array();
    parts.next = soft_threshold(parts.preactivation, cfg.lambda * cfg.gamma);
    return parts;
}
}  // namespace detail

/// One RISTA iteration:
///   w = 1 / (2(|x - A*z_t| + eps)),  r = (beta + (1 - beta) w) ⊙ (x - A*z_t),
///   z_{t+1} = T_{lambda gamma}(z_t + gamma A(r)).
template <typename Scalar>
Code<Scalar> rista_step(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                        const Code<Scalar>& z, const SolverConfig<Scalar>& cfg)
{
    cfg.validate();
    return detail::rista_step_parts(x, dict, z, cfg).next;
}

namespace detail
{
template <typename Scalar>
TraceEntry<Scalar> trace_entry(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                               const Code<Scalar>& z, const Code<Scalar>& z_prev,
                               const SolverConfig<Scalar>& cfg, int step)
{
    const Signal<Scalar> r = residual(x, dict, z);
    TraceEntry<Scalar> e;
    e.step = step;
    e.robust_fidelity = l1_norm(r);
    e.l2_fidelity = squared_norm(r);
    e.sparsity = l1_norm(z);
    e.density = density(z);
    e.elastic_objective = cfg.beta / 2 * e.l2_fidelity
                          + (Scalar(1) - cfg.beta) / 2 * e.robust_fidelity
                          + cfg.lambda * e.sparsity;
    e.upper_bound = local_upper_bound(x, dict, z, z_prev, cfg.epsilon);
    e.tangent_bound = local_upper_bound(x, dict, z, z, cfg.epsilon);
    return e;
}
}  // namespace detail

/// Runs z_0 = A(x) followed by cfg.steps RISTA iterations, tracing every iterate.
template <typename Scalar>
SolveResult<Scalar> solve(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                          const SolverConfig<Scalar>& cfg)
{
    cfg.validate();
    SolveResult<Scalar> result;
    result.trace.lambda = cfg.lambda;
    result.trace.beta = cfg.beta;
    result.trace.epsilon = cfg.epsilon;
    result.trace.entries.reserve(cfg.steps + 1);

    Code<Scalar> z = init_code(x, dict);
    result.trace.entries.push_back(detail::trace_entry(x, dict, z, z, cfg, 0));
    for (int t = 0; t < cfg.steps; ++t)
    {
        Code<Scalar> next = [&] {
            try
            {
                return rista_step(x, dict, z, cfg);
            }
            catch (const InvalidArgument& e)
            {
                throw DivergenceError(std::string("non-finite iterate: ") + e.what(), t + 1);
            }
        }();
        if (!next.all_finite())
        {
            throw DivergenceError("non-finite code entries", t + 1);
        }
        result.trace.entries.push_back(detail::trace_entry(x, dict, next, z, cfg, t + 1));
        z = std::move(next);
    }
    result.code = std::move(z);
    return result;
}

/// Objective that the solver in `mode` is guaranteed to decrease, read off a
/// trace entry: beta/2 l2 + (1 - beta)/2 l1 + lambda ||z||_1 at beta = 1 for
/// vanilla, beta = 0 for robust and the trace's beta for elastic.
template <typename Scalar>
Scalar mode_objective(const IterationTrace<Scalar>& trace, const TraceEntry<Scalar>& e,
                      SolverMode mode)
{
    switch (mode)
    {
        case SolverMode::Vanilla:
            return e.l2_fidelity / 2 + trace.lambda * e.sparsity;
        case SolverMode::Robust:
            return e.robust_fidelity / 2 + trace.lambda * e.sparsity;
        case SolverMode::Elastic:
            break;
    }
    return e.elastic_objective;
}

struct DescentReport
{
    bool ok = true;
    /// Step whose objective first exceeded its predecessor; -1 when none.
    int first_violation = -1;
};

template <typename Scalar>
DescentReport check_descent(const IterationTrace<Scalar>& trace, SolverMode mode,
                            Scalar tolerance = Scalar(1e-8))
{
    if (trace.entries.empty())
    {
        throw InvalidArgument("check_descent: empty trace");
    }
    DescentReport report;
    for (std::size_t t = 1; t < trace.entries.size(); ++t)
    {
        const Scalar prev = mode_objective(trace, trace.entries[t - 1], mode);
        const Scalar cur = mode_objective(trace, trace.entries[t], mode);
        if (cur > prev + tolerance)
        {
            report.ok = false;
            report.first_violation = trace.entries[t].step;
            break;
        }
    }
    return report;
}

}  // namespace edl
