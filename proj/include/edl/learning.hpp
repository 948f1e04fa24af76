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

// The unrolled RISTA layer as a differentiable map (x, A, beta) -> z_T, with a
// hand-written reverse pass, plus the small pieces needed to train and attack
// it: dictionary updates, a linear classifier head and FGSM.
//
// Subgradient conventions: d soft_threshold(v, tau) / dv is 0 on |v| <= tau and
// 1 elsewhere; d|r| / dr = sign(r) with sign(0) = 0. The step size gamma is a
// constant of the layer.

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "edl/conv_ops.hpp"
#include "edl/errors.hpp"
#include "edl/proximal.hpp"
#include "edl/solver.hpp"
#include "edl/tensor.hpp"

namespace edl
{

template <typename Scalar>
struct LayerGradients
{
    Signal<Scalar> grad_x;
    Dictionary<Scalar> grad_A;
    Scalar grad_beta = 0;
};

/// Forward intermediates of the unrolled layer.
template <typename Scalar>
struct LayerTape
{
    std::vector<Code<Scalar>> codes;           // z_0 .. z_T
    std::vector<Signal<Scalar>> residuals;     // x - A*(z_t), t < T
    std::vector<Code<Scalar>> preactivations;  // z_t + gamma A(r_t), t < T

    const Code<Scalar>& output() const { return codes.back(); }
};

template <typename Scalar>
LayerTape<Scalar> layer_forward(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                                const SolverConfig<Scalar>& cfg)
{
    cfg.validate();
    LayerTape<Scalar> tape;
    tape.codes.reserve(cfg.steps + 1);
    tape.codes.push_back(init_code(x, dict));
    for (int t = 0; t < cfg.steps; ++t)
    {
        auto parts = detail::rista_step_parts(x, dict, tape.codes.back(), cfg);
        if (!parts.next.all_finite())
        {
            throw DivergenceError("layer forward produced non-finite codes", t + 1);
        }
        tape.residuals.push_back(std::move(parts.residual));
        tape.preactivations.push_back(std::move(parts.preactivation));
        tape.codes.push_back(std::move(parts.next));
    }
    return tape;
}

/// Reverse pass over a recorded tape.
template <typename Scalar>
LayerGradients<Scalar> layer_backward(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                                      const SolverConfig<Scalar>& cfg,
                                      const LayerTape<Scalar>& tape,
                                      const Code<Scalar>& cotangent)
{
    if (!cotangent.same_shape(tape.output()))
    {
        throw ShapeError("layer_vjp: cotangent " + cotangent.shape() + " vs code "
                         + tape.output().shape());
    }
    const Scalar tau = cfg.lambda * cfg.gamma;
    LayerGradients<Scalar> grads{Signal<Scalar>::zeros_like(x), Dictionary<Scalar>::zeros_like(dict),
                                 Scalar(0)};

    Code<Scalar> z_bar = cotangent;
    for (int t = cfg.steps - 1; t >= 0; --t)
    {
        const Signal<Scalar>& r = tape.residuals[t];
        const Code<Scalar>& u = tape.preactivations[t];

        Code<Scalar> u_bar = z_bar;
        u_bar.array() = (u.array().abs() > tau).select(z_bar.array(), Scalar(0));

        const auto w = (Scalar(0.5) / (r.array().abs() + cfg.epsilon)).eval();
        const auto m = (cfg.beta + (Scalar(1) - cfg.beta) * w).eval();
        Signal<Scalar> s = r;
        s.array() *= m;

        // u = z_t + gamma A(s)
        Signal<Scalar> s_bar = apply_adjoint(dict, u_bar);
        s_bar.array() *= cfg.gamma;
        grads.grad_A.coeffs() += cfg.gamma * apply_dictionary_gradient(dict, s, u_bar).coeffs();

        // s = m ⊙ r, m = beta + (1 - beta) w(r)
        const auto m_bar = (s_bar.array() * r.array()).eval();
        grads.grad_beta += (m_bar * (Scalar(1) - w)).sum();
        Signal<Scalar> r_bar = s_bar;
        r_bar.array() = s_bar.array() * m
                        - (Scalar(1) - cfg.beta) * m_bar * 2 * r.array().sign() * w.square();

        // r = x - A*(z_t)
        grads.grad_x.array() += r_bar.array();
        grads.grad_A.coeffs() -= adjoint_dictionary_gradient(dict, tape.codes[t], r_bar).coeffs();
        Code<Scalar> back = apply(dict, r_bar);
        u_bar.array() -= back.array();
        z_bar = std::move(u_bar);

        if (!z_bar.all_finite())
        {
            throw DivergenceError("layer backward produced non-finite cotangents", t + 1);
        }
    }

    // z_0 = A(x)
    grads.grad_x.array() += apply_adjoint(dict, z_bar).array();
    grads.grad_A.coeffs() += apply_dictionary_gradient(dict, x, z_bar).coeffs();
    return grads;
}

/// Reverse-mode derivative of (x, A, beta) -> z_T contracted with `cotangent`.
template <typename Scalar>
LayerGradients<Scalar> layer_vjp(const Signal<Scalar>& x, const Dictionary<Scalar>& dict,
                                 const SolverConfig<Scalar>& cfg, const Code<Scalar>& cotangent)
{
    return layer_backward(x, dict, cfg, layer_forward(x, dict, cfg), cotangent);
}

/// Mean elastic objective over a batch with fixed codes.
template <typename Scalar>
Scalar batch_objective(std::span<const Signal<Scalar>> batch, std::span<const Code<Scalar>> codes,
                       const Dictionary<Scalar>& dict, const SolverConfig<Scalar>& cfg)
{
    Scalar total = 0;
    for (std::size_t n = 0; n < batch.size(); ++n)
    {
        total += elastic_objective(batch[n], dict, codes[n], cfg.lambda, cfg.beta);
    }
    return total / static_cast<Scalar>(batch.size());
}

/// Gradient of the batch-mean elastic objective in A with codes held fixed.
template <typename Scalar>
Dictionary<Scalar> dictionary_gradient(std::span<const Signal<Scalar>> batch,
                                       std::span<const Code<Scalar>> codes,
                                       const Dictionary<Scalar>& dict, Scalar beta)
{
    Dictionary<Scalar> grad = Dictionary<Scalar>::zeros_like(dict);
    for (std::size_t n = 0; n < batch.size(); ++n)
    {
        Signal<Scalar> r_bar = residual(batch[n], dict, codes[n]);
        r_bar.array() = -(beta * r_bar.array() + (Scalar(1) - beta) / 2 * r_bar.array().sign());
        grad.coeffs() += adjoint_dictionary_gradient(dict, codes[n], r_bar).coeffs();
    }
    grad.coeffs() /= static_cast<Scalar>(batch.size());
    return grad;
}

/// One projected gradient step on the batch-mean elastic objective: codes come
/// from solve() at the current dictionary and stay fixed, then every
/// output-channel block is renormalized to unit Frobenius norm.
template <typename Scalar>
Dictionary<Scalar> dictionary_update_step(std::span<const Signal<Scalar>> batch,
                                          const Dictionary<Scalar>& dict,
                                          const SolverConfig<Scalar>& cfg, Scalar lr)
{
    if (batch.empty())
    {
        throw InvalidArgument("dictionary_update_step: empty batch");
    }
    if (!(lr >= 0) || !std::isfinite(lr))
    {
        throw InvalidArgument("dictionary_update_step: learning rate must be >= 0");
    }
    std::vector<Code<Scalar>> codes;
    codes.reserve(batch.size());
    for (const auto& x : batch)
    {
        codes.push_back(solve(x, dict, cfg).code);
    }
    Dictionary<Scalar> updated = dict;
    updated.coeffs() -= lr * dictionary_gradient<Scalar>(batch, codes, dict, cfg.beta).coeffs();
    normalize_atoms(updated);
    return updated;
}

template <typename Scalar>
struct ClassifierHead
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weights;  // classes x code size
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;

    ClassifierHead() = default;
    ClassifierHead(Index classes, Index features)
        : weights(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(classes, features)),
          bias(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(classes))
    {
    }

    Index classes() const noexcept { return weights.rows(); }
};

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> classify(const Code<Scalar>& z,
                                                  const ClassifierHead<Scalar>& head)
{
    if (head.weights.cols() != z.size() || head.bias.size() != head.weights.rows())
    {
        throw ShapeError("classify: head expects " + std::to_string(head.weights.cols())
                         + " features, code has " + std::to_string(z.size()));
    }
    return head.weights * z.flat() + head.bias;
}

/// clamp(x + budget sign(grad_x), 0, 1) with sign(0) = 0.
template <typename Scalar>
Signal<Scalar> fgsm_perturb(const Signal<Scalar>& x, const Signal<Scalar>& grad_x, Scalar budget)
{
    if (!(budget >= 0))
    {
        throw InvalidArgument("fgsm_perturb: budget must be >= 0");
    }
    if (!x.same_shape(grad_x))
    {
        throw ShapeError("fgsm_perturb: gradient shape " + grad_x.shape() + " vs " + x.shape());
    }
    Signal<Scalar> out = x;
    out.array() = (x.array() + budget * grad_x.array().sign()).max(Scalar(0)).min(Scalar(1));
    return out;
}

}  // namespace edl
