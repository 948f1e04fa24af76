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

#include "edl/toy_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "edl/errors.hpp"
#include "edl/solver.hpp"

namespace edl
{

namespace
{

using Vec = Eigen::VectorXd;

Vec softmax(const Vec& logits)
{
    Vec p = (logits.array() - logits.maxCoeff()).exp();
    return p / p.sum();
}

int argmax(const Vec& v)
{
    Index best = 0;
    v.maxCoeff(&best);
    return static_cast<int>(best);
}

Dictionary<double> initial_dictionary(const ToyConfig& cfg, Index channels, std::mt19937_64& rng)
{
    if (cfg.init == DictionaryInit::Gaussian)
    {
        return random_dictionary<double>(cfg.atoms, channels, cfg.kernel_size, rng);
    }
    Dictionary<double> dict(cfg.atoms, channels, cfg.kernel_size);
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (Index n = 0; n < dict.coeffs().size(); ++n) dict.coeffs()[n] = jitter(rng);
    const Index r = dict.radius();
    for (Index d = 0; d < cfg.atoms; ++d)
    {
        dict.atom(d, d % channels)(r, r) += 1.0;
    }
    normalize_atoms(dict);
    return dict;
}

SolverConfig<double> layer_config(const ToyConfig& cfg, double beta)
{
    SolverConfig<double> layer;
    layer.lambda = cfg.lambda;
    layer.beta = beta;
    layer.epsilon = cfg.epsilon;
    layer.steps = cfg.steps;
    return layer;
}

// dLoss/dz for one sample, plus the loss and the head gradients accumulated.
struct HeadPass
{
    double loss = 0;
    bool correct = false;
    Vec logit_grad;
};

HeadPass head_pass(const Code<double>& z, const ClassifierHead<double>& head, int label)
{
    const Vec p = softmax(classify(z, head));
    HeadPass out;
    out.loss = -std::log(std::max(p(label), 1e-300));
    out.correct = argmax(p) == label;
    out.logit_grad = p;
    out.logit_grad(label) -= 1.0;
    return out;
}

}  // namespace

void ToyConfig::validate() const
{
    if (!(beta >= 0 && beta <= 1)) throw InvalidArgument("toy beta must lie in [0, 1]");
    if (epochs < 0 || switch_epoch < 0) throw InvalidArgument("epoch counts must be >= 0");
    if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
    if (!(lr >= 0) || !(dict_lr >= 0)) throw InvalidArgument("learning rates must be >= 0");
    if (!(lambda >= 0)) throw InvalidArgument("lambda must be >= 0");
    if (!(epsilon > 0)) throw InvalidArgument("epsilon must be > 0");
    if (steps < 1) throw InvalidArgument("steps must be >= 1");
    if (atoms < 1) throw InvalidArgument("atom count must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0) throw InvalidArgument("kernel size must be odd");
}

ToyDataset make_blobs(const BlobSpec& spec, std::uint64_t seed)
{
    if (spec.classes < 2) throw InvalidArgument("blobs need at least two classes");
    if (spec.train_per_class < 1 || spec.eval_per_class < 0)
        throw InvalidArgument("blob sample counts must be positive");
    if (!(spec.spread >= 0)) throw InvalidArgument("blob spread must be >= 0");

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<Signal<double>> means;
    for (int k = 0; k < spec.classes; ++k)
    {
        Signal<double> m(spec.rows, spec.cols, spec.channels);
        for (Index n = 0; n < m.size(); ++n)
            m.flat()[n] = 0.5 + spec.separation * (coin(rng) ? 1.0 : -1.0);
        means.push_back(std::move(m));
    }

    std::normal_distribution<double> noise(0.0, spec.spread);
    auto draw = [&](int per_class, std::vector<LabeledSignal>& out) {
        for (int i = 0; i < per_class; ++i)
            for (int k = 0; k < spec.classes; ++k)
            {
                LabeledSignal s{means[k], k};
                for (Index n = 0; n < s.x.size(); ++n)
                    s.x.flat()[n] = std::clamp(s.x.flat()[n] + noise(rng), 0.0, 1.0);
                out.push_back(std::move(s));
            }
    };
    ToyDataset data;
    data.classes = spec.classes;
    draw(spec.train_per_class, data.train);
    draw(spec.eval_per_class, data.eval);
    return data;
}

double pipeline_step_size(const std::vector<LabeledSignal>& data, const Dictionary<double>& dict,
                          double beta, double epsilon)
{
    double gamma = std::numeric_limits<double>::infinity();
    for (const auto& s : data)
    {
        gamma = std::min(gamma, default_step_size(s.x, dict, beta, epsilon));
    }
    return gamma;
}

TrainResult train_toy_pipeline(const ToyDataset& data, const ToyConfig& cfg)
{
    cfg.validate();
    if (data.train.empty()) throw InvalidArgument("toy pipeline: empty training set");
    if (data.classes < 2) throw InvalidArgument("toy pipeline: need at least two classes");

    std::mt19937_64 rng(cfg.seed);
    const Signal<double>& probe = data.train.front().x;
    TrainResult result;
    ToyModel& model = result.model;
    model.dict = initial_dictionary(cfg, probe.channels(), rng);
    model.head = ClassifierHead<double>(data.classes, probe.rows() * probe.cols() * cfg.atoms);
    {
        std::normal_distribution<double> init(0.0, 0.01);
        for (Index n = 0; n < model.head.weights.size(); ++n) model.head.weights.data()[n] = init(rng);
    }
    const double beta0 = cfg.switch_epoch > 0 ? 1.0 : cfg.beta;
    model.layer = layer_config(cfg, beta0);
    model.layer.gamma = pipeline_step_size(data.train, model.dict, beta0, cfg.epsilon);

    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch)
    {
        const double beta = epoch < cfg.switch_epoch ? 1.0 : cfg.beta;
        model.layer = layer_config(cfg, beta);
        model.layer.gamma = pipeline_step_size(data.train, model.dict, beta, cfg.epsilon);
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size)
        {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const auto batch = static_cast<double>(stop - start);
            Eigen::MatrixXd grad_w = Eigen::MatrixXd::Zero(model.head.weights.rows(), model.head.weights.cols());
            Vec grad_b = Vec::Zero(model.head.bias.size());
            Dictionary<double> grad_A = Dictionary<double>::zeros_like(model.dict);

            for (std::size_t i = start; i < stop; ++i)
            {
                const LabeledSignal& s = data.train[order[i]];
                const auto tape = layer_forward(s.x, model.dict, model.layer);
                const auto pass = head_pass(tape.output(), model.head, s.label);
                if (!std::isfinite(pass.loss))
                {
                    throw DivergenceError("toy pipeline loss is not finite", epoch + 1);
                }
                epoch_loss += pass.loss;
                grad_w += pass.logit_grad * tape.output().flat().transpose();
                grad_b += pass.logit_grad;
                if (cfg.dict_lr > 0)
                {
                    Code<double> cot = Code<double>::zeros_like(tape.output());
                    cot.flat() = model.head.weights.transpose() * pass.logit_grad;
                    grad_A.coeffs() += layer_backward(s.x, model.dict, model.layer, tape, cot).grad_A.coeffs();
                }
            }
            model.head.weights -= (cfg.lr / batch) * grad_w;
            model.head.bias -= (cfg.lr / batch) * grad_b;
            if (cfg.dict_lr > 0)
            {
                model.dict.coeffs() -= (cfg.dict_lr / batch) * grad_A.coeffs();
                normalize_atoms(model.dict);
            }
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss) || !model.dict.all_finite())
        {
            throw DivergenceError("toy pipeline parameters diverged", epoch + 1);
        }
        result.epoch_loss.push_back(epoch_loss);
    }
    return result;
}

Signal<double> input_gradient(const ToyModel& model, const LabeledSignal& sample)
{
    const auto tape = layer_forward(sample.x, model.dict, model.layer);
    const auto pass = head_pass(tape.output(), model.head, sample.label);
    Code<double> cot = Code<double>::zeros_like(tape.output());
    cot.flat() = model.head.weights.transpose() * pass.logit_grad;
    return layer_backward(sample.x, model.dict, model.layer, tape, cot).grad_x;
}

EvalResult evaluate(const ToyModel& model, const std::vector<LabeledSignal>& data, double budget)
{
    if (data.empty()) throw InvalidArgument("evaluate: empty data set");
    EvalResult out;
    for (const auto& s : data)
    {
        const auto tape = layer_forward(s.x, model.dict, model.layer);
        const auto clean = head_pass(tape.output(), model.head, s.label);
        out.clean_accuracy += clean.correct;
        out.mean_loss += clean.loss;

        Code<double> cot = Code<double>::zeros_like(tape.output());
        cot.flat() = model.head.weights.transpose() * clean.logit_grad;
        const auto grad_x = layer_backward(s.x, model.dict, model.layer, tape, cot).grad_x;
        const Signal<double> adv = fgsm_perturb(s.x, grad_x, budget);
        const Code<double> z_adv = solve(adv, model.dict, model.layer).code;
        out.attacked_accuracy += head_pass(z_adv, model.head, s.label).correct;

        const double base = std::sqrt(squared_norm(tape.output()));
        const double diff = (z_adv.flat() - tape.output().flat()).norm();
        out.embedding_difference += base > 0 ? diff / base : diff;
    }
    const auto n = static_cast<double>(data.size());
    out.clean_accuracy /= n;
    out.attacked_accuracy /= n;
    out.embedding_difference /= n;
    out.mean_loss /= n;
    return out;
}

}  // namespace edl
