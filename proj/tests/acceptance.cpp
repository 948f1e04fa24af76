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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 unless
// --strict is given, in which case it is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "edl/commands.hpp"
#include "edl/proximal.hpp"
#include "edl/solver.hpp"
#include "edl/synthetic.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace edl;
using nlohmann::json;

namespace
{

struct Outcome
{
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, std::string_view name, std::optional<double> limit_s, const std::function<Outcome()>& fn)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try
    {
        out = fn();
    }
    catch (const std::exception& e)
    {
        out = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s && secs > *limit_s)
    {
        out.pass = false;
        out.detail += fmt::format("; runtime {:.1f} s exceeds {:.0f} s", secs, *limit_s);
    }
    failures += !out.pass;
    fmt::print("[{}] {:>2} {} ({:.1f} s): {}\n", out.pass ? "PASS" : "FAIL", id, name, secs, out.detail);
    std::fflush(stdout);
}

double robust_fidelity_ref(const Signal<double>& x, const Dictionary<double>& A, const Code<double>& z)
{
    const auto rec = oracle::apply_adjoint(A, z);
    double s = 0;
    for (Index n = 0; n < x.size(); ++n) s += std::abs(x.flat()[n] - rec.flat()[n]);
    return s;
}

SolverMode mode_for(double beta)
{
    return beta == 0.0 ? SolverMode::Robust : beta == 1.0 ? SolverMode::Vanilla : SolverMode::Elastic;
}

// Objective that the solver in `mode` descends, as recorded in the trace.
double mode_objective(const TraceEntry<double>& e, double lambda, double beta)
{
    const double s = lambda * e.sparsity;
    if (beta == 1.0) return e.l2_fidelity / 2 + s;
    if (beta == 0.0) return e.robust_fidelity / 2 + s;
    return e.elastic_objective;
}

Outcome adjointness()
{
    auto cfg = ExperimentConfig::defaults(Command::AdjointCheck);
    cfg.trials = 1000;
    const auto out = run_command(cfg);
    const double worst = out.summary.at("max_rel_discrepancy");
    return {out.status == kExitOk && worst <= 1e-8,
            fmt::format("1000 triples, H,W <= {}, C,D <= {}, k <= {}; max |<Ax,z> - <x,A*z>| / (1 + |<Ax,z>|) = {:.2e}",
                        cfg.problem.rows, cfg.problem.in_channels, cfg.problem.kernel_size, worst)};
}

Outcome majorization()
{
    const double eps = 1e-9;
    std::mt19937_64 rng(derive_seed(2, 0));
    std::uniform_int_distribution<Index> size(1, 10), chan(1, 3), half(0, 2);
    int bad_major = 0, bad_tangent = 0;
    double worst_gap = 0;
    for (int i = 0; i < 1000; ++i)
    {
        const Index H = size(rng), W = size(rng), C = chan(rng), D = chan(rng), k = 2 * half(rng) + 1;
        const auto A = oracle::random_dict(D, C, k, rng);
        const auto x = oracle::random_field<SignalTag>(H, W, C, rng);
        const auto star = oracle::random_field<CodeTag>(H, W, D, rng);
        auto z = oracle::random_field<CodeTag>(H, W, D, rng);
        if (i % 2) z.array() = star.array() + 1e-3 * z.array();  // near the anchor as well as far from it
        bad_major += local_upper_bound(x, A, z, star, eps) < robust_fidelity_ref(x, A, z) - 1e-6;
        const double gap = std::abs(local_upper_bound(x, A, star, star, eps) - robust_fidelity_ref(x, A, star));
        worst_gap = std::max(worst_gap, gap / (2 * eps * static_cast<double>(H * W * C)));
        bad_tangent += gap > 2 * eps * static_cast<double>(H * W * C);
    }
    return {bad_major == 0 && bad_tangent == 0,
            fmt::format("1000 instances, eps = 1e-9; U < R - 1e-6 on {}, tangency violations {}, worst gap / (2 eps HWC) = {:.3g}",
                        bad_major, bad_tangent, worst_gap)};
}

Outcome descent_chain()
{
    const ProblemShape shape;
    int violations[3] = {0, 0, 0}, sandwich = 0;
    const double betas[3] = {0.0, 0.5, 1.0};
    for (int b = 0; b < 3; ++b)
    {
        for (int trial = 0; trial < 100; ++trial)
        {
            std::mt19937_64 rng(derive_seed(3, static_cast<std::uint64_t>(trial)));
            const auto p = planted_problem(shape, rng);
            SolverConfig<double> cfg;
            cfg.lambda = 0.1;
            cfg.beta = betas[b];
            cfg.steps = 10;
            cfg.epsilon = 1e-3;
            cfg.gamma = default_step_size(p.signal, p.dict, cfg.beta, cfg.epsilon);
            const auto trace = solve(p.signal, p.dict, cfg).trace;
            bool ok = check_descent(trace, mode_for(cfg.beta)).ok;
            for (std::size_t t = 1; t < trace.entries.size(); ++t)
            {
                const auto& e = trace.entries[t];
                if (mode_objective(e, cfg.lambda, cfg.beta) > mode_objective(trace.entries[t - 1], cfg.lambda, cfg.beta) + 1e-8)
                    ok = false;
                if (cfg.beta == 0.0 && e.robust_fidelity > e.upper_bound + 1e-8) ++sandwich;
            }
            violations[b] += !ok;
        }
    }
    return {violations[0] + violations[1] + violations[2] + sandwich == 0,
            fmt::format("100 solves per beta in {{0, 0.5, 1}}, T = 10, default step; descent violations {}/{}/{}, "
                        "sandwich violations {}",
                        violations[0], violations[1], violations[2], sandwich)};
}

Outcome vanilla_reduction()
{
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial)
    {
        std::mt19937_64 rng(derive_seed(4, static_cast<std::uint64_t>(trial)));
        const auto A = oracle::random_dict(3, 2, 3, rng);
        const auto x = oracle::random_field<SignalTag>(7, 6, 2, rng);
        SolverConfig<double> cfg;
        cfg.lambda = 0.1;
        cfg.beta = 1.0;
        cfg.steps = 1 + trial % 10;
        cfg.gamma = default_step_size(x, A, 1.0, cfg.epsilon);
        const auto want = oracle::ista(x, A, cfg.gamma, cfg.lambda, cfg.steps).back();
        const auto got = solve(x, A, cfg).code;
        worst = std::max(worst, (got.array() - want.array()).abs().maxCoeff());
    }
    return {worst <= 1e-12, fmt::format("100 instances, max elementwise |elastic(beta=1) - ISTA| = {:.2e}", worst)};
}

Outcome influence()
{
    auto cfg = ExperimentConfig::defaults(Command::Influence);
    cfg.trials = 50;
    const auto s = run_command(cfg).summary;
    const double van = s.at("vanilla_max_rel_error");
    const double interp = s.at("interpolation_max_error");
    const int rob = s.at("slope").at("robust_trials_at_least_0.9");
    const int ela = s.at("slope").at("elastic_trials_at_least_0.9");
    const bool ok = van <= 1e-10 && interp <= 1e-12 && rob == 50 && ela == 50;
    return {ok, fmt::format("50 instances; vanilla rel err {:.2e}; slope >= 0.9 robust {}/50 (min {:.3f}), "
                            "elastic {}/50 (min {:.3f}); interpolation err {:.2e}",
                            van, rob, s.at("slope").at("robust_min").get<double>(), ela,
                            s.at("slope").at("elastic_min").get<double>(), interp)};
}

Outcome gradient_check()
{
    int valid = 0, skipped = 0, bad = 0;
    double worst = 0;
    for (std::uint64_t seed = 1000; valid < 50 && seed < 5000; ++seed)
    {
        const auto g = oracle::gradient_check(seed, 1 + static_cast<int>(seed % 3));
        if (g.boundary)
        {
            ++skipped;
            continue;
        }
        ++valid;
        worst = std::max(worst, g.worst());
        bad += g.worst() > 1e-4;
    }
    return {valid == 50 && bad == 0,
            fmt::format("{} instances, T in {{1,2,3}}, h = 1e-5; worst relative error {:.2e}; {} boundary cases skipped",
                        valid, worst, skipped)};
}

Outcome fast_convergence()
{
    const auto cfg = ExperimentConfig::defaults(Command::Convergence);
    const auto s = run_command(cfg).summary.at("early_decrease");
    const double frac = s.at("fraction_meeting");
    auto vanilla = cfg;
    vanilla.solver.beta = 1.0;
    const double vfrac = run_command(vanilla).summary.at("early_decrease").at("fraction_meeting");
    return {frac >= 0.9,
            fmt::format("beta = {}, eps = {}, T = {}: {:.0f}% of {} trials reach 90% of the decrease by step 3 "
                        "(mean fraction {:.3f}); for reference beta = 1 gives {:.0f}%",
                        cfg.solver.beta, cfg.solver.epsilon, cfg.solver.steps, 100 * frac, cfg.trials,
                        s.at("mean_fraction").get<double>(), 100 * vfrac)};
}

Outcome denoise_direction()
{
    const auto cfg = ExperimentConfig::defaults(Command::DenoiseBench);
    const auto s = run_command(cfg).summary;
    bool robust_ok = true, natural_ok = true;
    std::string detail;
    for (const auto& level : s.at("levels"))
    {
        const double rate = level.at("rate");
        const double r = level.at("robust_beats_vanilla");
        const double e = level.at("elastic_beats_vanilla");
        const double v = level.at("vanilla_at_most_robust");
        if (rate >= 0.1)
        {
            robust_ok = robust_ok && r >= 0.8 && e >= 0.8;
            detail += fmt::format("rate {}: R<V {:.0f}%, E<V {:.0f}%; ", rate, 100 * r, 100 * e);
        }
        if (rate == 0.0)
        {
            natural_ok = v >= 0.6;
            detail += fmt::format("rate 0: V<=R {:.0f}%; ", 100 * v);
        }
    }
    detail += fmt::format("robustness half {}, natural-performance half {}", robust_ok ? "holds" : "fails",
                          natural_ok ? "holds" : "fails");
    return {robust_ok && natural_ok, detail};
}

Outcome attack_direction()
{
    const auto cfg = ExperimentConfig::defaults(Command::AttackBench);
    const auto s = run_command(cfg).summary;
    for (const auto& b : s.at("budgets"))
    {
        if (std::abs(b.at("budget").get<double>() - 8.0 / 255) > 1e-12) continue;
        const double ev = b.at("mean_embedding_diff").at("vanilla"), ee = b.at("mean_embedding_diff").at("elastic");
        const double av = b.at("mean_attacked_acc").at("vanilla"), ae = b.at("mean_attacked_acc").at("elastic");
        return {ee <= ev && ae >= av,
                fmt::format("{} runs, budget 8/255: embedding diff E {:.4f} vs V {:.4f} ({}); attacked acc E {:.4f} "
                            "vs V {:.4f} ({})",
                            cfg.trials, ee, ev, ee <= ev ? "holds" : "fails", ae, av, ae >= av ? "holds" : "fails")};
    }
    return {false, "budget 8/255 missing from the default grid"};
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism()
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / fmt::format("edl-acceptance-{}", std::random_device{}());
    fs::create_directories(dir);
    const std::pair<const char*, json> runs[] = {
        {"adjoint-check", {{"trials", 50}}},
        {"convergence", {{"trials", 10}}},
        {"denoise-bench", {{"trials", 5}}},
        {"influence", {{"trials", 5}}},
        {"attack-bench", {{"trials", 2}, {"attack", {{"epochs", 5}}}}},
    };
    int identical = 0;
    std::string detail;
    for (const auto& [name, doc] : runs)
    {
        const fs::path config = dir / fmt::format("{}.json", name);
        std::ofstream(config) << doc.dump();
        std::string outputs[3];
        const int jobs[3] = {1, 1, 4};
        bool ran = true;
        for (int r = 0; r < 3; ++r)
        {
            const fs::path out = dir / fmt::format("{}-{}.csv", name, r);
            const std::string cmd = fmt::format("\"{}\" {} --config \"{}\" --out \"{}\" --jobs {}", EDL_CLI, name,
                                                config.string(), out.string(), jobs[r]);
            ran = ran && std::system(cmd.c_str()) == 0;
            outputs[r] = slurp(out) + slurp(out.string() + ".summary.json");
        }
        const bool same = ran && !outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
        identical += same;
        if (!same) detail += fmt::format("{} differs or failed; ", name);
    }
    fs::remove_all(dir);
    return {identical == 5, detail + fmt::format("{}/5 commands byte-identical across two serial runs and a 4-job run",
                                                 identical)};
}

}  // namespace

int main(int argc, char** argv)
{
    const bool strict = argc > 1 && std::string_view(argv[1]) == "--strict";
    criterion(1, "adjointness", 10.0, adjointness);
    criterion(2, "majorization", 10.0, majorization);
    criterion(3, "descent chain", 30.0, descent_chain);
    criterion(4, "vanilla reduction", std::nullopt, vanilla_reduction);
    criterion(5, "influence functions", std::nullopt, influence);
    criterion(6, "gradient check", 60.0, gradient_check);
    criterion(7, "fast convergence", std::nullopt, fast_convergence);
    criterion(8, "denoise direction", std::nullopt, denoise_direction);
    criterion(9, "attack-bench direction", 600.0, attack_direction);
    criterion(10, "determinism", std::nullopt, determinism);
    fmt::print("{} of 10 criteria failed\n", failures);
    return strict ? failures : 0;
}
