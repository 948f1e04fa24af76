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

#include <string>
#include <vector>

#include <json.hpp>

#include "edl/experiment_config.hpp"

namespace edl
{

enum ExitStatus : int
{
    kExitOk = 0,
    kExitUsage = 2,       // bad arguments or config
    kExitDivergence = 3,  // a solve or training run produced non-finite values
    kExitInvariant = 4,   // a checked invariant failed
};

struct RunOptions
{
    int jobs = 1;
    // Test hook for adjoint-check: pairs A with a perturbed copy of itself.
    bool inject_mismatch = false;
};

struct CommandOutput
{
    std::string csv;       // metadata line, header, rows
    nlohmann::json summary;
    int status = kExitOk;
};

/// Runs one benchmark command. Output is a pure function of `cfg`: the job
/// count changes only the wall time.
CommandOutput run_command(const ExperimentConfig& cfg, const RunOptions& options = {});

CommandOutput cmd_adjoint_check(const ExperimentConfig& cfg, const RunOptions& options);
CommandOutput cmd_convergence(const ExperimentConfig& cfg, const RunOptions& options);
CommandOutput cmd_denoise_bench(const ExperimentConfig& cfg, const RunOptions& options);
CommandOutput cmd_influence(const ExperimentConfig& cfg, const RunOptions& options);
CommandOutput cmd_attack_bench(const ExperimentConfig& cfg, const RunOptions& options);

/// Fraction of the total decrease obj[0] - obj[T] reached by step `within`;
/// 1 when the objective does not decrease at all.
double early_decrease_fraction(const std::vector<double>& objective, int within);

}  // namespace edl
