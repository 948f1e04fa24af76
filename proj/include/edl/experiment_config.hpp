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

// JSON experiment configuration. Every field has a per-command default; a
// config file overrides any subset, and unknown keys are rejected.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edl/errors.hpp"
#include "edl/synthetic.hpp"
#include "edl/toy_pipeline.hpp"

namespace edl
{

enum class Command
{
    AdjointCheck,
    Convergence,
    DenoiseBench,
    Influence,
    AttackBench
};

const char* to_string(Command c);
Command parse_command(const std::string& name);  // throws ConfigError

/// Raised for malformed or out-of-range configuration.
class ConfigError : public InvalidArgument
{
public:
    using InvalidArgument::InvalidArgument;
};

struct SolverSection
{
    double lambda = 0.1;
    double beta = 0.5;
    std::optional<double> gamma;  // empty: default step size per solve
    int steps = 10;
    double epsilon = 1e-3;
};

struct InfluenceSection
{
    std::vector<double> ts{1e-2, 1e-3, 1e-4};
    double margin = 0.1;  // stable-entry margin, see influence_convergence
    double scale = 2.0;   // x and delta are N(0, scale^2)
};

struct AttackSection
{
    int epochs = 50;
    int switch_epoch = 0;
    int batch_size = 8;
    double lr = 0.1;
    double dict_lr = 0.01;
    std::string init = "identity";
    std::vector<double> budgets{0.0, 2.0 / 255, 4.0 / 255, 8.0 / 255};
    int train_per_class = 40;
    int eval_per_class = 40;
    double separation = 0.05;
    double spread = 0.1;
};

struct ExperimentConfig
{
    Command command = Command::Convergence;
    ProblemShape problem;
    SolverSection solver;
    std::vector<double> noise_levels{0.0};
    int trials = 100;
    std::uint64_t seed = 1;
    InfluenceSection influence;
    AttackSection attack;

    static ExperimentConfig defaults(Command command);

    /// Defaults for `command` overridden by `doc`. Throws ConfigError.
    static ExperimentConfig from_json(Command command, const nlohmann::json& doc);

    /// Canonical form: every field, fixed key order, including the command
    /// and the artifact version.
    nlohmann::json to_json() const;

    void validate() const;
};

}  // namespace edl
