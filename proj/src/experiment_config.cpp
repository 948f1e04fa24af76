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

#include "edl/experiment_config.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "edl/version.hpp"

namespace edl
{

using nlohmann::json;

const char* to_string(Command c)
{
    switch (c)
    {
        case Command::AdjointCheck:
            return "adjoint-check";
        case Command::Convergence:
            return "convergence";
        case Command::DenoiseBench:
            return "denoise-bench";
        case Command::Influence:
            return "influence";
        case Command::AttackBench:
            return "attack-bench";
    }
    return "?";
}

Command parse_command(const std::string& name)
{
    for (Command c : {Command::AdjointCheck, Command::Convergence, Command::DenoiseBench,
                      Command::Influence, Command::AttackBench})
    {
        if (name == to_string(c)) return c;
    }
    throw ConfigError("unknown command '" + name + "'");
}

ExperimentConfig ExperimentConfig::defaults(Command command)
{
    ExperimentConfig cfg;
    cfg.command = command;
    switch (command)
    {
        case Command::AdjointCheck:
            // upper bounds for the randomly drawn shapes
            cfg.problem.in_channels = 4;
            cfg.problem.out_channels = 4;
            cfg.problem.kernel_size = 5;
            break;
        case Command::Convergence:
            break;
        case Command::DenoiseBench:
            cfg.solver.lambda = 0.3;
            cfg.solver.steps = 60;
            cfg.solver.epsilon = 0.2;
            cfg.noise_levels = {0.0, 0.02, 0.05, 0.1, 0.2, 0.3};
            break;
        case Command::Influence:
            cfg.problem.rows = 8;
            cfg.problem.cols = 8;
            cfg.problem.out_channels = 2;
            cfg.solver.epsilon = 0.01;
            cfg.trials = 50;
            break;
        case Command::AttackBench:
            cfg.problem.rows = 8;
            cfg.problem.cols = 8;
            cfg.solver.steps = 3;
            cfg.trials = 10;
            break;
    }
    return cfg;
}

namespace
{

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw ConfigError(fmt::format("config: {}: {}", path, what));
}

// Walks one JSON object, rejecting keys that no reader claimed.
class Reader
{
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) fail(path_, "expected an object");
    }

    void finish() const
    {
        for (auto it = node_.begin(); it != node_.end(); ++it)
        {
            if (!seen_.count(it.key())) fail(path_ + "." + it.key(), "unknown key");
        }
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out)
    {
        if (const json* v = find(key))
        {
            if (!v->is_number()) fail(sub(key), "expected a number");
            out = v->get<double>();
        }
    }

    template <typename Int>
    void integer(const std::string& key, Int& out)
    {
        if (const json* v = find(key))
        {
            if (!v->is_number_integer()) fail(sub(key), "expected an integer");
            if (std::is_unsigned_v<Int> && v->is_number_integer() && !v->is_number_unsigned()
                && v->get<std::int64_t>() < 0)
                fail(sub(key), "expected a non-negative integer");
            out = v->get<Int>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out)
    {
        if (const json* v = find(key))
        {
            if (!v->is_array()) fail(sub(key), "expected an array of numbers");
            out.clear();
            for (const auto& e : *v)
            {
                if (!e.is_number()) fail(sub(key), "expected an array of numbers");
                out.push_back(e.get<double>());
            }
        }
    }

    void string(const std::string& key, std::string& out)
    {
        if (const json* v = find(key))
        {
            if (!v->is_string()) fail(sub(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    std::string sub(const std::string& key) const { return path_ + "." + key; }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what)
{
    if (!ok) fail(path, what);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(Command command, const json& doc)
{
    ExperimentConfig cfg = defaults(command);
    {
        Reader top(doc, "$");
        if (const json* p = top.find("problem"))
        {
            Reader r(*p, "$.problem");
            r.integer("H", cfg.problem.rows);
            r.integer("W", cfg.problem.cols);
            r.integer("C", cfg.problem.in_channels);
            r.integer("D", cfg.problem.out_channels);
            r.integer("k", cfg.problem.kernel_size);
            r.number("density", cfg.problem.density);
            r.number("magnitude_lo", cfg.problem.magnitude_lo);
            r.number("magnitude_hi", cfg.problem.magnitude_hi);
            r.finish();
        }
        if (const json* s = top.find("solver"))
        {
            Reader r(*s, "$.solver");
            r.number("lambda", cfg.solver.lambda);
            r.number("beta", cfg.solver.beta);
            if (const json* g = r.find("gamma"))
            {
                if (g->is_null())
                    cfg.solver.gamma.reset();
                else if (g->is_number())
                    cfg.solver.gamma = g->get<double>();
                else
                    fail("$.solver.gamma", "expected a number or null");
            }
            r.integer("steps", cfg.solver.steps);
            r.number("epsilon", cfg.solver.epsilon);
            r.finish();
        }
        if (const json* n = top.find("noise"))
        {
            Reader r(*n, "$.noise");
            const json* rate = r.find("rate");
            const json* levels = r.find("levels");
            if (rate && levels) fail("$.noise", "give either rate or levels, not both");
            if (rate)
            {
                if (!rate->is_number()) fail("$.noise.rate", "expected a number");
                cfg.noise_levels = {rate->get<double>()};
            }
            if (levels) r.numbers("levels", cfg.noise_levels);
            r.finish();
        }
        top.integer("trials", cfg.trials);
        top.integer("seed", cfg.seed);
        if (command == Command::Influence)
        {
            if (const json* i = top.find("influence"))
            {
                Reader r(*i, "$.influence");
                r.numbers("ts", cfg.influence.ts);
                r.number("margin", cfg.influence.margin);
                r.number("scale", cfg.influence.scale);
                r.finish();
            }
        }
        if (command == Command::AttackBench)
        {
            if (const json* a = top.find("attack"))
            {
                Reader r(*a, "$.attack");
                r.integer("epochs", cfg.attack.epochs);
                r.integer("switch_epoch", cfg.attack.switch_epoch);
                r.integer("batch_size", cfg.attack.batch_size);
                r.number("lr", cfg.attack.lr);
                r.number("dict_lr", cfg.attack.dict_lr);
                r.string("init", cfg.attack.init);
                r.numbers("budgets", cfg.attack.budgets);
                r.integer("train_per_class", cfg.attack.train_per_class);
                r.integer("eval_per_class", cfg.attack.eval_per_class);
                r.number("separation", cfg.attack.separation);
                r.number("spread", cfg.attack.spread);
                r.finish();
            }
        }
        top.finish();
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const
{
    require(problem.rows >= 1 && problem.cols >= 1, "$.problem", "H and W must be >= 1");
    require(problem.in_channels >= 1 && problem.out_channels >= 1, "$.problem", "C and D must be >= 1");
    require(problem.kernel_size >= 1 && problem.kernel_size % 2 == 1, "$.problem.k",
            "must be a positive odd integer");
    require(problem.density >= 0 && problem.density <= 1, "$.problem.density", "must lie in [0, 1]");
    require(problem.magnitude_lo >= 0 && problem.magnitude_lo <= problem.magnitude_hi, "$.problem",
            "need 0 <= magnitude_lo <= magnitude_hi");

    require(solver.lambda >= 0 && std::isfinite(solver.lambda), "$.solver.lambda", "must be >= 0");
    require(solver.beta >= 0 && solver.beta <= 1, "$.solver.beta", "must lie in [0, 1]");
    require(!solver.gamma || (*solver.gamma > 0 && std::isfinite(*solver.gamma)), "$.solver.gamma",
            "must be > 0 or null");
    require(solver.steps >= 1, "$.solver.steps", "must be >= 1");
    require(solver.epsilon > 0 && std::isfinite(solver.epsilon), "$.solver.epsilon", "must be > 0");

    require(!noise_levels.empty(), "$.noise", "needs at least one level");
    for (double r : noise_levels) require(r >= 0 && r <= 1, "$.noise", "rates must lie in [0, 1]");
    require(trials >= 1, "$.trials", "must be >= 1");

    if (command == Command::Influence)
    {
        require(influence.ts.size() >= 2, "$.influence.ts", "needs at least two step sizes");
        for (double t : influence.ts) require(t > 0 && t <= 0.1, "$.influence.ts", "entries must lie in (0, 0.1]");
        require(influence.margin > 0 && influence.margin <= 1, "$.influence.margin", "must lie in (0, 1]");
        require(influence.scale > 0, "$.influence.scale", "must be > 0");
    }
    if (command == Command::AttackBench)
    {
        require(attack.epochs >= 0 && attack.switch_epoch >= 0, "$.attack", "epoch counts must be >= 0");
        require(attack.batch_size >= 1, "$.attack.batch_size", "must be >= 1");
        require(attack.lr >= 0 && attack.dict_lr >= 0, "$.attack", "learning rates must be >= 0");
        require(attack.init == "identity" || attack.init == "gaussian", "$.attack.init",
                "must be \"identity\" or \"gaussian\"");
        require(!attack.budgets.empty(), "$.attack.budgets", "needs at least one budget");
        for (double b : attack.budgets) require(b >= 0 && b <= 1, "$.attack.budgets", "entries must lie in [0, 1]");
        require(attack.train_per_class >= 1 && attack.eval_per_class >= 1, "$.attack",
                "per-class sample counts must be >= 1");
        require(attack.spread >= 0, "$.attack.spread", "must be >= 0");
    }
}

json ExperimentConfig::to_json() const
{
    json doc;
    doc["command"] = to_string(command);
    doc["version"] = kVersion;
    doc["problem"] = {{"H", problem.rows},
                      {"W", problem.cols},
                      {"C", problem.in_channels},
                      {"D", problem.out_channels},
                      {"k", problem.kernel_size},
                      {"density", problem.density},
                      {"magnitude_lo", problem.magnitude_lo},
                      {"magnitude_hi", problem.magnitude_hi}};
    doc["solver"] = {{"lambda", solver.lambda},
                     {"beta", solver.beta},
                     {"gamma", solver.gamma ? json(*solver.gamma) : json(nullptr)},
                     {"steps", solver.steps},
                     {"epsilon", solver.epsilon}};
    doc["noise"] = {{"levels", noise_levels}};
    doc["trials"] = trials;
    doc["seed"] = seed;
    if (command == Command::Influence)
    {
        doc["influence"] = {{"ts", influence.ts}, {"margin", influence.margin}, {"scale", influence.scale}};
    }
    if (command == Command::AttackBench)
    {
        doc["attack"] = {{"epochs", attack.epochs},
                         {"switch_epoch", attack.switch_epoch},
                         {"batch_size", attack.batch_size},
                         {"lr", attack.lr},
                         {"dict_lr", attack.dict_lr},
                         {"init", attack.init},
                         {"budgets", attack.budgets},
                         {"train_per_class", attack.train_per_class},
                         {"eval_per_class", attack.eval_per_class},
                         {"separation", attack.separation},
                         {"spread", attack.spread}};
    }
    return doc;
}

}  // namespace edl
