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

// edl <command> --config <path> [--out <path>] [--seed <n>] [--jobs <n>]

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "edl/commands.hpp"
#include "edl/errors.hpp"
#include "edl/version.hpp"

namespace
{

nlohmann::json read_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw edl::ConfigError(fmt::format("cannot open config '{}'", path));
    try
    {
        return nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw edl::ConfigError(fmt::format("{}: {}", path, e.what()));
    }
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Elastic convolutional dictionary learning benchmarks"};
    app.set_version_flag("--version", std::string(edl::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_path;
    std::optional<std::uint64_t> seed;
    edl::RunOptions options;

    for (const char* name : {"adjoint-check", "convergence", "denoise-bench", "influence", "attack-bench"})
    {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config; '-' reads stdin")->required();
        sub->add_option("--out", out_path, "CSV path (default stdout); summary goes to <out>.summary.json");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--jobs", options.jobs, "worker threads for trials")->check(CLI::Range(1, 256));
        sub->add_flag("--inject-mismatch", options.inject_mismatch)->group("");
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : edl::kExitUsage;
    }

    try
    {
        const edl::Command command = edl::parse_command(app.get_subcommands().front()->get_name());
        nlohmann::json doc;
        if (config_path == "-")
            doc = nlohmann::json::parse(std::cin);
        else
            doc = read_config(config_path);
        auto cfg = edl::ExperimentConfig::from_json(command, doc);
        if (seed) cfg.seed = *seed;
        cfg.validate();

        const edl::CommandOutput result = edl::run_command(cfg, options);
        const std::string summary = result.summary.dump(2) + "\n";
        if (out_path)
        {
            write_file(*out_path, result.csv);
            write_file(*out_path + ".summary.json", summary);
        }
        else
        {
            std::cout << result.csv;
            std::cerr << summary;
        }
        return result.status;
    }
    catch (const edl::DivergenceError& e)
    {
        std::cerr << "edl: divergence: " << e.what() << "\n";
        return edl::kExitDivergence;
    }
    catch (const edl::InvalidArgument& e)
    {
        std::cerr << "edl: " << e.what() << "\n";
        return edl::kExitUsage;
    }
    catch (const nlohmann::json::exception& e)
    {
        std::cerr << "edl: config: " << e.what() << "\n";
        return edl::kExitUsage;
    }
    catch (const std::exception& e)
    {
        std::cerr << "edl: " << e.what() << "\n";
        return 1;
    }
}
