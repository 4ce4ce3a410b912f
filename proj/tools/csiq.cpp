// SPDX-License-Identifier: Apache-2.0
//
// csiq - modular CSI quantization for FDD massive MIMO
// Copyright (C) 2026 The csiq authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "csiq/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace
{

std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::invalid_argument("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::invalid_argument("cannot write '" + path.string() + "'");
    out << text;
}

void print_diagnostics(const std::string &file, const csiq::ConfigError &e)
{
    for (const auto &d : e.diagnostics())
        std::cerr << file << ":" << (d.line > 0 ? std::to_string(d.line) + ":" : std::string{}) << " " << d.path << ": "
                  << d.message << "\n";
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"csiq: modular CSI quantization experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    int threads = 0;
    std::string emit = "both";

    CLI::App *run = app.add_subcommand("run", "Run every sweep of a configuration and write reports");
    run->add_option("config", config_path, "Experiment configuration (JSON)")->required();
    run->add_option("--seed", seed, "Override the master seed");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::NonNegativeNumber);
    run->add_option("--emit", emit, "Report formats")->check(CLI::IsMember({"csv", "json", "both"}))->capture_default_str();

    CLI::App *validate = app.add_subcommand("validate", "Check a configuration without running it");
    validate->add_option("config", config_path, "Experiment configuration (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    csiq::ExperimentConfig cfg;
    try
    {
        cfg = csiq::parse_config(read_file(config_path));
    }
    catch (const csiq::ConfigError &e)
    {
        print_diagnostics(config_path, e);
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (validate->parsed())
    {
        std::cout << config_path << ": OK\n";
        return 0;
    }

    if (seed)
        cfg.seed = *seed;
    csiq::ExperimentReport rep;
    try
    {
        rep = csiq::run_experiment(cfg, threads);
        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        write_file(dir / "config.resolved.json", csiq::config_to_json(cfg));
        if (emit == "csv" || emit == "both")
            write_file(dir / (cfg.name + ".csv"), csiq::report_csv(rep));
        if (emit == "json" || emit == "both")
            write_file(dir / (cfg.name + ".json"), csiq::report_json(rep));
    }
    catch (const csiq::ConfigError &e)
    {
        print_diagnostics(config_path, e);
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    for (const auto &note : rep.notes)
        std::cout << "note: " << note << "\n";
    int failed = 0;
    for (const auto &inv : rep.invariants)
    {
        std::cout << "invariant " << inv.name << ": " << (inv.ok ? "ok" : "FAILED") << " (" << inv.checks
                  << " checks)\n";
        if (!inv.ok)
        {
            std::cerr << "invariant violated: " << inv.name << ": " << inv.detail << "\n";
            ++failed;
        }
    }
    std::cout << rep.rows.size() << " rows written to " << out_dir << "\n";
    return failed == 0 ? 0 : 1;
}
