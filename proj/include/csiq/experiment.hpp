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

#pragma once

#include "csiq/channel.hpp"
#include "csiq/codebook.hpp"
#include "csiq/evaluate.hpp"
#include "csiq/subband.hpp"
#include "csiq/wideband.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csiq
{

inline constexpr int config_schema_version = 1;
inline constexpr int report_schema_version = 1;

/// Wideband codebook family member: "tsodft" with a total oversampling factor, or "lloyd" with a
/// size of 2^bits trained on eigenvectors of separately drawn training users.
struct CodebookSpec
{
    std::string type = "tsodft";
    int oversampling = 4;
    int bits = 8;
    int iterations = 20;
    std::size_t training_users = 0; // 0: same count as the experiment's users
};

struct SubbandSpec
{
    SubbandScheme scheme = SubbandScheme::INT5;
    BitAllocationParams alloc{};
    int n_l = 2;                      // PCB component dimension
    int n_b = 6;                      // PCB component index bits
    int phase_bits = 3;               // PCB combining phase bits
    std::string component = "bloch";  // PCB component family: bloch (n_l = 2) or lloyd
};

struct SweepSpec
{
    std::string type; // wideband_vector | projection | subband | overall | bounds | spectral_efficiency
    std::vector<WidebandScheme> schemes{WidebandScheme::OWP};
    std::vector<PolarizationMode> pol_modes{PolarizationMode::Full};
    std::vector<CodebookSpec> codebooks{CodebookSpec{}};
    std::vector<SubbandSpec> subbands;
    std::vector<CoordinateMode> ind_coordinates{CoordinateMode::PseudoInverse};
    std::optional<ZFConfig> zf;
};

struct ExperimentConfig
{
    std::string name = "experiment";
    std::uint64_t seed = 1;
    std::size_t users = 200;
    int threads = 1; // execution setting only; never changes results and is not echoed
    ArrayGeometry geometry{};
    ClusterModelConfig channel{};
    Eigen::Index k = 8;
    std::size_t max_candidates = 8;
    std::vector<SweepSpec> sweeps;
};

struct Diagnostic
{
    int line = 0; // 1-based; 0 when unknown
    std::string path;
    std::string message;

    std::string str() const;
};

class ConfigError : public std::runtime_error
{
public:
    explicit ConfigError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic> &diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

/// Parses and schema-checks a configuration; throws ConfigError with every problem found.
ExperimentConfig parse_config(const std::string &text);

/// Feasibility checks that need the resolved values (codebook sizes, divisibility, U <= N_t).
std::vector<Diagnostic> check_feasibility(const ExperimentConfig &cfg);

/// Resolved configuration as JSON text; parse_config() of it yields an equivalent configuration.
std::string config_to_json(const ExperimentConfig &cfg);

/// Codebook for the given polarization mode (block dimension for BplusBminus and B00B).
LineCodebook build_wideband_codebook(const ExperimentConfig &cfg, const CodebookSpec &spec, PolarizationMode mode);

ProductCodebook build_product_codebook(const ExperimentConfig &cfg, const SubbandSpec &spec);

struct ReportRow
{
    std::string experiment;
    std::string wideband;
    std::string pol_mode;
    std::string codebook;
    std::optional<int> basis_bits;
    std::optional<int> wb_bits;
    std::string subband;
    std::optional<int> sb_bits;
    std::optional<double> D_H;
    std::optional<double> D_B;
    std::optional<double> d_p;
    std::optional<double> d_vec;
    std::optional<double> lower_gap;
    std::optional<double> upper_gap;
    std::optional<double> residual;
    std::optional<double> snr_db;
    std::optional<double> se;
};

struct InvariantResult
{
    std::string name;
    bool ok = true;
    std::size_t checks = 0;
    std::string detail; // first failure
};

struct ExperimentReport
{
    ExperimentConfig config;
    std::vector<ReportRow> rows;
    std::vector<InvariantResult> invariants;
    std::vector<std::string> notes;

    bool all_ok() const;
};

/// Runs every sweep. threads > 0 overrides the configured worker count.
ExperimentReport run_experiment(const ExperimentConfig &cfg, int threads = 0);

/// Fixed column contract, floats printed with %.17g, empty cells for non-applicable fields.
std::string report_csv(const ExperimentReport &rep);
std::string report_json(const ExperimentReport &rep);

} // namespace csiq
