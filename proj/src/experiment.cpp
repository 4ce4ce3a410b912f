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
#include "csiq/parallel.hpp"
#include "csiq/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

namespace csiq
{

using json = nlohmann::json;

namespace
{

// Substreams of the master seed.
constexpr std::uint64_t stream_channels = 1;
constexpr std::uint64_t stream_training = 2;
constexpr std::uint64_t stream_lloyd = 3;
constexpr std::uint64_t stream_drops = 4;
constexpr std::uint64_t stream_component = 5;

constexpr double invariant_tol = 1e-9;
constexpr double nulling_tol = 1e-8;

// ---------------------------------------------------------------------------------------------
// Source positions: maps JSON pointers to the line where their value (or key) starts.

class LineMap
{
public:
    explicit LineMap(const std::string &text) : t_(text)
    {
        value("");
    }

    int line_of(std::string path) const
    {
        while (true)
        {
            auto it = lines_.find(path);
            if (it != lines_.end())
                return it->second;
            if (path.empty())
                return 0;
            path.erase(path.rfind('/'));
        }
    }

private:
    void ws()
    {
        while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_])))
        {
            if (t_[i_] == '\n')
                ++line_;
            ++i_;
        }
    }

    std::string str()
    {
        std::string out;
        ++i_; // opening quote
        while (i_ < t_.size() && t_[i_] != '"')
        {
            if (t_[i_] == '\\' && i_ + 1 < t_.size())
                ++i_;
            out += t_[i_++];
        }
        ++i_;
        return out;
    }

    void value(const std::string &path)
    {
        ws();
        if (i_ >= t_.size())
            return;
        lines_.emplace(path, line_);
        const char c = t_[i_];
        if (c == '{')
        {
            ++i_;
            while (true)
            {
                ws();
                if (i_ >= t_.size() || t_[i_] == '}')
                    break;
                if (t_[i_] == ',')
                {
                    ++i_;
                    continue;
                }
                const int key_line = line_;
                const std::string key = str();
                lines_.emplace(path + "/" + key, key_line);
                ws();
                if (i_ < t_.size() && t_[i_] == ':')
                    ++i_;
                value(path + "/" + key);
            }
            ++i_;
        }
        else if (c == '[')
        {
            ++i_;
            std::size_t idx = 0;
            while (true)
            {
                ws();
                if (i_ >= t_.size() || t_[i_] == ']')
                    break;
                if (t_[i_] == ',')
                {
                    ++i_;
                    continue;
                }
                value(path + "/" + std::to_string(idx++));
            }
            ++i_;
        }
        else if (c == '"')
            str();
        else
            while (i_ < t_.size() && t_[i_] != ',' && t_[i_] != '}' && t_[i_] != ']' &&
                   !std::isspace(static_cast<unsigned char>(t_[i_])))
                ++i_;
    }

    const std::string &t_;
    std::size_t i_ = 0;
    int line_ = 1;
    std::map<std::string, int> lines_;
};

// ---------------------------------------------------------------------------------------------
// Schema checking

class Checker
{
public:
    explicit Checker(const LineMap &lines) : lines_(lines) {}

    void error(const std::string &path, const std::string &message)
    {
        diagnostics.push_back({lines_.line_of(path), path.empty() ? "/" : path, message});
    }

    bool object(const json &j, const std::string &path, const std::vector<std::string> &allowed)
    {
        if (!j.is_object())
        {
            error(path, "expected an object");
            return false;
        }
        for (const auto &[key, _] : j.items())
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                error(path + "/" + key, "unknown field");
        return true;
    }

    template <typename T>
    std::optional<T> integer(const json &obj, const std::string &path, const std::string &key, long long lo,
                             long long hi, bool required = false)
    {
        if (!obj.contains(key))
        {
            if (required)
                error(path + "/" + key, "required field missing");
            return std::nullopt;
        }
        return integer_value<T>(obj.at(key), path + "/" + key, lo, hi);
    }

    template <typename T>
    std::optional<T> integer_value(const json &v, const std::string &p, long long lo, long long hi)
    {
        if (!v.is_number_integer())
        {
            error(p, "expected an integer");
            return std::nullopt;
        }
        if (v.is_number_unsigned())
        {
            const auto u = v.get<std::uint64_t>();
            if (hi >= 0 && u > static_cast<std::uint64_t>(hi))
            {
                error(p, "must be <= " + std::to_string(hi));
                return std::nullopt;
            }
            return static_cast<T>(u);
        }
        const auto s = v.get<long long>();
        if (s < lo || (hi >= 0 && s > hi))
        {
            error(p, "must be in [" + std::to_string(lo) + ", " + (hi >= 0 ? std::to_string(hi) : "inf") + "]");
            return std::nullopt;
        }
        return static_cast<T>(s);
    }

    std::optional<double> number(const json &obj, const std::string &path, const std::string &key, double lo,
                                 double hi)
    {
        if (!obj.contains(key))
            return std::nullopt;
        const json &v = obj.at(key);
        const std::string p = path + "/" + key;
        if (!v.is_number())
        {
            error(p, "expected a number");
            return std::nullopt;
        }
        const double d = v.get<double>();
        if (!(d >= lo && d <= hi))
        {
            std::ostringstream os;
            os << "must be in [" << lo << ", " << hi << "]";
            error(p, os.str());
            return std::nullopt;
        }
        return d;
    }

    std::optional<std::string> string(const json &obj, const std::string &path, const std::string &key,
                                      const std::vector<std::string> &choices, bool required = false)
    {
        if (!obj.contains(key))
        {
            if (required)
                error(path + "/" + key, "required field missing");
            return std::nullopt;
        }
        return string_value(obj.at(key), path + "/" + key, choices);
    }

    std::optional<std::string> string_value(const json &v, const std::string &p, const std::vector<std::string> &choices)
    {
        if (!v.is_string())
        {
            error(p, "expected a string");
            return std::nullopt;
        }
        const auto s = v.get<std::string>();
        if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end())
        {
            std::string all;
            for (const auto &c : choices)
                all += (all.empty() ? "" : "|") + c;
            error(p, "must be one of " + all);
            return std::nullopt;
        }
        return s;
    }

    /// A scalar or a non-empty array of integers.
    std::vector<int> int_list(const json &obj, const std::string &path, const std::string &key, long long lo,
                              long long hi, std::vector<int> fallback)
    {
        if (!obj.contains(key))
            return fallback;
        const json &v = obj.at(key);
        const std::string p = path + "/" + key;
        std::vector<int> out;
        if (v.is_array())
        {
            if (v.empty())
                error(p, "list must not be empty");
            for (std::size_t i = 0; i < v.size(); ++i)
                if (auto x = integer_value<int>(v[i], p + "/" + std::to_string(i), lo, hi))
                    out.push_back(*x);
            return out;
        }
        if (auto x = integer_value<int>(v, p, lo, hi))
            out.push_back(*x);
        return out;
    }

    std::vector<std::string> string_list(const json &obj, const std::string &path, const std::string &key,
                                         const std::vector<std::string> &choices, std::vector<std::string> fallback)
    {
        if (!obj.contains(key))
            return fallback;
        const json &v = obj.at(key);
        const std::string p = path + "/" + key;
        std::vector<std::string> out;
        if (v.is_array())
        {
            if (v.empty())
                error(p, "list must not be empty");
            for (std::size_t i = 0; i < v.size(); ++i)
                if (auto x = string_value(v[i], p + "/" + std::to_string(i), choices))
                    out.push_back(*x);
            return out;
        }
        if (auto x = string_value(v, p, choices))
            out.push_back(*x);
        return out;
    }

    std::vector<Diagnostic> diagnostics;

private:
    const LineMap &lines_;
};

const std::vector<std::string> sweep_types = {"wideband_vector", "projection", "subband",
                                              "overall",         "bounds",     "spectral_efficiency"};

bool uses_subbands(const std::string &type)
{
    return type == "subband" || type == "overall" || type == "bounds" || type == "spectral_efficiency";
}

std::vector<CodebookSpec> parse_codebooks(Checker &ck, const json &arr, const std::string &path)
{
    std::vector<CodebookSpec> out;
    if (!arr.is_array() || arr.empty())
    {
        ck.error(path, "expected a non-empty array of codebook specs");
        return out;
    }
    for (std::size_t i = 0; i < arr.size(); ++i)
    {
        const std::string p = path + "/" + std::to_string(i);
        const json &c = arr[i];
        if (!ck.object(c, p, {"type", "oversampling", "bits", "iterations", "training_users"}))
            continue;
        const auto type = ck.string(c, p, "type", {"tsodft", "lloyd"}, true);
        if (!type)
            continue;
        CodebookSpec base;
        base.type = *type;
        if (*type == "tsodft")
        {
            for (const char *k : {"bits", "iterations", "training_users"})
                if (c.contains(k))
                    ck.error(p + "/" + k, "not a tsodft field");
            for (int o : ck.int_list(c, p, "oversampling", 1, 1 << 20, {4}))
            {
                CodebookSpec s = base;
                s.oversampling = o;
                out.push_back(s);
            }
        }
        else
        {
            if (c.contains("oversampling"))
                ck.error(p + "/oversampling", "not a lloyd field");
            base.iterations = ck.integer<int>(c, p, "iterations", 0, 1000).value_or(20);
            base.training_users = ck.integer<std::size_t>(c, p, "training_users", 1, 1 << 20).value_or(0);
            for (int b : ck.int_list(c, p, "bits", 1, 20, {8}))
            {
                CodebookSpec s = base;
                s.bits = b;
                out.push_back(s);
            }
        }
    }
    return out;
}

std::vector<SubbandSpec> parse_subbands(Checker &ck, const json &arr, const std::string &path)
{
    std::vector<SubbandSpec> out;
    if (!arr.is_array() || arr.empty())
    {
        ck.error(path, "expected a non-empty array of subband specs");
        return out;
    }
    for (std::size_t i = 0; i < arr.size(); ++i)
    {
        const std::string p = path + "/" + std::to_string(i);
        const json &c = arr[i];
        if (!ck.object(c, p, {"scheme", "m", "B_l", "B_s", "eta", "n_l", "n_b", "phase_bits", "component"}))
            continue;
        const auto scheme = ck.string(c, p, "scheme", {"EXT2", "INT5", "PCB", "perfect"}, true);
        if (!scheme)
            continue;
        SubbandSpec base;
        base.scheme = subband_scheme_from_string(*scheme);
        const std::vector<std::string> scalar_keys = {"m", "B_l", "B_s", "eta"};
        const std::vector<std::string> pcb_keys = {"n_l", "n_b", "phase_bits", "component"};
        if (base.scheme == SubbandScheme::EXT2 || base.scheme == SubbandScheme::INT5)
        {
            for (const auto &k : pcb_keys)
                if (c.contains(k))
                    ck.error(p + "/" + k, "not a field of scheme " + *scheme);
            base.alloc.eta = base.scheme == SubbandScheme::EXT2 ? 2.0 : 5.0;
            if (auto eta = ck.number(c, p, "eta", 0.0, 1e9); eta && *eta != base.alloc.eta)
                ck.error(p + "/eta", "scheme " + *scheme + " fixes eta to " + std::to_string(int(base.alloc.eta)));
            base.alloc.b_strong = ck.integer<int>(c, p, "B_l", 1, 16).value_or(3);
            base.alloc.b_weak = ck.integer<int>(c, p, "B_s", 1, 16).value_or(2);
            for (int m : ck.int_list(c, p, "m", 0, 4096, {base.scheme == SubbandScheme::EXT2 ? 6 : 4}))
            {
                SubbandSpec s = base;
                s.alloc.m = m;
                out.push_back(s);
            }
        }
        else if (base.scheme == SubbandScheme::PCB)
        {
            for (const auto &k : scalar_keys)
                if (c.contains(k))
                    ck.error(p + "/" + k, "not a field of scheme PCB");
            base.n_l = ck.integer<int>(c, p, "n_l", 1, 64).value_or(2);
            base.component = ck.string(c, p, "component", {"bloch", "lloyd"}).value_or("bloch");
            const auto n_bs = ck.int_list(c, p, "n_b", 1, 20, {6});
            const auto phs = ck.int_list(c, p, "phase_bits", 0, 16, {3});
            for (int nb : n_bs)
                for (int ph : phs)
                {
                    SubbandSpec s = base;
                    s.n_b = nb;
                    s.phase_bits = ph;
                    out.push_back(s);
                }
        }
        else
        {
            for (const auto &[key, _] : c.items())
                if (key != "scheme")
                    ck.error(p + "/" + key, "the perfect reference takes no parameters");
            out.push_back(base);
        }
    }
    return out;
}

std::string subband_label(const SubbandSpec &s)
{
    switch (s.scheme)
    {
    case SubbandScheme::EXT2:
    case SubbandScheme::INT5:
        return std::string(to_string(s.scheme)) + "(m=" + std::to_string(s.alloc.m) +
               ";Bl=" + std::to_string(s.alloc.b_strong) + ";Bs=" + std::to_string(s.alloc.b_weak) + ")";
    case SubbandScheme::PCB:
        return "PCB(nl=" + std::to_string(s.n_l) + ";nb=" + std::to_string(s.n_b) +
               ";ph=" + std::to_string(s.phase_bits) + ";" + s.component + ")";
    case SubbandScheme::Perfect:
        return "perfect";
    }
    return "?";
}

std::string codebook_label(const CodebookSpec &s)
{
    if (s.type == "tsodft")
        return "tsodft_o" + std::to_string(s.oversampling);
    return "lloyd_b" + std::to_string(s.bits);
}

std::string coordinate_label(CoordinateMode m)
{
    return m == CoordinateMode::PseudoInverse ? "pi" : "naive";
}

std::size_t codebook_size(const ExperimentConfig &cfg, const CodebookSpec &s, PolarizationMode mode)
{
    if (s.type == "lloyd")
        return std::size_t{1} << s.bits;
    const std::size_t base = static_cast<std::size_t>(s.oversampling) * static_cast<std::size_t>(cfg.geometry.n_h) *
                             static_cast<std::size_t>(cfg.geometry.n_v);
    const bool pol = mode == PolarizationMode::Full && cfg.geometry.n_p == 2;
    return pol ? 4 * base : base;
}

} // namespace

std::string Diagnostic::str() const
{
    return (line > 0 ? "line " + std::to_string(line) + ": " : std::string{}) + path + ": " + message;
}

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error([&] {
          std::string s = "invalid configuration";
          for (const auto &d : diagnostics)
              s += "\n  " + d.str();
          return s;
      }()),
      diagnostics_(std::move(diagnostics))
{
}

ExperimentConfig parse_config(const std::string &text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
        throw ConfigError({{line, "/", std::string("JSON syntax error: ") + e.what()}});
    }
    const LineMap lines(text);
    Checker ck(lines);
    ExperimentConfig cfg;
    if (!ck.object(j, "", {"schema_version", "name", "seed", "users", "threads", "geometry", "channel", "K",
                           "max_candidates", "sweeps"}))
        throw ConfigError(ck.diagnostics);

    if (auto v = ck.integer<int>(j, "", "schema_version", 0, 1 << 20, true); v && *v != config_schema_version)
        ck.error("/schema_version", "unsupported schema version " + std::to_string(*v) + " (expected " +
                                        std::to_string(config_schema_version) + ")");
    if (j.contains("name"))
        cfg.name = ck.string(j, "", "name", {}).value_or(cfg.name);
    cfg.seed = ck.integer<std::uint64_t>(j, "", "seed", 0, -1).value_or(cfg.seed);
    cfg.users = ck.integer<std::size_t>(j, "", "users", 1, 1 << 20).value_or(cfg.users);
    cfg.threads = ck.integer<int>(j, "", "threads", 1, 1024).value_or(cfg.threads);
    cfg.k = ck.integer<Eigen::Index>(j, "", "K", 1, 4096).value_or(cfg.k);
    cfg.max_candidates = ck.integer<std::size_t>(j, "", "max_candidates", 1, 1 << 20).value_or(cfg.max_candidates);

    if (j.contains("geometry") && ck.object(j["geometry"], "/geometry", {"n_h", "n_v", "n_p", "spacing"}))
    {
        const json &g = j["geometry"];
        cfg.geometry.n_h = ck.integer<int>(g, "/geometry", "n_h", 1, 1024).value_or(cfg.geometry.n_h);
        cfg.geometry.n_v = ck.integer<int>(g, "/geometry", "n_v", 1, 1024).value_or(cfg.geometry.n_v);
        cfg.geometry.n_p = ck.integer<int>(g, "/geometry", "n_p", 1, 2).value_or(cfg.geometry.n_p);
        cfg.geometry.spacing = ck.number(g, "/geometry", "spacing", 1e-6, 1e6).value_or(cfg.geometry.spacing);
    }
    if (j.contains("channel") &&
        ck.object(j["channel"], "/channel",
                  {"n_clusters", "rays_per_cluster", "angle_spread_deg", "elevation_spread_deg", "sector_deg",
                   "elevation_range_deg", "delay_spread_s", "bandwidth_hz", "n_subbands", "indoor_ratio",
                   "indoor_attenuation", "cluster_shadowing_db"}))
    {
        const json &c = j["channel"];
        const std::string p = "/channel";
        auto &m = cfg.channel;
        m.n_clusters = ck.integer<int>(c, p, "n_clusters", 1, 1000).value_or(m.n_clusters);
        m.rays_per_cluster = ck.integer<int>(c, p, "rays_per_cluster", 1, 10000).value_or(m.rays_per_cluster);
        m.angle_spread_deg = ck.number(c, p, "angle_spread_deg", 0.0, 360.0).value_or(m.angle_spread_deg);
        m.elevation_spread_deg = ck.number(c, p, "elevation_spread_deg", 0.0, 180.0).value_or(m.elevation_spread_deg);
        m.sector_deg = ck.number(c, p, "sector_deg", 0.0, 360.0).value_or(m.sector_deg);
        m.elevation_range_deg = ck.number(c, p, "elevation_range_deg", 0.0, 90.0).value_or(m.elevation_range_deg);
        m.delay_spread_s = ck.number(c, p, "delay_spread_s", 0.0, 1e-3).value_or(m.delay_spread_s);
        m.bandwidth_hz = ck.number(c, p, "bandwidth_hz", 1.0, 1e12).value_or(m.bandwidth_hz);
        m.n_subbands = ck.integer<int>(c, p, "n_subbands", 1, 100000).value_or(m.n_subbands);
        m.indoor_ratio = ck.number(c, p, "indoor_ratio", 0.0, 1.0).value_or(m.indoor_ratio);
        m.indoor_attenuation = ck.number(c, p, "indoor_attenuation", 1e-12, 1.0).value_or(m.indoor_attenuation);
        m.cluster_shadowing_db = ck.number(c, p, "cluster_shadowing_db", 0.0, 100.0).value_or(m.cluster_shadowing_db);
    }

    if (!j.contains("sweeps"))
        ck.error("/sweeps", "required field missing");
    else if (!j["sweeps"].is_array() || j["sweeps"].empty())
        ck.error("/sweeps", "expected a non-empty array");
    else
        for (std::size_t i = 0; i < j["sweeps"].size(); ++i)
        {
            const std::string p = "/sweeps/" + std::to_string(i);
            const json &s = j["sweeps"][i];
            if (!s.is_object())
            {
                ck.error(p, "expected an object");
                continue;
            }
            const auto type = ck.string(s, p, "type", sweep_types, true);
            if (!type)
                continue;
            std::vector<std::string> allowed = {"type", "pol_modes", "codebooks"};
            if (*type != "wideband_vector")
                allowed.push_back("schemes");
            if (uses_subbands(*type))
            {
                allowed.push_back("subbands");
                allowed.push_back("ind_coordinates");
            }
            if (*type == "spectral_efficiency")
                allowed.push_back("zf");
            ck.object(s, p, allowed);

            SweepSpec sw;
            sw.type = *type;
            if (*type == "wideband_vector")
                sw.schemes = {WidebandScheme::IND};
            else
            {
                sw.schemes.clear();
                for (const auto &n : ck.string_list(s, p, "schemes", {"IND", "OWP", "SWP"}, {"OWP"}))
                    sw.schemes.push_back(wideband_scheme_from_string(n));
            }
            sw.pol_modes.clear();
            for (const auto &n : ck.string_list(s, p, "pol_modes", {"full", "bplusbminus", "b00b"}, {"full"}))
                sw.pol_modes.push_back(polarization_mode_from_string(n));
            if (s.contains("codebooks"))
                sw.codebooks = parse_codebooks(ck, s["codebooks"], p + "/codebooks");
            if (uses_subbands(*type))
            {
                if (!s.contains("subbands"))
                    ck.error(p + "/subbands", "required field missing");
                else
                    sw.subbands = parse_subbands(ck, s["subbands"], p + "/subbands");
                sw.ind_coordinates.clear();
                for (const auto &n : ck.string_list(s, p, "ind_coordinates", {"pi", "naive"}, {"pi"}))
                    sw.ind_coordinates.push_back(n == "pi" ? CoordinateMode::PseudoInverse : CoordinateMode::Projection);
            }
            if (*type == "spectral_efficiency")
            {
                ZFConfig zf;
                if (s.contains("zf") && ck.object(s["zf"], p + "/zf", {"users_per_drop", "drops", "snr_db", "power"}))
                {
                    const json &z = s["zf"];
                    const std::string zp = p + "/zf";
                    zf.users_per_drop = ck.integer<int>(z, zp, "users_per_drop", 1, 4096).value_or(zf.users_per_drop);
                    zf.drops = ck.integer<int>(z, zp, "drops", 1, 1 << 24).value_or(zf.drops);
                    zf.power = ck.number(z, zp, "power", 1e-300, 1e300).value_or(zf.power);
                    if (z.contains("snr_db"))
                    {
                        zf.snr_db.clear();
                        const json &g = z["snr_db"];
                        if (!g.is_array() || g.empty())
                            ck.error(zp + "/snr_db", "expected a non-empty array of numbers");
                        else
                            for (std::size_t q = 0; q < g.size(); ++q)
                            {
                                if (!g[q].is_number())
                                    ck.error(zp + "/snr_db/" + std::to_string(q), "expected a number");
                                else
                                    zf.snr_db.push_back(g[q].get<double>());
                            }
                    }
                }
                sw.zf = zf;
            }
            cfg.sweeps.push_back(std::move(sw));
        }

    if (!ck.diagnostics.empty())
        throw ConfigError(ck.diagnostics);

    // Feasibility problems are reported against the source lines where possible.
    std::vector<Diagnostic> feas = check_feasibility(cfg);
    for (Diagnostic &d : feas)
        d.line = lines.line_of(d.path);
    if (!feas.empty())
        throw ConfigError(std::move(feas));
    return cfg;
}

std::vector<Diagnostic> check_feasibility(const ExperimentConfig &cfg)
{
    std::vector<Diagnostic> out;
    auto err = [&](const std::string &path, const std::string &msg) { out.push_back({0, path, msg}); };
    try
    {
        cfg.geometry.validate();
        cfg.channel.validate();
    }
    catch (const std::exception &e)
    {
        err("/", e.what());
        return out;
    }
    const Eigen::Index n_t = cfg.geometry.n_t();
    if (cfg.k > n_t)
        err("/K", "K = " + std::to_string(cfg.k) + " exceeds N_t = " + std::to_string(n_t));
    for (std::size_t i = 0; i < cfg.sweeps.size(); ++i)
    {
        const SweepSpec &s = cfg.sweeps[i];
        const std::string p = "/sweeps/" + std::to_string(i);
        for (PolarizationMode mode : s.pol_modes)
        {
            if (mode != PolarizationMode::Full && (cfg.geometry.n_p != 2 || cfg.k % 2 != 0))
            {
                err(p + "/pol_modes", "mode " + std::string(to_string(mode)) + " needs n_p = 2 and even K");
                continue;
            }
            for (std::size_t c = 0; c < s.codebooks.size(); ++c)
            {
                const CodebookSpec &cb = s.codebooks[c];
                const std::string cp = p + "/codebooks";
                if (cb.type == "tsodft")
                {
                    if ((cb.oversampling & (cb.oversampling - 1)) != 0)
                    {
                        err(cp, "oversampling " + std::to_string(cb.oversampling) + " must be a power of two");
                        continue;
                    }
                    if (cfg.geometry.n_h == 1 && cfg.geometry.n_v == 1 && cb.oversampling > 1)
                    {
                        err(cp, "a single-column array cannot be oversampled");
                        continue;
                    }
                    const std::size_t size = codebook_size(cfg, cb, mode);
                    if (size > codebook_size_cap ||
                        static_cast<std::size_t>(cb.oversampling) * static_cast<std::size_t>(n_t) > codebook_size_cap)
                        err(cp, "codebook with oversampling " + std::to_string(cb.oversampling) + " has " +
                                    std::to_string(size) + " words, above the cap of " +
                                    std::to_string(codebook_size_cap));
                }
                else
                {
                    const BlockLayout l = block_layout(mode, n_t, std::min<Eigen::Index>(cfg.k, n_t));
                    const std::size_t train = cb.training_users ? cb.training_users : cfg.users;
                    const std::size_t samples = train * static_cast<std::size_t>(l.blocks * l.block_k);
                    if ((std::size_t{1} << cb.bits) > samples)
                        err(cp, "lloyd codebook of 2^" + std::to_string(cb.bits) + " words needs at least that many "
                                "training eigenvectors (have " + std::to_string(samples) + ")");
                }
                if (s.type != "wideband_vector" && s.type != "projection")
                    for (WidebandScheme sch : s.schemes)
                        if (sch != WidebandScheme::IND &&
                            codebook_size(cfg, cb, mode) < static_cast<std::size_t>(block_layout(mode, n_t, std::min<Eigen::Index>(cfg.k, n_t)).block_k))
                            err(cp, "codebook smaller than the number of beams per block");
            }
        }
        for (std::size_t b = 0; b < s.subbands.size(); ++b)
        {
            const SubbandSpec &sb = s.subbands[b];
            const std::string sp = p + "/subbands/" + std::to_string(b);
            if (sb.scheme == SubbandScheme::EXT2 || sb.scheme == SubbandScheme::INT5)
            {
                try
                {
                    sb.alloc.validate(cfg.k, sb.scheme);
                }
                catch (const std::exception &e)
                {
                    err(sp, e.what());
                }
            }
            else if (sb.scheme == SubbandScheme::PCB)
            {
                if (cfg.k % sb.n_l != 0)
                    err(sp + "/n_l", "K = " + std::to_string(cfg.k) + " is not divisible by N_l = " +
                                         std::to_string(sb.n_l));
                if (sb.component == "bloch" && sb.n_l != 2)
                    err(sp + "/component", "the bloch component codebook needs N_l = 2");
            }
        }
        if (s.zf)
        {
            if (s.zf->users_per_drop > n_t)
                err(p + "/zf/users_per_drop", "U = " + std::to_string(s.zf->users_per_drop) + " exceeds N_t = " +
                                                  std::to_string(n_t));
            if (static_cast<std::size_t>(s.zf->users_per_drop) > cfg.users)
                err(p + "/zf/users_per_drop", "U exceeds the number of users");
        }
    }
    return out;
}

namespace
{

json codebook_json(const CodebookSpec &c)
{
    if (c.type == "tsodft")
        return {{"type", "tsodft"}, {"oversampling", c.oversampling}};
    json j = {{"type", "lloyd"}, {"bits", c.bits}, {"iterations", c.iterations}};
    if (c.training_users)
        j["training_users"] = c.training_users;
    return j;
}

json subband_json(const SubbandSpec &s)
{
    switch (s.scheme)
    {
    case SubbandScheme::EXT2:
    case SubbandScheme::INT5:
        return {{"scheme", std::string(to_string(s.scheme))},
                {"m", s.alloc.m},
                {"B_l", s.alloc.b_strong},
                {"B_s", s.alloc.b_weak}};
    case SubbandScheme::PCB:
        return {{"scheme", "PCB"}, {"n_l", s.n_l}, {"n_b", s.n_b}, {"phase_bits", s.phase_bits},
                {"component", s.component}};
    case SubbandScheme::Perfect:
        return {{"scheme", "perfect"}};
    }
    return {};
}

json config_json(const ExperimentConfig &cfg)
{
    json j;
    j["schema_version"] = config_schema_version;
    j["name"] = cfg.name;
    j["seed"] = cfg.seed;
    j["users"] = cfg.users;
    j["K"] = cfg.k;
    j["max_candidates"] = cfg.max_candidates;
    j["geometry"] = {{"n_h", cfg.geometry.n_h},
                     {"n_v", cfg.geometry.n_v},
                     {"n_p", cfg.geometry.n_p},
                     {"spacing", cfg.geometry.spacing}};
    const auto &c = cfg.channel;
    j["channel"] = {{"n_clusters", c.n_clusters},
                    {"rays_per_cluster", c.rays_per_cluster},
                    {"angle_spread_deg", c.angle_spread_deg},
                    {"elevation_spread_deg", c.elevation_spread_deg},
                    {"sector_deg", c.sector_deg},
                    {"elevation_range_deg", c.elevation_range_deg},
                    {"delay_spread_s", c.delay_spread_s},
                    {"bandwidth_hz", c.bandwidth_hz},
                    {"n_subbands", c.n_subbands},
                    {"indoor_ratio", c.indoor_ratio},
                    {"indoor_attenuation", c.indoor_attenuation},
                    {"cluster_shadowing_db", c.cluster_shadowing_db}};
    j["sweeps"] = json::array();
    for (const SweepSpec &s : cfg.sweeps)
    {
        json sj;
        sj["type"] = s.type;
        if (s.type != "wideband_vector")
        {
            sj["schemes"] = json::array();
            for (auto x : s.schemes)
                sj["schemes"].push_back(std::string(to_string(x)));
        }
        sj["pol_modes"] = json::array();
        for (auto x : s.pol_modes)
            sj["pol_modes"].push_back(std::string(to_string(x)));
        sj["codebooks"] = json::array();
        for (const auto &x : s.codebooks)
            sj["codebooks"].push_back(codebook_json(x));
        if (uses_subbands(s.type))
        {
            sj["subbands"] = json::array();
            for (const auto &x : s.subbands)
                sj["subbands"].push_back(subband_json(x));
            sj["ind_coordinates"] = json::array();
            for (auto x : s.ind_coordinates)
                sj["ind_coordinates"].push_back(coordinate_label(x));
        }
        if (s.zf)
            sj["zf"] = {{"users_per_drop", s.zf->users_per_drop},
                        {"drops", s.zf->drops},
                        {"snr_db", s.zf->snr_db},
                        {"power", s.zf->power}};
        j["sweeps"].push_back(std::move(sj));
    }
    return j;
}

} // namespace

std::string config_to_json(const ExperimentConfig &cfg)
{
    return config_json(cfg).dump(2) + "\n";
}

// ---------------------------------------------------------------------------------------------
// Codebook construction

namespace
{

std::vector<CVec> training_samples(const ExperimentConfig &cfg, std::size_t count, PolarizationMode mode, int threads)
{
    const auto users = generate_channels(cfg.geometry, cfg.channel, substream_seed(cfg.seed, stream_training), count,
                                         threads);
    const BlockLayout l = block_layout(mode, cfg.geometry.n_t(), cfg.k);
    std::vector<std::vector<CVec>> per_user(users.size());
    parallel_for(users.size(), threads, [&](std::size_t u) {
        const HermitianPSD r = normalized_sample_covariance(users[u]);
        for (const HermitianPSD &b : polarization_blocks(r, mode))
        {
            const EigenBasis eb = eigh_topk(b, l.block_k);
            for (Eigen::Index j = 0; j < eb.vectors.cols(); ++j)
                per_user[u].push_back(eb.vectors.col(j));
        }
    });
    std::vector<CVec> out;
    for (auto &v : per_user)
        for (auto &x : v)
            out.push_back(std::move(x));
    return out;
}

LineCodebook build_codebook_threads(const ExperimentConfig &cfg, const CodebookSpec &spec, PolarizationMode mode,
                                    int threads)
{
    if (spec.type == "tsodft")
    {
        auto [oh, ov] = split_oversampling(spec.oversampling);
        if (cfg.geometry.n_v == 1)
            std::tie(oh, ov) = std::pair{spec.oversampling, 1};
        else if (cfg.geometry.n_h == 1)
            std::tie(oh, ov) = std::pair{1, spec.oversampling};
        const bool pol = mode == PolarizationMode::Full && cfg.geometry.n_p == 2;
        return tsodft(cfg.geometry.n_h, cfg.geometry.n_v, oh, ov, pol);
    }
    if (spec.type == "lloyd")
    {
        const std::size_t count = spec.training_users ? spec.training_users : cfg.users;
        const auto samples = training_samples(cfg, count, mode, threads);
        const std::uint64_t seed =
            substream_seed(substream_seed(cfg.seed, stream_lloyd), (static_cast<std::uint64_t>(spec.bits) << 8) |
                                                                        static_cast<std::uint64_t>(mode));
        return lloyd_train(samples, std::size_t{1} << spec.bits, spec.iterations, seed, codebook_label(spec))
            .codebook;
    }
    throw std::invalid_argument("unknown codebook type '" + spec.type + "'");
}

} // namespace

LineCodebook build_wideband_codebook(const ExperimentConfig &cfg, const CodebookSpec &spec, PolarizationMode mode)
{
    return build_codebook_threads(cfg, spec, mode, 1);
}

ProductCodebook build_product_codebook(const ExperimentConfig &cfg, const SubbandSpec &spec)
{
    const std::size_t size = std::size_t{1} << spec.n_b;
    const int blocks = static_cast<int>(cfg.k / spec.n_l);
    if (spec.component == "bloch")
    {
        if (spec.n_l != 2)
            throw std::invalid_argument("build_product_codebook: the bloch component needs N_l = 2");
        return ProductCodebook(bloch_codebook(size), blocks, spec.phase_bits);
    }
    Rng rng(substream_seed(cfg.seed, stream_component), static_cast<std::uint64_t>(spec.n_l * 64 + spec.n_b));
    std::vector<CVec> samples;
    const std::size_t count = std::max<std::size_t>(20 * size, 1000);
    for (std::size_t i = 0; i < count; ++i)
        samples.push_back(rng.unit_vector(spec.n_l));
    LineCodebook comp = lloyd_train(samples, size, 20, substream_seed(cfg.seed, stream_component), "iso_lloyd").codebook;
    return ProductCodebook(std::move(comp), blocks, spec.phase_bits);
}

// ---------------------------------------------------------------------------------------------
// Running

bool ExperimentReport::all_ok() const
{
    return std::all_of(invariants.begin(), invariants.end(), [](const InvariantResult &r) { return r.ok; });
}

namespace
{

class Invariants
{
public:
    void check(const std::string &name, bool ok, const std::string &detail)
    {
        auto it = std::find_if(list.begin(), list.end(), [&](const InvariantResult &r) { return r.name == name; });
        if (it == list.end())
        {
            list.push_back({name, true, 0, {}});
            it = list.end() - 1;
        }
        ++it->checks;
        if (!ok && it->ok)
        {
            it->ok = false;
            it->detail = detail;
        }
    }
    std::vector<InvariantResult> list;
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Runner
{
    const ExperimentConfig &cfg;
    int threads;
    std::vector<ChannelSet> users;
    std::map<std::string, LineCodebook> codebooks;
    std::map<std::string, ProductCodebook> products;
    ExperimentReport rep;
    Invariants inv;

    const LineCodebook &codebook(const CodebookSpec &spec, PolarizationMode mode)
    {
        const std::string key = codebook_json(spec).dump() + "|" + std::string(to_string(mode));
        auto it = codebooks.find(key);
        if (it == codebooks.end())
            it = codebooks.emplace(key, build_codebook_threads(cfg, spec, mode, threads)).first;
        return it->second;
    }

    std::optional<ProductCodebook> product(const SubbandSpec &spec)
    {
        if (spec.scheme != SubbandScheme::PCB)
            return std::nullopt;
        const std::string key = subband_json(spec).dump();
        auto it = products.find(key);
        if (it == products.end())
            it = products.emplace(key, build_product_codebook(cfg, spec)).first;
        return it->second;
    }

    ReportRow base_row(const SweepSpec &s, const std::string &wideband, PolarizationMode mode, const CodebookSpec &cb)
    {
        ReportRow r;
        r.experiment = s.type;
        r.wideband = wideband;
        r.pol_mode = std::string(to_string(mode));
        r.codebook = codebook_label(cb);
        return r;
    }

    void wideband_vector(const SweepSpec &s)
    {
        for (PolarizationMode mode : s.pol_modes)
            for (const CodebookSpec &spec : s.codebooks)
            {
                const LineCodebook &cb = codebook(spec, mode);
                const BlockLayout l = block_layout(mode, cfg.geometry.n_t(), cfg.k);
                std::vector<double> per_user(users.size());
                parallel_for(users.size(), threads, [&](std::size_t u) {
                    const HermitianPSD r = normalized_sample_covariance(users[u]);
                    double sum = 0.0;
                    int n = 0;
                    for (const HermitianPSD &b : polarization_blocks(r, mode))
                    {
                        const EigenBasis eb = eigh_topk(b, l.block_k);
                        for (Eigen::Index j = 0; j < eb.vectors.cols(); ++j, ++n)
                            sum += quantize_line(eb.vectors.col(j), cb).distortion;
                    }
                    per_user[u] = sum / n;
                });
                double mean = 0.0;
                for (double v : per_user)
                    mean += v;
                ReportRow row = base_row(s, "IND", mode, spec);
                row.basis_bits = cb.index_bits();
                row.d_vec = mean / static_cast<double>(users.size());
                rep.rows.push_back(row);
            }
    }

    void projection(const SweepSpec &s)
    {
        for (WidebandScheme scheme : s.schemes)
            for (PolarizationMode mode : s.pol_modes)
                for (const CodebookSpec &spec : s.codebooks)
                {
                    const LineCodebook &cb = codebook(spec, mode);
                    std::vector<double> dp(users.size());
                    std::vector<int> basis(users.size()), total(users.size());
                    parallel_for(users.size(), threads, [&](std::size_t u) {
                        const HermitianPSD r = normalized_sample_covariance(users[u]);
                        const WidebandFeedback fb =
                            quantize_wideband(r, cfg.k, scheme, mode, cb, cfg.max_candidates);
                        dp[u] = projection_distortion(fb.W, r);
                        basis[u] = fb.basis_bits();
                        total[u] = fb.bit_count();
                    });
                    double mean = 0.0;
                    for (double v : dp)
                        mean += v;
                    ReportRow row = base_row(s, std::string(to_string(scheme)), mode, spec);
                    row.basis_bits = basis.front();
                    row.wb_bits = total.front();
                    row.d_p = mean / static_cast<double>(users.size());
                    rep.rows.push_back(row);
                }
    }

    void check_pipeline(const std::string &where, WidebandScheme scheme, const DistortionReport &d)
    {
        if (scheme == WidebandScheme::IND)
        {
            for (std::size_t u = 0; u < d.user_D_H.size(); ++u)
                if (d.user_D_B[u] + d.user_d_p[u] - d.user_D_H[u] < -invariant_tol)
                {
                    rep.notes.push_back(where + ": IND upper bound violated for user " + std::to_string(u) +
                                        " (upper_gap " + fmt(d.user_D_B[u] + d.user_d_p[u] - d.user_D_H[u]) + ")");
                    break;
                }
            return;
        }
        inv.check("decomposition_identity", d.decomposition_residual <= invariant_tol,
                  where + ": residual " + fmt(d.decomposition_residual));
        bool lower = d.lower_gap >= -invariant_tol;
        bool upper = d.upper_gap >= -invariant_tol;
        std::string detail = where;
        for (std::size_t u = 0; u < d.user_D_H.size(); ++u)
        {
            if (d.user_D_H[u] - d.user_d_p[u] < -invariant_tol && lower)
            {
                lower = false;
                detail += ": user " + std::to_string(u);
            }
            if (d.user_D_B[u] + d.user_d_p[u] - d.user_D_H[u] < -invariant_tol && upper)
            {
                upper = false;
                detail += ": user " + std::to_string(u);
            }
        }
        inv.check("distortion_lower_bound", lower, detail + " lower_gap " + fmt(d.lower_gap));
        inv.check("distortion_upper_bound", upper, detail + " upper_gap " + fmt(d.upper_gap));
    }

    void pipelines(const SweepSpec &s)
    {
        std::vector<std::vector<double>> se_curves;
        for (WidebandScheme scheme : s.schemes)
            for (PolarizationMode mode : s.pol_modes)
                for (const CodebookSpec &spec : s.codebooks)
                    for (const SubbandSpec &sb : s.subbands)
                    {
                        const std::vector<CoordinateMode> coords =
                            scheme == WidebandScheme::IND ? s.ind_coordinates
                                                          : std::vector<CoordinateMode>{CoordinateMode::Projection};
                        for (CoordinateMode cm : coords)
                        {
                            PipelineConfig pc;
                            pc.k = cfg.k;
                            pc.wideband = scheme;
                            pc.pol_mode = mode;
                            pc.subband = sb.scheme;
                            pc.alloc = sb.alloc;
                            pc.pcb = product(sb);
                            pc.ind_coordinates = cm;
                            pc.max_candidates = cfg.max_candidates;
                            const LineCodebook &cb = codebook(spec, mode);
                            std::string wb_label(to_string(scheme));
                            if (scheme == WidebandScheme::IND)
                                wb_label += "-" + coordinate_label(cm);
                            const std::string where = s.type + "/" + wb_label + "/" + std::string(to_string(mode)) +
                                                      "/" + codebook_label(spec) + "/" + subband_label(sb);
                            std::vector<UserOutcome> outcomes;
                            const DistortionReport d = evaluate_pipeline(users, cb, pc, threads, &outcomes);
                            check_pipeline(where, scheme, d);
                            if (d.inexact > 0)
                                rep.notes.push_back(where + ": " + std::to_string(d.inexact) +
                                                    " product searches stopped at the node budget");
                            ReportRow row = base_row(s, wb_label, mode, spec);
                            row.basis_bits = outcomes.front().wideband.basis_bits();
                            row.wb_bits = d.wb_bits;
                            row.subband = subband_label(sb);
                            if (sb.scheme != SubbandScheme::Perfect)
                                row.sb_bits = d.sb_bits;
                            row.D_H = d.D_H;
                            row.D_B = d.D_B;
                            row.d_p = d.d_p;
                            row.lower_gap = d.lower_gap;
                            row.upper_gap = d.upper_gap;
                            row.residual = d.decomposition_residual;
                            if (s.type != "spectral_efficiency")
                            {
                                rep.rows.push_back(row);
                                continue;
                            }
                            std::vector<std::vector<CVec>> h_hat(users.size());
                            for (std::size_t u = 0; u < users.size(); ++u)
                                h_hat[u] = std::move(outcomes[u].terms.h_hat);
                            se_rows(s, row, where, spectral_efficiency(users, h_hat, *s.zf,
                                                                       substream_seed(cfg.seed, stream_drops), threads),
                                    se_curves);
                        }
                    }
        if (s.type == "spectral_efficiency")
        {
            const SpectralEfficiency perfect = spectral_efficiency(users, perfect_feedback(users), *s.zf,
                                                                   substream_seed(cfg.seed, stream_drops), threads);
            ReportRow row;
            row.experiment = s.type;
            row.wideband = "perfect";
            row.subband = "perfect";
            std::vector<std::vector<double>> none;
            se_rows(s, row, s.type + "/perfect", perfect, none);
            for (std::size_t c = 0; c < se_curves.size(); ++c)
                for (std::size_t q = 0; q < perfect.se.size(); ++q)
                    inv.check("perfect_csi_dominance", perfect.se[q] >= se_curves[c][q],
                              "curve " + std::to_string(c) + " exceeds perfect CSI at " + fmt(perfect.snr_db[q]) +
                                  " dB");
        }
    }

    void se_rows(const SweepSpec &s, const ReportRow &base, const std::string &where, const SpectralEfficiency &se,
                 std::vector<std::vector<double>> &curves)
    {
        (void)s;
        inv.check("zf_nulling", se.max_nulling_residual <= nulling_tol,
                  where + ": nulling residual " + fmt(se.max_nulling_residual));
        for (std::size_t q = 1; q < se.se.size(); ++q)
            if (se.snr_db[q] >= se.snr_db[q - 1])
                inv.check("se_monotone_in_snr", se.se[q] >= se.se[q - 1],
                          where + ": SE decreases between " + fmt(se.snr_db[q - 1]) + " and " + fmt(se.snr_db[q]) +
                              " dB");
        if (se.dropped_users > 0)
            rep.notes.push_back(where + ": " + std::to_string(se.dropped_users) +
                                " user slots dropped for rank-deficient feedback");
        if (base.wideband != "perfect")
            curves.push_back(se.se);
        for (std::size_t q = 0; q < se.se.size(); ++q)
        {
            ReportRow r = base;
            r.snr_db = se.snr_db[q];
            r.se = se.se[q];
            rep.rows.push_back(r);
        }
    }
};

} // namespace

ExperimentReport run_experiment(const ExperimentConfig &cfg, int threads)
{
    {
        const auto problems = check_feasibility(cfg);
        if (!problems.empty())
            throw ConfigError(problems);
    }
    Runner run{cfg, threads > 0 ? threads : cfg.threads, {}, {}, {}, {}, {}};
    run.rep.config = cfg;
    run.users = generate_channels(cfg.geometry, cfg.channel, substream_seed(cfg.seed, stream_channels), cfg.users,
                                  run.threads);
    for (const SweepSpec &s : cfg.sweeps)
    {
        try
        {
            if (s.type == "wideband_vector")
                run.wideband_vector(s);
            else if (s.type == "projection")
                run.projection(s);
            else
                run.pipelines(s);
        }
        catch (const std::logic_error &e)
        {
            // Internal consistency checks (payload lengths, projector structure, ...) are invariants.
            const std::string what = e.what();
            const std::string key = "invariant ";
            if (what.rfind(key, 0) != 0)
                throw;
            run.inv.check(what.substr(key.size(), what.find(':') - key.size()), false, s.type + ": " + what);
        }
    }
    run.rep.invariants = run.inv.list;
    return std::move(run.rep);
}

std::string report_csv(const ExperimentReport &rep)
{
    std::ostringstream os;
    os << "experiment,wideband,pol_mode,codebook,basis_bits,wb_bits,subband,sb_bits,D_H,D_B,d_p,d_vec,lower_gap,"
          "upper_gap,residual,snr_db,se\n";
    auto i = [](const std::optional<int> &v) { return v ? std::to_string(*v) : std::string{}; };
    auto d = [](const std::optional<double> &v) { return v ? fmt(*v) : std::string{}; };
    for (const ReportRow &r : rep.rows)
        os << r.experiment << ',' << r.wideband << ',' << r.pol_mode << ',' << r.codebook << ',' << i(r.basis_bits)
           << ',' << i(r.wb_bits) << ',' << r.subband << ',' << i(r.sb_bits) << ',' << d(r.D_H) << ',' << d(r.D_B)
           << ',' << d(r.d_p) << ',' << d(r.d_vec) << ',' << d(r.lower_gap) << ',' << d(r.upper_gap) << ','
           << d(r.residual) << ',' << d(r.snr_db) << ',' << d(r.se) << '\n';
    return os.str();
}

std::string report_json(const ExperimentReport &rep)
{
    json j;
    j["schema_version"] = report_schema_version;
    j["name"] = rep.config.name;
    j["seed"] = rep.config.seed;
    j["config"] = config_json(rep.config);
    j["rows"] = json::array();
    for (const ReportRow &r : rep.rows)
    {
        json row = {{"experiment", r.experiment}, {"wideband", r.wideband}};
        if (!r.pol_mode.empty())
            row["pol_mode"] = r.pol_mode;
        if (!r.codebook.empty())
            row["codebook"] = r.codebook;
        if (!r.subband.empty())
            row["subband"] = r.subband;
        auto put_i = [&](const char *k, const std::optional<int> &v) {
            if (v)
                row[k] = *v;
        };
        auto put_d = [&](const char *k, const std::optional<double> &v) {
            if (v)
                row[k] = *v;
        };
        put_i("basis_bits", r.basis_bits);
        put_i("wb_bits", r.wb_bits);
        put_i("sb_bits", r.sb_bits);
        put_d("D_H", r.D_H);
        put_d("D_B", r.D_B);
        put_d("d_p", r.d_p);
        put_d("d_vec", r.d_vec);
        put_d("lower_gap", r.lower_gap);
        put_d("upper_gap", r.upper_gap);
        put_d("residual", r.residual);
        put_d("snr_db", r.snr_db);
        put_d("se", r.se);
        j["rows"].push_back(std::move(row));
    }
    j["invariants"] = json::array();
    for (const InvariantResult &r : rep.invariants)
        j["invariants"].push_back({{"name", r.name}, {"ok", r.ok}, {"checks", r.checks}, {"detail", r.detail}});
    j["notes"] = rep.notes;
    j["ok"] = rep.all_ok();
    return j.dump(2) + "\n";
}

} // namespace csiq
