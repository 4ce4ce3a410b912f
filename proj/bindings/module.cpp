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

#include "csiq/codebook.hpp"
#include "csiq/experiment.hpp"
#include "csiq/linalg.hpp"
#include "csiq/subband.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace csiq;

namespace
{

std::vector<std::string> diagnostics_of(const std::string &text)
{
    std::vector<std::string> out;
    try
    {
        (void)check_feasibility(parse_config(text));
    }
    catch (const ConfigError &e)
    {
        for (const Diagnostic &d : e.diagnostics())
            out.push_back(d.str());
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_csiq, m)
{
    m.doc() = "Python bindings for the csiq CSI feedback quantization library";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("chordal_distance", &chordal_distance, py::arg("x"), py::arg("y"));
    m.def("orthonormalize", [](const CMat &v) { return orthonormalize(v); }, py::arg("v"));

    m.def("tsodft_words", [](int n_h, int n_v, int o_h, int o_v, bool polarized) {
        return tsodft(n_h, n_v, o_h, o_v, polarized).words();
    }, py::arg("n_h"), py::arg("n_v"), py::arg("oversampling_h"), py::arg("oversampling_v"), py::arg("polarized"));

    m.def("quantize_line", [](const CVec &u, const CMat &words) {
        const QuantizeResult q = quantize_line(u, LineCodebook(words, "python"));
        return py::make_tuple(q.indices.at(0), q.distortion);
    }, py::arg("u"), py::arg("words"), "Return (index, squared chordal distance) of the nearest codeword.");

    m.def("subband_bits", [](const std::string &scheme, Eigen::Index k, int m_strong, int b_strong, int b_weak) {
        const SubbandScheme s = subband_scheme_from_string(scheme);
        BitAllocationParams p;
        p.m = m_strong;
        p.b_strong = b_strong;
        p.b_weak = b_weak;
        p.eta = s == SubbandScheme::INT5 ? 5.0 : 2.0;
        return bit_count(s, k, p);
    }, py::arg("scheme"), py::arg("k"), py::arg("m"), py::arg("b_strong") = 3, py::arg("b_weak") = 2);

    m.def("validate_config", &diagnostics_of, py::arg("text"),
          "Return the diagnostics of a JSON configuration; an empty list means it is valid.");

    m.def("run_config", [](const std::string &text, int threads) {
        ExperimentReport rep;
        {
            py::gil_scoped_release release;
            rep = run_experiment(parse_config(text), threads);
        }
        py::dict out;
        out["csv"] = report_csv(rep);
        out["json"] = report_json(rep);
        out["ok"] = rep.all_ok();
        return out;
    }, py::arg("text"), py::arg("threads") = 1, "Run an experiment and return its CSV and JSON reports.");
}
