# SPDX-License-Identifier: Apache-2.0
"""Python interface to the csiq CSI feedback quantization library."""

import json

from ._csiq import (
    ConfigError,
    chordal_distance,
    orthonormalize,
    quantize_line,
    run_config,
    subband_bits,
    tsodft_words,
    validate_config,
)

__all__ = [
    "ConfigError",
    "chordal_distance",
    "orthonormalize",
    "quantize_line",
    "run",
    "run_config",
    "subband_bits",
    "tsodft_words",
    "validate_config",
]


def run(config, threads=1):
    """Run an experiment from a dict or JSON string and return the parsed JSON report."""
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(run_config(text, threads)["json"])
