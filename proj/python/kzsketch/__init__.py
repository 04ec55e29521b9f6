"""Coreset sketches for (k,z)-clustering."""

import json

from ._kzsketch import (
    KzError,
    bit_size,
    build_coreset,
    compress,
    cost,
    decode,
    estimate_cost,
    find_partial_coloring,
    principal_angles,
    sample_haar_basis,
    theoretical_upper_bound,
)
from ._kzsketch import run_spec as _run_spec

__all__ = [
    "KzError",
    "bit_size",
    "build_coreset",
    "compress",
    "cost",
    "decode",
    "estimate_cost",
    "find_partial_coloring",
    "principal_angles",
    "run",
    "sample_haar_basis",
    "theoretical_upper_bound",
]


def run(command, seed=0, **params):
    """Run a command-line experiment in process and return (exit_code, report)."""
    spec = {"command": command, "seed": seed, "params": params}
    code, report = _run_spec(json.dumps(spec))
    return code, json.loads(report)
