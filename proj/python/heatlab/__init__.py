"""Python bindings for the heatlab C++ core."""

import json

from ._heatlab import (
    HeatlabError,
    Kernel,
    Manifold,
    bell_number,
    commands,
    cumulant_leading,
    distance,
    distance_via,
    exit_probability,
    exp_jet,
    execute_json,
    is_cut_pair,
    log_jet,
    mc_exit_probability,
    presets,
    through_kernel,
    version,
)


def run(config, threads=0):
    """Runs one command config (a dict) and returns the report as a dict."""
    return json.loads(execute_json(json.dumps(config), threads))


__all__ = [
    "HeatlabError",
    "Kernel",
    "Manifold",
    "bell_number",
    "commands",
    "cumulant_leading",
    "distance",
    "distance_via",
    "exit_probability",
    "exp_jet",
    "execute_json",
    "is_cut_pair",
    "log_jet",
    "mc_exit_probability",
    "presets",
    "run",
    "through_kernel",
    "version",
]
