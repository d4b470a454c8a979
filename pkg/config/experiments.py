"""
Built-in experiment definitions.

Both ground truths are Gaussian mixtures (two bumps over n = 1..50, five
bumps over n = 1..450) normalized to unit sum, so p doubles as p^(1/2).
The example2 bumps sit 63 apart with widths near the kernel resolution;
five multipliers then predict its data closer to f_true than f_obs is.

Noise is drawn from numpy's Generator(PCG64(seed)).standard_normal
(ziggurat), with sigma_i a fraction of |f_true_i|.
"""

from typing import Dict

from models.schemas import ExperimentSpec

EXAMPLE1 = {
    "name": "example1",
    "kernel_family": "exponential",
    "M": 100,
    "N": 50,
    "noise_fraction": 0.2,
    "seed": 1,
    "measure_mode": "inverse_variance",
    "kernel_scale": 0.01,
    "truth": {
        "components": [
            {"weight": 1.0, "center": 15.0, "width": 4.0},
            {"weight": 0.7, "center": 35.0, "width": 5.0},
        ],
        "total": 1.0,
    },
}

EXAMPLE2 = {
    "name": "example2",
    "kernel_family": "lorentzian",
    "M": 700,
    "N": 450,
    "noise_fraction": 0.1,
    "seed": 1,
    "measure_mode": "uniform",
    "kernel_scale": 0.01,
    "kernel_offset": 100.0,
    "truth": {
        "components": [
            {"weight": 1.15, "center": 89.0, "width": 12.0},
            {"weight": 0.7, "center": 152.0, "width": 14.0},
            {"weight": 0.8, "center": 215.0, "width": 13.0},
            {"weight": 0.6, "center": 278.0, "width": 14.0},
            {"weight": 0.75, "center": 341.0, "width": 13.0},
        ],
        "total": 1.0,
    },
}

BUILTIN_EXPERIMENTS: Dict[str, dict] = {
    "example1": EXAMPLE1,
    "example2": EXAMPLE2,
}


def builtin_spec(name: str, **overrides) -> ExperimentSpec:
    """Validated copy of a built-in experiment with optional field overrides."""
    return ExperimentSpec.model_validate({**BUILTIN_EXPERIMENTS[name], **overrides})
