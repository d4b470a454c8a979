"""
Weighted inner-product geometry on D^M(mu).
Pure functions; safe to call from any thread.
"""

from typing import Union

import numpy as np

from models.system import Measure
from utils.exceptions import DimensionError

MeasureLike = Union[Measure, np.ndarray]


def _weights(mu: MeasureLike) -> np.ndarray:
    return mu.weights if isinstance(mu, Measure) else np.asarray(mu, dtype=np.float64)


def _checked(f, g, mu: MeasureLike):
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    w = _weights(mu)
    if not (f.shape == g.shape == w.shape) or f.ndim != 1:
        raise DimensionError(
            f"length mismatch: {f.shape}, {g.shape} and measure {w.shape}"
        )
    return f, g, w


def winner(f, g, mu: MeasureLike) -> float:
    """<f|g>_mu = sum_i f_i g_i mu_i."""
    f, g, w = _checked(f, g, mu)
    return float(np.dot(f * w, g))


def wnorm2(f, mu: MeasureLike) -> float:
    """||f||^2_mu."""
    return winner(f, f, mu)


def wdist2(f, g, mu: MeasureLike) -> float:
    """||f - g||^2_mu."""
    f, g, w = _checked(f, g, mu)
    diff = f - g
    return float(np.dot(diff * w, diff))


def wnorm2_columns(vectors: np.ndarray, mu: MeasureLike) -> np.ndarray:
    """||v||^2_mu for every column of an M x C matrix."""
    w = _weights(mu)
    return np.einsum("ic,ic->c", vectors * w[:, None], vectors)


def project_out(vectors: np.ndarray, basis: np.ndarray, mu: MeasureLike, passes: int = 2) -> np.ndarray:
    """
    Remove from each column of `vectors` its component in span(basis).

    Args:
        vectors: M x C matrix (or length-M vector)
        basis: M x k matrix with mu-orthonormal columns
        mu: measure
        passes: Gram-Schmidt sweeps; two keep the result orthogonal to
            working precision

    Returns:
        Residuals, same shape as `vectors`
    """
    single = vectors.ndim == 1
    out = vectors[:, None] if single else vectors
    out = np.array(out, dtype=np.float64)
    if basis.shape[1] == 0:
        return out[:, 0] if single else out
    weighted_basis = basis * _weights(mu)[:, None]
    for _ in range(passes):
        out -= basis @ (weighted_basis.T @ out)
    return out[:, 0] if single else out
