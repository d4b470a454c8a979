"""
Constraint system models.
The measure on data space, the kernel with its observed data, and the
quantities derived from them (g, f~o and the alpha vectors).
"""

import threading
from dataclasses import dataclass
from typing import Dict, Iterable, Optional

import numpy as np

from utils.exceptions import DatasetError, DimensionError, UsageError


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Copy values into a read-only 1-D float64 array."""
    vec = np.array(values, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {vec.shape}")
    vec.setflags(write=False)
    return vec


@dataclass(frozen=True)
class Measure:
    """Per-datum non-negative weights defining the inner product on D^M(mu)."""

    weights: np.ndarray

    def __post_init__(self):
        weights = as_vector(self.weights, "measure weights")
        if not np.all(np.isfinite(weights)):
            raise DatasetError("measure weights must be finite")
        if np.any(weights < 0):
            raise DatasetError("measure weights must be non-negative")
        if not np.any(weights > 0):
            raise DatasetError("at least one measure weight must be positive")
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def uniform(cls, size: int) -> "Measure":
        """Unit weight on every datum."""
        return cls(np.ones(size))

    @classmethod
    def from_sigma(cls, sigma) -> "Measure":
        """Inverse-variance weights mu_i = sigma_i^-2."""
        sigma = as_vector(sigma, "sigma")
        if np.any(sigma <= 0):
            raise DatasetError("sigma must be strictly positive")
        return cls(sigma ** -2)

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == 1.0))


@dataclass(frozen=True)
class DerivedData:
    """Row sums g of the kernel and the shifted data f~o = f^o - g/N."""

    g: np.ndarray
    ftilde: np.ndarray


class ConstraintSystem:
    """
    Kernel f_{i,n}, observed data f^o, measure mu and optional sigma.

    Indices are 0-based everywhere inside the library; files and reports
    use 1-based indices.
    """

    def __init__(
        self,
        kernel,
        fobs,
        mu: Optional[Measure] = None,
        sigma=None,
        f_true=None,
    ):
        """
        Build and validate a constraint system.

        Args:
            kernel: M x N matrix of f_{i,n}
            fobs: observed data, length M
            mu: measure on data space (uniform when omitted)
            sigma: optional per-datum standard deviations
            f_true: optional noiseless data, carried for prediction checks
        """
        kernel = np.array(kernel, dtype=np.float64)
        if kernel.ndim != 2:
            raise DimensionError(f"kernel must be a matrix, got shape {kernel.shape}")
        if kernel.shape[1] < 1:
            raise DimensionError("kernel needs at least one column (N >= 1)")
        if not np.all(np.isfinite(kernel)):
            raise DatasetError("kernel entries must be finite")
        kernel.setflags(write=False)

        fobs = as_vector(fobs, "f_obs")
        size = kernel.shape[0]
        if fobs.shape[0] != size:
            raise DimensionError(f"f_obs has length {fobs.shape[0]}, kernel has {size} rows")

        mu = mu if mu is not None else Measure.uniform(size)
        if len(mu) != size:
            raise DimensionError(f"measure has length {len(mu)}, kernel has {size} rows")

        if sigma is not None:
            sigma = as_vector(sigma, "sigma")
            if sigma.shape[0] != size:
                raise DimensionError(f"sigma has length {sigma.shape[0]}, expected {size}")
            if np.any(sigma <= 0):
                raise DatasetError("sigma must be strictly positive")

        if f_true is not None:
            f_true = as_vector(f_true, "f_true")
            if f_true.shape[0] != size:
                raise DimensionError(f"f_true has length {f_true.shape[0]}, expected {size}")

        self.kernel = kernel
        self.fobs = fobs
        self.mu = mu
        self.sigma = sigma
        self.f_true = f_true
        self._derived: Optional[DerivedData] = None
        self._alpha_cache: Dict[int, np.ndarray] = {}
        self._alpha_lock = threading.Lock()

    @property
    def M(self) -> int:
        return self.kernel.shape[0]

    @property
    def N(self) -> int:
        return self.kernel.shape[1]

    def with_measure(self, mu: Measure) -> "ConstraintSystem":
        """Same kernel and data under another measure; the alpha cache is shared."""
        clone = ConstraintSystem(self.kernel, self.fobs, mu=mu, sigma=self.sigma, f_true=self.f_true)
        clone._alpha_cache = self._alpha_cache
        clone._alpha_lock = self._alpha_lock
        return clone

    def derive(self) -> DerivedData:
        """g_i = sum_n f_{i,n} and f~o = f^o - g/N."""
        if self._derived is None:
            g = self.kernel.sum(axis=1)
            ftilde = self.fobs - g / self.N
            g.setflags(write=False)
            ftilde.setflags(write=False)
            self._derived = DerivedData(g=g, ftilde=ftilde)
        return self._derived

    def _check_index(self, index: int) -> int:
        if not 0 <= index < self.M:
            raise UsageError(f"constraint index {index} out of range [0, {self.M})")
        return int(index)

    def alpha(self, index: int) -> np.ndarray:
        """
        Column l of F F^T - g g^T / N.

        Measure-free: the measure only enters through inner products taken
        on these vectors. Computed once per index and cached.
        """
        index = self._check_index(index)
        cached = self._alpha_cache.get(index)
        if cached is not None:
            return cached

        g = self.derive().g
        vector = self.kernel @ self.kernel[index] - g * (g[index] / self.N)
        vector.setflags(write=False)
        with self._alpha_lock:
            # first writer wins so every reader sees the same array
            return self._alpha_cache.setdefault(index, vector)

    def alphas(self, indices: Iterable[int]) -> np.ndarray:
        """Stack alpha vectors as the columns of an M x len(indices) matrix."""
        indices = list(indices)
        if not indices:
            return np.zeros((self.M, 0))
        return np.column_stack([self.alpha(i) for i in indices])

    def predict(self, phalf) -> np.ndarray:
        """f^p_i = sum_n f_{i,n} p_n^(1/2)."""
        phalf = np.asarray(getattr(phalf, "phalf", phalf), dtype=np.float64)
        if phalf.shape != (self.N,):
            raise DimensionError(f"distribution has shape {phalf.shape}, expected ({self.N},)")
        return self.kernel @ phalf
