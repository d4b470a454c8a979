"""
Selection state models.
Biorthogonal bookkeeping for the forward/backward procedures, stopping
rules, the assembled distribution and the results handed to the controller.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from models.system import Measure
from utils.exceptions import DatasetError, DimensionError


class StopReason(str, Enum):
    """Why a forward fit or a prune finished."""
    THRESHOLD = "threshold"
    MAX_K = "max_k"
    EXHAUSTED = "exhausted"
    BOUND = "bound"
    EMPTY = "empty"


@dataclass
class BiorthState:
    """
    Selected indices with their residual vectors psi, dual vectors and
    Lagrange multipliers.

    Invariants: all lists share length k, `selected` has no repeats,
    <duals[n] | alpha(selected[m])>_mu = delta_nm and
    projection = sum_n lambdas[n] alpha(selected[n]).
    """

    selected: List[int]
    psi: List[np.ndarray]
    psi_norm2: List[float]
    duals: List[np.ndarray]
    lambdas: List[float]
    projection: np.ndarray
    extensions: int = 0

    @classmethod
    def empty(cls, size: int) -> "BiorthState":
        return cls(
            selected=[],
            psi=[],
            psi_norm2=[],
            duals=[],
            lambdas=[],
            projection=np.zeros(size),
        )

    @property
    def k(self) -> int:
        return len(self.selected)

    def copy(self) -> "BiorthState":
        """Snapshot; arrays are never mutated in place, so a shallow list copy suffices."""
        return BiorthState(
            selected=list(self.selected),
            psi=list(self.psi),
            psi_norm2=list(self.psi_norm2),
            duals=list(self.duals),
            lambdas=list(self.lambdas),
            projection=self.projection,
            extensions=self.extensions,
        )

    def orthonormal_basis(self) -> np.ndarray:
        """psi / ||psi||_mu as columns of an M x k matrix."""
        if not self.psi:
            return np.zeros((self.projection.shape[0], 0))
        return np.column_stack(
            [p / np.sqrt(n2) for p, n2 in zip(self.psi, self.psi_norm2)]
        )


@dataclass(frozen=True)
class StopRule:
    """Admissible residual ||eps||^2_mu with eps_i = t sigma_i."""

    t: float
    epsilon_norm2: float
    max_k: Optional[int] = None

    def __post_init__(self):
        if not self.t > 0:
            raise DatasetError(f"stopping factor t must be positive, got {self.t}")
        if not self.epsilon_norm2 >= 0:
            raise DatasetError(f"epsilon norm must be non-negative, got {self.epsilon_norm2}")
        if self.max_k is not None and self.max_k < 0:
            raise DatasetError(f"max_k must be non-negative, got {self.max_k}")

    @classmethod
    def from_sigma(
        cls,
        t: float,
        sigma,
        mu: Measure,
        max_k: Optional[int] = None,
    ) -> "StopRule":
        """
        Build the rule from per-datum standard deviations.

        Args:
            t: noise inflation factor, typically in [1, 3]
            sigma: standard deviations sigma_i
            mu: measure the residual is computed in
            max_k: optional cap on the number of multipliers

        Returns:
            StopRule with epsilon_norm2 = sum_i (t sigma_i)^2 mu_i
        """
        sigma = np.asarray(sigma, dtype=np.float64)
        if sigma.shape != mu.weights.shape:
            raise DimensionError("sigma and measure lengths differ")
        eps = t * sigma
        return cls(t=t, epsilon_norm2=float(np.dot(eps * mu.weights, eps)), max_k=max_k)


@dataclass(frozen=True)
class HalfDistribution:
    """Components p_n^(1/2); normalized to unit sum, components may be negative."""

    phalf: np.ndarray

    @property
    def N(self) -> int:
        return self.phalf.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        """p_n = (p_n^(1/2))^2."""
        return self.phalf ** 2

    def total(self) -> float:
        return float(np.sum(self.phalf))


@dataclass(frozen=True)
class TraceStep:
    """One forward extension or backward removal."""
    step: int
    index: int
    k: int
    residual2: float
    projection_norm2: float


@dataclass
class ForwardFit:
    """Outcome of a forward fit."""
    state: BiorthState
    stop_reason: StopReason
    residual2: float
    trace: List[TraceStep] = field(default_factory=list)


@dataclass
class PruneResult:
    """Outcome of backward pruning."""
    state: BiorthState
    removed: List[int]
    residual2: float
    stop_reason: StopReason
    trace: List[TraceStep] = field(default_factory=list)


@dataclass
class PreselectReport:
    """Data-independent pool with the ratio r at which each index entered."""
    pool: List[int]
    ratios: List[float]
    threshold: float
    status: str = "ok"
    biorthogonality: float = 0.0
