"""
Distribution Service.
Assembles the q=1/2 MaxEnt distribution from a selection state and
evaluates non-extensive entropies.
"""

import numpy as np
from loguru import logger

from models.state import BiorthState, HalfDistribution
from models.system import ConstraintSystem
from utils.exceptions import DatasetError, UsageError


class DistributionService:
    """Service building p^(1/2) from selected constraints and multipliers."""

    def __init__(self, system: ConstraintSystem):
        """
        Initialize distribution service.

        Args:
            system: Constraint system the state was fitted on
        """
        self.system = system

    def assemble(self, state: BiorthState) -> HalfDistribution:
        """
        p^(1/2)_n = (1/N)(1 - sum_j g_{l_j} lambda_j) + sum_j f_{l_j,n} lambda_j.

        Args:
            state: Selection state

        Returns:
            Distribution with unit component sum
        """
        size = self.system.N
        if any(not 0 <= i < self.system.M for i in state.selected):
            raise UsageError("state refers to constraints outside this system")
        if state.k == 0:
            return HalfDistribution(np.full(size, 1.0 / size))

        lambdas = np.asarray(state.lambdas, dtype=np.float64)
        rows = self.system.kernel[state.selected]
        spread = rows.T @ lambdas
        # sum_j g_{l_j} lambda_j taken as the sum of `spread` so the unit
        # sum survives rounding when the multipliers are large
        uniform = (1.0 - spread.sum()) / size
        return HalfDistribution(uniform + spread)

    def predict(self, state: BiorthState) -> np.ndarray:
        """Data vector f^p predicted by the assembled distribution."""
        return self.system.predict(self.assemble(state))

    @staticmethod
    def entropy_q(distribution: HalfDistribution) -> float:
        """S_(1/2) = 2 (1 - sum_n (p_n^(1/2))^2), using sum_n p_n^(1/2) = 1."""
        phalf = distribution.phalf
        return float(2.0 * (1.0 - np.dot(phalf, phalf)))

    @staticmethod
    def tsallis_entropy(p, q: float) -> float:
        """
        Non-extensive entropy S_q = (sum_n p_n^q - sum_n p_n) / (1 - q).

        Args:
            p: non-negative probabilities
            q: entropic index, q != 1

        Returns:
            S_q
        """
        if q == 1.0:
            raise UsageError("S_q is defined for q != 1")
        p = np.asarray(p, dtype=np.float64)
        if np.any(p < 0):
            raise DatasetError("probabilities must be non-negative")
        if q <= 0 and np.any(p == 0):
            logger.warning("zero probabilities dropped for q <= 0")
            p = p[p > 0]
        return float((np.sum(p ** q) - np.sum(p)) / (1.0 - q))
