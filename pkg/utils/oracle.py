"""
Reference solvers.
Deliberately naive dense computations (explicit Gram matrices, direct
solves) used to cross-check the recursive machinery at small scale.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from loguru import logger

from config.settings import settings
from models.system import ConstraintSystem
from utils.exceptions import ConditionError, UsageError


class ReferenceSolver:
    """Brute-force normal-equation solves and rank estimates."""

    @staticmethod
    def gram(system: ConstraintSystem, indices: Sequence[int]) -> np.ndarray:
        """G_jm = <alpha_j | alpha_m>_mu."""
        alphas = system.alphas(indices)
        return alphas.T @ (alphas * system.mu.weights[:, None])

    @staticmethod
    def project(
        system: ConstraintSystem,
        indices: Sequence[int],
        vector,
        max_condition: Optional[float] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Orthogonal projection of `vector` onto span{alpha_l : l in indices}.

        Args:
            system: Constraint system
            indices: 0-based constraint indices
            vector: data-space vector to project
            max_condition: largest acceptable Gram condition number

        Returns:
            (coefficients, projection)
        """
        indices = list(indices)
        vector = np.asarray(vector, dtype=np.float64)
        if not indices:
            return np.zeros(0), np.zeros(system.M)

        max_condition = settings.ORACLE_MAX_CONDITION if max_condition is None else max_condition
        alphas = system.alphas(indices)
        gram = ReferenceSolver.gram(system, indices)
        condition = np.linalg.cond(gram)
        if not np.isfinite(condition) or condition > max_condition:
            raise ConditionError(f"Gram matrix condition {condition:.3e} exceeds {max_condition:.1e}")

        rhs = alphas.T @ (system.mu.weights * vector)
        coefficients = sla.lu_solve(sla.lu_factor(gram), rhs)
        return coefficients, alphas @ coefficients

    @staticmethod
    def solve_normal(
        system: ConstraintSystem,
        indices: Sequence[int],
        max_condition: Optional[float] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Coefficients c minimizing ||f~o - sum_j c_j alpha_j||_mu, and the projection."""
        return ReferenceSolver.project(
            system, indices, system.derive().ftilde, max_condition=max_condition
        )

    @staticmethod
    def numerical_rank(system: ConstraintSystem, tol: float) -> int:
        """
        Rank of the alpha family by complete-pivoting elimination of its
        Gram matrix: pivots above tol * (largest pivot) are counted.
        """
        if not 0 < tol < 1:
            raise UsageError(f"tol must lie in (0, 1), got {tol}")
        work = ReferenceSolver.gram(system, range(system.M)).copy()
        size = work.shape[0]
        pivots: List[float] = []

        for step in range(size):
            block = np.abs(work[step:, step:])
            row, col = np.unravel_index(np.argmax(block), block.shape)
            row += step
            col += step
            pivot = block[row - step, col - step]
            if pivot == 0 or (pivots and pivot <= tol * pivots[0]):
                break
            work[[step, row], :] = work[[row, step], :]
            work[:, [step, col]] = work[:, [col, step]]
            pivots.append(float(pivot))
            factors = work[step + 1:, step] / work[step, step]
            work[step + 1:, step:] -= np.outer(factors, work[step, step:])

        logger.debug(f"Numerical rank {len(pivots)} at tol={tol:g}")
        return len(pivots)
