"""
Preselection Service.
Data-independent elimination of redundant constraints: indices enter in
order of the largest ratio r_n = ||psi_n||^2 / ||alpha_n||^2 until no
numerically independent candidate is left.
"""

from typing import Optional

import numpy as np
from loguru import logger

from config.settings import settings
from models.state import PreselectReport
from models.system import ConstraintSystem
from services.forward_service import ForwardSelectionService
from services.geometry import project_out, wnorm2, wnorm2_columns
from utils.exceptions import UsageError


class PreselectionService:
    """Service selecting a numerically independent pool of constraints."""

    def __init__(self, system: ConstraintSystem):
        """
        Initialize preselection service.

        Args:
            system: Constraint system; only kernel and measure are used
        """
        self.system = system
        self.mu = system.mu

    def ratios(self, selected) -> np.ndarray:
        """r_n against span{alpha_l : l in selected}; -inf for selected or zero alphas."""
        selected = list(selected)
        alphas = self.system.alphas(range(self.system.M))
        alpha_norm2 = wnorm2_columns(alphas, self.mu)
        basis = self._orthonormal(selected)
        residual_norm2 = wnorm2_columns(project_out(alphas, basis, self.mu), self.mu)
        out = np.full(self.system.M, -np.inf)
        live = alpha_norm2 > 0
        live[selected] = False
        out[live] = residual_norm2[live] / alpha_norm2[live]
        return out

    def preselect(self, threshold: Optional[float] = None, assess: bool = True) -> PreselectReport:
        """
        Greedy hierarchical selection of independent constraints.

        Args:
            threshold: smallest admissible ratio r, in (0, 1]
            assess: also measure the biorthogonality quality of the pool

        Returns:
            PreselectReport with the pool in selection order
        """
        threshold = settings.PRESELECT_THRESHOLD if threshold is None else threshold
        if not 0 < threshold <= 1:
            raise UsageError(f"threshold must lie in (0, 1], got {threshold}")

        alphas = self.system.alphas(range(self.system.M))
        alpha_norm2 = wnorm2_columns(alphas, self.mu)
        live = alpha_norm2 > 0
        if not live.any():
            logger.warning("All alpha vectors vanish; preselection pool is empty")
            return PreselectReport(pool=[], ratios=[], threshold=threshold, status="empty")

        weights = self.mu.weights
        residuals = alphas.copy()
        basis = np.zeros((self.system.M, 0))
        pool, chosen_ratios = [], []

        while live.any():
            residual_norm2 = wnorm2_columns(residuals, self.mu)
            ratios = np.where(live, residual_norm2 / np.where(live, alpha_norm2, 1.0), -np.inf)
            best_ratio = ratios.max()
            if best_ratio < threshold:
                break
            # ties: largest ||alpha|| first, then lowest index
            ties = np.flatnonzero(ratios == best_ratio)
            best = int(ties[np.argmax(alpha_norm2[ties])])

            direction = project_out(residuals[:, best], basis, self.mu, passes=1)
            direction /= np.sqrt(wnorm2(direction, self.mu))
            basis = np.column_stack([basis, direction])
            for _ in range(2):
                residuals -= np.outer(direction, (direction * weights) @ residuals)

            live[best] = False
            pool.append(best)
            chosen_ratios.append(float(best_ratio))
            logger.debug(f"Preselected index {best + 1} with r={best_ratio:.3e}")

        report = PreselectReport(pool=pool, ratios=chosen_ratios, threshold=threshold)
        if assess and pool:
            forward = ForwardSelectionService(self.system, dependence_threshold=0.0)
            report.biorthogonality = forward.biorthogonality_error(forward.replay(pool))
        logger.info(f"Preselection kept {len(pool)} of {self.system.M} constraints")
        return report

    def _orthonormal(self, selected) -> np.ndarray:
        basis = np.zeros((self.system.M, 0))
        for index in selected:
            residual = project_out(self.system.alpha(index), basis, self.mu)
            basis = np.column_stack([basis, residual / np.sqrt(wnorm2(residual, self.mu))])
        return basis
