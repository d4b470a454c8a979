"""
Backward Pruning Service.
Removes the Lagrange multipliers of least relevance and recomputes the
survivors by backward biorthogonalization.
"""

from typing import List

import numpy as np
from loguru import logger

from models.state import BiorthState, PruneResult, StopReason, StopRule, TraceStep
from models.system import ConstraintSystem
from services.forward_service import ForwardSelectionService
from services.geometry import project_out, winner, wnorm2
from utils.exceptions import UsageError


class BackwardPruningService:
    """Service for reducing the number of multipliers of a fitted state."""

    def __init__(self, system: ConstraintSystem):
        """
        Initialize backward pruning service.

        Args:
            system: Constraint system the state was fitted on
        """
        self.system = system
        self.mu = system.mu
        self.forward = ForwardSelectionService(system)

    def removal_scores(self, state: BiorthState) -> np.ndarray:
        """
        lambda_j^2 / ||dual_j||^2_mu for every selected position.

        The multiplier to remove is the argmin: it is the residual increase
        caused by dropping position j.
        """
        if state.k == 0:
            raise UsageError("cannot score removals on an empty state")
        return np.array(
            [lam ** 2 / wnorm2(dual, self.mu) for lam, dual in zip(state.lambdas, state.duals)]
        )

    def energy_drop(self, state: BiorthState, position: int) -> float:
        """||P_k f~o||^2 - ||P_(k/j) f~o||^2 for position j."""
        self._check_position(state, position)
        return float(state.lambdas[position] ** 2 / wnorm2(state.duals[position], self.mu))

    def remove(self, state: BiorthState, position: int) -> BiorthState:
        """
        Drop the constraint at `position` and update the survivors.

        Args:
            state: current state with k entries
            position: 0-based position in `state.selected`

        Returns:
            New state with k-1 entries
        """
        self._check_position(state, position)
        removed_dual = state.duals[position]
        removed_lambda = state.lambdas[position]
        dual_norm2 = wnorm2(removed_dual, self.mu)

        duals, lambdas = [], []
        for n, (dual, lam) in enumerate(zip(state.duals, state.lambdas)):
            if n == position:
                continue
            overlap = winner(removed_dual, dual, self.mu) / dual_norm2
            duals.append(dual - overlap * removed_dual)
            lambdas.append(lam - overlap * removed_lambda)

        selected = state.selected[:position] + state.selected[position + 1:]
        psi, psi_norm2 = self._rebuild_residuals(selected)
        return BiorthState(
            selected=selected,
            psi=psi,
            psi_norm2=psi_norm2,
            duals=duals,
            lambdas=lambdas,
            projection=state.projection - (removed_lambda / dual_norm2) * removed_dual,
            extensions=state.extensions,
        )

    def prune(self, state: BiorthState, stop: StopRule) -> PruneResult:
        """
        Remove multipliers one at a time while the prediction stays within
        the admissible residual.

        Args:
            state: state from a completed forward fit
            stop: stopping rule of the pruning phase (larger t)

        Returns:
            PruneResult with the reduced state and the removed indices
        """
        current = state.copy()
        residual = self.forward.residual2(current)
        removed: List[int] = []
        trace = [TraceStep(0, -1, current.k, residual, wnorm2(current.projection, self.mu))]
        reason = StopReason.EMPTY

        while current.k > 0:
            position = int(np.argmin(self.removal_scores(current)))
            candidate = self.remove(current, position)
            candidate_residual = self.forward.residual2(candidate)
            if not candidate_residual < stop.epsilon_norm2:
                reason = StopReason.BOUND
                logger.debug(
                    f"Removal of {current.selected[position] + 1} rolled back "
                    f"(residual2={candidate_residual:.6g})"
                )
                break

            removed.append(current.selected[position])
            current, residual = candidate, candidate_residual
            trace.append(
                TraceStep(len(trace), removed[-1], current.k, residual, wnorm2(current.projection, self.mu))
            )
            logger.debug(f"Pruned index {removed[-1] + 1}, k={current.k}, residual2={residual:.6g}")

        logger.info(f"Pruning kept k={current.k} of {state.k} ({len(removed)} removed)")
        return PruneResult(
            state=current,
            removed=removed,
            residual2=residual,
            stop_reason=reason,
            trace=trace,
        )

    def _rebuild_residuals(self, selected: List[int]):
        """Re-orthogonalize the surviving alphas in their stored order."""
        psi, psi_norm2 = [], []
        basis = np.zeros((self.system.M, 0))
        for index in selected:
            residual = project_out(self.system.alpha(index), basis, self.mu)
            norm2 = wnorm2(residual, self.mu)
            psi.append(residual)
            psi_norm2.append(norm2)
            basis = np.column_stack([basis, residual / np.sqrt(norm2)])
        return psi, psi_norm2

    @staticmethod
    def _check_position(state: BiorthState, position: int):
        if not 0 <= position < state.k:
            raise UsageError(f"position {position} out of range for k={state.k}")
