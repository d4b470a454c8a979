"""
Forward Selection Service.
Greedy selection of constraints with adaptive biorthogonalization: residual
vectors psi, dual vectors and Lagrange multipliers are updated recursively
as each index enters.
"""

from typing import Iterable, List, Optional

import numpy as np
import scipy.linalg as sla
from loguru import logger

from config.settings import settings
from models.state import BiorthState, ForwardFit, StopReason, StopRule, TraceStep
from models.system import ConstraintSystem
from services.distribution_service import DistributionService
from services.geometry import project_out, winner, wnorm2, wnorm2_columns
from utils.exceptions import DegeneracyError, UsageError


class ForwardSelectionService:
    """Service for data-dependent forward selection of constraints."""

    def __init__(
        self,
        system: ConstraintSystem,
        dependence_threshold: Optional[float] = None,
        reorthogonalize_every: Optional[int] = None,
    ):
        """
        Initialize forward selection service.

        Args:
            system: Constraint system (kernel, data, measure)
            dependence_threshold: minimum ||psi||^2 / ||alpha||^2 for a
                candidate to be admissible
            reorthogonalize_every: recompute duals from a Gram solve every
                this many extensions (None disables)
        """
        self.system = system
        self.derived = system.derive()
        self.mu = system.mu
        self.distribution = DistributionService(system)
        self.dependence_threshold = (
            settings.DEPENDENCE_THRESHOLD if dependence_threshold is None else dependence_threshold
        )
        self.reorthogonalize_every = (
            settings.REORTHOGONALIZE_EVERY if reorthogonalize_every is None else reorthogonalize_every
        )

    # ===================== Recursions =====================

    def extend(self, state: BiorthState, index: int) -> BiorthState:
        """
        Add constraint `index` to the selection.

        Args:
            state: current state with k entries
            index: 0-based constraint index not yet selected

        Returns:
            New state with k+1 entries; `state` is left untouched
        """
        if index in state.selected:
            raise UsageError(f"constraint {index + 1} is already selected")

        alpha = self.system.alpha(index)
        alpha_norm2 = wnorm2(alpha, self.mu)
        psi = project_out(alpha, state.orthonormal_basis(), self.mu)
        psi_norm2 = wnorm2(psi, self.mu)
        if alpha_norm2 <= 0 or psi_norm2 < self.dependence_threshold * alpha_norm2:
            raise DegeneracyError(
                f"constraint {index + 1} is numerically dependent on the selected set"
            )

        ftilde = self.derived.ftilde
        psi_dual = psi / psi_norm2
        new_lambda = winner(psi_dual, ftilde, self.mu)

        couplings = [winner(dual, alpha, self.mu) for dual in state.duals]
        duals = [dual - c * psi_dual for dual, c in zip(state.duals, couplings)]
        lambdas = [lam - c * new_lambda for lam, c in zip(state.lambdas, couplings)]

        return BiorthState(
            selected=state.selected + [index],
            psi=state.psi + [psi],
            psi_norm2=state.psi_norm2 + [psi_norm2],
            duals=duals + [psi_dual],
            lambdas=lambdas + [new_lambda],
            projection=state.projection + new_lambda * psi,
            extensions=state.extensions + 1,
        )

    def refresh_duals(self, state: BiorthState) -> BiorthState:
        """
        Recompute duals and multipliers from an explicit Gram solve.

        Removes drift accumulated by the recursions over long runs.
        """
        if state.k == 0:
            return state.copy()
        alphas = self.system.alphas(state.selected)
        weighted = alphas * self.mu.weights[:, None]
        gram = alphas.T @ weighted
        duals = sla.solve(gram, alphas.T, assume_a="sym").T
        lambdas = duals.T @ (self.mu.weights * self.derived.ftilde)
        refreshed = state.copy()
        refreshed.duals = [duals[:, n].copy() for n in range(state.k)]
        refreshed.lambdas = [float(v) for v in lambdas]
        refreshed.projection = alphas @ lambdas
        logger.debug(f"Duals refreshed at k={state.k}")
        return refreshed

    def replay(self, indices: Iterable[int]) -> BiorthState:
        """Rebuild a state by extending an empty one in the given order."""
        state = BiorthState.empty(self.system.M)
        for index in indices:
            state = self.extend(state, int(index))
        return state

    # ===================== Selection =====================

    def score_candidates(self, state: BiorthState, pool: Optional[Iterable[int]] = None) -> np.ndarray:
        """
        e_n = |<psi_n / ||psi_n|| | f~o>|^2 for every admissible candidate.

        Args:
            state: current state
            pool: optional candidate restriction (0-based)

        Returns:
            Vector of M scores; selected, out-of-pool and dependent
            candidates score -inf
        """
        scores = np.full(self.system.M, -np.inf)
        chosen = set(state.selected)
        indices = range(self.system.M) if pool is None else pool
        candidates = np.array(sorted({int(i) for i in indices} - chosen), dtype=int)
        if candidates.size == 0:
            return scores

        alphas = self.system.alphas(candidates)
        alpha_norm2 = wnorm2_columns(alphas, self.mu)
        residuals = project_out(alphas, state.orthonormal_basis(), self.mu)
        psi_norm2 = wnorm2_columns(residuals, self.mu)
        overlaps = residuals.T @ (self.mu.weights * self.derived.ftilde)

        admissible = (alpha_norm2 > 0) & (psi_norm2 >= self.dependence_threshold * alpha_norm2)
        scores[candidates[admissible]] = overlaps[admissible] ** 2 / psi_norm2[admissible]
        return scores

    def residual2(self, state: BiorthState) -> float:
        """||f^p - f^o||^2_mu for the distribution assembled from `state`."""
        predicted = self.distribution.predict(state)
        diff = predicted - self.system.fobs
        return float(np.dot(diff * self.mu.weights, diff))

    def biorthogonality_error(self, state: BiorthState) -> float:
        """max |<dual_n | alpha_m>_mu - delta_nm| over the selected set."""
        if state.k == 0:
            return 0.0
        duals = np.column_stack(state.duals)
        alphas = self.system.alphas(state.selected)
        cross = duals.T @ (alphas * self.mu.weights[:, None])
        return float(np.max(np.abs(cross - np.eye(state.k))))

    def fit(self, stop: StopRule, pool: Optional[Iterable[int]] = None) -> ForwardFit:
        """
        Grow the selection greedily until the data are predicted within
        the admissible residual.

        Args:
            stop: stopping rule (epsilon norm, optional max_k)
            pool: optional candidate pool (0-based); all constraints by default

        Returns:
            ForwardFit with the final state and the stop condition that fired
        """
        if pool is not None:
            pool = sorted({int(i) for i in pool})
            if not pool:
                raise UsageError("candidate pool is empty")

        state = BiorthState.empty(self.system.M)
        residual = self.residual2(state)
        trace: List[TraceStep] = [TraceStep(0, -1, 0, residual, 0.0)]

        while True:
            if residual < stop.epsilon_norm2:
                reason = StopReason.THRESHOLD
                break
            if stop.max_k is not None and state.k >= stop.max_k:
                reason = StopReason.MAX_K
                break

            scores = self.score_candidates(state, pool)
            best = int(np.argmax(scores))
            if not np.isfinite(scores[best]):
                if state.k == 0:
                    raise DegeneracyError("no admissible constraint to start the selection")
                reason = StopReason.EXHAUSTED
                break

            state = self.extend(state, best)
            if self.reorthogonalize_every and state.extensions % self.reorthogonalize_every == 0:
                state = self.refresh_duals(state)

            residual = self.residual2(state)
            projection_norm2 = wnorm2(state.projection, self.mu)
            trace.append(TraceStep(len(trace), best, state.k, residual, projection_norm2))
            logger.debug(f"Forward step k={state.k}: index {best + 1}, residual2={residual:.6g}")

        logger.info(
            f"Forward fit stopped ({reason.value}) with k={state.k}, "
            f"residual2={residual:.6g}, epsilon2={stop.epsilon_norm2:.6g}"
        )
        return ForwardFit(state=state, stop_reason=reason, residual2=residual, trace=trace)
