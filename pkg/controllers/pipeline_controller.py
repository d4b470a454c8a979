"""
Pipeline Controller - Orchestration Layer.
Drives the batch stages: generate, preselect, fit, prune and predict.
"""

import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from config.experiments import BUILTIN_EXPERIMENTS, builtin_spec
from config.settings import settings
from models.schemas import DatasetFile, KernelGenerator, MeasureMode, PoolFile, RunReport, StateFile
from models.state import BiorthState, ForwardFit, PreselectReport, PruneResult, StopRule, TraceStep
from models.storage import FileStore
from models.system import ConstraintSystem, Measure
from services.backward_service import BackwardPruningService
from services.distribution_service import DistributionService
from services.forward_service import ForwardSelectionService
from services.geometry import wdist2
from services.preselect_service import PreselectionService
from services.synthesis_service import SynthesisService
from utils.exceptions import DatasetError, DegeneracyError, UsageError


class PipelineController:
    """Batch pipeline orchestrating the selection services."""

    def __init__(self, output_dir: Optional[Path] = None):
        """
        Initialize controller.

        Args:
            output_dir: directory relative output paths are resolved against
        """
        self.output_dir = Path(output_dir) if output_dir is not None else settings.OUTPUT_DIR
        logger.debug(f"PipelineController initialized (output dir {self.output_dir})")

    def _out(self, path: Path) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.output_dir / path

    # ===================== Systems =====================

    @staticmethod
    def build_system(
        dataset: DatasetFile,
        measure: Optional[MeasureMode] = None,
    ) -> Tuple[ConstraintSystem, MeasureMode]:
        """
        Constraint system for a dataset under the requested measure.

        The measure is taken from the argument, else from the dataset, else
        inverse-variance when sigma is present and uniform otherwise.
        """
        if isinstance(dataset.kernel, KernelGenerator):
            kernel = SynthesisService.kernel_from(
                dataset.kernel.family, dataset.M, dataset.N, dataset.kernel.scale, dataset.kernel.offset
            )
        else:
            kernel = np.array(dataset.kernel, dtype=np.float64)

        mode = measure or dataset.measure_mode
        if mode is None:
            mode = MeasureMode.INVERSE_VARIANCE if dataset.sigma is not None else MeasureMode.UNIFORM
        if mode == MeasureMode.INVERSE_VARIANCE:
            if dataset.sigma is None:
                raise DatasetError("inverse-variance measure needs sigma in the dataset")
            mu = Measure.from_sigma(dataset.sigma)
        else:
            mu = Measure.uniform(dataset.M)

        system = ConstraintSystem(kernel, dataset.f_obs, mu=mu, sigma=dataset.sigma, f_true=dataset.f_true)
        return system, mode

    @staticmethod
    def stop_rule(
        system: ConstraintSystem,
        t: float,
        epsilon2: Optional[float] = None,
        max_k: Optional[int] = None,
    ) -> StopRule:
        """Stopping rule from sigma, or from an explicit ||eps||^2 when given."""
        if epsilon2 is not None:
            return StopRule(t=t, epsilon_norm2=epsilon2, max_k=max_k)
        if system.sigma is None:
            raise UsageError("dataset has no sigma; pass an explicit epsilon2")
        return StopRule.from_sigma(t, system.sigma, system.mu, max_k=max_k)

    @staticmethod
    def _zero_based(indices: List[int], size: int, what: str) -> List[int]:
        if any(not 1 <= i <= size for i in indices):
            raise DatasetError(f"{what} holds indices outside 1..{size}")
        return [i - 1 for i in indices]

    def _restore(self, dataset: DatasetFile, state_path: Path):
        """Rebuild the system and the biorthogonal state recorded in a state file."""
        record = FileStore.load_state(state_path)
        system, mode = self.build_system(dataset, record.measure)
        selected = self._zero_based(record.selected, system.M, str(state_path))
        try:
            state = ForwardSelectionService(system).replay(selected)
        except DegeneracyError as e:
            raise DatasetError(f"{state_path} does not match the dataset: {e}") from e
        return system, mode, record, state

    # ===================== Stages =====================

    def generate(
        self,
        spec: str,
        out: Path,
        seed: Optional[int] = None,
        report: Optional[Path] = None,
    ) -> DatasetFile:
        """
        Generate a synthetic dataset.

        Args:
            spec: built-in experiment name or path to an experiment spec file
            out: dataset file to write
            seed: optional seed override
            report: optional run report path

        Returns:
            The dataset written
        """
        started = time.perf_counter()
        overrides = {} if seed is None else {"seed": seed}
        if spec in BUILTIN_EXPERIMENTS:
            experiment = builtin_spec(spec, **overrides)
        else:
            experiment = FileStore.load_spec(Path(spec))
            if overrides:
                experiment = experiment.model_copy(update=overrides)

        dataset = SynthesisService(experiment).build_dataset()
        FileStore.save(self._out(out), dataset)
        if report is not None:
            system, mode = self.build_system(dataset, None)
            FileStore.save(
                self._out(report),
                RunReport(
                    stage="gen",
                    app_version=settings.APP_VERSION,
                    dataset=str(out),
                    measure=mode,
                    k=0,
                    observation_to_truth2=wdist2(system.fobs, system.f_true, system.mu),
                    elapsed_seconds=self._elapsed(started),
                ),
            )
        return dataset

    def preselect(
        self,
        data: Path,
        out: Path,
        tol: Optional[float] = None,
        measure: Optional[MeasureMode] = None,
        report: Optional[Path] = None,
    ) -> PreselectReport:
        """Data-independent pool of numerically independent constraints."""
        started = time.perf_counter()
        dataset = FileStore.load_dataset(data)
        system, mode = self.build_system(dataset, measure)
        result = PreselectionService(system).preselect(tol)

        FileStore.save(
            self._out(out),
            PoolFile(
                indices=[i + 1 for i in result.pool],
                ratios=result.ratios,
                threshold=result.threshold,
                status=result.status,
                biorthogonality=result.biorthogonality,
            ),
        )
        if report is not None:
            FileStore.save(
                self._out(report),
                RunReport(
                    stage="preselect",
                    app_version=settings.APP_VERSION,
                    dataset=str(data),
                    measure=mode,
                    selected=[i + 1 for i in result.pool],
                    k=len(result.pool),
                    stop_reason=result.status,
                    biorthogonality=result.biorthogonality,
                    pool_size=len(result.pool),
                    elapsed_seconds=self._elapsed(started),
                ),
            )
        return result

    def fit(
        self,
        data: Path,
        out: Path,
        report: Path,
        pool: Optional[Path] = None,
        t: Optional[float] = None,
        measure: Optional[MeasureMode] = None,
        max_k: Optional[int] = None,
        epsilon2: Optional[float] = None,
    ) -> ForwardFit:
        """Forward selection, writing the state, the report and the step trace."""
        started = time.perf_counter()
        t = settings.DEFAULT_FORWARD_T if t is None else t
        dataset = FileStore.load_dataset(data)
        system, mode = self.build_system(dataset, measure)
        stop = self.stop_rule(system, t, epsilon2, max_k)

        pool_indices = None
        pool_size = None
        if pool is not None:
            pool_indices = self._zero_based(FileStore.load_pool(pool).indices, system.M, str(pool))
            pool_size = len(pool_indices)
            if not pool_indices:
                raise DegeneracyError(f"{pool} holds an empty pool")

        forward = ForwardSelectionService(system)
        result = forward.fit(stop, pool_indices)

        self._save_state(out, "fit", mode, stop, result.state)
        self._save_trace(report, result.trace)
        FileStore.save(
            self._out(report),
            self._report(
                "fit", data, system, mode, stop, result.state, result.residual2,
                result.stop_reason.value, started, pool_size=pool_size,
            ),
        )
        return result

    def prune(
        self,
        data: Path,
        state: Path,
        out: Path,
        report: Path,
        t: Optional[float] = None,
        epsilon2: Optional[float] = None,
    ) -> PruneResult:
        """Backward pruning of a fitted state under a looser stopping rule."""
        started = time.perf_counter()
        t = settings.DEFAULT_PRUNE_T if t is None else t
        dataset = FileStore.load_dataset(data)
        system, mode, _, fitted = self._restore(dataset, state)
        stop = self.stop_rule(system, t, epsilon2)

        result = BackwardPruningService(system).prune(fitted, stop)

        self._save_state(out, "prune", mode, stop, result.state)
        self._save_trace(report, result.trace)
        FileStore.save(
            self._out(report),
            self._report(
                "prune", data, system, mode, stop, result.state, result.residual2,
                result.stop_reason.value, started, removed=result.removed,
            ),
        )
        return result

    def predict(
        self,
        data: Path,
        state: Path,
        out: Path,
        data_out: Optional[Path] = None,
        report: Optional[Path] = None,
    ) -> pd.DataFrame:
        """
        Write the distribution (n, p_half, p) and the data-space comparison
        (i, f_obs, f_pred, f_true, sigma).

        Returns:
            The distribution table
        """
        started = time.perf_counter()
        dataset = FileStore.load_dataset(data)
        system, mode, record, restored = self._restore(dataset, state)
        distribution = DistributionService(system).assemble(restored)
        predicted = system.predict(distribution)

        table = pd.DataFrame(
            {
                "n": np.arange(1, system.N + 1),
                "p_half": distribution.phalf,
                "p": distribution.probabilities,
            }
        )
        FileStore.save_csv(self._out(out), table)

        columns: Dict[str, Any] = {
            "i": np.arange(1, system.M + 1),
            "f_obs": system.fobs,
            "f_pred": predicted,
        }
        if system.f_true is not None:
            columns["f_true"] = system.f_true
        if system.sigma is not None:
            columns["sigma"] = system.sigma
        out_path = self._out(out)
        data_path = self._out(data_out) if data_out is not None else out_path.with_name(f"{out_path.stem}_data.csv")
        FileStore.save_csv(data_path, pd.DataFrame(columns))

        if report is not None:
            stop = StopRule(t=record.t, epsilon_norm2=record.epsilon2)
            residual = wdist2(predicted, system.fobs, system.mu)
            FileStore.save(
                self._out(report),
                self._report("predict", data, system, mode, stop, restored, residual, None, started),
            )
        return table

    def run_strategy(
        self,
        dataset: DatasetFile,
        forward_t: Optional[float] = None,
        prune_t: Optional[float] = None,
        tol: Optional[float] = None,
        measure: Optional[MeasureMode] = None,
        use_pool: bool = True,
    ) -> Dict[str, Any]:
        """
        Preselect, fit on the pool, then prune; all in memory.

        Returns:
            Dictionary with the system, the pool report, the forward fit and
            the prune result
        """
        forward_t = settings.DEFAULT_FORWARD_T if forward_t is None else forward_t
        prune_t = settings.DEFAULT_PRUNE_T if prune_t is None else prune_t
        system, mode = self.build_system(dataset, measure)

        pool = PreselectionService(system).preselect(tol) if use_pool else None
        if pool is not None and not pool.pool:
            raise DegeneracyError("preselection left no admissible constraint")
        fitted = ForwardSelectionService(system).fit(
            self.stop_rule(system, forward_t), pool.pool if pool is not None else None
        )
        pruned = BackwardPruningService(system).prune(fitted.state, self.stop_rule(system, prune_t))
        logger.info(
            f"Strategy: pool={len(pool.pool) if pool else '-'}, "
            f"forward k={fitted.state.k}, pruned k={pruned.state.k}"
        )
        return {"system": system, "measure": mode, "pool": pool, "fit": fitted, "prune": pruned}

    # ===================== Output helpers =====================

    @staticmethod
    def _elapsed(started: float) -> Optional[float]:
        return round(time.perf_counter() - started, 6) if settings.REPORT_TIMING else None

    def _save_state(self, out: Path, stage: str, mode: MeasureMode, stop: StopRule, state: BiorthState):
        FileStore.save(
            self._out(out),
            StateFile(
                stage=stage,
                measure=mode,
                t=stop.t,
                epsilon2=stop.epsilon_norm2,
                selected=[i + 1 for i in state.selected],
                lambdas=[float(v) for v in state.lambdas],
            ),
        )

    def _save_trace(self, report: Path, trace: List[TraceStep]):
        path = self._out(report)
        frame = pd.DataFrame(
            {
                "step": [s.step for s in trace],
                "index": [s.index + 1 if s.index >= 0 else 0 for s in trace],
                "k": [s.k for s in trace],
                "residual2": [s.residual2 for s in trace],
                "projection_norm2": [s.projection_norm2 for s in trace],
            }
        )
        FileStore.save_csv(path.with_name(f"{path.stem}_trace.csv"), frame)

    def _report(
        self,
        stage: str,
        data: Path,
        system: ConstraintSystem,
        mode: MeasureMode,
        stop: StopRule,
        state: BiorthState,
        residual2: float,
        stop_reason: Optional[str],
        started: float,
        removed: Optional[List[int]] = None,
        pool_size: Optional[int] = None,
    ) -> RunReport:
        distributions = DistributionService(system)
        distribution = distributions.assemble(state)
        forward = ForwardSelectionService(system)

        to_truth = from_truth = None
        if system.f_true is not None:
            to_truth = wdist2(system.predict(distribution), system.f_true, system.mu)
            from_truth = wdist2(system.fobs, system.f_true, system.mu)

        return RunReport(
            stage=stage,
            app_version=settings.APP_VERSION,
            dataset=str(data),
            measure=mode,
            t=stop.t,
            epsilon2=stop.epsilon_norm2,
            selected=[i + 1 for i in state.selected],
            multipliers=[float(v) for v in state.lambdas],
            k=state.k,
            residual2=residual2,
            stop_reason=stop_reason,
            removed=[i + 1 for i in (removed or [])],
            entropy=distributions.entropy_q(distribution),
            normalization=distribution.total(),
            biorthogonality=forward.biorthogonality_error(state),
            pool_size=pool_size,
            prediction_to_truth2=to_truth,
            observation_to_truth2=from_truth,
            elapsed_seconds=self._elapsed(started),
        )
