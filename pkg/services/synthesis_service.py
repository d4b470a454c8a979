"""
Synthesis Service.
Generates kernels, ground-truth distributions and noisy observations for
synthetic experiments. Mirrors a mock data provider: deterministic for a
given spec and seed.
"""

from typing import Tuple

import numpy as np
from loguru import logger

from config.settings import settings
from models.schemas import DatasetFile, ExperimentSpec, KernelFamily, KernelGenerator
from utils.exceptions import DimensionError, UnknownKernelError


class SynthesisService:
    """Service for synthetic constraint systems."""

    def __init__(self, spec: ExperimentSpec):
        """
        Initialize synthesis service.

        Args:
            spec: Experiment specification
        """
        self.spec = spec

    @staticmethod
    def kernel_from(
        family: KernelFamily,
        rows: int,
        cols: int,
        scale: float = 0.01,
        offset: float = 100.0,
    ) -> np.ndarray:
        """
        Tabulate an analytic kernel family at i = 1..rows, n = 1..cols.

        exponential: f_{i,n} = exp(-n scale i)
        lorentzian:  f_{i,n} = 1 / (1 + scale (i - offset - n)^2)
        """
        i = np.arange(1, rows + 1, dtype=np.float64)[:, None]
        n = np.arange(1, cols + 1, dtype=np.float64)[None, :]
        if family == KernelFamily.EXPONENTIAL:
            return np.exp(-n * (scale * i))
        if family == KernelFamily.LORENTZIAN:
            return 1.0 / (1.0 + scale * (i - offset - n) ** 2)
        raise UnknownKernelError(f"no analytic generator for kernel family {family!r}")

    def make_kernel(self) -> np.ndarray:
        """M x N kernel for the spec's family."""
        spec = self.spec
        if spec.kernel_family == KernelFamily.CUSTOM:
            kernel = np.array(spec.custom_kernel, dtype=np.float64)
            if kernel.shape != (spec.M, spec.N):
                raise DimensionError(f"custom kernel has shape {kernel.shape}")
            return kernel
        return self.kernel_from(spec.kernel_family, spec.M, spec.N, spec.kernel_scale, spec.kernel_offset)

    def make_truth(self) -> np.ndarray:
        """Ground-truth vector p over n = 1..N, normalized to the configured total."""
        truth = self.spec.truth
        if truth.values is not None:
            p = np.array(truth.values, dtype=np.float64)
        else:
            n = np.arange(1, self.spec.N + 1, dtype=np.float64)
            p = np.zeros(self.spec.N)
            for c in truth.components:
                p += c.weight * np.exp(-((n - c.center) ** 2) / (2.0 * c.width ** 2))
            if not truth.components:
                logger.warning("Truth has no components; using the zero vector")

        current = p.sum()
        if truth.total is not None and current != 0:
            p *= truth.total / current
        return p

    def observe(self, kernel: np.ndarray, p_true: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Noiseless data, noisy observations and their standard deviations.

        Args:
            kernel: M x N kernel
            p_true: ground truth of length N

        Returns:
            (f_true, f_obs, sigma) with f_obs = f_true + sigma * z, z ~ N(0, 1)
        """
        if kernel.shape[1] != p_true.shape[0]:
            raise DimensionError(f"kernel {kernel.shape} and truth {p_true.shape} disagree")
        f_true = kernel @ p_true
        scale = np.max(np.abs(f_true)) if f_true.size else 0.0
        floor = settings.SIGMA_FLOOR_FACTOR * (scale if scale > 0 else 1.0)
        sigma = np.maximum(self.spec.noise_fraction * np.abs(f_true), floor)

        if self.spec.noise_fraction == 0:
            return f_true, f_true.copy(), sigma

        bit_generator = getattr(np.random, settings.RNG_ALGORITHM)
        rng = np.random.Generator(bit_generator(self.spec.seed))
        f_obs = f_true + sigma * rng.standard_normal(f_true.shape[0])
        return f_true, f_obs, sigma

    def build_dataset(self) -> DatasetFile:
        """Kernel, truth and observations packed as a dataset file."""
        spec = self.spec
        kernel = self.make_kernel()
        p_true = self.make_truth()
        f_true, f_obs, sigma = self.observe(kernel, p_true)

        if spec.kernel_family == KernelFamily.CUSTOM:
            stored_kernel = kernel.tolist()
        else:
            stored_kernel = KernelGenerator(
                family=spec.kernel_family, scale=spec.kernel_scale, offset=spec.kernel_offset
            )

        logger.info(
            f"Generated {spec.name}: {spec.kernel_family.value} kernel {spec.M}x{spec.N}, "
            f"noise {spec.noise_fraction:.0%}, seed {spec.seed}"
        )
        return DatasetFile(
            M=spec.M,
            N=spec.N,
            kernel=stored_kernel,
            f_obs=f_obs.tolist(),
            sigma=sigma.tolist(),
            f_true=f_true.tolist(),
            p_true=p_true.tolist(),
            seed=spec.seed,
            measure_mode=spec.measure_mode,
        )
