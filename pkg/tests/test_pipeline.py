import pytest

from config.experiments import builtin_spec
from controllers.pipeline_controller import PipelineController
from models.schemas import DatasetFile, MeasureMode
from models.state import StopReason
from services.synthesis_service import SynthesisService
from utils.exceptions import DatasetError, UsageError


@pytest.fixture
def small_dataset() -> DatasetFile:
    spec = builtin_spec("example2", M=60, N=30, kernel_offset=20.0, noise_fraction=0.05, truth={
        "components": [{"weight": 1.0, "center": 10, "width": 3}, {"weight": 0.7, "center": 22, "width": 4}],
    })
    return SynthesisService(spec).build_dataset()


def test_measure_precedence(small_dataset):
    system, mode = PipelineController.build_system(small_dataset)
    assert mode == MeasureMode.UNIFORM
    assert system.mu.is_uniform

    system, mode = PipelineController.build_system(small_dataset, MeasureMode.INVERSE_VARIANCE)
    assert mode == MeasureMode.INVERSE_VARIANCE
    assert not system.mu.is_uniform

    bare = small_dataset.model_copy(update={"measure_mode": None})
    assert PipelineController.build_system(bare)[1] == MeasureMode.INVERSE_VARIANCE

    unweighted = small_dataset.model_copy(update={"measure_mode": None, "sigma": None})
    assert PipelineController.build_system(unweighted)[1] == MeasureMode.UNIFORM
    with pytest.raises(DatasetError):
        PipelineController.build_system(unweighted, MeasureMode.INVERSE_VARIANCE)


def test_stop_rule_needs_sigma_or_epsilon(small_dataset):
    unweighted = small_dataset.model_copy(update={"measure_mode": None, "sigma": None})
    system, _ = PipelineController.build_system(unweighted)
    with pytest.raises(UsageError):
        PipelineController.stop_rule(system, 1.1)
    assert PipelineController.stop_rule(system, 1.1, epsilon2=0.3).epsilon_norm2 == 0.3


def test_run_strategy(small_dataset):
    result = PipelineController().run_strategy(small_dataset)
    pool, fitted, pruned = result["pool"], result["fit"], result["prune"]
    assert set(fitted.state.selected) <= set(pool.pool)
    assert pruned.state.k <= fitted.state.k
    assert set(pruned.state.selected) <= set(fitted.state.selected)
    if fitted.stop_reason == StopReason.THRESHOLD:
        assert pruned.residual2 < PipelineController.stop_rule(result["system"], 2.0).epsilon_norm2
