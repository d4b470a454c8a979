import numpy as np
import pytest

from models.system import ConstraintSystem, Measure
from services.geometry import wnorm2_columns
from services.preselect_service import PreselectionService
from utils.exceptions import UsageError


def test_first_pick_is_largest_alpha(make_system):
    system = make_system(2, rows=15, cols=9)
    report = PreselectionService(system).preselect()
    norms = wnorm2_columns(system.alphas(range(system.M)), system.mu)
    assert report.pool[0] == int(np.argmax(norms))
    assert report.ratios[0] == pytest.approx(1.0)


def test_ties_go_to_lowest_index(identity_system):
    report = PreselectionService(identity_system).preselect()
    assert report.pool == [0]


def test_duplicate_rows_never_both_enter(make_system):
    base = make_system(3, rows=8, cols=6)
    kernel = base.kernel.copy()
    kernel[5] = kernel[2]
    system = ConstraintSystem(kernel, base.fobs, mu=Measure.uniform(8))
    pool = PreselectionService(system).preselect().pool
    assert not {2, 5} <= set(pool)


def test_ratios_stay_in_unit_interval(make_system):
    system = make_system(4, rows=20, cols=10)
    service = PreselectionService(system)
    report = service.preselect()
    for step in range(len(report.pool) + 1):
        ratios = service.ratios(report.pool[:step])
        finite = ratios[np.isfinite(ratios)]
        assert np.all(finite >= -1e-12)
        assert np.all(finite <= 1 + 1e-10)


def test_pool_is_independent_of_data(make_system):
    system = make_system(5, rows=20, cols=10)
    other = ConstraintSystem(system.kernel, np.zeros(system.M), mu=system.mu)
    assert PreselectionService(system).preselect().pool == PreselectionService(other).preselect().pool


def test_pool_size_is_the_alpha_rank(make_system):
    system = make_system(6, rows=20, cols=10, weighted=False)
    report = PreselectionService(system).preselect(1e-8)
    assert len(report.pool) == system.N - 1
    assert report.status == "ok"
    assert report.biorthogonality < 1e-6


def test_degenerate_kernel_gives_empty_pool():
    system = ConstraintSystem(np.array([[1.0], [2.0], [4.0]]), [1.0, 1.0, 1.0])
    report = PreselectionService(system).preselect()
    assert report.pool == []
    assert report.status == "empty"


@pytest.mark.parametrize("threshold", [0.0, -1.0, 1.5])
def test_threshold_outside_unit_interval(small_system, threshold):
    with pytest.raises(UsageError):
        PreselectionService(small_system).preselect(threshold)
