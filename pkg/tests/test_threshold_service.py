"""Tests for density scans and crossing estimates."""

import csv
import io
import json

import pytest

from src.core.exceptions import CrossingException, LimitExceededException
from src.services.threshold_service import (
    ScanPoint,
    ScanResult,
    alpha_grid,
    estimate_crossing,
    scan_graph_property,
    scan_sat_probability,
)
from src.utils.metrics import get_metrics


def _synthetic(alphas: list[float], fractions: list[float], trials: int = 100) -> ScanResult:
    points = [
        ScanPoint(n_qubits=50, alpha=a, trials=trials, positive=round(f * trials), negative=trials - round(f * trials))
        for a, f in zip(alphas, fractions)
    ]
    return ScanResult(
        k=3,
        quantity="coverable",
        n_values=[50],
        alpha_grid=alphas,
        trials=trials,
        seed=0,
        mode="binomial",
        points=points,
    )


def test_alpha_grid_is_inclusive_and_rounded():
    assert alpha_grid(0.8, 0.85, 0.01) == [0.8, 0.81, 0.82, 0.83, 0.84, 0.85]
    assert alpha_grid(1.0, 1.0, 0.1) == [1.0]


def test_scan_point_fraction_ignores_undecided():
    point = ScanPoint(n_qubits=10, alpha=1.0, trials=10, positive=3, negative=5, undecided=2)
    assert point.decided == 8
    assert point.fraction == pytest.approx(3 / 8)
    assert point.stderr == pytest.approx((3 / 8 * 5 / 8 / 8) ** 0.5)


def test_empty_graphs_are_coverable():
    result = scan_graph_property(3, 100, [0.0], trials=5, prop="coverable", seed=1)
    assert result.points[0].positive == 5
    assert result.points[0].fraction == 1.0
    xorsat = scan_graph_property(3, 100, [0.0], trials=5, prop="xorsat", seed=1)
    assert xorsat.points[0].fraction == 1.0


def test_scan_is_independent_of_job_count():
    grid = [0.8, 0.9, 1.0]
    serial = scan_graph_property(3, 300, grid, trials=6, seed=42, jobs=1)
    parallel = scan_graph_property(3, 300, grid, trials=6, seed=42, jobs=2)
    assert [p.model_dump() for p in serial.points] == [p.model_dump() for p in parallel.points]
    for point in serial.points:
        assert point.positive + point.negative + point.undecided == 6


def test_scan_records_metrics():
    scan_graph_property(3, 50, [0.5, 0.6], trials=4, seed=0)
    snapshot = get_metrics().snapshot()
    assert snapshot["instances_evaluated"] == 8
    assert sum(snapshot["outcomes"].values()) == 8


def test_coverability_far_from_threshold():
    result = scan_graph_property(3, 2000, [0.5, 1.2], trials=20, prop="coverable", seed=3)
    low, high = result.points
    assert low.fraction >= 0.9
    assert high.fraction == 0.0


def test_core_emerges_with_density():
    result = scan_graph_property(3, 2000, [0.5, 1.0], trials=20, prop="core_nonempty", seed=3)
    low, high = result.points
    assert low.fraction <= 0.1
    assert high.fraction >= 0.9


def test_sat_scan_on_two_local_instances():
    # 20 edges on 10 qubits always leave a component with two cycles
    result = scan_sat_probability(2, [10], [0.3, 2.0], trials=5, seed=0)
    sparse, dense = result.curve(10)
    assert sparse.fraction == 1.0
    assert dense.fraction == 0.0
    assert result.column_names() == ("sat", "unsat")
    assert result.solver["dense_limit"] == 14


def test_sat_scan_on_sparse_three_local_instances():
    result = scan_sat_probability(3, [8, 10], [0.3], trials=4, seed=2)
    assert [p.fraction for p in result.points] == [1.0, 1.0]


def test_sat_scan_size_limit():
    with pytest.raises(LimitExceededException):
        scan_sat_probability(3, [25], [0.5], trials=1)


def test_scan_files(tmp_path):
    result = scan_graph_property(3, 60, [0.5, 0.9], trials=3, seed=5)
    csv_path, json_path = result.write(tmp_path / "out", "scan_coverable_k3")
    rows = list(csv.reader(io.StringIO(csv_path.read_text())))
    assert rows[0] == ["k", "N", "alpha", "trials", "positive", "negative", "undecided", "fraction", "stderr"]
    assert len(rows) == 3
    assert rows[1][:4] == ["3", "60", "0.5", "3"]
    assert ScanResult.model_validate(json.loads(json_path.read_text())) == result


def test_crossing_on_decreasing_curve():
    scan = _synthetic([0.80, 0.81, 0.82, 0.83, 0.84, 0.85], [1.0, 0.95, 0.6, 0.4, 0.05, 0.0])
    (crossing,) = estimate_crossing(scan)
    assert crossing.alpha == pytest.approx(0.825)
    assert crossing.decreasing and crossing.monotone
    assert crossing.lower_tick == pytest.approx(0.81)
    assert crossing.upper_tick == pytest.approx(0.84)
    assert crossing.stderr > 0.0


def test_crossing_at_other_level():
    scan = _synthetic([0.0, 1.0], [1.0, 0.0])
    (crossing,) = estimate_crossing(scan, level=0.95)
    assert crossing.alpha == pytest.approx(0.05)


def test_crossing_on_increasing_curve():
    scan = _synthetic([1.0, 1.1, 1.2, 1.3], [0.0, 0.2, 0.8, 1.0])
    (crossing,) = estimate_crossing(scan)
    assert crossing.alpha == pytest.approx(1.15)
    assert not crossing.decreasing


def test_non_monotone_curve_is_flagged():
    scan = _synthetic([0.0, 0.1, 0.2, 0.3], [1.0, 0.3, 0.6, 0.0])
    (crossing,) = estimate_crossing(scan)
    assert not crossing.monotone
    assert 0.0 < crossing.alpha < 0.1


def test_crossing_errors():
    with pytest.raises(CrossingException):
        estimate_crossing(_synthetic([0.1, 0.2, 0.3], [1.0, 1.0, 1.0]))
    with pytest.raises(CrossingException):
        estimate_crossing(_synthetic([0.1], [1.0]))


@pytest.mark.slow
def test_coverability_threshold_at_scale():
    result = scan_graph_property(3, 100_000, [0.88, 0.95], trials=10, prop="coverable", seed=9)
    low, high = result.points
    assert low.fraction == 1.0
    assert high.fraction == 0.0


@pytest.mark.slow
def test_core_threshold_at_scale():
    result = scan_graph_property(3, 100_000, [0.80, 0.84], trials=10, prop="core_nonempty", seed=9)
    low, high = result.points
    assert low.fraction == 0.0
    assert high.fraction == 1.0


@pytest.mark.slow
def test_sat_scan_on_three_local_instances_at_both_ends():
    result = scan_sat_probability(3, [10], [0.3, 2.0], trials=101, seed=4, jobs=1)
    sparse, dense = result.curve(10)
    assert sparse.fraction == 1.0
    assert dense.fraction <= 0.05
    for point in result.points:
        assert point.positive + point.negative + point.undecided == 101


@pytest.mark.slow
def test_sat_crossing_of_three_local_instances_is_near_one(override_settings):
    # twelve qubits go through ARPACK instead of a full diagonalization
    override_settings(DENSE_LIMIT=10)
    result = scan_sat_probability(
        3, [8, 10, 12], alpha_grid(0.6, 1.4, 0.1), trials=101, seed=11, jobs=1
    )
    assert result.solver["dense_limit"] == 10
    for crossing in estimate_crossing(result):
        assert 0.85 <= crossing.alpha <= 1.15
        assert crossing.decreasing


@pytest.mark.slow
@pytest.mark.parametrize(
    ("prop", "k", "start", "stop", "expected"),
    [
        ("coverable", 3, 0.88, 0.96, 0.92),
        ("coverable", 4, 0.94, 1.02, 0.98),
        ("core_nonempty", 3, 0.78, 0.86, 0.82),
        ("core_nonempty", 4, 0.73, 0.81, 0.77),
    ],
)
def test_graph_property_crossings_at_scale(prop, k, start, stop, expected):
    grid = alpha_grid(start, stop, 0.01)
    result = scan_graph_property(k, 100_000, grid, trials=40, prop=prop, seed=k)
    (crossing,) = estimate_crossing(result)
    assert crossing.alpha == pytest.approx(expected, abs=0.02)
    assert crossing.decreasing == (prop == "coverable")


@pytest.mark.slow
def test_threshold_ordering_over_clause_size():
    coverable = []
    core = []
    for k in (3, 4, 5):
        cover_scan = scan_graph_property(
            k, 50_000, alpha_grid(0.88, 1.02, 0.005), trials=30, prop="coverable", seed=20 + k
        )
        core_scan = scan_graph_property(
            k, 50_000, alpha_grid(0.64, 0.86, 0.01), trials=30, prop="core_nonempty", seed=30 + k
        )
        coverable.append(estimate_crossing(cover_scan)[0].alpha)
        core.append(estimate_crossing(core_scan)[0].alpha)
    assert coverable[0] < coverable[1] < coverable[2] < 1.0
    assert core[0] > core[1] > core[2]
