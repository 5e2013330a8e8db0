from __future__ import annotations

import math

import numpy as np
import pytest

from swingbench.closed_form import phase_output_norms
from swingbench.exceptions import IntervalTooSparse, ValidationError
from swingbench.network import GraphPreset, NetworkSpec, build_preset, edges_from_pairs
from swingbench.sweeps import (
    Grid,
    Metric,
    ShapeProperty,
    SweepParameter,
    SweepPlan,
    SweepRow,
    SweepTable,
    combined_sweep,
    critical_inertia,
    figure_shape_suite,
    norm_sweep,
    pole_rows,
    root_locus,
    shape_check,
)
from swingbench.system import OutputKind


def k3(inertia: float = 1.0, damping: float = 1.0) -> NetworkSpec:
    return NetworkSpec(n=3, edges=edges_from_pairs([(0, 1), (0, 2), (1, 2)]), inertia=inertia, damping=damping)


def make_table(xs, ys, column: str = "h2_closed") -> SweepTable:
    rows = tuple(SweepRow(value=float(x), **{column: float(y)}) for x, y in zip(xs, ys))
    return SweepTable(parameter=SweepParameter.INERTIA, output=OutputKind.PHASE, rows=rows)


def test_grid_values_and_validation():
    grid = Grid(0.01, 100.0, points=5)
    np.testing.assert_allclose(grid.values(), [0.01, 0.1, 1.0, 10.0, 100.0])
    np.testing.assert_allclose(Grid(1.0, 2.0, points=3, spacing="linear").values(), [1.0, 1.5, 2.0])
    with pytest.raises(ValidationError):
        Grid(0.0, 1.0)
    with pytest.raises(ValidationError):
        Grid(1.0, 1.0)
    with pytest.raises(ValidationError):
        Grid(1.0, 2.0, spacing="cubic")


def test_kink_is_inserted_for_inertia_sweep():
    spec = NetworkSpec(n=2, edges=edges_from_pairs([(0, 1)], weight=0.5), inertia=1.0, damping=1.0)
    plan = SweepPlan(spec=spec, parameter="M", grid=Grid(0.01, 10.0, points=20), output=OutputKind.PHASE)
    assert plan.kink() == pytest.approx(0.5)
    assert 0.5 in plan.values()
    assert len(plan.values()) == 21


def test_kink_for_damping_sweep():
    plan = SweepPlan(spec=k3(inertia=1.5), parameter="D", grid=Grid(0.1, 10.0, points=10), output=OutputKind.PHASE)
    assert plan.kink() == pytest.approx(3.0)


def test_no_kink_for_frequency_output():
    plan = SweepPlan(spec=k3(), parameter="M", grid=Grid(0.01, 10.0, points=10), output=OutputKind.FREQUENCY)
    assert plan.kink() is None


def test_phase_inertia_sweep_shapes():
    plan = SweepPlan(spec=k3(), parameter="M", grid=Grid(0.01, 10.0, points=60), output=OutputKind.PHASE)
    table = norm_sweep(plan)
    assert table.kink == pytest.approx(1.0 / 6.0)
    assert table.max_relative_gap("h2_closed", "h2_oracle") == pytest.approx(
        math.sqrt(1.5) - 1.0, rel=1e-9
    )
    assert table.max_relative_gap("hinf_closed", "hinf_oracle") < 1e-8

    verdicts = figure_shape_suite(plan, table)
    assert verdicts
    for verdict in verdicts:
        assert verdict.passed, verdict

    h2 = table.column("h2_closed")
    assert np.all(h2 == h2[0])
    flat = table.column("hinf_closed")[table.values <= 1.0 / 6.0]
    np.testing.assert_allclose(flat, 1.0 / math.sqrt(3.0), rtol=1e-12)


def test_damping_sweep_shapes():
    plan = SweepPlan(spec=k3(), parameter="D", grid=Grid(0.05, 20.0, points=40), output=OutputKind.PHASE)
    table = norm_sweep(plan)
    assert shape_check(table, "h2_closed", ShapeProperty.STRICTLY_DECREASING).passed
    assert shape_check(table, "hinf_oracle", ShapeProperty.NONINCREASING).passed
    kink = table.kink
    tail = shape_check(table, "hinf_closed", ShapeProperty.CONSTANT, (kink, math.inf))
    assert tail.passed


def test_frequency_inertia_sweep():
    plan = SweepPlan(spec=k3(), parameter="M", grid=Grid(0.1, 10.0, points=15), output=OutputKind.FREQUENCY)
    table = norm_sweep(plan)
    for verdict in figure_shape_suite(plan, table):
        assert verdict.passed, verdict
    np.testing.assert_allclose(table.column("hinf_oracle"), 1.0, rtol=1e-9)


def test_threads_preserve_order():
    plan = SweepPlan(spec=k3(), parameter="M", grid=Grid(0.05, 5.0, points=24), output=OutputKind.PHASE)
    serial = norm_sweep(plan, threads=1)
    parallel = norm_sweep(plan, threads=4)
    assert serial == parallel


def test_oracle_stride_keeps_last_and_kink_rows():
    plan = SweepPlan(
        spec=k3(), parameter="M", grid=Grid(0.01, 10.0, points=30), output=OutputKind.PHASE, oracle_stride=7
    )
    table = norm_sweep(plan)
    flags = [row.oracle_row for row in table.rows]
    assert flags[0] and flags[-1]
    kink_row = next(row for row in table.rows if row.value == table.kink)
    assert kink_row.oracle_row
    skipped = [row for row in table.rows if not row.oracle_row]
    assert skipped
    assert all(row.hinf_oracle is None for row in skipped)
    assert np.isnan(table.column("hinf_oracle")).sum() == len(skipped)


def test_metric_selection():
    plan = SweepPlan(
        spec=k3(),
        parameter="M",
        grid=Grid(0.1, 1.0, points=4),
        output=OutputKind.PHASE,
        metrics={Metric.ZETA_MIN, Metric.EIGENVALUES},
    )
    table = norm_sweep(plan)
    assert all(row.h2_closed is None and row.h2_oracle is None for row in table.rows)
    assert all(row.zeta_min is not None for row in table.rows)
    rows = pole_rows(table)
    assert len(rows) == 3 * len(table.rows)
    assert [row.mode for row in rows[:3]] == [1, 2, 3]


@pytest.mark.parametrize("kappa", [0.1, 1.0, 10.0])
def test_combined_output_tradeoff(kappa):
    table = combined_sweep(k3(), kappa, Grid(0.05, 20.0, points=25))
    assert all(row.h2_closed is None for row in table.rows)
    assert shape_check(table, "h2_oracle", ShapeProperty.STRICTLY_DECREASING).passed
    assert shape_check(table, "hinf_oracle", ShapeProperty.NONDECREASING).passed


@pytest.mark.parametrize(
    "spec",
    [
        build_preset(GraphPreset("complete", 5), inertia=1.0, damping=1.0),
        build_preset(GraphPreset("erdos-renyi", 8, weight=(0.1, 10.0, 3), p=0.5, seed=3), inertia=1.0, damping=1.0),
    ],
    ids=["complete5", "erdos-renyi8"],
)
def test_combined_output_tradeoff_on_larger_networks(spec):
    table = combined_sweep(spec, 1.0, Grid(0.05, 20.0, points=25))
    assert shape_check(table, "h2_oracle", ShapeProperty.STRICTLY_DECREASING).passed
    assert shape_check(table, "hinf_oracle", ShapeProperty.NONDECREASING).passed


def test_combined_output_with_tiny_kappa_matches_phase_hinf():
    table = combined_sweep(k3(), 1e-6, Grid(0.1, 10.0, points=15))
    for row in table.rows:
        _, phase_hinf = phase_output_norms(3, row.value, 1.0, 3.0)
        assert row.hinf_oracle == pytest.approx(phase_hinf.value, rel=1e-3)


def test_combined_damping_sweep_has_no_shape_claims():
    plan = SweepPlan(
        spec=k3(),
        parameter=SweepParameter.DAMPING,
        grid=Grid(0.1, 10.0, points=20),
        output=OutputKind.COMBINED,
    )
    table = norm_sweep(plan)
    assert np.isfinite(table.column("hinf_oracle")).all()
    assert figure_shape_suite(plan, table) == []


def test_root_locus_smib():
    rows = root_locus([100.0], damping=1.0, susceptance=1.0)
    assert len(rows) == 1
    pole = complex(rows[0].re1, rows[0].im1)
    assert abs(pole) == pytest.approx(0.1, rel=1e-12)
    assert rows[0].re1 == pytest.approx(-0.005)


def test_root_locus_network_and_critical_inertia():
    rows = root_locus([0.5, 1.0], damping=1.0, spec=k3())
    assert len(rows) == 6
    assert [row.mode for row in rows[:3]] == [1, 2, 3]
    assert critical_inertia(1.0, 3.0) == pytest.approx(1.0 / 12.0)
    double = root_locus([critical_inertia(1.0, 3.0)], damping=1.0, spec=k3())[1]
    assert abs(double.im1) < 1e-6
    assert double.re1 == pytest.approx(double.re2, rel=1e-6)
    assert double.re1 == pytest.approx(-6.0, rel=1e-6)
    with pytest.raises(ValidationError):
        root_locus([1.0], damping=1.0)
    with pytest.raises(ValidationError):
        critical_inertia(1.0, 0.0)


def test_shape_check_convex_and_concave():
    xs = np.linspace(0.0, 2.0, 21)
    assert shape_check(make_table(xs, xs ** 2), "h2_closed", ShapeProperty.CONVEX).passed
    assert not shape_check(make_table(xs, xs ** 2), "h2_closed", ShapeProperty.CONCAVE).passed
    assert shape_check(make_table(xs, np.sqrt(xs + 1)), "h2_closed", ShapeProperty.CONCAVE).passed


def test_shape_check_strict_and_constant():
    xs = np.linspace(1.0, 2.0, 5)
    flat = make_table(xs, np.ones(5))
    assert shape_check(flat, "h2_closed", ShapeProperty.CONSTANT).passed
    assert shape_check(flat, "h2_closed", ShapeProperty.NONINCREASING).passed
    assert not shape_check(flat, "h2_closed", ShapeProperty.STRICTLY_DECREASING).passed
    assert shape_check(make_table(xs, 1.0 / xs), "h2_closed", ShapeProperty.STRICTLY_DECREASING).passed


def test_shape_check_bounded_below():
    xs = np.linspace(1.0, 2.0, 5)
    table = make_table(xs, xs)
    assert shape_check(table, "h2_closed", ShapeProperty.BOUNDED_BELOW, bound=1.0).passed
    assert not shape_check(table, "h2_closed", ShapeProperty.BOUNDED_BELOW, bound=1.5).passed
    with pytest.raises(ValidationError):
        shape_check(table, "h2_closed", ShapeProperty.BOUNDED_BELOW)


def test_shape_check_sparse_interval():
    table = make_table([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(IntervalTooSparse):
        shape_check(table, "h2_closed", ShapeProperty.CONVEX, (1.5, 2.5))
    verdict = shape_check(table, "h2_closed", ShapeProperty.NONDECREASING, (1.0, 2.0))
    assert verdict.points == 2
    assert verdict.interval == (1.0, 2.0)
