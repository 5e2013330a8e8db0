"""
One-dimensional parameter sweeps and shape checks.

A sweep varies the inertia ``M`` or the damping ``D`` of a base network over a
grid and tabulates closed-form and oracle norms side by side.  Rows are
independent and may be evaluated on a thread pool; results are always merged
back in grid order.  ``shape_check`` turns a table column into a verdict
(monotone, constant, convex, concave) using finite differences on the grid
points only.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from .closed_form import (
    ModeEigenpair,
    Regime,
    closed_form_norms,
    damping_boundary,
    min_damping_ratio,
    regime_boundaries,
    system_eigenvalues,
)
from .exceptions import IntervalTooSparse, ValidationError
from .network import NetworkSpec, laplacian_spectrum
from .oracles import DEFAULT_HINF_REL_TOL, h2_gramian, hinf_search
from .system import OutputKind

logger = logging.getLogger(__name__)

MONOTONE_RTOL = 1e-8
STRICT_RTOL = 1e-12


class SweepParameter(str, Enum):
    INERTIA = "M"
    DAMPING = "D"


class Metric(str, Enum):
    H2_CLOSED = "h2-closed"
    H2_ORACLE = "h2-oracle"
    HINF_CLOSED = "hinf-closed"
    HINF_ORACLE = "hinf-oracle"
    EIGENVALUES = "eigenvalues"
    ZETA_MIN = "zeta-min"


DEFAULT_METRICS: FrozenSet[Metric] = frozenset(
    {Metric.H2_CLOSED, Metric.H2_ORACLE, Metric.HINF_CLOSED, Metric.HINF_ORACLE}
)


class ShapeProperty(str, Enum):
    NONDECREASING = "nondecreasing"
    NONINCREASING = "nonincreasing"
    STRICTLY_DECREASING = "strictly-decreasing"
    CONSTANT = "constant"
    CONVEX = "convex"
    CONCAVE = "concave"
    BOUNDED_BELOW = "bounded-below"


@dataclass(frozen=True)
class Grid:
    minimum: float
    maximum: float
    points: int = 200
    spacing: str = "log"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.minimum) and self.minimum > 0):
            raise ValidationError(f"Grid minimum must be positive, got {self.minimum}")
        if not (math.isfinite(self.maximum) and self.maximum > self.minimum):
            raise ValidationError(f"Grid maximum must exceed the minimum, got {self.maximum}")
        if self.points < 2:
            raise ValidationError(f"Grid needs at least 2 points, got {self.points}")
        if self.spacing not in ("log", "linear"):
            raise ValidationError(f"Grid spacing must be 'log' or 'linear', got {self.spacing!r}")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.minimum, self.maximum, self.points)
        return np.linspace(self.minimum, self.maximum, self.points)

    def contains(self, value: float) -> bool:
        return self.minimum < value < self.maximum


@dataclass(frozen=True)
class SweepPlan:
    """What to sweep and which columns to fill.  ``oracle_stride`` thins the oracle rows."""

    spec: NetworkSpec
    parameter: SweepParameter
    grid: Grid
    output: OutputKind
    metrics: FrozenSet[Metric] = DEFAULT_METRICS
    oracle_stride: int = 1
    insert_kink: bool = True
    hinf_rel_tol: float = DEFAULT_HINF_REL_TOL

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameter", SweepParameter(self.parameter))
        object.__setattr__(self, "output", OutputKind(self.output))
        object.__setattr__(self, "metrics", frozenset(Metric(m) for m in self.metrics))
        if self.oracle_stride < 1:
            raise ValidationError(f"oracle_stride must be >= 1, got {self.oracle_stride}")

    def kink(self) -> Optional[float]:
        """Parameter value where the phase H-infinity norm changes branch, if inside the grid."""
        if not self.output.observes_phase or self.output is OutputKind.COMBINED:
            return None
        lam = laplacian_spectrum(self.spec).governing_eigenvalue
        if self.parameter is SweepParameter.INERTIA:
            value = regime_boundaries(self.spec.damping, lam)[0]
        else:
            value = damping_boundary(self.spec.inertia, lam)
        return value if self.grid.contains(value) else None

    def values(self) -> np.ndarray:
        values = self.grid.values()
        kink = self.kink() if self.insert_kink else None
        if kink is not None:
            values = np.unique(np.concatenate([values, [kink]]))
        return values

    def spec_at(self, value: float) -> NetworkSpec:
        if self.parameter is SweepParameter.INERTIA:
            return self.spec.with_parameters(inertia=value)
        return self.spec.with_parameters(damping=value)


@dataclass(frozen=True)
class SweepRow:
    value: float
    h2_closed: Optional[float] = None
    h2_oracle: Optional[float] = None
    hinf_closed: Optional[float] = None
    hinf_oracle: Optional[float] = None
    regime: Regime = Regime.NOT_APPLICABLE
    zeta_min: Optional[float] = None
    oracle_row: bool = False
    eigenpairs: Tuple[ModeEigenpair, ...] = ()


@dataclass(frozen=True)
class SweepTable:
    parameter: SweepParameter
    output: OutputKind
    rows: Tuple[SweepRow, ...]
    kink: Optional[float] = None

    @property
    def values(self) -> np.ndarray:
        return np.array([row.value for row in self.rows])

    def column(self, name: str) -> np.ndarray:
        """Column as floats; missing entries are NaN."""
        name = name.replace("-", "_")
        data = [getattr(row, name) for row in self.rows]
        return np.array([np.nan if v is None else float(v) for v in data])

    def max_relative_gap(self, closed: str, oracle: str) -> float:
        a, b = self.column(closed), self.column(oracle)
        mask = np.isfinite(a) & np.isfinite(b)
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(a[mask] - b[mask]) / np.maximum(np.abs(b[mask]), np.finfo(float).tiny)))


# --------------------------------------------------------------- root locus
@dataclass(frozen=True)
class RootLocusRow:
    inertia: float
    mode: int
    re1: float
    im1: float
    re2: float
    im2: float


def critical_inertia(damping: float, eigenvalue: float) -> float:
    """Inertia where a mode's poles meet on the real axis (``D^2 / (4 lambda)``)."""
    if not eigenvalue > 0:
        raise ValidationError(f"eigenvalue must be positive, got {eigenvalue}")
    return damping * damping / (4.0 * eigenvalue)


def root_locus(
    inertia_values: Iterable[float],
    damping: float,
    susceptance: Optional[float] = None,
    spec: Optional[NetworkSpec] = None,
) -> List[RootLocusRow]:
    """Closed-form poles per inertia value, ordered by mode then branch."""
    if (susceptance is None) == (spec is None):
        raise ValidationError("root_locus needs exactly one of susceptance or spec")
    if spec is not None:
        eigenvalues = [float(v) for v in laplacian_spectrum(spec).eigenvalues]
    else:
        if not susceptance > 0:
            raise ValidationError(f"SMIB susceptance must be positive, got {susceptance}")
        eigenvalues = [float(susceptance)]

    rows = []
    for M in inertia_values:
        M = float(M)
        for pair in system_eigenvalues(M, damping, eigenvalues):
            s1, s2 = pair.poles
            rows.append(RootLocusRow(M, pair.index, s1.real, s1.imag, s2.real, s2.imag))
    return rows


# ------------------------------------------------------------------- sweeps
def _evaluate(plan: SweepPlan, value: float, with_oracle: bool) -> SweepRow:
    spec = plan.spec_at(value)
    metrics = plan.metrics
    row: Dict[str, object] = {"value": float(value), "oracle_row": with_oracle}

    closed = closed_form_norms(spec, plan.output)
    if closed is not None:
        h2, hinf = closed
        if Metric.H2_CLOSED in metrics:
            row["h2_closed"] = h2.value
        if Metric.HINF_CLOSED in metrics:
            row["hinf_closed"] = hinf.value
        row["regime"] = hinf.regime

    if with_oracle:
        if Metric.H2_ORACLE in metrics:
            row["h2_oracle"] = h2_gramian(spec, plan.output).h2
        if Metric.HINF_ORACLE in metrics:
            row["hinf_oracle"] = hinf_search(spec, plan.output, plan.hinf_rel_tol).hinf

    spectrum = laplacian_spectrum(spec)
    if Metric.ZETA_MIN in metrics:
        row["zeta_min"] = min_damping_ratio(spec.inertia, spec.damping, spectrum.lambda_max)
    if Metric.EIGENVALUES in metrics:
        row["eigenpairs"] = tuple(system_eigenvalues(spec.inertia, spec.damping, spectrum))
    return SweepRow(**row)


def norm_sweep(plan: SweepPlan, threads: int = 1, progress: bool = False) -> SweepTable:
    """Evaluate ``plan`` row by row; rows come back in grid order regardless of ``threads``."""
    values = plan.values()
    kink = plan.kink() if plan.insert_kink else None
    last = len(values) - 1
    oracle_flags = [
        k % plan.oracle_stride == 0 or k == last or (kink is not None and values[k] == kink)
        for k in range(len(values))
    ]
    # Warm the spectrum cache once so worker threads only read it.
    laplacian_spectrum(plan.spec)
    logger.debug(
        f"Sweeping {plan.parameter.value} over {len(values)} points "
        f"({plan.output.value} output, {threads} thread(s))"
    )

    evaluate = lambda item: _evaluate(plan, item[0], item[1])  # noqa: E731
    items = list(zip(values, oracle_flags))
    desc = f"sweep {plan.parameter.value}"
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(tqdm(pool.map(evaluate, items), total=len(items), disable=not progress, desc=desc))
    else:
        rows = [evaluate(item) for item in tqdm(items, disable=not progress, desc=desc)]
    return SweepTable(parameter=plan.parameter, output=plan.output, rows=tuple(rows), kink=kink)


def combined_sweep(
    spec: NetworkSpec,
    kappa: float,
    inertia_grid: Grid,
    *,
    threads: int = 1,
    progress: bool = False,
    hinf_rel_tol: float = DEFAULT_HINF_REL_TOL,
) -> SweepTable:
    """Oracle-only H2 and H-infinity of the combined output against inertia."""
    plan = SweepPlan(
        spec=spec.with_parameters(kappa=kappa),
        parameter=SweepParameter.INERTIA,
        grid=inertia_grid,
        output=OutputKind.COMBINED,
        metrics=frozenset({Metric.H2_ORACLE, Metric.HINF_ORACLE}),
        insert_kink=False,
        hinf_rel_tol=hinf_rel_tol,
    )
    return norm_sweep(plan, threads=threads, progress=progress)


# ------------------------------------------------------------ shape checks
@dataclass(frozen=True)
class ShapeVerdict:
    column: str
    property: ShapeProperty
    interval: Tuple[float, float]
    passed: bool
    max_violation: float
    points: int
    notes: Dict[str, float] = field(default_factory=dict)


def _chord_excess(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``y_i`` minus the chord through its neighbours, for each interior point."""
    left, right = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    chord = (right * y[:-2] + left * y[2:]) / (left + right)
    return y[1:-1] - chord


def shape_check(
    table: SweepTable,
    column: str,
    prop: ShapeProperty,
    interval: Tuple[float, float] = (-math.inf, math.inf),
    *,
    bound: Optional[float] = None,
) -> ShapeVerdict:
    """
    Verdict for ``column`` on the closed ``interval`` of the swept parameter.

    Non-strict properties pass when the worst violation is within
    ``1e-8`` of the column scale; strict decrease needs every step to drop
    by more than ``1e-12`` of the scale.
    """
    prop = ShapeProperty(prop)
    x_all, y_all = table.values, table.column(column)
    lo, hi = interval
    mask = (x_all >= lo) & (x_all <= hi) & np.isfinite(y_all)
    x, y = x_all[mask], y_all[mask]

    needed = 3 if prop in (ShapeProperty.CONVEX, ShapeProperty.CONCAVE) else 2
    if prop is ShapeProperty.BOUNDED_BELOW:
        needed = 1
    if len(x) < needed:
        raise IntervalTooSparse(
            f"{column}: {len(x)} point(s) in [{lo:.6g}, {hi:.6g}], need at least {needed} for {prop.value}"
        )

    scale = max(float(np.max(np.abs(y))), np.finfo(float).tiny)
    tol = MONOTONE_RTOL * scale
    diffs = np.diff(y)
    if prop is ShapeProperty.NONDECREASING:
        violation, passed = max(float(-diffs.min()), 0.0), None
    elif prop is ShapeProperty.NONINCREASING:
        violation, passed = max(float(diffs.max()), 0.0), None
    elif prop is ShapeProperty.STRICTLY_DECREASING:
        violation = max(float(diffs.max()) + STRICT_RTOL * scale, 0.0)
        passed = violation == 0.0
    elif prop is ShapeProperty.CONSTANT:
        violation, passed = float(y.max() - y.min()), None
    elif prop is ShapeProperty.CONVEX:
        violation, passed = max(float(_chord_excess(x, y).max()), 0.0), None
    elif prop is ShapeProperty.CONCAVE:
        violation, passed = max(float(-_chord_excess(x, y).min()), 0.0), None
    else:
        if bound is None:
            raise ValidationError("bounded-below check needs a bound")
        violation, passed = max(float(bound - y.min()), 0.0), None
        tol = MONOTONE_RTOL * max(abs(bound), np.finfo(float).tiny)

    if passed is None:
        passed = violation <= tol
    return ShapeVerdict(
        column=column,
        property=prop,
        interval=(float(x[0]), float(x[-1])),
        passed=bool(passed),
        max_violation=violation,
        points=int(len(x)),
    )


def _norm_column(table: SweepTable, norm: str) -> Optional[str]:
    for name in (f"{norm}_closed", f"{norm}_oracle"):
        if np.isfinite(table.column(name)).any():
            return name
    return None


def figure_shape_suite(plan: SweepPlan, table: SweepTable) -> List[ShapeVerdict]:
    """
    The qualitative claims that apply to this plan's output and parameter.

    Checks whose interval holds too few grid points are skipped.
    """
    h2 = _norm_column(table, "h2")
    hinf = _norm_column(table, "hinf")
    checks: List[Tuple[Optional[str], ShapeProperty, Tuple[float, float], Optional[float]]] = []
    full = (-math.inf, math.inf)
    output, param = plan.output, plan.parameter

    if output is OutputKind.COMBINED:
        # The combined-output trade-off is only claimed along M.
        if param is SweepParameter.INERTIA:
            checks += [
                (h2, ShapeProperty.STRICTLY_DECREASING, full, None),
                (hinf, ShapeProperty.NONDECREASING, full, None),
            ]
    elif output is OutputKind.FREQUENCY:
        checks.append((h2, ShapeProperty.NONINCREASING, full, None))
        if param is SweepParameter.INERTIA:
            checks.append((hinf, ShapeProperty.CONSTANT, full, None))
        else:
            checks.append((hinf, ShapeProperty.NONINCREASING, full, None))
    else:
        lam = laplacian_spectrum(plan.spec).governing_eigenvalue
        checks.append((hinf, ShapeProperty.BOUNDED_BELOW, full, 1.0 / math.sqrt(lam)))
        if param is SweepParameter.INERTIA:
            flat_until, convex_until = regime_boundaries(plan.spec.damping, lam)
            checks += [
                (h2, ShapeProperty.CONSTANT, full, None),
                (hinf, ShapeProperty.CONSTANT, (-math.inf, flat_until), None),
                (hinf, ShapeProperty.NONDECREASING, full, None),
                (hinf, ShapeProperty.CONVEX, (flat_until, convex_until), None),
                (hinf, ShapeProperty.CONCAVE, (convex_until, math.inf), None),
            ]
        else:
            checks += [
                (h2, ShapeProperty.STRICTLY_DECREASING, full, None),
                (hinf, ShapeProperty.NONINCREASING, full, None),
            ]

    verdicts = []
    for column, prop, interval, bound in checks:
        if column is None:
            continue
        try:
            verdicts.append(shape_check(table, column, prop, interval, bound=bound))
        except IntervalTooSparse as e:
            logger.debug(f"Skipping shape check: {e}")
    return verdicts


def pole_rows(table: SweepTable) -> List[RootLocusRow]:
    """Flatten the eigenvalue columns of a sweep into root-locus rows keyed by the swept value."""
    rows = []
    for row in table.rows:
        for pair in row.eigenpairs:
            s1, s2 = pair.poles
            rows.append(RootLocusRow(row.value, pair.index, s1.real, s1.imag, s2.real, s2.imag))
    return rows

