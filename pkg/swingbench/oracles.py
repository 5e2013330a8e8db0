"""
Numerical oracles for the closed-form metrics.

* H2 from observability Gramians, per mode (``h2_gramian``) or on the dense
  2n-state model (``h2_dense``), and from impulse-response energy
  (``h2_impulse_energy``).
* H-infinity from a per-mode 1-D frequency search (``hinf_search``) or a dense
  pole-driven search (``hinf_search_system``).
* Bode magnitude tables and pole checks.

None of these functions use the closed forms except as search seeds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import expm, solve_continuous_lyapunov
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .exceptions import HorizonTooShort, ObservableMarginalMode, ValidationError
from .network import NetworkSpec
from .system import (
    ModalSubsystem,
    OutputKind,
    SwingStateSpace,
    assemble,
    modal_decompose,
    modal_sigma_max,
    sigma_max,
)

logger = logging.getLogger(__name__)

DEFAULT_HINF_REL_TOL = 1e-9
DEFAULT_OMEGA_XTOL = 1e-10
DEFAULT_GRID_POINTS = 64
DEFAULT_GRID_SPAN = 100.0
# A later mode only takes over as governing mode if it beats the incumbent by this much.
GOVERNING_MARGIN = 1e-12
_EPS_FLOOR = 4.0 * np.finfo(float).eps


@dataclass(frozen=True)
class GramianResult:
    h2: float
    deflated_modes: Tuple[int, ...]
    contributions: Tuple[float, ...] = ()


@dataclass(frozen=True)
class HinfSearchResult:
    hinf: float
    argmax_omega: float
    governing_mode: int
    tolerance: float
    mode_peaks: Tuple[float, ...] = ()


@dataclass(frozen=True)
class BodeRow:
    omega: float
    sigma_max: float


# ------------------------------------------------------------------------ H2
def _mode_h2_squared(mode: ModalSubsystem) -> float:
    a, b, c = mode.realization()
    if not np.any(c):
        return 0.0
    P = solve_continuous_lyapunov(a.T, -c.T @ c)
    return float((b.T @ P @ b)[0, 0])


def h2_gramian(spec: NetworkSpec, output: OutputKind) -> GramianResult:
    """
    H2 norm as the sum of per-mode ``b^T P b`` with ``P a + a^T P = -c^T c``.

    A zero-eigenvalue mode keeps only its velocity state; it is listed in
    ``deflated_modes``.  A zero eigenvalue with a visible phase row has no
    finite H2 norm.
    """
    modes = modal_decompose(spec, output)
    deflated: List[int] = []
    contributions: List[float] = []
    for mode in modes:
        if mode.is_marginal:
            if mode.phase_gain:
                logger.error(f"Mode {mode.index} is marginal and observable; H2 is infinite")
                raise ObservableMarginalMode(f"Mode {mode.index} has a zero eigenvalue visible at the output")
            deflated.append(mode.index)
        contributions.append(_mode_h2_squared(mode))
    total = float(sum(contributions))
    return GramianResult(h2=math.sqrt(max(total, 0.0)), deflated_modes=tuple(deflated), contributions=tuple(contributions))


def h2_dense(system: SwingStateSpace) -> float:
    """``sqrt(trace(F^T P F))`` on the dense model with the zero mode deflated."""
    if system.zero_mode_observable:
        raise ObservableMarginalMode("The zero mode is visible at the output; H2 is infinite")
    A = system.effective_A
    P = solve_continuous_lyapunov(A.T, -system.C.T @ system.C)
    value = float(np.trace(system.F.T @ P @ system.F))
    return math.sqrt(max(value, 0.0))


def _impulse_samples(a: np.ndarray, b: np.ndarray, c: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Exact ``c exp(a t) b`` at ``times`` for a 1- or 2-state mode, shape ``(T, rows)``."""
    x0 = b[:, 0]
    if a.shape == (1, 1):
        states = np.exp(a[0, 0] * times)[:, None] * x0[None, :]
        return states @ c.T
    evals, evecs = np.linalg.eig(a)
    if abs(evals[0] - evals[1]) > 1e-6 * max(abs(evals[0]), abs(evals[1])):
        coeff = np.linalg.solve(evecs, x0.astype(complex))
        modal = np.exp(np.outer(times, evals)) * coeff[None, :]
        states = (modal @ evecs.T).real
    else:
        # Repeated pole: a = s0 I + N with N nilpotent, so exp(a t) = exp(s0 t) (I + N t).
        s0 = float(np.trace(a)) / 2.0
        nil = a - s0 * np.eye(2)
        states = np.exp(s0 * times)[:, None] * (x0[None, :] + np.outer(times, nil @ x0))
    return states @ c.T


def h2_impulse_energy(
    spec: NetworkSpec,
    output: OutputKind,
    dt: Optional[float] = None,
    horizon: Optional[float] = None,
    *,
    dt_factor: float = 0.05,
    horizon_factor: float = 12.0,
    tail_fraction: float = 1e-3,
) -> float:
    """
    Squared H2 norm as the total impulse-response output energy.

    Each input channel excites one mode after the orthogonal change of
    coordinates, so the sum over channels is the sum of per-mode energies,
    integrated with the trapezoid rule on exact samples.  ``dt``/``horizon``
    default per mode to ``dt_factor/|s_fast|`` and ``horizon_factor/|Re s_slow|``.
    """
    total = 0.0
    for mode in modal_decompose(spec, output):
        a, b, c = mode.realization()
        if not np.any(c):
            continue
        poles = np.linalg.eigvals(a)
        fastest = float(np.max(np.abs(poles)))
        slowest = float(np.min(np.abs(poles.real)))
        mode_dt = dt if dt is not None else dt_factor / fastest
        if mode_dt * fastest >= 0.1:
            raise ValidationError(
                f"dt={mode_dt:.3e} is too coarse for mode {mode.index} (fastest pole {fastest:.3e})"
            )
        mode_horizon = horizon if horizon is not None else horizon_factor / slowest
        steps = max(int(math.ceil(mode_horizon / mode_dt)), 2)
        times = np.arange(steps + 1) * mode_dt
        samples = _impulse_samples(a, b, c, times)
        energy = float(trapezoid(np.sum(samples * samples, axis=1), dx=mode_dt))

        final_state = expm(a * times[-1]) @ b[:, 0]
        tail = float(np.linalg.norm(c, 2) ** 2 * (final_state @ final_state) / (2.0 * slowest))
        if tail > tail_fraction * energy:
            logger.error(f"Mode {mode.index}: tail energy {tail:.3e} vs accumulated {energy:.3e}")
            raise HorizonTooShort(
                f"Horizon {times[-1]:.3e} leaves {tail / energy:.2e} of mode {mode.index}'s energy unaccounted"
            )
        total += energy
    return total


# ------------------------------------------------------------------- H-inf
def _golden_refine(
    magnitude: Callable[[float], float],
    low: float,
    mid: float,
    high: float,
    xtol: float,
) -> Tuple[float, float]:
    objective = lambda w: -float(magnitude(w))  # noqa: E731
    try:
        res = minimize_scalar(objective, bracket=(low, mid, high), method="golden", tol=xtol)
    except ValueError:
        res = minimize_scalar(
            objective, bounds=(low, high), method="bounded", options={"xatol": xtol * max(high, 1.0)}
        )
    return float(res.x), float(-res.fun)


def _curvature_tolerance(
    magnitude: Callable[[float], float],
    omega: float,
    value: float,
    xtol: float,
    scale: float,
) -> float:
    """Relative value error implied by an ``xtol`` error in the peak location."""
    if omega <= 0.0 or value <= 0.0:
        return _EPS_FLOOR
    h = 1e-4 * max(omega, scale)
    if omega - h <= 0:
        return _EPS_FLOOR
    second = (float(magnitude(omega + h)) - 2.0 * value + float(magnitude(omega - h))) / (h * h)
    dw = xtol * max(omega, scale)
    return max(0.5 * abs(second) * dw * dw / value, _EPS_FLOOR)


def _peak_on_grid(
    magnitude: Callable[[float], float],
    grid: np.ndarray,
    values: np.ndarray,
    xtol: float,
) -> Tuple[float, float]:
    k = int(np.argmax(values))
    best_w, best_v = float(grid[k]), float(values[k])
    if 0 < k < len(grid) - 1:
        w, v = _golden_refine(magnitude, float(grid[k - 1]), best_w, float(grid[k + 1]), xtol)
        if v > best_v:
            best_w, best_v = w, v
    elif k == len(grid) - 1:
        logger.warning(f"Peak at the upper end of the search grid (omega={best_w:.3e}); widen the grid span")
    return best_w, best_v


def _mode_peak(
    mode: ModalSubsystem,
    *,
    grid_points: int,
    grid_span: float,
    xtol: float,
) -> Tuple[float, float, float]:
    """``(peak value, argmax omega, relative tolerance)`` for one mode."""
    if not (mode.phase_gain or mode.frequency_gain):
        return 0.0, 0.0, 0.0
    ref = mode.reference_frequency
    grid = np.concatenate([[0.0], np.geomspace(ref / grid_span, ref * grid_span, grid_points)])
    values = np.asarray(mode.magnitude(grid), dtype=float)
    best_w, best_v = _peak_on_grid(mode.magnitude, grid, values, xtol)
    for w in mode.stationary_frequencies():
        v = float(mode.magnitude(w))
        if v > best_v:
            best_w, best_v = w, v
    return best_v, best_w, _curvature_tolerance(mode.magnitude, best_w, best_v, xtol, ref)


def _search_xtol(rel_tol: float, omega_xtol: float) -> float:
    """
    Range-check ``rel_tol`` and tighten ``omega_xtol`` to match it.

    Near a smooth peak the value error is quadratic in the location error, so a
    relative location error of ``0.1 * sqrt(rel_tol)`` keeps the value well
    inside ``rel_tol``.
    """
    if not 1e-12 < rel_tol < 1e-2:
        raise ValidationError(f"rel_tol must lie in (1e-12, 1e-2), got {rel_tol}")
    return min(omega_xtol, 0.1 * math.sqrt(rel_tol))


def hinf_search(
    spec: NetworkSpec,
    output: OutputKind,
    rel_tol: float = DEFAULT_HINF_REL_TOL,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
    grid_span: float = DEFAULT_GRID_SPAN,
    omega_xtol: float = DEFAULT_OMEGA_XTOL,
) -> HinfSearchResult:
    """
    H-infinity norm as the largest per-mode peak gain.

    Each mode is scanned on ``{0}`` plus a log grid spanning ``grid_span``
    either side of its natural frequency, refined by golden-section search and
    compared against its closed-form stationary points.  ``rel_tol`` bounds the
    refinement step (see ``_search_xtol``) and is the threshold above which the
    achieved ``tolerance`` is logged as a warning.
    """
    xtol = _search_xtol(rel_tol, omega_xtol)
    modes = modal_decompose(spec, output)
    best = (0.0, 0.0, 0, _EPS_FLOOR)
    peaks: List[float] = []
    for mode in modes:
        value, omega, tol = _mode_peak(mode, grid_points=grid_points, grid_span=grid_span, xtol=xtol)
        peaks.append(value)
        if value > best[0] * (1.0 + GOVERNING_MARGIN):
            best = (value, omega, mode.index, tol)
    value, omega, governing, tol = best
    if tol > rel_tol:
        logger.warning(f"H-inf search reached relative tolerance {tol:.2e}, above requested {rel_tol:.2e}")
    return HinfSearchResult(
        hinf=value, argmax_omega=omega, governing_mode=governing, tolerance=tol, mode_peaks=tuple(peaks)
    )


def hinf_search_system(
    system: SwingStateSpace,
    rel_tol: float = DEFAULT_HINF_REL_TOL,
    *,
    points_per_decade: int = 40,
    grid_span: float = DEFAULT_GRID_SPAN,
    omega_xtol: float = DEFAULT_OMEGA_XTOL,
) -> HinfSearchResult:
    """
    H-infinity norm of a dense model, located from the poles of ``A`` alone.

    ``governing_mode`` is 0 because the dense model carries no mode labels.
    """
    xtol = _search_xtol(rel_tol, omega_xtol)
    poles = system.poles()
    magnitudes = np.abs(poles)
    scale = float(np.max(magnitudes)) if magnitudes.size else 1.0
    nonzero = magnitudes[magnitudes > 1e-12 * max(scale, 1.0)]
    if nonzero.size == 0:
        nonzero = np.array([1.0])
    low, high = float(nonzero.min()) / grid_span, float(nonzero.max()) * grid_span
    decades = max(math.log10(high / low), 1.0)
    log_grid = np.geomspace(low, high, int(points_per_decade * decades) + 1)
    imag_parts = np.abs(poles.imag)
    grid = np.unique(np.concatenate([[0.0], log_grid, nonzero, imag_parts[imag_parts > 0]]))

    magnitude = lambda w: sigma_max(system, w)  # noqa: E731
    values = np.array([magnitude(w) for w in grid])
    best_w, best_v = _peak_on_grid(magnitude, grid, values, xtol)
    tol = _curvature_tolerance(magnitude, best_w, best_v, xtol, scale)
    if tol > rel_tol:
        logger.warning(f"Dense H-inf search reached relative tolerance {tol:.2e}, above requested {rel_tol:.2e}")
    return HinfSearchResult(hinf=best_v, argmax_omega=best_w, governing_mode=0, tolerance=tol)


# -------------------------------------------------------------------- Bode
def bode_table(
    spec: NetworkSpec,
    output: OutputKind,
    omega_min: float,
    omega_max: float,
    points: int,
    *,
    dense: bool = False,
) -> List[BodeRow]:
    """Largest singular value on a log-spaced frequency grid."""
    if not (0 < omega_min < omega_max):
        raise ValidationError(f"Need 0 < omega_min < omega_max, got {omega_min}, {omega_max}")
    if points < 2:
        raise ValidationError(f"Need at least 2 points, got {points}")
    grid = np.geomspace(omega_min, omega_max, points)
    if dense:
        system = assemble(spec, output)
        return [BodeRow(float(w), sigma_max(system, float(w))) for w in grid]
    modes = modal_decompose(spec, output)
    return [BodeRow(float(w), modal_sigma_max(modes, float(w))) for w in grid]


# ------------------------------------------------------------------- poles
def dense_poles(system: SwingStateSpace) -> np.ndarray:
    return system.poles()


def match_poles(expected: Sequence[complex], actual: Sequence[complex]) -> float:
    """Largest distance between two pole sets after optimal one-to-one matching."""
    e = np.asarray(expected, dtype=complex)
    a = np.asarray(actual, dtype=complex)
    if e.shape != a.shape:
        raise ValidationError(f"Pole sets differ in size: {e.shape} vs {a.shape}")
    cost = np.abs(e[:, None] - a[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()) if cost.size else 0.0


def numeric_damping_ratios(poles: Sequence[complex], imag_tol: float = 1e-9) -> np.ndarray:
    """``-Re(s)/|s|`` for every oscillatory pole (non-negligible imaginary part)."""
    p = np.asarray(poles, dtype=complex)
    oscillatory = p[np.abs(p.imag) > imag_tol * np.maximum(np.abs(p), 1.0)]
    return -oscillatory.real / np.abs(oscillatory)
