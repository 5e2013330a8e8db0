"""
Randomized agreement suite: closed forms against numerical oracles.

Networks are seeded Erdos-Renyi graphs with weights in [0.1, 10] and
log-uniform ``M`` in [0.05, 20] and ``D`` in [0.1, 10].  Each check keeps the
worst error it saw over the suite.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
from tqdm import tqdm

from .closed_form import (
    frequency_output_norms,
    min_damping_ratio,
    mode_poles,
    phase_output_norms,
    system_eigenvalues,
)
from .exceptions import ValidationError
from .network import GraphPreset, NetworkSpec, build_preset, laplacian_spectrum
from .oracles import (
    DEFAULT_HINF_REL_TOL,
    dense_poles,
    h2_gramian,
    h2_impulse_energy,
    hinf_search,
    match_poles,
    numeric_damping_ratios,
)
from .system import OutputKind, assemble

logger = logging.getLogger(__name__)

WEIGHT_RANGE = (0.1, 10.0)
INERTIA_RANGE = (0.05, 20.0)
DAMPING_RANGE = (0.1, 10.0)
# Damping ratios close to 1 put the pole pair near a double root, where dense
# eigenvalues lose half their digits.
ZETA_CHECK_LIMIT = 0.9
# Impulse sampling cost grows with the fast/slow pole ratio of a mode.
IMPULSE_STIFFNESS_LIMIT = 2000.0


@dataclass
class CheckResult:
    name: str
    tolerance: float
    worst_error: float = 0.0
    samples: int = 0
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return self.worst_error <= self.tolerance

    def record(self, error: float) -> None:
        self.samples += 1
        if not error <= self.worst_error:
            self.worst_error = float(error)


@dataclass
class ValidationSummary:
    cases: int
    seed: int
    checks: Dict[str, CheckResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def failures(self) -> List[str]:
        return [name for name, check in self.checks.items() if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cases": self.cases,
            "seed": self.seed,
            "passed": self.passed,
            "checks": {
                name: {
                    "tolerance": check.tolerance,
                    "worst_error": check.worst_error,
                    "samples": check.samples,
                    "skipped": check.skipped,
                    "passed": check.passed,
                }
                for name, check in self.checks.items()
            },
        }


def _log_uniform(rng: np.random.Generator, low: float, high: float) -> float:
    return float(math.exp(rng.uniform(math.log(low), math.log(high))))


def random_specs(count: int, seed: int = 0, *, n_min: int = 2, n_max: int = 50) -> Iterator[NetworkSpec]:
    """Seeded connected random networks; the same arguments always give the same specs."""
    if not 2 <= n_min <= n_max:
        raise ValidationError(f"Need 2 <= n_min <= n_max, got {n_min}, {n_max}")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        p = float(rng.uniform(0.2, 0.8))
        graph_seed = int(rng.integers(0, 2**31 - 1))
        weight_seed = int(rng.integers(0, 2**31 - 1))
        inertia = _log_uniform(rng, *INERTIA_RANGE)
        damping = _log_uniform(rng, *DAMPING_RANGE)
        preset = GraphPreset(
            kind="erdos-renyi", n=n, p=p, seed=graph_seed, weight=(WEIGHT_RANGE[0], WEIGHT_RANGE[1], weight_seed)
        )
        yield build_preset(preset, inertia=inertia, damping=damping)


def _stiffness(spec: NetworkSpec) -> float:
    worst = 1.0
    for lam in laplacian_spectrum(spec).eigenvalues[1:]:
        poles = mode_poles(spec.inertia, spec.damping, float(lam))
        worst = max(worst, max(abs(s) for s in poles) / min(abs(s.real) for s in poles))
    return worst


def _relative(actual: float, expected: float) -> float:
    return abs(actual - expected) / max(abs(expected), np.finfo(float).tiny)


def run_validation(
    count: int = 200,
    seed: int = 0,
    *,
    n_max: int = 50,
    hinf_rel_tol: float = DEFAULT_HINF_REL_TOL,
    impulse_every: int = 10,
    progress: bool = False,
    oracle_options: Optional[Dict[str, Any]] = None,
) -> ValidationSummary:
    """
    Run every closed-form check on ``count`` random networks.

    The impulse-energy oracle is slow for stiff modes, so it runs on every
    ``impulse_every``-th case only (0 disables it).
    """
    options = dict(oracle_options or {})
    summary = ValidationSummary(cases=count, seed=seed)
    checks = summary.checks
    for name, tol in (
        ("poles", 1e-8),
        ("zeta_min", 1e-10),
        ("h2_phase_modal", 1e-8),
        ("h2_frequency", 1e-8),
        ("h2_impulse_vs_gramian", 1e-2),
        ("hinf_phase", max(10.0 * hinf_rel_tol, 1e-12)),
        ("hinf_phase_governing_mode", 0.0),
        ("hinf_frequency", 1e-6),
        ("hinf_frequency_argmax", 1e-3),
    ):
        checks[name] = CheckResult(name=name, tolerance=tol)

    search_kwargs = {
        key: options[key] for key in ("grid_points", "grid_span", "omega_xtol") if key in options
    }
    specs = random_specs(count, seed, n_max=n_max)
    for case, spec in enumerate(tqdm(specs, total=count, disable=not progress, desc="validate")):
        n, M, D = spec.n, spec.inertia, spec.damping
        spectrum = laplacian_spectrum(spec)

        # Poles and damping ratios against the dense eigensolver.
        closed = [s for pair in system_eigenvalues(M, D, spectrum) for s in pair.poles]
        numeric = dense_poles(assemble(spec, OutputKind.PHASE))
        scale = max(1.0, float(np.max(np.abs(closed))))
        checks["poles"].record(match_poles(closed, numeric) / scale)
        zeta = min_damping_ratio(M, D, spectrum.lambda_max)
        if zeta < ZETA_CHECK_LIMIT:
            checks["zeta_min"].record(_relative(float(numeric_damping_ratios(numeric).min()), zeta))
        else:
            checks["zeta_min"].skipped += 1

        # H2.
        phase_h2 = h2_gramian(spec, OutputKind.PHASE)
        checks["h2_phase_modal"].record(_relative(phase_h2.h2 ** 2, (n - 1) / (2.0 * D)))
        freq_closed, freq_hinf_closed = frequency_output_norms(n, M, D)
        checks["h2_frequency"].record(_relative(h2_gramian(spec, OutputKind.FREQUENCY).h2, freq_closed.value))
        if impulse_every and case % impulse_every == 0 and _stiffness(spec) <= IMPULSE_STIFFNESS_LIMIT:
            energy = h2_impulse_energy(
                spec,
                OutputKind.PHASE,
                dt_factor=options.get("impulse_dt_factor", 0.05),
                horizon_factor=options.get("impulse_horizon_factor", 12.0),
                tail_fraction=options.get("tail_fraction", 1e-3),
            )
            checks["h2_impulse_vs_gramian"].record(_relative(energy, phase_h2.h2 ** 2))
        else:
            checks["h2_impulse_vs_gramian"].skipped += 1

        # H-infinity.
        _, phase_hinf_closed = phase_output_norms(n, M, D, spectrum.algebraic_connectivity)
        phase_hinf = hinf_search(spec, OutputKind.PHASE, hinf_rel_tol, **search_kwargs)
        checks["hinf_phase"].record(_relative(phase_hinf.hinf, phase_hinf_closed.value))
        checks["hinf_phase_governing_mode"].record(0.0 if phase_hinf.governing_mode == 2 else 1.0)
        freq_hinf = hinf_search(spec, OutputKind.FREQUENCY, hinf_rel_tol, **search_kwargs)
        checks["hinf_frequency"].record(_relative(freq_hinf.hinf, freq_hinf_closed.value))
        checks["hinf_frequency_argmax"].record(freq_hinf.argmax_omega)

    for name in summary.failures():
        check = checks[name]
        logger.warning(f"Check {name} failed: worst error {check.worst_error:.3e} > {check.tolerance:.1e}")
    return summary
