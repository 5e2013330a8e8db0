"""
Closed-form stability metrics of homogeneous swing networks.

Everything here is a scalar function of ``(n, M, D, lambda)``.  The H-infinity
expressions share one two-branch formula

    ||G_i||_inf = 2 M sqrt(lam) / (D sqrt(4 M lam - D^2))   if D^2 <= 2 M lam
                  1 / sqrt(lam)                             otherwise

where equality takes the first (resonant) branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .exceptions import NonPositiveParameter, ValidationError
from .network import LaplacianSpectrum, NetworkSpec, laplacian_spectrum
from .system import OutputKind


class Regime(str, Enum):
    UNDERDAMPED = "underdamped-branch"
    OVERDAMPED = "overdamped-branch"
    NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class NormResult:
    value: float
    regime: Regime
    source: str
    peak_frequency: Optional[float] = None
    annotations: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ModeEigenpair:
    """Poles of one mode; ``damping_ratio`` is None for the zero eigenvalue."""

    index: int
    eigenvalue: float
    poles: Tuple[complex, complex]
    damping_ratio: Optional[float]
    natural_frequency: float


def _require_positive(**params: float) -> None:
    for name, value in params.items():
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise NonPositiveParameter(f"{name} must be a number, got {value!r}")
        if not (math.isfinite(number) and number > 0):
            raise NonPositiveParameter(f"{name} must be positive and finite, got {value}")


def _hinf_branch(M: float, D: float, lam: float, source: str) -> NormResult:
    if D * D <= 2.0 * M * lam:
        value = 2.0 * M * math.sqrt(lam) / (D * math.sqrt(4.0 * M * lam - D * D))
        peak = math.sqrt(max(lam / M - D * D / (2.0 * M * M), 0.0))
        return NormResult(value=value, regime=Regime.UNDERDAMPED, source=source, peak_frequency=peak)
    return NormResult(value=1.0 / math.sqrt(lam), regime=Regime.OVERDAMPED, source=source, peak_frequency=0.0)


# ----------------------------------------------------------------------- SMIB
def smib_norms(M: float, D: float, B: float) -> Tuple[NormResult, NormResult]:
    """H2 and H-infinity norms of the single-machine infinite-bus system."""
    _require_positive(M=M, D=D, B=B)
    h2 = NormResult(value=math.sqrt(1.0 / (2.0 * D)), regime=Regime.NOT_APPLICABLE, source="smib-h2")
    return h2, _hinf_branch(M, D, B, source="smib-hinf")


def smib_modal_parameters(M: float, D: float, B: float) -> Tuple[float, float]:
    """Natural frequency ``sqrt(B/M)`` and damping ratio ``D / (2 sqrt(BM))``."""
    _require_positive(M=M, D=D, B=B)
    return math.sqrt(B / M), D / (2.0 * math.sqrt(B * M))


def resonant_peak_frequency(M: float, D: float, B: float) -> float:
    """``omega_n sqrt(1 - 2 zeta^2)``, or 0 when the response has no interior peak."""
    omega_n, zeta = smib_modal_parameters(M, D, B)
    margin = 1.0 - 2.0 * zeta * zeta
    if margin <= 0:
        return 0.0
    return omega_n * math.sqrt(margin)


# --------------------------------------------------------------------- poles
def mode_poles(M: float, D: float, lam: float) -> Tuple[complex, complex]:
    """Roots of ``M s^2 + D s + lam``, the '+' root first."""
    disc = D * D - 4.0 * M * lam
    if disc >= 0:
        root = math.sqrt(disc)
        return complex((-D + root) / (2.0 * M), 0.0), complex((-D - root) / (2.0 * M), 0.0)
    imag = math.sqrt(-disc) / (2.0 * M)
    real = -D / (2.0 * M)
    return complex(real, imag), complex(real, -imag)


def system_eigenvalues(
    M: float,
    D: float,
    eigenvalues: Union[LaplacianSpectrum, Sequence[float]],
) -> List[ModeEigenpair]:
    """The ``2n`` poles of the swing dynamics, grouped by Laplacian mode."""
    _require_positive(M=M, D=D)
    values = eigenvalues.eigenvalues if isinstance(eigenvalues, LaplacianSpectrum) else eigenvalues
    pairs = []
    for idx, lam in enumerate(values, start=1):
        lam = float(lam)
        if lam < 0:
            raise ValidationError(f"Laplacian eigenvalue {idx} is negative: {lam}")
        zeta = D / (2.0 * math.sqrt(M * lam)) if lam > 0 else None
        pairs.append(
            ModeEigenpair(
                index=idx,
                eigenvalue=lam,
                poles=mode_poles(M, D, lam),
                damping_ratio=zeta,
                natural_frequency=math.sqrt(lam / M),
            )
        )
    return pairs


def min_damping_ratio(M: float, D: float, lambda_max: float) -> float:
    """Smallest modal damping ratio, set by the largest Laplacian eigenvalue."""
    _require_positive(M=M, D=D, lambda_max=lambda_max)
    return D / (2.0 * math.sqrt(M * lambda_max))


# ------------------------------------------------------------ network norms
def phase_output_norms(n: int, M: float, D: float, lambda2: float) -> Tuple[NormResult, NormResult]:
    """
    Norms for the phase-cohesiveness output.

    The H2 value is the published ``sqrt(n / (2D))``.  The modal sum gives
    ``sqrt((n - 1) / (2D))`` because the zero mode is invisible at the output;
    that value rides along as the ``modal_h2`` annotation.
    """
    if n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    _require_positive(M=M, D=D, lambda2=lambda2)
    h2 = NormResult(
        value=math.sqrt(n / (2.0 * D)),
        regime=Regime.NOT_APPLICABLE,
        source="phase-h2",
        annotations={"modal_h2": math.sqrt((n - 1) / (2.0 * D))},
    )
    return h2, _hinf_branch(M, D, lambda2, source="phase-hinf")


def frequency_output_norms(n: int, M: float, D: float) -> Tuple[NormResult, NormResult]:
    """Norms for the frequency output; both are independent of the topology."""
    if n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    _require_positive(M=M, D=D)
    h2 = NormResult(value=math.sqrt(n / (2.0 * D * M)), regime=Regime.NOT_APPLICABLE, source="frequency-h2")
    hinf = NormResult(value=1.0 / D, regime=Regime.NOT_APPLICABLE, source="frequency-hinf", peak_frequency=0.0)
    return h2, hinf


def per_mode_hinf(M: float, D: float, lambda_i: float) -> NormResult:
    """Peak gain of ``sqrt(lambda_i) / (M s^2 + D s + lambda_i)`` and where it occurs."""
    _require_positive(M=M, D=D)
    if lambda_i < 0:
        raise ValidationError(f"lambda_i must be non-negative, got {lambda_i}")
    if lambda_i == 0:
        return NormResult(value=0.0, regime=Regime.NOT_APPLICABLE, source="mode-hinf", peak_frequency=0.0)
    return _hinf_branch(M, D, lambda_i, source="mode-hinf")


def regime_boundaries(D: float, lambda2: float) -> Tuple[float, float]:
    """
    Inertia values where the phase H-infinity norm stops being flat
    (``D^2 / (2 lambda2)``) and where it turns from convex to concave
    (``D^2 / lambda2``).
    """
    _require_positive(D=D, lambda2=lambda2)
    return D * D / (2.0 * lambda2), D * D / lambda2


def damping_boundary(M: float, lambda2: float) -> float:
    """Damping beyond which the phase H-infinity norm no longer depends on ``D``."""
    _require_positive(M=M, lambda2=lambda2)
    return math.sqrt(2.0 * M * lambda2)


def closed_form_norms(spec: NetworkSpec, output: OutputKind) -> Optional[Tuple[NormResult, NormResult]]:
    """
    Closed-form ``(h2, hinf)`` for ``spec``, or None for the combined output.

    A grounded network's governing eigenvalue is lambda1 and every mode is
    visible, so the published ``n`` count is exact there.
    """
    output = OutputKind(output)
    M, D = spec.inertia, spec.damping
    if output is OutputKind.COMBINED:
        return None
    if output is OutputKind.FREQUENCY:
        return frequency_output_norms(spec.n, M, D)
    if spec.n == 1 and not spec.has_zero_mode:
        return smib_norms(M, D, spec.bus_susceptance)
    spectrum = laplacian_spectrum(spec)
    h2, hinf = phase_output_norms(spec.n, M, D, spectrum.governing_eigenvalue)
    if not spec.has_zero_mode:
        h2 = NormResult(value=h2.value, regime=h2.regime, source=h2.source, annotations={"modal_h2": h2.value})
    return h2, hinf


def vieta_residuals(pair: ModeEigenpair, M: float, D: float) -> Tuple[float, float]:
    """Relative errors of ``s1 + s2 = -D/M`` and ``s1 s2 = lam/M``."""
    s1, s2 = pair.poles
    total = -D / M
    product = pair.eigenvalue / M
    sum_err = abs((s1 + s2) - total) / abs(total)
    prod_err = abs(s1 * s2 - product) / (abs(product) if product else 1.0)
    return float(sum_err), float(prod_err)

