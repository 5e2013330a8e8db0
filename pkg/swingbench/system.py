"""
Linearized swing dynamics in state-space and modal form.

The network state is ``(theta, theta_dot)`` with

    A = [[0, I], [-L/M, -(D/M) I]],   F = [[0], [I/M]],   y = C (theta, theta_dot)

and four output choices.  Diagonalizing ``L = V diag(lambda) V^T`` splits the
system into ``n`` scalar second-order modes ``1 / (M s^2 + D s + lambda_i)``
whose output rows are a phase gain ``sqrt(lambda_i)`` and/or a frequency gain
(1, or kappa for the combined output).  The modal form is the default path for
norms; the dense 2n-state form is kept as an independent cross-check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import NotOrthogonal, ObservableMarginalMode, SingularResolvent, ValidationError
from .network import NetworkSpec, build_incidence, build_laplacian, laplacian_spectrum

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-10


class OutputKind(str, Enum):
    PHASE = "phase"
    EDGE_PHASE = "edge-phase"
    FREQUENCY = "frequency"
    COMBINED = "combined"

    @property
    def observes_phase(self) -> bool:
        return self in (OutputKind.PHASE, OutputKind.EDGE_PHASE, OutputKind.COMBINED)

    @property
    def observes_frequency(self) -> bool:
        return self in (OutputKind.FREQUENCY, OutputKind.COMBINED)


@dataclass(frozen=True)
class SwingStateSpace:
    """
    Dense ``(A, F, C)`` realization.

    ``zero_mode`` holds the right/left null vectors ``(v, w)`` of ``A`` (scaled
    so that ``w @ v == 1``) when the Laplacian has a zero eigenvalue.  If the
    output does not see ``v``, the resolvent is evaluated on ``A - v w^T``,
    which has the same transfer matrix and no eigenvalue at the origin.
    """

    A: np.ndarray
    F: np.ndarray
    C: np.ndarray
    output: OutputKind
    zero_mode: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @property
    def n(self) -> int:
        return self.A.shape[0] // 2

    @property
    def outputs(self) -> int:
        return self.C.shape[0]

    @property
    def inputs(self) -> int:
        return self.F.shape[1]

    @cached_property
    def zero_mode_observable(self) -> bool:
        if self.zero_mode is None:
            return False
        right, _ = self.zero_mode
        scale = max(1.0, float(np.linalg.norm(self.C, 2)))
        return bool(np.linalg.norm(self.C @ right) > 1e-10 * scale)

    @cached_property
    def effective_A(self) -> np.ndarray:
        if self.zero_mode is None or self.zero_mode_observable:
            return self.A
        right, left = self.zero_mode
        return self.A - np.outer(right, left)

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    def transfer(self, omega: float) -> np.ndarray:
        """``C (j omega I - A)^-1 F`` as a complex ``p x m`` matrix."""
        if self.zero_mode_observable and omega == 0.0:
            raise SingularResolvent("Zero mode is observable; the resolvent is singular at omega = 0")
        resolvent = 1j * omega * np.eye(self.A.shape[0]) - self.effective_A
        try:
            X = np.linalg.solve(resolvent, self.F.astype(complex))
        except np.linalg.LinAlgError as e:
            logger.error(f"Resolvent solve failed at omega={omega}: {e}")
            raise SingularResolvent(f"j*omega*I - A is singular at omega={omega}") from e
        G = self.C @ X
        if not np.all(np.isfinite(G)):
            raise SingularResolvent(f"Non-finite frequency response at omega={omega}")
        return G


@dataclass(frozen=True)
class ModalSubsystem:
    """
    One decoupled mode ``G_i(s) = [phase_gain; frequency_gain * s] / (M s^2 + D s + lambda_i)``.

    A missing gain (``None``) means that output row is absent.  ``index`` is
    1-based in ascending eigenvalue order.
    """

    index: int
    eigenvalue: float
    inertia: float
    damping: float
    phase_gain: Optional[float] = None
    frequency_gain: Optional[float] = None

    @property
    def is_marginal(self) -> bool:
        return self.eigenvalue == 0.0

    @property
    def output_rows(self) -> int:
        return int(self.phase_gain is not None) + int(self.frequency_gain is not None)

    @property
    def natural_frequency(self) -> float:
        return math.sqrt(self.eigenvalue / self.inertia)

    @property
    def reference_frequency(self) -> float:
        """Natural frequency, or the corner ``D/M`` of a marginal mode."""
        if self.is_marginal:
            return self.damping / self.inertia
        return self.natural_frequency

    def denominator(self, s: complex) -> complex:
        return self.inertia * s * s + self.damping * s + self.eigenvalue

    def magnitude(self, omega: float | np.ndarray) -> float | np.ndarray:
        """Euclidean norm of ``G_i(j omega)`` (the mode's only singular value)."""
        w = np.abs(np.asarray(omega, dtype=float))
        pg = self.phase_gain or 0.0
        fg = self.frequency_gain or 0.0
        M, D, lam = self.inertia, self.damping, self.eigenvalue
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.is_marginal and pg == 0.0:
                value = abs(fg) / np.sqrt(D * D + (M * w) ** 2)
            else:
                numerator = np.sqrt(pg * pg + (fg * w) ** 2)
                value = numerator / np.sqrt((lam - M * w * w) ** 2 + (D * w) ** 2)
        if np.ndim(value) == 0:
            return float(value)
        return value

    def stationary_frequencies(self) -> List[float]:
        """Closed-form interior critical points of the magnitude, when known."""
        M, D, lam = self.inertia, self.damping, self.eigenvalue
        points: List[float] = []
        if self.is_marginal:
            return points
        if self.phase_gain:
            peak_sq = lam / M - D * D / (2.0 * M * M)
            if peak_sq > 0:
                points.append(math.sqrt(peak_sq))
        if self.frequency_gain:
            points.append(math.sqrt(lam / M))
        return points

    def realization(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Minimal ``(a, b, c)`` of the mode.  A marginal mode keeps only its
        velocity state, which requires its phase gain to vanish.
        """
        M, D, lam = self.inertia, self.damping, self.eigenvalue
        if self.is_marginal:
            if self.phase_gain:
                raise ObservableMarginalMode(
                    f"Mode {self.index} has a zero eigenvalue and phase gain {self.phase_gain}"
                )
            a = np.array([[-D / M]])
            b = np.array([[1.0 / M]])
            rows = []
            if self.phase_gain is not None:
                rows.append([0.0])
            if self.frequency_gain is not None:
                rows.append([self.frequency_gain])
        else:
            a = np.array([[0.0, 1.0], [-lam / M, -D / M]])
            b = np.array([[0.0], [1.0 / M]])
            rows = []
            if self.phase_gain is not None:
                rows.append([self.phase_gain, 0.0])
            if self.frequency_gain is not None:
                rows.append([0.0, self.frequency_gain])
        c = np.array(rows, dtype=float).reshape(len(rows), a.shape[0])
        return a, b, c


def assemble(spec: NetworkSpec, output: OutputKind) -> SwingStateSpace:
    """Dense state-space model of ``spec`` for the chosen output."""
    output = OutputKind(output)
    spectrum = laplacian_spectrum(spec)
    n, M, D = spec.n, spec.inertia, spec.damping
    L = build_laplacian(spec)
    zeros = np.zeros((n, n))
    eye = np.eye(n)

    A = np.block([[zeros, eye], [-L / M, -(D / M) * eye]])
    F = np.vstack([zeros, eye / M])

    if output is OutputKind.PHASE:
        C = np.hstack([spectrum.sqrt_laplacian(), zeros])
    elif output is OutputKind.EDGE_PHASE:
        incidence, weights = build_incidence(spec)
        edge_rows = np.sqrt(weights)[:, None] * incidence.T
        C = np.hstack([edge_rows, np.zeros((edge_rows.shape[0], n))])
    elif output is OutputKind.FREQUENCY:
        C = np.hstack([zeros, eye])
    else:
        C = np.block([[spectrum.sqrt_laplacian(), zeros], [zeros, spec.kappa * eye]])

    zero_mode = None
    if spec.has_zero_mode:
        right = np.concatenate([np.full(n, 1.0 / math.sqrt(n)), np.zeros(n)])
        left = np.concatenate([np.full(n, D / M), np.ones(n)])
        left = left / float(left @ right)
        zero_mode = (right, left)
    return SwingStateSpace(A=A, F=F, C=C, output=output, zero_mode=zero_mode)


def modal_decompose(spec: NetworkSpec, output: OutputKind) -> List[ModalSubsystem]:
    """The ``n`` decoupled modes of ``spec`` in ascending eigenvalue order."""
    output = OutputKind(output)
    spectrum = laplacian_spectrum(spec)
    if output is OutputKind.FREQUENCY:
        frequency_gain: Optional[float] = 1.0
    elif output is OutputKind.COMBINED:
        frequency_gain = spec.kappa
    else:
        frequency_gain = None

    modes = []
    for idx, lam in enumerate(spectrum.eigenvalues, start=1):
        lam = float(lam)
        modes.append(
            ModalSubsystem(
                index=idx,
                eigenvalue=lam,
                inertia=spec.inertia,
                damping=spec.damping,
                phase_gain=math.sqrt(lam) if output.observes_phase else None,
                frequency_gain=frequency_gain,
            )
        )
    return modes


def sigma_max(system: SwingStateSpace, omega: float) -> float:
    """Largest singular value of the dense frequency response at ``omega``."""
    if not math.isfinite(omega):
        raise ValidationError(f"omega must be finite, got {omega}")
    G = system.transfer(abs(float(omega)))
    return float(np.linalg.norm(G, 2))


def modal_sigma_max(modes: Sequence[ModalSubsystem], omega: float) -> float:
    """Largest singular value via the modal form: the largest mode magnitude."""
    return float(max(mode.magnitude(omega) for mode in modes))


def transform_io(system: SwingStateSpace, V: np.ndarray) -> SwingStateSpace:
    """Apply ``y -> V y`` and ``w -> V w`` (``C <- V C``, ``F <- F V^T``)."""
    V = np.asarray(V, dtype=float)
    p, m = system.outputs, system.inputs
    if V.shape != (p, p) or p != m:
        raise ValidationError(
            f"Transform must be square and match a square system: V is {V.shape}, system is {p}x{m}"
        )
    if not np.allclose(V.T @ V, np.eye(p), rtol=0.0, atol=ORTHOGONALITY_TOL):
        raise NotOrthogonal("Transform is not orthogonal within tolerance")
    return replace(system, C=V @ system.C, F=system.F @ V.T)
