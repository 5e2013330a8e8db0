"""
Time-domain simulation of the linear swing network.

Every mode is propagated with its exact matrix exponential.  Deterministic
disturbances are generated by an exosystem appended to the mode state (a
constant for steps, a rotation for sinusoids), so sampled trajectories carry no
integration error; white noise is held constant over each sample (ZOH).
Results are mapped back to node coordinates and through the dense output
matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm

from .closed_form import mode_poles
from .exceptions import HorizonTooShort, ValidationError
from .network import NetworkSpec, laplacian_spectrum
from .system import OutputKind, SwingStateSpace, assemble, modal_decompose

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Impulse:
    channel: int = 0
    direction: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class Step:
    channel: int = 0
    amplitude: float = 1.0
    direction: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class Sinusoid:
    omega: float
    channel: int = 0
    amplitude: float = 1.0
    direction: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class WhiteNoise:
    """Independent noise on every bus; sample variance ``sigma^2 / dt``."""

    seed: int = 0
    sigma: float = 1.0


Disturbance = Union[Impulse, Step, Sinusoid, WhiteNoise]


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    outputs: np.ndarray

    def output_norms(self) -> np.ndarray:
        return np.linalg.norm(self.outputs, axis=1)

    def energy(self) -> float:
        """Trapezoid estimate of the integral of ``||y(t)||^2``."""
        power = np.sum(self.outputs * self.outputs, axis=1)
        dt = np.diff(self.times)
        return float(np.sum(0.5 * (power[1:] + power[:-1]) * dt))

    def rows(self) -> Iterator[Tuple[float, ...]]:
        for t, y in zip(self.times, self.outputs):
            yield (float(t), *(float(v) for v in y))


def _input_vector(disturbance: Disturbance, n: int) -> np.ndarray:
    direction = getattr(disturbance, "direction", None)
    if direction is not None:
        vec = np.asarray(direction, dtype=float)
        if vec.shape != (n,):
            raise ValidationError(f"Disturbance direction must have {n} entries, got {vec.shape}")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ValidationError("Disturbance direction must be non-zero")
        return vec / norm
    channel = disturbance.channel
    if not 0 <= channel < n:
        raise ValidationError(f"Input channel {channel} outside [0, {n})")
    vec = np.zeros(n)
    vec[channel] = 1.0
    return vec


def _fastest_pole(spec: NetworkSpec) -> float:
    lam_max = laplacian_spectrum(spec).lambda_max
    return max(abs(p) for p in mode_poles(spec.inertia, spec.damping, lam_max))


def simulate(
    spec: NetworkSpec,
    output: OutputKind,
    disturbance: Disturbance,
    dt: float,
    horizon: float,
) -> Trajectory:
    """Output trajectory from a zero initial state under ``disturbance``."""
    if not (dt > 0 and horizon > dt):
        raise ValidationError(f"Need 0 < dt < horizon, got dt={dt}, horizon={horizon}")
    fastest = _fastest_pole(spec)
    if dt * fastest >= 0.1:
        raise ValidationError(f"dt={dt:.3e} is too coarse for the fastest pole {fastest:.3e}")

    spectrum = laplacian_spectrum(spec)
    system = assemble(spec, output)
    n, M, D = spec.n, spec.inertia, spec.damping
    V = spectrum.basis
    steps = int(round(horizon / dt))
    times = np.arange(steps + 1) * dt

    blocks = np.zeros((n, 2, 2))
    blocks[:, 0, 1] = 1.0
    blocks[:, 1, 0] = -spectrum.eigenvalues / M
    blocks[:, 1, 1] = -D / M
    gain = 1.0 / M

    if isinstance(disturbance, WhiteNoise):
        modal_states = _simulate_noise(blocks, gain, V, disturbance, dt, steps)
    else:
        modal_input = V.T @ _input_vector(disturbance, n)
        augmented, initial = _exosystem(blocks, gain, modal_input, disturbance)
        step = expm(augmented * dt)
        state = initial
        modal_states = np.empty((steps + 1, n, 2))
        modal_states[0] = state[:, :2]
        for k in range(1, steps + 1):
            state = np.einsum("nij,nj->ni", step, state)
            modal_states[k] = state[:, :2]

    theta = modal_states[:, :, 0] @ V.T
    theta_dot = modal_states[:, :, 1] @ V.T
    outputs = np.hstack([theta, theta_dot]) @ system.C.T
    return Trajectory(times=times, outputs=outputs)


def _exosystem(
    blocks: np.ndarray,
    gain: float,
    modal_input: np.ndarray,
    disturbance: Disturbance,
) -> Tuple[np.ndarray, np.ndarray]:
    n = blocks.shape[0]
    if isinstance(disturbance, Impulse):
        initial = np.zeros((n, 2))
        initial[:, 1] = gain * modal_input
        return blocks, initial
    if isinstance(disturbance, Step):
        augmented = np.zeros((n, 3, 3))
        augmented[:, :2, :2] = blocks
        augmented[:, 1, 2] = gain * disturbance.amplitude * modal_input
        initial = np.zeros((n, 3))
        initial[:, 2] = 1.0
        return augmented, initial
    if isinstance(disturbance, Sinusoid):
        # Exosystem e = (sin wt, cos wt) drives the velocity equation through e[0].
        w = disturbance.omega
        augmented = np.zeros((n, 4, 4))
        augmented[:, :2, :2] = blocks
        augmented[:, 1, 2] = gain * disturbance.amplitude * modal_input
        augmented[:, 2, 3] = w
        augmented[:, 3, 2] = -w
        initial = np.zeros((n, 4))
        initial[:, 3] = 1.0
        return augmented, initial
    raise ValidationError(f"Unsupported disturbance {disturbance!r}")


def _simulate_noise(
    blocks: np.ndarray,
    gain: float,
    V: np.ndarray,
    disturbance: WhiteNoise,
    dt: float,
    steps: int,
) -> np.ndarray:
    n = blocks.shape[0]
    augmented = np.zeros((n, 3, 3))
    augmented[:, :2, :2] = blocks
    augmented[:, 1, 2] = gain
    discrete = expm(augmented * dt)
    phi, gamma = discrete[:, :2, :2], discrete[:, :2, 2]

    rng = np.random.default_rng(disturbance.seed)
    noise = rng.normal(0.0, disturbance.sigma / math.sqrt(dt), size=(steps, n)) @ V
    states = np.zeros((steps + 1, n, 2))
    for k in range(steps):
        states[k + 1] = np.einsum("nij,nj->ni", phi, states[k]) + gamma * noise[k][:, None]
    return states


# ------------------------------------------------------------ H-inf checks
def worst_input_direction(system: SwingStateSpace, omega: float) -> np.ndarray:
    """Real unit input direction along the top right-singular vector of ``G(j omega)``."""
    G = system.transfer(omega)
    _, _, vh = np.linalg.svd(G)
    vec = vh[0].conj()
    pivot = int(np.argmax(np.abs(vec)))
    vec = vec * np.exp(-1j * np.angle(vec[pivot]))
    direction = vec.real
    return direction / np.linalg.norm(direction)


def _slowest_visible_decay(spec: NetworkSpec, output: OutputKind) -> float:
    rates = []
    for mode in modal_decompose(spec, output):
        if not (mode.phase_gain or mode.frequency_gain):
            continue
        for pole in mode_poles(mode.inertia, mode.damping, mode.eigenvalue):
            if abs(pole) > 0:
                rates.append(abs(pole.real))
    return min(rates)


def sinusoid_gain(
    spec: NetworkSpec,
    output: OutputKind,
    omega: float,
    *,
    direction: Optional[Sequence[float]] = None,
    amplitude: float = 1.0,
    dt: Optional[float] = None,
    horizon: Optional[float] = None,
    drift_tol: float = 0.01,
) -> float:
    """
    Steady-state output amplitude over input amplitude for a sinusoid at
    ``omega`` (a step when ``omega`` is 0), measured on the last quarter of the
    run.  By default the input enters along the worst direction.
    """
    system = assemble(spec, output)
    if direction is None:
        direction = worst_input_direction(system, omega)
    direction = tuple(float(v) for v in direction)

    decay = _slowest_visible_decay(spec, output)
    fastest = _fastest_pole(spec)
    period = 2.0 * math.pi / omega if omega > 0 else None
    if horizon is None:
        horizon = 16.0 / decay
        if period is not None:
            horizon = max(horizon, 16.0 * period)
    if dt is None:
        dt = 0.05 / fastest
        if period is not None:
            dt = min(dt, period / 400.0)

    if omega > 0:
        disturbance: Disturbance = Sinusoid(omega=omega, amplitude=amplitude, direction=direction)
    else:
        disturbance = Step(amplitude=amplitude, direction=direction)
    trajectory = simulate(spec, output, disturbance, dt, horizon)

    norms = trajectory.output_norms()
    quarter = norms[-max(len(norms) // 4, 2):]
    half = len(quarter) // 2
    early, late = float(np.max(quarter[:half])), float(np.max(quarter[half:]))
    if abs(late - early) > drift_tol * max(late, early, np.finfo(float).tiny):
        raise HorizonTooShort(
            f"Output amplitude still drifting over the last quarter ({early:.6e} -> {late:.6e})"
        )
    return late / amplitude
