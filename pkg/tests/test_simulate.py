from __future__ import annotations

import math

import numpy as np
import pytest

from swingbench.exceptions import HorizonTooShort, ValidationError
from swingbench.network import NetworkSpec, edges_from_pairs
from swingbench.oracles import h2_gramian
from swingbench.simulate import (
    Impulse,
    Sinusoid,
    Step,
    WhiteNoise,
    simulate,
    sinusoid_gain,
    worst_input_direction,
)
from swingbench.system import OutputKind, assemble


def k3(inertia: float = 1.0, damping: float = 1.0) -> NetworkSpec:
    return NetworkSpec(n=3, edges=edges_from_pairs([(0, 1), (0, 2), (1, 2)]), inertia=inertia, damping=damping)


K3_PHASE_HINF = 2.0 * math.sqrt(3.0) / math.sqrt(11.0)


def test_step_settles_at_dc_gain():
    spec = NetworkSpec.smib(1.0, 1.0, 2.0)
    trajectory = simulate(spec, OutputKind.PHASE, Step(amplitude=1.0), dt=0.01, horizon=40.0)
    # sqrt(B) * theta_ss with theta_ss = 1 / B
    assert trajectory.outputs[-1, 0] == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-6)
    assert trajectory.times[0] == 0.0
    assert trajectory.outputs[0, 0] == 0.0


def test_impulse_energy_matches_h2():
    spec = k3()
    total = 0.0
    for channel in range(spec.n):
        trajectory = simulate(spec, OutputKind.FREQUENCY, Impulse(channel=channel), dt=0.005, horizon=40.0)
        total += trajectory.energy()
    assert total == pytest.approx(h2_gramian(spec, OutputKind.FREQUENCY).h2 ** 2, rel=1e-3)


def test_sinusoid_gain_reaches_hinf():
    gain = sinusoid_gain(k3(), OutputKind.PHASE, math.sqrt(2.5))
    assert 0.95 * K3_PHASE_HINF <= gain <= K3_PHASE_HINF * (1 + 1e-3)


def test_sinusoid_gain_at_dc_uses_step():
    gain = sinusoid_gain(NetworkSpec.smib(1.0, 1.0, 1.0), OutputKind.PHASE, 0.0)
    assert gain == pytest.approx(1.0, rel=1e-3)


def test_lightly_damped_resonance_needs_longer_horizon():
    spec = NetworkSpec.smib(10.0, 0.1, 1.0)
    with pytest.raises(HorizonTooShort):
        sinusoid_gain(spec, OutputKind.PHASE, math.sqrt(0.1), horizon=200.0)


def test_coarse_step_is_rejected():
    with pytest.raises(ValidationError, match="too coarse"):
        simulate(k3(), OutputKind.PHASE, Impulse(), dt=0.5, horizon=10.0)
    with pytest.raises(ValidationError):
        simulate(k3(), OutputKind.PHASE, Impulse(), dt=0.01, horizon=0.001)


def test_direction_must_match_network_size():
    with pytest.raises(ValidationError):
        simulate(k3(), OutputKind.PHASE, Step(direction=(1.0, 0.0)), dt=0.01, horizon=1.0)
    with pytest.raises(ValidationError):
        simulate(k3(), OutputKind.PHASE, Sinusoid(omega=1.0, channel=5), dt=0.01, horizon=1.0)


def test_worst_direction_is_a_real_unit_vector_orthogonal_to_consensus():
    direction = worst_input_direction(assemble(k3(), OutputKind.PHASE), math.sqrt(2.5))
    assert np.linalg.norm(direction) == pytest.approx(1.0)
    assert abs(direction.sum()) < 1e-9


def test_white_noise_is_seeded():
    spec = k3()
    first = simulate(spec, OutputKind.FREQUENCY, WhiteNoise(seed=4), dt=0.01, horizon=5.0)
    second = simulate(spec, OutputKind.FREQUENCY, WhiteNoise(seed=4), dt=0.01, horizon=5.0)
    other = simulate(spec, OutputKind.FREQUENCY, WhiteNoise(seed=5), dt=0.01, horizon=5.0)
    np.testing.assert_array_equal(first.outputs, second.outputs)
    assert not np.array_equal(first.outputs, other.outputs)


def test_trajectory_rows():
    trajectory = simulate(k3(), OutputKind.PHASE, Impulse(), dt=0.01, horizon=0.05)
    rows = list(trajectory.rows())
    assert len(rows) == 6
    assert len(rows[0]) == 4


@pytest.mark.parametrize(
    "disturbance",
    [Step(amplitude=0.0), Sinusoid(omega=1.0, amplitude=0.0), WhiteNoise(seed=5, sigma=0.0)],
    ids=["step", "sinusoid", "noise"],
)
def test_zero_disturbance_gives_zero_output(disturbance):
    trajectory = simulate(k3(), OutputKind.FREQUENCY, disturbance, dt=0.01, horizon=5.0)
    assert trajectory.outputs.shape == (501, 3)
    assert np.count_nonzero(trajectory.outputs) == 0
