import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state, taylor_expm
from frqme.errors import ConvergenceFailure, ExpmFailure, ParamOutOfRange
from frqme.liouvillian import FRQME, DriveParams, build_gamma
from frqme.propagator import (
    ShapedPulse,
    StepControl,
    conservation_monitor,
    expm,
    propagate_segment,
    propagate_sequence,
    propagate_shaped,
    propagate_shaped_checked,
)
from frqme.states import SIGMA_Z, DensityMatrix, PulseSegment, PulseSequence, SystemParams, pseudopure_state

INF = math.inf
IDEAL = SystemParams.ideal(0.1)
LOSSY = SystemParams(T1=0.8, T2=0.3, m=0.1, tau_c=2e-3)


@st.composite
def generators(draw):
    drive = DriveParams(draw(st.floats(0, 20)), draw(st.floats(0, 2 * math.pi)))
    sys = SystemParams(draw(st.floats(0.05, 50)), draw(st.floats(0.05, 50)), draw(st.floats(0, 1)), draw(st.floats(0, 1e-2)))
    return build_gamma(drive, sys)


def test_expm_trivial_cases():
    np.testing.assert_array_equal(expm(np.zeros((4, 4)), 3.0), np.eye(4))
    d = np.diag([-1.0, -0.5j, 0.5j, 0.2])
    np.testing.assert_allclose(expm(d, 2.0), np.diag(np.exp(2 * np.diag(d))), rtol=1e-14)


@settings(max_examples=50)
@given(generators(), st.floats(0, 2))
def test_expm_matches_series_oracle(gamma, t):
    ref = taylor_expm(gamma * t)
    np.testing.assert_allclose(expm(gamma, t), ref, rtol=0, atol=1e-12 * max(1, np.abs(ref).max()))


def test_expm_errors():
    with pytest.raises(ParamOutOfRange):
        expm(np.eye(4), -1.0)
    with pytest.raises(ExpmFailure):
        expm(np.full((4, 4), np.nan), 1.0)
    with pytest.raises(ExpmFailure):
        expm(np.eye(4) * 1e3, 1.0)


def test_zero_duration_is_identity(rng):
    rho = random_state(rng)
    assert propagate_segment(rho, PulseSegment(5.0, 0.3, 0.0), LOSSY) is rho


@pytest.mark.parametrize("m", [0.0, 0.1, 0.7])
def test_relaxes_to_equilibrium(m):
    sys = SystemParams(T1=0.5, T2=0.2, m=m, tau_c=1e-3)
    start = DensityMatrix.from_bloch(0.3, -0.4, -0.8)
    rho = propagate_segment(start, PulseSegment(0.0, 0.0, 20 * sys.T1), sys)
    np.testing.assert_allclose(rho.matrix, np.diag([(1 + m) / 2, (1 - m) / 2]), atol=1e-9)


def test_pi_pulse_inverts_polarization():
    w = 2 * math.pi * 1e3
    rho = propagate_segment(pseudopure_state(0.1), PulseSegment(w, 0.0, math.pi / w), IDEAL)
    assert abs(rho.expect(SIGMA_Z) + 0.1) <= 1e-12


def test_sequence_basics(rng):
    rho = random_state(rng)
    assert propagate_sequence(rho, PulseSequence(), LOSSY) is rho
    seg = PulseSegment(3.0, 0.4, 0.7)
    assert propagate_sequence(rho, PulseSequence([seg]), LOSSY).allclose(propagate_segment(rho, seg, LOSSY), atol=0)


@pytest.mark.parametrize("sys", [IDEAL, LOSSY])
def test_split_pi_pulse(sys, rng):
    w = 40.0
    rho = random_state(rng)
    whole = propagate_segment(rho, PulseSegment(w, 0.0, math.pi / w), sys)
    halves = propagate_sequence(rho, PulseSequence([PulseSegment(w, 0.0, math.pi / (2 * w))] * 2), sys)
    assert whole.allclose(halves, atol=1e-12)


@settings(max_examples=30)
@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_semigroup(t1, t2, seed):
    rho = random_state(np.random.default_rng(seed))
    a = propagate_segment(rho, PulseSegment(7.0, 1.1, t1 + t2), LOSSY)
    b = propagate_segment(propagate_segment(rho, PulseSegment(7.0, 1.1, t1), LOSSY), PulseSegment(7.0, 1.1, t2), LOSSY)
    assert a.allclose(b, atol=1e-12)


@settings(max_examples=50)
@given(
    st.floats(0, 50), st.floats(0, 2 * math.pi), st.floats(0, 3), st.floats(0.05, 10), st.floats(0.05, 10),
    st.floats(0, 1), st.floats(0, 1e-2), st.integers(0, 2**32 - 1),
)
def test_trace_and_hermiticity_conserved(w, phi, t, T1, T2, m, tau, seed):
    rho = random_state(np.random.default_rng(seed))
    with conservation_monitor() as mon:
        out = propagate_segment(rho, PulseSegment(w, phi, t), SystemParams(T1, T2, m, tau))
    assert mon.max_trace_error <= 1e-12
    assert mon.max_hermiticity_drift <= 1e-12
    assert abs(out.trace - 1) <= 1e-12


@settings(max_examples=30)
@given(st.floats(0, 50), st.floats(0, 2 * math.pi), st.floats(0, 3), st.integers(0, 2**32 - 1))
def test_ideal_limit_preserves_purity(w, phi, t, seed):
    rho = random_state(np.random.default_rng(seed))
    out = propagate_segment(rho, PulseSegment(w, phi, t), IDEAL)
    assert abs(out.purity() - rho.purity()) <= 1e-12


def test_purity_non_increasing_towards_equilibrium():
    sys = SystemParams(T1=1.0, T2=0.4, m=0.3, tau_c=1e-3)
    # diagonal starts commute with the undriven fixed point
    for z0 in (0.3, 0.6, 1.0):
        rho = DensityMatrix.from_bloch(0, 0, z0)
        purities = [rho.purity()]
        for _ in range(200):
            rho = propagate_segment(rho, PulseSegment(0.0, 0.0, 0.05), sys)
            purities.append(rho.purity())
        assert np.all(np.diff(purities) <= 1e-15)


def test_shaped_constant_envelope_matches_square_pulse():
    w, T = 30.0, 0.2
    rho0 = pseudopure_state(0.1)
    exact = propagate_segment(rho0, PulseSegment(w, 0.5, T), LOSSY)
    errs = []
    for dt in (T / 10, T / 20):
        out = propagate_shaped(rho0, ShapedPulse(lambda t: w, lambda t: 0.5, T), LOSSY, FRQME, StepControl(dt))
        errs.append(np.max(np.abs(out.matrix - exact.matrix)))
    # constant generator: every step commutes, so only rounding remains
    assert max(errs) <= 1e-13


def test_shaped_zero_amplitude_is_identity(rng):
    rho = random_state(rng)
    out = propagate_shaped(rho, ShapedPulse(0.0, 0.0, 1.0), IDEAL, FRQME, StepControl(0.01))
    assert out.allclose(rho, atol=1e-15)


def test_linear_ramp_area_theorem():
    T = 1e-3
    peak = 2 * math.pi / T  # area of a 0 -> peak ramp is peak*T/2 = pi
    rho0 = pseudopure_state(0.1)
    ramp = ShapedPulse(lambda t: peak * t / T, 0.0, T)
    out = propagate_shaped(rho0, ramp, IDEAL, FRQME, StepControl(T / 50))
    square = propagate_segment(rho0, PulseSegment(peak / 2, 0.0, T), IDEAL)
    assert out.allclose(square, atol=1e-6)


def chirped_pulse(T=1.0):
    return ShapedPulse(
        lambda t: 12.0 * math.exp(-((t - T / 2) ** 2) / (2 * (T / 5) ** 2)),
        lambda t: 3.0 * t / T,
        T,
    )


def test_shaped_second_order_convergence():
    pulse = chirped_pulse()
    rho0 = pseudopure_state(0.4)
    ref = propagate_shaped(rho0, pulse, LOSSY, FRQME, StepControl(pulse.duration / 2560))
    errs = [
        np.max(np.abs(propagate_shaped(rho0, pulse, LOSSY, FRQME, StepControl(pulse.duration / n)).matrix - ref.matrix))
        for n in (20, 40, 80)
    ]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.25)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.25)


def test_richardson_check():
    pulse = chirped_pulse()
    rho0 = pseudopure_state(0.4)
    with pytest.raises(ConvergenceFailure):
        propagate_shaped(rho0, pulse, LOSSY, FRQME, StepControl(pulse.duration / 10, richardson_check=True))
    out, diff = propagate_shaped_checked(rho0, pulse, LOSSY, FRQME, StepControl(pulse.duration / 4000, True))
    assert diff is not None and diff <= 1e-6
    _, none = propagate_shaped_checked(rho0, pulse, LOSSY, FRQME, StepControl(pulse.duration / 20))
    assert none is None


def test_step_control_limits():
    pulse = chirped_pulse()
    with pytest.raises(ParamOutOfRange):
        propagate_shaped(pseudopure_state(0.1), pulse, LOSSY, FRQME, StepControl(pulse.duration / 5))
    with pytest.raises(ParamOutOfRange):
        propagate_shaped(pseudopure_state(0.1), pulse, LOSSY, FRQME, StepControl(0.0))


def test_sampled_envelope_interpolates():
    pulse = ShapedPulse.from_samples([0.0, 1.0, 2.0], [0.0, 10.0, 0.0], [0.0, 1.0, 2.0])
    assert pulse.duration == 2.0
    d = pulse.drive_at(0.5)
    assert (d.omega1, d.phi) == (5.0, 0.5)
    assert ShapedPulse.from_samples([0, 1], [1, 1], 0.3).drive_at(0.2).phi == 0.3
    with pytest.raises(ParamOutOfRange):
        ShapedPulse.from_samples([0.0, 1.0, 0.5], [1, 1, 1])
    with pytest.raises(ParamOutOfRange):
        ShapedPulse.from_samples([0.1, 1.0], [1, 1])
    with pytest.raises(ParamOutOfRange):
        ShapedPulse.from_samples([0.0, 1.0], [1, -1])
