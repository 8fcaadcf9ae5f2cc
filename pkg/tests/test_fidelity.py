import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_state, random_unitary
from frqme.errors import NumericalDomain, ParamOutOfRange
from frqme.fidelity import (
    beta,
    decay_exponent,
    decay_factor,
    decay_factor_reduced,
    hadamard_fidelity_closed_form,
    hadamard_infidelity_closed_form,
    uhlmann_fidelity,
)
from frqme.optimizer import omega1_opt
from frqme.states import SIGMA_X, DensityMatrix, SystemParams

INF = math.inf
seeds = st.integers(0, 2**32 - 1)


def sqrtm_fidelity(rho, sigma):
    """Textbook definition through matrix square roots."""
    r = scipy.linalg.sqrtm(rho.matrix)
    return float(np.trace(scipy.linalg.sqrtm(r @ sigma.matrix @ r)).real ** 2)


def x_state(p):
    return DensityMatrix(0.5 * (np.eye(2) + p * SIGMA_X))


def test_self_fidelity(rng):
    for _ in range(100):
        rho = random_state(rng)
        assert uhlmann_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_states():
    assert uhlmann_fidelity(DensityMatrix(np.diag([1, 0])), DensityMatrix(np.diag([0, 1]))) == 0.0


def test_matches_sqrtm_definition(rng):
    for _ in range(100):
        rho, sigma = random_state(rng), random_state(rng)
        assert uhlmann_fidelity(rho, sigma) == pytest.approx(sqrtm_fidelity(rho, sigma), abs=1e-10)


def test_equals_closed_form_on_hadamard_pair(rng):
    for m, a in rng.uniform(size=(100, 2)):
        f = uhlmann_fidelity(x_state(m), x_state(m * a))
        assert f == pytest.approx(hadamard_fidelity_closed_form(m, a), abs=1e-12)


@given(seeds)
def test_symmetry_and_range(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_state(rng, pure=bool(seed % 2)), random_state(rng)
    f = uhlmann_fidelity(rho, sigma)
    assert abs(f - uhlmann_fidelity(sigma, rho)) <= 1e-14
    assert 0 <= f <= 1 + 1e-12


@given(seeds)
def test_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    rho, sigma, u = random_state(rng), random_state(rng), random_unitary(rng)
    rot = lambda s: DensityMatrix(u @ s.matrix @ u.conj().T)  # noqa: E731
    assert uhlmann_fidelity(rot(rho), rot(sigma)) == pytest.approx(uhlmann_fidelity(rho, sigma), abs=1e-12)


def test_invalid_state_raises():
    bad = DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(NumericalDomain):
        uhlmann_fidelity(bad, DensityMatrix(np.eye(2) / 2))


def test_closed_form_trivial_cases():
    for a in (0.01, 0.5, 1.0):
        assert hadamard_fidelity_closed_form(0.0, a) == 1.0
    for m in (0.0, 0.3, 1.0):
        assert hadamard_fidelity_closed_form(m, 1.0) == pytest.approx(1.0, abs=1e-15)
        assert hadamard_infidelity_closed_form(m, 1.0) == 0.0


@pytest.mark.parametrize("m, a", [(-0.1, 0.5), (1.1, 0.5), (0.5, 0.0), (0.5, 1.1)])
def test_closed_form_domain(m, a):
    with pytest.raises(ParamOutOfRange):
        hadamard_fidelity_closed_form(m, a)


def test_infidelity_matches_direct_form(rng):
    for m, a in rng.uniform(size=(200, 2)):
        direct = 1 - hadamard_fidelity_closed_form(m, a)
        assert hadamard_infidelity_closed_form(m, a) == pytest.approx(direct, abs=1e-15)


def test_closed_form_increasing_in_a():
    a = np.linspace(0.001, 0.999, 999)
    for m in (0.01, 0.1, 0.5, 0.9):
        f = [hadamard_fidelity_closed_form(m, x) for x in a]
        assert np.all(np.diff(f) > 0)


def test_decay_factor_examples():
    assert decay_factor(10.0, SystemParams(INF, INF, 0.1, 0.0)) == 1.0
    sys = SystemParams(1.0, 0.5, 0.1, 1e-6)
    b = beta(sys)
    assert decay_factor(omega1_opt(sys), sys) == pytest.approx(math.exp(-2 * b), rel=1e-14)


def test_two_forms_of_decay_factor_agree(rng):
    for _ in range(100):
        T1, T2 = 10 ** rng.uniform(-6, 0, size=2)
        tau = 10 ** rng.uniform(-12, -3)
        sys = SystemParams(T1, T2, 0.1, tau)
        w = omega1_opt(sys) * 10 ** rng.uniform(-2, 2)
        x = w / omega1_opt(sys)
        assert abs(decay_factor_reduced(x, beta(sys)) - decay_factor(w, sys)) <= 1e-14
        assert beta(sys) * (x + 1 / x) == pytest.approx(decay_exponent(w, sys), rel=1e-14)


def test_decay_factor_unimodal():
    sys = SystemParams(1e-3, 5e-4, 0.1, 1e-9)
    grid = omega1_opt(sys) * np.logspace(-3, 3, 601)
    a = np.array([decay_factor(w, sys) for w in grid])
    k = int(np.argmax(a))
    assert k == 300
    assert np.all(np.diff(a[: k + 1]) > 0) and np.all(np.diff(a[k:]) < 0)


def test_decay_factor_with_other_gate_durations():
    sys = SystemParams(1.0, 1.0, 0.1, 1e-4)
    w = 50.0
    assert decay_exponent(w, sys, flip_angle=4 * math.pi) == pytest.approx(
        (sys.r_eff + w**2 * sys.tau_c) * 4 * math.pi / w, rel=1e-15
    )
    with pytest.raises(ParamOutOfRange):
        decay_factor(0.0, sys)
