"""State fidelity and the closed-form Hadamard fidelity under DiD and relaxation."""
from __future__ import annotations

import math

import numpy as np

from .errors import NumericalDomain, ParamOutOfRange
from .liouvillian import FRQME, DidModel
from .states import POSITIVITY_TOL, DensityMatrix, SystemParams

HADAMARD_FLIP = 1.5 * math.pi


def _det(rho: np.ndarray) -> float:
    return float((rho[0, 0] * rho[1, 1] - rho[0, 1] * rho[1, 0]).real)


def uhlmann_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2`` of two qubit states.

    Uses the qubit identity ``F = Tr(rho sigma) + 2 sqrt(det(rho) det(sigma))``,
    which avoids matrix square roots. Determinants within ``-1e-9`` of zero are
    clipped to zero; anything more negative raises :class:`NumericalDomain`.
    """
    a, b = rho.matrix, sigma.matrix
    det_a, det_b = _det(a), _det(b)
    if det_a < -POSITIVITY_TOL or det_b < -POSITIVITY_TOL:
        raise NumericalDomain(f"negative determinant ({det_a:.3e}, {det_b:.3e}); not a valid state")
    overlap = float(np.sum(a * b.T).real)
    return overlap + 2.0 * math.sqrt(max(det_a, 0.0) * max(det_b, 0.0))


def _check_m_a(m: float, a: float) -> None:
    if not 0.0 <= m <= 1.0:
        raise ParamOutOfRange(f"m must lie in [0, 1], got {m!r}")
    if not 0.0 < a <= 1.0:
        raise ParamOutOfRange(f"a must lie in (0, 1], got {a!r}")


def hadamard_fidelity_closed_form(m: float, a: float) -> float:
    """``F = [(1 + m^2 a) + sqrt((1 - m^2)(1 - m^2 a^2))] / 2``."""
    _check_m_a(m, a)
    m2 = m * m
    return 0.5 * ((1 + m2 * a) + math.sqrt((1 - m2) * (1 - m2 * a * a)))


def hadamard_infidelity_closed_form(m: float, a: float, one_minus_a: float | None = None) -> float:
    """``1 - F`` for the closed form, without cancellation.

    Rationalizing gives ``1 - F = m^2 (1 - a)^2 / (2 (1 - m^2 a + s))`` with
    ``s = sqrt((1 - m^2)(1 - m^2 a^2))``. Pass ``one_minus_a`` when it is known
    more accurately than ``1 - a``.
    """
    _check_m_a(m, a)
    if one_minus_a is None:
        one_minus_a = 1.0 - a
    if one_minus_a == 0:
        return 0.0
    m2 = m * m
    s = math.sqrt((1 - m2) * (1 - m2 * a * a))
    return m2 * one_minus_a**2 / (2.0 * (1 - m2 * a + s))


def decay_exponent(omega1: float, sys: SystemParams, did: DidModel = FRQME, flip_angle: float = HADAMARD_FLIP) -> float:
    """``(flip_angle / omega1) * (R_eff + omega1**2 * tau_d)``; ``a = exp(-exponent)``."""
    if not omega1 > 0:
        raise ParamOutOfRange(f"omega1 must be > 0, got {omega1!r}")
    tau_d = did.timescale(sys)
    return flip_angle * (sys.r_eff / omega1 + omega1 * tau_d)


def decay_factor(omega1: float, sys: SystemParams, did: DidModel = FRQME, flip_angle: float = HADAMARD_FLIP) -> float:
    """Fraction of the ideal output polarization that survives the gate.

    The default flip angle ``3 pi / 2`` is the Hadamard's, giving
    ``a = exp(-(3 pi / 2)(R_eff / omega1 + omega1 tau_c))``. Other gates use
    their own total flip angle at the same per-unit-time decay rate.
    """
    return math.exp(-decay_exponent(omega1, sys, did, flip_angle))


def beta(sys: SystemParams, did: DidModel = FRQME) -> float:
    """Dimensionless dissipation strength ``(3 pi / 2) sqrt(tau_d R_eff)``."""
    return HADAMARD_FLIP * math.sqrt(did.timescale(sys) * sys.r_eff)


def decay_factor_reduced(x: float, beta_value: float) -> float:
    """``a = exp(-beta (x + 1/x))`` with ``x = omega1 / omega1_opt``."""
    if not x > 0:
        raise ParamOutOfRange(f"x must be > 0, got {x!r}")
    if not beta_value >= 0:
        raise ParamOutOfRange(f"beta must be >= 0, got {beta_value!r}")
    return math.exp(-beta_value * (x + 1.0 / x))
