"""Fidelity-maximizing drive amplitude, the fidelity contour grid and the multi-qubit bound."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketFailure, ParamOutOfRange
from .fidelity import beta as beta_of
from .fidelity import decay_exponent, hadamard_infidelity_closed_form, uhlmann_fidelity
from .gates import GateSpec, apply_ideal, hadamard_dissipative
from .liouvillian import FRQME, DidModel
from .states import SystemParams, pseudopure_state

INV_PHI = (math.sqrt(5) - 1) / 2
BRACKET_DECADES = 3.0
LOG_TOL = 1e-10

METHODS = ("closed_form", "full_simulation")


def golden_section_min(f: Callable[[float], float], a: float, b: float, tol: float = LOG_TOL) -> float:
    """Minimizer of a unimodal ``f`` on ``[a, b]`` by golden-section search."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def omega1_opt(sys: SystemParams, did: DidModel = FRQME) -> float:
    """Drive amplitude ``sqrt(R_eff / tau_d)`` maximizing the closed-form fidelity."""
    tau_d = did.timescale(sys)
    if tau_d <= 0:
        raise ParamOutOfRange("no finite optimum without drive-induced decoherence (tau_c = 0)")
    if sys.r_eff <= 0:
        raise ParamOutOfRange("no finite optimum without relaxation (R_eff = 0)")
    return math.sqrt(sys.r_eff / tau_d)


@dataclass(frozen=True)
class OptimumResult:
    omega1_opt_analytic: float
    omega1_opt_numeric: float
    f_max: float
    beta: float
    method: str = "closed_form"

    @property
    def relative_offset(self) -> float:
        return abs(self.omega1_opt_numeric - self.omega1_opt_analytic) / self.omega1_opt_analytic


def closed_form_infidelity(omega1: float, sys: SystemParams, m: float, did: DidModel = FRQME) -> float:
    e = decay_exponent(omega1, sys, did)
    return hadamard_infidelity_closed_form(m, math.exp(-e), -math.expm1(-e))


def simulated_infidelity(omega1: float, sys: SystemParams, m: float, did: DidModel = FRQME) -> float:
    target = apply_ideal(GateSpec.hadamard(omega1), pseudopure_state(m))
    rho, _ = hadamard_dissipative(m, omega1, sys, did)
    return 1.0 - uhlmann_fidelity(target, rho)


def optimize_drive(
    sys: SystemParams, m: float, method: str = "closed_form", did: DidModel = FRQME, tol: float = LOG_TOL
) -> OptimumResult:
    """Maximize the Hadamard fidelity over ``omega1``.

    The search runs in ``log(omega1)`` over three decades either side of the
    analytic optimum. ``closed_form`` uses the closed-form fidelity;
    ``full_simulation`` propagates the compiled gate and compares with the
    ideal output. Raises :class:`BracketFailure` if the optimum lands on the
    bracket edge.
    """
    if method not in METHODS:
        raise ParamOutOfRange(f"unknown method {method!r}; expected one of {METHODS}")
    if not 0.0 < m <= 1.0:
        raise ParamOutOfRange(f"m must lie in (0, 1], got {m!r}")
    w_opt = omega1_opt(sys, did)
    objective = closed_form_infidelity if method == "closed_form" else simulated_infidelity
    lo = math.log(w_opt) - BRACKET_DECADES * math.log(10)
    hi = math.log(w_opt) + BRACKET_DECADES * math.log(10)
    best = golden_section_min(lambda u: objective(math.exp(u), sys, m, did), lo, hi, tol)
    if min(best - lo, hi - best) < 10 * tol:
        raise BracketFailure(f"optimize_drive: optimum at bracket edge (omega1 = {math.exp(best):.6g} rad/s)")
    w_num = math.exp(best)
    return OptimumResult(
        omega1_opt_analytic=w_opt,
        omega1_opt_numeric=w_num,
        f_max=1.0 - objective(w_num, sys, m, did),
        beta=beta_of(sys, did),
        method=method,
    )


@dataclass(frozen=True, eq=False)
class ContourGrid:
    beta_axis: np.ndarray
    x_axis: np.ndarray
    f_values: np.ndarray
    m: float


def _fidelity_row(beta_value: float, x: np.ndarray, m: float) -> np.ndarray:
    exponent = beta_value * (x + 1.0 / x)
    a = np.exp(-exponent)
    one_minus_a = -np.expm1(-exponent)
    m2 = m * m
    s = np.sqrt((1 - m2) * (1 - m2 * a * a))
    return 1.0 - m2 * one_minus_a**2 / (2.0 * (1 - m2 * a + s))


def contour_grid(beta_axis, x_axis, m: float, workers: int | None = None) -> ContourGrid:
    """Hadamard fidelity on a ``(beta, omega1 / omega1_opt)`` grid.

    ``f_values[i, j]`` uses ``a = exp(-beta_i (x_j + 1/x_j))``. Rows are
    independent and may be spread over ``workers`` threads; the output does
    not depend on the worker count.
    """
    betas = np.asarray(beta_axis, dtype=float)
    xs = np.asarray(x_axis, dtype=float)
    if betas.ndim != 1 or xs.ndim != 1:
        raise ParamOutOfRange("beta_axis and x_axis must be one-dimensional")
    if np.any(~np.isfinite(betas)) or np.any(betas < 0):
        raise ParamOutOfRange("beta values must be finite and >= 0")
    if np.any(~np.isfinite(xs)) or np.any(xs <= 0):
        raise ParamOutOfRange("x values must be finite and > 0")
    if not 0.0 <= m <= 1.0:
        raise ParamOutOfRange(f"m must lie in [0, 1], got {m!r}")

    out = np.empty((betas.size, xs.size))

    def fill(i):
        out[i] = _fidelity_row(betas[i], xs, m)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(betas.size)))
    else:
        for i in range(betas.size):
            fill(i)
    out.setflags(write=False)
    return ContourGrid(betas, xs, out, m)


def default_axes() -> tuple[np.ndarray, np.ndarray]:
    """beta in [0, 1] (101 points) and x in [1e-2, 1e2] (201 log-spaced points)."""
    return np.linspace(0.0, 1.0, 101), np.logspace(-2, 2, 201)


def multiqubit_feasibility(sys: SystemParams, J: float, did: DidModel = FRQME) -> tuple[bool, float]:
    """Whether the optimal drive fits under the qubit-qubit coupling ``J`` (rad/s)."""
    if not (J > 0 and math.isfinite(J)):
        raise ParamOutOfRange(f"J must be finite and > 0, got {J!r}")
    w = omega1_opt(sys, did)
    return w <= J, w
