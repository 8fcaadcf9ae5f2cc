"""The 4x4 generator of single-qubit dynamics under the fluctuation-regulated master equation.

The generator splits into three families of terms:

* coherent nutation, through ``xi = 1j * exp(1j*phi) * omega1 / 2``;
* drive-induced decoherence (DiD), rates ``omega1**2 * tau_d / 2`` on the
  diagonal and ``eta = exp(2j*phi) * omega1**2 * tau_d / 2`` between the
  coherences;
* relaxation, through ``1/T1``, ``2/T2`` and the equilibrium polarization ``m``.

Entries are in rad/s or 1/s. The matrix is used exactly as published, so the
coherence decay rate is ``2/T2``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParamOutOfRange
from .states import SystemParams


@dataclass(frozen=True)
class DriveParams:
    omega1: float
    phi: float = 0.0

    def __post_init__(self):
        if not (self.omega1 >= 0 and math.isfinite(self.omega1)):
            raise ParamOutOfRange(f"omega1 must be finite and >= 0, got {self.omega1!r}")
        if not math.isfinite(self.phi):
            raise ParamOutOfRange(f"phi must be finite, got {self.phi!r}")


class DidKind(enum.Enum):
    FRQME = "frqme"
    GENERALIZED = "generalized"


@dataclass(frozen=True)
class DidModel:
    """Source of the DiD timescale.

    ``FRQME`` uses the fluctuation correlation time ``tau_c``. ``GENERALIZED``
    substitutes a user-supplied effective timescale ``t_tilde`` (a DiD rate of
    the form ``omega1**2 * t_tilde``) while keeping the same matrix layout.
    """

    kind: DidKind = DidKind.FRQME
    t_tilde: float = 0.0

    def __post_init__(self):
        if self.kind is DidKind.GENERALIZED and not (self.t_tilde >= 0 and math.isfinite(self.t_tilde)):
            raise ParamOutOfRange(f"t_tilde must be finite and >= 0, got {self.t_tilde!r}")

    def timescale(self, sys: SystemParams) -> float:
        if self.kind is DidKind.GENERALIZED:
            return self.t_tilde
        return sys.tau_c


FRQME = DidModel()


def coherent_generator(drive: DriveParams) -> np.ndarray:
    """First-order nutation part of the generator.

    Equal to the Liouville form of ``-i[H, .]`` with
    ``H = omega1/2 * (cos(phi) sx + sin(phi) sy)``.
    """
    xi = 0.5j * np.exp(1j * drive.phi) * drive.omega1
    xc = np.conj(xi)
    return np.array(
        [
            [0, xi, xc, 0],
            [-xc, 0, 0, xc],
            [-xi, 0, 0, xi],
            [0, -xi, -xc, 0],
        ],
        dtype=complex,
    )


def did_generator(drive: DriveParams, tau_d: float) -> np.ndarray:
    half_rate = 0.5 * drive.omega1**2 * tau_d
    eta = np.exp(2j * drive.phi) * half_rate
    return np.array(
        [
            [-half_rate, 0, 0, half_rate],
            [0, -half_rate, np.conj(eta), 0],
            [0, eta, -half_rate, 0],
            [half_rate, 0, 0, -half_rate],
        ],
        dtype=complex,
    )


def relaxation_generator(sys: SystemParams) -> np.ndarray:
    r1 = 1.0 / sys.T1
    r2 = 2.0 / sys.T2
    m = sys.m
    down, up = (1 - m) * r1, (1 + m) * r1
    return np.array(
        [
            [-down, 0, 0, up],
            [0, -r2, 0, 0],
            [0, 0, -r2, 0],
            [down, 0, 0, -up],
        ],
        dtype=complex,
    )


def build_gamma(drive: DriveParams, sys: SystemParams, did: DidModel = FRQME) -> np.ndarray:
    """Full generator ``Gamma`` with ``d vec(rho)/dt = Gamma @ vec(rho)``."""
    return coherent_generator(drive) + did_generator(drive, did.timescale(sys)) + relaxation_generator(sys)


def dissipator_split(
    gamma: np.ndarray, drive: DriveParams, sys: SystemParams, did: DidModel = FRQME
) -> tuple[np.ndarray, np.ndarray]:
    """Split ``gamma`` into its DiD and relaxation parts.

    Both parts are rebuilt from the parameters rather than subtracted out of
    ``gamma``, so the DiD part scales exactly with ``omega1**2``. Raises
    :class:`ParamOutOfRange` if ``gamma`` was not built from these parameters.
    """
    did_part = did_generator(drive, did.timescale(sys))
    relax = relaxation_generator(sys)
    rebuilt = coherent_generator(drive) + did_part + relax
    scale = max(1.0, float(np.max(np.abs(gamma))))
    if np.max(np.abs(rebuilt - gamma)) > 1e-12 * scale:
        raise ParamOutOfRange("gamma does not match the given drive and system parameters")
    return did_part, relax


def is_trace_preserving(gamma: np.ndarray, atol: float = 1e-14) -> bool:
    """Rows 0 and 3 sum to zero, so ``rho11 + rho22`` is conserved."""
    return bool(np.max(np.abs(gamma[0] + gamma[3])) <= atol)

