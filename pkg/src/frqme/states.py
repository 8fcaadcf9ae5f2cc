"""Qubit state containers, Liouville-space vectorization and state constructors.

The Liouville vector ordering is row-major, ``(rho11, rho12, rho21, rho22)``.
Superoperators acting on these vectors are plain ``(4, 4)`` complex arrays.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParamOutOfRange, StateInvariantViolation

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
REPAIR_TOL = 1e-6
POSITIVITY_TOL = 1e-9

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Immutable 2x2 Hermitian, unit-trace qubit state.

    Hermiticity and trace are checked on construction.  Positivity is only
    monitored: a negative eigenvalue beyond ``POSITIVITY_TOL`` is logged but
    accepted, since second-order master equations can transiently leave the
    positive cone.
    """

    matrix: np.ndarray

    def __post_init__(self):
        rho = _frozen(self.matrix)
        if rho.shape != (2, 2):
            raise StateInvariantViolation(f"expected a 2x2 matrix, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise StateInvariantViolation("density matrix has non-finite entries")
        drift = hermiticity_drift(rho)
        if drift > HERMITIAN_TOL:
            raise StateInvariantViolation(f"matrix is not Hermitian (drift {drift:.3e})")
        tr = rho[0, 0].real + rho[1, 1].real
        if abs(tr - 1.0) > TRACE_TOL:
            raise StateInvariantViolation(f"trace is {tr!r}, expected 1")
        rho = _frozen(0.5 * (rho + rho.conj().T))
        object.__setattr__(self, "matrix", rho)
        _check_positivity(rho)

    @classmethod
    def _unchecked(cls, rho: np.ndarray) -> "DensityMatrix":
        # Bypasses the strict 1e-12 trace check; callers validate with their own tolerance.
        obj = object.__new__(cls)
        object.__setattr__(obj, "matrix", _frozen(rho))
        _check_positivity(obj.matrix)
        return obj

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "DensityMatrix":
        """State ``(I + x sx + y sy + z sz) / 2``."""
        return cls(0.5 * (IDENTITY + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def bloch(self) -> np.ndarray:
        return np.array([self.expect(SIGMA_X), self.expect(SIGMA_Y), self.expect(SIGMA_Z)])

    def expect(self, op: np.ndarray) -> float:
        """Real part of ``Tr(op rho)``."""
        return float(np.trace(op @ self.matrix).real)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def hermiticity_drift(self) -> float:
        return hermiticity_drift(self.matrix)

    def allclose(self, other: "DensityMatrix", atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - other.matrix)) <= atol)

    def __repr__(self):
        return f"DensityMatrix({self.matrix.tolist()!r})"


def hermiticity_drift(rho: np.ndarray) -> float:
    """Largest deviation of ``rho`` from its conjugate transpose."""
    return float(np.max(np.abs(rho - rho.conj().T)))


def _check_positivity(rho: np.ndarray) -> None:
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < -POSITIVITY_TOL:
        log.warning("density matrix has negative eigenvalue %.3e", lowest)


@dataclass(frozen=True)
class SystemParams:
    """Relaxation and environment parameters.

    ``T1`` and ``T2`` may be ``math.inf`` to switch the corresponding
    relaxation channel off.  ``tau_c = 0`` removes drive-induced decoherence.
    """

    T1: float
    T2: float
    m: float
    tau_c: float

    def __post_init__(self):
        for name in ("T1", "T2"):
            value = getattr(self, name)
            if not value > 0:
                raise ParamOutOfRange(f"{name} must be > 0, got {value!r}")
        if not 0.0 <= self.m <= 1.0:
            raise ParamOutOfRange(f"m must lie in [0, 1], got {self.m!r}")
        if not (self.tau_c >= 0 and math.isfinite(self.tau_c)):
            raise ParamOutOfRange(f"tau_c must be finite and >= 0, got {self.tau_c!r}")

    @property
    def r_eff(self) -> float:
        """Effective relaxation rate ``1/T1 + 1/T2``."""
        return 1.0 / self.T1 + 1.0 / self.T2

    @classmethod
    def ideal(cls, m: float = 0.0) -> "SystemParams":
        """No relaxation and no drive-induced decoherence."""
        return cls(T1=math.inf, T2=math.inf, m=m, tau_c=0.0)


@dataclass(frozen=True)
class PulseSegment:
    """Square pulse: constant amplitude ``omega1`` (rad/s) and phase ``phi`` for ``duration`` seconds."""

    omega1: float
    phi: float
    duration: float

    def __post_init__(self):
        if not (self.omega1 >= 0 and math.isfinite(self.omega1)):
            raise ParamOutOfRange(f"omega1 must be finite and >= 0, got {self.omega1!r}")
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ParamOutOfRange(f"duration must be finite and >= 0, got {self.duration!r}")
        if not math.isfinite(self.phi):
            raise ParamOutOfRange(f"phi must be finite, got {self.phi!r}")

    @property
    def flip_angle(self) -> float:
        return self.omega1 * self.duration


@dataclass(frozen=True)
class PulseSequence:
    segments: tuple[PulseSegment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def total_duration(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)


def vectorize(rho: DensityMatrix) -> np.ndarray:
    """Flatten ``rho`` to ``(rho11, rho12, rho21, rho22)``."""
    return rho.matrix.reshape(4).copy()


def devectorize(v) -> DensityMatrix:
    """Inverse of :func:`vectorize`.

    Hermiticity drift up to ``REPAIR_TOL`` is repaired by averaging the two
    coherences; larger drift, or a trace off by more than ``REPAIR_TOL``,
    raises :class:`StateInvariantViolation`.  The trace is never renormalized.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape != (4,):
        raise StateInvariantViolation(f"expected a length-4 vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise StateInvariantViolation("Liouville vector has non-finite entries")
    if abs(v[0] + v[3] - 1.0) > REPAIR_TOL:
        raise StateInvariantViolation(f"trace is {v[0] + v[3]!r}, expected 1")
    if abs(v[2] - np.conj(v[1])) > REPAIR_TOL:
        raise StateInvariantViolation("coherences are not complex conjugates")
    if max(abs(v[0].imag), abs(v[3].imag)) > REPAIR_TOL:
        raise StateInvariantViolation("populations have imaginary parts")
    c = 0.5 * (v[1] + np.conj(v[2]))
    rho = np.array([[v[0].real, c], [np.conj(c), v[3].real]], dtype=complex)
    return DensityMatrix._unchecked(rho)


def pseudopure_state(m: float) -> DensityMatrix:
    """``(1 - m)/2 * I + m |0><0|``, i.e. ``diag((1 + m)/2, (1 - m)/2)``."""
    if not 0.0 <= m <= 1.0:
        raise ParamOutOfRange(f"m must lie in [0, 1], got {m!r}")
    return DensityMatrix(np.diag([(1 + m) / 2, (1 - m) / 2]))
