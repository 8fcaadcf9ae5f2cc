"""Single-qubit gates as square-pulse sequences, plus the Hadamard and R3 experiments.

A gate is described by its rotation factorization: an ordered list of
``(phi, flip_angle)`` pairs, applied first to last, where each pair is a
rotation by ``flip_angle`` about the transverse axis ``(cos phi, sin phi, 0)``.
Under the drive ``H = omega1/2 (cos(phi) sx + sin(phi) sy)`` a pair becomes a
square pulse of duration ``flip_angle / omega1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParamOutOfRange
from .liouvillian import FRQME, DidModel
from .propagator import propagate_sequence
from .states import (
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    PulseSegment,
    PulseSequence,
    SystemParams,
    pseudopure_state,
)

# x-axis pi pulse, then a pi/2 pulse about -y: U = exp(i sy pi/4) exp(-i sx pi/2).
HADAMARD_ROTATIONS = ((0.0, math.pi), (-math.pi / 2, math.pi / 2))

GATE_KINDS = ("hadamard", "rx", "ry", "custom")


@dataclass(frozen=True)
class GateSpec:
    kind: str
    omega1: float
    angle: float = 0.0
    rotations: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ParamOutOfRange(f"unknown gate kind {self.kind!r}; expected one of {GATE_KINDS}")
        object.__setattr__(self, "rotations", tuple((float(p), float(f)) for p, f in self.rotations))
        flips = [f for _, f in self.factorization()]
        if not all(math.isfinite(f) for f in flips) or not all(math.isfinite(p) for p, _ in self.factorization()):
            raise ParamOutOfRange("flip angles and phases must be finite")
        if not math.isfinite(self.omega1) or self.omega1 < 0:
            raise ParamOutOfRange(f"omega1 must be finite and >= 0, got {self.omega1!r}")
        if any(f != 0 for f in flips) and self.omega1 <= 0:
            raise ParamOutOfRange("omega1 must be > 0 for a gate with a nonzero flip angle")

    @classmethod
    def hadamard(cls, omega1: float) -> "GateSpec":
        return cls("hadamard", omega1)

    @classmethod
    def rx(cls, angle: float, omega1: float) -> "GateSpec":
        return cls("rx", omega1, angle=angle)

    @classmethod
    def ry(cls, angle: float, omega1: float) -> "GateSpec":
        return cls("ry", omega1, angle=angle)

    @classmethod
    def custom(cls, rotations, omega1: float) -> "GateSpec":
        return cls("custom", omega1, rotations=tuple(rotations))

    def factorization(self) -> tuple[tuple[float, float], ...]:
        if self.kind == "hadamard":
            return HADAMARD_ROTATIONS
        if self.kind == "rx":
            return ((0.0, self.angle),)
        if self.kind == "ry":
            return ((math.pi / 2, self.angle),)
        return self.rotations


def compile_gate(gate: GateSpec) -> PulseSequence:
    """Square-pulse sequence realizing ``gate`` at amplitude ``gate.omega1``.

    Zero flip angles are dropped; a negative flip angle becomes a positive one
    with the phase advanced by pi.
    """
    segments = []
    for phi, flip in gate.factorization():
        if flip == 0:
            continue
        if flip < 0:
            phi, flip = phi + math.pi, -flip
        segments.append(PulseSegment(gate.omega1, phi, flip / gate.omega1))
    return PulseSequence(segments)


def rotation_unitary(phi: float, flip: float) -> np.ndarray:
    """``exp(-i flip/2 (cos(phi) sx + sin(phi) sy))``."""
    axis = math.cos(phi) * SIGMA_X + math.sin(phi) * SIGMA_Y
    return math.cos(flip / 2) * IDENTITY - 1j * math.sin(flip / 2) * axis


def gate_unitary(gate: GateSpec) -> np.ndarray:
    if gate.kind == "hadamard":
        # exp(i a P) = cos(a) I + i sin(a) P for a Pauli P
        left = math.cos(math.pi / 4) * IDENTITY + 1j * math.sin(math.pi / 4) * SIGMA_Y
        right = math.cos(math.pi / 2) * IDENTITY - 1j * math.sin(math.pi / 2) * SIGMA_X
        return left @ right
    u = IDENTITY
    for phi, flip in gate.factorization():
        u = rotation_unitary(phi, flip) @ u
    return u


def apply_ideal(gate: GateSpec, rho: DensityMatrix) -> DensityMatrix:
    """``U rho U^dagger`` for the exact gate unitary, without dissipation."""
    u = gate_unitary(gate)
    return DensityMatrix(u @ rho.matrix @ u.conj().T)


def hadamard_dissipative(
    m: float, omega1: float, sys: SystemParams, did: DidModel = FRQME
) -> tuple[DensityMatrix, float]:
    """Run the compiled Hadamard on the pseudopure state and measure its x-polarization.

    Returns the final state and ``a = Tr(sx rho) / m``, the surviving fraction
    of the ideal output polarization.
    """
    if not omega1 > 0:
        raise ParamOutOfRange(f"omega1 must be > 0, got {omega1!r}")
    if m == 0:
        raise ParamOutOfRange("m = 0 leaves no polarization to measure the decay factor")
    rho = propagate_sequence(pseudopure_state(m), compile_gate(GateSpec.hadamard(omega1)), sys, did)
    return rho, rho.expect(SIGMA_X) / m


def r3_sequence(omega1: float) -> PulseSequence:
    """The {pi, -2pi, pi} block about x; the middle pulse reverses the axis."""
    return compile_gate(GateSpec.custom([(0.0, math.pi), (0.0, -2 * math.pi), (0.0, math.pi)], omega1))


def r3_closed_form(omega1: float, sys: SystemParams, did: DidModel = FRQME) -> float:
    """``exp(-(R_eff + omega1**2 tau_d) T)`` with block length ``T = 4 pi / omega1``."""
    tau_d = did.timescale(sys)
    return math.exp(-(sys.r_eff + omega1**2 * tau_d) * 4 * math.pi / omega1)


def r3_block_decay(
    omega1: float, sys: SystemParams, initial: DensityMatrix | None = None, did: DidModel = FRQME
) -> tuple[float, float]:
    """Longitudinal magnetization surviving the R3 block, numerically and in closed form.

    ``initial`` defaults to the pseudopure state with the polarization of ``sys``.
    """
    if not omega1 > 0:
        raise ParamOutOfRange(f"omega1 must be > 0, got {omega1!r}")
    if initial is None:
        initial = pseudopure_state(sys.m)
    mz0 = initial.expect(SIGMA_Z)
    if mz0 == 0:
        raise ParamOutOfRange("initial state has no z-magnetization")
    final = propagate_sequence(initial, r3_sequence(omega1), sys, did)
    return final.expect(SIGMA_Z) / mz0, r3_closed_form(omega1, sys, did)
