"""Time evolution under constant and time-dependent generators.

Square pulses are propagated with a single matrix exponential. Shaped pulses
are sliced into uniform steps, each step using the generator sampled at its
midpoint; step propagators are composed with later times on the left.
"""
from __future__ import annotations

import contextlib
import contextvars
import logging
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, ExpmFailure, ParamOutOfRange
from .liouvillian import FRQME, DidModel, DriveParams, build_gamma
from .states import DensityMatrix, PulseSegment, PulseSequence, SystemParams, devectorize, vectorize

log = logging.getLogger(__name__)

RICHARDSON_TOL = 1e-6


def expm(gamma: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(gamma * t)`` for ``t >= 0``."""
    if t < 0:
        raise ParamOutOfRange(f"t must be >= 0, got {t!r}")
    a = np.asarray(gamma, dtype=complex) * t
    if not np.all(np.isfinite(a)):
        raise ExpmFailure("generator has non-finite entries")
    with np.errstate(over="ignore", invalid="ignore"):
        out = scipy.linalg.expm(a)
    if not np.all(np.isfinite(out)):
        raise ExpmFailure("matrix exponential overflowed; parameters are pathological")
    return out


def segment_propagator(segment: PulseSegment, sys: SystemParams, did: DidModel = FRQME) -> np.ndarray:
    gamma = build_gamma(DriveParams(segment.omega1, segment.phi), sys, did)
    return expm(gamma, segment.duration)


@dataclass
class ConservationMonitor:
    """Worst trace and Hermiticity errors of raw propagated vectors, before any repair."""

    steps: int = 0
    max_trace_error: float = 0.0
    max_hermiticity_drift: float = 0.0

    def record(self, v: np.ndarray) -> None:
        self.steps += 1
        self.max_trace_error = max(self.max_trace_error, float(abs(v[0] + v[3] - 1.0)))
        drift = max(abs(v[2] - np.conj(v[1])), abs(v[0].imag), abs(v[3].imag))
        self.max_hermiticity_drift = max(self.max_hermiticity_drift, float(drift))


_monitor: contextvars.ContextVar[ConservationMonitor | None] = contextvars.ContextVar("monitor", default=None)


@contextlib.contextmanager
def conservation_monitor():
    """Record conservation errors of every propagation inside the block."""
    mon = ConservationMonitor()
    token = _monitor.set(mon)
    try:
        yield mon
    finally:
        _monitor.reset(token)


def _apply(prop: np.ndarray, rho: DensityMatrix) -> DensityMatrix:
    v = prop @ vectorize(rho)
    mon = _monitor.get()
    if mon is not None:
        mon.record(v)
    return devectorize(v)


def propagate_segment(
    rho: DensityMatrix, segment: PulseSegment, sys: SystemParams, did: DidModel = FRQME
) -> DensityMatrix:
    if segment.duration == 0:
        return rho
    return _apply(segment_propagator(segment, sys, did), rho)


def propagate_sequence(
    rho: DensityMatrix, seq: PulseSequence, sys: SystemParams, did: DidModel = FRQME
) -> DensityMatrix:
    """Apply the segments of ``seq`` in order, first segment first."""
    for segment in seq:
        rho = propagate_segment(rho, segment, sys, did)
    return rho


Envelope = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class ShapedPulse:
    """Drive with time-dependent amplitude (rad/s) and phase (rad) on ``[0, duration]``.

    Either envelope may be a constant.
    """

    omega1_of_t: Envelope
    phi_of_t: Envelope
    duration: float

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ParamOutOfRange(f"duration must be finite and > 0, got {self.duration!r}")

    def drive_at(self, t: float) -> DriveParams:
        amp = self.omega1_of_t(t) if callable(self.omega1_of_t) else self.omega1_of_t
        phi = self.phi_of_t(t) if callable(self.phi_of_t) else self.phi_of_t
        return DriveParams(float(amp), float(phi))

    @classmethod
    def from_samples(cls, times, amplitudes, phases=0.0) -> "ShapedPulse":
        """Piecewise-linear envelope through sampled points starting at ``t = 0``.

        ``phases`` is a constant or an array sampled on ``times``.
        """
        times = np.asarray(times, dtype=float)
        amplitudes = np.asarray(amplitudes, dtype=float)
        if times.ndim != 1 or times.shape != amplitudes.shape or times.size < 2:
            raise ParamOutOfRange("need at least two (time, amplitude) samples of equal length")
        if times[0] != 0 or np.any(np.diff(times) <= 0):
            raise ParamOutOfRange("sample times must start at 0 and increase strictly")
        if np.any(amplitudes < 0):
            raise ParamOutOfRange("amplitudes must be >= 0")

        def amp(t):
            return float(np.interp(t, times, amplitudes))

        if np.ndim(phases) == 0:
            phase = float(phases)
        else:
            phases = np.asarray(phases, dtype=float)
            if phases.shape != times.shape:
                raise ParamOutOfRange("phase samples must match the time samples")

            def phase(t):
                return float(np.interp(t, times, phases))

        return cls(amp, phase, float(times[-1]))


@dataclass(frozen=True)
class StepControl:
    dt: float
    richardson_check: bool = False


def shaped_propagator(pulse: ShapedPulse, sys: SystemParams, did: DidModel = FRQME, *, steps: int) -> np.ndarray:
    """Time-ordered product of ``steps`` midpoint-sampled step exponentials."""
    h = pulse.duration / steps
    prop = np.eye(4, dtype=complex)
    for k in range(steps):
        gamma = build_gamma(pulse.drive_at((k + 0.5) * h), sys, did)
        prop = expm(gamma, h) @ prop
    return prop


def _steps_for(pulse: ShapedPulse, ctl: StepControl) -> int:
    if not ctl.dt > 0:
        raise ParamOutOfRange(f"dt must be > 0, got {ctl.dt!r}")
    if ctl.dt > pulse.duration / 10 * (1 + 1e-12):
        raise ParamOutOfRange(f"dt={ctl.dt!r} exceeds duration/10={pulse.duration / 10!r}")
    return max(10, math.ceil(pulse.duration / ctl.dt - 1e-9))


def propagate_shaped_checked(
    rho: DensityMatrix, pulse: ShapedPulse, sys: SystemParams, did: DidModel, ctl: StepControl
) -> tuple[DensityMatrix, float | None]:
    """Like :func:`propagate_shaped` but also returns the step-halving difference.

    The difference is ``None`` unless ``ctl.richardson_check`` is set.
    """
    steps = _steps_for(pulse, ctl)
    out = _apply(shaped_propagator(pulse, sys, did, steps=steps), rho)
    if not ctl.richardson_check:
        return out, None
    fine = _apply(shaped_propagator(pulse, sys, did, steps=2 * steps), rho)
    diff = float(np.max(np.abs(out.matrix - fine.matrix)))
    log.info("shaped pulse: %d steps vs %d steps differ by %.3e", steps, 2 * steps, diff)
    if diff > RICHARDSON_TOL:
        raise ConvergenceFailure(
            f"propagate_shaped: dt and dt/2 results differ by {diff:.3e} > {RICHARDSON_TOL:g}; reduce dt"
        )
    return out, diff


def propagate_shaped(
    rho: DensityMatrix, pulse: ShapedPulse, sys: SystemParams, did: DidModel, ctl: StepControl
) -> DensityMatrix:
    return propagate_shaped_checked(rho, pulse, sys, did, ctl)[0]
