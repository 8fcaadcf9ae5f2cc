"""Single-qubit gate simulation under drive-induced decoherence and relaxation.

Finds the drive amplitude that maximizes gate fidelity when faster driving
trades relaxation losses for drive-induced decoherence.
"""
from .errors import (
    BracketFailure,
    ConvergenceFailure,
    ExpmFailure,
    FrqmeError,
    NumericalDomain,
    NumericalFailure,
    ParamOutOfRange,
    StateInvariantViolation,
)
from .fidelity import (
    beta,
    decay_factor,
    decay_factor_reduced,
    hadamard_fidelity_closed_form,
    hadamard_infidelity_closed_form,
    uhlmann_fidelity,
)
from .gates import GateSpec, apply_ideal, compile_gate, hadamard_dissipative, r3_block_decay
from .liouvillian import DidKind, DidModel, DriveParams, build_gamma, coherent_generator, dissipator_split
from .optimizer import ContourGrid, OptimumResult, contour_grid, multiqubit_feasibility, omega1_opt, optimize_drive
from .propagator import (
    ShapedPulse,
    StepControl,
    conservation_monitor,
    expm,
    propagate_segment,
    propagate_sequence,
    propagate_shaped,
)
from .states import (
    DensityMatrix,
    PulseSegment,
    PulseSequence,
    SystemParams,
    devectorize,
    pseudopure_state,
    vectorize,
)

__version__ = "0.1.0"
