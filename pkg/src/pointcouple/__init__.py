"""Point-coupled waveguide devices, photon scattering and emitter feedback."""

from .dde_benchmark import AmplitudeTrace, DdeParams, convergence_sweep, solve_dde
from .device_algebra import (
    CouplingMatrix,
    EigenphaseDecomposition,
    UnitaryScatteringMatrix,
    beam_splitter,
    circulator,
    coupling_from_scattering,
    eigenphases,
    phase_shifter,
    scattering_from_coupling,
)
from .errors import (
    BondExplosion,
    ConfigError,
    DimensionMismatch,
    GridOverflow,
    IndexOutOfRange,
    NonRepresentableDevice,
    PointCoupleError,
    UnknownFrequencyLabel,
)
from .feedback_mps import (
    ExponentialDrive,
    FeedbackConfig,
    FeedbackRun,
    NoDrive,
    TableDrive,
    build_gate,
    rotating_frame_coupling,
    run,
    step,
)
from .fock_scattering import (
    CoincidenceQuery,
    FockWavepacketState,
    coincidence_probability,
    position_matrix_element,
    scatter_state,
)
from .mps import MatrixProductState
from .normal_modes import (
    NormalModeBasis,
    decompose_wavepacket,
    emitter_coupling_coefficient,
    profile,
    reconstruct_wavepacket,
)
from .wave_propagation import PropagationWindow, Wavepacket, propagate

__version__ = "0.1.0"
