"""Quantum kicked top on n qubits: Floquet dynamics, entanglement and ergodicity."""

__version__ = "0.1.0"

from .spin_core import (
    BlochVector,
    DensityOperator,
    DickeVector,
    RegisterVector,
    SphericalDirection,
    bloch_from_density,
    coherent_state_dicke,
    coherent_state_register,
    collective_operator,
    dicke_to_register,
    register_to_dicke,
)
from .floquet import (
    FloquetParameters,
    Trajectory,
    evolve,
    kick_rotation_dicke,
    single_qubit_rdm_dicke,
    single_qubit_rdm_register,
    step_dicke,
    step_register,
    twist_phases,
)
from .metrics import (
    PauliCorrelations,
    entanglement_entropy,
    ergodicity_overlap_series,
    fidelity,
    microcanonical,
    pauli_correlations,
    purity,
    time_averaged_density,
)
from .classical_map import UnitVector3, classical_step, stroboscopic_map
from .open_system import (
    CountRecord,
    NoiseParameters,
    TomographySetting,
    apply_channels,
    kappa_from_pulse,
    mle_reconstruct,
    noisy_evolve,
    overlap_with_theory,
    simulate_counts,
    tomography_settings,
)
