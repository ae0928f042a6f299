"""Analytical theory of polaritons in 1D atom arrays coupled to waveguides,
verified against a brute-force finite-chain oracle."""

__version__ = "0.1.0"

from .errors import (
    BoundaryContamination,
    ConsistencyError,
    DegenerateDenominator,
    DegenerateQuadratic,
    EigenFailure,
    ModeOutOfRange,
    PolaritonChainError,
    PoleAtResonance,
    PoleInACoeff,
    RequiresNonChiral,
    SizeLimit,
)
from .kinematics import (
    BlochMomentum,
    ChainParams,
    ComplexMomentum,
    PairMomentum,
    degenerate_partner_pair,
    degenerate_partner_single,
    effective_mass,
    group_velocity_pair,
    group_velocity_single,
    omega_pair,
    omega_single,
    reduce_zone,
)
from .boundary import (
    BoundaryAmplitudes,
    SubradiancePrediction,
    boundary_amplitudes,
    entry_probability,
    exit_spectral_map,
    f_factor,
    input_transmission,
    reflection,
    subradiant_rate,
)
from .scattering import (
    Channel,
    ChannelMap,
    ScatteringSolution,
    a_coeff,
    classify_region,
    lieb_liniger_t1,
    scattering_length,
    solve_scattering,
    t1_K0,
)
from .oracle import (
    CollisionResult,
    DecayMode,
    FiniteChainOperator,
    ResidualProfile,
    Sector,
    WavepacketSpec,
    ansatz_residual,
    ansatz_state,
    apply_two_sector,
    build_hamiltonian,
    collide_wavepackets,
    decay_rates,
    end_truncation_sources,
    propagate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
