//! Atomic-lattice permittivity, Bloch dispersion and emitter decay for a
//! pumped four-level quantum medium.

pub mod atomic_response;
pub mod bloch;
pub mod decay;
pub mod error;
pub mod lattice;
pub mod liouvillian;
pub mod pipeline;
pub mod quadrature;

pub use atomic_response::{
    chi_closed_form, chi_ddr, complex_relaxation, epsilon_at, figure_of_merit, find_operating_point,
    inverse_local_field, lossless_pump, local_field, peak_permittivity, susceptibility, ComplexRelaxationSet,
    CouplingStrength, DriveConfig, FigureOfMerit, LevelScheme, OperatingPoint, OperatingPointSearch,
    ProbeConfig,
};
pub use bloch::{
    bloch_kz, classify_topology, compute_contour, layer_matrix, period_matrix, BlochPoint,
    IsoFrequencyContour, TopologyClass, TransferMatrix, K0,
};
pub use decay::{
    branching_ratio, decay_rate_from_reflections, decay_rate_z, perfect_mirror_decay, scan_branching,
    stack_reflection, BranchingPoint, DecayRate, DecayStack, DecayTolerance, DipoleContext,
};
pub use error::{Error, Result};
pub use lattice::{build_profile, chi_profile, EnzLimit, LatticeGeometry, PermittivityProfile, Sampling, Slab};
pub use liouvillian::{build_liouvillian, numeric_chi, steady_state, DensityMatrix4};
