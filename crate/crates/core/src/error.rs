use thiserror::Error;

/// Failure modes of the physics pipeline.
///
/// Each variant names the parameter region it signals so that scan drivers
/// can record it per grid point and keep going.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A closed-form susceptibility denominator vanished (resonance pole).
    #[error("degenerate denominator |{which}| = {magnitude:e} in closed-form susceptibility")]
    DegenerateDenominator { which: &'static str, magnitude: f64 },

    /// Local-field correction evaluated at chi ~ 3.
    #[error("local-field pole: |1 - chi/3| = {magnitude:e}")]
    LorentzPole { magnitude: f64 },

    /// No probe detuning / pump pair in the window nulls the absorption.
    #[error("no lossless operating point: {0}")]
    NoLosslessPoint(String),

    /// The Liouvillian kernel is not one-dimensional.
    #[error("steady state is not unique (kernel dimension {dimension})")]
    DegenerateSteadyState { dimension: usize },

    /// Probe strength outside the linear-response regime.
    #[error("probe not in linear regime: relative change {relative_change:e} on halving omega_b = {omega_b:e}")]
    NonlinearProbe { omega_b: f64, relative_change: f64 },

    /// Emitter placed where the host permittivity differs from vacuum.
    #[error("dipole at position {position} sits inside the medium (|eps - 1| = {deviation:e})")]
    DipoleInsideMedium { position: f64, deviation: f64 },

    /// Multiple-reflection denominator vanished at a quadrature node.
    #[error("resonant multiple-reflection denominator at s = {s}")]
    ResonantDenominator { s: f64 },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate:e} > tolerance {tolerance:e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },

    /// Parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Short machine-readable tag, used in error records and scan tables.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateDenominator { .. } => "DegenerateDenominator",
            Error::LorentzPole { .. } => "LorentzPole",
            Error::NoLosslessPoint(_) => "NoLosslessPoint",
            Error::DegenerateSteadyState { .. } => "DegenerateSteadyState",
            Error::NonlinearProbe { .. } => "NonlinearProbe",
            Error::DipoleInsideMedium { .. } => "DipoleInsideMedium",
            Error::ResonantDenominator { .. } => "ResonantDenominator",
            Error::QuadratureNotConverged { .. } => "QuadratureNotConverged",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
