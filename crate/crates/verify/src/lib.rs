//! Shared fixtures for the benches and the acceptance suite.

use qlm_core::{CouplingStrength, DriveConfig, LevelScheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Linewidths, drives and coupling of the lossless operating point.
pub fn reference_levels() -> LevelScheme {
    LevelScheme {
        gamma_a: 0.86,
        gamma_b: 0.62,
        gamma_d: 1.092,
    }
}

pub fn reference_drive() -> DriveConfig {
    DriveConfig {
        omega_a: 1.3,
        omega_d: 0.024,
        delta_a: 0.0,
        delta_d: -1.40073,
        pump_rate: 0.0,
    }
}

pub fn reference_zeta() -> CouplingStrength {
    CouplingStrength(15.0)
}

/// Reported probe detuning of the lossless point.
pub const REFERENCE_DELTA_B: f64 = -1.40083;

/// Weaker drive pair expected to close the isofrequency contour.
pub const CLOSING_DRIVE: (f64, f64) = (1.15, 0.0189);

/// One pump-free parameter point.
#[derive(Debug, Clone, Copy)]
pub struct ResponsePoint {
    pub levels: LevelScheme,
    pub drive: DriveConfig,
    pub delta_b: f64,
    pub zeta: CouplingStrength,
}

/// Seeded random pump-free points over the usual parameter box.
pub fn random_points(seed: u64, n: usize) -> Vec<ResponsePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| ResponsePoint {
            levels: LevelScheme {
                gamma_a: rng.random_range(0.3..1.5),
                gamma_b: rng.random_range(0.3..1.5),
                gamma_d: rng.random_range(0.3..1.5),
            },
            drive: DriveConfig {
                omega_a: rng.random_range(0.1..2.0),
                omega_d: rng.random_range(0.01..0.5),
                delta_a: rng.random_range(-2.0..2.0),
                delta_d: rng.random_range(-2.0..2.0),
                pump_rate: 0.0,
            },
            delta_b: rng.random_range(-2.0..2.0),
            zeta: CouplingStrength(rng.random_range(1.0..20.0)),
        })
        .collect()
}
