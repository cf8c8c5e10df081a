//! End-to-end evaluations shared by the command-line tool and the tests:
//! permittivity scans, figure-of-merit summaries, contours at a fixed
//! operating frequency and branching-ratio rows.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::atomic_response::{
    figure_of_merit, lossless_pump, peak_permittivity, susceptibility, CouplingStrength, DriveConfig,
    FigureOfMerit, LevelScheme, OperatingPointSearch, ProbeConfig,
};
use crate::bloch::{compute_contour, IsoFrequencyContour};
use crate::decay::{branching_ratio, DecayRate, DecayTolerance, DipoleContext};
use crate::error::{Error, Result};
use crate::lattice::{build_profile, LatticeGeometry, PermittivityProfile};

/// `n` evenly spaced points over [lo, hi] inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Peak permittivity over a probe-detuning grid, in grid order.
pub fn epsilon_scan(
    levels: &LevelScheme,
    drive: &DriveConfig,
    zeta: CouplingStrength,
    grid: &[f64],
    omega_b: f64,
) -> Vec<Result<Complex64>> {
    grid.par_iter()
        .map(|&delta_b| peak_permittivity(levels, drive, &ProbeConfig { delta_b, omega_b }, zeta))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FomSummary {
    /// Largest FOM on the grid (infinite when divergence is reached).
    pub peak: f64,
    pub peak_delta_b: f64,
    pub max_finite: f64,
    pub divergent: bool,
    pub gain: bool,
    /// Width of the half-maximum band, or of the divergent band when the
    /// peak is infinite.
    pub bandwidth: f64,
}

fn interpolate_zero(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    if y1 == y0 {
        0.5 * (x0 + x1)
    } else {
        x0 - y0 * (x1 - x0) / (y1 - y0)
    }
}

/// Peak, divergence and bandwidth of a FOM curve sampled on `grid`.
pub fn fom_summary(grid: &[f64], eps: &[Complex64]) -> Result<FomSummary> {
    if grid.len() != eps.len() || grid.len() < 3 {
        return Err(Error::InvalidParameter("FOM summary needs >= 3 matching samples".into()));
    }
    let foms: Vec<FigureOfMerit> = eps.iter().map(|e| figure_of_merit(*e)).collect();
    let max_finite = foms
        .iter()
        .map(|f| f.value)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let divergent = foms.iter().any(|f| f.is_divergent());
    let gain = foms.iter().any(|f| f.gain);

    if divergent {
        // Widest run of divergent samples; edges at the Im ε sign change.
        let mut best = (0usize, 0usize);
        let mut k = 0;
        while k < foms.len() {
            if foms[k].is_divergent() {
                let start = k;
                while k + 1 < foms.len() && foms[k + 1].is_divergent() {
                    k += 1;
                }
                if k - start >= best.1 - best.0 || best == (0, 0) && !foms[0].is_divergent() {
                    best = (start, k);
                }
            }
            k += 1;
        }
        let (i, j) = best;
        let left = if i == 0 {
            grid[0]
        } else {
            interpolate_zero(grid[i - 1], eps[i - 1].im, grid[i], eps[i].im)
        };
        let right = if j + 1 == grid.len() {
            grid[j]
        } else {
            interpolate_zero(grid[j], eps[j].im, grid[j + 1], eps[j + 1].im)
        };
        return Ok(FomSummary {
            peak: f64::INFINITY,
            peak_delta_b: 0.5 * (grid[i] + grid[j]),
            max_finite,
            divergent,
            gain,
            bandwidth: right - left,
        });
    }

    let (ip, peak) = foms
        .iter()
        .enumerate()
        .map(|(k, f)| (k, f.value))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let half = 0.5 * peak;
    let mut i = ip;
    while i > 0 && foms[i - 1].value >= half {
        i -= 1;
    }
    let mut j = ip;
    while j + 1 < foms.len() && foms[j + 1].value >= half {
        j += 1;
    }
    let left = if i == 0 {
        grid[0]
    } else {
        interpolate_zero(grid[i - 1], foms[i - 1].value - half, grid[i], foms[i].value - half)
    };
    let right = if j + 1 == grid.len() {
        grid[j]
    } else {
        interpolate_zero(grid[j], foms[j].value - half, grid[j + 1], foms[j + 1].value - half)
    };
    Ok(FomSummary {
        peak,
        peak_delta_b: grid[ip],
        max_finite,
        divergent,
        gain,
        bandwidth: right - left,
    })
}

/// Pump making ε lossless for `drive` at a fixed probe detuning.
pub fn lossless_drive(
    levels: &LevelScheme,
    drive: &DriveConfig,
    delta_b: f64,
    zeta: CouplingStrength,
    search: &OperatingPointSearch,
) -> Result<(DriveConfig, Complex64)> {
    match lossless_pump(levels, drive, delta_b, zeta, search)? {
        Some((pump, chi, _)) => Ok((drive.with_pump(pump), chi)),
        None => Err(Error::NoLosslessPoint(format!(
            "no pump in [0, {}] nulls Im eps at delta_b = {delta_b}",
            search.max_pump
        ))),
    }
}

/// Susceptibility, slab profile and isofrequency contour at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourRun {
    pub chi: Complex64,
    pub epsilon_peak: Complex64,
    pub profile: PermittivityProfile,
    pub contour: IsoFrequencyContour,
}

pub fn contour_from_chi(
    chi: Complex64,
    geometry: &LatticeGeometry,
    ky_grid: &[f64],
    threshold: f64,
) -> Result<ContourRun> {
    let profile = build_profile(geometry, chi)?;
    let contour = compute_contour(&profile, ky_grid, threshold);
    let epsilon_peak = 1.0 + crate::atomic_response::local_field(chi)?;
    Ok(ContourRun {
        chi,
        epsilon_peak,
        profile,
        contour,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn contour_at(
    levels: &LevelScheme,
    drive: &DriveConfig,
    probe: &ProbeConfig,
    zeta: CouplingStrength,
    geometry: &LatticeGeometry,
    ky_grid: &[f64],
    threshold: f64,
) -> Result<ContourRun> {
    let chi = susceptibility(levels, drive, probe, zeta)?;
    contour_from_chi(chi, geometry, ky_grid, threshold)
}

/// Full chain χ → profile → decay for one drive setting.
#[allow(clippy::too_many_arguments)]
pub fn branching_row(
    levels: &LevelScheme,
    drive: &DriveConfig,
    probe: &ProbeConfig,
    zeta: CouplingStrength,
    geometry: &LatticeGeometry,
    context: &DipoleContext,
    tol: &DecayTolerance,
) -> Result<(f64, DecayRate)> {
    let chi = susceptibility(levels, drive, probe, zeta)?;
    let profile = build_profile(geometry, chi)?;
    branching_ratio(context, &profile, tol)
}

/// First Ω at which consecutive rows cross `level`, linearly interpolated.
pub fn crossing(rows: &[(f64, f64)], level: f64) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if (y0 - level) * (y1 - level) <= 0.0 && y0 != y1 {
            Some(interpolate_zero(x0, y0 - level, x1, y1 - level))
        } else {
            None
        }
    })
}
