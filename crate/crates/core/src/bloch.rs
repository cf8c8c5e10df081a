//! Characteristic-matrix Bloch solver for p-polarized (TM) modes of a
//! periodic stack of uniaxial slabs.
//!
//! Lengths are in λ_b, so k0 = 2π. Transverse and Bloch wavevectors are
//! exchanged in units of k0. Matrices map the tangential fields (H_x, E_y)
//! at the far side of a layer to the near side: Q_first = M · Q_last.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{PermittivityProfile, Slab};

/// Free-space wavenumber at the probe wavelength (λ_b = 1).
pub const K0: f64 = 2.0 * PI;

/// Minimum contour length accepted by the topology classifier.
pub const MIN_CONTOUR_POINTS: usize = 32;

const CLOSE_FRACTION: f64 = 0.05;
const OPEN_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub Matrix2<Complex64>);

impl TransferMatrix {
    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    pub fn then(&self, next: &TransferMatrix) -> TransferMatrix {
        TransferMatrix(self.0 * next.0)
    }

    /// Eigenvalues of the 2×2 matrix.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let half = self.trace() / 2.0;
        let disc = (half * half - self.det()).sqrt();
        (half + disc, half - disc)
    }
}

fn sinc(phi: Complex64) -> Complex64 {
    if phi.norm() < 1e-4 {
        let p2 = phi * phi;
        1.0 - p2 / 6.0 + p2 * p2 / 120.0
    } else {
        phi.sin() / phi
    }
}

/// Characteristic matrix of a uniaxial slab for transverse wavevector `k_y`
/// (units of k0).
///
/// cos φ and sin φ/φ are even in the layer wavenumber, so no square-root
/// branch is ever taken and the result is entire in ε.
pub fn uniaxial_layer_matrix(eps_t: Complex64, inv_eps_n: Complex64, thickness: f64, k_y: f64) -> TransferMatrix {
    let ky = k_y * K0;
    let kl2 = eps_t * (K0 * K0 - ky * ky * inv_eps_n);
    let phi = kl2.sqrt() * thickness;
    let cos = phi.cos();
    let sc = sinc(phi);
    let i = Complex64::i();
    TransferMatrix(Matrix2::new(
        cos,
        -i * eps_t * K0 * thickness * sc,
        -i * thickness * (K0 - ky * ky * inv_eps_n / K0) * sc,
        cos,
    ))
}

/// Characteristic matrix of an isotropic slab.
pub fn layer_matrix(eps: Complex64, thickness: f64, k_y: f64) -> TransferMatrix {
    uniaxial_layer_matrix(eps, 1.0 / eps, thickness, k_y)
}

pub fn slab_matrix(slab: &Slab, k_y: f64) -> TransferMatrix {
    uniaxial_layer_matrix(slab.eps, slab.inv_eps_n, slab.thickness, k_y)
}

/// Ordered product M_1 M_2 ⋯ M_N over one period.
pub fn period_matrix(profile: &PermittivityProfile, k_y: f64) -> TransferMatrix {
    profile
        .slabs
        .iter()
        .fold(TransferMatrix::identity(), |acc, s| acc.then(&slab_matrix(s, k_y)))
}

/// Bloch wavevector (units of k0) from a period matrix.
///
/// θ = arccos(tr M / 2) is taken with Im θ ≥ 0 and Re θ in (−π, π]; the sign
/// of Re k_z therefore carries the phase direction of the decaying branch.
pub fn bloch_kz(m: &TransferMatrix, period: f64) -> Complex64 {
    let mut theta = (m.trace() / 2.0).acos();
    if theta.im < 0.0 || (theta.im == 0.0 && theta.re < 0.0) {
        theta = -theta;
    }
    if theta.re > PI {
        theta.re -= 2.0 * PI;
    } else if theta.re <= -PI {
        theta.re += 2.0 * PI;
    }
    theta / (K0 * period)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TopologyClass {
    Open,
    Closed,
    Indeterminate,
}

impl TopologyClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyClass::Open => "OPEN",
            TopologyClass::Closed => "CLOSED",
            TopologyClass::Indeterminate => "INDETERMINATE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochPoint {
    pub k_y: f64,
    pub k_z: Complex64,
    pub propagating: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoFrequencyContour {
    pub points: Vec<BlochPoint>,
    /// First-zone edge π/a in units of k0.
    pub zone_edge: f64,
    pub evanescence_threshold: f64,
    /// Propagating→evanescent boundary located by bisection in k_y.
    pub transition: Option<BlochPoint>,
    pub topology: TopologyClass,
    pub k_max_propagating: f64,
}

impl IsoFrequencyContour {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k_y,re_k_z,im_k_z,propagating\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{}\n",
                p.k_y,
                p.k_z.re,
                p.k_z.im,
                u8::from(p.propagating)
            ));
        }
        out
    }
}

/// Default evanescence threshold 1e−3 · π/a, in units of k0.
pub fn default_threshold(period: f64) -> f64 {
    1e-3 * 0.5 / period
}

/// `n` evenly spaced transverse wavevectors covering [0, π/a).
pub fn default_ky_grid(period: f64, n: usize) -> Vec<f64> {
    let edge = 0.5 / period;
    (0..n).map(|k| edge * k as f64 / n as f64).collect()
}

fn bloch_point(profile: &PermittivityProfile, period: f64, k_y: f64, threshold: f64) -> BlochPoint {
    let k_z = bloch_kz(&period_matrix(profile, k_y), period);
    BlochPoint {
        k_y,
        k_z,
        propagating: k_z.im < threshold,
    }
}

/// Samples k_z(k_y) in parallel, refines the first propagating→evanescent
/// boundary and classifies the contour.
pub fn compute_contour(profile: &PermittivityProfile, ky_grid: &[f64], threshold: f64) -> IsoFrequencyContour {
    let period = profile.period();
    let points: Vec<BlochPoint> = ky_grid
        .par_iter()
        .map(|&ky| bloch_point(profile, period, ky, threshold))
        .collect();
    let transition = points
        .windows(2)
        .find(|w| w[0].propagating && !w[1].propagating)
        .map(|w| {
            let (mut lo, mut hi) = (w[0], w[1]);
            for _ in 0..60 {
                let mid = bloch_point(profile, period, 0.5 * (lo.k_y + hi.k_y), threshold);
                if mid.propagating {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi.k_y - lo.k_y < 1e-12 {
                    break;
                }
            }
            lo
        });
    let k_max_propagating = points
        .iter()
        .filter(|p| p.propagating)
        .map(|p| p.k_y.hypot(p.k_z.re))
        .fold(0.0, f64::max);
    let mut contour = IsoFrequencyContour {
        points,
        zone_edge: 0.5 / period,
        evanescence_threshold: threshold,
        transition,
        topology: TopologyClass::Indeterminate,
        k_max_propagating,
    };
    contour.topology = classify_topology(&contour);
    contour
}

/// OPEN when Re k_z reaches the zone edge where the band turns evanescent,
/// CLOSED when it returns to the k_y axis there, INDETERMINATE otherwise.
pub fn classify_topology(contour: &IsoFrequencyContour) -> TopologyClass {
    let pts = &contour.points;
    if pts.len() < MIN_CONTOUR_POINTS || !pts[0].propagating {
        return TopologyClass::Indeterminate;
    }
    let Some(first_evanescent) = pts.iter().position(|p| !p.propagating) else {
        return TopologyClass::Indeterminate;
    };
    let edge_point = contour.transition.unwrap_or(pts[first_evanescent - 1]);
    let re = edge_point.k_z.re.abs();
    if re < CLOSE_FRACTION * contour.zone_edge {
        TopologyClass::Closed
    } else if re > OPEN_FRACTION * contour.zone_edge {
        TopologyClass::Open
    } else {
        TopologyClass::Indeterminate
    }
}
