//! Gaussian atomic density grating and its discretization into slabs.
//!
//! Lengths are in units of the probe wavelength λ_b. Each slab is uniaxial:
//! `eps` is the tangential permittivity and `inv_eps_n` the inverse of the
//! normal one. In the default cell-averaged mode these are ⟨ε⟩ and ⟨1/ε⟩ over
//! the slab, which is what a p-polarized field sees when a layer is thin.
//! In midpoint mode both come from the value at the slab center.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atomic_response::{epsilon_at, local_field, LOSSLESS_TOLERANCE};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_16;

/// Envelope amplitude below which a slab is snapped to vacuum.
pub const VACUUM_TAIL: f64 = 1e-12;

/// How slab permittivities are obtained from the continuous profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    CellAverage,
    Midpoint,
}

/// Treatment of the 1/ε pole where a lossless profile crosses ε = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnzLimit {
    /// Vanishing-loss limit Im ε → 0⁺ (adds the −iπ/|ε'| residue term).
    #[default]
    Causal,
    /// Cauchy principal value only.
    PrincipalValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeGeometry {
    /// Lattice period in units of λ_b.
    pub period_a: f64,
    /// Gaussian 1/e half-width in units of the period.
    pub gauss_w: f64,
    pub slabs_per_period: usize,
    pub num_periods: usize,
    pub sampling: Sampling,
    pub enz: EnzLimit,
}

impl Default for LatticeGeometry {
    fn default() -> Self {
        Self {
            period_a: 0.25,
            gauss_w: 0.1,
            slabs_per_period: 128,
            num_periods: 8,
            sampling: Sampling::CellAverage,
            enz: EnzLimit::Causal,
        }
    }
}

impl LatticeGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_a > 0.0 && self.period_a.is_finite()) {
            return Err(Error::InvalidParameter(format!("period_a must be > 0, got {}", self.period_a)));
        }
        if !(self.gauss_w > 0.0 && self.gauss_w < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "gauss_w must lie in (0, 0.5), got {}",
                self.gauss_w
            )));
        }
        if self.slabs_per_period < 16 {
            return Err(Error::InvalidParameter(format!(
                "slabs_per_period must be >= 16, got {}",
                self.slabs_per_period
            )));
        }
        if self.num_periods < 1 {
            return Err(Error::InvalidParameter("num_periods must be >= 1".into()));
        }
        Ok(())
    }

    /// Absolute Gaussian width in λ_b.
    pub fn width(&self) -> f64 {
        self.gauss_w * self.period_a
    }

    /// First-zone edge π/a expressed in units of k0 = 2π/λ_b.
    pub fn zone_edge(&self) -> f64 {
        0.5 / self.period_a
    }
}

/// One uniaxial slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slab {
    pub thickness: f64,
    pub eps: Complex64,
    pub inv_eps_n: Complex64,
}

impl Slab {
    pub fn isotropic(thickness: f64, eps: Complex64) -> Self {
        Self {
            thickness,
            eps,
            inv_eps_n: 1.0 / eps,
        }
    }

    pub fn vacuum(thickness: f64) -> Self {
        Self {
            thickness,
            eps: Complex64::new(1.0, 0.0),
            inv_eps_n: Complex64::new(1.0, 0.0),
        }
    }

    /// Largest deviation of either tensor component from vacuum.
    pub fn vacuum_deviation(&self) -> f64 {
        (self.eps - 1.0).norm().max((self.inv_eps_n - 1.0).norm())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermittivityProfile {
    pub slabs: Vec<Slab>,
}

impl PermittivityProfile {
    pub fn new(slabs: Vec<Slab>) -> Result<Self> {
        if slabs.is_empty() {
            return Err(Error::InvalidParameter("profile needs at least one slab".into()));
        }
        if let Some(s) = slabs.iter().find(|s| !(s.thickness > 0.0)) {
            return Err(Error::InvalidParameter(format!("slab thickness must be > 0, got {}", s.thickness)));
        }
        Ok(Self { slabs })
    }

    pub fn vacuum(period: f64, slabs: usize) -> Self {
        Self {
            slabs: vec![Slab::vacuum(period / slabs as f64); slabs],
        }
    }

    pub fn period(&self) -> f64 {
        self.slabs.iter().map(|s| s.thickness).sum()
    }

    pub fn reversed(&self) -> Self {
        Self {
            slabs: self.slabs.iter().rev().copied().collect(),
        }
    }

    /// Midpoint positions of the slabs.
    pub fn midpoints(&self) -> Vec<f64> {
        let mut z = 0.0;
        self.slabs
            .iter()
            .map(|s| {
                let m = z + 0.5 * s.thickness;
                z += s.thickness;
                m
            })
            .collect()
    }

    /// CSV rows `z_mid,re_eps,im_eps` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z_mid,re_eps,im_eps\n");
        for (z, s) in self.midpoints().into_iter().zip(&self.slabs) {
            let _ = writeln!(out, "{:.12e},{:.12e},{:.12e}", z, s.eps.re, s.eps.im);
        }
        out
    }
}

/// Gaussian envelope of the peak susceptibility around a lattice site.
pub fn chi_profile(chi_peak: Complex64, z: f64, z_alpha: f64, w: f64) -> Complex64 {
    let u = (z - z_alpha) / w;
    chi_peak * (-u * u).exp()
}

struct Envelope {
    chi: Complex64,
    w: f64,
}

impl Envelope {
    fn chi_at(&self, u: f64) -> Complex64 {
        chi_profile(self.chi, u, 0.0, self.w)
    }

    fn eps(&self, u: f64) -> Result<Complex64> {
        Ok(epsilon_at(local_field(self.chi_at(u))?))
    }

    /// dε/du at complex u.
    fn eps_prime(&self, u: Complex64) -> Complex64 {
        let x = u / self.w;
        let g = self.chi * (-x * x).exp();
        let dg = g * (-2.0 * u / (self.w * self.w));
        dg / ((1.0 - g / 3.0) * (1.0 - g / 3.0))
    }

    /// Complex positions where χ(u) = −3/2, i.e. ε = 0.
    fn enz_points(&self) -> Vec<Complex64> {
        if self.chi.norm() < 1.5 {
            return Vec::new();
        }
        let g0 = Complex64::new(-1.5, 0.0) / self.chi;
        let s = (-g0.ln()).sqrt();
        vec![self.w * s, -self.w * s]
    }
}

/// Discretizes one period, Gaussian centered at a/2.
pub fn build_profile(geometry: &LatticeGeometry, chi_peak: Complex64) -> Result<PermittivityProfile> {
    geometry.validate()?;
    let n = geometry.slabs_per_period;
    let t = geometry.period_a / n as f64;
    let env = Envelope {
        chi: chi_peak,
        w: geometry.width(),
    };
    let lossless = local_field(chi_peak)?.im.abs() < LOSSLESS_TOLERANCE;
    let poles = env.enz_points();
    let half = n as f64 / 2.0;
    let mut slabs = Vec::with_capacity(n);
    for k in 0..n {
        // Offsets from the site center keep mirrored slabs bit-symmetric.
        let u1 = (k as f64 - half) * t;
        let u2 = (k as f64 + 1.0 - half) * t;
        let nearest = if u1 <= 0.0 && u2 >= 0.0 { 0.0 } else { u1.abs().min(u2.abs()) };
        let tail = chi_peak.norm() * (-(nearest / env.w).powi(2)).exp();
        if tail < VACUUM_TAIL {
            slabs.push(Slab::vacuum(t));
            continue;
        }
        let slab = match geometry.sampling {
            Sampling::Midpoint => Slab::isotropic(t, env.eps(0.5 * (u1 + u2))?),
            Sampling::CellAverage => averaged_slab(&env, &poles, u1, u2, lossless, geometry.enz)?,
        };
        slabs.push(slab);
    }
    PermittivityProfile::new(slabs)
}

fn averaged_slab(
    env: &Envelope,
    poles: &[Complex64],
    u1: f64,
    u2: f64,
    lossless: bool,
    enz: EnzLimit,
) -> Result<Slab> {
    let t = u2 - u1;
    let mut failure = None;
    let mut eval = |u: f64| match env.eps(u) {
        Ok(e) => e,
        Err(e) => {
            failure = Some(e);
            Complex64::new(1.0, 0.0)
        }
    };
    let eps_avg = gauss_legendre_16(&mut eval, u1, u2) / t;
    if let Some(e) = failure {
        return Err(e);
    }

    let nearby: Vec<Complex64> = poles
        .iter()
        .copied()
        .filter(|p| p.re > u1 - 2.0 * t && p.re < u2 + 2.0 * t && p.im.abs() < 2.0 * t)
        .map(|p| if lossless { Complex64::new(p.re, 0.0) } else { p })
        .collect();
    let residues: Vec<Complex64> = nearby.iter().map(|p| 1.0 / env.eps_prime(*p)).collect();
    let smooth = |u: f64| -> Complex64 {
        let base = 1.0 / env.eps(u).unwrap_or(Complex64::new(1.0, 0.0));
        nearby
            .iter()
            .zip(&residues)
            .fold(base, |acc, (p, r)| acc - r / (u - p))
    };
    let mut inv_avg = gauss_legendre_16(smooth, u1, u2);
    for (p, r) in nearby.iter().zip(&residues) {
        let log = if lossless {
            let magnitude = ((u2 - p.re) / (u1 - p.re)).abs().ln();
            let inside = p.re > u1 && p.re < u2;
            match (inside, enz) {
                (true, EnzLimit::Causal) => {
                    // r·(−iπ·sign ε') = −iπ/|ε'|
                    let sign = (1.0 / r.re).signum();
                    Complex64::new(magnitude, -std::f64::consts::PI * sign)
                }
                _ => Complex64::new(magnitude, 0.0),
            }
        } else {
            ((u2 - p) / (u1 - p)).ln()
        };
        inv_avg += r * log;
    }
    Ok(Slab {
        thickness: t,
        eps: eps_avg,
        inv_eps_n: inv_avg / t,
    })
}
