//! Closed-form probe susceptibility of the double-dark-resonance four-level
//! atom, the local-field (Lorentz-Lorenz) correction, permittivity, figure of
//! merit and the lossless operating-point search.
//!
//! Level labels follow the usual DDR scheme: the probe couples |b⟩ ↔ |a⟩, the
//! drive Ω_a couples |a⟩ ↔ |c⟩ and the weak drive Ω_d couples |d⟩ ↔ |c⟩.
//! Spontaneous channels are |c⟩→|a⟩ (γ_a), |a⟩→|b⟩ (γ_b) and |c⟩→|d⟩ (γ_d).
//! Every rate, Rabi frequency and detuning is expressed in units of γ0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian;

/// Floor below which a closed-form denominator counts as a pole (γ0 units).
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Imaginary permittivity below which a point is considered lossless.
pub const LOSSLESS_TOLERANCE: f64 = 1e-8;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spontaneous decay rates of the four-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelScheme {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub gamma_d: f64,
}

impl Default for LevelScheme {
    fn default() -> Self {
        Self {
            gamma_a: 0.86,
            gamma_b: 0.62,
            gamma_d: 1.092,
        }
    }
}

impl LevelScheme {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("gamma_d", self.gamma_d),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// γ_ab = γ_b / 2
    pub fn gamma_ab(&self) -> f64 {
        self.gamma_b / 2.0
    }

    /// γ_ad = γ_b / 2
    pub fn gamma_ad(&self) -> f64 {
        self.gamma_b / 2.0
    }

    /// γ_ca = (γ_a + γ_b + γ_d) / 2
    pub fn gamma_ca(&self) -> f64 {
        (self.gamma_a + self.gamma_b + self.gamma_d) / 2.0
    }

    /// γ_cb = (γ_a + γ_d) / 2
    pub fn gamma_cb(&self) -> f64 {
        (self.gamma_a + self.gamma_d) / 2.0
    }

    /// γ_cd = (γ_a + γ_d) / 2
    pub fn gamma_cd(&self) -> f64 {
        (self.gamma_a + self.gamma_d) / 2.0
    }

    /// The |d⟩-|b⟩ coherence has no radiative damping.
    pub fn gamma_db(&self) -> f64 {
        0.0
    }
}

/// Coherent drives plus the incoherent pump on |b⟩ → |a⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    pub omega_a: f64,
    pub omega_d: f64,
    pub delta_a: f64,
    pub delta_d: f64,
    pub pump_rate: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            omega_a: 1.3,
            omega_d: 0.024,
            delta_a: 0.0,
            delta_d: -1.40073,
            pump_rate: 0.0,
        }
    }
}

impl DriveConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_a", self.omega_a),
            ("omega_d", self.omega_d),
            ("pump_rate", self.pump_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !self.delta_a.is_finite() || !self.delta_d.is_finite() {
            return Err(Error::InvalidParameter("detunings must be finite".into()));
        }
        Ok(())
    }

    pub fn with_pump(mut self, pump_rate: f64) -> Self {
        self.pump_rate = pump_rate;
        self
    }

    pub fn with_rabi(mut self, omega_a: f64, omega_d: f64) -> Self {
        self.omega_a = omega_a;
        self.omega_d = omega_d;
        self
    }

    /// Probe detuning of exact two-photon |b⟩-|d⟩ resonance.
    pub fn two_photon_resonance(&self) -> f64 {
        self.delta_d - self.delta_a
    }
}

/// Weak probe on |b⟩ ↔ |a⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub delta_b: f64,
    pub omega_b: f64,
}

impl ProbeConfig {
    pub const DEFAULT_OMEGA_B: f64 = 1e-4;

    pub fn at(delta_b: f64) -> Self {
        Self {
            delta_b,
            omega_b: Self::DEFAULT_OMEGA_B,
        }
    }
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self::at(-1.40083)
    }
}

/// Collective coupling ζ = N|℘_ab|²/(ħ ε0 γ0) at peak density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CouplingStrength(pub f64);

impl CouplingStrength {
    pub fn new(zeta: f64) -> Result<Self> {
        if zeta > 0.0 && zeta.is_finite() {
            Ok(Self(zeta))
        } else {
            Err(Error::InvalidParameter(format!("zeta must be > 0, got {zeta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for CouplingStrength {
    fn default() -> Self {
        Self(15.0)
    }
}

/// Complex off-diagonal relaxation rates Γ_ij = γ_ij + i(E_i − E_j).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRelaxationSet {
    pub gamma_ab: Complex64,
    pub gamma_ca: Complex64,
    pub gamma_cd: Complex64,
    pub gamma_cb: Complex64,
    pub gamma_ad: Complex64,
    pub gamma_db: Complex64,
}

/// Complex relaxation rates for the given detunings.
///
/// Γ_db is i(Δ_a + Δ_b − Δ_d), the sign that follows from the level energies
/// of the rotating-frame Hamiltonian (E_d − E_b); it vanishes on two-photon
/// resonance Δ_d = Δ_a + Δ_b.
pub fn complex_relaxation(
    levels: &LevelScheme,
    delta_a: f64,
    delta_b: f64,
    delta_d: f64,
) -> ComplexRelaxationSet {
    ComplexRelaxationSet {
        gamma_ab: Complex64::new(levels.gamma_ab(), delta_b),
        gamma_ca: Complex64::new(levels.gamma_ca(), delta_a),
        gamma_cd: Complex64::new(levels.gamma_cd(), delta_d),
        gamma_cb: Complex64::new(levels.gamma_cb(), delta_a + delta_b),
        gamma_ad: Complex64::new(levels.gamma_ad(), delta_d - delta_a),
        gamma_db: Complex64::new(levels.gamma_db(), delta_a + delta_b - delta_d),
    }
}

/// Closed-form DDR susceptibility (pump-free, weak probe).
pub fn chi_ddr(
    zeta: CouplingStrength,
    rates: &ComplexRelaxationSet,
    omega_a: f64,
    omega_d: f64,
) -> Result<Complex64> {
    let oa2 = omega_a * omega_a;
    let od2 = omega_d * omega_d;
    let base = rates.gamma_cb * rates.gamma_ab + oa2;
    if base.norm() <= DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator {
            which: "Gamma_cb Gamma_ab + Omega_a^2",
            magnitude: base.norm(),
        });
    }
    let leading = I * zeta.value() * rates.gamma_cb / base;
    // The braced correction only exists when both drives are on.
    let numerator = oa2 * od2;
    if numerator == 0.0 {
        return Ok(leading);
    }
    let inner = rates.gamma_db * base + od2 * rates.gamma_ab;
    if inner.norm() <= DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator {
            which: "Gamma_db (Gamma_cb Gamma_ab + Omega_a^2) + Omega_d^2 Gamma_ab",
            magnitude: inner.norm(),
        });
    }
    Ok(leading * (1.0 + numerator / (rates.gamma_cb * inner)))
}

/// Closed-form susceptibility straight from level/drive/probe parameters.
pub fn chi_closed_form(
    levels: &LevelScheme,
    drive: &DriveConfig,
    delta_b: f64,
    zeta: CouplingStrength,
) -> Result<Complex64> {
    let rates = complex_relaxation(levels, drive.delta_a, delta_b, drive.delta_d);
    chi_ddr(zeta, &rates, drive.omega_a, drive.omega_d)
}

/// Lorentz-Lorenz local-field correction χ/(1 − χ/3).
pub fn local_field(chi: Complex64) -> Result<Complex64> {
    let denom = 1.0 - chi / 3.0;
    if denom.norm() <= DENOMINATOR_FLOOR {
        return Err(Error::LorentzPole {
            magnitude: denom.norm(),
        });
    }
    Ok(chi / denom)
}

/// Algebraic inverse of [`local_field`].
pub fn inverse_local_field(chi_local: Complex64) -> Complex64 {
    chi_local / (1.0 + chi_local / 3.0)
}

pub fn epsilon_at(chi_local: Complex64) -> Complex64 {
    1.0 + chi_local
}

/// |Re ε| / Im ε, with the gain flag raised when Im ε is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigureOfMerit {
    pub value: f64,
    pub gain: bool,
}

impl FigureOfMerit {
    pub fn is_divergent(&self) -> bool {
        self.value.is_infinite()
    }
}

pub fn figure_of_merit(epsilon: Complex64) -> FigureOfMerit {
    const FLOOR: f64 = 1e-15;
    let re = epsilon.re.abs();
    let im = epsilon.im;
    if im < -FLOOR {
        return FigureOfMerit {
            value: f64::INFINITY,
            gain: true,
        };
    }
    let value = if im <= FLOOR {
        if re > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        re / im
    };
    FigureOfMerit { value, gain: false }
}

/// Peak susceptibility at one probe detuning.
///
/// Uses the closed form when the pump is off and the steady-state oracle
/// otherwise, since the closed form has no pump term.
pub fn susceptibility(
    levels: &LevelScheme,
    drive: &DriveConfig,
    probe: &ProbeConfig,
    zeta: CouplingStrength,
) -> Result<Complex64> {
    if drive.pump_rate > 0.0 {
        liouvillian::numeric_chi(levels, drive, probe, zeta)
    } else {
        chi_closed_form(levels, drive, probe.delta_b, zeta)
    }
}

/// Local-field corrected permittivity at the lattice-site density peak.
pub fn peak_permittivity(
    levels: &LevelScheme,
    drive: &DriveConfig,
    probe: &ProbeConfig,
    zeta: CouplingStrength,
) -> Result<Complex64> {
    let chi = susceptibility(levels, drive, probe, zeta)?;
    Ok(epsilon_at(local_field(chi)?))
}

/// Tuning of the lossless operating-point search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatingPointSearch {
    /// Probe detuning interval (γ0).
    pub window: (f64, f64),
    /// Upper end of the pump bracket (γ0).
    pub max_pump: f64,
    /// Coarse detuning samples before golden-section refinement.
    pub coarse_points: usize,
    /// Pump samples used to bracket and verify monotonicity.
    pub pump_samples: usize,
    pub omega_b: f64,
}

impl OperatingPointSearch {
    pub const DEFAULT_HALF_WIDTH: f64 = 0.0025;

    /// Window of ±`half_width` around the two-photon resonance of `drive`.
    pub fn around_two_photon(drive: &DriveConfig, half_width: f64) -> Self {
        let c = drive.two_photon_resonance();
        Self {
            window: (c - half_width, c + half_width),
            max_pump: 0.1,
            coarse_points: 41,
            pump_samples: 40,
            omega_b: ProbeConfig::DEFAULT_OMEGA_B,
        }
    }
}

impl Default for OperatingPointSearch {
    fn default() -> Self {
        Self::around_two_photon(&DriveConfig::default(), Self::DEFAULT_HALF_WIDTH)
    }
}

/// Lossless negative-permittivity point (Δ_b*, Λ*, ε*).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub delta_b: f64,
    pub pump_rate: f64,
    pub epsilon: Complex64,
    pub chi: Complex64,
}

fn pumped_epsilon(
    levels: &LevelScheme,
    drive: &DriveConfig,
    delta_b: f64,
    pump: f64,
    zeta: CouplingStrength,
    omega_b: f64,
) -> Result<(Complex64, Complex64)> {
    let probe = ProbeConfig { delta_b, omega_b };
    let chi = liouvillian::numeric_chi(levels, &drive.with_pump(pump), &probe, zeta)?;
    Ok((chi, epsilon_at(local_field(chi)?)))
}

/// Pump rate nulling Im ε at fixed probe detuning, if one exists in
/// `[0, max_pump]`.
///
/// The pump grid is quadratic so the low-Λ end is resolved finely. Im ε is
/// checked to fall monotonically on the samples below the bracket before
/// bisecting; a non-monotone response is reported as "no lossless pump".
pub fn lossless_pump(
    levels: &LevelScheme,
    drive: &DriveConfig,
    delta_b: f64,
    zeta: CouplingStrength,
    search: &OperatingPointSearch,
) -> Result<Option<(f64, Complex64, Complex64)>> {
    let eval = |pump: f64| pumped_epsilon(levels, drive, delta_b, pump, zeta, search.omega_b);
    let (chi0, eps0) = eval(0.0)?;
    if eps0.im.abs() < LOSSLESS_TOLERANCE {
        return Ok(Some((0.0, chi0, eps0)));
    }
    if eps0.im < 0.0 {
        return Ok(None);
    }
    let n = search.pump_samples.max(2);
    let mut prev = (0.0, eps0.im);
    let mut bracket = None;
    for k in 1..=n {
        let x = k as f64 / n as f64;
        let pump = search.max_pump * x * x;
        let (chi, eps) = eval(pump)?;
        if eps.im.abs() < LOSSLESS_TOLERANCE {
            return Ok(Some((pump, chi, eps)));
        }
        if eps.im < 0.0 {
            bracket = Some((prev.0, pump));
            break;
        }
        if eps.im > prev.1 {
            return Ok(None);
        }
        prev = (pump, eps.im);
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(None);
    };
    let mut best = eval(hi)?;
    let mut best_pump = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (chi, eps) = eval(mid)?;
        if eps.im.abs() < best.1.im.abs() {
            best = (chi, eps);
            best_pump = mid;
        }
        if eps.im.abs() < 0.01 * LOSSLESS_TOLERANCE || hi - lo < 1e-17 {
            break;
        }
        if eps.im > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.1.im.abs() < LOSSLESS_TOLERANCE {
        Ok(Some((best_pump, best.0, best.1)))
    } else {
        Ok(None)
    }
}

/// Finds the probe detuning and pump rate where Im ε vanishes with the most
/// negative Re ε inside the search window.
///
/// A coarse detuning scan brackets the best lossless point, after which a
/// golden-section search refines Δ_b; every objective evaluation bisects the
/// pump at fixed Δ_b through the steady-state oracle.
pub fn find_operating_point(
    levels: &LevelScheme,
    drive: &DriveConfig,
    zeta: CouplingStrength,
    search: &OperatingPointSearch,
) -> Result<OperatingPoint> {
    levels.validate()?;
    drive.validate()?;
    let (lo, hi) = search.window;
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("empty search window [{lo}, {hi}]")));
    }
    let objective = |delta_b: f64| -> Result<Option<OperatingPoint>> {
        let found = match lossless_pump(levels, drive, delta_b, zeta, search) {
            Ok(found) => found,
            Err(Error::DegenerateSteadyState { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(found.map(|(pump_rate, chi, epsilon)| OperatingPoint {
            delta_b,
            pump_rate,
            epsilon,
            chi,
        }))
    };
    let score = |p: &Option<OperatingPoint>| p.map_or(f64::INFINITY, |p| p.epsilon.re);

    let n = search.coarse_points.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best: Option<(usize, OperatingPoint)> = None;
    for k in 0..n {
        let x = lo + step * k as f64;
        if let Some(p) = objective(x)? {
            if best.map_or(true, |(_, b)| p.epsilon.re < b.epsilon.re) {
                best = Some((k, p));
            }
        }
    }
    let Some((k, coarse)) = best else {
        return Err(Error::NoLosslessPoint(format!(
            "no pump in [0, {}] nulls Im eps anywhere in [{lo}, {hi}]",
            search.max_pump
        )));
    };

    // Golden-section on the neighbouring cells.
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = (lo + step * (k as f64 - 1.0)).max(lo);
    let mut b = (lo + step * (k as f64 + 1.0)).min(hi);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut pc = objective(c)?;
    let mut pd = objective(d)?;
    let mut refined = coarse;
    while b - a > 1e-9 {
        if score(&pc) < score(&pd) {
            b = d;
            d = c;
            pd = pc;
            c = b - invphi * (b - a);
            pc = objective(c)?;
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + invphi * (b - a);
            pd = objective(d)?;
        }
        for p in [pc, pd].into_iter().flatten() {
            if p.epsilon.re < refined.epsilon.re {
                refined = p;
            }
        }
    }
    if refined.epsilon.re >= 0.0 {
        return Err(Error::NoLosslessPoint(format!(
            "lossless points in window all have Re eps >= 0 (best {})",
            refined.epsilon.re
        )));
    }
    Ok(refined)
}
