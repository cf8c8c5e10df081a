//! Spontaneous decay of a z-oriented dipole in a vacuum gap between two
//! finite slab stacks, and the resulting branching ratio.
//!
//! s = k_∥/k0 and w = sqrt(1 − s²) with Im w ≥ 0. Distances are in λ_b.

use std::cell::Cell;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{slab_matrix, TransferMatrix, K0};
use crate::error::{Error, Result};
use crate::lattice::{PermittivityProfile, Slab};
use crate::quadrature::integrate;

/// Slabs closer than this to vacuum count as part of the emitter gap.
pub const VACUUM_LIKE: f64 = 1e-6;

/// Multiple-reflection denominator floor.
pub const RESONANCE_FLOOR: f64 = 1e-10;

const NODE_SHIFT: f64 = 1e-6;

/// Normal wavenumber w(s) on the decaying branch.
pub fn normal_wavenumber(s: f64) -> Complex64 {
    let w = Complex64::new(1.0 - s * s, 0.0).sqrt();
    if w.im < 0.0 {
        -w
    } else {
        w
    }
}

/// One side of the emitter: the slabs in order of increasing distance from
/// the emitter, repeated `periods` times beyond an optional leading part.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayStack {
    /// Slabs between the gap and the first full repeat.
    pub lead: Vec<Slab>,
    /// One period, ordered outward.
    pub unit: Vec<Slab>,
    /// Number of full repeats after `lead`.
    pub repeats: usize,
}

impl DecayStack {
    pub fn uniform(unit: Vec<Slab>, repeats: usize) -> Self {
        Self {
            lead: Vec::new(),
            unit,
            repeats,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lead.is_empty() && (self.unit.is_empty() || self.repeats == 0)
    }
}

fn normalized_product(slabs: &[Slab], s: f64) -> TransferMatrix {
    let mut acc = TransferMatrix::identity();
    for slab in slabs {
        acc = acc.then(&slab_matrix(slab, s));
        let scale = acc.0.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale > 1e100 || (scale < 1e-100 && scale > 0.0) {
            acc.0 /= Complex64::new(scale, 0.0);
        }
    }
    acc
}

fn admittance_step(m: &TransferMatrix, y: Complex64) -> Complex64 {
    let m = &m.0;
    (m[(1, 0)] + m[(1, 1)] * y) / (m[(0, 0)] + m[(0, 1)] * y)
}

/// p-polarized amplitude reflection of a stack backed by vacuum, seen from
/// vacuum at transverse wavevector `s`.
///
/// The surface admittance is propagated inward from the far vacuum one
/// period at a time; scaling a matrix leaves the Möbius map unchanged, so
/// the products are renormalized to keep deep evanescent stacks finite.
pub fn stack_reflection(stack: &DecayStack, s: f64) -> Complex64 {
    let w = normal_wavenumber(s);
    if stack.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let mut y = w;
    if stack.repeats > 0 && !stack.unit.is_empty() {
        let unit = normalized_product(&stack.unit, s);
        for _ in 0..stack.repeats {
            y = admittance_step(&unit, y);
        }
    }
    if !stack.lead.is_empty() {
        y = admittance_step(&normalized_product(&stack.lead, s), y);
    }
    (w - y) / (w + y)
}

/// Reflection of a profile repeated `num_periods` times.
pub fn profile_reflection(profile: &PermittivityProfile, num_periods: usize, s: f64) -> Complex64 {
    stack_reflection(&DecayStack::uniform(profile.slabs.clone(), num_periods), s)
}

/// Normalized decay rate with its split and quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRate {
    pub gamma: f64,
    /// Free-space term plus the s < 1 contribution.
    pub propagating: f64,
    /// s > 1 contribution.
    pub evanescent: f64,
    pub error: f64,
}

/// Quadrature tolerances for the decay integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayTolerance {
    pub absolute: f64,
    pub tail: f64,
    pub max_segments: usize,
}

impl Default for DecayTolerance {
    fn default() -> Self {
        Self {
            absolute: 1e-8,
            tail: 1e-10,
            max_segments: 4000,
        }
    }
}

/// Gaps d± and reflectors r±(s) for the two sides of the emitter.
pub fn decay_rate_from_reflections<RP, RM>(
    r_plus: RP,
    r_minus: RM,
    d_plus: f64,
    d_minus: f64,
    tol: &DecayTolerance,
) -> Result<DecayRate>
where
    RP: Fn(f64) -> Complex64,
    RM: Fn(f64) -> Complex64,
{
    if !(d_plus > 0.0 && d_minus > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "vacuum gaps must be > 0, got {d_plus} and {d_minus}"
        )));
    }
    let failure: Cell<Option<Error>> = Cell::new(None);
    let kernel = |s: f64, w: Complex64| -> Option<Complex64> {
        let i2k = Complex64::new(0.0, 2.0 * K0) * w;
        let ap = r_plus(s) * (i2k * d_plus).exp();
        let am = r_minus(s) * (i2k * d_minus).exp();
        let den = 1.0 - ap * am;
        if den.norm() < RESONANCE_FLOOR {
            return None;
        }
        Some((ap + am + 2.0 * ap * am) / den)
    };
    // Propagating part with s = sin θ: s³/w ds = sin³θ dθ.
    let prop = |theta: f64| -> Complex64 {
        let eval = |th: f64| kernel(th.sin(), Complex64::new(th.cos(), 0.0)).map(|g| th.sin().powi(3) * g);
        eval(theta).or_else(|| eval(theta + NODE_SHIFT)).unwrap_or_else(|| {
            failure.set(Some(Error::ResonantDenominator { s: theta.sin() }));
            Complex64::new(0.0, 0.0)
        })
    };
    // Evanescent part with s = cosh u: s³/w ds = −i cosh³u du.
    let evan = |u: f64| -> Complex64 {
        let eval = |u: f64| {
            kernel(u.cosh(), Complex64::new(0.0, u.sinh())).map(|g| Complex64::new(0.0, -u.cosh().powi(3)) * g)
        };
        eval(u).or_else(|| eval(u + NODE_SHIFT)).unwrap_or_else(|| {
            failure.set(Some(Error::ResonantDenominator { s: u.cosh() }));
            Complex64::new(0.0, 0.0)
        })
    };
    let check = |f: &Cell<Option<Error>>| match f.take() {
        Some(e) => Err(e),
        None => Ok(()),
    };

    let p = integrate(prop, 0.0, std::f64::consts::FRAC_PI_2, tol.absolute, 0.0, tol.max_segments)?;
    check(&failure)?;

    // Chunks in u until the exponentially damped tail is negligible.
    let d_min = d_plus.min(d_minus);
    let mut e_value = Complex64::new(0.0, 0.0);
    let mut e_error = 0.0;
    let mut u0 = 0.0;
    let width = 0.5;
    loop {
        let chunk = integrate(&evan, u0, u0 + width, tol.absolute, 0.0, tol.max_segments)?;
        check(&failure)?;
        e_value += chunk.value;
        e_error += chunk.error;
        u0 += width;
        let decaying = (2.0 * K0 * d_min * u0.sinh()) > 3.0 * u0.cosh().ln() + 10.0;
        if decaying && chunk.value.norm() < tol.tail {
            break;
        }
        if u0 > 60.0 {
            return Err(Error::QuadratureNotConverged {
                estimate: chunk.value.norm(),
                tolerance: tol.tail,
            });
        }
    }
    let propagating = 1.0 + 1.5 * p.value.re;
    let evanescent = 1.5 * e_value.re;
    Ok(DecayRate {
        gamma: propagating + evanescent,
        propagating,
        evanescent,
        error: 1.5 * (p.error + e_error),
    })
}

/// Analytic decay rate of a z-dipole at distance `d` from a perfect mirror.
pub fn perfect_mirror_decay(d: f64) -> f64 {
    let x = 2.0 * K0 * d;
    1.0 - 3.0 * (x.cos() / (x * x) - x.sin() / (x * x * x))
}

/// Emitter placement inside the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DipoleContext {
    /// Offset inside the host period as a fraction of the period, in [0, 1).
    pub position: f64,
    pub stack_left: usize,
    pub stack_right: usize,
    /// Vacuum ratio γ3/γ2 of the two transitions.
    pub bare_ratio: f64,
}

impl DipoleContext {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.position) {
            return Err(Error::InvalidParameter(format!("position must lie in [0, 1), got {}", self.position)));
        }
        if self.stack_left < 1 || self.stack_right < 1 {
            return Err(Error::InvalidParameter("stack counts must be >= 1".into()));
        }
        if !(self.bare_ratio > 0.0) {
            return Err(Error::InvalidParameter("bare_ratio must be > 0".into()));
        }
        Ok(())
    }
}

impl Default for DipoleContext {
    fn default() -> Self {
        Self {
            position: 0.0,
            stack_left: 8,
            stack_right: 8,
            bare_ratio: 1.0,
        }
    }
}

/// Emitter gap widths and the stacks on either side.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleSpacing {
    pub d_plus: f64,
    pub d_minus: f64,
    pub right: DecayStack,
    pub left: DecayStack,
}

fn split_host(profile: &PermittivityProfile, z: f64) -> Result<(Vec<Slab>, Vec<Slab>, Slab)> {
    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut start = 0.0;
    let mut host = None;
    for slab in &profile.slabs {
        let end = start + slab.thickness;
        if end <= z {
            before.push(*slab);
        } else if start >= z {
            after.push(*slab);
        } else {
            host = Some(*slab);
            before.push(Slab { thickness: z - start, ..*slab });
            after.push(Slab { thickness: end - z, ..*slab });
        }
        start = end;
    }
    // At a slab boundary the host is the slab that starts there.
    let host = host.or_else(|| after.first().copied()).unwrap_or(profile.slabs[0]);
    Ok((before, after, host))
}

fn peel_gap(slabs: &mut Vec<Slab>) -> f64 {
    let n = slabs.iter().take_while(|s| s.vacuum_deviation() < VACUUM_LIKE).count();
    slabs.drain(..n).map(|s| s.thickness).sum()
}

/// Splits the lattice at the emitter into two outward-ordered stacks and
/// vacuum gaps.
pub fn dipole_spacing(context: &DipoleContext, profile: &PermittivityProfile) -> Result<DipoleSpacing> {
    context.validate()?;
    let period = profile.period();
    let z = context.position * period;
    let (before, after, host) = split_host(profile, z)?;
    let last_before = before.last().copied().unwrap_or(*profile.slabs.last().expect("nonempty"));
    for slab in [host, last_before] {
        if slab.vacuum_deviation() >= VACUUM_LIKE {
            return Err(Error::DipoleInsideMedium {
                position: context.position,
                deviation: slab.vacuum_deviation(),
            });
        }
    }
    let unit_right = profile.slabs.clone();
    let unit_left: Vec<Slab> = profile.slabs.iter().rev().copied().collect();

    // Right: rest of the host period, then stack_right − 1 full periods.
    // Left: the host part before z (reversed), then stack_left full periods.
    let mut lead_right = after;
    let mut lead_left: Vec<Slab> = before.into_iter().rev().collect();
    let mut d_plus = peel_gap(&mut lead_right);
    let mut d_minus = peel_gap(&mut lead_left);
    let mut right = DecayStack {
        lead: lead_right,
        unit: unit_right.clone(),
        repeats: context.stack_right - 1,
    };
    let mut left = DecayStack {
        lead: lead_left,
        unit: unit_left.clone(),
        repeats: context.stack_left,
    };
    // If a lead was pure gap, the gap continues into the next period.
    for (stack, d) in [(&mut right, &mut d_plus), (&mut left, &mut d_minus)] {
        if stack.lead.is_empty() && stack.repeats > 0 {
            let mut first = stack.unit.clone();
            *d += peel_gap(&mut first);
            stack.lead = first;
            stack.repeats -= 1;
        }
    }
    if !(d_plus > 0.0 && d_minus > 0.0) {
        return Err(Error::DipoleInsideMedium {
            position: context.position,
            deviation: host.vacuum_deviation().max(last_before.vacuum_deviation()),
        });
    }
    Ok(DipoleSpacing {
        d_plus,
        d_minus,
        right,
        left,
    })
}

/// γ_zz/γ0 of an emitter at `context.position` inside the finite lattice.
pub fn decay_rate_z(context: &DipoleContext, profile: &PermittivityProfile, tol: &DecayTolerance) -> Result<DecayRate> {
    let sp = dipole_spacing(context, profile)?;
    decay_rate_from_reflections(
        |s| stack_reflection(&sp.right, s),
        |s| stack_reflection(&sp.left, s),
        sp.d_plus,
        sp.d_minus,
        tol,
    )
}

/// ξ = γ3/γ2 with γ2 at its vacuum value.
pub fn branching_ratio(
    context: &DipoleContext,
    profile: &PermittivityProfile,
    tol: &DecayTolerance,
) -> Result<(f64, DecayRate)> {
    let rate = decay_rate_z(context, profile, tol)?;
    Ok((context.bare_ratio * rate.gamma, rate))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchingPoint {
    pub omega_a: f64,
    pub xi: f64,
    pub gamma3: f64,
    pub quadrature_error: f64,
}

/// Runs `row` for every Ω_a concurrently and keeps grid order.
pub fn scan_branching<F>(grid: &[f64], row: F) -> Vec<Result<BranchingPoint>>
where
    F: Fn(f64) -> Result<(f64, DecayRate)> + Sync,
{
    grid.par_iter()
        .map(|&omega_a| {
            row(omega_a).map(|(xi, rate)| BranchingPoint {
                omega_a,
                xi,
                gamma3: rate.gamma,
                quadrature_error: rate.error,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_profile, LatticeGeometry};

    fn zero(_: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn vacuum_limit() {
        let r = decay_rate_from_reflections(zero, zero, 0.1, 0.1, &DecayTolerance::default()).unwrap();
        assert!((r.gamma - 1.0).abs() < 1e-8);
    }

    #[test]
    fn perfect_mirror_matches_image_dipole() {
        for d in [0.05, 0.1, 0.27, 0.6] {
            let r = decay_rate_from_reflections(|_| Complex64::new(1.0, 0.0), zero, d, 1.0, &DecayTolerance::default())
                .unwrap();
            assert!((r.gamma - perfect_mirror_decay(d)).abs() < 1e-4, "d={d}: {} vs {}", r.gamma, perfect_mirror_decay(d));
        }
    }

    #[test]
    fn thick_uniform_stack_reproduces_fresnel() {
        let eps = Complex64::new(2.0, 0.5);
        let stack = DecayStack::uniform(vec![Slab::isotropic(20.0, eps)], 1);
        for s in [0.0, 0.3, 0.9, 1.5] {
            let w = normal_wavenumber(s);
            let w2 = (eps - s * s).sqrt();
            let fresnel = (eps * w - w2) / (eps * w + w2);
            assert!((stack_reflection(&stack, s) - fresnel).norm() < 1e-8);
        }
    }

    #[test]
    fn vacuum_stack_does_not_reflect() {
        let stack = DecayStack::uniform(PermittivityProfile::vacuum(0.25, 8).slabs, 4);
        assert!(stack_reflection(&stack, 0.4).norm() < 1e-14);
        assert!(stack_reflection(&stack, 2.0).norm() < 1e-12);
    }

    #[test]
    fn gaps_cover_vacuum_between_humps() {
        let geom = LatticeGeometry::default();
        let p = build_profile(&geom, Complex64::new(-3.0, 0.1)).unwrap();
        let sp = dipole_spacing(&DipoleContext::default(), &p).unwrap();
        assert!((sp.d_plus - sp.d_minus).abs() < 1e-15);
        assert!(sp.d_plus > 0.0 && sp.d_plus < 0.125);
        assert_eq!(sp.right.repeats + 1, 8);
        assert_eq!(sp.left.repeats + 1, 8);
    }

    #[test]
    fn dipole_in_hump_is_rejected() {
        let geom = LatticeGeometry::default();
        let p = build_profile(&geom, Complex64::new(-3.0, 0.1)).unwrap();
        let ctx = DipoleContext {
            position: 0.5,
            ..DipoleContext::default()
        };
        assert_eq!(dipole_spacing(&ctx, &p).unwrap_err().kind(), "DipoleInsideMedium");
    }

    #[test]
    fn left_right_exchange_is_symmetric() {
        let geom = LatticeGeometry {
            slabs_per_period: 32,
            ..LatticeGeometry::default()
        };
        let p = build_profile(&geom, Complex64::new(-1.0, 0.3)).unwrap();
        let sp = dipole_spacing(&DipoleContext::default(), &p).unwrap();
        let tol = DecayTolerance::default();
        let a = decay_rate_from_reflections(
            |s| stack_reflection(&sp.right, s),
            |s| stack_reflection(&sp.left, s),
            sp.d_plus,
            sp.d_minus,
            &tol,
        )
        .unwrap();
        let b = decay_rate_from_reflections(
            |s| stack_reflection(&sp.left, s),
            |s| stack_reflection(&sp.right, s),
            sp.d_minus,
            sp.d_plus,
            &tol,
        )
        .unwrap();
        assert!((a.gamma - b.gamma).abs() < 1e-12);
    }

    #[test]
    fn bad_context_is_rejected() {
        let ctx = DipoleContext {
            stack_left: 0,
            ..DipoleContext::default()
        };
        assert!(ctx.validate().is_err());
        let ctx = DipoleContext {
            position: 1.0,
            ..DipoleContext::default()
        };
        assert!(ctx.validate().is_err());
    }
}
