//! Independent steady-state oracle: full Lindblad master equation of the
//! four-level atom, solved for its kernel in vectorized (column-stacked) form.
//!
//! Basis ordering is (|a⟩, |b⟩, |c⟩, |d⟩). vec(ρ)[i + 4j] = ρ[i, j].

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;

use crate::atomic_response::{CouplingStrength, DriveConfig, LevelScheme, ProbeConfig};
use crate::error::{Error, Result};

pub const A: usize = 0;
pub const B: usize = 1;
pub const C: usize = 2;
pub const D: usize = 3;

/// Relative singular-value threshold separating the kernel from the rest.
pub const KERNEL_THRESHOLD: f64 = 1e-8;

/// Halving tolerance of the probe-linearity check.
pub const LINEARITY_TOLERANCE: f64 = 1e-6;

pub type Operator = Matrix4<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ket_bra(i: usize, j: usize) -> Operator {
    let mut m = Operator::zeros();
    m[(i, j)] = c(1.0);
    m
}

/// Rotating-frame Hamiltonian (ħ = 1, γ0 units).
pub fn build_hamiltonian(drive: &DriveConfig, probe: &ProbeConfig) -> Operator {
    let mut h = Operator::zeros();
    h[(A, A)] = c(-drive.delta_a);
    h[(B, B)] = c(-(drive.delta_a + probe.delta_b));
    h[(D, D)] = c(-drive.delta_d);
    let couple = |h: &mut Operator, i: usize, j: usize, omega: f64| {
        h[(i, j)] = c(-omega);
        h[(j, i)] = c(-omega);
    };
    couple(&mut h, A, B, probe.omega_b);
    couple(&mut h, C, A, drive.omega_a);
    couple(&mut h, C, D, drive.omega_d);
    h
}

/// Jump operators with their rates: three spontaneous channels plus the pump.
pub fn jump_operators(levels: &LevelScheme, pump_rate: f64) -> [(f64, Operator); 4] {
    [
        (levels.gamma_a, ket_bra(A, C)),
        (levels.gamma_b, ket_bra(B, A)),
        (levels.gamma_d, ket_bra(D, C)),
        (pump_rate, ket_bra(A, B)),
    ]
}

/// Right-hand side of the master equation applied directly to a 4×4 operator.
pub fn master_equation(h: &Operator, jumps: &[(f64, Operator)], rho: &Operator) -> Operator {
    let mut out = (h * rho - rho * h) * (-Complex64::i());
    for (rate, l) in jumps {
        if *rate == 0.0 {
            continue;
        }
        let ld = l.adjoint();
        let ldl = ld * l;
        out += (l * rho * ld) * c(*rate) - (ldl * rho + rho * ldl) * c(rate / 2.0);
    }
    out
}

pub fn vectorize(rho: &Operator) -> DVector<Complex64> {
    DVector::from_iterator(16, rho.iter().copied())
}

pub fn unvectorize(v: &DVector<Complex64>) -> Operator {
    Operator::from_iterator(v.iter().copied())
}

/// 16×16 Liouvillian superoperator, column k = vec of the image of E_{k mod 4, k / 4}.
pub fn build_liouvillian(
    levels: &LevelScheme,
    drive: &DriveConfig,
    probe: &ProbeConfig,
) -> DMatrix<Complex64> {
    let h = build_hamiltonian(drive, probe);
    let jumps = jump_operators(levels, drive.pump_rate);
    let mut l = DMatrix::zeros(16, 16);
    for k in 0..16 {
        let image = master_equation(&h, &jumps, &ket_bra(k % 4, k / 4));
        l.set_column(k, &vectorize(&image));
    }
    l
}

/// Density matrix with trace fixed to one and Hermiticity enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4(pub Operator);

impl DensityMatrix4 {
    fn normalized(mut rho: Operator) -> Self {
        let tr = rho.trace();
        rho /= tr;
        let rho = (rho + rho.adjoint()) * c(0.5);
        Self(rho)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).norm()
    }

    /// Smallest eigenvalue of the Hermitian matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.0 + self.0.adjoint()) * c(0.5);
        herm.symmetric_eigen().eigenvalues.min()
    }

    pub fn populations(&self) -> [f64; 4] {
        [self.0[(0, 0)].re, self.0[(1, 1)].re, self.0[(2, 2)].re, self.0[(3, 3)].re]
    }
}

struct Kernel {
    right: Vec<DVector<Complex64>>,
    left: Vec<DVector<Complex64>>,
}

fn kernel(l: &DMatrix<Complex64>) -> Kernel {
    let svd = l.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    let sigma_max = svd.singular_values.max();
    let mut right = Vec::new();
    let mut left = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= KERNEL_THRESHOLD * sigma_max {
            right.push(v_t.row(k).adjoint());
            left.push(u.column(k).into_owned());
        }
    }
    Kernel { right, left }
}

/// Unique steady state of the Liouvillian.
///
/// Fails with `DegenerateSteadyState` when the kernel is not one-dimensional.
pub fn steady_state(l: &DMatrix<Complex64>) -> Result<DensityMatrix4> {
    let k = kernel(l);
    if k.right.len() != 1 {
        return Err(Error::DegenerateSteadyState {
            dimension: k.right.len(),
        });
    }
    Ok(DensityMatrix4::normalized(unvectorize(&k.right[0])))
}

/// Long-time limit reached from `initial`.
///
/// Equals [`steady_state`] when the kernel is one-dimensional. For a
/// degenerate kernel the initial state is projected onto the kernel along the
/// range of L using the matching left null vectors.
pub fn steady_state_from(l: &DMatrix<Complex64>, initial: &Operator) -> Result<DensityMatrix4> {
    let k = kernel(l);
    match k.right.len() {
        0 => Err(Error::DegenerateSteadyState { dimension: 0 }),
        1 => Ok(DensityMatrix4::normalized(unvectorize(&k.right[0]))),
        n => {
            let v = DMatrix::from_columns(&k.right);
            let u = DMatrix::from_columns(&k.left);
            let gram = u.adjoint() * &v;
            let inv = gram
                .try_inverse()
                .ok_or(Error::DegenerateSteadyState { dimension: n })?;
            let x0 = vectorize(initial);
            let coeffs = inv * (u.adjoint() * x0);
            Ok(DensityMatrix4::normalized(unvectorize(&(v * coeffs))))
        }
    }
}

/// Frobenius norm of the master-equation right-hand side at `rho`, evaluated
/// in operator form rather than through the superoperator.
pub fn residual(
    levels: &LevelScheme,
    drive: &DriveConfig,
    probe: &ProbeConfig,
    rho: &DensityMatrix4,
) -> f64 {
    let h = build_hamiltonian(drive, probe);
    let jumps = jump_operators(levels, drive.pump_rate);
    master_equation(&h, &jumps, &rho.0).norm()
}

/// ζ ρ_ab / Ω_b at one probe strength, starting from the ground state |b⟩.
pub fn raw_chi(
    levels: &LevelScheme,
    drive: &DriveConfig,
    probe: &ProbeConfig,
    zeta: CouplingStrength,
) -> Result<Complex64> {
    if !(probe.omega_b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "probe Rabi frequency must be > 0, got {}",
            probe.omega_b
        )));
    }
    let l = build_liouvillian(levels, drive, probe);
    let rho = steady_state_from(&l, &ket_bra(B, B))?;
    Ok(zeta.value() * rho.get(A, B) / probe.omega_b)
}

fn richardson(
    levels: &LevelScheme,
    drive: &DriveConfig,
    probe: &ProbeConfig,
    zeta: CouplingStrength,
    omega_b: f64,
    coarse: Complex64,
) -> Result<(Complex64, Complex64)> {
    let half = raw_chi(levels, drive, &ProbeConfig { omega_b: omega_b / 2.0, ..*probe }, zeta)?;
    Ok(((4.0 * half - coarse) / 3.0, half))
}

/// Linear-response susceptibility from the steady-state oracle.
///
/// The raw ratio ζ ρ_ab / Ω_b carries an O(Ω_b²) saturation term; one
/// Richardson step over (Ω_b, Ω_b/2) removes it. The result is compared with
/// the extrapolation over (Ω_b/2, Ω_b/4) and rejected as `NonlinearProbe`
/// when they differ by more than [`LINEARITY_TOLERANCE`].
pub fn numeric_chi(
    levels: &LevelScheme,
    drive: &DriveConfig,
    probe: &ProbeConfig,
    zeta: CouplingStrength,
) -> Result<Complex64> {
    let full = raw_chi(levels, drive, probe, zeta)?;
    let (chi, half) = richardson(levels, drive, probe, zeta, probe.omega_b, full)?;
    let (check, _) = richardson(levels, drive, probe, zeta, probe.omega_b / 2.0, half)?;
    let scale = chi.norm().max(1e-12);
    let relative_change = (chi - check).norm() / scale;
    if relative_change > LINEARITY_TOLERANCE {
        return Err(Error::NonlinearProbe {
            omega_b: probe.omega_b,
            relative_change,
        });
    }
    Ok(chi)
}
