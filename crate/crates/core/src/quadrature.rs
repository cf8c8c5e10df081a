//! Fixed Gauss-Legendre and adaptive Gauss-Kronrod (7/15) rules for
//! complex-valued integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Positive abscissae of the 16-point Gauss-Legendre rule on [-1, 1].
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_8,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];

const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_79,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_09,
];

/// 16-point Gauss-Legendre integral of `f` over [a, b].
pub fn gauss_legendre_16<F>(mut f: F, a: f64, b: f64) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, w) in GL16_X.iter().zip(GL16_W.iter()) {
        sum += (f(mid - half * x) + f(mid + half * x)) * *w;
    }
    sum * half
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights on the odd Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod_segment<F>(f: &F, a: f64, b: f64) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).norm())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
}

/// Globally adaptive Gauss-Kronrod integration of `f` over [a, b].
///
/// Bisects the segment with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_segments: usize) -> Result<Integral>
where
    F: Fn(f64) -> Complex64,
{
    if a == b {
        return Ok(Integral {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    let (v, e) = kronrod_segment(&f, a, b);
    let mut segments = vec![(a, b, v, e)];
    loop {
        let value: Complex64 = segments.iter().map(|s| s.2).sum();
        let error: f64 = segments.iter().map(|s| s.3).sum();
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::QuadratureNotConverged {
                estimate: f64::INFINITY,
                tolerance: abs_tol,
            });
        }
        let tolerance = abs_tol.max(rel_tol * value.norm());
        if error <= tolerance {
            return Ok(Integral { value, error });
        }
        if segments.len() >= max_segments {
            return Err(Error::QuadratureNotConverged {
                estimate: error,
                tolerance,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (sa, sb, _, _) = segments.swap_remove(worst);
        let sm = 0.5 * (sa + sb);
        let (v1, e1) = kronrod_segment(&f, sa, sm);
        let (v2, e2) = kronrod_segment(&f, sm, sb);
        segments.push((sa, sm, v1, e1));
        segments.push((sm, sb, v2, e2));
    }
}
