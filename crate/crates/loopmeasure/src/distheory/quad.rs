//! Adaptive Gauss-Kronrod 7-15 quadrature.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::C64;

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
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Integrand values the rule can accumulate: real or complex.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Tolerances of the adaptive scheme. Converged when the summed error estimate is
/// below `max(abs_tol, rel_tol |value|)`.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { abs_tol: 1e-10, rel_tol: 1e-13, max_intervals: 20_000 }
    }
}

/// Value and estimated absolute error.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
}

fn gk15<V: QuadValue>(f: &impl Fn(f64) -> V, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + pair * WG[i / 2];
        }
    }
    let k = kronrod * half;
    let err = ((kronrod - gauss) * half).magnitude();
    (k, err)
}

impl Quadrature {
    /// Integrates over `[a, b]`, bisecting the interval with the largest error estimate.
    pub fn integrate<V: QuadValue>(&self, f: impl Fn(f64) -> V, a: f64, b: f64) -> Result<QuadResult<V>> {
        if a == b {
            return Ok(QuadResult { value: V::zero(), error: 0.0 });
        }
        let (v, e) = gk15(&f, a, b);
        let mut pieces = vec![(a, b, v, e)];
        loop {
            let mut value = V::zero();
            let mut error = 0.0;
            let mut worst = 0;
            for (i, p) in pieces.iter().enumerate() {
                value = value + p.2;
                error += p.3;
                if p.3 > pieces[worst].3 {
                    worst = i;
                }
            }
            if !error.is_finite() || value.magnitude().is_nan() {
                return Err(Error::QuadratureNonconvergent { error: f64::INFINITY });
            }
            if error <= self.abs_tol.max(self.rel_tol * value.magnitude()) {
                return Ok(QuadResult { value, error });
            }
            if pieces.len() >= self.max_intervals {
                return Err(Error::QuadratureNonconvergent { error });
            }
            let (lo, hi, _, _) = pieces.swap_remove(worst);
            let mid = 0.5 * (lo + hi);
            let (v1, e1) = gk15(&f, lo, mid);
            let (v2, e2) = gk15(&f, mid, hi);
            pieces.push((lo, mid, v1, e1));
            pieces.push((mid, hi, v2, e2));
        }
    }

    /// Integrates over `[a, inf)` through `x = a + (t/(1-t))^2`, which also tames
    /// algebraic tails down to `x^{-3/2}`.
    pub fn integrate_to_infinity<V: QuadValue>(&self, f: impl Fn(f64) -> V, a: f64) -> Result<QuadResult<V>> {
        self.integrate(
            |t| {
                if t >= 1.0 {
                    return V::zero();
                }
                let s = t / (1.0 - t);
                let jac = 2.0 * s / ((1.0 - t) * (1.0 - t));
                if jac == 0.0 {
                    return V::zero();
                }
                f(a + s * s) * jac
            },
            0.0,
            1.0,
        )
    }

    /// Integrates over the real line as two half-lines split at `split`.
    pub fn integrate_line<V: QuadValue>(&self, f: impl Fn(f64) -> V, split: f64) -> Result<QuadResult<V>> {
        let right = self.integrate_to_infinity(&f, split)?;
        let left = self.integrate_to_infinity(|x| f(2.0 * split - x), split)?;
        Ok(QuadResult { value: right.value + left.value, error: right.error + left.error })
    }
}

/// `integral_a^b f` at the default tolerances.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    Ok(Quadrature::default().integrate(f, a, b)?.value)
}

/// `integral_a^inf f` at the default tolerances.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64) -> Result<f64> {
    Ok(Quadrature::default().integrate_to_infinity(f, a)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x.powi(20) - 3.0 * x.powi(7), -1.0, 2.0).unwrap();
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn algebraic_tail_converges() {
        // integral_0^inf (1 + x)^{-3/2} dx = 2.
        let v = integrate_to_infinity(|x| (1.0 + x).powf(-1.5), 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let g = Quadrature::default().integrate_line(|x: f64| (-x * x).exp(), 0.0).unwrap();
        assert!((g.value - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn complex_oscillation() {
        // integral_0^inf e^{-u} e^{2 i u} du = 1/(1 - 2i).
        let v = Quadrature::default().integrate_to_infinity(|u| C64::from_polar((-u).exp(), 2.0 * u), 0.0).unwrap();
        assert!((v.value - C64::new(1.0, -2.0).inv()).norm() < 1e-10);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let q = Quadrature { max_intervals: 4, ..Default::default() };
        assert!(matches!(q.integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0), Err(Error::QuadratureNonconvergent { .. })));
    }
}
