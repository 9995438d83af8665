//! Spectral checks of the `S^2` diagonal law: the hemisphere transform, the Fourier
//! transform of the `sech^3` law, the sine product, and the function `F(rho)` of the
//! conjectured `B_1` law.

use std::f64::consts::PI;

use serde::Serialize;

use super::quad::Quadrature;
use crate::error::{Error, Result};
use crate::C64;

use super::density::sech;

fn quad() -> Quadrature {
    Quadrature { abs_tol: 1e-13, rel_tol: 1e-13, max_intervals: 20_000 }
}

/// `integral_0^1 t^{-2 i lambda} dt` by quadrature in `t = e^{-u}`, which turns the
/// oscillation at `t = 0` into a decaying exponential.
pub fn diag_transform_s2(lambda: f64) -> Result<C64> {
    Ok(quad().integrate_to_infinity(|u: f64| C64::from_polar((-u).exp(), 2.0 * lambda * u), 0.0)?.value)
}

/// Closed form of the hemisphere transform, `1/(1 - 2 i lambda)`.
pub fn diag_transform_s2_exact(lambda: f64) -> C64 {
    C64::new(1.0, -2.0 * lambda).inv()
}

/// Transform of the diagonal law `sech^3(2x) cosh^2(2x) dx / Z`:
/// `(1/(1 - i lambda)) integral e^{2x(1 - i lambda)} sech^3(2x) cosh^2(2x) sech(2x) dx / Z`,
/// with `Z = integral sech(2x) dx`.
pub fn diag_fourier_transform(lambda: f64) -> Result<C64> {
    let q = quad();
    let normalizer = q.integrate_line(|x: f64| sech(2.0 * x), 0.0)?.value;
    let s = C64::new(1.0, -lambda);
    // sech^3 cosh^2 sech = sech^2; combined with e^{2xs} in log form so nothing overflows.
    let integral = q.integrate_line(|x: f64| (s * 2.0 * x - 2.0 * log_cosh(2.0 * x)).exp(), 0.0)?.value;
    Ok(integral / (s * normalizer))
}

fn log_cosh(y: f64) -> f64 {
    y.abs() + (-2.0 * y.abs()).exp().ln_1p() - std::f64::consts::LN_2
}

/// The sine-product value for `S^2`, `1/sin(pi (1 - i lambda)/2)`.
pub fn diag_fourier_exact(lambda: f64) -> C64 {
    (C64::new(1.0, -lambda) * (PI / 2.0)).sin().inv()
}

/// One row of a transform comparison.
#[derive(Clone, Debug, Serialize)]
pub struct TransformRow {
    pub lambda: f64,
    pub computed: [f64; 2],
    pub reference: [f64; 2],
    pub abs_error: f64,
}

/// Quadrature of the `sech^3` transform against the sine product at each `lambda`.
pub fn sech_cubed_fourier_check(lambdas: &[f64]) -> Result<Vec<TransformRow>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let computed = diag_fourier_transform(lambda)?;
            let root = [RootPair { delta: 1.0, weight: 1.0 }];
            let reference = sine_product(&root, S2_DUAL_COXETER, lambda);
            Ok(row(lambda, computed, reference))
        })
        .collect()
}

/// Quadrature of the hemisphere transform against `1/(1 - 2 i lambda)` at each `lambda`.
pub fn hemisphere_check(lambdas: &[f64]) -> Result<Vec<TransformRow>> {
    lambdas.iter().map(|&l| Ok(row(l, diag_transform_s2(l)?, diag_transform_s2_exact(l)))).collect()
}

fn row(lambda: f64, computed: C64, reference: C64) -> TransformRow {
    TransformRow {
        lambda,
        computed: [computed.re, computed.im],
        reference: [reference.re, reference.im],
        abs_error: (computed - reference).norm(),
    }
}

/// Pairing of one positive root with `delta` and with the spectral direction.
#[derive(Clone, Copy, Debug)]
pub struct RootPair {
    /// `<delta, alpha>`.
    pub delta: f64,
    /// `<lambda_hat, alpha>` for the unit spectral direction.
    pub weight: f64,
}

/// Dual Coxeter normalizer of the `S^2` root data.
pub const S2_DUAL_COXETER: f64 = 2.0;

/// `prod sin((pi/g) <delta, alpha>) / sin((pi/g) <delta - i lambda, alpha>)` over the roots.
pub fn sine_product(roots: &[RootPair], dual_coxeter: f64, lambda: f64) -> C64 {
    let k = PI / dual_coxeter;
    roots
        .iter()
        .map(|r| C64::new(k * r.delta, 0.0).sin() / C64::new(k * r.delta, -k * lambda * r.weight).sin())
        .product()
}

/// `F(rho) = integral_0^inf rho (rho + (x-1)^2/x)^{-3/2} dx`, evaluated in `u = (x-1)/sqrt(rho)`
/// as `integral (1 + u^2/(1 + sqrt(rho) u))^{-3/2} du` over `u > -1/sqrt(rho)`.
pub fn f_rho(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidInput(format!("F(rho) needs rho > 0, got {rho}")));
    }
    let r = rho.sqrt();
    let f = |u: f64| {
        let x = 1.0 + r * u;
        if x <= 0.0 {
            return 0.0;
        }
        (1.0 + u * u / x).powf(-1.5)
    };
    let q = Quadrature { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 20_000 };
    let lower = -1.0 / r;
    let mut total = q.integrate(f, lower.max(-1.0), 0.0)?.value + q.integrate_to_infinity(f, 0.0)?.value;
    if lower < -1.0 {
        // u = -1/v on [lower, -1].
        total += q.integrate(|v: f64| if v <= 0.0 { 0.0 } else { f(-1.0 / v) / (v * v) }, -1.0 / lower, 1.0)?.value;
    }
    Ok(total)
}

/// `F(rho)` straight from the definition in `x`, split at the peak `x = 1`.
pub fn f_rho_direct(rho: f64) -> Result<f64> {
    let f = |x: f64| if x <= 0.0 { 0.0 } else { rho * (rho + (x - 1.0).powi(2) / x).powf(-1.5) };
    let q = Quadrature { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 20_000 };
    Ok(q.integrate(f, 0.0, 1.0)?.value + q.integrate_to_infinity(f, 1.0)?.value)
}

/// Limit of `F` at `0+`: `integral (1 + u^2)^{-3/2} du`.
pub fn f_rho_limit() -> Result<f64> {
    Ok(quad().integrate_line(|u: f64| (1.0 + u * u).powf(-1.5), 0.0)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hemisphere_transform_matches_closed_form() {
        assert!((diag_transform_s2(0.0).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
        for lambda in [0.5, 1.0, 2.0] {
            let err = (diag_transform_s2(lambda).unwrap() - diag_transform_s2_exact(lambda)).norm();
            assert!(err < 1e-10, "lambda {lambda}: {err:e}");
        }
    }

    #[test]
    fn sech_cubed_transform_matches_sine_product() {
        for r in sech_cubed_fourier_check(&[0.0, 0.5, 1.0, 2.0]).unwrap() {
            assert!(r.abs_error < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn sine_product_reduces_for_s2() {
        let root = [RootPair { delta: 1.0, weight: 1.0 }];
        for lambda in [0.0, 0.7, 3.0] {
            let v = sine_product(&root, S2_DUAL_COXETER, lambda);
            assert!((v - diag_fourier_exact(lambda)).norm() < 1e-14);
        }
        assert!((sine_product(&[], 2.0, 1.0) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn f_rho_two_schemes_agree() {
        for rho in [0.5, 1.0, 2.0] {
            let a = f_rho(rho).unwrap();
            let b = f_rho_direct(rho).unwrap();
            assert!((a - b).abs() < 1e-8, "rho {rho}: {a} vs {b}");
        }
    }

    #[test]
    fn f_rho_limit_and_growth() {
        assert!((f_rho_limit().unwrap() - 2.0).abs() < 1e-10);
        assert!((f_rho(1e-14).unwrap() - 2.0).abs() < 1e-6);
        // F grows like 2 sqrt(rho): it increases and rho F(rho) does not settle.
        assert!(f_rho(0.5).unwrap() < f_rho(1.0).unwrap());
        assert!(f_rho(1.0).unwrap() < f_rho(2.0).unwrap());
        let ratio = f_rho(1e8).unwrap() / 1e4;
        assert!((ratio - 2.0).abs() < 1e-2, "{ratio}");
        assert!(matches!(f_rho(0.0), Err(Error::InvalidInput(_))));
    }
}
