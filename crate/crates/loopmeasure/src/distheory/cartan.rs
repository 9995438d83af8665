//! Cartan and polar coordinates of the `S^2` case, the affine coordinate `zeta`, and
//! finite-difference checks of the invariant volume.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loopalg::InvolutionConfig;
use crate::{Mat64, C64};

const DIV_TOL: f64 = 1e-300;

/// A point `k exp(x h) Theta(k)^{-1}` of `SL(2, C)/SU(1,1)` with `k = (a, b; -conj b, conj a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartanPoint {
    pub a: C64,
    pub b: C64,
    pub x: f64,
}

/// Matrix coordinates `g_0 = (a_0, b_0; -conj b_0, d_0)` with real `a_0, d_0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatrixCoords {
    pub a0: f64,
    pub b0: [f64; 2],
    pub d0: f64,
}

impl MatrixCoords {
    pub fn b0(&self) -> C64 {
        C64::new(self.b0[0], self.b0[1])
    }

    pub fn to_mat(&self) -> Mat64 {
        let b0 = self.b0();
        Mat64::m2(C64::new(self.a0, 0.0), b0, -b0.conj(), C64::new(self.d0, 0.0))
    }

    /// Reads the coordinates of a symmetric `g_0`.
    pub fn from_mat(g: &Mat64) -> Self {
        let b0 = g[(0, 1)];
        MatrixCoords { a0: g[(0, 0)].re, b0: [b0.re, b0.im], d0: g[(1, 1)].re }
    }
}

impl CartanPoint {
    /// Normalizes `(a, b)` onto the unit sphere of `C^2`.
    pub fn new(a: C64, b: C64, x: f64) -> Result<Self> {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if n < 1e-12 || !x.is_finite() {
            return Err(Error::InvalidInput("Cartan point needs (a, b) != 0 and finite x".into()));
        }
        if x.abs() >= 10.0 {
            return Err(Error::InvalidInput(format!("|x| = {} overflows the Cartan map", x.abs())));
        }
        Ok(CartanPoint { a: a / n, b: b / n, x })
    }

    pub fn k(&self) -> Mat64 {
        Mat64::m2(self.a, self.b, -self.b.conj(), self.a.conj())
    }

    /// `zeta = -conj(b)/a`, the affine coordinate of `k`.
    pub fn zeta(&self) -> Result<C64> {
        if self.a.norm() < DIV_TOL {
            return Err(Error::Degenerate("a = 0 puts zeta at infinity"));
        }
        Ok(-self.b.conj() / self.a)
    }
}

/// `a_0 = |a|^2 e^{2x} - |b|^2 e^{-2x}`, `b_0 = ab (e^{2x} + e^{-2x})`,
/// `d_0 = |a|^2 e^{-2x} - |b|^2 e^{2x}`.
pub fn cartan_map(p: &CartanPoint) -> MatrixCoords {
    let (ep, em) = ((2.0 * p.x).exp(), (-2.0 * p.x).exp());
    let (na, nb) = (p.a.norm_sqr(), p.b.norm_sqr());
    let b0 = p.a * p.b * (ep + em);
    MatrixCoords { a0: na * ep - nb * em, b0: [b0.re, b0.im], d0: na * em - nb * ep }
}

/// The Cartan map as a product `k diag(e^{2x}, e^{-2x}) Theta(k)^{-1}`, for cross-checks.
pub fn cartan_product(p: &CartanPoint) -> Mat64 {
    let cfg = InvolutionConfig::<f64>::s2();
    let d = Mat64::diag(&[C64::new((2.0 * p.x).exp(), 0.0), C64::new((-2.0 * p.x).exp(), 0.0)]);
    let k = p.k();
    let theta_inv = cfg.apply(&k).inverse().expect("unitary");
    &(&k * &d) * &theta_inv
}

/// `zeta` from matrix coordinates: `-2 conj(b_0)/(a_0 + d_0 + 2 sqrt(1 + ((a_0 - d_0)/2)^2))`.
pub fn zeta_coordinate(g: &MatrixCoords) -> Result<C64> {
    let den = g.a0 + g.d0 + 2.0 * (1.0 + ((g.a0 - g.d0) / 2.0).powi(2)).sqrt();
    if den.abs() < DIV_TOL {
        return Err(Error::Degenerate("a_0 + d_0 + 2 sqrt(...) vanishes"));
    }
    Ok(g.b0().conj() * (-2.0 / den))
}

/// The same `zeta` written in `a_0` and `b_0` only:
/// `-2 conj(b_0) a_0/(a_0^2 + 1 - |b_0|^2 + sign(a_0) sqrt(4 a_0^2 + (a_0^2 + |b_0|^2 - 1)^2))`.
pub fn zeta_coordinate_alt(g: &MatrixCoords) -> Result<C64> {
    let (a0, nb) = (g.a0, g.b0().norm_sqr());
    if a0.abs() < DIV_TOL {
        return Err(Error::Degenerate("a_0 vanishes"));
    }
    let root = (4.0 * a0 * a0 + (a0 * a0 + nb - 1.0).powi(2)).sqrt();
    let den = a0 * a0 + 1.0 - nb + a0.signum() * root;
    if den.abs() < DIV_TOL {
        return Err(Error::Degenerate("zeta denominator vanishes"));
    }
    Ok(g.b0().conj() * (-2.0 * a0 / den))
}

/// Entries of `P = M^dagger M` used by the polar coordinate.
fn polar_entries(m: &Mat64) -> Result<(f64, C64, f64, f64)> {
    if m.rows() != 2 || !m.is_square() {
        return Err(Error::DimensionMismatch(2, m.rows()));
    }
    let p = &m.adjoint() * m;
    let (a, b, d) = (p[(0, 0)].re, p[(0, 1)], p[(1, 1)].re);
    let s = ((a + d).powi(2) - 4.0).max(0.0).sqrt();
    Ok((a, b, d, s))
}

/// Polar coordinate of `M in SL(2, C)`: with `P = M^dagger M = (A, B; conj B, D)` and
/// `s = sqrt((A + D)^2 - 4)`, `zeta = 2 conj(B)/(D - A + s)`, the conjugated ratio of the
/// top eigenvector of `P`.
pub fn polar_zeta_sl2(m: &Mat64) -> Result<C64> {
    let (a, b, d, s) = polar_entries(m)?;
    let den = d - a + s;
    if den.abs() < 1e-14 * (a + d) {
        return Err(Error::Degenerate("D - A + s vanishes"));
    }
    Ok(b.conj() * (2.0 / den))
}

/// Both sides of the polar bound and the printed right side, which only holds when `D >= A`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PolarBound {
    pub lhs: f64,
    /// `4 + (D + s)^2`.
    pub rhs: f64,
    /// `4 + (D - A + s)^2`.
    pub printed_rhs: f64,
}

impl PolarBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12)
    }

    pub fn printed_holds(&self) -> bool {
        self.lhs <= self.printed_rhs * (1.0 + 1e-12)
    }
}

pub fn polar_bound(m: &Mat64) -> Result<PolarBound> {
    let (a, _, d, s) = polar_entries(m)?;
    Ok(PolarBound { lhs: (a + d).powi(2), rhs: 4.0 + (d + s).powi(2), printed_rhs: 4.0 + (d - a + s).powi(2) })
}

/// Outcome of a finite-difference volume check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JacobianReport {
    pub computed: f64,
    pub expected: f64,
    pub abs_error: f64,
    pub step_spread: f64,
}

/// Central differences of `f` at `p` with Richardson extrapolation, at steps `h` and `h/2`.
fn richardson_jacobian(f: &impl Fn(&[f64]) -> Vec<f64>, p: &[f64], h: f64) -> Vec<Vec<f64>> {
    let central = |h: f64| -> Vec<Vec<f64>> {
        (0..p.len())
            .map(|j| {
                let mut plus = p.to_vec();
                let mut minus = p.to_vec();
                plus[j] += h;
                minus[j] -= h;
                f(&plus).iter().zip(f(&minus)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            })
            .collect()
    };
    let (coarse, fine) = (central(h), central(h / 2.0));
    coarse.iter().zip(&fine).map(|(c, f)| c.iter().zip(f).map(|(c, f)| (4.0 * f - c) / 3.0).collect()).collect()
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Leray density of the Cartan parametrization on `a_0 d_0 + |b_0|^2 = 1`, relative to
/// `da_0 d^2 b_0/|a_0|`, at step `h`. Columns of `jac` are derivatives in the parameters.
fn leray_volume(g: &MatrixCoords, jac: &[Vec<f64>]) -> f64 {
    // Coordinates (a_0, d_0, Re b_0, Im b_0) and the gradient of the constraint.
    let grad = [g.d0, g.a0, 2.0 * g.b0[0], 2.0 * g.b0[1]];
    let drop = (0..4).max_by(|&i, &j| grad[i].abs().total_cmp(&grad[j].abs())).unwrap();
    let keep: Vec<usize> = (0..4).filter(|&i| i != drop).collect();
    let mut m = [[0.0; 3]; 3];
    for (r, &i) in keep.iter().enumerate() {
        for (c, col) in jac.iter().enumerate() {
            m[r][c] = col[i];
        }
    }
    det3(m).abs() / grad[drop].abs()
}

/// Volume density of the Cartan parametrization at `p` by finite differences, in the
/// directions `k exp((0, w; -conj w, 0))` and `x + y`, normalized so that `x = 0` gives 1.
/// Compared with `cosh^2(2x)`.
pub fn jacobian_check(p: &CartanPoint) -> Result<JacobianReport> {
    let map = |q: &[f64]| -> Vec<f64> {
        let w = C64::new(q[0], q[1]);
        let u = Mat64::m2(C64::new(0.0, 0.0), w, -w.conj(), C64::new(0.0, 0.0)).expm();
        let k = &p.k() * &u;
        let moved = CartanPoint { a: k[(0, 0)], b: k[(0, 1)], x: p.x + q[2] };
        let g = cartan_map(&moved);
        vec![g.a0, g.d0, g.b0[0], g.b0[1]]
    };
    let g = cartan_map(p);
    let origin = [0.0; 3];
    // At x = 0 the parametrization has volume 8 against da_0 d^2 b_0/|a_0|.
    let volume = |h: f64| leray_volume(&g, &richardson_jacobian(&map, &origin, h)) / 8.0;
    let (coarse, fine) = (volume(2e-3), volume(1e-3));
    let spread = (coarse - fine).abs() / fine.abs().max(1e-300);
    if spread > 1e-4 {
        return Err(Error::StepSizeUnstable { spread });
    }
    let expected = (2.0 * p.x).cosh().powi(2);
    Ok(JacobianReport { computed: fine, expected, abs_error: (fine - expected).abs(), step_spread: spread })
}

/// Matrix of the tangent map on the basis `e_1 = (0,1;-1,0)`, `e_2 = (0,i;i,0)`, `e_3 = h`:
/// the projection along `su(1,1)` of `e^{-x} zeta e^{x} + sum_k (-ad x)^k y/(k+1)!`.
pub fn block_form(x: f64) -> [[f64; 3]; 3] {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let basis = [Mat64::m2(zero, one, -one, zero), Mat64::m2(zero, i, i, zero), Mat64::m2(one, zero, zero, -one)];
    let xm = basis[2].scale_re(x);
    let (ex, emx) = (xm.expm(), xm.scale_re(-1.0).expm());
    let j = &basis[2];
    let project = |m: &Mat64| (m + &(&(j * &m.adjoint()) * j)).scale_re(0.5);
    let coords = |m: &Mat64| [m[(0, 1)].re, m[(0, 1)].im, m[(0, 0)].re];
    let mut out = [[0.0; 3]; 3];
    for (col, e) in basis.iter().enumerate() {
        let image = if col < 2 {
            &(&emx * e) * &ex
        } else {
            // sum_k (-ad x)^k y/(k+1)!
            let mut term = e.clone();
            let mut sum = e.clone();
            for k in 1..40 {
                term = xm.commutator(&term).scale_re(-1.0 / (k as f64 + 1.0));
                sum = &sum + &term;
            }
            sum
        };
        let c = coords(&project(&image));
        for row in 0..3 {
            out[row][col] = c[row];
        }
    }
    out
}

/// Largest deviation of the tangent map from `diag(cosh 2x, cosh 2x, 1)`.
pub fn block_form_check(x: f64) -> f64 {
    let m = block_form(x);
    let c = (2.0 * x).cosh();
    let expected = [[c, 0.0, 0.0], [0.0, c, 0.0], [0.0, 0.0, 1.0]];
    (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).map(|(r, c)| (m[r][c] - expected[r][c]).abs()).fold(0.0, f64::max)
}

/// Lower-triangular coordinates `g_0 = L diag(a_0, 1/a_0) L^{* Theta}`, `L = (1, 0; l, 1)`.
fn lower_coords(g: &Mat64) -> Result<(f64, C64)> {
    let a0 = g[(0, 0)].re;
    if a0.abs() < 1e-12 {
        return Err(Error::Degenerate("a_0 vanishes"));
    }
    Ok((a0, g[(1, 0)] / a0))
}

fn from_lower(a0: f64, l: C64) -> Mat64 {
    let cfg = InvolutionConfig::<f64>::s2();
    let lm = Mat64::m2(C64::new(1.0, 0.0), C64::new(0.0, 0.0), l, C64::new(1.0, 0.0));
    let d = Mat64::diag(&[C64::new(a0, 0.0), C64::new(1.0 / a0, 0.0)]);
    &(&lm * &d) * &cfg.star_theta(&lm)
}

/// Ratio of the volume `|a_0| da_0 d^2 l` after and before `g_0 -> b g_0 b^{* Theta}`
/// for `b = (alpha, 0; gamma, 1/alpha)`, by a finite-difference Jacobian. Invariance means 1.
pub fn lower_translation_check(a0: f64, l: C64, alpha: C64, gamma: C64) -> Result<f64> {
    let cfg = InvolutionConfig::<f64>::s2();
    let b = Mat64::m2(alpha, C64::new(0.0, 0.0), gamma, alpha.inv());
    let bs = cfg.star_theta(&b);
    let map = |q: &[f64]| -> Vec<f64> {
        let g = &(&b * &from_lower(q[0], C64::new(q[1], q[2]))) * &bs;
        let (a, l) = lower_coords(&g).unwrap_or((f64::NAN, C64::new(f64::NAN, f64::NAN)));
        vec![a, l.re, l.im]
    };
    let point = [a0, l.re, l.im];
    let jac = richardson_jacobian(&map, &point, 1e-4 * (1.0 + a0.abs()));
    let mut m = [[0.0; 3]; 3];
    for (c, col) in jac.iter().enumerate() {
        for r in 0..3 {
            m[r][c] = col[r];
        }
    }
    let image = map(&point)[0];
    if !image.is_finite() {
        return Err(Error::Degenerate("translated a_0 vanishes"));
    }
    Ok(image.abs() * det3(m).abs() / a0.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian, rand_sl, rng_from_seed};
    use rand::Rng;

    fn random_point<R: Rng>(rng: &mut R, max_x: f64) -> CartanPoint {
        let x = rng.random_range(-max_x..max_x);
        CartanPoint::new(gaussian(rng), gaussian(rng), x).unwrap()
    }

    #[test]
    fn cartan_map_matches_product_and_is_symmetric() {
        let cfg = InvolutionConfig::<f64>::s2();
        let mut rng = rng_from_seed(40);
        for _ in 0..50 {
            let p = random_point(&mut rng, 2.0);
            let g = cartan_map(&p).to_mat();
            assert!(g.max_abs_diff(&cartan_product(&p)) < 1e-12);
            assert!((g.det() - C64::new(1.0, 0.0)).norm() < 1e-10);
            assert!(cfg.star_theta(&g).max_abs_diff(&g) < 1e-12);
        }
    }

    #[test]
    fn identity_has_zero_zeta() {
        let id = MatrixCoords { a0: 1.0, b0: [0.0, 0.0], d0: 1.0 };
        assert_eq!(zeta_coordinate(&id).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(zeta_coordinate_alt(&id).unwrap().norm(), 0.0);
    }

    #[test]
    fn both_zeta_formulas_recover_the_affine_coordinate() {
        let mut rng = rng_from_seed(41);
        for _ in 0..200 {
            let p = random_point(&mut rng, 2.0);
            let g = cartan_map(&p);
            let z = p.zeta().unwrap();
            let scale = 1.0 + z.norm();
            assert!((zeta_coordinate(&g).unwrap() - z).norm() < 1e-10 * scale);
            assert!((zeta_coordinate_alt(&g).unwrap() - z).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn polar_zeta_is_equivariant() {
        let mut rng = rng_from_seed(42);
        for _ in 0..100 {
            let m: Mat64 = rand_sl(2, &mut rng);
            let k = crate::random::rand_su2::<f64, _>(&mut rng);
            let (a, b) = (k[(0, 0)], k[(0, 1)]);
            let z = polar_zeta_sl2(&m).unwrap();
            let moved = polar_zeta_sl2(&(&(&k * &m) * &k.adjoint())).unwrap();
            let expected = (a.conj() * z + b.conj()) / (a - b * z);
            assert!((moved - expected).norm() < 1e-9 * (1.0 + expected.norm()));
        }
    }

    #[test]
    fn corrected_polar_bound_holds_and_printed_one_needs_d_above_a() {
        let mut rng = rng_from_seed(43);
        let mut printed_failures = 0;
        for _ in 0..1000 {
            let m: Mat64 = rand_sl(2, &mut rng);
            let bound = polar_bound(&m).unwrap();
            assert!(bound.holds(), "{bound:?}");
            let p = &m.adjoint() * &m;
            if p[(1, 1)].re >= p[(0, 0)].re {
                assert!(bound.printed_holds());
            }
            printed_failures += usize::from(!bound.printed_holds());
        }
        assert!(printed_failures > 0);
    }

    #[test]
    fn jacobian_is_cosh_squared() {
        let mut rng = rng_from_seed(44);
        let at_zero = jacobian_check(&CartanPoint::new(C64::new(0.6, 0.1), C64::new(0.3, -0.5), 0.0).unwrap()).unwrap();
        assert!((at_zero.computed - 1.0).abs() < 1e-6);
        let half = jacobian_check(&CartanPoint::new(C64::new(0.2, 0.7), C64::new(-0.4, 0.1), 0.5).unwrap()).unwrap();
        assert!((half.computed - 1f64.cosh().powi(2)).abs() < 1e-5, "{half:?}");
        for _ in 0..20 {
            let r = jacobian_check(&random_point(&mut rng, 1.5)).unwrap();
            assert!(r.abs_error < 1e-5 * r.expected, "{r:?}");
        }
    }

    #[test]
    fn block_form_is_cosh_cosh_one() {
        for x in [0.0, 0.3, -0.8, 1.7] {
            assert!(block_form_check(x) < 1e-12);
        }
        let m = block_form(0.5);
        let det = det3(m);
        assert!((det - 1f64.cosh().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn lower_translations_preserve_the_volume() {
        let mut rng = rng_from_seed(45);
        for _ in 0..20 {
            let a0 = rng.random_range(0.3..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let l = gaussian(&mut rng);
            let alpha = gaussian::<f64, _>(&mut rng) + C64::new(0.5, 0.0);
            let ratio = lower_translation_check(a0, l, alpha, gaussian(&mut rng)).unwrap();
            assert!((ratio - 1.0).abs() < 1e-6, "{ratio}");
        }
    }

    #[test]
    fn large_x_is_rejected() {
        assert!(CartanPoint::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), 12.0).is_err());
    }
}
