//! Birkhoff factorization `g = g_- g_0 g_+` and the linear coordinates of `g_-`.
//!
//! The factorization solves one block-Toeplitz system for `h = g_+^{-1}`: the
//! positive-degree coefficients of `g h` vanish, which is linear in `h`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loopalg::{grid_size, InvolutionConfig, LoopJson, TruncatedLoop, TOL_DET};
use crate::mat::{Lu, Mat};
use crate::scalar::{lit, Real, C};

/// Toeplitz 1-norm condition number above which a loop is treated as off the top stratum.
pub const COND_MAX: f64 = 1e12;
/// Smallest modulus accepted as a divisor.
pub const TOL_DIV: f64 = 1e-12;
/// Default acceptance bound on the factorization residual.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Tolerance of the symmetric-point predicate.
pub const TOL_SYMMETRIC: f64 = 1e-9;

/// Controls for [`factorize`].
#[derive(Clone, Debug)]
pub struct FactorizeOptions {
    /// Number of unknown coefficients of `g_+^{-1}`. Defaults to `(d - 1) * hi`,
    /// which is exact for polynomial `g_+` of degree `hi`.
    pub order: Option<usize>,
    pub cond_max: f64,
    /// Largest accepted residual; `None` accepts any residual (non-polynomial input).
    pub residual_tol: Option<f64>,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        FactorizeOptions { order: None, cond_max: COND_MAX, residual_tol: Some(RESIDUAL_TOL) }
    }
}

impl FactorizeOptions {
    /// Options for a loop refit from samples: fixed order, residual reported but not gated.
    pub fn sampled(order: usize) -> Self {
        FactorizeOptions { order: Some(order), cond_max: COND_MAX, residual_tol: None }
    }
}

/// Outcome of the stratum test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub in_top_stratum: bool,
    pub toeplitz_condition: f64,
    /// Diagonal exponents when the loop is a diagonal monomial loop `diag(z^{k_i})`.
    pub detected_lambda_hint: Option<Vec<i32>>,
}

/// The triple `(g_-, g_0, g_+)` with `g_-(inf) = g_+(0) = 1`.
#[derive(Clone, Debug)]
pub struct BirkhoffFactors<T> {
    pub g_minus: TruncatedLoop<T>,
    pub g_zero: Mat<T>,
    pub g_plus: TruncatedLoop<T>,
    /// Largest coefficient error of `g - g_- g_0 g_+`.
    pub residual: f64,
    /// Condition number of the Toeplitz system that produced the factors.
    pub condition: f64,
}

/// Factors JSON: three loops plus the residual.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorsJson {
    pub g_minus: LoopJson,
    pub g_zero: LoopJson,
    pub g_plus: LoopJson,
    pub residual: f64,
}

impl<T: Real> BirkhoffFactors<T> {
    /// Factors given directly (no solve); residual and condition are zero.
    pub fn from_parts(g_minus: TruncatedLoop<T>, g_zero: Mat<T>, g_plus: TruncatedLoop<T>) -> Self {
        BirkhoffFactors { g_minus, g_zero, g_plus, residual: 0.0, condition: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.g_zero.rows()
    }

    /// `g_- g_0 g_+` over the full window.
    pub fn product(&self) -> TruncatedLoop<T> {
        let g0 = TruncatedLoop::constant(self.g_zero.clone());
        TruncatedLoop::product_all(&[&self.g_minus, &g0, &self.g_plus]).expect("factors share a dimension")
    }

    /// Largest coefficient difference across the three parts.
    pub fn max_diff(&self, other: &Self) -> T {
        self.g_minus
            .max_coeff_diff(&other.g_minus)
            .max(self.g_zero.max_abs_diff(&other.g_zero))
            .max(self.g_plus.max_coeff_diff(&other.g_plus))
    }

    /// Linear coordinates up to `order`.
    pub fn rh_coords(&self, order: usize) -> RhCoords<T> {
        RhCoords::new(self, order)
    }

    pub fn to_json(&self) -> FactorsJson {
        FactorsJson {
            g_minus: self.g_minus.to_json(),
            g_zero: TruncatedLoop::constant(self.g_zero.clone()).tagged_unchecked(self.g_minus.tag()).to_json(),
            g_plus: self.g_plus.to_json(),
            residual: self.residual,
        }
    }
}

/// Exponents of a diagonal monomial loop, if `g` is one.
fn lambda_hint<T: Real>(g: &TruncatedLoop<T>) -> Option<Vec<i32>> {
    let d = g.dim();
    let mut degrees = vec![None; d];
    for k in g.lo()..=g.hi() {
        let c = g.coeff(k);
        for i in 0..d {
            for j in 0..d {
                if i != j && !c[(i, j)].is_zero() {
                    return None;
                }
            }
            if !c[(i, i)].is_zero() {
                if degrees[i].is_some() {
                    return None;
                }
                degrees[i] = Some(k);
            }
        }
    }
    degrees.into_iter().collect()
}

fn lower_stratum<T: Real>(g: &TruncatedLoop<T>, condition: f64) -> Error {
    Error::LowerStratum(StratumReport {
        in_top_stratum: false,
        toeplitz_condition: condition,
        detected_lambda_hint: lambda_hint(g),
    })
}

/// Stratum diagnostics without returning factors.
pub fn stratum_report<T: Real>(g: &TruncatedLoop<T>, opts: &FactorizeOptions) -> StratumReport {
    match factorize(g, opts) {
        Ok(f) => StratumReport { in_top_stratum: true, toeplitz_condition: f.condition, detected_lambda_hint: None },
        Err(Error::LowerStratum(r)) => r,
        Err(_) => StratumReport {
            in_top_stratum: false,
            toeplitz_condition: f64::INFINITY,
            detected_lambda_hint: lambda_hint(g),
        },
    }
}

/// Birkhoff factorization of `g` in the top stratum.
pub fn factorize<T: Real>(g: &TruncatedLoop<T>, opts: &FactorizeOptions) -> Result<BirkhoffFactors<T>> {
    let d = g.dim();
    let min_det = g.min_abs_det(grid_size(g.lo(), g.hi()));
    if !(min_det >= TOL_DET) {
        return Err(Error::SingularOnCircle { min_det });
    }
    let n = opts.order.unwrap_or(((d - 1) * g.hi().max(1) as usize).max(1));
    let size = n * d;
    let mut toeplitz = Mat::zeros(size, size);
    let mut rhs = Mat::zeros(size, d);
    for k in 1..=n {
        for j in 1..=n {
            if let Some(c) = g.get(k as i32 - j as i32) {
                toeplitz.set_block((k - 1) * d, (j - 1) * d, c);
            }
        }
        if let Some(c) = g.get(k as i32) {
            rhs.set_block((k - 1) * d, 0, &-c);
        }
    }
    let lu = Lu::factor(&toeplitz).map_err(|_| lower_stratum(g, f64::INFINITY))?;
    let inv = lu.inverse();
    let condition = (toeplitz.norm1() * inv.norm1()).to_f64().unwrap_or(f64::INFINITY);
    if !(condition <= opts.cond_max) {
        return Err(lower_stratum(g, condition));
    }
    // Solve through the LU factors, then refine once: multiplying by the explicit inverse
    // loses about `condition * eps` relative accuracy in the residual.
    let mut sol = lu.solve(&rhs);
    let correction = lu.solve(&(&rhs - &(&toeplitz * &sol)));
    sol = &sol + &correction;
    let mut h_coeffs = vec![Mat::identity(d)];
    for j in 1..=n {
        h_coeffs.push(sol.block((j - 1) * d, 0, d, d));
    }
    let h = TruncatedLoop::from_terms(d, 0, h_coeffs);
    let gh = g.product(&h)?;
    let g_zero = gh.coeff(0);
    let g0_inv = match Lu::factor(&g_zero) {
        Ok(lu0) => lu0.inverse(),
        Err(_) => return Err(lower_stratum(g, condition)),
    };
    let g0_cond = (g_zero.norm1() * g0_inv.norm1()).to_f64().unwrap_or(f64::INFINITY);
    if !(g0_cond <= opts.cond_max) {
        return Err(lower_stratum(g, condition.max(g0_cond)));
    }
    let g_minus = gh.nonpositive_part().right_mul(&g0_inv).tagged_unchecked(g.tag());
    let plus = series_inverse(&plus_series(&h, n), n);
    let g_plus = TruncatedLoop::from_terms(d, 0, plus).tagged_unchecked(g.tag());
    let mut f = BirkhoffFactors { g_minus, g_zero, g_plus, residual: 0.0, condition };
    f.residual = g.max_coeff_diff(&f.product()).to_f64().unwrap_or(f64::INFINITY);
    if let Some(tol) = opts.residual_tol {
        if !(f.residual < tol) {
            return Err(Error::ResidualExceeded { residual: f.residual, tol });
        }
    }
    Ok(f)
}

/// Coefficients `v[n]` of `z^{-n}`, `n = 0..=order`.
pub fn minus_series<T: Real>(g: &TruncatedLoop<T>, order: usize) -> Vec<Mat<T>> {
    (0..=order).map(|n| g.coeff(-(n as i32))).collect()
}

/// Coefficients `v[n]` of `z^n`, `n = 0..=order`.
pub fn plus_series<T: Real>(g: &TruncatedLoop<T>, order: usize) -> Vec<Mat<T>> {
    (0..=order).map(|n| g.coeff(n as i32)).collect()
}

/// Product of one-sided power series, truncated at the common order.
pub fn series_mul<T: Real>(a: &[Mat<T>], b: &[Mat<T>]) -> Vec<Mat<T>> {
    let order = a.len().min(b.len());
    let d = a[0].rows();
    (0..order)
        .map(|n| {
            let mut c = Mat::zeros(d, d);
            for j in 0..=n {
                c += &(&a[j] * &b[n - j]);
            }
            c
        })
        .collect()
}

/// Inverse of a power series with identity constant term, up to `order`.
pub fn series_inverse<T: Real>(a: &[Mat<T>], order: usize) -> Vec<Mat<T>> {
    let d = a[0].rows();
    let mut u = vec![Mat::identity(d)];
    for n in 1..=order {
        let mut s = Mat::zeros(d, d);
        for j in 1..=n.min(a.len() - 1) {
            s -= &(&a[j] * &u[n - j]);
        }
        u.push(s);
    }
    u
}

/// `log(1 + X)` for a series with identity constant term.
pub fn series_log<T: Real>(a: &[Mat<T>]) -> Vec<Mat<T>> {
    let order = a.len() - 1;
    let d = a[0].rows();
    let mut x: Vec<Mat<T>> = a.to_vec();
    x[0] = Mat::zeros(d, d);
    let mut out = vec![Mat::zeros(d, d); order + 1];
    let mut power = x.clone();
    for m in 1..=order {
        let coef = lit::<T>(if m % 2 == 1 { 1.0 } else { -1.0 } / m as f64);
        for n in m..=order {
            out[n] += &power[n].scale_re(coef);
        }
        power = series_mul(&power, &x);
    }
    out
}

/// `exp(X)` for a series with zero constant term.
pub fn series_exp<T: Real>(x: &[Mat<T>]) -> Vec<Mat<T>> {
    let order = x.len() - 1;
    let d = x[0].rows();
    let mut out = vec![Mat::zeros(d, d); order + 1];
    out[0] = Mat::identity(d);
    let mut term: Vec<Mat<T>> = out.clone();
    for m in 1..=order {
        term = series_mul(&term, x).into_iter().map(|c| c.scale_re(lit(1.0 / m as f64))).collect();
        for n in 0..=order {
            out[n] += &term[n];
        }
    }
    out
}

/// Linear Riemann-Hilbert coordinates of a factorization.
///
/// `g_w[n]` are the coefficients of `g_-` in `w = -1/z`, so `g_w[n] = (-1)^n G_n` with
/// `G_n` the `z^{-n}` coefficient. `theta[n]` solve `n g_n = sum_j theta_j g_{n-j}`.
/// `x[n]` are the coefficients of `log g_-` in `z^{-1}`, `y[n]` those of `log g_+` in `z`.
/// The ladders are corner entries of `G_n`: `A = (0,0)`, `B = (0,d-1)`, `C = (d-1,0)`,
/// `D = (d-1,d-1)`. `z_coef[n] = (x_n)_{0,d-1}` and `w_coef[n] = (y_n)_{d-1,0}`.
#[derive(Clone, Debug)]
pub struct RhCoords<T> {
    pub order: usize,
    pub g_w: Vec<Mat<T>>,
    pub theta: Vec<Mat<T>>,
    pub x: Vec<Mat<T>>,
    pub y: Vec<Mat<T>>,
    pub a: Vec<C<T>>,
    pub b: Vec<C<T>>,
    pub c: Vec<C<T>>,
    pub d: Vec<C<T>>,
    pub z_coef: Vec<C<T>>,
    pub w_coef: Vec<C<T>>,
}

impl<T: Real> RhCoords<T> {
    pub fn new(f: &BirkhoffFactors<T>, order: usize) -> Self {
        let order = order.max(2);
        let dim = f.dim();
        let last = dim - 1;
        let minus = minus_series(&f.g_minus, order);
        let plus = plus_series(&f.g_plus, order);
        let g_w: Vec<Mat<T>> = minus.iter().enumerate().map(|(n, m)| if n % 2 == 1 { -m } else { m.clone() }).collect();
        let theta = theta_from_w(&g_w);
        let x = series_log(&minus);
        let y = series_log(&plus);
        let corner = |i: usize, j: usize| minus.iter().map(|m| m[(i, j)]).collect::<Vec<_>>();
        RhCoords {
            order,
            a: corner(0, 0),
            b: corner(0, last),
            c: corner(last, 0),
            d: corner(last, last),
            z_coef: x.iter().map(|m| m[(0, last)]).collect(),
            w_coef: y.iter().map(|m| m[(last, 0)]).collect(),
            g_w,
            theta,
            x,
            y,
        }
    }

    /// `B'_1 = B_1`, `B'_n = B_n / D_{n-1}`.
    pub fn b_prime(&self, n: usize) -> Result<C<T>> {
        if n == 0 || n > self.order {
            return Err(Error::InvalidInput(format!("B'_{n} outside 1..={}", self.order)));
        }
        if n == 1 {
            return Ok(self.b[1]);
        }
        let den = self.d[n - 1];
        if den.norm() < lit(TOL_DIV) {
            return Err(Error::DegenerateDn { index: n - 1 });
        }
        Ok(self.b[n] / den)
    }
}

/// `theta_n = n g_n - sum_{j<n} theta_j g_{n-j}` from the `w`-coefficients of `g_-`.
pub fn theta_from_w<T: Real>(g_w: &[Mat<T>]) -> Vec<Mat<T>> {
    let d = g_w[0].rows();
    let mut theta = vec![Mat::zeros(d, d)];
    for n in 1..g_w.len() {
        let mut t = g_w[n].scale_re(lit(n as f64));
        for j in 1..n {
            t -= &(&theta[j] * &g_w[n - j]);
        }
        theta.push(t);
    }
    theta
}

/// Symmetric-point predicate `g^{* Theta} = g`; when `g` factorizes, additionally
/// `g_+ = g_-^{* Theta}` and `g_0^{* Theta} = g_0`.
pub fn is_symmetric_point<T: Real>(g: &TruncatedLoop<T>, cfg: &InvolutionConfig<T>) -> bool {
    let tol = lit::<T>(TOL_SYMMETRIC) * g.norm_max().max(T::one());
    if g.star_theta(cfg).max_coeff_diff(g) > tol {
        return false;
    }
    // A Laurent polynomial can have non-polynomial factors; raise the Toeplitz order
    // until the truncation residual is negligible before comparing factors.
    let default_order = ((g.dim() - 1) * g.hi().max(1) as usize).max(1);
    let mut order = default_order;
    loop {
        let f = match factorize(g, &FactorizeOptions::sampled(order)) {
            Ok(f) => f,
            Err(_) => return true,
        };
        let residual = f.product().max_coeff_diff(g);
        if residual <= tol * lit::<T>(0.1) || order >= MAX_SYMMETRY_ORDER.max(default_order) {
            return symmetric_factors(&f, cfg);
        }
        order *= 2;
    }
}

/// Largest Toeplitz order tried by [`is_symmetric_point`].
const MAX_SYMMETRY_ORDER: usize = 512;

/// Factor-level symmetry check `g_+ = g_-^{* Theta}`, `g_0^{* Theta} = g_0`.
pub fn symmetric_factors<T: Real>(f: &BirkhoffFactors<T>, cfg: &InvolutionConfig<T>) -> bool {
    let scale = f.g_minus.norm_max().max(f.g_zero.norm_max()).max(T::one());
    let tol = lit::<T>(TOL_SYMMETRIC) * scale;
    f.g_plus.max_coeff_diff(&f.g_minus.star_theta(cfg)) <= tol
        && f.g_zero.max_abs_diff(&cfg.star_theta(&f.g_zero)) <= tol
}

/// `M^{-1}` of a unipotent minus-series loop as a loop in degrees `[-order, 0]`.
pub fn minus_inverse<T: Real>(g: &TruncatedLoop<T>, order: usize) -> TruncatedLoop<T> {
    let inv = series_inverse(&minus_series(g, order), order);
    let mut rev: Vec<Mat<T>> = inv.into_iter().rev().collect();
    if rev.is_empty() {
        rev.push(Mat::identity(g.dim()));
    }
    TruncatedLoop::from_terms(g.dim(), -(order as i32), rev)
}

/// Rebuilds `g_-` from `theta` by integrating `n g_n = sum_j theta_j g_{n-j}`.
pub fn g_minus_from_theta<T: Real>(theta: &[Mat<T>]) -> TruncatedLoop<T> {
    let d = theta[0].rows();
    let mut g_w = vec![Mat::identity(d)];
    for n in 1..theta.len() {
        let mut s = Mat::zeros(d, d);
        for j in 1..=n {
            s += &(&theta[j] * &g_w[n - j]);
        }
        g_w.push(s.scale_re(lit(1.0 / n as f64)));
    }
    let order = theta.len() - 1;
    let coeffs = (0..=order).rev().map(|n| if n % 2 == 1 { -&g_w[n] } else { g_w[n].clone() }).collect();
    TruncatedLoop::from_terms(d, -(order as i32), coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loopalg::GroupTag;
    use crate::random::{rand_factors, rand_minus, rand_su2, rand_symmetric, rng_from_seed};
    use crate::scalar::cx;

    type L = TruncatedLoop<f64>;

    #[test]
    fn identity_factors_trivially() {
        let f = factorize(&L::identity(2), &FactorizeOptions::default()).unwrap();
        assert!(f.g_minus.max_coeff_diff(&L::identity(2)) < 1e-15);
        assert!(f.g_zero.max_abs_diff(&Mat::identity(2)) < 1e-15);
        assert!(f.g_plus.max_coeff_diff(&L::identity(2)) < 1e-15);
    }

    #[test]
    fn recovers_constructed_factors() {
        let gm = L::from_terms(2, -1, vec![Mat::unit(2, 1, 0), Mat::identity(2)]);
        let g0 = Mat::diag(&[cx(2.0, 0.0), cx(0.5, 0.0)]);
        let gp = L::from_terms(2, 0, vec![Mat::identity(2), Mat::unit(2, 0, 1)]);
        let g = L::product_all(&[&gm, &L::constant(g0.clone()), &gp]).unwrap();
        let f = factorize(&g, &FactorizeOptions::default()).unwrap();
        assert!(f.g_minus.max_coeff_diff(&gm) < 1e-10);
        assert!(f.g_zero.max_abs_diff(&g0) < 1e-10);
        assert!(f.g_plus.max_coeff_diff(&gp) < 1e-10);
    }

    #[test]
    fn monomial_loop_is_lower_stratum() {
        let g = L::from_terms(2, -1, vec![Mat::unit(2, 1, 1), Mat::zeros(2, 2), Mat::unit(2, 0, 0)]);
        match factorize(&g, &FactorizeOptions::default()) {
            Err(Error::LowerStratum(r)) => {
                assert!(!r.in_top_stratum);
                assert_eq!(r.detected_lambda_hint, Some(vec![1, -1]));
            }
            other => panic!("expected LowerStratum, got {other:?}"),
        }
    }

    #[test]
    fn condition_grows_toward_monomial_loop() {
        // (1 - s) * identity + s * diag(z, 1/z), stays invertible on the circle for s < 1/2.
        let mut last = 0.0;
        for s in [0.1, 0.3, 0.45, 0.49] {
            let g = L::from_terms(
                2,
                -1,
                vec![
                    Mat::unit(2, 1, 1).scale_re(s),
                    Mat::identity(2).scale_re(1.0 - s),
                    Mat::unit(2, 0, 0).scale_re(s),
                ],
            );
            let f =
                factorize(&g, &FactorizeOptions { order: Some(12), residual_tol: None, ..Default::default() }).unwrap();
            assert!(f.condition > last);
            last = f.condition;
        }
    }

    #[test]
    fn singular_on_circle_is_reported() {
        // det g(z) = 1 - z vanishes at z = 1.
        let g = L::from_terms(2, 0, vec![Mat::identity(2), Mat::unit(2, 1, 1).scale_re(-1.0)]);
        assert!(matches!(factorize(&g, &FactorizeOptions::default()), Err(Error::SingularOnCircle { .. })));
    }

    #[test]
    fn perturbation_stays_in_top_stratum() {
        let mut rng = rng_from_seed(11);
        let (gm, g0, gp) = rand_factors::<f64, _>(2, 4, &mut rng);
        let g = L::product_all(&[&gm, &L::constant(g0), &gp]).unwrap();
        let noise = crate::random::rand_loop::<f64, _>(2, g.hi(), &mut rng);
        let perturbed = L::from_fn(2, g.lo(), g.hi(), |k| &g.coeff(k) + &noise.coeff(k).scale_re(1e-3));
        let opts = FactorizeOptions { order: Some(16), residual_tol: None, ..Default::default() };
        let r = stratum_report(&perturbed, &opts);
        assert!(r.in_top_stratum);
    }

    #[test]
    fn star_exchanges_factors() {
        let mut rng = rng_from_seed(12);
        let (gm, g0, gp) = rand_factors::<f64, _>(3, 3, &mut rng);
        let g = L::product_all(&[&gm, &L::constant(g0.clone()), &gp]).unwrap();
        let f = factorize(&g.star(), &FactorizeOptions::default()).unwrap();
        assert!(f.g_minus.max_coeff_diff(&gp.star()) < 1e-9);
        assert!(f.g_zero.max_abs_diff(&g0.adjoint()) < 1e-9);
        assert!(f.g_plus.max_coeff_diff(&gm.star()) < 1e-9);
    }

    #[test]
    fn trivial_minus_has_zero_coordinates() {
        let f = BirkhoffFactors::from_parts(L::identity(2), Mat::identity(2), L::identity(2));
        let c = f.rh_coords(6);
        for n in 1..=6 {
            assert_eq!(c.theta[n].norm_max(), 0.0);
            assert_eq!(c.x[n].norm_max(), 0.0);
        }
        assert_eq!(c.d[0], cx(1.0, 0.0));
    }

    #[test]
    fn second_order_theta_relation() {
        let mut rng = rng_from_seed(13);
        for _ in 0..100 {
            let gm = rand_minus::<f64, _>(2, 4, 0.5, &mut rng);
            let f = BirkhoffFactors::from_parts(gm, Mat::identity(2), L::identity(2));
            let c = f.rh_coords(4);
            assert!(c.g_w[1].max_abs_diff(&c.theta[1]) < 1e-14);
            let lhs = c.g_w[2].scale_re(2.0);
            let rhs = &c.theta[2] + &(&c.theta[1] * &c.theta[1]);
            assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        }
    }

    #[test]
    fn theta_square_is_minus_determinant() {
        let mut rng = rng_from_seed(14);
        let gm = rand_minus::<f64, _>(2, 3, 0.5, &mut rng);
        let c = BirkhoffFactors::from_parts(gm, Mat::identity(2), L::identity(2)).rh_coords(3);
        let t = &c.theta[1];
        let sq = t * t;
        assert!(sq.max_abs_diff(&Mat::identity(2).scale(-t.det())) < 1e-12);
    }

    #[test]
    fn theta_rebuilds_g_minus() {
        let mut rng = rng_from_seed(15);
        let gm = rand_minus::<f64, _>(3, 5, 0.5, &mut rng);
        let c = BirkhoffFactors::from_parts(gm.clone(), Mat::identity(3), L::identity(3)).rh_coords(8);
        assert!(g_minus_from_theta(&c.theta).max_coeff_diff(&gm) < 1e-10);
    }

    #[test]
    fn log_and_exp_are_inverse() {
        let mut rng = rng_from_seed(16);
        let gm = rand_minus::<f64, _>(3, 4, 0.5, &mut rng);
        let s = minus_series(&gm, 10);
        let back = series_exp(&series_log(&s));
        for n in 0..=10 {
            assert!(back[n].max_abs_diff(&s[n]) < 1e-11);
        }
    }

    #[test]
    fn b_prime_guards_division() {
        let f = BirkhoffFactors::from_parts(
            L::from_terms(2, -2, vec![Mat::unit(2, 0, 1), Mat::unit(2, 1, 1).scale_re(-1.0), Mat::identity(2)]),
            Mat::identity(2),
            L::identity(2),
        );
        let c = f.rh_coords(3);
        assert!(matches!(c.b_prime(3), Err(Error::DegenerateDn { index: 2 })));
        assert!((c.b_prime(2).unwrap() - cx(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn symmetric_point_predicate() {
        let cfg = InvolutionConfig::<f64>::s2();
        assert!(is_symmetric_point(&L::identity(2), &cfg));
        let mut rng = rng_from_seed(17);
        let k = rand_su2::<f64, _>(&mut rng);
        let phi = &k * &cfg.star_theta(&k);
        assert!(is_symmetric_point(&L::constant(phi), &cfg));
        let (gm, g0, _) = rand_symmetric(&cfg, 3, &mut rng);
        let gp = crate::random::rand_plus::<f64, _>(2, 3, 0.5, &mut rng);
        let g = L::product_all(&[&gm, &L::constant(g0), &gp]).unwrap();
        assert!(!is_symmetric_point(&g, &cfg));
    }

    #[test]
    fn factors_are_special_for_sl_input() {
        let mut rng = rng_from_seed(18);
        let (gm, g0, gp) = rand_factors::<f64, _>(3, 3, &mut rng);
        let g = L::product_all(&[&gm, &L::constant(g0), &gp]).unwrap().with_tag(GroupTag::SL3).unwrap();
        let f = factorize(&g, &FactorizeOptions::default()).unwrap();
        assert!((f.g_zero.det() - cx(1.0, 0.0)).norm() < 1e-9);
        assert_eq!(f.g_minus.tag(), GroupTag::SL3);
    }

    #[test]
    fn minus_inverse_is_series_inverse() {
        let mut rng = rng_from_seed(19);
        let gm = rand_minus::<f64, _>(2, 3, 0.5, &mut rng);
        let inv = minus_inverse(&gm, 12);
        let p = gm.product(&inv).unwrap();
        for k in -12..=0 {
            let expect = if k == 0 { Mat::identity(2) } else { Mat::zeros(2, 2) };
            assert!(p.coeff(k).max_abs_diff(&expect) < 1e-10);
        }
    }

    #[test]
    fn generic_core_runs_in_single_precision() {
        let gm = TruncatedLoop::<f32>::from_terms(2, -1, vec![Mat::unit(2, 1, 0), Mat::identity(2)]);
        let g0 = Mat::diag(&[cx(2.0, 0.0), cx(0.5, 0.0)]);
        let gp = TruncatedLoop::<f32>::from_terms(2, 0, vec![Mat::identity(2), Mat::unit(2, 0, 1)]);
        let g = TruncatedLoop::product_all(&[&gm, &TruncatedLoop::constant(g0.clone()), &gp]).unwrap();
        let f = factorize(&g, &FactorizeOptions { residual_tol: Some(1e-5), ..Default::default() }).unwrap();
        assert!(f.g_zero.max_abs_diff(&g0) < 1e-5);
    }
}
