//! The symmetric-space action `g -> h g h^{* Theta}` and its projected laws.

use num_traits::{One, Zero};

use super::i0::{act_left_i0, act_right_i0, i0_loop, right_exponent};
use super::{MoebiusParam, RootEmbedding};
use crate::birkhoff::{factorize, minus_inverse, plus_series, series_log, BirkhoffFactors, FactorizeOptions, TOL_DIV};
use crate::error::{Error, Result};
use crate::loopalg::{InvolutionConfig, TruncatedLoop};
use crate::mat::Mat;
use crate::scalar::{lit, re, Real, C};

fn check_compatible<T: Real>(f: &BirkhoffFactors<T>, cfg: &InvolutionConfig<T>, emb: &RootEmbedding<T>) -> Result<()> {
    if f.dim() != emb.dim || cfg.dim() != emb.dim {
        return Err(Error::DimensionMismatch(emb.dim, f.dim()));
    }
    Ok(())
}

/// `kappa = (g_0 e_theta g_0^{-1})_{0,d-1}`, the normalized pairing of `Ad(g_0) e_theta` with `e_theta`.
pub fn kappa<T: Real>(g_zero: &Mat<T>, emb: &RootEmbedding<T>) -> Result<C<T>> {
    let inv = g_zero.inverse().ok_or(Error::Degenerate("g_0 is singular"))?;
    Ok((&(g_zero * &emb.e_theta) * &inv)[(0, emb.last())])
}

/// Factors of `h g h^{* Theta}`: the right action by `h^{* Theta}` followed by the left
/// action by `h`, both in closed form. Requires `a + b Z_1 != 0` and `a + b Z_1' != 0`.
pub fn act_symmetric<T: Real>(
    h: &MoebiusParam<T>,
    f: &BirkhoffFactors<T>,
    cfg: &InvolutionConfig<T>,
    emb: &RootEmbedding<T>,
) -> Result<BirkhoffFactors<T>> {
    check_compatible(f, cfg, emb)?;
    let mid = act_right_i0(&h.star_theta(cfg.epsilon()), f, emb)?;
    act_left_i0(h, &mid, emb)
}

/// SL(2) form of the symmetric action for `Theta = Ad diag(1, -1)`.
///
/// With `alpha' = conj(a) + conj(b) conj(B_1)` and `t = -eps conj(b)/alpha'`, the
/// intermediate `g_-^i = g_- g_0 (1, t z^{-1}; 0, 1) g_0^{-1}` carries ladders
/// `A_1', B_1', B_2'`. Then `alpha = (|a + b B_1|^2 - eps |b|^2 a_0^2)/alpha'`,
/// `gamma_0 = (-2ab A_1' + b^2 (B_2' - A_1' B_1'))/alpha`, `beta_0 = U/alpha'` with `U` the
/// `e_theta` coefficient of `log u_0` for `h^{* Theta}`, and
/// `g_-' = (i_0(h) g_-^i (alpha, 0; gamma_0 - b z, 1/alpha))_{<=0}`,
/// `g_0' = (1/alpha, 0; -gamma_0, alpha) g_0 (1/alpha', beta_0; 0, alpha')`, `g_+' = g_-'^{* Theta}`.
pub fn act_symmetric_sl2<T: Real>(
    h: &MoebiusParam<T>,
    f: &BirkhoffFactors<T>,
    cfg: &InvolutionConfig<T>,
) -> Result<BirkhoffFactors<T>> {
    let emb = RootEmbedding::new(2)?;
    check_compatible(f, cfg, &emb)?;
    let eps = lit::<T>(cfg.epsilon() as f64);
    let b1 = f.g_minus.entry(-1, 0, 1);
    let a0 = f.g_zero[(0, 0)];
    let alpha_r = h.a.conj() + h.b.conj() * b1.conj();
    if alpha_r.norm() < lit(TOL_DIV) {
        return Err(Error::Degenerate("a + b B_1 vanishes"));
    }
    let t = -h.b.conj() * eps / alpha_r;
    let g0_inv = f.g_zero.inverse().ok_or(Error::Degenerate("g_0 is singular"))?;
    let z = C::zero();
    let step = TruncatedLoop::from_terms(2, -1, vec![Mat::m2(z, t, z, z), Mat::identity(2)]);
    let g_mid = f.g_minus.product(&step.left_mul(&f.g_zero).right_mul(&g0_inv))?;
    let (a1, b1m, b2m) = (g_mid.entry(-1, 0, 0), g_mid.entry(-1, 0, 1), g_mid.entry(-2, 0, 1));
    let alpha = (re((h.a + h.b * b1).norm_sqr()) - a0 * a0 * (h.b.norm_sqr() * eps)) / alpha_r;
    if alpha.norm() < lit(TOL_DIV) {
        return Err(Error::Degenerate("|a + b B_1|^2 - eps |b|^2 a_0^2 vanishes"));
    }
    let two = lit::<T>(2.0);
    let gamma0 = (-(h.a * h.b * a1 * two) + h.b * h.b * (b2m - a1 * b1m)) / alpha;
    let y = series_log(&plus_series(&f.g_plus, 2));
    let u = right_exponent(&h.star_theta(cfg.epsilon()), &y[1], &y[2], &emb)[(0, 1)];
    let beta0 = u / alpha_r;
    let right = TruncatedLoop::from_terms(2, 0, vec![Mat::m2(alpha, z, gamma0, alpha.inv()), Mat::m2(z, z, -h.b, z)]);
    let g_minus = TruncatedLoop::product_all(&[&i0_loop(h, &emb), &g_mid, &right])?.nonpositive_part();
    let g_zero = &(&Mat::m2(alpha.inv(), z, -gamma0, alpha) * &f.g_zero) * &Mat::m2(alpha_r.inv(), beta0, z, alpha_r);
    let g_plus = g_minus.star_theta(cfg);
    Ok(BirkhoffFactors::from_parts(g_minus, g_zero, g_plus))
}

/// Projected S^2 laws for `(a_0, B_1, B_2, D_1)` under the symmetric action.
#[derive(Clone, Copy, Debug)]
pub struct SymmetricLaws<T> {
    pub a0: C<T>,
    pub b1: C<T>,
    pub b2: C<T>,
    pub d1: C<T>,
}

/// With `alpha' = conj(a) + conj(b) conj(B_1)`, `n = |a + b B_1|^2 - |b|^2 a_0^2`,
/// `alpha = n/alpha'` and `bb = conj(b)/alpha'`:
/// `a_0' = a_0/n`, `B_1' = (d B_1 + c - d conj(b) a_0^2/alpha')/alpha`,
/// `B_2' = [d B_2 + c D_1 + d D_1 bb a_0^2 + (d B_1 + c) bb conj(b_0) a_0]/alpha`,
/// `D_1' = [b B_2 + a D_1 + b D_1 bb a_0^2 + (b B_1 + a) bb conj(b_0) a_0]/alpha`.
pub fn symmetric_laws<T: Real>(h: &MoebiusParam<T>, f: &BirkhoffFactors<T>) -> Result<SymmetricLaws<T>> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch(2, f.dim()));
    }
    let m = &f.g_minus;
    let (b1, b2, d1) = (m.entry(-1, 0, 1), m.entry(-2, 0, 1), m.entry(-1, 1, 1));
    let (a0, b0) = (f.g_zero[(0, 0)], f.g_zero[(0, 1)]);
    let alpha_r = h.a.conj() + h.b.conj() * b1.conj();
    let norm = re((h.a + h.b * b1).norm_sqr()) - a0 * a0 * h.b.norm_sqr();
    if alpha_r.norm() < lit(TOL_DIV) || norm.norm() < lit(TOL_DIV) {
        return Err(Error::Degenerate("symmetric action denominator vanishes"));
    }
    let alpha = norm / alpha_r;
    let bb = h.b.conj() / alpha_r;
    let tail = bb * b0.conj() * a0;
    Ok(SymmetricLaws {
        a0: a0 / norm,
        b1: (h.d * b1 + h.c - h.d * h.b.conj() * a0 * a0 / alpha_r) / alpha,
        b2: (h.d * b2 + h.c * d1 + h.d * d1 * bb * a0 * a0 + (h.d * b1 + h.c) * tail) / alpha,
        d1: (h.b * b2 + h.a * d1 + h.b * d1 * bb * a0 * a0 + (h.b * b1 + h.a) * tail) / alpha,
    })
}

/// `(Z_1', kappa')` predicted for the symmetric action. `Z_1' = Z_1 + t kappa` with
/// `t = -eps conj(b)/(conj(a) + conj(b) conj(Z_1))` is the value after the right action
/// by `h^{* Theta}` alone; the full action then maps it to `(c + d Z_1')/(a + b Z_1')`.
/// `kappa' = kappa/(|a + b Z_1|^2 - eps |b|^2 kappa)^2` is the value after the full action.
pub fn kappa_law<T: Real>(
    h: &MoebiusParam<T>,
    f: &BirkhoffFactors<T>,
    cfg: &InvolutionConfig<T>,
    emb: &RootEmbedding<T>,
) -> Result<(C<T>, C<T>)> {
    let eps = lit::<T>(cfg.epsilon() as f64);
    let z1 = f.g_minus.entry(-1, 0, emb.last());
    let k = kappa(&f.g_zero, emb)?;
    let den = h.a.conj() + h.b.conj() * z1.conj();
    let norm = re((h.a + h.b * z1).norm_sqr()) - k * (h.b.norm_sqr() * eps);
    if den.norm() < lit(TOL_DIV) || norm.norm() < lit(TOL_DIV) {
        return Err(Error::Degenerate("symmetric action denominator vanishes"));
    }
    let t = -h.b.conj() * eps / den;
    Ok((z1 + t * k, k / (norm * norm)))
}

/// Outcome of the adjoint-recursion check for `h = (0, 1; -1, 0)`.
#[derive(Clone, Debug)]
pub struct AdjointRecursionReport {
    /// `|kappa' - kappa/(|Z_1|^2 - eps kappa)^2|`.
    pub kappa_error: f64,
    /// Largest error of the order-by-order relation over `n = 1..=orders`.
    pub recursion_error: f64,
    /// Largest modulus of the positive-degree terms that must vanish.
    pub positive_error: f64,
    pub orders: usize,
    /// True when `Z_1 = 0`, where only the `kappa` law applies.
    pub skipped: bool,
    /// Rounding scale of the comparison: the largest coefficient of either side, at least 1.
    /// Near `Z_1 = 0` the parameter `t` blows up and so do the terms.
    pub magnitude: f64,
    /// Toeplitz condition of the refactorization used as the oracle.
    pub oracle_condition: f64,
}

impl AdjointRecursionReport {
    pub fn max_error(&self) -> f64 {
        self.kappa_error.max(self.recursion_error).max(self.positive_error)
    }

    /// [`Self::max_error`] divided by [`Self::magnitude`].
    pub fn relative_error(&self) -> f64 {
        self.max_error() / self.magnitude
    }
}

/// Checks the `kappa` law and the order-by-order adjoint recursion against the
/// multiply-then-factorize oracle for `h = (0, 1; -1, 0)`.
///
/// The recursion: for `n >= 0` the `(d-1, 0)` entry of the `z^{-n}` coefficient of
/// `Ad(g_-') e_{-theta}` equals `-(Z_1')^{-2}` times the `(0, d-1)` entry of the `z^{-n}`
/// coefficient of `g_- (z^2 e_{-theta} + t z [E, e_{-theta}] + t^2/2 [E, [E, e_{-theta}]]) g_-^{-1}`,
/// with `E = Ad(g_0) e_theta` and `Z_1'`, `t` as in [`kappa_law`]. The right side has no
/// positive-degree part. It is exact: `h` is unitary on the circle with
/// `Ad(h^{-1}) e_{-theta} = -z^{-2} e_theta`, and the factors that follow `h g_-` in
/// `g_-'` fix `e_{-theta}` up to the scalar `(Z_1')^{-2}`.
pub fn adjoint_recursion_check<T: Real>(
    f: &BirkhoffFactors<T>,
    cfg: &InvolutionConfig<T>,
    emb: &RootEmbedding<T>,
    orders: usize,
) -> Result<AdjointRecursionReport> {
    check_compatible(f, cfg, emb)?;
    let h = MoebiusParam { a: C::zero(), b: C::one(), c: -C::one(), d: C::zero() };
    let last = emb.last();
    let eps = lit::<T>(cfg.epsilon() as f64);
    let g =
        TruncatedLoop::product_all(&[&i0_loop(&h, emb), &f.product(), &i0_loop(&h.star_theta(cfg.epsilon()), emb)])?;
    let order = (3 * g.hi().max(1) as usize).max(4);
    // Not gated on the residual: the caller judges the oracle by `oracle_condition`.
    let oracle = factorize(&g, &FactorizeOptions { order: Some(order), residual_tol: None, ..Default::default() })?;
    let oracle_condition = oracle.condition;
    let (_, kappa_pred) = kappa_law(&h, f, cfg, emb)?;
    let kappa_new = kappa(&oracle.g_zero, emb)?;
    let kappa_error = (kappa_new - kappa_pred).norm().to_f64().unwrap_or(f64::INFINITY);
    let kappa_scale = kappa_pred.norm().to_f64().unwrap_or(f64::INFINITY).max(1.0);
    let z1 = f.g_minus.entry(-1, 0, last);
    if z1.norm() < lit(TOL_DIV) {
        return Ok(AdjointRecursionReport {
            kappa_error,
            recursion_error: 0.0,
            positive_error: 0.0,
            orders,
            skipped: true,
            magnitude: kappa_scale,
            oracle_condition,
        });
    }
    let k = kappa(&f.g_zero, emb)?;
    let t = re(-eps) / z1.conj();
    let z1p = z1 + t * k;
    if z1p.norm() < lit(TOL_DIV) {
        return Err(Error::Degenerate("Z_1' vanishes"));
    }
    let g0_inv = f.g_zero.inverse().ok_or(Error::Degenerate("g_0 is singular"))?;
    let e = &(&f.g_zero * &emb.e_theta) * &g0_inv;
    let ad1 = e.commutator(&emb.e_minus_theta);
    let ad2 = e.commutator(&ad1);
    let half = lit::<T>(0.5);
    let poly =
        TruncatedLoop::from_terms(emb.dim, 0, vec![ad2.scale(t * t * half), ad1.scale(t), emb.e_minus_theta.clone()]);
    let depth = orders + 2;
    let rhs_loop = TruncatedLoop::product_all(&[&f.g_minus, &poly, &minus_inverse(&f.g_minus, depth)])?;
    let lhs_loop = TruncatedLoop::product_all(&[
        &oracle.g_minus,
        &TruncatedLoop::constant(emb.e_minus_theta.clone()),
        &minus_inverse(&oracle.g_minus, depth),
    ])?;
    let scale = -(z1p * z1p).inv();
    let mut recursion_error = T::zero();
    for n in 0..=orders as i32 {
        let lhs = lhs_loop.entry(-n, last, 0);
        let rhs = scale * rhs_loop.entry(-n, 0, last);
        recursion_error = recursion_error.max((lhs - rhs).norm());
    }
    let mut positive_error = T::zero();
    for n in 1..=2 {
        positive_error = positive_error.max(rhs_loop.entry(n, 0, last).norm());
    }
    Ok(AdjointRecursionReport {
        kappa_error,
        recursion_error: recursion_error.to_f64().unwrap_or(f64::INFINITY),
        positive_error: positive_error.to_f64().unwrap_or(f64::INFINITY),
        orders,
        skipped: false,
        oracle_condition,
        magnitude: kappa_scale
            .max((scale.norm() * rhs_loop.norm_max()).to_f64().unwrap_or(f64::INFINITY))
            .max(lhs_loop.norm_max().to_f64().unwrap_or(f64::INFINITY)),
    })
}
