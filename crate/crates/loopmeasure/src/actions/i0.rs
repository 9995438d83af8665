//! Left and right multiplication by `i_0(h)`.

use num_traits::Zero;

use super::{MoebiusParam, RootEmbedding};
use crate::birkhoff::{minus_series, plus_series, series_log, BirkhoffFactors, TOL_DIV};
use crate::error::{Error, Result};
use crate::loopalg::TruncatedLoop;
use crate::mat::Mat;
use crate::scalar::{lit, Real, C};

/// `i_0(a, b; c, d) = 1 + (d - 1) E_00 + (a - 1) E_{ll} + c z^{-1} e_theta + b z e_{-theta}`.
pub fn i0_loop<T: Real>(h: &MoebiusParam<T>, emb: &RootEmbedding<T>) -> TruncatedLoop<T> {
    let dim = emb.dim;
    let last = emb.last();
    let mut mid = Mat::identity(dim);
    mid[(0, 0)] = h.d;
    mid[(last, last)] = h.a;
    TruncatedLoop::from_terms(dim, -1, vec![emb.e_theta.scale(h.c), mid, emb.e_minus_theta.scale(h.b)])
}

fn check_divisor<T: Real>(x: C<T>, what: &'static str) -> Result<()> {
    if x.norm() < lit(TOL_DIV) {
        Err(Error::Degenerate(what))
    } else {
        Ok(())
    }
}

fn dim_check<T: Real>(f: &BirkhoffFactors<T>, emb: &RootEmbedding<T>) -> Result<()> {
    if f.dim() != emb.dim {
        Err(Error::DimensionMismatch(emb.dim, f.dim()))
    } else {
        Ok(())
    }
}

/// `1 + u X z^k`.
fn unipotent<T: Real>(x: &Mat<T>, u: C<T>, k: i32) -> TruncatedLoop<T> {
    TruncatedLoop::constant(Mat::identity(x.rows())).add_monomial(&x.scale(u), k)
}

impl<T: Real> TruncatedLoop<T> {
    /// `self + m z^k`, widening the window if needed.
    pub fn add_monomial(&self, m: &Mat<T>, k: i32) -> Self {
        let lo = self.lo().min(k);
        let hi = self.hi().max(k);
        TruncatedLoop::from_fn(self.dim(), lo, hi, |j| {
            let c = self.coeff(j);
            if j == k {
                &c + m
            } else {
                c
            }
        })
    }
}

/// Exponent of the correction factor `l_0` in the left action:
/// `ab [e_{-theta}, a^{-ad h}(x_1')] - b^2 (Z_2 - Z_1 ((x_1)_{00} - (x_1)_{ll})/2) e_{-theta}`
/// with `x_1' = x_1 - Z_1 e_theta`.
pub fn left_exponent<T: Real>(h: &MoebiusParam<T>, x1: &Mat<T>, x2: &Mat<T>, emb: &RootEmbedding<T>) -> Mat<T> {
    let last = emb.last();
    let z1 = x1[(0, last)];
    let z2 = x2[(0, last)];
    let x1p = x1 - &emb.e_theta.scale(z1);
    let bracket = emb.e_minus_theta.commutator(&emb.twisted(h.a, &x1p, -1)).scale(h.b);
    let half = lit::<T>(0.5);
    let corr = h.b * h.b * (z2 - z1 * (x1[(0, 0)] - x1[(last, last)]) * half);
    &bracket - &emb.e_minus_theta.scale(corr)
}

/// Exponent of the correction factor `u_0` in the right action:
/// `-ac [e_theta, a^{ad h}(y_1')] - c^2 (W_2 - W_1 ((y_1)_{00} - (y_1)_{ll})/2) e_theta`
/// with `y_1' = y_1 - W_1 e_{-theta}`.
pub fn right_exponent<T: Real>(h: &MoebiusParam<T>, y1: &Mat<T>, y2: &Mat<T>, emb: &RootEmbedding<T>) -> Mat<T> {
    let last = emb.last();
    let w1 = y1[(last, 0)];
    let w2 = y2[(last, 0)];
    let y1p = y1 - &emb.e_minus_theta.scale(w1);
    let bracket = emb.e_theta.commutator(&emb.twisted(h.a, &y1p, 1)).scale(-h.c);
    let half = lit::<T>(0.5);
    let corr = h.c * h.c * (w2 - w1 * (y1[(0, 0)] - y1[(last, last)]) * half);
    &bracket - &emb.e_theta.scale(corr)
}

/// Factors of `i_0(h) g` in closed form.
///
/// With `alpha = a + b Z_1` and `s = b/alpha`:
/// `g_0' = l_0 alpha^{-h} g_0`, `g_-' = (i_0(h) g_- (1 - s e_{-theta} z))_{<=0} alpha^h l_0^{-1}`,
/// `g_+' = g_0^{-1} (1 + s e_{-theta} z) g_0 g_+`.
pub fn act_left_i0<T: Real>(
    h: &MoebiusParam<T>,
    f: &BirkhoffFactors<T>,
    emb: &RootEmbedding<T>,
) -> Result<BirkhoffFactors<T>> {
    dim_check(f, emb)?;
    let x = series_log(&minus_series(&f.g_minus, 2));
    let z1 = x[1][(0, emb.last())];
    let alpha = h.a + h.b * z1;
    check_divisor(alpha, "a + b Z_1 vanishes")?;
    let s = h.b / alpha;
    let l0 = left_exponent(h, &x[1], &x[2], emb).expm();
    let l0_inv = l0.inverse().ok_or(Error::Degenerate("l_0 is singular"))?;
    let g_zero = &(&l0 * &emb.alpha_h(alpha.inv())) * &f.g_zero;
    let shifted = TruncatedLoop::product_all(&[&i0_loop(h, emb), &f.g_minus, &unipotent(&emb.e_minus_theta, -s, 1)])?;
    let g_minus = shifted.nonpositive_part().right_mul(&(&emb.alpha_h(alpha) * &l0_inv));
    let g0_inv = f.g_zero.inverse().ok_or(Error::Degenerate("g_0 is singular"))?;
    let g_plus = unipotent(&emb.e_minus_theta, s, 1).left_mul(&g0_inv).right_mul(&f.g_zero).product(&f.g_plus)?;
    Ok(BirkhoffFactors::from_parts(
        g_minus.tagged_unchecked(f.g_minus.tag()),
        g_zero,
        g_plus.tagged_unchecked(f.g_plus.tag()),
    ))
}

/// Factors of `g i_0(h)` in closed form.
///
/// With `alpha = a + c W_1` and `t = c/alpha`:
/// `g_-' = g_- g_0 (1 + t e_theta z^{-1}) g_0^{-1}`, `g_0' = g_0 alpha^{-h} u_0`,
/// `g_+' = (u_0^{-1} alpha^h (1 - t e_theta z^{-1}) g_+ i_0(h))_{>=0}`.
pub fn act_right_i0<T: Real>(
    h: &MoebiusParam<T>,
    f: &BirkhoffFactors<T>,
    emb: &RootEmbedding<T>,
) -> Result<BirkhoffFactors<T>> {
    dim_check(f, emb)?;
    let y = series_log(&plus_series(&f.g_plus, 2));
    let w1 = y[1][(emb.last(), 0)];
    let alpha = h.a + h.c * w1;
    check_divisor(alpha, "a + c W_1 vanishes")?;
    let t = h.c / alpha;
    let u0 = right_exponent(h, &y[1], &y[2], emb).expm();
    let u0_inv = u0.inverse().ok_or(Error::Degenerate("u_0 is singular"))?;
    let g0_inv = f.g_zero.inverse().ok_or(Error::Degenerate("g_0 is singular"))?;
    let g_minus = f.g_minus.product(&unipotent(&emb.e_theta, t, -1).left_mul(&f.g_zero).right_mul(&g0_inv))?;
    let g_zero = &(&f.g_zero * &emb.alpha_h(alpha.inv())) * &u0;
    let shifted = TruncatedLoop::product_all(&[&unipotent(&emb.e_theta, -t, -1), &f.g_plus, &i0_loop(h, emb)])?;
    let g_plus = shifted.left_mul(&(&u0_inv * &emb.alpha_h(alpha))).nonnegative_part();
    Ok(BirkhoffFactors::from_parts(
        g_minus.tagged_unchecked(f.g_minus.tag()),
        g_zero,
        g_plus.tagged_unchecked(f.g_plus.tag()),
    ))
}

fn require_sl2<T: Real>(f: &BirkhoffFactors<T>) -> Result<()> {
    if f.dim() != 2 {
        Err(Error::DimensionMismatch(2, f.dim()))
    } else {
        Ok(())
    }
}

/// SL(2) form of the left action, written with the `g_-` ladders:
/// `alpha = a + b B_1`, `gamma_0 = (-2ab A_1 + b^2 (B_2 - A_1 B_1))/alpha`,
/// `g_-' = i_0(h) g_- (alpha, 0; gamma_0 - b z, 1/alpha)`, `g_0' = (1/alpha, 0; -gamma_0, alpha) g_0`,
/// `g_+' = g_0^{-1} (1, 0; (b/alpha) z, 1) g_0 g_+`.
pub fn act_left_sl2<T: Real>(h: &MoebiusParam<T>, f: &BirkhoffFactors<T>) -> Result<BirkhoffFactors<T>> {
    require_sl2(f)?;
    let emb = RootEmbedding::new(2)?;
    let g1 = f.g_minus.coeff(-1);
    let g2 = f.g_minus.coeff(-2);
    let (a1, b1, b2) = (g1[(0, 0)], g1[(0, 1)], g2[(0, 1)]);
    let alpha = h.a + h.b * b1;
    check_divisor(alpha, "a + b B_1 vanishes")?;
    let two = lit::<T>(2.0);
    let gamma0 = (-(h.a * h.b * a1 * two) + h.b * h.b * (b2 - a1 * b1)) / alpha;
    let z = C::zero();
    let right = TruncatedLoop::from_terms(2, 0, vec![Mat::m2(alpha, z, gamma0, alpha.inv()), Mat::m2(z, z, -h.b, z)]);
    let g_minus = TruncatedLoop::product_all(&[&i0_loop(h, &emb), &f.g_minus, &right])?.nonpositive_part();
    let g_zero = &Mat::m2(alpha.inv(), z, -gamma0, alpha) * &f.g_zero;
    let g0_inv = f.g_zero.inverse().ok_or(Error::Degenerate("g_0 is singular"))?;
    let lower = unipotent(&emb.e_minus_theta, h.b / alpha, 1);
    let g_plus = lower.left_mul(&g0_inv).right_mul(&f.g_zero).product(&f.g_plus)?;
    Ok(BirkhoffFactors::from_parts(
        g_minus.tagged_unchecked(f.g_minus.tag()),
        g_zero,
        g_plus.tagged_unchecked(f.g_plus.tag()),
    ))
}

/// SL(2) form of right multiplication by `i_0(h)^{-1}`, written with the `g_+` entries
/// `a_n = (g_+)_{n,00}`, `c_n = (g_+)_{n,10}`:
/// `alpha' = d - c c_1`, `beta_0 = (2cd a_1 + c^2 (c_2 - a_1 c_1))/alpha'`,
/// `g_0' = g_0 (1/alpha', -beta_0; 0, alpha')`, `g_-' = g_- g_0 (1, -(c/alpha') z^{-1}; 0, 1) g_0^{-1}`,
/// `g_+' = ((alpha', beta_0 + c z^{-1}; 0, 1/alpha') g_+ i_0(h)^{-1})_{>=0}`.
pub fn act_right_inverse_sl2<T: Real>(h: &MoebiusParam<T>, f: &BirkhoffFactors<T>) -> Result<BirkhoffFactors<T>> {
    require_sl2(f)?;
    let emb = RootEmbedding::new(2)?;
    let p1 = f.g_plus.coeff(1);
    let p2 = f.g_plus.coeff(2);
    let (a1, c1, c2) = (p1[(0, 0)], p1[(1, 0)], p2[(1, 0)]);
    let alpha = h.d - h.c * c1;
    check_divisor(alpha, "d - c c_1 vanishes")?;
    let two = lit::<T>(2.0);
    let beta0 = (h.c * h.d * a1 * two + h.c * h.c * (c2 - a1 * c1)) / alpha;
    let z = C::zero();
    let g_zero = &f.g_zero * &Mat::m2(alpha.inv(), -beta0, z, alpha);
    let g0_inv = f.g_zero.inverse().ok_or(Error::Degenerate("g_0 is singular"))?;
    let g_minus =
        f.g_minus.product(&unipotent(&emb.e_theta, -h.c / alpha, -1).left_mul(&f.g_zero).right_mul(&g0_inv))?;
    let left = TruncatedLoop::from_terms(2, -1, vec![Mat::m2(z, h.c, z, z), Mat::m2(alpha, beta0, z, alpha.inv())]);
    let g_plus = TruncatedLoop::product_all(&[&left, &f.g_plus, &i0_loop(&h.inverse(), &emb)])?.nonnegative_part();
    Ok(BirkhoffFactors::from_parts(
        g_minus.tagged_unchecked(f.g_minus.tag()),
        g_zero,
        g_plus.tagged_unchecked(f.g_plus.tag()),
    ))
}
