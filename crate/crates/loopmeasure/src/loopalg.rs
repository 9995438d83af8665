//! Truncated matrix-valued Laurent series on the circle.
//!
//! A loop is stored as its coefficients over a degree window `[lo, hi]` with
//! `lo <= 0 <= hi`. Products into a fixed window drop out-of-window terms and
//! record the loss in a flag rather than erroring.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::{from_pair, lit, to_pair, Real, C};

/// Default working window `[-16, 16]`.
pub const DEFAULT_WINDOW: i32 = 16;
/// Tolerance on `|det - 1|` for SL-tagged loops.
pub const TOL_DET: f64 = 1e-9;
/// Relative size above which a dropped product term marks a loop lossy.
pub const TOL_TRUNC: f64 = 1e-14;

/// Group the loop takes values in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupTag {
    GL,
    SL2,
    SL3,
}

impl GroupTag {
    /// Matrix size the tag forces, if any.
    pub fn required_dim(self) -> Option<usize> {
        match self {
            GroupTag::GL => None,
            GroupTag::SL2 => Some(2),
            GroupTag::SL3 => Some(3),
        }
    }

    pub fn is_special(self) -> bool {
        self != GroupTag::GL
    }

    /// The SL tag of the given size, or `GL`.
    pub fn special(dim: usize) -> Self {
        match dim {
            2 => GroupTag::SL2,
            3 => GroupTag::SL3,
            _ => GroupTag::GL,
        }
    }
}

/// Matrix Laurent polynomial `sum_{k=lo}^{hi} coeffs[k - lo] z^k`.
#[derive(Clone, Debug)]
pub struct TruncatedLoop<T> {
    dim: usize,
    lo: i32,
    hi: i32,
    coeffs: Vec<Mat<T>>,
    tag: GroupTag,
    lossy: bool,
}

/// Smallest power of two holding `4 * (hi - lo + 1)` samples.
pub fn grid_size(lo: i32, hi: i32) -> usize {
    (4 * (hi - lo + 1) as usize).next_power_of_two()
}

/// `e^{2 pi i j / m}` for `j` in `0..m`.
pub fn circle_grid<T: Real>(m: usize) -> Vec<C<T>> {
    (0..m).map(|j| Complex::from_polar(T::one(), T::TAU() * lit::<T>(j as f64) / lit::<T>(m as f64))).collect()
}

impl<T: Real> TruncatedLoop<T> {
    /// Validated constructor. SL tags are checked on the circle grid.
    pub fn new(dim: usize, lo: i32, hi: i32, coeffs: Vec<Mat<T>>, tag: GroupTag) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(Error::InvalidInput(format!("window [{lo}, {hi}] must contain 0")));
        }
        let len = (hi - lo + 1) as usize;
        if coeffs.len() != len {
            return Err(Error::InvalidInput(format!("{} coefficients for window of length {len}", coeffs.len())));
        }
        for c in &coeffs {
            if c.rows() != dim || c.cols() != dim {
                return Err(Error::DimensionMismatch(dim, c.rows()));
            }
        }
        if let Some(d) = tag.required_dim() {
            if d != dim {
                return Err(Error::DimensionMismatch(d, dim));
            }
        }
        let g = TruncatedLoop { dim, lo, hi, coeffs, tag, lossy: false };
        if tag.is_special() {
            let dev = g.det_deviation();
            if !(dev < TOL_DET) {
                return Err(Error::InvalidInput(format!("{tag:?} loop has |det - 1| = {dev:e} on the circle")));
            }
        }
        Ok(g)
    }

    /// Unchecked `GL` loop from coefficients starting at degree `lo`.
    /// The window is widened to contain degree 0 if necessary.
    pub fn from_terms(dim: usize, lo: i32, mut coeffs: Vec<Mat<T>>) -> Self {
        let mut lo = lo;
        if coeffs.is_empty() {
            coeffs.push(Mat::zeros(dim, dim));
            lo = 0;
        }
        while lo > 0 {
            coeffs.insert(0, Mat::zeros(dim, dim));
            lo -= 1;
        }
        let mut hi = lo + coeffs.len() as i32 - 1;
        while hi < 0 {
            coeffs.push(Mat::zeros(dim, dim));
            hi += 1;
        }
        TruncatedLoop { dim, lo, hi, coeffs, tag: GroupTag::GL, lossy: false }
    }

    /// Loop with the given coefficient function over `[lo, hi]`.
    pub fn from_fn(dim: usize, lo: i32, hi: i32, mut f: impl FnMut(i32) -> Mat<T>) -> Self {
        Self::from_terms(dim, lo, (lo..=hi).map(&mut f).collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(Mat::identity(dim)).tagged_unchecked(GroupTag::special(dim))
    }

    pub fn constant(m: Mat<T>) -> Self {
        Self::monomial(m, 0)
    }

    /// `m z^k`.
    pub fn monomial(m: Mat<T>, k: i32) -> Self {
        let dim = m.rows();
        Self::from_fn(dim, k.min(0), k.max(0), |j| if j == k { m.clone() } else { Mat::zeros(dim, dim) })
    }

    /// Re-tags after checking the determinant invariant.
    pub fn with_tag(self, tag: GroupTag) -> Result<Self> {
        let lossy = self.lossy;
        let mut g = Self::new(self.dim, self.lo, self.hi, self.coeffs, tag)?;
        g.lossy = lossy;
        Ok(g)
    }

    pub(crate) fn tagged_unchecked(mut self, tag: GroupTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.hi
    }

    pub fn tag(&self) -> GroupTag {
        self.tag
    }

    /// True when a product into a fixed window dropped a nonzero term.
    pub fn is_lossy(&self) -> bool {
        self.lossy
    }

    pub fn coeffs(&self) -> &[Mat<T>] {
        &self.coeffs
    }

    /// Coefficient of `z^k`, if inside the window.
    pub fn get(&self, k: i32) -> Option<&Mat<T>> {
        if k < self.lo || k > self.hi {
            None
        } else {
            Some(&self.coeffs[(k - self.lo) as usize])
        }
    }

    /// Coefficient of `z^k`, zero outside the window.
    pub fn coeff(&self, k: i32) -> Mat<T> {
        self.get(k).cloned().unwrap_or_else(|| Mat::zeros(self.dim, self.dim))
    }

    /// Entry `(i, j)` of the coefficient of `z^k`, zero outside the window.
    pub fn entry(&self, k: i32, i: usize, j: usize) -> C<T> {
        self.get(k).map(|m| m[(i, j)]).unwrap_or_else(C::zero)
    }

    /// `sum_k c_k z^k`.
    pub fn evaluate(&self, z: C<T>) -> Mat<T> {
        let mut out = Mat::zeros(self.dim, self.dim);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = self.lo + idx as i32;
            out += &c.scale(z.powi(k));
        }
        out
    }

    /// Largest coefficient entry modulus.
    pub fn norm_max(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm_max()))
    }

    /// Largest entry difference over the union of both windows.
    pub fn max_coeff_diff(&self, other: &Self) -> T {
        let lo = self.lo.min(other.lo);
        let hi = self.hi.max(other.hi);
        (lo..=hi).fold(T::zero(), |m, k| m.max(self.coeff(k).max_abs_diff(&other.coeff(k))))
    }

    /// Exact product over the full window `[lo1 + lo2, hi1 + hi2]`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.mul_window(other, self.lo + other.lo, self.hi + other.hi)
    }

    /// Product into `[-n, n]`.
    pub fn mul(&self, other: &Self, n: i32) -> Result<Self> {
        self.mul_window(other, -n, n)
    }

    /// Product into `[lo, hi]`, flagging dropped nonzero terms.
    pub fn mul_window(&self, other: &Self, lo: i32, hi: i32) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let d = self.dim;
        let full_lo = self.lo + other.lo;
        let full_hi = self.hi + other.hi;
        let mut full: Vec<Mat<T>> = (full_lo..=full_hi).map(|_| Mat::zeros(d, d)).collect();
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                full[i + j] += &(a * b);
            }
        }
        let scale = self.norm_max() * other.norm_max();
        let mut lossy = self.lossy || other.lossy;
        let cut = lit::<T>(TOL_TRUNC) * scale.max(T::one());
        let mut coeffs = Vec::with_capacity((hi - lo + 1) as usize);
        for k in lo..=hi {
            if k >= full_lo && k <= full_hi {
                coeffs.push(full[(k - full_lo) as usize].clone());
            } else {
                coeffs.push(Mat::zeros(d, d));
            }
        }
        for (idx, c) in full.iter().enumerate() {
            let k = full_lo + idx as i32;
            if (k < lo || k > hi) && c.norm_max() > cut {
                lossy = true;
            }
        }
        let tag = if self.tag == other.tag { self.tag } else { GroupTag::GL };
        let mut out = Self::from_terms(d, lo, coeffs).tagged_unchecked(tag);
        out.lossy = lossy;
        Ok(out)
    }

    /// Exact product of several loops, left to right.
    pub fn product_all(factors: &[&Self]) -> Result<Self> {
        let mut it = factors.iter();
        let first = it.next().ok_or(Error::Degenerate("empty product"))?;
        it.try_fold((*first).clone(), |acc, f| acc.product(f))
    }

    /// `m * g`.
    pub fn left_mul(&self, m: &Mat<T>) -> Self {
        self.map_coeffs(|c| m * c)
    }

    /// `g * m`.
    pub fn right_mul(&self, m: &Mat<T>) -> Self {
        self.map_coeffs(|c| c * m)
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(&Mat<T>) -> Mat<T>) -> Self {
        TruncatedLoop {
            dim: self.dim,
            lo: self.lo,
            hi: self.hi,
            coeffs: self.coeffs.iter().map(&mut f).collect(),
            tag: GroupTag::GL,
            lossy: self.lossy,
        }
    }

    /// Coefficients restricted to `[lo, hi]` (zero-padded as needed).
    pub fn restrict(&self, lo: i32, hi: i32) -> Self {
        let mut out = Self::from_fn(self.dim, lo, hi, |k| self.coeff(k));
        out.lossy = self.lossy;
        out
    }

    /// Part in degrees `<= 0`.
    pub fn nonpositive_part(&self) -> Self {
        self.restrict(self.lo, 0)
    }

    /// Part in degrees `>= 0`.
    pub fn nonnegative_part(&self) -> Self {
        self.restrict(0, self.hi)
    }

    /// Drops outer coefficients whose entries are all below `tol`.
    pub fn trimmed(&self, tol: T) -> Self {
        let mut lo = self.lo;
        let mut hi = self.hi;
        while lo < 0 && self.coeff(lo).norm_max() <= tol {
            lo += 1;
        }
        while hi > 0 && self.coeff(hi).norm_max() <= tol {
            hi -= 1;
        }
        let mut out = self.restrict(lo, hi);
        out.tag = self.tag;
        out
    }

    /// `g*(z) = g(1/conj z)^dagger`: reverses degrees and conjugate-transposes.
    pub fn star(&self) -> Self {
        let coeffs = (-self.hi..=-self.lo).map(|k| self.coeff(-k).adjoint()).collect();
        let mut out = Self::from_terms(self.dim, -self.hi, coeffs).tagged_unchecked(self.tag);
        out.lossy = self.lossy;
        out
    }

    /// Coefficient-wise conjugation by the involution's matrix.
    pub fn theta(&self, cfg: &InvolutionConfig<T>) -> Self {
        let mut out = self.map_coeffs(|c| cfg.apply(c)).tagged_unchecked(self.tag);
        out.lossy = self.lossy;
        out
    }

    /// `g^{* Theta}`.
    pub fn star_theta(&self, cfg: &InvolutionConfig<T>) -> Self {
        self.star().theta(cfg)
    }

    /// Values on the `m`-point circle grid.
    pub fn sample_grid(&self, m: usize) -> Vec<Mat<T>> {
        circle_grid::<T>(m).into_iter().map(|z| self.evaluate(z)).collect()
    }

    /// Largest `|det g(z) - 1|` over the `4 (hi - lo + 1)`-point grid.
    pub fn det_deviation(&self) -> f64 {
        let m = 4 * (self.hi - self.lo + 1) as usize;
        circle_grid::<T>(m)
            .into_iter()
            .map(|z| (self.evaluate(z).det() - C::one()).norm().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// Smallest `|det g(z)|` on the `m`-point grid.
    pub fn min_abs_det(&self, m: usize) -> f64 {
        self.sample_grid(m).iter().map(|g| g.det().norm().to_f64().unwrap_or(0.0)).fold(f64::INFINITY, f64::min)
    }

    /// Pointwise inverse refit into `[-n, n]`.
    pub fn inverse_window(&self, n: i32) -> Result<Self> {
        let m = grid_size(-n.max(-self.lo), n.max(self.hi));
        let tol = lit::<T>(TOL_DET);
        let mut values = Vec::with_capacity(m);
        let mut min_det = f64::INFINITY;
        for g in self.sample_grid(m) {
            let det = g.det();
            min_det = min_det.min(det.norm().to_f64().unwrap_or(0.0));
            if det.norm() < tol {
                return Err(Error::SingularOnCircle { min_det });
            }
            values.push(g.inverse().ok_or(Error::SingularOnCircle { min_det: 0.0 })?);
        }
        let mut out = refit(self.dim, &values, -n, n)?.tagged_unchecked(self.tag);
        out.lossy = self.lossy;
        Ok(out)
    }

    /// Pointwise inverse refit into the default window.
    pub fn inverse(&self) -> Result<Self> {
        self.inverse_window(DEFAULT_WINDOW)
    }

    pub fn to_json(&self) -> LoopJson {
        LoopJson {
            dim: self.dim,
            lo: self.lo,
            hi: self.hi,
            coeffs: self.coeffs.iter().map(|c| c.as_slice().iter().map(|&z| to_pair(z)).collect()).collect(),
            group_tag: self.tag,
        }
    }

    pub fn from_json(j: &LoopJson) -> Result<Self> {
        let d = j.dim;
        let coeffs = j
            .coeffs
            .iter()
            .map(|c| {
                if c.len() != d * d {
                    return Err(Error::InvalidInput(format!(
                        "coefficient has {} entries, expected {}",
                        c.len(),
                        d * d
                    )));
                }
                Ok(Mat::from_vec(d, d, c.iter().map(|&p| from_pair(p)).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, j.lo, j.hi, coeffs, j.group_tag)
    }
}

/// Refits grid samples `values[j] = g(e^{2 pi i j/m})` to degrees `[lo, hi]`.
pub fn refit<T: Real>(dim: usize, values: &[Mat<T>], lo: i32, hi: i32) -> Result<TruncatedLoop<T>> {
    let m = values.len();
    if m == 0 {
        return Err(Error::InvalidInput("no grid samples".into()));
    }
    let inv_m = lit::<T>(1.0 / m as f64);
    let coeffs = (lo..=hi)
        .map(|k| {
            let mut c = Mat::zeros(dim, dim);
            for (j, v) in values.iter().enumerate() {
                let phase = -T::TAU() * lit::<T>(((k as i64 * j as i64).rem_euclid(m as i64)) as f64) * inv_m;
                c += &v.scale(Complex::from_polar(inv_m, phase));
            }
            c
        })
        .collect();
    Ok(TruncatedLoop::from_terms(dim, lo, coeffs))
}

/// Fraction of the discrete spectral mass of grid samples lying outside `[-n, n]`.
pub fn out_of_window_fraction<T: Real>(dim: usize, values: &[Mat<T>], n: i32) -> Result<f64> {
    let m = values.len() as i32;
    let half = m / 2;
    let all = refit(dim, values, -half + 1, half)?;
    let mut inside = 0.0;
    let mut total = 0.0;
    for k in (-half + 1)..=half {
        let e = all.coeff(k).frobenius_sq().to_f64().unwrap_or(f64::INFINITY);
        total += e;
        if k.abs() <= n {
            inside += e;
        }
    }
    Ok(if total > 0.0 { 1.0 - inside / total } else { 0.0 })
}

/// Loop JSON record with fixed field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopJson {
    pub dim: usize,
    pub lo: i32,
    pub hi: i32,
    pub coeffs: Vec<Vec<[f64; 2]>>,
    pub group_tag: GroupTag,
}

/// The involution `Theta` (conjugation by a fixed matrix) and the sign `epsilon`
/// with `Theta(e_theta) = -epsilon e_theta`.
#[derive(Clone, Debug)]
pub struct InvolutionConfig<T> {
    theta_conjugator: Mat<T>,
    theta_inverse: Mat<T>,
    epsilon: i8,
}

impl<T: Real> InvolutionConfig<T> {
    /// Checks that conjugation squares to the identity and that `epsilon`
    /// matches the action on the highest-root vector `E_{0,d-1}`.
    pub fn new(theta_conjugator: Mat<T>, epsilon: i8) -> Result<Self> {
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::InvalidInput(format!("epsilon must be +1 or -1, got {epsilon}")));
        }
        let d = theta_conjugator.rows();
        let inv = theta_conjugator.inverse().ok_or(Error::Degenerate("singular involution matrix"))?;
        let sq = &theta_conjugator * &theta_conjugator;
        let s = sq[(0, 0)];
        let tol = lit::<T>(1e-12);
        if sq.max_abs_diff(&Mat::identity(d).scale(s)) > tol * s.norm().max(T::one()) {
            return Err(Error::InvalidInput("conjugation does not square to the identity".into()));
        }
        let cfg = InvolutionConfig { theta_conjugator, theta_inverse: inv, epsilon };
        let image = cfg.apply(&Mat::unit(d, 0, d - 1))[(0, d - 1)];
        let expected = lit::<T>(-(epsilon as f64));
        if (image - C::new(expected, T::zero())).norm() > tol {
            return Err(Error::InvalidInput(format!(
                "epsilon = {epsilon} inconsistent: Theta scales e_theta by {image}"
            )));
        }
        Ok(cfg)
    }

    /// `Theta = Ad diag(1, -1)` on SL(2), the S^2 involution, `epsilon = +1`.
    pub fn s2() -> Self {
        Self::diagonal(&[1.0, -1.0], 1).expect("S^2 involution is consistent")
    }

    /// SL(3) involution with the given `epsilon`:
    /// `diag(1, 1, -1)` for `+1`, `diag(1, -1, 1)` for `-1`.
    pub fn sl3(epsilon: i8) -> Result<Self> {
        match epsilon {
            1 => Self::diagonal(&[1.0, 1.0, -1.0], 1),
            -1 => Self::diagonal(&[1.0, -1.0, 1.0], -1),
            e => Err(Error::InvalidInput(format!("epsilon must be +1 or -1, got {e}"))),
        }
    }

    pub fn diagonal(signs: &[f64], epsilon: i8) -> Result<Self> {
        let d: Vec<C<T>> = signs.iter().map(|&s| C::new(lit(s), T::zero())).collect();
        Self::new(Mat::diag(&d), epsilon)
    }

    pub fn dim(&self) -> usize {
        self.theta_conjugator.rows()
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn conjugator(&self) -> &Mat<T> {
        &self.theta_conjugator
    }

    /// `Theta(x) = D x D^{-1}`.
    pub fn apply(&self, x: &Mat<T>) -> Mat<T> {
        &(&self.theta_conjugator * x) * &self.theta_inverse
    }

    /// `x^{* Theta} = Theta(x^dagger)` for a constant matrix.
    pub fn star_theta(&self, x: &Mat<T>) -> Mat<T> {
        self.apply(&x.adjoint())
    }
}

/// Rotation angle of an SU(2) element, in `[0, pi]`.
pub fn su2_angle<T: Real>(g: &Mat<T>) -> T {
    let half_trace = (g[(0, 0)] + g[(1, 1)]).re * lit::<T>(0.5);
    let anti = &(g - &g.adjoint()).scale_re(lit::<T>(0.5));
    let sin = (anti.frobenius_sq() * lit::<T>(0.5)).sqrt();
    sin.atan2(half_trace)
}

/// Kinetic energy `(1/2) sum |log(g_i^{-1} g_{i+1})|^2 / dt` of a closed SU(2) path,
/// with `|X|^2 = -trace(X^2)` and `dt = 1/(points.len() - 1)`.
pub fn energy<T: Real>(points: &[Mat<T>]) -> Result<T> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("a path needs at least two points".into()));
    }
    let steps = points.len() - 1;
    let dt = T::one() / lit::<T>(steps as f64);
    let limit = T::PI() - lit::<T>(1e-12);
    let mut total = T::zero();
    for w in points.windows(2) {
        let step = &w[0].adjoint() * &w[1];
        let angle = su2_angle(&step);
        if angle >= limit {
            return Err(Error::StepTooLarge { angle: angle.to_f64().unwrap_or(f64::NAN) });
        }
        total += lit::<T>(2.0) * angle * angle;
    }
    Ok(lit::<T>(0.5) * total / dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{rand_loop, rng_from_seed};
    use crate::scalar::cx;

    type L = TruncatedLoop<f64>;

    fn e(i: usize, j: usize) -> Mat<f64> {
        Mat::unit(2, i, j)
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = rng_from_seed(1);
        let g = rand_loop::<f64, _>(2, 3, &mut rng);
        let p = L::identity(2).product(&g).unwrap();
        assert_eq!(p.max_coeff_diff(&g), 0.0);
    }

    #[test]
    fn hand_expansion_of_unipotent_product() {
        let f = L::from_terms(2, -1, vec![e(0, 1), Mat::identity(2)]);
        let g = L::from_terms(2, 0, vec![Mat::identity(2), e(1, 0)]);
        let p = f.product(&g).unwrap();
        let expected = L::from_terms(2, -1, vec![e(0, 1), &Mat::identity(2) + &e(0, 0), e(1, 0)]);
        assert!(p.max_coeff_diff(&expected) < 1e-15);
    }

    #[test]
    fn windowed_product_matches_pointwise_product() {
        let mut rng = rng_from_seed(2);
        let f = rand_loop::<f64, _>(2, 4, &mut rng);
        let g = rand_loop::<f64, _>(2, 4, &mut rng);
        let p = f.mul(&g, 8).unwrap();
        assert!(!p.is_lossy());
        let grid = circle_grid::<f64>(64);
        for z in grid {
            let lhs = p.evaluate(z);
            let rhs = &f.evaluate(z) * &g.evaluate(z);
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn truncation_sets_flag() {
        let f = L::monomial(Mat::identity(2), 3);
        let p = f.mul(&f, 4).unwrap();
        assert!(p.is_lossy());
        assert!(p.norm_max() == 0.0);
    }

    #[test]
    fn inverse_of_constant_diagonal() {
        let g = L::constant(Mat::diag(&[cx(2.0, 0.0), cx(0.5, 0.0)]));
        let inv = g.inverse().unwrap();
        let expected = L::constant(Mat::diag(&[cx(0.5, 0.0), cx(2.0, 0.0)]));
        assert!(inv.max_coeff_diff(&expected) < 1e-14);
    }

    #[test]
    fn inverse_of_nilpotent_perturbation() {
        let g = L::from_terms(2, -1, vec![e(0, 1), Mat::identity(2)]);
        let inv = g.inverse().unwrap();
        let expected = L::from_terms(2, -1, vec![e(0, 1).scale(cx(-1.0, 0.0)), Mat::identity(2)]);
        assert!(inv.max_coeff_diff(&expected) < 1e-14);
        let back = g.mul(&inv, DEFAULT_WINDOW).unwrap();
        assert!(back.max_coeff_diff(&L::identity(2)) < 1e-14);
    }

    #[test]
    fn inverse_reports_singular_loop() {
        // det g(z) = 1 - z vanishes at z = 1.
        let g = L::from_terms(2, 0, vec![Mat::identity(2), e(1, 1).scale(cx(-1.0, 0.0))]);
        assert!(matches!(g.inverse(), Err(Error::SingularOnCircle { .. })));
    }

    #[test]
    fn star_of_monomial_swaps_degrees() {
        let g = L::from_terms(2, -1, vec![e(1, 1), Mat::zeros(2, 2), e(0, 0)]);
        let s = g.star();
        let expected = L::from_terms(2, -1, vec![e(0, 0), Mat::zeros(2, 2), e(1, 1)]);
        assert_eq!(s.max_coeff_diff(&expected), 0.0);
    }

    #[test]
    fn star_is_inverse_on_unitary_loops() {
        let t = std::f64::consts::PI / 5.0;
        let k = Mat::m2(cx(t.cos(), 0.0), cx(t.sin(), 0.0), cx(-t.sin(), 0.0), cx(t.cos(), 0.0));
        let d = L::from_terms(2, -1, vec![e(1, 1), Mat::zeros(2, 2), e(0, 0)]);
        let g = L::constant(k.clone()).product(&d).unwrap().product(&L::constant(k.adjoint())).unwrap();
        let inv = g.inverse().unwrap();
        assert!(g.star().max_coeff_diff(&inv) < 1e-10);
    }

    #[test]
    fn involutions_square_to_identity_and_commute() {
        let mut rng = rng_from_seed(3);
        let cfg = InvolutionConfig::s2();
        let g = rand_loop::<f64, _>(2, 3, &mut rng);
        assert_eq!(g.star().star().max_coeff_diff(&g), 0.0);
        assert_eq!(g.theta(&cfg).theta(&cfg).max_coeff_diff(&g), 0.0);
        assert_eq!(g.star().theta(&cfg).max_coeff_diff(&g.theta(&cfg).star()), 0.0);
    }

    #[test]
    fn epsilon_is_validated() {
        assert!(InvolutionConfig::<f64>::diagonal(&[1.0, -1.0], -1).is_err());
        assert!(InvolutionConfig::<f64>::diagonal(&[1.0, 1.0, -1.0], 1).is_ok());
        assert!(InvolutionConfig::<f64>::diagonal(&[1.0, -1.0, 1.0], 1).is_err());
    }

    #[test]
    fn sl_tag_is_checked() {
        let bad = vec![Mat::diag(&[cx(2.0, 0.0), cx(1.0, 0.0)])];
        assert!(L::new(2, 0, 0, bad, GroupTag::SL2).is_err());
        let good = vec![Mat::diag(&[cx(2.0, 0.0), cx(0.5, 0.0)])];
        assert!(L::new(2, 0, 0, good, GroupTag::SL2).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let mut rng = rng_from_seed(4);
        let g = rand_loop::<f64, _>(3, 2, &mut rng);
        let text = serde_json::to_string(&g.to_json()).unwrap();
        let back = L::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.max_coeff_diff(&g), 0.0);
        assert_eq!(back.lo(), g.lo());
    }

    fn rotation_path(m: usize) -> Vec<Mat<f64>> {
        (0..=m)
            .map(|j| {
                let t = j as f64 / m as f64;
                let p = std::f64::consts::TAU * t;
                Mat::diag(&[cx(p.cos(), p.sin()), cx(p.cos(), -p.sin())])
            })
            .collect()
    }

    #[test]
    fn energy_of_constant_path_is_zero() {
        let pts = vec![Mat::<f64>::identity(2); 17];
        assert_eq!(energy(&pts).unwrap(), 0.0);
    }

    #[test]
    fn energy_of_rotation_loop() {
        // |2 pi i diag(1,-1)|^2 = 8 pi^2 under -trace(XY); half of it integrated over [0, 1].
        let e256 = energy(&rotation_path(256)).unwrap();
        assert!((e256 - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-6);
        let e512 = energy(&rotation_path(512)).unwrap();
        assert!((e512 - e256).abs() < 1e-8);
    }

    #[test]
    fn energy_rejects_large_steps() {
        assert!(matches!(energy(&rotation_path(2)), Err(Error::StepTooLarge { .. })));
    }
}
