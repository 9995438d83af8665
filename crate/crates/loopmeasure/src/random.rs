//! Seeded random generators for matrices, factors and symmetric points.
//!
//! Every generator draws from a caller-supplied RNG, so batches can give each
//! trial its own counter-based stream and stay independent of scheduling.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::loopalg::{InvolutionConfig, TruncatedLoop};
use crate::mat::Mat;
use crate::scalar::{lit, Real, C};

/// Deterministic RNG from a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian with independent N(0,1) parts.
pub fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(lit(re), lit(im))
}

pub fn gaussian_matrix<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat<T> {
    Mat::from_fn(d, d, |_, _| gaussian(rng))
}

/// Random element of SL(d, C): a Gaussian matrix divided by a `d`-th root of its determinant.
pub fn rand_sl<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat<T> {
    loop {
        let m = gaussian_matrix::<T, _>(d, rng);
        let det = m.det();
        if det.norm() > lit(1e-3) {
            let root = det.powf(T::one() / lit::<T>(d as f64));
            return m.scale(root.inv());
        }
    }
}

/// Haar-random element of SU(2).
pub fn rand_su2<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Mat<T> {
    let a = gaussian::<T, _>(rng);
    let b = gaussian::<T, _>(rng);
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    Mat::m2(a, b, -b.conj(), a.conj())
}

/// Random element of SL(d) that is neither nearly singular nor far from unitary.
pub fn rand_sl_conditioned<T: Real, R: Rng + ?Sized>(d: usize, max_norm: f64, rng: &mut R) -> Mat<T> {
    loop {
        let m = rand_sl::<T, _>(d, rng);
        let inv = m.inverse().expect("SL element is invertible");
        if m.norm1().to_f64().unwrap() <= max_norm && inv.norm1().to_f64().unwrap() <= max_norm {
            return m;
        }
    }
}

/// Random `g_-`: a product of unipotent factors `1 + c E_ij z^{-k}` with total degree
/// at most `max_depth`, conjugated by a fixed well-conditioned constant so that the
/// result is generic. Its degree-0 coefficient is the identity and `det = 1`.
pub fn rand_minus<T: Real, R: Rng + ?Sized>(d: usize, max_depth: i32, scale: f64, rng: &mut R) -> TruncatedLoop<T> {
    let mut g = TruncatedLoop::<T>::identity(d);
    let mut depth = 0;
    let mut t = 0;
    while depth < max_depth {
        let k = (t % 2 + 1).min(max_depth - depth);
        t += 1;
        let i = rng.random_range(0..d);
        let mut j = rng.random_range(0..d - 1);
        if j >= i {
            j += 1;
        }
        let mut e = Mat::zeros(d, d);
        e[(i, j)] = gaussian::<T, _>(rng).scale(lit(scale));
        let factor = TruncatedLoop::from_terms(d, -k, {
            let mut v = vec![Mat::zeros(d, d); k as usize + 1];
            v[0] = e;
            v[k as usize] = Mat::identity(d);
            v
        });
        g = g.product(&factor).expect("same dimension");
        depth += k;
    }
    let c = &gaussian_matrix::<T, _>(d, rng).scale_re(lit(0.3)) + &Mat::identity(d).scale_re(lit(2.0));
    let ci = c.inverse().expect("diagonally dominant");
    g.map_coeffs(|x| &(&c * x) * &ci).tagged_unchecked(crate::loopalg::GroupTag::special(d))
}

/// Random `g_+`, the star of a random `g_-`.
pub fn rand_plus<T: Real, R: Rng + ?Sized>(d: usize, max_degree: i32, scale: f64, rng: &mut R) -> TruncatedLoop<T> {
    rand_minus::<T, _>(d, max_degree, scale, rng).star()
}

/// Random factor triple `(g_-, g_0, g_+)` of a top-stratum SL(d) loop.
pub fn rand_factors<T: Real, R: Rng + ?Sized>(
    d: usize,
    depth: i32,
    rng: &mut R,
) -> (TruncatedLoop<T>, Mat<T>, TruncatedLoop<T>) {
    let gm = rand_minus::<T, _>(d, depth, 0.5, rng);
    let g0 = rand_sl_conditioned::<T, _>(d, 8.0, rng);
    let gp = rand_plus::<T, _>(d, depth, 0.5, rng);
    (gm, g0, gp)
}

/// Random symmetric factor triple for the involution `cfg`: `g_0 = k Theta(k^dagger)`
/// and `g_+ = g_-^{* Theta}`, so that `g^{* Theta} = g`.
pub fn rand_symmetric<T: Real, R: Rng + ?Sized>(
    cfg: &InvolutionConfig<T>,
    depth: i32,
    rng: &mut R,
) -> (TruncatedLoop<T>, Mat<T>, TruncatedLoop<T>) {
    let d = cfg.dim();
    let gm = rand_minus::<T, _>(d, depth, 0.5, rng);
    let k = rand_sl_conditioned::<T, _>(d, 4.0, rng);
    let g0 = &k * &cfg.star_theta(&k);
    let gp = gm.star_theta(cfg);
    (gm, g0, gp)
}

/// Random loop with Gaussian coefficients of size `1/(1 + |k|)` in `[-n, n]`.
pub fn rand_loop<T: Real, R: Rng + ?Sized>(d: usize, n: i32, rng: &mut R) -> TruncatedLoop<T> {
    TruncatedLoop::from_fn(d, -n, n, |k| gaussian_matrix::<T, _>(d, rng).scale_re(lit(1.0 / (1.0 + k.abs() as f64))))
}
