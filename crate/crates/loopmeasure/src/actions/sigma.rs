//! The automorphism `sigma` of SL(2) loops and its SU(n) generalization `sigma_Delta`.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::birkhoff::{BirkhoffFactors, TOL_DIV};
use crate::error::{Error, Result};
use crate::loopalg::{circle_grid, grid_size, refit, TruncatedLoop};
use crate::mat::Mat;
use crate::scalar::{lit, Real, C};

/// Conjugation by `diag(z^{1/2}, z^{-1/2})`: multiplies entry `(0,1)` by `z` and
/// entry `(1,0)` by `z^{-1}`.
pub fn sigma_loop<T: Real>(g: &TruncatedLoop<T>) -> Result<TruncatedLoop<T>> {
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch(2, g.dim()));
    }
    Ok(TruncatedLoop::from_fn(2, g.lo() - 1, g.hi() + 1, |k| {
        let same = g.coeff(k);
        Mat::m2(same[(0, 0)], g.entry(k - 1, 0, 1), g.entry(k + 1, 1, 0), same[(1, 1)])
    }))
}

/// Factors of `g^sigma` in closed form, for `a_0 != 0`:
/// `(g^s)_0 = (a_0 + B_1 c_1/a_0, B_1/a_0; c_1/a_0, 1/a_0)`,
/// `(g^s)_- = s(g_-) [(1, -B_1; 0, 1) + (0, 0; c_0/a_0, -B_1 c_0/a_0) z^{-1}]`,
/// `(g^s)_+ = [(1, 0; -c_1, 1) + (0, b_0/a_0; 0, -c_1 b_0/a_0) z] s(g_+)`.
pub fn act_sigma<T: Real>(f: &BirkhoffFactors<T>) -> Result<BirkhoffFactors<T>> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch(2, f.dim()));
    }
    let g0 = &f.g_zero;
    let (a0, b0, c0) = (g0[(0, 0)], g0[(0, 1)], g0[(1, 0)]);
    if a0.norm() < lit(TOL_DIV) {
        return Err(Error::Degenerate("a_0 vanishes"));
    }
    let b1 = f.g_minus.entry(-1, 0, 1);
    let c1 = f.g_plus.entry(1, 1, 0);
    let (o, z) = (C::one(), C::zero());
    let g_zero = Mat::m2(a0 + b1 * c1 / a0, b1 / a0, c1 / a0, a0.inv());
    let right = TruncatedLoop::from_terms(2, -1, vec![Mat::m2(z, z, c0 / a0, -b1 * c0 / a0), Mat::m2(o, -b1, z, o)]);
    let left = TruncatedLoop::from_terms(2, 0, vec![Mat::m2(o, z, -c1, o), Mat::m2(z, b0 / a0, z, -c1 * b0 / a0)]);
    let g_minus = sigma_loop(&f.g_minus)?.product(&right)?.nonpositive_part();
    let g_plus = left.product(&sigma_loop(&f.g_plus)?)?.nonnegative_part();
    Ok(BirkhoffFactors::from_parts(g_minus, g_zero, g_plus))
}

/// `B_n(g^sigma) = -A_n B_1 + B_{n+1} - B_n B_1 c_0/a_0`, from the ladders of `g`.
pub fn sigma_ladder_law<T: Real>(f: &BirkhoffFactors<T>, n: usize) -> Result<C<T>> {
    let a0 = f.g_zero[(0, 0)];
    if a0.norm() < lit(TOL_DIV) {
        return Err(Error::Degenerate("a_0 vanishes"));
    }
    let c0 = f.g_zero[(1, 0)];
    let k = n as i32;
    let m = &f.g_minus;
    let b1 = m.entry(-1, 0, 1);
    Ok(-m.entry(-k, 0, 0) * b1 + m.entry(-k - 1, 0, 1) - m.entry(-k, 0, 1) * b1 * c0 / a0)
}

/// Scalar making `det sigma_Delta = 1`: `1` for odd `n`, `e^{i pi/n}` for even `n`,
/// since the cyclic permutation has determinant `(-1)^{n-1}`.
pub fn sigma_delta_phase<T: Real>(n: usize) -> C<T> {
    if n % 2 == 1 {
        C::one()
    } else {
        Complex::from_polar(T::one(), T::PI() / lit::<T>(n as f64))
    }
}

/// `sigma_Delta(t) = lambda w D(t)` on SU(n): `w` is the cyclic permutation
/// `e_j -> e_{j+1}` and `D(t) = diag(e^{2 pi i t/n}, ..., e^{2 pi i t/n}, e^{-2 pi i (n-1) t/n})`.
pub fn sigma_delta<T: Real>(n: usize, t: T) -> Mat<T> {
    let nf = lit::<T>(n as f64);
    let lambda = sigma_delta_phase::<T>(n);
    let up = Complex::from_polar(T::one(), T::TAU() * t / nf);
    let corner = Complex::from_polar(T::one(), -T::TAU() * (nf - T::one()) * t / nf);
    let mut m = Mat::zeros(n, n);
    for j in 0..n - 1 {
        m[(j + 1, j)] = up * lambda;
    }
    m[(0, n - 1)] = corner * lambda;
    m
}

/// Pointwise conjugation `sigma_Delta(t) g(e^{2 pi i t}) sigma_Delta(t)^{-1}` on the circle
/// grid, refit into the window widened by one on each side.
pub fn apply_sigma_delta<T: Real>(g: &TruncatedLoop<T>) -> TruncatedLoop<T> {
    let n = g.dim();
    let (lo, hi) = (g.lo() - 1, g.hi() + 1);
    let m = grid_size(lo, hi);
    let values: Vec<Mat<T>> = circle_grid::<T>(m)
        .into_iter()
        .enumerate()
        .map(|(j, z)| {
            let s = sigma_delta::<T>(n, lit::<T>(j as f64 / m as f64));
            &(&s * &g.evaluate(z)) * &s.adjoint()
        })
        .collect();
    refit(n, &values, lo, hi).expect("grid is nonempty")
}

/// Exact coefficient form of [`apply_sigma_delta`]: entries in the last column move
/// up one degree, entries in the last row move down one degree, then indices shift
/// cyclically by one.
pub fn sigma_delta_shift<T: Real>(g: &TruncatedLoop<T>) -> TruncatedLoop<T> {
    let n = g.dim();
    let last = n - 1;
    TruncatedLoop::from_fn(n, g.lo() - 1, g.hi() + 1, |k| {
        Mat::from_fn(n, n, |p, q| {
            let (i, j) = ((p + n - 1) % n, (q + n - 1) % n);
            let shift = match (i == last, j == last) {
                (false, true) => 1,
                (true, false) => -1,
                _ => 0,
            };
            g.entry(k - shift, i, j)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birkhoff::{factorize, FactorizeOptions};
    use crate::random::{rand_factors, rand_loop, rng_from_seed};
    use crate::scalar::cx;

    type L = TruncatedLoop<f64>;

    #[test]
    fn sigma_of_identity() {
        let id = BirkhoffFactors::from_parts(L::identity(2), Mat::identity(2), L::identity(2));
        let s = act_sigma(&id).unwrap();
        assert!(s.max_diff(&id) < 1e-15);
    }

    #[test]
    fn sigma_of_unipotent_example_is_constant() {
        let gm = L::from_terms(2, -1, vec![Mat::unit(2, 0, 1), Mat::identity(2)]);
        let f = BirkhoffFactors::from_parts(gm, Mat::diag(&[cx(2.0, 0.0), cx(0.5, 0.0)]), L::identity(2));
        let g = sigma_loop(&f.product()).unwrap().trimmed(0.0);
        assert_eq!((g.lo(), g.hi()), (0, 0));
        let expected = Mat::m2(cx(2.0, 0.0), cx(0.5, 0.0), cx(0.0, 0.0), cx(0.5, 0.0));
        assert!(g.coeff(0).max_abs_diff(&expected) < 1e-15);
        let s = act_sigma(&f).unwrap();
        assert!(s.g_zero.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn closed_form_matches_oracle_and_ladder_law() {
        let mut rng = rng_from_seed(50);
        for _ in 0..20 {
            let (gm, g0, gp) = rand_factors::<f64, _>(2, 6, &mut rng);
            let f = BirkhoffFactors::from_parts(gm, g0, gp);
            let closed = act_sigma(&f).unwrap();
            let g = sigma_loop(&f.product()).unwrap();
            let direct = factorize(&g, &FactorizeOptions { order: Some(16), ..Default::default() }).unwrap();
            assert!(closed.max_diff(&direct) < 1e-9);
            for n in 1..=6 {
                let law = sigma_ladder_law(&f, n).unwrap();
                assert!((law - closed.g_minus.entry(-(n as i32), 0, 1)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn sigma_delta_has_unit_determinant() {
        for n in [2, 3, 4] {
            for j in 0..16 {
                let s = sigma_delta::<f64>(n, j as f64 / 16.0);
                assert!((s.det() - cx(1.0, 0.0)).norm() < 1e-14, "n = {n}");
            }
        }
    }

    #[test]
    fn sigma_delta_monodromy_is_central() {
        let s1 = sigma_delta::<f64>(3, 1.0);
        let s0 = sigma_delta::<f64>(3, 0.0);
        let c = &s1 * &s0.adjoint();
        let z = Complex::from_polar(1.0, std::f64::consts::TAU / 3.0);
        assert!(c.max_abs_diff(&Mat::identity(3).scale(z)) < 1e-12);
    }

    #[test]
    fn grid_conjugation_matches_exact_shift() {
        let mut rng = rng_from_seed(51);
        let g = rand_loop::<f64, _>(3, 3, &mut rng);
        let a = apply_sigma_delta(&g);
        let b = sigma_delta_shift(&g);
        assert!(a.max_coeff_diff(&b) < 1e-12);
    }
}
