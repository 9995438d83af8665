//! Closed-form group actions in factorization coordinates.
//!
//! Every action here has a multiply-then-factorize oracle; the closed forms are
//! what make the coordinates useful, the oracle is what keeps them honest.

mod i0;
mod ladder;
mod sigma;
mod symmetric;

pub use i0::{act_left_i0, act_left_sl2, act_right_i0, act_right_inverse_sl2, i0_loop, left_exponent, right_exponent};
pub use ladder::{moebius_bn, LadderImage};
pub use sigma::{
    act_sigma, apply_sigma_delta, sigma_delta, sigma_delta_phase, sigma_delta_shift, sigma_ladder_law, sigma_loop,
};
pub use symmetric::{
    act_symmetric, act_symmetric_sl2, adjoint_recursion_check, kappa, kappa_law, symmetric_laws,
    AdjointRecursionReport, SymmetricLaws,
};

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::random::rand_sl;
use crate::scalar::{lit, Real, C};

/// SL(2, C) element `(a, b; c, d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoebiusParam<T> {
    pub a: C<T>,
    pub b: C<T>,
    pub c: C<T>,
    pub d: C<T>,
}

impl<T: Real> MoebiusParam<T> {
    /// Checks `|ad - bc - 1| < 1e-12`.
    pub fn new(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm()).max(T::one());
        if (det - C::one()).norm() > lit::<T>(1e-12) * scale * scale {
            return Err(Error::InvalidInput(format!("ad - bc = {det}, expected 1")));
        }
        Ok(MoebiusParam { a, b, c, d })
    }

    pub fn identity() -> Self {
        MoebiusParam { a: C::one(), b: C::zero(), c: C::zero(), d: C::one() }
    }

    pub fn from_mat(m: &Mat<T>) -> Result<Self> {
        Self::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
    }

    pub fn to_mat(&self) -> Mat<T> {
        Mat::m2(self.a, self.b, self.c, self.d)
    }

    pub fn inverse(&self) -> Self {
        MoebiusParam { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        MoebiusParam {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Parameter of `i_0(h)^{* Theta}`: `(conj a, -eps conj c; -eps conj b, conj d)`.
    pub fn star_theta(&self, epsilon: i8) -> Self {
        let e = lit::<T>(epsilon as f64);
        MoebiusParam { a: self.a.conj(), b: -self.c.conj() * e, c: -self.b.conj() * e, d: self.d.conj() }
    }

    /// `(c + d w)/(a + b w)`.
    pub fn apply_fractional(&self, w: C<T>) -> Result<C<T>> {
        let den = self.a + self.b * w;
        if den.norm() < lit(crate::birkhoff::TOL_DIV) {
            return Err(Error::Degenerate("a + b w vanishes"));
        }
        Ok((self.c + self.d * w) / den)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_mat(&rand_sl::<T, _>(2, rng)).expect("rand_sl has unit determinant")
    }
}

/// The highest-root `sl_2` triple inside `sl_d`: `e_theta = E_{0,d-1}`,
/// `e_{-theta} = E_{d-1,0}`, `h_theta = E_{00} - E_{d-1,d-1}`.
#[derive(Clone, Debug)]
pub struct RootEmbedding<T> {
    pub dim: usize,
    pub e_theta: Mat<T>,
    pub e_minus_theta: Mat<T>,
    pub h_theta: Mat<T>,
}

impl<T: Real> RootEmbedding<T> {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("no root embedding in dimension {dim}")));
        }
        let last = dim - 1;
        let e_theta = Mat::unit(dim, 0, last);
        let e_minus_theta = Mat::unit(dim, last, 0);
        let h_theta = &Mat::unit(dim, 0, 0) - &Mat::unit(dim, last, last);
        Ok(RootEmbedding { dim, e_theta, e_minus_theta, h_theta })
    }

    pub fn last(&self) -> usize {
        self.dim - 1
    }

    /// Eigenvalue of `ad h_theta` on `E_ij`.
    fn weight(&self, i: usize, j: usize) -> i32 {
        let w = |k: usize| {
            if k == 0 {
                1
            } else if k == self.last() {
                -1
            } else {
                0
            }
        };
        w(i) - w(j)
    }

    /// `alpha^{h_theta} = diag(alpha, 1, ..., 1, 1/alpha)`.
    pub fn alpha_h(&self, alpha: C<T>) -> Mat<T> {
        let mut m = Mat::identity(self.dim);
        m[(0, 0)] = alpha;
        m[(self.last(), self.last())] = alpha.inv();
        m
    }

    /// `a * a^{sign ad h_theta}(x)`: entry `(i, j)` scaled by `a^{1 + sign w_ij}`.
    /// The extra factor of `a` keeps the map defined at `a = 0` on the entries the
    /// closed forms use; vanishing entries stay zero whatever the exponent.
    pub fn twisted(&self, a: C<T>, x: &Mat<T>, sign: i32) -> Mat<T> {
        Mat::from_fn(self.dim, self.dim, |i, j| {
            let v = x[(i, j)];
            if v.is_zero() {
                return v;
            }
            v * a.powi(1 + sign * self.weight(i, j))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loopalg::{InvolutionConfig, TruncatedLoop};
    use crate::random::rng_from_seed;

    #[test]
    fn embedding_satisfies_sl2_relations() {
        for d in [2, 3] {
            let e = RootEmbedding::<f64>::new(d).unwrap();
            assert_eq!(e.e_theta.commutator(&e.e_minus_theta), e.h_theta);
            assert_eq!(e.h_theta.commutator(&e.e_theta), e.e_theta.scale_re(2.0));
            assert_eq!(e.h_theta.commutator(&e.e_minus_theta), e.e_minus_theta.scale_re(-2.0));
        }
    }

    #[test]
    fn i0_of_sl2_matches_lower_upper_layout() {
        let mut rng = rng_from_seed(20);
        let h = MoebiusParam::<f64>::random(&mut rng);
        let g = i0_loop(&h, &RootEmbedding::new(2).unwrap());
        assert_eq!(g.coeff(0), Mat::m2(h.d, C::zero(), C::zero(), h.a));
        assert_eq!(g.coeff(-1), Mat::m2(C::zero(), h.c, C::zero(), C::zero()));
        assert_eq!(g.coeff(1), Mat::m2(C::zero(), C::zero(), h.b, C::zero()));
    }

    #[test]
    fn i0_is_a_homomorphism() {
        let mut rng = rng_from_seed(21);
        let emb = RootEmbedding::<f64>::new(3).unwrap();
        let h1 = MoebiusParam::random(&mut rng);
        let h2 = MoebiusParam::random(&mut rng);
        let lhs = i0_loop(&h1.compose(&h2), &emb);
        let rhs = i0_loop(&h1, &emb).product(&i0_loop(&h2, &emb)).unwrap();
        assert!(lhs.max_coeff_diff(&rhs) < 1e-13);
    }

    #[test]
    fn star_theta_parameter_matches_loop_involution() {
        let mut rng = rng_from_seed(22);
        for (cfg, d) in [
            (InvolutionConfig::<f64>::s2(), 2),
            (InvolutionConfig::sl3(1).unwrap(), 3),
            (InvolutionConfig::sl3(-1).unwrap(), 3),
        ] {
            let emb = RootEmbedding::new(d).unwrap();
            let h = MoebiusParam::random(&mut rng);
            let direct: TruncatedLoop<f64> = i0_loop(&h, &emb).star_theta(&cfg);
            let via = i0_loop(&h.star_theta(cfg.epsilon()), &emb);
            assert!(direct.max_coeff_diff(&via) < 1e-14);
        }
    }
}
