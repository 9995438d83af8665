//! Fractional-linear law of the `B'_n` ladder under the left action.

use super::MoebiusParam;
use crate::birkhoff::{RhCoords, TOL_DIV};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real, C};

/// Transformed ladders, indexed from `n = 1`: `b[n - 1]` is `B_n`, `d_prev[n - 1]`
/// is `D_{n-1}` and `b_prime[n - 1]` is `B'_n`.
#[derive(Clone, Debug)]
pub struct LadderImage<T> {
    pub b: Vec<C<T>>,
    pub d_prev: Vec<C<T>>,
    pub b_prime: Vec<C<T>>,
}

/// Ladders of `i_0(h) g` from those of `g`, for `n = 1..=n_max`:
/// `B_n -> (d B_n + c D_{n-1})/alpha`, `D_{n-1} -> (b B_n + a D_{n-1})/alpha` with
/// `alpha = a + b B_1`, and `B'_n -> (c + d B'_n)/(a + b B'_n)`.
pub fn moebius_bn<T: Real>(h: &MoebiusParam<T>, coords: &RhCoords<T>, n_max: usize) -> Result<LadderImage<T>> {
    if n_max > coords.order {
        return Err(Error::InvalidInput(format!("ladder order {n_max} exceeds {}", coords.order)));
    }
    let alpha = h.a + h.b * coords.b[1];
    if alpha.norm() < lit(TOL_DIV) {
        return Err(Error::Degenerate("a + b B_1 vanishes"));
    }
    let mut out = LadderImage { b: vec![], d_prev: vec![], b_prime: vec![] };
    for n in 1..=n_max {
        let (bn, dp) = (coords.b[n], coords.d[n - 1]);
        out.b.push((h.d * bn + h.c * dp) / alpha);
        out.d_prev.push((h.b * bn + h.a * dp) / alpha);
        out.b_prime.push(h.apply_fractional(coords.b_prime(n)?)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{act_left_i0, RootEmbedding};
    use crate::birkhoff::BirkhoffFactors;
    use crate::random::{rand_factors, rng_from_seed};
    use num_traits::One;

    #[test]
    fn identity_leaves_ladders() {
        let mut rng = rng_from_seed(40);
        let (gm, g0, gp) = rand_factors::<f64, _>(2, 16, &mut rng);
        let c = BirkhoffFactors::from_parts(gm, g0, gp).rh_coords(6);
        let img = moebius_bn(&MoebiusParam::identity(), &c, 6).unwrap();
        for n in 1..=6 {
            assert!((img.b[n - 1] - c.b[n]).norm() < 1e-15);
            assert!((img.b_prime[n - 1] - c.b_prime(n).unwrap()).norm() < 1e-15);
        }
    }

    #[test]
    fn d0_is_a_fixed_point() {
        let mut rng = rng_from_seed(41);
        let (gm, g0, gp) = rand_factors::<f64, _>(2, 3, &mut rng);
        let c = BirkhoffFactors::from_parts(gm, g0, gp).rh_coords(3);
        let h = MoebiusParam::random(&mut rng);
        let img = moebius_bn(&h, &c, 1).unwrap();
        assert!((img.d_prev[0] - C::one()).norm() < 1e-14);
    }

    #[test]
    fn matches_closed_form_action() {
        for d in [2, 3] {
            let emb = RootEmbedding::new(d).unwrap();
            let mut rng = rng_from_seed(42 + d as u64);
            for _ in 0..20 {
                let (gm, g0, gp) = rand_factors::<f64, _>(d, 16, &mut rng);
                let f = BirkhoffFactors::from_parts(gm, g0, gp);
                let h = MoebiusParam::random(&mut rng);
                let before = f.rh_coords(6);
                let after = act_left_i0(&h, &f, &emb).unwrap().rh_coords(6);
                let img = moebius_bn(&h, &before, 6).unwrap();
                for n in 1..=6 {
                    assert!((img.b[n - 1] - after.b[n]).norm() < 1e-9);
                    assert!((img.d_prev[n - 1] - after.d[n - 1]).norm() < 1e-9);
                }
            }
        }
    }
}
