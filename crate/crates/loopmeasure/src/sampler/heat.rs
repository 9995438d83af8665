//! The SU(2) heat kernel as a class function of the rotation angle, and exact
//! samplers for its increments.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::{Mat64, C64};

/// Largest tail bound accepted for a truncated eigen-series.
pub const SERIES_TAIL_TOL: f64 = 1e-10;

/// Below this time the method-of-images form is used.
const IMAGE_CUTOFF: f64 = 1.0;

/// Angles closer than this to 0 or `pi` are evaluated at the offset point; the kernel is
/// smooth and even there, so the error is of order the offset squared.
const ANGLE_EPS: f64 = 1e-6;

/// `p_t` on SU(2) against Haar probability, as a function of the class angle in `[0, pi]`.
///
/// Eigen-series `sum_n n e^{-(n^2-1) t/2} sin(n theta)/sin(theta)`, or for small `t` the
/// equivalent image sum `2 pi^2 e^{t/2} (2 pi t)^{-3/2} sum_k (theta + 2 pi k)/sin(theta) e^{-(theta + 2 pi k)^2/(2t)}`.
#[derive(Clone, Debug, Serialize)]
pub struct HeatKernel {
    t: f64,
    n_max: usize,
    use_images: bool,
}

/// `sum_{n > n_max} n^2 e^{-(n^2-1) t/2}`, which bounds the series tail uniformly in the angle.
fn series_tail(t: f64, n_max: usize) -> f64 {
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        let nf = n as f64;
        let term = nf * nf * (-(nf * nf - 1.0) * t / 2.0).exp();
        tail += term;
        // Terms decrease once n^2 t > 2.
        if (term < 1e-18 * tail.max(1e-300) || term == 0.0) && nf * nf * t > 2.0 {
            return tail;
        }
        n += 1;
    }
}

impl HeatKernel {
    /// Kernel at time `t`, with the series length chosen so its tail is below
    /// [`SERIES_TAIL_TOL`]; small times evaluate through images.
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("heat kernel needs t > 0, got {t}")));
        }
        let mut n_max = 1;
        while series_tail(t, n_max) > SERIES_TAIL_TOL {
            n_max = (n_max * 2).max(2);
        }
        Ok(HeatKernel { t, n_max, use_images: t < IMAGE_CUTOFF })
    }

    /// Eigen-series with exactly `n_max` terms.
    pub fn with_terms(t: f64, n_max: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) || n_max == 0 {
            return Err(Error::InvalidInput(format!("heat kernel needs t > 0 and n_max >= 1, got {t}, {n_max}")));
        }
        let tail = series_tail(t, n_max);
        if tail > SERIES_TAIL_TOL {
            return Err(Error::TruncationInsufficient { t, n_max, tail });
        }
        Ok(HeatKernel { t, n_max, use_images: false })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `p_t(theta)`.
    pub fn eval(&self, theta: f64) -> f64 {
        if self.use_images {
            self.images(theta)
        } else {
            self.series(theta)
        }
    }

    /// Value at the identity, `sum n^2 e^{-(n^2-1) t/2}`.
    pub fn at_identity(&self) -> f64 {
        if self.use_images {
            return self.images(0.0);
        }
        (1..=self.n_max).map(|n| (n * n) as f64 * (-((n * n) as f64 - 1.0) * self.t / 2.0).exp()).sum()
    }

    /// Truncated eigen-series.
    pub fn series(&self, theta: f64) -> f64 {
        let theta = theta.abs().clamp(0.0, PI);
        if theta < ANGLE_EPS {
            return (1..=self.n_max).map(|n| (n * n) as f64 * (-((n * n) as f64 - 1.0) * self.t / 2.0).exp()).sum();
        }
        let theta = theta.min(PI - ANGLE_EPS);
        let s = theta.sin();
        (1..=self.n_max)
            .map(|n| {
                let nf = n as f64;
                nf * (-(nf * nf - 1.0) * self.t / 2.0).exp() * (nf * theta).sin() / s
            })
            .sum()
    }

    /// Method-of-images sum.
    pub fn images(&self, theta: f64) -> f64 {
        let t = self.t;
        let theta = theta.abs().clamp(ANGLE_EPS, PI - ANGLE_EPS);
        let s = theta.sin();
        let prefactor = 2.0 * PI * PI * (t / 2.0).exp() * (TAU * t).powf(-1.5);
        let reach = (2.0 * t * 50.0).sqrt() / TAU + 1.0;
        let kmax = reach.ceil() as i64;
        let mut total = 0.0;
        for k in -kmax..=kmax {
            let phi = theta + TAU * k as f64;
            total += phi * (-phi * phi / (2.0 * t)).exp();
        }
        prefactor * total / s
    }
}

/// Haar probability density of the class angle, `(2/pi) sin^2 theta`.
pub fn haar_angle_density(theta: f64) -> f64 {
    2.0 / PI * theta.sin().powi(2)
}

/// Haar-distributed class angle CDF, `(theta - sin(theta) cos(theta))/pi`.
pub fn haar_angle_cdf(theta: f64) -> f64 {
    let theta = theta.clamp(0.0, PI);
    (theta - theta.sin() * theta.cos()) / PI
}

/// `cos(theta) + sin(theta) i (n . sigma)` for a unit axis `n`.
pub fn su2_from_angle_axis(theta: f64, axis: [f64; 3]) -> Mat64 {
    let (c, s) = (theta.cos(), theta.sin());
    Mat64::m2(
        C64::new(c, s * axis[2]),
        C64::new(s * axis[1], s * axis[0]),
        C64::new(-s * axis[1], s * axis[0]),
        C64::new(c, -s * axis[2]),
    )
}

/// Uniform unit vector in `R^3`.
pub fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi: f64 = TAU * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Inverse-CDF sampler for the class angle of `p_t(g) dg`.
#[derive(Clone, Debug)]
pub struct AngleSampler {
    kernel: HeatKernel,
    /// `(theta, CDF(theta))`, increasing.
    table: Vec<(f64, f64)>,
}

impl AngleSampler {
    pub fn new(kernel: HeatKernel) -> Self {
        // The law concentrates on angles of order sqrt(t).
        let theta_max = (14.0 * kernel.t().sqrt()).min(PI);
        let cells = 4096;
        let h = theta_max / cells as f64;
        let f = |th: f64| kernel.eval(th) * haar_angle_density(th);
        let mut table = Vec::with_capacity(cells + 1);
        table.push((0.0, 0.0));
        let mut acc = 0.0;
        let mut left = f(0.0);
        for i in 0..cells {
            let a = i as f64 * h;
            let right = f(a + h);
            acc += h / 6.0 * (left + 4.0 * f(a + h / 2.0) + right);
            table.push((a + h, acc));
            left = right;
        }
        for p in table.iter_mut() {
            p.1 /= acc;
        }
        AngleSampler { kernel, table }
    }

    pub fn kernel(&self) -> &HeatKernel {
        &self.kernel
    }

    /// CDF of the class angle.
    pub fn cdf(&self, theta: f64) -> f64 {
        let i = self.table.partition_point(|p| p.0 < theta);
        if i == 0 {
            return 0.0;
        }
        if i >= self.table.len() {
            return 1.0;
        }
        let (x0, y0) = self.table[i - 1];
        let (x1, y1) = self.table[i];
        y0 + (y1 - y0) * (theta - x0) / (x1 - x0)
    }

    pub fn sample_angle<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self.table.partition_point(|p| p.1 < u).clamp(1, self.table.len() - 1);
        let (x0, y0) = self.table[i - 1];
        let (x1, y1) = self.table[i];
        if y1 <= y0 {
            return x0;
        }
        x0 + (x1 - x0) * (u - y0) / (y1 - y0)
    }

    /// An increment with law `p_t(g) dg`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat64 {
        su2_from_angle_axis(self.sample_angle(rng), random_axis(rng))
    }
}

/// One row of the semigroup check.
#[derive(Clone, Debug, Serialize)]
pub struct SemigroupRow {
    pub angle: f64,
    pub monte_carlo: f64,
    pub standard_error: f64,
    pub exact: f64,
}

impl SemigroupRow {
    /// Deviation in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.monte_carlo - self.exact).abs() / self.standard_error.max(1e-300)
    }
}

/// `integral p_s(h) p_t(h^{-1} g) dh` by Monte Carlo over Haar points against `p_{s+t}(g)`,
/// at `points` random `g`.
pub fn semigroup_check(s: f64, t: f64, points: usize, haar_samples: usize, seed: u64) -> Result<Vec<SemigroupRow>> {
    let (ps, pt, pst) = (HeatKernel::new(s)?, HeatKernel::new(t)?, HeatKernel::new(s + t)?);
    let mut rng = crate::random::rng_from_seed(seed);
    (0..points)
        .map(|_| {
            let g = crate::random::rand_su2::<f64, _>(&mut rng);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..haar_samples {
                let h = crate::random::rand_su2::<f64, _>(&mut rng);
                let v =
                    ps.eval(crate::loopalg::su2_angle(&h)) * pt.eval(crate::loopalg::su2_angle(&(&h.adjoint() * &g)));
                sum += v;
                sum_sq += v * v;
            }
            let n = haar_samples as f64;
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0);
            let angle = crate::loopalg::su2_angle(&g);
            Ok(SemigroupRow { angle, monte_carlo: mean, standard_error: (var / n).sqrt(), exact: pst.eval(angle) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distheory::quad::integrate;
    use crate::harness::ks::ks_one_sample;
    use crate::loopalg::su2_angle;
    use crate::random::rng_from_seed;

    #[test]
    fn kernel_has_unit_haar_mass() {
        for t in [0.01, 0.1, 0.5, 2.0] {
            let k = HeatKernel::new(t).unwrap();
            let mass = integrate(|th| k.eval(th) * haar_angle_density(th), 0.0, PI).unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "t {t}: {mass}");
        }
    }

    #[test]
    fn images_match_series() {
        for t in [0.05, 0.3, 0.9] {
            let images = HeatKernel::new(t).unwrap();
            let series = HeatKernel::with_terms(t, 400).unwrap();
            for th in [0.0, 0.1, 0.7, 1.5, 3.0] {
                let (a, b) = (images.images(th), series.series(th));
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "t {t} theta {th}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_time_is_flat() {
        let k = HeatKernel::new(50.0).unwrap();
        for th in [0.0, 1.0, 2.0, 3.1] {
            assert!((k.eval(th) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn small_time_is_gaussian() {
        let t = 0.01;
        let k = HeatKernel::new(t).unwrap();
        // Against Haar probability the Gaussian limit is 2 pi^2 (2 pi t)^{-3/2} e^{-theta^2/(2t)}.
        for i in 0..10 {
            let th = 0.3 * i as f64 * t.sqrt();
            let gauss = 2.0 * PI * PI * (TAU * t).powf(-1.5) * (-th * th / (2.0 * t)).exp();
            assert!((k.eval(th) / gauss - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(matches!(HeatKernel::with_terms(0.01, 10), Err(Error::TruncationInsufficient { .. })));
    }

    #[test]
    fn angle_sampler_matches_its_density() {
        let sampler = AngleSampler::new(HeatKernel::new(0.2).unwrap());
        let mut rng = rng_from_seed(50);
        let angles: Vec<f64> = (0..20_000).map(|_| su2_angle(&sampler.sample(&mut rng))).collect();
        let k = sampler.kernel().clone();
        let cdf = |x: f64| integrate(|th| k.eval(th) * haar_angle_density(th), 0.0, x.min(PI)).unwrap();
        let r = ks_one_sample(&angles, cdf).unwrap();
        assert!(r.p_value > 1e-3, "{r:?}");
    }

    #[test]
    fn semigroup_holds_within_monte_carlo_error() {
        let rows = semigroup_check(0.2, 0.2, 5, 100_000, 51).unwrap();
        for r in rows {
            assert!(r.z_score() < 4.0, "{r:?}");
        }
    }

    #[test]
    fn angle_axis_is_special_unitary() {
        let g = su2_from_angle_axis(0.8, [0.0, 0.6, 0.8]);
        assert!((&g * &g.adjoint()).max_abs_diff(&Mat64::identity(2)) < 1e-15);
        assert!((g.det() - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((su2_angle(&g) - 0.8).abs() < 1e-14);
    }
}
