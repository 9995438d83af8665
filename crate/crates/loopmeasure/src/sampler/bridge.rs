//! Brownian loops on SU(2): free paths, bridges conditioned to close at the
//! identity, and free loops (a Haar-random base point times a bridge).

use rand::Rng;

use super::heat::{random_axis, su2_from_angle_axis, AngleSampler, HeatKernel};
use crate::error::{Error, Result};
use crate::harness::ks::{ks_one_sample, KsResult};
use crate::loopalg::su2_angle;
use crate::random::{rand_su2, rng_from_seed, stream_rng};
use crate::{Mat64, C64};

/// Rejection attempts per bridge step before the Metropolis fallback engages.
pub const RETRY_CAP: usize = 10_000;

/// Sweeps of the Metropolis fallback.
const FALLBACK_SWEEPS: usize = 400;

/// A closed path `points[0..=M]` in SU(2).
#[derive(Clone, Debug)]
pub struct LoopPath {
    pub beta: f64,
    pub steps: usize,
    pub points: Vec<Mat64>,
    pub seed: u64,
    /// Set when rejection stalled and the path came from Metropolis sweeps.
    pub used_fallback: bool,
}

impl LoopPath {
    /// Largest deviation from `SU(2)` over the points.
    pub fn unitarity_drift(&self) -> f64 {
        let id = Mat64::identity(2);
        self.points
            .iter()
            .map(|g| (&(g * &g.adjoint()) - &id).norm_max().max((g.det() - C64::new(1.0, 0.0)).norm()))
            .fold(0.0, f64::max)
    }

    /// Grid values `g(e^{2 pi i j/M})`, `j = 0..M`: the closing point is dropped.
    pub fn grid(&self) -> &[Mat64] {
        &self.points[..self.steps]
    }
}

/// Parameters shared by the path samplers.
#[derive(Clone, Debug)]
pub struct BridgeSampler {
    beta: f64,
    steps: usize,
    /// Increment sampler at time `1/(M beta)`.
    step: AngleSampler,
    /// `p_{j Delta}` for `j = 0..=M`; index 0 is unused.
    remaining: Vec<HeatKernel>,
    pub allow_fallback: bool,
}

/// Nearest SU(2) element: `alpha = (g00 + conj g11)/2`, `beta = (g01 - conj g10)/2`, normalized.
pub fn project_su2(g: &Mat64) -> Mat64 {
    let a = (g[(0, 0)] + g[(1, 1)].conj()) * 0.5;
    let b = (g[(0, 1)] - g[(1, 0)].conj()) * 0.5;
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    Mat64::m2(a, b, -b.conj(), a.conj())
}

impl BridgeSampler {
    /// `beta > 0`, `M` a power of two at least 16.
    pub fn new(beta: f64, steps: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
        }
        if steps < 16 || !steps.is_power_of_two() {
            return Err(Error::InvalidInput(format!("steps must be a power of two >= 16, got {steps}")));
        }
        let dt = 1.0 / (steps as f64 * beta);
        let remaining = (1..=steps).map(|j| HeatKernel::new(j as f64 * dt)).collect::<Result<Vec<_>>>()?;
        let step = AngleSampler::new(remaining[0].clone());
        Ok(BridgeSampler { beta, steps, step, remaining, allow_fallback: true })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `p_{j Delta}`.
    fn kernel(&self, j: usize) -> &HeatKernel {
        &self.remaining[j - 1]
    }

    /// Unconditioned path from the identity with `M` heat-kernel increments.
    pub fn sample_free_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Mat64> {
        let mut points = Vec::with_capacity(self.steps + 1);
        let mut g = Mat64::identity(2);
        points.push(g.clone());
        for _ in 0..self.steps {
            g = project_su2(&(&g * &self.step.sample(rng)));
            points.push(g.clone());
        }
        points
    }

    /// Bridge from the identity back to the identity. Step `k` draws `g_k = g_{k-1} h`
    /// with `h ~ p_Delta` and accepts with probability `p_{(M-k) Delta}(g_k)/p_{(M-k) Delta}(1)`.
    pub fn sample_bridge_with<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> Result<LoopPath> {
        let m = self.steps;
        let mut points = Vec::with_capacity(m + 1);
        let mut g = Mat64::identity(2);
        points.push(g.clone());
        for k in 1..m {
            let target = self.kernel(m - k);
            let peak = target.at_identity();
            let mut accepted = None;
            for _ in 0..RETRY_CAP {
                let candidate = project_su2(&(&g * &self.step.sample(rng)));
                let ratio = target.eval(su2_angle(&candidate)) / peak;
                if rng.random::<f64>() < ratio {
                    accepted = Some(candidate);
                    break;
                }
            }
            match accepted {
                Some(c) => {
                    g = c;
                    points.push(g.clone());
                }
                None if self.allow_fallback => {
                    let points = self.metropolis_bridge(rng);
                    return Ok(LoopPath { beta: self.beta, steps: m, points, seed, used_fallback: true });
                }
                None => return Err(Error::RejectionStall { step: k, retries: RETRY_CAP }),
            }
        }
        points.push(Mat64::identity(2));
        Ok(LoopPath { beta: self.beta, steps: m, points, seed, used_fallback: false })
    }

    /// Bridge from a seed.
    pub fn sample_bridge(&self, seed: u64) -> Result<LoopPath> {
        self.sample_bridge_with(&mut rng_from_seed(seed), seed)
    }

    /// Free loop: a Haar-random base point times a bridge.
    pub fn sample_free_loop<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> Result<LoopPath> {
        let k = rand_su2::<f64, _>(rng);
        let mut path = self.sample_bridge_with(rng, seed)?;
        for p in path.points.iter_mut() {
            *p = &k * &*p;
        }
        Ok(path)
    }

    /// Single-site random-walk Metropolis on the interior points with target
    /// `prod_i p_Delta(g_{i-1}^{-1} g_i)`, started from the constant loop.
    fn metropolis_bridge<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Mat64> {
        let m = self.steps;
        let p = self.kernel(1);
        let link = |a: &Mat64, b: &Mat64| p.eval(su2_angle(&(&a.adjoint() * b))).max(1e-300).ln();
        let mut points = vec![Mat64::identity(2); m + 1];
        let width = (p.t()).sqrt();
        for _ in 0..FALLBACK_SWEEPS {
            for i in 1..m {
                let proposal =
                    project_su2(&(&points[i] * &su2_from_angle_axis(width * rng.random::<f64>(), random_axis(rng))));
                let old = link(&points[i - 1], &points[i]) + link(&points[i], &points[i + 1]);
                let new = link(&points[i - 1], &proposal) + link(&proposal, &points[i + 1]);
                if rng.random::<f64>().ln() < new - old {
                    points[i] = proposal;
                }
            }
        }
        points
    }
}

/// KS distance of the rotation angle of free-path endpoints against `p_{1/beta}`.
pub fn endpoint_law_check(beta: f64, steps: usize, samples: usize, seed: u64) -> Result<KsResult> {
    let s = BridgeSampler::new(beta, steps)?;
    let endpoint = AngleSampler::new(HeatKernel::new(1.0 / beta)?);
    let angles: Vec<f64> = (0..samples as u64)
        .map(|i| su2_angle(s.sample_free_path(&mut stream_rng(seed, i)).last().expect("path is nonempty")))
        .collect();
    ks_one_sample(&angles, |x| endpoint.cdf(x))
}

/// Bridge with law `p_Delta` increments conditioned on closure, `Delta = 1/(M beta)`.
pub fn sample_bridge(beta: f64, steps: usize, seed: u64) -> Result<LoopPath> {
    BridgeSampler::new(beta, steps)?.sample_bridge(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distheory::quad::integrate;
    use crate::sampler::heat::haar_angle_density;
    use std::f64::consts::PI;

    #[test]
    fn bridge_is_closed_unitary_and_deterministic() {
        let a = sample_bridge(1.0, 64, 3).unwrap();
        let b = sample_bridge(1.0, 64, 3).unwrap();
        assert_eq!(a.points.len(), 65);
        assert_eq!(a.points[0], Mat64::identity(2));
        assert_eq!(a.points[64], Mat64::identity(2));
        assert!(a.unitarity_drift() < 1e-10);
        assert!(a.points.iter().zip(&b.points).all(|(x, y)| x == y));
        assert!(!a.used_fallback);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(BridgeSampler::new(0.0, 64).is_err());
        assert!(BridgeSampler::new(1.0, 48).is_err());
        assert!(BridgeSampler::new(1.0, 8).is_err());
    }

    fn max_angle_p99(beta: f64) -> f64 {
        let s = BridgeSampler::new(beta, 64).unwrap();
        let mut max_angles: Vec<f64> = (0..1000)
            .map(|i| {
                let p = s.sample_bridge_with(&mut stream_rng(7, i), i).unwrap();
                p.points.iter().map(su2_angle).fold(0.0, f64::max)
            })
            .collect();
        max_angles.sort_by(f64::total_cmp);
        max_angles[989]
    }

    #[test]
    fn stiff_bridges_concentrate_like_sqrt_of_time() {
        // Under the e^{-(n^2-1)t/2} kernel the 0.8 bound is met from beta = 8 on,
        // which is beta = 4 under the metric -trace(XY).
        let (p4, p8) = (max_angle_p99(4.0), max_angle_p99(8.0));
        assert!(p8 < 0.8, "{p8}");
        assert!((p4 / p8 - 2f64.sqrt()).abs() < 0.1, "{p4} {p8}");
    }

    #[test]
    fn midpoint_has_the_bridge_law() {
        // The midpoint of a beta = 1 bridge has density p_{1/2}(g)^2/p_1(1).
        let s = BridgeSampler::new(1.0, 32).unwrap();
        let half = HeatKernel::new(0.5).unwrap();
        let angles: Vec<f64> = (0..10_000)
            .map(|i| su2_angle(&s.sample_bridge_with(&mut stream_rng(8, i), i).unwrap().points[16]))
            .collect();
        let f = |th: f64| half.eval(th).powi(2) * haar_angle_density(th);
        let total = integrate(f, 0.0, PI).unwrap();
        let r = ks_one_sample(&angles, |x| integrate(f, 0.0, x.min(PI)).unwrap() / total).unwrap();
        assert!(r.distance < 0.02, "{r:?}");
    }

    #[test]
    fn free_path_endpoint_follows_the_kernel() {
        let r = endpoint_law_check(1.0, 32, 10_000, 9).unwrap();
        assert!(r.distance < 0.02, "{r:?}");
        let stiff = endpoint_law_check(4.0, 16, 2_000, 9).unwrap();
        assert!(stiff.p_value > 1e-3, "{stiff:?}");
    }

    #[test]
    fn fallback_yields_a_closed_path() {
        let s = BridgeSampler::new(1.0, 16).unwrap();
        let points = s.metropolis_bridge(&mut rng_from_seed(10));
        assert_eq!(points[0], Mat64::identity(2));
        assert_eq!(points[16], Mat64::identity(2));
        assert!(points.iter().all(|g| (&(g * &g.adjoint()) - &Mat64::identity(2)).norm_max() < 1e-12));
    }
}
