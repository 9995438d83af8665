//! From sampled paths to truncated loops: the `S^2` projection `g -> g Theta(g)^{-1}`,
//! plain refits for the group case, loop transforms and the invariance bound.

use serde::{Deserialize, Serialize};

use super::bridge::LoopPath;
use super::heat::HeatKernel;
use crate::actions::sigma_loop;
use crate::error::{Error, Result};
use crate::loopalg::{energy, out_of_window_fraction, refit, InvolutionConfig};
use crate::{Loop64, Mat64, C64};

/// Largest out-of-window share of spectral mass accepted by a refit.
pub const ALIASING_LIMIT: f64 = 0.05;

fn checked_refit(values: &[Mat64], window: i32) -> Result<Loop64> {
    let fraction = out_of_window_fraction(2, values, window)?;
    if fraction > ALIASING_LIMIT {
        return Err(Error::AliasingExcessive { fraction, limit: ALIASING_LIMIT });
    }
    refit(2, values, -window, window)
}

/// The path as a loop with degrees in `[-window, window]`.
pub fn refit_path(path: &LoopPath, window: i32) -> Result<Loop64> {
    checked_refit(path.grid(), window)
}

/// `k -> g(k) Theta(g(k))^{-1}` on the grid, refit to `[-window, window]`.
pub fn project_s2(path: &LoopPath, cfg: &InvolutionConfig<f64>, window: i32) -> Result<Loop64> {
    if cfg.dim() != 2 {
        return Err(Error::DimensionMismatch(2, cfg.dim()));
    }
    let values: Vec<Mat64> = path
        .grid()
        .iter()
        .map(|g| {
            // Theta(g)^{-1} = Theta(g^dagger) for unitary g.
            g * &cfg.apply(&g.adjoint())
        })
        .collect();
    checked_refit(&values, window)
}

/// A transform applied to sampled loops before a statistic is read.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LoopTransform {
    Identity,
    /// Left multiplication by `diag(e^{i phase}, e^{-i phase})`.
    LeftDiagonal {
        phase: f64,
    },
    /// Conjugation by `diag(z^{1/2}, z^{-1/2})`.
    Sigma,
}

impl LoopTransform {
    pub fn apply(&self, g: &Loop64) -> Result<Loop64> {
        match *self {
            LoopTransform::Identity => Ok(g.clone()),
            LoopTransform::LeftDiagonal { phase } => {
                let d = Mat64::diag(&[C64::from_polar(1.0, phase), C64::from_polar(1.0, -phase)]);
                Ok(g.left_mul(&d))
            }
            LoopTransform::Sigma => sigma_loop(g),
        }
    }
}

/// `2^{3/2} (p_{T/2}(1)^2/p_T(1)) beta^{1/2} E^{1/2}` with `T = 1/beta` and `E` the kinetic
/// energy of the closed path `points`.
pub fn invariance_bound(points: &[Mat64], beta: f64) -> Result<f64> {
    let e = energy(points)?;
    invariance_bound_for_energy(e, beta)
}

/// The bound for a given energy.
pub fn invariance_bound_for_energy(energy: f64, beta: f64) -> Result<f64> {
    let t = 1.0 / beta;
    let (half, full) = (HeatKernel::new(t / 2.0)?, HeatKernel::new(t)?);
    Ok(2f64.powf(1.5) * half.at_identity().powi(2) / full.at_identity() * beta.sqrt() * energy.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birkhoff::is_symmetric_point;
    use crate::random::{rand_su2, rng_from_seed};
    use crate::sampler::bridge::BridgeSampler;
    use std::f64::consts::{PI, TAU};

    fn constant_path(k: Mat64, steps: usize) -> LoopPath {
        LoopPath { beta: 1.0, steps, points: vec![k; steps + 1], seed: 0, used_fallback: false }
    }

    #[test]
    fn constant_paths_project_to_constants() {
        let cfg = InvolutionConfig::<f64>::s2();
        let id = project_s2(&constant_path(Mat64::identity(2), 64), &cfg, 4).unwrap();
        assert!(id.max_coeff_diff(&Loop64::identity(2).restrict(-4, 4)) < 1e-14);
        let k = rand_su2::<f64, _>(&mut rng_from_seed(60));
        let g = project_s2(&constant_path(k.clone(), 64), &cfg, 4).unwrap().coeff(0);
        // g^{-1} = g^* = Theta(g).
        let inv = g.inverse().unwrap();
        assert!(inv.max_abs_diff(&g.adjoint()) < 1e-12);
        assert!(inv.max_abs_diff(&cfg.apply(&g)) < 1e-12);
    }

    #[test]
    fn sampled_projections_are_symmetric() {
        let cfg = InvolutionConfig::<f64>::s2();
        let s = BridgeSampler::new(1.0, 256).unwrap();
        let mut rng = rng_from_seed(61);
        let mut symmetric = 0;
        let mut accepted = 0;
        for i in 0..100 {
            let path = s.sample_free_loop(&mut rng, i).unwrap();
            if let Ok(g) = project_s2(&path, &cfg, 16) {
                accepted += 1;
                symmetric += usize::from(is_symmetric_point(&g, &cfg));
            }
        }
        assert!(accepted > 0);
        assert!(symmetric * 100 >= 99 * accepted, "{symmetric}/{accepted}");
    }

    #[test]
    fn rough_paths_alias() {
        // beta small and a tiny window leave most of the mass outside.
        let s = BridgeSampler::new(0.01, 64).unwrap();
        let path = s.sample_bridge(62).unwrap();
        assert!(matches!(refit_path(&path, 1), Err(Error::AliasingExcessive { .. })));
    }

    #[test]
    fn bound_for_a_rotation_loop() {
        let steps = 1024;
        let points: Vec<Mat64> = (0..=steps)
            .map(|j| {
                let t = TAU * j as f64 / steps as f64;
                Mat64::diag(&[C64::from_polar(1.0, t), C64::from_polar(1.0, -t)])
            })
            .collect();
        let e = energy(&points).unwrap();
        assert!((e - 4.0 * PI * PI).abs() < 1e-3);
        let bound = invariance_bound(&points, 0.1).unwrap();
        let (p5, p10) = (HeatKernel::new(5.0).unwrap(), HeatKernel::new(10.0).unwrap());
        let expected = 2f64.powf(1.5) * p5.at_identity().powi(2) / p10.at_identity() * 0.1f64.sqrt() * 2.0 * PI;
        assert!((bound - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn transforms_act_on_coefficients() {
        let g = crate::random::rand_loop::<f64, _>(2, 2, &mut rng_from_seed(63));
        assert_eq!(LoopTransform::Identity.apply(&g).unwrap().max_coeff_diff(&g), 0.0);
        let d = LoopTransform::LeftDiagonal { phase: 0.3 }.apply(&g).unwrap();
        assert!((d.coeff(1)[(0, 0)] - g.coeff(1)[(0, 0)] * C64::from_polar(1.0, 0.3)).norm() < 1e-15);
        let s = LoopTransform::Sigma.apply(&g).unwrap();
        assert_eq!(s.coeff(3)[(0, 1)], g.coeff(2)[(0, 1)]);
    }
}
