//! Named special-function and reference-law checks, each emitting one record.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ks::ks_one_sample;
use crate::distheory::density::{coherence_check_331, ladders_from_theta, sl2_pair};
use crate::distheory::spectral::{f_rho, hemisphere_check, sech_cubed_fourier_check, TransformRow};
use crate::distheory::{DensityTag, ReferenceDensity};
use crate::error::{Error, Result};
use crate::sampler::semigroup_check;

/// Spectral parameters of the transform checks.
pub const LAMBDAS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
/// Argument standing in for `rho -> 0+`.
pub const RHO_SMALL: f64 = 1e-14;
/// Band on the KS distance of the sampled pushforwards at `1e5` samples.
pub const PUSHFORWARD_BAND: f64 = 0.006;
/// Band on the KS distance of the coherence check at `1e5` samples.
pub const COHERENCE_BAND: f64 = 0.02;
/// Monte Carlo standard errors allowed by the semigroup check.
pub const SEMIGROUP_Z: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialCheck {
    FRho,
    Fourier75,
    Diag72,
    HeatSemigroup,
    Coherence331,
    Eq330Pushforward,
}

impl SpecialCheck {
    pub const ALL: [SpecialCheck; 6] = [
        SpecialCheck::FRho,
        SpecialCheck::Fourier75,
        SpecialCheck::Diag72,
        SpecialCheck::HeatSemigroup,
        SpecialCheck::Coherence331,
        SpecialCheck::Eq330Pushforward,
    ];

    /// Fast checks that use quadrature only.
    pub fn is_deterministic(self) -> bool {
        matches!(self, SpecialCheck::FRho | SpecialCheck::Fourier75 | SpecialCheck::Diag72)
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            SpecialCheck::FRho | SpecialCheck::Fourier75 => 1e-6,
            SpecialCheck::Diag72 => 1e-10,
            SpecialCheck::HeatSemigroup => SEMIGROUP_Z,
            SpecialCheck::Coherence331 => COHERENCE_BAND,
            SpecialCheck::Eq330Pushforward => PUSHFORWARD_BAND,
        }
    }
}

impl fmt::Display for SpecialCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecialCheck::FRho => "f-rho",
            SpecialCheck::Fourier75 => "fourier75",
            SpecialCheck::Diag72 => "diag72",
            SpecialCheck::HeatSemigroup => "heat-semigroup",
            SpecialCheck::Coherence331 => "coherence331",
            SpecialCheck::Eq330Pushforward => "eq330-pushforward",
        })
    }
}

impl FromStr for SpecialCheck {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SpecialCheck::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown check {s}")))
    }
}

/// Result of one check. Complex values are flattened to `[re, im]` pairs. For the
/// statistical checks `abs_error` is the statistic compared with `tolerance`
/// (a KS distance, or the largest z-score for the semigroup).
#[derive(Clone, Debug, Serialize)]
pub struct SpecialRecord {
    pub check: String,
    pub inputs: Vec<f64>,
    pub computed: Vec<f64>,
    pub reference: Vec<f64>,
    pub abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn record(
    check: SpecialCheck,
    inputs: Vec<f64>,
    computed: Vec<f64>,
    reference: Vec<f64>,
    abs_error: f64,
) -> SpecialRecord {
    let tolerance = check.default_tolerance();
    SpecialRecord {
        check: check.to_string(),
        inputs,
        computed,
        reference,
        abs_error,
        tolerance,
        passed: abs_error <= tolerance,
    }
}

fn transform_record(check: SpecialCheck, rows: Vec<TransformRow>) -> SpecialRecord {
    let inputs = rows.iter().map(|r| r.lambda).collect();
    let computed = rows.iter().flat_map(|r| r.computed).collect();
    let reference = rows.iter().flat_map(|r| r.reference).collect();
    let err = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    record(check, inputs, computed, reference, err)
}

/// Runs `check` with its pinned inputs and seed.
pub fn run_special(check: SpecialCheck, seed: u64) -> Result<SpecialRecord> {
    match check {
        SpecialCheck::FRho => {
            let f = f_rho(RHO_SMALL)?;
            Ok(record(check, vec![RHO_SMALL], vec![f], vec![2.0], (f - 2.0).abs()))
        }
        SpecialCheck::Fourier75 => Ok(transform_record(check, sech_cubed_fourier_check(&LAMBDAS)?)),
        SpecialCheck::Diag72 => Ok(transform_record(check, hemisphere_check(&LAMBDAS)?)),
        SpecialCheck::HeatSemigroup => {
            let rows = semigroup_check(0.2, 0.2, 20, 1_000_000, seed)?;
            let z = rows.iter().map(|r| r.z_score()).fold(0.0, f64::max);
            Ok(record(
                check,
                rows.iter().map(|r| r.angle).collect(),
                rows.iter().map(|r| r.monte_carlo).collect(),
                rows.iter().map(|r| r.exact).collect(),
                z,
            ))
        }
        SpecialCheck::Coherence331 => {
            let r = coherence_check_331(2, 100_000, seed)?;
            Ok(record(
                check,
                vec![2.0, 100_000.0],
                vec![r.radial.distance, r.coordinate.distance],
                vec![0.0, 0.0],
                r.max_distance(),
            ))
        }
        SpecialCheck::Eq330Pushforward => {
            let p = eq330_pushforward(100_000, seed)?;
            Ok(record(
                check,
                vec![100_000.0],
                vec![p.b1, p.b2_prime, p.marginal],
                vec![0.0, 0.0, 0.0],
                p.max_distance(),
            ))
        }
    }
}

/// KS distances of the sampled `(theta_1, theta_2)` law: `|B_1|` and `|B_2'|` against the
/// radial law of `(1 + |z|^2)^{-2}`, and the worst coordinate against its quadrature marginal.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Pushforward {
    pub b1: f64,
    pub b2_prime: f64,
    pub marginal: f64,
}

impl Pushforward {
    pub fn max_distance(&self) -> f64 {
        self.b1.max(self.b2_prime).max(self.marginal)
    }
}

pub fn eq330_pushforward(samples: usize, seed: u64) -> Result<Pushforward> {
    let law = ReferenceDensity::new(DensityTag::Eq330)?;
    let planar = ReferenceDensity::new(DensityTag::Eq321)?;
    let points = law.sample(samples, seed);
    let (mut b1, mut b2) = (Vec::with_capacity(samples), Vec::with_capacity(samples));
    for p in &points {
        let (t1, t2) = sl2_pair(p);
        let (x, y) = ladders_from_theta(&t1, &t2)?;
        b1.push(x.norm());
        b2.push(y.norm());
    }
    let cdf = |r: f64| planar.radial_cdf(r);
    let mut marginal: f64 = 0.0;
    // One coordinate from each weight class: theta_1's A and B, theta_2's A and B.
    for index in [0, 2, 6, 8] {
        let table = law.coordinate_marginal(index)?;
        let xs: Vec<f64> = points.iter().map(|p| p[index]).collect();
        marginal = marginal.max(ks_one_sample(&xs, |u| table.cdf(u))?.distance);
    }
    Ok(Pushforward { b1: ks_one_sample(&b1, cdf)?.distance, b2_prime: ks_one_sample(&b2, cdf)?.distance, marginal })
}
