//! Deterministic experiments: sample loops, project, factorize, read statistics,
//! and test them against reference laws.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ks::{ks_complex, ks_complex_two_sample, ks_one_sample, ks_two_sample, MIN_SAMPLES};
use crate::birkhoff::{factorize, FactorizeOptions};
use crate::distheory::cartan::polar_zeta_sl2;
use crate::distheory::{DensityTag, ReferenceDensity};
use crate::error::{Error, Result};
use crate::loopalg::InvolutionConfig;
use crate::random::rng_from_seed;
use crate::sampler::{project_s2, refit_path, BridgeSampler, LoopPath, LoopTransform};
use crate::{Loop64, Mat64, C64};

/// Asymptotic 95% KS critical constant; noise bands are `BAND_WIDTH * 1.36/sqrt(n)`.
pub const KS_95: f64 = 1.36;
/// Multiple of the KS null quantile a distance may rise by between successive betas.
pub const BAND_WIDTH: f64 = 2.0;
/// Binomial standard errors a LowerStratum fraction may rise by between successive betas.
pub const STRATUM_SE: f64 = 3.0;

/// Which space the sampled loops live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    #[serde(rename = "SU2_GROUP")]
    Su2Group,
    #[serde(rename = "S2")]
    S2,
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "su2" | "su2_group" => Ok(Target::Su2Group),
            "s2" => Ok(Target::S2),
            _ => Err(Error::InvalidInput(format!("unknown target {s}"))),
        }
    }
}

/// A scalar, complex or vector statistic read from the factors of a sampled loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Statistic {
    /// `B'_n`; `n = 1` is written `B1p`.
    LadderRatio(usize),
    A0,
    B0,
    Theta1,
    Theta2,
    Zeta,
}

impl Statistic {
    /// Only meaningful for symmetric-space loops.
    pub fn needs_s2(self) -> bool {
        matches!(self, Statistic::A0 | Statistic::Zeta)
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::LadderRatio(n) => write!(f, "B{n}p"),
            Statistic::A0 => f.write_str("a0"),
            Statistic::B0 => f.write_str("b0"),
            Statistic::Theta1 => f.write_str("theta1"),
            Statistic::Theta2 => f.write_str("theta2"),
            Statistic::Zeta => f.write_str("zeta"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown statistic {s}"));
        match s {
            "a0" => return Ok(Statistic::A0),
            "b0" => return Ok(Statistic::B0),
            "theta1" => return Ok(Statistic::Theta1),
            "theta2" => return Ok(Statistic::Theta2),
            "zeta" => return Ok(Statistic::Zeta),
            _ => {}
        }
        let digits = s
            .strip_prefix('B')
            .and_then(|r| r.strip_suffix('p'))
            .or_else(|| s.strip_prefix("Bnp(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(bad)?;
        match digits.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Statistic::LadderRatio(n)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for Statistic {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Statistic> for String {
    fn from(s: Statistic) -> String {
        s.to_string()
    }
}

/// Reads a reference name: a density tag name or `NONE`.
pub fn parse_reference(s: &str) -> Result<Option<DensityTag>> {
    let tag = match s {
        "NONE" => return Ok(None),
        "EQ321" => DensityTag::Eq321,
        "EQ330" => DensityTag::Eq330,
        "SECH_CUBED" => DensityTag::SechCubed,
        "F_RHO" => DensityTag::FRho,
        _ => {
            let n = s
                .strip_prefix("EQ331(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| Error::InvalidInput(format!("unknown reference {s}")))?;
            DensityTag::Eq331(n)
        }
    };
    Ok(Some(tag))
}

fn reference_name(tag: Option<DensityTag>) -> String {
    tag.map_or_else(|| "NONE".to_string(), |t| t.name())
}

/// Everything that determines an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: Target,
    pub betas: Vec<f64>,
    #[serde(rename = "M")]
    pub steps: usize,
    #[serde(rename = "N")]
    pub window: i32,
    pub n_loops: usize,
    pub seed: u64,
    pub statistics: Vec<Statistic>,
    /// Reference law per statistic name; missing entries mean no test.
    #[serde(default)]
    pub references: BTreeMap<String, String>,
    /// Toeplitz order used to factorize refit loops; `None` means `4 N`.
    #[serde(default)]
    pub toeplitz_order: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidInput("every beta must be positive".into()));
        }
        if self.window < 1 {
            return Err(Error::InvalidInput(format!("window N = {} must be positive", self.window)));
        }
        BridgeSampler::new(1.0, self.steps)?;
        for s in &self.statistics {
            if s.needs_s2() && self.target != Target::S2 {
                return Err(Error::InvalidInput(format!("{s} is only defined for the S2 target")));
            }
        }
        for s in self.references.keys() {
            let stat: Statistic = s.parse()?;
            if !self.statistics.contains(&stat) {
                return Err(Error::InvalidInput(format!("reference given for unrequested statistic {s}")));
            }
        }
        for (stat, tag) in self.assignments()? {
            check_compatible(stat, tag)?;
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.toeplitz_order.unwrap_or(4 * self.window as usize)
    }

    /// `(statistic, reference)` pairs in request order.
    pub fn assignments(&self) -> Result<Vec<(Statistic, Option<DensityTag>)>> {
        self.statistics
            .iter()
            .map(|s| {
                let r = self.references.get(&s.to_string()).map(|r| parse_reference(r)).transpose()?.flatten();
                Ok((*s, r))
            })
            .collect()
    }

    /// Largest `n` with `B'_n` requested.
    fn max_ladder(&self) -> usize {
        self.statistics
            .iter()
            .filter_map(|s| if let Statistic::LadderRatio(n) = s { Some(*n) } else { None })
            .max()
            .unwrap_or(1)
    }

    fn wants_theta2(&self) -> bool {
        self.statistics.contains(&Statistic::Theta2)
    }
}

fn check_compatible(stat: Statistic, tag: Option<DensityTag>) -> Result<()> {
    let Some(tag) = tag else { return Ok(()) };
    let ok = match stat {
        Statistic::LadderRatio(_) | Statistic::B0 | Statistic::Zeta => {
            matches!(tag, DensityTag::Eq321 | DensityTag::FRho)
        }
        Statistic::Theta1 | Statistic::Theta2 => matches!(tag, DensityTag::Eq330 | DensityTag::Eq331(1)),
        Statistic::A0 => tag == DensityTag::SechCubed,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("reference {} does not apply to {stat}", tag.name())))
    }
}

/// Per-loop statistics. `stratum_ok` is `None` when the loop never reached factorization,
/// `Some(false)` when it fell outside the top stratum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopStatistics {
    #[serde(rename = "B1p")]
    pub b1p: Option<[f64; 2]>,
    pub a0: Option<f64>,
    pub b0: Option<[f64; 2]>,
    pub theta1: Option<Vec<f64>>,
    pub zeta: Option<[f64; 2]>,
    pub stratum_ok: Option<bool>,
    /// `B'_n` for `n >= 2`, keyed by `n`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ladders: BTreeMap<usize, Option<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2: Option<Vec<f64>>,
    /// Error that stopped the loop before factorization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_reason: Option<String>,
}

/// One line of a samples file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub beta: f64,
    #[serde(rename = "M")]
    pub steps: usize,
    pub seed: u64,
    pub statistics: LoopStatistics,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

enum Value {
    Real(f64),
    Complex(C64),
    Vector(Vec<f64>),
}

impl LoopStatistics {
    fn value(&self, stat: Statistic) -> Option<Value> {
        let cx = |p: [f64; 2]| Value::Complex(C64::new(p[0], p[1]));
        match stat {
            Statistic::LadderRatio(1) => self.b1p.map(cx),
            Statistic::LadderRatio(n) => self.ladders.get(&n).copied().flatten().map(cx),
            Statistic::A0 => self.a0.map(Value::Real),
            Statistic::B0 => self.b0.map(cx),
            Statistic::Zeta => self.zeta.map(cx),
            Statistic::Theta1 => self.theta1.clone().map(Value::Vector),
            Statistic::Theta2 => self.theta2.clone().map(Value::Vector),
        }
    }
}

/// Seed of loop `index`; the same across betas so sweeps share random numbers.
pub fn loop_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// `(A, B, C)` of a traceless `2 x 2` matrix as six reals.
fn sl2_coords(m: &Mat64) -> Vec<f64> {
    vec![m[(0, 0)].re, m[(0, 0)].im, m[(0, 1)].re, m[(0, 1)].im, m[(1, 0)].re, m[(1, 0)].im]
}

/// What the pipeline needs beyond the loop itself.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub target: Target,
    pub window: i32,
    pub order: usize,
    pub max_ladder: usize,
    pub theta2: bool,
    pub transform: LoopTransform,
}

impl Pipeline {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Pipeline {
            target: cfg.target,
            window: cfg.window,
            order: cfg.order(),
            max_ladder: cfg.max_ladder(),
            theta2: cfg.wants_theta2(),
            transform: LoopTransform::Identity,
        }
    }

    /// The loop that gets factorized.
    pub fn loop_of(&self, path: &LoopPath) -> Result<Loop64> {
        let g = match self.target {
            Target::Su2Group => refit_path(path, self.window)?,
            Target::S2 => project_s2(path, &InvolutionConfig::s2(), self.window)?,
        };
        self.transform.apply(&g)
    }

    /// Statistics of one path; never fails, failures are recorded in the result.
    pub fn statistics(&self, path: &LoopPath) -> LoopStatistics {
        let mut out = LoopStatistics::default();
        let g = match self.loop_of(path) {
            Ok(g) => g,
            Err(e) => return LoopStatistics { drop_reason: Some(e.kind()), ..out },
        };
        let f = match factorize(&g, &FactorizeOptions::sampled(self.order)) {
            Ok(f) => f,
            Err(Error::LowerStratum(_) | Error::SingularOnCircle { .. }) => {
                out.stratum_ok = Some(false);
                return out;
            }
            Err(e) => return LoopStatistics { drop_reason: Some(e.kind()), ..out },
        };
        out.stratum_ok = Some(true);
        let rh = f.rh_coords(self.max_ladder.max(2));
        out.b1p = rh.b_prime(1).ok().map(pair);
        for n in 2..=self.max_ladder {
            out.ladders.insert(n, rh.b_prime(n).ok().map(pair));
        }
        out.b0 = Some(pair(f.g_zero[(0, 1)]));
        out.theta1 = Some(sl2_coords(&rh.theta[1]));
        if self.theta2 {
            out.theta2 = Some(sl2_coords(&rh.theta[2]));
        }
        if self.target == Target::S2 {
            out.a0 = Some(f.g_zero[(0, 0)].re);
            out.zeta = polar_zeta_sl2(&f.g_zero).ok().map(pair);
        }
        out
    }
}

/// Variant name of an error, for drop tallies.
/// Samples one free loop at `beta` and reads its statistics.
pub fn sample_record(sampler: &BridgeSampler, pipeline: &Pipeline, seed: u64) -> LoopRecord {
    let mut rng = rng_from_seed(seed);
    match sampler.sample_free_loop(&mut rng, seed) {
        Ok(path) => LoopRecord {
            beta: sampler.beta(),
            steps: sampler.steps(),
            seed,
            statistics: pipeline.statistics(&path),
            fallback: path.used_fallback,
        },
        Err(e) => LoopRecord {
            beta: sampler.beta(),
            steps: sampler.steps(),
            seed,
            statistics: LoopStatistics { drop_reason: Some(e.kind()), ..Default::default() },
            fallback: false,
        },
    }
}

/// Samples `n_loops` records at each beta, in config order.
pub fn sample_records(cfg: &ExperimentConfig) -> Result<Vec<LoopRecord>> {
    cfg.validate()?;
    let pipeline = Pipeline::from_config(cfg);
    let mut out = Vec::with_capacity(cfg.betas.len() * cfg.n_loops);
    for &beta in &cfg.betas {
        let sampler = BridgeSampler::new(beta, cfg.steps)?;
        let batch: Vec<LoopRecord> = (0..cfg.n_loops)
            .into_par_iter()
            .map(|i| sample_record(&sampler, &pipeline, loop_seed(cfg.seed, i)))
            .collect();
        out.extend(batch);
    }
    Ok(out)
}

/// One `(beta, statistic)` cell of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub beta: f64,
    pub statistic: Statistic,
    pub reference: String,
    pub n_loops: usize,
    pub kept: usize,
    pub dropped: usize,
    pub lower_stratum: usize,
    pub fallback: usize,
    pub ks_distance: Option<f64>,
    pub p_value: Option<f64>,
    /// Kuiper distance of the argument, for complex statistics.
    pub angle_distance: Option<f64>,
    /// `1.36/sqrt(kept)`, the 95% KS null quantile.
    pub noise_band: Option<f64>,
    /// Drops by cause; statistic-level failures count as `Degenerate`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub drop_reasons: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ReportRow {
    pub fn reconciles(&self) -> bool {
        self.kept + self.dropped + self.lower_stratum == self.n_loops
    }

    pub fn lower_stratum_fraction(&self) -> f64 {
        if self.n_loops == 0 {
            0.0
        } else {
            self.lower_stratum as f64 / self.n_loops as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// FNV-1a hash of the canonical config JSON.
    pub config_hash: String,
    pub seed: u64,
    /// How per-loop seeds derive from `seed`.
    pub loop_seeds: String,
    pub version: String,
    pub toeplitz_order: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn reconciles(&self) -> bool {
        self.rows.iter().all(ReportRow::reconciles)
    }

    pub fn row(&self, beta: f64, stat: Statistic) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.beta == beta && r.statistic == stat)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn metadata_for(hash_source: &str, seed: u64, toeplitz_order: Option<usize>) -> ReportMetadata {
    ReportMetadata {
        config_hash: format!("{:016x}", fnv1a(hash_source.as_bytes())),
        seed,
        loop_seeds: "seed + loop index".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        toeplitz_order,
    }
}

/// Tests the records of one beta against `reference`.
pub fn report_row(
    beta: f64,
    records: &[&LoopRecord],
    stat: Statistic,
    reference: Option<DensityTag>,
) -> Result<ReportRow> {
    check_compatible(stat, reference)?;
    let mut row = ReportRow {
        beta,
        statistic: stat,
        reference: reference_name(reference),
        n_loops: records.len(),
        kept: 0,
        dropped: 0,
        lower_stratum: 0,
        fallback: records.iter().filter(|r| r.fallback).count(),
        ks_distance: None,
        p_value: None,
        angle_distance: None,
        noise_band: None,
        drop_reasons: BTreeMap::new(),
        note: None,
    };
    // Sorted by seed so aggregation does not depend on file order.
    let mut sorted: Vec<&&LoopRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.seed);
    let mut values = Vec::new();
    for r in sorted {
        match (r.statistics.stratum_ok, r.statistics.value(stat)) {
            (Some(false), _) => row.lower_stratum += 1,
            (Some(true), Some(v)) => values.push(v),
            (ok, _) => {
                row.dropped += 1;
                let reason = match (ok, &r.statistics.drop_reason) {
                    (_, Some(reason)) => reason.clone(),
                    (Some(true), None) => "Degenerate".to_string(),
                    (_, None) => "Unknown".to_string(),
                };
                *row.drop_reasons.entry(reason).or_default() += 1;
            }
        }
    }
    row.kept = values.len();
    if row.kept > 0 {
        row.noise_band = Some(KS_95 / (row.kept as f64).sqrt());
    }
    let Some(tag) = reference else { return Ok(row) };
    if row.kept < MIN_SAMPLES {
        row.note = Some(format!("{} kept loops, KS needs {MIN_SAMPLES}", row.kept));
        return Ok(row);
    }
    let density = ReferenceDensity::new(tag)?;
    match &values[0] {
        Value::Complex(_) => {
            let zs: Vec<C64> =
                values.iter().filter_map(|v| if let Value::Complex(z) = v { Some(*z) } else { None }).collect();
            let r = ks_complex(&zs, |x| density.radial_cdf(x))?;
            row.ks_distance = Some(r.radial.distance);
            row.angle_distance = Some(r.angle.distance);
            row.p_value = Some(r.p_value);
        }
        Value::Vector(_) => {
            let radii: Vec<f64> = values
                .iter()
                .filter_map(|v| if let Value::Vector(x) = v { Some(density.quadratic(x).sqrt()) } else { None })
                .collect();
            let r = ks_one_sample(&radii, |x| density.radial_cdf(x))?;
            row.ks_distance = Some(r.distance);
            row.p_value = Some(r.p_value);
        }
        Value::Real(_) => {
            let xs: Vec<f64> =
                values.iter().filter_map(|v| if let Value::Real(x) = v { Some(x.abs()) } else { None }).collect();
            let r = ks_one_sample(&xs, |x| density.radial_cdf(x))?;
            row.ks_distance = Some(r.distance);
            row.p_value = Some(r.p_value);
        }
    }
    Ok(row)
}

/// Rows for every beta present in `records` (in first-seen order) and every assignment.
pub fn report_from_records(
    records: &[LoopRecord],
    assignments: &[(Statistic, Option<DensityTag>)],
    metadata: ReportMetadata,
) -> Result<Report> {
    let mut betas: Vec<f64> = Vec::new();
    for r in records {
        if !betas.contains(&r.beta) {
            betas.push(r.beta);
        }
    }
    let mut rows = Vec::new();
    for &beta in &betas {
        let group: Vec<&LoopRecord> = records.iter().filter(|r| r.beta == beta).collect();
        for &(stat, tag) in assignments {
            rows.push(report_row(beta, &group, stat, tag)?);
        }
    }
    Ok(Report { metadata, rows })
}

/// Samples, factorizes and tests everything the config asks for.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let (_, report) = run_experiment_with_records(cfg)?;
    Ok(report)
}

/// [`run_experiment`] that also returns the per-loop records.
pub fn run_experiment_with_records(cfg: &ExperimentConfig) -> Result<(Vec<LoopRecord>, Report)> {
    let records = sample_records(cfg)?;
    let metadata = metadata_for(&serde_json::to_string(cfg)?, cfg.seed, Some(cfg.order()));
    let mut report = report_from_records(&records, &cfg.assignments()?, metadata)?;
    if cfg.n_loops == 0 {
        // No records means no betas were seen; keep one zero row per cell.
        for &beta in &cfg.betas {
            for (stat, tag) in cfg.assignments()? {
                report.rows.push(report_row(beta, &[], stat, tag)?);
            }
        }
    }
    Ok((records, report))
}

/// One statistic across a beta sweep, ordered by decreasing beta.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendReport {
    pub statistic: Statistic,
    pub betas: Vec<f64>,
    pub kept: Vec<usize>,
    pub ks_distance: Vec<Option<f64>>,
    pub lower_stratum_fraction: Vec<f64>,
    /// Each KS distance is at most the previous one plus `BAND_WIDTH * 1.36/sqrt(kept)`.
    /// False when any distance is missing, since the clause cannot then be checked.
    pub ks_non_increasing: bool,
    /// Each LowerStratum fraction is at most the previous one plus `STRATUM_SE` pooled
    /// binomial standard errors.
    pub lower_stratum_non_increasing: bool,
}

impl TrendReport {
    pub fn holds(&self) -> bool {
        self.ks_non_increasing && self.lower_stratum_non_increasing
    }
}

/// Reads the rows of `stat` from `report` and checks that the sweep toward small beta
/// does not move away from the reference law, within the noise bands.
pub fn trend_check(report: &Report, stat: Statistic) -> TrendReport {
    let mut rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.statistic == stat).collect();
    rows.sort_by(|a, b| b.beta.total_cmp(&a.beta));
    let ks_step = |prev: &ReportRow, next: &ReportRow| match (prev.ks_distance, next.ks_distance) {
        (Some(a), Some(b)) => b <= a + BAND_WIDTH * KS_95 / (next.kept as f64).sqrt(),
        _ => false,
    };
    let stratum_step = |prev: &ReportRow, next: &ReportRow| {
        let (n1, n2) = (prev.n_loops as f64, next.n_loops as f64);
        let pooled = (prev.lower_stratum + next.lower_stratum) as f64 / (n1 + n2).max(1.0);
        let se = (pooled * (1.0 - pooled) * (1.0 / n1.max(1.0) + 1.0 / n2.max(1.0))).sqrt();
        next.lower_stratum_fraction() <= prev.lower_stratum_fraction() + STRATUM_SE * se
    };
    TrendReport {
        statistic: stat,
        betas: rows.iter().map(|r| r.beta).collect(),
        kept: rows.iter().map(|r| r.kept).collect(),
        ks_distance: rows.iter().map(|r| r.ks_distance).collect(),
        lower_stratum_fraction: rows.iter().map(|r| r.lower_stratum_fraction()).collect(),
        ks_non_increasing: rows.iter().all(|r| r.ks_distance.is_some()) && rows.windows(2).all(|w| ks_step(w[0], w[1])),
        lower_stratum_non_increasing: rows.windows(2).all(|w| stratum_step(w[0], w[1])),
    }
}

/// Two-sample distance between a statistic with and without a transform at one beta.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub beta: f64,
    pub kept_plain: usize,
    pub kept_transformed: usize,
    pub ks_distance: f64,
    pub p_value: f64,
    /// `1.36 sqrt(1/n + 1/m)`.
    pub noise_band: f64,
}

/// Samples `n` loops per beta, once plain and once (independent seeds) transformed,
/// and compares the statistic.
pub fn invariance_probe(
    cfg: &ExperimentConfig,
    stat: Statistic,
    transform: LoopTransform,
) -> Result<Vec<InvarianceRow>> {
    let mut plain_cfg = cfg.clone();
    plain_cfg.statistics = vec![stat];
    plain_cfg.references.clear();
    plain_cfg.validate()?;
    let plain = Pipeline::from_config(&plain_cfg);
    let moved = Pipeline { transform, ..plain.clone() };
    let offset = cfg.n_loops as u64;
    let mut rows = Vec::new();
    for &beta in &cfg.betas {
        let sampler = BridgeSampler::new(beta, cfg.steps)?;
        let collect = |p: &Pipeline, shift: u64| -> Vec<Value> {
            (0..cfg.n_loops)
                .into_par_iter()
                .map(|i| sample_record(&sampler, p, loop_seed(cfg.seed.wrapping_add(shift), i)))
                .collect::<Vec<_>>()
                .into_iter()
                .filter(|r| r.statistics.stratum_ok == Some(true))
                .filter_map(|r| r.statistics.value(stat))
                .collect()
        };
        let (a, b) = (collect(&plain, 0), collect(&moved, offset));
        let ks = match (a.first(), b.first()) {
            (Some(Value::Complex(_)), Some(Value::Complex(_))) => {
                let za: Vec<C64> =
                    a.iter().filter_map(|v| if let Value::Complex(z) = v { Some(*z) } else { None }).collect();
                let zb: Vec<C64> =
                    b.iter().filter_map(|v| if let Value::Complex(z) = v { Some(*z) } else { None }).collect();
                let r = ks_complex_two_sample(&za, &zb)?;
                super::ks::KsResult { distance: r.radial.distance.max(r.angle.distance), p_value: r.p_value }
            }
            _ => {
                let scalar = |v: &Value| match v {
                    Value::Real(x) => *x,
                    Value::Complex(z) => z.norm(),
                    Value::Vector(x) => x.iter().map(|c| c * c).sum::<f64>().sqrt(),
                };
                let xa: Vec<f64> = a.iter().map(scalar).collect();
                let xb: Vec<f64> = b.iter().map(scalar).collect();
                ks_two_sample(&xa, &xb)?
            }
        };
        let (n, m) = (a.len() as f64, b.len() as f64);
        rows.push(InvarianceRow {
            beta,
            kept_plain: a.len(),
            kept_transformed: b.len(),
            ks_distance: ks.distance,
            p_value: ks.p_value,
            noise_band: KS_95 * (1.0 / n + 1.0 / m).sqrt(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(target: Target, betas: Vec<f64>, n_loops: usize) -> ExperimentConfig {
        ExperimentConfig {
            target,
            betas,
            steps: 256,
            window: 16,
            n_loops,
            seed: 3,
            statistics: vec![Statistic::LadderRatio(1), Statistic::Theta1],
            references: [("B1p".to_string(), "EQ321".to_string()), ("theta1".to_string(), "EQ330".to_string())]
                .into_iter()
                .collect(),
            toeplitz_order: None,
        }
    }

    #[test]
    fn statistic_names_round_trip() {
        for s in ["B1p", "B3p", "a0", "b0", "theta1", "theta2", "zeta"] {
            assert_eq!(s.parse::<Statistic>().unwrap().to_string(), s);
        }
        assert_eq!("Bnp(2)".parse::<Statistic>().unwrap(), Statistic::LadderRatio(2));
        assert!("B0p".parse::<Statistic>().is_err());
        assert!("x".parse::<Statistic>().is_err());
        assert_eq!(parse_reference("EQ331(2)").unwrap(), Some(DensityTag::Eq331(2)));
        assert_eq!(parse_reference("NONE").unwrap(), None);
    }

    #[test]
    fn config_json_uses_exact_field_names() {
        let cfg = config(Target::S2, vec![1.0], 10);
        let v: serde_json::Value = serde_json::to_value(&cfg).unwrap();
        for key in ["target", "betas", "M", "N", "n_loops", "seed", "statistics", "references"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["target"], "S2");
        assert_eq!(v["statistics"][0], "B1p");
        let back: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = config(Target::Su2Group, vec![1.0], 1);
        c.statistics.push(Statistic::Zeta);
        assert!(c.validate().is_err());
        let mut c = config(Target::S2, vec![-1.0], 1);
        assert!(c.validate().is_err());
        c.betas = vec![1.0];
        c.references.insert("B1p".into(), "EQ330".into());
        assert!(c.validate().is_err());
        c.references.insert("B1p".into(), "EQ321".into());
        c.steps = 48;
        assert!(c.validate().is_err());
    }

    #[test]
    fn empty_run_reconciles_to_zero() {
        let report = run_experiment(&config(Target::S2, vec![1.0, 0.5], 0)).unwrap();
        assert_eq!(report.rows.len(), 4);
        for r in &report.rows {
            assert!(r.reconciles());
            assert_eq!((r.n_loops, r.kept, r.ks_distance), (0, 0, None));
        }
    }

    #[test]
    fn runs_are_deterministic_and_reconcile() {
        let cfg = config(Target::S2, vec![1.0], 120);
        let (rec_a, rep_a) = run_experiment_with_records(&cfg).unwrap();
        let (rec_b, rep_b) = run_experiment_with_records(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&rec_a).unwrap(), serde_json::to_string(&rec_b).unwrap());
        assert_eq!(serde_json::to_string(&rep_a).unwrap(), serde_json::to_string(&rep_b).unwrap());
        assert!(rep_a.reconciles());
        let row = rep_a.row(1.0, Statistic::LadderRatio(1)).unwrap();
        assert_eq!(row.n_loops, 120);
        assert!(row.kept >= 100, "{row:?}");
        assert!(row.ks_distance.is_some());
    }

    #[test]
    fn report_from_samples_file_matches_direct_run() {
        let cfg = config(Target::Su2Group, vec![2.0], 110);
        let (records, report) = run_experiment_with_records(&cfg).unwrap();
        let text: String = records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
        let parsed: Vec<LoopRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        let again = report_from_records(&parsed, &cfg.assignments().unwrap(), report.metadata.clone()).unwrap();
        assert_eq!(again, report);
    }

    #[test]
    fn sample_line_has_documented_fields() {
        let cfg = config(Target::S2, vec![1.0], 1);
        let (records, _) = run_experiment_with_records(&cfg).unwrap();
        let v: serde_json::Value = serde_json::to_value(&records[0]).unwrap();
        for key in ["beta", "M", "seed", "statistics"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        for key in ["B1p", "a0", "b0", "theta1", "zeta", "stratum_ok"] {
            assert!(v["statistics"].get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn quarantined_loops_do_not_touch_kept_statistics() {
        let cfg = config(Target::S2, vec![1.0], 150);
        let (records, report) = run_experiment_with_records(&cfg).unwrap();
        let stat = Statistic::LadderRatio(1);
        let before = report.row(1.0, stat).unwrap().clone();
        let mut extended = records.clone();
        for (k, statistics) in
            [LoopStatistics { stratum_ok: Some(false), ..Default::default() }, LoopStatistics::default()]
                .into_iter()
                .enumerate()
        {
            extended.push(LoopRecord { seed: 10_000 + k as u64, statistics, ..records[0].clone() });
        }
        let rep = report_from_records(&extended, &cfg.assignments().unwrap(), report.metadata).unwrap();
        let after = rep.row(1.0, stat).unwrap();
        assert!(after.reconciles());
        assert_eq!(after.kept, before.kept);
        assert_eq!(after.lower_stratum, before.lower_stratum + 1);
        assert_eq!(after.dropped, before.dropped + 1);
        assert_eq!(after.ks_distance, before.ks_distance);
    }

    #[test]
    fn identity_probe_is_within_noise() {
        let cfg = config(Target::Su2Group, vec![1.0], 300);
        let rows = invariance_probe(&cfg, Statistic::LadderRatio(1), LoopTransform::Identity).unwrap();
        assert!(rows[0].ks_distance < 1.5 * rows[0].noise_band, "{rows:?}");
    }

    fn row(beta: f64, kept: usize, lower: usize, ks: Option<f64>) -> ReportRow {
        ReportRow {
            beta,
            statistic: Statistic::LadderRatio(1),
            reference: "EQ321".into(),
            n_loops: 1000,
            kept,
            dropped: 1000 - kept - lower,
            lower_stratum: lower,
            fallback: 0,
            ks_distance: ks,
            p_value: None,
            angle_distance: None,
            noise_band: None,
            drop_reasons: BTreeMap::new(),
            note: None,
        }
    }

    fn sweep(rows: Vec<ReportRow>) -> TrendReport {
        let report = Report { metadata: metadata_for("", 0, None), rows };
        trend_check(&report, Statistic::LadderRatio(1))
    }

    #[test]
    fn trend_bands() {
        // Band at 1000 kept is 2 * 1.36/sqrt(1000) = 0.086; rows arrive out of order.
        let t = sweep(vec![row(0.3, 1000, 0, Some(0.3)), row(1.0, 1000, 0, Some(0.25))]);
        assert_eq!(t.betas, vec![1.0, 0.3]);
        assert!(t.holds());
        assert!(!sweep(vec![row(1.0, 1000, 0, Some(0.2)), row(0.3, 1000, 0, Some(0.3))]).ks_non_increasing);
        // A beta with no kept loops has no distance, so the clause cannot hold.
        let empty = sweep(vec![row(1.0, 1000, 0, Some(0.2)), row(0.3, 0, 0, None)]);
        assert!(!empty.ks_non_increasing && empty.lower_stratum_non_increasing);
        // 10 -> 20 of 1000 is within 3 pooled standard errors (0.017); 10 -> 40 is not.
        assert!(sweep(vec![row(1.0, 990, 10, Some(0.1)), row(0.3, 980, 20, Some(0.1))]).lower_stratum_non_increasing);
        assert!(!sweep(vec![row(1.0, 990, 10, Some(0.1)), row(0.3, 960, 40, Some(0.1))]).lower_stratum_non_increasing);
    }
}
