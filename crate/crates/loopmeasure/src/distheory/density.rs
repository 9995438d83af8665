//! Reference laws: the limit law of `B_1`, the elliptical `theta` densities, the
//! conjectured diagonal law and the conjectured `B_1` law of the `S^2` case.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::quad::{integrate, integrate_to_infinity, Quadrature};
use super::spectral::f_rho;
use crate::error::{Error, Result};
use crate::harness::ks::{ks_one_sample, KsResult};
use crate::random::rng_from_seed;
use crate::{Mat64, C64};

/// Real coordinates of an `sl_2` element `(A, B; C, -A)`: `(Re A, Im A, Re B, Im B, Re C, Im C)`.
pub const SL2_REAL_DIM: usize = 6;

/// Weights of `|X|^2 = 2|A|^2 + |B|^2 + |C|^2` on the six real coordinates.
const SL2_WEIGHTS: [f64; SL2_REAL_DIM] = [2.0, 2.0, 1.0, 1.0, 1.0, 1.0];

/// Which reference law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityTag {
    /// `(1/pi) (1 + |z|^2)^{-2}` on the plane.
    Eq321,
    /// Joint `(theta_1, theta_2)` density `(1 + |theta_1|^2 + |theta_2|^2/2)^{-7}` on `sl_2 + sl_2`.
    Eq330,
    /// `(beta_1, ..., beta_N)` density `(1 + sum |beta_n|^2/n)^{-1-3N}` on `sl_2^N`.
    Eq331(usize),
    /// Diagonal law in the Cartan coordinate: `sech^3(2x)` against the invariant volume
    /// `cosh^2(2x) dx`, that is `sech(2x) dx` up to normalization.
    SechCubed,
    /// Conjectured `S^2` law of `B_1`: `(1 + |B|^2)^{-3/2} F(1/(1 + |B|^2))` on the plane.
    FRho,
}

impl DensityTag {
    pub fn name(&self) -> String {
        match self {
            DensityTag::Eq321 => "EQ321".into(),
            DensityTag::Eq330 => "EQ330".into(),
            DensityTag::Eq331(n) => format!("EQ331({n})"),
            DensityTag::SechCubed => "SECH_CUBED".into(),
            DensityTag::FRho => "F_RHO".into(),
        }
    }
}

/// A normalized reference law with its sampler.
#[derive(Clone, Debug)]
pub struct ReferenceDensity {
    tag: DensityTag,
    normalizer: f64,
    /// Weights of the quadratic form for the elliptical laws.
    weights: Vec<f64>,
    /// `(s, P(|B| <= sqrt(1/s^2 - 1)))` on an increasing `s` grid, for `FRho`.
    radial_table: Vec<(f64, f64)>,
}

/// `integral_0^inf r^{m-1} (1 + r^2)^{-(m+2)/2} dr`.
fn radial_integral(m: usize) -> Result<f64> {
    let e = -((m + 2) as f64) / 2.0;
    integrate_to_infinity(|r| r.powi(m as i32 - 1) * (1.0 + r * r).powf(e), 0.0)
}

/// Area of the unit sphere in `R^m` for even `m`.
fn sphere_area(m: usize) -> f64 {
    let half = m / 2;
    let gamma: f64 = (1..half).map(|k| k as f64).product();
    2.0 * PI.powi(half as i32) / gamma
}

fn elliptical_weights(blocks: usize) -> Vec<f64> {
    (1..=blocks).flat_map(|n| SL2_WEIGHTS.iter().map(move |w| w / n as f64)).collect()
}

impl ReferenceDensity {
    pub fn new(tag: DensityTag) -> Result<Self> {
        let mut d = ReferenceDensity { tag, normalizer: 1.0, weights: vec![], radial_table: vec![] };
        match tag {
            DensityTag::Eq321 => {
                d.normalizer = TAU * integrate_to_infinity(|r| r / (1.0 + r * r).powi(2), 0.0)?;
            }
            DensityTag::Eq330 | DensityTag::Eq331(_) => {
                let blocks = match tag {
                    DensityTag::Eq331(0) => return Err(Error::UnnormalizableTag("EQ331 needs N >= 1".into())),
                    DensityTag::Eq331(n) => n,
                    _ => 2,
                };
                d.weights = elliptical_weights(blocks);
                let m = d.weights.len();
                let det: f64 = d.weights.iter().product();
                d.normalizer = sphere_area(m) * radial_integral(m)? / det.sqrt();
            }
            DensityTag::SechCubed => {
                d.normalizer = Quadrature::default().integrate_line(|x: f64| sech(2.0 * x), 0.0)?.value;
            }
            DensityTag::FRho => {
                d.radial_table = f_rho_radial_table(1024)?;
                let total = d.radial_table.first().map(|p| p.1).unwrap_or(0.0);
                d.normalizer = TAU * total;
                for p in d.radial_table.iter_mut() {
                    p.1 /= total;
                }
            }
        }
        if !(d.normalizer.is_finite() && d.normalizer > 0.0) {
            return Err(Error::UnnormalizableTag(tag.name()));
        }
        Ok(d)
    }

    pub fn tag(&self) -> DensityTag {
        self.tag
    }

    /// Normalizer `Z` of the unnormalized density.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Real dimension of a point.
    pub fn dim(&self) -> usize {
        match self.tag {
            DensityTag::Eq321 | DensityTag::FRho => 2,
            DensityTag::SechCubed => 1,
            _ => self.weights.len(),
        }
    }

    /// Weighted square norm `sum w_i x_i^2` of an elliptical point.
    pub fn quadratic(&self, point: &[f64]) -> f64 {
        point.iter().zip(&self.weights).map(|(x, w)| w * x * x).sum()
    }

    /// Normalized density at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), point.len()));
        }
        let unnormalized = match self.tag {
            DensityTag::Eq321 => (1.0 + point[0] * point[0] + point[1] * point[1]).powi(-2),
            DensityTag::Eq330 | DensityTag::Eq331(_) => {
                (1.0 + self.quadratic(point)).powf(-((self.dim() + 2) as f64) / 2.0)
            }
            DensityTag::SechCubed => sech(2.0 * point[0]),
            DensityTag::FRho => {
                let rho = 1.0 / (1.0 + point[0] * point[0] + point[1] * point[1]);
                rho.powf(1.5) * f_rho(rho)?
            }
        };
        Ok(unnormalized / self.normalizer)
    }

    /// CDF of the rotation-invariant radius: `|z|` for the planar laws, the weighted norm
    /// `sqrt(sum w_i x_i^2)` for the elliptical laws, `|x|` for `SechCubed`.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self.tag {
            DensityTag::Eq321 => r * r / (1.0 + r * r),
            DensityTag::Eq330 | DensityTag::Eq331(_) => elliptical_radial_cdf(self.dim(), r),
            DensityTag::SechCubed => 2.0 * gudermannian(2.0 * r) / PI,
            DensityTag::FRho => {
                let s = 1.0 / (1.0 + r * r).sqrt();
                interpolate(&self.radial_table, s)
            }
        }
    }

    /// Exact samples. Planar laws give `[re, im]`, elliptical laws give the real coordinates
    /// of `(beta_1, ..., beta_N)`, `SechCubed` gives `[x]`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.tag {
            DensityTag::Eq321 => {
                let u: f64 = rng.random();
                planar(rng, (u / (1.0 - u)).sqrt())
            }
            DensityTag::FRho => {
                let u: f64 = rng.random();
                let s = invert(&self.radial_table, u).max(1e-300);
                planar(rng, (1.0 / (s * s) - 1.0).max(0.0).sqrt())
            }
            DensityTag::SechCubed => {
                let u: f64 = rng.random();
                vec![(PI * (u - 0.5)).tan().asinh() / 2.0]
            }
            DensityTag::Eq330 | DensityTag::Eq331(_) => {
                // x = G/sqrt(W) with G ~ N(0, diag(1/w)) and W ~ chi^2_2 gives density
                // proportional to (1 + sum w x^2)^{-(m+2)/2}.
                let w: f64 = 2.0 * rng.sample::<f64, _>(Exp1);
                let scale = 1.0 / w.sqrt();
                self.weights.iter().map(|wi| rng.sample::<f64, _>(StandardNormal) * scale / wi.sqrt()).collect()
            }
        }
    }

    /// CDF of one real coordinate of an elliptical law, by quadrature over the others.
    pub fn coordinate_marginal(&self, index: usize) -> Result<MarginalTable> {
        if self.weights.is_empty() || index >= self.weights.len() {
            return Err(Error::InvalidInput(format!("no coordinate {index} for {}", self.tag.name())));
        }
        let m = self.weights.len();
        let w = self.weights[index];
        let e = -((m + 2) as f64) / 2.0;
        // Integrating out the other m - 1 coordinates radially.
        let density = |u: f64| integrate_to_infinity(|r| r.powi(m as i32 - 2) * (1.0 + w * u * u + r * r).powf(e), 0.0);
        MarginalTable::build(density, w)
    }
}

fn planar<R: Rng + ?Sized>(rng: &mut R, r: f64) -> Vec<f64> {
    let phi: f64 = TAU * rng.random::<f64>();
    vec![r * phi.cos(), r * phi.sin()]
}

pub(crate) fn sech(x: f64) -> f64 {
    if x.abs() > 700.0 {
        0.0
    } else {
        1.0 / x.cosh()
    }
}

fn gudermannian(x: f64) -> f64 {
    x.sinh().atan()
}

/// CDF of `sqrt(sum w x^2)` under the elliptical law of real dimension `m`, by quadrature.
pub fn elliptical_radial_cdf(m: usize, r: f64) -> f64 {
    radial_cdf_with_total(m, r, radial_integral(m).unwrap_or(f64::NAN))
}

fn radial_cdf_with_total(m: usize, r: f64, total: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let e = -((m + 2) as f64) / 2.0;
    let f = |t: f64| t.powi(m as i32 - 1) * (1.0 + t * t).powf(e);
    let part = integrate(f, 0.0, r.min(1.0)).unwrap_or(f64::NAN)
        + if r > 1.0 { integrate(|t| f(1.0 / t) / (t * t), 1.0 / r, 1.0).unwrap_or(f64::NAN) } else { 0.0 };
    (part / total).clamp(0.0, 1.0)
}

/// Outcome of the coherence check between the `N` and `N - 1` block laws.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoherenceReport {
    pub blocks: usize,
    pub samples: usize,
    /// KS of the weighted norm of `(beta_1, ..., beta_{N-1})` against the `N - 1` law.
    pub radial: KsResult,
    /// KS of `Re B` of `beta_1` against the `N - 1` coordinate marginal.
    pub coordinate: KsResult,
}

impl CoherenceReport {
    pub fn max_distance(&self) -> f64 {
        self.radial.distance.max(self.coordinate.distance)
    }
}

/// Samples the `N`-block law, drops `beta_N`, and tests what remains against the
/// `N - 1` block law.
pub fn coherence_check_331(blocks: usize, samples: usize, seed: u64) -> Result<CoherenceReport> {
    if blocks < 2 {
        return Err(Error::InvalidInput(format!("coherence needs N >= 2, got {blocks}")));
    }
    let full = ReferenceDensity::new(DensityTag::Eq331(blocks))?;
    let lower = ReferenceDensity::new(DensityTag::Eq331(blocks - 1))?;
    let keep = lower.dim();
    let draws = full.sample(samples, seed);
    let radii: Vec<f64> = draws.iter().map(|p| lower.quadratic(&p[..keep]).sqrt()).collect();
    let m = lower.dim();
    let total = radial_integral(m)?;
    let radial = ks_one_sample(&radii, |r| radial_cdf_with_total(m, r, total))?;
    let table = lower.coordinate_marginal(2)?;
    let xs: Vec<f64> = draws.iter().map(|p| p[2]).collect();
    let coordinate = ks_one_sample(&xs, |u| table.cdf(u))?;
    Ok(CoherenceReport { blocks, samples, radial, coordinate })
}

/// `(s, integral_s^1 F(t^2) dt)` for `s` from 0 to 1 by composite Simpson.
fn f_rho_radial_table(cells: usize) -> Result<Vec<(f64, f64)>> {
    let h = 1.0 / cells as f64;
    let node = |s: f64| f_rho((s * s).max(1e-300));
    let mut table = vec![(1.0, 0.0)];
    let mut acc = 0.0;
    let mut right = node(1.0)?;
    for i in (0..cells).rev() {
        let a = i as f64 * h;
        let left = node(a)?;
        acc += h / 6.0 * (left + 4.0 * node(a + h / 2.0)? + right);
        table.push((a, acc));
        right = left;
    }
    table.reverse();
    Ok(table)
}

/// Linear interpolation of a table sorted by its first column.
fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let i = table.partition_point(|p| p.0 < x);
    if i == 0 {
        return table[0].1;
    }
    if i >= table.len() {
        return table[table.len() - 1].1;
    }
    let (x0, y0) = table[i - 1];
    let (x1, y1) = table[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Inverse of a monotone table in its second column (either orientation).
fn invert(table: &[(f64, f64)], y: f64) -> f64 {
    let swapped: Vec<(f64, f64)> = if table[0].1 <= table[table.len() - 1].1 {
        table.iter().map(|p| (p.1, p.0)).collect()
    } else {
        table.iter().rev().map(|p| (p.1, p.0)).collect()
    };
    interpolate(&swapped, y)
}

/// Tabulated 1-D marginal CDF on the angle grid `u = tan(phi)/sqrt(w)`.
#[derive(Clone, Debug)]
pub struct MarginalTable {
    scale: f64,
    table: Vec<(f64, f64)>,
}

impl MarginalTable {
    fn build(density: impl Fn(f64) -> Result<f64>, w: f64) -> Result<Self> {
        let scale = w.sqrt();
        let cells = 2048;
        let h = PI / cells as f64;
        let g = |phi: f64| -> Result<f64> {
            let c = phi.cos();
            if c <= 0.0 {
                return Ok(0.0);
            }
            Ok(density(phi.tan() / scale)? / (c * c * scale))
        };
        let mut table = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        let mut left = 0.0;
        table.push((-FRAC_PI_2, 0.0));
        for i in 0..cells {
            let a = -FRAC_PI_2 + i as f64 * h;
            let right = g(a + h)?;
            acc += h / 6.0 * (left + 4.0 * g(a + h / 2.0)? + right);
            table.push((a + h, acc));
            left = right;
        }
        for p in table.iter_mut() {
            p.1 /= acc;
        }
        Ok(MarginalTable { scale, table })
    }

    pub fn cdf(&self, u: f64) -> f64 {
        interpolate(&self.table, (u * self.scale).atan())
    }
}

/// Reads `(theta_1, theta_2)` from the first twelve real coordinates.
pub fn sl2_pair(point: &[f64]) -> (Mat64, Mat64) {
    (sl2_from_coords(&point[..SL2_REAL_DIM]), sl2_from_coords(&point[SL2_REAL_DIM..2 * SL2_REAL_DIM]))
}

/// `(A, B; C, -A)` from six real coordinates.
pub fn sl2_from_coords(c: &[f64]) -> Mat64 {
    let a = C64::new(c[0], c[1]);
    Mat64::m2(a, C64::new(c[2], c[3]), C64::new(c[4], c[5]), -a)
}

/// Ladder entries read from linear coordinates: with `g_- = sum G_n z^{-n}`,
/// `G_1 = -theta_1` and `G_2 = (theta_1^2 + theta_2)/2`. Returns `(B_1, B_2' = B_2/D_1)`.
pub fn ladders_from_theta(theta1: &Mat64, theta2: &Mat64) -> Result<(C64, C64)> {
    let g1 = theta1.scale_re(-1.0);
    let g2 = (&(theta1 * theta1) + theta2).scale_re(0.5);
    let d1 = g1[(1, 1)];
    if d1.norm() < crate::birkhoff::TOL_DIV {
        return Err(Error::DegenerateDn { index: 1 });
    }
    Ok((g1[(0, 1)], g2[(0, 1)] / d1))
}
