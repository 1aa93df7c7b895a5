//! Posterior predictive densities of price groups.

use serde::{Deserialize, Serialize};

use crate::model::{Likelihood, Predictive, PriceModel};
use crate::nuts::{nuts_sample, NutsConfig, PosteriorSamples};
use crate::PdfError;

/// Average of the per-draw observation densities on `grid`. The grid must
/// be sorted and reach six predictive standard deviations either side of
/// the predictive mean (or zero for positive-only likelihoods).
pub fn posterior_predictive(
    samples: &PosteriorSamples,
    model: &impl Predictive,
    grid: &[f64],
) -> Result<Vec<f64>, PdfError> {
    if samples.draws.is_empty() {
        return Err(PdfError::NoData);
    }
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PdfError::Grid("need at least two strictly increasing points".into()));
    }
    let (lo, hi) = predictive_range(samples, model);
    let (g0, g1) = (grid[0], grid[grid.len() - 1]);
    if g0 > lo || g1 < hi {
        return Err(PdfError::GridCoverage {
            lo: g0,
            hi: g1,
            need_lo: lo,
            need_hi: hi,
        });
    }
    let k = samples.draws.len() as f64;
    Ok(grid
        .iter()
        .map(|&y| samples.draws.iter().map(|d| model.density(d, y)).sum::<f64>() / k)
        .collect())
}

/// Mean and standard deviation of the predictive mixture.
fn predictive_moments(samples: &PosteriorSamples, model: &impl Predictive) -> (f64, f64) {
    let k = samples.draws.len() as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for d in &samples.draws {
        let (m, v) = model.moments(d);
        m1 += m / k;
        m2 += (v + m * m) / k;
    }
    (m1, (m2 - m1 * m1).max(0.0).sqrt())
}

/// Predictive mean +- 6 standard deviations, cut at the support.
fn predictive_range(samples: &PosteriorSamples, model: &impl Predictive) -> (f64, f64) {
    let (m1, sd) = predictive_moments(samples, model);
    ((m1 - 6.0 * sd).max(model.support_lower()), m1 + 6.0 * sd)
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1]))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub likelihood: Likelihood,
    pub nuts: NutsConfig,
    pub grid_points: usize,
    /// Report `P(price < t)` and `P(price > t)` for each.
    pub thresholds: Vec<f64>,
    pub min_group: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            likelihood: Likelihood::Normal,
            nuts: NutsConfig::default(),
            grid_points: 401,
            thresholds: Vec::new(),
            min_group: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub below: f64,
    pub above: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPdf {
    pub name: String,
    pub observations: Vec<f64>,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub predictive_mean: f64,
    pub predictive_std: f64,
    pub thresholds: Vec<Threshold>,
    pub step_size: f64,
    pub divergences: usize,
    pub mean_accept: f64,
}

/// Fits one price model per group. Group `i` samples with seed
/// `cfg.nuts.seed + i`.
pub fn fit_price_pdfs(groups: &[(String, Vec<f64>)], cfg: &FitConfig) -> Result<Vec<GroupPdf>, PdfError> {
    groups
        .iter()
        .enumerate()
        .map(|(i, (name, prices))| {
            if prices.len() < cfg.min_group {
                return Err(PdfError::GroupTooSmall {
                    name: name.clone(),
                    n: prices.len(),
                    min: cfg.min_group,
                });
            }
            let model = PriceModel::new(cfg.likelihood, prices)?;
            let nuts = NutsConfig {
                seed: cfg.nuts.seed.wrapping_add(i as u64),
                ..cfg.nuts.clone()
            };
            let samples = nuts_sample(&model, &model.initial(), &nuts)?;
            let (mean, std) = predictive_moments(&samples, &model);
            let (lo, hi) = (mean - 6.0 * std, mean + 6.0 * std);
            // Pad the 6-sd window a little; positive models start at zero.
            let pad = 0.5 * std;
            let lo = match cfg.likelihood {
                Likelihood::LogNormal => 0.0,
                Likelihood::Normal => lo - pad,
            };
            let hi = match cfg.likelihood {
                // Log-normal tails are long; reach further out.
                Likelihood::LogNormal => hi + 6.0 * std,
                Likelihood::Normal => hi + pad,
            };
            let n = cfg.grid_points.max(2);
            let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
            let density = posterior_predictive(&samples, &model, &grid)?;
            let k = samples.draws.len() as f64;
            let thresholds = cfg
                .thresholds
                .iter()
                .map(|&t| {
                    let below = samples.draws.iter().map(|d| model.cdf(d, t)).sum::<f64>() / k;
                    Threshold {
                        value: t,
                        below,
                        above: 1.0 - below,
                    }
                })
                .collect();
            Ok(GroupPdf {
                name: name.clone(),
                observations: prices.clone(),
                grid,
                density,
                predictive_mean: mean,
                predictive_std: std,
                thresholds,
                step_size: samples.step_size,
                divergences: samples.divergences,
                mean_accept: samples.mean_accept,
            })
        })
        .collect()
}
