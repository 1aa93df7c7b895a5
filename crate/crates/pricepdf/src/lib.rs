//! Bayesian price densities: a two-parameter price model, a No-U-Turn
//! sampler with dual-averaging step size, and posterior predictive
//! densities per group of cleared prices.

pub mod model;
pub mod nuts;
pub mod ppd;

pub use model::{Likelihood, LogDensity, Predictive, PriceModel, Prior, StandardNormal};
pub use nuts::{build_tree, find_reasonable_epsilon, leapfrog, nuts_sample, NutsConfig, PosteriorSamples, Tree};
pub use ppd::{fit_price_pdfs, posterior_predictive, trapezoid, FitConfig, GroupPdf, Threshold};

#[derive(Debug, thiserror::Error)]
pub enum PdfError {
    #[error("log-normal data must be positive")]
    NonPositive,
    #[error("no data")]
    NoData,
    #[error("group {name:?} has {n} observations, need at least {min}")]
    GroupTooSmall { name: String, n: usize, min: usize },
    #[error("invalid sampler settings: {0}")]
    Settings(String),
    #[error("every warmup iteration diverged (final step size {step_size:e}, {divergences} divergences)")]
    AllDivergent { step_size: f64, divergences: usize },
    #[error("grid [{lo}, {hi}] does not cover the predictive support [{need_lo}, {need_hi}]")]
    GridCoverage {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },
    #[error("invalid grid: {0}")]
    Grid(String),
}
