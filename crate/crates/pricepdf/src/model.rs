//! Targets for the sampler.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, LogNormal, Normal};

use crate::PdfError;

/// Unnormalized log density with gradient on an unconstrained space.
pub trait LogDensity {
    fn dim(&self) -> usize;
    /// Writes the gradient into `grad` and returns the log density.
    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;
}

/// Per-draw observation density, for posterior predictive averaging.
pub trait Predictive {
    fn density(&self, theta: &[f64], y: f64) -> f64;
    fn cdf(&self, theta: &[f64], y: f64) -> f64;
    /// Mean and variance of an observation given `theta`.
    fn moments(&self, theta: &[f64]) -> (f64, f64);
    fn support_lower(&self) -> f64 {
        f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StandardNormal {
    pub dim: usize,
}

impl LogDensity for StandardNormal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        for (g, t) in grad.iter_mut().zip(theta) {
            *g = -t;
        }
        -0.5 * theta.iter().map(|t| t * t).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Likelihood {
    Normal,
    /// Normal on log prices.
    LogNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Prior {
    Flat,
    /// Normal on the location, half-normal on the scale.
    Weak {
        loc_mean: f64,
        loc_std: f64,
        scale_std: f64,
    },
}

/// Price observations with parameters `(location, log scale)`. The
/// effective scale is `sqrt(exp(2 * log_scale) + floor^2)`, which keeps the
/// posterior proper when a group's prices are all equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    pub likelihood: Likelihood,
    /// Observations on the modelled scale (logs for `LogNormal`).
    pub data: Vec<f64>,
    pub prior: Prior,
    pub scale_floor: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

impl PriceModel {
    /// Weakly informative prior centred on the data: location std and
    /// half-normal scale both ten times the data spread.
    pub fn new(likelihood: Likelihood, prices: &[f64]) -> Result<Self, PdfError> {
        let mut m = Self::with_prior(likelihood, prices, Prior::Flat, 0.0)?;
        let (mean, sd) = mean_std(&m.data);
        let floor = 1e-3 * (1.0 + mean.abs());
        let spread = sd.max(floor);
        m.scale_floor = floor;
        m.prior = Prior::Weak {
            loc_mean: mean,
            loc_std: 10.0 * spread,
            scale_std: 10.0 * spread,
        };
        Ok(m)
    }

    pub fn with_prior(
        likelihood: Likelihood,
        prices: &[f64],
        prior: Prior,
        scale_floor: f64,
    ) -> Result<Self, PdfError> {
        if prices.is_empty() {
            return Err(PdfError::NoData);
        }
        let data = match likelihood {
            Likelihood::Normal => prices.to_vec(),
            Likelihood::LogNormal => {
                if prices.iter().any(|&p| p <= 0.0) {
                    return Err(PdfError::NonPositive);
                }
                prices.iter().map(|p| p.ln()).collect()
            }
        };
        Ok(Self {
            likelihood,
            data,
            prior,
            scale_floor,
        })
    }

    /// A reasonable chain start: data mean and spread.
    pub fn initial(&self) -> Vec<f64> {
        let (m, sd) = mean_std(&self.data);
        vec![m, sd.max(1e-3 * (1.0 + m.abs())).ln()]
    }

    pub fn scale(&self, log_scale: f64) -> f64 {
        ((2.0 * log_scale).exp() + self.scale_floor * self.scale_floor).sqrt()
    }
}

impl LogDensity for PriceModel {
    fn dim(&self) -> usize {
        2
    }

    fn log_density_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (mu, eta) = (theta[0], theta[1]);
        let e2 = (2.0 * eta).exp();
        let s = self.scale(eta);
        let n = self.data.len() as f64;
        let (mut sum_r, mut sum_r2) = (0.0, 0.0);
        for &y in &self.data {
            sum_r += y - mu;
            sum_r2 += (y - mu).powi(2);
        }
        let mut lp = -n * s.ln() - sum_r2 / (2.0 * s * s);
        grad[0] = sum_r / (s * s);
        // d/d eta through s: ds/deta = e2 / s.
        grad[1] = (-n / s + sum_r2 / (s * s * s)) * e2 / s;
        if let Prior::Weak {
            loc_mean,
            loc_std,
            scale_std,
        } = self.prior
        {
            lp += -(mu - loc_mean).powi(2) / (2.0 * loc_std * loc_std);
            grad[0] -= (mu - loc_mean) / (loc_std * loc_std);
            // Half-normal on exp(eta), plus the log Jacobian eta.
            lp += -e2 / (2.0 * scale_std * scale_std) + eta;
            grad[1] += -e2 / (scale_std * scale_std) + 1.0;
        }
        lp
    }
}

impl Predictive for PriceModel {
    fn density(&self, theta: &[f64], y: f64) -> f64 {
        let s = self.scale(theta[1]);
        match self.likelihood {
            Likelihood::Normal => Normal::new(theta[0], s).map_or(0.0, |d| d.pdf(y)),
            Likelihood::LogNormal if y > 0.0 => LogNormal::new(theta[0], s).map_or(0.0, |d| d.pdf(y)),
            Likelihood::LogNormal => 0.0,
        }
    }

    fn cdf(&self, theta: &[f64], y: f64) -> f64 {
        let s = self.scale(theta[1]);
        match self.likelihood {
            Likelihood::Normal => Normal::new(theta[0], s).map_or(0.0, |d| d.cdf(y)),
            Likelihood::LogNormal if y > 0.0 => LogNormal::new(theta[0], s).map_or(0.0, |d| d.cdf(y)),
            Likelihood::LogNormal => 0.0,
        }
    }

    fn moments(&self, theta: &[f64]) -> (f64, f64) {
        let (m, s) = (theta[0], self.scale(theta[1]));
        match self.likelihood {
            Likelihood::Normal => (m, s * s),
            Likelihood::LogNormal => {
                let mean = (m + 0.5 * s * s).exp();
                (mean, ((s * s).exp() - 1.0) * mean * mean)
            }
        }
    }

    fn support_lower(&self) -> f64 {
        match self.likelihood {
            Likelihood::Normal => f64::NEG_INFINITY,
            Likelihood::LogNormal => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_zero_at_truth() {
        // Symmetric zero-mean data with unit spread: flat-prior stationary point at (0, 0).
        let m = PriceModel::with_prior(Likelihood::Normal, &[-1.0, 1.0], Prior::Flat, 0.0).unwrap();
        let mut g = [0.0; 2];
        m.log_density_grad(&[0.0, 0.0], &mut g);
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12, "{g:?}");
    }

    #[test]
    fn single_datum_location_gradient() {
        let m = PriceModel::with_prior(Likelihood::Normal, &[3.0], Prior::Flat, 0.0).unwrap();
        let mut g = [0.0; 2];
        let sigma: f64 = 2.0;
        m.log_density_grad(&[1.0, sigma.ln()], &mut g);
        assert!((g[0] - (3.0 - 1.0) / (sigma * sigma)).abs() < 1e-12);
    }

    #[test]
    fn lognormal_needs_positive_prices() {
        assert!(matches!(
            PriceModel::new(Likelihood::LogNormal, &[1.0, 0.0]),
            Err(PdfError::NonPositive)
        ));
        assert!(matches!(
            PriceModel::new(Likelihood::Normal, &[]),
            Err(PdfError::NoData)
        ));
    }
}
