//! Affine map from DA to ID prices, fitted separately for up- and
//! down-regulation prices.

use serde::{Deserialize, Serialize};

use crate::history::MarketHistory;
use crate::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub slope: f64,
    pub intercept: f64,
    /// Standard deviation of the fit residuals (n - 2 denominator).
    pub residual_std: f64,
}

impl Affine {
    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// Ordinary least squares of `y` on `x`.
    pub fn fit(x: &[f64], y: &[f64]) -> Result<Self, ScenarioError> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(ScenarioError::Degenerate(format!(
                "need at least 2 paired points, got {}",
                x.len().min(y.len())
            )));
        }
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        if sxx <= 1e-12 * (1.0 + mx * mx) * n {
            return Err(ScenarioError::Degenerate("DA prices are constant".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
        let residual_std = if x.len() > 2 { (ssr / (n - 2.0)).sqrt() } else { 0.0 };
        Ok(Self {
            slope,
            intercept,
            residual_std,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdDaRelation {
    pub up: Affine,
    pub down: Affine,
}

pub fn fit_id_da_relation(history: &MarketHistory) -> Result<IdDaRelation, ScenarioError> {
    let da: Vec<f64> = history.records.iter().map(|r| r.da_price).collect();
    let up: Vec<f64> = history.records.iter().map(|r| r.id_up_price).collect();
    let down: Vec<f64> = history.records.iter().map(|r| r.id_down_price).collect();
    Ok(IdDaRelation {
        up: Affine::fit(&da, &up)?,
        down: Affine::fit(&da, &down)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let x: Vec<f64> = (0..10).map(|i| 20.0 + 3.0 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.1 * v + 2.0).collect();
        let f = Affine::fit(&x, &y).unwrap();
        assert!((f.slope - 1.1).abs() < 1e-12);
        assert!((f.intercept - 2.0).abs() < 1e-10);
        assert!(f.residual_std < 1e-10);
    }

    #[test]
    fn constant_prices_rejected() {
        assert!(matches!(
            Affine::fit(&[5.0; 4], &[1.0, 2.0, 3.0, 4.0]),
            Err(ScenarioError::Degenerate(_))
        ));
        assert!(Affine::fit(&[1.0], &[1.0]).is_err());
    }
}
