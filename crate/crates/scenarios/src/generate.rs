//! Whole-day block bootstrap of historical data into scenarios.

use chrono::NaiveDate;
use hydrobid::{MarketInstance, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::history::MarketHistory;
use crate::relation::{Affine, IdDaRelation};
use crate::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub horizon: usize,
    /// Residuals are clamped to this many standard deviations.
    pub residual_clip: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            horizon: 24,
            residual_clip: 6.0,
        }
    }
}

/// One sampled day, in history units. Vectors are `[period]` unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDraw {
    pub probability: f64,
    pub date: NaiveDate,
    pub da_price: Vec<f64>,
    pub id_up_price: Vec<f64>,
    pub id_down_price: Vec<f64>,
    pub fc_price: Vec<f64>,
    pub fc_demand: Vec<f64>,
    pub da_demand: Vec<f64>,
    /// `[station][period]`
    pub inflow: Vec<Vec<f64>>,
    /// `[station]`, content at the first period of the day.
    pub initial_content: Vec<f64>,
    /// Mean DA price of the day.
    pub future_price: f64,
}

/// `nw` equiprobable scenarios. Scenario `w` draws from its own stream of a
/// ChaCha generator seeded with `seed`, so a scenario does not depend on how
/// many others are drawn.
pub fn generate_scenarios(
    history: &MarketHistory,
    relation: &IdDaRelation,
    nw: usize,
    seed: u64,
    config: &ScenarioConfig,
) -> Result<Vec<ScenarioDraw>, ScenarioError> {
    if nw == 0 {
        return Err(ScenarioError::Invalid("scenario count must be at least 1".into()));
    }
    let days = history.days(config.horizon);
    if days.is_empty() {
        return Err(ScenarioError::TooShort(config.horizon));
    }
    let noise = |a: &Affine| Normal::new(0.0, a.residual_std).map_err(|e| ScenarioError::Invalid(e.to_string()));
    let (nu, nd) = (noise(&relation.up)?, noise(&relation.down)?);
    let clip = |a: &Affine, e: f64| {
        e.clamp(
            -config.residual_clip * a.residual_std,
            config.residual_clip * a.residual_std,
        )
    };

    let mut out = Vec::with_capacity(nw);
    for w in 0..nw {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(w as u64);
        let day = &days[rng.gen_range(0..days.len() as u64) as usize];
        let recs = day.records;
        let da_price: Vec<f64> = recs.iter().map(|r| r.da_price).collect();
        let mut id_up_price = Vec::with_capacity(recs.len());
        let mut id_down_price = Vec::with_capacity(recs.len());
        for &p in &da_price {
            id_up_price.push(relation.up.apply(p) + clip(&relation.up, nu.sample(&mut rng)));
            id_down_price.push(relation.down.apply(p) + clip(&relation.down, nd.sample(&mut rng)));
        }
        out.push(ScenarioDraw {
            probability: 1.0 / nw as f64,
            date: day.date,
            future_price: da_price.iter().sum::<f64>() / da_price.len() as f64,
            da_price,
            id_up_price,
            id_down_price,
            fc_price: recs.iter().map(|r| r.fc_price).collect(),
            fc_demand: recs.iter().map(|r| r.fc_demand).collect(),
            da_demand: recs.iter().map(|r| r.da_demand).collect(),
            inflow: (0..history.stations.len())
                .map(|h| recs.iter().map(|r| r.inflow[h]).collect())
                .collect(),
            initial_content: recs[0].content.clone(),
        });
    }
    // Make the probabilities sum to one exactly.
    let rest: f64 = out[..nw - 1].iter().map(|s| s.probability).sum();
    out[nw - 1].probability = 1.0 - rest;
    Ok(out)
}

/// How history-level quantities map onto a model instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMapping {
    /// Share of the DA demand at each node, `[node]`.
    pub demand_share: Vec<f64>,
    pub demand_scale: f64,
    pub fc_demand_scale: f64,
    /// Competitor FCR-N cost as a multiple of the historical FCR-N price.
    pub fc_cost_factor_hydro: Vec<f64>,
    pub fc_cost_factor_thermal: Vec<f64>,
    pub future_prod_equiv: Vec<f64>,
    pub freq_dev: f64,
}

impl ScenarioDraw {
    pub fn to_scenario(&self, inst: &MarketInstance, map: &ScenarioMapping) -> Result<Scenario, ScenarioError> {
        let nt = inst.horizon;
        let nh = inst.hydro_plants.len();
        if self.da_price.len() < nt {
            return Err(ScenarioError::TooShort(nt));
        }
        if self.inflow.len() != nh || map.future_prod_equiv.len() != nh || map.fc_cost_factor_hydro.len() != nh {
            return Err(ScenarioError::Invalid(format!("instance has {nh} stations")));
        }
        if map.demand_share.len() != inst.topology.node_count
            || map.fc_cost_factor_thermal.len() != inst.thermal_units.len()
        {
            return Err(ScenarioError::Invalid("mapping does not match the network".into()));
        }
        let share_sum: f64 = map.demand_share.iter().sum();
        if share_sum <= 0.0 {
            return Err(ScenarioError::Invalid("demand shares sum to zero".into()));
        }
        let head = |v: &[f64]| v[..nt].to_vec();
        let scaled = |v: &[f64], k: f64| v[..nt].iter().map(|x| x * k).collect::<Vec<_>>();
        let fc_cost = |k: f64| scaled(&self.fc_price, k);
        let strategic = inst.strategic().len();
        Ok(Scenario {
            probability: self.probability,
            inflow: self.inflow.iter().map(|v| head(v)).collect(),
            initial_content: self.initial_content.clone(),
            demand_da: map
                .demand_share
                .iter()
                .map(|s| scaled(&self.da_demand, map.demand_scale * s / share_sum))
                .collect(),
            demand_fc: scaled(&self.fc_demand, map.fc_demand_scale),
            cost_fc_hydro: inst
                .hydro_plants
                .iter()
                .zip(&map.fc_cost_factor_hydro)
                .map(|(p, &k)| if p.strategic { Vec::new() } else { fc_cost(k) })
                .collect(),
            cost_fc_thermal: map.fc_cost_factor_thermal.iter().map(|&k| fc_cost(k)).collect(),
            id_price_up: vec![head(&self.id_up_price); strategic],
            id_price_down: vec![head(&self.id_down_price); strategic],
            future_price: self.future_price,
            future_prod_equiv: map.future_prod_equiv.clone(),
            freq_dev: vec![map.freq_dev; nt],
        })
    }
}

/// ID volume limit of a unit: `fraction` of its period-average DA dispatch.
pub fn id_volume_limit(da_dispatch: &[f64], fraction: f64) -> Result<f64, ScenarioError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(ScenarioError::Invalid(format!("fraction {fraction} outside [0, 1]")));
    }
    if da_dispatch.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(ScenarioError::Invalid("negative or non-finite dispatch".into()));
    }
    if da_dispatch.is_empty() {
        return Ok(0.0);
    }
    Ok(fraction * da_dispatch.iter().sum::<f64>() / da_dispatch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_limit_arithmetic() {
        assert!((id_volume_limit(&[100.0], 0.05).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(id_volume_limit(&[100.0, 50.0], 0.0).unwrap(), 0.0);
        assert!((id_volume_limit(&[10.0, 20.0, 30.0], 0.1).unwrap() - 2.0).abs() < 1e-12);
        assert!(id_volume_limit(&[-1.0], 0.1).is_err());
        assert!(id_volume_limit(&[1.0], 1.5).is_err());
    }
}
