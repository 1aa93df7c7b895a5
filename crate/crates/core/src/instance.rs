//! Problem data: network, hydro cascade, units, bid bounds and scenarios.
//!
//! Hydro stations are indexed by their position in `hydro_plants`, strategic
//! and non-strategic alike. Fields that only exist for strategic stations
//! (ID prices, ID limits) are indexed by strategic ordinal, i.e. the position
//! among the strategic plants in `hydro_plants` order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid cascade: {0}")]
    Cascade(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub ntc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub node_count: usize,
    pub lines: Vec<Line>,
}

impl NetworkTopology {
    /// Injection sign of line `l` at node `n`: +1 at the receiving end, -1 at
    /// the sending end.
    pub fn incidence(&self, l: usize, n: usize) -> f64 {
        let line = &self.lines[l];
        if line.to == n {
            1.0
        } else if line.from == n {
            -1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// MWh per m3.
    pub prod_equiv: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroPlant {
    pub name: String,
    pub node: usize,
    pub segments: Vec<Segment>,
    pub m_min: f64,
    pub m_max: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub max_power: f64,
    pub droop: f64,
    pub strategic: bool,
    /// Release assumed for periods before the horizon when delays reach back.
    #[serde(default)]
    pub historical_release: f64,
    /// Explicit ID volume cap (strategic only); falls back to
    /// `id_volume_fraction * max_power`.
    #[serde(default)]
    pub id_limit: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub upstream: usize,
    pub downstream: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CascadeSpec {
    stations: usize,
    #[serde(default)]
    links: Vec<Link>,
    #[serde(default)]
    delays: Vec<usize>,
}

/// Upstream relation, delays and the downstream-path closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CascadeSpec", into = "CascadeSpec")]
pub struct HydroCascade {
    links: Vec<Link>,
    /// `upstream[n][j]`: j releases directly into n.
    upstream: Vec<Vec<bool>>,
    /// `downstream[n][j]`: j is on the path below n, n included.
    downstream: Vec<Vec<bool>>,
    delays: Vec<usize>,
}

impl HydroCascade {
    pub fn new(stations: usize, links: Vec<Link>, delays: Vec<usize>) -> Result<Self, InstanceError> {
        let delays = if delays.is_empty() { vec![0; stations] } else { delays };
        if delays.len() != stations {
            return Err(InstanceError::Dimension(format!(
                "cascade has {stations} stations but {} delays",
                delays.len()
            )));
        }
        let mut upstream = vec![vec![false; stations]; stations];
        for l in &links {
            if l.upstream >= stations || l.downstream >= stations {
                return Err(InstanceError::Cascade(format!(
                    "link {}->{} references an unknown station",
                    l.upstream, l.downstream
                )));
            }
            upstream[l.downstream][l.upstream] = true;
        }
        let downstream = closure(stations, &links);
        Ok(Self {
            links,
            upstream,
            downstream,
            delays,
        })
    }

    pub fn independent(stations: usize) -> Self {
        Self::new(stations, Vec::new(), Vec::new()).expect("no links")
    }

    pub fn stations(&self) -> usize {
        self.delays.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn is_upstream(&self, n: usize, j: usize) -> bool {
        self.upstream[n][j]
    }

    pub fn is_downstream(&self, n: usize, j: usize) -> bool {
        self.downstream[n][j]
    }

    pub fn delay(&self, j: usize) -> usize {
        self.delays[j]
    }

    /// Stations releasing directly into `n`.
    pub fn upstream_of(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.upstream[n].iter().enumerate().filter(|(_, &u)| u).map(|(j, _)| j)
    }

    /// Station-wise factor sum_j A^D_nj mu_j used by the water value.
    pub fn downstream_weights(&self, future_prod_equiv: &[f64]) -> Vec<f64> {
        self.downstream
            .iter()
            .map(|row| {
                row.iter()
                    .zip(future_prod_equiv)
                    .filter(|(&d, _)| d)
                    .map(|(_, &mu)| mu)
                    .sum()
            })
            .collect()
    }

    /// Stations that sit on a directed cycle of the link relation.
    pub fn cyclic_stations(&self) -> Vec<usize> {
        let n = self.stations();
        let mut reach = vec![vec![false; n]; n];
        for l in &self.links {
            reach[l.upstream][l.downstream] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        (0..n).filter(|&i| reach[i][i]).collect()
    }
}

fn closure(stations: usize, links: &[Link]) -> Vec<Vec<bool>> {
    let mut d = vec![vec![false; stations]; stations];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = true;
    }
    for l in links {
        if l.upstream < stations && l.downstream < stations {
            d[l.upstream][l.downstream] = true;
        }
    }
    // Warshall; a cycle simply makes its members mutually reachable.
    for k in 0..stations {
        for i in 0..stations {
            if d[i][k] {
                for j in 0..stations {
                    if d[k][j] {
                        d[i][j] = true;
                    }
                }
            }
        }
    }
    d
}

impl TryFrom<CascadeSpec> for HydroCascade {
    type Error = InstanceError;
    fn try_from(s: CascadeSpec) -> Result<Self, Self::Error> {
        HydroCascade::new(s.stations, s.links, s.delays)
    }
}

impl From<HydroCascade> for CascadeSpec {
    fn from(c: HydroCascade) -> Self {
        CascadeSpec {
            stations: c.stations(),
            links: c.links,
            delays: c.delays,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalUnit {
    pub name: String,
    pub node: usize,
    pub max_power: f64,
    pub cost_da: f64,
    #[serde(default = "default_droop")]
    pub droop: f64,
}

fn default_droop() -> f64 {
    1.0
}

/// Bid price bounds indexed `[strategic ordinal][segment][period]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BidBoundsSpec")]
pub struct BidBounds {
    pub da_min: Vec<Vec<Vec<f64>>>,
    pub da_max: Vec<Vec<Vec<f64>>>,
    pub fc_min: Vec<Vec<Vec<f64>>>,
    pub fc_max: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum BidBoundsSpec {
    Full {
        da_min: Vec<Vec<Vec<f64>>>,
        da_max: Vec<Vec<Vec<f64>>>,
        fc_min: Vec<Vec<Vec<f64>>>,
        fc_max: Vec<Vec<Vec<f64>>>,
    },
    Uniform {
        strategic: usize,
        segments: usize,
        periods: usize,
        da: [f64; 2],
        fc: [f64; 2],
    },
}

impl TryFrom<BidBoundsSpec> for BidBounds {
    type Error = InstanceError;
    fn try_from(s: BidBoundsSpec) -> Result<Self, Self::Error> {
        Ok(match s {
            BidBoundsSpec::Full {
                da_min,
                da_max,
                fc_min,
                fc_max,
            } => BidBounds {
                da_min,
                da_max,
                fc_min,
                fc_max,
            },
            BidBoundsSpec::Uniform {
                strategic,
                segments,
                periods,
                da,
                fc,
            } => BidBounds::uniform(strategic, segments, periods, da, fc),
        })
    }
}

impl BidBounds {
    pub fn uniform(strategic: usize, segments: usize, periods: usize, da: [f64; 2], fc: [f64; 2]) -> Self {
        let fill = |v: f64| vec![vec![vec![v; periods]; segments]; strategic];
        Self {
            da_min: fill(da[0]),
            da_max: fill(da[1]),
            fc_min: fill(fc[0]),
            fc_max: fill(fc[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub probability: f64,
    /// `[station][period]`, m3.
    pub inflow: Vec<Vec<f64>>,
    /// `[station]`, m3.
    pub initial_content: Vec<f64>,
    /// `[node][period]`, MWh.
    pub demand_da: Vec<Vec<f64>>,
    /// `[period]`, MW.
    pub demand_fc: Vec<f64>,
    /// FCR-N cost of non-strategic hydro, `[station][period]`; rows of
    /// strategic stations are ignored and may be empty.
    pub cost_fc_hydro: Vec<Vec<f64>>,
    /// `[thermal unit][period]`.
    pub cost_fc_thermal: Vec<Vec<f64>>,
    /// `[strategic ordinal][period]`.
    pub id_price_up: Vec<Vec<f64>>,
    pub id_price_down: Vec<Vec<f64>>,
    pub future_price: f64,
    /// `[station]`, MWh per m3.
    pub future_prod_equiv: Vec<f64>,
    /// `[period]`, Hz.
    pub freq_dev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    pub name: String,
    pub topology: NetworkTopology,
    pub hydro_plants: Vec<HydroPlant>,
    pub cascade: HydroCascade,
    pub thermal_units: Vec<ThermalUnit>,
    pub bid_bounds: BidBounds,
    pub horizon: usize,
    pub segments: usize,
    #[serde(default = "default_id_fraction")]
    pub id_volume_fraction: f64,
    /// Price of unserved DA energy; `None` means demand is hard.
    #[serde(default)]
    pub da_price_cap: Option<f64>,
    /// Price of unserved FCR-N capacity; `None` means the requirement is hard.
    #[serde(default)]
    pub fc_price_cap: Option<f64>,
}

fn default_id_fraction() -> f64 {
    0.05
}

/// Instance plus scenario set, the unit of a case file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseData {
    pub instance: MarketInstance,
    pub scenarios: Vec<Scenario>,
}

impl CaseData {
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl MarketInstance {
    pub fn strategic(&self) -> Vec<usize> {
        (0..self.hydro_plants.len())
            .filter(|&h| self.hydro_plants[h].strategic)
            .collect()
    }

    pub fn non_strategic(&self) -> Vec<usize> {
        (0..self.hydro_plants.len())
            .filter(|&h| !self.hydro_plants[h].strategic)
            .collect()
    }

    pub fn id_limit(&self, station: usize) -> f64 {
        let p = &self.hydro_plants[station];
        p.id_limit.unwrap_or(self.id_volume_fraction * p.max_power)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn check(&mut self, ok: bool, field: impl Into<String>, rule: &str) {
        if !ok {
            self.0.push(Violation {
                field: field.into(),
                rule: rule.to_string(),
            });
        }
    }
}

pub fn validate_instance(inst: &MarketInstance) -> Vec<Violation> {
    let mut c = Collector(Vec::new());
    let nodes = inst.topology.node_count;
    c.check(nodes > 0, "topology.node_count", "at least one node");
    for (l, line) in inst.topology.lines.iter().enumerate() {
        let f = format!("topology.lines[{l}]");
        c.check(
            line.from < nodes && line.to < nodes,
            &f,
            "endpoints must be valid nodes",
        );
        c.check(line.from != line.to, &f, "endpoints must differ");
        c.check(line.ntc >= 0.0, format!("{f}.ntc"), "must be >= 0");
    }
    for (h, p) in inst.hydro_plants.iter().enumerate() {
        let f = format!("hydro_plants[{h}]");
        c.check(p.node < nodes, format!("{f}.node"), "must be a valid node");
        c.check(!p.segments.is_empty(), format!("{f}.segments"), "at least one segment");
        for (k, s) in p.segments.iter().enumerate() {
            let fs = format!("{f}.segments[{k}]");
            c.check(s.q_min <= s.q_max, &fs, "q_min <= q_max");
            c.check(s.prod_equiv > 0.0, format!("{fs}.prod_equiv"), "must be > 0");
        }
        c.check(p.m_min <= p.m_max, &f, "m_min <= m_max");
        c.check(p.s_min <= p.s_max, &f, "s_min <= s_max");
        c.check(p.droop > 0.0, format!("{f}.droop"), "must be > 0");
        c.check(p.max_power > 0.0, format!("{f}.max_power"), "must be > 0");
    }
    for (i, u) in inst.thermal_units.iter().enumerate() {
        let f = format!("thermal_units[{i}]");
        c.check(u.node < nodes, format!("{f}.node"), "must be a valid node");
        c.check(u.cost_da >= 0.0, format!("{f}.cost_da"), "must be >= 0");
        c.check(u.max_power > 0.0, format!("{f}.max_power"), "must be > 0");
        c.check(u.droop > 0.0, format!("{f}.droop"), "must be > 0");
    }
    c.check(
        inst.cascade.stations() == inst.hydro_plants.len(),
        "cascade",
        "station count must equal hydro plant count",
    );
    if !inst.cascade.cyclic_stations().is_empty() {
        c.check(false, "cascade.links", "upstream relation must be acyclic");
    }
    let st = inst.strategic().len();
    c.check(inst.horizon > 0, "horizon", "at least one period");
    c.check(inst.segments > 0, "segments", "at least one bid segment");
    let b = &inst.bid_bounds;
    for (name, lo, hi) in [("da", &b.da_min, &b.da_max), ("fc", &b.fc_min, &b.fc_max)] {
        let dims_ok = |v: &Vec<Vec<Vec<f64>>>| {
            v.len() == st
                && v.iter()
                    .all(|s| s.len() == inst.segments && s.iter().all(|t| t.len() == inst.horizon))
        };
        if !dims_ok(lo) || !dims_ok(hi) {
            c.check(
                false,
                format!("bid_bounds.{name}"),
                "dimensions must be [strategic][segments][horizon]",
            );
            continue;
        }
        for n in 0..st {
            for s in 0..inst.segments {
                for t in 0..inst.horizon {
                    c.check(
                        lo[n][s][t] <= hi[n][s][t],
                        format!("bid_bounds.{name}[{n}][{s}][{t}]"),
                        "min <= max",
                    );
                }
            }
        }
    }
    c.check(
        (0.0..=1.0).contains(&inst.id_volume_fraction),
        "id_volume_fraction",
        "must lie in [0, 1]",
    );
    for (name, cap) in [("da_price_cap", inst.da_price_cap), ("fc_price_cap", inst.fc_price_cap)] {
        if let Some(v) = cap {
            c.check(v.is_finite() && v >= 0.0, name, "must be finite and >= 0");
        }
    }
    c.0
}

/// Checks a scenario set against an instance, including sum of probabilities.
pub fn validate_scenarios(inst: &MarketInstance, scenarios: &[Scenario]) -> Vec<Violation> {
    let mut c = Collector(Vec::new());
    c.check(!scenarios.is_empty(), "scenarios", "at least one scenario");
    for (w, s) in scenarios.iter().enumerate() {
        check_scenario(&mut c, inst, s, &format!("scenarios[{w}]"));
    }
    let total: f64 = scenarios.iter().map(|s| s.probability).sum();
    if !scenarios.is_empty() {
        c.check((total - 1.0).abs() <= 1e-9, "scenarios.probability", "must sum to 1");
    }
    c.0
}

/// Dimension and sign checks of a single scenario.
pub fn validate_scenario(inst: &MarketInstance, s: &Scenario) -> Vec<Violation> {
    let mut c = Collector(Vec::new());
    check_scenario(&mut c, inst, s, "scenario");
    c.0
}

fn check_scenario(c: &mut Collector, inst: &MarketInstance, s: &Scenario, f: &str) {
    let nt = inst.horizon;
    let nh = inst.hydro_plants.len();
    let st = inst.strategic().len();
    let grid = |v: &Vec<Vec<f64>>, rows: usize| v.len() == rows && v.iter().all(|r| r.len() == nt);
    {
        c.check(
            (0.0..=1.0).contains(&s.probability),
            format!("{f}.probability"),
            "must lie in [0, 1]",
        );
        c.check(
            grid(&s.inflow, nh),
            format!("{f}.inflow"),
            "dimensions [station][period]",
        );
        c.check(
            s.initial_content.len() == nh,
            format!("{f}.initial_content"),
            "one per station",
        );
        c.check(
            grid(&s.demand_da, inst.topology.node_count),
            format!("{f}.demand_da"),
            "dimensions [node][period]",
        );
        c.check(s.demand_fc.len() == nt, format!("{f}.demand_fc"), "one per period");
        c.check(
            s.cost_fc_hydro.len() == nh
                && s.cost_fc_hydro
                    .iter()
                    .zip(&inst.hydro_plants)
                    .all(|(r, p)| p.strategic || r.len() == nt),
            format!("{f}.cost_fc_hydro"),
            "dimensions [station][period] for non-strategic stations",
        );
        c.check(
            grid(&s.cost_fc_thermal, inst.thermal_units.len()),
            format!("{f}.cost_fc_thermal"),
            "dimensions [thermal][period]",
        );
        c.check(
            grid(&s.id_price_up, st),
            format!("{f}.id_price_up"),
            "dimensions [strategic][period]",
        );
        c.check(
            grid(&s.id_price_down, st),
            format!("{f}.id_price_down"),
            "dimensions [strategic][period]",
        );
        c.check(
            s.future_prod_equiv.len() == nh,
            format!("{f}.future_prod_equiv"),
            "one per station",
        );
        c.check(s.freq_dev.len() == nt, format!("{f}.freq_dev"), "one per period");
        let nonneg = s.demand_da.iter().flatten().chain(&s.demand_fc).all(|&d| d >= 0.0);
        c.check(nonneg, format!("{f}.demand"), "demands must be >= 0");
    }
}

/// lambda^F * sum_n m_n * sum_j A^D_nj mu_j over the given stations' contents.
pub fn water_value(
    final_content: &[f64],
    cascade: &HydroCascade,
    future_price: f64,
    future_prod_equiv: &[f64],
) -> Result<f64, InstanceError> {
    let n = cascade.stations();
    if final_content.len() != n || future_prod_equiv.len() != n {
        return Err(InstanceError::Dimension(format!(
            "cascade has {n} stations, got {} contents and {} production equivalents",
            final_content.len(),
            future_prod_equiv.len()
        )));
    }
    let w = cascade.downstream_weights(future_prod_equiv);
    Ok(future_price * final_content.iter().zip(&w).map(|(m, k)| m * k).sum::<f64>())
}

/// FCR-N obligation 2 * Pmax * df / droop.
pub fn fcrn_requirement(max_power: f64, freq_dev: f64, droop: f64) -> Result<f64, InstanceError> {
    if droop == 0.0 {
        return Err(InstanceError::Dimension("droop must be nonzero".into()));
    }
    Ok(2.0 * max_power * freq_dev / droop)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> HydroCascade {
        HydroCascade::new(
            2,
            vec![Link {
                upstream: 0,
                downstream: 1,
            }],
            vec![0, 0],
        )
        .unwrap()
    }

    #[test]
    fn closure_is_reflexive_and_transitive() {
        let c = HydroCascade::new(
            3,
            vec![
                Link {
                    upstream: 0,
                    downstream: 1,
                },
                Link {
                    upstream: 1,
                    downstream: 2,
                },
            ],
            vec![],
        )
        .unwrap();
        assert!(c.is_downstream(0, 0));
        assert!(c.is_downstream(0, 2));
        assert!(!c.is_downstream(2, 0));
        assert!(c.is_upstream(1, 0));
        assert_eq!(c.upstream_of(2).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn water_value_examples() {
        let single = HydroCascade::independent(1);
        assert_eq!(water_value(&[0.0], &single, 26.0, &[0.9]).unwrap(), 0.0);
        assert!((water_value(&[300.0], &single, 26.0, &[0.9]).unwrap() - 7020.0).abs() < 1e-9);
        let v = water_value(&[10.0, 0.0], &chain(), 10.0, &[0.9, 0.9]).unwrap();
        assert!((v - 180.0).abs() < 1e-9);
        assert!(water_value(&[1.0], &chain(), 1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn water_value_is_linear() {
        let c = chain();
        let m = [12.0, 7.0];
        let mu = [0.8, 0.5];
        let base = water_value(&m, &c, 3.0, &mu).unwrap();
        let scaled_m = water_value(&[24.0, 14.0], &c, 3.0, &mu).unwrap();
        let scaled_p = water_value(&m, &c, 6.0, &mu).unwrap();
        assert!((scaled_m - 2.0 * base).abs() < 1e-9);
        assert!((scaled_p - 2.0 * base).abs() < 1e-9);
    }

    #[test]
    fn requirement_examples() {
        assert_eq!(fcrn_requirement(100.0, 0.0, 4.0).unwrap(), 0.0);
        assert!((fcrn_requirement(100.0, 0.1, 4.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((fcrn_requirement(50.0, 0.2, 0.5).unwrap() - 40.0).abs() < 1e-12);
        assert!(fcrn_requirement(50.0, 0.2, 0.0).is_err());
    }

    #[test]
    fn cycle_detected() {
        let c = HydroCascade::new(
            2,
            vec![
                Link {
                    upstream: 0,
                    downstream: 1,
                },
                Link {
                    upstream: 1,
                    downstream: 0,
                },
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(c.cyclic_stations(), vec![0, 1]);
    }
}
