//! Builders for the small three-bus systems: strategic hydro at bus 0,
//! non-strategic hydro at bus 1, thermal at bus 2, lines 0-1 and 1-2.

use crate::instance::{
    BidBounds, CaseData, HydroCascade, HydroPlant, Line, Link, MarketInstance, NetworkTopology, Scenario, Segment,
    ThermalUnit,
};

#[derive(Debug, Clone)]
pub struct ThreeBus {
    pub name: String,
    pub periods: usize,
    pub segments: usize,
    /// `[node][period]`
    pub demand_da: Vec<Vec<f64>>,
    pub demand_fc: Vec<f64>,
    pub ntc: [f64; 2],
    pub st_max: f64,
    pub nst_max: f64,
    pub th_max: f64,
    pub th_cost_da: f64,
    pub th_cost_fc: f64,
    pub nst_cost_fc: f64,
    pub st_prod_equiv: f64,
    pub nst_prod_equiv: f64,
    pub st_q_max: f64,
    pub nst_q_max: f64,
    pub st_spill_max: f64,
    pub nst_spill_max: f64,
    pub m_max: f64,
    pub initial_content: [f64; 2],
    pub inflow: [f64; 2],
    /// Strategic station releases into the non-strategic one.
    pub cascade: bool,
    pub future_price: f64,
    pub future_prod_equiv: [f64; 2],
    pub id_limit: f64,
    /// `[period]`
    pub id_price_up: Vec<f64>,
    pub id_price_down: Vec<f64>,
    pub da_cap: f64,
    pub fc_cap: f64,
}

impl ThreeBus {
    /// One-period single-scenario market with the unit capacities and costs
    /// of the illustrative cases. The strategic station's stored water
    /// carries a token value so that idle water is preferred when revenue is
    /// otherwise equal.
    pub fn single_period(demand: [f64; 3], demand_fc: f64, ntc: [f64; 2]) -> Self {
        Self {
            name: "three_bus".into(),
            periods: 1,
            segments: 1,
            demand_da: demand.iter().map(|&d| vec![d]).collect(),
            demand_fc: vec![demand_fc],
            ntc,
            st_max: 100.0,
            nst_max: 50.0,
            th_max: 100.0,
            th_cost_da: 15.0,
            th_cost_fc: 30.0,
            nst_cost_fc: 20.0,
            st_prod_equiv: 1.0,
            nst_prod_equiv: 1.0,
            st_q_max: 100.0,
            nst_q_max: 50.0,
            st_spill_max: 0.0,
            nst_spill_max: 0.0,
            m_max: 1000.0,
            initial_content: [500.0, 500.0],
            inflow: [0.0, 0.0],
            cascade: false,
            future_price: 1.0,
            future_prod_equiv: [1e-3, 0.0],
            id_limit: 0.0,
            id_price_up: vec![0.0],
            id_price_down: vec![0.0],
            da_cap: 200.0,
            fc_cap: 100.0,
        }
    }

    pub fn build(&self) -> CaseData {
        let nt = self.periods;
        let hydro = |name: &str, node: usize, pmax: f64, mu: f64, qmax: f64, smax: f64, strategic: bool| HydroPlant {
            name: name.into(),
            node,
            segments: vec![Segment {
                prod_equiv: mu,
                q_min: 0.0,
                q_max: qmax,
            }],
            m_min: 0.0,
            m_max: self.m_max,
            s_min: 0.0,
            s_max: smax,
            max_power: pmax,
            droop: 1.0,
            strategic,
            historical_release: 0.0,
            id_limit: strategic.then_some(self.id_limit),
        };
        let links = if self.cascade {
            vec![Link {
                upstream: 0,
                downstream: 1,
            }]
        } else {
            Vec::new()
        };
        let instance = MarketInstance {
            name: self.name.clone(),
            topology: NetworkTopology {
                node_count: 3,
                lines: vec![
                    Line {
                        from: 0,
                        to: 1,
                        ntc: self.ntc[0],
                    },
                    Line {
                        from: 1,
                        to: 2,
                        ntc: self.ntc[1],
                    },
                ],
            },
            hydro_plants: vec![
                hydro(
                    "ST",
                    0,
                    self.st_max,
                    self.st_prod_equiv,
                    self.st_q_max,
                    self.st_spill_max,
                    true,
                ),
                hydro(
                    "NST",
                    1,
                    self.nst_max,
                    self.nst_prod_equiv,
                    self.nst_q_max,
                    self.nst_spill_max,
                    false,
                ),
            ],
            cascade: HydroCascade::new(2, links, vec![0, 0]).expect("valid cascade"),
            thermal_units: vec![ThermalUnit {
                name: "TH".into(),
                node: 2,
                max_power: self.th_max,
                cost_da: self.th_cost_da,
                droop: 1.0,
            }],
            bid_bounds: BidBounds::uniform(1, self.segments, nt, [0.0, self.da_cap], [0.0, self.fc_cap]),
            horizon: nt,
            segments: self.segments,
            id_volume_fraction: 0.05,
            da_price_cap: Some(self.da_cap),
            fc_price_cap: Some(self.fc_cap),
        };
        let scenario = Scenario {
            probability: 1.0,
            inflow: self.inflow.iter().map(|&v| vec![v; nt]).collect(),
            initial_content: self.initial_content.to_vec(),
            demand_da: self.demand_da.clone(),
            demand_fc: self.demand_fc.clone(),
            cost_fc_hydro: vec![Vec::new(), vec![self.nst_cost_fc; nt]],
            cost_fc_thermal: vec![vec![self.th_cost_fc; nt]],
            id_price_up: vec![self.id_price_up.clone()],
            id_price_down: vec![self.id_price_down.clone()],
            future_price: self.future_price,
            future_prod_equiv: self.future_prod_equiv.to_vec(),
            freq_dev: vec![0.0; nt],
        };
        CaseData {
            instance,
            scenarios: vec![scenario],
        }
    }
}

/// Demand rows of the illustrative cases: high, medium, low.
pub const DEMAND_ROWS: [(&str, [f64; 3]); 3] = [
    ("H", [50.0, 50.0, 70.0]),
    ("M", [50.0, 50.0, 40.0]),
    ("L", [4.0, 5.0, 25.0]),
];

/// Case I (uncongested) or Case II (line 0-1 limited to 20 MW).
pub fn illustrative(congested: bool, demand: [f64; 3], demand_fc: f64) -> CaseData {
    let ntc = if congested { [20.0, 100.0] } else { [100.0, 100.0] };
    let mut b = ThreeBus::single_period(demand, demand_fc, ntc);
    b.name = if congested { "case2".into() } else { "case1".into() };
    b.build()
}

/// Three-period cascade case: the strategic station releases into the
/// non-strategic one, and a high water value makes the operator keep water
/// downstream. Demands, ID prices and the non-strategic production
/// equivalent are calibrated (the source gives outcomes only): thermal is
/// marginal in period 1, strategic withholding hits both caps in period 2,
/// and thermal FCR-N headroom returns in period 3.
pub fn cascade_three_period() -> CaseData {
    let mut b = ThreeBus::single_period([0.0, 0.0, 0.0], 20.0, [200.0, 200.0]);
    b.name = "case3".into();
    b.periods = 3;
    b.demand_da = vec![vec![0.0; 3], vec![0.0; 3], vec![120.0, 185.0, 110.0]];
    b.demand_fc = vec![20.0; 3];
    b.th_cost_da = 48.0;
    b.th_cost_fc = 50.0;
    b.st_q_max = 50.0;
    // Below 0.4875 the operator's water cost of non-strategic output
    // (26 * 0.9 / mu) exceeds the thermal cost.
    b.nst_prod_equiv = 0.4;
    b.nst_q_max = 125.0;
    b.initial_content = [300.0, 300.0];
    b.inflow = [10.0, 20.0];
    b.cascade = true;
    b.future_price = 26.0;
    b.future_prod_equiv = [0.9, 0.9];
    b.id_limit = 30.0;
    b.id_price_up = vec![19.0, 60.0, 39.0];
    b.id_price_down = vec![20.0, 61.0, 40.0];
    b.build()
}

/// 24-period market with a low water value and synthetic demand and ID
/// price profiles: cheap ID energy in periods 3-5 and dear ID energy in
/// periods 11-13, neither worth trading elsewhere.
pub fn market_power_day() -> CaseData {
    const DEMAND: [f64; 24] = [
        70.0, 65.0, 110.0, 120.0, 125.0, 100.0, 120.0, 135.0, 135.0, 115.0, 60.0, 55.0, 55.0, 80.0, 95.0, 105.0, 110.0,
        120.0, 130.0, 125.0, 110.0, 95.0, 85.0, 75.0,
    ];
    let mut b = ThreeBus::single_period([0.0; 3], 10.0, [100.0, 100.0]);
    b.name = "case4".into();
    b.periods = 24;
    b.demand_da = vec![
        DEMAND.iter().map(|d| 0.2 * d).collect(),
        DEMAND.iter().map(|d| 0.3 * d).collect(),
        DEMAND.iter().map(|d| 0.5 * d).collect(),
    ];
    b.demand_fc = vec![10.0; 24];
    b.th_cost_da = 30.0;
    b.th_cost_fc = 35.0;
    b.nst_prod_equiv = 0.5;
    b.initial_content = [1000.0, 1000.0];
    b.m_max = 2000.0;
    b.future_price = 20.0;
    b.future_prod_equiv = [1.0, 0.9];
    b.id_limit = 10.0;
    b.id_price_up = (1..=24)
        .map(|t| {
            if (3..=5).contains(&t) {
                4.0
            } else if (11..=13).contains(&t) {
                80.0
            } else {
                10.0
            }
        })
        .collect();
    b.id_price_down = (1..=24)
        .map(|t| {
            if (3..=5).contains(&t) {
                5.0
            } else if (11..=13).contains(&t) {
                81.0
            } else {
                60.0
            }
        })
        .collect();
    b.build()
}
