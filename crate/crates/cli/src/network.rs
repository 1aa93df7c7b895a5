//! Synthetic 118-bus system for Case V. The published system description
//! gives only totals (186 lines, 4242 MW of load, 4377 MW of generation in
//! 18 buses); line endpoints, load shares and unit placement here are
//! generated and do not follow the IEEE data files.

use std::collections::BTreeSet;
use std::fmt::Write;

use chrono::{Duration, NaiveDate};
use hydrobid::{
    BidBounds, HydroCascade, HydroPlant, Line, Link, MarketInstance, NetworkTopology, Segment, ThermalUnit,
};
use hydrobid_scenarios::ScenarioMapping;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const BUSES: usize = 118;
pub const LINES: usize = 186;
pub const TOTAL_LOAD: f64 = 4242.0;

/// Generator buses; the strategic station shares the first with a
/// non-strategic one.
const GEN_BUSES: [usize; 18] = [9, 11, 24, 25, 30, 45, 48, 53, 58, 60, 65, 68, 79, 88, 99, 102, 110, 115];
const NST_POWER: [f64; 14] = [
    120.0, 140.0, 150.0, 160.0, 170.0, 180.0, 185.0, 190.0, 195.0, 200.0, 210.0, 220.0, 227.0, 230.0,
];
const ST_POWER: f64 = 400.0;
const TH_POWER: [f64; 4] = [300.0, 350.0, 350.0, 400.0];
const TH_COST: [f64; 4] = [28.0, 35.0, 45.0, 60.0];
const NST_PROD_EQUIV: f64 = 0.9;
/// Reservoir size in hours of full release.
const STORAGE_HOURS: f64 = 30.0;

fn lines() -> Vec<Line> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(LINES);
    let mut push = |a: usize, b: usize, ntc: f64, out: &mut Vec<Line>| {
        let key = (a.min(b), a.max(b));
        if a != b && seen.insert(key) {
            out.push(Line { from: a, to: b, ntc });
            true
        } else {
            false
        }
    };
    for i in 0..BUSES {
        push(i, (i + 1) % BUSES, 250.0, &mut out);
    }
    let mut k = 0;
    while out.len() < LINES {
        let a = (k * 7) % BUSES;
        let b = (a + 13 + (k * 5) % 40) % BUSES;
        push(a, b, 180.0, &mut out);
        k += 1;
    }
    out
}

/// Load share of each bus, summing to one. About three buses in four carry
/// load, as in the reference system.
pub fn load_shares() -> Vec<f64> {
    let raw: Vec<f64> = (0..BUSES)
        .map(|i| {
            if i % 4 == 3 {
                0.0
            } else {
                1.0 + ((i * 37) % 11) as f64 / 5.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

/// Hydro stations: the strategic one first, then 14 non-strategic ones.
fn hydro_plants() -> Vec<HydroPlant> {
    let plant = |name: String, node: usize, pmax: f64, segments: Vec<Segment>, strategic: bool| {
        let q: f64 = segments.iter().map(|s| s.q_max).sum();
        HydroPlant {
            name,
            node,
            segments,
            m_min: 0.0,
            m_max: STORAGE_HOURS * q,
            s_min: 0.0,
            s_max: q,
            max_power: pmax,
            droop: 1.0,
            strategic,
            historical_release: 0.0,
            id_limit: None,
        }
    };
    let mut out = vec![plant(
        "ST".into(),
        GEN_BUSES[0],
        ST_POWER,
        vec![
            Segment {
                prod_equiv: 1.0,
                q_min: 0.0,
                q_max: 250.0,
            },
            Segment {
                prod_equiv: 0.8,
                q_min: 0.0,
                q_max: 187.5,
            },
        ],
        true,
    )];
    for (k, &p) in NST_POWER.iter().enumerate() {
        out.push(plant(
            format!("NST{}", k + 1),
            GEN_BUSES[k],
            p,
            vec![Segment {
                prod_equiv: NST_PROD_EQUIV,
                q_min: 0.0,
                q_max: p / NST_PROD_EQUIV,
            }],
            false,
        ));
    }
    out
}

pub fn case5_instance(horizon: usize) -> MarketInstance {
    let hydro = hydro_plants();
    let n = hydro.len();
    // ST feeds NST1 at the shared bus; NST2 feeds NST3 one period later.
    let links = vec![
        Link {
            upstream: 0,
            downstream: 1,
        },
        Link {
            upstream: 2,
            downstream: 3,
        },
    ];
    let mut delays = vec![0; n];
    delays[2] = 1;
    let thermal = TH_POWER
        .iter()
        .zip(TH_COST)
        .enumerate()
        .map(|(k, (&p, c))| ThermalUnit {
            name: format!("TH{}", k + 1),
            node: GEN_BUSES[14 + k],
            max_power: p,
            cost_da: c,
            droop: 1.0,
        })
        .collect();
    MarketInstance {
        name: "case5".into(),
        topology: NetworkTopology {
            node_count: BUSES,
            lines: lines(),
        },
        hydro_plants: hydro,
        cascade: HydroCascade::new(n, links, delays).expect("acyclic"),
        thermal_units: thermal,
        bid_bounds: BidBounds::uniform(1, 2, horizon, [0.0, 200.0], [0.0, 100.0]),
        horizon,
        segments: 2,
        id_volume_fraction: 0.05,
        da_price_cap: Some(200.0),
        fc_price_cap: Some(100.0),
    }
}

/// History demand is in reference-area MW and is scaled up to the system
/// load; FCR-N costs are multiples of the historical FCR-N price.
pub fn case5_mapping(inst: &MarketInstance) -> ScenarioMapping {
    let nh = inst.hydro_plants.len();
    ScenarioMapping {
        demand_share: load_shares(),
        demand_scale: TOTAL_LOAD / 1100.0,
        fc_demand_scale: 0.4,
        fc_cost_factor_hydro: (0..nh).map(|h| 0.6 + 0.03 * h as f64).collect(),
        fc_cost_factor_thermal: (0..inst.thermal_units.len()).map(|k| 1.2 + 0.1 * k as f64).collect(),
        future_prod_equiv: vec![NST_PROD_EQUIV; nh],
        freq_dev: 0.0,
    }
}

/// Hourly market history in the ingestion schema, one inflow and content
/// column per station of `inst`.
pub fn synthetic_history(inst: &MarketInstance, days: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let names: Vec<&str> = inst.hydro_plants.iter().map(|p| p.name.as_str()).collect();
    let mut out = String::from("timestamp,da_price,id_up_price,id_down_price,fc_price,fc_demand,da_demand");
    for n in &names {
        write!(out, ",inflow_{n}").unwrap();
    }
    for n in &names {
        write!(out, ",content_{n}").unwrap();
    }
    out.push('\n');
    let start = NaiveDate::from_ymd_opt(2023, 1, 1).expect("date");
    let qmax: Vec<f64> = inst
        .hydro_plants
        .iter()
        .map(|p| p.segments.iter().map(|s| s.q_max).sum())
        .collect();
    let mut content: Vec<f64> = inst.hydro_plants.iter().map(|p| 0.5 * p.m_max).collect();
    for d in 0..days {
        let date = start + Duration::days(d as i64);
        let level = 38.0 + 8.0 * unit.sample(&mut rng);
        let wet = rng.gen_range(0.15..0.45);
        for h in 0..24 {
            let shape = (std::f64::consts::PI * (h as f64 - 4.0) / 12.0).sin();
            let da = (level + 9.0 * shape + 3.0 * unit.sample(&mut rng)).max(1.0);
            let up = (0.85 * da + 1.5 + 2.0 * unit.sample(&mut rng)).max(0.5);
            let down = (1.1 * da + 2.0 + 2.0 * unit.sample(&mut rng)).max(0.5);
            let fc = (12.0 + 0.3 * da + 4.0 * unit.sample(&mut rng)).max(1.0);
            let fc_demand = (180.0 + 25.0 * unit.sample(&mut rng)).max(50.0);
            let load = (900.0 + 150.0 * shape + 30.0 * unit.sample(&mut rng)).max(300.0);
            let ts = date.and_hms_opt(h, 0, 0).expect("hour");
            write!(
                out,
                "{},{da:.2},{up:.2},{down:.2},{fc:.2},{fc_demand:.2},{load:.2}",
                ts.format("%Y-%m-%d %H:%M")
            )
            .unwrap();
            let inflow: Vec<f64> = qmax
                .iter()
                .map(|q| (wet * q * (1.0 + 0.1 * unit.sample(&mut rng))).max(0.0))
                .collect();
            for v in &inflow {
                write!(out, ",{v:.2}").unwrap();
            }
            for m in &content {
                write!(out, ",{m:.2}").unwrap();
            }
            out.push('\n');
            // Contents wander slowly inside the middle of the reservoir.
            for (m, p) in content.iter_mut().zip(&inst.hydro_plants) {
                let drift = 0.02 * p.m_max * unit.sample(&mut rng) / 24.0;
                *m = (*m + drift).clamp(0.2 * p.m_max, 0.8 * p.m_max);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use hydrobid::validate_instance;

    #[test]
    fn published_totals() {
        let inst = case5_instance(6);
        assert!(validate_instance(&inst).is_empty(), "{:?}", validate_instance(&inst));
        assert_eq!(inst.topology.node_count, BUSES);
        assert_eq!(inst.topology.lines.len(), LINES);
        let gen: f64 = inst.hydro_plants.iter().map(|p| p.max_power).sum::<f64>()
            + inst.thermal_units.iter().map(|u| u.max_power).sum::<f64>();
        assert!((gen - 4377.0).abs() < 1e-9);
        let buses: BTreeSet<usize> = inst
            .hydro_plants
            .iter()
            .map(|p| p.node)
            .chain(inst.thermal_units.iter().map(|u| u.node))
            .collect();
        assert_eq!(buses.len(), 18);
        assert_eq!(inst.strategic().len(), 1);
        assert_eq!(inst.non_strategic().len(), 14);
        assert_eq!(inst.thermal_units.len(), 4);
        assert!((load_shares().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn network_is_connected() {
        let inst = case5_instance(1);
        let mut seen = [false; BUSES];
        let mut stack = vec![0];
        while let Some(b) = stack.pop() {
            if std::mem::replace(&mut seen[b], true) {
                continue;
            }
            for l in &inst.topology.lines {
                if l.from == b {
                    stack.push(l.to);
                } else if l.to == b {
                    stack.push(l.from);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}
