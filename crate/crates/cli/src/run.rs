//! Case runs: build the instances of a case, solve or export them and
//! collect tables and plot series into a report.

use std::path::Path;
use std::time::{Duration, Instant};

use hydrobid::cases::{cascade_three_period, illustrative, market_power_day, DEMAND_ROWS};
use hydrobid::{
    build_da_lp, build_fcrn_lp, build_single_level_milp, clear_da, clear_fcrn, extract_bids, solve_bilevel,
    sweep_demand, sweep_fc_demand, validate_instance, validate_scenarios, verify_reformulation, BidSet, BigMConfig,
    BilevelSolution, CaseData, DaOutcome, Market, MarketInstance, Scenario, SolveOptions, Step, Unit,
};
use hydrobid_pdf::{fit_price_pdfs, FitConfig, GroupPdf, NutsConfig};
use hydrobid_scenarios::{fit_id_da_relation, generate_scenarios, ingest_market_csv, ScenarioConfig, ScenarioDraw};
use lpmilp::{parse_model, render_model, ExportFormat, MilpStatus};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CaseConfig, CaseId, GeneratedScenarios, ScenarioSource};
use crate::network::{case5_instance, case5_mapping};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RevenueSplit {
    pub da: f64,
    pub fc: f64,
    pub id: f64,
    pub water: f64,
}

/// One bilevel solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub status: String,
    pub objective: f64,
    pub objective_bilinear: f64,
    pub bound: f64,
    pub rel_gap: f64,
    pub nodes: usize,
    /// Probability-weighted.
    pub revenue: RevenueSplit,
    /// Re-clearing at the optimal bids reproduced the embedded values.
    pub certified: bool,
    pub certificate_failures: Vec<String>,
    #[serde(skip)]
    pub milp_status: Option<MilpStatus>,
}

/// Row of the illustrative-case tables; vectors are per unit (ST, NST, TH)
/// or per bus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub level: String,
    pub with_fc: bool,
    pub demand: Vec<f64>,
    pub fc_demand: f64,
    pub da: Vec<f64>,
    pub fc: Vec<f64>,
    pub da_price: Vec<f64>,
    pub fc_price: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodRow {
    pub run: String,
    pub scenario: usize,
    /// 1-based.
    pub period: usize,
    /// Aggregate DA dispatch of the strategic stations.
    pub strategic_da: f64,
    pub strategic_fc: f64,
    pub id_up: f64,
    pub id_down: f64,
    /// Per unit, in `CaseReport::units` order.
    pub da: Vec<f64>,
    /// Per bus.
    pub da_price: Vec<f64>,
    pub fc_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BidRow {
    pub run: String,
    pub station: String,
    pub period: usize,
    pub market: String,
    pub step: usize,
    pub price: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub market: String,
    pub total_demand: f64,
    pub total_fc_demand: f64,
    pub da_price: f64,
    pub fc_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportSummary {
    pub file: String,
    pub rows: usize,
    pub cols: usize,
    pub binaries: usize,
    /// Parsing the file back and writing it again gives the same bytes.
    pub round_trip: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub case: CaseId,
    pub name: String,
    pub seed: u64,
    pub runs: Vec<RunSummary>,
    pub table: Vec<TableRow>,
    pub units: Vec<String>,
    pub series: Vec<PeriodRow>,
    pub bid_curves: Vec<BidRow>,
    pub sweep: Vec<SweepRow>,
    /// Cleared FCR-N prices `[period][sample]`.
    pub fc_samples: Vec<Vec<f64>>,
    pub pdfs: Vec<GroupPdf>,
    pub export: Option<ExportSummary>,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl CaseReport {
    fn new(config: &CaseConfig, name: &str) -> Self {
        Self {
            case: config.case,
            name: name.into(),
            seed: config.seed,
            runs: Vec::new(),
            table: Vec::new(),
            units: Vec::new(),
            series: Vec::new(),
            bid_curves: Vec::new(),
            sweep: Vec::new(),
            fc_samples: Vec::new(),
            pdfs: Vec::new(),
            export: None,
            wall_clock: Duration::ZERO,
        }
    }

    /// 0 when every solve is optimal (or the model was exported), 3 on
    /// infeasibility, 2 when a limit stopped a solve, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        let st: Vec<MilpStatus> = self.runs.iter().filter_map(|r| r.milp_status).collect();
        if st.contains(&MilpStatus::Infeasible) {
            3
        } else if st
            .iter()
            .any(|s| matches!(s, MilpStatus::Unbounded | MilpStatus::NumericalFailure))
        {
            1
        } else if st.iter().any(|s| s.limit_hit()) {
            2
        } else {
            0
        }
    }
}

/// Drops the sign of negative zeros that dual values pick up.
fn z(v: f64) -> f64 {
    v + 0.0
}

fn unit_list(inst: &MarketInstance) -> Vec<(String, Unit)> {
    let hydro = inst
        .hydro_plants
        .iter()
        .enumerate()
        .map(|(h, p)| (p.name.clone(), Unit::Hydro(h)));
    let thermal = inst
        .thermal_units
        .iter()
        .enumerate()
        .map(|(k, u)| (u.name.clone(), Unit::Thermal(k)));
    hydro.chain(thermal).collect()
}

fn summarize(label: &str, c: &CaseData, sol: &BilevelSolution) -> RunSummary {
    let rep = verify_reformulation(&c.instance, &c.scenarios, sol);
    let mut revenue = RevenueSplit::default();
    for (r, s) in sol.revenue.iter().zip(&c.scenarios) {
        revenue.da += s.probability * r.da;
        revenue.fc += s.probability * r.fc;
        revenue.id += s.probability * r.id;
        revenue.water += s.probability * r.water;
    }
    RunSummary {
        label: label.into(),
        status: format!("{:?}", sol.status),
        objective: sol.objective,
        objective_bilinear: sol.objective_bilinear,
        bound: sol.bound,
        rel_gap: (sol.bound - sol.objective).max(0.0) / (1.0 + sol.objective.abs()),
        nodes: sol.nodes,
        revenue,
        certified: rep.passed(),
        certificate_failures: rep.failures.clone(),
        milp_status: Some(sol.status),
    }
}

fn series(label: &str, c: &CaseData, sol: &BilevelSolution) -> Vec<PeriodRow> {
    let inst = &c.instance;
    let units = unit_list(inst);
    let strategic = inst.strategic();
    let mut out = Vec::new();
    for w in 0..c.scenarios.len() {
        for t in 0..inst.horizon {
            let sum = |f: &dyn Fn(Unit) -> f64| strategic.iter().map(|&h| f(Unit::Hydro(h))).sum::<f64>();
            out.push(PeriodRow {
                run: label.into(),
                scenario: w,
                period: t + 1,
                strategic_da: z(sum(&|u| sol.da_dispatch(inst, w, u, t))),
                strategic_fc: z(sum(&|u| sol.fc_dispatch(inst, w, u, t))),
                id_up: z(sol.id_up[w].iter().map(|v| v[t]).sum()),
                id_down: z(sol.id_down[w].iter().map(|v| v[t]).sum()),
                da: units.iter().map(|&(_, u)| z(sol.da_dispatch(inst, w, u, t))).collect(),
                da_price: sol.da_prices[w].iter().map(|n| z(n[t])).collect(),
                fc_price: z(sol.fc_prices[w][t]),
            });
        }
    }
    out
}

fn bid_rows(label: &str, inst: &MarketInstance, sol: &BilevelSolution) -> Vec<BidRow> {
    let mut out = Vec::new();
    for curve in extract_bids(inst, sol) {
        for (market, steps) in [("DA", &curve.da), ("FC", &curve.fc)] {
            for (k, s) in steps.iter().enumerate() {
                out.push(BidRow {
                    run: label.into(),
                    station: curve.station.clone(),
                    period: curve.period + 1,
                    market: market.into(),
                    step: k + 1,
                    price: s.price,
                    volume: s.volume,
                });
            }
        }
    }
    out
}

/// Labelled instances of a case with their scenario sets, before any
/// solving. Case V's generated scenarios are drawn here.
pub fn case_instances(config: &CaseConfig) -> Result<Vec<(String, CaseData)>, HarnessError> {
    let out = match config.case {
        CaseId::I | CaseId::II => {
            let congested = config.case == CaseId::II;
            let mut v = Vec::new();
            for fc in [0.0, 20.0] {
                for (level, d) in DEMAND_ROWS {
                    let tag = if fc > 0.0 { "fc" } else { "nofc" };
                    v.push((format!("{level}_{tag}"), illustrative(congested, d, fc)));
                }
            }
            v
        }
        CaseId::III => vec![("case3".into(), cascade_three_period())],
        CaseId::IV => vec![("case4".into(), market_power_day())],
        CaseId::V => {
            let g = generated(config)?;
            let inst = match &config.instance {
                Some(p) => CaseData::load(p)?.instance,
                None => case5_instance(g.horizon),
            };
            let draws = draw_scenarios(config, g, g.count)?;
            let scenarios = to_scenarios(&inst, &draws)?;
            vec![(
                inst.name.clone(),
                CaseData {
                    instance: inst,
                    scenarios,
                },
            )]
        }
        CaseId::Custom => {
            if let ScenarioSource::Generated(_) = config.scenarios {
                return Err(HarnessError::Config(
                    "generated scenarios are only mapped onto the Case V network".into(),
                ));
            }
            let path = config
                .instance
                .as_ref()
                .ok_or_else(|| HarnessError::Config("missing instance".into()))?;
            let c = CaseData::load(path)?;
            vec![(c.instance.name.clone(), c)]
        }
    };
    for (label, c) in &out {
        let mut v = validate_instance(&c.instance);
        v.extend(validate_scenarios(&c.instance, &c.scenarios));
        if !v.is_empty() {
            let msg = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
            return Err(HarnessError::Config(format!("{label}: {msg}")));
        }
    }
    Ok(out)
}

fn generated(config: &CaseConfig) -> Result<&GeneratedScenarios, HarnessError> {
    match &config.scenarios {
        ScenarioSource::Generated(g) => Ok(g),
        ScenarioSource::Inline => Err(HarnessError::Config("Case V needs generated scenarios".into())),
    }
}

fn draw_scenarios(config: &CaseConfig, g: &GeneratedScenarios, n: usize) -> Result<Vec<ScenarioDraw>, HarnessError> {
    let history = ingest_market_csv(&g.history)?;
    let relation = fit_id_da_relation(&history)?;
    let cfg = ScenarioConfig {
        horizon: g.horizon,
        ..Default::default()
    };
    Ok(generate_scenarios(&history, &relation, n, config.seed, &cfg)?)
}

fn to_scenarios(inst: &MarketInstance, draws: &[ScenarioDraw]) -> Result<Vec<Scenario>, HarnessError> {
    let map = case5_mapping(inst);
    Ok(draws
        .iter()
        .map(|d| d.to_scenario(inst, &map))
        .collect::<Result<_, _>>()?)
}

pub fn run_case(config: &CaseConfig) -> Result<CaseReport, HarnessError> {
    let start = Instant::now();
    config.validate()?;
    let instances = case_instances(config)?;
    let opts = config.solve.options();
    let mut report = CaseReport::new(config, config.case.slug());
    if config.case == CaseId::V {
        let (_, c) = &instances[0];
        report.name = c.instance.name.clone();
        case_v(config, c, &opts, &mut report)?;
    } else {
        let solved: Vec<BilevelSolution> = instances
            .par_iter()
            .map(|(_, c)| solve_bilevel(&c.instance, &c.scenarios, &opts))
            .collect::<Result<_, _>>()?;
        if let Some((_, c)) = instances.first() {
            report.units = unit_list(&c.instance).into_iter().map(|(n, _)| n).collect();
        }
        for ((label, c), sol) in instances.iter().zip(&solved) {
            log::info!(
                "{label}: {:?} objective {:.4} after {} nodes",
                sol.status,
                sol.objective,
                sol.nodes
            );
            report.runs.push(summarize(label, c, sol));
            report.bid_curves.extend(bid_rows(label, &c.instance, sol));
            if matches!(config.case, CaseId::I | CaseId::II) {
                report.table.push(table_row(label, c, sol));
            } else {
                report.series.extend(series(label, c, sol));
            }
        }
    }
    report.wall_clock = start.elapsed();
    Ok(report)
}

fn table_row(label: &str, c: &CaseData, sol: &BilevelSolution) -> TableRow {
    let inst = &c.instance;
    let s = &c.scenarios[0];
    let units: Vec<Unit> = unit_list(inst).into_iter().map(|(_, u)| u).collect();
    let fc_demand = s.demand_fc[0];
    TableRow {
        level: label.split('_').next().unwrap_or(label).into(),
        with_fc: fc_demand > 0.0,
        demand: s.demand_da.iter().map(|n| n[0]).collect(),
        fc_demand,
        da: units.iter().map(|&u| z(sol.da_dispatch(inst, 0, u, 0))).collect(),
        fc: units.iter().map(|&u| z(sol.fc_dispatch(inst, 0, u, 0))).collect(),
        da_price: sol.da_prices[0].iter().map(|n| z(n[0])).collect(),
        fc_price: (fc_demand > 0.0).then(|| z(sol.fc_prices[0][0])),
    }
}

fn case_v(config: &CaseConfig, c: &CaseData, opts: &SolveOptions, report: &mut CaseReport) -> Result<(), HarnessError> {
    let inst = &c.instance;
    let milp = build_single_level_milp(inst, &c.scenarios, &BigMConfig::for_instance(inst))?;
    if milp.mip.lp.num_rows() > config.solve.export_rows {
        std::fs::create_dir_all(&config.output_dir)?;
        let file = format!("{}.mps", inst.name);
        log::info!(
            "{} has {} rows, above the solve limit of {}; exporting to {file}",
            inst.name,
            milp.mip.lp.num_rows(),
            config.solve.export_rows
        );
        report.export = Some(export_round_trip(&milp.mip, &config.output_dir.join(&file), &file)?);
    } else {
        let sol = solve_bilevel(inst, &c.scenarios, opts)?;
        report.units = unit_list(inst).into_iter().map(|(n, _)| n).collect();
        report.runs.push(summarize(&inst.name, c, &sol));
        report.series = series(&inst.name, c, &sol);
        report.bid_curves = bid_rows(&inst.name, inst, &sol);
    }
    let g = generated(config)?;
    let draws = draw_scenarios(config, g, g.price_samples)?;
    log::info!("clearing {} price samples at fixed offers", draws.len());
    let samples = to_scenarios(inst, &draws)?;
    let prices: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| fixed_offer_fc_prices(inst, s))
        .collect::<Result<_, _>>()?;
    report.fc_samples = (0..inst.horizon)
        .map(|t| prices.iter().map(|p| p[t]).collect())
        .collect();
    let groups: Vec<(String, Vec<f64>)> = report
        .fc_samples
        .iter()
        .enumerate()
        .map(|(t, v)| (format!("t{}", t + 1), v.clone()))
        .collect();
    let fit = FitConfig {
        nuts: NutsConfig {
            seed: config.seed,
            ..Default::default()
        },
        ..Default::default()
    };
    report.pdfs = fit_price_pdfs(&groups, &fit)?;
    Ok(())
}

/// Clears both markets with the strategic stations offering their capacity
/// at the marginal value of their water.
pub fn fixed_offer_fc_prices(inst: &MarketInstance, s: &Scenario) -> Result<Vec<f64>, HarnessError> {
    let weights = inst.cascade.downstream_weights(&s.future_prod_equiv);
    let bids = match inst.strategic().first() {
        Some(&h) => {
            let p = &inst.hydro_plants[h];
            let price = s.future_price * weights[h] / p.segments[0].prod_equiv;
            let da = Step {
                price,
                volume: p.max_power,
            };
            let fc = Step {
                price,
                volume: 0.1 * p.max_power,
            };
            BidSet::flat(inst, da, fc)
        }
        None => BidSet::zeros(0, inst.segments, inst.horizon),
    };
    let lp = build_da_lp(inst, &bids, s)?;
    let r = clear_da(&lp);
    if !r.is_optimal() {
        return Err(HarnessError::Solve("DA clearing at fixed offers".into()));
    }
    let out = DaOutcome::from_clearing(inst, &lp, &r)?;
    let fl = build_fcrn_lp(inst, &bids, &out, s)?;
    let fr = clear_fcrn(&fl);
    if !fr.is_optimal() {
        return Err(HarnessError::Solve("FCR-N clearing at fixed offers".into()));
    }
    Ok(fl.prices(&fr).into_iter().map(z).collect())
}

/// Writes the model as MPS and checks that parsing it back reproduces the
/// file byte for byte.
pub fn export_round_trip(
    mip: &lpmilp::MixedIntegerProgram,
    path: &Path,
    file: &str,
) -> Result<ExportSummary, HarnessError> {
    let text = render_model(mip, ExportFormat::Mps)?;
    std::fs::write(path, &text)?;
    let back = parse_model(&std::fs::read_to_string(path)?, ExportFormat::Mps)?;
    let again = render_model(&back, ExportFormat::Mps)?;
    Ok(ExportSummary {
        file: file.into(),
        rows: back.lp.num_rows(),
        cols: back.lp.num_cols(),
        binaries: back.binaries().len(),
        round_trip: again == text
            && back.lp.num_rows() == mip.lp.num_rows()
            && back.lp.num_cols() == mip.lp.num_cols()
            && back.binaries() == mip.binaries(),
    })
}

/// DA sweep of the illustrative high-demand row and the fixed-offer FCR-N
/// sweep, on `points` grid points each.
pub fn run_sweep(config: &CaseConfig, points: usize) -> Result<CaseReport, HarnessError> {
    let start = Instant::now();
    let congested = match config.case {
        CaseId::I => false,
        CaseId::II => true,
        other => {
            return Err(HarnessError::Config(format!(
                "sweeps are defined for Cases I and II, not {other:?}"
            )))
        }
    };
    if points < 2 {
        return Err(HarnessError::Config("a sweep needs at least two points".into()));
    }
    let mut report = CaseReport::new(config, &format!("{}_sweep", config.case.slug()));
    let ntc = if congested { [20.0, 100.0] } else { [100.0, 100.0] };
    let base = hydrobid::cases::ThreeBus::single_period(DEMAND_ROWS[0].1, 0.0, ntc);
    let scales: Vec<f64> = (0..points).map(|k| 2.0 * k as f64 / (points - 1) as f64).collect();
    let da = sweep_demand(&base, &scales, &config.solve.options())?;
    // Thermal keeps DA headroom up to 50 MW of FCR-N at this demand.
    let fc_base = hydrobid::cases::ThreeBus::single_period([44.1, 44.1, 61.8], 0.0, ntc);
    // At zero FCR-N demand any price up to the cheapest offer is a valid
    // dual, so the grid starts one step above it.
    let fc_demands: Vec<f64> = (1..=points).map(|k| 100.0 * k as f64 / points as f64).collect();
    let fc = sweep_fc_demand(
        &fc_base,
        Step {
            price: 10.0,
            volume: 50.0,
        },
        Step {
            price: 100.0,
            volume: 50.0,
        },
        &fc_demands,
    )?;
    for (market, pts) in [(Market::Da, da), (Market::Fc, fc)] {
        for p in pts {
            report.sweep.push(SweepRow {
                market: if market == Market::Da { "DA" } else { "FC" }.into(),
                total_demand: p.total_demand,
                total_fc_demand: p.total_fc_demand,
                da_price: z(p.da_price),
                fc_price: z(p.fc_price),
            });
        }
    }
    report.wall_clock = start.elapsed();
    Ok(report)
}
