//! Solving the single-level MILP, reading the solution back, and checking it
//! against the original bilinear objective and fresh lower-level clearings.

use std::time::Duration;

use lpmilp::{check_candidate, solve_milp, MilpOptions, MilpStatus};

use crate::bids::{BidSet, Market, Step};
use crate::da::{build_da_lp, clear_da, non_strategic_units};
use crate::fcrn::{build_fcrn_lp, clear_fcrn, DaOutcome};
use crate::instance::{MarketInstance, Scenario};
use crate::lower::{Param, RowKind, Unit};
use crate::reform::{build_milp, BigMConfig, DispatchBox, SingleLevelMilp};
use crate::BuildError;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Defaults to `BigMConfig::for_instance`.
    pub bigm: Option<BigMConfig>,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    pub rel_gap: f64,
    /// Refine dispatch boxes while a McCormick product is inexact.
    pub polish: bool,
    /// Cap on refinement nodes; each costs up to two MILP solves.
    pub refine_nodes: usize,
    /// Clear the lower levels at the relaxation's bids to find incumbents.
    pub heuristic: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            bigm: None,
            time_limit: None,
            node_limit: None,
            rel_gap: 1e-9,
            polish: true,
            refine_nodes: 200,
            heuristic: true,
        }
    }
}

/// Primal and dual values of both clearings in one scenario, in the lower
/// models' column and row order.
#[derive(Debug, Clone)]
pub struct LowerValues {
    pub da_x: Vec<f64>,
    pub da_y: Vec<f64>,
    pub fc_x: Vec<f64>,
    pub fc_y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Revenue {
    pub da: f64,
    pub fc: f64,
    pub id: f64,
    pub water: f64,
}

impl Revenue {
    pub fn total(&self) -> f64 {
        self.da + self.fc + self.id + self.water
    }
}

#[derive(Debug, Clone)]
pub struct BilevelSolution {
    pub status: MilpStatus,
    pub bids: BidSet,
    /// `[scenario][strategic][period]`
    pub id_up: Vec<Vec<Vec<f64>>>,
    pub id_down: Vec<Vec<Vec<f64>>>,
    /// Linear objective of the MILP at the reported point.
    pub objective: f64,
    /// Expected revenue recomputed from prices times volumes.
    pub objective_bilinear: f64,
    /// Proven upper bound on the linear objective, from the unpinned solve.
    pub bound: f64,
    /// `[scenario][node][period]`
    pub da_prices: Vec<Vec<Vec<f64>>>,
    /// `[scenario][period]`
    pub fc_prices: Vec<Vec<f64>>,
    /// Headroom and coupling products `[scenario][unit][period]`, units in
    /// `non_strategic_units` order.
    pub e_headroom: Vec<Vec<Vec<f64>>>,
    pub e_coupling: Vec<Vec<Vec<f64>>>,
    /// Per scenario, unweighted.
    pub revenue: Vec<Revenue>,
    pub lower: Vec<LowerValues>,
    pub nodes: usize,
    pub polished: bool,
    /// Duals sitting at their big-M bound.
    pub bigm_hits: Vec<String>,
    pub milp: SingleLevelMilp,
    pub x: Vec<f64>,
}

impl BilevelSolution {
    /// Cleared DA dispatch of a unit; strategic stations report the sum of
    /// their cleared segments.
    pub fn da_dispatch(&self, inst: &MarketInstance, w: usize, unit: Unit, t: usize) -> f64 {
        let b = &self.milp.blocks[w];
        if let Unit::Hydro(h) = unit {
            if let Some(o) = inst.strategic().iter().position(|&s| s == h) {
                return b.da_lp.index.p[o].iter().map(|ts| self.lower[w].da_x[ts[t]]).sum();
            }
        }
        self.lower[w].da_x[b.da_lp.g(unit, t)]
    }

    pub fn fc_dispatch(&self, inst: &MarketInstance, w: usize, unit: Unit, t: usize) -> f64 {
        let b = &self.milp.blocks[w];
        if let Unit::Hydro(h) = unit {
            if let Some(o) = inst.strategic().iter().position(|&s| s == h) {
                return b.fc_lp.index.p[o].iter().map(|ts| self.lower[w].fc_x[ts[t]]).sum();
            }
        }
        let k = b.fc_lp.index.units.iter().position(|&u| u == unit).expect("unit");
        self.lower[w].fc_x[b.fc_lp.index.g[k][t]]
    }
}

pub fn solve_bilevel(
    inst: &MarketInstance,
    scenarios: &[Scenario],
    opts: &SolveOptions,
) -> Result<BilevelSolution, BuildError> {
    let bigm = opts.bigm.unwrap_or_else(|| BigMConfig::for_instance(inst));
    let root = build_milp(inst, scenarios, &bigm, None)?;
    let first = run(&root, inst, scenarios, opts, None)?.map_err(BuildError::NoIncumbent)?;
    let mut nodes = first.nodes;
    if !opts.polish || product_error(&root, &first.x) <= PRODUCT_TOL {
        let mut x = first.x;
        tidy_duals(&root, inst, scenarios, &mut x);
        let mut sol = read_solution(inst, scenarios, root, x, first.status, nodes, false)?;
        sol.bound = first.bound;
        return Ok(sol);
    }

    // Best-first refinement over dispatch boxes. A node's MILP bounds the
    // revenue on its box; pinning dispatch at the node's point gives an exact
    // feasible revenue. Nodes split the worst product at the point's value,
    // where both children's envelopes are exact.
    let started = std::time::Instant::now();
    let full = dispatch_box(&root, |j| (root.mip.lp.cols()[j].lower, root.mip.lp.cols()[j].upper));
    let tol = |v: f64| 1e-7 * (1.0 + v.abs());
    let mut best: Option<(f64, SingleLevelMilp, Vec<f64>, MilpStatus)> = None;
    let mut open: Vec<(f64, DispatchBox, Vec<f64>)> = vec![(first.bound, full, first.x)];
    let mut status = first.status;
    let mut processed = 0;
    let mut open_bound = f64::NEG_INFINITY;
    while let Some(k) = pick_best(&open) {
        let (ub, bx, x) = open.swap_remove(k);
        let best_val = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
        if ub <= best_val + tol(best_val) {
            continue;
        }
        let over_time = opts.time_limit.is_some_and(|l| started.elapsed() >= l);
        if processed >= opts.refine_nodes || over_time {
            open_bound = open_bound.max(ub);
            open.iter().for_each(|n| open_bound = open_bound.max(n.0));
            status = if over_time {
                MilpStatus::TimeLimit
            } else {
                MilpStatus::NodeLimit
            };
            break;
        }
        processed += 1;
        let node = build_milp(inst, scenarios, &bigm, Some(&bx))?;
        // Exact revenue with dispatch pinned at this node's point.
        let point = dispatch_box(&node, |j| (x[j], x[j]));
        let pinned = build_milp(inst, scenarios, &bigm, Some(&point))?;
        let mut start = x.clone();
        fill_products(&pinned, &mut start);
        if let Ok(p) = run(&pinned, inst, scenarios, opts, Some(start))? {
            nodes += p.nodes;
            let v = pinned.mip.lp.objective_value(&p.x);
            if v > best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0) {
                best = Some((v, pinned, p.x, p.status));
            }
        }
        let best_val = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
        if ub <= best_val + tol(best_val) {
            continue;
        }
        let Some((w, k, t, v)) = worst_product(&node, &x) else {
            continue;
        };
        for half in [(bx[w][k][t].0, v), (v, bx[w][k][t].1)] {
            let mut child = bx.clone();
            child[w][k][t] = half;
            let cm = build_milp(inst, scenarios, &bigm, Some(&child))?;
            if let Ok(c) = run(&cm, inst, scenarios, opts, None)? {
                nodes += c.nodes;
                if product_error(&cm, &c.x) <= PRODUCT_TOL {
                    let cv = cm.mip.lp.objective_value(&c.x);
                    if cv > best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0) {
                        best = Some((cv, cm, c.x.clone(), c.status));
                    }
                    // The child's optimum is exact, so its bound is attained.
                    if c.bound <= cv + tol(cv) {
                        continue;
                    }
                }
                open.push((c.bound, child, c.x));
            }
        }
    }
    let Some((value, milp, mut x, last_status)) = best else {
        return Err(BuildError::NotOptimal(
            "no exact point found within the refinement budget".into(),
        ));
    };
    tidy_duals(&milp, inst, scenarios, &mut x);
    if status == MilpStatus::Optimal {
        status = last_status;
    }
    let mut sol = read_solution(inst, scenarios, milp, x, status, nodes, true)?;
    sol.bound = open_bound.max(value);
    log::info!("refinement: {processed} nodes, value {value}, bound {}", sol.bound);
    Ok(sol)
}

const PRODUCT_TOL: f64 = 1e-7;

fn pick_best(open: &[(f64, DispatchBox, Vec<f64>)]) -> Option<usize> {
    (0..open.len()).max_by(|&a, &b| open[a].0.total_cmp(&open[b].0))
}

fn dispatch_box(milp: &SingleLevelMilp, f: impl Fn(usize) -> (f64, f64)) -> DispatchBox {
    milp.blocks
        .iter()
        .map(|b| {
            b.fc_lp
                .index
                .units
                .iter()
                .map(|&u| {
                    (0..b.da_lp.index.balance[0].len())
                        .map(|t| f(b.da.x[b.da_lp.g(u, t)]))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Dispatch entry with the largest McCormick error, with its value.
fn worst_product(milp: &SingleLevelMilp, x: &[f64]) -> Option<(usize, usize, usize, f64)> {
    let mut worst = (PRODUCT_TOL, None);
    for (w, b) in milp.blocks.iter().enumerate() {
        for (i, r) in b.fc_lp.model.rows.iter().enumerate() {
            if let (Some((p @ Param::DaDispatch { unit, t }, _)), Some(e)) = (r.param, b.fc.product[i]) {
                let g = x[milp.param_col(w, p)];
                let err = (x[e] - g * x[b.fc.y[i]]).abs();
                if err > worst.0 {
                    let k = b.fc_lp.index.units.iter().position(|&u| u == unit).expect("unit");
                    worst = (err, Some((w, k, t, g)));
                }
            }
        }
    }
    worst.1
}

fn run(
    milp: &SingleLevelMilp,
    inst: &MarketInstance,
    scenarios: &[Scenario],
    opts: &SolveOptions,
    start: Option<Vec<f64>>,
) -> Result<Result<lpmilp::MilpSolution, MilpStatus>, BuildError> {
    let mut start = start;
    let mut mopts = MilpOptions {
        rel_gap: opts.rel_gap,
        time_limit: opts.time_limit,
        node_limit: opts.node_limit,
        ..Default::default()
    };
    if opts.heuristic || start.is_some() {
        let use_clearing = opts.heuristic;
        mopts.heuristic = Some(Box::new(move |relax: &[f64]| {
            if let Some(s) = start.take() {
                return Some(s);
            }
            if !use_clearing {
                return None;
            }
            let (bids, up, down) = rounded_upper(milp, inst, relax);
            assemble_point(milp, inst, scenarios, &bids, &up, &down)
        }));
    }
    let sol = solve_milp(&milp.mip, mopts).map_err(|e| BuildError::Solver(e.to_string()))?;
    Ok(if sol.has_incumbent() { Ok(sol) } else { Err(sol.status) })
}

fn product_error(milp: &SingleLevelMilp, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (w, b) in milp.blocks.iter().enumerate() {
        for (i, r) in b.fc_lp.model.rows.iter().enumerate() {
            if let (Some((p, _)), Some(e)) = (r.param, b.fc.product[i]) {
                let g = x[milp.param_col(w, p)];
                worst = worst.max((x[e] - g * x[b.fc.y[i]]).abs());
            }
        }
    }
    worst
}

fn fill_products(milp: &SingleLevelMilp, x: &mut [f64]) {
    for (w, b) in milp.blocks.iter().enumerate() {
        for (i, r) in b.fc_lp.model.rows.iter().enumerate() {
            if let (Some((p, _)), Some(e)) = (r.param, b.fc.product[i]) {
                x[e] = x[milp.param_col(w, p)] * x[b.fc.y[i]];
            }
        }
    }
}

/// Replaces the embedded duals by the smallest ones consistent with the
/// embedded primal point and prices. Degenerate rows otherwise leave the
/// solver free to park duals at their big-M bound.
fn tidy_duals(milp: &SingleLevelMilp, inst: &MarketInstance, scenarios: &[Scenario], x: &mut [f64]) {
    let before = milp.mip.lp.objective_value(x);
    let mut trial = x.to_vec();
    let (bids, _, _) = rounded_upper(milp, inst, x);
    let cols = milp.mip.lp.cols();
    for (w, scen) in scenarios.iter().enumerate() {
        let b = &milp.blocks[w];
        let Ok(da_lp) = build_da_lp(inst, &bids, scen) else {
            return;
        };
        let dx: Vec<f64> = b.da.x.iter().map(|&j| x[j]).collect();
        let out = DaOutcome {
            offer: da_lp.offer_dispatch(&as_result(&dx, &[])),
            dispatch: non_strategic_units(inst)
                .into_iter()
                .map(|u| (0..inst.horizon).map(|t| dx[da_lp.g(u, t)]).collect())
                .collect(),
        };
        let Ok(fc_lp) = build_fcrn_lp(inst, &bids, &out, scen) else {
            return;
        };
        // Strategic revenue per market as a combination of price duals.
        let st = inst.strategic();
        let mut da_combo = Vec::new();
        let mut fc_combo = Vec::new();
        for (o, &h) in st.iter().enumerate() {
            let node = inst.hydro_plants[h].node;
            for t in 0..inst.horizon {
                let pd: f64 = (0..inst.segments).map(|s| x[b.da.x[da_lp.index.p[o][s][t]]]).sum();
                let pf: f64 = (0..inst.segments).map(|s| x[b.fc.x[fc_lp.index.p[o][s][t]]]).sum();
                da_combo.push((da_lp.index.balance[node][t], pd));
                fc_combo.push((fc_lp.index.balance[t], pf));
            }
        }
        for (model, blk, combo) in [(&da_lp.model, &b.da, da_combo), (&fc_lp.model, &b.fc, fc_combo)] {
            let px: Vec<f64> = blk.x.iter().map(|&j| x[j]).collect();
            let py: Vec<f64> = blk.y.iter().map(|&j| x[j]).collect();
            let bound: Vec<f64> = blk.y.iter().map(|&j| cols[j].upper).collect();
            let at_bound = |v: &[f64]| v.iter().zip(&bound).any(|(y, m)| y.abs() >= (1.0 - 1e-4) * m);
            let Some(mut ny) = model.minimal_duals(&px, &py, |r| r.family.is_price(), &bound, 1e-9, &[], 0.0) else {
                return;
            };
            if at_bound(&ny) {
                // Prices themselves are degenerate; keep only the revenue.
                let value: f64 = combo.iter().map(|&(i, a)| a * py[i]).sum();
                if let Some(v) = model.minimal_duals(&px, &py, |_| false, &bound, 1e-9, &combo, value) {
                    ny = v;
                }
            }
            for (i, r) in model.rows.iter().enumerate() {
                trial[blk.y[i]] = ny[i];
                if let Some(z) = blk.z[i] {
                    if ny[i] > 0.0 {
                        trial[z] = 1.0;
                    } else if model.activity(r, &px) - r.rhs > 1e-9 {
                        trial[z] = 0.0;
                    }
                }
            }
        }
    }
    fill_products(milp, &mut trial);
    let after = milp.mip.lp.objective_value(&trial);
    let feasible = check_candidate(&milp.mip, &trial, 1e-9, 1e-6).is_some();
    if feasible && (after - before).abs() <= 1e-7 * (1.0 + before.abs()) {
        x.copy_from_slice(&trial);
    } else {
        log::debug!("dual cleanup rejected: feasible={feasible}, objective {before} -> {after}");
    }
}

/// Upper-level values read from a (possibly fractional) MILP point and made
/// admissible: clamped to bounds, prices made monotone, DA volume capped.
fn rounded_upper(
    milp: &SingleLevelMilp,
    inst: &MarketInstance,
    x: &[f64],
) -> (BidSet, Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) {
    let cols = milp.mip.lp.cols();
    let val = |j: usize| x[j].clamp(cols[j].lower, cols[j].upper);
    let up = &milp.upper;
    let read = |g: &Vec<Vec<Vec<usize>>>| -> Vec<Vec<Vec<f64>>> {
        g.iter()
            .map(|s| s.iter().map(|t| t.iter().map(|&j| val(j)).collect()).collect())
            .collect()
    };
    let mut bids = BidSet {
        da_price: read(&up.da_price),
        da_volume: read(&up.da_volume),
        fc_price: read(&up.fc_price),
        fc_volume: read(&up.fc_volume),
    };
    for (o, &h) in inst.strategic().iter().enumerate() {
        let pmax = inst.hydro_plants[h].max_power;
        for t in 0..inst.horizon {
            for s in 1..inst.segments {
                for p in [&mut bids.da_price, &mut bids.fc_price] {
                    p[o][s][t] = p[o][s][t].max(p[o][s - 1][t]);
                }
            }
            let total: f64 = (0..inst.segments).map(|s| bids.da_volume[o][s][t]).sum();
            if total > pmax {
                for s in 0..inst.segments {
                    bids.da_volume[o][s][t] *= pmax / total;
                }
            }
        }
    }
    (bids, read(&up.id_up), read(&up.id_down))
}

/// A full MILP point for fixed upper-level decisions: clear both markets,
/// then match strategic discharge to the cleared volume plus ID trades.
/// `None` when the decisions cannot be completed to a feasible point.
pub fn assemble_point(
    milp: &SingleLevelMilp,
    inst: &MarketInstance,
    scenarios: &[Scenario],
    bids: &BidSet,
    id_up: &[Vec<Vec<f64>>],
    id_down: &[Vec<Vec<f64>>],
) -> Option<Vec<f64>> {
    let lp = &milp.mip.lp;
    let mut x = vec![0.0; lp.num_cols()];
    let up = &milp.upper;
    let st = inst.strategic();
    let nt = inst.horizon;
    for o in 0..st.len() {
        for s in 0..inst.segments {
            for t in 0..nt {
                x[up.da_price[o][s][t]] = bids.da_price[o][s][t];
                x[up.da_volume[o][s][t]] = bids.da_volume[o][s][t];
                x[up.fc_price[o][s][t]] = bids.fc_price[o][s][t];
                x[up.fc_volume[o][s][t]] = bids.fc_volume[o][s][t];
            }
        }
    }
    for (w, scen) in scenarios.iter().enumerate() {
        let b = &milp.blocks[w];
        let da_lp = build_da_lp(inst, bids, scen).ok()?;
        let r = clear_da(&da_lp);
        if !r.is_optimal() {
            return None;
        }
        let mut dx = r.x.clone();
        let ix = &da_lp.index;
        for (o, &h) in st.iter().enumerate() {
            let has_downstream = inst.cascade.links().iter().any(|l| l.upstream == h);
            for t in 0..nt {
                let cleared: f64 = (0..inst.segments).map(|s| dx[ix.p[o][s][t]]).sum();
                let mut iu = id_up[w][o][t];
                let mut idn = id_down[w][o][t];
                if has_downstream {
                    // Keep the clearing's discharge; absorb the difference in ID.
                    let prod: f64 = inst.hydro_plants[h]
                        .segments
                        .iter()
                        .enumerate()
                        .map(|(k, sg)| sg.prod_equiv * dx[ix.q[h][k][t]])
                        .sum();
                    let net = prod - cleared;
                    iu = net.max(0.0);
                    idn = (-net).max(0.0);
                } else {
                    let mut need = cleared + iu - idn;
                    for (k, sg) in inst.hydro_plants[h].segments.iter().enumerate() {
                        let q = (need / sg.prod_equiv).clamp(sg.q_min, sg.q_max);
                        dx[ix.q[h][k][t]] = q;
                        need -= q * sg.prod_equiv;
                    }
                    if need.abs() > 1e-9 {
                        return None;
                    }
                }
                x[up.id_up[w][o][t]] = iu;
                x[up.id_down[w][o][t]] = idn;
            }
            if !has_downstream {
                restate_content(inst, scen, &da_lp, &mut dx, h);
            }
        }
        let out = DaOutcome {
            offer: da_lp.offer_dispatch(&crate::lower::ClearingResult {
                x: dx.clone(),
                ..r.clone()
            }),
            dispatch: non_strategic_units(inst)
                .into_iter()
                .map(|u| (0..nt).map(|t| dx[da_lp.g(u, t)]).collect())
                .collect(),
        };
        let fc_lp = build_fcrn_lp(inst, bids, &out, scen).ok()?;
        let fr = clear_fcrn(&fc_lp);
        if !fr.is_optimal() {
            return None;
        }
        for (model, blk, px, py) in [(&da_lp.model, &b.da, &dx, &r.y), (&fc_lp.model, &b.fc, &fr.x, &fr.y)] {
            for (j, &v) in px.iter().enumerate() {
                x[blk.x[j]] = v;
            }
            for (i, row) in model.rows.iter().enumerate() {
                let y = py[i];
                x[blk.y[i]] = y;
                if let Some(z) = blk.z[i] {
                    let slack = model.activity(row, px) - row.rhs;
                    x[z] = if y > 1e-9 || slack.abs() <= 1e-9 && y > 0.0 {
                        1.0
                    } else {
                        0.0
                    };
                    if x[z] == 0.0 {
                        x[blk.y[i]] = 0.0;
                    }
                }
            }
        }
        for (i, r) in b.fc_lp.model.rows.iter().enumerate() {
            if let (Some((p, _)), Some(e)) = (r.param, b.fc.product[i]) {
                x[e] = x[milp.param_col(w, p)] * x[b.fc.y[i]];
            }
        }
    }
    if check_candidate(&milp.mip, &x, 1e-9, 1e-6).is_none() {
        if log::log_enabled!(log::Level::Debug) || std::env::var_os("HYDROBID_DEBUG").is_some() {
            let act = lp.row_activity(&x);
            for (row, a) in lp.rows().iter().zip(&act) {
                if *a < row.lower - 1e-6 || *a > row.upper + 1e-6 {
                    eprintln!("violated {} {} [{}, {}]", row.name, a, row.lower, row.upper);
                }
            }
        }
        return None;
    }
    Some(x)
}

/// Recomputes a station's reservoir trajectory after its discharge changed.
fn restate_content(inst: &MarketInstance, scen: &Scenario, da: &crate::da::DaLp, x: &mut [f64], h: usize) {
    let ix = &da.index;
    let mut prev = scen.initial_content[h];
    for t in 0..inst.horizon {
        let mut inflow = scen.inflow[h][t];
        for j in inst.cascade.upstream_of(h) {
            let tau = inst.cascade.delay(j);
            if t >= tau {
                inflow += ix.q[j].iter().map(|qk| x[qk[t - tau]]).sum::<f64>() + x[ix.spill[j][t - tau]];
            } else {
                inflow += inst.hydro_plants[j].historical_release;
            }
        }
        let out: f64 = ix.q[h].iter().map(|qk| x[qk[t]]).sum::<f64>() + x[ix.spill[h][t]];
        prev = prev + inflow - out;
        x[ix.content[h][t]] = prev;
    }
}

fn read_solution(
    inst: &MarketInstance,
    scenarios: &[Scenario],
    milp: SingleLevelMilp,
    x: Vec<f64>,
    status: MilpStatus,
    nodes: usize,
    polished: bool,
) -> Result<BilevelSolution, BuildError> {
    let up = &milp.upper;
    let read = |g: &Vec<Vec<Vec<usize>>>| -> Vec<Vec<Vec<f64>>> {
        g.iter()
            .map(|s| s.iter().map(|t| t.iter().map(|&j| x[j]).collect()).collect())
            .collect()
    };
    let bids = BidSet {
        da_price: read(&up.da_price),
        da_volume: read(&up.da_volume),
        fc_price: read(&up.fc_price),
        fc_volume: read(&up.fc_volume),
    };
    let id_up = read(&up.id_up);
    let id_down = read(&up.id_down);
    let units = non_strategic_units(inst);
    let st = inst.strategic();
    let nt = inst.horizon;
    let mut sol = BilevelSolution {
        status,
        bids,
        id_up,
        id_down,
        objective: milp.mip.lp.objective_value(&x),
        objective_bilinear: 0.0,
        bound: f64::NAN,
        da_prices: Vec::new(),
        fc_prices: Vec::new(),
        e_headroom: Vec::new(),
        e_coupling: Vec::new(),
        revenue: Vec::new(),
        lower: Vec::new(),
        nodes,
        polished,
        bigm_hits: Vec::new(),
        milp: milp.clone(),
        x: x.clone(),
    };
    let cols = milp.mip.lp.cols();
    for (w, (b, scen)) in milp.blocks.iter().zip(scenarios).enumerate() {
        let lv = LowerValues {
            da_x: b.da.x.iter().map(|&j| x[j]).collect(),
            da_y: b.da.y.iter().map(|&j| x[j]).collect(),
            fc_x: b.fc.x.iter().map(|&j| x[j]).collect(),
            fc_y: b.fc.y.iter().map(|&j| x[j]).collect(),
        };
        for blk in [&b.da, &b.fc] {
            for &j in &blk.y {
                let m = cols[j].upper;
                if x[j].abs() >= (1.0 - 1e-4) * m {
                    sol.bigm_hits.push(cols[j].name.clone());
                }
            }
        }
        let prices = b.da_lp.prices(&as_result(&lv.da_x, &lv.da_y));
        let fc_prices = b.fc_lp.prices(&as_result(&lv.fc_x, &lv.fc_y));
        let mut eh = vec![vec![0.0; nt]; units.len()];
        let mut ec = vec![vec![0.0; nt]; units.len()];
        for (i, r) in b.fc_lp.model.rows.iter().enumerate() {
            if let (Some((Param::DaDispatch { unit, t }, coef)), Some(e)) = (r.param, b.fc.product[i]) {
                let k = units.iter().position(|&u| u == unit).expect("unit");
                if coef > 0.0 {
                    eh[k][t] = x[e];
                } else {
                    ec[k][t] = x[e];
                }
            }
        }
        let mut rev = Revenue::default();
        let weights = inst.cascade.downstream_weights(&scen.future_prod_equiv);
        for (o, &h) in st.iter().enumerate() {
            let node = inst.hydro_plants[h].node;
            for t in 0..nt {
                for s in 0..inst.segments {
                    rev.da += lv.da_x[b.da_lp.index.p[o][s][t]] * prices[node][t];
                    rev.fc += lv.fc_x[b.fc_lp.index.p[o][s][t]] * fc_prices[t];
                }
                rev.id += scen.id_price_up[o][t] * sol.id_up[w][o][t] - scen.id_price_down[o][t] * sol.id_down[w][o][t];
            }
            rev.water += scen.future_price * weights[h] * lv.da_x[b.da_lp.index.content[h][nt - 1]];
        }
        sol.objective_bilinear += scen.probability * rev.total();
        sol.revenue.push(rev);
        sol.da_prices.push(prices);
        sol.fc_prices.push(fc_prices);
        sol.e_headroom.push(eh);
        sol.e_coupling.push(ec);
        sol.lower.push(lv);
    }
    Ok(sol)
}

fn as_result(x: &[f64], y: &[f64]) -> crate::lower::ClearingResult {
    crate::lower::ClearingResult {
        status: lpmilp::LpStatus::Optimal,
        objective: f64::NAN,
        x: x.to_vec(),
        y: y.to_vec(),
    }
}

/// One strategic station's offer curves in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct BidCurve {
    pub station: String,
    pub period: usize,
    pub da: Vec<Step>,
    pub fc: Vec<Step>,
}

pub fn extract_bids(inst: &MarketInstance, sol: &BilevelSolution) -> Vec<BidCurve> {
    let mut out = Vec::new();
    for (o, &h) in inst.strategic().iter().enumerate() {
        for t in 0..inst.horizon {
            let clean = |mut v: Vec<Step>| {
                v.retain(|s| s.volume > 1e-9);
                v
            };
            out.push(BidCurve {
                station: inst.hydro_plants[h].name.clone(),
                period: t,
                da: clean(sol.bids.curve(o, t, Market::Da)),
                fc: clean(sol.bids.curve(o, t, Market::Fc)),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct ReclearCheck {
    /// |re-cleared objective - objective of the embedded point|, per market.
    pub da_objective_gap: f64,
    pub fc_objective_gap: f64,
    /// Worst KKT residual of the embedded point in the re-built LPs.
    pub da_kkt: f64,
    pub fc_kkt: f64,
    /// Largest price difference to the re-cleared LP; informational, since
    /// degenerate LPs admit several price vectors.
    pub da_price_diff: f64,
    pub fc_price_diff: f64,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub objective: f64,
    pub objective_bilinear: f64,
    pub objective_gap: f64,
    pub objective_tol: f64,
    pub reclear: Vec<ReclearCheck>,
    /// Largest (slack x dual) / ((1 + |slack|)(1 + |dual|)) over all pairs.
    pub complementarity: f64,
    /// Products whose McCormick envelope was not tight at the solution.
    pub inexact_products: Vec<String>,
    pub bigm_hits: Vec<String>,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const RECLEAR_TOL: f64 = 1e-6;

pub fn verify_reformulation(inst: &MarketInstance, scenarios: &[Scenario], sol: &BilevelSolution) -> VerifyReport {
    verify_point(inst, scenarios, sol, &sol.lower)
}

/// Checks `lower` (normally `sol.lower`) as the lower-level response to the
/// solution's bids.
pub fn verify_point(
    inst: &MarketInstance,
    scenarios: &[Scenario],
    sol: &BilevelSolution,
    lower: &[LowerValues],
) -> VerifyReport {
    let mut rep = VerifyReport {
        objective: sol.objective,
        objective_bilinear: sol.objective_bilinear,
        objective_gap: (sol.objective - sol.objective_bilinear).abs(),
        objective_tol: 1e-5 * (1.0 + sol.objective.abs()),
        bigm_hits: sol.bigm_hits.clone(),
        ..Default::default()
    };
    if rep.objective_gap > rep.objective_tol {
        rep.failures.push(format!(
            "linear objective {} differs from bilinear {}",
            sol.objective, sol.objective_bilinear
        ));
    }
    if !sol.bigm_hits.is_empty() {
        rep.failures
            .push(format!("duals at big-M bound, raise BigMConfig: {:?}", sol.bigm_hits));
    }
    let units = non_strategic_units(inst);
    for (w, (scen, lv)) in scenarios.iter().zip(lower).enumerate() {
        let mut chk = ReclearCheck::default();
        let Ok(da_lp) = build_da_lp(inst, &sol.bids, scen) else {
            rep.failures.push(format!("scenario {w}: bids rejected by DA model"));
            continue;
        };
        let r = clear_da(&da_lp);
        if !r.is_optimal() {
            rep.failures
                .push(format!("scenario {w}: DA re-clearing {:?}", r.status));
            continue;
        }
        let emb = as_result(&lv.da_x, &lv.da_y);
        chk.da_objective_gap = (r.objective - da_lp.model.primal_objective(&lv.da_x)).abs();
        chk.da_kkt = da_lp.model.kkt_residuals(&lv.da_x, &lv.da_y).max();
        chk.da_price_diff = max_diff(da_lp.prices(&r).concat(), da_lp.prices(&emb).concat());
        rep.complementarity = rep.complementarity.max(scaled_compl(&da_lp.model, &lv.da_x, &lv.da_y));

        let out = DaOutcome {
            offer: da_lp.offer_dispatch(&emb),
            dispatch: units
                .iter()
                .map(|&u| (0..inst.horizon).map(|t| lv.da_x[da_lp.g(u, t)]).collect())
                .collect(),
        };
        let Ok(fc_lp) = build_fcrn_lp(inst, &sol.bids, &out, scen) else {
            rep.failures
                .push(format!("scenario {w}: FCR-N model rejected the DA outcome"));
            continue;
        };
        let fr = clear_fcrn(&fc_lp);
        if !fr.is_optimal() {
            rep.failures
                .push(format!("scenario {w}: FCR-N re-clearing {:?}", fr.status));
            continue;
        }
        let femb = as_result(&lv.fc_x, &lv.fc_y);
        chk.fc_objective_gap = (fr.objective - fc_lp.model.primal_objective(&lv.fc_x)).abs();
        chk.fc_kkt = fc_lp.model.kkt_residuals(&lv.fc_x, &lv.fc_y).max();
        chk.fc_price_diff = max_diff(fc_lp.prices(&fr), fc_lp.prices(&femb));
        rep.complementarity = rep.complementarity.max(scaled_compl(&fc_lp.model, &lv.fc_x, &lv.fc_y));

        let da_tol = RECLEAR_TOL * (1.0 + r.objective.abs());
        let fc_tol = RECLEAR_TOL * (1.0 + fr.objective.abs());
        for (what, v, tol) in [
            ("DA objective", chk.da_objective_gap, da_tol),
            ("FCR-N objective", chk.fc_objective_gap, fc_tol),
            ("DA KKT residual", chk.da_kkt, RECLEAR_TOL),
            ("FCR-N KKT residual", chk.fc_kkt, RECLEAR_TOL),
        ] {
            if !(v <= tol) {
                rep.failures.push(format!("scenario {w}: {what} {v:e} above {tol:e}"));
            }
        }

        let b = &sol.milp.blocks[w];
        for (i, r) in b.fc_lp.model.rows.iter().enumerate() {
            if let (Some((p, _)), Some(e)) = (r.param, b.fc.product[i]) {
                let g = sol.x[sol.milp.param_col(w, p)];
                if (sol.x[e] - g * lv.fc_y[i]).abs() > 1e-6 * (1.0 + (g * lv.fc_y[i]).abs()) {
                    rep.inexact_products.push(format!("scenario {w}: {}", r.name));
                }
            }
        }
        rep.reclear.push(chk);
    }
    if !rep.inexact_products.is_empty() {
        rep.failures
            .push(format!("McCormick products not exact: {:?}", rep.inexact_products));
    }
    if rep.complementarity > 1e-6 {
        rep.failures
            .push(format!("complementarity {:e} above 1e-6", rep.complementarity));
    }
    rep
}

fn max_diff(a: Vec<f64>, b: Vec<f64>) -> f64 {
    a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn scaled_compl(model: &crate::lower::LowerModel, x: &[f64], y: &[f64]) -> f64 {
    model
        .rows
        .iter()
        .zip(y)
        .filter(|(r, _)| r.kind == RowKind::Ge)
        .map(|(r, &yi)| {
            let s = model.activity(r, x) - r.rhs;
            (s * yi).abs() / ((1.0 + s.abs()) * (1.0 + yi.abs()))
        })
        .fold(0.0, f64::max)
}
