//! Single-level MILP for the strategic producer: upper-level constraints plus,
//! per scenario, both clearing LPs replaced by their KKT systems.
//!
//! Complementarity uses one binary per `>=` row. The revenue is written
//! through the lower-level duality identity, which leaves only products of
//! non-strategic DA dispatch with FCR-N headroom/coupling duals; those get
//! McCormick columns.

use lpmilp::{LinearProgram, MixedIntegerProgram, Sense};

use crate::bids::BidSet;
use crate::da::{build_da_lp, DaLp};
use crate::fcrn::{build_fcrn_lp, DaOutcome, FcrnLp};
use crate::instance::{fcrn_requirement, validate_instance, validate_scenarios, MarketInstance, Scenario};
use crate::lower::{Family, LowerModel, Param, RowKind};
use crate::mccormick::mccormick_envelope;
use crate::BuildError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigMConfig {
    /// Bound on every lower-level dual except the two below.
    pub dual: f64,
    /// Bound on FCR-N headroom duals.
    pub headroom_dual: f64,
    /// Bound on FCR-N dispatch-coupling duals.
    pub coupling_dual: f64,
    /// Multiplier (>= 1) on the slack bounds derived from column boxes.
    pub slack_scale: f64,
}

impl BigMConfig {
    pub fn for_instance(inst: &MarketInstance) -> Self {
        let cap = price_ceiling(inst);
        let mu = inst
            .hydro_plants
            .iter()
            .flat_map(|p| p.segments.iter().map(|s| s.prod_equiv))
            .fold(1.0_f64, f64::max);
        let m = 4.0 * cap * mu;
        Self {
            dual: m,
            headroom_dual: m,
            coupling_dual: m,
            slack_scale: 1.0,
        }
    }

    pub fn validate(&self, inst: &MarketInstance) -> Result<(), BuildError> {
        let cap = price_ceiling(inst);
        for (name, v) in [
            ("dual", self.dual),
            ("headroom_dual", self.headroom_dual),
            ("coupling_dual", self.coupling_dual),
        ] {
            if !(v.is_finite() && v > 0.0 && v >= cap) {
                return Err(BuildError::Dimension(format!(
                    "big-M {name} = {v} is below the price ceiling {cap}"
                )));
            }
        }
        if !(self.slack_scale >= 1.0) {
            return Err(BuildError::Dimension("slack_scale must be >= 1".into()));
        }
        Ok(())
    }
}

/// Largest price any market can clear at: the scarcity caps, or the largest
/// admissible bid price when a market has no cap.
fn price_ceiling(inst: &MarketInstance) -> f64 {
    let bb = &inst.bid_bounds;
    let max3 = |v: &Vec<Vec<Vec<f64>>>| v.iter().flatten().flatten().copied().fold(0.0_f64, f64::max);
    let da = inst.da_price_cap.unwrap_or_else(|| max3(&bb.da_max));
    let fc = inst.fc_price_cap.unwrap_or_else(|| max3(&bb.fc_max));
    let th = inst.thermal_units.iter().map(|u| u.cost_da).fold(0.0_f64, f64::max);
    da.max(fc).max(th)
}

/// Offers at the lower price bounds with zero volume; used to lay out the
/// lower-level structure, which does not depend on the offer values.
pub fn nominal_bids(inst: &MarketInstance) -> BidSet {
    let mut b = BidSet::zeros(inst.strategic().len(), inst.segments, inst.horizon);
    b.da_price = inst.bid_bounds.da_min.clone();
    b.fc_price = inst.bid_bounds.fc_min.clone();
    b
}

/// MILP columns of the upper-level decisions.
#[derive(Debug, Clone, Default)]
pub struct UpperIndex {
    /// `[strategic][segment][period]`
    pub da_price: Vec<Vec<Vec<usize>>>,
    pub da_volume: Vec<Vec<Vec<usize>>>,
    pub fc_price: Vec<Vec<Vec<usize>>>,
    pub fc_volume: Vec<Vec<Vec<usize>>>,
    /// `[scenario][strategic][period]`: ID sale and purchase.
    pub id_up: Vec<Vec<Vec<usize>>>,
    pub id_down: Vec<Vec<Vec<usize>>>,
}

/// MILP columns standing for one lower-level LP.
#[derive(Debug, Clone, Default)]
pub struct LowerBlock {
    /// One per lower column.
    pub x: Vec<usize>,
    /// One per lower row.
    pub y: Vec<usize>,
    /// Complementarity binary per `>=` row whose slack can be positive.
    pub z: Vec<Option<usize>>,
    /// Product column per row whose right-hand side depends on DA dispatch.
    pub product: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct ScenarioBlock {
    pub da_lp: DaLp,
    pub fc_lp: FcrnLp,
    pub da: LowerBlock,
    pub fc: LowerBlock,
}

#[derive(Debug, Clone)]
pub struct SingleLevelMilp {
    pub mip: MixedIntegerProgram,
    pub upper: UpperIndex,
    pub blocks: Vec<ScenarioBlock>,
    pub bigm: BigMConfig,
}

impl SingleLevelMilp {
    /// MILP column holding a parameter's value in scenario `w`.
    pub fn param_col(&self, w: usize, p: Param) -> usize {
        param_col(&self.upper, &self.blocks[w], p)
    }
}

fn param_col(up: &UpperIndex, b: &ScenarioBlock, p: Param) -> usize {
    match p {
        Param::DaBidPrice { st, seg, t } => up.da_price[st][seg][t],
        Param::DaBidVolume { st, seg, t } => up.da_volume[st][seg][t],
        Param::FcBidPrice { st, seg, t } => up.fc_price[st][seg][t],
        Param::FcBidVolume { st, seg, t } => up.fc_volume[st][seg][t],
        Param::DaOffer { st, seg, t } => b.da.x[b.da_lp.index.p[st][seg][t]],
        Param::DaDispatch { unit, t } => b.da.x[b.da_lp.g(unit, t)],
    }
}

/// Upper-level decision columns and the constraints that only involve them
/// and scenario-independent data: bid bounds, monotone curves and the
/// offered DA volume limit.
pub fn build_upper_constraints(
    inst: &MarketInstance,
    scenarios: &[Scenario],
    lp: &mut LinearProgram,
) -> Result<UpperIndex, BuildError> {
    let st = inst.strategic();
    if st.is_empty() {
        return Err(BuildError::Dimension("no strategic station".into()));
    }
    let (nb, nt) = (inst.segments, inst.horizon);
    let bb = &inst.bid_bounds;
    let mut up = UpperIndex::default();
    for (o, &h) in st.iter().enumerate() {
        let pmax = inst.hydro_plants[h].max_power;
        let grid =
            |lp: &mut LinearProgram, tag: &str, lo: &dyn Fn(usize, usize) -> f64, hi: &dyn Fn(usize, usize) -> f64| {
                (0..nb)
                    .map(|s| {
                        (0..nt)
                            .map(|t| lp.add_col(format!("{tag}[{o}][{s}][{t}]"), lo(s, t), hi(s, t), 0.0))
                            .collect()
                    })
                    .collect::<Vec<Vec<usize>>>()
            };
        up.da_price
            .push(grid(lp, "b_da", &|s, t| bb.da_min[o][s][t], &|s, t| bb.da_max[o][s][t]));
        up.da_volume.push(grid(lp, "pb_da", &|_, _| 0.0, &|_, _| pmax));
        up.fc_price
            .push(grid(lp, "b_fc", &|s, t| bb.fc_min[o][s][t], &|s, t| bb.fc_max[o][s][t]));
        up.fc_volume.push(grid(lp, "pb_fc", &|_, _| 0.0, &|_, _| pmax));
        for t in 0..nt {
            for s in 1..nb {
                for (tag, cols) in [("mono_da", &up.da_price[o]), ("mono_fc", &up.fc_price[o])] {
                    lp.add_row(
                        format!("{tag}[{o}][{s}][{t}]"),
                        0.0,
                        f64::INFINITY,
                        [(cols[s][t], 1.0), (cols[s - 1][t], -1.0)],
                    );
                }
            }
            let vols: Vec<(usize, f64)> = (0..nb).map(|s| (up.da_volume[o][s][t], 1.0)).collect();
            lp.add_row(format!("offer_cap[{o}][{t}]"), f64::NEG_INFINITY, pmax, vols);
        }
    }
    for w in 0..scenarios.len() {
        let mut ups = Vec::new();
        let mut downs = Vec::new();
        for (o, &h) in st.iter().enumerate() {
            let lim = inst.id_limit(h);
            ups.push(
                (0..nt)
                    .map(|t| lp.add_col(format!("id_up[{w}][{o}][{t}]"), 0.0, lim, 0.0))
                    .collect(),
            );
            downs.push(
                (0..nt)
                    .map(|t| lp.add_col(format!("id_down[{w}][{o}][{t}]"), 0.0, lim, 0.0))
                    .collect(),
            );
        }
        up.id_up.push(ups);
        up.id_down.push(downs);
    }
    // Capacity envelopes and the FCR-N floor use scenario ID trades and
    // frequency deviation.
    for (w, scen) in scenarios.iter().enumerate() {
        for (o, &h) in st.iter().enumerate() {
            let p = &inst.hydro_plants[h];
            for t in 0..nt {
                let id = [(up.id_up[w][o][t], 1.0), (up.id_down[w][o][t], -1.0)];
                let mut hi: Vec<(usize, f64)> = id.to_vec();
                let mut lo: Vec<(usize, f64)> = id.to_vec();
                let mut fc = Vec::new();
                for s in 0..nb {
                    hi.push((up.da_volume[o][s][t], 1.0));
                    hi.push((up.fc_volume[o][s][t], 1.0));
                    lo.push((up.da_volume[o][s][t], 1.0));
                    lo.push((up.fc_volume[o][s][t], -1.0));
                    fc.push((up.fc_volume[o][s][t], 1.0));
                }
                lp.add_row(format!("cap_hi[{w}][{o}][{t}]"), f64::NEG_INFINITY, p.max_power, hi);
                lp.add_row(format!("cap_lo[{w}][{o}][{t}]"), 0.0, f64::INFINITY, lo);
                let floor = fcrn_requirement(p.max_power, scen.freq_dev[t], p.droop)?;
                if floor > 0.0 {
                    lp.add_row(format!("fc_floor[{w}][{o}][{t}]"), floor, f64::INFINITY, fc);
                }
            }
        }
    }
    Ok(up)
}

/// Assembles the single-level MILP.
pub fn build_single_level_milp(
    inst: &MarketInstance,
    scenarios: &[Scenario],
    bigm: &BigMConfig,
) -> Result<SingleLevelMilp, BuildError> {
    build_milp(inst, scenarios, bigm, None)
}

/// Bounds on non-strategic DA dispatch, `[scenario][unit position][period]`
/// with units in `non_strategic_units` order. Narrowing a box tightens the
/// McCormick envelopes on it; a point box makes them exact.
pub type DispatchBox = Vec<Vec<Vec<(f64, f64)>>>;

pub(crate) fn build_milp(
    inst: &MarketInstance,
    scenarios: &[Scenario],
    bigm: &BigMConfig,
    dispatch_box: Option<&DispatchBox>,
) -> Result<SingleLevelMilp, BuildError> {
    let mut v = validate_instance(inst);
    v.extend(validate_scenarios(inst, scenarios));
    if !v.is_empty() {
        return Err(BuildError::Invalid(v));
    }
    bigm.validate(inst)?;
    let mut lp = LinearProgram::new(format!("{}_bilevel", inst.name), Sense::Maximize);
    let upper = build_upper_constraints(inst, scenarios, &mut lp)?;
    let mut mip_binaries = Vec::new();
    let nominal = nominal_bids(inst);
    let st = inst.strategic();
    let nt = inst.horizon;
    let mut blocks = Vec::new();

    for (w, scen) in scenarios.iter().enumerate() {
        let da_lp = build_da_lp(inst, &nominal, scen)?;
        let zero = DaOutcome {
            offer: vec![vec![vec![0.0; nt]; inst.segments]; st.len()],
            dispatch: vec![vec![0.0; nt]; crate::da::non_strategic_units(inst).len()],
        };
        let fc_lp = build_fcrn_lp(inst, &nominal, &zero, scen)?;
        let mut block = ScenarioBlock {
            da_lp,
            fc_lp,
            da: LowerBlock::default(),
            fc: LowerBlock::default(),
        };
        block.da = add_columns(&mut lp, &block.da_lp.model, &format!("da{w}"));
        if let Some(bx) = dispatch_box {
            for (k, &unit) in block.fc_lp.index.units.iter().enumerate() {
                for t in 0..nt {
                    let j = block.da.x[block.da_lp.g(unit, t)];
                    let (lo, hi) = bx[w][k][t];
                    lp.set_bounds(j, lo, hi);
                }
            }
        }
        block.fc = add_columns(&mut lp, &block.fc_lp.model, &format!("fc{w}"));
        let weight = scen.probability;
        let (y, z, e) = add_kkt(
            &mut lp,
            &block.da_lp.model,
            &block.da,
            &|p| param_col(&upper, &block, p),
            bigm,
            &format!("da{w}"),
            &mut mip_binaries,
        )?;
        (block.da.y, block.da.z, block.da.product) = (y, z, e);
        add_revenue(&mut lp, &block.da_lp.model, &block.da, weight);
        let (y, z, e) = add_kkt(
            &mut lp,
            &block.fc_lp.model,
            &block.fc,
            &|p| param_col(&upper, &block, p),
            bigm,
            &format!("fc{w}"),
            &mut mip_binaries,
        )?;
        (block.fc.y, block.fc.z, block.fc.product) = (y, z, e);
        add_revenue(&mut lp, &block.fc_lp.model, &block.fc, weight);

        // Production balance with ID trades, strategic water value, ID revenue.
        let weights = inst.cascade.downstream_weights(&scen.future_prod_equiv);
        let ix = &block.da_lp.index;
        for (o, &h) in st.iter().enumerate() {
            let p = &inst.hydro_plants[h];
            for t in 0..nt {
                let mut coeffs: Vec<(usize, f64)> = p
                    .segments
                    .iter()
                    .enumerate()
                    .map(|(k, seg)| (block.da.x[ix.q[h][k][t]], seg.prod_equiv))
                    .collect();
                for s in 0..inst.segments {
                    coeffs.push((block.da.x[ix.p[o][s][t]], -1.0));
                }
                coeffs.push((upper.id_up[w][o][t], -1.0));
                coeffs.push((upper.id_down[w][o][t], 1.0));
                lp.add_row(format!("production[{w}][{o}][{t}]"), 0.0, 0.0, coeffs);
                add_cost(&mut lp, upper.id_up[w][o][t], weight * scen.id_price_up[o][t]);
                add_cost(&mut lp, upper.id_down[w][o][t], -weight * scen.id_price_down[o][t]);
            }
            let m_last = block.da.x[ix.content[h][nt - 1]];
            add_cost(&mut lp, m_last, weight * scen.future_price * weights[h]);
        }
        blocks.push(block);
    }

    let mut mip = MixedIntegerProgram::new(lp);
    for j in mip_binaries {
        mip.mark_binary(j);
    }
    Ok(SingleLevelMilp {
        mip,
        upper,
        blocks,
        bigm: *bigm,
    })
}

fn add_cost(lp: &mut LinearProgram, j: usize, c: f64) {
    let cur = lp.cols()[j].cost;
    lp.set_cost(j, cur + c);
}

fn add_columns(lp: &mut LinearProgram, model: &LowerModel, tag: &str) -> LowerBlock {
    LowerBlock {
        x: model
            .cols
            .iter()
            .map(|c| lp.add_col(format!("{tag}.{}", c.name), c.lo, c.hi, 0.0))
            .collect(),
        ..Default::default()
    }
}

fn dual_bound(family: Family, bigm: &BigMConfig) -> f64 {
    match family {
        Family::Headroom => bigm.headroom_dual,
        Family::DispatchCoupling => bigm.coupling_dual,
        _ => bigm.dual,
    }
}

type KktCols = (Vec<usize>, Vec<Option<usize>>, Vec<Option<usize>>);

/// Primal feasibility, dual columns, stationarity and linearized
/// complementarity for one lower LP.
fn add_kkt(
    lp: &mut LinearProgram,
    model: &LowerModel,
    lb: &LowerBlock,
    param: &dyn Fn(Param) -> usize,
    bigm: &BigMConfig,
    tag: &str,
    binaries: &mut Vec<usize>,
) -> Result<KktCols, BuildError> {
    let mut y = Vec::with_capacity(model.rows.len());
    let mut z = Vec::with_capacity(model.rows.len());
    let mut product = Vec::with_capacity(model.rows.len());
    for r in &model.rows {
        let m = dual_bound(r.family, bigm);
        let lo = if r.kind == RowKind::Eq { -m } else { 0.0 };
        y.push(lp.add_col(format!("{tag}.y.{}", r.name), lo, m, 0.0));
    }

    for (i, r) in model.rows.iter().enumerate() {
        // a'x - coef * param (>= | =) rhs_const
        let mut coeffs: Vec<(usize, f64)> = r.coeffs.iter().map(|&(j, a)| (lb.x[j], a)).collect();
        let mut slack_hi = -r.rhs_const;
        for &(j, a) in &r.coeffs {
            let c = &lp.cols()[lb.x[j]];
            slack_hi += if a > 0.0 { a * c.upper } else { a * c.lower };
        }
        if let Some((p, coef)) = r.param {
            let pc = param(p);
            coeffs.push((pc, -coef));
            let c = &lp.cols()[pc];
            slack_hi += if coef > 0.0 { -coef * c.lower } else { -coef * c.upper };
        }
        let upper = if r.kind == RowKind::Eq {
            r.rhs_const
        } else {
            f64::INFINITY
        };
        lp.add_row(format!("{tag}.{}", r.name), r.rhs_const, upper, coeffs.clone());

        let mut zi = None;
        if r.kind == RowKind::Ge {
            if !slack_hi.is_finite() {
                return Err(BuildError::Dimension(format!("unbounded slack in row {}", r.name)));
            }
            if slack_hi > 1e-9 {
                let ms = slack_hi * bigm.slack_scale;
                let my = lp.cols()[y[i]].upper;
                let b = lp.add_col(format!("{tag}.z.{}", r.name), 0.0, 1.0, 0.0);
                binaries.push(b);
                lp.add_row(
                    format!("{tag}.cd.{}", r.name),
                    f64::NEG_INFINITY,
                    0.0,
                    [(y[i], 1.0), (b, -my)],
                );
                let mut cs = coeffs;
                cs.push((b, ms));
                lp.add_row(format!("{tag}.cs.{}", r.name), f64::NEG_INFINITY, ms + r.rhs_const, cs);
                zi = Some(b);
            }
        }
        z.push(zi);

        let mut e = None;
        if let Some((p @ Param::DaDispatch { .. }, _)) = r.param {
            let g = param(p);
            let (gl, gu) = (lp.cols()[g].lower, lp.cols()[g].upper);
            let (yl, yu) = (lp.cols()[y[i]].lower, lp.cols()[y[i]].upper);
            let env = mccormick_envelope((gl, gu), (yl, yu))?;
            let corners = [gl * yl, gl * yu, gu * yl, gu * yu];
            let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ec = lp.add_col(format!("{tag}.e.{}", r.name), lo, hi, 0.0);
            for (k, er) in env.iter().enumerate() {
                let cs = [(g, er.coef_x), (y[i], er.coef_y), (ec, er.coef_e)];
                if er.upper {
                    lp.add_row(format!("{tag}.mc{k}.{}", r.name), f64::NEG_INFINITY, er.rhs, cs);
                } else {
                    lp.add_row(format!("{tag}.mc{k}.{}", r.name), er.rhs, f64::INFINITY, cs);
                }
            }
            e = Some(ec);
        }
        product.push(e);
    }

    // Stationarity: sum_i a_ij y_i - [bid price] = constant cost.
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.cols.len()];
    for (i, r) in model.rows.iter().enumerate() {
        for &(j, a) in &r.coeffs {
            by_col[j].push((y[i], a));
        }
    }
    for (j, c) in model.cols.iter().enumerate() {
        let mut coeffs = std::mem::take(&mut by_col[j]);
        if let Some(p) = c.cost_param {
            coeffs.push((param(p), -1.0));
        }
        lp.add_row(format!("{tag}.stat.{}", c.name), c.cost_const, c.cost_const, coeffs);
    }
    Ok((y, z, product))
}

/// Strategic revenue from one lower LP through its duality identity:
/// constant rhs times dual, plus rhs products with DA dispatch, minus the
/// constant-cost part of the primal objective.
fn add_revenue(lp: &mut LinearProgram, model: &LowerModel, lb: &LowerBlock, weight: f64) {
    for (i, r) in model.rows.iter().enumerate() {
        if r.rhs_const != 0.0 {
            add_cost(lp, lb.y[i], weight * r.rhs_const);
        }
        if let (Some((p, coef)), Some(e)) = (r.param, lb.product[i]) {
            debug_assert!(!p.in_revenue());
            add_cost(lp, e, weight * coef);
        }
    }
    for (j, c) in model.cols.iter().enumerate() {
        if c.cost_param.is_none() && c.cost_const != 0.0 {
            add_cost(lp, lb.x[j], -weight * c.cost_const);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::illustrative;

    #[test]
    fn rejects_small_big_m() {
        let c = illustrative(false, [50.0, 50.0, 40.0], 0.0);
        let mut m = BigMConfig::for_instance(&c.instance);
        m.dual = 150.0;
        assert!(build_single_level_milp(&c.instance, &c.scenarios, &m).is_err());
    }

    #[test]
    fn binaries_only_on_inequalities() {
        let c = illustrative(false, [50.0, 50.0, 40.0], 20.0);
        let m = build_single_level_milp(&c.instance, &c.scenarios, &BigMConfig::for_instance(&c.instance)).unwrap();
        let b = &m.blocks[0];
        for (r, z) in b.da_lp.model.rows.iter().zip(&b.da.z) {
            if r.kind == RowKind::Eq {
                assert!(z.is_none());
            }
        }
        let products = b.fc.product.iter().filter(|e| e.is_some()).count();
        assert_eq!(products, 2 * b.fc_lp.index.units.len());
    }
}
