//! Day-ahead clearing for fixed strategic offers and one scenario.

use crate::bids::{validate_bids, BidSet};
use crate::instance::{validate_instance, validate_scenario, MarketInstance, Scenario};
use crate::lower::{ClearingResult, Family, KktReport, LowerModel, Param, RowKind, Unit};
use crate::BuildError;

#[derive(Debug, Clone, Default)]
pub struct DaIndex {
    /// `[strategic ordinal][segment][period]`
    pub p: Vec<Vec<Vec<usize>>>,
    /// `[station][period]`, `None` for strategic stations.
    pub g_hydro: Vec<Option<Vec<usize>>>,
    /// `[thermal][period]`
    pub g_thermal: Vec<Vec<usize>>,
    /// `[line][period]`
    pub flow: Vec<Vec<usize>>,
    /// `[station][segment][period]`
    pub q: Vec<Vec<Vec<usize>>>,
    /// `[station][period]`
    pub spill: Vec<Vec<usize>>,
    /// `[station][period]`
    pub content: Vec<Vec<usize>>,
    /// `[node][period]`, present with a DA price cap.
    pub shed: Vec<Vec<Option<usize>>>,
    /// Balance rows `[node][period]`.
    pub balance: Vec<Vec<usize>>,
    /// Hydrological balance rows `[station][period]`.
    pub hydro_balance: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct DaLp {
    pub model: LowerModel,
    pub index: DaIndex,
}

impl DaLp {
    pub fn g(&self, unit: Unit, t: usize) -> usize {
        match unit {
            Unit::Hydro(h) => self.index.g_hydro[h].as_ref().expect("non-strategic station")[t],
            Unit::Thermal(u) => self.index.g_thermal[u][t],
        }
    }

    /// Nodal prices `[node][period]` of a result of this LP.
    pub fn prices(&self, r: &ClearingResult) -> Vec<Vec<f64>> {
        self.index
            .balance
            .iter()
            .map(|row| row.iter().map(|&i| r.y[i]).collect())
            .collect()
    }

    /// Cleared volume per strategic segment.
    pub fn offer_dispatch(&self, r: &ClearingResult) -> Vec<Vec<Vec<f64>>> {
        self.index
            .p
            .iter()
            .map(|segs| segs.iter().map(|ts| ts.iter().map(|&j| r.x[j]).collect()).collect())
            .collect()
    }
}

/// Non-strategic units in a fixed order: non-strategic hydro, then thermal.
pub fn non_strategic_units(inst: &MarketInstance) -> Vec<Unit> {
    inst.non_strategic()
        .into_iter()
        .map(Unit::Hydro)
        .chain((0..inst.thermal_units.len()).map(Unit::Thermal))
        .collect()
}

pub fn unit_max_power(inst: &MarketInstance, unit: Unit) -> f64 {
    match unit {
        Unit::Hydro(h) => inst.hydro_plants[h].max_power,
        Unit::Thermal(u) => inst.thermal_units[u].max_power,
    }
}

pub fn unit_node(inst: &MarketInstance, unit: Unit) -> usize {
    match unit {
        Unit::Hydro(h) => inst.hydro_plants[h].node,
        Unit::Thermal(u) => inst.thermal_units[u].node,
    }
}

pub fn unit_name(inst: &MarketInstance, unit: Unit) -> &str {
    match unit {
        Unit::Hydro(h) => &inst.hydro_plants[h].name,
        Unit::Thermal(u) => &inst.thermal_units[u].name,
    }
}

pub(crate) fn check_inputs(inst: &MarketInstance, bids: &BidSet, scen: &Scenario) -> Result<(), BuildError> {
    let mut v = validate_instance(inst);
    v.extend(validate_scenario(inst, scen));
    v.extend(validate_bids(inst, bids));
    if v.is_empty() {
        Ok(())
    } else {
        Err(BuildError::Invalid(v))
    }
}

pub fn build_da_lp(inst: &MarketInstance, bids: &BidSet, scen: &Scenario) -> Result<DaLp, BuildError> {
    check_inputs(inst, bids, scen)?;
    let nt = inst.horizon;
    let nb = inst.segments;
    let nn = inst.topology.node_count;
    let nh = inst.hydro_plants.len();
    let strategic = inst.strategic();
    let mut m = LowerModel::new(format!("{}_da", inst.name));
    let mut ix = DaIndex::default();

    for (o, &h) in strategic.iter().enumerate() {
        let pmax = inst.hydro_plants[h].max_power;
        let mut segs = Vec::new();
        for s in 0..nb {
            let mut ts = Vec::new();
            for t in 0..nt {
                let j = m.add_param_col(
                    format!("p_da[{o}][{s}][{t}]"),
                    Param::DaBidPrice { st: o, seg: s, t },
                    bids.da_price[o][s][t],
                    0.0,
                    pmax,
                );
                m.add_row(
                    format!("nu6_lo_p_da[{o}][{s}][{t}]"),
                    Family::OfferLo,
                    RowKind::Ge,
                    vec![(j, 1.0)],
                    0.0,
                );
                m.add_param_row(
                    format!("nu6_hi_p_da[{o}][{s}][{t}]"),
                    Family::OfferHi,
                    RowKind::Ge,
                    vec![(j, -1.0)],
                    0.0,
                    Param::DaBidVolume { st: o, seg: s, t },
                    -1.0,
                    bids.da_volume[o][s][t],
                );
                ts.push(j);
            }
            segs.push(ts);
        }
        ix.p.push(segs);
    }

    for (u, th) in inst.thermal_units.iter().enumerate() {
        let mut ts = Vec::new();
        for t in 0..nt {
            let j = m.add_col(format!("g_th[{u}][{t}]"), th.cost_da, 0.0, th.max_power);
            m.add_bounds(j, 0.0, th.max_power, Family::CapacityLo, Family::CapacityHi);
            ts.push(j);
        }
        ix.g_thermal.push(ts);
    }

    for (l, line) in inst.topology.lines.iter().enumerate() {
        let mut ts = Vec::new();
        for t in 0..nt {
            let j = m.add_col(format!("flow[{l}][{t}]"), 0.0, -line.ntc, line.ntc);
            m.add_bounds(j, -line.ntc, line.ntc, Family::LineLo, Family::LineHi);
            ts.push(j);
        }
        ix.flow.push(ts);
    }

    let weights = inst.cascade.downstream_weights(&scen.future_prod_equiv);
    for (h, p) in inst.hydro_plants.iter().enumerate() {
        let mut qk = Vec::new();
        for (k, seg) in p.segments.iter().enumerate() {
            let mut ts = Vec::new();
            for t in 0..nt {
                let j = m.add_col(format!("q[{h}][{k}][{t}]"), 0.0, seg.q_min, seg.q_max);
                m.add_bounds(j, seg.q_min, seg.q_max, Family::DischargeLo, Family::DischargeHi);
                ts.push(j);
            }
            qk.push(ts);
        }
        ix.q.push(qk);
        let mut sp = Vec::new();
        let mut mc = Vec::new();
        for t in 0..nt {
            let j = m.add_col(format!("spill[{h}][{t}]"), 0.0, p.s_min, p.s_max);
            m.add_bounds(j, p.s_min, p.s_max, Family::SpillLo, Family::SpillHi);
            sp.push(j);
            // Only non-strategic stored water is valued by the operator.
            let cost = if t + 1 == nt && !p.strategic {
                -scen.future_price * weights[h]
            } else {
                0.0
            };
            let j = m.add_col(format!("m[{h}][{t}]"), cost, p.m_min, p.m_max);
            m.add_bounds(j, p.m_min, p.m_max, Family::ReservoirLo, Family::ReservoirHi);
            mc.push(j);
        }
        ix.spill.push(sp);
        ix.content.push(mc);
        if p.strategic {
            ix.g_hydro.push(None);
        } else {
            let mut ts = Vec::new();
            for t in 0..nt {
                let j = m.add_col(format!("g_hy[{h}][{t}]"), 0.0, 0.0, p.max_power);
                m.add_bounds(j, 0.0, p.max_power, Family::CapacityLo, Family::CapacityHi);
                ts.push(j);
            }
            ix.g_hydro.push(Some(ts));
        }
    }

    for h in 0..nh {
        let p = &inst.hydro_plants[h];
        let mut rows = Vec::new();
        for t in 0..nt {
            let mut coeffs = vec![(ix.content[h][t], 1.0)];
            let mut rhs = scen.inflow[h][t];
            if t == 0 {
                rhs += scen.initial_content[h];
            } else {
                coeffs.push((ix.content[h][t - 1], -1.0));
            }
            for qk in &ix.q[h] {
                coeffs.push((qk[t], 1.0));
            }
            coeffs.push((ix.spill[h][t], 1.0));
            for j in inst.cascade.upstream_of(h) {
                let tau = inst.cascade.delay(j);
                if t >= tau {
                    for qk in &ix.q[j] {
                        coeffs.push((qk[t - tau], -1.0));
                    }
                    coeffs.push((ix.spill[j][t - tau], -1.0));
                } else {
                    rhs += inst.hydro_plants[j].historical_release;
                }
            }
            rows.push(m.add_row(
                format!("eta1[{h}][{t}]"),
                Family::HydroBalance,
                RowKind::Eq,
                coeffs,
                rhs,
            ));
            if let Some(g) = &ix.g_hydro[h] {
                let mut coeffs = vec![(g[t], 1.0)];
                for (k, seg) in p.segments.iter().enumerate() {
                    coeffs.push((ix.q[h][k][t], -seg.prod_equiv));
                }
                m.add_row(format!("eta2[{h}][{t}]"), Family::ProdEquiv, RowKind::Eq, coeffs, 0.0);
            }
        }
        ix.hydro_balance.push(rows);
    }

    for n in 0..nn {
        let mut shed_row = Vec::new();
        let mut bal_row = Vec::new();
        for t in 0..nt {
            let d = scen.demand_da[n][t];
            let mut coeffs = Vec::new();
            for (o, &h) in strategic.iter().enumerate() {
                if inst.hydro_plants[h].node == n {
                    for s in 0..nb {
                        coeffs.push((ix.p[o][s][t], 1.0));
                    }
                }
            }
            for unit in non_strategic_units(inst) {
                if unit_node(inst, unit) == n {
                    let j = match unit {
                        Unit::Hydro(h) => ix.g_hydro[h].as_ref().unwrap()[t],
                        Unit::Thermal(u) => ix.g_thermal[u][t],
                    };
                    coeffs.push((j, 1.0));
                }
            }
            let mut adjacent = 0.0;
            for (l, line) in inst.topology.lines.iter().enumerate() {
                let a = inst.topology.incidence(l, n);
                if a != 0.0 {
                    coeffs.push((ix.flow[l][t], a));
                    adjacent += line.ntc;
                }
            }
            let shed = inst.da_price_cap.map(|cap| {
                let j = m.add_col(format!("shed_da[{n}][{t}]"), cap, 0.0, d + adjacent);
                m.add_row(
                    format!("shed_da_lo[{n}][{t}]"),
                    Family::ShedLo,
                    RowKind::Ge,
                    vec![(j, 1.0)],
                    0.0,
                );
                coeffs.push((j, 1.0));
                j
            });
            shed_row.push(shed);
            bal_row.push(m.add_row(
                format!("lambda_da[{n}][{t}]"),
                Family::DaBalance,
                RowKind::Eq,
                coeffs,
                d,
            ));
        }
        ix.shed.push(shed_row);
        ix.balance.push(bal_row);
    }

    Ok(DaLp { model: m, index: ix })
}

pub fn clear_da(lp: &DaLp) -> ClearingResult {
    lp.model.clear()
}

pub fn kkt_residuals(lp: &DaLp, r: &ClearingResult) -> KktReport {
    lp.model.kkt_residuals(&r.x, &r.y)
}

pub fn strong_duality_gap(lp: &DaLp, r: &ClearingResult) -> f64 {
    lp.model.strong_duality_gap(&r.x, &r.y)
}
