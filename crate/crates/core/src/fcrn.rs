//! FCR-N capacity clearing for fixed offers, a fixed DA outcome and one
//! scenario. One system-wide balance per period.

use crate::bids::BidSet;
use crate::da::{check_inputs, non_strategic_units, unit_max_power, DaLp};
use crate::instance::{fcrn_requirement, MarketInstance, Scenario};
use crate::lower::{ClearingResult, Family, KktReport, LowerModel, Param, RowKind, Unit};
use crate::BuildError;

#[derive(Debug, Clone, Default)]
pub struct FcIndex {
    /// `[strategic ordinal][segment][period]`
    pub p: Vec<Vec<Vec<usize>>>,
    /// Units in `non_strategic_units` order.
    pub units: Vec<Unit>,
    /// `[unit position][period]`
    pub g: Vec<Vec<usize>>,
    /// `[period]`, present with an FCR-N price cap.
    pub shed: Vec<Option<usize>>,
    /// Balance rows `[period]`.
    pub balance: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FcrnLp {
    pub model: LowerModel,
    pub index: FcIndex,
}

impl FcrnLp {
    pub fn prices(&self, r: &ClearingResult) -> Vec<f64> {
        self.index.balance.iter().map(|&i| r.y[i]).collect()
    }

    pub fn offer_dispatch(&self, r: &ClearingResult) -> Vec<Vec<Vec<f64>>> {
        self.index
            .p
            .iter()
            .map(|segs| segs.iter().map(|ts| ts.iter().map(|&j| r.x[j]).collect()).collect())
            .collect()
    }

    pub fn unit_dispatch(&self, r: &ClearingResult, unit: Unit, t: usize) -> f64 {
        let k = self
            .index
            .units
            .iter()
            .position(|&u| u == unit)
            .expect("non-strategic unit");
        r.x[self.index.g[k][t]]
    }
}

/// The DA quantities the FCR-N market depends on.
#[derive(Debug, Clone)]
pub struct DaOutcome {
    /// `[strategic ordinal][segment][period]`
    pub offer: Vec<Vec<Vec<f64>>>,
    /// `[unit position][period]` in `non_strategic_units` order.
    pub dispatch: Vec<Vec<f64>>,
}

impl DaOutcome {
    pub fn from_clearing(inst: &MarketInstance, lp: &DaLp, r: &ClearingResult) -> Result<Self, BuildError> {
        if !r.is_optimal() {
            return Err(BuildError::NotOptimal(format!("{:?}", r.status)));
        }
        let dispatch = non_strategic_units(inst)
            .into_iter()
            .map(|u| (0..inst.horizon).map(|t| r.x[lp.g(u, t)]).collect())
            .collect();
        Ok(Self {
            offer: lp.offer_dispatch(r),
            dispatch,
        })
    }
}

pub fn build_fcrn_lp(
    inst: &MarketInstance,
    bids: &BidSet,
    da: &DaOutcome,
    scen: &Scenario,
) -> Result<FcrnLp, BuildError> {
    check_inputs(inst, bids, scen)?;
    let nt = inst.horizon;
    let nb = inst.segments;
    let strategic = inst.strategic();
    let units = non_strategic_units(inst);
    if da.offer.len() != strategic.len() || da.dispatch.len() != units.len() {
        return Err(BuildError::Dimension("DA outcome does not match the instance".into()));
    }
    let mut m = LowerModel::new(format!("{}_fc", inst.name));
    let mut ix = FcIndex {
        units: units.clone(),
        ..Default::default()
    };

    for (o, &h) in strategic.iter().enumerate() {
        let pmax = inst.hydro_plants[h].max_power;
        let mut segs = Vec::new();
        for s in 0..nb {
            let mut ts = Vec::new();
            for t in 0..nt {
                let j = m.add_param_col(
                    format!("p_fc[{o}][{s}][{t}]"),
                    Param::FcBidPrice { st: o, seg: s, t },
                    bids.fc_price[o][s][t],
                    0.0,
                    pmax,
                );
                m.add_row(
                    format!("fc_offer_lo[{o}][{s}][{t}]"),
                    Family::FcOfferLo,
                    RowKind::Ge,
                    vec![(j, 1.0)],
                    0.0,
                );
                m.add_param_row(
                    format!("theta1[{o}][{s}][{t}]"),
                    Family::FcOfferHi,
                    RowKind::Ge,
                    vec![(j, -1.0)],
                    0.0,
                    Param::FcBidVolume { st: o, seg: s, t },
                    -1.0,
                    bids.fc_volume[o][s][t],
                );
                m.add_param_row(
                    format!("theta9[{o}][{s}][{t}]"),
                    Family::StCoupling,
                    RowKind::Ge,
                    vec![(j, -1.0)],
                    0.0,
                    Param::DaOffer { st: o, seg: s, t },
                    -1.0,
                    da.offer[o][s][t],
                );
                ts.push(j);
            }
            segs.push(ts);
        }
        ix.p.push(segs);
    }

    for (k, &unit) in units.iter().enumerate() {
        let pmax = unit_max_power(inst, unit);
        let (droop, label) = match unit {
            Unit::Hydro(h) => (inst.hydro_plants[h].droop, format!("hy{h}")),
            Unit::Thermal(u) => (inst.thermal_units[u].droop, format!("th{u}")),
        };
        let mut ts = Vec::new();
        for t in 0..nt {
            let cost = match unit {
                Unit::Hydro(h) => scen.cost_fc_hydro[h][t],
                Unit::Thermal(u) => scen.cost_fc_thermal[u][t],
            };
            let floor = fcrn_requirement(pmax, scen.freq_dev[t], droop)?.max(0.0);
            let j = m.add_col(format!("g_fc[{label}][{t}]"), cost, floor, pmax);
            m.add_row(
                format!("theta6[{label}][{t}]"),
                Family::DroopFloor,
                RowKind::Ge,
                vec![(j, 1.0)],
                floor,
            );
            let ghat = da.dispatch[k][t];
            let unit_t = Param::DaDispatch { unit, t };
            m.add_param_row(
                format!("theta7[{label}][{t}]"),
                Family::Headroom,
                RowKind::Ge,
                vec![(j, -1.0)],
                -pmax,
                unit_t,
                1.0,
                ghat,
            );
            m.add_param_row(
                format!("theta10[{label}][{t}]"),
                Family::DispatchCoupling,
                RowKind::Ge,
                vec![(j, -1.0)],
                0.0,
                unit_t,
                -1.0,
                ghat,
            );
            ts.push(j);
        }
        ix.g.push(ts);
    }

    for t in 0..nt {
        let d = scen.demand_fc[t];
        let mut coeffs = Vec::new();
        for segs in &ix.p {
            for ts in segs {
                coeffs.push((ts[t], 1.0));
            }
        }
        for ts in &ix.g {
            coeffs.push((ts[t], 1.0));
        }
        let shed = inst.fc_price_cap.map(|cap| {
            let j = m.add_col(format!("shed_fc[{t}]"), cap, 0.0, d);
            m.add_row(
                format!("shed_fc_lo[{t}]"),
                Family::FcShedLo,
                RowKind::Ge,
                vec![(j, 1.0)],
                0.0,
            );
            coeffs.push((j, 1.0));
            j
        });
        ix.shed.push(shed);
        ix.balance
            .push(m.add_row(format!("lambda_fc[{t}]"), Family::FcBalance, RowKind::Eq, coeffs, d));
    }
    Ok(FcrnLp { model: m, index: ix })
}

pub fn clear_fcrn(lp: &FcrnLp) -> ClearingResult {
    lp.model.clear()
}

/// KKT residuals; the FCR-N strong-duality identity is reported separately
/// by `fcrn_strong_duality_gap`.
pub fn fcrn_kkt_residuals(lp: &FcrnLp, r: &ClearingResult) -> KktReport {
    lp.model.kkt_residuals(&r.x, &r.y)
}

pub fn fcrn_strong_duality_gap(lp: &FcrnLp, r: &ClearingResult) -> f64 {
    lp.model.strong_duality_gap(&r.x, &r.y)
}
