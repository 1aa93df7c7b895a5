//! Lower-level market LPs in a canonical form shared by clearing and the KKT
//! reformulation: `min c'x + const` over free columns, every constraint (bounds
//! included) written as `a'x >= r` or `a'x = r`, one dual per row.
//!
//! Row right-hand sides and column costs may depend on one upper-level or
//! upstream quantity (`Param`). `rhs`/`cost` hold the numeric value at the
//! bids the model was built with; `rhs_const`/`cost_const` hold the part that
//! does not depend on the parameter.

use lpmilp::{solve_lp, LinearProgram, LpStatus, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    Hydro(usize),
    Thermal(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    DaBidPrice {
        st: usize,
        seg: usize,
        t: usize,
    },
    DaBidVolume {
        st: usize,
        seg: usize,
        t: usize,
    },
    FcBidPrice {
        st: usize,
        seg: usize,
        t: usize,
    },
    FcBidVolume {
        st: usize,
        seg: usize,
        t: usize,
    },
    /// Cleared DA volume of a strategic segment.
    DaOffer {
        st: usize,
        seg: usize,
        t: usize,
    },
    /// Cleared DA dispatch of a non-strategic unit.
    DaDispatch {
        unit: Unit,
        t: usize,
    },
}

impl Param {
    /// Row parameters whose dual product is part of the strategic revenue
    /// identity; the rest need a product linearization.
    pub fn in_revenue(self) -> bool {
        !matches!(self, Param::DaDispatch { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    DaBalance,
    HydroBalance,
    DischargeLo,
    DischargeHi,
    ReservoirLo,
    ReservoirHi,
    SpillLo,
    SpillHi,
    LineLo,
    LineHi,
    OfferLo,
    OfferHi,
    CapacityLo,
    CapacityHi,
    ProdEquiv,
    ShedLo,
    FcBalance,
    FcOfferLo,
    FcOfferHi,
    DroopFloor,
    Headroom,
    StCoupling,
    DispatchCoupling,
    FcShedLo,
}

impl Family {
    pub fn symbol(self) -> &'static str {
        use Family::*;
        match self {
            DaBalance => "lambda_da",
            HydroBalance => "eta1",
            DischargeLo => "nu2_lo",
            DischargeHi => "nu2_hi",
            ReservoirLo => "nu3_lo",
            ReservoirHi => "nu3_hi",
            SpillLo => "nu4_lo",
            SpillHi => "nu4_hi",
            LineLo => "nu5_lo",
            LineHi => "nu5_hi",
            OfferLo => "nu6_lo",
            OfferHi => "nu6_hi",
            CapacityLo => "nu7_lo",
            CapacityHi => "nu7_hi",
            ProdEquiv => "eta2",
            ShedLo => "shed_da",
            FcBalance => "lambda_fc",
            FcOfferLo => "fc_offer_lo",
            FcOfferHi => "theta1",
            DroopFloor => "theta6",
            Headroom => "theta7",
            StCoupling => "theta9",
            DispatchCoupling => "theta10",
            FcShedLo => "shed_fc",
        }
    }

    /// Balance rows carry prices; their duals are bounded by the price cap.
    pub fn is_price(self) -> bool {
        matches!(self, Family::DaBalance | Family::FcBalance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LowerCol {
    pub name: String,
    pub cost: f64,
    pub cost_const: f64,
    pub cost_param: Option<Param>,
    /// Bounds implied by the model's own rows for every admissible parameter
    /// value; used to size big-M constants.
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub struct LowerRow {
    pub name: String,
    pub family: Family,
    pub kind: RowKind,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub rhs_const: f64,
    pub param: Option<(Param, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct LowerModel {
    pub name: String,
    pub cols: Vec<LowerCol>,
    pub rows: Vec<LowerRow>,
    pub obj_const: f64,
}

impl LowerModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_col(&mut self, name: String, cost: f64, lo: f64, hi: f64) -> usize {
        self.cols.push(LowerCol {
            name,
            cost,
            cost_const: cost,
            cost_param: None,
            lo,
            hi,
        });
        self.cols.len() - 1
    }

    /// Column whose cost is entirely the parameter's value.
    pub fn add_param_col(&mut self, name: String, param: Param, value: f64, lo: f64, hi: f64) -> usize {
        self.cols.push(LowerCol {
            name,
            cost: value,
            cost_const: 0.0,
            cost_param: Some(param),
            lo,
            hi,
        });
        self.cols.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: String,
        family: Family,
        kind: RowKind,
        coeffs: Vec<(usize, f64)>,
        rhs: f64,
    ) -> usize {
        self.rows.push(LowerRow {
            name,
            family,
            kind,
            coeffs,
            rhs,
            rhs_const: rhs,
            param: None,
        });
        self.rows.len() - 1
    }

    /// Row `a'x (>=|=) rhs_const + coef * param`, with `value` the current
    /// parameter value.
    #[allow(clippy::too_many_arguments)]
    pub fn add_param_row(
        &mut self,
        name: String,
        family: Family,
        kind: RowKind,
        coeffs: Vec<(usize, f64)>,
        rhs_const: f64,
        param: Param,
        coef: f64,
        value: f64,
    ) -> usize {
        self.rows.push(LowerRow {
            name,
            family,
            kind,
            coeffs,
            rhs: rhs_const + coef * value,
            rhs_const,
            param: Some((param, coef)),
        });
        self.rows.len() - 1
    }

    /// `lo <= x_j <= hi` as one equality row when the bounds coincide,
    /// otherwise up to two `>=` rows. Returns (lower row, upper row).
    pub fn add_bounds(
        &mut self,
        j: usize,
        lo: f64,
        hi: f64,
        fam_lo: Family,
        fam_hi: Family,
    ) -> (Option<usize>, Option<usize>) {
        let base = self.cols[j].name.clone();
        if lo == hi {
            let r = self.add_row(
                format!("{}_fix_{base}", fam_lo.symbol()),
                fam_lo,
                RowKind::Eq,
                vec![(j, 1.0)],
                lo,
            );
            return (Some(r), None);
        }
        let rl = lo.is_finite().then(|| {
            self.add_row(
                format!("{}_{base}", fam_lo.symbol()),
                fam_lo,
                RowKind::Ge,
                vec![(j, 1.0)],
                lo,
            )
        });
        let rh = hi.is_finite().then(|| {
            self.add_row(
                format!("{}_{base}", fam_hi.symbol()),
                fam_hi,
                RowKind::Ge,
                vec![(j, -1.0)],
                -hi,
            )
        });
        (rl, rh)
    }

    pub fn activity(&self, row: &LowerRow, x: &[f64]) -> f64 {
        row.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn primal_objective(&self, x: &[f64]) -> f64 {
        self.obj_const + self.cols.iter().zip(x).map(|(c, v)| c.cost * v).sum::<f64>()
    }

    /// Sum of rhs times dual over all rows, plus the objective constant.
    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        self.obj_const + self.rows.iter().zip(y).map(|(r, v)| r.rhs * v).sum::<f64>()
    }

    /// Solves the model. Single-variable rows become column bounds and their
    /// duals are recovered from reduced costs.
    pub fn clear(&self) -> ClearingResult {
        let mut lp = LinearProgram::new(self.name.clone(), Sense::Minimize);
        lp.objective_offset = self.obj_const;
        for c in &self.cols {
            lp.add_col(c.name.clone(), f64::NEG_INFINITY, f64::INFINITY, c.cost);
        }
        // For each column, the tightest single-variable lower/upper rows.
        let n = self.cols.len();
        let mut lo_row: Vec<Option<(usize, f64)>> = vec![None; n];
        let mut hi_row: Vec<Option<(usize, f64)>> = vec![None; n];
        let mut lp_row = vec![None; self.rows.len()];
        for (i, r) in self.rows.iter().enumerate() {
            if r.coeffs.len() == 1 {
                let (j, a) = r.coeffs[0];
                let b = r.rhs / a;
                let tighter_lo = |cur: &Option<(usize, f64)>| cur.is_none_or(|(_, v)| b > v);
                let tighter_hi = |cur: &Option<(usize, f64)>| cur.is_none_or(|(_, v)| b < v);
                if (r.kind == RowKind::Eq || a > 0.0) && (tighter_lo(&lo_row[j]) || r.kind == RowKind::Eq) {
                    lo_row[j] = Some((i, b));
                }
                if (r.kind == RowKind::Eq || a < 0.0) && (tighter_hi(&hi_row[j]) || r.kind == RowKind::Eq) {
                    hi_row[j] = Some((i, b));
                }
            } else {
                let (l, u) = match r.kind {
                    RowKind::Eq => (r.rhs, r.rhs),
                    RowKind::Ge => (r.rhs, f64::INFINITY),
                };
                lp_row[i] = Some(lp.add_row(r.name.clone(), l, u, r.coeffs.iter().copied()));
            }
        }
        let mut infeasible_bounds = false;
        for j in 0..n {
            let l = lo_row[j].map_or(f64::NEG_INFINITY, |(_, v)| v);
            let u = hi_row[j].map_or(f64::INFINITY, |(_, v)| v);
            if l > u + 1e-12 {
                infeasible_bounds = true;
            }
            lp.set_bounds(j, l, u.max(l));
        }
        if infeasible_bounds {
            return ClearingResult::failed(LpStatus::Infeasible, n, self.rows.len());
        }
        let sol = match solve_lp(&lp) {
            Ok(s) => s,
            Err(_) => return ClearingResult::failed(LpStatus::NumericalFailure, n, self.rows.len()),
        };
        if !sol.is_optimal() {
            return ClearingResult::failed(sol.status, n, self.rows.len());
        }
        let mut y = vec![0.0; self.rows.len()];
        for (i, r) in lp_row.iter().enumerate() {
            if let Some(k) = r {
                y[i] = sol.duals[*k];
            }
        }
        for j in 0..n {
            let d = sol.reduced_costs[j];
            if d == 0.0 {
                continue;
            }
            let pick = if d > 0.0 { lo_row[j] } else { hi_row[j] };
            if let Some((i, _)) = pick {
                let a = self.rows[i].coeffs[0].1;
                y[i] = d / a;
            }
        }
        ClearingResult {
            status: LpStatus::Optimal,
            objective: sol.objective,
            x: sol.x,
            y,
        }
    }

    /// Smallest duals (in 1-norm) consistent with primal point `x`:
    /// stationarity holds, rows with positive slack get zero duals, and rows
    /// for which `keep` is true retain their value in `y`. `bound[i]` caps
    /// |y_i|. A non-empty `combo` adds `sum combo_k y_k = value` over row
    /// duals. `None` if the LP fails.
    #[allow(clippy::too_many_arguments)]
    pub fn minimal_duals(
        &self,
        x: &[f64],
        y: &[f64],
        keep: impl Fn(&LowerRow) -> bool,
        bound: &[f64],
        tol: f64,
        combo: &[(usize, f64)],
        value: f64,
    ) -> Option<Vec<f64>> {
        let mut lp = LinearProgram::new(format!("{}_duals", self.name), Sense::Minimize);
        // Equality duals are split into positive and negative parts.
        let mut cols = Vec::with_capacity(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            let m = bound[i];
            let slack = self.activity(r, x) - r.rhs;
            if keep(r) {
                let p = lp.add_col(format!("y{i}"), y[i], y[i], 0.0);
                cols.push((p, None));
            } else if r.kind == RowKind::Ge && slack > tol {
                cols.push((lp.add_col(format!("y{i}"), 0.0, 0.0, 0.0), None));
            } else if r.kind == RowKind::Ge {
                cols.push((lp.add_col(format!("y{i}"), 0.0, m, 1.0), None));
            } else {
                let p = lp.add_col(format!("yp{i}"), 0.0, m, 1.0);
                let n = lp.add_col(format!("yn{i}"), 0.0, m, 1.0);
                cols.push((p, Some(n)));
            }
        }
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.cols.len()];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                by_col[j].push((cols[i].0, a));
                if let Some(n) = cols[i].1 {
                    by_col[j].push((n, -a));
                }
            }
        }
        for (j, c) in self.cols.iter().enumerate() {
            lp.add_row(format!("stat{j}"), c.cost, c.cost, std::mem::take(&mut by_col[j]));
        }
        if !combo.is_empty() {
            let mut coeffs = Vec::new();
            for &(i, a) in combo {
                coeffs.push((cols[i].0, a));
                if let Some(n) = cols[i].1 {
                    coeffs.push((n, -a));
                }
            }
            lp.add_row("combo", value, value, coeffs);
        }
        let sol = solve_lp(&lp).ok()?;
        if !sol.is_optimal() {
            return None;
        }
        Some(
            cols.iter()
                .map(|&(p, n)| sol.x[p] - n.map_or(0.0, |n| sol.x[n]))
                .collect(),
        )
    }

    pub fn kkt_residuals(&self, x: &[f64], y: &[f64]) -> KktReport {
        let mut rep = KktReport::default();
        let mut stat = vec![0.0; self.cols.len()];
        for (c, s) in self.cols.iter().zip(stat.iter_mut()) {
            *s = c.cost;
        }
        for (r, &yi) in self.rows.iter().zip(y) {
            for &(j, a) in &r.coeffs {
                stat[j] -= a * yi;
            }
        }
        for (j, s) in stat.iter().enumerate() {
            rep.note_stationarity(s.abs(), &self.cols[j].name);
        }
        for (r, &yi) in self.rows.iter().zip(y) {
            let slack = self.activity(r, x) - r.rhs;
            match r.kind {
                RowKind::Eq => rep.note_primal(slack.abs(), &r.name),
                RowKind::Ge => {
                    rep.note_primal((-slack).max(0.0), &r.name);
                    rep.note_dual((-yi).max(0.0), &r.name);
                    let prod = (yi * slack).abs();
                    rep.note_complementarity(prod, &r.name);
                    let e = rep.by_family.iter_mut().find(|(f, _)| *f == r.family);
                    match e {
                        Some((_, v)) => *v = v.max(prod),
                        None => rep.by_family.push((r.family, prod)),
                    }
                }
            }
        }
        rep
    }

    /// |primal objective - dual objective|.
    pub fn strong_duality_gap(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.primal_objective(x) - self.dual_objective(y)).abs()
    }
}

#[derive(Debug, Clone)]
pub struct ClearingResult {
    pub status: LpStatus,
    pub objective: f64,
    /// Primal value per lower column.
    pub x: Vec<f64>,
    /// Canonical dual per lower row (inequality duals >= 0).
    pub y: Vec<f64>,
}

impl ClearingResult {
    fn failed(status: LpStatus, n: usize, m: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            x: vec![0.0; n],
            y: vec![0.0; m],
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Default)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
    /// Name of the column or row with the largest residual overall.
    pub worst: String,
    worst_value: f64,
    /// Largest complementarity product per dual family.
    pub by_family: Vec<(Family, f64)>,
}

impl KktReport {
    fn note(&mut self, v: f64, name: &str) {
        if v > self.worst_value {
            self.worst_value = v;
            self.worst = name.to_string();
        }
    }
    fn note_stationarity(&mut self, v: f64, name: &str) {
        self.stationarity = self.stationarity.max(v);
        self.note(v, name);
    }
    fn note_primal(&mut self, v: f64, name: &str) {
        self.primal = self.primal.max(v);
        self.note(v, name);
    }
    fn note_dual(&mut self, v: f64, name: &str) {
        self.dual = self.dual.max(v);
        self.note(v, name);
    }
    fn note_complementarity(&mut self, v: f64, name: &str) {
        self.complementarity = self.complementarity.max(v);
        self.note(v, name);
    }

    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }

    pub fn family(&self, f: Family) -> f64 {
        self.by_family.iter().find(|(g, _)| *g == f).map_or(0.0, |(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // min c x s.t. x >= d: x = d, dual c, objective c d.
    #[test]
    fn one_variable_closed_form() {
        let mut m = LowerModel::new("one");
        let x = m.add_col("x".into(), 3.0, 0.0, 10.0);
        m.add_row("x_ge_d".into(), Family::DroopFloor, RowKind::Ge, vec![(x, 1.0)], 2.0);
        let r = m.clear();
        assert!(r.is_optimal());
        assert!((r.x[0] - 2.0).abs() < 1e-12);
        assert!((r.y[0] - 3.0).abs() < 1e-12);
        let k = m.kkt_residuals(&r.x, &r.y);
        assert_eq!(k.max(), 0.0);
        assert_eq!(m.strong_duality_gap(&r.x, &r.y), 0.0);
        let mut bad = r.y.clone();
        bad[0] += 1.0;
        let k = m.kkt_residuals(&r.x, &bad);
        assert!(k.stationarity >= 1.0 - 1e-12);
    }

    #[test]
    fn bound_rows_recover_duals() {
        // min -x s.t. 0 <= x <= 4 (two single rows) plus x + z = 5, z >= 0 cost 1.
        let mut m = LowerModel::new("b");
        let x = m.add_col("x".into(), -1.0, 0.0, 4.0);
        let z = m.add_col("z".into(), 1.0, 0.0, 5.0);
        m.add_bounds(x, 0.0, 4.0, Family::CapacityLo, Family::CapacityHi);
        m.add_bounds(z, 0.0, f64::INFINITY, Family::ShedLo, Family::ShedLo);
        m.add_row(
            "bal".into(),
            Family::DaBalance,
            RowKind::Eq,
            vec![(x, 1.0), (z, 1.0)],
            5.0,
        );
        let r = m.clear();
        assert!(r.is_optimal());
        assert!((r.x[x] - 4.0).abs() < 1e-9);
        let k = m.kkt_residuals(&r.x, &r.y);
        assert!(k.max() < 1e-9, "{k:?}");
        assert!(m.strong_duality_gap(&r.x, &r.y) < 1e-9);
    }
}
