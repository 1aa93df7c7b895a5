//! Random feasible LPs and an independent KKT / dual-objective evaluation.

use lpmilp::{LinearProgram, LpSolution, Sense};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const INF: f64 = f64::INFINITY;

pub fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(2..14);
    let m = rng.gen_range(1..12);
    let sense = if rng.gen_bool(0.5) {
        Sense::Minimize
    } else {
        Sense::Maximize
    };
    let s = if sense == Sense::Minimize { 1.0 } else { -1.0 };
    let mut lp = LinearProgram::new("rand", sense);
    let mut x0 = Vec::new();
    for j in 0..n {
        let kind = rng.gen_range(0..4);
        let c: f64 = rng.gen_range(-5.0..5.0);
        let (lo, hi, cost) = match kind {
            0 => (rng.gen_range(-3.0..0.0), rng.gen_range(0.0..6.0), c),
            1 => (0.0, INF, s * c.abs()),
            2 => (-INF, rng.gen_range(0.0..4.0), -s * c.abs()),
            _ => (rng.gen_range(-2.0..2.0), rng.gen_range(2.0..5.0), c),
        };
        let v = if hi.is_finite() && lo.is_finite() {
            rng.gen_range(lo..=hi)
        } else if lo.is_finite() {
            lo + rng.gen_range(0.0..3.0)
        } else {
            hi - rng.gen_range(0.0..3.0)
        };
        x0.push(v);
        lp.add_col(format!("x{j}"), lo, hi, cost);
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.5) {
                coeffs.push((j, rng.gen_range(-4i32..=4) as f64 * 0.5));
            }
        }
        let act: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        let (lo, hi) = match rng.gen_range(0..4) {
            0 => (act, act),
            1 => (-INF, act + rng.gen_range(0.0..2.0)),
            2 => (act - rng.gen_range(0.0..2.0), INF),
            _ => (act - rng.gen_range(0.0..1.0), act + rng.gen_range(0.0..1.0)),
        };
        lp.add_row(format!("r{i}"), lo, hi, coeffs);
    }
    lp
}

pub struct Check {
    pub primal_infeas: f64,
    pub stationarity: f64,
    pub dual_sign: f64,
    pub complementarity: f64,
    pub dual_objective: f64,
}

pub fn kkt(lp: &LinearProgram, sol: &LpSolution) -> Check {
    let s = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let x = &sol.x;
    let act = lp.row_activity(x);
    let primal_infeas = lp.max_violation(x);
    // Work in minimization form: duals and reduced costs times s.
    let mut stationarity: f64 = 0.0;
    let mut dual_sign: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    let mut dual_objective = lp.objective_offset * s;
    let mut grad: Vec<f64> = lp.cols().iter().map(|c| s * c.cost).collect();
    for (i, r) in lp.rows().iter().enumerate() {
        let y = s * sol.duals[i];
        for &(j, a) in &r.coeffs {
            grad[j] -= y * a;
        }
        if y > 0.0 {
            if r.lower.is_finite() {
                dual_objective += y * r.lower;
                complementarity = complementarity.max((y * (act[i] - r.lower)).abs());
            } else {
                dual_sign = dual_sign.max(y);
            }
        } else if y < 0.0 {
            if r.upper.is_finite() {
                dual_objective += y * r.upper;
                complementarity = complementarity.max((y * (r.upper - act[i])).abs());
            } else {
                dual_sign = dual_sign.max(-y);
            }
        }
    }
    for (j, c) in lp.cols().iter().enumerate() {
        let d = grad[j];
        stationarity = stationarity.max((d - s * sol.reduced_costs[j]).abs());
        if d > 0.0 {
            if c.lower.is_finite() {
                dual_objective += d * c.lower;
                complementarity = complementarity.max((d * (x[j] - c.lower)).abs());
            } else {
                dual_sign = dual_sign.max(d);
            }
        } else if d < 0.0 {
            if c.upper.is_finite() {
                dual_objective += d * c.upper;
                complementarity = complementarity.max((d * (c.upper - x[j])).abs());
            } else {
                dual_sign = dual_sign.max(-d);
            }
        }
    }
    Check {
        primal_infeas,
        stationarity,
        dual_sign,
        complementarity,
        dual_objective: s * dual_objective,
    }
}
