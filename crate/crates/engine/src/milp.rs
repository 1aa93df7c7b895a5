//! Best-first branch and bound over binary columns.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::ModelError;
use crate::model::{MixedIntegerProgram, Sense};
use crate::simplex::{Basis, LpSolver, LpStatus, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    NodeLimit,
    NumericalFailure,
}

impl MilpStatus {
    pub fn limit_hit(self) -> bool {
        matches!(self, MilpStatus::TimeLimit | MilpStatus::NodeLimit)
    }
}

/// Candidate generator called with the LP relaxation point of a node. Any
/// returned vector is checked for integrality and feasibility before use.
pub type Heuristic<'a> = Box<dyn FnMut(&[f64]) -> Option<Vec<f64>> + 'a>;

pub struct MilpOptions<'a> {
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    pub int_tol: f64,
    pub feas_tol: f64,
    /// Run the heuristic at the root and then every this many nodes.
    pub heuristic_every: usize,
    pub heuristic: Option<Heuristic<'a>>,
    pub simplex: SimplexOptions,
}

impl Default for MilpOptions<'_> {
    fn default() -> Self {
        Self {
            abs_gap: 1e-6,
            rel_gap: 0.0,
            time_limit: None,
            node_limit: None,
            int_tol: 1e-6,
            feas_tol: 1e-6,
            heuristic_every: 25,
            heuristic: None,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Best integer point; empty when none was found.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Best proven bound in the problem's sense.
    pub bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Global bound after each processed node, in the problem's sense.
    pub bound_history: Vec<f64>,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.x.is_empty()
    }

    pub fn gap(&self) -> f64 {
        (self.objective - self.bound).abs()
    }
}

struct Node {
    id: usize,
    /// Lower bound in minimization form.
    bound: f64,
    fixings: Vec<(usize, f64)>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the greatest: smallest bound first, newest node on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.id.cmp(&other.id))
    }
}

pub fn solve_milp(mip: &MixedIntegerProgram, mut opts: MilpOptions<'_>) -> Result<MilpSolution, ModelError> {
    mip.validate()?;
    let start = Instant::now();
    let lp = &mip.lp;
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut solver = LpSolver::new(lp, opts.simplex.clone())?;
    let root_bounds: Vec<(f64, f64)> = mip.binaries().iter().map(|&j| solver.col_bounds(j)).collect();
    let mut branch_order = mip.binaries().to_vec();
    branch_order.sort_unstable();

    let mut incumbent: Vec<f64> = Vec::new();
    let mut inc_val = f64::INFINITY; // minimization form, offset included
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        fixings: Vec::new(),
        basis: None,
    });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut history = Vec::new();
    let mut global = f64::NEG_INFINITY;
    let mut status = MilpStatus::Optimal;
    let mut heur_count = 0usize;
    let mut retired_iterations = 0;

    let gap_closed = |inc: f64, bnd: f64| -> bool {
        inc - bnd <= opts.abs_gap || (inc.is_finite() && inc - bnd <= opts.rel_gap * inc.abs())
    };

    while let Some(node) = heap.pop() {
        if node.bound >= inc_val || gap_closed(inc_val, node.bound) {
            // Best-first: every remaining node is at least as bad.
            global = global.max(node.bound.min(inc_val));
            heap.clear();
            break;
        }
        if let Some(limit) = opts.time_limit {
            if start.elapsed() >= limit {
                heap.push(node);
                status = MilpStatus::TimeLimit;
                break;
            }
        }
        if let Some(limit) = opts.node_limit {
            if nodes >= limit {
                heap.push(node);
                status = MilpStatus::NodeLimit;
                break;
            }
        }
        nodes += 1;
        for (&j, &(lo, hi)) in mip.binaries().iter().zip(&root_bounds) {
            solver.set_col_bounds(j, lo, hi);
        }
        for &(j, v) in &node.fixings {
            solver.set_col_bounds(j, v, v);
        }
        if let Some(b) = &node.basis {
            solver.load_basis(b);
        }
        let mut st = solver.solve();
        if !matches!(st, LpStatus::Optimal | LpStatus::Infeasible | LpStatus::Unbounded) {
            // A warm start can drift into an ill-conditioned basis; retry cold.
            let mut fresh = LpSolver::new(lp, opts.simplex.clone())?;
            for j in 0..lp.num_cols() {
                let (lo, hi) = solver.col_bounds(j);
                fresh.set_col_bounds(j, lo, hi);
            }
            st = fresh.solve();
            if matches!(st, LpStatus::Optimal | LpStatus::Infeasible) {
                retired_iterations += solver.iterations();
                solver = fresh;
            }
        }
        match st {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                record(&mut history, &mut global, &heap, inc_val, sign);
                continue;
            }
            LpStatus::Unbounded if nodes == 1 => {
                status = MilpStatus::Unbounded;
                break;
            }
            _ => {
                status = MilpStatus::NumericalFailure;
                break;
            }
        }
        let sol = solver.solution();
        let obj = (sign * sol.objective).max(node.bound);
        if obj >= inc_val || gap_closed(inc_val, obj) {
            record(&mut history, &mut global, &heap, inc_val, sign);
            continue;
        }
        let mut branch = None;
        let mut worst = opts.int_tol;
        for &j in &branch_order {
            let v = sol.x[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > worst {
                worst = frac;
                branch = Some(j);
            }
        }
        match branch {
            None => {
                let mut x = sol.x.clone();
                for &j in mip.binaries() {
                    x[j] = x[j].round();
                }
                inc_val = obj;
                incumbent = x;
                log::debug!("node {nodes}: incumbent {}", sign * inc_val);
            }
            Some(j) => {
                if let Some(h) = opts.heuristic.as_mut() {
                    if heur_count.is_multiple_of(opts.heuristic_every.max(1)) {
                        if let Some(cand) = h(&sol.x) {
                            if let Some(v) = check_candidate(mip, &cand, opts.int_tol, opts.feas_tol) {
                                let v = sign * v;
                                if v < inc_val {
                                    inc_val = v;
                                    incumbent = cand;
                                    log::debug!("node {nodes}: heuristic incumbent {}", sign * inc_val);
                                }
                            }
                        }
                    }
                    heur_count += 1;
                }
                let basis = solver.basis();
                let up_first = sol.x[j] >= 0.5;
                let order = if up_first { [0.0, 1.0] } else { [1.0, 0.0] };
                for v in order {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node {
                        id: next_id,
                        bound: obj,
                        fixings,
                        basis: basis.clone(),
                    });
                    next_id += 1;
                }
            }
        }
        record(&mut history, &mut global, &heap, inc_val, sign);
    }

    let open = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let bound = if status == MilpStatus::Optimal {
        if incumbent.is_empty() {
            status = MilpStatus::Infeasible;
            f64::INFINITY
        } else {
            global.max(open.min(inc_val)).min(inc_val)
        }
    } else {
        global.max(open.min(inc_val))
    };
    let objective = if incumbent.is_empty() {
        f64::NAN
    } else {
        lp.objective_value(&incumbent)
    };
    Ok(MilpSolution {
        status,
        x: incumbent,
        objective,
        bound: sign * bound,
        nodes,
        lp_iterations: retired_iterations + solver.iterations(),
        bound_history: history,
    })
}

fn record(history: &mut Vec<f64>, global: &mut f64, heap: &BinaryHeap<Node>, inc: f64, sign: f64) {
    let open = heap.peek().map(|n| n.bound).unwrap_or(f64::INFINITY);
    *global = global.max(open.min(inc));
    history.push(sign * *global);
}

/// Objective of a candidate point if it is integral and feasible.
pub fn check_candidate(mip: &MixedIntegerProgram, x: &[f64], int_tol: f64, feas_tol: f64) -> Option<f64> {
    if x.len() != mip.lp.num_cols() {
        return None;
    }
    for &j in mip.binaries() {
        if (x[j] - x[j].round()).abs() > int_tol {
            return None;
        }
    }
    if mip.lp.max_violation(x) > feas_tol {
        return None;
    }
    Some(mip.lp.objective_value(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LinearProgram;

    #[test]
    fn knapsack_enumeration_value() {
        let mut lp = LinearProgram::new("knap", Sense::Maximize);
        let x1 = lp.add_col("x1", 0.0, 1.0, 3.0);
        let x2 = lp.add_col("x2", 0.0, 1.0, 2.0);
        lp.add_row("w", f64::NEG_INFINITY, 2.0, [(x1, 2.0), (x2, 1.0)]);
        let mut mip = MixedIntegerProgram::new(lp);
        mip.mark_binary(x1);
        mip.mark_binary(x2);
        let s = solve_milp(&mip, MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert_eq!(s.x, vec![1.0, 0.0]);
        assert!((s.bound - 3.0).abs() < 1e-6);
    }

    #[test]
    fn integral_relaxation_needs_one_node() {
        let mut lp = LinearProgram::new("int", Sense::Minimize);
        let x = lp.add_col("x", 0.0, 1.0, 1.0);
        let y = lp.add_col("y", 0.0, 1.0, 2.0);
        lp.add_row("c", 1.0, f64::INFINITY, [(x, 1.0), (y, 1.0)]);
        let mut mip = MixedIntegerProgram::new(lp);
        mip.mark_binary(x);
        mip.mark_binary(y);
        let s = solve_milp(&mip, MilpOptions::default()).unwrap();
        assert_eq!(s.nodes, 1);
        assert_eq!(s.x, vec![1.0, 0.0]);
    }

    #[test]
    fn infeasible_mip() {
        let mut lp = LinearProgram::new("inf", Sense::Minimize);
        let x = lp.add_col("x", 0.0, 1.0, 1.0);
        lp.add_row("c", 0.4, 0.6, [(x, 1.0)]);
        let mut mip = MixedIntegerProgram::new(lp);
        mip.mark_binary(x);
        let s = solve_milp(&mip, MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Infeasible);
        assert!(!s.has_incumbent());
    }
}
