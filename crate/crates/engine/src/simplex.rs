//! Bounded-variable revised simplex with a dense explicit basis inverse.
//!
//! Internally every row `i` gets a logical variable `r_i = a_i x` with the row
//! bounds, so the constraint matrix is `[A | -I]` and all constraints become
//! `A x - r = 0` plus simple bounds. The objective is always minimized;
//! maximization is handled by negating costs on the way in and duals on the
//! way out.

use crate::error::ModelError;
use crate::model::{LinearProgram, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic at an arbitrary value, allowed to move in either direction.
    Free,
}

/// Basis snapshot: `head[p]` is the variable basic in position `p`; indices
/// `>= num_cols` denote row logicals.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub head: Vec<usize>,
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Zero selects `20 * (rows + cols) + 1000`.
    pub max_iterations: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub bland_after: usize,
    /// Temporary bound placed on costed free columns during the dual phase.
    pub artificial_bound: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 0,
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_every: 64,
            bland_after: 40,
            artificial_bound: 1e6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the problem's own sense, offset included.
    pub objective: f64,
    pub x: Vec<f64>,
    pub row_activity: Vec<f64>,
    /// Row duals as the derivative of the objective with respect to the active
    /// row bound.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, ModelError> {
    solve_lp_with(lp, SimplexOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: SimplexOptions) -> Result<LpSolution, ModelError> {
    let mut solver = LpSolver::new(lp, opts)?;
    solver.solve();
    Ok(solver.solution())
}

enum Outcome {
    Done,
    Stopped(LpStatus),
}

/// Reusable solver state. Column bounds can be changed between solves and the
/// previous basis is used as a warm start.
#[derive(Clone)]
pub struct LpSolver {
    m: usize,
    n: usize,
    sense: Sense,
    offset: f64,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_coeffs: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    boxed: Vec<Option<(f64, f64)>>,
    head: Vec<usize>,
    pos: Vec<usize>,
    status: Vec<VarStatus>,
    x: Vec<f64>,
    binv: Vec<f64>,
    /// Simplex multipliers for the current basis, kept in step by `pivot`.
    y: Option<Vec<f64>>,
    has_basis: bool,
    factor_valid: bool,
    updates: usize,
    iterations: usize,
    max_iterations: usize,
    degenerate_streak: usize,
    last_status: LpStatus,
    opts: SimplexOptions,
}

const NONE: usize = usize::MAX;

impl LpSolver {
    pub fn new(lp: &LinearProgram, opts: SimplexOptions) -> Result<Self, ModelError> {
        lp.validate()?;
        let m = lp.num_rows();
        let n = lp.num_cols();
        let mut counts = vec![0usize; n + 1];
        for r in lp.rows() {
            for &(j, _) in &r.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let nnz = counts[n];
        let mut fill = counts.clone();
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, r) in lp.rows().iter().enumerate() {
            for &(j, a) in &r.coeffs {
                col_row[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n + m];
        let mut lb = vec![0.0; n + m];
        let mut ub = vec![0.0; n + m];
        for (j, c) in lp.cols().iter().enumerate() {
            cost[j] = sign * c.cost;
            lb[j] = c.lower;
            ub[j] = c.upper;
        }
        for (i, r) in lp.rows().iter().enumerate() {
            lb[n + i] = r.lower;
            ub[n + i] = r.upper;
        }
        let max_iterations = if opts.max_iterations == 0 {
            20 * (m + n) + 1000
        } else {
            opts.max_iterations
        };
        Ok(Self {
            m,
            n,
            sense: lp.sense,
            offset: lp.objective_offset,
            col_start: counts,
            col_row,
            col_val,
            row_coeffs: lp.rows().iter().map(|r| r.coeffs.clone()).collect(),
            cost,
            lb,
            ub,
            boxed: vec![None; n + m],
            head: Vec::new(),
            pos: vec![NONE; n + m],
            status: vec![VarStatus::AtLower; n + m],
            x: vec![0.0; n + m],
            binv: Vec::new(),
            y: None,
            has_basis: false,
            factor_valid: false,
            updates: 0,
            iterations: 0,
            max_iterations,
            degenerate_streak: 0,
            last_status: LpStatus::NumericalFailure,
            opts,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn col_bounds(&self, j: usize) -> (f64, f64) {
        (self.lb[j], self.ub[j])
    }

    pub fn set_col_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        assert!(j < self.n);
        self.lb[j] = lower;
        self.ub[j] = upper;
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn basis(&self) -> Option<Basis> {
        self.has_basis.then(|| Basis {
            head: self.head.clone(),
            status: self.status.clone(),
        })
    }

    /// Installs a basis for the next solve. The factorization is kept when the
    /// basic set is unchanged.
    pub fn load_basis(&mut self, basis: &Basis) {
        if basis.head.len() != self.m || basis.status.len() != self.n + self.m {
            self.has_basis = false;
            return;
        }
        if !(self.has_basis && self.head == basis.head) {
            self.factor_valid = false;
            self.y = None;
        }
        self.head = basis.head.clone();
        self.status = basis.status.clone();
        self.pos.fill(NONE);
        for (p, &k) in self.head.iter().enumerate() {
            self.pos[k] = p;
        }
        self.has_basis = true;
    }

    pub fn solve(&mut self) -> LpStatus {
        let status = self.solve_inner();
        self.last_status = status;
        status
    }

    fn solve_inner(&mut self) -> LpStatus {
        for j in 0..self.n + self.m {
            if self.lb[j] > self.ub[j] {
                return LpStatus::Infeasible;
            }
        }
        if self.has_basis && self.warm_prepare() {
            if self.max_dual_infeasibility() <= self.opts.dual_tol {
                match self.dual_simplex() {
                    Outcome::Done => return self.finish(),
                    Outcome::Stopped(LpStatus::Infeasible) => return LpStatus::Infeasible,
                    Outcome::Stopped(_) => {}
                }
            } else if self.max_primal_infeasibility() <= self.opts.primal_tol {
                match self.primal_simplex() {
                    Outcome::Done => return self.finish(),
                    Outcome::Stopped(LpStatus::Unbounded) => return LpStatus::Unbounded,
                    Outcome::Stopped(_) => {}
                }
            }
            if self.iterations >= self.max_iterations {
                return LpStatus::IterationLimit;
            }
        }
        self.solve_cold()
    }

    fn solve_cold(&mut self) -> LpStatus {
        let (m, n) = (self.m, self.n);
        self.head = (n..n + m).collect();
        self.pos.fill(NONE);
        for (p, &k) in self.head.iter().enumerate() {
            self.pos[k] = p;
            self.status[k] = VarStatus::Basic;
        }
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
        }
        self.factor_valid = true;
        self.updates = 0;
        self.y = None;
        self.has_basis = true;
        let big = self.opts.artificial_bound;
        for j in 0..n {
            let (lo, hi, c) = (self.lb[j], self.ub[j], self.cost[j]);
            let (st, val) = if c > 0.0 {
                if lo.is_finite() {
                    (VarStatus::AtLower, lo)
                } else {
                    self.boxed[j] = Some((lo, hi));
                    self.lb[j] = (-big).min(hi);
                    (VarStatus::AtLower, self.lb[j])
                }
            } else if c < 0.0 {
                if hi.is_finite() {
                    (VarStatus::AtUpper, hi)
                } else {
                    self.boxed[j] = Some((lo, hi));
                    self.ub[j] = big.max(lo);
                    (VarStatus::AtUpper, self.ub[j])
                }
            } else if lo.is_finite() {
                (VarStatus::AtLower, lo)
            } else if hi.is_finite() {
                (VarStatus::AtUpper, hi)
            } else {
                (VarStatus::Free, 0.0)
            };
            self.status[j] = st;
            self.x[j] = val;
        }
        self.recompute_xb();
        let outcome = self.dual_simplex();
        self.unbox();
        match outcome {
            Outcome::Done => {}
            Outcome::Stopped(s) => return s,
        }
        match self.primal_simplex() {
            Outcome::Done => self.finish(),
            Outcome::Stopped(s) => s,
        }
    }

    fn unbox(&mut self) {
        for j in 0..self.n {
            if let Some((lo, hi)) = self.boxed[j].take() {
                self.lb[j] = lo;
                self.ub[j] = hi;
                if self.status[j] != VarStatus::Basic {
                    if self.x[j] == lo {
                        self.status[j] = VarStatus::AtLower;
                    } else if self.x[j] == hi {
                        self.status[j] = VarStatus::AtUpper;
                    } else {
                        self.status[j] = VarStatus::Free;
                    }
                }
            }
        }
    }

    /// Places nonbasic variables on their (possibly changed) bounds and
    /// refreshes the factorization. Returns false if the basis is unusable.
    fn warm_prepare(&mut self) -> bool {
        for k in 0..self.n + self.m {
            match self.status[k] {
                VarStatus::Basic => {}
                VarStatus::AtLower | VarStatus::AtUpper | VarStatus::Free => self.place_nonbasic(k),
            }
        }
        if !self.factor_valid && !self.refactor() {
            return false;
        }
        self.recompute_xb();
        true
    }

    fn place_nonbasic(&mut self, k: usize) {
        let (lo, hi) = (self.lb[k], self.ub[k]);
        let want = self.status[k];
        let (st, val) = match want {
            VarStatus::AtLower if lo.is_finite() => (VarStatus::AtLower, lo),
            VarStatus::AtUpper if hi.is_finite() => (VarStatus::AtUpper, hi),
            VarStatus::Free if lo.is_finite() && self.x[k] <= lo => (VarStatus::AtLower, lo),
            VarStatus::Free if hi.is_finite() && self.x[k] >= hi => (VarStatus::AtUpper, hi),
            VarStatus::Free => (VarStatus::Free, self.x[k]),
            _ if lo.is_finite() => (VarStatus::AtLower, lo),
            _ if hi.is_finite() => (VarStatus::AtUpper, hi),
            _ => (VarStatus::Free, 0.0),
        };
        self.status[k] = st;
        self.x[k] = val;
    }

    /// Re-derives the basic solution from scratch and checks both
    /// feasibilities, iterating again when round-off pushed it out.
    fn finish(&mut self) -> LpStatus {
        for _ in 0..4 {
            if !self.refactor() {
                return LpStatus::NumericalFailure;
            }
            self.recompute_xb();
            if self.max_primal_infeasibility() > self.opts.primal_tol {
                if self.max_dual_infeasibility() > self.opts.dual_tol * 10.0 {
                    return LpStatus::NumericalFailure;
                }
                match self.dual_simplex() {
                    Outcome::Done => continue,
                    Outcome::Stopped(s) => return s,
                }
            }
            if self.max_dual_infeasibility() > self.opts.dual_tol {
                match self.primal_simplex() {
                    Outcome::Done => continue,
                    Outcome::Stopped(s) => return s,
                }
            }
            return LpStatus::Optimal;
        }
        LpStatus::NumericalFailure
    }

    // ---- linear algebra helpers ----

    fn for_col(&self, k: usize, mut f: impl FnMut(usize, f64)) {
        if k < self.n {
            for e in self.col_start[k]..self.col_start[k + 1] {
                f(self.col_row[e], self.col_val[e]);
            }
        } else {
            f(k - self.n, -1.0);
        }
    }

    /// `B^-1 a_k`, indexed by basis position.
    fn ftran(&self, k: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        self.for_col(k, |i, a| {
            let col = &self.binv[i * m..(i + 1) * m];
            for (o, b) in out.iter_mut().zip(col) {
                *o += a * b;
            }
        });
        out
    }

    fn binv_row(&self, r: usize) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|i| self.binv[i * m + r]).collect()
    }

    fn dot_col(&self, k: usize, v: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_col(k, |i, a| s += a * v[i]);
        s
    }

    fn duals(&mut self) -> Vec<f64> {
        if self.y.is_none() {
            self.y = Some(self.compute_duals());
        }
        self.y.clone().unwrap_or_default()
    }

    fn compute_duals(&self) -> Vec<f64> {
        let m = self.m;
        let cb: Vec<(usize, f64)> = self
            .head
            .iter()
            .enumerate()
            .filter(|(_, &k)| self.cost[k] != 0.0)
            .map(|(p, &k)| (p, self.cost[k]))
            .collect();
        (0..m)
            .map(|i| {
                let row = &self.binv[i * m..(i + 1) * m];
                cb.iter().map(|&(p, c)| row[p] * c).sum()
            })
            .collect()
    }

    fn reduced_costs(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n + self.m)
            .map(|k| {
                if self.status[k] == VarStatus::Basic {
                    0.0
                } else {
                    self.cost[k] - self.dot_col(k, y)
                }
            })
            .collect()
    }

    fn recompute_xb(&mut self) {
        let m = self.m;
        let mut v = vec![0.0; m];
        for k in 0..self.n + self.m {
            if self.status[k] != VarStatus::Basic && self.x[k] != 0.0 {
                let xk = self.x[k];
                self.for_col(k, |i, a| v[i] += a * xk);
            }
        }
        let mut xb = vec![0.0; m];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                let col = &self.binv[i * m..(i + 1) * m];
                for (o, b) in xb.iter_mut().zip(col) {
                    *o -= vi * b;
                }
            }
        }
        for (p, &k) in self.head.iter().enumerate() {
            self.x[k] = xb[p];
        }
    }

    fn infeasibility(&self, k: usize) -> f64 {
        let v = self.x[k];
        (self.lb[k] - v).max(v - self.ub[k]).max(0.0)
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.head.iter().map(|&k| self.infeasibility(k)).fold(0.0, f64::max)
    }

    fn dual_infeasibility(&self, k: usize, d: f64) -> f64 {
        if self.lb[k] == self.ub[k] {
            return 0.0;
        }
        match self.status[k] {
            VarStatus::Basic => 0.0,
            VarStatus::AtLower => (-d).max(0.0),
            VarStatus::AtUpper => d.max(0.0),
            VarStatus::Free => d.abs(),
        }
    }

    fn max_dual_infeasibility(&mut self) -> f64 {
        let y = self.duals();
        let d = self.reduced_costs(&y);
        (0..self.n + self.m)
            .map(|k| self.dual_infeasibility(k, d[k]))
            .fold(0.0, f64::max)
    }

    /// Replaces the variable in basis position `r` by `q` with the column
    /// `alpha = B^-1 a_q`; `dq` is the reduced cost of `q` before the swap.
    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], dq: f64) {
        let m = self.m;
        let ar = alpha[r];
        let nz: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(p, &a)| p != r && a != 0.0)
            .map(|(p, &a)| (p, a))
            .collect();
        for i in 0..m {
            let col = &mut self.binv[i * m..(i + 1) * m];
            let v = col[r] / ar;
            if v != 0.0 {
                for &(p, a) in &nz {
                    col[p] -= a * v;
                }
                if let Some(y) = self.y.as_mut() {
                    y[i] += dq * v;
                }
            }
            col[r] = v;
        }
        let leaving = self.head[r];
        self.pos[leaving] = NONE;
        self.head[r] = q;
        self.pos[q] = r;
        self.status[q] = VarStatus::Basic;
        self.updates += 1;
    }

    /// Rebuilds `B^-1` using the block structure of logical columns. A singular
    /// basis is repaired by swapping dependent structurals for logicals.
    fn refactor(&mut self) -> bool {
        for _ in 0..3 {
            match self.try_refactor() {
                Ok(()) => {
                    self.factor_valid = true;
                    self.updates = 0;
                    self.y = None;
                    return true;
                }
                Err(swaps) => {
                    for (p, row) in swaps {
                        let k = self.head[p];
                        self.pos[k] = NONE;
                        self.status[k] = VarStatus::AtLower;
                        self.place_nonbasic(k);
                        let l = self.n + row;
                        self.head[p] = l;
                        self.pos[l] = p;
                        self.status[l] = VarStatus::Basic;
                    }
                }
            }
        }
        self.factor_valid = false;
        false
    }

    fn try_refactor(&mut self) -> Result<(), Vec<(usize, usize)>> {
        let (m, n) = (self.m, self.n);
        let mut covered = vec![false; m];
        let mut spos = Vec::new();
        for (p, &k) in self.head.iter().enumerate() {
            if k >= n {
                covered[k - n] = true;
            } else {
                spos.push(p);
            }
        }
        let rs: Vec<usize> = (0..m).filter(|&i| !covered[i]).collect();
        let k = rs.len();
        debug_assert_eq!(k, spos.len());
        let mut rowmap = vec![NONE; m];
        for (a, &i) in rs.iter().enumerate() {
            rowmap[i] = a;
        }
        let mut s = vec![0.0; k * k];
        for (b, &p) in spos.iter().enumerate() {
            self.for_col(self.head[p], |i, v| {
                if rowmap[i] != NONE {
                    s[rowmap[i] * k + b] = v;
                }
            });
        }
        let inv = match invert(&mut s, k) {
            Ok(inv) => inv,
            Err((dep_cols, free_rows)) => {
                return Err(dep_cols
                    .into_iter()
                    .zip(free_rows)
                    .map(|(b, a)| (spos[b], rs[a]))
                    .collect())
            }
        };
        let mut binv = vec![0.0; m * m];
        for (b, &p) in spos.iter().enumerate() {
            for (a, &i) in rs.iter().enumerate() {
                binv[i * m + p] = inv[b * k + a];
            }
        }
        let mut bpos = vec![NONE; n];
        for (b, &p) in spos.iter().enumerate() {
            bpos[self.head[p]] = b;
        }
        let mut w = vec![0.0; k];
        for (p, &kk) in self.head.iter().enumerate() {
            if kk < n {
                continue;
            }
            let i = kk - n;
            binv[i * m + p] = -1.0;
            w.fill(0.0);
            for &(j, a) in &self.row_coeffs[i] {
                let b = bpos[j];
                if b != NONE {
                    let row = &inv[b * k..(b + 1) * k];
                    for (o, v) in w.iter_mut().zip(row) {
                        *o += a * v;
                    }
                }
            }
            for (a, &ri) in rs.iter().enumerate() {
                binv[ri * m + p] = w[a];
            }
        }
        self.binv = binv;
        Ok(())
    }

    // ---- dual simplex ----

    fn dual_simplex(&mut self) -> Outcome {
        let tol_p = self.opts.primal_tol;
        let tol_d = self.opts.dual_tol;
        self.degenerate_streak = 0;
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::Stopped(LpStatus::IterationLimit);
            }
            if !self.factor_valid || self.updates >= self.opts.refactor_every {
                if !self.refactor() {
                    return Outcome::Stopped(LpStatus::NumericalFailure);
                }
                self.recompute_xb();
            }
            let bland = self.degenerate_streak >= self.opts.bland_after;
            let mut r = NONE;
            let mut best = tol_p;
            for (p, &k) in self.head.iter().enumerate() {
                let inf = self.infeasibility(k);
                if inf > tol_p {
                    let better = if bland {
                        r == NONE || k < self.head[r]
                    } else {
                        inf > best
                    };
                    if better {
                        r = p;
                        best = inf;
                    }
                }
            }
            if r == NONE {
                return Outcome::Done;
            }
            let leaving = self.head[r];
            let raise = self.x[leaving] < self.lb[leaving];
            let target = if raise { self.lb[leaving] } else { self.ub[leaving] };

            let y = self.duals();
            let rho = self.binv_row(r);
            // candidates: (var, alpha_r, effective |d|)
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for k in 0..self.n + self.m {
                let st = self.status[k];
                if st == VarStatus::Basic || self.lb[k] == self.ub[k] {
                    continue;
                }
                let a = self.dot_col(k, &rho);
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                // Moving x_k by dx changes x_leaving by -a*dx.
                let ok = match st {
                    VarStatus::AtLower => (a < 0.0) == raise,
                    VarStatus::AtUpper => (a > 0.0) == raise,
                    VarStatus::Free => true,
                    VarStatus::Basic => false,
                };
                if !ok {
                    continue;
                }
                let d = self.cost[k] - self.dot_col(k, &y);
                let de = match st {
                    VarStatus::AtLower => d.max(0.0),
                    VarStatus::AtUpper => (-d).max(0.0),
                    _ => d.abs(),
                };
                cands.push((k, a, de));
            }
            if cands.is_empty() {
                return Outcome::Stopped(LpStatus::Infeasible);
            }
            let q = if bland {
                let mut bi = 0;
                for (c, &(k, a, de)) in cands.iter().enumerate() {
                    let (bk, ba, bd) = cands[bi];
                    let (rc, rb) = (de / a.abs(), bd / ba.abs());
                    if rc < rb || (rc == rb && k < bk) {
                        bi = c;
                    }
                }
                cands[bi].0
            } else {
                let tmax = cands
                    .iter()
                    .map(|&(_, a, de)| (de + tol_d) / a.abs())
                    .fold(f64::INFINITY, f64::min);
                let mut bi = NONE;
                for (c, &(_, a, de)) in cands.iter().enumerate() {
                    if de / a.abs() <= tmax && (bi == NONE || a.abs() > cands[bi].1.abs()) {
                        bi = c;
                    }
                }
                cands[bi].0
            };
            let dq_eff = cands.iter().find(|c| c.0 == q).map(|c| c.2).unwrap_or(0.0);
            let alpha = self.ftran(q);
            let arq = alpha[r];
            if arq.abs() <= self.opts.pivot_tol {
                if self.updates == 0 {
                    return Outcome::Stopped(LpStatus::NumericalFailure);
                }
                self.factor_valid = false;
                continue;
            }
            let delta = (self.x[leaving] - target) / arq;
            for (p, &k) in self.head.iter().enumerate() {
                self.x[k] -= alpha[p] * delta;
            }
            self.x[q] += delta;
            let dq = self.cost[q] - self.dot_col(q, &y);
            self.pivot(r, q, &alpha, dq);
            self.x[leaving] = target;
            self.status[leaving] = if raise { VarStatus::AtLower } else { VarStatus::AtUpper };
            if self.lb[leaving] == self.ub[leaving] {
                self.status[leaving] = VarStatus::AtLower;
            }
            self.iterations += 1;
            if dq_eff <= 1e-12 {
                self.degenerate_streak += 1;
            } else {
                self.degenerate_streak = 0;
            }
        }
    }

    // ---- primal simplex ----

    fn primal_simplex(&mut self) -> Outcome {
        let tol_p = self.opts.primal_tol;
        let tol_d = self.opts.dual_tol;
        self.degenerate_streak = 0;
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::Stopped(LpStatus::IterationLimit);
            }
            if !self.factor_valid || self.updates >= self.opts.refactor_every {
                if !self.refactor() {
                    return Outcome::Stopped(LpStatus::NumericalFailure);
                }
                self.recompute_xb();
            }
            let bland = self.degenerate_streak >= self.opts.bland_after;
            let y = self.duals();
            let mut q = NONE;
            let mut best = 0.0;
            for k in 0..self.n + self.m {
                if self.status[k] == VarStatus::Basic || self.lb[k] == self.ub[k] {
                    continue;
                }
                let d = self.cost[k] - self.dot_col(k, &y);
                let inf = self.dual_infeasibility(k, d);
                if inf > tol_d {
                    if bland {
                        q = k;
                        best = d;
                        break;
                    }
                    if inf > best.abs() {
                        q = k;
                        best = d;
                    }
                }
            }
            if q == NONE {
                return Outcome::Done;
            }
            let dir = if best < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);
            // Ratio test: x_B moves by -dir*t*alpha.
            let own = if dir > 0.0 {
                self.ub[q] - self.x[q]
            } else {
                self.x[q] - self.lb[q]
            };
            let mut rows: Vec<(usize, f64, f64, f64)> = Vec::new(); // (pos, rate, ratio, relaxed)
            for (p, &k) in self.head.iter().enumerate() {
                let rate = -dir * alpha[p];
                if rate.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let (room, bound_ok) = if rate < 0.0 {
                    (self.x[k] - self.lb[k], self.lb[k].is_finite())
                } else {
                    (self.ub[k] - self.x[k], self.ub[k].is_finite())
                };
                if !bound_ok {
                    continue;
                }
                rows.push((p, rate, room.max(0.0) / rate.abs(), (room + tol_p) / rate.abs()));
            }
            let mut leave = NONE;
            let mut step;
            if bland {
                step = f64::INFINITY;
                for &(p, _, ratio, _) in &rows {
                    if ratio < step || (ratio == step && leave != NONE && self.head[p] < self.head[leave]) {
                        step = ratio;
                        leave = p;
                    }
                }
            } else {
                let tmax = rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
                let mut big = 0.0;
                step = f64::INFINITY;
                for &(p, rate, ratio, _) in &rows {
                    if ratio <= tmax && rate.abs() > big {
                        big = rate.abs();
                        leave = p;
                        step = ratio;
                    }
                }
            }
            if own <= step {
                if own.is_infinite() {
                    return Outcome::Stopped(LpStatus::Unbounded);
                }
                // bound flip
                for (p, &k) in self.head.iter().enumerate() {
                    self.x[k] -= dir * own * alpha[p];
                }
                if dir > 0.0 {
                    self.x[q] = self.ub[q];
                    self.status[q] = VarStatus::AtUpper;
                } else {
                    self.x[q] = self.lb[q];
                    self.status[q] = VarStatus::AtLower;
                }
                self.iterations += 1;
                self.degenerate_streak = 0;
                continue;
            }
            if leave == NONE {
                return Outcome::Stopped(LpStatus::Unbounded);
            }
            let t = step.max(0.0);
            let leaving = self.head[leave];
            let rate = -dir * alpha[leave];
            for (p, &k) in self.head.iter().enumerate() {
                self.x[k] -= dir * t * alpha[p];
            }
            self.x[q] += dir * t;
            self.pivot(leave, q, &alpha, best);
            if rate < 0.0 {
                self.x[leaving] = self.lb[leaving];
                self.status[leaving] = VarStatus::AtLower;
            } else {
                self.x[leaving] = self.ub[leaving];
                self.status[leaving] = VarStatus::AtUpper;
            }
            if self.lb[leaving] == self.ub[leaving] {
                self.status[leaving] = VarStatus::AtLower;
            }
            self.iterations += 1;
            if t <= 1e-12 {
                self.degenerate_streak += 1;
            } else {
                self.degenerate_streak = 0;
            }
        }
    }

    /// Current point in the caller's sense. Meaningful after an optimal solve.
    pub fn solution(&self) -> LpSolution {
        let n = self.n;
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let status = self.last_status;
        let x: Vec<f64> = if self.has_basis {
            self.x[..n].to_vec()
        } else {
            vec![0.0; n]
        };
        let row_activity: Vec<f64> = self
            .row_coeffs
            .iter()
            .map(|r| r.iter().map(|&(j, a)| a * x[j]).sum())
            .collect();
        let (duals, reduced_costs) = if self.has_basis && self.factor_valid {
            let y = self.compute_duals();
            let d = self.reduced_costs(&y);
            (
                y.iter().map(|v| sign * v).collect(),
                d[..n].iter().map(|v| sign * v).collect(),
            )
        } else {
            (vec![0.0; self.m], vec![0.0; n])
        };
        let objective = self.offset + sign * x.iter().zip(&self.cost).map(|(a, c)| a * c).sum::<f64>();
        LpSolution {
            status,
            objective,
            x,
            row_activity,
            duals,
            reduced_costs,
            iterations: self.iterations,
            basis: self.basis(),
        }
    }
}

/// Gauss-Jordan inverse of a row-major `k x k` matrix. On singularity returns
/// the dependent column indices and an equal number of unused rows.
#[allow(clippy::type_complexity)]
fn invert(s: &mut [f64], k: usize) -> Result<Vec<f64>, (Vec<usize>, Vec<usize>)> {
    let mut inv = vec![0.0; k * k];
    for a in 0..k {
        inv[a * k + a] = 1.0;
    }
    let mut used = vec![NONE; k]; // row -> column it pivots
    let mut pivot_row = vec![NONE; k];
    let mut dep = Vec::new();
    let scale = s.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for b in 0..k {
        let mut best = NONE;
        let mut bv = 1e-11 * scale;
        for a in 0..k {
            if used[a] == NONE && s[a * k + b].abs() > bv {
                bv = s[a * k + b].abs();
                best = a;
            }
        }
        if best == NONE {
            dep.push(b);
            continue;
        }
        used[best] = b;
        pivot_row[b] = best;
        let pv = s[best * k + b];
        for c in 0..k {
            s[best * k + c] /= pv;
            inv[best * k + c] /= pv;
        }
        for a in 0..k {
            if a == best {
                continue;
            }
            let f = s[a * k + b];
            if f == 0.0 {
                continue;
            }
            for c in 0..k {
                s[a * k + c] -= f * s[best * k + c];
                inv[a * k + c] -= f * inv[best * k + c];
            }
        }
    }
    if !dep.is_empty() {
        let free: Vec<usize> = (0..k).filter(|&a| used[a] == NONE).collect();
        return Err((dep, free));
    }
    let mut out = vec![0.0; k * k];
    for b in 0..k {
        let a = pivot_row[b];
        out[b * k..(b + 1) * k].copy_from_slice(&inv[a * k..(a + 1) * k]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-7 * (1.0 + b.abs())
    }

    #[test]
    fn one_constraint_max() {
        let mut lp = LinearProgram::new("t", Sense::Maximize);
        let x = lp.add_col("x", 0.0, f64::INFINITY, 1.0);
        lp.add_row("c", f64::NEG_INFINITY, 1.0, [(x, 1.0)]);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.x[0], 1.0));
        assert!(close(s.duals[0], 1.0));
        assert!(close(s.objective, 1.0));
    }

    #[test]
    fn two_unit_dispatch() {
        let mut lp = LinearProgram::new("t", Sense::Minimize);
        let g1 = lp.add_col("g1", 0.0, f64::INFINITY, 15.0);
        let g2 = lp.add_col("g2", 0.0, f64::INFINITY, 200.0);
        lp.add_row("bal", 40.0, 40.0, [(g1, 1.0), (g2, 1.0)]);
        lp.add_row("cap", f64::NEG_INFINITY, 30.0, [(g1, 1.0)]);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.x[0], 30.0) && close(s.x[1], 10.0));
        assert!(close(s.duals[0], 200.0));
        assert!(close(s.duals[1], -185.0));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new("t", Sense::Minimize);
        let x = lp.add_col("x", 0.0, 1.0, 1.0);
        lp.add_row("c", 2.0, f64::INFINITY, [(x, 1.0)]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new("t", Sense::Maximize);
        let x = lp.add_col("x", 0.0, f64::INFINITY, 1.0);
        let y = lp.add_col("y", 0.0, f64::INFINITY, 0.0);
        lp.add_row("c", f64::NEG_INFINITY, 1.0, [(x, 1.0), (y, -1.0)]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_costed_column() {
        // min x s.t. x >= -3 (as a row), x free
        let mut lp = LinearProgram::new("t", Sense::Minimize);
        let x = lp.add_col("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        lp.add_row("c", -3.0, f64::INFINITY, [(x, 1.0)]);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.x[0], -3.0));
        assert!(close(s.duals[0], 1.0));
    }

    #[test]
    fn warm_start_after_bound_change() {
        let mut lp = LinearProgram::new("t", Sense::Maximize);
        let x = lp.add_col("x", 0.0, 10.0, 3.0);
        let y = lp.add_col("y", 0.0, 10.0, 2.0);
        lp.add_row("c", f64::NEG_INFINITY, 4.0, [(x, 1.0), (y, 1.0)]);
        let mut s = LpSolver::new(&lp, SimplexOptions::default()).unwrap();
        assert_eq!(s.solve(), LpStatus::Optimal);
        assert!(close(s.solution().objective, 12.0));
        s.set_col_bounds(0, 0.0, 1.5);
        assert_eq!(s.solve(), LpStatus::Optimal);
        let sol = s.solution();
        assert!(close(sol.objective, 1.5 * 3.0 + 2.5 * 2.0));
    }

    #[test]
    fn inverse_reports_dependency() {
        let mut m = vec![1.0, 2.0, 2.0, 4.0];
        let err = invert(&mut m, 2).unwrap_err();
        assert_eq!(err.0, vec![1]);
        assert_eq!(err.1.len(), 1);
    }
}
