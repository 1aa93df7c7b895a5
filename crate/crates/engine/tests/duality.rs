//! Random feasible LPs checked against an independent KKT / dual-objective
//! evaluation.

mod support;

use lpmilp::{solve_lp, LinearProgram, LpStatus, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::lp_check::{kkt, random_lp, INF};

#[test]
fn hundred_random_lps_close_the_duality_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut optimal = 0;
    for k in 0..100 {
        let lp = random_lp(&mut rng);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "instance {k}");
        let c = kkt(&lp, &sol);
        assert!(c.primal_infeas <= 1e-7, "instance {k}: primal {}", c.primal_infeas);
        assert!(c.stationarity <= 1e-7, "instance {k}: stationarity {}", c.stationarity);
        assert!(c.dual_sign <= 1e-7, "instance {k}: dual sign {}", c.dual_sign);
        assert!(c.complementarity <= 1e-7, "instance {k}: compl {}", c.complementarity);
        assert!(
            (c.dual_objective - sol.objective).abs() <= 1e-6,
            "instance {k}: primal {} dual {}",
            sol.objective,
            c.dual_objective
        );
        optimal += 1;
    }
    assert_eq!(optimal, 100);
}

#[test]
fn degenerate_corner_terminates() {
    // x + y <= 1, x - y <= 1, max x: optimum at the corner (1, 0) where both
    // rows are tight.
    let mut lp = LinearProgram::new("corner", Sense::Maximize);
    let x = lp.add_col("x", 0.0, INF, 1.0);
    let y = lp.add_col("y", 0.0, INF, 0.0);
    lp.add_row("a", -INF, 1.0, [(x, 1.0), (y, 1.0)]);
    lp.add_row("b", -INF, 1.0, [(x, 1.0), (y, -1.0)]);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-9);
    let c = kkt(&lp, &sol);
    assert!((c.dual_objective - 1.0).abs() < 1e-9);
}

#[test]
fn heavily_degenerate_assignment() {
    // 6x6 assignment LP: massively degenerate, integral optimum.
    let n = 6;
    let mut lp = LinearProgram::new("assign", Sense::Minimize);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cost = vec![vec![0.0; n]; n];
    for (i, row) in cost.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = rng.gen_range(1..10) as f64;
            lp.add_col(format!("x{i}_{j}"), 0.0, INF, *c);
        }
    }
    for i in 0..n {
        lp.add_row(format!("r{i}"), 1.0, 1.0, (0..n).map(|j| (i * n + j, 1.0)));
        lp.add_row(format!("c{i}"), 1.0, 1.0, (0..n).map(|j| (j * n + i, 1.0)));
    }
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    // brute force over permutations
    fn best(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == cost.len() {
            return 0.0;
        }
        let mut b = f64::INFINITY;
        for j in 0..cost.len() {
            if !used[j] {
                used[j] = true;
                b = b.min(cost[row][j] + best(cost, row + 1, used));
                used[j] = false;
            }
        }
        b
    }
    let opt = best(&cost, 0, &mut vec![false; n]);
    assert!((sol.objective - opt).abs() < 1e-9);
}
