use lpmilp::{solve_milp, LinearProgram, MilpOptions, MilpStatus, MixedIntegerProgram, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mip(rng: &mut ChaCha8Rng) -> (MixedIntegerProgram, usize) {
    let nb = rng.gen_range(2..9);
    let nc = rng.gen_range(0..4);
    let mut lp = LinearProgram::new("r", Sense::Maximize);
    for j in 0..nb {
        lp.add_col(format!("b{j}"), 0.0, 1.0, rng.gen_range(-2.0..6.0));
    }
    for j in 0..nc {
        lp.add_col(format!("c{j}"), 0.0, 3.0, rng.gen_range(-1.0..3.0));
    }
    for i in 0..rng.gen_range(1..5) {
        let mut coeffs = Vec::new();
        for j in 0..nb + nc {
            if rng.gen_bool(0.6) {
                coeffs.push((j, rng.gen_range(0.5..4.0)));
            }
        }
        lp.add_row(format!("k{i}"), f64::NEG_INFINITY, rng.gen_range(2.0..8.0), coeffs);
    }
    let mut mip = MixedIntegerProgram::new(lp);
    for j in 0..nb {
        mip.mark_binary(j);
    }
    (mip, nb)
}

/// Enumerate binaries, solving the continuous remainder as an LP.
fn enumerate(mip: &MixedIntegerProgram, nb: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for mask in 0..(1u32 << nb) {
        let mut lp = mip.lp.clone();
        for j in 0..nb {
            let v = ((mask >> j) & 1) as f64;
            lp.set_bounds(j, v, v);
        }
        let s = lpmilp::solve_lp(&lp).unwrap();
        if s.is_optimal() {
            best = best.max(s.objective);
        }
    }
    best
}

#[test]
fn matches_enumeration_with_monotone_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..60 {
        let (mip, nb) = random_mip(&mut rng);
        let s = solve_milp(&mip, MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal, "instance {k}");
        let e = enumerate(&mip, nb);
        assert!((s.objective - e).abs() <= 1e-6, "instance {k}: {} vs {e}", s.objective);
        for w in s.bound_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "instance {k}: bound rose {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn repeated_solves_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mip, _) = random_mip(&mut rng);
    let a = solve_milp(&mip, MilpOptions::default()).unwrap();
    let b = solve_milp(&mip, MilpOptions::default()).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.bound_history, b.bound_history);
}

#[test]
fn node_limit_reports_bound() {
    let mut lp = LinearProgram::new("k", Sense::Maximize);
    let w = [3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 4.0, 6.0];
    for (j, wj) in w.iter().enumerate() {
        lp.add_col(format!("x{j}"), 0.0, 1.0, wj + 0.3 * j as f64);
    }
    lp.add_row(
        "cap",
        f64::NEG_INFINITY,
        20.5,
        w.iter().enumerate().map(|(j, &wj)| (j, wj)),
    );
    let mut mip = MixedIntegerProgram::new(lp);
    for j in 0..w.len() {
        mip.mark_binary(j);
    }
    let opts = MilpOptions {
        node_limit: Some(2),
        ..Default::default()
    };
    let s = solve_milp(&mip, opts).unwrap();
    assert_eq!(s.status, MilpStatus::NodeLimit);
    assert!(s.bound >= enumerate(&mip, w.len()) - 1e-9);
}

#[test]
fn heuristic_candidate_is_used_when_feasible() {
    let mut lp = LinearProgram::new("h", Sense::Maximize);
    let a = lp.add_col("a", 0.0, 1.0, 2.0);
    let b = lp.add_col("b", 0.0, 1.0, 3.0);
    lp.add_row("c", f64::NEG_INFINITY, 1.5, [(a, 1.0), (b, 1.0)]);
    let mut mip = MixedIntegerProgram::new(lp);
    mip.mark_binary(a);
    mip.mark_binary(b);
    let mut calls = 0;
    let opts = MilpOptions {
        heuristic: Some(Box::new(|_x: &[f64]| {
            calls += 1;
            Some(vec![0.0, 1.0])
        })),
        ..Default::default()
    };
    let s = solve_milp(&mip, opts).unwrap();
    assert_eq!(s.x, vec![0.0, 1.0]);
    assert!(calls >= 1);
}
