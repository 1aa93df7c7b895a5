//! The single-level MILP against exhaustive enumeration of offers.

mod support;

use hydrobid::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::oracle::{enumerate, random_toy};

#[test]
fn milp_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut worst: f64 = 0.0;
    for k in 0..24 {
        let toy = random_toy(&mut rng, k % 2 == 0);
        let c = &toy.case;
        let (best, bids) = enumerate(&toy);
        let sol = solve_bilevel(&c.instance, &c.scenarios, &SolveOptions::default()).unwrap();
        let rel = (sol.objective_bilinear - best).abs() / (1.0 + best.abs());
        eprintln!(
            "{k}: fc={} oracle {best:.6} milp {:.6} bound {:.6} polished {} rel {rel:.2e} {:?}",
            toy.with_fc, sol.objective_bilinear, sol.bound, sol.polished, bids
        );
        worst = worst.max(rel);
        let rep = verify_reformulation(&c.instance, &c.scenarios, &sol);
        assert!(rep.passed(), "{k}: {:?}", rep.failures);
    }
    assert!(worst <= 1e-5, "worst relative gap {worst:e}");
}
