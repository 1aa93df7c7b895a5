mod support;

use hydrobid::cases::{illustrative, ThreeBus};
use hydrobid::lower::RowKind;
use hydrobid::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::oracle::random_toy;

fn check_lower(model: &LowerModel, r: &ClearingResult) -> Result<(), TestCaseError> {
    prop_assert!(r.is_optimal());
    let k = model.kkt_residuals(&r.x, &r.y);
    prop_assert!(k.max() < 1e-6, "{k:?}");
    prop_assert!(model.strong_duality_gap(&r.x, &r.y) < 1e-6);
    for (row, &y) in model.rows.iter().zip(&r.y) {
        if row.kind == RowKind::Ge {
            prop_assert!(y >= -1e-9, "{} dual {y}", row.name);
        }
    }
    Ok(())
}

fn cascade_bids(inst: &MarketInstance, prices: &[f64], volumes: &[f64]) -> BidSet {
    let mut b = BidSet::zeros(1, 2, inst.horizon);
    for t in 0..inst.horizon {
        let (p0, p1) = (
            prices[2 * t].min(prices[2 * t + 1]),
            prices[2 * t].max(prices[2 * t + 1]),
        );
        b.da_price[0][0][t] = p0;
        b.da_price[0][1][t] = p1;
        b.da_volume[0][0][t] = volumes[2 * t];
        b.da_volume[0][1][t] = volumes[2 * t + 1];
        b.fc_price[0][0][t] = 0.5 * p0;
        b.fc_price[0][1][t] = 0.5 * p1;
        b.fc_volume[0][0][t] = 0.5 * volumes[2 * t];
    }
    b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixed_bid_clearings_are_kkt_points(
        demand in prop::array::uniform3(0.0..90.0f64),
        fc in 0.0..40.0f64,
        congested in any::<bool>(),
        da in (0.0..200.0f64, 0.0..100.0f64),
        fcb in (0.0..100.0f64, 0.0..50.0f64),
    ) {
        let c = illustrative(congested, demand, fc);
        let (inst, scen) = (&c.instance, &c.scenarios[0]);
        let bids = BidSet::flat(inst, Step { price: da.0, volume: da.1 }, Step { price: fcb.0, volume: fcb.1 });
        let lp = build_da_lp(inst, &bids, scen).unwrap();
        let r = clear_da(&lp);
        check_lower(&lp.model, &r)?;
        let out = DaOutcome::from_clearing(inst, &lp, &r).unwrap();
        let fl = build_fcrn_lp(inst, &bids, &out, scen).unwrap();
        let fr = clear_fcrn(&fl);
        check_lower(&fl.model, &fr)?;
        // FCR-N never exceeds the DA dispatch it is carved from.
        prop_assert!(fl.offer_dispatch(&fr)[0][0][0] <= lp.offer_dispatch(&r)[0][0][0] + 1e-7);
    }

    #[test]
    fn cascade_mass_balance_closes(
        demand in prop::collection::vec(0.0..150.0f64, 3),
        prices in prop::collection::vec(0.0..200.0f64, 6),
        volumes in prop::collection::vec(0.0..50.0f64, 6),
    ) {
        let mut b = ThreeBus::single_period([0.0; 3], 10.0, [200.0, 200.0]);
        b.periods = 3;
        b.segments = 2;
        b.cascade = true;
        b.inflow = [10.0, 20.0];
        b.demand_da = vec![vec![0.0; 3], vec![0.0; 3], demand];
        b.demand_fc = vec![10.0; 3];
        b.id_price_up = vec![0.0; 3];
        b.id_price_down = vec![0.0; 3];
        let c = b.build();
        let (inst, scen) = (&c.instance, &c.scenarios[0]);
        let bids = cascade_bids(inst, &prices, &volumes);
        let lp = build_da_lp(inst, &bids, scen).unwrap();
        let r = clear_da(&lp);
        check_lower(&lp.model, &r)?;
        let ix = &lp.index;
        for h in 0..2 {
            for t in 0..3 {
                let prev = if t == 0 { scen.initial_content[h] } else { r.x[ix.content[h][t - 1]] };
                let out: f64 = ix.q[h].iter().map(|s| r.x[s[t]]).sum::<f64>() + r.x[ix.spill[h][t]];
                let upstream = if h == 1 { ix.q[0].iter().map(|s| r.x[s[t]]).sum::<f64>() + r.x[ix.spill[0][t]] } else { 0.0 };
                let resid = r.x[ix.content[h][t]] - prev + out - scen.inflow[h][t] - upstream;
                prop_assert!(resid.abs() < 1e-7, "station {h} period {t}: {resid}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn optimal_bids_are_monotone_and_certified(seed in any::<u64>(), with_fc in any::<bool>()) {
        let toy = random_toy(&mut ChaCha8Rng::seed_from_u64(seed), with_fc);
        let (inst, sc) = (&toy.case.instance, &toy.case.scenarios);
        let sol = solve_bilevel(inst, sc, &SolveOptions::default()).unwrap();
        let rep = verify_reformulation(inst, sc, &sol);
        prop_assert!(rep.passed(), "{:?}", rep.failures);
        prop_assert!(validate_bids(inst, &sol.bids).is_empty());
        for c in extract_bids(inst, &sol) {
            for w in c.da.windows(2).chain(c.fc.windows(2)) {
                prop_assert!(w[0].price <= w[1].price + 1e-9);
            }
        }
    }
}

#[test]
fn empty_market_trades_nothing() {
    let c = illustrative(false, [0.0; 3], 0.0);
    let sol = solve_bilevel(&c.instance, &c.scenarios, &SolveOptions::default()).unwrap();
    assert!(verify_reformulation(&c.instance, &c.scenarios, &sol).passed());
    let r = &sol.revenue[0];
    assert!(r.da.abs() < 1e-9 && r.fc.abs() < 1e-9 && r.id.abs() < 1e-9);
    // Only the untouched reservoir is worth anything: 500 * 1 * 1e-3.
    assert!((sol.objective - 0.5).abs() < 1e-9);
}
