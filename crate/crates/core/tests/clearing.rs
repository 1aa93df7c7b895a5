use hydrobid::cases::illustrative;
use hydrobid::*;

fn st_bid(inst: &MarketInstance, da: Step, fc: Step) -> BidSet {
    BidSet::flat(inst, da, fc)
}

#[test]
fn low_demand_zero_offer() {
    let c = illustrative(false, [4.0, 5.0, 25.0], 0.0);
    let bids = st_bid(
        &c.instance,
        Step {
            price: 0.0,
            volume: 0.0,
        },
        Step {
            price: 0.0,
            volume: 0.0,
        },
    );
    let lp = build_da_lp(&c.instance, &bids, &c.scenarios[0]).unwrap();
    let r = clear_da(&lp);
    assert!(r.is_optimal());
    let g = r.x[lp.g(Unit::Hydro(1), 0)];
    assert!((g - 34.0).abs() < 1e-9, "{g}");
    for row in lp.prices(&r) {
        assert!(row[0].abs() < 1e-9, "{row:?}");
    }
    let k = kkt_residuals(&lp, &r);
    assert!(k.max() < 1e-6, "{k:?}");
    assert!(strong_duality_gap(&lp, &r) < 1e-6);
}

#[test]
fn medium_demand_offer_at_thermal_cost() {
    let c = illustrative(false, [50.0, 50.0, 40.0], 0.0);
    let bids = st_bid(
        &c.instance,
        Step {
            price: 15.0,
            volume: 90.0,
        },
        Step {
            price: 0.0,
            volume: 0.0,
        },
    );
    let lp = build_da_lp(&c.instance, &bids, &c.scenarios[0]).unwrap();
    let r = clear_da(&lp);
    let p = lp.offer_dispatch(&r)[0][0][0];
    let g2 = r.x[lp.g(Unit::Hydro(1), 0)];
    let g3 = r.x[lp.g(Unit::Thermal(0), 0)];
    eprintln!("{p} {g2} {g3} {:?}", lp.prices(&r));
    for row in lp.prices(&r) {
        assert!((row[0] - 15.0).abs() < 1e-9);
    }
    assert!((p + g2 + g3 - 140.0).abs() < 1e-9);
}

#[test]
fn high_demand_with_fcrn() {
    let c = illustrative(false, [50.0, 50.0, 70.0], 20.0);
    let bids = st_bid(
        &c.instance,
        Step {
            price: 200.0,
            volume: 20.0,
        },
        Step {
            price: 100.0,
            volume: 20.0,
        },
    );
    let inst = &c.instance;
    let lp = build_da_lp(inst, &bids, &c.scenarios[0]).unwrap();
    let r = clear_da(&lp);
    assert!((lp.prices(&r)[0][0] - 200.0).abs() < 1e-9);
    let out = DaOutcome::from_clearing(inst, &lp, &r).unwrap();
    let fl = build_fcrn_lp(inst, &bids, &out, &c.scenarios[0]).unwrap();
    let fr = clear_fcrn(&fl);
    assert!(fr.is_optimal());
    eprintln!("{:?} {:?}", fl.offer_dispatch(&fr), fl.prices(&fr));
    assert!((fl.offer_dispatch(&fr)[0][0][0] - 20.0).abs() < 1e-9);
    assert!((fl.prices(&fr)[0] - 100.0).abs() < 1e-9);
    let k = fcrn_kkt_residuals(&fl, &fr);
    assert!(k.max() < 1e-6, "{k:?}");
    assert!(fcrn_strong_duality_gap(&fl, &fr) < 1e-6);
}
