//! Exhaustive bid enumeration for small one-period instances: every
//! candidate offer is cleared with the DA and FCR-N LPs and the strategic
//! revenue is computed directly from prices and cleared volumes.

use hydrobid::cases::ThreeBus;
use hydrobid::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Keeps the strategic price strictly below a competitor's cost so the
/// clearing LP has no tie to break.
pub const UNDERCUT: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct Toy {
    pub case: CaseData,
    /// Competitor marginal costs in each market, for the price grid.
    pub da_costs: Vec<f64>,
    pub fc_costs: Vec<f64>,
    pub with_fc: bool,
}

/// Random three-bus chain. With FCR-N demand the strategic station offers
/// one segment per market; without it, two DA segments.
pub fn random_toy(rng: &mut ChaCha8Rng, with_fc: bool) -> Toy {
    let nst_cost = rng.gen_range(1..=9) as f64;
    let mut th_cost = rng.gen_range(10..=30) as f64;
    if th_cost == nst_cost {
        th_cost += 1.0;
    }
    let demand = [0, 1, 2].map(|_| rng.gen_range(0..=6) as f64);
    let ntc = [rng.gen_range(2..=10) as f64, rng.gen_range(2..=10) as f64];
    let fc = if with_fc { rng.gen_range(1..=6) as f64 } else { 0.0 };
    let mut b = ThreeBus::single_period(demand, fc, ntc);
    b.name = "toy".into();
    b.segments = if with_fc { 1 } else { 2 };
    b.st_max = 6.0;
    b.st_q_max = 6.0;
    b.nst_max = rng.gen_range(2..=5) as f64;
    b.nst_q_max = b.nst_max;
    b.th_max = rng.gen_range(3..=8) as f64;
    b.th_cost_da = th_cost;
    // Non-strategic DA cost is the value of its stored water.
    b.future_prod_equiv = [1e-3, nst_cost];
    let nst_fc = rng.gen_range(5..=40) as f64;
    let mut th_fc = rng.gen_range(5..=40) as f64;
    if th_fc == nst_fc {
        th_fc += 1.0;
    }
    b.nst_cost_fc = nst_fc;
    b.th_cost_fc = th_fc;
    Toy {
        case: b.build(),
        da_costs: vec![nst_cost, th_cost],
        fc_costs: vec![nst_fc, th_fc],
        with_fc,
    }
}

fn price_grid(costs: &[f64], cap: f64) -> Vec<f64> {
    let mut v = vec![0.0, cap - UNDERCUT];
    v.extend(costs.iter().map(|c| c - UNDERCUT).filter(|&c| c > 0.0));
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn volume_grid(max: f64) -> Vec<f64> {
    (0..=(2.0 * max) as usize).map(|k| k as f64 * 0.5).collect()
}

/// Revenue of one offer, or `None` if a clearing fails.
pub fn revenue(toy: &Toy, bids: &BidSet) -> Option<f64> {
    let inst = &toy.case.instance;
    let scen = &toy.case.scenarios[0];
    let da = build_da_lp(inst, bids, scen).ok()?;
    let r = clear_da(&da);
    if !r.is_optimal() {
        return None;
    }
    let cleared: f64 = da.offer_dispatch(&r)[0].iter().map(|t| t[0]).sum();
    let price = da.prices(&r)[inst.hydro_plants[0].node][0];
    let out = DaOutcome::from_clearing(inst, &da, &r).ok()?;
    let fc = build_fcrn_lp(inst, bids, &out, scen).ok()?;
    let fr = clear_fcrn(&fc);
    if !fr.is_optimal() {
        return None;
    }
    let fc_cleared: f64 = fc.offer_dispatch(&fr)[0].iter().map(|t| t[0]).sum();
    let fc_price = fc.prices(&fr)[0];
    let st = &inst.hydro_plants[0];
    let content = scen.initial_content[0] - cleared / st.segments[0].prod_equiv;
    let water = scen.future_price * scen.future_prod_equiv[0] * content;
    Some(cleared * price + fc_cleared * fc_price + water)
}

/// Best revenue over the candidate grid and the offer achieving it.
pub fn enumerate(toy: &Toy) -> (f64, BidSet) {
    let inst = &toy.case.instance;
    let pmax = inst.hydro_plants[0].max_power;
    let da_cap = inst.da_price_cap.unwrap();
    let fc_cap = inst.fc_price_cap.unwrap();
    let da_prices = price_grid(&toy.da_costs, da_cap);
    let fc_prices = price_grid(&toy.fc_costs, fc_cap);
    let vols = volume_grid(pmax);
    let mut best = (f64::NEG_INFINITY, BidSet::zeros(1, inst.segments, 1));
    let mut try_bids = |b: BidSet| {
        if let Some(v) = revenue(toy, &b) {
            if v > best.0 {
                best = (v, b);
            }
        }
    };
    if toy.with_fc {
        for &bd in &da_prices {
            for &vd in &vols {
                for &bf in &fc_prices {
                    // Capacity envelope without ID trades: vf <= vd, vd + vf <= max.
                    for &vf in vols.iter().filter(|&&vf| vf <= vd && vd + vf <= pmax) {
                        try_bids(BidSet::flat(
                            inst,
                            Step { price: bd, volume: vd },
                            Step { price: bf, volume: vf },
                        ));
                    }
                }
            }
        }
    } else {
        for (i, &b1) in da_prices.iter().enumerate() {
            for &b2 in &da_prices[i..] {
                for &v1 in &vols {
                    for &v2 in vols.iter().filter(|&&v2| v1 + v2 <= pmax) {
                        let mut b = BidSet::zeros(1, 2, 1);
                        b.da_price[0][0][0] = b1;
                        b.da_price[0][1][0] = b2;
                        b.da_volume[0][0][0] = v1;
                        b.da_volume[0][1][0] = v2;
                        try_bids(b);
                    }
                }
            }
        }
    }
    best
}
