use hydrobid::cases::cascade_three_period;
use hydrobid::*;

const TOL: f64 = 1e-4;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + b.abs())
}

#[test]
fn three_period_cascade_outcomes() {
    let c = cascade_three_period();
    let (inst, sc) = (&c.instance, &c.scenarios[0]);
    let sol = solve_bilevel(inst, &c.scenarios, &SolveOptions::default()).unwrap();
    assert!(verify_reformulation(inst, &c.scenarios, &sol).passed());
    let net_id = |t: usize| sol.id_up[0][0][t] - sol.id_down[0][0][t];
    let st = Unit::Hydro(0);

    // Thermal sets both prices; the station buys its full ID allowance to
    // resell in DA.
    assert!(sol.da_prices[0].iter().all(|n| close(n[0], 48.0)));
    assert!(close(sol.fc_prices[0][0], 50.0));
    assert!(close(net_id(0), -30.0));

    // Withholding pushes both markets to their caps; the surplus goes to ID.
    assert!(sol.da_prices[0].iter().all(|n| close(n[1], 200.0)));
    assert!(close(sol.fc_prices[0][1], 100.0));
    assert!(close(net_id(1), 15.0));
    assert!(close(sol.da_dispatch(inst, 0, st, 1), 35.0));

    assert!(close(sol.fc_prices[0][2], 50.0));

    // Hand tally: DA, FCR-N and ID cash per period plus the value of the
    // strategic reservoir, whose water is worth both stations' equivalents.
    let mut cash = 0.0;
    for t in 0..3 {
        let da_p = sol.da_prices[0][0][t];
        cash += da_p * sol.da_dispatch(inst, 0, st, t) + sol.fc_prices[0][t] * sol.fc_dispatch(inst, 0, st, t);
        cash += sc.id_price_up[0][t] * sol.id_up[0][0][t] - sc.id_price_down[0][t] * sol.id_down[0][0][t];
    }
    let released: f64 = (0..3).map(|t| sol.da_dispatch(inst, 0, st, t) + net_id(t)).sum();
    let content = 300.0 + 3.0 * 10.0 - released;
    let water = 26.0 * (0.9 + 0.9) * content;
    assert!(close(content, 180.0));
    assert!(
        close(sol.objective, cash + water),
        "{} vs {}",
        sol.objective,
        cash + water
    );
    assert!(close(sol.objective, 26204.0));
}
