use hydrobid::cases::market_power_day;
use hydrobid::*;

// The big-M relaxation bound barely moves on this case, so the run is
// node-limited and only the direction of intraday trading is asserted.
#[test]
fn buys_cheap_intraday_energy_and_sells_dear() {
    let c = market_power_day();
    let inst = &c.instance;
    let opts = SolveOptions {
        node_limit: Some(30),
        refine_nodes: 2,
        ..Default::default()
    };
    let sol = solve_bilevel(inst, &c.scenarios, &opts).unwrap();
    assert!(
        matches!(sol.status, lpmilp::MilpStatus::Optimal | lpmilp::MilpStatus::NodeLimit),
        "{:?}",
        sol.status
    );
    assert!(sol.objective <= sol.bound + 1e-6);
    let net = |t: usize| sol.id_up[0][0][t] - sol.id_down[0][0][t];
    for t in 2..5 {
        assert!(net(t) < -1e-6, "period {} net {}", t + 1, net(t));
    }
    for t in 10..13 {
        assert!(net(t) > 1e-6, "period {} net {}", t + 1, net(t));
    }
    let rep = verify_reformulation(inst, &c.scenarios, &sol);
    assert!(rep.passed(), "{:?}", rep.failures);
}
