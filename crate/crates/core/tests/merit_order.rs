use hydrobid::cases::ThreeBus;
use hydrobid::*;

fn grid() -> Vec<f64> {
    (0..25).map(|k| 2.0 * k as f64 / 24.0).collect()
}

#[test]
fn da_sweep_has_three_plateaus() {
    let base = ThreeBus::single_period([50.0, 50.0, 70.0], 0.0, [100.0, 100.0]);
    let pts = sweep_demand(&base, &grid(), &SolveOptions::default()).unwrap();
    let step = pts[1].total_demand - pts[0].total_demand;
    for p in &pts {
        let want = if p.total_demand < 50.0 {
            0.0
        } else if p.total_demand < 150.0 {
            15.0
        } else if p.total_demand > 150.0 + step {
            200.0
        } else {
            continue;
        };
        assert!((p.da_price - want).abs() < 1e-4, "{p:?}");
    }
    let xy: Vec<_> = pts.iter().map(|p| (p.total_demand, p.da_price)).collect();
    let bps = breakpoints(&xy, 1e-4);
    assert_eq!(bps.len(), 2, "{bps:?}");
    assert!(
        (bps[0].0 - 50.0).abs() <= step && (bps[1].0 - 150.0).abs() <= step,
        "{bps:?}"
    );
}

#[test]
fn fc_sweep_switches_to_cap_when_thermal_headroom_runs_out() {
    let base = ThreeBus::single_period([44.1, 44.1, 61.8], 0.0, [100.0, 100.0]);
    let demands: Vec<f64> = (0..25).map(|k| 100.0 * k as f64 / 24.0).collect();
    let da = Step {
        price: 10.0,
        volume: 50.0,
    };
    let fc = Step {
        price: 100.0,
        volume: 50.0,
    };
    let pts = sweep_fc_demand(&base, da, fc, &demands).unwrap();
    for p in &pts {
        assert!((p.da_price - 15.0).abs() < 1e-6, "{p:?}");
        if p.total_fc_demand > 0.0 && p.total_fc_demand < 50.0 {
            assert!((p.fc_price - 30.0).abs() < 1e-6, "{p:?}");
        } else if p.total_fc_demand > 50.0 {
            assert!((p.fc_price - 100.0).abs() < 1e-6, "{p:?}");
        }
    }
    let xy: Vec<_> = pts[1..].iter().map(|p| (p.total_fc_demand, p.fc_price)).collect();
    let bps = breakpoints(&xy, 1e-4);
    assert_eq!(bps.len(), 1);
    assert!((bps[0].0 - 50.0).abs() <= demands[1]);
}
