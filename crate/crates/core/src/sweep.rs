//! Price curves over scaled demand, for merit-order plots.

use crate::bids::{BidSet, Step};
use crate::bilevel::{solve_bilevel, SolveOptions};
use crate::cases::ThreeBus;
use crate::da::{build_da_lp, clear_da};
use crate::fcrn::{build_fcrn_lp, clear_fcrn, DaOutcome};
use crate::BuildError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub total_demand: f64,
    pub total_fc_demand: f64,
    /// At node 0, first period.
    pub da_price: f64,
    pub fc_price: f64,
}

/// Solves the bilevel model with every DA demand multiplied by each scale.
pub fn sweep_demand(base: &ThreeBus, scales: &[f64], opts: &SolveOptions) -> Result<Vec<SweepPoint>, BuildError> {
    scales
        .iter()
        .map(|&s| {
            if !(0.0..=2.0).contains(&s) {
                return Err(BuildError::Dimension(format!("demand scale {s} outside [0, 2]")));
            }
            let mut b = base.clone();
            b.demand_da.iter_mut().flatten().for_each(|d| *d *= s);
            let c = b.build();
            let sol = solve_bilevel(&c.instance, &c.scenarios, opts)?;
            Ok(SweepPoint {
                total_demand: b.demand_da.iter().map(|n| n[0]).sum(),
                total_fc_demand: b.demand_fc[0],
                da_price: sol.da_prices[0][0][0],
                fc_price: sol.fc_prices[0][0],
            })
        })
        .collect()
}

/// Clears both markets for a fixed strategic offer at each FCR-N demand.
pub fn sweep_fc_demand(base: &ThreeBus, da: Step, fc: Step, fc_demands: &[f64]) -> Result<Vec<SweepPoint>, BuildError> {
    fc_demands
        .iter()
        .map(|&d| {
            let mut b = base.clone();
            b.demand_fc = vec![d; b.periods];
            let c = b.build();
            let (inst, scen) = (&c.instance, &c.scenarios[0]);
            let bids = BidSet::flat(inst, da, fc);
            let lp = build_da_lp(inst, &bids, scen)?;
            let r = clear_da(&lp);
            if !r.is_optimal() {
                return Err(BuildError::NotOptimal(format!("DA clearing at FCR-N demand {d}")));
            }
            let out = DaOutcome::from_clearing(inst, &lp, &r)?;
            let fl = build_fcrn_lp(inst, &bids, &out, scen)?;
            let fr = clear_fcrn(&fl);
            if !fr.is_optimal() {
                return Err(BuildError::NotOptimal(format!("FCR-N clearing at demand {d}")));
            }
            Ok(SweepPoint {
                total_demand: b.demand_da.iter().map(|n| n[0]).sum(),
                total_fc_demand: d,
                da_price: lp.prices(&r)[0][0],
                fc_price: fl.prices(&fr)[0],
            })
        })
        .collect()
}

/// Midpoints between consecutive points whose value differs by more than
/// `tol`, as `(x, from, to)`.
pub fn breakpoints(points: &[(f64, f64)], tol: f64) -> Vec<(f64, f64, f64)> {
    points
        .windows(2)
        .filter(|w| (w[1].1 - w[0].1).abs() > tol)
        .map(|w| (0.5 * (w[0].0 + w[1].0), w[0].1, w[1].1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakpoints_of_plateaus() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (2.0, 15.0), (3.0, 15.0), (4.0, 200.0)];
        assert_eq!(breakpoints(&pts, 1e-6), vec![(1.5, 0.0, 15.0), (3.5, 15.0, 200.0)]);
        assert!(breakpoints(&pts[..2], 1e-6).is_empty());
    }

    #[test]
    fn scale_out_of_range() {
        let b = ThreeBus::single_period([1.0, 1.0, 1.0], 0.0, [100.0, 100.0]);
        assert!(sweep_demand(&b, &[2.5], &SolveOptions::default()).is_err());
    }
}
