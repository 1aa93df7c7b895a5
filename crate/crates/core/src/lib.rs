//! Strategic hydro offers in sequential day-ahead, intraday and FCR-N
//! markets: market data, the two clearing LPs and their single-level MILP
//! reformulation.

pub mod bids;
pub mod bilevel;
pub mod cases;
pub mod da;
pub mod fcrn;
pub mod instance;
pub mod lower;
pub mod mccormick;
pub mod reform;
pub mod sweep;

use thiserror::Error;

pub use bids::{validate_bids, BidSet, Market, Step};
pub use bilevel::{
    extract_bids, solve_bilevel, verify_reformulation, BidCurve, BilevelSolution, LowerValues, Revenue, SolveOptions,
    VerifyReport,
};
pub use da::{build_da_lp, clear_da, kkt_residuals, strong_duality_gap, DaIndex, DaLp};
pub use fcrn::{build_fcrn_lp, clear_fcrn, fcrn_kkt_residuals, fcrn_strong_duality_gap, DaOutcome, FcrnLp};
pub use instance::{
    fcrn_requirement, validate_instance, validate_scenario, validate_scenarios, water_value, BidBounds, CaseData,
    HydroCascade, HydroPlant, InstanceError, Line, Link, MarketInstance, NetworkTopology, Scenario, Segment,
    ThermalUnit, Violation,
};
pub use lower::{ClearingResult, Family, KktReport, LowerModel, Param, Unit};
pub use mccormick::{envelope_range, mccormick_envelope, EnvelopeRow};
pub use reform::{build_single_level_milp, build_upper_constraints, BigMConfig, SingleLevelMilp};
pub use sweep::{breakpoints, sweep_demand, sweep_fc_demand, SweepPoint};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid input: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("lower level not optimal: {0}")]
    NotOptimal(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("solver: {0}")]
    Solver(String),
    /// Proven infeasible, or a limit hit before any feasible point.
    #[error("no feasible point found ({0:?})")]
    NoIncumbent(lpmilp::MilpStatus),
}
