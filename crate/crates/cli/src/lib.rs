//! Case harness: configuration files, end-to-end case runs, and the CSV
//! plot data behind the case-study tables and figures.

pub mod config;
pub mod network;
pub mod plot;
pub mod run;

use thiserror::Error;

pub use config::{CaseConfig, CaseId, GeneratedScenarios, ScenarioSource, SolveConfig};
pub use plot::{emit_plot_data, five_numbers, write_outputs, write_table, PlotKind};
pub use run::{
    case_instances, export_round_trip, fixed_offer_fc_prices, run_case, run_sweep, BidRow, CaseReport, ExportSummary,
    PeriodRow, RevenueSplit, RunSummary, SweepRow, TableRow,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("report has no {0} series")]
    MissingSeries(String),
    #[error("solve: {0}")]
    Solve(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Build(#[from] hydrobid::BuildError),
    #[error(transparent)]
    Instance(#[from] hydrobid::InstanceError),
    #[error(transparent)]
    Scenario(#[from] hydrobid_scenarios::ScenarioError),
    #[error(transparent)]
    Pdf(#[from] hydrobid_pdf::PdfError),
    #[error(transparent)]
    Export(#[from] lpmilp::ExportError),
    #[error(transparent)]
    Parse(#[from] lpmilp::ParseError),
}

impl HarnessError {
    /// Process exit code: 3 for a proven infeasible model, 2 when a limit
    /// stopped the search before any feasible point, 1 for other failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Build(hydrobid::BuildError::NoIncumbent(s)) if *s == lpmilp::MilpStatus::Infeasible => 3,
            HarnessError::Build(hydrobid::BuildError::NoIncumbent(s)) if s.limit_hit() => 2,
            _ => 1,
        }
    }
}
