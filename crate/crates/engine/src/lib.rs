//! Small LP/MILP toolkit: dense revised simplex, best-first branch and bound,
//! and LP-text / MPS readers and writers.

pub mod error;
pub mod lp_text;
pub mod milp;
pub mod model;
pub mod mps;
mod numfmt;
pub mod simplex;

use std::collections::HashSet;
use std::path::Path;

pub use error::{ExportError, ModelError, ParseError};
pub use lp_text::{parse_lp_text, write_lp_text};
pub use milp::{check_candidate, solve_milp, Heuristic, MilpOptions, MilpSolution, MilpStatus};
pub use model::{Column, LinearProgram, MixedIntegerProgram, Row, Sense};
pub use mps::{parse_mps, write_mps};
pub use simplex::{solve_lp, solve_lp_with, Basis, LpSolution, LpSolver, LpStatus, SimplexOptions, VarStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    LpText,
    Mps,
}

impl ExportFormat {
    /// Picks the format from a file extension (`.lp` or `.mps`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "lp" => Some(ExportFormat::LpText),
            "mps" => Some(ExportFormat::Mps),
            _ => None,
        }
    }
}

pub fn render_model(mip: &MixedIntegerProgram, format: ExportFormat) -> Result<String, ExportError> {
    match format {
        ExportFormat::LpText => write_lp_text(mip),
        ExportFormat::Mps => write_mps(mip),
    }
}

pub fn export_model(
    mip: &MixedIntegerProgram,
    path: impl AsRef<Path>,
    format: ExportFormat,
) -> Result<(), ExportError> {
    let text = render_model(mip, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn parse_model(text: &str, format: ExportFormat) -> Result<MixedIntegerProgram, ParseError> {
    match format {
        ExportFormat::LpText => parse_lp_text(text),
        ExportFormat::Mps => parse_mps(text),
    }
}

impl From<LinearProgram> for MixedIntegerProgram {
    fn from(lp: LinearProgram) -> Self {
        MixedIntegerProgram::new(lp)
    }
}

fn check_names(lp: &LinearProgram) -> Result<(), ExportError> {
    lp.validate()?;
    let mut seen = HashSet::new();
    for name in lp.cols().iter().map(|c| &c.name) {
        if !numfmt::valid_name(name) {
            return Err(ExportError::BadName(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            return Err(ExportError::NameCollision(name.clone()));
        }
    }
    let mut seen = HashSet::new();
    for name in lp.rows().iter().map(|r| &r.name) {
        if !numfmt::valid_name(name) {
            return Err(ExportError::BadName(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            return Err(ExportError::NameCollision(name.clone()));
        }
    }
    Ok(())
}
