//! Historical market data in, equiprobable scenario sets out.

pub mod generate;
pub mod history;
pub mod relation;

pub use generate::{generate_scenarios, id_volume_limit, ScenarioConfig, ScenarioDraw, ScenarioMapping};
pub use history::{ingest_market_csv, parse_market_csv, DayBlock, MarketHistory, MarketRecord, Quarantined};
pub use relation::{fit_id_da_relation, Affine, IdDaRelation};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("line {line}: cannot parse timestamp {value:?}")]
    Timestamp { line: u64, value: String },
    #[error("no records")]
    Empty,
    #[error("degenerate fit: {0}")]
    Degenerate(String),
    #[error("no historical day with {0} periods")]
    TooShort(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}
