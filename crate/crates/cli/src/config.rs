//! Case configuration files. Relative paths resolve against the directory
//! of the config file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use hydrobid::SolveOptions;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseId {
    I,
    II,
    III,
    IV,
    V,
    #[serde(alias = "custom")]
    Custom,
}

impl CaseId {
    pub fn slug(self) -> &'static str {
        match self {
            CaseId::I => "case1",
            CaseId::II => "case2",
            CaseId::III => "case3",
            CaseId::IV => "case4",
            CaseId::V => "case5",
            CaseId::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    /// Scenarios stored with the instance (or built into the case).
    Inline,
    Generated(GeneratedScenarios),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedScenarios {
    /// Market history CSV.
    pub history: PathBuf,
    /// Scenarios in the bidding model.
    pub count: usize,
    /// Scenarios cleared at fixed offers for the price densities; the first
    /// `count` coincide with the model scenarios.
    #[serde(default = "default_price_samples")]
    pub price_samples: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_price_samples() -> usize {
    40
}

fn default_horizon() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub rel_gap: f64,
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<usize>,
    pub refine_nodes: usize,
    /// Models with more rows than this are exported instead of solved.
    pub export_rows: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            rel_gap: 1e-9,
            time_limit_s: None,
            node_limit: None,
            refine_nodes: 200,
            export_rows: 5000,
        }
    }
}

impl SolveConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            rel_gap: self.rel_gap,
            time_limit: self.time_limit_s.map(Duration::from_secs_f64),
            node_limit: self.node_limit,
            refine_nodes: self.refine_nodes,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub case: CaseId,
    /// Case file (instance plus scenarios); required for custom cases and
    /// replaces the bundled network of Case V.
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default = "default_source")]
    pub scenarios: ScenarioSource,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_source() -> ScenarioSource {
    ScenarioSource::Inline
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl CaseConfig {
    pub fn builtin(case: CaseId) -> Self {
        Self {
            case,
            instance: None,
            scenarios: ScenarioSource::Inline,
            solve: SolveConfig::default(),
            output_dir: default_output(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut c: CaseConfig = serde_json::from_str(text)?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = c.instance.as_mut() {
            fix(p);
        }
        if let ScenarioSource::Generated(g) = &mut c.scenarios {
            fix(&mut g.history);
        }
        fix(&mut c.output_dir);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.case == CaseId::Custom && self.instance.is_none() {
            return bad("a custom case needs an instance file".into());
        }
        if let Some(p) = &self.instance {
            if !p.is_file() {
                return bad(format!("instance file {} not found", p.display()));
            }
        }
        match &self.scenarios {
            ScenarioSource::Generated(g) => {
                if !g.history.is_file() {
                    return bad(format!("history file {} not found", g.history.display()));
                }
                if g.count == 0 || g.horizon == 0 {
                    return bad("generated scenarios need count and horizon >= 1".into());
                }
                if g.price_samples < g.count {
                    return bad("price_samples must be at least count".into());
                }
            }
            ScenarioSource::Inline => {
                if self.case == CaseId::V && self.instance.is_none() {
                    return bad("Case V draws its scenarios from a history file".into());
                }
            }
        }
        if !(self.solve.rel_gap >= 0.0) {
            return bad("solve.rel_gap must be >= 0".into());
        }
        if self.solve.time_limit_s.is_some_and(|t| !(t > 0.0) || !t.is_finite()) {
            return bad("solve.time_limit_s must be positive".into());
        }
        Ok(())
    }
}
