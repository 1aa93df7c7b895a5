//! Bundled case files load and validate; the Case V history matches its
//! generator. Set `HYDROBID_REGEN=1` to rewrite the history file.

use std::path::PathBuf;

use hydrobid_cli::network::{case5_instance, synthetic_history};
use hydrobid_cli::{case_instances, CaseConfig, CaseId};

pub const HISTORY_DAYS: usize = 30;
pub const HISTORY_SEED: u64 = 118;

fn cases() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("cases")
}

#[test]
fn bundled_history_matches_generator() {
    let text = synthetic_history(&case5_instance(6), HISTORY_DAYS, HISTORY_SEED);
    let path = cases().join("case5_history.csv");
    if std::env::var_os("HYDROBID_REGEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    assert!(
        std::fs::read_to_string(&path).unwrap() == text,
        "regenerate with HYDROBID_REGEN=1"
    );
}

#[test]
fn bundled_configs_load() {
    let want = [CaseId::I, CaseId::II, CaseId::III, CaseId::IV, CaseId::V];
    for (k, id) in want.into_iter().enumerate() {
        let c = CaseConfig::load(cases().join(format!("case{}.json", k + 1))).unwrap();
        assert_eq!(c.case, id);
        let inst = case_instances(&c).unwrap();
        let expect = if matches!(id, CaseId::I | CaseId::II) { 6 } else { 1 };
        assert_eq!(inst.len(), expect, "{id:?}");
    }
}
