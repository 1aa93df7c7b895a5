//! CSV market history.
//!
//! Header: `timestamp,da_price,id_up_price,id_down_price,fc_price,fc_demand,da_demand`
//! followed by one `inflow_<station>` and one `content_<station>` column per
//! station, in matching order. Timestamps are `YYYY-MM-DD HH:MM` (a `T`
//! separator and trailing seconds are accepted). Prices in EUR/MWh, demands
//! in MW, inflow in m3 per period, content in m3.

use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::ScenarioError;

const FIXED: [&str; 7] = [
    "timestamp",
    "da_price",
    "id_up_price",
    "id_down_price",
    "fc_price",
    "fc_demand",
    "da_demand",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketRecord {
    pub timestamp: NaiveDateTime,
    pub da_price: f64,
    pub id_up_price: f64,
    pub id_down_price: f64,
    pub fc_price: f64,
    pub fc_demand: f64,
    pub da_demand: f64,
    /// `[station]`
    pub inflow: Vec<f64>,
    pub content: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quarantined {
    /// 1-based line in the file, header is line 1.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarketHistory {
    pub stations: Vec<String>,
    pub records: Vec<MarketRecord>,
    pub quarantined: Vec<Quarantined>,
}

/// One calendar day of consecutive records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayBlock<'a> {
    pub date: NaiveDate,
    pub records: &'a [MarketRecord],
}

impl MarketHistory {
    /// Days holding at least `horizon` records, in date order.
    pub fn days(&self, horizon: usize) -> Vec<DayBlock<'_>> {
        self.records
            .chunk_by(|a, b| a.timestamp.date() == b.timestamp.date())
            .filter(|c| c.len() >= horizon)
            .map(|c| DayBlock {
                date: c[0].timestamp.date(),
                records: &c[..horizon],
            })
            .collect()
    }
}

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    [
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
    ]
    .iter()
    .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

pub fn ingest_market_csv(path: impl AsRef<Path>) -> Result<MarketHistory, ScenarioError> {
    parse_market_csv(std::fs::File::open(path)?)
}

pub fn parse_market_csv(input: impl std::io::Read) -> Result<MarketHistory, ScenarioError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ScenarioError::MissingColumn(name.into()))
    };
    let fixed: Vec<usize> = FIXED.iter().map(|n| col(n)).collect::<Result<_, _>>()?;
    let stations: Vec<String> = header
        .iter()
        .filter_map(|h| h.strip_prefix("inflow_"))
        .map(String::from)
        .collect();
    let inflow_cols: Vec<usize> = stations
        .iter()
        .map(|s| col(&format!("inflow_{s}")))
        .collect::<Result<_, _>>()?;
    let content_cols: Vec<usize> = stations
        .iter()
        .map(|s| col(&format!("content_{s}")))
        .collect::<Result<_, _>>()?;

    let mut hist = MarketHistory {
        stations,
        ..Default::default()
    };
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        let raw = row.get(fixed[0]).unwrap_or("");
        let timestamp = parse_time(raw).ok_or_else(|| ScenarioError::Timestamp {
            line,
            value: raw.into(),
        })?;
        let mut bad = None;
        let mut num = |c: usize, name: &str| -> f64 {
            match row.get(c).map(str::parse::<f64>) {
                Some(Ok(v)) if v.is_finite() => v,
                _ => {
                    bad.get_or_insert_with(|| format!("{name} is not a finite number"));
                    f64::NAN
                }
            }
        };
        let rec = MarketRecord {
            timestamp,
            da_price: num(fixed[1], FIXED[1]),
            id_up_price: num(fixed[2], FIXED[2]),
            id_down_price: num(fixed[3], FIXED[3]),
            fc_price: num(fixed[4], FIXED[4]),
            fc_demand: num(fixed[5], FIXED[5]),
            da_demand: num(fixed[6], FIXED[6]),
            inflow: inflow_cols.iter().map(|&c| num(c, "inflow")).collect(),
            content: content_cols.iter().map(|&c| num(c, "content")).collect(),
        };
        if bad.is_none() {
            let quantities = [rec.fc_demand, rec.da_demand]
                .into_iter()
                .chain(rec.inflow.iter().copied())
                .chain(rec.content.iter().copied());
            if quantities.into_iter().any(|v| v < 0.0) {
                bad = Some("negative demand, inflow or content".into());
            } else if hist.records.last().is_some_and(|p| p.timestamp >= timestamp) {
                bad = Some(format!("timestamp {timestamp} not after the previous record"));
            }
        }
        match bad {
            Some(reason) => hist.quarantined.push(Quarantined { line, reason }),
            None => hist.records.push(rec),
        }
    }
    if hist.records.is_empty() {
        return Err(ScenarioError::Empty);
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "timestamp,da_price,id_up_price,id_down_price,fc_price,fc_demand,da_demand,inflow_a,content_a\n";

    #[test]
    fn three_rows() {
        let s = format!(
            "{HEAD}2023-01-01 00:00,40,41,39,10,20,100,5,300\n2023-01-01 01:00,42,43,41,11,20,110,5,295\n2023-01-01 02:00,45,46,44,12,20,120,5,290\n"
        );
        let h = parse_market_csv(s.as_bytes()).unwrap();
        assert_eq!(h.records.len(), 3);
        assert_eq!(h.stations, vec!["a"]);
        assert_eq!(h.records[2].content, vec![290.0]);
        assert!(h.quarantined.is_empty());
    }

    #[test]
    fn nan_price_is_quarantined() {
        let s = format!(
            "{HEAD}2023-01-01 00:00,40,41,39,10,20,100,5,300\n2023-01-01 01:00,NaN,43,41,11,20,110,5,295\n2023-01-01 02:00,45,46,44,12,20,120,5,290\n"
        );
        let h = parse_market_csv(s.as_bytes()).unwrap();
        assert_eq!(h.records.len(), 2);
        assert_eq!(h.quarantined.len(), 1);
        assert_eq!(h.quarantined[0].line, 3);
    }

    #[test]
    fn out_of_order_is_quarantined() {
        let s = format!("{HEAD}2023-01-01 01:00,40,41,39,10,20,100,5,300\n2023-01-01 00:00,42,43,41,11,20,110,5,295\n");
        let h = parse_market_csv(s.as_bytes()).unwrap();
        assert_eq!((h.records.len(), h.quarantined.len()), (1, 1));
    }

    #[test]
    fn empty_and_malformed_inputs() {
        assert!(matches!(
            parse_market_csv("".as_bytes()),
            Err(ScenarioError::MissingColumn(_))
        ));
        assert!(matches!(parse_market_csv(HEAD.as_bytes()), Err(ScenarioError::Empty)));
        let s = "timestamp,da_price\n2023-01-01 00:00,1\n";
        assert!(matches!(parse_market_csv(s.as_bytes()), Err(ScenarioError::MissingColumn(c)) if c == "id_up_price"));
        let s = format!("{HEAD}yesterday,40,41,39,10,20,100,5,300\n");
        assert!(matches!(
            parse_market_csv(s.as_bytes()),
            Err(ScenarioError::Timestamp { line: 2, .. })
        ));
    }
}
