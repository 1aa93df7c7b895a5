//! CSV plot data and the report file. Column layouts:
//!
//! - profile: `run,scenario,period,strategic_da,strategic_fc,id_up,id_down,fc_price`,
//!   then `da_<unit>` per unit and `price_<bus>` per bus
//! - boxplot: `period,n,min,q1,median,q3,max` of the cleared FCR-N price samples
//! - pdf: `group,price,density`
//! - bidcurve: `run,station,period,market,step,price,volume`
//! - sweep: `market,total_demand,total_fc_demand,da_price,fc_price`
//! - table: `level,with_fc,fc_demand,fc_price`, then `demand_<bus>`, `da_<unit>`,
//!   `fc_<unit>` and `price_<bus>`

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::run::CaseReport;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Profile,
    Boxplot,
    Pdf,
    BidCurve,
    Sweep,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] = [
        PlotKind::Profile,
        PlotKind::Boxplot,
        PlotKind::Pdf,
        PlotKind::BidCurve,
        PlotKind::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Profile => "profile",
            PlotKind::Boxplot => "boxplot",
            PlotKind::Pdf => "pdf",
            PlotKind::BidCurve => "bidcurve",
            PlotKind::Sweep => "sweep",
        }
    }

    fn present(self, r: &CaseReport) -> bool {
        match self {
            PlotKind::Profile => !r.series.is_empty(),
            PlotKind::Boxplot => r.fc_samples.iter().any(|s| !s.is_empty()),
            PlotKind::Pdf => !r.pdfs.is_empty(),
            PlotKind::BidCurve => !r.bid_curves.is_empty(),
            PlotKind::Sweep => !r.sweep.is_empty(),
        }
    }
}

impl FromStr for PlotKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown plot kind {s:?}")))
    }
}

/// Min, lower quartile, median, upper quartile and max, interpolating
/// linearly between order statistics.
pub fn five_numbers(samples: &[f64]) -> Option<[f64; 5]> {
    if samples.is_empty() || samples.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let (lo, frac) = (h.floor() as usize, h.fract());
        if lo + 1 < v.len() {
            v[lo] + frac * (v[lo + 1] - v[lo])
        } else {
            v[lo]
        }
    };
    Some([v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]])
}

fn num(v: f64) -> String {
    v.to_string()
}

pub fn emit_plot_data(report: &CaseReport, kind: PlotKind, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    if !kind.present(report) {
        return Err(HarnessError::MissingSeries(kind.name().into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    match kind {
        PlotKind::Profile => {
            let mut head: Vec<String> = [
                "run",
                "scenario",
                "period",
                "strategic_da",
                "strategic_fc",
                "id_up",
                "id_down",
                "fc_price",
            ]
            .map(String::from)
            .to_vec();
            head.extend(report.units.iter().map(|u| format!("da_{u}")));
            let buses = report.series[0].da_price.len();
            head.extend((0..buses).map(|b| format!("price_{b}")));
            w.write_record(&head)?;
            for r in &report.series {
                let mut rec = vec![
                    r.run.clone(),
                    r.scenario.to_string(),
                    r.period.to_string(),
                    num(r.strategic_da),
                    num(r.strategic_fc),
                    num(r.id_up),
                    num(r.id_down),
                    num(r.fc_price),
                ];
                rec.extend(r.da.iter().chain(&r.da_price).map(|&v| num(v)));
                w.write_record(&rec)?;
            }
        }
        PlotKind::Boxplot => {
            w.write_record(["period", "n", "min", "q1", "median", "q3", "max"])?;
            for (t, s) in report.fc_samples.iter().enumerate() {
                let Some(f) = five_numbers(s) else {
                    return Err(HarnessError::MissingSeries(format!("boxplot period {}", t + 1)));
                };
                let mut rec = vec![(t + 1).to_string(), s.len().to_string()];
                rec.extend(f.iter().map(|&v| num(v)));
                w.write_record(&rec)?;
            }
        }
        PlotKind::Pdf => {
            w.write_record(["group", "price", "density"])?;
            for g in &report.pdfs {
                for (x, d) in g.grid.iter().zip(&g.density) {
                    w.write_record([g.name.clone(), num(*x), num(*d)])?;
                }
            }
        }
        PlotKind::BidCurve => {
            w.write_record(["run", "station", "period", "market", "step", "price", "volume"])?;
            for b in &report.bid_curves {
                w.write_record([
                    b.run.clone(),
                    b.station.clone(),
                    b.period.to_string(),
                    b.market.clone(),
                    b.step.to_string(),
                    num(b.price),
                    num(b.volume),
                ])?;
            }
        }
        PlotKind::Sweep => {
            w.write_record(["market", "total_demand", "total_fc_demand", "da_price", "fc_price"])?;
            for s in &report.sweep {
                w.write_record([
                    s.market.clone(),
                    num(s.total_demand),
                    num(s.total_fc_demand),
                    num(s.da_price),
                    num(s.fc_price),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_table(report: &CaseReport, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let Some(first) = report.table.first() else {
        return Err(HarnessError::MissingSeries("table".into()));
    };
    let mut w = csv::Writer::from_path(path)?;
    let mut head: Vec<String> = ["level", "with_fc", "fc_demand", "fc_price"].map(String::from).to_vec();
    head.extend((0..first.demand.len()).map(|b| format!("demand_{b}")));
    head.extend(report.units.iter().map(|u| format!("da_{u}")));
    head.extend(report.units.iter().map(|u| format!("fc_{u}")));
    head.extend((0..first.da_price.len()).map(|b| format!("price_{b}")));
    w.write_record(&head)?;
    for r in &report.table {
        let mut rec = vec![
            r.level.clone(),
            r.with_fc.to_string(),
            num(r.fc_demand),
            r.fc_price.map(num).unwrap_or_default(),
        ];
        rec.extend(
            r.demand
                .iter()
                .chain(&r.da)
                .chain(&r.fc)
                .chain(&r.da_price)
                .map(|&v| num(v)),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `report.json`, the table and every plot series the report carries.
pub fn write_outputs(report: &CaseReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let json = dir.join(format!("{}_report.json", report.name));
    std::fs::write(&json, serde_json::to_string_pretty(report)? + "\n")?;
    written.push(json);
    if !report.table.is_empty() {
        let p = dir.join(format!("{}_table.csv", report.name));
        write_table(report, &p)?;
        written.push(p);
    }
    for kind in PlotKind::ALL {
        if kind.present(report) {
            let p = dir.join(format!("{}_{}.csv", report.name, kind.name()));
            emit_plot_data(report, kind, &p)?;
            written.push(p);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_numbers_interpolate() {
        // Sorted 1..=5: quartile positions 1, 2, 3 fall on order statistics.
        assert_eq!(
            five_numbers(&[5.0, 1.0, 3.0, 2.0, 4.0]),
            Some([1.0, 2.0, 3.0, 4.0, 5.0])
        );
        // Four values: position 0.75 lies between 10 and 20.
        assert_eq!(
            five_numbers(&[40.0, 10.0, 30.0, 20.0]),
            Some([10.0, 17.5, 25.0, 32.5, 40.0])
        );
        assert_eq!(five_numbers(&[7.0]), Some([7.0; 5]));
        assert_eq!(five_numbers(&[]), None);
    }

    #[test]
    fn kind_names_parse() {
        for k in PlotKind::ALL {
            assert_eq!(k.name().parse::<PlotKind>().unwrap(), k);
        }
        assert!("histogram".parse::<PlotKind>().is_err());
    }
}
