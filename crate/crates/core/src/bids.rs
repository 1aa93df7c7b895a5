//! Stepwise price/volume offers of the strategic stations.

use serde::{Deserialize, Serialize};

use crate::instance::{MarketInstance, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub price: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Market {
    Da,
    Fc,
}

/// Offers indexed `[strategic ordinal][segment][period]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidSet {
    pub da_price: Vec<Vec<Vec<f64>>>,
    pub da_volume: Vec<Vec<Vec<f64>>>,
    pub fc_price: Vec<Vec<Vec<f64>>>,
    pub fc_volume: Vec<Vec<Vec<f64>>>,
}

impl BidSet {
    pub fn zeros(strategic: usize, segments: usize, periods: usize) -> Self {
        let z = vec![vec![vec![0.0; periods]; segments]; strategic];
        Self {
            da_price: z.clone(),
            da_volume: z.clone(),
            fc_price: z.clone(),
            fc_volume: z,
        }
    }

    /// Same single-segment offer for every strategic station and period.
    pub fn flat(inst: &MarketInstance, da: Step, fc: Step) -> Self {
        let mut b = Self::zeros(inst.strategic().len(), inst.segments, inst.horizon);
        for n in 0..b.da_price.len() {
            for t in 0..inst.horizon {
                b.da_price[n][0][t] = da.price;
                b.da_volume[n][0][t] = da.volume;
                b.fc_price[n][0][t] = fc.price;
                b.fc_volume[n][0][t] = fc.volume;
                for s in 1..inst.segments {
                    b.da_price[n][s][t] = da.price;
                    b.fc_price[n][s][t] = fc.price;
                }
            }
        }
        b
    }

    pub fn strategic(&self) -> usize {
        self.da_price.len()
    }

    pub fn segments(&self) -> usize {
        self.da_price.first().map_or(0, |s| s.len())
    }

    /// Steps of one station and period sorted by price, zero volumes dropped.
    pub fn curve(&self, st: usize, t: usize, market: Market) -> Vec<Step> {
        let (p, v) = match market {
            Market::Da => (&self.da_price[st], &self.da_volume[st]),
            Market::Fc => (&self.fc_price[st], &self.fc_volume[st]),
        };
        let mut steps: Vec<Step> = p
            .iter()
            .zip(v)
            .map(|(ps, vs)| Step {
                price: ps[t],
                volume: vs[t],
            })
            .filter(|s| s.volume > 0.0)
            .collect();
        steps.sort_by(|a, b| a.price.total_cmp(&b.price));
        steps
    }
}

/// Dimension, bound, monotonicity and volume checks against an instance.
pub fn validate_bids(inst: &MarketInstance, bids: &BidSet) -> Vec<Violation> {
    let mut out = Vec::new();
    let st = inst.strategic();
    let (nb, nt) = (inst.segments, inst.horizon);
    let dims = |v: &Vec<Vec<Vec<f64>>>| {
        v.len() == st.len() && v.iter().all(|s| s.len() == nb && s.iter().all(|t| t.len() == nt))
    };
    for (name, v) in [
        ("da_price", &bids.da_price),
        ("da_volume", &bids.da_volume),
        ("fc_price", &bids.fc_price),
        ("fc_volume", &bids.fc_volume),
    ] {
        if !dims(v) {
            out.push(Violation {
                field: format!("bids.{name}"),
                rule: "dimensions must be [strategic][segments][horizon]".into(),
            });
        }
    }
    if !out.is_empty() {
        return out;
    }
    let bb = &inst.bid_bounds;
    for (o, &h) in st.iter().enumerate() {
        let pmax = inst.hydro_plants[h].max_power;
        for t in 0..nt {
            for s in 0..nb {
                let f = format!("bids[{o}][{s}][{t}]");
                let checks = [
                    (
                        bids.da_price[o][s][t] >= bb.da_min[o][s][t] - 1e-9,
                        "da price below bound",
                    ),
                    (
                        bids.da_price[o][s][t] <= bb.da_max[o][s][t] + 1e-9,
                        "da price above bound",
                    ),
                    (
                        bids.fc_price[o][s][t] >= bb.fc_min[o][s][t] - 1e-9,
                        "fc price below bound",
                    ),
                    (
                        bids.fc_price[o][s][t] <= bb.fc_max[o][s][t] + 1e-9,
                        "fc price above bound",
                    ),
                    (
                        bids.da_volume[o][s][t] >= 0.0 && bids.fc_volume[o][s][t] >= 0.0,
                        "negative volume",
                    ),
                    (
                        s == 0 || bids.da_price[o][s - 1][t] <= bids.da_price[o][s][t] + 1e-9,
                        "da prices must be nondecreasing in segment",
                    ),
                    (
                        s == 0 || bids.fc_price[o][s - 1][t] <= bids.fc_price[o][s][t] + 1e-9,
                        "fc prices must be nondecreasing in segment",
                    ),
                ];
                for (ok, rule) in checks {
                    if !ok {
                        out.push(Violation {
                            field: f.clone(),
                            rule: rule.into(),
                        });
                    }
                }
            }
            let da: f64 = (0..nb).map(|s| bids.da_volume[o][s][t]).sum();
            if da > pmax + 1e-9 {
                out.push(Violation {
                    field: format!("bids[{o}][*][{t}]"),
                    rule: "total DA volume exceeds max power".into(),
                });
            }
        }
    }
    out
}
