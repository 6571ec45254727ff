use serde::{Deserialize, Serialize};

use super::{DocumentRecord, Mode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: String,
    pub count: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub records: usize,
    pub overall: Vec<StageStats>,
    pub realtime: Vec<StageStats>,
    pub offline: Vec<StageStats>,
    /// Median detail-crop time over median contour-crop time, offline
    /// records only.
    pub detail_contour_ratio: Option<f64>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn stats<'a>(records: impl Iterator<Item = &'a DocumentRecord>) -> Vec<StageStats> {
    let mut order: Vec<String> = Vec::new();
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for r in records {
        for t in &r.timings {
            let k = match order.iter().position(|s| *s == t.stage) {
                Some(k) => k,
                None => {
                    order.push(t.stage.clone());
                    samples.push(Vec::new());
                    order.len() - 1
                }
            };
            samples[k].push(t.ms);
        }
    }
    order
        .into_iter()
        .zip(samples)
        .map(|(stage, mut v)| StageStats {
            stage,
            count: v.len(),
            mean_ms: v.iter().sum::<f64>() / v.len() as f64,
            median_ms: median(&mut v),
        })
        .collect()
}

/// Per-stage timing summary, overall and split by mode.
pub fn timing_report(records: &[DocumentRecord]) -> Result<TimingReport> {
    if records.is_empty() {
        return Err(Error::EmptyReport);
    }
    let offline = stats(records.iter().filter(|r| r.mode == Mode::Offline));
    let med = |name: &str| {
        offline
            .iter()
            .find(|s| s.stage == name)
            .map(|s| s.median_ms)
    };
    let detail_contour_ratio = match (med("crop_detail"), med("crop_contour")) {
        (Some(d), Some(c)) if c > 0.0 => Some(d / c),
        _ => None,
    };
    Ok(TimingReport {
        records: records.len(),
        overall: stats(records.iter()),
        realtime: stats(records.iter().filter(|r| r.mode == Mode::Realtime)),
        offline,
        detail_contour_ratio,
    })
}
