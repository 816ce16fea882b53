//! CSV formats: retention-curve input tables and battery report output.
//!
//! All emitted CSV is fully determined by its inputs (floats use the
//! shortest round-trip form), so re-running a configuration reproduces the
//! same bytes.

use std::collections::BTreeSet;
use std::io::Read;

use crate::error::{Error, Result};
use crate::harness::{MetricReport, RetentionCurve, SummaryRow, SweepRow};

/// Reads `model,method,rho,accuracy` rows into one curve per
/// (model, method), in first-appearance order.
pub fn read_retention_curves(reader: impl Read) -> Result<Vec<RetentionCurve>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    {
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::malformed(format!("curve csv: {e}")))?;
        let expected = ["model", "method", "rho", "accuracy"];
        if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::malformed(
                "curve csv must have header model,method,rho,accuracy",
            ));
        }
    }
    let mut order: Vec<(String, String)> = Vec::new();
    let mut points: Vec<Vec<(f64, f64)>> = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| Error::malformed(format!("curve csv: {e}")))?;
        if record.len() != 4 {
            return Err(Error::malformed("curve csv row must have 4 fields"));
        }
        let model = record[0].to_string();
        let method = record[1].to_string();
        let rho: f64 = record[2]
            .parse()
            .map_err(|_| Error::malformed(format!("bad rho {:?}", &record[2])))?;
        let accuracy: f64 = record[3]
            .parse()
            .map_err(|_| Error::malformed(format!("bad accuracy {:?}", &record[3])))?;
        let key = (model, method);
        match order.iter().position(|k| *k == key) {
            Some(idx) => points[idx].push((rho, accuracy)),
            None => {
                order.push(key);
                points.push(vec![(rho, accuracy)]);
            }
        }
    }
    order
        .into_iter()
        .zip(points)
        .map(|((model, method), pts)| {
            RetentionCurve::new(model, method, pts).map_err(|e| Error::malformed(e.to_string()))
        })
        .collect()
}

pub fn metrics_csv(report: &MetricReport) -> String {
    let mut out = String::from(
        "method,scenario,rho,seed,n,k,evidence_recall,distractor_rate,spatial_coverage\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.method,
            row.scenario,
            row.rho,
            row.seed,
            row.n,
            row.k,
            row.evidence_recall,
            row.distractor_rate,
            row.spatial_coverage
        ));
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out =
        String::from("method,scenario,rho,tasks,mean_recall,mean_distractor_rate,mean_coverage\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.method,
            row.scenario,
            row.rho,
            row.tasks,
            row.mean_recall,
            row.mean_distractor_rate,
            row.mean_coverage
        ));
    }
    out
}

pub fn sweeps_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("group,setting,mean_recall,delta\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.group, row.setting, row.mean_recall, row.delta
        ));
    }
    out
}

/// One token-demand result row.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandRow {
    pub model: String,
    pub method: String,
    pub tau: f64,
    pub retention_percent: f64,
}

pub fn demand_csv(rows: &[DemandRow]) -> String {
    let mut out = String::from("model,method,tau,retention_percent\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.4}\n",
            row.model, row.method, row.tau, row.retention_percent
        ));
    }
    out
}

/// Distinct models in first-appearance order.
pub fn curve_models(curves: &[RetentionCurve]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut models = Vec::new();
    for curve in curves {
        if seen.insert(curve.model.clone()) {
            models.push(curve.model.clone());
        }
    }
    models
}
