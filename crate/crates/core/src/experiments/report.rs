//! Fairness and cumulative similarity of several algorithms on one instance.

use serde::{Deserialize, Serialize};

use super::{solve, Algorithm};
use crate::error::Result;
use crate::extreal::{round_sig, ExtReal};
use crate::instance::{LoadConstraints, SimilarityMatrix};
use crate::metrics::{cumulative_quality, paper_sum_profile};
use crate::transform::Transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub fairness: Option<ExtReal>,
    pub cumulative: Option<f64>,
    /// Per-paper utility sums, ascending.
    pub profile: Vec<ExtReal>,
    pub failure: Option<String>,
}

pub fn fairness_report(
    s: &SimilarityMatrix,
    lc: &LoadConstraints,
    f: &Transform,
    algorithms: &[Algorithm],
    seed: u64,
) -> Vec<ReportRow> {
    algorithms
        .iter()
        .map(|&alg| {
            let evaluated = solve(alg, s, lc, f, seed).and_then(|a| {
                let profile = paper_sum_profile(&a, s, f)?;
                Ok((profile, cumulative_quality(&a, s)?))
            });
            match evaluated {
                Ok((profile, cumulative)) => ReportRow {
                    algorithm: alg,
                    fairness: profile.first().map(|&v| ExtReal(v)),
                    cumulative: Some(cumulative),
                    profile: profile.into_iter().map(ExtReal).collect(),
                    failure: None,
                },
                Err(e) => ReportRow {
                    algorithm: alg,
                    fairness: None,
                    cumulative: None,
                    profile: Vec::new(),
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// CSV with one row per algorithm: `algorithm,fairness,cumulative,failure`.
pub fn report_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "fairness", "cumulative", "failure"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.algorithm.to_string(),
            r.fairness.map(|v| v.to_string()).unwrap_or_default(),
            r.cumulative.map(|v| round_sig(v, 10).to_string()).unwrap_or_default(),
            r.failure.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    std::io::Error::other(e.to_string()).into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_matrix_rows_agree() {
        let s = SimilarityMatrix::constant(6, 6, 0.25).unwrap();
        let lc = LoadConstraints::uniform(6, 6, 2, 2);
        let rows = fairness_report(&s, &lc, &Transform::Identity, &Algorithm::ALL, 1);
        assert_eq!(rows.len(), 5);
        for r in &rows {
            assert_eq!(r.fairness, Some(ExtReal(0.5)), "{}", r.algorithm);
            assert_eq!(r.profile.len(), 6);
        }
        let csv = report_csv(&rows).unwrap();
        assert!(csv.starts_with("algorithm,fairness,cumulative,failure\npr4a,0.5,3,"));
    }

    #[test]
    fn failures_are_rows() {
        let s = SimilarityMatrix::constant(10, 10, 0.25).unwrap();
        let lc = LoadConstraints::uniform(10, 10, 2, 2);
        let rows = fairness_report(&s, &lc, &Transform::Identity, &[Algorithm::Hard], 0);
        assert!(rows[0].failure.as_deref().unwrap().contains("oracle too large"));
    }
}
