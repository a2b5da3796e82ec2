//! Small hand-built instances with known answers.

use crate::instance::{LoadConstraints, SimilarityMatrix};

/// 3x3 instance where the cumulative optimum leaves one paper with a
/// zero-similarity reviewer. Rows are reviewers, columns papers a, b, c.
pub const TABLE1: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [0.0, 0.0, 0.2], [0.25, 0.25, 0.5]];

pub fn table1() -> (SimilarityMatrix, LoadConstraints) {
    let rows: Vec<Vec<f64>> = TABLE1.iter().map(|r| r.to_vec()).collect();
    let s = SimilarityMatrix::from_rows(&rows)
        .expect("valid fixture")
        .with_ids(
            vec!["1".into(), "2".into(), "3".into()],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .expect("valid ids");
    (s, LoadConstraints::uniform(3, 3, 1, 1))
}

/// 4x4 instance on which the max-flow algorithm only reaches about half of
/// the optimal fairness (lambda = mu = 2).
pub fn tightness(eps: f64) -> (SimilarityMatrix, LoadConstraints) {
    let rows = vec![
        vec![0.3 + eps, 1.0, 1.0, 0.0],
        vec![0.3 - eps, 0.0, 1.0, 1.0],
        vec![0.0, 0.1, 0.0, 0.3],
        vec![0.0, 0.1, 0.0, 0.3],
    ];
    let s = SimilarityMatrix::from_rows(&rows)
        .expect("valid fixture")
        .with_ids(
            (1..=4).map(|i| i.to_string()).collect(),
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
        )
        .expect("valid ids");
    (s, LoadConstraints::uniform(4, 4, 2, 2))
}

/// `2 lambda x 2 lambda` block matrix `[[1, 0.4], [0.4, 0]]` on which the
/// cumulative objective has zero fairness.
pub fn cumulative_trap(lambda: usize) -> (SimilarityMatrix, LoadConstraints) {
    let n = 2 * lambda;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i < lambda, j < lambda) {
                    (true, true) => 1.0,
                    (false, false) => 0.0,
                    _ => 0.4,
                })
                .collect()
        })
        .collect();
    let s = SimilarityMatrix::from_rows(&rows).expect("valid fixture");
    (s, LoadConstraints::uniform(n, n, lambda, lambda))
}
