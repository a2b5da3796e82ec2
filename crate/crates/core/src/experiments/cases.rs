//! Block-structured similarity matrices. Block sizes scale with the matrix
//! dimensions; at 100x100 they match the reference layouts exactly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::SimilarityMatrix;
use crate::statmodel::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseId {
    /// 80% conventional papers with expert reviewers, 20% niche papers.
    C1,
    /// 25% strong reviewers, 75% weak, Beta(1, 3) perturbations.
    C2,
    /// A few near-perfect reviewers, many weak ones, a solid remainder.
    C3,
    /// Sparse: zero with probability 0.8, else uniform on [0.1, 0.9].
    C5,
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "C1" => Ok(CaseId::C1),
            "C2" => Ok(CaseId::C2),
            "C3" => Ok(CaseId::C3),
            "C5" => Ok(CaseId::C5),
            _ => Err(Error::Parse(format!("unknown case {s:?} (expected c1, c2, c3 or c5)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: CaseId,
    pub n_reviewers: usize,
    pub n_papers: usize,
}

impl CaseSpec {
    pub fn paper_scale(id: CaseId) -> Self {
        Self::scaled(id, 100, 100)
    }

    pub fn scaled(id: CaseId, n_reviewers: usize, n_papers: usize) -> Self {
        Self {
            id,
            n_reviewers,
            n_papers,
        }
    }
}

/// `percent` of `total`, rounded to nearest.
fn share(total: usize, percent: usize) -> usize {
    (total * percent + 50) / 100
}

fn from_fn(n: usize, m: usize, mut cell: impl FnMut(usize, usize) -> f64) -> Result<SimilarityMatrix> {
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| cell(i, j)).collect()).collect();
    SimilarityMatrix::from_rows(&rows)
}

/// Builds the matrix for `spec`. C1 and C3 ignore the seed.
pub fn generate_case(spec: &CaseSpec, seed: u64) -> Result<SimilarityMatrix> {
    let (n, m) = (spec.n_reviewers, spec.n_papers);
    let mut rng = substream(seed, 0);
    match spec.id {
        CaseId::C1 => {
            let (n1, m1) = (share(n, 80), share(m, 80));
            from_fn(n, m, |i, j| match (i < n1, j < m1) {
                (true, true) => 0.9,
                (false, false) => 0.15,
                _ => 0.5,
            })
        }
        CaseId::C2 => {
            let n1 = share(n, 25);
            let beta = Beta::new(1.0, 3.0).expect("valid shape");
            from_fn(n, m, |i, _| {
                let base = if i < n1 { 0.8 } else { 0.1 };
                base + 0.2 * beta.sample(&mut rng)
            })
        }
        CaseId::C3 => {
            let (n1, n2, m1) = (share(n, 10), share(n, 60), share(m, 60));
            from_fn(n, m, |i, j| match (i, j < m1) {
                (i, true) if i < n1 => 0.98,
                (i, false) if i < n1 => 0.9,
                (i, true) if i < n2 => 0.0,
                (i, false) if i < n2 => 0.7,
                _ => 0.9,
            })
        }
        CaseId::C5 => from_fn(n, m, |_, _| {
            if rng.random::<f64>() < 0.8 {
                0.0
            } else {
                rng.random_range(0.1..=0.9)
            }
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c1_blocks() {
        let s = generate_case(&CaseSpec::paper_scale(CaseId::C1), 0).unwrap();
        assert_eq!((s.n_reviewers(), s.n_papers()), (100, 100));
        assert_eq!(s.get(79, 79), Some(0.9));
        assert_eq!(s.get(80, 79), Some(0.5));
        assert_eq!(s.get(79, 80), Some(0.5));
        assert_eq!(s.get(99, 99), Some(0.15));
        let small = generate_case(&CaseSpec::scaled(CaseId::C1, 20, 20), 0).unwrap();
        assert_eq!(small.get(15, 15), Some(0.9));
        assert_eq!(small.get(16, 16), Some(0.15));
    }

    #[test]
    fn c3_blocks() {
        let s = generate_case(&CaseSpec::paper_scale(CaseId::C3), 0).unwrap();
        assert_eq!(s.get(9, 59), Some(0.98));
        assert_eq!(s.get(9, 60), Some(0.9));
        assert_eq!(s.get(10, 0), Some(0.0));
        assert_eq!(s.get(59, 99), Some(0.7));
        assert_eq!(s.get(60, 0), Some(0.9));
    }

    #[test]
    fn c2_ranges_and_seed() {
        let spec = CaseSpec::paper_scale(CaseId::C2);
        let s = generate_case(&spec, 3).unwrap();
        for j in 0..100 {
            assert!((0.8..=1.0).contains(&s.get(24, j).unwrap()));
            assert!((0.1..=0.3).contains(&s.get(25, j).unwrap()));
        }
        assert_eq!(s, generate_case(&spec, 3).unwrap());
        assert_ne!(s, generate_case(&spec, 4).unwrap());
    }

    #[test]
    fn c5_sparsity() {
        // 100 seeds x 10^4 cells: binomial sd of the zero fraction is 4e-4
        let spec = CaseSpec::paper_scale(CaseId::C5);
        let (mut zeros, mut total) = (0usize, 0usize);
        for seed in 0..100 {
            let s = generate_case(&spec, seed).unwrap();
            for i in 0..100 {
                for j in 0..100 {
                    let v = s.get(i, j).unwrap();
                    assert!(v == 0.0 || (0.1..=0.9).contains(&v));
                    zeros += (v == 0.0) as usize;
                    total += 1;
                }
            }
        }
        let frac = zeros as f64 / total as f64;
        assert!((frac - 0.8).abs() < 0.01, "zero fraction {frac}");
    }
}
