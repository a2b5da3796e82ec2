//! Feasibility checks and the assignment-quality measures: max-min fairness,
//! cumulative similarity, per-paper sum profiles and the Hamming distance
//! between accepted sets.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, LoadConstraints, SimilarityMatrix};
use crate::transform::Transform;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    DemandUnmet { paper: usize, assigned: usize, demand: usize },
    DemandExceeded { paper: usize, assigned: usize, demand: usize },
    OverCapacity { reviewer: usize, load: usize, capacity: usize },
    ConflictAssigned { reviewer: usize, paper: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DemandUnmet { paper, assigned, demand } => {
                write!(f, "paper {paper} demand unmet ({assigned} of {demand})")
            }
            Violation::DemandExceeded { paper, assigned, demand } => {
                write!(f, "paper {paper} over-assigned ({assigned} > {demand})")
            }
            Violation::OverCapacity { reviewer, load, capacity } => {
                write!(f, "reviewer {reviewer} over capacity ({load} > {capacity})")
            }
            Violation::ConflictAssigned { reviewer, paper } => {
                write!(f, "conflict assigned (reviewer {reviewer}, paper {paper})")
            }
        }
    }
}

fn check_dims(a: &Assignment, s: &SimilarityMatrix) -> Result<()> {
    if a.n_reviewers() != s.n_reviewers() || a.n_papers() != s.n_papers() {
        return Err(Error::Dimension(format!(
            "assignment is {}x{}, similarity matrix is {}x{}",
            a.n_reviewers(),
            a.n_papers(),
            s.n_reviewers(),
            s.n_papers()
        )));
    }
    Ok(())
}

/// Lists every violated feasibility constraint. Dimension problems are
/// reported as [`Error::Dimension`], constraint failures as
/// [`Error::Violations`].
pub fn validate_assignment(
    a: &Assignment,
    s: &SimilarityMatrix,
    lc: &LoadConstraints,
) -> Result<()> {
    check_dims(a, s)?;
    if lc.paper_demand.len() != s.n_papers() || lc.reviewer_capacity.len() != s.n_reviewers() {
        return Err(Error::Dimension("load constraints do not match matrix".into()));
    }
    let mut violations = Vec::new();
    for j in 0..a.n_papers() {
        let assigned = a.reviewers_of(j).len();
        let demand = lc.paper_demand[j];
        match assigned.cmp(&demand) {
            Ordering::Less => violations.push(Violation::DemandUnmet { paper: j, assigned, demand }),
            Ordering::Greater => {
                violations.push(Violation::DemandExceeded { paper: j, assigned, demand })
            }
            Ordering::Equal => {}
        }
    }
    for (i, load) in a.loads().into_iter().enumerate() {
        if load > lc.reviewer_capacity[i] {
            violations.push(Violation::OverCapacity {
                reviewer: i,
                load,
                capacity: lc.reviewer_capacity[i],
            });
        }
    }
    for (i, j) in a.pairs() {
        if s.is_conflict(i, j) {
            violations.push(Violation::ConflictAssigned { reviewer: i, paper: j });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Violations(violations))
    }
}

fn check_no_conflicts(a: &Assignment, s: &SimilarityMatrix) -> Result<()> {
    check_dims(a, s)?;
    let conflicts: Vec<_> = a
        .pairs()
        .filter(|&(i, j)| s.is_conflict(i, j))
        .map(|(reviewer, paper)| Violation::ConflictAssigned { reviewer, paper })
        .collect();
    if conflicts.is_empty() {
        Ok(())
    } else {
        Err(Error::Violations(conflicts))
    }
}

/// Transformed similarity sum of one paper.
///
/// Terms are added in ascending order so that equal multisets of utilities
/// always produce bit-identical sums, which keeps worst-off ties exact.
pub(crate) fn paper_utility(a: &Assignment, s: &SimilarityMatrix, f: &Transform, j: usize) -> f64 {
    let mut terms: Vec<f64> = a
        .reviewers_of(j)
        .iter()
        .map(|&i| f.eval(s.get(i, j).unwrap_or(0.0)))
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Per-paper utilities for the given papers, in the given order.
pub(crate) fn utilities_for(
    a: &Assignment,
    s: &SimilarityMatrix,
    f: &Transform,
    papers: &[usize],
) -> Vec<f64> {
    papers.iter().map(|&j| paper_utility(a, s, f, j)).collect()
}

/// Minimum over papers of the sum of `f(s_ij)` over assigned reviewers.
pub fn fairness(a: &Assignment, s: &SimilarityMatrix, f: &Transform) -> Result<f64> {
    check_no_conflicts(a, s)?;
    Ok((0..s.n_papers())
        .map(|j| paper_utility(a, s, f, j))
        .min_by(f64::total_cmp)
        .unwrap_or(f64::INFINITY))
}

/// Total similarity over all assigned pairs.
pub fn cumulative_quality(a: &Assignment, s: &SimilarityMatrix) -> Result<f64> {
    check_no_conflicts(a, s)?;
    Ok(a.pairs().map(|(i, j)| s.get(i, j).unwrap_or(0.0)).sum())
}

/// Per-paper transformed sums sorted ascending; element 0 is the fairness.
pub fn paper_sum_profile(a: &Assignment, s: &SimilarityMatrix, f: &Transform) -> Result<Vec<f64>> {
    check_no_conflicts(a, s)?;
    let mut v: Vec<f64> = (0..s.n_papers()).map(|j| paper_utility(a, s, f, j)).collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Size of the symmetric difference of two index sets.
pub fn hamming_distance(a: &[usize], b: &[usize]) -> usize {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    a.symmetric_difference(&b).count()
}

/// Lexicographic comparison of two ascending profiles in extended reals.
pub(crate) fn cmp_profiles(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}
