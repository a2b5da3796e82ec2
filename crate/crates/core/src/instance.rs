//! Problem instance types: the similarity matrix, load constraints and
//! reviewer-to-paper assignments.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One cell of the similarity matrix.
///
/// Conflicts of interest are kept as a separate marker instead of a
/// negative-infinite similarity so that all arithmetic on similarities stays
/// finite. A conflicting pair is never assignable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Sim(f64),
    Conflict,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Sim(v) => Some(v),
            Cell::Conflict => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Sim(v) => write!(f, "{v}"),
            Cell::Conflict => f.write_str("CONFLICT"),
        }
    }
}

/// Reviewer-by-paper similarity matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n_reviewers: usize,
    n_papers: usize,
    cells: Vec<Cell>,
    reviewer_ids: Vec<String>,
    paper_ids: Vec<String>,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major cells. Ids default to `r0..`, `p0..`.
    pub fn new(n_reviewers: usize, n_papers: usize, cells: Vec<Cell>) -> Result<Self> {
        if n_reviewers < 2 || n_papers < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 reviewers and 2 papers, got {n_reviewers}x{n_papers}"
            )));
        }
        if cells.len() != n_reviewers * n_papers {
            return Err(Error::Dimension(format!(
                "{} cells for a {n_reviewers}x{n_papers} matrix",
                cells.len()
            )));
        }
        for (idx, c) in cells.iter().enumerate() {
            if let Cell::Sim(v) = c {
                if !(0.0..=1.0).contains(v) {
                    return Err(Error::InvalidInput(format!(
                        "similarity {v} at reviewer {}, paper {} outside [0, 1]",
                        idx / n_papers,
                        idx % n_papers
                    )));
                }
            }
        }
        Ok(Self {
            n_reviewers,
            n_papers,
            cells,
            reviewer_ids: (0..n_reviewers).map(|i| format!("r{i}")).collect(),
            paper_ids: (0..n_papers).map(|j| format!("p{j}")).collect(),
        })
    }

    /// Builds a conflict-free matrix from rows of similarities.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let cells = rows.iter().flatten().map(|&v| Cell::Sim(v)).collect();
        Self::new(n, m, cells)
    }

    /// Builds a matrix where every entry equals `value`.
    pub fn constant(n_reviewers: usize, n_papers: usize, value: f64) -> Result<Self> {
        Self::new(
            n_reviewers,
            n_papers,
            vec![Cell::Sim(value); n_reviewers * n_papers],
        )
    }

    pub fn with_ids(mut self, reviewer_ids: Vec<String>, paper_ids: Vec<String>) -> Result<Self> {
        if reviewer_ids.len() != self.n_reviewers || paper_ids.len() != self.n_papers {
            return Err(Error::Dimension(format!(
                "{} reviewer ids and {} paper ids for a {}x{} matrix",
                reviewer_ids.len(),
                paper_ids.len(),
                self.n_reviewers,
                self.n_papers
            )));
        }
        self.reviewer_ids = reviewer_ids;
        self.paper_ids = paper_ids;
        Ok(self)
    }

    pub fn n_reviewers(&self) -> usize {
        self.n_reviewers
    }

    pub fn n_papers(&self) -> usize {
        self.n_papers
    }

    pub fn reviewer_ids(&self) -> &[String] {
        &self.reviewer_ids
    }

    pub fn paper_ids(&self) -> &[String] {
        &self.paper_ids
    }

    pub fn cell(&self, reviewer: usize, paper: usize) -> Cell {
        self.cells[reviewer * self.n_papers + paper]
    }

    /// Similarity of a pair, `None` on conflict.
    pub fn get(&self, reviewer: usize, paper: usize) -> Option<f64> {
        self.cell(reviewer, paper).value()
    }

    pub fn is_conflict(&self, reviewer: usize, paper: usize) -> bool {
        matches!(self.cell(reviewer, paper), Cell::Conflict)
    }

    /// Marks a pair as never assignable.
    pub fn mask(&mut self, reviewer: usize, paper: usize) {
        self.cells[reviewer * self.n_papers + paper] = Cell::Conflict;
    }

    /// Largest non-conflict entry.
    pub fn max_entry(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter_map(|c| c.value())
            .max_by(f64::total_cmp)
    }

    /// Smallest non-conflict entry.
    pub fn min_entry(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter_map(|c| c.value())
            .min_by(f64::total_cmp)
    }
}

/// Per-paper demand and per-reviewer capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadConstraints {
    pub paper_demand: Vec<usize>,
    pub reviewer_capacity: Vec<usize>,
}

impl LoadConstraints {
    pub fn uniform(n_reviewers: usize, n_papers: usize, lambda: usize, mu: usize) -> Self {
        Self {
            paper_demand: vec![lambda; n_papers],
            reviewer_capacity: vec![mu; n_reviewers],
        }
    }

    /// The common demand if every paper asks for the same number of reviews.
    pub fn uniform_demand(&self) -> Option<usize> {
        let first = *self.paper_demand.first()?;
        self.paper_demand
            .iter()
            .all(|&d| d == first)
            .then_some(first)
    }

    pub fn max_demand(&self) -> usize {
        self.paper_demand.iter().copied().max().unwrap_or(0)
    }

    pub fn total_demand(&self) -> usize {
        self.paper_demand.iter().sum()
    }

    /// Checks shape against `s` plus the counting feasibility conditions.
    pub fn check(&self, s: &SimilarityMatrix) -> Result<()> {
        if self.paper_demand.len() != s.n_papers()
            || self.reviewer_capacity.len() != s.n_reviewers()
        {
            return Err(Error::Dimension(format!(
                "loads for {} papers / {} reviewers, matrix is {}x{}",
                self.paper_demand.len(),
                self.reviewer_capacity.len(),
                s.n_reviewers(),
                s.n_papers()
            )));
        }
        if let Some(j) = self.paper_demand.iter().position(|&d| d == 0) {
            return Err(Error::InvalidInput(format!("paper {j} has zero demand")));
        }
        if let Some(j) = self.paper_demand.iter().position(|&d| d > s.n_reviewers()) {
            return Err(Error::InvalidInput(format!(
                "paper {j} demands {} reviewers but only {} exist",
                self.paper_demand[j],
                s.n_reviewers()
            )));
        }
        let supply: usize = self.reviewer_capacity.iter().sum();
        if supply < self.total_demand() {
            return Err(Error::Infeasible {
                context: "total reviewer capacity below total paper demand".into(),
                required: self.total_demand(),
                achieved: supply,
            });
        }
        Ok(())
    }
}

/// Binary reviewer-to-paper assignment, stored as the sorted reviewer set of
/// every paper.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    n_reviewers: usize,
    reviewers: Vec<Vec<usize>>,
}

impl Assignment {
    pub fn empty(n_reviewers: usize, n_papers: usize) -> Self {
        Self {
            n_reviewers,
            reviewers: vec![Vec::new(); n_papers],
        }
    }

    pub fn from_pairs(
        n_reviewers: usize,
        n_papers: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut a = Self::empty(n_reviewers, n_papers);
        for (i, j) in pairs {
            if i >= n_reviewers || j >= n_papers {
                return Err(Error::Dimension(format!(
                    "pair ({i}, {j}) outside {n_reviewers}x{n_papers}"
                )));
            }
            a.insert(i, j);
        }
        Ok(a)
    }

    /// From a dense 0/1 matrix (rows are reviewers).
    pub fn from_matrix(matrix: &[Vec<u8>]) -> Result<Self> {
        let n = matrix.len();
        let m = matrix.first().map_or(0, Vec::len);
        if matrix.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged assignment matrix".into()));
        }
        let pairs = matrix.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(move |(j, _)| (i, j))
        });
        Self::from_pairs(n, m, pairs)
    }

    pub fn n_reviewers(&self) -> usize {
        self.n_reviewers
    }

    pub fn n_papers(&self) -> usize {
        self.reviewers.len()
    }

    /// Adds the pair; returns false if it was already present.
    pub fn insert(&mut self, reviewer: usize, paper: usize) -> bool {
        let set = &mut self.reviewers[paper];
        match set.binary_search(&reviewer) {
            Ok(_) => false,
            Err(pos) => {
                set.insert(pos, reviewer);
                true
            }
        }
    }

    pub fn contains(&self, reviewer: usize, paper: usize) -> bool {
        self.reviewers[paper].binary_search(&reviewer).is_ok()
    }

    /// Sorted reviewers assigned to `paper`.
    pub fn reviewers_of(&self, paper: usize) -> &[usize] {
        &self.reviewers[paper]
    }

    pub fn set_reviewers(&mut self, paper: usize, mut reviewers: Vec<usize>) {
        reviewers.sort_unstable();
        reviewers.dedup();
        self.reviewers[paper] = reviewers;
    }

    /// Papers assigned to each reviewer.
    pub fn loads(&self) -> Vec<usize> {
        let mut loads = vec![0; self.n_reviewers];
        for set in &self.reviewers {
            for &i in set {
                loads[i] += 1;
            }
        }
        loads
    }

    /// All assigned pairs ordered by (paper, reviewer).
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.reviewers
            .iter()
            .enumerate()
            .flat_map(|(j, set)| set.iter().map(move |&i| (i, j)))
    }

    pub fn len(&self) -> usize {
        self.reviewers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.n_papers()]; self.n_reviewers];
        for (i, j) in self.pairs() {
            m[i][j] = 1;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_similarity() {
        let err = SimilarityMatrix::from_rows(&[vec![0.5, 1.2], vec![0.0, 0.1]]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn rejects_tiny_instances() {
        assert!(SimilarityMatrix::from_rows(&[vec![0.5, 0.2]]).is_err());
    }

    #[test]
    fn extremes_skip_conflicts() {
        let mut s = SimilarityMatrix::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.1]]).unwrap();
        s.mask(0, 1);
        s.mask(1, 0);
        assert_eq!(s.max_entry(), Some(0.5));
        assert_eq!(s.min_entry(), Some(0.1));
    }

    #[test]
    fn load_checks() {
        let s = SimilarityMatrix::constant(3, 3, 0.5).unwrap();
        assert!(LoadConstraints::uniform(3, 3, 1, 1).check(&s).is_ok());
        assert!(matches!(
            LoadConstraints::uniform(3, 3, 2, 1).check(&s),
            Err(Error::Infeasible { .. })
        ));
        assert!(LoadConstraints::uniform(3, 3, 4, 4).check(&s).is_err());
        assert!(matches!(
            LoadConstraints::uniform(2, 3, 1, 1).check(&s),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn assignment_round_trip_matrix() {
        let a = Assignment::from_pairs(3, 2, [(0, 1), (2, 0), (1, 1)]).unwrap();
        assert_eq!(a.reviewers_of(1), &[0, 1]);
        assert_eq!(a.loads(), vec![1, 1, 1]);
        assert_eq!(Assignment::from_matrix(&a.to_matrix()).unwrap(), a);
    }
}
