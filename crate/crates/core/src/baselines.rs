//! Comparison assignments: the cumulative-similarity optimum, the first
//! candidate of the fair algorithm, a random feasible assignment, and an
//! exact branch-and-bound solver for small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::assign::{build_candidate, peer_review_4all, Pr4aOptions, SubroutineOptions};
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::instance::{Assignment, LoadConstraints, SimilarityMatrix};
use crate::metrics::fairness;
use crate::transform::Transform;

fn full_network(
    s: &SimilarityMatrix,
    lc: &LoadConstraints,
    mut cost: impl FnMut(usize, usize, f64) -> f64,
) -> Result<FlowNetwork> {
    let papers: Vec<usize> = (0..s.n_papers()).collect();
    let mut net = FlowNetwork::new(&lc.reviewer_capacity, &papers, &lc.paper_demand)?;
    for j in 0..s.n_papers() {
        for i in 0..s.n_reviewers() {
            if lc.reviewer_capacity[i] == 0 {
                continue;
            }
            if let Some(v) = s.get(i, j) {
                net.insert_edge(i, j, cost(i, j, v))?;
            }
        }
    }
    Ok(net)
}

fn solve_full(net: &mut FlowNetwork, s: &SimilarityMatrix, what: &str) -> Result<Assignment> {
    let target = net.target();
    let pairs = net.select_leveled_max_cost_max_flow();
    if pairs.len() < target {
        return Err(Error::Infeasible {
            context: format!("{what}: every admissible edge present"),
            required: target,
            achieved: pairs.len(),
        });
    }
    Assignment::from_pairs(s.n_reviewers(), s.n_papers(), pairs)
}

/// Feasible assignment of maximum total similarity.
pub fn tpms_assign(s: &SimilarityMatrix, lc: &LoadConstraints) -> Result<Assignment> {
    lc.check(s)?;
    let mut net = full_network(s, lc, |_, _, v| v)?;
    solve_full(&mut net, s, "cumulative assignment")
}

/// The first-iteration candidate with one strongest-possible reviewer per
/// paper, completed by a second flow computation.
pub fn hartvigsen_assign(s: &SimilarityMatrix, lc: &LoadConstraints) -> Result<Assignment> {
    lc.check(s)?;
    let papers: Vec<usize> = (0..s.n_papers()).collect();
    build_candidate(1, &papers, s, lc, &lc.reviewer_capacity, &SubroutineOptions::default())
}

/// Maximum flow on the full network with independent uniform edge costs.
pub fn random_assign(s: &SimilarityMatrix, lc: &LoadConstraints, rng: &mut impl Rng) -> Result<Assignment> {
    lc.check(s)?;
    let mut net = full_network(s, lc, |_, _, _| rng.random::<f64>())?;
    solve_full(&mut net, s, "random assignment")
}

/// [`random_assign`] driven by a fresh generator seeded with `seed`.
pub fn random_assign_seeded(s: &SimilarityMatrix, lc: &LoadConstraints, seed: u64) -> Result<Assignment> {
    random_assign(s, lc, &mut ChaCha20Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_search_nodes: u64,
    pub max_reviewers: usize,
    pub max_papers: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_search_nodes: 1_000_000,
            max_reviewers: 8,
            max_papers: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub assignment: Assignment,
    pub fairness: f64,
    pub nodes_visited: u64,
}

/// Sum of utilities taken in ascending order, so equal multisets give equal
/// sums.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

struct Search<'a> {
    util: Vec<Vec<Option<f64>>>,
    demand: &'a [usize],
    order: Vec<usize>,
    remaining: Vec<usize>,
    chosen: Vec<Vec<usize>>,
    best: f64,
    best_choice: Option<Vec<Vec<usize>>>,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    /// Highest sum paper `j` could still get from reviewers with capacity.
    fn optimistic(&self, j: usize) -> f64 {
        let mut vals: Vec<f64> = (0..self.remaining.len())
            .filter(|&i| self.remaining[i] > 0)
            .filter_map(|i| self.util[i][j])
            .collect();
        if vals.len() < self.demand[j] {
            return f64::NEG_INFINITY;
        }
        vals.sort_by(|a, b| b.total_cmp(a));
        vals.truncate(self.demand[j]);
        sorted_sum(vals)
    }

    fn subsets(&self, j: usize) -> Vec<(f64, Vec<usize>)> {
        let eligible: Vec<usize> = (0..self.remaining.len())
            .filter(|&i| self.remaining[i] > 0 && self.util[i][j].is_some())
            .collect();
        let mut out = Vec::new();
        let mut pick = Vec::with_capacity(self.demand[j]);
        combinations(&eligible, self.demand[j], 0, &mut pick, &mut |c| {
            let sum = sorted_sum(c.iter().map(|&i| self.util[i][j].unwrap()).collect());
            out.push((sum, c.to_vec()));
        });
        // stable: equal sums keep lexicographic reviewer order
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    fn dfs(&mut self, depth: usize, current_min: f64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::OracleBudget(format!(
                "search exceeded {} nodes",
                self.budget
            )));
        }
        if depth == self.order.len() {
            if current_min > self.best || self.best_choice.is_none() {
                self.best = current_min;
                self.best_choice = Some(self.chosen.clone());
            }
            return Ok(());
        }
        for &j in &self.order[depth..] {
            if self.best_choice.is_some() && self.optimistic(j) <= self.best {
                return Ok(());
            }
        }
        let j = self.order[depth];
        for (sum, subset) in self.subsets(j) {
            if self.best_choice.is_some() && sum <= self.best {
                break;
            }
            for &i in &subset {
                self.remaining[i] -= 1;
            }
            self.chosen[j] = subset;
            self.dfs(depth + 1, current_min.min(sum))?;
            for &i in &self.chosen[j] {
                self.remaining[i] += 1;
            }
            self.chosen[j].clear();
        }
        Ok(())
    }
}

fn combinations(items: &[usize], k: usize, start: usize, pick: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    if pick.len() == k {
        emit(pick);
        return;
    }
    for idx in start..items.len() {
        if items.len() - idx < k - pick.len() {
            break;
        }
        pick.push(items[idx]);
        combinations(items, k, idx + 1, pick, emit);
        pick.pop();
    }
}

/// Exact maximizer of the fairness objective by branch and bound. The fair
/// algorithm's output is the initial incumbent; only strict improvements
/// replace it.
pub fn hard_bruteforce(
    s: &SimilarityMatrix,
    lc: &LoadConstraints,
    f: &Transform,
    budget: &OracleBudget,
) -> Result<OracleResult> {
    lc.check(s)?;
    if s.n_reviewers() > budget.max_reviewers || s.n_papers() > budget.max_papers {
        return Err(Error::OracleBudget(format!(
            "{}x{} instance exceeds the {}x{} limit",
            s.n_reviewers(),
            s.n_papers(),
            budget.max_reviewers,
            budget.max_papers
        )));
    }
    let (n, m) = (s.n_reviewers(), s.n_papers());
    let util: Vec<Vec<Option<f64>>> = (0..n)
        .map(|i| (0..m).map(|j| s.get(i, j).map(|v| f.eval(v))).collect())
        .collect();

    let (start, start_fairness) = match peer_review_4all(s, lc, f, &Pr4aOptions::default()) {
        Ok((a, _)) => {
            let g = fairness(&a, s, f)?;
            (Some(a), g)
        }
        Err(Error::Infeasible { .. }) => (None, f64::NEG_INFINITY),
        Err(e) => return Err(e),
    };

    let mut search = Search {
        util,
        demand: &lc.paper_demand,
        order: Vec::new(),
        remaining: lc.reviewer_capacity.clone(),
        chosen: vec![Vec::new(); m],
        best: start_fairness,
        best_choice: None,
        nodes: 0,
        budget: budget.max_search_nodes,
    };
    let mut order: Vec<(f64, usize)> = (0..m).map(|j| (search.optimistic(j), j)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    search.order = order.into_iter().map(|(_, j)| j).collect();
    if start.is_some() {
        // the incumbent counts as found; the search only looks for better
        search.best_choice = Some(Vec::new());
    }
    search.dfs(0, f64::INFINITY)?;

    let nodes_visited = search.nodes;
    match (search.best_choice, start) {
        (Some(choice), _) if !choice.is_empty() => {
            let mut a = Assignment::empty(n, m);
            for (j, reviewers) in choice.into_iter().enumerate() {
                a.set_reviewers(j, reviewers);
            }
            Ok(OracleResult {
                assignment: a,
                fairness: search.best,
                nodes_visited,
            })
        }
        (_, Some(a)) => Ok(OracleResult {
            assignment: a,
            fairness: start_fairness,
            nodes_visited,
        }),
        _ => Err(Error::Infeasible {
            context: "exhaustive search found no feasible assignment".into(),
            required: lc.total_demand(),
            achieved: 0,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::metrics::{cumulative_quality, paper_sum_profile, validate_assignment};

    #[test]
    fn table1_baselines() {
        let (s, lc) = fixtures::table1();
        let t = tpms_assign(&s, &lc).unwrap();
        validate_assignment(&t, &s, &lc).unwrap();
        assert!((cumulative_quality(&t, &s).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(fairness(&t, &s, &Transform::Identity).unwrap(), 0.0);

        let h = hard_bruteforce(&s, &lc, &Transform::Identity, &OracleBudget::default()).unwrap();
        assert_eq!(h.fairness, 0.2);
        let hv = hartvigsen_assign(&s, &lc).unwrap();
        let (p, _) = peer_review_4all(&s, &lc, &Transform::Identity, &Pr4aOptions::default()).unwrap();
        assert_eq!(paper_sum_profile(&hv, &s, &Transform::Identity).unwrap(), vec![0.2, 0.25, 1.0]);
        assert_eq!(
            paper_sum_profile(&p, &s, &Transform::Identity).unwrap(),
            paper_sum_profile(&hv, &s, &Transform::Identity).unwrap()
        );
    }

    #[test]
    fn tightness_oracle_reaches_point_six() {
        let (s, lc) = fixtures::tightness(0.01);
        let h = hard_bruteforce(&s, &lc, &Transform::Identity, &OracleBudget::default()).unwrap();
        validate_assignment(&h.assignment, &s, &lc).unwrap();
        assert!((h.fairness - 0.6).abs() < 1e-12);
        assert_eq!(fairness(&h.assignment, &s, &Transform::Identity).unwrap(), h.fairness);
        let hv = hartvigsen_assign(&s, &lc).unwrap();
        assert_eq!(fairness(&hv, &s, &Transform::Identity).unwrap(), 0.31);
    }

    #[test]
    fn cumulative_trap_baselines() {
        let (s, lc) = fixtures::cumulative_trap(2);
        let t = tpms_assign(&s, &lc).unwrap();
        assert_eq!(fairness(&t, &s, &Transform::Identity).unwrap(), 0.0);
        assert!((cumulative_quality(&t, &s).unwrap() - 4.0).abs() < 1e-12);
        let h = hard_bruteforce(&s, &lc, &Transform::Identity, &OracleBudget::default()).unwrap();
        assert!((h.fairness - 0.8).abs() < 1e-12);
    }

    #[test]
    fn constant_matrix_all_equal() {
        let s = SimilarityMatrix::constant(4, 4, 0.3).unwrap();
        let lc = LoadConstraints::uniform(4, 4, 2, 2);
        let t = tpms_assign(&s, &lc).unwrap();
        assert!((cumulative_quality(&t, &s).unwrap() - 2.4).abs() < 1e-12);
        let hv = hartvigsen_assign(&s, &lc).unwrap();
        assert!((fairness(&hv, &s, &Transform::Identity).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn random_assignment_is_feasible_and_seeded() {
        let (s, lc) = fixtures::tightness(0.01);
        let a = random_assign_seeded(&s, &lc, 7).unwrap();
        validate_assignment(&a, &s, &lc).unwrap();
        assert_eq!(a, random_assign_seeded(&s, &lc, 7).unwrap());
    }

    #[test]
    fn oracle_refuses_large_instances() {
        let s = SimilarityMatrix::constant(10, 10, 0.5).unwrap();
        let lc = LoadConstraints::uniform(10, 10, 3, 3);
        let r = hard_bruteforce(&s, &lc, &Transform::Identity, &OracleBudget::default());
        assert!(matches!(r, Err(Error::OracleBudget(_))));
        let tiny = OracleBudget { max_search_nodes: 1, ..Default::default() };
        let (s, lc) = fixtures::tightness(0.01);
        assert!(matches!(
            hard_bruteforce(&s, &lc, &Transform::Identity, &tiny),
            Err(Error::OracleBudget(_))
        ));
    }

    #[test]
    fn oracle_matches_enumeration() {
        // oracle: enumerate every 0/1 matrix of a 4x3 instance with lambda = 2, mu = 2
        let rows = vec![
            vec![0.9, 0.1, 0.4],
            vec![0.2, 0.8, 0.3],
            vec![0.7, 0.6, 0.0],
            vec![0.1, 0.5, 0.95],
        ];
        let s = SimilarityMatrix::from_rows(&rows).unwrap();
        let lc = LoadConstraints::uniform(4, 3, 2, 2);
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << 12) {
            let mut a = Assignment::empty(4, 3);
            for b in 0..12 {
                if mask >> b & 1 == 1 {
                    a.insert(b / 3, b % 3);
                }
            }
            if validate_assignment(&a, &s, &lc).is_ok() {
                best = best.max(fairness(&a, &s, &Transform::Identity).unwrap());
            }
        }
        let h = hard_bruteforce(&s, &lc, &Transform::Identity, &OracleBudget::default()).unwrap();
        assert!((h.fairness - best).abs() < 1e-12);
    }
}
