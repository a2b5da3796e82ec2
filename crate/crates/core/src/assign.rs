//! The fair assignment algorithm.
//!
//! [`subroutine`] gives every paper in a set `kappa` reviewers so that the
//! weakest assigned pair is as strong as possible: reviewer-paper edges are
//! added to a flow network in order of decreasing similarity until the flow
//! saturates every paper. [`peer_review_4all`] builds one candidate per
//! `kappa` (kappa strong reviewers, then the remaining slots filled the same
//! way), keeps the fairest, permanently fixes its worst-off papers and
//! repeats on the rest.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{greedy_coverage_select, TopicProfile};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::flow::FlowNetwork;
use crate::instance::{Assignment, LoadConstraints, SimilarityMatrix};
use crate::metrics::{cmp_profiles, utilities_for};
use crate::transform::Transform;

/// How edges are added before each max-flow check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InsertionSearch {
    /// Binary search over the sorted edge prefix.
    #[default]
    Binary,
    /// One edge at a time, re-running max-flow after each.
    Linear,
}

/// Rule for picking one of several maximum flows.
#[derive(Debug, Clone, Copy, Default)]
pub enum Heuristic<'a> {
    /// Maximum flow of maximum total similarity.
    #[default]
    MaxCost,
    /// Greedy topic coverage, re-flowed to stay a maximum flow.
    Coverage(&'a TopicProfile),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SubroutineOptions<'a> {
    pub search: InsertionSearch,
    pub heuristic: Heuristic<'a>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Full,
    /// Stop after the first iteration and return its selected assignment.
    EarlyStop,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Pr4aOptions<'a> {
    pub mode: Mode,
    pub subroutine: SubroutineOptions<'a>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubroutineResult {
    /// Assignment over the whole matrix; only the requested papers are filled.
    pub assignment: Assignment,
    /// Smallest similarity among assigned pairs, `None` if nothing was needed.
    pub min_similarity: Option<f64>,
    /// Similarity of the last edge inserted before the flow saturated.
    pub last_inserted: Option<f64>,
    pub edges_inserted: usize,
}

/// Assigns `kappa` reviewers to every paper in `papers` with default options.
pub fn subroutine(
    kappa: usize,
    papers: &[usize],
    s: &SimilarityMatrix,
    capacities: &[usize],
) -> Result<SubroutineResult> {
    if kappa == 0 {
        return Err(Error::InvalidInput("kappa must be at least 1".into()));
    }
    let demands: Vec<(usize, usize)> = papers.iter().map(|&j| (j, kappa)).collect();
    subroutine_with(&demands, s, capacities, &SubroutineOptions::default())
}

/// Subroutine with an explicit demand per paper. Papers with zero demand are
/// skipped; conflict cells are never inserted.
pub fn subroutine_with(
    demands: &[(usize, usize)],
    s: &SimilarityMatrix,
    capacities: &[usize],
    opts: &SubroutineOptions<'_>,
) -> Result<SubroutineResult> {
    if capacities.len() != s.n_reviewers() {
        return Err(Error::Dimension(format!(
            "{} capacities for {} reviewers",
            capacities.len(),
            s.n_reviewers()
        )));
    }
    if let Some(&(j, _)) = demands.iter().find(|&&(j, _)| j >= s.n_papers()) {
        return Err(Error::Dimension(format!("paper {j} out of range")));
    }
    let active: Vec<(usize, usize)> = demands.iter().copied().filter(|&(_, d)| d > 0).collect();
    let empty = SubroutineResult {
        assignment: Assignment::empty(s.n_reviewers(), s.n_papers()),
        min_similarity: None,
        last_inserted: None,
        edges_inserted: 0,
    };
    if active.is_empty() {
        return Ok(empty);
    }
    let papers: Vec<usize> = active.iter().map(|&(j, _)| j).collect();
    let sink_caps: Vec<usize> = active.iter().map(|&(_, d)| d).collect();
    let base = FlowNetwork::new(capacities, &papers, &sink_caps)?;
    let target = base.target();

    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for &j in &papers {
        for (i, &cap) in capacities.iter().enumerate() {
            if cap == 0 {
                continue;
            }
            if let Some(v) = s.get(i, j) {
                edges.push((v, i, j));
            }
        }
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let (mut net, used) = match opts.search {
        InsertionSearch::Linear => insert_linear(base, &edges, target)?,
        InsertionSearch::Binary => insert_binary(base, &edges, target)?,
    };

    let pairs = match opts.heuristic {
        Heuristic::MaxCost => net.select_leveled_max_cost_max_flow(),
        Heuristic::Coverage(tp) => greedy_coverage_select(&net, tp),
    };
    debug_assert_eq!(pairs.len(), target);
    let assignment = Assignment::from_pairs(s.n_reviewers(), s.n_papers(), pairs)?;
    let min_similarity = assignment
        .pairs()
        .filter_map(|(i, j)| s.get(i, j))
        .min_by(f64::total_cmp);
    Ok(SubroutineResult {
        assignment,
        min_similarity,
        last_inserted: used.checked_sub(1).map(|k| edges[k].0),
        edges_inserted: used,
    })
}

fn infeasible(target: usize, achieved: usize) -> Error {
    Error::Infeasible {
        context: "all admissible reviewer-paper edges inserted".into(),
        required: target,
        achieved,
    }
}

fn insert_linear(
    mut net: FlowNetwork,
    edges: &[(f64, usize, usize)],
    target: usize,
) -> Result<(FlowNetwork, usize)> {
    let mut flow = 0;
    for (k, &(v, i, j)) in edges.iter().enumerate() {
        net.insert_edge(i, j, v)?;
        flow = net.max_flow_value();
        if flow >= target {
            return Ok((net, k + 1));
        }
    }
    Err(infeasible(target, flow))
}

/// Finds the shortest saturating prefix by bisection. The network for the
/// largest known-insufficient prefix is kept and extended, so every probe
/// resumes from an existing flow.
fn insert_binary(
    base: FlowNetwork,
    edges: &[(f64, usize, usize)],
    target: usize,
) -> Result<(FlowNetwork, usize)> {
    let extend = |net: &mut FlowNetwork, from: usize, to: usize| -> Result<usize> {
        for &(v, i, j) in &edges[from..to] {
            net.insert_edge(i, j, v)?;
        }
        Ok(net.max_flow_value())
    };
    let mut full = base.clone();
    let flow = extend(&mut full, 0, edges.len())?;
    if flow < target {
        return Err(infeasible(target, flow));
    }
    let (mut lo, mut hi) = (0usize, edges.len());
    let mut lo_net = base;
    let mut hi_net = full;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let mut probe = lo_net.clone();
        if extend(&mut probe, lo, mid)? >= target {
            hi = mid;
            hi_net = probe;
        } else {
            lo = mid;
            lo_net = probe;
        }
    }
    Ok((hi_net, hi))
}

/// Index of a critical similarity value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalIndex {
    /// Largest entry of the matrix.
    Zero,
    /// Best achievable weakest pair when every paper needs `k` reviewers
    /// (capped by its own demand).
    Kappa(usize),
    /// Smallest entry of the matrix.
    Infinity,
}

/// Critical similarity: the extreme entries for `Zero`/`Infinity`, otherwise
/// the stopping similarity of the subroutine on all papers.
pub fn critical_similarity(index: CriticalIndex, s: &SimilarityMatrix, lc: &LoadConstraints) -> Result<f64> {
    let all_conflict = || Error::InvalidInput("matrix has no non-conflict entries".into());
    match index {
        CriticalIndex::Zero => s.max_entry().ok_or_else(all_conflict),
        CriticalIndex::Infinity => s.min_entry().ok_or_else(all_conflict),
        CriticalIndex::Kappa(k) => {
            lc.check(s)?;
            if k == 0 {
                return Err(Error::InvalidInput("use CriticalIndex::Zero for kappa = 0".into()));
            }
            let demands: Vec<(usize, usize)> = lc
                .paper_demand
                .iter()
                .enumerate()
                .map(|(j, &d)| (j, d.min(k)))
                .collect();
            let r = subroutine_with(&demands, s, &lc.reviewer_capacity, &SubroutineOptions::default())
                .map_err(|e| e.with_context(&format!("critical similarity for kappa = {k}")))?;
            r.last_inserted.ok_or_else(all_conflict)
        }
    }
}

/// One candidate: `kappa` strongest-possible reviewers per paper, then the
/// remaining demand filled with the used pairs masked out.
pub(crate) fn build_candidate(
    kappa: usize,
    papers: &[usize],
    s: &SimilarityMatrix,
    lc: &LoadConstraints,
    capacities: &[usize],
    opts: &SubroutineOptions<'_>,
) -> Result<Assignment> {
    let first: Vec<(usize, usize)> = papers.iter().map(|&j| (j, lc.paper_demand[j].min(kappa))).collect();
    let core = subroutine_with(&first, s, capacities, opts)
        .map_err(|e| e.with_context(&format!("candidate kappa = {kappa}, first call")))?;
    let loads = core.assignment.loads();
    let residual: Vec<usize> = capacities.iter().zip(&loads).map(|(&c, &l)| c - l).collect();
    let mut masked = s.clone();
    for (i, j) in core.assignment.pairs() {
        masked.mask(i, j);
    }
    let rest: Vec<(usize, usize)> = papers
        .iter()
        .map(|&j| (j, lc.paper_demand[j] - lc.paper_demand[j].min(kappa)))
        .collect();
    let complement = subroutine_with(&rest, &masked, &residual, opts)
        .map_err(|e| e.with_context(&format!("candidate kappa = {kappa}, complement call")))?;
    let mut joined = core.assignment;
    for (i, j) in complement.assignment.pairs() {
        joined.insert(i, j);
    }
    Ok(joined)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Papers attaining the minimum in the selected assignment.
    pub worst_off: Vec<usize>,
    /// Papers whose reviewers were fixed in this iteration.
    pub fixed_papers: Vec<usize>,
    /// Fairness of the selected assignment over the papers still open.
    pub fairness: ExtReal,
    /// Selected candidate: 0 is the previous iteration's assignment.
    pub chosen_kappa: usize,
    /// Fairness per candidate index; `None` if absent or infeasible.
    pub candidate_fairness: Vec<Option<ExtReal>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pr4aTrace {
    pub iterations: Vec<IterationRecord>,
    pub early_stopped: bool,
}

impl Pr4aTrace {
    /// Candidate fairness values of the first iteration.
    pub fn first_candidates(&self) -> &[Option<ExtReal>] {
        self.iterations.first().map_or(&[], |r| &r.candidate_fairness[..])
    }
}

struct Scored {
    index: usize,
    assignment: Assignment,
    fairness: f64,
    profile: Vec<f64>,
}

fn score(index: usize, assignment: Assignment, s: &SimilarityMatrix, f: &Transform, papers: &[usize]) -> Scored {
    let mut profile = utilities_for(&assignment, s, f, papers);
    profile.sort_by(f64::total_cmp);
    Scored {
        index,
        assignment,
        fairness: profile[0],
        profile,
    }
}

/// Higher fairness wins. Two infinite candidates are compared by their
/// sorted profiles. Remaining ties go to the larger candidate index.
fn better(a: &Scored, b: &Scored) -> bool {
    let by_profile = if a.fairness.is_infinite() && b.fairness.is_infinite() {
        cmp_profiles(&a.profile, &b.profile)
    } else {
        a.fairness.total_cmp(&b.fairness)
    };
    by_profile.then(a.index.cmp(&b.index)) == Ordering::Greater
}

/// Runs the full iterative algorithm (or only its first iteration in
/// [`Mode::EarlyStop`]).
pub fn peer_review_4all(
    s: &SimilarityMatrix,
    lc: &LoadConstraints,
    f: &Transform,
    opts: &Pr4aOptions<'_>,
) -> Result<(Assignment, Pr4aTrace)> {
    lc.check(s)?;
    let n = s.n_reviewers();
    let mut remaining: Vec<usize> = (0..s.n_papers()).collect();
    let mut capacities = lc.reviewer_capacity.clone();
    let mut result = Assignment::empty(n, s.n_papers());
    let mut previous: Option<Assignment> = None;
    let mut trace = Pr4aTrace::default();

    while !remaining.is_empty() {
        let iteration = trace.iterations.len() + 1;
        let max_kappa = remaining.iter().map(|&j| lc.paper_demand[j]).max().unwrap_or(0);
        let built: Vec<(usize, Result<Assignment>)> = (1..=max_kappa)
            .into_par_iter()
            .map(|k| (k, build_candidate(k, &remaining, s, lc, &capacities, &opts.subroutine)))
            .collect();

        let mut candidate_fairness = vec![None; max_kappa + 1];
        let mut scored: Vec<Scored> = Vec::new();
        if let Some(prev) = previous.take() {
            let sc = score(0, prev, s, f, &remaining);
            candidate_fairness[0] = Some(ExtReal(sc.fairness));
            scored.push(sc);
        }
        let mut last_err = None;
        for (k, res) in built {
            match res {
                Ok(a) => {
                    let sc = score(k, a, s, f, &remaining);
                    candidate_fairness[k] = Some(ExtReal(sc.fairness));
                    scored.push(sc);
                }
                Err(e) => last_err = Some(e),
            }
        }
        let Some(best) = scored.into_iter().reduce(|a, b| if better(&b, &a) { b } else { a }) else {
            let err = last_err.unwrap_or_else(|| Error::InvalidInput("no candidates".into()));
            return Err(err.with_context(&format!("iteration {iteration}")));
        };

        let worst_off: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&j| crate::metrics::paper_utility(&best.assignment, s, f, j) == best.fairness)
            .collect();
        let fixed = match opts.mode {
            Mode::Full => worst_off.clone(),
            Mode::EarlyStop => remaining.clone(),
        };
        for &j in &fixed {
            let reviewers = best.assignment.reviewers_of(j).to_vec();
            for &i in &reviewers {
                capacities[i] -= 1;
            }
            result.set_reviewers(j, reviewers);
        }
        remaining.retain(|j| !fixed.contains(j));
        let mut carried = Assignment::empty(n, s.n_papers());
        for &j in &remaining {
            carried.set_reviewers(j, best.assignment.reviewers_of(j).to_vec());
        }
        previous = Some(carried);
        trace.iterations.push(IterationRecord {
            worst_off,
            fixed_papers: fixed,
            fairness: ExtReal(best.fairness),
            chosen_kappa: best.index,
            candidate_fairness,
        });
        if opts.mode == Mode::EarlyStop {
            trace.early_stopped = true;
            break;
        }
    }
    Ok((result, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Bound {
    pub s_zero: f64,
    pub s_infinity: f64,
    /// Critical similarities for kappa = 1..=lambda.
    pub s_kappa: Vec<f64>,
    /// Lower bound on the algorithm's fairness.
    pub numerator: ExtReal,
    /// Upper bound on the optimal fairness.
    pub denominator: ExtReal,
    /// Guaranteed approximation ratio (0/0 and inf/inf read as 1).
    pub ratio: f64,
}

/// `x * v` with `0 * inf = 0`.
fn times(x: usize, v: f64) -> f64 {
    if x == 0 {
        0.0
    } else {
        x as f64 * v
    }
}

/// Approximation guarantee from critical similarities. Requires a uniform
/// paper demand.
pub fn theorem1_bound(s: &SimilarityMatrix, lc: &LoadConstraints, f: &Transform) -> Result<Theorem1Bound> {
    let lambda = lc
        .uniform_demand()
        .ok_or_else(|| Error::InvalidInput("bound needs a uniform paper demand".into()))?;
    let s_zero = critical_similarity(CriticalIndex::Zero, s, lc)?;
    let s_infinity = critical_similarity(CriticalIndex::Infinity, s, lc)?;
    let s_kappa = (1..=lambda)
        .map(|k| critical_similarity(CriticalIndex::Kappa(k), s, lc))
        .collect::<Result<Vec<_>>>()?;
    let (f0, finf) = (f.eval(s_zero), f.eval(s_infinity));
    let numerator = (1..=lambda)
        .map(|k| times(k, f.eval(s_kappa[k - 1])) + times(lambda - k, finf))
        .max_by(f64::total_cmp)
        .unwrap_or(0.0);
    let denominator = (1..=lambda)
        .map(|k| times(k - 1, f0) + times(lambda - k + 1, f.eval(s_kappa[k - 1])))
        .min_by(f64::total_cmp)
        .unwrap_or(0.0);
    let ratio = if (numerator == 0.0 && denominator == 0.0)
        || (numerator.is_infinite() && denominator.is_infinite())
    {
        1.0
    } else {
        numerator / denominator
    };
    Ok(Theorem1Bound {
        s_zero,
        s_infinity,
        s_kappa,
        numerator: ExtReal(numerator),
        denominator: ExtReal(denominator),
        ratio,
    })
}
