//! Topic coverage of an assignment, usable as the rule for choosing among
//! maximum flows.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::instance::{Assignment, SimilarityMatrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicProfile {
    paper_topics: Vec<BTreeSet<String>>,
    reviewer_topics: Vec<BTreeSet<String>>,
}

#[derive(Deserialize)]
struct TopicFile {
    papers: BTreeMap<String, Vec<String>>,
    reviewers: BTreeMap<String, Vec<String>>,
}

impl TopicProfile {
    pub fn new(paper_topics: Vec<BTreeSet<String>>, reviewer_topics: Vec<BTreeSet<String>>) -> Self {
        Self {
            paper_topics,
            reviewer_topics,
        }
    }

    /// Profile with no topics at all.
    pub fn empty(n_reviewers: usize, n_papers: usize) -> Self {
        Self::new(vec![BTreeSet::new(); n_papers], vec![BTreeSet::new(); n_reviewers])
    }

    /// Parses `{"papers": {id: [topics]}, "reviewers": {id: [topics]}}`,
    /// matching ids against the matrix. Ids missing from the file get no
    /// topics; unknown ids are an error.
    pub fn from_json(text: &str, s: &SimilarityMatrix) -> Result<Self> {
        let file: TopicFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("topic profile: {e}")))?;
        let resolve = |ids: &[String], map: BTreeMap<String, Vec<String>>, what: &str| {
            let mut out = vec![BTreeSet::new(); ids.len()];
            for (id, topics) in map {
                let pos = ids
                    .iter()
                    .position(|x| *x == id)
                    .ok_or_else(|| Error::Parse(format!("topic profile: unknown {what} id {id:?}")))?;
                out[pos] = topics.into_iter().collect();
            }
            Ok::<_, Error>(out)
        };
        Ok(Self {
            paper_topics: resolve(s.paper_ids(), file.papers, "paper")?,
            reviewer_topics: resolve(s.reviewer_ids(), file.reviewers, "reviewer")?,
        })
    }

    pub fn paper_topics(&self, j: usize) -> &BTreeSet<String> {
        &self.paper_topics[j]
    }

    pub fn reviewer_topics(&self, i: usize) -> &BTreeSet<String> {
        &self.reviewer_topics[i]
    }

    fn shared(&self, i: usize, j: usize) -> impl Iterator<Item = &String> {
        self.paper_topics[j].intersection(&self.reviewer_topics[i])
    }
}

/// Number of distinct paper topics covered by the assigned reviewers,
/// summed over papers.
pub fn coverage_objective(a: &Assignment, tp: &TopicProfile) -> usize {
    (0..a.n_papers())
        .map(|j| {
            let covered: BTreeSet<&String> = a.reviewers_of(j).iter().flat_map(|&i| tp.shared(i, j)).collect();
            covered.len()
        })
        .sum()
}

/// Greedily picks inserted pairs by marginal coverage gain (respecting
/// reviewer and paper capacities), then returns a maximum flow that uses as
/// many of the picked pairs as possible.
pub fn greedy_coverage_select(net: &FlowNetwork, tp: &TopicProfile) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(usize, usize)> = net.inserted_edges().map(|(i, j, _)| (i, j)).collect();
    candidates.sort_unstable();
    let mut reviewer_left: Vec<usize> = (0..net.n_reviewers()).map(|i| net.reviewer_capacity(i)).collect();
    let mut paper_left: BTreeMap<usize, usize> = net
        .papers()
        .iter()
        .map(|&j| (j, net.paper_capacity(j).unwrap_or(0)))
        .collect();
    let mut covered: BTreeMap<usize, BTreeSet<&String>> = BTreeMap::new();
    let mut chosen: BTreeSet<(usize, usize)> = BTreeSet::new();

    loop {
        let mut best: Option<((usize, usize), usize)> = None;
        for &(i, j) in &candidates {
            if chosen.contains(&(i, j)) || reviewer_left[i] == 0 || paper_left[&j] == 0 {
                continue;
            }
            let have = covered.get(&j);
            let gain = tp.shared(i, j).filter(|t| have.is_none_or(|c| !c.contains(t))).count();
            if gain > best.map_or(0, |b| b.1) {
                best = Some(((i, j), gain));
            }
        }
        let Some(((i, j), _)) = best else { break };
        covered.entry(j).or_default().extend(tp.shared(i, j));
        reviewer_left[i] -= 1;
        *paper_left.get_mut(&j).expect("paper in network") -= 1;
        chosen.insert((i, j));
    }

    let mut recosted = net.recosted(|i, j, _| if chosen.contains(&(i, j)) { 1.0 } else { 0.0 });
    recosted.select_max_cost_max_flow()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topics(list: &[&[&str]]) -> Vec<BTreeSet<String>> {
        list.iter().map(|t| t.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn duplicate_coverage_counts_once() {
        let tp = TopicProfile::new(topics(&[&["x", "y"], &[]]), topics(&[&["x"], &["x"]]));
        let mut a = Assignment::empty(2, 2);
        a.insert(0, 0);
        a.insert(1, 0);
        assert_eq!(coverage_objective(&a, &tp), 1);
    }

    #[test]
    fn no_shared_topics_is_zero() {
        let tp = TopicProfile::new(topics(&[&["x"], &["y"]]), topics(&[&["z"], &["w"]]));
        let a = Assignment::from_pairs(2, 2, vec![(0, 0), (1, 1)]).unwrap();
        assert_eq!(coverage_objective(&a, &tp), 0);
    }

    #[test]
    fn full_cover_attains_upper_bound() {
        let tp = TopicProfile::new(topics(&[&["x", "y"], &["z"]]), topics(&[&["x", "z"], &["y"]]));
        let a = Assignment::from_pairs(2, 2, vec![(0, 0), (1, 0), (0, 1)]).unwrap();
        assert_eq!(coverage_objective(&a, &tp), 3);
    }

    #[test]
    fn topic_sharing_reviewer_is_selected() {
        let mut net = FlowNetwork::new(&[1, 1], &[0], &[1]).unwrap();
        net.insert_edge(0, 0, 0.9).unwrap();
        net.insert_edge(1, 0, 0.9).unwrap();
        assert_eq!(net.max_flow_value(), 1);
        let tp = TopicProfile::new(topics(&[&["x"]]), topics(&[&[], &["x"]]));
        assert_eq!(greedy_coverage_select(&net, &tp), vec![(1, 0)]);
    }

    #[test]
    fn empty_topics_still_give_maximum_flow() {
        let mut net = FlowNetwork::new(&[1, 1, 1], &[0, 1], &[1, 1]).unwrap();
        for (i, j) in [(0, 0), (1, 0), (1, 1), (2, 1)] {
            net.insert_edge(i, j, 0.5).unwrap();
        }
        let tp = TopicProfile::empty(3, 2);
        assert_eq!(greedy_coverage_select(&net, &tp).len(), 2);
    }

    #[test]
    fn unique_flow_ignores_topics() {
        let mut net = FlowNetwork::new(&[1, 1], &[0, 1], &[1, 1]).unwrap();
        net.insert_edge(0, 0, 0.2).unwrap();
        net.insert_edge(1, 1, 0.2).unwrap();
        let tp = TopicProfile::new(topics(&[&["x"], &["x"]]), topics(&[&[], &[]]));
        assert_eq!(greedy_coverage_select(&net, &tp), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn json_profile_resolves_ids() {
        let s = SimilarityMatrix::constant(2, 2, 0.5)
            .unwrap()
            .with_ids(vec!["r1".into(), "r2".into()], vec!["p1".into(), "p2".into()])
            .unwrap();
        let tp = TopicProfile::from_json(r#"{"papers":{"p2":["ml"]},"reviewers":{"r1":["ml","db"]}}"#, &s).unwrap();
        assert!(tp.paper_topics(0).is_empty());
        assert!(tp.reviewer_topics(0).contains("db"));
        assert!(TopicProfile::from_json(r#"{"papers":{"zz":[]},"reviewers":{}}"#, &s).is_err());
    }
}
