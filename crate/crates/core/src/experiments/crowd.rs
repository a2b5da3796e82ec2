//! Evaluation on categorical crowd answers: workers act as reviewers,
//! unresolved questions as papers, and a worker's similarity to a question is
//! their accuracy on the gold questions of the same region. Each assignment
//! is scored by majority vote on the unresolved questions.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index::sample, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::mean_stderr;
use super::{solve, Algorithm};
use crate::error::{Error, Result};
use crate::instance::{Assignment, Cell, LoadConstraints, SimilarityMatrix};
use crate::metrics::{cumulative_quality, fairness};
use crate::statmodel::substream;
use crate::transform::Transform;

/// Worker-by-question answers with the answer key and question regions.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    pub workers: Vec<String>,
    pub questions: Vec<String>,
    pub region: Vec<String>,
    pub key: Vec<String>,
    /// `answers[w][q]`, `None` if the worker skipped the question.
    pub answers: Vec<Vec<Option<String>>>,
}

fn parse_err(what: &str, line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{what} line {line}: {msg}"))
}

impl ResponseMatrix {
    /// Reads `worker_id,question_id,answer` responses and a
    /// `question_id,region,correct_answer` key, each with a header row.
    pub fn from_csv(responses: &str, key: &str) -> Result<Self> {
        let mut questions = Vec::new();
        let mut region = Vec::new();
        let mut correct = Vec::new();
        let mut q_index = BTreeMap::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(key.as_bytes());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(format!("key: {e}")))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 3 {
                return Err(parse_err("key", line, format!("expected 3 columns, got {}", rec.len())));
            }
            if q_index.insert(rec[0].to_string(), questions.len()).is_some() {
                return Err(parse_err("key", line, format!("duplicate question {:?}", &rec[0])));
            }
            questions.push(rec[0].to_string());
            region.push(rec[1].to_string());
            correct.push(rec[2].to_string());
        }

        let mut workers: Vec<String> = Vec::new();
        let mut w_index = BTreeMap::new();
        let mut answers: Vec<Vec<Option<String>>> = Vec::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(responses.as_bytes());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(format!("responses: {e}")))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 3 {
                return Err(parse_err("responses", line, format!("expected 3 columns, got {}", rec.len())));
            }
            let q = *q_index
                .get(&rec[1])
                .ok_or_else(|| parse_err("responses", line, format!("question {:?} not in key", &rec[1])))?;
            let w = *w_index.entry(rec[0].to_string()).or_insert_with(|| {
                workers.push(rec[0].to_string());
                answers.push(vec![None; questions.len()]);
                workers.len() - 1
            });
            if answers[w][q].replace(rec[2].to_string()).is_some() {
                return Err(parse_err(
                    "responses",
                    line,
                    format!("worker {:?} answered {:?} twice", &rec[0], &rec[1]),
                ));
            }
        }
        Ok(Self {
            workers,
            questions,
            region,
            key: correct,
            answers,
        })
    }

    /// Questions grouped by region, regions in name order.
    fn regions(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (q, r) in self.region.iter().enumerate() {
            out.entry(r.as_str()).or_default().push(q);
        }
        out
    }

    /// Writes the responses and key CSVs.
    pub fn to_csv(&self) -> (String, String) {
        let mut responses = String::from("worker_id,question_id,answer\n");
        for (w, row) in self.answers.iter().enumerate() {
            for (q, a) in row.iter().enumerate() {
                if let Some(a) = a {
                    responses.push_str(&format!("{},{},{}\n", self.workers[w], self.questions[q], a));
                }
            }
        }
        let mut key = String::from("question_id,region,correct_answer\n");
        for q in 0..self.questions.len() {
            key.push_str(&format!("{},{},{}\n", self.questions[q], self.region[q], self.key[q]));
        }
        (responses, key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdConfig {
    pub gold_count: usize,
    pub unresolved_count: usize,
    pub n_workers: usize,
    pub lambda: usize,
    pub mu: usize,
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
}

impl Default for CrowdConfig {
    fn default() -> Self {
        Self {
            gold_count: 8,
            unresolved_count: 2,
            n_workers: 40,
            lambda: 3,
            mu: 2,
            trials: 1000,
            seed: 0,
            algorithms: vec![Algorithm::Pr4a, Algorithm::Tpms, Algorithm::Hartvigsen, Algorithm::Random, Algorithm::Hard],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdRow {
    pub algorithm: Algorithm,
    pub error_mean: Option<f64>,
    pub error_stderr: Option<f64>,
    pub fairness_mean: Option<f64>,
    pub cumulative_mean: Option<f64>,
    pub trials: usize,
    pub failure: Option<String>,
}

/// True if the plurality answer is unique and equals `key`.
pub fn majority_correct(votes: &[&str], key: &str) -> bool {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in votes {
        *counts.entry(v).or_default() += 1;
    }
    let Some(&top) = counts.values().max() else {
        return false;
    };
    let leaders: Vec<&str> = counts.iter().filter(|&(_, &c)| c == top).map(|(&a, _)| a).collect();
    leaders == [key]
}

struct TrialOutcome {
    /// Per algorithm: (error, fairness, cumulative), or the failure message.
    per_alg: Vec<std::result::Result<(f64, f64, f64), String>>,
}

fn run_trial(rm: &ResponseMatrix, cfg: &CrowdConfig, trial: usize) -> Result<TrialOutcome> {
    let mut rng = substream(cfg.seed, trial as u64);
    let mut gold: Vec<Vec<usize>> = Vec::new();
    let mut unresolved: Vec<(usize, usize)> = Vec::new(); // (question, region slot)
    for (slot, (_, qs)) in rm.regions().into_iter().enumerate() {
        let mut qs = qs;
        qs.shuffle(&mut rng);
        gold.push(qs[..cfg.gold_count].to_vec());
        for &q in &qs[cfg.gold_count..cfg.gold_count + cfg.unresolved_count] {
            unresolved.push((q, slot));
        }
    }
    let mut workers = sample(&mut rng, rm.workers.len(), cfg.n_workers).into_vec();
    workers.sort_unstable();

    let n = workers.len();
    let m = unresolved.len();
    let mut cells = Vec::with_capacity(n * m);
    for &w in &workers {
        for &(_, slot) in &unresolved {
            let right = gold[slot]
                .iter()
                .filter(|&&g| rm.answers[w][g].as_deref() == Some(rm.key[g].as_str()))
                .count();
            cells.push(Cell::Sim(right as f64 / cfg.gold_count as f64));
        }
    }
    let s = SimilarityMatrix::new(n, m, cells)?;
    let lc = LoadConstraints::uniform(n, m, cfg.lambda, cfg.mu);
    lc.check(&s)?;
    let random_seed: u64 = rng.random();

    let per_alg = cfg
        .algorithms
        .iter()
        .map(|&alg| {
            let a: Assignment = solve(alg, &s, &lc, &Transform::Identity, random_seed).map_err(|e| e.to_string())?;
            let wrong = unresolved
                .iter()
                .enumerate()
                .filter(|&(col, &(q, _))| {
                    let votes: Vec<&str> = a
                        .reviewers_of(col)
                        .iter()
                        .filter_map(|&i| rm.answers[workers[i]][q].as_deref())
                        .collect();
                    !majority_correct(&votes, &rm.key[q])
                })
                .count();
            let g = fairness(&a, &s, &Transform::Identity).map_err(|e| e.to_string())?;
            let c = cumulative_quality(&a, &s).map_err(|e| e.to_string())?;
            Ok((wrong as f64 / m as f64, g, c))
        })
        .collect();
    Ok(TrialOutcome { per_alg })
}

/// Averages error, fairness and cumulative similarity over random
/// gold/unresolved splits and worker subsamples.
pub fn crowd_eval(rm: &ResponseMatrix, cfg: &CrowdConfig) -> Result<Vec<CrowdRow>> {
    if cfg.trials == 0 || cfg.gold_count == 0 || cfg.unresolved_count == 0 {
        return Err(Error::InvalidInput("trials, gold and unresolved counts must be positive".into()));
    }
    for (name, qs) in rm.regions() {
        if qs.len() < cfg.gold_count + cfg.unresolved_count {
            return Err(Error::InvalidInput(format!(
                "region {name:?} has {} questions, needs {}",
                qs.len(),
                cfg.gold_count + cfg.unresolved_count
            )));
        }
    }
    if rm.workers.len() < cfg.n_workers {
        return Err(Error::InvalidInput(format!(
            "{} workers available, {} requested",
            rm.workers.len(),
            cfg.n_workers
        )));
    }
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(rm, cfg, t))
        .collect::<Result<Vec<_>>>()?;

    let rows = cfg
        .algorithms
        .iter()
        .enumerate()
        .map(|(ai, &alg)| {
            let mut ok = Vec::new();
            let mut failure = None;
            for o in &outcomes {
                match &o.per_alg[ai] {
                    Ok(v) => ok.push(*v),
                    Err(e) => {
                        failure.get_or_insert_with(|| e.clone());
                    }
                }
            }
            if let Some(e) = failure {
                return CrowdRow {
                    algorithm: alg,
                    error_mean: None,
                    error_stderr: None,
                    fairness_mean: None,
                    cumulative_mean: None,
                    trials: 0,
                    failure: Some(e),
                };
            }
            let errors: Vec<f64> = ok.iter().map(|v| v.0).collect();
            let (error_mean, error_stderr) = mean_stderr(&errors);
            let fair: Vec<f64> = ok.iter().map(|v| v.1).collect();
            let cum: Vec<f64> = ok.iter().map(|v| v.2).collect();
            CrowdRow {
                algorithm: alg,
                error_mean: Some(error_mean),
                error_stderr: Some(error_stderr),
                fairness_mean: Some(mean_stderr(&fair).0),
                cumulative_mean: Some(mean_stderr(&cum).0),
                trials: ok.len(),
                failure: None,
            }
        })
        .collect();
    Ok(rows)
}

/// Parameters of the synthetic worker pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub regions: usize,
    pub questions_per_region: usize,
    pub options: usize,
    /// (worker count, accuracy) groups.
    pub groups: Vec<(usize, f64)>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            regions: 6,
            questions_per_region: 10,
            options: 5,
            groups: vec![(25, 0.95), (55, 0.25)],
        }
    }
}

/// Every worker answers every question, correctly with the group's
/// accuracy, otherwise uniformly among the wrong options. Workers are
/// shuffled so groups are not contiguous.
pub fn synthetic_corpus(spec: &CorpusSpec, seed: u64) -> ResponseMatrix {
    let mut rng = substream(seed, u64::MAX);
    let n_q = spec.regions * spec.questions_per_region;
    let option = |k: usize| ((b'A' + k as u8) as char).to_string();
    let questions: Vec<String> = (0..n_q).map(|q| format!("q{q}")).collect();
    let region: Vec<String> = (0..n_q).map(|q| format!("region{}", q / spec.questions_per_region)).collect();
    let key_idx: Vec<usize> = (0..n_q).map(|_| rng.random_range(0..spec.options)).collect();

    let mut accuracies: Vec<f64> = spec
        .groups
        .iter()
        .flat_map(|&(count, acc)| std::iter::repeat_n(acc, count))
        .collect();
    accuracies.shuffle(&mut rng);
    let answers = accuracies
        .iter()
        .map(|&acc| {
            (0..n_q)
                .map(|q| {
                    let k = if rng.random::<f64>() < acc {
                        key_idx[q]
                    } else {
                        let wrong = rng.random_range(0..spec.options - 1);
                        if wrong >= key_idx[q] {
                            wrong + 1
                        } else {
                            wrong
                        }
                    };
                    Some(option(k))
                })
                .collect()
        })
        .collect();
    ResponseMatrix {
        workers: (0..accuracies.len()).map(|w| format!("w{w}")).collect(),
        questions,
        region,
        key: key_idx.into_iter().map(option).collect(),
        answers,
    }
}

/// Regions in the matrix.
pub fn region_names(rm: &ResponseMatrix) -> BTreeSet<&str> {
    rm.region.iter().map(String::as_str).collect()
}
