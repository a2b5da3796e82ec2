//! File formats: similarity CSV, loads JSON, assignment CSV and world JSON.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiments::sweep::World;
use crate::instance::{Assignment, Cell, LoadConstraints, SimilarityMatrix};
use crate::statmodel::{ObjectiveWorld, SubjectiveWorld};
use crate::transform::{NoiseFn, NoiseModel};

/// Parses `reviewer_id,<paper ids>` followed by one row per reviewer. Cells
/// are decimals in `[0, 1]` or `CONFLICT`. Errors name the 1-based line and
/// column.
pub fn read_similarity_csv(text: &str) -> Result<SimilarityMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Parse("similarity CSV is empty".into()))?
        .map_err(|e| Error::Parse(format!("similarity CSV: {e}")))?;
    if header.len() < 2 {
        return Err(Error::Parse("similarity CSV header needs reviewer_id and paper ids".into()));
    }
    let paper_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let m = paper_ids.len();
    let mut reviewer_ids = Vec::new();
    let mut cells = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::Parse(format!("similarity CSV: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != m + 1 {
            return Err(Error::Parse(format!(
                "similarity CSV line {line}: expected {} fields, got {}",
                m + 1,
                rec.len()
            )));
        }
        reviewer_ids.push(rec[0].to_string());
        for (col, field) in rec.iter().enumerate().skip(1) {
            let cell = if field == "CONFLICT" {
                Cell::Conflict
            } else {
                match field.parse::<f64>() {
                    Ok(v) if (0.0..=1.0).contains(&v) => Cell::Sim(v),
                    _ => {
                        return Err(Error::Parse(format!(
                            "similarity CSV line {line}, column {} (paper {}): {field:?} is not a similarity in [0, 1] or CONFLICT",
                            col + 1,
                            paper_ids[col - 1]
                        )))
                    }
                }
            };
            cells.push(cell);
        }
    }
    let n = reviewer_ids.len();
    SimilarityMatrix::new(n, m, cells)
        .and_then(|s| s.with_ids(reviewer_ids, paper_ids))
        .map_err(|e| Error::Parse(format!("similarity CSV: {e}")))
}

pub fn write_similarity_csv(s: &SimilarityMatrix) -> String {
    let mut out = String::from("reviewer_id");
    for id in s.paper_ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for i in 0..s.n_reviewers() {
        out.push_str(&s.reviewer_ids()[i]);
        for j in 0..s.n_papers() {
            out.push(',');
            out.push_str(&s.cell(i, j).to_string());
        }
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadsFile {
    lambda: OneOrMany,
    mu: OneOrMany,
}

/// Parses `{"lambda": int | [int], "mu": int | [int]}` for an `n x m`
/// instance.
pub fn read_loads_json(text: &str, n_reviewers: usize, n_papers: usize) -> Result<LoadConstraints> {
    let file: LoadsFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("loads JSON: {e}")))?;
    let expand = |v: OneOrMany, len: usize, name: &str| match v {
        OneOrMany::One(x) => Ok(vec![x; len]),
        OneOrMany::Many(xs) if xs.len() == len => Ok(xs),
        OneOrMany::Many(xs) => Err(Error::Parse(format!(
            "loads JSON: {name} has {} entries, expected {len}",
            xs.len()
        ))),
    };
    Ok(LoadConstraints {
        paper_demand: expand(file.lambda, n_papers, "lambda")?,
        reviewer_capacity: expand(file.mu, n_reviewers, "mu")?,
    })
}

/// Rows `paper_id,reviewer_id_1,...`, one per paper, no header.
pub fn write_assignment_csv(a: &Assignment, s: &SimilarityMatrix) -> String {
    let mut out = String::new();
    for j in 0..a.n_papers() {
        out.push_str(&s.paper_ids()[j]);
        for &i in a.reviewers_of(j) {
            out.push(',');
            out.push_str(&s.reviewer_ids()[i]);
        }
        out.push('\n');
    }
    out
}

pub fn read_assignment_csv(text: &str, s: &SimilarityMatrix) -> Result<Assignment> {
    let mut a = Assignment::empty(s.n_reviewers(), s.n_papers());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let pid = fields.next().unwrap_or_default();
        let j = s
            .paper_ids()
            .iter()
            .position(|p| p == pid)
            .ok_or_else(|| Error::Parse(format!("assignment CSV line {}: unknown paper {pid:?}", lineno + 1)))?;
        for rid in fields {
            let i = s.reviewer_ids().iter().position(|r| r == rid).ok_or_else(|| {
                Error::Parse(format!("assignment CSV line {}: unknown reviewer {rid:?}", lineno + 1))
            })?;
            a.insert(i, j);
        }
    }
    Ok(a)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldFile {
    theta_star: Option<Vec<f64>>,
    theta_tilde: Option<Vec<Vec<f64>>>,
    h: NoiseFn,
    #[serde(default)]
    variance_floor: Option<f64>,
    k: usize,
}

/// Parses `{theta_star | theta_tilde, h, k}`; exactly one of the score
/// fields must be present.
pub fn read_world_json(text: &str) -> Result<World> {
    let file: WorldFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("world JSON: {e}")))?;
    let mut noise = NoiseModel::new(file.h);
    if let Some(floor) = file.variance_floor {
        if floor.is_nan() || floor <= 0.0 {
            return Err(Error::Parse("world JSON: variance_floor must be positive".into()));
        }
        noise.variance_floor = floor;
    }
    match (file.theta_star, file.theta_tilde) {
        (Some(t), None) => Ok(World::Objective(ObjectiveWorld::new(t, noise, file.k)?)),
        (None, Some(t)) => Ok(World::Subjective(SubjectiveWorld::new(t, noise, file.k)?)),
        _ => Err(Error::Parse(
            "world JSON: give exactly one of theta_star and theta_tilde".into(),
        )),
    }
}
