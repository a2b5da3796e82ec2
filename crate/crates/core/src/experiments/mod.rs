//! Synthetic instances, the top-k recovery sweep, fairness reports and the
//! crowdsourcing evaluation harness.

pub mod cases;
pub mod crowd;
pub mod report;
pub mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assign::{peer_review_4all, Pr4aOptions};
use crate::baselines::{hard_bruteforce, hartvigsen_assign, random_assign_seeded, tpms_assign, OracleBudget};
use crate::error::{Error, Result};
use crate::instance::{Assignment, LoadConstraints, SimilarityMatrix};
use crate::transform::Transform;

pub use cases::{generate_case, CaseId, CaseSpec};
pub use crowd::{crowd_eval, majority_correct, synthetic_corpus, CrowdConfig, CrowdRow, ResponseMatrix};
pub use report::{fairness_report, ReportRow};
pub use sweep::{run_recovery_sweep, trend_is_non_increasing, SweepConfig, SweepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Pr4a,
    Tpms,
    Hartvigsen,
    Random,
    Hard,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Pr4a,
        Algorithm::Tpms,
        Algorithm::Hartvigsen,
        Algorithm::Random,
        Algorithm::Hard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pr4a => "pr4a",
            Algorithm::Tpms => "tpms",
            Algorithm::Hartvigsen => "hartvigsen",
            Algorithm::Random => "random",
            Algorithm::Hard => "hard",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm {s:?}")))
    }
}

/// Runs one assignment algorithm with default options. `seed` only matters
/// for [`Algorithm::Random`].
pub fn solve(
    alg: Algorithm,
    s: &SimilarityMatrix,
    lc: &LoadConstraints,
    f: &Transform,
    seed: u64,
) -> Result<Assignment> {
    match alg {
        Algorithm::Pr4a => peer_review_4all(s, lc, f, &Pr4aOptions::default()).map(|(a, _)| a),
        Algorithm::Tpms => tpms_assign(s, lc),
        Algorithm::Hartvigsen => hartvigsen_assign(s, lc),
        Algorithm::Random => random_assign_seeded(s, lc, seed),
        Algorithm::Hard => hard_bruteforce(s, lc, f, &OracleBudget::default()).map(|r| r.assignment),
    }
}
