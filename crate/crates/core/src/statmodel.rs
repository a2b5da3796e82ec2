//! Reviewer score models, quality estimators and top-k selection.
//!
//! Scores are drawn in a fixed order (papers ascending, then the paper's
//! reviewers ascending), so the objective model and the subjective model with
//! constant columns consume the generator identically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, SimilarityMatrix};
use crate::transform::NoiseModel;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Shape of the zero-mean noise added to a reviewer's score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseShape {
    #[default]
    Gaussian,
    /// `+sigma` or `-sigma` with equal probability (bounded, sub-Gaussian).
    Rademacher,
}

impl NoiseShape {
    fn draw(self, rng: &mut impl Rng) -> f64 {
        match self {
            NoiseShape::Gaussian => rng.sample(StandardNormal),
            NoiseShape::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWorld {
    pub theta_star: Vec<f64>,
    pub noise: NoiseModel,
    pub k: usize,
}

impl ObjectiveWorld {
    pub fn new(theta_star: Vec<f64>, noise: NoiseModel, k: usize) -> Result<Self> {
        if k == 0 || k >= theta_star.len() {
            return Err(Error::InvalidInput(format!(
                "k = {k} must lie in 1..{}",
                theta_star.len()
            )));
        }
        Ok(Self { theta_star, noise, k })
    }

    /// Gap between the k-th and (k+1)-th largest true qualities.
    pub fn delta_k(&self) -> f64 {
        let mut v = self.theta_star.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v[self.k - 1] - v[self.k]
    }

    /// Indices of the true top-k papers.
    pub fn true_top_k(&self) -> Vec<usize> {
        topk_select(&self.theta_star, self.k).expect("k validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveWorld {
    /// Rows are reviewers, columns papers.
    pub theta_tilde: Vec<Vec<f64>>,
    pub noise: NoiseModel,
    pub k: usize,
}

impl SubjectiveWorld {
    pub fn new(theta_tilde: Vec<Vec<f64>>, noise: NoiseModel, k: usize) -> Result<Self> {
        let m = theta_tilde.first().map_or(0, Vec::len);
        if theta_tilde.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged subjective score matrix".into()));
        }
        if theta_tilde.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("subjective scores must be finite".into()));
        }
        if k == 0 || k >= m {
            return Err(Error::InvalidInput(format!("k = {k} must lie in 1..{m}")));
        }
        Ok(Self { theta_tilde, noise, k })
    }

    /// World whose reviewers all agree on `theta_star`.
    pub fn from_objective(world: &ObjectiveWorld, n_reviewers: usize) -> Self {
        Self {
            theta_tilde: vec![world.theta_star.clone(); n_reviewers],
            noise: world.noise,
            k: world.k,
        }
    }
}

/// Observed scores, stored per paper as (reviewer, score) pairs in reviewer
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSample {
    pub n_reviewers: usize,
    pub scores: Vec<Vec<(usize, f64)>>,
}

impl ScoreSample {
    pub fn n_papers(&self) -> usize {
        self.scores.len()
    }

    pub fn get(&self, reviewer: usize, paper: usize) -> Option<f64> {
        self.scores[paper].iter().find(|&&(i, _)| i == reviewer).map(|&(_, y)| y)
    }
}

fn check_dims(a: &Assignment, s: &SimilarityMatrix) -> Result<()> {
    if a.n_reviewers() != s.n_reviewers() || a.n_papers() != s.n_papers() {
        return Err(Error::Dimension(format!(
            "assignment {}x{} vs similarities {}x{}",
            a.n_reviewers(),
            a.n_papers(),
            s.n_reviewers(),
            s.n_papers()
        )));
    }
    if let Some((i, j)) = a.pairs().find(|&(i, j)| s.is_conflict(i, j)) {
        return Err(Error::InvalidInput(format!("reviewer {i} assigned to conflicting paper {j}")));
    }
    Ok(())
}

fn draw_scores(
    a: &Assignment,
    s: &SimilarityMatrix,
    noise: &NoiseModel,
    shape: NoiseShape,
    mean: impl Fn(usize, usize) -> f64,
    rng: &mut impl Rng,
) -> ScoreSample {
    let scores = (0..a.n_papers())
        .map(|j| {
            a.reviewers_of(j)
                .iter()
                .map(|&i| {
                    let sd = noise.variance(s.get(i, j).unwrap_or(0.0)).sqrt();
                    (i, mean(i, j) + sd * shape.draw(rng))
                })
                .collect()
        })
        .collect();
    ScoreSample {
        n_reviewers: a.n_reviewers(),
        scores,
    }
}

/// Scores `y_ij = theta*_j + noise` on every assigned pair.
pub fn sample_objective(
    world: &ObjectiveWorld,
    a: &Assignment,
    s: &SimilarityMatrix,
    shape: NoiseShape,
    rng: &mut impl Rng,
) -> Result<ScoreSample> {
    check_dims(a, s)?;
    if world.theta_star.len() != a.n_papers() {
        return Err(Error::Dimension("world and assignment disagree on papers".into()));
    }
    Ok(draw_scores(a, s, &world.noise, shape, |_, j| world.theta_star[j], rng))
}

/// Scores `y_ij = theta~_ij + noise` on every assigned pair.
pub fn sample_subjective(
    world: &SubjectiveWorld,
    a: &Assignment,
    s: &SimilarityMatrix,
    shape: NoiseShape,
    rng: &mut impl Rng,
) -> Result<ScoreSample> {
    check_dims(a, s)?;
    if world.theta_tilde.len() != a.n_reviewers() || world.theta_tilde.first().map_or(0, Vec::len) != a.n_papers() {
        return Err(Error::Dimension("world and assignment disagree on shape".into()));
    }
    Ok(draw_scores(a, s, &world.noise, shape, |i, j| world.theta_tilde[i][j], rng))
}

/// Mean full-competence score of each paper's assigned reviewers.
pub fn induced_scores(a: &Assignment, world: &SubjectiveWorld) -> Vec<f64> {
    (0..a.n_papers())
        .map(|j| {
            let r = a.reviewers_of(j);
            r.iter().map(|&i| world.theta_tilde[i][j]).sum::<f64>() / r.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Inverse-variance weighted mean.
    #[default]
    Mle,
    /// Plain mean.
    Mean,
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Estimator::Mle),
            "mean" => Ok(Estimator::Mean),
            other => Err(Error::Parse(format!("unknown estimator {other:?}"))),
        }
    }
}

pub fn mle_estimate(y: &ScoreSample, s: &SimilarityMatrix, noise: &NoiseModel) -> Vec<f64> {
    y.scores
        .iter()
        .enumerate()
        .map(|(j, obs)| {
            let (mut num, mut den) = (0.0, 0.0);
            for &(i, v) in obs {
                let w = 1.0 / noise.variance(s.get(i, j).unwrap_or(0.0));
                num += w * v;
                den += w;
            }
            num / den
        })
        .collect()
}

pub fn mean_estimate(y: &ScoreSample) -> Vec<f64> {
    y.scores
        .iter()
        .map(|obs| obs.iter().map(|&(_, v)| v).sum::<f64>() / obs.len() as f64)
        .collect()
}

pub fn estimate(est: Estimator, y: &ScoreSample, s: &SimilarityMatrix, noise: &NoiseModel) -> Vec<f64> {
    match est {
        Estimator::Mle => mle_estimate(y, s, noise),
        Estimator::Mean => mean_estimate(y),
    }
}

/// Indices of the `k` largest values, ties to the lower index, returned in
/// ascending index order.
pub fn topk_select(values: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k >= values.len() {
        return Err(Error::InvalidInput(format!("k = {k} must lie in 1..{}", values.len())));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

/// Largest per-paper variance of the estimator under assignment `a`.
pub fn estimator_variance(a: &Assignment, s: &SimilarityMatrix, noise: &NoiseModel, est: Estimator) -> Vec<f64> {
    (0..a.n_papers())
        .map(|j| {
            let vars = a
                .reviewers_of(j)
                .iter()
                .map(|&i| noise.variance(s.get(i, j).unwrap_or(0.0)));
            match est {
                Estimator::Mle => 1.0 / vars.map(|v| 1.0 / v).sum::<f64>(),
                Estimator::Mean => {
                    let l = a.reviewers_of(j).len() as f64;
                    vars.sum::<f64>() / (l * l)
                }
            }
        })
        .collect()
}

/// Upper bound `k (m - k) exp(-(delta / (2 sigma~))^2)` on the probability of
/// not recovering the top-k set, clamped to `[0, k (m - k)]`.
pub fn lemma1_bound(
    a: &Assignment,
    s: &SimilarityMatrix,
    noise: &NoiseModel,
    est: Estimator,
    k: usize,
    delta: f64,
) -> Result<f64> {
    let m = a.n_papers();
    if k == 0 || k >= m {
        return Err(Error::InvalidInput(format!("k = {k} must lie in 1..{m}")));
    }
    if delta < 0.0 {
        return Err(Error::InvalidInput("delta must be non-negative".into()));
    }
    let sigma_sq = estimator_variance(a, s, noise, est)
        .into_iter()
        .fold(0.0, f64::max);
    let pairs = (k * (m - k)) as f64;
    if delta == 0.0 {
        return Ok(pairs);
    }
    let bound = pairs * (-(delta * delta) / (4.0 * sigma_sq)).exp();
    Ok(bound.clamp(0.0, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::NoiseFn;

    fn two_by_two() -> (SimilarityMatrix, Assignment) {
        let s = SimilarityMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let a = Assignment::from_pairs(2, 2, vec![(0, 0), (1, 0), (0, 1), (1, 1)]).unwrap();
        (s, a)
    }

    #[test]
    fn mle_weights_by_precision() {
        // variances 1 and 0.5 give weights 1 and 2
        let (s, _) = two_by_two();
        let y = ScoreSample {
            n_reviewers: 2,
            scores: vec![vec![(0, 0.0), (1, 3.0)], vec![(0, 1.0), (1, 1.0)]],
        };
        let est = mle_estimate(&y, &s, &NoiseModel::default());
        assert!((est[0] - 2.0).abs() < 1e-12);
        assert!((est[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mle_with_floor_variance_dominates() {
        let s = SimilarityMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let y = ScoreSample {
            n_reviewers: 2,
            scores: vec![vec![(0, 5.0), (1, 0.0)], vec![]],
        };
        let est = mle_estimate(&y, &s, &NoiseModel::default());
        assert!((est[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn mean_and_mle_agree_for_equal_variances() {
        let s = SimilarityMatrix::constant(3, 2, 0.4).unwrap();
        let y = ScoreSample {
            n_reviewers: 3,
            scores: vec![vec![(0, 1.0), (1, 2.0), (2, 3.0)], vec![(2, 0.7)]],
        };
        let a = mean_estimate(&y);
        let b = mle_estimate(&y, &s, &NoiseModel::default());
        assert_eq!(a, vec![2.0, 0.7]);
        for (x, z) in a.iter().zip(&b) {
            assert!((x - z).abs() < 1e-12);
        }
    }

    #[test]
    fn topk_rules() {
        assert_eq!(topk_select(&[3.0, 1.0, 2.0], 2).unwrap(), vec![0, 2]);
        assert_eq!(topk_select(&[1.0, 1.0, 1.0], 2).unwrap(), vec![0, 1]);
        assert_eq!(topk_select(&[0.5, 0.1, 0.9, 0.7], 3).unwrap(), vec![0, 2, 3]);
        assert!(topk_select(&[1.0, 2.0], 2).is_err());
        assert!(topk_select(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn lemma1_arithmetic() {
        // k = 1, m = 2, sigma~ = 1, delta = 2 gives exp(-1)
        let s = SimilarityMatrix::constant(2, 2, 0.0).unwrap();
        let a = Assignment::from_pairs(2, 2, vec![(0, 0), (1, 1)]).unwrap();
        let noise = NoiseModel::default();
        let b = lemma1_bound(&a, &s, &noise, Estimator::Mle, 1, 2.0).unwrap();
        assert!((b - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(lemma1_bound(&a, &s, &noise, Estimator::Mean, 1, 0.0).unwrap(), 1.0);
        assert!(lemma1_bound(&a, &s, &noise, Estimator::Mean, 1, 1e3).unwrap() < 1e-100);
    }

    #[test]
    fn induced_scores_average_assigned_reviewers() {
        let world = SubjectiveWorld::new(vec![vec![1.0, 5.0], vec![3.0, 7.0]], NoiseModel::default(), 1).unwrap();
        let a = Assignment::from_pairs(2, 2, vec![(0, 0), (1, 0), (1, 1)]).unwrap();
        assert_eq!(induced_scores(&a, &world), vec![2.0, 7.0]);
    }

    #[test]
    fn degenerate_noise_returns_mean() {
        let s = SimilarityMatrix::constant(2, 2, 1.0).unwrap();
        let a = Assignment::from_pairs(2, 2, vec![(0, 0), (1, 1)]).unwrap();
        let world = ObjectiveWorld::new(vec![0.3, 0.8], NoiseModel::default(), 1).unwrap();
        let y = sample_objective(&world, &a, &s, NoiseShape::Gaussian, &mut substream(1, 0)).unwrap();
        assert!((y.get(0, 0).unwrap() - 0.3).abs() < 1e-5);
        assert!((y.get(1, 1).unwrap() - 0.8).abs() < 1e-5);
        assert_eq!(y.get(1, 0), None);
    }

    #[test]
    fn objective_equals_subjective_with_constant_columns() {
        let (s, a) = two_by_two();
        let world = ObjectiveWorld::new(vec![0.2, 0.9], NoiseModel::new(NoiseFn::Scaled { c: 2.0 }), 1).unwrap();
        let sub = SubjectiveWorld::from_objective(&world, 2);
        for shape in [NoiseShape::Gaussian, NoiseShape::Rademacher] {
            let y1 = sample_objective(&world, &a, &s, shape, &mut substream(9, 3)).unwrap();
            let y2 = sample_subjective(&sub, &a, &s, shape, &mut substream(9, 3)).unwrap();
            assert_eq!(y1, y2);
        }
    }

    #[test]
    fn rademacher_noise_has_exact_magnitude() {
        let (s, a) = two_by_two();
        let world = ObjectiveWorld::new(vec![0.0, 0.0], NoiseModel::default(), 1).unwrap();
        let y = sample_objective(&world, &a, &s, NoiseShape::Rademacher, &mut substream(2, 0)).unwrap();
        assert_eq!(y.get(0, 0).unwrap().abs(), 1.0);
        assert!((y.get(1, 0).unwrap().abs() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn delta_k_is_gap_at_k() {
        let w = ObjectiveWorld::new(vec![0.1, 0.9, 0.5, 0.4], NoiseModel::default(), 2).unwrap();
        assert!((w.delta_k() - 0.1).abs() < 1e-12);
        assert_eq!(w.true_top_k(), vec![1, 2]);
    }
}
