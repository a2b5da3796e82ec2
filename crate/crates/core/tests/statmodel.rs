use fairassign::statmodel::{
    estimate, estimator_variance, lemma1_bound, sample_objective, sample_subjective, substream, topk_select, Estimator,
    NoiseShape, ObjectiveWorld, SubjectiveWorld,
};
use fairassign::{Assignment, NoiseFn, NoiseModel, SimilarityMatrix};
use proptest::prelude::*;

fn setup(rows: &[Vec<f64>], lambda: usize) -> (SimilarityMatrix, Assignment) {
    let s = SimilarityMatrix::from_rows(rows).unwrap();
    let (n, m) = (s.n_reviewers(), s.n_papers());
    let pairs: Vec<_> = (0..m).flat_map(|j| (0..lambda).map(move |r| ((j + r) % n, j))).collect();
    (s, Assignment::from_pairs(n, m, pairs).unwrap())
}

proptest! {
    #[test]
    fn mle_variance_never_exceeds_mean(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..0.99, 4), 4),
        c in 0.1f64..3.0,
    ) {
        let (s, a) = setup(&rows, 3);
        let noise = NoiseModel::new(NoiseFn::Scaled { c });
        let mle = estimator_variance(&a, &s, &noise, Estimator::Mle);
        let mean = estimator_variance(&a, &s, &noise, Estimator::Mean);
        for (x, y) in mle.iter().zip(&mean) {
            prop_assert!(*x <= y * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bound_shrinks_with_separation(d1 in 0.01f64..2.0, d2 in 0.01f64..2.0) {
        let (s, a) = setup(&[vec![0.2, 0.5, 0.9], vec![0.4, 0.7, 0.1], vec![0.6, 0.3, 0.8]], 2);
        let noise = NoiseModel::default();
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let b_lo = lemma1_bound(&a, &s, &noise, Estimator::Mle, 1, lo).unwrap();
        let b_hi = lemma1_bound(&a, &s, &noise, Estimator::Mle, 1, hi).unwrap();
        prop_assert!(b_hi <= b_lo);
        prop_assert!(b_lo <= 2.0);
    }

    #[test]
    fn topk_picks_largest(values in prop::collection::vec(-5.0f64..5.0, 3..12), k in 1usize..3) {
        let chosen = topk_select(&values, k).unwrap();
        prop_assert_eq!(chosen.len(), k);
        let floor = chosen.iter().map(|&j| values[j]).fold(f64::INFINITY, f64::min);
        for (j, &v) in values.iter().enumerate() {
            if !chosen.contains(&j) {
                prop_assert!(v <= floor);
            }
        }
    }
}

#[test]
fn topk_ties_go_to_lower_index() {
    assert_eq!(topk_select(&[1.0, 2.0, 2.0, 2.0], 2).unwrap(), vec![1, 2]);
}

#[test]
fn estimators_are_unbiased_in_both_shapes() {
    let (s, a) = setup(&[vec![0.2, 0.5, 0.9], vec![0.4, 0.7, 0.1], vec![0.6, 0.3, 0.8]], 2);
    let noise = NoiseModel::default();
    let world = ObjectiveWorld::new(vec![1.0, 0.3, -0.5], noise, 1).unwrap();
    for shape in [NoiseShape::Gaussian, NoiseShape::Rademacher] {
        for est in [Estimator::Mle, Estimator::Mean] {
            let reps = 20_000;
            let var = estimator_variance(&a, &s, &noise, est);
            let mut rng = substream(17, 0);
            let mut sum = [0.0; 3];
            for _ in 0..reps {
                let y = sample_objective(&world, &a, &s, shape, &mut rng).unwrap();
                for (acc, v) in sum.iter_mut().zip(estimate(est, &y, &s, &noise)) {
                    *acc += v;
                }
            }
            for j in 0..3 {
                let mean = sum[j] / reps as f64;
                let se = (var[j] / reps as f64).sqrt();
                assert!((mean - world.theta_star[j]).abs() < 5.0 * se, "{shape:?} {est:?} paper {j}");
            }
        }
    }
}

#[test]
fn subjective_world_from_objective_has_same_means() {
    let (s, a) = setup(&[vec![0.5, 0.5], vec![0.5, 0.5]], 2);
    let obj = ObjectiveWorld::new(vec![0.8, 0.1], NoiseModel::default(), 1).unwrap();
    let subj = SubjectiveWorld::from_objective(&obj, 2);
    let mut rng = substream(5, 0);
    let reps = 5_000;
    let mut total = 0.0;
    for _ in 0..reps {
        let y = sample_subjective(&subj, &a, &s, NoiseShape::Gaussian, &mut rng).unwrap();
        total += estimate(Estimator::Mean, &y, &s, &subj.noise)[0];
    }
    assert!((total / reps as f64 - 0.8).abs() < 0.03);
}
