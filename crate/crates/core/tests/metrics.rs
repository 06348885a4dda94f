mod oracles;

use coordnet::eval::{classification_report, ranking_metrics};
use coordnet::seed::rng_from_seed;
use proptest::prelude::*;
use rand::Rng as _;

use oracles::{brute_ap, brute_auc, brute_weighted_prf, random_ranking_case};

#[test]
fn ranking_matches_pair_counting_on_200_cases() {
    let mut rng = rng_from_seed(1);
    for case in 0..200 {
        let (scores, labels) = random_ranking_case(&mut rng);
        let m = ranking_metrics(&scores, &labels).unwrap();
        assert!((m.auc - brute_auc(&scores, &labels)).abs() <= 1e-9, "case {case} auc");
        assert!((m.ap - brute_ap(&scores, &labels)).abs() <= 1e-9, "case {case} ap");
    }
}

#[test]
fn single_class_is_rejected() {
    assert!(ranking_metrics(&[0.1, 0.2], &[true, true]).is_err());
    assert!(ranking_metrics(&[0.1, 0.2], &[false, false]).is_err());
}

fn ranking_case() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..80).prop_flat_map(|n| {
        (proptest::collection::vec(-50i32..50, n), proptest::collection::vec(any::<bool>(), n)).prop_map(|(s, mut l)| {
            l[0] = true;
            l[1] = false;
            (s.into_iter().map(|v| v as f64 / 10.0).collect(), l)
        })
    })
}

proptest! {
    #[test]
    fn auc_and_ap_match_brute_force((scores, labels) in ranking_case()) {
        let m = ranking_metrics(&scores, &labels).unwrap();
        prop_assert!((m.auc - brute_auc(&scores, &labels)).abs() <= 1e-9);
        prop_assert!((m.ap - brute_ap(&scores, &labels)).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&m.auc) && (0.0..=1.0).contains(&m.ap));
    }

    #[test]
    fn auc_is_invariant_under_monotone_maps((scores, labels) in ranking_case(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let base = ranking_metrics(&scores, &labels).unwrap().auc;
        let affine: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let cubic: Vec<f64> = scores.iter().map(|s| s.powi(3) + s).collect();
        let squashed: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-s).exp())).collect();
        for mapped in [affine, cubic, squashed] {
            prop_assert_eq!(ranking_metrics(&mapped, &labels).unwrap().auc, base);
        }
    }

    #[test]
    fn weighted_scores_match_confusion_matrix(pairs in proptest::collection::vec((0usize..2, 0usize..2), 1..60)) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let r = classification_report(&pred, &truth, None).unwrap();
        let (p, rc, f) = brute_weighted_prf(&pred, &truth);
        prop_assert!((r.precision - p).abs() < 1e-12);
        prop_assert!((r.recall - rc).abs() < 1e-12);
        prop_assert!((r.f1 - f).abs() < 1e-12);
    }
}

#[test]
fn random_scores_have_chance_auc() {
    let mut rng = rng_from_seed(5);
    let scores: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
    let labels: Vec<bool> = (0..1000).map(|i| i % 2 == 0).collect();
    let auc = ranking_metrics(&scores, &labels).unwrap().auc;
    assert!((auc - 0.5).abs() < 0.05, "{auc}");
}
