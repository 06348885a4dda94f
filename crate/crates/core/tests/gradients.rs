mod oracles;

use coordnet::nn::{adam_step, mean_aggregate, AdamConfig, AdamState, Module, Parameter, Tensor};
use coordnet::seed::rng_from_seed;
use proptest::prelude::*;

use oracles::{gradient_reports, random_matrix, random_pairs, unlabeled_graph, FD_STEP, FD_STEP_FINE, FD_TOL};

/// Frozen fixture whose stencils at the coarse step stay clear of ReLU kinks.
const FIXTURE_SEED: u64 = 12;

#[test]
fn every_kernel_matches_central_differences() {
    for (name, rep) in gradient_reports(FIXTURE_SEED, FD_STEP) {
        assert!(rep.checked > 0, "{name}: nothing checked");
        assert!(
            rep.max_rel_err < FD_TOL,
            "{name}: {:?}[{}] analytic {} numeric {} rel {}",
            rep.worst_param,
            rep.worst_index,
            rep.analytic,
            rep.numeric,
            rep.max_rel_err
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A stencil straddling a ReLU kink disagrees less as the step shrinks; a
    /// wrong backward does not, so a failure must persist at a tenth the step.
    #[test]
    fn kernels_pass_on_random_shapes(seed in any::<u64>()) {
        let fine = gradient_reports(seed, FD_STEP_FINE);
        let finer = gradient_reports(seed, FD_STEP_FINE / 10.0);
        for ((name, a), (_, b)) in fine.iter().zip(&finer) {
            prop_assert!(a.max_rel_err < FD_TOL || b.max_rel_err < FD_TOL, "{} rel {}", name, a.max_rel_err);
        }
    }
}

#[test]
fn mean_aggregate_matches_neighbor_loop() {
    let mut rng = rng_from_seed(3);
    let pairs = random_pairs(&mut rng, 20, 35);
    let g = unlabeled_graph(20, &pairs);
    let h = random_matrix(&mut rng, 20, 4, -2.0, 2.0);
    let m = mean_aggregate(g.und_adj(), &h).unwrap();
    let nb = oracles::neighbor_sets(20, &pairs);
    for v in 0..20 {
        for c in 0..4 {
            let expected = if nb[v].is_empty() {
                0.0
            } else {
                nb[v].iter().map(|&u| h.get(u as usize, c)).sum::<f64>() / nb[v].len() as f64
            };
            assert!((m.get(v, c) - expected).abs() < 1e-6);
        }
    }
}

#[test]
fn first_adam_step_from_zero() {
    let mut p = vec![Parameter::new("theta", Tensor::<f64>::zeros(&[1]))];
    p[0].grad = Tensor::from_vec(&[1], vec![1.0]).unwrap();
    let refs: Vec<&Parameter<f64>> = p.iter().collect();
    let mut state = AdamState::new(&refs);
    adam_step(p.params_mut(), &mut state, &AdamConfig { lr: 0.001, ..AdamConfig::default() }).unwrap();
    // m̂ = 1, v̂ = 1, so the step is lr / (1 + ε)
    let expected = -0.001 / (1.0 + 1e-8);
    assert!((p[0].value.data()[0] - expected).abs() < 1e-15);
    assert!((p[0].value.data()[0] + 0.000_999_999).abs() < 1e-9);
}
