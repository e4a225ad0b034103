use proptest::prelude::*;
use zeno_tomo::decision::{multinomial_pmf, GrayModel, MlClassifier};
use zeno_tomo::interferometer::ChannelProbabilities;
use zeno_tomo::simulator::{
    level_probabilities, particles_for_absorbed, pixel_rng, reconstruct, simulate_pixel,
    synthetic_cell, GrayImage, Setup,
};

/// Probability that a pixel of level `truth` is decided otherwise, by
/// enumerating every outcome of the triangle.
fn conditional_error(clf: &MlClassifier, law: &ChannelProbabilities, n: u64, truth: usize) -> f64 {
    let mut total = 0.0;
    for n_z in 0..=n {
        for n_o in 0..=(n - n_z) {
            if clf.classify(n_z, n_o).unwrap() != truth {
                total += multinomial_pmf(n, n_z, n_o, law);
            }
        }
    }
    total
}

#[test]
fn error_rate_matches_prediction_on_uniform_background() {
    let model = GrayModel::two_level(0.9, 0.95, 0.6).unwrap();
    let sample = GrayImage::new(100, 100, vec![0; 10_000]).unwrap();
    for (setup, n) in [
        (Setup::Standard, 40),
        (Setup::Zeno { loops: 10 }, 12),
        (Setup::Zeno { loops: 165 }, 30),
    ] {
        let probs = level_probabilities(&model, setup).unwrap();
        let clf = MlClassifier::from_model(&model, &probs, n).unwrap();
        let predicted = conditional_error(&clf, &probs[0], n, 0);
        let report = reconstruct(&sample, &model, setup, n, 5).unwrap();
        let observed = report.error_count as f64 / 1e4;
        let se = (predicted * (1.0 - predicted) / 1e4).sqrt();
        assert!(
            (observed - predicted).abs() <= 3.0 * se,
            "{setup:?}: observed {observed}, predicted {predicted} +- {se}"
        );
    }
}

#[test]
fn more_loops_fewer_errors_at_equal_irradiation() {
    let model = GrayModel::from_weights(&[(0.8, 0.93), (0.96, 0.07), (0.99, 0.02)]).unwrap();
    let sample = synthetic_cell(60, 60, &model.priors()).unwrap();
    for seed in 0..5 {
        let errors: Vec<usize> = [
            Setup::Standard,
            Setup::Zeno { loops: 10 },
            Setup::Zeno { loops: 165 },
        ]
        .into_iter()
        .map(|setup| {
            let n = particles_for_absorbed(&model, setup, 4.0).unwrap();
            reconstruct(&sample, &model, setup, n, seed)
                .unwrap()
                .error_count
        })
        .collect();
        assert!(
            errors[0] >= errors[1] && errors[1] >= errors[2],
            "seed {seed}: {errors:?}"
        );
    }
}

#[test]
fn empirical_absorption_tracks_budget() {
    let model = GrayModel::from_weights(&[(0.8, 0.93), (0.96, 0.07), (0.99, 0.02)]).unwrap();
    let sample = synthetic_cell(100, 100, &model.priors()).unwrap();
    let setup = Setup::Zeno { loops: 165 };
    let n = particles_for_absorbed(&model, setup, 13.0).unwrap();
    let report = reconstruct(&sample, &model, setup, n, 9).unwrap();
    assert!(report.expected_absorbed_per_pixel >= 13.0 - 1e-9);
    assert!((report.mean_absorbed_per_pixel - report.expected_absorbed_per_pixel).abs() < 0.2);
}

proptest! {
    #[test]
    fn counts_are_conserved(
        n in 0u64..5000,
        p_a in 0.0f64..=1.0,
        split in 0.0f64..=1.0,
        seed in any::<u64>(),
        index in any::<u64>(),
    ) {
        let p_z = (1.0 - p_a) * split;
        let probs = ChannelProbabilities { p_z, p_o: 1.0 - p_a - p_z, p_a };
        let mut rng = pixel_rng(seed, index);
        let out = simulate_pixel(&probs, n, &mut rng);
        prop_assert_eq!(out.n_z + out.n_o + out.n_a, n);
        let again = simulate_pixel(&probs, n, &mut pixel_rng(seed, index));
        prop_assert_eq!(out, again);
    }

    #[test]
    fn reports_are_reproducible(seed in any::<u64>(), n in 1u64..30) {
        let model = GrayModel::two_level(0.8, 0.96, 0.7).unwrap();
        let sample = synthetic_cell(12, 9, &[0.7, 0.3]).unwrap();
        let a = reconstruct(&sample, &model, Setup::Zeno { loops: 40 }, n, seed).unwrap();
        let b = reconstruct(&sample, &model, Setup::Zeno { loops: 40 }, n, seed).unwrap();
        prop_assert_eq!(a.error_count, a.misinterpreted.iter().filter(|&&m| m).count());
        prop_assert_eq!(a, b);
    }
}
