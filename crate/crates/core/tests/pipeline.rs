//! End-to-end runs through training, density estimation, z solving and
//! prediction on the synthetic two-domain benchmark.

use msa_core::combine::{dmsa_predict, SourcePredictorSet};
use msa_core::kde::{kde_fit, KdeDensities};
use msa_core::loss::{LossModel, LossSpec};
use msa_core::maxent::{train_maxent, FeatureMap, TrainOptions};
use msa_core::synthbench::{
    evaluate_target_mixture, labeled_domain_sample, run_synthetic, train_base_predictor, ExperimentConfig, GaussianMixtureSpec,
    KdeGrid, Metric,
};
use msa_core::zsolve::{grid_search_z, z_objective, ZObjectiveContext, ZProblem, DEFAULT_GRID_CAP};
use msa_core::{Dataset, MixtureWeights};

struct Fixture {
    pool: Dataset,
    tests: Vec<Dataset>,
    predictors: SourcePredictorSet,
}

fn fixture(m: usize) -> Fixture {
    let specs = [GaussianMixtureSpec::domain_one(), GaussianMixtureSpec::domain_two()];
    let train: Vec<Dataset> = (0..2).map(|k| labeled_domain_sample(&specs[k], m, k, 2, 10 + k as u64).unwrap()).collect();
    let tests = (0..2).map(|k| labeled_domain_sample(&specs[k], 2000, k, 2, 20 + k as u64).unwrap()).collect();
    let predictors = SourcePredictorSet::from_specs(
        train.iter().map(|d| train_base_predictor(d).unwrap().spec).collect(),
        LossModel::Regression,
        None,
    )
    .unwrap();
    let pool = Dataset::new(train.iter().flat_map(|d| d.samples().iter().cloned()).collect(), 2).unwrap();
    Fixture { pool, tests, predictors }
}

#[test]
fn discriminative_pipeline_is_accurate_and_balanced() {
    let f = fixture(500);
    let model = train_maxent(&f.pool, 1e-3, FeatureMap::per_class_linear(1), TrainOptions::default(), 0).unwrap();
    let threshold = model.crossing_point_1d().unwrap();
    assert!((-0.5..=1.5).contains(&threshold), "{threshold}");

    let qhat_ctx = ZObjectiveContext::discriminative(&f.pool, &model, &f.predictors, LossSpec::squared(), 0.0).unwrap();
    for q in qhat_ctx.qhat().unwrap() {
        assert!((q - 0.5).abs() <= 0.05, "{q}");
    }
    let sol = grid_search_z(&qhat_ctx, 100, DEFAULT_GRID_CAP).unwrap();
    let centre = z_objective(&MixtureWeights::uniform(2), &qhat_ctx).unwrap();
    assert!(sol.objective <= centre.objective);

    // Solving in z and deploying z′ reproduces the objective's predictions.
    for i in (0..f.pool.len()).step_by(37) {
        let from_ctx = qhat_ctx.combined_output(&sol.z, i).unwrap().as_scalar().unwrap();
        let direct = dmsa_predict(&sol.z_prime, &model, &f.predictors, &f.pool.samples()[i].x, 0.0)
            .unwrap()
            .output
            .as_scalar()
            .unwrap();
        assert!((from_ctx - direct).abs() <= 1e-10);
    }

    let predict = |x: &[f64]| {
        dmsa_predict(&sol.z_prime, &model, &f.predictors, x, 0.0).map(|c| c.output.as_scalar().unwrap())
    };
    let uniform = evaluate_target_mixture(&MixtureWeights::uniform(2), &f.tests, predict, Metric::Accuracy).unwrap();
    assert!(uniform >= 0.98, "{uniform}");
    for k in 0..2 {
        let acc = evaluate_target_mixture(&MixtureWeights::vertex(2, k), &f.tests, predict, Metric::Accuracy).unwrap();
        assert!(acc >= 0.98, "domain {k}: {acc}");
    }
}

#[test]
fn generative_pipeline_solves_and_reports_losses() {
    let f = fixture(300);
    let models = (0..2)
        .map(|k| {
            let xs: Vec<Vec<f64>> = f.pool.domain_subset(k).unwrap().iter().map(|s| s.x.clone()).collect();
            kde_fit(&xs, if k == 0 { 0.5 } else { 0.04 }).unwrap()
        })
        .collect();
    let kde = KdeDensities::new(models).unwrap();
    let ctx = ZObjectiveContext::generative(&f.pool, &kde, &f.predictors, LossSpec::squared(), 1e-8).unwrap();
    assert!(ctx.qhat().is_none());
    let sol = grid_search_z(&ctx, 50, DEFAULT_GRID_CAP).unwrap();
    assert_eq!(sol.z, sol.z_prime);
    assert_eq!(sol.per_domain_losses, ctx.domain_losses(&sol.z).unwrap());
    assert!(sol.objective >= 0.0);
}

#[test]
fn reports_are_paired_and_reproducible() {
    let config = ExperimentConfig {
        sizes: vec![50, 80],
        runs: 2,
        test_size: 200,
        kde_grid: KdeGrid { lo: 0.02, hi: 2.0, n: 5 },
        resolution: Some(20),
        seed: 7,
        ..Default::default()
    };
    let a = run_synthetic(&config).unwrap();
    let b = run_synthetic(&config).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    assert_eq!(a.runs.len(), 4);
    let other = run_synthetic(&ExperimentConfig { seed: 8, ..config.clone() }).unwrap();
    assert_ne!(serde_json::to_vec(&a.runs).unwrap(), serde_json::to_vec(&other.runs).unwrap());
    for r in &a.runs {
        // Vertex targets equal the per-domain accuracies; the uniform target is their mean.
        let mix = r.dmsa.accuracy[2];
        assert!((mix - (r.dmsa.accuracy[0] + r.dmsa.accuracy[1]) / 2.0).abs() < 1e-12);
        assert_eq!(r.sigmas.len(), 2);
        assert!(r.threshold.is_some());
    }
}
