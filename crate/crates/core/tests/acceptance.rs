//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::time::Instant;

use msa_core::combine::{
    dmsa_predict, gmsa_predict, induce_densities, map_z_prime, FnDensities, FnPosterior, FnPredictor,
    SourcePredictor, SourcePredictorSet,
};
use msa_core::maxent::{maxent_gradient, maxent_objective, train_maxent, FeatureMap, TrainOptions};
use msa_core::numeric::softmax;
use msa_core::renyi::{
    bound_estimate_family, bound_sample_size, bound_true_family, renyi_d, triangle_slack, BoundInputs,
    FiniteDistribution, SampleSizeBound,
};
use msa_core::synthbench::{run_single, run_synthetic, ExperimentConfig, ExperimentReport};
use msa_core::zsolve::{grid_search_z, iterative_solve_z, z_objective, IterativeOptions, ZProblem, DEFAULT_GRID_CAP};
use msa_core::{Dataset, MixtureWeights, Output, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

fn dist(rng: &mut ChaCha8Rng, n: usize) -> FiniteDistribution {
    FiniteDistribution::from_weights(&dirichlet(rng, n)).unwrap()
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn synthetic_accuracy(report: &ExperimentReport) -> Outcome {
    let mut lines = Vec::new();
    for target in ["D1", "D2"] {
        let d = report.curve("dmsa", target, 1000).ok_or("missing m = 1000 curve")?;
        check(d.mean_acc >= 0.98, || format!("DMSA mean accuracy on {target} at m = 1000 is {:.4}", d.mean_acc))?;
    }
    for &m in &[100, 300, 1000, 3000] {
        for target in ["D1", "D2"] {
            let d = report.curve("dmsa", target, m).ok_or("missing curve")?;
            let g = report.curve("gmsa", target, m).ok_or("missing curve")?;
            check(d.mean_acc >= g.mean_acc - 0.01, || {
                format!("{target} m = {m}: DMSA {:.4} < GMSA {:.4} − 0.01", d.mean_acc, g.mean_acc)
            })?;
            lines.push(format!("{target}@{m} dmsa {:.4} gmsa {:.4}", d.mean_acc, g.mean_acc));
        }
    }
    Ok(lines.join("; "))
}

fn boundary(report: &ExperimentReport) -> Outcome {
    let thresholds: Vec<Option<f64>> = report.runs_at(1000).map(|r| r.threshold).collect();
    let inside = thresholds
        .iter()
        .filter(|t| t.is_some_and(|t| (-0.5..=1.5).contains(&t)))
        .count();
    let shown: Vec<String> = thresholds
        .iter()
        .map(|t| t.map_or("none".into(), |t| format!("{t:.4}")))
        .collect();
    let detail = format!("{inside}/{} inside [−0.5, 1.5]: {}", thresholds.len(), shown.join(", "));
    check(thresholds.len() == 10 && inside >= 9, || detail.clone())?;
    Ok(detail)
}

fn induced_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for inst in 0..1000 {
        let p = [2, 3, 5][inst % 3];
        let d = 2;
        let wpost: Vec<Vec<f64>> = (0..p).map(|_| normals(&mut rng, d + 1)).collect();
        let posterior = FnPosterior {
            p,
            f: move |x: &[f64]| {
                let logits: Vec<f64> = wpost.iter().map(|w| w[0] * x[0] + w[1] * x[1] + w[2]).collect();
                softmax(&logits)
            },
        };
        let marginal = Dataset::new(
            (0..40).map(|_| Sample::unlabeled(normals(&mut rng, d))).collect(),
            1,
        )
        .unwrap();
        let induced = induce_densities(&posterior, &marginal).map_err(|e| e.to_string())?;
        let z = MixtureWeights::new(dirichlet(&mut rng, p)).unwrap();
        let zp = map_z_prime(&z, induced.qhat()).map_err(|e| e.to_string())?;

        let reg: Vec<Box<dyn SourcePredictor>> = (0..p)
            .map(|_| {
                let w = normals(&mut rng, d + 1);
                Box::new(FnPredictor(move |x: &[f64]| Output::Scalar(w[0] * x[0] + w[1] * x[1] + w[2])))
                    as Box<dyn SourcePredictor>
            })
            .collect();
        let classes = 3;
        let prob: Vec<Box<dyn SourcePredictor>> = (0..p)
            .map(|_| {
                let w: Vec<Vec<f64>> = (0..classes).map(|_| normals(&mut rng, d + 1)).collect();
                let shift = normals(&mut rng, classes);
                Box::new(FnPredictor(move |x: &[f64]| {
                    let logits: Vec<f64> = w
                        .iter()
                        .zip(&shift)
                        .map(|(w, s)| w[0] * x[0] + w[1] * x[1] + w[2] + s)
                        .collect();
                    Output::Distribution(softmax(&logits))
                })) as Box<dyn SourcePredictor>
            })
            .collect();
        let sets = [
            SourcePredictorSet::regression(reg).unwrap(),
            SourcePredictorSet::probability(prob, classes).unwrap(),
        ];
        for _ in 0..3 {
            let x = normals(&mut rng, d);
            for set in &sets {
                let g = gmsa_predict(&z, &induced, set, &x, 0.0).map_err(|e| e.to_string())?;
                let h = dmsa_predict(&zp, &posterior, set, &x, 0.0).map_err(|e| e.to_string())?;
                let diff = match (&g.output, &h.output) {
                    (Output::Scalar(a), Output::Scalar(b)) => (a - b).abs(),
                    (Output::Distribution(a), Output::Distribution(b)) => {
                        a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
                    }
                    _ => return Err("output shapes differ".into()),
                };
                worst = worst.max(diff);
                checked += 1;
            }
        }
    }
    check(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("{checked} predictions over 1000 instances, max deviation {worst:.2e}"))
}

fn triangle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let gamma = 0.5;
    let mut worst = f64::INFINITY;
    let mut run = |alpha_of: &mut dyn FnMut(&mut ChaCha8Rng) -> f64, label: &str| -> Result<(), String> {
        for i in 0..1000 {
            let n = rng.random_range(2..=8);
            let (p, q, r) = (dist(&mut rng, n), dist(&mut rng, n), dist(&mut rng, n));
            let alpha = alpha_of(&mut rng);
            let s = triangle_slack(&p, &q, &r, alpha, gamma).map_err(|e| e.to_string())?;
            if s.infinite {
                continue;
            }
            let rel = s.slack / s.rhs.abs();
            worst = worst.min(rel);
            check(s.slack >= -1e-9 * s.rhs.abs(), || {
                format!("{label} case {i}: α = {alpha}, slack {} (lhs {}, rhs {})", s.slack, s.lhs, s.rhs)
            })?;
        }
        Ok(())
    };
    run(&mut |_| 2.0, "α = 2")?;
    run(&mut |rng| rng.random_range(gamma + 1e-6..5.0), "random α")?;
    Ok(format!("2000 triples, smallest slack/RHS {worst:.3e}"))
}

fn renyi_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let orders = [0.0, 0.25, 0.5, 0.9, 1.0, 1.1, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0, f64::INFINITY];
    let (mut self_worst, mut mono_worst, mut cont_worst) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..500 {
        let n = rng.random_range(2..=10);
        let (p, q) = (dist(&mut rng, n), dist(&mut rng, n));
        for &a in &orders {
            self_worst = self_worst.max(renyi_d(&p, &p, a).map_err(|e| e.to_string())?.abs());
        }
        let vals: Vec<f64> = orders.iter().map(|&a| renyi_d(&p, &q, a).unwrap()).collect();
        for w in vals.windows(2) {
            mono_worst = mono_worst.max(w[0] - w[1]);
        }
        let kl = renyi_d(&p, &q, 1.0).unwrap();
        for a in [1.0 - 1e-4, 1.0 + 1e-4] {
            cont_worst = cont_worst.max((renyi_d(&p, &q, a).unwrap() - kl).abs());
        }
    }
    check(self_worst <= 1e-12, || format!("D_α(P‖P) reached {self_worst:e}"))?;
    check(mono_worst <= 1e-10, || format!("monotonicity violated by {mono_worst:e}"))?;
    check(cont_worst <= 1e-3, || format!("α = 1 continuity gap {cont_worst:e}"))?;
    Ok(format!(
        "self {self_worst:.1e}, monotonicity violation {mono_worst:.1e}, α=1 gap {cont_worst:.1e}"
    ))
}

fn random_domain_data(rng: &mut ChaCha8Rng, n: usize, d: usize, p: usize) -> Dataset {
    let samples = (0..n)
        .map(|i| Sample::new(normals(rng, d), None, Some(if i < p { i } else { rng.random_range(0..p) })))
        .collect();
    Dataset::new(samples, p).unwrap()
}

fn maxent_numerics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut grad_worst, mut convex_worst, mut obj_excess) = (0.0f64, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..100 {
        let p = rng.random_range(2..=4);
        let d = rng.random_range(1..=3);
        let n = rng.random_range(10..=30);
        let mu = 10f64.powf(rng.random_range(-3.0..0.0));
        let data = random_domain_data(&mut rng, n, d, p);
        let map = FeatureMap::per_class_linear(d);
        let dim = map.output_dim(p);
        let w = normals(&mut rng, dim);
        let g = maxent_gradient(&w, &data, mu, &map).map_err(|e| e.to_string())?;
        let h = 1e-5;
        let fd: Vec<f64> = (0..dim)
            .map(|j| {
                let mut up = w.clone();
                let mut dn = w.clone();
                up[j] += h;
                dn[j] -= h;
                (maxent_objective(&up, &data, mu, &map).unwrap() - maxent_objective(&dn, &data, mu, &map).unwrap())
                    / (2.0 * h)
            })
            .collect();
        let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        grad_worst = grad_worst.max(err / norm);

        let w2 = normals(&mut rng, dim);
        let t: f64 = rng.random();
        let mid: Vec<f64> = w.iter().zip(&w2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let f = |v: &[f64]| maxent_objective(v, &data, mu, &map).unwrap();
        convex_worst = convex_worst.max(f(&mid) - (t * f(&w) + (1.0 - t) * f(&w2)));

        let model = train_maxent(&data, mu, map, TrainOptions::default(), 0).map_err(|e| e.to_string())?;
        let obj = model.summary().ok_or("missing training summary")?.objective;
        obj_excess = obj_excess.max(obj - (p as f64).ln());
    }
    check(grad_worst <= 1e-5, || format!("gradient relative error {grad_worst:e}"))?;
    check(convex_worst <= 1e-10, || format!("convexity violated by {convex_worst:e}"))?;
    check(obj_excess <= 0.0, || format!("trained objective exceeds log p by {obj_excess:e}"))?;
    Ok(format!(
        "gradient rel. error {grad_worst:.1e}, convexity excess {convex_worst:.1e}, objective − log p ≤ {obj_excess:.3}"
    ))
}

fn combiner_contracts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut sum_worst, mut hull_worst, mut scale_worst) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..500 {
        let p = rng.random_range(2..=5);
        let classes = rng.random_range(2..=4);
        let z = MixtureWeights::new(dirichlet(&mut rng, p)).unwrap();
        let dists: Vec<Vec<f64>> = (0..p).map(|_| dirichlet(&mut rng, classes)).collect();
        let prob = SourcePredictorSet::probability(
            dists
                .iter()
                .cloned()
                .map(|v| Box::new(FnPredictor(move |_: &[f64]| Output::Distribution(v.clone()))) as Box<dyn SourcePredictor>)
                .collect(),
            classes,
        )
        .unwrap();
        let values: Vec<f64> = normals(&mut rng, p);
        let reg = SourcePredictorSet::regression(
            values
                .iter()
                .map(|&v| Box::new(FnPredictor(move |_: &[f64]| Output::Scalar(v))) as Box<dyn SourcePredictor>)
                .collect(),
        )
        .unwrap();
        let dens: Vec<f64> = (0..p).map(|_| Exp1.sample(&mut rng)).collect();
        let c: f64 = 10f64.powf(rng.random_range(-6.0..6.0));
        let base = FnDensities { p, f: { let d = dens.clone(); move |_: &[f64]| d.clone() } };
        let scaled = FnDensities { p, f: { let d = dens.clone(); move |_: &[f64]| d.iter().map(|v| v * c).collect() } };
        let x = [0.0];

        let out = gmsa_predict(&z, &base, &prob, &x, 0.0).map_err(|e| e.to_string())?;
        let total: f64 = out.output.as_distribution().ok_or("expected distribution")?.iter().sum();
        sum_worst = sum_worst.max((total - 1.0).abs());

        let r = gmsa_predict(&z, &base, &reg, &x, 0.0).map_err(|e| e.to_string())?;
        let v = r.output.as_scalar().ok_or("expected scalar")?;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hull_worst = hull_worst.max((lo - v).max(v - hi));

        let rs = gmsa_predict(&z, &scaled, &reg, &x, 0.0).map_err(|e| e.to_string())?;
        scale_worst = scale_worst.max((rs.output.as_scalar().unwrap() - v).abs());
    }
    check(sum_worst <= 1e-10, || format!("distribution sums off by {sum_worst:e}"))?;
    check(hull_worst <= 1e-12, || format!("regression output leaves hull by {hull_worst:e}"))?;
    check(scale_worst <= 1e-12, || format!("density scaling changed output by {scale_worst:e}"))?;
    Ok(format!(
        "sum error {sum_worst:.1e}, hull excess {hull_worst:.1e}, scale change {scale_worst:.1e}"
    ))
}

struct Stub<F>(usize, F);

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> ZProblem for Stub<F> {
    fn num_domains(&self) -> usize {
        self.0
    }
    fn domain_losses(&self, z: &MixtureWeights) -> msa_core::Result<Vec<f64>> {
        Ok((self.1)(z.as_slice()))
    }
}

fn z_solver(report: &ExperimentReport) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut min_obj = f64::INFINITY;
    let mut refine_worst = f64::NEG_INFINITY;
    let mut iter_worst = 0.0f64;
    for _ in 0..30 {
        let p = rng.random_range(2..=3);
        // Each domain's loss falls as its own weight grows.
        let a: Vec<f64> = (0..p).map(|_| rng.random_range(0.05..0.5)).collect();
        let b: Vec<f64> = (0..p).map(|_| rng.random_range(0.05..0.5)).collect();
        let curv: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..0.3)).collect();
        let stub = Stub(p, move |z: &[f64]| {
            (0..z.len()).map(|k| a[k] + b[k] * (1.0 - z[k]) + curv[k] * (1.0 - z[k]).powi(2)).collect()
        });
        for _ in 0..20 {
            let z = MixtureWeights::new(dirichlet(&mut rng, p)).unwrap();
            min_obj = min_obj.min(z_objective(&z, &stub).map_err(|e| e.to_string())?.objective);
        }
        let mut prev = f64::INFINITY;
        for res in [5, 10, 20, 40] {
            let s = grid_search_z(&stub, res, DEFAULT_GRID_CAP).map_err(|e| e.to_string())?;
            refine_worst = refine_worst.max(s.objective - prev);
            prev = s.objective;
            min_obj = min_obj.min(s.objective);
        }
        if p == 2 {
            let grid = grid_search_z(&stub, 1000, DEFAULT_GRID_CAP).map_err(|e| e.to_string())?;
            let it = iterative_solve_z(&stub, &MixtureWeights::uniform(2), &IterativeOptions::default())
                .map_err(|e| e.to_string())?;
            iter_worst = iter_worst.max((it.objective - grid.objective).abs());
        }
    }
    // Balance at the synthetic optimum: the m = 1000 runs re-solved on a
    // resolution-200 lattice (same samples and seeds as the report).
    let coarse_ratio = report
        .runs_at(1000)
        .map(|r| r.dmsa.spread / r.dmsa.per_domain_losses.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .fold(0.0f64, f64::max);
    let fine = ExperimentConfig { resolution: Some(200), ..report.config.clone() };
    let mut spread_ratio = 0.0f64;
    for run in 0..fine.runs {
        let r = run_single(&fine, run, 1000).map_err(|e| e.to_string())?;
        let max = r.dmsa.per_domain_losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        min_obj = min_obj.min(r.dmsa.objective).min(r.gmsa.objective);
        spread_ratio = spread_ratio.max(r.dmsa.spread / max);
    }
    check(min_obj >= 0.0, || format!("negative objective {min_obj:e}"))?;
    check(refine_worst <= 0.0, || format!("refinement increased the optimum by {refine_worst:e}"))?;
    check(iter_worst <= 1e-3, || format!("iterative vs grid gap {iter_worst:e}"))?;
    check(spread_ratio <= 0.1, || format!("synthetic spread ratio {spread_ratio:.4}"))?;
    Ok(format!(
        "min objective {min_obj:.1e}, iterative gap {iter_worst:.1e}, synthetic spread/max loss ≤ {spread_ratio:.4} \
         at resolution 200 ({coarse_ratio:.4} at 100)"
    ))
}

fn close(v: f64, oracle: f64) -> bool {
    (v - oracle).abs() <= 1e-12 * oracle.abs().max(1.0)
}

fn bounds() -> Outcome {
    let e = |r: msa_core::Result<f64>| r.map_err(|e| e.to_string());
    let inputs = BoundInputs {
        epsilon: 0.05,
        delta: 0.02,
        alpha: 3.0,
        loss_bound: 2.0,
        d_hat: 1.3,
        d_hat_prime: 1.4,
        d_target: 1.7,
    };
    let cases = [
        ("estimate family", e(bound_estimate_family(&inputs))?, 0.661_296_746_492_331_7),
        (
            "estimate family, α = 2",
            e(bound_estimate_family(&BoundInputs { epsilon: 0.1, delta: 0.01, alpha: 2.0, loss_bound: 1.0, d_hat: 1.0, d_hat_prime: 1.0, d_target: 1.0 }))?,
            0.571_163_519_508_063_4,
        ),
        ("true family", e(bound_true_family(&inputs, 1.25))?, 0.699_746_615_229_543_4),
        (
            "dmsa sample size",
            e(bound_sample_size(&SampleSizeBound::Dmsa { epsilon: 0.05, p: 2, r: 1.0, mu: 0.1, m: 10_000, delta: 0.05, d_star: 1.2, d_prime_star: 1.1 }))?,
            1.339_401_509_427_994,
        ),
        (
            "dmsa sample size, unit factors",
            e(bound_sample_size(&SampleSizeBound::Dmsa { epsilon: 0.05, p: 2, r: 1.0, mu: 1.0, m: 10_000, delta: 0.1, d_star: 1.0, d_prime_star: 1.0 }))?,
            0.123_814_064_609_761_1,
        ),
        (
            "gmsa sample size",
            e(bound_sample_size(&SampleSizeBound::Gmsa { epsilon: 0.05, p: 2, kappa: 0.5, m: 10_000, delta: 0.05, loss_bound: 1.0, d_star: 1.2, d_prime_star: 1.1 }))?,
            0.661_211_206_591_439_2,
        ),
        (
            "gmsa sample size, M = 3",
            e(bound_sample_size(&SampleSizeBound::Gmsa { epsilon: 0.05, p: 3, kappa: 0.5, m: 9_000, delta: 0.05, loss_bound: 3.0, d_star: 1.0, d_prime_star: 1.0 }))?,
            1.165_784_182_409_694,
        ),
    ];
    for (name, v, oracle) in cases {
        check(close(v, oracle), || format!("{name}: {v} vs {oracle}"))?;
    }
    let limit = e(bound_estimate_family(&BoundInputs {
        epsilon: 0.037,
        delta: 0.0,
        alpha: f64::INFINITY,
        loss_bound: 1.0,
        d_hat: 1.0,
        d_hat_prime: 1.0,
        d_target: 1.0,
    }))?;
    check(limit == 0.037, || format!("α → ∞ limit gave {limit}"))?;
    Ok(format!("{} closed-form cases to 1e-12; α → ∞ limit returns ε exactly", cases.len()))
}

fn main() {
    let started = Instant::now();
    let report = run_synthetic(&ExperimentConfig::default());
    let synth_secs = started.elapsed().as_secs_f64();
    let with_report = |f: fn(&ExperimentReport) -> Outcome| -> Outcome {
        match &report {
            Ok(r) => f(r),
            Err(e) => Err(format!("benchmark failed: {e}")),
        }
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("synthetic reproduction", with_report(synthetic_accuracy).map(|s| format!("{s} ({synth_secs:.0}s)"))),
        ("posterior decision boundary", with_report(boundary)),
        ("induced-density equivalence", induced_equivalence()),
        ("Rényi triangle inequality", triangle()),
        ("Rényi identities", renyi_identities()),
        ("Maxent numerics", maxent_numerics()),
        ("combiner contracts", combiner_contracts()),
        ("z-solver", with_report(z_solver)),
        ("bound evaluators", bounds()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS — {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL — {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
