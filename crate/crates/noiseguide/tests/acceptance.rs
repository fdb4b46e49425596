//! Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails or exceeds its time limit.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use noiseguide::config::ExperimentConfig;
use noiseguide::{run_experiment, RayonExecutor};
use noiseguide_core::baselines::{dno_cohort, random_search};
use noiseguide_core::compare::efficiency_gain;
use noiseguide_core::fast_direct::{self, run_frozen, unguided_batch, FastDirectConfig};
use noiseguide_core::gnso::{gnso_run, gnso_run_noisy_target, DirectionRule, GnsoConfig, StepSize};
use noiseguide_core::presets::{benchmark_mixture, benchmark_sampler};
use noiseguide_core::seed::{rng_for, standard_normal_vec, stream, Rng};
use noiseguide_core::surrogate::Regularizer;
use noiseguide_core::{
    update_noise, BudgetMeter, ChainSampler, GpSurrogate, KernelFamily, KernelSpec, MixtureSampler, NullClock, Objective,
    PseudoTargetModel, QueryDataset, StepRule,
};
use rand::Rng as _;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn c1_norm_preservation() -> Outcome {
    let mut rng = rng_for(1, &[]);
    let mut worst = 0.0f64;
    for _ in 0..1_000_000 {
        let d = rng.random_range(1..=64);
        let eps = standard_normal_vec(&mut rng, d);
        let dir: Vec<f64> = standard_normal_vec(&mut rng, d).iter().map(|x| x * 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let alpha = 10f64.powf(rng.random_range(-4.0..3.0));
        let n = norm(&eps) * 10f64.powf(rng.random_range(-2.0..2.0));
        let out = update_noise(&eps, &dir, alpha, n).expect("nondegenerate draw");
        worst = worst.max((norm(&out) - n).abs() / n);
    }
    outcome(worst <= 1e-9, format!("max |‖ε′‖ − n|/n = {worst:.2e}"))
}

/// Residual of `g` outside span(cols), by modified Gram–Schmidt with one
/// reorthogonalization pass. Relative to `‖g‖`.
fn gram_schmidt_residual(cols: &[Vec<f64>], g: &[f64]) -> f64 {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let scale = cols.iter().map(|c| norm(c)).fold(0.0, f64::max);
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &basis {
                let p: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
            }
        }
        let n = norm(&v);
        if n > 1e-10 * scale {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    let mut r = g.to_vec();
    for _ in 0..2 {
        for q in &basis {
            let p: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
        }
    }
    norm(&r) / norm(g).max(f64::MIN_POSITIVE)
}

fn random_gp(rng: &mut Rng, d: usize, n: usize, family: KernelFamily) -> GpSurrogate {
    let mut data = QueryDataset::new();
    for _ in 0..n {
        let x = standard_normal_vec(rng, d);
        let y = rng.random_range(-3.0..3.0);
        data.push(x, y, 1).unwrap();
    }
    let kernel = KernelSpec::new(family, (d as f64).sqrt() * rng.random_range(0.5..2.0)).unwrap();
    GpSurrogate::fit(&data, kernel, Regularizer::default()).unwrap()
}

fn c2_span() -> Outcome {
    let mut rng = rng_for(2, &[]);
    let (mut worst_lib, mut worst_oracle) = (0.0f64, 0.0f64);
    for i in 0..1000 {
        let d = [8, 16, 32][i % 3];
        let family = if i % 2 == 0 { KernelFamily::Gaussian } else { KernelFamily::Matern52 };
        let n = rng.random_range(1..d);
        let gp = random_gp(&mut rng, d, n, family);
        let x = standard_normal_vec(&mut rng, d);
        worst_lib = worst_lib.max(gp.span_residual(&x).unwrap());
        let mut cols = vec![x.clone()];
        cols.extend(gp.points().iter().cloned());
        worst_oracle = worst_oracle.max(gram_schmidt_residual(&cols, &gp.posterior_mean_gradient(&x).unwrap()));
    }
    outcome(
        worst_lib <= 1e-8 && worst_oracle <= 1e-8,
        format!("max span residual {worst_lib:.2e} (library), {worst_oracle:.2e} (Gram–Schmidt)"),
    )
}

fn c3_gradient() -> Outcome {
    let mut rng = rng_for(3, &[]);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let d = rng.random_range(1..=16);
        let n = rng.random_range(1..=20);
        let family = if i % 2 == 0 { KernelFamily::Gaussian } else { KernelFamily::Matern52 };
        let gp = random_gp(&mut rng, d, n, family);
        let x = standard_normal_vec(&mut rng, d);
        let g = gp.posterior_mean_gradient(&x).unwrap();
        let h = 1e-5 * gp.kernel().lengthscale;
        let fd: Vec<f64> = (0..d)
            .map(|j| {
                let (mut p, mut m) = (x.clone(), x.clone());
                p[j] += h;
                m[j] -= h;
                (gp.posterior_mean(&p).unwrap() - gp.posterior_mean(&m).unwrap()) / (2.0 * h)
            })
            .collect();
        let err = dist(&g, &fd) / norm(&g).max(1e-8);
        worst = worst.max(err);
    }
    outcome(worst <= 1e-5, format!("max relative error {worst:.2e}"))
}

fn c4_sampler() -> Outcome {
    let n = 10_000;
    let model = benchmark_mixture();
    let mu = model.mean();
    let sigma = model.covariance();
    let mut details = Vec::new();
    let mut pass = true;
    for (name, rule) in [("ddim", StepRule::Ddim), ("euler", StepRule::EulerMaruyama)] {
        let sampler = benchmark_sampler(rule, 500).unwrap();
        let xs = unguided_batch(n, 4, &sampler, &RayonExecutor).unwrap();
        let nf = n as f64;
        let m: Vec<f64> = (0..2).map(|i| xs.iter().map(|x| x[i]).sum::<f64>() / nf).collect();
        let mut worst = 0.0f64;
        for i in 0..2 {
            let se = (sigma[i * 2 + i] / nf).sqrt();
            worst = worst.max((m[i] - mu[i]).abs() / se);
        }
        for i in 0..2 {
            for j in i..2 {
                let prods: Vec<f64> = xs.iter().map(|x| (x[i] - m[i]) * (x[j] - m[j])).collect();
                let c = prods.iter().sum::<f64>() / (nf - 1.0);
                let var = prods.iter().map(|p| (p - c) * (p - c)).sum::<f64>() / (nf - 1.0);
                worst = worst.max((c - sigma[i * 2 + j]).abs() / (var / nf).sqrt());
            }
        }
        pass &= worst <= 3.0;
        details.push(format!("{name} max deviation {worst:.2} s.e."));
    }
    outcome(pass, details.join(", "))
}

fn gnso_config(direction: DirectionRule) -> GnsoConfig {
    GnsoConfig { step_size: StepSize::ScaleNormalized(0.5), iterations: 50, direction }
}

fn component_target(j: usize) -> Vec<f64> {
    benchmark_mixture().components()[j % 3].mean.clone()
}

fn c5_gnso() -> Outcome {
    let sampler = benchmark_sampler(StepRule::Ddim, 8).unwrap();
    let run = |direction| -> (Vec<f64>, Vec<f64>) {
        (0..20)
            .map(|j| {
                let target = component_target(j);
                let noise = sampler.sample_noise(&mut rng_for(500 + j as u64, &[stream::GNSO]));
                let out = gnso_run(&sampler, &target, &gnso_config(direction), noise).unwrap();
                let last = *out.distances.last().unwrap();
                (last / out.distances[0], last)
            })
            .unzip()
    };
    let (ratios, finals) = run(DirectionRule::Universal);
    let (_, stepwise) = run(DirectionRule::Stepwise);
    let (r, u, s) = (median(ratios), median(finals), median(stepwise));
    outcome(r <= 0.05 && s > u, format!("median final/initial {r:.4}; median final universal {u:.4} vs stepwise {s:.4}"))
}

fn c6_noisy_target() -> Outcome {
    let sampler = benchmark_sampler(StepRule::Ddim, 8).unwrap();
    let model = sampler.model();
    let reference = unguided_batch(2000, 600, &sampler, &RayonExecutor).unwrap();
    let unguided_median = median(reference.iter().map(|x| model.log_density(x).unwrap()).collect());
    let hits = (0..20)
        .filter(|&j| {
            let mut rng = rng_for(600 + j as u64, &[stream::GNSO]);
            let noise = sampler.sample_noise(&mut rng);
            let out = gnso_run_noisy_target(&sampler, &component_target(j), 3.0, &gnso_config(DirectionRule::Universal), noise, &mut rng)
                .unwrap();
            model.log_density(out.run.trajectory.output()).unwrap() >= unguided_median
        })
        .count();
    outcome(hits >= 16, format!("{hits}/20 seeds at or above the unguided median log-density {unguided_median:.3}"))
}

fn c7_truncation() -> Outcome {
    let sampler = benchmark_sampler(StepRule::Ddim, 20).unwrap();
    let model = sampler.model();
    let final_density = |halvings| {
        median(
            (0..20)
                .map(|j| {
                    let noise = sampler.sample_noise(&mut rng_for(700 + j as u64, &[stream::GNSO]));
                    let config = gnso_config(DirectionRule::Truncated { halvings });
                    let out = gnso_run(&sampler, &component_target(j), &config, noise).unwrap();
                    model.log_density(out.trajectory.output()).unwrap()
                })
                .collect(),
        )
    };
    let (full, quarter) = (final_density(0), final_density(2));
    outcome(quarter < full, format!("median log-density K′=K {full:.3} vs K′=K/4 {quarter:.3}"))
}

struct EfficiencyRun {
    models: Vec<PseudoTargetModel>,
    fd_spent: Vec<u64>,
    dno_spent: Vec<u64>,
}

fn desk(name: &str) -> ExperimentConfig {
    ExperimentConfig::preset(name).unwrap()
}

fn c8_efficiency() -> (Outcome, EfficiencyRun) {
    let fd_cfg = desk("desk-fast-direct");
    let dno_cfg = desk("desk-dno");
    let rs_cfg = desk("desk-random-search");
    let sampler = fd_cfg.sampler().unwrap();
    let (zo, repetitions) = dno_cfg.zo().unwrap();
    let mut run = EfficiencyRun { models: Vec::new(), fd_spent: Vec::new(), dno_spent: Vec::new() };
    let mut wins = 0;
    let mut lines = Vec::new();
    for s in 0..10 {
        let seed = fd_cfg.seed(s);
        let objective = fd_cfg.objective(seed).unwrap();
        let fd_meter = BudgetMeter::new(fd_cfg.budget);
        let fd = fast_direct::run(&fd_cfg.fast_direct(seed).unwrap(), &sampler, &objective, &fd_meter, &RayonExecutor, &NullClock)
            .unwrap();
        let dno_meter = BudgetMeter::new(dno_cfg.budget);
        let dno = dno_cohort(&zo, repetitions, &sampler, &objective, &dno_meter, seed, &RayonExecutor, &NullClock).unwrap();
        let rs_meter = BudgetMeter::new(rs_cfg.budget);
        let rs = random_search(rs_cfg.budget as usize, 8, &sampler, &objective, &rs_meter, seed, &RayonExecutor, &NullClock).unwrap();
        let gain = efficiency_gain(&fd.trace, &dno.trace).unwrap();
        let fd_best = fd.trace.final_accumulated_best().unwrap();
        let ok = gain.gain().is_some_and(|g| g >= 2.0) && fd_best < rs.best_value;
        wins += ok as usize;
        if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
            let rows = |t: &noiseguide_core::RunTrace| t.rows().iter().map(|r| format!("{}:{}", r.queries_spent, r.accumulated_best)).collect::<Vec<_>>().join(" ");
            eprintln!("seed {s}\n  fd  {}\n  dno {}\n  rs best {}", rows(&fd.trace), rows(&dno.trace), rs.best_value);
        }
        lines.push(format!(
            "{}{}",
            gain.n_star.map_or("-".into(), |n| format!("{n}/{}", gain.budget_b)),
            if ok { "" } else { "✗" }
        ));
        run.models.push(fd.model);
        run.fd_spent.push(fd_meter.spent());
        run.dno_spent.push(dno_meter.spent());
    }
    (outcome(wins >= 8, format!("{wins}/10 seeds; N*/budget_DNO per seed: {}", lines.join(" "))), run)
}

fn c9_budget(run: &EfficiencyRun) -> Outcome {
    let fd_expected = 30 * 8;
    let dno_expected = 6 * (4 + 1) * 8;
    let pass = run.fd_spent.iter().all(|&s| s == fd_expected) && run.dno_spent.iter().all(|&s| s == dno_expected);
    outcome(pass, format!("fast direct {:?} (expect {fd_expected}), dno {:?} (expect {dno_expected})", run.fd_spent, run.dno_spent))
}

fn c10_frozen(run: &EfficiencyRun) -> Outcome {
    let cfg = desk("desk-fast-direct");
    let sampler = cfg.sampler().unwrap();
    let fd = cfg.fast_direct(0).unwrap();
    let mut improvements = Vec::new();
    let mut audited = 0;
    for j in 0..20 {
        let seed = 1000 + j as u64;
        let objective = cfg.objective(seed).unwrap();
        let guided = run_frozen(&run.models[j % 10], 8, 30, fd.step_size, fd.direction, seed, &sampler, &RayonExecutor).unwrap();
        let unguided = unguided_batch(8, seed, &sampler, &RayonExecutor).unwrap();
        let audit = BudgetMeter::unlimited();
        let mean = |xs: Vec<&[f64]>| xs.iter().map(|x| objective.evaluate(x, &audit).unwrap()).sum::<f64>() / xs.len() as f64;
        let g = mean(guided.iter().map(|s| s.output()).collect());
        let u = mean(unguided.iter().map(|x| x.as_slice()).collect());
        improvements.push((u - g) / u.abs());
        audited += audit.spent();
    }
    let m = median(improvements);
    // run_frozen never receives an objective or a meter, so it cannot query.
    outcome(m >= 0.25, format!("median improvement {:.1}%, 0 queries ({audited} audit evaluations)", 100.0 * m))
}

fn c11_neutrality() -> Outcome {
    let sampler: MixtureSampler = benchmark_sampler(StepRule::Ddim, 8).unwrap();
    let b = 4000;
    let cfg = desk("desk-fast-direct");
    let config = FastDirectConfig { batch_queries: 1, batch_size: b, ..cfg.fast_direct(11).unwrap() };
    let objective = cfg.objective(11).unwrap();
    let out = fast_direct::run(&config, &sampler, &objective, &BudgetMeter::new(b as u64), &RayonExecutor, &NullClock).unwrap();
    let guided = out.final_outputs();
    let unguided = unguided_batch(b, 11, &sampler, &RayonExecutor).unwrap();
    let stats = |xs: &[Vec<f64>], i: usize| {
        let n = xs.len() as f64;
        let m = xs.iter().map(|x| x[i]).sum::<f64>() / n;
        let v = xs.iter().map(|x| (x[i] - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v / n)
    };
    let worst = (0..2)
        .map(|i| {
            let ((m1, v1), (m2, v2)) = (stats(&guided, i), stats(&unguided, i));
            (m1 - m2).abs() / (v1 + v2).sqrt()
        })
        .fold(0.0, f64::max);
    outcome(worst <= 3.0, format!("max |z| = {worst:.2} over coordinates, B = {b}"))
}

fn collect_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            collect_files(&p, out);
        } else {
            out.push(p);
        }
    }
}

fn c12_determinism() -> Outcome {
    let methods = [
        ("desk-fast-direct", "[method]\nbatch_queries = 5\nbatch_size = 4\n", 20),
        ("desk-dno", "[method]\niterations = 2\nrepetitions = 3\n", 30),
        ("desk-random-search", "", 240),
        ("desk-gnso", "[method]\ntarget_noise_std = 1.0\n", 0),
    ];
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (preset, overrides, budget) in methods {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for (k, d) in dirs.iter().enumerate() {
            let text = format!(
                "preset = \"{preset}\"\noutput_dir = {:?}\nbudget = {budget}\nparallel = {}\nseeds = {{ master = 12, count = 3 }}\n{overrides}",
                d.path().to_str().unwrap(),
                k == 0
            );
            run_experiment(&ExperimentConfig::from_toml_str(&text).unwrap()).unwrap();
        }
        let mut files = Vec::new();
        collect_files(dirs[0].path(), &mut files);
        for f in files.iter().filter(|f| f.extension().is_some_and(|e| e == "csv")) {
            let rel = f.strip_prefix(dirs[0].path()).unwrap();
            compared += 1;
            if fs::read(f).ok() != fs::read(dirs[1].path().join(rel)).ok() {
                mismatches.push(format!("{preset}/{}", rel.display()));
            }
        }
    }
    let pass = mismatches.is_empty() && compared > 0;
    outcome(pass, format!("{compared} CSV files compared, parallel vs sequential; mismatches: {mismatches:?}"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = o.pass && in_time;
        failures += !pass as usize;
        let limit_text = limit.map_or(String::new(), |l| format!(" / limit {} s", l.as_secs()));
        let late = if in_time { "" } else { " TIME LIMIT EXCEEDED" };
        println!(
            "{} criterion {id:>2} {name}: {} [{:.2} s{limit_text}]{late}",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    };
    let secs = |s| Some(Duration::from_secs(s));
    report(1, "norm preservation", secs(10), &mut c1_norm_preservation);
    report(2, "gradient span", secs(30), &mut c2_span);
    report(3, "gp gradient", secs(60), &mut c3_gradient);
    report(4, "sampler moments", secs(60), &mut c4_sampler);
    report(5, "gnso convergence", secs(120), &mut c5_gnso);
    report(6, "noisy-target robustness", secs(120), &mut c6_noisy_target);
    report(7, "truncated direction", secs(120), &mut c7_truncation);
    let mut efficiency = None;
    report(8, "query efficiency", secs(600), &mut || {
        let (o, run) = c8_efficiency();
        efficiency = Some(run);
        o
    });
    let run = efficiency.expect("criterion 8 ran");
    report(9, "budget exactness", None, &mut || c9_budget(&run));
    report(10, "frozen surrogate", secs(120), &mut || c10_frozen(&run));
    report(11, "single-query neutrality", secs(30), &mut c11_neutrality);
    report(12, "determinism", None, &mut c12_determinism);
    println!("{} of 12 criteria passed", 12 - failures);
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
