use noiseguide_core::baselines::{dno_cohort, dno_run, random_search, zo_gradient, ZoConfig};
use noiseguide_core::presets::benchmark_sampler;
use noiseguide_core::seed::rng_for;
use noiseguide_core::*;

/// `x = ε_0`: a chain with no steps.
struct Identity(usize);

impl ChainSampler for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn steps(&self) -> usize {
        0
    }
    fn run_chain(&self, noise: &NoiseSequence) -> Result<Trajectory> {
        Trajectory::new(vec![noise.eps(0).to_vec()], None)
    }
}

struct Linear(Vec<f64>);

impl Objective for Linear {
    fn evaluate(&self, x: &[f64], meter: &BudgetMeter) -> Result<f64> {
        meter.try_tick()?;
        Ok(x.iter().zip(&self.0).map(|(a, b)| a * b).sum())
    }
    fn sense(&self) -> Sense {
        Sense::Minimize
    }
}

#[test]
fn zo_estimate_aligns_with_linear_gradient() {
    let a = vec![1.0, -2.0, 0.5];
    let sampler = Identity(3);
    let noise = NoiseSequence::new(vec![vec![0.3, 0.1, -0.4]]).unwrap();
    let meter = BudgetMeter::unlimited();
    let mut rng = rng_for(1, &[]);
    let draws = 10_000;
    let mut sum = [0.0; 3];
    let mut sq = [0.0; 3];
    for _ in 0..draws {
        let g = zo_gradient(&noise, &sampler, &Linear(a.clone()), &meter, 1, 0.1, false, &mut rng).unwrap();
        for j in 0..3 {
            sum[j] += g.estimate[j];
            sq[j] += g.estimate[j] * g.estimate[j];
        }
    }
    assert_eq!(meter.spent(), 2 * draws);
    let n = draws as f64;
    let m: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let cos = vector::dot(&m, &a) / (vector::norm(&m) * vector::norm(&a));
    assert!(cos >= 0.99, "cosine {cos}");
    // E[Ĥ] = μ²·a for the identity chain.
    for j in 0..3 {
        let se = ((sq[j] / n - m[j] * m[j]) / n).sqrt();
        assert!((m[j] - 0.01 * a[j]).abs() <= 3.0 * se, "coord {j}: {} vs {}", m[j], 0.01 * a[j]);
    }
}

#[test]
fn zero_iterations_return_the_unguided_output() {
    let sampler = benchmark_sampler(StepRule::Ddim, 8).unwrap();
    let obj = ObjectiveSpec::new(ObjectiveKind::CoordinateSum { maximize: true }).unwrap();
    let meter = BudgetMeter::new(0);
    let out = dno_run(&ZoConfig::new(3, 0.5, 0), &sampler, &obj, &meter, &mut rng_for(4, &[])).unwrap();
    let plain = sampler.run_chain(&sampler.sample_noise(&mut rng_for(4, &[]))).unwrap();
    assert_eq!(out.x, plain.output());
    assert_eq!(out.evaluations, 0);
    assert_eq!(meter.spent(), 0);
}

#[test]
fn dno_spends_exactly_t_times_q_plus_one_per_run() {
    let sampler = benchmark_sampler(StepRule::Ddim, 8).unwrap();
    let obj = ObjectiveSpec::new(ObjectiveKind::TargetDistance { target: vec![0.0, 2.5], squared: false }).unwrap();
    let cfg = ZoConfig::new(3, 0.5, 5);
    let meter = BudgetMeter::unlimited();
    let out = dno_run(&cfg, &sampler, &obj, &meter, &mut rng_for(2, &[])).unwrap();
    assert_eq!(out.evaluations, 20);
    assert_eq!(meter.spent(), 20);

    let meter = BudgetMeter::new(80);
    let cohort = dno_cohort(&cfg, 4, &sampler, &obj, &meter, 2, &Sequential, &NullClock).unwrap();
    assert_eq!(meter.spent(), 80);
    assert!(cohort.trace.is_complete());
    assert_eq!(cohort.trace.total_queries(), 80);
    assert_eq!(cohort.trace.rows().len(), 5);
}

#[test]
fn dno_stops_flagged_when_the_meter_runs_dry() {
    let sampler = benchmark_sampler(StepRule::Ddim, 8).unwrap();
    let obj = ObjectiveSpec::new(ObjectiveKind::TargetDistance { target: vec![0.0, 2.5], squared: false }).unwrap();
    let meter = BudgetMeter::new(9);
    let out = dno_run(&ZoConfig::new(3, 0.5, 5), &sampler, &obj, &meter, &mut rng_for(2, &[])).unwrap();
    assert!(!out.complete);
    assert_eq!(out.base_values.len(), 2);
}

#[test]
fn random_search_keeps_the_best_and_counts_queries() {
    let sampler = benchmark_sampler(StepRule::Ddim, 8).unwrap();
    let obj = ObjectiveSpec::new(ObjectiveKind::TargetDistance { target: vec![0.0, 2.5], squared: false }).unwrap();
    let meter = BudgetMeter::new(1);
    let one = random_search(1, 8, &sampler, &obj, &meter, 5, &Sequential, &NullClock).unwrap();
    assert_eq!(one.trace.rows().len(), 1);
    assert_eq!(one.best_value, obj.evaluate(&one.best_x, &BudgetMeter::unlimited()).unwrap());

    let meter = BudgetMeter::new(50);
    let many = random_search(50, 8, &sampler, &obj, &meter, 5, &Sequential, &NullClock).unwrap();
    assert_eq!(meter.spent(), 50);
    assert_eq!(many.trace.total_queries(), 50);
    assert_eq!(many.trace.rows().len(), 7);
    for w in many.trace.rows().windows(2) {
        assert!(w[1].accumulated_best <= w[0].accumulated_best);
    }
    assert_eq!(many.trace.final_accumulated_best(), Some(many.best_value));
}
