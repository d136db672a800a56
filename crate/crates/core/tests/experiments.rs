use interchange_core::colouring::colour_cycles;
use interchange_core::sampler::{mcmc_sample, SamplerConfig, WeightSpec};
use interchange_core::seed::stream;
use interchange_core::stats::{
    colouring_diagnostics, ks_two_sample, largest_cycle_experiment, median, run_replicas,
    twisted_interchange_experiment, ExperimentOptions, SamplerKind,
};
use interchange_core::{
    compose, cycle_decompose, sample_crosses, CrossConfig, CycleDecomposition, FiniteGraph,
    Permutation,
};

fn opts(replicas: usize, sampler: SamplerKind, chains: usize) -> ExperimentOptions {
    ExperimentOptions {
        replicas,
        sampler,
        chains,
        threads: 0,
    }
}

#[test]
fn subcritical_theta_one_has_small_cycles() {
    let cfg = SamplerConfig::new(1000, 0.5, WeightSpec::constant(1.0).unwrap(), 31);
    let s = largest_cycle_experiment(&cfg, opts(200, SamplerKind::Rejection, 0)).unwrap();
    let m = median(&s.c1_fractions());
    assert!(m < 0.02, "{m}");
    for r in &s.records {
        assert_eq!(r.sizes.iter().sum::<usize>(), 1000);
        assert!(r.c1 >= r.c2 && r.c1 > 0);
    }
}

#[test]
fn twisted_matching_has_macroscopic_cycle() {
    let n = 1000;
    let cycles: Vec<Vec<usize>> = (0..n / 2).map(|i| vec![2 * i, 2 * i + 1]).collect();
    let phi = Permutation::from_cycles(n, &cycles).unwrap();
    let s = twisted_interchange_experiment(&phi, 2.0, 200, 32, 0).unwrap();
    let p = s.tail_probability(0.05);
    assert!(p >= 0.95, "{p}");
}

#[test]
fn mcmc_at_theta_one_matches_direct_sampling() {
    let n = 50;
    let mut cfg = SamplerConfig::new(n, 1.0, WeightSpec::constant(1.0).unwrap(), 33);
    cfg.burn_in_sweeps = 50;
    let (chain, _) = mcmc_sample(&cfg, 4000).unwrap();
    let graph = FiniteGraph::complete(n);
    let mut rng = stream(33, "direct", 0);
    let direct: Vec<CrossConfig> = (0..4000)
        .map(|_| sample_crosses(&graph, 1.0 / n as f64, &mut rng))
        .collect();
    let count = |v: &[CrossConfig]| v.iter().map(|c| c.len() as f64).collect::<Vec<_>>();
    let c1 = |v: &[CrossConfig]| {
        v.iter()
            .map(|c| cycle_decompose(&compose(c, n).unwrap()).largest() as f64)
            .collect::<Vec<_>>()
    };
    // discrete data make the asymptotic KS p-value conservative
    assert!(
        ks_two_sample(&count(&chain), &count(&direct))
            .unwrap()
            .p_value
            > 0.001
    );
    assert!(ks_two_sample(&c1(&chain), &c1(&direct)).unwrap().p_value > 0.001);
}

#[test]
fn zero_field_matches_constant_two() {
    let n = 8;
    let run = |weight: WeightSpec, seed| {
        let cfg = SamplerConfig::new(n, 2.0, weight, seed);
        run_replicas(&cfg, opts(20_000, SamplerKind::Mcmc, 40), |_, _, d| {
            Ok(d.count() as f64)
        })
        .unwrap()
        .outputs
    };
    let field = run(WeightSpec::external_field(0.0, 2.0), 34);
    let constant = run(WeightSpec::constant(2.0).unwrap(), 35);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    // thinned chain samples are mildly correlated; allow for an ESS of a quarter
    let se = ((var(&field) + var(&constant)) / (field.len() as f64 / 4.0)).sqrt();
    assert!((mean(&field) - mean(&constant)).abs() < 4.0 * se);
}

#[test]
fn recolouring_mean_and_variance_on_weighted_samples() {
    let cfg = SamplerConfig::new(50, 3.0, WeightSpec::constant(2.0).unwrap(), 36);
    let decomps: Vec<CycleDecomposition> = run_replicas(
        &cfg,
        opts(40, SamplerKind::Mcmc, 0),
        |_, _, d| Ok(d.clone()),
    )
    .unwrap()
    .outputs;
    let diag = colouring_diagnostics(&decomps, 2.0, 1000, 36).unwrap();
    assert!(diag.variance_bound_holds);
    // 40 z-scores; |z| > 4.5 is a real failure
    assert!(diag.max_abs_z < 4.5, "{}", diag.max_abs_z);
    for (d, c) in decomps.iter().zip(&diag.checks) {
        assert!(c.variance_red <= d.largest() as f64 * 50.0);
    }
}

#[test]
fn singleton_colouring_is_binomial() {
    let d = cycle_decompose(&Permutation::identity(30));
    let mut rng = stream(37, "bin", 0);
    let draws: Vec<f64> = (0..20_000)
        .map(|_| {
            colour_cycles(&d, 2.0, &mut rng)
                .unwrap()
                .red_vertices()
                .len() as f64
        })
        .collect();
    let m = draws.iter().sum::<f64>() / draws.len() as f64;
    let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / draws.len() as f64;
    assert!((m - 15.0).abs() < 0.05);
    assert!((v - 7.5).abs() < 0.3);
}
