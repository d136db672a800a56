//! Experiments, estimators and distributional tests.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::colouring::{
    classify_crosses, colour_cycles, compute_twist, reconstruct_red, sample_xi, verify_red_poisson,
    ColouringState, TestReport, TwistData,
};
use crate::error::{Error, Result};
use crate::loops::build_loops;
use crate::oracle::{analytic_two_point_n2, heisenberg_correlation, QuantumModel};
use crate::process::{
    compose, cycle_decompose, sample_crosses, CrossConfig, CycleDecomposition, FiniteGraph,
    Permutation,
};
use crate::sampler::{
    effective_sample_size, rejection_sample, McmcChain, SamplerConfig, Telemetry, WeightSpec,
};
use crate::seed::{derive_seed, stream};

pub const DELTA_GRID: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const MIN_CI_REPLICAS: usize = 30;
pub const MIN_TEST_SAMPLES: usize = 100;

/// Fixed-precision float text: 12 significant digits, shortest form.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Mcmc,
    Rejection,
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcmc" => Ok(Self::Mcmc),
            "rejection" => Ok(Self::Rejection),
            _ => Err(Error::InvalidConfig(format!("unknown sampler '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaRecord {
    pub replica: usize,
    pub ell: usize,
    pub c1: usize,
    pub c2: usize,
    pub sizes: Vec<usize>,
    /// Vertices 1 and 2 lie in the same cycle.
    pub pair_12: bool,
}

impl ReplicaRecord {
    pub fn from_decomposition(replica: usize, d: &CycleDecomposition) -> Self {
        Self {
            replica,
            ell: d.count(),
            c1: d.largest(),
            c2: d.second_largest(),
            sizes: d.sizes(),
            pair_12: d.n() >= 2 && d.cycle_of(0) == d.cycle_of(1),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleStats {
    pub n: usize,
    pub lambda: f64,
    pub theta: f64,
    pub records: Vec<ReplicaRecord>,
    pub telemetry: Option<Telemetry>,
    pub ess_ell: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailProbability {
    pub delta: f64,
    pub prob: f64,
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleSummary {
    pub n: usize,
    pub lambda: f64,
    pub theta: f64,
    pub replicas: usize,
    pub mean_ell: f64,
    pub mean_c1_frac: f64,
    pub mean_c1_frac_ci: Option<(f64, f64)>,
    pub median_c1_frac: f64,
    pub median_c1_frac_ci: Option<(f64, f64)>,
    pub tail: Vec<TailProbability>,
    pub ess_ell: Option<f64>,
    pub telemetry: Option<Telemetry>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Basic bootstrap 95% interval for `stat` over `xs`.
pub fn basic_bootstrap_ci(
    xs: &[f64],
    stat: impl Fn(&[f64]) -> f64,
    seed: u64,
    tag: &str,
) -> (f64, f64) {
    let est = stat(xs);
    let mut rng = stream(seed, tag, 0);
    let mut buf = vec![0.0; xs.len()];
    let mut boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.gen_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    (
        2.0 * est - quantile_sorted(&boots, 0.975),
        2.0 * est - quantile_sorted(&boots, 0.025),
    )
}

impl CycleStats {
    pub fn from_run(config: &SamplerConfig, run: ReplicaRun<ReplicaRecord>) -> Self {
        Self {
            n: config.n,
            lambda: config.lambda,
            theta: config.weight.theta_max(),
            records: run.outputs,
            telemetry: run.telemetry,
            ess_ell: run.ess_ell,
        }
    }

    /// Fraction of replicas in which vertices 1 and 2 share a cycle, with its
    /// standard error.
    pub fn two_point_estimate(&self) -> (f64, f64) {
        let m = self.records.len() as f64;
        let p = self.records.iter().filter(|r| r.pair_12).count() as f64 / m;
        (p, (p * (1.0 - p) / m).sqrt())
    }

    pub fn c1_fractions(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.c1 as f64 / self.n as f64)
            .collect()
    }

    /// Empirical `P(|C1| >= delta n)`.
    pub fn tail_probability(&self, delta: f64) -> f64 {
        let thr = delta * self.n as f64;
        self.records.iter().filter(|r| r.c1 as f64 >= thr).count() as f64
            / self.records.len() as f64
    }

    /// Summary with bootstrap intervals when there are at least
    /// [`MIN_CI_REPLICAS`] replicas.
    pub fn summary(&self, seed: u64) -> CycleSummary {
        let fr = self.c1_fractions();
        let with_ci = fr.len() >= MIN_CI_REPLICAS;
        let tail = DELTA_GRID
            .iter()
            .map(|&delta| {
                let ind: Vec<f64> = fr.iter().map(|&f| (f >= delta) as u8 as f64).collect();
                TailProbability {
                    delta,
                    prob: self.tail_probability(delta),
                    ci: with_ci.then(|| basic_bootstrap_ci(&ind, mean, seed, "ci-tail")),
                }
            })
            .collect();
        CycleSummary {
            n: self.n,
            lambda: self.lambda,
            theta: self.theta,
            replicas: self.records.len(),
            mean_ell: mean(
                &self
                    .records
                    .iter()
                    .map(|r| r.ell as f64)
                    .collect::<Vec<_>>(),
            ),
            mean_c1_frac: mean(&fr),
            mean_c1_frac_ci: with_ci.then(|| basic_bootstrap_ci(&fr, mean, seed, "ci-mean")),
            median_c1_frac: median(&fr),
            median_c1_frac_ci: with_ci.then(|| basic_bootstrap_ci(&fr, median, seed, "ci-median")),
            tail,
            ess_ell: self.ess_ell,
            telemetry: self.telemetry,
        }
    }

    /// One row per replica: `replica,n,lambda,theta,ell,c1,c2,c1_over_n`.
    pub fn write_csv_rows<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.replica,
                self.n,
                fmt_float(self.lambda),
                fmt_float(self.theta),
                r.ell,
                r.c1,
                r.c2,
                fmt_float(r.c1 as f64 / self.n as f64)
            )?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        self.write_csv_rows(w)
    }
}

pub const CSV_HEADER: &str = "replica,n,lambda,theta,ell,c1,c2,c1_over_n";

/// Runs `f` on a pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Copy)]
pub struct ExperimentOptions {
    pub replicas: usize,
    pub sampler: SamplerKind,
    /// MCMC chains; replica `i` is sample `i / chains` of chain `i % chains`.
    /// 0 means one chain per replica.
    pub chains: usize,
    pub threads: usize,
}

/// Per-replica outputs of [`run_replicas`], ordered by replica index.
#[derive(Debug, Clone)]
pub struct ReplicaRun<T> {
    pub outputs: Vec<T>,
    pub telemetry: Option<Telemetry>,
    pub ess_ell: Option<f64>,
}

/// Draws `opts.replicas` samples on `K_n` with the selected sampler and maps
/// each through `f(replica, config, decomposition)`.
///
/// Rejection replica `i` uses stream `(seed, "replica", i)`. MCMC chain `c`
/// is seeded with `derive_seed(seed, "chain", c)`. Results depend only on
/// `config`, `opts.replicas`, `opts.sampler` and `opts.chains`, never on
/// `opts.threads`.
pub fn run_replicas<T, F>(
    config: &SamplerConfig,
    opts: ExperimentOptions,
    f: F,
) -> Result<ReplicaRun<T>>
where
    T: Send,
    F: Fn(usize, &CrossConfig, &CycleDecomposition) -> Result<T> + Sync,
{
    config.validate()?;
    if opts.replicas == 0 {
        return Err(Error::InvalidConfig("replicas must be positive".into()));
    }
    let beta = config.beta();
    let graph = FiniteGraph::complete(config.n);
    match opts.sampler {
        SamplerKind::Rejection => {
            let outputs = with_threads(opts.threads, || {
                (0..opts.replicas)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = stream(config.seed, "replica", i as u64);
                        let (cfg, d) = rejection_sample(&graph, beta, &config.weight, &mut rng)?;
                        f(i, &cfg, &d)
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            Ok(ReplicaRun {
                outputs,
                telemetry: None,
                ess_ell: None,
            })
        }
        SamplerKind::Mcmc => {
            let chains = if opts.chains == 0 {
                opts.replicas
            } else {
                opts.chains.min(opts.replicas)
            };
            let per_chain = with_threads(opts.threads, || {
                (0..chains)
                    .into_par_iter()
                    .map(|c| {
                        let cfg = config.with_seed(derive_seed(config.seed, "chain", c as u64));
                        let mut chain = McmcChain::new(&cfg)?;
                        let mut outs = Vec::new();
                        let mut ell = Vec::new();
                        let mut i = c;
                        while i < opts.replicas {
                            let s = chain.next_sample()?;
                            let d = s.decomposition();
                            ell.push(d.count() as f64);
                            outs.push((i, f(i, &s.config(), &d)?));
                            i += chains;
                        }
                        Ok((outs, chain.telemetry(), effective_sample_size(&ell)))
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            let mut tel = Telemetry::default();
            let mut ess = 0.0;
            let mut indexed = Vec::with_capacity(opts.replicas);
            for (outs, t, e) in per_chain {
                tel.merge(&t);
                ess += e;
                indexed.extend(outs);
            }
            indexed.sort_by_key(|(i, _)| *i);
            Ok(ReplicaRun {
                outputs: indexed.into_iter().map(|(_, o)| o).collect(),
                telemetry: Some(tel),
                ess_ell: Some(ess),
            })
        }
    }
}

/// Largest-cycle statistics on `K_n` from `replicas` draws of the selected
/// sampler.
pub fn largest_cycle_experiment(
    config: &SamplerConfig,
    opts: ExperimentOptions,
) -> Result<CycleStats> {
    let run = run_replicas(config, opts, |i, _, d| {
        Ok(ReplicaRecord::from_decomposition(i, d))
    })?;
    Ok(CycleStats::from_run(config, run))
}

/// Cycle statistics of `phi_tilde o sigma_t` with `sigma_t` an unweighted
/// interchange sample at `t = lambda / n`.
pub fn twisted_interchange_experiment(
    phi_tilde: &Permutation,
    lambda: f64,
    replicas: usize,
    seed: u64,
    threads: usize,
) -> Result<CycleStats> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let n = phi_tilde.len();
    let graph = FiniteGraph::complete(n);
    let t = lambda / n as f64;
    let records = with_threads(threads, || {
        (0..replicas)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, "twisted", i as u64);
                let sigma = compose(&sample_crosses(&graph, t, &mut rng), n)?;
                let d = cycle_decompose(&phi_tilde.after(&sigma));
                Ok(ReplicaRecord::from_decomposition(i, &d))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(CycleStats {
        n,
        lambda,
        theta: 1.0,
        records,
        telemetry: None,
        ess_ell: None,
    })
}

/// Graph on `V` whose components always contain the cycles of `sigma_t o phi`.
#[derive(Debug, Clone)]
pub struct TranspositionGraph {
    base_edges: Vec<(usize, usize)>,
    dynamic_edges: Vec<(usize, usize)>,
    parent: Vec<usize>,
    size: Vec<usize>,
    image: Vec<usize>,
    inverse: Vec<usize>,
}

impl TranspositionGraph {
    /// Base edges `{x_i, x_(i+1)}` along each cycle `(x_1 ... x_m)` of `phi`.
    pub fn new(phi: &Permutation) -> Self {
        let n = phi.len();
        let mut g = Self {
            base_edges: Vec::new(),
            dynamic_edges: Vec::new(),
            parent: (0..n).collect(),
            size: vec![1; n],
            image: phi.image().to_vec(),
            inverse: phi.inverse().image().to_vec(),
        };
        for c in cycle_decompose(phi).cycles() {
            for w in c.windows(2) {
                g.base_edges.push((w[0], w[1]));
                g.union(w[0], w[1]);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn base_edges(&self) -> &[(usize, usize)] {
        &self.base_edges
    }

    pub fn dynamic_edges(&self) -> &[(usize, usize)] {
        &self.dynamic_edges
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut y = x;
        while self.parent[y] != root {
            let next = self.parent[y];
            self.parent[y] = root;
            y = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }

    pub fn component_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    pub fn component_count(&mut self) -> usize {
        (0..self.n()).filter(|&x| self.find(x) == x).count()
    }

    /// The current permutation `sigma_t o phi`.
    pub fn current(&self) -> Permutation {
        Permutation::from_image(self.image.clone()).expect("maintained as a bijection")
    }

    /// Applies the transposition `(x y)` after the current permutation.
    pub fn apply(&mut self, x: usize, y: usize) {
        self.dynamic_edges.push((x, y));
        self.union(x, y);
        self.inverse.swap(x, y);
        self.image[self.inverse[x]] = x;
        self.image[self.inverse[y]] = y;
    }

    /// Whether the cycle through `x` lies in a single component.
    pub fn cycle_contained(&mut self, x: usize) -> bool {
        let r = self.find(x);
        let mut z = self.image[x];
        while z != x {
            if self.find(z) != r {
                return false;
            }
            z = self.image[z];
        }
        true
    }

    /// Applies `(x y)` and checks containment of the one or two cycles it
    /// touched.
    pub fn apply_checked(&mut self, x: usize, y: usize) -> bool {
        self.apply(x, y);
        self.cycle_contained(x) && self.cycle_contained(y)
    }

    /// Containment for every cycle.
    pub fn check_all(&mut self) -> bool {
        let d = cycle_decompose(&self.current());
        d.cycles().iter().all(|c| {
            let r = self.find(c[0]);
            c.iter().all(|&z| self.find(z) == r)
        })
    }
}

/// Builds the graph for `phi` and applies the crosses in time order. Returns
/// an error if a step breaks cycle containment.
pub fn build_transposition_graph(
    phi: &Permutation,
    crosses: &CrossConfig,
) -> Result<TranspositionGraph> {
    let mut g = TranspositionGraph::new(phi);
    for c in crosses.crosses() {
        if c.y >= g.n() {
            return Err(Error::VertexOutOfRange {
                vertex: c.y + 1,
                n: g.n(),
            });
        }
        if !g.apply_checked(c.x, c.y) {
            return Err(Error::Invariant(format!(
                "cycle containment broken at t = {}",
                c.t
            )));
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VertexMass {
    pub k: usize,
    pub mass_cycles: usize,
    pub mass_components: usize,
}

impl VertexMass {
    /// `|V_components(k) \ V_cycles(k)|`.
    pub fn defect(&self) -> usize {
        self.mass_components - self.mass_cycles
    }
}

/// Vertices in cycles of size `>= k` and in components of size `>= k`.
pub fn vertex_mass(graph: &mut TranspositionGraph, k: usize) -> Result<VertexMass> {
    let n = graph.n();
    if k == 0 || k > n {
        return Err(Error::Precondition(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let d = cycle_decompose(&graph.current());
    let mass_cycles = d.cycles().iter().map(Vec::len).filter(|&s| s >= k).sum();
    let mass_components = (0..n).filter(|&x| graph.component_size(x) >= k).count();
    Ok(VertexMass {
        k,
        mass_cycles,
        mass_components,
    })
}

/// Mean vertex-mass defect of `sigma_t o phi` over `replicas` runs, with
/// `phi` uniform and `sigma_t` unweighted on `K_n`.
pub fn vertex_mass_defect_experiment(
    n: usize,
    t: f64,
    k: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<VertexMass>> {
    let graph = FiniteGraph::complete(n);
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "vertex-mass", i as u64);
            let mut image: Vec<usize> = (0..n).collect();
            image.shuffle(&mut rng);
            let phi = Permutation::from_image(image)?;
            let crosses = sample_crosses(&graph, t, &mut rng);
            let mut g = build_transposition_graph(&phi, &crosses)?;
            vertex_mass(&mut g, k)
        })
        .collect()
}

fn require(got: usize) -> Result<()> {
    if got < MIN_TEST_SAMPLES {
        return Err(Error::Underpowered {
            got,
            need: MIN_TEST_SAMPLES,
        });
    }
    Ok(())
}

/// Asymptotic Kolmogorov tail `P(K > x)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestReport> {
    require(a.len().min(b.len()))?;
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let sq = ne.sqrt();
    let p_value = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
    Ok(TestReport {
        statistic: d,
        p_value,
        n_samples: x.len() + y.len(),
        parameters: serde_json::json!({"test": "two-sample KS", "n_a": x.len(), "n_b": y.len()}),
    })
}

/// Chi-square goodness of fit of integer observations to Poisson(`mean`).
/// Cells are `0..=m` plus a tail cell, with `m` chosen so every cell expects
/// at least 5 observations.
pub fn chi_square_poisson(observations: &[u64], mean_param: f64) -> Result<TestReport> {
    require(observations.len())?;
    let p = Poisson::new(mean_param).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let total = observations.len() as f64;
    let mut cells: Vec<(u64, u64, f64)> = Vec::new(); // (lo, hi inclusive, prob)
    let mut lo = 0u64;
    let mut acc = 0.0;
    let mut k = 0u64;
    loop {
        acc += p.pmf(k);
        let rest = p.sf(k);
        if acc * total >= 5.0 && rest * total >= 5.0 {
            cells.push((lo, k, acc));
            lo = k + 1;
            acc = 0.0;
        } else if rest * total < 5.0 {
            cells.push((lo, u64::MAX, acc + rest));
            break;
        }
        k += 1;
    }
    if cells.len() < 2 {
        return Err(Error::Underpowered {
            got: observations.len(),
            need: observations.len() + 1,
        });
    }
    let mut counts = vec![0u64; cells.len()];
    for &o in observations {
        let idx = cells
            .iter()
            .position(|&(l, h, _)| o >= l && o <= h)
            .expect("cells cover N");
        counts[idx] += 1;
    }
    let statistic: f64 = cells
        .iter()
        .zip(&counts)
        .map(|(&(_, _, q), &c)| (c as f64 - q * total).powi(2) / (q * total))
        .sum();
    let df = (cells.len() - 1) as f64;
    let p_value = ChiSquared::new(df)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN);
    Ok(TestReport {
        statistic,
        p_value,
        n_samples: observations.len(),
        parameters: serde_json::json!({"test": "chi-square vs Poisson", "mean": mean_param, "cells": cells.len()}),
    })
}

/// Two-sample chi-square homogeneity test on categorical data. Categories
/// with fewer than 5 pooled observations are merged into one cell.
pub fn chi_square_two_sample<K: Ord + Clone>(a: &[K], b: &[K]) -> Result<TestReport> {
    require(a.len().min(b.len()))?;
    let mut table: BTreeMap<K, (u64, u64)> = BTreeMap::new();
    for k in a {
        table.entry(k.clone()).or_default().0 += 1;
    }
    for k in b {
        table.entry(k.clone()).or_default().1 += 1;
    }
    let mut cells: Vec<(u64, u64)> = Vec::new();
    let mut rare = (0u64, 0u64);
    for &(ca, cb) in table.values() {
        if ca + cb < 5 {
            rare.0 += ca;
            rare.1 += cb;
        } else {
            cells.push((ca, cb));
        }
    }
    if rare.0 + rare.1 > 0 {
        cells.push(rare);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let statistic: f64 = cells
        .iter()
        .map(|&(ca, cb)| {
            let row = (ca + cb) as f64;
            let ea = row * na / n;
            let eb = row * nb / n;
            (ca as f64 - ea).powi(2) / ea + (cb as f64 - eb).powi(2) / eb
        })
        .sum();
    let df = cells.len().saturating_sub(1).max(1) as f64;
    let p_value = ChiSquared::new(df)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN);
    Ok(TestReport {
        statistic,
        p_value,
        n_samples: a.len() + b.len(),
        parameters: serde_json::json!({"test": "two-sample chi-square", "cells": cells.len()}),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvReport {
    pub distance: f64,
    pub ci: (f64, f64),
    pub n_a: usize,
    pub n_b: usize,
    pub support: usize,
}

/// Plug-in total-variation distance between two empirical laws, with a
/// basic bootstrap 95% interval.
pub fn total_variation<K: Ord + Clone>(a: &[K], b: &[K], seed: u64) -> Result<TvReport> {
    require(a.len().min(b.len()))?;
    let mut keys: BTreeMap<K, usize> = BTreeMap::new();
    for k in a.iter().chain(b) {
        let next = keys.len();
        keys.entry(k.clone()).or_insert(next);
    }
    let ia: Vec<usize> = a.iter().map(|k| keys[k]).collect();
    let ib: Vec<usize> = b.iter().map(|k| keys[k]).collect();
    let m = keys.len();
    let tv = |xa: &mut dyn Iterator<Item = usize>, xb: &mut dyn Iterator<Item = usize>| {
        let mut ca = vec![0u64; m];
        let mut cb = vec![0u64; m];
        xa.for_each(|i| ca[i] += 1);
        xb.for_each(|i| cb[i] += 1);
        0.5 * ca
            .iter()
            .zip(&cb)
            .map(|(&x, &y)| (x as f64 / ia.len() as f64 - y as f64 / ib.len() as f64).abs())
            .sum::<f64>()
    };
    let distance = tv(&mut ia.iter().copied(), &mut ib.iter().copied());
    let mut boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, "tv-bootstrap", r as u64);
            let mut ra = (0..ia.len())
                .map(|_| ia[rng.gen_range(0..ia.len())])
                .collect::<Vec<_>>()
                .into_iter();
            let mut rb = (0..ib.len())
                .map(|_| ib[rng.gen_range(0..ib.len())])
                .collect::<Vec<_>>()
                .into_iter();
            tv(&mut ra, &mut rb)
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    let ci = (
        (2.0 * distance - quantile_sorted(&boots, 0.975)).max(0.0),
        2.0 * distance - quantile_sorted(&boots, 0.025),
    );
    Ok(TvReport {
        distance,
        ci,
        n_a: a.len(),
        n_b: b.len(),
        support: m,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RecolouringCheck {
    pub mean_red: f64,
    pub expected_mean: f64,
    pub variance_red: f64,
    pub exact_variance: f64,
    pub variance_bound: f64,
    pub z_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColouringDiagnostics {
    pub theta: f64,
    pub recolourings: usize,
    pub checks: Vec<RecolouringCheck>,
    pub max_abs_z: f64,
    pub variance_bound_holds: bool,
}

/// For each decomposition, recolours its cycles `recolourings` times and
/// compares the red vertex count `N` with `E N = r n` and `Var N <= |C1| n`.
pub fn colouring_diagnostics(
    decomps: &[CycleDecomposition],
    theta: f64,
    recolourings: usize,
    seed: u64,
) -> Result<ColouringDiagnostics> {
    require(recolourings)?;
    let r = 1.0 / theta;
    let checks = decomps
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let mut rng = stream(seed, "recolour", i as u64);
            let n = d.n() as f64;
            let counts: Vec<f64> = (0..recolourings)
                .map(|_| Ok(colour_cycles(d, theta, &mut rng)?.red_vertices().len() as f64))
                .collect::<Result<_>>()?;
            let m = mean(&counts);
            let var =
                counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (recolourings - 1) as f64;
            let exact_variance =
                r * (1.0 - r) * d.sizes().iter().map(|&s| (s * s) as f64).sum::<f64>();
            let z_mean = if exact_variance > 0.0 {
                (m - r * n) / (exact_variance / recolourings as f64).sqrt()
            } else {
                0.0
            };
            Ok(RecolouringCheck {
                mean_red: m,
                expected_mean: r * n,
                variance_red: var,
                exact_variance,
                variance_bound: d.largest() as f64 * n,
                z_mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_z = checks.iter().map(|c| c.z_mean.abs()).fold(0.0, f64::max);
    let variance_bound_holds = checks.iter().all(|c| c.variance_red <= c.variance_bound);
    Ok(ColouringDiagnostics {
        theta,
        recolourings,
        checks,
        max_abs_z,
        variance_bound_holds,
    })
}

pub const RED_POISSON_SLABS: usize = 4;
pub const RED_POISSON_BINS: usize = 20;

fn colour_and_twist(
    cfg: &CrossConfig,
    d: &CycleDecomposition,
    colour_theta: f64,
    seed: u64,
    replica: usize,
) -> Result<(ColouringState, TwistData)> {
    let loops = build_loops(cfg, d.n())?;
    let mut rng = stream(seed, "colour", replica as u64);
    let colouring = colour_cycles(d, colour_theta, &mut rng)?;
    let state = classify_crosses(cfg, &loops, &colouring);
    let twist = compute_twist(&state.mixed_crosses, &state.red_mask())?;
    Ok((state, twist))
}

/// Samples configurations, colours cycles red with probability
/// `1 / colour_theta`, and tests the red crosses for Poisson counts with the
/// red-region measure as mean.
pub fn red_poisson_experiment(
    config: &SamplerConfig,
    opts: ExperimentOptions,
    colour_theta: f64,
) -> Result<TestReport> {
    let seed = config.seed;
    let run = run_replicas(config, opts, |i, cfg, d| {
        colour_and_twist(cfg, d, colour_theta, seed, i)
    })?;
    let graph = FiniteGraph::complete(config.n);
    let mut report = verify_red_poisson(
        &run.outputs,
        &graph,
        RED_POISSON_SLABS,
        RED_POISSON_BINS,
        seed,
    )?;
    report.parameters["n"] = config.n.into();
    report.parameters["lambda"] = config.lambda.into();
    report.parameters["theta"] = config.weight.theta_max().into();
    report.parameters["colour_theta"] = colour_theta.into();
    Ok(report)
}

/// Red-restricted permutation key: the red mask at time 0 and the image.
pub type RedPermutationKey = (Vec<bool>, Vec<usize>);

#[derive(Debug, Clone, Serialize)]
pub struct TwistReport {
    /// TV between the laws of `phi` as permutations of `V`.
    pub tv: TvReport,
    /// TV between the joint laws of `(R_0, phi)`; more cells, so more
    /// plug-in bias at equal sample size.
    pub tv_with_red_set: TvReport,
}

/// For each sample, compares `pi` restricted to the red set with
/// `phi~ o sigma_beta`, where `sigma_beta` comes from a fresh auxiliary
/// configuration on the red pairs. Both are the identity off the red set.
pub fn twist_equivalence_experiment(
    config: &SamplerConfig,
    opts: ExperimentOptions,
    colour_theta: f64,
) -> Result<TwistReport> {
    let seed = config.seed;
    let run = run_replicas(config, opts, |i, cfg, d| {
        let (state, twist) = colour_and_twist(cfg, d, colour_theta, seed, i)?;
        let mask = state.red_mask();
        let pi = compose(cfg, d.n())?;
        let direct: Vec<usize> = (0..d.n())
            .map(|x| if mask[x] { pi.apply(x) } else { x })
            .collect();
        let xi = sample_xi(&twist, &mut stream(seed, "xi", i as u64));
        let (_, phi) = reconstruct_red(&twist, &xi)?;
        Ok(((mask.clone(), direct), (mask, phi.image().to_vec())))
    })?;
    let (direct, rebuilt): (Vec<RedPermutationKey>, Vec<RedPermutationKey>) =
        run.outputs.into_iter().unzip();
    let perm = |v: &[RedPermutationKey]| v.iter().map(|k| k.1.clone()).collect::<Vec<_>>();
    Ok(TwistReport {
        tv: total_variation(&perm(&direct), &perm(&rebuilt), seed)?,
        tv_with_red_set: total_variation(&direct, &rebuilt, seed)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCheck {
    pub x: usize,
    pub y: usize,
    pub quantum: f64,
    pub quarter_estimate: f64,
    pub quarter_se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantumCheck {
    pub n: usize,
    pub beta: f64,
    pub replicas: usize,
    pub pairs: Vec<PairCheck>,
    /// `|quantum - analytic / 4|` at `n = 2`.
    pub exact_error: Option<f64>,
}

impl QuantumCheck {
    pub fn passes(&self, max_z: f64, exact_tol: f64) -> bool {
        self.pairs.iter().all(|p| p.z.abs() <= max_z)
            && self.exact_error.is_none_or(|e| e <= exact_tol)
    }
}

/// Compares `<S^3_x S^3_y>` with a quarter of the rejection estimate of
/// `P_2(x <-> y)` on `K_n` for every pair (1-indexed in the report).
pub fn quantum_cross_check(
    n: usize,
    beta: f64,
    replicas: usize,
    seed: u64,
    threads: usize,
) -> Result<QuantumCheck> {
    let graph = FiniteGraph::complete(n);
    let model = QuantumModel::new(&graph, beta)?;
    let mut config = SamplerConfig::new(n, beta * n as f64, WeightSpec::constant(2.0)?, seed);
    config.burn_in_sweeps = 0;
    let opts = ExperimentOptions {
        replicas,
        sampler: SamplerKind::Rejection,
        chains: 0,
        threads,
    };
    let run = run_replicas(&config, opts, |_, _, d| {
        Ok((0..n).map(|x| d.cycle_of(x)).collect::<Vec<_>>())
    })?;
    let m = replicas as f64;
    let mut pairs = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            let hits = run.outputs.iter().filter(|c| c[x] == c[y]).count() as f64;
            let p = hits / m;
            let se = 0.25 * (p * (1.0 - p) / m).sqrt();
            let quantum = heisenberg_correlation(&model, x, y)?;
            let est = 0.25 * p;
            pairs.push(PairCheck {
                x: x + 1,
                y: y + 1,
                quantum,
                quarter_estimate: est,
                quarter_se: se,
                z: if se > 0.0 {
                    (est - quantum) / se
                } else if est == quantum {
                    0.0
                } else {
                    f64::INFINITY
                },
            });
        }
    }
    let exact_error = if n == 2 {
        Some(
            (heisenberg_correlation(&model, 0, 1)? - 0.25 * analytic_two_point_n2(2.0, beta)).abs(),
        )
    } else {
        None
    };
    Ok(QuantumCheck {
        n,
        beta,
        replicas,
        pairs,
        exact_error,
    })
}
