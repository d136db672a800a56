//! Samplers for the cycle-weighted measure.
//!
//! The target has density `prod_loops theta(loop) / Z` with respect to
//! independent rate-1 Poisson processes on the edges. For constant weight this
//! is `theta^l / Z`.
//!
//! [`rejection_sample`] is exact and practical for small `n`. [`McmcChain`]
//! runs a birth/death Metropolis chain whose state keeps the permutation and
//! its cycle labels up to date incrementally: adding or removing a cross at
//! time `t` on `{x, y}` multiplies `pi` on the right by `(u v)`, where `u`, `v`
//! are the strands occupying `x`, `y` just below `t`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{
    compose, cycle_decompose, open_uniform, sample_crosses, Cross, CrossConfig, CycleDecomposition,
    FiniteGraph, Permutation,
};
use crate::seed::{stream, SimRng};

const WEIGHT_SLACK: f64 = 1e-12;

/// Loop weight as a function of a loop's vertical length.
#[derive(Clone)]
pub enum WeightSpec {
    Constant {
        theta: f64,
    },
    /// `theta(loop) = 2 cosh(h * length)`, bounded by `2 cosh(h * lambda)`.
    ExternalField {
        h: f64,
        theta_max: f64,
    },
    PerLoop {
        weight: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        theta_max: f64,
    },
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { theta } => write!(f, "Constant({theta})"),
            Self::ExternalField { h, theta_max } => {
                write!(f, "ExternalField(h={h}, theta_max={theta_max})")
            }
            Self::PerLoop { theta_max, .. } => write!(f, "PerLoop(theta_max={theta_max})"),
        }
    }
}

impl WeightSpec {
    pub fn constant(theta: f64) -> Result<Self> {
        if theta.is_nan() || theta < 1.0 {
            return Err(Error::ThetaBelowOne(theta));
        }
        Ok(Self::Constant { theta })
    }

    /// External-field weight on `K_n` with `beta = lambda / n`, where loop
    /// lengths never exceed `lambda`.
    pub fn external_field(h: f64, lambda: f64) -> Self {
        Self::ExternalField {
            h,
            theta_max: 2.0 * (h * lambda).cosh(),
        }
    }

    pub fn per_loop(weight: impl Fn(f64) -> f64 + Send + Sync + 'static, theta_max: f64) -> Self {
        Self::PerLoop {
            weight: Arc::new(weight),
            theta_max,
        }
    }

    pub fn theta_max(&self) -> f64 {
        match self {
            Self::Constant { theta } => *theta,
            Self::ExternalField { theta_max, .. } | Self::PerLoop { theta_max, .. } => *theta_max,
        }
    }

    /// Weight of a loop of vertical length `length`.
    pub fn weight(&self, length: f64) -> Result<f64> {
        let w = match self {
            Self::Constant { theta } => return Ok(*theta),
            Self::ExternalField { h, .. } => 2.0 * (h * length).cosh(),
            Self::PerLoop { weight, .. } => weight(length),
        };
        let theta_max = self.theta_max();
        if !(w >= 1.0 - WEIGHT_SLACK && w <= theta_max * (1.0 + WEIGHT_SLACK)) {
            return Err(Error::WeightOutOfRange {
                weight: w,
                theta_max,
                length,
            });
        }
        Ok(w)
    }

    fn ln_cycle_weight(&self, size: usize, beta: f64) -> Result<f64> {
        match self {
            Self::Constant { theta } => Ok(theta.ln()),
            _ => Ok(self.weight(beta * size as f64)?.ln()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let theta_max = self.theta_max();
        if theta_max.is_nan() || theta_max < 1.0 {
            return Err(Error::ThetaBelowOne(theta_max));
        }
        Ok(())
    }
}

/// Effect of one transposition on the cycle structure; sizes in vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopChange {
    Merge { a: usize, b: usize },
    Split { a: usize, b: usize },
}

impl LoopChange {
    pub fn delta_cycles(&self) -> i32 {
        match self {
            Self::Merge { .. } => -1,
            Self::Split { .. } => 1,
        }
    }
}

/// Ratio of loop-weight products after/before, from the affected loops only.
pub fn loop_weight_ratio(change: LoopChange, beta: f64, weight: &WeightSpec) -> Result<f64> {
    Ok(ln_loop_weight_ratio(change, beta, weight)?.exp())
}

fn ln_loop_weight_ratio(change: LoopChange, beta: f64, weight: &WeightSpec) -> Result<f64> {
    if let WeightSpec::Constant { theta } = weight {
        return Ok(change.delta_cycles() as f64 * theta.ln());
    }
    let lw = |s: usize| weight.ln_cycle_weight(s, beta);
    Ok(match change {
        LoopChange::Merge { a, b } => lw(a + b)? - lw(a)? - lw(b)?,
        LoopChange::Split { a, b } => lw(a)? + lw(b)? - lw(a + b)?,
    })
}

/// `sum over cycles of ln theta(beta * |C|)`.
pub fn log_weight_of(decomp: &CycleDecomposition, beta: f64, weight: &WeightSpec) -> Result<f64> {
    decomp
        .sizes()
        .into_iter()
        .map(|s| weight.ln_cycle_weight(s, beta))
        .sum()
}

/// Exact sampler: draw from the unweighted process and accept with
/// probability `prod theta(loop) / theta_max^n` (at most 1 since `l <= n`).
pub fn rejection_sample<R: Rng + ?Sized>(
    graph: &FiniteGraph,
    beta: f64,
    weight: &WeightSpec,
    rng: &mut R,
) -> Result<(CrossConfig, CycleDecomposition)> {
    weight.validate()?;
    let ln_max = graph.n() as f64 * weight.theta_max().ln();
    loop {
        let cfg = sample_crosses(graph, beta, rng);
        let decomp = cycle_decompose(&compose(&cfg, graph.n())?);
        let ln_accept = log_weight_of(&decomp, beta, weight)? - ln_max;
        if ln_accept >= 0.0 || rng.gen::<f64>() < ln_accept.exp() {
            return Ok((cfg, decomp));
        }
    }
}

/// Chain state with incrementally maintained permutation and cycle labels.
#[derive(Debug, Clone)]
pub struct ChainState {
    n: usize,
    beta: f64,
    crosses: Vec<Cross>,
    times: HashSet<u64>,
    // per vertex: (time, partner), sorted by time
    marks: Vec<Vec<(f64, usize)>>,
    pi: Vec<usize>,
    label: Vec<usize>,
    label_size: Vec<usize>,
    free_labels: Vec<usize>,
    cycles: usize,
    log_weight: f64,
}

/// Analysis of toggling one cross.
#[derive(Debug, Clone, Copy)]
struct Toggle {
    u: usize,
    v: usize,
    change: LoopChange,
    // split: the piece containing `smaller_root` has size `a`
    smaller_root: usize,
}

impl ChainState {
    pub fn empty(n: usize, beta: f64, weight: &WeightSpec) -> Result<Self> {
        Ok(Self {
            n,
            beta,
            crosses: Vec::new(),
            times: HashSet::new(),
            marks: vec![Vec::new(); n],
            pi: (0..n).collect(),
            label: (0..n).collect(),
            label_size: vec![1; n],
            free_labels: Vec::new(),
            cycles: n,
            log_weight: n as f64 * weight.ln_cycle_weight(1, beta)?,
        })
    }

    pub fn from_config(config: &CrossConfig, n: usize, weight: &WeightSpec) -> Result<Self> {
        let mut s = Self::empty(n, config.beta(), weight)?;
        for c in config.crosses() {
            let tg = s.analyse(c.x, c.y, c.t);
            s.log_weight += ln_loop_weight_ratio(tg.change, s.beta, weight)?;
            s.apply_birth(*c, tg);
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cross_count(&self) -> usize {
        self.crosses.len()
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn largest_cycle(&self) -> usize {
        self.label_size.iter().copied().max().unwrap_or(0)
    }

    pub fn permutation(&self) -> Permutation {
        Permutation::from_image(self.pi.clone()).expect("chain keeps a bijection")
    }

    pub fn decomposition(&self) -> CycleDecomposition {
        cycle_decompose(&self.permutation())
    }

    pub fn config(&self) -> CrossConfig {
        let mut crosses = self.crosses.clone();
        crosses.sort_by(|a, b| a.t.total_cmp(&b.t));
        CrossConfig::from_sorted_unchecked(self.beta, crosses)
    }

    pub fn same_cycle(&self, x: usize, y: usize) -> bool {
        self.label[x] == self.label[y]
    }

    /// Strand occupying `x` just below time `t`.
    fn strand_below(&self, x: usize, t: f64) -> usize {
        let (mut cur, mut time) = (x, t);
        loop {
            let m = &self.marks[cur];
            let i = m.partition_point(|&(s, _)| s < time);
            if i == 0 {
                return cur;
            }
            let (s, w) = m[i - 1];
            time = s;
            cur = w;
        }
    }

    fn analyse(&self, x: usize, y: usize, t: f64) -> Toggle {
        let u = self.strand_below(x, t);
        let v = self.strand_below(y, t);
        if self.label[u] != self.label[v] {
            let (a, b) = (
                self.label_size[self.label[u]],
                self.label_size[self.label[v]],
            );
            return Toggle {
                u,
                v,
                change: LoopChange::Merge { a, b },
                smaller_root: if a <= b { u } else { v },
            };
        }
        // pieces after pi -> pi ∘ (u v): {pi(v), ..., u} and {pi(u), ..., v}
        let total = self.label_size[self.label[u]];
        let (mut p, mut q) = (self.pi[v], self.pi[u]);
        let mut steps = 1;
        loop {
            if p == u {
                return Toggle {
                    u,
                    v,
                    change: LoopChange::Split {
                        a: steps,
                        b: total - steps,
                    },
                    smaller_root: u,
                };
            }
            if q == v {
                return Toggle {
                    u,
                    v,
                    change: LoopChange::Split {
                        a: steps,
                        b: total - steps,
                    },
                    smaller_root: v,
                };
            }
            p = self.pi[p];
            q = self.pi[q];
            steps += 1;
        }
    }

    fn transpose_right(&mut self, tg: Toggle) {
        let (u, v) = (tg.u, tg.v);
        match tg.change {
            LoopChange::Merge { .. } => {
                let keep = if tg.smaller_root == u {
                    self.label[v]
                } else {
                    self.label[u]
                };
                let drop = self.label[tg.smaller_root];
                let mut w = tg.smaller_root;
                loop {
                    self.label[w] = keep;
                    w = self.pi[w];
                    if w == tg.smaller_root {
                        break;
                    }
                }
                self.label_size[keep] += self.label_size[drop];
                self.label_size[drop] = 0;
                self.free_labels.push(drop);
                self.pi.swap(u, v);
                self.cycles -= 1;
            }
            LoopChange::Split { a, .. } => {
                self.pi.swap(u, v);
                let old = self.label[u];
                let fresh = self.free_labels.pop().unwrap_or_else(|| {
                    self.label_size.push(0);
                    self.label_size.len() - 1
                });
                let mut w = tg.smaller_root;
                loop {
                    self.label[w] = fresh;
                    w = self.pi[w];
                    if w == tg.smaller_root {
                        break;
                    }
                }
                self.label_size[fresh] = a;
                self.label_size[old] -= a;
                self.cycles += 1;
            }
        }
    }

    fn apply_birth(&mut self, c: Cross, tg: Toggle) {
        self.transpose_right(tg);
        for (v, w) in [(c.x, c.y), (c.y, c.x)] {
            let m = &mut self.marks[v];
            let i = m.partition_point(|&(s, _)| s < c.t);
            m.insert(i, (c.t, w));
        }
        self.times.insert(c.t.to_bits());
        self.crosses.push(c);
    }

    fn apply_death(&mut self, index: usize, tg: Toggle) -> Cross {
        let c = self.crosses.swap_remove(index);
        for v in [c.x, c.y] {
            let m = &mut self.marks[v];
            let i = m.partition_point(|&(s, _)| s < c.t);
            m.remove(i);
        }
        self.times.remove(&c.t.to_bits());
        self.transpose_right(tg);
        c
    }

    /// Recomputes everything from the cross list and compares.
    pub fn check_consistency(&self, weight: &WeightSpec) -> Result<()> {
        let cfg = self.config();
        let pi = compose(&cfg, self.n)?;
        if pi.image() != self.pi.as_slice() {
            return Err(Error::Sampler("cached permutation is stale".into()));
        }
        let d = cycle_decompose(&pi);
        if d.count() != self.cycles {
            return Err(Error::Sampler("cached cycle count is stale".into()));
        }
        for cyc in d.cycles() {
            let l = self.label[cyc[0]];
            if cyc.iter().any(|&v| self.label[v] != l) || self.label_size[l] != cyc.len() {
                return Err(Error::Sampler("cycle labels are stale".into()));
            }
        }
        for (v, m) in self.marks.iter().enumerate() {
            let deg = cfg.crosses().iter().filter(|c| c.touches(v)).count();
            if m.len() != deg || m.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::Sampler(format!(
                    "marks at vertex {} are stale",
                    v + 1
                )));
            }
        }
        let lw = log_weight_of(&d, self.beta, weight)?;
        if (lw - self.log_weight).abs() > 1e-8 * (1.0 + lw.abs()) {
            return Err(Error::Sampler(format!(
                "log weight drifted: cached {} vs {}",
                self.log_weight, lw
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MoveKind {
    Birth,
    Death,
    Shift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
}

/// Proposal mix. Birth and death share `1 - shift` equally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveProbs {
    pub shift: f64,
}

impl Default for MoveProbs {
    fn default() -> Self {
        Self { shift: 0.0 }
    }
}

fn metropolis<R: Rng + ?Sized>(ln_ratio: f64, rng: &mut R) -> bool {
    ln_ratio >= 0.0 || rng.gen::<f64>() < ln_ratio.exp()
}

/// One Metropolis-Hastings move targeting `prod theta(loop)` against the
/// Poisson reference.
pub fn mcmc_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    graph: &FiniteGraph,
    weight: &WeightSpec,
    moves: MoveProbs,
    rng: &mut R,
) -> Result<StepOutcome> {
    let mass = state.beta * graph.edge_count() as f64;
    let k = state.crosses.len();
    let roll: f64 = rng.gen();
    if roll < moves.shift {
        if k == 0 {
            return Ok(StepOutcome {
                kind: MoveKind::Shift,
                accepted: false,
            });
        }
        let i = rng.gen_range(0..k);
        let c = state.crosses[i];
        let t_new = open_uniform(state.beta, rng);
        let tg = state.analyse(c.x, c.y, c.t);
        let ln_out = ln_loop_weight_ratio(tg.change, state.beta, weight)?;
        state.apply_death(i, tg);
        if state.times.contains(&t_new.to_bits()) {
            let back = state.analyse(c.x, c.y, c.t);
            state.apply_birth(c, back);
            return Ok(StepOutcome {
                kind: MoveKind::Shift,
                accepted: false,
            });
        }
        let tg_in = state.analyse(c.x, c.y, t_new);
        let ln_in = ln_loop_weight_ratio(tg_in.change, state.beta, weight)?;
        let accepted = metropolis(ln_out + ln_in, rng);
        if accepted {
            state.apply_birth(Cross::new(c.x, c.y, t_new), tg_in);
            state.log_weight += ln_out + ln_in;
        } else {
            let back = state.analyse(c.x, c.y, c.t);
            state.apply_birth(c, back);
        }
        return Ok(StepOutcome {
            kind: MoveKind::Shift,
            accepted,
        });
    }
    if roll < moves.shift + (1.0 - moves.shift) / 2.0 {
        let (x, y) = graph.random_edge(rng);
        let t = open_uniform(state.beta, rng);
        if state.times.contains(&t.to_bits()) {
            return Ok(StepOutcome {
                kind: MoveKind::Birth,
                accepted: false,
            });
        }
        let tg = state.analyse(x, y, t);
        let ln_w = ln_loop_weight_ratio(tg.change, state.beta, weight)?;
        let accepted = metropolis(ln_w + (mass / (k + 1) as f64).ln(), rng);
        if accepted {
            state.apply_birth(Cross::new(x, y, t), tg);
            state.log_weight += ln_w;
        }
        Ok(StepOutcome {
            kind: MoveKind::Birth,
            accepted,
        })
    } else {
        if k == 0 {
            return Ok(StepOutcome {
                kind: MoveKind::Death,
                accepted: false,
            });
        }
        let i = rng.gen_range(0..k);
        let c = state.crosses[i];
        let tg = state.analyse(c.x, c.y, c.t);
        let ln_w = ln_loop_weight_ratio(tg.change, state.beta, weight)?;
        let accepted = metropolis(ln_w + (k as f64 / mass).ln(), rng);
        if accepted {
            state.apply_death(i, tg);
            state.log_weight += ln_w;
        }
        Ok(StepOutcome {
            kind: MoveKind::Death,
            accepted,
        })
    }
}

pub const DEFAULT_BURN_IN_SWEEPS: usize = 200;
pub const DEFAULT_THINNING_SWEEPS: usize = 5;

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub n: usize,
    pub lambda: f64,
    pub weight: WeightSpec,
    pub burn_in_sweeps: usize,
    pub thinning_sweeps: usize,
    pub seed: u64,
    pub moves: MoveProbs,
}

impl SamplerConfig {
    pub fn new(n: usize, lambda: f64, weight: WeightSpec, seed: u64) -> Self {
        Self {
            n,
            lambda,
            weight,
            burn_in_sweeps: DEFAULT_BURN_IN_SWEEPS,
            thinning_sweeps: DEFAULT_THINNING_SWEEPS,
            seed,
            moves: MoveProbs::default(),
        }
    }

    pub fn beta(&self) -> f64 {
        self.lambda / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Sampler(format!("n = {} < 2", self.n)));
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(Error::Sampler(format!("lambda = {}", self.lambda)));
        }
        if self.thinning_sweeps < 1 {
            return Err(Error::Sampler("thinning must be at least one sweep".into()));
        }
        if !(0.0..1.0).contains(&self.moves.shift) {
            return Err(Error::Sampler(format!(
                "shift probability {} outside [0, 1)",
                self.moves.shift
            )));
        }
        self.weight.validate()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// On-disk form of a sampler configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfigFile {
    pub n: usize,
    pub lambda: f64,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub field_h: Option<f64>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub thin: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub shift_prob: Option<f64>,
}

impl SamplerConfigFile {
    pub fn into_config(self) -> Result<SamplerConfig> {
        let weight = match (self.theta, self.field_h) {
            (Some(_), Some(_)) => {
                return Err(Error::Sampler(
                    "give either theta or field_h, not both".into(),
                ))
            }
            (_, Some(h)) => WeightSpec::external_field(h, self.lambda),
            (theta, None) => WeightSpec::constant(theta.unwrap_or(1.0))?,
        };
        let mut c = SamplerConfig::new(self.n, self.lambda, weight, self.seed.unwrap_or(0));
        if let Some(b) = self.burn_in {
            c.burn_in_sweeps = b;
        }
        if let Some(t) = self.thin {
            c.thinning_sweeps = t;
        }
        if let Some(p) = self.shift_prob {
            c.moves.shift = p;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Telemetry {
    pub birth_proposed: u64,
    pub birth_accepted: u64,
    pub death_proposed: u64,
    pub death_accepted: u64,
    pub shift_proposed: u64,
    pub shift_accepted: u64,
}

impl Telemetry {
    fn record(&mut self, o: StepOutcome) {
        let (p, a) = match o.kind {
            MoveKind::Birth => (&mut self.birth_proposed, &mut self.birth_accepted),
            MoveKind::Death => (&mut self.death_proposed, &mut self.death_accepted),
            MoveKind::Shift => (&mut self.shift_proposed, &mut self.shift_accepted),
        };
        *p += 1;
        *a += o.accepted as u64;
    }

    pub fn merge(&mut self, other: &Telemetry) {
        self.birth_proposed += other.birth_proposed;
        self.birth_accepted += other.birth_accepted;
        self.death_proposed += other.death_proposed;
        self.death_accepted += other.death_accepted;
        self.shift_proposed += other.shift_proposed;
        self.shift_accepted += other.shift_accepted;
    }

    pub fn birth_rate(&self) -> f64 {
        self.birth_accepted as f64 / self.birth_proposed.max(1) as f64
    }

    pub fn death_rate(&self) -> f64 {
        self.death_accepted as f64 / self.death_proposed.max(1) as f64
    }
}

/// A single chain on a fixed graph.
pub struct McmcChain {
    graph: FiniteGraph,
    weight: WeightSpec,
    moves: MoveProbs,
    state: ChainState,
    rng: SimRng,
    sweep_len: usize,
    thinning: usize,
    burn_in: usize,
    burned: bool,
    telemetry: Telemetry,
}

impl McmcChain {
    /// Chain on `K_n` seeded from `config.seed`.
    pub fn new(config: &SamplerConfig) -> Result<Self> {
        Self::on_graph(config, FiniteGraph::complete(config.n))
    }

    pub fn on_graph(config: &SamplerConfig, graph: FiniteGraph) -> Result<Self> {
        config.validate()?;
        if graph.n() != config.n || graph.edge_count() == 0 {
            return Err(Error::Sampler(
                "graph does not match n or has no edges".into(),
            ));
        }
        let beta = config.beta();
        let sweep_len = ((beta * graph.edge_count() as f64).ceil() as usize).max(1);
        Ok(Self {
            state: ChainState::empty(config.n, beta, &config.weight)?,
            graph,
            weight: config.weight.clone(),
            moves: config.moves,
            rng: stream(config.seed, "mcmc", 0),
            sweep_len,
            thinning: config.thinning_sweeps,
            burn_in: config.burn_in_sweeps,
            burned: false,
            telemetry: Telemetry::default(),
        })
    }

    pub fn sweep_len(&self) -> usize {
        self.sweep_len
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn telemetry(&self) -> Telemetry {
        self.telemetry
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        let o = mcmc_step(
            &mut self.state,
            &self.graph,
            &self.weight,
            self.moves,
            &mut self.rng,
        )?;
        self.telemetry.record(o);
        Ok(o)
    }

    pub fn sweep(&mut self) -> Result<()> {
        for _ in 0..self.sweep_len {
            self.step()?;
        }
        Ok(())
    }

    /// Runs burn-in on first call, then `thinning` sweeps, and returns the
    /// current state.
    pub fn next_sample(&mut self) -> Result<&ChainState> {
        if !self.burned {
            for _ in 0..self.burn_in {
                self.sweep()?;
            }
            self.burned = true;
        }
        for _ in 0..self.thinning {
            self.sweep()?;
        }
        Ok(&self.state)
    }
}

/// Burn-in, then one configuration every `thinning_sweeps` sweeps.
pub fn mcmc_sample(config: &SamplerConfig, count: usize) -> Result<(Vec<CrossConfig>, Telemetry)> {
    let mut chain = McmcChain::new(config)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(chain.next_sample()?.config());
    }
    Ok((out, chain.telemetry()))
}

/// Effective sample size from Geyer's initial positive sequence.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let m = series.len();
    if m < 4 {
        return m as f64;
    }
    let mean = series.iter().sum::<f64>() / m as f64;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
    if var <= 0.0 {
        return m as f64;
    }
    let rho = |lag: usize| {
        series[..m - lag]
            .iter()
            .zip(&series[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / (m as f64 * var)
    };
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < m {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (m as f64 / tau.max(1.0 / m as f64)).min(m as f64)
}
