//! Red/white colouring of loops, cross classification, and the twist.
//!
//! Each loop is coloured red with probability `1/theta`. Crosses whose two
//! strands are both red (white) are red (white); the rest are mixed. Following
//! red strands through the mixed crosses alone gives the twist `h~_t` and its
//! endpoint `phi~ = h~_beta`, a permutation of the red time-0 vertices `R_0`.
//! Given `R`, the red crosses are Poisson on the red region, so the red
//! strands are `h~_t ∘ sigma_t` for an independent interchange process
//! `sigma` on `R_0`.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::error::{Error, Result};
use crate::loops::{LoopSet, Trajectory};
use crate::process::{Cross, CrossConfig, CycleDecomposition, FiniteGraph, Permutation};
use crate::seed::keyed_uniform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Colour {
    Red,
    White,
}

/// Colours per cycle, together with the induced vertex colouring `q`
/// (`q[x]` is the colour of the loop through `(x, 0)`).
#[derive(Debug, Clone, PartialEq)]
pub struct CycleColouring {
    per_cycle: Vec<Colour>,
    per_vertex: Vec<Colour>,
}

impl CycleColouring {
    pub fn from_cycle_colours(decomp: &CycleDecomposition, per_cycle: Vec<Colour>) -> Self {
        let per_vertex = (0..decomp.n())
            .map(|x| per_cycle[decomp.cycle_of(x)])
            .collect();
        Self {
            per_cycle,
            per_vertex,
        }
    }

    pub fn per_cycle(&self) -> &[Colour] {
        &self.per_cycle
    }

    pub fn vertex(&self, x: usize) -> Colour {
        self.per_vertex[x]
    }

    pub fn red_mask(&self) -> Vec<bool> {
        self.per_vertex.iter().map(|&c| c == Colour::Red).collect()
    }

    /// Sorted `R_0`.
    pub fn red_vertices(&self) -> Vec<usize> {
        (0..self.per_vertex.len())
            .filter(|&x| self.per_vertex[x] == Colour::Red)
            .collect()
    }
}

pub fn colour_cycles<R: Rng + ?Sized>(
    decomp: &CycleDecomposition,
    theta: f64,
    rng: &mut R,
) -> Result<CycleColouring> {
    if theta.is_nan() || theta < 1.0 {
        return Err(Error::ThetaBelowOne(theta));
    }
    let r = 1.0 / theta;
    let per_cycle = (0..decomp.count())
        .map(|_| {
            if rng.gen::<f64>() < r {
                Colour::Red
            } else {
                Colour::White
            }
        })
        .collect();
    Ok(CycleColouring::from_cycle_colours(decomp, per_cycle))
}

#[derive(Debug, Clone)]
pub struct ColouringState {
    pub colouring: CycleColouring,
    pub red_vertices_t0: Vec<usize>,
    pub red_crosses: CrossConfig,
    pub white_crosses: CrossConfig,
    pub mixed_crosses: CrossConfig,
}

impl ColouringState {
    pub fn red_mask(&self) -> Vec<bool> {
        self.colouring.red_mask()
    }
}

/// Classifies each cross by the colours of the loops through its two strands.
pub fn classify_crosses(
    config: &CrossConfig,
    loops: &LoopSet,
    colouring: &CycleColouring,
) -> ColouringState {
    let loop_colour: Vec<Colour> = loops
        .loops()
        .iter()
        .map(|l| colouring.vertex(l.root()))
        .collect();
    let (mut red, mut white, mut mixed) = (Vec::new(), Vec::new(), Vec::new());
    for c in config.crosses() {
        let a = loop_colour[loops.loop_at(c.x, c.t)];
        let b = loop_colour[loops.loop_at(c.y, c.t)];
        match (a, b) {
            (Colour::Red, Colour::Red) => red.push(*c),
            (Colour::White, Colour::White) => white.push(*c),
            _ => mixed.push(*c),
        }
    }
    let beta = config.beta();
    ColouringState {
        red_vertices_t0: colouring.red_vertices(),
        colouring: colouring.clone(),
        red_crosses: CrossConfig::from_sorted_unchecked(beta, red),
        white_crosses: CrossConfig::from_sorted_unchecked(beta, white),
        mixed_crosses: CrossConfig::from_sorted_unchecked(beta, mixed),
    }
}

/// Red-strand dynamics driven by the mixed crosses.
#[derive(Debug, Clone)]
pub struct TwistData {
    beta: f64,
    red_t0: Vec<bool>,
    event_times: Vec<f64>,
    swaps: Vec<(usize, usize)>,
    // per red strand: (time, new position)
    jumps: Vec<Vec<(f64, usize)>>,
    phi_tilde: Permutation,
}

impl TwistData {
    pub fn n(&self) -> usize {
        self.red_t0.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `t_1 < t_2 < ...`, the mixed-cross times.
    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    /// `(a_k, b_k)`: `psi_k` moves the red strand at `a_k` to `b_k`.
    pub fn swaps(&self) -> &[(usize, usize)] {
        &self.swaps
    }

    pub fn red_t0(&self) -> &[bool] {
        &self.red_t0
    }

    pub fn red_count(&self) -> usize {
        self.red_t0.iter().filter(|&&r| r).count()
    }

    /// `R_t` as a mask, right-continuous in `t`.
    pub fn red_set_at(&self, t: f64) -> Vec<bool> {
        let mut red = self.red_t0.clone();
        for (&s, &(a, b)) in self.event_times.iter().zip(&self.swaps) {
            if s > t {
                break;
            }
            red[a] = false;
            red[b] = true;
        }
        red
    }

    /// `h~_t(x)` for `x` in `R_0`.
    pub fn h_tilde(&self, x: usize, t: f64) -> Result<usize> {
        if !self.red_t0[x] {
            return Err(Error::Precondition(format!("vertex {} is not red", x + 1)));
        }
        if !(0.0..=self.beta).contains(&t) {
            return Err(Error::TimeOutOfRange { t, beta: self.beta });
        }
        let j = &self.jumps[x];
        let i = j.partition_point(|&(s, _)| s <= t);
        Ok(if i == 0 { x } else { j[i - 1].1 })
    }

    /// `phi~ = h~_beta` on `R_0`, identity elsewhere.
    pub fn phi_tilde(&self) -> &Permutation {
        &self.phi_tilde
    }
}

pub fn compute_twist(mixed: &CrossConfig, red_t0: &[bool]) -> Result<TwistData> {
    let n = red_t0.len();
    let mut red = red_t0.to_vec();
    let mut occupant: Vec<Option<usize>> = (0..n).map(|x| red[x].then_some(x)).collect();
    let mut jumps = vec![Vec::new(); n];
    let mut event_times = Vec::with_capacity(mixed.len());
    let mut swaps = Vec::with_capacity(mixed.len());
    for c in mixed.crosses() {
        if c.y >= n {
            return Err(Error::VertexOutOfRange { vertex: c.y + 1, n });
        }
        let (a, b) = match (red[c.x], red[c.y]) {
            (true, false) => (c.x, c.y),
            (false, true) => (c.y, c.x),
            (rx, ry) => {
                return Err(Error::BadMixedCross {
                    t: c.t,
                    red: rx as usize + ry as usize,
                })
            }
        };
        let strand = occupant[a].take().expect("red position has a red strand");
        occupant[b] = Some(strand);
        red[a] = false;
        red[b] = true;
        jumps[strand].push((c.t, b));
        event_times.push(c.t);
        swaps.push((a, b));
    }
    if red != red_t0 {
        return Err(Error::InconsistentColouring(
            "red set at beta differs from R_0".into(),
        ));
    }
    let mut image: Vec<usize> = (0..n).collect();
    for x in (0..n).filter(|&x| red_t0[x]) {
        image[x] = jumps[x].last().map_or(x, |&(_, p)| p);
    }
    Ok(TwistData {
        beta: mixed.beta(),
        red_t0: red_t0.to_vec(),
        event_times,
        swaps,
        jumps,
        phi_tilde: Permutation::from_image(image)?,
    })
}

/// `h_t = h~_t ∘ sigma_t` on `R_0`.
#[derive(Debug, Clone)]
pub struct TwistedTrajectory<'a> {
    twist: &'a TwistData,
    sigma: Trajectory,
}

impl TwistedTrajectory<'_> {
    pub fn at(&self, x: usize, t: f64) -> Result<usize> {
        self.twist.h_tilde(self.sigma.at(x, t)?, t)
    }
}

fn check_xi(twist: &TwistData, xi: &CrossConfig) -> Result<()> {
    for c in xi.crosses() {
        for v in [c.x, c.y] {
            if v >= twist.n() || !twist.red_t0[v] {
                return Err(Error::Precondition(format!(
                    "xi cross at time {} touches non-red vertex {}",
                    c.t,
                    v + 1
                )));
            }
        }
    }
    Ok(())
}

/// Red trajectories and `phi = phi~ ∘ sigma_beta` from an auxiliary
/// interchange configuration `xi` on the pairs of `R_0`.
pub fn reconstruct_red<'a>(
    twist: &'a TwistData,
    xi: &CrossConfig,
) -> Result<(TwistedTrajectory<'a>, Permutation)> {
    check_xi(twist, xi)?;
    let sigma = crate::loops::trajectory(xi, twist.n())?;
    let sigma_beta = Permutation::from_image(sigma.map_at(xi.beta())?)?;
    let phi = twist.phi_tilde.after(&sigma_beta);
    Ok((TwistedTrajectory { twist, sigma }, phi))
}

/// The red crosses identified with `xi`: points `(h~_t(x) h~_t(y), t)`.
pub fn mapped_red_crosses(twist: &TwistData, xi: &CrossConfig) -> Result<CrossConfig> {
    check_xi(twist, xi)?;
    let crosses = xi
        .crosses()
        .iter()
        .map(|c| {
            Ok(Cross::new(
                twist.h_tilde(c.x, c.t)?,
                twist.h_tilde(c.y, c.t)?,
                c.t,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossConfig::from_sorted_unchecked(xi.beta(), crosses))
}

/// Independent rate-1 Poisson processes on all pairs of `R_0` over `[0, beta]`.
pub fn sample_xi<R: Rng + ?Sized>(twist: &TwistData, rng: &mut R) -> CrossConfig {
    let red: Vec<usize> = (0..twist.n()).filter(|&x| twist.red_t0[x]).collect();
    let sub = crate::process::sample_crosses(&FiniteGraph::complete(red.len()), twist.beta, rng);
    let crosses = sub
        .crosses()
        .iter()
        .map(|c| Cross::new(red[c.x], red[c.y], c.t))
        .collect();
    CrossConfig::from_sorted_unchecked(twist.beta, crosses)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RedRegionMeasure {
    pub value: f64,
}

/// Lebesgue measure of `{(xy, t) : x, y in R_t, t in [from, to)}`.
pub fn red_region_measure_between(
    twist: &TwistData,
    graph: &FiniteGraph,
    from: f64,
    to: f64,
) -> RedRegionMeasure {
    let (from, to) = (from.max(0.0), to.min(twist.beta));
    if to.is_nan() || from.is_nan() || to <= from {
        return RedRegionMeasure { value: 0.0 };
    }
    if graph.is_complete() {
        let k = twist.red_count() as f64;
        return RedRegionMeasure {
            value: (to - from) * k * (k - 1.0) / 2.0,
        };
    }
    let adj = graph.adjacency();
    let mut red = twist.red_t0.clone();
    let red_degree = |red: &[bool], v: usize| adj[v].iter().filter(|&&w| red[w]).count() as i64;
    let mut inside: i64 = graph
        .edges()
        .iter()
        .filter(|&&(a, b)| red[a] && red[b])
        .count() as i64;
    let mut value = 0.0;
    let mut last = 0.0f64;
    for (&t, &(a, b)) in twist.event_times.iter().zip(&twist.swaps) {
        let lo = last.max(from);
        let hi = t.min(to);
        if hi > lo {
            value += inside as f64 * (hi - lo);
        }
        inside -= red_degree(&red, a);
        red[a] = false;
        inside += red_degree(&red, b);
        red[b] = true;
        last = t;
    }
    let lo = last.max(from);
    if to > lo {
        value += inside as f64 * (to - lo);
    }
    RedRegionMeasure { value }
}

pub fn red_region_measure(twist: &TwistData, graph: &FiniteGraph) -> RedRegionMeasure {
    red_region_measure_between(twist, graph, 0.0, twist.beta)
}

#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n_samples: usize,
    pub parameters: serde_json::Value,
}

impl TestReport {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

pub const MIN_POISSON_SAMPLES: usize = 100;

/// Randomized probability integral transform of `k` under Poisson(`mean`).
pub(crate) fn poisson_pit(k: u64, mean: f64, v: f64) -> f64 {
    if mean <= 0.0 {
        return if k == 0 { v } else { 1.0 };
    }
    let p = Poisson::new(mean).expect("positive mean");
    let below = if k == 0 { 0.0 } else { p.cdf(k - 1) };
    (below + v * p.pmf(k)).clamp(0.0, 1.0)
}

/// Tests that red-cross counts are Poisson with the red-region measure as
/// mean. Each sample's `[0, beta)` is cut into `slabs` equal time slabs, and
/// every slab count is mapped through its randomized PIT; the PIT values are
/// binned and compared to uniform with a chi-square test.
///
/// The randomization of sample `i`, slab `j` is keyed on `(seed, i, j)`, so
/// the statistic does not depend on how samples were produced or ordered
/// before indexing.
pub fn verify_red_poisson(
    samples: &[(ColouringState, TwistData)],
    graph: &FiniteGraph,
    slabs: usize,
    bins: usize,
    seed: u64,
) -> Result<TestReport> {
    if samples.len() < MIN_POISSON_SAMPLES {
        return Err(Error::Underpowered {
            got: samples.len(),
            need: MIN_POISSON_SAMPLES,
        });
    }
    let slabs = slabs.max(1);
    let bins = bins.max(2);
    let mut counts = vec![0u64; bins];
    let mut observed_total = 0u64;
    let mut expected_total = 0.0f64;
    for (i, (state, twist)) in samples.iter().enumerate() {
        let beta = twist.beta();
        for j in 0..slabs {
            let a = beta * j as f64 / slabs as f64;
            let b = beta * (j + 1) as f64 / slabs as f64;
            let mean = red_region_measure_between(twist, graph, a, b).value;
            let k = if j + 1 == slabs {
                state
                    .red_crosses
                    .crosses()
                    .iter()
                    .filter(|c| c.t >= a)
                    .count()
            } else {
                state.red_crosses.window(a, b).len()
            } as u64;
            observed_total += k;
            expected_total += mean;
            let v = keyed_uniform(seed, "red-poisson-pit", (i * slabs + j) as u64);
            let u = poisson_pit(k, mean, v);
            counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
        }
    }
    let total = (samples.len() * slabs) as f64;
    let expected = total / bins as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p_value = ChiSquared::new((bins - 1) as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN);
    Ok(TestReport {
        statistic,
        p_value,
        n_samples: samples.len(),
        parameters: serde_json::json!({
            "test": "red-cross Poisson PIT chi-square",
            "slabs": slabs,
            "bins": bins,
            "observed_red_crosses": observed_total,
            "expected_red_crosses": expected_total,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::{build_loops, trajectory};
    use crate::process::{compose, cycle_decompose, sample_crosses};
    use crate::seed::stream;
    use proptest::prelude::*;

    fn fig1_state() -> (CrossConfig, CycleDecomposition, CycleColouring) {
        let target =
            Permutation::from_cycles(10, &[vec![0, 2], vec![1, 5, 6, 3], vec![8, 9]]).unwrap();
        let cfg = CrossConfig::realizing(&target, 1.0);
        let d = cycle_decompose(&compose(&cfg, 10).unwrap());
        let colours = d
            .cycles()
            .iter()
            .map(|c| {
                if c.contains(&1) || c.contains(&8) {
                    Colour::Red
                } else {
                    Colour::White
                }
            })
            .collect();
        let q = CycleColouring::from_cycle_colours(&d, colours);
        (cfg, d, q)
    }

    /// Red cycles on {2,4,6,7} and {9,10} (1-indexed) where the 2-cycle is
    /// routed through the white vertex 8 using mixed crosses only, so that
    /// `phi~ = (9,10)` on `R_0 = {2,4,6,7,9,10}`.
    fn twisted_example() -> (CrossConfig, CycleColouring, CycleDecomposition) {
        let crosses = vec![
            Cross::new(1, 5, 0.05),
            Cross::new(7, 8, 0.12),
            Cross::new(5, 6, 0.20),
            Cross::new(8, 9, 0.27),
            Cross::new(0, 2, 0.30),
            Cross::new(7, 9, 0.42),
            Cross::new(6, 3, 0.50),
        ];
        let cfg = CrossConfig::new(1.0, crosses).unwrap();
        let d = cycle_decompose(&compose(&cfg, 10).unwrap());
        let colours = d
            .cycles()
            .iter()
            .map(|c| {
                if c.contains(&1) || c.contains(&8) {
                    Colour::Red
                } else {
                    Colour::White
                }
            })
            .collect();
        (cfg, CycleColouring::from_cycle_colours(&d, colours), d)
    }

    #[test]
    fn theta_one_colours_everything_red() {
        let d = cycle_decompose(&Permutation::identity(6));
        let q = colour_cycles(&d, 1.0, &mut stream(1, "c", 0)).unwrap();
        assert!(q.per_cycle().iter().all(|&c| c == Colour::Red));
        assert!(colour_cycles(&d, 0.5, &mut stream(1, "c", 0)).is_err());
    }

    #[test]
    fn red_fraction_binomial() {
        let d = cycle_decompose(&Permutation::from_cycles(5, &[vec![0, 1, 2, 3, 4]]).unwrap());
        let mut rng = stream(2, "c", 0);
        let reps = 10_000;
        let red = (0..reps)
            .filter(|_| colour_cycles(&d, 2.0, &mut rng).unwrap().per_cycle()[0] == Colour::Red)
            .count();
        let phat = red as f64 / reps as f64;
        assert!((phat - 0.5).abs() < 3.0 * (0.25 / reps as f64).sqrt());
    }

    #[test]
    fn all_red_means_no_mixed() {
        let mut rng = stream(3, "c", 0);
        let cfg = sample_crosses(&FiniteGraph::complete(8), 0.4, &mut rng);
        let d = cycle_decompose(&compose(&cfg, 8).unwrap());
        let ls = build_loops(&cfg, 8).unwrap();
        let q = colour_cycles(&d, 1.0, &mut rng).unwrap();
        let st = classify_crosses(&cfg, &ls, &q);
        assert_eq!(st.red_crosses.len(), cfg.len());
        assert!(st.mixed_crosses.is_empty());
    }

    #[test]
    fn figure_one_classification_and_twist() {
        let (cfg, _d, q) = fig1_state();
        let ls = build_loops(&cfg, 10).unwrap();
        let st = classify_crosses(&cfg, &ls, &q);
        assert_eq!(st.red_vertices_t0, vec![1, 3, 5, 6, 8, 9]);
        assert_eq!(
            st.red_crosses.len() + st.white_crosses.len() + st.mixed_crosses.len(),
            cfg.len()
        );
        let tw = compute_twist(&st.mixed_crosses, &q.red_mask()).unwrap();
        let mask = q.red_mask();
        for x in 0..10 {
            assert_eq!(mask[x], mask[tw.phi_tilde().apply(x)]);
            if !mask[x] {
                assert_eq!(tw.phi_tilde().apply(x), x);
            }
        }
    }

    #[test]
    fn twist_through_white_strand() {
        let (cfg, q, d) = twisted_example();
        assert_eq!(d.count(), 5);
        let ls = build_loops(&cfg, 10).unwrap();
        let st = classify_crosses(&cfg, &ls, &q);
        assert_eq!(st.red_vertices_t0, vec![1, 3, 5, 6, 8, 9]);
        let mixed_times: Vec<f64> = st.mixed_crosses.crosses().iter().map(|c| c.t).collect();
        assert_eq!(mixed_times, vec![0.12, 0.27, 0.42]);
        assert_eq!(st.red_crosses.len(), 3);
        let tw = compute_twist(&st.mixed_crosses, &q.red_mask()).unwrap();
        let expected = Permutation::from_cycles(10, &[vec![8, 9]]).unwrap();
        assert_eq!(tw.phi_tilde(), &expected);
        // red set size is conserved
        for &t in tw.event_times() {
            assert_eq!(tw.red_set_at(t).iter().filter(|&&r| r).count(), 6);
        }
    }

    #[test]
    fn no_mixed_gives_identity_twist() {
        let mask = vec![true, false, true, true];
        let tw = compute_twist(&CrossConfig::empty(1.0), &mask).unwrap();
        assert!(tw.phi_tilde().is_identity());
        assert_eq!(tw.h_tilde(2, 0.7).unwrap(), 2);
        let xi = CrossConfig::new(1.0, vec![Cross::new(0, 2, 0.3), Cross::new(2, 3, 0.6)]).unwrap();
        let (_, phi) = reconstruct_red(&tw, &xi).unwrap();
        assert_eq!(phi, compose(&xi, 4).unwrap());
        let (_, phi) = reconstruct_red(&tw, &CrossConfig::empty(1.0)).unwrap();
        assert_eq!(&phi, tw.phi_tilde());
        let bad = CrossConfig::new(1.0, vec![Cross::new(0, 1, 0.3)]).unwrap();
        assert!(reconstruct_red(&tw, &bad).is_err());
    }

    #[test]
    fn bad_mixed_cross_is_rejected() {
        let mask = vec![true, true, false];
        let two_red = CrossConfig::new(1.0, vec![Cross::new(0, 1, 0.5)]).unwrap();
        assert!(matches!(
            compute_twist(&two_red, &mask),
            Err(Error::BadMixedCross { red: 2, .. })
        ));
        let none_red =
            CrossConfig::new(1.0, vec![Cross::new(1, 2, 0.5), Cross::new(0, 2, 0.6)]).unwrap();
        let mask = vec![false, false, true];
        assert!(matches!(
            compute_twist(&none_red, &mask),
            Err(Error::BadMixedCross { red: 0, .. })
        ));
    }

    #[test]
    fn measure_trivial_cases() {
        let g = FiniteGraph::complete(5);
        let all = compute_twist(&CrossConfig::empty(0.8), &[true; 5]).unwrap();
        assert!((red_region_measure(&all, &g).value - 0.8 * 10.0).abs() < 1e-15);
        let none = compute_twist(&CrossConfig::empty(0.8), &[false; 5]).unwrap();
        assert_eq!(red_region_measure(&none, &g).value, 0.0);
    }

    #[test]
    fn measure_matches_quadrature_on_path_graph() {
        // path 0-1-2-3-4-5, red strand hops along white vertices
        let g = FiniteGraph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let mixed = CrossConfig::new(
            1.0,
            vec![
                Cross::new(1, 2, 0.1),
                Cross::new(2, 3, 0.35),
                Cross::new(0, 1, 0.5),
                Cross::new(3, 4, 0.7),
                Cross::new(4, 3, 0.8),
                Cross::new(3, 2, 0.85),
                Cross::new(0, 1, 0.9),
                Cross::new(1, 2, 0.95),
            ],
        )
        .unwrap();
        let mask = vec![true, true, false, false, false, false];
        let tw = compute_twist(&mixed, &mask).unwrap();
        let exact = red_region_measure(&tw, &g).value;
        let grid = 10_000;
        let dt = 1.0 / grid as f64;
        let quad: f64 = (0..grid)
            .map(|i| {
                let red = tw.red_set_at((i as f64 + 0.5) * dt);
                g.edges().iter().filter(|&&(a, b)| red[a] && red[b]).count() as f64 * dt
            })
            .sum();
        assert!((exact - 0.2).abs() < 1e-12);
        assert!((exact - quad).abs() <= 1e-6 * exact, "{exact} vs {quad}");
        assert!(exact <= g.edge_count() as f64);
    }

    #[test]
    fn underpowered_poisson_test_errors() {
        let g = FiniteGraph::complete(3);
        assert!(matches!(
            verify_red_poisson(&[], &g, 1, 10, 0),
            Err(Error::Underpowered { .. })
        ));
    }

    #[test]
    fn pit_is_uniform_for_poisson_counts() {
        use rand_distr::Distribution;
        let mut rng = stream(5, "pit", 0);
        let d = rand_distr::Poisson::new(3.3).unwrap();
        let m = 20_000;
        let mut lows = 0;
        for i in 0..m {
            let k: f64 = d.sample(&mut rng);
            if poisson_pit(k as u64, 3.3, keyed_uniform(1, "t", i)) < 0.25 {
                lows += 1;
            }
        }
        let f = lows as f64 / m as f64;
        assert!(
            (f - 0.25).abs() < 4.0 * (0.25 * 0.75 / m as f64).sqrt(),
            "{f}"
        );
    }

    fn random_colouring_case(
        seed: u64,
        n: usize,
        lambda: f64,
    ) -> (
        CrossConfig,
        CycleDecomposition,
        CycleColouring,
        ColouringState,
    ) {
        let mut rng = stream(seed, "case", 0);
        let cfg = sample_crosses(&FiniteGraph::complete(n), lambda / n as f64, &mut rng);
        let d = cycle_decompose(&compose(&cfg, n).unwrap());
        let q = colour_cycles(&d, 2.0, &mut rng).unwrap();
        let ls = build_loops(&cfg, n).unwrap();
        let st = classify_crosses(&cfg, &ls, &q);
        (cfg, d, q, st)
    }

    proptest! {
        #[test]
        fn partition_and_red_set_invariance(seed in any::<u64>(), n in 2usize..9, lambda in 0.2f64..4.0) {
            let (cfg, d, q, st) = random_colouring_case(seed, n, lambda);
            prop_assert_eq!(
                st.red_crosses.len() + st.white_crosses.len() + st.mixed_crosses.len(),
                cfg.len()
            );
            let ls = build_loops(&cfg, n).unwrap();
            let cycle_of_loop = ls.cycle_of_loop(&d);
            // a cross whose two strands share a loop is never mixed
            for c in st.mixed_crosses.crosses() {
                prop_assert_ne!(ls.loop_at(c.x, c.t), ls.loop_at(c.y, c.t));
            }
            // deleting red and white crosses keeps R: the induced colouring of
            // the mixed-only loops gives the same red segments
            let tw = compute_twist(&st.mixed_crosses, &q.red_mask()).unwrap();
            let mixed_loops = build_loops(&st.mixed_crosses, n).unwrap();
            let mask = q.red_mask();
            for t in [0.0, 0.25, 0.5, 0.75].map(|f| f * cfg.beta()) {
                let rt = tw.red_set_at(t);
                for x in 0..n {
                    let full = q.per_cycle()[cycle_of_loop[ls.loop_at(x, t)]] == Colour::Red;
                    let root = mixed_loops.loops()[mixed_loops.loop_at(x, t)].root();
                    prop_assert_eq!(full, rt[x]);
                    prop_assert_eq!(mask[root], rt[x]);
                }
            }
            // phi~ permutes R_0
            let phi = tw.phi_tilde();
            for x in 0..n {
                prop_assert_eq!(mask[x], mask[phi.apply(x)]);
            }
        }

        #[test]
        fn twisted_trajectory_is_exact(seed in any::<u64>(), n in 2usize..9, lambda in 0.2f64..4.0) {
            let (cfg, _d, q, st) = random_colouring_case(seed, n, lambda);
            let beta = cfg.beta();
            let tw = compute_twist(&st.mixed_crosses, &q.red_mask()).unwrap();
            let xi = sample_xi(&tw, &mut stream(seed, "xi", 0));
            let red = mapped_red_crosses(&tw, &xi).unwrap();
            let rebuilt = CrossConfig::union(beta, &[&st.mixed_crosses, &red, &st.white_crosses]).unwrap();
            let h = trajectory(&rebuilt, n).unwrap();
            let (twisted, phi) = reconstruct_red(&tw, &xi).unwrap();
            let mut times: Vec<f64> = rebuilt.crosses().iter().map(|c| c.t).collect();
            times.push(0.0);
            times.push(beta);
            for &t in &times {
                for x in st.red_vertices_t0.iter().copied() {
                    prop_assert_eq!(h.at(x, t).unwrap(), twisted.at(x, t).unwrap());
                }
            }
            let pi = compose(&rebuilt, n).unwrap();
            for x in st.red_vertices_t0.iter().copied() {
                prop_assert_eq!(pi.apply(x), phi.apply(x));
            }
        }
    }
}
