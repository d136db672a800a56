//! Graphs, Poisson cross configurations and their permutations.
//!
//! Vertices are 0-indexed in memory and 1-indexed in every serialized form.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    complete: bool,
}

impl FiniteGraph {
    /// The complete graph K_n.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for x in 0..n {
            for y in x + 1..n {
                edges.push((x, y));
            }
        }
        Self {
            n,
            edges,
            complete: true,
        }
    }

    /// A general simple graph on `n` vertices with 0-indexed edges.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange {
                    vertex: a.max(b) + 1,
                    n,
                });
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at {}", a + 1)));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {{{}, {}}}",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            out.push(e);
        }
        let complete = out.len() == n * n.saturating_sub(1) / 2;
        Ok(Self {
            n,
            edges: out,
            complete,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        if x == y || x >= self.n || y >= self.n {
            return false;
        }
        if self.complete {
            return true;
        }
        let e = (x.min(y), x.max(y));
        self.edges.contains(&e)
    }

    /// Uniformly chosen edge.
    pub fn random_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        if self.complete {
            let x = rng.gen_range(0..self.n);
            let mut y = rng.gen_range(0..self.n - 1);
            if y >= x {
                y += 1;
            }
            (x.min(y), x.max(y))
        } else {
            self.edges[rng.gen_range(0..self.edges.len())]
        }
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// A transposition of `x` and `y` at time `t`. Stored with `x < y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cross {
    pub x: usize,
    pub y: usize,
    pub t: f64,
}

impl Cross {
    pub fn new(a: usize, b: usize, t: f64) -> Self {
        Self {
            x: a.min(b),
            y: a.max(b),
            t,
        }
    }

    pub fn other(&self, v: usize) -> usize {
        if v == self.x {
            self.y
        } else {
            self.x
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        v == self.x || v == self.y
    }
}

/// A finite set of timed transpositions in `E x (0, beta)`, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossConfig {
    beta: f64,
    crosses: Vec<Cross>,
}

impl CrossConfig {
    pub fn empty(beta: f64) -> Self {
        Self {
            beta,
            crosses: Vec::new(),
        }
    }

    /// Sorts `crosses` by time and rejects ties, self-transpositions and
    /// times outside `(0, beta)`.
    pub fn new(beta: f64, mut crosses: Vec<Cross>) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidConfig(format!("beta = {beta}")));
        }
        for c in &crosses {
            if c.x == c.y {
                return Err(Error::InvalidConfig(format!(
                    "cross at time {} transposes {} with itself",
                    c.t,
                    c.x + 1
                )));
            }
            if !(c.t > 0.0 && c.t < beta) {
                return Err(Error::TimeOutOfRange { t: c.t, beta });
            }
        }
        crosses.sort_by(|a, b| a.t.total_cmp(&b.t));
        if let Some(w) = crosses.windows(2).find(|w| w[0].t == w[1].t) {
            return Err(Error::DuplicateTime(w[0].t));
        }
        Ok(Self { beta, crosses })
    }

    pub(crate) fn from_sorted_unchecked(beta: f64, crosses: Vec<Cross>) -> Self {
        debug_assert!(crosses.windows(2).all(|w| w[0].t < w[1].t));
        Self { beta, crosses }
    }

    /// A configuration whose time-ordered product is `target`, using at most
    /// `n - 1` evenly spaced crosses.
    pub fn realizing(target: &Permutation, beta: f64) -> Self {
        let n = target.len();
        let inv = target.inverse();
        let mut pos: Vec<usize> = (0..n).collect();
        let mut occ: Vec<usize> = (0..n).collect();
        let mut swaps = Vec::new();
        for v in 0..n {
            let strand = inv.image[v];
            let at = pos[strand];
            if at != v {
                swaps.push((at, v));
                let other = occ[v];
                occ.swap(at, v);
                pos[strand] = v;
                pos[other] = at;
            }
        }
        let k = swaps.len();
        let crosses = swaps
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| Cross::new(a, b, beta * (i + 1) as f64 / (k + 1) as f64))
            .collect();
        Self::from_sorted_unchecked(beta, crosses)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn crosses(&self) -> &[Cross] {
        &self.crosses
    }

    pub fn len(&self) -> usize {
        self.crosses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crosses.is_empty()
    }

    /// Errors if some cross is not an edge of `graph`.
    pub fn validate_on(&self, graph: &FiniteGraph) -> Result<()> {
        for c in &self.crosses {
            if c.y >= graph.n() {
                return Err(Error::VertexOutOfRange {
                    vertex: c.y + 1,
                    n: graph.n(),
                });
            }
            if !graph.has_edge(c.x, c.y) {
                return Err(Error::InvalidConfig(format!(
                    "{{{}, {}}} is not an edge",
                    c.x + 1,
                    c.y + 1
                )));
            }
        }
        Ok(())
    }

    /// Crosses of `self` whose time lies in `[a, b)`.
    pub fn window(&self, a: f64, b: f64) -> &[Cross] {
        let lo = self.crosses.partition_point(|c| c.t < a);
        let hi = self.crosses.partition_point(|c| c.t < b);
        &self.crosses[lo..hi]
    }

    /// Merge of several disjoint configurations on the same time axis.
    pub fn union(beta: f64, parts: &[&CrossConfig]) -> Result<Self> {
        let all = parts
            .iter()
            .flat_map(|p| p.crosses.iter().copied())
            .collect();
        Self::new(beta, all)
    }

    pub fn write_jsonl<W: Write>(&self, n: usize, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &JsonlHeader { n, beta: self.beta })?;
        w.write_all(b"\n")?;
        for c in &self.crosses {
            serde_json::to_writer(
                &mut w,
                &JsonlCross {
                    x: c.x + 1,
                    y: c.y + 1,
                    t: c.t,
                },
            )?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads a header line followed by one cross per line. Returns `(n, config)`.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<(usize, Self)> {
        let mut lines = r
            .lines()
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let header: JsonlHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(Error::InvalidConfig("missing header record".into())),
        };
        let mut crosses = Vec::new();
        for line in lines {
            let rec: JsonlCross = serde_json::from_str(&line?)?;
            if rec.x == 0 || rec.y == 0 || rec.x > header.n || rec.y > header.n {
                return Err(Error::VertexOutOfRange {
                    vertex: rec.x.max(rec.y),
                    n: header.n,
                });
            }
            crosses.push(Cross::new(rec.x - 1, rec.y - 1, rec.t));
        }
        Ok((header.n, Self::new(header.beta, crosses)?))
    }

    /// Reads several configurations written back to back by [`write_jsonl`].
    ///
    /// [`write_jsonl`]: CrossConfig::write_jsonl
    pub fn read_jsonl_stream<R: BufRead>(r: R) -> Result<Vec<(usize, Self)>> {
        let mut blocks: Vec<String> = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if line.contains("\"beta\"") || blocks.is_empty() {
                blocks.push(String::new());
            }
            let b = blocks.last_mut().expect("block started");
            b.push_str(&line);
            b.push('\n');
        }
        blocks
            .iter()
            .map(|b| Self::read_jsonl(b.as_bytes()))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    n: usize,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonlCross {
    x: usize,
    y: usize,
    t: f64,
}

/// `image[x]` is the image of `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            image: (0..n).collect(),
        }
    }

    pub fn from_image(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if v >= n || seen[v] {
                return Err(Error::NotAPermutation(format!("{image:?}")));
            }
            seen[v] = true;
        }
        Ok(Self { image })
    }

    /// Builds a permutation from disjoint cycles written as `x -> next`.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut image: Vec<usize> = (0..n).collect();
        for cyc in cycles {
            for (i, &v) in cyc.iter().enumerate() {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v + 1, n });
                }
                image[v] = cyc[(i + 1) % cyc.len()];
            }
        }
        Self::from_image(image)
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, x: usize) -> usize {
        self.image[x]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (x, &y) in self.image.iter().enumerate() {
            inv[y] = x;
        }
        Self { image: inv }
    }

    /// `self ∘ other`, i.e. apply `other` first.
    pub fn after(&self, other: &Permutation) -> Self {
        Self {
            image: other.image.iter().map(|&v| self.image[v]).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(x, &y)| x == y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleDecomposition {
    cycles: Vec<Vec<usize>>,
    cycle_of: Vec<usize>,
}

impl CycleDecomposition {
    /// Cycles sorted by non-increasing size; each cycle starts at its smallest
    /// vertex and lists `x, pi(x), pi^2(x), ...`.
    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn count(&self) -> usize {
        self.cycles.len()
    }

    pub fn n(&self) -> usize {
        self.cycle_of.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.cycles.iter().map(Vec::len).collect()
    }

    pub fn largest(&self) -> usize {
        self.cycles.first().map_or(0, Vec::len)
    }

    pub fn second_largest(&self) -> usize {
        self.cycles.get(1).map_or(0, Vec::len)
    }

    /// Index (into `cycles()`) of the cycle containing `x`.
    pub fn cycle_of(&self, x: usize) -> usize {
        self.cycle_of[x]
    }
}

/// Time-ordered product of the crosses, earliest applied first.
pub fn compose(config: &CrossConfig, n: usize) -> Result<Permutation> {
    let mut pos: Vec<usize> = (0..n).collect();
    let mut occ: Vec<usize> = (0..n).collect();
    for c in config.crosses() {
        if c.y >= n {
            return Err(Error::VertexOutOfRange { vertex: c.y + 1, n });
        }
        let (a, b) = (occ[c.x], occ[c.y]);
        occ.swap(c.x, c.y);
        pos[a] = c.y;
        pos[b] = c.x;
    }
    Ok(Permutation { image: pos })
}

pub fn cycle_decompose(pi: &Permutation) -> CycleDecomposition {
    let n = pi.len();
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            cyc.push(v);
            v = pi.apply(v);
        }
        cycles.push(cyc);
    }
    // stable: equal sizes stay ordered by smallest vertex
    cycles.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let mut cycle_of = vec![0; n];
    for (i, cyc) in cycles.iter().enumerate() {
        for &v in cyc {
            cycle_of[v] = i;
        }
    }
    CycleDecomposition { cycles, cycle_of }
}

/// Cycle count change `l(config + new) - l(config)`.
///
/// Inserting `new` turns `pi` into `pi ∘ (u v)` where `u`, `v` are the
/// strands occupying `new.x`, `new.y` just before `new.t`.
pub fn insert_delta_cycles(config: &CrossConfig, new: &Cross, n: usize) -> Result<i32> {
    if new.y >= n {
        return Err(Error::VertexOutOfRange {
            vertex: new.y + 1,
            n,
        });
    }
    if config.crosses().iter().any(|c| c.t == new.t) {
        return Err(Error::DuplicateTime(new.t));
    }
    let pi = compose(config, n)?;
    let mut occ: Vec<usize> = (0..n).collect();
    for c in config.crosses().iter().take_while(|c| c.t < new.t) {
        occ.swap(c.x, c.y);
    }
    let (u, v) = (occ[new.x], occ[new.y]);
    let mut w = pi.apply(u);
    while w != u {
        if w == v {
            return Ok(1);
        }
        w = pi.apply(w);
    }
    Ok(-1)
}

pub fn two_point_indicator(decomp: &CycleDecomposition, x: usize, y: usize) -> bool {
    decomp.cycle_of(x) == decomp.cycle_of(y)
}

/// Independent rate-1 Poisson processes on every edge over `[0, beta]`.
///
/// Drawn as a Poisson(beta |E|) total with i.i.d. uniform edges and times.
/// An exact time tie (probability zero) is resolved by redrawing the later
/// time.
pub fn sample_crosses<R: Rng + ?Sized>(graph: &FiniteGraph, beta: f64, rng: &mut R) -> CrossConfig {
    let mean = beta * graph.edge_count() as f64;
    if mean.is_nan() || mean <= 0.0 {
        return CrossConfig::empty(beta);
    }
    let count = Poisson::new(mean)
        .map(|p| p.sample(rng) as usize)
        .unwrap_or(0);
    let mut crosses: Vec<Cross> = (0..count)
        .map(|_| {
            let (x, y) = graph.random_edge(rng);
            Cross::new(x, y, open_uniform(beta, rng))
        })
        .collect();
    loop {
        crosses.sort_by(|a, b| a.t.total_cmp(&b.t));
        let tie = crosses.windows(2).position(|w| w[0].t == w[1].t);
        match tie {
            Some(i) => crosses[i + 1].t = open_uniform(beta, rng),
            None => break,
        }
    }
    CrossConfig::from_sorted_unchecked(beta, crosses)
}

/// Uniform on the open interval `(0, beta)`.
pub(crate) fn open_uniform<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    loop {
        let t = rng.gen::<f64>() * beta;
        if t > 0.0 && t < beta {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;
    use proptest::prelude::*;

    fn fig1() -> Permutation {
        // (1,3)(2,6,7,4)(9,10), 1-indexed
        Permutation::from_cycles(10, &[vec![0, 2], vec![1, 5, 6, 3], vec![8, 9]]).unwrap()
    }

    #[test]
    fn zero_beta_is_empty() {
        let mut rng = stream(1, "t", 0);
        let g = FiniteGraph::complete(6);
        let c = sample_crosses(&g, 0.0, &mut rng);
        assert!(c.is_empty());
        assert!(compose(&c, 6).unwrap().is_identity());
    }

    #[test]
    fn cross_count_mean_on_k4() {
        let mut rng = stream(2, "t", 0);
        let g = FiniteGraph::complete(4);
        let reps = 10_000;
        let total: usize = (0..reps)
            .map(|_| sample_crosses(&g, 1.0, &mut rng).len())
            .sum();
        let mean = total as f64 / reps as f64;
        let se = (6.0f64 / reps as f64).sqrt();
        assert!((mean - 6.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn empty_probability_single_edge() {
        let mut rng = stream(3, "t", 0);
        let g = FiniteGraph::new(2, [(0, 1)]).unwrap();
        let reps = 10_000;
        let zeros = (0..reps)
            .filter(|_| sample_crosses(&g, 2.0, &mut rng).is_empty())
            .count();
        let p = (-2.0f64).exp();
        let phat = zeros as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((phat - p).abs() < 3.0 * se, "phat {phat}");
    }

    #[test]
    fn compose_small_examples() {
        let empty = CrossConfig::empty(1.0);
        assert!(compose(&empty, 5).unwrap().is_identity());

        let c = CrossConfig::new(1.0, vec![Cross::new(0, 1, 0.2), Cross::new(1, 2, 0.5)]).unwrap();
        let pi = compose(&c, 3).unwrap();
        assert_eq!(pi.image(), &[2, 0, 1]);
        assert_eq!(cycle_decompose(&pi).count(), 1);
    }

    #[test]
    fn compose_rejects_out_of_range() {
        let c = CrossConfig::new(1.0, vec![Cross::new(0, 4, 0.2)]).unwrap();
        assert!(matches!(
            compose(&c, 3),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn figure_one_permutation() {
        let target = fig1();
        let cfg = CrossConfig::realizing(&target, 1.0);
        let pi = compose(&cfg, 10).unwrap();
        assert_eq!(pi, target);
        let d = cycle_decompose(&pi);
        assert_eq!(d.count(), 5);
        assert_eq!(d.sizes(), vec![4, 2, 2, 1, 1]);
    }

    #[test]
    fn figure_one_cycle_structure() {
        let d = cycle_decompose(&fig1());
        let nontrivial = d.cycles().iter().filter(|c| c.len() > 1).count();
        assert_eq!(nontrivial, 3);
        assert_eq!(d.cycles()[0], vec![1, 5, 6, 3]);
        assert_eq!(d.cycles()[1], vec![0, 2]);
        assert_eq!(d.cycles()[2], vec![8, 9]);
        assert!(two_point_indicator(&d, 1, 6));
        assert!(!two_point_indicator(&d, 0, 8));
    }

    #[test]
    fn decompose_trivial_cases() {
        let d = cycle_decompose(&Permutation::identity(7));
        assert_eq!(d.count(), 7);
        assert!(!two_point_indicator(&d, 0, 1));
        assert!(two_point_indicator(&d, 3, 3));
        let full = Permutation::from_image((1..9).chain([0]).collect()).unwrap();
        let d = cycle_decompose(&full);
        assert_eq!(d.count(), 1);
        assert_eq!(d.largest(), 9);
    }

    #[test]
    fn ties_broken_by_smallest_vertex() {
        // (4,5)(1,2): both size 2, the one containing vertex 0 comes first
        let p = Permutation::from_cycles(5, &[vec![3, 4], vec![0, 1]]).unwrap();
        let d = cycle_decompose(&p);
        assert_eq!(d.cycles()[0], vec![0, 1]);
        assert_eq!(d.cycles()[1], vec![3, 4]);
        assert_eq!(d.cycles()[2], vec![2]);
    }

    #[test]
    fn delta_examples() {
        let empty = CrossConfig::empty(1.0);
        assert_eq!(
            insert_delta_cycles(&empty, &Cross::new(0, 3, 0.4), 5).unwrap(),
            -1
        );
        let one = CrossConfig::new(1.0, vec![Cross::new(0, 1, 0.3)]).unwrap();
        assert_eq!(
            insert_delta_cycles(&one, &Cross::new(0, 1, 0.6), 2).unwrap(),
            1
        );
        assert!(matches!(
            insert_delta_cycles(&one, &Cross::new(0, 1, 0.3), 2),
            Err(Error::DuplicateTime(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(CrossConfig::new(1.0, vec![Cross::new(0, 1, 1.0)]).is_err());
        assert!(CrossConfig::new(1.0, vec![Cross::new(0, 1, 0.0)]).is_err());
        assert!(CrossConfig::new(1.0, vec![Cross::new(0, 1, 0.5), Cross::new(1, 2, 0.5)]).is_err());
        let g = FiniteGraph::new(3, [(0, 1)]).unwrap();
        let c = CrossConfig::new(1.0, vec![Cross::new(1, 2, 0.5)]).unwrap();
        assert!(c.validate_on(&g).is_err());
        assert!(FiniteGraph::new(3, [(0, 0)]).is_err());
        assert!(FiniteGraph::new(3, [(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn jsonl_round_trip_is_bit_exact() {
        let mut rng = stream(4, "t", 0);
        let g = FiniteGraph::complete(7);
        let cfg = sample_crosses(&g, 0.731, &mut rng);
        let mut buf = Vec::new();
        cfg.write_jsonl(7, &mut buf).unwrap();
        let (n, back) = CrossConfig::read_jsonl(&buf[..]).unwrap();
        assert_eq!(n, 7);
        assert_eq!(back.beta().to_bits(), cfg.beta().to_bits());
        for (a, b) in back.crosses().iter().zip(cfg.crosses()) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!((a.x, a.y), (b.x, b.y));
        }
        let first = String::from_utf8(buf).unwrap();
        assert!(first.starts_with("{\"n\":7,\"beta\":0.731}"));
    }

    #[test]
    fn jsonl_stream_splits_on_headers() {
        let mut rng = stream(5, "t", 0);
        let g = FiniteGraph::complete(5);
        let a = sample_crosses(&g, 0.9, &mut rng);
        let b = CrossConfig::empty(0.9);
        let mut buf = Vec::new();
        a.write_jsonl(5, &mut buf).unwrap();
        b.write_jsonl(5, &mut buf).unwrap();
        a.write_jsonl(5, &mut buf).unwrap();
        let all = CrossConfig::read_jsonl_stream(&buf[..]).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0].1, a);
        assert!(all[1].1.is_empty());
        assert_eq!(all[2].1, a);
    }

    proptest! {
        #[test]
        fn parity_and_partition(seed in any::<u64>(), n in 2usize..12, beta in 0.0f64..2.0) {
            let mut rng = stream(seed, "p", 0);
            let g = FiniteGraph::complete(n);
            let cfg = sample_crosses(&g, beta, &mut rng);
            let d = cycle_decompose(&compose(&cfg, n).unwrap());
            prop_assert_eq!(d.sizes().iter().sum::<usize>(), n);
            prop_assert_eq!(d.count() % 2, (n + cfg.len()) % 2);
            prop_assert!(d.sizes().windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn realizing_reproduces_target(image in Just((0..9usize).collect::<Vec<_>>()).prop_shuffle()) {
            let target = Permutation::from_image(image).unwrap();
            let cfg = CrossConfig::realizing(&target, 1.0);
            prop_assert_eq!(compose(&cfg, 9).unwrap(), target);
        }
    }
}
