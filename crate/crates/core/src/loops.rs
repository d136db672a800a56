//! Loop representation of a cross configuration.
//!
//! Follow `{x} x [0, beta]` upward, jump across every cross met, and wrap from
//! `(z, beta)` to `(z, 0)`. The closed paths obtained this way partition
//! `V x [0, beta)` and are in bijection with the cycles of the composed
//! permutation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::process::{CrossConfig, CycleDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopSegment {
    pub vertex: usize,
    pub start: f64,
    pub end: f64,
}

impl LoopSegment {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    segments: Vec<LoopSegment>,
}

impl Loop {
    pub fn segments(&self) -> &[LoopSegment] {
        &self.segments
    }

    pub fn root(&self) -> usize {
        self.segments[0].vertex
    }

    /// Vertices whose time-0 point the loop visits, in traversal order.
    pub fn time_zero_vertices(&self) -> Vec<usize> {
        self.segments
            .iter()
            .filter(|s| s.start == 0.0)
            .map(|s| s.vertex)
            .collect()
    }

    /// Total vertical length (compensated summation).
    pub fn vertical_length(&self) -> f64 {
        neumaier_sum(self.segments.iter().map(LoopSegment::length))
    }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone)]
pub struct LoopSet {
    beta: f64,
    loops: Vec<Loop>,
    // per vertex: (segment start, loop index), sorted by start
    index: Vec<Vec<(f64, usize)>>,
}

impl LoopSet {
    pub fn loops(&self) -> &[Loop] {
        &self.loops
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Index of the loop covering the point `(x, t)`, right-continuous in `t`.
    pub fn loop_at(&self, x: usize, t: f64) -> usize {
        let segs = &self.index[x];
        let i = segs.partition_point(|&(s, _)| s <= t);
        segs[i.saturating_sub(1)].1
    }

    /// Loop index for each cycle index of `decomp`.
    pub fn loop_of_cycle(&self, decomp: &CycleDecomposition) -> Vec<usize> {
        decomp
            .cycles()
            .iter()
            .map(|c| self.loop_at(c[0], 0.0))
            .collect()
    }

    /// Cycle index for each loop index.
    pub fn cycle_of_loop(&self, decomp: &CycleDecomposition) -> Vec<usize> {
        self.loops
            .iter()
            .map(|l| decomp.cycle_of(l.root()))
            .collect()
    }

    /// JSON list of loops, each a list of `{vertex, start, end}` (1-indexed).
    pub fn to_json(&self) -> Result<String> {
        let dto: Vec<Vec<LoopSegment>> = self
            .loops
            .iter()
            .map(|l| {
                l.segments
                    .iter()
                    .map(|s| LoopSegment {
                        vertex: s.vertex + 1,
                        ..*s
                    })
                    .collect()
            })
            .collect();
        Ok(serde_json::to_string(&dto)?)
    }
}

/// Per-vertex cross marks `(time, partner)` in time order.
pub(crate) fn vertex_marks(config: &CrossConfig, n: usize) -> Vec<Vec<(f64, usize)>> {
    let mut marks = vec![Vec::new(); n];
    for c in config.crosses() {
        marks[c.x].push((c.t, c.y));
        marks[c.y].push((c.t, c.x));
    }
    marks
}

pub fn build_loops(config: &CrossConfig, n: usize) -> Result<LoopSet> {
    if let Some(c) = config.crosses().iter().find(|c| c.y >= n) {
        return Err(Error::VertexOutOfRange { vertex: c.y + 1, n });
    }
    let beta = config.beta();
    let marks = vertex_marks(config, n);
    let mut visited = vec![false; n];
    let mut loops = Vec::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut segments = Vec::new();
        let (mut v, mut s) = (root, 0.0);
        loop {
            let m = &marks[v];
            let i = m.partition_point(|&(t, _)| t <= s);
            match m.get(i) {
                Some(&(t, w)) => {
                    segments.push(LoopSegment {
                        vertex: v,
                        start: s,
                        end: t,
                    });
                    v = w;
                    s = t;
                }
                None => {
                    segments.push(LoopSegment {
                        vertex: v,
                        start: s,
                        end: beta,
                    });
                    if v == root {
                        break;
                    }
                    visited[v] = true;
                    s = 0.0;
                }
            }
        }
        loops.push(Loop { segments });
    }
    let mut index = vec![Vec::new(); n];
    for (li, l) in loops.iter().enumerate() {
        for seg in &l.segments {
            index[seg.vertex].push((seg.start, li));
        }
    }
    for v in &mut index {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(LoopSet { beta, loops, index })
}

/// Right-continuous strand positions `h_t(x)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    beta: f64,
    jumps: Vec<Vec<(f64, usize)>>,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.jumps.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Location at time `t` of the strand started at `(x, 0)`.
    pub fn at(&self, x: usize, t: f64) -> Result<usize> {
        if !(0.0..=self.beta).contains(&t) {
            return Err(Error::TimeOutOfRange { t, beta: self.beta });
        }
        let j = &self.jumps[x];
        let i = j.partition_point(|&(s, _)| s <= t);
        Ok(if i == 0 { x } else { j[i - 1].1 })
    }

    /// The map `x -> h_t(x)` for every vertex.
    pub fn map_at(&self, t: f64) -> Result<Vec<usize>> {
        (0..self.n()).map(|x| self.at(x, t)).collect()
    }
}

pub fn trajectory(config: &CrossConfig, n: usize) -> Result<Trajectory> {
    let mut jumps = vec![Vec::new(); n];
    let mut occ: Vec<usize> = (0..n).collect();
    for c in config.crosses() {
        if c.y >= n {
            return Err(Error::VertexOutOfRange { vertex: c.y + 1, n });
        }
        let (a, b) = (occ[c.x], occ[c.y]);
        occ.swap(c.x, c.y);
        jumps[a].push((c.t, c.y));
        jumps[b].push((c.t, c.x));
    }
    Ok(Trajectory {
        beta: config.beta(),
        jumps,
    })
}
