//! Independent reference values.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::process::FiniteGraph;

/// `P_theta(1 <-> 2)` on two vertices.
///
/// The permutation is the transposition iff the single edge carries an odd
/// number of crosses, which has probability `p = (1 - e^{-2 beta}) / 2`; that
/// outcome has one cycle against two otherwise.
pub fn analytic_two_point_n2(theta: f64, beta: f64) -> f64 {
    let p = -(-2.0 * beta).exp_m1() / 2.0;
    if p == 0.0 {
        return 0.0;
    }
    p / (p + theta * (1.0 - p))
}

pub const MAX_QUANTUM_N: usize = 12;

/// Spin-1/2 Heisenberg ferromagnet `H = -2 sum_{xy} S_x . S_y` on a graph.
///
/// Uses `2 S_x . S_y = P_xy - 1/2`, so `H = -sum_{xy} (P_xy - 1/2)` is real
/// symmetric in the `S^3` product basis. `H` commutes with total `S^3`, so it
/// is stored and diagonalized one magnetization sector at a time.
#[derive(Debug, Clone)]
pub struct QuantumModel {
    n: usize,
    beta: f64,
    edges: Vec<(usize, usize)>,
    sectors: Vec<Sector>,
}

#[derive(Debug, Clone)]
struct Sector {
    states: Vec<u32>,
    eigenvalues: Vec<f64>,
    // column k is the k-th eigenvector
    eigenvectors: Vec<f64>,
}

impl QuantumModel {
    pub fn new(graph: &FiniteGraph, beta: f64) -> Result<Self> {
        let n = graph.n();
        if n == 0 || n > MAX_QUANTUM_N {
            return Err(Error::Precondition(format!(
                "quantum model needs 1 <= n <= {MAX_QUANTUM_N}, got {n}"
            )));
        }
        let edges = graph.edges().to_vec();
        let mut sectors = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let states: Vec<u32> = (0u32..1 << n)
                .filter(|s| s.count_ones() as usize == m)
                .collect();
            let h = sector_matrix(&states, &edges);
            let (eigenvalues, eigenvectors) = jacobi_eigen(h, states.len())?;
            sectors.push(Sector {
                states,
                eigenvalues,
                eigenvectors,
            });
        }
        Ok(Self {
            n,
            beta,
            edges,
            sectors,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The full `2^n x 2^n` matrix, row-major, basis index = spin bit pattern
    /// (bit `x` set means spin down at `x`).
    pub fn dense_hamiltonian(&self) -> Vec<f64> {
        let dim = 1usize << self.n;
        let states: Vec<u32> = (0..dim as u32).collect();
        sector_matrix(&states, &self.edges)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .sectors
            .iter()
            .flat_map(|s| s.eigenvalues.iter().copied())
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// `tr(e^{-beta H})`.
    pub fn partition_function(&self) -> f64 {
        self.sectors
            .iter()
            .flat_map(|s| s.eigenvalues.iter())
            .map(|e| (-self.beta * e).exp())
            .sum()
    }
}

fn sector_matrix(states: &[u32], edges: &[(usize, usize)]) -> Vec<f64> {
    let dim = states.len();
    let index = |s: u32| states.binary_search(&s).expect("swap stays in sector");
    let mut h = vec![0.0; dim * dim];
    for (i, &s) in states.iter().enumerate() {
        for &(x, y) in edges {
            h[i * dim + i] += 0.5;
            let (bx, by) = ((s >> x) & 1, (s >> y) & 1);
            if bx == by {
                h[i * dim + i] -= 1.0;
            } else {
                let j = index(s ^ (1 << x) ^ (1 << y));
                h[i * dim + j] -= 1.0;
            }
        }
    }
    h
}

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix (row-major).
/// Returns eigenvalues and the eigenvector matrix (column `k` for eigenvalue `k`).
pub fn jacobi_eigen(mut a: Vec<f64>, dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-15 * norm.max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * dim + j].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            let eig = (0..dim).map(|i| a[i * dim + i]).collect();
            return Ok((eig, v));
        }
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = a[p * dim + q];
                if apq.abs() <= tol / (dim as f64) {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum().max(0.0) * 2.0 - 1.0;
                let t = t / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Numerical(format!(
        "Jacobi did not converge in 100 sweeps (dimension {dim})"
    )))
}

/// `<S^3_x S^3_y> = tr(S^3_x S^3_y e^{-beta H}) / tr(e^{-beta H})`.
pub fn heisenberg_correlation(model: &QuantumModel, x: usize, y: usize) -> Result<f64> {
    if x >= model.n || y >= model.n {
        return Err(Error::VertexOutOfRange {
            vertex: x.max(y) + 1,
            n: model.n,
        });
    }
    let e_min = model
        .sectors
        .iter()
        .flat_map(|s| s.eigenvalues.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let (mut num, mut den) = (0.0, 0.0);
    for sec in &model.sectors {
        let dim = sec.states.len();
        let diag: Vec<f64> = sec
            .states
            .iter()
            .map(|&s| {
                let sx = if (s >> x) & 1 == 0 { 0.5 } else { -0.5 };
                let sy = if (s >> y) & 1 == 0 { 0.5 } else { -0.5 };
                sx * sy
            })
            .collect();
        for k in 0..dim {
            let w = (-model.beta * (sec.eigenvalues[k] - e_min)).exp();
            let expect: f64 = (0..dim)
                .map(|i| sec.eigenvectors[i * dim + k].powi(2) * diag[i])
                .sum();
            num += w * expect;
            den += w;
        }
    }
    if den.is_nan() || den <= 0.0 || !num.is_finite() {
        return Err(Error::Numerical("non-positive or non-finite trace".into()));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalResult {
    pub lambda: f64,
    pub z: f64,
    pub residual: f64,
}

/// Survival probability of a Poisson(`lambda`) Galton-Watson process: the
/// positive root of `z = 1 - e^{-lambda z}`, or 0 when `lambda <= 1`.
pub fn gw_survival(lambda: f64) -> SurvivalResult {
    let f = |z: f64| z + (-lambda * z).exp_m1();
    if lambda.is_nan() || lambda <= 1.0 {
        return SurvivalResult {
            lambda,
            z: 0.0,
            residual: 0.0,
        };
    }
    // f < 0 just above 0, f(1) = e^{-lambda} > 0
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    SurvivalResult {
        lambda,
        z,
        residual: f(z).abs(),
    }
}

/// Remaining mass below which stick-breaking stops.
pub const PD_TAIL: f64 = 1e-9;

/// Largest part of PD(1) and the total mass broken off.
pub fn pd1_stick_breaking<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let mut rest = 1.0f64;
    let mut largest = 0.0f64;
    let mut total = 0.0f64;
    while rest >= PD_TAIL {
        let part = rest * (1.0 - rng.gen::<f64>());
        rest -= part;
        total += part;
        largest = largest.max(part);
    }
    (largest, total)
}

pub fn pd1_largest_part_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    pd1_stick_breaking(rng).0
}

/// Mean of the PD(1) largest part from `draws` samples of this sampler
/// (10^6 draws, seed 0): 0.624291 with standard error 0.000192.
/// The exact value is the Golomb-Dickman constant 0.6243299885...
pub const PD1_LARGEST_MEAN_REFERENCE: f64 = 0.624291;

/// Sample mean and standard error of the PD(1) largest part.
pub fn pd1_largest_part_mean(draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = crate::seed::stream(seed, "pd1", 0);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let v = pd1_largest_part_sample(&mut rng);
        s += v;
        s2 += v * v;
    }
    let m = draws as f64;
    let mean = s / m;
    let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0);
    (mean, (var / m).sqrt())
}
