use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::superpixels::SuperpixelStats;

/// Lower bound on epsilon for non-gazed superpixels (upper bound is `1 - DELTA`).
pub const DELTA: f64 = 1e-4;

/// Sparse symmetric affinity matrix of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    /// `neighbors[i]` holds `(j, w_ij)` with `w_ij > 0`, ascending in `j`.
    neighbors: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
}

impl AffinityGraph {
    /// Builds a graph from explicit undirected edges. Duplicate edges add up.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!("edge ({i}, {j}) outside {n} vertices")));
            }
            if i == j {
                return Err(Error::InvalidInput(format!("self loop at {i}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!("edge weight {w} must be finite and nonnegative")));
            }
            if w == 0.0 {
                continue;
            }
            neighbors[i].push((j, w));
            neighbors[j].push((i, w));
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(list.len());
            for &(j, w) in list.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += w,
                    _ => merged.push((j, w)),
                }
            }
            *list = merged;
        }
        let degrees = neighbors.iter().map(|l| l.iter().map(|&(_, w)| w).sum()).collect();
        Ok(Self { neighbors, degrees })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.neighbors[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|k| self.neighbors[i][k].1)
            .unwrap_or(0.0)
    }

    /// Dense copy, for small graphs and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for &(j, w) in &self.neighbors[i] {
                row[j] = w;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityParams {
    pub sigma_a: f64,
    pub sigma_d: f64,
    /// Centroid distance beyond which affinity is zero.
    pub tau: f64,
    /// Use squared angle and distance in the exponents instead of plain norms.
    pub squared: bool,
}

/// Circular difference of two orientations on [0, pi).
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(PI);
    d.min(PI - d)
}

/// `exp(-dtheta / 2 sigma_a^2) * exp(-dist / 2 sigma_d^2)`, or the squared
/// variant; zero beyond `tau`.
pub fn affinity_weight(dtheta: f64, dist: f64, params: &AffinityParams) -> f64 {
    if dist > params.tau {
        return 0.0;
    }
    let (a, d) = if params.squared {
        (dtheta * dtheta, dist * dist)
    } else {
        (dtheta, dist)
    };
    (-a / (2.0 * params.sigma_a * params.sigma_a)).exp() * (-d / (2.0 * params.sigma_d * params.sigma_d)).exp()
}

pub fn build_affinity(stats: &[SuperpixelStats], params: &AffinityParams) -> Result<AffinityGraph> {
    if stats.is_empty() {
        return Err(Error::InvalidInput("cannot build affinity over zero superpixels".into()));
    }
    if !(params.sigma_a > 0.0 && params.sigma_d > 0.0 && params.tau >= 0.0) {
        return Err(Error::Config(format!("invalid affinity parameters {params:?}")));
    }
    let n = stats.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (ci, cj) = (stats[i].centroid, stats[j].centroid);
            let dist = ((ci[0] - cj[0]).powi(2) + (ci[1] - cj[1]).powi(2)).sqrt();
            if dist > params.tau {
                continue;
            }
            let w = affinity_weight(angle_difference(stats[i].theta, stats[j].theta), dist, params);
            if w > 0.0 {
                edges.push((i, j, w));
            }
        }
    }
    AffinityGraph::from_edges(n, &edges)
}

/// Iterates `P <- alpha * Omega * P + (1 - alpha) * P_0` with
/// `Omega = D^-1/2 W D^-1/2`, clamping to [0, 1] and re-pinning gazed entries
/// to 1 after every step. Isolated vertices have a zero row in `Omega` and
/// settle at `(1 - alpha) * P_0`. Non-gazed
/// results are finally clamped to `[DELTA, 1 - DELTA]`.
pub fn diffuse(graph: &AffinityGraph, p0: &[f64], gazed: &[usize], alpha: f64, iters: usize) -> Result<Vec<f64>> {
    diffuse_with(graph, p0, gazed, alpha, iters, |_, _| {})
}

/// [`diffuse`] with a callback observing the state after each iteration.
pub fn diffuse_with(
    graph: &AffinityGraph,
    p0: &[f64],
    gazed: &[usize],
    alpha: f64,
    iters: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    let n = graph.len();
    if p0.len() != n {
        return Err(Error::Dimension(format!("p0 has {} entries for {n} vertices", p0.len())));
    }
    if let Some(&g) = gazed.iter().find(|&&g| g >= n) {
        return Err(Error::Dimension(format!("gazed id {g} outside {n} vertices")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1)")));
    }
    if p0.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidInput("p0 entries must lie in [0, 1]".into()));
    }

    let mut is_gazed = vec![false; n];
    for &g in gazed {
        is_gazed[g] = true;
    }
    let mut seed = p0.to_vec();
    for (s, &g) in seed.iter_mut().zip(&is_gazed) {
        if g {
            *s = 1.0;
        }
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d = graph.degree(i);
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();

    let mut p = seed.clone();
    let mut next = vec![0.0; n];
    for it in 0..iters {
        for i in 0..n {
            next[i] = if is_gazed[i] {
                1.0
            } else {
                let spread: f64 = graph
                    .neighbors(i)
                    .iter()
                    .map(|&(j, w)| w * inv_sqrt[j] * p[j])
                    .sum::<f64>()
                    * inv_sqrt[i];
                (alpha * spread + (1.0 - alpha) * seed[i]).clamp(0.0, 1.0)
            };
        }
        std::mem::swap(&mut p, &mut next);
        observe(it, &p);
    }

    for (v, &g) in p.iter_mut().zip(&is_gazed) {
        if !g {
            *v = v.clamp(DELTA, 1.0 - DELTA);
        }
    }
    Ok(p)
}
