#![allow(dead_code)]

use std::collections::BTreeSet;

use quasigraph::{GraphBuilder, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected random graph with `n` drawn from `sizes`: a random spanning tree
/// plus chords, `w ∈ (0, 2]`, `μ, h ∈ [0.5, 2]`.
pub fn random_graph(rng: &mut ChaCha8Rng, sizes: std::ops::RangeInclusive<usize>) -> WeightedGraph {
    let n = rng.gen_range(sizes);
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_vertex(&format!("v{i}"), rng.gen_range(0.5..=2.0), rng.gen_range(0.5..=2.0), rng.gen_range(0.5..=2.0))
            .unwrap();
    }
    let mut seen = BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        seen.insert((j, i));
        b.add_edge(&format!("v{j}"), &format!("v{i}"), 2.0 - rng.gen_range(0.0..2.0)).unwrap();
    }
    for _ in 0..n / 2 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i != j && seen.insert((i.min(j), i.max(j))) {
            b.add_edge(&format!("v{i}"), &format!("v{j}"), 2.0 - rng.gen_range(0.0..2.0)).unwrap();
        }
    }
    b.build().unwrap()
}

/// Path `v0 .. v{n-1}` with chords between vertices at least two hops from
/// both ends; the returned Omega drops the two end vertices.
pub fn chain_with_domain(rng: &mut ChaCha8Rng, sizes: std::ops::RangeInclusive<usize>) -> (WeightedGraph, Vec<usize>) {
    let n = rng.gen_range(sizes);
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_vertex(&format!("v{i}"), rng.gen_range(0.5..=2.0), rng.gen_range(0.5..=2.0), rng.gen_range(0.5..=2.0))
            .unwrap();
    }
    for i in 1..n {
        b.add_edge(&format!("v{}", i - 1), &format!("v{i}"), 2.0 - rng.gen_range(0.0..2.0)).unwrap();
    }
    let mut seen = BTreeSet::new();
    for _ in 0..2 {
        let (i, j) = (rng.gen_range(2..n - 2), rng.gen_range(2..n - 2));
        if j > i + 1 && seen.insert((i, j)) {
            b.add_edge(&format!("v{i}"), &format!("v{j}"), 2.0 - rng.gen_range(0.0..2.0)).unwrap();
        }
    }
    (b.build().unwrap(), (1..n - 1).collect())
}

/// `|∇u|(x)` from the edge sum.
pub fn grad_len(g: &WeightedGraph, u: &[f64], x: usize) -> f64 {
    let s: f64 = g.neighbors(x).iter().map(|nb| nb.weight * (u[nb.vertex] - u[x]).powi(2)).sum();
    (s / (2.0 * g.mu()[x])).sqrt()
}

/// `(deg/2μ)^{l/2} μ + h μ + Σ_y (w_xy/2μ_y)^{l/2} μ_y`.
pub fn spike_mass(g: &WeightedGraph, x: usize, l: f64, h: &[f64]) -> f64 {
    let mu = g.mu();
    let mut m = (g.degree(x) / (2.0 * mu[x])).powf(l / 2.0) * mu[x] + h[x] * mu[x];
    for nb in g.neighbors(x) {
        m += (nb.weight / (2.0 * mu[nb.vertex])).powf(l / 2.0) * mu[nb.vertex];
    }
    m
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
