#![allow(dead_code)]

use quasigraph::energy::EstimatorSettings;
use quasigraph::{AbSource, GraphBuilder, ModelSpec, SystemKind, SystemSpec, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph on a random number of vertices from `sizes`: a random
/// spanning tree plus a few chords.
pub fn random_graph(rng: &mut ChaCha8Rng, sizes: std::ops::Range<usize>) -> WeightedGraph {
    let n = rng.gen_range(sizes);
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_vertex(&format!("v{i}"), rng.gen_range(0.5..=2.0), rng.gen_range(0.5..=2.0), rng.gen_range(0.5..=2.0))
            .unwrap();
    }
    let mut seen = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        seen.insert((j, i));
        b.add_edge(&format!("v{j}"), &format!("v{i}"), weight(rng)).unwrap();
    }
    for _ in 0..n / 2 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let key = (i.min(j), i.max(j));
        if i != j && seen.insert(key) {
            b.add_edge(&format!("v{i}"), &format!("v{j}"), weight(rng)).unwrap();
        }
    }
    b.build().unwrap()
}

fn weight(rng: &mut ChaCha8Rng) -> f64 {
    // (0, 2]
    2.0 - rng.gen_range(0.0..2.0)
}

pub fn power(s_exp: f64, t_exp: f64) -> ModelSpec {
    ModelSpec::Power { alpha: 1.0, beta: 1.0, s_exp, t_exp }
}

pub fn system(kind: SystemKind, p: f64, q: f64, lambda: f64, model: ModelSpec) -> SystemSpec {
    SystemSpec {
        system: kind,
        p,
        q,
        m1: 1,
        m2: 1,
        lambda,
        arity: 2,
        model,
        growth: None,
        ab_source: AbSource::ClosedForm,
        estimator: EstimatorSettings::default(),
        smoothing: 1e-8,
    }
}

/// `|∇u|(x)` straight from the edge sum.
pub fn grad_len(g: &WeightedGraph, u: &[f64], x: usize) -> f64 {
    let s: f64 = g.neighbors(x).iter().map(|nb| nb.weight * (u[nb.vertex] - u[x]).powi(2)).sum();
    (s / (2.0 * g.mu()[x])).sqrt()
}

/// `M(x) = (deg/2μ)^{l/2} μ + h μ + Σ_y (w_xy/2μ_y)^{l/2} μ_y`.
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
