//! Graph fixtures shared by the benchmarks.

use quasigraph::{GraphBuilder, WeightedGraph};

/// Ring of `n` vertices with a chord every seventh vertex; measures and
/// weights vary smoothly so no two edges are identical.
pub fn ring(n: usize) -> WeightedGraph {
    let mut b = GraphBuilder::new();
    for i in 0..n {
        let t = i as f64 / n as f64;
        b.add_vertex(&format!("v{i}"), 1.0 + 0.5 * t, 1.0 + t, 1.5 - 0.5 * t).expect("vertex");
    }
    for i in 0..n {
        let w = 0.5 + ((i * 37) % 11) as f64 / 10.0;
        b.add_edge(&format!("v{i}"), &format!("v{}", (i + 1) % n), w).expect("edge");
        if i % 7 == 0 && n > 14 {
            b.add_edge(&format!("v{i}"), &format!("v{}", (i + n / 2) % n), 0.3).ok();
        }
    }
    b.build().expect("graph")
}

/// Deterministic test function with both signs.
pub fn wave(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 * 0.37).sin() + 0.1 * (i as f64 * 1.3).cos()).collect()
}
