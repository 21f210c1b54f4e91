//! Pointwise discrete differential operators on a weighted graph.
//!
//! Two layers live here: slice kernels (`*_values`) used by the energy and
//! solver code on raw vertex-indexed vectors, and the [`GraphFunction`] API,
//! which checks bindings and vertex ids.
//!
//! With `D_y u(x) = (u(x) - u(y)) sqrt(w_xy / mu(x)) / sqrt(2)`:
//!
//! * `Γ(u,v)(x) = 1/(2 mu(x)) sum_{y~x} w_xy (u(y)-u(x)) (v(y)-v(x)) = sum_y D_y u(x) D_y v(x)`
//! * `|∇u|(x) = sqrt(Γ(u,u)(x))`
//! * `Δu(x) = 1/mu(x) sum_{y~x} w_xy (u(y)-u(x))`
//! * `Δ_l u(x) = 1/(2 mu(x)) sum_{y~x} (|∇u|^{l-2}(y) + |∇u|^{l-2}(x)) w_xy (u(y)-u(x))`
//! * `|∇^m u| = |∇ Δ^{(m-1)/2} u|` for odd `m`, `|Δ^{m/2} u|` for even `m`.

use crate::error::{Error, Result};
use crate::graph::{DomainPartition, WeightedGraph};
use crate::numeric::{abs_pow, csum, CompensatedSum};

/// A real value per vertex of a bound graph.
#[derive(Debug, Clone)]
pub struct GraphFunction<'g> {
    graph: &'g WeightedGraph,
    values: Vec<f64>,
}

impl<'g> GraphFunction<'g> {
    pub fn new(graph: &'g WeightedGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.len() {
            return Err(Error::InvalidParameter(format!(
                "function has {} values but the graph has {} vertices",
                values.len(),
                graph.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at `{}`", graph.id(k))));
        }
        Ok(Self { graph, values })
    }

    pub fn zeros(graph: &'g WeightedGraph) -> Self {
        Self { graph, values: vec![0.0; graph.len()] }
    }

    pub fn constant(graph: &'g WeightedGraph, c: f64) -> Self {
        Self { graph, values: vec![c; graph.len()] }
    }

    pub fn from_fn(graph: &'g WeightedGraph, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new(graph, (0..graph.len()).map(f).collect())
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { graph: self.graph, values: self.values.iter().map(|v| c * v).collect() }
    }

    fn check_vertex(&self, x: usize) -> Result<()> {
        if x < self.graph.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("#{x}")))
        }
    }

    fn check_binding(&self, other: &GraphFunction<'_>) -> Result<()> {
        if std::ptr::eq(self.graph, other.graph) {
            Ok(())
        } else {
            Err(Error::BindingMismatch)
        }
    }
}

/// Integration set for weak forms and norms.
#[derive(Debug, Clone, Copy)]
pub enum Support<'a> {
    Whole,
    /// `Omega ∪ ∂Omega` of a Dirichlet domain.
    Domain(&'a DomainPartition),
}

impl Support<'_> {
    pub fn contains(&self, x: usize) -> bool {
        match self {
            Support::Whole => true,
            Support::Domain(d) => d.in_support(x),
        }
    }
}

// ---------------------------------------------------------------------------
// slice kernels

/// `Γ(u,v)(x)`.
pub fn gamma_at(g: &WeightedGraph, u: &[f64], v: &[f64], x: usize) -> f64 {
    let s: f64 = csum(g.neighbors(x).iter().map(|n| n.weight * (u[n.vertex] - u[x]) * (v[n.vertex] - v[x])));
    s / (2.0 * g.mu()[x])
}

/// `Γ(u,u)(x) = |∇u|^2(x)`.
pub fn grad_sq_at(g: &WeightedGraph, u: &[f64], x: usize) -> f64 {
    let s: f64 = csum(g.neighbors(x).iter().map(|n| {
        let d = u[n.vertex] - u[x];
        n.weight * d * d
    }));
    s / (2.0 * g.mu()[x])
}

pub fn grad_lengths(g: &WeightedGraph, u: &[f64]) -> Vec<f64> {
    (0..g.len()).map(|x| grad_sq_at(g, u, x).sqrt()).collect()
}

pub fn laplacian_values(g: &WeightedGraph, u: &[f64]) -> Vec<f64> {
    (0..g.len()).map(|x| csum(g.neighbors(x).iter().map(|n| n.weight * (u[n.vertex] - u[x]))) / g.mu()[x]).collect()
}

/// Adjoint of `Δ` with respect to the plain (unweighted) inner product:
/// `(Δ^T r)(z) = sum_{x~z} w_xz r(x)/mu(x) - deg(z) r(z)/mu(z)`.
pub fn laplacian_transpose_values(g: &WeightedGraph, r: &[f64]) -> Vec<f64> {
    let mu = g.mu();
    (0..g.len())
        .map(|z| {
            let mut acc = CompensatedSum::new();
            let mut deg = 0.0;
            for n in g.neighbors(z) {
                acc.add(n.weight * r[n.vertex] / mu[n.vertex]);
                deg += n.weight;
            }
            acc.add(-deg * r[z] / mu[z]);
            acc.value()
        })
        .collect()
}

/// `Δ^k u`.
pub fn iterated_laplacian(g: &WeightedGraph, u: &[f64], k: usize) -> Vec<f64> {
    let mut f = u.to_vec();
    for _ in 0..k {
        f = laplacian_values(g, &f);
    }
    f
}

/// `(Δ^T)^k r`.
pub fn iterated_laplacian_transpose(g: &WeightedGraph, r: &[f64], k: usize) -> Vec<f64> {
    let mut f = r.to_vec();
    for _ in 0..k {
        f = laplacian_transpose_values(g, &f);
    }
    f
}

/// `|∇^m u|` at every vertex, `m >= 1`.
pub fn higher_grad_lengths(g: &WeightedGraph, u: &[f64], m: usize) -> Vec<f64> {
    assert!(m >= 1, "gradient order must be >= 1");
    if m % 2 == 1 {
        grad_lengths(g, &iterated_laplacian(g, u, (m - 1) / 2))
    } else {
        iterated_laplacian(g, u, m / 2).into_iter().map(f64::abs).collect()
    }
}

pub fn p_laplacian_values(g: &WeightedGraph, u: &[f64], l: f64) -> Vec<f64> {
    let gl: Vec<f64> = grad_lengths(g, u).into_iter().map(|s| abs_pow(s, l - 2.0)).collect();
    (0..g.len())
        .map(|x| {
            let s = csum(g.neighbors(x).iter().map(|n| {
                let d = u[n.vertex] - u[x];
                // a vanishing gradient length at either endpoint forces d == 0
                if d == 0.0 {
                    0.0
                } else {
                    (gl[n.vertex] + gl[x]) * n.weight * d
                }
            }));
            s / (2.0 * g.mu()[x])
        })
        .collect()
}

/// The weak form of the order-`m` poly-Laplacian paired with `phi`, integrated
/// over `support`.
pub fn weak_poly_pairing_values(
    g: &WeightedGraph,
    u: &[f64],
    phi: &[f64],
    m: usize,
    l: f64,
    support: Support<'_>,
) -> f64 {
    assert!(m >= 1, "gradient order must be >= 1");
    let mu = g.mu();
    let mut acc = CompensatedSum::new();
    if m % 2 == 1 {
        let k = (m - 1) / 2;
        let f = iterated_laplacian(g, u, k);
        let psi = iterated_laplacian(g, phi, k);
        for x in (0..g.len()).filter(|&x| support.contains(x)) {
            let len = grad_sq_at(g, &f, x).sqrt();
            if len == 0.0 {
                continue;
            }
            acc.add(mu[x] * len.powf(l - 2.0) * gamma_at(g, &f, &psi, x));
        }
    } else {
        let f = iterated_laplacian(g, u, m / 2);
        let psi = iterated_laplacian(g, phi, m / 2);
        for x in (0..g.len()).filter(|&x| support.contains(x)) {
            if f[x] == 0.0 {
                continue;
            }
            acc.add(mu[x] * f[x].abs().powf(l - 2.0) * f[x] * psi[x]);
        }
    }
    acc.value()
}

pub fn integrate_values(g: &WeightedGraph, u: &[f64], over: impl IntoIterator<Item = usize>) -> f64 {
    csum(over.into_iter().map(|x| g.mu()[x] * u[x]))
}

fn check_exponent(l: f64, what: &str) -> Result<()> {
    if l.is_finite() && l > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} exponent must be > 1, got {l}")))
    }
}

// ---------------------------------------------------------------------------
// checked API

/// `D_{w,y} u(x)`; requires `xy` to be an edge.
pub fn directional_derivative(u: &GraphFunction<'_>, x: usize, y: usize) -> Result<f64> {
    u.check_vertex(x)?;
    u.check_vertex(y)?;
    let g = u.graph;
    let w = g.weight(x, y).ok_or_else(|| Error::NotAdjacent(g.id(x).to_string(), g.id(y).to_string()))?;
    Ok((u.values[x] - u.values[y]) * (w / g.mu()[x]).sqrt() / std::f64::consts::SQRT_2)
}

pub fn gamma(u: &GraphFunction<'_>, v: &GraphFunction<'_>, x: usize) -> Result<f64> {
    u.check_binding(v)?;
    u.check_vertex(x)?;
    Ok(gamma_at(u.graph, &u.values, &v.values, x))
}

pub fn grad_length(u: &GraphFunction<'_>, x: usize) -> Result<f64> {
    u.check_vertex(x)?;
    Ok(grad_sq_at(u.graph, &u.values, x).sqrt())
}

pub fn laplacian<'g>(u: &GraphFunction<'g>) -> GraphFunction<'g> {
    GraphFunction { graph: u.graph, values: laplacian_values(u.graph, &u.values) }
}

pub fn higher_grad_length(u: &GraphFunction<'_>, m: usize, x: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("gradient order 0 is not a gradient; use |u| directly".into()));
    }
    u.check_vertex(x)?;
    Ok(higher_grad_lengths(u.graph, &u.values, m)[x])
}

pub fn p_laplacian<'g>(u: &GraphFunction<'g>, l: f64) -> Result<GraphFunction<'g>> {
    check_exponent(l, "l-Laplacian")?;
    Ok(GraphFunction { graph: u.graph, values: p_laplacian_values(u.graph, &u.values, l) })
}

pub fn weak_poly_pairing(
    u: &GraphFunction<'_>,
    phi: &GraphFunction<'_>,
    m: usize,
    l: f64,
    support: Support<'_>,
) -> Result<f64> {
    u.check_binding(phi)?;
    check_exponent(l, "poly-Laplacian")?;
    if m == 0 {
        return Err(Error::InvalidParameter("gradient order must be >= 1".into()));
    }
    Ok(weak_poly_pairing_values(u.graph, &u.values, &phi.values, m, l, support))
}

/// `sum_{x in over} mu(x) u(x)`.
pub fn integrate(u: &GraphFunction<'_>, over: &[usize]) -> Result<f64> {
    for &x in over {
        u.check_vertex(x)?;
    }
    Ok(integrate_values(u.graph, &u.values, over.iter().copied()))
}

pub fn integrate_all(u: &GraphFunction<'_>) -> f64 {
    integrate_values(u.graph, &u.values, 0..u.graph.len())
}

/// `L^r` norm over `over`; `r = f64::INFINITY` gives the max norm.
pub fn lr_norm(u: &GraphFunction<'_>, r: f64, over: &[usize]) -> Result<f64> {
    for &x in over {
        u.check_vertex(x)?;
    }
    lr_norm_values(u.graph, &u.values, r, over.iter().copied())
}

pub fn lr_norm_values(g: &WeightedGraph, u: &[f64], r: f64, over: impl IntoIterator<Item = usize>) -> Result<f64> {
    if r.is_nan() || r < 1.0 {
        return Err(Error::InvalidParameter(format!("L^r norm needs r >= 1, got {r}")));
    }
    if r == f64::INFINITY {
        return Ok(over.into_iter().fold(0.0, |m: f64, x| m.max(u[x].abs())));
    }
    let s = csum(over.into_iter().map(|x| g.mu()[x] * abs_pow(u[x], r)));
    Ok(s.powf(1.0 / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use approx::assert_relative_eq;
    use std::f64::consts::SQRT_2;

    fn pair(w: f64, mu_a: f64, mu_b: f64) -> WeightedGraph {
        GraphBuilder::new()
            .vertex("a", mu_a, 1.0, 1.0)
            .unwrap()
            .vertex("b", mu_b, 1.0, 1.0)
            .unwrap()
            .edge("a", "b", w)
            .unwrap()
            .build()
            .unwrap()
    }

    #[test]
    fn directional_derivative_examples() {
        let g = pair(1.0, 1.0, 1.0);
        let u = GraphFunction::new(&g, vec![0.0, 1.0]).unwrap();
        assert_relative_eq!(directional_derivative(&u, 0, 1).unwrap(), -1.0 / SQRT_2, epsilon = 1e-15);

        let c = GraphFunction::constant(&g, 3.5);
        assert_eq!(directional_derivative(&c, 0, 1).unwrap(), 0.0);

        let g = pair(4.0, 2.0, 1.0);
        let u = GraphFunction::new(&g, vec![3.0, 1.0]).unwrap();
        assert_relative_eq!(directional_derivative(&u, 0, 1).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn directional_derivative_requires_edge() {
        let g = GraphBuilder::new()
            .vertex("a", 1.0, 1.0, 1.0)
            .unwrap()
            .vertex("b", 1.0, 1.0, 1.0)
            .unwrap()
            .build()
            .unwrap();
        let u = GraphFunction::zeros(&g);
        assert!(matches!(directional_derivative(&u, 0, 1), Err(Error::NotAdjacent(..))));
    }

    #[test]
    fn gamma_and_grad_examples() {
        let g = pair(1.0, 1.0, 1.0);
        let u = GraphFunction::new(&g, vec![0.0, 1.0]).unwrap();
        assert_relative_eq!(gamma(&u, &u, 0).unwrap(), 0.5);
        assert_relative_eq!(grad_length(&u, 0).unwrap(), 1.0 / SQRT_2);
        let c = GraphFunction::constant(&g, 2.0);
        assert_eq!(gamma(&u, &c, 0).unwrap(), 0.0);
        assert_eq!(grad_length(&c, 1).unwrap(), 0.0);
    }

    #[test]
    fn gamma_rejects_foreign_binding() {
        let g1 = pair(1.0, 1.0, 1.0);
        let g2 = pair(1.0, 1.0, 1.0);
        let u = GraphFunction::zeros(&g1);
        let v = GraphFunction::zeros(&g2);
        assert_eq!(gamma(&u, &v, 0), Err(Error::BindingMismatch));
    }

    #[test]
    fn laplacian_examples() {
        let g = pair(1.0, 1.0, 1.0);
        let u = GraphFunction::new(&g, vec![0.0, 1.0]).unwrap();
        assert_eq!(laplacian(&u).values(), &[1.0, -1.0]);
        assert_eq!(laplacian(&GraphFunction::constant(&g, 7.0)).values(), &[0.0, 0.0]);
    }

    #[test]
    fn higher_order_examples() {
        let g = pair(1.0, 1.0, 1.0);
        let u = GraphFunction::new(&g, vec![0.0, 1.0]).unwrap();
        assert_relative_eq!(higher_grad_length(&u, 2, 0).unwrap(), 1.0);
        assert_relative_eq!(higher_grad_length(&u, 1, 0).unwrap(), grad_length(&u, 0).unwrap());
        assert!(higher_grad_length(&u, 0, 0).is_err());
        let c = GraphFunction::constant(&g, -2.0);
        for m in 1..5 {
            assert_eq!(higher_grad_length(&c, m, 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn p_laplacian_examples() {
        let g = pair(1.0, 1.0, 1.0);
        let u = GraphFunction::new(&g, vec![0.0, 1.0]).unwrap();
        assert_relative_eq!(p_laplacian(&u, 3.0).unwrap().at(0), 1.0 / SQRT_2, epsilon = 1e-15);
        assert_eq!(p_laplacian(&u, 2.0).unwrap().values(), laplacian(&u).values());
        let c = GraphFunction::constant(&g, 1.0);
        for l in [1.5, 2.0, 3.0] {
            assert!(p_laplacian(&c, l).unwrap().values().iter().all(|&v| v == 0.0));
        }
        assert!(p_laplacian(&u, 1.0).is_err());
    }

    #[test]
    fn integrate_and_norm_examples() {
        let g = pair(1.0, 2.0, 3.0);
        let u = GraphFunction::new(&g, vec![1.0, -1.0]).unwrap();
        assert_eq!(integrate(&u, &[0, 1]).unwrap(), -1.0);
        assert_eq!(integrate(&u, &[]).unwrap(), 0.0);

        let g = pair(1.0, 1.0, 1.0);
        let u = GraphFunction::new(&g, vec![3.0, 4.0]).unwrap();
        assert_relative_eq!(lr_norm(&u, 2.0, &[0, 1]).unwrap(), 5.0);
        let u = GraphFunction::new(&g, vec![3.0, -4.0]).unwrap();
        assert_eq!(lr_norm(&u, f64::INFINITY, &[0, 1]).unwrap(), 4.0);
        assert_eq!(lr_norm(&GraphFunction::zeros(&g), 3.0, &[0, 1]).unwrap(), 0.0);
        assert!(lr_norm(&u, 0.5, &[0]).is_err());
        assert_eq!(integrate_all(&GraphFunction::constant(&g, 1.0)), 2.0);
    }

    #[test]
    fn spike_gradient_closed_form() {
        let mut b = GraphBuilder::new();
        b.add_vertex("c", 1.5, 1.0, 1.0).unwrap();
        b.add_vertex("x", 0.7, 1.0, 1.0).unwrap();
        b.add_vertex("y", 1.1, 1.0, 1.0).unwrap();
        b.add_edge("c", "x", 0.3).unwrap();
        b.add_edge("c", "y", 1.9).unwrap();
        let g = b.build().unwrap();
        let xi = 2.5;
        let u = GraphFunction::new(&g, vec![xi, 0.0, 0.0]).unwrap();
        let expected = (g.degree(0) / (2.0 * 1.5)).sqrt() * xi;
        assert_relative_eq!(grad_length(&u, 0).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn weak_pairing_rejects_bad_input() {
        let g = pair(1.0, 1.0, 1.0);
        let u = GraphFunction::zeros(&g);
        assert!(weak_poly_pairing(&u, &u, 0, 2.0, Support::Whole).is_err());
        assert!(weak_poly_pairing(&u, &u, 1, 1.0, Support::Whole).is_err());
    }

    #[test]
    fn function_validation() {
        let g = pair(1.0, 1.0, 1.0);
        assert!(GraphFunction::new(&g, vec![1.0]).is_err());
        assert!(GraphFunction::new(&g, vec![1.0, f64::NAN]).is_err());
    }
}
