//! Sobolev-type norms on graphs and their embedding constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    grad_sq_at, higher_grad_lengths, iterated_laplacian, iterated_laplacian_transpose, lr_norm_values, GraphFunction,
};
use crate::error::{Error, Result};
use crate::graph::{Channel, DomainPartition, WeightedGraph};
use crate::numeric::{abs_pow, csum, signed_pow, CompensatedSum};
use crate::optimize::{minimize, DescentOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `W^{m,l}(V)` on a finite graph: `(∫_V |∇^m u|^l + h|u|^l dμ)^{1/l}`.
    FiniteFull,
    /// `W_0^{m,l}(Ω)`: `(∫_{Ω∪∂Ω} |∇^m u|^l dμ)^{1/l}` on zero-extended functions.
    Dirichlet,
    /// `W_h^{1,l}(V)`: `(∫_V |∇u|^l + h|u|^l dμ)^{1/l}`.
    Wh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    pub m: usize,
    pub l: f64,
    pub channel: Channel,
}

impl NormSpec {
    pub fn new(kind: NormKind, m: usize, l: f64, channel: Channel) -> Self {
        Self { kind, m, l, channel }
    }
}

/// Embedding target norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Sup,
    Lr(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConstant {
    pub value: f64,
    pub source: ConstantSource,
}

/// A normed function space bound to a graph (and a domain in Dirichlet mode).
///
/// Functions are handled either as full vertex-indexed vectors or as vectors
/// of free coordinates; in Dirichlet mode the free coordinates are the values
/// on `free(m)` and every other vertex is held at zero.
#[derive(Debug, Clone)]
pub struct Space<'a> {
    graph: &'a WeightedGraph,
    domain: Option<&'a DomainPartition>,
    spec: NormSpec,
    free: Vec<usize>,
    in_free: Vec<bool>,
}

impl<'a> Space<'a> {
    pub fn new(graph: &'a WeightedGraph, domain: Option<&'a DomainPartition>, spec: NormSpec) -> Result<Self> {
        if !(spec.l.is_finite() && spec.l > 1.0) {
            return Err(Error::InvalidParameter(format!("norm exponent must be > 1, got {}", spec.l)));
        }
        if spec.m == 0 {
            return Err(Error::InvalidParameter("norm order must be >= 1".into()));
        }
        let free = match spec.kind {
            NormKind::Dirichlet => {
                let d = domain
                    .ok_or_else(|| Error::InvalidParameter("Dirichlet norm requires a domain partition".into()))?;
                d.require_solvable(spec.m)?;
                d.free(spec.m)
            }
            NormKind::FiniteFull | NormKind::Wh => {
                if spec.kind == NormKind::Wh && spec.m != 1 {
                    return Err(Error::InvalidParameter("W_h norm is first order only".into()));
                }
                let h = graph.potential(spec.channel);
                if let Some(x) = (0..graph.len()).find(|&x| h[x] <= 0.0) {
                    return Err(Error::Hypothesis(format!(
                        "potential {:?} must be positive, got {} at `{}`",
                        spec.channel,
                        h[x],
                        graph.id(x)
                    )));
                }
                (0..graph.len()).collect()
            }
        };
        let mut in_free = vec![false; graph.len()];
        for &x in &free {
            in_free[x] = true;
        }
        Ok(Self { graph, domain, spec, free, in_free })
    }

    pub fn graph(&self) -> &'a WeightedGraph {
        self.graph
    }

    pub fn domain(&self) -> Option<&'a DomainPartition> {
        self.domain
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Vertex indices carrying free coordinates.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// Vertices over which the nonlinearity integrates.
    pub fn active(&self) -> Vec<usize> {
        match (self.spec.kind, self.domain) {
            (NormKind::Dirichlet, Some(d)) => d.omega().to_vec(),
            _ => (0..self.graph.len()).collect(),
        }
    }

    fn in_integration(&self, x: usize) -> bool {
        match (self.spec.kind, self.domain) {
            (NormKind::Dirichlet, Some(d)) => d.in_support(x),
            _ => true,
        }
    }

    fn potential(&self) -> Option<&'a [f64]> {
        match self.spec.kind {
            NormKind::Dirichlet => None,
            _ => Some(self.graph.potential(self.spec.channel)),
        }
    }

    pub fn embed(&self, coords: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.graph.len()];
        for (&x, &c) in self.free.iter().zip(coords) {
            full[x] = c;
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&x| full[x]).collect()
    }

    /// Reject full vectors that are nonzero outside the free set.
    pub fn check_support(&self, full: &[f64]) -> Result<()> {
        if let Some(x) = (0..full.len()).find(|&x| !self.in_free[x] && full[x] != 0.0) {
            return Err(Error::ConstraintViolation(format!(
                "value {} at `{}` outside the free vertex set",
                full[x],
                self.graph.id(x)
            )));
        }
        Ok(())
    }

    /// `||u||^l`.
    pub fn norm_pow(&self, full: &[f64]) -> f64 {
        let g = self.graph;
        let mu = g.mu();
        let l = self.spec.l;
        let lens = higher_grad_lengths(g, full, self.spec.m);
        let mut acc = CompensatedSum::new();
        for x in 0..g.len() {
            if self.in_integration(x) {
                acc.add(mu[x] * abs_pow(lens[x], l));
            }
        }
        if let Some(h) = self.potential() {
            for x in 0..g.len() {
                acc.add(mu[x] * h[x] * abs_pow(full[x], l));
            }
        }
        acc.value()
    }

    pub fn norm(&self, full: &[f64]) -> f64 {
        self.norm_pow(full).powf(1.0 / self.spec.l)
    }

    fn smoothing_active(&self, eps: f64) -> bool {
        eps > 0.0 && self.spec.l < 2.0 && self.spec.m % 2 == 1
    }

    /// `(1/l) ||u||^l`, with the gradient part smoothed to
    /// `((|∇^m u|^2 + eps^2)^{l/2} - eps^l)` when `l < 2` and `m` is odd.
    pub fn energy(&self, full: &[f64], eps: f64) -> f64 {
        if !self.smoothing_active(eps) {
            return self.norm_pow(full) / self.spec.l;
        }
        let g = self.graph;
        let mu = g.mu();
        let l = self.spec.l;
        let f = iterated_laplacian(g, full, (self.spec.m - 1) / 2);
        let mut acc = CompensatedSum::new();
        for x in (0..g.len()).filter(|&x| self.in_integration(x)) {
            let gs = grad_sq_at(g, &f, x);
            acc.add(mu[x] * ((gs + eps * eps).powf(l / 2.0) - eps.powf(l)));
        }
        if let Some(h) = self.potential() {
            for x in 0..g.len() {
                acc.add(mu[x] * h[x] * abs_pow(full[x], l));
            }
        }
        acc.value() / l
    }

    /// Gradient of [`Space::energy`] with respect to every vertex value.
    pub fn energy_grad(&self, full: &[f64], eps: f64) -> Vec<f64> {
        let g = self.graph;
        let mu = g.mu();
        let l = self.spec.l;
        let m = self.spec.m;
        let n = g.len();
        let r = if m % 2 == 1 {
            let k = (m - 1) / 2;
            let f = iterated_laplacian(g, full, k);
            let smooth = self.smoothing_active(eps);
            let coef: Vec<f64> = (0..n)
                .map(|x| {
                    if !self.in_integration(x) {
                        return 0.0;
                    }
                    let gs = grad_sq_at(g, &f, x);
                    if smooth {
                        (gs + eps * eps).powf((l - 2.0) / 2.0)
                    } else {
                        abs_pow(gs.sqrt(), l - 2.0)
                    }
                })
                .collect();
            let r: Vec<f64> = (0..n)
                .map(|z| {
                    let mut acc = CompensatedSum::new();
                    for nb in g.neighbors(z) {
                        let x = nb.vertex;
                        let d = f[z] - f[x];
                        if coef[x] != 0.0 && d != 0.0 {
                            acc.add(coef[x] * nb.weight * d);
                        }
                        if coef[z] != 0.0 && d != 0.0 {
                            acc.add(coef[z] * nb.weight * d);
                        }
                    }
                    0.5 * acc.value()
                })
                .collect();
            iterated_laplacian_transpose(g, &r, k)
        } else {
            let k = m / 2;
            let f = iterated_laplacian(g, full, k);
            let r: Vec<f64> =
                (0..n).map(|z| if self.in_integration(z) { mu[z] * signed_pow(f[z], l) } else { 0.0 }).collect();
            iterated_laplacian_transpose(g, &r, k)
        };
        let mut grad = r;
        if let Some(h) = self.potential() {
            for x in 0..n {
                grad[x] += mu[x] * h[x] * signed_pow(full[x], l);
            }
        }
        grad
    }

    /// Norm of a function given by its free coordinates.
    pub fn norm_of_coords(&self, coords: &[f64]) -> f64 {
        self.norm(&self.embed(coords))
    }

    /// Target norm (sup or `L^r`) over the active vertex set.
    pub fn target_norm(&self, full: &[f64], target: Target) -> f64 {
        let over = self.active();
        match target {
            Target::Sup => over.iter().fold(0.0, |m: f64, &x| m.max(full[x].abs())),
            Target::Lr(r) => lr_norm_values(self.graph, full, r, over).unwrap_or(f64::NAN),
        }
    }

    /// Explicit embedding constants where one is known; `Ok(None)` when the
    /// constant has no closed form.
    pub fn closed_form_constant(&self, target: Target) -> Result<Option<f64>> {
        check_target(target)?;
        let l = self.spec.l;
        let mu_min = self.graph.mu_min();
        let h_min = self.graph.potential_min(self.spec.channel);
        match (self.spec.kind, target) {
            (NormKind::FiniteFull, Target::Sup) => Ok(Some((1.0 / (mu_min * h_min)).powf(1.0 / l))),
            (NormKind::Wh, Target::Sup) => Ok(Some(1.0 / (h_min.powf(1.0 / l) * mu_min.powf(1.0 / l)))),
            (NormKind::Wh, Target::Lr(r)) => {
                if r < l {
                    return Err(Error::InvalidParameter(format!(
                        "W_h embedding into L^r needs l <= r, got l={l}, r={r}"
                    )));
                }
                Ok(Some(mu_min.powf((l - r) / (l * r)) * h_min.powf(-1.0 / l)))
            }
            _ => Ok(None),
        }
    }

    /// The exact best constant `sup ||u||_target / ||u||` over the space,
    /// computed numerically.
    ///
    /// The sup-norm case splits over vertices: for each free vertex `x` the
    /// convex problem `min ||u||` subject to `u(x) = 1` is solved by descent.
    /// The `L^r` case maximizes the scale-invariant ratio with restarted
    /// ascent from every spike and `restarts` random directions.
    pub fn numeric_constant(&self, target: Target, restarts: usize, seed: u64) -> Result<f64> {
        check_target(target)?;
        let opts = DescentOptions { tol: 1e-11, max_iter: 5_000, ..Default::default() };
        let eps = 1e-9;
        match target {
            Target::Sup => {
                let mut best: f64 = 0.0;
                for (i, _) in self.free.iter().enumerate() {
                    let others: Vec<usize> = (0..self.dim()).filter(|&j| j != i).collect();
                    let lift = |y: &[f64]| {
                        let mut c = vec![0.0; self.dim()];
                        c[i] = 1.0;
                        for (&j, &v) in others.iter().zip(y) {
                            c[j] = v;
                        }
                        c
                    };
                    let out = minimize(
                        |y| {
                            let full = self.embed(&lift(y));
                            let e = self.energy(&full, eps);
                            let gfull = self.energy_grad(&full, eps);
                            (e, others.iter().map(|&j| gfull[self.free[j]]).collect())
                        },
                        vec![0.0; others.len()],
                        &opts,
                    );
                    // exact (unsmoothed) norm at the minimizer
                    let norm = self.norm(&self.embed(&lift(&out.x)));
                    if norm > 0.0 {
                        best = best.max(1.0 / norm);
                    }
                }
                Ok(best)
            }
            Target::Lr(r) => {
                let l = self.spec.l;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut starts: Vec<Vec<f64>> = (0..self.dim())
                    .map(|i| {
                        let mut c = vec![0.0; self.dim()];
                        c[i] = 1.0;
                        c
                    })
                    .collect();
                for _ in 0..restarts {
                    starts.push((0..self.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect());
                }
                let active = self.active();
                let mu = self.graph.mu();
                let mut best: f64 = 0.0;
                for start in starts {
                    let out = minimize(
                        |c| {
                            // -ln ||u||_r + ln ||u||, scale invariant
                            let full = self.embed(c);
                            let s = csum(active.iter().map(|&x| mu[x] * abs_pow(full[x], r)));
                            let e = self.energy(&full, eps);
                            if s <= 0.0 || e <= 0.0 {
                                return (f64::NAN, vec![f64::NAN; c.len()]);
                            }
                            let val = -s.ln() / r + (l * e).ln() / l;
                            let ge = self.energy_grad(&full, eps);
                            let mut gr = vec![0.0; full.len()];
                            for &x in &active {
                                gr[x] = mu[x] * signed_pow(full[x], r) / s;
                            }
                            let grad = self.free.iter().map(|&x| -gr[x] + ge[x] / (l * e)).collect();
                            (val, grad)
                        },
                        start,
                        &DescentOptions { tol: 1e-10, max_iter: 2_000, ..Default::default() },
                    );
                    let full = self.embed(&out.x);
                    let n = self.norm(&full);
                    if n > 0.0 && out.value.is_finite() {
                        best = best.max(self.target_norm(&full, target) / n);
                    }
                }
                Ok(best)
            }
        }
    }

    /// Closed form when available, otherwise the numeric constant.
    pub fn embedding_constant(&self, target: Target, prefer: ConstantSource, seed: u64) -> Result<EmbeddingConstant> {
        if prefer == ConstantSource::ClosedForm {
            if let Some(value) = self.closed_form_constant(target)? {
                return Ok(EmbeddingConstant { value, source: ConstantSource::ClosedForm });
            }
        }
        Ok(EmbeddingConstant { value: self.numeric_constant(target, 20, seed)?, source: ConstantSource::Numeric })
    }

    /// `C(m, l, Ω)` in the form `||u||_∞ <= C / μ_min,Ω^{1/l} ||u||`; computed
    /// from the numeric sup-norm constant.
    pub fn dirichlet_c(&self) -> Result<f64> {
        let d = self
            .domain
            .filter(|_| self.spec.kind == NormKind::Dirichlet)
            .ok_or_else(|| Error::InvalidParameter("C(m,l,Omega) needs a Dirichlet space".into()))?;
        let mu_min = d.omega().iter().map(|&x| self.graph.mu()[x]).fold(f64::INFINITY, f64::min);
        Ok(mu_min.powf(1.0 / self.spec.l) * self.numeric_constant(Target::Sup, 0, 0)?)
    }
}

fn check_target(target: Target) -> Result<()> {
    match target {
        Target::Lr(r) if !(r >= 1.0) || r.is_infinite() => {
            Err(Error::InvalidParameter(format!("L^r target needs finite r >= 1, got {r}")))
        }
        _ => Ok(()),
    }
}

/// Sobolev norm of `u` under `spec`.
pub fn sobolev_norm(u: &GraphFunction<'_>, spec: NormSpec, domain: Option<&DomainPartition>) -> Result<f64> {
    let space = Space::new(u.graph(), domain, spec)?;
    space.check_support(u.values())?;
    Ok(space.norm(u.values()))
}

/// Convenience wrapper: embedding constant of `spec` on `graph`.
pub fn embedding_constant(
    graph: &WeightedGraph,
    domain: Option<&DomainPartition>,
    spec: NormSpec,
    target: Target,
    prefer: ConstantSource,
) -> Result<EmbeddingConstant> {
    Space::new(graph, domain, spec)?.embedding_constant(target, prefer, 0x5eed)
}

/// A random nonzero direction, used by samplers.
pub(crate) fn random_coords(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
}
