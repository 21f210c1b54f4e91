//! Energy functionals `I = Φ - λΨ` of the three systems, their gradients and
//! the constants bounding the admissible `λ` interval.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calculus::GraphFunction;
use crate::error::{Error, Result};
use crate::graph::{Channel, DomainPartition, WeightedGraph};
use crate::models::{
    default_rays, estimate_a, estimate_b, geometric_radii, Arity, GrowthEstimate, GrowthHint, ModelSpec,
    NonlinearityModel,
};
use crate::numeric::{csum, CompensatedSum};
use crate::spaces::{ConstantSource, NormKind, NormSpec, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Poly-Laplacian system on a finite graph with full norms.
    FinitePoly,
    /// Poly-Laplacian system on a domain with Dirichlet boundary values.
    DirichletPoly,
    /// `(p, q)`-Laplacian system in `W_h^{1,p} × W_h^{1,q}`.
    PqWh,
}

/// Where the growth constants `A`, `B` come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbSource {
    /// User-supplied `growth` values, else the model's own closed form or oracle.
    ClosedForm,
    /// Sampling estimators.
    #[default]
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthValues {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

/// Sampling parameters for the growth estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSettings {
    /// Explicit radii; when absent, `count` geometric radii from
    /// `radius_min` to `radius_max` are used.
    pub radii: Option<Vec<f64>>,
    pub radius_min: f64,
    pub radius_max: f64,
    pub count: usize,
    pub grid: usize,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self { radii: None, radius_min: 1e1, radius_max: 1e8, count: 400, grid: 64 }
    }
}

impl EstimatorSettings {
    pub fn radii(&self) -> Vec<f64> {
        self.radii.clone().unwrap_or_else(|| geometric_radii(self.radius_min, self.radius_max, self.count))
    }
}

fn one() -> usize {
    1
}

fn two() -> u8 {
    2
}

fn default_smoothing() -> f64 {
    1e-8
}

/// A system description as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub system: SystemKind,
    pub p: f64,
    pub q: f64,
    #[serde(default = "one")]
    pub m1: usize,
    #[serde(default = "one")]
    pub m2: usize,
    pub lambda: f64,
    #[serde(default = "two")]
    pub arity: u8,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthValues>,
    #[serde(default)]
    pub ab_source: AbSource,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    /// `ε` of the smoothed gradient term used when an exponent is below 2.
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn arity(&self) -> Result<Arity> {
        Arity::from_count(self.arity)
    }

    /// Exponent, order and parameter constraints of the chosen system.
    /// `λ = 0` is accepted for comparison runs.
    pub fn validate(&self) -> Result<()> {
        self.arity()?;
        for (name, e) in [("p", self.p), ("q", self.q)] {
            if !(e.is_finite() && e > 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must be a finite exponent > 1, got {e}")));
            }
        }
        if self.m1 == 0 || self.m2 == 0 {
            return Err(Error::InvalidParameter("orders m1, m2 must be >= 1".into()));
        }
        if self.system == SystemKind::PqWh {
            if self.p < 2.0 || self.q < 2.0 {
                return Err(Error::InvalidParameter("pq_wh requires p, q >= 2".into()));
            }
            if self.m1 != 1 || self.m2 != 1 {
                return Err(Error::InvalidParameter("pq_wh is first order: m1 = m2 = 1".into()));
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return Err(Error::InvalidParameter("smoothing must be finite and >= 0".into()));
        }
        if let Some(g) = self.growth {
            if !(g.a >= 0.0 && g.b >= 0.0) {
                return Err(Error::InvalidParameter("growth constants must be >= 0".into()));
            }
        }
        Ok(())
    }

    fn norm_kind(&self) -> NormKind {
        match self.system {
            SystemKind::FinitePoly => NormKind::FiniteFull,
            SystemKind::DirichletPoly => NormKind::Dirichlet,
            SystemKind::PqWh => NormKind::Wh,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }
}

/// `M(x) = (deg(x)/2μ(x))^{l/2} μ(x) + h(x) μ(x) + Σ_{y∼x} (w_xy/2μ(y))^{l/2} μ(y)`,
/// the norm power of the unit spike at `x`.
pub fn spike_mass_at(graph: &WeightedGraph, x: usize, l: f64, channel: Channel) -> f64 {
    let mu = graph.mu();
    let h = graph.potential(channel);
    let mut acc = CompensatedSum::new();
    acc.add((graph.degree(x) / (2.0 * mu[x])).powf(l / 2.0) * mu[x]);
    acc.add(h[x] * mu[x]);
    for nb in graph.neighbors(x) {
        let y = nb.vertex;
        acc.add((nb.weight / (2.0 * mu[y])).powf(l / 2.0) * mu[y]);
    }
    acc.value()
}

/// [`spike_mass_at`] by vertex id.
pub fn spike_mass(graph: &WeightedGraph, x: &str, l: f64, channel: Channel) -> Result<f64> {
    Ok(spike_mass_at(graph, graph.vertex(x)?, l, channel))
}

/// Origin of a growth constant in an [`IntervalReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthSource {
    User,
    ClosedForm,
    Oracle,
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstant {
    pub value: f64,
    pub source: GrowthSource,
    pub heuristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<(f64, f64)>>,
}

/// The admissible interval `(lambda_lo, lambda_hi)` and everything used to
/// compute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub system: SystemKind,
    pub arity: u8,
    pub p: f64,
    pub q: f64,
    /// `ϱ`-type constant; absent for the Dirichlet system whose lower end is `1/B`.
    pub rho: Option<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    pub k_source: ConstantSource,
    #[serde(rename = "A")]
    pub a: GrowthConstant,
    #[serde(rename = "B")]
    pub b: GrowthConstant,
    /// Closed-form or oracle growth values of the model, for comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_hint: Option<GrowthHint>,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub valid: bool,
    /// Minimizing vertex of the spike masses (`pq_wh` only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<String>,
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl IntervalReport {
    /// Whether `lambda` lies strictly inside a valid interval.
    pub fn contains(&self, lambda: f64) -> bool {
        self.valid && self.lambda_lo < lambda && lambda < self.lambda_hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_lo + self.lambda_hi)
    }
}

/// A system bound to a graph: the two spaces, the model and `λ`.
///
/// States are handled as free-coordinate vectors `[u_free, v_free]`
/// (arity 1 has no `v` block) or as pairs of full vertex vectors.
#[derive(Debug, Clone)]
pub struct Problem<'g> {
    spec: SystemSpec,
    graph: &'g WeightedGraph,
    domain: Option<&'g DomainPartition>,
    space_u: Space<'g>,
    space_v: Option<Space<'g>>,
    model: NonlinearityModel,
    active: Vec<usize>,
}

impl<'g> Problem<'g> {
    pub fn new(spec: &SystemSpec, graph: &'g WeightedGraph, domain: Option<&'g DomainPartition>) -> Result<Self> {
        spec.validate()?;
        let arity = spec.arity()?;
        let kind = spec.norm_kind();
        if kind == NormKind::Dirichlet && domain.is_none() {
            return Err(Error::InvalidParameter("dirichlet_poly requires a domain (Omega) in the graph file".into()));
        }
        let domain = if kind == NormKind::Dirichlet { domain } else { None };
        let space_u = Space::new(graph, domain, NormSpec::new(kind, spec.m1, spec.p, Channel::H1))?;
        let space_v = match arity {
            Arity::One => None,
            Arity::Two => Some(Space::new(graph, domain, NormSpec::new(kind, spec.m2, spec.q, Channel::H2))?),
        };
        let active = space_u.active();
        let model = NonlinearityModel::register(&spec.model, graph, arity, &active)?;
        Ok(Self { spec: spec.clone(), graph, domain, space_u, space_v, model, active })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn domain(&self) -> Option<&'g DomainPartition> {
        self.domain
    }

    pub fn model(&self) -> &NonlinearityModel {
        &self.model
    }

    pub fn lambda(&self) -> f64 {
        self.spec.lambda
    }

    pub fn space_u(&self) -> &Space<'g> {
        &self.space_u
    }

    pub fn space_v(&self) -> Option<&Space<'g>> {
        self.space_v.as_ref()
    }

    /// Vertices over which `Ψ` integrates.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Number of free coordinates.
    pub fn dim(&self) -> usize {
        self.space_u.dim() + self.space_v.as_ref().map_or(0, |s| s.dim())
    }

    /// Full `(u, v)` from free coordinates; `v` is all zeros for arity 1.
    pub fn split(&self, coords: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d1 = self.space_u.dim();
        let u = self.space_u.embed(&coords[..d1]);
        let v = match &self.space_v {
            Some(s) => s.embed(&coords[d1..]),
            None => vec![0.0; self.graph.len()],
        };
        (u, v)
    }

    /// Free coordinates of full vectors, checking the support constraints.
    pub fn join(&self, u: &[f64], v: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.graph.len();
        if u.len() != n || v.is_some_and(|v| v.len() != n) {
            return Err(Error::BindingMismatch);
        }
        self.space_u.check_support(u)?;
        let mut coords = self.space_u.restrict(u);
        match (&self.space_v, v) {
            (Some(s), Some(v)) => {
                s.check_support(v)?;
                coords.extend(s.restrict(v));
            }
            (Some(_), None) => {
                return Err(Error::InvalidParameter("arity-2 system needs a v component".into()));
            }
            (None, Some(v)) if v.iter().any(|&t| t != 0.0) => {
                return Err(Error::InvalidParameter("arity-1 system takes no v component".into()));
            }
            (None, _) => {}
        }
        Ok(coords)
    }

    fn phi_full(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut phi = self.space_u.norm_pow(u) / self.spec.p;
        if let Some(s) = &self.space_v {
            phi += s.norm_pow(v) / self.spec.q;
        }
        phi
    }

    fn psi_full(&self, u: &[f64], v: &[f64]) -> f64 {
        let mu = self.graph.mu();
        csum(self.active.iter().map(|&x| mu[x] * self.model.eval(x, u[x], v[x])))
    }

    /// `Φ` at free coordinates.
    pub fn phi_coords(&self, coords: &[f64]) -> f64 {
        let (u, v) = self.split(coords);
        self.phi_full(&u, &v)
    }

    /// `Ψ` at free coordinates.
    pub fn psi_coords(&self, coords: &[f64]) -> f64 {
        let (u, v) = self.split(coords);
        self.psi_full(&u, &v)
    }

    /// `I_λ = Φ - λΨ` at free coordinates.
    pub fn energy_coords(&self, coords: &[f64]) -> f64 {
        let (u, v) = self.split(coords);
        self.phi_full(&u, &v) - self.spec.lambda * self.psi_full(&u, &v)
    }

    /// The objective actually descended: `I_λ` with the gradient term smoothed
    /// when an exponent is below 2 (identical to `I_λ` otherwise), and its
    /// exact gradient over the free coordinates.
    pub fn objective(&self, coords: &[f64]) -> (f64, Vec<f64>) {
        let (u, v) = self.split(coords);
        let eps = self.spec.smoothing;
        let lambda = self.spec.lambda;
        let mu = self.graph.mu();
        let mut value = self.space_u.energy(&u, eps);
        let gu = self.space_u.energy_grad(&u, eps);
        let mut grad: Vec<f64> =
            self.space_u.free().iter().map(|&x| gu[x] - lambda * mu[x] * self.model.ds(x, u[x], v[x])).collect();
        if let Some(s) = &self.space_v {
            value += s.energy(&v, eps);
            let gv = s.energy_grad(&v, eps);
            grad.extend(s.free().iter().map(|&x| gv[x] - lambda * mu[x] * self.model.dt(x, u[x], v[x])));
        }
        value -= lambda * self.psi_full(&u, &v);
        (value, grad)
    }

    /// `(Φ, Ψ, ∇Φ, ∇Ψ)` over free coordinates, `Φ` smoothed as in
    /// [`Self::objective`].
    pub fn parts(&self, coords: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let (u, v) = self.split(coords);
        let eps = self.spec.smoothing;
        let mu = self.graph.mu();
        let mut phi = self.space_u.energy(&u, eps);
        let gu = self.space_u.energy_grad(&u, eps);
        let free_u = self.space_u.free();
        let mut gphi: Vec<f64> = free_u.iter().map(|&x| gu[x]).collect();
        let mut gpsi: Vec<f64> = free_u.iter().map(|&x| mu[x] * self.model.ds(x, u[x], v[x])).collect();
        if let Some(s) = &self.space_v {
            phi += s.energy(&v, eps);
            let gv = s.energy_grad(&v, eps);
            gphi.extend(s.free().iter().map(|&x| gv[x]));
            gpsi.extend(s.free().iter().map(|&x| mu[x] * self.model.dt(x, u[x], v[x])));
        }
        (phi, self.psi_full(&u, &v), gphi, gpsi)
    }

    /// Rescale `coords` so that `Φ` becomes `target`, using the homogeneity
    /// `Φ(t^{1/p} u, t^{1/q} v) = t Φ(u, v)`. Returns `None` when `Φ = 0`.
    pub fn scale_to_phi(&self, coords: &[f64], target: f64) -> Option<Vec<f64>> {
        let phi = self.phi_coords(coords);
        if !(phi > 0.0) {
            return None;
        }
        let t = target / phi;
        let d1 = self.space_u.dim();
        let (su, sv) = (t.powf(1.0 / self.spec.p), t.powf(1.0 / self.spec.q));
        Some(coords.iter().enumerate().map(|(i, &c)| if i < d1 { c * su } else { c * sv }).collect())
    }

    /// Gradient of the objective over free coordinates.
    pub fn gradient_coords(&self, coords: &[f64]) -> Vec<f64> {
        self.objective(coords).1
    }

    /// `Φ` of a state given as graph functions.
    pub fn phi(&self, u: &GraphFunction<'_>, v: Option<&GraphFunction<'_>>) -> Result<f64> {
        Ok(self.phi_coords(&self.join(u.values(), v.map(|v| v.values()))?))
    }

    pub fn psi(&self, u: &GraphFunction<'_>, v: Option<&GraphFunction<'_>>) -> Result<f64> {
        Ok(self.psi_coords(&self.join(u.values(), v.map(|v| v.values()))?))
    }

    pub fn total_energy(&self, u: &GraphFunction<'_>, v: Option<&GraphFunction<'_>>) -> Result<f64> {
        Ok(self.energy_coords(&self.join(u.values(), v.map(|v| v.values()))?))
    }

    pub fn energy_gradient(&self, u: &GraphFunction<'_>, v: Option<&GraphFunction<'_>>) -> Result<Vec<f64>> {
        Ok(self.gradient_coords(&self.join(u.values(), v.map(|v| v.values()))?))
    }

    /// Product norm `||u|| + ||v||` of a coordinate vector.
    pub fn system_norm(&self, coords: &[f64]) -> f64 {
        let (u, v) = self.split(coords);
        self.space_u.norm(&u) + self.space_v.as_ref().map_or(0.0, |s| s.norm(&v))
    }

    /// Spike masses `(M1(x), M2(x))` for every vertex.
    pub fn spike_masses(&self) -> Vec<(f64, f64)> {
        (0..self.graph.len())
            .map(|x| {
                (
                    spike_mass_at(self.graph, x, self.spec.p, Channel::H1),
                    spike_mass_at(self.graph, x, self.spec.q, Channel::H2),
                )
            })
            .collect()
    }

    /// The vertex minimizing `M1` (ties by vertex id); it must also minimize
    /// `M2` for arity-2 systems.
    pub fn spike_vertex(&self) -> Result<usize> {
        let masses = self.spike_masses();
        let mut order: Vec<usize> = (0..self.graph.len()).collect();
        order.sort_by(|&a, &b| self.graph.id(a).cmp(self.graph.id(b)));
        let x0 = order.iter().copied().fold(order[0], |best, x| if masses[x].0 < masses[best].0 { x } else { best });
        if self.space_v.is_some() {
            let m2 = masses[x0].1;
            let offenders: Vec<String> = (0..self.graph.len())
                .filter(|&x| masses[x].1 < m2 * (1.0 - 1e-12))
                .map(|x| format!("{}: M2 = {} < M2({}) = {}", self.graph.id(x), masses[x].1, self.graph.id(x0), m2))
                .collect();
            if !offenders.is_empty() {
                return Err(Error::Hypothesis(format!(
                    "no minimizing vertex: `{}` minimizes M1 = {} but not M2 ({})",
                    self.graph.id(x0),
                    masses[x0].0,
                    offenders.join("; ")
                )));
            }
        }
        Ok(x0)
    }

    fn growth_constants(&self, source: AbSource) -> Result<(GrowthConstant, GrowthConstant, Option<GrowthHint>)> {
        let (p, q) = (self.spec.p, self.spec.q);
        let single = self.space_v.is_none();
        let hint = self.model.growth_hint(self.graph, &self.active, p, if single { p } else { q });
        match source {
            AbSource::ClosedForm => {
                let (a, b, src) = if let Some(g) = self.spec.growth {
                    (g.a, g.b, GrowthSource::User)
                } else if let Some(h) = &hint {
                    let src = match self.spec.model {
                        ModelSpec::PlateauOscillator { .. } => GrowthSource::Oracle,
                        _ => GrowthSource::ClosedForm,
                    };
                    (h.a, h.b, src)
                } else {
                    return Err(Error::InvalidParameter(
                        "closed-form A/B requested but neither `growth` nor a model closed form is available".into(),
                    ));
                };
                let mk =
                    |value| GrowthConstant { value, source: src, heuristic: src == GrowthSource::Oracle, table: None };
                Ok((mk(a), mk(b), hint))
            }
            AbSource::Estimate => {
                let radii = self.spec.estimator.radii();
                let delta = if single { p } else { p.min(q) };
                let ea: GrowthEstimate =
                    estimate_a(&self.model, self.graph, &self.active, delta, &radii, self.spec.estimator.grid)?;
                let eb = estimate_b(&self.model, self.graph, &self.active, p, q, &default_rays(), &radii)?;
                let mk = |e: GrowthEstimate| GrowthConstant {
                    value: e.value,
                    source: GrowthSource::Estimate,
                    heuristic: e.heuristic,
                    table: Some(e.table),
                };
                Ok((mk(ea), mk(eb), hint))
            }
        }
    }

    /// Constants and endpoints of the admissible interval.
    pub fn interval_constants(&self, source: AbSource) -> Result<IntervalReport> {
        let g = self.graph;
        let (p, q) = (self.spec.p, self.spec.q);
        let single = self.space_v.is_none();
        let mu = g.mu();
        let mut details = BTreeMap::new();
        let mut notes = Vec::new();
        let mut x0_id = None;
        let mut k_source = ConstantSource::ClosedForm;
        let two_pow = if single { 1.0 } else { 2f64.powf(p - 1.0) };

        let (rho, k) = match self.spec.system {
            SystemKind::FinitePoly => {
                let mu_min = g.mu_min();
                let h1_min = g.potential_min(Channel::H1);
                let int_h1 = csum((0..g.len()).map(|x| mu[x] * g.h1()[x]));
                details.insert("mu_min".into(), mu_min);
                details.insert("h1_min".into(), h1_min);
                details.insert("int_h1".into(), int_h1);
                details.insert("K_l(p)".into(), (1.0 / (mu_min * h1_min)).powf(1.0 / p));
                if single {
                    (Some(int_h1 / p), 1.0 / (h1_min * mu_min))
                } else {
                    let h2_min = g.potential_min(Channel::H2);
                    let int_h2 = csum((0..g.len()).map(|x| mu[x] * g.h2()[x]));
                    details.insert("h2_min".into(), h2_min);
                    details.insert("int_h2".into(), int_h2);
                    details.insert("K_l(q)".into(), (1.0 / (mu_min * h2_min)).powf(1.0 / q));
                    let rho = (int_h1 / p).max(int_h2 / q);
                    (Some(rho), (1.0 / (mu_min * h1_min)).max(1.0 / (mu_min * h2_min)))
                }
            }
            SystemKind::DirichletPoly => {
                k_source = ConstantSource::Numeric;
                let d = self.domain.ok_or_else(|| Error::InvalidParameter("missing domain".into()))?;
                let mu_min = d.omega().iter().map(|&x| mu[x]).fold(f64::INFINITY, f64::min);
                details.insert("mu_min_omega".into(), mu_min);
                let c1 = self.space_u.dirichlet_c()?;
                details.insert(format!("C({},{},Omega)", self.spec.m1, p), c1);
                let mut k = c1.powf(p) / mu_min;
                if let Some(s) = &self.space_v {
                    let c2 = s.dirichlet_c()?;
                    details.insert(format!("C({},{},Omega)", self.spec.m2, q), c2);
                    k = k.max(c2.powf(q) / mu_min);
                }
                notes.push(
                    "C(m,l,Omega) is the exact best sup-norm constant of the finite space, computed numerically".into(),
                );
                (None, k)
            }
            SystemKind::PqWh => {
                let x0 = self.spike_vertex()?;
                let masses = self.spike_masses();
                x0_id = Some(g.id(x0).to_string());
                let mu0 = g.mu_min();
                let h0 = if single {
                    g.potential_min(Channel::H1)
                } else {
                    g.potential_min(Channel::H1).min(g.potential_min(Channel::H2))
                };
                if h0 <= 0.0 {
                    return Err(Error::Hypothesis(format!("potentials must be bounded below by h0 > 0, got {h0}")));
                }
                details.insert("mu0".into(), mu0);
                details.insert("h0".into(), h0);
                details.insert("M1(x0)".into(), masses[x0].0);
                notes.push(
                    "graph treated as a finite truncation; h0, mu0 and x0 are realized on the truncation only".into(),
                );
                if single {
                    (Some(masses[x0].0 / p), 1.0 / (h0 * mu0).powf(1.0 / p))
                } else {
                    details.insert("M2(x0)".into(), masses[x0].1);
                    let rho = (masses[x0].0 / p).max(masses[x0].1 / q);
                    let k = (1.0 / (h0 * mu0).powf(1.0 / p)).max(1.0 / (h0 * mu0).powf(1.0 / q));
                    (Some(rho), k)
                }
            }
        };

        let (a, b, model_hint) = self.growth_constants(source)?;
        let lambda_lo = match rho {
            Some(r) => r / b.value,
            None => 1.0 / b.value,
        };
        let lambda_hi = 1.0 / (p * two_pow * k * a.value);
        let valid =
            a.value > 0.0 && a.value < b.value && a.value.is_finite() && b.value.is_finite() && lambda_lo < lambda_hi;
        if a.heuristic || b.heuristic {
            notes.push("A and B are finite-sample proxies for a liminf and a limsup".into());
        }
        Ok(IntervalReport {
            system: self.spec.system,
            arity: self.spec.arity,
            p,
            q,
            rho,
            k,
            k_source,
            a,
            b,
            model_hint,
            lambda_lo,
            lambda_hi,
            valid,
            x0: x0_id,
            details,
            notes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use approx::assert_relative_eq;

    fn pair() -> WeightedGraph {
        GraphBuilder::new()
            .vertex("a", 1.0, 1.0, 1.0)
            .unwrap()
            .vertex("b", 1.0, 1.0, 1.0)
            .unwrap()
            .edge("a", "b", 1.0)
            .unwrap()
            .build()
            .unwrap()
    }

    fn power_spec(system: SystemKind, p: f64, q: f64, lambda: f64) -> SystemSpec {
        SystemSpec {
            system,
            p,
            q,
            m1: 1,
            m2: 1,
            lambda,
            arity: 2,
            model: ModelSpec::Power { alpha: 1.0, beta: 1.0, s_exp: p, t_exp: q },
            growth: None,
            ab_source: AbSource::ClosedForm,
            estimator: EstimatorSettings::default(),
            smoothing: 1e-8,
        }
    }

    #[test]
    fn spec_json_roundtrip_and_validation() {
        let text = r#"{"system":"pq_wh","p":2,"q":3,"lambda":0.5,
            "model":{"catalog":"power","params":{"s_exp":2,"t_exp":3}}}"#;
        let spec = SystemSpec::from_json(text).unwrap();
        assert_eq!(spec.arity, 2);
        let back: SystemSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(SystemSpec::from_json(&text.replace("\"p\":2", "\"p\":1.5")).is_err());
        assert!(SystemSpec::from_json(&text.replace("0.5", "-1")).is_err());
        assert!(SystemSpec::from_json(&text.replace("\"lambda\"", "\"extra\":1,\"lambda\"")).is_err());
    }

    #[test]
    fn unit_pair_constants() {
        let g = pair();
        let problem = Problem::new(&power_spec(SystemKind::FinitePoly, 2.0, 2.0, 1.0), &g, None).unwrap();
        let r = problem.interval_constants(AbSource::ClosedForm).unwrap();
        assert_eq!(r.rho, Some(1.0));
        assert_eq!(r.k, 1.0);
        assert_eq!(r.details["K_l(p)"], 1.0);
        // A = 2 for the unit power model: lambda_hi = 1 / (2 * 2 * 1 * 2)
        assert_eq!(r.a.value, 2.0);
        assert_eq!(r.lambda_hi, 1.0 / 8.0);
        assert!(!r.valid, "A = B for a pure power model");

        assert_eq!(spike_mass(&g, "a", 2.0, Channel::H1).unwrap(), 2.0);
        let wh = Problem::new(&power_spec(SystemKind::PqWh, 2.0, 2.0, 1.0), &g, None).unwrap();
        let r = wh.interval_constants(AbSource::ClosedForm).unwrap();
        assert_eq!(r.details["M1(x0)"], 2.0);
        assert_eq!(r.details["M2(x0)"], 2.0);
        assert_eq!(r.x0.as_deref(), Some("a"));
    }

    #[test]
    fn isolated_vertex_spike_mass() {
        let g = GraphBuilder::new().vertex("z", 1.0, 1.0, 1.0).unwrap().build().unwrap();
        for p in [2.0, 3.0, 7.5] {
            assert_eq!(spike_mass(&g, "z", p, Channel::H2).unwrap(), 1.0);
        }
    }

    #[test]
    fn scaling_potentials_scales_constants() {
        let c = 3.0;
        let build = |s: f64| {
            GraphBuilder::new()
                .vertex("a", 1.0, 1.0 * s, 2.0 * s)
                .unwrap()
                .vertex("b", 2.0, 1.5 * s, 1.0 * s)
                .unwrap()
                .edge("a", "b", 0.7)
                .unwrap()
                .build()
                .unwrap()
        };
        let (g1, gc) = (build(1.0), build(c));
        let mut spec = power_spec(SystemKind::FinitePoly, 2.5, 3.0, 1.0);
        spec.growth = Some(GrowthValues { a: 1.0, b: 2.0 });
        let r1 = Problem::new(&spec, &g1, None).unwrap().interval_constants(AbSource::ClosedForm).unwrap();
        let rc = Problem::new(&spec, &gc, None).unwrap().interval_constants(AbSource::ClosedForm).unwrap();
        assert_relative_eq!(rc.rho.unwrap(), c * r1.rho.unwrap(), max_relative = 1e-14);
        assert_relative_eq!(rc.k, r1.k / c, max_relative = 1e-14);
    }

    #[test]
    fn spike_vertex_must_minimize_both_masses() {
        // a has the smaller h1 mass, b the smaller h2 mass
        let g = GraphBuilder::new()
            .vertex("a", 1.0, 0.5, 3.0)
            .unwrap()
            .vertex("b", 1.0, 3.0, 0.5)
            .unwrap()
            .edge("a", "b", 1.0)
            .unwrap()
            .build()
            .unwrap();
        let problem = Problem::new(&power_spec(SystemKind::PqWh, 2.0, 2.0, 1.0), &g, None).unwrap();
        assert!(matches!(problem.interval_constants(AbSource::ClosedForm), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn arity_one_drops_doubling_factor() {
        let g = pair();
        let mut spec = power_spec(SystemKind::FinitePoly, 2.0, 2.0, 1.0);
        spec.arity = 1;
        let r = Problem::new(&spec, &g, None).unwrap().interval_constants(AbSource::ClosedForm).unwrap();
        // rho = (1/2) * 2, K = 1, A = 2 -> lambda_hi = 1/(2 * 1 * 2)
        assert_eq!(r.rho, Some(1.0));
        assert_eq!(r.lambda_hi, 0.25);
    }

    #[test]
    fn constant_state_phi_and_psi() {
        let g = pair();
        let problem = Problem::new(&power_spec(SystemKind::FinitePoly, 2.0, 3.0, 0.5), &g, None).unwrap();
        let u = GraphFunction::constant(&g, 1.5);
        let v = GraphFunction::constant(&g, -2.0);
        let phi = problem.phi(&u, Some(&v)).unwrap();
        assert_relative_eq!(phi, 1.5f64.powi(2) / 2.0 * 2.0 + 8.0 / 3.0 * 2.0, max_relative = 1e-14);
        let psi = problem.psi(&u, Some(&v)).unwrap();
        assert_relative_eq!(psi, 2.0 * (2.25 + 8.0), max_relative = 1e-14);
        assert_relative_eq!(problem.total_energy(&u, Some(&v)).unwrap(), phi - 0.5 * psi, max_relative = 1e-14);
        let z = GraphFunction::zeros(&g);
        assert_eq!(problem.total_energy(&z, Some(&z)).unwrap(), 0.0);
    }

    #[test]
    fn arity_one_psi_example() {
        let mut b = GraphBuilder::new();
        for id in ["a", "b", "c"] {
            b.add_vertex(id, 1.0, 1.0, 1.0).unwrap();
        }
        b.add_edge("a", "b", 1.0).unwrap();
        let g = b.build().unwrap();
        let mut spec = power_spec(SystemKind::FinitePoly, 2.0, 2.0, 1.0);
        spec.arity = 1;
        let problem = Problem::new(&spec, &g, None).unwrap();
        assert_eq!(problem.psi(&GraphFunction::constant(&g, 2.0), None).unwrap(), 12.0);
    }

    #[test]
    fn dirichlet_rejects_nonzero_constants() {
        let mut b = GraphBuilder::new();
        for id in ["a", "b", "c", "d"] {
            b.add_vertex(id, 1.0, 1.0, 1.0).unwrap();
        }
        for (x, y) in [("a", "b"), ("b", "c"), ("c", "d")] {
            b.add_edge(x, y, 1.0).unwrap();
        }
        let g = b.build().unwrap();
        let d = DomainPartition::new(&g, &[1, 2]).unwrap();
        let problem = Problem::new(&power_spec(SystemKind::DirichletPoly, 2.0, 2.0, 1.0), &g, Some(&d)).unwrap();
        let c = GraphFunction::constant(&g, 1.0);
        assert!(problem.phi(&c, Some(&c)).is_err());
        let z = GraphFunction::zeros(&g);
        assert_eq!(problem.total_energy(&z, Some(&z)).unwrap(), 0.0);
    }
}
