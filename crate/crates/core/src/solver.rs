//! Multi-start critical point search with deflation, and the constant and
//! spike probe sequences along which the energy is unbounded below.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::grad_lengths;
use crate::energy::{IntervalReport, Problem, SystemKind};
use crate::error::{Error, Result};
use crate::numeric::{csum, norm2, rel_err};
use crate::optimize::{minimize, DescentOptions, DescentStatus};
use crate::spaces::random_coords;

/// Deflation bump parameters: each accepted point `x_j` adds
/// `strength (1 + |I_j|) exp(-|x - x_j|^2 / (2 σ_j^2))` with
/// `σ_j = width (1 + |x_j|)` during the first descent phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Deflation {
    pub enabled: bool,
    pub strength: f64,
    pub width: f64,
}

impl Default for Deflation {
    fn default() -> Self {
        Self { enabled: true, strength: 1.0, width: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub seed: u64,
    /// Include the zero state among the starts.
    pub zero_start: bool,
    /// Amplitudes of the constant and spike probe starts.
    pub amplitudes: Vec<f64>,
    /// Scales of the uniform random starts.
    pub random_scales: Vec<f64>,
    pub random_per_scale: usize,
    /// Residual tolerance (absolute Euclidean norm over free coordinates).
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub backtrack: f64,
    /// Curvature pairs kept by the quasi-Newton step scaling; 0 gives plain
    /// gradient descent.
    pub memory: usize,
    /// Relative distinctness radius in the system norm.
    pub distinct_radius: f64,
    pub deflation: Deflation,
    /// Starts run concurrently per batch; results merge in start order.
    pub batch: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            zero_start: true,
            amplitudes: vec![1.0, 10.0, 100.0],
            random_scales: vec![0.5, 5.0, 50.0],
            random_per_scale: 4,
            tol: 1e-8,
            max_iter: 10_000,
            armijo: 1e-4,
            backtrack: 0.5,
            memory: 8,
            distinct_radius: 1e-4,
            deflation: Deflation::default(),
            batch: 8,
        }
    }
}

impl SolverConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || self.batch == 0 {
            return Err(Error::InvalidParameter("tol, max_iter and batch must be positive".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0 && self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParameter("armijo and backtrack must lie in (0, 1)".into()));
        }
        if self.amplitudes.iter().chain(&self.random_scales).any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidParameter("amplitudes and scales must be positive".into()));
        }
        Ok(())
    }

    fn descent(&self) -> DescentOptions {
        DescentOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            armijo: self.armijo,
            backtrack: self.backtrack,
            memory: self.memory,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub u: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    pub phi: f64,
    pub psi: f64,
    pub energy: f64,
    pub residual: f64,
    pub system_norm: f64,
    /// Label of the start that produced this point.
    pub start: String,
    #[serde(skip)]
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub label: String,
    pub iterations: usize,
    pub status: DescentStatus,
    pub residual: f64,
    pub energy: f64,
    /// Energy never increased across accepted steps of the final descent
    /// (up to the line-search noise allowance).
    pub monotone: bool,
    pub outcome: StartOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartOutcome {
    Accepted,
    Duplicate,
    NotConverged,
    Aborted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub lambda: f64,
    /// Sorted by `Φ` ascending.
    pub critical_points: Vec<CriticalPoint>,
    pub distinct_pairs: Vec<PairDistance>,
    pub starts_used: usize,
    pub iterations: usize,
    pub interval: Option<IntervalReport>,
    pub inside_interval: Option<bool>,
    pub starts: Vec<StartRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_results: Option<ProbeTrace>,
    pub notes: Vec<String>,
    /// Excluded from serialization so that seeded reports are reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

struct Start {
    label: String,
    coords: Vec<f64>,
}

fn probe_starts(problem: &Problem<'_>, cfg: &SolverConfig) -> Vec<Start> {
    let d1 = problem.space_u().dim();
    let dim = problem.dim();
    let mut starts = Vec::new();
    if cfg.zero_start {
        starts.push(Start { label: "zero".into(), coords: vec![0.0; dim] });
    }
    let spike = match problem.spec().system {
        SystemKind::PqWh => problem.spike_vertex().ok(),
        _ => None,
    };
    for &a in &cfg.amplitudes {
        for sign in [1.0, -1.0] {
            let amp = sign * a;
            starts.push(Start { label: format!("constant({amp})"), coords: vec![amp; dim] });
            if dim > d1 {
                let mut c = vec![0.0; dim];
                c[..d1].iter_mut().for_each(|x| *x = amp);
                starts.push(Start { label: format!("constant_u({amp})"), coords: c });
            }
        }
        if let Some(x0) = spike {
            let mut u = vec![0.0; problem.graph().len()];
            u[x0] = a;
            let v = problem.space_v().map(|_| u.clone());
            if let Ok(c) = problem.join(&u, v.as_deref()) {
                starts.push(Start { label: format!("spike({}, {a})", problem.graph().id(x0)), coords: c });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for &scale in &cfg.random_scales {
        for k in 0..cfg.random_per_scale {
            starts.push(Start { label: format!("random({scale}, {k})"), coords: random_coords(&mut rng, dim, scale) });
        }
    }
    starts
}

struct RunResult {
    coords: Vec<f64>,
    residual: f64,
    energy: f64,
    iterations: usize,
    status: DescentStatus,
    monotone: bool,
}

fn monotone(trace: &[f64], noise: f64) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + noise * (1.0 + w[0].abs()))
}

fn run_start(problem: &Problem<'_>, cfg: &SolverConfig, start: &[f64], known: &[(Vec<f64>, f64)]) -> RunResult {
    let opts = cfg.descent();
    let (e0, g0) = problem.objective(start);
    let r0 = norm2(&g0);
    if r0 <= cfg.tol {
        return RunResult {
            coords: start.to_vec(),
            residual: r0,
            energy: e0,
            iterations: 0,
            status: DescentStatus::Converged,
            monotone: true,
        };
    }
    let mut x = start.to_vec();
    let mut iterations = 0;
    if cfg.deflation.enabled && !known.is_empty() {
        let bumps: Vec<(&[f64], f64, f64)> = known
            .iter()
            .map(|(c, e)| {
                let sigma = cfg.deflation.width * (1.0 + norm2(c));
                (c.as_slice(), cfg.deflation.strength * (1.0 + e.abs()), 2.0 * sigma * sigma)
            })
            .collect();
        let phase1 = minimize(
            |y| {
                let (mut f, mut g) = problem.objective(y);
                for &(c, height, denom) in &bumps {
                    let d2 = csum(y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)));
                    let b = height * (-d2 / denom).exp();
                    if b > 0.0 {
                        f += b;
                        for (gi, (a, cc)) in g.iter_mut().zip(y.iter().zip(c)) {
                            *gi -= 2.0 * b * (a - cc) / denom;
                        }
                    }
                }
                (f, g)
            },
            x,
            &DescentOptions { max_iter: opts.max_iter / 2, ..opts },
        );
        iterations += phase1.iterations;
        x = phase1.x;
    }
    let out = minimize(|y| problem.objective(y), x, &opts);
    iterations += out.iterations;
    RunResult {
        monotone: monotone(&out.trace, opts.noise),
        coords: out.x,
        residual: out.grad_norm,
        energy: out.value,
        iterations,
        status: out.status,
    }
}

fn critical_point(problem: &Problem<'_>, coords: Vec<f64>, residual: f64, start: String) -> CriticalPoint {
    let (u, v) = problem.split(&coords);
    CriticalPoint {
        phi: problem.phi_coords(&coords),
        psi: problem.psi_coords(&coords),
        energy: problem.energy_coords(&coords),
        residual,
        system_norm: problem.system_norm(&coords),
        u,
        v: problem.space_v().map(|_| v),
        start,
        coords,
    }
}

fn distinct_radius(cfg: &SolverConfig, a: &CriticalPoint, b: &CriticalPoint) -> f64 {
    cfg.distinct_radius * (1.0 + a.system_norm.max(b.system_norm))
}

fn distance(problem: &Problem<'_>, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    problem.system_norm(&diff)
}

/// Multi-start search for critical points of `I_λ`.
pub fn solve(problem: &Problem<'_>, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_from(problem, cfg, &[])
}

/// [`solve`] with extra starting points (free coordinates) tried first.
pub fn solve_from(problem: &Problem<'_>, cfg: &SolverConfig, extra: &[Vec<f64>]) -> Result<SolveReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let dim = problem.dim();
    if extra.iter().any(|c| c.len() != dim) {
        return Err(Error::BindingMismatch);
    }
    let mut notes = Vec::new();
    let interval = match problem.interval_constants(problem.spec().ab_source) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("interval constants unavailable: {e}"));
            None
        }
    };
    let mut starts: Vec<Start> =
        extra.iter().enumerate().map(|(i, c)| Start { label: format!("given({i})"), coords: c.clone() }).collect();
    starts.extend(probe_starts(problem, cfg));

    let mut accepted: Vec<CriticalPoint> = Vec::new();
    let mut records = Vec::with_capacity(starts.len());
    let mut iterations = 0;
    for batch in starts.chunks(cfg.batch) {
        let known: Vec<(Vec<f64>, f64)> = accepted.iter().map(|c| (c.coords.clone(), c.energy)).collect();
        let results: Vec<RunResult> = batch.par_iter().map(|s| run_start(problem, cfg, &s.coords, &known)).collect();
        for (s, r) in batch.iter().zip(results) {
            iterations += r.iterations;
            let finite = r.energy.is_finite() && r.residual.is_finite();
            let outcome = if !finite || r.status == DescentStatus::NonFinite {
                log::warn!("start {} aborted: non-finite energy", s.label);
                StartOutcome::Aborted
            } else if r.residual > cfg.tol {
                StartOutcome::NotConverged
            } else {
                let cand = critical_point(problem, r.coords.clone(), r.residual, s.label.clone());
                let dup = accepted
                    .iter()
                    .any(|c| distance(problem, &c.coords, &cand.coords) <= distinct_radius(cfg, c, &cand));
                if dup {
                    StartOutcome::Duplicate
                } else {
                    accepted.push(cand);
                    StartOutcome::Accepted
                }
            };
            records.push(StartRecord {
                label: s.label.clone(),
                iterations: r.iterations,
                status: r.status,
                residual: r.residual,
                energy: r.energy,
                monotone: r.monotone,
                outcome,
            });
        }
    }
    accepted.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    let mut pairs = Vec::new();
    for i in 0..accepted.len() {
        for j in i + 1..accepted.len() {
            pairs.push(PairDistance {
                i,
                j,
                distance: distance(problem, &accepted[i].coords, &accepted[j].coords),
                radius: distinct_radius(cfg, &accepted[i], &accepted[j]),
            });
        }
    }
    if accepted.is_empty() {
        notes.push("no start converged to the residual tolerance".into());
    }
    notes.push("multi-start coverage of basins is heuristic; finitely many points are reported".into());
    let lambda = problem.lambda();
    Ok(SolveReport {
        lambda,
        inside_interval: interval.as_ref().map(|r| r.contains(lambda)),
        critical_points: accepted,
        distinct_pairs: pairs,
        starts_used: records.len(),
        iterations,
        interval,
        starts: records,
        probe_results: None,
        notes,
        wall_time: clock.elapsed(),
    })
}

/// A closed-form value checked against direct computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ClosedFormCheck {
    fn new(name: String, expected: f64, computed: f64, tolerance: f64) -> Self {
        let e = rel_err(expected, computed, 0.0);
        Self { name, expected, computed, rel_err: e, tolerance, pass: e <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStep {
    pub xi: f64,
    pub eta: f64,
    pub phi: f64,
    pub psi: f64,
    pub energy: f64,
    /// `ϱ(ξ^p + η^q) - λΨ`, constant probe only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Constant,
    Spike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrace {
    pub kind: ProbeKind,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<String>,
    pub steps: Vec<ProbeStep>,
    pub floor: f64,
    /// Some step's energy fell below `floor`.
    pub diverged: bool,
    pub bound_holds: Option<bool>,
    pub checks: Vec<ClosedFormCheck>,
    pub checks_pass: bool,
}

/// Energy floor below which a probe trace counts as divergent.
pub const DIVERGENCE_FLOOR: f64 = -1e6;

fn check_sequences(xi: &[f64], eta: &[f64]) -> Result<()> {
    if xi.len() != eta.len() || xi.is_empty() {
        return Err(Error::InvalidParameter("xi and eta sequences must be nonempty and of equal length".into()));
    }
    if xi.iter().chain(eta).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParameter("probe amplitudes must be finite and >= 0".into()));
    }
    Ok(())
}

fn finish(
    kind: ProbeKind,
    problem: &Problem<'_>,
    x0: Option<String>,
    steps: Vec<ProbeStep>,
    checks: Vec<ClosedFormCheck>,
) -> ProbeTrace {
    let bound_holds = match kind {
        ProbeKind::Constant => Some(steps.iter().all(|s| {
            let b = s.bound.unwrap_or(f64::INFINITY);
            s.energy <= b + 1e-12 * (1.0 + b.abs().max(s.energy.abs()))
        })),
        ProbeKind::Spike => None,
    };
    ProbeTrace {
        kind,
        lambda: problem.lambda(),
        x0,
        diverged: steps.iter().any(|s| s.energy < DIVERGENCE_FLOOR),
        steps,
        floor: DIVERGENCE_FLOOR,
        bound_holds,
        checks_pass: checks.iter().all(|c| c.pass),
        checks,
    }
}

/// Evaluate `I_λ` on constant states `u ≡ ξ_n`, `v ≡ η_n` (finite graphs).
pub fn probe_unbounded_constant(problem: &Problem<'_>, xi: &[f64], eta: &[f64]) -> Result<ProbeTrace> {
    if problem.spec().system != SystemKind::FinitePoly {
        return Err(Error::InvalidParameter("constant probe needs the finite_poly system".into()));
    }
    check_sequences(xi, eta)?;
    let g = problem.graph();
    let (p, q) = (problem.spec().p, problem.spec().q);
    let single = problem.space_v().is_none();
    let mu = g.mu();
    let int_h1 = csum((0..g.len()).map(|x| mu[x] * g.h1()[x]));
    let int_h2 = csum((0..g.len()).map(|x| mu[x] * g.h2()[x]));
    let rho = if single { int_h1 / p } else { (int_h1 / p).max(int_h2 / q) };
    let mut steps = Vec::new();
    let mut checks = Vec::new();
    for (&a, &b) in xi.iter().zip(eta) {
        let b = if single { 0.0 } else { b };
        let u = vec![a; g.len()];
        let v = vec![b; g.len()];
        let coords = problem.join(&u, if single { None } else { Some(&v) })?;
        let phi = problem.phi_coords(&coords);
        let psi = problem.psi_coords(&coords);
        let closed = a.powf(p) / p * int_h1 + if single { 0.0 } else { b.powf(q) / q * int_h2 };
        checks.push(ClosedFormCheck::new(format!("phi(xi={a}, eta={b})"), closed, phi, 1e-12));
        let extra = if single { 0.0 } else { b.powf(q) };
        steps.push(ProbeStep {
            xi: a,
            eta: b,
            phi,
            psi,
            energy: phi - problem.lambda() * psi,
            bound: Some(rho * (a.powf(p) + extra) - problem.lambda() * psi),
        });
    }
    Ok(finish(ProbeKind::Constant, problem, None, steps, checks))
}

/// Evaluate `I_λ` on spike states supported at `x0` (`W_h` system), checking
/// the closed forms of the gradient lengths and of `Φ`.
pub fn probe_unbounded_spike(problem: &Problem<'_>, x0: &str, xi: &[f64], eta: &[f64]) -> Result<ProbeTrace> {
    if problem.spec().system != SystemKind::PqWh {
        return Err(Error::InvalidParameter("spike probe needs the pq_wh system".into()));
    }
    check_sequences(xi, eta)?;
    let g = problem.graph();
    let x = g.vertex(x0)?;
    let best = problem.spike_vertex()?;
    let masses = problem.spike_masses();
    let single = problem.space_v().is_none();
    if masses[x].0 > masses[best].0 * (1.0 + 1e-12) || (!single && masses[x].1 > masses[best].1 * (1.0 + 1e-12)) {
        return Err(Error::Hypothesis(format!("`{x0}` does not minimize the spike masses; `{}` does", g.id(best))));
    }
    let (p, q) = (problem.spec().p, problem.spec().q);
    let mu = g.mu();
    let mut steps = Vec::new();
    let mut checks = Vec::new();
    for (&a, &b) in xi.iter().zip(eta) {
        let b = if single { 0.0 } else { b };
        let mut u = vec![0.0; g.len()];
        u[x] = a;
        let mut v = vec![0.0; g.len()];
        v[x] = b;
        let lens = grad_lengths(g, &u);
        checks.push(ClosedFormCheck::new(
            format!("|grad u|({x0}) at xi={a}"),
            (g.degree(x) / (2.0 * mu[x])).sqrt() * a,
            lens[x],
            1e-12,
        ));
        for nb in g.neighbors(x) {
            let y = nb.vertex;
            checks.push(ClosedFormCheck::new(
                format!("|grad u|({}) at xi={a}", g.id(y)),
                (nb.weight / (2.0 * mu[y])).sqrt() * a,
                lens[y],
                1e-12,
            ));
        }
        let coords = problem.join(&u, if single { None } else { Some(&v) })?;
        let phi = problem.phi_coords(&coords);
        let psi = problem.psi_coords(&coords);
        let closed = a.powf(p) * masses[x].0 / p + if single { 0.0 } else { b.powf(q) * masses[x].1 / q };
        checks.push(ClosedFormCheck::new(format!("phi(xi={a}, eta={b})"), closed, phi, 1e-10));
        steps.push(ProbeStep { xi: a, eta: b, phi, psi, energy: phi - problem.lambda() * psi, bound: None });
    }
    Ok(finish(ProbeKind::Spike, problem, Some(x0.to_string()), steps, checks))
}

/// `start · growth^k` for `k = 0..steps`.
pub fn geometric_sequence(start: f64, growth: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|k| start * growth.powi(k as i32)).collect()
}
