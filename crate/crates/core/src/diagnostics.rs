//! Numerical checks of the operator identities and embedding inequalities,
//! and sampling estimates of the sublevel ratio `φ(r)` and its liminf `γ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    gamma_at, grad_lengths, laplacian_values, p_laplacian_values, weak_poly_pairing_values, Support,
};
use crate::energy::{Problem, SystemKind};
use crate::error::{Error, Result};
use crate::graph::{Channel, WeightedGraph};
use crate::numeric::{abs_pow, csum, rel_err, signed_pow, CompensatedSum};
use crate::optimize::{minimize, DescentOptions};
use crate::spaces::{NormKind, NormSpec, Space, Target};

/// Worst relative error of one identity over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub worst_trial: usize,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub trials: usize,
    pub checks: Vec<IdentityCheck>,
    pub pass: bool,
}

fn random_function(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

/// Errors of every identity for one pair `(u, v)`, keyed like the report.
fn identity_errors(g: &WeightedGraph, u: &[f64], v: &[f64], l_set: &[f64], m_set: &[usize]) -> Vec<(String, f64)> {
    let n = g.len();
    let mu = g.mu();
    let mut out = Vec::new();

    // Γ as a sum of directional derivative products
    let mut worst: f64 = 0.0;
    for x in 0..n {
        let direct = gamma_at(g, u, v, x);
        let mut terms = CompensatedSum::new();
        let mut scale = 0.0;
        for nb in g.neighbors(x) {
            let c = (nb.weight / mu[x]).sqrt() / std::f64::consts::SQRT_2;
            let t = (u[x] - u[nb.vertex]) * c * (v[x] - v[nb.vertex]) * c;
            terms.add(t);
            scale += t.abs();
        }
        worst = worst.max(rel_err(direct, terms.value(), scale));
    }
    out.push(("gamma_directional_sum".to_string(), worst));

    // summation by parts for the l-Laplacian
    for &l in l_set {
        let lap = p_laplacian_values(g, u, l);
        let lens = grad_lengths(g, u);
        let lhs_terms: Vec<f64> = (0..n).map(|x| mu[x] * lap[x] * v[x]).collect();
        let rhs_terms: Vec<f64> = (0..n)
            .map(|x| if lens[x] == 0.0 { 0.0 } else { -mu[x] * abs_pow(lens[x], l - 2.0) * gamma_at(g, u, v, x) })
            .collect();
        let scale = csum(lhs_terms.iter().chain(&rhs_terms).map(|t| t.abs()));
        out.push((format!("summation_by_parts(l={l})"), rel_err(csum(lhs_terms), csum(rhs_terms), scale)));
    }

    // Δ_2 = Δ
    let a = p_laplacian_values(g, u, 2.0);
    let b = laplacian_values(g, u);
    let worst = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(x, (p, q))| {
            let scale = csum(g.neighbors(x).iter().map(|nb| (nb.weight * (u[nb.vertex] - u[x])).abs())) / mu[x];
            rel_err(*p, *q, scale)
        })
        .fold(0.0, f64::max);
    out.push(("two_laplacian_equals_laplacian".to_string(), worst));

    // μ-symmetry of Δ
    let lu = laplacian_values(g, u);
    let lv = laplacian_values(g, v);
    let t1: Vec<f64> = (0..n).map(|x| mu[x] * lu[x] * v[x]).collect();
    let t2: Vec<f64> = (0..n).map(|x| mu[x] * u[x] * lv[x]).collect();
    let scale = csum(t1.iter().chain(&t2).map(|t| t.abs()));
    out.push(("laplacian_symmetry".to_string(), rel_err(csum(t1), csum(t2), scale)));

    // weak poly-Laplacian form vs the derivative of (1/l)∫|∇^m u|^l
    for &m in m_set {
        for &l in l_set {
            let space = match Space::new(g, None, NormSpec::new(NormKind::FiniteFull, m, l, Channel::H1)) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let h = g.h1();
            let grad = space.energy_grad(u, 0.0);
            let terms: Vec<f64> = (0..n).map(|x| (grad[x] - mu[x] * h[x] * signed_pow(u[x], l)) * v[x]).collect();
            let scale = csum(terms.iter().map(|t| t.abs()));
            let weak = weak_poly_pairing_values(g, u, v, m, l, Support::Whole);
            out.push((format!("weak_poly_pairing(m={m}, l={l})"), rel_err(csum(terms), weak, scale)));
        }
    }
    out
}

/// Run the operator identities on `trials` random function pairs plus the
/// constant pair, which must give exact zeros on both sides.
pub fn check_identities(
    graph: &WeightedGraph,
    trials: usize,
    l_set: &[f64],
    m_set: &[usize],
    seed: u64,
) -> Result<IdentityReport> {
    check_identities_with_tolerance(graph, trials, l_set, m_set, seed, 1e-10)
}

pub fn check_identities_with_tolerance(
    graph: &WeightedGraph,
    trials: usize,
    l_set: &[f64],
    m_set: &[usize],
    seed: u64,
    tolerance: f64,
) -> Result<IdentityReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if l_set.iter().any(|&l| !(l > 1.0 && l.is_finite())) || m_set.contains(&0) {
        return Err(Error::InvalidParameter("l values must exceed 1 and m values must be >= 1".into()));
    }
    let n = graph.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> =
        (0..trials).map(|_| (random_function(&mut rng, n), random_function(&mut rng, n))).collect();
    let results: Vec<Vec<(String, f64)>> =
        pairs.par_iter().map(|(u, v)| identity_errors(graph, u, v, l_set, m_set)).collect();

    let mut checks: Vec<IdentityCheck> = results[0]
        .iter()
        .map(|(name, _)| IdentityCheck { name: name.clone(), max_rel_err: 0.0, worst_trial: 0, tolerance, pass: true })
        .collect();
    for (t, errs) in results.iter().enumerate() {
        for (c, (_, e)) in checks.iter_mut().zip(errs) {
            if *e > c.max_rel_err || e.is_nan() {
                c.max_rel_err = if e.is_nan() { f64::INFINITY } else { *e };
                c.worst_trial = t;
            }
        }
    }
    // constants: every identity side vanishes exactly
    let c1 = vec![1.7; n];
    let c2 = vec![-0.3; n];
    let lap_zero = laplacian_values(graph, &c1).iter().all(|&x| x == 0.0)
        && l_set.iter().all(|&l| p_laplacian_values(graph, &c1, l).iter().all(|&x| x == 0.0))
        && (0..n).all(|x| gamma_at(graph, &c1, &c2, x) == 0.0)
        && m_set
            .iter()
            .all(|&m| l_set.iter().all(|&l| weak_poly_pairing_values(graph, &c1, &c2, m, l, Support::Whole) == 0.0));
    checks.push(IdentityCheck {
        name: "constants_vanish".into(),
        max_rel_err: if lap_zero { 0.0 } else { f64::INFINITY },
        worst_trial: 0,
        tolerance,
        pass: lap_zero,
    });
    for c in checks.iter_mut() {
        c.pass = c.pass && c.max_rel_err <= tolerance;
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(IdentityReport { trials, checks, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    pub space: NormSpec,
    pub target: Target,
    pub bound: f64,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed `||u||_target / ||u||`.
    pub max_ratio: f64,
    /// `max_ratio / bound`, at most 1 without violations.
    pub sharpness: f64,
    /// The exact best constant of the finite space, when computed.
    pub numeric_constant: Option<f64>,
    pub numeric_within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub checks: Vec<EmbeddingCheck>,
    pub violations: usize,
}

/// Random test functions mixing dense, spiky and nearly constant shapes.
fn sample_function(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    match rng.gen_range(0..4) {
        0 => (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect(),
        1 => {
            let mut u = vec![0.0; n];
            u[rng.gen_range(0..n)] = scale;
            u
        }
        2 => {
            let c = scale * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (0..n).map(|_| c * (1.0 + 0.05 * rng.gen_range(-1.0..1.0))).collect()
        }
        _ => (0..n).map(|_| if rng.gen_bool(0.3) { scale * rng.gen_range(-1.0..1.0) } else { 0.0 }).collect(),
    }
}

/// Sample the closed-form embedding inequalities on `graph`.
///
/// Each space is paired with the sup norm and, for `W_h` spaces, with the
/// `L^r` norms listed in `lr_targets` (entries below `l` are skipped). When
/// `numeric` is set, the exact best constant is also computed.
pub fn check_embeddings(
    graph: &WeightedGraph,
    specs: &[NormSpec],
    lr_targets: &[f64],
    samples: usize,
    seed: u64,
    numeric: bool,
) -> Result<EmbeddingReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let mut checks = Vec::new();
    for (si, &spec) in specs.iter().enumerate() {
        let space = Space::new(graph, None, spec)?;
        let mut targets = vec![Target::Sup];
        if spec.kind == NormKind::Wh {
            targets.extend(lr_targets.iter().filter(|&&r| r >= spec.l).map(|&r| Target::Lr(r)));
        }
        let mut bounded = Vec::new();
        for target in targets {
            if let Some(bound) = space.closed_form_constant(target)? {
                bounded.push((target, bound));
            }
        }
        if bounded.is_empty() {
            continue;
        }
        // one sample set per space, shared by its targets
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((si as u64) << 32));
        let mut violations = vec![0; bounded.len()];
        let mut max_ratio = vec![0f64; bounded.len()];
        for _ in 0..samples {
            let u = sample_function(&mut rng, graph.len());
            let norm = space.norm(&u);
            if norm == 0.0 {
                continue;
            }
            for (k, &(target, bound)) in bounded.iter().enumerate() {
                let ratio = space.target_norm(&u, target) / norm;
                max_ratio[k] = max_ratio[k].max(ratio);
                if ratio > bound * (1.0 + 1e-12) {
                    violations[k] += 1;
                }
            }
        }
        for (k, (target, bound)) in bounded.into_iter().enumerate() {
            let numeric_constant = if numeric { Some(space.numeric_constant(target, 4, seed)?) } else { None };
            let numeric_within_bound = numeric_constant.map(|c| c <= bound * (1.0 + 1e-9));
            let extra = usize::from(numeric_within_bound == Some(false));
            checks.push(EmbeddingCheck {
                space: spec,
                target,
                bound,
                samples,
                violations: violations[k] + extra,
                max_ratio: max_ratio[k],
                sharpness: max_ratio[k] / bound,
                numeric_constant,
                numeric_within_bound,
            });
        }
    }
    let violations = checks.iter().map(|c| c.violations).sum();
    Ok(EmbeddingReport { checks, violations })
}

/// Effort spent on one `φ(r)` estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VarphiBudget {
    pub inner_starts: usize,
    pub outer_starts: usize,
    pub iterations: usize,
}

impl Default for VarphiBudget {
    fn default() -> Self {
        Self { inner_starts: 8, outer_starts: 8, iterations: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarphiEstimate {
    pub r: f64,
    pub value: f64,
    /// Best `Ψ` found on `{Φ <= r}`.
    pub sup_psi: f64,
    /// `Φ` and `Ψ` of the state attaining the smallest ratio.
    pub argmin_phi: f64,
    pub argmin_psi: f64,
    pub evaluations: usize,
    pub heuristic: bool,
}

/// Projected ascent of `Ψ` on `{Φ <= r}`; returns the best feasible value.
fn sublevel_sup(problem: &Problem<'_>, r: f64, budget: &VarphiBudget, rng: &mut ChaCha8Rng, evals: &mut usize) -> f64 {
    let dim = problem.dim();
    let mut best: f64 = 0.0;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(vec![1.0; dim]);
    starts.push(vec![-1.0; dim]);
    for i in 0..dim.min(budget.inner_starts) {
        let mut c = vec![0.0; dim];
        c[i] = 1.0;
        starts.push(c);
    }
    for _ in 0..budget.inner_starts {
        starts.push((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    for start in starts {
        let Some(mut x) = problem.scale_to_phi(&start, r) else { continue };
        let mut val = problem.psi_coords(&x);
        *evals += 1;
        best = best.max(val);
        let mut step = 0.1 * crate::numeric::norm2(&x).max(1e-12);
        for _ in 0..budget.iterations {
            let (_, _, _, gpsi) = problem.parts(&x);
            let gn = crate::numeric::norm2(&gpsi);
            if gn == 0.0 || step < 1e-14 * (1.0 + crate::numeric::norm2(&x)) {
                break;
            }
            let trial: Vec<f64> = x.iter().zip(&gpsi).map(|(a, g)| a + step * g / gn).collect();
            let trial = if problem.phi_coords(&trial) > r {
                match problem.scale_to_phi(&trial, r) {
                    Some(t) => t,
                    None => break,
                }
            } else {
                trial
            };
            let tv = problem.psi_coords(&trial);
            *evals += 1;
            if tv > val {
                x = trial;
                val = tv;
                step *= 1.5;
            } else {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    best
}

/// Estimate `φ(r) = inf_{Φ(u) < r} (sup_{Φ <= r} Ψ - Ψ(u)) / (r - Φ(u))`.
///
/// The inner supremum comes from projected ascent, the outer infimum from
/// restarted descent of the ratio; any feasible state with a larger `Ψ` seen
/// during the outer search raises the supremum, so the estimate stays
/// nonnegative.
pub fn estimate_varphi(problem: &Problem<'_>, r: f64, budget: &VarphiBudget, seed: u64) -> Result<VarphiEstimate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evals = 0;
    let mut sup = sublevel_sup(problem, r, budget, &mut rng, &mut evals);
    let dim = problem.dim();

    let mut starts = vec![vec![0.0; dim]];
    for k in 0..budget.outer_starts {
        let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let frac = (k as f64 + 1.0) / (budget.outer_starts as f64 + 1.0);
        if let Some(c) = problem.scale_to_phi(&raw, frac * r) {
            starts.push(c);
        }
    }
    let opts = DescentOptions { max_iter: budget.iterations, tol: 1e-10, ..Default::default() };
    let mut finals: Vec<(f64, f64)> = Vec::new();
    for start in starts {
        let s_fixed = sup;
        let mut seen_sup = sup;
        let out = minimize(
            |x| {
                let (phi, psi, gphi, gpsi) = problem.parts(x);
                if phi >= r {
                    return (f64::NAN, vec![f64::NAN; x.len()]);
                }
                seen_sup = seen_sup.max(psi);
                let den = r - phi;
                let num = s_fixed - psi;
                let g = gphi.iter().zip(&gpsi).map(|(a, b)| (-b * den + num * a) / (den * den)).collect();
                (num / den, g)
            },
            start,
            &opts,
        );
        evals += out.trace.len();
        sup = sup.max(seen_sup);
        let phi = problem.phi_coords(&out.x);
        if phi < r {
            finals.push((phi, problem.psi_coords(&out.x)));
        }
    }
    let (value, argmin_phi, argmin_psi) = finals
        .iter()
        .map(|&(phi, psi)| ((sup - psi) / (r - phi), phi, psi))
        .fold((f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    Ok(VarphiEstimate {
        r,
        value: value.max(0.0),
        sup_psi: sup,
        argmin_phi,
        argmin_psi,
        evaluations: evals,
        heuristic: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub value: f64,
    pub used: Vec<VarphiEstimate>,
    pub heuristic: bool,
}

/// `γ = liminf φ(r)` as the minimum of `φ` over the 10 largest grid values.
pub fn estimate_gamma(
    problem: &Problem<'_>,
    r_grid: &[f64],
    budget: &VarphiBudget,
    seed: u64,
) -> Result<GammaEstimate> {
    if r_grid.is_empty() {
        return Err(Error::InvalidParameter("r grid must be nonempty".into()));
    }
    let mut grid = r_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let top = &grid[grid.len().saturating_sub(10)..];
    let used: Vec<VarphiEstimate> = top
        .par_iter()
        .enumerate()
        .map(|(i, &r)| estimate_varphi(problem, r, budget, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let value = used.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    Ok(GammaEstimate { value, used, heuristic: true })
}

/// One row of the sublevel chain inequality on the finite-graph system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub c: f64,
    pub r: f64,
    pub varphi: f64,
    /// `p K 2^{p-1} ∫ max_{|s|+|t|<=c} F dμ / c^δ`.
    pub bound: f64,
    pub holds: bool,
}

/// Evaluate `φ(r_n)` at `r_n = 2^{1-p} c_n^δ / (p K)` and compare with
/// `p K 2^{p-1} ∫ max_{|s|+|t|<=c_n} F dμ / c_n^δ` plus a relative `slack`.
pub fn sublevel_chain(
    problem: &Problem<'_>,
    cs: &[f64],
    budget: &VarphiBudget,
    slack: f64,
    seed: u64,
) -> Result<Vec<ChainRow>> {
    if problem.spec().system != SystemKind::FinitePoly {
        return Err(Error::InvalidParameter("the sublevel chain is stated for finite_poly".into()));
    }
    let report = problem
        .interval_constants(crate::energy::AbSource::ClosedForm)
        .or_else(|_| problem.interval_constants(crate::energy::AbSource::Estimate))?;
    let k = report.k;
    let p = problem.spec().p;
    let single = problem.space_v().is_none();
    let delta = if single { p } else { p.min(problem.spec().q) };
    let factor = if single { 1.0 } else { 2f64.powf(p - 1.0) };
    cs.par_iter()
        .enumerate()
        .map(|(i, &c)| {
            let r = c.powf(delta) / (factor * p * k);
            let est = estimate_varphi(problem, r, budget, seed.wrapping_add(i as u64))?;
            let ball = problem.model().ball_max_integral(problem.graph(), problem.active(), c, 256);
            let bound = p * k * factor * ball / c.powf(delta);
            Ok(ChainRow { c, r, varphi: est.value, bound, holds: est.value <= bound * (1.0 + slack) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{AbSource, EstimatorSettings, SystemSpec};
    use crate::graph::GraphBuilder;
    use crate::models::ModelSpec;
    use std::collections::BTreeMap;

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

    fn triangle() -> WeightedGraph {
        GraphBuilder::new()
            .vertex("a", 0.7, 1.2, 0.9)
            .unwrap()
            .vertex("b", 1.3, 0.6, 1.1)
            .unwrap()
            .vertex("c", 1.0, 1.5, 0.8)
            .unwrap()
            .edge("a", "b", 0.4)
            .unwrap()
            .edge("b", "c", 1.7)
            .unwrap()
            .edge("a", "c", 0.9)
            .unwrap()
            .build()
            .unwrap()
    }

    fn spec(model: ModelSpec) -> SystemSpec {
        SystemSpec {
            system: SystemKind::FinitePoly,
            p: 2.0,
            q: 2.0,
            m1: 1,
            m2: 1,
            lambda: 1.0,
            arity: 2,
            model,
            growth: None,
            ab_source: AbSource::ClosedForm,
            estimator: EstimatorSettings::default(),
            smoothing: 1e-8,
        }
    }

    #[test]
    fn identities_hold_on_small_graphs() {
        for g in [pair(), triangle()] {
            let r = check_identities(&g, 100, &[2.0, 2.5, 3.0, 4.0], &[1, 2, 3], 11).unwrap();
            assert!(r.pass, "{:#?}", r.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        }
        assert!(check_identities(&pair(), 0, &[2.0], &[1], 0).is_err());
    }

    #[test]
    fn embedding_bounds_hold_and_single_vertex_is_tight() {
        let specs = [
            NormSpec::new(NormKind::FiniteFull, 1, 2.0, Channel::H1),
            NormSpec::new(NormKind::Wh, 1, 3.0, Channel::H2),
        ];
        let r = check_embeddings(&triangle(), &specs, &[3.0, 6.0], 2000, 3, true).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.checks.iter().all(|c| c.sharpness <= 1.0 + 1e-12));

        let single = GraphBuilder::new().vertex("z", 2.0, 0.5, 1.0).unwrap().build().unwrap();
        let r = check_embeddings(&single, &specs[..1], &[], 50, 1, false).unwrap();
        assert!((r.checks[0].sharpness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn varphi_vanishes_without_nonlinearity() {
        let g = pair();
        let mut weights = BTreeMap::new();
        weights.insert("a".to_string(), 0.0);
        weights.insert("b".to_string(), 0.0);
        let model = ModelSpec::Separable { s_exp: 2.0, t_exp: 2.0, weights, default_weight: 0.0 };
        let problem = Problem::new(&spec(model), &g, None).unwrap();
        let e = estimate_varphi(&problem, 3.0, &VarphiBudget::default(), 0).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.heuristic);
        assert!(estimate_varphi(&problem, 0.0, &VarphiBudget::default(), 0).is_err());
    }

    #[test]
    fn varphi_at_most_sup_over_r() {
        let g = triangle();
        let model = ModelSpec::Power { alpha: 1.0, beta: 1.0, s_exp: 2.0, t_exp: 2.0 };
        let problem = Problem::new(&spec(model), &g, None).unwrap();
        for r in [0.5, 4.0, 40.0] {
            let e = estimate_varphi(&problem, r, &VarphiBudget::default(), 5).unwrap();
            assert!(e.value >= 0.0 && e.value <= e.sup_psi / r * (1.0 + 1e-12), "{e:?}");
        }
    }

    #[test]
    fn chain_and_gamma_bound_for_power_model() {
        let g = triangle();
        let model = ModelSpec::Power { alpha: 1.0, beta: 1.0, s_exp: 2.0, t_exp: 2.0 };
        let problem = Problem::new(&spec(model), &g, None).unwrap();
        let rows = sublevel_chain(&problem, &[1.0, 4.0, 16.0], &VarphiBudget::default(), 0.05, 9).unwrap();
        assert!(rows.iter().all(|r| r.holds), "{rows:?}");
        let report = problem.interval_constants(AbSource::ClosedForm).unwrap();
        let grid: Vec<f64> = (0..12).map(|i| 2f64.powi(i)).collect();
        let gamma = estimate_gamma(&problem, &grid, &VarphiBudget::default(), 2).unwrap();
        let bound = 2.0 * report.k * 2.0 * report.a.value;
        assert!(gamma.value <= 1.1 * bound, "{} vs {}", gamma.value, bound);
    }
}
