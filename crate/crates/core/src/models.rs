//! Nonlinearities `F(x, s, t)` and the growth constants `A`, `B` that bound
//! the admissible parameter interval.
//!
//! Every catalog model factors as `F(x, s, t) = b(x) F0(s, t)` with a
//! nonnegative per-vertex weight `b`, which the growth estimators exploit.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::numeric::{abs_pow, csum, signed_pow};

fn two() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

fn default_blend() -> f64 {
    0.2
}

/// Catalog entry plus parameters, as read from a system file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "catalog", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `alpha |s|^s_exp + beta |t|^t_exp`.
    Power {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        beta: f64,
        #[serde(default = "two")]
        s_exp: f64,
        #[serde(default = "two")]
        t_exp: f64,
    },
    /// `b(x) (|s|^s_exp + |t|^t_exp)` with per-vertex weights `b`.
    Separable {
        #[serde(default = "two")]
        s_exp: f64,
        #[serde(default = "two")]
        t_exp: f64,
        /// Weight by vertex id; vertices not listed get `default_weight`.
        #[serde(default)]
        weights: BTreeMap<String, f64>,
        #[serde(default = "one")]
        default_weight: f64,
    },
    /// `theta(|s|^s_exp + |t|^t_exp)` where `theta` ramps with slope `beta`
    /// and stays flat on `[a_k, ratio a_k]`, `a_k = a0 ratio^{2k}`. Corners are
    /// rounded over windows of relative width `blend`.
    PlateauOscillator {
        beta: f64,
        ratio: f64,
        #[serde(default = "one")]
        a0: f64,
        #[serde(default = "two")]
        s_exp: f64,
        #[serde(default = "two")]
        t_exp: f64,
        #[serde(default = "default_blend")]
        blend: f64,
    },
}

/// Radial profile of the plateau oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauProfile {
    pub beta: f64,
    pub ratio: f64,
    pub a0: f64,
    pub blend: f64,
}

#[inline]
fn smoothstep(z: f64) -> f64 {
    z * z * (3.0 - 2.0 * z)
}

#[inline]
fn smoothstep_integral(z: f64) -> f64 {
    z * z * z - 0.5 * z * z * z * z
}

impl PlateauProfile {
    pub fn new(beta: f64, ratio: f64, a0: f64, blend: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Model(format!("plateau slope must be positive, got {beta}")));
        }
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(Error::Model(format!("plateau a0 must be positive, got {a0}")));
        }
        if !(blend > 0.0 && blend < 1.0) {
            return Err(Error::Model(format!("plateau blend must lie in (0, 1), got {blend}")));
        }
        if !(ratio > (1.0 + blend / 2.0) / (1.0 - blend / 2.0)) || !ratio.is_finite() {
            return Err(Error::Model(format!("plateau ratio {ratio} too small for blend {blend}")));
        }
        Ok(Self { beta, ratio, a0, blend })
    }

    /// Start of the `k`-th plateau.
    pub fn knot(&self, k: i32) -> f64 {
        self.a0 * self.ratio.powi(2 * k)
    }

    /// Plateau height `theta(a_k)` of the unrounded profile.
    pub fn level(&self, k: i32) -> f64 {
        let c = self.ratio;
        self.beta * self.a0 * (1.0 + c * (c.powi(2 * k) - 1.0) / (c + 1.0))
    }

    /// `(theta(r), theta'(r))` for `r >= 0`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let beta = self.beta;
        let half = self.blend / 2.0;
        if r <= self.a0 * (1.0 - half) {
            return (beta * r, beta);
        }
        // largest k with a_k (1 - half) <= r
        let period = (self.ratio * self.ratio).ln();
        let mut k = ((r / (self.a0 * (1.0 - half))).ln() / period).floor() as i32;
        while k > 0 && self.knot(k) * (1.0 - half) > r {
            k -= 1;
        }
        while self.knot(k + 1) * (1.0 - half) <= r {
            k += 1;
        }
        let a = self.knot(k);
        let level = self.level(k);
        let up = self.ratio * a;
        if r < a * (1.0 + half) {
            // ramp -> plateau corner at a
            let h = a * half;
            let z = (r - (a - h)) / (2.0 * h);
            let base = level - beta * h;
            (base + beta * ((r - (a - h)) - 2.0 * h * smoothstep_integral(z)), beta * (1.0 - smoothstep(z)))
        } else if r <= up * (1.0 - half) {
            (level, 0.0)
        } else if r < up * (1.0 + half) {
            // plateau -> ramp corner at ratio * a
            let h = up * half;
            let z = (r - (up - h)) / (2.0 * h);
            (level + beta * 2.0 * h * smoothstep_integral(z), beta * smoothstep(z))
        } else {
            (level + beta * (r - up), beta)
        }
    }

    /// Dense one-dimensional scan of `theta(r)/r` over plateau periods
    /// `first..=last`; returns `(min, max)`.
    pub fn ratio_extremes(&self, first: i32, last: i32, per_period: usize) -> (f64, f64) {
        let lo = self.knot(first).ln();
        let hi = self.knot(last + 1).ln();
        let n = per_period * (last - first + 1).max(1) as usize;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..=n {
            let r = (lo + (hi - lo) * i as f64 / n as f64).exp();
            let q = self.eval(r).0 / r;
            min = min.min(q);
            max = max.max(q);
        }
        (min, max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arity {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Arity {
    pub fn from_count(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Arity::One),
            2 => Ok(Arity::Two),
            _ => Err(Error::InvalidParameter(format!("arity must be 1 or 2, got {n}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Base {
    Power { alpha: f64, beta: f64, s_exp: f64, t_exp: f64 },
    Plateau { profile: PlateauProfile, s_exp: f64, t_exp: f64 },
}

impl Base {
    fn eval(&self, s: f64, t: f64) -> f64 {
        match *self {
            Base::Power { alpha, beta, s_exp, t_exp } => alpha * abs_pow(s, s_exp) + beta * abs_pow(t, t_exp),
            Base::Plateau { profile, s_exp, t_exp } => profile.eval(abs_pow(s, s_exp) + abs_pow(t, t_exp)).0,
        }
    }

    fn partials(&self, s: f64, t: f64) -> (f64, f64) {
        match *self {
            Base::Power { alpha, beta, s_exp, t_exp } => {
                (alpha * s_exp * signed_pow(s, s_exp), beta * t_exp * signed_pow(t, t_exp))
            }
            Base::Plateau { profile, s_exp, t_exp } => {
                let d = profile.eval(abs_pow(s, s_exp) + abs_pow(t, t_exp)).1;
                (d * s_exp * signed_pow(s, s_exp), d * t_exp * signed_pow(t, t_exp))
            }
        }
    }
}

/// Closed-form or oracle-derived growth constants of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthHint {
    pub a: f64,
    pub b: f64,
    pub note: String,
}

/// A catalog nonlinearity bound to a graph.
#[derive(Debug, Clone)]
pub struct NonlinearityModel {
    spec: ModelSpec,
    arity: Arity,
    base: Base,
    weight: Vec<f64>,
}

impl NonlinearityModel {
    /// Bind `spec` to `graph` without the registration checks.
    pub fn bind(spec: &ModelSpec, graph: &WeightedGraph, arity: Arity) -> Result<Self> {
        let exp_ok = |e: f64| e.is_finite() && e > 1.0;
        let (base, weight) = match spec {
            &ModelSpec::Power { alpha, beta, s_exp, t_exp } => {
                if !exp_ok(s_exp) || !exp_ok(t_exp) {
                    return Err(Error::Model("power exponents must exceed 1".into()));
                }
                if !alpha.is_finite() || !beta.is_finite() {
                    return Err(Error::Model("power coefficients must be finite".into()));
                }
                (Base::Power { alpha, beta, s_exp, t_exp }, vec![1.0; graph.len()])
            }
            ModelSpec::Separable { s_exp, t_exp, weights, default_weight } => {
                if !exp_ok(*s_exp) || !exp_ok(*t_exp) {
                    return Err(Error::Model("separable exponents must exceed 1".into()));
                }
                let mut w = vec![*default_weight; graph.len()];
                for (id, &v) in weights {
                    w[graph.vertex(id)?] = v;
                }
                if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                    return Err(Error::Model("separable weights must be finite and nonnegative".into()));
                }
                (Base::Power { alpha: 1.0, beta: 1.0, s_exp: *s_exp, t_exp: *t_exp }, w)
            }
            &ModelSpec::PlateauOscillator { beta, ratio, a0, s_exp, t_exp, blend } => {
                if !exp_ok(s_exp) || !exp_ok(t_exp) {
                    return Err(Error::Model("plateau exponents must exceed 1".into()));
                }
                let profile = PlateauProfile::new(beta, ratio, a0, blend)?;
                (Base::Plateau { profile, s_exp, t_exp }, vec![1.0; graph.len()])
            }
        };
        Ok(Self { spec: spec.clone(), arity, base, weight })
    }

    /// Bind and run the registration checks on the active vertex set:
    /// `∫ F(x,0,0) dμ = 0`, analytic partials against central differences, and
    /// a finite weight integral.
    pub fn register(spec: &ModelSpec, graph: &WeightedGraph, arity: Arity, active: &[usize]) -> Result<Self> {
        let model = Self::bind(spec, graph, arity)?;
        let f0 = csum(active.iter().map(|&x| graph.mu()[x] * model.eval(x, 0.0, 0.0)));
        if f0.abs() > 1e-12 {
            return Err(Error::Model(format!("integral of F(x,0,0) is {f0}, expected 0")));
        }
        let wint = model.weight_integral(graph, active);
        if !wint.is_finite() {
            return Err(Error::Model("weight integral is not finite".into()));
        }
        let worst = model.partials_check(active, 64, 0xf0);
        if worst > 1e-6 {
            return Err(Error::Model(format!("analytic partials disagree with differences (rel {worst:e})")));
        }
        Ok(model)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weight[x]
    }

    /// `∫_active b dμ`.
    pub fn weight_integral(&self, graph: &WeightedGraph, active: &[usize]) -> f64 {
        csum(active.iter().map(|&x| graph.mu()[x] * self.weight[x]))
    }

    #[inline]
    fn t_of(&self, t: f64) -> f64 {
        match self.arity {
            Arity::One => 0.0,
            Arity::Two => t,
        }
    }

    /// `F(x, s, t)`; arity-1 models ignore `t`.
    pub fn eval(&self, x: usize, s: f64, t: f64) -> f64 {
        self.weight[x] * self.base.eval(s, self.t_of(t))
    }

    /// `(F_s, F_t)`; `F_t = 0` for arity-1 models.
    pub fn partials(&self, x: usize, s: f64, t: f64) -> (f64, f64) {
        let (ds, dt) = self.base.partials(s, self.t_of(t));
        let dt = if self.arity == Arity::One { 0.0 } else { dt };
        (self.weight[x] * ds, self.weight[x] * dt)
    }

    pub fn ds(&self, x: usize, s: f64, t: f64) -> f64 {
        self.partials(x, s, t).0
    }

    pub fn dt(&self, x: usize, s: f64, t: f64) -> f64 {
        self.partials(x, s, t).1
    }

    /// Worst relative disagreement between analytic partials and central
    /// differences over `probes` random points per active vertex sample.
    pub fn partials_check(&self, active: &[usize], probes: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        if active.is_empty() {
            return 0.0;
        }
        for _ in 0..probes {
            let x = active[rng.gen_range(0..active.len())];
            let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
            let s = scale * rng.gen_range(-1.0..1.0);
            let t = scale * rng.gen_range(-1.0..1.0);
            let (an_s, an_t) = self.partials(x, s, t);
            let hs = 1e-6 * (1.0 + s.abs());
            let ht = 1e-6 * (1.0 + t.abs());
            let fd_s = (self.eval(x, s + hs, t) - self.eval(x, s - hs, t)) / (2.0 * hs);
            let fd_t = (self.eval(x, s, t + ht) - self.eval(x, s, t - ht)) / (2.0 * ht);
            let fval = self.eval(x, s, t).abs() + 1.0;
            for (an, fd, h) in [(an_s, fd_s, hs), (an_t, fd_t, ht)] {
                let floor = 100.0 * f64::EPSILON * fval / h;
                let err = ((an - fd).abs() - floor).max(0.0) / an.abs().max(fd.abs()).max(1e-300);
                worst = worst.max(if (an - fd).abs() <= floor { 0.0 } else { err });
            }
        }
        worst
    }

    /// `max_{|s|+|t| <= y} F0(s, t)` by sampling `grid / 4` shells of `grid`
    /// points each (`t = 0` and `grid + 1` points on `[-y, y]` for arity 1).
    pub fn ball_max(&self, y: f64, grid: usize) -> f64 {
        let mut best = self.base.eval(0.0, 0.0);
        match self.arity {
            Arity::One => {
                for i in 0..=grid {
                    let s = -y + 2.0 * y * i as f64 / grid as f64;
                    best = best.max(self.base.eval(s, 0.0));
                }
            }
            Arity::Two => {
                let grid = grid.next_multiple_of(4);
                let shells = (grid / 4).max(1);
                for j in 1..=shells {
                    let r = y * j as f64 / shells as f64;
                    for (s, t) in diamond(r, grid) {
                        best = best.max(self.base.eval(s, t));
                    }
                }
            }
        }
        best
    }

    /// `∫_active max_{|s|+|t| <= y} F dμ`, sampled as in [`Self::ball_max`].
    pub fn ball_max_integral(&self, graph: &WeightedGraph, active: &[usize], y: f64, grid: usize) -> f64 {
        self.weight_integral(graph, active) * self.ball_max(y, grid)
    }

    /// Closed-form (power) or oracle (plateau) growth constants for the
    /// system exponents `p`, `q`, integrated over `active`.
    pub fn growth_hint(&self, graph: &WeightedGraph, active: &[usize], p: f64, q: f64) -> Option<GrowthHint> {
        let mass = self.weight_integral(graph, active);
        let single = self.arity == Arity::One;
        match self.base {
            Base::Power { alpha, beta, s_exp, t_exp } => {
                let coef = if single { alpha } else { alpha.max(beta) };
                let exps_match = if single { s_exp == p } else { s_exp == p && t_exp == q && p == q };
                let superlinear = s_exp > p || (!single && t_exp > q);
                if exps_match && coef > 0.0 {
                    Some(GrowthHint {
                        a: mass * coef,
                        b: mass * coef,
                        note: "power model with matching exponents: A = B = mass * max coefficient".into(),
                    })
                } else if superlinear && alpha > 0.0 && (single || beta > 0.0) {
                    Some(GrowthHint {
                        a: f64::INFINITY,
                        b: f64::INFINITY,
                        note: "superlinear power model: both ratios diverge".into(),
                    })
                } else {
                    None
                }
            }
            Base::Plateau { profile, s_exp, t_exp } => {
                let ok = if single { s_exp == p } else { s_exp == p && t_exp == q && p == q };
                if !ok {
                    return None;
                }
                let (lo, hi) = profile.ratio_extremes(2, 4, 20_000);
                Some(GrowthHint {
                    a: mass * lo,
                    b: mass * hi,
                    note: "plateau oscillator: extremes of theta(r)/r over plateau periods 2..4 by dense scan".into(),
                })
            }
        }
    }
}

/// A liminf/limsup estimate from finitely many radii; always heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub value: f64,
    pub heuristic: bool,
    /// `(radius, ratio)` for every radius.
    pub table: Vec<(f64, f64)>,
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 radii".into()));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("radii must be positive and strictly increasing".into()));
    }
    Ok(())
}

fn tail(n: usize) -> usize {
    n - n.div_ceil(2)
}

/// Points of the `l^1` sphere `|s| + |t| = y`, `count` of them starting at
/// `(y, 0)`; includes the four corners when `count` is a multiple of 4.
fn diamond(y: f64, count: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..count).map(move |i| {
        let u = 4.0 * i as f64 / count as f64;
        let side = u.floor();
        let f = u - side;
        let (s, t) = match side as u8 {
            0 => (1.0 - f, f),
            1 => (-f, 1.0 - f),
            2 => (f - 1.0, -f),
            _ => (f, f - 1.0),
        };
        (y * s, y * t)
    })
}

/// Estimate `A = liminf_y ∫ max_{|s|+|t|<=y} F dμ / y^delta` by sampling the
/// `l^1` ball on `grid / 4` shells of `grid` points each.
pub fn estimate_a(
    model: &NonlinearityModel,
    graph: &WeightedGraph,
    active: &[usize],
    delta: f64,
    radii: &[f64],
    grid: usize,
) -> Result<GrowthEstimate> {
    check_radii(radii)?;
    if grid < 64 {
        return Err(Error::InvalidParameter(format!("grid must be >= 64, got {grid}")));
    }
    let mass = model.weight_integral(graph, active);
    let table: Vec<(f64, f64)> =
        radii.par_iter().map(|&y| (y, mass * model.ball_max(y, grid) / y.powf(delta))).collect();
    let value = table[tail(table.len())..].iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(GrowthEstimate { value, heuristic: true, table })
}

/// Default ray fan: 16 directions around the `l^1` circle, axes and
/// diagonals included.
pub fn default_rays() -> Vec<(f64, f64)> {
    diamond(1.0, 16).collect()
}

/// Estimate `B = limsup ∫ F dμ / (|s|^p + |t|^q)` along rays.
pub fn estimate_b(
    model: &NonlinearityModel,
    graph: &WeightedGraph,
    active: &[usize],
    p: f64,
    q: f64,
    rays: &[(f64, f64)],
    radii: &[f64],
) -> Result<GrowthEstimate> {
    check_radii(radii)?;
    if rays.is_empty() {
        return Err(Error::InvalidParameter("need at least one ray".into()));
    }
    let rays: Vec<(f64, f64)> = match model.arity {
        Arity::One => vec![(1.0, 0.0), (-1.0, 0.0)],
        Arity::Two => rays
            .iter()
            .filter(|(a, b)| a.abs() + b.abs() > 0.0)
            .map(|&(a, b)| (a / (a.abs() + b.abs()), b / (a.abs() + b.abs())))
            .collect(),
    };
    let mass = model.weight_integral(graph, active);
    let table: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&y| {
            let best = rays
                .iter()
                .map(|&(a, b)| {
                    let (s, t) = (y * a, y * b);
                    mass * model.base.eval(s, t) / (abs_pow(s, p) + abs_pow(t, q))
                })
                .fold(f64::NEG_INFINITY, f64::max);
            (y, best)
        })
        .collect();
    let value = table[tail(table.len())..].iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthEstimate { value, heuristic: true, table })
}

/// `n` geometrically spaced radii from `lo` to `hi`.
pub fn geometric_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}
