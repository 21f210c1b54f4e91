mod common;

use common::{grad_len, power, random_graph, rel, rng, spike_mass, system};
use quasigraph::solver::{geometric_sequence, probe_unbounded_constant, probe_unbounded_spike, DIVERGENCE_FLOOR};
use quasigraph::{Error, Problem, SystemKind};

#[test]
fn spike_states_match_their_closed_forms() {
    let mut r = rng(505);
    for trial in 0..100 {
        let g = random_graph(&mut r, 3..30);
        let (p, q) = ([2.0, 2.5, 3.0][trial % 3], [2.0, 3.0][trial % 2]);
        let problem = Problem::new(&system(SystemKind::PqWh, p, q, 1.0, power(3.0, 3.0)), &g, None).unwrap();
        let n = g.len();
        for x in 0..n {
            let (xi, eta) = (1.7, 0.6);
            let mut u = vec![0.0; n];
            u[x] = xi;
            let lens = quasigraph::calculus::grad_lengths(&g, &u);
            for (y, len) in lens.iter().enumerate() {
                let direct = grad_len(&g, &u, y);
                assert!((len - direct).abs() <= 1e-12 * direct.max(1e-300), "{len} vs {direct}");
            }
            let mut coords = u.clone();
            coords.extend((0..n).map(|y| if y == x { eta } else { 0.0 }));
            let closed = xi.powf(p) * spike_mass(&g, x, p, g.h1()) / p + eta.powf(q) * spike_mass(&g, x, q, g.h2()) / q;
            assert!(rel(problem.phi_coords(&coords), closed) <= 1e-10);
            let (m1, m2) = problem.spike_masses()[x];
            assert!(rel(m1, spike_mass(&g, x, p, g.h1())) <= 1e-12);
            assert!(rel(m2, spike_mass(&g, x, q, g.h2())) <= 1e-12);
        }
    }
}

#[test]
fn spike_probe_checks_pass_and_diverge_when_superlinear() {
    let mut r = rng(606);
    let mut probed = 0;
    for _ in 0..100 {
        let g = random_graph(&mut r, 3..30);
        let problem = Problem::new(&system(SystemKind::PqWh, 2.0, 2.0, 1.0, power(3.0, 3.0)), &g, None).unwrap();
        match problem.spike_vertex() {
            Ok(x0) => {
                let seq = geometric_sequence(1.0, 2.0, 24);
                let trace = probe_unbounded_spike(&problem, g.id(x0), &seq, &seq).unwrap();
                assert!(trace.checks_pass, "{:?}", trace.checks.iter().find(|c| !c.pass));
                assert!(trace.diverged);
                assert!(trace.steps.last().unwrap().energy < DIVERGENCE_FLOOR);
                probed += 1;
            }
            Err(Error::Hypothesis(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(probed > 0);
}

#[test]
fn constant_probe_matches_closed_form_and_diverges() {
    let mut r = rng(707);
    for trial in 0..100 {
        let g = random_graph(&mut r, 3..30);
        let (p, q) = ([2.0, 2.5, 3.0][trial % 3], [2.0, 3.0][trial % 2]);
        let problem = Problem::new(&system(SystemKind::FinitePoly, p, q, 1.0, power(3.5, 3.5)), &g, None).unwrap();
        let seq = geometric_sequence(0.5, 2.0, 24);
        let trace = probe_unbounded_constant(&problem, &seq, &seq).unwrap();
        let mu = g.mu();
        let int_h1: f64 = (0..g.len()).map(|x| mu[x] * g.h1()[x]).sum();
        let int_h2: f64 = (0..g.len()).map(|x| mu[x] * g.h2()[x]).sum();
        for s in &trace.steps {
            let closed = s.xi.powf(p) / p * int_h1 + s.eta.powf(q) / q * int_h2;
            assert!(rel(s.phi, closed) <= 1e-12, "{} vs {closed}", s.phi);
        }
        assert!(trace.checks_pass && trace.diverged && trace.bound_holds == Some(true));
    }
}

#[test]
fn probes_reject_the_wrong_system() {
    let mut r = rng(808);
    let g = random_graph(&mut r, 4..5);
    let finite = Problem::new(&system(SystemKind::FinitePoly, 2.0, 2.0, 1.0, power(3.0, 3.0)), &g, None).unwrap();
    assert!(probe_unbounded_spike(&finite, "v0", &[1.0], &[1.0]).is_err());
    let wh = Problem::new(&system(SystemKind::PqWh, 2.0, 2.0, 1.0, power(3.0, 3.0)), &g, None).unwrap();
    assert!(probe_unbounded_constant(&wh, &[1.0], &[1.0]).is_err());
    assert!(probe_unbounded_constant(&finite, &[1.0, 2.0], &[1.0]).is_err());
    assert!(probe_unbounded_constant(&finite, &[-1.0], &[1.0]).is_err());
}
