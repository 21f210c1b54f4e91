// Negated float comparisons below also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use sha2::{Digest, Sha256};

use quasigraph::diagnostics::{check_embeddings, check_identities, EmbeddingReport, IdentityReport};
use quasigraph::energy::{IntervalReport, Problem, SystemSpec};
use quasigraph::solver::{
    geometric_sequence, probe_unbounded_constant, probe_unbounded_spike, solve, SolveReport, SolverConfig,
};
use quasigraph::{Channel, DomainPartition, Error, GraphFile, NormKind, NormSpec, WeightedGraph};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "quasigraph", version, about = "Variational systems on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify operator identities and embedding inequalities on a graph.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Random functions per embedding check.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Compute the admissible parameter interval.
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: PathBuf,
    },
    /// Search for critical points.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        solver: Option<PathBuf>,
    },
    /// Solve over a grid of parameter values and write a CSV table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        solver: Option<PathBuf>,
        /// `a:b:n` for n evenly spaced values, `a:b:n:log` for geometric spacing,
        /// or an ascending comma list.
        #[arg(long = "lambda-grid")]
        lambda_grid: String,
    },
    /// Evaluate the energy along constant or spike sequences.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_enum)]
        probe: ProbeArg,
        /// Spike vertex; defaults to the minimizer of the spike masses.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        start: f64,
        #[arg(long, default_value_t = 2.0)]
        growth: f64,
        #[arg(long, default_value_t = 24)]
        steps: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    graph: PathBuf,
    /// Overrides the seed of the solver configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeArg {
    Constant,
    Spike,
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn from_core(err: Error) -> Self {
        let code = match err {
            Error::Hypothesis(_) => 3,
            _ => 2,
        };
        Self { code, message: err.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure::from_core(err)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

struct Inputs {
    texts: Vec<(String, String)>,
}

impl Inputs {
    fn new() -> Self {
        Self { texts: Vec::new() }
    }

    fn load(&mut self, label: &str, path: &Path) -> CliResult<String> {
        let text = read(path)?;
        self.texts.push((label.to_string(), text.clone()));
        Ok(text)
    }

    fn note(&mut self, label: &str, value: String) {
        self.texts.push((label.to_string(), value));
    }

    /// SHA-256 over every input text and option, in load order.
    fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (label, text) in &self.texts {
            h.update(label.as_bytes());
            h.update([0]);
            h.update((text.len() as u64).to_le_bytes());
            h.update(text.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

fn load_graph(inputs: &mut Inputs, path: &Path) -> CliResult<(WeightedGraph, Option<Vec<String>>)> {
    let text = inputs.load("graph", path)?;
    let file = GraphFile::from_json(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let graph = file.build().map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    Ok((graph, file.domain.map(|d| d.omega)))
}

fn load_system(inputs: &mut Inputs, path: &Path) -> CliResult<SystemSpec> {
    let text = inputs.load("system", path)?;
    SystemSpec::from_json(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn load_solver(inputs: &mut Inputs, path: Option<&Path>, seed: Option<u64>) -> CliResult<SolverConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = inputs.load("solver", p)?;
            SolverConfig::from_json(&text).map_err(|e| Failure::parse(format!("{}: {e}", p.display())))?
        }
        None => SolverConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    inputs.note("seed", cfg.seed.to_string());
    Ok(cfg)
}

fn domain_of(graph: &WeightedGraph, omega: &Option<Vec<String>>) -> CliResult<Option<DomainPartition>> {
    omega
        .as_ref()
        .map(|ids| DomainPartition::from_ids(graph, ids).map_err(|e| Failure::parse(e.to_string())))
        .transpose()
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    config_hash: String,
    report: T,
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure { code: 1, message: format!("{}: {e}", p.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, command: &str, inputs: &Inputs, report: T) -> CliResult<()> {
    let env = Envelope { schema_version: SCHEMA_VERSION, command, config_hash: inputs.hash(), report };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| Failure { code: 1, message: e.to_string() })?;
    text.push('\n');
    emit(out, &text)
}

#[derive(Serialize)]
struct CheckReport {
    identities: IdentityReport,
    embeddings: EmbeddingReport,
    skipped: Vec<String>,
    pass: bool,
}

fn cmd_check(common: &Common, trials: usize, samples: usize) -> CliResult<()> {
    let mut inputs = Inputs::new();
    let (graph, _) = load_graph(&mut inputs, &common.graph)?;
    let seed = common.seed.unwrap_or(0);
    inputs.note("seed", seed.to_string());
    inputs.note("trials", trials.to_string());
    inputs.note("samples", samples.to_string());
    let identities = check_identities(&graph, trials, &[2.0, 2.5, 3.0, 4.0], &[1, 2, 3], seed)?;
    let mut specs = Vec::new();
    let mut skipped = Vec::new();
    for channel in [Channel::H1, Channel::H2] {
        if graph.potential_min(channel) <= 0.0 {
            skipped.push(format!("{channel:?}: potential not positive, embeddings skipped"));
            continue;
        }
        for l in [2.0, 3.0] {
            specs.push(NormSpec::new(NormKind::FiniteFull, 1, l, channel));
            specs.push(NormSpec::new(NormKind::Wh, 1, l, channel));
        }
    }
    let embeddings = check_embeddings(&graph, &specs, &[2.0, 3.0, 4.0, 6.0], samples, seed, true)?;
    let pass = identities.pass && embeddings.violations == 0;
    emit_json(common.out.as_deref(), "check", &inputs, CheckReport { identities, embeddings, skipped, pass })?;
    if pass {
        Ok(())
    } else {
        Err(Failure { code: 3, message: "identity or embedding checks failed".into() })
    }
}

fn cmd_constants(common: &Common, system: &Path) -> CliResult<()> {
    let mut inputs = Inputs::new();
    let (graph, omega) = load_graph(&mut inputs, &common.graph)?;
    let spec = load_system(&mut inputs, system)?;
    let domain = domain_of(&graph, &omega)?;
    let problem = Problem::new(&spec, &graph, domain.as_ref())?;
    let report: IntervalReport = problem.interval_constants(spec.ab_source)?;
    if !report.valid {
        info!("interval is not valid for these constants (A = {}, B = {})", report.a.value, report.b.value);
    }
    emit_json(common.out.as_deref(), "constants", &inputs, report)
}

fn cmd_solve(common: &Common, system: &Path, solver: Option<&Path>) -> CliResult<()> {
    let mut inputs = Inputs::new();
    let (graph, omega) = load_graph(&mut inputs, &common.graph)?;
    let spec = load_system(&mut inputs, system)?;
    let cfg = load_solver(&mut inputs, solver, common.seed)?;
    let domain = domain_of(&graph, &omega)?;
    let problem = Problem::new(&spec, &graph, domain.as_ref())?;
    let report: SolveReport = solve(&problem, &cfg)?;
    info!(
        "{} critical points from {} starts in {:.3?}",
        report.critical_points.len(),
        report.starts_used,
        report.wall_time
    );
    let found = !report.critical_points.is_empty();
    emit_json(common.out.as_deref(), "solve", &inputs, report)?;
    if found {
        Ok(())
    } else {
        Err(Failure { code: 4, message: "no critical point found".into() })
    }
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    if text.contains(',') {
        let bad = || Failure::parse(format!("lambda grid `{text}`: expected ascending non-negative values"));
        let values =
            text.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<CliResult<Vec<f64>>>()?;
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad());
        }
        return Ok(values);
    }
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::parse(format!("lambda grid `{text}`: expected a:b:n, a:b:n:log or a comma list"));
    if !(parts.len() == 3 || (parts.len() == 4 && parts[3] == "log")) {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    let log = parts.len() == 4;
    if n == 0 || !(a >= 0.0) || !(b >= a) || !b.is_finite() || (log && !(a > 0.0)) {
        return Err(bad());
    }
    if n > 1 && a == b {
        return Err(bad());
    }
    let mut grid: Vec<f64> = (0..n)
        .map(|i| {
            let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            if log {
                (a.ln() + t * (b.ln() - a.ln())).exp()
            } else {
                a + t * (b - a)
            }
        })
        .collect();
    grid.dedup();
    Ok(grid)
}

fn cmd_sweep(common: &Common, system: &Path, solver: Option<&Path>, grid: &str) -> CliResult<()> {
    let mut inputs = Inputs::new();
    let (graph, omega) = load_graph(&mut inputs, &common.graph)?;
    let spec = load_system(&mut inputs, system)?;
    let cfg = load_solver(&mut inputs, solver, common.seed)?;
    inputs.note("lambda_grid", grid.to_string());
    let lambdas = parse_grid(grid)?;
    let domain = domain_of(&graph, &omega)?;
    let base = Problem::new(&spec, &graph, domain.as_ref())?;
    let interval = base.interval_constants(spec.ab_source).ok();
    let mut csv = format!("# schema_version={SCHEMA_VERSION} config_hash={}\n", inputs.hash());
    csv.push_str("lambda,inside_interval,n_points,phi\n");
    for &lambda in &lambdas {
        let problem = Problem::new(&spec.with_lambda(lambda), &graph, domain.as_ref())?;
        let report = solve(&problem, &cfg)?;
        let inside = interval.as_ref().is_some_and(|r| r.contains(lambda));
        let phis: Vec<String> = report.critical_points.iter().map(|c| format!("{:e}", c.phi)).collect();
        info!("lambda {lambda}: {} points", phis.len());
        csv.push_str(&format!("{lambda:e},{inside},{},{}\n", phis.len(), phis.join(";")));
    }
    emit(common.out.as_deref(), &csv)
}

#[allow(clippy::too_many_arguments)]
fn cmd_probe(
    common: &Common,
    system: &Path,
    probe: ProbeArg,
    x0: Option<&str>,
    start: f64,
    growth: f64,
    steps: usize,
) -> CliResult<()> {
    let mut inputs = Inputs::new();
    let (graph, omega) = load_graph(&mut inputs, &common.graph)?;
    let spec = load_system(&mut inputs, system)?;
    inputs.note("sequence", format!("{start}:{growth}:{steps}"));
    if !(start >= 0.0 && growth >= 1.0 && start.is_finite() && growth.is_finite()) || steps == 0 {
        return Err(Failure::parse("sequence needs start >= 0, growth >= 1 and steps >= 1"));
    }
    let domain = domain_of(&graph, &omega)?;
    let problem = Problem::new(&spec, &graph, domain.as_ref())?;
    let seq = geometric_sequence(start, growth, steps);
    let trace = match probe {
        ProbeArg::Constant => {
            inputs.note("probe", "constant".into());
            probe_unbounded_constant(&problem, &seq, &seq)?
        }
        ProbeArg::Spike => {
            let x0 = match x0 {
                Some(id) => id.to_string(),
                None => graph.id(problem.spike_vertex()?).to_string(),
            };
            inputs.note("probe", format!("spike:{x0}"));
            probe_unbounded_spike(&problem, &x0, &seq, &seq)?
        }
    };
    emit_json(common.out.as_deref(), "probe", &inputs, trace)
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Check { common, trials, samples } => cmd_check(common, *trials, *samples),
        Command::Constants { common, system } => cmd_constants(common, system),
        Command::Solve { common, system, solver } => cmd_solve(common, system, solver.as_deref()),
        Command::Sweep { common, system, solver, lambda_grid } => {
            cmd_sweep(common, system, solver.as_deref(), lambda_grid)
        }
        Command::Probe { common, system, probe, x0, start, growth, steps } => {
            cmd_probe(common, system, *probe, x0.as_deref(), *start, *growth, *steps)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5:1.5:3").ok().unwrap(), vec![0.5, 1.0, 1.5]);
        assert_eq!(parse_grid("2:2:1").ok().unwrap(), vec![2.0]);
        let g = parse_grid("0.01:100:5:log").ok().unwrap();
        assert!((g[2] - 1.0).abs() < 1e-12 && g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(parse_grid("0.1, 2,30").ok().unwrap(), vec![0.1, 2.0, 30.0]);
        for bad in ["1,1", "2,1", "-1,2", "1,x", "1:0:3", "1:2", "a:b:c", "0:1:0", "0:1:3:lin", "0:1:3:log"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }
}
