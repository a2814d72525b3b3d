//! The `uavq` command line.
//!
//! Exit codes: 0 on success, 1 for usage and I/O errors, 2 when a threshold
//! lies past a node's stability bound. `RUST_LOG` sets the log level.

use crate::error::{Error, Result};
use crate::interference::ErrorNormalization;
use crate::report::{write_results, Cell, ResultTable};
use crate::scenario::{load_scenario_file, Role, Scenario};
use crate::simulator::{self, CollisionModel, InterfererTraffic, SimConfig};
use crate::sweep::{self, Axis, AxisValue, Metric, SweepSpec, Variable};
use crate::throughput::{
    jacobi_best_response, EvalOptions, Evaluator, JacobiConfig, Objective, PolicyVector, ThroughputMode,
};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "uavq", version, about = "Expected throughput of ground-to-UAV links under queueing and interference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Loss breakdown and expected throughput of the source node.
    Evaluate(EvaluateArgs),
    /// Evaluate the source over a grid of parameters and write CSV.
    Sweep(SweepArgs),
    /// Run the slotted Monte Carlo simulation and compare with the analytic model.
    Simulate(SimulateArgs),
    /// Jacobi best-response search for every node's threshold.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    /// Built-in preset (fig2, fig3, fig4, fig5); its scenario is used unless --scenario is given.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Override a threshold: a node id, `interferers` or `all`. Repeatable.
    #[arg(long = "beta", value_name = "NODE=VALUE")]
    pub betas: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Throughput as λ(1 - P_loss) with all cross terms (default).
    #[arg(long, conflicts_with = "approx")]
    pub exact: bool,
    /// Throughput as λ(1 - P_dly - P_ov - P_err).
    #[arg(long)]
    pub approx: bool,
    /// Error probability as the unconditioned integral instead of per transmitted packet.
    #[arg(long)]
    pub literal_error: bool,
}

impl ModelArgs {
    fn options(&self) -> EvalOptions {
        EvalOptions {
            normalization: if self.literal_error {
                ErrorNormalization::Literal
            } else {
                ErrorNormalization::Conditional
            },
            mode: if self.approx {
                ThroughputMode::Approximate
            } else {
                ThroughputMode::Exact
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: ScenarioArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also write the breakdown as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: ScenarioArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sweep variable: beta_n, beta_m, interferer_count, gamma_th, slot_duration or interferer_power_range.
    /// Repeatable; each needs a matching --values.
    #[arg(long, value_name = "VARIABLE")]
    pub axis: Vec<String>,
    /// Comma-separated values, `start:stop:step`, or `low:high` pairs for interferer_power_range.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub values: Vec<String>,
    /// CSV output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CollisionArg {
    SameChannel,
    Always,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InterfererArg {
    Queued,
    Backlogged,
    Silent,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: ScenarioArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Master seed for all random streams.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Slots per replication, warm-up included.
    #[arg(long, default_value_t = 100_000)]
    pub slots: u64,
    /// Warm-up slots whose arrivals are not counted; a tenth of --slots by default.
    #[arg(long)]
    pub warmup: Option<u64>,
    /// Independent replications, run in parallel.
    #[arg(long, default_value_t = 8)]
    pub replications: usize,
    /// Which interferers hit the source's transmission.
    #[arg(long, value_enum, default_value = "same-channel")]
    pub collision: CollisionArg,
    /// Interferer traffic model.
    #[arg(long, value_enum, default_value = "queued")]
    pub interferers: InterfererArg,
    /// Also write analytic and empirical metrics as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Own,
    Sum,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub input: ScenarioArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Candidate thresholds per node, evenly spaced below its upper bound.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Stop once no threshold moves by more than this.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Iteration cap; hitting it is reported, not an error.
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    /// What each node maximizes.
    #[arg(long, value_enum, default_value = "own")]
    pub objective: ObjectiveArg,
    /// Write the per-iteration trace as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// The clap definition, for documentation checks.
pub fn command() -> clap::Command {
    Cli::command()
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        // reader went away, e.g. `uavq sweep ... | head`
        Err(e) if is_broken_pipe(&e) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_infeasible() {
                2
            } else {
                1
            }
        }
    }
}

fn is_broken_pipe(e: &Error) -> bool {
    let io = match e {
        Error::Io(io) => io,
        Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => io,
            _ => return false,
        },
        _ => return false,
    };
    io.kind() == std::io::ErrorKind::BrokenPipe
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Optimize(a) => cmd_optimize(&a),
    }
}

fn load_input(input: &ScenarioArgs) -> Result<Scenario> {
    let mut scenario = match (&input.scenario, &input.preset) {
        (Some(path), _) => load_scenario_file(path)?,
        (None, Some(name)) => sweep::preset(name)?.scenario,
        (None, None) => return Err(usage("one of --scenario or --preset is required")),
    };
    for spec in &input.betas {
        apply_beta(&mut scenario, spec)?;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn apply_beta(scenario: &mut Scenario, spec: &str) -> Result<()> {
    let (node, value) = spec
        .split_once('=')
        .ok_or_else(|| usage(format!("--beta expects NODE=VALUE, got `{spec}`")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| usage(format!("--beta value `{value}` is not a number")))?;
    let node = node.trim();
    let targets: Vec<usize> = match node {
        "all" => (0..scenario.nodes.len()).collect(),
        "interferers" => (0..scenario.nodes.len())
            .filter(|&i| scenario.nodes[i].role == Role::Interferer)
            .collect(),
        id => vec![scenario
            .node_index(id)
            .ok_or_else(|| usage(format!("--beta names unknown node `{id}`")))?],
    };
    for i in targets {
        scenario.nodes[i].beta = value;
    }
    Ok(())
}

fn write_table(table: &ResultTable, out: &Path) -> Result<()> {
    let file = std::fs::File::create(out)?;
    write_results(table, std::io::BufWriter::new(file))
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let scenario = load_input(&a.input)?;
    let eval = Evaluator::new(&scenario, a.model.options())?;
    let policy = PolicyVector::new(scenario.betas())?;
    let src = scenario.source_index();
    let b = eval.evaluate_node(&policy, src)?;
    println!("node        {}", scenario.nodes[src].id);
    println!("beta        {}", policy.betas[src]);
    println!("beta_upper  {:.6}", eval.beta_upper(src)?);
    println!("p_delay     {:.9e}", b.p_delay);
    println!("p_overflow  {:.9e}", b.p_overflow);
    println!("p_error     {:.9e}", b.p_error);
    println!("p_loss      {:.9e}", b.p_loss);
    println!("throughput  {:.9} packets/s", b.throughput);
    if let Some(out) = &a.out {
        let mut t = ResultTable::new(["p_delay", "p_overflow", "p_error", "p_loss", "throughput"]);
        t.push(vec![
            b.p_delay.into(),
            b.p_overflow.into(),
            b.p_error.into(),
            b.p_loss.into(),
            b.throughput.into(),
        ]);
        write_table(&t, out)?;
    }
    Ok(())
}

/// Parses one `--values` argument for `variable`.
pub fn parse_values(variable: Variable, text: &str) -> Result<Vec<AxisValue>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| usage(format!("`{s}` is not a number in --values for {variable}")))
    };
    if variable == Variable::InterfererPowerRange {
        return text
            .split(',')
            .map(|pair| {
                let (lo, hi) = pair
                    .split_once(':')
                    .ok_or_else(|| usage(format!("power ranges are written low:high, got `{pair}`")))?;
                Ok(AxisValue::Range(num(lo)?, num(hi)?))
            })
            .collect();
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => text.split(',').map(|s| num(s).map(AxisValue::Scalar)).collect(),
        3 => Ok(sweep::steps(num(parts[0])?, num(parts[1])?, num(parts[2])?)?
            .into_iter()
            .map(AxisValue::Scalar)
            .collect()),
        _ => Err(usage(format!("--values `{text}` is neither a list nor start:stop:step"))),
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    if a.axis.len() != a.values.len() {
        return Err(usage(format!(
            "{} --axis flags but {} --values flags",
            a.axis.len(),
            a.values.len()
        )));
    }
    let scenario = load_input(&a.input)?;
    let mut spec = if a.axis.is_empty() {
        match &a.input.preset {
            Some(name) => sweep::preset(name)?.sweep,
            None => return Err(usage("sweep needs --preset or at least one --axis")),
        }
    } else {
        let axes = a
            .axis
            .iter()
            .zip(&a.values)
            .map(|(name, values)| {
                let variable: Variable = name.parse()?;
                Axis::new(variable, parse_values(variable, values)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut spec = SweepSpec::new(axes);
        spec.metrics = Metric::ALL.to_vec();
        spec
    };
    spec.options = a.model.options();
    let table = sweep::run_sweep(&scenario, &spec)?;
    log::info!("sweep produced {} rows", table.rows.len());
    match &a.out {
        Some(out) => write_table(&table, out),
        None => write_results(&table, std::io::stdout().lock()),
    }
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let scenario = load_input(&a.input)?;
    let eval = Evaluator::new(&scenario, a.model.options())?;
    let policy = PolicyVector::new(scenario.betas())?;
    let analytic = eval.evaluate_node(&policy, scenario.source_index())?;
    let cfg = SimConfig {
        num_slots: a.slots,
        seed: a.seed,
        warmup_slots: a.warmup.unwrap_or(a.slots / 10),
        replication_count: a.replications,
        collision: match a.collision {
            CollisionArg::SameChannel => CollisionModel::SameChannel,
            CollisionArg::Always => CollisionModel::Always,
        },
        interferers: match a.interferers {
            InterfererArg::Queued => InterfererTraffic::Queued,
            InterfererArg::Backlogged => InterfererTraffic::Backlogged,
            InterfererArg::Silent => InterfererTraffic::Silent,
        },
    };
    let sim = simulator::run(&scenario, &policy, &cfg)?;
    let rows = [
        ("p_delay", analytic.p_delay, sim.p_delay),
        ("p_overflow", analytic.p_overflow, sim.p_overflow),
        ("p_error", analytic.p_error, sim.p_error),
        ("throughput", analytic.throughput, sim.throughput),
    ];
    let mut table = ResultTable::new(["metric", "analytic", "empirical", "halfwidth", "gap"]);
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{:<11} {:>14} {:>14} {:>12} {:>12}", "metric", "analytic", "empirical", "±95%", "gap")?;
    for (name, an, em) in rows {
        let gap = (an - em.mean).abs();
        writeln!(
            stdout,
            "{name:<11} {an:>14.6e} {:>14.6e} {:>12.3e} {gap:>12.3e}",
            em.mean, em.halfwidth
        )?;
        table.push(vec![Cell::from(name), an.into(), em.mean.into(), em.halfwidth.into(), gap.into()]);
    }
    let c = &sim.counts;
    writeln!(
        stdout,
        "counts: arrivals {} delivered {} delay {} overflow {} error {} queued {}",
        c.arrivals, c.delivered, c.delay_drops, c.overflow_drops, c.error_drops, c.still_queued
    )?;
    if let Some(out) = &a.out {
        write_table(&table, out)?;
    }
    Ok(())
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<()> {
    let scenario = load_input(&a.input)?;
    let eval = Evaluator::new(&scenario, a.model.options())?;
    let cfg = JacobiConfig {
        grid_size: a.grid,
        tol: a.tol,
        max_iters: a.max_iters,
        objective: match a.objective {
            ObjectiveArg::Own => Objective::Own,
            ObjectiveArg::Sum => Objective::Sum,
        },
    };
    let out = jacobi_best_response(&eval, &PolicyVector::new(scenario.betas())?, &cfg)?;
    let mut stdout = std::io::stdout().lock();
    let status = if out.converged { "converged" } else { "not converged" };
    writeln!(stdout, "status      {status} after {} iterations", out.iterations)?;
    writeln!(stdout, "{:<12} {:>10} {:>14}", "node", "beta", "throughput")?;
    for (i, node) in scenario.nodes.iter().enumerate() {
        writeln!(stdout, "{:<12} {:>10.6} {:>14.6}", node.id, out.policy.betas[i], out.throughputs[i])?;
    }
    if let Some(path) = &a.out {
        let mut t = ResultTable::new([
            "iteration",
            "node",
            "previous_beta",
            "beta",
            "previous_value",
            "response_value",
            "throughput",
        ]);
        for r in &out.trace {
            t.push(vec![
                (r.iteration as f64).into(),
                r.id.as_str().into(),
                r.previous_beta.into(),
                r.beta.into(),
                r.previous_value.into(),
                r.response_value.into(),
                r.throughput.into(),
            ]);
        }
        write_table(&t, path)?;
    }
    Ok(())
}
