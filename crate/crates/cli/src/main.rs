//! `interdict`: effective-resistance and consensus interdiction from the
//! command line. Node ids are 0-based everywhere.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use interdict_core::cip::{cip_solve, random_y0, CipMode, CipOptions, CipStep, ZeroRule};
use interdict_core::erip::erip_interdict;
use interdict_core::harness::{counterexample, run_experiment, write_csv, ExperimentConfig};
use interdict_core::instances::{
    alternating_x0, build_gadget, generate, metropolis, random_weights, Family, GadgetMap, GadgetMode,
};
use interdict_core::io::{FileMode, GraphFile};
use interdict_core::oracle::{brute_cip, brute_erip, DEFAULT_CAP};
use interdict_core::spectral::effective_resistance;
use interdict_core::{EdgeCut, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "interdict", version, about = "Consensus and effective-resistance interdiction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Adaptive,
    PotentialIter,
    PotentialOneshot,
}

impl From<ModeArg> for CipMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Adaptive => CipMode::Adaptive,
            ModeArg::PotentialIter => CipMode::PotentialIter,
            ModeArg::PotentialOneshot => CipMode::PotentialOneshot,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetArg {
    Clique,
    DenseSubgraph,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenFormat {
    /// Metropolis stochastic matrix
    Stochastic,
    /// Integer-weighted conductance graph
    Weights,
}

#[derive(Subcommand)]
enum Command {
    /// Effective resistance between two nodes
    Reff {
        graph: PathBuf,
        /// Source node, defaults to the file's `s`
        #[arg(long)]
        s: Option<usize>,
        /// Sink node, defaults to the file's `t`
        #[arg(long)]
        t: Option<usize>,
    },
    /// Sorted-edge min-cut interdiction of effective resistance
    Erip {
        graph: PathBuf,
        #[arg(long)]
        budget: usize,
    },
    /// Consensus interdiction on a stochastic matrix
    Cip {
        graph: PathBuf,
        /// JSON array with the initial vector; alternating 0/1 when omitted
        x0: Option<PathBuf>,
        #[arg(long)]
        budget: usize,
        #[arg(long, value_enum, default_value = "adaptive")]
        mode: ModeArg,
        /// Zero only positive-gradient edges instead of always ℓ
        #[arg(long)]
        positive_only: bool,
        /// Start from a random feasible network drawn with this seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Constant kernel multiplying the objective
        #[arg(long, default_value_t = 1.0)]
        kernel: f64,
    },
    /// Exhaustive optimum; consensus for stochastic files, resistance otherwise
    Brute {
        graph: PathBuf,
        x0: Option<PathBuf>,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        oracle_cap: u128,
        #[arg(long, default_value_t = 1.0)]
        kernel: f64,
    },
    /// Generate a benchmark instance
    Gen {
        #[arg(value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random graphs are resampled until budget+1 edge-connected
        #[arg(long, default_value_t = 0)]
        budget: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_enum, default_value = "stochastic")]
        format: GenFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the bipartite reduction gadget of a base graph
    Gadget {
        graph: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, value_enum, default_value = "clique")]
        mode: GadgetArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep described by a config file and write CSV
    Experiment {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's oracle cap
        #[arg(long)]
        oracle_cap: Option<u128>,
    },
    /// Recompute the three-node counterexample and check it
    Counterexample {
        #[arg(long, default_value_t = 1.0)]
        kernel: f64,
        /// Swap the two interdictions before checking; must fail
        #[arg(long, hide = true)]
        transposed: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Complete,
    Bipartite,
    Ring4,
    Er,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Complete => Family::Complete,
            FamilyArg::Bipartite => Family::Bipartite,
            FamilyArg::Ring4 => Family::Ring4,
            FamilyArg::Er => Family::Er,
        }
    }
}

#[derive(Serialize)]
struct CutReport<T: Serialize> {
    cut: Vec<(usize, usize)>,
    objective: f64,
    iterations: usize,
    trace: Vec<T>,
    #[serde(flatten)]
    extra: serde_json::Value,
}

#[derive(Serialize)]
struct TraceStep {
    iteration: usize,
    removed: Vec<(usize, usize)>,
    f_value: f64,
    objective: f64,
}

/// A failure that maps to a specific exit code.
#[derive(Debug)]
struct CounterexampleFailed;

impl std::fmt::Display for CounterexampleFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("counterexample check failed")
    }
}

impl std::error::Error for CounterexampleFailed {}

fn read_graph(path: &Path) -> anyhow::Result<GraphFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(GraphFile::parse(&text)?)
}

fn read_x0(path: Option<&Path>, n: usize) -> anyhow::Result<Vec<f64>> {
    let Some(path) = path else {
        return Ok(alternating_x0(n));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let x0: Vec<f64> = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if x0.len() != n {
        return Err(Error::Dimension { expected: n, got: x0.len() }.into());
    }
    Ok(x0)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn pairs_of(cut: &EdgeCut, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    cut.ids().map(|id| edges[id]).collect()
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Reff { graph, s, t } => {
            let g = read_graph(&graph)?.to_graph()?;
            let (s, t) = (s.unwrap_or(g.source()), t.unwrap_or(g.sink()));
            if s >= g.n() || t >= g.n() {
                return Err(Error::InvalidInput(format!("terminals ({s}, {t}) out of range")).into());
            }
            println!("{:.12}", effective_resistance(&g, s, t)?);
        }
        Command::Erip { graph, budget } => {
            let g = read_graph(&graph)?.to_graph()?;
            let sol = erip_interdict(&g, budget)?;
            let report = CutReport {
                cut: pairs_of(&sol.cut, &g.pairs()),
                objective: sol.reff_after,
                iterations: sol.k_index,
                trace: sol.prefix_cut_sizes.clone(),
                extra: serde_json::json!({ "phi": sol.phi_after }),
            };
            emit(None, &to_json(&report)?)?;
        }
        Command::Cip {
            graph,
            x0,
            budget,
            mode,
            positive_only,
            seed,
            max_iter,
            kernel,
        } => {
            let p = read_graph(&graph)?.to_stochastic()?;
            let x0 = read_x0(x0.as_deref(), p.n())?;
            let y0 = seed.map(|s| random_y0(&p, budget, &mut ChaCha8Rng::seed_from_u64(s)));
            let opts = CipOptions {
                mode: mode.into(),
                y0,
                max_iter,
                zero_rule: if positive_only { ZeroRule::PositiveOnly } else { ZeroRule::TopL },
            };
            let sol = cip_solve(&p, &x0, budget, &opts)?;
            let step = |s: &CipStep| TraceStep {
                iteration: s.iteration,
                removed: s.removed.iter().map(|&id| p.edges()[id]).collect(),
                f_value: s.f_value,
                objective: kernel * s.objective,
            };
            let report = CutReport {
                cut: pairs_of(&sol.cut, p.edges()),
                objective: kernel * sol.objective,
                iterations: sol.iterations,
                trace: sol.trace.iter().map(step).collect(),
                extra: serde_json::json!({
                    "stationary": sol.stationary,
                    "termination": sol.termination,
                }),
            };
            emit(None, &to_json(&report)?)?;
        }
        Command::Brute {
            graph,
            x0,
            budget,
            oracle_cap,
            kernel,
        } => {
            let file = read_graph(&graph)?;
            let (r, edges) = if file.mode == FileMode::Stochastic {
                let p = file.to_stochastic()?;
                let x0 = read_x0(x0.as_deref(), p.n())?;
                (brute_cip(&p, &x0, budget, oracle_cap)?, p.edges().to_vec())
            } else {
                if x0.is_some() {
                    bail!(Error::InvalidInput("an initial vector needs a stochastic file".into()));
                }
                let g = file.to_graph()?;
                (brute_erip(&g, budget, oracle_cap)?, g.pairs())
            };
            let report = CutReport::<()> {
                cut: pairs_of(&r.best_cut, &edges),
                objective: kernel * r.best_value,
                iterations: r.evaluated,
                trace: Vec::new(),
                extra: serde_json::json!({
                    "optimal_cuts": r.optimal_cuts.iter().map(|c| pairs_of(c, &edges)).collect::<Vec<_>>(),
                    "runner_up": r.runner_up_value.map(|v| kernel * v),
                    "skipped": r.skipped,
                }),
            };
            emit(None, &to_json(&report)?)?;
        }
        Command::Gen {
            family,
            n,
            seed,
            budget,
            p,
            format,
            out,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let topology = generate(family.into(), n, p, budget + 1, &mut rng)?;
            let weighted = random_weights(&topology, &mut rng);
            let file = match format {
                GenFormat::Weights => GraphFile::from_graph(&weighted),
                GenFormat::Stochastic => {
                    GraphFile::from_stochastic(&metropolis(&weighted)?, weighted.source(), weighted.sink())
                }
            };
            emit(out.as_deref(), &file.to_json())?;
        }
        Command::Gadget {
            graph,
            a,
            delta,
            mode,
            out,
        } => {
            let base = read_graph(&graph)?.to_graph()?;
            let mode = match mode {
                GadgetArg::Clique => GadgetMode::Clique,
                GadgetArg::DenseSubgraph => GadgetMode::DenseSubgraph,
            };
            let gg = build_gadget(&base, a, delta, mode)?;
            #[derive(Serialize)]
            struct Output<'a> {
                graph: GraphFile,
                map: &'a GadgetMap,
            }
            let output = Output {
                graph: GraphFile::from_graph(&gg.gadget),
                map: &gg.map,
            };
            emit(out.as_deref(), &to_json(&output)?)?;
        }
        Command::Experiment { config, out, oracle_cap } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::parse(&text)?;
            if let Some(cap) = oracle_cap {
                cfg.oracle_cap = cap;
            }
            let rows = run_experiment(&cfg);
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            match out {
                Some(path) => fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?,
                None => io::stdout().lock().write_all(&buf)?,
            }
        }
        Command::Counterexample { kernel, transposed } => {
            let report = counterexample(kernel, transposed)?;
            print!("{}", report.text);
            if !report.passed {
                return Err(CounterexampleFailed.into());
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<CounterexampleFailed>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Disconnected | Error::SingularSystem) => 3,
        Some(Error::BudgetTooLarge { .. }) => 4,
        Some(
            Error::Parse(_)
            | Error::InvalidGraph(_)
            | Error::NotSquare { .. }
            | Error::NonFinite { .. }
            | Error::NotSymmetric { .. }
            | Error::NegativeEntry { .. }
            | Error::RowSumViolation { .. }
            | Error::Dimension { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
