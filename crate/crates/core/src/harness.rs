//! Seeded experiment sweeps and the three-node counterexample report.
//!
//! Config files are flat `key = value` lines; repeated keys extend a list
//! and integer values accept inclusive ranges `a..b`. Blank lines and `#`
//! comments are ignored.
//!
//! ```text
//! family = complete
//! family = er
//! n = 5..10
//! l = 3
//! seed = 1..5
//! algorithm = all
//! oracle_cap = 10000000
//! er_p = 0.5
//! ```

use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cip::{cip_solve, dissipation_scores, CipMode, CipOptions};
use crate::erip::erip_interdict;
use crate::error::{Error, Result};
use crate::graph::{StochasticMatrix, ValueMode, WeightedGraph};
use crate::instances::{alternating_x0, generate, metropolis, random_weights, Family};
use crate::oracle::{brute_cip, DEFAULT_CAP};
use crate::spectral::consensus_objective;

pub const CSV_HEADER: &str = "family,n,l,seed,algorithm,objective,iterations,wall_ms";

pub const DEFAULT_ER_P: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Optimal,
    Adaptive,
    PotentialIter,
    PotentialOneshot,
    EripApprox,
    /// Marks a failed instance or algorithm run.
    #[serde(rename = "ERROR")]
    Error,
}

impl Algorithm {
    /// What `algorithm = all` expands to.
    pub const CIP: [Algorithm; 4] = [
        Algorithm::Optimal,
        Algorithm::Adaptive,
        Algorithm::PotentialIter,
        Algorithm::PotentialOneshot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Optimal => "optimal",
            Algorithm::Adaptive => "adaptive",
            Algorithm::PotentialIter => "potential_iter",
            Algorithm::PotentialOneshot => "potential_oneshot",
            Algorithm::EripApprox => "erip_approx",
            Algorithm::Error => "ERROR",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::CIP
            .into_iter()
            .chain([Algorithm::EripApprox])
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub family: Family,
    pub n: usize,
    pub l: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub objective: f64,
    pub iterations: usize,
    pub wall_ms: u64,
}

impl ExperimentRecord {
    fn sort_key(&self) -> (&'static str, usize, usize, u64, &'static str) {
        (self.family.as_str(), self.n, self.l, self.seed, self.algorithm.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub oracle_cap: u128,
    pub er_p: f64,
    pub max_iter: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            families: Vec::new(),
            sizes: Vec::new(),
            budgets: Vec::new(),
            seeds: Vec::new(),
            algorithms: Algorithm::CIP.to_vec(),
            oracle_cap: DEFAULT_CAP,
            er_p: DEFAULT_ER_P,
            max_iter: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad value {v:?} for {key}")))
}

fn parse_range<T>(key: &str, v: &str) -> Result<Vec<T>>
where
    T: FromStr + Copy + TryFrom<u64> + Into<u64>,
{
    match v.split_once("..") {
        Some((a, b)) => {
            let (a, b): (T, T) = (parse_num(key, a.trim())?, parse_num(key, b.trim())?);
            let (a, b): (u64, u64) = (a.into(), b.into());
            if a > b {
                return Err(Error::Parse(format!("empty range {v:?} for {key}")));
            }
            Ok((a..=b).filter_map(|x| T::try_from(x).ok()).collect())
        }
        None => Ok(vec![parse_num(key, v)?]),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            algorithms: Vec::new(),
            ..Self::default()
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "family" => cfg.families.push(value.parse()?),
                "n" => cfg.sizes.extend(parse_range::<u64>(key, value)?.into_iter().map(|x| x as usize)),
                "l" | "budget" => {
                    cfg.budgets.extend(parse_range::<u64>(key, value)?.into_iter().map(|x| x as usize))
                }
                "seed" => cfg.seeds.extend(parse_range::<u64>(key, value)?),
                "algorithm" if value == "all" => cfg.algorithms.extend(Algorithm::CIP),
                "algorithm" => cfg.algorithms.push(value.parse()?),
                "oracle_cap" => cfg.oracle_cap = parse_num(key, value)?,
                "er_p" => cfg.er_p = parse_num(key, value)?,
                "max_iter" => cfg.max_iter = Some(parse_num(key, value)?),
                other => return Err(Error::Parse(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        if cfg.algorithms.is_empty() {
            cfg.algorithms = Algorithm::CIP.to_vec();
        }
        cfg.algorithms.sort_by_key(|a| a.as_str());
        cfg.algorithms.dedup();
        for (name, empty) in [
            ("family", cfg.families.is_empty()),
            ("n", cfg.sizes.is_empty()),
            ("l", cfg.budgets.is_empty()),
            ("seed", cfg.seeds.is_empty()),
        ] {
            if empty {
                return Err(Error::Parse(format!("missing key {name}")));
            }
        }
        Ok(cfg)
    }

    pub fn instances(&self) -> Vec<InstanceSpec> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &n in &self.sizes {
                for &l in &self.budgets {
                    for &seed in &self.seeds {
                        out.push(InstanceSpec { family, n, l, seed });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub l: usize,
    pub seed: u64,
}

/// A generated consensus instance: weighted topology, its Metropolis
/// matrix and the alternating initial vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: WeightedGraph,
    pub p: StochasticMatrix,
    pub x0: Vec<f64>,
}

/// Topology, weights and Metropolis matrix from one seeded stream.
/// Erdős–Rényi draws are resampled until `(l+1)`-edge-connected.
pub fn build_instance(spec: InstanceSpec, er_p: f64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let topology = generate(spec.family, spec.n, er_p, spec.l + 1, &mut rng)?;
    let graph = random_weights(&topology, &mut rng);
    let p = metropolis(&graph)?;
    Ok(Instance {
        graph,
        p,
        x0: alternating_x0(spec.n),
    })
}

/// Result of one algorithm on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub objective: f64,
    pub iterations: usize,
}

pub fn run_algorithm(
    inst: &Instance,
    budget: usize,
    algorithm: Algorithm,
    oracle_cap: u128,
    max_iter: Option<usize>,
) -> Result<RunOutcome> {
    let mode = match algorithm {
        Algorithm::Optimal => {
            let r = brute_cip(&inst.p, &inst.x0, budget, oracle_cap)?;
            return Ok(RunOutcome {
                objective: r.best_value,
                iterations: 0,
            });
        }
        Algorithm::EripApprox => {
            let resist = WeightedGraph::new(
                inst.p.n(),
                ValueMode::Conductance,
                inst.p.edges().iter().map(|&(i, j)| (i, j, inst.p.get(i, j))),
                inst.graph.source(),
                inst.graph.sink(),
            )?;
            let sol = erip_interdict(&resist, budget)?;
            return Ok(RunOutcome {
                objective: consensus_objective(&inst.p.interdict(&sol.cut)?, &inst.x0)?,
                iterations: 0,
            });
        }
        Algorithm::Adaptive => CipMode::Adaptive,
        Algorithm::PotentialIter => CipMode::PotentialIter,
        Algorithm::PotentialOneshot => CipMode::PotentialOneshot,
        Algorithm::Error => return Err(Error::InvalidInput("not a runnable algorithm".into())),
    };
    let opts = CipOptions {
        max_iter,
        ..CipOptions::mode(mode)
    };
    let sol = cip_solve(&inst.p, &inst.x0, budget, &opts)?;
    Ok(RunOutcome {
        objective: sol.objective,
        iterations: sol.iterations,
    })
}

fn error_record(spec: InstanceSpec) -> ExperimentRecord {
    ExperimentRecord {
        family: spec.family,
        n: spec.n,
        l: spec.l,
        seed: spec.seed,
        algorithm: Algorithm::Error,
        objective: f64::NAN,
        iterations: 0,
        wall_ms: 0,
    }
}

fn run_instance(cfg: &ExperimentConfig, spec: InstanceSpec) -> Vec<ExperimentRecord> {
    let Ok(inst) = build_instance(spec, cfg.er_p) else {
        return vec![error_record(spec)];
    };
    cfg.algorithms
        .iter()
        .map(|&alg| {
            let start = Instant::now();
            match run_algorithm(&inst, spec.l, alg, cfg.oracle_cap, cfg.max_iter) {
                Ok(out) => ExperimentRecord {
                    family: spec.family,
                    n: spec.n,
                    l: spec.l,
                    seed: spec.seed,
                    algorithm: alg,
                    objective: out.objective,
                    iterations: out.iterations,
                    wall_ms: start.elapsed().as_millis() as u64,
                },
                Err(_) => error_record(spec),
            }
        })
        .collect()
}

/// Runs every instance on the worker pool. Rows come back in canonical
/// order; failures appear as `ERROR` rows with a NaN objective.
pub fn run_experiment(cfg: &ExperimentConfig) -> Vec<ExperimentRecord> {
    let mut rows: Vec<ExperimentRecord> = cfg
        .instances()
        .into_par_iter()
        .flat_map_iter(|spec| run_instance(cfg, spec))
        .collect();
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    rows
}

pub fn write_csv<W: Write>(rows: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_csv(text: &str) -> Result<Vec<ExperimentRecord>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

/// The three-node network where breaking the highest-dissipation edge is
/// not optimal.
pub fn triangle() -> StochasticMatrix {
    StochasticMatrix::from_rows(&[
        vec![17.0 / 30.0, 1.0 / 3.0, 1.0 / 10.0],
        vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        vec![1.0 / 10.0, 1.0 / 3.0, 17.0 / 30.0],
    ])
    .expect("triangle matrix is stochastic")
}

pub const TRIANGLE_X0: [f64; 3] = [1.0, 0.0, -1.0];

const REPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub text: String,
    pub passed: bool,
    /// Objective after breaking `{1,2}` (0-based), the optimum.
    pub optimal_value: f64,
    /// Objective after breaking `{0,2}`, the dissipation choice.
    pub dissipation_value: f64,
}

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name}:");
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:>10.6}", m[(i, j)])).collect();
        let _ = writeln!(out, "  [{}]", row.join(" "));
    }
}

fn check(out: &mut String, ok: &mut bool, label: &str, pass: bool) {
    let _ = writeln!(out, "[{}] {label}", if pass { "PASS" } else { "FAIL" });
    *ok &= pass;
}

/// Recomputes the counterexample and checks every value exactly. With
/// `transposed` the two interdictions are swapped before checking, which
/// must fail.
pub fn counterexample(kernel: f64, transposed: bool) -> Result<CounterexampleReport> {
    let p = triangle();
    let x0 = TRIANGLE_X0;
    let mut out = String::new();
    let mut ok = true;
    let _ = writeln!(out, "node ids are 0-based; x0 = {x0:?}, kernel = {kernel}");
    write_matrix(&mut out, "P", p.entries());
    let scores = dissipation_scores(&p, &x0);
    for (&(i, j), s) in p.edges().iter().zip(&scores) {
        let _ = writeln!(out, "dissipation p_{i}{j} (x_{i} - x_{j})^2 = {:.6}", s / 2.0);
    }

    let (mut far, mut mid) = ((0, 2), (1, 2));
    if transposed {
        std::mem::swap(&mut far, &mut mid);
    }
    let broken_mid = p.interdict_pairs(&[mid])?;
    let broken_far = p.interdict_pairs(&[far])?;
    write_matrix(&mut out, &format!("(P minus {mid:?})^2"), &(broken_mid.entries() * broken_mid.entries()));
    write_matrix(&mut out, &format!("(P minus {far:?})^2"), &(broken_far.entries() * broken_far.entries()));
    let optimal_value = kernel * consensus_objective(&broken_mid, &x0)?;
    let dissipation_value = kernel * consensus_objective(&broken_far, &x0)?;
    let _ = writeln!(out, "objective breaking {mid:?} = {optimal_value:.12} (kernel * 400/71 = {:.12})", kernel * 400.0 / 71.0);
    let _ = writeln!(out, "objective breaking {far:?} = {dissipation_value:.12} (kernel * 18/5 = {:.12})", kernel * 18.0 / 5.0);

    let expected = [1.0 / 3.0, 2.0 / 5.0, 1.0 / 3.0];
    check(
        &mut out,
        &mut ok,
        "dissipations are 1/3, 2/5, 1/3",
        scores.iter().zip(expected).all(|(s, e)| (s / 2.0 - e).abs() < REPORT_TOL),
    );
    check(
        &mut out,
        &mut ok,
        "breaking (1, 2) gives 400/71",
        (optimal_value - kernel * 400.0 / 71.0).abs() < REPORT_TOL * kernel.abs().max(1.0),
    );
    check(
        &mut out,
        &mut ok,
        "breaking (0, 2) gives 18/5",
        (dissipation_value - kernel * 18.0 / 5.0).abs() < REPORT_TOL * kernel.abs().max(1.0),
    );
    check(&mut out, &mut ok, "400/71 > 18/5", optimal_value > dissipation_value);

    let oneshot = cip_solve(&p, &x0, 1, &CipOptions::mode(CipMode::PotentialOneshot))?;
    let oneshot_pairs: Vec<_> = oneshot.cut.ids().map(|id| p.edges()[id]).collect();
    let _ = writeln!(out, "potential one-shot breaks {oneshot_pairs:?}");
    check(&mut out, &mut ok, "potential one-shot breaks (0, 2)", oneshot_pairs == [(0, 2)]);

    let brute = brute_cip(&p, &x0, 1, DEFAULT_CAP)?;
    let optimal_pairs: Vec<Vec<(usize, usize)>> = brute
        .optimal_cuts
        .iter()
        .map(|c| c.ids().map(|id| p.edges()[id]).collect())
        .collect();
    let _ = writeln!(out, "brute-force optimal cuts {optimal_pairs:?}");
    check(
        &mut out,
        &mut ok,
        "brute force includes breaking (1, 2)",
        optimal_pairs.contains(&vec![(1, 2)])
            && (kernel * brute.best_value - optimal_value).abs() < REPORT_TOL * kernel.abs().max(1.0),
    );
    let _ = writeln!(out, "{}", if ok { "PASS" } else { "FAIL" });
    Ok(CounterexampleReport {
        text: out,
        passed: ok,
        optimal_value,
        dissipation_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_ranges_and_lists() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nfamily = complete\nfamily = er\nn = 5..7\nl = 3\nseed = 1..2\nalgorithm = all\noracle_cap = 99\n",
        )
        .unwrap();
        assert_eq!(cfg.families, vec![Family::Complete, Family::Er]);
        assert_eq!(cfg.sizes, vec![5, 6, 7]);
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.algorithms.len(), 4);
        assert_eq!(cfg.oracle_cap, 99);
        assert_eq!(cfg.instances().len(), 2 * 3 * 2);
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentConfig::parse("family = complete\nn = 5\nl = 1\n").is_err());
        assert!(ExperimentConfig::parse("family = torus\nn = 5\nl = 1\nseed = 1\n").is_err());
        assert!(ExperimentConfig::parse("family complete\n").is_err());
        assert!(ExperimentConfig::parse("family = complete\nn = 7..5\nl = 1\nseed = 1\n").is_err());
    }

    #[test]
    fn infeasible_budget_gives_error_row() {
        let cfg = ExperimentConfig::parse("family = bipartite\nn = 4\nl = 3\nseed = 1\n").unwrap();
        let rows = run_experiment(&cfg);
        assert!(rows.iter().all(|r| r.algorithm == Algorithm::Error && r.objective.is_nan()));
    }

    #[test]
    fn instance_is_deterministic() {
        let spec = InstanceSpec {
            family: Family::Er,
            n: 9,
            l: 2,
            seed: 4,
        };
        assert_eq!(build_instance(spec, 0.5).unwrap(), build_instance(spec, 0.5).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let cfg = ExperimentConfig::parse("family = complete\nn = 5\nl = 1\nseed = 3\n").unwrap();
        let rows = run_experiment(&cfg);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(read_csv(&text).unwrap(), rows);
    }

    #[test]
    fn counterexample_passes_and_detects_swap() {
        let r = counterexample(1.0, false).unwrap();
        assert!(r.passed, "{}", r.text);
        assert!(!counterexample(1.0, true).unwrap().passed);
        let doubled = counterexample(2.0, false).unwrap();
        assert!(doubled.passed, "{}", doubled.text);
        assert!((doubled.optimal_value - 2.0 * r.optimal_value).abs() < 1e-12);
    }
}
