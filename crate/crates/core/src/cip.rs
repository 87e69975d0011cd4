//! Consensus interdiction as a min-min quadratic program.
//!
//! With `y ∈ [0,1]^m` the complement characteristic vector of a cut,
//! `P(y)` the interdicted matrix and `L(y) = I - P(y)²`, the problem is
//!
//! ```text
//! min  f(u, y) = u'(L(y) + J/n)u   s.t.  u'x0 = 1,  y'1 >= m - ℓ,  y ∈ [0,1]^m
//! ```
//!
//! `f` is convex in `u` (closed-form minimizer [`optimal_u`]) and concave in
//! `y`. [`cip_solve`] alternates the exact `u` step with a linearized `y`
//! step that zeroes the ℓ coordinates of largest gradient.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_connected, EdgeCut, StochasticMatrix};
use crate::mincut::edge_connectivity;
use crate::spectral::{consensus_objective, solve_shifted};

/// `[P(y)]_ij = p_ij y_ij` off the diagonal, rows completed to one on it.
pub fn p_of_y(p: &StochasticMatrix, y: &[f64]) -> Result<DMatrix<f64>> {
    check_len(p.m(), y.len())?;
    let n = p.n();
    let mut q = DMatrix::zeros(n, n);
    for (e, &(i, j)) in p.edges().iter().enumerate() {
        let w = p.get(i, j) * y[e];
        q[(i, j)] = w;
        q[(j, i)] = w;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&k| k != i).map(|k| q[(i, k)]).sum();
        q[(i, i)] = 1.0 - off;
    }
    Ok(q)
}

/// `L(y) = I - P(y)²`.
pub fn laplacian_of_y(p: &StochasticMatrix, y: &[f64]) -> Result<DMatrix<f64>> {
    let q = p_of_y(p, y)?;
    let n = p.n();
    Ok(DMatrix::identity(n, n) - &q * &q)
}

/// `f(u, y) = u'(L(y) + J/n)u`.
pub fn f_value(p: &StochasticMatrix, y: &[f64], u: &[f64]) -> Result<f64> {
    check_len(p.n(), u.len())?;
    let q = p_of_y(p, y)?;
    let u = DVector::from_column_slice(u);
    let qu = &q * &u;
    let total = u.sum();
    Ok(u.norm_squared() - qu.norm_squared() + total * total / p.n() as f64)
}

/// Minimizer of `f(·, y)` on the hyperplane `u'x0 = 1`:
/// `(L(y)+J/n)⁻¹x0 / x0'(L(y)+J/n)⁻¹x0`.
pub fn optimal_u(p: &StochasticMatrix, y: &[f64], x0: &[f64]) -> Result<DVector<f64>> {
    check_len(p.n(), x0.len())?;
    let (z, denom) = potential_solve(p, y, x0)?;
    Ok(z / denom)
}

/// Returns `z = (L(y)+J/n)⁻¹x0` and `x0'z`.
fn potential_solve(p: &StochasticMatrix, y: &[f64], x0: &[f64]) -> Result<(DVector<f64>, f64)> {
    if x0.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("initial vector is zero".into()));
    }
    let l = laplacian_of_y(p, y)?;
    let b = DVector::from_column_slice(x0);
    let z = solve_shifted(&l, &b)?;
    let denom = b.dot(&z);
    Ok((z, denom))
}

/// Exact gradient of `f(u, ·)`.
///
/// Since `∂P(y)/∂y_ij = p_ij (E_ij + E_ji - E_ii - E_jj)`, the derivative of
/// `-‖P(y)u‖²` collapses to `2 p_ij (u_i - u_j) ([P(y)u]_i - [P(y)u]_j)`.
pub fn gradient_y(p: &StochasticMatrix, y: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    check_len(p.n(), u.len())?;
    let q = p_of_y(p, y)?;
    let u = DVector::from_column_slice(u);
    let qu = &q * &u;
    Ok(p.edges()
        .iter()
        .map(|&(i, j)| 2.0 * p.get(i, j) * (u[i] - u[j]) * (qu[i] - qu[j]))
        .collect())
}

/// Gradient at `y = 0`, i.e. twice the power dissipation `p_ij (u_i - u_j)²`.
pub fn dissipation_scores(p: &StochasticMatrix, u: &[f64]) -> Vec<f64> {
    p.edges()
        .iter()
        .map(|&(i, j)| 2.0 * p.get(i, j) * (u[i] - u[j]).powi(2))
        .collect()
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CipMode {
    /// Gradient at the current network variable.
    Adaptive,
    /// Power-dissipation surrogate (gradient at `y = 0`) inside the loop.
    PotentialIter,
    /// A single power-dissipation break decision from `y0`.
    PotentialOneshot,
}

impl CipMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CipMode::Adaptive => "adaptive",
            CipMode::PotentialIter => "potential_iter",
            CipMode::PotentialOneshot => "potential_oneshot",
        }
    }
}

impl std::str::FromStr for CipMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(CipMode::Adaptive),
            "potential_iter" | "potential" => Ok(CipMode::PotentialIter),
            "potential_oneshot" => Ok(CipMode::PotentialOneshot),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

/// How the network step chooses which coordinates to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroRule {
    /// Always zero exactly ℓ coordinates, the ℓ largest scores.
    #[default]
    TopL,
    /// Zero at most ℓ coordinates, only those with positive score. This is
    /// the exact minimizer of the linearization over the relaxed feasible set.
    PositiveOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CipOptions {
    pub mode: CipMode,
    /// Binary starting vector; all-ones (nothing broken) when `None`.
    pub y0: Option<Vec<f64>>,
    pub max_iter: Option<usize>,
    pub zero_rule: ZeroRule,
}

impl Default for CipOptions {
    fn default() -> Self {
        Self {
            mode: CipMode::Adaptive,
            y0: None,
            max_iter: None,
            zero_rule: ZeroRule::TopL,
        }
    }
}

impl CipOptions {
    pub fn mode(mode: CipMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CipStep {
    pub iteration: usize,
    /// Removed edge ids of `y^τ`.
    pub removed: Vec<usize>,
    /// `f(u^τ, y^τ)` with `u^τ` optimal for `y^τ`.
    pub f_value: f64,
    /// Consensus objective of the interdicted matrix, `1/f - (1'x0)²/n`.
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Fixpoint,
    OneShot,
    /// A network variable repeated without being a fixpoint.
    Cycle,
    MaxIterExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CipSolution {
    pub cut: EdgeCut,
    pub objective: f64,
    pub trace: Vec<CipStep>,
    /// Number of network updates performed.
    pub iterations: usize,
    pub stationary: bool,
    pub termination: Termination,
    pub u: DVector<f64>,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

pub fn default_max_iter(m: usize, budget: usize) -> usize {
    binomial(m, budget).saturating_mul(10).min(1_000_000) as usize
}

/// Checks the budget against the edge connectivity of `p`'s pattern.
pub fn check_budget(p: &StochasticMatrix, budget: usize) -> Result<()> {
    let connectivity = edge_connectivity(p.n(), p.edges());
    if budget >= connectivity {
        return Err(Error::BudgetTooLarge {
            budget,
            connectivity,
        });
    }
    Ok(())
}

/// Picks up to `budget` edges in descending score order (ties by id),
/// skipping any edge whose removal would disconnect the pattern.
fn select_cut(
    p: &StochasticMatrix,
    scores: &[f64],
    budget: usize,
    rule: ZeroRule,
) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut removed = vec![false; scores.len()];
    let mut picked = 0;
    for e in order {
        if picked == budget {
            break;
        }
        if rule == ZeroRule::PositiveOnly && scores[e] <= 0.0 {
            break;
        }
        removed[e] = true;
        let rest = p
            .edges()
            .iter()
            .enumerate()
            .filter(|(id, _)| !removed[*id])
            .map(|(_, pair)| *pair);
        if is_connected(p.n(), rest) {
            picked += 1;
        } else {
            removed[e] = false;
        }
    }
    removed.iter().map(|r| if *r { 0.0 } else { 1.0 }).collect()
}

/// Seeded binary starting vector with exactly `budget` zeros (fewer if
/// every remaining edge is a bridge) that keeps the pattern connected.
pub fn random_y0<R: rand::Rng>(p: &StochasticMatrix, budget: usize, rng: &mut R) -> Vec<f64> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..p.m()).collect();
    order.shuffle(rng);
    let mut scores = vec![0.0; p.m()];
    for (rank, e) in order.into_iter().enumerate() {
        scores[e] = -(rank as f64);
    }
    select_cut(p, &scores, budget, ZeroRule::TopL)
}

fn validate_y0(y0: &[f64], m: usize, budget: usize) -> Result<()> {
    check_len(m, y0.len())?;
    if y0.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::InvalidInput("initial network vector must be binary".into()));
    }
    let zeros = y0.iter().filter(|v| **v == 0.0).count();
    if zeros > budget {
        return Err(Error::InvalidInput(format!(
            "initial network vector breaks {zeros} edges, budget is {budget}"
        )));
    }
    Ok(())
}

/// Alternating solver for the consensus interdiction problem.
pub fn cip_solve(
    p: &StochasticMatrix,
    x0: &[f64],
    budget: usize,
    opts: &CipOptions,
) -> Result<CipSolution> {
    let (n, m) = (p.n(), p.m());
    check_len(n, x0.len())?;
    check_budget(p, budget)?;
    let mut y = match &opts.y0 {
        Some(y0) => {
            validate_y0(y0, m, budget)?;
            y0.clone()
        }
        None => vec![1.0; m],
    };
    let max_iter = opts.max_iter.unwrap_or_else(|| default_max_iter(m, budget));
    let mass = x0.iter().sum::<f64>();
    let offset = mass * mass / n as f64;

    let mut trace = Vec::new();
    let mut seen = HashSet::new();
    let mut iterations = 0;
    let record = |y: &[f64], iteration: usize, trace: &mut Vec<CipStep>| -> Result<DVector<f64>> {
        let (z, denom) = potential_solve(p, y, x0)?;
        trace.push(CipStep {
            iteration,
            removed: EdgeCut::from_y(y).to_vec(),
            f_value: 1.0 / denom,
            objective: denom - offset,
        });
        Ok(z / denom)
    };

    let mut u = record(&y, 0, &mut trace)?;
    seen.insert(EdgeCut::from_y(&y));
    let termination = loop {
        let scores = match opts.mode {
            CipMode::Adaptive => gradient_y(p, &y, u.as_slice())?,
            CipMode::PotentialIter | CipMode::PotentialOneshot => {
                dissipation_scores(p, u.as_slice())
            }
        };
        let next = select_cut(p, &scores, budget, opts.zero_rule);
        iterations += 1;
        if next == y {
            break Termination::Fixpoint;
        }
        y = next;
        u = record(&y, iterations, &mut trace)?;
        if opts.mode == CipMode::PotentialOneshot {
            break Termination::OneShot;
        }
        if !seen.insert(EdgeCut::from_y(&y)) {
            break Termination::Cycle;
        }
        if iterations >= max_iter {
            break Termination::MaxIterExceeded;
        }
    };

    // Without a fixpoint fall back to the best state visited.
    let chosen = match termination {
        Termination::Fixpoint | Termination::OneShot => trace.len() - 1,
        Termination::Cycle | Termination::MaxIterExceeded => trace
            .iter()
            .enumerate()
            .fold(0, |best, (i, s)| {
                if s.objective > trace[best].objective {
                    i
                } else {
                    best
                }
            }),
    };
    let cut = EdgeCut::new(m, trace[chosen].removed.iter().copied())?;
    let y_final = cut.y();
    let u_final = optimal_u(p, &y_final, x0)?;
    let objective = consensus_objective(&p.interdict(&cut)?, x0)?;
    let stationary = termination != Termination::MaxIterExceeded
        && stationarity_check(p, x0, u_final.as_slice(), &y_final, budget, opts.zero_rule)?
            .passed;
    Ok(CipSolution {
        cut,
        objective,
        trace,
        iterations,
        stationary,
        termination,
        u: u_final,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `u` is not the hyperplane minimizer; holds `u* - u`.
    UDirection(Vec<f64>),
    /// Swapping a kept edge for a zeroed one lowers the linearization.
    Swap { zeroed: usize, kept: usize, gain: f64 },
    /// Restoring a zeroed edge with negative gradient lowers it.
    Restore { edge: usize, gradient: f64 },
    /// Zeroing one more edge with positive gradient lowers it.
    Break { edge: usize, gradient: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub passed: bool,
    pub u_error: f64,
    pub gradient: Vec<f64>,
    pub witness: Option<Witness>,
}

pub const U_TOL: f64 = 1e-8;

/// Checks that `u` is optimal for `y` and that `y` minimizes the
/// linearization of `f(u, ·)` at `y` under the given zero rule.
pub fn stationarity_check(
    p: &StochasticMatrix,
    x0: &[f64],
    u: &[f64],
    y: &[f64],
    budget: usize,
    rule: ZeroRule,
) -> Result<StationarityReport> {
    let best_u = optimal_u(p, y, x0)?;
    let diff: Vec<f64> = best_u.iter().zip(u).map(|(a, b)| a - b).collect();
    let u_error = diff.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    let gradient = gradient_y(p, y, u)?;
    if u_error > U_TOL {
        return Ok(StationarityReport {
            passed: false,
            u_error,
            gradient,
            witness: Some(Witness::UDirection(diff)),
        });
    }
    let scale = gradient.iter().fold(1.0_f64, |acc, g| acc.max(g.abs()));
    let tol = 1e-9 * scale;
    let zeroed: Vec<usize> = (0..y.len()).filter(|&e| y[e] < 0.5).collect();
    let kept: Vec<usize> = (0..y.len()).filter(|&e| y[e] >= 0.5).collect();
    let weakest = zeroed
        .iter()
        .copied()
        .min_by(|&a, &b| gradient[a].total_cmp(&gradient[b]).then(a.cmp(&b)));
    let strongest = kept
        .iter()
        .copied()
        .max_by(|&a, &b| gradient[a].total_cmp(&gradient[b]).then(b.cmp(&a)));

    let mut witness = None;
    if let (Some(z), Some(k)) = (weakest, strongest) {
        if gradient[k] > gradient[z] + tol {
            witness = Some(Witness::Swap {
                zeroed: z,
                kept: k,
                gain: gradient[k] - gradient[z],
            });
        }
    }
    if witness.is_none() {
        let target = budget.min(y.len());
        match rule {
            ZeroRule::TopL => {
                if zeroed.len() < target {
                    if let Some(k) = strongest {
                        witness = Some(Witness::Break {
                            edge: k,
                            gradient: gradient[k],
                        });
                    }
                }
            }
            ZeroRule::PositiveOnly => {
                if let Some(z) = weakest.filter(|&z| gradient[z] < -tol) {
                    witness = Some(Witness::Restore {
                        edge: z,
                        gradient: gradient[z],
                    });
                } else if zeroed.len() < target {
                    if let Some(k) = strongest.filter(|&k| gradient[k] > tol) {
                        witness = Some(Witness::Break {
                            edge: k,
                            gradient: gradient[k],
                        });
                    }
                }
            }
        }
    }
    Ok(StationarityReport {
        passed: witness.is_none(),
        u_error,
        gradient,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn appendix_p() -> StochasticMatrix {
        StochasticMatrix::from_rows(&[
            vec![17.0 / 30.0, 1.0 / 3.0, 1.0 / 10.0],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![1.0 / 10.0, 1.0 / 3.0, 17.0 / 30.0],
        ])
        .unwrap()
    }

    const X0: [f64; 3] = [1.0, 0.0, -1.0];

    #[test]
    fn p_of_y_extremes() {
        let p = appendix_p();
        let full = p_of_y(&p, &[1.0; 3]).unwrap();
        assert!((full - p.entries()).abs().max() < 1e-15);
        let none = p_of_y(&p, &[0.0; 3]).unwrap();
        assert_eq!(none, DMatrix::identity(3, 3));
    }

    #[test]
    fn p_of_binary_y_matches_interdiction() {
        let p = appendix_p();
        let cut = EdgeCut::new(3, [2]).unwrap();
        let a = p_of_y(&p, &cut.y()).unwrap();
        let b = p.interdict(&cut).unwrap();
        assert!((a - b.entries()).abs().max() < 1e-15);
    }

    #[test]
    fn f_of_uniform_u() {
        let p = appendix_p();
        let u = [1.0 / 3.0; 3];
        for y in [[1.0, 1.0, 1.0], [0.2, 0.9, 0.0]] {
            assert!((f_value(&p, &y, &u).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn optimal_u_value_and_constraint() {
        let p = appendix_p();
        let y = [1.0, 1.0, 0.0];
        let u = optimal_u(&p, &y, &X0).unwrap();
        let dot: f64 = u.iter().zip(X0).map(|(a, b)| a * b).sum();
        assert!((dot - 1.0).abs() < 1e-12);
        let f = f_value(&p, &y, u.as_slice()).unwrap();
        assert!((f - 71.0 / 400.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_u_rejects_disconnected_pattern() {
        let p = StochasticMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let x0 = [1.0 / 2f64.sqrt(), 0.0, -1.0 / 2f64.sqrt()];
        assert_eq!(optimal_u(&p, &[], &x0), Err(Error::SingularSystem));
    }

    #[test]
    fn gradient_vanishes_on_constant_u() {
        let p = appendix_p();
        let g = gradient_y(&p, &[0.3, 1.0, 0.5], &[2.0; 3]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn gradient_at_zero_is_twice_dissipation() {
        let p = appendix_p();
        let u = [0.7, -0.1, 0.4];
        let g = gradient_y(&p, &[0.0; 3], &u).unwrap();
        for (e, &(i, j)) in p.edges().iter().enumerate() {
            let expected = 2.0 * p.get(i, j) * (u[i] - u[j]).powi(2);
            assert!((g[e] - expected).abs() < 1e-15);
        }
        for (a, b) in g.iter().zip(dissipation_scores(&p, &u)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn oneshot_potential_breaks_far_edge() {
        let p = appendix_p();
        let sol = cip_solve(&p, &X0, 1, &CipOptions::mode(CipMode::PotentialOneshot)).unwrap();
        assert_eq!(sol.cut.to_vec(), vec![p.edge_id(0, 2).unwrap()]);
        assert!((sol.objective - 18.0 / 5.0).abs() < 1e-12);
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.termination, Termination::OneShot);
    }

    #[test]
    fn adaptive_is_no_worse_than_potential_start() {
        let p = appendix_p();
        let sol = cip_solve(&p, &X0, 1, &CipOptions::default()).unwrap();
        assert!(sol.objective >= 18.0 / 5.0 - 1e-12);
        assert!(sol.stationary);
        assert_eq!(sol.termination, Termination::Fixpoint);
        for w in sol.trace.windows(2) {
            assert!(w[1].f_value < w[0].f_value);
        }
    }

    #[test]
    fn zero_budget_keeps_network() {
        let p = appendix_p();
        let sol = cip_solve(&p, &X0, 0, &CipOptions::default()).unwrap();
        assert!(sol.cut.is_empty());
        assert_eq!(sol.iterations, 1);
        let base = consensus_objective(&p, &X0).unwrap();
        assert!((sol.objective - base).abs() < 1e-12);
    }

    #[test]
    fn budget_guard() {
        let p = appendix_p();
        assert!(matches!(
            cip_solve(&p, &X0, 2, &CipOptions::default()),
            Err(Error::BudgetTooLarge { .. })
        ));
    }

    #[test]
    fn perturbed_u_fails_stationarity() {
        let p = appendix_p();
        let sol = cip_solve(&p, &X0, 1, &CipOptions::default()).unwrap();
        let y = sol.cut.y();
        let mut u: Vec<f64> = sol.u.iter().copied().collect();
        let ok = stationarity_check(&p, &X0, &u, &y, 1, ZeroRule::TopL).unwrap();
        assert!(ok.passed);
        u[1] += 1e-3;
        let bad = stationarity_check(&p, &X0, &u, &y, 1, ZeroRule::TopL).unwrap();
        assert!(!bad.passed);
        assert!(matches!(bad.witness, Some(Witness::UDirection(_))));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(66, 3), 45760);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(default_max_iter(3, 1), 30);
    }
}
