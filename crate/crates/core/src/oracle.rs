//! Exhaustive optima over all cuts of at most ℓ edges.
//!
//! Cuts are enumerated by size, then lexicographically by edge ids. Values
//! are computed in parallel but collected in enumeration order, so the
//! reported optimum (the first cut that ties the maximum) does not depend on
//! the thread count.

use itertools::Itertools;
use rayon::prelude::*;

use crate::cip::{binomial, check_budget};
use crate::erip::phi_value;
use crate::error::{Error, Result};
use crate::graph::{EdgeCut, StochasticMatrix, WeightedGraph};
use crate::mincut::edge_connectivity;
use crate::spectral::{consensus_objective, effective_resistance};

pub const DEFAULT_CAP: u128 = 10_000_000;

const CHUNK: usize = 1 << 14;

/// Relative gap below which two cut values count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// First optimal cut in enumeration order.
    pub best_cut: EdgeCut,
    pub best_value: f64,
    /// Every cut whose value ties the optimum, in enumeration order.
    pub optimal_cuts: Vec<EdgeCut>,
    /// Feasible cuts evaluated.
    pub evaluated: usize,
    /// Cuts skipped because they disconnect the network.
    pub skipped: usize,
    /// Largest value strictly below the optimum; `None` if every feasible
    /// cut ties it.
    pub runner_up_value: Option<f64>,
}

/// Number of cuts with at most `budget` of `m` edges.
pub fn cut_count(m: usize, budget: usize) -> u128 {
    (0..=budget.min(m)).map(|k| binomial(m, k)).sum()
}

fn all_cuts(m: usize, budget: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..=budget.min(m)).flat_map(move |k| (0..m).combinations(k))
}

/// Maximizes `eval` over every cut of at most `budget` edges. `eval`
/// returns `None` for infeasible cuts.
pub fn maximize_over_cuts<F>(m: usize, budget: usize, cap: u128, eval: F) -> Result<OracleResult>
where
    F: Fn(&[usize]) -> Option<f64> + Sync,
{
    let total = cut_count(m, budget);
    if total > cap {
        return Err(Error::TooLarge { cuts: total, cap });
    }
    let mut values: Vec<Option<f64>> = Vec::with_capacity(total as usize);
    for chunk in &all_cuts(m, budget).chunks(CHUNK) {
        let cuts: Vec<Vec<usize>> = chunk.collect();
        values.par_extend(cuts.par_iter().map(|c| eval(c)));
    }
    let feasible = values.iter().flatten();
    let best_value = feasible
        .clone()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::Disconnected)?;
    let threshold = best_value - TIE_TOL * best_value.abs().max(1.0);
    let runner_up_value = feasible.clone().copied().filter(|v| *v < threshold).reduce(f64::max);
    let evaluated = feasible.count();
    let optimal_cuts = all_cuts(m, budget)
        .zip(&values)
        .filter(|(_, v)| v.is_some_and(|v| v >= threshold))
        .map(|(ids, _)| EdgeCut::new(m, ids))
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleResult {
        best_cut: optimal_cuts[0].clone(),
        best_value,
        optimal_cuts,
        evaluated,
        skipped: values.len() - evaluated,
        runner_up_value,
    })
}

fn check_graph_budget(g: &WeightedGraph, budget: usize) -> Result<()> {
    let connectivity = edge_connectivity(g.n(), &g.pairs());
    if budget >= connectivity {
        return Err(Error::BudgetTooLarge {
            budget,
            connectivity,
        });
    }
    Ok(())
}

/// Largest `s`–`t` effective resistance reachable by removing at most
/// `budget` edges.
pub fn brute_erip(g: &WeightedGraph, budget: usize, cap: u128) -> Result<OracleResult> {
    check_graph_budget(g, budget)?;
    let (s, t) = (g.source(), g.sink());
    maximize_over_cuts(g.m(), budget, cap, |ids| {
        let cut = EdgeCut::new(g.m(), ids.iter().copied()).ok()?;
        let rest = g.remove_edges(&cut).ok()?;
        effective_resistance(&rest, s, t).ok()
    })
}

/// Largest bottleneck value Φ reachable by removing at most `budget` edges.
pub fn brute_phi(g: &WeightedGraph, budget: usize, cap: u128) -> Result<OracleResult> {
    check_graph_budget(g, budget)?;
    let (s, t) = (g.source(), g.sink());
    maximize_over_cuts(g.m(), budget, cap, |ids| {
        let cut = EdgeCut::new(g.m(), ids.iter().copied()).ok()?;
        let rest = g.remove_edges(&cut).ok()?;
        phi_value(&rest, s, t).ok()
    })
}

/// Largest consensus objective reachable by removing at most `budget` edges.
pub fn brute_cip(p: &StochasticMatrix, x0: &[f64], budget: usize, cap: u128) -> Result<OracleResult> {
    if x0.len() != p.n() {
        return Err(Error::Dimension {
            expected: p.n(),
            got: x0.len(),
        });
    }
    check_budget(p, budget)?;
    maximize_over_cuts(p.m(), budget, cap, |ids| {
        let cut = EdgeCut::new(p.m(), ids.iter().copied()).ok()?;
        let q = p.interdict(&cut).ok()?;
        if !q.is_connected() {
            return None;
        }
        consensus_objective(&q, x0).ok()
    })
}
