//! Effective resistance, the consensus objective and the oracles used to
//! cross-check them (dynamics simulation, flow energy).
//!
//! All solves go through the shifted Laplacian `L + J/n`, which is positive
//! definite exactly when the conductance pattern of `L` is connected. Since
//! `J(e_s - e_t) = 0` and `J x̃ = 0` for a centred vector, the shift does not
//! change the quadratic forms we read off.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{is_connected, laplacian, StochasticMatrix, WeightedGraph};

/// Solves `(L + J/n) z = b` by Cholesky factorization.
///
/// Returns [`Error::SingularSystem`] when the off-diagonal pattern of `L` is
/// disconnected.
pub fn solve_shifted(l: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: l.ncols(),
        });
    }
    if b.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    if !laplacian_connected(l) {
        return Err(Error::SingularSystem);
    }
    let shifted = l.add_scalar(1.0 / n as f64);
    let chol = shifted.cholesky().ok_or(Error::SingularSystem)?;
    Ok(chol.solve(b))
}

fn laplacian_connected(l: &DMatrix<f64>) -> bool {
    let n = l.nrows();
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    is_connected(n, pairs.filter(|&(i, j)| l[(i, j)] != 0.0))
}

/// Laplacian `D - C` of a symmetric conductance matrix; the diagonal of `c`
/// (self-loops) is ignored.
pub fn conductance_laplacian(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                l[(i, j)] = -c[(i, j)];
                l[(i, i)] += c[(i, j)];
            }
        }
    }
    l
}

fn unit_dipole(n: usize, s: usize, t: usize) -> DVector<f64> {
    let mut b = DVector::zeros(n);
    b[s] = 1.0;
    b[t] = -1.0;
    b
}

/// `(e_s - e_t)' L⁺ (e_s - e_t)` for a conductance matrix.
pub fn effective_resistance_matrix(c: &DMatrix<f64>, s: usize, t: usize) -> Result<f64> {
    let n = c.nrows();
    if s >= n || t >= n {
        return Err(Error::InvalidGraph(format!("terminals ({s}, {t}) out of range")));
    }
    if s == t {
        return Ok(0.0);
    }
    let l = conductance_laplacian(c);
    let z = solve_shifted(&l, &unit_dipole(n, s, t)).map_err(|e| match e {
        Error::SingularSystem => Error::Disconnected,
        other => other,
    })?;
    Ok(z[s] - z[t])
}

/// Effective resistance between `s` and `t` of a weighted graph.
///
/// Every node other than `s` and `t` is eliminated from the conductance
/// matrix (star-mesh transform), with each pivot taken as the sum of the
/// remaining conductances at that node. No subtraction occurs, so the result
/// stays accurate when resistances span many orders of magnitude, e.g. near
/// zero resistances next to unit ones. It equals
/// [`effective_resistance_matrix`] in exact arithmetic.
pub fn effective_resistance(g: &WeightedGraph, s: usize, t: usize) -> Result<f64> {
    let n = g.n();
    if s >= n || t >= n {
        return Err(Error::InvalidGraph(format!("terminals ({s}, {t}) out of range")));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if s == t {
        return Ok(0.0);
    }
    Ok(1.0 / schur_conductance(g.conductance_matrix(), s, t))
}

fn schur_conductance(mut c: DMatrix<f64>, s: usize, t: usize) -> f64 {
    let n = c.nrows();
    let mut alive: Vec<usize> = (0..n).collect();
    // cheapest nodes first keeps fill-in low
    let mut order: Vec<usize> = (0..n).filter(|&k| k != s && k != t).collect();
    order.sort_by_key(|&k| (0..n).filter(|&j| j != k && c[(k, j)] > 0.0).count());
    for k in order {
        alive.retain(|&v| v != k);
        let nbrs: Vec<usize> = alive.iter().copied().filter(|&j| c[(k, j)] > 0.0).collect();
        let pivot: f64 = nbrs.iter().map(|&j| c[(k, j)]).sum();
        for (a, &i) in nbrs.iter().enumerate() {
            for &j in &nbrs[a + 1..] {
                let add = c[(k, i)] * c[(k, j)] / pivot;
                c[(i, j)] += add;
                c[(j, i)] += add;
            }
        }
    }
    c[(s, t)]
}

/// Effective resistance between the graph's own terminals.
pub fn terminal_resistance(g: &WeightedGraph) -> Result<f64> {
    effective_resistance(g, g.source(), g.sink())
}

/// Aggregate squared deviation `Σ_t ‖x(t) - x̄‖²` of `x(t+1) = P x(t)`, in
/// closed form `x̃'(I - P² + J/n)⁻¹ x̃` with `x̃ = x0 - x̄`.
pub fn consensus_objective(p: &StochasticMatrix, x0: &[f64]) -> Result<f64> {
    let n = p.n();
    if x0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x0.len(),
        });
    }
    let centred = centre(x0);
    let l = laplacian(p, true);
    let z = solve_shifted(&l, &centred).map_err(|e| match e {
        Error::SingularSystem => Error::Disconnected,
        other => other,
    })?;
    Ok(centred.dot(&z))
}

/// [`consensus_objective`] weighted by a constant kernel `k(t) = kernel`.
pub fn consensus_objective_with_kernel(
    p: &StochasticMatrix,
    x0: &[f64],
    kernel: f64,
) -> Result<f64> {
    Ok(kernel * consensus_objective(p, x0)?)
}

fn centre(x0: &[f64]) -> DVector<f64> {
    let mean = x0.iter().sum::<f64>() / x0.len() as f64;
    DVector::from_iterator(x0.len(), x0.iter().map(|v| v - mean))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsSum {
    pub value: f64,
    /// Number of terms summed (t = 0 included).
    pub terms: usize,
    pub last_term: f64,
    /// Geometric tail estimate from the ratio of the last two terms; `None`
    /// when the ratio does not indicate contraction.
    pub truncation_bound: Option<f64>,
}

/// Sums `‖P^t x0 - x̄‖²` for `t = 0..=horizon`, stopping early once a term
/// drops below `tail_tol`.
pub fn simulate_dynamics(
    p: &StochasticMatrix,
    x0: &[f64],
    horizon: usize,
    tail_tol: f64,
) -> Result<DynamicsSum> {
    let n = p.n();
    if x0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x0.len(),
        });
    }
    // P fixes the consensus vector, so the deviation obeys the same recursion.
    let mut dev = centre(x0);
    let mut value = 0.0;
    let mut prev = f64::NAN;
    let mut last = 0.0;
    let mut terms = 0;
    for _ in 0..=horizon {
        let term = dev.norm_squared();
        value += term;
        terms += 1;
        prev = std::mem::replace(&mut last, term);
        if term < tail_tol {
            break;
        }
        dev = p.entries() * dev;
    }
    let truncation_bound = if terms >= 2 && prev > 0.0 {
        let ratio = last / prev;
        (ratio < 1.0).then(|| last * ratio / (1.0 - ratio))
    } else if last == 0.0 {
        Some(0.0)
    } else {
        None
    };
    Ok(DynamicsSum {
        value,
        terms,
        last_term: last,
        truncation_bound,
    })
}

/// Signed per-edge flow, oriented `i → j` for the stored pair `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    pub flows: Vec<f64>,
    pub strength: f64,
}

pub const FLOW_TOL: f64 = 1e-9;

impl FlowAssignment {
    /// Conservation everywhere except the terminals, and net out-flow
    /// `strength` at the source.
    pub fn check(&self, g: &WeightedGraph) -> Result<()> {
        if self.flows.len() != g.m() {
            return Err(Error::NotAFlow(format!(
                "{} flow values for {} edges",
                self.flows.len(),
                g.m()
            )));
        }
        let mut net = vec![0.0; g.n()];
        for (id, f) in self.flows.iter().enumerate() {
            let (i, j) = g.endpoints(id);
            net[i] += f;
            net[j] -= f;
        }
        for (v, out) in net.iter().enumerate() {
            let expected = if v == g.source() {
                self.strength
            } else if v == g.sink() {
                -self.strength
            } else {
                0.0
            };
            if (out - expected).abs() > FLOW_TOL {
                return Err(Error::NotAFlow(format!(
                    "node {v} has net out-flow {out}, expected {expected}"
                )));
            }
        }
        Ok(())
    }
}

/// Energy `Σ r_e f_e²` of a flow.
pub fn flow_energy(g: &WeightedGraph, f: &FlowAssignment) -> Result<f64> {
    f.check(g)?;
    Ok(f
        .flows
        .iter()
        .enumerate()
        .map(|(id, x)| g.resistance(id) * x * x)
        .sum())
}

/// Unit electrical flow from the graph's source to its sink, recovered from
/// the node potentials.
pub fn electrical_flow(g: &WeightedGraph) -> Result<FlowAssignment> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let l = conductance_laplacian(&g.conductance_matrix());
    let z = solve_shifted(&l, &unit_dipole(g.n(), g.source(), g.sink()))?;
    let flows = (0..g.m())
        .map(|id| {
            let (i, j) = g.endpoints(id);
            g.conductance(id) * (z[i] - z[j])
        })
        .collect();
    Ok(FlowAssignment {
        flows,
        strength: 1.0,
    })
}

/// Second smallest eigenvalue of a symmetric Laplacian. Diagnostic only.
pub fn algebraic_connectivity(l: &DMatrix<f64>) -> f64 {
    let mut ev: Vec<f64> = SymmetricEigen::new(l.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.get(1).copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ValueMode;

    fn appendix_p() -> StochasticMatrix {
        StochasticMatrix::from_rows(&[
            vec![17.0 / 30.0, 1.0 / 3.0, 1.0 / 10.0],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![1.0 / 10.0, 1.0 / 3.0, 17.0 / 30.0],
        ])
        .unwrap()
    }

    #[test]
    fn shifted_solve_of_ones() {
        let p = appendix_p();
        let l = laplacian(&p, false);
        let z = solve_shifted(&l, &DVector::from_element(3, 1.0)).unwrap();
        for v in z.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_solve_appendix_dipole() {
        let p = appendix_p().interdict_pairs(&[(0, 2)]).unwrap();
        let l = laplacian(&p, true);
        let z = solve_shifted(&l, &unit_dipole(3, 0, 2)).unwrap();
        assert!((z[0] - z[2] - 18.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_solve_rejects_disconnected() {
        let l = DMatrix::zeros(3, 3);
        assert_eq!(
            solve_shifted(&l, &DVector::zeros(3)),
            Err(Error::SingularSystem)
        );
    }

    #[test]
    fn elimination_matches_shifted_solve() {
        let g = WeightedGraph::new(
            5,
            ValueMode::Resistance,
            [(0, 1, 1.0), (1, 2, 2.0), (2, 4, 0.5), (0, 3, 3.0), (3, 4, 1.5), (1, 3, 4.0)],
            0,
            4,
        )
        .unwrap();
        for (s, t) in [(0, 4), (1, 3), (2, 0)] {
            let direct = effective_resistance_matrix(&g.conductance_matrix(), s, t).unwrap();
            let r = effective_resistance(&g, s, t).unwrap();
            assert!((r - direct).abs() < 1e-12, "{r} {direct}");
        }
    }

    #[test]
    fn stiff_series_chain() {
        // a tiny resistance in series with unit ones must not be swamped
        let g = WeightedGraph::new(4, ValueMode::Resistance, [(0, 1, 1e-12), (1, 2, 1.0), (2, 3, 1e-12)], 0, 3)
            .unwrap();
        assert!((terminal_resistance(&g).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn single_and_parallel_edges() {
        let g = WeightedGraph::new(2, ValueMode::Resistance, [(0, 1, 2.0)], 0, 1).unwrap();
        assert!((terminal_resistance(&g).unwrap() - 2.0).abs() < 1e-12);

        let g =
            WeightedGraph::new(2, ValueMode::Conductance, [(0, 1, 1.0 + 0.2)], 0, 1).unwrap();
        assert!((terminal_resistance(&g).unwrap() - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn appendix_squared_resistance() {
        let p = appendix_p().interdict_pairs(&[(1, 2)]).unwrap();
        let sq = p.entries() * p.entries();
        let r = effective_resistance_matrix(&sq, 0, 2).unwrap();
        assert!((r - 400.0 / 71.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn disconnected_resistance_errors() {
        let g = WeightedGraph::new(3, ValueMode::Resistance, [(0, 1, 1.0)], 0, 2).unwrap();
        assert_eq!(terminal_resistance(&g), Err(Error::Disconnected));
    }

    #[test]
    fn objective_of_consensus_vector_is_zero() {
        let p = appendix_p();
        assert!(consensus_objective(&p, &[2.5, 2.5, 2.5]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn objective_matches_appendix_value() {
        let p = appendix_p().interdict_pairs(&[(1, 2)]).unwrap();
        let j = consensus_objective(&p, &[1.0, 0.0, -1.0]).unwrap();
        assert!((j - 400.0 / 71.0).abs() < 1e-12);
        let k = consensus_objective_with_kernel(&p, &[1.0, 0.0, -1.0], 2.0).unwrap();
        assert!((k - 800.0 / 71.0).abs() < 1e-12);
    }

    #[test]
    fn simulation_converges_to_closed_form() {
        let p = appendix_p().interdict_pairs(&[(1, 2)]).unwrap();
        let sim = simulate_dynamics(&p, &[1.0, 0.0, -1.0], 100_000, 1e-16).unwrap();
        assert!((sim.value - 400.0 / 71.0).abs() < 1e-6);
        assert!(sim.truncation_bound.unwrap() < 1e-6);
    }

    #[test]
    fn simulation_edge_cases() {
        let p = appendix_p();
        let sim = simulate_dynamics(&p, &[1.0, 1.0, 1.0], 50, 1e-12).unwrap();
        assert_eq!(sim.value, 0.0);
        assert_eq!(sim.terms, 1);

        let avg = StochasticMatrix::from_rows(&vec![vec![0.25; 4]; 4]).unwrap();
        let x0 = [1.0, 2.0, 5.0, 0.0];
        let sim = simulate_dynamics(&avg, &x0, 10, 1e-20).unwrap();
        // deviations around the mean 2: 1 + 0 + 9 + 4
        assert!((sim.value - 14.0).abs() < 1e-12);
        assert_eq!(sim.terms, 2);
    }

    #[test]
    fn flow_energy_examples() {
        let g = WeightedGraph::new(2, ValueMode::Resistance, [(0, 1, 3.0)], 0, 1).unwrap();
        let f = FlowAssignment {
            flows: vec![1.0],
            strength: 1.0,
        };
        assert!((flow_energy(&g, &f).unwrap() - 3.0).abs() < 1e-15);

        // two unit resistors in parallel, realised through a middle node each
        let g = WeightedGraph::new(
            4,
            ValueMode::Resistance,
            [(0, 1, 0.5), (1, 3, 0.5), (0, 2, 0.5), (2, 3, 0.5)],
            0,
            3,
        )
        .unwrap();
        let f = FlowAssignment {
            flows: vec![0.5, 0.5, 0.5, 0.5],
            strength: 1.0,
        };
        assert!((flow_energy(&g, &f).unwrap() - 0.5).abs() < 1e-15);

        let bad = FlowAssignment {
            flows: vec![1.0, 0.0, 0.0, 0.0],
            strength: 1.0,
        };
        assert!(matches!(flow_energy(&g, &bad), Err(Error::NotAFlow(_))));
    }

    #[test]
    fn electrical_flow_attains_resistance() {
        let g = WeightedGraph::new(
            4,
            ValueMode::Resistance,
            [(0, 1, 1.0), (1, 3, 2.0), (0, 2, 3.0), (2, 3, 1.0), (1, 2, 0.5)],
            0,
            3,
        )
        .unwrap();
        let f = electrical_flow(&g).unwrap();
        let e = flow_energy(&g, &f).unwrap();
        assert!((e - terminal_resistance(&g).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn lambda2_of_complete_graph() {
        // L(K_n) has eigenvalues 0 and n
        let g = WeightedGraph::unweighted(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], 0, 1)
            .unwrap();
        let l = conductance_laplacian(&g.conductance_matrix());
        assert!((algebraic_connectivity(&l) - 4.0).abs() < 1e-12);
    }
}
