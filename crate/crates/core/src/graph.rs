//! Graphs, symmetric stochastic matrices and the edge-removal operator.
//!
//! Edge ids are positions in the lexicographically sorted `(i, j)` list with
//! `i < j`. Every tie-break elsewhere in the crate refers to this order.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance accepted by [`validate_stochastic`].
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueMode {
    Resistance,
    Conductance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub value: f64,
}

/// Undirected simple graph with one positive value per edge and a
/// source/sink pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    mode: ValueMode,
    edges: Vec<Edge>,
    s: usize,
    t: usize,
}

impl WeightedGraph {
    /// Builds a graph, normalizing each pair to `i < j` and sorting edges
    /// into id order.
    pub fn new<I>(n: usize, mode: ValueMode, edges: I, s: usize, t: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if s >= n || t >= n {
            return Err(Error::InvalidGraph(format!(
                "terminals ({s}, {t}) out of range for {n} nodes"
            )));
        }
        if s == t {
            return Err(Error::InvalidGraph("source equals sink".into()));
        }
        let mut list = Vec::new();
        for (a, b, value) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has non-positive or non-finite value {value}"
                )));
            }
            list.push(Edge {
                u: a.min(b),
                v: a.max(b),
                value,
            });
        }
        list.sort_by(|x, y| (x.u, x.v).cmp(&(y.u, y.v)));
        for w in list.windows(2) {
            if (w[0].u, w[0].v) == (w[1].u, w[1].v) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    w[0].u, w[0].v
                )));
            }
        }
        Ok(Self {
            n,
            mode,
            edges: list,
            s,
            t,
        })
    }

    /// Unit-conductance graph on the given pairs.
    pub fn unweighted<I>(n: usize, pairs: I, s: usize, t: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::new(
            n,
            ValueMode::Conductance,
            pairs.into_iter().map(|(a, b)| (a, b, 1.0)),
            s,
            t,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn mode(&self) -> ValueMode {
        self.mode
    }

    pub fn source(&self) -> usize {
        self.s
    }

    pub fn sink(&self) -> usize {
        self.t
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn endpoints(&self, id: usize) -> (usize, usize) {
        let e = &self.edges[id];
        (e.u, e.v)
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.u, e.v)).collect()
    }

    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search_by(|e| (e.u, e.v).cmp(&key)).ok()
    }

    pub fn resistance(&self, id: usize) -> f64 {
        match self.mode {
            ValueMode::Resistance => self.edges[id].value,
            ValueMode::Conductance => 1.0 / self.edges[id].value,
        }
    }

    pub fn conductance(&self, id: usize) -> f64 {
        match self.mode {
            ValueMode::Resistance => 1.0 / self.edges[id].value,
            ValueMode::Conductance => self.edges[id].value,
        }
    }

    pub fn resistances(&self) -> Vec<f64> {
        (0..self.m()).map(|e| self.resistance(e)).collect()
    }

    /// Same graph with values re-expressed as resistances.
    pub fn to_resistance(&self) -> Self {
        let mut out = self.clone();
        for (id, e) in out.edges.iter_mut().enumerate() {
            e.value = self.resistance(id);
        }
        out.mode = ValueMode::Resistance;
        out
    }

    pub fn with_terminals(&self, s: usize, t: usize) -> Result<Self> {
        Self::new(
            self.n,
            self.mode,
            self.edges.iter().map(|e| (e.u, e.v, e.value)),
            s,
            t,
        )
    }

    /// Copy with the edges of `cut` deleted. Surviving edges keep their
    /// relative order, so ids are renumbered.
    pub fn remove_edges(&self, cut: &EdgeCut) -> Result<Self> {
        if cut.m() != self.m() {
            return Err(Error::Dimension {
                expected: self.m(),
                got: cut.m(),
            });
        }
        Ok(Self {
            n: self.n,
            mode: self.mode,
            edges: self
                .edges
                .iter()
                .enumerate()
                .filter(|(id, _)| !cut.contains(*id))
                .map(|(_, e)| *e)
                .collect(),
            s: self.s,
            t: self.t,
        })
    }

    /// Copy with one extra edge.
    pub fn with_edge(&self, i: usize, j: usize, value: f64) -> Result<Self> {
        Self::new(
            self.n,
            self.mode,
            self.edges
                .iter()
                .map(|e| (e.u, e.v, e.value))
                .chain(std::iter::once((i, j, value))),
            self.s,
            self.t,
        )
    }

    /// Symmetric conductance matrix with zero diagonal.
    pub fn conductance_matrix(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.n, self.n);
        for id in 0..self.m() {
            let (i, j) = self.endpoints(id);
            let g = self.conductance(id);
            c[(i, j)] = g;
            c[(j, i)] = g;
        }
        c
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self.n, self.edges.iter().map(|e| (e.u, e.v)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }
}

/// Disjoint-set forest with path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

pub fn is_connected<I>(n: usize, pairs: I) -> bool
where
    I: IntoIterator<Item = (usize, usize)>,
{
    if n == 0 {
        return true;
    }
    let mut uf = UnionFind::new(n);
    for (a, b) in pairs {
        uf.union(a, b);
    }
    uf.components() == 1
}

/// Set of removed edges together with the size of the edge set it refers to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeCut {
    m: usize,
    removed: BTreeSet<usize>,
}

impl EdgeCut {
    pub fn new<I: IntoIterator<Item = usize>>(m: usize, ids: I) -> Result<Self> {
        let mut removed = BTreeSet::new();
        for id in ids {
            if id >= m {
                return Err(Error::EdgeIdOutOfRange(id));
            }
            removed.insert(id);
        }
        Ok(Self { m, removed })
    }

    pub fn empty(m: usize) -> Self {
        Self {
            m,
            removed: BTreeSet::new(),
        }
    }

    /// Cut encoded by a complement characteristic vector; `y_e < 1/2` means
    /// removed.
    pub fn from_y(y: &[f64]) -> Self {
        Self {
            m: y.len(),
            removed: y
                .iter()
                .enumerate()
                .filter(|(_, v)| **v < 0.5)
                .map(|(e, _)| e)
                .collect(),
        }
    }

    pub fn y(&self) -> Vec<f64> {
        (0..self.m)
            .map(|e| if self.removed.contains(&e) { 0.0 } else { 1.0 })
            .collect()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.removed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.removed.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.removed.contains(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.removed.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.removed.iter().copied().collect()
    }
}

/// Symmetric row-stochastic conductance matrix. The positive off-diagonal
/// pattern is the edge set; diagonal entries are self-loops and never count
/// as edges.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
    edges: Vec<(usize, usize)>,
}

/// Checks symmetry (exact), non-negativity and unit row sums.
pub fn validate_stochastic(m: DMatrix<f64>) -> Result<StochasticMatrix> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let n = rows;
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if j > i && v != m[(j, i)] {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    for i in 0..n {
        let sum: f64 = m.row(i).iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::RowSumViolation { row: i, sum });
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if m[(i, j)] > 0.0 {
                edges.push((i, j));
            }
        }
    }
    Ok(StochasticMatrix { entries: m, edges })
}

impl StochasticMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        validate_stochastic(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds a matrix from off-diagonal conductances, filling each diagonal
    /// entry up to a unit row sum.
    pub fn from_conductances(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, p) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidGraph(format!("bad edge ({i}, {j})")));
            }
            m[(i, j)] = p;
            m[(j, i)] = p;
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&k| k != i).map(|k| m[(i, k)]).sum();
            let diag = 1.0 - off;
            // rounding can leave -ulp where the row is already full
            m[(i, i)] = if diag < 0.0 && diag > -ROW_SUM_TOL { 0.0 } else { diag };
        }
        validate_stochastic(m)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of edges (self-loops excluded).
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self.n(), self.edges.iter().copied())
    }

    /// Unit-capacity view of the edge pattern.
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        self.edges.clone()
    }

    /// Removes the cut edges, shifting each removed weight onto both
    /// endpoints' diagonal entries.
    pub fn interdict(&self, cut: &EdgeCut) -> Result<Self> {
        if cut.m() != self.m() {
            return Err(Error::Dimension {
                expected: self.m(),
                got: cut.m(),
            });
        }
        let pairs: Vec<_> = cut.ids().map(|id| self.edges[id]).collect();
        self.interdict_pairs(&pairs)
    }

    /// Like [`interdict`](Self::interdict) but addressed by node pairs.
    pub fn interdict_pairs(&self, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = self.n();
        let mut m = self.entries.clone();
        for &(i, j) in pairs {
            if i >= n || j >= n || i == j || m[(i, j)] <= 0.0 {
                return Err(Error::EdgeNotPresent(i, j));
            }
            let p = m[(i, j)];
            m[(i, j)] = 0.0;
            m[(j, i)] = 0.0;
            m[(i, i)] += p;
            m[(j, j)] += p;
        }
        validate_stochastic(m)
    }
}

/// `I - P`, or `I - P^2` when `squared`.
pub fn laplacian(p: &StochasticMatrix, squared: bool) -> DMatrix<f64> {
    let n = p.n();
    let a = if squared {
        p.entries() * p.entries()
    } else {
        p.entries().clone()
    };
    DMatrix::identity(n, n) - a
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

    fn assert_rows(m: &DMatrix<f64>, rows: &[[f64; 3]], tol: f64) {
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                assert!(
                    (m[(i, j)] - v).abs() <= tol,
                    "({i},{j}): {} vs {v}",
                    m[(i, j)]
                );
            }
        }
    }

    #[test]
    fn identity_is_valid_and_edgeless() {
        let p = validate_stochastic(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(p.m(), 0);
        assert!(!p.is_connected());
    }

    #[test]
    fn appendix_triangle_is_valid() {
        let p = appendix_p();
        assert_eq!(p.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn rejects_bad_matrices() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.5]);
        assert!(matches!(
            validate_stochastic(m),
            Err(Error::RowSumViolation { row: 0, .. })
        ));
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.4, 0.6]);
        assert!(matches!(
            validate_stochastic(m),
            Err(Error::NotSymmetric { .. })
        ));
        let m = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5]);
        assert!(matches!(
            validate_stochastic(m),
            Err(Error::NegativeEntry { .. })
        ));
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            validate_stochastic(m),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn interdict_appendix_cuts() {
        let p = appendix_p();
        let a = p.interdict_pairs(&[(1, 2)]).unwrap();
        assert_rows(
            a.entries(),
            &[
                [17.0 / 30.0, 1.0 / 3.0, 0.1],
                [1.0 / 3.0, 2.0 / 3.0, 0.0],
                [0.1, 0.0, 0.9],
            ],
            1e-15,
        );
        let b = p.interdict_pairs(&[(0, 2)]).unwrap();
        assert_rows(
            b.entries(),
            &[
                [2.0 / 3.0, 1.0 / 3.0, 0.0],
                [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                [0.0, 1.0 / 3.0, 2.0 / 3.0],
            ],
            1e-15,
        );
        assert_eq!(b.m(), 2);
    }

    #[test]
    fn empty_cut_is_identity_operation() {
        let p = appendix_p();
        assert_eq!(p.interdict(&EdgeCut::empty(p.m())).unwrap(), p);
    }

    #[test]
    fn interdict_missing_edge_fails() {
        let p = appendix_p().interdict_pairs(&[(0, 2)]).unwrap();
        assert_eq!(p.interdict_pairs(&[(0, 2)]), Err(Error::EdgeNotPresent(0, 2)));
    }

    #[test]
    fn squared_laplacian_of_appendix_cut() {
        let a = appendix_p().interdict_pairs(&[(1, 2)]).unwrap();
        let l = laplacian(&a, true);
        let sq = [
            [199.0 / 450.0, 37.0 / 90.0, 11.0 / 75.0],
            [37.0 / 90.0, 5.0 / 9.0, 1.0 / 30.0],
            [11.0 / 75.0, 1.0 / 30.0, 41.0 / 50.0],
        ];
        let expected: Vec<[f64; 3]> = (0..3)
            .map(|i| {
                let mut r = [0.0; 3];
                for j in 0..3 {
                    r[j] = if i == j { 1.0 } else { 0.0 } - sq[i][j];
                }
                r
            })
            .collect();
        assert_rows(&l, &expected, 1e-14);
        for i in 0..3 {
            assert!(l.row(i).sum().abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_of_identity_is_zero() {
        let p = validate_stochastic(DMatrix::identity(4, 4)).unwrap();
        assert_eq!(laplacian(&p, false), DMatrix::zeros(4, 4));
        assert_eq!(laplacian(&p, true), DMatrix::zeros(4, 4));
    }

    #[test]
    fn graph_normalizes_and_sorts() {
        let g = WeightedGraph::new(
            4,
            ValueMode::Resistance,
            [(3, 1, 2.0), (0, 2, 1.0), (1, 0, 4.0)],
            0,
            3,
        )
        .unwrap();
        assert_eq!(g.pairs(), vec![(0, 1), (0, 2), (1, 3)]);
        assert_eq!(g.edge_id(3, 1), Some(2));
        assert_eq!(g.conductance(0), 0.25);
    }

    #[test]
    fn graph_rejects_invalid_input() {
        let r = ValueMode::Resistance;
        assert!(WeightedGraph::new(3, r, [(0, 0, 1.0)], 0, 2).is_err());
        assert!(WeightedGraph::new(3, r, [(0, 1, 1.0), (1, 0, 2.0)], 0, 2).is_err());
        assert!(WeightedGraph::new(3, r, [(0, 1, 0.0)], 0, 2).is_err());
        assert!(WeightedGraph::new(3, r, [(0, 1, f64::INFINITY)], 0, 2).is_err());
        assert!(WeightedGraph::new(3, r, [(0, 1, 1.0)], 1, 1).is_err());
        assert!(WeightedGraph::new(3, r, [(0, 5, 1.0)], 0, 2).is_err());
    }

    #[test]
    fn cut_y_round_trip() {
        let cut = EdgeCut::new(5, [1, 3]).unwrap();
        assert_eq!(cut.y(), vec![1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(EdgeCut::from_y(&cut.y()), cut);
        assert!(EdgeCut::new(2, [2]).is_err());
    }
}
