//! Benchmark graph families, Metropolis weighting, and the bipartite
//! reduction gadget used to relate interdiction to clique and dense-subgraph
//! problems.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeCut, StochasticMatrix, UnionFind, ValueMode, WeightedGraph};
use crate::mincut::edge_connectivity;

pub const RESAMPLE_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Complete,
    Bipartite,
    Ring4,
    Er,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Complete, Family::Bipartite, Family::Ring4, Family::Er];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Complete => "complete",
            Family::Bipartite => "bipartite",
            Family::Ring4 => "ring4",
            Family::Er => "er",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown family {s:?}")))
    }
}

fn unit_graph(n: usize, pairs: Vec<(usize, usize)>) -> Result<WeightedGraph> {
    WeightedGraph::unweighted(n, pairs, 0, n - 1)
}

pub fn gen_complete(n: usize) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::TooSmall(format!("complete graph needs n >= 2, got {n}")));
    }
    unit_graph(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect())
}

/// Complete bipartite graph with parts of sizes `⌊n/2⌋` and `⌈n/2⌉`.
pub fn gen_bipartite(n: usize) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::TooSmall(format!("bipartite graph needs n >= 2, got {n}")));
    }
    let left = n / 2;
    unit_graph(n, (0..left).flat_map(|i| (left..n).map(move |j| (i, j))).collect())
}

/// Nodes on a cycle, each joined to its two nearest neighbours on both sides.
pub fn gen_ring4(n: usize) -> Result<WeightedGraph> {
    if n < 5 {
        return Err(Error::TooSmall(format!("4-regular ring needs n >= 5, got {n}")));
    }
    let pairs = (0..n)
        .flat_map(|i| [(i, (i + 1) % n), (i, (i + 2) % n)])
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    unit_graph(n, pairs)
}

/// Erdős–Rényi `G(n, p)`, resampled until its edge connectivity is at least
/// `min_connectivity`.
pub fn gen_er(n: usize, p: f64, min_connectivity: usize, seed: u64) -> Result<WeightedGraph> {
    gen_er_with(n, p, min_connectivity, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn gen_er_with<R: Rng>(
    n: usize,
    p: f64,
    min_connectivity: usize,
    rng: &mut R,
) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::TooSmall(format!("random graph needs n >= 2, got {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("edge probability {p} outside (0, 1)")));
    }
    for _ in 0..RESAMPLE_LIMIT {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    pairs.push((i, j));
                }
            }
        }
        if edge_connectivity(n, &pairs) >= min_connectivity.max(1) {
            return unit_graph(n, pairs);
        }
    }
    Err(Error::ResampleLimit(RESAMPLE_LIMIT))
}

/// Topology of one family; `min_connectivity` only affects Erdős–Rényi.
pub fn generate<R: Rng>(
    family: Family,
    n: usize,
    er_p: f64,
    min_connectivity: usize,
    rng: &mut R,
) -> Result<WeightedGraph> {
    match family {
        Family::Complete => gen_complete(n),
        Family::Bipartite => gen_bipartite(n),
        Family::Ring4 => gen_ring4(n),
        Family::Er => gen_er_with(n, er_p, min_connectivity, rng),
    }
}

/// Replaces every edge value with an integer weight drawn from `1..=10`.
pub fn random_weights<R: Rng>(g: &WeightedGraph, rng: &mut R) -> WeightedGraph {
    let edges: Vec<_> = g
        .pairs()
        .into_iter()
        .map(|(i, j)| (i, j, rng.random_range(1..=10) as f64))
        .collect();
    WeightedGraph::new(g.n(), ValueMode::Conductance, edges, g.source(), g.sink())
        .expect("reweighting keeps a valid graph")
}

/// Metropolis matrix `P_ij = w_ij / max(Σ_k w_ik, Σ_k w_jk)` of the edge
/// values of `g`, with the diagonal filling each row to one.
pub fn metropolis(g: &WeightedGraph) -> Result<StochasticMatrix> {
    let mut strength = vec![0.0; g.n()];
    for e in g.edges() {
        strength[e.u] += e.value;
        strength[e.v] += e.value;
    }
    let entries: Vec<_> = g
        .edges()
        .iter()
        .map(|e| (e.u, e.v, e.value / strength[e.u].max(strength[e.v])))
        .collect();
    StochasticMatrix::from_conductances(g.n(), &entries)
}

/// `x0_i = 0` for odd and `1` for even 1-based index `i`.
pub fn alternating_x0(n: usize) -> Vec<f64> {
    (1..=n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect()
}

/// Stand-in for a zero resistance, keeping the shifted Laplacian definite.
pub const ZERO_RESISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GadgetMode {
    /// `a` on source edges, `δ` on incidence edges, 1 on sink edges.
    Clique,
    /// `δ` on source and incidence edges, 1 on sink edges.
    DenseSubgraph,
}

/// Node and edge bookkeeping of the gadget, serializable for inspection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GadgetMap {
    pub source: usize,
    pub sink: usize,
    /// One node per base edge.
    pub edge_nodes: Vec<usize>,
    /// One node per base node.
    pub vertex_nodes: Vec<usize>,
    /// Gadget edge ids `{s, v_ij}`, indexed by base edge.
    pub source_edges: Vec<usize>,
    /// Gadget edge ids `{v_ij, v_i}` and `{v_ij, v_j}`, indexed by base edge.
    pub incidence_edges: Vec<[usize; 2]>,
    /// Gadget edge ids `{v_i, t}`, indexed by base node.
    pub sink_edges: Vec<usize>,
    pub mode: GadgetMode,
    pub a: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GadgetGraph {
    pub base: WeightedGraph,
    pub gadget: WeightedGraph,
    pub map: GadgetMap,
}

/// Builds the bipartite diameter-three gadget of a base graph with `n`
/// nodes and `m` edges: `n + m + 2` nodes and `3m + n` edges.
pub fn build_gadget(base: &WeightedGraph, a: f64, delta: f64, mode: GadgetMode) -> Result<GadgetGraph> {
    let (n, m) = (base.n(), base.m());
    if n < 2 {
        return Err(Error::TooSmall(format!("gadget needs a base graph with n >= 2, got {n}")));
    }
    let small = if delta > 0.0 { delta } else { ZERO_RESISTANCE };
    let (r_source, r_incidence) = match mode {
        GadgetMode::Clique => (a, small),
        GadgetMode::DenseSubgraph => (small, small),
    };
    let (s, t) = (0, 1);
    let edge_node = |e: usize| 2 + e;
    let vertex_node = |i: usize| 2 + m + i;
    let mut edges = Vec::with_capacity(3 * m + n);
    for (e, (i, j)) in base.pairs().into_iter().enumerate() {
        edges.push((s, edge_node(e), r_source));
        edges.push((edge_node(e), vertex_node(i), r_incidence));
        edges.push((edge_node(e), vertex_node(j), r_incidence));
    }
    for i in 0..n {
        edges.push((t, vertex_node(i), 1.0));
    }
    let gadget = WeightedGraph::new(n + m + 2, ValueMode::Resistance, edges, s, t)?;
    let id = |x: usize, y: usize| gadget.edge_id(x, y).expect("gadget edge exists");
    let pairs = base.pairs();
    let map = GadgetMap {
        source: s,
        sink: t,
        edge_nodes: (0..m).map(edge_node).collect(),
        vertex_nodes: (0..n).map(vertex_node).collect(),
        source_edges: (0..m).map(|e| id(s, edge_node(e))).collect(),
        incidence_edges: pairs
            .iter()
            .enumerate()
            .map(|(e, &(i, j))| [id(edge_node(e), vertex_node(i)), id(edge_node(e), vertex_node(j))])
            .collect(),
        sink_edges: (0..n).map(|i| id(t, vertex_node(i))).collect(),
        mode,
        a,
        delta,
    };
    Ok(GadgetGraph {
        base: base.clone(),
        gadget,
        map,
    })
}

impl GadgetGraph {
    /// Cut that removes every incidence edge of the listed base edges.
    pub fn isolate_edges(&self, base_edges: &[usize]) -> Result<EdgeCut> {
        EdgeCut::new(
            self.gadget.m(),
            base_edges
                .iter()
                .flat_map(|&e| self.map.incidence_edges[e]),
        )
    }

    /// Cut keeping only the incidence edges of base edges inside `clique`.
    pub fn clique_cut(&self, clique: &[usize]) -> Result<EdgeCut> {
        let outside: Vec<usize> = self
            .base
            .pairs()
            .iter()
            .enumerate()
            .filter(|(_, (i, j))| !(clique.contains(i) && clique.contains(j)))
            .map(|(e, _)| e)
            .collect();
        self.isolate_edges(&outside)
    }
}

/// Cut associated with a base node subset `S`: the source edges of every
/// base edge inside `S`, plus `{v_i, v_ij}` for every boundary edge with
/// `i ∈ S`. It has `m - |E[V∖S]|` edges.
pub fn cut_from_subset(gg: &GadgetGraph, subset: &[usize]) -> Result<EdgeCut> {
    let n = gg.base.n();
    let mut inside = vec![false; n];
    for &v in subset {
        if v >= n {
            return Err(Error::InvalidInput(format!("node {v} not in base graph")));
        }
        inside[v] = true;
    }
    let mut ids = Vec::new();
    for (e, (i, j)) in gg.base.pairs().into_iter().enumerate() {
        match (inside[i], inside[j]) {
            (true, true) => ids.push(gg.map.source_edges[e]),
            (true, false) => ids.push(gg.map.incidence_edges[e][0]),
            (false, true) => ids.push(gg.map.incidence_edges[e][1]),
            (false, false) => {}
        }
    }
    EdgeCut::new(gg.gadget.m(), ids)
}

/// Effective resistance after contracting each incidence component into a
/// single node: parallel branches `s → u_k → t` of resistance
/// `a/n_k + 1/m_k`, one per component with `n_k` edge nodes and `m_k`
/// vertex nodes.
pub fn contracted_reff(a: f64, components: &[(usize, usize)]) -> f64 {
    let conductance: f64 = components
        .iter()
        .map(|&(nk, mk)| 1.0 / (a / nk as f64 + 1.0 / mk as f64))
        .sum();
    1.0 / conductance
}

/// `(n_k, m_k)` of every component of the surviving incidence edges that
/// touches both sides; pure dead ends are dropped. Ordered by smallest
/// member node.
pub fn incidence_components(gg: &GadgetGraph, cut: &EdgeCut) -> Vec<(usize, usize)> {
    let total = gg.gadget.n();
    let mut uf = UnionFind::new(total);
    for ids in &gg.map.incidence_edges {
        for &id in ids {
            if !cut.contains(id) {
                let (x, y) = gg.gadget.endpoints(id);
                uf.union(x, y);
            }
        }
    }
    let mut counts: std::collections::BTreeMap<usize, (usize, usize, usize)> = Default::default();
    for (k, &v) in gg.map.edge_nodes.iter().enumerate() {
        // only edge nodes still tied to the source carry flow
        if !cut.contains(gg.map.source_edges[k]) {
            let root = uf.find(v);
            let entry = counts.entry(root).or_insert((v, 0, 0));
            entry.0 = entry.0.min(v);
            entry.1 += 1;
        }
    }
    for (i, &v) in gg.map.vertex_nodes.iter().enumerate() {
        if !cut.contains(gg.map.sink_edges[i]) {
            let root = uf.find(v);
            let entry = counts.entry(root).or_insert((v, 0, 0));
            entry.0 = entry.0.min(v);
            entry.2 += 1;
        }
    }
    let mut out: Vec<_> = counts
        .into_values()
        .filter(|&(_, nk, mk)| nk > 0 && mk > 0)
        .collect();
    out.sort();
    out.into_iter().map(|(_, nk, mk)| (nk, mk)).collect()
}
