//! Unit-capacity max-flow / min-cut on undirected graphs.

use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutResult {
    pub cut_value: usize,
    /// Indices into the edge list passed to [`min_st_cut`], ascending.
    pub cut_edges: Vec<usize>,
    /// Nodes reachable from `s` in the final residual graph, ascending.
    pub source_side: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    cap: u32,
}

/// Dinic's algorithm. An undirected unit edge is one arc pair where each
/// direction starts with capacity 1.
struct Dinic {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl Dinic {
    fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut arcs = Vec::with_capacity(2 * edges.len());
        for &(u, v) in edges {
            adj[u].push(arcs.len());
            arcs.push(Arc { to: v, cap: 1 });
            adj[v].push(arcs.len());
            arcs.push(Arc { to: u, cap: 1 });
        }
        Self {
            adj,
            arcs,
            level: vec![-1; n],
            next: vec![0; n],
        }
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                let Arc { to, cap } = self.arcs[a];
                if cap > 0 && self.level[to] < 0 {
                    self.level[to] = self.level[v] + 1;
                    queue.push_back(to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize) -> bool {
        if v == t {
            return true;
        }
        while self.next[v] < self.adj[v].len() {
            let a = self.adj[v][self.next[v]];
            let Arc { to, cap } = self.arcs[a];
            if cap > 0 && self.level[to] == self.level[v] + 1 && self.dfs(to, t) {
                self.arcs[a].cap -= 1;
                self.arcs[a ^ 1].cap += 1;
                return true;
            }
            self.next[v] += 1;
        }
        false
    }

    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut flow = 0;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|x| *x = 0);
            while self.dfs(s, t) {
                flow += 1;
            }
        }
        flow
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                let Arc { to, cap } = self.arcs[a];
                if cap > 0 && !seen[to] {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        seen
    }
}

/// Minimum `s`–`t` edge cut of an unweighted undirected graph.
///
/// The cut is read off the residual graph: every edge leaving the set of
/// nodes still reachable from `s`. When `s` and `t` are already disconnected
/// the result is an empty cut of value 0.
pub fn min_st_cut(n: usize, edges: &[(usize, usize)], s: usize, t: usize) -> CutResult {
    assert!(s < n && t < n && s != t, "invalid terminals ({s}, {t}) for {n} nodes");
    let mut dinic = Dinic::new(n, edges);
    let flow = dinic.max_flow(s, t);
    let side = dinic.residual_reachable(s);
    let cut_edges: Vec<usize> = edges
        .iter()
        .enumerate()
        .filter(|(_, &(u, v))| side[u] != side[v])
        .map(|(id, _)| id)
        .collect();
    debug_assert_eq!(cut_edges.len(), flow);
    CutResult {
        cut_value: flow,
        cut_edges,
        source_side: (0..n).filter(|&v| side[v]).collect(),
    }
}

/// Global edge connectivity via `n - 1` max-flow calls from node 0.
/// Returns 0 for disconnected graphs and for a single node.
pub fn edge_connectivity(n: usize, edges: &[(usize, usize)]) -> usize {
    if n < 2 {
        return 0;
    }
    (1..n)
        .map(|v| Dinic::new(n, edges).max_flow(0, v))
        .min()
        .unwrap_or(0)
}
