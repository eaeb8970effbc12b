//! Maximum-weight spanning forests over mixed variables.
//!
//! Edges are taken greedily in decreasing penalised weight. An edge is kept
//! when its weight is positive, it joins two trees, and the merged tree has
//! no forbidden path: every path between two discrete nodes must run through
//! discrete nodes only. Equivalently, in each tree the discrete nodes induce
//! a connected subtree.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::Serialize;

use crate::data::MixedDataTable;
use crate::error::{Error, Result};
use crate::pairwise::{Criterion, EdgeScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    names: Vec<String>,
    kinds: Vec<NodeKind>,
    edges: Vec<ForestEdge>,
    adjacency: Vec<Vec<usize>>,
}

/// Union-find with per-set discrete-node counts.
struct Components {
    parent: Vec<usize>,
    size: Vec<usize>,
    discrete: Vec<usize>,
}

impl Components {
    fn new(kinds: &[NodeKind]) -> Self {
        Components {
            parent: (0..kinds.len()).collect(),
            size: vec![1; kinds.len()],
            discrete: kinds.iter().map(|&k| (k == NodeKind::Discrete) as usize).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.discrete[a] += self.discrete[b];
    }
}

/// Greedy forest over all scored pairs. `kinds[i]` describes node `i`.
pub fn build_forest(scores: &[EdgeScore], criterion: Criterion, kinds: &[NodeKind]) -> Forest {
    let p = kinds.len();
    let mut order: Vec<&EdgeScore> = scores.iter().filter(|s| s.weight(criterion) > 0.0).collect();
    order.sort_by(|a, b| {
        b.weight(criterion)
            .total_cmp(&a.weight(criterion))
            .then((a.u, a.v).cmp(&(b.u, b.v)))
    });

    let mut comps = Components::new(kinds);
    let mut adjacency = vec![Vec::new(); p];
    let mut edges = Vec::new();
    for s in order {
        if edges.len() + 1 == p.max(1) {
            break;
        }
        let (ru, rv) = (comps.find(s.u), comps.find(s.v));
        if ru == rv {
            continue;
        }
        let needs_check = comps.discrete[ru] + comps.discrete[rv] >= 2;
        adjacency[s.u].push(s.v);
        adjacency[s.v].push(s.u);
        if needs_check && !discrete_nodes_connected(&adjacency, kinds, s.u) {
            adjacency[s.u].pop();
            adjacency[s.v].pop();
            continue;
        }
        comps.union(s.u, s.v);
        edges.push(ForestEdge {
            u: s.u,
            v: s.v,
            weight: s.weight(criterion),
        });
    }
    for nbrs in &mut adjacency {
        nbrs.sort_unstable();
    }
    Forest {
        names: (0..p).map(|i| format!("x{i}")).collect(),
        kinds: kinds.to_vec(),
        edges,
        adjacency,
    }
}

/// Whether the discrete nodes of `start`'s tree form one connected block.
fn discrete_nodes_connected(adjacency: &[Vec<usize>], kinds: &[NodeKind], start: usize) -> bool {
    let tree = bfs_order(adjacency, start, |_| true);
    let discrete: Vec<usize> = tree.into_iter().filter(|&v| kinds[v] == NodeKind::Discrete).collect();
    match discrete.first() {
        None => true,
        Some(&d) => bfs_order(adjacency, d, |v| kinds[v] == NodeKind::Discrete).len() == discrete.len(),
    }
}

fn bfs_order(adjacency: &[Vec<usize>], start: usize, allowed: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut out = Vec::new();
    while let Some(x) = queue.pop_front() {
        out.push(x);
        for &y in &adjacency[x] {
            if !seen[y] && allowed(y) {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    out
}

pub fn node_kinds(table: &MixedDataTable) -> Vec<NodeKind> {
    (0..table.n_vars())
        .map(|i| {
            if table.is_discrete(i) {
                NodeKind::Discrete
            } else {
                NodeKind::Continuous
            }
        })
        .collect()
}

/// Forest over a table's variables, labelled with its column names.
pub fn forest_for_table(table: &MixedDataTable, scores: &[EdgeScore], criterion: Criterion) -> Forest {
    let mut f = build_forest(scores, criterion, &node_kinds(table));
    f.names = table.specs().iter().map(|s| s.name.clone()).collect();
    f
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathStep {
    pub k: usize,
    pub target: usize,
    /// All variables within distance `k`, ascending.
    pub members: Vec<usize>,
    /// Variables at distance exactly `k`, ascending.
    pub added: Vec<usize>,
}

impl Forest {
    pub fn n_nodes(&self) -> usize {
        self.kinds.len()
    }

    pub fn edges(&self) -> &[ForestEdge] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.kinds.len());
        self.names = names;
        self
    }

    /// Nodes in the same tree as `node`, ascending (including `node`).
    pub fn component(&self, node: usize) -> Vec<usize> {
        let mut c = bfs_order(&self.adjacency, node, |_| true);
        c.sort_unstable();
        c
    }

    pub fn sentinel_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.weight == f64::INFINITY).count()
    }

    fn bfs_depths(&self, y: usize) -> Vec<Option<usize>> {
        let mut depth = vec![None; self.n_nodes()];
        depth[y] = Some(0);
        let mut queue = VecDeque::from([y]);
        while let Some(x) = queue.pop_front() {
            let d = depth[x].unwrap_or(0);
            for &z in &self.adjacency[x] {
                if depth[z].is_none() {
                    depth[z] = Some(d + 1);
                    queue.push_back(z);
                }
            }
        }
        depth
    }

    /// Number of edges between `y` and `x`, or `None` in different trees.
    pub fn distance(&self, y: usize, x: usize) -> Result<Option<usize>> {
        if y == x {
            return Err(Error::InvalidArgument(format!("distance from node {y} to itself")));
        }
        Ok(self.bfs_depths(y)[x])
    }

    /// Nested neighbourhoods of `y`: step `k` holds every node within `k` edges.
    pub fn path_steps(&self, y: usize) -> Result<Vec<PathStep>> {
        if self.adjacency[y].is_empty() {
            return Err(Error::IsolatedTarget(self.names[y].clone()));
        }
        let depth = self.bfs_depths(y);
        let max = depth.iter().flatten().copied().max().unwrap_or(0);
        let mut steps = Vec::with_capacity(max);
        let mut members = Vec::new();
        for k in 1..=max {
            let added: Vec<usize> = (0..self.n_nodes()).filter(|&v| depth[v] == Some(k)).collect();
            members.extend_from_slice(&added);
            members.sort_unstable();
            steps.push(PathStep {
                k,
                target: y,
                members: members.clone(),
                added,
            });
        }
        Ok(steps)
    }

    /// Render as an undirected DOT graph; `highlight` is drawn filled.
    pub fn to_dot(&self, highlight: Option<usize>) -> String {
        let mut s = String::from("graph forest {\n");
        for i in 0..self.n_nodes() {
            let shape = match self.kinds[i] {
                NodeKind::Discrete => "box",
                NodeKind::Continuous => "ellipse",
            };
            let style = if highlight == Some(i) {
                ", style=filled, fillcolor=lightgrey"
            } else {
                ""
            };
            let _ = writeln!(s, "  \"{}\" [shape={shape}{style}];", escape(&self.names[i]));
        }
        for e in &self.edges {
            let label = if e.weight.is_finite() {
                format!("{:.4}", e.weight)
            } else {
                "inf".to_string()
            };
            let _ = writeln!(
                s,
                "  \"{}\" -- \"{}\" [label=\"{label}\"];",
                escape(&self.names[e.u]),
                escape(&self.names[e.v])
            );
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> ForestJson {
        ForestJson {
            nodes: (0..self.n_nodes())
                .map(|i| JsonNode {
                    name: self.names[i].clone(),
                    kind: self.kinds[i],
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| JsonEdge {
                    u: self.names[e.u].clone(),
                    v: self.names[e.v].clone(),
                    weight: e.weight,
                })
                .collect(),
        }
    }
}

fn escape(name: &str) -> String {
    name.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestJson {
    pub nodes: Vec<JsonNode>,
    pub edges: Vec<JsonEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsonNode {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsonEdge {
    pub u: String,
    pub v: String,
    pub weight: f64,
}
