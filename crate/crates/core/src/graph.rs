//! Undirected simple graphs, edge-list parsing and the stochastic block model.

use std::collections::{BTreeSet, HashMap};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// An undirected graph without self-loops or parallel edges.
///
/// Nodes carry arbitrary non-negative ids; internally they are addressed by
/// their position in the sorted id list.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_ids: Vec<u64>,
    index: HashMap<u64, usize>,
    neighbors: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an id list and edges given as id pairs.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = u64>,
        edges: impl IntoIterator<Item = (u64, u64)>,
    ) -> Result<Self> {
        let edges: Vec<(u64, u64)> = edges.into_iter().collect();
        let mut ids: BTreeSet<u64> = nodes.into_iter().collect();
        for &(u, v) in &edges {
            ids.insert(u);
            ids.insert(v);
        }
        let node_ids: Vec<u64> = ids.into_iter().collect();
        let index: HashMap<u64, usize> = node_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut neighbors = vec![Vec::new(); node_ids.len()];
        for (u, v) in edges {
            if u == v {
                return Err(Error::Config(format!("self-loop on node {u}")));
            }
            let (a, b) = (index[&u], index[&v]);
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        let mut edge_count = 0;
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        Ok(Graph {
            node_ids,
            index,
            neighbors,
            edge_count: edge_count / 2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    pub fn id_of(&self, index: usize) -> u64 {
        self.node_ids[index]
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Sorted neighbor indices of the node at `index`.
    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.neighbors[index]
    }

    pub fn has_edge_index(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Edge membership by node id; symmetric in its arguments.
    pub fn has_edge(&self, u: u64, v: u64) -> bool {
        match (self.index_of(u), self.index_of(v)) {
            (Some(a), Some(b)) => self.has_edge_index(a, b),
            _ => false,
        }
    }

    /// Edges as index pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    /// Number of unordered node pairs that are not edges.
    pub fn non_edge_count(&self) -> usize {
        let n = self.node_count();
        n * n.saturating_sub(1) / 2 - self.edge_count
    }
}

/// Parses a whitespace-separated edge list. Lines starting with `#` and blank
/// lines are skipped; duplicate and reversed edges collapse to one.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two node ids, found {} tokens", tokens.len()),
            });
        }
        let parse = |t: &str| {
            t.parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{t}` is not a non-negative integer node id"),
            })
        };
        let (u, v) = (parse(tokens[0])?, parse(tokens[1])?);
        if u == v {
            return Err(Error::Parse {
                line: line_no,
                message: format!("self-loop on node {u}"),
            });
        }
        edges.push((u, v));
    }
    Graph::from_edges(std::iter::empty(), edges)
}

/// Stochastic block model with contiguous blocks: nodes `0..sizes[0]` form the
/// first block and so on. Each within-block pair is an edge with probability
/// `p_in`, each cross-block pair with probability `p_out`.
pub fn generate_sbm(block_sizes: &[usize], p_in: f64, p_out: f64, rng: &mut Rng) -> Result<Graph> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::Config("block sizes must be positive".into()));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("{name} = {p} is not a probability")));
        }
    }
    if p_out >= p_in {
        return Err(Error::Config(format!(
            "p_out ({p_out}) must be below p_in ({p_in}) for a community structure"
        )));
    }
    let block: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = block.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block[u] == block[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u as u64, v as u64));
            }
        }
    }
    Graph::from_edges(0..n as u64, edges)
}

/// Block label of each node for a graph produced by [`generate_sbm`].
pub fn sbm_blocks(block_sizes: &[usize]) -> Vec<usize> {
    block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect()
}
