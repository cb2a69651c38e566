//! Sub-network sampling and the sub-instance pool.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    UniformNode,
    Bfs,
    Dfs,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "uniform-node" | "uniform" => Ok(Strategy::UniformNode),
            "bfs" => Ok(Strategy::Bfs),
            "dfs" => Ok(Strategy::Dfs),
            other => Err(format!("unknown sampling strategy `{other}` (uniform-node, bfs, dfs)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::UniformNode => "uniform-node",
            Strategy::Bfs => "bfs",
            Strategy::Dfs => "dfs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    pub sub_network_size: usize,
}

/// An induced sub-graph with a dense local adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubNetwork {
    local_to_global: Vec<u64>,
    adjacency: Vec<u8>,
}

impl SubNetwork {
    /// Induced sub-graph over `nodes` (graph indices), kept in the given order.
    pub fn induced(graph: &Graph, nodes: &[usize]) -> Self {
        let n = nodes.len();
        let mut adjacency = vec![0u8; n * n];
        for i in 0..n {
            for k in (i + 1)..n {
                if graph.has_edge_index(nodes[i], nodes[k]) {
                    adjacency[i * n + k] = 1;
                    adjacency[k * n + i] = 1;
                }
            }
        }
        SubNetwork {
            local_to_global: nodes.iter().map(|&i| graph.id_of(i)).collect(),
            adjacency,
        }
    }

    /// Builds a sub-network directly from a symmetric 0/1 matrix.
    pub fn from_adjacency(local_to_global: Vec<u64>, adjacency: Vec<u8>) -> Result<Self> {
        let n = local_to_global.len();
        if n == 0 || adjacency.len() != n * n {
            return Err(Error::Shape(format!(
                "adjacency of length {} for {n} nodes",
                adjacency.len()
            )));
        }
        for i in 0..n {
            if adjacency[i * n + i] != 0 {
                return Err(Error::Shape(format!("non-zero diagonal at {i}")));
            }
            for k in 0..n {
                let a = adjacency[i * n + k];
                if a > 1 || a != adjacency[k * n + i] {
                    return Err(Error::Shape(format!("entry ({i},{k}) breaks symmetry or 0/1 range")));
                }
            }
        }
        Ok(SubNetwork {
            local_to_global,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.local_to_global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local_to_global.is_empty()
    }

    pub fn nodes(&self) -> &[u64] {
        &self.local_to_global
    }

    /// Row-major `n' x n'` adjacency.
    pub fn adjacency(&self) -> &[u8] {
        &self.adjacency
    }

    pub fn adjacent(&self, i: usize, k: usize) -> bool {
        self.adjacency[i * self.len() + k] == 1
    }

    pub fn local_index(&self, global: u64) -> Option<usize> {
        self.local_to_global.iter().position(|&g| g == global)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|&a| a as usize).sum::<usize>() / 2
    }

    /// Bytes held by this sub-network's id list and adjacency matrix.
    pub fn memory_bytes(&self) -> usize {
        self.local_to_global.len() * std::mem::size_of::<u64>() + self.adjacency.len()
    }
}

/// Samples one sub-network of `config.sub_network_size` nodes.
pub fn sample_subnetwork(graph: &Graph, config: &SamplerConfig, rng: &mut Rng) -> Result<SubNetwork> {
    let size = config.sub_network_size;
    check_size(graph, size)?;
    let nodes = match config.strategy {
        Strategy::UniformNode => rand::seq::index::sample(rng, graph.node_count(), size).into_vec(),
        Strategy::Bfs | Strategy::Dfs => {
            let start = rng.random_range(0..graph.node_count());
            traverse(graph, start, config.strategy, size, rng)
        }
    };
    Ok(SubNetwork::induced(graph, &nodes))
}

fn check_size(graph: &Graph, size: usize) -> Result<()> {
    if size == 0 {
        return Err(Error::Sampling("sub-network size must be positive".into()));
    }
    if size > graph.node_count() {
        return Err(Error::Sampling(format!(
            "sub-network size {size} exceeds the graph's {} nodes",
            graph.node_count()
        )));
    }
    Ok(())
}

/// BFS or DFS collection of `size` node indices beginning at `start`.
///
/// Neighbors are visited in a fresh random order at each expansion. When the
/// current component runs out, traversal restarts at a uniformly chosen
/// unvisited node.
pub(crate) fn traverse(graph: &Graph, start: usize, strategy: Strategy, size: usize, rng: &mut Rng) -> Vec<usize> {
    let n = graph.node_count();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(size);
    let mut frontier: VecDeque<usize> = VecDeque::new();
    let mut root = start;
    loop {
        visited[root] = true;
        order.push(root);
        frontier.push_back(root);
        while order.len() < size {
            let next = match strategy {
                Strategy::Bfs => frontier.front().copied(),
                _ => frontier.back().copied(),
            };
            let Some(current) = next else { break };
            let mut unseen: Vec<usize> = graph
                .neighbors(current)
                .iter()
                .copied()
                .filter(|&v| !visited[v])
                .collect();
            match strategy {
                Strategy::Bfs => {
                    frontier.pop_front();
                    unseen.shuffle(rng);
                    for v in unseen {
                        if order.len() == size {
                            break;
                        }
                        visited[v] = true;
                        order.push(v);
                        frontier.push_back(v);
                    }
                }
                _ => {
                    // Depth-first: descend into one random unvisited neighbor,
                    // backtrack when none are left.
                    if unseen.is_empty() {
                        frontier.pop_back();
                    } else {
                        let v = unseen[rng.random_range(0..unseen.len())];
                        visited[v] = true;
                        order.push(v);
                        frontier.push_back(v);
                    }
                }
            }
        }
        if order.len() >= size {
            break;
        }
        let remaining: Vec<usize> = (0..n).filter(|&v| !visited[v]).collect();
        root = remaining[rng.random_range(0..remaining.len())];
        frontier.clear();
    }
    order
}

/// An ordered collection of equally sized sub-networks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pool {
    sub_networks: Vec<SubNetwork>,
}

impl Pool {
    pub fn new(sub_networks: Vec<SubNetwork>) -> Result<Self> {
        let Some(first) = sub_networks.first() else {
            return Err(Error::Sampling("a pool needs at least one sub-network".into()));
        };
        let width = first.len();
        if let Some(bad) = sub_networks.iter().position(|g| g.len() != width) {
            return Err(Error::Shape(format!(
                "pool member {bad} has {} nodes, expected {width}",
                sub_networks[bad].len()
            )));
        }
        Ok(Pool { sub_networks })
    }

    pub fn len(&self) -> usize {
        self.sub_networks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub_networks.is_empty()
    }

    pub fn sub_network_size(&self) -> usize {
        self.sub_networks[0].len()
    }

    pub fn get(&self, index: usize) -> &SubNetwork {
        &self.sub_networks[index]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SubNetwork> {
        self.sub_networks.iter()
    }

    pub fn memory_bytes(&self) -> usize {
        self.sub_networks.iter().map(SubNetwork::memory_bytes).sum()
    }

    /// Fraction of the graph's nodes that appear in at least one member.
    pub fn coverage(&self, graph: &Graph) -> f64 {
        let mut seen = vec![false; graph.node_count()];
        for g in &self.sub_networks {
            for &id in g.nodes() {
                if let Some(i) = graph.index_of(id) {
                    seen[i] = true;
                }
            }
        }
        seen.iter().filter(|&&s| s).count() as f64 / graph.node_count().max(1) as f64
    }
}

pub fn build_pool(graph: &Graph, pool_size: usize, config: &SamplerConfig, rng: &mut Rng) -> Result<Pool> {
    if pool_size == 0 {
        return Err(Error::Sampling("pool size must be positive".into()));
    }
    let members = (0..pool_size)
        .map(|_| sample_subnetwork(graph, config, rng))
        .collect::<Result<Vec<_>>>()?;
    Pool::new(members)
}

/// Indices of `batch_size` uniform draws with replacement from `0..pool_len`.
pub fn draw_indices(pool_len: usize, batch_size: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if pool_len == 0 {
        return Err(Error::Sampling("cannot draw from an empty pool".into()));
    }
    if batch_size == 0 {
        return Err(Error::Sampling("batch size must be positive".into()));
    }
    Ok((0..batch_size).map(|_| rng.random_range(0..pool_len)).collect())
}

pub fn draw_batch<'a>(pool: &'a Pool, batch_size: usize, rng: &mut Rng) -> Result<Vec<&'a SubNetwork>> {
    Ok(draw_indices(pool.len(), batch_size, rng)?
        .into_iter()
        .map(|i| pool.get(i))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_sbm, load_edge_list};
    use crate::rng::from_seed;

    fn cfg(strategy: Strategy, size: usize) -> SamplerConfig {
        SamplerConfig {
            strategy,
            sub_network_size: size,
        }
    }

    #[test]
    fn bfs_on_path_from_end() {
        // a-b-c-d as 0-1-2-3
        let g = load_edge_list("0 1\n1 2\n2 3").unwrap();
        let nodes = traverse(&g, 0, Strategy::Bfs, 3, &mut from_seed(1));
        assert_eq!(nodes, vec![0, 1, 2]);
        let sub = SubNetwork::induced(&g, &nodes);
        assert_eq!(sub.edge_count(), 2);
    }

    #[test]
    fn bfs_from_star_leaf_reaches_center() {
        // center 0, leaves 1..=5
        let g = load_edge_list("0 1\n0 2\n0 3\n0 4\n0 5").unwrap();
        let mut thirds = std::collections::BTreeSet::new();
        for seed in 0..200 {
            let nodes = traverse(&g, 3, Strategy::Bfs, 3, &mut from_seed(seed));
            assert_eq!(&nodes[..2], &[3, 0]);
            assert!(nodes[2] != 3 && nodes[2] != 0);
            thirds.insert(nodes[2]);
        }
        // third node is a random leaf, so every other leaf shows up
        assert_eq!(thirds.len(), 4);
    }

    #[test]
    fn exhausted_component_restarts() {
        // two disjoint edges; asking for 3 nodes forces a restart
        let g = load_edge_list("0 1\n2 3").unwrap();
        for strategy in [Strategy::Bfs, Strategy::Dfs] {
            let nodes = traverse(&g, 0, strategy, 3, &mut from_seed(5));
            assert_eq!(nodes.len(), 3);
            let mut sorted = nodes.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), 3);
        }
    }

    #[test]
    fn uniform_full_sample_is_whole_graph() {
        let g = generate_sbm(&[6, 6], 0.6, 0.1, &mut from_seed(2)).unwrap();
        let sub = sample_subnetwork(&g, &cfg(Strategy::UniformNode, 12), &mut from_seed(9)).unwrap();
        assert_eq!(sub.len(), 12);
        assert_eq!(sub.edge_count(), g.edge_count());
    }

    #[test]
    fn oversized_sample_is_rejected() {
        let g = load_edge_list("0 1").unwrap();
        assert!(matches!(
            sample_subnetwork(&g, &cfg(Strategy::Bfs, 3), &mut from_seed(0)),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn pool_defaults_and_determinism() {
        let g = generate_sbm(&[50, 50], 0.3, 0.02, &mut from_seed(7)).unwrap();
        let c = cfg(Strategy::Bfs, 10);
        let one = build_pool(&g, 1, &c, &mut from_seed(1)).unwrap();
        assert_eq!(one.len(), 1);
        let a = build_pool(&g, 200, &c, &mut from_seed(1)).unwrap();
        let b = build_pool(&g, 200, &c, &mut from_seed(1)).unwrap();
        assert_eq!(a.len(), 200);
        assert!(a.iter().all(|s| s.len() == 10));
        assert_eq!(a, b);
    }

    #[test]
    fn batches_draw_with_replacement() {
        let g = load_edge_list("0 1\n1 2").unwrap();
        let pool = build_pool(&g, 1, &cfg(Strategy::Bfs, 2), &mut from_seed(0)).unwrap();
        let batch = draw_batch(&pool, 3, &mut from_seed(0)).unwrap();
        assert_eq!(batch.len(), 3);
        assert!(batch.iter().all(|s| std::ptr::eq(*s, pool.get(0))));

        let idx = draw_indices(200, 10, &mut from_seed(4)).unwrap();
        assert_eq!(idx.len(), 10);
        assert!(idx.iter().all(|&i| i < 200));
        assert_eq!(idx, draw_indices(200, 10, &mut from_seed(4)).unwrap());
        assert!(draw_indices(0, 1, &mut from_seed(4)).is_err());
    }

    #[test]
    fn from_adjacency_validates() {
        assert!(SubNetwork::from_adjacency(vec![1, 2], vec![0, 1, 1, 0]).is_ok());
        assert!(SubNetwork::from_adjacency(vec![1, 2], vec![0, 1, 0, 0]).is_err());
        assert!(SubNetwork::from_adjacency(vec![1, 2], vec![1, 0, 0, 0]).is_err());
        assert!(SubNetwork::from_adjacency(vec![], vec![]).is_err());
    }
}
