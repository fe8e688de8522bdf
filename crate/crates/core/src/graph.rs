//! Directed network topologies, loop-free path enumeration and additive
//! shortest-path solvers.
//!
//! Ties are always broken towards the lexicographically smallest link-id
//! sequence so that every run is reproducible.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type LinkId = usize;

/// Default limit on the number of enumerated source-destination paths.
pub const DEFAULT_PATH_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    pub tail: NodeId,
    pub head: NodeId,
}

/// A directed graph with a single source-destination pair.
///
/// Nodes are `0..node_count`; link ids are positions `0..link_count` so they
/// double as indexes into per-link vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    node_count: usize,
    links: Vec<Link>,
    out: Vec<Vec<LinkId>>,
    source: NodeId,
    destination: NodeId,
}

impl NetworkTopology {
    /// Builds a topology from `(tail, head)` pairs; the i-th pair becomes link `i`.
    pub fn new(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        source: NodeId,
        destination: NodeId,
    ) -> Result<Self> {
        let links = edges
            .iter()
            .enumerate()
            .map(|(id, &(tail, head))| Link { id, tail, head })
            .collect();
        Self::from_links(node_count, links, source, destination)
    }

    /// Builds a topology from links carrying explicit ids. The ids must be a
    /// permutation of `0..links.len()`.
    pub fn from_links(
        node_count: usize,
        mut links: Vec<Link>,
        source: NodeId,
        destination: NodeId,
    ) -> Result<Self> {
        if source >= node_count || destination >= node_count {
            return Err(Error::InvalidTopology(format!(
                "source {source} / destination {destination} outside 0..{node_count}"
            )));
        }
        if source == destination {
            return Err(Error::InvalidTopology(
                "source and destination coincide".into(),
            ));
        }
        links.sort_by_key(|l| l.id);
        for (pos, link) in links.iter().enumerate() {
            if link.id != pos {
                return Err(Error::InvalidTopology(format!(
                    "link ids must be unique and cover 0..{}; found {} at position {pos}",
                    links.len(),
                    link.id
                )));
            }
            if link.tail >= node_count || link.head >= node_count {
                return Err(Error::InvalidTopology(format!(
                    "link {} references a node outside 0..{node_count}",
                    link.id
                )));
            }
            if link.tail == link.head {
                return Err(Error::InvalidTopology(format!("link {} is a self-loop", link.id)));
            }
        }
        let mut out = vec![Vec::new(); node_count];
        for link in &links {
            out[link.tail].push(link.id);
        }
        let topology = Self {
            node_count,
            links,
            out,
            source,
            destination,
        };
        if !topology.reachable_from(source)[destination] {
            return Err(Error::NoPath {
                from: source,
                to: destination,
            });
        }
        Ok(topology)
    }

    /// `hops` consecutive hops with `links_per_hop` parallel links each.
    /// Node `m` is joined to node `m + 1` by links `m * links_per_hop ..`.
    pub fn line(hops: usize, links_per_hop: usize) -> Result<Self> {
        Self::line_with_counts(&vec![links_per_hop; hops])
    }

    /// Line network with a per-hop number of parallel links.
    pub fn line_with_counts(links_per_hop: &[usize]) -> Result<Self> {
        if links_per_hop.is_empty() || links_per_hop.contains(&0) {
            return Err(Error::InvalidTopology(
                "a line network needs at least one hop and one link per hop".into(),
            ));
        }
        let mut edges = Vec::new();
        for (hop, &count) in links_per_hop.iter().enumerate() {
            edges.extend(std::iter::repeat_n((hop, hop + 1), count));
        }
        let hops = links_per_hop.len();
        Self::new(hops + 1, &edges, 0, hops)
    }

    /// Directed `rows x cols` grid with links pointing right and down, from the
    /// top-left corner to the bottom-right one. Every source-destination path
    /// has `rows + cols - 2` links; the default 4x4 grid gives six-hop paths.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::InvalidTopology("grid needs at least two nodes".into()));
        }
        let node = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((node(r, c), node(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((node(r, c), node(r + 1, c)));
                }
            }
        }
        Self::new(rows * cols, &edges, 0, rows * cols - 1)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> Result<&Link> {
        self.links.get(id).ok_or(Error::UnknownLink(id))
    }

    /// Outgoing link ids of `node`, in increasing id order.
    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out[node]
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn destination(&self) -> NodeId {
        self.destination
    }

    fn reachable_from(&self, start: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &l in &self.out[v] {
                let w = self.links[l].head;
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Builds the path that follows `links` from the source, validating it.
    pub fn path_from_links(&self, links: Vec<LinkId>) -> Result<Path> {
        self.walk_to_path(self.source, self.destination, links)
    }

    fn walk_to_path(&self, from: NodeId, to: NodeId, links: Vec<LinkId>) -> Result<Path> {
        if links.is_empty() {
            return Err(Error::InvalidTopology("empty path".into()));
        }
        let mut nodes = Vec::with_capacity(links.len() + 1);
        let mut mask = vec![false; self.link_count()];
        let mut at = from;
        nodes.push(at);
        for &l in &links {
            let link = self.link(l)?;
            if link.tail != at {
                return Err(Error::InvalidTopology(format!(
                    "link {l} does not leave node {at}"
                )));
            }
            at = link.head;
            if nodes.contains(&at) {
                return Err(Error::InvalidTopology(format!("path revisits node {at}")));
            }
            nodes.push(at);
            mask[l] = true;
        }
        if at != to {
            return Err(Error::InvalidTopology(format!(
                "path ends at node {at}, expected {to}"
            )));
        }
        Ok(Path { links, nodes, mask })
    }
}

/// A loop-free path, stored both as its ordered link sequence and as the
/// `|E|`-dimensional incidence mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    links: Vec<LinkId>,
    nodes: Vec<NodeId>,
    mask: Vec<bool>,
}

impl Path {
    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    /// Visited nodes, starting node first.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, link: LinkId) -> bool {
        self.mask.get(link).copied().unwrap_or(false)
    }

    /// Hop count `h(p)`.
    pub fn hops(&self) -> usize {
        self.links.len()
    }

    /// Sum of `weights` over the path's links.
    pub fn cost(&self, weights: &[f64]) -> f64 {
        self.links.iter().map(|&l| weights[l]).sum()
    }
}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        self.links.cmp(&other.links)
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.links.iter().map(|l| l.to_string()).collect();
        write!(f, "[{}]", ids.join(" "))
    }
}

/// Nonnegative, finite per-link weights (expected slots per link).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidWeights(format!("link {i} has weight {w}")));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<LinkId> for WeightVector {
    type Output = f64;

    fn index(&self, index: LinkId) -> &f64 {
        &self.0[index]
    }
}

/// All loop-free source-destination paths in lexicographic link-id order.
pub fn enumerate_paths(topology: &NetworkTopology, cap: usize) -> Result<Vec<Path>> {
    enumerate_paths_between(topology, topology.source, topology.destination, cap)
}

/// All loop-free `from -> to` paths in lexicographic link-id order.
pub fn enumerate_paths_between(
    topology: &NetworkTopology,
    from: NodeId,
    to: NodeId,
    cap: usize,
) -> Result<Vec<Path>> {
    if cap == 0 {
        return Err(Error::Config("path cap must be at least 1".into()));
    }
    if from >= topology.node_count || to >= topology.node_count || from == to {
        return Err(Error::InvalidTopology(format!("bad endpoints {from} -> {to}")));
    }
    let mut found = Vec::new();
    let mut on_path = vec![false; topology.node_count];
    let mut links = Vec::new();
    let mut nodes = vec![from];
    on_path[from] = true;
    dfs(
        topology,
        from,
        to,
        cap,
        &mut on_path,
        &mut links,
        &mut nodes,
        &mut found,
    )?;
    if found.is_empty() {
        return Err(Error::NoPath { from, to });
    }
    Ok(found)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    topology: &NetworkTopology,
    at: NodeId,
    to: NodeId,
    cap: usize,
    on_path: &mut [bool],
    links: &mut Vec<LinkId>,
    nodes: &mut Vec<NodeId>,
    found: &mut Vec<Path>,
) -> Result<()> {
    for &l in topology.out_links(at) {
        let head = topology.links[l].head;
        if on_path[head] {
            continue;
        }
        links.push(l);
        nodes.push(head);
        if head == to {
            if found.len() == cap {
                return Err(Error::PathExplosion { cap });
            }
            let mut mask = vec![false; topology.link_count()];
            for &i in links.iter() {
                mask[i] = true;
            }
            found.push(Path {
                links: links.clone(),
                nodes: nodes.clone(),
                mask,
            });
        } else {
            on_path[head] = true;
            dfs(topology, head, to, cap, on_path, links, nodes, found)?;
            on_path[head] = false;
        }
        links.pop();
        nodes.pop();
    }
    Ok(())
}

/// Cost-to-go towards the destination and the next-hop pointer realising it.
#[derive(Debug, Clone, PartialEq)]
pub struct CostToGo {
    /// `J_v`; `f64::INFINITY` for nodes that cannot reach the destination.
    pub cost: Vec<f64>,
    /// Smallest-id outgoing link attaining `J_v`; `None` at the destination
    /// and at unreachable nodes.
    pub next: Vec<Option<LinkId>>,
}

fn tie_tolerance(value: f64) -> f64 {
    1e-12 * value.abs().max(1.0)
}

/// Bellman-Ford over reversed links: minimum summed weight from every node to
/// the destination.
pub fn min_cost_to_destination(topology: &NetworkTopology, weights: &WeightVector) -> Result<CostToGo> {
    let w = weights.as_slice();
    if w.len() != topology.link_count() {
        return Err(Error::InvalidWeights(format!(
            "expected {} weights, got {}",
            topology.link_count(),
            w.len()
        )));
    }
    let n = topology.node_count;
    let mut cost = vec![f64::INFINITY; n];
    cost[topology.destination] = 0.0;
    for _ in 1..n.max(2) {
        let mut changed = false;
        for link in &topology.links {
            let through = w[link.id] + cost[link.head];
            if through < cost[link.tail] {
                cost[link.tail] = through;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let next = (0..n)
        .map(|v| {
            if v == topology.destination || !cost[v].is_finite() {
                return None;
            }
            topology.out[v]
                .iter()
                .copied()
                .find(|&l| w[l] + cost[topology.links[l].head] <= cost[v] + tie_tolerance(cost[v]))
        })
        .collect();
    Ok(CostToGo { cost, next })
}

/// Minimum-weight source-destination path; among (numerically) tied optima the
/// lexicographically smallest link sequence wins.
pub fn shortest_path(topology: &NetworkTopology, weights: &WeightVector) -> Result<Path> {
    let to_go = min_cost_to_destination(topology, weights)?;
    shortest_path_with(topology, weights, &to_go)
}

/// Like [`shortest_path`] but reuses an already computed cost-to-go table.
pub fn shortest_path_with(
    topology: &NetworkTopology,
    weights: &WeightVector,
    to_go: &CostToGo,
) -> Result<Path> {
    let (s, d) = (topology.source, topology.destination);
    if !to_go.cost[s].is_finite() {
        return Err(Error::NoPath { from: s, to: d });
    }
    // Walk tight links in id order; backtracking is only needed when
    // zero-weight cycles make the greedy walk revisit a node.
    let w = weights.as_slice();
    let mut on_path = vec![false; topology.node_count];
    let mut links = Vec::new();
    on_path[s] = true;
    if tight_dfs(topology, w, &to_go.cost, s, &mut on_path, &mut links) {
        topology.path_from_links(links)
    } else {
        Err(Error::NoPath { from: s, to: d })
    }
}

fn tight_dfs(
    topology: &NetworkTopology,
    w: &[f64],
    cost: &[f64],
    at: NodeId,
    on_path: &mut [bool],
    links: &mut Vec<LinkId>,
) -> bool {
    if at == topology.destination {
        return true;
    }
    for &l in &topology.out[at] {
        let head = topology.links[l].head;
        if on_path[head] || w[l] + cost[head] > cost[at] + tie_tolerance(cost[at]) {
            continue;
        }
        on_path[head] = true;
        links.push(l);
        if tight_dfs(topology, w, cost, head, on_path, links) {
            return true;
        }
        links.pop();
        on_path[head] = false;
    }
    false
}

/// Smallest-hop path from `from` to `to` avoiding `blocked` nodes (BFS, links
/// scanned in id order).
fn bfs_path(
    topology: &NetworkTopology,
    from: NodeId,
    to: NodeId,
    blocked: &[bool],
) -> Option<Vec<LinkId>> {
    if from == to {
        return Some(Vec::new());
    }
    let mut parent: Vec<Option<LinkId>> = vec![None; topology.node_count];
    let mut seen = blocked.to_vec();
    seen[from] = true;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for &l in &topology.out[v] {
            let w = topology.links[l].head;
            if seen[w] {
                continue;
            }
            seen[w] = true;
            parent[w] = Some(l);
            if w == to {
                let mut links = vec![l];
                let mut at = v;
                while at != from {
                    let pl = parent[at].expect("bfs parent");
                    links.push(pl);
                    at = topology.links[pl].tail;
                }
                links.reverse();
                return Some(links);
            }
            queue.push_back(w);
        }
    }
    None
}

/// A set of source-destination paths whose union covers every link that lies
/// on some loop-free path.
///
/// With an enumerated path set this is greedy set cover (most newly covered
/// links first, lexicographic ties). Without one, each uncovered link is
/// spliced between BFS detours, which may leave links uncovered on unusual
/// topologies.
pub fn covering_paths(topology: &NetworkTopology, enumerated: Option<&[Path]>) -> Vec<Path> {
    match enumerated {
        Some(paths) => greedy_cover(topology, paths),
        None => splice_cover(topology),
    }
}

fn greedy_cover(topology: &NetworkTopology, paths: &[Path]) -> Vec<Path> {
    let mut covered = vec![false; topology.link_count()];
    for p in paths {
        for &l in p.links() {
            covered[l] = true;
        }
    }
    // `covered` now marks coverable links; flip to "still needed".
    let mut needed = covered;
    let mut chosen = Vec::new();
    loop {
        let best = paths
            .iter()
            .map(|p| (p.links().iter().filter(|&&l| needed[l]).count(), p))
            .filter(|(gain, _)| *gain > 0)
            .fold(None::<(usize, &Path)>, |acc, (gain, p)| match acc {
                Some((g, _)) if g >= gain => acc,
                _ => Some((gain, p)),
            });
        let Some((_, path)) = best else { break };
        for &l in path.links() {
            needed[l] = false;
        }
        chosen.push(path.clone());
    }
    chosen
}

fn splice_cover(topology: &NetworkTopology) -> Vec<Path> {
    let mut covered = vec![false; topology.link_count()];
    let mut chosen = Vec::new();
    for link in &topology.links {
        if covered[link.id] {
            continue;
        }
        let mut blocked = vec![false; topology.node_count];
        blocked[link.head] = true;
        let Some(prefix) = bfs_path(topology, topology.source, link.tail, &blocked) else {
            continue;
        };
        let mut blocked = vec![false; topology.node_count];
        blocked[topology.source] = true;
        for &l in &prefix {
            blocked[topology.links[l].head] = true;
        }
        blocked[link.head] = false;
        let Some(suffix) = bfs_path(topology, link.head, topology.destination, &blocked) else {
            continue;
        };
        let mut links = prefix;
        links.push(link.id);
        links.extend(suffix);
        if let Ok(path) = topology.path_from_links(links) {
            for &l in path.links() {
                covered[l] = true;
            }
            chosen.push(path);
        }
    }
    chosen
}

/// Topology description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySpec {
    Line {
        hops: usize,
        #[serde(default = "two")]
        links_per_hop: usize,
    },
    Grid {
        #[serde(default = "four")]
        rows: usize,
        #[serde(default = "four")]
        cols: usize,
    },
    Edges {
        nodes: usize,
        edges: Vec<Link>,
        source: NodeId,
        destination: NodeId,
    },
}

fn two() -> usize {
    2
}

fn four() -> usize {
    4
}

impl TopologySpec {
    pub fn build(&self) -> Result<NetworkTopology> {
        match self {
            TopologySpec::Line {
                hops,
                links_per_hop,
            } => NetworkTopology::line(*hops, *links_per_hop),
            TopologySpec::Grid { rows, cols } => NetworkTopology::grid(*rows, *cols),
            TopologySpec::Edges {
                nodes,
                edges,
                source,
                destination,
            } => NetworkTopology::from_links(*nodes, edges.clone(), *source, *destination),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(w: &[f64]) -> WeightVector {
        WeightVector::new(w.to_vec()).unwrap()
    }

    #[test]
    fn single_edge_has_one_path() {
        let g = NetworkTopology::new(2, &[(0, 1)], 0, 1).unwrap();
        let paths = enumerate_paths(&g, 10).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].hops(), 1);
        assert_eq!(paths[0].mask(), &[true]);
    }

    #[test]
    fn two_hop_line_with_parallel_links() {
        let g = NetworkTopology::line(2, 2).unwrap();
        let paths = enumerate_paths(&g, 10).unwrap();
        let seqs: Vec<_> = paths.iter().map(|p| p.links().to_vec()).collect();
        assert_eq!(seqs, vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]]);
        assert!(paths.iter().all(|p| p.hops() == 2));
    }

    #[test]
    fn grid_paths_have_six_links() {
        let g = NetworkTopology::grid(4, 4).unwrap();
        let paths = enumerate_paths(&g, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(paths.len(), 20);
        assert_eq!(g.link_count(), 24);
        assert!(paths.iter().all(|p| p.hops() == 6));
    }

    #[test]
    fn cap_turns_blowup_into_error() {
        let g = NetworkTopology::line(4, 3).unwrap();
        assert!(matches!(
            enumerate_paths(&g, 80),
            Err(Error::PathExplosion { cap: 80 })
        ));
        assert_eq!(enumerate_paths(&g, 81).unwrap().len(), 81);
    }

    #[test]
    fn unreachable_destination_is_rejected() {
        let err = NetworkTopology::new(3, &[(0, 1), (2, 1)], 0, 2).unwrap_err();
        assert!(matches!(err, Error::NoPath { from: 0, to: 2 }));
    }

    #[test]
    fn duplicate_link_ids_are_rejected() {
        let links = vec![
            Link { id: 0, tail: 0, head: 1 },
            Link { id: 0, tail: 1, head: 2 },
        ];
        assert!(NetworkTopology::from_links(3, links, 0, 2).is_err());
    }

    #[test]
    fn parallel_links_pick_lighter_one() {
        let g = NetworkTopology::line(1, 2).unwrap();
        let p = shortest_path(&g, &weights(&[2.0, 4.0])).unwrap();
        assert_eq!(p.links(), &[0]);
        let p = shortest_path(&g, &weights(&[4.0, 2.0])).unwrap();
        assert_eq!(p.links(), &[1]);
    }

    #[test]
    fn equal_weights_pick_smallest_minimal_hop_path() {
        // 0 -> 3 directly via link 2, or through 1 and 2 via links 0, 1, 3.
        let g = NetworkTopology::new(4, &[(0, 1), (1, 2), (0, 3), (2, 3)], 0, 3).unwrap();
        let p = shortest_path(&g, &weights(&[1.0; 4])).unwrap();
        assert_eq!(p.links(), &[2]);
        let g = NetworkTopology::line(3, 2).unwrap();
        let p = shortest_path(&g, &weights(&[1.0; 6])).unwrap();
        assert_eq!(p.links(), &[0, 2, 4]);
    }

    #[test]
    fn chain_costs() {
        let g = NetworkTopology::new(3, &[(0, 1), (1, 2)], 0, 2).unwrap();
        let j = min_cost_to_destination(&g, &weights(&[1.0, 2.0])).unwrap();
        assert_eq!(j.cost, vec![3.0, 2.0, 0.0]);
        assert_eq!(j.next, vec![Some(0), Some(1), None]);
    }

    #[test]
    fn unreachable_nodes_get_infinite_cost() {
        let g = NetworkTopology::new(4, &[(0, 1), (1, 2), (2, 3)], 0, 2).unwrap();
        let j = min_cost_to_destination(&g, &weights(&[1.0, 1.0, 1.0])).unwrap();
        assert!(j.cost[3].is_infinite());
        assert_eq!(j.next[3], None);
    }

    #[test]
    fn zero_weight_cycle_still_yields_simple_path() {
        let g = NetworkTopology::new(3, &[(0, 1), (1, 0), (1, 2)], 0, 2).unwrap();
        let p = shortest_path(&g, &weights(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(p.links(), &[0, 2]);
    }

    #[test]
    fn negative_weights_are_rejected() {
        assert!(WeightVector::new(vec![1.0, -0.5]).is_err());
        assert!(WeightVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn greedy_cover_touches_every_link() {
        let g = NetworkTopology::grid(4, 4).unwrap();
        let paths = enumerate_paths(&g, DEFAULT_PATH_CAP).unwrap();
        let cover = covering_paths(&g, Some(&paths));
        let mut seen = vec![false; g.link_count()];
        for p in &cover {
            p.links().iter().for_each(|&l| seen[l] = true);
        }
        assert!(seen.iter().all(|&s| s));
        let line = NetworkTopology::line(3, 2).unwrap();
        let all = enumerate_paths(&line, 100).unwrap();
        assert_eq!(covering_paths(&line, Some(&all)).len(), 2);
        let spliced = covering_paths(&line, None);
        let mut seen = vec![false; line.link_count()];
        for p in &spliced {
            p.links().iter().for_each(|&l| seen[l] = true);
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn spec_parses_from_toml() {
        let spec: TopologySpec = toml::from_str("kind = \"line\"\nhops = 3\n").unwrap();
        assert_eq!(
            spec,
            TopologySpec::Line {
                hops: 3,
                links_per_hop: 2
            }
        );
        let spec: TopologySpec = toml::from_str(
            "kind = \"edges\"\nnodes = 3\nsource = 0\ndestination = 2\n\
             edges = [{id = 1, tail = 1, head = 2}, {id = 0, tail = 0, head = 1}]\n",
        )
        .unwrap();
        let g = spec.build().unwrap();
        assert_eq!(g.link(1).unwrap().tail, 1);
    }
}
