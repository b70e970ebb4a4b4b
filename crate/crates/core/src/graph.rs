//! Multigraphs with safe/unsafe edges, and the transformations the
//! reductions are built from: contraction, parallel splitting, safe-node
//! inflation and the antiparallel digraph.


use crate::cost::{is_nonnegative, Cost};
use crate::error::{Error, Result};
use crate::flow::{Capacity, FlowNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Safe,
    Unsafe,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: Cost,
    pub label: Label,
}

impl Edge {
    pub fn is_safe(&self) -> bool {
        self.label == Label::Safe
    }

    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Undirected loop-free multigraph. Nodes are `0..n`; an edge's id is its
/// index in [`MultiGraph::edges`] and never changes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MultiGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl MultiGraph {
    pub fn new(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, cost: Cost, label: Label) -> Result<usize> {
        let id = self.edges.len();
        if u >= self.n {
            return Err(Error::UnknownNode(u));
        }
        if v >= self.n {
            return Err(Error::UnknownNode(v));
        }
        if u == v {
            return Err(Error::SelfLoop(id));
        }
        if !is_nonnegative(&cost) {
            return Err(Error::NegativeCost(id));
        }
        self.edges.push(Edge { u, v, cost, label });
        Ok(id)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.u == v || e.v == v).count()
    }

    /// Edge ids incident to each node, in id order.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n];
        for (id, e) in self.edges.iter().enumerate() {
            inc[e.u].push(id);
            inc[e.v].push(id);
        }
        inc
    }

    pub fn total_cost(&self) -> Cost {
        self.edges.iter().map(|e| e.cost).sum()
    }

    pub fn cost_of(&self, ids: &[usize]) -> Cost {
        ids.iter().map(|&id| self.edges[id].cost).sum()
    }

    pub fn unsafe_edges(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&id| !self.edges[id].is_safe()).collect()
    }

    /// Membership mask for an edge-id list; rejects unknown ids.
    pub fn mask_of(&self, ids: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.edges.len()];
        for &id in ids {
            if id >= self.edges.len() {
                return Err(Error::UnknownEdge(id));
            }
            mask[id] = true;
        }
        Ok(mask)
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::UnknownNode(v))
        }
    }

    /// Component label of each node in `(V, {e : mask[e]})`, labels assigned
    /// in order of each component's smallest node.
    pub fn components(&self, mask: &[bool]) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n);
        for (id, e) in self.edges.iter().enumerate() {
            if mask[id] {
                uf.union(e.u, e.v);
            }
        }
        let mut label = vec![usize::MAX; self.n];
        let mut root_label = vec![usize::MAX; self.n];
        let mut next = 0;
        for v in 0..self.n {
            let r = uf.find(v);
            if root_label[r] == usize::MAX {
                root_label[r] = next;
                next += 1;
            }
            label[v] = root_label[r];
        }
        label
    }

    /// Unit-capacity edge connectivity between `s` and `t` using only the
    /// masked edges, optionally stopping once `limit` is reached.
    pub fn local_edge_connectivity(&self, mask: &[bool], s: usize, t: usize, limit: Option<i64>) -> i64 {
        let mut net = FlowNetwork::<i64>::new(self.n);
        for (id, e) in self.edges.iter().enumerate() {
            if mask[id] {
                net.add_undirected(e.u, e.v, 1);
            }
        }
        match limit {
            Some(l) => net.max_flow_bounded(s, t, l),
            None => net.max_flow(s, t),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // smaller root wins so labels stay deterministic
        if ra < rb {
            self.parent[rb] = ra;
        } else {
            self.parent[ra] = rb;
        }
        true
    }
}

/// A node subset `S` with `∅ ≠ S ≠ V` and the edges (or arcs) leaving it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub side: Vec<usize>,
    pub boundary: Vec<usize>,
}

impl Cut {
    pub fn from_side(g: &MultiGraph, in_side: &[bool]) -> Self {
        let side = (0..g.node_count()).filter(|&v| in_side[v]).collect();
        let boundary = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| in_side[e.u] != in_side[e.v])
            .map(|(id, _)| id)
            .collect();
        Self { side, boundary }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.side.binary_search(&v).is_ok()
    }
}

/// Max `s`-`t` flow on an undirected multigraph with per-edge capacities.
/// The returned cut is the set of nodes reachable from `s` in the residual
/// network.
pub fn max_flow_min_cut<C: Capacity>(g: &MultiGraph, caps: &[C], s: usize, t: usize) -> Result<(C, Cut)> {
    check_query(g.node_count(), s, t)?;
    if caps.len() != g.edge_count() {
        return Err(Error::InvalidQuery(format!(
            "{} capacities for {} edges",
            caps.len(),
            g.edge_count()
        )));
    }
    let mut net = FlowNetwork::new(g.node_count());
    for (e, &c) in g.edges().iter().zip(caps) {
        net.add_undirected(e.u, e.v, c);
    }
    let value = net.max_flow(s, t);
    let side = net.source_side(s);
    Ok((value, Cut::from_side(g, &side)))
}

fn check_query(n: usize, s: usize, t: usize) -> Result<()> {
    if s >= n {
        return Err(Error::UnknownNode(s));
    }
    if t >= n {
        return Err(Error::UnknownNode(t));
    }
    if s == t {
        return Err(Error::InvalidQuery(format!("source and sink are both node {s}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcOrigin {
    /// One direction of an undirected edge of the source graph.
    Edge(usize),
    /// The internal `v_in -> v_out` arc of a split node.
    NodeSplit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub cost: Cost,
    pub origin: ArcOrigin,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    arcs: Vec<Arc>,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Self { n, arcs: Vec::new() }
    }

    pub fn add_arc(&mut self, arc: Arc) -> usize {
        debug_assert!(arc.tail < self.n && arc.head < self.n);
        self.arcs.push(arc);
        self.arcs.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, id: usize) -> &Arc {
        &self.arcs[id]
    }
}

/// Max `s`-`t` flow on a digraph; the cut boundary lists arcs leaving the
/// residual-reachable side.
pub fn digraph_max_flow_min_cut<C: Capacity>(d: &Digraph, caps: &[C], s: usize, t: usize) -> Result<(C, Cut)> {
    check_query(d.node_count(), s, t)?;
    if caps.len() != d.arc_count() {
        return Err(Error::InvalidQuery(format!(
            "{} capacities for {} arcs",
            caps.len(),
            d.arc_count()
        )));
    }
    let mut net = FlowNetwork::new(d.node_count());
    for (a, &c) in d.arcs().iter().zip(caps) {
        net.add_arc(a.tail, a.head, c);
    }
    let value = net.max_flow(s, t);
    let in_side = net.source_side(s);
    let side = (0..d.node_count()).filter(|&v| in_side[v]).collect();
    let boundary = d
        .arcs()
        .iter()
        .enumerate()
        .filter(|(_, a)| in_side[a.tail] && !in_side[a.head])
        .map(|(id, _)| id)
        .collect();
    Ok((value, Cut { side, boundary }))
}

#[derive(Debug, Clone)]
pub struct Contraction {
    pub graph: MultiGraph,
    /// Old node -> new node; total and onto.
    pub node_map: Vec<usize>,
    /// New edge id -> original edge id.
    pub edge_origin: Vec<usize>,
}

/// Contracts every component of `(V, F)` to a single node. Edges that become
/// loops are dropped; parallel edges, costs and labels survive.
pub fn contract_edges(g: &MultiGraph, contracted: &[usize]) -> Result<Contraction> {
    let mask = g.mask_of(contracted)?;
    let node_map = g.components(&mask);
    let new_n = node_map.iter().copied().max().map_or(0, |m| m + 1);
    let mut graph = MultiGraph::new(new_n);
    let mut edge_origin = Vec::new();
    for (id, e) in g.edges().iter().enumerate() {
        let (a, b) = (node_map[e.u], node_map[e.v]);
        if a != b {
            graph.add_edge(a, b, e.cost, e.label)?;
            edge_origin.push(id);
        }
    }
    Ok(Contraction { graph, node_map, edge_origin })
}

/// Replaces edge `e` by `multiplicity[e]` parallel copies with the same
/// endpoints, cost and label. Returns the new graph and the copy -> original
/// map.
pub fn split_parallel(g: &MultiGraph, multiplicity: &[u32]) -> Result<(MultiGraph, Vec<usize>)> {
    if multiplicity.len() != g.edge_count() {
        return Err(Error::InvalidQuery(format!(
            "{} multiplicities for {} edges",
            multiplicity.len(),
            g.edge_count()
        )));
    }
    let mut out = MultiGraph::new(g.node_count());
    let mut copy_map = Vec::new();
    for (id, (e, &k)) in g.edges().iter().zip(multiplicity).enumerate() {
        if k == 0 {
            return Err(Error::ZeroCapacity(id));
        }
        for _ in 0..k {
            out.add_edge(e.u, e.v, e.cost, e.label)?;
            copy_map.push(id);
        }
    }
    Ok((out, copy_map))
}

/// Result of [`inflate_safe_nodes`]. Original edge `e` keeps id `e` in the
/// inflated graph; gadget edges follow.
#[derive(Debug, Clone)]
pub struct Inflation {
    pub graph: MultiGraph,
    /// Original edge id -> its endpoints in the inflated graph.
    pub attach: Vec<(usize, usize)>,
    /// Original node -> the inflated nodes standing for it.
    pub images: Vec<Vec<usize>>,
    /// Ids of the zero-cost gadget edges.
    pub gadget_edges: Vec<usize>,
}

/// Replaces each safe node of degree `d ≥ 1` by a zero-cost complete graph on
/// `d` nodes, re-attaching its incident edges to distinct gadget nodes in
/// edge-id order. Degree-0 safe nodes and unsafe nodes map to one node.
pub fn inflate_safe_nodes(g: &MultiGraph, safe: &[usize]) -> Result<Inflation> {
    let n = g.node_count();
    let mut is_safe = vec![false; n];
    for &v in safe {
        g.check_node(v)?;
        is_safe[v] = true;
    }
    let incidence = g.incidence();
    let mut images = Vec::with_capacity(n);
    let mut next = 0usize;
    for v in 0..n {
        let width = if is_safe[v] { incidence[v].len().max(1) } else { 1 };
        images.push((next..next + width).collect::<Vec<_>>());
        next += width;
    }
    // position of edge `id` in the incidence list of each endpoint
    let mut slot = vec![(0usize, 0usize); g.edge_count()];
    for v in 0..n {
        for (k, &id) in incidence[v].iter().enumerate() {
            if g.edge(id).u == v {
                slot[id].0 = k;
            } else {
                slot[id].1 = k;
            }
        }
    }
    let image_of = |v: usize, k: usize| if is_safe[v] { images[v][k] } else { images[v][0] };

    let mut graph = MultiGraph::new(next);
    let mut attach = Vec::with_capacity(g.edge_count());
    for (id, e) in g.edges().iter().enumerate() {
        let a = image_of(e.u, slot[id].0);
        let b = image_of(e.v, slot[id].1);
        graph.add_edge(a, b, e.cost, e.label)?;
        attach.push((a, b));
    }
    let mut gadget_edges = Vec::new();
    for v in (0..n).filter(|&v| is_safe[v]) {
        let nodes = &images[v];
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                gadget_edges.push(graph.add_edge(nodes[i], nodes[j], Cost::from_integer(0), Label::Safe)?);
            }
        }
    }
    Ok(Inflation { graph, attach, images, gadget_edges })
}

/// Each edge becomes two opposite arcs of the same cost, both recording the
/// edge as origin. Arcs `2e` and `2e + 1` come from edge `e`.
pub fn to_antiparallel_digraph(g: &MultiGraph) -> Digraph {
    let mut d = Digraph::new(g.node_count());
    for (id, e) in g.edges().iter().enumerate() {
        d.add_arc(Arc { tail: e.u, head: e.v, cost: e.cost, origin: ArcOrigin::Edge(id) });
        d.add_arc(Arc { tail: e.v, head: e.u, cost: e.cost, origin: ArcOrigin::Edge(id) });
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::cost_from_int;

    fn graph(n: usize, edges: &[(usize, usize, i64, Label)]) -> MultiGraph {
        let mut g = MultiGraph::new(n);
        for &(u, v, c, l) in edges {
            g.add_edge(u, v, cost_from_int(c), l).unwrap();
        }
        g
    }

    fn unit(n: usize, edges: &[(usize, usize)]) -> MultiGraph {
        let list: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1, Label::Safe)).collect();
        graph(n, &list)
    }

    #[test]
    fn rejects_loops_and_negative_costs() {
        let mut g = MultiGraph::new(2);
        assert!(matches!(g.add_edge(1, 1, cost_from_int(1), Label::Safe), Err(Error::SelfLoop(0))));
        assert!(matches!(g.add_edge(0, 1, cost_from_int(-1), Label::Safe), Err(Error::NegativeCost(0))));
        assert!(matches!(g.add_edge(0, 2, cost_from_int(1), Label::Safe), Err(Error::UnknownNode(2))));
    }

    #[test]
    fn path_bottleneck() {
        let g = unit(3, &[(0, 1), (1, 2)]);
        let (value, cut) = max_flow_min_cut(&g, &[2i64, 3], 0, 2).unwrap();
        assert_eq!(value, 2);
        assert_eq!(cut.side, vec![0]);
        assert_eq!(cut.boundary, vec![0]);
    }

    #[test]
    fn disconnected_pair_has_zero_flow() {
        let g = unit(4, &[(0, 1), (2, 3)]);
        let (value, cut) = max_flow_min_cut(&g, &[1i64, 1], 0, 3).unwrap();
        assert_eq!(value, 0);
        assert_eq!(cut.side, vec![0, 1]);
        assert!(cut.boundary.is_empty());
    }

    #[test]
    fn same_endpoints_is_an_invalid_query() {
        let g = unit(2, &[(0, 1)]);
        assert!(matches!(max_flow_min_cut(&g, &[1i64], 1, 1), Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn k4_pairs_have_flow_three() {
        let g = unit(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        // brute force over the 14 proper cuts: min |δ(S)| over S separating s,t
        let brute = |s: usize, t: usize| {
            (1u32..15)
                .filter(|m| (m >> s) & 1 == 1 && (m >> t) & 1 == 0)
                .map(|m| g.edges().iter().filter(|e| ((m >> e.u) & 1) != ((m >> e.v) & 1)).count() as i64)
                .min()
                .unwrap()
        };
        for s in 0..4 {
            for t in 0..4 {
                if s != t {
                    let (value, cut) = max_flow_min_cut(&g, &[1i64; 6], s, t).unwrap();
                    assert_eq!(value, 3);
                    assert_eq!(value, brute(s, t));
                    assert_eq!(cut.boundary.len(), 3);
                }
            }
        }
    }

    #[test]
    fn contract_triangle_edge() {
        let g = unit(3, &[(0, 1), (1, 2), (2, 0)]);
        let c = contract_edges(&g, &[0]).unwrap();
        assert_eq!(c.graph.node_count(), 2);
        assert_eq!(c.graph.edge_count(), 2);
        assert_eq!(c.node_map, vec![0, 0, 1]);
        assert_eq!(c.edge_origin, vec![1, 2]);
        assert!(c.graph.edges().iter().all(|e| (e.u, e.v) == (0, 1) || (e.u, e.v) == (1, 0)));
    }

    #[test]
    fn contract_nothing_is_identity() {
        let g = graph(3, &[(0, 1, 2, Label::Safe), (1, 2, 5, Label::Unsafe)]);
        let c = contract_edges(&g, &[]).unwrap();
        assert_eq!(c.graph, g);
        assert_eq!(c.node_map, vec![0, 1, 2]);
    }

    #[test]
    fn contract_unknown_edge_fails() {
        let g = unit(2, &[(0, 1)]);
        assert!(matches!(contract_edges(&g, &[4]), Err(Error::UnknownEdge(4))));
    }

    #[test]
    fn split_single_edge_three_ways() {
        let g = graph(2, &[(0, 1, 5, Label::Safe)]);
        let (s, map) = split_parallel(&g, &[3]).unwrap();
        assert_eq!(s.edge_count(), 3);
        assert!(s.edges().iter().all(|e| e.cost == cost_from_int(5) && e.u == 0 && e.v == 1));
        assert_eq!(map, vec![0, 0, 0]);
    }

    #[test]
    fn split_with_unit_multiplicity_is_identity() {
        let g = graph(3, &[(0, 1, 2, Label::Safe), (1, 2, 5, Label::Unsafe)]);
        let (s, map) = split_parallel(&g, &[1, 1]).unwrap();
        assert_eq!(s, g);
        assert_eq!(map, vec![0, 1]);
    }

    #[test]
    fn split_safe_triangle_p2() {
        let g = unit(3, &[(0, 1), (1, 2), (2, 0)]);
        let (s, _) = split_parallel(&g, &[3, 3, 3]).unwrap();
        assert_eq!(s.edge_count(), 9);
    }

    #[test]
    fn split_rejects_zero() {
        let g = unit(3, &[(0, 1), (1, 2)]);
        assert!(matches!(split_parallel(&g, &[1, 0]), Err(Error::ZeroCapacity(1))));
    }

    #[test]
    fn inflate_star_center() {
        let g = graph(4, &[(0, 1, 4, Label::Safe), (0, 2, 5, Label::Safe), (0, 3, 6, Label::Safe)]);
        let inf = inflate_safe_nodes(&g, &[0]).unwrap();
        assert_eq!(inf.images[0], vec![0, 1, 2]);
        assert_eq!(inf.graph.node_count(), 6);
        assert_eq!(inf.gadget_edges.len(), 3);
        for &id in &inf.gadget_edges {
            assert!(inf.graph.edge(id).cost == Cost::from_integer(0));
        }
        // leaves attach to distinct gadget nodes and keep their costs
        let centers: Vec<usize> = inf.attach.iter().map(|&(a, _)| a).collect();
        assert_eq!(centers, vec![0, 1, 2]);
        for id in 0..3 {
            assert_eq!(inf.graph.edge(id).cost, g.edge(id).cost);
        }
    }

    #[test]
    fn inflate_without_safe_nodes_is_identity() {
        let g = graph(3, &[(0, 1, 2, Label::Safe), (1, 2, 5, Label::Unsafe)]);
        let inf = inflate_safe_nodes(&g, &[]).unwrap();
        assert_eq!(inf.graph, g);
        assert!(inf.gadget_edges.is_empty());
    }

    #[test]
    fn inflate_isolated_safe_node_stays_single() {
        let g = unit(3, &[(0, 1)]);
        let inf = inflate_safe_nodes(&g, &[2]).unwrap();
        assert_eq!(inf.images[2].len(), 1);
        assert_eq!(inf.graph.node_count(), 3);
    }

    #[test]
    fn antiparallel_single_edge() {
        let g = graph(2, &[(0, 1, 4, Label::Unsafe)]);
        let d = to_antiparallel_digraph(&g);
        assert_eq!(d.arc_count(), 2);
        assert_eq!((d.arc(0).tail, d.arc(0).head), (0, 1));
        assert_eq!((d.arc(1).tail, d.arc(1).head), (1, 0));
        assert!(d.arcs().iter().all(|a| a.cost == cost_from_int(4) && a.origin == ArcOrigin::Edge(0)));
        assert_eq!(to_antiparallel_digraph(&MultiGraph::new(3)).arc_count(), 0);
    }
}
