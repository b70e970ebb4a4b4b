//! Two-stage Flexible Steiner Tree: keep the terminals connected after the
//! failure of any single unsafe edge.
//!
//! Stage one buys an approximate Steiner tree `F1`, ignoring labels. Stage
//! two contracts the safe edges of `F1`, makes the unsafe edges of `F1` free,
//! and asks iterative rounding for two edge-disjoint paths between every pair
//! of (mapped) terminals.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_traits::Zero;

use crate::cost::Cost;
use crate::error::{Error, Infeasibility, Result};
use crate::graph::{contract_edges, Contraction, Label, MultiGraph, UnionFind};
use crate::sndp::{jain_round, Requirements, SndpInstance};

/// Largest number of non-terminal nodes [`ExactSteiner`] will enumerate over.
pub const EXACT_STEINER_GUARD: usize = 16;

/// Feasibility model (inferred): `F` is feasible when the terminals lie in
/// one component of `(V, F)` and of `(V, F - e)` for every unsafe `e` in `F`.
#[derive(Debug, Clone)]
pub struct FstInstance {
    pub graph: MultiGraph,
    /// Sorted, duplicate-free, at least two nodes.
    pub terminals: Vec<usize>,
}

impl FstInstance {
    pub fn new(graph: MultiGraph, mut terminals: Vec<usize>) -> Result<Self> {
        terminals.sort_unstable();
        terminals.dedup();
        for &t in &terminals {
            graph.check_node(t)?;
        }
        if terminals.len() < 2 {
            return Err(Error::Validation("a Steiner instance needs at least two terminals".into()));
        }
        Ok(Self { graph, terminals })
    }
}

/// Pluggable first stage.
pub trait SteinerStage {
    fn name(&self) -> &'static str;
    /// Worst-case ratio of the tree cost to the optimal Steiner tree.
    fn ratio(&self) -> i64;
    fn tree(&self, g: &MultiGraph, terminals: &[usize]) -> Result<Vec<usize>>;
}

/// Shortest-path metric closure on the terminals, its MST expanded back into
/// paths, re-spanned and pruned of non-terminal leaves.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetricClosureMst;

/// Optimal Steiner tree by enumerating the Steiner node set.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSteiner;

impl SteinerStage for MetricClosureMst {
    fn name(&self) -> &'static str {
        "metric-closure-mst"
    }
    fn ratio(&self) -> i64 {
        2
    }
    fn tree(&self, g: &MultiGraph, terminals: &[usize]) -> Result<Vec<usize>> {
        steiner_tree_approx(g, terminals)
    }
}

impl SteinerStage for ExactSteiner {
    fn name(&self) -> &'static str {
        "exact-steiner"
    }
    fn ratio(&self) -> i64 {
        1
    }
    fn tree(&self, g: &MultiGraph, terminals: &[usize]) -> Result<Vec<usize>> {
        exact_steiner_tree(g, terminals)
    }
}

fn check_terminals_connected(g: &MultiGraph, terminals: &[usize]) -> Result<()> {
    let comp = g.components(&vec![true; g.edge_count()]);
    if let Some(&t) = terminals.iter().find(|&&t| comp[t] != comp[terminals[0]]) {
        let side = (0..g.node_count()).filter(|&v| comp[v] == comp[terminals[0]]).collect();
        return Err(Error::Infeasible(Infeasibility { pair: (terminals[0], t), required: 1, achieved: 0, cut_side: side }));
    }
    Ok(())
}

/// Dijkstra from `source`: distance and predecessor edge per node.
fn shortest_paths(g: &MultiGraph, incidence: &[Vec<usize>], source: usize) -> (Vec<Option<Cost>>, Vec<Option<usize>>) {
    let n = g.node_count();
    let mut dist: Vec<Option<Cost>> = vec![None; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    dist[source] = Some(Cost::zero());
    let mut heap = BinaryHeap::from([Reverse((Cost::zero(), source))]);
    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &id in &incidence[u] {
            let e = g.edge(id);
            let v = e.other(u);
            let nd = d + e.cost;
            if dist[v].is_none_or(|old| nd < old) {
                dist[v] = Some(nd);
                pred[v] = Some(id);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    (dist, pred)
}

/// Kruskal over the given edge ids, ordered by (cost, id).
fn minimum_spanning_forest(g: &MultiGraph, candidates: &[usize]) -> Vec<usize> {
    let mut order = candidates.to_vec();
    order.sort_by(|&a, &b| g.edge(a).cost.cmp(&g.edge(b).cost).then(a.cmp(&b)));
    let mut uf = UnionFind::new(g.node_count());
    let mut out: Vec<usize> = order.into_iter().filter(|&id| uf.union(g.edge(id).u, g.edge(id).v)).collect();
    out.sort_unstable();
    out
}

/// Repeatedly removes leaves that are not terminals.
fn prune_steiner_leaves(g: &MultiGraph, edges: &mut Vec<usize>, terminals: &[usize]) {
    let mut is_terminal = vec![false; g.node_count()];
    for &t in terminals {
        is_terminal[t] = true;
    }
    loop {
        let mut degree = vec![0usize; g.node_count()];
        for &id in edges.iter() {
            degree[g.edge(id).u] += 1;
            degree[g.edge(id).v] += 1;
        }
        let before = edges.len();
        edges.retain(|&id| {
            let e = g.edge(id);
            !((degree[e.u] == 1 && !is_terminal[e.u]) || (degree[e.v] == 1 && !is_terminal[e.v]))
        });
        if edges.len() == before {
            return;
        }
    }
}

/// Metric-closure MST 2-approximation; safe and unsafe edges are treated alike.
pub fn steiner_tree_approx(g: &MultiGraph, terminals: &[usize]) -> Result<Vec<usize>> {
    for &t in terminals {
        g.check_node(t)?;
    }
    if terminals.len() < 2 {
        return Ok(Vec::new());
    }
    check_terminals_connected(g, terminals)?;
    let incidence = g.incidence();
    let trees: Vec<_> = terminals.iter().map(|&t| shortest_paths(g, &incidence, t)).collect();

    let k = terminals.len();
    let mut closure = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let d = trees[a].0[terminals[b]].expect("terminals are connected");
            closure.push((d, a, b));
        }
    }
    closure.sort();
    let mut uf = UnionFind::new(k);
    let mut path_edges = vec![false; g.edge_count()];
    for (_, a, b) in closure {
        if uf.union(a, b) {
            let pred = &trees[a].1;
            let mut v = terminals[b];
            while v != terminals[a] {
                let id = pred[v].expect("reachable node has a predecessor");
                path_edges[id] = true;
                v = g.edge(id).other(v);
            }
        }
    }
    let candidates: Vec<usize> = (0..g.edge_count()).filter(|&id| path_edges[id]).collect();
    let mut tree = minimum_spanning_forest(g, &candidates);
    prune_steiner_leaves(g, &mut tree, terminals);
    Ok(tree)
}

/// Optimal Steiner tree: the minimum over Steiner node sets `S` of the MST of
/// the subgraph induced by `T ∪ S`.
pub fn exact_steiner_tree(g: &MultiGraph, terminals: &[usize]) -> Result<Vec<usize>> {
    for &t in terminals {
        g.check_node(t)?;
    }
    if terminals.len() < 2 {
        return Ok(Vec::new());
    }
    check_terminals_connected(g, terminals)?;
    let n = g.node_count();
    let mut is_terminal = vec![false; n];
    for &t in terminals {
        is_terminal[t] = true;
    }
    let steiner: Vec<usize> = (0..n).filter(|&v| !is_terminal[v]).collect();
    if steiner.len() > EXACT_STEINER_GUARD {
        return Err(Error::TooLarge(format!(
            "{} non-terminal nodes exceed the exact Steiner guard of {EXACT_STEINER_GUARD}",
            steiner.len()
        )));
    }
    let mut best: Option<(Cost, Vec<usize>)> = None;
    for bits in 0u32..(1u32 << steiner.len()) {
        let mut inside = is_terminal.clone();
        for (k, &v) in steiner.iter().enumerate() {
            if (bits >> k) & 1 == 1 {
                inside[v] = true;
            }
        }
        let candidates: Vec<usize> =
            (0..g.edge_count()).filter(|&id| inside[g.edge(id).u] && inside[g.edge(id).v]).collect();
        let forest = minimum_spanning_forest(g, &candidates);
        let mut uf = UnionFind::new(n);
        for &id in &forest {
            uf.union(g.edge(id).u, g.edge(id).v);
        }
        let root = uf.find(terminals[0]);
        if !terminals.iter().all(|&t| uf.find(t) == root) {
            continue;
        }
        let mut tree: Vec<usize> = forest.into_iter().filter(|&id| uf.find(g.edge(id).u) == root).collect();
        prune_steiner_leaves(g, &mut tree, terminals);
        let cost = g.cost_of(&tree);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, tree));
        }
    }
    Ok(best.expect("connected terminals admit a tree").1)
}

#[derive(Debug, Clone)]
pub struct SecondStageInstance {
    /// `G / (F1 ∩ S)` with costs `c''`; every edge labelled safe.
    pub contraction: Contraction,
    pub terminals: Vec<usize>,
    pub requirements: Requirements,
}

/// Builds the augmentation instance for a first-stage tree `F1`.
pub fn build_second_stage(g: &MultiGraph, first_stage: &[usize], terminals: &[usize]) -> Result<SecondStageInstance> {
    let in_tree = g.mask_of(first_stage)?;
    let contracted: Vec<usize> = first_stage.iter().copied().filter(|&id| g.edge(id).is_safe()).collect();
    let Contraction { graph: contracted_graph, node_map, edge_origin } = contract_edges(g, &contracted)?;
    let mut graph = MultiGraph::new(contracted_graph.node_count());
    for (k, e) in contracted_graph.edges().iter().enumerate() {
        let origin = edge_origin[k];
        let cost = if in_tree[origin] { Cost::zero() } else { e.cost };
        graph.add_edge(e.u, e.v, cost, Label::Safe)?;
    }
    // a contracted node joins T2 exactly when its component holds a terminal
    let mut mapped: Vec<usize> = terminals.iter().map(|&t| node_map[t]).collect();
    mapped.sort_unstable();
    mapped.dedup();
    let requirements = Requirements::uniform(&mapped, 2);
    Ok(SecondStageInstance {
        contraction: Contraction { graph, node_map, edge_origin },
        terminals: mapped,
        requirements,
    })
}

#[derive(Debug, Clone)]
pub struct FstSolution {
    pub edges: Vec<usize>,
    pub first_stage: Vec<usize>,
    /// Second-stage edges as original edge ids.
    pub second_stage: Vec<usize>,
    pub stage_one: &'static str,
}

pub fn solve_fst(inst: &FstInstance) -> Result<FstSolution> {
    solve_fst_with(inst, &MetricClosureMst)
}

pub fn solve_fst_with(inst: &FstInstance, stage_one: &dyn SteinerStage) -> Result<FstSolution> {
    let g = &inst.graph;
    let first_stage = stage_one.tree(g, &inst.terminals)?;
    let second = build_second_stage(g, &first_stage, &inst.terminals)?;
    let second_stage: Vec<usize> = if second.terminals.len() < 2 {
        Vec::new()
    } else {
        let run = jain_round(&SndpInstance {
            graph: second.contraction.graph.clone(),
            requirements: second.requirements.clone(),
        })?;
        let mut ids: Vec<usize> = run.edges.iter().map(|&k| second.contraction.edge_origin[k]).collect();
        ids.sort_unstable();
        ids
    };
    let mut edges: Vec<usize> = first_stage.iter().chain(&second_stage).copied().collect();
    edges.sort_unstable();
    edges.dedup();
    match verify_fst(inst, &edges)? {
        FstVerdict::Feasible => Ok(FstSolution { edges, first_stage, second_stage, stage_one: stage_one.name() }),
        FstVerdict::Violated { failed, separated } => Err(Error::Infeasible(Infeasibility {
            pair: separated,
            required: 1,
            achieved: 0,
            cut_side: failed.into_iter().collect(),
        })),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FstVerdict {
    Feasible,
    /// After removing `failed` (if any), terminals `separated` fall apart.
    Violated { failed: Option<usize>, separated: (usize, usize) },
}

impl FstVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FstVerdict::Feasible)
    }
}

/// The terminals must share a component of `(V, F)` and of `(V, F - e)` for
/// every unsafe `e ∈ F`.
pub fn verify_fst(inst: &FstInstance, edges: &[usize]) -> Result<FstVerdict> {
    let g = &inst.graph;
    let mut mask = g.mask_of(edges)?;
    let split = |mask: &[bool]| {
        let comp = g.components(mask);
        let t0 = inst.terminals[0];
        inst.terminals.iter().find(|&&t| comp[t] != comp[t0]).map(|&t| (t0, t))
    };
    if let Some(separated) = split(&mask) {
        return Ok(FstVerdict::Violated { failed: None, separated });
    }
    for &id in edges {
        if g.edge(id).is_safe() {
            continue;
        }
        mask[id] = false;
        let broken = split(&mask);
        mask[id] = true;
        if let Some(separated) = broken {
            return Ok(FstVerdict::Violated { failed: Some(id), separated });
        }
    }
    Ok(FstVerdict::Feasible)
}
