//! Node-connectivity FGC: unsafe nodes may fail, safe nodes never do.
//!
//! A subgraph `H` is feasible when for every pair `{s, t}` and every set `Û`
//! of unsafe nodes other than `s, t`, `H - Û` still has
//! `max(0, r_st - |Û|)` edge-disjoint `s`-`t` paths. Equivalently, the
//! q-connectivity of every pair, with `q = ∞` on safe nodes and `q = 1` on
//! unsafe ones, is at least `r_st`.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use crate::combinatorics::{binomial, for_each_combination};
use crate::cost::{cost_to_f64, Cost};
use crate::error::{Error, Infeasibility, Result};
use crate::fgc::FAILURE_SET_GUARD;
use crate::flow::FlowNetwork;
use crate::graph::{inflate_safe_nodes, to_antiparallel_digraph, ArcOrigin, Digraph, Inflation, MultiGraph};
use crate::lp::{CutLpSolver, CutOracle, CutRow, Fixing, EPS_ROUND, EPS_SEP};
use crate::sndp::Requirements;

/// Branch-and-bound node cap for the rooted solver.
pub const MAX_BRANCH_NODES: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NcDemands {
    Pairs(BTreeMap<(usize, usize), u32>),
    Uniform(u32),
}

#[derive(Debug, Clone)]
pub struct NcFgcInstance {
    /// Edge labels are unused.
    pub graph: MultiGraph,
    pub safe: Vec<bool>,
    pub demands: NcDemands,
}

impl NcFgcInstance {
    pub fn new(graph: MultiGraph, safe_nodes: &[usize], demands: NcDemands) -> Result<Self> {
        let mut safe = vec![false; graph.node_count()];
        for &v in safe_nodes {
            graph.check_node(v)?;
            safe[v] = true;
        }
        if let NcDemands::Pairs(map) = &demands {
            for &(i, j) in map.keys() {
                graph.check_node(i)?;
                graph.check_node(j)?;
                if i >= j {
                    return Err(Error::Validation(format!("pair ({i}, {j}) must satisfy i < j")));
                }
            }
        }
        Ok(Self { graph, safe, demands })
    }

    pub fn safe_nodes(&self) -> Vec<usize> {
        (0..self.safe.len()).filter(|&v| self.safe[v]).collect()
    }

    pub fn unsafe_nodes(&self) -> Vec<usize> {
        (0..self.safe.len()).filter(|&v| !self.safe[v]).collect()
    }

    /// `q_v`: `None` (unbounded) for safe nodes, one for unsafe nodes.
    pub fn node_capacities(&self) -> Vec<Option<i64>> {
        self.safe.iter().map(|&s| if s { None } else { Some(1) }).collect()
    }

    pub fn requirements(&self) -> Requirements {
        match &self.demands {
            NcDemands::Pairs(map) => {
                let mut r = Requirements::new();
                for (&(i, j), &v) in map {
                    r.set(i, j, v as i64);
                }
                r
            }
            NcDemands::Uniform(p) => {
                let nodes: Vec<usize> = (0..self.graph.node_count()).collect();
                Requirements::uniform(&nodes, *p as i64)
            }
        }
    }
}

fn split_network(h: &MultiGraph, mask: &[bool], q: &[Option<i64>], s: usize, t: usize) -> FlowNetwork<i64> {
    let n = h.node_count();
    let unbounded = h.edge_count() as i64 + 1;
    let mut net = FlowNetwork::new(2 * n);
    for v in 0..n {
        let cap = if v == s || v == t { unbounded } else { q[v].unwrap_or(unbounded).min(unbounded) };
        net.add_arc(2 * v, 2 * v + 1, cap);
    }
    for (id, e) in h.edges().iter().enumerate() {
        if mask[id] {
            net.add_arc(2 * e.u + 1, 2 * e.v, 1);
            net.add_arc(2 * e.v + 1, 2 * e.u, 1);
        }
    }
    net
}

/// Edge-disjoint `s`-`t` paths in the masked subgraph with every inner node
/// `v` on at most `q[v]` of them (`None` = unbounded).
pub fn q_connectivity_within(h: &MultiGraph, mask: &[bool], q: &[Option<i64>], s: usize, t: usize, limit: Option<i64>) -> i64 {
    let mut net = split_network(h, mask, q, s, t);
    match limit {
        Some(l) => net.max_flow_bounded(2 * s, 2 * t + 1, l),
        None => net.max_flow(2 * s, 2 * t + 1),
    }
}

pub fn q_connectivity(h: &MultiGraph, q: &[Option<i64>], s: usize, t: usize) -> Result<i64> {
    h.check_node(s)?;
    h.check_node(t)?;
    if s == t {
        return Err(Error::InvalidQuery(format!("source and sink are both node {s}")));
    }
    if q.len() != h.node_count() {
        return Err(Error::InvalidQuery(format!("{} node capacities for {} nodes", q.len(), h.node_count())));
    }
    Ok(q_connectivity_within(h, &vec![true; h.edge_count()], q, s, t, None))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NcVerdict {
    Feasible,
    /// With `removed` deleted, `pair` keeps only `connectivity` of the
    /// `required` edge-disjoint paths.
    Violated { pair: (usize, usize), removed: Vec<usize>, connectivity: i64, required: i64 },
}

impl NcVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, NcVerdict::Feasible)
    }
}

/// Runs both the failure enumeration and the q-connectivity test; they must
/// agree on every pair.
pub fn verify_ncfgc(inst: &NcFgcInstance, edges: &[usize]) -> Result<NcVerdict> {
    let g = &inst.graph;
    let mask = g.mask_of(edges)?;
    let reqs = inst.requirements();
    let q = inst.node_capacities();
    let unsafe_nodes = inst.unsafe_nodes();
    let incidence = g.incidence();

    for ((s, t), r) in reqs.iter() {
        let candidates: Vec<usize> = unsafe_nodes.iter().copied().filter(|&v| v != s && v != t).collect();
        let work: u128 = (0..r as usize).map(|k| binomial(candidates.len(), k)).sum();
        if work > FAILURE_SET_GUARD {
            return Err(Error::TooLarge(format!("{work} unsafe-node failure sets exceed the {FAILURE_SET_GUARD} guard")));
        }
    }

    let mut first: Option<NcVerdict> = None;
    for ((s, t), r) in reqs.iter() {
        let candidates: Vec<usize> = unsafe_nodes.iter().copied().filter(|&v| v != s && v != t).collect();
        let mut enumerated: Option<NcVerdict> = None;
        for k in 0..(r as usize).min(candidates.len() + 1) {
            let need = r - k as i64;
            let found = for_each_combination(&candidates, k, |removed| {
                let mut sub = mask.clone();
                for &v in removed {
                    for &id in &incidence[v] {
                        sub[id] = false;
                    }
                }
                let lambda = g.local_edge_connectivity(&sub, s, t, Some(need));
                if lambda < need {
                    ControlFlow::Break(NcVerdict::Violated {
                        pair: (s, t),
                        removed: removed.to_vec(),
                        connectivity: lambda,
                        required: need,
                    })
                } else {
                    ControlFlow::Continue(())
                }
            });
            if let ControlFlow::Break(v) = found {
                enumerated = Some(v);
                break;
            }
        }
        let by_q = q_connectivity_within(g, &mask, &q, s, t, Some(r)) >= r;
        if by_q == enumerated.is_some() {
            return Err(Error::Validation(format!(
                "failure enumeration and q-connectivity disagree on pair ({s}, {t})"
            )));
        }
        if first.is_none() {
            first = enumerated;
        }
    }
    Ok(first.unwrap_or(NcVerdict::Feasible))
}

/// Original pair, its requirement, and one representative image node per end.
pub type MappedDemand = ((usize, usize), i64, (usize, usize));

/// The inflated instance: safe nodes replaced by zero-cost cliques.
#[derive(Debug, Clone)]
pub struct InflatedInstance {
    pub inflation: Inflation,
    pub demands: Vec<MappedDemand>,
}

pub fn reduce_by_inflation(inst: &NcFgcInstance) -> Result<InflatedInstance> {
    let inflation = inflate_safe_nodes(&inst.graph, &inst.safe_nodes())?;
    let demands = inst
        .requirements()
        .iter()
        .map(|((s, t), r)| ((s, t), r, (inflation.images[s][0], inflation.images[t][0])))
        .collect();
    Ok(InflatedInstance { inflation, demands })
}

/// Edge-disjoint paths between the image sets of `s` and `t` in the inflated
/// graph when every other node (gadget nodes included) has capacity one.
pub fn inflated_connectivity(inflated: &InflatedInstance, s: usize, t: usize) -> i64 {
    let g = &inflated.inflation.graph;
    let images = &inflated.inflation.images;
    let n = g.node_count();
    let unbounded = g.edge_count() as i64 + 1;
    let mut endpoint = vec![false; n];
    for &v in images[s].iter().chain(&images[t]) {
        endpoint[v] = true;
    }
    let source = 2 * n;
    let sink = 2 * n + 1;
    let mut net = FlowNetwork::<i64>::new(2 * n + 2);
    for v in 0..n {
        net.add_arc(2 * v, 2 * v + 1, if endpoint[v] { unbounded } else { 1 });
    }
    for e in g.edges() {
        net.add_arc(2 * e.u + 1, 2 * e.v, 1);
        net.add_arc(2 * e.v + 1, 2 * e.u, 1);
    }
    for &v in &images[s] {
        net.add_arc(source, 2 * v, unbounded);
    }
    for &v in &images[t] {
        net.add_arc(2 * v + 1, sink, unbounded);
    }
    net.max_flow(source, sink)
}

/// Directed rooted instance: `p` capacity-respecting arc-disjoint dipaths
/// from `root` to every other node.
#[derive(Debug, Clone)]
pub struct RootedQConnInstance {
    pub digraph: Digraph,
    pub root: usize,
    pub p: i64,
    /// `q_v`: `p` for safe nodes, one for unsafe nodes.
    pub capacity: Vec<i64>,
}

fn rooted_network(inst: &RootedQConnInstance, arc_caps: &[f64], t: usize) -> (FlowNetwork<f64>, Vec<usize>) {
    let d = &inst.digraph;
    let n = d.node_count();
    let unbounded = (d.arc_count() as f64) + inst.p as f64 + 1.0;
    let mut net = FlowNetwork::new(2 * n);
    for v in 0..n {
        let cap = if v == inst.root || v == t { unbounded } else { inst.capacity[v] as f64 };
        net.add_arc(2 * v, 2 * v + 1, cap);
    }
    let arc_index = d.arcs().iter().zip(arc_caps).map(|(a, &c)| net.add_arc(2 * a.tail + 1, 2 * a.head, c)).collect();
    (net, arc_index)
}

/// Exact directed q-connectivity from the root to `t` using the masked arcs.
pub fn rooted_connectivity(inst: &RootedQConnInstance, arcs: &[bool], t: usize) -> i64 {
    let d = &inst.digraph;
    let n = d.node_count();
    let unbounded = d.arc_count() as i64 + inst.p + 1;
    let mut net = FlowNetwork::<i64>::new(2 * n);
    for v in 0..n {
        let cap = if v == inst.root || v == t { unbounded } else { inst.capacity[v] };
        net.add_arc(2 * v, 2 * v + 1, cap);
    }
    for (a, &on) in d.arcs().iter().zip(arcs) {
        if on {
            net.add_arc(2 * a.tail + 1, 2 * a.head, 1);
        }
    }
    net.max_flow(2 * inst.root, 2 * t + 1)
}

/// Cut rows for the rooted problem: for every `t`, the node-split min cut
/// must carry `p`, where split arcs contribute their fixed capacity.
struct RootedOracle<'a> {
    inst: &'a RootedQConnInstance,
}

impl CutOracle for RootedOracle<'_> {
    fn separate(&mut self, x: &[f64]) -> Vec<CutRow> {
        let inst = self.inst;
        let n = inst.digraph.node_count();
        let mut rows: Vec<CutRow> = Vec::new();
        for t in (0..n).filter(|&t| t != inst.root) {
            let (mut net, _) = rooted_network(inst, x, t);
            let value = net.max_flow(2 * inst.root, 2 * t + 1);
            if value >= inst.p as f64 - EPS_SEP {
                continue;
            }
            let side = net.source_side(2 * inst.root);
            let fixed: i64 = (0..n)
                .filter(|&v| v != inst.root && v != t && side[2 * v] && !side[2 * v + 1])
                .map(|v| inst.capacity[v])
                .sum();
            let terms: Vec<(usize, f64)> = inst
                .digraph
                .arcs()
                .iter()
                .enumerate()
                .filter(|(_, a)| side[2 * a.tail + 1] && !side[2 * a.head])
                .map(|(id, _)| (id, 1.0))
                .collect();
            let row = CutRow { terms, rhs: (inst.p - fixed) as f64 };
            if !rows.contains(&row) {
                rows.push(row);
            }
        }
        rows
    }
}

#[derive(Debug, Clone)]
pub struct RootedSolution {
    pub arcs: Vec<usize>,
    pub cost: Cost,
    /// Whether the root LP vertex was already integral.
    pub lp_integral: bool,
    pub branch_nodes: usize,
}

struct BranchState<'a> {
    inst: &'a RootedQConnInstance,
    costs: Vec<f64>,
    exact_costs: Vec<Cost>,
    rows: Vec<CutRow>,
    best: Option<(Cost, Vec<usize>)>,
    nodes: usize,
    root_integral: Option<bool>,
}

impl BranchState<'_> {
    fn explore(&mut self, fixed: &mut Vec<Fixing>) -> Result<()> {
        self.nodes += 1;
        if self.nodes > MAX_BRANCH_NODES {
            return Err(Error::IterationCap(MAX_BRANCH_NODES));
        }
        let mut oracle = RootedOracle { inst: self.inst };
        let sol = match CutLpSolver::default().solve(&self.costs, fixed, std::mem::take(&mut self.rows), &mut oracle) {
            Ok(sol) => sol,
            Err(Error::InfeasibleLp { .. }) => return Ok(()),
            Err(e) => return Err(e),
        };
        self.rows = sol.rows.clone();
        if let Some((best, _)) = &self.best {
            if sol.objective >= cost_to_f64(best) - 1e-9 {
                return Ok(());
            }
        }
        let branch_on = (0..sol.x.len())
            .filter(|&a| sol.x[a] > EPS_ROUND && sol.x[a] < 1.0 - EPS_ROUND)
            .min_by(|&a, &b| {
                let da = (sol.x[a] - 0.5).abs();
                let db = (sol.x[b] - 0.5).abs();
                da.partial_cmp(&db).expect("finite LP values").then(a.cmp(&b))
            });
        if self.root_integral.is_none() {
            self.root_integral = Some(branch_on.is_none());
        }
        match branch_on {
            None => {
                let arcs: Vec<usize> = (0..sol.x.len()).filter(|&a| sol.x[a] > 0.5).collect();
                let mut on = vec![false; sol.x.len()];
                for &a in &arcs {
                    on[a] = true;
                }
                let n = self.inst.digraph.node_count();
                if let Some(t) = (0..n).find(|&t| t != self.inst.root && rooted_connectivity(self.inst, &on, t) < self.inst.p) {
                    return Err(Error::Validation(format!("rounded LP vertex misses node {t}")));
                }
                let cost: Cost = arcs.iter().map(|&a| self.exact_costs[a]).sum();
                if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    self.best = Some((cost, arcs));
                }
                Ok(())
            }
            Some(a) => {
                for choice in [Fixing::One, Fixing::Zero] {
                    fixed[a] = choice;
                    self.explore(fixed)?;
                }
                fixed[a] = Fixing::Free;
                Ok(())
            }
        }
    }
}

/// Minimum-cost arc set meeting the rooted requirement. Cut-LP row
/// generation, with depth-first branch-and-bound on fractional arcs when the
/// LP vertex is not integral.
pub fn solve_rooted_qconn(inst: &RootedQConnInstance) -> Result<RootedSolution> {
    let d = &inst.digraph;
    let n = d.node_count();
    if inst.root >= n {
        return Err(Error::UnknownNode(inst.root));
    }
    let all = vec![true; d.arc_count()];
    for t in (0..n).filter(|&t| t != inst.root) {
        let achieved = rooted_connectivity(inst, &all, t);
        if achieved < inst.p {
            let (mut net, _) = rooted_network(inst, &vec![1.0; d.arc_count()], t);
            net.max_flow(2 * inst.root, 2 * t + 1);
            let side = net.source_side(2 * inst.root);
            return Err(Error::Infeasible(Infeasibility {
                pair: (inst.root, t),
                required: inst.p,
                achieved,
                cut_side: (0..n).filter(|&v| side[2 * v + 1]).collect(),
            }));
        }
    }
    let exact_costs: Vec<Cost> = d.arcs().iter().map(|a| a.cost).collect();
    let mut state = BranchState {
        inst,
        costs: exact_costs.iter().map(cost_to_f64).collect(),
        exact_costs,
        rows: Vec::new(),
        best: None,
        nodes: 0,
        root_integral: None,
    };
    let mut fixed = vec![Fixing::Free; d.arc_count()];
    state.explore(&mut fixed)?;
    let (cost, arcs) = state.best.expect("a feasible digraph has an optimal arc set");
    Ok(RootedSolution { arcs, cost, lp_integral: state.root_integral.unwrap_or(true), branch_nodes: state.nodes })
}

#[derive(Debug, Clone)]
pub struct NcSolution {
    pub edges: Vec<usize>,
    pub root: usize,
    pub directed: RootedSolution,
}

/// Uniform `p`-NC-FGC: bidirect every edge, root at the lowest safe node,
/// solve rooted q-connectivity with `q = p` on safe and `q = 1` on unsafe
/// nodes, and keep every edge with at least one chosen arc.
pub fn solve_p_ncfgc(inst: &NcFgcInstance) -> Result<NcSolution> {
    let p = match inst.demands {
        NcDemands::Uniform(p) if p >= 1 => p as i64,
        _ => return Err(Error::Unsupported("only a uniform requirement p ≥ 1 is solved".into())),
    };
    let Some(root) = inst.safe_nodes().first().copied() else {
        return Err(Error::Unsupported("at least one safe node is required".into()));
    };
    let g = &inst.graph;
    let rooted = RootedQConnInstance {
        digraph: to_antiparallel_digraph(g),
        root,
        p,
        capacity: inst.safe.iter().map(|&s| if s { p } else { 1 }).collect(),
    };
    let directed = solve_rooted_qconn(&rooted)?;
    let mut edges: Vec<usize> = directed
        .arcs
        .iter()
        .map(|&a| match rooted.digraph.arc(a).origin {
            ArcOrigin::Edge(e) => e,
            ArcOrigin::NodeSplit(v) => unreachable!("antiparallel digraph has no split arc at {v}"),
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    match verify_ncfgc(inst, &edges)? {
        NcVerdict::Feasible => Ok(NcSolution { edges, root, directed }),
        NcVerdict::Violated { pair, connectivity, required, removed } => Err(Error::Infeasible(Infeasibility {
            pair,
            required,
            achieved: connectivity,
            cut_side: removed,
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::cost_from_int;
    use crate::graph::Label;

    fn graph(n: usize, edges: &[(usize, usize)]) -> MultiGraph {
        let mut g = MultiGraph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v, cost_from_int(1), Label::Safe).unwrap();
        }
        g
    }

    #[test]
    fn path_through_unsafe_plus_direct_edge() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(q_connectivity(&g, &[None, Some(1), None], 0, 2).unwrap(), 2);
    }

    #[test]
    fn shared_unsafe_node_is_a_bottleneck() {
        // 0 -> 1 -> 2 -> 4 and 0 -> 3 -> 2 -> 4 share unsafe node 2
        let g = graph(5, &[(0, 1), (1, 2), (0, 3), (3, 2), (2, 4), (2, 4)]);
        assert_eq!(q_connectivity(&g, &[None, None, Some(1), None, None], 0, 4).unwrap(), 1);
        assert_eq!(q_connectivity(&g, &[None; 5], 0, 4).unwrap(), 2);
        assert!(q_connectivity(&g, &[None; 5], 2, 2).is_err());
    }

    fn star(leaves: usize, p: NcDemands, center_safe: bool) -> NcFgcInstance {
        let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
        let safe: Vec<usize> = if center_safe { vec![0] } else { (1..=leaves).collect() };
        NcFgcInstance::new(graph(leaves + 1, &edges), &safe, p).unwrap()
    }

    #[test]
    fn star_with_unsafe_center() {
        let inst = star(3, NcDemands::Uniform(1), false);
        assert!(verify_ncfgc(&inst, &[0, 1, 2]).unwrap().is_feasible());
        let inst = star(3, NcDemands::Uniform(2), false);
        match verify_ncfgc(&inst, &[0, 1, 2]).unwrap() {
            NcVerdict::Violated { pair, removed, .. } => {
                assert_eq!(pair, (0, 1));
                assert!(removed.is_empty());
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn star_spokes_are_the_unique_solution() {
        let inst = star(3, NcDemands::Uniform(1), false);
        let sol = solve_p_ncfgc(&inst).unwrap();
        assert_eq!(sol.edges, vec![0, 1, 2]);
        assert_eq!(sol.root, 1);
    }

    #[test]
    fn safe_triangle_two_connected() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let inst = NcFgcInstance::new(g, &[0, 1, 2], NcDemands::Uniform(2)).unwrap();
        let sol = solve_p_ncfgc(&inst).unwrap();
        assert_eq!(sol.edges, vec![0, 1, 2]);
        assert_eq!(inst.graph.cost_of(&sol.edges), cost_from_int(3));
    }

    #[test]
    fn needs_a_safe_node() {
        let g = graph(2, &[(0, 1)]);
        let inst = NcFgcInstance::new(g, &[], NcDemands::Uniform(1)).unwrap();
        assert!(matches!(solve_p_ncfgc(&inst), Err(Error::Unsupported(_))));
    }

    #[test]
    fn infeasible_full_graph_is_reported() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let inst = NcFgcInstance::new(g, &[0, 1, 2], NcDemands::Uniform(2)).unwrap();
        assert!(matches!(solve_p_ncfgc(&inst), Err(Error::Infeasible(_))));
    }

    #[test]
    fn two_antiparallel_pairs_need_both_forward_arcs() {
        let g = graph(2, &[(0, 1), (0, 1)]);
        let rooted = RootedQConnInstance { digraph: to_antiparallel_digraph(&g), root: 0, p: 2, capacity: vec![2, 2] };
        let sol = solve_rooted_qconn(&rooted).unwrap();
        assert_eq!(sol.arcs, vec![0, 2]);
        assert_eq!(sol.cost, cost_from_int(2));
    }

    #[test]
    fn inflation_of_star_center() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        let inst = NcFgcInstance::new(g, &[0], NcDemands::Uniform(1)).unwrap();
        let red = reduce_by_inflation(&inst).unwrap();
        assert_eq!(red.inflation.images[0].len(), 3);
        assert_eq!(red.inflation.graph.total_cost(), inst.graph.total_cost());
        for ((s, t), _, _) in &red.demands {
            let before = q_connectivity(&inst.graph, &inst.node_capacities(), *s, *t).unwrap();
            assert_eq!(before, inflated_connectivity(&red, *s, *t));
        }
    }
}
