//! Jain's iterative rounding for edge-connectivity survivable network design
//! with pairwise requirements.

use std::collections::BTreeMap;

use crate::cost::cost_to_f64;
use crate::error::{Error, Infeasibility, Result};
use crate::flow::FlowNetwork;
use crate::graph::{Cut, MultiGraph};
use crate::lp::{CutLpSolver, CutOracle, CutRow, FractionalSolution, Fixing, EPS_ROUND, EPS_SEP};

/// Symmetric pair map `{i, j} -> r_ij`; zero entries are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Requirements(BTreeMap<(usize, usize), i64>);

impl Requirements {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform(nodes: &[usize], r: i64) -> Self {
        let mut reqs = Self::new();
        for (k, &i) in nodes.iter().enumerate() {
            for &j in &nodes[k + 1..] {
                reqs.set(i, j, r);
            }
        }
        reqs
    }

    /// Raises the stored value to `r` if larger; self-pairs are ignored.
    pub fn set(&mut self, i: usize, j: usize, r: i64) {
        if i == j || r <= 0 {
            return;
        }
        let key = (i.min(j), i.max(j));
        let entry = self.0.entry(key).or_insert(0);
        *entry = (*entry).max(r);
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.0.get(&(i.min(j), i.max(j))).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), i64)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> i64 {
        self.0.values().copied().max().unwrap_or(0)
    }

    /// Largest requirement of a pair split by `side`.
    pub fn max_separated(&self, side: &[bool]) -> i64 {
        self.iter().filter(|((i, j), _)| side[*i] != side[*j]).map(|(_, r)| r).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct SndpInstance {
    /// Edge labels are ignored.
    pub graph: MultiGraph,
    pub requirements: Requirements,
}

/// Base requirements together with the edges already bought.
#[derive(Debug, Clone)]
pub struct ResidualRequirement<'a> {
    pub base: &'a Requirements,
    pub chosen: Vec<bool>,
}

impl ResidualRequirement<'_> {
    pub fn of_cut(&self, g: &MultiGraph, side: &[bool]) -> i64 {
        let crossing = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(id, e)| self.chosen[*id] && side[e.u] != side[e.v])
            .count() as i64;
        (self.base.max_separated(side) - crossing).max(0)
    }
}

/// A cut whose undecided capacity `value` falls short of `residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolatedCut {
    pub cut: Cut,
    pub residual: i64,
    pub value: f64,
}

impl ViolatedCut {
    pub fn violation(&self) -> f64 {
        self.residual as f64 - self.value
    }
}

#[cfg(test)]
fn side_mask(n: usize, side: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &v in side {
        mask[v] = true;
    }
    mask
}

/// Per demand pair, the residual-reachable min cut under capacities `x`.
/// Returns the sides of cuts whose value is below the pair's requirement.
fn short_pair_cuts(g: &MultiGraph, caps: &[f64], reqs: &Requirements) -> Vec<(Vec<bool>, f64)> {
    let mut out: Vec<(Vec<bool>, f64)> = Vec::new();
    for ((i, j), r) in reqs.iter() {
        let mut net = FlowNetwork::<f64>::new(g.node_count());
        for (e, &c) in g.edges().iter().zip(caps) {
            net.add_undirected(e.u, e.v, c);
        }
        let value = net.max_flow(i, j);
        if value < r as f64 - EPS_SEP {
            let side = net.source_side(i);
            if !out.iter().any(|(s, _)| *s == side) {
                out.push((side, value));
            }
        }
    }
    out
}

/// Most violated cut for `x` (defined on every edge; chosen edges count as
/// capacity one). Ties go to the smaller side, then the lexicographically
/// smaller node list.
pub fn separation(g: &MultiGraph, x: &[f64], res: &ResidualRequirement) -> Option<ViolatedCut> {
    let caps: Vec<f64> = (0..g.edge_count()).map(|id| if res.chosen[id] { 1.0 } else { x[id] }).collect();
    let mut best: Option<ViolatedCut> = None;
    for (side, _) in short_pair_cuts(g, &caps, res.base) {
        let cut = Cut::from_side(g, &side);
        let residual = res.of_cut(g, &side);
        let value: f64 = cut.boundary.iter().filter(|&&id| !res.chosen[id]).map(|&id| x[id]).sum();
        let candidate = ViolatedCut { cut, residual, value };
        if candidate.violation() <= EPS_SEP {
            continue;
        }
        let replace = match &best {
            None => true,
            Some(b) => {
                let (cv, bv) = (candidate.violation(), b.violation());
                if (cv - bv).abs() > EPS_SEP {
                    cv > bv
                } else {
                    (candidate.cut.side.len(), &candidate.cut.side) < (b.cut.side.len(), &b.cut.side)
                }
            }
        };
        if replace {
            best = Some(candidate);
        }
    }
    best
}

/// Row oracle for the SNDP cut LP: one row per short pair cut, with the
/// right-hand side raised to the largest requirement the cut separates.
pub struct SndpOracle<'a> {
    pub graph: &'a MultiGraph,
    pub requirements: &'a Requirements,
}

impl CutOracle for SndpOracle<'_> {
    fn separate(&mut self, x: &[f64]) -> Vec<CutRow> {
        short_pair_cuts(self.graph, x, self.requirements)
            .into_iter()
            .map(|(side, _)| {
                let terms = self
                    .graph
                    .edges()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| side[e.u] != side[e.v])
                    .map(|(id, _)| (id, 1.0))
                    .collect();
                CutRow { terms, rhs: self.requirements.max_separated(&side) as f64 }
            })
            .collect()
    }
}

/// First pair whose exact connectivity within `mask` misses its requirement.
pub fn unmet_requirement(g: &MultiGraph, mask: &[bool], reqs: &Requirements) -> Option<Infeasibility> {
    for ((i, j), r) in reqs.iter() {
        let lambda = g.local_edge_connectivity(mask, i, j, Some(r));
        if lambda < r {
            let mut net = FlowNetwork::<i64>::new(g.node_count());
            for (id, e) in g.edges().iter().enumerate() {
                if mask[id] {
                    net.add_undirected(e.u, e.v, 1);
                }
            }
            let achieved = net.max_flow(i, j);
            let side = net.source_side(i);
            return Some(Infeasibility {
                pair: (i, j),
                required: r,
                achieved,
                cut_side: (0..g.node_count()).filter(|&v| side[v]).collect(),
            });
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingStep {
    /// Largest value among undecided edges at this LP vertex.
    pub max_undecided: f64,
    pub fixed_to_one: usize,
    pub dropped: usize,
    pub fractional: usize,
    pub tight_rows: usize,
    pub lp_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JainRun {
    pub edges: Vec<usize>,
    /// Objective of the first LP vertex; the output costs at most twice this.
    pub initial_lp: f64,
    pub steps: Vec<RoundingStep>,
}

/// Iterative rounding: solve the cut LP at a vertex, buy every undecided edge
/// with value at least one half, drop zero edges, repeat on the residual
/// requirements until they vanish.
pub fn jain_round(inst: &SndpInstance) -> Result<JainRun> {
    let g = &inst.graph;
    let m = g.edge_count();
    for ((i, j), _) in inst.requirements.iter() {
        g.check_node(i)?;
        g.check_node(j)?;
    }
    let everything = vec![true; m];
    if let Some(bad) = unmet_requirement(g, &everything, &inst.requirements) {
        return Err(Error::Infeasible(bad));
    }
    let costs: Vec<f64> = g.edges().iter().map(|e| cost_to_f64(&e.cost)).collect();
    let mut fixed = vec![Fixing::Free; m];
    let mut rows: Vec<CutRow> = Vec::new();
    let mut steps = Vec::new();
    let mut initial_lp = 0.0;
    let solver = CutLpSolver::default();

    loop {
        let chosen: Vec<bool> = fixed.iter().map(|&f| f == Fixing::One).collect();
        if unmet_requirement(g, &chosen, &inst.requirements).is_none() {
            break;
        }
        let mut oracle = SndpOracle { graph: g, requirements: &inst.requirements };
        let sol: FractionalSolution = solver.solve(&costs, &fixed, rows, &mut oracle)?;
        if steps.is_empty() {
            initial_lp = sol.objective;
        }
        let max_undecided = (0..m)
            .filter(|&e| fixed[e] == Fixing::Free)
            .map(|e| sol.x[e])
            .fold(0.0f64, f64::max);
        if max_undecided < 0.5 - EPS_ROUND {
            return Err(Error::NoHalfEdge { max_value: max_undecided });
        }
        let mut fixed_to_one = 0;
        let mut dropped = 0;
        for e in 0..m {
            if fixed[e] != Fixing::Free {
                continue;
            }
            if sol.x[e] >= 0.5 - EPS_ROUND {
                fixed[e] = Fixing::One;
                fixed_to_one += 1;
            } else if sol.x[e] <= EPS_ROUND {
                fixed[e] = Fixing::Zero;
                dropped += 1;
            }
        }
        steps.push(RoundingStep {
            max_undecided,
            fixed_to_one,
            dropped,
            fractional: sol.fractional_count(),
            tight_rows: sol.tight_rows(),
            lp_objective: sol.objective,
        });
        rows = sol.rows;
    }
    let edges = (0..m).filter(|&e| fixed[e] == Fixing::One).collect();
    Ok(JainRun { edges, initial_lp, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::cost_from_int;
    use crate::graph::Label;

    fn cycle(n: usize) -> MultiGraph {
        let mut g = MultiGraph::new(n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n, cost_from_int(1), Label::Safe).unwrap();
        }
        g
    }

    fn reqs(list: &[(usize, usize, i64)]) -> Requirements {
        let mut r = Requirements::new();
        for &(i, j, v) in list {
            r.set(i, j, v);
        }
        r
    }

    #[test]
    fn all_ones_has_no_violated_cut() {
        let g = cycle(4);
        let r = reqs(&[(0, 2, 2), (1, 3, 2)]);
        let res = ResidualRequirement { base: &r, chosen: vec![false; 4] };
        assert!(separation(&g, &[1.0; 4], &res).is_none());
    }

    #[test]
    fn zero_point_returns_min_cardinality_cut() {
        // path 0-1-2 plus a chord 0-2: the cut {0} has 2 edges, {0,1} has 2; x = 0
        let mut g = MultiGraph::new(3);
        g.add_edge(0, 1, cost_from_int(1), Label::Safe).unwrap();
        g.add_edge(1, 2, cost_from_int(1), Label::Safe).unwrap();
        let r = reqs(&[(0, 2, 1)]);
        let res = ResidualRequirement { base: &r, chosen: vec![false; 2] };
        let v = separation(&g, &[0.0, 0.0], &res).unwrap();
        assert_eq!(v.cut.side, vec![0]);
        assert_eq!(v.residual, 1);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn half_point_on_c4_is_violated() {
        let g = cycle(4);
        let r = reqs(&[(0, 2, 2)]);
        let res = ResidualRequirement { base: &r, chosen: vec![false; 4] };
        // every one of the 7 cuts separating 0 from 2 crosses exactly two edges
        let v = separation(&g, &[0.5; 4], &res).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
        assert_eq!(v.residual, 2);
        assert!(v.cut.contains(0) && !v.cut.contains(2));
    }

    #[test]
    fn chosen_edges_reduce_the_residual() {
        let g = cycle(4);
        let r = reqs(&[(0, 2, 2)]);
        let res = ResidualRequirement { base: &r, chosen: vec![true, true, false, false] };
        let v = separation(&g, &[1.0, 1.0, 0.0, 0.0], &res).unwrap();
        assert_eq!(v.residual, 1);
        assert_eq!(v.cut.side, vec![0]);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn zero_requirements_buy_nothing() {
        let run = jain_round(&SndpInstance { graph: cycle(5), requirements: Requirements::new() }).unwrap();
        assert!(run.edges.is_empty());
        assert!(run.steps.is_empty());
    }

    #[test]
    fn c4_pair_two_takes_everything() {
        let run = jain_round(&SndpInstance { graph: cycle(4), requirements: reqs(&[(0, 2, 2)]) }).unwrap();
        assert_eq!(run.edges, vec![0, 1, 2, 3]);
        assert!((run.initial_lp - 4.0).abs() < 1e-9);
    }

    #[test]
    fn c4_lp_vertex_is_all_ones() {
        let g = cycle(4);
        let r = reqs(&[(0, 2, 2)]);
        let mut oracle = SndpOracle { graph: &g, requirements: &r };
        let sol = crate::lp::solve_cut_lp(&[1.0; 4], &[Fixing::Free; 4], &mut oracle).unwrap();
        assert!((sol.objective - 4.0).abs() < 1e-9);
        assert!(sol.x.iter().all(|&v| (v - 1.0).abs() < 1e-9));
        assert!(sol.vertex);
    }

    #[test]
    fn unsatisfiable_pair_is_named() {
        let mut g = MultiGraph::new(3);
        g.add_edge(0, 1, cost_from_int(1), Label::Safe).unwrap();
        g.add_edge(1, 2, cost_from_int(1), Label::Safe).unwrap();
        let err = jain_round(&SndpInstance { graph: g, requirements: reqs(&[(0, 2, 2)]) }).unwrap_err();
        match err {
            Error::Infeasible(inf) => {
                assert_eq!(inf.pair, (0, 2));
                assert_eq!(inf.required, 2);
                assert_eq!(inf.achieved, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn residual_floor_is_zero() {
        let g = cycle(3);
        let r = reqs(&[(0, 1, 1)]);
        let res = ResidualRequirement { base: &r, chosen: vec![true, true, true] };
        assert_eq!(res.of_cut(&g, &[true, false, false]), 0);
        assert_eq!(side_mask(3, &[0, 2]), vec![true, false, true]);
    }
}
