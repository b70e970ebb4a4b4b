//! Flexible graph connectivity with per-pair requirements `(p_ij, q_ij)`.
//!
//! A set `F` is feasible when, for every pair and every set of at most
//! `q_ij` unsafe edges removed from `F`, the rest still has `p_ij`
//! edge-disjoint `i`-`j` paths. Two regimes reduce to capacitated network
//! design: `q_ij ≤ 1` (capacities `p`/`p+1`, demands `(p+q_ij)p_ij`) and
//! `p_ij ≤ 1` (capacities `1`/`q+1`, demands `(q_ij+1)p_ij`).

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use crate::combinatorics::{binomial, for_each_combination};
use crate::error::{Error, Infeasibility, Result};
use crate::flow::FlowNetwork;
use crate::graph::{split_parallel, MultiGraph};
use crate::sndp::{jain_round, JainRun, Requirements, SndpInstance};

/// Largest number of failure sets a single verification may enumerate.
pub const FAILURE_SET_GUARD: u128 = 1_000_000;
/// Largest node count for cut enumeration.
pub const CUT_ENUMERATION_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FgcDemands {
    /// `{i, j} -> (p_ij, q_ij)` keyed with `i < j`.
    Pairs(BTreeMap<(usize, usize), (u32, u32)>),
    /// Every pair of nodes gets `(p, q)`.
    Uniform { p: u32, q: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Every `q_ij ≤ 1`.
    Q1,
    /// Every `p_ij ≤ 1` and some `q_ij ≥ 2`.
    P1,
    /// Some pair needs `p_ij ≥ 2` and some pair `q_ij ≥ 2`; no reduction applies.
    General,
}

#[derive(Debug, Clone)]
pub struct FgcInstance {
    pub graph: MultiGraph,
    pub demands: FgcDemands,
}

impl FgcInstance {
    pub fn new(graph: MultiGraph, demands: FgcDemands) -> Result<Self> {
        let inst = Self { graph, demands };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.demands {
            FgcDemands::Pairs(map) => {
                for &(i, j) in map.keys() {
                    self.graph.check_node(i)?;
                    self.graph.check_node(j)?;
                    if i >= j {
                        return Err(Error::Validation(format!("pair ({i}, {j}) must satisfy i < j")));
                    }
                }
            }
            FgcDemands::Uniform { p, .. } => {
                if *p == 0 {
                    return Err(Error::Validation("uniform p must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Pairs with `p_ij ≥ 1`, in key order.
    pub fn active_pairs(&self) -> Vec<((usize, usize), (u32, u32))> {
        match &self.demands {
            FgcDemands::Pairs(map) => map.iter().filter(|(_, d)| d.0 > 0).map(|(&k, &d)| (k, d)).collect(),
            FgcDemands::Uniform { p, q } => {
                let n = self.graph.node_count();
                let mut out = Vec::new();
                if *p > 0 {
                    for i in 0..n {
                        for j in i + 1..n {
                            out.push(((i, j), (*p, *q)));
                        }
                    }
                }
                out
            }
        }
    }

    /// `p = max p_ij`, at least one.
    pub fn p(&self) -> u32 {
        match &self.demands {
            FgcDemands::Pairs(map) => map.values().map(|d| d.0).max().unwrap_or(0).max(1),
            FgcDemands::Uniform { p, .. } => (*p).max(1),
        }
    }

    /// `q = max q_ij` over pairs with a connectivity demand.
    pub fn q(&self) -> u32 {
        self.active_pairs().iter().map(|(_, d)| d.1).max().unwrap_or(0)
    }

    pub fn regime(&self) -> Regime {
        let pairs = self.active_pairs();
        if pairs.iter().all(|(_, d)| d.1 <= 1) {
            Regime::Q1
        } else if pairs.iter().all(|(_, d)| d.0 <= 1) {
            Regime::P1
        } else {
            Regime::General
        }
    }

    /// Approximation factor guaranteed by [`solve_fgc`] in this instance's regime.
    pub fn ratio_bound(&self) -> Option<i64> {
        match self.regime() {
            Regime::Q1 => Some(2 * (self.p() as i64 + 1)),
            Regime::P1 => Some(2 * (self.q() as i64 + 1)),
            Regime::General => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapNdpInstance {
    pub graph: MultiGraph,
    pub capacity: Vec<u32>,
    pub demands: Requirements,
}

pub fn build_capndp_q1(inst: &FgcInstance) -> Result<CapNdpInstance> {
    let pairs = inst.active_pairs();
    if let Some(((i, j), (_, q))) = pairs.iter().find(|(_, d)| d.1 >= 2) {
        return Err(Error::WrongRegime(format!("pair ({i}, {j}) has q = {q}, the q = 1 reduction needs q ≤ 1")));
    }
    let p = inst.p();
    let capacity = inst.graph.edges().iter().map(|e| if e.is_safe() { p + 1 } else { p }).collect();
    let mut demands = Requirements::new();
    for ((i, j), (pij, qij)) in pairs {
        demands.set(i, j, ((p + qij) * pij) as i64);
    }
    Ok(CapNdpInstance { graph: inst.graph.clone(), capacity, demands })
}

pub fn build_capndp_p1(inst: &FgcInstance) -> Result<CapNdpInstance> {
    let pairs = inst.active_pairs();
    if let Some(((i, j), (p, _))) = pairs.iter().find(|(_, d)| d.0 >= 2) {
        return Err(Error::WrongRegime(format!("pair ({i}, {j}) has p = {p}, the p = 1 reduction needs p ≤ 1")));
    }
    let q = inst.q();
    let capacity = inst.graph.edges().iter().map(|e| if e.is_safe() { q + 1 } else { 1 }).collect();
    let mut demands = Requirements::new();
    for ((i, j), (pij, qij)) in pairs {
        demands.set(i, j, ((qij + 1) * pij) as i64);
    }
    Ok(CapNdpInstance { graph: inst.graph.clone(), capacity, demands })
}

/// First demand pair whose min cut, under capacities `u` on the masked
/// edges, is below `D_ij`.
pub fn capacitated_shortfall(cap: &CapNdpInstance, mask: &[bool]) -> Option<Infeasibility> {
    for ((i, j), d) in cap.demands.iter() {
        let mut net = FlowNetwork::<i64>::new(cap.graph.node_count());
        for (id, e) in cap.graph.edges().iter().enumerate() {
            if mask[id] {
                net.add_undirected(e.u, e.v, cap.capacity[id] as i64);
            }
        }
        let value = net.max_flow(i, j);
        if value < d {
            let side = net.source_side(i);
            return Some(Infeasibility {
                pair: (i, j),
                required: d,
                achieved: value,
                cut_side: (0..cap.graph.node_count()).filter(|&v| side[v]).collect(),
            });
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct CapNdpSolution {
    pub edges: Vec<usize>,
    pub rounding: JainRun,
}

/// Splits each edge into `u_e` unit copies, runs iterative rounding on the
/// resulting SNDP instance and keeps every edge with at least one chosen copy.
pub fn solve_capndp(cap: &CapNdpInstance) -> Result<CapNdpSolution> {
    let everything = vec![true; cap.graph.edge_count()];
    if let Some(bad) = capacitated_shortfall(cap, &everything) {
        return Err(Error::Infeasible(bad));
    }
    let (split, copy_map) = split_parallel(&cap.graph, &cap.capacity)?;
    let rounding = jain_round(&SndpInstance { graph: split, requirements: cap.demands.clone() })?;
    let mut edges: Vec<usize> = rounding.edges.iter().map(|&c| copy_map[c]).collect();
    edges.dedup();
    let mask = cap.graph.mask_of(&edges)?;
    if let Some(bad) = capacitated_shortfall(cap, &mask) {
        return Err(Error::Infeasible(bad));
    }
    Ok(CapNdpSolution { edges, rounding })
}

#[derive(Debug, Clone)]
pub struct FgcSolution {
    pub edges: Vec<usize>,
    pub regime: Regime,
    pub rounding: Option<JainRun>,
}

pub fn solve_fgc(inst: &FgcInstance) -> Result<FgcSolution> {
    inst.validate()?;
    let regime = inst.regime();
    if inst.active_pairs().is_empty() {
        return Ok(FgcSolution { edges: Vec::new(), regime, rounding: None });
    }
    let cap = match regime {
        Regime::Q1 => build_capndp_q1(inst)?,
        Regime::P1 => build_capndp_p1(inst)?,
        Regime::General => {
            return Err(Error::Unsupported(
                "demands with both p_ij ≥ 2 and q_ij ≥ 2 have no reduction; only q ≤ 1 or p ≤ 1 is solved".into(),
            ))
        }
    };
    let sol = solve_capndp(&cap)?;
    match verify_fgc(inst, &sol.edges)? {
        FgcVerdict::Feasible => Ok(FgcSolution { edges: sol.edges, regime, rounding: Some(sol.rounding) }),
        FgcVerdict::Violated { pair, connectivity, .. } => Err(Error::Infeasible(Infeasibility {
            pair,
            required: inst.active_pairs().iter().find(|(k, _)| *k == pair).map_or(0, |(_, d)| d.0 as i64),
            achieved: connectivity,
            cut_side: Vec::new(),
        })),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FgcVerdict {
    Feasible,
    /// Removing `failures` (unsafe edges of `F`) leaves only `connectivity`
    /// edge-disjoint paths for `pair`.
    Violated { pair: (usize, usize), failures: Vec<usize>, connectivity: i64 },
}

impl FgcVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FgcVerdict::Feasible)
    }
}

/// Exact failure-set enumeration. Connectivity only drops as failures grow,
/// so only sets of size `min(q_ij, |U ∩ F|)` are tried; a violating set is
/// then shrunk to a minimal witness.
pub fn verify_fgc(inst: &FgcInstance, edges: &[usize]) -> Result<FgcVerdict> {
    let g = &inst.graph;
    let mask = g.mask_of(edges)?;
    let unsafe_in_f: Vec<usize> = (0..g.edge_count()).filter(|&e| mask[e] && !g.edge(e).is_safe()).collect();
    let pairs = inst.active_pairs();
    for &(_, (_, q)) in &pairs {
        let k = (q as usize).min(unsafe_in_f.len());
        if binomial(unsafe_in_f.len(), k) > FAILURE_SET_GUARD {
            return Err(Error::TooLarge(format!(
                "C({}, {k}) failure sets exceed the {FAILURE_SET_GUARD} guard",
                unsafe_in_f.len()
            )));
        }
    }
    let mut work = mask.clone();
    for ((i, j), (p, q)) in pairs {
        let need = p as i64;
        let k = (q as usize).min(unsafe_in_f.len());
        let found = for_each_combination(&unsafe_in_f, k, |fail| {
            for &e in fail {
                work[e] = false;
            }
            let lambda = g.local_edge_connectivity(&work, i, j, Some(need));
            for &e in fail {
                work[e] = true;
            }
            if lambda < need {
                ControlFlow::Break(fail.to_vec())
            } else {
                ControlFlow::Continue(())
            }
        });
        if let ControlFlow::Break(mut failures) = found {
            // drop failures that are not needed for the violation
            let mut idx = 0;
            while idx < failures.len() {
                let mut trial = mask.clone();
                for (pos, &e) in failures.iter().enumerate() {
                    if pos != idx {
                        trial[e] = false;
                    }
                }
                if g.local_edge_connectivity(&trial, i, j, Some(need)) < need {
                    failures.remove(idx);
                } else {
                    idx += 1;
                }
            }
            let mut trial = mask.clone();
            for &e in &failures {
                trial[e] = false;
            }
            let connectivity = g.local_edge_connectivity(&trial, i, j, None);
            return Ok(FgcVerdict::Violated { pair: (i, j), failures, connectivity });
        }
    }
    Ok(FgcVerdict::Feasible)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CutVerdict {
    Holds,
    /// The cut `side` separates `pair` but carries fewer than `p_ij` safe
    /// edges and fewer than `p_ij + q_ij` edges of `F`.
    Fails { pair: (usize, usize), side: Vec<usize>, safe: usize, total: usize },
}

impl CutVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, CutVerdict::Holds)
    }
}

/// Checks, over every cut separating a demand pair, that `F` crosses it with
/// at least `p_ij` safe edges or at least `p_ij + q_ij` edges in total.
pub fn check_cut_characterization(inst: &FgcInstance, edges: &[usize]) -> Result<CutVerdict> {
    let g = &inst.graph;
    let n = g.node_count();
    if n > CUT_ENUMERATION_GUARD {
        return Err(Error::TooLarge(format!("{n} nodes exceed the cut enumeration guard of {CUT_ENUMERATION_GUARD}")));
    }
    let mask = g.mask_of(edges)?;
    let chosen: Vec<(usize, usize, bool)> =
        (0..g.edge_count()).filter(|&e| mask[e]).map(|e| (g.edge(e).u, g.edge(e).v, g.edge(e).is_safe())).collect();
    for ((i, j), (p, q)) in inst.active_pairs() {
        let others: Vec<usize> = (0..n).filter(|&v| v != i && v != j).collect();
        for bits in 0u64..(1u64 << others.len()) {
            let mut side: u64 = 1 << i;
            for (k, &v) in others.iter().enumerate() {
                if (bits >> k) & 1 == 1 {
                    side |= 1 << v;
                }
            }
            let mut safe = 0;
            let mut total = 0;
            for &(u, v, is_safe) in &chosen {
                if ((side >> u) & 1) != ((side >> v) & 1) {
                    total += 1;
                    safe += usize::from(is_safe);
                }
            }
            if safe < p as usize && total < (p + q) as usize {
                let side = (0..n).filter(|&v| (side >> v) & 1 == 1).collect();
                return Ok(CutVerdict::Fails { pair: (i, j), side, safe, total });
            }
        }
    }
    Ok(CutVerdict::Holds)
}
