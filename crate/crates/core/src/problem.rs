//! One enum over the three problem families so the oracle, the file format
//! and the CLI can treat them uniformly.

use crate::error::Result;
use crate::fgc::{solve_fgc, verify_fgc, FgcInstance, FgcVerdict, Regime};
use crate::fst::{solve_fst_with, verify_fst, FstInstance, FstVerdict, MetricClosureMst, SteinerStage};
use crate::graph::MultiGraph;
use crate::ncfgc::{solve_p_ncfgc, verify_ncfgc, NcFgcInstance, NcVerdict};
use crate::sndp::{unmet_requirement, SndpInstance};

#[derive(Debug, Clone)]
pub enum Problem {
    Fgc(FgcInstance),
    Fst(FstInstance),
    NcFgc(NcFgcInstance),
}

/// Exact feasibility of an edge subset; every oracle search goes through it.
pub trait Feasibility: Sync {
    fn graph(&self) -> &MultiGraph;
    fn feasible(&self, edges: &[usize]) -> Result<bool>;
}

impl Feasibility for FgcInstance {
    fn graph(&self) -> &MultiGraph {
        &self.graph
    }
    fn feasible(&self, edges: &[usize]) -> Result<bool> {
        Ok(verify_fgc(self, edges)?.is_feasible())
    }
}

impl Feasibility for FstInstance {
    fn graph(&self) -> &MultiGraph {
        &self.graph
    }
    fn feasible(&self, edges: &[usize]) -> Result<bool> {
        Ok(verify_fst(self, edges)?.is_feasible())
    }
}

impl Feasibility for NcFgcInstance {
    fn graph(&self) -> &MultiGraph {
        &self.graph
    }
    fn feasible(&self, edges: &[usize]) -> Result<bool> {
        Ok(verify_ncfgc(self, edges)?.is_feasible())
    }
}

impl Feasibility for SndpInstance {
    fn graph(&self) -> &MultiGraph {
        &self.graph
    }
    fn feasible(&self, edges: &[usize]) -> Result<bool> {
        let mask = self.graph.mask_of(edges)?;
        Ok(unmet_requirement(&self.graph, &mask, &self.requirements).is_none())
    }
}

impl Feasibility for Problem {
    fn graph(&self) -> &MultiGraph {
        match self {
            Problem::Fgc(i) => &i.graph,
            Problem::Fst(i) => &i.graph,
            Problem::NcFgc(i) => &i.graph,
        }
    }
    fn feasible(&self, edges: &[usize]) -> Result<bool> {
        Ok(self.verify(edges)?.feasible)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub feasible: bool,
    /// Human-readable witness when infeasible.
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub edges: Vec<usize>,
    pub algorithm: &'static str,
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Fgc(_) => "fgc",
            Problem::Fst(_) => "fst",
            Problem::NcFgc(_) => "ncfgc",
        }
    }

    pub fn solve(&self) -> Result<Solved> {
        self.solve_with_stage(&MetricClosureMst)
    }

    /// Like [`Problem::solve`], with a chosen first stage for FST.
    pub fn solve_with_stage(&self, stage: &dyn SteinerStage) -> Result<Solved> {
        Ok(match self {
            Problem::Fgc(i) => {
                let sol = solve_fgc(i)?;
                let algorithm = match sol.regime {
                    Regime::Q1 => "capndp-q1-iterative-rounding",
                    Regime::P1 => "capndp-p1-iterative-rounding",
                    Regime::General => unreachable!("general regime is rejected by the solver"),
                };
                Solved { edges: sol.edges, algorithm }
            }
            Problem::Fst(i) => {
                let sol = solve_fst_with(i, stage)?;
                let algorithm = if stage.ratio() == 1 {
                    "two-stage-fst-exact-steiner"
                } else {
                    "two-stage-fst-metric-closure"
                };
                Solved { edges: sol.edges, algorithm }
            }
            Problem::NcFgc(i) => Solved { edges: solve_p_ncfgc(i)?.edges, algorithm: "rooted-q-connectivity" },
        })
    }

    pub fn verify(&self, edges: &[usize]) -> Result<Verdict> {
        Ok(match self {
            Problem::Fgc(i) => match verify_fgc(i, edges)? {
                FgcVerdict::Feasible => Verdict { feasible: true, detail: String::new() },
                FgcVerdict::Violated { pair, failures, connectivity } => Verdict {
                    feasible: false,
                    detail: format!(
                        "pair ({}, {}) keeps {connectivity} edge-disjoint paths after unsafe edges {failures:?} fail",
                        pair.0, pair.1
                    ),
                },
            },
            Problem::Fst(i) => match verify_fst(i, edges)? {
                FstVerdict::Feasible => Verdict { feasible: true, detail: String::new() },
                FstVerdict::Violated { failed, separated } => Verdict {
                    feasible: false,
                    detail: match failed {
                        Some(e) => format!("terminals {} and {} separate when unsafe edge {e} fails", separated.0, separated.1),
                        None => format!("terminals {} and {} are not connected", separated.0, separated.1),
                    },
                },
            },
            Problem::NcFgc(i) => match verify_ncfgc(i, edges)? {
                NcVerdict::Feasible => Verdict { feasible: true, detail: String::new() },
                NcVerdict::Violated { pair, removed, connectivity, required } => Verdict {
                    feasible: false,
                    detail: format!(
                        "pair ({}, {}) keeps {connectivity} < {required} edge-disjoint paths after unsafe nodes {removed:?} fail",
                        pair.0, pair.1
                    ),
                },
            },
        })
    }

    /// The approximation factor the default solver certifies.
    pub fn ratio_bound(&self) -> Option<i64> {
        match self {
            Problem::Fgc(i) => i.ratio_bound(),
            Problem::Fst(_) => Some(MetricClosureMst.ratio() + 2),
            Problem::NcFgc(_) => Some(2),
        }
    }
}
