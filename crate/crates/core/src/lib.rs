//! Network design under flexible graph connectivity: exact max-flow and
//! verifiers, a cut-LP iterative-rounding engine, solvers for the
//! edge-failure, Steiner and node-failure variants, and a brute-force oracle
//! that certifies their approximation ratios on small instances.

#![allow(clippy::needless_range_loop)]

pub mod combinatorics;
pub mod cost;
pub mod error;
pub mod fgc;
pub mod flow;
pub mod fst;
pub mod generate;
pub mod graph;
pub mod io;
pub mod lp;
pub mod ncfgc;
pub mod oracle;
pub mod problem;
pub mod sndp;

pub use cost::{cost_from_int, format_cost, parse_cost, Cost};
pub use error::{Error, Infeasibility, Result};
pub use fgc::{solve_fgc, verify_fgc, FgcDemands, FgcInstance, FgcSolution, FgcVerdict, Regime};
pub use fst::{solve_fst, solve_fst_with, verify_fst, ExactSteiner, FstInstance, FstSolution, FstVerdict, MetricClosureMst, SteinerStage};
pub use generate::{generate, GenParams, InstanceClass};
pub use graph::{Cut, Digraph, Edge, Label, MultiGraph};
pub use io::{emit_instance, emit_solution, parse_instance, parse_solution, InstanceFile, SolutionFile};
pub use lp::{solve_cut_lp, CutLpSolver, CutOracle, CutRow, FractionalSolution};
pub use ncfgc::{solve_p_ncfgc, verify_ncfgc, NcDemands, NcFgcInstance, NcSolution, NcVerdict};
pub use oracle::{exact_opt, ratio_report, OracleBudget, OracleOutcome, RatioReport, ReportOptions, Strategy};
pub use problem::{Feasibility, Problem, Solved, Verdict};
pub use sndp::{jain_round, JainRun, Requirements, SndpInstance};
