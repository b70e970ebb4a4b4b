//! Exact optimum by exhaustive search, and approximation-ratio reports built on it.
//!
//! Feasibility always goes through the problem's own verifier. Among optimal
//! sets the lexicographically smallest sorted id list wins, so the answer
//! does not depend on the search strategy or on the number of workers.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{format_cost, Cost};
use crate::error::{Error, Result};
use crate::fst::ExactSteiner;
use crate::generate::{generate, GenParams, InstanceClass};
use crate::io::emit_instance;
use crate::problem::{Feasibility, Problem};

/// Largest edge count full enumeration accepts regardless of budget.
pub const MAX_ENUMERATION_EDGES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Every subset of `E`, split across workers.
    FullEnumeration,
    /// Depth-first over edge ids, include before exclude, pruned on cost and
    /// on infeasibility of everything still available.
    CostOrdered,
}

#[derive(Debug, Clone)]
pub struct OracleBudget {
    /// Subsets (full enumeration) or search nodes (cost-ordered) allowed.
    pub max_subsets: u64,
    pub time_cap: Option<Duration>,
    pub strategy: Strategy,
    pub threads: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_subsets: 1 << 22, time_cap: None, strategy: Strategy::CostOrdered, threads: 1 }
    }
}

impl OracleBudget {
    pub fn full(threads: usize) -> Self {
        Self { strategy: Strategy::FullEnumeration, threads: threads.max(1), ..Self::default() }
    }
}

/// Worker count from `FLEXCONN_THREADS`, else the available parallelism.
pub fn threads_from_env() -> usize {
    std::env::var("FLEXCONN_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Optimal { cost: Cost, edges: Vec<usize> },
    /// Not even the whole edge set is feasible.
    Infeasible,
}

impl OracleOutcome {
    pub fn cost(&self) -> Option<Cost> {
        match self {
            OracleOutcome::Optimal { cost, .. } => Some(*cost),
            OracleOutcome::Infeasible => None,
        }
    }
}

type Best = Option<(Cost, Vec<usize>)>;

fn better(cost: &Cost, ids: &[usize], best: &Best) -> bool {
    match best {
        None => true,
        Some((bc, bids)) => match cost.cmp(bc) {
            Ordering::Less => true,
            Ordering::Equal => ids < bids.as_slice(),
            Ordering::Greater => false,
        },
    }
}

struct Clock {
    start: Instant,
    cap: Option<Duration>,
}

impl Clock {
    fn check(&self) -> Result<()> {
        match self.cap {
            Some(cap) if self.start.elapsed() > cap => {
                Err(Error::BudgetExceeded(format!("time cap of {:?} reached", cap)))
            }
            _ => Ok(()),
        }
    }
}

pub fn exact_opt<P: Feasibility + ?Sized>(problem: &P, budget: &OracleBudget) -> Result<OracleOutcome> {
    exact_opt_seeded(problem, budget, None)
}

/// Like [`exact_opt`], starting from a known feasible set as incumbent.
/// The incumbent only speeds up pruning; the result is the same.
pub fn exact_opt_seeded<P: Feasibility + ?Sized>(
    problem: &P,
    budget: &OracleBudget,
    incumbent: Option<&[usize]>,
) -> Result<OracleOutcome> {
    let g = problem.graph();
    let m = g.edge_count();
    let all: Vec<usize> = (0..m).collect();
    let mut seed: Best = None;
    if let Some(ids) = incumbent {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if !problem.feasible(&ids)? {
            return Err(Error::InvalidQuery("oracle incumbent is not feasible".into()));
        }
        seed = Some((g.cost_of(&ids), ids));
    } else if !problem.feasible(&all)? {
        return Ok(OracleOutcome::Infeasible);
    }
    let clock = Clock { start: Instant::now(), cap: budget.time_cap };
    let best = match budget.strategy {
        Strategy::FullEnumeration => full_enumeration(problem, budget, seed, &clock)?,
        Strategy::CostOrdered => cost_ordered(problem, budget, seed, &clock)?,
    };
    Ok(match best {
        Some((cost, edges)) => OracleOutcome::Optimal { cost, edges },
        None => OracleOutcome::Infeasible,
    })
}

fn ids_of(mask: u64, m: usize) -> Vec<usize> {
    (0..m).filter(|&e| mask >> e & 1 == 1).collect()
}

fn full_enumeration<P: Feasibility + ?Sized>(problem: &P, budget: &OracleBudget, seed: Best, clock: &Clock) -> Result<Best> {
    let g = problem.graph();
    let m = g.edge_count();
    if m > MAX_ENUMERATION_EDGES || (1u64 << m) > budget.max_subsets {
        return Err(Error::BudgetExceeded(format!(
            "{m} edges means 2^{m} subsets, over the budget of {}",
            budget.max_subsets
        )));
    }
    let total = 1u64 << m;
    let threads = budget.threads.clamp(1, total as usize);
    let costs: Vec<Cost> = g.edges().iter().map(|e| e.cost).collect();
    let results: Vec<Result<Best>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let costs = &costs;
                let mut best = seed.clone();
                scope.spawn(move || -> Result<Best> {
                    let mut mask = w as u64;
                    let mut checked = 0u64;
                    while mask < total {
                        let cost: Cost = (0..m).filter(|&e| mask >> e & 1 == 1).map(|e| costs[e]).sum();
                        let worth = match &best {
                            None => true,
                            Some((bc, _)) => cost <= *bc,
                        };
                        if worth {
                            let ids = ids_of(mask, m);
                            if better(&cost, &ids, &best) && problem.feasible(&ids)? {
                                best = Some((cost, ids));
                            }
                        }
                        checked += 1;
                        if checked.is_multiple_of(1024) {
                            clock.check()?;
                        }
                        mask += threads as u64;
                    }
                    Ok(best)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("oracle worker panicked")).collect()
    });
    let mut best: Best = None;
    for r in results {
        if let Some((cost, ids)) = r? {
            if better(&cost, &ids, &best) {
                best = Some((cost, ids));
            }
        }
    }
    Ok(best)
}

struct Search<'a, P: ?Sized> {
    problem: &'a P,
    costs: Vec<Cost>,
    best: Best,
    /// Cost of a known feasible set; only strictly dearer subtrees are cut.
    ceiling: Option<Cost>,
    nodes: u64,
    limit: u64,
    clock: &'a Clock,
}

impl<P: Feasibility + ?Sized> Search<'_, P> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(Error::BudgetExceeded(format!("search visited more than {} nodes", self.limit)));
        }
        if self.nodes.is_multiple_of(256) {
            self.clock.check()?;
        }
        Ok(())
    }

    fn pruned(&self, cost: &Cost) -> bool {
        matches!(&self.best, Some((bc, _)) if cost >= bc) || matches!(&self.ceiling, Some(c) if cost > c)
    }

    /// Edges below `next` are decided; `chosen` holds the included ones and
    /// `chosen ∪ {next..}` is known to be feasible. Subtrees are visited in
    /// lexicographic order of their sorted id lists, so the first optimum
    /// found at a given cost is the tie-break winner.
    fn dfs(&mut self, next: usize, chosen: &mut Vec<usize>, cost: Cost) -> Result<()> {
        if self.pruned(&cost) {
            return Ok(());
        }
        self.tick()?;
        if self.problem.feasible(chosen)? {
            self.best = Some((cost, chosen.clone()));
            return Ok(());
        }
        let m = self.costs.len();
        if next == m {
            return Ok(());
        }
        chosen.push(next);
        self.dfs(next + 1, chosen, cost + self.costs[next])?;
        chosen.pop();

        if self.pruned(&cost) {
            return Ok(());
        }
        let mut rest = chosen.clone();
        rest.extend(next + 1..m);
        self.tick()?;
        if self.problem.feasible(&rest)? {
            self.dfs(next + 1, chosen, cost)?;
        }
        Ok(())
    }
}

fn cost_ordered<P: Feasibility + ?Sized>(problem: &P, budget: &OracleBudget, seed: Best, clock: &Clock) -> Result<Best> {
    let costs: Vec<Cost> = problem.graph().edges().iter().map(|e| e.cost).collect();
    let ceiling = seed.as_ref().map(|(c, _)| *c);
    let mut search = Search { problem, costs, best: None, ceiling, nodes: 0, limit: budget.max_subsets, clock };
    search.dfs(0, &mut Vec::new(), Cost::from_integer(0))?;
    let mut best = seed;
    if let Some((cost, ids)) = search.best {
        if better(&cost, &ids, &best) {
            best = Some((cost, ids));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Node count for every trial; drawn per trial when absent.
    pub n: Option<usize>,
    pub p: Option<u32>,
    pub q: Option<u32>,
    /// Use the exact Steiner first stage for FST trials.
    pub exact_stage_one: bool,
    pub budget: OracleBudget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioRow {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub algorithm: String,
    pub alg: Option<Cost>,
    pub opt: Option<Cost>,
    pub ratio: Option<Cost>,
    pub bound: Option<i64>,
    pub pass: bool,
    pub note: String,
    /// The instance in file form, kept for failing rows.
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioReport {
    pub class: InstanceClass,
    pub seed: u64,
    pub rows: Vec<RatioRow>,
}

impl RatioReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RatioRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn worst_ratio(&self) -> Option<Cost> {
        self.rows.iter().filter_map(|r| r.ratio).max()
    }

    pub fn render(&self) -> String {
        let show = |c: &Option<Cost>| c.as_ref().map(format_cost).unwrap_or_else(|| "-".into());
        let mut out = String::new();
        let _ = writeln!(out, "# class {} seed {} trials {}", self.class, self.seed, self.rows.len());
        let _ = writeln!(out, "{:>5} {:>20} {:>3} {:>3} {:>10} {:>10} {:>10} {:>5}  result", "trial", "seed", "n", "m", "alg", "opt", "ratio", "bound");
        for r in &self.rows {
            let bound = r.bound.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
            let verdict = if r.pass { "pass" } else { "FAIL" };
            let _ = write!(
                out,
                "{:>5} {:>20} {:>3} {:>3} {:>10} {:>10} {:>10} {:>5}  {verdict}",
                r.trial,
                r.seed,
                r.n,
                r.m,
                show(&r.alg),
                show(&r.opt),
                show(&r.ratio),
                bound
            );
            if !r.note.is_empty() {
                let _ = write!(out, " ({})", r.note);
            }
            out.push('\n');
        }
        let passed = self.rows.iter().filter(|r| r.pass).count();
        let worst = self.worst_ratio().map(|c| format_cost(&c)).unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "# passed {passed}/{} worst ratio {worst}", self.rows.len());
        for r in self.failures() {
            if let Some(text) = &r.counterexample {
                let _ = writeln!(out, "\n# counterexample for trial {}", r.trial);
                out.push_str(text);
            }
        }
        out
    }
}

/// `alg / opt`, with `0 / 0 = 1`; `None` when either side is missing or
/// only the optimum is zero.
pub fn ratio_of(alg: Option<Cost>, opt: Option<Cost>) -> Option<Cost> {
    let (a, o) = (alg?, opt?);
    if o == Cost::from_integer(0) {
        return (a == o).then(|| Cost::from_integer(1));
    }
    Some(a / o)
}

fn default_n(class: InstanceClass, rng: &mut ChaCha8Rng) -> usize {
    match class {
        InstanceClass::FgcQ1 | InstanceClass::FgcP1 => rng.gen_range(3..=6),
        InstanceClass::Fst => rng.gen_range(4..=8),
        InstanceClass::NcFgc => rng.gen_range(3..=7),
    }
}

/// Runs the solver and the oracle on one instance and compares them.
pub fn ratio_row(trial: usize, seed: u64, problem: &Problem, algorithm_stage_exact: bool, budget: &OracleBudget) -> Result<RatioRow> {
    let g = problem.graph();
    let (n, m) = (g.node_count(), g.edge_count());
    let solved = if algorithm_stage_exact { problem.solve_with_stage(&ExactSteiner) } else { problem.solve() };
    let bound = match problem {
        Problem::Fst(_) if algorithm_stage_exact => Some(3),
        _ => problem.ratio_bound(),
    };
    let (algorithm, alg_edges, mut note) = match solved {
        Ok(s) => (s.algorithm.to_string(), Some(s.edges), String::new()),
        Err(Error::Infeasible(_)) => ("-".to_string(), None, "solver reports infeasible".to_string()),
        Err(e) => ("-".to_string(), None, format!("solver error: {e}")),
    };
    let mut verified = true;
    if let Some(edges) = &alg_edges {
        let v = problem.verify(edges)?;
        if !v.feasible {
            verified = false;
            note = format!("solver output infeasible: {}", v.detail);
        }
    }
    let outcome = exact_opt_seeded(problem, budget, if verified { alg_edges.as_deref() } else { None });
    let opt = match outcome {
        Ok(o) => o.cost(),
        Err(e) => {
            return Ok(RatioRow {
                trial,
                seed,
                n,
                m,
                algorithm,
                alg: alg_edges.as_ref().map(|e| g.cost_of(e)),
                opt: None,
                ratio: None,
                bound,
                pass: false,
                note: format!("oracle refused: {e}"),
                counterexample: None,
            })
        }
    };
    let alg = alg_edges.as_ref().map(|e| g.cost_of(e));
    let ratio = ratio_of(alg, opt);
    let pass = verified
        && match (alg, opt) {
            (None, None) => note == "solver reports infeasible",
            (Some(_), Some(_)) => match (ratio, bound) {
                (Some(r), Some(b)) => r <= Cost::from_integer(b),
                _ => false,
            },
            _ => false,
        };
    Ok(RatioRow { trial, seed, n, m, algorithm, alg, opt, ratio, bound, pass, note, counterexample: None })
}

/// Generates `trials` instances from `seed` and certifies each solver
/// output against the exact optimum.
pub fn ratio_report(class: InstanceClass, trials: usize, seed: u64, options: &ReportOptions) -> Result<RatioReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan: Vec<(u64, usize)> = (0..trials)
        .map(|_| {
            let s = rng.gen::<u64>();
            let n = options.n.unwrap_or_else(|| default_n(class, &mut rng));
            (s, n)
        })
        .collect();
    let mut rows = Vec::with_capacity(trials);
    for (trial, &(s, n)) in plan.iter().enumerate() {
        let mut params = GenParams::new(n, s);
        params.p = options.p;
        params.q = options.q;
        let file = generate(class, &params)?;
        let exact = options.exact_stage_one && class == InstanceClass::Fst;
        let mut row = ratio_row(trial, s, &file.problem, exact, &options.budget)?;
        if !row.pass {
            row.counterexample = Some(emit_instance(&file));
        }
        rows.push(row);
    }
    Ok(RatioReport { class, seed, rows })
}
