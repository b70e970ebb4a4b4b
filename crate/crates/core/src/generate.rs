//! Seeded random instances. The same class, parameters and seed always give
//! the same instance; candidates infeasible even with every edge bought are
//! redrawn from the same stream.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::fgc::{FgcDemands, FgcInstance};
use crate::fst::FstInstance;
use crate::graph::{Label, MultiGraph};
use crate::io::InstanceFile;
use crate::ncfgc::{NcDemands, NcFgcInstance};
use crate::problem::{Feasibility, Problem};

const MAX_ATTEMPTS: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceClass {
    FgcQ1,
    FgcP1,
    Fst,
    NcFgc,
}

impl InstanceClass {
    pub const ALL: [InstanceClass; 4] = [InstanceClass::FgcQ1, InstanceClass::FgcP1, InstanceClass::Fst, InstanceClass::NcFgc];

    pub fn as_str(self) -> &'static str {
        match self {
            InstanceClass::FgcQ1 => "fgc-q1",
            InstanceClass::FgcP1 => "fgc-p1",
            InstanceClass::Fst => "fst",
            InstanceClass::NcFgc => "ncfgc",
        }
    }
}

impl fmt::Display for InstanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InstanceClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidQuery(format!("unknown instance class `{s}` (expected fgc-q1, fgc-p1, fst or ncfgc)")))
    }
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub n: usize,
    pub seed: u64,
    /// Probability that a node pair gets an edge beyond the spanning tree.
    pub edge_prob: f64,
    /// Probability that an edge is doubled.
    pub parallel_prob: f64,
    pub safe_prob: f64,
    pub max_cost: i64,
    pub max_edges: usize,
    /// Connectivity level; drawn from 1..=3 when absent.
    pub p: Option<u32>,
    /// Fault tolerance for the p = 1 class; drawn from 1..=3 when absent.
    pub q: Option<u32>,
}

impl GenParams {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            edge_prob: 0.5,
            parallel_prob: 0.25,
            safe_prob: 0.5,
            max_cost: 9,
            max_edges: 12,
            p: None,
            q: None,
        }
    }
}

fn random_graph(rng: &mut ChaCha8Rng, params: &GenParams) -> Result<MultiGraph> {
    let n = params.n;
    let mut endpoints: Vec<(usize, usize)> = Vec::new();
    for v in 1..n {
        endpoints.push((rng.gen_range(0..v), v));
    }
    let mut extra = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(params.edge_prob) {
                extra.push((u, v));
            }
        }
    }
    for &(u, v) in endpoints.clone().iter().chain(extra.clone().iter()) {
        if rng.gen_bool(params.parallel_prob) {
            extra.push((u, v));
        }
    }
    extra.shuffle(rng);
    let room = params.max_edges.saturating_sub(endpoints.len());
    endpoints.extend(extra.into_iter().take(room));
    endpoints.sort_unstable();

    let mut g = MultiGraph::new(n);
    for (u, v) in endpoints {
        let cost = Cost::from_integer(rng.gen_range(1..=params.max_cost));
        let label = if rng.gen_bool(params.safe_prob) { Label::Safe } else { Label::Unsafe };
        g.add_edge(u, v, cost, label)?;
    }
    Ok(g)
}

fn random_pairs(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    all.shuffle(rng);
    all.truncate(count);
    all.sort_unstable();
    all
}

fn candidate(class: InstanceClass, rng: &mut ChaCha8Rng, params: &GenParams) -> Result<Problem> {
    let n = params.n;
    let g = random_graph(rng, params)?;
    Ok(match class {
        InstanceClass::FgcQ1 => {
            let p = params.p.unwrap_or_else(|| rng.gen_range(1..=3));
            let count = rng.gen_range(1..=3usize);
            let mut map = BTreeMap::new();
            for (k, key) in random_pairs(rng, n, count).into_iter().enumerate() {
                let pij = if k == 0 { p } else { rng.gen_range(1..=p) };
                map.insert(key, (pij, if k == 0 { 1 } else { rng.gen_range(0..=1) }));
            }
            Problem::Fgc(FgcInstance::new(g, FgcDemands::Pairs(map))?)
        }
        InstanceClass::FgcP1 => {
            let q = params.q.unwrap_or_else(|| rng.gen_range(1..=3));
            let count = rng.gen_range(1..=3usize);
            let mut map = BTreeMap::new();
            for (k, key) in random_pairs(rng, n, count).into_iter().enumerate() {
                let qij = if k == 0 { q } else { rng.gen_range(0..=q) };
                map.insert(key, (1, qij));
            }
            Problem::Fgc(FgcInstance::new(g, FgcDemands::Pairs(map))?)
        }
        InstanceClass::Fst => {
            let k = rng.gen_range(2..=n.min(4));
            let mut nodes: Vec<usize> = (0..n).collect();
            nodes.shuffle(rng);
            nodes.truncate(k);
            Problem::Fst(FstInstance::new(g, nodes)?)
        }
        InstanceClass::NcFgc => {
            let p = params.p.unwrap_or_else(|| rng.gen_range(1..=3));
            let mut safe: Vec<usize> = (0..n).filter(|_| rng.gen_bool(params.safe_prob)).collect();
            if safe.is_empty() {
                safe.push(rng.gen_range(0..n));
            }
            Problem::NcFgc(NcFgcInstance::new(g, &safe, NcDemands::Uniform(p))?)
        }
    })
}

/// Draws candidates until one is feasible with every edge bought.
pub fn generate(class: InstanceClass, params: &GenParams) -> Result<InstanceFile> {
    if params.n < 2 {
        return Err(Error::InvalidQuery("instances need at least two nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..MAX_ATTEMPTS {
        let problem = candidate(class, &mut rng, params)?;
        let all: Vec<usize> = (0..problem.graph().edge_count()).collect();
        if problem.feasible(&all)? {
            return Ok(InstanceFile {
                name: format!("{}-n{}-s{}", class, params.n, params.seed),
                seed: Some(params.seed),
                problem,
            });
        }
    }
    Err(Error::BudgetExceeded(format!(
        "no feasible {class} instance with n = {} after {MAX_ATTEMPTS} draws",
        params.n
    )))
}
