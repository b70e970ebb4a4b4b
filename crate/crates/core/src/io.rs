//! TOML instance and solution files.
//!
//! Parsing goes through serde and rejects unknown keys. Emission is written
//! by hand so the canonical form is stable byte for byte: sections in a fixed
//! order, edges in id order, pairs sorted, costs as exact decimal strings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::cost::{format_cost, parse_cost, Cost};
use crate::error::{Error, Result};
use crate::fgc::{FgcDemands, FgcInstance};
use crate::fst::FstInstance;
use crate::graph::{Label, MultiGraph};
use crate::ncfgc::{NcDemands, NcFgcInstance};
use crate::problem::Problem;

#[derive(Debug, Clone)]
pub struct InstanceFile {
    pub name: String,
    pub seed: Option<u64>,
    pub problem: Problem,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    meta: RawMeta,
    nodes: RawNodes,
    #[serde(default)]
    edges: Vec<RawEdge>,
    problem: RawProblem,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeta {
    name: String,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNodes {
    count: usize,
    #[serde(default)]
    safe: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    u: usize,
    v: usize,
    cost: RawCost,
    safe: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCost {
    Int(i64),
    Text(String),
    Float(#[allow(dead_code)] f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum RawProblem {
    Fgc(RawFgc),
    Fst(RawFst),
    Ncfgc(RawNc),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFgc {
    pairs: Option<Vec<RawFgcPair>>,
    uniform: Option<RawUniformPq>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFgcPair {
    i: usize,
    j: usize,
    p: u32,
    q: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUniformPq {
    p: u32,
    q: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFst {
    terminals: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNc {
    pairs: Option<Vec<RawNcPair>>,
    uniform: Option<RawUniformP>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNcPair {
    i: usize,
    j: usize,
    r: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUniformP {
    p: u32,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn ordered_pair(what: &str, i: usize, j: usize, n: usize) -> Result<(usize, usize)> {
    if i >= n || j >= n {
        return Err(invalid(format!("{what} ({i}, {j}) names a node outside 0..{n}")));
    }
    if i == j {
        return Err(invalid(format!("{what} ({i}, {j}) joins a node to itself")));
    }
    Ok((i.min(j), i.max(j)))
}

pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    let raw: RawInstance = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let n = raw.nodes.count;
    let mut graph = MultiGraph::new(n);
    for (id, e) in raw.edges.iter().enumerate() {
        let cost = match &e.cost {
            RawCost::Int(v) => Cost::from_integer(*v),
            RawCost::Text(s) => parse_cost(s).map_err(|err| invalid(format!("edge {id}: {err}")))?,
            RawCost::Float(_) => {
                return Err(invalid(format!("edge {id}: write non-integer costs as strings, e.g. cost = \"2.5\"")))
            }
        };
        let label = if e.safe { Label::Safe } else { Label::Unsafe };
        graph
            .add_edge(e.u, e.v, cost, label)
            .map_err(|err| invalid(format!("edge {id} ({}, {}): {err}", e.u, e.v)))?;
    }
    for &v in &raw.nodes.safe {
        if v >= n {
            return Err(invalid(format!("safe node {v} is outside 0..{n}")));
        }
    }

    let problem = match raw.problem {
        RawProblem::Fgc(f) => {
            let demands = match (f.pairs, f.uniform) {
                (Some(pairs), None) => {
                    let mut map = BTreeMap::new();
                    for pr in pairs {
                        let key = ordered_pair("fgc pair", pr.i, pr.j, n)?;
                        if map.insert(key, (pr.p, pr.q)).is_some() {
                            return Err(invalid(format!("fgc pair ({}, {}) appears twice", key.0, key.1)));
                        }
                    }
                    FgcDemands::Pairs(map)
                }
                (None, Some(u)) => FgcDemands::Uniform { p: u.p, q: u.q },
                _ => return Err(invalid("problem.fgc needs exactly one of `pairs` or `uniform`")),
            };
            Problem::Fgc(FgcInstance::new(graph, demands)?)
        }
        RawProblem::Fst(f) => {
            for &t in &f.terminals {
                if t >= n {
                    return Err(invalid(format!("terminal {t} is outside 0..{n}")));
                }
            }
            Problem::Fst(FstInstance::new(graph, f.terminals)?)
        }
        RawProblem::Ncfgc(f) => {
            let demands = match (f.pairs, f.uniform) {
                (Some(pairs), None) => {
                    let mut map = BTreeMap::new();
                    for pr in pairs {
                        let key = ordered_pair("ncfgc pair", pr.i, pr.j, n)?;
                        if map.insert(key, pr.r).is_some() {
                            return Err(invalid(format!("ncfgc pair ({}, {}) appears twice", key.0, key.1)));
                        }
                    }
                    NcDemands::Pairs(map)
                }
                (None, Some(u)) => {
                    if u.p == 0 {
                        return Err(invalid("uniform p must be at least 1"));
                    }
                    NcDemands::Uniform(u.p)
                }
                _ => return Err(invalid("problem.ncfgc needs exactly one of `pairs` or `uniform`")),
            };
            Problem::NcFgc(NcFgcInstance::new(graph, &raw.nodes.safe, demands)?)
        }
    };
    Ok(InstanceFile { name: raw.meta.name, seed: raw.meta.seed, problem })
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_owned()).to_string()
}

fn list(items: impl IntoIterator<Item = usize>) -> String {
    let parts: Vec<String> = items.into_iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub fn emit_instance(file: &InstanceFile) -> String {
    let mut out = String::new();
    let g = match &file.problem {
        Problem::Fgc(i) => &i.graph,
        Problem::Fst(i) => &i.graph,
        Problem::NcFgc(i) => &i.graph,
    };
    let safe_nodes = match &file.problem {
        Problem::NcFgc(i) => i.safe_nodes(),
        _ => Vec::new(),
    };
    let _ = writeln!(out, "[meta]");
    let _ = writeln!(out, "name = {}", quoted(&file.name));
    if let Some(seed) = file.seed {
        let _ = writeln!(out, "seed = {seed}");
    }
    let _ = writeln!(out, "\n[nodes]");
    let _ = writeln!(out, "count = {}", g.node_count());
    let _ = writeln!(out, "safe = {}", list(safe_nodes));
    for e in g.edges() {
        let _ = writeln!(out, "\n[[edges]]");
        let _ = writeln!(out, "u = {}", e.u);
        let _ = writeln!(out, "v = {}", e.v);
        let _ = writeln!(out, "cost = {}", quoted(&format_cost(&e.cost)));
        let _ = writeln!(out, "safe = {}", e.is_safe());
    }
    match &file.problem {
        Problem::Fgc(i) => {
            let _ = writeln!(out, "\n[problem.fgc]");
            match &i.demands {
                FgcDemands::Pairs(map) => {
                    let _ = writeln!(out, "pairs = [");
                    for (&(a, b), &(p, q)) in map {
                        let _ = writeln!(out, "  {{ i = {a}, j = {b}, p = {p}, q = {q} }},");
                    }
                    let _ = writeln!(out, "]");
                }
                FgcDemands::Uniform { p, q } => {
                    let _ = writeln!(out, "uniform = {{ p = {p}, q = {q} }}");
                }
            }
        }
        Problem::Fst(i) => {
            let _ = writeln!(out, "\n[problem.fst]");
            let _ = writeln!(out, "terminals = {}", list(i.terminals.iter().copied()));
        }
        Problem::NcFgc(i) => {
            let _ = writeln!(out, "\n[problem.ncfgc]");
            match &i.demands {
                NcDemands::Pairs(map) => {
                    let _ = writeln!(out, "pairs = [");
                    for (&(a, b), &r) in map {
                        let _ = writeln!(out, "  {{ i = {a}, j = {b}, r = {r} }},");
                    }
                    let _ = writeln!(out, "]");
                }
                NcDemands::Uniform(p) => {
                    let _ = writeln!(out, "uniform = {{ p = {p} }}");
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionFile {
    pub problem: String,
    pub algorithm: String,
    pub edges: Vec<usize>,
    pub cost: Cost,
    pub feasible: bool,
    pub opt: Option<Cost>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolutionFile {
    solution: RawSolution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolution {
    problem: String,
    algorithm: String,
    edges: Vec<usize>,
    cost: String,
    verdict: String,
    opt: Option<String>,
    ratio: Option<String>,
}

impl SolutionFile {
    pub fn ratio(&self) -> Option<Cost> {
        let opt = self.opt?;
        if opt == Cost::from_integer(0) {
            return (self.cost == opt).then(|| Cost::from_integer(1));
        }
        Some(self.cost / opt)
    }

    /// Checks the edge ids and the recorded cost against an instance.
    pub fn check_against(&self, problem: &Problem) -> Result<()> {
        use crate::problem::Feasibility;
        let g = problem.graph();
        g.mask_of(&self.edges)?;
        let recomputed = g.cost_of(&self.edges);
        if recomputed != self.cost {
            return Err(invalid(format!(
                "solution cost {} differs from the recomputed {}",
                format_cost(&self.cost),
                format_cost(&recomputed)
            )));
        }
        if self.problem != problem.kind() {
            return Err(invalid(format!("solution is for `{}` but the instance is `{}`", self.problem, problem.kind())));
        }
        Ok(())
    }
}

pub fn parse_solution(text: &str) -> Result<SolutionFile> {
    let raw: RawSolutionFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let s = raw.solution;
    let mut edges = s.edges;
    edges.sort_unstable();
    if edges.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("solution lists an edge twice"));
    }
    let cost = parse_cost(&s.cost).map_err(|e| invalid(format!("solution cost: {e}")))?;
    let feasible = match s.verdict.as_str() {
        "feasible" => true,
        "infeasible" => false,
        other => return Err(invalid(format!("unknown verdict `{other}`"))),
    };
    let opt = s.opt.as_deref().map(parse_cost).transpose().map_err(|e| invalid(format!("solution opt: {e}")))?;
    let file = SolutionFile { problem: s.problem, algorithm: s.algorithm, edges, cost, feasible, opt };
    if let Some(r) = s.ratio {
        let stated = parse_cost(&r).map_err(|e| invalid(format!("solution ratio: {e}")))?;
        if file.ratio() != Some(stated) {
            return Err(invalid("stated ratio does not match cost / opt"));
        }
    }
    Ok(file)
}

pub fn emit_solution(s: &SolutionFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[solution]");
    let _ = writeln!(out, "problem = {}", quoted(&s.problem));
    let _ = writeln!(out, "algorithm = {}", quoted(&s.algorithm));
    let _ = writeln!(out, "edges = {}", list(s.edges.iter().copied()));
    let _ = writeln!(out, "cost = {}", quoted(&format_cost(&s.cost)));
    let _ = writeln!(out, "verdict = {}", quoted(if s.feasible { "feasible" } else { "infeasible" }));
    if let Some(opt) = &s.opt {
        let _ = writeln!(out, "opt = {}", quoted(&format_cost(opt)));
    }
    if let Some(r) = s.ratio() {
        let _ = writeln!(out, "ratio = {}", quoted(&format_cost(&r)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"[meta]
name = "minimal"
seed = 1

[nodes]
count = 2
safe = []

[[edges]]
u = 0
v = 1
cost = "2.5"
safe = true

[problem.fgc]
pairs = [
  { i = 0, j = 1, p = 1, q = 1 },
]
"#;

    #[test]
    fn minimal_round_trip_is_byte_identical() {
        let parsed = parse_instance(MINIMAL).unwrap();
        assert_eq!(emit_instance(&parsed), MINIMAL);
    }

    #[test]
    fn negative_cost_names_the_edge() {
        let text = MINIMAL.replace("\"2.5\"", "\"-1\"");
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("edge 0")), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = MINIMAL.replace("seed = 1", "seed = 1\ncolour = \"red\"");
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(err, Error::Parse(ref m) if m.contains("colour") && m.contains("line")), "{err}");
    }

    #[test]
    fn float_costs_are_rejected() {
        let text = MINIMAL.replace("\"2.5\"", "2.5");
        assert!(matches!(parse_instance(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn integer_costs_are_accepted() {
        let text = MINIMAL.replace("\"2.5\"", "3");
        let parsed = parse_instance(&text).unwrap();
        assert_eq!(emit_instance(&parsed), MINIMAL.replace("\"2.5\"", "\"3\""));
    }

    #[test]
    fn out_of_range_pair_is_a_validation_error() {
        let text = MINIMAL.replace("j = 1", "j = 5");
        assert!(matches!(parse_instance(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn solution_round_trip_and_cost_check() {
        let inst = parse_instance(MINIMAL).unwrap();
        let sol = SolutionFile {
            problem: "fgc".into(),
            algorithm: "capndp-q1-iterative-rounding".into(),
            edges: vec![0],
            cost: Cost::new(5, 2),
            feasible: true,
            opt: Some(Cost::new(5, 2)),
        };
        let text = emit_solution(&sol);
        let back = parse_solution(&text).unwrap();
        assert_eq!(back, sol);
        assert_eq!(emit_solution(&back), text);
        back.check_against(&inst.problem).unwrap();

        let wrong = SolutionFile { cost: Cost::from_integer(1), ..sol };
        assert!(wrong.check_against(&inst.problem).is_err());
    }
}
