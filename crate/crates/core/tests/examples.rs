use std::collections::BTreeMap;

use flexconn_core::cost::cost_from_int;
use flexconn_core::fgc::check_cut_characterization;
use flexconn_core::fst::build_second_stage;
use flexconn_core::graph::{contract_edges, Arc, ArcOrigin, Digraph};
use flexconn_core::ncfgc::{q_connectivity, rooted_connectivity, solve_rooted_qconn, RootedQConnInstance};
use flexconn_core::oracle::{exact_opt, OracleBudget, OracleOutcome};
use flexconn_core::{
    jain_round, solve_fgc, solve_fst, solve_p_ncfgc, verify_fgc, Cost, FgcDemands, FgcInstance, FstInstance, Label, MultiGraph,
    NcDemands, NcFgcInstance, Requirements, SndpInstance,
};
use petgraph::algo::{dijkstra, min_spanning_tree};
use petgraph::data::FromElements;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: usize, unsafe_prob: f64) -> MultiGraph {
    let mut g = MultiGraph::new(n);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let label = if rng.gen_bool(unsafe_prob) { Label::Unsafe } else { Label::Safe };
        g.add_edge(u, v, cost_from_int(rng.gen_range(1..=9)), label).unwrap();
    }
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            let label = if rng.gen_bool(unsafe_prob) { Label::Unsafe } else { Label::Safe };
            g.add_edge(u, v, cost_from_int(rng.gen_range(1..=9)), label).unwrap();
        }
    }
    g
}

fn petgraph_of(g: &MultiGraph) -> UnGraph<(), i64> {
    let mut pg = UnGraph::<(), i64>::with_capacity(g.node_count(), g.edge_count());
    for _ in 0..g.node_count() {
        pg.add_node(());
    }
    for e in g.edges() {
        assert_eq!(*e.cost.denom(), 1);
        pg.add_edge(NodeIndex::new(e.u), NodeIndex::new(e.v), *e.cost.numer());
    }
    pg
}

fn cycle(n: usize, label: Label) -> MultiGraph {
    let mut g = MultiGraph::new(n);
    for v in 0..n {
        g.add_edge(v, (v + 1) % n, cost_from_int(1), label).unwrap();
    }
    g
}

#[test]
fn unit_requirement_costs_a_shortest_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let extra = rng.gen_range(0..8);
        let g = random_connected(&mut rng, n, extra, 0.0);
        let t = rng.gen_range(1..n);
        let mut requirements = Requirements::new();
        requirements.set(0, t, 1);
        let inst = SndpInstance { graph: g, requirements };
        let run = jain_round(&inst).unwrap();
        let distances = dijkstra(&petgraph_of(&inst.graph), NodeIndex::new(0), Some(NodeIndex::new(t)), |e| *e.weight());
        assert_eq!(inst.graph.cost_of(&run.edges), cost_from_int(distances[&NodeIndex::new(t)]));
    }
}

#[test]
fn c4_with_two_paths_buys_everything() {
    let mut requirements = Requirements::new();
    requirements.set(0, 2, 2);
    let inst = SndpInstance { graph: cycle(4, Label::Safe), requirements };
    assert_eq!(jain_round(&inst).unwrap().edges, vec![0, 1, 2, 3]);
    assert_eq!(exact_opt(&inst, &OracleBudget::full(2)).unwrap().cost(), Some(cost_from_int(4)));
}

#[test]
fn contracting_a_spanning_tree_leaves_one_node() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let n = rng.gen_range(2..=8);
        let g = random_connected(&mut rng, n, 5, 0.5);
        let c = contract_edges(&g, &(0..n - 1).collect::<Vec<_>>()).unwrap();
        assert_eq!(c.graph.node_count(), 1);
        assert_eq!(c.graph.edge_count(), 0);
    }
}

#[test]
fn all_safe_q_connectivity_is_edge_connectivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let n = rng.gen_range(2..=7);
        let g = random_connected(&mut rng, n, 6, 0.3);
        let q = vec![None; n];
        let mask = vec![true; g.edge_count()];
        for t in 1..n {
            assert_eq!(q_connectivity(&g, &q, 0, t).unwrap(), g.local_edge_connectivity(&mask, 0, t, None));
        }
    }
}

#[test]
fn all_unsafe_multicycle_of_width_p_plus_q_is_feasible() {
    for (p, q) in [(1u32, 1u32), (2, 1), (1, 2), (2, 2), (1, 3)] {
        let copies = (p + q).div_ceil(2);
        let mut g = MultiGraph::new(4);
        for v in 0..4 {
            for _ in 0..copies {
                g.add_edge(v, (v + 1) % 4, cost_from_int(1), Label::Unsafe).unwrap();
            }
        }
        let inst = FgcInstance::new(g, FgcDemands::Uniform { p, q }).unwrap();
        let all: Vec<usize> = (0..inst.graph.edge_count()).collect();
        assert!(verify_fgc(&inst, &all).unwrap().is_feasible(), "({p}, {q})");
        assert!(check_cut_characterization(&inst, &all).unwrap().holds());
    }
    let mut g = MultiGraph::new(2);
    for _ in 0..3 {
        g.add_edge(0, 1, cost_from_int(1), Label::Unsafe).unwrap();
    }
    let inst = FgcInstance::new(g, FgcDemands::Uniform { p: 2, q: 1 }).unwrap();
    assert!(verify_fgc(&inst, &[0, 1, 2]).unwrap().is_feasible());
    assert!(!verify_fgc(&inst, &[0, 1]).unwrap().is_feasible());
}

#[test]
fn triangle_with_one_unsafe_edge() {
    let mut g = MultiGraph::new(3);
    g.add_edge(0, 1, cost_from_int(1), Label::Safe).unwrap();
    g.add_edge(1, 2, cost_from_int(1), Label::Safe).unwrap();
    g.add_edge(0, 2, cost_from_int(1), Label::Unsafe).unwrap();
    let inst = FgcInstance::new(g, FgcDemands::Uniform { p: 1, q: 1 }).unwrap();
    let sol = solve_fgc(&inst).unwrap();
    let opt = exact_opt(&inst, &OracleBudget::full(1)).unwrap();
    assert_eq!(opt, OracleOutcome::Optimal { cost: cost_from_int(2), edges: vec![0, 1] });
    assert!(inst.graph.cost_of(&sol.edges) <= cost_from_int(4) * cost_from_int(2));
}

#[test]
fn four_node_q1_instance_within_four_times_optimum() {
    let mut g = MultiGraph::new(4);
    g.add_edge(0, 1, cost_from_int(2), Label::Unsafe).unwrap();
    g.add_edge(1, 3, cost_from_int(2), Label::Unsafe).unwrap();
    g.add_edge(0, 2, cost_from_int(3), Label::Safe).unwrap();
    g.add_edge(2, 3, cost_from_int(3), Label::Safe).unwrap();
    g.add_edge(0, 3, cost_from_int(5), Label::Unsafe).unwrap();
    let mut pairs = BTreeMap::new();
    pairs.insert((0, 3), (1, 1));
    let inst = FgcInstance::new(g, FgcDemands::Pairs(pairs)).unwrap();
    let sol = solve_fgc(&inst).unwrap();
    let opt = exact_opt(&inst, &OracleBudget::full(1)).unwrap().cost().unwrap();
    assert_eq!(opt, cost_from_int(6));
    assert!(inst.graph.cost_of(&sol.edges) <= cost_from_int(4) * opt);
}

#[test]
fn nc_all_safe_triangle_needs_all_three_edges() {
    let inst = NcFgcInstance::new(cycle(3, Label::Safe), &[0, 1, 2], NcDemands::Uniform(2)).unwrap();
    let sol = solve_p_ncfgc(&inst).unwrap();
    assert_eq!(sol.edges, vec![0, 1, 2]);
    assert_eq!(exact_opt(&inst, &OracleBudget::full(1)).unwrap().cost(), Some(cost_from_int(3)));
}

#[test]
fn nc_unit_requirement_within_twice_the_mst() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..30 {
        let n = rng.gen_range(2..=7);
        let g = random_connected(&mut rng, n, 5, 0.0);
        let mst: UnGraph<(), i64> = UnGraph::from_elements(min_spanning_tree(&petgraph_of(&g)));
        let mst_cost: i64 = mst.edge_weights().sum();
        let inst = NcFgcInstance::new(g, &[0], NcDemands::Uniform(1)).unwrap();
        let sol = solve_p_ncfgc(&inst).unwrap();
        let cost = inst.graph.cost_of(&sol.edges);
        assert!(cost <= cost_from_int(2 * mst_cost));
        let opt = exact_opt(&inst, &OracleBudget::default()).unwrap().cost().unwrap();
        assert_eq!(opt, cost_from_int(mst_cost));
        assert!(cost <= cost_from_int(2) * opt);
    }
}

fn brute_force_rooted(inst: &RootedQConnInstance) -> Option<Cost> {
    let m = inst.digraph.arc_count();
    let n = inst.digraph.node_count();
    let mut best: Option<Cost> = None;
    for mask in 0u32..1 << m {
        let arcs: Vec<bool> = (0..m).map(|a| mask >> a & 1 == 1).collect();
        if (0..n).filter(|&t| t != inst.root).all(|t| rooted_connectivity(inst, &arcs, t) >= inst.p) {
            let cost: Cost = (0..m).filter(|&a| arcs[a]).map(|a| inst.digraph.arc(a).cost).sum();
            if best.is_none_or(|b| cost < b) {
                best = Some(cost);
            }
        }
    }
    best
}

#[test]
fn rooted_solver_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 50 {
        let n = rng.gen_range(2..=6);
        let p = rng.gen_range(1..=3);
        let mut d = Digraph::new(n);
        for _ in 0..rng.gen_range(n..=12) {
            let tail = rng.gen_range(0..n);
            let head = rng.gen_range(0..n);
            if tail != head {
                d.add_arc(Arc { tail, head, cost: cost_from_int(rng.gen_range(1..=9)), origin: ArcOrigin::Edge(0) });
            }
        }
        let capacity = (0..n).map(|v| if v == 0 || rng.gen_bool(0.5) { p } else { 1 }).collect();
        let inst = RootedQConnInstance { digraph: d, root: 0, p, capacity };
        let expected = brute_force_rooted(&inst);
        match solve_rooted_qconn(&inst) {
            Ok(sol) => {
                assert_eq!(Some(sol.cost), expected);
                checked += 1;
            }
            Err(_) => assert_eq!(expected, None),
        }
    }
}

/// s = 0, a = 1, t = 2, b = 3: the cheap route s-a-t has a safe and an
/// unsafe edge, the detour s-b-t is all safe.
fn fst_gadget() -> FstInstance {
    let mut g = MultiGraph::new(4);
    g.add_edge(0, 1, cost_from_int(1), Label::Safe).unwrap();
    g.add_edge(1, 2, cost_from_int(1), Label::Unsafe).unwrap();
    g.add_edge(0, 3, cost_from_int(2), Label::Safe).unwrap();
    g.add_edge(3, 2, cost_from_int(2), Label::Safe).unwrap();
    FstInstance::new(g, vec![0, 2]).unwrap()
}

fn fst_trace(inst: &FstInstance) -> String {
    use std::fmt::Write as _;
    let sol = solve_fst(inst).unwrap();
    let second = build_second_stage(&inst.graph, &sol.first_stage, &inst.terminals).unwrap();
    let g2 = &second.contraction.graph;
    let mut out = String::new();
    writeln!(out, "stage one: {:?} cost {}", sol.first_stage, inst.graph.cost_of(&sol.first_stage)).unwrap();
    writeln!(out, "node map: {:?}", second.contraction.node_map).unwrap();
    writeln!(out, "terminals: {:?}", second.terminals).unwrap();
    for (k, e) in g2.edges().iter().enumerate() {
        writeln!(out, "edge {k} = original {}: {} - {} cost {}", second.contraction.edge_origin[k], e.u, e.v, e.cost).unwrap();
    }
    writeln!(out, "stage two: {:?}", sol.second_stage).unwrap();
    writeln!(out, "solution: {:?} cost {}", sol.edges, inst.graph.cost_of(&sol.edges)).unwrap();
    out
}

#[test]
fn fst_golden_trace() {
    let inst = fst_gadget();
    let expected = include_str!("golden/fst_path_trace.txt");
    assert_eq!(fst_trace(&inst), expected);
    let opt = exact_opt(&inst, &OracleBudget::full(1)).unwrap();
    assert_eq!(opt, OracleOutcome::Optimal { cost: cost_from_int(4), edges: vec![2, 3] });
}

#[test]
fn fst_unsafe_edge_with_safe_detour() {
    let mut g = MultiGraph::new(4);
    g.add_edge(0, 3, cost_from_int(1), Label::Unsafe).unwrap();
    g.add_edge(0, 1, cost_from_int(1), Label::Safe).unwrap();
    g.add_edge(1, 2, cost_from_int(1), Label::Safe).unwrap();
    g.add_edge(2, 3, cost_from_int(1), Label::Safe).unwrap();
    let inst = FstInstance::new(g, vec![0, 3]).unwrap();
    let sol = solve_fst(&inst).unwrap();
    assert!(sol.edges == vec![0, 1, 2, 3] || sol.edges == vec![1, 2, 3]);
    let opt = exact_opt(&inst, &OracleBudget::full(1)).unwrap();
    assert_eq!(opt, OracleOutcome::Optimal { cost: cost_from_int(3), edges: vec![1, 2, 3] });
}
