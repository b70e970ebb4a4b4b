//! Fixed inputs shared by the criterion benches.

use flexconn_core::{generate, GenParams, InstanceClass, Label, MultiGraph, Problem, Requirements, SndpInstance};
use flexconn_core::cost::cost_from_int;

/// `k x k` grid with unit costs and every third edge unsafe.
pub fn grid(k: usize) -> MultiGraph {
    let mut g = MultiGraph::new(k * k);
    let mut id = 0;
    for r in 0..k {
        for c in 0..k {
            let v = r * k + c;
            let mut link = |w: usize| {
                let label = if id % 3 == 0 { Label::Unsafe } else { Label::Safe };
                g.add_edge(v, w, cost_from_int(1 + (id % 5) as i64), label).expect("grid edge");
                id += 1;
            };
            if c + 1 < k {
                link(v + 1);
            }
            if r + 1 < k {
                link(v + k);
            }
        }
    }
    g
}

/// Corner-to-corner requirement of 2 on a grid.
pub fn grid_sndp(k: usize) -> SndpInstance {
    let mut requirements = Requirements::new();
    requirements.set(0, k * k - 1, 2);
    requirements.set(k - 1, k * (k - 1), 2);
    SndpInstance { graph: grid(k), requirements }
}

pub fn random_problem(class: InstanceClass, n: usize, seed: u64) -> Problem {
    generate(class, &GenParams::new(n, seed)).expect("generator").problem
}
