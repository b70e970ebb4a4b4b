//! Dinic max-flow over a residual arc list, generic in the capacity type.
//!
//! Exact verifiers run it over `i64` or [`Cost`]; LP separation runs it over
//! `f64`, where capacities below [`FLOAT_EPS`] count as saturated.

use std::collections::VecDeque;
use std::ops::{Add, Sub};

use num_traits::Zero;

use crate::cost::Cost;

pub const FLOAT_EPS: f64 = 1e-12;

pub trait Capacity: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> {
    fn zero() -> Self;
    fn is_positive(self) -> bool;

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Capacity for i64 {
    fn zero() -> Self {
        0
    }
    fn is_positive(self) -> bool {
        self > 0
    }
}

impl Capacity for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_positive(self) -> bool {
        self > FLOAT_EPS
    }
}

impl Capacity for Cost {
    fn zero() -> Self {
        <Cost as Zero>::zero()
    }
    fn is_positive(self) -> bool {
        self > <Cost as Zero>::zero()
    }
}

#[derive(Debug, Clone)]
pub struct FlowNetwork<C> {
    adjacency: Vec<Vec<usize>>,
    to: Vec<usize>,
    residual: Vec<C>,
    original: Vec<C>,
}

impl<C: Capacity> FlowNetwork<C> {
    pub fn new(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            to: Vec::new(),
            residual: Vec::new(),
            original: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Adds a directed arc and returns its index; the paired reverse arc is
    /// `index ^ 1`.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: C) -> usize {
        self.push_pair(from, to, cap, C::zero())
    }

    /// Adds an undirected edge: both directions share one capacity.
    pub fn add_undirected(&mut self, a: usize, b: usize, cap: C) -> usize {
        self.push_pair(a, b, cap, cap)
    }

    fn push_pair(&mut self, from: usize, to: usize, forward: C, backward: C) -> usize {
        let idx = self.to.len();
        self.to.push(to);
        self.residual.push(forward);
        self.original.push(forward);
        self.adjacency[from].push(idx);
        self.to.push(from);
        self.residual.push(backward);
        self.original.push(backward);
        self.adjacency[to].push(idx + 1);
        idx
    }

    /// Net flow currently pushed along arc `idx` in its forward direction.
    pub fn flow_on(&self, idx: usize) -> C {
        self.original[idx] - self.residual[idx]
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> C {
        self.run(s, t, None)
    }

    /// Stops as soon as the flow value reaches `limit`.
    pub fn max_flow_bounded(&mut self, s: usize, t: usize, limit: C) -> C {
        self.run(s, t, Some(limit))
    }

    fn run(&mut self, s: usize, t: usize, limit: Option<C>) -> C {
        let mut total = C::zero();
        if s == t {
            return total;
        }
        let n = self.node_count();
        let mut level = vec![usize::MAX; n];
        let mut cursor = vec![0usize; n];
        loop {
            if let Some(lim) = limit {
                if !(lim - total).is_positive() {
                    break;
                }
            }
            if !self.bfs_levels(s, t, &mut level) {
                break;
            }
            cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let want = limit.map(|lim| lim - total);
                let pushed = self.augment(s, t, want, &level, &mut cursor);
                match pushed {
                    Some(f) if f.is_positive() => total = total + f,
                    _ => break,
                }
                if let Some(lim) = limit {
                    if !(lim - total).is_positive() {
                        return total;
                    }
                }
            }
        }
        total
    }

    fn bfs_levels(&self, s: usize, t: usize, level: &mut [usize]) -> bool {
        level.iter_mut().for_each(|l| *l = usize::MAX);
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adjacency[u] {
                let v = self.to[a];
                if level[v] == usize::MAX && self.residual[a].is_positive() {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level[t] != usize::MAX
    }

    /// Finds one blocking-flow augmenting path with an explicit stack and
    /// pushes its bottleneck.
    fn augment(
        &mut self,
        s: usize,
        t: usize,
        want: Option<C>,
        level: &[usize],
        cursor: &mut [usize],
    ) -> Option<C> {
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let mut bottleneck = want.unwrap_or(self.residual[path[0]]);
                for &a in &path {
                    bottleneck = bottleneck.min(self.residual[a]);
                }
                for &a in &path {
                    self.residual[a] = self.residual[a] - bottleneck;
                    self.residual[a ^ 1] = self.residual[a ^ 1] + bottleneck;
                }
                return Some(bottleneck);
            }
            let mut advanced = false;
            while cursor[u] < self.adjacency[u].len() {
                let a = self.adjacency[u][cursor[u]];
                let v = self.to[a];
                if self.residual[a].is_positive() && level[v] == level[u] + 1 {
                    path.push(a);
                    u = v;
                    advanced = true;
                    break;
                }
                cursor[u] += 1;
            }
            if !advanced {
                if u == s {
                    return None;
                }
                // dead end: retreat and skip the arc that led here
                let a = path.pop().expect("non-root node has an incoming path arc");
                u = self.to[a ^ 1];
                cursor[u] += 1;
            }
        }
    }

    /// Nodes reachable from `s` in the residual network after a max-flow run.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.adjacency[u] {
                let v = self.to[a];
                if !seen[v] && self.residual[a].is_positive() {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directed_diamond() {
        let mut net = FlowNetwork::<i64>::new(4);
        net.add_arc(0, 1, 3);
        net.add_arc(0, 2, 2);
        net.add_arc(1, 2, 5);
        net.add_arc(1, 3, 2);
        net.add_arc(2, 3, 3);
        assert_eq!(net.max_flow(0, 3), 5);
        let side = net.source_side(0);
        assert!(side[0] && !side[3]);
    }

    #[test]
    fn bounded_run_stops_at_limit() {
        let mut net = FlowNetwork::<i64>::new(2);
        for _ in 0..5 {
            net.add_undirected(0, 1, 1);
        }
        assert_eq!(net.max_flow_bounded(0, 1, 3), 3);
    }

    #[test]
    fn float_capacities() {
        let mut net = FlowNetwork::<f64>::new(3);
        net.add_undirected(0, 1, 0.5);
        net.add_undirected(1, 2, 0.25);
        net.add_undirected(0, 2, 0.5);
        assert!((net.max_flow(0, 2) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn undirected_edge_carries_flow_either_way() {
        let mut net = FlowNetwork::<i64>::new(3);
        net.add_undirected(1, 0, 1);
        net.add_undirected(2, 1, 1);
        assert_eq!(net.max_flow(0, 2), 1);
    }
}
