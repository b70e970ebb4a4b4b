//! Covering LPs with exponentially many cut rows, solved by row generation.
//!
//! Every LP here has the shape `min c·x` subject to rows `Σ a_j x_j ≥ b` and
//! box bounds `0 ≤ x ≤ 1`. The default backend is a dense two-phase simplex
//! using Bland's rule, so every returned point is a basic solution, i.e. a
//! vertex of the polytope spanned by the generated rows.

use crate::error::{Error, Result};

/// Violation tolerance for separation.
pub const EPS_SEP: f64 = 1e-7;
/// Slack for treating a coordinate as at least one half during rounding.
pub const EPS_ROUND: f64 = 1e-6;
/// Tolerance on the box bounds of returned points.
pub const EPS_BOUNDS: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-9;
const PHASE_ONE_TOL: f64 = 1e-7;
const MAX_PIVOTS: usize = 200_000;
const DEFAULT_MAX_ROUNDS: usize = 2_000;

/// A covering row `Σ coeff · x[var] ≥ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl CutRow {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        self.rhs - self.lhs(x)
    }
}

/// Produces violated rows for a candidate point, or none once the point
/// satisfies every row of the family up to [`EPS_SEP`].
pub trait CutOracle {
    fn separate(&mut self, x: &[f64]) -> Vec<CutRow>;
}

impl<F: FnMut(&[f64]) -> Vec<CutRow>> CutOracle for F {
    fn separate(&mut self, x: &[f64]) -> Vec<CutRow> {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fixing {
    #[default]
    Free,
    Zero,
    One,
}

/// A box-bounded covering LP over free variables only.
#[derive(Debug, Clone)]
pub struct CoveringLp {
    pub costs: Vec<f64>,
    pub rows: Vec<CutRow>,
}

#[derive(Debug, Clone)]
pub struct LpPoint {
    pub x: Vec<f64>,
    pub objective: f64,
    pub vertex: bool,
}

/// Seam for plugging in another LP engine.
pub trait LpBackend {
    fn solve(&self, lp: &CoveringLp) -> Result<LpPoint>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    /// One value per variable, fixed ones included.
    pub x: Vec<f64>,
    pub objective: f64,
    pub vertex: bool,
    /// Every row generated during the solve, in generation order.
    pub rows: Vec<CutRow>,
    pub rounds: usize,
}

impl FractionalSolution {
    pub fn tight_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.violation(&self.x).abs() <= EPS_SEP).count()
    }

    pub fn fractional_count(&self) -> usize {
        self.x.iter().filter(|&&v| v > EPS_ROUND && v < 1.0 - EPS_ROUND).count()
    }
}

pub struct CutLpSolver<B = DenseSimplex> {
    backend: B,
    max_rounds: usize,
}

impl Default for CutLpSolver<DenseSimplex> {
    fn default() -> Self {
        Self { backend: DenseSimplex, max_rounds: DEFAULT_MAX_ROUNDS }
    }
}

impl<B: LpBackend> CutLpSolver<B> {
    pub fn with_backend(backend: B) -> Self {
        Self { backend, max_rounds: DEFAULT_MAX_ROUNDS }
    }

    pub fn max_rounds(mut self, rounds: usize) -> Self {
        self.max_rounds = rounds;
        self
    }

    /// Minimizes `costs · x` over `[0,1]^n` subject to every row `oracle`
    /// can produce, honouring `fixed`. Starts from `seed_rows`.
    pub fn solve(
        &self,
        costs: &[f64],
        fixed: &[Fixing],
        seed_rows: Vec<CutRow>,
        oracle: &mut dyn CutOracle,
    ) -> Result<FractionalSolution> {
        assert_eq!(costs.len(), fixed.len());
        let free: Vec<usize> = (0..costs.len()).filter(|&j| fixed[j] == Fixing::Free).collect();
        let mut position = vec![usize::MAX; costs.len()];
        for (k, &j) in free.iter().enumerate() {
            position[j] = k;
        }
        let free_costs: Vec<f64> = free.iter().map(|&j| costs[j]).collect();
        let mut rows = seed_rows;

        for round in 0..self.max_rounds {
            let mut reduced = Vec::with_capacity(rows.len());
            for (idx, row) in rows.iter().enumerate() {
                let mut rhs = row.rhs;
                let mut terms = Vec::new();
                for &(j, a) in &row.terms {
                    match fixed[j] {
                        Fixing::One => rhs -= a,
                        Fixing::Zero => {}
                        Fixing::Free => terms.push((position[j], a)),
                    }
                }
                let max_lhs: f64 = terms.iter().map(|&(_, a)| a.max(0.0)).sum();
                if max_lhs < rhs - EPS_SEP {
                    // even with every free variable at its best the row fails
                    return Err(Error::InfeasibleLp { row: idx });
                }
                reduced.push(CutRow { terms, rhs });
            }
            let point = self.backend.solve(&CoveringLp { costs: free_costs.clone(), rows: reduced })?;

            let mut x = vec![0.0; costs.len()];
            for j in 0..costs.len() {
                x[j] = match fixed[j] {
                    Fixing::One => 1.0,
                    Fixing::Zero => 0.0,
                    Fixing::Free => point.x[position[j]].clamp(0.0, 1.0),
                };
            }
            let fresh: Vec<CutRow> = oracle
                .separate(&x)
                .into_iter()
                .filter(|r| r.violation(&x) > EPS_SEP)
                .filter(|r| !rows.contains(r))
                .collect();
            if fresh.is_empty() {
                let objective = costs.iter().zip(&x).map(|(c, v)| c * v).sum();
                return Ok(FractionalSolution { x, objective, vertex: point.vertex, rows, rounds: round + 1 });
            }
            rows.extend(fresh);
        }
        Err(Error::IterationCap(self.max_rounds))
    }
}

/// Convenience wrapper using the default backend.
pub fn solve_cut_lp(costs: &[f64], fixed: &[Fixing], oracle: &mut dyn CutOracle) -> Result<FractionalSolution> {
    CutLpSolver::default().solve(costs, fixed, Vec::new(), oracle)
}

/// Dense two-phase simplex with Bland's anti-cycling rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSimplex;

impl LpBackend for DenseSimplex {
    fn solve(&self, lp: &CoveringLp) -> Result<LpPoint> {
        Tableau::build(lp).solve(lp)
    }
}

/// Column layout: `[x (n) | surplus (m) | upper slack (n) | artificial (k)]`.
struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n: usize,
    m: usize,
    first_artificial: usize,
    artificial_row: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn build(lp: &CoveringLp) -> Self {
        let n = lp.costs.len();
        let m = lp.rows.len();
        let needs_artificial: Vec<bool> = lp.rows.iter().map(|r| r.rhs > 0.0).collect();
        let k = needs_artificial.iter().filter(|&&b| b).count();
        let first_artificial = n + m + n;
        let width = first_artificial + k + 1;
        let rhs_col = width - 1;

        let mut rows = Vec::with_capacity(m + n);
        let mut basis = Vec::with_capacity(m + n);
        let mut artificial_row = Vec::new();
        let mut next_art = first_artificial;
        for (i, row) in lp.rows.iter().enumerate() {
            let mut r = vec![0.0; width];
            let sign = if needs_artificial[i] { 1.0 } else { -1.0 };
            for &(j, a) in &row.terms {
                r[j] += sign * a;
            }
            r[n + i] = -sign;
            r[rhs_col] = sign * row.rhs;
            if needs_artificial[i] {
                r[next_art] = 1.0;
                basis.push(next_art);
                artificial_row.push(rows.len());
                next_art += 1;
            } else {
                basis.push(n + i);
            }
            rows.push(r);
        }
        for j in 0..n {
            let mut r = vec![0.0; width];
            r[j] = 1.0;
            r[n + m + j] = 1.0;
            r[rhs_col] = 1.0;
            basis.push(n + m + j);
            rows.push(r);
        }
        Self { rows, basis, n, m, first_artificial, artificial_row, width }
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize, objective: &mut [f64]) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = objective[c];
        if f != 0.0 {
            for (v, pv) in objective.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for `costs` given the current basis; last entry is
    /// minus the objective value.
    fn objective_row(&self, costs: &[f64]) -> Vec<f64> {
        let mut obj = costs.to_vec();
        obj.resize(self.width, 0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = obj[b];
            if cb != 0.0 {
                for (v, rv) in obj.iter_mut().zip(&self.rows[i]) {
                    *v -= cb * rv;
                }
            }
        }
        obj
    }

    fn optimize(&mut self, objective: &mut [f64], allow_artificial: bool, pivots: &mut usize) -> Result<()> {
        let limit = if allow_artificial { self.width - 1 } else { self.first_artificial };
        loop {
            let Some(c) = (0..limit).find(|&j| objective[j] < -PIVOT_TOL) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match best {
                        None => true,
                        Some((r, _, b)) => ratio < r - 1e-12 || (ratio <= r + 1e-12 && self.basis[i] < b),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            // box bounds keep every covering LP bounded
            let (_, r, _) = best.expect("bounded LP has a leaving row");
            self.pivot(r, c, objective);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::IterationCap(MAX_PIVOTS));
            }
        }
    }

    fn solve(mut self, lp: &CoveringLp) -> Result<LpPoint> {
        let mut pivots = 0;
        if !self.artificial_row.is_empty() {
            let mut phase_one = vec![0.0; self.width];
            for j in self.first_artificial..self.width - 1 {
                phase_one[j] = 1.0;
            }
            let mut obj = self.objective_row(&phase_one);
            self.optimize(&mut obj, true, &mut pivots)?;
            let infeasibility = -obj[self.width - 1];
            if infeasibility > PHASE_ONE_TOL {
                let row = self
                    .artificial_row
                    .iter()
                    .enumerate()
                    .filter_map(|(k, _)| {
                        let col = self.first_artificial + k;
                        self.basis.iter().position(|&b| b == col).map(|i| (self.rhs(i), k))
                    })
                    .fold(None, |acc: Option<(f64, usize)>, (v, k)| match acc {
                        Some((bv, _)) if bv >= v => acc,
                        _ => Some((v, k)),
                    })
                    .map(|(_, k)| k)
                    .unwrap_or(0);
                let original_row = self.artificial_row_index(row);
                return Err(Error::InfeasibleLp { row: original_row });
            }
            // drive zero-level artificials out of the basis
            for i in 0..self.rows.len() {
                if self.basis[i] >= self.first_artificial {
                    if let Some(c) = (0..self.first_artificial).find(|&j| self.rows[i][j].abs() > PIVOT_TOL) {
                        let mut dummy = vec![0.0; self.width];
                        self.pivot(i, c, &mut dummy);
                    }
                }
            }
        }
        let mut obj = self.objective_row(&lp.costs);
        self.optimize(&mut obj, false, &mut pivots)?;

        let mut x = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rhs(i);
            }
        }
        let objective = lp.costs.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpPoint { x, objective, vertex: true })
    }

    /// Maps the k-th artificial back to the index of its covering row.
    fn artificial_row_index(&self, k: usize) -> usize {
        let tableau_row = self.artificial_row[k];
        debug_assert!(tableau_row < self.m);
        tableau_row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(terms: &[(usize, f64)], rhs: f64) -> CutRow {
        CutRow { terms: terms.to_vec(), rhs }
    }

    fn no_cuts(_: &[f64]) -> Vec<CutRow> {
        Vec::new()
    }

    #[test]
    fn no_demands_gives_zero() {
        let sol = solve_cut_lp(&[1.0, 2.0], &[Fixing::Free; 2], &mut no_cuts).unwrap();
        assert_eq!(sol.x, vec![0.0, 0.0]);
        assert_eq!(sol.objective, 0.0);
        assert!(sol.vertex);
    }

    #[test]
    fn single_forced_edge() {
        let mut oracle = |x: &[f64]| {
            if x[0] < 1.0 - EPS_SEP {
                vec![row(&[(0, 1.0)], 1.0)]
            } else {
                vec![]
            }
        };
        let sol = solve_cut_lp(&[3.0], &[Fixing::Free], &mut oracle).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn static_lp_matches_hand_solution() {
        // min x0 + x1 + x2 s.t. x0 + x1 ≥ 1, x1 + x2 ≥ 1, x0 + x2 ≥ 1  -> all 1/2
        let lp = CoveringLp {
            costs: vec![1.0, 1.0, 1.0],
            rows: vec![row(&[(0, 1.0), (1, 1.0)], 1.0), row(&[(1, 1.0), (2, 1.0)], 1.0), row(&[(0, 1.0), (2, 1.0)], 1.0)],
        };
        let p = DenseSimplex.solve(&lp).unwrap();
        assert!((p.objective - 1.5).abs() < 1e-9);
        for v in p.x {
            assert!((v - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn detects_infeasible_rows() {
        let lp = CoveringLp { costs: vec![1.0], rows: vec![row(&[(0, 1.0)], 0.5), row(&[(0, 1.0)], 2.0)] };
        // the second row cannot be met with x ≤ 1
        assert!(matches!(DenseSimplex.solve(&lp), Err(Error::InfeasibleLp { row: 1 })));
    }

    #[test]
    fn fixings_are_respected() {
        let mut oracle = |x: &[f64]| {
            let r = row(&[(0, 1.0), (1, 1.0)], 1.0);
            if r.violation(x) > EPS_SEP {
                vec![r]
            } else {
                vec![]
            }
        };
        let sol = solve_cut_lp(&[1.0, 5.0], &[Fixing::Zero, Fixing::Free], &mut oracle).unwrap();
        assert_eq!(sol.x[0], 0.0);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);

        let sol = solve_cut_lp(&[1.0, 5.0], &[Fixing::Free, Fixing::One], &mut oracle).unwrap();
        assert!(sol.x[0].abs() < 1e-9);
        assert_eq!(sol.x[1], 1.0);
    }

    #[test]
    fn saturated_fixed_row_is_an_infeasibility_certificate() {
        let mut oracle = |_: &[f64]| vec![row(&[(0, 1.0), (1, 1.0)], 2.0)];
        let res = solve_cut_lp(&[1.0, 1.0], &[Fixing::Zero, Fixing::Free], &mut oracle);
        assert!(matches!(res, Err(Error::InfeasibleLp { .. })));
    }

    #[test]
    fn negative_rhs_rows_are_slack() {
        let lp = CoveringLp { costs: vec![1.0], rows: vec![row(&[(0, 1.0)], -1.0)] };
        let p = DenseSimplex.solve(&lp).unwrap();
        assert_eq!(p.x, vec![0.0]);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let mut count = 0.0;
        let mut oracle = |_: &[f64]| {
            count += 1.0;
            vec![row(&[(0, 1.0)], 1e-3 * count)]
        };
        let res = CutLpSolver::default().max_rounds(3).solve(&[1.0], &[Fixing::Free], vec![], &mut oracle);
        assert!(matches!(res, Err(Error::IterationCap(3))));
    }
}
