//! Small dense two-phase simplex, used as an independent oracle for the
//! specialised solvers. Minimises `c·x` subject to linear rows and `x ≥ 0`.

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) {
        self.rows.push((coeffs, rel, rhs));
    }

    /// Adds a row given as sparse `(column, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], rel: Relation, rhs: f64) {
        let mut row = vec![0.0; self.objective.len()];
        for &(j, a) in terms {
            row[j] += a;
        }
        self.rows.push((row, rel, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self)?.run(self.objective.len())
    }
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is the rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_struct: usize,
    first_artificial: usize,
    cost: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self> {
        let n = lp.objective.len();
        let m = lp.rows.len();
        for (k, (row, _, rhs)) in lp.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Structure(format!("row {k} has {} coefficients, expected {n}", row.len())));
            }
            if !rhs.is_finite() || row.iter().any(|a| !a.is_finite()) {
                return Err(Error::Lp(format!("row {k} has a non-finite entry")));
            }
        }
        // flip rows so every rhs is nonnegative
        let rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|(a, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (a.iter().map(|x| -x).collect(), flipped, -b)
                } else {
                    (a.clone(), *rel, *b)
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = n + n_slack;
        let width = first_artificial + n_art + 1;
        let mut t = vec![vec![0.0; width]; m + 1];
        let mut basis = vec![0; m];
        let (mut s, mut a) = (n, first_artificial);
        for (k, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            t[k][..n].copy_from_slice(coeffs);
            t[k][width - 1] = *rhs;
            match rel {
                Relation::Le => {
                    t[k][s] = 1.0;
                    basis[k] = s;
                    s += 1;
                }
                Relation::Ge => {
                    t[k][s] = -1.0;
                    s += 1;
                    t[k][a] = 1.0;
                    basis[k] = a;
                    a += 1;
                }
                Relation::Eq => {
                    t[k][a] = 1.0;
                    basis[k] = a;
                    a += 1;
                }
            }
        }
        let mut cost = vec![0.0; width - 1];
        cost[..n].copy_from_slice(&lp.objective);
        Ok(Self { t, basis, n_struct: n, first_artificial, cost, pivots: 0 })
    }

    fn width(&self) -> usize {
        self.t[0].len()
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    /// Loads reduced costs for the given column costs into the objective row.
    fn price(&mut self, costs: &[f64]) {
        let w = self.width();
        let m = self.m();
        let mut obj = vec![0.0; w];
        obj[..w - 1].copy_from_slice(costs);
        for k in 0..m {
            let cb = costs[self.basis[k]];
            if cb != 0.0 {
                for j in 0..w {
                    obj[j] -= cb * self.t[k][j];
                }
            }
        }
        self.t[m] = obj;
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width();
        let p = self.t[row][col];
        for j in 0..w {
            self.t[row][j] /= p;
        }
        let pr = self.t[row].clone();
        for k in 0..self.t.len() {
            if k != row {
                let f = self.t[k][col];
                if f != 0.0 {
                    for j in 0..w {
                        self.t[k][j] -= f * pr[j];
                    }
                }
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs simplex iterations over columns `< allowed`; Dantzig's rule with a
    /// switch to Bland's rule after a run of degenerate pivots.
    fn iterate(&mut self, allowed: usize) -> Result<()> {
        let m = self.m();
        let w = self.width();
        let mut degenerate = 0usize;
        let limit = 50_000 + 100 * (m + w);
        for _ in 0..limit {
            let obj = &self.t[m];
            let bland = degenerate > 50;
            let mut enter = None;
            let mut best = -EPS;
            for (j, &rc) in obj.iter().enumerate().take(allowed) {
                if rc < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(col) = enter else { return Ok(()) };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for k in 0..m {
                let a = self.t[k][col];
                if a > EPS {
                    let r = self.t[k][w - 1] / a;
                    let better = r < ratio - EPS
                        || (r <= ratio + EPS && leave.is_some_and(|l| self.basis[k] < self.basis[l]));
                    if better {
                        ratio = r;
                        leave = Some(k);
                    }
                }
            }
            let Some(row) = leave else {
                return Err(Error::Lp("objective is unbounded below".into()));
            };
            degenerate = if ratio <= EPS { degenerate + 1 } else { 0 };
            self.pivot(row, col);
        }
        Err(Error::Lp(format!("no convergence after {limit} pivots (degenerate or ill-conditioned)")))
    }

    fn run(mut self, n: usize) -> Result<LpSolution> {
        let m = self.m();
        let w = self.width();
        let art_costs: Vec<f64> = (0..w - 1).map(|j| if j >= self.first_artificial { 1.0 } else { 0.0 }).collect();
        self.price(&art_costs);
        self.iterate(w - 1)?;
        let infeas = -self.t[m][w - 1];
        let scale = 1.0 + self.t.iter().take(m).map(|r| r[w - 1].abs()).fold(0.0, f64::max);
        if infeas > 1e-7 * scale {
            return Err(Error::Lp(format!("infeasible (phase-one residual {infeas:.3e})")));
        }
        // drive remaining artificials out of the basis
        for k in 0..m {
            if self.basis[k] >= self.first_artificial {
                if let Some(col) = (0..self.first_artificial).find(|&j| self.t[k][j].abs() > EPS) {
                    self.pivot(k, col);
                }
            }
        }
        let cost = self.cost.clone();
        self.price(&cost);
        self.iterate(self.first_artificial)?;
        let mut x = vec![0.0; self.n_struct];
        for k in 0..m {
            if self.basis[k] < n {
                x[self.basis[k]] = self.t[k][w - 1];
            }
        }
        let objective = x.iter().zip(&self.cost).map(|(a, c)| a * c).sum();
        Ok(LpSolution { x, objective, pivots: self.pivots })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y st x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  →  36 at (2, 6)
        let mut lp = LinearProgram::new(vec![-3.0, -5.0]);
        lp.add_row(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add_row(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add_row(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn covering_with_equalities() {
        // min x + 2y st x + y ≥ 3, x − y = 1  →  x = 2, y = 1, value 4
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add_row(vec![1.0, 1.0], Relation::Ge, 3.0);
        lp.add_row(vec![1.0, -1.0], Relation::Eq, 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_is_flipped() {
        // min x st −x ≤ −2
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_row(vec![-1.0], Relation::Le, -2.0);
        assert!((lp.solve().unwrap().objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_row(vec![1.0], Relation::Le, 1.0);
        lp.add_row(vec![1.0], Relation::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(Error::Lp(_))));

        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.add_row(vec![1.0], Relation::Ge, 0.0);
        assert!(matches!(lp.solve(), Err(Error::Lp(_))));
    }

    #[test]
    fn transportation_problem() {
        // two sources (3, 4), two sinks (2, 5); costs [[1, 4], [2, 1]] → 2·1 + 1·4 + 4·1 = 10
        let cost = [[1.0, 4.0], [2.0, 1.0]];
        let mut lp = LinearProgram::new(cost.iter().flatten().copied().collect());
        lp.add_sparse(&[(0, 1.0), (1, 1.0)], Relation::Le, 3.0);
        lp.add_sparse(&[(2, 1.0), (3, 1.0)], Relation::Le, 4.0);
        lp.add_sparse(&[(0, 1.0), (2, 1.0)], Relation::Eq, 2.0);
        lp.add_sparse(&[(1, 1.0), (3, 1.0)], Relation::Eq, 5.0);
        assert!((lp.solve().unwrap().objective - 10.0).abs() < 1e-9);
    }
}
