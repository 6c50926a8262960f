//! Dense two-phase primal simplex with Bland's rule.
//!
//! Sized for deficiency problems: a few hundred columns at most. Bland's
//! smallest-index rule guarantees termination on degenerate vertices, which
//! these LPs hit constantly (many kernels attain the same optimum).

use crate::error::{Error, Result};

/// Reduced-cost tolerance.
pub const REDUCED_COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;
const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

/// `minimize c·x` subject to `A_eq x = b_eq`, `A_le x <= b_le`, `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub inequalities: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { objective: vec![0.0; num_vars], ..Default::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.num_vars());
        self.equalities.push((row, rhs));
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.num_vars());
        self.inequalities.push((row, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self)?.run(self)
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    num_structural: usize,
    num_slack: usize,
    artificial_start: usize,
    width: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self> {
        let n = lp.num_vars();
        let n_slack = lp.inequalities.len();
        let m = lp.equalities.len() + n_slack;
        for (row, rhs) in lp.equalities.iter().chain(&lp.inequalities) {
            if row.len() != n || !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Lp("malformed constraint row".into()));
            }
        }

        // Rows that cannot start with their slack basic need an artificial.
        let mut needs_artificial = Vec::with_capacity(m);
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (row, b) in &lp.equalities {
            let sign = if *b < 0.0 { -1.0 } else { 1.0 };
            rows.push(row.iter().map(|v| v * sign).collect::<Vec<_>>());
            rhs.push(b * sign);
            needs_artificial.push(true);
        }
        for (k, (row, b)) in lp.inequalities.iter().enumerate() {
            let sign = if *b < 0.0 { -1.0 } else { 1.0 };
            let mut full: Vec<f64> = row.iter().map(|v| v * sign).collect();
            full.resize(n + n_slack, 0.0);
            full[n + k] = sign;
            rows.push(full);
            rhs.push(b * sign);
            needs_artificial.push(sign < 0.0);
        }
        let n_art = needs_artificial.iter().filter(|&&a| a).count();
        let width = n + n_slack + n_art;
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n + n_slack;
        for (i, row) in rows.iter_mut().enumerate() {
            row.resize(width, 0.0);
            if needs_artificial[i] {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                // inequality rows follow the equalities
                basis.push(n + i - lp.equalities.len());
            }
        }
        Ok(Self {
            rows,
            rhs,
            basis,
            num_structural: n,
            num_slack: n_slack,
            artificial_start: n + n_slack,
            width,
            pivots: 0,
        })
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i].abs() < 1e-15 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    /// Minimize `cost` over columns `< limit` starting from the current basis.
    fn optimize(&mut self, cost: &[f64], limit: usize) -> Result<()> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Lp("pivot limit exceeded".into()));
            }
            // Bland: lowest-index column with negative reduced cost.
            let entering = (0..limit).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut reduced = cost[j];
                for (i, row) in self.rows.iter().enumerate() {
                    reduced -= cost[self.basis[i]] * row[j];
                }
                reduced < -REDUCED_COST_TOL
            });
            let Some(col) = entering else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[col];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14
                                || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Lp("objective unbounded below".into()));
            };
            self.pivot(r, col);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        if self.artificial_start < self.width {
            let mut phase1 = vec![0.0; self.width];
            for c in phase1.iter_mut().skip(self.artificial_start) {
                *c = 1.0;
            }
            self.optimize(&phase1, self.width)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.rhs)
                .filter(|(b, _)| **b >= self.artificial_start)
                .map(|(_, v)| *v)
                .sum();
            if infeasibility > FEASIBILITY_TOL {
                return Err(Error::Lp(format!("infeasible (phase-one residual {infeasibility:.3e})")));
            }
            // Drive zero-level artificials out of the basis; drop redundant rows.
            let mut r = 0;
            while r < self.rows.len() {
                if self.basis[r] >= self.artificial_start {
                    let col = (0..self.artificial_start).find(|&j| self.rows[r][j].abs() > 1e-9);
                    match col {
                        Some(j) => {
                            self.pivot(r, j);
                            r += 1;
                        }
                        None => {
                            self.rows.remove(r);
                            self.rhs.remove(r);
                            self.basis.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }

        let mut cost = vec![0.0; self.width];
        cost[..self.num_structural].copy_from_slice(&lp.objective);
        let limit = self.num_structural + self.num_slack;
        self.optimize(&cost, limit)?;

        let mut x = vec![0.0; self.num_structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_structural {
                x[b] = self.rhs[i].max(0.0);
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective, pivots: self.pivots })
    }
}
