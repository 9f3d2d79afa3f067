//! Dense two-phase primal simplex for small-row, many-column programs
//!
//! ```text
//! maximize c·x  subject to  a_r·x {<=, >=, =} b_r,  x >= 0
//! ```
//!
//! Pricing is Dantzig's rule; after `3 * columns` consecutive degenerate
//! pivots the phase switches to Bland's rule for the rest of its run. The
//! final basis is re-solved from the original data by LU to strip drift.

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// One multiplier per row: `≥ 0` for `Le`, `≤ 0` for `Ge`, free for `Eq`,
    /// with `c - Aᵀy ≤ 0` on every column.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible {
        /// Phase-I point (structural columns).
        x: Vec<f64>,
        /// Sum of artificial values at the phase-I optimum.
        infeasibility: f64,
        iterations: usize,
    },
    Unbounded {
        /// Nonnegative direction over the structural columns with `A d`
        /// inside the recession cone of the rows and `c·d > 0`.
        ray: Vec<f64>,
        iterations: usize,
    },
}

const PIVOT_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-9;

struct Tableau {
    rows: usize,
    cols: usize,
    structural: usize,
    first_artificial: usize,
    /// Row-major `rows x cols`.
    t: Vec<f64>,
    b: Vec<f64>,
    basis: Vec<usize>,
    /// Original (sign-normalized) column data, for the final LU re-solve.
    orig: Vec<f64>,
    orig_b: Vec<f64>,
    sign: Vec<f64>,
    iterations: usize,
    cap: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self> {
        let n = lp.objective.len();
        let rows = lp.rows.len();
        for r in &lp.rows {
            if r.coeffs.len() != n {
                return Err(Error::Dimension {
                    what: "constraint row",
                    expected: n,
                    found: r.coeffs.len(),
                });
            }
        }
        let slacks = lp.rows.iter().filter(|r| r.sense != RowSense::Eq).count();
        let first_artificial = n + slacks;
        let cols = first_artificial + rows;
        let mut t = vec![0.0; rows * cols];
        let mut b = vec![0.0; rows];
        let mut sign = vec![1.0; rows];
        let mut slack = n;
        for (r, row) in lp.rows.iter().enumerate() {
            let s = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            sign[r] = s;
            let line = &mut t[r * cols..(r + 1) * cols];
            for (dst, &a) in line.iter_mut().zip(&row.coeffs) {
                *dst = s * a;
            }
            match row.sense {
                RowSense::Le => {
                    line[slack] = s;
                    slack += 1;
                }
                RowSense::Ge => {
                    line[slack] = -s;
                    slack += 1;
                }
                RowSense::Eq => {}
            }
            line[first_artificial + r] = 1.0;
            b[r] = s * row.rhs;
        }
        let cap = 5_000usize.max(50 * (rows + cols));
        Ok(Tableau {
            rows,
            cols,
            structural: n,
            first_artificial,
            orig: t.clone(),
            orig_b: b.clone(),
            t,
            b,
            basis: (0..rows).map(|r| first_artificial + r).collect(),
            sign,
            iterations: 0,
            cap,
        })
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.cols + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize, d: &mut [f64], z: &mut f64) {
        let cols = self.cols;
        let p = self.t[pr * cols + pc];
        for v in &mut self.t[pr * cols..(pr + 1) * cols] {
            *v /= p;
        }
        self.b[pr] /= p;
        let prow: Vec<f64> = self.t[pr * cols..(pr + 1) * cols].to_vec();
        let pb = self.b[pr];
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.t[r * cols + pc];
            if factor == 0.0 {
                continue;
            }
            for (v, &pv) in self.t[r * cols..(r + 1) * cols].iter_mut().zip(&prow) {
                *v -= factor * pv;
            }
            self.t[r * cols + pc] = 0.0;
            self.b[r] -= factor * pb;
            if self.b[r] < 0.0 && self.b[r] > -1e-12 {
                self.b[r] = 0.0;
            }
        }
        let factor = d[pc];
        if factor != 0.0 {
            for (v, &pv) in d.iter_mut().zip(&prow) {
                *v -= factor * pv;
            }
            d[pc] = 0.0;
            *z += factor * pb;
        }
        self.basis[pr] = pc;
    }

    fn reduced_costs(&self, cost: &[f64]) -> (Vec<f64>, f64) {
        let mut d = cost.to_vec();
        let mut z = 0.0;
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for (dj, v) in d.iter_mut().zip(&self.t[r * self.cols..(r + 1) * self.cols]) {
                *dj -= cb * v;
            }
            z += cb * self.b[r];
        }
        (d, z)
    }

    fn run_phase(&mut self, cost: &[f64], allowed: usize, phase: u8) -> Result<PhaseEnd> {
        let (mut d, mut z) = self.reduced_costs(cost);
        let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let opt_tol = 1e-9 * scale;
        let mut bland = false;
        let mut degenerate_run = 0usize;
        let mut is_basic = vec![false; self.cols];
        for &bv in &self.basis {
            is_basic[bv] = true;
        }
        loop {
            let entering = if bland {
                (0..allowed).find(|&j| !is_basic[j] && d[j] > opt_tol)
            } else {
                (0..allowed)
                    .filter(|&j| !is_basic[j] && d[j] > opt_tol)
                    .max_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a)))
            };
            let Some(pc) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.b[r].max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * lratio.abs().max(1e-300);
                        let better = if ratio < lratio && !tie {
                            true
                        } else if tie {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > self.at(lr, pc)
                            }
                        } else {
                            false
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((pr, ratio)) = leave else {
                return Ok(PhaseEnd::Unbounded(pc));
            };

            if self.iterations >= self.cap {
                return Err(Error::SolverStalled {
                    iterations: self.iterations,
                    phase,
                    objective: z,
                });
            }
            self.iterations += 1;
            if ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > 3 * self.cols {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            is_basic[self.basis[pr]] = false;
            is_basic[pc] = true;
            self.pivot(pr, pc, &mut d, &mut z);
        }
    }

    /// Pivots zero-level artificials out of the basis where a real column can
    /// replace them. Rows where none can are redundant and keep theirs.
    fn expel_artificials(&mut self) {
        let mut dummy_d = vec![0.0; self.cols];
        let mut dummy_z = 0.0;
        for r in 0..self.rows {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let best = (0..self.first_artificial)
                .filter(|j| !self.basis.contains(j))
                .map(|j| (j, self.at(r, j).abs()))
                .filter(|&(_, a)| a > PIVOT_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, _)) = best {
                self.pivot(r, j, &mut dummy_d, &mut dummy_z);
                for v in &mut self.b {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
    }

    fn tableau_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.cols];
        for (r, &bv) in self.basis.iter().enumerate() {
            x[bv] = self.b[r].max(0.0);
        }
        x
    }

    /// Re-solves `B x_B = b` and `Bᵀ u = c_B` from the original data.
    fn polished(&self, cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.rows;
        let mut x = self.tableau_point();
        let cb: Vec<f64> = self.basis.iter().map(|&bv| cost[bv]).collect();
        if m == 0 {
            return (x, Vec::new());
        }
        let mut bmat = vec![0.0; m * m];
        for r in 0..m {
            for (c, &bv) in self.basis.iter().enumerate() {
                bmat[r * m + c] = self.orig[r * self.cols + bv];
            }
        }
        if let Some(xb) = linalg::solve_square(m, &bmat, &self.orig_b) {
            if xb.iter().all(|&v| v >= -1e-9) {
                for (&bv, v) in self.basis.iter().zip(xb) {
                    x[bv] = v.max(0.0);
                }
            }
        }
        let mut bt = vec![0.0; m * m];
        for r in 0..m {
            for c in 0..m {
                bt[r * m + c] = bmat[c * m + r];
            }
        }
        let u = linalg::solve_square(m, &bt, &cb).unwrap_or_else(|| {
            // u_r = c_B · (column of artificial r in the current tableau).
            (0..m)
                .map(|r| {
                    (0..m)
                        .map(|i| cb[i] * self.at(i, self.first_artificial + r))
                        .sum()
                })
                .collect()
        });
        (x, u)
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let mut tab = Tableau::build(lp)?;
    let n = tab.structural;

    let mut phase1_cost = vec![0.0; tab.cols];
    for c in phase1_cost.iter_mut().skip(tab.first_artificial) {
        *c = -1.0;
    }
    // Phase I is bounded below by zero, so it cannot end unbounded.
    tab.run_phase(&phase1_cost, tab.cols, 1)?;
    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(&tab.b)
        .filter(|(&bv, _)| bv >= tab.first_artificial)
        .map(|(_, &v)| v.max(0.0))
        .sum();
    let b_scale = tab.orig_b.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if infeasibility > PHASE1_TOL * b_scale {
        let x = tab.tableau_point()[..n].to_vec();
        return Ok(LpOutcome::Infeasible {
            x,
            infeasibility,
            iterations: tab.iterations,
        });
    }
    tab.expel_artificials();

    let mut cost = vec![0.0; tab.cols];
    cost[..n].copy_from_slice(&lp.objective);
    match tab.run_phase(&cost, tab.first_artificial, 2)? {
        PhaseEnd::Unbounded(pc) => {
            let mut ray = vec![0.0; n];
            if pc < n {
                ray[pc] = 1.0;
            }
            for (r, &bv) in tab.basis.iter().enumerate() {
                if bv < n {
                    ray[bv] = -tab.at(r, pc);
                }
            }
            for v in &mut ray {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            Ok(LpOutcome::Unbounded {
                ray,
                iterations: tab.iterations,
            })
        }
        PhaseEnd::Optimal => {
            let (x, u) = tab.polished(&cost);
            let x = x[..n].to_vec();
            let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
            let duals = u.iter().zip(&tab.sign).map(|(u, s)| u * s).collect();
            Ok(LpOutcome::Optimal(LpSolution {
                x,
                value,
                duals,
                iterations: tab.iterations,
            }))
        }
    }
}
