//! Dense two-phase primal simplex.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// min c·x subject to rows and bounds. Bounds may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n_vars],
            upper: vec![f64::INFINITY; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coefficients: Vec<f64>, sense: Sense, rhs: f64) {
        debug_assert_eq!(coefficients.len(), self.n_vars());
        self.rows.push(coefficients);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::LengthMismatch {
                what: "bounds",
                expected: n,
                got: self.lower.len().min(self.upper.len()),
            });
        }
        if self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(Error::LengthMismatch {
                what: "row metadata",
                expected: self.rows.len(),
                got: self.senses.len(),
            });
        }
        for row in &self.rows {
            if row.len() != n {
                return Err(Error::LengthMismatch { what: "row length", expected: n, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "constraint coefficients", index: 0 });
            }
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::InvalidParameter {
                    name: "bounds",
                    reason: format!("empty range for variable {j}"),
                });
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at x.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for ((row, &sense), &b) in self.rows.iter().zip(&self.senses).zip(&self.rhs) {
            let ax: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            let viol = match sense {
                Sense::Le => ax - b,
                Sense::Ge => b - ax,
                Sense::Eq => (ax - b).abs(),
            };
            worst = worst.max(viol);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub tolerance: f64,
    /// Defaults to 50·(rows + columns) of the standard form.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: None, degenerate_limit: 20 }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &SimplexOptions::default())
}

/// How an original variable maps to standard-form columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// x = offset + sign·col
    Shifted { col: usize, offset: f64, sign: f64 },
    /// x = pos − neg
    Free { pos: usize, neg: usize },
}

struct Tableau {
    /// (m + 1) × (cols + 1); the last row holds reduced costs, the last
    /// column the right-hand side.
    data: Vec<f64>,
    m: usize,
    cols: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let p = self.data[pr * w + pc];
        let start = pr * w;
        for v in &mut self.data[start..start + w] {
            *v /= p;
        }
        let nz: Vec<usize> = (0..w).filter(|&c| self.data[start + c] != 0.0).collect();
        let pivot_row: Vec<f64> = nz.iter().map(|&c| self.data[start + c]).collect();
        for r in 0..=self.m {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let base = r * w;
            for (&c, &v) in nz.iter().zip(&pivot_row) {
                self.data[base + c] -= f * v;
            }
            self.data[base + pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Rebuilds the reduced-cost row for cost vector `cost`.
    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.width();
        let obj = self.m * w;
        for c in 0..w {
            self.data[obj + c] = if c < self.cols { cost[c] } else { 0.0 };
        }
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for c in 0..w {
                let v = self.data[r * w + c];
                if v != 0.0 {
                    self.data[obj + c] -= cb * v;
                }
            }
        }
    }

    /// Runs the simplex on the current costs. Returns false when unbounded.
    fn optimize(
        &mut self,
        allowed: &[bool],
        opts: &SimplexOptions,
        cap: usize,
        phase: u8,
        iterations: &mut usize,
    ) -> Result<bool> {
        let tol = opts.tolerance;
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= opts.degenerate_limit;
            let obj = self.m * self.width();
            let mut enter = None;
            let mut best = -tol;
            for c in 0..self.cols {
                if !allowed[c] {
                    continue;
                }
                let d = self.data[obj + c];
                if d < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = enter else { return Ok(true) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, pc);
                if a <= tol {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-12 * lratio.abs().max(1.0)
                            || (ratio <= lratio + 1e-12 * lratio.abs().max(1.0) && self.basis[r] < self.basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((pr, ratio)) = leave else { return Ok(false) };
            if *iterations >= cap {
                return Err(Error::SolverStalled { phase, iterations: *iterations });
            }
            *iterations += 1;
            if ratio <= tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
        }
    }
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.n_vars();

    // Standard form columns for the original variables.
    let mut maps = Vec::with_capacity(n);
    let mut n_struct = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l.is_finite() {
            maps.push(VarMap::Shifted { col: n_struct, offset: l, sign: 1.0 });
            if u.is_finite() {
                bound_rows.push((n_struct, u - l));
            }
            n_struct += 1;
        } else if u.is_finite() {
            maps.push(VarMap::Shifted { col: n_struct, offset: u, sign: -1.0 });
            n_struct += 1;
        } else {
            maps.push(VarMap::Free { pos: n_struct, neg: n_struct + 1 });
            n_struct += 2;
        }
    }

    // Rows over structural columns with non-negative right-hand sides.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(lp.n_rows() + bound_rows.len());
    for ((row, &sense), &b) in lp.rows.iter().zip(&lp.senses).zip(&lp.rhs) {
        let mut a = vec![0.0; n_struct];
        let mut rhs = b;
        for (j, &coef) in row.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, offset, sign } => {
                    a[col] += coef * sign;
                    rhs -= coef * offset;
                }
                VarMap::Free { pos, neg } => {
                    a[pos] += coef;
                    a[neg] -= coef;
                }
            }
        }
        rows.push((a, sense, rhs));
    }
    for &(col, cap) in &bound_rows {
        let mut a = vec![0.0; n_struct];
        a[col] = 1.0;
        rows.push((a, Sense::Le, cap));
    }
    for (a, sense, rhs) in &mut rows {
        if *rhs < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
            *sense = match *sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let cols = n_struct + n_slack + n_art;
    let w = cols + 1;
    let mut data = vec![0.0; (m + 1) * w];
    let mut basis = vec![0usize; m];
    let mut is_art = vec![false; cols];
    let (mut s_next, mut a_next) = (n_struct, n_struct + n_slack);
    for (r, (a, sense, rhs)) in rows.iter().enumerate() {
        data[r * w..r * w + n_struct].copy_from_slice(a);
        data[r * w + cols] = *rhs;
        match sense {
            Sense::Le => {
                data[r * w + s_next] = 1.0;
                basis[r] = s_next;
                s_next += 1;
            }
            Sense::Ge => {
                data[r * w + s_next] = -1.0;
                s_next += 1;
                data[r * w + a_next] = 1.0;
                basis[r] = a_next;
                is_art[a_next] = true;
                a_next += 1;
            }
            Sense::Eq => {
                data[r * w + a_next] = 1.0;
                basis[r] = a_next;
                is_art[a_next] = true;
                a_next += 1;
            }
        }
    }
    let mut t = Tableau { data, m, cols, basis };
    let cap = opts.max_iterations.unwrap_or(50 * (m + cols).max(1));
    let mut iterations = 0usize;
    let all = vec![true; cols];

    if n_art > 0 {
        let cost: Vec<f64> = is_art.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        t.set_costs(&cost);
        t.optimize(&all, opts, cap, 1, &mut iterations)?;
        let infeas: f64 = (0..m).filter(|&r| is_art[t.basis[r]]).map(|r| t.rhs(r)).sum();
        let scale = rows.iter().map(|r| r.2).fold(1.0, f64::max);
        if infeas > 1e-7 * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![f64::NAN; n],
                objective: f64::NAN,
                iterations,
            });
        }
        // Drive remaining artificials out of the basis; rows without a usable
        // column are redundant and stay inert.
        for r in 0..m {
            if !is_art[t.basis[r]] {
                continue;
            }
            let col = (0..cols).filter(|&c| !is_art[c]).max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()));
            if let Some(c) = col {
                if t.at(r, c).abs() > opts.tolerance {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut cost = vec![0.0; cols];
    for (j, map) in maps.iter().enumerate() {
        let c = lp.objective[j];
        match *map {
            VarMap::Shifted { col, sign, .. } => cost[col] += c * sign,
            VarMap::Free { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }
    t.set_costs(&cost);
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    let bounded = t.optimize(&allowed, opts, cap, 2, &mut iterations)?;
    if !bounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![f64::NAN; n],
            objective: f64::NEG_INFINITY,
            iterations,
        });
    }

    let mut value = vec![0.0; cols];
    for r in 0..m {
        value[t.basis[r]] = t.rhs(r).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted { col, offset, sign } => offset + sign * value[col],
            VarMap::Free { pos, neg } => value[pos] - value[neg],
        })
        .collect();
    let objective = lp.objective_value(&x);
    Ok(LpSolution { status: LpStatus::Optimal, x, objective, iterations })
}
