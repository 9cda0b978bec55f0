//! Portfolio choice under a Recovery AV@R objective: auxiliary functions Ψ,
//! the minimax comparison, the scenario LP and efficient frontiers.

pub mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::measures::reavar;
use crate::recovery::RecoveryFunction;
use crate::sample::{kahan_sum, WeightedSample, Weights};

pub use simplex::{solve_lp, solve_lp_with, LinearProgram, LpSolution, LpStatus, Sense, SimplexOptions};

pub const MINIMAX_TOL: f64 = 1e-6;
const GOLDEN_TOL: f64 = 1e-10;

/// K assets with scenario returns, a liability fraction Z ≥ 0 and a budget.
#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioProblem {
    weights: Weights,
    /// Asset-major: `returns[k][m]`.
    returns: Vec<Vec<f64>>,
    liability: Vec<f64>,
    pub budget: f64,
    /// Expected-return target; `None` drops the return row.
    pub target_return: Option<f64>,
    pub gamma: RecoveryFunction,
}

impl PortfolioProblem {
    pub fn new(
        weights: Weights,
        returns: Vec<Vec<f64>>,
        liability: Vec<f64>,
        budget: f64,
        target_return: Option<f64>,
        gamma: RecoveryFunction,
    ) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::InvalidParameter { name: "assets", reason: "need at least one asset".into() });
        }
        let m = liability.len();
        if m == 0 {
            return Err(Error::EmptySample);
        }
        for r in &returns {
            if r.len() != m {
                return Err(Error::LengthMismatch { what: "return scenarios", expected: m, got: r.len() });
            }
            check_finite(r, "returns")?;
        }
        check_finite(&liability, "liability")?;
        if let Some(i) = liability.iter().position(|&z| z < 0.0) {
            return Err(Error::NegativeLiability { index: i, value: liability[i] });
        }
        weights.validate(m)?;
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::InvalidParameter { name: "budget", reason: format!("must be positive, got {budget}") });
        }
        if let Some(c) = target_return {
            if !c.is_finite() {
                return Err(Error::InvalidParameter { name: "target_return", reason: "must be finite".into() });
            }
        }
        Ok(Self { weights, returns, liability, budget, target_return, gamma })
    }

    pub fn with_target(&self, c: Option<f64>) -> Self {
        Self { target_return: c, ..self.clone() }
    }

    pub fn assets(&self) -> usize {
        self.returns.len()
    }

    pub fn scenarios(&self) -> usize {
        self.liability.len()
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn returns(&self) -> &[Vec<f64>] {
        &self.returns
    }

    pub fn liability(&self) -> &[f64] {
        &self.liability
    }

    fn weight(&self, m: usize) -> f64 {
        self.weights.get(m, self.scenarios())
    }

    pub fn mean_returns(&self) -> Vec<f64> {
        self.returns.iter().map(|r| kahan_sum(r.iter().enumerate().map(|(m, v)| self.weight(m) * v))).collect()
    }

    /// Σ_k x^k R^{k,m}.
    pub fn portfolio_returns(&self, x: &[f64]) -> Vec<f64> {
        (0..self.scenarios()).map(|m| x.iter().zip(&self.returns).map(|(xk, r)| xk * r[m]).sum()).collect()
    }

    /// The position (Σ x R − Z, Z) whose Recovery AV@R is minimized.
    pub fn position(&self, x: &[f64]) -> Result<WeightedSample> {
        let p = self.portfolio_returns(x);
        let e = p.iter().zip(&self.liability).map(|(a, z)| a - z).collect();
        WeightedSample::new(e, self.liability.clone(), self.weights.clone())
    }

    fn check_weights(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.assets() {
            return Err(Error::LengthMismatch { what: "portfolio weights", expected: self.assets(), got: x.len() });
        }
        check_finite(x, "portfolio weights")
    }
}

/// Ψ^i(x, v) = (1/α_i)·E[(v − Σ x R + r_i Z)⁺] − v for the 0-based piece i.
pub fn psi(problem: &PortfolioProblem, i: usize, x: &[f64], v: f64) -> Result<f64> {
    problem.check_weights(x)?;
    let piece = problem
        .gamma
        .pieces()
        .nth(i)
        .ok_or_else(|| Error::InvalidParameter { name: "piece", reason: format!("index {i} out of range") })?;
    let p = problem.portfolio_returns(x);
    Ok(psi_values(problem, &p, piece.fraction, piece.level, v))
}

fn psi_values(problem: &PortfolioProblem, p: &[f64], r: f64, alpha: f64, v: f64) -> f64 {
    let s = kahan_sum(
        p.iter().zip(&problem.liability).enumerate().map(|(m, (pm, z))| problem.weight(m) * (v - pm + r * z).max(0.0)),
    );
    s / alpha - v
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > GOLDEN_TOL * (1.0 + lo.abs().max(hi.abs())) {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    let (v, fv) = if fa <= fb { (a, fa) } else { (b, fb) };
    let (fl, fh) = (f(lo), f(hi));
    if fl < fv && fl <= fh {
        (lo, fl)
    } else if fh < fv {
        (hi, fh)
    } else {
        (v, fv)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimaxReport {
    /// max_i min_v Ψ^i.
    pub lhs: f64,
    /// min_v max_i Ψ^i.
    pub rhs: f64,
    pub gap: f64,
    pub holds: bool,
    /// min_v Ψ^i per piece.
    pub inner: Vec<f64>,
    pub v_rhs: f64,
}

/// Both sides of the minimax comparison, each by golden-section search over
/// the bracket spanned by the pieces' quantiles.
pub fn minimax_check(problem: &PortfolioProblem, x: &[f64]) -> Result<MinimaxReport> {
    problem.check_weights(x)?;
    let p = problem.portfolio_returns(x);
    let pieces: Vec<_> = problem.gamma.pieces().collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for piece in &pieces {
        let values: Vec<f64> = p.iter().zip(&problem.liability).map(|(pm, z)| pm - piece.fraction * z).collect();
        lo = lo.min(values.iter().copied().fold(f64::INFINITY, f64::min));
        hi = hi.max(values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let inner: Vec<f64> = pieces
        .iter()
        .map(|piece| golden_min(|v| psi_values(problem, &p, piece.fraction, piece.level, v), lo, hi).1)
        .collect();
    let lhs = inner.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let envelope = |v: f64| {
        pieces.iter().map(|pc| psi_values(problem, &p, pc.fraction, pc.level, v)).fold(f64::NEG_INFINITY, f64::max)
    };
    let (v_rhs, rhs) = golden_min(envelope, lo, hi);
    let gap = rhs - lhs;
    Ok(MinimaxReport { lhs, rhs, gap, holds: gap.abs() <= MINIMAX_TOL, inner, v_rhs })
}

/// Threshold structure of the LP.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpFormulation {
    /// One v shared by all pieces: minimizes min_v max_i Ψ^i.
    SharedThreshold,
    /// One v_i per piece: minimizes max_i min_v Ψ^i = ReAV@R.
    #[default]
    PerPieceThreshold,
}

/// Column positions of the LP variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LpLayout {
    pub assets: usize,
    pub pieces: usize,
    pub scenarios: usize,
    pub thresholds: usize,
    pub x_start: usize,
    pub v_start: usize,
    pub upsilon: usize,
    pub u_start: usize,
}

impl LpLayout {
    pub fn n_vars(&self) -> usize {
        self.u_start + self.pieces * self.scenarios
    }

    pub fn u(&self, piece: usize, scenario: usize) -> usize {
        self.u_start + piece * self.scenarios + scenario
    }

    pub fn v(&self, piece: usize) -> usize {
        if self.thresholds == 1 {
            self.v_start
        } else {
            self.v_start + piece
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioLp {
    pub lp: LinearProgram,
    pub layout: LpLayout,
}

/// Range of attainable expected returns, [min_k E R^k, max_k E R^k].
pub fn return_range(problem: &PortfolioProblem) -> (f64, f64) {
    let means = problem.mean_returns();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn build_lp(problem: &PortfolioProblem, formulation: LpFormulation) -> Result<PortfolioLp> {
    let k = problem.assets();
    let m = problem.scenarios();
    let pieces: Vec<_> = problem.gamma.pieces().collect();
    let np = pieces.len();
    let means = problem.mean_returns();
    if let Some(c) = problem.target_return {
        let (lo, hi) = return_range(problem);
        let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        if c < lo - slack || c > hi + slack {
            return Err(Error::TargetReturnInfeasible { target: c, min: lo, max: hi });
        }
    }
    let thresholds = match formulation {
        LpFormulation::SharedThreshold => 1,
        LpFormulation::PerPieceThreshold => np,
    };
    let layout = LpLayout {
        assets: k,
        pieces: np,
        scenarios: m,
        thresholds,
        x_start: 0,
        v_start: k,
        upsilon: k + thresholds,
        u_start: k + thresholds + 1,
    };
    let n = layout.n_vars();
    let mut lp = LinearProgram::new(n);
    lp.objective[layout.upsilon] = 1.0;
    for j in 0..k {
        lp.upper[j] = 1.0;
    }
    for t in 0..thresholds {
        lp.lower[layout.v_start + t] = f64::NEG_INFINITY;
    }
    lp.lower[layout.upsilon] = f64::NEG_INFINITY;

    let mut row = vec![0.0; n];
    row[..k].fill(1.0);
    lp.add_row(row, Sense::Eq, 1.0);
    if let Some(c) = problem.target_return {
        let mut row = vec![0.0; n];
        row[..k].copy_from_slice(&means);
        lp.add_row(row, Sense::Eq, c);
    }
    // (1/α_i) Σ_m w_m u^{i,m} − v_i − Υ ≤ 0.
    for (i, piece) in pieces.iter().enumerate() {
        let mut row = vec![0.0; n];
        for s in 0..m {
            row[layout.u(i, s)] = problem.weight(s) / piece.level;
        }
        row[layout.v(i)] = -1.0;
        row[layout.upsilon] = -1.0;
        lp.add_row(row, Sense::Le, 0.0);
    }
    // u^{i,m} + Σ_k x^k R^{k,m} − v_i ≥ r_i Z^m.
    for (i, piece) in pieces.iter().enumerate() {
        for s in 0..m {
            let mut row = vec![0.0; n];
            row[layout.u(i, s)] = 1.0;
            for a in 0..k {
                row[a] = problem.returns[a][s];
            }
            row[layout.v(i)] = -1.0;
            lp.add_row(row, Sense::Ge, piece.fraction * problem.liability[s]);
        }
    }
    Ok(PortfolioLp { lp, layout })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortfolioSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub upsilon: f64,
    /// ReAV@R of the induced position, recomputed from x.
    pub reavar: f64,
    /// −b + b·Υ*.
    pub risk: f64,
    pub residual: f64,
    pub iterations: usize,
}

pub fn solve_portfolio(problem: &PortfolioProblem, formulation: LpFormulation) -> Result<PortfolioSolution> {
    let built = build_lp(problem, formulation)?;
    let sol = solve_lp(&built.lp)?;
    let layout = built.layout;
    if sol.status != LpStatus::Optimal {
        return Ok(PortfolioSolution {
            status: sol.status,
            x: Vec::new(),
            thresholds: Vec::new(),
            upsilon: f64::NAN,
            reavar: f64::NAN,
            risk: f64::NAN,
            residual: f64::NAN,
            iterations: sol.iterations,
        });
    }
    let x: Vec<f64> = sol.x[..layout.assets].iter().map(|v| v.max(0.0)).collect();
    let thresholds = sol.x[layout.v_start..layout.v_start + layout.thresholds].to_vec();
    let upsilon = sol.x[layout.upsilon];
    let reavar_x = reavar(&problem.position(&x)?, &problem.gamma)?.value;
    Ok(PortfolioSolution {
        status: LpStatus::Optimal,
        residual: built.lp.residual(&sol.x),
        risk: -problem.budget + problem.budget * upsilon,
        x,
        thresholds,
        upsilon,
        reavar: reavar_x,
        iterations: sol.iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TargetInfeasible,
    SolverStalled,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Optimal => "optimal",
            PointStatus::Infeasible => "infeasible",
            PointStatus::Unbounded => "unbounded",
            PointStatus::TargetInfeasible => "target-infeasible",
            PointStatus::SolverStalled => "solver-stalled",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub c: f64,
    pub status: PointStatus,
    pub upsilon: Option<f64>,
    pub risk: Option<f64>,
    pub x: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Frontier {
    pub points: Vec<FrontierPoint>,
    /// False when some midpoint violates convexity of risk in c by more than 1e−6.
    pub convex: bool,
}

/// One LP per target return, solved in parallel and reported in grid order.
pub fn efficient_frontier(problem: &PortfolioProblem, c_grid: &[f64], formulation: LpFormulation) -> Result<Frontier> {
    let points: Vec<FrontierPoint> = c_grid
        .par_iter()
        .map(|&c| {
            let pb = problem.with_target(Some(c));
            let blank = |status| FrontierPoint { c, status, upsilon: None, risk: None, x: None };
            match solve_portfolio(&pb, formulation) {
                Ok(sol) => match sol.status {
                    LpStatus::Optimal => FrontierPoint {
                        c,
                        status: PointStatus::Optimal,
                        upsilon: Some(sol.upsilon),
                        risk: Some(sol.risk),
                        x: Some(sol.x),
                    },
                    LpStatus::Infeasible => blank(PointStatus::Infeasible),
                    LpStatus::Unbounded => blank(PointStatus::Unbounded),
                },
                Err(Error::TargetReturnInfeasible { .. }) => blank(PointStatus::TargetInfeasible),
                Err(Error::SolverStalled { .. }) => blank(PointStatus::SolverStalled),
                Err(_) => blank(PointStatus::Infeasible),
            }
        })
        .collect();
    let convex = frontier_is_convex(&points);
    Ok(Frontier { points, convex })
}

fn frontier_is_convex(points: &[FrontierPoint]) -> bool {
    let mut solved: Vec<(f64, f64)> = points.iter().filter_map(|p| p.risk.map(|r| (p.c, r))).collect();
    solved.sort_by(|a, b| a.0.total_cmp(&b.0));
    solved.windows(3).all(|w| {
        let (c0, r0) = w[0];
        let (c1, r1) = w[1];
        let (c2, r2) = w[2];
        if c2 - c0 <= 0.0 {
            return true;
        }
        let chord = r0 + (r2 - r0) * (c1 - c0) / (c2 - c0);
        r1 <= chord + 1e-6 * (1.0 + chord.abs())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn example_problem() -> PortfolioProblem {
        PortfolioProblem::new(
            Weights::Uniform,
            vec![vec![0.1, -0.2]],
            vec![0.05, 0.05],
            1.0,
            None,
            RecoveryFunction::constant(0.5).unwrap(),
        )
        .unwrap()
    }

    pub(crate) fn random_problem(seed: u64, k: usize, m: usize, levels: &[f64], breaks: &[f64]) -> PortfolioProblem {
        let rng = SplitMix64::new(seed);
        let mut c = 0u64;
        let mut u = || {
            c += 1;
            rng.uniform_at(c)
        };
        let returns: Vec<Vec<f64>> =
            (0..k).map(|a| (0..m).map(|_| 0.02 * a as f64 + 0.1 * (u() - 0.5) * (1.0 + a as f64)).collect()).collect();
        let z: Vec<f64> = (0..m).map(|_| 0.05 * u()).collect();
        let gamma = RecoveryFunction::new(breaks.to_vec(), levels.to_vec()).unwrap();
        PortfolioProblem::new(Weights::Uniform, returns, z, 1.0, None, gamma).unwrap()
    }

    #[test]
    fn psi_example() {
        let p = example_problem();
        assert!((psi(&p, 0, &[1.0], 0.0).unwrap() - 0.25).abs() < 1e-15);
        for v in [-1e6, -1e3] {
            assert!((psi(&p, 0, &[1.0], v).unwrap() + v).abs() < 1e-9 * v.abs());
        }
        assert!(psi(&p, 1, &[1.0], 0.0).is_err());
    }

    #[test]
    fn psi_min_is_avar() {
        let p = random_problem(3, 2, 50, &[0.01, 0.05, 0.1], &[0.4, 0.8]);
        let x = [0.3, 0.7];
        let rep = minimax_check(&p, &x).unwrap();
        let pos = p.position(&x).unwrap();
        let eval = reavar(&pos, &p.gamma).unwrap();
        for (inner, term) in rep.inner.iter().zip(&eval.terms) {
            assert!((inner - term).abs() < 1e-9, "{inner} vs {term}");
        }
        assert!((rep.lhs - eval.value).abs() < 1e-9);
        assert!(rep.rhs >= rep.lhs - 1e-12);
    }

    #[test]
    fn single_piece_has_no_gap() {
        let p = random_problem(5, 2, 40, &[0.05], &[]);
        let rep = minimax_check(&p, &[0.5, 0.5]).unwrap();
        assert!(rep.gap.abs() < 1e-9);
        assert!(rep.holds);
    }

    #[test]
    fn lp_dimensions() {
        let p = random_problem(1, 3, 20, &[0.01, 0.05], &[0.5]).with_target(Some(0.01));
        let shared = build_lp(&p, LpFormulation::SharedThreshold).unwrap();
        assert_eq!(shared.lp.n_vars(), 3 + 2 + 2 * 20);
        assert_eq!(shared.lp.n_rows(), 2 + 2 + 2 * 20);
        let per = build_lp(&p, LpFormulation::PerPieceThreshold).unwrap();
        assert_eq!(per.lp.n_vars(), 3 + 3 + 2 * 20);
        let (lo, hi) = return_range(&p);
        assert!(matches!(
            build_lp(&p.with_target(Some(hi + 1.0)), LpFormulation::PerPieceThreshold),
            Err(Error::TargetReturnInfeasible { .. })
        ));
        assert!(build_lp(&p.with_target(Some(lo)), LpFormulation::PerPieceThreshold).is_ok());
    }

    #[test]
    fn single_asset_lp_matches_scalar_oracle() {
        let p = random_problem(8, 1, 60, &[0.02, 0.1], &[0.6]);
        let shared = solve_portfolio(&p, LpFormulation::SharedThreshold).unwrap();
        let rep = minimax_check(&p, &[1.0]).unwrap();
        assert!((shared.upsilon - rep.rhs).abs() < 1e-7);
        let per = solve_portfolio(&p, LpFormulation::PerPieceThreshold).unwrap();
        assert!((per.upsilon - rep.lhs).abs() < 1e-7);
        assert!((per.upsilon - per.reavar).abs() < 1e-7);
    }

    #[test]
    fn identical_assets() {
        let base = random_problem(2, 1, 30, &[0.05], &[]);
        let r = base.returns()[0].clone();
        let p = PortfolioProblem::new(
            Weights::Uniform,
            vec![r.clone(), r],
            base.liability().to_vec(),
            1.0,
            None,
            base.gamma.clone(),
        )
        .unwrap();
        let sol = solve_portfolio(&p, LpFormulation::PerPieceThreshold).unwrap();
        let single = solve_portfolio(&base, LpFormulation::PerPieceThreshold).unwrap();
        assert!((sol.upsilon - single.upsilon).abs() < 1e-9);
    }

    #[test]
    fn lp_optimum_beats_grid() {
        let p = random_problem(4, 2, 200, &[0.02, 0.1], &[0.5]);
        let sol = solve_portfolio(&p, LpFormulation::PerPieceThreshold).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..=100 {
            let x0 = i as f64 / 100.0;
            let v = reavar(&p.position(&[x0, 1.0 - x0]).unwrap(), &p.gamma).unwrap().value;
            best = best.min(v);
        }
        assert!(sol.upsilon <= best + 1e-9);
        assert!(sol.upsilon >= best - 0.01 * best.abs().max(1e-3));
        assert!((sol.upsilon - sol.reavar).abs() < 1e-6);
    }

    #[test]
    fn frontier_order_and_single_asset() {
        let p = random_problem(6, 1, 30, &[0.05], &[]);
        let c = p.mean_returns()[0];
        let f = efficient_frontier(&p, &[c, c + 1.0], LpFormulation::PerPieceThreshold).unwrap();
        assert_eq!(f.points[0].status, PointStatus::Optimal);
        assert_eq!(f.points[1].status, PointStatus::TargetInfeasible);
    }
}
