//! Recovery risk measures on weighted samples.
//!
//! For a sample of (X, Y) and a level function γ,
//! ReV@R = sup_λ V@R_{γ(λ)}(X + (1 − λ)Y) and ReAV@R is the same with AV@R.
//! When γ is piecewise constant and Y ≥ 0 the supremum is a finite maximum
//! over the right endpoints of the pieces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_level, Error, Result};
use crate::recovery::{LevelFunction, RecoveryFunction};
use crate::sample::{avar_empirical, kahan_sum, var_empirical, WeightedSample, Weights};

/// Absolute tolerance on money comparisons.
pub const MONEY_TOL: f64 = 1e-9;

/// Default number of uniform grid points for general level functions.
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Default cap on the asset value of the extremal pair.
pub const DEFAULT_MAGNITUDE_CAP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    #[serde(rename = "var")]
    ValueAtRisk,
    #[serde(rename = "avar")]
    AverageValueAtRisk,
}

impl MeasureKind {
    pub fn apply(self, values: &[f64], weights: &Weights, level: f64) -> Result<f64> {
        match self {
            MeasureKind::ValueAtRisk => var_empirical(values, weights, level),
            MeasureKind::AverageValueAtRisk => avar_empirical(values, weights, level),
        }
    }
}

/// Result of the finite-maximum evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryEvaluation {
    pub value: f64,
    /// 0-based index of the binding piece.
    pub binding_index: usize,
    pub binding_fraction: f64,
    pub binding_level: f64,
    /// One term per piece.
    pub terms: Vec<f64>,
}

fn finite_max(sample: &WeightedSample, gamma: &RecoveryFunction, kind: MeasureKind) -> Result<RecoveryEvaluation> {
    sample.require_nonnegative_y()?;
    let pieces: Vec<_> = gamma.pieces().collect();
    let terms = pieces
        .iter()
        .map(|p| kind.apply(&sample.combine(1.0 - p.fraction), sample.weights(), p.level))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &t) in terms.iter().enumerate() {
        // Strict comparison keeps the smallest fraction on ties.
        if t > terms[best] {
            best = i;
        }
    }
    Ok(RecoveryEvaluation {
        value: terms[best],
        binding_index: best,
        binding_fraction: pieces[best].fraction,
        binding_level: pieces[best].level,
        terms,
    })
}

/// Recovery V@R for piecewise-constant γ; requires Y ≥ 0.
pub fn revar(sample: &WeightedSample, gamma: &RecoveryFunction) -> Result<RecoveryEvaluation> {
    finite_max(sample, gamma, MeasureKind::ValueAtRisk)
}

/// Recovery AV@R for piecewise-constant γ; requires Y ≥ 0.
pub fn reavar(sample: &WeightedSample, gamma: &RecoveryFunction) -> Result<RecoveryEvaluation> {
    finite_max(sample, gamma, MeasureKind::AverageValueAtRisk)
}

pub fn recovery_measure(
    sample: &WeightedSample,
    gamma: &RecoveryFunction,
    kind: MeasureKind,
) -> Result<RecoveryEvaluation> {
    finite_max(sample, gamma, kind)
}

/// Supremum over a finite set of recovery fractions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridEvaluation {
    pub value: f64,
    pub lambda: f64,
    pub level: f64,
    /// Value of the finite maximum at the breakpoints, when γ is piecewise
    /// constant. Only set by the liability-side variants, where it fixes the
    /// sign of the test.
    pub reduction: Option<f64>,
}

/// Uniform grid on [0, 1] with `n` points.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| if j + 1 == n { 1.0 } else { j as f64 / (n - 1) as f64 }).collect()
}

/// Candidate (λ, level) pairs: the grid plus every breakpoint with its left limit.
fn candidates<G: LevelFunction + ?Sized>(
    gamma: &G,
    lambdas: &[f64],
    with_breakpoints: bool,
) -> Result<Vec<(f64, f64)>> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(lambdas.len() + 8);
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut prev = f64::NEG_INFINITY;
    for &l in &sorted {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::InvalidParameter { name: "lambda", reason: format!("{l} outside [0, 1]") });
        }
        let level = gamma.level(l);
        check_level(level)?;
        if level < prev {
            return Err(Error::NonMonotoneLevel { lambda: l });
        }
        prev = level;
        out.push((l, level));
    }
    if with_breakpoints {
        for b in gamma.breakpoints() {
            for level in [gamma.level_left(b), gamma.level(b)] {
                check_level(level)?;
                out.push((b, level));
            }
        }
    }
    Ok(out)
}

fn sup_over(
    sample: &WeightedSample,
    pairs: &[(f64, f64)],
    kind: MeasureKind,
    position: impl Fn(f64) -> Vec<f64> + Sync,
    scale: impl Fn(f64) -> f64 + Sync,
) -> Result<GridEvaluation> {
    let vals = pairs
        .par_iter()
        .map(|&(l, level)| Ok(scale(l) * kind.apply(&position(l), sample.weights(), level)?))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &v) in vals.iter().enumerate() {
        let better = v > vals[best] || (v == vals[best] && pairs[i].0 < pairs[best].0);
        if better {
            best = i;
        }
    }
    Ok(GridEvaluation { value: vals[best], lambda: pairs[best].0, level: pairs[best].1, reduction: None })
}

/// Supremum of V@R_{γ(λ)}(X + (1 − λ)Y) or its AV@R analogue over the supplied
/// fractions, augmented with the breakpoints of γ. A lower bound of the true
/// supremum.
pub fn recovery_on_grid<G: LevelFunction + Sync + ?Sized>(
    sample: &WeightedSample,
    gamma: &G,
    lambdas: &[f64],
    kind: MeasureKind,
) -> Result<GridEvaluation> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter { name: "lambdas", reason: "empty grid".into() });
    }
    let pairs = candidates(gamma, lambdas, true)?;
    sup_over(sample, &pairs, kind, |l| sample.combine(1.0 - l), |_| 1.0)
}

pub fn revar_grid<G: LevelFunction + Sync + ?Sized>(
    sample: &WeightedSample,
    gamma: &G,
    n_lambda: usize,
) -> Result<GridEvaluation> {
    check_grid(n_lambda)?;
    recovery_on_grid(sample, gamma, &uniform_grid(n_lambda), MeasureKind::ValueAtRisk)
}

pub fn reavar_grid<G: LevelFunction + Sync + ?Sized>(
    sample: &WeightedSample,
    gamma: &G,
    n_lambda: usize,
) -> Result<GridEvaluation> {
    check_grid(n_lambda)?;
    recovery_on_grid(sample, gamma, &uniform_grid(n_lambda), MeasureKind::AverageValueAtRisk)
}

fn check_grid(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n_lambda", reason: format!("need at least 2 points, got {n}") });
    }
    Ok(())
}

/// Liability-side variant on a sample with x = A₁ and y = L₁:
/// sup over λ in (0, 1] of (1/λ)·ρ_{γ(λ)}(A − λL).
pub fn liability_recovery<G: LevelFunction + Sync + ?Sized>(
    sample: &WeightedSample,
    gamma: &G,
    n_lambda: usize,
    kind: MeasureKind,
) -> Result<GridEvaluation> {
    check_grid(n_lambda)?;
    sample.require_nonnegative_y()?;
    let lambdas: Vec<f64> = uniform_grid(n_lambda).into_iter().filter(|&l| l > 0.0).collect();
    let pairs = candidates(gamma, &lambdas, true)?;
    let position = |l: f64| sample.x().iter().zip(sample.y()).map(|(a, y)| a - l * y).collect::<Vec<_>>();
    let mut eval = sup_over(sample, &pairs, kind, position, |l| 1.0 / l)?;
    if gamma.is_piecewise_constant() {
        // The finite reduction max_i ρ_{α_i}(A − r_i L) has the sign of the
        // supremum; the 1/λ scaling only changes magnitude.
        let mut ends = gamma.breakpoints();
        ends.push(1.0);
        let mut red = f64::NEG_INFINITY;
        for r in ends {
            red = red.max(kind.apply(&position(r), sample.weights(), gamma.level_left(r))?);
        }
        eval.reduction = Some(red);
    }
    Ok(eval)
}

pub fn l_revar<G: LevelFunction + Sync + ?Sized>(
    sample: &WeightedSample,
    gamma: &G,
    n_lambda: usize,
) -> Result<GridEvaluation> {
    liability_recovery(sample, gamma, n_lambda, MeasureKind::ValueAtRisk)
}

pub fn l_reavar<G: LevelFunction + Sync + ?Sized>(
    sample: &WeightedSample,
    gamma: &G,
    n_lambda: usize,
) -> Result<GridEvaluation> {
    liability_recovery(sample, gamma, n_lambda, MeasureKind::AverageValueAtRisk)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolvencyVerdict {
    pub pass: bool,
    pub binding_fraction: f64,
    pub binding_level: f64,
    pub measure_value: f64,
    pub threshold: f64,
}

/// Recovery solvency test on a sample of (ΔE₁, L₁): passes when the measure
/// does not exceed E₀ (up to [`MONEY_TOL`]).
pub fn solvency_test(
    sample: &WeightedSample,
    gamma: &RecoveryFunction,
    e0: f64,
    kind: MeasureKind,
) -> Result<SolvencyVerdict> {
    if !e0.is_finite() {
        return Err(Error::InvalidParameter { name: "e0", reason: format!("must be finite, got {e0}") });
    }
    let ev = finite_max(sample, gamma, kind)?;
    Ok(SolvencyVerdict {
        pass: ev.value <= e0 + MONEY_TOL,
        binding_fraction: ev.binding_fraction,
        binding_level: ev.binding_level,
        measure_value: ev.value,
        threshold: e0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryPoint {
    pub lambda: f64,
    /// P(A₁ ≥ λL₁).
    pub probability: f64,
    /// P(A₁ ≥ λL₁ | A₁ < L₁).
    pub conditional: Option<f64>,
}

/// Recovery probabilities on a sample with x = A₁ and y = L₁.
pub fn recovery_probability_curve(
    sample: &WeightedSample,
    lambdas: &[f64],
    conditional: bool,
) -> Result<Vec<RecoveryPoint>> {
    sample.require_nonnegative_y()?;
    check_finite(lambdas, "lambdas")?;
    let n = sample.len();
    let (a, l, w) = (sample.x(), sample.y(), sample.weights());
    let default_prob = kahan_sum((0..n).filter(|&m| a[m] < l[m]).map(|m| w.get(m, n)));
    if conditional && !(default_prob > 0.0) {
        return Err(Error::ZeroDefaultProbability);
    }
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let probability = kahan_sum((0..n).filter(|&m| a[m] >= lambda * l[m]).map(|m| w.get(m, n)));
            let cond = conditional.then(|| {
                let joint = kahan_sum((0..n).filter(|&m| a[m] >= lambda * l[m] && a[m] < l[m]).map(|m| w.get(m, n)));
                joint / default_prob
            });
            RecoveryPoint { lambda, probability: probability.min(1.0), conditional: cond }
        })
        .collect())
}

/// Two-scenario pair with AV@R_α(A − L) = 0 and recovery probability 1 − p at
/// every λ in (0, 1): L = 1 and A = 0 with probability p, otherwise L = 0 and
/// A = p/(α − p). Returned with x = A and y = L.
pub fn extremal_recovery_pair(alpha: f64, p: f64, magnitude_cap: f64) -> Result<WeightedSample> {
    check_level(alpha)?;
    if !(p > 0.0 && p < alpha) {
        return Err(Error::InvalidParameter { name: "p", reason: format!("need 0 < p < alpha, got p = {p}") });
    }
    let gap = alpha - p;
    let mut asset = p / gap;
    // Nudge by a few ulps so that gap·asset == p in floating point when possible.
    for k in [0i64, 1, -1, 2, -2] {
        let cand = f64::from_bits((asset.to_bits() as i64 + k) as u64);
        if gap * cand == p {
            asset = cand;
            break;
        }
    }
    if !(asset <= magnitude_cap) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("asset value {asset:e} exceeds magnitude cap {magnitude_cap:e}"),
        });
    }
    WeightedSample::new(vec![0.0, asset], vec![1.0, 0.0], Weights::Explicit(vec![p, 1.0 - p]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualBound {
    pub bound: f64,
    pub lambda: f64,
    /// False when no recovery fraction admits the test measure; the bound is
    /// still reported.
    pub active: bool,
    pub reavar: f64,
    pub holds: bool,
}

/// Weak-duality lower bound E_q(−X) − (1 − λ(Q))·E_q(Y) for ReAV@R, with
/// λ(Q) = sup{λ : γ(λ) ≤ 1 / max(q/w)}.
pub fn reavar_dual_bound(sample: &WeightedSample, gamma: &RecoveryFunction, q: &[f64]) -> Result<DualBound> {
    let n = sample.len();
    if q.len() != n {
        return Err(Error::InvalidTestMeasure(format!("expected {n} entries, got {}", q.len())));
    }
    if q.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidTestMeasure("entries must be finite and non-negative".into()));
    }
    let total = kahan_sum(q.iter().copied());
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidTestMeasure(format!("entries sum to {total}")));
    }
    let max_ratio = (0..n).map(|m| q[m] / sample.weight(m)).fold(0.0, f64::max);
    let threshold = 1.0 / max_ratio;
    // Relative slack absorbs the rounding in q/w.
    let admissible = |level: f64| level <= threshold * (1.0 + 1e-12);
    let levels = gamma.levels();
    let (lambda, active) = if !admissible(levels[0]) {
        (0.0, false)
    } else {
        match levels.iter().position(|&a| !admissible(a)) {
            Some(j) => (gamma.breakpoints()[j - 1], true),
            None => (1.0, true),
        }
    };
    let eq_neg_x = -kahan_sum((0..n).map(|m| q[m] * sample.x()[m]));
    let eq_y = kahan_sum((0..n).map(|m| q[m] * sample.y()[m]));
    let bound = eq_neg_x - (1.0 - lambda) * eq_y;
    let value = reavar(sample, gamma)?.value;
    Ok(DualBound { bound, lambda, active, reavar: value, holds: !active || bound <= value + MONEY_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::TailProfile;

    fn small() -> (WeightedSample, RecoveryFunction) {
        let s = WeightedSample::uniform(vec![-3.0, -1.0, 2.0, 5.0], vec![1.0, 2.0, 0.0, 4.0]).unwrap();
        let g = RecoveryFunction::two_level(0.25, 0.5, 0.5).unwrap();
        (s, g)
    }

    fn two_state_sample(k: f64, alpha: f64) -> WeightedSample {
        WeightedSample::new(
            vec![100.0 - k, k - 100.0],
            vec![1.0, 100.0],
            Weights::Explicit(vec![1.0 - alpha / 2.0, alpha / 2.0]),
        )
        .unwrap()
    }

    #[test]
    fn small_sample_values() {
        let (s, g) = small();
        let rv = revar(&s, &g).unwrap();
        assert_eq!(rv.terms, vec![0.0, -2.0]);
        assert_eq!(rv.value, 0.0);
        assert_eq!(rv.binding_index, 0);
        let ra = reavar(&s, &g).unwrap();
        assert!((ra.value - 2.5).abs() < 1e-15);
        assert_eq!(ra.binding_index, 0);
        assert_eq!(ra.binding_fraction, 0.5);
    }

    #[test]
    fn zero_liabilities_reduce_to_first_level() {
        let s = WeightedSample::uniform(vec![-3.0, -1.0, 2.0, 5.0, 0.5], vec![0.0; 5]).unwrap();
        let g = RecoveryFunction::new(vec![0.2, 0.6], vec![0.1, 0.3, 0.45]).unwrap();
        assert_eq!(revar(&s, &g).unwrap().value, var_empirical(s.x(), &Weights::Uniform, 0.1).unwrap());
        assert_eq!(reavar(&s, &g).unwrap().value, avar_empirical(s.x(), &Weights::Uniform, 0.1).unwrap());
        // All terms tie; the smallest fraction is reported.
        assert_eq!(revar(&s, &g).unwrap().binding_index, 0);
    }

    #[test]
    fn two_state_revar_branch() {
        let (alpha, beta, r, k) = (0.01, 0.003, 0.7, 60.0);
        let g = RecoveryFunction::two_level(beta, r, alpha).unwrap();
        let v = revar(&two_state_sample(k, alpha), &g).unwrap().value;
        assert!((v - (100.0 * r - k)).abs() < 1e-9);
        let k2 = 65.0;
        let v = reavar(&two_state_sample(k2, alpha), &g).unwrap().value;
        assert!((v - (100.0 * r - k2)).abs() < 1e-9);
    }

    #[test]
    fn negative_liability_rejected() {
        let s = WeightedSample::uniform(vec![1.0, 2.0], vec![1.0, -0.5]).unwrap();
        let g = RecoveryFunction::constant(0.1).unwrap();
        assert!(matches!(revar(&s, &g), Err(Error::NegativeLiability { index: 1, .. })));
    }

    #[test]
    fn grid_with_breakpoints_is_exact() {
        let (s, g) = small();
        for n in [2, 3, 11, 101] {
            assert_eq!(revar_grid(&s, &g, n).unwrap().value, revar(&s, &g).unwrap().value);
            assert_eq!(reavar_grid(&s, &g, n).unwrap().value, reavar(&s, &g).unwrap().value);
        }
    }

    #[test]
    fn constant_level_binds_at_full_recovery() {
        // With Y >= 0 the position X + (1 - λ)Y decreases in λ.
        let (s, _) = small();
        let g = |_l: f64| 0.3;
        let ev = revar_grid(&s, &g, 51).unwrap();
        assert_eq!(ev.value, var_empirical(s.x(), &Weights::Uniform, 0.3).unwrap());
        assert_eq!(ev.lambda, 1.0);
    }

    #[test]
    fn grid_rejects_decreasing_level() {
        let (s, _) = small();
        let g = |l: f64| 0.4 - 0.2 * l;
        assert!(matches!(revar_grid(&s, &g, 11), Err(Error::NonMonotoneLevel { .. })));
        assert!(revar_grid(&s, &|_l: f64| 0.3, 1).is_err());
    }

    #[test]
    fn l_variants_on_constants() {
        let s = WeightedSample::uniform(vec![2.5; 3], vec![0.0; 3]).unwrap();
        let g = RecoveryFunction::two_level(0.01, 0.5, 0.05).unwrap();
        let v = l_revar(&s, &g, 101).unwrap();
        assert!((v.value + 2.5).abs() < 1e-12);
        assert_eq!(v.lambda, 1.0);
        assert!((l_reavar(&s, &g, 101).unwrap().value + 2.5).abs() < 1e-12);
    }

    #[test]
    fn l_variant_sign_at_boundary() {
        // k = 100r: the recovery test passes with equality.
        let (alpha, beta, r) = (0.01, 0.002, 0.6);
        let k = 100.0 * r;
        let e = two_state_sample(k, alpha);
        let assets = e.map(|x, y| (x + y, y)).unwrap();
        let g = RecoveryFunction::two_level(beta, r, alpha).unwrap();
        let lv = l_revar(&assets, &g, 1001).unwrap();
        assert!(lv.value <= 0.0);
        assert!(lv.reduction.unwrap() <= 0.0);
        assert!(revar(&e, &g).unwrap().value <= MONEY_TOL);
        let la = l_reavar(&assets, &g, 1001).unwrap();
        assert!(la.value <= 0.0);
    }

    #[test]
    fn l_variant_matches_fine_grid() {
        let s = WeightedSample::new(vec![3.0, 0.4], vec![2.0, 1.0], Weights::Explicit(vec![0.7, 0.3])).unwrap();
        let g = |l: f64| 0.05 + 0.2 * l * l;
        let coarse = l_revar(&s, &g, 101).unwrap();
        // Brute force on a 10x finer grid restricted to the coarse nodes.
        let mut best = f64::NEG_INFINITY;
        for j in 1..=1000 {
            let l = j as f64 / 1000.0;
            if j % 10 != 0 {
                continue;
            }
            let pos: Vec<f64> = s.x().iter().zip(s.y()).map(|(a, y)| a - l * y).collect();
            best = best.max(var_empirical(&pos, s.weights(), g(l)).unwrap() / l);
        }
        assert!((coarse.value - best).abs() < 1e-9);
    }

    #[test]
    fn solvency_boundary_and_large_capital() {
        let (alpha, beta, r) = (0.02, 0.004, 0.75);
        let g = RecoveryFunction::two_level(beta, r, alpha).unwrap();
        let v = solvency_test(&two_state_sample(100.0 * r, alpha), &g, 0.0, MeasureKind::ValueAtRisk).unwrap();
        assert!(v.pass);
        assert!(v.measure_value.abs() < 1e-9);
        let v = solvency_test(&two_state_sample(100.0 * r - 0.01, alpha), &g, 0.0, MeasureKind::ValueAtRisk).unwrap();
        assert!(!v.pass);
        assert_eq!(v.binding_fraction, r);
        assert_eq!(v.binding_level, beta);
        let v = solvency_test(&two_state_sample(5.0, alpha), &g, 1e9, MeasureKind::AverageValueAtRisk).unwrap();
        assert!(v.pass);
        assert!(solvency_test(&two_state_sample(5.0, alpha), &g, f64::INFINITY, MeasureKind::ValueAtRisk).is_err());
    }

    #[test]
    fn recovery_curve_two_state() {
        let (alpha, k) = (0.01, 40.0);
        let assets = two_state_sample(k, alpha).map(|x, y| (x + y, y)).unwrap();
        let pts = recovery_probability_curve(&assets, &[0.0, 0.2, 0.4, 0.41, 0.9], true).unwrap();
        assert_eq!(pts[0].probability, 1.0);
        assert_eq!(pts[1].probability, 1.0);
        assert_eq!(pts[2].probability, 1.0);
        assert_eq!(pts[3].probability, 1.0 - alpha / 2.0);
        assert_eq!(pts[4].probability, 1.0 - alpha / 2.0);
        assert_eq!(pts[2].conditional, Some(1.0));
        assert_eq!(pts[3].conditional, Some(0.0));
        let safe = WeightedSample::uniform(vec![5.0, 6.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(recovery_probability_curve(&safe, &[0.5], true), Err(Error::ZeroDefaultProbability));
    }

    #[test]
    fn extremal_pair_small_case() {
        let s = extremal_recovery_pair(0.1, 0.05, DEFAULT_MAGNITUDE_CAP).unwrap();
        assert_eq!(s.x(), &[0.0, 1.0]);
        assert_eq!(s.y(), &[1.0, 0.0]);
        let e = s.combine(-1.0);
        assert_eq!(avar_empirical(&e, s.weights(), 0.1).unwrap(), 0.0);
        for lambda in [0.1, 0.5, 0.9] {
            let p = recovery_probability_curve(&s, &[lambda], false).unwrap()[0].probability;
            assert_eq!(p, 0.95);
        }
        assert!(extremal_recovery_pair(0.1, 0.1, DEFAULT_MAGNITUDE_CAP).is_err());
        assert!(extremal_recovery_pair(0.1, 0.1 - 1e-14, 1e6).is_err());
    }

    #[test]
    fn dual_bound_with_sample_weights() {
        let (s, g) = small();
        let q = vec![0.25; 4];
        let d = reavar_dual_bound(&s, &g, &q).unwrap();
        assert_eq!(d.lambda, 1.0);
        assert!(d.active && d.holds);
        assert!((d.bound + 0.75).abs() < 1e-15);
    }

    #[test]
    fn dual_bound_attains_piece_term() {
        let s = WeightedSample::uniform(
            vec![-3.0, -1.0, 2.0, 5.0, 0.5, -2.2, 1.1, 0.0],
            vec![1.0, 2.0, 0.0, 4.0, 0.3, 0.1, 2.0, 1.0],
        )
        .unwrap();
        let g = RecoveryFunction::new(vec![0.3, 0.7], vec![0.25, 0.375, 0.5]).unwrap();
        for (i, p) in g.pieces().enumerate() {
            let pos = s.combine(1.0 - p.fraction);
            let tail = TailProfile::new(&pos, s.weights()).unwrap().tail_weights(p.level).unwrap();
            let mut q = vec![0.0; s.len()];
            for (m, w) in tail {
                q[m] = w / p.level;
            }
            let d = reavar_dual_bound(&s, &g, &q).unwrap();
            let term = avar_empirical(&pos, s.weights(), p.level).unwrap();
            assert_eq!(d.lambda, p.fraction, "piece {i}");
            assert!((d.bound - term).abs() < 1e-12);
            assert!(d.holds);
        }
    }

    #[test]
    fn dual_bound_inactive_and_invalid() {
        let (s, _) = small();
        let g = RecoveryFunction::two_level(0.3, 0.5, 0.5).unwrap();
        // All mass on one scenario: 1/density = 0.25 is below every level.
        let d = reavar_dual_bound(&s, &g, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(!d.active);
        assert_eq!(d.lambda, 0.0);
        assert!(d.holds);
        assert!(reavar_dual_bound(&s, &g, &[0.5, 0.5, 0.5, -0.5]).is_err());
        assert!(reavar_dual_bound(&s, &g, &[0.5, 0.5]).is_err());
        assert!(reavar_dual_bound(&s, &g, &[0.3, 0.3, 0.3, 0.3]).is_err());
    }
}
