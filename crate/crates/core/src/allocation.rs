//! Euler allocation of Recovery AV@R capital to divisions.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_finite, Error, Result};
use crate::measures::{reavar, MONEY_TOL};
use crate::recovery::RecoveryFunction;
use crate::sample::{kahan_sum, TailProfile, WeightedSample, Weights};

/// Default relative gap between the largest and second-largest piece terms.
pub const DEFAULT_BINDING_GAP: f64 = 1e-3;

/// Scenario matrix of N divisions, stored division-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DivisionalSample {
    weights: Weights,
    delta_e: Vec<Vec<f64>>,
    liabilities: Vec<Vec<f64>>,
    agg_delta_e: Vec<f64>,
    agg_liabilities: Vec<f64>,
}

impl DivisionalSample {
    pub fn new(weights: Weights, delta_e: Vec<Vec<f64>>, liabilities: Vec<Vec<f64>>) -> Result<Self> {
        if delta_e.is_empty() {
            return Err(Error::InvalidParameter { name: "divisions", reason: "need at least one division".into() });
        }
        if liabilities.len() != delta_e.len() {
            return Err(Error::LengthMismatch {
                what: "liability divisions",
                expected: delta_e.len(),
                got: liabilities.len(),
            });
        }
        let m = delta_e[0].len();
        if m == 0 {
            return Err(Error::EmptySample);
        }
        for (d, l) in delta_e.iter().zip(&liabilities) {
            if d.len() != m {
                return Err(Error::LengthMismatch { what: "delta_e scenarios", expected: m, got: d.len() });
            }
            if l.len() != m {
                return Err(Error::LengthMismatch { what: "liability scenarios", expected: m, got: l.len() });
            }
            check_finite(d, "delta_e")?;
            check_finite(l, "liabilities")?;
            if let Some(idx) = l.iter().position(|&v| v < 0.0) {
                return Err(Error::NegativeLiability { index: idx, value: l[idx] });
            }
        }
        weights.validate(m)?;
        let agg = |cols: &[Vec<f64>]| -> Vec<f64> { (0..m).map(|s| cols.iter().map(|c| c[s]).sum()).collect() };
        let agg_delta_e = agg(&delta_e);
        let agg_liabilities = agg(&liabilities);
        Ok(Self { weights, delta_e, liabilities, agg_delta_e, agg_liabilities })
    }

    pub fn divisions(&self) -> usize {
        self.delta_e.len()
    }

    pub fn len(&self) -> usize {
        self.agg_delta_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agg_delta_e.is_empty()
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn delta_e(&self, division: usize) -> &[f64] {
        &self.delta_e[division]
    }

    pub fn liabilities(&self, division: usize) -> &[f64] {
        &self.liabilities[division]
    }

    pub fn aggregate_delta_e(&self) -> &[f64] {
        &self.agg_delta_e
    }

    pub fn aggregate_liabilities(&self) -> &[f64] {
        &self.agg_liabilities
    }

    pub fn aggregate(&self) -> WeightedSample {
        WeightedSample::new(self.agg_delta_e.clone(), self.agg_liabilities.clone(), self.weights.clone())
            .expect("validated on construction")
    }

    pub fn division(&self, i: usize) -> WeightedSample {
        WeightedSample::new(self.delta_e[i].clone(), self.liabilities[i].clone(), self.weights.clone())
            .expect("validated on construction")
    }

    /// Aggregate position with division i scaled by 1 + h.
    pub fn perturbed(&self, i: usize, h: f64) -> Result<WeightedSample> {
        let x = self.agg_delta_e.iter().zip(&self.delta_e[i]).map(|(a, d)| a + h * d).collect();
        let y = self.agg_liabilities.iter().zip(&self.liabilities[i]).map(|(a, l)| a + h * l).collect();
        WeightedSample::new(x, y, self.weights.clone())
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        let s = |cols: &[Vec<f64>]| cols.iter().map(|c| c.iter().map(|v| a * v).collect()).collect();
        Self::new(self.weights.clone(), s(&self.delta_e), s(&self.liabilities))
    }

    fn expectation(&self, values: &[f64]) -> f64 {
        let n = values.len();
        kahan_sum(values.iter().enumerate().map(|(m, v)| self.weights.get(m, n) * v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AllocationResult {
    /// 0-based binding piece.
    pub binding_index: usize,
    pub binding_fraction: f64,
    pub binding_level: f64,
    pub capital: Vec<f64>,
    pub rorac: Vec<Option<f64>>,
    pub aggregate_reavar: f64,
    pub aggregate_rorac: Option<f64>,
    /// Relative gap between the largest and second-largest piece terms.
    pub binding_gap: f64,
}

/// Expected ΔE over capital.
pub fn rorac(expected_delta_e: f64, capital: f64) -> Result<f64> {
    if !(capital > 0.0) {
        return Err(Error::DenominatorNotPositive { value: capital });
    }
    Ok(expected_delta_e / capital)
}

/// Relative gap (t₁ − t₂)/max(|t₁|, |t₂|) of the two largest terms; infinite
/// for a single piece.
fn binding_gap(terms: &[f64], best: usize) -> f64 {
    let top = terms[best];
    let second =
        terms.iter().enumerate().filter(|&(i, _)| i != best).map(|(_, &t)| t).fold(f64::NEG_INFINITY, f64::max);
    if second == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let scale = top.abs().max(second.abs());
    if scale == 0.0 {
        0.0
    } else {
        (top - second) / scale
    }
}

pub fn euler_allocation(sample: &DivisionalSample, gamma: &RecoveryFunction) -> Result<AllocationResult> {
    euler_allocation_with_gap(sample, gamma, DEFAULT_BINDING_GAP)
}

/// κⁱ = −E[ΔEⁱ + (1 − r_j)Lⁱ | tail of the aggregate at level α_j], with
/// fractional weight on the marginal scenario.
pub fn euler_allocation_with_gap(
    sample: &DivisionalSample,
    gamma: &RecoveryFunction,
    gap_threshold: f64,
) -> Result<AllocationResult> {
    let agg = sample.aggregate();
    let eval = reavar(&agg, gamma)?;
    let gap = binding_gap(&eval.terms, eval.binding_index);
    if gap < gap_threshold {
        return Err(Error::AmbiguousBindingIndex { gap, threshold: gap_threshold });
    }
    let t = 1.0 - eval.binding_fraction;
    let alpha = eval.binding_level;
    let s = agg.combine(t);
    let tail = TailProfile::new(&s, sample.weights())?.tail_weights(alpha)?;
    let capital: Vec<f64> = (0..sample.divisions())
        .into_par_iter()
        .map(|i| {
            let (d, l) = (sample.delta_e(i), sample.liabilities(i));
            kahan_sum(tail.iter().map(|&(m, w)| -w * (d[m] + t * l[m]))) / alpha
        })
        .collect();
    let rorac_of = |mean: f64, k: f64| if k > 0.0 { Some(mean / k) } else { None };
    let rorac_i =
        (0..sample.divisions()).map(|i| rorac_of(sample.expectation(sample.delta_e(i)), capital[i])).collect();
    Ok(AllocationResult {
        binding_index: eval.binding_index,
        binding_fraction: eval.binding_fraction,
        binding_level: alpha,
        aggregate_rorac: rorac_of(sample.expectation(sample.aggregate_delta_e()), eval.value),
        capital,
        rorac: rorac_i,
        aggregate_reavar: eval.value,
        binding_gap: gap,
    })
}

/// Central difference (ReAV@R(1 + h) − ReAV@R(1 − h))/(2h) in the direction
/// of division i.
pub fn directional_derivative(sample: &DivisionalSample, gamma: &RecoveryFunction, i: usize, h: f64) -> Result<f64> {
    let up = reavar(&sample.perturbed(i, h)?, gamma)?.value;
    let down = reavar(&sample.perturbed(i, -h)?, gamma)?.value;
    Ok((up - down) / (2.0 * h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// No direction to test: division RoRaC equals the aggregate.
    Vacuous,
    /// Every h changed the binding index.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiversificationCheck {
    pub division: usize,
    pub capital: f64,
    pub standalone: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompatibilityCheck {
    pub division: usize,
    pub division_rorac: Option<f64>,
    pub aggregate_rorac: Option<f64>,
    pub h: Option<f64>,
    pub perturbed_rorac: Option<f64>,
    pub status: CheckStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub allocation: AllocationResult,
    pub full_allocation_error: f64,
    pub full_allocation: bool,
    pub diversification: Vec<DiversificationCheck>,
    pub compatibility: Vec<CompatibilityCheck>,
}

impl PropertyReport {
    /// True unless some check failed outright; inconclusive checks pass.
    pub fn passed(&self) -> bool {
        self.full_allocation
            && self.diversification.iter().all(|d| d.pass)
            && self.compatibility.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

pub fn allocation_property_check(
    sample: &DivisionalSample,
    gamma: &RecoveryFunction,
    h_list: &[f64],
) -> Result<PropertyReport> {
    let alloc = euler_allocation(sample, gamma)?;
    let total = kahan_sum(alloc.capital.iter().copied());
    let full_allocation_error = (total - alloc.aggregate_reavar).abs();
    let diversification = (0..sample.divisions())
        .map(|i| {
            let standalone = reavar(&sample.division(i), gamma)?.value;
            Ok(DiversificationCheck {
                division: i,
                capital: alloc.capital[i],
                standalone,
                pass: alloc.capital[i] <= standalone + MONEY_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut hs: Vec<f64> = h_list.iter().copied().filter(|h| *h > 0.0).collect();
    hs.sort_by(f64::total_cmp);
    let agg_rorac = alloc.aggregate_rorac;
    let mut compatibility = Vec::with_capacity(sample.divisions());
    for i in 0..sample.divisions() {
        let mut check = CompatibilityCheck {
            division: i,
            division_rorac: alloc.rorac[i],
            aggregate_rorac: agg_rorac,
            h: None,
            perturbed_rorac: None,
            status: CheckStatus::Inconclusive,
        };
        let (Some(ri), Some(ra)) = (alloc.rorac[i], agg_rorac) else {
            compatibility.push(check);
            continue;
        };
        let direction = ri - ra;
        if direction.abs() <= 1e-12 * ra.abs().max(1.0) {
            check.status = CheckStatus::Vacuous;
            compatibility.push(check);
            continue;
        }
        for &h in &hs {
            let pert = sample.perturbed(i, h)?;
            let eval = reavar(&pert, gamma)?;
            if eval.binding_index != alloc.binding_index || !(eval.value > 0.0) {
                continue;
            }
            let mean = kahan_sum((0..pert.len()).map(|m| pert.weight(m) * pert.x()[m]));
            let r = mean / eval.value;
            check.h = Some(h);
            check.perturbed_rorac = Some(r);
            let ok = if direction > 0.0 { r > ra } else { r < ra };
            check.status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
            break;
        }
        compatibility.push(check);
    }
    Ok(PropertyReport {
        full_allocation: full_allocation_error <= MONEY_TOL,
        full_allocation_error,
        allocation: alloc,
        diversification,
        compatibility,
    })
}
