//! Regulatory regimes, recovery adjustments and the case-study sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{loss_probability, sample_scenarios, BalanceSheetModel};
use crate::error::{check_level, Error, Result};
use crate::measures::{revar, MeasureKind};
use crate::recovery::RecoveryFunction;
use crate::sample::{var_empirical, WeightedSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    SolvencyII,
    SwissSolvencyTest,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulatoryRegime {
    pub kind: RegimeKind,
    pub level: f64,
    pub measure: MeasureKind,
}

impl RegulatoryRegime {
    /// V@R at 0.5%.
    pub fn solvency_ii() -> Self {
        Self { kind: RegimeKind::SolvencyII, level: 0.005, measure: MeasureKind::ValueAtRisk }
    }

    /// AV@R at 1%.
    pub fn swiss_solvency_test() -> Self {
        Self { kind: RegimeKind::SwissSolvencyTest, level: 0.01, measure: MeasureKind::AverageValueAtRisk }
    }

    pub fn custom(level: f64, measure: MeasureKind) -> Result<Self> {
        check_level(level)?;
        Ok(Self { kind: RegimeKind::Custom, level, measure })
    }

    pub fn label(&self) -> String {
        match self.kind {
            RegimeKind::SolvencyII => "sii".into(),
            RegimeKind::SwissSolvencyTest => "sst".into(),
            RegimeKind::Custom => {
                let m = match self.measure {
                    MeasureKind::ValueAtRisk => "var",
                    MeasureKind::AverageValueAtRisk => "avar",
                };
                format!("{m}@{}", self.level)
            }
        }
    }
}

impl std::str::FromStr for RegulatoryRegime {
    type Err = Error;

    /// `sii`, `sst`, or `var@<level>` / `avar@<level>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "sii" | "solvency2" | "solvencyii" => return Ok(Self::solvency_ii()),
            "sst" | "swiss" => return Ok(Self::swiss_solvency_test()),
            _ => {}
        }
        let parse_custom =
            |rest: &str, measure| crate::io::parse_fraction(rest).and_then(|level| Self::custom(level, measure));
        if let Some(rest) = s.strip_prefix("var@") {
            return parse_custom(rest, MeasureKind::ValueAtRisk);
        }
        if let Some(rest) = s.strip_prefix("avar@") {
            return parse_custom(rest, MeasureKind::AverageValueAtRisk);
        }
        Err(Error::Parse(format!("unknown regime '{s}'")))
    }
}

/// ρ_reg applied to the x column (ΔE₁) of the sample.
pub fn regulatory_capital(sample: &WeightedSample, regime: &RegulatoryRegime) -> Result<f64> {
    regime.measure.apply(sample.x(), sample.weights(), regime.level)
}

/// max{ReV@R_γ(ΔE₁, L₁) / ρ_reg(ΔE₁), 1}.
pub fn rec_adj(sample: &WeightedSample, gamma: &RecoveryFunction, regime: &RegulatoryRegime) -> Result<f64> {
    let denom = regulatory_capital(sample, regime)?;
    if !(denom > 0.0) {
        return Err(Error::DenominatorNotPositive { value: denom });
    }
    Ok((revar(sample, gamma)?.value / denom).max(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggRecAdjConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_beta: usize,
    pub n_r: usize,
    pub alpha: f64,
}

impl Default for AggRecAdjConfig {
    fn default() -> Self {
        Self { beta_min: 0.001, beta_max: 0.0025, r_min: 0.8, r_max: 0.9, n_beta: 16, n_r: 16, alpha: 0.005 }
    }
}

impl AggRecAdjConfig {
    pub fn with_grid(mut self, n_beta: usize, n_r: usize) -> Self {
        self.n_beta = n_beta;
        self.n_r = n_r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_level(self.alpha)?;
        if !(0.0 < self.beta_min && self.beta_min < self.beta_max && self.beta_max < self.alpha) {
            return Err(Error::InvalidParameter {
                name: "beta_range",
                reason: format!("need 0 < beta_min < beta_max < alpha, got ({}, {})", self.beta_min, self.beta_max),
            });
        }
        if !(0.0 < self.r_min && self.r_min < self.r_max && self.r_max < 1.0) {
            return Err(Error::InvalidParameter {
                name: "r_range",
                reason: format!("need 0 < r_min < r_max < 1, got ({}, {})", self.r_min, self.r_max),
            });
        }
        if self.n_beta == 0 || self.n_r == 0 {
            return Err(Error::InvalidParameter { name: "grid", reason: "node counts must be positive".into() });
        }
        Ok(())
    }

    /// Midpoint nodes in β.
    pub fn beta_nodes(&self) -> Vec<f64> {
        midpoints(self.beta_min, self.beta_max, self.n_beta)
    }

    /// Midpoint nodes in r.
    pub fn r_nodes(&self) -> Vec<f64> {
        midpoints(self.r_min, self.r_max, self.n_r)
    }

    fn cell_area(&self) -> f64 {
        (self.beta_max - self.beta_min) / self.n_beta as f64 * (self.r_max - self.r_min) / self.n_r as f64
    }
}

fn midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggRecAdj {
    /// Midpoint-rule integral over the (β, r) rectangle.
    pub integral: f64,
    /// Integral divided by the rectangle area.
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// RecAdj at the nodes, indexed `[r][β]`.
    pub values: Vec<Vec<f64>>,
}

pub fn agg_rec_adj(sample: &WeightedSample, config: &AggRecAdjConfig, regime: &RegulatoryRegime) -> Result<AggRecAdj> {
    Ok(agg_rec_adj_multi(sample, config, std::slice::from_ref(regime))?.remove(0))
}

/// ReV@R numerators at every node, shared across regimes.
fn revar_nodes(sample: &WeightedSample, config: &AggRecAdjConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    sample.require_nonnegative_y()?;
    let betas = config.beta_nodes();
    let base = var_empirical(sample.x(), sample.weights(), config.alpha)?;
    config
        .r_nodes()
        .par_iter()
        .map(|&r| {
            let prof = crate::sample::TailProfile::new(&sample.combine(1.0 - r), sample.weights())?;
            betas.iter().map(|&b| Ok(prof.var(b)?.max(base))).collect::<Result<Vec<f64>>>()
        })
        .collect()
}

pub fn agg_rec_adj_multi(
    sample: &WeightedSample,
    config: &AggRecAdjConfig,
    regimes: &[RegulatoryRegime],
) -> Result<Vec<AggRecAdj>> {
    let numerators = revar_nodes(sample, config)?;
    let area = config.cell_area();
    let total_area = (config.beta_max - config.beta_min) * (config.r_max - config.r_min);
    regimes
        .iter()
        .map(|regime| {
            let denom = regulatory_capital(sample, regime)?;
            if !(denom > 0.0) {
                return Err(Error::DenominatorNotPositive { value: denom });
            }
            let values: Vec<Vec<f64>> =
                numerators.iter().map(|row| row.iter().map(|&v| (v / denom).max(1.0)).collect()).collect();
            let flat = values.iter().flatten().copied();
            let integral = crate::sample::kahan_sum(flat.clone().map(|v| v * area));
            let min = flat.clone().fold(f64::INFINITY, f64::min);
            let max = flat.fold(f64::NEG_INFINITY, f64::max);
            let mean = (integral / total_area).clamp(min, max);
            Ok(AggRecAdj { integral, mean, min, max, values })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub tau: f64,
    pub regime: String,
    pub loss_prob: f64,
    pub reg_capital: f64,
    #[serde(rename = "reg_measure_E1")]
    pub reg_measure_e1: f64,
    pub solvency_ratio: f64,
    pub agg_rec_adj_integral: f64,
    pub agg_rec_adj_mean: f64,
}

/// One row per (ρ, τ, regime) in grid order. Every cell draws its scenarios
/// from the same seed, so cells share common random numbers.
pub fn case_study_sweep(
    template: &BalanceSheetModel,
    rho_grid: &[f64],
    tau_grid: &[f64],
    regimes: &[RegulatoryRegime],
    m: usize,
    seed: u64,
    config: &AggRecAdjConfig,
) -> Result<Vec<SweepRow>> {
    if rho_grid.is_empty() || tau_grid.is_empty() || regimes.is_empty() {
        return Err(Error::InvalidParameter { name: "grid", reason: "sweep grids must be non-empty".into() });
    }
    config.validate()?;
    let cells: Vec<(f64, f64)> = rho_grid.iter().flat_map(|&rho| tau_grid.iter().map(move |&tau| (rho, tau))).collect();
    let rows = cells
        .par_iter()
        .map(|&(rho, tau)| sweep_cell(template, rho, tau, regimes, m, seed, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn sweep_cell(
    template: &BalanceSheetModel,
    rho: f64,
    tau: f64,
    regimes: &[RegulatoryRegime],
    m: usize,
    seed: u64,
    config: &AggRecAdjConfig,
) -> Result<Vec<SweepRow>> {
    let model = template.clone().with_correlation(rho).with_tail_shape(tau);
    let scen = sample_scenarios(&model, m, seed)?;
    let e0 = model.initial_net_asset_value;
    let sample = scen.sample();
    let e1 = sample.map(|d, l| (d + e0, l))?;
    let loss = loss_probability(&sample);
    let aggs = agg_rec_adj_multi(&sample, config, regimes)?;
    regimes
        .iter()
        .zip(aggs)
        .map(|(regime, agg)| {
            let cap = regulatory_capital(&sample, regime)?;
            Ok(SweepRow {
                rho,
                tau,
                regime: regime.label(),
                loss_prob: loss,
                reg_capital: cap,
                reg_measure_e1: regulatory_capital(&e1, regime)?,
                solvency_ratio: e0 / cap,
                agg_rec_adj_integral: agg.integral,
                agg_rec_adj_mean: agg.mean,
            })
        })
        .collect()
}
