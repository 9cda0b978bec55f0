//! One-period insurance balance sheet: lognormal assets, spliced gamma
//! liabilities and a Gaussian copula.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::rng::SplitMix64;
use crate::sample::{kahan_sum, WeightedSample, Weights};
use crate::special::{gamma_cdf, gamma_quantile, gamma_quantile_upper, normal_cdf, normal_sf, quantile_unchecked};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceSheetModel {
    pub asset_log_mean: f64,
    pub asset_log_sd: f64,
    pub liability_body_shape: f64,
    pub liability_body_rate: f64,
    pub liability_tail_shape: f64,
    pub liability_tail_rate: f64,
    pub splice_level: f64,
    pub copula_correlation: f64,
    pub initial_net_asset_value: f64,
}

impl Default for BalanceSheetModel {
    fn default() -> Self {
        Self {
            asset_log_mean: 2.0,
            asset_log_sd: 0.2,
            liability_body_shape: 1.0,
            liability_body_rate: 1.0,
            liability_tail_shape: 3.0,
            liability_tail_rate: 1.0,
            splice_level: 0.975,
            copula_correlation: 0.5,
            initial_net_asset_value: 6.5,
        }
    }
}

impl BalanceSheetModel {
    pub fn with_correlation(mut self, rho: f64) -> Self {
        self.copula_correlation = rho;
        self
    }

    pub fn with_tail_shape(mut self, tau: f64) -> Self {
        self.liability_tail_shape = tau;
        self
    }

    /// The correlation may be ±1 (degenerate copula).
    pub fn validate(&self) -> Result<()> {
        if !self.asset_log_mean.is_finite() {
            return Err(Error::InvalidParameter { name: "asset_log_mean", reason: "must be finite".into() });
        }
        check_positive(self.asset_log_sd, "asset_log_sd")?;
        check_positive(self.liability_body_shape, "liability_body_shape")?;
        check_positive(self.liability_body_rate, "liability_body_rate")?;
        check_positive(self.liability_tail_shape, "liability_tail_shape")?;
        check_positive(self.liability_tail_rate, "liability_tail_rate")?;
        if !(self.splice_level > 0.0 && self.splice_level < 1.0) {
            return Err(Error::InvalidParameter {
                name: "splice_level",
                reason: format!("must be in (0, 1), got {}", self.splice_level),
            });
        }
        if !(self.copula_correlation.abs() <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "copula_correlation",
                reason: format!("must be in [-1, 1], got {}", self.copula_correlation),
            });
        }
        if !self.initial_net_asset_value.is_finite() {
            return Err(Error::InvalidParameter { name: "initial_net_asset_value", reason: "must be finite".into() });
        }
        Ok(())
    }

    pub fn liability_law(&self) -> Result<SplicedGamma> {
        self.validate()?;
        SplicedGamma::new(
            self.liability_body_shape,
            self.liability_body_rate,
            self.liability_tail_shape,
            self.liability_tail_rate,
            self.splice_level,
        )
    }

    pub fn asset_cdf(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        normal_cdf((a.ln() - self.asset_log_mean) / self.asset_log_sd)
    }

    pub fn asset_quantile(&self, u: f64) -> Result<f64> {
        Ok((self.asset_log_mean + self.asset_log_sd * crate::special::normal_quantile(u)?).exp())
    }
}

/// Gamma body below the splice point q₀ and a shifted gamma tail above it.
#[derive(Clone, Debug, PartialEq)]
pub struct SplicedGamma {
    body_shape: f64,
    body_rate: f64,
    tail_shape: f64,
    tail_rate: f64,
    level: f64,
    splice_point: f64,
    shift: f64,
}

impl SplicedGamma {
    pub fn new(body_shape: f64, body_rate: f64, tail_shape: f64, tail_rate: f64, level: f64) -> Result<Self> {
        let splice_point = gamma_quantile(level, body_shape, body_rate)?;
        let tail_at_level = gamma_quantile(level, tail_shape, tail_rate)?;
        Ok(Self {
            body_shape,
            body_rate,
            tail_shape,
            tail_rate,
            level,
            splice_point,
            shift: tail_at_level - splice_point,
        })
    }

    pub fn splice_point(&self) -> f64 {
        self.splice_point
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.splice_point {
            gamma_cdf(x, self.body_shape, self.body_rate).unwrap_or(0.0)
        } else {
            gamma_cdf(x + self.shift, self.tail_shape, self.tail_rate).unwrap_or(1.0)
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if u < self.level {
            gamma_quantile(u, self.body_shape, self.body_rate)
        } else {
            Ok(gamma_quantile(u, self.tail_shape, self.tail_rate)? - self.shift)
        }
    }

    /// Quantile at 1 − s, accurate for small survival probabilities s.
    pub fn quantile_upper(&self, s: f64) -> Result<f64> {
        if 1.0 - s < self.level {
            gamma_quantile_upper(s, self.body_shape, self.body_rate)
        } else {
            Ok(gamma_quantile_upper(s, self.tail_shape, self.tail_rate)? - self.shift)
        }
    }
}

/// Simulated balance sheet: ΔE₁ = A₁ − L₁ − E₀ per scenario, uniform weights.
#[derive(Clone, Debug, PartialEq)]
pub struct BalanceScenarios {
    pub delta_e: Vec<f64>,
    pub liabilities: Vec<f64>,
    pub assets: Vec<f64>,
    pub initial_net_asset_value: f64,
}

impl BalanceScenarios {
    pub fn len(&self) -> usize {
        self.delta_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_e.is_empty()
    }

    /// (ΔE₁, L₁).
    pub fn sample(&self) -> WeightedSample {
        WeightedSample::new(self.delta_e.clone(), self.liabilities.clone(), Weights::Uniform)
            .expect("simulated values are finite")
    }

    /// (A₁, L₁).
    pub fn asset_sample(&self) -> WeightedSample {
        WeightedSample::new(self.assets.clone(), self.liabilities.clone(), Weights::Uniform)
            .expect("simulated values are finite")
    }
}

/// Deterministic scenario generation. Scenario m uses uniforms 2m and 2m + 1
/// of the SplitMix64 stream for `seed`; normals come from inverse-CDF
/// transforms, so the output does not depend on the number of threads.
pub fn sample_scenarios(model: &BalanceSheetModel, m: usize, seed: u64) -> Result<BalanceScenarios> {
    if m == 0 {
        return Err(Error::InvalidParameter { name: "M", reason: "need at least one scenario".into() });
    }
    let law = model.liability_law()?;
    let rng = SplitMix64::new(seed);
    let rho = model.copula_correlation;
    let rho_c = (1.0 - rho * rho).max(0.0).sqrt();
    let e0 = model.initial_net_asset_value;
    let rows: Vec<(f64, f64, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let z1 = quantile_unchecked(rng.uniform_at(2 * i as u64));
            let z2 = quantile_unchecked(rng.uniform_at(2 * i as u64 + 1));
            let z2c = rho * z1 + rho_c * z2;
            // Φ⁻¹(Φ(z₁)) = z₁, so the lognormal quantile is applied directly.
            let a = (model.asset_log_mean + model.asset_log_sd * z1).exp();
            let l = if z2c > 0.0 { law.quantile_upper(normal_sf(z2c)) } else { law.quantile(normal_cdf(z2c)) }
                .expect("copula uniforms lie in (0, 1)");
            (a - l - e0, l, a)
        })
        .collect();
    let mut out = BalanceScenarios {
        delta_e: Vec::with_capacity(m),
        liabilities: Vec::with_capacity(m),
        assets: Vec::with_capacity(m),
        initial_net_asset_value: e0,
    };
    for (d, l, a) in rows {
        out.delta_e.push(d);
        out.liabilities.push(l);
        out.assets.push(a);
    }
    Ok(out)
}

/// Weighted frequency of ΔE₁ < 0 (x of the sample).
pub fn loss_probability(sample: &WeightedSample) -> f64 {
    let n = sample.len();
    kahan_sum((0..n).filter(|&i| sample.x()[i] < 0.0).map(|i| sample.weight(i)))
}
