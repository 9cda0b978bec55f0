//! Level functions calibrated to a V@R regime under independent normal ΔE
//! and L.

use serde::{Deserialize, Serialize};

use crate::error::{check_level, Error, Result};
use crate::measures::revar_grid;
use crate::recovery::{LevelFunction, RecoveryFunction};
use crate::rng::SplitMix64;
use crate::sample::{var_empirical, WeightedSample, Weights};
use crate::special::{normal_cdf, normal_quantile};

pub const DEFAULT_PIECES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInput {
    pub mu_delta_e: f64,
    pub sd_delta_e: f64,
    pub mu_l: f64,
    pub sd_l: f64,
    pub alpha: f64,
    /// Warning threshold for P(L < 0).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1e-4
}

impl CalibrationInput {
    pub fn new(mu_delta_e: f64, sd_delta_e: f64, mu_l: f64, sd_l: f64, alpha: f64) -> Result<Self> {
        let c = Self { mu_delta_e, sd_delta_e, mu_l, sd_l, alpha, epsilon: default_epsilon() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_level(self.alpha)?;
        if self.alpha >= 0.5 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be below 1/2, got {}", self.alpha),
            });
        }
        for (name, v) in [("sd_delta_e", self.sd_delta_e), ("sd_l", self.sd_l)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: format!("must be positive, got {v}") });
            }
        }
        for (name, v) in [("mu_delta_e", self.mu_delta_e), ("mu_l", self.mu_l)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: format!("must be finite, got {v}") });
            }
        }
        if self.mu_l < 0.0 {
            return Err(Error::InvalidParameter {
                name: "mu_l",
                reason: format!("must be non-negative, got {}", self.mu_l),
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be in (0, 1), got {}", self.epsilon),
            });
        }
        Ok(())
    }

    /// P(L < 0) under the normal liability model.
    pub fn negative_liability_probability(&self) -> f64 {
        normal_cdf(-self.mu_l / self.sd_l)
    }
}

/// V@R of N(mean, sd²): −mean − sd·Φ⁻¹(level).
pub fn normal_var(mean: f64, sd: f64, level: f64) -> Result<f64> {
    check_level(level)?;
    if !(sd > 0.0) {
        return Err(Error::InvalidParameter { name: "sd", reason: format!("must be positive, got {sd}") });
    }
    Ok(-mean - sd * normal_quantile(level)?)
}

/// Smooth calibrated γ with the plateau repair left of λ*.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CalibratedGamma {
    pub input: CalibrationInput,
    pub z_alpha: f64,
    pub lambda_star: f64,
    pub plateau: f64,
}

impl CalibratedGamma {
    /// Closed form before repair; may decrease on [0, λ*).
    pub fn raw(&self, lambda: f64) -> f64 {
        let CalibrationInput { sd_delta_e: s, mu_l, sd_l, .. } = self.input;
        let t = 1.0 - lambda;
        normal_cdf((s * self.z_alpha - t * mu_l) / (s * s + t * t * sd_l * sd_l).sqrt())
    }

    pub fn repaired(&self, lambda: f64) -> f64 {
        if lambda < self.lambda_star {
            self.plateau
        } else {
            self.raw(lambda)
        }
    }
}

impl LevelFunction for CalibratedGamma {
    fn level(&self, lambda: f64) -> f64 {
        self.repaired(lambda)
    }
}

pub fn calibrate_gamma(input: &CalibrationInput) -> Result<CalibratedGamma> {
    input.validate()?;
    let p = input.negative_liability_probability();
    if p > input.epsilon {
        log::warn!("P(L < 0) = {p:.3e} exceeds {:.1e}; the normal liability model is a poor fit", input.epsilon);
    }
    let z = normal_quantile(input.alpha)?;
    let lambda_star = (1.0 + input.mu_l * input.sd_delta_e / (input.sd_l * input.sd_l * z)).max(0.0);
    let ratio = input.mu_l / input.sd_l;
    let plateau = normal_cdf(-(z * z + ratio * ratio).sqrt());
    Ok(CalibratedGamma { input: *input, z_alpha: z, lambda_star, plateau })
}

/// n uniform pieces, each at γ of its left endpoint; adjacent pieces whose
/// levels do not increase are merged at the smaller level.
pub fn discretize_gamma<G: LevelFunction + ?Sized>(gamma: &G, n: usize) -> Result<RecoveryFunction> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "pieces", reason: "need at least one piece".into() });
    }
    let mut breakpoints: Vec<f64> = Vec::new();
    let mut levels: Vec<f64> = Vec::new();
    for i in 0..n {
        let left = i as f64 / n as f64;
        let g = gamma.level(left);
        check_level(g)?;
        match levels.last_mut() {
            None => levels.push(g),
            Some(last) if g < *last * (1.0 - 1e-12) => return Err(Error::NonMonotoneLevel { lambda: left }),
            Some(last) if g <= *last => *last = g,
            Some(_) => {
                breakpoints.push(left);
                levels.push(g);
            }
        }
    }
    RecoveryFunction::new(breakpoints, levels)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticPoint {
    pub lambda: f64,
    pub level: f64,
    /// V@R_{γ(λ)}(ΔE + (1 − λ)L) in closed form.
    pub value: f64,
    pub target: f64,
    pub repaired: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub lambda_star: f64,
    pub target: f64,
    pub analytic: Vec<AnalyticPoint>,
    pub analytic_pass: bool,
    pub mc_revar: f64,
    pub mc_target: f64,
    pub mc_relative_error: f64,
    pub mc_pass: bool,
}

pub const ANALYTIC_TOL: f64 = 1e-8;
pub const MC_REL_TOL: f64 = 0.02;

/// Analytic identity on a λ-grid and a Monte Carlo ReV@R comparison with
/// M sampled independent normal pairs.
pub fn verify_calibration(
    input: &CalibrationInput,
    gamma: &CalibratedGamma,
    m: usize,
    seed: u64,
) -> Result<CalibrationReport> {
    input.validate()?;
    if m < 2 {
        return Err(Error::InvalidParameter { name: "M", reason: format!("need at least 2 scenarios, got {m}") });
    }
    let target = normal_var(input.mu_delta_e, input.sd_delta_e, input.alpha)?;
    let n_grid = 101;
    let mut analytic = Vec::with_capacity(n_grid);
    for i in 0..n_grid {
        let lambda = i as f64 / (n_grid - 1) as f64;
        let t = 1.0 - lambda;
        let level = gamma.repaired(lambda);
        let mean = input.mu_delta_e + t * input.mu_l;
        let sd = (input.sd_delta_e.powi(2) + t * t * input.sd_l.powi(2)).sqrt();
        let value = normal_var(mean, sd, level)?;
        let repaired = lambda < gamma.lambda_star;
        let scale = target.abs().max(1.0);
        let pass = if repaired {
            value >= target - ANALYTIC_TOL * scale
        } else {
            (value - target).abs() <= ANALYTIC_TOL * scale
        };
        analytic.push(AnalyticPoint { lambda, level, value, target, repaired, pass });
    }
    let analytic_pass = analytic.iter().all(|p| p.pass);

    let rng = SplitMix64::new(seed);
    let mut x = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    for j in 0..m {
        let z1 = normal_quantile(rng.uniform_at(2 * j as u64))?;
        let z2 = normal_quantile(rng.uniform_at(2 * j as u64 + 1))?;
        x.push(input.mu_delta_e + input.sd_delta_e * z1);
        // Liabilities are floored at zero; the mass below is bounded by ε.
        y.push((input.mu_l + input.sd_l * z2).max(0.0));
    }
    let sample = WeightedSample::uniform(x, y)?;
    let mc_revar = revar_grid(&sample, gamma, 1001)?.value;
    let mc_target = var_empirical(sample.x(), &Weights::Uniform, input.alpha)?;
    let mc_relative_error = (mc_revar - target).abs() / target.abs();
    Ok(CalibrationReport {
        lambda_star: gamma.lambda_star,
        target,
        analytic,
        analytic_pass,
        mc_revar,
        mc_target,
        mc_relative_error,
        mc_pass: mc_relative_error <= MC_REL_TOL,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    #[test]
    fn normal_var_values() {
        assert_eq!(normal_var(0.0, 1.0, 0.5).unwrap(), 0.0);
        assert!((normal_var(0.0, 1.0, 0.01).unwrap() - 2.326_347_874_040_841).abs() < 1e-12);
        let base = normal_var(0.0, 2.0, 0.05).unwrap();
        assert_eq!(normal_var(3.0, 2.0, 0.05).unwrap(), base - 3.0);
        assert!(normal_var(0.0, 0.0, 0.05).is_err());
    }

    #[test]
    fn gamma_at_one_is_alpha() {
        for (mu, sd) in [(0.0, 1.0), (10.0, 2.0), (1.0, 3.0), (0.5, 0.1)] {
            let inp = CalibrationInput::new(0.3, 1.5, mu, sd, 0.01).unwrap();
            let g = calibrate_gamma(&inp).unwrap();
            assert!((g.repaired(1.0) - 0.01).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_mean_liability_collapses_to_alpha() {
        let inp = CalibrationInput::new(0.0, 1.0, 0.0, 1.0, 0.01).unwrap();
        let g = calibrate_gamma(&inp).unwrap();
        assert_eq!(g.lambda_star, 1.0);
        assert!((g.plateau - 0.01).abs() < 1e-15);
        for i in 0..=10 {
            assert!((g.repaired(i as f64 / 10.0) - 0.01).abs() < 1e-15);
        }
        let d = discretize_gamma(&g, 10).unwrap();
        assert_eq!(d.n(), 0);
        assert!((d.levels()[0] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn unrepaired_example() {
        let inp = CalibrationInput::new(0.0, 1.0, 10.0, 2.0, 0.01).unwrap();
        let g = calibrate_gamma(&inp).unwrap();
        assert_eq!(g.lambda_star, 0.0);
        assert!((g.repaired(0.0) - 1.768_756_883_712_460_2e-8).abs() < 1e-20);
    }

    #[test]
    fn repaired_function_is_monotone() {
        let inp = CalibrationInput::new(0.0, 1.0, 1.0, 1.0, 0.01).unwrap();
        let g = calibrate_gamma(&inp).unwrap();
        assert!(g.lambda_star > 0.0 && g.lambda_star < 1.0);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let v = g.repaired(i as f64 / 1000.0);
            assert!(v >= prev && v > 0.0 && v < 1.0);
            prev = v;
        }
        // Continuity at λ*.
        assert!((g.raw(g.lambda_star) - g.plateau).abs() < 1e-12);
    }

    #[test]
    fn discretization_is_conservative() {
        let inp = CalibrationInput::new(0.0, 1.0, 10.0, 2.0, 0.01).unwrap();
        let g = calibrate_gamma(&inp).unwrap();
        let d = discretize_gamma(&g, 10).unwrap();
        assert_eq!(d.levels().len(), d.n() + 1);
        let mut prev = 0.0;
        for p in d.pieces() {
            assert!(p.level >= prev);
            assert!(p.level <= g.repaired(p.fraction) + 1e-15);
            prev = p.level;
        }
        assert!(discretize_gamma(&g, 0).is_err());
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(CalibrationInput::new(0.0, 1.0, 1.0, 1.0, 0.5).is_err());
        assert!(CalibrationInput::new(0.0, 0.0, 1.0, 1.0, 0.01).is_err());
        assert!(CalibrationInput::new(0.0, 1.0, -1.0, 1.0, 0.01).is_err());
    }

    #[test]
    fn verification_passes() {
        let inp = CalibrationInput::new(0.0, 1.0, 10.0, 2.0, 0.01).unwrap();
        let g = calibrate_gamma(&inp).unwrap();
        let rep = verify_calibration(&inp, &g, 20_000, 3).unwrap();
        assert!(rep.analytic_pass);
        let inp = CalibrationInput::new(0.5, 1.0, 1.0, 1.0, 0.01).unwrap();
        let g = calibrate_gamma(&inp).unwrap();
        let rep = verify_calibration(&inp, &g, 20_000, 3).unwrap();
        assert!(rep.analytic_pass, "{:?}", rep.analytic.iter().find(|p| !p.pass));
    }
}
