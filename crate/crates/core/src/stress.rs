//! Closed-form stress cases: the two-state contract and the peaked liability
//! density, with the extremal construction attaining a prescribed recovery
//! adjustment.

use serde::{Deserialize, Serialize};

use crate::error::{check_level, Error, Result};
use crate::measures::{MeasureKind, MONEY_TOL};
use crate::recovery::RecoveryFunction;
use crate::sample::{WeightedSample, Weights};

/// Two states: liabilities 1 (good) or 100 (bad, probability α/2), constant
/// assets 101 − k... expressed directly through E₁ = ±(100 − k).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStateCase {
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoStateMeasures {
    pub var_alpha: f64,
    pub avar_alpha: f64,
    /// V@R_β(E + (1 − r)L).
    pub var_beta_recovery: f64,
    /// AV@R_β(E + (1 − r)L).
    pub avar_beta_recovery: f64,
    pub revar: f64,
    pub reavar: f64,
    /// Smallest k passing the ReV@R test.
    pub revar_threshold: f64,
    /// Smallest k passing the ReAV@R test.
    pub reavar_threshold: f64,
}

impl TwoStateCase {
    pub fn new(k: f64, alpha: f64, beta: f64, r: f64) -> Result<Self> {
        let c = Self { k, alpha, beta, r };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_level(self.alpha)?;
        if !(0.0..=100.0).contains(&self.k) {
            return Err(Error::InvalidParameter { name: "k", reason: format!("must be in [0, 100], got {}", self.k) });
        }
        if !(self.beta > 0.0 && self.beta < self.alpha) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("need 0 < beta < alpha, got {}", self.beta),
            });
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidParameter { name: "r", reason: format!("must be in (0, 1), got {}", self.r) });
        }
        Ok(())
    }

    pub fn gamma(&self) -> RecoveryFunction {
        RecoveryFunction::two_level(self.beta, self.r, self.alpha).expect("validated case")
    }

    /// Sample of (E₁, L₁): good state first, bad state second.
    pub fn sample(&self) -> WeightedSample {
        WeightedSample::new(
            vec![100.0 - self.k, self.k - 100.0],
            vec![1.0, 100.0],
            Weights::Explicit(vec![1.0 - self.alpha / 2.0, self.alpha / 2.0]),
        )
        .expect("validated case")
    }

    /// Closed forms of every quantity.
    pub fn measures(&self) -> Result<TwoStateMeasures> {
        self.validate()?;
        let Self { k, alpha, beta, r } = *self;
        let low_beta = beta < alpha / 2.0;
        let var_beta_recovery = if low_beta && k <= (101.0 + 99.0 * r) / 2.0 { 100.0 * r - k } else { k + r - 101.0 };
        let avar_beta_recovery = if low_beta && k <= (101.0 + 99.0 * r) / 2.0 {
            100.0 * r - k
        } else if k <= (101.0 + 99.0 * r) / 2.0 {
            r - 101.0 + alpha / (2.0 * beta) * (101.0 + 99.0 * r) + (1.0 - alpha / beta) * k
        } else {
            k + r - 101.0
        };
        let revar = if low_beta && k <= 50.0 * (r + 1.0) { 100.0 * r - k } else { k - 100.0 };
        let t_mid = ((99.0 * alpha + 2.0 * beta) * r - 101.0 * (2.0 * beta - alpha)) / (2.0 * (alpha - beta));
        let reavar = if low_beta && k <= 100.0 * r {
            100.0 * r - k
        } else if !low_beta && k <= t_mid {
            r - 101.0 + alpha / (2.0 * beta) * (101.0 + 99.0 * r) + (1.0 - alpha / beta) * k
        } else {
            0.0
        };
        Ok(TwoStateMeasures {
            var_alpha: k - 100.0,
            avar_alpha: 0.0,
            var_beta_recovery,
            avar_beta_recovery,
            revar,
            reavar,
            revar_threshold: if low_beta { 100.0 * r } else { 0.0 },
            reavar_threshold: if low_beta { 100.0 * r } else { t_mid.max(0.0) },
        })
    }
}

pub fn two_state_measures(case: &TwoStateCase) -> Result<TwoStateMeasures> {
    case.measures()
}

/// Two triangular peaks: mass 1 − α on [0, a] and α on [b, c]. Net assets at
/// time 1 are E₁ = k − L₁ and ΔE₁ = k − L₁ − E₀.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakedLiabilityModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default = "default_peaked_alpha")]
    pub alpha: f64,
    pub k: f64,
    pub e0: f64,
}

fn default_peaked_alpha() -> f64 {
    0.005
}

impl PeakedLiabilityModel {
    pub fn new(a: f64, b: f64, c: f64, k: f64, e0: f64) -> Result<Self> {
        Self::with_alpha(a, b, c, default_peaked_alpha(), k, e0)
    }

    pub fn with_alpha(a: f64, b: f64, c: f64, alpha: f64, k: f64, e0: f64) -> Result<Self> {
        let m = Self { a, b, c, alpha, k, e0 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < self.b && self.b < self.c && self.c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "a, b, c",
                reason: format!("need 0 < a < b < c, got ({}, {}, {})", self.a, self.b, self.c),
            });
        }
        // The AV@R formula needs the 2α quantile inside the upper half of the body.
        if !(self.alpha > 0.0 && self.alpha < 1.0 / 3.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be in (0, 1/3), got {}", self.alpha),
            });
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter { name: "k", reason: format!("must be positive, got {}", self.k) });
        }
        if !(self.e0 > 0.0 && self.e0.is_finite()) {
            return Err(Error::InvalidParameter { name: "e0", reason: format!("must be positive, got {}", self.e0) });
        }
        Ok(())
    }

    pub fn density(&self, x: f64) -> f64 {
        let Self { a, b, c, alpha, .. } = *self;
        let m = 0.5 * (b + c);
        if x < 0.0 || x > c || (x > a && x < b) {
            0.0
        } else if x <= a / 2.0 {
            4.0 * (1.0 - alpha) * x / (a * a)
        } else if x <= a {
            4.0 * (1.0 - alpha) * (a - x) / (a * a)
        } else if x <= m {
            4.0 * alpha * (x - b) / ((c - b) * (c - b))
        } else {
            4.0 * alpha * (c - x) / ((c - b) * (c - b))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let Self { a, b, c, alpha, .. } = *self;
        let m = 0.5 * (b + c);
        let w = c - b;
        if x <= 0.0 {
            0.0
        } else if x <= a / 2.0 {
            2.0 * (1.0 - alpha) * x * x / (a * a)
        } else if x <= a {
            (1.0 - alpha) - 2.0 * (1.0 - alpha) * (a - x) * (a - x) / (a * a)
        } else if x <= b {
            1.0 - alpha
        } else if x <= m {
            1.0 - alpha + 2.0 * alpha * (x - b) * (x - b) / (w * w)
        } else if x < c {
            1.0 - 2.0 * alpha * (c - x) * (c - x) / (w * w)
        } else {
            1.0
        }
    }

    /// Generalized inverse of the CDF at u in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParameter { name: "u", reason: format!("must be in (0, 1), got {u}") });
        }
        Ok(self.quantile_split(u, 1.0 - u))
    }

    /// Quantile given both u and its complement s = 1 − u, each exact; the
    /// upper branches use s to keep precision in the tail.
    pub fn quantile_split(&self, u: f64, s: f64) -> f64 {
        let Self { a, b, c, alpha, .. } = *self;
        let body = 1.0 - alpha;
        if u <= body / 2.0 {
            a * (u / (2.0 * body)).sqrt()
        } else if s >= alpha {
            // u in (body/2, 1 − α]; 1 − α − u = s − α.
            a - a * ((s - alpha) / (2.0 * body)).max(0.0).sqrt()
        } else if s >= alpha / 2.0 {
            b + (c - b) * ((alpha - s) / (2.0 * alpha)).sqrt()
        } else {
            c - (c - b) * (s / (2.0 * alpha)).sqrt()
        }
    }

    /// ξ = 1/2 − (1/3)√(α / (2(1 − α))).
    pub fn xi(&self) -> f64 {
        0.5 - (self.alpha / (2.0 * (1.0 - self.alpha))).sqrt() / 3.0
    }

    /// q_β(b, c): the β upper quantile inside the tail peak.
    pub fn tail_quantile(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0 && beta < self.alpha) {
            return Err(Error::InvalidParameter { name: "beta", reason: format!("need 0 < beta < alpha, got {beta}") });
        }
        let (wb, wc) = tail_weights(beta, self.alpha);
        Ok(wb * self.b + wc * self.c)
    }

    /// Exact sample: scenario j takes the quantile at (j + 1/2)/M.
    pub fn stratified_sample(&self, m: usize) -> Result<WeightedSample> {
        if m == 0 {
            return Err(Error::InvalidParameter { name: "M", reason: "need at least one scenario".into() });
        }
        let n = m as f64;
        let mut x = Vec::with_capacity(m);
        let mut y = Vec::with_capacity(m);
        for j in 0..m {
            let u = (j as f64 + 0.5) / n;
            let s = (n - j as f64 - 0.5) / n;
            let l = self.quantile_split(u, s);
            x.push(self.k - l - self.e0);
            y.push(l);
        }
        WeightedSample::uniform(x, y)
    }
}

/// Coefficients (w_b, w_c) with q_β = w_b·b + w_c·c.
fn tail_weights(beta: f64, alpha: f64) -> (f64, f64) {
    if beta < alpha / 2.0 {
        let t = (beta / (2.0 * alpha)).sqrt();
        (t, 1.0 - t)
    } else {
        let t = ((alpha - beta) / (2.0 * alpha)).sqrt();
        (1.0 - t, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeakedRegulatory {
    /// V@R_α(ΔE₁).
    pub var: f64,
    /// AV@R_{2α}(ΔE₁).
    pub avar: f64,
}

/// V@R at α and AV@R at 2α of ΔE₁ in closed form.
pub fn peaked_regulatory(model: &PeakedLiabilityModel) -> Result<PeakedRegulatory> {
    model.validate()?;
    let PeakedLiabilityModel { a, b, c, k, e0, .. } = *model;
    Ok(PeakedRegulatory { var: a - k + e0, avar: model.xi() * a + (b + c) / 4.0 - k + e0 })
}

/// ReV@R of (ΔE₁, L₁) under the two-level γ(β, r, α): max{a, r·q_β} − k + E₀.
pub fn peaked_revar(model: &PeakedLiabilityModel, beta: f64, r: f64) -> Result<f64> {
    model.validate()?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter { name: "r", reason: format!("must be in (0, 1), got {r}") });
    }
    let q = model.tail_quantile(beta)?;
    Ok(model.a.max(r * q) - model.k + model.e0)
}

/// Regulatory regime of the peaked model: V@R at α or AV@R at 2α.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakedRegime {
    Var,
    Avar,
}

impl PeakedRegime {
    pub fn measure(self) -> MeasureKind {
        match self {
            PeakedRegime::Var => MeasureKind::ValueAtRisk,
            PeakedRegime::Avar => MeasureKind::AverageValueAtRisk,
        }
    }
}

fn regulatory_value(model: &PeakedLiabilityModel, regime: PeakedRegime) -> Result<f64> {
    let reg = peaked_regulatory(model)?;
    Ok(match regime {
        PeakedRegime::Var => reg.var,
        PeakedRegime::Avar => reg.avar,
    })
}

/// max{ReV@R / ρ_reg, 1} in closed form.
pub fn peaked_rec_adj(model: &PeakedLiabilityModel, beta: f64, r: f64, regime: PeakedRegime) -> Result<f64> {
    let denom = regulatory_value(model, regime)?;
    if !(denom > 0.0) {
        return Err(Error::DenominatorNotPositive { value: denom });
    }
    Ok((peaked_revar(model, beta, r)? / denom).max(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSearchConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub regime: PeakedRegime,
    pub beta: f64,
    pub r: f64,
    #[serde(default = "default_peaked_alpha")]
    pub alpha: f64,
    /// Body peak width; defaults to 10·E₀.
    #[serde(default)]
    pub anchor_a: Option<f64>,
}

impl ExtremalSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1.0 < self.s_min && self.s_min < self.s_max && self.s_max.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "s_min, s_max",
                reason: format!("need 1 < s_min < s_max, got ({}, {})", self.s_min, self.s_max),
            });
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0 / 3.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be in (0, 1/3), got {}", self.alpha),
            });
        }
        if !(self.beta > 0.0 && self.beta < self.alpha) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("need 0 < beta < alpha, got {}", self.beta),
            });
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidParameter { name: "r", reason: format!("must be in (0, 1), got {}", self.r) });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub value: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub checks: Vec<ConstraintCheck>,
    pub all_satisfied: bool,
}

/// The six admissibility constraints of the stress problem, evaluated
/// directly from the closed forms:
/// (1) ρ_reg(E₁) ≤ 0, (2) ρ_reg(ΔE₁) > 0, (3) ReV@R(E₁) ≤ 0,
/// (4) ReV@R(ΔE₁) > 0, (5) ReV@R(E₁) > V@R_α(E₁), (6) s_min ≤ E₀/ρ_reg(ΔE₁) ≤ s_max.
pub fn peaked_constraints(
    model: &PeakedLiabilityModel,
    beta: f64,
    r: f64,
    regime: PeakedRegime,
    s_min: f64,
    s_max: f64,
) -> Result<ConstraintReport> {
    let e0 = model.e0;
    let reg = regulatory_value(model, regime)?;
    let revar_de = peaked_revar(model, beta, r)?;
    let revar_e1 = revar_de - e0;
    let var_e1 = peaked_regulatory(model)?.var - e0;
    let ratio = e0 / reg;
    let tol = MONEY_TOL;
    let rel = 1e-9;
    let checks = vec![
        ConstraintCheck { name: "regulatory solvency of E1", value: reg - e0, satisfied: reg - e0 <= tol },
        ConstraintCheck { name: "positive regulatory capital", value: reg, satisfied: reg > 0.0 },
        ConstraintCheck { name: "recovery solvency of E1", value: revar_e1, satisfied: revar_e1 <= tol },
        ConstraintCheck { name: "positive recovery capital", value: revar_de, satisfied: revar_de > 0.0 },
        ConstraintCheck {
            name: "recovery test binds beyond V@R",
            value: revar_e1 - var_e1,
            satisfied: revar_e1 > var_e1,
        },
        ConstraintCheck {
            name: "solvency ratio in range",
            value: ratio,
            satisfied: ratio >= s_min * (1.0 - rel) && ratio <= s_max * (1.0 + rel),
        },
    ];
    let all_satisfied = checks.iter().all(|c| c.satisfied);
    Ok(ConstraintReport { checks, all_satisfied })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalConstruction {
    pub model: PeakedLiabilityModel,
    pub rec_adj: f64,
    pub constraints: ConstraintReport,
    /// P(E₁ < E₀) = P(L₁ > k − E₀) under the constructed model.
    pub loss_probability: f64,
    /// a − E₀/s_max, to be compared with a/2 as a realism diagnostic.
    pub realism_gap: f64,
}

/// Model attaining RecAdj = s_max with all six constraints satisfied.
pub fn extremal_construction(config: &ExtremalSearchConfig, e0: f64) -> Result<ExtremalConstruction> {
    config.validate()?;
    if !(e0 > 0.0 && e0.is_finite()) {
        return Err(Error::InvalidParameter { name: "e0", reason: format!("must be positive, got {e0}") });
    }
    let ExtremalSearchConfig { s_min, s_max, regime, beta, r, alpha, anchor_a } = *config;
    let sfac = (s_max - 1.0) / s_max;
    let se0 = sfac * e0;
    let model = match regime {
        PeakedRegime::Var => {
            let a = anchor_a.unwrap_or(10.0 * e0);
            let k = a + se0;
            let target = k / r;
            let (wb, wc) = tail_weights(beta, alpha);
            let b = 0.5 * (a + target);
            let c = (target - wb * b) / wc;
            PeakedLiabilityModel::with_alpha(a, b, c, alpha, k, e0)?
        }
        PeakedRegime::Avar => {
            if beta < alpha / 2.0 {
                return Err(Error::ConstructionInfeasible(format!(
                    "AV@R regime needs beta >= alpha/2, got beta = {beta}, alpha = {alpha}"
                )));
            }
            let lam = ((alpha - beta) / (2.0 * alpha)).sqrt();
            let probe = PeakedLiabilityModel { a: 1.0, b: 2.0, c: 3.0, alpha, k: 1.0, e0 };
            let xi = probe.xi();
            let r_low = 1.0 / (4.0 * lam);
            let r_high = 1.0 / (4.0 * (1.0 - lam) * (1.0 - xi));
            if !(r > r_low && r <= r_high) {
                return Err(Error::ConstructionInfeasible(format!(
                    "r = {r} outside the admissible interval ({r_low}, {r_high}]"
                )));
            }
            let cap = se0 / (r * lam - 0.25);
            let b = 0.5 * cap;
            let lower = (se0 - (r * (1.0 - lam) - 0.25) * b) / (r * lam - 0.25);
            let lo = lower.max(b);
            if !(lo < cap) {
                return Err(Error::ConstructionInfeasible(format!("empty interval for c: [{lo}, {cap})")));
            }
            let c = 0.5 * (lo + cap);
            let k = r * ((1.0 - lam) * b + lam * c);
            let a = (k - (b + c) / 4.0 - se0) / xi;
            PeakedLiabilityModel::with_alpha(a, b, c, alpha, k, e0)
                .map_err(|e| Error::ConstructionInfeasible(format!("constructed parameters invalid: {e}")))?
        }
    };
    let rec_adj = peaked_rec_adj(&model, beta, r, regime)?;
    let constraints = peaked_constraints(&model, beta, r, regime, s_min, s_max)?;
    if !constraints.all_satisfied {
        let failed: Vec<&str> = constraints.checks.iter().filter(|c| !c.satisfied).map(|c| c.name).collect();
        return Err(Error::ConstructionInfeasible(format!("violated constraints: {}", failed.join(", "))));
    }
    let loss_probability = 1.0 - model.cdf(model.k - e0);
    Ok(ExtremalConstruction { model, rec_adj, constraints, loss_probability, realism_gap: model.a - e0 / s_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{reavar, revar};
    use crate::sample::{avar_empirical, var_empirical};

    #[test]
    fn closed_forms_match_engine_on_examples() {
        for &(k, alpha, beta, r) in &[
            (30.0, 0.01, 0.002, 0.6),
            (75.0, 0.01, 0.002, 0.6),
            (10.0, 0.02, 0.015, 0.8),
            (90.0, 0.02, 0.015, 0.8),
            (0.0, 0.05, 0.025, 0.5),
        ] {
            let case = TwoStateCase::new(k, alpha, beta, r).unwrap();
            let cf = case.measures().unwrap();
            let s = case.sample();
            let g = case.gamma();
            let e = s.x();
            let w = s.weights();
            assert!((var_empirical(e, w, alpha).unwrap() - cf.var_alpha).abs() < 1e-9);
            assert!((avar_empirical(e, w, alpha).unwrap() - cf.avar_alpha).abs() < 1e-9);
            let shifted = s.combine(1.0 - r);
            assert!((var_empirical(&shifted, w, beta).unwrap() - cf.var_beta_recovery).abs() < 1e-9);
            assert!((avar_empirical(&shifted, w, beta).unwrap() - cf.avar_beta_recovery).abs() < 1e-9);
            assert!((revar(&s, &g).unwrap().value - cf.revar).abs() < 1e-9);
            assert!((reavar(&s, &g).unwrap().value - cf.reavar).abs() < 1e-9, "{k} {alpha} {beta} {r}");
        }
    }

    #[test]
    fn half_level_threshold_is_full_recovery_share() {
        for r in [0.3, 0.5, 0.8] {
            let case = TwoStateCase::new(50.0, 0.01, 0.005, r).unwrap();
            let t = case.measures().unwrap().reavar_threshold;
            assert!((t - 100.0 * r).abs() < 1e-9);
        }
    }

    #[test]
    fn two_state_validation() {
        assert!(TwoStateCase::new(-1.0, 0.01, 0.005, 0.5).is_err());
        assert!(TwoStateCase::new(10.0, 0.01, 0.01, 0.5).is_err());
        assert!(TwoStateCase::new(10.0, 0.01, 0.005, 1.0).is_err());
    }

    fn reference_model() -> PeakedLiabilityModel {
        PeakedLiabilityModel::new(10.0, 40.0, 60.0, 12.0, 4.0).unwrap()
    }

    #[test]
    fn peaked_mass_and_cdf() {
        let m = reference_model();
        assert!((m.cdf(m.a) - 0.995).abs() < 1e-15);
        assert_eq!(m.cdf(m.c), 1.0);
        // Midpoint integration of the density.
        let n = 200_000;
        let h = m.c / n as f64;
        let total: f64 = (0..n).map(|i| m.density((i as f64 + 0.5) * h) * h).sum();
        let body: f64 = (0..n).map(|i| (i as f64 + 0.5) * h).filter(|&x| x <= m.a).map(|x| m.density(x) * h).sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert!((body - 0.995).abs() < 1e-6);
    }

    #[test]
    fn peaked_quantile_inverts_cdf() {
        let m = reference_model();
        let xs = (1..200).map(|i| i as f64 * 0.05).chain((1..200).map(|i| 40.0 + i as f64 * 0.1));
        for x in xs {
            let u = m.cdf(x);
            let q = m.quantile(u).unwrap();
            assert!((q - x).abs() < 1e-10 * x.max(1.0), "x={x} q={q}");
        }
        assert_eq!(m.quantile_split(0.995, 0.005), m.a);
    }

    #[test]
    fn peaked_closed_form_values() {
        let m = reference_model();
        let reg = peaked_regulatory(&m).unwrap();
        assert!((reg.var - 2.0).abs() < 1e-15);
        let xi = 0.5 - (0.005f64 / 1.99).sqrt() / 3.0;
        assert!((reg.avar - (xi * 10.0 + 25.0 - 12.0 + 4.0)).abs() < 1e-13);
        assert!((m.tail_quantile(0.0025).unwrap() - 50.0).abs() < 1e-12);
        assert!((peaked_revar(&m, 0.0025, 0.8).unwrap() - (40.0 - 12.0 + 4.0)).abs() < 1e-12);
        assert!((peaked_rec_adj(&m, 0.0025, 0.8, PeakedRegime::Var).unwrap() - 16.0).abs() < 1e-12);
        let edge = PeakedLiabilityModel::new(10.0, 40.0, 60.0, 14.0, 4.0).unwrap();
        assert_eq!(peaked_regulatory(&edge).unwrap().var, 0.0);
    }

    #[test]
    fn avar_dominates_var_at_equal_level() {
        let m = reference_model();
        let s = m.stratified_sample(200_000).unwrap();
        let v = var_empirical(s.x(), s.weights(), 0.01).unwrap();
        assert!(peaked_regulatory(&m).unwrap().avar >= v);
    }

    #[test]
    fn extremal_var_regime_example() {
        let cfg = ExtremalSearchConfig {
            s_min: 1.5,
            s_max: 3.0,
            regime: PeakedRegime::Var,
            beta: 0.0025,
            r: 0.8,
            alpha: 0.005,
            anchor_a: Some(10.0),
        };
        let out = extremal_construction(&cfg, 6.0).unwrap();
        assert!((out.model.k - 14.0).abs() < 1e-12);
        assert!((out.rec_adj - 3.0).abs() < 1e-12);
        assert!(out.constraints.all_satisfied);
    }

    #[test]
    fn extremal_avar_regime_interval() {
        let alpha = 0.005;
        for r in [0.51, 0.6, 0.75, 0.9, 0.95] {
            let cfg = ExtremalSearchConfig {
                s_min: 1.2,
                s_max: 2.5,
                regime: PeakedRegime::Avar,
                beta: alpha / 2.0,
                r,
                alpha,
                anchor_a: None,
            };
            let out = extremal_construction(&cfg, 6.5).unwrap();
            assert!((out.rec_adj - 2.5).abs() < 1e-9 * 2.5, "r={r}: {}", out.rec_adj);
            assert!(out.constraints.all_satisfied);
        }
        let bad = ExtremalSearchConfig {
            s_min: 1.2,
            s_max: 2.5,
            regime: PeakedRegime::Avar,
            beta: alpha / 2.0,
            r: 0.5,
            alpha,
            anchor_a: None,
        };
        assert!(matches!(extremal_construction(&bad, 6.5), Err(Error::ConstructionInfeasible(_))));
        let low_beta = ExtremalSearchConfig { beta: 0.001, r: 0.8, ..bad };
        assert!(matches!(extremal_construction(&low_beta, 6.5), Err(Error::ConstructionInfeasible(_))));
    }
}
