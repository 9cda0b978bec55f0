//! Randomized instance generators shared by the acceptance suite.

use recovery_risk::allocation::DivisionalSample;
use recovery_risk::rng::SplitMix64;
use recovery_risk::special::normal_quantile;
use recovery_risk::{RecoveryFunction, WeightedSample, Weights};

/// Counter-based uniform stream.
pub struct Draws {
    rng: SplitMix64,
    k: u64,
}

impl Draws {
    pub fn new(seed: u64) -> Self {
        Self { rng: SplitMix64::new(seed), k: 0 }
    }

    /// Uniform on (0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.k += 1;
        self.rng.uniform_at(self.k)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Integer in [lo, hi].
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        (lo + (self.uniform() * (hi - lo + 1) as f64) as usize).min(hi)
    }

    pub fn normal(&mut self) -> f64 {
        normal_quantile(self.uniform()).expect("uniform lies in (0, 1)")
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// Piecewise γ with `n` breakpoints and levels in (0, 0.3).
pub fn random_gamma(d: &mut Draws, n: usize) -> RecoveryFunction {
    loop {
        let mut br: Vec<f64> = (0..n).map(|_| d.range(0.02, 0.98)).collect();
        br.sort_by(f64::total_cmp);
        let mut lv: Vec<f64> = (0..=n).map(|_| d.range(0.005, 0.3)).collect();
        lv.sort_by(f64::total_cmp);
        if let Ok(g) = RecoveryFunction::new(br, lv) {
            return g;
        }
    }
}

/// Random weights, either uniform or a normalized positive vector.
pub fn random_weights(d: &mut Draws, m: usize) -> Weights {
    if d.coin(0.5) {
        return Weights::Uniform;
    }
    let raw: Vec<f64> = (0..m).map(|_| d.range(0.1, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    Weights::Explicit(raw.into_iter().map(|w| w / total).collect())
}

/// Sample with x normal around a random centre, y ≥ 0 with some zeros.
pub fn random_sample(d: &mut Draws, m: usize) -> WeightedSample {
    let weights = random_weights(d, m);
    random_sample_with(d, m, weights)
}

pub fn random_sample_with(d: &mut Draws, m: usize, weights: Weights) -> WeightedSample {
    let centre = d.range(-2.0, 4.0);
    let spread = d.range(0.2, 3.0);
    let x: Vec<f64> = (0..m).map(|_| centre + spread * d.normal()).collect();
    let y: Vec<f64> = (0..m).map(|_| if d.coin(0.1) { 0.0 } else { d.range(0.0, 5.0) * d.uniform() }).collect();
    WeightedSample::new(x, y, weights).expect("finite draws")
}

/// `n` divisions with normal ΔE and lognormal liabilities sharing one
/// common factor.
pub fn random_divisions(d: &mut Draws, n: usize, m: usize) -> DivisionalSample {
    let common: Vec<f64> = (0..m).map(|_| d.normal()).collect();
    let mut de = Vec::with_capacity(n);
    let mut li = Vec::with_capacity(n);
    for _ in 0..n {
        let mu = d.range(-0.5, 1.0);
        let sd = d.range(0.5, 2.0);
        let load = d.range(0.0, 0.8);
        let lmu = d.range(-0.5, 0.5);
        de.push(common.iter().map(|c| mu + sd * (load * c + (1.0 - load * load).sqrt() * d.normal())).collect());
        li.push((0..m).map(|_| (lmu + 0.5 * d.normal()).exp()).collect());
    }
    DivisionalSample::new(Weights::Uniform, de, li).expect("finite draws")
}

/// Outcome line for one criterion.
pub fn report(index: usize, name: &str, pass: bool, seconds: f64, detail: &str) {
    println!("criterion {index} {name}: {} ({seconds:.2}s) {detail}", if pass { "PASS" } else { "FAIL" });
}
