//! Embedded oracle checks printed as a pass/fail table.

use recovery_risk::frontier::{minimax_check, PortfolioProblem};
use recovery_risk::measures::{
    extremal_recovery_pair, reavar, recovery_probability_curve, revar, DEFAULT_MAGNITUDE_CAP,
};
use recovery_risk::rng::SplitMix64;
use recovery_risk::stress::TwoStateCase;
use recovery_risk::{avar_empirical, var_empirical, RecoveryFunction, Weights};

struct Uniforms {
    rng: SplitMix64,
    k: u64,
}

impl Uniforms {
    fn new(seed: u64) -> Self {
        Self { rng: SplitMix64::new(seed), k: 0 }
    }

    fn next(&mut self) -> f64 {
        self.k += 1;
        self.rng.uniform_at(self.k)
    }
}

fn two_state(n: usize) -> (usize, usize) {
    let mut u = Uniforms::new(1);
    let mut ok = 0;
    for _ in 0..n {
        let alpha = 0.001 + 0.1 * u.next();
        let beta = alpha * (0.01 + 0.98 * u.next());
        let case = TwoStateCase::new(100.0 * u.next(), alpha, beta, 0.01 + 0.98 * u.next()).expect("valid draw");
        let cf = case.measures().expect("valid case");
        let s = case.sample();
        let g = case.gamma();
        let w = s.weights();
        let shifted = s.combine(1.0 - case.r);
        let checks = [
            (var_empirical(s.x(), w, alpha), cf.var_alpha),
            (avar_empirical(s.x(), w, alpha), cf.avar_alpha),
            (var_empirical(&shifted, w, beta), cf.var_beta_recovery),
            (avar_empirical(&shifted, w, beta), cf.avar_beta_recovery),
            (revar(&s, &g).map(|e| e.value), cf.revar),
            (reavar(&s, &g).map(|e| e.value), cf.reavar),
        ];
        if checks.iter().all(|(got, want)| matches!(got, Ok(v) if (v - want).abs() <= 1e-9)) {
            ok += 1;
        }
    }
    (ok, n)
}

fn extremal_pairs() -> (usize, usize) {
    let (mut ok, mut total) = (0, 0);
    for alpha in [0.005, 0.01, 0.025] {
        for j in 1..50 {
            let p = alpha * j as f64 / 50.0;
            total += 1;
            let Ok(s) = extremal_recovery_pair(alpha, p, DEFAULT_MAGNITUDE_CAP) else { continue };
            let diff: Vec<f64> = s.x().iter().zip(s.y()).map(|(a, l)| a - l).collect();
            let avar_ok = matches!(avar_empirical(&diff, s.weights(), alpha), Ok(v) if v.abs() <= 1e-12);
            let curve_ok = match recovery_probability_curve(&s, &[0.1, 0.5, 0.9], false) {
                Ok(points) => points.iter().all(|pt| (pt.probability - (1.0 - p)).abs() <= 1e-12),
                Err(_) => false,
            };
            if avar_ok && curve_ok {
                ok += 1;
            }
        }
    }
    (ok, total)
}

fn minimax(n: usize) -> (usize, usize, f64) {
    let mut u = Uniforms::new(3);
    let (mut ok, mut worst) = (0, 0.0f64);
    for _ in 0..n {
        let m = 50;
        let returns: Vec<Vec<f64>> =
            (0..2).map(|a| (0..m).map(|_| 0.01 * a as f64 + 0.2 * (u.next() - 0.5)).collect()).collect();
        let z: Vec<f64> = (0..m).map(|_| 0.1 * u.next()).collect();
        let mut levels = [0.01 + 0.05 * u.next(), 0.0, 0.0];
        levels[1] = levels[0] + 0.05 * u.next() + 1e-3;
        levels[2] = levels[1] + 0.05 * u.next() + 1e-3;
        let r1 = 0.1 + 0.4 * u.next();
        let r2 = r1 + 0.05 + 0.4 * u.next();
        let gamma = RecoveryFunction::new(vec![r1, r2.min(0.99)], levels.to_vec()).expect("increasing draw");
        let problem = PortfolioProblem::new(Weights::Uniform, returns, z, 1.0, None, gamma).expect("valid problem");
        let x0 = u.next();
        let rep = minimax_check(&problem, &[x0, 1.0 - x0]).expect("valid weights");
        worst = worst.max(rep.gap.abs());
        if rep.holds {
            ok += 1;
        }
    }
    (ok, n, worst)
}

/// Returns true when every check passed.
pub fn run() -> bool {
    let mut all = true;
    let mut line = |name: &str, ok: usize, total: usize, extra: String| {
        let pass = ok == total;
        all &= pass;
        println!("{:<28} {:>5}/{:<5} {}  {}", name, ok, total, if pass { "PASS" } else { "FAIL" }, extra);
    };
    let (ok, n) = two_state(1000);
    line("two-state closed forms", ok, n, String::new());
    let (ok, n) = extremal_pairs();
    line("extremal pair construction", ok, n, String::new());
    let (ok, n, worst) = minimax(100);
    line("minimax gap <= 1e-6", ok, n, format!("worst gap {worst:.3e}"));
    all
}
