use proptest::prelude::*;

use recovery_risk::allocation::{euler_allocation, DivisionalSample};
use recovery_risk::calibration::{calibrate_gamma, discretize_gamma, CalibrationInput};
use recovery_risk::frontier::{solve_portfolio, LpFormulation, LpStatus, PortfolioProblem};
use recovery_risk::{
    avar_empirical, reavar, revar, var_empirical, LevelFunction, RecoveryFunction, TailProfile, WeightedSample, Weights,
};

const TOL: f64 = 1e-9;

fn gamma() -> impl Strategy<Value = RecoveryFunction> {
    (0usize..=4)
        .prop_flat_map(|n| (prop::collection::vec(0.02f64..0.98, n), prop::collection::vec(0.005f64..0.3, n + 1)))
        .prop_filter_map("distinct breakpoints and levels", |(mut b, mut l)| {
            b.sort_by(f64::total_cmp);
            l.sort_by(f64::total_cmp);
            RecoveryFunction::new(b, l).ok()
        })
}

fn sample() -> impl Strategy<Value = WeightedSample> {
    prop::collection::vec((-10.0f64..10.0, 0.0f64..10.0), 1..120).prop_map(|rows| {
        let (x, y) = rows.into_iter().unzip();
        WeightedSample::uniform(x, y).unwrap()
    })
}

fn weighted_sample() -> impl Strategy<Value = WeightedSample> {
    prop::collection::vec((-10.0f64..10.0, 0.0f64..10.0, 0.05f64..1.0), 1..120).prop_map(|rows| {
        let total: f64 = rows.iter().map(|r| r.2).sum();
        let x = rows.iter().map(|r| r.0).collect();
        let y = rows.iter().map(|r| r.1).collect();
        let w = rows.iter().map(|r| r.2 / total).collect();
        WeightedSample::new(x, y, Weights::Explicit(w)).unwrap()
    })
}

fn with_x(s: &WeightedSample, x: Vec<f64>) -> WeightedSample {
    WeightedSample::new(x, s.y().to_vec(), s.weights().clone()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn avar_dominates_var(s in weighted_sample(), alpha in 0.001f64..0.5) {
        let v = var_empirical(s.x(), s.weights(), alpha).unwrap();
        let a = avar_empirical(s.x(), s.weights(), alpha).unwrap();
        prop_assert!(a >= v - TOL);
    }

    #[test]
    fn tail_weights_carry_alpha(s in weighted_sample(), alpha in 0.001f64..0.999) {
        let tail = TailProfile::new(s.x(), s.weights()).unwrap().tail_weights(alpha).unwrap();
        let total: f64 = tail.iter().map(|t| t.1).sum();
        prop_assert!((total - alpha).abs() < 1e-12);
        prop_assert!(tail.iter().all(|t| t.1 > 0.0));
    }

    #[test]
    fn cash_invariance(s in weighted_sample(), g in gamma(), c in -20.0f64..20.0) {
        let shifted = with_x(&s, s.x().iter().map(|v| v + c).collect());
        prop_assert!((revar(&shifted, &g).unwrap().value - revar(&s, &g).unwrap().value + c).abs() < TOL);
        prop_assert!((reavar(&shifted, &g).unwrap().value - reavar(&s, &g).unwrap().value + c).abs() < TOL);
    }

    #[test]
    fn positive_homogeneity(s in sample(), g in gamma(), a in 0.0f64..10.0) {
        let scaled = s.map(|x, y| (a * x, a * y)).unwrap();
        for (lhs, rhs) in [
            (revar(&scaled, &g).unwrap().value, revar(&s, &g).unwrap().value),
            (reavar(&scaled, &g).unwrap().value, reavar(&s, &g).unwrap().value),
        ] {
            prop_assert!((lhs - a * rhs).abs() < TOL * (1.0 + (a * rhs).abs()));
        }
    }

    #[test]
    fn more_liability_recovery_lowers_risk(s in sample(), g in gamma(), bump in 0.0f64..5.0) {
        let more = s.map(|x, y| (x, y + bump)).unwrap();
        prop_assert!(revar(&more, &g).unwrap().value <= revar(&s, &g).unwrap().value + TOL);
        prop_assert!(reavar(&more, &g).unwrap().value <= reavar(&s, &g).unwrap().value + TOL);
    }

    #[test]
    fn recovery_measures_dominate_plain_ones(s in weighted_sample(), g in gamma()) {
        // γ ≤ γ(1), so the λ = 1 piece reproduces V@R at the top level
        let top = *g.levels().last().unwrap();
        prop_assert!(revar(&s, &g).unwrap().value >= var_empirical(s.x(), s.weights(), top).unwrap() - TOL);
        prop_assert!(reavar(&s, &g).unwrap().value >= revar(&s, &g).unwrap().value - TOL);
    }

    #[test]
    fn constant_gamma_is_var(s in weighted_sample(), alpha in 0.001f64..0.5) {
        let g = RecoveryFunction::constant(alpha).unwrap();
        prop_assert_eq!(revar(&s, &g).unwrap().value, var_empirical(s.x(), s.weights(), alpha).unwrap());
        prop_assert_eq!(reavar(&s, &g).unwrap().value, avar_empirical(s.x(), s.weights(), alpha).unwrap());
    }

    #[test]
    fn reavar_subadditive(
        rows in prop::collection::vec((-10.0f64..10.0, 0.0f64..10.0, -10.0f64..10.0, 0.0f64..10.0), 1..100),
        g in gamma(),
    ) {
        let s1 = WeightedSample::uniform(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect()).unwrap();
        let s2 = WeightedSample::uniform(rows.iter().map(|r| r.2).collect(), rows.iter().map(|r| r.3).collect()).unwrap();
        let sum = WeightedSample::uniform(
            rows.iter().map(|r| r.0 + r.2).collect(),
            rows.iter().map(|r| r.1 + r.3).collect(),
        ).unwrap();
        let lhs = reavar(&sum, &g).unwrap().value;
        prop_assert!(lhs <= reavar(&s1, &g).unwrap().value + reavar(&s2, &g).unwrap().value + TOL);
    }

    #[test]
    fn binding_piece_attains_the_maximum(s in weighted_sample(), g in gamma()) {
        let ev = reavar(&s, &g).unwrap();
        prop_assert_eq!(ev.terms.len(), g.n() + 1);
        prop_assert_eq!(ev.value, ev.terms[ev.binding_index]);
        prop_assert!(ev.terms.iter().all(|&t| t <= ev.value));
    }

    #[test]
    fn discretized_calibration_stays_below(
        mu_de in -1.0f64..1.0, sd_de in 0.5f64..2.0, mu_l in 0.0f64..10.0, sd_l in 0.5f64..3.0,
        alpha in 0.001f64..0.05, n in 1usize..20,
    ) {
        let input = CalibrationInput::new(mu_de, sd_de, mu_l, sd_l, alpha).unwrap();
        let smooth = calibrate_gamma(&input).unwrap();
        let disc = discretize_gamma(&smooth, n).unwrap();
        prop_assert!(disc.levels().windows(2).all(|w| w[0] < w[1]));
        for j in 0..=200 {
            let l = j as f64 / 200.0;
            prop_assert!(disc.level(l) <= smooth.level(l) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn euler_capital_is_homogeneous(
        rows in prop::collection::vec((-5.0f64..5.0, 0.0f64..5.0, -5.0f64..5.0, 0.0f64..5.0), 20..80),
        g in gamma(),
        a in 0.1f64..5.0,
    ) {
        let de = vec![rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.2).collect()];
        let li = vec![rows.iter().map(|r| r.1).collect(), rows.iter().map(|r| r.3).collect()];
        let s = DivisionalSample::new(Weights::Uniform, de, li).unwrap();
        if let (Ok(base), Ok(big)) = (euler_allocation(&s, &g), euler_allocation(&s.scaled(a).unwrap(), &g)) {
            let total: f64 = base.capital.iter().sum();
            prop_assert!((total - base.aggregate_reavar).abs() < TOL * (1.0 + total.abs()));
            for (k, kb) in base.capital.iter().zip(&big.capital) {
                prop_assert!((kb - a * k).abs() < 1e-8 * (1.0 + (a * k).abs()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lp_optimum_beats_feasible_portfolios(
        rows in prop::collection::vec((-0.1f64..0.1, -0.1f64..0.12, 0.0f64..0.1), 10..30),
        g in gamma(),
        probes in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let r0 = rows.iter().map(|r| r.0).collect();
        let r1 = rows.iter().map(|r| r.1).collect();
        let z = rows.iter().map(|r| r.2).collect();
        let pb = PortfolioProblem::new(Weights::Uniform, vec![r0, r1], z, 1.0, None, g.clone()).unwrap();
        let sol = solve_portfolio(&pb, LpFormulation::PerPieceThreshold).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!((sol.reavar - sol.upsilon).abs() < 1e-7);
        for x0 in probes {
            let v = reavar(&pb.position(&[x0, 1.0 - x0]).unwrap(), &g).unwrap().value;
            prop_assert!(sol.upsilon <= v + 1e-9);
        }
    }
}
