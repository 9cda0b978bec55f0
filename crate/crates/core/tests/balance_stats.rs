use recovery_risk::balance::{loss_probability, sample_scenarios, BalanceSheetModel};

const M: usize = 100_000;
const SEED: u64 = 11;

/// Kolmogorov–Smirnov distance between the sample and a continuous CDF.
fn ks(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0.0; values.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - mean) * (y - mean)).sum();
    let var: f64 = ra.iter().map(|x| (x - mean).powi(2)).sum();
    cov / var
}

#[test]
fn marginals_pass_ks_at_one_percent() {
    let critical = 1.628 / (M as f64).sqrt();
    for tau in [1.0, 3.0, 5.0] {
        let model = BalanceSheetModel::default().with_tail_shape(tau);
        let scen = sample_scenarios(&model, M, SEED).unwrap();
        let law = model.liability_law().unwrap();
        let d_assets = ks(&scen.assets, |a| model.asset_cdf(a));
        let d_liab = ks(&scen.liabilities, |l| law.cdf(l));
        assert!(d_assets < critical, "tau {tau}: assets KS {d_assets}");
        assert!(d_liab < critical, "tau {tau}: liabilities KS {d_liab}");
    }
}

#[test]
fn rank_correlation_follows_gaussian_copula() {
    for rho in [0.1, 0.5, 0.9] {
        let scen = sample_scenarios(&BalanceSheetModel::default().with_correlation(rho), M, SEED).unwrap();
        let got = spearman(&scen.assets, &scen.liabilities);
        let want = 6.0 / std::f64::consts::PI * (rho / 2.0).asin();
        assert!((got - want).abs() < 0.02, "rho {rho}: {got} vs {want}");
    }
}

#[test]
fn default_loss_probability_near_half() {
    let p = loss_probability(&sample_scenarios(&BalanceSheetModel::default(), M, SEED).unwrap().sample());
    assert!((p - 0.5).abs() <= 0.05, "{p}");
}

#[test]
fn loss_probability_monotone_in_correlation_and_tail() {
    let prob = |rho: f64, tau: f64| {
        let model = BalanceSheetModel::default().with_correlation(rho).with_tail_shape(tau);
        loss_probability(&sample_scenarios(&model, M, SEED).unwrap().sample())
    };
    let by_rho: Vec<f64> = (1..=9).map(|i| prob(i as f64 / 10.0, 3.0)).collect();
    assert!(by_rho.windows(2).all(|w| w[1] <= w[0] + 0.01), "{by_rho:?}");
    let by_tau: Vec<f64> = (1..=5).map(|t| prob(0.5, t as f64)).collect();
    assert!(by_tau.windows(2).all(|w| w[1] >= w[0] - 0.01), "{by_tau:?}");
}
