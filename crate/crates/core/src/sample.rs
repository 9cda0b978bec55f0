//! Weighted finite samples and exact tail statistics.

use crate::error::{check_finite, check_level, Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Scenario probabilities.
#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    /// 1/M on every scenario.
    Uniform,
    Explicit(Vec<f64>),
}

impl Weights {
    pub fn validate(&self, len: usize) -> Result<()> {
        if len == 0 {
            return Err(Error::EmptySample);
        }
        if let Weights::Explicit(w) = self {
            if w.len() != len {
                return Err(Error::LengthMismatch { what: "weights", expected: len, got: w.len() });
            }
            if let Some(i) = w.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::InvalidWeights {
                    reason: format!("weight {} at index {i} is not strictly positive", w[i]),
                });
            }
            let sum = kahan_sum(w.iter().copied());
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::InvalidWeights { reason: format!("weights sum to {sum}") });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, index: usize, len: usize) -> f64 {
        match self {
            Weights::Uniform => 1.0 / len as f64,
            Weights::Explicit(w) => w[index],
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Weights::Uniform)
    }

    pub fn to_vec(&self, len: usize) -> Vec<f64> {
        match self {
            Weights::Uniform => vec![1.0 / len as f64; len],
            Weights::Explicit(w) => w.clone(),
        }
    }
}

/// Neumaier-compensated sum.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Joint scenarios of (X, Y) with probability weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    x: Vec<f64>,
    y: Vec<f64>,
    weights: Weights,
}

impl WeightedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>, weights: Weights) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { what: "y", expected: x.len(), got: y.len() });
        }
        weights.validate(x.len())?;
        check_finite(&x, "x")?;
        check_finite(&y, "y")?;
        Ok(Self { x, y, weights })
    }

    pub fn uniform(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::new(x, y, Weights::Uniform)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights.get(index, self.x.len())
    }

    /// Fails unless every y is non-negative.
    pub fn require_nonnegative_y(&self) -> Result<()> {
        match self.y.iter().position(|&v| v < 0.0) {
            Some(index) => Err(Error::NegativeLiability { index, value: self.y[index] }),
            None => Ok(()),
        }
    }

    /// The position x + t·y.
    pub fn combine(&self, t: f64) -> Vec<f64> {
        if t == 0.0 {
            return self.x.clone();
        }
        self.x.iter().zip(&self.y).map(|(x, y)| x + t * y).collect()
    }

    /// Weighted expectation of f(x, y).
    pub fn expectation(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let n = self.len();
        kahan_sum((0..n).map(|i| self.weights.get(i, n) * f(self.x[i], self.y[i])))
    }

    /// Same scenarios with transformed values.
    pub fn map(&self, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let (x, y) = self.x.iter().zip(&self.y).map(|(&x, &y)| f(x, y)).unzip();
        Self::new(x, y, self.weights.clone())
    }
}

/// Index of the marginal scenario m* = min{m : c_m > alpha} (0-based, in sorted
/// order) and the cumulative weight strictly before it.
fn marginal_index(cum: impl Fn(usize) -> f64, len: usize, alpha: f64) -> (usize, f64) {
    // Binary search for the first m with cum(m) > alpha.
    let (mut lo, mut hi) = (0usize, len - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if cum(mid) > alpha {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let before = if lo == 0 { 0.0 } else { cum(lo - 1) };
    (lo, before)
}

/// For uniform weights the cumulative weight after j scenarios is exactly j/M,
/// so the first j with j/M > alpha is found without accumulating rounding.
fn uniform_marginal(len: usize, alpha: f64) -> usize {
    let n = len as f64;
    let mut j = (alpha * n).floor() as usize;
    while j > 0 && (j as f64) / n > alpha {
        j -= 1;
    }
    while (j as f64) / n <= alpha {
        j += 1;
    }
    (j - 1).min(len - 1)
}

/// Sorted view of one position with cumulative weights, for repeated tail
/// queries at several levels.
#[derive(Clone, Debug)]
pub struct TailProfile {
    order: Vec<usize>,
    sorted: Vec<f64>,
    /// Cumulative weights in sorted order; empty for uniform weights.
    cum: Vec<f64>,
    sorted_weights: Vec<f64>,
    /// Prefix sums of w·(−x) in sorted order.
    loss_prefix: Vec<f64>,
}

impl TailProfile {
    pub fn new(values: &[f64], weights: &Weights) -> Result<Self> {
        weights.validate(values.len())?;
        check_finite(values, "values")?;
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        // Stable on scenario index for ties.
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let sorted_weights: Vec<f64> = order.iter().map(|&i| weights.get(i, n)).collect();
        let cum = if weights.is_uniform() { Vec::new() } else { compensated_cumsum(&sorted_weights) };
        let loss_prefix =
            compensated_cumsum(&sorted.iter().zip(&sorted_weights).map(|(x, w)| -x * w).collect::<Vec<_>>());
        Ok(Self { order, sorted, cum, sorted_weights, loss_prefix })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Scenario indices in ascending order of value.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn marginal(&self, alpha: f64) -> (usize, f64) {
        let n = self.len();
        if self.cum.is_empty() {
            let m = uniform_marginal(n, alpha);
            (m, m as f64 / n as f64)
        } else {
            marginal_index(|i| self.cum[i], n, alpha)
        }
    }

    pub fn var(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        Ok(-self.sorted[self.marginal(alpha).0] + 0.0)
    }

    pub fn avar(&self, alpha: f64) -> Result<f64> {
        check_level(alpha)?;
        let (m, before) = self.marginal(alpha);
        let head = if m == 0 { 0.0 } else { self.loss_prefix[m - 1] };
        Ok((head + (alpha - before) * (-self.sorted[m])) / alpha)
    }

    /// Tail weights defining AV@R at `alpha`: pairs (scenario index, weight)
    /// whose weights sum to alpha.
    pub fn tail_weights(&self, alpha: f64) -> Result<Vec<(usize, f64)>> {
        check_level(alpha)?;
        let (m, before) = self.marginal(alpha);
        let mut out: Vec<(usize, f64)> = (0..m).map(|j| (self.order[j], self.sorted_weights[j])).collect();
        out.push((self.order[m], alpha - before));
        Ok(out)
    }
}

fn compensated_cumsum(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// Empirical V@R: −x_(m*) with m* = min{m : c_m > alpha}.
pub fn var_empirical(values: &[f64], weights: &Weights, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    weights.validate(values.len())?;
    check_finite(values, "values")?;
    if weights.is_uniform() {
        let m = uniform_marginal(values.len(), alpha);
        let mut buf = values.to_vec();
        let (_, nth, _) = buf.select_nth_unstable_by(m, |a, b| a.total_cmp(b));
        return Ok(-*nth + 0.0);
    }
    TailProfile::new(values, weights)?.var(alpha)
}

/// Empirical AV@R: exact tail average with fractional weight on the marginal
/// scenario.
pub fn avar_empirical(values: &[f64], weights: &Weights, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    weights.validate(values.len())?;
    check_finite(values, "values")?;
    if weights.is_uniform() {
        let n = values.len();
        let m = uniform_marginal(n, alpha);
        let mut buf = values.to_vec();
        let (head, nth, _) = buf.select_nth_unstable_by(m, |a, b| a.total_cmp(b));
        let w = 1.0 / n as f64;
        let head_loss = kahan_sum(head.iter().map(|x| -x * w));
        let before = m as f64 / n as f64;
        return Ok((head_loss + (alpha - before) * (-*nth)) / alpha);
    }
    TailProfile::new(values, weights)?.avar(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var_small_example() {
        let v = [-3.0, -1.0, 2.0, 5.0];
        assert_eq!(var_empirical(&v, &Weights::Uniform, 0.25).unwrap(), 1.0);
        // Just below a cumulative atom the first scenario binds.
        assert_eq!(var_empirical(&v, &Weights::Uniform, 0.2499).unwrap(), 3.0);
    }

    #[test]
    fn avar_small_example() {
        let v = [5.0, -1.0, 2.0, -3.0];
        assert_eq!(avar_empirical(&v, &Weights::Uniform, 0.5).unwrap(), 2.0);
        // Fractional marginal weight: (0.25*3 + 0.05*1)/0.3.
        let got = avar_empirical(&v, &Weights::Uniform, 0.3).unwrap();
        assert!((got - 0.8 / 0.3).abs() < 1e-15);
    }

    #[test]
    fn constant_sample() {
        let v = [4.5; 7];
        for a in [0.01, 0.3, 0.99] {
            assert_eq!(var_empirical(&v, &Weights::Uniform, a).unwrap(), -4.5);
            assert!((avar_empirical(&v, &Weights::Uniform, a).unwrap() + 4.5).abs() < 1e-14);
        }
    }

    #[test]
    fn two_state_example_atoms() {
        let (alpha, k) = (0.01, 37.0);
        let w = Weights::Explicit(vec![1.0 - alpha / 2.0, alpha / 2.0]);
        let e = [100.0 - k, k - 100.0];
        assert_eq!(var_empirical(&e, &w, alpha).unwrap(), k - 100.0);
        assert!(avar_empirical(&e, &w, alpha).unwrap().abs() < 1e-12);
    }

    #[test]
    fn weighted_matches_replicated_uniform() {
        // Weights 0.1, 0.2, 0.3, 0.4 are the same law as replicating 1,2,3,4 times.
        let v = [3.0, -2.0, 0.5, 1.5];
        let w = Weights::Explicit(vec![0.1, 0.2, 0.3, 0.4]);
        let mut rep = Vec::new();
        for (i, &x) in v.iter().enumerate() {
            rep.extend(std::iter::repeat_n(x, i + 1));
        }
        for a in [0.05, 0.15, 0.2, 0.35, 0.5, 0.72] {
            let wv = var_empirical(&v, &w, a).unwrap();
            let uv = var_empirical(&rep, &Weights::Uniform, a).unwrap();
            assert_eq!(wv, uv, "var at {a}");
            let wa = avar_empirical(&v, &w, a).unwrap();
            let ua = avar_empirical(&rep, &Weights::Uniform, a).unwrap();
            assert!((wa - ua).abs() < 1e-12, "avar at {a}");
        }
    }

    #[test]
    fn avar_is_integral_of_var() {
        let v = [-4.0, 0.3, 2.2, -1.7, 5.0, 0.0, -0.5];
        let p = [0.05, 0.2, 0.1, 0.15, 0.2, 0.1, 0.2];
        let w = Weights::Explicit(p.to_vec());
        let alpha = 0.42;
        // The V@R curve is a step function; integrate it exactly piece by piece.
        let prof = TailProfile::new(&v, &w).unwrap();
        let mut sorted_w: Vec<f64> = prof.order().iter().map(|&i| p[i]).collect();
        let mut c = 0.0;
        let mut integral = 0.0;
        for (j, wj) in sorted_w.drain(..).enumerate() {
            let lo = c;
            c += wj;
            let hi = c.min(alpha);
            if hi > lo {
                integral += (hi - lo) * -prof.sorted()[j];
            }
            if c >= alpha {
                break;
            }
        }
        let got = avar_empirical(&v, &w, alpha).unwrap();
        assert!((got - integral / alpha).abs() < 1e-12);
    }

    #[test]
    fn tail_profile_agrees_with_uniform_fast_path() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1009) as f64 - 500.0).collect();
        let prof = TailProfile::new(&v, &Weights::Uniform).unwrap();
        for a in [0.001, 0.005, 0.0125, 0.1, 0.5] {
            assert_eq!(prof.var(a).unwrap(), var_empirical(&v, &Weights::Uniform, a).unwrap());
            let d = prof.avar(a).unwrap() - avar_empirical(&v, &Weights::Uniform, a).unwrap();
            assert!(d.abs() < 1e-10);
            let tw = prof.tail_weights(a).unwrap();
            assert!((tw.iter().map(|t| t.1).sum::<f64>() - a).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_marginal_is_exact_at_cumulative_atoms() {
        // 50000/1e7 equals 0.005 exactly, which is not strictly above alpha.
        assert_eq!(uniform_marginal(10_000_000, 0.005), 50_000);
        assert_eq!(uniform_marginal(4, 0.25), 1);
        assert_eq!(uniform_marginal(4, 0.999), 3);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(var_empirical(&[], &Weights::Uniform, 0.1), Err(Error::EmptySample));
        assert!(matches!(var_empirical(&[1.0], &Weights::Uniform, 1.0), Err(Error::InvalidLevel { .. })));
        let bad = Weights::Explicit(vec![0.5, 0.6]);
        assert!(matches!(var_empirical(&[1.0, 2.0], &bad, 0.1), Err(Error::InvalidWeights { .. })));
        let zero = Weights::Explicit(vec![0.0, 1.0]);
        assert!(matches!(avar_empirical(&[1.0, 2.0], &zero, 0.1), Err(Error::InvalidWeights { .. })));
        assert!(matches!(var_empirical(&[1.0, f64::NAN], &Weights::Uniform, 0.1), Err(Error::NonFinite { .. })));
    }
}
