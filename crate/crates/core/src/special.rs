//! Normal and gamma special functions.
//!
//! The normal CDF is built on `libm::erfc`; the quantile uses Acklam's
//! rational approximation followed by one Halley step. The regularized
//! incomplete gamma function uses the power series below `a + 1` and a
//! Lentz continued fraction above it.

use crate::error::{check_positive, Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `1 - normal_cdf(z)` without cancellation.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter {
            name: "u",
            reason: format!("normal quantile needs u in (0, 1), got {u}"),
        });
    }
    Ok(quantile_unchecked(u))
}

pub(crate) fn quantile_unchecked(u: f64) -> f64 {
    if u > 0.5 {
        // Work on the smaller tail; 1 - u is exact for u > 0.5.
        return -lower_tail_quantile(1.0 - u);
    }
    lower_tail_quantile(u)
}

fn lower_tail_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // Halley refinement against the erfc-based CDF.
    let e = normal_cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

pub fn ln_gamma(a: f64) -> f64 {
    libm::lgamma(a)
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..100_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * prefactor(a, x)
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    prefactor(a, x) * h
}

fn check_gamma_params(shape: f64, rate: f64) -> Result<()> {
    check_positive(shape, "shape")?;
    check_positive(rate, "rate")
}

pub fn gamma_cdf(x: f64, shape: f64, rate: f64) -> Result<f64> {
    check_gamma_params(shape, rate)?;
    if x.is_nan() {
        return Err(Error::InvalidParameter { name: "x", reason: "NaN".into() });
    }
    Ok(gamma_p(shape, rate * x.max(0.0)))
}

pub fn gamma_sf(x: f64, shape: f64, rate: f64) -> Result<f64> {
    check_gamma_params(shape, rate)?;
    if x.is_nan() {
        return Err(Error::InvalidParameter { name: "x", reason: "NaN".into() });
    }
    Ok(gamma_q(shape, rate * x.max(0.0)))
}

pub fn gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 && shape == 1.0 { rate } else { 0.0 };
    }
    let y = rate * x;
    rate * ((shape - 1.0) * y.ln() - y - ln_gamma(shape)).exp()
}

/// Quantile of the gamma law: x with F(x) = u.
pub fn gamma_quantile(u: f64, shape: f64, rate: f64) -> Result<f64> {
    check_gamma_params(shape, rate)?;
    check_open_unit(u)?;
    Ok(if u <= 0.5 { invert_std_gamma(shape, u, false) / rate } else { invert_std_gamma(shape, 1.0 - u, true) / rate })
}

/// Quantile from the survival side: x with 1 - F(x) = s.
pub fn gamma_quantile_upper(s: f64, shape: f64, rate: f64) -> Result<f64> {
    check_gamma_params(shape, rate)?;
    check_open_unit(s)?;
    Ok(if s <= 0.5 { invert_std_gamma(shape, s, true) / rate } else { invert_std_gamma(shape, 1.0 - s, false) / rate })
}

fn check_open_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "u", reason: format!("must be in (0, 1), got {u}") })
    }
}

/// Solves P(a, y) = t (or Q(a, y) = t when `upper`) for the unit-rate gamma.
/// Newton steps are kept inside a shrinking bracket and fall back to bisection.
fn invert_std_gamma(a: f64, t: f64, upper: bool) -> f64 {
    // g(y) is increasing in y in both cases.
    let g = |y: f64| if upper { t - gamma_q(a, y) } else { gamma_p(a, y) - t };
    let mut lo = 0.0_f64;
    let mut hi = initial_guess(a, t, upper).max(f64::MIN_POSITIVE);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut y = hi;
    for _ in 0..400 {
        let gy = g(y);
        if gy == 0.0 {
            return y;
        }
        if gy < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let dens = (-(y) + (a - 1.0) * y.ln() - ln_gamma(a)).exp();
        let mut next = if dens > 0.0 && dens.is_finite() { y - gy / dens } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-15 * y.abs() || hi - lo <= 1e-15 * hi {
            return next;
        }
        y = next;
    }
    y
}

fn initial_guess(a: f64, t: f64, upper: bool) -> f64 {
    // Wilson-Hilferty.
    let z = if upper { -quantile_unchecked(t) } else { quantile_unchecked(t) };
    let c = 1.0 / (9.0 * a);
    let w = 1.0 - c + z * c.sqrt();
    let guess = a * w * w * w;
    if guess > 0.0 && guess.is_finite() {
        guess
    } else {
        // Small-argument expansion P(a, y) ~ y^a / Gamma(a + 1).
        let p = if upper { 1.0 - t } else { t };
        (p * (ln_gamma(a + 1.0)).exp()).powf(1.0 / a).max(1e-300)
    }
}
