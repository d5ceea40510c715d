//! Chi-square distribution numerics and scalar helpers for the LRT screen:
//! central/noncentral CDFs, the upper-alpha quantile, the rate function
//! `kn`, and the noncentrality quadratic form.

use crate::error::{Error, Result};

/// Central or noncentral chi-square specification. `df = 0` is the
/// degenerate point mass at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSqSpec {
    pub df: usize,
    pub noncentrality: f64,
}

impl ChiSqSpec {
    pub fn central(df: usize) -> Self {
        ChiSqSpec { df, noncentrality: 0.0 }
    }
}

const GAMMA_TOL: f64 = 1e-14;
const GAMMA_MAX_ITER: usize = 1000;

/// Natural log of the gamma function (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    // g=5, n=6 coefficients.
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for (j, &c) in COEF.iter().enumerate() {
        ser += c / (x + 1.0 + j as f64);
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut sum = 1.0 / a;
    let mut term = sum;
    for n in 1..GAMMA_MAX_ITER {
        term *= x / (a + n as f64);
        sum += term;
        if term.abs() < GAMMA_TOL * sum.abs() {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    // Lentz's method for the upper incomplete gamma continued fraction.
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_TOL {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

/// Regularized lower incomplete gamma P(a, x). Series for x < a + 1,
/// continued fraction otherwise.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

fn central_chi2_cdf(x: f64, df: usize) -> f64 {
    if df == 0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    if x <= 0.0 {
        return 0.0;
    }
    reg_lower_gamma(df as f64 / 2.0, x / 2.0)
}

/// Chi-square CDF. The noncentral case sums the Poisson(delta/2) mixture of
/// central CDFs, truncated when the remaining Poisson mass drops below 1e-14.
pub fn chi2_cdf(x: f64, spec: ChiSqSpec) -> f64 {
    let delta = spec.noncentrality;
    if delta == 0.0 {
        return central_chi2_cdf(x, spec.df);
    }
    if x <= 0.0 {
        return if spec.df == 0 {
            // point mass at 0 mixed with positive-df components
            if x >= 0.0 { (-delta / 2.0).exp() } else { 0.0 }
        } else {
            0.0
        };
    }
    let half = delta / 2.0;
    let mut weight = (-half).exp();
    let mut cum_weight = 0.0;
    let mut cdf = 0.0;
    let mut m = 0usize;
    loop {
        cdf += weight * central_chi2_cdf(x, spec.df + 2 * m);
        cum_weight += weight;
        if 1.0 - cum_weight < 1e-14 || m > 100_000 {
            break;
        }
        m += 1;
        weight *= half / m as f64;
    }
    cdf.min(1.0)
}

fn chi2_pdf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = df as f64 / 2.0;
    (-x / 2.0 + (k - 1.0) * x.ln() - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Upper alpha-quantile of the central chi-square: the q with
/// P(X > q) = alpha. `df = 0` returns 0 so the full model always survives.
pub fn chi2_quantile(alpha: f64, df: usize) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    if df == 0 {
        return 0.0;
    }
    let target = 1.0 - alpha;
    // Bracket the root, then bisection refined by Newton.
    let mut lo = 0.0;
    let mut hi = df as f64 + 10.0;
    while central_chi2_cdf(hi, df) < target {
        hi *= 2.0;
    }
    let mut x = df as f64 * (1.0 - 2.0 / (9.0 * df as f64)
        + normal_quantile(target) * (2.0 / (9.0 * df as f64)).sqrt())
    .powi(3); // Wilson-Hilferty start
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let f = central_chi2_cdf(x, df) - target;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = chi2_pdf(x, df);
        let mut next = if d > 0.0 { x - f / d } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-13 * x.max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// Standard normal quantile (Acklam's rational approximation, refined by one
/// Halley step against the error function).
fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Rate function K_n(s) = s * ln(p/s) for 1 <= s <= p.
pub fn kn(s: usize, p: usize) -> f64 {
    assert!(s >= 1 && s <= p, "require 1 <= s <= p");
    s as f64 * (p as f64 / s as f64).ln()
}

/// Noncentrality quadratic form (t_g - t)' F (t_g - t) with F the total
/// Fisher information. `fisher` is row-major p x p.
pub fn noncentrality(theta_star: &[f64], theta_star_gamma: &[f64], fisher: &[Vec<f64>]) -> Result<f64> {
    let p = theta_star.len();
    if theta_star_gamma.len() != p || fisher.len() != p || fisher.iter().any(|r| r.len() != p) {
        return Err(Error::DimensionMismatch(format!(
            "theta len {}, theta_gamma len {}, fisher {}x?",
            p,
            theta_star_gamma.len(),
            fisher.len()
        )));
    }
    let diff: Vec<f64> = theta_star_gamma
        .iter()
        .zip(theta_star)
        .map(|(a, b)| a - b)
        .collect();
    let mut acc = 0.0;
    for i in 0..p {
        let mut row = 0.0;
        for j in 0..p {
            row += fisher[i][j] * diff[j];
        }
        acc += diff[i] * row;
    }
    Ok(acc)
}
