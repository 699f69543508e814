//! Binomial probabilities and the lower quantile `min { k : CDF(k) >= p }`.
//!
//! Point probabilities use Loader's saddle-point expansion (Stirling error
//! plus deviance terms), which keeps full relative precision in both tails
//! without forming `C(n, k)` explicitly. The CDF is accumulated from the
//! first term that can contribute to a double-precision sum, so the work is
//! proportional to the standard deviation rather than to `n`.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum BinomialError {
    #[error("probability {0} is outside the valid range")]
    InvalidProbability(f64),
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln(n!) - ((n + 1/2) ln n - n + ln sqrt(2 pi))`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return libm::lgamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x / np) + np - x`, evaluated by series near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// `ln f(k; n, rho)`, `-inf` outside the support.
pub fn ln_pmf(k: u64, n: u64, rho: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let q = 1.0 - rho;
    if rho == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let (x, nf) = (k as f64, n as f64);
    if k == 0 {
        if n == 0 {
            return 0.0;
        }
        return if rho < 0.1 {
            -bd0(nf, nf * q) - nf * rho
        } else {
            nf * q.ln()
        };
    }
    if k == n {
        return if q < 0.1 {
            -bd0(nf, nf * rho) - nf * q
        } else {
            nf * rho.ln()
        };
    }
    let lc = stirlerr(nf) - stirlerr(x) - stirlerr(nf - x) - bd0(x, nf * rho) - bd0(nf - x, nf * q);
    let lf = LN_2PI + x.ln() + (-x / nf).ln_1p();
    lc - 0.5 * lf
}

pub fn pmf(k: u64, n: u64, rho: f64) -> f64 {
    ln_pmf(k, n, rho).exp()
}

fn check(rho: f64) -> Result<(), BinomialError> {
    if !(0.0..=1.0).contains(&rho) || rho.is_nan() {
        return Err(BinomialError::InvalidProbability(rho));
    }
    Ok(())
}

/// Compensated running sum.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn mode(n: u64, rho: f64) -> u64 {
    (((n as f64 + 1.0) * rho).floor() as u64).min(n)
}

/// First index worth summing: below it the whole lower tail is smaller than
/// `1e-25`. The pmf is log-concave, so the tail below `k` is bounded by a
/// geometric series with ratio `r(k) = k q / ((n - k + 1) rho)`.
fn summation_start(n: u64, rho: f64) -> u64 {
    const LN_CUTOFF: f64 = -60.0;
    let peak = mode(n, rho);
    if peak == 0 || ln_pmf(0, n, rho) >= LN_CUTOFF {
        return 0;
    }
    let (mut lo, mut hi) = (0u64, peak);
    // invariant: ln_pmf(lo) < cutoff <= ln_pmf(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ln_pmf(mid, n, rho) < LN_CUTOFF {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ratio = lo as f64 * (1.0 - rho) / ((n - lo + 1) as f64 * rho);
    if ratio >= 1.0 {
        return 0;
    }
    let tail = ln_pmf(lo, n, rho).exp() / (1.0 - ratio);
    if tail < 1e-25 {
        lo
    } else {
        0
    }
}

/// `P(X <= k)` for `X ~ Binomial(n, rho)`.
pub fn cdf(k: u64, n: u64, rho: f64) -> Result<f64, BinomialError> {
    check(rho)?;
    if k >= n {
        return Ok(1.0);
    }
    let mut acc = Neumaier::default();
    for j in summation_start(n, rho)..=k {
        acc.add(pmf(j, n, rho));
    }
    Ok(acc.value().min(1.0))
}

/// Smallest `k` in `[0, n]` with `P(X <= k) >= p`.
pub fn binomial_quantile(n: u64, rho: f64, p: f64) -> Result<u64, BinomialError> {
    check(rho)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(BinomialError::InvalidProbability(p));
    }
    if n == 0 || rho == 0.0 {
        return Ok(0);
    }
    if rho == 1.0 {
        return Ok(n);
    }
    let mut acc = Neumaier::default();
    for k in summation_start(n, rho)..n {
        acc.add(pmf(k, n, rho));
        if acc.value() >= p {
            return Ok(k);
        }
    }
    Ok(n)
}
