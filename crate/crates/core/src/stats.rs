//! Empirical distribution helpers: CCDFs, the one-sample Kolmogorov–Smirnov
//! test and a sign test for symmetry.

/// Fraction of `sorted` strictly greater than each threshold.
///
/// `sorted` must be ascending.
pub fn empirical_ccdf(sorted: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let n = sorted.len() as f64;
    thresholds
        .iter()
        .map(|&t| {
            if sorted.is_empty() {
                return 0.0;
            }
            let at_or_below = sorted.partition_point(|&x| x <= t);
            (sorted.len() - at_or_below) as f64 / n
        })
        .collect()
}

/// Outcome of a one-sample Kolmogorov–Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsOutcome {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// KS statistic `sup |F_n - F|` of the samples against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let upper = (i as f64 + 1.0) / n - f;
        let lower = f - i as f64 / n;
        acc.max(upper).max(lower)
    })
}

/// Asymptotic Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = sign * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsOutcome {
    let n = samples.len();
    let d = ks_statistic(samples, cdf);
    let sqrt_n = (n as f64).sqrt();
    // Stephens' finite-sample correction.
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    KsOutcome {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
        n,
    }
}

/// Two-sided sign test of the null "positive and negative values are equally likely".
///
/// Uses the normal approximation to the binomial with continuity correction; zeros are dropped.
pub fn sign_test_p_value(samples: &[f64]) -> f64 {
    let pos = samples.iter().filter(|&&x| x > 0.0).count() as f64;
    let neg = samples.iter().filter(|&&x| x < 0.0).count() as f64;
    let n = pos + neg;
    if n == 0.0 {
        return 1.0;
    }
    let z = ((pos - n / 2.0).abs() - 0.5).max(0.0) / (n / 4.0).sqrt();
    erfc(z / std::f64::consts::SQRT_2)
}

/// Complementary error function (W. J. Cody style rational fit, |error| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87
                                        + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Half-width of a normal-approximation confidence interval for a proportion.
pub fn proportion_half_width(p: f64, n: usize, z: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    z * (p * (1.0 - p) / n as f64).sqrt()
}
