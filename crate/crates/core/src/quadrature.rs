//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Finite integrals are bisected on the interval with the largest error
//! estimate until `error <= max(abs, rel * |value|)`. Semi-infinite ranges are
//! mapped onto `[0, 1)` with `x = a + s * t / (1 - t)`, where `s` is a
//! caller-supplied length scale that keeps the bulk of the integrand away from
//! `t = 1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rule for adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    /// Tolerance used for probabilities.
    pub const PROBABILITY: Tolerance = Tolerance {
        abs: 1e-10,
        rel: 1e-8,
        max_intervals: 4000,
    };

    /// Purely relative tolerance, for quantities whose natural scale is far from 1.
    pub const fn relative(rel: f64) -> Tolerance {
        Tolerance {
            abs: 0.0,
            rel,
            max_intervals: 4000,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::PROBABILITY
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
            intervals: self.intervals + rhs.intervals,
        }
    }
}

impl Estimate {
    const ZERO: Estimate = Estimate {
        value: 0.0,
        error: 0.0,
        intervals: 0,
    };
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::param(
            "bounds",
            format!("finite bounds required, got [{a}, {b}]"),
        ));
    }
    if a == b {
        return Ok(Estimate::ZERO);
    }
    if a > b {
        let e = integrate(f, b, a, tol)?;
        return Ok(Estimate {
            value: -e.value,
            ..e
        });
    }
    let (value, error) = kronrod15(&f, a, b);
    if !value.is_finite() {
        return Err(Error::Numerical {
            what: "quadrature",
            diagnostics: format!("non-finite integrand on [{a}, {b}]"),
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut count = 1usize;
    while total_err > tol.target(total) {
        if count >= tol.max_intervals {
            return Err(Error::Numerical {
                what: "quadrature",
                diagnostics: format!(
                    "no convergence on [{a}, {b}] after {count} intervals: value {total:e}, error {total_err:e}"
                ),
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision; keep its contribution as is.
            total_err -= worst.error;
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            if heap.iter().all(|s| s.error == 0.0) {
                break;
            }
            continue;
        }
        let (lv, le) = kronrod15(&f, worst.a, mid);
        let (rv, re) = kronrod15(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
        count += 1;
    }
    // Re-sum to shed the drift accumulated by the running updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Estimate {
        value,
        error,
        intervals: heap.len(),
    })
}

/// Integrates over consecutive pieces `[breaks[0], breaks[1]], [breaks[1], breaks[2]], ...`.
///
/// Breakpoints should sit on every discontinuity of the integrand.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    breaks.windows(2).try_fold(Estimate::ZERO, |acc, w| {
        Ok(acc + integrate(&f, w[0], w[1], tol)?)
    })
}

/// Integrates `f` over `[a, ∞)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::param("scale", format!("must be > 0, got {scale}")));
    }
    let mapped = |t: f64| {
        let one_minus = 1.0 - t;
        let x = a + scale * t / one_minus;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (one_minus * one_minus)
        }
    };
    integrate(mapped, 0.0, 1.0, tol)
}

/// Bisection root search for a monotone function on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical {
            what: "root bracketing",
            diagnostics: format!("f({lo}) = {flo:e} and f({hi}) = {fhi:e} share a sign"),
        });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol * mid.abs().max(f64::MIN_POSITIVE) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let e = integrate(
            |x| x.powi(5) - 3.0 * x * x,
            -1.0,
            2.0,
            Tolerance::PROBABILITY,
        )
        .unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((e.value - exact).abs() < 1e-13);
        assert_eq!(e.intervals, 1);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let f = |x: f64| x.sin();
        let fwd = integrate(f, 0.0, 2.0, Tolerance::PROBABILITY)
            .unwrap()
            .value;
        let rev = integrate(f, 2.0, 0.0, Tolerance::PROBABILITY)
            .unwrap()
            .value;
        assert_eq!(fwd, -rev);
    }

    #[test]
    fn peaked_integrand_converges() {
        let f = |x: f64| 1.0 / (1e-4 + x * x);
        let e = integrate(f, -1.0, 1.0, Tolerance::relative(1e-10)).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((e.value / exact - 1.0).abs() < 1e-9, "{}", e.value);
    }

    #[test]
    fn semi_infinite_exponential_and_power_law() {
        let e = integrate_to_infinity(
            |x| 0.3 * (-0.3 * x).exp(),
            2.0,
            1.0 / 0.3,
            Tolerance::relative(1e-11),
        )
        .unwrap();
        assert!((e.value - (-0.6f64).exp()).abs() < 1e-12);
        let p =
            integrate_to_infinity(|x| x.powi(-4), 10.0, 10.0, Tolerance::relative(1e-11)).unwrap();
        assert!((p.value / (1.0 / (3.0 * 1000.0)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pieces_handle_jumps() {
        let f = |x: f64| if x < 1.0 { 1.0 } else { 3.0 };
        let e = integrate_pieces(f, &[0.0, 1.0, 2.0], Tolerance::PROBABILITY).unwrap();
        assert!((e.value - 4.0).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|_| f64::NAN, 0.0, 1.0, Tolerance::PROBABILITY).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-12).is_err());
    }
}
