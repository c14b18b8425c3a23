//! Brute-force reference values built only from midpoint sums.
//!
//! Closed forms are transcribed here independently of the library; the only
//! shared piece is `first_order_density`, which is checked separately.
#![allow(dead_code)]

use v2v_sf::hardcore_process::first_order_density;

/// Experiment configurations: (lambda_p, hard-core distance, alpha).
pub const EXPERIMENT_CONFIGS: [(f64, f64, f64); 4] = [
    (0.1, 150.0, 3.0),
    (0.1, 150.0, 4.0),
    (0.2, 50.0, 4.0),
    (0.1, 100.0, 4.0),
];

/// Midpoint sum of `f` over `[a, b]` with `n` cells, Richardson-extrapolated against `2n` cells.
pub fn midpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let sum = |m: usize| {
        let h = (b - a) / m as f64;
        (0..m).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    };
    let coarse = sum(n);
    let fine = sum(2 * n);
    (4.0 * fine - coarse) / 3.0
}

/// `∫_a^∞ f` through `x = a / u`, `u ∈ (0, 1]`.
pub fn midpoint_tail<F: Fn(f64) -> f64>(f: F, a: f64, n: usize) -> f64 {
    midpoint(|u| f(a / u) * a / (u * u), 0.0, 1.0, n)
}

pub fn product_density(lambda_p: f64, d: f64, r: f64) -> f64 {
    let l = first_order_density(lambda_p, d);
    if r < d {
        0.0
    } else if r < 2.0 * d {
        2.0 * l / r - 2.0 * (1.0 - (-lambda_p * (2.0 * d + r)).exp()) / (r * (2.0 * d + r))
    } else {
        l * l
    }
}

pub fn tail_rate(l: f64, d: f64) -> f64 {
    (2.0 / ((l * d - 2.0).powi(2) - 2.0)).ln() / (2.0 * d)
}

pub fn offset_pdf_semicircle(l: f64, d: f64, x: f64) -> f64 {
    let lr = tail_rate(l, d);
    if x <= d {
        l
    } else if x <= 2.0 * d {
        l * (1.0 - l * (x - d))
    } else {
        lr * (-lr * x).exp()
    }
}

pub fn offset_pdf_omni(l: f64, d: f64, x: f64) -> f64 {
    let lr = tail_rate(l, d);
    if x <= d / 2.0 {
        2.0 * l
    } else if x <= 1.5 * d {
        let a = 2.0 * l * (1.0 + l * d / 2.0 - l * x) / (1.0 - l * d);
        a * (1.5 * l * d - 3.0 * l * l * d * d / 8.0 + (-2.0 * lr * d).exp()
            - (l + l * l * d / 2.0) * x
            + l * l * x * x / 2.0)
    } else {
        2.0 * lr * (-lr * (2.0 * x + d)).exp() / (1.0 - l * d)
    }
}

pub fn i1(lambda_p: f64, d: f64, alpha: f64) -> f64 {
    let l = first_order_density(lambda_p, d);
    let n = 20_000;
    let body = midpoint(
        |r| product_density(lambda_p, d, r) * r.powf(-alpha),
        d,
        2.0 * d,
        n,
    );
    let tail = midpoint_tail(|r| l * l * r.powf(-alpha), 2.0 * d, n);
    (body + tail) / l
}

pub fn i2(lambda_p: f64, d: f64, w: f64, alpha: f64) -> f64 {
    let l = first_order_density(lambda_p, d);
    let n = 600;
    let inner = |r1: f64| {
        let k = |r: f64| ((r1 + r).powi(2) + w * w).powf(-0.5 * alpha);
        midpoint(|r| product_density(lambda_p, d, r) * k(r), d, 2.0 * d, n)
            + midpoint_tail(|r| l * l * k(r), 2.0 * d, n)
    };
    let f = |r1: f64| offset_pdf_semicircle(l, d, r1) * inner(r1);
    let outer = midpoint(f, 0.0, d, n) + midpoint(f, d, 2.0 * d, n) + midpoint_tail(f, 2.0 * d, n);
    outer / l
}

/// Unnormalised `∫_{w}^{∞} exp(-k r^α) f_r(r) dr`, summed in the Euclidean distance.
///
/// Finite pieces use `r = w + s²`, which removes the `1/sqrt(r - w)` edge of
/// `f_r`; the tail past the last breakpoint is summed in the horizontal offset.
fn distance_integral(
    pdf: &dyn Fn(f64) -> f64,
    breaks: &[f64],
    w: f64,
    k: f64,
    alpha: f64,
    n: usize,
) -> f64 {
    let s_of = |x: f64| ((w * w + x * x).sqrt() - w).sqrt();
    let body: f64 = breaks
        .windows(2)
        .map(|p| {
            midpoint(
                |s| {
                    let r = w + s * s;
                    let x = (r * r - w * w).sqrt();
                    (-k * r.powf(alpha)).exp() * pdf(x) * 2.0 * r / (r + w).sqrt()
                },
                s_of(p[0]),
                s_of(p[1]),
                n,
            )
        })
        .sum();
    let last = *breaks.last().unwrap();
    let tail = midpoint_tail(
        |x| (-k * (x * x + w * w).powf(0.5 * alpha)).exp() * pdf(x),
        last,
        n,
    );
    body + tail
}

/// Renormalised coverage probability at exponent scale `k = γ (ρ + β (I1 + I2))`.
pub fn coverage(lambda_p: f64, d: f64, w: f64, alpha: f64, omni: bool, k: f64) -> f64 {
    let l = first_order_density(lambda_p, d);
    let n = 4000;
    let (pdf, breaks): (Box<dyn Fn(f64) -> f64>, Vec<f64>) = if omni {
        (
            Box::new(move |x| offset_pdf_omni(l, d, x)),
            vec![0.0, d / 2.0, 1.5 * d],
        )
    } else {
        (
            Box::new(move |x| offset_pdf_semicircle(l, d, x)),
            vec![0.0, d, 2.0 * d],
        )
    };
    distance_integral(&*pdf, &breaks, w, k, alpha, n)
        / distance_integral(&*pdf, &breaks, w, 0.0, alpha, n)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
