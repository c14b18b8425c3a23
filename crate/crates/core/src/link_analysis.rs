//! Analytic link performance: normalised noise, interference constants, the
//! coverage probability and its signal-fraction form, the small/large
//! threshold approximations and the noise-free upper limit.
//!
//! Every probability is evaluated in the horizontal-offset domain,
//! `∫ exp(-γ K (x² + w_l²)^{α/2}) f_x(x) dx`, which is the Euclidean-distance
//! integral after the substitution `r = sqrt(x² + w_l²)` and avoids the
//! integrable singularity of the distance density at `r = w_l`.

use serde::Serialize;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::hardcore_process::{first_order_density, second_order_density, HardCoreConfig};
use crate::lane_geometry::{AntennaCase, DistanceModel, LaneLayout};
use crate::quadrature::{bisect, integrate, integrate_pieces, integrate_to_infinity, Tolerance};

/// Speed of light used for the carrier wavelength (m/s).
pub const SPEED_OF_LIGHT: f64 = 3e8;

/// Tolerance for probability integrals.
pub const PROBABILITY_TOLERANCE: Tolerance = Tolerance {
    abs: 1e-12,
    rel: 1e-10,
    max_intervals: 4000,
};

/// Tolerance for the interference constants, whose scale is far below 1.
pub const INTERFERENCE_TOLERANCE: Tolerance = Tolerance::relative(1e-11);

/// Outer `I_2` integral stops where the remaining serving-distance mass falls below this.
pub const I2_TAIL_MASS: f64 = 1e-12;

/// Transmit/noise/propagation parameters. Powers in watts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadioConfig {
    pub pt_w: f64,
    pub noise_w: f64,
    pub freq_hz: f64,
    pub d0_m: f64,
    pub alpha: f64,
}

impl RadioConfig {
    pub fn new(pt_w: f64, noise_w: f64, freq_hz: f64, d0_m: f64, alpha: f64) -> Result<Self> {
        ensure_positive("pt_w", pt_w)?;
        ensure_non_negative("noise_w", noise_w)?;
        ensure_positive("freq_hz", freq_hz)?;
        ensure_positive("d0_m", d0_m)?;
        check_alpha(alpha)?;
        Ok(RadioConfig {
            pt_w,
            noise_w,
            freq_hz,
            d0_m,
            alpha,
        })
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.freq_hz
    }

    /// Free-space gain at the reference distance, `λ_w² / (16 π² d_0²)`.
    pub fn free_space_constant(&self) -> f64 {
        let lw = self.wavelength();
        lw * lw / (16.0 * std::f64::consts::PI.powi(2) * self.d0_m * self.d0_m)
    }

    /// Noise normalised by transmit power and free-space gain, `N / (P_t C)`.
    pub fn rho(&self) -> f64 {
        self.noise_w / (self.pt_w * self.free_space_constant())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "alpha",
            format!("path-loss exponent must exceed 1 for finite interference, got {alpha}"),
        ))
    }
}

pub fn noise_ratio(radio: &RadioConfig) -> Result<f64> {
    ensure_positive("pt_w", radio.pt_w)?;
    ensure_non_negative("noise_w", radio.noise_w)?;
    Ok(radio.rho())
}

/// Shannon threshold for a target rate, `2^{R_t/B} - 1`.
pub fn target_sinr(rate_bps: f64, bandwidth_hz: f64) -> Result<f64> {
    ensure_non_negative("rate", rate_bps)?;
    ensure_positive("bandwidth", bandwidth_hz)?;
    Ok((rate_bps / bandwidth_hz).exp2() - 1.0)
}

/// Signal fraction to MH units, `σ / (1 - σ)`. `σ = 1` maps to infinity.
pub fn sf_to_mh(sigma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::param(
            "sigma",
            format!("must lie in [0, 1], got {sigma}"),
        ));
    }
    if sigma == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(sigma / (1.0 - sigma))
}

/// MH units back to a signal fraction, `m / (1 + m)`.
pub fn mh_to_sf(mh: f64) -> Result<f64> {
    if mh.is_nan() || mh < 0.0 {
        return Err(Error::param("mh", format!("must be >= 0, got {mh}")));
    }
    if mh.is_infinite() {
        return Ok(1.0);
    }
    Ok(mh / (1.0 + mh))
}

/// Same-lane interference constant:
/// `λ_1⁻¹ ∫_{d_1}^∞ λ_1^{(2)}(r) r^{-α} dr`, with the flat `λ_1²` tail in closed form.
pub fn interference_i1(lambda_p: f64, d_1: f64, alpha: f64) -> Result<f64> {
    ensure_positive("lambda_p", lambda_p)?;
    ensure_positive("d_1", d_1)?;
    check_alpha(alpha)?;
    let lambda = first_order_density(lambda_p, d_1);
    let middle = integrate(
        |r| second_order_density(lambda_p, d_1, r) * r.powf(-alpha),
        d_1,
        2.0 * d_1,
        INTERFERENCE_TOLERANCE,
    )?;
    let tail = lambda * lambda * (2.0 * d_1).powf(1.0 - alpha) / (alpha - 1.0);
    Ok((middle.value + tail) / lambda)
}

/// Adjacent-lane interference constant beyond the server:
/// `∫₀^∞ ∫_{d_2}^∞ λ_2^{(2)}(r_d) f_x^{c1}(r_1) / (λ_2 ((r_1 + r_d)² + w_l²)^{α/2}) dr_d dr_1`.
pub fn interference_i2(lambda_p: f64, d_2: f64, w_l: f64, alpha: f64) -> Result<f64> {
    ensure_positive("lambda_p", lambda_p)?;
    ensure_positive("d_2", d_2)?;
    ensure_positive("w_l", w_l)?;
    check_alpha(alpha)?;
    let lambda = first_order_density(lambda_p, d_2);
    let serving = DistanceModel::new(lambda, d_2, w_l, AntennaCase::Semicircle)?;
    let outer_end = 2.0 * d_2 + (1.0 / I2_TAIL_MASS).ln() / serving.lambda_r;
    adjacent_interference(
        |r1| serving.pdf_horizontal(r1),
        &[0.0, d_2, 2.0 * d_2, outer_end],
        |r| second_order_density(lambda_p, d_2, r),
        &[d_2, 2.0 * d_2],
        lambda,
        w_l,
        alpha,
    )
}

/// `I_2` with the hard-core lane replaced by a Poisson lane of density `λ_2`.
fn baseline_interference_i2(lambda_2: f64, d_2: f64, w_l: f64, alpha: f64) -> Result<f64> {
    let outer_end = (1.0 / I2_TAIL_MASS).ln() / lambda_2;
    let scale = 1.0 / lambda_2;
    let mut breaks = vec![0.0];
    let mut x = scale;
    while x < outer_end {
        breaks.push(x);
        x += scale;
    }
    breaks.push(outer_end);
    adjacent_interference(
        |r1| lambda_2 * (-lambda_2 * r1).exp(),
        &breaks,
        |_| lambda_2 * lambda_2,
        &[d_2],
        lambda_2,
        w_l,
        alpha,
    )
}

/// `λ⁻¹ ∫ f(r_1) ∫_{inner[0]}^∞ λ^{(2)}(r_d) ((r_1 + r_d)² + w²)^{-α/2} dr_d dr_1`.
///
/// `inner_breaks` lists the breakpoints of the product density; beyond the last
/// one it must be constant.
fn adjacent_interference<F, P>(
    serving_pdf: F,
    outer_breaks: &[f64],
    product_density: P,
    inner_breaks: &[f64],
    lambda: f64,
    w_l: f64,
    alpha: f64,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let tol = INTERFERENCE_TOLERANCE;
    let inner_tol = Tolerance::relative(tol.rel * 0.1);
    let last = *inner_breaks.last().expect("at least one inner breakpoint");
    let flat = product_density(last + 1.0);
    let inner = |r1: f64| -> f64 {
        let kernel = |r: f64| ((r1 + r).powi(2) + w_l * w_l).powf(-0.5 * alpha);
        let body = integrate_pieces(|r| product_density(r) * kernel(r), inner_breaks, inner_tol);
        let tail = integrate_to_infinity(kernel, last, r1 + last, inner_tol);
        match (body, tail) {
            (Ok(b), Ok(t)) => b.value + flat * t.value,
            _ => f64::NAN,
        }
    };
    let outer = integrate_pieces(|r1| serving_pdf(r1) * inner(r1), outer_breaks, tol)?;
    Ok(outer.value / lambda)
}

/// Interference constants of one antenna case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterferenceConstants {
    pub i1: f64,
    pub i2: f64,
    pub beta: f64,
}

impl InterferenceConstants {
    /// `β (I_1 + I_2)`.
    pub fn total(&self) -> f64 {
        self.beta * (self.i1 + self.i2)
    }
}

/// Both lanes plus the lane spacing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Geometry {
    pub lanes: [HardCoreConfig; 2],
    pub layout: LaneLayout,
}

impl Geometry {
    pub fn new(lane1: HardCoreConfig, lane2: HardCoreConfig, layout: LaneLayout) -> Self {
        Geometry {
            lanes: [lane1, lane2],
            layout,
        }
    }

    /// Both lanes share one configuration.
    pub fn symmetric(lane: HardCoreConfig, layout: LaneLayout) -> Self {
        Geometry::new(lane, lane, layout)
    }
}

/// Serving-distance law feeding the coverage integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ServingLaw {
    /// Piecewise hard-core law.
    HardCore(DistanceModel),
    /// Nearest point of a Poisson lane of density `lambda` (the replacement baseline).
    Poisson { lambda: f64, case: AntennaCase },
}

impl ServingLaw {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            ServingLaw::HardCore(m) => m.pdf_horizontal(x),
            ServingLaw::Poisson { lambda, case } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let rate = case.beta() * lambda;
                rate * (-rate * x).exp()
            }
        }
    }

    /// Finite breakpoints; the last one starts the exponential tail.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            ServingLaw::HardCore(m) => m.breakpoints().to_vec(),
            ServingLaw::Poisson { .. } => vec![0.0, self.tail_scale()],
        }
    }

    fn tail_scale(&self) -> f64 {
        match self {
            ServingLaw::HardCore(m) => m.tail_scale(),
            ServingLaw::Poisson { lambda, case } => 1.0 / (case.beta() * lambda),
        }
    }

    /// `∫₀^∞ h(x) f(x) dx` split on the law's breakpoints.
    pub fn expect<H: Fn(f64) -> f64>(&self, h: H, tol: Tolerance) -> Result<f64> {
        let breaks = self.breakpoints();
        let f = |x: f64| {
            let p = self.pdf(x);
            if p == 0.0 {
                0.0
            } else {
                h(x) * p
            }
        };
        let body = integrate_pieces(f, &breaks, tol)?;
        let tail = integrate_to_infinity(f, *breaks.last().unwrap(), self.tail_scale(), tol)?;
        Ok(body.value + tail.value)
    }
}

/// Which analytic pipeline a model runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    /// Hard-core distance law and hard-core product densities.
    HardCore,
    /// Poisson lanes of equal intensity.
    BaselinePpp,
}

/// A value that may have been clamped into `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Clamped {
    pub value: f64,
    pub clamped: bool,
}

impl Clamped {
    fn probability(raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        Clamped {
            value,
            clamped: value != raw,
        }
    }
}

/// Analytic coverage model for one geometry, radio setting and antenna case.
///
/// Interference constants and the serving-law mass are computed once at
/// construction; evaluating a threshold costs one quadrature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticModel {
    pub kind: ModelKind,
    pub case: AntennaCase,
    pub law: ServingLaw,
    pub interference: InterferenceConstants,
    pub rho: f64,
    pub alpha: f64,
    pub w_l: f64,
    /// Mass of the serving law as written, before any renormalisation.
    pub mass: f64,
    /// Factor applied to the serving law (`1 / mass` when renormalising, else 1).
    pub normalization: f64,
    /// Normalised `E[r^α]`, used by the small-threshold approximation.
    pub moment_alpha: f64,
}

impl AnalyticModel {
    /// Hard-core model with renormalised serving law.
    pub fn new(geometry: &Geometry, radio: &RadioConfig, case: AntennaCase) -> Result<Self> {
        AnalyticModel::build(geometry, radio, case, ModelKind::HardCore, true)
    }

    /// Replacement-PPP baseline.
    pub fn baseline_ppp(
        geometry: &Geometry,
        radio: &RadioConfig,
        case: AntennaCase,
    ) -> Result<Self> {
        AnalyticModel::build(geometry, radio, case, ModelKind::BaselinePpp, true)
    }

    pub fn build(
        geometry: &Geometry,
        radio: &RadioConfig,
        case: AntennaCase,
        kind: ModelKind,
        renormalize: bool,
    ) -> Result<Self> {
        check_alpha(radio.alpha)?;
        let alpha = radio.alpha;
        let w_l = geometry.layout.w_l;
        let [lane1, lane2] = geometry.lanes;
        let (d1, d2) = (lane1.hard_core_distance(), lane2.hard_core_distance());
        let (law, i1, i2) = match kind {
            ModelKind::HardCore => (
                ServingLaw::HardCore(DistanceModel::for_lane(&lane2, &geometry.layout, case)?),
                interference_i1(lane1.lambda_p, d1, alpha)?,
                interference_i2(lane2.lambda_p, d2, w_l, alpha)?,
            ),
            ModelKind::BaselinePpp => {
                let l1 = lane1.density();
                let l2 = lane2.density();
                (
                    ServingLaw::Poisson { lambda: l2, case },
                    l1 * d1.powf(1.0 - alpha) / (alpha - 1.0),
                    baseline_interference_i2(l2, d2, w_l, alpha)?,
                )
            }
        };
        let mass = law.expect(|_| 1.0, Tolerance::relative(1e-13))?;
        let normalization = if renormalize { 1.0 / mass } else { 1.0 };
        let moment_alpha = normalization
            * law.expect(
                |x| (x * x + w_l * w_l).powf(0.5 * alpha),
                Tolerance::relative(1e-12),
            )?;
        Ok(AnalyticModel {
            kind,
            case,
            law,
            interference: InterferenceConstants {
                i1,
                i2,
                beta: case.beta(),
            },
            rho: radio.rho(),
            alpha,
            w_l,
            mass,
            normalization,
            moment_alpha,
        })
    }

    /// Same model with a different normalised noise.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        ensure_non_negative("rho", rho)?;
        Ok(AnalyticModel {
            rho,
            ..self.clone()
        })
    }

    /// `ρ + β (I_1 + I_2)`.
    pub fn exponent_scale(&self) -> f64 {
        self.rho + self.interference.total()
    }

    fn path_gain_inverse(&self, x: f64) -> f64 {
        (x * x + self.w_l * self.w_l).powf(0.5 * self.alpha)
    }

    /// Coverage probability `Pr[SINR > γ_t]`.
    pub fn coverage_ccdf(&self, gamma_t: f64) -> Result<f64> {
        ensure_non_negative("gamma_t", gamma_t)?;
        if gamma_t == 0.0 {
            return Ok(1.0);
        }
        let k = gamma_t * self.exponent_scale();
        let v = self.law.expect(
            |x| (-k * self.path_gain_inverse(x)).exp(),
            PROBABILITY_TOLERANCE,
        )?;
        Ok((self.normalization * v).clamp(0.0, 1.0))
    }

    /// Signal-fraction CCDF, `coverage_ccdf(σ / (1 - σ))`.
    pub fn sf_ccdf(&self, sigma: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(Error::param(
                "sigma",
                format!("must lie in [0, 1), got {sigma}"),
            ));
        }
        self.coverage_ccdf(sf_to_mh(sigma)?)
    }

    /// Linearised coverage `∫ (1 - γ K r^α) f_r(r) dr = 1 - γ K E[r^α]`, clamped to `[0, 1]`.
    pub fn approx_small(&self, gamma_t: f64) -> Result<Clamped> {
        ensure_non_negative("gamma_t", gamma_t)?;
        Ok(Clamped::probability(
            1.0 - gamma_t * self.exponent_scale() * self.moment_alpha,
        ))
    }

    /// Coverage restricted to the uniform segment of the serving law.
    pub fn approx_large(&self, gamma_t: f64) -> Result<f64> {
        ensure_non_negative("gamma_t", gamma_t)?;
        let ServingLaw::HardCore(model) = &self.law else {
            return Err(Error::Contract(
                "the large-threshold approximation needs the hard-core serving law".into(),
            ));
        };
        let (end, density) = model.uniform_segment();
        let k = gamma_t * self.exponent_scale();
        let v = integrate(
            |x| (-k * self.path_gain_inverse(x)).exp(),
            0.0,
            end,
            PROBABILITY_TOLERANCE,
        )?;
        Ok((self.normalization * density * v.value).clamp(0.0, 1.0))
    }

    /// Noise-free signal-fraction CCDF, the ceiling reachable by raising transmit power.
    pub fn upper_limit(&self, sigma: f64) -> Result<f64> {
        self.with_rho(0.0)?.sf_ccdf(sigma)
    }

    /// Threshold `γ_t` at which the coverage probability equals `target`.
    pub fn gamma_for_coverage(&self, target: f64) -> Result<f64> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::param(
                "target",
                format!("must lie in (0, 1), got {target}"),
            ));
        }
        let f = |g: f64| self.coverage_ccdf(g).unwrap_or(f64::NAN) - target;
        let mut hi = 1.0;
        while f(hi) > 0.0 {
            hi *= 10.0;
            if hi > 1e300 {
                return Err(Error::Numerical {
                    what: "threshold search",
                    diagnostics: format!("coverage stays above {target}"),
                });
            }
        }
        let mut lo = hi / 10.0;
        while f(lo) < 0.0 {
            lo /= 10.0;
            if lo < 1e-300 {
                return Err(Error::Numerical {
                    what: "threshold search",
                    diagnostics: format!("coverage stays below {target}"),
                });
            }
        }
        bisect(f, lo, hi, 1e-13)
    }

    /// Analytic curve of the requested kind on a σ grid.
    pub fn sf_curve(&self, kind: CurveKind, grid: &[f64]) -> Result<CcdfCurve> {
        let mut clamped = false;
        let values = grid
            .iter()
            .map(|&s| {
                let gamma = sf_to_mh(s)?;
                match kind {
                    CurveKind::Analytic | CurveKind::BaselinePpp => self.sf_ccdf(s),
                    CurveKind::ApproxSmall => {
                        let c = self.approx_small(gamma)?;
                        clamped |= c.clamped;
                        Ok(c.value)
                    }
                    CurveKind::ApproxLarge => self.approx_large(gamma),
                    CurveKind::UpperLimit => self.upper_limit(s),
                    CurveKind::MonteCarlo => Err(Error::Contract(
                        "Monte Carlo curves come from a simulation campaign".into(),
                    )),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(CcdfCurve {
            grid: grid.to_vec(),
            values,
            kind,
            case: self.case,
            metadata: CurveMetadata {
                distance_mass: Some(self.mass),
                clamped,
                ..CurveMetadata::default()
            },
        })
    }
}

/// Provenance of a sampled CCDF.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CurveKind {
    Analytic,
    MonteCarlo,
    BaselinePpp,
    ApproxSmall,
    ApproxLarge,
    UpperLimit,
}

impl CurveKind {
    pub fn label(self) -> &'static str {
        match self {
            CurveKind::Analytic => "analytic",
            CurveKind::MonteCarlo => "mc",
            CurveKind::BaselinePpp => "baseline",
            CurveKind::ApproxSmall => "f1",
            CurveKind::ApproxLarge => "f2",
            CurveKind::UpperLimit => "limit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analytic" | "exact" => Some(CurveKind::Analytic),
            "mc" | "monte-carlo" | "montecarlo" => Some(CurveKind::MonteCarlo),
            "baseline" | "baseline-ppp" | "ppp" => Some(CurveKind::BaselinePpp),
            "f1" | "approx-f1" | "small" => Some(CurveKind::ApproxSmall),
            "f2" | "approx-f2" | "large" => Some(CurveKind::ApproxLarge),
            "limit" | "upper-limit" => Some(CurveKind::UpperLimit),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CurveMetadata {
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub discarded: Option<usize>,
    pub saturated: Option<usize>,
    pub window_half_length: Option<f64>,
    pub distance_mass: Option<f64>,
    pub clamped: bool,
    pub warnings: Vec<String>,
}

/// A CCDF sampled on a grid of σ (or γ) values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcdfCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
    pub case: AntennaCase,
    pub metadata: CurveMetadata,
}

impl CcdfCurve {
    /// Non-increasing along the grid, allowing rises up to `slack`.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    /// `max |self - other|` over a shared grid.
    pub fn sup_distance(&self, other: &CcdfCurve) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Contract("curves sampled on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// `n` σ values `k / (n + 1)`, `k = 0..n`, uniform on `[0, 1)`.
pub fn uniform_sigma_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n + 1) as f64).collect()
}
