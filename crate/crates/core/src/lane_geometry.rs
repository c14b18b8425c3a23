//! Two-lane vehicle fields, nearest-vehicle association and the serving
//! distance laws.
//!
//! Lane 1 carries the typical receiver at the origin; lane 2 runs parallel at
//! vertical offset `w_l`. The typical vehicle always connects to the lane-2
//! vehicle with the smallest horizontal offset among those its antenna can
//! see.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::hardcore_process::{
    first_order_density, matern_thin, sample_ppp_tiled, HardCoreConfig, PointSet1D, Window1D,
};
use crate::quadrature::{integrate, integrate_pieces, integrate_to_infinity, Tolerance};
use crate::rng::StreamSeed;

/// Tile length used when sampling generating processes for a field.
pub const FIELD_TILE_M: f64 = 500.0;

/// Retry budget for the Palm-conditioned core of lane 1.
const PALM_MAX_ATTEMPTS: usize = 1_000_000;

const TAG_LANE1_TILES: u64 = 1;
const TAG_LANE1_CORE: u64 = 2;
const TAG_LANE2_TILES: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LaneLayout {
    /// Distance between the two lane centre lines (m).
    pub w_l: f64,
}

impl LaneLayout {
    pub fn new(w_l: f64) -> Result<Self> {
        ensure_positive("w_l", w_l)?;
        Ok(LaneLayout { w_l })
    }

    /// Vertical coordinate of lane `lane` (1-based).
    pub fn lane_offset(&self, lane: usize) -> f64 {
        (lane as f64 - 1.0) * self.w_l
    }
}

/// Receive/transmit antenna pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum AntennaCase {
    /// Semicircle antenna: only vehicles ahead (`x > 0`) are heard.
    Semicircle,
    /// Omnidirectional antenna: every vehicle is heard.
    Omnidirectional,
}

impl AntennaCase {
    pub const ALL: [AntennaCase; 2] = [AntennaCase::Semicircle, AntennaCase::Omnidirectional];

    /// Interference multiplier `β`.
    pub fn beta(self) -> f64 {
        match self {
            AntennaCase::Semicircle => 1.0,
            AntennaCase::Omnidirectional => 2.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AntennaCase::Semicircle => "c1",
            AntennaCase::Omnidirectional => "c2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c1" | "1" | "semicircle" => Some(AntennaCase::Semicircle),
            "c2" | "2" | "omni" | "omnidirectional" => Some(AntennaCase::Omnidirectional),
            _ => None,
        }
    }

    /// Whether a transmitter at horizontal coordinate `x` is visible.
    pub fn admits(self, x: f64) -> bool {
        match self {
            AntennaCase::Semicircle => x > 0.0,
            AntennaCase::Omnidirectional => true,
        }
    }
}

impl std::fmt::Display for AntennaCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A two-lane deployment with the typical vehicle at the origin of lane 1.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleField {
    pub lane1: PointSet1D,
    pub lane2: PointSet1D,
    pub layout: LaneLayout,
    pub configs: [HardCoreConfig; 2],
}

impl VehicleField {
    /// Debug dump of every vehicle as `lane,x,y`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "lane,x,y")?;
        for (lane, set) in [(1, &self.lane1), (2, &self.lane2)] {
            let y = self.layout.lane_offset(lane);
            for x in set.points() {
                writeln!(out, "{lane},{x},{y}")?;
            }
        }
        Ok(())
    }
}

/// Deploys both lanes on `[-half_length, half_length]`.
///
/// Lane 1 is drawn from its Palm distribution: the generating process is
/// conditioned on a point at the origin whose mark beats every generating
/// mark within `d_1`. Only the generating points in `[-d_1, d_1]` enter that
/// condition, so they are resampled until it holds while the rest of the line
/// is drawn unconditionally. Lane 2 is an independent stationary lane.
pub fn deploy_field(
    configs: [HardCoreConfig; 2],
    layout: LaneLayout,
    half_length: f64,
    seed: StreamSeed,
) -> Result<VehicleField> {
    for (i, c) in configs.iter().enumerate() {
        if !c.is_heavy_traffic() {
            log::warn!(
                "lane {} is outside heavy traffic: lambda_p * d = {:.3} < 1",
                i + 1,
                c.lambda_p * c.hard_core_distance()
            );
        }
        if half_length <= c.hard_core_distance() {
            return Err(Error::param(
                "window_half_length",
                format!(
                    "must exceed the hard-core distance {}",
                    c.hard_core_distance()
                ),
            ));
        }
    }
    let window = Window1D::centered(half_length)?;
    let lane1 = palm_lane(&configs[0], window, seed)?;
    let d2 = configs[1].hard_core_distance();
    let generating = sample_ppp_tiled(
        configs[1].lambda_p,
        window.dilate(d2)?,
        FIELD_TILE_M,
        seed.child(TAG_LANE2_TILES),
    )?;
    let lane2 = matern_thin(&generating, d2)?.restrict(window);
    Ok(VehicleField {
        lane1,
        lane2,
        layout,
        configs,
    })
}

fn palm_lane(config: &HardCoreConfig, window: Window1D, seed: StreamSeed) -> Result<PointSet1D> {
    let d = config.hard_core_distance();
    let lambda_p = config.lambda_p;
    let outer = sample_ppp_tiled(
        lambda_p,
        window.dilate(d)?,
        FIELD_TILE_M,
        seed.child(TAG_LANE1_TILES),
    )?;

    let mut rng = seed.child(TAG_LANE1_CORE).rng();
    let poisson =
        Poisson::new(2.0 * lambda_p * d).map_err(|e| Error::param("lambda_p", e.to_string()))?;
    let mut core = None;
    for _ in 0..PALM_MAX_ATTEMPTS {
        let n = poisson.sample(&mut rng) as usize;
        // Largest of n uniform marks.
        let max_mark = if n == 0 {
            0.0
        } else {
            rng.random::<f64>().powf(1.0 / n as f64)
        };
        let origin_mark: f64 = rng.random();
        if origin_mark > max_mark {
            core = Some((n, max_mark, origin_mark));
            break;
        }
    }
    let (n, max_mark, origin_mark) = core.ok_or_else(|| {
        Error::Sampling(format!(
            "typical vehicle not retained after {PALM_MAX_ATTEMPTS} attempts (lambda_p * d = {})",
            lambda_p * d
        ))
    })?;

    let mut pairs: Vec<(f64, f64)> = outer
        .points()
        .iter()
        .zip(outer.marks().unwrap_or(&[]))
        .filter(|(&x, _)| x.abs() > d)
        .map(|(&x, &m)| (x, m))
        .collect();
    pairs.push((0.0, origin_mark));
    for i in 0..n {
        let x = d * (2.0 * rng.random::<f64>() - 1.0);
        let m = if i == 0 {
            max_mark
        } else {
            max_mark * rng.random::<f64>()
        };
        pairs.push((x, m));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| a.0 == b.0);
    let (points, marks): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let generating = PointSet1D::new(points, marks, outer.window())?;
    let lane = matern_thin(&generating, d)?.restrict(window);
    debug_assert!(lane
        .points()
        .binary_search_by(|x| x.total_cmp(&0.0))
        .is_ok());
    Ok(lane)
}

/// The serving (nearest adjacent-lane) vehicle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ServingVehicle {
    pub x: f64,
    pub y: f64,
    /// Index of the server within `lane2`.
    pub index: usize,
}

impl ServingVehicle {
    pub fn distance(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Nearest lane-2 vehicle by horizontal offset among those visible under `case`.
///
/// `None` when no lane-2 vehicle is visible (such trials are discarded).
pub fn nearest_vehicle(field: &VehicleField, case: AntennaCase) -> Option<ServingVehicle> {
    let xs = field.lane2.points();
    let index = match case {
        AntennaCase::Semicircle => {
            let i = xs.partition_point(|&x| x <= 0.0);
            (i < xs.len()).then_some(i)
        }
        AntennaCase::Omnidirectional => {
            let i = xs.partition_point(|&x| x < 0.0);
            match (i.checked_sub(1), (i < xs.len()).then_some(i)) {
                (Some(l), Some(r)) => Some(if xs[l].abs() <= xs[r] { l } else { r }),
                (l, r) => l.or(r),
            }
        }
    }?;
    Some(ServingVehicle {
        x: xs[index],
        y: field.layout.w_l,
        index,
    })
}

/// Rate of the exponential tail that carries the mass beyond `2 d_2`.
///
/// Chosen so that `e^{-2 λ_r d_2} = ((λ_2 d_2 - 2)² - 2) / 2 = 1 - F_C(2 d_2)`.
pub fn lambda_r(lambda_2: f64, d_2: f64) -> Result<f64> {
    ensure_positive("lambda_2", lambda_2)?;
    ensure_positive("d_2", d_2)?;
    let denom = (lambda_2 * d_2 - 2.0).powi(2) - 2.0;
    if denom <= 0.0 || denom >= 2.0 {
        return Err(Error::param(
            "lambda_2",
            format!(
                "lambda_2 * d_2 = {} gives no positive tail rate",
                lambda_2 * d_2
            ),
        ));
    }
    Ok((2.0 / denom).ln() / (2.0 * d_2))
}

/// Probability that the semicircle serving offset lies within `2 d_2`, `2 - (2 - λ_2 d_2)²/2`.
pub fn cdf_within_two_d(lambda_2: f64, d_2: f64) -> f64 {
    2.0 - (2.0 - lambda_2 * d_2).powi(2) / 2.0
}

/// Upper bound on the overlap probability neglected on `(d_2, 2 d_2]`:
/// `∫₀¹ e^{-(1-m) λ_p d_2} ∫₀^m e^{-(1-m₂) λ_p (r_1 - d_2)} dm₂ dm`.
pub fn overlap_probability_bound(lambda_p: f64, d_2: f64, r1: f64) -> Result<f64> {
    ensure_non_negative("lambda_p", lambda_p)?;
    ensure_positive("d_2", d_2)?;
    if !(r1 > d_2 && r1 <= 2.0 * d_2) {
        return Err(Error::param(
            "r1",
            format!("must lie in (d_2, 2 d_2], got {r1}"),
        ));
    }
    let tol = Tolerance::relative(1e-12);
    let a = lambda_p * d_2;
    let b = lambda_p * (r1 - d_2);
    // A failed inner integral turns into NaN, which the outer integrator reports.
    let inner = |m: f64| {
        integrate(|m2: f64| (-(1.0 - m2) * b).exp(), 0.0, m, tol)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    };
    let outer = integrate(|m: f64| (-(1.0 - m) * a).exp() * inner(m), 0.0, 1.0, tol)?;
    Ok(outer.value)
}

/// Serving-distance law for one antenna case.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DistanceModel {
    pub lambda_2: f64,
    pub d_2: f64,
    pub lambda_r: f64,
    pub w_l: f64,
    pub case: AntennaCase,
}

impl DistanceModel {
    pub fn new(lambda_2: f64, d_2: f64, w_l: f64, case: AntennaCase) -> Result<Self> {
        ensure_positive("w_l", w_l)?;
        // The exponential tail needs (λ_2 d_2 - 2)² > 2, i.e. λ_2 d_2 < 2 - √2.
        Ok(DistanceModel {
            lambda_2,
            d_2,
            lambda_r: lambda_r(lambda_2, d_2)?,
            w_l,
            case,
        })
    }

    /// Law for a hard-core second lane.
    pub fn for_lane(
        lane2: &HardCoreConfig,
        layout: &LaneLayout,
        case: AntennaCase,
    ) -> Result<Self> {
        let d = lane2.hard_core_distance();
        DistanceModel::new(first_order_density(lane2.lambda_p, d), d, layout.w_l, case)
    }

    /// Quadratic-times-linear middle branch of the omnidirectional law on `(d_2/2, 3 d_2/2]`.
    pub fn g(&self, r1: f64) -> f64 {
        let (l, d) = (self.lambda_2, self.d_2);
        let lead = 2.0 * l * (1.0 + l * d / 2.0 - l * r1) / (1.0 - l * d);
        let poly = 1.5 * l * d - 3.0 * l * l * d * d / 8.0 + (-2.0 * self.lambda_r * d).exp()
            - (l + l * l * d / 2.0) * r1
            + l * l * r1 * r1 / 2.0;
        lead * poly
    }

    /// Density of the horizontal serving offset `|x_NV|`, exactly as the closed form reads.
    pub fn pdf_horizontal(&self, r1: f64) -> f64 {
        let (l, d, lr) = (self.lambda_2, self.d_2, self.lambda_r);
        if r1 <= 0.0 {
            return 0.0;
        }
        match self.case {
            AntennaCase::Semicircle => {
                if r1 <= d {
                    l
                } else if r1 <= 2.0 * d {
                    l * (1.0 - l * (r1 - d))
                } else {
                    lr * (-lr * r1).exp()
                }
            }
            AntennaCase::Omnidirectional => {
                if r1 <= d / 2.0 {
                    2.0 * l
                } else if r1 <= 1.5 * d {
                    self.g(r1)
                } else {
                    2.0 * lr * (-lr * (2.0 * r1 + d)).exp() / (1.0 - l * d)
                }
            }
        }
    }

    /// Finite breakpoints of the piecewise law, starting at 0. The last one opens the exponential tail.
    pub fn breakpoints(&self) -> [f64; 3] {
        match self.case {
            AntennaCase::Semicircle => [0.0, self.d_2, 2.0 * self.d_2],
            AntennaCase::Omnidirectional => [0.0, 0.5 * self.d_2, 1.5 * self.d_2],
        }
    }

    /// Decay length of the exponential tail.
    pub fn tail_scale(&self) -> f64 {
        match self.case {
            AntennaCase::Semicircle => 1.0 / self.lambda_r,
            AntennaCase::Omnidirectional => 0.5 / self.lambda_r,
        }
    }

    /// The uniform segment `(0, end]` and its density.
    pub fn uniform_segment(&self) -> (f64, f64) {
        match self.case {
            AntennaCase::Semicircle => (self.d_2, self.lambda_2),
            AntennaCase::Omnidirectional => (0.5 * self.d_2, 2.0 * self.lambda_2),
        }
    }

    /// Density of the Euclidean serving distance `r = sqrt(x² + w_l²)`; zero for `r <= w_l`.
    pub fn pdf_comm_distance(&self, r: f64) -> f64 {
        if r <= self.w_l {
            return 0.0;
        }
        let x = (r * r - self.w_l * self.w_l).sqrt();
        r / x * self.pdf_horizontal(x)
    }

    /// Integrates `h(x) * pdf_horizontal(x)` over `(0, ∞)`.
    pub fn expect<H: Fn(f64) -> f64>(&self, h: H, tol: Tolerance) -> Result<f64> {
        let b = self.breakpoints();
        let f = |x: f64| {
            let p = self.pdf_horizontal(x);
            if p == 0.0 {
                0.0
            } else {
                h(x) * p
            }
        };
        let body = integrate_pieces(f, &b, tol)?;
        let tail = integrate_to_infinity(f, b[2], self.tail_scale(), tol)?;
        Ok(body.value + tail.value)
    }

    /// Total probability mass of the closed form.
    pub fn mass(&self) -> Result<f64> {
        self.expect(|_| 1.0, Tolerance::relative(1e-13))
    }
}
