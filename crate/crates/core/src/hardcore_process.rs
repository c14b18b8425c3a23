//! One-dimensional Poisson and type-II Matérn hard-core point processes.
//!
//! A hard-core lane is produced by marking every point of a homogeneous
//! Poisson process with an independent `Uniform[0, 1]` mark and keeping a point
//! only when its mark beats every other mark within the hard-core distance.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::rng::StreamSeed;

/// A finite observation window `[lo, hi]` on the line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window1D {
    lo: f64,
    hi: f64,
}

impl Window1D {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::param(
                "window",
                format!("need finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(Window1D { lo, hi })
    }

    /// The symmetric window `[-half_length, half_length]`.
    pub fn centered(half_length: f64) -> Result<Self> {
        Window1D::new(-half_length, half_length)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Grows (or, for negative `by`, shrinks) the window on both sides.
    pub fn dilate(&self, by: f64) -> Result<Self> {
        Window1D::new(self.lo - by, self.hi + by)
    }
}

/// A sorted, optionally marked point pattern observed on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet1D {
    points: Vec<f64>,
    marks: Vec<f64>,
    window: Window1D,
}

impl PointSet1D {
    /// Builds a marked pattern. Points must be strictly increasing and inside the window.
    pub fn new(points: Vec<f64>, marks: Vec<f64>, window: Window1D) -> Result<Self> {
        if marks.len() != points.len() {
            return Err(Error::Contract(format!(
                "{} points but {} marks",
                points.len(),
                marks.len()
            )));
        }
        if let Some(m) = marks.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::param("marks", format!("mark {m} outside [0, 1]")));
        }
        Self::validate_points(&points, &window)?;
        Ok(PointSet1D {
            points,
            marks,
            window,
        })
    }

    /// Builds a pattern without marks. Such a pattern cannot be thinned.
    pub fn unmarked(points: Vec<f64>, window: Window1D) -> Result<Self> {
        Self::validate_points(&points, &window)?;
        Ok(PointSet1D {
            points,
            marks: Vec::new(),
            window,
        })
    }

    fn validate_points(points: &[f64], window: &Window1D) -> Result<()> {
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract("points must be strictly increasing".into()));
        }
        if let Some(x) = points.iter().find(|x| !window.contains(**x)) {
            return Err(Error::Contract(format!(
                "point {x} lies outside the window"
            )));
        }
        Ok(())
    }

    pub fn empty(window: Window1D) -> Self {
        PointSet1D {
            points: Vec::new(),
            marks: Vec::new(),
            window,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn marks(&self) -> Option<&[f64]> {
        if self.marks.len() == self.points.len() && !self.points.is_empty() {
            Some(&self.marks)
        } else if self.points.is_empty() {
            Some(&[])
        } else {
            None
        }
    }

    pub fn window(&self) -> Window1D {
        self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps the points lying in `window` (which becomes the new observation window).
    pub fn restrict(&self, window: Window1D) -> PointSet1D {
        let start = self.points.partition_point(|&x| x < window.lo);
        let end = self.points.partition_point(|&x| x <= window.hi);
        PointSet1D {
            points: self.points[start..end].to_vec(),
            marks: if self.marks.is_empty() {
                Vec::new()
            } else {
                self.marks[start..end].to_vec()
            },
            window,
        }
    }

    /// Shifts every point by `-origin`.
    pub fn translate(&self, origin: f64) -> Result<PointSet1D> {
        let window = Window1D::new(self.window.lo - origin, self.window.hi - origin)?;
        Ok(PointSet1D {
            points: self.points.iter().map(|x| x - origin).collect(),
            marks: self.marks.clone(),
            window,
        })
    }

    /// Smallest gap between consecutive points, `None` for fewer than two points.
    pub fn min_gap(&self) -> Option<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }

    /// Debug dump as `index,coordinate,mark`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,coordinate,mark")?;
        for (i, &x) in self.points.iter().enumerate() {
            match self.marks.get(i) {
                Some(m) => writeln!(out, "{i},{x},{m}")?,
                None => writeln!(out, "{i},{x},")?,
            }
        }
        Ok(())
    }
}

/// Parameters of one hard-core lane.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct HardCoreConfig {
    /// Density of the generating Poisson process (m⁻¹).
    pub lambda_p: f64,
    /// Vehicle length (m).
    pub d_v: f64,
    /// Safety distance (m).
    pub d_s: f64,
}

impl HardCoreConfig {
    pub fn new(lambda_p: f64, d_v: f64, d_s: f64) -> Result<Self> {
        ensure_positive("lambda_p", lambda_p)?;
        ensure_positive("d_v", d_v)?;
        ensure_non_negative("d_s", d_s)?;
        Ok(HardCoreConfig { lambda_p, d_v, d_s })
    }

    /// Safety distance from speed by the two-second rule, `d_s = 2 v_s`.
    pub fn from_speed(lambda_p: f64, d_v: f64, v_s: f64) -> Result<Self> {
        ensure_non_negative("v_s", v_s)?;
        HardCoreConfig::new(lambda_p, d_v, 2.0 * v_s)
    }

    /// Hard-core distance `d = d_v + d_s`.
    pub fn hard_core_distance(&self) -> f64 {
        self.d_v + self.d_s
    }

    /// Intensity of the retained (hard-core) process.
    pub fn density(&self) -> f64 {
        first_order_density(self.lambda_p, self.hard_core_distance())
    }

    /// `λ_p d ≥ 1`, the regime the distance approximations are built for.
    pub fn is_heavy_traffic(&self) -> bool {
        self.lambda_p * self.hard_core_distance() >= 1.0
    }
}

/// Samples a homogeneous Poisson process with uniform marks on `window`.
pub fn sample_ppp<R: Rng + ?Sized>(
    lambda_p: f64,
    window: Window1D,
    rng: &mut R,
) -> Result<PointSet1D> {
    ensure_positive("lambda_p", lambda_p)?;
    let mean = lambda_p * window.length();
    let n = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::param("lambda_p", e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let x = window.lo + window.length() * rng.random::<f64>();
            (x, rng.random::<f64>())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| a.0 == b.0);
    let (points, marks) = pairs.into_iter().unzip();
    Ok(PointSet1D {
        points,
        marks,
        window,
    })
}

/// Samples a Poisson process on `window` tile by tile.
///
/// The line is cut into tiles `[k·tile, (k+1)·tile)`, each drawn from its own
/// child stream of `seed`. Two windows sharing a region therefore see identical
/// points there, which gives common random numbers across window sizes.
pub fn sample_ppp_tiled(
    lambda_p: f64,
    window: Window1D,
    tile: f64,
    seed: StreamSeed,
) -> Result<PointSet1D> {
    ensure_positive("lambda_p", lambda_p)?;
    ensure_positive("tile", tile)?;
    let first = (window.lo / tile).floor() as i64;
    let last = (window.hi / tile).floor() as i64;
    let mut points = Vec::new();
    let mut marks = Vec::new();
    for k in first..=last {
        let tile_window = Window1D::new(k as f64 * tile, (k + 1) as f64 * tile)?;
        let mut rng = seed.child_signed(k).rng();
        let block = sample_ppp(lambda_p, tile_window, &mut rng)?;
        for (&x, &m) in block.points.iter().zip(&block.marks) {
            if window.contains(x) {
                points.push(x);
                marks.push(m);
            }
        }
    }
    Ok(PointSet1D {
        points,
        marks,
        window,
    })
}

/// Type-II Matérn thinning with hard-core distance `d`.
///
/// A point survives iff its mark exceeds the mark of every other point within
/// distance `d` (closed ball). Equal marks are resolved in favour of the lower
/// coordinate.
pub fn matern_thin(generating: &PointSet1D, d: f64) -> Result<PointSet1D> {
    ensure_positive("d", d)?;
    let marks = generating
        .marks()
        .ok_or_else(|| Error::Contract("matern thinning needs marked points".into()))?;
    let xs = &generating.points;
    let n = xs.len();
    let mut points = Vec::new();
    let mut kept_marks = Vec::new();
    let mut lo = 0usize;
    for i in 0..n {
        let (x, m) = (xs[i], marks[i]);
        while xs[lo] < x - d {
            lo += 1;
        }
        let beaten_left = xs[lo..i].iter().zip(&marks[lo..i]).any(|(_, &mj)| mj >= m);
        let beaten = beaten_left
            || xs[i + 1..]
                .iter()
                .zip(&marks[i + 1..])
                .take_while(|(&xj, _)| xj - x <= d)
                .any(|(_, &mj)| mj > m);
        if !beaten {
            points.push(x);
            kept_marks.push(m);
        }
    }
    Ok(PointSet1D {
        points,
        marks: kept_marks,
        window: generating.window,
    })
}

/// Samples a hard-core lane observed on `window`.
///
/// The generating process is drawn on the window dilated by `d` so points near
/// the edges compete against the same neighbourhood as interior points.
pub fn sample_mhcp<R: Rng + ?Sized>(
    config: &HardCoreConfig,
    window: Window1D,
    rng: &mut R,
) -> Result<PointSet1D> {
    let d = config.hard_core_distance();
    let generating = sample_ppp(config.lambda_p, window.dilate(d)?, rng)?;
    Ok(matern_thin(&generating, d)?.restrict(window))
}

/// Intensity of the type-II hard-core process, `(1 - e^{-2 λ_p d}) / (2d)`.
pub fn first_order_density(lambda_p: f64, d: f64) -> f64 {
    -(-2.0 * lambda_p * d).exp_m1() / (2.0 * d)
}

/// Second-order product density at separation `r`.
///
/// Zero inside the hard core, the mark-competition term on `[d, 2d)` and
/// `λ²` once the two exclusion balls no longer overlap.
pub fn second_order_density(lambda_p: f64, d: f64, r: f64) -> f64 {
    let lambda = first_order_density(lambda_p, d);
    if r < d {
        0.0
    } else if r < 2.0 * d {
        let union = 2.0 * d + r;
        2.0 * lambda / r + 2.0 * (-lambda_p * union).exp_m1() / (r * union)
    } else {
        lambda * lambda
    }
}

/// One histogram bin of the pair-density estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairDensityBin {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
    pub pairs: u64,
}

/// Empirical first- and second-order densities.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    pub first_order: f64,
    pub bins: Vec<PairDensityBin>,
}

/// Estimates the intensity and a binned product density from independent patterns.
///
/// Reference points are restricted to the window eroded by `max_separation`
/// (minus sampling), so every partner at distance `<= max_separation` is
/// observed. Both neighbours sides are counted, hence the factor 2 in the
/// normalisation.
pub fn estimate_densities(
    patterns: &[PointSet1D],
    bin_width: f64,
    max_separation: f64,
) -> Result<DensityEstimate> {
    if patterns.is_empty() {
        return Err(Error::param("patterns", "need at least one pattern"));
    }
    ensure_positive("bin_width", bin_width)?;
    ensure_positive("max_separation", max_separation)?;
    let nbins = (max_separation / bin_width).round().max(1.0) as usize;
    let reach = nbins as f64 * bin_width;
    let mut counts = vec![0u64; nbins];
    let mut total_points = 0usize;
    let mut total_length = 0.0;
    let mut reference_length = 0.0;
    for pattern in patterns {
        total_points += pattern.len();
        total_length += pattern.window.length();
        let (lo, hi) = (pattern.window.lo + reach, pattern.window.hi - reach);
        if hi <= lo {
            continue;
        }
        reference_length += hi - lo;
        let xs = &pattern.points;
        for (i, &x) in xs.iter().enumerate() {
            if x < lo || x > hi {
                continue;
            }
            let right = xs[i + 1..]
                .iter()
                .take_while(|&&y| y - x < reach)
                .map(|&y| y - x);
            let left = xs[..i]
                .iter()
                .rev()
                .take_while(|&&y| x - y < reach)
                .map(|&y| x - y);
            for sep in right.chain(left) {
                let k = (sep / bin_width) as usize;
                if k < nbins {
                    counts[k] += 1;
                }
            }
        }
    }
    if reference_length <= 0.0 {
        return Err(Error::param(
            "max_separation",
            "eroded windows are empty; use longer windows or a smaller range",
        ));
    }
    let bins = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| PairDensityBin {
            lo: k as f64 * bin_width,
            hi: (k + 1) as f64 * bin_width,
            density: c as f64 / (2.0 * bin_width * reference_length),
            pairs: c,
        })
        .collect();
    Ok(DensityEstimate {
        first_order: total_points as f64 / total_length,
        bins,
    })
}
