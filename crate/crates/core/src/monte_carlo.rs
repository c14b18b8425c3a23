//! Monte Carlo ground truth for the signal fraction.
//!
//! Each trial deploys a fresh two-lane field, associates the typical vehicle
//! with its nearest visible adjacent-lane vehicle, draws unit-mean exponential
//! fading powers and records `SINR` and `SF = SINR / (SINR + 1)`. Powers are
//! expressed relative to `P_t C`, so noise enters only through `ρ`.
//!
//! Trial `i` draws all of its randomness from child streams of
//! `StreamSeed::new(seed).child(i)`, which makes a campaign independent of the
//! number of workers. Fading powers are drawn in order of increasing link
//! distance, so enlarging the window only appends draws for the added far
//! vehicles.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lane_geometry::{deploy_field, nearest_vehicle, AntennaCase, VehicleField};
use crate::link_analysis::{
    AnalyticModel, CcdfCurve, CurveKind, CurveMetadata, Geometry, RadioConfig,
};
use crate::rng::StreamSeed;
use crate::stats::empirical_ccdf;

const TAG_FIELD: u64 = 10;
const TAG_FADING: u64 = 11;

/// Share of discarded trials above which a campaign carries a warning.
pub const DISCARD_WARNING_RATE: f64 = 0.2;

/// Minimum ratio between the window half-length and the largest hard-core distance.
pub const MIN_WINDOW_RATIO: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub geometry: Geometry,
    pub radio: RadioConfig,
    pub case: AntennaCase,
    pub trials: usize,
    pub window_half_length: f64,
    pub seed: u64,
    /// σ thresholds at which the empirical CCDF is reported.
    pub grid: Vec<f64>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "need at least one trial"));
        }
        let dmax = self
            .geometry
            .lanes
            .iter()
            .map(|l| l.hard_core_distance())
            .fold(0.0, f64::max);
        if self.window_half_length.is_nan() || self.window_half_length < MIN_WINDOW_RATIO * dmax {
            return Err(Error::param(
                "window_half_length",
                format!(
                    "must be at least {MIN_WINDOW_RATIO} x the hard-core distance ({}), got {}",
                    MIN_WINDOW_RATIO * dmax,
                    self.window_half_length
                ),
            ));
        }
        if let Some(s) = self.grid.iter().find(|s| !(0.0..1.0).contains(*s)) {
            return Err(Error::param("grid", format!("sigma {s} outside [0, 1)")));
        }
        if self.workers == Some(0) {
            return Err(Error::param("workers", "need at least one worker"));
        }
        Ok(())
    }
}

/// Received powers of one trial, relative to `P_t C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub signal: f64,
    pub interference: f64,
    pub noise: f64,
    pub sinr: f64,
    pub sf: f64,
    /// No interference and no noise: `sinr` is infinite and `sf` is pinned just below 1.
    pub saturated: bool,
}

/// Simulates one link on a deployed field.
///
/// Returns `None` when the antenna sees no adjacent-lane vehicle.
pub fn simulate_trial<R: Rng + ?Sized>(
    field: &VehicleField,
    rho: f64,
    alpha: f64,
    case: AntennaCase,
    rng: &mut R,
) -> Option<TrialOutcome> {
    let server = nearest_vehicle(field, case)?;
    let w = field.layout.w_l;
    let path = |d2: f64| d2.powf(-0.5 * alpha);

    // Squared distances of every visible interferer; the receiver at the origin
    // and the server are not transmitters here.
    let mut interferers: Vec<f64> = field
        .lane1
        .points()
        .iter()
        .filter(|&&x| x != 0.0 && case.admits(x))
        .map(|&x| x * x)
        .chain(
            field
                .lane2
                .points()
                .iter()
                .enumerate()
                .filter(|&(i, &x)| i != server.index && case.admits(x))
                .map(|(_, &x)| x * x + w * w),
        )
        .collect();
    interferers.sort_by(f64::total_cmp);

    let h: f64 = Exp1.sample(rng);
    let signal = h * path(server.x * server.x + w * w);
    let interference: f64 = interferers
        .iter()
        .map(|&d2| {
            let g: f64 = Exp1.sample(rng);
            g * path(d2)
        })
        .sum();
    Some(TrialOutcome::from_powers(signal, interference, rho))
}

impl TrialOutcome {
    /// Builds an outcome from received powers; `sf` is derived from `sinr`.
    pub fn from_powers(signal: f64, interference: f64, rho: f64) -> Self {
        let denom = interference + rho;
        let (sinr, sf, saturated) = if denom == 0.0 {
            (f64::INFINITY, 1.0 - f64::EPSILON, true)
        } else {
            let sinr = signal / denom;
            let sf = sinr / (sinr + 1.0);
            if sf < 1.0 {
                (sinr, sf, false)
            } else {
                (sinr, 1.0 - f64::EPSILON, true)
            }
        };
        TrialOutcome {
            signal,
            interference,
            noise: rho,
            sinr,
            sf,
            saturated,
        }
    }
}

/// Runs trial `index` of a campaign.
pub fn run_trial(config: &SimConfig, index: u64) -> Result<Option<TrialOutcome>> {
    let seed = StreamSeed::new(config.seed).child(index);
    let field = deploy_field(
        config.geometry.lanes,
        config.geometry.layout,
        config.window_half_length,
        seed.child(TAG_FIELD),
    )?;
    let mut rng = seed.child(TAG_FADING).rng();
    Ok(simulate_trial(
        &field,
        config.radio.rho(),
        config.radio.alpha,
        config.case,
        &mut rng,
    ))
}

/// Every trial outcome in index order; `None` marks a discarded trial.
pub fn collect_outcomes(config: &SimConfig) -> Result<Vec<Option<TrialOutcome>>> {
    config.validate()?;
    let run = || {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|i| run_trial(config, i))
            .collect::<Result<Vec<_>>>()
    };
    match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::param("workers", e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Empirical signal-fraction CCDF over the configured grid.
pub fn run_campaign(config: &SimConfig) -> Result<CcdfCurve> {
    let outcomes = collect_outcomes(config)?;
    Ok(curve_from_outcomes(config, &outcomes))
}

pub fn curve_from_outcomes(config: &SimConfig, outcomes: &[Option<TrialOutcome>]) -> CcdfCurve {
    let mut sfs: Vec<f64> = outcomes.iter().flatten().map(|o| o.sf).collect();
    sfs.sort_by(f64::total_cmp);
    let discarded = outcomes.len() - sfs.len();
    let saturated = outcomes.iter().flatten().filter(|o| o.saturated).count();
    let mut warnings = Vec::new();
    let rate = discarded as f64 / outcomes.len().max(1) as f64;
    if rate > DISCARD_WARNING_RATE {
        warnings.push(format!(
            "{:.1}% of trials had no visible serving vehicle",
            100.0 * rate
        ));
        log::warn!("{}", warnings[0]);
    }
    CcdfCurve {
        grid: config.grid.clone(),
        values: empirical_ccdf(&sfs, &config.grid),
        kind: CurveKind::MonteCarlo,
        case: config.case,
        metadata: CurveMetadata {
            seed: Some(config.seed),
            trials: Some(outcomes.len()),
            discarded: Some(discarded),
            saturated: Some(saturated),
            window_half_length: Some(config.window_half_length),
            warnings,
            ..CurveMetadata::default()
        },
    }
}

/// Analytic CCDF with both lanes replaced by Poisson lanes of equal intensity.
pub fn baseline_ppp_ccdf(config: &SimConfig) -> Result<CcdfCurve> {
    let model = AnalyticModel::baseline_ppp(&config.geometry, &config.radio, config.case)?;
    model.sf_curve(CurveKind::BaselinePpp, &config.grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardcore_process::{HardCoreConfig, PointSet1D, Window1D};
    use crate::lane_geometry::LaneLayout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(lane1: &[f64], lane2: &[f64]) -> VehicleField {
        let w = Window1D::centered(1000.0).unwrap();
        let cfg = HardCoreConfig::new(0.1, 5.0, 10.0).unwrap();
        VehicleField {
            lane1: PointSet1D::unmarked(lane1.to_vec(), w).unwrap(),
            lane2: PointSet1D::unmarked(lane2.to_vec(), w).unwrap(),
            layout: LaneLayout::new(5.0).unwrap(),
            configs: [cfg, cfg],
        }
    }

    #[test]
    fn lone_server_without_noise_saturates() {
        let f = field(&[0.0], &[30.0]);
        let o = simulate_trial(
            &f,
            0.0,
            4.0,
            AntennaCase::Omnidirectional,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert!(o.saturated);
        assert_eq!(o.sinr, f64::INFINITY);
        assert!(o.sf < 1.0 && o.sf > 1.0 - 1e-15);
    }

    #[test]
    fn equal_interferer_gives_half() {
        let p = 30f64.hypot(5.0).powi(-4);
        let o = TrialOutcome::from_powers(0.7 * p, 0.7 * p, 0.0);
        assert_eq!(o.sinr, 1.0);
        assert_eq!(o.sf, 0.5);
    }

    #[test]
    fn semicircle_ignores_vehicles_behind() {
        let f = field(&[-20.0, 0.0], &[-10.0, 40.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let o = simulate_trial(&f, 1e-9, 4.0, AntennaCase::Semicircle, &mut rng).unwrap();
        assert_eq!(o.interference, 0.0);
        assert!(simulate_trial(
            &field(&[0.0], &[-10.0]),
            0.0,
            4.0,
            AntennaCase::Semicircle,
            &mut rng
        )
        .is_none());
    }

    #[test]
    fn identity_holds_on_every_outcome() {
        let f = field(&[-300.0, 0.0, 200.0], &[-50.0, 25.0, 400.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            for case in AntennaCase::ALL {
                let o = simulate_trial(&f, 4e-8, 3.0, case, &mut rng).unwrap();
                assert_eq!(o.sf, o.sinr / (o.sinr + 1.0));
                assert!(o.sf >= 0.0 && o.sf < 1.0);
            }
        }
    }
}
