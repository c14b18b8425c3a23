//! Experiment configuration, named figure reproductions, sweeps and CSV output.
//!
//! Configuration is a flat `key = value` text with `#` comments. Every key has
//! a default matching the reference highway setting; keys missing from a file
//! are reported as notices. Power levels are given in dBm and converted to
//! watts here; the analytic and simulation modules only see watts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardcore_process::HardCoreConfig;
use crate::lane_geometry::{AntennaCase, LaneLayout};
use crate::link_analysis::{
    mh_to_sf, sf_to_mh, uniform_sigma_grid, AnalyticModel, CcdfCurve, CurveKind, Geometry,
    ModelKind, RadioConfig,
};
use crate::monte_carlo::{run_campaign, SimConfig};

/// Keys a config file is expected to set; absent ones fall back to defaults with a notice.
const CORE_KEYS: [&str; 9] = [
    "lambda_p",
    "d_v",
    "d_s",
    "w_l",
    "alpha",
    "pt_dbm",
    "noise_dbm",
    "freq_hz",
    "d0_m",
];

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Grid of σ thresholds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GridSpec {
    /// `points` values `k / (points + 1)`.
    SigmaUniform { points: usize },
    /// `points` values log-spaced in MH units between `min_mh` and `max_mh`, preceded by σ = 0.
    MhLog {
        points: usize,
        min_mh: f64,
        max_mh: f64,
    },
}

impl GridSpec {
    pub fn sigmas(&self) -> Vec<f64> {
        match *self {
            GridSpec::SigmaUniform { points } => uniform_sigma_grid(points),
            GridSpec::MhLog {
                points,
                min_mh,
                max_mh,
            } => {
                let (a, b) = (min_mh.log10(), max_mh.log10());
                let steps = points.max(2) - 1;
                std::iter::once(0.0)
                    .chain((0..=steps).map(|k| {
                        let mh = 10f64.powf(a + (b - a) * k as f64 / steps as f64);
                        mh_to_sf(mh).unwrap_or(0.0)
                    }))
                    .collect()
            }
        }
    }
}

/// Every tunable parameter of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub lambda_p: f64,
    pub d_v: f64,
    pub d_s: f64,
    pub w_l: f64,
    pub alpha: f64,
    pub pt_dbm: f64,
    pub noise_dbm: f64,
    pub freq_hz: f64,
    pub d0_m: f64,
    pub cases: Vec<AntennaCase>,
    pub trials: usize,
    pub seed: u64,
    pub window_half_length: f64,
    pub grid: GridSpec,
    pub curves: Vec<CurveKind>,
    pub renormalize: bool,
    pub sweep_key: Option<String>,
    pub sweep_values: Vec<String>,
    /// Keys set explicitly by a file or an override.
    #[serde(skip)]
    pub explicit: Vec<String>,
    /// Defaults applied for keys a config file left out.
    #[serde(skip)]
    pub notices: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lambda_p: 0.1,
            d_v: 5.0,
            d_s: 145.0,
            w_l: 5.0,
            alpha: 4.0,
            pt_dbm: 30.0,
            noise_dbm: -90.0,
            freq_hz: 5e9,
            d0_m: 1.0,
            cases: AntennaCase::ALL.to_vec(),
            trials: 100_000,
            seed: 1,
            window_half_length: 4000.0,
            grid: GridSpec::SigmaUniform { points: 199 },
            curves: vec![
                CurveKind::Analytic,
                CurveKind::MonteCarlo,
                CurveKind::BaselinePpp,
            ],
            renormalize: true,
            sweep_key: None,
            sweep_values: Vec::new(),
            explicit: Vec::new(),
            notices: Vec::new(),
        }
    }
}

fn parse_f64(value: &str, line: usize, key: &str) -> Result<f64> {
    let v = value.trim();
    let parsed = match v.split_once('/') {
        Some((n, d)) => n
            .trim()
            .parse::<f64>()
            .ok()
            .zip(d.trim().parse::<f64>().ok())
            .map(|(n, d)| n / d),
        None => v.parse::<f64>().ok(),
    };
    parsed.ok_or_else(|| Error::Config {
        line,
        message: format!("`{key}` expects a number, got `{v}`"),
    })
}

fn parse_list<T>(
    value: &str,
    line: usize,
    key: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            parse(s).ok_or_else(|| Error::Config {
                line,
                message: format!("`{key}`: unrecognised entry `{s}`"),
            })
        })
        .collect()
}

impl ExperimentConfig {
    /// Parses a config file. `line` numbers in errors are 1-based.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            cfg.set_at(key.trim(), value.trim(), line)?;
        }
        let has = |k: &str| cfg.explicit.iter().any(|e| e == k);
        let missing: Vec<&str> = CORE_KEYS
            .iter()
            .copied()
            .filter(|k| !(has(k) || (*k == "d_s" && has("v_s"))))
            .collect();
        for key in missing {
            let notice = format!("`{key}` not set, using default {}", cfg.value_of(key));
            log::info!("{notice}");
            cfg.notices.push(notice);
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        ExperimentConfig::parse(&fs::read_to_string(path)?)
    }

    /// Applies a `key=value` override (command-line `--set`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.set_at(key, value, 0)
    }

    /// Applies an override given as a single `key=value` string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| Error::Config {
            line: 0,
            message: format!("override `{assignment}` is not `key=value`"),
        })?;
        self.set(k.trim(), v.trim())
    }

    fn set_at(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let num = |k: &str| parse_f64(value, line, k);
        let count = |k: &str| -> Result<usize> {
            let v = num(k)?;
            if v < 0.0 || v.fract() != 0.0 || v > 1e12 {
                return Err(Error::Config {
                    line,
                    message: format!("`{k}` expects a non-negative integer, got `{value}`"),
                });
            }
            Ok(v as usize)
        };
        match key {
            "lambda_p" => self.lambda_p = num(key)?,
            "d_v" => self.d_v = num(key)?,
            "d_s" => self.d_s = num(key)?,
            "v_s" => self.d_s = 2.0 * num(key)?,
            "w_l" => self.w_l = num(key)?,
            "alpha" => self.alpha = num(key)?,
            "pt_dbm" => self.pt_dbm = num(key)?,
            "pt_w" => self.pt_dbm = watts_to_dbm(num(key)?),
            "noise_dbm" => self.noise_dbm = num(key)?,
            "freq_hz" => self.freq_hz = num(key)?,
            "d0_m" => self.d0_m = num(key)?,
            "case" | "cases" => {
                self.cases = parse_list(value, line, key, AntennaCase::parse)?;
                if self.cases.is_empty() {
                    return Err(Error::Config {
                        line,
                        message: "`case` needs at least one of c1, c2".into(),
                    });
                }
            }
            "trials" => self.trials = count(key)?,
            "seed" => {
                self.seed = value.trim().parse().map_err(|_| Error::Config {
                    line,
                    message: format!("`seed` expects an unsigned integer, got `{value}`"),
                })?
            }
            "window_half_length" => self.window_half_length = num(key)?,
            "grid" => {
                self.grid = match value.trim() {
                    "sigma-uniform" => GridSpec::SigmaUniform {
                        points: self.grid_points(),
                    },
                    "mh-log" => GridSpec::MhLog {
                        points: self.grid_points(),
                        min_mh: 1e-4,
                        max_mh: 1e4,
                    },
                    other => {
                        return Err(Error::Config {
                            line,
                            message: format!(
                                "`grid` must be sigma-uniform or mh-log, got `{other}`"
                            ),
                        })
                    }
                }
            }
            "grid_points" => {
                let n = count(key)?;
                match &mut self.grid {
                    GridSpec::SigmaUniform { points } | GridSpec::MhLog { points, .. } => {
                        *points = n
                    }
                }
            }
            "grid_min_mh" | "grid_max_mh" => {
                let v = num(key)?;
                let GridSpec::MhLog { min_mh, max_mh, .. } = &mut self.grid else {
                    return Err(Error::Config {
                        line,
                        message: format!("`{key}` needs `grid = mh-log` earlier in the file"),
                    });
                };
                if key == "grid_min_mh" {
                    *min_mh = v
                } else {
                    *max_mh = v
                }
            }
            "curves" => self.curves = parse_list(value, line, key, CurveKind::parse)?,
            "renormalize" => {
                self.renormalize = match value.trim() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    other => {
                        return Err(Error::Config {
                            line,
                            message: format!("`renormalize` expects true/false, got `{other}`"),
                        })
                    }
                }
            }
            "sweep_key" => self.sweep_key = Some(value.trim().to_string()),
            "sweep_values" => {
                self.sweep_values = parse_list(value, line, key, |s| Some(s.to_string()))?
            }
            _ => {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{key}`"),
                })
            }
        }
        let canonical = if key == "v_s" { "d_s" } else { key };
        for k in [key, canonical] {
            if !self.explicit.iter().any(|e| e == k) {
                self.explicit.push(k.to_string());
            }
        }
        Ok(())
    }

    fn grid_points(&self) -> usize {
        match self.grid {
            GridSpec::SigmaUniform { points } | GridSpec::MhLog { points, .. } => points,
        }
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.iter().any(|e| e == key)
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "lambda_p" => format!("{} m^-1", self.lambda_p),
            "d_v" => format!("{} m", self.d_v),
            "d_s" => format!("{} m", self.d_s),
            "w_l" => format!("{} m", self.w_l),
            "alpha" => format!("{}", self.alpha),
            "pt_dbm" => format!("{} dBm", self.pt_dbm),
            "noise_dbm" => format!("{} dBm", self.noise_dbm),
            "freq_hz" => format!("{} Hz", self.freq_hz),
            "d0_m" => format!("{} m", self.d0_m),
            _ => String::new(),
        }
    }

    pub fn lane(&self) -> Result<HardCoreConfig> {
        HardCoreConfig::new(self.lambda_p, self.d_v, self.d_s)
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Ok(Geometry::symmetric(
            self.lane()?,
            LaneLayout::new(self.w_l)?,
        ))
    }

    pub fn radio(&self) -> Result<RadioConfig> {
        RadioConfig::new(
            dbm_to_watts(self.pt_dbm),
            dbm_to_watts(self.noise_dbm),
            self.freq_hz,
            self.d0_m,
            self.alpha,
        )
    }

    pub fn sim_config(&self, case: AntennaCase) -> Result<SimConfig> {
        let cfg = SimConfig {
            geometry: self.geometry()?,
            radio: self.radio()?,
            case,
            trials: self.trials,
            window_half_length: self.window_half_length,
            seed: self.seed,
            grid: self.grid.sigmas(),
            workers: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn model(&self, case: AntennaCase, kind: ModelKind) -> Result<AnalyticModel> {
        AnalyticModel::build(
            &self.geometry()?,
            &self.radio()?,
            case,
            kind,
            self.renormalize,
        )
    }

    /// Checks every invariant, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        self.radio()?;
        if self.trials == 0 && self.curves.contains(&CurveKind::MonteCarlo) {
            return Err(Error::param(
                "trials",
                "Monte Carlo curves need at least one trial",
            ));
        }
        if let GridSpec::MhLog { min_mh, max_mh, .. } = self.grid {
            if !(min_mh > 0.0 && max_mh > min_mh) {
                return Err(Error::param(
                    "grid_min_mh",
                    "need 0 < grid_min_mh < grid_max_mh",
                ));
            }
        }
        if self.grid_points() == 0 {
            return Err(Error::param("grid_points", "need at least one grid point"));
        }
        Ok(())
    }

    /// Canonical `key = value` listing of the parameters that affect results.
    pub fn snapshot(&self) -> String {
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_string(), v);
        };
        put("lambda_p", format!("{:?}", self.lambda_p));
        put("d_v", format!("{:?}", self.d_v));
        put("d_s", format!("{:?}", self.d_s));
        put("w_l", format!("{:?}", self.w_l));
        put("alpha", format!("{:?}", self.alpha));
        put("pt_dbm", format!("{:?}", self.pt_dbm));
        put("noise_dbm", format!("{:?}", self.noise_dbm));
        put("freq_hz", format!("{:?}", self.freq_hz));
        put("d0_m", format!("{:?}", self.d0_m));
        put(
            "cases",
            self.cases
                .iter()
                .map(|c| c.label())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        put(
            "window_half_length",
            format!("{:?}", self.window_half_length),
        );
        put("grid", format!("{:?}", self.grid));
        put(
            "curves",
            self.curves
                .iter()
                .map(|c| c.label())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("renormalize", self.renormalize.to_string());
        map.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k} = {v}");
            s
        })
    }

    /// FNV-1a hash of [`snapshot`](Self::snapshot), as 16 hex digits.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.snapshot().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// A rectangular result table with provenance comments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Emitted as leading `# ` lines (units, config hash, notes).
    pub comments: Vec<String>,
}

fn format_value(v: f64) -> String {
    if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        format!("{v:.12}")
    } else {
        format!("{v:.12e}")
    }
}

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        ResultTable {
            name: name.into(),
            columns,
            rows: Vec::new(),
            comments: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Contract(format!(
                "table `{}` has {} columns, row has {}",
                self.name,
                self.columns.len(),
                row.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// Tables, sidecar metadata and plot script produced by one experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutput {
    pub name: String,
    pub tables: Vec<ResultTable>,
    pub metadata: serde_json::Value,
    pub plot_script: String,
}

impl ExperimentOutput {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `<table>.csv`, `<name>.meta.json` and `<name>.gp` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            fs::write(&p, t.to_csv())?;
            written.push(p);
        }
        let meta = dir.join(format!("{}.meta.json", self.name));
        fs::write(&meta, serde_json::to_string_pretty(&self.metadata)? + "\n")?;
        written.push(meta);
        let gp = dir.join(format!("{}.gp", self.name));
        fs::write(&gp, &self.plot_script)?;
        written.push(gp);
        Ok(written)
    }
}

/// Named figure reproductions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedExperiment {
    Fig1,
    Fig2,
    Fig3,
}

impl NamedExperiment {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "fig1" => Some(NamedExperiment::Fig1),
            "fig2" => Some(NamedExperiment::Fig2),
            "fig3" => Some(NamedExperiment::Fig3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NamedExperiment::Fig1 => "fig1",
            NamedExperiment::Fig2 => "fig2",
            NamedExperiment::Fig3 => "fig3",
        }
    }

    /// Figure defaults; explicit settings in `base` win.
    pub fn configure(self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base.clone();
        let mut default = |key: &str, apply: &mut dyn FnMut(&mut ExperimentConfig)| {
            if !base.is_explicit(key) {
                apply(&mut cfg);
            }
        };
        match self {
            NamedExperiment::Fig1 => {
                default("d_s", &mut |c| c.d_s = 145.0);
            }
            NamedExperiment::Fig2 => {
                default("lambda_p", &mut |c| c.lambda_p = 0.2);
                default("d_s", &mut |c| c.d_s = 45.0);
                default("case", &mut |c| c.cases = vec![AntennaCase::Semicircle]);
                default("grid", &mut |c| {
                    c.grid = GridSpec::MhLog {
                        points: 161,
                        min_mh: 1e-4,
                        max_mh: 1e4,
                    }
                });
            }
            NamedExperiment::Fig3 => {
                default("d_s", &mut |c| c.d_s = 95.0);
            }
        }
        cfg
    }
}

/// σ at which the Fig. 3 sweep is evaluated: 1/2 in MH units.
pub const FIG3_SIGMA_MH: f64 = 0.5;

/// Transmit powers of the Fig. 3 sweep: 31 log-spaced values over 0.01–10 W.
pub fn fig3_power_grid() -> Vec<f64> {
    (0..=30)
        .map(|k| 10f64.powf(-2.0 + k as f64 / 10.0))
        .collect()
}

fn provenance(cfg: &ExperimentConfig) -> Vec<String> {
    vec![
        format!("config_hash: {}", cfg.hash()),
        "units: sigma = signal fraction [0,1); mh = sigma/(1-sigma); pt_w in W; probabilities dimensionless"
            .to_string(),
    ]
}

fn gnuplot(title: &str, xlabel: &str, files: &[(String, usize)], logx: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script; render with: gnuplot -p <this file>");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile commentschars '#'");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel 'CCDF'");
    let _ = writeln!(s, "set yrange [0:1]");
    if logx {
        let _ = writeln!(s, "set logscale x");
    }
    let mut parts = Vec::new();
    for (file, ncols) in files {
        for col in 2..=*ncols {
            parts.push(format!("'{file}' using 1:{col} with lines"));
        }
    }
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s
}

fn case_config(cfg: &ExperimentConfig, case: AntennaCase) -> Result<SimConfig> {
    cfg.sim_config(case)
}

/// Runs a named experiment.
pub fn run_named(which: NamedExperiment, base: &ExperimentConfig) -> Result<ExperimentOutput> {
    let cfg = which.configure(base);
    cfg.validate()?;
    match which {
        NamedExperiment::Fig1 => run_fig1(&cfg),
        NamedExperiment::Fig2 => run_fig2(&cfg),
        NamedExperiment::Fig3 => run_fig3(&cfg),
    }
}

fn run_fig1(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let alphas = if cfg.is_explicit("alpha") {
        vec![cfg.alpha]
    } else {
        vec![3.0, 4.0]
    };
    let cases = AntennaCase::ALL;
    let mut tables = Vec::new();
    let mut meta = serde_json::Map::new();
    let mut files = Vec::new();
    for &alpha in &alphas {
        let mut c = cfg.clone();
        c.alpha = alpha;
        let grid = c.grid.sigmas();
        let mut curves: Vec<CcdfCurve> = Vec::new();
        for case in cases {
            curves.push(
                c.model(case, ModelKind::HardCore)?
                    .sf_curve(CurveKind::Analytic, &grid)?,
            );
        }
        for case in cases {
            let mut mc = run_campaign(&case_config(&c, case)?)?;
            mc.metadata.config_hash = Some(c.hash());
            curves.push(mc);
        }
        for case in cases {
            curves.push(
                c.model(case, ModelKind::BaselinePpp)?
                    .sf_curve(CurveKind::BaselinePpp, &grid)?,
            );
        }
        let name = format!("fig1_alpha{}", alpha);
        let mut columns = vec!["sigma".to_string()];
        columns.extend(
            curves
                .iter()
                .map(|cv| format!("{}_{}", cv.kind.label(), cv.case.label())),
        );
        let mut table = ResultTable::new(&name, columns);
        table.comments = provenance(&c);
        table
            .comments
            .push(format!("alpha = {alpha}; d_s = {} m", c.d_s));
        for (i, &s) in grid.iter().enumerate() {
            let mut row = vec![s];
            row.extend(curves.iter().map(|cv| cv.values[i]));
            table.push_row(row)?;
        }
        files.push((format!("{name}.csv"), table.columns.len()));
        meta.insert(
            name.clone(),
            serde_json::json!({
                "config": &c,
                "config_hash": c.hash(),
                "curves": curves.iter().map(|cv| serde_json::json!({
                    "column": format!("{}_{}", cv.kind.label(), cv.case.label()),
                    "metadata": &cv.metadata,
                })).collect::<Vec<_>>(),
            }),
        );
        tables.push(table);
    }
    Ok(ExperimentOutput {
        name: "fig1".into(),
        plot_script: gnuplot("Signal-fraction CCDF", "sigma", &files, false),
        tables,
        metadata: serde_json::Value::Object(meta),
    })
}

/// Relative error of an approximation at the threshold where the exact CCDF equals `target`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ApproximationProbe {
    pub target: f64,
    pub gamma_t: f64,
    pub sigma: f64,
    pub exact: f64,
    pub approx: f64,
    pub rel_error_pct: f64,
}

/// Probes the small-threshold (`F1`) approximation at `target` coverage.
pub fn probe_small(model: &AnalyticModel, target: f64) -> Result<ApproximationProbe> {
    let gamma = model.gamma_for_coverage(target)?;
    let exact = model.coverage_ccdf(gamma)?;
    let approx = model.approx_small(gamma)?.value;
    Ok(probe(target, gamma, exact, approx))
}

/// Probes the large-threshold (`F2`) approximation at `target` coverage.
pub fn probe_large(model: &AnalyticModel, target: f64) -> Result<ApproximationProbe> {
    let gamma = model.gamma_for_coverage(target)?;
    let exact = model.coverage_ccdf(gamma)?;
    let approx = model.approx_large(gamma)?;
    Ok(probe(target, gamma, exact, approx))
}

fn probe(target: f64, gamma: f64, exact: f64, approx: f64) -> ApproximationProbe {
    ApproximationProbe {
        target,
        gamma_t: gamma,
        sigma: mh_to_sf(gamma).unwrap_or(f64::NAN),
        exact,
        approx,
        rel_error_pct: 100.0 * (approx - exact) / exact,
    }
}

fn run_fig2(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let grid = cfg.grid.sigmas();
    let mut tables = Vec::new();
    let mut columns = vec!["sigma".to_string(), "mh".to_string()];
    let mut per_case = Vec::new();
    for &case in &cfg.cases {
        let model = cfg.model(case, ModelKind::HardCore)?;
        let exact = model.sf_curve(CurveKind::Analytic, &grid)?;
        let f1 = model.sf_curve(CurveKind::ApproxSmall, &grid)?;
        let f2 = model.sf_curve(CurveKind::ApproxLarge, &grid)?;
        for kind in ["exact", "f1", "f2"] {
            columns.push(format!("{kind}_{}", case.label()));
        }
        per_case.push((case, model, [exact, f1, f2]));
    }
    let mut table = ResultTable::new("fig2", columns);
    table.comments = provenance(cfg);
    for (i, &s) in grid.iter().enumerate() {
        let mut row = vec![s, sf_to_mh(s)?];
        for (_, _, curves) in &per_case {
            row.extend(curves.iter().map(|c| c.values[i]));
        }
        table.push_row(row)?;
    }
    let mut probe_table = ResultTable::new(
        "fig2_probe",
        [
            "case",
            "approximation",
            "target_exact",
            "gamma_t",
            "sigma",
            "exact",
            "approx",
            "rel_error_pct",
        ]
        .map(String::from)
        .to_vec(),
    );
    probe_table.comments = provenance(cfg);
    probe_table.comments.push(
        "case: 1 = semicircle, 2 = omnidirectional; approximation: 1 = F1 (small), 2 = F2 (large)"
            .into(),
    );
    let mut probes = Vec::new();
    for (case, model, curves) in &per_case {
        let case_id = if *case == AntennaCase::Semicircle {
            1.0
        } else {
            2.0
        };
        let p1 = probe_small(model, 0.99)?;
        let p2 = probe_large(model, 0.05)?;
        for (id, p) in [(1.0, p1), (2.0, p2)] {
            probe_table.push_row(vec![
                case_id,
                id,
                p.target,
                p.gamma_t,
                p.sigma,
                p.exact,
                p.approx,
                p.rel_error_pct,
            ])?;
        }
        probes.push(serde_json::json!({
            "case": case.label(),
            "f1_at_0.99": p1,
            "f2_at_0.05": p2,
            "f1_clamped": curves[1].metadata.clamped,
            "distance_mass": model.mass,
        }));
    }
    let ncols = table.columns.len();
    tables.push(table);
    tables.push(probe_table);
    Ok(ExperimentOutput {
        name: "fig2".into(),
        plot_script: gnuplot(
            "Approximations of the SF CCDF",
            "sigma",
            &[("fig2.csv".into(), ncols)],
            true,
        ),
        tables,
        metadata: serde_json::json!({
            "config": cfg,
            "config_hash": cfg.hash(),
            "probes": probes,
        }),
    })
}

fn run_fig3(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let sigma = mh_to_sf(FIG3_SIGMA_MH)?;
    let powers = fig3_power_grid();
    let mut columns = vec!["pt_w".to_string()];
    let mut models = Vec::new();
    for &case in &cfg.cases {
        models.push((case, cfg.model(case, ModelKind::HardCore)?));
        columns.push(format!("sf_{}", case.label()));
    }
    for &case in &cfg.cases {
        columns.push(format!("limit_{}", case.label()));
    }
    let mut table = ResultTable::new("fig3", columns);
    table.comments = provenance(cfg);
    table.comments.push(format!(
        "sigma = {sigma} ({FIG3_SIGMA_MH} MH); alpha = {}; d_s = {} m",
        cfg.alpha, cfg.d_s
    ));
    let limits: Vec<f64> = models
        .iter()
        .map(|(_, m)| m.upper_limit(sigma))
        .collect::<Result<_>>()?;
    let noise_w = dbm_to_watts(cfg.noise_dbm);
    for &pt in &powers {
        let mut row = vec![pt];
        for (_, m) in &models {
            let radio = RadioConfig {
                pt_w: pt,
                noise_w,
                ..cfg.radio()?
            };
            row.push(m.with_rho(radio.rho())?.sf_ccdf(sigma)?);
        }
        row.extend(&limits);
        table.push_row(row)?;
    }
    let ncols = table.columns.len();
    Ok(ExperimentOutput {
        name: "fig3".into(),
        plot_script: gnuplot(
            "SF CCDF versus transmit power",
            "P_t [W]",
            &[("fig3.csv".into(), ncols)],
            true,
        ),
        tables: vec![table],
        metadata: serde_json::json!({
            "config": cfg,
            "config_hash": cfg.hash(),
            "sigma": sigma,
            "limits": models.iter().zip(&limits).map(|((c, _), l)| (c.label(), *l)).collect::<BTreeMap<_, _>>(),
        }),
    })
}

/// Runs a single-key sweep described by `cfg.sweep_key` / `cfg.sweep_values`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let key = cfg
        .sweep_key
        .clone()
        .ok_or_else(|| Error::param("sweep_key", "a sweep needs `sweep_key`"))?;
    if cfg.sweep_values.is_empty() {
        return Err(Error::param(
            "sweep_values",
            "a sweep needs at least one value",
        ));
    }
    if cfg.curves.is_empty() {
        return Err(Error::param("curves", "select at least one curve kind"));
    }
    let mut tables = Vec::new();
    let mut files = Vec::new();
    let mut meta = Vec::new();
    let mut summary_cols = vec![
        "sweep_value".to_string(),
        "rho".into(),
        "i1".into(),
        "i2".into(),
    ];
    for &case in &cfg.cases {
        for kind in &cfg.curves {
            summary_cols.push(format!("{}_{}_at_sigma_half", kind.label(), case.label()));
        }
    }
    let mut summary = ResultTable::new(format!("sweep_{key}_summary"), summary_cols);
    summary.comments = provenance(cfg);
    summary.comments.push(format!("sweep over `{key}`"));
    for value in &cfg.sweep_values {
        let mut c = cfg.clone();
        c.set(&key, value)?;
        c.validate()?;
        let numeric = parse_f64(value, 0, &key).unwrap_or(f64::NAN);
        let grid = c.grid.sigmas();
        let half = grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut columns = vec!["sigma".to_string(), "mh".to_string()];
        let mut curves = Vec::new();
        let mut constants = None;
        for &case in &c.cases {
            let model = c.model(case, ModelKind::HardCore)?;
            constants.get_or_insert((model.rho, model.interference.i1, model.interference.i2));
            for &kind in &c.curves {
                let curve = match kind {
                    CurveKind::MonteCarlo => {
                        let mut mc = run_campaign(&c.sim_config(case)?)?;
                        mc.metadata.config_hash = Some(c.hash());
                        mc
                    }
                    CurveKind::BaselinePpp => c
                        .model(case, ModelKind::BaselinePpp)?
                        .sf_curve(CurveKind::BaselinePpp, &grid)?,
                    other => model.sf_curve(other, &grid)?,
                };
                columns.push(format!("{}_{}", kind.label(), case.label()));
                curves.push(curve);
            }
        }
        let (rho, i1, i2) = constants.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        let mut srow = vec![numeric, rho, i1, i2];
        srow.extend(curves.iter().map(|cv| cv.values[half]));
        summary.push_row(srow)?;
        let name = format!("sweep_{key}_{value}");
        let mut table = ResultTable::new(&name, columns);
        table.comments = provenance(&c);
        table.comments.push(format!("{key} = {value}"));
        for (i, &s) in grid.iter().enumerate() {
            let mut row = vec![s, sf_to_mh(s)?];
            row.extend(curves.iter().map(|cv| cv.values[i]));
            table.push_row(row)?;
        }
        files.push((format!("{name}.csv"), table.columns.len()));
        meta.push(serde_json::json!({
            "value": value,
            "config": &c,
            "config_hash": c.hash(),
            "curves": curves.iter().map(|cv| serde_json::json!({
                "column": format!("{}_{}", cv.kind.label(), cv.case.label()),
                "metadata": &cv.metadata,
            })).collect::<Vec<_>>(),
        }));
        tables.push(table);
    }
    tables.push(summary);
    Ok(ExperimentOutput {
        name: format!("sweep_{key}"),
        plot_script: gnuplot(&format!("Sweep over {key}"), "sigma", &files, false),
        tables,
        metadata: serde_json::json!({ "sweep_key": key, "runs": meta }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-27);
        assert!((watts_to_dbm(10.0) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn parse_file_with_comments_and_speed() {
        let cfg = ExperimentConfig::parse(
            "# highway\nlambda_p = 1/5  # dense\nv_s = 22.5\nd_v=5\nw_l = 5\nalpha = 3\npt_dbm = 30\nnoise_dbm = -90\nfreq_hz = 5e9\nd0_m = 1\ncase = c1\n",
        )
        .unwrap();
        assert_eq!(cfg.lambda_p, 0.2);
        assert_eq!(cfg.d_s, 45.0);
        assert_eq!(cfg.cases, vec![AntennaCase::Semicircle]);
        assert!(cfg.notices.is_empty(), "{:?}", cfg.notices);
    }

    #[test]
    fn missing_keys_are_defaulted_with_notice() {
        let cfg = ExperimentConfig::parse("alpha = 3\n").unwrap();
        assert_eq!(cfg.lambda_p, 0.1);
        assert!(cfg.notices.iter().any(|n| n.contains("lambda_p")));
        assert!(!cfg.notices.iter().any(|n| n.contains("alpha")));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match ExperimentConfig::parse("alpha = 3\nbogus = 1\n") {
            Err(Error::Config { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse("\n\nalpha = three\n") {
            Err(Error::Config { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse("alpha 3\n") {
            Err(Error::Config { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invariant_violations_name_the_key() {
        let cfg = ExperimentConfig::parse("lambda_p = -1\n").unwrap();
        match cfg.validate() {
            Err(Error::Parameter { name, .. }) => assert_eq!(name, "lambda_p"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_tracks_parameters_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.notices.push("x".into());
        assert_eq!(a.hash(), b.hash());
        b.set("alpha", "3").unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn grids() {
        let g = GridSpec::MhLog {
            points: 9,
            min_mh: 1e-2,
            max_mh: 1e2,
        }
        .sigmas();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.0);
        assert!((sf_to_mh(g[5]).unwrap() - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn table_rows_must_match_columns() {
        let mut t = ResultTable::new("t", vec!["a".into(), "b".into()]);
        assert!(t.push_row(vec![1.0]).is_err());
        t.push_row(vec![0.5, 1e-7]).unwrap();
        t.comments.push("note".into());
        assert_eq!(
            t.to_csv(),
            "# note\na,b\n0.500000000000,1.000000000000e-7\n"
        );
    }

    #[test]
    fn figure_defaults_yield_to_explicit_settings() {
        let mut base = ExperimentConfig::default();
        let fig2 = NamedExperiment::Fig2.configure(&base);
        assert_eq!((fig2.lambda_p, fig2.d_s), (0.2, 45.0));
        base.set("d_s", "60").unwrap();
        assert_eq!(NamedExperiment::Fig2.configure(&base).d_s, 60.0);
        assert_eq!(
            NamedExperiment::Fig3
                .configure(&ExperimentConfig::default())
                .d_s,
            95.0
        );
    }

    #[test]
    fn power_grid_spans_three_decades() {
        let p = fig3_power_grid();
        assert_eq!(p.len(), 31);
        assert!((p[0] - 0.01).abs() < 1e-15 && (p[30] - 10.0).abs() < 1e-12);
    }
}
