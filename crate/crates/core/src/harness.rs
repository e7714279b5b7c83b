//! Experiment runner: seeded target placements per zone, both exploration
//! methods per placement, and CSV tables of the resulting search times.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curiosity::CuriosityParams;
use crate::explorer::{
    explore, reachable_in_truth, ExploreError, ExplorerConfig, Method, MotionConfig,
};
use crate::mapping::{ObjectParams, OccupancyParams};
use crate::mission::TetherState;
use crate::sensor::{default_ray_count, CameraConfig, IrConfig};
use crate::world::{load_map, load_zones, sample_zone_points, Cell, GridWorld, MapError, Zone, ZoneError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Map { path: PathBuf, source: MapError },
    #[error("{path}: {source}")]
    Zone { path: PathBuf, source: ZoneError },
    #[error("trial failed: {0}")]
    Trial(#[from] ExploreError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 2 for invariant violations found while running, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Trial(ExploreError::Invariant(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEntry {
    pub id: String,
    pub map: PathBuf,
    pub zones: PathBuf,
}

fn default_samples() -> usize {
    20
}
fn default_seed() -> u64 {
    2022
}
fn default_alpha() -> Vec<f64> {
    vec![60.0]
}
fn default_beta() -> Vec<f64> {
    vec![30.0]
}
fn default_range() -> f64 {
    3.0
}
fn default_lambda1() -> f64 {
    0.10
}
fn default_lambda2() -> f64 {
    0.95
}
fn default_a() -> f64 {
    -0.5
}
fn default_b() -> f64 {
    0.1
}
fn default_kappa() -> f64 {
    0.62
}
fn default_p_hit() -> f64 {
    0.7
}
fn default_p_miss() -> f64 {
    0.3
}
fn default_p_miss_cam() -> f64 {
    0.3
}
fn default_p_free_max() -> f64 {
    0.35
}
fn default_p_occ_min() -> f64 {
    0.65
}
fn default_velocity() -> f64 {
    2.0
}
fn default_budget() -> f64 {
    600.0
}
fn default_threshold() -> f64 {
    0.95
}
fn default_d_min() -> f64 {
    0.2
}
fn default_tether_total() -> f64 {
    12.0
}
fn default_tether_entry() -> f64 {
    3.0
}
fn default_uav_height() -> f64 {
    3.0
}

/// Every experiment parameter; all fields have defaults. Angles are given in
/// degrees in the file and converted to radians when building sensor configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub maps: Vec<MapEntry>,
    #[serde(default = "default_samples")]
    pub samples_per_zone: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha_deg: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta_deg: Vec<f64>,
    #[serde(default = "default_range")]
    pub d_ir: f64,
    #[serde(default = "default_range")]
    pub d_cam: f64,
    /// Defaults to the value giving conf = 0.95 at one fifth of `d_cam`.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub ir_rays: Option<usize>,
    #[serde(default)]
    pub camera_rays: Option<usize>,
    #[serde(default = "default_lambda1")]
    pub lambda1: f64,
    #[serde(default = "default_lambda2")]
    pub lambda2: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_p_hit")]
    pub p_hit: f64,
    #[serde(default = "default_p_miss")]
    pub p_miss: f64,
    #[serde(default = "default_p_miss_cam")]
    pub p_miss_cam: f64,
    #[serde(default = "default_p_free_max")]
    pub p_free_max: f64,
    #[serde(default = "default_p_occ_min")]
    pub p_occ_min: f64,
    #[serde(default = "default_velocity")]
    pub max_velocity: f64,
    #[serde(default)]
    pub rotation_penalty: f64,
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default = "default_threshold")]
    pub detection_threshold: f64,
    #[serde(default = "default_d_min")]
    pub d_min: f64,
    #[serde(default = "default_tether_total")]
    pub tether_length: f64,
    #[serde(default = "default_tether_entry")]
    pub tether_entry: f64,
    #[serde(default = "default_uav_height")]
    pub uav_height: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; map and zone paths are resolved relative to it.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = read(path)?;
        let mut cfg = Self::from_toml(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for m in &mut cfg.maps {
            m.map = dir.join(&m.map);
            m.zones = dir.join(&m.zones);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        let positive = [
            ("d_ir", self.d_ir),
            ("d_cam", self.d_cam),
            ("b", self.b),
            ("max_velocity", self.max_velocity),
            ("budget", self.budget),
            ("d_min", self.d_min),
            ("uav_height", self.uav_height),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return fail(format!("eta must be positive, got {eta}"));
            }
        }
        if !(self.lambda1 < self.lambda2) {
            return fail("lambda1 must be below lambda2".into());
        }
        for (name, p) in [
            ("p_hit", self.p_hit),
            ("p_miss", self.p_miss),
            ("p_miss_cam", self.p_miss_cam),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return fail(format!("{name} must lie in (0, 1), got {p}"));
            }
        }
        if !(self.p_free_max <= self.p_occ_min) {
            return fail("p_free_max must not exceed p_occ_min".into());
        }
        for a in self.alpha_deg.iter().chain(&self.beta_deg) {
            if !(*a > 0.0 && *a <= 360.0) {
                return fail(format!("field of view {a} deg outside (0, 360]"));
            }
        }
        if self.alpha_deg.is_empty() || self.beta_deg.is_empty() {
            return fail("alpha_deg and beta_deg need at least one value".into());
        }
        if self.samples_per_zone == 0 {
            return fail("samples_per_zone must be at least 1".into());
        }
        if self.rotation_penalty < 0.0 {
            return fail("rotation_penalty must be non-negative".into());
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(0.95 * 0.2 * self.d_cam)
    }

    pub fn explorer_config(&self, alpha_deg: f64, beta_deg: f64) -> ExplorerConfig {
        let alpha = alpha_deg.to_radians();
        let beta = beta_deg.to_radians();
        ExplorerConfig {
            ir: IrConfig {
                fov: beta,
                max_range: self.d_ir,
                ray_count: self.ir_rays.unwrap_or_else(|| default_ray_count(beta)),
            },
            camera: CameraConfig {
                fov: alpha,
                max_range: self.d_cam,
                eta: self.eta(),
                ray_count: self.camera_rays.unwrap_or_else(|| default_ray_count(alpha)),
            },
            occupancy: OccupancyParams {
                p_hit: self.p_hit,
                p_miss: self.p_miss,
                p_free_max: self.p_free_max,
                p_occ_min: self.p_occ_min,
            },
            object: ObjectParams {
                lambda1: self.lambda1,
                lambda2: self.lambda2,
                p_miss_cam: self.p_miss_cam,
            },
            curiosity: CuriosityParams {
                a: self.a,
                b: self.b,
                kappa: self.kappa,
            },
            motion: MotionConfig {
                max_velocity: self.max_velocity,
                rotation_penalty: self.rotation_penalty,
            },
            budget: self.budget,
            detection_threshold: self.detection_threshold,
        }
    }

    pub fn tether(&self) -> TetherState {
        TetherState {
            total: self.tether_length,
            entry: self.tether_entry,
            released: 0.0,
            uav_height: self.uav_height,
        }
    }
}

pub(crate) fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A map with its zones, loaded and validated.
#[derive(Debug, Clone)]
pub struct Arena {
    pub id: String,
    pub world: GridWorld,
    pub zones: Vec<Zone>,
}

impl Arena {
    pub fn load(entry: &MapEntry) -> Result<Self, HarnessError> {
        let world = load_map(&read(&entry.map)?).map_err(|source| HarnessError::Map {
            path: entry.map.clone(),
            source,
        })?;
        let zones = load_zones(&read(&entry.zones)?, &world).map_err(|source| HarnessError::Zone {
            path: entry.zones.clone(),
            source,
        })?;
        Ok(Self {
            id: entry.id.clone(),
            world,
            zones,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub map: String,
    pub zone: u8,
    pub sample: usize,
    pub placement: Cell,
    pub method: Method,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub seed: u64,
    pub delta_t: f64,
    pub found: bool,
    pub reachable: bool,
    pub steps: usize,
    pub path_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub map: String,
    pub zone: u8,
    pub method: Method,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub trials: usize,
    pub found: usize,
    pub missed: usize,
    pub unreachable: usize,
    pub mean_delta_t: f64,
    pub std_delta_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneExperiment {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Per (map, zone) placement seed, independent of the fov values and method.
pub fn placement_seed(seed: u64, map_index: usize, zone: u8) -> u64 {
    seed ^ (map_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (zone as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

struct Job<'a> {
    arena: &'a Arena,
    zone: u8,
    sample: usize,
    placement: Cell,
    method: Method,
    alpha: f64,
    beta: f64,
}

fn run_job(job: &Job<'_>, cfg: &ExperimentConfig) -> Result<TrialRecord, HarnessError> {
    let world = &job.arena.world;
    let mut rec = TrialRecord {
        map: job.arena.id.clone(),
        zone: job.zone,
        sample: job.sample,
        placement: job.placement,
        method: job.method,
        alpha_deg: job.alpha,
        beta_deg: job.beta,
        seed: cfg.seed,
        delta_t: 0.0,
        found: false,
        reachable: reachable_in_truth(world, world.start, job.placement),
        steps: 0,
        path_length: 0.0,
    };
    if !rec.reachable {
        return Ok(rec);
    }
    let placed = world.with_target(Some(job.placement)).ok_or_else(|| {
        HarnessError::Config(format!("placement {} is not a free cell", job.placement))
    })?;
    let ecfg = cfg.explorer_config(job.alpha, job.beta);
    let result = explore(&placed, &ecfg, job.method)?;
    rec.delta_t = result.delta_t;
    rec.found = result.found;
    rec.steps = result.step_log.len();
    rec.path_length = result.path_length;
    Ok(rec)
}

fn record_key(r: &TrialRecord, map_order: &BTreeMap<String, usize>) -> (usize, u64, u64, u8, usize, Method) {
    (
        map_order[&r.map],
        r.alpha_deg.to_bits(),
        r.beta_deg.to_bits(),
        r.zone,
        r.sample,
        r.method,
    )
}

/// Runs every (map, zone, placement, method, alpha, beta) trial.
pub fn run_zone_experiment(cfg: &ExperimentConfig) -> Result<ZoneExperiment, HarnessError> {
    cfg.validate()?;
    if cfg.maps.is_empty() {
        return Err(HarnessError::Config("no maps configured".into()));
    }
    let arenas = cfg
        .maps
        .iter()
        .map(Arena::load)
        .collect::<Result<Vec<_>, _>>()?;
    run_on_arenas(cfg, &arenas)
}

pub fn run_on_arenas(cfg: &ExperimentConfig, arenas: &[Arena]) -> Result<ZoneExperiment, HarnessError> {
    let mut jobs = Vec::new();
    for (mi, arena) in arenas.iter().enumerate() {
        for zone in &arena.zones {
            let placements = sample_zone_points(
                zone,
                cfg.samples_per_zone,
                placement_seed(cfg.seed, mi, zone.id),
            )
            .map_err(|source| HarnessError::Zone {
                path: PathBuf::from(&arena.id),
                source,
            })?;
            for &alpha in &cfg.alpha_deg {
                for &beta in &cfg.beta_deg {
                    for (sample, &placement) in placements.iter().enumerate() {
                        for method in [Method::Cdos, Method::Baseline] {
                            jobs.push(Job {
                                arena,
                                zone: zone.id,
                                sample,
                                placement,
                                method,
                                alpha,
                                beta,
                            });
                        }
                    }
                }
            }
        }
    }
    let mut records = jobs
        .par_iter()
        .map(|j| run_job(j, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let order: BTreeMap<String, usize> = arenas
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id.clone(), i))
        .collect();
    records.sort_by_key(|r| record_key(r, &order));
    let summary = summarize(&records, &order);
    Ok(ZoneExperiment { records, summary })
}

/// Mean and sample standard deviation of `delta_t` over found trials.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

fn summarize(records: &[TrialRecord], order: &BTreeMap<String, usize>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, u64, u64, u8, Method), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((
                order[&r.map],
                r.alpha_deg.to_bits(),
                r.beta_deg.to_bits(),
                r.zone,
                r.method,
            ))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let times: Vec<f64> = g.iter().filter(|r| r.found).map(|r| r.delta_t).collect();
            let (mean, std) = mean_std(&times);
            let first = g[0];
            SummaryRow {
                map: first.map.clone(),
                zone: first.zone,
                method: first.method,
                alpha_deg: first.alpha_deg,
                beta_deg: first.beta_deg,
                trials: g.len(),
                found: times.len(),
                missed: g.iter().filter(|r| r.reachable && !r.found).count(),
                unreachable: g.iter().filter(|r| !r.reachable).count(),
                mean_delta_t: mean,
                std_delta_t: std,
            }
        })
        .collect()
}

impl ZoneExperiment {
    pub fn summary_for(&self, map: &str, zone: u8, method: Method) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.map == map && s.zone == zone && s.method == method)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Alpha,
    Beta,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(SweepAxis::Alpha),
            "beta" => Ok(SweepAxis::Beta),
            _ => Err(format!("cannot vary {s:?}; expected alpha or beta")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub map: String,
    pub axis: SweepAxis,
    pub value_deg: f64,
    pub method: Method,
    pub trials: usize,
    pub found: usize,
    pub mean_delta_t: f64,
    pub std_delta_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FovSweep {
    pub experiment: ZoneExperiment,
    pub table: Vec<SweepRow>,
}

/// Zone experiment over each value of the varied fov, the other fov held at
/// the first configured value. Means pool every zone.
pub fn run_fov_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<FovSweep, HarnessError> {
    if values.len() < 2 {
        return Err(HarnessError::Config(
            "a sweep needs at least two fov values".into(),
        ));
    }
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Alpha => {
            c.alpha_deg = values.to_vec();
            c.beta_deg.truncate(1);
        }
        SweepAxis::Beta => {
            c.beta_deg = values.to_vec();
            c.alpha_deg.truncate(1);
        }
    }
    let experiment = run_zone_experiment(&c)?;
    let table = sweep_table(&experiment.records, axis, values, &c);
    Ok(FovSweep { experiment, table })
}

fn sweep_table(
    records: &[TrialRecord],
    axis: SweepAxis,
    values: &[f64],
    cfg: &ExperimentConfig,
) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for m in &cfg.maps {
        for &v in values {
            for method in [Method::Cdos, Method::Baseline] {
                let group: Vec<&TrialRecord> = records
                    .iter()
                    .filter(|r| {
                        r.map == m.id
                            && r.method == method
                            && match axis {
                                SweepAxis::Alpha => r.alpha_deg == v,
                                SweepAxis::Beta => r.beta_deg == v,
                            }
                    })
                    .collect();
                let times: Vec<f64> = group.iter().filter(|r| r.found).map(|r| r.delta_t).collect();
                let (mean, std) = mean_std(&times);
                rows.push(SweepRow {
                    map: m.id.clone(),
                    axis,
                    value_deg: v,
                    method,
                    trials: group.len(),
                    found: times.len(),
                    mean_delta_t: mean,
                    std_delta_t: std,
                });
            }
        }
    }
    rows
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Config(format!("csv flush: {e}")))
}

pub const TRIAL_HEADER: [&str; 14] = [
    "map",
    "zone",
    "sample",
    "placement_x",
    "placement_y",
    "method",
    "alpha_deg",
    "beta_deg",
    "seed",
    "delta_t",
    "found",
    "reachable",
    "steps",
    "path_length",
];

pub fn trials_csv(records: &[TrialRecord]) -> Result<Vec<u8>, HarnessError> {
    csv_bytes(
        &TRIAL_HEADER,
        records.iter().map(|r| {
            vec![
                r.map.clone(),
                r.zone.to_string(),
                r.sample.to_string(),
                r.placement.x.to_string(),
                r.placement.y.to_string(),
                r.method.as_str().to_string(),
                fmt_f(r.alpha_deg),
                fmt_f(r.beta_deg),
                r.seed.to_string(),
                fmt_f(r.delta_t),
                r.found.to_string(),
                r.reachable.to_string(),
                r.steps.to_string(),
                fmt_f(r.path_length),
            ]
        }),
    )
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>, HarnessError> {
    csv_bytes(
        &[
            "map",
            "zone",
            "method",
            "alpha_deg",
            "beta_deg",
            "trials",
            "found",
            "missed",
            "unreachable",
            "mean_delta_t",
            "std_delta_t",
        ],
        rows.iter().map(|r| {
            vec![
                r.map.clone(),
                r.zone.to_string(),
                r.method.as_str().to_string(),
                fmt_f(r.alpha_deg),
                fmt_f(r.beta_deg),
                r.trials.to_string(),
                r.found.to_string(),
                r.missed.to_string(),
                r.unreachable.to_string(),
                fmt_f(r.mean_delta_t),
                fmt_f(r.std_delta_t),
            ]
        }),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, HarnessError> {
    csv_bytes(
        &[
            "map",
            "vary",
            "value_deg",
            "method",
            "trials",
            "found",
            "mean_delta_t",
            "std_delta_t",
        ],
        rows.iter().map(|r| {
            vec![
                r.map.clone(),
                match r.axis {
                    SweepAxis::Alpha => "alpha".to_string(),
                    SweepAxis::Beta => "beta".to_string(),
                },
                fmt_f(r.value_deg),
                r.method.as_str().to_string(),
                r.trials.to_string(),
                r.found.to_string(),
                fmt_f(r.mean_delta_t),
                fmt_f(r.std_delta_t),
            ]
        }),
    )
}

/// Parses a trial CSV back into records.
pub fn parse_trials_csv(bytes: &[u8]) -> Result<Vec<TrialRecord>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or_default();
        let num = |i: usize| -> Result<f64, HarnessError> {
            get(i)
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad number {:?}", get(i))))
        };
        out.push(TrialRecord {
            map: get(0).to_string(),
            zone: num(1)? as u8,
            sample: num(2)? as usize,
            placement: Cell::new(num(3)? as usize, num(4)? as usize),
            method: get(5).parse().map_err(HarnessError::Config)?,
            alpha_deg: num(6)?,
            beta_deg: num(7)?,
            seed: get(8)
                .parse()
                .map_err(|_| HarnessError::Config("bad seed".into()))?,
            delta_t: num(9)?,
            found: get(10) == "true",
            reachable: get(11) == "true",
            steps: num(12)? as usize,
            path_length: num(13)?,
        });
    }
    Ok(out)
}
