//! Belief maps: the IR occupancy grid and the camera object map.
//!
//! Both maps keep raw log-odds per cell and start from a uniform 0.5 prior,
//! so the recursive Bayesian update reduces to adding the log-odds of each
//! observation's inverse-model probability.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sensor::{detection_confidence, CameraObservation, IrScan};
use crate::world::{traverse, Cell, GridGeometry, RayEnd};

/// Saturation bound on stored log-odds.
pub const LOG_ODDS_LIMIT: f64 = 20.0;

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn logistic(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

fn saturate(l: f64) -> f64 {
    l.clamp(-LOG_ODDS_LIMIT, LOG_ODDS_LIMIT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogOddsGrid {
    pub geometry: GridGeometry,
    values: Vec<f64>,
}

impl LogOddsGrid {
    pub fn new(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            values: vec![0.0; geometry.len()],
        }
    }

    pub fn log_odds(&self, c: Cell) -> f64 {
        self.values[self.geometry.index(c)]
    }

    pub fn probability(&self, c: Cell) -> f64 {
        logistic(self.log_odds(c))
    }

    /// Fuses one observation with inverse-model probability `p`.
    pub fn observe(&mut self, c: Cell, p: f64) {
        let i = self.geometry.index(c);
        self.values[i] = saturate(self.values[i] + logit(p));
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.values.iter().map(|&l| logistic(l)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancyParams {
    pub p_hit: f64,
    pub p_miss: f64,
    pub p_free_max: f64,
    pub p_occ_min: f64,
}

impl Default for OccupancyParams {
    fn default() -> Self {
        Self {
            p_hit: 0.7,
            p_miss: 0.3,
            p_free_max: 0.35,
            p_occ_min: 0.65,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Free,
    Occupied,
    Unknown,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub free: Vec<Cell>,
    pub occupied: Vec<Cell>,
    pub unknown: Vec<Cell>,
}

/// IR occupancy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMap {
    pub grid: LogOddsGrid,
    pub params: OccupancyParams,
}

impl OccupancyMap {
    pub fn new(geometry: GridGeometry, params: OccupancyParams) -> Self {
        Self {
            grid: LogOddsGrid::new(geometry),
            params,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.grid.geometry
    }

    pub fn probability(&self, c: Cell) -> f64 {
        self.grid.probability(c)
    }

    pub fn label_of(&self, p: f64) -> Label {
        if p < self.params.p_free_max {
            Label::Free
        } else if p > self.params.p_occ_min {
            Label::Occupied
        } else {
            Label::Unknown
        }
    }

    pub fn label(&self, c: Cell) -> Label {
        self.label_of(self.probability(c))
    }

    pub fn labels(&self) -> Vec<Label> {
        self.grid
            .probabilities()
            .into_iter()
            .map(|p| self.label_of(p))
            .collect()
    }

    /// Integrates one IR scan. Each beam's cells before the measured range get
    /// miss evidence and the cell at the measured range gets hit evidence (a
    /// border hit has no cell). A cell receives at most one update per scan;
    /// hit evidence wins over miss evidence.
    pub fn update(&mut self, scan: &IrScan) {
        let geom = self.grid.geometry;
        let mut evidence: BTreeMap<Cell, bool> = BTreeMap::new();
        for beam in &scan.beams {
            if !(beam.range > 0.0) {
                continue;
            }
            let Ok(trace) = traverse(
                &geom,
                scan.origin.x,
                scan.origin.y,
                beam.angle,
                beam.range,
                |_| false,
            ) else {
                continue;
            };
            for (c, entry) in &trace.cells {
                if *entry < beam.range {
                    evidence.entry(*c).or_insert(false);
                } else if beam.hit && !matches!(trace.end, RayEnd::Border { .. }) {
                    evidence.insert(*c, true);
                }
            }
        }
        for (c, hit) in evidence {
            let p = if hit {
                self.params.p_hit
            } else {
                self.params.p_miss
            };
            self.grid.observe(c, p);
        }
    }

    pub fn classify(&self) -> Partition {
        let mut part = Partition::default();
        for (i, label) in self.labels().into_iter().enumerate() {
            let c = self.geometry().cell_of_index(i);
            match label {
                Label::Free => part.free.push(c),
                Label::Occupied => part.occupied.push(c),
                Label::Unknown => part.unknown.push(c),
            }
        }
        part
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectParams {
    /// Below this posterior a cell is resolved to "no object" (value 0).
    pub lambda1: f64,
    /// Above this posterior a cell keeps its value as an object cell.
    pub lambda2: f64,
    /// Inverse-model probability for a swept cell without a detection, at full
    /// camera confidence.
    pub p_miss_cam: f64,
}

impl Default for ObjectParams {
    fn default() -> Self {
        Self {
            lambda1: 0.10,
            lambda2: 0.95,
            p_miss_cam: 0.3,
        }
    }
}

/// Classified object-map value: 0 (free), 0.5 (unknown) or the posterior itself
/// once it exceeds `lambda2`. Zero itself counts as free.
pub fn classify_object_probability(p: f64, lambda1: f64, lambda2: f64) -> f64 {
    if p < lambda1 {
        0.0
    } else if p <= lambda2 {
        0.5
    } else {
        p
    }
}

/// Inverse-model probability that a detection with confidence `conf` is the object.
///
/// Confidence is mapped onto `[0.5, 1]` so that any detection, however faint,
/// is evidence for the object rather than against it.
pub fn detection_evidence(conf: f64) -> f64 {
    0.5 + 0.5 * conf.clamp(0.0, 1.0)
}

/// Inverse-model probability for a swept cell without a detection, seen at
/// confidence `conf`. Interpolates from 0.5 (no information) at `conf = 0` to
/// `p_miss_cam` at `conf = 1`.
pub fn miss_evidence(p_miss_cam: f64, conf: f64) -> f64 {
    0.5 - (0.5 - p_miss_cam) * conf.clamp(0.0, 1.0)
}

/// Camera object map. Raw posteriors are kept as log-odds; `value` exposes the
/// classified view used by the curiosity scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectMap {
    pub grid: LogOddsGrid,
    pub params: ObjectParams,
}

impl ObjectMap {
    pub fn new(geometry: GridGeometry, params: ObjectParams) -> Self {
        Self {
            grid: LogOddsGrid::new(geometry),
            params,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.grid.geometry
    }

    pub fn raw_probability(&self, c: Cell) -> f64 {
        self.grid.probability(c)
    }

    pub fn classify(&self, p: f64) -> f64 {
        classify_object_probability(p, self.params.lambda1, self.params.lambda2)
    }

    pub fn value(&self, c: Cell) -> f64 {
        self.classify(self.raw_probability(c))
    }

    pub fn values(&self) -> Vec<f64> {
        self.grid
            .probabilities()
            .into_iter()
            .map(|p| self.classify(p))
            .collect()
    }

    /// Fuses one camera observation. Swept cells without the detection get miss
    /// evidence weighted by the detector confidence at their distance.
    pub fn update(&mut self, obs: &CameraObservation, eta: f64) {
        let detected = obs.detection.map(|d| d.cell);
        let geom = self.grid.geometry;
        for (c, _) in &obs.swept {
            if Some(*c) != detected {
                let (x, y) = geom.center(*c);
                let conf = detection_confidence(eta, obs.origin.distance_to(x, y));
                self.grid.observe(*c, miss_evidence(self.params.p_miss_cam, conf));
            }
        }
        if let Some(d) = obs.detection {
            self.grid.observe(d.cell, detection_evidence(d.conf));
        }
    }

    pub fn partition(&self) -> Partition {
        let mut part = Partition::default();
        for (i, v) in self.values().into_iter().enumerate() {
            let c = self.geometry().cell_of_index(i);
            if v == 0.0 {
                part.free.push(c);
            } else if v == 0.5 {
                part.unknown.push(c);
            } else {
                part.occupied.push(c);
            }
        }
        part
    }
}
