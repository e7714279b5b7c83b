//! Curiosity scoring over the object map and expected-curiosity-loss frontier
//! selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapping::{logistic, logit, Label, ObjectMap, OccupancyMap, LOG_ODDS_LIMIT};
use crate::sensor::{sweep_wedge, CameraConfig};
use crate::world::{Cell, GridGeometry, Pose};

/// Losses closer than this are treated as equal when picking a frontier.
pub const SCORE_TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CuriosityError {
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("distances must be positive (d_t = {d_t}, d_t1 = {d_t1})")]
    Distance { d_t: f64, d_t1: f64 },
    #[error("no frontier to select from")]
    NoFrontiers,
}

/// Inverted-parabola curiosity shape `-(p + a)^2 / 4b + kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuriosityParams {
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
}

impl Default for CuriosityParams {
    fn default() -> Self {
        Self {
            a: -0.5,
            b: 0.1,
            kappa: 0.62,
        }
    }
}

impl CuriosityParams {
    /// Curiosity of a probability already known to lie in `[0, 1]`, floored at 0.
    pub fn value(&self, p: f64) -> f64 {
        let raw = -(p + self.a).powi(2) / (4.0 * self.b) + self.kappa;
        raw.max(0.0)
    }
}

pub fn cell_curiosity(p: f64, params: &CuriosityParams) -> Result<f64, CuriosityError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CuriosityError::Probability(p));
    }
    Ok(params.value(p))
}

/// Sum of per-cell curiosity over the classified object map.
pub fn total_curiosity(map: &ObjectMap, params: &CuriosityParams) -> f64 {
    map.values().into_iter().map(|v| params.value(v)).sum()
}

/// Scales the current observation by the distance ratio, capped at 1.
pub fn predict_observation(p_now: f64, d_t: f64, d_t1: f64) -> Result<f64, CuriosityError> {
    if !(d_t > 0.0 && d_t1 > 0.0) {
        return Err(CuriosityError::Distance { d_t, d_t1 });
    }
    if !(0.0..=1.0).contains(&p_now) {
        return Err(CuriosityError::Probability(p_now));
    }
    Ok((p_now * (d_t / d_t1)).min(1.0))
}

/// Pose the robot would have at `cell` after driving there from `current`.
pub fn candidate_pose(geom: &GridGeometry, current: &Pose, cell: Cell) -> Pose {
    let (x, y) = geom.center(cell);
    let heading = if current.distance_to(x, y) > 1e-12 {
        current.bearing_to(x, y)
    } else {
        current.heading
    };
    Pose::new(x, y, heading)
}

/// Cells the camera would sweep from `pose`, using belief-occupied cells as occluders.
pub fn predicted_wedge(occupancy: &OccupancyMap, pose: &Pose, cam: &CameraConfig) -> Vec<Cell> {
    let geom = occupancy.geometry();
    sweep_wedge(geom, pose, cam.fov, cam.max_range, cam.ray_count, |c| {
        occupancy.label(c) == Label::Occupied
    })
    .map(|cells| cells.into_iter().map(|(c, _)| c).collect())
    .unwrap_or_default()
}

/// Distance used in the observation prediction; a cell is never nearer than
/// half a cell edge to a pose.
pub fn prediction_distance(geom: &GridGeometry, pose: &Pose, cell: Cell) -> f64 {
    let (x, y) = geom.center(cell);
    pose.distance_to(x, y).max(geom.cell_size / 2.0)
}

/// Posterior a cell would reach after fusing the predicted observation, in
/// classified form.
fn predicted_value(map: &ObjectMap, cell: Cell, p_now: f64, d_t: f64, d_t1: f64) -> f64 {
    let predicted = (p_now * (d_t / d_t1)).min(1.0);
    let l = (map.grid.log_odds(cell) + logit(predicted)).clamp(-LOG_ODDS_LIMIT, LOG_ODDS_LIMIT);
    map.classify(logistic(l))
}

/// Expected drop in total curiosity if the robot moved to `candidate`.
///
/// Only cells inside the predicted camera wedge that currently carry curiosity
/// change, so the loss is accumulated over those cells alone.
pub fn expected_curiosity_loss(
    object: &ObjectMap,
    occupancy: &OccupancyMap,
    current: &Pose,
    candidate: &Pose,
    cam: &CameraConfig,
    params: &CuriosityParams,
) -> f64 {
    let geom = object.geometry();
    predicted_wedge(occupancy, candidate, cam)
        .into_iter()
        .map(|c| {
            let v = object.value(c);
            let before = params.value(v);
            if before == 0.0 {
                return 0.0;
            }
            let d_t = prediction_distance(geom, current, c);
            let d_t1 = prediction_distance(geom, candidate, c);
            before - params.value(predicted_value(object, c, v, d_t, d_t1))
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub cell: Cell,
    pub loss: f64,
}

/// Picks the frontier with the largest expected curiosity loss. Ties (within
/// [`SCORE_TIE_EPS`]) go to the frontier nearest the robot, then to the
/// smallest row-major index.
pub fn select_frontier(
    frontiers: &[Cell],
    object: &ObjectMap,
    occupancy: &OccupancyMap,
    current: &Pose,
    cam: &CameraConfig,
    params: &CuriosityParams,
) -> Result<Selection, CuriosityError> {
    let geom = object.geometry();
    let scored: Vec<(Cell, f64)> = frontiers
        .par_iter()
        .map(|&f| {
            let pose = candidate_pose(geom, current, f);
            (
                f,
                expected_curiosity_loss(object, occupancy, current, &pose, cam, params),
            )
        })
        .collect();
    pick_best(geom, current, &scored).ok_or(CuriosityError::NoFrontiers)
}

/// Maximum score with distance and row-major tie-breaking.
pub(crate) fn pick_best(
    geom: &GridGeometry,
    current: &Pose,
    scored: &[(Cell, f64)],
) -> Option<Selection> {
    let best = scored
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    scored
        .iter()
        .filter(|(_, s)| *s >= best - SCORE_TIE_EPS)
        .map(|&(c, s)| {
            let (x, y) = geom.center(c);
            (current.distance_to(x, y), c, s)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, cell, loss)| Selection { cell, loss })
}
