//! Simulated IR range finder and the camera modelled as a 2D range finder
//! whose detection confidence falls off as `eta / d`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::world::{traverse, Cell, GridGeometry, GridWorld, Pose, RayEnd, Truth, WorldError};

/// One ray per degree of field of view, plus the closing edge ray.
pub fn default_ray_count(fov: f64) -> usize {
    (fov.to_degrees().round() as usize + 1).max(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrConfig {
    /// Total angular width of the IR wedge (radians).
    pub fov: f64,
    pub max_range: f64,
    pub ray_count: usize,
}

impl IrConfig {
    pub fn new(fov: f64, max_range: f64) -> Self {
        Self {
            fov,
            max_range,
            ray_count: default_ray_count(fov),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.fov > 0.0
            && self.fov <= std::f64::consts::TAU
            && self.max_range > 0.0
            && self.ray_count >= 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub fov: f64,
    pub max_range: f64,
    /// Confidence proportionality constant (meters): `conf = eta / d`.
    pub eta: f64,
    pub ray_count: usize,
}

impl CameraConfig {
    pub fn new(fov: f64, max_range: f64, eta: f64) -> Self {
        Self {
            fov,
            max_range,
            eta,
            ray_count: default_ray_count(fov),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.fov > 0.0
            && self.fov <= std::f64::consts::TAU
            && self.max_range > 0.0
            && self.eta > 0.0
            && self.ray_count >= 2
    }
}

/// Detection confidence at distance `d`, clamped to 1 for `d <= eta`.
pub fn detection_confidence(eta: f64, d: f64) -> f64 {
    if d <= eta {
        1.0
    } else {
        eta / d
    }
}

/// Angles of `count` evenly spaced rays over `[heading - fov/2, heading + fov/2]`.
pub fn wedge_angles(heading: f64, fov: f64, count: usize) -> impl Iterator<Item = f64> {
    let start = heading - fov / 2.0;
    let step = fov / (count - 1) as f64;
    (0..count).map(move |k| start + k as f64 * step)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub angle: f64,
    pub range: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrScan {
    pub origin: Pose,
    pub beams: Vec<Beam>,
}

pub fn ir_scan(world: &GridWorld, pose: &Pose, cfg: &IrConfig) -> Result<IrScan, WorldError> {
    let beams = wedge_angles(pose.heading, cfg.fov, cfg.ray_count)
        .map(|angle| {
            let trace = traverse(&world.geometry, pose.x, pose.y, angle, cfg.max_range, |c| {
                world.truth(c) == Truth::Occupied
            })?;
            Ok(match trace.end.hit_distance() {
                Some(d) => Beam {
                    angle,
                    range: d,
                    hit: true,
                },
                None => Beam {
                    angle,
                    range: cfg.max_range,
                    hit: false,
                },
            })
        })
        .collect::<Result<Vec<_>, WorldError>>()?;
    Ok(IrScan {
        origin: *pose,
        beams,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Seen {
    Free,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub cell: Cell,
    pub distance: f64,
    pub conf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraObservation {
    pub origin: Pose,
    /// Swept cells in row-major order.
    pub swept: Vec<(Cell, Seen)>,
    pub detection: Option<Detection>,
}

/// Cells swept by a fan of rays, classified as seen-free (crossed before any
/// hit) or seen-blocked (the cell that stopped a ray).
pub fn sweep_wedge<F>(
    geom: &GridGeometry,
    pose: &Pose,
    fov: f64,
    max_range: f64,
    ray_count: usize,
    blocked: F,
) -> Result<Vec<(Cell, Seen)>, WorldError>
where
    F: Fn(Cell) -> bool + Copy,
{
    let mut seen = BTreeMap::new();
    for angle in wedge_angles(pose.heading, fov, ray_count) {
        let trace = traverse(geom, pose.x, pose.y, angle, max_range, blocked)?;
        for (c, _) in &trace.cells {
            seen.entry(*c).or_insert(Seen::Free);
        }
        if let RayEnd::Blocked { cell, .. } = trace.end {
            seen.insert(cell, Seen::Blocked);
        }
    }
    Ok(seen.into_iter().collect())
}

pub fn camera_observe(
    world: &GridWorld,
    pose: &Pose,
    cfg: &CameraConfig,
) -> Result<CameraObservation, WorldError> {
    let geom = &world.geometry;
    let occupied = |c: Cell| world.truth(c) == Truth::Occupied;
    let swept = sweep_wedge(geom, pose, cfg.fov, cfg.max_range, cfg.ray_count, occupied)?;

    let detection = match world.target {
        Some(t) if swept.binary_search_by(|(c, _)| c.cmp(&t)).is_ok() => {
            let (tx, ty) = geom.center(t);
            let d = pose.distance_to(tx, ty);
            if d > cfg.max_range {
                None
            } else if d == 0.0 {
                Some(Detection {
                    cell: t,
                    distance: 0.0,
                    conf: 1.0,
                })
            } else {
                // occlusion test along the ray through the target's centre
                let trace = traverse(geom, pose.x, pose.y, pose.bearing_to(tx, ty), d, occupied)?;
                let visible = trace.cells.iter().any(|(c, _)| *c == t);
                visible.then(|| Detection {
                    cell: t,
                    distance: d,
                    conf: detection_confidence(cfg.eta, d),
                })
            }
        }
        _ => None,
    };
    Ok(CameraObservation {
        origin: *pose,
        swept,
        detection,
    })
}
