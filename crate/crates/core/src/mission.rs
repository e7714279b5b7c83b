//! Mission phases for the tethered ground robot: tether-length mode switching,
//! the phase transition table, and the scripted grab maneuver.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::{explore, plan_path, ExploreError, ExplorerConfig, Method, MotionConfig};
use crate::world::{normalize_angle, Cell, GridWorld, Pose};

/// Detection confidence that moves hidden-space exploration into tracking.
pub const DETECTION_THRESHOLD: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MissionError {
    #[error("invalid tether state: {0}")]
    Tether(String),
    #[error("event {event} is not valid in phase {phase}")]
    Rejected { phase: MissionPhase, event: MissionEvent },
    #[error("robot is {distance:.3} m from the target, more than d_min = {d_min} m")]
    TooFar { distance: f64, d_min: f64 },
    #[error("no path from {from} towards the target {to}")]
    NoPath { from: Cell, to: Cell },
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TetherState {
    /// Total string length.
    pub total: f64,
    /// Distance from the UAV centre of mass to the hidden-space entry.
    pub entry: f64,
    /// Currently released length.
    pub released: f64,
    /// Height of the UAV centre of mass.
    pub uav_height: f64,
}

impl TetherState {
    pub fn validate(&self) -> Result<(), MissionError> {
        let err = |m: String| Err(MissionError::Tether(m));
        if !(self.uav_height > 0.0) {
            return err(format!("UAV height must be positive, got {}", self.uav_height));
        }
        if self.entry > self.total {
            return err(format!(
                "entry distance {} exceeds total length {}",
                self.entry, self.total
            ));
        }
        if self.released < 0.0 || self.released > self.total {
            return err(format!(
                "released length {} outside [0, {}]",
                self.released, self.total
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatingMode {
    Aerial,
    Landing,
    Ground,
}

/// Operating mode implied by the released tether length.
///
/// `0` is aerial, `(0, uav_height]` is landing, `[entry, total]` is ground.
/// Lengths between the UAV height and the entry distance count as landing.
pub fn mode_from_tether(t: &TetherState) -> Result<OperatingMode, MissionError> {
    t.validate()?;
    let l = t.released;
    Ok(if l == 0.0 {
        OperatingMode::Aerial
    } else if l <= t.uav_height || l < t.entry {
        OperatingMode::Landing
    } else {
        OperatingMode::Ground
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissionPhase {
    AerialExploration,
    Landing,
    HiddenExploration,
    ObjectTracking,
    Grabbing,
    Retracting,
    AerialContinue,
    /// Object retrieved and robot retracted.
    Complete,
}

impl MissionPhase {
    pub const ALL: [MissionPhase; 8] = [
        MissionPhase::AerialExploration,
        MissionPhase::Landing,
        MissionPhase::HiddenExploration,
        MissionPhase::ObjectTracking,
        MissionPhase::Grabbing,
        MissionPhase::Retracting,
        MissionPhase::AerialContinue,
        MissionPhase::Complete,
    ];
}

impl fmt::Display for MissionPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum MissionEvent {
    HiddenSpaceFound,
    Touchdown,
    Detection { conf: f64 },
    FrontiersExhausted,
    WithinDmin,
    GrabComplete,
    RetractComplete { object_aboard: bool },
    ResumeSearch,
}

impl fmt::Display for MissionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Applies the transition table. Invalid pairs leave the caller's phase untouched.
pub fn step_mission(phase: MissionPhase, event: MissionEvent) -> Result<MissionPhase, MissionError> {
    use MissionEvent as E;
    use MissionPhase as P;
    match (phase, event) {
        (P::AerialExploration, E::HiddenSpaceFound) => Ok(P::Landing),
        (P::Landing, E::Touchdown) => Ok(P::HiddenExploration),
        (P::HiddenExploration, E::Detection { conf }) if conf > DETECTION_THRESHOLD => {
            Ok(P::ObjectTracking)
        }
        (P::HiddenExploration, E::FrontiersExhausted) => Ok(P::Retracting),
        (P::ObjectTracking, E::WithinDmin) => Ok(P::Grabbing),
        (P::Grabbing, E::GrabComplete) => Ok(P::Retracting),
        (P::Retracting, E::RetractComplete { object_aboard: false }) => Ok(P::AerialContinue),
        (P::Retracting, E::RetractComplete { object_aboard: true }) => Ok(P::Complete),
        (P::AerialContinue, E::ResumeSearch) => Ok(P::AerialExploration),
        _ => Err(MissionError::Rejected { phase, event }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrabOutcome {
    pub pose: Pose,
    pub time: f64,
}

/// Turn half a revolution so the magnet faces the object, then reverse until
/// contact. Costs the rotation penalty plus the reversing time.
pub fn grab_maneuver(
    pose: &Pose,
    target: (f64, f64),
    d_min: f64,
    motion: &MotionConfig,
) -> Result<GrabOutcome, MissionError> {
    let distance = pose.distance_to(target.0, target.1);
    if distance > d_min + 1e-12 {
        return Err(MissionError::TooFar { distance, d_min });
    }
    let facing = if distance > 0.0 {
        pose.bearing_to(target.0, target.1)
    } else {
        pose.heading
    };
    Ok(GrabOutcome {
        pose: Pose::new(target.0, target.1, normalize_angle(facing + PI)),
        time: motion.rotation_penalty + distance / motion.max_velocity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionConfig {
    pub tether: TetherState,
    pub d_min: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionRecord {
    pub time: f64,
    pub phase: MissionPhase,
    #[serde(flatten)]
    pub event: MissionEvent,
    pub next: MissionPhase,
    pub tether_released: f64,
    pub mode: OperatingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionTrace {
    pub records: Vec<MissionRecord>,
    pub final_phase: MissionPhase,
    pub exploration_time: f64,
    pub total_time: f64,
}

impl MissionTrace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("mission record serializes"));
            out.push('\n');
        }
        out
    }
}

struct Recorder {
    phase: MissionPhase,
    time: f64,
    tether: TetherState,
    records: Vec<MissionRecord>,
}

impl Recorder {
    fn fire(&mut self, event: MissionEvent, released: f64) -> Result<(), MissionError> {
        let next = step_mission(self.phase, event)?;
        self.tether.released = released;
        self.records.push(MissionRecord {
            time: self.time,
            phase: self.phase,
            event,
            next,
            tether_released: released,
            mode: mode_from_tether(&self.tether)?,
        });
        self.phase = next;
        Ok(())
    }
}

/// Runs one nominal mission in `world`: land, explore, and either retrieve
/// the object or hand control back to the aerial search.
pub fn run_mission(
    world: &GridWorld,
    explorer: &ExplorerConfig,
    mission: &MissionConfig,
) -> Result<MissionTrace, MissionError> {
    let mut tether = mission.tether;
    tether.released = 0.0;
    tether.validate()?;
    let ground = tether.entry.max(tether.uav_height).min(tether.total);
    let mut rec = Recorder {
        phase: MissionPhase::AerialExploration,
        time: 0.0,
        tether,
        records: Vec::new(),
    };
    rec.fire(MissionEvent::HiddenSpaceFound, 0.0)?;
    rec.fire(MissionEvent::Touchdown, ground)?;

    let result = explore(world, explorer, mission.method)?;
    rec.time += result.delta_t;
    let exploration_time = result.delta_t;
    let motion = explorer.motion;
    let final_pose = result.trajectory.last().copied().unwrap_or(world.start_pose());
    let geom = world.geometry;
    let from = geom.cell_at(final_pose.x, final_pose.y).unwrap_or(world.start);

    let (retract_from, aboard) = match (result.target_estimate, result.detection_conf) {
        (Some(target), Some(conf)) => {
            rec.fire(MissionEvent::Detection { conf }, ground)?;
            let path = plan_path(&result.occupancy, from, target)
                .ok_or(MissionError::NoPath { from, to: target })?;
            // stop d_min short of the object
            let approach = (path.cost - mission.d_min).max(0.0);
            rec.time += approach / motion.max_velocity;
            let (tx, ty) = geom.center(target);
            let stop = stop_short(&final_pose, &path.cells, &geom, (tx, ty), mission.d_min);
            rec.fire(MissionEvent::WithinDmin, ground)?;
            let grab = grab_maneuver(&stop, (tx, ty), mission.d_min, &motion)?;
            rec.time += grab.time;
            rec.fire(MissionEvent::GrabComplete, ground)?;
            (target, true)
        }
        _ => {
            rec.fire(MissionEvent::FrontiersExhausted, ground)?;
            (from, false)
        }
    };
    let back = plan_path(&result.occupancy, retract_from, world.start).ok_or(MissionError::NoPath {
        from: retract_from,
        to: world.start,
    })?;
    rec.time += back.cost / motion.max_velocity;
    rec.fire(MissionEvent::RetractComplete { object_aboard: aboard }, 0.0)?;
    if !aboard {
        rec.fire(MissionEvent::ResumeSearch, 0.0)?;
    }
    Ok(MissionTrace {
        final_phase: rec.phase,
        total_time: rec.time,
        exploration_time,
        records: rec.records,
    })
}

/// Point on the approach path that is `d_min` from the target, facing it.
fn stop_short(
    start: &Pose,
    path: &[Cell],
    geom: &crate::world::GridGeometry,
    target: (f64, f64),
    d_min: f64,
) -> Pose {
    let prev = if path.len() >= 2 {
        geom.center(path[path.len() - 2])
    } else {
        (start.x, start.y)
    };
    let (dx, dy) = (target.0 - prev.0, target.1 - prev.1);
    let len = dx.hypot(dy);
    if len <= d_min || len == 0.0 {
        return Pose::new(prev.0, prev.1, start.heading);
    }
    let k = (len - d_min) / len;
    Pose::new(prev.0 + dx * k, prev.1 + dy * k, dy.atan2(dx))
}
