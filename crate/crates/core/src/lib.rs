//! Grid-world simulator for curiosity-driven object search.
//!
//! A robot carrying a short-range IR sensor and a wide camera explores an
//! enclosed space. IR scans build an occupancy grid; camera detections build a
//! per-cell object map. Frontiers are chosen either by expected curiosity loss
//! over the object map or by the rapid-frontier rule that ignores it.

pub mod curiosity;
pub mod explorer;
pub mod harness;
pub mod mapping;
pub mod mission;
pub mod render;
pub mod sensor;
pub mod world;

pub use curiosity::{cell_curiosity, expected_curiosity_loss, select_frontier, CuriosityParams};
pub use explorer::{
    detect_frontiers, explore, explore_cdos, explore_rapid_frontier, local_frontiers, plan_path,
    ExplorationResult, ExplorerConfig, Method, MotionConfig,
};
pub use mapping::{ObjectMap, OccupancyMap};
pub use sensor::{camera_observe, ir_scan, CameraConfig, IrConfig};
pub use world::{load_map, ray_cast, Cell, GridWorld, Pose};
