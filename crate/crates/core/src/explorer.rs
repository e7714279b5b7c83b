//! Frontier detection, grid path planning and the two exploration policies:
//! curiosity-driven object search and the rapid-frontier baseline.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curiosity::{pick_best, select_frontier, total_curiosity, CuriosityParams};
use crate::mapping::{Label, ObjectMap, ObjectParams, OccupancyMap, OccupancyParams};
use crate::sensor::{camera_observe, ir_scan, CameraConfig, IrConfig};
use crate::world::{angle_diff, Cell, GridGeometry, GridWorld, Pose, Truth, WorldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExploreError {
    #[error("invalid start cell {0}")]
    InvalidStart(Cell),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cdos,
    Baseline,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Cdos => "cdos",
            Method::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cdos" => Ok(Method::Cdos),
            "baseline" | "rapid" => Ok(Method::Baseline),
            _ => Err(format!("unknown method {s:?} (expected cdos or baseline)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig {
    pub max_velocity: f64,
    /// Seconds per full in-place rotation.
    pub rotation_penalty: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            max_velocity: 2.0,
            rotation_penalty: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorerConfig {
    pub ir: IrConfig,
    pub camera: CameraConfig,
    pub occupancy: OccupancyParams,
    pub object: ObjectParams,
    pub curiosity: CuriosityParams,
    pub motion: MotionConfig,
    /// Simulated-seconds budget for one run.
    pub budget: f64,
    pub detection_threshold: f64,
}

impl ExplorerConfig {
    pub fn validate(&self) -> Result<(), ExploreError> {
        let bad = |m: &str| Err(ExploreError::Config(m.to_string()));
        if !self.ir.is_valid() {
            return bad("IR fov must be in (0, 2π], range > 0, ray count >= 2");
        }
        if !self.camera.is_valid() {
            return bad("camera fov must be in (0, 2π], range > 0, eta > 0, ray count >= 2");
        }
        if !(self.motion.max_velocity > 0.0) {
            return bad("max velocity must be positive");
        }
        if self.motion.rotation_penalty < 0.0 {
            return bad("rotation penalty must be non-negative");
        }
        if !(self.budget > 0.0) {
            return bad("budget must be positive");
        }
        if !(self.object.lambda1 < self.object.lambda2) {
            return bad("lambda1 must be below lambda2");
        }
        if !(self.curiosity.b > 0.0) {
            return bad("curiosity stiffness b must be positive");
        }
        Ok(())
    }
}

/// Free cells with at least one unknown 4-neighbour, in row-major order.
pub fn detect_frontiers(map: &OccupancyMap) -> Vec<Cell> {
    let labels = map.labels();
    frontiers_from_labels(map.geometry(), &labels)
}

fn frontiers_from_labels(geom: &GridGeometry, labels: &[Label]) -> Vec<Cell> {
    geom.cells()
        .filter(|&c| {
            labels[geom.index(c)] == Label::Free
                && geom
                    .neighbors4(c)
                    .any(|n| labels[geom.index(n)] == Label::Unknown)
        })
        .collect()
}

/// Frontiers whose centre lies inside the IR wedge and within IR range.
pub fn local_frontiers(
    global: &[Cell],
    geom: &GridGeometry,
    pose: &Pose,
    ir: &IrConfig,
) -> Vec<Cell> {
    global
        .iter()
        .copied()
        .filter(|&c| {
            let (x, y) = geom.center(c);
            let d = pose.distance_to(x, y);
            if d > ir.max_range {
                return false;
            }
            if d == 0.0 || ir.fov >= TAU {
                return true;
            }
            angle_diff(pose.bearing_to(x, y), pose.heading).abs() <= ir.fov / 2.0 + 1e-12
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    /// Cells from start to goal inclusive.
    pub cells: Vec<Cell>,
    pub cost: f64,
}

const MOVES: [(isize, isize); 8] = [
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

/// 8-connected neighbours reachable from `c`. Intermediate cells must be
/// belief-free; `goal` may be any non-occupied cell. Diagonal steps require
/// both adjacent orthogonal cells to be free.
pub(crate) fn successors<'a>(
    geom: &'a GridGeometry,
    labels: &'a [Label],
    c: Cell,
    goal: Option<Cell>,
) -> impl Iterator<Item = (Cell, f64)> + 'a {
    let free = move |n: Cell| labels[geom.index(n)] == Label::Free;
    MOVES.iter().filter_map(move |&(dx, dy)| {
        let n = geom.offset(c, dx, dy)?;
        let passable = free(n) || (Some(n) == goal && labels[geom.index(n)] != Label::Occupied);
        if !passable {
            return None;
        }
        if dx != 0 && dy != 0 {
            let a = geom.offset(c, dx, 0)?;
            let b = geom.offset(c, 0, dy)?;
            if !(free(a) && free(b)) {
                return None;
            }
        }
        let step = if dx != 0 && dy != 0 {
            std::f64::consts::SQRT_2
        } else {
            1.0
        };
        Some((n, step * geom.cell_size))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra from `from`; returns per-cell cost and predecessor index.
/// Equal-cost entries expand in row-major order.
fn dijkstra(
    geom: &GridGeometry,
    labels: &[Label],
    from: Cell,
    goal: Option<Cell>,
) -> (Vec<f64>, Vec<usize>) {
    let n = geom.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let s = geom.index(from);
    dist[s] = 0.0;
    heap.push(Reverse((Cost(0.0), s)));
    while let Some(Reverse((Cost(d), i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let c = geom.cell_of_index(i);
        if Some(c) == goal {
            break;
        }
        // only the goal may be a non-free endpoint, and it is never expanded
        for (nb, step) in successors(geom, labels, c, goal) {
            let j = geom.index(nb);
            let nd = d + step;
            if nd < dist[j] {
                dist[j] = nd;
                prev[j] = i;
                heap.push(Reverse((Cost(nd), j)));
            }
        }
    }
    (dist, prev)
}

/// Shortest 8-connected path over belief-free cells, or `None` if unreachable.
pub fn plan_path(map: &OccupancyMap, from: Cell, to: Cell) -> Option<GridPath> {
    plan_with_labels(map.geometry(), &map.labels(), from, to)
}

fn plan_with_labels(
    geom: &GridGeometry,
    labels: &[Label],
    from: Cell,
    to: Cell,
) -> Option<GridPath> {
    if from == to {
        return Some(GridPath {
            cells: vec![from],
            cost: 0.0,
        });
    }
    if labels[geom.index(to)] == Label::Occupied {
        return None;
    }
    let (dist, prev) = dijkstra(geom, labels, from, Some(to));
    let t = geom.index(to);
    if !dist[t].is_finite() {
        return None;
    }
    let mut cells = vec![to];
    let mut i = t;
    while prev[i] != usize::MAX {
        i = prev[i];
        cells.push(geom.cell_of_index(i));
    }
    cells.reverse();
    Some(GridPath {
        cells,
        cost: dist[t],
    })
}

/// Path cost from `from` to every cell reachable through free cells (frontier
/// cells are free, so this covers every frontier goal).
pub fn cost_field(map: &OccupancyMap, from: Cell) -> Vec<f64> {
    dijkstra(map.geometry(), &map.labels(), from, None).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    /// Goal picked from the local (IR field of view) frontiers.
    Local,
    /// Goal is the nearest reachable global frontier.
    Global,
    /// In-place turns towards unknown neighbours of the current cell.
    Look,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub pose: Pose,
    pub mode: StepMode,
    pub frontier: Option<Cell>,
    pub loss: Option<f64>,
    pub total_curiosity: f64,
    pub delta_t: f64,
    pub path_length: f64,
    pub global_frontiers: usize,
    pub local_frontiers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Found,
    FrontiersExhausted,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationResult {
    pub method: Method,
    pub occupancy: OccupancyMap,
    pub object: ObjectMap,
    pub delta_t: f64,
    pub found: bool,
    pub target_estimate: Option<Cell>,
    /// Confidence of the detection that ended the search.
    pub detection_conf: Option<f64>,
    pub trajectory: Vec<Pose>,
    pub step_log: Vec<StepRecord>,
    pub path_length: f64,
    pub termination: Termination,
}

impl ExplorationResult {
    /// Step log as newline-delimited JSON.
    pub fn step_log_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.step_log {
            out.push_str(&serde_json::to_string(s).expect("step record serializes"));
            out.push('\n');
        }
        out
    }
}

pub fn explore_cdos(world: &GridWorld, cfg: &ExplorerConfig) -> Result<ExplorationResult, ExploreError> {
    explore(world, cfg, Method::Cdos)
}

pub fn explore_rapid_frontier(
    world: &GridWorld,
    cfg: &ExplorerConfig,
) -> Result<ExplorationResult, ExploreError> {
    explore(world, cfg, Method::Baseline)
}

pub fn explore(
    world: &GridWorld,
    cfg: &ExplorerConfig,
    method: Method,
) -> Result<ExplorationResult, ExploreError> {
    cfg.validate()?;
    if !world.is_free(world.start) {
        return Err(ExploreError::InvalidStart(world.start));
    }
    Explorer::new(world, cfg, method).run()
}

struct Explorer<'a> {
    world: &'a GridWorld,
    cfg: &'a ExplorerConfig,
    method: Method,
    occupancy: OccupancyMap,
    object: ObjectMap,
    pose: Pose,
    cell: Cell,
    time: f64,
    path_length: f64,
    trajectory: Vec<Pose>,
    steps: Vec<StepRecord>,
    found: Option<Cell>,
    found_conf: Option<f64>,
    abandoned: BTreeSet<Cell>,
}

impl<'a> Explorer<'a> {
    fn new(world: &'a GridWorld, cfg: &'a ExplorerConfig, method: Method) -> Self {
        let geom = world.geometry;
        let pose = world.start_pose();
        Self {
            world,
            cfg,
            method,
            occupancy: OccupancyMap::new(geom, cfg.occupancy),
            object: ObjectMap::new(geom, cfg.object),
            pose,
            cell: world.start,
            time: 0.0,
            path_length: 0.0,
            trajectory: vec![pose],
            steps: Vec::new(),
            found: None,
            found_conf: None,
            abandoned: BTreeSet::new(),
        }
    }

    fn geom(&self) -> &GridGeometry {
        &self.world.geometry
    }

    fn sense(&mut self) -> Result<(), ExploreError> {
        let scan = ir_scan(self.world, &self.pose, &self.cfg.ir)?;
        self.occupancy.update(&scan);
        let obs = camera_observe(self.world, &self.pose, &self.cfg.camera)?;
        self.object.update(&obs, self.cfg.camera.eta);
        if let Some(d) = obs.detection {
            if d.conf > self.cfg.detection_threshold && self.found.is_none() {
                self.found = Some(d.cell);
                self.found_conf = Some(d.conf);
            }
        }
        Ok(())
    }

    fn turn_to(&mut self, heading: f64) {
        let delta = angle_diff(heading, self.pose.heading).abs();
        self.time += delta / TAU * self.cfg.motion.rotation_penalty;
        self.pose = Pose::new(self.pose.x, self.pose.y, heading);
    }

    fn done(&self) -> bool {
        self.found.is_some() || self.time >= self.cfg.budget
    }

    fn step_to(&mut self, next: Cell) -> Result<(), ExploreError> {
        if !self.world.is_free(next) {
            return Err(ExploreError::Invariant(format!(
                "trajectory enters occupied cell {next}"
            )));
        }
        let (x, y) = self.geom().center(next);
        let dist = self.pose.distance_to(x, y);
        self.turn_to(self.pose.bearing_to(x, y));
        self.time += dist / self.cfg.motion.max_velocity;
        self.path_length += dist;
        self.pose = Pose::new(x, y, self.pose.heading);
        self.cell = next;
        self.trajectory.push(self.pose);
        self.sense()
    }

    /// Turns towards each unknown 4-neighbour of the current cell and senses,
    /// then turns back to the heading it started from.
    fn look_around(&mut self) -> Result<(), ExploreError> {
        let geom = *self.geom();
        let heading = self.pose.heading;
        let neighbours: Vec<Cell> = geom.neighbors4(self.cell).collect();
        for n in neighbours {
            if self.done() {
                break;
            }
            if self.occupancy.label(n) != Label::Unknown {
                continue;
            }
            let (x, y) = geom.center(n);
            self.turn_to(self.pose.bearing_to(x, y));
            self.sense()?;
        }
        if !self.done() {
            self.turn_to(heading);
        }
        Ok(())
    }

    fn is_frontier(&self, c: Cell) -> bool {
        self.occupancy.label(c) == Label::Free
            && self
                .geom()
                .neighbors4(c)
                .any(|n| self.occupancy.label(n) == Label::Unknown)
    }

    /// Drives to `goal`, sensing at every cell. Replans when the remaining path
    /// crosses a cell that became occupied. Returns the distance driven.
    fn travel(&mut self, goal: Cell) -> Result<f64, ExploreError> {
        let start_len = self.path_length;
        let mut path = match plan_path(&self.occupancy, self.cell, goal) {
            Some(p) => p.cells,
            None => return Ok(0.0),
        };
        let mut k = 1;
        while k < path.len() && !self.done() {
            if path[k..]
                .iter()
                .any(|&c| self.occupancy.label(c) == Label::Occupied)
            {
                match plan_path(&self.occupancy, self.cell, goal) {
                    Some(p) => {
                        path = p.cells;
                        k = 1;
                        continue;
                    }
                    None => break,
                }
            }
            self.step_to(path[k])?;
            k += 1;
        }
        if self.cell == goal && !self.done() && self.is_frontier(goal) {
            self.look_around()?;
        }
        Ok(self.path_length - start_len)
    }

    fn choose_local(&self, candidates: &[Cell]) -> (Cell, Option<f64>) {
        let geom = self.geom();
        match self.method {
            Method::Cdos => {
                let s = select_frontier(
                    candidates,
                    &self.object,
                    &self.occupancy,
                    &self.pose,
                    &self.cfg.camera,
                    &self.cfg.curiosity,
                )
                .expect("non-empty candidates");
                (s.cell, Some(s.loss))
            }
            Method::Baseline => {
                let s = select_rapid_frontier(geom, &self.pose, candidates)
                    .expect("non-empty candidates");
                (s, None)
            }
        }
    }

    fn record(
        &mut self,
        mode: StepMode,
        frontier: Option<Cell>,
        loss: Option<f64>,
        total_curiosity: f64,
        counts: (usize, usize),
    ) {
        self.steps.push(StepRecord {
            step: self.steps.len(),
            pose: self.pose,
            mode,
            frontier,
            loss,
            total_curiosity,
            delta_t: self.time,
            path_length: 0.0,
            global_frontiers: counts.0,
            local_frontiers: counts.1,
        });
    }

    fn run(mut self) -> Result<ExplorationResult, ExploreError> {
        self.sense()?;
        let geom = *self.geom();
        // every iteration moves the robot, resolves a frontier or abandons one
        let max_iterations = 16 * geom.len() + 64;
        let mut termination = Termination::FrontiersExhausted;
        for _ in 0..max_iterations {
            if self.found.is_some() {
                termination = Termination::Found;
                break;
            }
            if self.time >= self.cfg.budget {
                termination = Termination::Budget;
                break;
            }
            let labels = self.occupancy.labels();
            let global: Vec<Cell> = frontiers_from_labels(&geom, &labels)
                .into_iter()
                .filter(|c| !self.abandoned.contains(c))
                .collect();
            let local = local_frontiers(&global, &geom, &self.pose, &self.cfg.ir);
            if local.iter().any(|c| global.binary_search(c).is_err()) {
                return Err(ExploreError::Invariant("local frontier outside global set".into()));
            }
            let c_t = total_curiosity(&self.object, &self.cfg.curiosity);
            let costs = dijkstra(&geom, &labels, self.cell, None).0;
            let reachable = |c: &&Cell| **c != self.cell && costs[geom.index(**c)].is_finite();
            let candidates: Vec<Cell> = local.iter().filter(reachable).copied().collect();
            let counts = (global.len(), local.len());

            let (goal, mode, loss) = if !candidates.is_empty() {
                let (g, loss) = self.choose_local(&candidates);
                (g, StepMode::Local, loss)
            } else if let Some(g) = global
                .iter()
                .filter(reachable)
                .min_by(|a, b| costs[geom.index(**a)].total_cmp(&costs[geom.index(**b)]).then(a.cmp(b)))
            {
                (*g, StepMode::Global, None)
            } else if global.contains(&self.cell) {
                self.record(StepMode::Look, Some(self.cell), None, c_t, counts);
                self.look_around()?;
                if self.is_frontier(self.cell) {
                    self.abandoned.insert(self.cell);
                }
                continue;
            } else {
                termination = Termination::FrontiersExhausted;
                break;
            };

            self.record(mode, Some(goal), loss, c_t, counts);
            let driven = self.travel(goal)?;
            if let Some(last) = self.steps.last_mut() {
                last.path_length = driven;
            }
            if driven == 0.0 || (self.cell == goal && self.is_frontier(goal)) {
                self.abandoned.insert(goal);
            }
        }
        if self.found.is_some() {
            termination = Termination::Found;
        } else if self.time >= self.cfg.budget {
            termination = Termination::Budget;
        }
        if let Some(est) = self.found {
            if Some(est) != self.world.target {
                return Err(ExploreError::Invariant(format!(
                    "detection at {est} does not match the target"
                )));
            }
        }
        Ok(ExplorationResult {
            method: self.method,
            occupancy: self.occupancy,
            object: self.object,
            delta_t: self.time,
            found: self.found.is_some(),
            target_estimate: self.found,
            detection_conf: self.found_conf,
            trajectory: self.trajectory,
            step_log: self.steps,
            path_length: self.path_length,
            termination,
        })
    }
}

/// Rapid-frontier choice: the frontier needing the smallest heading change,
/// then the nearest, then the smallest row-major index.
pub fn select_rapid_frontier(geom: &GridGeometry, pose: &Pose, frontiers: &[Cell]) -> Option<Cell> {
    let scored: Vec<(Cell, f64)> = frontiers
        .iter()
        .map(|&c| {
            let (x, y) = geom.center(c);
            let turn = if pose.distance_to(x, y) > 1e-12 {
                angle_diff(pose.bearing_to(x, y), pose.heading).abs()
            } else {
                0.0
            };
            (c, -turn)
        })
        .collect();
    pick_best(geom, pose, &scored).map(|s| s.cell)
}

/// Truth-map reachability of `to` from `from` with the planner's move rules.
pub fn reachable_in_truth(world: &GridWorld, from: Cell, to: Cell) -> bool {
    let labels: Vec<Label> = world
        .cells
        .iter()
        .map(|t| match t {
            Truth::Free => Label::Free,
            Truth::Occupied => Label::Occupied,
        })
        .collect();
    plan_with_labels(&world.geometry, &labels, from, to).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_map;

    fn geom(w: usize, h: usize) -> GridGeometry {
        GridGeometry {
            width: w,
            height: h,
            cell_size: 1.0,
        }
    }

    fn map_from(labels: &[&str]) -> OccupancyMap {
        let g = geom(labels[0].len(), labels.len());
        let mut m = OccupancyMap::new(g, OccupancyParams::default());
        for (y, row) in labels.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                let p = match ch {
                    '.' => 0.3,
                    '#' => 0.7,
                    _ => continue,
                };
                m.grid.observe(Cell::new(x, y), p);
            }
        }
        m
    }

    #[test]
    fn frontier_edge_cases() {
        let m = map_from(&["????", "????"]);
        assert!(detect_frontiers(&m).is_empty());
        let m = map_from(&["....", ".##."]);
        assert!(detect_frontiers(&m).is_empty());
        let m = map_from(&["..??", "...?"]);
        assert_eq!(
            detect_frontiers(&m),
            vec![Cell::new(1, 0), Cell::new(2, 1)]
        );
    }

    #[test]
    fn disk_frontier_ring_matches_neighbor_scan() {
        let n = 15;
        let g = geom(n, n);
        let mut m = OccupancyMap::new(g, OccupancyParams::default());
        let (cx, cy) = (7.0, 7.0);
        for c in g.cells().collect::<Vec<_>>() {
            if ((c.x as f64 - cx).powi(2) + (c.y as f64 - cy).powi(2)).sqrt() <= 3.0 {
                m.grid.observe(c, 0.3);
            }
        }
        let mut oracle = Vec::new();
        for y in 0..n {
            for x in 0..n {
                let free = |x: i64, y: i64| {
                    ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() <= 3.0
                };
                let (xi, yi) = (x as i64, y as i64);
                if !free(xi, yi) {
                    continue;
                }
                let unk = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| {
                    let (nx, ny) = (xi + dx, yi + dy);
                    nx >= 0 && ny >= 0 && nx < n as i64 && ny < n as i64 && !free(nx, ny)
                });
                if unk {
                    oracle.push(Cell::new(x, y));
                }
            }
        }
        assert_eq!(detect_frontiers(&m), oracle);
        assert!(!oracle.is_empty());
    }

    #[test]
    fn local_frontier_wedge() {
        let g = geom(20, 20);
        let pose = Pose::new(10.5, 10.5, 0.0);
        let ir = IrConfig::new(30f64.to_radians(), 3.0);
        let ahead = Cell::new(12, 10);
        let behind = Cell::new(8, 10);
        let far = Cell::new(14, 10); // 4 m ahead
        let edge = Cell::new(13, 10); // exactly 3 m
        let f = vec![behind, ahead, edge, far];
        assert_eq!(local_frontiers(&f, &g, &pose, &ir), vec![ahead, edge]);
        let full = IrConfig::new(TAU, 3.0);
        assert_eq!(
            local_frontiers(&f, &g, &pose, &full),
            vec![behind, ahead, edge]
        );
        let ir = IrConfig::new(30f64.to_radians(), 2.999);
        assert_eq!(local_frontiers(&f, &g, &pose, &ir), vec![ahead]);
    }

    #[test]
    fn planner_basics() {
        let m = map_from(&[".....", "#####"]);
        let p = plan_path(&m, Cell::new(0, 0), Cell::new(0, 0)).unwrap();
        assert_eq!(p.cost, 0.0);
        assert_eq!(p.cells.len(), 1);
        let p = plan_path(&m, Cell::new(0, 0), Cell::new(4, 0)).unwrap();
        assert_eq!(p.cost, 4.0);
        assert_eq!(p.cells.len(), 5);
        assert!(plan_path(&m, Cell::new(0, 0), Cell::new(2, 1)).is_none());
        // an unknown goal may be entered
        let m = map_from(&["...?", "####"]);
        assert!(plan_path(&m, Cell::new(0, 0), Cell::new(3, 0)).is_some());
        // no corner cutting between two occupied cells
        let m = map_from(&[".#", "#."]);
        assert!(plan_path(&m, Cell::new(0, 0), Cell::new(1, 1)).is_none());
    }

    #[test]
    fn rapid_frontier_prefers_straight_ahead() {
        let g = geom(10, 10);
        let pose = Pose::new(2.5, 5.5, 0.0);
        let f = vec![Cell::new(4, 3), Cell::new(6, 5), Cell::new(3, 5)];
        assert_eq!(select_rapid_frontier(&g, &pose, &f), Some(Cell::new(3, 5)));
    }

    fn test_cfg() -> ExplorerConfig {
        ExplorerConfig {
            ir: IrConfig::new(30f64.to_radians(), 3.0),
            camera: CameraConfig::new(60f64.to_radians(), 3.0, 0.57),
            occupancy: OccupancyParams::default(),
            object: ObjectParams::default(),
            curiosity: CuriosityParams::default(),
            motion: MotionConfig::default(),
            budget: 600.0,
            detection_threshold: 0.95,
        }
    }

    #[test]
    fn immediate_detection() {
        let w = load_map("cellsize=0.25 heading=0\n#######\n#.....#\n#.ST..#\n#.....#\n#######\n")
            .unwrap();
        let r = explore_cdos(&w, &test_cfg()).unwrap();
        assert!(r.found);
        assert_eq!(r.delta_t, 0.0);
        assert_eq!(r.target_estimate, Some(Cell::new(3, 2)));
        assert_eq!(r.termination, Termination::Found);
    }

    #[test]
    fn no_target_exhausts_frontiers() {
        let w = load_map(
            "cellsize=0.25 heading=0\n##########\n#S.......#\n#........#\n#...##...#\n#........#\n##########\n",
        )
        .unwrap();
        for method in [Method::Cdos, Method::Baseline] {
            let r = explore(&w, &test_cfg(), method).unwrap();
            assert!(!r.found);
            assert_eq!(r.termination, Termination::FrontiersExhausted);
            assert!(detect_frontiers(&r.occupancy).is_empty());
            assert!(r.object.values().iter().all(|&v| v <= 0.95));
            for p in &r.trajectory {
                let c = w.geometry.cell_at(p.x, p.y).unwrap();
                assert!(w.is_free(c));
            }
        }
    }

    #[test]
    fn invalid_start_rejected() {
        let mut w = load_map("cellsize=1 heading=0\nS.\n").unwrap();
        w.cells[0] = Truth::Occupied;
        assert!(matches!(
            explore_cdos(&w, &test_cfg()),
            Err(ExploreError::InvalidStart(_))
        ));
    }
}
