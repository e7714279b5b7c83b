//! Ground-truth environment: ASCII map files, zone files, and exact grid ray traversal.
//!
//! World coordinates are metric with the origin at the top-left corner of the
//! map. `x` grows with the column index and `y` grows with the row index, so
//! the first text row of a map file is `y = 0`. Headings are measured from +x
//! towards +y.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("empty map text")]
    Empty,
    #[error("missing or invalid header: {0}")]
    Header(String),
    #[error("ragged rows: row {row} has {found} cells, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown character {ch:?} at row {row}, column {col}")]
    UnknownChar { ch: char, row: usize, col: usize },
    #[error("no start cell 'S'")]
    MissingStart,
    #[error("multiple start cells")]
    MultipleStarts,
    #[error("multiple targets")]
    MultipleTargets,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZoneError {
    #[error("zone file parse error: {0}")]
    Parse(String),
    #[error("invalid zone key {0:?}; expected zone1..zone5")]
    BadKey(String),
    #[error("zone {zone}: rectangle list must hold groups of four coordinates")]
    BadRectangle { zone: u8 },
    #[error("zone {zone}: cell {cell} lies outside the map")]
    OutOfBounds { zone: u8, cell: Cell },
    #[error("zone {zone}: cell {cell} is occupied")]
    Occupied { zone: u8, cell: Cell },
    #[error("zones {a} and {b} overlap at {cell}")]
    Overlap { a: u8, b: u8, cell: Cell },
    #[error("zone {0} is empty")]
    Empty(u8),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("position ({x:.3}, {y:.3}) lies outside the world")]
    OutOfBounds { x: f64, y: f64 },
    #[error("max range must be positive, got {0}")]
    BadRange(f64),
}

/// Grid cell coordinate. Ordering is row-major (`y` first, then `x`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Robot pose in world coordinates; heading in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }

    pub fn bearing_to(&self, x: f64, y: f64) -> f64 {
        normalize_angle((y - self.y).atan2(x - self.x))
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Smallest signed difference `a - b`, in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Square lattice geometry shared by the ground truth and the belief maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
}

impl GridGeometry {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    pub fn cell_of_index(&self, i: usize) -> Cell {
        Cell::new(i % self.width, i / self.width)
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn center(&self, c: Cell) -> (f64, f64) {
        (
            (c.x as f64 + 0.5) * self.cell_size,
            (c.y as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.cell_size,
            self.height as f64 * self.cell_size,
        )
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let (w, h) = self.extent();
        x >= 0.0 && y >= 0.0 && x <= w && y <= h
    }

    /// Cell containing a point; points on the far edge belong to the last cell.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<Cell> {
        if !self.contains_point(x, y) {
            return None;
        }
        let cx = ((x / self.cell_size).floor() as usize).min(self.width - 1);
        let cy = ((y / self.cell_size).floor() as usize).min(self.height - 1);
        Some(Cell::new(cx, cy))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(|i| self.cell_of_index(i))
    }

    pub fn neighbors4(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        const D: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
        D.iter().filter_map(move |&(dx, dy)| self.offset(c, dx, dy))
    }

    pub fn offset(&self, c: Cell, dx: isize, dy: isize) -> Option<Cell> {
        let x = c.x as isize + dx;
        let y = c.y as isize + dy;
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            None
        } else {
            Some(Cell::new(x as usize, y as usize))
        }
    }

    pub fn pose_at(&self, c: Cell, heading: f64) -> Pose {
        let (x, y) = self.center(c);
        Pose::new(x, y, heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truth {
    Free,
    Occupied,
}

/// Ground-truth environment. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub geometry: GridGeometry,
    pub cells: Vec<Truth>,
    pub target: Option<Cell>,
    pub start: Cell,
    pub start_heading: f64,
}

impl GridWorld {
    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn cell_size(&self) -> f64 {
        self.geometry.cell_size
    }

    pub fn truth(&self, c: Cell) -> Truth {
        self.cells[self.geometry.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.geometry.contains(c) && self.truth(c) == Truth::Free
    }

    pub fn start_pose(&self) -> Pose {
        self.geometry.pose_at(self.start, self.start_heading)
    }

    /// Copy of this world with the target moved. The placement must be a free cell.
    pub fn with_target(&self, target: Option<Cell>) -> Option<GridWorld> {
        if let Some(t) = target {
            if !self.is_free(t) {
                return None;
            }
        }
        let mut w = self.clone();
        w.target = target;
        Some(w)
    }

    /// Canonical text form; `load_map(to_map_text(w)) == w`.
    pub fn to_map_text(&self) -> String {
        let mut out = format!(
            "cellsize={} heading={}\n",
            self.geometry.cell_size, self.start_heading
        );
        for y in 0..self.height() {
            for x in 0..self.width() {
                let c = Cell::new(x, y);
                let ch = if c == self.start {
                    'S'
                } else if Some(c) == self.target {
                    'T'
                } else if self.truth(c) == Truth::Occupied {
                    '#'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }

    pub fn ray_cast(
        &self,
        origin: &Pose,
        angle: f64,
        max_range: f64,
    ) -> Result<RayHit, WorldError> {
        ray_cast(self, origin, angle, max_range)
    }
}

fn parse_header(line: &str) -> Result<(f64, f64), MapError> {
    let mut cell_size = None;
    let mut heading = None;
    for tok in line.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| MapError::Header(format!("token {tok:?} is not key=value")))?;
        let val: f64 = v
            .parse()
            .map_err(|_| MapError::Header(format!("{k} value {v:?} is not a number")))?;
        match k {
            "cellsize" => cell_size = Some(val),
            "heading" => heading = Some(val),
            _ => return Err(MapError::Header(format!("unknown key {k:?}"))),
        }
    }
    let cell_size = cell_size.ok_or_else(|| MapError::Header("missing cellsize".into()))?;
    let heading = heading.ok_or_else(|| MapError::Header("missing heading".into()))?;
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(MapError::Header(format!("cellsize must be > 0, got {cell_size}")));
    }
    if !heading.is_finite() {
        return Err(MapError::Header("heading must be finite".into()));
    }
    Ok((cell_size, heading))
}

/// Parses an ASCII map: a `cellsize=<m> heading=<rad>` header line followed by
/// rows of `#` (occupied), `.` (free), `S` (start) and `T` (target).
pub fn load_map(text: &str) -> Result<GridWorld, MapError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(MapError::Empty)?;
    let (cell_size, heading) = parse_header(header)?;

    let rows: Vec<&str> = lines.map(|l| l.trim_end()).collect();
    if rows.is_empty() {
        return Err(MapError::Header("no grid rows after header".into()));
    }
    let width = rows[0].chars().count();
    let height = rows.len();
    let mut cells = Vec::with_capacity(width * height);
    let mut start = None;
    let mut target = None;
    for (y, row) in rows.iter().enumerate() {
        let n = row.chars().count();
        if n != width {
            return Err(MapError::RaggedRows {
                row: y,
                expected: width,
                found: n,
            });
        }
        for (x, ch) in row.chars().enumerate() {
            let truth = match ch {
                '#' => Truth::Occupied,
                '.' => Truth::Free,
                'S' => {
                    if start.replace(Cell::new(x, y)).is_some() {
                        return Err(MapError::MultipleStarts);
                    }
                    Truth::Free
                }
                'T' => {
                    if target.replace(Cell::new(x, y)).is_some() {
                        return Err(MapError::MultipleTargets);
                    }
                    Truth::Free
                }
                _ => return Err(MapError::UnknownChar { ch, row: y, col: x }),
            };
            cells.push(truth);
        }
    }
    let start = start.ok_or(MapError::MissingStart)?;
    Ok(GridWorld {
        geometry: GridGeometry {
            width,
            height,
            cell_size,
        },
        cells,
        target,
        start,
        start_heading: normalize_angle(heading),
    })
}

/// How a traversed ray ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayEnd {
    /// Entered a blocking cell at `distance`.
    Blocked { cell: Cell, distance: f64 },
    /// Left the grid at `distance`.
    Border { distance: f64 },
    /// Reached `max_range` without hitting anything.
    Range,
}

impl RayEnd {
    pub fn hit_distance(&self) -> Option<f64> {
        match *self {
            RayEnd::Blocked { distance, .. } | RayEnd::Border { distance } => Some(distance),
            RayEnd::Range => None,
        }
    }
}

/// Open cells crossed by a ray, each with the distance at which the ray enters it.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTrace {
    pub cells: Vec<(Cell, f64)>,
    pub end: RayEnd,
}

/// Exact cell-by-cell traversal (Amanatides–Woo). Cells entered at a distance
/// `<= max_range` are visited; the first one for which `blocked` holds stops
/// the ray. Leaving the grid counts as a hit on the border.
pub fn traverse<F>(
    geom: &GridGeometry,
    ox: f64,
    oy: f64,
    angle: f64,
    max_range: f64,
    blocked: F,
) -> Result<RayTrace, WorldError>
where
    F: Fn(Cell) -> bool,
{
    if !(max_range > 0.0) {
        return Err(WorldError::BadRange(max_range));
    }
    let mut cell = geom
        .cell_at(ox, oy)
        .ok_or(WorldError::OutOfBounds { x: ox, y: oy })?;
    let cs = geom.cell_size;
    let (dy, dx) = angle.sin_cos();
    // Axis-aligned rays: snap the negligible component so they never drift
    // into a neighbouring row or column.
    let dx = if dx.abs() < 1e-12 { 0.0 } else { dx };
    let dy = if dy.abs() < 1e-12 { 0.0 } else { dy };

    let (step_x, mut t_max_x, t_delta_x) = axis_setup(ox, cell.x, cs, dx);
    let (step_y, mut t_max_y, t_delta_y) = axis_setup(oy, cell.y, cs, dy);

    let mut cells = Vec::new();
    let mut t_entry = 0.0;
    loop {
        if blocked(cell) {
            return Ok(RayTrace {
                cells,
                end: RayEnd::Blocked {
                    cell,
                    distance: t_entry,
                },
            });
        }
        cells.push((cell, t_entry));
        let (t_next, along_x) = if t_max_x <= t_max_y {
            (t_max_x, true)
        } else {
            (t_max_y, false)
        };
        if t_next > max_range {
            return Ok(RayTrace {
                cells,
                end: RayEnd::Range,
            });
        }
        let next = if along_x {
            t_max_x += t_delta_x;
            geom.offset(cell, step_x, 0)
        } else {
            t_max_y += t_delta_y;
            geom.offset(cell, 0, step_y)
        };
        t_entry = t_next;
        match next {
            Some(c) => cell = c,
            None => {
                return Ok(RayTrace {
                    cells,
                    end: RayEnd::Border { distance: t_next },
                })
            }
        }
    }
}

fn axis_setup(origin: f64, index: usize, cs: f64, dir: f64) -> (isize, f64, f64) {
    if dir > 0.0 {
        let boundary = (index + 1) as f64 * cs;
        (1, (boundary - origin) / dir, cs / dir)
    } else if dir < 0.0 {
        let boundary = index as f64 * cs;
        (-1, (boundary - origin) / dir, -cs / dir)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RayHit {
    Hit(f64),
    NoHit,
}

/// Distance from `origin` to the first occupied cell boundary (or the map
/// border) along `angle`, if within `max_range`.
pub fn ray_cast(
    world: &GridWorld,
    origin: &Pose,
    angle: f64,
    max_range: f64,
) -> Result<RayHit, WorldError> {
    let g = &world.geometry;
    let trace = traverse(g, origin.x, origin.y, angle, max_range, |c| {
        world.truth(c) == Truth::Occupied
    })?;
    Ok(match trace.end.hit_distance() {
        Some(d) if d <= max_range => RayHit::Hit(d),
        _ => RayHit::NoHit,
    })
}

/// A numbered region of free cells used for target placement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zone {
    pub id: u8,
    pub cells: Vec<Cell>,
}

/// Parses a zone file: `zone<i> = [x0, y0, x1, y1, ...]` with inclusive
/// rectangles in cell coordinates. Nested lists (`[[x0, y0, x1, y1], ...]`)
/// are accepted as well. Returns zones sorted by id.
pub fn load_zones(text: &str, world: &GridWorld) -> Result<Vec<Zone>, ZoneError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ZoneError::Parse(e.to_string()))?;
    let mut zones = Vec::new();
    for (key, value) in &table {
        let id: u8 = key
            .strip_prefix("zone")
            .and_then(|s| s.parse().ok())
            .filter(|i| (1..=5).contains(i))
            .ok_or_else(|| ZoneError::BadKey(key.clone()))?;
        let mut flat = Vec::new();
        flatten_ints(value, &mut flat).map_err(|_| ZoneError::BadRectangle { zone: id })?;
        if flat.is_empty() || flat.len() % 4 != 0 {
            return Err(ZoneError::BadRectangle { zone: id });
        }
        let mut cells = BTreeSet::new();
        for r in flat.chunks(4) {
            let (x0, x1) = (r[0].min(r[2]), r[0].max(r[2]));
            let (y0, y1) = (r[1].min(r[3]), r[1].max(r[3]));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let c = Cell::new(x, y);
                    if !world.geometry.contains(c) {
                        return Err(ZoneError::OutOfBounds { zone: id, cell: c });
                    }
                    if world.truth(c) == Truth::Occupied {
                        return Err(ZoneError::Occupied { zone: id, cell: c });
                    }
                    cells.insert(c);
                }
            }
        }
        zones.push(Zone {
            id,
            cells: cells.into_iter().collect(),
        });
    }
    zones.sort_by_key(|z| z.id);
    for (i, a) in zones.iter().enumerate() {
        for b in &zones[i + 1..] {
            if let Some(c) = a.cells.iter().find(|c| b.cells.binary_search(c).is_ok()) {
                return Err(ZoneError::Overlap {
                    a: a.id,
                    b: b.id,
                    cell: *c,
                });
            }
        }
    }
    Ok(zones)
}

fn flatten_ints(v: &toml::Value, out: &mut Vec<usize>) -> Result<(), ()> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => {
            out.push(*i as usize);
            Ok(())
        }
        toml::Value::Array(items) => items.iter().try_for_each(|i| flatten_ints(i, out)),
        _ => Err(()),
    }
}

/// Draws `n` cells uniformly with replacement from the zone.
pub fn sample_zone_points(zone: &Zone, n: usize, seed: u64) -> Result<Vec<Cell>, ZoneError> {
    if zone.cells.is_empty() {
        return Err(ZoneError::Empty(zone.id));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| zone.cells[rng.gen_range(0..zone.cells.len())])
        .collect())
}
