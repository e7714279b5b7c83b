//! Independent reference implementations shared by the oracle tests and the
//! acceptance runner. They restate the model from scratch instead of calling
//! into the crate's scoring or planning code.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use cdos::curiosity::predicted_wedge;
use cdos::mission::{MissionEvent as E, MissionPhase as P, MissionEvent, MissionPhase};
use cdos::mapping::{Label, ObjectMap, ObjectParams, OccupancyMap, OccupancyParams};
use cdos::sensor::CameraConfig;
use cdos::world::{Cell, GridGeometry, Pose};
use cdos::CuriosityParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn geometry(width: usize, height: usize, cell_size: f64) -> GridGeometry {
    GridGeometry {
        width,
        height,
        cell_size,
    }
}

/// Occupancy map with labels drawn at the given free/occupied weights; the
/// rest stays unknown.
pub fn random_occupancy(rng: &mut ChaCha8Rng, geom: GridGeometry, free: f64, occ: f64) -> OccupancyMap {
    let mut map = OccupancyMap::new(geom, OccupancyParams::default());
    for c in geom.cells() {
        let u: f64 = rng.gen();
        if u < free {
            map.grid.observe(c, 0.1);
        } else if u < free + occ {
            map.grid.observe(c, 0.9);
        }
    }
    map
}

/// Object map whose raw posteriors spread over all three classification bands.
pub fn random_object(rng: &mut ChaCha8Rng, geom: GridGeometry) -> ObjectMap {
    let mut map = ObjectMap::new(geom, ObjectParams::default());
    for c in geom.cells() {
        let p = match rng.gen_range(0..4) {
            0 => rng.gen_range(0.01..0.1),
            1 => 0.5,
            2 => rng.gen_range(0.1..0.95),
            _ => rng.gen_range(0.95..0.999),
        };
        map.grid.observe(c, p);
    }
    map
}

pub fn classify(p: f64) -> f64 {
    if p < 0.10 {
        0.0
    } else if p <= 0.95 {
        0.5
    } else {
        p
    }
}

pub fn curiosity(p: f64) -> f64 {
    let (a, b, kappa) = (-0.5, 0.1, 0.62);
    (-(p + a) * (p + a) / (4.0 * b) + kappa).max(0.0)
}

fn total(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| curiosity(classify(p))).sum()
}

fn sigmoid(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

fn bayes(prior: f64, obs: f64) -> f64 {
    let num = prior * obs;
    let post = num / (num + (1.0 - prior) * (1.0 - obs));
    post.clamp(sigmoid(-20.0), sigmoid(20.0))
}

fn dist(geom: &GridGeometry, pose: &Pose, c: Cell) -> f64 {
    let x = (c.x as f64 + 0.5) * geom.cell_size;
    let y = (c.y as f64 + 0.5) * geom.cell_size;
    ((x - pose.x).powi(2) + (y - pose.y).powi(2))
        .sqrt()
        .max(geom.cell_size / 2.0)
}

/// Expected curiosity loss by brute force: copy the whole object map, fuse the
/// predicted observation of every cell the camera would see from the
/// candidate, reclassify everything and difference the two totals.
pub fn oracle_loss(
    object: &ObjectMap,
    occupancy: &OccupancyMap,
    current: &Pose,
    cell: Cell,
    cam: &CameraConfig,
) -> f64 {
    let geom = *object.geometry();
    let candidate = oracle_candidate(&geom, current, cell);
    let before: Vec<f64> = geom.cells().map(|c| object.raw_probability(c)).collect();
    let mut after = before.clone();
    let seen: BTreeSet<Cell> = predicted_wedge(occupancy, &candidate, cam)
        .into_iter()
        .collect();
    for c in seen {
        let i = c.y * geom.width + c.x;
        let p_now = classify(before[i]);
        let ratio = dist(&geom, current, c) / dist(&geom, &candidate, c);
        let predicted = (p_now * ratio).min(1.0);
        after[i] = bayes(before[i], predicted);
    }
    total(&before) - total(&after)
}

pub fn oracle_candidate(geom: &GridGeometry, current: &Pose, cell: Cell) -> Pose {
    let x = (cell.x as f64 + 0.5) * geom.cell_size;
    let y = (cell.y as f64 + 0.5) * geom.cell_size;
    let (dx, dy) = (x - current.x, y - current.y);
    let heading = if dx.hypot(dy) > 1e-12 {
        dy.atan2(dx)
    } else {
        current.heading
    };
    Pose::new(x, y, heading)
}

/// Largest loss; near-ties within 1e-9 go to the nearest frontier, then to the
/// lowest row-major index.
pub fn oracle_select(
    frontiers: &[Cell],
    object: &ObjectMap,
    occupancy: &OccupancyMap,
    current: &Pose,
    cam: &CameraConfig,
) -> Option<(Cell, f64)> {
    let geom = *object.geometry();
    let scored: Vec<(Cell, f64)> = frontiers
        .iter()
        .map(|&f| (f, oracle_loss(object, occupancy, current, f, cam)))
        .collect();
    let best = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let mut ties: Vec<(f64, usize, Cell, f64)> = scored
        .into_iter()
        .filter(|s| s.1 >= best - 1e-9)
        .map(|(c, l)| {
            let x = (c.x as f64 + 0.5) * geom.cell_size;
            let y = (c.y as f64 + 0.5) * geom.cell_size;
            ((x - current.x).hypot(y - current.y), c.y * geom.width + c.x, c, l)
        })
        .collect();
    ties.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ties.first().map(|t| (t.2, t.3))
}

pub fn default_curiosity() -> CuriosityParams {
    CuriosityParams::default()
}

/// Single legal planner move from `a` to `b` towards `goal`, with its cost.
pub fn oracle_step(
    geom: &GridGeometry,
    labels: &[Label],
    a: Cell,
    b: Cell,
    goal: Cell,
) -> Option<f64> {
    let dx = b.x as isize - a.x as isize;
    let dy = b.y as isize - a.y as isize;
    if dx.abs() > 1 || dy.abs() > 1 || (dx == 0 && dy == 0) {
        return None;
    }
    let label = |x: usize, y: usize| labels[y * geom.width + x];
    let target = label(b.x, b.y);
    let enterable = target == Label::Free || (b == goal && target != Label::Occupied);
    if !enterable {
        return None;
    }
    if dx != 0 && dy != 0 {
        if label(b.x, a.y) != Label::Free || label(a.x, b.y) != Label::Free {
            return None;
        }
        return Some(std::f64::consts::SQRT_2 * geom.cell_size);
    }
    Some(geom.cell_size)
}

/// Shortest path cost by Bellman-Ford relaxation over every cell pair that is
/// a legal move. Only the start and free cells may be left from.
pub fn oracle_cost(geom: &GridGeometry, labels: &[Label], from: Cell, to: Cell) -> Option<f64> {
    if from == to {
        return Some(0.0);
    }
    if labels[to.y * geom.width + to.x] == Label::Occupied {
        return None;
    }
    let cells: Vec<Cell> = geom.cells().collect();
    let mut d = vec![f64::INFINITY; cells.len()];
    d[from.y * geom.width + from.x] = 0.0;
    loop {
        let mut changed = false;
        for (i, &a) in cells.iter().enumerate() {
            if !d[i].is_finite() || a == to {
                continue;
            }
            if a != from && labels[i] != Label::Free {
                continue;
            }
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (nx, ny) = (a.x as isize + dx, a.y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= geom.width as isize || ny >= geom.height as isize {
                        continue;
                    }
                    let b = Cell::new(nx as usize, ny as usize);
                    if let Some(w) = oracle_step(geom, labels, a, b, to) {
                        let j = b.y * geom.width + b.x;
                        if d[i] + w < d[j] - 1e-12 {
                            d[j] = d[i] + w;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let c = d[to.y * geom.width + to.x];
    c.is_finite().then_some(c)
}

pub struct OracleReport {
    pub cases: usize,
    pub agree: usize,
    /// Cases whose reference answer is non-trivial (positive loss, or a
    /// reachable goal with positive cost).
    pub informative: usize,
    pub first_mismatch: Option<String>,
}

impl OracleReport {
    pub fn all_agree(&self) -> bool {
        self.cases > 0 && self.agree == self.cases
    }
}

/// Random maps up to 8x8 with random poses and cameras; compares
/// `select_frontier` with [`oracle_select`].
pub fn frontier_oracle_cases(n: usize, seed: u64) -> OracleReport {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        cases: 0,
        agree: 0,
        informative: 0,
        first_mismatch: None,
    };
    while report.cases < n {
        let geom = geometry(
            rng.gen_range(3..=8),
            rng.gen_range(3..=8),
            [0.25, 0.5, 1.0][rng.gen_range(0..3)],
        );
        let occ = random_occupancy(&mut rng, geom, 0.55, 0.15);
        let frontiers = cdos::explorer::detect_frontiers(&occ);
        if frontiers.is_empty() {
            continue;
        }
        let object = random_object(&mut rng, geom);
        let at = frontiers[rng.gen_range(0..frontiers.len())];
        let (x, y) = geom.center(at);
        let pose = Pose::new(x, y, rng.gen_range(0.0..std::f64::consts::TAU));
        let cam = CameraConfig::new(
            rng.gen_range(20.0f64..180.0).to_radians(),
            rng.gen_range(1.0..4.0) * geom.cell_size * 2.0,
            rng.gen_range(0.2..1.5),
        );
        report.cases += 1;
        let got = cdos::select_frontier(&frontiers, &object, &occ, &pose, &cam, &default_curiosity())
            .ok()
            .map(|s| (s.cell, s.loss));
        let want = oracle_select(&frontiers, &object, &occ, &pose, &cam);
        if want.is_some_and(|w| w.1 > 0.0) {
            report.informative += 1;
        }
        let same = match (got, want) {
            (Some(g), Some(w)) => g.0 == w.0 && (g.1 - w.1).abs() <= 1e-9,
            (None, None) => true,
            _ => false,
        };
        if same {
            report.agree += 1;
        } else if report.first_mismatch.is_none() {
            report.first_mismatch = Some(format!(
                "case {}: select_frontier {got:?}, oracle {want:?}",
                report.cases
            ));
        }
    }
    report
}

fn random_labels(rng: &mut ChaCha8Rng, geom: &GridGeometry) -> Vec<Label> {
    (0..geom.len())
        .map(|_| match rng.gen_range(0..100) {
            0..=24 => Label::Occupied,
            25..=34 => Label::Unknown,
            _ => Label::Free,
        })
        .collect()
}

fn map_from_labels(geom: GridGeometry, labels: &[Label]) -> OccupancyMap {
    let mut map = OccupancyMap::new(geom, OccupancyParams::default());
    for c in geom.cells() {
        match labels[geom.index(c)] {
            Label::Free => map.grid.observe(c, 0.1),
            Label::Occupied => map.grid.observe(c, 0.9),
            Label::Unknown => {}
        }
    }
    map
}

/// Random 20x20 label maps; compares `plan_path` cost and reachability with
/// [`oracle_cost`] and checks that every returned path is a chain of legal moves.
pub fn planner_oracle_cases(n: usize, seed: u64) -> OracleReport {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        cases: 0,
        agree: 0,
        informative: 0,
        first_mismatch: None,
    };
    for case in 0..n {
        let geom = geometry(20, 20, [0.25, 1.0][case % 2]);
        let labels = random_labels(&mut rng, &geom);
        let map = map_from_labels(geom, &labels);
        assert_eq!(map.labels(), labels, "label construction");
        let free: Vec<Cell> = geom
            .cells()
            .filter(|c| labels[geom.index(*c)] == Label::Free)
            .collect();
        let from = free[rng.gen_range(0..free.len())];
        let to = geom.cell_of_index(rng.gen_range(0..geom.len()));
        report.cases += 1;
        let got = cdos::plan_path(&map, from, to);
        let want = oracle_cost(&geom, &labels, from, to);
        if want.is_some_and(|c| c > 0.0) {
            report.informative += 1;
        }
        let ok = match (&got, want) {
            (None, None) => true,
            (Some(path), Some(cost)) => {
                let mut sum = 0.0;
                let mut legal = path.cells.first() == Some(&from) && path.cells.last() == Some(&to);
                for w in path.cells.windows(2) {
                    match oracle_step(&geom, &labels, w[0], w[1], to) {
                        Some(s) => sum += s,
                        None => legal = false,
                    }
                }
                legal && (path.cost - cost).abs() <= 1e-9 && (sum - cost).abs() <= 1e-9
            }
            _ => false,
        };
        if ok {
            report.agree += 1;
        } else if report.first_mismatch.is_none() {
            report.first_mismatch = Some(format!(
                "case {case}: {from} -> {to}: plan_path {:?}, oracle {want:?}",
                got.map(|p| p.cost)
            ));
        }
    }
    report
}

/// Experiment config over both fixture maps with `samples` placements per zone.
pub fn small_config(dir: &std::path::Path, samples: usize) -> PathBuf {
    let text = format!(
        "samples_per_zone = {samples}\nseed = 5\neta = 1.425\n\n\
         [[maps]]\nid = \"sparse\"\nmap = {:?}\nzones = {:?}\n\n\
         [[maps]]\nid = \"dense\"\nmap = {:?}\nzones = {:?}\n",
        fixture("sparse.map"),
        fixture("sparse_zones.toml"),
        fixture("dense.map"),
        fixture("dense_zones.toml"),
    );
    let path = dir.join("small.toml");
    std::fs::write(&path, text).unwrap();
    path
}

/// Every file under `dir`, by name, with its bytes.
pub fn read_dir_bytes(dir: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

pub fn cdos_cli(args: &[&str], threads: usize) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_cdos"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .expect("cdos binary runs")
}

/// Runs each CLI subcommand twice, once single-threaded and once with eight
/// worker threads, and compares every emitted file byte for byte.
pub fn cli_outputs_repeat(work: &std::path::Path) -> Result<usize, String> {
    let config = small_config(work, 2);
    let config = config.to_str().unwrap();
    let map = fixture("dense.map");
    let map = map.to_str().unwrap();
    let zones = fixture("dense_zones.toml");
    let zones = zones.to_str().unwrap();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("zones", vec!["zones", "--config", config]),
        ("sweep", vec!["sweep", "--config", config, "--vary", "beta", "--values", "20,40"]),
        ("pgm", vec!["explore", "--map", map, "--config", config, "--zones", zones, "--zone", "3", "--seed", "9", "--render", "pgm"]),
        ("ascii", vec!["explore", "--map", map, "--config", config, "--zones", zones, "--zone", "5", "--seed", "4", "--method", "baseline", "--render", "ascii"]),
        ("mission", vec!["mission", "--map", map, "--config", config, "--zones", zones, "--zone", "2", "--seed", "1"]),
    ];
    let mut files = 0;
    for (name, args) in runs {
        let mut outputs = Vec::new();
        for threads in [1, 8] {
            let out = work.join(format!("{name}-{threads}"));
            let mut full = args.clone();
            full.extend(["--out", out.to_str().unwrap()]);
            let o = cdos_cli(&full, threads);
            if !o.status.success() {
                return Err(format!(
                    "{name}: exit {:?}: {}",
                    o.status.code(),
                    String::from_utf8_lossy(&o.stderr)
                ));
            }
            outputs.push(read_dir_bytes(&out));
        }
        if outputs[0].is_empty() {
            return Err(format!("{name}: no files written"));
        }
        if outputs[0] != outputs[1] {
            let differing: Vec<&String> = outputs[0]
                .keys()
                .filter(|k| outputs[0].get(*k) != outputs[1].get(*k))
                .collect();
            return Err(format!("{name}: files differ between runs: {differing:?}"));
        }
        files += outputs[0].len();
    }
    Ok(files)
}

pub fn mission_events() -> Vec<MissionEvent> {
    vec![
        E::HiddenSpaceFound,
        E::Touchdown,
        E::Detection { conf: 0.97 },
        E::Detection { conf: 0.95 },
        E::Detection { conf: 0.5 },
        E::FrontiersExhausted,
        E::WithinDmin,
        E::GrabComplete,
        E::RetractComplete { object_aboard: false },
        E::RetractComplete { object_aboard: true },
        E::ResumeSearch,
    ]
}

/// Expected successor, written out pair by pair.
pub fn expected_transition(phase: MissionPhase, event: MissionEvent) -> Option<MissionPhase> {
    let accepted = [
        (P::AerialExploration, E::HiddenSpaceFound, P::Landing),
        (P::Landing, E::Touchdown, P::HiddenExploration),
        (P::HiddenExploration, E::Detection { conf: 0.97 }, P::ObjectTracking),
        (P::HiddenExploration, E::FrontiersExhausted, P::Retracting),
        (P::ObjectTracking, E::WithinDmin, P::Grabbing),
        (P::Grabbing, E::GrabComplete, P::Retracting),
        (P::Retracting, E::RetractComplete { object_aboard: false }, P::AerialContinue),
        (P::Retracting, E::RetractComplete { object_aboard: true }, P::Complete),
        (P::AerialContinue, E::ResumeSearch, P::AerialExploration),
    ];
    accepted
        .iter()
        .find(|(p, e, _)| *p == phase && *e == event)
        .map(|t| t.2)
}
