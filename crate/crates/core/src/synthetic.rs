//! Seeded multi-room scenes with ground-truth affordances, correlated side
//! information, evaluation cameras and sparse demonstrations.
//!
//! Floors are split into rooms by binary space partitioning; every split
//! line gets one doorway. Rooms are furnished according to their type and
//! objects afford activities within `sqrt(2)` cells, the same radius the
//! object scores use. Scene-class scores follow a per-type signature and
//! object scores come from noisy detections of the placed objects.

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::baselines::CategoryActivityMap;
use crate::dataset::{Dataset, SceneData};
use crate::error::{Error, Result};
use crate::evaluation::ImagePose;
use crate::numfmt::quantize9;
use crate::scene::{ActivityVocabulary, Cell, Demonstration, SceneGrid, DEFAULT_CELL_SIZE_M};
use crate::side_info::{aggregate_object_scores, object_score, FeatureTable, OBJECT_RADIUS};

pub const SCENE_CLASSES: [&str; 6] = ["office", "conference_room", "kitchen", "living_room", "corridor", "lobby"];

pub const OBJECT_CATEGORIES: [&str; 9] =
    ["chair", "desk", "monitor", "whiteboard", "sink", "door", "sofa", "plant", "bin"];

const CHAIR: usize = 0;
const DESK: usize = 1;
const MONITOR: usize = 2;
const WHITEBOARD: usize = 3;
const SINK: usize = 4;
const DOOR: usize = 5;
const SOFA: usize = 6;
const PLANT: usize = 7;
const BIN: usize = 8;

// activity indices of the default vocabulary
const SIT: usize = 0;
const TYPE: usize = 1;
const OPEN_DOOR: usize = 2;
const READ: usize = 3;
const WRITE: usize = 4;
const WASH: usize = 5;

const LAYOUT_ATTEMPTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoomType {
    Office,
    Meeting,
    Kitchen,
    Lounge,
    Corridor,
}

impl RoomType {
    pub const ALL: [RoomType; 5] = [
        RoomType::Office,
        RoomType::Meeting,
        RoomType::Kitchen,
        RoomType::Lounge,
        RoomType::Corridor,
    ];

    /// Expected scene-classifier output inside a room of this type.
    pub fn signature(self) -> [f64; 6] {
        match self {
            RoomType::Office => [0.60, 0.15, 0.03, 0.05, 0.07, 0.10],
            RoomType::Meeting => [0.15, 0.60, 0.03, 0.07, 0.05, 0.10],
            RoomType::Kitchen => [0.05, 0.07, 0.70, 0.08, 0.05, 0.05],
            RoomType::Lounge => [0.05, 0.08, 0.07, 0.60, 0.05, 0.15],
            RoomType::Corridor => [0.07, 0.03, 0.03, 0.05, 0.60, 0.22],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RoomType::Office => "office",
            RoomType::Meeting => "meeting",
            RoomType::Kitchen => "kitchen",
            RoomType::Lounge => "lounge",
            RoomType::Corridor => "corridor",
        }
    }
}

/// Noise levels of the simulated perception stack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Scale of per-room and per-cell perturbations of scene-class scores.
    pub feature_sigma: f64,
    /// Weight of the neighbouring room's signature on cells next to a wall.
    pub border_mixing: f64,
    pub miss_rate: f64,
    /// Expected spurious detections per room.
    pub false_positives: f64,
    /// Std-dev of detected object positions, cells.
    pub detection_jitter: f64,
    /// Std-dev of demonstration localization error, cells.
    pub loc_sigma: f64,
}

impl NoiseSpec {
    pub const ZERO: NoiseSpec = NoiseSpec {
        feature_sigma: 0.0,
        border_mixing: 0.0,
        miss_rate: 0.0,
        false_positives: 0.0,
        detection_jitter: 0.0,
        loc_sigma: 0.0,
    };
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            feature_sigma: 0.005,
            border_mixing: 0.2,
            miss_rate: 0.25,
            false_positives: 0.3,
            detection_jitter: 0.35,
            loc_sigma: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldSpec {
    pub width: usize,
    pub height: usize,
    pub cell_size_m: f64,
    pub min_room: usize,
    pub max_room: usize,
    pub target_explored: f64,
    pub demonstrations: usize,
    /// Evaluation cameras per scene.
    pub poses: usize,
    pub noise: NoiseSpec,
}

impl WorldSpec {
    /// Sized and calibrated after the first office floor of the real data:
    /// about 59% of the cells explored, 3% carrying demonstrations.
    pub fn office_a_like() -> Self {
        WorldSpec {
            width: 64,
            height: 48,
            cell_size_m: DEFAULT_CELL_SIZE_M,
            min_room: 6,
            max_room: 16,
            target_explored: 0.59,
            demonstrations: 90,
            poses: 160,
            noise: NoiseSpec::default(),
        }
    }

    /// Small floors for repeated experiments.
    pub fn compact() -> Self {
        WorldSpec {
            width: 32,
            height: 20,
            cell_size_m: DEFAULT_CELL_SIZE_M,
            min_room: 5,
            max_room: 11,
            target_explored: 0.6,
            demonstrations: 24,
            poses: 80,
            noise: NoiseSpec::default(),
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise = NoiseSpec::ZERO;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.noise;
        for (name, p) in [
            ("target_explored", self.target_explored),
            ("border_mixing", n.border_mixing),
            ("miss_rate", n.miss_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        for (name, s) in [
            ("feature_sigma", n.feature_sigma),
            ("false_positives", n.false_positives),
            ("detection_jitter", n.detection_jitter),
            ("loc_sigma", n.loc_sigma),
        ] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {s} must be finite and >= 0")));
            }
        }
        if self.min_room < 3 || self.max_room < self.min_room {
            return Err(Error::InvalidParameter(format!(
                "room sizes {}..{} need 3 <= min <= max",
                self.min_room, self.max_room
            )));
        }
        if self.width < self.min_room || self.height < self.min_room {
            return Err(Error::InvalidParameter(format!(
                "{}x{} floor cannot hold a {}-cell room",
                self.width, self.height, self.min_room
            )));
        }
        if !(self.cell_size_m > 0.0) {
            return Err(Error::InvalidParameter("cell size must be > 0".into()));
        }
        Ok(())
    }
}

/// Axis-aligned room, in cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Room {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
    pub kind: RoomType,
}

impl Room {
    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x < self.x0 + self.w && c.y >= self.y0 && c.y < self.y0 + self.h
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.y0..self.y0 + self.h).flat_map(move |y| (self.x0..self.x0 + self.w).map(move |x| Cell::new(x, y)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlacedObject {
    pub category: usize,
    /// Continuous grid position.
    pub position: [f64; 2],
    pub room: usize,
}

/// Geometry of a generated floor.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub width: usize,
    pub height: usize,
    pub rooms: Vec<Room>,
    /// Room index of every cell, row-major.
    pub room_of: Vec<usize>,
    pub objects: Vec<PlacedObject>,
}

impl Layout {
    pub fn room_at(&self, c: Cell) -> &Room {
        &self.rooms[self.room_of[c.y * self.width + c.x]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedScene {
    pub data: SceneData,
    pub layout: Layout,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedDataset {
    pub dataset: Dataset,
    pub layouts: Vec<Layout>,
}

/// Which activities each object category affords, as the generator assigns
/// them.
pub fn category_activity_map() -> CategoryActivityMap {
    let mut by_category = vec![Vec::new(); OBJECT_CATEGORIES.len()];
    by_category[CHAIR] = vec![SIT];
    by_category[SOFA] = vec![SIT, READ];
    by_category[MONITOR] = vec![TYPE];
    by_category[WHITEBOARD] = vec![WRITE];
    by_category[SINK] = vec![WASH];
    by_category[DOOR] = vec![OPEN_DOOR];
    CategoryActivityMap::new(ActivityVocabulary::DEFAULT_NAMES.len(), by_category).expect("indices in range")
}

#[derive(Clone, Copy)]
struct Rect {
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
}

fn partition(r: Rect, spec: &WorldSpec, rng: &mut ChaCha8Rng, leaves: &mut Vec<Rect>, doors: &mut Vec<[f64; 2]>) {
    let can_x = r.w >= 2 * spec.min_room;
    let can_y = r.h >= 2 * spec.min_room;
    let small = r.w <= spec.max_room && r.h <= spec.max_room;
    if !(can_x || can_y) || (small && rng.random_bool(0.3)) {
        leaves.push(r);
        return;
    }
    let split_x = if can_x && can_y { r.w >= r.h } else { can_x };
    if split_x {
        let at = spec.min_room + rng.random_range(0..=r.w - 2 * spec.min_room);
        let t = r.y0 + rng.random_range(0..r.h);
        doors.push([(r.x0 + at) as f64, t as f64 + 0.5]);
        partition(Rect { w: at, ..r }, spec, rng, leaves, doors);
        partition(Rect { x0: r.x0 + at, w: r.w - at, ..r }, spec, rng, leaves, doors);
    } else {
        let at = spec.min_room + rng.random_range(0..=r.h - 2 * spec.min_room);
        let t = r.x0 + rng.random_range(0..r.w);
        doors.push([t as f64 + 0.5, (r.y0 + at) as f64]);
        partition(Rect { h: at, ..r }, spec, rng, leaves, doors);
        partition(Rect { y0: r.y0 + at, h: r.h - at, ..r }, spec, rng, leaves, doors);
    }
}

fn assign_types(rects: &[Rect], rng: &mut ChaCha8Rng) -> Vec<RoomType> {
    let mut kinds: Vec<Option<RoomType>> = rects
        .iter()
        .map(|r| {
            let (lo, hi) = (r.w.min(r.h) as f64, r.w.max(r.h) as f64);
            (hi >= 2.5 * lo).then_some(RoomType::Corridor)
        })
        .collect();
    let mut free: Vec<usize> = (0..rects.len()).filter(|&i| kinds[i].is_none()).collect();
    free.shuffle(rng);
    // one room of every furnished type when there is space for it
    let essential = [RoomType::Office, RoomType::Kitchen, RoomType::Meeting, RoomType::Lounge];
    for (&i, &kind) in free.iter().zip(essential.iter()) {
        kinds[i] = Some(kind);
    }
    for &i in free.iter().skip(essential.len()) {
        let u: f64 = rng.random();
        kinds[i] = Some(match u {
            u if u < 0.5 => RoomType::Office,
            u if u < 0.75 => RoomType::Meeting,
            u if u < 0.9 => RoomType::Lounge,
            _ => RoomType::Kitchen,
        });
    }
    kinds.into_iter().map(|k| k.expect("every room typed")).collect()
}

struct Furnisher<'a> {
    rng: &'a mut ChaCha8Rng,
    taken: HashSet<Cell>,
    objects: Vec<PlacedObject>,
}

impl Furnisher<'_> {
    fn put(&mut self, category: usize, c: Cell, room: usize) {
        self.taken.insert(c);
        self.objects.push(PlacedObject { category, position: c.center(), room });
    }

    /// Random free cell at least `margin` cells away from the room's walls.
    fn free_cell(&mut self, r: &Room, margin: usize) -> Option<Cell> {
        let margin = if r.w > 2 * margin && r.h > 2 * margin { margin } else { 0 };
        for _ in 0..40 {
            let x = r.x0 + margin + self.rng.random_range(0..r.w - 2 * margin);
            let y = r.y0 + margin + self.rng.random_range(0..r.h - 2 * margin);
            let c = Cell::new(x, y);
            if !self.taken.contains(&c) {
                return Some(c);
            }
        }
        None
    }

    /// Random free cell along one of the room's walls.
    fn wall_cell(&mut self, r: &Room) -> Option<Cell> {
        for _ in 0..40 {
            let c = match self.rng.random_range(0..4) {
                0 => Cell::new(r.x0 + self.rng.random_range(0..r.w), r.y0),
                1 => Cell::new(r.x0 + self.rng.random_range(0..r.w), r.y0 + r.h - 1),
                2 => Cell::new(r.x0, r.y0 + self.rng.random_range(0..r.h)),
                _ => Cell::new(r.x0 + r.w - 1, r.y0 + self.rng.random_range(0..r.h)),
            };
            if !self.taken.contains(&c) {
                return Some(c);
            }
        }
        None
    }

    fn neighbour(&mut self, r: &Room, c: Cell) -> Option<Cell> {
        let mut dirs = [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)];
        dirs.shuffle(self.rng);
        dirs.iter().find_map(|&(dx, dy)| {
            let (x, y) = (c.x as i64 + dx, c.y as i64 + dy);
            if x < 0 || y < 0 {
                return None;
            }
            let n = Cell::new(x as usize, y as usize);
            (r.contains(n) && !self.taken.contains(&n)).then_some(n)
        })
    }

    fn furnish(&mut self, idx: usize, r: &Room) {
        match r.kind {
            RoomType::Office => {
                let clusters = (r.area() / 30).clamp(1, 4);
                for _ in 0..clusters {
                    let Some(desk) = self.free_cell(r, 1) else { continue };
                    let Some(chair) = self.neighbour(r, desk) else { continue };
                    self.put(DESK, desk, idx);
                    self.objects.push(PlacedObject { category: MONITOR, position: desk.center(), room: idx });
                    self.put(CHAIR, chair, idx);
                }
            }
            RoomType::Meeting => {
                let table = Cell::new(r.x0 + r.w / 2, r.y0 + r.h / 2);
                self.put(DESK, table, idx);
                let seats = self.rng.random_range(2..=5);
                for _ in 0..seats {
                    if let Some(c) = self.neighbour(r, table) {
                        self.put(CHAIR, c, idx);
                    }
                }
                if let Some(c) = self.wall_cell(r) {
                    self.put(WHITEBOARD, c, idx);
                }
            }
            RoomType::Kitchen => {
                if let Some(c) = self.wall_cell(r) {
                    self.put(SINK, c, idx);
                }
                if self.rng.random_bool(0.5) {
                    if let Some(t) = self.free_cell(r, 1) {
                        self.put(DESK, t, idx);
                        if let Some(c) = self.neighbour(r, t) {
                            self.put(CHAIR, c, idx);
                        }
                    }
                }
                if let Some(c) = self.free_cell(r, 0) {
                    self.put(BIN, c, idx);
                }
            }
            RoomType::Lounge => {
                let sofas = self.rng.random_range(1..=2);
                for _ in 0..sofas {
                    if let Some(c) = self.free_cell(r, 1) {
                        self.put(SOFA, c, idx);
                    }
                }
                if let Some(c) = self.free_cell(r, 0) {
                    self.put(PLANT, c, idx);
                }
            }
            RoomType::Corridor => {
                for _ in 0..self.rng.random_range(0..=2) {
                    let cat = if self.rng.random_bool(0.5) { PLANT } else { BIN };
                    if let Some(c) = self.free_cell(r, 0) {
                        self.put(cat, c, idx);
                    }
                }
            }
        }
        if r.kind != RoomType::Corridor && self.rng.random_bool(0.5) {
            if let Some(c) = self.free_cell(r, 0) {
                let cat = if self.rng.random_bool(0.5) { PLANT } else { BIN };
                self.put(cat, c, idx);
            }
        }
    }
}

fn build_layout(spec: &WorldSpec, rng: &mut ChaCha8Rng) -> Layout {
    let mut rects = Vec::new();
    let mut doors = Vec::new();
    let whole = Rect { x0: 0, y0: 0, w: spec.width, h: spec.height };
    partition(whole, spec, rng, &mut rects, &mut doors);
    let kinds = assign_types(&rects, rng);
    let rooms: Vec<Room> = rects
        .iter()
        .zip(&kinds)
        .map(|(r, &kind)| Room { x0: r.x0, y0: r.y0, w: r.w, h: r.h, kind })
        .collect();
    let mut room_of = vec![0; spec.width * spec.height];
    for (i, r) in rooms.iter().enumerate() {
        for c in r.cells() {
            room_of[c.y * spec.width + c.x] = i;
        }
    }
    let mut f = Furnisher { rng, taken: HashSet::new(), objects: Vec::new() };
    for d in &doors {
        let c = Cell::new(d[0].floor().min((spec.width - 1) as f64) as usize, d[1].floor().min((spec.height - 1) as f64) as usize);
        f.taken.insert(c);
        f.objects.push(PlacedObject { category: DOOR, position: *d, room: room_of[c.y * spec.width + c.x] });
    }
    for (i, r) in rooms.iter().enumerate() {
        f.furnish(i, r);
    }
    Layout {
        width: spec.width,
        height: spec.height,
        rooms,
        room_of,
        objects: f.objects,
    }
}

/// Activities afforded by an object in a room of the given type.
fn affordances(category: usize, kind: RoomType) -> &'static [usize] {
    match category {
        CHAIR if kind == RoomType::Office => &[SIT, TYPE],
        CHAIR => &[SIT],
        SOFA => &[SIT, READ],
        WHITEBOARD => &[WRITE],
        SINK => &[WASH],
        DOOR => &[OPEN_DOOR],
        _ => &[],
    }
}

/// Cells whose centers lie within the object radius of `p`.
fn cells_near(p: [f64; 2], width: usize, height: usize) -> Vec<Cell> {
    let reach = OBJECT_RADIUS.ceil() as i64 + 1;
    let (px, py) = (p[0].floor() as i64, p[1].floor() as i64);
    let mut out = Vec::new();
    for y in (py - reach).max(0)..=(py + reach).min(height as i64 - 1) {
        for x in (px - reach).max(0)..=(px + reach).min(width as i64 - 1) {
            let c = Cell::new(x as usize, y as usize);
            let [cx, cy] = c.center();
            if object_score((cx - p[0]).hypot(cy - p[1])) > 0.0 {
                out.push(c);
            }
        }
    }
    out
}

fn scene_scores(layout: &Layout, noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (w, h) = (layout.width, layout.height);
    let classes = SCENE_CLASSES.len();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let room_offsets: Vec<Vec<f64>> = layout
        .rooms
        .iter()
        .map(|_| (0..classes).map(|_| normal.sample(rng)).collect())
        .collect();
    let raw: Vec<f64> = (0..w * h * classes).map(|_| normal.sample(rng)).collect();
    let mut out = Array2::<f64>::zeros((w * h, classes));
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let room = layout.room_of[i];
            let mut p = layout.rooms[room].kind.signature().to_vec();
            if noise.border_mixing > 0.0 {
                // nearest cell of a different room among the 4-neighbours
                let other = [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)].iter().find_map(|&(dx, dy)| {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        return None;
                    }
                    let r = layout.room_of[ny as usize * w + nx as usize];
                    (r != room).then_some(r)
                });
                if let Some(r) = other {
                    let s = layout.rooms[r].kind.signature();
                    for (v, t) in p.iter_mut().zip(s) {
                        *v = (1.0 - noise.border_mixing) * *v + noise.border_mixing * t;
                    }
                }
            }
            if noise.feature_sigma > 0.0 {
                for (k, v) in p.iter_mut().enumerate() {
                    // cell noise averaged over the same-room 3x3 neighbourhood
                    let mut acc = 0.0;
                    let mut n = 0;
                    for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                        for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                            let j = ny * w + nx;
                            if layout.room_of[j] == room {
                                acc += raw[j * classes + k];
                                n += 1;
                            }
                        }
                    }
                    let e = room_offsets[room][k] + acc / n as f64;
                    *v = (*v + noise.feature_sigma * e).max(0.0);
                }
            }
            let total: f64 = p.iter().sum();
            for (k, v) in p.iter().enumerate() {
                out[[i, k]] = quantize9(v / total);
            }
        }
    }
    out
}

fn detections(layout: &Layout, noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> Vec<(usize, [f64; 2])> {
    let jitter = Normal::new(0.0, noise.detection_jitter.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let clamp = |v: f64, n: usize| v.clamp(0.0, n as f64);
    let mut out = Vec::new();
    for o in &layout.objects {
        if noise.miss_rate > 0.0 && rng.random_bool(noise.miss_rate) {
            continue;
        }
        let mut p = o.position;
        if noise.detection_jitter > 0.0 {
            p[0] = clamp(p[0] + jitter.sample(rng), layout.width);
            p[1] = clamp(p[1] + jitter.sample(rng), layout.height);
        }
        out.push((o.category, p));
    }
    if noise.false_positives > 0.0 {
        for r in &layout.rooms {
            let whole = noise.false_positives.floor() as usize;
            let extra = usize::from(rng.random_bool(noise.false_positives.fract()));
            for _ in 0..whole + extra {
                let cat = rng.random_range(0..OBJECT_CATEGORIES.len());
                let p = [
                    r.x0 as f64 + rng.random::<f64>() * r.w as f64,
                    r.y0 as f64 + rng.random::<f64>() * r.h as f64,
                ];
                out.push((cat, p));
            }
        }
    }
    out
}

/// Greedy room selection approaching `target` explored fraction, starting
/// with one room of every furnished type.
fn explore(layout: &Layout, target: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let total = (layout.width * layout.height) as f64;
    let mut order: Vec<usize> = (0..layout.rooms.len()).collect();
    order.shuffle(rng);
    let mut seen = HashSet::new();
    let (mut first, rest): (Vec<usize>, Vec<usize>) = order
        .into_iter()
        .partition(|&i| layout.rooms[i].kind != RoomType::Corridor && seen.insert(layout.rooms[i].kind));
    first.extend(rest);
    let mut explored = vec![false; layout.width * layout.height];
    let mut covered = 0.0;
    for i in first {
        let a = layout.rooms[i].area() as f64 / total;
        if (covered + a - target).abs() < (covered - target).abs() {
            covered += a;
            for c in layout.rooms[i].cells() {
                explored[c.y * layout.width + c.x] = true;
            }
        }
    }
    explored
}

fn eval_poses(layout: &Layout, grid: &SceneGrid, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<ImagePose>> {
    let labelled: Vec<Cell> = grid.cells().filter(|&c| !grid.labels(c).is_empty()).collect();
    let mut poses = Vec::with_capacity(count);
    let q = |v: f64| quantize9(v);
    for k in 0..count {
        let targeted = k % 2 == 0 && !labelled.is_empty();
        if targeted {
            let target = labelled[rng.random_range(0..labelled.len())];
            let room = *layout.room_at(target);
            let [tx, ty] = target.center();
            let mut pos = None;
            for _ in 0..30 {
                let d = rng.random_range(2.0..4.0);
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                let (x, y) = (tx + d * a.cos(), ty + d * a.sin());
                let inside = x >= room.x0 as f64
                    && y >= room.y0 as f64
                    && x < (room.x0 + room.w) as f64
                    && y < (room.y0 + room.h) as f64;
                if inside {
                    pos = Some([x, y]);
                    break;
                }
            }
            let [x, y] = pos.unwrap_or_else(|| {
                let c = Cell::new(room.x0 + rng.random_range(0..room.w), room.y0 + rng.random_range(0..room.h));
                c.center()
            });
            let (hx, hy) = (tx - x, ty - y);
            let heading = if hx.hypot(hy) > 1e-9 {
                let a = hy.atan2(hx);
                [q(a.cos()), q(a.sin())]
            } else {
                [1.0, 0.0]
            };
            poses.push(ImagePose::new([q(x), q(y)], heading)?);
        } else {
            let x = rng.random::<f64>() * layout.width as f64;
            let y = rng.random::<f64>() * layout.height as f64;
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            poses.push(ImagePose::new([q(x), q(y)], [q(a.cos()), q(a.sin())])?);
        }
    }
    Ok(poses)
}

fn place_demonstrations(grid: &mut SceneGrid, count: usize, loc_sigma: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut candidates: Vec<(Cell, usize)> = grid
        .cells()
        .filter(|&c| grid.is_explored(c))
        .flat_map(|c| grid.labels(c).iter().map(move |&a| (c, a)).collect::<Vec<_>>())
        .collect();
    candidates.shuffle(rng);
    // one demonstration of every activity available first
    let mut seen = HashSet::new();
    let (mut order, rest): (Vec<_>, Vec<_>) = candidates.into_iter().partition(|&(_, a)| seen.insert(a));
    order.extend(rest);
    let jitter = Normal::new(0.0, loc_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    for (cell, activity) in order {
        if grid.demonstrations().len() >= count {
            break;
        }
        let mut c = cell;
        if loc_sigma > 0.0 {
            let x = (cell.x as i64 + jitter.sample(rng).round() as i64).clamp(0, w - 1);
            let y = (cell.y as i64 + jitter.sample(rng).round() as i64).clamp(0, h - 1);
            c = Cell::new(x as usize, y as usize);
        }
        grid.add_demonstration(Demonstration::labelled(c, activity))?;
    }
    Ok(())
}

fn try_generate(spec: &WorldSpec, id: &str, rng: &mut ChaCha8Rng) -> Result<Option<GeneratedScene>> {
    let layout = build_layout(spec, rng);
    if layout.rooms.len() < 2 {
        return Ok(None);
    }
    let mut grid = SceneGrid::new(id, spec.width, spec.height, spec.cell_size_m, ActivityVocabulary::default())?;
    for o in &layout.objects {
        let kind = layout.rooms[o.room].kind;
        for &a in affordances(o.category, kind) {
            for c in cells_near(o.position, spec.width, spec.height) {
                grid.add_label(c, a)?;
            }
        }
    }
    if grid.labelled_cell_count() == 0 {
        return Ok(None);
    }
    let p = scene_scores(&layout, &spec.noise, rng);
    let dets = detections(&layout, &spec.noise, rng);
    let o = aggregate_object_scores(&dets, spec.width, spec.height, OBJECT_CATEGORIES.len())?.mapv(quantize9);
    let features = FeatureTable { scene_scores: p, object_scores: o };
    let explored = explore(&layout, spec.target_explored, rng);
    for (i, &e) in explored.iter().enumerate() {
        if e {
            grid.mark_explored(grid.cell_at(i))?;
        }
    }
    place_demonstrations(&mut grid, spec.demonstrations, spec.noise.loc_sigma, rng)?;
    let poses = eval_poses(&layout, &grid, spec.poses, rng)?;
    let data = SceneData::new(grid, features, poses)?;
    Ok(Some(GeneratedScene { data, layout }))
}

/// One scene named `id`. Layouts that come out degenerate are redrawn a
/// bounded number of times.
pub fn generate_scene(spec: &WorldSpec, id: &str, seed: u64) -> Result<GeneratedScene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..LAYOUT_ATTEMPTS {
        if let Some(scene) = try_generate(spec, id, &mut rng)? {
            return Ok(scene);
        }
    }
    Err(Error::InfeasibleLayout {
        attempts: LAYOUT_ATTEMPTS,
        reason: format!("{}x{} floor never produced two furnished rooms", spec.width, spec.height),
    })
}

/// Seed of the `k`-th scene of a dataset drawn with `seed`.
pub fn scene_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// `scenes` independent floors named `scene0`, `scene1`, ... sharing the
/// vocabularies and room types.
pub fn generate_dataset(spec: &WorldSpec, scenes: usize, seed: u64) -> Result<GeneratedDataset> {
    if scenes == 0 {
        return Err(Error::Empty("dataset needs at least one scene"));
    }
    let generated: Vec<GeneratedScene> = {
        use rayon::prelude::*;
        (0..scenes)
            .into_par_iter()
            .map(|k| generate_scene(spec, &format!("scene{k}"), scene_seed(seed, k)))
            .collect::<Result<_>>()?
    };
    let (scenes, layouts): (Vec<SceneData>, Vec<Layout>) = generated.into_iter().map(|g| (g.data, g.layout)).unzip();
    let dataset = Dataset::new(
        SCENE_CLASSES.iter().map(|s| s.to_string()).collect(),
        OBJECT_CATEGORIES.iter().map(|s| s.to_string()).collect(),
        category_activity_map(),
        scenes,
    )?;
    Ok(GeneratedDataset { dataset, layouts })
}

/// The first `round(fraction * n)` demonstrations of a seeded permutation
/// of the scene's `n` demonstrations. Smaller fractions are prefixes of
/// larger ones under the same seed.
pub fn sample_demonstrations(scene: &SceneGrid, fraction: f64, seed: u64) -> Result<Vec<Demonstration>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!("fraction {fraction} outside [0, 1]")));
    }
    let mut demos = scene.demonstrations().to_vec();
    demos.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let keep = (fraction * demos.len() as f64).round() as usize;
    demos.truncate(keep);
    Ok(demos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scene() {
        let spec = WorldSpec::compact();
        let a = generate_scene(&spec, "s", 11).unwrap();
        let b = generate_scene(&spec, "s", 11).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&spec, "s", 12).unwrap();
        assert_ne!(a.layout, c.layout);
    }

    #[test]
    fn rooms_tile_the_floor() {
        let g = generate_scene(&WorldSpec::compact(), "s", 3).unwrap();
        let area: usize = g.layout.rooms.iter().map(Room::area).sum();
        assert_eq!(area, 32 * 20);
        for (i, r) in g.layout.rooms.iter().enumerate() {
            for c in r.cells() {
                assert_eq!(g.layout.room_of[c.y * 32 + c.x], i);
            }
        }
    }

    #[test]
    fn noiseless_labelled_cells_carry_room_signature() {
        let g = generate_scene(&WorldSpec::compact().noiseless(), "s", 5).unwrap();
        let grid = &g.data.grid;
        for c in grid.cells().filter(|&c| !grid.labels(c).is_empty()) {
            let sig = g.layout.room_at(c).kind.signature();
            let total: f64 = sig.iter().sum();
            let row = g.data.features.scene_scores.row(grid.linear(c));
            for (v, s) in row.iter().zip(sig) {
                assert!((v - s / total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn demonstrations_are_bounded() {
        let spec = WorldSpec::compact();
        let g = generate_scene(&spec, "s", 9).unwrap();
        let stats = g.data.grid.stats();
        assert!(stats.demo_count <= spec.demonstrations);
        assert!(stats.r_a <= stats.r_e);
    }

    #[test]
    fn sampling_edges() {
        let g = generate_scene(&WorldSpec::compact(), "s", 2).unwrap();
        let grid = &g.data.grid;
        assert!(sample_demonstrations(grid, 0.0, 1).unwrap().is_empty());
        assert_eq!(sample_demonstrations(grid, 1.0, 1).unwrap().len(), grid.demonstrations().len());
        assert!(sample_demonstrations(grid, 1.5, 1).is_err());
    }

    #[test]
    fn bad_specs_are_rejected() {
        let mut spec = WorldSpec::compact();
        spec.noise.miss_rate = 1.5;
        assert!(generate_scene(&spec, "s", 0).is_err());
        let mut spec = WorldSpec::compact();
        spec.width = 3;
        assert!(spec.validate().is_err());
    }
}
