//! Kitchen grids: parsing, validation and precomputed navigation.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::Ingredient;

/// The layout shipped with the simulator.
pub const DEFAULT_LAYOUT: &str = include_str!("../layouts/default.map");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("parse error at row {row}, column {col}: {reason}")]
    Parse { row: usize, col: usize, reason: String },
    #[error("invalid layout: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: u8,
    pub y: u8,
}

impl Pos {
    pub const fn new(x: u8, y: u8) -> Self {
        Pos { x, y }
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        (self.x as i32 - other.x as i32).unsigned_abs() + (self.y as i32 - other.y as i32).unsigned_abs()
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    S,
    E,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::S, Direction::E, Direction::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::N => (0, -1),
            Direction::S => (0, 1),
            Direction::E => (1, 0),
            Direction::W => (-1, 0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TileKind {
    Floor,
    Counter,
    Pot,
    Dispenser(Ingredient),
    PlateStation,
    CustomerSeat(u8),
    CenterMarker,
}

impl TileKind {
    /// The chef may stand on floor and on the center marker.
    pub fn is_walkable(self) -> bool {
        matches!(self, TileKind::Floor | TileKind::CenterMarker)
    }

    pub fn glyph(self) -> char {
        match self {
            TileKind::Floor => '.',
            TileKind::Counter => '#',
            TileKind::Pot => 'U',
            TileKind::Dispenser(i) => i.glyph(),
            TileKind::PlateStation => 'D',
            TileKind::CustomerSeat(s) => (b'0' + s) as char,
            TileKind::CenterMarker => 'C',
        }
    }

    fn from_glyph(c: char) -> Option<TileKind> {
        Some(match c {
            '.' => TileKind::Floor,
            '#' => TileKind::Counter,
            'U' => TileKind::Pot,
            'O' => TileKind::Dispenser(Ingredient::Onion),
            'T' => TileKind::Dispenser(Ingredient::Tomato),
            'P' => TileKind::Dispenser(Ingredient::Potato),
            'D' => TileKind::PlateStation,
            '1'..='4' => TileKind::CustomerSeat(c as u8 - b'0'),
            'C' => TileKind::CenterMarker,
            _ => return None,
        })
    }
}

/// A chef standing position together with the direction it faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub pos: Pos,
    pub facing: Direction,
}

/// Shortest move counts between all poses, where a move either steps onto a
/// walkable neighbour or turns in place toward a blocked one.
#[derive(Debug, Clone)]
struct Navigation {
    /// Pose id by `tile_index * 4 + facing`, `NO_POSE` where unreachable.
    pose_ids: Vec<u32>,
    poses: Vec<Pose>,
    dist: Vec<u16>,
    /// Poses facing each non-walkable tile.
    facing_poses: BTreeMap<Pos, Vec<usize>>,
    /// Fewest moves from each pose to facing each tile, by `pose * tiles + tile`.
    to_tile: Vec<u16>,
}

const NO_POSE: u32 = u32::MAX;

const UNREACHABLE: u16 = u16::MAX;

#[derive(Debug, Clone)]
pub struct TileMap {
    width: usize,
    height: usize,
    tiles: Vec<TileKind>,
    pots: Vec<Pos>,
    seats: [Pos; 4],
    center: Pos,
    nav: Navigation,
}

impl PartialEq for TileMap {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.tiles == other.tiles
    }
}

impl Eq for TileMap {}

/// Parse and validate a layout document.
pub fn load_layout(text: &str) -> Result<TileMap, LayoutError> {
    TileMap::parse(text)
}

impl TileMap {
    pub fn parse(text: &str) -> Result<TileMap, LayoutError> {
        let mut rows: Vec<Vec<TileKind>> = Vec::new();
        for (row, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() {
                continue;
            }
            let mut tiles = Vec::with_capacity(line.len());
            for (col, c) in line.chars().enumerate() {
                let kind = TileKind::from_glyph(c).ok_or_else(|| LayoutError::Parse {
                    row,
                    col,
                    reason: format!("unknown glyph {c:?}"),
                })?;
                tiles.push(kind);
            }
            if let Some(first) = rows.first() {
                if first.len() != tiles.len() {
                    return Err(LayoutError::Parse {
                        row,
                        col: tiles.len(),
                        reason: format!("ragged row: expected {} columns", first.len()),
                    });
                }
            }
            rows.push(tiles);
        }
        if rows.is_empty() {
            return Err(LayoutError::Parse { row: 0, col: 0, reason: "empty layout".into() });
        }
        let height = rows.len();
        let width = rows[0].len();
        if width > 200 || height > 200 {
            return Err(LayoutError::Validation("layout larger than 200x200".into()));
        }
        let tiles: Vec<TileKind> = rows.into_iter().flatten().collect();
        Self::from_tiles(width, height, tiles)
    }

    fn from_tiles(width: usize, height: usize, tiles: Vec<TileKind>) -> Result<TileMap, LayoutError> {
        let at = |x: usize, y: usize| tiles[y * width + x];
        let positions = |pred: &dyn Fn(TileKind) -> bool| -> Vec<Pos> {
            let mut out = Vec::new();
            for y in 0..height {
                for x in 0..width {
                    if pred(at(x, y)) {
                        out.push(Pos::new(x as u8, y as u8));
                    }
                }
            }
            out
        };

        let pots = positions(&|t| t == TileKind::Pot);
        if pots.is_empty() {
            return Err(LayoutError::Validation("no pot".into()));
        }
        for ing in Ingredient::ALL {
            let n = positions(&|t| t == TileKind::Dispenser(ing)).len();
            if n != 1 {
                return Err(LayoutError::Validation(format!("expected exactly one {ing:?} dispenser, found {n}")));
            }
        }
        let mut seats = [Pos::new(0, 0); 4];
        for seat in 1..=4u8 {
            let found = positions(&|t| t == TileKind::CustomerSeat(seat));
            if found.len() != 1 {
                return Err(LayoutError::Validation(format!(
                    "expected exactly one seat {seat}, found {}",
                    found.len()
                )));
            }
            seats[seat as usize - 1] = found[0];
        }
        let centers = positions(&|t| t == TileKind::CenterMarker);
        if centers.len() != 1 {
            return Err(LayoutError::Validation(format!(
                "expected exactly one center marker, found {}",
                centers.len()
            )));
        }
        let center = centers[0];
        if positions(&|t| t == TileKind::PlateStation).is_empty() {
            return Err(LayoutError::Validation("no plate station".into()));
        }
        for y in 0..height {
            for x in 0..width {
                let border = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
                if border && at(x, y).is_walkable() {
                    return Err(LayoutError::Validation(format!("walkable border tile at ({x},{y})")));
                }
            }
        }

        // Flood fill from the center over walkable tiles.
        let mut reached = vec![false; tiles.len()];
        let mut queue = VecDeque::from([center]);
        reached[center.y as usize * width + center.x as usize] = true;
        while let Some(p) = queue.pop_front() {
            for d in Direction::ALL {
                let (dx, dy) = d.delta();
                let (nx, ny) = (p.x as i32 + dx, p.y as i32 + dy);
                if nx < 0 || ny < 0 || nx >= width as i32 || ny >= height as i32 {
                    continue;
                }
                let idx = ny as usize * width + nx as usize;
                if !reached[idx] && tiles[idx].is_walkable() {
                    reached[idx] = true;
                    queue.push_back(Pos::new(nx as u8, ny as u8));
                }
            }
        }
        let interactable = positions(&|t| {
            matches!(
                t,
                TileKind::Pot | TileKind::Dispenser(_) | TileKind::PlateStation | TileKind::CustomerSeat(_)
            )
        });
        for p in interactable {
            let ok = Direction::ALL.iter().any(|d| {
                let (dx, dy) = d.delta();
                let (nx, ny) = (p.x as i32 + dx, p.y as i32 + dy);
                nx >= 0
                    && ny >= 0
                    && nx < width as i32
                    && ny < height as i32
                    && reached[ny as usize * width + nx as usize]
            });
            if !ok {
                return Err(LayoutError::Validation(format!(
                    "{:?} at {p} is not reachable from the center",
                    at(p.x as usize, p.y as usize)
                )));
            }
        }

        let mut map = TileMap {
            width,
            height,
            tiles,
            pots,
            seats,
            center,
            nav: Navigation {
                pose_ids: Vec::new(),
                poses: Vec::new(),
                dist: Vec::new(),
                facing_poses: BTreeMap::new(),
                to_tile: Vec::new(),
            },
        };
        map.nav = map.build_navigation(&reached);
        Ok(map)
    }

    fn build_navigation(&self, reached: &[bool]) -> Navigation {
        let mut poses = Vec::new();
        let mut pose_ids = vec![NO_POSE; self.width * self.height * 4];
        for y in 0..self.height {
            for x in 0..self.width {
                if !reached[y * self.width + x] {
                    continue;
                }
                for facing in Direction::ALL {
                    let pose = Pose { pos: Pos::new(x as u8, y as u8), facing };
                    pose_ids[(y * self.width + x) * 4 + facing.index()] = poses.len() as u32;
                    poses.push(pose);
                }
            }
        }
        let n = poses.len();
        let mut dist = vec![UNREACHABLE; n * n];
        for (src, _) in poses.iter().enumerate() {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(cur) = queue.pop_front() {
                let d = row[cur];
                for dir in Direction::ALL {
                    if let Some(next) = self.move_pose(poses[cur], dir) {
                        let id = pose_ids[self.tile_index(next.pos) * 4 + next.facing.index()] as usize;
                        if row[id] == UNREACHABLE {
                            row[id] = d + 1;
                            queue.push_back(id);
                        }
                    }
                }
            }
        }
        let mut facing_poses: BTreeMap<Pos, Vec<usize>> = BTreeMap::new();
        for (id, pose) in poses.iter().enumerate() {
            if let Some(t) = self.neighbor(pose.pos, pose.facing) {
                if !self.tile(t).is_walkable() {
                    facing_poses.entry(t).or_default().push(id);
                }
            }
        }
        let tiles = self.width * self.height;
        let mut to_tile = vec![UNREACHABLE; n * tiles];
        for (t, ids) in &facing_poses {
            let ti = self.tile_index(*t);
            for src in 0..n {
                let best = ids.iter().map(|id| dist[src * n + id]).min().unwrap_or(UNREACHABLE);
                to_tile[src * tiles + ti] = best;
            }
        }
        Navigation { pose_ids, poses, dist, facing_poses, to_tile }
    }

    /// Result of a move action from `pose`, or `None` when the move would be
    /// a no-op (already facing a blocked tile).
    pub fn move_pose(&self, pose: Pose, dir: Direction) -> Option<Pose> {
        match self.neighbor(pose.pos, dir) {
            Some(q) if self.tile(q).is_walkable() => Some(Pose { pos: q, facing: dir }),
            _ if pose.facing != dir => Some(Pose { pos: pose.pos, facing: dir }),
            _ => None,
        }
    }

    pub fn neighbor(&self, p: Pos, dir: Direction) -> Option<Pos> {
        let (dx, dy) = dir.delta();
        let (nx, ny) = (p.x as i32 + dx, p.y as i32 + dy);
        (nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height)
            .then(|| Pos::new(nx as u8, ny as u8))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tile(&self, p: Pos) -> TileKind {
        self.tiles[p.y as usize * self.width + p.x as usize]
    }

    pub fn tile_index(&self, p: Pos) -> usize {
        p.y as usize * self.width + p.x as usize
    }

    pub fn tiles(&self) -> impl Iterator<Item = (Pos, TileKind)> + '_ {
        self.tiles
            .iter()
            .enumerate()
            .map(move |(i, t)| (Pos::new((i % self.width) as u8, (i / self.width) as u8), *t))
    }

    pub fn pots(&self) -> &[Pos] {
        &self.pots
    }

    pub fn pot_index(&self, p: Pos) -> Option<usize> {
        self.pots.iter().position(|q| *q == p)
    }

    /// Seat tile for seat number 1..=4.
    pub fn seat(&self, seat: u8) -> Pos {
        self.seats[seat as usize - 1]
    }

    pub fn center(&self) -> Pos {
        self.center
    }

    pub fn dispenser(&self, ing: Ingredient) -> Pos {
        self.tiles()
            .find(|(_, t)| *t == TileKind::Dispenser(ing))
            .map(|(p, _)| p)
            .expect("validated layout has every dispenser")
    }

    pub fn plate_stations(&self) -> Vec<Pos> {
        self.tiles().filter(|(_, t)| *t == TileKind::PlateStation).map(|(p, _)| p).collect()
    }

    /// Counter tiles that can be reached for staging.
    pub fn usable_counters(&self) -> Vec<Pos> {
        self.tiles()
            .filter(|(p, t)| *t == TileKind::Counter && self.nav.facing_poses.contains_key(p))
            .map(|(p, _)| p)
            .collect()
    }

    /// Reachable walkable tiles in row-major order.
    pub fn floor_tiles(&self) -> Vec<Pos> {
        let mut out: Vec<Pos> = self.nav.poses.iter().map(|p| p.pos).collect();
        out.dedup();
        out
    }

    /// All reachable poses in a fixed order.
    pub fn poses(&self) -> &[Pose] {
        &self.nav.poses
    }

    pub fn pose_id(&self, pose: Pose) -> Option<usize> {
        if pose.pos.x as usize >= self.width || pose.pos.y as usize >= self.height {
            return None;
        }
        let id = self.nav.pose_ids[self.tile_index(pose.pos) * 4 + pose.facing.index()];
        (id != NO_POSE).then_some(id as usize)
    }

    /// Minimum number of move actions between two poses.
    pub fn pose_distance(&self, from: Pose, to: Pose) -> Option<u32> {
        let (a, b) = (self.pose_id(from)?, self.pose_id(to)?);
        let d = self.nav.dist[a * self.nav.poses.len() + b];
        (d != UNREACHABLE).then_some(d as u32)
    }

    /// Move directions along a shortest route between two poses, preferring
    /// N, S, E, W at each step.
    pub fn path(&self, from: Pose, to: Pose) -> Option<Vec<Direction>> {
        let mut total = self.pose_distance(from, to)?;
        let mut cur = from;
        let mut out = Vec::with_capacity(total as usize);
        while total > 0 {
            let (dir, next) = Direction::ALL
                .into_iter()
                .filter_map(|d| self.move_pose(cur, d).map(|n| (d, n)))
                .find(|(_, n)| self.pose_distance(*n, to) == Some(total - 1))?;
            out.push(dir);
            cur = next;
            total -= 1;
        }
        Some(out)
    }

    /// Poses from which the chef faces `target`.
    pub fn poses_facing(&self, target: Pos) -> impl Iterator<Item = Pose> + '_ {
        self.nav
            .facing_poses
            .get(&target)
            .into_iter()
            .flatten()
            .map(move |id| self.nav.poses[*id])
    }

    /// Manhattan distance from `from` to the nearest tile adjacent to `target`
    /// on which the chef can stand.
    pub fn standing_distance(&self, from: Pos, target: Pos) -> Option<u32> {
        self.poses_facing(target).map(|p| from.manhattan(p.pos)).min()
    }

    /// Fewest moves from `from` to any pose facing `target`.
    pub fn moves_to(&self, from: Pose, target: Pos) -> Option<u32> {
        if target.x as usize >= self.width || target.y as usize >= self.height {
            return None;
        }
        let id = self.pose_id(from)?;
        let d = self.nav.to_tile[id * self.width * self.height + self.tile_index(target)];
        (d != UNREACHABLE).then_some(d as u32)
    }

    /// Fewest moves from some pose facing `a` to some pose facing `b`.
    pub fn moves_between(&self, a: Pos, b: Pos) -> Option<u32> {
        self.poses_facing(a).filter_map(|p| self.moves_to(p, b)).min()
    }

    /// Every non-walkable tile the chef can face, in position order.
    pub fn interaction_targets(&self) -> impl Iterator<Item = Pos> + '_ {
        self.nav.facing_poses.keys().copied()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(self.tiles[y * self.width + x].glyph());
            }
            s.push('\n');
        }
        s
    }
}
