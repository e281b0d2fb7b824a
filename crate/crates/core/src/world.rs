//! Grid world: tiles, stations, items, layout parsing and pathfinding.
//!
//! The grid is 4-connected. Stations occupy non-floor cells and are used from
//! an adjacent floor cell. Agents never block each other.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance value for cells that cannot reach a target.
pub const UNREACHABLE: u32 = u32::MAX;

/// A cell coordinate: `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: usize,
    pub y: usize,
}

impl Position {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Position) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// True when `other` is one of the four neighbours of `self`.
    pub fn is_adjacent(self, other: Position) -> bool {
        self.manhattan(other) == 1
    }

    /// Four-neighbours inside a `width` x `height` grid, always in N, E, S, W order.
    pub fn neighbors(self, width: usize, height: usize) -> impl Iterator<Item = Position> {
        let Position { x, y } = self;
        let cands = [
            (y > 0).then(|| Position::new(x, y - 1)),
            (x + 1 < width).then(|| Position::new(x + 1, y)),
            (y + 1 < height).then(|| Position::new(x, y + 1)),
            (x > 0).then(|| Position::new(x - 1, y)),
        ];
        cands.into_iter().flatten()
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StationKind {
    MeatBin,
    OnionBin,
    ChopBoard,
    Grill,
    Pot,
    PlateStack,
    ServeWindow,
    /// Plain work surface. Kept for completeness; no layout symbol maps to it.
    Counter,
}

impl StationKind {
    pub const RECIPE_STATIONS: [StationKind; 7] = [
        StationKind::MeatBin,
        StationKind::OnionBin,
        StationKind::ChopBoard,
        StationKind::Grill,
        StationKind::Pot,
        StationKind::PlateStack,
        StationKind::ServeWindow,
    ];

    pub fn from_symbol(c: char) -> Option<StationKind> {
        Some(match c {
            'G' => StationKind::Grill,
            'P' => StationKind::Pot,
            'C' => StationKind::ChopBoard,
            'M' => StationKind::MeatBin,
            'O' => StationKind::OnionBin,
            'D' => StationKind::PlateStack,
            'S' => StationKind::ServeWindow,
            _ => return None,
        })
    }

    pub fn symbol(self) -> char {
        match self {
            StationKind::Grill => 'G',
            StationKind::Pot => 'P',
            StationKind::ChopBoard => 'C',
            StationKind::MeatBin => 'M',
            StationKind::OnionBin => 'O',
            StationKind::PlateStack => 'D',
            StationKind::ServeWindow => 'S',
            StationKind::Counter => 'X',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StationKind::MeatBin => "MEAT_BIN",
            StationKind::OnionBin => "ONION_BIN",
            StationKind::ChopBoard => "CHOP_BOARD",
            StationKind::Grill => "GRILL",
            StationKind::Pot => "POT",
            StationKind::PlateStack => "PLATE_STACK",
            StationKind::ServeWindow => "SERVE_WINDOW",
            StationKind::Counter => "COUNTER",
        }
    }

    /// Dispensers hand out fresh items and never hold any.
    pub fn dispenses(self) -> Option<Item> {
        match self {
            StationKind::MeatBin => Some(Item::MeatRaw),
            StationKind::OnionBin => Some(Item::OnionWhole),
            StationKind::PlateStack => Some(Item::PlateEmpty),
            _ => None,
        }
    }

    pub fn capacity(self) -> usize {
        match self {
            StationKind::Pot => 3,
            StationKind::Grill | StationKind::ChopBoard | StationKind::Counter => 1,
            StationKind::ServeWindow => 8,
            StationKind::MeatBin | StationKind::OnionBin | StationKind::PlateStack => 0,
        }
    }
}

impl fmt::Display for StationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Item {
    MeatRaw,
    MeatCooked,
    OnionWhole,
    OnionChopped,
    PlateEmpty,
    PlatedSteak,
    PlatedSoup,
}

impl Item {
    pub fn is_plated(self) -> bool {
        matches!(self, Item::PlatedSteak | Item::PlatedSoup)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Station {
    pub kind: StationKind,
    pub pos: Position,
    /// Remaining processing ticks; only grills and pots ever run a timer.
    pub timer_remaining: u32,
    pub contents: Vec<Item>,
    pub capacity: usize,
    /// Set once a grill or pot finished processing its load.
    pub ready: bool,
    /// Meal that currently owns this grill or pot.
    pub reserved_for: Option<usize>,
}

impl Station {
    fn new(kind: StationKind, pos: Position) -> Self {
        Self {
            kind,
            pos,
            timer_remaining: 0,
            contents: Vec::new(),
            capacity: kind.capacity(),
            ready: false,
            reserved_for: None,
        }
    }

    pub fn is_full(&self) -> bool {
        self.contents.len() >= self.capacity
    }

    /// Resets a grill or pot after its load has been plated.
    pub fn clear(&mut self) {
        self.contents.clear();
        self.timer_remaining = 0;
        self.ready = false;
        self.reserved_for = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tile {
    Floor,
    Wall,
    Station(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("layout is empty")]
    Empty,
    #[error("ragged layout: row {row} has {found} cells, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown layout character {ch:?} at row {row}, column {col}")]
    UnknownChar { row: usize, col: usize, ch: char },
    #[error("layout has no {0} station")]
    MissingStation(StationKind),
    #[error("layout has no agent spawn cell ('A')")]
    NoSpawn,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("{0} is not a floor cell")]
    NotFloor(Position),
    #[error("{0} is outside the grid")]
    OutOfBounds(Position),
    #[error("no path from {from} to {to}")]
    NoPath { from: Position, to: Position },
}

/// The built-in 13x9 kitchen: bins on the west wall, plates on the east wall,
/// grills and pots on the north wall, chop boards on the south wall.
pub const DEFAULT_LAYOUT: &str = "\
##G#G###P#P##
#...........#
M...........#
#...........D
#....AAAA...#
O....AAAA...#
#...........S
#...........#
###C#C#######
";

/// Static kitchen plus mutable station state and the tick counter.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub width: usize,
    pub height: usize,
    pub tiles: Vec<Tile>,
    pub stations: Vec<Station>,
    pub spawns: Vec<Position>,
    pub tick: u64,
    /// Per-station distance fields: steps from each cell to a floor cell
    /// adjacent to the station.
    fields: Vec<Vec<u32>>,
    /// All-pairs floor distances, `cells x cells`, row-major by source cell.
    pair_dist: Vec<u32>,
}

/// Parses an ASCII layout, requiring every station kind used by the recipes.
pub fn parse_layout(text: &str) -> Result<World, LayoutError> {
    parse_layout_with(text, &StationKind::RECIPE_STATIONS)
}

pub fn parse_layout_with(text: &str, required: &[StationKind]) -> Result<World, LayoutError> {
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .collect();
    if rows.is_empty() {
        return Err(LayoutError::Empty);
    }
    let width = rows[0].chars().count();
    let height = rows.len();
    let mut tiles = Vec::with_capacity(width * height);
    let mut stations = Vec::new();
    let mut spawns = Vec::new();
    for (y, row) in rows.iter().enumerate() {
        let found = row.chars().count();
        if found != width {
            return Err(LayoutError::Ragged {
                row: y,
                expected: width,
                found,
            });
        }
        for (x, ch) in row.chars().enumerate() {
            let pos = Position::new(x, y);
            let tile = match ch {
                '#' => Tile::Wall,
                '.' => Tile::Floor,
                'A' => {
                    spawns.push(pos);
                    Tile::Floor
                }
                c => match StationKind::from_symbol(c) {
                    Some(kind) => {
                        stations.push(Station::new(kind, pos));
                        Tile::Station(stations.len() - 1)
                    }
                    None => return Err(LayoutError::UnknownChar { row: y, col: x, ch }),
                },
            };
            tiles.push(tile);
        }
    }
    for &kind in required {
        if !stations.iter().any(|s| s.kind == kind) {
            return Err(LayoutError::MissingStation(kind));
        }
    }
    if spawns.is_empty() {
        return Err(LayoutError::NoSpawn);
    }
    let mut world = World {
        width,
        height,
        tiles,
        stations,
        spawns,
        tick: 0,
        fields: Vec::new(),
        pair_dist: Vec::new(),
    };
    world.fields = (0..world.stations.len())
        .map(|i| world.distance_field(world.stations[i].pos))
        .collect();
    let cells = world.width * world.height;
    let mut pair = vec![UNREACHABLE; cells * cells];
    for y in 0..world.height {
        for x in 0..world.width {
            let p = Position::new(x, y);
            if world.is_floor(p) {
                let i = world.index(p);
                pair[i * cells..(i + 1) * cells].copy_from_slice(&world.distance_field(p));
            }
        }
    }
    world.pair_dist = pair;
    Ok(world)
}

impl World {
    pub fn in_bounds(&self, p: Position) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn tile(&self, p: Position) -> Tile {
        self.tiles[p.y * self.width + p.x]
    }

    pub fn is_floor(&self, p: Position) -> bool {
        self.in_bounds(p) && self.tile(p) == Tile::Floor
    }

    pub fn station_at(&self, p: Position) -> Option<usize> {
        match self.tile(p) {
            Tile::Station(i) => Some(i),
            _ => None,
        }
    }

    pub fn stations_of(&self, kind: StationKind) -> impl Iterator<Item = usize> + '_ {
        self.stations
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.kind == kind)
            .map(|(i, _)| i)
    }

    pub fn count(&self, kind: StationKind) -> usize {
        self.stations_of(kind).count()
    }

    fn index(&self, p: Position) -> usize {
        p.y * self.width + p.x
    }

    /// Multi-source BFS distances from every floor cell to the goal set of
    /// `target` (adjacent floor cells for non-floor targets, the cell itself
    /// for floor targets).
    fn distance_field(&self, target: Position) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.width * self.height];
        let mut queue = VecDeque::new();
        if self.is_floor(target) {
            dist[self.index(target)] = 0;
            queue.push_back(target);
        } else {
            for n in target.neighbors(self.width, self.height) {
                if self.is_floor(n) {
                    dist[self.index(n)] = 0;
                    queue.push_back(n);
                }
            }
        }
        while let Some(p) = queue.pop_front() {
            let d = dist[self.index(p)];
            for n in p.neighbors(self.width, self.height) {
                if self.is_floor(n) && dist[self.index(n)] == UNREACHABLE {
                    dist[self.index(n)] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Steps from `from` to a floor cell adjacent to station `station`.
    pub fn station_distance(&self, station: usize, from: Position) -> u32 {
        self.fields[station][self.index(from)]
    }

    /// The next cell on a shortest route to station `station`, or `None` when
    /// already adjacent or unreachable.
    pub fn step_toward_station(&self, station: usize, from: Position) -> Option<Position> {
        let field = &self.fields[station];
        let d = field[self.index(from)];
        if d == 0 || d == UNREACHABLE {
            return None;
        }
        from.neighbors(self.width, self.height)
            .find(|&n| self.is_floor(n) && field[self.index(n)] == d - 1)
    }

    /// Floor-cell distance between two floor cells, `UNREACHABLE` if none.
    pub fn floor_distance(&self, from: Position, to: Position) -> u32 {
        if !self.is_floor(from) || !self.is_floor(to) {
            return UNREACHABLE;
        }
        let cells = self.width * self.height;
        self.pair_dist[self.index(to) * cells + self.index(from)]
    }

    /// The next cell on a shortest floor route from `from` to the floor cell
    /// `to`, or `None` when already there or unreachable.
    pub fn step_toward_cell(&self, from: Position, to: Position) -> Option<Position> {
        let d = self.floor_distance(from, to);
        if d == 0 || d == UNREACHABLE {
            return None;
        }
        from.neighbors(self.width, self.height)
            .find(|&n| self.is_floor(n) && self.floor_distance(n, to) == d - 1)
    }

    /// Shortest 4-connected floor path from `from` to `target`.
    ///
    /// For a floor target the path ends on it; for any other cell it ends on an
    /// adjacent floor cell. The returned path excludes `from` and is empty when
    /// no movement is needed. Neighbours are expanded in N, E, S, W order, so
    /// the result is unique for a given world.
    pub fn shortest_path(&self, from: Position, target: Position) -> Result<Vec<Position>, PathError> {
        if !self.in_bounds(from) {
            return Err(PathError::OutOfBounds(from));
        }
        if !self.in_bounds(target) {
            return Err(PathError::OutOfBounds(target));
        }
        if !self.is_floor(from) {
            return Err(PathError::NotFloor(from));
        }
        let target_floor = self.is_floor(target);
        let is_goal = |p: Position| {
            if target_floor {
                p == target
            } else {
                p.is_adjacent(target)
            }
        };
        if is_goal(from) {
            return Ok(Vec::new());
        }
        let mut prev: Vec<Option<Position>> = vec![None; self.width * self.height];
        let mut seen = vec![false; self.width * self.height];
        seen[self.index(from)] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            for n in p.neighbors(self.width, self.height) {
                if !self.is_floor(n) || seen[self.index(n)] {
                    continue;
                }
                seen[self.index(n)] = true;
                prev[self.index(n)] = Some(p);
                if is_goal(n) {
                    let mut path = vec![n];
                    let mut cur = p;
                    while cur != from {
                        path.push(cur);
                        cur = prev[self.index(cur)].expect("bfs predecessor chain");
                    }
                    path.reverse();
                    return Ok(path);
                }
                queue.push_back(n);
            }
        }
        Err(PathError::NoPath { from, to: target })
    }

    /// Renders the static layout back to ASCII (spawns included).
    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let p = Position::new(x, y);
                let c = match self.tile(p) {
                    Tile::Wall => '#',
                    Tile::Floor if self.spawns.contains(&p) => 'A',
                    Tile::Floor => '.',
                    Tile::Station(i) => self.stations[i].kind.symbol(),
                };
                out.push(c);
            }
            out.push('\n');
        }
        out
    }
}
