//! Grid regions: walls, empty cells, a single entry cell, and the two
//! occupancy layers (settled agents on the ground, mobile agents in the air).
//!
//! Region files are line oriented. `W` is a wall, `.` an empty cell and `E`
//! the entry cell. Lines starting with `#` are comments, trailing whitespace
//! is ignored and every remaining line must have the same length.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::agent::AgentId;

/// Row/column position of a cell. Row 0 is the top line of a region file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Wall,
    Empty,
}

/// Neighbor positions 1..4 of the sensing enumeration.
///
/// Opposite directions differ by exactly 2 in their code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    North = 1,
    East = 2,
    South = 3,
    West = 4,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(Direction::North),
            2 => Some(Direction::East),
            3 => Some(Direction::South),
            4 => Some(Direction::West),
            _ => None,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::North => Direction::South,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
        }
    }

    /// Zero-based slot used for per-cell neighbor tables.
    pub(crate) fn slot(self) -> usize {
        self as usize - 1
    }

    fn step(self, c: Coord, width: usize, height: usize) -> Option<Coord> {
        match self {
            Direction::North => c.row.checked_sub(1).map(|r| Coord::new(r, c.col)),
            Direction::South => (c.row + 1 < height).then(|| Coord::new(c.row + 1, c.col)),
            Direction::West => c.col.checked_sub(1).map(|col| Coord::new(c.row, col)),
            Direction::East => (c.col + 1 < width).then(|| Coord::new(c.row, c.col + 1)),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::North => "N",
            Direction::East => "E",
            Direction::South => "S",
            Direction::West => "W",
        };
        f.write_str(s)
    }
}

/// What lies at one of the four neighbor positions of a cell.
/// Out-of-grid positions are reported as walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Wall,
    Cell(Coord),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegionError {
    #[error("region has no cells")]
    Empty,
    #[error("region has no entry cell ('E')")]
    NoEntry,
    #[error("region has {count} entry cells; exactly one is supported")]
    MultipleEntries { count: usize },
    #[error("line {line} has length {found}, expected {expected}")]
    RaggedLine {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown character {ch:?} at line {line}, column {col}")]
    UnknownChar { line: usize, col: usize, ch: char },
    #[error("{unreachable} empty cell(s) are not connected to the entry")]
    Disconnected { unreachable: usize },
    #[error("cell {0} is outside the region")]
    OutOfBounds(Coord),
    #[error("cell {0} is a wall")]
    WallCell(Coord),
}

const UNREACHABLE: u32 = u32::MAX;

/// A rectangular grid region with exactly one entry cell whose empty cells
/// form a single 4-connected component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
    entry: usize,
    n: usize,
    m: usize,
    neighbors: Vec<[Option<u32>; 4]>,
    dist: Vec<u32>,
}

impl Region {
    /// Parses a region file.
    pub fn parse(text: &str) -> Result<Self, RegionError> {
        let mut rows: Vec<(usize, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            rows.push((i + 1, line));
        }
        let Some(&(_, first)) = rows.first() else {
            return Err(RegionError::Empty);
        };
        let width = first.chars().count();
        let height = rows.len();
        let mut cells = Vec::with_capacity(width * height);
        let mut entries = Vec::new();
        for &(line_no, line) in &rows {
            let found = line.chars().count();
            if found != width {
                return Err(RegionError::RaggedLine {
                    line: line_no,
                    expected: width,
                    found,
                });
            }
            for (col, ch) in line.chars().enumerate() {
                let kind = match ch {
                    'W' => CellKind::Wall,
                    '.' => CellKind::Empty,
                    'E' => {
                        entries.push(cells.len());
                        CellKind::Empty
                    }
                    other => {
                        return Err(RegionError::UnknownChar {
                            line: line_no,
                            col: col + 1,
                            ch: other,
                        })
                    }
                };
                cells.push(kind);
            }
        }
        match entries.len() {
            0 => Err(RegionError::NoEntry),
            1 => Self::from_cells(width, height, cells, entries[0]),
            count => Err(RegionError::MultipleEntries { count }),
        }
    }

    /// Builds a region from a row-major cell vector.
    pub fn from_cells(
        width: usize,
        height: usize,
        cells: Vec<CellKind>,
        entry: usize,
    ) -> Result<Self, RegionError> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(RegionError::Empty);
        }
        let entry_coord = Coord::new(entry / width, entry % width);
        if entry >= cells.len() {
            return Err(RegionError::OutOfBounds(entry_coord));
        }
        if cells[entry] == CellKind::Wall {
            return Err(RegionError::WallCell(entry_coord));
        }

        let mut neighbors = vec![[None; 4]; cells.len()];
        let mut m = 0;
        for idx in 0..cells.len() {
            if cells[idx] == CellKind::Wall {
                continue;
            }
            let c = Coord::new(idx / width, idx % width);
            for dir in Direction::ALL {
                if let Some(nc) = dir.step(c, width, height) {
                    let nidx = nc.row * width + nc.col;
                    if cells[nidx] == CellKind::Empty {
                        neighbors[idx][dir.slot()] = Some(nidx as u32);
                        if nidx > idx {
                            m += 1;
                        }
                    }
                }
            }
        }
        let n = cells.iter().filter(|&&k| k == CellKind::Empty).count();

        let mut dist = vec![UNREACHABLE; cells.len()];
        dist[entry] = 0;
        let mut queue = VecDeque::from([entry]);
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for v in neighbors[u].iter().flatten() {
                let v = *v as usize;
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        if reached != n {
            return Err(RegionError::Disconnected {
                unreachable: n - reached,
            });
        }

        Ok(Self {
            width,
            height,
            cells,
            entry,
            n,
            m,
            neighbors,
            dist,
        })
    }

    /// A 1×n corridor with the entry at zero-based column `entry_col`.
    pub fn linear(n: usize, entry_col: usize) -> Result<Self, RegionError> {
        Self::from_cells(n, 1, vec![CellKind::Empty; n], entry_col)
    }

    /// A wall-free `width`×`height` rectangle.
    pub fn open(width: usize, height: usize, entry: Coord) -> Result<Self, RegionError> {
        if entry.row >= height || entry.col >= width {
            return Err(RegionError::OutOfBounds(entry));
        }
        Self::from_cells(
            width,
            height,
            vec![CellKind::Empty; width * height],
            entry.row * width + entry.col,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of empty cells, entry included.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges between adjacent empty cells.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self) -> Coord {
        self.coord(self.entry)
    }

    pub fn entry_index(&self) -> usize {
        self.entry
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn kind(&self, c: Coord) -> Option<CellKind> {
        self.index(c).ok().map(|i| self.cells[i])
    }

    pub fn is_empty_cell(&self, idx: usize) -> bool {
        self.cells[idx] == CellKind::Empty
    }

    pub fn coord(&self, idx: usize) -> Coord {
        Coord::new(idx / self.width, idx % self.width)
    }

    pub fn index(&self, c: Coord) -> Result<usize, RegionError> {
        if c.row >= self.height || c.col >= self.width {
            return Err(RegionError::OutOfBounds(c));
        }
        Ok(c.row * self.width + c.col)
    }

    fn empty_index(&self, c: Coord) -> Result<usize, RegionError> {
        let idx = self.index(c)?;
        if self.cells[idx] == CellKind::Wall {
            return Err(RegionError::WallCell(c));
        }
        Ok(idx)
    }

    /// Neighbor positions 1..4 (N, E, S, W) of an empty cell.
    pub fn neighborhood_positions(&self, u: Coord) -> Result<[Neighbor; 4], RegionError> {
        let idx = self.empty_index(u)?;
        Ok(self.neighbors[idx].map(|n| match n {
            Some(v) => Neighbor::Cell(self.coord(v as usize)),
            None => Neighbor::Wall,
        }))
    }

    /// Breadth-first hop count from the entry over empty cells.
    pub fn distance_from_entry(&self, u: Coord) -> Result<u32, RegionError> {
        let idx = self.empty_index(u)?;
        Ok(self.dist[idx])
    }

    #[inline]
    pub(crate) fn neighbor_idx(&self, idx: usize, dir: Direction) -> Option<usize> {
        self.neighbors[idx][dir.slot()].map(|v| v as usize)
    }

    #[inline]
    pub(crate) fn neighbor_table(&self, idx: usize) -> &[Option<u32>; 4] {
        &self.neighbors[idx]
    }

    #[inline]
    pub(crate) fn dist_idx(&self, idx: usize) -> u32 {
        self.dist[idx]
    }

    /// Renders the region back into the file format.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for idx in 0..self.cells.len() {
            out.push(match self.cells[idx] {
                CellKind::Wall => 'W',
                CellKind::Empty if idx == self.entry => 'E',
                CellKind::Empty => '.',
            });
            if idx % self.width == self.width - 1 {
                out.push('\n');
            }
        }
        out
    }
}

impl FromStr for Region {
    type Err = RegionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Region::parse(s)
    }
}

/// Ground (settled) and air (mobile) occupancy of every cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    ground: Vec<Option<AgentId>>,
    air: Vec<Option<AgentId>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OccupancyError {
    #[error("cell {0} is a wall")]
    Wall(usize),
    #[error("{layer} layer of cell {cell} already holds agent {holder}")]
    Occupied {
        layer: Layer,
        cell: usize,
        holder: AgentId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Ground,
    Air,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Ground => "ground",
            Layer::Air => "air",
        })
    }
}

impl Occupancy {
    pub fn new(region: &Region) -> Self {
        let cells = region.cell_count();
        Self {
            ground: vec![None; cells],
            air: vec![None; cells],
        }
    }

    #[inline]
    pub fn ground(&self, idx: usize) -> Option<AgentId> {
        self.ground[idx]
    }

    #[inline]
    pub fn air(&self, idx: usize) -> Option<AgentId> {
        self.air[idx]
    }

    pub fn get(&self, layer: Layer, idx: usize) -> Option<AgentId> {
        match layer {
            Layer::Ground => self.ground[idx],
            Layer::Air => self.air[idx],
        }
    }

    /// Places `id` on a free, non-wall cell of the given layer.
    pub fn place(
        &mut self,
        region: &Region,
        layer: Layer,
        idx: usize,
        id: AgentId,
    ) -> Result<(), OccupancyError> {
        if !region.is_empty_cell(idx) {
            return Err(OccupancyError::Wall(idx));
        }
        let slot = match layer {
            Layer::Ground => &mut self.ground[idx],
            Layer::Air => &mut self.air[idx],
        };
        if let Some(holder) = *slot {
            return Err(OccupancyError::Occupied {
                layer,
                cell: idx,
                holder,
            });
        }
        *slot = Some(id);
        Ok(())
    }

    /// Clears a layer of a cell and returns its previous occupant.
    pub fn clear(&mut self, layer: Layer, idx: usize) -> Option<AgentId> {
        match layer {
            Layer::Ground => self.ground[idx].take(),
            Layer::Air => self.air[idx].take(),
        }
    }

    pub fn settled_count(&self) -> usize {
        self.ground.iter().filter(|g| g.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_edges(region: &Region) -> usize {
        let mut count = 0;
        for a in 0..region.cell_count() {
            for b in (a + 1)..region.cell_count() {
                if !region.is_empty_cell(a) || !region.is_empty_cell(b) {
                    continue;
                }
                let (ca, cb) = (region.coord(a), region.coord(b));
                if ca.row.abs_diff(cb.row) + ca.col.abs_diff(cb.col) == 1 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn minimal_region() {
        let r = Region::parse("E").unwrap();
        assert_eq!((r.n(), r.m()), (1, 0));
        assert_eq!(r.entry(), Coord::new(0, 0));
    }

    #[test]
    fn linear_region_entry_at_edge() {
        let r = Region::parse("E..\n").unwrap();
        assert_eq!((r.n(), r.m()), (3, 2));
        assert_eq!(r.distance_from_entry(Coord::new(0, 2)).unwrap(), 2);
        assert_eq!(r.distance_from_entry(r.entry()).unwrap(), 0);
    }

    #[test]
    fn center_entry_square_counts() {
        let mut text = String::new();
        for row in 0..41 {
            for col in 0..41 {
                text.push(if row == 20 && col == 20 { 'E' } else { '.' });
            }
            text.push('\n');
        }
        let r = Region::parse(&text).unwrap();
        assert_eq!(r.n(), 1681);
        assert_eq!(brute_force_edges(&r), 3280);
        assert_eq!(r.m(), 3280);
    }

    #[test]
    fn comments_and_trailing_whitespace() {
        let r = Region::parse("# a corridor\nE.W.  \n....\t\n").unwrap();
        assert_eq!(r.width(), 4);
        assert_eq!(r.n(), 7);
    }

    #[test]
    fn parse_errors_are_distinct() {
        assert_eq!(Region::parse("...").unwrap_err(), RegionError::NoEntry);
        assert_eq!(
            Region::parse("E.E").unwrap_err(),
            RegionError::MultipleEntries { count: 2 }
        );
        assert!(matches!(
            Region::parse("E..\n..").unwrap_err(),
            RegionError::RaggedLine { line: 2, expected: 3, found: 2 }
        ));
        assert_eq!(
            Region::parse("E.W.").unwrap_err(),
            RegionError::Disconnected { unreachable: 1 }
        );
        assert!(matches!(
            Region::parse("E.x").unwrap_err(),
            RegionError::UnknownChar { ch: 'x', .. }
        ));
        assert_eq!(Region::parse("# only\n").unwrap_err(), RegionError::Empty);
    }

    #[test]
    fn neighborhood_positions_interior_corner_and_wall() {
        let r = Region::parse("E..\n...\n.W.").unwrap();
        let interior = r.neighborhood_positions(Coord::new(1, 1)).unwrap();
        assert_eq!(
            interior,
            [
                Neighbor::Cell(Coord::new(0, 1)),
                Neighbor::Cell(Coord::new(1, 2)),
                Neighbor::Wall,
                Neighbor::Cell(Coord::new(1, 0)),
            ]
        );
        let corner = r.neighborhood_positions(Coord::new(0, 0)).unwrap();
        assert_eq!(corner.iter().filter(|n| **n == Neighbor::Wall).count(), 2);
        let left_of_wall = r.neighborhood_positions(Coord::new(2, 0)).unwrap();
        assert_eq!(left_of_wall[Direction::East.slot()], Neighbor::Wall);
        assert_eq!(
            r.neighborhood_positions(Coord::new(2, 1)).unwrap_err(),
            RegionError::WallCell(Coord::new(2, 1))
        );
    }

    #[test]
    fn detour_distance_matches_exhaustive_search() {
        let text = "\
E.W...
..W.W.
..W.W.
....W.
WWWW..";
        let r = Region::parse(text).unwrap();
        // exhaustive: iterative relaxation until fixpoint (Bellman-Ford style)
        let cells = r.cell_count();
        let mut best = vec![u32::MAX; cells];
        best[r.entry_index()] = 0;
        loop {
            let mut changed = false;
            for u in 0..cells {
                if best[u] == u32::MAX {
                    continue;
                }
                for dir in Direction::ALL {
                    if let Some(v) = r.neighbor_idx(u, dir) {
                        if best[u] + 1 < best[v] {
                            best[v] = best[u] + 1;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for idx in 0..cells {
            if r.is_empty_cell(idx) {
                assert_eq!(r.distance_from_entry(r.coord(idx)).unwrap(), best[idx]);
            }
        }
        // blocked straight line: (0,3) is 3 columns away but needs a long detour
        assert_eq!(r.distance_from_entry(Coord::new(0, 3)).unwrap(), 9);
    }

    #[test]
    fn text_round_trip() {
        let text = "E.W\n...\n";
        assert_eq!(Region::parse(text).unwrap().to_text(), text);
    }

    #[test]
    fn occupancy_layers_are_independent() {
        let r = Region::parse("E.W").unwrap();
        let mut occ = Occupancy::new(&r);
        occ.place(&r, Layer::Ground, 0, AgentId(1)).unwrap();
        occ.place(&r, Layer::Air, 0, AgentId(2)).unwrap();
        assert!(matches!(
            occ.place(&r, Layer::Air, 0, AgentId(3)),
            Err(OccupancyError::Occupied { holder: AgentId(2), .. })
        ));
        assert_eq!(occ.place(&r, Layer::Ground, 2, AgentId(4)), Err(OccupancyError::Wall(2)));
        assert_eq!(occ.clear(Layer::Ground, 0), Some(AgentId(1)));
        assert_eq!(occ.air(0), Some(AgentId(2)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_region() -> impl Strategy<Value = Region> {
            (1usize..8, 1usize..8, any::<u64>()).prop_filter_map("connected", |(w, h, bits)| {
                let cells: Vec<CellKind> = (0..w * h)
                    .map(|i| {
                        if i == 0 || (bits >> (i % 64)) & 1 == 0 {
                            CellKind::Empty
                        } else {
                            CellKind::Wall
                        }
                    })
                    .collect();
                Region::from_cells(w, h, cells, 0).ok()
            })
        }

        proptest! {
            #[test]
            fn opposite_direction_returns(region in arb_region()) {
                for idx in 0..region.cell_count() {
                    if !region.is_empty_cell(idx) { continue; }
                    for dir in Direction::ALL {
                        prop_assert_eq!(dir.opposite().code().abs_diff(dir.code()), 2);
                        if let Some(v) = region.neighbor_idx(idx, dir) {
                            prop_assert_eq!(region.neighbor_idx(v, dir.opposite()), Some(idx));
                        }
                    }
                }
            }

            #[test]
            fn every_empty_cell_has_a_distance(region in arb_region()) {
                for idx in 0..region.cell_count() {
                    if region.is_empty_cell(idx) {
                        let d = region.distance_from_entry(region.coord(idx)).unwrap();
                        prop_assert!(d < u32::MAX);
                        if idx != region.entry_index() {
                            // some neighbor is one hop closer
                            let closer = Direction::ALL.iter().filter_map(|&dir| region.neighbor_idx(idx, dir))
                                .any(|v| region.dist_idx(v) + 1 == d);
                            prop_assert!(closer);
                        }
                    }
                }
                prop_assert_eq!(region.m(), super::brute_force_edges(&region));
            }
        }
    }
}
