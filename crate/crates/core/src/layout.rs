//! Directed grid model of the storage floor.
//!
//! The generator lays out `blocks_x × blocks_y` storage blocks. Every grid row
//! is a one-way lane; shelf aisles are the rows inside a block, and the
//! columns between blocks are one-way cross aisles. The outer ring always
//! circulates counter-clockwise and interior lanes alternate direction, so
//! every lane starts and ends on the ring and the graph is strongly connected
//! for any block count. Stations hang off the ring on a two-way spur, or sit
//! directly on a named lane cell.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type CellId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("{field} must be at least 1")]
    ZeroCount { field: &'static str },
    #[error("cell pitch must be positive and finite, got {0}")]
    BadPitch(f64),
    #[error("at least one workstation is required")]
    NoWorkstation,
    #[error("{what} needs at least one server")]
    NoServers { what: String },
    #[error("{what} at ({x}, {y}) lies outside the grid")]
    OffGrid { what: String, x: i64, y: i64 },
    #[error("{what} at ({x}, {y}) overlaps a shelf cell")]
    OnShelf { what: String, x: i64, y: i64 },
    #[error("{what} at ({x}, {y}) overlaps another station")]
    Overlap { what: String, x: i64, y: i64 },
    #[error("layout graph is not strongly connected")]
    Disconnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    West,
    South,
    East,
    North,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    /// Spur cell just outside the ring on the given side.
    Side(Side),
    /// An existing non-shelf lane cell, in grid coordinates.
    Cell { x: i64, y: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationPlan {
    pub workstations: Vec<(Placement, u32)>,
    pub charger: (Placement, u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutParams {
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub shelf_rows: usize,
    pub block_width: usize,
    pub cell_pitch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub grid: (i64, i64),
    /// Planar position in meters.
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: CellId,
    pub to: CellId,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub cell: CellId,
    pub servers: u32,
}

#[derive(Debug, Clone)]
pub struct GridLayout {
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    pub shelves: Vec<CellId>,
    pub workstations: Vec<Station>,
    pub charger: Station,
    pub cell_pitch: f64,
    adjacency: Vec<Vec<(CellId, f64)>>,
}

impl GridLayout {
    /// Builds a layout from raw parts, checking every type invariant.
    pub fn from_parts(
        cells: Vec<Cell>,
        edges: Vec<Edge>,
        shelves: Vec<CellId>,
        workstations: Vec<Station>,
        charger: Station,
        cell_pitch: f64,
    ) -> Result<Self, LayoutError> {
        if shelves.is_empty() {
            return Err(LayoutError::ZeroCount { field: "shelves" });
        }
        if workstations.is_empty() {
            return Err(LayoutError::NoWorkstation);
        }
        for (i, ws) in workstations.iter().enumerate() {
            if ws.servers == 0 {
                return Err(LayoutError::NoServers {
                    what: format!("workstation {i}"),
                });
            }
        }
        if charger.servers == 0 {
            return Err(LayoutError::NoServers {
                what: "charging station".into(),
            });
        }
        let mut seen = HashMap::new();
        let named = shelves
            .iter()
            .map(|&c| (c, "shelf".to_string()))
            .chain(
                workstations
                    .iter()
                    .enumerate()
                    .map(|(i, w)| (w.cell, format!("workstation {i}"))),
            )
            .chain(std::iter::once((
                charger.cell,
                "charging station".to_string(),
            )));
        for (cell, what) in named {
            if cell >= cells.len() {
                return Err(LayoutError::OffGrid { what, x: -1, y: -1 });
            }
            if let Some(prev) = seen.insert(cell, what.clone()) {
                let (x, y) = cells[cell].grid;
                return Err(if prev == "shelf" {
                    LayoutError::OnShelf { what, x, y }
                } else {
                    LayoutError::Overlap { what, x, y }
                });
            }
        }
        let mut adjacency = vec![Vec::new(); cells.len()];
        for e in &edges {
            adjacency[e.from].push((e.to, e.length));
        }
        let layout = GridLayout {
            cells,
            edges,
            shelves,
            workstations,
            charger,
            cell_pitch,
            adjacency,
        };
        if !layout.is_strongly_connected() {
            return Err(LayoutError::Disconnected);
        }
        Ok(layout)
    }

    pub fn num_shelves(&self) -> usize {
        self.shelves.len()
    }

    pub fn num_workstations(&self) -> usize {
        self.workstations.len()
    }

    pub fn successors(&self, cell: CellId) -> &[(CellId, f64)] {
        &self.adjacency[cell]
    }

    pub fn cell_at(&self, x: i64, y: i64) -> Option<CellId> {
        self.cells.iter().position(|c| c.grid == (x, y))
    }

    /// Forward and backward reachability from cell 0 both cover every cell.
    pub fn is_strongly_connected(&self) -> bool {
        if self.cells.is_empty() {
            return false;
        }
        let mut reverse = vec![Vec::new(); self.cells.len()];
        for e in &self.edges {
            reverse[e.to].push(e.from);
        }
        let forward: Vec<Vec<CellId>> = self
            .adjacency
            .iter()
            .map(|a| a.iter().map(|&(c, _)| c).collect())
            .collect();
        bfs_covers_all(&forward, 0) && bfs_covers_all(&reverse, 0)
    }

    /// Single-source shortest directed distances to every cell (Dijkstra).
    pub fn distances_from(&self, source: CellId) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.cells.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Reverse((OrdF64(0.0), source)));
        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
        dist
    }

    /// Same cells and stations with every edge reversed.
    pub fn reversed(&self) -> GridLayout {
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| Edge {
                from: e.to,
                to: e.from,
                length: e.length,
            })
            .collect();
        let mut adjacency = vec![Vec::new(); self.cells.len()];
        for e in &edges {
            adjacency[e.from].push((e.to, e.length));
        }
        GridLayout {
            edges,
            adjacency,
            ..self.clone()
        }
    }

    /// Replaces worker and charger counts while keeping the geometry.
    pub fn with_servers(&self, workers: &[u32], chargers: u32) -> Result<GridLayout, LayoutError> {
        if workers.len() != self.workstations.len() {
            return Err(LayoutError::NoWorkstation);
        }
        let workstations = self
            .workstations
            .iter()
            .zip(workers)
            .map(|(w, &servers)| Station {
                cell: w.cell,
                servers,
            })
            .collect();
        GridLayout::from_parts(
            self.cells.clone(),
            self.edges.clone(),
            self.shelves.clone(),
            workstations,
            Station {
                cell: self.charger.cell,
                servers: chargers,
            },
            self.cell_pitch,
        )
    }
}

fn bfs_covers_all(adj: &[Vec<CellId>], start: CellId) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == adj.len()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Generates the parameterized block layout described in the module docs.
pub fn generate_layout(
    params: &LayoutParams,
    stations: &StationPlan,
) -> Result<GridLayout, LayoutError> {
    for (field, v) in [
        ("blocks_x", params.blocks_x),
        ("blocks_y", params.blocks_y),
        ("shelf_rows", params.shelf_rows),
        ("block_width", params.block_width),
    ] {
        if v == 0 {
            return Err(LayoutError::ZeroCount { field });
        }
    }
    if !(params.cell_pitch > 0.0 && params.cell_pitch.is_finite()) {
        return Err(LayoutError::BadPitch(params.cell_pitch));
    }
    if stations.workstations.is_empty() {
        return Err(LayoutError::NoWorkstation);
    }

    let col_period = (params.block_width + 1) as i64;
    let row_period = (params.shelf_rows + 1) as i64;
    let width = params.blocks_x as i64 * col_period + 1;
    let height = params.blocks_y as i64 * row_period + 1;
    let pitch = params.cell_pitch;

    let mut cells = Vec::new();
    let mut index = HashMap::new();
    let mut add_cell = |cells: &mut Vec<Cell>, gx: i64, gy: i64| -> CellId {
        *index.entry((gx, gy)).or_insert_with(|| {
            cells.push(Cell {
                grid: (gx, gy),
                x: gx as f64 * pitch,
                y: gy as f64 * pitch,
            });
            cells.len() - 1
        })
    };
    for gy in 0..height {
        for gx in 0..width {
            add_cell(&mut cells, gx, gy);
        }
    }
    let id = |gx: i64, gy: i64| (gy * width + gx) as usize;

    let mut edges = Vec::new();
    for gy in 0..height {
        let eastbound = if gy == 0 {
            true
        } else if gy == height - 1 {
            false
        } else {
            gy % 2 == 0
        };
        for gx in 0..width - 1 {
            let (a, b) = (id(gx, gy), id(gx + 1, gy));
            let (from, to) = if eastbound { (a, b) } else { (b, a) };
            edges.push(Edge {
                from,
                to,
                length: pitch,
            });
        }
    }
    let cross_columns: Vec<i64> = (0..=params.blocks_x as i64)
        .map(|k| k * col_period)
        .collect();
    for (k, &gx) in cross_columns.iter().enumerate() {
        let northbound = if gx == 0 {
            false
        } else if gx == width - 1 {
            true
        } else {
            k % 2 == 1
        };
        for gy in 0..height - 1 {
            let (a, b) = (id(gx, gy), id(gx, gy + 1));
            let (from, to) = if northbound { (a, b) } else { (b, a) };
            edges.push(Edge {
                from,
                to,
                length: pitch,
            });
        }
    }

    let is_shelf = |gx: i64, gy: i64| {
        (0..width).contains(&gx)
            && (0..height).contains(&gy)
            && gx % col_period != 0
            && gy % row_period != 0
    };
    let shelves: Vec<CellId> = (0..height)
        .flat_map(|gy| (0..width).map(move |gx| (gx, gy)))
        .filter(|&(gx, gy)| is_shelf(gx, gy))
        .map(|(gx, gy)| id(gx, gy))
        .collect();

    let mut per_side: HashMap<Side, (usize, usize)> = HashMap::new();
    let all: Vec<(Placement, String)> = stations
        .workstations
        .iter()
        .enumerate()
        .map(|(i, (p, _))| (*p, format!("workstation {i}")))
        .chain(std::iter::once((
            stations.charger.0,
            "charging station".to_string(),
        )))
        .collect();
    for (p, _) in &all {
        if let Placement::Side(s) = p {
            per_side.entry(*s).or_insert((0, 0)).1 += 1;
        }
    }

    let mut station_cells = Vec::with_capacity(all.len());
    let mut taken: HashMap<(i64, i64), ()> = HashMap::new();
    for (placement, what) in &all {
        let (gx, gy, spur) = match *placement {
            Placement::Cell { x, y } => {
                if !(0..width).contains(&x) || !(0..height).contains(&y) {
                    return Err(LayoutError::OffGrid {
                        what: what.clone(),
                        x,
                        y,
                    });
                }
                if is_shelf(x, y) {
                    return Err(LayoutError::OnShelf {
                        what: what.clone(),
                        x,
                        y,
                    });
                }
                (x, y, None)
            }
            Placement::Side(side) => {
                let slot = per_side.get_mut(&side).expect("side counted above");
                let (j, k) = (slot.0 as i64, slot.1 as i64);
                slot.0 += 1;
                let along = |len: i64| ((j + 1) * len / (k + 1)).clamp(0, len - 1);
                match side {
                    Side::West => {
                        let y = along(height);
                        (-1, y, Some((0, y)))
                    }
                    Side::East => {
                        let y = along(height);
                        (width, y, Some((width - 1, y)))
                    }
                    Side::South => {
                        let x = along(width);
                        (x, -1, Some((x, 0)))
                    }
                    Side::North => {
                        let x = along(width);
                        (x, height, Some((x, height - 1)))
                    }
                }
            }
        };
        if taken.insert((gx, gy), ()).is_some() {
            return Err(LayoutError::Overlap {
                what: what.clone(),
                x: gx,
                y: gy,
            });
        }
        let cell = add_cell(&mut cells, gx, gy);
        if let Some((rx, ry)) = spur {
            let ring = id(rx, ry);
            edges.push(Edge {
                from: ring,
                to: cell,
                length: pitch,
            });
            edges.push(Edge {
                from: cell,
                to: ring,
                length: pitch,
            });
        }
        station_cells.push(cell);
    }

    let workstations = stations
        .workstations
        .iter()
        .zip(&station_cells)
        .map(|(&(_, servers), &cell)| Station { cell, servers })
        .collect();
    let charger = Station {
        cell: *station_cells.last().expect("charger pushed last"),
        servers: stations.charger.1,
    };
    GridLayout::from_parts(cells, edges, shelves, workstations, charger, pitch)
}

/// A point of interest in the distance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Poi {
    Shelf(usize),
    Workstation(usize),
    Charger,
}

/// Shortest directed distances (meters) between all shelves, workstations and
/// the charging station.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    num_shelves: usize,
    num_workstations: usize,
    size: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    fn index(&self, p: Poi) -> usize {
        match p {
            Poi::Shelf(m) => {
                assert!(m < self.num_shelves, "shelf {m} out of range");
                m
            }
            Poi::Workstation(i) => {
                assert!(i < self.num_workstations, "workstation {i} out of range");
                self.num_shelves + i
            }
            Poi::Charger => self.num_shelves + self.num_workstations,
        }
    }

    pub fn get(&self, from: Poi, to: Poi) -> f64 {
        self.d[self.index(from) * self.size + self.index(to)]
    }

    pub fn num_shelves(&self) -> usize {
        self.num_shelves
    }

    pub fn num_workstations(&self) -> usize {
        self.num_workstations
    }

    pub fn pois(&self) -> Vec<Poi> {
        (0..self.num_shelves)
            .map(Poi::Shelf)
            .chain((0..self.num_workstations).map(Poi::Workstation))
            .chain(std::iter::once(Poi::Charger))
            .collect()
    }

    pub fn shelf_to_shelf(&self, m: usize, n: usize) -> f64 {
        self.d[m * self.size + n]
    }

    pub fn shelf_to_workstation(&self, m: usize, i: usize) -> f64 {
        self.get(Poi::Shelf(m), Poi::Workstation(i))
    }

    pub fn workstation_to_shelf(&self, i: usize, m: usize) -> f64 {
        self.get(Poi::Workstation(i), Poi::Shelf(m))
    }

    /// Builds a matrix directly from POI-ordered rows (shelves, workstations,
    /// charger). Used for hand-made test geometries.
    pub fn from_rows(num_shelves: usize, num_workstations: usize, rows: Vec<Vec<f64>>) -> Self {
        let size = num_shelves + num_workstations + 1;
        assert_eq!(rows.len(), size, "expected {size} rows");
        let mut d = Vec::with_capacity(size * size);
        for row in rows {
            assert_eq!(row.len(), size, "expected {size} columns");
            d.extend(row);
        }
        DistanceMatrix {
            num_shelves,
            num_workstations,
            size,
            d,
        }
    }
}

/// All-pairs shortest directed distances between the layout's points of
/// interest, one Dijkstra pass per source.
pub fn shortest_distances(layout: &GridLayout) -> DistanceMatrix {
    let cells: Vec<CellId> = layout
        .shelves
        .iter()
        .copied()
        .chain(layout.workstations.iter().map(|w| w.cell))
        .chain(std::iter::once(layout.charger.cell))
        .collect();
    let size = cells.len();
    let mut d = Vec::with_capacity(size * size);
    for &src in &cells {
        let row = layout.distances_from(src);
        d.extend(cells.iter().map(|&dst| row[dst]));
    }
    DistanceMatrix {
        num_shelves: layout.num_shelves(),
        num_workstations: layout.num_workstations(),
        size,
        d,
    }
}
