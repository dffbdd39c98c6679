//! Conforming triangle meshes with newest-vertex bisection.
//!
//! Meshes are immutable: [`refine`] and [`uniform_refine`] return a new mesh
//! together with a [`CellMap`] relating coarse cells to their descendants.
//! The slit domain is represented with duplicated vertices along the cut, so
//! the two sides of the slit are topologically disconnected.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("unknown domain tag `{0}` (expected lshape, slit or square)")]
    UnknownDomain(String),
    #[error("marked cell id {0} out of range (mesh has {1} cells)")]
    MarkedOutOfRange(usize, usize),
    #[error("invalid mesh json: {0}")]
    InvalidJson(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainTag {
    LShape,
    Slit,
    Square,
}

impl DomainTag {
    pub fn parse(s: &str) -> Result<Self, MeshError> {
        match s {
            "lshape" => Ok(DomainTag::LShape),
            "slit" => Ok(DomainTag::Slit),
            "square" => Ok(DomainTag::Square),
            other => Err(MeshError::UnknownDomain(other.to_string())),
        }
    }

    /// Exact area of the domain.
    pub fn area(self) -> f64 {
        match self {
            DomainTag::LShape => 3.0,
            DomainTag::Slit => 4.0,
            DomainTag::Square => 1.0,
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainTag::LShape => "lshape",
            DomainTag::Slit => "slit",
            DomainTag::Square => "square",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
}

/// Triangle cell. `v` is counterclockwise; `refinement_edge` is the local
/// index of the edge opposite the newest vertex (edge `i` is opposite vertex
/// `i`).
#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub v: [usize; 3],
    pub refinement_edge: usize,
    /// Id of the cell in the mesh this one was refined from, if any.
    pub parent: Option<usize>,
    pub generation: u32,
}

/// Derived edge adjacency. `cells` lists the incident cells (1 for boundary
/// edges, 2 for interior edges in a conforming mesh).
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint vertex ids, sorted ascending.
    pub v: [usize; 2],
    pub cells: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.len() == 1
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vertex>,
    pub cells: Vec<Cell>,
    pub domain_tag: DomainTag,
    edges: Vec<Edge>,
    /// For each cell, the global edge ids of its three local edges
    /// (local edge `i` is opposite local vertex `i`).
    cell_edges: Vec<[usize; 3]>,
    /// Vertices incident to at least one boundary edge.
    boundary_vertex: Vec<bool>,
}

/// Relates a coarse mesh to the refined mesh produced from it.
#[derive(Debug, Clone)]
pub struct CellMap {
    /// For each coarse cell id, the ids of its descendant fine cells.
    pub descendants: Vec<Vec<usize>>,
    /// Coarse cells that were bisected at least once.
    pub refined_set: Vec<usize>,
}

impl CellMap {
    /// Identity map on a mesh with `n` cells.
    pub fn identity(n: usize) -> Self {
        CellMap {
            descendants: (0..n).map(|i| vec![i]).collect(),
            refined_set: Vec::new(),
        }
    }

    /// Map fine cell id -> coarse cell id.
    pub fn fine_to_coarse(&self) -> Vec<usize> {
        let n_fine = self
            .descendants
            .iter()
            .flat_map(|d| d.iter().copied())
            .max()
            .map_or(0, |m| m + 1);
        let mut out = vec![usize::MAX; n_fine];
        for (coarse, fine) in self.descendants.iter().enumerate() {
            for &f in fine {
                out[f] = coarse;
            }
        }
        out
    }

    /// Composition: `self` maps A->B, `next` maps B->C; result maps A->C.
    pub fn compose(&self, next: &CellMap) -> CellMap {
        let descendants = self
            .descendants
            .iter()
            .map(|mid| {
                let mut out = Vec::new();
                for &m in mid {
                    out.extend_from_slice(&next.descendants[m]);
                }
                out
            })
            .collect::<Vec<_>>();
        let mut refined: Vec<usize> = self.refined_set.clone();
        for (coarse, mid) in self.descendants.iter().enumerate() {
            if mid.iter().any(|m| next.refined_set.contains(m)) {
                refined.push(coarse);
            }
        }
        refined.sort_unstable();
        refined.dedup();
        CellMap {
            descendants,
            refined_set: refined,
        }
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Build the derived adjacency for a raw vertex/cell list.
    pub fn from_raw(vertices: Vec<Vertex>, cells: Vec<Cell>, domain_tag: DomainTag) -> Mesh {
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter().enumerate() {
            let mut ids = [0usize; 3];
            for le in 0..3 {
                let a = cell.v[(le + 1) % 3];
                let b = cell.v[(le + 2) % 3];
                let key = edge_key(a, b);
                let eid = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        v: [key.0, key.1],
                        cells: Vec::new(),
                    });
                    edges.len() - 1
                });
                edges[eid].cells.push(ci);
                ids[le] = eid;
            }
            cell_edges.push(ids);
        }
        let mut boundary_vertex = vec![false; vertices.len()];
        for e in &edges {
            if e.is_boundary() {
                boundary_vertex[e.v[0]] = true;
                boundary_vertex[e.v[1]] = true;
            }
        }
        Mesh {
            vertices,
            cells,
            domain_tag,
            edges,
            cell_edges,
            boundary_vertex,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell_edge_ids(&self, cell: usize) -> [usize; 3] {
        self.cell_edges[cell]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn cell_coords(&self, cell: usize) -> [[f64; 2]; 3] {
        let c = &self.cells[cell];
        [
            [self.vertices[c.v[0]].x, self.vertices[c.v[0]].y],
            [self.vertices[c.v[1]].x, self.vertices[c.v[1]].y],
            [self.vertices[c.v[2]].x, self.vertices[c.v[2]].y],
        ]
    }

    pub fn signed_area(&self, cell: usize) -> f64 {
        let p = self.cell_coords(cell);
        0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.signed_area(c)).sum()
    }

    /// Cell diameter h_T (longest edge).
    pub fn diameter(&self, cell: usize) -> f64 {
        let p = self.cell_coords(cell);
        let mut h: f64 = 0.0;
        for i in 0..3 {
            let j = (i + 1) % 3;
            let d = ((p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2)).sqrt();
            h = h.max(d);
        }
        h
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let e = &self.edges[edge];
        let a = &self.vertices[e.v[0]];
        let b = &self.vertices[e.v[1]];
        ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
    }

    /// Interior angles of a cell, in radians, unsorted (angle i at vertex i).
    pub fn angles(&self, cell: usize) -> [f64; 3] {
        let p = self.cell_coords(cell);
        let mut out = [0.0; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            let u = [p[j][0] - p[i][0], p[j][1] - p[i][1]];
            let v = [p[k][0] - p[i][0], p[k][1] - p[i][1]];
            let dot = u[0] * v[0] + u[1] * v[1];
            let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
            let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
            out[i] = (dot / (nu * nv)).clamp(-1.0, 1.0).acos();
        }
        out
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.n_cells())
            .flat_map(|c| self.angles(c))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self, cell: usize) -> [f64; 2] {
        let p = self.cell_coords(cell);
        [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]
    }
}

// ---------------------------------------------------------------------------
// Initial meshes
// ---------------------------------------------------------------------------

/// Hard-coded initial meshes. The square is the 4-triangle criss-cross of
/// (0,1)^2; the L-shape covers (-1,1)^2 minus [0,1]^2 with 12 cells; the slit
/// mesh covers (-1,1)^2 cut along the segment [0,1] x {0}, with the vertices
/// on the open part of the cut duplicated.
pub fn create_initial_mesh(domain_tag: DomainTag) -> Mesh {
    match domain_tag {
        DomainTag::Square => criss_cross_square(),
        DomainTag::LShape => lshape_template(),
        DomainTag::Slit => slit_template(),
    }
}

fn criss_cross_square() -> Mesh {
    let vertices = vec![
        Vertex { x: 0.0, y: 0.0 },
        Vertex { x: 1.0, y: 0.0 },
        Vertex { x: 1.0, y: 1.0 },
        Vertex { x: 0.0, y: 1.0 },
        Vertex { x: 0.5, y: 0.5 },
    ];
    // Refinement edge opposite the center vertex: the long boundary edge.
    let cells = [[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]]
        .iter()
        .map(|&v| Cell {
            v,
            refinement_edge: 2,
            parent: None,
            generation: 0,
        })
        .collect();
    Mesh::from_raw(vertices, cells, DomainTag::Square)
}

/// Two triangles per unit square, split along the diagonal from (x0,y0) to
/// (x0+1,y0+1); the diagonal is the refinement edge of both triangles, so the
/// labeling is compatible.
fn blocks_mesh(squares: &[(f64, f64)], tag: DomainTag) -> Mesh {
    let mut vmap: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut vid = |vertices: &mut Vec<Vertex>, x: f64, y: f64| -> usize {
        let key = (x as i64, y as i64);
        *vmap.entry(key).or_insert_with(|| {
            vertices.push(Vertex { x, y });
            vertices.len() - 1
        })
    };
    let mut cells = Vec::new();
    for &(x0, y0) in squares {
        let v00 = vid(&mut vertices, x0, y0);
        let v10 = vid(&mut vertices, x0 + 1.0, y0);
        let v11 = vid(&mut vertices, x0 + 1.0, y0 + 1.0);
        let v01 = vid(&mut vertices, x0, y0 + 1.0);
        cells.push(Cell {
            v: [v00, v10, v11],
            refinement_edge: 1, // diagonal v00-v11
            parent: None,
            generation: 0,
        });
        cells.push(Cell {
            v: [v00, v11, v01],
            refinement_edge: 2, // diagonal v00-v11
            parent: None,
            generation: 0,
        });
    }
    Mesh::from_raw(vertices, cells, tag)
}

fn reset_lineage(mut mesh: Mesh) -> Mesh {
    for c in &mut mesh.cells {
        c.parent = None;
        c.generation = 0;
    }
    mesh
}

fn lshape_template() -> Mesh {
    let base = blocks_mesh(
        &[(-1.0, -1.0), (0.0, -1.0), (-1.0, 0.0)],
        DomainTag::LShape,
    );
    let all: Vec<usize> = (0..base.n_cells()).collect();
    let (mesh, _) = refine(&base, &all);
    reset_lineage(mesh)
}

fn slit_template() -> Mesh {
    let base = blocks_mesh(
        &[(-1.0, -1.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 0.0)],
        DomainTag::Slit,
    );
    let all: Vec<usize> = (0..base.n_cells()).collect();
    let (mesh, _) = refine(&base, &all);
    let all: Vec<usize> = (0..mesh.n_cells()).collect();
    let (mesh, _) = refine(&mesh, &all);
    let mut vertices = mesh.vertices.clone();
    let mut cells = mesh.cells.clone();
    // Duplicate the vertices on the open part of the cut (0,1] x {0} and remap
    // the cells below the slit; the crack tip (0,0) stays shared.
    let mut dup: Vec<(usize, usize)> = Vec::new();
    for i in 0..vertices.len() {
        let v = vertices[i];
        if v.y == 0.0 && v.x > 0.0 && v.x <= 1.0 {
            vertices.push(v);
            dup.push((i, vertices.len() - 1));
        }
    }
    for ci in 0..cells.len() {
        if mesh.centroid(ci)[1] < 0.0 {
            for k in 0..3 {
                if let Some(&(_, new)) = dup.iter().find(|&&(old, _)| old == cells[ci].v[k]) {
                    cells[ci].v[k] = new;
                }
            }
        }
    }
    reset_lineage(Mesh::from_raw(vertices, cells, DomainTag::Slit))
}

// ---------------------------------------------------------------------------
// Refinement
// ---------------------------------------------------------------------------

struct WorkCell {
    v: [usize; 3],
    refinement_edge: usize,
    generation: u32,
    /// Coarse cell id this working cell descends from.
    root: usize,
    children: Option<[usize; 2]>,
}

struct Refiner {
    vertices: Vec<Vertex>,
    cells: Vec<WorkCell>,
    /// Midpoint vertex of a (sorted) vertex pair, once created.
    midpoints: HashMap<(usize, usize), usize>,
    /// Alive cells incident to each (sorted) vertex pair.
    edge_cells: HashMap<(usize, usize), Vec<usize>>,
}

impl Refiner {
    fn new(mesh: &Mesh) -> Refiner {
        let cells: Vec<WorkCell> = mesh
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| WorkCell {
                v: c.v,
                refinement_edge: c.refinement_edge,
                generation: c.generation,
                root: i,
                children: None,
            })
            .collect();
        let mut edge_cells: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (ci, c) in cells.iter().enumerate() {
            for le in 0..3 {
                let key = edge_key(c.v[(le + 1) % 3], c.v[(le + 2) % 3]);
                edge_cells.entry(key).or_default().push(ci);
            }
        }
        Refiner {
            vertices: mesh.vertices.clone(),
            cells,
            midpoints: HashMap::new(),
            edge_cells,
        }
    }

    fn refinement_edge_key(&self, t: usize) -> (usize, usize) {
        let c = &self.cells[t];
        let r = c.refinement_edge;
        edge_key(c.v[(r + 1) % 3], c.v[(r + 2) % 3])
    }

    fn midpoint(&mut self, key: (usize, usize)) -> usize {
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let a = self.vertices[key.0];
        let b = self.vertices[key.1];
        self.vertices.push(Vertex {
            x: 0.5 * (a.x + b.x),
            y: 0.5 * (a.y + b.y),
        });
        let m = self.vertices.len() - 1;
        self.midpoints.insert(key, m);
        m
    }

    /// Split cell `t` along its refinement edge. Assumes the bisection is
    /// compatible (the neighbor, if any, is bisected in the same pass).
    fn bisect(&mut self, t: usize) {
        debug_assert!(self.cells[t].children.is_none());
        let c = &self.cells[t];
        let r = c.refinement_edge;
        let peak = c.v[r];
        let a = c.v[(r + 1) % 3];
        let b = c.v[(r + 2) % 3];
        let (gen, root) = (c.generation, c.root);
        let m = self.midpoint(edge_key(a, b));
        // Children keep counterclockwise orientation; the midpoint is the
        // newest vertex (local index 2), so the refinement edge is 2.
        let child_a = WorkCell {
            v: [peak, a, m],
            refinement_edge: 2,
            generation: gen + 1,
            root,
            children: None,
        };
        let child_b = WorkCell {
            v: [b, peak, m],
            refinement_edge: 2,
            generation: gen + 1,
            root,
            children: None,
        };
        let ia = self.cells.len();
        let ib = ia + 1;
        // Update edge incidence: remove t, add the children.
        for le in 0..3 {
            let key = edge_key(self.cells[t].v[(le + 1) % 3], self.cells[t].v[(le + 2) % 3]);
            if let Some(list) = self.edge_cells.get_mut(&key) {
                list.retain(|&x| x != t);
            }
        }
        self.cells.push(child_a);
        self.cells.push(child_b);
        for &ci in &[ia, ib] {
            let v = self.cells[ci].v;
            for le in 0..3 {
                let key = edge_key(v[(le + 1) % 3], v[(le + 2) % 3]);
                self.edge_cells.entry(key).or_default().push(ci);
            }
        }
        self.cells[t].children = Some([ia, ib]);
    }

    /// Bisect `t`, first refining neighbors as needed so the refinement edge
    /// is compatible. Iterative with an explicit stack; terminates because
    /// the initial labeling is compatible.
    fn refine_cell(&mut self, t0: usize) {
        let mut stack = vec![t0];
        while let Some(&t) = stack.last() {
            if self.cells[t].children.is_some() {
                stack.pop();
                continue;
            }
            let key = self.refinement_edge_key(t);
            let neighbor = self
                .edge_cells
                .get(&key)
                .and_then(|list| list.iter().copied().find(|&x| x != t));
            match neighbor {
                None => {
                    self.bisect(t);
                    stack.pop();
                }
                Some(n) => {
                    if self.refinement_edge_key(n) == key {
                        self.bisect(t);
                        self.bisect(n);
                        stack.pop();
                    } else {
                        // Incompatible neighbor: refine it first, then retry.
                        stack.push(n);
                    }
                }
            }
        }
    }

    fn finish(self, tag: DomainTag, n_coarse: usize) -> (Mesh, CellMap) {
        let mut fine_id = vec![usize::MAX; self.cells.len()];
        let mut cells = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            if c.children.is_none() {
                fine_id[i] = cells.len();
                cells.push(Cell {
                    v: c.v,
                    refinement_edge: c.refinement_edge,
                    parent: Some(c.root),
                    generation: c.generation,
                });
            }
        }
        let mut descendants = vec![Vec::new(); n_coarse];
        let mut refined_set = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            if c.children.is_none() {
                descendants[c.root].push(fine_id[i]);
            } else if i < n_coarse {
                refined_set.push(i);
            }
        }
        let mesh = Mesh::from_raw(self.vertices, cells, tag);
        (
            mesh,
            CellMap {
                descendants,
                refined_set,
            },
        )
    }
}

/// Bisect every marked cell at least once and apply conformity closure.
pub fn refine(mesh: &Mesh, marked: &[usize]) -> (Mesh, CellMap) {
    let mut marked: Vec<usize> = marked.to_vec();
    marked.sort_unstable();
    marked.dedup();
    if let Some(&bad) = marked.iter().find(|&&m| m >= mesh.n_cells()) {
        // Treated as a contract violation by callers; marking is produced
        // internally so this is a programming error.
        panic!(
            "{}",
            MeshError::MarkedOutOfRange(bad, mesh.n_cells())
        );
    }
    let mut refiner = Refiner::new(mesh);
    for &t in &marked {
        if refiner.cells[t].children.is_none() {
            refiner.refine_cell(t);
        }
    }
    refiner.finish(mesh.domain_tag, mesh.n_cells())
}

/// Two full bisection sweeps: every cell of the input is quartered.
pub fn uniform_refine(mesh: &Mesh) -> (Mesh, CellMap) {
    let all: Vec<usize> = (0..mesh.n_cells()).collect();
    let (mid, map1) = refine(mesh, &all);
    let all: Vec<usize> = (0..mid.n_cells()).collect();
    let (fine, map2) = refine(&mid, &all);
    (fine, map1.compose(&map2))
}

// ---------------------------------------------------------------------------
// Conformity checking
// ---------------------------------------------------------------------------

/// Audit the mesh invariants; an empty report means the mesh is valid.
pub fn check_conformity(mesh: &Mesh) -> Vec<String> {
    let mut report = Vec::new();
    if mesh.n_cells() < 3 {
        report.push(format!(
            "mesh has {} cells; admissibility requires at least 3",
            mesh.n_cells()
        ));
    }
    for c in 0..mesh.n_cells() {
        if mesh.signed_area(c) <= 0.0 {
            report.push(format!("cell {c} is not counterclockwise (signed area <= 0)"));
        }
        if mesh.cells[c].refinement_edge > 2 {
            report.push(format!("cell {c} has refinement edge out of range"));
        }
    }
    for (ei, e) in mesh.edges.iter().enumerate() {
        if e.cells.is_empty() || e.cells.len() > 2 {
            report.push(format!(
                "edge {ei} ({},{}) has {} incident cells",
                e.v[0],
                e.v[1],
                e.cells.len()
            ));
        }
    }
    // Hanging vertices: a boundary-looking edge whose midpoint hosts a vertex
    // that is connected to both endpoints was split on one side only. The
    // lookup is by topological half-edges, so coordinate coincidence across
    // the slit does not trigger it.
    let mut edge_set: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    for e in &mesh.edges {
        edge_set.insert((e.v[0], e.v[1]));
    }
    let mut at_coord: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (vi, v) in mesh.vertices.iter().enumerate() {
        at_coord
            .entry((v.x.to_bits(), v.y.to_bits()))
            .or_default()
            .push(vi);
    }
    for e in &mesh.edges {
        if !e.is_boundary() {
            continue;
        }
        let a = mesh.vertices[e.v[0]];
        let b = mesh.vertices[e.v[1]];
        let mx = 0.5 * (a.x + b.x);
        let my = 0.5 * (a.y + b.y);
        if let Some(cands) = at_coord.get(&(mx.to_bits(), my.to_bits())) {
            for &m in cands {
                if edge_set.contains(&edge_key(e.v[0], m)) && edge_set.contains(&edge_key(m, e.v[1]))
                {
                    report.push(format!(
                        "hanging vertex {m} on edge ({},{})",
                        e.v[0], e.v[1]
                    ));
                }
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// JSON export/import
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MeshJson {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 4]>,
    domain_tag: DomainTag,
}

pub fn mesh_to_json(mesh: &Mesh) -> String {
    let j = MeshJson {
        vertices: mesh.vertices.iter().map(|v| [v.x, v.y]).collect(),
        cells: mesh
            .cells
            .iter()
            .map(|c| [c.v[0], c.v[1], c.v[2], c.refinement_edge])
            .collect(),
        domain_tag: mesh.domain_tag,
    };
    serde_json::to_string_pretty(&j).expect("mesh serialization cannot fail")
}

pub fn mesh_from_json(s: &str) -> Result<Mesh, MeshError> {
    let j: MeshJson = serde_json::from_str(s).map_err(|e| MeshError::InvalidJson(e.to_string()))?;
    let nv = j.vertices.len();
    let vertices = j.vertices.iter().map(|&[x, y]| Vertex { x, y }).collect();
    let mut cells = Vec::with_capacity(j.cells.len());
    for &[v0, v1, v2, r] in &j.cells {
        if v0 >= nv || v1 >= nv || v2 >= nv || r > 2 {
            return Err(MeshError::InvalidJson(
                "cell references out-of-range vertex or refinement edge".into(),
            ));
        }
        cells.push(Cell {
            v: [v0, v1, v2],
            refinement_edge: r,
            parent: None,
            generation: 0,
        });
    }
    Ok(Mesh::from_raw(vertices, cells, j.domain_tag))
}
