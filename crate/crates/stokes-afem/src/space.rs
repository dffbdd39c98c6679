//! Taylor-Hood P2-P1 space: degree-of-freedom layout, interpolation, nested
//! prolongation and point evaluation.
//!
//! Velocity unknowns live on interior P2 nodes (mesh vertices plus edge
//! midpoints), two components each; boundary nodes are eliminated. Pressure
//! unknowns live on all vertices; the zero-mean constraint is enforced by a
//! Lagrange multiplier in the eigensolver rather than by removing a DOF.

use crate::mesh::{CellMap, Mesh};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error("mesh has {0} cells; the Taylor-Hood space requires at least 3")]
    TooFewCells(usize),
    #[error("mesh lineage mismatch: {0}")]
    LineageMismatch(String),
    #[error("point ({0}, {1}) lies outside the domain")]
    PointOutside(f64, f64),
    #[error("coefficient vector sizes ({0}, {1}) do not match the space ({2}, {3})")]
    DimensionMismatch(usize, usize, usize, usize),
}

/// Coefficients of a discrete (velocity, pressure) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

impl CoefficientVector {
    pub fn zeros(n_u: usize, n_p: usize) -> Self {
        CoefficientVector {
            u: vec![0.0; n_u],
            p: vec![0.0; n_p],
        }
    }
}

#[derive(Debug, Clone)]
pub struct THSpace {
    pub mesh: Arc<Mesh>,
    pub n_u: usize,
    pub n_p: usize,
    /// Per P2 node: index of the x-component velocity DOF (y is `+1`), or
    /// `None` for boundary nodes.
    vdof: Vec<Option<usize>>,
    /// Coordinates of every P2 node (vertices first, then edge midpoints).
    node_coords: Vec<[f64; 2]>,
    /// Lowest-id cell incident to each P2 node.
    node_cell: Vec<usize>,
    /// Global P2 node ids per cell: three vertices then the three edge
    /// midpoints (edge `i` opposite vertex `i`).
    cell_nodes: Vec<[usize; 6]>,
}

/// Build the P2-P1 space on a conforming mesh.
pub fn build_space(mesh: &Arc<Mesh>) -> Result<THSpace, SpaceError> {
    if mesh.n_cells() < 3 {
        return Err(SpaceError::TooFewCells(mesh.n_cells()));
    }
    let nv = mesh.n_vertices();
    let ne = mesh.edges().len();
    let n_nodes = nv + ne;
    let mut node_coords = Vec::with_capacity(n_nodes);
    for v in &mesh.vertices {
        node_coords.push([v.x, v.y]);
    }
    for e in mesh.edges() {
        let a = &mesh.vertices[e.v[0]];
        let b = &mesh.vertices[e.v[1]];
        node_coords.push([0.5 * (a.x + b.x), 0.5 * (a.y + b.y)]);
    }
    let mut interior = vec![false; n_nodes];
    for v in 0..nv {
        interior[v] = !mesh.is_boundary_vertex(v);
    }
    for (ei, e) in mesh.edges().iter().enumerate() {
        interior[nv + ei] = !e.is_boundary();
    }
    let mut vdof = vec![None; n_nodes];
    let mut next = 0usize;
    for n in 0..n_nodes {
        if interior[n] {
            vdof[n] = Some(next);
            next += 2;
        }
    }
    let mut node_cell = vec![usize::MAX; n_nodes];
    let mut cell_nodes = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let v = mesh.cells[c].v;
        let e = mesh.cell_edge_ids(c);
        let nodes = [v[0], v[1], v[2], nv + e[0], nv + e[1], nv + e[2]];
        for &n in &nodes {
            if node_cell[n] == usize::MAX {
                node_cell[n] = c;
            }
        }
        cell_nodes.push(nodes);
    }
    Ok(THSpace {
        mesh: Arc::clone(mesh),
        n_u: next,
        n_p: nv,
        vdof,
        node_coords,
        node_cell,
        cell_nodes,
    })
}

impl THSpace {
    pub fn n_p2_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn node_coord(&self, node: usize) -> [f64; 2] {
        self.node_coords[node]
    }

    /// x-component DOF of a P2 node (`None` on the boundary).
    pub fn velocity_dof(&self, node: usize) -> Option<usize> {
        self.vdof[node]
    }

    pub fn cell_nodes(&self, cell: usize) -> [usize; 6] {
        self.cell_nodes[cell]
    }

    /// Velocity DOF indices of a cell, (node, component)-ordered; `None` for
    /// eliminated boundary nodes.
    pub fn cell_velocity_dofs(&self, cell: usize) -> [Option<usize>; 12] {
        let mut out = [None; 12];
        for (k, &n) in self.cell_nodes[cell].iter().enumerate() {
            if let Some(d) = self.vdof[n] {
                out[2 * k] = Some(d);
                out[2 * k + 1] = Some(d + 1);
            }
        }
        out
    }

    pub fn cell_pressure_dofs(&self, cell: usize) -> [usize; 3] {
        self.mesh.cells[cell].v
    }

    pub fn check_coeffs(&self, c: &CoefficientVector) -> Result<(), SpaceError> {
        if c.u.len() != self.n_u || c.p.len() != self.n_p {
            return Err(SpaceError::DimensionMismatch(
                c.u.len(),
                c.p.len(),
                self.n_u,
                self.n_p,
            ));
        }
        Ok(())
    }

    /// Interpolate smooth fields into the space. Boundary velocity values are
    /// dropped (exact for fields vanishing on the boundary).
    pub fn interpolate(
        &self,
        f_u: impl Fn([f64; 2]) -> [f64; 2],
        f_p: impl Fn([f64; 2]) -> f64,
    ) -> CoefficientVector {
        let mut c = CoefficientVector::zeros(self.n_u, self.n_p);
        for n in 0..self.n_p2_nodes() {
            if let Some(d) = self.vdof[n] {
                let val = f_u(self.node_coords[n]);
                c.u[d] = val[0];
                c.u[d + 1] = val[1];
            }
        }
        for v in 0..self.n_p {
            c.p[v] = f_p(self.node_coords[v]);
        }
        c
    }

    /// Evaluate (velocity, pressure) at a point, locating the containing cell
    /// by scanning. On the slit line the lowest-id containing cell wins.
    pub fn evaluate(
        &self,
        c: &CoefficientVector,
        point: [f64; 2],
    ) -> Result<([f64; 2], f64), SpaceError> {
        self.check_coeffs(c)?;
        for cell in 0..self.mesh.n_cells() {
            let lam = barycentric(&self.mesh.cell_coords(cell), point);
            if lam.iter().all(|&l| l >= -1e-12) {
                return Ok(self.evaluate_in_cell(c, cell, lam));
            }
        }
        Err(SpaceError::PointOutside(point[0], point[1]))
    }

    pub fn evaluate_in_cell(
        &self,
        c: &CoefficientVector,
        cell: usize,
        lam: [f64; 3],
    ) -> ([f64; 2], f64) {
        let phi = p2_basis(lam);
        let mut u = [0.0; 2];
        for (k, &n) in self.cell_nodes[cell].iter().enumerate() {
            if let Some(d) = self.vdof[n] {
                u[0] += c.u[d] * phi[k];
                u[1] += c.u[d + 1] * phi[k];
            }
        }
        let pv = self.cell_pressure_dofs(cell);
        let p = lam[0] * c.p[pv[0]] + lam[1] * c.p[pv[1]] + lam[2] * c.p[pv[2]];
        (u, p)
    }
}

/// Exact nested-space embedding of a coarse function into a refined space.
pub fn prolongate(
    coarse: &THSpace,
    fine: &THSpace,
    map: &CellMap,
    c: &CoefficientVector,
) -> Result<CoefficientVector, SpaceError> {
    coarse.check_coeffs(c)?;
    if map.descendants.len() != coarse.mesh.n_cells() {
        return Err(SpaceError::LineageMismatch(format!(
            "cell map covers {} coarse cells, mesh has {}",
            map.descendants.len(),
            coarse.mesh.n_cells()
        )));
    }
    let f2c = map.fine_to_coarse();
    if f2c.len() != fine.mesh.n_cells() || f2c.iter().any(|&x| x == usize::MAX) {
        return Err(SpaceError::LineageMismatch(
            "cell map descendants do not partition the fine mesh".into(),
        ));
    }
    let mut out = CoefficientVector::zeros(fine.n_u, fine.n_p);
    for n in 0..fine.n_p2_nodes() {
        if let Some(d) = fine.velocity_dof(n) {
            let cc = f2c[fine.node_cell[n]];
            let lam = barycentric(&coarse.mesh.cell_coords(cc), fine.node_coords[n]);
            let phi = p2_basis(lam);
            let mut val = [0.0; 2];
            for (k, &cn) in coarse.cell_nodes[cc].iter().enumerate() {
                if let Some(cd) = coarse.vdof[cn] {
                    val[0] += c.u[cd] * phi[k];
                    val[1] += c.u[cd + 1] * phi[k];
                }
            }
            out.u[d] = val[0];
            out.u[d + 1] = val[1];
        }
    }
    for v in 0..fine.n_p {
        let cc = f2c[fine.node_cell[v]];
        let lam = barycentric(&coarse.mesh.cell_coords(cc), fine.node_coords[v]);
        let pv = coarse.cell_pressure_dofs(cc);
        out.p[v] = lam[0] * c.p[pv[0]] + lam[1] * c.p[pv[1]] + lam[2] * c.p[pv[2]];
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reference element
// ---------------------------------------------------------------------------

/// Barycentric coordinates of a point with respect to a triangle.
pub fn barycentric(p: &[[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let l1 = ((x[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (x[1] - p[0][1])) / det;
    let l2 = ((p[1][0] - p[0][0]) * (x[1] - p[0][1]) - (x[0] - p[0][0]) * (p[1][1] - p[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Physical gradients of the barycentric coordinates on a triangle.
pub fn barycentric_gradients(p: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        g[i] = [(p[j][1] - p[k][1]) / det, (p[k][0] - p[j][0]) / det];
    }
    g
}

/// P2 Lagrange basis at barycentric coordinates: vertex functions first, then
/// the edge-midpoint functions (edge `i` opposite vertex `i`).
pub fn p2_basis(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

/// Physical gradients of the P2 basis at barycentric coordinates.
pub fn p2_gradients(l: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for i in 0..3 {
        let f = 4.0 * l[i] - 1.0;
        out[i] = [f * g[i][0], f * g[i][1]];
    }
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        out[3 + i] = [
            4.0 * (l[k] * g[j][0] + l[j] * g[k][0]),
            4.0 * (l[k] * g[j][1] + l[j] * g[k][1]),
        ];
    }
    out
}

/// Laplacians of the P2 basis (constant on each cell).
pub fn p2_laplacians(g: &[[f64; 2]; 3]) -> [f64; 6] {
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let mut out = [0.0; 6];
    for i in 0..3 {
        out[i] = 4.0 * dot(g[i], g[i]);
    }
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        out[3 + i] = 8.0 * dot(g[j], g[k]);
    }
    out
}
