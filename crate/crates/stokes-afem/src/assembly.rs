//! Sparse assembly of the Stokes bilinear forms on a Taylor-Hood space and
//! standalone form evaluation on coefficient vectors.
//!
//! Sign convention: b(v, q) = -(div v, q), stored with pressure rows and
//! velocity columns. Cells are assembled in ascending id order so repeated
//! assembly is bit-reproducible.

use crate::quadrature::triangle_rule;
use crate::space::{
    barycentric_gradients, p2_basis, p2_gradients, CoefficientVector, SpaceError, THSpace,
};
use crate::sparse::SparseMat;

#[derive(Debug, Clone)]
pub struct StokesOperators {
    /// Velocity stiffness, a(u,v) = (grad u, grad v).
    pub a: SparseMat,
    /// Divergence form, rows = pressure DOFs, b(v,q) = -(div v, q).
    pub b: SparseMat,
    /// Velocity mass matrix.
    pub m: SparseMat,
    /// Pressure mass matrix.
    pub m_p: SparseMat,
    /// Pressure-mean functional, m_p[i] = integral of the i-th P1 basis.
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    A,
    B,
    L2Velocity,
    GraphNorm,
}

pub fn assemble(space: &THSpace) -> StokesOperators {
    let rule = triangle_rule();
    let mesh = &space.mesh;
    let mut a_trip = Vec::new();
    let mut b_trip = Vec::new();
    let mut m_trip = Vec::new();
    let mut mp_trip = Vec::new();
    let mut mean = vec![0.0; space.n_p];

    for cell in 0..mesh.n_cells() {
        let coords = mesh.cell_coords(cell);
        let area = mesh.signed_area(cell);
        let jac = 2.0 * area; // |det J| for counterclockwise cells
        let g = barycentric_gradients(&coords);
        let vdofs = space.cell_velocity_dofs(cell);
        let pdofs = space.cell_pressure_dofs(cell);

        let mut ae = [[0.0f64; 6]; 6];
        let mut me = [[0.0f64; 6]; 6];
        let mut be = [[[0.0f64; 2]; 6]; 3]; // [p-node][u-node][component]
        let mut mpe = [[0.0f64; 3]; 3];
        let mut meane = [0.0f64; 3];
        for (q, &lam) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * jac;
            let phi = p2_basis(lam);
            let grad = p2_gradients(lam, &g);
            for i in 0..6 {
                for j in 0..6 {
                    ae[i][j] += w * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
                    me[i][j] += w * phi[i] * phi[j];
                }
            }
            for k in 0..3 {
                meane[k] += w * lam[k];
                for l in 0..3 {
                    mpe[k][l] += w * lam[k] * lam[l];
                }
                for i in 0..6 {
                    // b(v, q) = -(div v, q): component c contributes
                    // -d(phi_i)/dx_c against the P1 function lam_k.
                    be[k][i][0] -= w * lam[k] * grad[i][0];
                    be[k][i][1] -= w * lam[k] * grad[i][1];
                }
            }
        }

        for i in 0..6 {
            let di = match vdofs[2 * i] {
                Some(d) => d,
                None => continue,
            };
            for j in 0..6 {
                if let Some(dj) = vdofs[2 * j] {
                    for comp in 0..2 {
                        a_trip.push((di + comp, dj + comp, ae[i][j]));
                        m_trip.push((di + comp, dj + comp, me[i][j]));
                    }
                }
            }
            for k in 0..3 {
                b_trip.push((pdofs[k], di, be[k][i][0]));
                b_trip.push((pdofs[k], di + 1, be[k][i][1]));
            }
        }
        for k in 0..3 {
            mean[pdofs[k]] += meane[k];
            for l in 0..3 {
                mp_trip.push((pdofs[k], pdofs[l], mpe[k][l]));
            }
        }
    }

    StokesOperators {
        a: SparseMat::from_triplets(space.n_u, space.n_u, &a_trip),
        b: SparseMat::from_triplets(space.n_p, space.n_u, &b_trip),
        m: SparseMat::from_triplets(space.n_u, space.n_u, &m_trip),
        m_p: SparseMat::from_triplets(space.n_p, space.n_p, &mp_trip),
        mean,
    }
}

/// Evaluate a bilinear form (or the graph norm) on coefficient vectors.
///
/// For `B`, the velocity of `c1` is paired with the pressure of `c2`. For
/// `GraphNorm`, `c1` is used and the result is |||(u,p)||| itself (not its
/// square).
pub fn form_eval(
    space: &THSpace,
    ops: &StokesOperators,
    kind: FormKind,
    c1: &CoefficientVector,
    c2: &CoefficientVector,
) -> Result<f64, SpaceError> {
    space.check_coeffs(c1)?;
    space.check_coeffs(c2)?;
    Ok(match kind {
        FormKind::A => ops.a.bilinear(&c1.u, &c2.u),
        FormKind::B => {
            let bu = ops.b.matvec(&c1.u);
            crate::sparse::dot(&bu, &c2.p)
        }
        FormKind::L2Velocity => ops.m.bilinear(&c1.u, &c2.u),
        FormKind::GraphNorm => {
            let sq = ops.a.bilinear(&c1.u, &c1.u) + ops.m_p.bilinear(&c1.p, &c1.p);
            sq.max(0.0).sqrt()
        }
    })
}

/// The standalone quadrature element used in oracles: P1 mass matrix of a
/// single physical triangle.
pub fn p1_element_mass(coords: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let det = (coords[1][0] - coords[0][0]) * (coords[2][1] - coords[0][1])
        - (coords[2][0] - coords[0][0]) * (coords[1][1] - coords[0][1]);
    let area = 0.5 * det.abs();
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { area / 6.0 } else { area / 12.0 };
        }
    }
    m
}
