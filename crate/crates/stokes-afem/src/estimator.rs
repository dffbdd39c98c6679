//! Residual a posteriori error indicators and minimum-cardinality Dorfler
//! marking.
//!
//! Per cell T the squared indicator is
//!
//!   eta_T^2 = h_T^2 ||lambda u + Delta u - grad p||_{L2(T)}^2
//!           + h_T ||[dn u]||_{L2(dT cap Omega)}^2
//!           + h_T ||div u|_T||_{L2(dT)}^2
//!
//! with h_T the cell diameter. The normal-derivative jump is computed once
//! per interior edge and added to both adjacent cells, each weighted by its
//! own h_T; the divergence trace term uses the trace from within T on all
//! three edges, boundary edges included. Edges on the slit cut are boundary
//! edges and carry no jump term.

use crate::eigsolve::EigenPair;
use crate::quadrature::{edge_rule, triangle_rule};
use crate::space::{barycentric, barycentric_gradients, p2_gradients, p2_laplacians, THSpace};

#[derive(Debug, thiserror::Error)]
pub enum EstimatorError {
    #[error("bulk parameter theta = {0} outside (0,1)")]
    BadTheta(f64),
    #[error("coefficient sizes do not match the space")]
    SpaceMismatch,
}

#[derive(Debug, Clone)]
pub struct Indicators {
    /// Squared indicator per cell.
    pub eta_sq: Vec<f64>,
    /// Volume (strong residual) component of eta_T^2.
    pub vol: Vec<f64>,
    /// Normal-derivative jump component of eta_T^2.
    pub jump: Vec<f64>,
    /// Divergence-trace component of eta_T^2.
    pub div: Vec<f64>,
    /// ||div u||_{L2(Omega)}^2, for the estimator-equivalence diagnostic.
    pub div_l2_sq: f64,
    /// sum_e h_e ||[dn u]||_{L2(e)}^2 over interior edges, same diagnostic.
    pub edge_weighted_jump_sq: f64,
}

impl Indicators {
    pub fn n_cells(&self) -> usize {
        self.eta_sq.len()
    }

    /// eta(M)^2 for a subset of cells.
    pub fn subset_eta_sq(&self, cells: &[usize]) -> f64 {
        cells.iter().map(|&c| self.eta_sq[c]).sum()
    }

    /// Empirical ratio of the two locally equivalent estimators; `None` when
    /// the jump term vanishes.
    pub fn equivalence_ratio(&self) -> Option<f64> {
        if self.edge_weighted_jump_sq > 0.0 {
            Some(self.div_l2_sq / self.edge_weighted_jump_sq)
        } else {
            None
        }
    }

    /// CSV rows: cell_id, eta_sq, vol, jump, div.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell_id,eta_sq,vol,jump,div\n");
        for c in 0..self.n_cells() {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                c, self.eta_sq[c], self.vol[c], self.jump[c], self.div[c]
            ));
        }
        out
    }
}

/// Global estimator eta = sqrt(sum eta_T^2).
pub fn global_eta(ind: &Indicators) -> f64 {
    ind.eta_sq.iter().sum::<f64>().sqrt()
}

/// Interior strong residual and divergence-trace line integrals of one cell,
/// from local nodal values (vertices then edge midpoints, matching the cell
/// node order).
///
/// Returns (integral over T of |lambda u + Delta u - grad p|^2,
///          integral over dT of (div u)^2,
///          integral over T of (div u)^2).
pub fn cell_residual_integrals(
    coords: &[[f64; 2]; 3],
    u_local: &[[f64; 2]; 6],
    p_local: &[f64; 3],
    lambda: f64,
) -> (f64, f64, f64) {
    let tri = triangle_rule();
    let edge = edge_rule();
    let g = barycentric_gradients(coords);
    let det = (coords[1][0] - coords[0][0]) * (coords[2][1] - coords[0][1])
        - (coords[2][0] - coords[0][0]) * (coords[1][1] - coords[0][1]);
    let jac = det.abs();
    let lap = p2_laplacians(&g);
    // Laplacian of each velocity component (constant on the cell).
    let mut lap_u = [0.0f64; 2];
    for i in 0..6 {
        lap_u[0] += u_local[i][0] * lap[i];
        lap_u[1] += u_local[i][1] * lap[i];
    }
    // Pressure gradient (constant).
    let mut grad_p = [0.0f64; 2];
    for k in 0..3 {
        grad_p[0] += p_local[k] * g[k][0];
        grad_p[1] += p_local[k] * g[k][1];
    }
    let u_at = |lam: [f64; 3]| -> [f64; 2] {
        let phi = crate::space::p2_basis(lam);
        let mut u = [0.0; 2];
        for i in 0..6 {
            u[0] += u_local[i][0] * phi[i];
            u[1] += u_local[i][1] * phi[i];
        }
        u
    };
    let div_at = |lam: [f64; 3]| -> f64 {
        let grad = p2_gradients(lam, &g);
        let mut d = 0.0;
        for i in 0..6 {
            d += u_local[i][0] * grad[i][0] + u_local[i][1] * grad[i][1];
        }
        d
    };
    let mut vol = 0.0;
    let mut div_area = 0.0;
    for (q, &lam) in tri.points.iter().enumerate() {
        let u = u_at(lam);
        let r = [
            lambda * u[0] + lap_u[0] - grad_p[0],
            lambda * u[1] + lap_u[1] - grad_p[1],
        ];
        vol += tri.weights[q] * jac * (r[0] * r[0] + r[1] * r[1]);
        let d = div_at(lam);
        div_area += tri.weights[q] * jac * d * d;
    }
    let mut div_line = 0.0;
    for le in 0..3 {
        let a = (le + 1) % 3;
        let b = (le + 2) % 3;
        let len = ((coords[a][0] - coords[b][0]).powi(2) + (coords[a][1] - coords[b][1]).powi(2))
            .sqrt();
        for (q, &t) in edge.points.iter().enumerate() {
            let mut lam = [0.0; 3];
            lam[a] = 1.0 - t;
            lam[b] = t;
            let d = div_at(lam);
            div_line += edge.weights[q] * len * d * d;
        }
    }
    (vol, div_line, div_area)
}

/// Compute the local indicators of an eigenpair.
pub fn compute_indicators(space: &THSpace, pair: &EigenPair) -> Result<Indicators, EstimatorError> {
    space
        .check_coeffs(&pair.coeffs)
        .map_err(|_| EstimatorError::SpaceMismatch)?;
    let mesh = &space.mesh;
    let n_cells = mesh.n_cells();
    let lambda = pair.lambda;
    let edge = edge_rule();

    let local_values = |cell: usize| -> ([[f64; 2]; 6], [f64; 3]) {
        let mut u_local = [[0.0; 2]; 6];
        for (k, &node) in space.cell_nodes(cell).iter().enumerate() {
            if let Some(d) = space.velocity_dof(node) {
                u_local[k] = [pair.coeffs.u[d], pair.coeffs.u[d + 1]];
            }
        }
        let pv = space.cell_pressure_dofs(cell);
        let p_local = [
            pair.coeffs.p[pv[0]],
            pair.coeffs.p[pv[1]],
            pair.coeffs.p[pv[2]],
        ];
        (u_local, p_local)
    };

    let mut vol = vec![0.0; n_cells];
    let mut jump = vec![0.0; n_cells];
    let mut div = vec![0.0; n_cells];
    let mut div_l2_sq = 0.0;
    for cell in 0..n_cells {
        let coords = mesh.cell_coords(cell);
        let (u_local, p_local) = local_values(cell);
        let (v, d_line, d_area) = cell_residual_integrals(&coords, &u_local, &p_local, lambda);
        let h = mesh.diameter(cell);
        vol[cell] = h * h * v;
        div[cell] = h * d_line;
        div_l2_sq += d_area;
    }

    // Interior-edge jumps, computed once per edge.
    let mut edge_weighted_jump_sq = 0.0;
    for e in mesh.edges() {
        if e.is_boundary() {
            continue;
        }
        let [left, right] = [e.cells[0], e.cells[1]];
        let pa = &mesh.vertices[e.v[0]];
        let pb = &mesh.vertices[e.v[1]];
        let tangent = [pb.x - pa.x, pb.y - pa.y];
        let len = (tangent[0] * tangent[0] + tangent[1] * tangent[1]).sqrt();
        let normal = [tangent[1] / len, -tangent[0] / len];
        let grad_in = |cell: usize, x: [f64; 2]| -> [[f64; 2]; 2] {
            let coords = mesh.cell_coords(cell);
            let g = barycentric_gradients(&coords);
            let lam = barycentric(&coords, x);
            let grad = p2_gradients(lam, &g);
            let (u_local, _) = local_values(cell);
            let mut gu = [[0.0; 2]; 2]; // [component][direction]
            for i in 0..6 {
                for c in 0..2 {
                    gu[c][0] += u_local[i][c] * grad[i][0];
                    gu[c][1] += u_local[i][c] * grad[i][1];
                }
            }
            gu
        };
        let mut integral = 0.0;
        for (q, &t) in edge.points.iter().enumerate() {
            let x = [
                pa.x + t * (pb.x - pa.x),
                pa.y + t * (pb.y - pa.y),
            ];
            let gl = grad_in(left, x);
            let gr = grad_in(right, x);
            let mut jsq = 0.0;
            for c in 0..2 {
                let j = (gl[c][0] - gr[c][0]) * normal[0] + (gl[c][1] - gr[c][1]) * normal[1];
                jsq += j * j;
            }
            integral += edge.weights[q] * len * jsq;
        }
        jump[left] += mesh.diameter(left) * integral;
        jump[right] += mesh.diameter(right) * integral;
        edge_weighted_jump_sq += len * integral;
    }

    let eta_sq: Vec<f64> = (0..n_cells)
        .map(|c| vol[c] + jump[c] + div[c])
        .collect();
    Ok(Indicators {
        eta_sq,
        vol,
        jump,
        div,
        div_l2_sq,
        edge_weighted_jump_sq,
    })
}

/// Minimum-cardinality Dorfler marking: the |M| largest indicators (ties by
/// ascending cell id) with eta(M)^2 >= theta * eta(T)^2.
pub fn mark_dorfler(ind: &Indicators, theta: f64) -> Result<Vec<usize>, EstimatorError> {
    if !(0.0 < theta && theta < 1.0) {
        return Err(EstimatorError::BadTheta(theta));
    }
    let total: f64 = ind.eta_sq.iter().sum();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..ind.n_cells()).collect();
    order.sort_by(|&a, &b| {
        ind.eta_sq[b]
            .partial_cmp(&ind.eta_sq[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let target = theta * total;
    let mut marked = Vec::new();
    let mut acc = 0.0;
    for &c in &order {
        if acc >= target {
            break;
        }
        acc += ind.eta_sq[c];
        marked.push(c);
    }
    // Guard against summation-order rounding at the threshold.
    let mut check: f64 = marked.iter().map(|&c| ind.eta_sq[c]).sum();
    let mut next = marked.len();
    while check < target && next < order.len() {
        marked.push(order[next]);
        check += ind.eta_sq[order[next]];
        next += 1;
    }
    marked.sort_unstable();
    Ok(marked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigsolve::EigenPair;
    use crate::mesh::{create_initial_mesh, DomainTag};
    use crate::space::{build_space, CoefficientVector};
    use std::sync::Arc;

    fn indicators_from(eta_sq: Vec<f64>) -> Indicators {
        let n = eta_sq.len();
        Indicators {
            eta_sq,
            vol: vec![0.0; n],
            jump: vec![0.0; n],
            div: vec![0.0; n],
            div_l2_sq: 0.0,
            edge_weighted_jump_sq: 0.0,
        }
    }

    #[test]
    fn zero_field_zero_indicators() {
        let mesh = Arc::new(create_initial_mesh(DomainTag::LShape));
        let space = build_space(&mesh).unwrap();
        let pair = EigenPair {
            lambda: 17.0,
            coeffs: CoefficientVector::zeros(space.n_u, space.n_p),
            residual: 0.0,
            iterations: 0,
        };
        let ind = compute_indicators(&space, &pair).unwrap();
        assert!(ind.eta_sq.iter().all(|&x| x == 0.0));
        assert_eq!(global_eta(&ind), 0.0);
    }

    #[test]
    fn constant_pressure_zero_indicators() {
        let mesh = Arc::new(create_initial_mesh(DomainTag::Square));
        let space = build_space(&mesh).unwrap();
        let mut coeffs = CoefficientVector::zeros(space.n_u, space.n_p);
        coeffs.p.iter_mut().for_each(|p| *p = 1.0);
        let pair = EigenPair {
            lambda: 0.0,
            coeffs,
            residual: 0.0,
            iterations: 0,
        };
        let ind = compute_indicators(&space, &pair).unwrap();
        assert!(ind.eta_sq.iter().all(|&x| x.abs() < 1e-26));
    }

    #[test]
    fn single_cell_symbolic_oracle() {
        // Reference triangle, u = (x^2, 0), p = 0, lambda = 1.
        // vol integrand: (x^2 + 2)^2; integral over T = 71/30.
        // div u = 2x; boundary line integral = 4/3 + 0 + 4*sqrt(2)/3.
        // area integral of (2x)^2 = 4/12 = 1/3.
        let coords = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // Nodal values of (x^2, 0): vertices then edge midpoints opposite
        // each vertex: e0 midpoint (0.5,0.5), e1 (0,0.5), e2 (0.5,0).
        let u_local = [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 0.0],
            [0.25, 0.0],
            [0.0, 0.0],
            [0.25, 0.0],
        ];
        let p_local = [0.0; 3];
        let (vol, div_line, div_area) = cell_residual_integrals(&coords, &u_local, &p_local, 1.0);
        assert!((vol - 71.0 / 30.0).abs() < 1e-12, "vol = {vol}");
        let want_line = 4.0 / 3.0 * (1.0 + (2.0f64).sqrt());
        assert!((div_line - want_line).abs() < 1e-12, "div_line = {div_line}");
        assert!((div_area - 1.0 / 3.0).abs() < 1e-12, "div_area = {div_area}");
    }

    #[test]
    fn indicator_scaling_is_quadratic() {
        // Scaling the eigenfunction by s scales every eta_T by |s| (lambda
        // fixed), i.e. eta_T^2 by s^2.
        let mesh = Arc::new(create_initial_mesh(DomainTag::Square));
        let space = build_space(&mesh).unwrap();
        let base = space.interpolate(
            |x| {
                let b = x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
                [b, -2.0 * b]
            },
            |x| x[0] - 0.5,
        );
        let s = -3.5;
        let scaled = CoefficientVector {
            u: base.u.iter().map(|v| s * v).collect(),
            p: base.p.iter().map(|v| s * v).collect(),
        };
        let mk = |coeffs| EigenPair {
            lambda: 11.0,
            coeffs,
            residual: 0.0,
            iterations: 0,
        };
        let i1 = compute_indicators(&space, &mk(base)).unwrap();
        let i2 = compute_indicators(&space, &mk(scaled)).unwrap();
        for (a, b) in i1.eta_sq.iter().zip(&i2.eta_sq) {
            assert!((b - s * s * a).abs() <= 1e-12 * (s * s * a).abs().max(1e-20));
        }
    }

    #[test]
    fn global_eta_examples() {
        assert_eq!(global_eta(&indicators_from(vec![0.0, 0.0])), 0.0);
        assert_eq!(global_eta(&indicators_from(vec![9.0])), 3.0);
        assert_eq!(global_eta(&indicators_from(vec![9.0, 16.0])), 5.0);
    }

    #[test]
    fn dorfler_hand_cases() {
        let ind = indicators_from(vec![9.0, 4.0, 4.0, 1.0]);
        let m = mark_dorfler(&ind, 0.5).unwrap();
        assert_eq!(m, vec![0]);

        let ind = indicators_from(vec![4.0, 4.0, 1.0]);
        let m = mark_dorfler(&ind, 0.5).unwrap();
        assert_eq!(m, vec![0, 1]);

        let ind = indicators_from(vec![0.0, 0.0, 0.0]);
        assert!(mark_dorfler(&ind, 0.9).unwrap().is_empty());
    }

    #[test]
    fn dorfler_rejects_bad_theta() {
        let ind = indicators_from(vec![1.0]);
        assert!(mark_dorfler(&ind, 0.0).is_err());
        assert!(mark_dorfler(&ind, 1.0).is_err());
        assert!(mark_dorfler(&ind, 1.5).is_err());
    }

    /// Exhaustive minimal cardinality for small indicator vectors.
    fn brute_force_min_card(eta_sq: &[f64], theta: f64) -> usize {
        let n = eta_sq.len();
        let total: f64 = eta_sq.iter().sum();
        let mut best = n;
        for mask in 0u32..(1 << n) {
            let sum: f64 = (0..n)
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| eta_sq[i])
                .sum();
            if sum >= theta * total {
                best = best.min(mask.count_ones() as usize);
            }
        }
        best
    }

    #[test]
    fn dorfler_minimality_matches_brute_force() {
        let mut state = 0xDEADBEEFu64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for trial in 0..100 {
            let n = 3 + (trial % 10);
            let eta_sq: Vec<f64> = (0..n).map(|_| rnd()).collect();
            for &theta in &[0.3, 0.5, 0.8] {
                let ind = indicators_from(eta_sq.clone());
                let m = mark_dorfler(&ind, theta).unwrap();
                let want = brute_force_min_card(&eta_sq, theta);
                assert_eq!(m.len(), want, "eta_sq = {eta_sq:?}, theta = {theta}");
                let sum: f64 = m.iter().map(|&c| eta_sq[c]).sum();
                let total: f64 = eta_sq.iter().sum();
                assert!(sum >= theta * total);
            }
        }
    }
}
