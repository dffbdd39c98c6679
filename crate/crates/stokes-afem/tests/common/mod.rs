//! Shared test support: an independent dense eigenvalue oracle.
//!
//! The oracle never touches the sparse factorization path: it restricts the
//! stiffness pencil to the discrete divergence-free subspace (null space of B
//! from a dense SVD) and solves the reduced symmetric-definite problem with a
//! dense Cholesky + self-adjoint eigendecomposition.

use faer::{Mat, Side};
use stokes_afem::assembly::StokesOperators;

/// Smallest finite eigenvalues of the constrained pencil, ascending.
pub fn dense_stokes_eigs(ops: &StokesOperators, nev: usize) -> Vec<f64> {
    let n_u = ops.a.ncols();
    let a = ops.a.to_dense();
    let m = ops.m.to_dense();
    let b = ops.b.to_dense();
    let z = if b.nrows() == 0 {
        Mat::<f64>::identity(n_u, n_u)
    } else {
        let svd = b.svd().expect("dense svd failed");
        let sing = svd.S();
        let smax = (0..sing.dim()).map(|i| sing[i]).fold(0.0f64, f64::max);
        let rank = (0..sing.dim()).filter(|&i| sing[i] > 1e-12 * smax.max(1.0)).count();
        let v = svd.V();
        // Null-space basis: trailing right singular vectors.
        let k = n_u - rank;
        let mut z = Mat::zeros(n_u, k);
        for j in 0..k {
            for i in 0..n_u {
                z[(i, j)] = v[(i, rank + j)];
            }
        }
        z
    };
    let g = z.transpose() * &a * &z;
    let h = z.transpose() * &m * &z;
    let chol = h.llt(Side::Lower).expect("reduced mass matrix not SPD");
    let l = chol.L();
    // W = L^-1 G L^-T, symmetric with the same eigenvalues as (G, H).
    let li_g = solve_lower(&l, &g);
    let w_t = solve_lower(&l, &li_g.transpose().to_owned());
    let eig = w_t.self_adjoint_eigen(Side::Lower).expect("dense eigen failed");
    let s = eig.S();
    let mut vals: Vec<f64> = (0..s.dim()).map(|i| s[i]).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals.truncate(nev);
    vals
}

fn solve_lower(l: &faer::MatRef<'_, f64>, rhs: &Mat<f64>) -> Mat<f64> {
    let n = l.nrows();
    let mut x = rhs.clone();
    for col in 0..x.ncols() {
        for i in 0..n {
            let mut acc = x[(i, col)];
            for j in 0..i {
                acc -= l[(i, j)] * x[(j, col)];
            }
            x[(i, col)] = acc / l[(i, i)];
        }
    }
    x
}
