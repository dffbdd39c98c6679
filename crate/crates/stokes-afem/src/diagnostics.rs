//! Executable consistency checks on computed eigenpairs.
//!
//! The central tool is the discrete error identity
//!
//!   lambda_coarse - lambda_fine
//!     = a(e_u, e_u) + 2 b(e_u, e_p) - lambda_fine ||e_u||_0^2
//!
//! with e = (fine pair) - prolongate(coarse pair). Between two nested discrete
//! spaces it is exact up to solver tolerance, which makes it a hard correctness
//! gate for the whole assembly/solve/prolongation chain. With a very fine
//! reference standing in for the continuous solution the same formula is a
//! trend diagnostic only: its gap carries the reference discretization error.

use serde::Serialize;

use crate::assembly::{form_eval, FormKind, StokesOperators};
use crate::eigsolve::EigenPair;
use crate::mesh::CellMap;
use crate::space::{prolongate, CoefficientVector, SpaceError, THSpace};

#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("stiffness block is singular: {0}")]
    SingularStiffness(String),
}

/// Two evaluations of the same quantity and their disagreement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
    /// abs_gap / max(1, |lambda_fine|).
    pub rel_gap: f64,
}

fn error_identity(
    coarse: (&THSpace, &EigenPair),
    fine: (&THSpace, &StokesOperators, &EigenPair),
    map: &CellMap,
) -> Result<IdentityReport, SpaceError> {
    let (c_space, c_pair) = coarse;
    let (f_space, f_ops, f_pair) = fine;
    let mut lifted = prolongate(c_space, f_space, map, &c_pair.coeffs)?;
    // Align signs so e is the small difference, not the sum. The identity
    // itself is sign-invariant (the cross terms cancel), but downstream
    // consumers read off the error components.
    if f_ops.m.bilinear(&f_pair.coeffs.u, &lifted.u) < 0.0 {
        lifted.u.iter_mut().for_each(|v| *v = -*v);
        lifted.p.iter_mut().for_each(|v| *v = -*v);
    }
    let e = CoefficientVector {
        u: f_pair
            .coeffs
            .u
            .iter()
            .zip(&lifted.u)
            .map(|(a, b)| a - b)
            .collect(),
        p: f_pair
            .coeffs
            .p
            .iter()
            .zip(&lifted.p)
            .map(|(a, b)| a - b)
            .collect(),
    };
    let a_ee = form_eval(f_space, f_ops, FormKind::A, &e, &e)?;
    let b_ee = form_eval(f_space, f_ops, FormKind::B, &e, &e)?;
    let m_ee = form_eval(f_space, f_ops, FormKind::L2Velocity, &e, &e)?;
    let lhs = c_pair.lambda - f_pair.lambda;
    let rhs = a_ee + 2.0 * b_ee - f_pair.lambda * m_ee;
    let abs_gap = (lhs - rhs).abs();
    Ok(IdentityReport {
        lhs,
        rhs,
        abs_gap,
        rel_gap: abs_gap / f_pair.lambda.abs().max(1.0),
    })
}

/// Exact two-level identity between nested discrete eigenpairs. The gap should
/// sit at solver-tolerance level; a large gap indicates a bug upstream.
pub fn identity_ii_check(
    coarse: (&THSpace, &EigenPair),
    fine: (&THSpace, &StokesOperators, &EigenPair),
    map: &CellMap,
) -> Result<IdentityReport, SpaceError> {
    error_identity(coarse, fine, map)
}

/// The same identity with a much finer reference pair standing in for the
/// exact solution. The gap is dominated by the reference's own discretization
/// error, so this is a trend report, never a hard gate.
pub fn identity_i_check(
    pair: (&THSpace, &EigenPair),
    reference: (&THSpace, &StokesOperators, &EigenPair),
    map: &CellMap,
) -> Result<IdentityReport, SpaceError> {
    error_identity(pair, reference, map)
}

/// Per-level effectivity indices eta_l^2 / |lambda_ref - lambda_l|. Levels
/// where the eigenvalue hits the reference exactly yield `f64::INFINITY`.
pub fn effectivity(lambdas: &[f64], etas: &[f64], lambda_ref: f64) -> Vec<f64> {
    lambdas
        .iter()
        .zip(etas)
        .map(|(&l, &eta)| {
            let err = (lambda_ref - l).abs();
            if err == 0.0 {
                f64::INFINITY
            } else {
                eta * eta / err
            }
        })
        .collect()
}

/// Discrete inf-sup constant: the smallest nonzero generalized singular value
/// of the divergence operator, i.e. the square root of the smallest nonzero mu
/// with (B A^-1 B^T) q = mu M_p q. Dense computation, intended for small
/// spaces only.
pub fn infsup_constant(ops: &StokesOperators) -> Result<f64, DiagnosticsError> {
    use faer::linalg::solvers::Solve;
    use faer::Side;

    let a = ops.a.to_dense();
    let chol = a
        .llt(Side::Lower)
        .map_err(|e| DiagnosticsError::SingularStiffness(format!("{e:?}")))?;
    let bt = ops.b.to_dense().transpose().to_owned();
    let ainv_bt = chol.solve(&bt);
    let schur = ops.b.to_dense() * ainv_bt;

    // Whiten by the pressure mass matrix.
    let mp = ops.m_p.to_dense();
    let mp_chol = mp
        .llt(Side::Lower)
        .map_err(|e| DiagnosticsError::SingularStiffness(format!("{e:?}")))?;
    let l = mp_chol.L().to_owned();
    let w = solve_lower(&l, &schur);
    let w = solve_lower(&l, &w.transpose().to_owned());
    let eig = w
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| DiagnosticsError::SingularStiffness(format!("{e:?}")))?;
    let s = eig.S();
    let mut vals: Vec<f64> = (0..s.dim()).map(|i| s[i]).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let max = vals.last().copied().unwrap_or(0.0);
    let cutoff = 1e-10 * max.max(1.0);
    let min_nonzero = vals
        .into_iter()
        .find(|&v| v > cutoff)
        .ok_or_else(|| DiagnosticsError::SingularStiffness("divergence operator has rank 0".into()))?;
    Ok(min_nonzero.sqrt())
}

fn solve_lower(l: &faer::Mat<f64>, rhs: &faer::Mat<f64>) -> faer::Mat<f64> {
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

/// Graph-norm gap between two one-dimensional eigenspaces, the coarse one
/// prolongated onto the reference mesh. The sign ambiguity of eigenvectors is
/// minimized out.
pub fn eigenspace_gap(
    coarse: (&THSpace, &EigenPair),
    reference: (&THSpace, &StokesOperators, &EigenPair),
    map: &CellMap,
) -> Result<f64, SpaceError> {
    let (c_space, c_pair) = coarse;
    let (r_space, r_ops, r_pair) = reference;
    let lifted = prolongate(c_space, r_space, map, &c_pair.coeffs)?;
    let mut best = f64::INFINITY;
    for sign in [1.0f64, -1.0] {
        let d = CoefficientVector {
            u: lifted
                .u
                .iter()
                .zip(&r_pair.coeffs.u)
                .map(|(a, b)| sign * a - b)
                .collect(),
            p: lifted
                .p
                .iter()
                .zip(&r_pair.coeffs.p)
                .map(|(a, b)| sign * a - b)
                .collect(),
        };
        let norm = form_eval(r_space, r_ops, FormKind::GraphNorm, &d, &d)?;
        best = best.min(norm);
    }
    Ok(best)
}
