//! Eigensolver checks against the independent dense oracle.

mod common;

use std::sync::Arc;
use stokes_afem::assembly::{assemble, form_eval, FormKind};
use stokes_afem::eigsolve::{residual, solve_evp, SolveOptions};
use stokes_afem::mesh::{create_initial_mesh, uniform_refine, DomainTag};
use stokes_afem::space::{build_space, CoefficientVector};

fn setup(tag: DomainTag, refinements: usize) -> (stokes_afem::space::THSpace, stokes_afem::assembly::StokesOperators) {
    let mut mesh = create_initial_mesh(tag);
    for _ in 0..refinements {
        mesh = uniform_refine(&mesh).0;
    }
    let mesh = Arc::new(mesh);
    let space = build_space(&mesh).unwrap();
    let ops = assemble(&space);
    (space, ops)
}

#[test]
fn matches_dense_oracle_on_small_meshes() {
    for (tag, refinements) in [
        (DomainTag::Square, 1),
        (DomainTag::LShape, 0),
        (DomainTag::Slit, 0),
    ] {
        let (space, ops) = setup(tag, refinements);
        let total = space.n_u + space.n_p;
        assert!(total <= 400, "{tag}: test mesh too large ({total} DOFs)");
        let pairs = solve_evp(
            &ops,
            &SolveOptions {
                nev: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let oracle = common::dense_stokes_eigs(&ops, 3);
        for (k, (pair, want)) in pairs.iter().zip(&oracle).enumerate() {
            let rel = (pair.lambda - want).abs() / want.abs();
            assert!(
                rel <= 1e-9,
                "{tag} mode {k}: lambda {} vs oracle {want} (rel {rel:.2e})",
                pair.lambda
            );
        }
    }
}

#[test]
fn eigenpair_contract_holds() {
    let (_space, ops) = setup(DomainTag::Square, 1);
    let pairs = solve_evp(&ops, &SolveOptions::default()).unwrap();
    let pair = &pairs[0];
    // ||u||_0 = 1
    let norm = ops.m.bilinear(&pair.coeffs.u, &pair.coeffs.u).sqrt();
    assert!((norm - 1.0).abs() < 1e-10);
    // zero pressure mean
    let mean: f64 = ops
        .mean
        .iter()
        .zip(&pair.coeffs.p)
        .map(|(m, p)| m * p)
        .sum();
    assert!(mean.abs() < 1e-10, "pressure mean {mean}");
    // sign convention
    let mut idx = 0;
    for (i, v) in pair.coeffs.u.iter().enumerate() {
        if v.abs() > pair.coeffs.u[idx].abs() {
            idx = i;
        }
    }
    assert!(pair.coeffs.u[idx] > 0.0);
    assert!(residual(&ops, pair) <= 1e-10);
    // discrete divergence-free
    let bu = ops.b.matvec(&pair.coeffs.u);
    let bu_norm = bu.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(bu_norm <= 1e-9, "||B u|| = {bu_norm:.3e}");
}

#[test]
fn galerkin_consistency() {
    // a(u,v) + b(v,p) = lambda (u,v) for random test vectors, and B u = 0.
    let (space, ops) = setup(DomainTag::LShape, 0);
    let pairs = solve_evp(&ops, &SolveOptions::default()).unwrap();
    let pair = &pairs[0];
    let mut state = 42u64;
    for _ in 0..10 {
        let mut v = CoefficientVector::zeros(space.n_u, space.n_p);
        for x in &mut v.u {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *x = ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0;
        }
        let a_uv = form_eval(&space, &ops, FormKind::A, &pair.coeffs, &v).unwrap();
        let b_vp = {
            let bv = ops.b.matvec(&v.u);
            bv.iter().zip(&pair.coeffs.p).map(|(x, y)| x * y).sum::<f64>()
        };
        let m_uv = form_eval(&space, &ops, FormKind::L2Velocity, &pair.coeffs, &v).unwrap();
        let v_norm = ops.m.bilinear(&v.u, &v.u).sqrt();
        let gap = (a_uv + b_vp - pair.lambda * m_uv).abs();
        assert!(gap <= 1e-9 * pair.lambda * v_norm.max(1.0), "gap {gap:.3e}");
    }
}

#[test]
fn eigenvalues_decrease_under_refinement() {
    let (_, ops0) = setup(DomainTag::Square, 0);
    let (_, ops1) = setup(DomainTag::Square, 1);
    let l0 = solve_evp(&ops0, &SolveOptions::default()).unwrap()[0].lambda;
    let l1 = solve_evp(&ops1, &SolveOptions::default()).unwrap()[0].lambda;
    assert!(l1 <= l0 + 1e-9, "l0 = {l0}, l1 = {l1}");
}

#[test]
fn square_first_eigenvalue_in_known_band() {
    // The first Stokes eigenvalue of the unit square is near 52.34.
    let (_, ops) = setup(DomainTag::Square, 2);
    let l = solve_evp(&ops, &SolveOptions::default()).unwrap()[0].lambda;
    assert!(l > 52.0 && l < 53.5, "lambda = {l}");
}

#[test]
fn perturbed_start_vector_is_stable() {
    let (space, ops) = setup(DomainTag::Square, 1);
    let base = solve_evp(&ops, &SolveOptions::default()).unwrap()[0].lambda;
    let mut start = vec![0.0; space.n_u];
    for (i, x) in start.iter_mut().enumerate() {
        *x = (i as f64 * 0.7).sin();
    }
    let perturbed = solve_evp(
        &ops,
        &SolveOptions {
            warm_start: vec![start],
            ..Default::default()
        },
    )
    .unwrap()[0]
        .lambda;
    assert!((base - perturbed).abs() <= 10.0 * 1e-10 * base.abs());
}
