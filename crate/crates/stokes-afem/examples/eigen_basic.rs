//! Solve the three smallest Stokes eigenvalues on a uniformly refined square
//! and print eigenvalues, solver residuals, and iteration counts.

use std::sync::Arc;
use stokes_afem::assembly::assemble;
use stokes_afem::eigsolve::{solve_evp, SolveOptions};
use stokes_afem::mesh::{create_initial_mesh, uniform_refine, DomainTag};
use stokes_afem::space::build_space;

fn main() {
    let mut mesh = create_initial_mesh(DomainTag::Square);
    for _ in 0..3 {
        mesh = uniform_refine(&mesh).0;
    }
    let mesh = Arc::new(mesh);
    let space = build_space(&mesh).expect("space");
    println!(
        "square mesh: {} cells, {} velocity dofs, {} pressure dofs",
        mesh.n_cells(),
        space.n_u,
        space.n_p
    );
    let ops = assemble(&space);
    let opts = SolveOptions {
        nev: 3,
        ..SolveOptions::default()
    };
    let pairs = solve_evp(&ops, &opts).expect("eigensolve");
    for (k, pair) in pairs.iter().enumerate() {
        println!(
            "lambda_{} = {:.9}   residual {:.2e}   {} iterations",
            k + 1,
            pair.lambda,
            pair.residual,
            pair.iterations
        );
    }
}
