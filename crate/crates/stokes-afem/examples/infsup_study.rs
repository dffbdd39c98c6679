//! Discrete inf-sup constants of the Taylor-Hood pair across uniform
//! refinement. Stability means the constant is bounded away from zero
//! independently of the mesh size.

use std::sync::Arc;
use stokes_afem::assembly::assemble;
use stokes_afem::diagnostics::infsup_constant;
use stokes_afem::mesh::{create_initial_mesh, uniform_refine, DomainTag};
use stokes_afem::space::build_space;

fn main() {
    for domain in [DomainTag::Square, DomainTag::LShape, DomainTag::Slit] {
        let mut mesh = create_initial_mesh(domain);
        let mut betas = Vec::new();
        for _ in 0..3 {
            let arc = Arc::new(mesh.clone());
            let space = build_space(&arc).expect("space");
            let ops = assemble(&space);
            betas.push(infsup_constant(&ops).expect("inf-sup"));
            mesh = uniform_refine(&mesh).0;
        }
        let min = betas.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = betas.iter().cloned().fold(0.0f64, f64::max);
        println!(
            "{domain:?}: beta = {:?} (max/min = {:.3})",
            betas.iter().map(|b| (b * 1e4).round() / 1e4).collect::<Vec<_>>(),
            max / min
        );
    }
}
