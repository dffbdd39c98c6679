//! The two-level eigenvalue error identity, checked on all three domains.
//!
//! Between nested discrete spaces,
//!
//!   lambda_coarse - lambda_fine
//!     = a(e_u,e_u) + 2 b(e_u,e_p) - lambda_fine ||e_u||^2
//!
//! holds exactly (up to solver tolerance), so the relative gap printed here
//! should sit near 1e-10. With a fine reference as stand-in for the exact
//! solution the same identity only holds up to the reference's own error.

use std::sync::Arc;
use stokes_afem::assembly::assemble;
use stokes_afem::diagnostics::{eigenspace_gap, identity_ii_check};
use stokes_afem::eigsolve::{solve_evp, SolveOptions};
use stokes_afem::mesh::{create_initial_mesh, uniform_refine, DomainTag};
use stokes_afem::space::build_space;

fn main() {
    for domain in [DomainTag::Square, DomainTag::LShape, DomainTag::Slit] {
        let coarse_mesh = Arc::new(create_initial_mesh(domain));
        let (fine_mesh, map) = uniform_refine(&coarse_mesh);
        let fine_mesh = Arc::new(fine_mesh);
        let cs = build_space(&coarse_mesh).expect("coarse space");
        let fs = build_space(&fine_mesh).expect("fine space");
        let cops = assemble(&cs);
        let fops = assemble(&fs);
        let opts = SolveOptions::default();
        let cp = solve_evp(&cops, &opts).expect("coarse solve").remove(0);
        let fp = solve_evp(&fops, &opts).expect("fine solve").remove(0);
        let report = identity_ii_check((&cs, &cp), (&fs, &fops, &fp), &map).expect("identity");
        let delta = eigenspace_gap((&cs, &cp), (&fs, &fops, &fp), &map).expect("gap");
        println!(
            "{domain:?}: lambda drop {:+.6e}, identity rel gap {:.2e}, eigenspace gap {:.4e}",
            report.lhs, report.rel_gap, delta
        );
    }
}
