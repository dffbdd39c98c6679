//! Newest-vertex bisection in action: refine marked cells on the L-shape,
//! watch the closure keep the mesh conforming, and verify shape regularity.

use stokes_afem::mesh::{check_conformity, create_initial_mesh, refine, DomainTag};

fn main() {
    let mut mesh = create_initial_mesh(DomainTag::LShape);
    let initial_min_angle = mesh.min_angle();
    println!(
        "initial mesh: {} cells, min angle {:.1} deg",
        mesh.n_cells(),
        initial_min_angle.to_degrees()
    );

    // Repeatedly refine the cells closest to the reentrant corner at (0,0).
    for step in 1..=8 {
        let marked: Vec<usize> = (0..mesh.n_cells())
            .filter(|&c| {
                mesh.cell_coords(c)
                    .iter()
                    .any(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() < 1e-9)
            })
            .collect();
        let (next, map) = refine(&mesh, &marked);
        let problems = check_conformity(&next);
        assert!(problems.is_empty(), "conformity violated: {problems:?}");
        println!(
            "step {step}: marked {} -> {} cells (closure added {}), min angle {:.1} deg",
            marked.len(),
            next.n_cells(),
            next.n_cells() - mesh.n_cells() - marked.len(),
            next.min_angle().to_degrees()
        );
        assert!(next.min_angle() >= initial_min_angle / 2.0 - 1e-12);
        let _ = map;
        mesh = next;
    }
    println!(
        "area conserved: {:.12} (expected {:.12})",
        mesh.total_area(),
        mesh.domain_tag.area()
    );
}
