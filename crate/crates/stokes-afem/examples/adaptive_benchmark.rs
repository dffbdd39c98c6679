//! The full adaptive loop on a corner-singularity benchmark. Pass a domain
//! name (lshape, slit, or square) as the first argument; default is lshape.
//!
//!   cargo run --release --example adaptive_benchmark -- slit
//!
//! Prints one line per refinement level and the fitted decay rates of the
//! eigenvalue error and the estimator.

use stokes_afem::adaptive::{fit_rate, reference_lambda, run, RunConfig};
use stokes_afem::mesh::DomainTag;

fn main() {
    let domain = std::env::args()
        .nth(1)
        .map(|s| DomainTag::parse(&s).expect("unknown domain"))
        .unwrap_or(DomainTag::LShape);
    let reference = reference_lambda(domain);
    let config = RunConfig {
        reference_lambda: Some(reference),
        ..RunConfig::new(domain)
    };
    println!("domain {domain:?}, reference lambda {reference:.8}");
    let records = run(&config).expect("adaptive run failed");
    println!("level    cells     dofs          lambda1         eta   marked");
    for r in &records {
        println!(
            "{:>5} {:>8} {:>8} {:>15.9} {:>11.4e} {:>8}",
            r.level,
            r.cells,
            r.dofs(),
            r.lambdas[0],
            r.eta,
            r.marked
        );
    }
    let dofs: Vec<f64> = records.iter().map(|r| r.dofs() as f64).collect();
    let sqrt_err: Vec<f64> = records.iter().filter_map(|r| r.sqrt_err).collect();
    let etas: Vec<f64> = records.iter().map(|r| r.eta).collect();
    let rate_err = fit_rate(&dofs, &sqrt_err, 6).expect("rate fit");
    let rate_eta = fit_rate(&dofs, &etas, 6).expect("rate fit");
    println!("decay rate of sqrt(eigenvalue error) vs dofs: {rate_err:.3}");
    println!("decay rate of the estimator vs dofs:          {rate_eta:.3}");
    let last = records.last().unwrap();
    println!(
        "final relative eigenvalue error: {:.3e}",
        (last.lambdas[0] - reference).abs() / reference
    );
}
