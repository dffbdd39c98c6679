//! Uniform refinement convergence study. On domains with reentrant corners
//! the eigenfunction is singular and uniform refinement converges at a
//! reduced rate, which is the motivation for adaptivity.

use stokes_afem::adaptive::{fit_rate, reference_lambda, run, RunConfig, RunMode};
use stokes_afem::mesh::DomainTag;

fn main() {
    for domain in [DomainTag::Square, DomainTag::LShape, DomainTag::Slit] {
        let reference = reference_lambda(domain);
        let config = RunConfig {
            mode: RunMode::Uniform,
            reference_lambda: Some(reference),
            ..RunConfig::new(domain)
        };
        let records = run(&config).expect("uniform run failed");
        let dofs: Vec<f64> = records.iter().map(|r| r.dofs() as f64).collect();
        let sqrt_err: Vec<f64> = records.iter().filter_map(|r| r.sqrt_err).collect();
        let rate = fit_rate(&dofs, &sqrt_err, 6).expect("rate fit");
        let last = records.last().unwrap();
        println!(
            "{:?}: {} levels, final dofs {}, lambda1 {:.8}, sqrt-error decay rate {:.3}",
            domain,
            records.len(),
            last.dofs(),
            last.lambdas[0],
            rate
        );
    }
    println!("(a rate of about 1 in these units is optimal; the corner domains \
fall well short of it under uniform refinement)");
}
