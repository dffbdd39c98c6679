//! Recomputes the shipped reference eigenvalue for the square domain:
//! six uniform refinement levels followed by Richardson extrapolation of the
//! last three values. The printed JSON is the content of
//! fixtures/square_reference.json.

use stokes_afem::adaptive::{richardson, uniform_lambda_sequence};
use stokes_afem::mesh::DomainTag;

fn main() {
    let lambdas = uniform_lambda_sequence(DomainTag::Square, 7, 1e-10).expect("run failed");
    for (level, l) in lambdas.iter().enumerate() {
        eprintln!("level {level}: lambda = {l:.12}");
    }
    let extrapolated = richardson(&lambdas).expect("sequence not geometric");
    println!("{{");
    println!("  \"domain\": \"square\",");
    println!("  \"lambda\": {extrapolated:.12},");
    println!("  \"method\": \"6-level uniform refinement, Richardson extrapolation of the last three eigenvalues\"");
    println!("}}");
}
