use std::process::ExitCode;

fn main() -> ExitCode {
    stokes_afem::cli::main()
}
