//! Command-line front end: `run`, `diagnose`, and `dump-mesh` subcommands.
//!
//! Exit codes: 0 on success, 2 on bad arguments or unusable paths, 3 on
//! solver failure. Configuration precedence for `run`: explicit flags, then
//! an optional JSON config file, then built-in defaults.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::adaptive::{
    fit_rate, records_to_csv, reference_lambda, run, RunConfig, RunError, RunMode, RunRecord,
};
use crate::assembly::assemble;
use crate::diagnostics::{
    effectivity, eigenspace_gap, identity_ii_check, infsup_constant, IdentityReport,
};
use crate::eigsolve::{solve_evp, SolveOptions};
use crate::estimator::{compute_indicators, mark_dorfler};
use crate::mesh::{
    create_initial_mesh, mesh_to_json, refine, uniform_refine, CellMap, DomainTag, Mesh,
};
use crate::space::build_space;

#[derive(Parser)]
#[command(name = "stokes-afem", version, about = "Adaptive Stokes eigenvalue solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a refinement study and write CSV/JSON results.
    Run(RunArgs),
    /// Run a consistency check and print its report as JSON.
    Diagnose(DiagnoseArgs),
    /// Write the mesh of a refinement level as JSON.
    DumpMesh(DumpMeshArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Domain: lshape, slit, or square.
    #[arg(long)]
    domain: Option<String>,
    /// Refinement mode: adaptive or uniform.
    #[arg(long)]
    mode: Option<String>,
    /// Dorfler bulk parameter in (0,1).
    #[arg(long)]
    theta: Option<f64>,
    /// Number of eigenvalues to compute.
    #[arg(long)]
    nev: Option<usize>,
    /// Stop before a level whose total DOF count exceeds this.
    #[arg(long)]
    max_dofs: Option<usize>,
    /// Maximum number of refinement levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Eigensolver relative residual tolerance.
    #[arg(long)]
    eig_tol: Option<f64>,
    /// Output directory for run.csv / run.json (stdout summary otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the final mesh as mesh_final.json in the output directory.
    #[arg(long)]
    dump_mesh: bool,
    /// Also write final-level operators in Matrix Market format.
    #[arg(long)]
    dump_matrices: bool,
    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Domain: lshape, slit, or square.
    #[arg(long)]
    domain: Option<String>,
    /// Check to run: identity2, infsup, gap, or all.
    #[arg(long, default_value = "all")]
    check: String,
    /// Uniform refinement levels applied before the check.
    #[arg(long, default_value_t = 1)]
    levels: usize,
    /// Eigensolver relative residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    eig_tol: f64,
}

#[derive(Args)]
struct DumpMeshArgs {
    /// Domain: lshape, slit, or square.
    #[arg(long)]
    domain: Option<String>,
    /// Uniform refinement levels applied before dumping.
    #[arg(long, default_value_t = 0)]
    levels: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    BadArgs(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::BadArgs(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::BadArgs(m) | CliError::Solver(m) => m,
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::BadConfig(m) => CliError::BadArgs(m),
            other => CliError::Solver(other.to_string()),
        }
    }
}

/// Values accepted from a `--config` JSON file.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    domain: Option<String>,
    mode: Option<String>,
    theta: Option<f64>,
    nev: Option<usize>,
    max_dofs: Option<usize>,
    levels: Option<usize>,
    eig_tol: Option<f64>,
}

fn parse_domain(s: Option<&str>) -> Result<DomainTag, CliError> {
    let s = s.unwrap_or("lshape");
    DomainTag::parse(s)
        .map_err(|_| CliError::BadArgs(format!("--domain: unknown domain {s:?} (expected lshape, slit, or square)")))
}

fn apply_thread_env() {
    match std::env::var("STOKES_AFEM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 1 => faer::set_global_parallelism(faer::Par::rayon(n)),
            _ => faer::set_global_parallelism(faer::Par::Seq),
        },
        // Sequential by default: the determinism contract is worth more than
        // the speedup at these problem sizes.
        Err(_) => faer::set_global_parallelism(faer::Par::Seq),
    }
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    apply_thread_env();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Command::Run(args) => cmd_run(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::DumpMesh(args) => cmd_dump_mesh(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn build_run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let raw = std::fs::read_to_string(path).map_err(|e| {
                CliError::BadArgs(format!("--config: cannot read {}: {e}", path.display()))
            })?;
            serde_json::from_str(&raw).map_err(|e| {
                CliError::BadArgs(format!("--config: invalid JSON in {}: {e}", path.display()))
            })?
        }
        None => FileConfig::default(),
    };
    let domain = parse_domain(args.domain.as_deref().or(file.domain.as_deref()))?;
    let mut config = RunConfig::new(domain);
    config.reference_lambda = Some(reference_lambda(domain));
    if let Some(mode) = args.mode.as_deref().or(file.mode.as_deref()) {
        config.mode = RunMode::parse(mode).map_err(|e| CliError::BadArgs(format!("--mode: {e}")))?;
    }
    if let Some(theta) = args.theta.or(file.theta) {
        if !(0.0 < theta && theta < 1.0) {
            return Err(CliError::BadArgs(format!(
                "--theta: {theta} outside the open interval (0,1)"
            )));
        }
        config.theta = theta;
    }
    if let Some(nev) = args.nev.or(file.nev) {
        if nev == 0 {
            return Err(CliError::BadArgs("--nev: must be >= 1".into()));
        }
        config.nev = nev;
    }
    if let Some(max_dofs) = args.max_dofs.or(file.max_dofs) {
        config.max_dofs = max_dofs;
    }
    if let Some(levels) = args.levels.or(file.levels) {
        if levels == 0 {
            return Err(CliError::BadArgs("--levels: must be >= 1".into()));
        }
        config.max_levels = levels;
    }
    if let Some(tol) = args.eig_tol.or(file.eig_tol) {
        if tol <= 0.0 {
            return Err(CliError::BadArgs("--eig-tol: must be positive".into()));
        }
        config.eig_tol = tol;
    }
    Ok(config)
}

fn run_json(config: &RunConfig, records: &[RunRecord]) -> serde_json::Value {
    let lambdas: Vec<f64> = records.iter().map(|r| r.lambdas[0]).collect();
    let etas: Vec<f64> = records.iter().map(|r| r.eta).collect();
    let dofs: Vec<f64> = records.iter().map(|r| r.dofs() as f64).collect();
    let mut diagnostics = serde_json::Map::new();
    if let Some(reference) = config.reference_lambda {
        diagnostics.insert("reference_lambda".into(), reference.into());
        let eff = effectivity(&lambdas, &etas, reference);
        diagnostics.insert(
            "effectivity".into(),
            serde_json::to_value(&eff).expect("serialize"),
        );
        let sqrt_err: Vec<f64> = records.iter().filter_map(|r| r.sqrt_err).collect();
        let tail = 6.min(records.len());
        if let Ok(rate) = fit_rate(&dofs, &sqrt_err, tail) {
            diagnostics.insert("rate_sqrt_err".into(), rate.into());
        }
        if let Ok(rate) = fit_rate(&dofs, &etas, tail) {
            diagnostics.insert("rate_eta".into(), rate.into());
        }
    }
    serde_json::json!({
        "config": config,
        "records": records,
        "diagnostics": diagnostics,
    })
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::BadArgs(format!("cannot write {}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let config = build_run_config(&args)?;
    let records = run(&config)?;
    let csv = records_to_csv(&records);
    let json = serde_json::to_string_pretty(&run_json(&config, &records)).expect("serialize");
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| {
                CliError::BadArgs(format!("--out: cannot create {}: {e}", dir.display()))
            })?;
            write_file(&dir.join("run.csv"), &csv)?;
            write_file(&dir.join("run.json"), &json)?;
            if args.dump_mesh || args.dump_matrices {
                let mesh = Arc::new(final_mesh(&config, &records));
                if args.dump_mesh {
                    write_file(&dir.join("mesh_final.json"), &mesh_to_json(&mesh))?;
                }
                if args.dump_matrices {
                    let space = build_space(&mesh)
                        .map_err(|e| CliError::Solver(format!("space rebuild failed: {e}")))?;
                    let ops = assemble(&space);
                    write_file(&dir.join("A.mtx"), &ops.a.to_matrix_market())?;
                    write_file(&dir.join("B.mtx"), &ops.b.to_matrix_market())?;
                    write_file(&dir.join("M.mtx"), &ops.m.to_matrix_market())?;
                }
            }
            let last = records.last().expect("at least one record");
            eprintln!(
                "{} levels, final dofs {}, lambda1 {:.9}",
                records.len(),
                last.dofs(),
                last.lambdas[0]
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}

/// Replay the refinement decisions of a finished run to recover its final
/// mesh (records only store scalars).
fn final_mesh(config: &RunConfig, records: &[RunRecord]) -> Mesh {
    let mut mesh = create_initial_mesh(config.domain);
    for record in &records[..records.len().saturating_sub(1)] {
        if record.marked == 0 {
            break;
        }
        mesh = match config.mode {
            RunMode::Uniform => uniform_refine(&mesh).0,
            RunMode::Adaptive => {
                let arc = Arc::new(mesh);
                let space = build_space(&arc).expect("space during replay");
                let ops = assemble(&space);
                let opts = SolveOptions {
                    tol: config.eig_tol,
                    ..SolveOptions::default()
                };
                let pairs = solve_evp(&ops, &opts).expect("solve during replay");
                let ind = compute_indicators(&space, &pairs[0]).expect("indicators during replay");
                let marked = mark_dorfler(&ind, config.theta).expect("marking during replay");
                refine(&arc, &marked).0
            }
        };
    }
    mesh
}

fn solve_level(
    domain: DomainTag,
    levels: usize,
    tol: f64,
) -> Result<
    (
        Arc<Mesh>,
        crate::space::THSpace,
        crate::assembly::StokesOperators,
        crate::eigsolve::EigenPair,
        CellMap,
    ),
    CliError,
> {
    let mut mesh = create_initial_mesh(domain);
    let mut map = CellMap::identity(mesh.n_cells());
    for _ in 0..levels {
        let (m, step) = uniform_refine(&mesh);
        map = map.compose(&step);
        mesh = m;
    }
    let mesh = Arc::new(mesh);
    let space = build_space(&mesh).map_err(|e| CliError::Solver(e.to_string()))?;
    let ops = assemble(&space);
    let pair = solve_evp(
        &ops,
        &SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )
    .map_err(|e| CliError::Solver(e.to_string()))?
    .remove(0);
    Ok((mesh, space, ops, pair, map))
}

fn identity2_report(domain: DomainTag, levels: usize, tol: f64) -> Result<IdentityReport, CliError> {
    let (coarse_mesh, cs, _cops, cp, _) = solve_level(domain, levels, tol)?;
    let (fm, map) = uniform_refine(&coarse_mesh);
    let fine = Arc::new(fm);
    let fs = build_space(&fine).map_err(|e| CliError::Solver(e.to_string()))?;
    let fops = assemble(&fs);
    let fp = solve_evp(
        &fops,
        &SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )
    .map_err(|e| CliError::Solver(e.to_string()))?
    .remove(0);
    identity_ii_check((&cs, &cp), (&fs, &fops, &fp), &map)
        .map_err(|e| CliError::Solver(e.to_string()))
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<(), CliError> {
    let domain = parse_domain(args.domain.as_deref())?;
    let mut out = serde_json::Map::new();
    let known = ["identity2", "infsup", "gap", "all"];
    if !known.contains(&args.check.as_str()) {
        return Err(CliError::BadArgs(format!(
            "--check: unknown check {:?} (expected one of {})",
            args.check,
            known.join(", ")
        )));
    }
    let want = |name: &str| args.check == name || args.check == "all";
    if want("identity2") {
        let report = identity2_report(domain, args.levels, args.eig_tol)?;
        out.insert(
            "identity2".into(),
            serde_json::to_value(report).expect("serialize"),
        );
    }
    if want("infsup") {
        let mut betas = Vec::new();
        for level in 0..3 {
            let (_, _, ops, _, _) = solve_level(domain, level, args.eig_tol)?;
            betas.push(infsup_constant(&ops).map_err(|e| CliError::Solver(e.to_string()))?);
        }
        out.insert("infsup".into(), serde_json::to_value(betas).expect("serialize"));
    }
    if want("gap") {
        let (coarse_mesh, cs, _, cp, _) = solve_level(domain, args.levels, args.eig_tol)?;
        let (fm, map) = uniform_refine(&coarse_mesh);
        let fine = Arc::new(fm);
        let fs = build_space(&fine).map_err(|e| CliError::Solver(e.to_string()))?;
        let fops = assemble(&fs);
        let fp = solve_evp(
            &fops,
            &SolveOptions {
                tol: args.eig_tol,
                ..SolveOptions::default()
            },
        )
        .map_err(|e| CliError::Solver(e.to_string()))?
        .remove(0);
        let delta = eigenspace_gap((&cs, &cp), (&fs, &fops, &fp), &map)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        out.insert("gap".into(), delta.into());
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::Value::Object(out)).expect("serialize")
    );
    Ok(())
}

fn cmd_dump_mesh(args: DumpMeshArgs) -> Result<(), CliError> {
    let domain = parse_domain(args.domain.as_deref())?;
    let mut mesh = create_initial_mesh(domain);
    for _ in 0..args.levels {
        mesh = uniform_refine(&mesh).0;
    }
    let json = mesh_to_json(&mesh);
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    Ok(())
}
