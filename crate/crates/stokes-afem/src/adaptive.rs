//! The SOLVE - ESTIMATE - MARK - REFINE driver, its uniform-refinement
//! counterpart, rate fitting, and benchmark reference eigenvalues.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::assembly::assemble;
use crate::eigsolve::{solve_evp, EigError, SolveOptions};
use crate::estimator::{compute_indicators, global_eta, mark_dorfler, EstimatorError};
use crate::mesh::{create_initial_mesh, refine, uniform_refine, DomainTag};
use crate::space::{build_space, prolongate, SpaceError, THSpace};

/// Benchmark value for the primary L-shape eigenvalue.
pub const LSHAPE_REFERENCE_LAMBDA: f64 = 32.13269465;
/// Benchmark value for the primary slit eigenvalue.
pub const SLIT_REFERENCE_LAMBDA: f64 = 29.9168629;

/// Extrapolated primary square eigenvalue, loaded from the shipped fixture
/// (see `examples/square_reference.rs` for how it is produced).
pub fn square_reference_lambda() -> f64 {
    let raw = include_str!("../fixtures/square_reference.json");
    let v: serde_json::Value =
        serde_json::from_str(raw).expect("square reference fixture is malformed");
    v["lambda"]
        .as_f64()
        .expect("square reference fixture lacks a lambda field")
}

/// The shipped reference for the primary eigenvalue of a domain.
pub fn reference_lambda(domain: DomainTag) -> f64 {
    match domain {
        DomainTag::LShape => LSHAPE_REFERENCE_LAMBDA,
        DomainTag::Slit => SLIT_REFERENCE_LAMBDA,
        DomainTag::Square => square_reference_lambda(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Adaptive,
    Uniform,
}

impl RunMode {
    pub fn parse(s: &str) -> Result<Self, RunError> {
        match s {
            "adaptive" => Ok(RunMode::Adaptive),
            "uniform" => Ok(RunMode::Uniform),
            other => Err(RunError::BadConfig(format!(
                "unknown mode {other:?} (expected adaptive or uniform)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub domain: DomainTag,
    pub mode: RunMode,
    /// Dorfler bulk parameter, only used in adaptive mode.
    pub theta: f64,
    pub nev: usize,
    /// Stop before solving a level whose total DOF count exceeds this.
    pub max_dofs: usize,
    pub max_levels: usize,
    pub eig_tol: f64,
    /// Reference for the primary eigenvalue; fills the error column.
    pub reference_lambda: Option<f64>,
}

impl RunConfig {
    pub fn new(domain: DomainTag) -> RunConfig {
        RunConfig {
            domain,
            mode: RunMode::Adaptive,
            theta: 0.5,
            nev: 1,
            max_dofs: 60_000,
            max_levels: 40,
            eig_tol: 1e-10,
            reference_lambda: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub level: usize,
    pub cells: usize,
    pub n_u: usize,
    pub n_p: usize,
    /// Smallest `nev` eigenvalues, ascending.
    pub lambdas: Vec<f64>,
    /// Global estimator of the primary eigenpair.
    pub eta: f64,
    /// Cells marked when leaving this level (0 at the final level).
    pub marked: usize,
    /// sqrt(|lambda_ref - lambda_1|), when a reference is configured.
    pub sqrt_err: Option<f64>,
    pub t_solve: f64,
    pub t_estimate: f64,
    pub t_refine: f64,
}

impl RunRecord {
    pub fn dofs(&self) -> usize {
        self.n_u + self.n_p
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid run configuration: {0}")]
    BadConfig(String),
    #[error("space construction failed at level {level}: {source}")]
    Space {
        level: usize,
        source: SpaceError,
    },
    #[error("eigensolve failed at level {level}: {source}")]
    Solve {
        level: usize,
        source: EigError,
    },
    #[error("estimation failed at level {level}: {source}")]
    Estimate {
        level: usize,
        source: EstimatorError,
    },
    #[error("rate fit needs {needed} positive data points, got {got}")]
    BadFitWindow { needed: usize, got: usize },
}

/// Execute a refinement study and return one record per solved level.
pub fn run(config: &RunConfig) -> Result<Vec<RunRecord>, RunError> {
    if !(0.0 < config.theta && config.theta < 1.0) {
        return Err(RunError::BadConfig(format!(
            "theta = {} outside (0,1)",
            config.theta
        )));
    }
    if config.nev == 0 {
        return Err(RunError::BadConfig("nev must be >= 1".into()));
    }
    if config.max_levels == 0 {
        return Err(RunError::BadConfig("max_levels must be >= 1".into()));
    }

    let mut mesh = Arc::new(create_initial_mesh(config.domain));
    let mut records: Vec<RunRecord> = Vec::new();
    // Previous level's space and eigenvectors plus the refinement map into the
    // current mesh, for prolongation warm starts.
    let mut prev: Option<(THSpace, Vec<crate::space::CoefficientVector>, crate::mesh::CellMap)> =
        None;

    for level in 0.. {
        let space = build_space(&mesh).map_err(|source| RunError::Space { level, source })?;
        if space.n_u + space.n_p > config.max_dofs && level > 0 {
            break;
        }
        let ops = assemble(&space);
        let warm_start = match &prev {
            Some((pspace, pcoeffs, map)) => pcoeffs
                .iter()
                .map(|c| {
                    prolongate(pspace, &space, map, c)
                        .map(|fc| fc.u)
                        .map_err(|source| RunError::Space { level, source })
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let opts = SolveOptions {
            nev: config.nev,
            tol: config.eig_tol,
            warm_start,
            ..SolveOptions::default()
        };
        let t0 = Instant::now();
        let pairs = solve_evp(&ops, &opts).map_err(|source| RunError::Solve { level, source })?;
        let t_solve = t0.elapsed().as_secs_f64();

        let t0 = Instant::now();
        let indicators = compute_indicators(&space, &pairs[0])
            .map_err(|source| RunError::Estimate { level, source })?;
        let eta = global_eta(&indicators);
        let t_estimate = t0.elapsed().as_secs_f64();

        let lambdas: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
        records.push(RunRecord {
            level,
            cells: mesh.n_cells(),
            n_u: space.n_u,
            n_p: space.n_p,
            sqrt_err: config
                .reference_lambda
                .map(|r| (r - lambdas[0]).abs().sqrt()),
            lambdas,
            eta,
            marked: 0,
            t_solve,
            t_estimate,
            t_refine: 0.0,
        });
        if level + 1 >= config.max_levels {
            break;
        }

        let t0 = Instant::now();
        let (next, map, marked) = match config.mode {
            RunMode::Adaptive => {
                let marked = mark_dorfler(&indicators, config.theta)
                    .map_err(|source| RunError::Estimate { level, source })?;
                if marked.is_empty() {
                    break;
                }
                let (m, map) = refine(&mesh, &marked);
                (m, map, marked.len())
            }
            RunMode::Uniform => {
                let (m, map) = uniform_refine(&mesh);
                let n = mesh.n_cells();
                (m, map, n)
            }
        };
        let t_refine = t0.elapsed().as_secs_f64();
        let rec = records.last_mut().unwrap();
        rec.marked = marked;
        rec.t_refine = t_refine;

        prev = Some((
            space,
            pairs.into_iter().map(|p| p.coeffs).collect(),
            map,
        ));
        mesh = Arc::new(next);
    }
    Ok(records)
}

/// Least-squares decay rate: the negated slope of log(y) against log(x) over
/// the last `tail` points (all points when `tail` is larger than the data).
pub fn fit_rate(xs: &[f64], ys: &[f64], tail: usize) -> Result<f64, RunError> {
    if xs.len() != ys.len() {
        return Err(RunError::BadFitWindow {
            needed: xs.len(),
            got: ys.len(),
        });
    }
    let start = xs.len().saturating_sub(tail);
    let xs = &xs[start..];
    let ys = &ys[start..];
    if xs.len() < 2 {
        return Err(RunError::BadFitWindow {
            needed: 2,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return Err(RunError::BadFitWindow {
            needed: xs.len(),
            got: xs.iter().chain(ys).filter(|&&v| v > 0.0).count(),
        });
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    Ok(-(num / den))
}

/// Richardson extrapolation from the last three values of a geometrically
/// converging sequence.
pub fn richardson(values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let [a, b, c] = [
        values[values.len() - 3],
        values[values.len() - 2],
        values[values.len() - 1],
    ];
    let q = (a - b) / (b - c);
    if !q.is_finite() || q <= 1.0 {
        return None;
    }
    Some(c + (c - b) / (q - 1.0))
}

/// CSV serialization of a run, one row per level. Column order:
/// level,cells,n_u,n_p,lambda1..lambdaN,eta,marked,sqrt_err,t_solve,t_estimate,t_refine
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let nev = records.iter().map(|r| r.lambdas.len()).max().unwrap_or(1);
    let mut out = String::from("level,cells,n_u,n_p");
    for k in 1..=nev {
        out.push_str(&format!(",lambda{k}"));
    }
    out.push_str(",eta,marked,sqrt_err,t_solve,t_estimate,t_refine\n");
    for r in records {
        out.push_str(&format!("{},{},{},{}", r.level, r.cells, r.n_u, r.n_p));
        for k in 0..nev {
            match r.lambdas.get(k) {
                Some(l) => out.push_str(&format!(",{l:.12e}")),
                None => out.push(','),
            }
        }
        let sqrt_err = r
            .sqrt_err
            .map(|v| format!("{v:.12e}"))
            .unwrap_or_default();
        out.push_str(&format!(
            ",{:.12e},{},{},{:.6e},{:.6e},{:.6e}\n",
            r.eta, r.marked, sqrt_err, r.t_solve, r.t_estimate, r.t_refine
        ));
    }
    out
}

/// Uniform refinement sequence of eigenvalues, a convenience wrapper around
/// [`run`] used by reference extrapolation.
pub fn uniform_lambda_sequence(
    domain: DomainTag,
    levels: usize,
    eig_tol: f64,
) -> Result<Vec<f64>, RunError> {
    let config = RunConfig {
        mode: RunMode::Uniform,
        max_levels: levels,
        max_dofs: usize::MAX,
        eig_tol,
        ..RunConfig::new(domain)
    };
    Ok(run(&config)?.iter().map(|r| r.lambdas[0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_rate_exact_cases() {
        let r = fit_rate(&[10.0, 100.0, 1000.0], &[1.0, 0.1, 0.01], 3).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let xs: [f64; 4] = [4.0, 16.0, 64.0, 256.0];
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(-0.5)).collect();
        let r = fit_rate(&xs, &ys, 4).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        let r = fit_rate(&[1.0, 2.0, 3.0], &[7.0, 7.0, 7.0], 3).unwrap();
        assert!(r.abs() < 1e-12);
        assert!(fit_rate(&[1.0, 2.0], &[1.0, -1.0], 2).is_err());
        assert!(fit_rate(&[1.0], &[1.0], 1).is_err());
    }

    #[test]
    fn richardson_exact_geometric() {
        // v_k = 5 + 3 * 4^-k converges to 5 with ratio 4.
        let vals: Vec<f64> = (0..4).map(|k| 5.0 + 3.0 * 0.25f64.powi(k)).collect();
        let x = richardson(&vals).unwrap();
        assert!((x - 5.0).abs() < 1e-12);
        assert!(richardson(&[1.0, 2.0]).is_none());
        assert!(richardson(&[1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn square_uniform_lambdas_decrease() {
        let config = RunConfig {
            mode: RunMode::Uniform,
            max_levels: 5,
            ..RunConfig::new(DomainTag::Square)
        };
        let records = run(&config).unwrap();
        assert_eq!(records.len(), 5);
        for w in records.windows(2) {
            assert!(w[1].dofs() > w[0].dofs());
        }
        // The two coarsest levels sit below the limit (the discretely
        // divergence-free spaces are not nested, so min-max monotonicity does
        // not apply); from level 2 on the sequence decreases toward it.
        for w in records[2..].windows(2) {
            assert!(w[1].lambdas[0] < w[0].lambdas[0]);
        }
        assert!(records.last().unwrap().marked == 0);
        assert!(records[..4].iter().all(|r| r.marked > 0));
    }

    #[test]
    fn single_level_run() {
        let config = RunConfig {
            max_levels: 1,
            ..RunConfig::new(DomainTag::LShape)
        };
        let records = run(&config).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].marked, 0);
    }

    #[test]
    fn bad_configs_rejected() {
        let mut c = RunConfig::new(DomainTag::Square);
        c.theta = 1.0;
        assert!(matches!(run(&c), Err(RunError::BadConfig(_))));
        let mut c = RunConfig::new(DomainTag::Square);
        c.nev = 0;
        assert!(matches!(run(&c), Err(RunError::BadConfig(_))));
    }

    #[test]
    fn csv_schema_is_stable() {
        let config = RunConfig {
            mode: RunMode::Uniform,
            max_levels: 2,
            reference_lambda: Some(60.0),
            ..RunConfig::new(DomainTag::Square)
        };
        let records = run(&config).unwrap();
        let csv = records_to_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "level,cells,n_u,n_p,lambda1,eta,marked,sqrt_err,t_solve,t_estimate,t_refine"
        );
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn adaptive_run_respects_dof_budget() {
        let config = RunConfig {
            max_dofs: 2000,
            ..RunConfig::new(DomainTag::LShape)
        };
        let records = run(&config).unwrap();
        assert!(records.len() >= 3);
        assert!(records.iter().all(|r| r.dofs() <= 2000));
    }
}
