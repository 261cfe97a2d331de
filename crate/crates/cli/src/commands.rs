use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cranopt::oracle::{self, ValidationReport, ValidationTolerances};
use cranopt::pareto::{alpha_grid, pareto_points, sweep as run_sweep, write_pareto_csv};
use cranopt::{transcribe, DiscretizedSolution, Error, OcpSpec, RunConfig};

use crate::display;

pub const SOLUTION_FILE: &str = "solution.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const VALIDATION_FILE: &str = "validation.json";
pub const PARETO_FILE: &str = "pareto.csv";
pub const SOLUTIONS_DIR: &str = "solutions";

/// Error reported on standard error as one JSON object.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "config",
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            kind: "io",
            message: format!("{}: {e}", display(path)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind, "code": self.code, "message": self.message } }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            _ => "config",
        };
        Self {
            code: 2,
            kind,
            message: e.to_string(),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// What a solve writes: the problem it solved and the result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub problem: OcpSpec,
    pub solution: DiscretizedSolution,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationDocument {
    pub report: ValidationReport,
    pub tolerances: ValidationTolerances,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn read_solution(path: &Path) -> std::result::Result<SolutionDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let doc: SolutionDocument = serde_json::from_str(&text).map_err(|e| Failure {
        code: 2,
        kind: "parse",
        message: format!("{}: {e}", display(path)),
    })?;
    doc.solution.validate()?;
    Ok(doc)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Failure::io(path, e))
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

fn output_dir<'a>(out: Option<&'a Path>, cfg: &'a RunConfig) -> std::result::Result<&'a Path, Failure> {
    out.or(cfg.output.as_deref())
        .ok_or_else(|| Failure::config("no output directory: pass --out or set `output` in the config"))
}

fn validation_document(sol: &DiscretizedSolution, spec: &OcpSpec, dt: f64) -> Result<ValidationDocument, Error> {
    let report = oracle::validate(sol, spec, dt)?;
    let tolerances = ValidationTolerances::default();
    Ok(ValidationDocument {
        violations: report.violations(&tolerances),
        warnings: report.warnings(spec, &tolerances),
        report,
        tolerances,
    })
}

pub fn solve(config: &Path, alpha: Option<f64>, out: Option<&Path>, verbose: bool) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let alpha = alpha
        .or(cfg.alphas.first().copied())
        .ok_or_else(|| Failure::config("no weight: pass --alpha or set `alpha` in the config"))?;
    let spec = cfg.spec(alpha)?;
    let dir = output_dir(out, &cfg)?;
    let ocp = transcribe(&spec)?;
    let mut opts = cfg.solver.clone();
    opts.verbose |= verbose;

    let sol = ocp.solve(&opts, None).map_err(|e| Failure {
        code: 1,
        kind: "solver",
        message: e.to_string(),
    })?;

    create_dir(dir)?;
    write_json(
        &dir.join(SOLUTION_FILE),
        &SolutionDocument {
            problem: spec.clone(),
            solution: sol.clone(),
        },
    )?;
    let dt = oracle::default_dt(&sol);
    let replay = oracle::simulate(&sol, &spec, dt).and_then(|traj| {
        let path = dir.join(TRAJECTORY_FILE);
        let f = fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", display(&path))))?;
        traj.write_csv(std::io::BufWriter::new(f))?;
        validation_document(&sol, &spec, dt)
    });
    match &replay {
        Ok(doc) => write_json(&dir.join(VALIDATION_FILE), doc)?,
        Err(e) => log_line(&format!("time-domain replay failed: {e}")),
    }

    println!(
        "{} after {} iterations: t_f = {:.6} s, energy = {:.6} J, objective = {:.6}",
        sol.status,
        sol.iterations,
        sol.final_time(),
        sol.energy(),
        sol.objective
    );
    if !sol.converged() {
        return Err(Failure {
            code: 1,
            kind: "solver",
            message: format!(
                "solver stopped with status {} (KKT residual {:.3e})",
                sol.status,
                sol.kkt.max()
            ),
        });
    }
    if let Err(e) = replay {
        return Err(Failure {
            code: 1,
            kind: "replay",
            message: e.to_string(),
        });
    }
    Ok(())
}

pub fn sweep(
    config: &Path,
    alpha_min: f64,
    alpha_max: f64,
    count: usize,
    warm_start: bool,
    out: Option<&Path>,
) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let alphas = alpha_grid(alpha_min, alpha_max, count)?;
    let base = cfg.spec(alphas[0])?;
    transcribe(&base)?;
    let dir = output_dir(out, &cfg)?;

    let results = run_sweep(&base, &alphas, &cfg.solver, warm_start)?;
    let points = pareto_points(&results);

    create_dir(&dir.join(SOLUTIONS_DIR))?;
    for (i, (alpha, r)) in results.iter().enumerate() {
        match r {
            Ok(sol) => write_json(
                &dir.join(SOLUTIONS_DIR).join(format!("{i:03}.json")),
                &SolutionDocument {
                    problem: base.clone().with_alpha(*alpha),
                    solution: sol.clone(),
                },
            )?,
            Err(e) => log_line(&format!("alpha = {alpha}: {e}")),
        }
    }
    let path = dir.join(PARETO_FILE);
    let f = fs::File::create(&path).map_err(|e| Failure::io(&path, e))?;
    write_pareto_csv(&points, f)?;

    let failed = points.iter().filter(|p| !p.converged()).count();
    let dominated = points.iter().filter(|p| p.dominated).count();
    println!(
        "{} weights, {} converged, {} flagged as dominated",
        points.len(),
        points.len() - failed,
        dominated
    );
    if failed > 0 {
        return Err(Failure {
            code: 1,
            kind: "solver",
            message: format!(
                "{failed} of {} weights did not converge; see the status column",
                points.len()
            ),
        });
    }
    Ok(())
}

pub fn validate(solution: &Path, config: &Path, dt: Option<f64>, report: Option<&Path>) -> Outcome {
    let cfg = RunConfig::load(config)?;
    let doc = read_solution(solution)?;
    let sol = &doc.solution;
    let spec = cfg.spec(sol.alpha)?;
    if sol.grid != spec.grid {
        return Err(Failure::config(format!(
            "solution grid {:?} does not match the config grid {:?}",
            sol.grid, spec.grid
        )));
    }
    let dt = dt.unwrap_or_else(|| oracle::default_dt(sol));
    let vdoc = validation_document(sol, &spec, dt).map_err(|e| match e {
        Error::OutOfRange { .. } => Failure::from(e),
        e => Failure {
            code: 3,
            kind: "violation",
            message: e.to_string(),
        },
    })?;
    match report {
        Some(path) => write_json(path, &vdoc)?,
        None => println!("{}", serde_json::to_string_pretty(&vdoc).expect("report serializes")),
    }
    for w in &vdoc.warnings {
        log_line(&format!("warning: {w}"));
    }
    if !vdoc.violations.is_empty() {
        return Err(Failure {
            code: 3,
            kind: "violation",
            message: vdoc.violations.join("; "),
        });
    }
    Ok(())
}

fn log_line(msg: &str) {
    eprintln!("cranopt: {msg}");
}
