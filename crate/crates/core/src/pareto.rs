//! Weight sweeps over α and the resulting time/energy trade-off table.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::nlp::SolverOptions;
use crate::transcription::{transcribe, DiscretizedSolution, OcpSpec, SolverStatus};

pub const PARETO_HEADER: [&str; 6] = ["alpha", "tf", "energy", "rel_time", "rel_energy", "status"];

/// One row of the trade-off table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub alpha: f64,
    pub tf: f64,
    pub energy: f64,
    /// `t_f` over that of the smallest-α converged row.
    pub rel_time: f64,
    /// Energy over that of the largest-α converged row.
    pub rel_energy: f64,
    pub status: SolverStatus,
    /// Another converged row is at least as fast and as cheap.
    pub dominated: bool,
}

impl ParetoPoint {
    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }

    fn status_label(&self) -> String {
        if self.dominated {
            format!("{}+dominated", self.status)
        } else {
            self.status.to_string()
        }
    }
}

/// `n` weights with `α/(1-α)` log-spaced between the ratios of `lo` and `hi`.
pub fn alpha_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    check_range("alpha_min", lo, f64::MIN_POSITIVE, 1.0 - f64::EPSILON)?;
    check_range("alpha_max", hi, lo, 1.0 - f64::EPSILON)?;
    if n < 2 {
        return Err(Error::Config(format!("a sweep needs at least 2 points, got {n}")));
    }
    let (a, b) = ((lo / (1.0 - lo)).ln(), (hi / (1.0 - hi)).ln());
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let r = (a + (b - a) * i as f64 / (n - 1) as f64).exp();
            r / (1.0 + r)
        })
        .collect();
    out[0] = lo;
    out[n - 1] = hi;
    Ok(out)
}

/// Solve every weight in `alphas`.
///
/// With `warm_start` the weights are solved in ascending order, each from
/// the previous converged solution; a failed warm solve is retried from the
/// default guess. Without it the solves are independent and run on scoped
/// threads. Output order follows ascending α either way.
pub fn sweep(
    base: &OcpSpec,
    alphas: &[f64],
    opts: &SolverOptions,
    warm_start: bool,
) -> Result<Vec<(f64, Result<DiscretizedSolution>)>> {
    if alphas.len() < 2 {
        return Err(Error::Config(format!(
            "a sweep needs at least 2 weights, got {}",
            alphas.len()
        )));
    }
    let mut sorted = alphas.to_vec();
    for &a in &sorted {
        check_range("alpha", a, 0.0, 1.0)?;
    }
    sorted.sort_by(f64::total_cmp);

    let solve_one = |alpha: f64, warm: Option<&DiscretizedSolution>| -> Result<DiscretizedSolution> {
        let ocp = transcribe(&base.clone().with_alpha(alpha))?;
        let sol = ocp.solve(opts, warm)?;
        if warm.is_some() && !sol.converged() {
            return ocp.solve(opts, None);
        }
        Ok(sol)
    };

    if warm_start {
        let mut out = Vec::with_capacity(sorted.len());
        let mut prev: Option<DiscretizedSolution> = None;
        for &a in &sorted {
            let r = solve_one(a, prev.as_ref());
            if let Ok(s) = &r {
                if s.converged() {
                    prev = Some(s.clone());
                }
            }
            out.push((a, r));
        }
        return Ok(out);
    }

    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut results: Vec<Option<Result<DiscretizedSolution>>> = (0..sorted.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        for (c, chunk) in results.chunks_mut(sorted.len().div_ceil(workers)).enumerate() {
            let start = c * sorted.len().div_ceil(workers);
            let sorted = &sorted;
            let solve_one = &solve_one;
            s.spawn(move || {
                for (j, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(solve_one(sorted[start + j], None));
                }
            });
        }
    });
    Ok(sorted
        .into_iter()
        .zip(results.into_iter().map(Option::unwrap))
        .collect())
}

/// Build the table: relative columns and dominance flags.
///
/// Failed solves keep their row with NaN values and their status.
pub fn pareto_points(results: &[(f64, Result<DiscretizedSolution>)]) -> Vec<ParetoPoint> {
    let mut pts: Vec<ParetoPoint> = results
        .iter()
        .map(|(alpha, r)| match r {
            Ok(s) => ParetoPoint {
                alpha: *alpha,
                tf: s.final_time(),
                energy: s.energy(),
                rel_time: f64::NAN,
                rel_energy: f64::NAN,
                status: s.status,
                dominated: false,
            },
            Err(_) => ParetoPoint {
                alpha: *alpha,
                tf: f64::NAN,
                energy: f64::NAN,
                rel_time: f64::NAN,
                rel_energy: f64::NAN,
                status: SolverStatus::NotSolved,
                dominated: false,
            },
        })
        .collect();
    pts.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    fill_relative(&mut pts);
    flag_dominated(&mut pts);
    pts
}

fn fill_relative(pts: &mut [ParetoPoint]) {
    let t_ref = pts.iter().find(|p| p.converged()).map(|p| p.tf);
    let e_ref = pts.iter().rev().find(|p| p.converged()).map(|p| p.energy);
    for p in pts.iter_mut() {
        if let Some(t) = t_ref {
            p.rel_time = p.tf / t;
        }
        if let Some(e) = e_ref {
            p.rel_energy = p.energy / e;
        }
    }
}

/// Relative slack below which two objective values count as equal.
const DOMINANCE_TOL: f64 = 1e-9;

fn flag_dominated(pts: &mut [ParetoPoint]) {
    let conv: Vec<(f64, f64)> = pts.iter().filter(|p| p.converged()).map(|p| (p.tf, p.energy)).collect();
    let le = |a: f64, b: f64| a <= b + DOMINANCE_TOL * b.abs().max(1.0);
    let lt = |a: f64, b: f64| a < b - DOMINANCE_TOL * b.abs().max(1.0);
    for p in pts.iter_mut().filter(|p| p.converged()) {
        p.dominated = conv
            .iter()
            .any(|&(t, e)| le(t, p.tf) && le(e, p.energy) && (lt(t, p.tf) || lt(e, p.energy)));
    }
}

pub fn write_pareto_csv<W: Write>(pts: &[ParetoPoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wr.write_record(PARETO_HEADER).map_err(io)?;
    for p in pts {
        wr.write_record([
            format!("{:e}", p.alpha),
            format!("{:e}", p.tf),
            format!("{:e}", p.energy),
            format!("{:e}", p.rel_time),
            format!("{:e}", p.rel_energy),
            p.status_label(),
        ])
        .map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn read_pareto_csv<R: Read>(r: R) -> Result<Vec<ParetoPoint>> {
    let mut rd = csv::Reader::from_reader(r);
    let bad = |line: usize, m: String| Error::Parse {
        line,
        column: 0,
        message: m,
    };
    let header = rd.headers().map_err(|e| bad(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != PARETO_HEADER {
        return Err(bad(1, format!("expected header {}", PARETO_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        if rec.len() != 6 {
            return Err(bad(line, format!("expected 6 fields, got {}", rec.len())));
        }
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .trim()
                .parse()
                .map_err(|_| bad(line, format!("{}: not a number: {:?}", PARETO_HEADER[j], &rec[j])))
        };
        let (label, dominated) = match rec[5].strip_suffix("+dominated") {
            Some(s) => (s, true),
            None => (&rec[5], false),
        };
        let status: SolverStatus = label
            .parse()
            .map_err(|_| bad(line, format!("unknown status {label:?}")))?;
        out.push(ParetoPoint {
            alpha: num(0)?,
            tf: num(1)?,
            energy: num(2)?,
            rel_time: num(3)?,
            rel_energy: num(4)?,
            status,
            dominated,
        });
    }
    Ok(out)
}
