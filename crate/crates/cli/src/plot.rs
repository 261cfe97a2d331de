//! Delimited series for the result figures.

use std::fs;
use std::path::{Path, PathBuf};

use cranopt::actuator_power;
use cranopt::pareto::{read_pareto_csv, write_pareto_csv, ParetoPoint};

use crate::commands::{read_solution, Failure, SolutionDocument, PARETO_FILE, SOLUTIONS_DIR, SOLUTION_FILE};
use crate::display;

pub const PLOT_FILES: [&str; 5] = [
    "pareto.csv",
    "trajectory.csv",
    "inputs.csv",
    "energy.csv",
    "hoist_sway.csv",
];

struct Inputs {
    points: Vec<ParetoPoint>,
    docs: Vec<SolutionDocument>,
}

fn load(input: &Path) -> Result<Inputs, Failure> {
    if input.is_file() {
        let doc = read_solution(input)?;
        return Ok(Inputs {
            points: vec![single_point(&doc)],
            docs: vec![doc],
        });
    }
    if !input.is_dir() {
        return Err(Failure::io(input, "no such file or directory"));
    }
    let pareto = input.join(PARETO_FILE);
    if pareto.is_file() {
        let f = fs::File::open(&pareto).map_err(|e| Failure::io(&pareto, e))?;
        let points = read_pareto_csv(f).map_err(|e| Failure {
            code: 2,
            kind: "parse",
            message: format!("{}: {e}", display(&pareto)),
        })?;
        let dir = input.join(SOLUTIONS_DIR);
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Failure::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let docs = files.iter().map(|p| read_solution(p)).collect::<Result<Vec<_>, _>>()?;
        return Ok(Inputs { points, docs });
    }
    let doc = read_solution(&input.join(SOLUTION_FILE))?;
    Ok(Inputs {
        points: vec![single_point(&doc)],
        docs: vec![doc],
    })
}

fn single_point(doc: &SolutionDocument) -> ParetoPoint {
    let s = &doc.solution;
    ParetoPoint {
        alpha: s.alpha,
        tf: s.final_time(),
        energy: s.energy(),
        rel_time: 1.0,
        rel_energy: 1.0,
        status: s.status,
        dominated: false,
    }
}

struct Table {
    path: PathBuf,
    wr: csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, Failure> {
        let path = dir.join(name);
        let mut wr = csv::Writer::from_path(&path).map_err(|e| Failure::io(&path, e))?;
        wr.write_record(header).map_err(|e| Failure::io(&path, e))?;
        Ok(Self { path, wr })
    }

    fn row(&mut self, fields: &[String]) -> Result<(), Failure> {
        self.wr.write_record(fields).map_err(|e| Failure::io(&self.path, e))
    }

    fn finish(mut self) -> Result<(), Failure> {
        self.wr.flush().map_err(|e| Failure::io(&self.path, e))
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

pub fn plotdata(input: &Path, out: &Path) -> Result<(), Failure> {
    let inputs = load(input)?;
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;

    let path = out.join(PLOT_FILES[0]);
    let f = fs::File::create(&path).map_err(|e| Failure::io(&path, e))?;
    write_pareto_csv(&inputs.points, f)?;

    let mut traj = Table::create(out, PLOT_FILES[1], &["series", "alpha", "x_p", "value"])?;
    let mut inp = Table::create(out, PLOT_FILES[2], &["alpha", "x_p", "f_t", "f_h", "p_t", "p_h"])?;
    let mut energy = Table::create(out, PLOT_FILES[3], &["alpha", "x_p", "e_t", "e_h", "energy"])?;
    let mut hs = Table::create(out, PLOT_FILES[4], &["alpha", "x_p", "l", "theta"])?;

    if let Some(first) = inputs.docs.first() {
        let g = &first.problem.grid;
        for (x, h) in first.problem.profile.outline(g.x_p0, g.x_pf) {
            traj.row(&["stack_height".into(), String::new(), num(x), num(h)])?;
        }
    }
    for doc in &inputs.docs {
        let s = &doc.solution;
        let a = num(s.alpha);
        for (i, st) in s.states.iter().enumerate() {
            let x = s.grid.point(i);
            traj.row(&["payload_y_p".into(), a.clone(), num(x), num(st.y_p)])?;
            energy.row(&[a.clone(), num(x), num(st.e_t), num(st.e_h), num(st.e_t + st.e_h)])?;
            hs.row(&[a.clone(), num(x), num(st.l), num(st.theta)])?;
        }
        // controls are held over each interval: one row per corner
        for (k, u) in s.controls.iter().enumerate() {
            for i in [k, k + 1] {
                let x = s.grid.point(i);
                let p = actuator_power(&s.states[i].to_time_state(x), u);
                inp.row(&[a.clone(), num(x), num(u.f_t), num(u.f_h), num(p.p_t), num(p.p_h)])?;
            }
        }
    }
    traj.finish()?;
    inp.finish()?;
    energy.finish()?;
    hs.finish()?;
    println!("wrote {} files to {}", PLOT_FILES.len(), display(out));
    Ok(())
}
