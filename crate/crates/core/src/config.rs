//! Run configuration documents.
//!
//! ```toml
//! alpha = 0.5                     # or: alphas = [0.01, 0.5, 0.99]
//! profile = "bundled_profile.toml" # relative to this file
//! output = "out"
//!
//! [crane]
//! m1 = 1.0
//! m2 = 0.5
//! g = 9.81
//! gamma_t = 0.8
//! gamma_h = 0.8
//!
//! [grid]
//! k = 50
//! xp0 = 0.0
//! xpf = 1.0
//!
//! [bounds]
//! l_max = 0.75
//! theta_max = 0.1
//! ft_min = -1.0
//! ft_max = 1.0
//! fh_min = 0.0
//! fh_max = 8.0
//! y_min = 0.15
//!
//! [boundary]   # t, ẋ_p, y_p, ẏ_p, l, l̇, θ, θ̇, E_T, E_H
//! initial = [0, 0, 0.6, 0, 0.6, 0, 0, 0, 0, 0]
//! final = ["free", 0, 0.6, 0, 0.6, 0, 0, 0, "free", "free"]
//! ```
//!
//! `y_min` overrides the profile's ground clearance. An optional `[solver]`
//! table takes [`SolverOptions`] fields.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corridor::{parse_profile, toml_error, StackProfile};
use crate::dynamics::CraneParams;
use crate::epigraph::EpigraphPoints;
use crate::error::{check_range, Error, Result};
use crate::nlp::SolverOptions;
use crate::spatial::SpatialGrid;
use crate::transcription::{Boundary, BoxBounds, OcpSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub k: usize,
    pub xp0: f64,
    pub xpf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default)]
    pub l_min: f64,
    pub l_max: f64,
    pub theta_max: f64,
    pub ft_min: f64,
    pub ft_max: f64,
    pub fh_min: f64,
    pub fh_max: f64,
    pub y_min: f64,
    #[serde(default = "default_v_min")]
    pub v_min_interior: f64,
}

fn default_v_min() -> f64 {
    BoxBounds::default().v_min_interior
}

/// One boundary entry: a number, or the marker `"free"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundaryEntry {
    Fixed(f64),
    Marker(String),
}

impl BoundaryEntry {
    fn resolve(&self, side: &str, i: usize) -> Result<Option<f64>> {
        match self {
            BoundaryEntry::Fixed(v) if v.is_finite() => Ok(Some(*v)),
            BoundaryEntry::Fixed(v) => Err(Error::Config(format!("boundary.{side}[{i}] is not finite: {v}"))),
            BoundaryEntry::Marker(m) if m == "free" => Ok(None),
            BoundaryEntry::Marker(m) => Err(Error::Config(format!(
                "boundary.{side}[{i}]: expected a number or \"free\", got \"{m}\""
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub initial: Vec<BoundaryEntry>,
    #[serde(rename = "final")]
    pub terminal: Vec<BoundaryEntry>,
}

impl BoundaryConfig {
    pub fn resolve(&self) -> Result<Boundary> {
        let side = |name: &str, v: &[BoundaryEntry]| -> Result<[Option<f64>; 10]> {
            if v.len() != 10 {
                return Err(Error::Config(format!(
                    "boundary.{name} needs 10 entries, got {}",
                    v.len()
                )));
            }
            let mut out = [None; 10];
            for (i, e) in v.iter().enumerate() {
                out[i] = e.resolve(name, i)?;
            }
            Ok(out)
        };
        Ok(Boundary {
            initial: side("initial", &self.initial)?,
            terminal: side("final", &self.terminal)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    alpha: Option<f64>,
    alphas: Option<Vec<f64>>,
    profile: PathBuf,
    output: Option<PathBuf>,
    crane: CraneParams,
    grid: GridConfig,
    bounds: BoundsConfig,
    boundary: BoundaryConfig,
    #[serde(default)]
    solver: SolverOptions,
    #[serde(default)]
    epigraph_points: EpigraphPoints,
}

/// A parsed, checked configuration with its stack profile loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: CraneParams,
    pub grid: SpatialGrid,
    pub bounds: BoxBounds,
    pub profile: StackProfile,
    pub profile_path: PathBuf,
    pub boundary: Boundary,
    pub alphas: Vec<f64>,
    pub output: Option<PathBuf>,
    pub solver: SolverOptions,
    pub epigraph_points: EpigraphPoints,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parse `text`, resolving the profile path against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        let profile_path = base.join(&raw.profile);
        let mut profile = parse_profile(&read(&profile_path)?)?;
        profile.ground_clearance = raw.bounds.y_min;
        profile.validate()?;

        let alphas = match (raw.alpha, raw.alphas) {
            (Some(a), None) => vec![a],
            (None, Some(v)) => v,
            (None, None) => Vec::new(),
            (Some(_), Some(_)) => return Err(Error::Config("give either alpha or alphas, not both".into())),
        };
        for &a in &alphas {
            check_range("alpha", a, 0.0, 1.0)?;
        }

        let b = &raw.bounds;
        let bounds = BoxBounds {
            l_min: b.l_min,
            l_max: b.l_max,
            theta_max: b.theta_max,
            ft_min: b.ft_min,
            ft_max: b.ft_max,
            fh_min: b.fh_min,
            fh_max: b.fh_max,
            v_min_interior: b.v_min_interior,
        };
        let cfg = Self {
            params: raw.crane,
            grid: SpatialGrid::new(raw.grid.xp0, raw.grid.xpf, raw.grid.k)?,
            bounds,
            profile,
            profile_path,
            boundary: raw.boundary.resolve()?,
            alphas,
            output: raw.output.map(|o| base.join(o)),
            solver: raw.solver,
            epigraph_points: raw.epigraph_points,
        };
        cfg.params.validate()?;
        cfg.bounds.validate()?;
        cfg.solver.validate()?;
        Ok(cfg)
    }

    /// Problem for one weighting.
    pub fn spec(&self, alpha: f64) -> Result<OcpSpec> {
        let spec = OcpSpec {
            params: self.params,
            grid: self.grid,
            profile: self.profile.clone(),
            alpha,
            boundary: self.boundary,
            bounds: self.bounds,
            epigraph_points: self.epigraph_points,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
