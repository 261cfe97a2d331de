//! Container stack profile and the payload height corridor it induces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::SpatialGrid;

/// One stack of loaded containers occupying `[start, end]` along the rail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stack {
    pub start: f64,
    pub end: f64,
    pub height: f64,
}

/// Piecewise-constant stack heights below a rail at height `rail_height`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackProfile {
    pub rail_height: f64,
    pub ground_clearance: f64,
    #[serde(default)]
    pub stacks: Vec<Stack>,
}

/// Payload height bounds at each grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorridorBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StackProfile {
    pub fn new(rail_height: f64, ground_clearance: f64, stacks: Vec<Stack>) -> Result<Self> {
        let p = Self {
            rail_height,
            ground_clearance,
            stacks,
        };
        p.validate()?;
        Ok(p)
    }

    /// Empty loading site.
    pub fn open(rail_height: f64, ground_clearance: f64) -> Self {
        Self {
            rail_height,
            ground_clearance,
            stacks: Vec::new(),
        }
    }

    /// Three stacks on `[0, 1]`, tallest near the end of the site.
    pub fn bundled() -> Self {
        let s = |start, end, height| Stack { start, end, height };
        Self {
            rail_height: 0.75,
            ground_clearance: 0.15,
            stacks: vec![s(0.15, 0.35, 0.20), s(0.45, 0.60, 0.30), s(0.75, 0.90, 0.45)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if !(self.rail_height > 0.0) || !self.rail_height.is_finite() {
            return bad(format!("rail_height must be positive, got {}", self.rail_height));
        }
        if !(self.ground_clearance >= 0.0) || !self.ground_clearance.is_finite() {
            return bad(format!(
                "ground_clearance must be non-negative, got {}",
                self.ground_clearance
            ));
        }
        for (i, s) in self.stacks.iter().enumerate() {
            if !(s.start.is_finite() && s.end.is_finite() && s.start < s.end) {
                return bad(format!("stack {i}: need start < end, got [{}, {}]", s.start, s.end));
            }
            if !(s.height >= 0.0) {
                return bad(format!("stack {i}: negative height {}", s.height));
            }
            if s.height > self.rail_height {
                return bad(format!(
                    "stack {i}: height {} exceeds rail height {}",
                    s.height, self.rail_height
                ));
            }
            if i > 0 {
                let prev = &self.stacks[i - 1];
                if s.start < prev.start {
                    return bad(format!("stack {i}: stacks must be sorted by start"));
                }
                if s.start < prev.end {
                    return bad(format!("stack {i}: overlap with stack {}", i - 1));
                }
            }
        }
        let tallest = self.max_height();
        if self.ground_clearance > self.rail_height - tallest {
            return bad(format!(
                "empty corridor: ground_clearance {} exceeds clearance {} above tallest stack",
                self.ground_clearance,
                self.rail_height - tallest
            ));
        }
        Ok(())
    }

    pub fn max_height(&self) -> f64 {
        self.stacks.iter().map(|s| s.height).fold(0.0, f64::max)
    }

    /// Stack height at `x_p`; on a shared edge the taller neighbour wins.
    pub fn height_at(&self, x_p: f64) -> f64 {
        self.max_height_over(x_p, x_p)
    }

    /// Tallest stack touching the closed interval `[a, b]`.
    pub fn max_height_over(&self, a: f64, b: f64) -> f64 {
        self.stacks
            .iter()
            .filter(|s| s.start <= b && s.end >= a)
            .map(|s| s.height)
            .fold(0.0, f64::max)
    }

    /// Payload height bounds at every grid point. The upper bound at point
    /// `k` clears the tallest stack anywhere on the two intervals adjacent to
    /// it, so a payload path interpolated linearly between grid points that
    /// respects the bounds cannot clip a stack edge lying between them.
    pub fn corridor_bounds(&self, grid: &SpatialGrid) -> Result<CorridorBounds> {
        grid.validate()?;
        let n = grid.k + 1;
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for k in 0..n {
            let a = grid.point(k.saturating_sub(1));
            let b = grid.point((k + 1).min(grid.k));
            let lo = self.ground_clearance;
            let hi = self.rail_height - self.max_height_over(a, b);
            if lo > hi {
                return Err(Error::InfeasibleCorridor {
                    index: k,
                    lower: lo,
                    upper: hi,
                });
            }
            lower.push(lo);
            upper.push(hi);
        }
        Ok(CorridorBounds { lower, upper })
    }

    /// Step outline of `s(x_p)` over `[x0, xf]` as `(x_p, height)` corners.
    pub fn outline(&self, x0: f64, xf: f64) -> Vec<(f64, f64)> {
        let mut breaks = vec![x0, xf];
        for s in &self.stacks {
            breaks.extend([s.start, s.end].into_iter().filter(|&b| b > x0 && b < xf));
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut pts = Vec::with_capacity(2 * breaks.len());
        for w in breaks.windows(2) {
            let h = self.height_at(0.5 * (w[0] + w[1]));
            pts.push((w[0], h));
            pts.push((w[1], h));
        }
        pts
    }
}

/// Parse a profile document (TOML with keys `rail_height`,
/// `ground_clearance` and `stacks = [{start, end, height}, ...]`).
pub fn parse_profile(text: &str) -> Result<StackProfile> {
    let profile: StackProfile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    profile.validate()?;
    Ok(profile)
}

pub(crate) fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let (line, column) = e.span().map(|r| line_col(text, r.start)).unwrap_or((0, 0));
    Error::Parse {
        line,
        column,
        message: e.message().to_string(),
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}
