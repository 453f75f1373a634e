use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberKind {
    RoundSphere { dim: usize, radius: f64 },
    Circle { length: f64 },
    FlatTorus { side_lengths: Vec<f64> },
}

/// Closed fiber `(F, h)` of a warped tube.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fiber {
    pub kind: FiberKind,
    pub volume: f64,
    pub sectional_curvature: f64,
}

/// Volume of the unit `k`-sphere.
pub fn unit_sphere_volume(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (k - 1) as f64 * unit_sphere_volume(k - 2),
    }
}

impl Fiber {
    pub fn new(kind: FiberKind) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidManifold(msg));
        let (volume, curvature) = match &kind {
            FiberKind::RoundSphere { dim, radius } => {
                if *dim < 1 || !(*radius > 0.0) || !radius.is_finite() {
                    return bad(format!("round sphere needs dim >= 1 and radius > 0, got ({dim}, {radius})"));
                }
                (unit_sphere_volume(*dim) * radius.powi(*dim as i32), radius.powi(-2))
            }
            FiberKind::Circle { length } => {
                if !(*length > 0.0) || !length.is_finite() {
                    return bad(format!("circle length must be positive, got {length}"));
                }
                (*length, 0.0)
            }
            FiberKind::FlatTorus { side_lengths } => {
                if side_lengths.is_empty() || side_lengths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                    return bad(format!("flat torus needs positive side lengths, got {side_lengths:?}"));
                }
                (side_lengths.iter().product(), 0.0)
            }
        };
        Ok(Self {
            kind,
            volume,
            sectional_curvature: curvature,
        })
    }

    pub fn round_sphere(dim: usize, radius: f64) -> Result<Self> {
        Self::new(FiberKind::RoundSphere { dim, radius })
    }

    pub fn circle(length: f64) -> Result<Self> {
        Self::new(FiberKind::Circle { length })
    }

    pub fn flat_torus(side_lengths: Vec<f64>) -> Result<Self> {
        Self::new(FiberKind::FlatTorus { side_lengths })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            FiberKind::RoundSphere { dim, .. } => *dim,
            FiberKind::Circle { .. } => 1,
            FiberKind::FlatTorus { side_lengths } => side_lengths.len(),
        }
    }

    /// Ricci curvature of `h` in a unit direction.
    pub fn ricci(&self) -> f64 {
        (self.dim() as f64 - 1.0) * self.sectional_curvature
    }
}
