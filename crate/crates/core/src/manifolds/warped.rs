use serde::{Deserialize, Serialize};

use super::{Fiber, FiberKind, Side};
use crate::error::{Error, Result};
use crate::expr::{Expr, Jet, Var};

const VALIDATION_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Boundary at `t = 0` and `t = length`.
    Cylinder { length: f64 },
    /// Boundary at `t = 0`; the warp closes smoothly at `t = length`.
    Cap { length: f64 },
    /// Boundary at `t = 0`; integrals are truncated at `t_max`.
    HalfInfinite { t_max: f64 },
}

impl Topology {
    /// Upper end of the `t` range.
    pub fn length(&self) -> f64 {
        match *self {
            Topology::Cylinder { length } | Topology::Cap { length } => length,
            Topology::HalfInfinite { t_max } => t_max,
        }
    }
}

/// `[0, L] × F` with metric `dt² + w(t)² h`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedTube {
    pub fiber: Fiber,
    pub warp: Expr,
    pub topology: Topology,
    pub n: usize,
}

pub fn build_warped_tube(fiber: Fiber, warp: Expr, topology: Topology) -> Result<WarpedTube> {
    let bad = |msg: String| Err(Error::InvalidManifold(msg));
    if warp.uses(Var::X) || warp.uses(Var::Rho) {
        return bad(format!("warp `{warp}` may only depend on t"));
    }
    let len = topology.length();
    if !(len > 0.0) || !len.is_finite() {
        return bad(format!("tube length must be positive, got {len}"));
    }
    let closes = matches!(topology, Topology::Cap { .. });
    for i in 0..=VALIDATION_SAMPLES {
        let t = len * i as f64 / VALIDATION_SAMPLES as f64;
        let j = warp.jet(t, 0.0, Var::T);
        if !(j.v.is_finite() && j.d1.is_finite() && j.d2.is_finite()) {
            return bad(format!("warp `{warp}` is not finite at t = {t}"));
        }
        if (i < VALIDATION_SAMPLES || !closes) && !(j.v > 0.0) {
            return bad(format!("warp `{warp}` must be positive, w({t}) = {}", j.v));
        }
    }
    if let Topology::Cap { length } = topology {
        let FiberKind::RoundSphere { radius, .. } = fiber.kind else {
            return bad("a cap needs a round-sphere fiber".into());
        };
        let end = warp.jet(length, 0.0, Var::T);
        // Smooth closure: w(L) = 0 and w'(L) = -1/radius (unit cone angle).
        if end.v.abs() > 1e-9 || (end.d1 + 1.0 / radius).abs() > 1e-9 {
            return bad(format!(
                "cap does not close smoothly: w(L) = {}, w'(L) = {} (need 0 and {})",
                end.v,
                end.d1,
                -1.0 / radius
            ));
        }
    }
    let n = fiber.dim() + 1;
    Ok(WarpedTube {
        fiber,
        warp,
        topology,
        n,
    })
}

impl WarpedTube {
    pub fn length(&self) -> f64 {
        self.topology.length()
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.topology, Topology::HalfInfinite { .. })
    }

    pub fn sides(&self) -> Vec<Side> {
        match self.topology {
            Topology::Cylinder { .. } => vec![Side::Lower, Side::Upper],
            _ => vec![Side::Lower],
        }
    }

    /// `w`, `w'`, `w''` at `t`.
    pub fn warp_jet(&self, t: f64) -> Jet {
        self.warp.jet(t, 0.0, Var::T)
    }

    /// Warp seen from a boundary side, as a function of the distance `s`
    /// along the normal: `w(s)` from below, `w(L - s)` from above.
    pub fn side_warp(&self, side: Side, s: f64) -> Jet {
        match side {
            Side::Lower => self.warp_jet(s),
            Side::Upper => {
                let j = self.warp_jet(self.length() - s);
                Jet {
                    v: j.v,
                    d1: -j.d1,
                    d2: j.d2,
                }
            }
        }
    }

    /// `θ(s) = (w(s)/w(0))^{n-1}` and `θ'(s)` seen from `side`.
    pub fn jacobian(&self, side: Side, s: f64) -> (f64, f64) {
        let w0 = self.side_warp(side, 0.0).v;
        let j = self.side_warp(side, s);
        let k = (self.n - 1) as i32;
        let ratio = j.v / w0;
        let theta = ratio.powi(k);
        let dtheta = k as f64 * ratio.powi(k - 1) * j.d1 / w0;
        (theta, dtheta)
    }

    /// Inner-normal mean curvature of a boundary component.
    pub fn mean_curvature(&self, side: Side) -> f64 {
        let j = self.side_warp(side, 0.0);
        -j.d1 / j.v
    }

    /// Ricci curvature in the normal direction and in a fiber direction.
    pub fn ricci(&self, t: f64) -> (f64, f64) {
        let j = self.warp_jet(t);
        let m = (self.n - 2) as f64;
        let radial = -((self.n - 1) as f64) * j.d2 / j.v;
        let tangential = -j.d2 / j.v + (m * self.fiber.sectional_curvature - m * j.d1 * j.d1) / (j.v * j.v);
        (radial, tangential)
    }

    /// Volume of the level set at distance `s` from `side`.
    pub fn level_area(&self, side: Side, s: f64) -> f64 {
        self.side_warp(side, s).v.powi((self.n - 1) as i32) * self.fiber.volume
    }

    /// Normal time until the ray from `side` meets the other end.
    pub fn ray_length(&self) -> f64 {
        self.length()
    }
}
