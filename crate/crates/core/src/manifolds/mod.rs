//! Warped tubes and chart surfaces: construction, curvature, boundary data
//! and normal-ray Jacobians.

mod chart;
mod fiber;
mod profile;
mod warped;

use serde::{Deserialize, Serialize};

pub use chart::{build_chart_surface, ChartSurface2D, GraphJet, MetricJet, CHART_SAMPLES};
pub use fiber::{unit_sphere_volume, Fiber, FiberKind};
pub use profile::{normal_ray_profile, RayProfile};
pub use warped::{build_warped_tube, Topology, WarpedTube};

use crate::error::{Error, Result};
use crate::kernels::ComparisonParams;
use crate::numerics::{integrate, Tolerance};

/// Samples along `t` for warped-tube curvature infima.
pub const WARPED_CURVATURE_SAMPLES: usize = 4096;

/// Boundary component: `t = 0` side or the far side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

/// A point of `∂M`: a side and a fiber (or chart `x`) coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub side: Side,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Manifold {
    Warped(WarpedTube),
    Chart(ChartSurface2D),
}

impl Manifold {
    pub fn n(&self) -> usize {
        match self {
            Manifold::Warped(w) => w.n,
            Manifold::Chart(_) => 2,
        }
    }

    pub fn sides(&self) -> Vec<Side> {
        match self {
            Manifold::Warped(w) => w.sides(),
            Manifold::Chart(_) => vec![Side::Lower, Side::Upper],
        }
    }

    /// True for half-infinite tubes, whose integrals stop at `T_max`.
    pub fn is_truncated(&self) -> bool {
        matches!(self, Manifold::Warped(w) if w.is_truncated())
    }

    /// A normal time no ray can exceed inside the manifold.
    pub fn ray_horizon(&self) -> f64 {
        match self {
            Manifold::Warped(w) => w.length(),
            Manifold::Chart(c) => {
                let (lo, hi) = c.t_range();
                4.0 * (hi - lo)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentCurvature {
    pub side: Side,
    pub h_min: f64,
    pub h_max: f64,
    /// Fiber / chart coordinate of `h_min`.
    pub worst_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub ric_inf: f64,
    /// `(t, x)` of the Ricci infimum.
    pub ric_inf_at: (f64, f64),
    pub h_inf: f64,
    pub components: Vec<ComponentCurvature>,
    /// Interior samples per axis.
    pub samples: usize,
}

fn warped_report(tube: &WarpedTube) -> Result<CurvatureReport> {
    let len = tube.length();
    let closes = matches!(tube.topology, Topology::Cap { .. });
    let count = if closes { WARPED_CURVATURE_SAMPLES } else { WARPED_CURVATURE_SAMPLES + 1 };
    let mut ric_inf = f64::INFINITY;
    let mut at = 0.0;
    for i in 0..count {
        let t = len * i as f64 / WARPED_CURVATURE_SAMPLES as f64;
        let (radial, tangential) = tube.ricci(t);
        let r = if tube.n > 2 { radial.min(tangential) } else { radial };
        if !r.is_finite() {
            return Err(Error::InvalidManifold(format!("Ricci curvature not finite at t = {t}")));
        }
        if r < ric_inf {
            ric_inf = r;
            at = t;
        }
    }
    let components: Vec<ComponentCurvature> = tube
        .sides()
        .into_iter()
        .map(|side| {
            let h = tube.mean_curvature(side);
            ComponentCurvature {
                side,
                h_min: h,
                h_max: h,
                worst_x: 0.0,
            }
        })
        .collect();
    let h_inf = components.iter().map(|c| c.h_min).fold(f64::INFINITY, f64::min);
    if !h_inf.is_finite() {
        return Err(Error::InvalidManifold("mean curvature not finite".into()));
    }
    Ok(CurvatureReport {
        ric_inf,
        ric_inf_at: (at, 0.0),
        h_inf,
        components,
        samples: count,
    })
}

fn chart_report(surface: &ChartSurface2D) -> Result<CurvatureReport> {
    let n = CHART_SAMPLES;
    let mut ric_inf = f64::INFINITY;
    let mut at = (0.0, 0.0);
    for j in 0..n {
        let x = surface.period * j as f64 / n as f64;
        let lo = surface.graph(Side::Lower, x).beta;
        let hi = surface.graph(Side::Upper, x).beta;
        for i in 0..=n {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            let k = surface.metric_jet(t, x).gauss_curvature();
            if !k.is_finite() {
                return Err(Error::InvalidManifold(format!("Gauss curvature not finite at ({t}, {x})")));
            }
            if k < ric_inf {
                ric_inf = k;
                at = (t, x);
            }
        }
    }
    let mut components = Vec::new();
    for side in [Side::Lower, Side::Upper] {
        let mut c = ComponentCurvature {
            side,
            h_min: f64::INFINITY,
            h_max: f64::NEG_INFINITY,
            worst_x: 0.0,
        };
        for j in 0..n {
            let x = surface.period * j as f64 / n as f64;
            let h = surface.mean_curvature(side, x);
            if !h.is_finite() {
                return Err(Error::InvalidManifold(format!("boundary curvature not finite at x = {x}")));
            }
            if h < c.h_min {
                c.h_min = h;
                c.worst_x = x;
            }
            c.h_max = c.h_max.max(h);
        }
        components.push(c);
    }
    let h_inf = components.iter().map(|c| c.h_min).fold(f64::INFINITY, f64::min);
    Ok(CurvatureReport {
        ric_inf,
        ric_inf_at: at,
        h_inf,
        components,
        samples: n,
    })
}

/// Sampled infima of Ricci curvature (per unit direction) and boundary mean
/// curvature.
pub fn curvature_report(m: &Manifold) -> Result<CurvatureReport> {
    match m {
        Manifold::Warped(t) => warped_report(t),
        Manifold::Chart(c) => chart_report(c),
    }
}

/// A manifold together with the bounds it was checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedManifold {
    pub manifold: Manifold,
    pub params: ComparisonParams,
    pub ric_inf: f64,
    pub h_inf: f64,
    /// `ric_inf - (n-1)κ`.
    pub ric_margin: f64,
    /// `h_inf - λ`.
    pub h_margin: f64,
    /// `min(ric_margin, h_margin)`.
    pub certification_margin: f64,
    pub tolerance: f64,
    /// False when built by [`assume_bounds`] and the bounds do not hold.
    pub certified: bool,
    pub report: CurvatureReport,
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Lower => "lower boundary",
        Side::Upper => "upper boundary",
    }
}

fn evaluate_bounds(m: Manifold, params: ComparisonParams, tol: f64) -> Result<CertifiedManifold> {
    if m.n() != params.n {
        return Err(Error::InvalidParams(format!(
            "manifold has dimension {}, parameters say {}",
            m.n(),
            params.n
        )));
    }
    let report = curvature_report(&m)?;
    let ric_margin = report.ric_inf - (params.n - 1) as f64 * params.kappa;
    let h_margin = report.h_inf - params.lambda;
    let certified = ric_margin >= -tol && h_margin >= -tol;
    Ok(CertifiedManifold {
        manifold: m,
        params,
        ric_inf: report.ric_inf,
        h_inf: report.h_inf,
        ric_margin,
        h_margin,
        certification_margin: ric_margin.min(h_margin),
        tolerance: tol,
        certified,
        report,
    })
}

/// Checks `Ric >= (n-1)κ` and `H >= λ` on samples, within `tol`.
pub fn certify_bounds(m: Manifold, params: ComparisonParams, tol: f64) -> Result<CertifiedManifold> {
    let cm = evaluate_bounds(m, params, tol)?;
    if cm.ric_margin < -tol {
        let (t, x) = cm.report.ric_inf_at;
        return Err(Error::Certification(format!(
            "Ricci bound violated at (t, x) = ({t}, {x}): Ric = {} < (n-1)κ = {}",
            cm.ric_inf,
            (params.n - 1) as f64 * params.kappa
        )));
    }
    if cm.h_margin < -tol {
        let worst = cm
            .report
            .components
            .iter()
            .min_by(|a, b| a.h_min.total_cmp(&b.h_min))
            .expect("at least one boundary component");
        return Err(Error::Certification(format!(
            "mean curvature violated at {} x = {}: H = {} < λ = {}",
            side_name(worst.side),
            worst.worst_x,
            worst.h_min,
            params.lambda
        )));
    }
    Ok(cm)
}

/// Records the curvature margins without enforcing them. The checks that run
/// on the result are then free to fail.
pub fn assume_bounds(m: Manifold, params: ComparisonParams, tol: f64) -> Result<CertifiedManifold> {
    evaluate_bounds(m, params, tol)
}

/// `vol_h ∂M`.
pub fn boundary_volume(m: &Manifold) -> Result<f64> {
    match m {
        Manifold::Warped(t) => Ok(t.sides().into_iter().map(|s| t.level_area(s, 0.0)).sum()),
        Manifold::Chart(c) => {
            let mut total = 0.0;
            for side in [Side::Lower, Side::Upper] {
                total += integrate(|x| c.arclength_density(side, x), 0.0, c.period, Tolerance::tight())?;
            }
            Ok(total)
        }
    }
}

/// Both sides of the Gauss formula for the boundary Ricci curvature in a unit
/// tangent direction `u` at a boundary point of a warped tube.
///
/// Left: `Ric_h(u)`. Right: `Ric_g(u) - K(ν, u) + tr(S)·S(u, u) - |S u|²`.
pub fn gauss_boundary_ricci_sides(m: &Manifold, at: BoundaryPoint) -> Result<(f64, f64)> {
    let Manifold::Warped(tube) = m else {
        return Err(Error::Unsupported("boundary Gauss formula is implemented for warped tubes".into()));
    };
    if !tube.sides().contains(&at.side) {
        return Err(Error::Domain(format!("{:?} is not a boundary component", at.side)));
    }
    let j = tube.side_warp(at.side, 0.0);
    let m2 = (tube.n - 2) as f64;
    let kf = tube.fiber.sectional_curvature;
    let lhs = m2 * kf / (j.v * j.v);
    // Shape operator A = a·Id with a = -w'/w; S(u,u) = a·u_x.
    let a = -j.d1 / j.v;
    let ric_g = -j.d2 / j.v + m2 * (kf - j.d1 * j.d1) / (j.v * j.v);
    let k_g = -j.d2 / j.v;
    let rhs = ric_g - k_g + (tube.n - 1) as f64 * a * a - a * a;
    Ok((lhs, rhs))
}

/// Ricci curvature of the induced boundary metric in a unit direction.
pub fn boundary_ricci(m: &Manifold, side: Side) -> Result<f64> {
    gauss_boundary_ricci_sides(m, BoundaryPoint { side, x: 0.0 }).map(|(lhs, _)| lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::kernels::s_boundary;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn warped(fiber: Fiber, w: &str, top: Topology) -> Manifold {
        Manifold::Warped(build_warped_tube(fiber, Expr::parse(w).unwrap(), top).unwrap())
    }

    fn circle() -> Fiber {
        Fiber::circle(2.0 * PI).unwrap()
    }

    fn annulus() -> Manifold {
        warped(circle(), "1 + t", Topology::Cylinder { length: 2.0 })
    }

    fn collar() -> Manifold {
        warped(circle(), "exp(-t)", Topology::HalfInfinite { t_max: 40.0 })
    }

    fn hemisphere() -> Manifold {
        warped(Fiber::round_sphere(1, 1.0).unwrap(), "cos(t)", Topology::Cap { length: FRAC_PI_2 })
    }

    fn chart(g: &str, lo: &str, hi: &str) -> Manifold {
        Manifold::Chart(
            build_chart_surface(Expr::parse(g).unwrap(), Expr::parse(lo).unwrap(), Expr::parse(hi).unwrap(), 2.0 * PI)
                .unwrap(),
        )
    }

    fn params(n: usize, k: f64, l: f64) -> ComparisonParams {
        ComparisonParams::new(n, k, l).unwrap()
    }

    #[test]
    fn curvature_reports() {
        let r = curvature_report(&annulus()).unwrap();
        assert_eq!(r.ric_inf, 0.0);
        assert_eq!(r.components[0].h_min, -1.0);
        assert_abs_diff_eq!(r.components[1].h_min, 1.0 / 3.0, epsilon = 1e-15);
        let r = curvature_report(&collar()).unwrap();
        assert_abs_diff_eq!(r.ric_inf, -1.0, epsilon = 1e-12);
        assert_eq!(r.h_inf, 1.0);
        let r = curvature_report(&hemisphere()).unwrap();
        assert_abs_diff_eq!(r.ric_inf, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.h_inf, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn chart_report_matches_warped_annulus() {
        let r = curvature_report(&chart("(1+t)^2", "0", "2")).unwrap();
        assert_abs_diff_eq!(r.ric_inf, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(r.h_inf, -1.0, epsilon = 1e-13);
        let r = curvature_report(&chart("1", "0.2*sin(x)", "2")).unwrap();
        assert_abs_diff_eq!(r.h_inf, -0.2, epsilon = 1e-5);
    }

    #[test]
    fn certification() {
        let cm = certify_bounds(annulus(), params(2, 0.0, -1.0), 1e-9).unwrap();
        assert_eq!((cm.ric_margin, cm.h_margin), (0.0, 0.0));
        assert!(cm.certified);
        match certify_bounds(annulus(), params(2, 0.0, 0.0), 1e-9) {
            Err(Error::Certification(msg)) => {
                assert!(msg.contains("mean curvature") && msg.contains("lower boundary") && msg.contains("H = -1"), "{msg}")
            }
            other => panic!("{other:?}"),
        }
        let cm = certify_bounds(collar(), params(2, -1.0, 1.0), 1e-9).unwrap();
        assert_abs_diff_eq!(cm.certification_margin, 0.0, epsilon = 1e-12);
        let bypass = assume_bounds(annulus(), params(2, 0.0, 0.0), 1e-9).unwrap();
        assert!(!bypass.certified);
        assert!(certify_bounds(annulus(), params(3, 0.0, -1.0), 1e-9).is_err());
    }

    #[test]
    fn boundary_volumes() {
        assert_abs_diff_eq!(boundary_volume(&annulus()).unwrap(), 8.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(boundary_volume(&collar()).unwrap(), 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(boundary_volume(&chart("1", "0", "2")).unwrap(), 4.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(boundary_volume(&chart("(1+t)^2", "0", "2")).unwrap(), 8.0 * PI, epsilon = 1e-11);
    }

    #[test]
    fn gauss_sides() {
        let m = warped(Fiber::round_sphere(2, 1.0).unwrap(), "1 + t", Topology::Cylinder { length: 1.0 });
        let (l, r) = gauss_boundary_ricci_sides(&m, BoundaryPoint { side: Side::Lower, x: 0.0 }).unwrap();
        assert_abs_diff_eq!(l, 1.0);
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
        let m = warped(Fiber::round_sphere(2, 1.0).unwrap(), "exp(-t)", Topology::HalfInfinite { t_max: 10.0 });
        let (l, r) = gauss_boundary_ricci_sides(&m, BoundaryPoint { side: Side::Lower, x: 0.0 }).unwrap();
        assert_abs_diff_eq!(l, 1.0);
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
        let (l, r) = gauss_boundary_ricci_sides(&annulus(), BoundaryPoint { side: Side::Upper, x: 0.0 }).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        assert!(gauss_boundary_ricci_sides(&chart("1", "0", "2"), BoundaryPoint { side: Side::Lower, x: 0.0 }).is_err());
    }

    #[test]
    fn model_boundary_ricci_bound() {
        // w = s_{κ,λ} over a unit round fiber: Ric_∂M = (n-2) >= (n-2)(κ + λ²) needs κ + λ² <= 1.
        for (k, l) in [(1.0, 0.0), (-1.0, 1.0), (0.0, 1.0), (-2.0, 1.5), (0.5, -0.5)] {
            let p = params(3, k, l);
            let c = f64::abs(k).sqrt();
            let expr = if k > 0.0 {
                format!("cos({c}*t) - ({l}/{c})*sin({c}*t)")
            } else if k == 0.0 {
                format!("1 - ({l})*t")
            } else {
                format!("cosh({c}*t) - ({l}/{c})*sinh({c}*t)")
            };
            let len = 0.2;
            let m = warped(Fiber::round_sphere(2, 1.0).unwrap(), &expr, Topology::Cylinder { length: len });
            let Manifold::Warped(tube) = &m else { unreachable!() };
            assert_abs_diff_eq!(tube.warp_jet(0.1).v, s_boundary(&p, 0.1).0, epsilon = 1e-14);
            let ric = boundary_ricci(&m, Side::Lower).unwrap();
            assert!(ric >= (p.n - 2) as f64 * (k + l * l) - 1e-9, "({k}, {l}): {ric}");
        }
    }

    proptest! {
        #[test]
        fn gauss_identity_random_tubes(d1 in -3.0f64..3.0, d2 in -3.0f64..3.0, r in 0.3f64..3.0) {
            let expr = format!("1 + ({d1})*t + ({d2})*t^2/2");
            let tube = build_warped_tube(
                Fiber::round_sphere(2, r).unwrap(),
                Expr::parse(&expr).unwrap(),
                Topology::Cylinder { length: 0.05 },
            );
            prop_assume!(tube.is_ok());
            let m = Manifold::Warped(tube.unwrap());
            let (l, rr) = gauss_boundary_ricci_sides(&m, BoundaryPoint { side: Side::Lower, x: 0.0 }).unwrap();
            prop_assert!((l - rr).abs() <= 1e-9);
        }
    }
}
