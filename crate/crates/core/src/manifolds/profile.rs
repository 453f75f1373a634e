use serde::Serialize;

use super::{BoundaryPoint, ChartSurface2D, Manifold, Side, Topology, WarpedTube};
use crate::error::{Error, Result};
use crate::kernels::Extended;
use crate::numerics::{find_root, solve_ivp, solve_ivp_until, Tolerance};

/// Jacobian `θ(t, x)` of the normal exponential map along one inward ray.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayProfile {
    pub base: BoundaryPoint,
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    /// `∂θ/∂t` from the same computation as `theta`.
    pub dtheta: Vec<f64>,
    /// First conjugate value `τ₁`.
    pub tau1: Extended,
    /// Chart position `γ_x(t)` at each sample (chart surfaces only).
    pub geodesic_points: Vec<(f64, f64)>,
    /// Time at which the ray reaches the boundary again, if it does.
    pub exit_time: Option<f64>,
}

fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1;
    let dv = ((6.0 * s2 - 6.0 * s) * y0 + (-6.0 * s2 + 6.0 * s) * y1) / h
        + (3.0 * s2 - 4.0 * s + 1.0) * d0
        + (3.0 * s2 - 2.0 * s) * d1;
    (v, dv)
}

impl RayProfile {
    /// Last sampled time.
    pub fn end(&self) -> f64 {
        *self.times.last().expect("profiles are never empty")
    }

    fn segment(&self, t: f64) -> usize {
        match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => i.min(self.times.len() - 2),
            Err(i) => i.clamp(1, self.times.len() - 1) - 1,
        }
    }

    /// `(θ, θ')` at `t` by cubic Hermite interpolation of the samples.
    pub fn theta_at(&self, t: f64) -> (f64, f64) {
        if self.times.len() == 1 {
            return (self.theta[0], self.dtheta[0]);
        }
        let i = self.segment(t);
        hermite(
            self.times[i],
            self.times[i + 1],
            self.theta[i],
            self.theta[i + 1],
            self.dtheta[i],
            self.dtheta[i + 1],
            t,
        )
    }

    /// `γ_x(t)` by linear interpolation (chart rays only).
    pub fn point_at(&self, t: f64) -> Option<(f64, f64)> {
        if self.geodesic_points.is_empty() {
            return None;
        }
        let i = self.segment(t);
        let s = ((t - self.times[i]) / (self.times[i + 1] - self.times[i])).clamp(0.0, 1.0);
        let (a, b) = (self.geodesic_points[i], self.geodesic_points[i + 1]);
        Some((a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1)))
    }
}

fn sample_times(end: f64, step: f64) -> Vec<f64> {
    let steps = (end / step - 1e-9).ceil().max(1.0) as usize;
    (0..=steps)
        .map(|k| if k == steps { end } else { step * k as f64 })
        .collect()
}

fn warped_profile(tube: &WarpedTube, side: Side, x: f64, t_max: f64, step: f64) -> RayProfile {
    let len = tube.length();
    let end = t_max.min(len);
    let times = sample_times(end, step);
    let (theta, dtheta) = times.iter().map(|t| tube.jacobian(side, *t)).unzip();
    let (tau1, exit_time) = match tube.topology {
        Topology::Cap { length } => (Extended::Finite(length), None),
        Topology::Cylinder { length } => (Extended::Infinite, Some(length)),
        Topology::HalfInfinite { .. } => (Extended::Infinite, None),
    };
    RayProfile {
        base: BoundaryPoint { side, x },
        times,
        theta,
        dtheta,
        tau1,
        geodesic_points: Vec::new(),
        exit_time,
    }
}

// State: (t, x, t', x', y, y').
fn geodesic_jacobi_field(surface: &ChartSurface2D) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    move |_, s: &[f64], ds: &mut [f64]| {
        let m = surface.metric_jet(s[0], s[1]);
        let (vt, vx) = (s[2], s[3]);
        ds[0] = vt;
        ds[1] = vx;
        ds[2] = 0.5 * m.g_t * vx * vx;
        ds[3] = -(m.g_t / m.g) * vt * vx - m.g_x / (2.0 * m.g) * vx * vx;
        ds[4] = s[5];
        ds[5] = -m.gauss_curvature() * s[4];
    }
}

fn gap(surface: &ChartSurface2D, s: &[f64]) -> f64 {
    let lo = surface.lower.eval(0.0, s[1]);
    let hi = surface.upper.eval(0.0, s[1]);
    (s[0] - lo).min(hi - s[0])
}

fn chart_profile(surface: &ChartSurface2D, side: Side, x: f64, t_max: f64, step: f64) -> Result<RayProfile> {
    let b = surface.graph(side, x);
    let (nt, nx) = surface.inward_normal(side, x);
    let h = surface.mean_curvature(side, x);
    let y0 = [b.beta, x, nt, nx, 1.0, -h];
    let field = geodesic_jacobi_field(surface);
    // Leaves the region once the gap to the nearer graph turns negative; the
    // launch point itself sits on the boundary.
    let (mut traj, left) = solve_ivp_until(&field, &y0, t_max, step, |t, s| t > 0.5 * step && gap(surface, s) < 0.0)?;
    let mut exit_time = None;
    if left {
        let t_out = traj.times.pop().expect("at least one step");
        traj.states.pop();
        let t_last = *traj.times.last().expect("start state");
        let inside = traj.states.last().expect("start state").clone();
        let dt_out = t_out - t_last;
        let reach = |dt: f64| -> f64 {
            if dt <= 0.0 {
                return gap(surface, &inside);
            }
            match solve_ivp(&field, &inside, dt, dt) {
                Ok(tr) => gap(surface, tr.states.last().expect("one step")),
                Err(_) => f64::NAN,
            }
        };
        let dt = find_root(reach, 0.0, dt_out, Tolerance::new(1e-14, 1e-14, 200)?).unwrap_or(0.0);
        if dt > 0.0 {
            let tr = solve_ivp(&field, &inside, dt, dt)?;
            traj.times.push(t_last + dt);
            traj.states.push(tr.states.last().expect("one step").clone());
        }
        exit_time = traj.times.last().copied();
    }
    let times = traj.times;
    let theta: Vec<f64> = traj.states.iter().map(|s| s[4]).collect();
    let dtheta: Vec<f64> = traj.states.iter().map(|s| s[5]).collect();
    let geodesic_points = traj.states.iter().map(|s| (s[0], s[1])).collect();
    let mut tau1 = Extended::Infinite;
    for i in 1..times.len() {
        if theta[i] == 0.0 {
            tau1 = Extended::Finite(times[i]);
            break;
        }
        if theta[i] < 0.0 {
            let (t0, t1) = (times[i - 1], times[i]);
            let interp = |t: f64| hermite(t0, t1, theta[i - 1], theta[i], dtheta[i - 1], dtheta[i], t).0;
            let root = find_root(interp, t0, t1, Tolerance::new(1e-14, 1e-15, 200)?)?;
            tau1 = Extended::Finite(root);
            break;
        }
    }
    Ok(RayProfile {
        base: BoundaryPoint { side, x },
        times,
        theta,
        dtheta,
        tau1,
        geodesic_points,
        exit_time,
    })
}

/// Samples `θ(t, x)` along the inward normal ray from `base` up to `t_max`
/// (or the far boundary) with the given step.
pub fn normal_ray_profile(m: &Manifold, base: BoundaryPoint, t_max: f64, step: f64) -> Result<RayProfile> {
    if !(t_max > 0.0) || !(step > 0.0) {
        return Err(Error::Domain(format!("need t_max > 0 and step > 0, got ({t_max}, {step})")));
    }
    if !m.sides().contains(&base.side) {
        return Err(Error::Domain(format!("{:?} is not a boundary component", base.side)));
    }
    match m {
        Manifold::Warped(tube) => Ok(warped_profile(tube, base.side, base.x, t_max, step)),
        Manifold::Chart(surface) => chart_profile(surface, base.side, base.x, t_max, step),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::manifolds::{build_chart_surface, build_warped_tube, Fiber};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn warped(w: &str, top: Topology) -> Manifold {
        Manifold::Warped(build_warped_tube(Fiber::round_sphere(1, 1.0).unwrap(), Expr::parse(w).unwrap(), top).unwrap())
    }

    fn chart(g: &str, lo: &str, hi: &str) -> Manifold {
        Manifold::Chart(
            build_chart_surface(Expr::parse(g).unwrap(), Expr::parse(lo).unwrap(), Expr::parse(hi).unwrap(), 2.0 * PI)
                .unwrap(),
        )
    }

    fn lower(x: f64) -> BoundaryPoint {
        BoundaryPoint { side: Side::Lower, x }
    }

    #[test]
    fn annulus_inner_ray() {
        let m = warped("1 + t", Topology::Cylinder { length: 2.0 });
        let p = normal_ray_profile(&m, lower(0.0), 2.0, 1e-3).unwrap();
        assert_eq!(p.theta[0], 1.0);
        for (t, th) in p.times.iter().zip(&p.theta) {
            assert_abs_diff_eq!(*th, 1.0 + t, epsilon = 1e-14);
        }
        assert_eq!(p.tau1, Extended::Infinite);
        assert_eq!(p.exit_time, Some(2.0));
    }

    #[test]
    fn hemisphere_ray() {
        let m = warped("cos(t)", Topology::Cap { length: FRAC_PI_2 });
        let p = normal_ray_profile(&m, lower(0.0), 10.0, 1e-3).unwrap();
        assert_eq!(p.end(), FRAC_PI_2);
        assert_abs_diff_eq!(p.theta_at(1.0).0, 1f64.cos(), epsilon = 1e-12);
        assert_eq!(p.tau1, Extended::Finite(FRAC_PI_2));
    }

    #[test]
    fn chart_matches_warped_for_x_independent_metric() {
        let c = chart("(1+t)^2", "0", "2");
        let w = warped("1 + t", Topology::Cylinder { length: 2.0 });
        for side in [Side::Lower, Side::Upper] {
            let base = BoundaryPoint { side, x: 0.7 };
            let pc = normal_ray_profile(&c, base, 5.0, 1e-3).unwrap();
            let pw = normal_ray_profile(&w, base, 5.0, 1e-3).unwrap();
            assert_abs_diff_eq!(pc.exit_time.unwrap(), 2.0, epsilon = 1e-9);
            for k in (0..pc.times.len()).step_by(50) {
                let t = pc.times[k];
                assert_abs_diff_eq!(pc.theta[k], pw.theta_at(t).0, epsilon = 1e-6);
                let (gt, gx) = pc.geodesic_points[k];
                assert_abs_diff_eq!(gx, 0.7, epsilon = 1e-12);
                let expect = if side == Side::Lower { t } else { 2.0 - t };
                assert_abs_diff_eq!(gt, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hemisphere_chart_conjugate_value() {
        // Round sphere in geodesic-parallel coordinates about the equator.
        let c = chart("cos(t)^2", "0", "1.5");
        let p = normal_ray_profile(&c, lower(0.3), 3.0, 1e-3);
        // The ray exits at t = 1.5 before the conjugate point at π/2.
        let p = p.unwrap();
        assert_eq!(p.tau1, Extended::Infinite);
        assert_abs_diff_eq!(p.exit_time.unwrap(), 1.5, epsilon = 1e-9);
        let q = normal_ray_profile(&chart("cos(t)^2", "-0.2", "1.569"), lower(0.0), 3.0, 1e-3).unwrap();
        assert_abs_diff_eq!(q.theta_at(1.0).0, (1.0f64 - 0.2).cos() / 0.2f64.cos(), epsilon = 1e-8);
    }

    #[test]
    fn conjugate_value_found_in_curved_chart() {
        // Flat cup t = 0.3 sin²x: normals from x = 0 focus at 1/0.6.
        let c = chart("1", "0.3*sin(x)^2", "3");
        let p = normal_ray_profile(&c, lower(0.0), 3.0, 1e-3).unwrap();
        match p.tau1 {
            Extended::Finite(t) => assert_abs_diff_eq!(t, 1.0 / 0.6, epsilon = 1e-9),
            Extended::Infinite => panic!("expected a conjugate value"),
        }
    }

    fn wavy() -> Manifold {
        chart("1", "0.2*sin(x)", "2")
    }

    #[test]
    fn wavy_ray_is_straight_euclidean_normal() {
        let m = wavy();
        let p = normal_ray_profile(&m, lower(0.0), 3.0, 1e-3).unwrap();
        // β = 0.2 sin x at x = 0: slope 0.2, curvature 0.
        let k = 0.0;
        let norm = (1.0f64 + 0.04).sqrt();
        for i in (0..p.times.len()).step_by(100) {
            let t = p.times[i];
            assert_abs_diff_eq!(p.theta[i], 1.0 - k * t, epsilon = 1e-9);
            let (gt, gx) = p.geodesic_points[i];
            assert_abs_diff_eq!(gt, t / norm, epsilon = 1e-9);
            assert_abs_diff_eq!(gx, -0.2 * t / norm, epsilon = 1e-9);
        }
    }

    #[test]
    fn wavy_ray_at_crest_focuses() {
        let m = wavy();
        let x0 = FRAC_PI_2;
        let p = normal_ray_profile(&m, lower(x0), 3.0, 1e-3).unwrap();
        // The crest bulges into the region (H = -0.2), so normals spread: θ = 1 + 0.2 t.
        for i in (0..p.times.len()).step_by(100) {
            let t = p.times[i];
            assert_abs_diff_eq!(p.theta[i], 1.0 + 0.2 * t, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(p.exit_time.unwrap(), 1.8, epsilon = 1e-9);
    }

    #[test]
    fn jacobi_residual_small() {
        let c = chart("(1 + 0.3*t + 0.1*sin(x))^2", "0.1*cos(x)", "2");
        let Manifold::Chart(s) = &c else { unreachable!() };
        let p = normal_ray_profile(&c, lower(1.3), 3.0, 1e-3).unwrap();
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        for i in 1..p.times.len() - 2 {
            if (p.times[i + 1] - p.times[i] - h).abs() > 1e-12 || (p.times[i] - p.times[i - 1] - h).abs() > 1e-12 {
                continue;
            }
            let y2 = (p.theta[i + 1] - 2.0 * p.theta[i] + p.theta[i - 1]) / (h * h);
            let (gt, gx) = p.geodesic_points[i];
            let k = s.metric_jet(gt, gx).gauss_curvature();
            worst = worst.max((y2 + k * p.theta[i]).abs());
        }
        assert!(worst <= 1e-4, "{worst}");
    }

    #[test]
    fn rejects_missing_side() {
        let m = warped("exp(-t)", Topology::HalfInfinite { t_max: 40.0 });
        assert!(normal_ray_profile(&m, BoundaryPoint { side: Side::Upper, x: 0.0 }, 1.0, 1e-3).is_err());
    }
}
