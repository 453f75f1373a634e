use super::Side;
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};

/// Samples per axis when validating a chart.
pub const CHART_SAMPLES: usize = 512;

/// `{β_low(x) <= t <= β_high(x)}` with metric `dt² + G(t,x) dx²`, periodic in
/// `x` with the given period.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSurface2D {
    pub metric: Expr,
    pub lower: Expr,
    pub upper: Expr,
    pub period: f64,
}

/// `G` with the derivatives needed for geodesics and curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub g: f64,
    pub g_t: f64,
    pub g_tt: f64,
    pub g_x: f64,
}

impl MetricJet {
    /// Gauss curvature `-f_tt/f` with `f = √G`.
    pub fn gauss_curvature(&self) -> f64 {
        let f = self.g.sqrt();
        let f_tt = self.g_tt / (2.0 * f) - self.g_t * self.g_t / (4.0 * f * f * f);
        -f_tt / f
    }
}

/// A boundary graph `β(x)` with derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphJet {
    pub beta: f64,
    pub d1: f64,
    pub d2: f64,
}

pub fn build_chart_surface(metric: Expr, lower: Expr, upper: Expr, period: f64) -> Result<ChartSurface2D> {
    let bad = |msg: String| Err(Error::InvalidManifold(msg));
    if !(period > 0.0) || !period.is_finite() {
        return bad(format!("period must be positive, got {period}"));
    }
    if metric.uses(Var::Rho) {
        return bad(format!("metric `{metric}` may only depend on t and x"));
    }
    for b in [&lower, &upper] {
        if b.uses(Var::T) || b.uses(Var::Rho) {
            return bad(format!("boundary graph `{b}` may only depend on x"));
        }
    }
    let surface = ChartSurface2D {
        metric,
        lower,
        upper,
        period,
    };
    for j in 0..CHART_SAMPLES {
        let x = period * j as f64 / CHART_SAMPLES as f64;
        let (lo, hi) = (surface.graph(Side::Lower, x), surface.graph(Side::Upper, x));
        for (name, b) in [("lower", &surface.lower), ("upper", &surface.upper)] {
            let shifted = b.eval(0.0, x + period);
            if (shifted - b.eval(0.0, x)).abs() > 1e-9 {
                return bad(format!("{name} boundary `{b}` is not {period}-periodic at x = {x}"));
            }
        }
        if !(lo.beta < hi.beta) {
            return bad(format!("boundary graphs cross at x = {x}: {} >= {}", lo.beta, hi.beta));
        }
        for i in 0..=CHART_SAMPLES {
            let t = lo.beta + (hi.beta - lo.beta) * i as f64 / CHART_SAMPLES as f64;
            let g = surface.metric.eval(t, x);
            if !(g > 0.0) || !g.is_finite() {
                return bad(format!("metric `{}` must be positive, G({t}, {x}) = {g}", surface.metric));
            }
            if (surface.metric.eval(t, x + period) - g).abs() > 1e-9 * g.max(1.0) {
                return bad(format!("metric `{}` is not {period}-periodic in x", surface.metric));
            }
        }
    }
    Ok(surface)
}

impl ChartSurface2D {
    pub fn metric_jet(&self, t: f64, x: f64) -> MetricJet {
        let jt = self.metric.jet(t, x, Var::T);
        let g_x = if self.metric.uses(Var::X) {
            self.metric.jet(t, x, Var::X).d1
        } else {
            0.0
        };
        MetricJet {
            g: jt.v,
            g_t: jt.d1,
            g_tt: jt.d2,
            g_x,
        }
    }

    pub fn g(&self, t: f64, x: f64) -> f64 {
        self.metric.eval(t, x)
    }

    pub fn graph(&self, side: Side, x: f64) -> GraphJet {
        let e = match side {
            Side::Lower => &self.lower,
            Side::Upper => &self.upper,
        };
        let j = e.jet(0.0, x, Var::X);
        GraphJet {
            beta: j.v,
            d1: j.d1,
            d2: j.d2,
        }
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        self.lower.eval(0.0, x) <= t && t <= self.upper.eval(0.0, x)
    }

    /// Lowest and highest `t` reached by the region (sampled).
    pub fn t_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..CHART_SAMPLES {
            let x = self.period * j as f64 / CHART_SAMPLES as f64;
            lo = lo.min(self.lower.eval(0.0, x));
            hi = hi.max(self.upper.eval(0.0, x));
        }
        (lo, hi)
    }

    /// Inward unit normal `(n_t, n_x)` at the boundary point over `x`.
    pub fn inward_normal(&self, side: Side, x: f64) -> (f64, f64) {
        let b = self.graph(side, x);
        let g = self.g(b.beta, x);
        let nu = (1.0 + b.d1 * b.d1 / g).sqrt();
        let (nt, nx) = (1.0 / nu, -b.d1 / (g * nu));
        match side {
            Side::Lower => (nt, nx),
            Side::Upper => (-nt, -nx),
        }
    }

    /// Geodesic curvature of the boundary curve with respect to the inward
    /// normal; the mean curvature of a surface boundary.
    pub fn mean_curvature(&self, side: Side, x: f64) -> f64 {
        let b = self.graph(side, x);
        let m = self.metric_jet(b.beta, x);
        // ∇_T T for T = (β', 1); Γ^t_xx = -G_t/2, Γ^x_tx = G_t/(2G), Γ^x_xx = G_x/(2G).
        let a_t = b.d2 - 0.5 * m.g_t;
        let a_x = m.g_x / (2.0 * m.g) + m.g_t * b.d1 / m.g;
        let nu = (1.0 + b.d1 * b.d1 / m.g).sqrt();
        let along_up = (a_t - b.d1 * a_x) / nu;
        let speed2 = b.d1 * b.d1 + m.g;
        match side {
            Side::Lower => along_up / speed2,
            Side::Upper => -along_up / speed2,
        }
    }

    /// Arclength density `√(β'² + G)` of a boundary graph.
    pub fn arclength_density(&self, side: Side, x: f64) -> f64 {
        let b = self.graph(side, x);
        (b.d1 * b.d1 + self.g(b.beta, x)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn chart(g: &str, lo: &str, hi: &str) -> Result<ChartSurface2D> {
        build_chart_surface(Expr::parse(g).unwrap(), Expr::parse(lo).unwrap(), Expr::parse(hi).unwrap(), 2.0 * PI)
    }

    #[test]
    fn valid_charts() {
        chart("1", "0", "2").unwrap();
        chart("(1+t)^2", "0", "2").unwrap();
        chart("1", "0.2*sin(x)", "2").unwrap();
    }

    #[test]
    fn invalid_charts() {
        assert!(chart("t - 1", "0", "2").is_err());
        assert!(chart("1", "sin(x)", "0.5").is_err());
        assert!(chart("1", "x", "2 + x").is_err());
        assert!(chart("1", "0", "2 + t").is_err());
        assert!(chart("1 + 0.1*sin(x/2)", "0", "2").is_err());
    }

    #[test]
    fn annulus_boundary_curvature() {
        let c = chart("(1+t)^2", "0", "2").unwrap();
        assert_abs_diff_eq!(c.mean_curvature(Side::Lower, 0.4), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.mean_curvature(Side::Upper, 0.4), 1.0 / 3.0, epsilon = 1e-14);
        let m = c.metric_jet(0.7, 0.0);
        assert_abs_diff_eq!(m.gauss_curvature(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn euclidean_cup_curvature() {
        // t = c x² near x = 0 has curvature 2c, convex towards the region.
        let c = build_chart_surface(
            Expr::parse("1").unwrap(),
            Expr::parse("0.3*sin(x)^2").unwrap(),
            Expr::parse("2").unwrap(),
            PI,
        )
        .unwrap();
        assert_abs_diff_eq!(c.mean_curvature(Side::Lower, 0.0), 0.6, epsilon = 1e-14);
    }

    #[test]
    fn round_sphere_gauss_curvature() {
        let c = chart("cos(t)^2", "-1", "1").unwrap();
        assert_abs_diff_eq!(c.metric_jet(0.3, 1.0).gauss_curvature(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn inward_normal_is_unit_and_orthogonal() {
        let c = chart("1 + 0.5*t*t", "0.2*sin(x)", "2").unwrap();
        for x in [0.0, 1.0, 2.5] {
            let (nt, nx) = c.inward_normal(Side::Lower, x);
            let b = c.graph(Side::Lower, x);
            let g = c.g(b.beta, x);
            assert_abs_diff_eq!(nt * nt + g * nx * nx, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(nt * b.d1 + g * nx, 0.0, epsilon = 1e-14);
            assert!(nt > 0.0);
        }
    }
}
