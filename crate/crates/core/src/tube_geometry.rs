//! Integrals over a manifold in boundary-normal coordinates: tube and band
//! volumes, extension preimages, segment excursions, Rayleigh quotients and
//! first Dirichlet eigenvalues.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance_field::{cut_time, foot_point, solve_eikonal, DistanceField, Grid2D, CUT_MATCH_CONSTANT};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::kernels::{phi_profile, ComparisonParams};
use crate::manifolds::{
    normal_ray_profile, BoundaryPoint, CertifiedManifold, ChartSurface2D, FiberKind, Manifold, RayProfile, Side,
    Topology, WarpedTube,
};
use crate::numerics::{
    grid_operator_from_couplings, integrate, min_eigen_grid, min_eigen_sturm_liouville, Tolerance,
};

/// Discretisation used for boundary-normal integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySettings {
    /// Boundary samples per component (chart surfaces, circle fibers).
    pub boundary_samples: usize,
    /// RK4 step for chart rays.
    pub ode_step: f64,
    /// Fast-marching grid.
    pub grid_nt: usize,
    pub grid_nx: usize,
    /// Cut-time matching constant `c` in `ρ(γ(t)) >= t - c·h`.
    pub cut_constant: f64,
    /// Cells for the radial Sturm–Liouville problem.
    pub eigen_gridpoints: usize,
    /// Coarse grid for the chart eigenvalue (a doubled grid is also solved).
    pub eigen_nt: usize,
    pub eigen_nx: usize,
}

impl Default for GeometrySettings {
    fn default() -> Self {
        Self {
            boundary_samples: 512,
            ode_step: 2e-3,
            grid_nt: 128,
            grid_nx: 384,
            cut_constant: CUT_MATCH_CONSTANT,
            eigen_gridpoints: 4000,
            eigen_nt: 64,
            eigen_nx: 128,
        }
    }
}

/// One inward normal ray with its share of `dvol_h` and its cut time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRay {
    pub point: BoundaryPoint,
    pub weight: f64,
    pub profile: RayProfile,
    pub tau: f64,
}

/// `A_{r,R}(∂M) = B_R(∂M) ∖ B_r(∂M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBand {
    pub inner: f64,
    pub outer: f64,
}

impl RadialBand {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(0.0 <= inner && inner < outer) {
            return Err(Error::InvalidParams(format!("band needs 0 <= r < R, got ({inner}, {outer})")));
        }
        Ok(Self { inner, outer })
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            inner: t * self.inner,
            outer: t * self.outer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    Coarea,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubeVolumeTable {
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    pub method: VolumeMethod,
}

impl TubeVolumeTable {
    pub fn to_csv(&self) -> String {
        let method = match self.method {
            VolumeMethod::Coarea => "coarea",
            VolumeMethod::Grid => "grid",
        };
        let mut out = String::from("r,volume,method\n");
        for (r, v) in self.radii.iter().zip(&self.volumes) {
            out.push_str(&format!("{r},{v},{method}\n"));
        }
        out
    }
}

/// A test function for Rayleigh quotients and Poincaré checks.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialFunction {
    /// `ψ(t, x)`, or `ψ = e∘ρ` when the expression uses `rho`.
    Expr(Expr),
    /// `ψ = φ_{n,κ,λ}∘ρ`.
    ModelProfile(ComparisonParams),
}

impl TrialFunction {
    fn is_radial(&self) -> bool {
        match self {
            TrialFunction::Expr(e) => e.is_radial(),
            TrialFunction::ModelProfile(_) => true,
        }
    }

    // (ψ, ψ') of the radial profile.
    fn radial(&self, rho: f64) -> Result<(f64, f64)> {
        match self {
            TrialFunction::Expr(e) => {
                let j = e.jet(rho, 0.0, Var::Rho);
                Ok((j.v, j.d1))
            }
            TrialFunction::ModelProfile(p) => phi_profile(p, rho),
        }
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Boundary-normal decomposition `M = ∪_x γ_x([0, τ(x)))` of a certified
/// manifold.
#[derive(Debug, Clone)]
pub struct TubeGeometry<'a> {
    pub cm: &'a CertifiedManifold,
    pub settings: GeometrySettings,
    pub rays: Vec<BoundaryRay>,
    /// Fast-marching field (chart surfaces only).
    pub field: Option<DistanceField>,
}

fn fiber_samples(tube: &WarpedTube, settings: &GeometrySettings) -> (Vec<f64>, f64) {
    match tube.fiber.kind {
        FiberKind::Circle { length } => {
            let n = settings.boundary_samples.max(1);
            ((0..n).map(|k| length * k as f64 / n as f64).collect(), length / n as f64)
        }
        _ => (vec![0.0], tube.fiber.volume),
    }
}

impl<'a> TubeGeometry<'a> {
    pub fn new(cm: &'a CertifiedManifold, settings: GeometrySettings) -> Result<Self> {
        match &cm.manifold {
            Manifold::Warped(tube) => Self::warped(cm, tube, settings),
            Manifold::Chart(surface) => Self::chart(cm, surface, settings),
        }
    }

    fn warped(cm: &'a CertifiedManifold, tube: &WarpedTube, settings: GeometrySettings) -> Result<Self> {
        let len = tube.length();
        let tau = match tube.topology {
            // The level sets t = const are equidistant from both ends.
            Topology::Cylinder { length } => 0.5 * length,
            Topology::Cap { length } => length,
            Topology::HalfInfinite { t_max } => t_max,
        };
        let (xs, dx) = fiber_samples(tube, &settings);
        let step = (len / 4096.0).min(settings.ode_step.max(len / 1e5));
        let mut rays = Vec::new();
        for side in tube.sides() {
            let w0 = tube.side_warp(side, 0.0).v.powi((tube.n - 1) as i32);
            for &x in &xs {
                let point = BoundaryPoint { side, x };
                let profile = normal_ray_profile(&cm.manifold, point, len, step)?;
                rays.push(BoundaryRay {
                    point,
                    weight: w0 * dx,
                    profile,
                    tau,
                });
            }
        }
        Ok(Self {
            cm,
            settings,
            rays,
            field: None,
        })
    }

    fn chart(cm: &'a CertifiedManifold, surface: &ChartSurface2D, settings: GeometrySettings) -> Result<Self> {
        let grid = Grid2D::new(surface, settings.grid_nt, settings.grid_nx)?;
        let field = solve_eikonal(surface, &grid)?;
        let n = settings.boundary_samples.max(1);
        let dx = surface.period / n as f64;
        let horizon = cm.manifold.ray_horizon();
        let bases: Vec<BoundaryPoint> = [Side::Lower, Side::Upper]
            .iter()
            .flat_map(|&side| (0..n).map(move |k| BoundaryPoint { side, x: dx * k as f64 }))
            .collect();
        let rays = bases
            .par_iter()
            .map(|&point| {
                let profile = normal_ray_profile(&cm.manifold, point, horizon, settings.ode_step)?;
                let tau = cut_time(&field, surface, &profile, settings.cut_constant)?;
                Ok(BoundaryRay {
                    point,
                    weight: surface.arclength_density(point.side, point.x) * dx,
                    profile,
                    tau,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cm,
            settings,
            rays,
            field: Some(field),
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.cm.manifold
    }

    pub fn params(&self) -> &ComparisonParams {
        &self.cm.params
    }

    /// `(θ, θ')` at normal time `s` on ray `k`: closed form on warped tubes,
    /// interpolated on charts.
    pub fn theta(&self, k: usize, s: f64) -> (f64, f64) {
        let ray = &self.rays[k];
        match self.manifold() {
            Manifold::Warped(tube) => tube.jacobian(ray.point.side, s),
            Manifold::Chart(_) => ray.profile.theta_at(s),
        }
    }

    /// Chart coordinates `(t, x)` of `γ_x(s)` on ray `k`.
    pub fn ray_point(&self, k: usize, s: f64) -> (f64, f64) {
        let ray = &self.rays[k];
        match self.manifold() {
            Manifold::Warped(tube) => match ray.point.side {
                Side::Lower => (s, ray.point.x),
                Side::Upper => (tube.length() - s, ray.point.x),
            },
            Manifold::Chart(_) => ray.profile.point_at(s).expect("chart rays carry points"),
        }
    }

    /// `∫_a^b g(s, γ_x(s)) θ(s, x) ds` along ray `k`.
    pub fn ray_integral(&self, k: usize, a: f64, b: f64, g: &dyn Fn(f64, (f64, f64)) -> f64) -> Result<f64> {
        if !(b > a) {
            return Ok(0.0);
        }
        match self.manifold() {
            Manifold::Warped(_) => integrate(|s| g(s, self.ray_point(k, s)) * self.theta(k, s).0, a, b, Tolerance::tight()),
            Manifold::Chart(_) => {
                let times = &self.rays[k].profile.times;
                let mut total = 0.0;
                let start = times.partition_point(|t| *t <= a).saturating_sub(1);
                for i in start..times.len().saturating_sub(1) {
                    let (lo, hi) = (times[i].max(a), times[i + 1].min(b));
                    if lo >= b {
                        break;
                    }
                    if hi <= lo {
                        continue;
                    }
                    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                    for (node, w) in GAUSS5 {
                        let s = mid + half * node;
                        total += w * half * g(s, self.ray_point(k, s)) * self.theta(k, s).0;
                    }
                }
                Ok(total)
            }
        }
    }

    /// `Σ_x weight(x) ∫_{a(x)}^{b(x)} g θ ds`, with limits clipped to
    /// `[0, τ(x)]`.
    pub fn coarea_integral(
        &self,
        limits: &(dyn Fn(&BoundaryRay) -> (f64, f64) + Sync),
        g: &(dyn Fn(f64, (f64, f64)) -> f64 + Sync),
    ) -> Result<f64> {
        let parts = (0..self.rays.len())
            .into_par_iter()
            .map(|k| {
                let ray = &self.rays[k];
                let (a, b) = limits(ray);
                let (a, b) = (a.max(0.0), b.min(ray.tau));
                Ok(ray.weight * self.ray_integral(k, a, b, g)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(parts.iter().sum())
    }

    /// `vol_g B_r(∂M)`.
    pub fn tube_volume(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("tube radius must be >= 0, got {r}")));
        }
        self.coarea_integral(&|_| (0.0, r), &|_, _| 1.0)
    }

    pub fn tube_volume_table(&self, radii: &[f64]) -> Result<TubeVolumeTable> {
        let volumes = radii.iter().map(|r| self.tube_volume(*r)).collect::<Result<Vec<_>>>()?;
        Ok(TubeVolumeTable {
            radii: radii.to_vec(),
            volumes,
            method: VolumeMethod::Coarea,
        })
    }

    /// `vol_g A_{r,R}(∂M)`.
    pub fn annulus_volume(&self, band: RadialBand) -> Result<f64> {
        Ok(self.tube_volume(band.outer)? - self.tube_volume(band.inner)?)
    }

    /// `vol_g M` (up to `T_max` on half-infinite tubes).
    pub fn total_volume(&self) -> Result<f64> {
        self.coarea_integral(&|ray| (0.0, ray.tau), &|_, _| 1.0)
    }

    /// `(sup_x τ(x), truncated)`.
    pub fn inscribed_radius(&self) -> (f64, bool) {
        let sup = self.rays.iter().map(|r| r.tau).fold(0.0, f64::max);
        (sup, self.manifold().is_truncated())
    }

    /// `vol_g Φ_t^{-1}(A_{r,R})`: the part of ray `x` with `s/t ∈ (r, min(R, τ(x)))`.
    pub fn extension_preimage_volume(&self, t: f64, band: RadialBand) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("extension parameter must lie in (0, 1), got {t}")));
        }
        let (d, _) = self.inscribed_radius();
        if band.inner >= d {
            log::warn!("band ({}, {}) lies beyond the inscribed radius {d}; preimage is empty", band.inner, band.outer);
            return Ok(0.0);
        }
        self.coarea_integral(&|ray| (t * band.inner, t * band.outer.min(ray.tau)), &|_, _| 1.0)
    }

    /// Foot points of the chart point `(t, x)` with their distance `ρ`.
    /// Off the cut locus there is one; near it, every distinct foot point
    /// found from the neighbouring grid nodes is returned.
    pub fn foot_points(&self, t: f64, x: f64) -> Result<(f64, Vec<BoundaryPoint>)> {
        match self.manifold() {
            Manifold::Warped(tube) => {
                let len = tube.length();
                let mut feet = Vec::new();
                let lower = t;
                let upper = if tube.sides().contains(&Side::Upper) { len - t } else { f64::INFINITY };
                let rho = lower.min(upper);
                if lower <= rho + 1e-12 {
                    feet.push(BoundaryPoint { side: Side::Lower, x });
                }
                if upper <= rho + 1e-12 {
                    feet.push(BoundaryPoint { side: Side::Upper, x });
                }
                Ok((rho, feet))
            }
            Manifold::Chart(surface) => {
                let field = self.field.as_ref().expect("chart geometry has a field");
                let rho = field.rho_at(t, x);
                let first = foot_point(field, surface, t, x)?;
                let mut feet = vec![first.point];
                if first.near_cut {
                    let (ht, hx) = (field.grid.ht, field.grid.hx);
                    for (dt, dx) in [(-ht, 0.0), (ht, 0.0), (0.0, -hx), (0.0, hx)] {
                        let (pt, px) = (t + dt, x + dx);
                        if !surface.contains(pt, px) {
                            continue;
                        }
                        if let Ok(fp) = foot_point(field, surface, pt, px) {
                            let seen = feet.iter().any(|q| {
                                q.side == fp.point.side
                                    && periodic_gap(q.x, fp.point.x, surface.period) <= 2.0 * hx
                            });
                            if !seen {
                                feet.push(fp.point);
                            }
                        }
                    }
                }
                Ok((rho, feet))
            }
        }
    }

    /// `E_f(p) = inf over foot points x of ∫_0^{ρ(p)} f(γ_x(s)) ds`.
    pub fn segment_excursion(&self, f: &(dyn Fn(f64, f64) -> f64 + Sync), t: f64, x: f64) -> Result<f64> {
        let (rho, feet) = self.foot_points(t, x)?;
        let mut best = f64::INFINITY;
        for foot in feet {
            let value = match self.manifold() {
                Manifold::Warped(tube) => {
                    let len = tube.length();
                    let at = |s: f64| match foot.side {
                        Side::Lower => f(s, foot.x),
                        Side::Upper => f(len - s, foot.x),
                    };
                    integrate(at, 0.0, rho, Tolerance::new(1e-10, 1e-12, 2000)?)?
                }
                Manifold::Chart(_) => {
                    let horizon = self.manifold().ray_horizon();
                    let ray = normal_ray_profile(self.manifold(), foot, horizon, self.settings.ode_step)?;
                    let end = rho.min(ray.end());
                    integrate(
                        |s| {
                            let (pt, px) = ray.point_at(s).expect("chart ray");
                            f(pt, px)
                        },
                        0.0,
                        end,
                        Tolerance::new(1e-10, 1e-12, 2000)?,
                    )?
                }
            };
            best = best.min(value);
        }
        Ok(best)
    }

    /// `∫_M E_f dvol_g` and `∫_M f dvol_g` over the cut decomposition, where
    /// `E_f(γ_x(s)) = ∫_0^s f(γ_x(u)) du`. `f` takes the normal time and the
    /// chart point.
    pub fn excursion_integrals(&self, f: &(dyn Fn(f64, (f64, f64)) -> f64 + Sync)) -> Result<(f64, f64)> {
        let parts = (0..self.rays.len())
            .into_par_iter()
            .map(|k| {
                let ray = &self.rays[k];
                let inner = |s: f64| -> Result<f64> {
                    integrate(
                        |u| f(u, self.ray_point(k, u)),
                        0.0,
                        s,
                        Tolerance::new(1e-10, 1e-13, 2000)?,
                    )
                };
                let excursion = integrate(
                    |s| inner(s).unwrap_or(f64::NAN) * self.theta(k, s).0,
                    0.0,
                    ray.tau,
                    Tolerance::new(1e-9, 1e-12, 2000)?,
                )?;
                let plain = self.ray_integral(k, 0.0, ray.tau, f)?;
                Ok((ray.weight * excursion, ray.weight * plain))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        Ok(parts.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1)))
    }

    /// `(∫ |ψ|^q dvol, ∫ ‖∇ψ‖^q dvol)`.
    pub fn trial_integrals(&self, psi: &TrialFunction, q: f64) -> Result<(f64, f64)> {
        if psi.is_radial() {
            let value = self.coarea_integral(&|ray| (0.0, ray.tau), &|s, _| psi.radial(s).map_or(f64::NAN, |v| v.0.abs().powf(q)))?;
            let grad = self.coarea_integral(&|ray| (0.0, ray.tau), &|s, _| psi.radial(s).map_or(f64::NAN, |v| v.1.abs().powf(q)))?;
            return Ok((value, grad));
        }
        let TrialFunction::Expr(e) = psi else { unreachable!("model profiles are radial") };
        match self.manifold() {
            Manifold::Warped(tube) => warped_trial_integrals(tube, e, q),
            Manifold::Chart(surface) => chart_trial_integrals(surface, e, q, self.settings.boundary_samples),
        }
    }

    /// `R_q(ψ) = ∫‖∇ψ‖^q / ∫|ψ|^q`.
    pub fn rayleigh_quotient(&self, psi: &TrialFunction, q: f64) -> Result<f64> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::Domain(format!("p must lie in (1, ∞), got {q}")));
        }
        let (value, grad) = self.trial_integrals(psi, q)?;
        if !(value > 0.0) {
            return Err(Error::Domain("Rayleigh quotient of a function with zero norm".into()));
        }
        Ok(grad / value)
    }

    /// Largest `|ψ|` over boundary samples.
    pub fn boundary_trace(&self, psi: &TrialFunction) -> Result<f64> {
        if psi.is_radial() {
            return Ok(psi.radial(0.0)?.0.abs());
        }
        let TrialFunction::Expr(e) = psi else { unreachable!() };
        Ok(self
            .rays
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let (t, x) = self.ray_point(k, 0.0);
                e.eval(t, x).abs()
            })
            .fold(0.0, f64::max))
    }
}

fn periodic_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

fn warped_trial_integrals(tube: &WarpedTube, e: &Expr, q: f64) -> Result<(f64, f64)> {
    let k = (tube.n - 1) as i32;
    let len = tube.length();
    let tol = Tolerance::new(1e-10, 1e-13, 4000)?;
    if !e.uses(Var::X) {
        let value = integrate(|t| e.eval(t, 0.0).abs().powf(q) * tube.warp_jet(t).v.powi(k), 0.0, len, tol)?;
        let grad = integrate(|t| e.gradient(t, 0.0).1.abs().powf(q) * tube.warp_jet(t).v.powi(k), 0.0, len, tol)?;
        return Ok((value, grad));
    }
    let FiberKind::Circle { length } = tube.fiber.kind else {
        return Err(Error::Unsupported("x-dependent trial functions need a circle fiber".into()));
    };
    const FIBER: usize = 256;
    let dx = length / FIBER as f64;
    let mut value = 0.0;
    let mut grad = 0.0;
    for j in 0..FIBER {
        let x = dx * j as f64;
        value += dx * integrate(|t| e.eval(t, x).abs().powf(q) * tube.warp_jet(t).v, 0.0, len, tol)?;
        grad += dx
            * integrate(
                |t| {
                    let w = tube.warp_jet(t).v;
                    let (_, dt, dxv) = e.gradient(t, x);
                    (dt * dt + dxv * dxv / (w * w)).sqrt().powf(q) * w
                },
                0.0,
                len,
                tol,
            )?;
    }
    Ok((value, grad))
}

fn chart_trial_integrals(surface: &ChartSurface2D, e: &Expr, q: f64, samples: usize) -> Result<(f64, f64)> {
    let tol = Tolerance::new(1e-10, 1e-13, 4000)?;
    let n = samples.max(16);
    let dx = surface.period / n as f64;
    let mut value = 0.0;
    let mut grad = 0.0;
    for j in 0..n {
        let x = dx * j as f64;
        let (lo, hi) = (surface.graph(Side::Lower, x).beta, surface.graph(Side::Upper, x).beta);
        value += dx * integrate(|t| e.eval(t, x).abs().powf(q) * surface.g(t, x).sqrt(), lo, hi, tol)?;
        grad += dx
            * integrate(
                |t| {
                    let g = surface.g(t, x);
                    let (_, dt, dxv) = e.gradient(t, x);
                    (dt * dt + dxv * dxv / g).sqrt().powf(q) * g.sqrt()
                },
                lo,
                hi,
                tol,
            )?;
    }
    Ok((value, grad))
}

/// First Dirichlet eigenvalue `μ_{1,2}`.
///
/// Warped tubes reduce to the radial Sturm–Liouville problem with weight
/// `w^{n-1}`; a half-infinite tube is cut at `T_max` with a Dirichlet end
/// only when `allow_truncated` is set. Chart surfaces use the five-point
/// Laplace–Beltrami stencil on two grids and Richardson extrapolation.
pub fn dirichlet_eigen(m: &Manifold, settings: &GeometrySettings, allow_truncated: bool) -> Result<f64> {
    match m {
        Manifold::Warped(tube) => {
            if tube.is_truncated() && !allow_truncated {
                return Err(Error::Unsupported(
                    "the Dirichlet spectrum of a half-infinite tube needs an explicit truncation".into(),
                ));
            }
            let k = (tube.n - 1) as i32;
            let sl = min_eigen_sturm_liouville(|t| tube.warp_jet(t).v.max(0.0).powi(k), 0.0, tube.length(), settings.eigen_gridpoints)?;
            Ok(sl.mu)
        }
        Manifold::Chart(surface) => {
            let coarse = chart_eigen(surface, settings.eigen_nt, settings.eigen_nx)?;
            let fine = chart_eigen(surface, 2 * settings.eigen_nt, 2 * settings.eigen_nx)?;
            Ok((4.0 * fine - coarse) / 3.0)
        }
    }
}

/// Distance from a node to where its edge towards an outside neighbour
/// crosses the boundary.
fn edge_crossing(surface: &ChartSurface2D, t: f64, x: f64, dt: f64, dx: f64) -> f64 {
    let inside = |s: f64| surface.contains(t + s * dt, x + s * dx);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).max(1e-3)
}

fn chart_eigen(surface: &ChartSurface2D, nt: usize, nx: usize) -> Result<f64> {
    let grid = Grid2D::new(surface, nt, nx)?;
    let (ht, hx) = (grid.ht, grid.hx);
    let mut index = vec![usize::MAX; grid.len()];
    let mut unknowns = Vec::new();
    for k in 0..grid.len() {
        if grid.inside_mask[k] {
            index[k] = unknowns.len();
            unknowns.push(k);
        }
    }
    let mut diag = vec![0.0; unknowns.len()];
    let mut mass = vec![0.0; unknowns.len()];
    let mut couplings = Vec::new();
    for (u, &k) in unknowns.iter().enumerate() {
        let (i, j) = (k / nx, k % nx);
        let (t, x) = (grid.t_samples[i], grid.x_samples[j]);
        mass[u] = surface.g(t, x).sqrt() * ht * hx;
        // (di, dj, step in t, step in x)
        for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (st, sx) = (di as f64 * ht, dj as f64 * hx);
            let (mt, mx) = (t + 0.5 * st, x + 0.5 * sx);
            let sg = surface.g(mt, mx).sqrt();
            // ∫ (u_t² + u_x²/G) √G: t-edges weigh √G·hx/ht, x-edges ht/(√G·hx).
            let edge = if di != 0 { sg * hx / ht } else { ht / (sg * hx) };
            let a = i as i64 + di;
            let neighbour = (0..nt as i64).contains(&a).then(|| grid.index(a as usize, (j as i64 + dj).rem_euclid(nx as i64) as usize));
            match neighbour.filter(|m| grid.inside_mask[*m]) {
                Some(m) => {
                    diag[u] += edge;
                    if index[m] > u {
                        couplings.push((u, index[m], -edge));
                    }
                }
                None => {
                    let frac = edge_crossing(surface, t, x, st, sx);
                    diag[u] += edge / frac;
                }
            }
        }
    }
    let op = grid_operator_from_couplings(diag, mass, &couplings);
    min_eigen_grid(&op)
}
