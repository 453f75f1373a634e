//! Margin-based checks of the comparison inequalities on a certified
//! manifold, and detection of their equality cases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance_field::{cut_time, solve_eikonal, Grid2D};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::kernels::{
    ball_condition, cut_radius, dirichlet_constant, eigen_lower_bound, f_profile, jacobian, kasue_bar_mu,
    log_jacobian_derivative, model_ratio, s_point, segment_constant, BoundVariant, ComparisonParams,
    Extended,
};
use crate::manifolds::{boundary_ricci, unit_sphere_volume, CertifiedManifold, Manifold, Side};
use crate::numerics::{integrate, sup_scan, Tolerance};
use crate::tube_geometry::{dirichlet_eigen, GeometrySettings, RadialBand, TrialFunction, TubeGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    LogJacobian,
    RelativeJacobian,
    VolumeComparison,
    HeintzeKarcher,
    VolumeGrowth,
    InscribedRadius,
    MeasureContraction,
    AnnulusChain,
    Segment,
    Poincare,
    Isoperimetric,
    EigenBounds,
}

impl CheckName {
    pub const ALL: [CheckName; 12] = [
        CheckName::LogJacobian,
        CheckName::RelativeJacobian,
        CheckName::VolumeComparison,
        CheckName::HeintzeKarcher,
        CheckName::VolumeGrowth,
        CheckName::InscribedRadius,
        CheckName::MeasureContraction,
        CheckName::AnnulusChain,
        CheckName::Segment,
        CheckName::Poincare,
        CheckName::Isoperimetric,
        CheckName::EigenBounds,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::LogJacobian => "log_jacobian",
            CheckName::RelativeJacobian => "relative_jacobian",
            CheckName::VolumeComparison => "volume_comparison",
            CheckName::HeintzeKarcher => "heintze_karcher",
            CheckName::VolumeGrowth => "volume_growth",
            CheckName::InscribedRadius => "inscribed_radius",
            CheckName::MeasureContraction => "measure_contraction",
            CheckName::AnnulusChain => "annulus_chain",
            CheckName::Segment => "segment",
            CheckName::Poincare => "poincare",
            CheckName::Isoperimetric => "isoperimetric",
            CheckName::EigenBounds => "eigen_bounds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

/// Error bounds behind a check's tolerance; the tolerance is the largest of
/// them times the scale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ToleranceBudget {
    pub base: f64,
    pub quadrature: f64,
    pub grid: f64,
    pub finite_difference: f64,
    pub sampling: f64,
    pub scale: f64,
}

impl ToleranceBudget {
    pub fn total(&self) -> f64 {
        self.scale
            * self
                .base
                .max(self.quadrature)
                .max(self.grid)
                .max(self.finite_difference)
                .max(self.sampling)
    }
}

/// A named sub-inequality and its margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub name: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: CheckName,
    pub name: String,
    pub params: ComparisonParams,
    /// Extra parameters (`D`, `t`, band ends) as applicable.
    pub settings: Vec<(String, f64)>,
    /// Nonnegative means the inequality holds.
    pub worst_margin: f64,
    pub worst_location: Location,
    pub tolerance: f64,
    pub budget: ToleranceBudget,
    pub status: Status,
    pub samples: usize,
    pub components: Vec<Component>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum RigidityKind {
    None,
    WarpedProductOnBall { r: f64 },
    BallSpaceForm,
    VolumeGrowthSplitting,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityVerdict {
    pub kind: RigidityKind,
    /// `sup |θ(t,x) - s^{n-1}(t)|` over `t <= min τ`.
    pub sup_deviation: f64,
    pub tolerance: f64,
    /// Largest radius at which the volume-growth ratio was examined.
    pub largest_r: f64,
    pub supporting_checks: Vec<String>,
    /// `Ric_∂M - (n-2)(κ+λ²)` (warped tubes).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_ricci_margin: Option<f64>,
    /// `vol_h ∂M >= vol ∂B_{κ,-λ}` when `(κ, -λ)` satisfies the ball condition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complement_volume_condition: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub t: f64,
    /// `(r₁, r₂)`; defaults to `(m/4, 3m/4)` with `m = min(D, 1)`.
    pub radii: Option<(f64, f64)>,
    pub k_max: usize,
    /// Exponents `e` of the refinements `N = 2^e`.
    pub refinement_exponents: Vec<u32>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            t: 0.5,
            radii: None,
            k_max: 6,
            refinement_exponents: (4..=12).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    /// Checks to run, in this order; all when absent.
    pub checks: Option<Vec<CheckName>>,
    pub base_tolerance: f64,
    pub tol_scale: f64,
    pub t_values: Vec<f64>,
    /// Radial bands `(r, R)`; defaults to `(m/4, 3m/4)`.
    pub bands: Option<Vec<(f64, f64)>>,
    pub chain: ChainConfig,
    pub p_list: Vec<f64>,
    /// Nonnegative integrands for the segment inequality.
    pub f_specs: Vec<String>,
    /// Boundary-vanishing functions for the Poincaré inequality and
    /// Rayleigh upper bounds.
    pub psi_specs: Vec<String>,
    /// Sub-bands `(t₁, t₂)` for the isoperimetric check; defaults to
    /// `(0.2m, 0.8m)` per side.
    pub iso_bands: Option<Vec<(f64, f64)>>,
    pub rigidity_tolerance: f64,
    /// Inscribed radius to use in the constant-based bounds instead of the
    /// computed one.
    pub depth: Option<f64>,
    /// Set from the scenario's grid section, not from the suite section.
    #[serde(skip_deserializing)]
    pub geometry: GeometrySettings,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            checks: None,
            base_tolerance: 1e-6,
            tol_scale: 1.0,
            t_values: vec![0.25, 0.5, 0.75],
            bands: None,
            chain: ChainConfig::default(),
            p_list: vec![1.5, 2.0, 3.0],
            f_specs: vec!["1".into(), "rho".into(), "1 + 0.5*sin(x)".into()],
            psi_specs: vec!["rho".into(), "rho^2".into()],
            iso_bands: None,
            rigidity_tolerance: 1e-6,
            depth: None,
            geometry: GeometrySettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub reports: Vec<CheckReport>,
    pub verdict: RigidityVerdict,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(CheckReport::passed)
    }

    /// One row per check: `check,name,margin,location_t,location_x,tolerance,status`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,name,margin,location_t,location_x,tolerance,status\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        for r in &self.reports {
            let status = match r.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Skipped => "skipped",
            };
            out.push_str(&format!(
                "{},\"{}\",{:e},{},{},{:e},{}\n",
                r.check.as_str(),
                r.name.replace('"', "'"),
                r.worst_margin,
                opt(r.worst_location.t),
                opt(r.worst_location.x),
                r.tolerance,
                status
            ));
        }
        out
    }
}

/// Running minimum of margins with the place it occurred.
#[derive(Debug, Clone, Copy)]
struct Worst {
    margin: f64,
    at: Location,
    samples: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            at: Location::default(),
            samples: 0,
        }
    }

    fn see(&mut self, margin: f64, at: Location) {
        self.samples += 1;
        if margin < self.margin || margin.is_nan() {
            self.margin = margin;
            self.at = at;
        }
    }
}

/// Shared state for one battery run.
pub struct Verifier<'a> {
    pub geo: TubeGeometry<'a>,
    pub config: SuiteConfig,
    params: ComparisonParams,
    /// `sup τ`.
    pub inscribed: f64,
    pub truncated: bool,
    c_bar: Extended,
    pub boundary_volume: f64,
    /// Cut-time uncertainty (zero on warped tubes).
    delta_tau: f64,
    min_tau: f64,
    /// `(τ, weight · θ(τ), δτ)` per ray.
    cut_mass: Vec<(f64, f64, f64)>,
}

fn location(side: Side, x: f64, t: f64) -> Location {
    Location {
        side: Some(side),
        x: Some(x),
        t: Some(t),
        r: None,
    }
}

fn at_r(r: f64) -> Location {
    Location {
        r: Some(r),
        ..Location::default()
    }
}

/// `(min, max)` of `s^{n-1}_{κ,λ}` on `[a, b]`, from the ends and the
/// critical points of `s_{κ,λ}` inside.
pub fn model_jacobian_range(params: &ComparisonParams, a: f64, b: f64) -> (f64, f64) {
    let mut candidates = vec![a, b];
    let (k, l) = (params.kappa, params.lambda);
    if k > 0.0 {
        let c = k.sqrt();
        // s' = -√(c²+λ²) sin(ct + φ), φ = atan2(λ, c).
        let phi = l.atan2(c);
        let period = std::f64::consts::PI / c;
        let first = (-phi / c).rem_euclid(period);
        let mut tc = first;
        while tc <= b {
            if tc > a {
                candidates.push(tc);
            }
            tc += period;
        }
    } else if k < 0.0 {
        let c = (-k).sqrt();
        let (alpha, beta) = (0.5 * (1.0 - l / c), 0.5 * (1.0 + l / c));
        if alpha > 0.0 && beta / alpha > 1.0 {
            let tc = (beta / alpha).ln() / (2.0 * c);
            if tc > a && tc < b {
                candidates.push(tc);
            }
        }
    }
    candidates
        .iter()
        .map(|t| jacobian(params, *t))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Upper bound for `vol B_R / vol B_r` from the chain of geometric shells
/// with ratio `t = (r/R)^{1/N}` (so `t^0 R = R` and `t^N R = r`).
pub fn chain_bound(params: &ComparisonParams, r: f64, big_r: f64, refinement: u32) -> Result<f64> {
    if !(0.0 < r && r < big_r) || refinement == 0 {
        return Err(Error::Domain(format!("chain bound needs 0 < r < R and N >= 1, got ({r}, {big_r}, {refinement})")));
    }
    if let Extended::Finite(c) = cut_radius(params) {
        if big_r > c * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("R = {big_r} exceeds the cut radius {c}")));
        }
    }
    let t = (r / big_r).powf(1.0 / refinement as f64);
    let series = |start: u64, upper: bool| -> f64 {
        let mut total = 0.0;
        let mut j = start;
        loop {
            let hi = big_r * t.powf((j - 1) as f64);
            let lo = hi * t;
            let (smin, smax) = model_jacobian_range(params, lo, hi);
            let term = if upper { smax } else { smin } * (hi - lo);
            total += term;
            if term <= 1e-15 * total || hi < 1e-300 {
                break;
            }
            j += 1;
        }
        total
    };
    let num = series(1, true);
    let den = series(refinement as u64 + 1, false);
    Ok(num / den)
}

fn inf_ratio(params: &ComparisonParams, scale: f64, a: f64, b: f64) -> f64 {
    let f = |s: f64| -(jacobian(params, scale * s) / jacobian(params, s));
    -sup_scan(f, a, b, 513).value
}

impl<'a> Verifier<'a> {
    pub fn new(cm: &'a CertifiedManifold, config: SuiteConfig) -> Result<Self> {
        let geo = TubeGeometry::new(cm, config.geometry)?;
        let (inscribed, truncated) = geo.inscribed_radius();
        let boundary_volume: f64 = geo.rays.iter().map(|r| r.weight).sum();
        // Cut-time uncertainty per ray: the change against a grid of half the
        // resolution. The extrapolated cut times converge at second order, so
        // this difference dominates the fine-grid error.
        let shifts: Vec<f64> = match (&geo.field, &cm.manifold) {
            (Some(field), Manifold::Chart(surface)) => {
                let coarse = Grid2D::new(surface, (field.grid.nt / 2).max(4), (field.grid.nx / 2).max(4))?;
                let coarse_field = solve_eikonal(surface, &coarse)?;
                geo.rays
                    .par_iter()
                    .map(|ray| Ok((ray.tau - cut_time(&coarse_field, surface, &ray.profile, config.geometry.cut_constant)?).abs()))
                    .collect::<Result<Vec<f64>>>()?
            }
            _ => vec![0.0; geo.rays.len()],
        };
        let delta_tau = shifts.iter().copied().fold(0.0, f64::max);
        let min_tau = geo.rays.iter().map(|r| r.tau).fold(f64::INFINITY, f64::min);
        let cut_mass = (0..geo.rays.len())
            .map(|k| {
                let ray = &geo.rays[k];
                (ray.tau, ray.weight * geo.theta(k, ray.tau).0.abs(), shifts[k])
            })
            .collect();
        Ok(Self {
            params: cm.params,
            c_bar: cut_radius(&cm.params),
            geo,
            config,
            inscribed,
            truncated,
            boundary_volume,
            delta_tau,
            min_tau,
            cut_mass,
        })
    }

    fn budget(&self) -> ToleranceBudget {
        ToleranceBudget {
            base: self.config.base_tolerance,
            scale: self.config.tol_scale,
            sampling: self.geo.cm.tolerance,
            ..ToleranceBudget::default()
        }
    }

    fn report(
        &self,
        check: CheckName,
        name: String,
        settings: Vec<(String, f64)>,
        worst: Worst,
        budget: ToleranceBudget,
        components: Vec<Component>,
        notes: Vec<String>,
    ) -> CheckReport {
        let tolerance = budget.total();
        let status = if worst.margin >= -tolerance { Status::Pass } else { Status::Fail };
        CheckReport {
            check,
            name,
            params: self.params,
            settings,
            worst_margin: worst.margin,
            worst_location: worst.at,
            tolerance,
            budget,
            status,
            samples: worst.samples,
            components,
            notes,
        }
    }

    fn skipped(&self, check: CheckName, reason: String) -> CheckReport {
        CheckReport {
            check,
            name: check.as_str().into(),
            params: self.params,
            settings: Vec::new(),
            worst_margin: 0.0,
            worst_location: Location::default(),
            tolerance: self.budget().total(),
            budget: self.budget(),
            status: Status::Skipped,
            samples: 0,
            components: Vec::new(),
            notes: vec![reason],
        }
    }

    /// Rays that carry distinct Jacobians: one per side on warped tubes
    /// (θ does not depend on the fiber point), all of them on charts.
    fn distinct_rays(&self) -> Vec<usize> {
        match self.geo.manifold() {
            Manifold::Warped(_) => {
                let mut seen = Vec::new();
                let mut out = Vec::new();
                for (k, ray) in self.geo.rays.iter().enumerate() {
                    if !seen.contains(&ray.point.side) {
                        seen.push(ray.point.side);
                        out.push(k);
                    }
                }
                out
            }
            Manifold::Chart(_) => (0..self.geo.rays.len()).collect(),
        }
    }

    /// Upper end of the range where a ray's Jacobian is compared with the
    /// model: `min(τ₁, C̄)` less one step, and no further than the profile.
    fn comparison_end(&self, k: usize) -> f64 {
        let ray = &self.geo.rays[k];
        let step = ray.profile.times.get(1).copied().unwrap_or(0.0);
        let end = ray.tau1_or_end().min(self.c_bar.min_with(f64::INFINITY));
        (end - step).min(ray.profile.end())
    }

    fn ode_error(&self) -> f64 {
        match self.geo.manifold() {
            Manifold::Warped(_) => 1e-12,
            Manifold::Chart(_) => {
                let h = self.config.geometry.ode_step;
                // Fourth-order RK4 error with a generous constant.
                1e3 * h.powi(4)
            }
        }
    }

    /// `(n-1)s'/s - θ'/θ >= 0` on `(0, min(τ₁, C̄))`.
    pub fn check_log_jacobian(&self) -> CheckReport {
        let mut worst = Worst::new();
        for k in self.distinct_rays() {
            let ray = &self.geo.rays[k];
            let end = self.comparison_end(k);
            for (i, &t) in ray.profile.times.iter().enumerate() {
                if t <= 0.0 || t > end {
                    continue;
                }
                let (th, dth) = (ray.profile.theta[i], ray.profile.dtheta[i]);
                let margin = log_jacobian_derivative(&self.params, t) - dth / th;
                worst.see(margin, location(ray.point.side, ray.point.x, t));
            }
        }
        let budget = ToleranceBudget {
            finite_difference: self.ode_error(),
            ..self.budget()
        };
        self.report(CheckName::LogJacobian, "log_jacobian".into(), Vec::new(), worst, budget, Vec::new(), Vec::new())
    }

    /// `θ(t)/θ(s) <= S(t)/S(s)` for `s <= t`, `θ <= S`, and `τ₁ <= C̄`.
    pub fn check_relative_jacobian(&self) -> CheckReport {
        const PAIRS: usize = 64;
        let mut worst = Worst::new();
        let mut ratio = Worst::new();
        let mut absolute = Worst::new();
        let mut conjugate = Worst::new();
        for k in self.distinct_rays() {
            let ray = &self.geo.rays[k];
            let end = self.comparison_end(k);
            if end <= 0.0 {
                continue;
            }
            let times: Vec<f64> = (0..=PAIRS).map(|i| end * i as f64 / PAIRS as f64).collect();
            let vals: Vec<(f64, f64)> = times.iter().map(|t| (self.geo.theta(k, *t).0, jacobian(&self.params, *t))).collect();
            for a in 0..times.len() {
                let (th_s, sm_s) = vals[a];
                let m = sm_s - th_s;
                absolute.see(m, location(ray.point.side, ray.point.x, times[a]));
                worst.see(m, location(ray.point.side, ray.point.x, times[a]));
                for b in a + 1..times.len() {
                    let (th_t, sm_t) = vals[b];
                    let m = th_s * sm_t - th_t * sm_s;
                    ratio.see(m, location(ray.point.side, ray.point.x, times[b]));
                    worst.see(m, location(ray.point.side, ray.point.x, times[b]));
                }
            }
            if let (Extended::Finite(c), Extended::Finite(t1)) = (self.c_bar, ray.profile.tau1) {
                let step = ray.profile.times.get(1).copied().unwrap_or(0.0);
                let m = c + step - t1;
                conjugate.see(m, location(ray.point.side, ray.point.x, t1));
                worst.see(m, location(ray.point.side, ray.point.x, t1));
            }
        }
        let mut components = vec![
            Component {
                name: "ratio".into(),
                margin: ratio.margin,
            },
            Component {
                name: "theta_le_model".into(),
                margin: absolute.margin,
            },
        ];
        if conjugate.samples > 0 {
            components.push(Component {
                name: "tau1_le_cut_radius".into(),
                margin: conjugate.margin,
            });
        }
        let budget = ToleranceBudget {
            finite_difference: self.ode_error(),
            ..self.budget()
        };
        self.report(CheckName::RelativeJacobian, "relative_jacobian".into(), Vec::new(), worst, budget, components, Vec::new())
    }

    /// Radii for the volume checks: 16 log-spaced points up to
    /// `min(D, 2C̄)` (`T_max` on half-infinite tubes).
    pub fn volume_radii(&self) -> Vec<f64> {
        let r_max = self.inscribed.min(2.0 * self.c_bar.min_with(f64::INFINITY));
        (0..16).map(|i| r_max * (1.0f64 / 64.0).powf((15 - i) as f64 / 15.0)).collect()
    }

    /// Volume that moves when each cut time below `r + δτ` shifts by its `δτ`.
    fn cut_error(&self, r: f64) -> f64 {
        self.cut_mass
            .iter()
            .filter(|(tau, _, d)| *tau < r + d)
            .map(|(_, m, d)| m * d)
            .sum()
    }

    // Absolute error bound for vol B_r.
    fn volume_error(&self, r: f64, volume: f64) -> f64 {
        1e-9 * volume + self.cut_error(r) + self.ode_error() * self.boundary_volume * r
    }

    fn volume_table(&self) -> Result<Vec<(f64, f64)>> {
        let radii = self.volume_radii();
        let table = self.geo.tube_volume_table(&radii)?;
        Ok(radii.into_iter().zip(table.volumes).collect())
    }

    /// `vol B_R / vol B_r <= f(R)/f(r)` for `r <= R`.
    pub fn check_volume_comparison(&self) -> Result<CheckReport> {
        let table = self.volume_table()?;
        let mut worst = Worst::new();
        let mut grid = 0.0f64;
        for (i, &(r, vr)) in table.iter().enumerate() {
            for &(big_r, vbig) in &table[i..] {
                let ratio = vbig / vr;
                let margin = model_ratio(&self.params, r, big_r)? - ratio;
                worst.see(margin, Location { r: Some(big_r), t: Some(r), ..Location::default() });
                grid = grid.max(ratio * (self.volume_error(big_r, vbig) / vbig + self.volume_error(r, vr) / vr));
            }
        }
        let budget = ToleranceBudget {
            grid,
            ..self.budget()
        };
        Ok(self.report(
            CheckName::VolumeComparison,
            "volume_comparison".into(),
            vec![("r_max".into(), table.last().map_or(0.0, |v| v.0))],
            worst,
            budget,
            Vec::new(),
            vec!["location: t = r, r = R".into()],
        ))
    }

    /// `vol B_r <= vol_h ∂M · f(r)`.
    pub fn check_heintze_karcher(&self) -> Result<CheckReport> {
        let table = self.volume_table()?;
        let mut worst = Worst::new();
        let mut grid = 0.0f64;
        for &(r, v) in &table {
            let margin = self.boundary_volume * f_profile(&self.params, r)? - v;
            worst.see(margin, at_r(r));
            grid = grid.max(self.volume_error(r, v));
        }
        let budget = ToleranceBudget {
            grid,
            ..self.budget()
        };
        Ok(self.report(CheckName::HeintzeKarcher, "heintze_karcher".into(), Vec::new(), worst, budget, Vec::new(), Vec::new()))
    }

    /// `vol B_r / f(r) <= vol_h ∂M`.
    pub fn check_volume_growth(&self) -> Result<CheckReport> {
        let table = self.volume_table()?;
        let mut worst = Worst::new();
        let mut grid = 0.0f64;
        for &(r, v) in &table {
            let f = f_profile(&self.params, r)?;
            worst.see(self.boundary_volume - v / f, at_r(r));
            grid = grid.max(self.volume_error(r, v) / f);
        }
        let budget = ToleranceBudget {
            grid,
            ..self.budget()
        };
        Ok(self.report(CheckName::VolumeGrowth, "volume_growth".into(), Vec::new(), worst, budget, Vec::new(), Vec::new()))
    }

    /// `D(M, ∂M) <= C_{κ,λ}` under the ball condition.
    pub fn check_inscribed_radius(&self) -> CheckReport {
        let Extended::Finite(c) = self.c_bar else {
            return self.skipped(
                CheckName::InscribedRadius,
                format!("ball condition fails for (κ, λ) = ({}, {})", self.params.kappa, self.params.lambda),
            );
        };
        let mut worst = Worst::new();
        worst.see(c - self.inscribed, at_r(self.inscribed));
        let budget = ToleranceBudget {
            grid: self.delta_tau,
            ..self.budget()
        };
        self.report(
            CheckName::InscribedRadius,
            "inscribed_radius".into(),
            vec![("D".into(), self.inscribed), ("C".into(), c)],
            worst,
            budget,
            Vec::new(),
            Vec::new(),
        )
    }

    fn default_scale(&self) -> f64 {
        self.inscribed.min(1.0)
    }

    pub fn bands(&self) -> Vec<RadialBand> {
        let m = self.default_scale();
        let raw = self.config.bands.clone().unwrap_or_else(|| vec![(0.25 * m, 0.75 * m)]);
        raw.into_iter().filter_map(|(a, b)| RadialBand::new(a, b).ok()).collect()
    }

    /// `vol Φ_t^{-1}(Ω) >= t ∫_Ω S(tρ)/S(ρ) dvol` for a radial band `Ω`.
    pub fn check_measure_contraction(&self, t: f64, band: RadialBand) -> Result<CheckReport> {
        let name = format!("measure_contraction[t={t},band=({},{})]", band.inner, band.outer);
        let settings = vec![("t".into(), t), ("r".into(), band.inner), ("R".into(), band.outer)];
        if self.c_bar.le(band.outer) {
            return Ok(CheckReport {
                name,
                settings,
                ..self.skipped(CheckName::MeasureContraction, "band reaches the cut radius".into())
            });
        }
        let lhs = self.geo.extension_preimage_volume(t, band)?;
        let params = self.params;
        let rhs = t * self.geo.coarea_integral(&|_| (band.inner, band.outer), &|u, _| {
            jacobian(&params, t * u) / jacobian(&params, u)
        })?;
        let mut worst = Worst::new();
        worst.see(lhs - rhs, at_r(band.outer));
        let grid = 2.0 * self.cut_error(band.outer);
        let budget = ToleranceBudget {
            quadrature: 1e-9 * lhs.abs().max(rhs.abs()),
            grid,
            ..self.budget()
        };
        let components = vec![
            Component { name: "lhs".into(), margin: lhs },
            Component { name: "rhs".into(), margin: rhs },
        ];
        Ok(self.report(CheckName::MeasureContraction, name, settings, worst, budget, components, Vec::new()))
    }

    /// Discrete shell inequalities and the refinement limit of the chain
    /// bound towards `f(R)/f(r)`.
    pub fn check_annulus_chain(&self, t: f64, r1: f64, r2: f64, k_max: usize) -> Result<CheckReport> {
        let p = &self.params;
        let name = format!("annulus_chain[t={t},r1={r1},r2={r2}]");
        let settings = vec![("t".into(), t), ("r1".into(), r1), ("r2".into(), r2)];
        if !(0.0 < r1 && r1 < r2) || !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParams(format!("chain needs 0 < r1 < r2 and t in (0,1), got ({t}, {r1}, {r2})")));
        }
        if self.c_bar.le(r2 * (1.0 - 1e-12)) {
            return Ok(CheckReport {
                name,
                settings,
                ..self.skipped(CheckName::AnnulusChain, "r2 exceeds the cut radius".into())
            });
        }
        let vol = |r: f64| self.geo.tube_volume(r);
        let band_vol = |a: f64, b: f64| -> Result<f64> { Ok(vol(b)? - vol(a)?) };
        let mut worst = Worst::new();
        let mut components = Vec::new();
        let mut grid = 0.0f64;
        let rel_err = |a: f64, v: f64| self.volume_error(a, v.abs().max(1e-300)) / v.abs().max(1e-300);

        // Shell against its t-shrink.
        let num = band_vol(r1, r2)?;
        let den = band_vol(t * r1, t * r2)?;
        let bound = 1.0 / (t * inf_ratio(p, t, r1, r2));
        let m = bound - num / den;
        worst.see(m, at_r(r2));
        grid = grid.max(num / den * (2.0 * rel_err(r2, num) + 2.0 * rel_err(t * r2, den)));
        components.push(Component { name: "shell_shrink".into(), margin: m });

        // Shell against the inner ball B_{q^k r2}, q = r1/r2.
        let q = r1 / r2;
        for k in 1..=k_max {
            let mut series = 0.0;
            let mut i = k;
            loop {
                let term = q.powi(i as i32) * inf_ratio(p, q.powi(i as i32), r1, r2);
                series += term;
                if term <= 1e-14 * series || i > 10_000 {
                    break;
                }
                i += 1;
            }
            let r = q.powi(k as i32) * r2;
            let vr = vol(r)?;
            let m = 1.0 / series - num / vr;
            worst.see(m, at_r(r));
            grid = grid.max(num / vr * (2.0 * rel_err(r2, num) + rel_err(r, vr)));
            components.push(Component {
                name: format!("shell_over_ball[k={k}]"),
                margin: m,
            });
        }

        // Chain bound: above the true ratio, nonincreasing in N, and close to
        // the model ratio at the finest N.
        let true_ratio = vol(r2)? / vol(r1)?;
        grid = grid.max(true_ratio * (rel_err(r2, vol(r2)?) + rel_err(r1, vol(r1)?)));
        let model = model_ratio(p, r1, r2)?;
        let mut previous: Option<f64> = None;
        let mut last = f64::NAN;
        for &e in &self.config.chain.refinement_exponents {
            let n = 1u32 << e;
            let b = chain_bound(p, r1, r2, n)?;
            let m = b - true_ratio;
            worst.see(m, at_r(r2));
            components.push(Component {
                name: format!("chain_bound[N={n}]"),
                margin: m,
            });
            if let Some(prev) = previous {
                let m = prev - b;
                worst.see(m, at_r(r2));
                components.push(Component {
                    name: format!("chain_monotone[N={n}]"),
                    margin: m,
                });
            }
            previous = Some(b);
            last = b;
        }
        if last.is_finite() {
            let m = 0.01 * model - (last - model).abs();
            worst.see(m, at_r(r2));
            components.push(Component {
                name: "chain_limit_within_1pct".into(),
                margin: m,
            });
        }
        let budget = ToleranceBudget {
            grid,
            quadrature: 1e-9 * model,
            ..self.budget()
        };
        Ok(self.report(CheckName::AnnulusChain, name, settings, worst, budget, components, Vec::new()))
    }

    /// `D` for bounds: the inscribed radius plus its uncertainty, capped at
    /// the cut radius.
    fn depth_upper(&self) -> f64 {
        let d = self.config.depth.unwrap_or(self.inscribed + self.delta_tau);
        self.c_bar.min_with(d).min(d)
    }

    /// `∫_M E_f <= C₁(n,κ,λ,D) D ∫_M f` for each integrand.
    pub fn check_segment(&self) -> Result<CheckReport> {
        if self.truncated {
            return Ok(self.skipped(CheckName::Segment, "needs a compact manifold (finite D)".into()));
        }
        let d = self.depth_upper();
        let c1 = segment_constant(&self.params, d)?;
        let mut worst = Worst::new();
        let mut components = Vec::new();
        let mut grid = 0.0f64;
        for spec in &self.config.f_specs {
            let e = Expr::parse(spec)?;
            let radial = e.is_radial();
            let f = |s: f64, (t, x): (f64, f64)| if radial { e.eval(s, 0.0) } else { e.eval(t, x) };
            let negative = self.geo.rays.iter().enumerate().any(|(k, ray)| {
                (0..=16).any(|i| {
                    let s = ray.tau * i as f64 / 16.0;
                    f(s, self.geo.ray_point(k, s)) < 0.0
                })
            });
            if negative {
                return Err(Error::InvalidParams(format!("segment integrand `{spec}` takes negative values")));
            }
            let (lhs, total) = self.geo.excursion_integrals(&f)?;
            let rhs = c1 * d * total;
            let m = rhs - lhs;
            worst.see(m, Location::default());
            let f_max = self
                .geo
                .rays
                .iter()
                .enumerate()
                .map(|(k, ray)| f(ray.tau, self.geo.ray_point(k, ray.tau)).abs())
                .fold(0.0, f64::max);
            grid = grid.max(self.cut_error(f64::INFINITY) * f_max * d * (1.0 + c1));
            components.push(Component { name: format!("f = {spec}"), margin: m });
        }
        let budget = ToleranceBudget {
            grid,
            quadrature: 1e-8,
            ..self.budget()
        };
        Ok(self.report(
            CheckName::Segment,
            "segment".into(),
            vec![("D".into(), d), ("C1".into(), c1)],
            worst,
            budget,
            components,
            Vec::new(),
        ))
    }

    fn trial(&self, spec: &str) -> Result<TrialFunction> {
        Ok(TrialFunction::Expr(Expr::parse(spec)?))
    }

    /// `∫|ψ| <= C₁ D ∫‖∇ψ‖` for boundary-vanishing `ψ`.
    pub fn check_poincare(&self) -> Result<CheckReport> {
        if self.truncated {
            return Ok(self.skipped(CheckName::Poincare, "needs a compact manifold (finite D)".into()));
        }
        let d = self.depth_upper();
        let c1 = segment_constant(&self.params, d)?;
        let mut worst = Worst::new();
        let mut components = Vec::new();
        let mut grid = 0.0f64;
        for spec in &self.config.psi_specs {
            let e = Expr::parse(spec)?;
            let jet_max = self
                .geo
                .rays
                .iter()
                .enumerate()
                .map(|(k, ray)| {
                    let (v, dv) = if e.is_radial() {
                        let j = e.jet(ray.tau, 0.0, Var::Rho);
                        (j.v, j.d1)
                    } else {
                        let (t, x) = self.geo.ray_point(k, ray.tau);
                        let (v, gt, gx) = e.gradient(t, x);
                        (v, gt.hypot(gx))
                    };
                    v.abs() + c1 * d * dv.abs()
                })
                .fold(0.0, f64::max);
            grid = grid.max(self.cut_error(f64::INFINITY) * jet_max);
            let psi = TrialFunction::Expr(e);
            let trace = self.geo.boundary_trace(&psi)?;
            if trace > 1e-9 {
                return Err(Error::InvalidParams(format!("ψ = {spec} does not vanish on the boundary (|ψ| = {trace})")));
            }
            let (value, grad) = self.geo.trial_integrals(&psi, 1.0)?;
            let m = c1 * d * grad - value;
            worst.see(m, Location::default());
            components.push(Component { name: format!("psi = {spec}"), margin: m });
        }
        let budget = ToleranceBudget {
            grid,
            quadrature: 1e-8,
            ..self.budget()
        };
        Ok(self.report(
            CheckName::Poincare,
            "poincare".into(),
            vec![("D".into(), d), ("C1".into(), c1)],
            worst,
            budget,
            components,
            Vec::new(),
        ))
    }

    /// `vol Ω <= vol ∂Ω · sup_{s∈(t₁,t₂)} ∫_s^{t₂} S / S(s)` for
    /// `Ω = {t₁ < ρ_side < t₂}`.
    pub fn check_isoperimetric(&self) -> Result<CheckReport> {
        let sides = self.geo.manifold().sides();
        let mut worst = Worst::new();
        let mut components = Vec::new();
        let params = self.params;
        for side in sides {
            let rays: Vec<usize> = (0..self.geo.rays.len()).filter(|k| self.geo.rays[*k].point.side == side).collect();
            let side_tau = rays.iter().map(|k| self.geo.rays[*k].tau).fold(f64::INFINITY, f64::min);
            let m_scale = side_tau.min(1.0);
            let bands = self.config.iso_bands.clone().unwrap_or_else(|| vec![(0.2 * m_scale, 0.8 * m_scale)]);
            for (t1, t2) in bands {
                if !(0.0 <= t1 && t1 <= t2) {
                    return Err(Error::InvalidParams(format!("isoperimetric band needs 0 <= t1 <= t2, got ({t1}, {t2})")));
                }
                if t2 >= side_tau {
                    return Err(Error::Domain(format!(
                        "isoperimetric band ({t1}, {t2}) crosses the cut time {side_tau} of the {side:?} side"
                    )));
                }
                let label = format!("{side:?} ({t1}, {t2})");
                if t2 == t1 {
                    worst.see(0.0, Location { side: Some(side), ..Location::default() });
                    components.push(Component { name: label, margin: 0.0 });
                    continue;
                }
                let mut volume = 0.0;
                let mut area = 0.0;
                for &k in &rays {
                    let w = self.geo.rays[k].weight;
                    volume += w * self.geo.ray_integral(k, t1, t2, &|_, _| 1.0)?;
                    area += w * (self.geo.theta(k, t1).0 + self.geo.theta(k, t2).0);
                }
                let tail = |s: f64| integrate(|u| jacobian(&params, u), s, t2, Tolerance::tight()).unwrap_or(f64::NAN) / jacobian(&params, s);
                let factor = sup_scan(tail, t1, t2, 1025).value;
                let m = area * factor - volume;
                worst.see(m, Location { side: Some(side), t: Some(t2), ..Location::default() });
                components.push(Component { name: label, margin: m });
            }
        }
        let budget = ToleranceBudget {
            quadrature: 1e-9,
            finite_difference: self.ode_error() * self.boundary_volume,
            ..self.budget()
        };
        Ok(self.report(CheckName::Isoperimetric, "isoperimetric".into(), Vec::new(), worst, budget, components, Vec::new()))
    }

    /// Lower bounds for `μ_{1,p}` against the computed `μ_{1,2}` and against
    /// Rayleigh quotients of trial functions for `p ≠ 2`.
    pub fn check_eigen_bounds(&self) -> Result<CheckReport> {
        let rigid = self.params.is_rigid();
        if self.truncated && !rigid {
            return Ok(self.skipped(
                CheckName::EigenBounds,
                "half-infinite tube outside the rigid case has no computable Dirichlet spectrum".into(),
            ));
        }
        let mu = dirichlet_eigen(self.geo.manifold(), &self.config.geometry, self.truncated)?;
        let d: Extended = if self.truncated { Extended::Infinite } else { Extended::Finite(self.depth_upper()) };
        let p = &self.params;
        let mut worst = Worst::new();
        let mut components = vec![Component { name: "mu_1_2".into(), margin: mu }];
        let mut see = |name: String, m: f64, worst: &mut Worst| {
            worst.see(m, Location::default());
            components.push(Component { name, margin: m });
        };
        let mut notes = Vec::new();
        for &q in &self.config.p_list {
            let mut bounds = Vec::new();
            match dirichlet_constant(p, d) {
                Ok(_) => bounds.push(("dirichlet", eigen_lower_bound(p, d, q, BoundVariant::Dirichlet)?)),
                Err(e) => notes.push(format!("dirichlet bound unavailable: {e}")),
            }
            if let Extended::Finite(dv) = d {
                bounds.push(("segment", eigen_lower_bound(p, Extended::Finite(dv), q, BoundVariant::Segment)?));
            }
            if rigid {
                bounds.push(("rigid", eigen_lower_bound(p, d, q, BoundVariant::Rigid)?));
            }
            if (q - 2.0).abs() < 1e-12 {
                for (label, b) in &bounds {
                    see(format!("mu >= {label} bound"), mu - b, &mut worst);
                }
                if let Extended::Finite(dv) = d {
                    let bar = kasue_bar_mu(p, dv)?;
                    see("mu >= kasue bar mu".into(), mu - bar, &mut worst);
                    let dir = bounds.iter().find(|b| b.0 == "dirichlet").map(|b| b.1);
                    let seg = bounds.iter().find(|b| b.0 == "segment").map(|b| b.1);
                    if let (Some(dir), Some(seg)) = (dir, seg) {
                        see("segment <= dirichlet".into(), dir - seg, &mut worst);
                        see("dirichlet <= kasue bar mu".into(), bar - dir, &mut worst);
                    }
                }
            } else {
                for spec in &self.config.psi_specs {
                    let psi = self.trial(spec)?;
                    let upper = self.geo.rayleigh_quotient(&psi, q)?;
                    for (label, b) in &bounds {
                        see(format!("p={q}: R_p({spec}) >= {label} bound"), upper - b, &mut worst);
                    }
                }
            }
        }
        // Richardson and grid error of the numerical eigenvalue.
        let budget = ToleranceBudget {
            grid: 1e-3 * mu,
            ..self.budget()
        };
        Ok(self.report(
            CheckName::EigenBounds,
            "eigen_bounds".into(),
            vec![("D".into(), d.min_with(f64::INFINITY))],
            worst,
            budget,
            components,
            notes,
        ))
    }

    /// Equality-case detection: Jacobians equal to the model up to `min τ`,
    /// then the ball and volume-growth criteria.
    pub fn detect_rigidity(&self, tol: f64) -> Result<RigidityVerdict> {
        let r = self.min_tau;
        let mut dev = 0.0f64;
        for k in self.distinct_rays() {
            let ray = &self.geo.rays[k];
            for (i, &t) in ray.profile.times.iter().enumerate() {
                if t > r {
                    break;
                }
                dev = dev.max((ray.profile.theta[i] - jacobian(&self.params, t)).abs());
            }
        }
        let mut supporting = vec!["log_jacobian".to_string(), "relative_jacobian".to_string()];
        // The growth criterion is a limit in r. A truncated tube is examined
        // at its truncation length; a compact one has saturated volume, so a
        // far radius stands in for the limit.
        let largest_r = if self.truncated { self.inscribed } else { 1e3 * self.inscribed.max(1.0) };
        let mut kind = RigidityKind::None;
        if dev <= tol {
            kind = RigidityKind::WarpedProductOnBall { r };
            match self.c_bar {
                Extended::Finite(c) => {
                    if ball_condition(self.params.kappa, self.params.lambda) && self.inscribed >= c - tol - self.delta_tau {
                        kind = RigidityKind::BallSpaceForm;
                        supporting.push("inscribed_radius".into());
                    }
                }
                Extended::Infinite => {
                    let v = self.geo.tube_volume(largest_r.min(self.inscribed))?;
                    let f = f_profile(&self.params, largest_r).unwrap_or(f64::INFINITY);
                    if v / f >= self.boundary_volume - tol * self.boundary_volume.max(1.0) {
                        kind = RigidityKind::VolumeGrowthSplitting;
                        supporting.push("volume_growth".into());
                    }
                }
            }
        }
        let boundary_ricci_margin = match self.geo.manifold() {
            Manifold::Warped(tube) => {
                let target = (self.params.n as f64 - 2.0) * (self.params.kappa + self.params.lambda * self.params.lambda);
                let mut m = f64::INFINITY;
                for side in tube.sides() {
                    m = m.min(boundary_ricci(self.geo.manifold(), side)? - target);
                }
                Some(m)
            }
            Manifold::Chart(_) => None,
        };
        let complement_volume_condition = if ball_condition(self.params.kappa, -self.params.lambda) {
            let flipped = self.params.with_lambda(-self.params.lambda);
            let radius = cut_radius(&flipped).min_with(f64::INFINITY);
            let model = unit_sphere_volume(self.params.n - 1) * s_point(self.params.kappa, radius).0.powi((self.params.n - 1) as i32);
            Some(self.boundary_volume >= model)
        } else {
            None
        };
        Ok(RigidityVerdict {
            kind,
            sup_deviation: dev,
            tolerance: tol,
            largest_r,
            supporting_checks: supporting,
            boundary_ricci_margin,
            complement_volume_condition,
        })
    }

    fn chain_radii(&self) -> (f64, f64) {
        let m = self.default_scale();
        self.config.chain.radii.unwrap_or((0.25 * m, 0.75 * m))
    }

    /// One check (several reports for parametrised checks).
    pub fn run_check(&self, check: CheckName) -> Result<Vec<CheckReport>> {
        Ok(match check {
            CheckName::LogJacobian => vec![self.check_log_jacobian()],
            CheckName::RelativeJacobian => vec![self.check_relative_jacobian()],
            CheckName::VolumeComparison => vec![self.check_volume_comparison()?],
            CheckName::HeintzeKarcher => vec![self.check_heintze_karcher()?],
            CheckName::VolumeGrowth => vec![self.check_volume_growth()?],
            CheckName::InscribedRadius => vec![self.check_inscribed_radius()],
            CheckName::MeasureContraction => {
                let mut out = Vec::new();
                for band in self.bands() {
                    for &t in &self.config.t_values {
                        out.push(self.check_measure_contraction(t, band)?);
                    }
                }
                out
            }
            CheckName::AnnulusChain => {
                let (r1, r2) = self.chain_radii();
                vec![self.check_annulus_chain(self.config.chain.t, r1, r2, self.config.chain.k_max)?]
            }
            CheckName::Segment => vec![self.check_segment()?],
            CheckName::Poincare => vec![self.check_poincare()?],
            CheckName::Isoperimetric => vec![self.check_isoperimetric()?],
            CheckName::EigenBounds => vec![self.check_eigen_bounds()?],
        })
    }
}

impl crate::tube_geometry::BoundaryRay {
    /// `τ₁` if finite, otherwise the end of the sampled profile.
    pub fn tau1_or_end(&self) -> f64 {
        self.profile.tau1.min_with(self.profile.end())
    }
}

/// Runs the configured checks concurrently, merges the reports in the
/// configured order, then runs the rigidity detection.
pub fn run_suite(cm: &CertifiedManifold, config: &SuiteConfig) -> Result<SuiteReport> {
    let verifier = Verifier::new(cm, config.clone())?;
    let checks = config.checks.clone().unwrap_or_else(|| CheckName::ALL.to_vec());
    let reports: Vec<CheckReport> = checks
        .par_iter()
        .map(|check| verifier.run_check(*check))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let verdict = verifier.detect_rigidity(config.rigidity_tolerance)?;
    Ok(SuiteReport { reports, verdict })
}
