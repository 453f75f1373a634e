//! Comparison functions and scalar constants for the model spaces
//! `M^n_{κ,λ}`.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate, sup_scan, Tolerance, SCAN_POINTS};

/// Dimension, Ricci lower bound `(n-1)κ` and mean-curvature lower bound `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonParams {
    pub n: usize,
    pub kappa: f64,
    pub lambda: f64,
}

impl ComparisonParams {
    pub fn new(n: usize, kappa: f64, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("dimension must be >= 2, got {n}")));
        }
        if !kappa.is_finite() || !lambda.is_finite() {
            return Err(Error::InvalidParams(format!("κ and λ must be finite, got ({kappa}, {lambda})")));
        }
        Ok(Self { n, kappa, lambda })
    }

    /// Same `n` and `κ` with a different `λ`.
    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    fn exponent(&self) -> i32 {
        self.n as i32 - 1
    }

    /// `κ < 0` and `λ = √|κ|` up to rounding: the case with an explicit
    /// Dirichlet constant and eigenvalue bound at `D = ∞`.
    pub fn is_rigid(&self) -> bool {
        let c = (-self.kappa).sqrt();
        self.kappa < 0.0 && (self.lambda - c).abs() <= 1e-12 * c.max(1.0)
    }
}

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// `min(self, v)` for finite `v`.
    pub fn min_with(self, v: f64) -> f64 {
        match self {
            Extended::Finite(c) => c.min(v),
            Extended::Infinite => v,
        }
    }

    /// `self <= v`, treating `∞` as larger than every real.
    pub fn le(self, v: f64) -> bool {
        self.finite().is_some_and(|c| c <= v)
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            Extended::Infinite
        } else {
            Extended::Finite(v)
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

/// The five shapes a model space `M^n_{κ,λ}` can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelCase {
    BallCap,
    BallComplement,
    ExponentialCusp,
    HyperbolicCollar,
    EuclideanHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSpaceDescriptor {
    pub params: ComparisonParams,
    pub case: ModelCase,
    /// `C_{κ,λ}` for a cap, `C_{κ,-λ}` for a complement, `t_{κ,λ}` for a collar.
    pub radius_parameter: Option<f64>,
}

impl ModelSpaceDescriptor {
    /// Warp of the model metric `dt² + w(t)² h` measured from the boundary.
    pub fn warp(&self, t: f64) -> (f64, f64) {
        s_boundary(&self.params, t)
    }
}

pub fn model_space(params: &ComparisonParams) -> ModelSpaceDescriptor {
    let (k, l) = (params.kappa, params.lambda);
    let c = (-k).max(0.0).sqrt();
    let (case, radius_parameter) = if ball_condition(k, l) {
        (ModelCase::BallCap, cut_radius(params).finite())
    } else if l < -c {
        (ModelCase::BallComplement, cut_radius(&params.with_lambda(-l)).finite())
    } else if l.abs() == c || (k < 0.0 && params.with_lambda(l.abs()).is_rigid()) {
        if k == 0.0 {
            (ModelCase::EuclideanHalf, None)
        } else {
            (ModelCase::ExponentialCusp, None)
        }
    } else {
        (ModelCase::HyperbolicCollar, collar_offset(k, l).ok())
    };
    ModelSpaceDescriptor {
        params: *params,
        case,
        radius_parameter,
    }
}

/// `s_κ` and its derivative: `f'' + κ f = 0`, `f(0) = 0`, `f'(0) = 1`.
pub fn s_point(kappa: f64, t: f64) -> (f64, f64) {
    if kappa > 0.0 {
        let c = kappa.sqrt();
        ((c * t).sin() / c, (c * t).cos())
    } else if kappa == 0.0 {
        (t, 1.0)
    } else {
        let c = (-kappa).sqrt();
        ((c * t).sinh() / c, (c * t).cosh())
    }
}

/// `s_{κ,λ}` and its derivative: `f'' + κ f = 0`, `f(0) = 1`, `f'(0) = -λ`.
pub fn s_boundary(params: &ComparisonParams, t: f64) -> (f64, f64) {
    comparison(params.kappa, params.lambda, t)
}

fn comparison(kappa: f64, lambda: f64, t: f64) -> (f64, f64) {
    if kappa > 0.0 {
        let c = kappa.sqrt();
        let (sn, cs) = (c * t).sin_cos();
        (cs - lambda / c * sn, -c * sn - lambda * cs)
    } else if kappa == 0.0 {
        (1.0 - lambda * t, -lambda)
    } else {
        // a e^{ct} + b e^{-ct}; written this way so e^{-t} stays exact for large t.
        let c = (-kappa).sqrt();
        let mut a = 0.5 * (1.0 - lambda / c);
        if a.abs() < 1e-14 {
            a = 0.0;
        }
        let b = 0.5 * (1.0 + lambda / c);
        let (up, down) = ((c * t).exp(), (-c * t).exp());
        let up_a = if a == 0.0 { 0.0 } else { a * up };
        (up_a + b * down, c * (up_a - b * down))
    }
}

pub fn ball_condition(kappa: f64, lambda: f64) -> bool {
    kappa > 0.0 || (kappa == 0.0 && lambda > 0.0) || (kappa < 0.0 && lambda > (-kappa).sqrt())
}

/// `C̄_{κ,λ}`: first positive zero of `s_{κ,λ}` under the ball condition,
/// `∞` otherwise.
pub fn cut_radius(params: &ComparisonParams) -> Extended {
    let (k, l) = (params.kappa, params.lambda);
    if !ball_condition(k, l) {
        return Extended::Infinite;
    }
    let c = k.abs().sqrt();
    let closed = if k > 0.0 {
        // cos(ct) - (λ/c) sin(ct) = 0 first at ct = atan2(c, λ) ∈ (0, π).
        c.atan2(l) / c
    } else if k == 0.0 {
        1.0 / l
    } else {
        (c / l).atanh() / c
    };
    Extended::Finite(closed)
}

/// `s̄_{κ,λ}`: `s_{κ,λ}` before the cut radius, zero from it on.
pub fn s_bar(params: &ComparisonParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("s̄ needs t >= 0, got {t}")));
    }
    if cut_radius(params).le(t) {
        return Ok(0.0);
    }
    Ok(s_boundary(params, t).0)
}

/// `s_{κ,λ}^{n-1}(t)`.
pub fn jacobian(params: &ComparisonParams, t: f64) -> f64 {
    s_boundary(params, t).0.powi(params.exponent())
}

/// `(n-1) s'/s`, the model mean curvature of the level set at distance `t`
/// with the sign of `θ'/θ`.
pub fn log_jacobian_derivative(params: &ComparisonParams, t: f64) -> f64 {
    let (s, ds) = s_boundary(params, t);
    (params.n - 1) as f64 * ds / s
}

// ∫_0^r s_{κ,λ} in closed form (n = 2).
fn primitive_n2(kappa: f64, lambda: f64, r: f64) -> f64 {
    if kappa > 0.0 {
        let c = kappa.sqrt();
        (c * r).sin() / c + lambda / kappa * ((c * r).cos() - 1.0)
    } else if kappa == 0.0 {
        r - 0.5 * lambda * r * r
    } else {
        let c = (-kappa).sqrt();
        let mut a = 0.5 * (1.0 - lambda / c);
        if a.abs() < 1e-14 {
            a = 0.0;
        }
        let b = 0.5 * (1.0 + lambda / c);
        let up = if a == 0.0 { 0.0 } else { a * (c * r).exp_m1() / c };
        up - b * (-c * r).exp_m1() / c
    }
}

/// `f_{n,κ,λ}(r) = ∫_0^r s̄^{n-1}`.
pub fn f_profile(params: &ComparisonParams, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("f needs r >= 0, got {r}")));
    }
    let upper = cut_radius(params).min_with(r);
    if params.n == 2 {
        return Ok(primitive_n2(params.kappa, params.lambda, upper));
    }
    jacobian_integral(params, 0.0, upper)
}

/// `∫_a^b s^{n-1}` by quadrature.
pub fn jacobian_integral(params: &ComparisonParams, a: f64, b: f64) -> Result<f64> {
    integrate(|u| jacobian(params, u), a, b, Tolerance::tight())
}

/// `t_{κ,λ} = artanh(-λ/√|κ|)/√|κ|` for the hyperbolic collar.
pub fn collar_offset(kappa: f64, lambda: f64) -> Result<f64> {
    let c = (-kappa).sqrt();
    if !(kappa < 0.0 && lambda.abs() < c) {
        return Err(Error::Domain(format!(
            "collar offset needs κ < 0 and |λ| < √|κ|, got ({kappa}, {lambda})"
        )));
    }
    Ok((-lambda / c).atanh() / c)
}

/// Running integrals of a smooth function over a uniform grid, panel by panel.
/// Both directions are kept so tails stay accurate when the head dominates.
struct Cumulative<'a> {
    f: &'a dyn Fn(f64) -> f64,
    nodes: Vec<f64>,
    // prefix[i] = ∫_{nodes[0]}^{nodes[i]} f, suffix[i] = ∫_{nodes[i]}^{b} f
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

impl<'a> Cumulative<'a> {
    fn new(f: &'a dyn Fn(f64) -> f64, a: f64, b: f64, points: usize) -> Result<Self> {
        let h = (b - a) / (points - 1) as f64;
        let nodes: Vec<f64> = (0..points)
            .map(|i| if i + 1 == points { b } else { a + h * i as f64 })
            .collect();
        let pieces = nodes
            .windows(2)
            .map(|w| integrate(f, w[0], w[1], Tolerance::tight()))
            .collect::<Result<Vec<f64>>>()?;
        let mut prefix = vec![0.0; points];
        let mut suffix = vec![0.0; points];
        for i in 0..points - 1 {
            prefix[i + 1] = prefix[i] + pieces[i];
        }
        for i in (0..points - 1).rev() {
            suffix[i] = suffix[i + 1] + pieces[i];
        }
        Ok(Self {
            f,
            nodes,
            prefix,
            suffix,
        })
    }

    fn cell(&self, t: f64) -> usize {
        let a = self.nodes[0];
        let h = self.nodes[1] - a;
        (((t - a) / h).floor().max(0.0) as usize).min(self.nodes.len() - 2)
    }

    fn piece(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        integrate(self.f, a, b, Tolerance::tight()).unwrap_or(f64::NAN)
    }

    /// `∫_{a}^{t}`.
    fn upto(&self, t: f64) -> f64 {
        let i = self.cell(t);
        self.prefix[i] + self.piece(self.nodes[i], t)
    }

    /// `∫_{t}^{b}`.
    fn from(&self, t: f64) -> f64 {
        let i = self.cell(t);
        self.suffix[i + 1] + self.piece(t, self.nodes[i + 1])
    }
}

fn check_depth(params: &ComparisonParams, d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("D must be positive and finite, got {d}")));
    }
    if let Extended::Finite(c) = cut_radius(params) {
        if d > c * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("D = {d} exceeds the cut radius {c}")));
        }
    }
    Ok(())
}

/// `C(n,κ,λ,D) = sup_{t∈[0,D)} ∫_t^D s^{n-1} / s^{n-1}(t)`.
///
/// The rigid case `κ < 0, λ = √|κ|` uses the closed form and admits `D = ∞`.
pub fn dirichlet_constant(params: &ComparisonParams, d: Extended) -> Result<f64> {
    let a = (params.n - 1) as f64 * params.lambda;
    match d {
        Extended::Infinite if params.is_rigid() => Ok(1.0 / a),
        Extended::Infinite => Err(Error::Domain(
            "D = ∞ is only admissible for κ < 0 and λ = √|κ|".into(),
        )),
        Extended::Finite(d) => {
            check_depth(params, d)?;
            if params.is_rigid() {
                Ok(-(-a * d).exp_m1() / a)
            } else {
                dirichlet_constant_scan(params, d)
            }
        }
    }
}

/// The grid-scan evaluation of [`dirichlet_constant`], for any finite `D`.
pub fn dirichlet_constant_scan(params: &ComparisonParams, d: f64) -> Result<f64> {
    check_depth(params, d)?;
    let end = d - 1e-9 * d;
    let f = |u: f64| jacobian(params, u);
    let cum = Cumulative::new(&f, 0.0, d, SCAN_POINTS)?;
    let ratio = |t: f64| cum.from(t) / jacobian(params, t);
    let sup = sup_scan(ratio, 0.0, end, SCAN_POINTS);
    if !sup.value.is_finite() {
        return Err(Error::Domain(format!("Dirichlet ratio not finite at t = {}", sup.arg)));
    }
    Ok(sup.value)
}

// min of s on [0, l]; s is concave (κ > 0), affine (κ = 0) or convex (κ < 0)
// while positive.
fn min_on_prefix(params: &ComparisonParams, l: f64, critical: Option<f64>) -> f64 {
    let ends = s_boundary(params, 0.0).0.min(s_boundary(params, l).0);
    match critical {
        Some(tc) if tc <= l => ends.min(s_boundary(params, tc).0),
        _ => ends,
    }
}

/// `C₁(n,κ,λ,D) = sup_{0<t<l<D} s^{n-1}(l)/s^{n-1}(t)`.
pub fn segment_constant(params: &ComparisonParams, d: f64) -> Result<f64> {
    check_depth(params, d)?;
    let ds0 = s_boundary(params, 0.0).1;
    let dsd = s_boundary(params, d).1;
    if ds0 <= 0.0 && dsd <= 0.0 {
        return Ok(1.0);
    }
    // Interior critical point of s for κ < 0 (where s' changes sign).
    let critical = if params.kappa < 0.0 && ds0 < 0.0 && dsd > 0.0 {
        Some(find_root(|u| s_boundary(params, u).1, 0.0, d, Tolerance::tight())?)
    } else {
        None
    };
    let ratio = |l: f64| s_boundary(params, l).0 / min_on_prefix(params, l, critical);
    let sup = sup_scan(ratio, 0.0, d, SCAN_POINTS);
    Ok(sup.value.max(1.0).powi(params.exponent()))
}

/// Kasue's `μ̄_{n,κ,λ,D} = (4 sup_t ∫_t^D s^{n-1} ∫_0^t s^{1-n})^{-1}`.
pub fn kasue_bar_mu(params: &ComparisonParams, d: f64) -> Result<f64> {
    check_depth(params, d)?;
    let end = d - 1e-9 * d;
    let up = |u: f64| jacobian(params, u);
    let down = |u: f64| 1.0 / jacobian(params, u);
    let big = Cumulative::new(&up, 0.0, d, SCAN_POINTS)?;
    let small = Cumulative::new(&down, 0.0, end, SCAN_POINTS)?;
    let product = |t: f64| big.from(t) * small.upto(t);
    let sup = sup_scan(product, 0.0, end, SCAN_POINTS);
    if !(sup.value > 0.0) || !sup.value.is_finite() {
        return Err(Error::Domain(format!("Kasue product degenerate (sup = {})", sup.value)));
    }
    Ok(0.25 / sup.value)
}

/// Which lower bound for `μ_{1,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// `(p C(n,κ,λ,D))^{-p}`.
    Dirichlet,
    /// `(p C₁(n,κ,λ,D) D)^{-p}`.
    Segment,
    /// `((n-1)λ/p)^p` for `κ < 0, λ = √|κ|`.
    Rigid,
}

pub fn eigen_lower_bound(params: &ComparisonParams, d: Extended, p: f64, variant: BoundVariant) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("p must lie in (1, ∞), got {p}")));
    }
    match variant {
        BoundVariant::Dirichlet => Ok((p * dirichlet_constant(params, d)?).powf(-p)),
        BoundVariant::Segment => {
            let d = d
                .finite()
                .ok_or_else(|| Error::Domain("segment bound needs finite D".into()))?;
            Ok((p * segment_constant(params, d)? * d).powf(-p))
        }
        BoundVariant::Rigid => {
            if !params.is_rigid() {
                return Err(Error::Domain(format!(
                    "rigid bound needs κ < 0 and λ = √|κ|, got ({}, {})",
                    params.kappa, params.lambda
                )));
            }
            Ok(((params.n - 1) as f64 * params.lambda / p).powf(p))
        }
    }
}

/// `φ_{n,κ,λ}(t) = t e^{(n-1)λt/2}` and its derivative.
pub fn phi_profile(params: &ComparisonParams, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("φ needs t >= 0, got {t}")));
    }
    let a = 0.5 * (params.n - 1) as f64 * params.lambda;
    let e = (a * t).exp();
    Ok((t * e, e * (1.0 + a * t)))
}

/// `f_{n,κ,λ}(R) / f_{n,κ,λ}(r)`, the model tube-volume ratio.
pub fn model_ratio(params: &ComparisonParams, r: f64, big_r: f64) -> Result<f64> {
    if !(r > 0.0) || !(r <= big_r) {
        return Err(Error::Domain(format!("model ratio needs 0 < r <= R, got ({r}, {big_r})")));
    }
    if r == big_r {
        return Ok(1.0);
    }
    Ok(f_profile(params, big_r)? / f_profile(params, r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::{E, FRAC_PI_2, PI};

    fn params(n: usize, k: f64, l: f64) -> ComparisonParams {
        ComparisonParams::new(n, k, l).unwrap()
    }

    fn series_sinh_cosh(t: f64) -> (f64, f64) {
        let (mut sh, mut ch) = (0.0, 0.0);
        let mut term = 1.0;
        for k in 0..40 {
            if k % 2 == 0 {
                ch += term;
            } else {
                sh += term;
            }
            term *= t / (k + 1) as f64;
        }
        (sh, ch)
    }

    #[test]
    fn params_validated() {
        assert!(ComparisonParams::new(1, 0.0, 0.0).is_err());
        assert!(ComparisonParams::new(2, f64::NAN, 0.0).is_err());
        assert!(ComparisonParams::new(2, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn point_type_comparison() {
        assert_eq!(s_point(0.0, 2.0), (2.0, 1.0));
        let (v, d) = s_point(1.0, PI);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d, -1.0, epsilon = 1e-15);
        let (sh, ch) = series_sinh_cosh(1.0);
        let (v, d) = s_point(-1.0, 1.0);
        assert_relative_eq!(v, sh, max_relative = 1e-15);
        assert_relative_eq!(d, ch, max_relative = 1e-15);
        assert_relative_eq!(v, 1.175_201_2, max_relative = 1e-7);
    }

    #[test]
    fn boundary_type_comparison() {
        assert_eq!(s_boundary(&params(2, 0.0, 1.0), 0.25), (0.75, -1.0));
        let (v, d) = s_boundary(&params(2, -1.0, 1.0), 3.0);
        assert_eq!(v, (-3.0f64).exp());
        assert_eq!(d, -(-3.0f64).exp());
        let (v, d) = s_boundary(&params(2, 1.0, 0.0), PI / 3.0);
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d, -(3.0f64).sqrt() / 2.0, epsilon = 1e-15);
        // exact e^{-t} deep into the collar
        assert_eq!(s_boundary(&params(2, -1.0, 1.0), 40.0).0, (-40.0f64).exp());
    }

    #[test]
    fn ball_condition_cases() {
        assert!(ball_condition(1.0, -5.0));
        assert!(!ball_condition(0.0, 0.0));
        assert!(ball_condition(-1.0, 2.0));
        assert!(!ball_condition(-1.0, 1.0));
        assert!(ball_condition(0.0, 0.1));
    }

    fn bisect_zero(p: &ComparisonParams, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if s_boundary(p, lo).0.signum() == s_boundary(p, mid).0.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cut_radius_values() {
        assert_eq!(cut_radius(&params(2, 0.0, 2.0)), Extended::Finite(0.5));
        assert_abs_diff_eq!(cut_radius(&params(2, 1.0, 0.0)).finite().unwrap(), FRAC_PI_2, epsilon = 1e-15);
        let p = params(2, -1.0, 2.0);
        let oracle = bisect_zero(&p, 0.0, 2.0);
        assert_abs_diff_eq!(oracle, 0.549_306_1, epsilon = 1e-7);
        assert_abs_diff_eq!(cut_radius(&p).finite().unwrap(), oracle, epsilon = 1e-12);
        assert_eq!(cut_radius(&params(2, -1.0, 1.0)), Extended::Infinite);
    }

    #[test]
    fn cut_radius_negative_lambda_branch() {
        // κ > 0, λ < 0: first zero lies in (π/2c, π/c).
        let p = params(2, 4.0, -3.0);
        let c = cut_radius(&p).finite().unwrap();
        assert!(c > PI / 4.0 && c < PI / 2.0);
        let grid_first_zero = (1..200_000)
            .map(|i| i as f64 * 1e-5)
            .find(|t| s_boundary(&p, *t).0 <= 0.0)
            .unwrap();
        assert_abs_diff_eq!(c, grid_first_zero, epsilon = 1e-5);
    }

    #[test]
    fn s_bar_values() {
        assert_eq!(s_bar(&params(2, 0.0, 1.0), 2.0).unwrap(), 0.0);
        assert_eq!(s_bar(&params(2, 0.0, 1.0), 0.5).unwrap(), 0.5);
        assert_eq!(s_bar(&params(2, -1.0, 1.0), 3.0).unwrap(), (-3.0f64).exp());
        assert!(s_bar(&params(2, 0.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn f_profile_values() {
        assert_relative_eq!(f_profile(&params(2, 0.0, 0.0), 2.0).unwrap(), 2.0);
        assert_relative_eq!(f_profile(&params(2, 0.0, 1.0), 5.0).unwrap(), 0.5);
        assert_relative_eq!(f_profile(&params(2, -1.0, 1.0), 1.0).unwrap(), 1.0 - (-1.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn n2_primitive_agrees_with_quadrature() {
        for (k, l, r) in [(1.0, 0.3, 1.0), (0.0, -1.0, 2.0), (-1.0, 0.4, 3.0), (-2.0, -3.0, 1.5), (-1.0, 2.0, 0.5)] {
            let p = params(2, k, l);
            let upper = cut_radius(&p).min_with(r);
            let q = jacobian_integral(&p, 0.0, upper).unwrap();
            assert_relative_eq!(f_profile(&p, r).unwrap(), q, max_relative = 1e-11);
        }
    }

    #[test]
    fn collar_offset_values() {
        assert_eq!(collar_offset(-1.0, 0.0).unwrap(), 0.0);
        assert_eq!(collar_offset(-4.0, 0.0).unwrap(), 0.0);
        let root = find_root(
            |t| {
                let (s, ds) = comparison(-1.0, 0.0, t);
                ds / s - 0.5
            },
            0.0,
            3.0,
            Tolerance::tight(),
        )
        .unwrap();
        assert_abs_diff_eq!(collar_offset(-1.0, -0.5).unwrap(), root, epsilon = 1e-12);
        assert!(collar_offset(-1.0, 1.0).is_err());
        assert!(collar_offset(1.0, 0.0).is_err());
    }

    #[test]
    fn model_cases() {
        let case = |k, l| model_space(&params(2, k, l)).case;
        assert_eq!(case(1.0, -2.0), ModelCase::BallCap);
        assert_eq!(case(0.0, 1.0), ModelCase::BallCap);
        assert_eq!(case(0.0, -1.0), ModelCase::BallComplement);
        assert_eq!(case(-1.0, -2.0), ModelCase::BallComplement);
        assert_eq!(case(0.0, 0.0), ModelCase::EuclideanHalf);
        assert_eq!(case(-1.0, 1.0), ModelCase::ExponentialCusp);
        assert_eq!(case(-1.0, -1.0), ModelCase::ExponentialCusp);
        assert_eq!(case(-1.0, 0.5), ModelCase::HyperbolicCollar);
        let m = model_space(&params(2, 0.0, -2.0));
        assert_eq!(m.radius_parameter, Some(0.5));
        let m = model_space(&params(2, -1.0, -0.5));
        assert_abs_diff_eq!(m.radius_parameter.unwrap(), 0.5f64.atanh(), epsilon = 1e-15);
    }

    #[test]
    fn model_warps_have_mean_curvature_lambda() {
        for (k, l) in [(1.0, -0.7), (0.0, 0.5), (0.0, -1.0), (-1.0, -2.0), (0.0, 0.0), (-1.0, 1.0), (-1.0, 0.3)] {
            let m = model_space(&params(3, k, l));
            let (w, dw) = m.warp(0.0);
            assert_abs_diff_eq!(-dw / w, l, epsilon = 1e-15);
        }
    }

    #[test]
    fn collar_warp_matches_shifted_cosh() {
        let p = params(2, -1.0, 0.4);
        let t0 = collar_offset(-1.0, 0.4).unwrap();
        for t in [0.0, 0.3, 2.0, 7.0] {
            let expect = (t + t0).cosh() / t0.cosh();
            assert_relative_eq!(s_boundary(&p, t).0, expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn dirichlet_constant_values() {
        let p = params(2, -1.0, 1.0);
        let c = dirichlet_constant(&p, Extended::Finite(1.0)).unwrap();
        assert_abs_diff_eq!(c, 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        for d in [0.5, 1.0, 2.0] {
            let scan = dirichlet_constant_scan(&p, d).unwrap();
            assert_abs_diff_eq!(scan, 1.0 - (-d).exp(), epsilon = 1e-9);
        }
        assert_abs_diff_eq!(dirichlet_constant(&params(3, -1.0, 1.0), Extended::Infinite).unwrap(), 0.5);
        assert!(dirichlet_constant(&params(2, 0.0, 0.0), Extended::Infinite).is_err());
        assert!(dirichlet_constant(&params(2, 0.0, 1.0), Extended::Finite(1.5)).is_err());
    }

    #[test]
    fn dirichlet_constant_matches_grid_oracle() {
        // (1-t)(3+t)/(2(1+t)) on [0,1), sup at t = 0.
        let oracle = (0..100_000)
            .map(|i| {
                let t = i as f64 * 1e-5;
                (1.0 - t) * (3.0 + t) / (2.0 * (1.0 + t))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(oracle, 1.5);
        let c = dirichlet_constant(&params(2, 0.0, -1.0), Extended::Finite(1.0)).unwrap();
        assert_abs_diff_eq!(c, oracle, epsilon = 1e-12);
    }

    #[test]
    fn segment_constant_values() {
        assert_eq!(segment_constant(&params(2, 0.0, 0.0), 2.0).unwrap(), 1.0);
        assert_eq!(segment_constant(&params(2, 0.0, 1.0), 0.5).unwrap(), 1.0);
        let c = segment_constant(&params(2, -1.0, -0.5), 1.0).unwrap();
        assert_abs_diff_eq!(c, 1f64.cosh() + 0.5 * 1f64.sinh(), epsilon = 1e-12);
    }

    fn nested_segment_oracle(p: &ComparisonParams, d: f64, n: usize) -> f64 {
        let s: Vec<f64> = (0..=n).map(|i| s_boundary(p, d * i as f64 / n as f64).0).collect();
        let mut best: f64 = 1.0;
        let mut running_min = s[0];
        for v in &s[1..] {
            running_min = running_min.min(*v);
            best = best.max(v / running_min);
        }
        best.powi(p.n as i32 - 1)
    }

    #[test]
    fn segment_constant_with_interior_minimum() {
        // κ < 0, λ slightly above zero: s dips then grows.
        let p = params(3, -1.0, 0.5);
        let c = segment_constant(&p, 2.0).unwrap();
        let oracle = nested_segment_oracle(&p, 2.0, 200_000);
        assert_relative_eq!(c, oracle, max_relative = 1e-8);
    }

    fn kasue_trapezoid_oracle(p: &ComparisonParams, d: f64, n: usize) -> f64 {
        let h = d / n as f64;
        let up: Vec<f64> = (0..=n).map(|i| jacobian(p, h * i as f64)).collect();
        let mut tail = vec![0.0; n + 1];
        for i in (0..n).rev() {
            tail[i] = tail[i + 1] + 0.5 * h * (up[i] + up[i + 1]);
        }
        let mut head = 0.0;
        let mut best: f64 = 0.0;
        for i in 1..n {
            head += 0.5 * h * (1.0 / up[i - 1] + 1.0 / up[i]);
            best = best.max(tail[i] * head);
        }
        0.25 / best
    }

    #[test]
    fn kasue_closed_form_and_oracle() {
        let p = params(2, -1.0, 1.0);
        let mu = kasue_bar_mu(&p, 1.0).unwrap();
        assert_abs_diff_eq!(mu, 0.25 / (1.0 - (-0.5f64).exp()).powi(2), epsilon = 1e-9);
        let far = kasue_bar_mu(&p, 60.0).unwrap();
        assert_abs_diff_eq!(far, 0.25, epsilon = 1e-9);

        let q = params(2, 0.0, -1.0);
        let oracle = kasue_trapezoid_oracle(&q, 1.0, 10_000);
        assert_relative_eq!(kasue_bar_mu(&q, 1.0).unwrap(), oracle, max_relative = 1e-6);
    }

    #[test]
    fn eigen_bounds() {
        let p = params(2, -1.0, 1.0);
        assert_abs_diff_eq!(eigen_lower_bound(&p, Extended::Infinite, 2.0, BoundVariant::Dirichlet).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(eigen_lower_bound(&p, Extended::Infinite, 2.0, BoundVariant::Rigid).unwrap(), 0.25);
        let q = params(2, 0.0, -1.0);
        assert_abs_diff_eq!(
            eigen_lower_bound(&q, Extended::Finite(1.0), 2.0, BoundVariant::Dirichlet).unwrap(),
            1.0 / 9.0,
            epsilon = 1e-12
        );
        let r = params(3, -1.0, 1.0);
        assert_abs_diff_eq!(
            eigen_lower_bound(&r, Extended::Infinite, 3.0, BoundVariant::Rigid).unwrap(),
            8.0 / 27.0,
            epsilon = 1e-15
        );
        assert!(eigen_lower_bound(&q, Extended::Finite(1.0), 1.0, BoundVariant::Dirichlet).is_err());
        assert!(eigen_lower_bound(&q, Extended::Finite(1.0), 2.0, BoundVariant::Rigid).is_err());
        assert!(eigen_lower_bound(&p, Extended::Infinite, 2.0, BoundVariant::Segment).is_err());
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi_profile(&params(2, -1.0, 1.0), 0.0).unwrap().0, 0.0);
        assert_eq!(phi_profile(&params(2, 0.0, 0.0), 5.0).unwrap().0, 5.0);
        assert_relative_eq!(phi_profile(&params(2, -1.0, 1.0), 2.0).unwrap().0, 2.0 * E, max_relative = 1e-15);
        assert!(phi_profile(&params(2, 0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn model_ratio_values() {
        assert_relative_eq!(model_ratio(&params(2, 0.0, 0.0), 1.0, 3.0).unwrap(), 3.0);
        assert_eq!(model_ratio(&params(3, -1.0, 0.2), 0.7, 0.7).unwrap(), 1.0);
        assert_relative_eq!(model_ratio(&params(2, 0.0, 1.0), 0.5, 1.0).unwrap(), 4.0 / 3.0, max_relative = 1e-14);
        assert!(model_ratio(&params(2, 0.0, 0.0), 2.0, 1.0).is_err());
        assert!(model_ratio(&params(2, 0.0, 0.0), 0.0, 1.0).is_err());
    }

    fn grid_params() -> Vec<(ComparisonParams, f64)> {
        let mut out = Vec::new();
        for n in [2, 3] {
            for k in [-1.0, 0.0] {
                for l in [-1.0, 0.0, 1.0] {
                    let p = params(n, k, l);
                    let cap = cut_radius(&p).min_with(2.0);
                    for frac in [0.3, 0.6, 0.9] {
                        out.push((p, frac * cap));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn bound_ordering_on_grid() {
        for (p, d) in grid_params() {
            let c = dirichlet_constant(&p, Extended::Finite(d)).unwrap();
            let c1 = segment_constant(&p, d).unwrap();
            assert!(c <= c1 * d + 1e-9, "{p:?} D={d}: C={c} C1·D={}", c1 * d);
            let mu = kasue_bar_mu(&p, d).unwrap();
            assert!(mu >= (2.0 * c).powi(-2) - 1e-9, "{p:?} D={d}: μ̄={mu} (2C)^-2={}", (2.0 * c).powi(-2));
        }
    }

    proptest! {
        #[test]
        fn s_boundary_solves_jacobi_equation(k in -2.0f64..2.0, l in -2.0f64..2.0, t in 0.0f64..1.5) {
            let p = params(2, k, l);
            let h = 1e-4;
            let f = |u: f64| s_boundary(&p, u).0;
            let second = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            prop_assert!((second + k * f(t)).abs() <= 1e-6 * (1.0 + f(t).abs()));
        }

        #[test]
        fn wronskian_is_minus_lambda(k in -2.0f64..2.0, l in -2.0f64..2.0, t in 0.0f64..3.0) {
            let (a, da) = comparison(k, 0.0, t);
            let (b, db) = comparison(k, l, t);
            let w = a * db - da * b;
            prop_assert!((w + l).abs() <= 1e-9 * (1.0 + a.abs() * b.abs()));
        }

        #[test]
        fn cut_radius_is_a_zero(k in -2.0f64..2.0, l in -3.0f64..3.0) {
            let p = params(2, k, l);
            if let Extended::Finite(c) = cut_radius(&p) {
                prop_assert!(c > 0.0);
                prop_assert!(s_boundary(&p, c).0.abs() <= 1e-10);
                prop_assert!(s_boundary(&p, 0.5 * c).0 > 0.0);
            }
        }

        #[test]
        fn f_profile_monotone_and_saturates(n in 2usize..4, k in -1.0f64..1.0, l in 0.1f64..2.0, r in 0.0f64..3.0) {
            let p = params(n, k, l);
            prop_assume!(ball_condition(k, l));
            let a = f_profile(&p, r).unwrap();
            let b = f_profile(&p, r + 0.1).unwrap();
            prop_assert!(b >= a - 1e-14);
            let c = cut_radius(&p).finite().unwrap();
            let sat = f_profile(&p, c).unwrap();
            prop_assert!((f_profile(&p, c + 1.0 + r).unwrap() - sat).abs() <= 1e-14 * sat.max(1.0));
        }

        #[test]
        fn model_ratio_cocycle(k in -1.0f64..1.0, l in -1.0f64..1.0, r in 0.05f64..1.0, g1 in 1.0f64..2.0, g2 in 1.0f64..2.0) {
            let p = params(3, k, l);
            let (big, s) = (r * g1, r * g1 * g2);
            let lhs = model_ratio(&p, r, big).unwrap() * model_ratio(&p, big, s).unwrap();
            let rhs = model_ratio(&p, r, s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
        }
    }
}
