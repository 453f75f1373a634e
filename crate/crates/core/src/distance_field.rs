//! Distance to the boundary on chart surfaces by first-order fast marching.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifolds::{BoundaryPoint, ChartSurface2D, RayProfile, Side};
use crate::numerics::maximize_golden;

/// Default cut-time matching constant: a ray stops minimizing once
/// `ρ(γ(t)) < t - c·h`.
pub const CUT_MATCH_CONSTANT: f64 = 4.0;

/// Cell-centred grid over `[t_lo, t_hi] × [0, period)`, periodic in `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid2D {
    pub nt: usize,
    pub nx: usize,
    pub t_samples: Vec<f64>,
    pub x_samples: Vec<f64>,
    pub periodic_x: bool,
    /// Row-major over `(i_t, j_x)`.
    pub inside_mask: Vec<bool>,
    pub ht: f64,
    pub hx: f64,
    pub t_lo: f64,
}

impl Grid2D {
    /// Grid covering the chart region with `nt × nx` cells.
    pub fn new(surface: &ChartSurface2D, nt: usize, nx: usize) -> Result<Self> {
        if nt < 4 || nx < 4 {
            return Err(Error::InvalidParams(format!("grid needs at least 4x4 cells, got {nt}x{nx}")));
        }
        let (t_lo, t_hi) = surface.t_range();
        let ht = (t_hi - t_lo) / nt as f64;
        let hx = surface.period / nx as f64;
        let t_samples: Vec<f64> = (0..nt).map(|i| t_lo + (i as f64 + 0.5) * ht).collect();
        let x_samples: Vec<f64> = (0..nx).map(|j| j as f64 * hx).collect();
        let mut inside_mask = Vec::with_capacity(nt * nx);
        for t in &t_samples {
            for x in &x_samples {
                inside_mask.push(surface.contains(*t, *x));
            }
        }
        Ok(Self {
            nt,
            nx,
            t_samples,
            x_samples,
            periodic_x: true,
            inside_mask,
            ht,
            hx,
            t_lo,
        })
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nx + j
    }

    pub fn len(&self) -> usize {
        self.nt * self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn inside(&self, i: usize, j: usize) -> bool {
        self.inside_mask[self.index(i, j)]
    }

    /// 4-neighbours `(i, j)`, wrapping in `x`; `None` past the `t` ends.
    fn neighbours(&self, i: usize, j: usize) -> [Option<(usize, usize)>; 4] {
        let left = (j + self.nx - 1) % self.nx;
        let right = (j + 1) % self.nx;
        [
            i.checked_sub(1).map(|a| (a, j)),
            (i + 1 < self.nt).then_some((i + 1, j)),
            Some((i, left)),
            Some((i, right)),
        ]
    }

    fn boundary_adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbours(i, j)
            .iter()
            .any(|n| n.map_or(true, |(a, b)| !self.inside(a, b)))
    }

    /// Fractional cell coordinates of `(t, x)`: node `(i, j)` sits at `(i, j)`.
    fn cell_coords(&self, t: f64, x: f64) -> (f64, f64) {
        let u = (t - self.t_lo) / self.ht - 0.5;
        let v = x.rem_euclid(self.nx as f64 * self.hx) / self.hx;
        (u, v)
    }
}

/// `ρ_∂M` on grid nodes plus the boundary component each value came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceField {
    pub grid: Grid2D,
    /// Inside nodes: `ρ ≥ 0`. Outside nodes next to the region: minus the
    /// local distance to the boundary. Other outside nodes: NaN.
    pub rho: Vec<f64>,
    pub source_component: Vec<Option<Side>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Front {
    value: f64,
    node: usize,
}

impl Eq for Front {}

impl Ord for Front {
    // Min-heap on value, ties broken by lower node index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Front {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distance from `(t, x)` to the graph of `side` with the metric frozen at
/// the point, minimized over `x' ∈ [x - radius, x + radius]`. Returns
/// `(distance, x')`.
fn local_curve_distance(surface: &ChartSurface2D, side: Side, t: f64, x: f64, radius: f64) -> (f64, f64) {
    let g = surface.g(t, x);
    let dist2 = |xp: f64| {
        let b = surface.graph(side, xp).beta;
        (t - b).powi(2) + g * (x - xp).powi(2)
    };
    const SCAN: usize = 32;
    let mut best = (f64::INFINITY, x);
    for k in 0..=SCAN {
        let xp = x - radius + 2.0 * radius * k as f64 / SCAN as f64;
        let d = dist2(xp);
        if d < best.0 {
            best = (d, xp);
        }
    }
    let step = 2.0 * radius / SCAN as f64;
    let (xp, neg) = maximize_golden(|xp| -dist2(xp), best.1 - step, best.1 + step, 1e-12 * radius.max(1.0));
    if -neg < best.0 {
        best = (-neg, xp);
    }
    (best.0.sqrt(), best.1)
}

/// Solves `‖∇ρ‖_g = 1` with `ρ = 0` on both boundary graphs.
///
/// Boundary-adjacent nodes start from their local distance to the nearer
/// graph; the rest is filled by an upwind fast-marching sweep.
pub fn solve_eikonal(surface: &ChartSurface2D, grid: &Grid2D) -> Result<DistanceField> {
    let n = grid.len();
    let mut rho = vec![f64::NAN; n];
    let mut source = vec![None; n];
    let mut accepted = vec![false; n];
    let mut heap = BinaryHeap::new();
    let radius = 4.0 * grid.hx.max(grid.ht);
    let nearest = |t: f64, x: f64| {
        let lo = local_curve_distance(surface, Side::Lower, t, x, radius).0;
        let hi = local_curve_distance(surface, Side::Upper, t, x, radius).0;
        if lo <= hi {
            (lo, Side::Lower)
        } else {
            (hi, Side::Upper)
        }
    };
    for i in 0..grid.nt {
        for j in 0..grid.nx {
            let k = grid.index(i, j);
            let (t, x) = (grid.t_samples[i], grid.x_samples[j]);
            if grid.inside(i, j) {
                if grid.boundary_adjacent(i, j) {
                    let (d, side) = nearest(t, x);
                    rho[k] = d;
                    source[k] = Some(side);
                    accepted[k] = true;
                }
            } else if grid.neighbours(i, j).iter().flatten().any(|&(a, b)| grid.inside(a, b)) {
                rho[k] = -nearest(t, x).0;
            }
        }
    }
    let g_at = |i: usize, j: usize| surface.g(grid.t_samples[i], grid.x_samples[j]);
    let update = |rho: &[f64], accepted: &[bool], source: &[Option<Side>], i: usize, j: usize| -> (f64, Option<Side>) {
        let hx_g = grid.hx * g_at(i, j).sqrt();
        let best = |pair: [Option<(usize, usize)>; 2]| -> Option<(f64, Option<Side>)> {
            pair.iter()
                .flatten()
                .map(|&(a, b)| grid.index(a, b))
                .filter(|&m| accepted[m])
                .map(|m| (rho[m], source[m]))
                .min_by(|p, q| p.0.total_cmp(&q.0))
        };
        let nb = grid.neighbours(i, j);
        let along_t = best([nb[0], nb[1]]);
        let along_x = best([nb[2], nb[3]]);
        match (along_t, along_x) {
            (Some((a, sa)), Some((b, sb))) => {
                // ((u-a)/ht)² + ((u-b)/hx_g)² = 1 when both directions are upwind.
                let (p, q) = (grid.ht * grid.ht, hx_g * hx_g);
                let s = p + q;
                let disc = s - (a - b) * (a - b);
                let src = if a <= b { sa } else { sb };
                if disc > 0.0 {
                    let u = (a * q + b * p + (p * q * disc).sqrt()) / s;
                    if u >= a.max(b) {
                        return (u, src);
                    }
                }
                let (ua, ub) = (a + grid.ht, b + hx_g);
                if ua <= ub {
                    (ua, sa)
                } else {
                    (ub, sb)
                }
            }
            (Some((a, sa)), None) => (a + grid.ht, sa),
            (None, Some((b, sb))) => (b + hx_g, sb),
            (None, None) => (f64::INFINITY, None),
        }
    };
    let push_neighbours = |rho: &mut Vec<f64>,
                           source: &mut Vec<Option<Side>>,
                           accepted: &[bool],
                           heap: &mut BinaryHeap<Front>,
                           i: usize,
                           j: usize| {
        for (a, b) in grid.neighbours(i, j).into_iter().flatten() {
            let m = grid.index(a, b);
            if accepted[m] || !grid.inside(a, b) {
                continue;
            }
            let (u, src) = update(rho, accepted, source, a, b);
            if rho[m].is_nan() || u < rho[m] {
                rho[m] = u;
                source[m] = src;
                heap.push(Front { value: u, node: m });
            }
        }
    };
    for k in 0..n {
        if accepted[k] && grid.inside_mask[k] {
            push_neighbours(&mut rho, &mut source, &accepted, &mut heap, k / grid.nx, k % grid.nx);
        }
    }
    while let Some(Front { value, node }) = heap.pop() {
        if accepted[node] || value > rho[node] {
            continue;
        }
        accepted[node] = true;
        push_neighbours(&mut rho, &mut source, &accepted, &mut heap, node / grid.nx, node % grid.nx);
    }
    let unreachable = (0..n).filter(|&k| grid.inside_mask[k] && !accepted[k]).count();
    if unreachable > 0 {
        return Err(Error::Unreachable(unreachable));
    }
    Ok(DistanceField {
        grid: grid.clone(),
        rho,
        source_component: source,
    })
}

impl DistanceField {
    /// Grid spacing in `g`-length at `(t, x)`.
    pub fn spacing_at(&self, surface: &ChartSurface2D, t: f64, x: f64) -> f64 {
        self.grid.ht.max(self.grid.hx * surface.g(t, x).sqrt())
    }

    fn corners(&self, t: f64, x: f64) -> ([usize; 4], f64, f64) {
        let g = &self.grid;
        let (u, v) = g.cell_coords(t, x);
        let i0 = (u.floor().max(0.0) as usize).min(g.nt - 2);
        let fu = (u - i0 as f64).clamp(0.0, 1.0);
        let j0 = (v.floor() as usize) % g.nx;
        let fv = v - v.floor();
        let j1 = (j0 + 1) % g.nx;
        (
            [g.index(i0, j0), g.index(i0, j1), g.index(i0 + 1, j0), g.index(i0 + 1, j1)],
            fu,
            fv,
        )
    }

    /// Bilinear interpolation of `ρ`; corners without a value are dropped
    /// and the remaining weights renormalised.
    pub fn rho_at(&self, t: f64, x: f64) -> f64 {
        let (c, fu, fv) = self.corners(t, x);
        let w = [(1.0 - fu) * (1.0 - fv), (1.0 - fu) * fv, fu * (1.0 - fv), fu * fv];
        let (mut num, mut den) = (0.0, 0.0);
        for (k, wk) in c.iter().zip(w) {
            let r = self.rho[*k];
            if r.is_finite() {
                num += wk * r;
                den += wk;
            }
        }
        if den > 0.0 {
            num / den
        } else {
            f64::NAN
        }
    }

    /// `(∂ρ/∂t, ∂ρ/∂x)` of the bilinear interpolant.
    pub fn gradient_at(&self, t: f64, x: f64) -> (f64, f64) {
        let (c, fu, fv) = self.corners(t, x);
        let r: Vec<f64> = c.iter().map(|k| self.rho[*k]).collect();
        if r.iter().any(|v| !v.is_finite()) {
            let (ht, hx) = (self.grid.ht, self.grid.hx);
            let dt = (self.rho_at(t + 0.5 * ht, x) - self.rho_at(t - 0.5 * ht, x)) / ht;
            let dx = (self.rho_at(t, x + 0.5 * hx) - self.rho_at(t, x - 0.5 * hx)) / hx;
            return (dt, dx);
        }
        let dt = ((1.0 - fv) * (r[2] - r[0]) + fv * (r[3] - r[1])) / self.grid.ht;
        let dx = ((1.0 - fu) * (r[1] - r[0]) + fu * (r[3] - r[2])) / self.grid.hx;
        (dt, dx)
    }

    /// Largest `ρ` over inside nodes.
    pub fn max_rho(&self) -> f64 {
        self.rho
            .iter()
            .zip(&self.grid.inside_mask)
            .filter(|(_, inside)| **inside)
            .map(|(r, _)| *r)
            .fold(0.0, f64::max)
    }

    /// One row per `t` sample, comma-separated; outside nodes are empty.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.grid.nt {
            let row: Vec<String> = (0..self.grid.nx)
                .map(|j| {
                    let k = self.grid.index(i, j);
                    if self.grid.inside_mask[k] {
                        format!("{:.9}", self.rho[k])
                    } else {
                        String::new()
                    }
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Cut time `τ(x)` of a chart ray from the distance field.
///
/// The ray stops minimizing at the first sample with `ρ(γ(t)) < t - c·h`. The
/// defect `t - ρ(γ(t))` grows linearly past the cut, so the crossing time is
/// extrapolated back from two levels (`c·h` and `2c·h`) to the pre-cut
/// defect. The result is capped at the exit time and at `τ₁`.
pub fn cut_time(field: &DistanceField, surface: &ChartSurface2D, ray: &RayProfile, c: f64) -> Result<f64> {
    if ray.geodesic_points.len() != ray.times.len() {
        return Err(Error::Domain("cut_time needs a chart ray profile".into()));
    }
    let cap = ray.tau1.min_with(ray.exit_time.unwrap_or(f64::INFINITY));
    let defect: Vec<f64> = ray
        .geodesic_points
        .iter()
        .zip(&ray.times)
        .map(|((t, x), s)| s - field.rho_at(*t, *x))
        .collect();
    let h = |k: usize| {
        let (t, x) = ray.geodesic_points[k];
        field.spacing_at(surface, t, x)
    };
    let crossing = |level: &dyn Fn(usize) -> f64, from: usize| -> Option<(usize, f64)> {
        (from.max(1)..defect.len()).find(|&k| defect[k] > level(k)).map(|k| {
            let (d0, d1) = (defect[k - 1] - level(k - 1), defect[k] - level(k));
            let f = if d1 > d0 { (-d0 / (d1 - d0)).clamp(0.0, 1.0) } else { 1.0 };
            (k, ray.times[k - 1] + f * (ray.times[k] - ray.times[k - 1]))
        })
    };
    let first = |k: usize| c * h(k);
    let Some((kv, tv)) = crossing(&first, 1) else {
        if cap.is_finite() && ray.end() >= cap - 1e-12 {
            return Ok(cap);
        }
        return Err(Error::RayTooShort {
            x: ray.base.x,
            end: ray.end(),
        });
    };
    let second = |k: usize| 2.0 * c * h(k);
    let mut tau = tv;
    if let Some((_, tw)) = crossing(&second, kv) {
        if tw > tv {
            // Pre-cut defect: mean over the last quarter before the crossing.
            let lo = ray.times.partition_point(|s| *s < 0.75 * tv);
            let hi = kv.max(lo + 1);
            let base = defect[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            let base = base.clamp(-first(kv), first(kv));
            let slope = (second(kv) - first(kv)) / (tw - tv);
            tau = (tv - (first(kv) - base) / slope).max(0.0);
        }
    }
    Ok(tau.min(cap))
}

/// `g`-area of `{p in M : keep(t, x, ρ(p))}`, summing `√G` over 4×4
/// sub-samples of each cell.
pub fn region_volume(
    field: &DistanceField,
    surface: &ChartSurface2D,
    keep: &(dyn Fn(f64, f64, f64) -> bool + Sync),
) -> f64 {
    use rayon::prelude::*;
    const SUB: usize = 4;
    let g = &field.grid;
    let cell = g.ht * g.hx / (SUB * SUB) as f64;
    let rows: Vec<f64> = (0..g.nt)
        .into_par_iter()
        .map(|i| {
            let mut row = 0.0;
            for j in 0..g.nx {
                for a in 0..SUB {
                    let t = g.t_samples[i] + g.ht * ((a as f64 + 0.5) / SUB as f64 - 0.5);
                    for b in 0..SUB {
                        let x = g.x_samples[j] + g.hx * ((b as f64 + 0.5) / SUB as f64 - 0.5);
                        if surface.contains(t, x) && keep(t, x, field.rho_at(t, x)) {
                            row += surface.g(t, x).sqrt() * cell;
                        }
                    }
                }
            }
            row
        })
        .collect();
    rows.iter().sum()
}

/// Result of a foot-point search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FootPoint {
    pub point: BoundaryPoint,
    /// The start lies where the two nearest-boundary labels meet or where
    /// `ρ` has a kink; another foot point may exist.
    pub near_cut: bool,
}

/// Follows the steepest descent of `ρ` from `(t, x)` to the boundary and
/// projects onto the nearer graph.
pub fn foot_point(field: &DistanceField, surface: &ChartSurface2D, t: f64, x: f64) -> Result<FootPoint> {
    if !surface.contains(t, x) {
        return Err(Error::Domain(format!("({t}, {x}) is not inside the region")));
    }
    let g = &field.grid;
    let label_mix = {
        let (c, _, _) = field.corners(t, x);
        let labels: Vec<Side> = c.iter().filter_map(|k| field.source_component[*k]).collect();
        labels.windows(2).any(|w| w[0] != w[1])
    };
    let norm = |p: (f64, f64), t: f64, x: f64| (p.0 * p.0 + p.1 * p.1 / surface.g(t, x)).sqrt();
    let near_cut = label_mix || norm(field.gradient_at(t, x), t, x) < 0.5;
    let (mut pt, mut px) = (t, x);
    let step = 0.5 * g.ht.min(g.hx);
    let mut stalled = 0;
    let mut rho = field.rho_at(pt, px);
    let max_steps = 100 * (g.nt + g.nx);
    for _ in 0..max_steps {
        let h = field.spacing_at(surface, pt, px);
        if rho <= h {
            break;
        }
        let (dt, dx) = field.gradient_at(pt, px);
        let gm = surface.g(pt, px);
        // Metric gradient direction (ρ_t, ρ_x / G) normalised to g-length one.
        let len = (dt * dt + dx * dx / gm).sqrt();
        let (nt, nx) = if len > 0.2 {
            (pt - step * dt / len, px - step * dx / gm / len)
        } else {
            // Kink: discrete step to the lowest 8-neighbour of the nearest node.
            let (u, v) = g.cell_coords(pt, px);
            let i = (u.round().max(0.0) as usize).min(g.nt - 1);
            let j = (v.round() as usize) % g.nx;
            let mut best = (g.index(i, j), field.rho[g.index(i, j)]);
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let a = i as i64 + di;
                    if a < 0 || a >= g.nt as i64 {
                        continue;
                    }
                    let b = (j as i64 + dj).rem_euclid(g.nx as i64) as usize;
                    let k = g.index(a as usize, b);
                    if g.inside_mask[k] && field.rho[k] < best.1 {
                        best = (k, field.rho[k]);
                    }
                }
            }
            (g.t_samples[best.0 / g.nx], g.x_samples[best.0 % g.nx])
        };
        let next = field.rho_at(nt, nx);
        if next < rho - 1e-15 {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 10 {
                return Err(Error::DescentStagnation { t: pt, x: px });
            }
        }
        (pt, px, rho) = (nt, nx, next);
    }
    let radius = 4.0 * g.hx.max(g.ht) + 2.0 * field.spacing_at(surface, pt, px);
    let lo = local_curve_distance(surface, Side::Lower, pt, px, radius);
    let hi = local_curve_distance(surface, Side::Upper, pt, px, radius);
    let (side, fx) = if lo.0 <= hi.0 { (Side::Lower, lo.1) } else { (Side::Upper, hi.1) };
    Ok(FootPoint {
        point: BoundaryPoint {
            side,
            x: fx.rem_euclid(surface.period),
        },
        near_cut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::manifolds::build_chart_surface;
    use std::f64::consts::PI;

    fn chart(g: &str, lo: &str, hi: &str) -> ChartSurface2D {
        build_chart_surface(Expr::parse(g).unwrap(), Expr::parse(lo).unwrap(), Expr::parse(hi).unwrap(), 2.0 * PI)
            .unwrap()
    }

    fn field(s: &ChartSurface2D, nt: usize, nx: usize) -> DistanceField {
        solve_eikonal(s, &Grid2D::new(s, nt, nx).unwrap()).unwrap()
    }

    #[test]
    fn grid_layout() {
        let s = chart("1", "0", "2");
        let g = Grid2D::new(&s, 8, 16).unwrap();
        assert_eq!(g.t_samples[0], 0.125);
        assert!((g.hx * g.nx as f64 - 2.0 * PI).abs() < 1e-14);
        assert!(g.inside_mask.iter().all(|b| *b));
        assert!(Grid2D::new(&s, 2, 16).is_err());
    }

    #[test]
    fn flat_cylinder_nodes_are_exact() {
        let s = chart("1", "0", "2");
        let f = field(&s, 40, 64);
        for i in 0..40 {
            let t = f.grid.t_samples[i];
            let r = f.rho[f.grid.index(i, 7)];
            assert!((r - t.min(2.0 - t)).abs() < 1e-12, "{t}: {r}");
            let side = f.source_component[f.grid.index(i, 7)].unwrap();
            assert_eq!(side, if t < 1.0 { Side::Lower } else { Side::Upper });
        }
    }

    #[test]
    fn annulus_is_fermi_distance() {
        let s = chart("(1+t)^2", "0", "2");
        let f = field(&s, 80, 256);
        let h = f.grid.ht.max(3.0 * f.grid.hx);
        for &(t, x) in &[(0.3, 1.0), (1.0, 2.0), (1.6, 5.5), (0.05, 0.0)] {
            assert!((f.rho_at(t, x) - f64::min(t, 2.0 - t)).abs() <= 2.0 * h);
        }
    }

    #[test]
    fn region_volumes() {
        let s = chart("1", "0", "2");
        let f = field(&s, 64, 128);
        assert!((region_volume(&f, &s, &|_, _, _| true) - 4.0 * PI).abs() < 1e-3);
        assert!((region_volume(&f, &s, &|_, _, r| r <= 0.5) - 2.0 * PI).abs() < 2e-2);
        let a = chart("(1+t)^2", "0", "2");
        let f = field(&a, 64, 128);
        assert!((region_volume(&f, &a, &|_, _, _| true) - 8.0 * PI).abs() < 1e-3);
    }

    #[test]
    fn foot_points() {
        let s = chart("1", "0", "2");
        let f = field(&s, 40, 128);
        let fp = foot_point(&f, &s, 0.3, 1.2).unwrap();
        assert_eq!(fp.point.side, Side::Lower);
        assert!((fp.point.x - 1.2).abs() < 1e-9);
        assert!(!fp.near_cut);
        let a = chart("(1+t)^2", "0", "2");
        let f = field(&a, 80, 256);
        let fp = foot_point(&f, &a, 1.7, 4.0).unwrap();
        assert_eq!(fp.point.side, Side::Upper);
        assert!((fp.point.x - 4.0).abs() < 1e-6);
        let f = field(&s, 40, 128);
        let fp = foot_point(&f, &s, 1.0, 2.0).unwrap();
        assert!(fp.near_cut);
        assert!((fp.point.x - 2.0).abs() <= f.grid.hx);
        assert!(foot_point(&f, &s, 2.5, 0.0).is_err());
    }

    #[test]
    fn dump_has_one_row_per_t_sample() {
        let s = chart("1", "0", "2");
        let f = field(&s, 6, 8);
        let text = f.dump_text();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().all(|l| l.split(',').count() == 8));
    }
}
