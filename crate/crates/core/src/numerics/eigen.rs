//! Smallest eigenvalues of symmetric positive operators by inverse iteration.

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 10_000;
const RQ_STAGNATION: f64 = 1e-10;

/// Smallest eigenpair of a discretised Sturm–Liouville problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SturmLiouville {
    /// Richardson-extrapolated eigenvalue.
    pub mu: f64,
    /// Eigenvalue on the finer of the two grids, before extrapolation.
    pub mu_fine: f64,
    /// Nodes of the fine grid.
    pub nodes: Vec<f64>,
    /// Mode on the fine grid, normalised to max |u| = 1 and positive.
    pub mode: Vec<f64>,
}

// Solves a symmetric tridiagonal system in place (Thomas algorithm).
// `lower[i]` couples rows i and i+1.
fn solve_tridiagonal(diag: &[f64], lower: &[f64], rhs: &mut [f64], work: &mut [f64]) {
    let n = diag.len();
    work[0] = diag[0];
    for i in 1..n {
        let m = lower[i - 1] / work[i - 1];
        work[i] = diag[i] - m * lower[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= work[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - lower[i] * rhs[i + 1]) / work[i];
    }
}

struct Tridiagonal {
    diag: Vec<f64>,
    lower: Vec<f64>,
    mass: Vec<f64>,
    first: usize,
}

// P1 stiffness with midpoint coefficients and lumped mass. An end is Dirichlet
// when the weight is positive there, natural when it vanishes (relative to the
// largest interior weight, so cos(pi/2) counts as zero).
fn assemble<F: Fn(f64) -> f64>(weight: &F, a: f64, b: f64, cells: usize) -> Tridiagonal {
    let h = (b - a) / cells as f64;
    let mid: Vec<f64> = (0..cells).map(|i| weight(a + (i as f64 + 0.5) * h)).collect();
    let scale = mid.iter().fold(0.0f64, |m, v| m.max(*v));
    let dirichlet_a = weight(a) > 1e-12 * scale;
    let dirichlet_b = weight(b) > 1e-12 * scale;
    let first = usize::from(dirichlet_a);
    let last = if dirichlet_b { cells - 1 } else { cells };
    let mut diag = Vec::with_capacity(last + 1 - first);
    let mut mass = Vec::with_capacity(last + 1 - first);
    for i in first..=last {
        let left = if i > 0 { mid[i - 1] } else { 0.0 };
        let right = if i < cells { mid[i] } else { 0.0 };
        diag.push((left + right) / h);
        mass.push(0.5 * h * (left + right));
    }
    let lower = (first..last).map(|i| -mid[i] / h).collect();
    Tridiagonal {
        diag,
        lower,
        mass,
        first,
    }
}

fn tridiagonal_apply(op: &Tridiagonal, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut v = op.diag[i] * u[i];
            if i > 0 {
                v += op.lower[i - 1] * u[i - 1];
            }
            if i + 1 < n {
                v += op.lower[i] * u[i + 1];
            }
            v
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weighted_dot(a: &[f64], w: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(w).zip(b).map(|((x, m), y)| x * m * y).sum()
}

fn inverse_iteration_tridiagonal(op: &Tridiagonal) -> Result<(f64, Vec<f64>)> {
    let n = op.diag.len();
    let mut u = vec![1.0; n];
    let mut work = vec![0.0; n];
    let mut mu_prev = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut v: Vec<f64> = u.iter().zip(&op.mass).map(|(x, m)| x * m).collect();
        solve_tridiagonal(&op.diag, &op.lower, &mut v, &mut work);
        let norm = weighted_dot(&v, &op.mass, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mu = dot(&v, &tridiagonal_apply(op, &v));
        u = v;
        // The Rayleigh quotient decreases monotonically until rounding takes over.
        if mu_prev - mu <= RQ_STAGNATION * 1e-3 * mu.abs() {
            return Ok((mu, u));
        }
        mu_prev = mu;
    }
    Err(Error::EigenNonConvergence {
        iterations: MAX_ITERATIONS,
    })
}

/// Smallest eigenvalue of `-(p u')' = mu p u` on `[a, b]` with `p = weight`.
///
/// `gridpoints` is the node count of the coarse grid; the fine grid has twice
/// as many cells and the two results are combined by Richardson extrapolation.
pub fn min_eigen_sturm_liouville<F: Fn(f64) -> f64>(
    weight: F,
    a: f64,
    b: f64,
    gridpoints: usize,
) -> Result<SturmLiouville> {
    if gridpoints < 16 {
        return Err(Error::InvalidParams(format!("need at least 16 grid points, got {gridpoints}")));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParams(format!("invalid interval [{a}, {b}]")));
    }
    let cells = gridpoints - 1;
    let h = (b - a) / cells as f64;
    for i in 0..cells {
        let w = weight(a + (i as f64 + 0.5) * h);
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Domain(format!("weight must be positive inside ({a}, {b}), got {w}")));
        }
    }
    let coarse = assemble(&weight, a, b, cells);
    let (mu_coarse, _) = inverse_iteration_tridiagonal(&coarse)?;
    let fine = assemble(&weight, a, b, 2 * cells);
    let (mu_fine, inner) = inverse_iteration_tridiagonal(&fine)?;

    let hf = (b - a) / (2 * cells) as f64;
    let nodes: Vec<f64> = (0..=2 * cells).map(|i| a + hf * i as f64).collect();
    let mut mode = vec![0.0; nodes.len()];
    mode[fine.first..fine.first + inner.len()].copy_from_slice(&inner);
    let peak = mode.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
    mode.iter_mut().for_each(|v| *v /= peak);

    Ok(SturmLiouville {
        mu: (4.0 * mu_fine - mu_coarse) / 3.0,
        mu_fine,
        nodes,
        mode,
    })
}

/// Sparse symmetric operator `K` with diagonal mass `M` for the generalized
/// problem `K u = mu M u`. Off-diagonal entries are stored by row.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOperator {
    pub diag: Vec<f64>,
    pub row_start: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub mass: Vec<f64>,
}

impl GridOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for i in 0..self.diag.len() {
            let mut v = self.diag[i] * u[i];
            for k in self.row_start[i]..self.row_start[i + 1] {
                v += self.vals[k] * u[self.cols[k]];
            }
            out[i] = v;
        }
    }

    /// Checks the stored pattern is symmetric with positive diagonal and mass.
    pub fn validate(&self) -> Result<()> {
        let n = self.diag.len();
        if self.row_start.len() != n + 1 || self.mass.len() != n {
            return Err(Error::InvalidParams("grid operator has inconsistent sizes".into()));
        }
        if self.diag.iter().chain(&self.mass).any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParams("grid operator needs positive diagonal and mass".into()));
        }
        for i in 0..n {
            for k in self.row_start[i]..self.row_start[i + 1] {
                let j = self.cols[k];
                let back = (self.row_start[j]..self.row_start[j + 1]).find(|&m| self.cols[m] == i);
                match back {
                    Some(m) if (self.vals[m] - self.vals[k]).abs() <= 1e-12 * self.vals[k].abs() => {}
                    _ => {
                        return Err(Error::InvalidParams(format!(
                            "grid operator is not symmetric at ({i}, {j})"
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

// Jacobi-preconditioned conjugate gradients, warm-started from `x`.
fn conjugate_gradient(op: &GridOperator, b: &[f64], x: &mut [f64]) -> Result<()> {
    let n = b.len();
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(());
    }
    let mut z: Vec<f64> = r.iter().zip(&op.diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = 10 * n + 100;
    for _ in 0..max_iter {
        if dot(&r, &r).sqrt() <= 1e-13 * b_norm {
            return Ok(());
        }
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / op.diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::EigenNonConvergence { iterations: max_iter })
}

/// Smallest eigenvalue of `K u = mu M u` by inverse iteration from the
/// all-ones vector; stops when the Rayleigh quotient stagnates to 1e-10.
pub fn min_eigen_grid(op: &GridOperator) -> Result<f64> {
    op.validate()?;
    let n = op.len();
    let mut u = vec![1.0; n];
    let mut v = vec![0.0; n];
    let mut ku = vec![0.0; n];
    let mut mu_prev = f64::INFINITY;
    let mut mu_guess = 1.0;
    for _ in 0..MAX_ITERATIONS {
        let rhs: Vec<f64> = u.iter().zip(&op.mass).map(|(x, m)| x * m).collect();
        v.iter_mut().zip(&u).for_each(|(vi, ui)| *vi = ui / mu_guess);
        conjugate_gradient(op, &rhs, &mut v)?;
        let norm = weighted_dot(&v, &op.mass, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        op.apply(&v, &mut ku);
        let mu = dot(&v, &ku);
        std::mem::swap(&mut u, &mut v);
        if mu_prev - mu <= RQ_STAGNATION * mu.abs() {
            return Ok(mu);
        }
        mu_prev = mu;
        mu_guess = mu;
    }
    Err(Error::EigenNonConvergence {
        iterations: MAX_ITERATIONS,
    })
}

/// Builds a [`GridOperator`] from symmetric couplings `(i, j, value)` with
/// `i != j`; each pair is listed once.
pub fn grid_operator_from_couplings(diag: Vec<f64>, mass: Vec<f64>, couplings: &[(usize, usize, f64)]) -> GridOperator {
    let n = diag.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, v) in couplings {
        rows[i].push((j, v));
        rows[j].push((i, v));
    }
    let mut row_start = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_start.push(0);
    for mut row in rows {
        row.sort_by_key(|e| e.0);
        for (j, v) in row {
            cols.push(j);
            vals.push(v);
        }
        row_start.push(cols.len());
    }
    GridOperator {
        diag,
        row_start,
        cols,
        vals,
        mass,
    }
}
