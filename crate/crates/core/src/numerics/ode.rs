//! Fixed-step classical Runge–Kutta integration.

use crate::error::{Error, Result};

/// Samples of an initial-value problem at ascending times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        Some((*self.times.last()?, self.states.last()?.as_slice()))
    }

    /// Component `k` of every state.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k]).collect()
    }
}

fn rk4_step<F>(field: &mut F, t: f64, y: &[f64], h: f64, scratch: &mut [Vec<f64>; 5]) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let [k1, k2, k3, k4, tmp] = scratch;
    field(t, y, k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    field(t + 0.5 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    field(t + 0.5 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    field(t + h, tmp, k4);
    (0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates `y' = field(t, y)` from `t = 0` to `t_end` with step `step`.
/// Output is at multiples of `step`; the last step is shortened to land on `t_end`.
pub fn solve_ivp<F>(field: F, y0: &[f64], t_end: f64, step: f64) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    solve_ivp_until(field, y0, t_end, step, |_, _| false).map(|(traj, _)| traj)
}

/// Like [`solve_ivp`], but stops after the first step whose end state
/// satisfies `stop`. Returns the trajectory and whether `stop` fired.
pub fn solve_ivp_until<F, S>(
    mut field: F,
    y0: &[f64],
    t_end: f64,
    step: f64,
    mut stop: S,
) -> Result<(Trajectory, bool)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> bool,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Domain(format!("ODE step must be positive, got {step}")));
    }
    if !(t_end >= 0.0) {
        return Err(Error::Domain(format!("ODE end time must be >= 0, got {t_end}")));
    }
    let n = y0.len();
    let mut scratch = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let steps = (t_end / step - 1e-9).ceil().max(0.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(y0.to_vec());
    for k in 0..steps {
        let t = step * k as f64;
        let t_next = if k + 1 == steps { t_end } else { step * (k + 1) as f64 };
        let y = rk4_step(&mut field, t, &states[k], t_next - t, &mut scratch);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: t_next });
        }
        let halt = stop(t_next, &y);
        times.push(t_next);
        states.push(y);
        if halt {
            return Ok((Trajectory { times, states }, true));
        }
    }
    Ok((Trajectory { times, states }, false))
}
