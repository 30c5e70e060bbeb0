//! Fixed-step time integration of canonical systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An autonomous ODE `z' = f(z)` on a flat phase vector.
pub trait Flow {
    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()>;

    /// Errors once the state leaves the configuration space, e.g. when two
    /// particles collide.
    fn check_state(&self, _z: &[f64]) -> Result<()> {
        Ok(())
    }

    /// Constraint-force indicator used by `stop_on_monitor`.
    fn monitor(&self, _z: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    #[default]
    ImplicitMidpoint,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::ImplicitMidpoint => "implicit_midpoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub observer_stride: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub stop_on_monitor: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::ImplicitMidpoint,
            dt: 1e-2,
            t_end: 1.0,
            observer_stride: 1,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            stop_on_monitor: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::Config("newton_tol and newton_max_iter must be positive".into()));
        }
        if self.observer_stride == 0 {
            return Err(Error::Config("observer_stride must be at least 1".into()));
        }
        if let Some(m) = self.stop_on_monitor {
            if !(m >= 0.0) {
                return Err(Error::Config(format!("stop_on_monitor must be non-negative, got {m}")));
            }
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end`; the last one may be partial.
    pub fn step_count(&self) -> usize {
        let r = self.t_end / self.dt;
        let near = r.round();
        if (r - near).abs() <= 1e-9 * near.max(1.0) {
            near as usize
        } else {
            r.ceil() as usize
        }
    }

    /// Time after `k` steps.
    pub fn time_at(&self, k: usize) -> f64 {
        if k >= self.step_count() {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }
}

pub fn step_rk4(flow: &dyn Flow, z: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = z.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    flow.rhs(z, &mut k1)?;
    axpy_into(&mut tmp, z, 0.5 * dt, &k1);
    flow.rhs(&tmp, &mut k2)?;
    axpy_into(&mut tmp, z, 0.5 * dt, &k2);
    flow.rhs(&tmp, &mut k3)?;
    axpy_into(&mut tmp, z, dt, &k3);
    flow.rhs(&tmp, &mut k4)?;
    Ok((0..n)
        .map(|e| z[e] + dt / 6.0 * (k1[e] + 2.0 * k2[e] + 2.0 * k3[e] + k4[e]))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MidpointStep {
    pub state: Vec<f64>,
    pub iterations: usize,
}

/// Solves `z1 = z0 + dt f((z0 + z1) / 2)` by fixed-point iteration from an
/// explicit Euler guess. Converged once the update is below
/// `tol * max(1, |z1|_inf)`.
pub fn step_implicit_midpoint(
    flow: &dyn Flow,
    z: &[f64],
    dt: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MidpointStep> {
    let n = z.len();
    let mut f = vec![0.0; n];
    let mut mid = vec![0.0; n];
    flow.rhs(z, &mut f)?;
    let mut next: Vec<f64> = (0..n).map(|e| z[e] + dt * f[e]).collect();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        for e in 0..n {
            mid[e] = 0.5 * (z[e] + next[e]);
        }
        flow.rhs(&mid, &mut f)?;
        let mut delta: f64 = 0.0;
        let mut size: f64 = 1.0;
        for e in 0..n {
            let v = z[e] + dt * f[e];
            delta = delta.max((v - next[e]).abs());
            size = size.max(v.abs());
            next[e] = v;
        }
        if !delta.is_finite() {
            break;
        }
        residual = delta / size;
        if residual <= tol {
            return Ok(MidpointStep {
                state: next,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Called with `(step, t, state)` on the initial state, every
/// `observer_stride` steps and on the final state.
pub trait Observer {
    fn observe(&mut self, step: usize, t: f64, z: &[f64]) -> Result<()>;
}

impl<F: FnMut(usize, f64, &[f64]) -> Result<()>> Observer for F {
    fn observe(&mut self, step: usize, t: f64, z: &[f64]) -> Result<()> {
        self(step, t, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Completed,
    MonitorTriggered { value: f64 },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::MonitorTriggered { .. } => "monitor-triggered",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub status: RunStatus,
    pub steps: usize,
    pub t: f64,
    pub state: Vec<f64>,
    pub records: usize,
    /// Largest iteration count of any implicit step (0 for RK4).
    pub max_iterations: usize,
}

pub fn step(flow: &dyn Flow, z: &[f64], dt: f64, config: &IntegratorConfig) -> Result<(Vec<f64>, usize)> {
    match config.method {
        Method::Rk4 => Ok((step_rk4(flow, z, dt)?, 0)),
        Method::ImplicitMidpoint => {
            let s = step_implicit_midpoint(flow, z, dt, config.newton_tol, config.newton_max_iter)?;
            Ok((s.state, s.iterations))
        }
    }
}

pub fn integrate(
    flow: &dyn Flow,
    z0: &[f64],
    config: &IntegratorConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunSummary> {
    config.validate()?;
    flow.check_state(z0)?;
    let notify = |observers: &mut [&mut dyn Observer], k: usize, t: f64, z: &[f64]| -> Result<usize> {
        for o in observers.iter_mut() {
            o.observe(k, t, z)?;
        }
        Ok(1)
    };

    let n = config.step_count();
    let mut z = z0.to_vec();
    let mut records = notify(observers, 0, 0.0, &z)?;
    let mut max_iterations = 0;
    let mut status = RunStatus::Completed;
    let mut done = 0;
    for k in 1..=n {
        let t0 = config.time_at(k - 1);
        let t1 = config.time_at(k);
        let wrap = |e: Error| Error::Step {
            step: k,
            t: t0,
            source: Box::new(e),
        };
        let (next, iters) = step(flow, &z, t1 - t0, config).map_err(wrap)?;
        flow.check_state(&next).map_err(wrap)?;
        z = next;
        max_iterations = max_iterations.max(iters);
        done = k;

        if let Some(threshold) = config.stop_on_monitor {
            let value = flow.monitor(&z).map_err(wrap)?;
            if value > threshold {
                status = RunStatus::MonitorTriggered { value };
            }
        }
        let last = k == n || status != RunStatus::Completed;
        if k % config.observer_stride == 0 || last {
            records += notify(observers, k, t1, &z)?;
        }
        if status != RunStatus::Completed {
            break;
        }
    }
    Ok(RunSummary {
        status,
        steps: done,
        t: config.time_at(done),
        state: z,
        records,
        max_iterations,
    })
}

fn axpy_into(out: &mut [f64], z: &[f64], a: f64, k: &[f64]) {
    for e in 0..z.len() {
        out[e] = z[e] + a * k[e];
    }
}

/// `z' = A z` with a fixed antisymmetric `A`; `|z|^2` is a quadratic
/// invariant, which the implicit midpoint rule preserves.
#[derive(Debug, Clone)]
pub struct LinearSkewFlow {
    pub a: nalgebra::DMatrix<f64>,
}

impl LinearSkewFlow {
    /// Builds `A = B - B^T` from a seeded random `B`.
    pub fn random(n: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        Self { a: &b - b.transpose() }
    }
}

impl Flow for LinearSkewFlow {
    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let n = z.len();
        for i in 0..n {
            out[i] = (0..n).map(|j| self.a[(i, j)] * z[j]).sum();
        }
        Ok(())
    }
}

/// Self-test of the midpoint solver: largest per-step relative change of
/// `|z|^2` over `steps` steps of a random skew-symmetric linear system.
pub fn midpoint_self_test(n: usize, dt: f64, steps: usize, seed: u64) -> Result<f64> {
    let flow = LinearSkewFlow::random(n, seed);
    let mut z: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).sqrt()).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let e0: f64 = z.iter().map(|v| v * v).sum();
        z = step_implicit_midpoint(&flow, &z, dt, 1e-15, 200)?.state;
        let e1: f64 = z.iter().map(|v| v * v).sum();
        worst = worst.max((e1 - e0).abs() / e0);
    }
    Ok(worst)
}
