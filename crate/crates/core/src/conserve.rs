//! Conserved quantities and circulation diagnostics.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::integrate::Observer;
use crate::interp::{JetParticleState, VelocityField};
use crate::system::Model;

/// Default quadrature nodes for `circulation`.
pub const DEFAULT_QUADRATURE: usize = 64;

/// Default loop radius as a fraction of the model length scale.
pub const DEFAULT_RADIUS_FRACTION: f64 = 0.01;

/// `sum_i p_i`.
pub fn noether_linear(dim: usize, momenta: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; dim];
    for p in momenta.chunks(dim) {
        for a in 0..dim {
            s[a] += p[a];
        }
    }
    s
}

/// `sum_i x_i ^ p_i` plus the frame part `Omega : mu_i`: one component in
/// 2D, three in 3D, none otherwise.
pub fn noether_angular(dim: usize, positions: &[f64], momenta: &[f64], frame_momenta: Option<&[f64]>) -> Vec<f64> {
    let n = positions.len() / dim;
    match dim {
        2 => {
            let mut l = 0.0;
            for i in 0..n {
                let (x, p) = (&positions[2 * i..2 * i + 2], &momenta[2 * i..2 * i + 2]);
                l += x[0] * p[1] - x[1] * p[0];
                if let Some(mu) = frame_momenta {
                    l += mu[4 * i + 2] - mu[4 * i + 1];
                }
            }
            vec![l]
        }
        3 => {
            let mut l = vec![0.0; 3];
            for i in 0..n {
                let (x, p) = (&positions[3 * i..3 * i + 3], &momenta[3 * i..3 * i + 3]);
                l[0] += x[1] * p[2] - x[2] * p[1];
                l[1] += x[2] * p[0] - x[0] * p[2];
                l[2] += x[0] * p[1] - x[1] * p[0];
                if let Some(mu) = frame_momenta {
                    let m = &mu[9 * i..9 * i + 9];
                    // epsilon_{akc} mu^{ac}
                    l[0] += m[7] - m[5];
                    l[1] += m[2] - m[6];
                    l[2] += m[3] - m[1];
                }
            }
            l
        }
        _ => Vec::new(),
    }
}

/// `D_i^T P_i`, the momentum of the residual frame symmetry at particle `i`.
pub fn noether_jet(state: &JetParticleState, i: usize) -> Result<DMatrix<f64>> {
    if i >= state.count() {
        return Err(Error::InvalidState(format!("no particle {i}")));
    }
    Ok(state.frame(i).transpose() * state.frame_conjugate(i))
}

/// Trapezoidal `oint u . dl` over the circle of radius `radius` about `center`.
pub fn circulation(field: &dyn VelocityField, center: &[f64], radius: f64, n_quad: usize) -> Result<f64> {
    if field.dim() != 2 || center.len() != 2 {
        return Err(Error::Unsupported("circulation is only defined for 2D fields".into()));
    }
    if !(radius > 0.0) || n_quad < 16 {
        return Err(Error::Domain(format!(
            "circulation needs radius > 0 and at least 16 nodes, got {radius} and {n_quad}"
        )));
    }
    let h = 2.0 * PI / n_quad as f64;
    let mut total = 0.0;
    for k in 0..n_quad {
        let (s, c) = (k as f64 * h).sin_cos();
        let u = field.velocity(&[center[0] + radius * c, center[1] + radius * s]);
        total += radius * (-s * u[0] + c * u[1]);
    }
    Ok(total * h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub linear_momentum: Vec<f64>,
    pub angular_momentum: Vec<f64>,
    pub jet_momenta: Vec<DMatrix<f64>>,
    /// Per particle, 2D only.
    pub circulations: Vec<f64>,
    pub monitor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordOptions {
    pub radius: f64,
    pub n_quad: usize,
    pub circulations: bool,
    pub monitor: bool,
}

impl RecordOptions {
    pub fn for_model(model: &dyn Model) -> Self {
        Self {
            radius: DEFAULT_RADIUS_FRACTION * model.length_scale(),
            n_quad: DEFAULT_QUADRATURE,
            circulations: model.dim() == 2,
            monitor: true,
        }
    }
}

pub fn record(model: &dyn Model, z: &[f64], t: f64, opts: &RecordOptions) -> Result<DiagnosticsRecord> {
    let field = model.field(z)?;
    let positions = model.positions(z);
    let d = model.dim();
    let circulations = if opts.circulations && d == 2 {
        positions
            .chunks(2)
            .map(|x| circulation(field.as_ref(), x, opts.radius, opts.n_quad))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let monitor = if opts.monitor {
        let pts: Vec<Vec<f64>> = positions.chunks(d).map(|c| c.to_vec()).collect();
        crate::dynamics::constraint_force_monitor(field.as_ref(), &pts)?
    } else {
        0.0
    };
    Ok(DiagnosticsRecord {
        t,
        energy: model.energy(z)?,
        linear_momentum: model.linear_momentum(z),
        angular_momentum: model.angular_momentum(z),
        jet_momenta: model.jet_momenta(z).unwrap_or_default(),
        circulations,
        monitor,
    })
}

/// Normalizations for relative drifts, taken from the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriftScales {
    pub energy: f64,
    /// Used when it exceeds the initial angular momentum.
    pub angular: f64,
}

impl DriftScales {
    pub fn of(model: &dyn Model, z: &[f64]) -> Self {
        Self {
            energy: model.energy_scale(z),
            angular: model.angular_scale(z),
        }
    }
}

/// Largest deviations from the initial record seen so far.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drift {
    /// `|H - H0|` relative to the energy scale.
    pub energy: f64,
    /// Absolute, max over components.
    pub linear: f64,
    /// Relative to the initial angular momentum, or to `sum |x||p|` when
    /// that vanishes.
    pub angular: f64,
    /// Max over particles of `|M_i - M_i0|_F / |M_i0|_F`.
    pub jet: f64,
    /// Max over particles of `|c_i / c_i0 - 1|`, for nonzero initial
    /// circulations.
    pub circulation: f64,
}

fn rel(delta: f64, scale: f64) -> f64 {
    if delta == 0.0 {
        0.0
    } else {
        delta / scale
    }
}

impl Drift {
    pub fn between(first: &DiagnosticsRecord, r: &DiagnosticsRecord, scales: DriftScales) -> Self {
        let energy = rel((r.energy - first.energy).abs(), scales.energy.max(first.energy.abs()));
        let linear = first
            .linear_momentum
            .iter()
            .zip(&r.linear_momentum)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dl: f64 = first
            .angular_momentum
            .iter()
            .zip(&r.angular_momentum)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let l0: f64 = first.angular_momentum.iter().map(|a| a * a).sum::<f64>().sqrt();
        let angular = rel(dl, l0.max(scales.angular));
        let jet = first
            .jet_momenta
            .iter()
            .zip(&r.jet_momenta)
            .map(|(a, b)| rel((a - b).norm(), a.norm()))
            .fold(0.0, f64::max);
        let circulation = first
            .circulations
            .iter()
            .zip(&r.circulations)
            .filter(|(a, _)| **a != 0.0)
            .map(|(a, b)| (b / a - 1.0).abs())
            .fold(0.0, f64::max);
        Self {
            energy,
            linear,
            angular,
            jet,
            circulation,
        }
    }

    pub fn max(self, o: Self) -> Self {
        Self {
            energy: self.energy.max(o.energy),
            linear: self.linear.max(o.linear),
            angular: self.angular.max(o.angular),
            jet: self.jet.max(o.jet),
            circulation: self.circulation.max(o.circulation),
        }
    }
}

/// Observer that records diagnostics and tracks the worst drift.
pub struct DiagnosticsObserver<'m> {
    pub model: &'m dyn Model,
    pub options: RecordOptions,
    pub keep_records: bool,
    pub records: Vec<DiagnosticsRecord>,
    pub first: Option<DiagnosticsRecord>,
    pub drift: Drift,
    scales: DriftScales,
}

impl<'m> DiagnosticsObserver<'m> {
    pub fn new(model: &'m dyn Model, options: RecordOptions, keep_records: bool) -> Self {
        Self {
            model,
            options,
            keep_records,
            records: Vec::new(),
            first: None,
            drift: Drift::default(),
            scales: DriftScales::default(),
        }
    }
}

impl Observer for DiagnosticsObserver<'_> {
    fn observe(&mut self, _step: usize, t: f64, z: &[f64]) -> Result<()> {
        let r = record(self.model, z, t, &self.options)?;
        match &self.first {
            None => {
                self.scales = DriftScales::of(self.model, z);
                self.first = Some(r.clone());
            }
            Some(first) => {
                self.drift = self.drift.max(Drift::between(first, &r, self.scales));
            }
        }
        if self.keep_records {
            self.records.push(r);
        }
        Ok(())
    }
}
