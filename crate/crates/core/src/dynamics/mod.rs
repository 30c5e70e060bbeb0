//! Reduced Hamiltonians on landmark and jet configuration spaces and their
//! canonical equations of motion.
//!
//! With momenta `(p, mu)` the kinetic energy of the interpolated field is
//! `H = 1/2 sum_i (p_i . u(x_i) + mu_i : Du(x_i))`. Jet states are carried
//! canonically as `(x, D, p, P)` with `mu = P D^T`, which gives
//!
//! ```text
//! xdot_i = u(x_i)          Ddot_i = nu_i D_i          nu_i = Du(x_i)
//! pdot_i = -dH/dx_i        Pdot_i = -nu_i^T P_i
//! ```
//!
//! so `D_i^T P_i` is constant along every trajectory.

mod curvature;

pub use curvature::{curvature_value, CurvatureSample};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::interp::{JetParticleState, KernelField, ParticleState, VelocityField};
use crate::kernel::RadialKernel;

/// Time derivatives of a landmark state.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkRates {
    pub xdot: Vec<f64>,
    pub pdot: Vec<f64>,
}

/// Time derivatives of a jet state, with the induced frame rates `nu` and
/// the frame-momentum rates `mudot` for reference.
#[derive(Debug, Clone, PartialEq)]
pub struct JetRates {
    pub xdot: Vec<f64>,
    pub frames_dot: Vec<f64>,
    pub pdot: Vec<f64>,
    pub conjugates_dot: Vec<f64>,
    pub nu: Vec<f64>,
    pub mudot: Vec<f64>,
}

/// `H = 1/2 sum_ij phi(|x_i - x_j|^2) p_i . p_j`.
///
/// Evaluated as `1/2 |sum_i p_i|^2 - sum_{i<j} (1 - phi_ij) p_i . p_j`
/// (both kernel families have `phi(0) = 1`), which stays accurate when
/// particles with opposing momenta nearly coincide.
pub fn hamiltonian_k0(kernel: &RadialKernel, state: &ParticleState) -> f64 {
    let d = state.dim;
    let n = state.count();
    let total = linear_sum(d, &state.momenta);
    let mut h = 0.5 * dot(&total, &total);
    for i in 0..n {
        for j in i + 1..n {
            let s = crate::interp::dist2(state.position(i), state.position(j));
            h -= kernel.deficit(s) * dot(state.momentum(i), &state.momenta[j * d..(j + 1) * d]);
        }
    }
    h
}

/// Canonical equations for landmarks. The velocity uses the same
/// `xdot_i = sum_j p_j - sum_{j != i} (1 - phi_ij) p_j` split as the energy.
pub fn eom_k0(kernel: &RadialKernel, state: &ParticleState) -> Result<LandmarkRates> {
    let d = state.dim;
    let n = state.count();
    let total = linear_sum(d, &state.momenta);
    let mut xdot: Vec<f64> = (0..n * d).map(|e| total[e % d]).collect();
    let mut pdot = vec![0.0; n * d];
    for i in 0..n {
        let pi = state.momentum(i);
        for j in i + 1..n {
            let pj = state.momentum(j);
            let (xi, xj) = (state.position(i), state.position(j));
            let s = crate::interp::dist2(xi, xj);
            if s == 0.0 && !kernel.is_smooth() {
                return Err(Error::NotDifferentiable);
            }
            let c = kernel.deficit(s);
            let coef = 2.0 * kernel.value_d1(s) * dot(pi, pj);
            for a in 0..d {
                xdot[i * d + a] -= c * pj[a];
                xdot[j * d + a] -= c * pi[a];
                let f = coef * (xi[a] - xj[a]);
                pdot[i * d + a] -= f;
                pdot[j * d + a] += f;
            }
        }
    }
    Ok(LandmarkRates { xdot, pdot })
}

pub fn hamiltonian_k1(kernel: &RadialKernel, state: &JetParticleState) -> Result<f64> {
    let d = state.dim;
    let mu = state.frame_momenta();
    let field = KernelField::jet(*kernel, d, &state.positions, &state.momenta, &mu)?;
    let mut h = 0.0;
    for i in 0..state.count() {
        let j = field.jet_at(state.position(i), 1, None)?;
        for a in 0..d {
            h += state.momenta[i * d + a] * j.u[a];
            for b in 0..d {
                h += mu[i * d * d + a * d + b] * j.du[a][b];
            }
        }
    }
    Ok(0.5 * h)
}

/// Canonical equations on `(x, D, p, P)`. With `incompressible` the frame
/// rate is projected onto traceless matrices, which keeps `det D` fixed.
pub fn eom_k1(kernel: &RadialKernel, state: &JetParticleState, incompressible: bool) -> Result<JetRates> {
    kernel.require_smooth()?;
    let d = state.dim;
    let dd = d * d;
    let n = state.count();
    let mu = state.frame_momenta();
    let field = KernelField::jet(*kernel, d, &state.positions, &state.momenta, &mu)?;
    let [phi0, dphi0, _, _] = kernel.gaussian_derivs(0.0);

    let mut rates = JetRates {
        xdot: vec![0.0; n * d],
        frames_dot: vec![0.0; n * dd],
        pdot: vec![0.0; n * d],
        conjugates_dot: vec![0.0; n * dd],
        nu: vec![0.0; n * dd],
        mudot: vec![0.0; n * dd],
    };
    for i in 0..n {
        let others = field.jet_at(state.position(i), 2, Some(i))?;
        let pi = &state.momenta[i * d..(i + 1) * d];
        let mui = &mu[i * dd..(i + 1) * dd];

        // The self term only adds phi(0) p_i to u and -2 phi'(0) mu_i to Du.
        let mut nu = DMatrix::zeros(d, d);
        for a in 0..d {
            rates.xdot[i * d + a] = others.u[a] + phi0 * pi[a];
            for c in 0..d {
                nu[(a, c)] = others.du[a][c] - 2.0 * dphi0 * mui[a * d + c];
            }
        }
        if incompressible {
            let shift = nu.trace() / d as f64;
            for a in 0..d {
                nu[(a, a)] -= shift;
            }
        }

        // The self term has no x_i dependence, so only other particles
        // contribute to the force.
        for c in 0..d {
            let mut f = 0.0;
            for a in 0..d {
                f += pi[a] * others.du[a][c];
                for b in 0..d {
                    f += mui[a * d + b] * others.ddu[a][b][c];
                }
            }
            rates.pdot[i * d + c] = -f;
        }

        let frame = state.frame(i);
        let conj = state.frame_conjugate(i);
        let mu_m = DMatrix::from_row_slice(d, d, mui);
        let frames_dot = &nu * &frame;
        let conj_dot = -(nu.transpose() * &conj);
        let mudot = &mu_m * nu.transpose() - nu.transpose() * &mu_m;
        crate::interp::write_row_major(&frames_dot, &mut rates.frames_dot[i * dd..(i + 1) * dd]);
        crate::interp::write_row_major(&conj_dot, &mut rates.conjugates_dot[i * dd..(i + 1) * dd]);
        crate::interp::write_row_major(&nu, &mut rates.nu[i * dd..(i + 1) * dd]);
        crate::interp::write_row_major(&mudot, &mut rates.mudot[i * dd..(i + 1) * dd]);
    }
    Ok(rates)
}

/// Largest `|(u . grad) u|` over the sample points: the force needed to keep
/// the exact fluid inside the interpolated subspace.
pub fn constraint_force_monitor(field: &dyn VelocityField, sample_points: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for m in sample_points {
        let u = field.velocity(m);
        let g = field.gradient(m)?;
        let mut norm2 = 0.0;
        for a in 0..field.dim() {
            let f: f64 = (0..field.dim()).map(|b| g[(a, b)] * u[b]).sum();
            norm2 += f * f;
        }
        worst = worst.max(norm2.sqrt());
    }
    Ok(worst)
}

fn linear_sum(d: usize, v: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; d];
    for c in v.chunks(d) {
        for a in 0..d {
            s[a] += c[a];
        }
    }
    s
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
