//! Kernel interpolation of particle data into velocity fields.
//!
//! The field generated by landmark momenta `p_j` and (for jets) frame
//! momenta `mu_j` is
//!
//! ```text
//! u^a(m) = sum_j phi(s_j) p_j^a - 2 phi'(s_j) mu_j^{ab} (m - x_j)_b,   s_j = |m - x_j|^2
//! ```
//!
//! The momenta are obtained from prescribed particle velocities (and frame
//! rates) by a Gram solve, so the field reproduces that data exactly at
//! the particles.

use nalgebra::{DMatrix, DVector};

use super::gram::GramFactor;
use super::state::{dist2, JetParticleState, ParticleState};
use crate::error::{Error, Result};
use crate::kernel::RadialKernel;

/// A velocity field on `R^dim`.
pub trait VelocityField {
    fn dim(&self) -> usize;

    fn velocity(&self, m: &[f64]) -> Vec<f64>;

    /// Spatial gradient, entry `(a, b)` is `d u^a / d m^b`.
    fn gradient(&self, m: &[f64]) -> Result<DMatrix<f64>>;
}

/// Value, gradient and Hessian of a field at one point, padded to 3D.
/// `du[a][c] = d_c u^a`, `ddu[a][b][c] = d_b d_c u^a`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Jet3 {
    pub u: [f64; 3],
    pub du: [[f64; 3]; 3],
    pub ddu: [[[f64; 3]; 3]; 3],
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InterpOptions {
    /// Added to the Gram diagonal before factorization.
    pub jitter: f64,
    /// Restricts frame rates to be traceless (unit-volume frames).
    pub incompressible: bool,
}

/// Field view over borrowed particle data. `frame_momenta` is `None` for
/// the zeroth-order (landmark) ansatz.
#[derive(Debug, Clone, Copy)]
pub struct KernelField<'a> {
    pub kernel: RadialKernel,
    pub dim: usize,
    pub positions: &'a [f64],
    pub momenta: &'a [f64],
    pub frame_momenta: Option<&'a [f64]>,
}

impl<'a> KernelField<'a> {
    pub fn landmark(kernel: RadialKernel, dim: usize, positions: &'a [f64], momenta: &'a [f64]) -> Self {
        Self {
            kernel,
            dim,
            positions,
            momenta,
            frame_momenta: None,
        }
    }

    pub fn jet(
        kernel: RadialKernel,
        dim: usize,
        positions: &'a [f64],
        momenta: &'a [f64],
        frame_momenta: &'a [f64],
    ) -> Result<Self> {
        kernel.require_smooth()?;
        Ok(Self {
            kernel,
            dim,
            positions,
            momenta,
            frame_momenta: Some(frame_momenta),
        })
    }

    pub fn count(&self) -> usize {
        self.positions.len() / self.dim
    }

    fn x(&self, j: usize) -> &[f64] {
        &self.positions[j * self.dim..(j + 1) * self.dim]
    }

    /// Accumulates the contribution of particle `j` at `m` up to the given
    /// derivative order (0, 1 or 2).
    pub(crate) fn add_particle(&self, j: usize, m: &[f64], order: u8, out: &mut Jet3) -> Result<()> {
        let d = self.dim;
        let xj = self.x(j);
        let mut w = [0.0; 3];
        for b in 0..d {
            w[b] = m[b] - xj[b];
        }
        let s = w[..d].iter().map(|v| v * v).sum::<f64>();
        let [f0, f1, f2, f3] = if self.kernel.is_smooth() {
            self.kernel.gaussian_derivs(s)
        } else {
            if order > 0 && s == 0.0 {
                return Err(Error::NotDifferentiable);
            }
            let k = &self.kernel;
            match order {
                0 => [k.value(s), 0.0, 0.0, 0.0],
                1 => [k.value(s), k.value_d1(s), 0.0, 0.0],
                _ => [k.value(s), k.value_d1(s), k.value_d2(s), k.value_d3(s)],
            }
        };
        let p = &self.momenta[j * d..(j + 1) * d];
        let mu = self.frame_momenta.map(|fm| &fm[j * d * d..(j + 1) * d * d]);

        for a in 0..d {
            out.u[a] += f0 * p[a];
        }
        if let Some(mu) = mu {
            for a in 0..d {
                let mw: f64 = (0..d).map(|b| mu[a * d + b] * w[b]).sum();
                out.u[a] -= 2.0 * f1 * mw;
            }
        }
        if order == 0 {
            return Ok(());
        }

        for a in 0..d {
            for c in 0..d {
                out.du[a][c] += 2.0 * f1 * w[c] * p[a];
            }
        }
        if let Some(mu) = mu {
            for a in 0..d {
                let mw: f64 = (0..d).map(|b| mu[a * d + b] * w[b]).sum();
                for c in 0..d {
                    out.du[a][c] -= 4.0 * f2 * mw * w[c] + 2.0 * f1 * mu[a * d + c];
                }
            }
        }
        if order == 1 {
            return Ok(());
        }

        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let delta = if b == c { 1.0 } else { 0.0 };
                    out.ddu[a][b][c] += p[a] * (4.0 * f2 * w[b] * w[c] + 2.0 * f1 * delta);
                }
            }
        }
        if let Some(mu) = mu {
            for a in 0..d {
                let mw: f64 = (0..d).map(|e| mu[a * d + e] * w[e]).sum();
                for b in 0..d {
                    for c in 0..d {
                        let delta = if b == c { 1.0 } else { 0.0 };
                        out.ddu[a][b][c] -= 8.0 * f3 * w[b] * w[c] * mw
                            + 4.0 * f2 * (mu[a * d + b] * w[c] + mu[a * d + c] * w[b] + delta * mw);
                    }
                }
            }
        }
        Ok(())
    }

    /// Sum over all particles except `skip`.
    pub(crate) fn jet_at(&self, m: &[f64], order: u8, skip: Option<usize>) -> Result<Jet3> {
        let mut out = Jet3::default();
        for j in 0..self.count() {
            if Some(j) != skip {
                self.add_particle(j, m, order, &mut out)?;
            }
        }
        Ok(out)
    }

    /// Second spatial derivatives; `result[a][(b, c)] = d_b d_c u^a`.
    pub fn hessian(&self, m: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let j = self.jet_at(m, 2, None)?;
        Ok((0..self.dim)
            .map(|a| DMatrix::from_fn(self.dim, self.dim, |b, c| j.ddu[a][b][c]))
            .collect())
    }
}

impl VelocityField for KernelField<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn velocity(&self, m: &[f64]) -> Vec<f64> {
        let j = self
            .jet_at(m, 0, None)
            .expect("order-0 evaluation is infallible");
        j.u[..self.dim].to_vec()
    }

    fn gradient(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        let j = self.jet_at(m, 1, None)?;
        Ok(DMatrix::from_fn(self.dim, self.dim, |a, c| j.du[a][c]))
    }
}

fn check_query(dim: usize, query: &[f64]) -> Result<()> {
    if query.len() != dim || !query.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain(format!("query must be a finite {dim}-vector")));
    }
    Ok(())
}

/// Scalar Gram matrix `K_ij = phi(|x_i - x_j|^2)`.
pub fn gram_k0(kernel: &RadialKernel, dim: usize, positions: &[f64]) -> DMatrix<f64> {
    let n = positions.len() / dim;
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.value(dist2(
                &positions[i * dim..(i + 1) * dim],
                &positions[j * dim..(j + 1) * dim],
            ));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Momenta `p` with `K p = xdot`, so the landmark field matches the
/// prescribed velocities at the particles.
pub fn solve_k0(
    kernel: &RadialKernel,
    dim: usize,
    positions: &[f64],
    velocities: &[f64],
    options: InterpOptions,
) -> Result<Vec<f64>> {
    let n = positions.len() / dim;
    if velocities.len() != positions.len() {
        return Err(Error::InvalidState("velocities and positions differ in size".into()));
    }
    let factor = GramFactor::new(gram_k0(kernel, dim, positions), options.jitter, dim, positions)?;
    let rhs = DMatrix::from_row_slice(n, dim, velocities);
    let p = factor.solve_matrix(&rhs);
    let mut out = vec![0.0; n * dim];
    for i in 0..n {
        for a in 0..dim {
            out[i * dim + a] = p[(i, a)];
        }
    }
    Ok(out)
}

pub fn eval_field_k0(kernel: &RadialKernel, state: &ParticleState, query: &[f64]) -> Result<Vec<f64>> {
    check_query(state.dim, query)?;
    Ok(KernelField::landmark(*kernel, state.dim, &state.positions, &state.momenta).velocity(query))
}

pub fn eval_grad_k0(kernel: &RadialKernel, state: &ParticleState, query: &[f64]) -> Result<DMatrix<f64>> {
    check_query(state.dim, query)?;
    KernelField::landmark(*kernel, state.dim, &state.positions, &state.momenta).gradient(query)
}

/// Block size of one particle in the jet Gram system: `d` velocity and
/// `d*d` frame-rate entries.
pub fn jet_block(dim: usize) -> usize {
    dim + dim * dim
}

/// Symmetric jet Gram matrix mapping `(p_j, mu_j)` to `(u(x_i), Du(x_i))`.
///
/// Unknown/output layout per particle: `[p^a | mu^{ab} at a*d+b]` and
/// `[xdot^a | nu^{ac} at a*d+c]`.
pub fn gram_k1(kernel: &RadialKernel, dim: usize, positions: &[f64]) -> Result<DMatrix<f64>> {
    kernel.require_smooth()?;
    let d = dim;
    let q = jet_block(d);
    let n = positions.len() / d;
    let mut g = DMatrix::zeros(n * q, n * q);
    for i in 0..n {
        for j in 0..n {
            let xi = &positions[i * d..(i + 1) * d];
            let xj = &positions[j * d..(j + 1) * d];
            let r: Vec<f64> = xi.iter().zip(xj).map(|(a, b)| a - b).collect();
            let s = r.iter().map(|v| v * v).sum::<f64>();
            let [f0, f1, f2, _] = kernel.gaussian_derivs(s);
            let (ri, cj) = (i * q, j * q);
            for a in 0..d {
                g[(ri + a, cj + a)] = f0;
                for b in 0..d {
                    // xdot_i^a <- mu_j^{ab}
                    g[(ri + a, cj + d + a * d + b)] = -2.0 * f1 * r[b];
                    // nu_i^{ab} <- p_j^a
                    g[(ri + d + a * d + b, cj + a)] = 2.0 * f1 * r[b];
                    for c in 0..d {
                        // nu_i^{ac} <- mu_j^{ab}
                        let delta = if b == c { 1.0 } else { 0.0 };
                        g[(ri + d + a * d + c, cj + d + a * d + b)] =
                            -(4.0 * f2 * r[b] * r[c] + 2.0 * f1 * delta);
                    }
                }
            }
        }
    }
    Ok(g)
}

/// Momenta `(p, mu)` whose jet field reproduces velocities `xdot_i` and
/// gradients `nu_i` at the particles. `frame_rates` are row-major `d x d`
/// per particle.
pub fn solve_k1(
    kernel: &RadialKernel,
    dim: usize,
    positions: &[f64],
    velocities: &[f64],
    frame_rates: &[f64],
    options: InterpOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    kernel.require_smooth()?;
    let d = dim;
    let n = positions.len() / d;
    if velocities.len() != n * d || frame_rates.len() != n * d * d {
        return Err(Error::InvalidState("velocity or frame-rate arrays have the wrong size".into()));
    }
    if options.incompressible {
        for i in 0..n {
            let tr: f64 = (0..d).map(|a| frame_rates[i * d * d + a * d + a]).sum();
            let scale = frame_rates[i * d * d..(i + 1) * d * d]
                .iter()
                .map(|v| v.abs())
                .fold(1.0, f64::max);
            if tr.abs() > 1e-12 * scale {
                return Err(Error::ConstraintViolation(format!(
                    "frame rate {i} has trace {tr}; incompressible frames need traceless rates"
                )));
            }
        }
    }
    let q = jet_block(d);
    let factor = GramFactor::new(gram_k1(kernel, d, positions)?, options.jitter, d, positions)?;
    let mut rhs = DVector::zeros(n * q);
    for i in 0..n {
        for a in 0..d {
            rhs[i * q + a] = velocities[i * d + a];
        }
        for e in 0..d * d {
            rhs[i * q + d + e] = frame_rates[i * d * d + e];
        }
    }
    let z = factor.solve(&rhs);
    let mut p = vec![0.0; n * d];
    let mut mu = vec![0.0; n * d * d];
    for i in 0..n {
        for a in 0..d {
            p[i * d + a] = z[i * q + a];
        }
        for e in 0..d * d {
            mu[i * d * d + e] = z[i * q + d + e];
        }
    }
    Ok((p, mu))
}

fn jet_view<'a>(kernel: &RadialKernel, state: &'a JetParticleState, mu: &'a [f64]) -> Result<KernelField<'a>> {
    KernelField::jet(*kernel, state.dim, &state.positions, &state.momenta, mu)
}

pub fn eval_field_k1(kernel: &RadialKernel, state: &JetParticleState, query: &[f64]) -> Result<Vec<f64>> {
    check_query(state.dim, query)?;
    let mu = state.frame_momenta();
    Ok(jet_view(kernel, state, &mu)?.velocity(query))
}

pub fn eval_grad_k1(kernel: &RadialKernel, state: &JetParticleState, query: &[f64]) -> Result<DMatrix<f64>> {
    check_query(state.dim, query)?;
    let mu = state.frame_momenta();
    jet_view(kernel, state, &mu)?.gradient(query)
}

pub fn eval_hessian_k1(
    kernel: &RadialKernel,
    state: &JetParticleState,
    query: &[f64],
) -> Result<Vec<DMatrix<f64>>> {
    check_query(state.dim, query)?;
    let mu = state.frame_momenta();
    jet_view(kernel, state, &mu)?.hessian(query)
}
