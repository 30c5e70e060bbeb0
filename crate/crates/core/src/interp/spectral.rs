//! Fixed divergence-free Fourier basis on a 2D periodic box.
//!
//! Each wave-vector `k` (taken from a half-plane so `k` and `-k` are not
//! both present) contributes `k_perp/|k| cos(2 pi k.m / L)` and the matching
//! sine field; two constant fields carry the mean flow. All fields are
//! normalized in `L^2` of the box, so `|c|^2 / 2` is the kinetic energy of
//! the interpolated field.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::field::VelocityField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    pub box_len: f64,
    pub cutoff: f64,
    modes: Vec<[i32; 2]>,
}

/// Relative singular-value threshold below which the matching matrix is
/// considered rank deficient.
const RANK_TOL: f64 = 1e-10;

impl SpectralBasis {
    pub fn new(box_len: f64, cutoff: f64) -> Result<Self> {
        if !(box_len.is_finite() && box_len > 0.0) {
            return Err(Error::Domain(format!("box length must be positive, got {box_len}")));
        }
        if !(cutoff.is_finite() && cutoff >= 1.0) {
            return Err(Error::Domain(format!("spectral cutoff must be >= 1, got {cutoff}")));
        }
        let kmax = cutoff.floor() as i32;
        let mut modes = Vec::new();
        for kx in 0..=kmax {
            for ky in -kmax..=kmax {
                let upper = kx > 0 || ky > 0;
                if upper && ((kx * kx + ky * ky) as f64) <= cutoff * cutoff {
                    modes.push([kx, ky]);
                }
            }
        }
        Ok(Self {
            box_len,
            cutoff,
            modes,
        })
    }

    pub fn modes(&self) -> &[[i32; 2]] {
        &self.modes
    }

    /// Number of basis fields (two per mode plus the two mean fields).
    pub fn len(&self) -> usize {
        2 + 2 * self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value of every basis field at `m`, as a `2 x len` matrix written
    /// into `out` column by column.
    fn eval_all(&self, m: &[f64], out: &mut [[f64; 2]]) {
        let l = self.box_len;
        out[0] = [1.0 / l, 0.0];
        out[1] = [0.0, 1.0 / l];
        let amp = 2f64.sqrt() / l;
        for (k, &[kx, ky]) in self.modes.iter().enumerate() {
            let (kx, ky) = (kx as f64, ky as f64);
            let norm = kx.hypot(ky);
            let pol = [-ky / norm, kx / norm];
            let theta = 2.0 * PI * (kx * m[0] + ky * m[1]) / l;
            let (s, c) = theta.sin_cos();
            out[2 + 2 * k] = [amp * pol[0] * c, amp * pol[1] * c];
            out[3 + 2 * k] = [amp * pol[0] * s, amp * pol[1] * s];
        }
    }

    /// Gradients of every basis field at `m`; `out[j][a][b] = d_b w_j^a`.
    fn grad_all(&self, m: &[f64], out: &mut [[[f64; 2]; 2]]) {
        let l = self.box_len;
        out[0] = [[0.0; 2]; 2];
        out[1] = [[0.0; 2]; 2];
        let amp = 2f64.sqrt() / l;
        for (k, &[kx, ky]) in self.modes.iter().enumerate() {
            let (kx, ky) = (kx as f64, ky as f64);
            let norm = kx.hypot(ky);
            let pol = [-ky / norm, kx / norm];
            let wave = [2.0 * PI * kx / l, 2.0 * PI * ky / l];
            let theta = wave[0] * m[0] + wave[1] * m[1];
            let (s, c) = theta.sin_cos();
            for a in 0..2 {
                for b in 0..2 {
                    out[2 + 2 * k][a][b] = -amp * pol[a] * s * wave[b];
                    out[3 + 2 * k][a][b] = amp * pol[a] * c * wave[b];
                }
            }
        }
    }

    /// Matching matrix `A[(2k + a), j] = w_j^a(x_k)`.
    pub fn matching_matrix(&self, positions: &[f64]) -> DMatrix<f64> {
        let n = positions.len() / 2;
        let nb = self.len();
        let mut a = DMatrix::zeros(2 * n, nb);
        let mut vals = vec![[0.0; 2]; nb];
        for k in 0..n {
            self.eval_all(&positions[2 * k..2 * k + 2], &mut vals);
            for (j, v) in vals.iter().enumerate() {
                a[(2 * k, j)] = v[0];
                a[(2 * k + 1, j)] = v[1];
            }
        }
        a
    }

    pub fn field<'a>(&'a self, coefficients: &'a [f64]) -> SpectralField<'a> {
        SpectralField {
            basis: self,
            coefficients,
        }
    }
}

/// Minimum-norm coefficients `c` with `sum_j c_j w_j(x_k) = xdot_k`.
pub fn solve_spectral(basis: &SpectralBasis, positions: &[f64], velocities: &[f64]) -> Result<Vec<f64>> {
    if positions.len() % 2 != 0 || velocities.len() != positions.len() {
        return Err(Error::InvalidState(
            "spectral backend needs 2D positions and matching velocities".into(),
        ));
    }
    let rows = positions.len();
    if rows > basis.len() {
        return Err(Error::DegenerateGeometry(format!(
            "{rows} matching constraints exceed {} basis fields",
            basis.len()
        )));
    }
    let a = basis.matching_matrix(positions);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin < RANK_TOL * smax {
        return Err(Error::DegenerateGeometry(format!(
            "matching matrix is rank deficient (singular value ratio {:.3e})",
            smin / smax
        )));
    }
    let b = DVector::from_column_slice(velocities);
    let c = svd
        .solve(&b, RANK_TOL * smax)
        .map_err(|e| Error::DegenerateGeometry(e.to_string()))?;
    Ok(c.iter().copied().collect())
}

/// Field `sum_j c_j w_j` of a spectral basis.
#[derive(Debug, Clone, Copy)]
pub struct SpectralField<'a> {
    pub basis: &'a SpectralBasis,
    pub coefficients: &'a [f64],
}

impl VelocityField for SpectralField<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn velocity(&self, m: &[f64]) -> Vec<f64> {
        let mut vals = vec![[0.0; 2]; self.basis.len()];
        self.basis.eval_all(m, &mut vals);
        let mut u = vec![0.0; 2];
        for (c, v) in self.coefficients.iter().zip(&vals) {
            u[0] += c * v[0];
            u[1] += c * v[1];
        }
        u
    }

    fn gradient(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        let mut grads = vec![[[0.0; 2]; 2]; self.basis.len()];
        self.basis.grad_all(m, &mut grads);
        let mut g = DMatrix::zeros(2, 2);
        for (c, gr) in self.coefficients.iter().zip(&grads) {
            for a in 0..2 {
                for b in 0..2 {
                    g[(a, b)] += c * gr[a][b];
                }
            }
        }
        Ok(g)
    }
}
