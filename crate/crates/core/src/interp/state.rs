use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Landmark particles: positions and conjugate momenta, stored row-major
/// (`count x dim`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub dim: usize,
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
}

impl ParticleState {
    pub fn new(dim: usize, positions: Vec<f64>, momenta: Vec<f64>) -> Result<Self> {
        let s = Self {
            dim,
            positions,
            momenta,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_rows(positions: &[Vec<f64>], momenta: &[Vec<f64>]) -> Result<Self> {
        let dim = positions.first().map(Vec::len).unwrap_or(0);
        Self::new(dim, flatten(positions, dim)?, flatten(momenta, dim)?)
    }

    pub fn count(&self) -> usize {
        self.positions.len() / self.dim.max(1)
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn momentum(&self, i: usize) -> &[f64] {
        &self.momenta[i * self.dim..(i + 1) * self.dim]
    }

    pub fn validate(&self) -> Result<()> {
        validate_points(self.dim, &self.positions)?;
        if self.momenta.len() != self.positions.len() {
            return Err(Error::InvalidState(format!(
                "momenta has {} entries, positions has {}",
                self.momenta.len(),
                self.positions.len()
            )));
        }
        check_finite("momenta", &self.momenta)
    }
}

/// First-order jet particles in canonical variables `(x, D, p, P)`.
///
/// Frames `D_i` and their conjugates `P_i` are `dim x dim`, flattened
/// row-major per particle. The frame momentum `mu_i = P_i D_i^T` pairs
/// with the frame rate `nu_i = Ddot_i D_i^{-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetParticleState {
    pub dim: usize,
    pub positions: Vec<f64>,
    pub frames: Vec<f64>,
    pub momenta: Vec<f64>,
    pub frame_conjugates: Vec<f64>,
}

impl JetParticleState {
    pub fn new(
        dim: usize,
        positions: Vec<f64>,
        frames: Vec<f64>,
        momenta: Vec<f64>,
        frame_conjugates: Vec<f64>,
    ) -> Result<Self> {
        let s = Self {
            dim,
            positions,
            frames,
            momenta,
            frame_conjugates,
        };
        s.validate()?;
        Ok(s)
    }

    /// Builds a state from frame momenta `mu_i`, converting them to the
    /// canonical conjugates `P_i = mu_i D_i^{-T}`.
    pub fn from_frame_momenta(
        dim: usize,
        positions: Vec<f64>,
        frames: Vec<f64>,
        momenta: Vec<f64>,
        frame_momenta: Vec<f64>,
    ) -> Result<Self> {
        validate_points(dim, &positions)?;
        let n = positions.len() / dim;
        let dd = dim * dim;
        if frames.len() != n * dd || frame_momenta.len() != n * dd {
            return Err(Error::InvalidState(
                "frames and frame momenta need dim*dim entries per particle".into(),
            ));
        }
        let mut conj = vec![0.0; n * dd];
        for i in 0..n {
            let d = DMatrix::from_row_slice(dim, dim, &frames[i * dd..(i + 1) * dd]);
            let mu = DMatrix::from_row_slice(dim, dim, &frame_momenta[i * dd..(i + 1) * dd]);
            let d_inv_t = d
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidState(format!("frame {i} is singular")))?
                .transpose();
            write_row_major(&(mu * d_inv_t), &mut conj[i * dd..(i + 1) * dd]);
        }
        Self::new(dim, positions, frames, momenta, conj)
    }

    /// Particles at `positions` with identity frames, zero momenta and the
    /// given frame momenta.
    pub fn with_identity_frames(dim: usize, positions: Vec<f64>, frame_momenta: Vec<f64>) -> Result<Self> {
        let n = positions.len() / dim.max(1);
        let mut frames = vec![0.0; n * dim * dim];
        for i in 0..n {
            for a in 0..dim {
                frames[i * dim * dim + a * dim + a] = 1.0;
            }
        }
        let momenta = vec![0.0; positions.len()];
        // With D = I the conjugate equals mu.
        Self::new(dim, positions, frames, momenta, frame_momenta)
    }

    pub fn count(&self) -> usize {
        self.positions.len() / self.dim.max(1)
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frame(&self, i: usize) -> DMatrix<f64> {
        let dd = self.dim * self.dim;
        DMatrix::from_row_slice(self.dim, self.dim, &self.frames[i * dd..(i + 1) * dd])
    }

    pub fn frame_conjugate(&self, i: usize) -> DMatrix<f64> {
        let dd = self.dim * self.dim;
        DMatrix::from_row_slice(
            self.dim,
            self.dim,
            &self.frame_conjugates[i * dd..(i + 1) * dd],
        )
    }

    pub fn frame_momentum(&self, i: usize) -> DMatrix<f64> {
        self.frame_conjugate(i) * self.frame(i).transpose()
    }

    /// All `mu_i = P_i D_i^T`, flattened row-major.
    pub fn frame_momenta(&self) -> Vec<f64> {
        let dd = self.dim * self.dim;
        let mut out = vec![0.0; self.count() * dd];
        for i in 0..self.count() {
            write_row_major(&self.frame_momentum(i), &mut out[i * dd..(i + 1) * dd]);
        }
        out
    }

    pub fn landmarks(&self) -> ParticleState {
        ParticleState {
            dim: self.dim,
            positions: self.positions.clone(),
            momenta: self.momenta.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_points(self.dim, &self.positions)?;
        let n = self.count();
        let dd = self.dim * self.dim;
        if self.momenta.len() != n * self.dim
            || self.frames.len() != n * dd
            || self.frame_conjugates.len() != n * dd
        {
            return Err(Error::InvalidState("jet state arrays have inconsistent sizes".into()));
        }
        check_finite("momenta", &self.momenta)?;
        check_finite("frames", &self.frames)?;
        check_finite("frame momenta", &self.frame_conjugates)?;
        for i in 0..n {
            if self.frame(i).determinant() == 0.0 {
                return Err(Error::InvalidState(format!("frame {i} is singular")));
            }
        }
        Ok(())
    }

    /// Checks the unit-volume frame and traceless frame-momentum
    /// constraints of the incompressible setting.
    pub fn validate_incompressible(&self) -> Result<()> {
        for i in 0..self.count() {
            let det = self.frame(i).determinant();
            if (det - 1.0).abs() > 1e-9 {
                return Err(Error::ConstraintViolation(format!(
                    "frame {i} has determinant {det}, expected 1"
                )));
            }
            let tr = self.frame_momentum(i).trace();
            let scale = self.frame_momentum(i).norm().max(1.0);
            if tr.abs() > 1e-9 * scale {
                return Err(Error::ConstraintViolation(format!(
                    "frame momentum {i} has trace {tr}, expected 0"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn flatten(rows: &[Vec<f64>], dim: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len() * dim);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::InvalidState(format!(
                "row {i} has {} entries, expected {dim}",
                r.len()
            )));
        }
        out.extend_from_slice(r);
    }
    Ok(out)
}

pub(crate) fn write_row_major(m: &DMatrix<f64>, out: &mut [f64]) {
    let c = m.ncols();
    for a in 0..m.nrows() {
        for b in 0..c {
            out[a * c + b] = m[(a, b)];
        }
    }
}

fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidState(format!("{what} contain non-finite entries")))
    }
}

fn validate_points(dim: usize, positions: &[f64]) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidState(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    if positions.is_empty() || positions.len() % dim != 0 {
        return Err(Error::InvalidState(format!(
            "positions length {} is not a positive multiple of {dim}",
            positions.len()
        )));
    }
    check_finite("positions", positions)?;
    if let Some((i, j, d)) = closest_pair(dim, positions) {
        if d == 0.0 {
            return Err(Error::InvalidState(format!(
                "particles {i} and {j} coincide"
            )));
        }
    }
    Ok(())
}

/// Closest pair of points and their distance, or `None` for a single point.
pub fn closest_pair(dim: usize, positions: &[f64]) -> Option<(usize, usize, f64)> {
    let n = positions.len() / dim;
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d = dist2(&positions[i * dim..(i + 1) * dim], &positions[j * dim..(j + 1) * dim]);
            if best.is_none_or(|b| d < b.2) {
                best = Some((i, j, d));
            }
        }
    }
    best.map(|(i, j, d)| (i, j, d.sqrt()))
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
