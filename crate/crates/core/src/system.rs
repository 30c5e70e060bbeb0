//! Particle systems as flat phase vectors, one type per interpolation method.
//!
//! Layouts (row-major, `n` particles in `d` dimensions):
//!
//! | method        | phase vector            |
//! |---------------|-------------------------|
//! | `landmark_k0` | `[x, p]`                |
//! | `jet_k1`      | `[x, D, p, P]`          |
//! | `spectral_k0` | `[x, p]` (`d = 2`)      |
//! | `vortex_blob` | `[x]` (`d = 2`)         |

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::conserve::{noether_angular as angular_momentum, noether_linear as linear_momentum};
use crate::dynamics::{self, constraint_force_monitor};
use crate::error::{Error, Result};
use crate::integrate::Flow;
use crate::interp::{closest_pair, JetParticleState, KernelField, ParticleState, SpectralBasis, VelocityField};
use crate::kernel::RadialKernel;

/// Particles closer than this multiple of the length scale count as collided.
pub const COLLISION_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    LandmarkK0,
    JetK1,
    SpectralK0,
    VortexBlob,
}

impl MethodTag {
    pub fn name(self) -> &'static str {
        match self {
            MethodTag::LandmarkK0 => "landmark_k0",
            MethodTag::JetK1 => "jet_k1",
            MethodTag::SpectralK0 => "spectral_k0",
            MethodTag::VortexBlob => "vortex_blob",
        }
    }
}

/// One saved step of a trajectory. Matrices are nested row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub positions: Vec<Vec<f64>>,
    pub momenta: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_momenta: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_conjugates: Option<Vec<Vec<Vec<f64>>>>,
}

/// A particle method: its flow plus the quantities the diagnostics and
/// writers read off a phase vector.
pub trait Model: Flow {
    fn tag(&self) -> MethodTag;
    fn dim(&self) -> usize;
    fn count(&self) -> usize;
    fn length_scale(&self) -> f64;
    fn state_len(&self) -> usize;

    fn positions<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        &z[..self.count() * self.dim()]
    }

    /// Canonical particle momenta `p` (empty for vortex blobs).
    fn momenta<'a>(&self, z: &'a [f64]) -> &'a [f64];

    /// Scale for relative angular-momentum drift, `sum_i |x_i| |p_i|`.
    fn angular_scale(&self, z: &[f64]) -> f64 {
        let d = self.dim();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        self.positions(z)
            .chunks(d)
            .zip(self.momenta(z).chunks(d))
            .map(|(a, b)| norm(a) * norm(b))
            .sum()
    }

    fn energy(&self, z: &[f64]) -> Result<f64>;
    /// Scale for relative energy drift, `|H|` unless the energy is only
    /// defined up to a constant.
    fn energy_scale(&self, z: &[f64]) -> f64 {
        self.energy(z).map_or(0.0, f64::abs)
    }
    /// Conserved translational momentum (impulse for vortex blobs).
    fn linear_momentum(&self, z: &[f64]) -> Vec<f64>;
    /// Rotational momentum: one component in 2D, three in 3D.
    fn angular_momentum(&self, z: &[f64]) -> Vec<f64>;
    /// `D_i^T P_i` per particle, for jet systems only.
    fn jet_momenta(&self, _z: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }
    fn field<'a>(&'a self, z: &'a [f64]) -> Result<Box<dyn VelocityField + 'a>>;
    fn record(&self, t: f64, z: &[f64]) -> TrajectoryRecord;
    /// Inverse of `record`.
    fn state_from_record(&self, r: &TrajectoryRecord) -> Result<Vec<f64>>;
}

pub(crate) fn rows(flat: &[f64], d: usize) -> Vec<Vec<f64>> {
    flat.chunks(d).map(|c| c.to_vec()).collect()
}

pub(crate) fn matrices(flat: &[f64], d: usize) -> Vec<Vec<Vec<f64>>> {
    flat.chunks(d * d).map(|m| rows(m, d)).collect()
}

fn flatten_matrices(m: &[Vec<Vec<f64>>], d: usize, what: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(m.len() * d * d);
    for mat in m {
        if mat.len() != d || mat.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidState(format!("{what} must be {d}x{d} matrices")));
        }
        out.extend(mat.iter().flatten());
    }
    Ok(out)
}

pub(crate) fn check_collisions(dim: usize, positions: &[f64], length_scale: f64) -> Result<()> {
    if positions.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState("non-finite position".into()));
    }
    if let Some((i, j, distance)) = closest_pair(dim, positions) {
        if distance < COLLISION_FRACTION * length_scale {
            return Err(Error::Collision { i, j, distance });
        }
    }
    Ok(())
}

pub(crate) fn monitor_at_particles(model: &dyn Model, z: &[f64]) -> Result<f64> {
    let field = model.field(z)?;
    let pts = rows(model.positions(z), model.dim());
    constraint_force_monitor(field.as_ref(), &pts)
}

// ---------------------------------------------------------------- landmarks

#[derive(Debug, Clone)]
pub struct LandmarkModel {
    pub kernel: RadialKernel,
    pub dim: usize,
    pub count: usize,
}

impl LandmarkModel {
    pub fn pack(state: &ParticleState) -> Vec<f64> {
        [state.positions.as_slice(), state.momenta.as_slice()].concat()
    }

    pub fn unpack(&self, z: &[f64]) -> ParticleState {
        let m = self.count * self.dim;
        ParticleState {
            dim: self.dim,
            positions: z[..m].to_vec(),
            momenta: z[m..2 * m].to_vec(),
        }
    }

    fn split<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        z.split_at(self.count * self.dim)
    }
}

impl Flow for LandmarkModel {
    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let r = dynamics::eom_k0(&self.kernel, &self.unpack(z))?;
        let m = self.count * self.dim;
        out[..m].copy_from_slice(&r.xdot);
        out[m..].copy_from_slice(&r.pdot);
        Ok(())
    }

    fn check_state(&self, z: &[f64]) -> Result<()> {
        check_collisions(self.dim, self.split(z).0, self.kernel.length_scale)
    }

    fn monitor(&self, z: &[f64]) -> Result<f64> {
        monitor_at_particles(self, z)
    }
}

impl Model for LandmarkModel {
    fn tag(&self) -> MethodTag {
        MethodTag::LandmarkK0
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn count(&self) -> usize {
        self.count
    }
    fn length_scale(&self) -> f64 {
        self.kernel.length_scale
    }
    fn state_len(&self) -> usize {
        2 * self.count * self.dim
    }

    fn momenta<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        self.split(z).1
    }

    fn energy(&self, z: &[f64]) -> Result<f64> {
        Ok(dynamics::hamiltonian_k0(&self.kernel, &self.unpack(z)))
    }

    fn linear_momentum(&self, z: &[f64]) -> Vec<f64> {
        linear_momentum(self.dim, self.split(z).1)
    }

    fn angular_momentum(&self, z: &[f64]) -> Vec<f64> {
        let (x, p) = self.split(z);
        angular_momentum(self.dim, x, p, None)
    }

    fn field<'a>(&'a self, z: &'a [f64]) -> Result<Box<dyn VelocityField + 'a>> {
        let (x, p) = self.split(z);
        Ok(Box::new(KernelField::landmark(self.kernel, self.dim, x, p)))
    }

    fn record(&self, t: f64, z: &[f64]) -> TrajectoryRecord {
        let (x, p) = self.split(z);
        TrajectoryRecord {
            t,
            positions: rows(x, self.dim),
            momenta: rows(p, self.dim),
            frames: None,
            frame_momenta: None,
            frame_conjugates: None,
        }
    }

    fn state_from_record(&self, r: &TrajectoryRecord) -> Result<Vec<f64>> {
        let s = ParticleState::from_rows(&r.positions, &r.momenta)?;
        if s.dim != self.dim || s.count() != self.count {
            return Err(Error::InvalidState("record does not match the system size".into()));
        }
        Ok(Self::pack(&s))
    }
}

// ---------------------------------------------------------------- jets

#[derive(Debug, Clone)]
pub struct JetModel {
    pub kernel: RadialKernel,
    pub dim: usize,
    pub count: usize,
    pub incompressible: bool,
}

/// Owned jet field, so that `mu = P D^T` can outlive the phase vector view.
struct JetFieldOwned<'a> {
    kernel: RadialKernel,
    dim: usize,
    positions: &'a [f64],
    momenta: &'a [f64],
    mu: Vec<f64>,
}

impl JetFieldOwned<'_> {
    fn view(&self) -> KernelField<'_> {
        KernelField {
            kernel: self.kernel,
            dim: self.dim,
            positions: self.positions,
            momenta: self.momenta,
            frame_momenta: Some(&self.mu),
        }
    }
}

impl VelocityField for JetFieldOwned<'_> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn velocity(&self, m: &[f64]) -> Vec<f64> {
        self.view().velocity(m)
    }
    fn gradient(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        self.view().gradient(m)
    }
}

impl JetModel {
    pub fn new(kernel: RadialKernel, dim: usize, count: usize, incompressible: bool) -> Result<Self> {
        kernel.require_smooth()?;
        Ok(Self {
            kernel,
            dim,
            count,
            incompressible,
        })
    }

    pub fn pack(state: &JetParticleState) -> Vec<f64> {
        [
            state.positions.as_slice(),
            state.frames.as_slice(),
            state.momenta.as_slice(),
            state.frame_conjugates.as_slice(),
        ]
        .concat()
    }

    fn offsets(&self) -> [usize; 4] {
        let (nd, ndd) = (self.count * self.dim, self.count * self.dim * self.dim);
        [nd, nd + ndd, 2 * nd + ndd, 2 * nd + 2 * ndd]
    }

    pub fn unpack(&self, z: &[f64]) -> JetParticleState {
        let [a, b, c, e] = self.offsets();
        JetParticleState {
            dim: self.dim,
            positions: z[..a].to_vec(),
            frames: z[a..b].to_vec(),
            momenta: z[b..c].to_vec(),
            frame_conjugates: z[c..e].to_vec(),
        }
    }
}

impl Flow for JetModel {
    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let r = dynamics::eom_k1(&self.kernel, &self.unpack(z), self.incompressible)?;
        let [a, b, c, e] = self.offsets();
        out[..a].copy_from_slice(&r.xdot);
        out[a..b].copy_from_slice(&r.frames_dot);
        out[b..c].copy_from_slice(&r.pdot);
        out[c..e].copy_from_slice(&r.conjugates_dot);
        Ok(())
    }

    fn check_state(&self, z: &[f64]) -> Result<()> {
        check_collisions(self.dim, self.positions(z), self.kernel.length_scale)
    }

    fn monitor(&self, z: &[f64]) -> Result<f64> {
        monitor_at_particles(self, z)
    }
}

impl Model for JetModel {
    fn tag(&self) -> MethodTag {
        MethodTag::JetK1
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn count(&self) -> usize {
        self.count
    }
    fn length_scale(&self) -> f64 {
        self.kernel.length_scale
    }
    fn state_len(&self) -> usize {
        self.offsets()[3]
    }

    fn momenta<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        let [_, b, c, _] = self.offsets();
        &z[b..c]
    }

    fn energy(&self, z: &[f64]) -> Result<f64> {
        dynamics::hamiltonian_k1(&self.kernel, &self.unpack(z))
    }

    fn linear_momentum(&self, z: &[f64]) -> Vec<f64> {
        let [_, b, c, _] = self.offsets();
        linear_momentum(self.dim, &z[b..c])
    }

    fn angular_momentum(&self, z: &[f64]) -> Vec<f64> {
        let s = self.unpack(z);
        angular_momentum(self.dim, &s.positions, &s.momenta, Some(&s.frame_momenta()))
    }

    fn jet_momenta(&self, z: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let s = self.unpack(z);
        Some(
            (0..self.count)
                .map(|i| s.frame(i).transpose() * s.frame_conjugate(i))
                .collect(),
        )
    }

    fn field<'a>(&'a self, z: &'a [f64]) -> Result<Box<dyn VelocityField + 'a>> {
        let [a, b, c, _] = self.offsets();
        Ok(Box::new(JetFieldOwned {
            kernel: self.kernel,
            dim: self.dim,
            positions: &z[..a],
            momenta: &z[b..c],
            mu: self.unpack(z).frame_momenta(),
        }))
    }

    fn record(&self, t: f64, z: &[f64]) -> TrajectoryRecord {
        let s = self.unpack(z);
        let d = self.dim;
        TrajectoryRecord {
            t,
            positions: rows(&s.positions, d),
            momenta: rows(&s.momenta, d),
            frames: Some(matrices(&s.frames, d)),
            frame_momenta: Some(matrices(&s.frame_momenta(), d)),
            frame_conjugates: Some(matrices(&s.frame_conjugates, d)),
        }
    }

    fn state_from_record(&self, r: &TrajectoryRecord) -> Result<Vec<f64>> {
        let d = self.dim;
        let lm = ParticleState::from_rows(&r.positions, &r.momenta)?;
        if lm.dim != d || lm.count() != self.count {
            return Err(Error::InvalidState("record does not match the system size".into()));
        }
        let frames = match &r.frames {
            Some(f) => flatten_matrices(f, d, "frames")?,
            None => return Err(Error::InvalidState("jet record without frames".into())),
        };
        let state = match (&r.frame_conjugates, &r.frame_momenta) {
            (Some(pc), _) => JetParticleState::new(d, lm.positions, frames, lm.momenta, flatten_matrices(pc, d, "frame_conjugates")?)?,
            (None, Some(mu)) => JetParticleState::from_frame_momenta(d, lm.positions, frames, lm.momenta, flatten_matrices(mu, d, "frame_momenta")?)?,
            (None, None) => return Err(Error::InvalidState("jet record without frame momenta".into())),
        };
        Ok(Self::pack(&state))
    }
}

// ---------------------------------------------------------------- spectral

/// Landmark dynamics with the fixed Fourier basis: `c = A^T p`,
/// `H = |c|^2 / 2`, `xdot_i = u(x_i)`, `pdot_i = -Du(x_i)^T p_i`.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    pub basis: SpectralBasis,
    pub count: usize,
}

struct SpectralFieldOwned<'a> {
    basis: &'a SpectralBasis,
    coefficients: Vec<f64>,
}

impl VelocityField for SpectralFieldOwned<'_> {
    fn dim(&self) -> usize {
        2
    }
    fn velocity(&self, m: &[f64]) -> Vec<f64> {
        self.basis.field(&self.coefficients).velocity(m)
    }
    fn gradient(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        self.basis.field(&self.coefficients).gradient(m)
    }
}

impl SpectralModel {
    pub fn coefficients(&self, z: &[f64]) -> Vec<f64> {
        let (x, p) = z.split_at(2 * self.count);
        let a = self.basis.matching_matrix(x);
        let pv = nalgebra::DVector::from_column_slice(p);
        (a.transpose() * pv).iter().copied().collect()
    }

    /// Momenta `p = (A A^T)^-1 xdot` realizing the least-norm coefficients.
    pub fn momenta_for(&self, positions: &[f64], velocities: &[f64]) -> Result<Vec<f64>> {
        // Validates rank and size.
        crate::interp::solve_spectral(&self.basis, positions, velocities)?;
        let a = self.basis.matching_matrix(positions);
        let gram = &a * a.transpose();
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::DegenerateGeometry("spectral Gram matrix is singular".into()))?;
        Ok(chol.solve(&nalgebra::DVector::from_column_slice(velocities)).iter().copied().collect())
    }

    fn min_image_check(&self, x: &[f64]) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite position".into()));
        }
        let l = self.basis.box_len;
        for i in 0..self.count {
            for j in i + 1..self.count {
                let mut s = 0.0;
                for a in 0..2 {
                    let mut d = (x[2 * i + a] - x[2 * j + a]).rem_euclid(l);
                    d = d.min(l - d);
                    s += d * d;
                }
                let distance = s.sqrt();
                if distance < COLLISION_FRACTION * self.length_scale() {
                    return Err(Error::Collision { i, j, distance });
                }
            }
        }
        Ok(())
    }
}

impl Flow for SpectralModel {
    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.count;
        let c = self.coefficients(z);
        let f = self.basis.field(&c);
        for i in 0..n {
            let xi = &z[2 * i..2 * i + 2];
            let pi = &z[2 * n + 2 * i..2 * n + 2 * i + 2];
            let u = f.velocity(xi);
            let g = f.gradient(xi)?;
            out[2 * i] = u[0];
            out[2 * i + 1] = u[1];
            for b in 0..2 {
                out[2 * n + 2 * i + b] = -(g[(0, b)] * pi[0] + g[(1, b)] * pi[1]);
            }
        }
        Ok(())
    }

    fn check_state(&self, z: &[f64]) -> Result<()> {
        self.min_image_check(&z[..2 * self.count])
    }

    fn monitor(&self, z: &[f64]) -> Result<f64> {
        monitor_at_particles(self, z)
    }
}

impl Model for SpectralModel {
    fn tag(&self) -> MethodTag {
        MethodTag::SpectralK0
    }
    fn dim(&self) -> usize {
        2
    }
    fn count(&self) -> usize {
        self.count
    }
    /// Shortest resolved wavelength.
    fn length_scale(&self) -> f64 {
        self.basis.box_len / self.basis.cutoff
    }
    fn state_len(&self) -> usize {
        4 * self.count
    }

    fn momenta<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        &z[2 * self.count..4 * self.count]
    }

    fn energy(&self, z: &[f64]) -> Result<f64> {
        Ok(0.5 * self.coefficients(z).iter().map(|c| c * c).sum::<f64>())
    }

    fn linear_momentum(&self, z: &[f64]) -> Vec<f64> {
        linear_momentum(2, &z[2 * self.count..])
    }

    /// Not conserved on the torus; reported for completeness.
    /// Empty: the torus has no rotational symmetry.
    fn angular_momentum(&self, _z: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    fn field<'a>(&'a self, z: &'a [f64]) -> Result<Box<dyn VelocityField + 'a>> {
        Ok(Box::new(SpectralFieldOwned {
            basis: &self.basis,
            coefficients: self.coefficients(z),
        }))
    }

    fn record(&self, t: f64, z: &[f64]) -> TrajectoryRecord {
        let (x, p) = z.split_at(2 * self.count);
        TrajectoryRecord {
            t,
            positions: rows(x, 2),
            momenta: rows(p, 2),
            frames: None,
            frame_momenta: None,
            frame_conjugates: None,
        }
    }

    fn state_from_record(&self, r: &TrajectoryRecord) -> Result<Vec<f64>> {
        let s = ParticleState::from_rows(&r.positions, &r.momenta)?;
        if s.dim != 2 || s.count() != self.count {
            return Err(Error::InvalidState("record does not match the system size".into()));
        }
        Ok(LandmarkModel::pack(&s))
    }
}
