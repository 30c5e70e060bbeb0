//! Gaussian vortex blobs in the plane, and their comparison with spin-only
//! jet particles.
//!
//! Each blob carries a circulation `Gamma_i` and induces
//! `K(r) = r_perp / (2 pi |r|^2) (1 - exp(-|r|^2 / delta^2))`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, Flow, IntegratorConfig};
use crate::interp::{JetParticleState, VelocityField};
use crate::kernel::RadialKernel;
use crate::system::{check_collisions, monitor_at_particles, rows, JetModel, MethodTag, Model, TrajectoryRecord};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobState {
    /// `N x 2`, row-major.
    pub positions: Vec<f64>,
    pub strengths: Vec<f64>,
    pub delta: f64,
}

impl BlobState {
    pub fn new(positions: Vec<f64>, strengths: Vec<f64>, delta: f64) -> Result<Self> {
        let s = Self {
            positions,
            strengths,
            delta,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn count(&self) -> usize {
        self.strengths.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Domain(format!("blob width must be positive, got {}", self.delta)));
        }
        if self.positions.len() != 2 * self.strengths.len() {
            return Err(Error::InvalidState("blob positions must be N x 2 with N strengths".into()));
        }
        if self.strengths.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidState("non-finite blob strength".into()));
        }
        if let Some((i, j, distance)) = crate::interp::closest_pair(2, &self.positions) {
            if distance == 0.0 {
                return Err(Error::InvalidState(format!("blobs {i} and {j} coincide")));
            }
        }
        Ok(())
    }
}

/// `(1 - exp(-s / delta^2)) / s`, with its limit `1 / delta^2` at `s = 0`.
fn profile(s: f64, delta: f64) -> f64 {
    let d2 = delta * delta;
    if s == 0.0 {
        1.0 / d2
    } else {
        -(-s / d2).exp_m1() / s
    }
}

/// Derivative of `profile` in `s`.
fn profile_d1(s: f64, delta: f64) -> f64 {
    let d2 = delta * delta;
    let x = s / d2;
    if x < 0.5 {
        // sum_{n>=2} (-1)^(n-1) (n-1)/n! x^(n-2)
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut fact = 1.0;
        for n in 2..20 {
            fact *= n as f64;
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            sum += sign * (n - 1) as f64 / fact * term;
            term *= x;
        }
        sum / (d2 * d2)
    } else {
        let e = (-x).exp();
        (x * e + (-x).exp_m1()) / (s * s)
    }
}

/// Blob kernel `K_delta(r)`; zero at `r = 0`.
pub fn krasny_kernel(r: [f64; 2], delta: f64) -> [f64; 2] {
    let s = r[0] * r[0] + r[1] * r[1];
    let f = profile(s, delta) / (2.0 * PI);
    [-r[1] * f, r[0] * f]
}

/// `dK^a / dr_b`.
pub fn krasny_gradient(r: [f64; 2], delta: f64) -> [[f64; 2]; 2] {
    let s = r[0] * r[0] + r[1] * r[1];
    let f = profile(s, delta);
    let df = profile_d1(s, delta);
    let perp = [-r[1], r[0]];
    let j = [[0.0, -1.0], [1.0, 0.0]];
    let mut g = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            g[a][b] = (f * j[a][b] + 2.0 * df * perp[a] * r[b]) / (2.0 * PI);
        }
    }
    g
}

pub fn blob_velocity(state: &BlobState, query: &[f64]) -> [f64; 2] {
    let mut u = [0.0; 2];
    for (x, g) in state.positions.chunks(2).zip(&state.strengths) {
        let k = krasny_kernel([query[0] - x[0], query[1] - x[1]], state.delta);
        u[0] += g * k[0];
        u[1] += g * k[1];
    }
    u
}

/// `xdot_i = sum_{j != i} Gamma_j K(x_i - x_j)`.
pub fn blob_eom(state: &BlobState) -> Vec<f64> {
    let n = state.count();
    let x = &state.positions;
    let mut v = vec![0.0; 2 * n];
    for i in 0..n {
        for j in i + 1..n {
            let k = krasny_kernel([x[2 * i] - x[2 * j], x[2 * i + 1] - x[2 * j + 1]], state.delta);
            // K is odd in r.
            for a in 0..2 {
                v[2 * i + a] += state.strengths[j] * k[a];
                v[2 * j + a] -= state.strengths[i] * k[a];
            }
        }
    }
    v
}

/// Jacobian of `blob_eom` with respect to all positions.
pub fn blob_jacobian(state: &BlobState) -> DMatrix<f64> {
    let n = state.count();
    let x = &state.positions;
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let g = krasny_gradient([x[2 * i] - x[2 * j], x[2 * i + 1] - x[2 * j + 1]], state.delta);
            for a in 0..2 {
                for b in 0..2 {
                    let v = state.strengths[j] * g[a][b];
                    jac[(2 * i + a, 2 * i + b)] += v;
                    jac[(2 * i + a, 2 * j + b)] -= v;
                }
            }
        }
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobInvariants {
    pub total_circulation: f64,
    pub linear_impulse: [f64; 2],
    pub angular_impulse: f64,
}

pub fn blob_invariants(state: &BlobState) -> BlobInvariants {
    let mut inv = BlobInvariants {
        total_circulation: 0.0,
        linear_impulse: [0.0; 2],
        angular_impulse: 0.0,
    };
    for (x, g) in state.positions.chunks(2).zip(&state.strengths) {
        inv.total_circulation += g;
        inv.linear_impulse[0] += g * x[0];
        inv.linear_impulse[1] += g * x[1];
        inv.angular_impulse += g * (x[0] * x[0] + x[1] * x[1]);
    }
    inv
}

/// Exponential integral `E1(x)` for `x > 0`.
fn exp_integral_e1(x: f64) -> f64 {
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..40 {
            term *= -x / k as f64;
            sum -= term / k as f64;
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Modified Lentz on the continued fraction 1/(x+1-1/(x+3-4/(x+5-...))).
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `ln s + E1(s / delta^2)`, regular at `s = 0`.
fn log_plus_e1(s: f64, delta: f64) -> f64 {
    let x = s / (delta * delta);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..40 {
            term *= -x / k as f64;
            sum -= term / k as f64;
        }
        2.0 * delta.ln() - EULER_GAMMA + sum
    } else {
        s.ln() + exp_integral_e1(x)
    }
}

/// `H = -1/(4 pi) sum_{i<j} Gamma_i Gamma_j (ln r_ij^2 + E1(r_ij^2 / delta^2))`,
/// the Hamiltonian with `Gamma_i xdot_i = dH/dy_i`, `Gamma_i ydot_i = -dH/dx_i`.
pub fn blob_hamiltonian(state: &BlobState) -> f64 {
    let n = state.count();
    let x = &state.positions;
    let mut h = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let s = (x[2 * i] - x[2 * j]).powi(2) + (x[2 * i + 1] - x[2 * j + 1]).powi(2);
            h -= state.strengths[i] * state.strengths[j] * log_plus_e1(s, state.delta);
        }
    }
    h / (4.0 * PI)
}

/// Velocity field of a blob configuration, with analytic gradient.
#[derive(Debug, Clone, Copy)]
pub struct BlobField<'a> {
    pub positions: &'a [f64],
    pub strengths: &'a [f64],
    pub delta: f64,
}

impl VelocityField for BlobField<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn velocity(&self, m: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; 2];
        for (x, g) in self.positions.chunks(2).zip(self.strengths) {
            let k = krasny_kernel([m[0] - x[0], m[1] - x[1]], self.delta);
            u[0] += g * k[0];
            u[1] += g * k[1];
        }
        u
    }

    fn gradient(&self, m: &[f64]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(2, 2);
        for (x, g) in self.positions.chunks(2).zip(self.strengths) {
            let k = krasny_gradient([m[0] - x[0], m[1] - x[1]], self.delta);
            for a in 0..2 {
                for b in 0..2 {
                    out[(a, b)] += g * k[a][b];
                }
            }
        }
        Ok(out)
    }
}

/// Blob dynamics on the phase vector `[x]`, strengths held fixed.
#[derive(Debug, Clone)]
pub struct BlobModel {
    pub strengths: Vec<f64>,
    pub delta: f64,
}

impl BlobModel {
    pub fn state(&self, z: &[f64]) -> BlobState {
        BlobState {
            positions: z.to_vec(),
            strengths: self.strengths.clone(),
            delta: self.delta,
        }
    }
}

impl Flow for BlobModel {
    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&blob_eom(&self.state(z)));
        Ok(())
    }

    fn check_state(&self, z: &[f64]) -> Result<()> {
        check_collisions(2, z, self.delta)
    }

    fn monitor(&self, z: &[f64]) -> Result<f64> {
        monitor_at_particles(self, z)
    }
}

impl Model for BlobModel {
    fn tag(&self) -> MethodTag {
        MethodTag::VortexBlob
    }
    fn dim(&self) -> usize {
        2
    }
    fn count(&self) -> usize {
        self.strengths.len()
    }
    fn length_scale(&self) -> f64 {
        self.delta
    }
    fn state_len(&self) -> usize {
        2 * self.strengths.len()
    }

    fn momenta<'a>(&self, _z: &'a [f64]) -> &'a [f64] {
        &[]
    }

    /// `sum_i |Gamma_i| |x_i|^2`.
    fn angular_scale(&self, z: &[f64]) -> f64 {
        z.chunks(2)
            .zip(&self.strengths)
            .map(|(x, g)| g.abs() * (x[0] * x[0] + x[1] * x[1]))
            .sum()
    }

    fn energy(&self, z: &[f64]) -> Result<f64> {
        Ok(blob_hamiltonian(&self.state(z)))
    }

    /// `max(|H|, sum_{i<j} |Gamma_i Gamma_j| / (4 pi))`: the logarithmic
    /// energy has no natural zero and vanishes at unit separation.
    fn energy_scale(&self, z: &[f64]) -> f64 {
        let g = &self.strengths;
        let mut c = 0.0;
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                c += (g[i] * g[j]).abs();
            }
        }
        blob_hamiltonian(&self.state(z)).abs().max(c / (4.0 * PI))
    }

    fn linear_momentum(&self, z: &[f64]) -> Vec<f64> {
        blob_invariants(&self.state(z)).linear_impulse.to_vec()
    }

    fn angular_momentum(&self, z: &[f64]) -> Vec<f64> {
        vec![blob_invariants(&self.state(z)).angular_impulse]
    }

    fn field<'a>(&'a self, z: &'a [f64]) -> Result<Box<dyn VelocityField + 'a>> {
        Ok(Box::new(BlobField {
            positions: z,
            strengths: &self.strengths,
            delta: self.delta,
        }))
    }

    fn record(&self, t: f64, z: &[f64]) -> TrajectoryRecord {
        TrajectoryRecord {
            t,
            positions: rows(z, 2),
            momenta: Vec::new(),
            frames: None,
            frame_momenta: None,
            frame_conjugates: None,
        }
    }

    fn state_from_record(&self, r: &TrajectoryRecord) -> Result<Vec<f64>> {
        if r.positions.len() != self.count() || r.positions.iter().any(|x| x.len() != 2) {
            return Err(Error::InvalidState("record does not match the blob count".into()));
        }
        Ok(r.positions.iter().flatten().copied().collect())
    }
}

/// Spin-only jets matching a blob configuration: `p = 0`, `D = I`,
/// Gaussian width `delta / sqrt(2)` and `mu_i = Gamma_i / (4 pi) J`, so an
/// isolated jet spins its neighbourhood at the blob core rate
/// `Gamma / (2 pi delta^2)`.
pub fn matching_jets(blobs: &BlobState) -> Result<(RadialKernel, JetParticleState)> {
    let kernel = RadialKernel::new(crate::kernel::KernelFamily::Gaussian, blobs.delta / 2f64.sqrt())?;
    let mu: Vec<f64> = blobs
        .strengths
        .iter()
        .flat_map(|g| {
            let c = g / (4.0 * PI);
            [0.0, -c, c, 0.0]
        })
        .collect();
    let jets = JetParticleState::with_identity_frames(2, blobs.positions.clone(), mu)?;
    Ok((kernel, jets))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    /// Largest position difference between matched particles per record.
    pub discrepancy: Vec<f64>,
    pub max_discrepancy: f64,
    /// Largest `|p_i|` seen on the jet side.
    pub max_jet_momentum: f64,
    pub momentum_within_tolerance: bool,
    /// Net angle swept by particle 0 about the centroid.
    pub blob_rotation: f64,
    pub jet_rotation: f64,
    pub sign_consistent: bool,
}

fn swept_angle(track: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for z in track {
        let n = z.len() / 2;
        let (cx, cy) = (
            z.chunks(2).map(|p| p[0]).sum::<f64>() / n as f64,
            z.chunks(2).map(|p| p[1]).sum::<f64>() / n as f64,
        );
        let a = (z[1] - cy).atan2(z[0] - cx);
        if let Some(p) = prev {
            let mut d = a - p;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            total += d;
        }
        prev = Some(a);
    }
    total
}

/// Runs the same configuration as blobs and as jets and reports how far
/// the two particle sets drift apart.
pub fn compare_states(
    blobs: &BlobState,
    kernel: &RadialKernel,
    jets: &JetParticleState,
    config: &IntegratorConfig,
    tolerance: f64,
) -> Result<ComparisonReport> {
    blobs.validate()?;
    if jets.dim != 2 || jets.count() != blobs.count() {
        return Err(Error::Config(format!(
            "comparison needs matching 2D particle sets, got {} blobs and {} jets",
            blobs.count(),
            jets.count()
        )));
    }
    let n = blobs.count();
    let blob_model = BlobModel {
        strengths: blobs.strengths.clone(),
        delta: blobs.delta,
    };
    let jet_model = JetModel::new(*kernel, 2, n, false)?;

    let mut blob_track: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut obs = |_k: usize, t: f64, z: &[f64]| {
        blob_track.push((t, z.to_vec()));
        Ok(())
    };
    integrate(&blob_model, &blobs.positions, config, &mut [&mut obs])?;

    let mut jet_track: Vec<Vec<f64>> = Vec::new();
    let mut max_p: f64 = 0.0;
    let mut obs = |_k: usize, _t: f64, z: &[f64]| {
        let p = jet_model.momenta(z);
        for c in p.chunks(2) {
            max_p = max_p.max(c[0].hypot(c[1]));
        }
        jet_track.push(jet_model.positions(z).to_vec());
        Ok(())
    };
    integrate(&jet_model, &JetModel::pack(jets), config, &mut [&mut obs])?;

    let discrepancy: Vec<f64> = blob_track
        .iter()
        .zip(&jet_track)
        .map(|((_, b), j)| {
            b.chunks(2)
                .zip(j.chunks(2))
                .map(|(a, c)| (a[0] - c[0]).hypot(a[1] - c[1]))
                .fold(0.0, f64::max)
        })
        .collect();
    let blob_positions: Vec<Vec<f64>> = blob_track.iter().map(|(_, z)| z.clone()).collect();
    let blob_rotation = swept_angle(&blob_positions);
    let jet_rotation = swept_angle(&jet_track);
    let sign = |a: f64| if a.abs() < 1e-12 { 0.0 } else { a.signum() };
    Ok(ComparisonReport {
        times: blob_track.iter().map(|(t, _)| *t).collect(),
        max_discrepancy: discrepancy.iter().copied().fold(0.0, f64::max),
        discrepancy,
        max_jet_momentum: max_p,
        momentum_within_tolerance: max_p <= tolerance,
        blob_rotation,
        jet_rotation,
        sign_consistent: sign(blob_rotation) == sign(jet_rotation),
    })
}

/// `compare_states` against the jets built by `matching_jets`.
pub fn compare_with_jets(blobs: &BlobState, config: &IntegratorConfig, tolerance: f64) -> Result<ComparisonReport> {
    let (kernel, jets) = matching_jets(blobs)?;
    compare_states(blobs, &kernel, &jets, config, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_induction_is_zero() {
        let s = BlobState::new(vec![0.3, 0.4], vec![2.0], 0.1).unwrap();
        assert_eq!(blob_velocity(&s, &[0.3, 0.4]), [0.0, 0.0]);
        assert_eq!(blob_eom(&s), vec![0.0, 0.0]);
    }

    #[test]
    fn point_vortex_limit() {
        let delta = 0.1;
        let s = BlobState::new(vec![0.0, 0.0], vec![2.0 * PI], delta).unwrap();
        let u = blob_velocity(&s, &[1.0, 0.0]);
        assert!(u[0].abs() < 1e-15);
        assert!((u[1] - (1.0 - (-1.0 / (delta * delta)).exp())).abs() < 1e-15);
    }

    #[test]
    fn opposite_pair_midpoint_velocity() {
        let s = BlobState::new(vec![-0.5, 0.0, 0.5, 0.0], vec![1.0, -1.0], 0.2).unwrap();
        let u = blob_velocity(&s, &[0.0, 0.0]);
        assert_eq!(u[0], 0.0);
        assert!(u[1] != 0.0);
        let v = blob_eom(&s);
        assert_eq!((v[0], v[1]), (v[2], v[3]));
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn corotating_centroid_is_stationary() {
        let s = BlobState::new(vec![-0.5, 0.0, 0.5, 0.0], vec![1.0, 1.0], 0.2).unwrap();
        let v = blob_eom(&s);
        assert_eq!(v[0] + v[2], 0.0);
        assert_eq!(v[1] + v[3], 0.0);
    }

    #[test]
    fn invariant_examples() {
        let s = BlobState::new(vec![1.0, 0.0], vec![3.0], 0.1).unwrap();
        let inv = blob_invariants(&s);
        assert_eq!(inv.total_circulation, 3.0);
        assert_eq!(inv.linear_impulse, [3.0, 0.0]);
        assert_eq!(inv.angular_impulse, 3.0);
        let s = BlobState::new(vec![0.0, 0.0, 1.0, 0.0], vec![2.0, -2.0], 0.1).unwrap();
        assert_eq!(blob_invariants(&s).total_circulation, 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let delta = 0.4;
        for r in [[0.01, 0.02], [0.3, -0.1], [1.0, 2.0], [0.25, 0.1]] {
            let g = krasny_gradient(r, delta);
            let h = 1e-6;
            for b in 0..2 {
                let mut rp = r;
                let mut rm = r;
                rp[b] += h;
                rm[b] -= h;
                let (kp, km) = (krasny_kernel(rp, delta), krasny_kernel(rm, delta));
                for a in 0..2 {
                    let fd = (kp[a] - km[a]) / (2.0 * h);
                    assert!((fd - g[a][b]).abs() < 1e-8, "{r:?} {a}{b}: {fd} vs {}", g[a][b]);
                }
            }
        }
    }

    #[test]
    fn e1_reference_values() {
        // Tabulated E1(0.5), E1(1), E1(2), E1(10).
        assert!((exp_integral_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-14);
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-14);
        assert!((exp_integral_e1(2.0) - 0.048_900_510_708_061_12).abs() < 1e-15);
        assert!((exp_integral_e1(10.0) - 4.156_968_929_685_324e-6).abs() < 1e-19);
    }

    #[test]
    fn hamiltonian_generates_the_motion() {
        let s = BlobState::new(vec![0.0, 0.0, 0.3, 0.1, -0.2, 0.4], vec![1.0, -0.5, 2.0], 0.3).unwrap();
        let v = blob_eom(&s);
        let h = 1e-6;
        for i in 0..3 {
            for a in 0..2 {
                let mut p = s.clone();
                let mut m = s.clone();
                p.positions[2 * i + a] += h;
                m.positions[2 * i + a] -= h;
                let dh = (blob_hamiltonian(&p) - blob_hamiltonian(&m)) / (2.0 * h);
                // Gamma xdot = dH/dy, Gamma ydot = -dH/dx.
                let expect = if a == 1 { s.strengths[i] * v[2 * i] } else { -s.strengths[i] * v[2 * i + 1] };
                assert!((dh - expect).abs() < 1e-7, "particle {i} axis {a}: {dh} vs {expect}");
            }
        }
    }

    #[test]
    fn rejects_bad_states() {
        assert!(BlobState::new(vec![0.0, 0.0], vec![1.0], 0.0).is_err());
        assert!(BlobState::new(vec![0.0, 0.0, 0.0, 0.0], vec![1.0, 1.0], 0.1).is_err());
        assert!(BlobState::new(vec![0.0, 0.0], vec![f64::NAN], 0.1).is_err());
    }

    #[test]
    fn mismatched_counts_are_config_errors() {
        let blobs = BlobState::new(vec![0.0, 0.0, 1.0, 0.0], vec![1.0, 1.0], 0.5).unwrap();
        let jets = JetParticleState::with_identity_frames(2, vec![0.0, 0.0], vec![0.0; 4]).unwrap();
        let cfg = IntegratorConfig::default();
        let r = compare_states(&blobs, &RadialKernel::gaussian(0.3), &jets, &cfg, 1e-3);
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
