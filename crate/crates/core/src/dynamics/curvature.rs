//! Pointwise values of the curvature two-form of the landmark interpolation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::interp::{solve_k0, InterpOptions, KernelField, VelocityField};
use crate::kernel::RadialKernel;

/// Relative base-perturbation step for the derivative of the solve.
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSample {
    pub query: Vec<f64>,
    pub value: Vec<f64>,
    /// Sum of the magnitudes of the four terms that cancel in `value`;
    /// the natural unit for judging how close `value` is to zero.
    pub scale: f64,
}

/// `B(v, w)(m) = dI(v, w)(m) + [I(v), I(w)](m)` where
/// `dI(v, w) = D_v I(w) - D_w I(v)` differentiates the solve in the base
/// point and `[X, Y] = DY . X - DX . Y`.
///
/// With this sign convention the value vanishes at every particle.
pub fn curvature_value(
    kernel: &RadialKernel,
    dim: usize,
    positions: &[f64],
    xdot: &[f64],
    xdelta: &[f64],
    query: &[f64],
) -> Result<CurvatureSample> {
    kernel.require_smooth()?;
    if xdot.len() != positions.len() || xdelta.len() != positions.len() || query.len() != dim {
        return Err(Error::InvalidState("curvature inputs differ in size".into()));
    }
    let opts = InterpOptions::default();

    let lift = |base: &[f64], w: &[f64]| -> Result<Vec<f64>> {
        let p = solve_k0(kernel, dim, base, w, opts)?;
        Ok(KernelField::landmark(*kernel, dim, base, &p).velocity(query))
    };
    let directional = |v: &[f64], w: &[f64]| -> Result<Vec<f64>> {
        let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if vmax == 0.0 {
            return Ok(vec![0.0; dim]);
        }
        let eps = FD_STEP * kernel.length_scale / vmax;
        let at = |t: f64| {
            let base: Vec<f64> = positions.iter().zip(v).map(|(x, d)| x + t * d).collect();
            lift(&base, w)
        };
        // Fourth-order central stencil.
        let (p1, m1, p2, m2) = (at(eps)?, at(-eps)?, at(2.0 * eps)?, at(-2.0 * eps)?);
        Ok((0..dim)
            .map(|a| (8.0 * (p1[a] - m1[a]) - (p2[a] - m2[a])) / (12.0 * eps))
            .collect())
    };

    let dv_w = directional(xdot, xdelta)?;
    let dw_v = directional(xdelta, xdot)?;

    let pv = solve_k0(kernel, dim, positions, xdot, opts)?;
    let pw = solve_k0(kernel, dim, positions, xdelta, opts)?;
    let fv = KernelField::landmark(*kernel, dim, positions, &pv);
    let fw = KernelField::landmark(*kernel, dim, positions, &pw);
    let (uv, uw) = (fv.velocity(query), fw.velocity(query));
    let (gv, gw) = (fv.gradient(query)?, fw.gradient(query)?);
    let adv_w = matvec(&gw, &uv);
    let adv_v = matvec(&gv, &uw);

    let value: Vec<f64> = (0..dim)
        .map(|a| (dv_w[a] - dw_v[a]) + (adv_w[a] - adv_v[a]))
        .collect();
    let scale = [&dv_w, &dw_v, &adv_w, &adv_v].iter().map(|t| norm(t)).sum();
    Ok(CurvatureSample {
        query: query.to_vec(),
        value,
        scale,
    })
}

fn matvec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|a| (0..m.ncols()).map(|b| m[(a, b)] * v[b]).sum()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-r..r)).collect()
    }

    #[test]
    fn vanishes_at_particles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = RadialKernel::gaussian(1.0);
        for _ in 0..5 {
            let pos = random(&mut rng, 8, 1.5);
            let v = random(&mut rng, 8, 1.0);
            let w = random(&mut rng, 8, 1.0);
            for i in 0..4 {
                let c = curvature_value(&k, 2, &pos, &v, &w, &pos[2 * i..2 * i + 2]).unwrap();
                assert!(norm(&c.value) <= 1e-8 * c.scale, "{c:?}");
            }
        }
    }

    #[test]
    fn antisymmetric_and_zero_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let k = RadialKernel::gaussian(0.8);
        let pos = random(&mut rng, 6, 1.0);
        let v = random(&mut rng, 6, 1.0);
        let w = random(&mut rng, 6, 1.0);
        let m = [0.3, -0.4];
        let a = curvature_value(&k, 2, &pos, &v, &w, &m).unwrap();
        let b = curvature_value(&k, 2, &pos, &w, &v, &m).unwrap();
        for i in 0..2 {
            assert_eq!(a.value[i], -b.value[i]);
        }
        let d = curvature_value(&k, 2, &pos, &v, &v, &m).unwrap();
        assert!(d.value.iter().all(|x| *x == 0.0));
        // Away from the particles the form is genuinely nonzero.
        assert!(norm(&a.value) > 1e-6);
    }

    #[test]
    fn single_particle_on_a_line_is_flat() {
        let k = RadialKernel::gaussian(1.0);
        for q in 0..20 {
            let m = [-3.0 + 0.3 * q as f64];
            let c = curvature_value(&k, 1, &[0.2], &[1.0], &[-0.7], &m).unwrap();
            assert!(c.value[0].abs() <= 1e-8);
        }
    }

    #[test]
    fn single_particle_in_the_plane_matches_closed_form() {
        // One particle: I(w)(m) = phi(|m-x|^2) w, so both terms are explicit
        // and the form reduces to
        // 2 phi'(phi - 1) [((m-x).v) w - ((m-x).w) v].
        let k = RadialKernel::gaussian(1.0);
        let x = [0.1, -0.2];
        let (v, w) = ([1.0, 0.5], [-0.3, 0.8]);
        for q in 0..20 {
            let t = q as f64 * 0.37;
            let m = [x[0] + 1.5 * t.cos(), x[1] + 0.9 * t.sin()];
            let r = [m[0] - x[0], m[1] - x[1]];
            let s = r[0] * r[0] + r[1] * r[1];
            let c = 2.0 * k.value_d1(s) * (k.value(s) - 1.0);
            let (rv, rw) = (r[0] * v[0] + r[1] * v[1], r[0] * w[0] + r[1] * w[1]);
            let expect = [c * (rv * w[0] - rw * v[0]), c * (rv * w[1] - rw * v[1])];
            let got = curvature_value(&k, 2, &x, &v, &w, &m).unwrap();
            for a in 0..2 {
                assert!((got.value[a] - expect[a]).abs() <= 1e-8, "{got:?} vs {expect:?}");
            }
        }
    }

    #[test]
    fn exponential_kernel_rejected() {
        let k = RadialKernel::exponential(1.0);
        assert!(curvature_value(&k, 1, &[0.0], &[1.0], &[1.0], &[0.5]).is_err());
    }
}
