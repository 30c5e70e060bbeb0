use jetflow::dynamics::{eom_k0, eom_k1, hamiltonian_k0, hamiltonian_k1};
use jetflow::interp::{JetParticleState, ParticleState};
use jetflow::RadialKernel;
use proptest::prelude::*;

fn identity_plus(n: usize, d: usize, noise: &[f64]) -> Vec<f64> {
    (0..n * d * d)
        .map(|k| {
            let (a, b) = ((k % (d * d)) / d, k % d);
            (if a == b { 1.0 } else { 0.0 }) + noise[k]
        })
        .collect()
}

fn jet_state() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=3, 1usize..=4).prop_flat_map(|(d, n)| {
        (
            Just(d),
            prop::collection::vec(-1.5..1.5f64, n * d),
            prop::collection::vec(-0.2..0.2f64, n * d * d),
            prop::collection::vec(-1.0..1.0f64, n * d),
            prop::collection::vec(-1.0..1.0f64, n * d * d),
        )
    })
}

fn permute<T: Copy>(v: &[T], block: usize, perm: &[usize]) -> Vec<T> {
    perm.iter().flat_map(|&i| v[i * block..(i + 1) * block].iter().copied()).collect()
}

/// Directional central difference of `H` along the flow; zero for an
/// autonomous Hamiltonian system.
fn dh_along_flow(h: impl Fn(&[f64]) -> f64, z: &[f64], f: &[f64]) -> f64 {
    let e = 1e-6;
    let zp: Vec<f64> = z.iter().zip(f).map(|(a, b)| a + e * b).collect();
    let zm: Vec<f64> = z.iter().zip(f).map(|(a, b)| a - e * b).collect();
    (h(&zp) - h(&zm)) / (2.0 * e)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_is_permutation_symmetric((d, x, frames, p, conj) in jet_state(), seed in 0u64..1000) {
        let k = RadialKernel::gaussian(1.0);
        let n = x.len() / d;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left((seed as usize) % n.max(1));
        let frames = identity_plus(n, d, &frames);
        let s = ParticleState::new(d, x.clone(), p.clone()).unwrap();
        let sp = ParticleState::new(d, permute(&x, d, &perm), permute(&p, d, &perm)).unwrap();
        let (h, hp) = (hamiltonian_k0(&k, &s), hamiltonian_k0(&k, &sp));
        prop_assert!((h - hp).abs() <= 1e-13 * h.abs().max(1.0));
        prop_assert!(h >= -1e-14);

        let j = JetParticleState::new(d, x.clone(), frames.clone(), p.clone(), conj.clone()).unwrap();
        let jp = JetParticleState::new(
            d,
            permute(&x, d, &perm),
            permute(&frames, d * d, &perm),
            permute(&p, d, &perm),
            permute(&conj, d * d, &perm),
        )
        .unwrap();
        let (h, hp) = (hamiltonian_k1(&k, &j).unwrap(), hamiltonian_k1(&k, &jp).unwrap());
        prop_assert!((h - hp).abs() <= 1e-13 * h.abs().max(1.0));
        prop_assert!(h >= -1e-14);
    }

    #[test]
    fn energy_is_constant_along_the_flow((d, x, frames, p, conj) in jet_state()) {
        let k = RadialKernel::gaussian(1.0);
        let n = x.len() / d;
        let frames = identity_plus(n, d, &frames);

        let s = ParticleState::new(d, x.clone(), p.clone()).unwrap();
        let r = eom_k0(&k, &s).unwrap();
        let z = [x.clone(), p.clone()].concat();
        let f = [r.xdot, r.pdot].concat();
        let m = n * d;
        let h0 = |z: &[f64]| hamiltonian_k0(&k, &ParticleState::new(d, z[..m].to_vec(), z[m..].to_vec()).unwrap());
        let scale = f.iter().fold(1.0f64, |a, v| a.max(v.abs())).powi(2);
        prop_assert!(dh_along_flow(h0, &z, &f).abs() <= 1e-7 * scale);

        let js = JetParticleState::new(d, x.clone(), frames.clone(), p.clone(), conj.clone()).unwrap();
        let r = eom_k1(&k, &js, false).unwrap();
        let dd = n * d * d;
        let z = [x, frames, p, conj].concat();
        let f = [r.xdot, r.frames_dot, r.pdot, r.conjugates_dot].concat();
        let h1 = |z: &[f64]| {
            let st = JetParticleState::new(
                d,
                z[..m].to_vec(),
                z[m..m + dd].to_vec(),
                z[m + dd..2 * m + dd].to_vec(),
                z[2 * m + dd..].to_vec(),
            )
            .unwrap();
            hamiltonian_k1(&k, &st).unwrap()
        };
        let scale = f.iter().fold(1.0f64, |a, v| a.max(v.abs())).powi(2);
        prop_assert!(dh_along_flow(h1, &z, &f).abs() <= 1e-7 * scale);
    }

    #[test]
    fn total_momentum_rate_vanishes((d, x, frames, p, conj) in jet_state()) {
        let k = RadialKernel::gaussian(0.7);
        let n = x.len() / d;
        let r = eom_k0(&k, &ParticleState::new(d, x.clone(), p.clone()).unwrap()).unwrap();
        for a in 0..d {
            let s: f64 = (0..n).map(|i| r.pdot[i * d + a]).sum();
            prop_assert!(s.abs() <= 1e-13 * (1.0 + r.pdot.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        }
        let js = JetParticleState::new(d, x, identity_plus(n, d, &frames), p, conj).unwrap();
        let r = eom_k1(&k, &js, false).unwrap();
        for a in 0..d {
            let s: f64 = (0..n).map(|i| r.pdot[i * d + a]).sum();
            prop_assert!(s.abs() <= 1e-13 * (1.0 + r.pdot.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        }
    }
}

/// `H = 1/2 |w|^2_{L^2}` where `phi = psi * psi`,
/// `psi(r) = (pi sigma^2 / 2)^(-d/4) exp(-|r|^2 / sigma^2)` and
/// `w_a(z) = sum_i psi(x_i - z) p_ia + mu_i^ab (d_b psi)(x_i - z)`.
fn quadrature_energy(sigma: f64, x: &[f64], p: &[f64], mu: &[f64]) -> f64 {
    let c = (std::f64::consts::PI * sigma * sigma / 2.0).powf(-0.5);
    let (lo, hi, h) = (-6.0, 6.0, sigma / 12.0);
    let m = ((hi - lo) / h) as usize;
    let mut total = 0.0;
    for iy in 0..=m {
        for ix in 0..=m {
            let z = [lo + ix as f64 * h, lo + iy as f64 * h];
            let mut w = [0.0; 2];
            for i in 0..x.len() / 2 {
                let r = [x[2 * i] - z[0], x[2 * i + 1] - z[1]];
                let psi = c * (-(r[0] * r[0] + r[1] * r[1]) / (sigma * sigma)).exp();
                let dpsi = [-2.0 * r[0] / (sigma * sigma) * psi, -2.0 * r[1] / (sigma * sigma) * psi];
                for a in 0..2 {
                    w[a] += psi * p[2 * i + a];
                    w[a] += mu[4 * i + 2 * a] * dpsi[0] + mu[4 * i + 2 * a + 1] * dpsi[1];
                }
            }
            total += w[0] * w[0] + w[1] * w[1];
        }
    }
    0.5 * total * h * h
}

#[test]
fn hamiltonian_matches_l2_quadrature() {
    let sigma = 0.8;
    let k = RadialKernel::gaussian(sigma);
    let x = [-0.6, 0.1, 0.5, -0.3, 0.2, 0.9];
    let p = [0.7, -0.2, 0.1, 0.4, -0.5, 0.3];
    let mu = [0.3, -0.6, 0.2, 0.1, -0.4, 0.5, 0.0, 0.2, 0.1, 0.0, -0.3, 0.6];
    let zeros = [0.0; 12];

    let h0 = hamiltonian_k0(&k, &ParticleState::new(2, x.to_vec(), p.to_vec()).unwrap());
    let q0 = quadrature_energy(sigma, &x, &p, &zeros);
    assert!((h0 - q0).abs() <= 1e-10 * h0.abs(), "{h0} vs {q0}");

    let frames = identity_plus(3, 2, &zeros);
    let js = JetParticleState::new(2, x.to_vec(), frames, p.to_vec(), mu.to_vec()).unwrap();
    let h1 = hamiltonian_k1(&k, &js).unwrap();
    let q1 = quadrature_energy(sigma, &x, &p, &mu);
    assert!((h1 - q1).abs() <= 1e-10 * h1.abs(), "{h1} vs {q1}");
}
