//! Acceptance gate. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Measured values come from test-side oracles: direct
//! kernel sums, finite differences, an independent blob integrator and
//! analytic point-vortex formulas.

use std::f64::consts::PI;
use std::io::Write;

use jetflow::dynamics::{curvature_value, eom_k0, eom_k1, hamiltonian_k1};
use jetflow::integrate::{integrate, IntegratorConfig, Method};
use jetflow::interp::{solve_k0, solve_k1, solve_spectral, InterpOptions, JetParticleState, ParticleState, SpectralBasis, VelocityField};
use jetflow::scenario::Scenario;
use jetflow::vortex::{compare_with_jets, BlobState};
use jetflow::RadialKernel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Line {
    criterion: usize,
    what: String,
    measured: f64,
    bound: String,
    pass: Option<bool>,
}

#[derive(Default)]
struct Gate {
    lines: Vec<Line>,
}

impl Gate {
    fn at_most(&mut self, criterion: usize, what: impl Into<String>, measured: f64, bound: f64) {
        self.push(criterion, what, measured, format!("<= {bound:e}"), Some(measured <= bound));
    }

    fn within(&mut self, criterion: usize, what: impl Into<String>, measured: f64, lo: f64, hi: f64) {
        self.push(criterion, what, measured, format!("in [{lo}, {hi}]"), Some((lo..=hi).contains(&measured)));
    }

    fn holds(&mut self, criterion: usize, what: impl Into<String>, ok: bool) {
        self.push(criterion, what, f64::from(u8::from(ok)), "holds".into(), Some(ok));
    }

    fn report(&mut self, criterion: usize, what: impl Into<String>, measured: f64) {
        self.push(criterion, what, measured, "reported".into(), None);
    }

    fn push(&mut self, criterion: usize, what: impl Into<String>, measured: f64, bound: String, pass: Option<bool>) {
        let line = Line {
            criterion,
            what: what.into(),
            measured,
            bound,
            pass,
        };
        let status = match line.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        // Bypasses the test harness capture so the gate is always visible.
        let _ = writeln!(
            std::io::stderr(),
            "{status} [{:>2}] {}: {:.3e} ({})",
            line.criterion,
            line.what,
            line.measured,
            line.bound
        );
        self.lines.push(line);
    }
}

// ---------------------------------------------------------------------------
// Test-side kernel oracles, Gaussian phi(s) = exp(-s / (2 sigma^2)).

fn phi(sigma: f64, s: f64) -> [f64; 3] {
    let a = 1.0 / (2.0 * sigma * sigma);
    let v = (-a * s).exp();
    [v, -a * v, a * a * v]
}

fn sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Jet field and its gradient `g[a][c] = d_c u^a` at `m`; `mu = None` gives
/// the landmark field.
fn field(sigma: f64, d: usize, x: &[f64], p: &[f64], mu: Option<&[f64]>, m: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut u = vec![0.0; d];
    let mut g = vec![vec![0.0; d]; d];
    for j in 0..x.len() / d {
        let r: Vec<f64> = (0..d).map(|a| m[a] - x[j * d + a]).collect();
        let [f0, f1, f2] = phi(sigma, sq(&r));
        let pj = &p[j * d..(j + 1) * d];
        for a in 0..d {
            u[a] += f0 * pj[a];
            for c in 0..d {
                g[a][c] += 2.0 * f1 * r[c] * pj[a];
            }
        }
        if let Some(mu) = mu {
            let mj = &mu[j * d * d..(j + 1) * d * d];
            for a in 0..d {
                let mr: f64 = (0..d).map(|b| mj[a * d + b] * r[b]).sum();
                u[a] -= 2.0 * f1 * mr;
                for c in 0..d {
                    g[a][c] -= 2.0 * (2.0 * f2 * r[c] * mr + f1 * mj[a * d + c]);
                }
            }
        }
    }
    (u, g)
}

/// `H = 1/2 sum_i (p_i . u(x_i) + mu_i : Du(x_i))`.
fn energy(sigma: f64, d: usize, x: &[f64], p: &[f64], mu: Option<&[f64]>) -> f64 {
    let mut h = 0.0;
    for i in 0..x.len() / d {
        let (u, g) = field(sigma, d, x, p, mu, &x[i * d..(i + 1) * d]);
        for a in 0..d {
            h += p[i * d + a] * u[a];
            if let Some(mu) = mu {
                for b in 0..d {
                    h += mu[i * d * d + a * d + b] * g[a][b];
                }
            }
        }
    }
    0.5 * h
}

/// Landmark energy in the cancellation-free form
/// `1/2 |sum p|^2 - sum_{i<j} (1 - phi_ij) p_i . p_j`.
fn landmark_energy(sigma: f64, d: usize, x: &[f64], p: &[f64]) -> f64 {
    let n = x.len() / d;
    let total: Vec<f64> = (0..d).map(|a| (0..n).map(|i| p[i * d + a]).sum()).collect();
    let mut h = 0.5 * sq(&total);
    for i in 0..n {
        for j in i + 1..n {
            let r: Vec<f64> = (0..d).map(|a| x[i * d + a] - x[j * d + a]).collect();
            let one_minus = -(-sq(&r) / (2.0 * sigma * sigma)).exp_m1();
            let pp: f64 = (0..d).map(|a| p[i * d + a] * p[j * d + a]).sum();
            h -= one_minus * pp;
        }
    }
    h
}

/// Row-major `A B` and `A^T B` for square `d x d` blocks.
fn matmul(d: usize, a: &[f64], b: &[f64], transpose_a: bool) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            c[i * d + j] = (0..d)
                .map(|k| {
                    let aik = if transpose_a { a[k * d + i] } else { a[i * d + k] };
                    aik * b[k * d + j]
                })
                .sum();
        }
    }
    c
}

/// `mu_i = P_i D_i^T` for every particle.
fn frame_momenta(d: usize, frames: &[f64], conj: &[f64]) -> Vec<f64> {
    let dd = d * d;
    frames
        .chunks(dd)
        .zip(conj.chunks(dd))
        .flat_map(|(f, c)| {
            let ft: Vec<f64> = (0..dd).map(|k| f[(k % d) * d + k / d]).collect();
            matmul(d, c, &ft, false)
        })
        .collect()
}

fn points(rng: &mut ChaCha8Rng, n: usize, d: usize, half: f64, min_sep: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = Vec::new();
    while pts.len() < n * d {
        let c: Vec<f64> = (0..d).map(|_| rng.random_range(-half..=half)).collect();
        if pts.chunks(d).all(|q| sq(&q.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>()) >= min_sep * min_sep) {
            pts.extend(c);
        }
    }
    pts
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-s..=s)).collect()
}

fn identity(n: usize, d: usize) -> Vec<f64> {
    (0..n * d * d).map(|k| if (k % (d * d)) / d == k % d { 1.0 } else { 0.0 }).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------------------

fn interpolation_exactness(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let sigma = 1.0;
    let k = RadialKernel::gaussian(sigma);
    let (mut e0, mut e1, mut eg) = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..100 {
        let d = 2 + trial % 2;
        let n = rng.random_range(1..=16);
        let x = points(&mut rng, n, d, 2.5, 0.7);
        let v = uniform(&mut rng, n * d, 1.0);
        let rates = uniform(&mut rng, n * d * d, 1.0);
        let (vs, rs) = (max_abs(&v), max_abs(&rates));

        let p = solve_k0(&k, d, &x, &v, InterpOptions::default()).unwrap();
        for i in 0..n {
            let (u, _) = field(sigma, d, &x, &p, None, &x[i * d..(i + 1) * d]);
            for a in 0..d {
                e0 = e0.max((u[a] - v[i * d + a]).abs() / vs);
            }
        }
        let (p, mu) = solve_k1(&k, d, &x, &v, &rates, InterpOptions::default()).unwrap();
        for i in 0..n {
            let (u, g) = field(sigma, d, &x, &p, Some(&mu), &x[i * d..(i + 1) * d]);
            for a in 0..d {
                e1 = e1.max((u[a] - v[i * d + a]).abs() / vs);
                for b in 0..d {
                    eg = eg.max((g[a][b] - rates[i * d * d + a * d + b]).abs() / rs);
                }
            }
        }
    }
    gate.at_most(1, "k=0 velocity at particles, 100 states", e0, 1e-10);
    gate.at_most(1, "k=1 velocity at particles, 100 states", e1, 1e-10);
    gate.at_most(1, "k=1 gradient at particles, 100 states", eg, 1e-9);
}

fn central_difference(z: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-6;
    let mut w = z.to_vec();
    (0..z.len())
        .map(|k| {
            w[k] = z[k] + h;
            let fp = f(&w);
            w[k] = z[k] - h;
            let fm = f(&w);
            w[k] = z[k];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

fn gradient_oracle(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let sigma = 1.0;
    let k = RadialKernel::gaussian(sigma);
    let (mut e0, mut e1, mut eh) = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..50 {
        let d = 2 + trial % 2;
        let n = rng.random_range(2..=6);
        let x = points(&mut rng, n, d, 1.5, 0.3);
        let p = uniform(&mut rng, n * d, 1.0);

        let rates = eom_k0(&k, &ParticleState::new(d, x.clone(), p.clone()).unwrap()).unwrap();
        let fd = central_difference(&x, |y| energy(sigma, d, y, &p, None));
        let scale = max_abs(&fd);
        e0 = e0.max(rates.pdot.iter().zip(&fd).map(|(a, b)| (a + b).abs() / scale).fold(0.0, f64::max));

        let frames: Vec<f64> = identity(n, d).iter().zip(uniform(&mut rng, n * d * d, 0.2)).map(|(a, b)| a + b).collect();
        let conj = uniform(&mut rng, n * d * d, 1.0);
        let mu = frame_momenta(d, &frames, &conj);
        let js = JetParticleState::new(d, x.clone(), frames, p.clone(), conj).unwrap();
        let rates = eom_k1(&k, &js, false).unwrap();
        let fd = central_difference(&x, |y| energy(sigma, d, y, &p, Some(&mu)));
        let scale = max_abs(&fd);
        e1 = e1.max(rates.pdot.iter().zip(&fd).map(|(a, b)| (a + b).abs() / scale).fold(0.0, f64::max));

        let h = hamiltonian_k1(&k, &js).unwrap();
        eh = eh.max((h - energy(sigma, d, &x, &p, Some(&mu))).abs() / h.abs().max(1e-300));
    }
    gate.at_most(2, "k=0 pdot vs -dH/dx by central differences, 50 states", e0, 1e-6);
    gate.at_most(2, "k=1 pdot vs -dH/dx by central differences, 50 states", e1, 1e-6);
    gate.report(2, "k=1 library H vs test-side H", eh);
}

/// Phase vectors of a preset run with implicit midpoint, `dt = 1e-2`, to `t = 10`,
/// one per step.
fn midpoint_run(preset: &str) -> (Scenario, Vec<(f64, Vec<f64>)>) {
    let mut s = Scenario::preset(preset).unwrap();
    s.integrator.method = Method::ImplicitMidpoint;
    s.integrator.dt = 1e-2;
    s.integrator.t_end = 10.0;
    s.integrator.observer_stride = 1;
    let built = s.build().unwrap();
    let mut track = Vec::new();
    let mut obs = |_k: usize, t: f64, z: &[f64]| -> jetflow::Result<()> {
        track.push((t, z.to_vec()));
        Ok(())
    };
    integrate(built.model.as_ref(), &built.initial, &s.integrator, &mut [&mut obs]).unwrap();
    (s, track)
}

/// Splits a 2D phase vector into `(x, p, mu)`; `mu` only for jets.
fn split(jet: bool, n: usize, z: &[f64]) -> (Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
    if jet {
        let (x, rest) = z.split_at(2 * n);
        let (frames, rest) = rest.split_at(4 * n);
        let (p, conj) = rest.split_at(2 * n);
        (x.to_vec(), p.to_vec(), Some(frame_momenta(2, frames, conj)))
    } else {
        let (x, p) = z.split_at(2 * n);
        (x.to_vec(), p.to_vec(), None)
    }
}

fn angular(x: &[f64], p: &[f64], mu: Option<&[f64]>) -> f64 {
    let mut l = 0.0;
    for i in 0..x.len() / 2 {
        l += x[2 * i] * p[2 * i + 1] - x[2 * i + 1] * p[2 * i];
        if let Some(mu) = mu {
            l += mu[4 * i + 2] - mu[4 * i + 1];
        }
    }
    l
}

/// `oint u . dl` over a circle of radius `eps`, 64-point trapezoid rule.
fn loop_circulation(sigma: f64, x: &[f64], p: &[f64], mu: Option<&[f64]>, c: &[f64], eps: f64) -> f64 {
    let m = 64;
    (0..m)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / m as f64;
            let q = [c[0] + eps * th.cos(), c[1] + eps * th.sin()];
            let (u, _) = field(sigma, 2, x, p, mu, &q);
            (-u[0] * th.sin() + u[1] * th.cos()) * eps
        })
        .sum::<f64>()
        * (2.0 * PI / m as f64)
}

fn conservation(gate: &mut Gate) {
    for preset in ["headon_pair_k0", "corotating_jets"] {
        let (s, track) = midpoint_run(preset);
        let jet = preset == "corotating_jets";
        let sigma = s.kernel.as_ref().unwrap().length_scale;
        let n = s.initial.positions.as_ref().unwrap().len();
        let energy_of = |z: &[f64]| {
            let (x, p, mu) = split(jet, n, z);
            if jet {
                energy(sigma, 2, &x, &p, mu.as_deref())
            } else {
                landmark_energy(sigma, 2, &x, &p)
            }
        };
        let (x0, p0, mu0) = split(jet, n, &track[0].1);
        let h0 = energy_of(&track[0].1);
        let l0 = angular(&x0, &p0, mu0.as_deref());
        let l_scale = l0.abs().max((0..n).map(|i| sq(&x0[2 * i..2 * i + 2]).sqrt() * sq(&p0[2 * i..2 * i + 2]).sqrt()).sum());
        let sum_p = |p: &[f64]| [p.iter().step_by(2).sum::<f64>(), p.iter().skip(1).step_by(2).sum::<f64>()];
        let ps0 = sum_p(&p0);
        let jet_matrix = |z: &[f64]| -> Vec<Vec<f64>> {
            let frames = &z[2 * n..6 * n];
            let conj = &z[8 * n..12 * n];
            frames.chunks(4).zip(conj.chunks(4)).map(|(f, c)| matmul(2, f, c, true)).collect()
        };
        let m0 = if jet { jet_matrix(&track[0].1) } else { Vec::new() };

        let (mut de, mut dp, mut dl, mut dm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let eps = 0.01 * sigma;
        let c0: Vec<f64> = (0..n)
            .map(|i| loop_circulation(sigma, &x0, &p0, mu0.as_deref(), &x0[2 * i..2 * i + 2], eps) / (eps * eps))
            .collect();
        let mut dc = 0.0f64;
        for (t, z) in &track {
            let (x, p, mu) = split(jet, n, z);
            de = de.max((energy_of(z) - h0).abs() / h0.abs());
            let ps = sum_p(&p);
            dp = dp.max((ps[0] - ps0[0]).abs()).max((ps[1] - ps0[1]).abs());
            dl = dl.max((angular(&x, &p, mu.as_deref()) - l0).abs() / l_scale);
            if jet {
                for (a, b) in m0.iter().zip(jet_matrix(z)) {
                    let diff: f64 = a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
                    dm = dm.max(diff / sq(a).sqrt());
                }
                if *t <= 5.0 + 1e-9 {
                    for i in 0..n {
                        let c = loop_circulation(sigma, &x, &p, mu.as_deref(), &x[2 * i..2 * i + 2], eps) / (eps * eps);
                        dc = dc.max((c / c0[i] - 1.0).abs());
                    }
                }
            }
        }
        gate.at_most(3, format!("{preset} relative energy drift, midpoint dt 1e-2, t 10"), de, 1e-6);
        gate.at_most(4, format!("{preset} sum p drift"), dp, 1e-12);
        gate.at_most(4, format!("{preset} angular momentum relative drift"), dl, 1e-8);
        if jet {
            gate.at_most(4, format!("{preset} D^T P relative drift"), dm, 1e-8);
            gate.at_most(5, format!("{preset} circulation / eps^2 variation on [0, 5]"), dc, 0.02);
        }
    }
}

fn curvature(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let k = RadialKernel::gaussian(1.0);
    let (mut at_particles, mut antisym) = (0.0f64, 0.0f64);
    for trial in 0..20 {
        let d = 2 + trial % 2;
        let n = rng.random_range(2..=5);
        let x = points(&mut rng, n, d, 1.5, 0.5);
        let v = uniform(&mut rng, n * d, 1.0);
        let w = uniform(&mut rng, n * d, 1.0);
        for i in 0..n {
            let c = curvature_value(&k, d, &x, &v, &w, &x[i * d..(i + 1) * d]).unwrap();
            at_particles = at_particles.max(sq(&c.value).sqrt() / c.scale);
        }
        let q = uniform(&mut rng, d, 2.0);
        let a = curvature_value(&k, d, &x, &v, &w, &q).unwrap();
        let b = curvature_value(&k, d, &x, &w, &v, &q).unwrap();
        let sum: Vec<f64> = a.value.iter().zip(&b.value).map(|(s, t)| s + t).collect();
        antisym = antisym.max(max_abs(&sum) / a.scale);
    }
    gate.at_most(6, "|B(v,w)(x_k)| / scale at every particle, 20 inputs", at_particles, 1e-8);
    gate.at_most(6, "|B(v,w) + B(w,v)| / scale", antisym, 1e-14);
}

fn integrator_order(gate: &mut Gate) {
    let built = Scenario::preset("headon_pair_k0").unwrap().build().unwrap();
    let run = |dt: f64| {
        let c = IntegratorConfig {
            method: Method::Rk4,
            dt,
            t_end: 2.0,
            observer_stride: usize::MAX,
            ..IntegratorConfig::default()
        };
        integrate(built.model.as_ref(), &built.initial, &c, &mut []).unwrap().state
    };
    let dts: [f64; 3] = [1e-1, 5e-2, 2.5e-2];
    let reference = run(2.5e-2 / 64.0);
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = dts
        .iter()
        .map(|&dt| run(dt).iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max).ln())
        .collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    gate.within(7, "RK4 global error slope, headon_pair_k0 vs dt/64 reference", slope, 3.8, 4.2);
}

/// Test-side Krasny blob velocities.
fn krasny(x: &[f64], g: &[f64], delta: f64) -> Vec<f64> {
    let n = g.len();
    let mut v = vec![0.0; 2 * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let r = [x[2 * i] - x[2 * j], x[2 * i + 1] - x[2 * j + 1]];
                let s = sq(&r);
                let f = g[j] / (2.0 * PI * s) * -(-s / (delta * delta)).exp_m1();
                v[2 * i] -= f * r[1];
                v[2 * i + 1] += f * r[0];
            }
        }
    }
    v
}

/// Test-side RK4 blob trajectory, every step.
fn krasny_rk4(x0: &[f64], g: &[f64], delta: f64, dt: f64, steps: usize) -> Vec<Vec<f64>> {
    let mut track = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    let axpy = |a: &[f64], h: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + h * v).collect() };
    for _ in 0..steps {
        let k1 = krasny(&x, g, delta);
        let k2 = krasny(&axpy(&x, dt / 2.0, &k1), g, delta);
        let k3 = krasny(&axpy(&x, dt / 2.0, &k2), g, delta);
        let k4 = krasny(&axpy(&x, dt, &k3), g, delta);
        for k in 0..x.len() {
            x[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
        track.push(x.clone());
    }
    track
}

fn swept_angle(track: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for w in track.windows(2) {
        let ang = |z: &[f64]| (z[1] - (z[1] + z[3]) / 2.0).atan2(z[0] - (z[0] + z[2]) / 2.0);
        total += (ang(&w[1]) - ang(&w[0]) + PI).rem_euclid(2.0 * PI) - PI;
    }
    total
}

fn preset_blob_track(preset: &str, method: Option<Method>, steps: Option<usize>) -> (Scenario, Vec<Vec<f64>>) {
    let mut s = Scenario::preset(preset).unwrap();
    if let Some(m) = method {
        s.integrator.method = m;
    }
    if let Some(k) = steps {
        s.integrator.t_end = k as f64 * s.integrator.dt;
    }
    s.integrator.observer_stride = 1;
    let built = s.build().unwrap();
    let mut track = Vec::new();
    let mut obs = |_k: usize, _t: f64, z: &[f64]| -> jetflow::Result<()> {
        track.push(z.to_vec());
        Ok(())
    };
    integrate(built.model.as_ref(), &built.initial, &s.integrator, &mut [&mut obs]).unwrap();
    (s, track)
}

fn vortex_blobs(gate: &mut Gate) {
    // Opposite pair: Gamma/(2 pi d) = 1 for Gamma = 2 pi, d = 1.
    let (s, track) = preset_blob_track("vortex_pair_translate", None, None);
    let g = s.initial.strengths.clone().unwrap();
    let delta = s.vortex.as_ref().unwrap().delta;
    let d = (track[0][2] - track[0][0]).hypot(track[0][3] - track[0][1]);
    let analytic = g[0].abs() / (2.0 * PI * d);
    let t = s.integrator.t_end;
    let centroid_speed = |tr: &[Vec<f64>], t: f64| {
        let c = |z: &[f64]| [(z[0] + z[2]) / 2.0, (z[1] + z[3]) / 2.0];
        let (a, b) = (c(&tr[0]), c(&tr[tr.len() - 1]));
        (b[0] - a[0]).hypot(b[1] - a[1]) / t
    };
    let speed = centroid_speed(&track, t);
    let reference = centroid_speed(&krasny_rk4(&track[0], &g, delta, 1e-3, (t / 1e-3).round() as usize), t);
    gate.at_most(8, format!("vortex_pair_translate speed vs Gamma/(2 pi d), delta = d/{}", d / delta), (speed / analytic - 1.0).abs(), 0.01);
    gate.at_most(8, "vortex_pair_translate analytic speed vs dt 1e-3 reference run", (reference / analytic - 1.0).abs(), 0.01);

    // Co-rotating pair: period 2 pi^2 d^2 / Gamma.
    let (s, track) = preset_blob_track("corotating_blobs", None, None);
    let g = s.initial.strengths.clone().unwrap();
    let delta = s.vortex.as_ref().unwrap().delta;
    let d = (track[0][2] - track[0][0]).hypot(track[0][3] - track[0][1]);
    let analytic = 2.0 * PI * PI * d * d / g[0];
    let t = s.integrator.t_end;
    let period = 2.0 * PI * t / swept_angle(&track).abs();
    let reference = 2.0 * PI * t / swept_angle(&krasny_rk4(&track[0], &g, delta, 1e-3, (t / 1e-3).round() as usize)).abs();
    gate.at_most(8, format!("corotating_blobs period vs 2 pi^2 d^2/Gamma, delta = d/{}", d / delta), (period / analytic - 1.0).abs(), 0.01);
    gate.at_most(8, "corotating_blobs analytic period vs dt 1e-3 reference run", (reference / analytic - 1.0).abs(), 0.01);

    let invariant_drift = |tr: &[Vec<f64>]| {
        let inv = |z: &[f64]| {
            let mut v = [g.iter().sum::<f64>(), 0.0, 0.0, 0.0];
            for (i, gi) in g.iter().enumerate() {
                v[1] += gi * z[2 * i];
                v[2] += gi * z[2 * i + 1];
                v[3] += gi * sq(&z[2 * i..2 * i + 2]);
            }
            v
        };
        let i0 = inv(&tr[0]);
        tr.iter()
            .flat_map(|z| inv(z).into_iter().zip(i0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    };
    let (_, midpoint) = preset_blob_track("corotating_blobs", Some(Method::ImplicitMidpoint), Some(1000));
    let (_, rk4) = preset_blob_track("corotating_blobs", Some(Method::Rk4), Some(1000));
    gate.holds(8, "1000 steps recorded", midpoint.len() == 1001 && rk4.len() == 1001);
    gate.at_most(8, "corotating_blobs invariant drift, 1000 implicit midpoint steps", invariant_drift(&midpoint), 1e-10);
    gate.report(8, "corotating_blobs invariant drift, 1000 RK4 steps", invariant_drift(&rk4));
}

fn spectral(gate: &mut Gate) {
    let s = Scenario::preset("spectral_torus_4").unwrap();
    let cfg = s.spectral.clone().unwrap();
    let basis = SpectralBasis::new(cfg.box_len, cfg.cutoff).unwrap();
    let x: Vec<f64> = s.initial.positions.clone().unwrap().concat();
    let v: Vec<f64> = s.initial.velocities.clone().unwrap().concat();
    let c = solve_spectral(&basis, &x, &v).unwrap();
    let f = basis.field(&c);
    let matching = (0..x.len() / 2)
        .flat_map(|i| {
            let u = f.velocity(&x[2 * i..2 * i + 2]);
            [(u[0] - v[2 * i]).abs(), (u[1] - v[2 * i + 1]).abs()]
        })
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let l = cfg.box_len;
    let h = 1e-5;
    let (mut div, mut periodic) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let q = [rng.random_range(0.0..l), rng.random_range(0.0..l)];
        let dudx = (f.velocity(&[q[0] + h, q[1]])[0] - f.velocity(&[q[0] - h, q[1]])[0]) / (2.0 * h);
        let dvdy = (f.velocity(&[q[0], q[1] + h])[1] - f.velocity(&[q[0], q[1] - h])[1]) / (2.0 * h);
        div = div.max((dudx + dvdy).abs());
        let u0 = f.velocity(&q);
        for shift in [[l, 0.0], [0.0, l], [l, -l]] {
            let u1 = f.velocity(&[q[0] + shift[0], q[1] + shift[1]]);
            periodic = periodic.max((u0[0] - u1[0]).abs()).max((u0[1] - u1[1]).abs());
        }
    }
    gate.at_most(9, "spectral_torus_4 matching at particles", matching, 1e-9);
    gate.at_most(9, "finite-difference divergence at 50 points", div, 1e-6);
    gate.at_most(9, "periodicity", periodic, 1e-12);
}

fn blob_jet_comparison(gate: &mut Gate) {
    let config = IntegratorConfig {
        method: Method::Rk4,
        dt: 1e-2,
        t_end: 2.0,
        observer_stride: 10,
        ..IntegratorConfig::default()
    };
    let single = BlobState::new(vec![0.3, -0.2], vec![2.0 * PI], 0.1).unwrap();
    let r = compare_with_jets(&single, &config, 1e-12).unwrap();
    gate.at_most(10, "single vortex vs spinning jet, position discrepancy", r.max_discrepancy, 0.0);

    let still = BlobState::new(vec![-0.5, 0.0, 0.5, 0.0], vec![0.0, 0.0], 0.1).unwrap();
    let r = compare_with_jets(&still, &config, 1e-12).unwrap();
    gate.at_most(10, "zero strengths vs zero frame momenta, discrepancy", r.max_discrepancy, 0.0);

    // Matched jets couple through exp(-d^2/delta^2); at delta = d/10 they
    // are decoupled to roundoff and the jet pair does not rotate.
    for (delta, asserted) in [(0.5, true), (0.1, false)] {
        let pair = BlobState::new(vec![-0.5, 0.0, 0.5, 0.0], vec![2.0 * PI, 2.0 * PI], delta).unwrap();
        let r = compare_with_jets(&pair, &config, 1e-12).unwrap();
        let tag = format!("co-rotating pair, delta = d/{}", 1.0 / delta);
        if asserted {
            gate.holds(10, format!("{tag}: blob and jet rotation have the same sign"), r.sign_consistent && r.blob_rotation > 0.0);
        }
        gate.report(10, format!("{tag}: blob rotation (rad)"), r.blob_rotation);
        gate.report(10, format!("{tag}: jet rotation (rad)"), r.jet_rotation);
        gate.report(10, format!("{tag}: max position discrepancy"), r.max_discrepancy);
    }
}

#[test]
fn acceptance() {
    let mut gate = Gate::default();
    interpolation_exactness(&mut gate);
    gradient_oracle(&mut gate);
    conservation(&mut gate);
    curvature(&mut gate);
    integrator_order(&mut gate);
    vortex_blobs(&mut gate);
    spectral(&mut gate);
    blob_jet_comparison(&mut gate);

    let mut failed: Vec<usize> = Vec::new();
    for c in 1..=10 {
        let lines: Vec<&Line> = gate.lines.iter().filter(|l| l.criterion == c).collect();
        let ok = !lines.is_empty() && lines.iter().all(|l| l.pass != Some(false));
        let _ = writeln!(std::io::stderr(), "criterion {c:>2}: {}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(c);
        }
    }
    let failures: Vec<String> = gate
        .lines
        .iter()
        .filter(|l| l.pass == Some(false))
        .map(|l| format!("[{}] {} = {:.3e} ({})", l.criterion, l.what, l.measured, l.bound))
        .collect();
    assert!(failed.is_empty(), "criteria {failed:?} failed:\n{}", failures.join("\n"));
}
