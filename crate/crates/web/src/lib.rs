//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: stepping a preset scenario, sampling its
//! velocity field on a grid, and the blob-vs-jet comparison for a
//! co-rotating pair.

use std::f64::consts::PI;

use jetflow::integrate::{step, IntegratorConfig, Method};
use jetflow::scenario::{GridSpec, Scenario, PRESET_NAMES};
use jetflow::system::Model;
use jetflow::vortex::{compare_with_jets, BlobState};
use wasm_bindgen::prelude::*;

/// Comma-separated preset names.
#[wasm_bindgen]
pub fn presets() -> String {
    PRESET_NAMES.join(",")
}

/// A running preset scenario.
#[wasm_bindgen]
pub struct Sim {
    model: Box<dyn Model>,
    z: Vec<f64>,
    t: f64,
    config: IntegratorConfig,
}

impl Sim {
    pub fn from_preset(name: &str) -> jetflow::Result<Self> {
        let s = Scenario::preset(name)?;
        let built = s.build()?;
        Ok(Self {
            model: built.model,
            z: built.initial,
            t: 0.0,
            config: s.integrator,
        })
    }

    pub fn advance(&mut self, steps: usize) -> jetflow::Result<()> {
        for _ in 0..steps {
            let (z, _) = step(self.model.as_ref(), &self.z, self.config.dt, &self.config)?;
            self.z = z;
            self.t += self.config.dt;
        }
        Ok(())
    }

    /// Interleaved `(u, v)` at the grid nodes, x fastest.
    pub fn sample(&self, grid: &GridSpec) -> jetflow::Result<Vec<f64>> {
        grid.validate()?;
        let field = self.model.field(&self.z)?;
        let d = self.model.dim();
        let mut out = Vec::with_capacity(2 * grid.nx * grid.ny);
        for [x, y] in grid.points() {
            let mut q = vec![0.0; d];
            q[0] = x;
            q[1] = y;
            let u = field.velocity(&q);
            out.extend([u[0], u[1]]);
        }
        Ok(out)
    }
}

#[wasm_bindgen]
impl Sim {
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str) -> Result<Sim, JsError> {
        Ok(Self::from_preset(preset)?)
    }

    /// Takes `steps` steps of the preset's integrator and step size.
    pub fn step(&mut self, steps: u32) -> Result<(), JsError> {
        Ok(self.advance(steps as usize)?)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    pub fn method(&self) -> String {
        self.model.tag().name().to_string()
    }

    /// `NaN` when the energy is undefined for the current state.
    pub fn energy(&self) -> f64 {
        self.model.energy(&self.z).unwrap_or(f64::NAN)
    }

    pub fn count(&self) -> usize {
        self.model.count()
    }

    /// First two coordinates of every particle, interleaved.
    pub fn positions(&self) -> Vec<f64> {
        let d = self.model.dim();
        self.model.positions(&self.z).chunks(d).flat_map(|c| [c[0], c[1]]).collect()
    }

    pub fn field(&self, nx: usize, ny: usize, xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Vec<f64>, JsError> {
        let grid = GridSpec {
            nx,
            ny,
            bounds: [xmin, xmax, ymin, ymax],
        };
        Ok(self.sample(&grid)?)
    }
}

/// Co-rotating pair, `Gamma = 2 pi` each, one unit apart, run as blobs of
/// width `delta` and as matched spin-only jets with RK4 to `t_end`.
pub fn compare_pair(delta: f64, t_end: f64) -> jetflow::Result<[f64; 4]> {
    let blobs = BlobState::new(vec![-0.5, 0.0, 0.5, 0.0], vec![2.0 * PI, 2.0 * PI], delta)?;
    let config = IntegratorConfig {
        method: Method::Rk4,
        dt: 1e-2,
        t_end,
        observer_stride: 10,
        ..IntegratorConfig::default()
    };
    let r = compare_with_jets(&blobs, &config, 1e-12)?;
    Ok([
        r.blob_rotation,
        r.jet_rotation,
        r.max_discrepancy,
        f64::from(u8::from(r.sign_consistent)),
    ])
}

/// `[blob rotation, jet rotation, max discrepancy, sign consistent (0 or 1)]`.
#[wasm_bindgen]
pub fn compare(delta: f64, t_end: f64) -> Result<Vec<f64>, JsError> {
    Ok(compare_pair(delta, t_end)?.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_steps_and_samples() {
        for name in PRESET_NAMES {
            let mut s = Sim::from_preset(name).unwrap();
            s.advance(5).unwrap();
            assert!((s.time() - 5.0 * s.dt()).abs() < 1e-12);
            assert_eq!(s.positions().len(), 2 * s.count());
            let grid = GridSpec {
                nx: 4,
                ny: 3,
                bounds: [-1.0, 1.0, -1.0, 1.0],
            };
            let f = s.sample(&grid).unwrap();
            assert_eq!(f.len(), 24);
            assert!(f.iter().all(|v| v.is_finite()), "{name}");
        }
    }

    #[test]
    fn free_particle_field_at_origin_is_its_momentum() {
        let s = Sim::from_preset("single_free_particle").unwrap();
        let grid = GridSpec {
            nx: 1,
            ny: 1,
            bounds: [0.0, 0.0, 0.0, 0.0],
        };
        assert_eq!(s.sample(&grid).unwrap(), vec![1.0, 0.5]);
    }

    #[test]
    fn comparison_signs() {
        let r = compare_pair(0.5, 1.0).unwrap();
        assert!(r[0] > 0.0 && r[1] > 0.0 && r[3] == 1.0);
        assert!(compare_pair(-1.0, 1.0).is_err());
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(Sim::from_preset("nope").is_err());
    }
}
