//! Declarative scenarios: kernel, integrator, initial state and outputs in
//! one TOML file.
//!
//! A file may start from a named preset (`preset = "headon_pair_k0"`) and
//! override any key; tables are merged key by key, arrays replace.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;
use crate::interp::{solve_k0, solve_k1, InterpOptions, JetParticleState, ParticleState, SpectralBasis};
use crate::kernel::{KernelFamily, RadialKernel};
use crate::system::{JetModel, LandmarkModel, MethodTag, Model, SpectralModel};
use crate::vortex::{BlobModel, BlobState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub length_scale: f64,
    /// Tikhonov term on the Gram diagonal when converting velocities to momenta.
    #[serde(default)]
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInit {
    pub count: usize,
    pub dim: usize,
    /// Positions are uniform in `[-spread, spread]^d` (`[0, L)^2` for the
    /// spectral method).
    #[serde(default = "one")]
    pub spread: f64,
    /// Momenta, frame momenta or strengths are uniform in `[-s, s]`.
    #[serde(default = "one")]
    pub momentum_scale: f64,
}

fn one() -> f64 {
    1.0
}

/// Per-particle rows; matrices are nested row-major arrays.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    pub positions: Option<Vec<Vec<f64>>>,
    pub momenta: Option<Vec<Vec<f64>>>,
    pub velocities: Option<Vec<Vec<f64>>>,
    pub frames: Option<Vec<Vec<Vec<f64>>>>,
    pub frame_momenta: Option<Vec<Vec<Vec<f64>>>>,
    pub frame_rates: Option<Vec<Vec<Vec<f64>>>>,
    pub strengths: Option<Vec<f64>>,
    pub incompressible: bool,
    pub random: Option<RandomInit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub box_len: f64,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexConfig {
    pub delta: f64,
}

/// Rectangular sampling grid, `nx * ny` nodes including the corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// `[xmin, xmax, ymin, ymax]`
    pub bounds: [f64; 4],
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let [x0, x1, y0, y1] = self.bounds;
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config("grid needs nx, ny >= 1".into()));
        }
        if !self.bounds.iter().all(|b| b.is_finite()) || x1 < x0 || y1 < y0 {
            return Err(Error::Config(format!("bad grid bounds {:?}", self.bounds)));
        }
        Ok(())
    }

    /// Nodes in row order (`x` fastest).
    pub fn points(&self) -> Vec<[f64; 2]> {
        let [x0, x1, y0, y1] = self.bounds;
        let at = |lo: f64, hi: f64, k: usize, n: usize| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push([at(x0, x1, i, self.nx), at(y0, y1, j, self.ny)]);
            }
        }
        out
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// `nx,ny,xmin,xmax,ymin,ymax`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("grid must be nx,ny,xmin,xmax,ymin,ymax, got `{s}`"));
        if parts.len() != 6 {
            return Err(bad());
        }
        let nx = parts[0].parse().map_err(|_| bad())?;
        let ny = parts[1].parse().map_err(|_| bad())?;
        let mut bounds = [0.0; 4];
        for (b, p) in bounds.iter_mut().zip(&parts[2..]) {
            *b = p.parse().map_err(|_| bad())?;
        }
        let g = GridSpec { nx, ny, bounds };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldOutput {
    pub times: Vec<f64>,
    pub grid: GridSpec,
    /// With several times, `_<k>` (three digits) is inserted before the extension.
    #[serde(default = "default_field_file")]
    pub file: String,
}

fn default_field_file() -> String {
    "field.csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: String,
    pub trajectory: String,
    pub diagnostics: String,
    pub field: Option<FieldOutput>,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            trajectory: "trajectory.jsonl".into(),
            diagnostics: "diagnostics.csv".into(),
            field: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Circulation around each particle (2D only).
    pub circulation: bool,
    /// Loop radius; defaults to 0.01 of the model length scale.
    pub circulation_radius: Option<f64>,
    pub quadrature: usize,
    pub monitor: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            circulation: true,
            circulation_radius: None,
            quadrature: crate::conserve::DEFAULT_QUADRATURE,
            monitor: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub method: MethodTag,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub initial: InitialState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vortex: Option<VortexConfig>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

/// Allowed keys per table; tables not listed accept nothing nested.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "",
        &[
            "name",
            "method",
            "seed",
            "preset",
            "kernel",
            "integrator",
            "initial",
            "spectral",
            "vortex",
            "outputs",
            "diagnostics",
        ],
    ),
    ("kernel", &["family", "length_scale", "jitter"]),
    (
        "integrator",
        &["method", "dt", "t_end", "observer_stride", "newton_tol", "newton_max_iter", "stop_on_monitor"],
    ),
    (
        "initial",
        &[
            "positions",
            "momenta",
            "velocities",
            "frames",
            "frame_momenta",
            "frame_rates",
            "strengths",
            "incompressible",
            "random",
        ],
    ),
    ("initial.random", &["count", "dim", "spread", "momentum_scale"]),
    ("spectral", &["box_len", "cutoff"]),
    ("vortex", &["delta"]),
    ("outputs", &["dir", "trajectory", "diagnostics", "field"]),
    ("outputs.field", &["times", "grid", "file"]),
    ("outputs.field.grid", &["nx", "ny", "bounds"]),
    ("diagnostics", &["circulation", "circulation_radius", "quadrature", "monitor"]),
];

fn unknown_keys(table: &toml::Table, path: &str, out: &mut Vec<String>) {
    let Some((_, allowed)) = SCHEMA.iter().find(|(p, _)| *p == path) else {
        return;
    };
    for (key, value) in table {
        let full = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
        if !allowed.contains(&key.as_str()) {
            out.push(format!("unknown key `{full}`"));
        } else if let toml::Value::Table(t) = value {
            unknown_keys(t, &full, out);
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "single_free_particle",
    "headon_pair_k0",
    "ring_8_k0",
    "single_spin_jet",
    "corotating_jets",
    "vortex_pair_translate",
    "corotating_blobs",
    "spectral_torus_4",
];

pub fn preset_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "single_free_particle" => include_str!("presets/single_free_particle.toml"),
        "headon_pair_k0" => include_str!("presets/headon_pair_k0.toml"),
        "ring_8_k0" => include_str!("presets/ring_8_k0.toml"),
        "single_spin_jet" => include_str!("presets/single_spin_jet.toml"),
        "corotating_jets" => include_str!("presets/corotating_jets.toml"),
        "vortex_pair_translate" => include_str!("presets/vortex_pair_translate.toml"),
        "corotating_blobs" => include_str!("presets/corotating_blobs.toml"),
        "spectral_torus_4" => include_str!("presets/spectral_torus_4.toml"),
        _ => return None,
    })
}

fn config_error(problems: Vec<String>) -> Error {
    Error::Config(problems.join("; "))
}

/// Initial data flattened and checked for shape, before method-specific
/// conversion.
struct Flat {
    dim: usize,
    count: usize,
    positions: Vec<f64>,
    momenta: Option<Vec<f64>>,
    velocities: Option<Vec<f64>>,
    frames: Option<Vec<f64>>,
    frame_momenta: Option<Vec<f64>>,
    frame_rates: Option<Vec<f64>>,
    strengths: Option<Vec<f64>>,
}

fn flat_rows(rows: &[Vec<f64>], n: usize, d: usize, what: &str) -> Result<Vec<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!("initial.{what} needs {n} rows of length {d}")));
    }
    Ok(rows.concat())
}

fn flat_mats(m: &[Vec<Vec<f64>>], n: usize, d: usize, what: &str) -> Result<Vec<f64>> {
    if m.len() != n || m.iter().any(|a| a.len() != d || a.iter().any(|r| r.len() != d)) {
        return Err(Error::Config(format!("initial.{what} needs {n} matrices of size {d}x{d}")));
    }
    Ok(m.iter().flatten().flatten().copied().collect())
}

fn identity_frames(n: usize, d: usize) -> Vec<f64> {
    let mut f = vec![0.0; n * d * d];
    for i in 0..n {
        for a in 0..d {
            f[i * d * d + a * d + a] = 1.0;
        }
    }
    f
}

/// The phase vector and the model it belongs to.
pub struct Built {
    pub model: Box<dyn Model>,
    pub initial: Vec<f64>,
    /// Blob strengths, which live outside the phase vector.
    pub strengths: Option<Vec<f64>>,
}

impl Scenario {
    pub fn preset(name: &str) -> Result<Self> {
        let src = preset_source(name).ok_or_else(|| {
            Error::Config(format!("unknown preset `{name}` (known: {})", PRESET_NAMES.join(", ")))
        })?;
        Self::from_toml_str(src)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut problems = Vec::new();
        unknown_keys(&table, "", &mut problems);
        if !problems.is_empty() {
            return Err(config_error(problems));
        }
        if let Some(p) = table.remove("preset") {
            let name = p
                .as_str()
                .ok_or_else(|| Error::Config("`preset` must be a string".into()))?;
            let src = preset_source(name).ok_or_else(|| {
                Error::Config(format!("unknown preset `{name}` (known: {})", PRESET_NAMES.join(", ")))
            })?;
            let mut base: toml::Table = src.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
            // A replaced initial state must not inherit fields of the preset's.
            if table.contains_key("initial") {
                base.remove("initial");
            }
            merge(&mut base, table);
            table = base;
        }
        let scenario: Scenario = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks method compatibility of every section and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        let m = self.method;
        let init = &self.initial;
        if let Err(e) = self.integrator.validate() {
            p.push(e.to_string());
        }
        let uses_kernel = matches!(m, MethodTag::LandmarkK0 | MethodTag::JetK1);
        match (&self.kernel, uses_kernel) {
            (None, true) => p.push(format!("method {} needs a [kernel] section", m.name())),
            (Some(_), false) => p.push(format!("[kernel] is not used by method {}", m.name())),
            (Some(k), true) => {
                if !(k.length_scale.is_finite() && k.length_scale > 0.0) {
                    p.push(format!("kernel.length_scale must be positive, got {}", k.length_scale));
                }
                if !(k.jitter >= 0.0) {
                    p.push("kernel.jitter must be non-negative".into());
                }
                if m == MethodTag::JetK1 && k.family != KernelFamily::Gaussian {
                    p.push("jet_k1 needs a twice-differentiable kernel (family = \"gaussian\")".into());
                }
            }
            (None, false) => {}
        }
        match (&self.spectral, m == MethodTag::SpectralK0) {
            (None, true) => p.push("method spectral_k0 needs a [spectral] section".into()),
            (Some(_), false) => p.push(format!("[spectral] is not used by method {}", m.name())),
            _ => {}
        }
        match (&self.vortex, m == MethodTag::VortexBlob) {
            (None, true) => p.push("method vortex_blob needs a [vortex] section".into()),
            (Some(_), false) => p.push(format!("[vortex] is not used by method {}", m.name())),
            _ => {}
        }
        match (&init.positions, &init.random) {
            (None, None) => p.push("initial needs `positions` or a [initial.random] table".into()),
            (Some(_), Some(_)) => p.push("initial.positions and initial.random are exclusive".into()),
            _ => {}
        }
        if init.momenta.is_some() && init.velocities.is_some() {
            p.push("initial.momenta and initial.velocities are exclusive".into());
        }
        if m == MethodTag::VortexBlob {
            for (set, key) in [(init.momenta.is_some(), "momenta"), (init.velocities.is_some(), "velocities")] {
                if set {
                    p.push(format!("initial.{key} is not used by method vortex_blob"));
                }
            }
            if init.strengths.is_none() && init.random.is_none() {
                p.push("vortex_blob needs initial.strengths".into());
            }
        } else if init.strengths.is_some() {
            p.push(format!("initial.strengths is only used by vortex_blob, not {}", m.name()));
        }
        if m != MethodTag::JetK1 {
            for (set, key) in [
                (init.frames.is_some(), "frames"),
                (init.frame_momenta.is_some(), "frame_momenta"),
                (init.frame_rates.is_some(), "frame_rates"),
                (init.incompressible, "incompressible"),
            ] {
                if set {
                    p.push(format!("initial.{key} is only used by jet_k1, not {}", m.name()));
                }
            }
        } else {
            if init.frame_momenta.is_some() && init.frame_rates.is_some() {
                p.push("initial.frame_momenta and initial.frame_rates are exclusive".into());
            }
            if init.frame_rates.is_some() && init.momenta.is_some() {
                p.push("initial.frame_rates pairs with velocities, not momenta".into());
            }
            if init.frame_momenta.is_some() && init.velocities.is_some() {
                p.push("initial.frame_momenta pairs with momenta, not velocities".into());
            }
        }
        if let Some(r) = &init.random {
            if r.count == 0 || r.dim == 0 {
                p.push("initial.random needs count, dim >= 1".into());
            }
            if !(r.spread > 0.0) || !(r.momentum_scale >= 0.0) {
                p.push("initial.random needs spread > 0 and momentum_scale >= 0".into());
            }
        }
        let needs_2d = matches!(m, MethodTag::SpectralK0 | MethodTag::VortexBlob);
        if needs_2d {
            let dim = init
                .random
                .as_ref()
                .map(|r| r.dim)
                .or_else(|| init.positions.as_ref().and_then(|x| x.first().map(Vec::len)));
            if dim.is_some_and(|d| d != 2) {
                p.push(format!("method {} is two-dimensional", m.name()));
            }
        }
        let d = self.diagnostics.circulation_radius;
        if d.is_some_and(|r| !(r > 0.0)) {
            p.push("diagnostics.circulation_radius must be positive".into());
        }
        if self.diagnostics.quadrature < 16 {
            p.push("diagnostics.quadrature must be at least 16".into());
        }
        if let Some(f) = &self.outputs.field {
            if let Err(e) = f.grid.validate() {
                p.push(e.to_string());
            }
            if f.times.iter().any(|t| !(t.is_finite() && *t >= 0.0 && *t <= self.integrator.t_end)) {
                p.push("outputs.field.times must lie in [0, t_end]".into());
            }
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(config_error(p))
        }
    }

    fn kernel(&self) -> Result<RadialKernel> {
        let k = self
            .kernel
            .as_ref()
            .ok_or_else(|| Error::Config("missing [kernel]".into()))?;
        RadialKernel::new(k.family, k.length_scale)
    }

    fn interp_options(&self) -> InterpOptions {
        InterpOptions {
            jitter: self.kernel.as_ref().map_or(0.0, |k| k.jitter),
            incompressible: self.initial.incompressible,
        }
    }

    fn flatten_initial(&self) -> Result<Flat> {
        let init = &self.initial;
        if let Some(r) = &init.random {
            return Ok(self.random_initial(r));
        }
        let pos = init
            .positions
            .as_ref()
            .ok_or_else(|| Error::Config("missing initial.positions".into()))?;
        let n = pos.len();
        let d = pos.first().map_or(0, Vec::len);
        if n == 0 || d == 0 {
            return Err(Error::Config("initial.positions is empty".into()));
        }
        Ok(Flat {
            dim: d,
            count: n,
            positions: flat_rows(pos, n, d, "positions")?,
            momenta: init.momenta.as_deref().map(|v| flat_rows(v, n, d, "momenta")).transpose()?,
            velocities: init.velocities.as_deref().map(|v| flat_rows(v, n, d, "velocities")).transpose()?,
            frames: init.frames.as_deref().map(|v| flat_mats(v, n, d, "frames")).transpose()?,
            frame_momenta: init
                .frame_momenta
                .as_deref()
                .map(|v| flat_mats(v, n, d, "frame_momenta"))
                .transpose()?,
            frame_rates: init
                .frame_rates
                .as_deref()
                .map(|v| flat_mats(v, n, d, "frame_rates"))
                .transpose()?,
            strengths: match &init.strengths {
                Some(s) if s.len() != n => {
                    return Err(Error::Config(format!("initial.strengths needs {n} entries")));
                }
                s => s.clone(),
            },
        })
    }

    fn random_initial(&self, r: &RandomInit) -> Flat {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (n, d) = (r.count, r.dim);
        let positions: Vec<f64> = match &self.spectral {
            Some(s) if self.method == MethodTag::SpectralK0 => {
                (0..n * d).map(|_| rng.random_range(0.0..s.box_len)).collect()
            }
            _ => (0..n * d).map(|_| rng.random_range(-r.spread..=r.spread)).collect(),
        };
        let s = r.momentum_scale;
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-s..=s)).collect() };
        let mut flat = Flat {
            dim: d,
            count: n,
            positions,
            momenta: None,
            velocities: None,
            frames: None,
            frame_momenta: None,
            frame_rates: None,
            strengths: None,
        };
        match self.method {
            MethodTag::VortexBlob => flat.strengths = Some(draw(n)),
            MethodTag::JetK1 => {
                flat.momenta = Some(draw(n * d));
                let mut mu = draw(n * d * d);
                if self.initial.incompressible {
                    for m in mu.chunks_mut(d * d) {
                        let tr = (0..d).map(|a| m[a * d + a]).sum::<f64>() / d as f64;
                        for a in 0..d {
                            m[a * d + a] -= tr;
                        }
                    }
                }
                flat.frame_momenta = Some(mu);
            }
            _ => flat.momenta = Some(draw(n * d)),
        }
        flat
    }

    /// Model for `count` particles in `dim` dimensions under this scenario's
    /// method and parameters.
    pub fn model(&self, dim: usize, count: usize) -> Result<Box<dyn Model>> {
        Ok(match self.method {
            MethodTag::LandmarkK0 => Box::new(LandmarkModel {
                kernel: self.kernel()?,
                dim,
                count,
            }),
            MethodTag::JetK1 => Box::new(JetModel::new(self.kernel()?, dim, count, self.initial.incompressible)?),
            MethodTag::SpectralK0 => {
                let s = self
                    .spectral
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing [spectral]".into()))?;
                Box::new(SpectralModel {
                    basis: SpectralBasis::new(s.box_len, s.cutoff)?,
                    count,
                })
            }
            MethodTag::VortexBlob => {
                let v = self
                    .vortex
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing [vortex]".into()))?;
                if !(v.delta > 0.0) {
                    return Err(Error::Config(format!("vortex.delta must be positive, got {}", v.delta)));
                }
                Box::new(BlobModel {
                    strengths: vec![0.0; count],
                    delta: v.delta,
                })
            }
        })
    }

    /// Resolves the initial state (drawing random data from `seed`) and
    /// converts velocities to momenta where given.
    pub fn build(&self) -> Result<Built> {
        let f = self.flatten_initial()?;
        let (n, d) = (f.count, f.dim);
        let zeros = || vec![0.0; n * d];
        let mut strengths = None;
        let (model, initial): (Box<dyn Model>, Vec<f64>) = match self.method {
            MethodTag::LandmarkK0 => {
                let kernel = self.kernel()?;
                let p = match (f.momenta, f.velocities) {
                    (Some(p), _) => p,
                    (None, Some(v)) => solve_k0(&kernel, d, &f.positions, &v, self.interp_options())?,
                    (None, None) => zeros(),
                };
                let state = ParticleState::new(d, f.positions, p)?;
                (self.model(d, n)?, LandmarkModel::pack(&state))
            }
            MethodTag::JetK1 => {
                let kernel = self.kernel()?;
                let frames = f.frames.unwrap_or_else(|| identity_frames(n, d));
                let (p, mu) = match f.velocities {
                    Some(v) => {
                        let rates = f.frame_rates.unwrap_or_else(|| vec![0.0; n * d * d]);
                        solve_k1(&kernel, d, &f.positions, &v, &rates, self.interp_options())?
                    }
                    None => (
                        f.momenta.unwrap_or_else(zeros),
                        f.frame_momenta.unwrap_or_else(|| vec![0.0; n * d * d]),
                    ),
                };
                let state = JetParticleState::from_frame_momenta(d, f.positions, frames, p, mu)?;
                state.validate()?;
                if self.initial.incompressible {
                    state.validate_incompressible()?;
                }
                (self.model(d, n)?, JetModel::pack(&state))
            }
            MethodTag::SpectralK0 => {
                let model = self.model(d, n)?;
                let p = match (f.momenta, f.velocities) {
                    (Some(p), _) => p,
                    (None, Some(v)) => {
                        let s = self.spectral.as_ref().expect("checked by model()");
                        SpectralModel {
                            basis: SpectralBasis::new(s.box_len, s.cutoff)?,
                            count: n,
                        }
                        .momenta_for(&f.positions, &v)?
                    }
                    (None, None) => zeros(),
                };
                (model, [f.positions, p].concat())
            }
            MethodTag::VortexBlob => {
                let delta = self.vortex.as_ref().map_or(0.0, |v| v.delta);
                let gamma = f
                    .strengths
                    .ok_or_else(|| Error::Config("vortex_blob needs initial.strengths".into()))?;
                let state = BlobState::new(f.positions, gamma, delta)?;
                let model = BlobModel {
                    strengths: state.strengths.clone(),
                    delta,
                };
                strengths = Some(state.strengths.clone());
                (Box::new(model), state.positions)
            }
        };
        model.check_state(&initial)?;
        Ok(Built {
            model,
            initial,
            strengths,
        })
    }

    /// Rebuilds the model that produced a trajectory record.
    pub fn model_for_record(&self, record: &crate::system::TrajectoryRecord, strengths: Option<&[f64]>) -> Result<Box<dyn Model>> {
        let n = record.positions.len();
        let d = record.positions.first().map_or(0, Vec::len);
        if n == 0 || d == 0 {
            return Err(Error::InvalidState("record has no particles".into()));
        }
        if self.method == MethodTag::VortexBlob {
            let delta = self.vortex.as_ref().map_or(0.0, |v| v.delta);
            let strengths = strengths.ok_or_else(|| Error::Config("blob trajectory lacks strengths".into()))?;
            if strengths.len() != n {
                return Err(Error::InvalidState("strengths do not match the record".into()));
            }
            return Ok(Box::new(BlobModel {
                strengths: strengths.to_vec(),
                delta,
            }));
        }
        self.model(d, n)
    }
}
