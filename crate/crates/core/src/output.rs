//! Scenario runs and their plot-ready files.
//!
//! | file              | format                                                    |
//! |-------------------|-----------------------------------------------------------|
//! | trajectory        | JSON lines; first line `{"meta": ...}`, then one record per saved step |
//! | diagnostics       | CSV, `t,energy,px,py[,pz],ang...,jet_norm_drift,monitor[,circ_1..circ_N]` |
//! | field samples     | CSV, `x,y,u,v` (`x,y,u,v,w` on the `z = 0` plane in 3D)   |
//!
//! Output is bit-for-bit deterministic: no timestamps, floats printed with
//! the shortest round-trip representation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conserve::{record, DiagnosticsRecord, Drift, DriftScales, RecordOptions};
use crate::error::{Error, Result};
use crate::integrate::{integrate, step, IntegratorConfig, Observer, RunStatus};
use crate::interp::{closest_pair, VelocityField};
use crate::scenario::{GridSpec, Scenario};
use crate::system::{Model, TrajectoryRecord};

/// Overrides `outputs.dir` when set.
pub const OUT_DIR_ENV: &str = "JETFLOW_OUT_DIR";

pub const TRAJECTORY_FORMAT: &str = "jetflow-trajectory/1";

/// First line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub format: String,
    pub method: String,
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
    /// Blob strengths, which are not part of the phase vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strengths: Option<Vec<f64>>,
    pub scenario: Scenario,
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    meta: TrajectoryMeta,
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn axis(a: usize) -> String {
    match a {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        _ => format!("{}", a + 1),
    }
}

/// The diagnostics CSV columns for a model. There is one `ang` column
/// in 2D, three in 3D, and none for 1D or the (non-rotational) torus.
pub fn diagnostics_header(model: &dyn Model, z: &[f64], circulations: bool) -> Vec<String> {
    let d = model.dim();
    let mut h = vec!["t".to_string(), "energy".to_string()];
    h.extend((0..d).map(|a| format!("p{}", axis(a))));
    match model.angular_momentum(z).len() {
        1 => h.push("ang".into()),
        3 => h.extend(["ang_x", "ang_y", "ang_z"].map(String::from)),
        _ => {}
    }
    h.push("jet_norm_drift".into());
    h.push("monitor".into());
    if circulations && d == 2 {
        h.extend((1..=model.count()).map(|i| format!("circ_{i}")));
    }
    h
}

fn diagnostics_row(r: &DiagnosticsRecord, jet_drift: f64) -> String {
    let mut cols = vec![num(r.t), num(r.energy)];
    cols.extend(r.linear_momentum.iter().map(|v| num(*v)));
    cols.extend(r.angular_momentum.iter().map(|v| num(*v)));
    cols.push(num(jet_drift));
    cols.push(num(r.monitor));
    cols.extend(r.circulations.iter().map(|v| num(*v)));
    cols.join(",")
}

/// Writes `x,y,u,v[,w]` rows of the field on `grid`. 3D fields are sampled
/// on the `z = 0` plane.
pub fn write_field_csv(field: &dyn VelocityField, grid: &GridSpec, out: &mut dyn Write) -> Result<()> {
    let d = field.dim();
    match d {
        2 => writeln!(out, "x,y,u,v")?,
        3 => writeln!(out, "x,y,u,v,w")?,
        _ => return Err(Error::Unsupported(format!("field samples need d = 2 or 3, got {d}"))),
    }
    for [x, y] in grid.points() {
        let q = if d == 2 { vec![x, y] } else { vec![x, y, 0.0] };
        let u = field.velocity(&q);
        let cols: Vec<String> = [x, y].iter().chain(&u).map(|v| num(*v)).collect();
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

/// Output paths of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub trajectory: PathBuf,
    pub diagnostics: PathBuf,
    pub fields: Vec<PathBuf>,
}

impl OutputPaths {
    /// Resolves `outputs` against `dir` (or `$JETFLOW_OUT_DIR`, else `outputs.dir`).
    pub fn for_scenario(s: &Scenario, dir: Option<&Path>) -> Self {
        let dir = match dir {
            Some(d) => d.to_path_buf(),
            None => std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(&s.outputs.dir)),
        };
        let fields = match &s.outputs.field {
            None => Vec::new(),
            Some(f) if f.times.len() == 1 => vec![dir.join(&f.file)],
            Some(f) => {
                let p = Path::new(&f.file);
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
                let ext = p.extension().and_then(|s| s.to_str()).unwrap_or("csv");
                (0..f.times.len()).map(|k| dir.join(format!("{stem}_{k:03}.{ext}"))).collect()
            }
        };
        Self {
            trajectory: dir.join(&s.outputs.trajectory),
            diagnostics: dir.join(&s.outputs.diagnostics),
            fields,
            dir,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub status: RunStatus,
    pub steps: usize,
    pub t: f64,
    pub records: usize,
    /// Worst deviation from the initial diagnostics over every step.
    pub drift: Drift,
    /// Smallest pairwise particle distance over every step.
    pub min_separation: f64,
    pub max_iterations: usize,
    pub paths: OutputPaths,
}

/// Writes saved steps and field samples. Called at every step; saves at
/// the scenario's stride and on the final step.
struct Writer<'a> {
    model: &'a dyn Model,
    config: &'a IntegratorConfig,
    options: RecordOptions,
    stride: usize,
    trajectory: BufWriter<File>,
    diagnostics: BufWriter<File>,
    field_times: Vec<(f64, PathBuf)>,
    grid: Option<GridSpec>,
    first: Option<DiagnosticsRecord>,
    scales: DriftScales,
    drift: Drift,
    min_separation: f64,
    prev: Option<(f64, Vec<f64>)>,
    last_saved: Option<usize>,
    saved: usize,
}

impl Writer<'_> {
    fn save(&mut self, k: usize, t: f64, z: &[f64], r: &DiagnosticsRecord) -> Result<()> {
        let line = serde_json::to_string(&self.model.record(t, z))?;
        writeln!(self.trajectory, "{line}")?;
        let jet = self
            .first
            .as_ref()
            .map_or(0.0, |f| Drift::between(f, r, self.scales).jet);
        writeln!(self.diagnostics, "{}", diagnostics_row(r, jet))?;
        self.last_saved = Some(k);
        self.saved += 1;
        Ok(())
    }

    fn sample(&self, z: &[f64], path: &Path) -> Result<()> {
        let grid = self.grid.expect("field times imply a grid");
        let field = self.model.field(z)?;
        let mut f = BufWriter::new(File::create(path)?);
        write_field_csv(field.as_ref(), &grid, &mut f)?;
        f.flush()?;
        Ok(())
    }

    fn fields_due(&mut self, t: f64, z: &[f64]) -> Result<()> {
        let tol = 1e-12 * self.config.dt.max(t.abs());
        let due: Vec<(f64, PathBuf)> = self
            .field_times
            .iter()
            .filter(|(tf, _)| *tf <= t + tol)
            .cloned()
            .collect();
        self.field_times.retain(|(tf, _)| *tf > t + tol);
        for (tf, path) in due {
            if (tf - t).abs() <= tol {
                self.sample(z, &path)?;
                continue;
            }
            let (t0, z0) = self.prev.clone().expect("a sample time before the first step");
            let (zt, _) = step(self.model, &z0, tf - t0, self.config)?;
            self.sample(&zt, &path)?;
        }
        Ok(())
    }

    fn finish(&mut self, steps: usize, t: f64, z: &[f64]) -> Result<()> {
        if self.last_saved != Some(steps) {
            let r = record(self.model, z, t, &self.options)?;
            self.save(steps, t, z, &r)?;
        }
        self.trajectory.flush()?;
        self.diagnostics.flush()?;
        Ok(())
    }
}

impl Observer for Writer<'_> {
    fn observe(&mut self, k: usize, t: f64, z: &[f64]) -> Result<()> {
        let r = record(self.model, z, t, &self.options)?;
        match &self.first {
            None => {
                self.scales = DriftScales::of(self.model, z);
                self.first = Some(r.clone());
            }
            Some(f) => self.drift = self.drift.max(Drift::between(f, &r, self.scales)),
        }
        if let Some((_, _, dist)) = closest_pair(self.model.dim(), self.model.positions(z)) {
            self.min_separation = self.min_separation.min(dist);
        }
        self.fields_due(t, z)?;
        if k % self.stride == 0 {
            self.save(k, t, z, &r)?;
        }
        self.prev = Some((t, z.to_vec()));
        Ok(())
    }
}

fn trajectory_meta(s: &Scenario, model: &dyn Model, strengths: Option<Vec<f64>>) -> TrajectoryMeta {
    TrajectoryMeta {
        format: TRAJECTORY_FORMAT.into(),
        method: model.tag().name().into(),
        dim: model.dim(),
        count: model.count(),
        seed: s.seed,
        strengths,
        scenario: s.clone(),
    }
}

/// Runs a scenario and writes its outputs under `dir` (see [`OutputPaths::for_scenario`]).
pub fn run_scenario(s: &Scenario, dir: Option<&Path>) -> Result<RunReport> {
    let built = s.build()?;
    let model = built.model.as_ref();
    let paths = OutputPaths::for_scenario(s, dir);
    std::fs::create_dir_all(&paths.dir)?;

    let mut options = RecordOptions::for_model(model);
    options.circulations &= s.diagnostics.circulation;
    options.monitor = s.diagnostics.monitor;
    options.n_quad = s.diagnostics.quadrature;
    if let Some(r) = s.diagnostics.circulation_radius {
        options.radius = r;
    }

    let mut trajectory = BufWriter::new(File::create(&paths.trajectory)?);
    let meta = MetaLine {
        meta: trajectory_meta(s, model, built.strengths.clone()),
    };
    writeln!(trajectory, "{}", serde_json::to_string(&meta)?)?;
    let mut diagnostics = BufWriter::new(File::create(&paths.diagnostics)?);
    writeln!(diagnostics, "{}", diagnostics_header(model, &built.initial, options.circulations).join(","))?;

    let field_times = match &s.outputs.field {
        Some(f) => f.times.iter().copied().zip(paths.fields.iter().cloned()).collect(),
        None => Vec::new(),
    };
    let mut inner = s.integrator.clone();
    inner.observer_stride = 1;
    let mut writer = Writer {
        model,
        config: &inner,
        options,
        stride: s.integrator.observer_stride,
        trajectory,
        diagnostics,
        field_times,
        grid: s.outputs.field.as_ref().map(|f| f.grid),
        first: None,
        scales: DriftScales::default(),
        drift: Drift::default(),
        min_separation: f64::INFINITY,
        prev: None,
        last_saved: None,
        saved: 0,
    };
    let summary = integrate(model, &built.initial, &inner, &mut [&mut writer])?;
    writer.finish(summary.steps, summary.t, &summary.state)?;
    Ok(RunReport {
        status: summary.status,
        steps: summary.steps,
        t: summary.t,
        records: writer.saved,
        drift: writer.drift,
        min_separation: writer.min_separation,
        max_iterations: summary.max_iterations,
        paths,
    })
}

/// A trajectory file read back: its header and saved records.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub records: Vec<TrajectoryRecord>,
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let f = BufReader::new(File::open(path)?);
    let mut lines = f.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{} is empty", path.display())))??;
    let meta: MetaLine = serde_json::from_str(&first)?;
    if meta.meta.format != TRAJECTORY_FORMAT {
        return Err(Error::Config(format!("unsupported trajectory format `{}`", meta.meta.format)));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    if records.is_empty() {
        return Err(Error::Config(format!("{} has no records", path.display())));
    }
    Ok(Trajectory {
        meta: meta.meta,
        records,
    })
}

/// State of a stored trajectory at time `t`: the last record at or before
/// `t`, integrated forward with the run's own integrator.
pub fn state_at(traj: &Trajectory, t: f64) -> Result<(Box<dyn Model>, Vec<f64>)> {
    let (t0, t1) = (traj.records[0].t, traj.records[traj.records.len() - 1].t);
    let tol = 1e-12 * t1.abs().max(1.0);
    if !(t >= t0 - tol && t <= t1 + tol) {
        return Err(Error::Domain(format!("time {t} outside trajectory range [{t0}, {t1}]")));
    }
    let rec = traj
        .records
        .iter()
        .rev()
        .find(|r| r.t <= t + tol)
        .expect("range checked");
    let s = &traj.meta.scenario;
    let model = s.model_for_record(rec, traj.meta.strengths.as_deref())?;
    let z = model.state_from_record(rec)?;
    if t - rec.t <= tol {
        return Ok((model, z));
    }
    let config = IntegratorConfig {
        t_end: t - rec.t,
        observer_stride: usize::MAX,
        stop_on_monitor: None,
        ..s.integrator.clone()
    };
    let summary = integrate(model.as_ref(), &z, &config, &mut [])?;
    Ok((model, summary.state))
}

/// Samples the velocity field of a stored trajectory at time `t` on `grid`.
pub fn sample_field(traj_path: &Path, t: f64, grid: &GridSpec, out: &mut dyn Write) -> Result<()> {
    let traj = read_trajectory(traj_path)?;
    let (model, z) = state_at(&traj, t)?;
    let field = model.field(&z)?;
    write_field_csv(field.as_ref(), grid, out)
}
