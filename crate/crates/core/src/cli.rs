//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::output::{run_scenario, sample_field};
use crate::scenario::{preset_source, GridSpec, Scenario, PRESET_NAMES};
use crate::verify::run_suite;

#[derive(Debug, Parser)]
#[command(name = "jetflow", version, about = "Landmark and jet particle methods for geodesic fluid flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file (or a preset by name) and write its outputs.
    Run {
        /// Scenario TOML file, or the name of a preset.
        file: String,
        /// Seed for random initial states; overrides the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides `outputs.dir` and `JETFLOW_OUT_DIR`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite and print one line per criterion.
    Verify {
        /// interpolation, gradients, conservation, curvature, convergence,
        /// vortex, spectral, comparison or all.
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample the velocity field of a stored trajectory on a grid.
    SampleField {
        /// Trajectory written by `run`.
        traj: PathBuf,
        /// Time inside the stored range; states between records are re-integrated.
        #[arg(long)]
        t: f64,
        /// nx,ny,xmin,xmax,ymin,ymax
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// CSV path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List presets, or print one as TOML.
    Preset { name: Option<String> },
}

fn load(file: &str) -> Result<Scenario> {
    let path = Path::new(file);
    if !path.is_file() && preset_source(file).is_some() {
        return Scenario::preset(file);
    }
    Scenario::from_file(path)
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { file, seed, out } => {
            let mut s = load(&file)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let rep = run_scenario(&s, out.as_deref())?;
            println!("scenario   {} ({})", s.name, s.method.name());
            println!("status     {} after {} steps, t = {}", rep.status.label(), rep.steps, rep.t);
            println!("records    {}", rep.records);
            println!(
                "drift      energy {:.3e}  linear {:.3e}  angular {:.3e}  jet {:.3e}  circulation {:.3e}",
                rep.drift.energy, rep.drift.linear, rep.drift.angular, rep.drift.jet, rep.drift.circulation
            );
            println!("min sep    {:.6e}", rep.min_separation);
            println!("trajectory {}", rep.paths.trajectory.display());
            println!("diagnostics {}", rep.paths.diagnostics.display());
            for f in &rep.paths.fields {
                println!("field      {}", f.display());
            }
            Ok(true)
        }
        Command::Verify { suite, seed } => {
            let results = run_suite(&suite, seed)?;
            for c in &results {
                println!("{c}");
            }
            let failed = results.iter().filter(|c| !c.passed).count();
            println!("{} criteria, {} failed", results.len(), failed);
            Ok(failed == 0)
        }
        Command::SampleField { traj, t, grid, out } => {
            let grid: GridSpec = grid.parse()?;
            match out {
                Some(p) => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(&p)?);
                    sample_field(&traj, t, &grid, &mut f)?;
                    f.flush()?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    sample_field(&traj, t, &grid, &mut lock)?;
                }
            }
            Ok(true)
        }
        Command::Preset { name: None } => {
            for n in PRESET_NAMES {
                println!("{n}");
            }
            Ok(true)
        }
        Command::Preset { name: Some(n) } => {
            let src = preset_source(&n).ok_or_else(|| Error::Config(format!("unknown preset `{n}`")))?;
            print!("{src}");
            Ok(true)
        }
    }
}

/// Parses `args` and runs the command. Failing criteria and errors exit 1.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
