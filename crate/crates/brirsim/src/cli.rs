//! Command line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input, 3 I/O or runtime
//! failure. Every failure prints one `error: ...` line on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;

use brirsim_core::analysis::{estimate_rt60, Rt60Error};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::dataset::{generate_dataset, load_dataset_spec, DatasetError, GenerateOptions};
use crate::hrtf_io::{load_hrtf, ContainerError};
use crate::simulate::{run_setup, SimulateError};
use crate::wave::{read_wave, WaveError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "brirsim", version, about = "Shoebox room BRIR simulator")]
pub struct Cli {
    /// Override every random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render every source at every receiver of a setup file.
    Simulate {
        setup: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Generate a dataset from a JSON spec.
    Dataset {
        spec: PathBuf,
        /// Keep outputs that already exist and decode.
        #[arg(long)]
        resume: bool,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Reverberation time of a WAVE file.
    Rt60 { wav: PathBuf },
    /// Summary of an HRTF container.
    HrtfInfo { file: PathBuf },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn simulate_failure(e: SimulateError) -> Failure {
    let code = match &e {
        SimulateError::SetupNotFound(_) => EXIT_USAGE,
        e if e.is_validation() => EXIT_INVALID,
        _ => EXIT_IO,
    };
    Failure::new(code, e)
}

fn dataset_failure(e: DatasetError) -> Failure {
    let code = match &e {
        DatasetError::NotFound(_) => EXIT_USAGE,
        e if e.is_validation() => EXIT_INVALID,
        _ => EXIT_IO,
    };
    Failure::new(code, e)
}

fn wave_failure(e: WaveError) -> Failure {
    let code = if matches!(e, WaveError::Io { .. }) { EXIT_IO } else { EXIT_INVALID };
    Failure::new(code, e)
}

fn container_failure(e: ContainerError) -> Failure {
    let code = if matches!(e, ContainerError::Io { .. }) { EXIT_IO } else { EXIT_INVALID };
    Failure::new(code, e)
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut (dyn Write + Send)) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::new(EXIT_IO, e);
    match cli.command {
        Command::Simulate { setup, jobs } => {
            let summary = run_setup(&setup, cli.seed, jobs).map_err(simulate_failure)?;
            for p in &summary {
                writeln!(
                    out,
                    "source {} receiver {}: {} specular + {} diffuse arrivals, {} samples x {} channels -> {}",
                    p.source + 1,
                    p.receiver + 1,
                    p.specular,
                    p.diffuse,
                    p.samples,
                    p.channels,
                    p.path.display()
                )
                .map_err(io)?;
            }
        }
        Command::Dataset { spec, resume, jobs } => {
            let (mut spec, base) = load_dataset_spec(&spec).map_err(dataset_failure)?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let opts = GenerateOptions { resume, jobs };
            let err = Mutex::new(err);
            let progress = |done: usize, total: usize| {
                if let Ok(mut e) = err.lock() {
                    let _ = writeln!(e, "{done}/{total}");
                }
            };
            let report = generate_dataset(&spec, &base, &opts, &progress).map_err(dataset_failure)?;
            writeln!(out, "entries = {}", report.manifest.entries.len()).map_err(io)?;
            writeln!(out, "rendered = {}", report.rendered).map_err(io)?;
            writeln!(out, "skipped = {}", report.skipped).map_err(io)?;
            writeln!(out, "manifest = {}", report.manifest_path.display()).map_err(io)?;
        }
        Command::Rt60 { wav } => {
            let ir = read_wave(&wav).map_err(wave_failure)?;
            let rt60 = estimate_rt60(&ir).map_err(|e: Rt60Error| Failure::new(EXIT_INVALID, e))?;
            writeln!(out, "file = {}", wav.display()).map_err(io)?;
            writeln!(out, "fs = {}", ir.fs).map_err(io)?;
            writeln!(out, "channels = {}", ir.num_channels()).map_err(io)?;
            writeln!(out, "samples = {}", ir.len()).map_err(io)?;
            writeln!(out, "rt60 = {rt60:.4}").map_err(io)?;
        }
        Command::HrtfInfo { file } => {
            let set = load_hrtf(&file).map_err(container_failure)?;
            let (lo, hi) = set
                .positions()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));
            writeln!(out, "file = {}", file.display()).map_err(io)?;
            writeln!(out, "fs = {}", set.fs()).map_err(io)?;
            writeln!(out, "directions = {}", set.len()).map_err(io)?;
            writeln!(out, "ir_length = {}", set.ir_length()).map_err(io)?;
            writeln!(out, "channels = 2").map_err(io)?;
            writeln!(out, "elevation_range = {lo} {hi}").map_err(io)?;
            for (k, v) in set.metadata() {
                writeln!(out, "metadata.{k} = {v}").map_err(io)?;
            }
        }
    }
    Ok(())
}

/// Run the CLI on `args` (program name first) and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let text = e.to_string();
                    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
                    let first = first.trim_start_matches("error: ");
                    let _ = writeln!(err, "error: usage: {}", one_line(first));
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", one_line(&f.message));
            f.code
        }
    }
}
