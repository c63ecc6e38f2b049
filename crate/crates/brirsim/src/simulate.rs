//! Single-setup simulation: every source rendered at every receiver.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use brirsim_core::engine::{prepare_hrtf, EngineError};
use brirsim_core::hrtf::{HrtfError, HrtfSet};
use brirsim_core::scene::{validate, OutputFormat, ReceiverKind, SceneError};
use log::info;
use thiserror::Error;

use crate::hrtf_io::{load_hrtf, ContainerError};
use crate::parallel::{pool, render_pair};
use crate::setup::{parse_setup, SetupError};
use crate::wave::{write_f64raw, write_wave, SampleFormat, WaveError};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("setup file not found: {0}")]
    SetupNotFound(String),
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("HRTF {path}: {source}")]
    Hrtf {
        path: String,
        #[source]
        source: ContainerError,
    },
    #[error("HRTF {path}: {source}")]
    Prepare {
        path: String,
        #[source]
        source: HrtfError,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot create output directory {path}: {source}")]
    OutputDir {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Write(#[from] WaveError),
}

impl SimulateError {
    /// True for problems with the input description rather than the
    /// environment.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SimulateError::Setup(_)
                | SimulateError::Scene(_)
                | SimulateError::Hrtf { .. }
                | SimulateError::Prepare { .. }
                | SimulateError::Engine(_)
        )
    }
}

/// One written response.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub source: usize,
    pub receiver: usize,
    pub specular: usize,
    pub diffuse: usize,
    pub samples: usize,
    pub channels: usize,
    pub path: PathBuf,
}

/// Paths in a setup are taken relative to the setup file.
pub fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parse, validate and render `setup_path`, writing `r{i}_s{j}.wav` (or
/// `.f64`) into the output directory.
pub fn run_setup(setup_path: &Path, seed: Option<u64>, jobs: usize) -> Result<Vec<PairSummary>, SimulateError> {
    let text = fs::read_to_string(setup_path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            SimulateError::SetupNotFound(setup_path.display().to_string())
        } else {
            SimulateError::Read {
                path: setup_path.display().to_string(),
                source,
            }
        }
    })?;
    let base = setup_path.parent().unwrap_or(Path::new("."));
    let mut spec = parse_setup(&text)?;
    if let Some(seed) = seed {
        spec.options.seed = seed;
    }
    let spec = validate(spec)?;

    let mut sets: Vec<Option<HrtfSet>> = Vec::with_capacity(spec.receivers.len());
    for receiver in &spec.receivers {
        sets.push(match &receiver.kind {
            ReceiverKind::Omnidirectional => None,
            ReceiverKind::Hrtf { path, .. } => {
                let full = resolve(base, path);
                let name = full.display().to_string();
                let raw = load_hrtf(&full).map_err(|source| SimulateError::Hrtf {
                    path: name.clone(),
                    source,
                })?;
                if raw.fs() != spec.options.fs {
                    info!("resampling {name} from {} Hz to {} Hz", raw.fs(), spec.options.fs);
                }
                Some(prepare_hrtf(&raw, receiver, spec.options.fs).map_err(|source| SimulateError::Prepare { path: name, source })?)
            }
        });
    }

    let out_dir = resolve(base, &spec.output.path);
    fs::create_dir_all(&out_dir).map_err(|source| SimulateError::OutputDir {
        path: out_dir.display().to_string(),
        source,
    })?;
    let workers = pool(jobs);
    let mut summary = Vec::new();
    for (ri, set) in sets.iter().enumerate() {
        for si in 0..spec.sources.len() {
            let rendered = render_pair(&spec, si, ri, set.as_ref(), &workers)?;
            let path = match spec.output.format {
                OutputFormat::Wav => {
                    let p = out_dir.join(format!("r{ri}_s{si}.wav"));
                    write_wave(&rendered.ir, &p, SampleFormat::Float32)?;
                    p
                }
                OutputFormat::F64Raw => {
                    let p = out_dir.join(format!("r{ri}_s{si}.f64"));
                    write_f64raw(&rendered.ir, &p)?;
                    p
                }
            };
            summary.push(PairSummary {
                source: si,
                receiver: ri,
                specular: rendered.specular,
                diffuse: rendered.diffuse,
                samples: rendered.ir.len(),
                channels: rendered.ir.num_channels(),
                path,
            });
        }
    }
    Ok(summary)
}
