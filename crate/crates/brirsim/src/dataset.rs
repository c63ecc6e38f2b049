//! Batch generation of annotated BRIR datasets.
//!
//! A dataset spec is a JSON file:
//!
//! ```json
//! {
//!   "room": { "dimensions": [5.1, 7.1, 3.0], "surfaces": [...] },
//!   "options": { "ir_duration": 0.5, "n_rays": 20000 },
//!   "receivers": { "positions": [[1.5, 1.5, 1.75], [3.5, 5.5, 1.75]] },
//!   "hrtfs": ["kemar.hrtf", "cipic.hrtf"],
//!   "source_layout": { "type": "sphere", "radius": 1.0, "azimuth_step": 10, "elevation_step": 10 },
//!   "output_dir": "out",
//!   "seed": 7
//! }
//! ```
//!
//! Every (receiver, source, HRTF) combination is written to
//! `r{i}_s{j}_h{k}.wav` in the output directory and described in
//! `manifest.json`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use brirsim_core::analysis::{estimate_rt60, predicted_rt60_eyring};
use brirsim_core::engine::{prepare_hrtf, EngineError, Pipeline};
use brirsim_core::geometry::Orientation;
use brirsim_core::hrtf::{HrtfError, HrtfSet};
use brirsim_core::layout::{entry_seed, grid_positions, relative_direction, source_on_sphere, sphere_directions};
use brirsim_core::render::{BandFilterBank, FilterLengths};
use brirsim_core::scene::{
    validate, validate_options, validate_room, Directivity, InterpolationMode, OutputSpec, ReceiverKind, ReceiverSpec,
    RoomSpec, SceneError, SimOptions, SimulationSpec, SourceSpec, ValidatedSpec,
};
use brirsim_core::{ImpulseResponse, Vec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fft::FftConvolver;
use crate::hrtf_io::{load_hrtf, ContainerError};
use crate::parallel::pool;
use crate::simulate::resolve;
use crate::wave::{decode_wave, encode_wave, SampleFormat, WaveError};

pub const MANIFEST_SCHEMA: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverLayout {
    Positions(Vec<Vec3>),
    Grid { start: Vec3, step: Vec3, count: [usize; 3] },
}

impl ReceiverLayout {
    pub fn positions(&self) -> Vec<Vec3> {
        match self {
            ReceiverLayout::Positions(p) => p.clone(),
            ReceiverLayout::Grid { start, step, count } => grid_positions(*start, *step, *count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SourceLayout {
    /// Directions on a sphere around each receiver, in the receiver frame.
    Sphere {
        radius: f64,
        #[serde(default = "default_step")]
        azimuth_step: f64,
        #[serde(default = "default_step")]
        elevation_step: f64,
    },
    /// The measured directions of each HRTF set.
    HrtfGrid { radius: f64 },
    /// Fixed room positions.
    Explicit { positions: Vec<Vec3> },
}

fn default_step() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub room: RoomSpec,
    #[serde(default)]
    pub options: SimOptions,
    pub receivers: ReceiverLayout,
    #[serde(default)]
    pub receiver_orientation: Orientation,
    /// HRTF containers, relative to the spec file. Empty renders
    /// omnidirectional responses.
    #[serde(default)]
    pub hrtfs: Vec<String>,
    #[serde(default)]
    pub interpolation: InterpolationMode,
    #[serde(default)]
    pub normalize: bool,
    pub source_layout: SourceLayout,
    #[serde(default)]
    pub source_directivity: Directivity,
    pub output_dir: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sample_format: SampleFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrtfRecord {
    pub id: usize,
    pub path: String,
    pub fs: u32,
    pub directions: usize,
    pub ir_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDirection {
    pub azimuth: f64,
    pub elevation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub file: String,
    pub receiver_index: usize,
    pub source_index: usize,
    pub hrtf_index: usize,
    pub receiver_position: Vec3,
    pub receiver_orientation: Orientation,
    pub source_position: Vec3,
    /// HRTF path as given in the spec, or `omnidirectional`.
    pub hrtf: String,
    pub source_direction: SourceDirection,
    /// Broadband RT60 of the written file; null when the decay is too short
    /// to measure.
    pub rt60: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub created_seed: u64,
    pub room: RoomSpec,
    pub options: SimOptions,
    /// Eyring prediction per band; null where the mean absorption is 0 or 1.
    pub predicted_rt60: Vec<Option<f64>>,
    pub hrtfs: Vec<HrtfRecord>,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset spec not found: {0}")]
    NotFound(String),
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("dataset spec: {0}")]
    Parse(String),
    #[error("dataset spec: {0}")]
    Layout(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("entry {file}: {source}")]
    Entry {
        file: String,
        #[source]
        source: SceneError,
    },
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
    #[error("entry {file}: {source}")]
    Engine {
        file: String,
        #[source]
        source: EngineError,
    },
    #[error("entry {file}: {source}")]
    Encode {
        file: String,
        #[source]
        source: WaveError,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl DatasetError {
    /// True for problems with the spec or its inputs rather than the
    /// environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, DatasetError::Read { .. } | DatasetError::Write { .. } | DatasetError::NotFound(_))
    }
}

/// Read a spec; relative paths inside it resolve against the returned
/// directory.
pub fn load_dataset_spec(path: &Path) -> Result<(DatasetSpec, PathBuf), DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            DatasetError::NotFound(path.display().to_string())
        } else {
            DatasetError::Read {
                path: path.display().to_string(),
                source,
            }
        }
    })?;
    let spec = serde_json::from_str(&text).map_err(|e| DatasetError::Parse(e.to_string()))?;
    Ok((spec, path.parent().unwrap_or(Path::new(".")).to_path_buf()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenerateOptions {
    /// Keep existing files that decode with the expected shape.
    pub resume: bool,
    /// Worker threads; zero uses every core.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub rendered: usize,
    pub skipped: usize,
}

struct Plan {
    file: String,
    spec: ValidatedSpec,
    hrtf: Option<usize>,
    entry: Entry,
}

fn hrtf_label(spec: &DatasetSpec, h: Option<usize>) -> String {
    h.map_or_else(|| "omnidirectional".to_string(), |h| spec.hrtfs[h].clone())
}

fn plan(spec: &DatasetSpec, sets: &[HrtfSet], seed: u64) -> Result<Vec<Plan>, DatasetError> {
    validate_options(&spec.options)?;
    validate_room(&spec.room, spec.options.bands())?;
    let receivers = spec.receivers.positions();
    if receivers.is_empty() {
        return Err(DatasetError::Layout("no receiver positions".into()));
    }
    for (i, &r) in receivers.iter().enumerate() {
        if !spec.room.contains(r) {
            return Err(DatasetError::Layout(format!("receiver {i} at {:?} is outside the room", r.to_array())));
        }
    }
    let rotation = spec.receiver_orientation.rotation();
    match &spec.source_layout {
        SourceLayout::Sphere { radius, .. } | SourceLayout::HrtfGrid { radius } => {
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(DatasetError::Layout(format!("sphere radius {radius} must be positive")));
            }
            for (i, &r) in receivers.iter().enumerate() {
                let clearance = spec.room.wall_clearance(r);
                if *radius >= clearance {
                    return Err(DatasetError::Layout(format!(
                        "sphere radius {radius} m does not fit around receiver {i} ({clearance:.3} m from the nearest wall)"
                    )));
                }
            }
        }
        SourceLayout::Explicit { positions } => {
            if positions.is_empty() {
                return Err(DatasetError::Layout("no source positions".into()));
            }
            for (j, &s) in positions.iter().enumerate() {
                if !spec.room.contains(s) {
                    return Err(DatasetError::Layout(format!("source {j} at {:?} is outside the room", s.to_array())));
                }
            }
        }
    }
    if matches!(spec.source_layout, SourceLayout::HrtfGrid { .. }) && spec.hrtfs.is_empty() {
        return Err(DatasetError::Layout("hrtf-grid sources need at least one HRTF set".into()));
    }
    let hrtf_ids: Vec<Option<usize>> = if spec.hrtfs.is_empty() {
        vec![None]
    } else {
        (0..spec.hrtfs.len()).map(Some).collect()
    };
    let sphere = match spec.source_layout {
        SourceLayout::Sphere {
            azimuth_step,
            elevation_step,
            ..
        } => {
            if !(azimuth_step > 0.0 && elevation_step > 0.0) {
                return Err(DatasetError::Layout("sphere steps must be positive".into()));
            }
            sphere_directions(azimuth_step, elevation_step)
        }
        _ => Vec::new(),
    };

    let mut plans = Vec::new();
    for (i, &receiver) in receivers.iter().enumerate() {
        for (k, &h) in hrtf_ids.iter().enumerate() {
            let sources: Vec<Vec3> = match &spec.source_layout {
                SourceLayout::Sphere { radius, .. } => sphere
                    .iter()
                    .map(|&(az, el)| source_on_sphere(receiver, &rotation, *radius, az, el))
                    .collect(),
                SourceLayout::HrtfGrid { radius } => sets[k]
                    .positions()
                    .iter()
                    .map(|p| source_on_sphere(receiver, &rotation, *radius, p[0], p[1]))
                    .collect(),
                SourceLayout::Explicit { positions } => positions.clone(),
            };
            for (j, &source) in sources.iter().enumerate() {
                let file = format!("r{i}_s{j}_h{k}.wav");
                let entry_seed = entry_seed(seed, i, j, k);
                let kind = match h {
                    None => ReceiverKind::Omnidirectional,
                    Some(h) => ReceiverKind::Hrtf {
                        path: spec.hrtfs[h].clone(),
                        interpolation: spec.interpolation,
                        normalize: spec.normalize,
                    },
                };
                let sim = SimulationSpec {
                    room: spec.room.clone(),
                    options: SimOptions {
                        seed: entry_seed,
                        ..spec.options.clone()
                    },
                    sources: vec![SourceSpec {
                        position: source,
                        orientation: Orientation::default(),
                        directivity: spec.source_directivity,
                    }],
                    receivers: vec![ReceiverSpec {
                        position: receiver,
                        orientation: spec.receiver_orientation,
                        kind,
                    }],
                    output: OutputSpec::default(),
                };
                let validated = validate(sim).map_err(|source| DatasetError::Entry {
                    file: file.clone(),
                    source,
                })?;
                let (azimuth, elevation) = relative_direction(receiver, &rotation, source);
                plans.push(Plan {
                    entry: Entry {
                        file: file.clone(),
                        receiver_index: i,
                        source_index: j,
                        hrtf_index: k,
                        receiver_position: receiver,
                        receiver_orientation: spec.receiver_orientation,
                        source_position: source,
                        hrtf: hrtf_label(spec, h),
                        source_direction: SourceDirection { azimuth, elevation },
                        rt60: None,
                        seed: entry_seed,
                    },
                    file,
                    spec: validated,
                    hrtf: h,
                });
            }
        }
    }
    Ok(plans)
}

fn render_entry(plan: &Plan, sets: &[HrtfSet], bank: &BandFilterBank, fd_taps: usize) -> Result<ImpulseResponse, EngineError> {
    let hrtf = plan.hrtf.map(|h| &sets[h]);
    let pipeline = Pipeline::new(&plan.spec, 0, 0, bank, fd_taps, hrtf)?;
    let acc = pipeline.accumulate()?;
    Ok(pipeline.finish(&acc, &FftConvolver))
}

/// An existing output counts as valid if it decodes with the expected
/// shape and rate.
fn existing(path: &Path, fs: u32, channels: usize, len: usize) -> Option<ImpulseResponse> {
    let ir = decode_wave(&fs::read(path).ok()?).ok()?;
    (ir.fs == fs && ir.num_channels() == channels && ir.len() == len).then_some(ir)
}

/// Render every combination of `spec`, write the files and the manifest.
///
/// `progress(done, total)` is called after each entry, possibly from
/// worker threads.
pub fn generate_dataset(
    spec: &DatasetSpec,
    base: &Path,
    opts: &GenerateOptions,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Report, DatasetError> {
    let mut sets = Vec::with_capacity(spec.hrtfs.len());
    let mut records = Vec::with_capacity(spec.hrtfs.len());
    for (id, path) in spec.hrtfs.iter().enumerate() {
        let full = resolve(base, path);
        let raw = load_hrtf(&full).map_err(|source| DatasetError::Hrtf {
            path: full.display().to_string(),
            source,
        })?;
        let receiver = ReceiverSpec {
            position: Vec3::ZERO,
            orientation: spec.receiver_orientation,
            kind: ReceiverKind::Hrtf {
                path: path.clone(),
                interpolation: spec.interpolation,
                normalize: spec.normalize,
            },
        };
        let set = prepare_hrtf(&raw, &receiver, spec.options.fs).map_err(|source| DatasetError::Prepare {
            path: full.display().to_string(),
            source,
        })?;
        records.push(HrtfRecord {
            id,
            path: path.clone(),
            fs: raw.fs(),
            directions: raw.len(),
            ir_length: raw.ir_length(),
        });
        sets.push(set);
    }
    let plans = plan(spec, &sets, spec.seed)?;

    let out_dir = resolve(base, &spec.output_dir);
    fs::create_dir_all(&out_dir).map_err(|source| DatasetError::Write {
        path: out_dir.display().to_string(),
        source,
    })?;

    let lengths = FilterLengths::default();
    let bank = BandFilterBank::new(&spec.options.band_centers, f64::from(spec.options.fs), lengths.band_filter);
    let total = plans.len();
    let done = AtomicUsize::new(0);
    let skipped = AtomicUsize::new(0);
    let len = spec.options.ir_length();
    let workers = pool(opts.jobs);
    let rt60s: Vec<Option<f64>> = workers.install(|| {
        plans
            .par_iter()
            .map(|p| -> Result<Option<f64>, DatasetError> {
                let path = out_dir.join(&p.file);
                let channels = if p.hrtf.is_some() { 2 } else { 1 };
                let kept = if opts.resume { existing(&path, spec.options.fs, channels, len) } else { None };
                let written = match kept {
                    Some(ir) => {
                        skipped.fetch_add(1, Ordering::Relaxed);
                        ir
                    }
                    None => {
                        let ir = render_entry(p, &sets, &bank, lengths.fractional_delay).map_err(|source| DatasetError::Engine {
                            file: p.file.clone(),
                            source,
                        })?;
                        let bytes = encode_wave(&ir, spec.sample_format).map_err(|source| DatasetError::Encode {
                            file: p.file.clone(),
                            source,
                        })?;
                        fs::write(&path, &bytes).map_err(|source| DatasetError::Write {
                            path: path.display().to_string(),
                            source,
                        })?;
                        // annotate what the file holds, not the f64 render
                        decode_wave(&bytes).expect("freshly encoded wave decodes")
                    }
                };
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                Ok(estimate_rt60(&written).ok())
            })
            .collect::<Result<_, _>>()
    })?;

    let entries = plans
        .into_iter()
        .zip(rt60s)
        .map(|(p, rt60)| Entry { rt60, ..p.entry })
        .collect();
    let predicted_rt60 = (0..spec.options.bands())
        .map(|b| predicted_rt60_eyring(&spec.room, b).ok())
        .collect();
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        created_seed: spec.seed,
        room: spec.room.clone(),
        options: spec.options.clone(),
        predicted_rt60,
        hrtfs: records,
        entries,
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(|source| DatasetError::Write {
        path: manifest_path.display().to_string(),
        source,
    })?;
    let skipped = skipped.into_inner();
    Ok(Report {
        manifest,
        manifest_path,
        rendered: total - skipped,
        skipped,
    })
}
