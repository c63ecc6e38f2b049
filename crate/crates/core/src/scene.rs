//! Simulation domain model: room, surfaces, sources, receivers and options.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Orientation, Vec3};

/// Number of walls of a shoebox room.
pub const SURFACE_COUNT: usize = 6;

/// Octave band centers used when none are configured.
pub const DEFAULT_BAND_CENTERS: [f64; 6] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0];

pub const MIN_TEMPERATURE: f64 = -20.0;
pub const MAX_TEMPERATURE: f64 = 50.0;
pub const MIN_SAMPLE_RATE: u32 = 8000;
pub const MAX_SAMPLE_RATE: u32 = 192_000;

/// Speed of sound in air (m/s) for a temperature in degrees Celsius.
///
/// Humidity and pressure are ignored here; they only enter through air
/// absorption.
pub fn speed_of_sound(temperature: f64) -> f64 {
    331.4 + 0.6 * temperature
}

/// One of the six walls. The discriminant is the index into
/// [`RoomSpec::surfaces`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wall {
    X0 = 0,
    X1 = 1,
    Y0 = 2,
    Y1 = 3,
    Z0 = 4,
    Z1 = 5,
}

impl Wall {
    pub const ALL: [Wall; SURFACE_COUNT] = [Wall::X0, Wall::X1, Wall::Y0, Wall::Y1, Wall::Z0, Wall::Z1];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn axis(self) -> usize {
        self.index() / 2
    }

    /// True for the wall at coordinate `L` rather than at 0.
    pub fn is_upper(self) -> bool {
        self.index() % 2 == 1
    }

    pub fn on_axis(axis: usize, upper: bool) -> Wall {
        Wall::ALL[axis * 2 + usize::from(upper)]
    }

    /// Unit normal pointing into the room.
    pub fn inward_normal(self) -> Vec3 {
        let sign = if self.is_upper() { -1.0 } else { 1.0 };
        Vec3::ZERO.with_axis(self.axis(), sign)
    }

    pub fn name(self) -> &'static str {
        ["x0", "x1", "y0", "y1", "z0", "z1"][self.index()]
    }
}

/// Band-resolved energy absorption and scattering of one wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub absorption: Vec<f64>,
    pub scattering: Vec<f64>,
}

impl SurfaceSpec {
    pub fn uniform(absorption: f64, scattering: f64, bands: usize) -> Self {
        Self {
            absorption: vec![absorption; bands],
            scattering: vec![scattering; bands],
        }
    }

    /// Band-mean scattering coefficient.
    pub fn mean_scattering(&self) -> f64 {
        if self.scattering.is_empty() {
            return 0.0;
        }
        self.scattering.iter().sum::<f64>() / self.scattering.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    /// Lx, Ly, Lz in meters.
    pub dimensions: Vec3,
    /// Indexed by [`Wall`]: x0, x1, y0, y1, z0, z1.
    pub surfaces: Vec<SurfaceSpec>,
    /// Degrees Celsius.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Relative humidity in percent.
    #[serde(default = "default_humidity")]
    pub humidity: f64,
    /// Static pressure in kPa.
    #[serde(default = "default_pressure")]
    pub pressure: f64,
}

fn default_temperature() -> f64 {
    RoomSpec::DEFAULT_TEMPERATURE
}

fn default_humidity() -> f64 {
    RoomSpec::DEFAULT_HUMIDITY
}

fn default_pressure() -> f64 {
    RoomSpec::DEFAULT_PRESSURE
}

impl RoomSpec {
    pub const DEFAULT_TEMPERATURE: f64 = 20.0;
    pub const DEFAULT_HUMIDITY: f64 = 50.0;
    pub const DEFAULT_PRESSURE: f64 = 101.325;

    /// A room with identical surfaces and standard atmosphere.
    pub fn uniform(dimensions: Vec3, absorption: f64, scattering: f64, bands: usize) -> Self {
        Self {
            dimensions,
            surfaces: vec![SurfaceSpec::uniform(absorption, scattering, bands); SURFACE_COUNT],
            temperature: Self::DEFAULT_TEMPERATURE,
            humidity: Self::DEFAULT_HUMIDITY,
            pressure: Self::DEFAULT_PRESSURE,
        }
    }

    pub fn surface(&self, wall: Wall) -> &SurfaceSpec {
        &self.surfaces[wall.index()]
    }

    pub fn volume(&self) -> f64 {
        let d = self.dimensions;
        d.x * d.y * d.z
    }

    pub fn wall_area(&self, wall: Wall) -> f64 {
        let d = self.dimensions;
        match wall.axis() {
            0 => d.y * d.z,
            1 => d.x * d.z,
            _ => d.x * d.y,
        }
    }

    pub fn total_area(&self) -> f64 {
        Wall::ALL.iter().map(|&w| self.wall_area(w)).sum()
    }

    pub fn speed_of_sound(&self) -> f64 {
        speed_of_sound(self.temperature)
    }

    /// Strictly inside the box.
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| p[a] > 0.0 && p[a] < self.dimensions[a])
    }

    /// Distance from `p` to the closest wall.
    pub fn wall_clearance(&self, p: Vec3) -> f64 {
        (0..3)
            .map(|a| p[a].min(self.dimensions[a] - p[a]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Source radiation pattern, `a + (1 - a) cos(theta)` in pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Directivity {
    #[default]
    Omnidirectional,
    Subcardioid,
    Cardioid,
    Hypercardioid,
    Dipole,
}

impl Directivity {
    pub const ALL: [Directivity; 5] = [
        Directivity::Omnidirectional,
        Directivity::Subcardioid,
        Directivity::Cardioid,
        Directivity::Hypercardioid,
        Directivity::Dipole,
    ];

    fn omni_weight(self) -> f64 {
        match self {
            Directivity::Omnidirectional => 1.0,
            Directivity::Subcardioid => 0.75,
            Directivity::Cardioid => 0.5,
            Directivity::Hypercardioid => 0.25,
            Directivity::Dipole => 0.0,
        }
    }

    /// Signed pressure gain for a direction at `cos_angle` from the axis.
    pub fn gain(self, cos_angle: f64) -> f64 {
        let a = self.omni_weight();
        a + (1.0 - a) * cos_angle
    }

    /// Mean of `gain^2` over the sphere; 1 for an omnidirectional source.
    pub fn power_factor(self) -> f64 {
        let a = self.omni_weight();
        a * a + (1.0 - a) * (1.0 - a) / 3.0
    }

    pub fn name(self) -> &'static str {
        match self {
            Directivity::Omnidirectional => "omnidirectional",
            Directivity::Subcardioid => "subcardioid",
            Directivity::Cardioid => "cardioid",
            Directivity::Hypercardioid => "hypercardioid",
            Directivity::Dipole => "dipole",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Directivity::ALL.into_iter().find(|d| d.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub position: Vec3,
    pub orientation: Orientation,
    pub directivity: Directivity,
}

impl SourceSpec {
    pub fn omni(position: Vec3) -> Self {
        Self {
            position,
            orientation: Orientation::default(),
            directivity: Directivity::Omnidirectional,
        }
    }
}

/// How an HRIR is chosen for a direction that was not measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationMode {
    #[default]
    Nearest,
    Interpolate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ReceiverKind {
    Omnidirectional,
    Hrtf {
        /// Path to an HRTF container.
        path: String,
        interpolation: InterpolationMode,
        normalize: bool,
    },
}

impl ReceiverKind {
    pub fn channels(&self) -> usize {
        match self {
            ReceiverKind::Omnidirectional => 1,
            ReceiverKind::Hrtf { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSpec {
    pub position: Vec3,
    pub orientation: Orientation,
    pub kind: ReceiverKind,
}

impl ReceiverSpec {
    pub fn omni(position: Vec3) -> Self {
        Self {
            position,
            orientation: Orientation::default(),
            kind: ReceiverKind::Omnidirectional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// Sampling rate in Hz.
    pub fs: u32,
    /// Impulse response length in seconds.
    pub ir_duration: f64,
    pub band_centers: Vec<f64>,
    pub ism_enabled: bool,
    pub ism_max_order: u32,
    pub diffuse_enabled: bool,
    pub n_rays: u64,
    /// Radius of the receiver detection sphere in meters.
    pub detection_radius: f64,
    pub seed: u64,
    /// Rays stop once their strongest band falls below this fraction of
    /// the initial per-ray energy.
    pub energy_threshold: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            fs: 48_000,
            ir_duration: 1.0,
            band_centers: DEFAULT_BAND_CENTERS.to_vec(),
            ism_enabled: true,
            ism_max_order: 6,
            diffuse_enabled: true,
            n_rays: 10_000,
            detection_radius: 0.5,
            seed: 0,
            energy_threshold: 1e-6,
        }
    }
}

impl SimOptions {
    pub fn bands(&self) -> usize {
        self.band_centers.len()
    }

    /// Output length in samples.
    pub fn ir_length(&self) -> usize {
        (self.fs as f64 * self.ir_duration).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Wav,
    F64Raw,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Wav => "wav",
            OutputFormat::F64Raw => "f64raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    /// Output directory.
    pub path: String,
    pub format: OutputFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            path: String::from("."),
            format: OutputFormat::Wav,
        }
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub room: RoomSpec,
    pub options: SimOptions,
    pub sources: Vec<SourceSpec>,
    pub receivers: Vec<ReceiverSpec>,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("room dimensions must be strictly positive, got {0:?}")]
    Dimensions([f64; 3]),
    #[error("temperature {0} C outside [-20, 50]")]
    Temperature(f64),
    #[error("humidity {0} % outside [0, 100]")]
    Humidity(f64),
    #[error("pressure {0} kPa must be positive")]
    Pressure(f64),
    #[error("expected 6 surfaces, got {0}")]
    SurfaceCount(usize),
    #[error("surface {wall} has {got} {what} values but {expected} bands are configured")]
    BandMismatch {
        wall: &'static str,
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("absorption out of range: surface {wall} band {band} = {value}")]
    Absorption { wall: &'static str, band: usize, value: f64 },
    #[error("scattering out of range: surface {wall} band {band} = {value}")]
    Scattering { wall: &'static str, band: usize, value: f64 },
    #[error("sampling rate {0} Hz outside [8000, 192000]")]
    SampleRate(u32),
    #[error("impulse response duration must be positive, got {0}")]
    Duration(f64),
    #[error("band centers must be positive, strictly increasing and below fs/2")]
    BandCenters,
    #[error("detection radius must be positive, got {0}")]
    DetectionRadius(f64),
    #[error("energy threshold must be in (0, 1), got {0}")]
    EnergyThreshold(f64),
    #[error("no sources defined")]
    NoSources,
    #[error("no receivers defined")]
    NoReceivers,
    #[error("source outside room: source {index} at {position:?}")]
    SourceOutsideRoom { index: usize, position: [f64; 3] },
    #[error("receiver outside room: receiver {index} at {position:?}")]
    ReceiverOutsideRoom { index: usize, position: [f64; 3] },
    #[error("source {source_index} and receiver {receiver} are {distance} m apart, inside the {radius} m detection sphere")]
    TooClose {
        source_index: usize,
        receiver: usize,
        distance: f64,
        radius: f64,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// A [`SimulationSpec`] whose invariants have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSpec(SimulationSpec);

impl ValidatedSpec {
    pub fn into_inner(self) -> SimulationSpec {
        self.0
    }

    pub fn spec(&self) -> &SimulationSpec {
        &self.0
    }
}

impl Deref for ValidatedSpec {
    type Target = SimulationSpec;

    fn deref(&self) -> &SimulationSpec {
        &self.0
    }
}

pub fn validate_room(room: &RoomSpec, bands: usize) -> Result<(), SceneError> {
    let d = room.dimensions;
    if !d.is_finite() {
        return Err(SceneError::NonFinite("room.dimension"));
    }
    if d.x <= 0.0 || d.y <= 0.0 || d.z <= 0.0 {
        return Err(SceneError::Dimensions(d.to_array()));
    }
    if !(MIN_TEMPERATURE..=MAX_TEMPERATURE).contains(&room.temperature) {
        return Err(SceneError::Temperature(room.temperature));
    }
    if !(0.0..=100.0).contains(&room.humidity) {
        return Err(SceneError::Humidity(room.humidity));
    }
    if !(room.pressure > 0.0 && room.pressure.is_finite()) {
        return Err(SceneError::Pressure(room.pressure));
    }
    if room.surfaces.len() != SURFACE_COUNT {
        return Err(SceneError::SurfaceCount(room.surfaces.len()));
    }
    for wall in Wall::ALL {
        let s = room.surface(wall);
        for (what, values) in [("absorption", &s.absorption), ("scattering", &s.scattering)] {
            if values.len() != bands {
                return Err(SceneError::BandMismatch {
                    wall: wall.name(),
                    what,
                    expected: bands,
                    got: values.len(),
                });
            }
        }
        if let Some((band, &value)) = s.absorption.iter().enumerate().find(|(_, a)| !(0.0..=1.0).contains(*a)) {
            return Err(SceneError::Absorption {
                wall: wall.name(),
                band,
                value,
            });
        }
        if let Some((band, &value)) = s.scattering.iter().enumerate().find(|(_, a)| !(0.0..=1.0).contains(*a)) {
            return Err(SceneError::Scattering {
                wall: wall.name(),
                band,
                value,
            });
        }
    }
    Ok(())
}

pub fn validate_options(opts: &SimOptions) -> Result<(), SceneError> {
    if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&opts.fs) {
        return Err(SceneError::SampleRate(opts.fs));
    }
    if !(opts.ir_duration > 0.0 && opts.ir_duration.is_finite()) {
        return Err(SceneError::Duration(opts.ir_duration));
    }
    let nyquist = opts.fs as f64 / 2.0;
    let bands = &opts.band_centers;
    let increasing = bands.windows(2).all(|w| w[0] < w[1]);
    if bands.is_empty() || !increasing || bands[0] <= 0.0 || bands[bands.len() - 1] >= nyquist {
        return Err(SceneError::BandCenters);
    }
    if !(opts.detection_radius > 0.0 && opts.detection_radius.is_finite()) {
        return Err(SceneError::DetectionRadius(opts.detection_radius));
    }
    if !(opts.energy_threshold > 0.0 && opts.energy_threshold < 1.0) {
        return Err(SceneError::EnergyThreshold(opts.energy_threshold));
    }
    Ok(())
}

/// Check every invariant of the scene.
pub fn validate(spec: SimulationSpec) -> Result<ValidatedSpec, SceneError> {
    validate_options(&spec.options)?;
    validate_room(&spec.room, spec.options.bands())?;
    if spec.sources.is_empty() {
        return Err(SceneError::NoSources);
    }
    if spec.receivers.is_empty() {
        return Err(SceneError::NoReceivers);
    }
    for (index, s) in spec.sources.iter().enumerate() {
        if !s.position.is_finite() {
            return Err(SceneError::NonFinite("source position"));
        }
        if !spec.room.contains(s.position) {
            return Err(SceneError::SourceOutsideRoom {
                index: index + 1,
                position: s.position.to_array(),
            });
        }
    }
    for (index, r) in spec.receivers.iter().enumerate() {
        if !r.position.is_finite() {
            return Err(SceneError::NonFinite("receiver position"));
        }
        if !spec.room.contains(r.position) {
            return Err(SceneError::ReceiverOutsideRoom {
                index: index + 1,
                position: r.position.to_array(),
            });
        }
    }
    let radius = spec.options.detection_radius;
    for (si, s) in spec.sources.iter().enumerate() {
        for (ri, r) in spec.receivers.iter().enumerate() {
            let distance = s.position.distance(r.position);
            if distance <= radius {
                return Err(SceneError::TooClose {
                    source_index: si + 1,
                    receiver: ri + 1,
                    distance,
                    radius,
                });
            }
        }
    }
    Ok(ValidatedSpec(spec))
}
