//! Full BRIR assembly for one source/receiver pair.
//!
//! Diffuse rays are processed in fixed chunks of [`RAY_CHUNK`] rays. Each
//! chunk renders into its own accumulator and the accumulators are summed
//! in chunk order after the specular part, so a parallel driver that
//! computes chunks concurrently and merges them in the same order produces
//! bit-identical output.

use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::diffuse::{DiffuseContribution, Tracer};
use crate::hrtf::{HrtfError, HrtfSet};
use crate::ism::{sort_arrivals, specular_arrivals, Arrival, IsmError, Listener};
use crate::render::{
    band_air_absorption, Accumulator, BandFilterBank, Convolver, DirectConvolver, FilterLengths, ImpulseResponse,
    RenderError, Renderer,
};
use crate::scene::{ReceiverKind, ReceiverSpec, ValidatedSpec};

/// Rays per deterministic work unit.
pub const RAY_CHUNK: u64 = 2048;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("{what} index {index} out of range ({count} defined)")]
    Index { what: &'static str, index: usize, count: usize },
    #[error("receiver {0} is omnidirectional but an HRTF set was supplied")]
    UnexpectedHrtf(usize),
    #[error(transparent)]
    Ism(#[from] IsmError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Hrtf(#[from] HrtfError),
}

/// Resample and normalize an HRTF set as the receiver asks for.
pub fn prepare_hrtf(set: &HrtfSet, receiver: &ReceiverSpec, fs: u32) -> Result<HrtfSet, HrtfError> {
    let mut out = if set.fs() == fs { set.clone() } else { set.resample(fs)? };
    if let ReceiverKind::Hrtf { normalize: true, .. } = receiver.kind {
        out = out.normalize()?;
    }
    Ok(out)
}

/// Everything needed to render one source/receiver pair.
#[derive(Debug, Clone)]
pub struct Pipeline<'a> {
    spec: &'a ValidatedSpec,
    renderer: Renderer<'a>,
    specular: Vec<Arrival>,
    tracer: Tracer<'a>,
}

impl<'a> Pipeline<'a> {
    /// `hrtf` must be given exactly when the receiver is binaural and must
    /// already run at the project rate (see [`prepare_hrtf`]).
    pub fn new(
        spec: &'a ValidatedSpec,
        source_index: usize,
        receiver_index: usize,
        bank: &'a BandFilterBank,
        fractional_delay_taps: usize,
        hrtf: Option<&'a HrtfSet>,
    ) -> Result<Self, EngineError> {
        let source = spec.sources.get(source_index).ok_or(EngineError::Index {
            what: "source",
            index: source_index,
            count: spec.sources.len(),
        })?;
        let receiver = spec.receivers.get(receiver_index).ok_or(EngineError::Index {
            what: "receiver",
            index: receiver_index,
            count: spec.receivers.len(),
        })?;
        let hrtf = match (&receiver.kind, hrtf) {
            (ReceiverKind::Omnidirectional, None) => None,
            (ReceiverKind::Omnidirectional, Some(_)) => return Err(EngineError::UnexpectedHrtf(receiver_index)),
            (ReceiverKind::Hrtf { .. }, None) => return Err(RenderError::MissingHrtf.into()),
            (ReceiverKind::Hrtf { interpolation, .. }, Some(set)) => Some((set, *interpolation)),
        };
        let opts = &spec.options;
        let renderer = Renderer::new(opts, bank, fractional_delay_taps, hrtf)?;
        let air = band_air_absorption(&spec.room, &opts.band_centers);
        let listener = Listener::new(receiver.position, receiver.orientation.rotation());
        let mut specular = if opts.ism_enabled {
            specular_arrivals(&spec.room, source, &listener, opts, &air)?
        } else {
            Vec::new()
        };
        sort_arrivals(&mut specular);
        let tracer = Tracer::new(&spec.room, source, listener, opts, air);
        Ok(Self {
            spec,
            renderer,
            specular,
            tracer,
        })
    }

    pub fn spec(&self) -> &ValidatedSpec {
        self.spec
    }

    pub fn channels(&self) -> usize {
        self.renderer.channels()
    }

    /// Specular arrivals sorted by (time, id).
    pub fn specular(&self) -> &[Arrival] {
        &self.specular
    }

    pub fn tracer(&self) -> &Tracer<'a> {
        &self.tracer
    }

    pub fn chunk_count(&self) -> u64 {
        self.tracer.ray_count().div_ceil(RAY_CHUNK)
    }

    pub fn specular_accumulator(&self) -> Result<Accumulator, EngineError> {
        let mut acc = self.renderer.accumulator();
        for a in &self.specular {
            self.renderer.add(&mut acc, a)?;
        }
        Ok(acc)
    }

    /// Render the rain of chunk `chunk` in (ray, bounce) order.
    pub fn diffuse_chunk(&self, chunk: u64) -> Result<Accumulator, EngineError> {
        let mut acc = self.renderer.accumulator();
        let rays = self.tracer.ray_count();
        let start = chunk * RAY_CHUNK;
        let end = (start + RAY_CHUNK).min(rays);
        let scale = DiffuseContribution::pressure_scale(self.tracer.detection_radius());
        let mut gains = Vec::new();
        let mut result = Ok(());
        for ray in start..end {
            self.tracer.trace_ray(ray, |c| {
                if result.is_err() {
                    return;
                }
                gains.clear();
                gains.extend(c.energy.iter().map(|&e| c.sign * (scale * e).sqrt()));
                result = self.renderer.add_parts(&mut acc, c.time, c.direction, &gains);
            });
            result.clone()?;
        }
        Ok(acc)
    }

    /// Specular part followed by every diffuse chunk, summed in order.
    pub fn accumulate(&self) -> Result<Accumulator, EngineError> {
        let mut total = self.specular_accumulator()?;
        for chunk in 0..self.chunk_count() {
            total.merge(&self.diffuse_chunk(chunk)?);
        }
        Ok(total)
    }

    pub fn finish<C: Convolver>(&self, acc: &Accumulator, convolver: &C) -> ImpulseResponse {
        self.renderer.finish(acc, convolver)
    }
}

/// Render the response of source `source_index` at receiver
/// `receiver_index` with the default filter lengths.
pub fn assemble_brir(
    spec: &ValidatedSpec,
    source_index: usize,
    receiver_index: usize,
    hrtf: Option<&HrtfSet>,
) -> Result<ImpulseResponse, EngineError> {
    let lengths = FilterLengths::default();
    let bank = BandFilterBank::new(&spec.options.band_centers, f64::from(spec.options.fs), lengths.band_filter);
    assemble_with(spec, source_index, receiver_index, hrtf, &bank, lengths.fractional_delay, &DirectConvolver)
}

/// [`assemble_brir`] with an explicit filter bank and convolver.
pub fn assemble_with<C: Convolver>(
    spec: &ValidatedSpec,
    source_index: usize,
    receiver_index: usize,
    hrtf: Option<&HrtfSet>,
    bank: &BandFilterBank,
    fractional_delay_taps: usize,
    convolver: &C,
) -> Result<ImpulseResponse, EngineError> {
    let pipeline = Pipeline::new(spec, source_index, receiver_index, bank, fractional_delay_taps, hrtf)?;
    let acc = pipeline.accumulate()?;
    Ok(pipeline.finish(&acc, convolver))
}
