//! Multi-threaded rendering with output independent of the worker count.

use brirsim_core::engine::{EngineError, Pipeline};
use brirsim_core::hrtf::HrtfSet;
use brirsim_core::render::{Accumulator, BandFilterBank, FilterLengths};
use brirsim_core::{ImpulseResponse, ValidatedSpec};
use rayon::prelude::*;

use crate::fft::FftConvolver;

/// Build a pool of `jobs` workers; zero means one per core.
pub fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool")
}

/// Sum of the specular accumulator and every diffuse chunk, in chunk order.
///
/// Chunks are computed in waves of a few per worker so that memory stays
/// bounded; the merge order never depends on which worker finished first.
pub fn accumulate_parallel(pipeline: &Pipeline<'_>, pool: &rayon::ThreadPool) -> Result<Accumulator, EngineError> {
    let mut total = pipeline.specular_accumulator()?;
    let chunks = pipeline.chunk_count();
    let wave = (pool.current_num_threads() as u64 * 2).max(1);
    let mut start = 0;
    while start < chunks {
        let end = (start + wave).min(chunks);
        let parts: Vec<Accumulator> =
            pool.install(|| (start..end).into_par_iter().map(|k| pipeline.diffuse_chunk(k)).collect::<Result<_, _>>())?;
        for p in &parts {
            total.merge(p);
        }
        start = end;
    }
    Ok(total)
}

/// A rendered pair and its arrival counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub ir: ImpulseResponse,
    pub specular: usize,
    pub diffuse: usize,
}

/// Render one source/receiver pair with default filter lengths and FFT
/// convolution. `hrtf` must already be prepared for the project rate.
pub fn render_pair(
    spec: &ValidatedSpec,
    source_index: usize,
    receiver_index: usize,
    hrtf: Option<&HrtfSet>,
    pool: &rayon::ThreadPool,
) -> Result<Rendered, EngineError> {
    let lengths = FilterLengths::default();
    let bank = BandFilterBank::new(&spec.options.band_centers, f64::from(spec.options.fs), lengths.band_filter);
    let pipeline = Pipeline::new(spec, source_index, receiver_index, &bank, lengths.fractional_delay, hrtf)?;
    let acc = accumulate_parallel(&pipeline, pool)?;
    let specular = pipeline.specular().len();
    Ok(Rendered {
        ir: pipeline.finish(&acc, &FftConvolver),
        specular,
        diffuse: acc.arrivals() - specular,
    })
}
