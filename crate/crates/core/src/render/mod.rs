//! Turning arrivals into sampled impulse responses.
//!
//! Every arrival contributes `band_filter(gains) * fractional_delay * hrir`
//! placed at `floor(time * fs)`, with the group delays of the band filter
//! and the fractional delay compensated. Because the band filter is linear
//! in its gains, arrivals are first accumulated into one delayed-impulse
//! signal per (channel, band) and each signal is filtered once by its band's
//! basis filter in [`Renderer::finish`].

mod air;
mod conv;
mod fir;

pub use air::{air_absorption_db_per_m, band_air_absorption};
pub use conv::{convolve, Convolver, DirectConvolver};
pub use fir::{
    band_gain_filter, fractional_delay_kernel, magnitude_at, BandFilterBank, FractionalDelay, DEFAULT_BAND_FILTER_TAPS,
    DEFAULT_FRACTIONAL_DELAY_TAPS,
};

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::geometry::Vec3;
use crate::hrtf::{Direction, HrtfSet};
use crate::ism::Arrival;
use crate::scene::{InterpolationMode, SimOptions};

/// A sampled multi-channel impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub fs: u32,
    pub channels: Vec<Vec<f64>>,
}

impl ImpulseResponse {
    pub fn zeros(fs: u32, channels: usize, len: usize) -> Self {
        Self {
            fs,
            channels: vec![vec![0.0; len]; channels],
        }
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / f64::from(self.fs)
    }

    /// Largest absolute sample over all channels.
    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn energy(&self) -> f64 {
        self.channels.iter().flatten().map(|v| v * v).sum()
    }

    /// Sample-wise sum; both responses must have the same shape.
    pub fn add_assign(&mut self, other: &ImpulseResponse) {
        assert_eq!(self.num_channels(), other.num_channels());
        for (a, b) in self.channels.iter_mut().zip(&other.channels) {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().flatten().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("arrival time {0} s is negative or not finite")]
    BadTime(f64),
    #[error("arrival has a non-finite gain")]
    NonFiniteGain,
    #[error("arrival has {got} band gains, renderer expects {expected}")]
    BandCount { expected: usize, got: usize },
    #[error("HRTF set sampled at {hrtf} Hz but the project runs at {project} Hz")]
    SampleRate { hrtf: u32, project: u32 },
    #[error("receiver uses an HRTF but no set was supplied")]
    MissingHrtf,
}

/// FIR lengths used by the renderer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterLengths {
    pub band_filter: usize,
    pub fractional_delay: usize,
}

impl Default for FilterLengths {
    fn default() -> Self {
        Self {
            band_filter: DEFAULT_BAND_FILTER_TAPS,
            fractional_delay: DEFAULT_FRACTIONAL_DELAY_TAPS,
        }
    }
}

/// Renders arrivals for one receiver.
#[derive(Debug, Clone)]
pub struct Renderer<'a> {
    fs: u32,
    length: usize,
    bank: &'a BandFilterBank,
    fd: FractionalDelay,
    hrtf: Option<&'a HrtfSet>,
    interpolate: bool,
    // buffer offset of sample 0
    lead: usize,
}

/// Per-(channel, band) delayed impulse signals awaiting band filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    channels: usize,
    bands: usize,
    stride: usize,
    data: Vec<f64>,
    arrivals: usize,
}

impl Accumulator {
    fn signal(&self, channel: usize, band: usize) -> &[f64] {
        let start = (channel * self.bands + band) * self.stride;
        &self.data[start..start + self.stride]
    }

    /// Number of arrivals added, merged accumulators included.
    pub fn arrivals(&self) -> usize {
        self.arrivals
    }

    /// Element-wise sum with an accumulator of the same shape.
    pub fn merge(&mut self, other: &Accumulator) {
        assert_eq!(self.data.len(), other.data.len());
        self.arrivals += other.arrivals;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

impl<'a> Renderer<'a> {
    /// `hrtf` must be sampled at `opts.fs`.
    pub fn new(
        opts: &SimOptions,
        bank: &'a BandFilterBank,
        fractional_delay_taps: usize,
        hrtf: Option<(&'a HrtfSet, InterpolationMode)>,
    ) -> Result<Self, RenderError> {
        if let Some((set, _)) = hrtf {
            if set.fs() != opts.fs {
                return Err(RenderError::SampleRate {
                    hrtf: set.fs(),
                    project: opts.fs,
                });
            }
        }
        let fd = FractionalDelay::new(fractional_delay_taps);
        let lead = bank.delay().max(fd.center());
        Ok(Self {
            fs: opts.fs,
            length: opts.ir_length(),
            bank,
            fd,
            hrtf: hrtf.map(|(s, _)| s),
            interpolate: matches!(hrtf, Some((_, InterpolationMode::Interpolate))),
            lead,
        })
    }

    pub fn channels(&self) -> usize {
        if self.hrtf.is_some() {
            2
        } else {
            1
        }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn accumulator(&self) -> Accumulator {
        let stride = self.lead + self.length + self.bank.delay();
        let channels = self.channels();
        let bands = self.bank.bands();
        Accumulator {
            channels,
            bands,
            stride,
            data: vec![0.0; channels * bands * stride],
            arrivals: 0,
        }
    }

    /// Add one arrival to `acc`.
    pub fn add(&self, acc: &mut Accumulator, arrival: &Arrival) -> Result<(), RenderError> {
        self.add_parts(acc, arrival.time, arrival.direction, &arrival.band_gains)
    }

    /// Add an arrival given by its time, receiver-local direction and band
    /// gains.
    pub fn add_parts(&self, acc: &mut Accumulator, time: f64, direction: Vec3, gains: &[f64]) -> Result<(), RenderError> {
        if !(time >= 0.0 && time.is_finite()) {
            return Err(RenderError::BadTime(time));
        }
        if gains.len() != self.bank.bands() {
            return Err(RenderError::BandCount {
                expected: self.bank.bands(),
                got: gains.len(),
            });
        }
        if gains.iter().any(|g| !g.is_finite()) {
            return Err(RenderError::NonFiniteGain);
        }
        acc.arrivals += 1;
        if gains.iter().all(|&g| g == 0.0) {
            return Ok(());
        }
        let position = time * f64::from(self.fs);
        let whole = position.floor();
        if whole >= (acc.stride - self.lead) as f64 {
            return Ok(());
        }
        let tau = position - whole;
        let kernel = self.fd.kernel(tau);
        // buffer index of kernel tap 0
        let origin = whole as isize + self.lead as isize - self.fd.center() as isize;

        match self.hrtf {
            None => place(acc, 0, origin, &kernel, gains),
            Some(set) => {
                let dir = Direction::from_vector(direction);
                let pair = set.lookup(&dir, self.interpolate);
                let left = convolve(&kernel, &pair.left);
                let right = convolve(&kernel, &pair.right);
                place(acc, 0, origin, &left, gains);
                place(acc, 1, origin, &right, gains);
            }
        }
        Ok(())
    }

    /// Apply the band filters and produce the response.
    pub fn finish<C: Convolver>(&self, acc: &Accumulator, convolver: &C) -> ImpulseResponse {
        let mut ir = ImpulseResponse::zeros(self.fs, acc.channels, self.length);
        let start = self.lead + self.bank.delay();
        for (c, out) in ir.channels.iter_mut().enumerate() {
            for b in 0..acc.bands {
                let signal = acc.signal(c, b);
                if signal.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let filtered = convolver.convolve_window(signal, self.bank.basis(b), start, self.length);
                for (o, v) in out.iter_mut().zip(filtered) {
                    *o += v;
                }
            }
        }
        ir
    }
}

fn place(acc: &mut Accumulator, channel: usize, origin: isize, kernel: &[f64], gains: &[f64]) {
    let stride = acc.stride as isize;
    // clip the kernel to the buffer
    let first = (-origin).max(0) as usize;
    let last = (stride - origin).clamp(0, kernel.len() as isize) as usize;
    if first >= last {
        return;
    }
    for (b, &g) in gains.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let base = (channel * acc.bands + b) * acc.stride;
        let dst = &mut acc.data[base + (origin + first as isize) as usize..base + (origin + last as isize) as usize];
        for (d, &k) in dst.iter_mut().zip(&kernel[first..last]) {
            *d += g * k;
        }
    }
}

/// Render a sorted arrival list with default filter lengths and direct
/// convolution.
///
/// `hrtf` must be given exactly when the receiver is binaural.
pub fn render_arrivals(
    arrivals: &[Arrival],
    hrtf: Option<(&HrtfSet, InterpolationMode)>,
    opts: &SimOptions,
) -> Result<ImpulseResponse, RenderError> {
    let lengths = FilterLengths::default();
    let bank = BandFilterBank::new(&opts.band_centers, f64::from(opts.fs), lengths.band_filter);
    render_with(arrivals, &bank, lengths.fractional_delay, hrtf, opts, &DirectConvolver)
}

/// Render a sorted arrival list with an explicit filter bank and convolver.
pub fn render_with<C: Convolver>(
    arrivals: &[Arrival],
    bank: &BandFilterBank,
    fractional_delay_taps: usize,
    hrtf: Option<(&HrtfSet, InterpolationMode)>,
    opts: &SimOptions,
    convolver: &C,
) -> Result<ImpulseResponse, RenderError> {
    let renderer = Renderer::new(opts, bank, fractional_delay_taps, hrtf)?;
    let mut acc = renderer.accumulator();
    for a in arrivals {
        renderer.add(&mut acc, a)?;
    }
    Ok(renderer.finish(&acc, convolver))
}
