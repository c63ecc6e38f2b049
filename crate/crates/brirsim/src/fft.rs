//! FFT convolution for the long band filters.

use std::sync::Arc;

use brirsim_core::render::{Convolver, DirectConvolver};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Below this many multiply-adds direct convolution is used.
const DIRECT_LIMIT: usize = 1 << 16;

/// Overlap-add convolution. Plans are created per call, so one value can be
/// shared between threads.
#[derive(Debug, Clone, Copy, Default)]
pub struct FftConvolver;

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

impl Convolver for FftConvolver {
    fn convolve_window(&self, signal: &[f64], kernel: &[f64], start: usize, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        if signal.is_empty() || kernel.is_empty() || len == 0 {
            return out;
        }
        if len.min(signal.len()) * kernel.len() <= DIRECT_LIMIT {
            return DirectConvolver.convolve_window(signal, kernel, start, len);
        }
        let block = kernel.len().next_power_of_two().max(1024);
        let n = (block + kernel.len() - 1).next_power_of_two();
        let (forward, inverse) = plans(n);
        let mut k: Vec<Complex<f64>> = kernel.iter().map(|&v| Complex::new(v, 0.0)).collect();
        k.resize(n, Complex::default());
        forward.process(&mut k);
        let scale = 1.0 / n as f64;
        let end = start + len;
        // only signal blocks that can reach the window matter
        let first = start.saturating_sub(kernel.len() - 1) / block * block;
        let mut buf = vec![Complex::default(); n];
        let mut at = first;
        while at < signal.len() && at < end {
            let seg = &signal[at..(at + block).min(signal.len())];
            if seg.iter().any(|&v| v != 0.0) {
                for (b, &v) in buf.iter_mut().zip(seg) {
                    *b = Complex::new(v, 0.0);
                }
                buf[seg.len()..].fill(Complex::default());
                forward.process(&mut buf);
                for (b, kk) in buf.iter_mut().zip(&k) {
                    *b *= kk;
                }
                inverse.process(&mut buf);
                let produced = seg.len() + kernel.len() - 1;
                for (i, b) in buf[..produced].iter().enumerate() {
                    let idx = at + i;
                    if idx >= start && idx < end {
                        out[idx - start] += b.re * scale;
                    }
                }
            }
            at += block;
        }
        out
    }
}
