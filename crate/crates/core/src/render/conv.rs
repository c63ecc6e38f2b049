//! Linear convolution back ends.

use alloc::vec;
use alloc::vec::Vec;

/// Computes a window of the full linear convolution `signal * kernel`.
///
/// Implementations must be deterministic: the same inputs always give the
/// same bits.
pub trait Convolver {
    /// Samples `start..start + len` of the full convolution (indices past
    /// the end of the full result are zero).
    fn convolve_window(&self, signal: &[f64], kernel: &[f64], start: usize, len: usize) -> Vec<f64>;
}

/// Direct-form convolution; O(len * kernel).
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectConvolver;

impl Convolver for DirectConvolver {
    fn convolve_window(&self, signal: &[f64], kernel: &[f64], start: usize, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        if signal.is_empty() || kernel.is_empty() {
            return out;
        }
        for (i, slot) in out.iter_mut().enumerate() {
            let n = start + i;
            // kernel index j pairs with signal index n - j
            let j_lo = n.saturating_sub(signal.len() - 1);
            let j_hi = n.min(kernel.len() - 1);
            if j_lo > j_hi {
                continue;
            }
            let mut acc = 0.0;
            for j in j_lo..=j_hi {
                acc += kernel[j] * signal[n - j];
            }
            *slot = acc;
        }
        out
    }
}

impl<C: Convolver + ?Sized> Convolver for &C {
    fn convolve_window(&self, signal: &[f64], kernel: &[f64], start: usize, len: usize) -> Vec<f64> {
        (**self).convolve_window(signal, kernel, start, len)
    }
}

/// Full linear convolution.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    DirectConvolver.convolve_window(a, b, 0, a.len() + b.len() - 1)
}
