//! FIR building blocks: windowed-sinc fractional delay and the band gain
//! filter bank.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

pub const DEFAULT_FRACTIONAL_DELAY_TAPS: usize = 33;
pub const DEFAULT_BAND_FILTER_TAPS: usize = 2047;

/// Hann-windowed sinc interpolator with a fixed odd tap count.
///
/// The kernel for a delay fraction `tau` is centered on tap
/// `(taps - 1) / 2 + tau` and its coefficients sum to one. The window spans
/// `taps / 2` samples on either side of the center, so a half-sample delay
/// gives a kernel that is exactly symmetric about the center.
#[derive(Debug, Clone)]
pub struct FractionalDelay {
    taps: usize,
    half_width: f64,
    // cos and sin of pi * k / half_width for k = n - center
    window_cos: Vec<f64>,
    window_sin: Vec<f64>,
}

impl FractionalDelay {
    pub fn new(taps: usize) -> Self {
        assert!(taps % 2 == 1, "fractional delay needs an odd tap count");
        let half_width = taps as f64 / 2.0;
        let center = (taps / 2) as f64;
        let (window_sin, window_cos) = (0..taps)
            .map(|n| (PI * (n as f64 - center) / half_width).sin_cos())
            .unzip();
        Self {
            taps,
            half_width,
            window_cos,
            window_sin,
        }
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// Index of the tap that carries a zero-fraction delay.
    pub fn center(&self) -> usize {
        self.taps / 2
    }

    /// Write the kernel for `tau` in [0, 1) into `out`.
    pub fn kernel_into(&self, tau: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.taps);
        let center = self.center() as isize;
        if tau == 0.0 {
            out.fill(0.0);
            out[self.center()] = 1.0;
            return;
        }
        let s_tau = (PI * tau).sin();
        let (sw, cw) = (PI * tau / self.half_width).sin_cos();
        let mut sum = 0.0;
        for (n, slot) in out.iter_mut().enumerate() {
            let k = n as isize - center;
            let x = k as f64 - tau;
            if x.abs() >= self.half_width {
                *slot = 0.0;
                continue;
            }
            // sin(pi (k - tau)) = -(-1)^k sin(pi tau)
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            let sinc = sign * s_tau / (PI * x);
            // cos(pi (k - tau) / W) by angle subtraction
            let cos_w = self.window_cos[n] * cw + self.window_sin[n] * sw;
            let w = 0.5 * (1.0 + cos_w);
            *slot = sinc * w;
            sum += *slot;
        }
        for v in out.iter_mut() {
            *v /= sum;
        }
    }

    pub fn kernel(&self, tau: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.taps];
        self.kernel_into(tau, &mut out);
        out
    }
}

/// Windowed-sinc fractional delay kernel for `tau` in [0, 1).
pub fn fractional_delay_kernel(tau: f64, taps: usize) -> Vec<f64> {
    FractionalDelay::new(taps).kernel(tau)
}

/// Linear-phase band gain filters designed by frequency sampling.
///
/// The target magnitude for gains `g` interpolates `g` linearly over
/// log-frequency between band centers and holds the end values below the
/// first and above the last center. The design is linear in `g`, so the
/// bank stores one basis filter per band and a gain vector maps to
/// `sum_b g_b * basis_b`.
#[derive(Debug, Clone)]
pub struct BandFilterBank {
    band_centers: Vec<f64>,
    fs: f64,
    taps: usize,
    basis: Vec<Vec<f64>>,
}

impl BandFilterBank {
    pub fn new(band_centers: &[f64], fs: f64, taps: usize) -> Self {
        assert!(taps % 2 == 1, "band filter needs an odd tap count");
        assert!(!band_centers.is_empty());
        let half = (taps - 1) / 2;
        // cos(2 pi j / N) for every residue j
        let table: Vec<f64> = (0..taps).map(|j| (2.0 * PI * j as f64 / taps as f64).cos()).collect();
        let basis = (0..band_centers.len())
            .map(|b| {
                let samples: Vec<f64> = (0..=half)
                    .map(|k| band_weight(band_centers, b, k as f64 * fs / taps as f64))
                    .collect();
                (0..taps)
                    .map(|n| {
                        let shift = (n as isize - half as isize).rem_euclid(taps as isize) as usize;
                        let mut acc = samples[0];
                        for (k, &a) in samples.iter().enumerate().skip(1) {
                            if a != 0.0 {
                                acc += 2.0 * a * table[(k * shift) % taps];
                            }
                        }
                        acc / taps as f64
                    })
                    .collect()
            })
            .collect();
        Self {
            band_centers: band_centers.to_vec(),
            fs,
            taps,
            basis,
        }
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// Group delay in samples.
    pub fn delay(&self) -> usize {
        (self.taps - 1) / 2
    }

    pub fn bands(&self) -> usize {
        self.band_centers.len()
    }

    pub fn band_centers(&self) -> &[f64] {
        &self.band_centers
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn basis(&self, band: usize) -> &[f64] {
        &self.basis[band]
    }

    /// Filter realizing the gain vector `gains`.
    pub fn design(&self, gains: &[f64]) -> Vec<f64> {
        assert_eq!(gains.len(), self.bands());
        let mut h = vec![0.0; self.taps];
        for (g, basis) in gains.iter().zip(&self.basis) {
            if *g == 0.0 {
                continue;
            }
            for (out, b) in h.iter_mut().zip(basis) {
                *out += g * b;
            }
        }
        h
    }

    /// Target magnitude at `f` for `gains`.
    pub fn target(&self, gains: &[f64], f: f64) -> f64 {
        (0..self.bands()).map(|b| gains[b] * band_weight(&self.band_centers, b, f)).sum()
    }
}

/// Weight of band `b` in the log-frequency interpolation at `f`.
fn band_weight(centers: &[f64], b: usize, f: f64) -> f64 {
    let last = centers.len() - 1;
    if f <= centers[0] {
        return if b == 0 { 1.0 } else { 0.0 };
    }
    if f >= centers[last] {
        return if b == last { 1.0 } else { 0.0 };
    }
    let i = centers.partition_point(|&c| c <= f) - 1;
    let t = (f.ln() - centers[i].ln()) / (centers[i + 1].ln() - centers[i].ln());
    if b == i {
        1.0 - t
    } else if b == i + 1 {
        t
    } else {
        0.0
    }
}

/// Linear-phase FIR whose magnitude follows `gains` across `band_centers`.
pub fn band_gain_filter(gains: &[f64], band_centers: &[f64], fs: f64, taps: usize) -> Vec<f64> {
    BandFilterBank::new(band_centers, fs, taps).design(gains)
}

/// |H(f)| of an FIR by direct evaluation of its DTFT.
pub fn magnitude_at(h: &[f64], f: f64, fs: f64) -> f64 {
    let w = 2.0 * PI * f / fs;
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &c) in h.iter().enumerate() {
        let (s, co) = (w * n as f64).sin_cos();
        re += c * co;
        im -= c * s;
    }
    (re * re + im * im).sqrt()
}
