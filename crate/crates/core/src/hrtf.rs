//! Head-related impulse response sets and directional lookup.
//!
//! Positions follow the SOFA spherical convention: azimuth in degrees
//! counterclockwise from the front, elevation in degrees from the horizontal
//! plane, radius in meters. The radius is kept for reference only; lookups
//! use the direction.

use alloc::borrow::Cow;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use thiserror::Error;

use crate::geometry::{angle_between, Vec3};
use crate::scene::{MAX_SAMPLE_RATE, MIN_SAMPLE_RATE};

/// Largest numerator or denominator accepted for a resampling ratio.
pub const MAX_RATIO_TERM: u64 = 1000;
/// Angles below this (radians) count as an exact hit in [`HrtfSet::interpolate`].
pub const EXACT_ANGLE: f64 = 1e-6;
/// Peak level after [`HrtfSet::normalize`].
pub const NORMALIZED_PEAK: f64 = 0.99;

const DUPLICATE_ANGLE_DEG: f64 = 1e-6;
// dot products closer than this may still order differently by angle
const DOT_SLACK: f64 = 1e-9;
const INTERPOLATION_CANDIDATES: usize = 8;
const RESAMPLE_HALF_TAPS: f64 = 32.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HrtfError {
    #[error("HRTF set must contain at least one direction")]
    NoDirections,
    #[error("HRIR length must be at least one sample")]
    EmptyResponse,
    #[error("data block holds {got} samples, expected M*2*N = {expected}")]
    DataLength { expected: usize, got: usize },
    #[error("position {index} has elevation {elevation} outside [-90, 90]")]
    Elevation { index: usize, elevation: f64 },
    #[error("positions {first} and {second} coincide")]
    DuplicatePosition { first: usize, second: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("sampling rate {0} Hz outside [8000, 192000]")]
    SampleRate(u32),
    #[error("resampling ratio {num}/{den} exceeds the {MAX_RATIO_TERM} term cap")]
    Ratio { num: u64, den: u64 },
    #[error("cannot normalize an all-zero HRTF set")]
    AllZero,
}

/// A direction in the receiver frame, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    azimuth: f64,
    elevation: f64,
}

impl Direction {
    /// Azimuth is wrapped to [0, 360); elevation is clamped to [-90, 90].
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        let mut az = azimuth % 360.0;
        if az < 0.0 {
            az += 360.0;
        }
        if az >= 360.0 {
            az = 0.0;
        }
        Self {
            azimuth: az,
            elevation: elevation.clamp(-90.0, 90.0),
        }
    }

    pub fn from_vector(v: Vec3) -> Self {
        let (az, el) = v.to_spherical_deg();
        Self::new(az, el)
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn unit(&self) -> Vec3 {
        Vec3::from_spherical_deg(self.azimuth, self.elevation)
    }
}

/// Immutable set of measured left/right HRIRs.
#[derive(Debug, Clone, PartialEq)]
pub struct HrtfSet {
    fs: u32,
    ir_length: usize,
    positions: Vec<[f64; 3]>,
    // direction-major, then left/right, then samples
    data: Vec<f64>,
    metadata: BTreeMap<String, String>,
    units: Vec<Vec3>,
}

/// Result of [`HrtfSet::nearest`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestMatch {
    pub index: usize,
    /// Great-circle distance in radians.
    pub angle: f64,
}

/// Result of [`HrtfSet::interpolate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolated {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Measurements used and their weights; the weights sum to one.
    pub weights: Vec<(usize, f64)>,
    /// Set when the set is too small to interpolate and the nearest
    /// measurement was returned instead.
    pub fallback: bool,
}

/// A borrowed or interpolated HRIR pair.
#[derive(Debug, Clone)]
pub struct HrirPair<'a> {
    pub left: Cow<'a, [f64]>,
    pub right: Cow<'a, [f64]>,
}

impl HrtfSet {
    pub fn new(
        fs: u32,
        ir_length: usize,
        positions: Vec<[f64; 3]>,
        data: Vec<f64>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self, HrtfError> {
        if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&fs) {
            return Err(HrtfError::SampleRate(fs));
        }
        if positions.is_empty() {
            return Err(HrtfError::NoDirections);
        }
        if ir_length == 0 {
            return Err(HrtfError::EmptyResponse);
        }
        let expected = positions.len() * 2 * ir_length;
        if data.len() != expected {
            return Err(HrtfError::DataLength {
                expected,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(HrtfError::NonFinite("HRIR data"));
        }
        for (index, p) in positions.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(HrtfError::NonFinite("positions"));
            }
            if !(-90.0..=90.0).contains(&p[1]) {
                return Err(HrtfError::Elevation { index, elevation: p[1] });
            }
        }
        let units: Vec<Vec3> = positions.iter().map(|p| Vec3::from_spherical_deg(p[0], p[1])).collect();
        let min_angle = DUPLICATE_ANGLE_DEG.to_radians();
        for i in 0..units.len() {
            for j in i + 1..units.len() {
                if angle_between(units[i], units[j]) < min_angle {
                    return Err(HrtfError::DuplicatePosition { first: i, second: j });
                }
            }
        }
        Ok(Self {
            fs,
            ir_length,
            positions,
            data,
            metadata,
            units,
        })
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    /// Number of measured directions (M).
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// HRIR length in samples (N).
    pub fn ir_length(&self) -> usize {
        self.ir_length
    }

    /// (azimuth, elevation, radius) per direction.
    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn with_metadata(mut self, key: &str, value: &str) -> Self {
        self.metadata.insert(String::from(key), String::from(value));
        self
    }

    /// Left and right HRIR of measurement `index`.
    pub fn hrir(&self, index: usize) -> (&[f64], &[f64]) {
        let n = self.ir_length;
        let base = index * 2 * n;
        (&self.data[base..base + n], &self.data[base + n..base + 2 * n])
    }

    /// Measurements whose dot product with `q` is within [`DOT_SLACK`] of
    /// the `k`-th largest, in index order. Every measurement at least as
    /// close as the `k`-th nearest is included.
    fn candidates(&self, q: Vec3, k: usize) -> Vec<usize> {
        let dots: Vec<f64> = self.units.iter().map(|u| u.dot(q)).collect();
        let k = k.clamp(1, dots.len());
        let kth = if k == 1 {
            dots.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            let mut order = dots.clone();
            order.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
            order[k - 1]
        };
        let threshold = kth - DOT_SLACK;
        (0..dots.len()).filter(|&i| dots[i] >= threshold).collect()
    }

    /// (angle, index) of `indices`, nearest first, ties by index.
    fn ranked(&self, q: Vec3, indices: impl Iterator<Item = usize>) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = indices.map(|i| (angle_between(q, self.units[i]), i)).collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    /// Closest measurement by great-circle distance; ties go to the lower
    /// index.
    pub fn nearest(&self, dir: &Direction) -> NearestMatch {
        let mut best = NearestMatch {
            index: 0,
            angle: f64::INFINITY,
        };
        let q = dir.unit();
        for index in self.candidates(q, 1) {
            let angle = angle_between(q, self.units[index]);
            if angle < best.angle - 1e-12 {
                best = NearestMatch { index, angle };
            }
        }
        best
    }

    /// Inverse-angular-distance blend of the three nearest measurements
    /// that do not share a great circle.
    pub fn interpolate(&self, dir: &Direction) -> Interpolated {
        if self.len() < 3 {
            let m = self.nearest(dir);
            return self.single(m.index, true);
        }
        let q = dir.unit();
        let mut ranked = self.ranked(q, self.candidates(q, INTERPOLATION_CANDIDATES).into_iter());
        if ranked[0].0 < EXACT_ANGLE {
            return self.single(ranked[0].1, false);
        }
        let (first, second) = (ranked[0], ranked[1]);
        let plane = self.units[first.1].cross(self.units[second.1]);
        let off_plane = |r: &[(f64, usize)]| r[2..].iter().copied().find(|&(_, i)| plane.dot(self.units[i]).abs() > 1e-9);
        let mut third = off_plane(&ranked);
        if third.is_none() && ranked.len() < self.len() {
            ranked = self.ranked(q, 0..self.len());
            third = off_plane(&ranked);
        }
        let third = third.unwrap_or(ranked[2]);

        let picks = [first, second, third];
        let total: f64 = picks.iter().map(|(a, _)| 1.0 / a).sum();
        let weights: Vec<(usize, f64)> = picks.iter().map(|&(a, i)| (i, (1.0 / a) / total)).collect();

        let n = self.ir_length;
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for &(i, w) in &weights {
            let (l, r) = self.hrir(i);
            for k in 0..n {
                left[k] += w * l[k];
                right[k] += w * r[k];
            }
        }
        Interpolated {
            left,
            right,
            weights,
            fallback: false,
        }
    }

    fn single(&self, index: usize, fallback: bool) -> Interpolated {
        let (l, r) = self.hrir(index);
        Interpolated {
            left: l.to_vec(),
            right: r.to_vec(),
            weights: vec![(index, 1.0)],
            fallback,
        }
    }

    /// HRIR pair for `dir` using nearest-neighbour or interpolated lookup.
    pub fn lookup(&self, dir: &Direction, interpolate: bool) -> HrirPair<'_> {
        if interpolate {
            let i = self.interpolate(dir);
            HrirPair {
                left: Cow::Owned(i.left),
                right: Cow::Owned(i.right),
            }
        } else {
            let (l, r) = self.hrir(self.nearest(dir).index);
            HrirPair {
                left: Cow::Borrowed(l),
                right: Cow::Borrowed(r),
            }
        }
    }

    /// Scale all samples by one factor so the global peak is 0.99.
    pub fn normalize(&self) -> Result<HrtfSet, HrtfError> {
        let peak = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return Err(HrtfError::AllZero);
        }
        let scale = NORMALIZED_PEAK / peak;
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= scale;
        }
        Ok(out)
    }

    /// Polyphase windowed-sinc resampling of every HRIR to `target_fs`.
    pub fn resample(&self, target_fs: u32) -> Result<HrtfSet, HrtfError> {
        if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&target_fs) {
            return Err(HrtfError::SampleRate(target_fs));
        }
        if target_fs == self.fs {
            return Ok(self.clone());
        }
        let resampler = Resampler::new(self.fs, target_fs)?;
        let n_out = resampler.output_len(self.ir_length);
        let mut data = Vec::with_capacity(self.len() * 2 * n_out);
        for chunk in self.data.chunks(self.ir_length) {
            data.extend(resampler.process(chunk, n_out));
        }
        let mut out = HrtfSet {
            fs: target_fs,
            ir_length: n_out,
            data,
            ..self.clone()
        };
        out.metadata
            .insert(String::from("resampled_from"), alloc::format!("{}", self.fs));
        Ok(out)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Rational-ratio polyphase resampler.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: u64,
    down: u64,
    reach: isize,
    // kernels[phase][j] multiplies x[base - reach + 1 + j]
    kernels: Vec<Vec<f64>>,
}

impl Resampler {
    pub fn new(from_fs: u32, to_fs: u32) -> Result<Self, HrtfError> {
        let g = gcd(u64::from(from_fs), u64::from(to_fs));
        let (up, down) = (u64::from(to_fs) / g, u64::from(from_fs) / g);
        if up > MAX_RATIO_TERM || down > MAX_RATIO_TERM {
            return Err(HrtfError::Ratio { num: up, den: down });
        }
        let cutoff = (up as f64 / down as f64).min(1.0);
        let half_width = RESAMPLE_HALF_TAPS / cutoff;
        let reach = half_width.ceil() as isize;
        let kernels = (0..up)
            .map(|phase| {
                let frac = phase as f64 / up as f64;
                let mut k: Vec<f64> = (0..2 * reach)
                    .map(|j| {
                        let offset = j as isize - reach + 1;
                        let x = frac - offset as f64;
                        if x.abs() >= half_width {
                            return 0.0;
                        }
                        let arg = PI * cutoff * x;
                        let sinc = if arg == 0.0 { 1.0 } else { arg.sin() / arg };
                        let w = (PI * x / (2.0 * half_width)).cos().powi(2);
                        cutoff * sinc * w
                    })
                    .collect();
                let s: f64 = k.iter().sum();
                for v in &mut k {
                    *v /= s;
                }
                k
            })
            .collect();
        Ok(Self {
            up,
            down,
            reach,
            kernels,
        })
    }

    /// ceil(n * to / from)
    pub fn output_len(&self, n: usize) -> usize {
        ((n as u64 * self.up).div_ceil(self.down)) as usize
    }

    pub fn process(&self, input: &[f64], n_out: usize) -> Vec<f64> {
        (0..n_out)
            .map(|m| {
                let pos = m as u64 * self.down;
                let base = (pos / self.up) as isize;
                let kernel = &self.kernels[(pos % self.up) as usize];
                let start = base - self.reach + 1;
                kernel
                    .iter()
                    .enumerate()
                    .filter_map(|(j, &c)| {
                        let n = start + j as isize;
                        (n >= 0 && (n as usize) < input.len()).then(|| c * input[n as usize])
                    })
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Horizontal ring every `step` degrees; sample k of every HRIR holds the
    /// azimuth (left) and minus the azimuth (right).
    fn ring(step: f64, extra: &[[f64; 3]]) -> HrtfSet {
        let mut positions: Vec<[f64; 3]> = (0..(360.0 / step) as usize).map(|i| [i as f64 * step, 0.0, 1.2]).collect();
        positions.extend_from_slice(extra);
        let n = 4;
        let data = positions
            .iter()
            .flat_map(|p| {
                let mut v = vec![p[0]; n];
                v.extend(vec![-p[0]; n]);
                v
            })
            .collect();
        HrtfSet::new(48_000, n, positions, data, BTreeMap::new()).unwrap()
    }

    #[test]
    fn rejects_bad_sets() {
        assert_eq!(
            HrtfSet::new(48_000, 8, vec![], vec![], BTreeMap::new()),
            Err(HrtfError::NoDirections)
        );
        assert!(matches!(
            HrtfSet::new(48_000, 8, vec![[0.0, 0.0, 1.0]], vec![0.0; 15], BTreeMap::new()),
            Err(HrtfError::DataLength { expected: 16, got: 15 })
        ));
        assert!(matches!(
            HrtfSet::new(48_000, 1, vec![[0.0, 95.0, 1.0]], vec![0.0; 2], BTreeMap::new()),
            Err(HrtfError::Elevation { .. })
        ));
        assert!(matches!(
            HrtfSet::new(48_000, 1, vec![[10.0, 0.0, 1.0], [370.0, 0.0, 1.5]], vec![0.0; 4], BTreeMap::new()),
            Err(HrtfError::DuplicatePosition { first: 0, second: 1 })
        ));
    }

    #[test]
    fn nearest_exact_and_offset() {
        let set = ring(10.0, &[]);
        let m = set.nearest(&Direction::new(40.0, 0.0));
        assert_eq!(m.index, 4);
        assert!(m.angle < 1e-12);
        assert_eq!(set.nearest(&Direction::new(41.0, 0.0)).index, 4);
        assert_eq!(set.nearest(&Direction::new(-1.0, 0.5)).index, 0);
    }

    #[test]
    fn nearest_tie_goes_to_lower_index() {
        let set = ring(10.0, &[]);
        let q = Direction::new(5.0, 0.0);
        let m = set.nearest(&q);
        assert_eq!(m.index, 0);
        // exhaustive check that index 0 and 1 are the equidistant minimum
        let angles: Vec<f64> = set
            .positions()
            .iter()
            .map(|p| angle_between(q.unit(), Vec3::from_spherical_deg(p[0], p[1])))
            .collect();
        let min = angles.iter().cloned().fold(f64::INFINITY, f64::min);
        let ties: Vec<usize> = (0..angles.len()).filter(|&i| angles[i] - min < 1e-12).collect();
        assert_eq!(ties, vec![0, 1]);
    }

    #[test]
    fn interpolate_exact_at_grid_point() {
        let set = ring(10.0, &[[180.0, 80.0, 1.0]]);
        for i in 0..set.len() {
            let p = set.positions()[i];
            let r = set.interpolate(&Direction::new(p[0], p[1]));
            let (l, rr) = set.hrir(i);
            assert_eq!(r.left, l);
            assert_eq!(r.right, rr);
            assert!(!r.fallback);
        }
    }

    #[test]
    fn interpolate_between_ring_points() {
        let far = [180.0, 80.0, 1.0];
        let set = ring(10.0, &[far]);
        let r = set.interpolate(&Direction::new(5.0, 0.0));
        let total: f64 = r.weights.iter().map(|w| w.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let far_index = set.len() - 1;
        let w_far = r.weights.iter().find(|w| w.0 == far_index).expect("far point used").1;
        // analytic weights: 1/5, 1/5 and 1/theta_far
        let theta_far = angle_between(Vec3::from_spherical_deg(5.0, 0.0), Vec3::from_spherical_deg(180.0, 80.0));
        let inv = [1.0 / 5f64.to_radians(), 1.0 / 5f64.to_radians(), 1.0 / theta_far];
        let expect_far = inv[2] / inv.iter().sum::<f64>();
        assert!((w_far - expect_far).abs() < 1e-9);
        let expected = (1.0 - expect_far) * 5.0 + expect_far * 180.0;
        assert!((r.left[0] - expected).abs() < 1e-9);
        assert!((r.left[0] - 5.0).abs() <= w_far * (180.0 - 5.0) + 1e-9);
    }

    #[test]
    fn interpolate_falls_back_for_small_sets() {
        let set = HrtfSet::new(48_000, 1, vec![[0.0, 0.0, 1.0], [90.0, 0.0, 1.0]], vec![1.0, 2.0, 3.0, 4.0], BTreeMap::new()).unwrap();
        let r = set.interpolate(&Direction::new(80.0, 0.0));
        assert!(r.fallback);
        assert_eq!(r.left, vec![3.0]);
    }

    #[test]
    fn normalize_scales_globally() {
        let set = HrtfSet::new(48_000, 2, vec![[0.0, 0.0, 1.0]], vec![2.0, -1.0, 0.5, 0.25], BTreeMap::new()).unwrap();
        let n = set.normalize().unwrap();
        assert_eq!(n.data(), &[0.99, -0.495, 0.2475, 0.12375]);
        let again = n.normalize().unwrap();
        for (a, b) in again.data().iter().zip(n.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = HrtfSet::new(48_000, 1, vec![[0.0, 0.0, 1.0]], vec![0.0, 0.0], BTreeMap::new()).unwrap();
        assert_eq!(zero.normalize(), Err(HrtfError::AllZero));
    }

    #[test]
    fn resample_identity_and_lengths() {
        let set = ring(30.0, &[]);
        assert_eq!(set.resample(48_000).unwrap(), set);
        let down = set.resample(44_100).unwrap();
        assert_eq!(down.ir_length(), (4usize * 44_100).div_ceil(48_000));
        assert_eq!(down.fs(), 44_100);
        assert!(matches!(set.resample(47_999), Err(HrtfError::Ratio { .. })));
    }

    #[test]
    fn direction_wraps_azimuth() {
        let d = Direction::new(-30.0, 10.0);
        assert!((d.azimuth() - 330.0).abs() < 1e-12);
        assert_eq!(Direction::new(720.0, 0.0).azimuth(), 0.0);
    }
}
