//! Reverberation time estimation and prediction.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::render::ImpulseResponse;
use crate::scene::{RoomSpec, Wall};

/// Dynamic range the energy decay curve needs for a T20 fit.
pub const MIN_DYNAMIC_RANGE_DB: f64 = 30.0;

const FIT_START_DB: f64 = -5.0;
const FIT_END_DB: f64 = -25.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Rt60Error {
    #[error("impulse response is empty or silent")]
    Silent,
    #[error("insufficient dynamic range: {range_db:.1} dB (need {MIN_DYNAMIC_RANGE_DB} dB)")]
    InsufficientDynamicRange { range_db: f64 },
    #[error("energy decay does not fall over the fit range")]
    NoDecay,
    #[error("mean absorption {0} outside (0, 1)")]
    Absorption(f64),
    #[error("band {band} out of range ({bands} bands)")]
    Band { band: usize, bands: usize },
}

/// Schroeder energy decay curve in dB relative to its start, averaged over
/// channels. Samples after the last nonzero one are negative infinity.
pub fn energy_decay_curve(ir: &ImpulseResponse) -> Vec<f64> {
    let len = ir.len();
    let mut edc = vec![0.0; len];
    for ch in &ir.channels {
        let mut acc = 0.0;
        for i in (0..len).rev() {
            acc += ch[i] * ch[i];
            edc[i] += acc;
        }
    }
    let total = edc.first().copied().unwrap_or(0.0);
    if total <= 0.0 {
        return vec![f64::NEG_INFINITY; len];
    }
    edc.iter()
        .map(|&e| if e > 0.0 { 10.0 * (e / total).log10() } else { f64::NEG_INFINITY })
        .collect()
}

/// RT60 from a -5 to -25 dB least-squares fit of the Schroeder curve.
pub fn estimate_rt60(ir: &ImpulseResponse) -> Result<f64, Rt60Error> {
    let edc = energy_decay_curve(ir);
    if edc.first().map_or(true, |v| !v.is_finite()) {
        return Err(Rt60Error::Silent);
    }
    let floor = edc.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::min);
    let range_db = -floor;
    if range_db < MIN_DYNAMIC_RANGE_DB {
        return Err(Rt60Error::InsufficientDynamicRange { range_db });
    }
    let start = edc.iter().position(|&v| v <= FIT_START_DB).ok_or(Rt60Error::NoDecay)?;
    let end = edc.iter().position(|&v| v <= FIT_END_DB).ok_or(Rt60Error::NoDecay)?;
    if end <= start + 1 {
        return Err(Rt60Error::NoDecay);
    }

    let fs = f64::from(ir.fs);
    let n = (end - start + 1) as f64;
    let (mut st, mut sy) = (0.0, 0.0);
    for (i, &y) in edc.iter().enumerate().take(end + 1).skip(start) {
        st += i as f64 / fs;
        sy += y;
    }
    let (mt, my) = (st / n, sy / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in edc.iter().enumerate().take(end + 1).skip(start) {
        let dt = i as f64 / fs - mt;
        sxy += dt * (y - my);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Rt60Error::NoDecay);
    }
    Ok(60.0 / -slope)
}

/// Area-weighted mean absorption of `band`.
pub fn mean_absorption(room: &RoomSpec, band: usize) -> f64 {
    let total = room.total_area();
    Wall::ALL
        .iter()
        .map(|&w| room.wall_area(w) * room.surface(w).absorption[band])
        .sum::<f64>()
        / total
}

/// Eyring reverberation time of `band`.
pub fn predicted_rt60_eyring(room: &RoomSpec, band: usize) -> Result<f64, Rt60Error> {
    let bands = room.surfaces[0].absorption.len();
    if band >= bands {
        return Err(Rt60Error::Band { band, bands });
    }
    let alpha = mean_absorption(room, band);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Rt60Error::Absorption(alpha));
    }
    Ok(0.161 * room.volume() / (-room.total_area() * (1.0 - alpha).ln()))
}

/// Uniform absorption giving `rt60` seconds by Eyring's formula.
pub fn eyring_absorption(volume: f64, area: f64, rt60: f64) -> f64 {
    1.0 - (-0.161 * volume / (area * rt60)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn decay(t60: f64, fs: u32, seconds: f64) -> ImpulseResponse {
        let n = (seconds * f64::from(fs)) as usize;
        let h = (0..n)
            .map(|i| (-6.91 * i as f64 / f64::from(fs) / t60).exp())
            .collect();
        ImpulseResponse { fs, channels: vec![h] }
    }

    #[test]
    fn recovers_exponential_decay() {
        for &t in &[0.2, 0.5, 1.0, 2.0] {
            let est = estimate_rt60(&decay(t, 48_000, 1.5 * t)).unwrap();
            assert!((est / t - 1.0).abs() < 0.02, "{t}: {est}");
        }
    }

    #[test]
    fn impulse_has_no_range() {
        let mut ir = ImpulseResponse::zeros(48_000, 1, 1000);
        ir.channels[0][10] = 1.0;
        assert!(matches!(estimate_rt60(&ir), Err(Rt60Error::InsufficientDynamicRange { .. })));
        let msg = alloc::format!("{}", estimate_rt60(&ir).unwrap_err());
        assert!(msg.contains("insufficient dynamic range"));
    }

    #[test]
    fn silence_is_rejected() {
        let ir = ImpulseResponse::zeros(48_000, 2, 100);
        assert_eq!(estimate_rt60(&ir), Err(Rt60Error::Silent));
    }

    #[test]
    fn eyring_inversion_for_first_target() {
        let alpha = eyring_absorption(108.63, 145.62, 0.37);
        assert!((alpha - 0.277).abs() < 1e-3, "{alpha}");
        let room = RoomSpec::uniform(Vec3::new(5.1, 7.1, 3.0), alpha, 0.0, 6);
        assert!((room.volume() - 108.63).abs() < 1e-9);
        assert!((room.total_area() - 145.62).abs() < 1e-9);
        let t = predicted_rt60_eyring(&room, 3).unwrap();
        assert!((t - 0.37).abs() < 1e-9);
    }

    #[test]
    fn eyring_limits() {
        let dims = Vec3::new(5.1, 7.1, 3.0);
        let nearly_dead = RoomSpec::uniform(dims, 1.0 - 1e-12, 0.0, 6);
        assert!(predicted_rt60_eyring(&nearly_dead, 0).unwrap() < 0.01);
        assert!(predicted_rt60_eyring(&RoomSpec::uniform(dims, 1.0, 0.0, 6), 0).is_err());
        assert!(predicted_rt60_eyring(&RoomSpec::uniform(dims, 0.0, 0.0, 6), 0).is_err());
        let a = predicted_rt60_eyring(&RoomSpec::uniform(dims, 0.02, 0.0, 6), 0).unwrap();
        let b = predicted_rt60_eyring(&RoomSpec::uniform(dims, 0.04, 0.0, 6), 0).unwrap();
        assert!((a / b - 2.0).abs() < 0.2);
    }
}
