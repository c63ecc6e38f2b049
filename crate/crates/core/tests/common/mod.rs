#![allow(dead_code)]

use brirsim_core::geometry::Orientation;
use brirsim_core::scene::*;
use brirsim_core::Vec3;

pub fn spec(room: RoomSpec, options: SimOptions, source: Vec3, receiver: Vec3) -> ValidatedSpec {
    validate(SimulationSpec {
        room,
        options,
        sources: vec![SourceSpec::omni(source)],
        receivers: vec![ReceiverSpec::omni(receiver)],
        output: OutputSpec::default(),
    })
    .unwrap()
}

pub fn options(duration: f64, ism: bool, diffuse: bool) -> SimOptions {
    SimOptions {
        ir_duration: duration,
        ism_enabled: ism,
        diffuse_enabled: diffuse,
        ..SimOptions::default()
    }
}

pub fn hrtf_receiver(position: Vec3, interpolation: InterpolationMode) -> ReceiverSpec {
    ReceiverSpec {
        position,
        orientation: Orientation::default(),
        kind: ReceiverKind::Hrtf {
            path: "synthetic.hrtf".into(),
            interpolation,
            normalize: false,
        },
    }
}

/// Band-limited reconstruction of `x` at fractional index `t`.
pub fn sinc_value(x: &[f64], t: f64) -> f64 {
    let lo = (t.floor() as isize - 64).max(0) as usize;
    let hi = ((t.ceil() as usize) + 64).min(x.len());
    (lo..hi)
        .map(|n| {
            let u = t - n as f64;
            let s = if u.abs() < 1e-12 { 1.0 } else { (std::f64::consts::PI * u).sin() / (std::f64::consts::PI * u) };
            x[n] * s
        })
        .sum()
}

/// Peak of the band-limited signal near sample `around`, searched on a
/// 1/100 sample grid.
pub fn interpolated_peak(x: &[f64], around: usize) -> (f64, f64) {
    let mut best = (around as f64, 0.0f64);
    for i in 0..=400 {
        let t = around as f64 - 2.0 + i as f64 / 100.0;
        let v = sinc_value(x, t);
        if v.abs() > best.1.abs() {
            best = (t, v);
        }
    }
    best
}

/// Deterministic HRTF set on a Fibonacci sphere with random-looking HRIRs.
pub fn synthetic_hrtf(count: usize, ir_length: usize, fs: u32) -> brirsim_core::hrtf::HrtfSet {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut positions = Vec::with_capacity(count);
    for i in 0..count {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
        let az = (golden * i as f64).to_degrees().rem_euclid(360.0);
        positions.push([az, z.asin().to_degrees(), 1.0]);
    }
    let mut state = 0x1234_5678_9abc_def0u64;
    let data = (0..count * 2 * ir_length)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    brirsim_core::hrtf::HrtfSet::new(fs, ir_length, positions, data, Default::default()).unwrap()
}
