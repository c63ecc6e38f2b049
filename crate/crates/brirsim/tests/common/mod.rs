#![allow(dead_code)]

use std::path::Path;

use brirsim::hrtf_io::save_hrtf;
use brirsim_core::hrtf::HrtfSet;
use brirsim_core::scene::*;
use brirsim_core::Vec3;

pub const ROOM_DIMS: Vec3 = Vec3::new(5.1, 7.1, 3.0);
pub const ROOM_SOURCE: Vec3 = Vec3::new(2.5, 4.5, 1.5);
pub const POSITION_A: Vec3 = Vec3::new(1.5, 1.5, 1.75);
pub const POSITION_B: Vec3 = Vec3::new(3.5, 5.5, 1.75);

pub fn options(duration: f64, rays: u64) -> SimOptions {
    SimOptions {
        ir_duration: duration,
        n_rays: rays,
        ..SimOptions::default()
    }
}

pub fn spec(room: RoomSpec, options: SimOptions, source: Vec3, receivers: Vec<ReceiverSpec>) -> SimulationSpec {
    SimulationSpec {
        room,
        options,
        sources: vec![SourceSpec::omni(source)],
        receivers,
        output: OutputSpec::default(),
    }
}

/// HRTF set on a Fibonacci sphere. Samples are representable in `f32`, so
/// a container round trip is exact; `variant` changes the data.
pub fn synthetic_hrtf(count: usize, ir_length: usize, fs: u32, variant: u64) -> HrtfSet {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let positions = (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            [(golden * i as f64).to_degrees().rem_euclid(360.0), z.asin().to_degrees(), 1.2]
        })
        .collect();
    let mut state = 0x1234_5678_9abc_def0u64 ^ variant.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let data = (0..count * 2 * ir_length)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let v = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            f64::from(v as f32)
        })
        .collect();
    HrtfSet::new(fs, ir_length, positions, data, Default::default()).unwrap()
}

pub fn write_hrtf(dir: &Path, name: &str, set: &HrtfSet) {
    save_hrtf(set, dir.join(name)).unwrap();
}
