//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on
//! any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use brirsim::dataset::{generate_dataset, DatasetSpec, GenerateOptions, ReceiverLayout, SourceLayout};
use brirsim::parallel::{pool, render_pair};
use brirsim::wave::{decode_wave, encode_wave, read_wave, SampleFormat};
use brirsim_core::analysis::estimate_rt60;
use brirsim_core::diffuse::trace_rays;
use brirsim_core::engine::prepare_hrtf;
use brirsim_core::geometry::Orientation;
use brirsim_core::hrtf::Direction;
use brirsim_core::ism::enumerate_images;
use brirsim_core::scene::*;
use brirsim_core::{assemble_brir, ImpulseResponse, Vec3};
use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn omni_spec(room: RoomSpec, opts: SimOptions, source: Vec3, receiver: Vec3) -> ValidatedSpec {
    validate(spec(room, opts, source, vec![ReceiverSpec::omni(receiver)])).unwrap()
}

fn peak_index(x: &[f64]) -> usize {
    (0..x.len()).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap()
}

fn direct_path() -> Outcome {
    let room = RoomSpec::uniform(Vec3::new(6.0, 4.0, 3.0), 0.5, 0.0, 6);
    let mut opts = options(0.02, 0);
    opts.diffuse_enabled = false;
    opts.ism_max_order = 0;
    let spec = omni_spec(room, opts, Vec3::new(3.5, 2.0, 1.5), Vec3::new(1.5, 2.0, 1.5));
    let ir = assemble_brir(&spec, 0, 0, None).unwrap();
    let x = &ir.channels[0];
    let peak = peak_index(x);
    // delay and spreading loss of a 2 m path at 20 degrees C
    let expected = (48_000.0 * 2.0 / 343.4f64).round() as usize;
    // the arrival's amplitude is the area of its band-limited impulse
    let area: f64 = x[peak - 40..peak + 40].iter().sum();
    let pass = peak.abs_diff(expected) <= 1 && (area - 0.5).abs() <= 0.005;
    outcome(pass, format!("peak sample {peak} (expected {expected}), amplitude {area:.5} (expected 0.5)"))
}

fn mirror(p: Vec3, dims: Vec3, wall: Wall) -> Vec3 {
    let axis = wall.axis();
    let plane = if wall.is_upper() { dims[axis] } else { 0.0 };
    p.with_axis(axis, 2.0 * plane - p[axis])
}

fn key(p: Vec3) -> [i64; 3] {
    p.to_array().map(|v| (v * 1e6).round() as i64)
}

fn image_counts() -> Outcome {
    let dims = ROOM_DIMS;
    let room = RoomSpec::uniform(dims, 0.3, 0.0, 6);
    let source = SourceSpec::omni(Vec3::new(1.3, 2.9, 1.1));
    let mut counts = Vec::new();
    let mut pass = true;
    for order in 0..=5u32 {
        // every reflection sequence of at most `order` walls
        let mut oracle: BTreeMap<[i64; 3], u32> = BTreeMap::new();
        oracle.insert(key(source.position), 0);
        let mut frontier = vec![(source.position, None::<Wall>)];
        for k in 1..=order {
            let mut next = Vec::new();
            for (p, last) in &frontier {
                for wall in Wall::ALL.into_iter().filter(|w| Some(*w) != *last) {
                    let q = mirror(*p, dims, wall);
                    oracle.entry(key(q)).or_insert(k);
                    next.push((q, Some(wall)));
                }
            }
            frontier = next;
        }
        let opts = SimOptions {
            ism_max_order: order,
            ..options(10.0, 0)
        };
        let images = enumerate_images(&room, &source, Vec3::new(4.0, 6.0, 1.7), &opts, room.speed_of_sound());
        let ours: BTreeSet<([i64; 3], u32)> = images.iter().map(|i| (key(i.position), i.order)).collect();
        let theirs: BTreeSet<([i64; 3], u32)> = oracle.into_iter().collect();
        pass &= ours.len() == images.len() && ours == theirs;
        counts.push(images.len());
    }
    pass &= counts[..3] == [1, 7, 25];
    outcome(pass, format!("image counts for orders 0..=5: {counts:?}"))
}

fn total_absorption() -> Outcome {
    let src = Vec3::new(3.0, 4.0, 1.5);
    let rcv = Vec3::new(1.5, 1.5, 1.75);
    let room = RoomSpec::uniform(ROOM_DIMS, 1.0, 0.5, 6);
    let full = assemble_brir(&omni_spec(room.clone(), options(0.2, 5000), src, rcv), 0, 0, None).unwrap();
    let mut direct_opts = options(0.2, 0);
    direct_opts.diffuse_enabled = false;
    direct_opts.ism_max_order = 0;
    let direct = assemble_brir(&omni_spec(room, direct_opts, src, rcv), 0, 0, None).unwrap();
    let diff = full.channels[0]
        .iter()
        .zip(&direct.channels[0])
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    outcome(diff <= 1e-9 && direct.peak() > 0.1, format!("max difference to direct-only {diff:.3e}"))
}

/// Uniform absorption giving `rt60` by Eyring's formula.
fn eyring_alpha(rt60: f64) -> f64 {
    let (x, y, z) = (5.1, 7.1, 3.0);
    let volume = x * y * z;
    let area = 2.0 * (x * y + x * z + y * z);
    1.0 - (-0.161 * volume / (area * rt60)).exp()
}

fn reference_rt60(target: f64, duration: f64) -> Outcome {
    let alpha = eyring_alpha(target);
    let mut opts = options(duration, 100_000);
    opts.seed = 1;
    let spec = omni_spec(RoomSpec::uniform(ROOM_DIMS, alpha, 0.5, 6), opts, ROOM_SOURCE, POSITION_A);
    let rendered = render_pair(&spec, 0, 0, None, &pool(0)).unwrap();
    match estimate_rt60(&rendered.ir) {
        Ok(rt) => {
            let err = rt / target - 1.0;
            outcome(err.abs() <= 0.25, format!("alpha {alpha:.4}: RT60 {rt:.3} s vs {target} s ({:+.1}%)", err * 100.0))
        }
        Err(e) => outcome(false, format!("alpha {alpha:.4}: {e}")),
    }
}

fn rt60_estimator() -> Outcome {
    let fs = 48_000;
    let mut worst = 0.0f64;
    for t in [0.2, 0.5, 1.0, 2.0] {
        let len = (2.0 * t * fs as f64) as usize;
        let mut ir = ImpulseResponse::zeros(fs, 1, len);
        for (n, v) in ir.channels[0].iter_mut().enumerate() {
            *v = (-6.91 * n as f64 / fs as f64 / t).exp();
        }
        let err = match estimate_rt60(&ir) {
            Ok(rt) => (rt / t - 1.0).abs(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    outcome(worst <= 0.02, format!("worst relative error {:.3}%", worst * 100.0))
}

fn hrtf_exactness() -> Outcome {
    let set = synthetic_hrtf(100, 64, 48_000, 9);
    let mut mismatches = 0;
    for (i, p) in set.positions().iter().enumerate() {
        let (left, right) = set.hrir(i);
        for interpolate in [false, true] {
            let pair = set.lookup(&Direction::new(p[0], p[1]), interpolate);
            if *pair.left != *left || *pair.right != *right {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 200 lookups differ from the stored HRIR"))
}

fn determinism() -> Outcome {
    let alpha = eyring_alpha(0.37);
    let mut opts = options(0.6, 100_000);
    opts.seed = 3;
    let receiver = ReceiverSpec {
        position: POSITION_A,
        orientation: Orientation::default(),
        kind: ReceiverKind::Hrtf {
            path: "synthetic".into(),
            interpolation: InterpolationMode::Interpolate,
            normalize: true,
        },
    };
    let spec = validate(spec(RoomSpec::uniform(ROOM_DIMS, alpha, 0.5, 6), opts, ROOM_SOURCE, vec![receiver.clone()])).unwrap();
    let set = prepare_hrtf(&synthetic_hrtf(200, 64, 44_100, 4), &receiver, 48_000).unwrap();
    let one = render_pair(&spec, 0, 0, Some(&set), &pool(1)).unwrap();
    let eight = render_pair(&spec, 0, 0, Some(&set), &pool(8)).unwrap();
    let same = one == eight;
    let bytes = encode_wave(&one.ir, SampleFormat::Float32).unwrap();
    let back = decode_wave(&bytes).unwrap();
    let exact = back
        .channels
        .iter()
        .flatten()
        .zip(one.ir.channels.iter().flatten())
        .all(|(a, b)| a.to_bits() == f64::from(*b as f32).to_bits())
        && encode_wave(&back, SampleFormat::Float32).unwrap() == bytes;
    outcome(
        same && exact && one.ir.num_channels() == 2,
        format!("1 vs 8 workers identical: {same}; float32 round trip exact: {exact}"),
    )
}

fn diffuse_consistency() -> Outcome {
    let totals = |rays| {
        let mut opts = options(0.2, rays);
        opts.ism_enabled = false;
        let spec = omni_spec(RoomSpec::uniform(ROOM_DIMS, 0.0, 1.0, 6), opts, Vec3::new(3.2, 5.0, 1.4), POSITION_A);
        let mut t = [0.0; 6];
        for c in trace_rays(&spec, 0, 0) {
            for (a, e) in t.iter_mut().zip(&c.energy) {
                *a += e;
            }
        }
        t
    };
    let a = totals(10_000);
    let b = totals(40_000);
    let worst = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x / y - 1.0).abs()));
    outcome(worst <= 0.02, format!("worst band disagreement {:.3}%", worst * 100.0))
}

fn dataset() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut hrtfs = Vec::new();
    for (k, count) in [64usize, 100, 150].into_iter().enumerate() {
        let name = format!("set{k}.hrtf");
        write_hrtf(dir.path(), &name, &synthetic_hrtf(count, 32, 48_000, k as u64));
        hrtfs.push(name);
    }
    let spec = DatasetSpec {
        room: RoomSpec::uniform(ROOM_DIMS, eyring_alpha(0.37), 0.5, 6),
        options: options(0.3, 2000),
        receivers: ReceiverLayout::Positions(vec![POSITION_A, POSITION_B]),
        receiver_orientation: Orientation::default(),
        hrtfs,
        interpolation: InterpolationMode::Nearest,
        normalize: false,
        // 72 degree azimuth and 60 degree elevation steps: two poles and two rings of five
        source_layout: SourceLayout::Sphere {
            radius: 1.0,
            azimuth_step: 72.0,
            elevation_step: 60.0,
        },
        source_directivity: Directivity::Omnidirectional,
        output_dir: "dataset".into(),
        seed: 17,
        sample_format: SampleFormat::Float32,
    };
    let s = 12;
    let report = generate_dataset(&spec, dir.path(), &GenerateOptions::default(), &|_, _| {}).unwrap();
    let entries = &report.manifest.entries;
    let loadable = entries
        .iter()
        .filter(|e| read_wave(dir.path().join("dataset").join(&e.file)).is_ok_and(|ir| ir.num_channels() == 2 && ir.len() == 14_400))
        .count();
    let files: BTreeSet<&str> = entries.iter().map(|e| e.file.as_str()).collect();
    let pass = entries.len() == 6 * s && loadable == entries.len() && files.len() == entries.len();
    outcome(pass, format!("{} entries (expected {}), {loadable} loadable", entries.len(), 6 * s))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("direct path delay and amplitude", direct_path),
        ("image counts against brute force", image_counts),
        ("total absorption leaves the direct sound", total_absorption),
        ("reference room RT60, first condition (0.37 s)", || reference_rt60(0.37, 0.6)),
        ("reference room RT60, second condition (1.88 s)", || reference_rt60(1.88, 1.6)),
        ("RT60 estimator on exponential decays", rt60_estimator),
        ("HRTF lookups exact at stored directions", hrtf_exactness),
        ("determinism across workers and WAVE round trip", determinism),
        ("diffuse estimator consistency", diffuse_consistency),
        ("dataset combinatorics", dataset),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{status} {name}: {} [{:.1} s]", o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
