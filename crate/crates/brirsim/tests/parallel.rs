mod common;

use brirsim::fft::FftConvolver;
use brirsim::parallel::*;
use brirsim_core::engine::Pipeline;
use brirsim_core::render::{BandFilterBank, FilterLengths};
use brirsim_core::scene::*;
use common::*;

#[test]
fn worker_count_does_not_change_bits() {
    let mut raw = spec(
        RoomSpec::uniform(ROOM_DIMS, 0.3, 0.5, 6),
        options(0.3, 7000),
        ROOM_SOURCE,
        vec![ReceiverSpec::omni(POSITION_A)],
    );
    raw.options.seed = 11;
    let spec = validate(raw).unwrap();
    let one = render_pair(&spec, 0, 0, None, &pool(1)).unwrap();
    let three = render_pair(&spec, 0, 0, None, &pool(3)).unwrap();
    let eight = render_pair(&spec, 0, 0, None, &pool(8)).unwrap();
    assert_eq!(one, three);
    assert_eq!(one, eight);
    assert!(one.diffuse > 0 && one.specular > 0);

    // and matches the sequential pipeline
    let lengths = FilterLengths::default();
    let bank = BandFilterBank::new(&spec.options.band_centers, 48_000.0, lengths.band_filter);
    let pipeline = Pipeline::new(&spec, 0, 0, &bank, lengths.fractional_delay, None).unwrap();
    let sequential = pipeline.finish(&pipeline.accumulate().unwrap(), &FftConvolver);
    assert_eq!(one.ir, sequential);
}

#[test]
fn different_seeds_differ() {
    let make = |seed| {
        let mut raw = spec(RoomSpec::uniform(ROOM_DIMS, 0.3, 0.5, 6), options(0.2, 3000), ROOM_SOURCE, vec![ReceiverSpec::omni(POSITION_A)]);
        raw.options.seed = seed;
        validate(raw).unwrap()
    };
    let p = pool(2);
    let a = render_pair(&make(1), 0, 0, None, &p).unwrap();
    let b = render_pair(&make(2), 0, 0, None, &p).unwrap();
    assert_ne!(a.ir, b.ir);
}
