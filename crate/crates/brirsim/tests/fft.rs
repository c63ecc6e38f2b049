use brirsim::fft::FftConvolver;
use brirsim_core::render::{Convolver, DirectConvolver};
use proptest::prelude::*;

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed | 1;
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

#[test]
fn matches_direct_convolution_on_long_signals() {
    let kernel = noise(2047, 3);
    let mut signal = vec![0.0; 30_000];
    for (i, v) in noise(300, 5).into_iter().enumerate() {
        signal[i * 97] = v;
    }
    for (start, len) in [(0, 30_000), (1023, 28_000), (2046, 4000), (31_000, 2000)] {
        let a = FftConvolver.convolve_window(&signal, &kernel, start, len);
        let b = DirectConvolver.convolve_window(&signal, &kernel, start, len);
        let scale = b.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * scale.max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn is_deterministic() {
    let kernel = noise(511, 9);
    let signal = noise(50_000, 11);
    let a = FftConvolver.convolve_window(&signal, &kernel, 255, 49_000);
    let b = FftConvolver.convolve_window(&signal, &kernel, 255, 49_000);
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn small_windows_agree(n in 1usize..400, k in 1usize..300, start in 0usize..800, len in 0usize..900, seed in 1u64..1000) {
        let signal = noise(n, seed);
        let kernel = noise(k, seed + 17);
        let a = FftConvolver.convolve_window(&signal, &kernel, start, len);
        let b = DirectConvolver.convolve_window(&signal, &kernel, start, len);
        prop_assert_eq!(a.len(), len);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
