//! Receiver grids and source spheres for dataset generation.

use alloc::vec::Vec;

use num_traits::Float;

use crate::geometry::{Rotation, Vec3};

/// Azimuth/elevation pairs in degrees covering the sphere.
///
/// Elevations run from -90 to 90 in `el_step` steps. Each ring gets
/// azimuths `0, az_step, ...` below 360; the poles get a single direction.
pub fn sphere_directions(az_step: f64, el_step: f64) -> Vec<(f64, f64)> {
    assert!(az_step > 0.0 && el_step > 0.0);
    let mut out = Vec::new();
    let rings = (180.0 / el_step + 1e-9).floor() as i64;
    for r in 0..=rings {
        let el = -90.0 + r as f64 * el_step;
        if el > 90.0 + 1e-9 {
            break;
        }
        if (el.abs() - 90.0).abs() < 1e-9 {
            out.push((0.0, el.signum() * 90.0));
            continue;
        }
        let count = (360.0 / az_step - 1e-9).ceil() as i64;
        for a in 0..count {
            out.push((a as f64 * az_step, el));
        }
    }
    out
}

/// Points `start + step * (i, j, k)` for every index below `count`, x
/// varying fastest.
pub fn grid_positions(start: Vec3, step: Vec3, count: [usize; 3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(count[0] * count[1] * count[2]);
    for k in 0..count[2] {
        for j in 0..count[1] {
            for i in 0..count[0] {
                out.push(Vec3::new(
                    start.x + step.x * i as f64,
                    start.y + step.y * j as f64,
                    start.z + step.z * k as f64,
                ));
            }
        }
    }
    out
}

/// Position at `radius` from the receiver in the receiver-local direction
/// (`azimuth`, `elevation`) in degrees.
pub fn source_on_sphere(center: Vec3, rotation: &Rotation, radius: f64, azimuth: f64, elevation: f64) -> Vec3 {
    center + rotation.apply(Vec3::from_spherical_deg(azimuth, elevation)) * radius
}

/// Receiver-local (azimuth, elevation) of `source` in degrees.
pub fn relative_direction(receiver: Vec3, rotation: &Rotation, source: Vec3) -> (f64, f64) {
    rotation.apply_inverse(source - receiver).normalized().to_spherical_deg()
}

/// Render seed of one dataset entry, derived from the dataset seed and the
/// (receiver, source, hrtf) indices.
pub fn entry_seed(base: u64, receiver: usize, source: usize, hrtf: usize) -> u64 {
    let mut s = splitmix(base);
    for v in [receiver, source, hrtf] {
        s = splitmix(s ^ v as u64);
    }
    s
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Orientation;

    #[test]
    fn default_grid_size() {
        // 17 rings of 36 plus two poles
        assert_eq!(sphere_directions(10.0, 10.0).len(), 17 * 36 + 2);
        assert_eq!(sphere_directions(90.0, 90.0), alloc::vec![(0.0, -90.0), (0.0, 0.0), (90.0, 0.0), (180.0, 0.0), (270.0, 0.0), (0.0, 90.0)]);
    }

    #[test]
    fn grid_counts() {
        let g = grid_positions(Vec3::new(1.0, 1.0, 1.0), Vec3::new(0.5, 1.0, 0.0), [2, 3, 1]);
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], Vec3::new(1.5, 1.0, 1.0));
        assert_eq!(g[5], Vec3::new(1.5, 3.0, 1.0));
    }

    #[test]
    fn sphere_round_trip() {
        let rot = Orientation::new(30.0, 10.0, 0.0).rotation();
        let c = Vec3::new(2.0, 3.0, 1.5);
        for &(az, el) in &[(0.0, 0.0), (45.0, 20.0), (300.0, -60.0)] {
            let p = source_on_sphere(c, &rot, 1.0, az, el);
            assert!((p.distance(c) - 1.0).abs() < 1e-12);
            let (a, e) = relative_direction(c, &rot, p);
            assert!((a - az).abs() < 1e-9 && (e - el).abs() < 1e-9, "{a} {e}");
        }
    }

    #[test]
    fn seeds_differ() {
        let a = entry_seed(1, 0, 0, 0);
        assert_ne!(a, entry_seed(1, 0, 0, 1));
        assert_ne!(a, entry_seed(1, 1, 0, 0));
        assert_ne!(a, entry_seed(2, 0, 0, 0));
        assert_eq!(a, entry_seed(1, 0, 0, 0));
    }
}
