//! Image-source lattice of the shoebox and specular arrivals.
//!
//! Along each axis an image is described by an integer `l` and a parity
//! `u`: its coordinate is `(1 - 2u) p + 2 l L`. The image reflects `|l - u|`
//! times off the lower wall and `|l|` times off the upper wall.

use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Rotation, Vec3};
use crate::scene::{RoomSpec, SimOptions, SourceSpec, Wall, SURFACE_COUNT};

/// Lattice coordinates `(l, m, n)` and parities `(u, v, w)` of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LatticeIndex {
    pub cell: [i32; 3],
    pub parity: [u8; 3],
}

impl LatticeIndex {
    pub const DIRECT: LatticeIndex = LatticeIndex {
        cell: [0; 3],
        parity: [0; 3],
    };

    pub fn new(cell: [i32; 3], parity: [u8; 3]) -> Self {
        Self { cell, parity }
    }

    /// Wall hits along one axis as (lower, upper).
    pub fn axis_counts(&self, axis: usize) -> (u32, u32) {
        let l = self.cell[axis];
        let u = i32::from(self.parity[axis]);
        ((l - u).unsigned_abs(), l.unsigned_abs())
    }

    pub fn order(&self) -> u32 {
        (0..3)
            .map(|a| {
                let (lo, hi) = self.axis_counts(a);
                lo + hi
            })
            .sum()
    }
}

/// Reflection count per wall, indexed like [`Wall`].
pub fn reflection_counts(index: &LatticeIndex) -> [u32; SURFACE_COUNT] {
    let mut counts = [0; SURFACE_COUNT];
    for axis in 0..3 {
        let (lo, hi) = index.axis_counts(axis);
        counts[Wall::on_axis(axis, false).index()] = lo;
        counts[Wall::on_axis(axis, true).index()] = hi;
    }
    counts
}

/// Position of the image of `source` addressed by `index`.
pub fn image_position(source: Vec3, dims: Vec3, index: &LatticeIndex) -> Vec3 {
    let coord = |axis: usize| {
        let sign = 1.0 - 2.0 * f64::from(index.parity[axis]);
        sign * source[axis] + 2.0 * f64::from(index.cell[axis]) * dims[axis]
    };
    Vec3::new(coord(0), coord(1), coord(2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSource {
    pub index: LatticeIndex,
    pub position: Vec3,
    pub order: u32,
}

impl ImageSource {
    fn sort_key(&self) -> (u32, [i32; 3], [u8; 3]) {
        (self.order, self.index.cell, self.index.parity)
    }
}

/// Largest `|l|` worth visiting on an axis of length `length`.
fn cell_bound(c: f64, duration: f64, length: f64, max_order: u32) -> i32 {
    let by_time = (c * duration / (2.0 * length)).ceil() + 1.0;
    let by_order = f64::from(max_order / 2 + 1);
    by_time.min(by_order) as i32
}

/// All images up to `opts.ism_max_order` whose path to `receiver` arrives
/// within the impulse response. Sorted by (order, l, m, n, u, v, w).
pub fn enumerate_images(room: &RoomSpec, source: &SourceSpec, receiver: Vec3, opts: &SimOptions, c: f64) -> Vec<ImageSource> {
    if !opts.ism_enabled {
        return Vec::new();
    }
    let dims = room.dimensions;
    let max_order = opts.ism_max_order;
    let max_distance = c * opts.ir_duration;
    let bounds: [i32; 3] = core::array::from_fn(|a| cell_bound(c, opts.ir_duration, dims[a], max_order));

    // Per-axis candidates (l, u, hits) so the triple loop only sums.
    let axis_candidates: [Vec<(i32, u8, u32)>; 3] = core::array::from_fn(|a| {
        let mut v = Vec::new();
        for l in -bounds[a]..=bounds[a] {
            for u in 0..=1u8 {
                let hits = (l - i32::from(u)).unsigned_abs() + l.unsigned_abs();
                if hits <= max_order {
                    v.push((l, u, hits));
                }
            }
        }
        v
    });

    let mut images = Vec::new();
    for &(l, u, hx) in &axis_candidates[0] {
        for &(m, v, hy) in &axis_candidates[1] {
            if hx + hy > max_order {
                continue;
            }
            for &(n, w, hz) in &axis_candidates[2] {
                let order = hx + hy + hz;
                if order > max_order {
                    continue;
                }
                let index = LatticeIndex::new([l, m, n], [u, v, w]);
                let position = image_position(source.position, dims, &index);
                if position.distance(receiver) > max_distance {
                    continue;
                }
                images.push(ImageSource { index, position, order });
            }
        }
    }
    images.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    images
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalKind {
    Specular,
    Diffuse,
}

/// One propagation path as seen by the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrival {
    /// Seconds after emission.
    pub time: f64,
    /// Path length in meters.
    pub distance: f64,
    /// Unit vector towards the apparent source, receiver-local frame.
    pub direction: Vec3,
    /// Signed pressure gain per band.
    pub band_gains: Vec<f64>,
    pub kind: ArrivalKind,
    /// Tie-breaker for the (time, id) ordering.
    pub id: u64,
}

impl Arrival {
    /// Canonical ordering used for deterministic summation.
    pub fn order_key(&self) -> (f64, u64) {
        (self.time, self.id)
    }
}

/// Sort arrivals by (time, id).
pub fn sort_arrivals(arrivals: &mut [Arrival]) {
    arrivals.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.id.cmp(&b.id)));
}

/// Bit set on the ids of diffuse arrivals.
pub const DIFFUSE_ID_FLAG: u64 = 1 << 63;

fn specular_id(image: &ImageSource) -> u64 {
    const OFFSET: i64 = 1 << 13;
    let field = |v: i32| ((i64::from(v) + OFFSET) as u64) & 0x3fff;
    let c = image.index.cell;
    let p = image.index.parity;
    (u64::from(image.order.min(0xffff)) << 45)
        | (field(c[0]) << 31)
        | (field(c[1]) << 17)
        | (field(c[2]) << 3)
        | (u64::from(p[0]) << 2)
        | (u64::from(p[1]) << 1)
        | u64::from(p[2])
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsmError {
    #[error("coincident source and receiver (distance {0} m)")]
    Coincident(f64),
}

/// Where and how a path is received.
#[derive(Debug, Clone, Copy)]
pub struct Listener {
    pub position: Vec3,
    pub rotation: Rotation,
}

impl Listener {
    pub fn new(position: Vec3, rotation: Rotation) -> Self {
        Self { position, rotation }
    }
}

/// Turn an image into a specular arrival.
///
/// The pressure gain in band `b` is `1/d`, times `sqrt(1 - a) sqrt(1 - s)`
/// per wall hit, times the source directivity evaluated on the mirrored
/// source axis, times the air loss over `d`.
pub fn image_band_gains(
    image: &ImageSource,
    room: &RoomSpec,
    source: &SourceSpec,
    listener: &Listener,
    air_db_per_m: &[f64],
    c: f64,
) -> Result<Arrival, IsmError> {
    let offset = image.position - listener.position;
    let d = offset.norm();
    if d < 1e-6 {
        return Err(IsmError::Coincident(d));
    }

    let counts = reflection_counts(&image.index);
    let axis = source.orientation.rotation().front();
    let mirrored_axis = Vec3::new(
        if (counts[0] + counts[1]) % 2 == 1 { -axis.x } else { axis.x },
        if (counts[2] + counts[3]) % 2 == 1 { -axis.y } else { axis.y },
        if (counts[4] + counts[5]) % 2 == 1 { -axis.z } else { axis.z },
    );
    let emission = (offset * (-1.0 / d)).normalized();
    let directivity = source.directivity.gain(mirrored_axis.dot(emission));

    let band_gains = air_db_per_m
        .iter()
        .enumerate()
        .map(|(b, &air)| {
            let mut g = directivity / d;
            for wall in Wall::ALL {
                let hits = counts[wall.index()];
                if hits == 0 {
                    continue;
                }
                let surface = room.surface(wall);
                let r = (1.0 - surface.absorption[b]).sqrt() * (1.0 - surface.scattering[b]).sqrt();
                g *= r.powi(hits as i32);
            }
            g * 10.0.powf(-air * d / 20.0)
        })
        .collect();

    Ok(Arrival {
        time: d / c,
        distance: d,
        direction: listener.rotation.apply_inverse(offset * (1.0 / d)).normalized(),
        band_gains,
        kind: ArrivalKind::Specular,
        id: specular_id(image),
    })
}

/// Specular arrivals (direct sound included) for one source/receiver pair,
/// in enumeration order.
pub fn specular_arrivals(
    room: &RoomSpec,
    source: &SourceSpec,
    listener: &Listener,
    opts: &SimOptions,
    air_db_per_m: &[f64],
) -> Result<Vec<Arrival>, IsmError> {
    let c = room.speed_of_sound();
    enumerate_images(room, source, listener.position, opts, c)
        .iter()
        .map(|img| image_band_gains(img, room, source, listener, air_db_per_m, c))
        .collect()
}
