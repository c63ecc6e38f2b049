mod common;

use std::collections::BTreeSet;

use brirsim_core::ism::*;
use brirsim_core::scene::*;
use brirsim_core::Vec3;
use common::*;

fn mirror(p: Vec3, dims: Vec3, wall: Wall) -> Vec3 {
    let axis = wall.axis();
    let plane = if wall.is_upper() { dims[axis] } else { 0.0 };
    p.with_axis(axis, 2.0 * plane - p[axis])
}

fn key(p: Vec3) -> [i64; 3] {
    p.to_array().map(|v| (v * 1e6).round() as i64)
}

/// Images reached by every reflection sequence of at most `order` walls
/// that never hits the same wall twice in a row.
fn brute_force(source: Vec3, dims: Vec3, order: u32) -> BTreeSet<([i64; 3], u32)> {
    let mut seen: std::collections::BTreeMap<[i64; 3], u32> = Default::default();
    seen.insert(key(source), 0);
    let mut frontier = vec![(source, None::<Wall>)];
    for k in 1..=order {
        let mut next = Vec::new();
        for (p, last) in &frontier {
            for wall in Wall::ALL {
                if Some(wall) == *last {
                    continue;
                }
                let q = mirror(*p, dims, wall);
                seen.entry(key(q)).or_insert(k);
                next.push((q, Some(wall)));
            }
        }
        frontier = next;
    }
    seen.into_iter().collect()
}

#[test]
fn image_counts_match_reflection_sequences() {
    let dims = Vec3::new(5.1, 7.1, 3.0);
    let room = RoomSpec::uniform(dims, 0.3, 0.0, 6);
    let source = SourceSpec::omni(Vec3::new(1.3, 2.9, 1.1));
    let receiver = Vec3::new(4.0, 6.0, 1.7);
    let expected_counts = [1, 7, 25];
    for order in 0..=5u32 {
        let opts = SimOptions {
            ism_max_order: order,
            ..options(10.0, true, false)
        };
        let images = enumerate_images(&room, &source, receiver, &opts, room.speed_of_sound());
        let ours: BTreeSet<([i64; 3], u32)> = images.iter().map(|i| (key(i.position), i.order)).collect();
        assert_eq!(ours.len(), images.len());
        assert_eq!(ours, brute_force(source.position, dims, order), "order {order}");
        if let Some(&n) = expected_counts.get(order as usize) {
            assert_eq!(images.len(), n);
        }
    }
}

#[test]
fn arrival_ids_are_unique_and_sorted_output_is_stable() {
    let dims = Vec3::new(5.1, 7.1, 3.0);
    let room = RoomSpec::uniform(dims, 0.3, 0.2, 6);
    let source = SourceSpec::omni(Vec3::new(1.3, 2.9, 1.1));
    let listener = Listener::new(Vec3::new(4.0, 6.0, 1.7), brirsim_core::geometry::Rotation::IDENTITY);
    let opts = options(0.2, true, false);
    let mut arrivals = specular_arrivals(&room, &source, &listener, &opts, &[0.0; 6]).unwrap();
    let ids: BTreeSet<u64> = arrivals.iter().map(|a| a.id).collect();
    assert_eq!(ids.len(), arrivals.len());
    sort_arrivals(&mut arrivals);
    for w in arrivals.windows(2) {
        assert!(w[0].order_key() <= w[1].order_key());
    }
    assert_eq!(arrivals[0].kind, ArrivalKind::Specular);
    assert!(arrivals.iter().all(|a| a.id & DIFFUSE_ID_FLAG == 0));
}
