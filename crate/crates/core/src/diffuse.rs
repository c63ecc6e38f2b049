//! Diffuse rain ray tracer.
//!
//! Rays leave the source carrying per-band energy. At every wall hit the
//! ray "rains" an estimate of the energy the wall scatters straight into the
//! receiver's detection sphere, then continues with its energy reduced by
//! the absorption, either specularly or along a Lambertian direction. The
//! rain does not drain the ray.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Vec3;
use crate::ism::{sort_arrivals, Arrival, ArrivalKind, Listener, DIFFUSE_ID_FLAG};
use crate::render::band_air_absorption;
use crate::scene::{Directivity, RoomSpec, SimOptions, SourceSpec, SurfaceSpec, ValidatedSpec, Wall};

/// Uniform direction on the unit sphere.
pub fn sample_direction_uniform<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z = 2.0 * rng.gen::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.gen::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z).normalized()
}

/// Cosine-weighted direction in the hemisphere around `normal`.
pub fn sample_direction_lambert<R: Rng + ?Sized>(normal: Vec3, rng: &mut R) -> Vec3 {
    // gen() is in [0, 1), so cos_theta is in (0, 1]
    let cos_theta = (1.0 - rng.gen::<f64>()).sqrt();
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let phi = 2.0 * PI * rng.gen::<f64>();
    let (t1, t2) = tangent_basis(normal);
    (normal * cos_theta + t1 * (sin_theta * phi.cos()) + t2 * (sin_theta * phi.sin())).normalized()
}

fn tangent_basis(n: Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let t1 = helper.cross(n).normalized();
    (t1, n.cross(t1))
}

/// Solid angle of the detection sphere (radius `r_d`) seen from distance
/// `d`. Clamped to a hemisphere when the observer is inside the sphere.
pub fn detection_solid_angle(d: f64, r_d: f64) -> f64 {
    if d <= r_d {
        return 2.0 * PI;
    }
    let ratio = r_d / d;
    2.0 * PI * (1.0 - (1.0 - ratio * ratio).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub band_energy: Vec<f64>,
    /// Seconds travelled so far.
    pub path_time: f64,
}

/// Scattered energy reaching the detection sphere from one wall hit.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffuseContribution {
    /// Arrival time at the receiver in seconds.
    pub time: f64,
    /// Hit point to receiver distance in meters.
    pub distance: f64,
    /// Unit vector towards the hit point, receiver-local frame.
    pub direction: Vec3,
    /// Energy per band.
    pub energy: Vec<f64>,
    /// +1 or -1.
    pub sign: f64,
    pub id: u64,
}

impl DiffuseContribution {
    /// Energy-to-pressure scale for a detection sphere of radius `r_d`.
    ///
    /// Rays carry fractions of the emitted power, while specular gains are
    /// pressures of a source with unit amplitude at 1 m (power 4 pi).
    /// Dividing the captured energy by the sphere cross-section and scaling
    /// by 4 pi gives `4 / r_d^2`.
    pub fn pressure_scale(r_d: f64) -> f64 {
        4.0 / (r_d * r_d)
    }

    /// Signed pressure gains `sign * sqrt(scale * energy_b)`.
    pub fn to_arrival(&self, detection_radius: f64) -> Arrival {
        let scale = Self::pressure_scale(detection_radius);
        Arrival {
            time: self.time,
            distance: self.distance,
            direction: self.direction,
            band_gains: self.energy.iter().map(|&e| self.sign * (scale * e).sqrt()).collect(),
            kind: ArrivalKind::Diffuse,
            id: self.id,
        }
    }
}

/// Receiver-side constants shared by all rain evaluations.
#[derive(Debug, Clone)]
pub struct RainContext {
    pub listener: Listener,
    pub air_db_per_m: Vec<f64>,
    pub c: f64,
    pub detection_radius: f64,
}

struct RainGeometry {
    distance: f64,
    to_receiver: Vec3,
    // (cos theta / pi) * solid angle
    kernel: f64,
}

fn rain_geometry(hit: Vec3, wall: Wall, ctx: &RainContext) -> Option<RainGeometry> {
    let offset = ctx.listener.position - hit;
    let distance = offset.norm();
    if distance <= 0.0 {
        return None;
    }
    let to_receiver = offset * (1.0 / distance);
    let cos_theta = wall.inward_normal().dot(to_receiver);
    if cos_theta <= 0.0 {
        return None;
    }
    let kernel = cos_theta / PI * detection_solid_angle(distance, ctx.detection_radius);
    Some(RainGeometry {
        distance,
        to_receiver,
        kernel,
    })
}

fn rain_energy_into(out: &mut [f64], ray_energy: &[f64], surface: &SurfaceSpec, geo: &RainGeometry, air: &[f64]) {
    for (b, slot) in out.iter_mut().enumerate() {
        let air_loss = 10.0.powf(-air[b] * geo.distance / 10.0);
        *slot = ray_energy[b] * (1.0 - surface.absorption[b]) * surface.scattering[b] * geo.kernel * air_loss;
    }
}

/// Rain emitted by `ray` hitting `wall` at `hit`.
///
/// The energy per band is `E (1 - a) s (cos theta / pi) Omega` times the air
/// loss from the hit point to the receiver; it is zero when the receiver is
/// behind the wall. `sign` and `id` are left at +1 and 0.
pub fn rain_contribution(hit: Vec3, wall: Wall, surface: &SurfaceSpec, ray: &Ray, ctx: &RainContext) -> DiffuseContribution {
    let bands = ray.band_energy.len();
    let mut energy = vec![0.0; bands];
    let offset = hit - ctx.listener.position;
    let distance = offset.norm();
    if let Some(geo) = rain_geometry(hit, wall, ctx) {
        rain_energy_into(&mut energy, &ray.band_energy, surface, &geo, &ctx.air_db_per_m);
    }
    DiffuseContribution {
        time: ray.path_time + distance / ctx.c,
        distance,
        direction: ctx.listener.rotation.apply_inverse(offset).normalized(),
        energy,
        sign: 1.0,
        id: 0,
    }
}

/// Nearest wall crossed by a ray leaving `origin` along `dir`.
fn next_wall(origin: Vec3, dir: Vec3, dims: Vec3) -> (f64, Wall) {
    let mut best = (f64::INFINITY, Wall::X0);
    for axis in 0..3 {
        let d = dir[axis];
        if d.abs() < 1e-300 {
            continue;
        }
        let upper = d > 0.0;
        let plane = if upper { dims[axis] } else { 0.0 };
        let t = ((plane - origin[axis]) / d).max(0.0);
        if t < best.0 {
            best = (t, Wall::on_axis(axis, upper));
        }
    }
    best
}

fn reflect(dir: Vec3, wall: Wall) -> Vec3 {
    let axis = wall.axis();
    dir.with_axis(axis, -dir[axis])
}

/// Stable id of the rain from `bounce` of ray `ray_index`.
pub fn contribution_id(ray_index: u64, bounce: u32) -> u64 {
    DIFFUSE_ID_FLAG | ((ray_index & ((1 << 39) - 1)) << 24) | u64::from(bounce & 0xff_ffff)
}

/// Random stream for one ray, independent of how rays are scheduled.
pub fn ray_stream(seed: u64, ray_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ray_index);
    rng
}

/// Traces rays for one source/receiver pair.
#[derive(Debug, Clone)]
pub struct Tracer<'a> {
    room: &'a RoomSpec,
    source: &'a SourceSpec,
    opts: &'a SimOptions,
    ctx: RainContext,
    initial_energy: f64,
    mean_scattering: [f64; 6],
}

impl<'a> Tracer<'a> {
    pub fn new(room: &'a RoomSpec, source: &'a SourceSpec, listener: Listener, opts: &'a SimOptions, air_db_per_m: Vec<f64>) -> Self {
        let n = opts.n_rays.max(1) as f64;
        Self {
            room,
            source,
            opts,
            ctx: RainContext {
                listener,
                air_db_per_m,
                c: room.speed_of_sound(),
                detection_radius: opts.detection_radius,
            },
            // A directional source radiates less total power than an omni
            // one with the same on-axis level.
            initial_energy: source.directivity.power_factor() / n,
            mean_scattering: core::array::from_fn(|i| room.surfaces[i].mean_scattering()),
        }
    }

    pub fn ray_count(&self) -> u64 {
        if self.opts.diffuse_enabled {
            self.opts.n_rays
        } else {
            0
        }
    }

    pub fn detection_radius(&self) -> f64 {
        self.ctx.detection_radius
    }

    fn initial_direction(&self, rng: &mut ChaCha8Rng) -> Vec3 {
        let pattern = self.source.directivity;
        if pattern == Directivity::Omnidirectional {
            return sample_direction_uniform(rng);
        }
        let axis = self.source.orientation.rotation().front();
        loop {
            let v = sample_direction_uniform(rng);
            let g = pattern.gain(axis.dot(v));
            if rng.gen::<f64>() < g * g {
                return v;
            }
        }
    }

    /// Trace ray `ray_index`, handing every rain contribution that arrives
    /// within the response to `visit` in bounce order. Returns the initial
    /// ray and the number of bounces.
    pub fn trace_ray(&self, ray_index: u64, visit: impl FnMut(&DiffuseContribution)) -> (Ray, u32) {
        self.trace_ray_with(ray_index, visit, |_| {})
    }

    /// Every state of ray `ray_index`: the launch and the state leaving
    /// each wall hit.
    pub fn ray_path(&self, ray_index: u64) -> Vec<Ray> {
        let mut path = Vec::new();
        let (first, _) = self.trace_ray_with(ray_index, |_| {}, |r| path.push(r.clone()));
        path.insert(0, first);
        path
    }

    fn trace_ray_with(
        &self,
        ray_index: u64,
        mut visit: impl FnMut(&DiffuseContribution),
        mut visit_ray: impl FnMut(&Ray),
    ) -> (Ray, u32) {
        let bands = self.opts.bands();
        let dims = self.room.dimensions;
        let duration = self.opts.ir_duration;
        let cutoff = self.opts.energy_threshold / self.opts.n_rays.max(1) as f64;
        let c = self.ctx.c;
        let air = &self.ctx.air_db_per_m;

        let mut rng = ray_stream(self.opts.seed, ray_index);
        let mut ray = Ray {
            origin: self.source.position,
            direction: self.initial_direction(&mut rng),
            band_energy: vec![self.initial_energy; bands],
            path_time: 0.0,
        };
        let first = ray.clone();
        let mut rain = DiffuseContribution {
            time: 0.0,
            distance: 0.0,
            direction: Vec3::ZERO,
            energy: vec![0.0; bands],
            sign: 1.0,
            id: 0,
        };
        let mut bounce = 0u32;
        loop {
            let (t, wall) = next_wall(ray.origin, ray.direction, dims);
            if !t.is_finite() {
                break;
            }
            let axis = wall.axis();
            let plane = if wall.is_upper() { dims[axis] } else { 0.0 };
            let mut hit = ray.origin + ray.direction * t;
            hit = Vec3::new(hit.x.clamp(0.0, dims.x), hit.y.clamp(0.0, dims.y), hit.z.clamp(0.0, dims.z)).with_axis(axis, plane);

            for (e, &a) in ray.band_energy.iter_mut().zip(air.iter()) {
                *e *= 10.0.powf(-a * t / 10.0);
            }
            ray.path_time += t / c;
            if ray.path_time > duration {
                break;
            }
            bounce += 1;

            let surface = self.room.surface(wall);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            if let Some(geo) = rain_geometry(hit, wall, &self.ctx) {
                let time = ray.path_time + geo.distance / c;
                if time <= duration {
                    rain_energy_into(&mut rain.energy, &ray.band_energy, surface, &geo, air);
                    rain.time = time;
                    rain.distance = geo.distance;
                    rain.direction = self.ctx.listener.rotation.apply_inverse(-geo.to_receiver).normalized();
                    rain.sign = sign;
                    rain.id = contribution_id(ray_index, bounce);
                    visit(&rain);
                }
            }

            for (e, &a) in ray.band_energy.iter_mut().zip(&surface.absorption) {
                *e *= 1.0 - a;
            }
            if ray.band_energy.iter().fold(0.0f64, |m, &e| m.max(e)) < cutoff {
                break;
            }
            ray.direction = if rng.gen::<f64>() < self.mean_scattering[wall.index()] {
                sample_direction_lambert(wall.inward_normal(), &mut rng)
            } else {
                reflect(ray.direction, wall)
            };
            ray.origin = hit;
            visit_ray(&ray);
        }
        (first, bounce)
    }

    /// All contributions of rays `range`, in (ray, bounce) order.
    pub fn trace_range(&self, range: core::ops::Range<u64>) -> Vec<DiffuseContribution> {
        let mut out = Vec::new();
        for ray in range {
            self.trace_ray(ray, |c| out.push(c.clone()));
        }
        out
    }
}

/// Diffuse contributions for one source/receiver pair, sorted by (time, id).
pub fn trace_rays(spec: &ValidatedSpec, source_index: usize, receiver_index: usize) -> Vec<DiffuseContribution> {
    let source = &spec.sources[source_index];
    let receiver = &spec.receivers[receiver_index];
    let air = band_air_absorption(&spec.room, &spec.options.band_centers);
    let listener = Listener::new(receiver.position, receiver.orientation.rotation());
    let tracer = Tracer::new(&spec.room, source, listener, &spec.options, air);
    let mut out = tracer.trace_range(0..tracer.ray_count());
    sort_contributions(&mut out);
    out
}

pub fn sort_contributions(list: &mut [DiffuseContribution]) {
    list.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.id.cmp(&b.id)));
}

/// Diffuse contributions as renderable arrivals, sorted by (time, id).
pub fn diffuse_arrivals(contributions: &[DiffuseContribution], detection_radius: f64) -> Vec<Arrival> {
    let mut v: Vec<Arrival> = contributions.iter().map(|c| c.to_arrival(detection_radius)).collect();
    sort_arrivals(&mut v);
    v
}
