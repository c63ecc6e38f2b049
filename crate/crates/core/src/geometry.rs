//! Small 3-D vector and rotation helpers.

use core::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use num_traits::Float;
use serde::{Deserialize, Serialize};

/// A point or direction in room coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction. Zero vectors stay zero.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component along `axis` (0 = x, 1 = y, 2 = z).
    pub fn axis(self, axis: usize) -> f64 {
        self[axis]
    }

    pub fn with_axis(mut self, axis: usize, value: f64) -> Vec3 {
        match axis {
            0 => self.x = value,
            1 => self.y = value,
            _ => self.z = value,
        }
        self
    }

    /// Unit vector for a SOFA-style direction: azimuth counterclockwise
    /// from +x towards +y, elevation towards +z, both in degrees.
    pub fn from_spherical_deg(azimuth: f64, elevation: f64) -> Vec3 {
        let az = azimuth.to_radians();
        let el = elevation.to_radians();
        Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
    }

    /// Inverse of [`Vec3::from_spherical_deg`]; azimuth lands in [0, 360).
    pub fn to_spherical_deg(self) -> (f64, f64) {
        let u = self.normalized();
        let el = u.z.clamp(-1.0, 1.0).asin().to_degrees();
        let mut az = u.y.atan2(u.x).to_degrees();
        if az < 0.0 {
            az += 360.0;
        }
        if az >= 360.0 {
            az -= 360.0;
        }
        (az, el)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;

    fn index(&self, axis: usize) -> &f64 {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis index {axis} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Orientation as yaw, pitch and roll in degrees.
///
/// Applied intrinsically in Z, Y', X'' order. Yaw turns the front (+x)
/// towards +y, positive pitch raises the front towards +z and roll turns
/// about the resulting front axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Orientation {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl Orientation {
    pub const fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }

    pub fn rotation(self) -> Rotation {
        Rotation::from_orientation(self)
    }
}

impl From<[f64; 3]> for Orientation {
    fn from(v: [f64; 3]) -> Self {
        Orientation::new(v[0], v[1], v[2])
    }
}

impl From<Orientation> for [f64; 3] {
    fn from(o: Orientation) -> Self {
        [o.yaw, o.pitch, o.roll]
    }
}

/// Rotation matrix mapping body-local vectors to room coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    rows: [[f64; 3]; 3],
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_orientation(o: Orientation) -> Self {
        let (sy, cy) = o.yaw.to_radians().sin_cos();
        // Nose-up pitch is a negative right-handed turn about y.
        let (sp, cp) = (-o.pitch).to_radians().sin_cos();
        let (sr, cr) = o.roll.to_radians().sin_cos();
        let rz = [[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]];
        let ry = [[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]];
        Rotation {
            rows: matmul(matmul(rz, ry), rx),
        }
    }

    /// Local to room coordinates.
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    /// Room to local coordinates.
    pub fn apply_inverse(&self, v: Vec3) -> Vec3 {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[1][0] * v.y + r[2][0] * v.z,
            r[0][1] * v.x + r[1][1] * v.y + r[2][1] * v.z,
            r[0][2] * v.x + r[1][2] * v.y + r[2][2] * v.z,
        )
    }

    /// The body's front axis (+x local) in room coordinates.
    pub fn front(&self) -> Vec3 {
        self.apply(Vec3::new(1.0, 0.0, 0.0))
    }
}

fn matmul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Great-circle angle between two directions, in radians.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    // atan2 form stays accurate for nearly parallel vectors.
    let cross = a.cross(b).norm();
    cross.atan2(a.dot(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec3, b: Vec3) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn yaw_turns_front_towards_y() {
        let r = Orientation::new(90.0, 0.0, 0.0).rotation();
        assert!(close(r.front(), Vec3::new(0.0, 1.0, 0.0)));
    }

    #[test]
    fn positive_pitch_looks_up() {
        let r = Orientation::new(0.0, 30.0, 0.0).rotation();
        let (az, el) = r.front().to_spherical_deg();
        assert!(az.abs() < 1e-9 || (az - 360.0).abs() < 1e-9);
        assert!((el - 30.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_undoes_rotation() {
        let r = Orientation::new(33.0, -12.0, 71.0).rotation();
        let v = Vec3::new(0.3, -1.2, 2.5);
        assert!(close(r.apply_inverse(r.apply(v)), v));
    }

    #[test]
    fn spherical_round_trip() {
        for &(az, el) in &[(0.0, 0.0), (45.0, 10.0), (270.0, -60.0), (359.5, 89.0)] {
            let (a, e) = Vec3::from_spherical_deg(az, el).to_spherical_deg();
            assert!((a - az).abs() < 1e-9, "{a} vs {az}");
            assert!((e - el).abs() < 1e-9);
        }
    }

    #[test]
    fn angle_between_orthogonal() {
        let a = angle_between(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 2.0));
        assert!((a - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
