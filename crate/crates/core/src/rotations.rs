//! Quaternion and rotation-matrix algebra.
//!
//! Unit quaternions (SU(2)) are the computational carrier for rotations. The
//! covering map sends `quat_exp(v)` to the rotation by angle `2|v|` about `v`,
//! so a rotation `R(tX)` lifts to `quat_exp((t/2) X)`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationError {
    #[error("undefined rotation axis")]
    UndefinedAxis,
    #[error("quaternion not normalized (|q| = {0})")]
    NotNormalized(f64),
    #[error("matrix is not a rotation (orthonormality error {0:.3e})")]
    NotARotation(f64),
}

/// Tolerance on `|q| - 1` accepted by the covering map.
pub const UNIT_TOL: f64 = 1e-9;

/// Chained products renormalize after this many multiplications.
pub const RENORMALIZE_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const E1: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const E2: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const E3: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
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
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Quaternion `a i + b j + c k + d` (scalar last).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for Quat {
    fn default() -> Self {
        Quat::IDENTITY
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat { a: 0.0, b: 0.0, c: 0.0, d: 1.0 };
    pub const I: Quat = Quat { a: 1.0, b: 0.0, c: 0.0, d: 0.0 };
    pub const J: Quat = Quat { a: 0.0, b: 1.0, c: 0.0, d: 0.0 };
    pub const K: Quat = Quat { a: 0.0, b: 0.0, c: 1.0, d: 0.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn vector(self) -> Vec3 {
        Vec3::new(self.a, self.b, self.c)
    }

    pub fn conj(self) -> Quat {
        Quat::new(-self.a, -self.b, -self.c, self.d)
    }

    pub fn dot(self, o: Quat) -> f64 {
        self.a * o.a + self.b * o.b + self.c * o.c + self.d * o.d
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalize(self) -> Quat {
        let n = self.norm();
        Quat::new(self.a / n, self.b / n, self.c / n, self.d / n)
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    fn scale(self, s: f64) -> Quat {
        Quat::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Euclidean distance in R^4 (not double-cover aware).
    pub fn chord(self, o: Quat) -> f64 {
        (self - o).norm()
    }
}

impl Mul for Quat {
    type Output = Quat;
    /// Hamilton product with `i² = j² = k² = -1`, `ij = k`, `jk = i`, `ki = j`.
    fn mul(self, q: Quat) -> Quat {
        let p = self;
        Quat::new(
            p.d * q.a + p.a * q.d + p.b * q.c - p.c * q.b,
            p.d * q.b - p.a * q.c + p.b * q.d + p.c * q.a,
            p.d * q.c + p.a * q.b - p.b * q.a + p.c * q.d,
            p.d * q.d - p.a * q.a - p.b * q.b - p.c * q.c,
        )
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, o: Quat) -> Quat {
        Quat::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, o: Quat) -> Quat {
        Quat::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        self.scale(-1.0)
    }
}

pub fn quat_mul(p: Quat, q: Quat) -> Quat {
    p * q
}

/// `cos|v| + (v/|v|) sin|v|`, identifying `i, j, k` with `e1, e2, e3`.
pub fn quat_exp(v: Vec3) -> Quat {
    let theta = v.norm();
    if theta == 0.0 {
        return Quat::IDENTITY;
    }
    let s = theta.sin() / theta;
    Quat::new(v.x * s, v.y * s, v.z * s, theta.cos())
}

/// Left-to-right product of a sequence of quaternions, renormalized every
/// [`RENORMALIZE_EVERY`] factors and once at the end.
pub fn quat_product<I: IntoIterator<Item = Quat>>(factors: I) -> Quat {
    let mut acc = Quat::IDENTITY;
    for (n, f) in factors.into_iter().enumerate() {
        acc = acc * f;
        if (n + 1) % RENORMALIZE_EVERY == 0 {
            acc = acc.normalize();
        }
    }
    acc.normalize()
}

/// Double-cover aware residual: `min(|p - q|, |p + q|)`.
pub fn quat_distance(p: Quat, q: Quat) -> f64 {
    let p = p.normalize();
    let q = q.normalize();
    (p - q).norm().min((p + q).norm())
}

/// Rotation angle (in `[0, π]`) of the rotation represented by `q`.
pub fn rotation_angle(q: Quat) -> f64 {
    let q = q.normalize();
    2.0 * q.vector().norm().atan2(q.d.abs())
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };
    pub const ZERO: Mat3 = Mat3 { m: [[0.0; 3]; 3] };

    pub fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn transpose(&self) -> Mat3 {
        let mut t = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let r = |i: usize| self.m[i][0] * v.x + self.m[i][1] * v.y + self.m[i][2] * v.z;
        Vec3::new(r(0), r(1), r(2))
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|e| *e *= s);
        out
    }

    pub fn outer(u: Vec3, v: Vec3) -> Mat3 {
        let (u, v) = (u.to_array(), v.to_array());
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = u[i] * v[j];
            }
        }
        out
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat3) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn flatten(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for (o, e) in out.iter_mut().zip(self.m.iter().flatten()) {
            *o = *e;
        }
        out
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] += o.m[i][j];
            }
        }
        out
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        out
    }
}

/// A 3x3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3(pub Mat3);

impl Rot3 {
    pub const IDENTITY: Rot3 = Rot3(Mat3::IDENTITY);

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.0.apply(v)
    }

    pub fn transpose(&self) -> Rot3 {
        Rot3(self.0.transpose())
    }

    /// Validates orthonormality and unit determinant within `tol`.
    pub fn try_from_matrix(m: Mat3, tol: f64) -> Result<Rot3, RotationError> {
        let err = (m.transpose() * m).max_abs_diff(&Mat3::IDENTITY).max((m.det() - 1.0).abs());
        if err > tol {
            return Err(RotationError::NotARotation(err));
        }
        Ok(Rot3(m))
    }

    pub fn max_abs_diff(&self, other: &Rot3) -> f64 {
        self.0.max_abs_diff(&other.0)
    }
}

impl Mul for Rot3 {
    type Output = Rot3;
    fn mul(self, o: Rot3) -> Rot3 {
        Rot3(self.0 * o.0)
    }
}

/// Skew matrix with `ad(v) w = v × w`.
pub fn ad_matrix(v: Vec3) -> Mat3 {
    Mat3::from_rows([[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]])
}

/// `R(tX) = cos t I + sin t ad X + (1 - cos t) X Xᵀ`, after rescaling a
/// non-unit axis to `t|X|` about `X/|X|`.
pub fn rot_axis_angle(t: f64, axis: Vec3) -> Result<Rot3, RotationError> {
    let n = axis.norm();
    if n == 0.0 {
        if t == 0.0 {
            return Ok(Rot3::IDENTITY);
        }
        return Err(RotationError::UndefinedAxis);
    }
    let t = t * n;
    let x = axis * (1.0 / n);
    let (s, c) = t.sin_cos();
    let m = Mat3::IDENTITY.scale(c) + ad_matrix(x).scale(s) + Mat3::outer(x, x).scale(1.0 - c);
    Ok(Rot3(m))
}

/// The covering homomorphism SU(2) → SO(3): `v ↦ q v q̄` on pure quaternions.
pub fn su2_to_so3(q: Quat) -> Result<Rot3, RotationError> {
    let n = q.norm();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(RotationError::NotNormalized(n));
    }
    let Quat { a, b, c, d } = q;
    Ok(Rot3(Mat3::from_rows([
        [d * d + a * a - b * b - c * c, 2.0 * (a * b - c * d), 2.0 * (a * c + b * d)],
        [2.0 * (a * b + c * d), d * d - a * a + b * b - c * c, 2.0 * (b * c - a * d)],
        [2.0 * (a * c - b * d), 2.0 * (b * c + a * d), d * d - a * a - b * b + c * c],
    ])))
}

/// One of the two lifts of a rotation matrix (Shepperd's method).
pub fn so3_to_su2(r: &Rot3) -> Quat {
    let m = &r.0.m;
    let tr = m[0][0] + m[1][1] + m[2][2];
    let q = if tr > m[0][0].max(m[1][1]).max(m[2][2]) {
        let s = (1.0 + tr).sqrt() * 2.0;
        Quat::new((m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s, 0.25 * s)
    } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        Quat::new(0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s, (m[2][1] - m[1][2]) / s)
    } else if m[1][1] >= m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        Quat::new((m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s, (m[0][2] - m[2][0]) / s)
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        Quat::new((m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s, (m[1][0] - m[0][1]) / s)
    };
    q.normalize()
}

/// A unit quaternion maps to a rotation by π iff its scalar part vanishes.
pub fn is_pi_rotation(q: Quat, tol: f64) -> bool {
    q.d.abs() <= tol
}

/// Result of [`flip_word`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flip {
    pub s1: f64,
    pub s3: f64,
    pub psi: f64,
}

/// Rewrites `exp(s1 X) exp(s2 Y) exp(s3 X)` as `exp(s1' X) exp(-s2 Y) exp(s3' X)`
/// with `tan ψ = cos α tan s2`, `ψ ∈ (-π/2, π/2]`, `s1' = s1 + ψ - π/2` and
/// `s3' = s3 + ψ + π/2`.
pub fn flip_word(s1: f64, s2: f64, s3: f64, x: Vec3, y: Vec3) -> Flip {
    use std::f64::consts::{FRAC_PI_2, PI};
    let cos_alpha = x.dot(y);
    let (sin2, cos2) = s2.sin_cos();
    let mut psi = (cos_alpha * sin2).atan2(cos2);
    if cos2 == 0.0 {
        psi = FRAC_PI_2;
    }
    if psi > FRAC_PI_2 {
        psi -= PI;
    } else if psi <= -FRAC_PI_2 {
        psi += PI;
    }
    Flip { s1: s1 + psi - FRAC_PI_2, s3: s3 + psi + FRAC_PI_2, psi }
}
