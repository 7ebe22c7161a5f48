//! Rigid-body flight dynamics in body axes with quaternion attitude.
//!
//! Body axes: x forward, y starboard, z down. The quaternion
//! `zeta = (q0, q1, q2, q3)` is scalar-first and rotates body vectors into the
//! inertial (north-east-down) frame.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Vec3<T> = [T; 3];

/// `1/2 Omega(omega) zeta`.
pub fn quat_rate<T: Scalar>(zeta: &[T; 4], omega: &Vec3<T>) -> [T; 4] {
    let [q0, q1, q2, q3] = *zeta;
    let [p, q, r] = *omega;
    let h = 0.5;
    [
        (-(p * q1) - q * q2 - r * q3).scale(h),
        (p * q0 + r * q2 - q * q3).scale(h),
        (q * q0 - r * q1 + p * q3).scale(h),
        (r * q0 + q * q1 - p * q2).scale(h),
    ]
}

/// Body-to-inertial rotation matrix of a unit quaternion.
pub fn rotation_matrix<T: Scalar>(zeta: &[T; 4]) -> [[T; 3]; 3] {
    let [q0, q1, q2, q3] = *zeta;
    let one = T::one();
    let two = |x: T| x.scale(2.0);
    [
        [one - two(q2 * q2 + q3 * q3), two(q1 * q2 - q0 * q3), two(q1 * q3 + q0 * q2)],
        [two(q1 * q2 + q0 * q3), one - two(q1 * q1 + q3 * q3), two(q2 * q3 - q0 * q1)],
        [two(q1 * q3 - q0 * q2), two(q2 * q3 + q0 * q1), one - two(q1 * q1 + q2 * q2)],
    ]
}

pub fn cross<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn mat_vec<T: Scalar>(m: &Matrix3<f64>, v: &Vec3<T>) -> Vec3<T> {
    let mut out = [T::zero(); 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = v[0].scale(m[(i, 0)]) + v[1].scale(m[(i, 1)]) + v[2].scale(m[(i, 2)]);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBodyState<T = f64> {
    pub v_b: Vec3<T>,
    pub omega_b: Vec3<T>,
    pub position: Vec3<T>,
    pub zeta: [T; 4],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBodyRates<T = f64> {
    pub v_dot: Vec3<T>,
    pub omega_dot: Vec3<T>,
    pub position_dot: Vec3<T>,
    pub zeta_dot: [T; 4],
}

/// Mass properties with a cached inverse inertia.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassProperties {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
}

impl MassProperties {
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mass".into(),
                reason: "must be positive".into(),
            });
        }
        if (inertia - inertia.transpose()).amax() > 1e-12 * inertia.amax() {
            return Err(Error::InvalidParameter {
                name: "inertia".into(),
                reason: "must be symmetric".into(),
            });
        }
        if inertia.cholesky().is_none() {
            return Err(Error::Singular("inertia is not positive definite"));
        }
        let inertia_inv = inertia.try_inverse().ok_or(Error::Singular("inertia"))?;
        Ok(Self {
            mass,
            inertia,
            inertia_inv,
        })
    }
}

/// Newton–Euler equations in body axes plus attitude and position kinematics.
///
/// `forces` are body-axis totals (aerodynamic + gravity + thrust);
/// `moments` body-axis totals about the centre of mass.
pub fn rigid_body_rates<T: Scalar>(
    state: &RigidBodyState<T>,
    forces: &[Vec3<T>],
    moments: &[Vec3<T>],
    props: &MassProperties,
) -> RigidBodyRates<T> {
    let sum = |vs: &[Vec3<T>]| {
        vs.iter().fold([T::zero(); 3], |acc, v| [acc[0] + v[0], acc[1] + v[1], acc[2] + v[2]])
    };
    let f = sum(forces);
    let m = sum(moments);
    let w = &state.omega_b;
    let wxv = cross(w, &state.v_b);
    let inv_m = 1.0 / props.mass;
    let v_dot = [
        f[0].scale(inv_m) - wxv[0],
        f[1].scale(inv_m) - wxv[1],
        f[2].scale(inv_m) - wxv[2],
    ];
    let iw = mat_vec(&props.inertia, w);
    let wxiw = cross(w, &iw);
    let omega_dot = mat_vec(&props.inertia_inv, &[m[0] - wxiw[0], m[1] - wxiw[1], m[2] - wxiw[2]]);
    let r = rotation_matrix(&state.zeta);
    let v = &state.v_b;
    let position_dot = [0, 1, 2].map(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2]);
    RigidBodyRates {
        v_dot,
        omega_dot,
        position_dot,
        zeta_dot: quat_rate(&state.zeta, w),
    }
}

/// Gravity force in body axes for a weight `mass * g` acting along inertial +z.
pub fn gravity_body<T: Scalar>(zeta: &[T; 4], mass: f64, g: f64) -> Vec3<T> {
    let r = rotation_matrix(zeta);
    // Body components of the inertial unit vector e_z: third row of R.
    [r[2][0], r[2][1], r[2][2]].map(|x| x.scale(mass * g))
}
