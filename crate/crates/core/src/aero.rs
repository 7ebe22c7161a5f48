//! Two-dimensional unsteady strip aerodynamics from indicial functions.
//!
//! The Theodorsen lift-deficiency function is never evaluated in the
//! frequency domain. Circulatory loads are built from the two-exponential
//! Wagner approximation through augmented states; gust loads from the
//! two-exponential Küssner approximation.
//!
//! Per strip the augmented state vector is
//! `[x_w1, x_w2, x_k1, x_k2]`, extended with `[x_f1, x_f2, x_r1, x_r2]`
//! when a trailing-edge flap is present. `x_w` lag the 3/4-chord downwash of
//! the section motion, `x_k` lag the gust, `x_f` and `x_r` lag the downwash
//! induced by flap deflection and flap rate respectively.
//!
//! Sign conventions: plunge `h` positive down, pitch `alpha` nose up, flap
//! `delta` trailing edge down, gust velocity positive up. `C_L` is positive
//! up, `C_m` and `C_h` are nose-up / flap-up-resisting moments about the
//! elastic axis and the hinge respectively, normalised by `q (2b)^2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two-exponential indicial-function coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndicialConstants {
    pub psi1: f64,
    pub psi2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub psi3: f64,
    pub psi4: f64,
    pub eps3: f64,
    pub eps4: f64,
}

pub const INDICIAL: IndicialConstants = IndicialConstants {
    psi1: 0.165,
    psi2: 0.335,
    eps1: 0.0455,
    eps2: 0.3,
    psi3: 0.5792,
    psi4: 0.4208,
    eps3: 0.1393,
    eps4: 1.802,
};

impl IndicialConstants {
    /// Wagner function at `tau = 0`.
    pub fn wagner_initial(&self) -> f64 {
        1.0 - self.psi1 - self.psi2
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "tau".into(),
            reason: format!("non-dimensional time must be >= 0, got {tau}"),
        })
    }
}

/// Wagner indicial lift function.
pub fn wagner(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let c = INDICIAL;
    Ok(1.0 - c.psi1 * (-c.eps1 * tau).exp() - c.psi2 * (-c.eps2 * tau).exp())
}

/// Küssner sharp-edged-gust function.
pub fn kussner(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let c = INDICIAL;
    Ok(1.0 - c.psi3 * (-c.eps3 * tau).exp() - c.psi4 * (-c.eps4 * tau).exp())
}

/// Section geometry and flight condition for one aerodynamic strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripGeometry {
    /// Semi-chord (m).
    pub b: f64,
    /// Elastic axis position from mid-chord in semi-chords, positive aft.
    pub a: f64,
    /// Freestream speed (m/s).
    pub u: f64,
    /// Air density (kg/m^3).
    pub rho: f64,
    /// Flap hinge position from mid-chord in semi-chords, when a flap is fitted.
    pub flap_hinge: Option<f64>,
}

impl StripGeometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(Error::InvalidParameter {
                name: name.into(),
                reason: reason.into(),
            })
        };
        if !(self.b > 0.0) {
            return bad("b", "semi-chord must be positive");
        }
        if !(self.u > 0.0) {
            return bad("U", "freestream speed must be positive");
        }
        if !(self.rho > 0.0) {
            return bad("rho", "density must be positive");
        }
        if !(self.a.abs() < 1.0) {
            return bad("a", "elastic axis must lie inside the chord (|a| < 1)");
        }
        if let Some(c) = self.flap_hinge {
            if !(c.abs() < 1.0) {
                return bad("flap_hinge", "hinge must lie inside the chord (|c| < 1)");
            }
        }
        Ok(())
    }

    pub fn has_flap(&self) -> bool {
        self.flap_hinge.is_some()
    }

    /// Number of augmented states carried by this strip.
    pub fn n_aug(&self) -> usize {
        if self.has_flap() {
            8
        } else {
            4
        }
    }

    pub fn flap_coefficients(&self) -> Option<FlapCoefficients> {
        self.flap_hinge.map(FlapCoefficients::new)
    }
}

/// Theodorsen geometric flap coefficients for a hinge at `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlapCoefficients {
    pub c: f64,
    pub t1: f64,
    pub t4: f64,
    pub t7: f64,
    pub t8: f64,
    pub t10: f64,
    pub t11: f64,
    pub t12: f64,
}

impl FlapCoefficients {
    pub fn new(c: f64) -> Self {
        let s = (1.0 - c * c).sqrt();
        let ac = c.acos();
        Self {
            c,
            t1: -s * (2.0 + c * c) / 3.0 + c * ac,
            t4: -ac + c * s,
            t7: -(0.125 + c * c) * ac + 0.125 * c * s * (7.0 + 2.0 * c * c),
            t8: -s * (2.0 * c * c + 1.0) / 3.0 + c * ac,
            t10: s + ac,
            t11: ac * (1.0 - 2.0 * c) + s * (2.0 - c),
            t12: s * (2.0 + c) - ac * (2.0 * c + 1.0),
        }
    }
}

/// Kinematics of a section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionMotion<T> {
    pub alpha: T,
    pub alpha_dot: T,
    /// Plunge rate (positive down), m/s.
    pub h_dot: T,
    pub delta: T,
    pub delta_dot: T,
}

impl<T: Scalar> SectionMotion<T> {
    pub fn rigid(alpha: T, alpha_dot: T, h_dot: T) -> Self {
        Self {
            alpha,
            alpha_dot,
            h_dot,
            delta: T::zero(),
            delta_dot: T::zero(),
        }
    }
}

/// Loads that do not depend on section accelerations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripLoads<T> {
    pub cl: T,
    pub cm: T,
    pub ch: T,
}

/// Coefficients of the apparent-mass loads with respect to the section
/// accelerations `(h_ddot, alpha_ddot, delta_ddot)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApparentMass {
    pub cl: [f64; 3],
    pub cm: [f64; 3],
    pub ch: [f64; 3],
}

/// Apparent-mass (non-circulatory acceleration) coefficients of a strip.
pub fn apparent_mass(geom: &StripGeometry) -> ApparentMass {
    let (b, a, u) = (geom.b, geom.a, geom.u);
    let k1 = b / (u * u);
    let k2 = b * b / (u * u);
    let mut out = ApparentMass {
        cl: [PI * k1, -PI * a * k2, 0.0],
        cm: [0.5 * PI * a * k1, -0.5 * PI * (0.125 + a * a) * k2, 0.0],
        ch: [0.0; 3],
    };
    if let Some(f) = geom.flap_coefficients() {
        out.cl[2] = -f.t1 * k2;
        out.cm[2] = 0.5 * (f.t7 + (f.c - a) * f.t1) * k2;
    }
    out
}

/// 3/4-chord downwash from section motion, normalised by `U`.
pub fn motion_downwash<T: Scalar>(geom: &StripGeometry, m: &SectionMotion<T>) -> T {
    let inv_u = 1.0 / geom.u;
    m.alpha + m.h_dot.scale(inv_u) + m.alpha_dot.scale((0.5 - geom.a) * geom.b * inv_u)
}

/// Rates of the augmented states and the acceleration-free part of the loads.
///
/// `aug` holds 4 states without a flap and 8 with one; `rates` has the same
/// length. Rates are with respect to dimensional time.
pub fn strip_state_rates<T: Scalar>(
    geom: &StripGeometry,
    motion: &SectionMotion<T>,
    gust_velocity: T,
    aug: &[T],
    rates: &mut [T],
) -> StripLoads<T> {
    let c = INDICIAL;
    let rate = geom.u / geom.b;
    let inv_u = 1.0 / geom.u;
    let w_motion = motion_downwash(geom, motion);
    let w_gust = gust_velocity.scale(inv_u);

    rates[0] = (w_motion - aug[0].scale(c.eps1)).scale(rate);
    rates[1] = (w_motion - aug[1].scale(c.eps2)).scale(rate);
    rates[2] = (w_gust - aug[2].scale(c.eps3)).scale(rate);
    rates[3] = (w_gust - aug[3].scale(c.eps4)).scale(rate);

    let phi0 = c.wagner_initial();
    let mut alpha_eff = w_motion.scale(phi0)
        + aug[0].scale(c.psi1 * c.eps1)
        + aug[1].scale(c.psi2 * c.eps2);
    let alpha_gust = aug[2].scale(c.psi3 * c.eps3) + aug[3].scale(c.psi4 * c.eps4);

    let (b, a) = (geom.b, geom.a);
    let bu = b * inv_u;
    // Non-circulatory rate terms.
    let mut cl = motion.alpha_dot.scale(PI * bu);
    let mut cm = motion.alpha_dot.scale(-0.5 * PI * (0.5 - a) * bu);
    let mut ch = T::zero();

    if let Some(f) = geom.flap_coefficients() {
        let w_flap_angle = motion.delta.scale(f.t10 / PI);
        let w_flap_rate = motion.delta_dot.scale(f.t11 * bu / (2.0 * PI));
        rates[4] = (w_flap_angle - aug[4].scale(c.eps1)).scale(rate);
        rates[5] = (w_flap_angle - aug[5].scale(c.eps2)).scale(rate);
        rates[6] = (w_flap_rate - aug[6].scale(c.eps1)).scale(rate);
        rates[7] = (w_flap_rate - aug[7].scale(c.eps2)).scale(rate);
        alpha_eff += (w_flap_angle + w_flap_rate).scale(phi0)
            + (aug[4] + aug[6]).scale(c.psi1 * c.eps1)
            + (aug[5] + aug[7]).scale(c.psi2 * c.eps2);

        cl -= motion.delta_dot.scale(f.t4 * bu);
        cm -= (motion.delta.scale(f.t4 + f.t10)
            + motion.delta_dot.scale((f.t1 - f.t8 - (f.c - a) * f.t4 + 0.5 * f.t11) * bu))
            .scale(0.5);
        // Hinge moment: circulatory part plus the quasi-steady flap-rate damping term.
        ch = alpha_eff.scale(-0.5 * f.t12) + motion.delta_dot.scale(f.t4 * f.t11 * bu / (4.0 * PI));
    }

    cl += (alpha_eff + alpha_gust).scale(2.0 * PI);
    cm += (alpha_eff + alpha_gust).scale(PI * (0.5 + a));
    StripLoads { cl, cm, ch }
}

/// Augmented states at their fixed point for a steady section condition.
pub fn steady_aug_states(geom: &StripGeometry, motion: &SectionMotion<f64>, gust_velocity: f64) -> Vec<f64> {
    let c = INDICIAL;
    let w = motion_downwash(geom, motion);
    let wg = gust_velocity / geom.u;
    let mut x = vec![w / c.eps1, w / c.eps2, wg / c.eps3, wg / c.eps4];
    if let Some(f) = geom.flap_coefficients() {
        let wf = motion.delta * f.t10 / PI;
        let wr = motion.delta_dot * f.t11 * geom.b / (geom.u * 2.0 * PI);
        x.extend([wf / c.eps1, wf / c.eps2, wr / c.eps1, wr / c.eps2]);
    }
    x
}
