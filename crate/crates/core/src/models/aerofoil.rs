//! Pitch–plunge–flap aerofoil with cubic hardening springs and indicial aerodynamics.
//!
//! The model clock is non-dimensional time `tau = U t / b`. States:
//! `[x_w1, x_w2, x_k1, x_k2, x_f1, x_f2, x_r1, x_r2, xi, alpha, delta, xi', alpha', delta']`
//! with `xi = h / b`. The control input is a non-dimensional flap hinge
//! moment; the disturbance is the vertical gust velocity over `U`.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aero::{apparent_mass, strip_state_rates, SectionMotion, StripGeometry};
use crate::eig::eigenvalues;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::statespace::{jacobian_fd, FomModel, StateLayout, TrimState};

const N_AUG: usize = 8;
const N_STATE: usize = 14;

/// Non-dimensional aerofoil parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AerofoilParams {
    #[serde(rename = "U_star")]
    pub u_star: f64,
    /// Reference linear flutter speed; informational.
    #[serde(rename = "U_L_star")]
    pub u_l_star: f64,
    pub mu: f64,
    /// Plunge-to-pitch natural frequency ratio.
    pub omega_bar: f64,
    /// Flap-to-pitch natural frequency ratio.
    pub omega_bar_delta: f64,
    pub a: f64,
    /// Flap hinge position from mid-chord in semi-chords.
    pub c: f64,
    pub x_alpha: f64,
    pub r_alpha: f64,
    pub x_delta: f64,
    pub r_delta: f64,
    /// Structural damping ratios for (plunge, pitch, flap).
    pub zeta_struct: [f64; 3],
    #[serde(rename = "K_alpha3")]
    pub k_alpha3: f64,
    #[serde(rename = "K_xi3")]
    pub k_xi3: f64,
    /// Switch for all aerodynamic loads.
    pub aero: bool,
}

impl Default for AerofoilParams {
    /// Case 1 section (mu = 100, omega_bar = 0.2, a = -0.5, x_alpha = 0.25,
    /// r_alpha = 0.5) with a light, stiff trailing-edge flap.
    fn default() -> Self {
        Self {
            u_star: 0.9 * 6.285,
            u_l_star: 6.285,
            mu: 100.0,
            omega_bar: 0.2,
            omega_bar_delta: 3.0,
            a: -0.5,
            c: 0.6,
            x_alpha: 0.25,
            r_alpha: 0.5,
            x_delta: 0.0025,
            r_delta: 0.06,
            zeta_struct: [0.0; 3],
            k_alpha3: 3.0,
            k_xi3: 1.0,
            aero: true,
        }
    }
}

impl AerofoilParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(Error::InvalidParameter {
                name: name.into(),
                reason: reason.into(),
            })
        };
        if !(self.mu > 0.0) {
            return bad("mu", "mass ratio must be positive");
        }
        if !(self.r_alpha > 0.0) {
            return bad("r_alpha", "radius of gyration must be positive");
        }
        if !(self.r_delta > 0.0) {
            return bad("r_delta", "flap radius of gyration must be positive");
        }
        if !(self.u_star > 0.0) {
            return bad("U_star", "freestream speed must be positive");
        }
        if !(self.omega_bar > 0.0 && self.omega_bar_delta > 0.0) {
            return bad("omega_bar", "frequency ratios must be positive");
        }
        if !(self.a.abs() < 1.0) || !(self.c.abs() < 1.0) || self.c <= self.a {
            return bad("c", "need |a| < 1, |c| < 1 and hinge aft of the elastic axis");
        }
        if self.zeta_struct.iter().any(|z| !(*z >= 0.0)) {
            return bad("zeta_struct", "damping ratios must be non-negative");
        }
        if structural_mass(self).cholesky().is_none() {
            return bad("x_delta", "structural mass matrix is not positive definite");
        }
        Ok(())
    }
}

/// Cubic pitch restoring moment `K_alpha alpha + K_alpha3 alpha^3`.
pub fn restoring_moment(alpha: f64, k_alpha: f64, k_alpha3: f64) -> f64 {
    k_alpha * alpha + k_alpha3 * alpha.powi(3)
}

/// Cubic plunge restoring force `K_xi xi + K_xi3 xi^3`.
pub fn restoring_force(xi: f64, k_xi: f64, k_xi3: f64) -> f64 {
    k_xi * xi + k_xi3 * xi.powi(3)
}

fn structural_mass(p: &AerofoilParams) -> Matrix3<f64> {
    let coupling = p.r_delta * p.r_delta + p.x_delta * (p.c - p.a);
    Matrix3::new(
        1.0, p.x_alpha, p.x_delta,
        p.x_alpha, p.r_alpha * p.r_alpha, coupling,
        p.x_delta, coupling, p.r_delta * p.r_delta,
    )
}

/// The 14-state aerofoil full-order model.
#[derive(Clone, Debug)]
pub struct AerofoilModel {
    params: AerofoilParams,
    geom: StripGeometry,
    mass_inv: Matrix3<f64>,
}

pub fn build_aerofoil_fom(params: AerofoilParams) -> Result<AerofoilModel> {
    params.validate()?;
    let geom = StripGeometry {
        b: 1.0,
        a: params.a,
        u: 1.0,
        rho: 1.0,
        flap_hinge: Some(params.c),
    };
    let mut mass = structural_mass(&params);
    if params.aero {
        let am = apparent_mass(&geom);
        let k = 1.0 / (std::f64::consts::PI * params.mu);
        for j in 0..3 {
            mass[(0, j)] += k * am.cl[j];
            mass[(1, j)] -= 2.0 * k * am.cm[j];
            mass[(2, j)] -= 2.0 * k * am.ch[j];
        }
    }
    let mass_inv = mass
        .try_inverse()
        .ok_or(Error::Singular("aerofoil mass matrix"))?;
    Ok(AerofoilModel {
        params,
        geom,
        mass_inv,
    })
}

impl AerofoilModel {
    pub fn params(&self) -> &AerofoilParams {
        &self.params
    }

    fn eval<T: Scalar>(&self, w: &[T], uc: &[T], ud: &[T], out: &mut [T]) -> T {
        let p = &self.params;
        let (aug, rest) = w.split_at(N_AUG);
        let (xi, alpha, delta) = (rest[0], rest[1], rest[2]);
        let (dxi, dalpha, ddelta) = (rest[3], rest[4], rest[5]);
        let inv_u = 1.0 / p.u_star;
        let kxi = (p.omega_bar * inv_u).powi(2);
        let kal = p.r_alpha * p.r_alpha * inv_u * inv_u;
        let kde = p.r_delta * p.r_delta * (p.omega_bar_delta * inv_u).powi(2);

        let mut f = [
            -(dxi.scale(2.0 * p.zeta_struct[0] * p.omega_bar * inv_u)
                + (xi + xi * xi * xi.scale(p.k_xi3)).scale(kxi)),
            -(dalpha.scale(2.0 * p.zeta_struct[1] * p.r_alpha * p.r_alpha * inv_u)
                + (alpha + alpha * alpha * alpha.scale(p.k_alpha3)).scale(kal)),
            -(ddelta.scale(2.0 * p.zeta_struct[2] * p.r_delta * p.r_delta * p.omega_bar_delta * inv_u)
                + delta.scale(kde))
                + uc[0],
        ];

        let mut cl = T::zero();
        if p.aero {
            let motion = SectionMotion {
                alpha,
                alpha_dot: dalpha,
                h_dot: dxi,
                delta,
                delta_dot: ddelta,
            };
            let loads = strip_state_rates(&self.geom, &motion, ud[0], aug, &mut out[..N_AUG]);
            let k = 1.0 / (std::f64::consts::PI * p.mu);
            f[0] -= loads.cl.scale(k);
            f[1] += loads.cm.scale(2.0 * k);
            f[2] += loads.ch.scale(2.0 * k);
            cl = loads.cl;
        } else {
            // Lag states decay on their own when the aerodynamics are switched off.
            let c = crate::aero::INDICIAL;
            let eps = [c.eps1, c.eps2, c.eps3, c.eps4, c.eps1, c.eps2, c.eps1, c.eps2];
            for i in 0..N_AUG {
                out[i] = -aug[i].scale(eps[i]);
            }
        }

        out[N_AUG] = dxi;
        out[N_AUG + 1] = dalpha;
        out[N_AUG + 2] = ddelta;
        for r in 0..3 {
            let mut acc = T::zero();
            for c in 0..3 {
                acc += f[c].scale(self.mass_inv[(r, c)]);
            }
            out[N_AUG + 3 + r] = acc;
        }
        cl
    }

    /// Total lift coefficient including the apparent-mass contribution.
    pub fn lift_coefficient(&self, w: &[f64], uc: &[f64], ud: &[f64]) -> f64 {
        let mut rates = vec![0.0; N_STATE];
        let cl = self.eval(w, uc, ud, &mut rates);
        if !self.params.aero {
            return 0.0;
        }
        let am = apparent_mass(&self.geom);
        cl + (0..3).map(|j| am.cl[j] * rates[N_AUG + 3 + j]).sum::<f64>()
    }
}

impl FomModel for AerofoilModel {
    fn name(&self) -> &str {
        "aerofoil3dof"
    }

    fn layout(&self) -> StateLayout {
        StateLayout {
            n_f: N_AUG,
            n_s: 6,
            n_r: 0,
            n_c: 1,
            n_d: 1,
        }
    }

    fn residual_real(&self, w: &[f64], uc: &[f64], ud: &[f64], out: &mut [f64]) {
        self.eval(w, uc, ud, out);
    }

    fn residual_complex(&self, w: &[Complex64], uc: &[Complex64], ud: &[Complex64], out: &mut [Complex64]) {
        self.eval(w, uc, ud, out);
    }

    fn time_unit(&self) -> &str {
        "tau"
    }

    fn output_names(&self) -> Vec<String> {
        ["xi", "alpha", "delta", "C_L"].iter().map(|s| s.to_string()).collect()
    }

    fn outputs(&self, w: &[f64], uc: &[f64], ud: &[f64]) -> Vec<f64> {
        vec![w[N_AUG], w[N_AUG + 1], w[N_AUG + 2], self.lift_coefficient(w, uc, ud)]
    }

    fn describe(&self) -> String {
        format!("aerofoil3dof {:?}", self.params)
    }
}

/// Index of the pitch state.
pub const ALPHA_INDEX: usize = N_AUG + 1;
/// Index of the plunge state.
pub const XI_INDEX: usize = N_AUG;
/// Index of the flap state.
pub const DELTA_INDEX: usize = N_AUG + 2;

/// Eigenvalue branches along a speed sweep.
#[derive(Clone, Debug)]
pub struct FlutterScan {
    /// Linear flutter speed, if the least-damped complex branch crosses into
    /// the right half-plane inside the range.
    pub crossing: Option<f64>,
    pub speeds: Vec<f64>,
    /// Eigenvalues at each speed, sorted by imaginary then real part.
    pub traces: Vec<Vec<Complex64>>,
}

fn linear_spectrum(params: &AerofoilParams, u_star: f64) -> Result<Vec<Complex64>> {
    let mut p = params.clone();
    p.u_star = u_star;
    let model = build_aerofoil_fom(p)?;
    let trim = TrimState {
        w0: vec![0.0; N_STATE],
        uc0: vec![0.0],
        ud0: vec![0.0],
        residual_norm: 0.0,
        iterations: 0,
    };
    let jac = jacobian_fd(&model, &trim, 1e-6)?;
    let mut eig = eigenvalues(&jac.matrix)?;
    eig.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    Ok(eig)
}

/// Largest real part among oscillatory eigenvalues.
fn least_damped_growth(eig: &[Complex64]) -> f64 {
    eig.iter()
        .filter(|l| l.im.abs() > 1e-8)
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sweeps `U*` over `[u_min, u_max]` and bisects the first zero crossing of
/// the least-damped oscillatory branch.
pub fn flutter_speed_scan(params: &AerofoilParams, u_min: f64, u_max: f64, steps: usize) -> Result<FlutterScan> {
    if !(u_min > 0.0 && u_max > u_min) || steps < 2 {
        return Err(Error::InvalidParameter {
            name: "U_range".into(),
            reason: "need 0 < U_min < U_max and at least two steps".into(),
        });
    }
    let speeds: Vec<f64> = (0..steps)
        .map(|i| u_min + (u_max - u_min) * i as f64 / (steps - 1) as f64)
        .collect();
    let mut traces = Vec::with_capacity(steps);
    for &u in &speeds {
        traces.push(linear_spectrum(params, u)?);
    }
    let growth: Vec<f64> = traces.iter().map(|t| least_damped_growth(t)).collect();
    let tol = 1e-10;
    let mut crossing = None;
    for i in 1..steps {
        if growth[i - 1] <= tol && growth[i] > tol {
            let (mut lo, mut hi) = (speeds[i - 1], speeds[i]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if least_damped_growth(&linear_spectrum(params, mid)?) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-10 * hi {
                    break;
                }
            }
            crossing = Some(0.5 * (lo + hi));
            break;
        }
    }
    Ok(FlutterScan {
        crossing,
        speeds,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::evaluate_residual;

    #[test]
    fn case1_layout() {
        let m = build_aerofoil_fom(AerofoilParams::default()).unwrap();
        let l = m.layout();
        assert_eq!((l.n(), l.n_f, l.n_s), (14, 8, 6));
    }

    #[test]
    fn restoring_terms_are_odd_cubics() {
        assert_eq!(restoring_moment(0.0, 1.0, 3.0), 0.0);
        assert!((restoring_moment(0.1, 1.0, 3.0) - 0.103).abs() < 1e-15);
        for a in [0.01, 0.2, 0.7] {
            assert_eq!(restoring_moment(-a, 1.0, 3.0), -restoring_moment(a, 1.0, 3.0));
            assert_eq!(restoring_force(-a, 1.0, 1.0), -restoring_force(a, 1.0, 1.0));
        }
    }

    #[test]
    fn zero_state_is_equilibrium() {
        let m = build_aerofoil_fom(AerofoilParams::default()).unwrap();
        let r = evaluate_residual(&m, &[0.0; 14], &[0.0], &[0.0]).unwrap();
        assert!(r.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn rejects_bad_params() {
        let p = AerofoilParams {
            mu: -1.0,
            ..Default::default()
        };
        assert!(build_aerofoil_fom(p).is_err());
    }

    #[test]
    fn structural_only_model_never_flutters() {
        let p = AerofoilParams {
            aero: false,
            ..Default::default()
        };
        let scan = flutter_speed_scan(&p, 2.0, 10.0, 9).unwrap();
        assert!(scan.crossing.is_none());
        for t in &scan.traces {
            assert!(t.iter().all(|l| l.re <= 1e-9));
        }
    }
}
