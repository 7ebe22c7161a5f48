//! Flexible wing proxy: clamped Euler–Bernoulli/St-Venant beam with cubic
//! stiffening, strip aerodynamics per element midpoint and optional
//! free-flight rigid-body states.
//!
//! The modelled half-wing runs from the root (`y = 0`, clamped to the body)
//! to the tip (`y = span / 2`). Each free node carries `(w, w', theta)`:
//! vertical displacement (up), bending slope and nose-up twist about the
//! elastic axis; the centre of mass of every section lies on the elastic axis.
//! In-plane bending is not modelled, so `EI3` only enters the parameter
//! fingerprint.
//!
//! State order: strip augmented states, then `q`, then `q'`, then (free
//! flight) `[v_B, omega_B, position, integrated body rates, zeta]`.
//!
//! The stiffness convention is `K / sigma`: larger `sigma` means a softer wing.
//! The cubic stiffening energy per element is `kappa/4 * L_e * s^4` with
//! `s` the element chord slope, the form of the membrane-stretching term of a
//! beam with restrained ends; it is scaled by `1 / sigma` as well.

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aero::{apparent_mass, strip_state_rates, SectionMotion, StripGeometry, INDICIAL};
use crate::error::{Error, Result};
use crate::models::rigid::{gravity_body, rigid_body_rates, MassProperties, RigidBodyState};
use crate::scalar::Scalar;
use crate::statespace::{FomModel, StateLayout};

const DOF: usize = 3;
const N_RIGID: usize = 16;
const GRAVITY: f64 = 9.80665;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WingParams {
    /// Full span (m); the model carries one half.
    pub span: f64,
    pub chord: f64,
    pub mass_per_length: f64,
    /// Torsional mass moment of inertia per unit length (kg m).
    pub torsional_inertia: f64,
    #[serde(rename = "GJ")]
    pub gj: f64,
    #[serde(rename = "EI2")]
    pub ei2: f64,
    #[serde(rename = "EI3")]
    pub ei3: f64,
    /// Flexibility scaling: the stiffness is `K / sigma`.
    pub sigma: f64,
    pub n_elements: usize,
    pub n_strips: usize,
    /// `kappa = coeff * EI2 / (half span)^2`, before the `1 / sigma` scaling.
    pub cubic_stiffening_coeff: f64,
    /// Elastic axis as a fraction of chord from the leading edge.
    pub elastic_axis: f64,
    pub altitude_density: f64,
    #[serde(rename = "U")]
    pub u: f64,
    /// Rigid incidence of every section (rad).
    pub root_incidence: f64,
    /// Stiffness-proportional (Rayleigh) damping coefficient (s).
    pub stiffness_damping: f64,
    pub aero: bool,
    /// Trailing-edge flap on every strip, driven by the control input (rad).
    pub flap: bool,
    /// Flap chord as a fraction of chord.
    pub flap_chord: f64,
    pub free_flight: bool,
    pub gravity: bool,
    pub payload_mass: f64,
    /// Constant thrust along body x (N).
    pub thrust: f64,
}

impl Default for WingParams {
    fn default() -> Self {
        Self {
            span: 32.0,
            chord: 1.0,
            mass_per_length: 10.0,
            torsional_inertia: 0.625,
            gj: 1.25e4,
            ei2: 2.5e4,
            ei3: 6.25e6,
            sigma: 1.0,
            n_elements: 40,
            n_strips: 40,
            cubic_stiffening_coeff: 10.0,
            elastic_axis: 0.25,
            altitude_density: 0.0889,
            u: 25.0,
            root_incidence: 1f64.to_radians(),
            stiffness_damping: 2e-5,
            aero: true,
            flap: false,
            flap_chord: 0.1,
            free_flight: false,
            gravity: true,
            payload_mass: 0.0,
            thrust: 0.0,
        }
    }
}

impl WingParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(Error::InvalidParameter {
                name: name.into(),
                reason: reason.into(),
            })
        };
        for (name, v) in [
            ("span", self.span),
            ("chord", self.chord),
            ("mass_per_length", self.mass_per_length),
            ("torsional_inertia", self.torsional_inertia),
            ("GJ", self.gj),
            ("EI2", self.ei2),
            ("EI3", self.ei3),
            ("sigma", self.sigma),
            ("altitude_density", self.altitude_density),
            ("U", self.u),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, "must be positive and finite");
            }
        }
        if self.n_elements == 0 {
            return bad("n_elements", "need at least one element");
        }
        if self.n_strips == 0 || self.n_strips > self.n_elements + 1 {
            return bad("n_strips", "need 1 <= n_strips <= n_elements + 1");
        }
        if !(self.cubic_stiffening_coeff >= 0.0) || !(self.stiffness_damping >= 0.0) {
            return bad("cubic_stiffening_coeff", "stiffening and damping must be non-negative");
        }
        if !(self.elastic_axis > 0.0 && self.elastic_axis < 1.0) {
            return bad("elastic_axis", "must lie inside the chord");
        }
        if self.flap && !(self.flap_chord > 0.0 && self.flap_chord < 1.0 - self.elastic_axis) {
            return bad("flap_chord", "flap must lie aft of the elastic axis");
        }
        if !(self.payload_mass >= 0.0) || !self.thrust.is_finite() || !self.root_incidence.is_finite() {
            return bad("payload_mass", "must be non-negative; thrust and incidence finite");
        }
        Ok(())
    }

    pub fn half_span(&self) -> f64 {
        0.5 * self.span
    }

    fn geometry(&self) -> StripGeometry {
        let b = 0.5 * self.chord;
        StripGeometry {
            b,
            a: 2.0 * self.elastic_axis - 1.0,
            u: self.u,
            rho: self.altitude_density,
            flap_hinge: self.flap.then(|| 1.0 - 2.0 * self.flap_chord),
        }
    }
}

/// Interpolation of beam displacements at one spanwise station.
#[derive(Clone, Debug)]
struct Station {
    /// `(dof, weight)` for `w(y)`.
    w: Vec<(usize, f64)>,
    /// `(dof, weight)` for `theta(y)`.
    theta: Vec<(usize, f64)>,
    y: f64,
    width: f64,
}

/// Banded lower Cholesky factor: row `i` holds `L[i, start_i..=i]`.
#[derive(Clone, Debug)]
struct BandCholesky {
    rows: Vec<(usize, Vec<f64>)>,
}

impl BandCholesky {
    fn new(m: &DMatrix<f64>) -> Result<Self> {
        let l = m
            .clone()
            .cholesky()
            .ok_or(Error::Singular("wing mass matrix is not positive definite"))?
            .unpack();
        let n = m.nrows();
        let rows = (0..n)
            .map(|i| {
                let start = (0..=i).find(|&j| l[(i, j)] != 0.0).unwrap_or(i);
                (start, (start..=i).map(|j| l[(i, j)]).collect())
            })
            .collect();
        Ok(Self { rows })
    }

    fn solve_in_place<T: Scalar>(&self, x: &mut [T]) {
        let n = x.len();
        for i in 0..n {
            let (s, row) = &self.rows[i];
            let mut acc = x[i];
            for (k, v) in row[..row.len() - 1].iter().enumerate() {
                acc -= x[s + k].scale(*v);
            }
            x[i] = acc.scale(1.0 / row[row.len() - 1]);
        }
        for i in (0..n).rev() {
            let (s, row) = &self.rows[i];
            let xi = x[i].scale(1.0 / row[row.len() - 1]);
            x[i] = xi;
            for (k, v) in row[..row.len() - 1].iter().enumerate() {
                x[s + k] -= xi.scale(*v);
            }
        }
    }
}

/// Sparse symmetric matrix as row lists.
#[derive(Clone, Debug)]
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn from_dense(m: &DMatrix<f64>) -> Self {
        Self {
            rows: (0..m.nrows())
                .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
                .collect(),
        }
    }

    fn mul_into<T: Scalar>(&self, x: &[T], out: &mut [T]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            let mut acc = T::zero();
            for &(j, v) in row {
                acc += x[j].scale(v);
            }
            *o = acc;
        }
    }
}

/// The assembled wing model.
#[derive(Clone, Debug)]
pub struct FlexWing {
    params: WingParams,
    geom: StripGeometry,
    n_q: usize,
    n_aug: usize,
    stations: Vec<Station>,
    stiffness: SparseRows,
    mass_factor: BandCholesky,
    kappa: f64,
    elem_len: f64,
    mass_props: Option<MassProperties>,
    /// Dense copies kept for frequency checks.
    mass_structural: DMatrix<f64>,
    stiffness_dense: DMatrix<f64>,
}

/// Hermite shape functions on `[0, 1]` with element length `le`.
fn hermite(xi: f64, le: f64) -> [f64; 4] {
    let (x2, x3) = (xi * xi, xi * xi * xi);
    [
        1.0 - 3.0 * x2 + 2.0 * x3,
        le * (xi - 2.0 * x2 + x3),
        3.0 * x2 - 2.0 * x3,
        le * (x3 - x2),
    ]
}

/// Global dof index of node `node` (1-based free nodes) component `c`.
fn dof(node: usize, c: usize) -> Option<usize> {
    (node > 0).then(|| (node - 1) * DOF + c)
}

fn element_matrices(p: &WingParams, le: f64) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    // Local order: (w_i, w'_i, theta_i, w_j, w'_j, theta_j).
    let mut k = [[0.0; 6]; 6];
    let mut m = [[0.0; 6]; 6];
    let bend = [0usize, 1, 3, 4];
    let ei = p.ei2 / le.powi(3);
    let kb = [
        [12.0, 6.0 * le, -12.0, 6.0 * le],
        [6.0 * le, 4.0 * le * le, -6.0 * le, 2.0 * le * le],
        [-12.0, -6.0 * le, 12.0, -6.0 * le],
        [6.0 * le, 2.0 * le * le, -6.0 * le, 4.0 * le * le],
    ];
    let mm = p.mass_per_length * le / 420.0;
    let mb = [
        [156.0, 22.0 * le, 54.0, -13.0 * le],
        [22.0 * le, 4.0 * le * le, 13.0 * le, -3.0 * le * le],
        [54.0, 13.0 * le, 156.0, -22.0 * le],
        [-13.0 * le, -3.0 * le * le, -22.0 * le, 4.0 * le * le],
    ];
    for r in 0..4 {
        for c in 0..4 {
            k[bend[r]][bend[c]] = ei * kb[r][c];
            m[bend[r]][bend[c]] = mm * mb[r][c];
        }
    }
    let tors = [2usize, 5];
    let gj = p.gj / le;
    let it = p.torsional_inertia * le / 6.0;
    for r in 0..2 {
        for c in 0..2 {
            k[tors[r]][tors[c]] = gj * if r == c { 1.0 } else { -1.0 };
            m[tors[r]][tors[c]] = it * if r == c { 2.0 } else { 1.0 };
        }
    }
    (k, m)
}

pub fn build_flexwing_fom(params: WingParams) -> Result<FlexWing> {
    params.validate()?;
    let ne = params.n_elements;
    let n_q = DOF * ne;
    let half = params.half_span();
    let le = half / ne as f64;
    let (ke, me) = element_matrices(&params, le);
    let mut k = DMatrix::<f64>::zeros(n_q, n_q);
    let mut m = DMatrix::<f64>::zeros(n_q, n_q);
    for e in 0..ne {
        let map: Vec<Option<usize>> = (0..6).map(|l| dof(e + l / 3, l % 3)).collect();
        for r in 0..6 {
            for c in 0..6 {
                if let (Some(i), Some(j)) = (map[r], map[c]) {
                    k[(i, j)] += ke[r][c] / params.sigma;
                    m[(i, j)] += me[r][c];
                }
            }
        }
    }

    let geom = params.geometry();
    geom.validate()?;
    let ns = params.n_strips;
    let width = half / ns as f64;
    let stations: Vec<Station> = (0..ns)
        .map(|s| {
            let y = (s as f64 + 0.5) * width;
            let e = ((y / le).floor() as usize).min(ne - 1);
            let xi = (y - e as f64 * le) / le;
            let h = hermite(xi, le);
            let w = [(e, 0, h[0]), (e, 1, h[1]), (e + 1, 0, h[2]), (e + 1, 1, h[3])]
                .iter()
                .filter_map(|&(node, c, v)| dof(node, c).map(|d| (d, v)))
                .collect();
            let theta = [(e, 1.0 - xi), (e + 1, xi)]
                .iter()
                .filter_map(|&(node, v)| dof(node, 2).map(|d| (d, v)))
                .collect();
            Station { w, theta, y, width }
        })
        .collect();

    let mut m_total = m.clone();
    if params.aero {
        // Apparent mass: with h = -w, the section loads contribute
        // -q dS [2b N_w^T (-cl_h N_w + cl_a N_t) + 4b^2 N_t^T (-cm_h N_w + cm_a N_t)]
        // to the left-hand side.
        let am = apparent_mass(&geom);
        let qdyn = 0.5 * geom.rho * geom.u * geom.u;
        let b = geom.b;
        for st in &stations {
            let f = qdyn * st.width;
            let lift = |kin_w: f64, kin_t: f64| 2.0 * b * (-am.cl[0] * kin_w + am.cl[1] * kin_t);
            let mom = |kin_w: f64, kin_t: f64| 4.0 * b * b * (-am.cm[0] * kin_w + am.cm[1] * kin_t);
            for &(i, ni) in &st.w {
                for &(j, nj) in &st.w {
                    m_total[(i, j)] -= f * ni * lift(nj, 0.0);
                }
                for &(j, tj) in &st.theta {
                    m_total[(i, j)] -= f * ni * lift(0.0, tj);
                }
            }
            for &(i, ti) in &st.theta {
                for &(j, nj) in &st.w {
                    m_total[(i, j)] -= f * ti * mom(nj, 0.0);
                }
                for &(j, tj) in &st.theta {
                    m_total[(i, j)] -= f * ti * mom(0.0, tj);
                }
            }
        }
        // Symmetrize round-off before factorization.
        m_total = (&m_total + m_total.transpose()) * 0.5;
    }
    let mass_factor = BandCholesky::new(&m_total)?;

    let mass_props = if params.free_flight {
        let mass = 2.0 * params.mass_per_length * half + params.payload_mass;
        let ixx = 2.0 * params.mass_per_length * half.powi(3) / 3.0;
        let iyy = 2.0 * params.torsional_inertia * half;
        Some(MassProperties::new(mass, Matrix3::from_diagonal(&Vector3::new(ixx, iyy, ixx + iyy)))?)
    } else {
        None
    };

    Ok(FlexWing {
        kappa: params.cubic_stiffening_coeff * params.ei2 / (half * half * params.sigma),
        geom,
        n_q,
        n_aug: geom.n_aug(),
        stations,
        stiffness: SparseRows::from_dense(&k),
        mass_factor,
        elem_len: le,
        mass_props,
        mass_structural: m,
        stiffness_dense: k,
        params,
    })
}

impl FlexWing {
    pub fn params(&self) -> &WingParams {
        &self.params
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    fn n_f(&self) -> usize {
        self.n_aug * self.stations.len()
    }

    /// Index of the tip vertical displacement in the state vector.
    pub fn tip_index(&self) -> usize {
        self.n_f() + self.n_q - DOF
    }

    /// Index of the tip twist in the state vector.
    pub fn tip_twist_index(&self) -> usize {
        self.n_f() + self.n_q - 1
    }

    /// Start of the rigid-body block, when flying free.
    pub fn rigid_offset(&self) -> Option<usize> {
        self.params.free_flight.then(|| self.n_f() + 2 * self.n_q)
    }

    /// Rigid-body mass properties of the whole aircraft, when flying free.
    pub fn mass_properties(&self) -> Option<&MassProperties> {
        self.mass_props.as_ref()
    }

    /// Structural mass and (sigma-scaled) stiffness over the free dofs.
    pub fn structural_matrices(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.mass_structural, &self.stiffness_dense)
    }

    /// Undamped natural frequencies (rad/s) of the clamped structure in vacuo.
    pub fn natural_frequencies(&self) -> Result<Vec<f64>> {
        let l = self
            .mass_structural
            .clone()
            .cholesky()
            .ok_or(Error::Singular("structural mass"))?;
        let linv = l.l().try_inverse().ok_or(Error::Singular("structural mass"))?;
        let a = &linv * &self.stiffness_dense * linv.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let mut w: Vec<f64> = a.symmetric_eigenvalues().iter().map(|x| x.max(0.0).sqrt()).collect();
        w.sort_by(f64::total_cmp);
        Ok(w)
    }

    /// Cubic internal forces `df/dq` of the stiffening energy, added to `out`.
    fn add_cubic<T: Scalar>(&self, q: &[T], out: &mut [T]) {
        if self.kappa == 0.0 {
            return;
        }
        let inv_le = 1.0 / self.elem_len;
        for e in 0..self.params.n_elements {
            let wi = dof(e, 0).map(|d| q[d]).unwrap_or(T::zero());
            let j = dof(e + 1, 0).unwrap();
            let s = (q[j] - wi).scale(inv_le);
            let f = s * s * s.scale(self.kappa);
            out[j] += f;
            if let Some(i) = dof(e, 0) {
                out[i] -= f;
            }
        }
    }

    /// Static stiffness forces `K q + f_cubic(q)`; used by the hardening check.
    pub fn internal_forces(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_q];
        self.stiffness.mul_into(q, &mut out);
        self.add_cubic(q, &mut out);
        out
    }

    fn interp<T: Scalar>(list: &[(usize, f64)], v: &[T]) -> T {
        list.iter().fold(T::zero(), |acc, &(d, wgt)| acc + v[d].scale(wgt))
    }

    /// Evaluates the residual; returns the total lift of the modelled half (N).
    fn eval<T: Scalar>(&self, w: &[T], uc: &[T], ud: &[T], out: &mut [T]) -> T {
        let p = &self.params;
        let nf = self.n_f();
        let nq = self.n_q;
        let (aug, rest) = w.split_at(nf);
        let q = &rest[..nq];
        let qd = &rest[nq..2 * nq];
        let rigid = self.rigid_offset().map(|o| &w[o..o + N_RIGID]);

        // Structural forces: -K (q + beta q') - f_cubic(q).
        let mut tmp: Vec<T> = (0..nq).map(|i| q[i] + qd[i].scale(p.stiffness_damping)).collect();
        let mut force = vec![T::zero(); nq];
        self.stiffness.mul_into(&tmp, &mut force);
        for f in force.iter_mut() {
            *f = -*f;
        }
        tmp.iter_mut().for_each(|x| *x = T::zero());
        self.add_cubic(q, &mut tmp);
        for (f, c) in force.iter_mut().zip(&tmp) {
            *f -= *c;
        }

        let (body_alpha, pitch_rate, roll_rate) = match rigid {
            Some(r) => (r[2] / r[0], r[4], r[3]),
            None => (T::zero(), T::zero(), T::zero()),
        };
        let qdyn = 0.5 * self.geom.rho * self.geom.u * self.geom.u;
        let b = self.geom.b;
        let mut total_lift = T::zero();
        let mut total_moment = T::zero();
        let na = self.n_aug;
        for (s, st) in self.stations.iter().enumerate() {
            let range = s * na..(s + 1) * na;
            if !p.aero {
                let c = INDICIAL;
                let eps = [c.eps1, c.eps2, c.eps3, c.eps4, c.eps1, c.eps2, c.eps1, c.eps2];
                for (k, i) in range.enumerate() {
                    out[i] = -aug[i].scale(eps[k] * self.geom.u / b);
                }
                continue;
            }
            let motion = SectionMotion {
                alpha: Self::interp(&st.theta, q) + T::from_real(p.root_incidence) + body_alpha,
                alpha_dot: Self::interp(&st.theta, qd) + pitch_rate,
                h_dot: -Self::interp(&st.w, qd) + roll_rate.scale(st.y),
                delta: if p.flap { uc[0] } else { T::zero() },
                delta_dot: T::zero(),
            };
            let loads = strip_state_rates(&self.geom, &motion, ud[0], &aug[range.clone()], &mut out[range]);
            let lift = loads.cl.scale(qdyn * 2.0 * b * st.width);
            let moment = loads.cm.scale(qdyn * 4.0 * b * b * st.width);
            for &(d, v) in &st.w {
                force[d] += lift.scale(v);
            }
            for &(d, v) in &st.theta {
                force[d] += moment.scale(v);
            }
            total_lift += lift;
            total_moment += moment;
        }

        self.mass_factor.solve_in_place(&mut force);
        out[nf..nf + nq].copy_from_slice(qd);
        out[nf + nq..nf + 2 * nq].copy_from_slice(&force);

        if let (Some(r), Some(props), Some(o)) = (rigid, &self.mass_props, self.rigid_offset()) {
            let state = RigidBodyState {
                v_b: [r[0], r[1], r[2]],
                omega_b: [r[3], r[4], r[5]],
                position: [r[6], r[7], r[8]],
                zeta: [r[12], r[13], r[14], r[15]],
            };
            // Symmetric flight: both halves lift; lateral loads cancel.
            let aero_f = [T::zero(), T::zero(), -total_lift.scale(2.0)];
            let aero_m = [T::zero(), total_moment.scale(2.0), T::zero()];
            let grav = if p.gravity {
                gravity_body(&state.zeta, props.mass, GRAVITY)
            } else {
                [T::zero(); 3]
            };
            let thrust = [T::from_real(p.thrust), T::zero(), T::zero()];
            let rates = rigid_body_rates(&state, &[aero_f, grav, thrust], &[aero_m], props);
            out[o..o + 3].copy_from_slice(&rates.v_dot);
            out[o + 3..o + 6].copy_from_slice(&rates.omega_dot);
            out[o + 6..o + 9].copy_from_slice(&rates.position_dot);
            out[o + 9..o + 12].copy_from_slice(&state.omega_b);
            out[o + 12..o + 16].copy_from_slice(&rates.zeta_dot);
        }
        total_lift
    }

    /// Initial state for free flight at speed `U`, level attitude, structure at rest.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.layout().n()];
        if let Some(o) = self.rigid_offset() {
            w[o] = self.params.u;
            w[o + 12] = 1.0;
        }
        w
    }
}

impl FomModel for FlexWing {
    fn name(&self) -> &str {
        "flexwing"
    }

    fn layout(&self) -> StateLayout {
        StateLayout {
            n_f: self.n_f(),
            n_s: 2 * self.n_q,
            n_r: if self.params.free_flight { N_RIGID } else { 0 },
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

    fn quaternion_offset(&self) -> Option<usize> {
        self.rigid_offset().map(|o| o + 12)
    }

    fn output_names(&self) -> Vec<String> {
        let mut names = vec!["tip_displacement".to_string(), "tip_twist".into(), "lift".into()];
        if self.params.free_flight {
            names.extend(["altitude".to_string(), "pitch_attitude".into()]);
        }
        names
    }

    fn outputs(&self, w: &[f64], uc: &[f64], ud: &[f64]) -> Vec<f64> {
        let mut scratch = vec![0.0; w.len()];
        let lift = self.eval(w, uc, ud, &mut scratch);
        let mut out = vec![w[self.tip_index()], w[self.tip_twist_index()], lift];
        if let Some(o) = self.rigid_offset() {
            let z = &w[o + 12..o + 16];
            out.push(-w[o + 8]);
            out.push((2.0 * (z[0] * z[2] - z[3] * z[1])).clamp(-1.0, 1.0).asin());
        }
        out
    }

    fn describe(&self) -> String {
        format!("flexwing {:?}", self.params)
    }

    /// Elastic and aerodynamic states; the rigid-body block is held.
    fn default_trim_mask(&self) -> Vec<bool> {
        let n = self.layout().n();
        let mut mask = vec![true; n];
        if let Some(o) = self.rigid_offset() {
            mask[o..].iter_mut().for_each(|m| *m = false);
        }
        mask
    }
}
