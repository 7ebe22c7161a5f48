//! Eigenbasis selection and assembly of nonlinear reduced models.
//!
//! Reduced coordinates follow the truncated eigenexpansion
//! `dw = sum_k z_k phi_k + sum_{pairs} conj(z_c) conj(phi_c)`. Only one member
//! of every complex pair is stored; internally the coefficients are indexed
//! over the *extended* set `zeta = [z_1..z_m, conj(z_c)...]`, so `D` has shape
//! `m x m_e x m_e` and `E` has shape `m x m_e x m_e x m_e` (`m_e = m` when all
//! modes are real).

use std::collections::{HashMap, HashSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::eig::{CMatrix, Spectrum};
use crate::error::{Error, Result};
use crate::statespace::{evaluate_residual_complex, input_matrices, FomModel, TrimState};

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeKind {
    /// Real eigenvalue, selected by distance to the origin.
    RealNearOrigin,
    /// Representative (positive imaginary part) of a conjugate pair.
    ComplexPair,
}

impl ModeKind {
    pub fn label(self) -> &'static str {
        match self {
            ModeKind::RealNearOrigin => "real-near-origin",
            ModeKind::ComplexPair => "complex-pair",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "real-near-origin" => Some(ModeKind::RealNearOrigin),
            "complex-pair" => Some(ModeKind::ComplexPair),
            _ => None,
        }
    }
}

/// Selected eigenvalues with biorthonormal right/left eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenBasis {
    pub lambdas: Vec<Complex64>,
    /// Right eigenvectors as columns (`n x m`).
    pub phis: CMatrix,
    /// Left eigenvectors as columns (`n x m`).
    pub psis: CMatrix,
    pub kinds: Vec<ModeKind>,
}

impl EigenBasis {
    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    pub fn n(&self) -> usize {
        self.phis.nrows()
    }

    /// Stored-mode index behind each extended coordinate, and whether it is conjugated.
    pub fn extended_map(&self) -> Vec<(usize, bool)> {
        let mut map: Vec<(usize, bool)> = (0..self.m()).map(|k| (k, false)).collect();
        for k in 0..self.m() {
            if self.kinds[k] == ModeKind::ComplexPair {
                map.push((k, true));
            }
        }
        map
    }

    pub fn extended_len(&self) -> usize {
        self.m() + self.kinds.iter().filter(|k| **k == ModeKind::ComplexPair).count()
    }

    /// For each extended index, the index of its complex conjugate (itself for real modes).
    pub fn extended_conjugates(&self) -> Vec<usize> {
        let map = self.extended_map();
        map.iter()
            .enumerate()
            .map(|(a, &(k, conj))| {
                if self.kinds[k] == ModeKind::RealNearOrigin {
                    a
                } else {
                    map.iter().position(|&(k2, c2)| k2 == k && c2 != conj).unwrap()
                }
            })
            .collect()
    }

    fn extended_columns(&self, m: &CMatrix) -> CMatrix {
        let map = self.extended_map();
        CMatrix::from_fn(m.nrows(), map.len(), |i, a| {
            let (k, conj) = map[a];
            if conj {
                m[(i, k)].conj()
            } else {
                m[(i, k)]
            }
        })
    }

    pub fn extended_phis(&self) -> CMatrix {
        self.extended_columns(&self.phis)
    }

    pub fn extended_psis(&self) -> CMatrix {
        self.extended_columns(&self.psis)
    }

    pub fn extended_lambdas(&self) -> Vec<Complex64> {
        self.extended_map()
            .iter()
            .map(|&(k, c)| if c { self.lambdas[k].conj() } else { self.lambdas[k] })
            .collect()
    }

    /// `max |(Psi^H Phi - I)_{kl}|` over the extended (conjugate-completed) set.
    pub fn biorthonormality_error(&self) -> f64 {
        let g = self.extended_psis().adjoint() * self.extended_phis();
        let mut worst: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Largest eigen-residual `||A phi - lambda phi|| / ||phi||`.
    pub fn residual(&self, a: &DMatrix<f64>) -> f64 {
        let ac = a.map(|x| Complex64::new(x, 0.0));
        let av = &ac * &self.phis;
        (0..self.m())
            .map(|k| (av.column(k) - self.phis.column(k) * self.lambdas[k]).norm() / self.phis.column(k).norm())
            .fold(0.0, f64::max)
    }

    /// Rescales the left vectors so that the extended `Psi^H Phi = I`.
    pub fn biorthonormalize(&mut self) -> Result<()> {
        let phis = self.extended_phis();
        let psis = self.extended_psis();
        let g = psis.adjoint() * &phis;
        let ginv = g
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Reduction("selected modes are not biorthogonalizable".into()))?;
        let fixed = psis * ginv.adjoint();
        for k in 0..self.m() {
            self.psis.set_column(k, &fixed.column(k));
        }
        Ok(())
    }

    /// Reduced coordinates of a physical perturbation: `z_k = psi_k^H dw`.
    pub fn project(&self, dw: &[f64]) -> Vec<Complex64> {
        (0..self.m())
            .map(|k| {
                self.psis
                    .column(k)
                    .iter()
                    .zip(dw)
                    .map(|(p, x)| p.conj() * *x)
                    .sum()
            })
            .collect()
    }
}

/// How candidate complex pairs are ordered before the first `n_complex` are taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairRanking {
    /// Lowest damping ratio first.
    #[default]
    DampingRatio,
    /// Lowest `|lambda|` first. Suits wings whose low bending modes are
    /// heavily aerodynamically damped.
    Frequency,
}

impl PairRanking {
    pub fn label(self) -> &'static str {
        match self {
            PairRanking::DampingRatio => "damping",
            PairRanking::Frequency => "frequency",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "damping" => Some(PairRanking::DampingRatio),
            "frequency" => Some(PairRanking::Frequency),
            _ => None,
        }
    }
}

/// Basis selection settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisSelection {
    pub n_real: usize,
    pub n_complex: usize,
    /// Only eigenvalues with `|lambda| <= origin_radius` are candidates.
    pub origin_radius: f64,
    pub ranking: PairRanking,
}

impl Default for BasisSelection {
    fn default() -> Self {
        Self {
            n_real: 1,
            n_complex: 3,
            origin_radius: f64::INFINITY,
            ranking: PairRanking::DampingRatio,
        }
    }
}

/// Picks the `n_real` real eigenvalues nearest the origin and `n_complex`
/// complex pairs ranked by `sel.ranking`, then biorthonormalizes.
pub fn select_basis(spectrum: &Spectrum, sel: &BasisSelection) -> Result<EigenBasis> {
    let in_radius = |l: Complex64| l.norm() <= sel.origin_radius;
    let mut real: Vec<usize> = (0..spectrum.values.len())
        .filter(|&i| spectrum.conjugate[i].is_none() && in_radius(spectrum.values[i]))
        .collect();
    let mut complex: Vec<usize> = (0..spectrum.values.len())
        .filter(|&i| spectrum.conjugate[i].is_some() && spectrum.values[i].im > 0.0 && in_radius(spectrum.values[i]))
        .collect();
    if real.len() < sel.n_real {
        return Err(Error::Selection {
            kind: "real",
            requested: sel.n_real,
            available: real.len(),
        });
    }
    if complex.len() < sel.n_complex {
        return Err(Error::Selection {
            kind: "complex pair",
            requested: sel.n_complex,
            available: complex.len(),
        });
    }
    let v = &spectrum.values;
    real.sort_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm()).then(a.cmp(&b)));
    let zeta = |l: Complex64| -l.re / l.norm();
    match sel.ranking {
        PairRanking::DampingRatio => complex.sort_by(|&a, &b| zeta(v[a]).total_cmp(&zeta(v[b])).then(a.cmp(&b))),
        PairRanking::Frequency => complex.sort_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm()).then(a.cmp(&b))),
    }

    let chosen: Vec<(usize, ModeKind)> = complex[..sel.n_complex]
        .iter()
        .map(|&i| (i, ModeKind::ComplexPair))
        .chain(real[..sel.n_real].iter().map(|&i| (i, ModeKind::RealNearOrigin)))
        .collect();
    let n = spectrum.right.nrows();
    let mut basis = EigenBasis {
        lambdas: chosen.iter().map(|&(i, _)| v[i]).collect(),
        phis: CMatrix::from_fn(n, chosen.len(), |r, c| spectrum.right[(r, chosen[c].0)]),
        psis: CMatrix::from_fn(n, chosen.len(), |r, c| spectrum.left[(r, chosen[c].0)]),
        kinds: chosen.iter().map(|&(_, k)| k).collect(),
    };
    basis.biorthonormalize()?;
    Ok(basis)
}

fn complexify(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
}

fn shifted(w0: &[f64], dirs: &[&[Complex64]], h: f64) -> Vec<Complex64> {
    let mut w = complexify(w0);
    for d in dirs {
        for (x, y) in w.iter_mut().zip(d.iter()) {
            *x += *y * h;
        }
    }
    w
}

fn sample(model: &dyn FomModel, trim: &TrimState, w: &[Complex64], id: usize) -> Result<Vec<Complex64>> {
    evaluate_residual_complex(model, w, &complexify(&trim.uc0), &complexify(&trim.ud0)).map_err(|e| match e {
        Error::NonFinite { .. } => Error::FiniteDifference { sample: id },
        other => other,
    })
}

/// `[R(w0+e phi_i+e phi_j) - R(w0+e phi_i) - R(w0+e phi_j) + R(w0)] / e^2`.
pub fn bilinear_fd(
    model: &dyn FomModel,
    trim: &TrimState,
    phi_i: &[Complex64],
    phi_j: &[Complex64],
    epsilon: f64,
) -> Result<Vec<Complex64>> {
    check_eps(epsilon)?;
    let r_ij = sample(model, trim, &shifted(&trim.w0, &[phi_i, phi_j], epsilon), 0)?;
    let r_i = sample(model, trim, &shifted(&trim.w0, &[phi_i], epsilon), 1)?;
    let r_j = sample(model, trim, &shifted(&trim.w0, &[phi_j], epsilon), 2)?;
    let r_0 = sample(model, trim, &shifted(&trim.w0, &[], epsilon), 3)?;
    let e2 = epsilon * epsilon;
    Ok((0..r_0.len())
        .map(|k| (((r_ij[k] - r_i[k]) - r_j[k]) + r_0[k]) / e2)
        .collect())
}

/// Eight-term third-difference stencil along `phi_i, phi_j, phi_l`, divided by `e^3`.
pub fn trilinear_fd(
    model: &dyn FomModel,
    trim: &TrimState,
    phi_i: &[Complex64],
    phi_j: &[Complex64],
    phi_l: &[Complex64],
    epsilon: f64,
) -> Result<Vec<Complex64>> {
    check_eps(epsilon)?;
    let w = &trim.w0;
    let r_ijl = sample(model, trim, &shifted(w, &[phi_i, phi_j, phi_l], epsilon), 0)?;
    let r_ij = sample(model, trim, &shifted(w, &[phi_i, phi_j], epsilon), 1)?;
    let r_il = sample(model, trim, &shifted(w, &[phi_i, phi_l], epsilon), 2)?;
    let r_jl = sample(model, trim, &shifted(w, &[phi_j, phi_l], epsilon), 3)?;
    let r_i = sample(model, trim, &shifted(w, &[phi_i], epsilon), 4)?;
    let r_j = sample(model, trim, &shifted(w, &[phi_j], epsilon), 5)?;
    let r_l = sample(model, trim, &shifted(w, &[phi_l], epsilon), 6)?;
    let r_0 = sample(model, trim, &shifted(w, &[], epsilon), 7)?;
    let e3 = epsilon * epsilon * epsilon;
    Ok((0..r_0.len())
        .map(|k| {
            let pairs = (r_ij[k] + r_il[k]) + r_jl[k];
            let singles = (r_i[k] + r_j[k]) + r_l[k];
            (((r_ijl[k] - pairs) + singles) - r_0[k]) / e3
        })
        .collect())
}

fn check_eps(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "epsilon".into(),
            reason: "must be positive and finite".into(),
        })
    }
}

/// Reduced model order: linear, quadratic or cubic interactions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RomOrder {
    Linear = 1,
    Quadratic = 2,
    Cubic = 3,
}

impl RomOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            1 => Ok(RomOrder::Linear),
            2 => Ok(RomOrder::Quadratic),
            3 => Ok(RomOrder::Cubic),
            _ => Err(Error::InvalidParameter {
                name: "order".into(),
                reason: format!("{order} is not one of 1, 2, 3"),
            }),
        }
    }

    pub fn as_int(self) -> u32 {
        self as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RomOptions {
    /// Step for the bilinear stencil, relative to unit infinity-norm eigenvectors.
    pub epsilon: f64,
    /// Step for the trilinear stencil; defaults to `10 * epsilon` because the
    /// third difference loses one more power of the step to round-off.
    pub epsilon_cubic: Option<f64>,
}

impl Default for RomOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            epsilon_cubic: None,
        }
    }
}

impl RomOptions {
    pub fn cubic_step(&self) -> f64 {
        self.epsilon_cubic.unwrap_or(10.0 * self.epsilon)
    }
}

/// Construction record kept alongside the coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RomMetadata {
    /// Distinct complex residual evaluations spent on `D` and `E`.
    pub residual_evaluations: usize,
    /// Evaluations attributable to the (bilinear, trilinear) stencils.
    pub stencil_evaluations: [usize; 2],
    /// Canonical (pair, triple) direction combinations differenced.
    pub tuples: [usize; 2],
    pub epsilon_cubic: f64,
    /// `max |D(e) - D(e/2)| / max(max |D|, 1e-6 max |lambda|)`; large values
    /// flag non-polynomial residual terms.
    pub epsilon_sensitivity: f64,
    pub warnings: Vec<String>,
}

/// Nonlinear reduced model about a trim state.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedModel {
    pub basis: EigenBasis,
    pub w0: Vec<f64>,
    pub uc0: Vec<f64>,
    pub ud0: Vec<f64>,
    pub order: RomOrder,
    pub epsilon: f64,
    /// `D[(k * m_e + a) * m_e + b]`.
    pub d: Option<Vec<Complex64>>,
    /// `E[((k * m_e + a) * m_e + b) * m_e + c]`.
    pub e: Option<Vec<Complex64>>,
    /// Rows `psi_k^H B_c` (`m x n_c`).
    pub input_c: CMatrix,
    /// Rows `psi_k^H B_g` (`m x n_d`).
    pub input_g: CMatrix,
    pub meta: RomMetadata,
}

impl ReducedModel {
    /// Random model with consistent shapes and symmetric `D`/`E`. The
    /// coefficients carry no physical meaning; used to exercise storage.
    pub fn synthetic<R: rand::Rng + ?Sized>(
        rng: &mut R,
        n: usize,
        n_real: usize,
        n_complex: usize,
        n_inputs: (usize, usize),
        order: RomOrder,
    ) -> Self {
        let mut c = |real: bool| {
            let re = rng.random_range(-1.0..1.0);
            Complex64::new(re, if real { 0.0 } else { rng.random_range(-1.0..1.0) })
        };
        let m = n_real + n_complex;
        let kinds: Vec<ModeKind> = (0..m)
            .map(|k| if k < n_complex { ModeKind::ComplexPair } else { ModeKind::RealNearOrigin })
            .collect();
        let real = |k: usize| kinds[k] == ModeKind::RealNearOrigin;
        let lambdas = (0..m)
            .map(|k| {
                let l = c(real(k));
                Complex64::new(-l.re.abs(), l.im.abs())
            })
            .collect();
        let phis = CMatrix::from_fn(n, m, |_, k| c(real(k)));
        let psis = CMatrix::from_fn(n, m, |_, k| c(real(k)));
        let w0 = (0..n).map(|_| c(true).re).collect();
        let uc0 = (0..n_inputs.0).map(|_| c(true).re).collect();
        let ud0 = (0..n_inputs.1).map(|_| c(true).re).collect();
        let input_c = CMatrix::from_fn(m, n_inputs.0, |_, _| c(false));
        let input_g = CMatrix::from_fn(m, n_inputs.1, |_, _| c(false));
        let basis = EigenBasis {
            lambdas,
            phis,
            psis,
            kinds,
        };
        let me = basis.extended_len();
        let d = (order >= RomOrder::Quadratic).then(|| {
            let mut d = vec![C0; m * me * me];
            for k in 0..m {
                for a in 0..me {
                    for b in a..me {
                        let v = c(false);
                        d[(k * me + a) * me + b] = v;
                        d[(k * me + b) * me + a] = v;
                    }
                }
            }
            d
        });
        let e = (order >= RomOrder::Cubic).then(|| {
            let mut e = vec![C0; m * me * me * me];
            for k in 0..m {
                for a in 0..me {
                    for b in a..me {
                        for cc in b..me {
                            let v = c(false);
                            for (i, j, l) in [(a, b, cc), (a, cc, b), (b, a, cc), (b, cc, a), (cc, a, b), (cc, b, a)] {
                                e[((k * me + i) * me + j) * me + l] = v;
                            }
                        }
                    }
                }
            }
            e
        });
        ReducedModel {
            basis,
            w0,
            uc0,
            ud0,
            order,
            epsilon: 1e-3 * (1.0 + c(true).re.abs()),
            d,
            e,
            input_c,
            input_g,
            meta: RomMetadata {
                residual_evaluations: (c(true).re.abs() * 1000.0) as usize,
                stencil_evaluations: [(c(true).re.abs() * 100.0) as usize, 0],
                tuples: [(c(true).re.abs() * 10.0) as usize, 0],
                epsilon_cubic: 1e-2 * (1.0 + c(true).re.abs()),
                epsilon_sensitivity: c(true).re.abs(),
                warnings: vec![],
            },
        }
    }

    pub fn m(&self) -> usize {
        self.basis.m()
    }

    pub fn extended_len(&self) -> usize {
        self.basis.extended_len()
    }

    /// Linear reduced model with no interaction coefficients.
    pub fn linear(basis: EigenBasis, trim: &TrimState, bc: &DMatrix<f64>, bg: &DMatrix<f64>) -> Self {
        let psi_h = basis.psis.adjoint();
        let input_c = &psi_h * bc.map(|x| Complex64::new(x, 0.0));
        let input_g = &psi_h * bg.map(|x| Complex64::new(x, 0.0));
        Self {
            basis,
            w0: trim.w0.clone(),
            uc0: trim.uc0.clone(),
            ud0: trim.ud0.clone(),
            order: RomOrder::Linear,
            epsilon: 0.0,
            d: None,
            e: None,
            input_c,
            input_g,
            meta: RomMetadata::default(),
        }
    }

    /// A copy truncated to a lower order.
    pub fn truncated(&self, order: RomOrder) -> Self {
        let mut out = self.clone();
        out.order = order.min(self.order);
        if out.order < RomOrder::Cubic {
            out.e = None;
        }
        if out.order < RomOrder::Quadratic {
            out.d = None;
        }
        out
    }

    /// Structural checks applied after loading.
    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        let me = self.extended_len();
        let n = self.basis.n();
        let bad = |reason: String| Err(Error::Reduction(reason));
        if self.basis.psis.shape() != (n, m) || self.basis.kinds.len() != m {
            return bad("basis shapes disagree".into());
        }
        if self.w0.len() != n {
            return bad(format!("trim state has length {} but basis has {n} rows", self.w0.len()));
        }
        if self.input_c.shape() != (m, self.uc0.len()) || self.input_g.shape() != (m, self.ud0.len()) {
            return bad("input projection shapes disagree".into());
        }
        let expect = |present: bool, want: bool, what: &str| -> Result<()> {
            if present != want {
                return Err(Error::Reduction(format!("{what} presence does not match order")));
            }
            Ok(())
        };
        expect(self.d.is_some(), self.order >= RomOrder::Quadratic, "D")?;
        expect(self.e.is_some(), self.order >= RomOrder::Cubic, "E")?;
        if let Some(d) = &self.d {
            if d.len() != m * me * me {
                return bad("D has the wrong length".into());
            }
            for k in 0..m {
                for a in 0..me {
                    for b in 0..a {
                        if d[(k * me + a) * me + b] != d[(k * me + b) * me + a] {
                            return bad(format!("D is not symmetric at ({k}, {a}, {b})"));
                        }
                    }
                }
            }
        }
        if let Some(e) = &self.e {
            if e.len() != m * me * me * me {
                return bad("E has the wrong length".into());
            }
            let idx = |k: usize, a: usize, b: usize, c: usize| ((k * me + a) * me + b) * me + c;
            for k in 0..m {
                for a in 0..me {
                    for b in 0..me {
                        for c in 0..me {
                            let v = e[idx(k, a, b, c)];
                            if v != e[idx(k, b, a, c)] || v != e[idx(k, a, c, b)] {
                                return bad(format!("E is not symmetric at ({k}, {a}, {b}, {c})"));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Multiset of extended indices plus step level; the residual at
/// `w0 + h_level * sum phi_a`.
type Key = (Vec<usize>, usize);

struct Sampler<'a> {
    model: &'a dyn FomModel,
    trim: &'a TrimState,
    dirs: CMatrix,
    conj: Vec<usize>,
    steps: [f64; 5],
}

impl Sampler<'_> {
    /// Canonical key and whether the requested sample is its complex conjugate.
    fn canonical(&self, mut idx: Vec<usize>, level: usize) -> (Key, bool) {
        idx.sort_unstable();
        let mut c: Vec<usize> = idx.iter().map(|&a| self.conj[a]).collect();
        c.sort_unstable();
        if c < idx {
            ((c, level), true)
        } else {
            ((idx, level), false)
        }
    }

    fn evaluate(&self, keys: Vec<Key>) -> Result<HashMap<Key, Vec<Complex64>>> {
        let uc = complexify(&self.trim.uc0);
        let ud = complexify(&self.trim.ud0);
        let out: Vec<Result<(Key, Vec<Complex64>)>> = keys
            .into_par_iter()
            .enumerate()
            .map(|(id, key)| {
                let h = self.steps[key.1];
                let mut w = complexify(&self.trim.w0);
                for &a in &key.0 {
                    for (x, y) in w.iter_mut().zip(self.dirs.column(a).iter()) {
                        *x += *y * h;
                    }
                }
                let r = evaluate_residual_complex(self.model, &w, &uc, &ud).map_err(|e| match e {
                    Error::NonFinite { .. } => Error::FiniteDifference { sample: id },
                    other => other,
                })?;
                Ok((key, r))
            })
            .collect();
        out.into_iter().collect()
    }

    fn get(&self, cache: &HashMap<Key, Vec<Complex64>>, idx: &[usize], level: usize) -> Vec<Complex64> {
        let (key, conj) = self.canonical(idx.to_vec(), level);
        let v = &cache[&key];
        if conj {
            v.iter().map(|z| z.conj()).collect()
        } else {
            v.clone()
        }
    }
}

/// All subsets (as index lists) of a multiset given by position.
fn subsets(idx: &[usize]) -> Vec<Vec<usize>> {
    (0..(1usize << idx.len()))
        .map(|mask| (0..idx.len()).filter(|b| mask >> b & 1 == 1).map(|b| idx[b]).collect())
        .collect()
}

/// Inclusion-exclusion difference over all subsets of `idx`, divided by `h^len`.
fn mixed_difference(s: &Sampler, cache: &HashMap<Key, Vec<Complex64>>, idx: &[usize], level: usize) -> Vec<Complex64> {
    let n = s.dirs.nrows();
    let mut acc = vec![C0; n];
    let full = idx.len();
    for sub in subsets(idx) {
        let sign = if (full - sub.len()) % 2 == 0 { 1.0 } else { -1.0 };
        let r = s.get(cache, &sub, level);
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v * sign;
        }
    }
    let h = s.steps[level].powi(full as i32);
    acc.iter_mut().for_each(|a| *a /= h);
    acc
}

/// Builds the reduced model of the requested order. Interaction tensors use the
/// stencils at steps `e` and `e/2` combined by Richardson extrapolation,
/// which cancels the leading `O(e)` truncation term.
pub fn build_rom(
    model: &dyn FomModel,
    trim: &TrimState,
    basis: EigenBasis,
    order: RomOrder,
    opts: &RomOptions,
) -> Result<ReducedModel> {
    check_eps(opts.epsilon)?;
    check_eps(opts.cubic_step())?;
    if basis.n() != trim.w0.len() {
        return Err(Error::Dimension {
            what: "basis rows",
            expected: trim.w0.len(),
            got: basis.n(),
        });
    }
    let (bc, bg) = input_matrices(model, trim)?;
    let mut rom = ReducedModel::linear(basis, trim, &bc, &bg);
    rom.order = order;
    rom.epsilon = opts.epsilon;
    rom.meta.epsilon_cubic = opts.cubic_step();
    if order == RomOrder::Linear {
        return Ok(rom);
    }

    let m = rom.m();
    let me = rom.extended_len();
    let sampler = Sampler {
        model,
        trim,
        dirs: rom.basis.extended_phis(),
        conj: rom.basis.extended_conjugates(),
        steps: [
            opts.epsilon,
            0.5 * opts.epsilon,
            opts.cubic_step(),
            0.5 * opts.cubic_step(),
            0.25 * opts.epsilon,
        ],
    };

    // Canonical index tuples (a <= b [<= c]) whose conjugate tuple is not smaller.
    let canonical_tuples = |len: usize| -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut idx = vec![0usize; len];
        loop {
            let (_, conj) = sampler.canonical(idx.clone(), 0);
            if !conj {
                out.push(idx.clone());
            }
            let mut p = len;
            loop {
                if p == 0 {
                    return out;
                }
                p -= 1;
                if idx[p] + 1 < me {
                    idx[p] += 1;
                    for q in p + 1..len {
                        idx[q] = idx[p];
                    }
                    break;
                }
            }
        }
    };

    let pairs = canonical_tuples(2);
    let triples = if order == RomOrder::Cubic {
        canonical_tuples(3)
    } else {
        vec![]
    };
    let mut needed: HashSet<Key> = HashSet::new();
    // Level 4 (epsilon/4) only feeds the sensitivity estimate.
    let pair_levels: &[usize] = &[0, 1, 4];
    for (stencil, (tuples, levels)) in [(&pairs, pair_levels), (&triples, &[2, 3][..])].into_iter().enumerate() {
        let before = needed.len();
        for t in tuples.iter() {
            for sub in subsets(t) {
                for &lv in levels {
                    needed.insert(sampler.canonical(sub.clone(), lv).0);
                }
            }
        }
        rom.meta.stencil_evaluations[stencil] = needed.len() - before;
        rom.meta.tuples[stencil] = tuples.len();
    }
    let mut keys: Vec<Key> = needed.into_iter().collect();
    keys.sort();
    rom.meta.residual_evaluations = keys.len();
    let cache = sampler.evaluate(keys)?;
    // Project onto every extended left vector so that the conjugate tuple
    // follows from psi_k^H conj(v) = conj(psi_{k*}^H v).
    let psi_h = rom.basis.extended_psis().adjoint();
    let conj = sampler.conj.clone();
    let project = |v: &[Complex64]| -> Vec<Complex64> {
        (0..me)
            .map(|k| psi_h.row(k).iter().zip(v).map(|(p, x)| *p * *x).sum())
            .collect()
    };
    let richardson = |coarse: &[Complex64], fine: &[Complex64]| -> Vec<Complex64> {
        fine.iter().zip(coarse).map(|(f, c)| *f * 2.0 - *c).collect()
    };

    let mut d = vec![C0; m * me * me];
    let mut d_half = vec![C0; m * me * me];
    for t in &pairs {
        let coarse = mixed_difference(&sampler, &cache, t, 0);
        let fine = mixed_difference(&sampler, &cache, t, 1);
        let finest = mixed_difference(&sampler, &cache, t, 4);
        let pr = project(&richardson(&coarse, &fine));
        let ph = project(&richardson(&fine, &finest));
        let (a, b) = (t[0], t[1]);
        for k in 0..m {
            for (x, y) in [(a, b), (b, a)] {
                d[(k * me + x) * me + y] = 0.5 * pr[k];
                d_half[(k * me + x) * me + y] = 0.5 * ph[k];
            }
            let kc = conj[k];
            for (x, y) in [(conj[a], conj[b]), (conj[b], conj[a])] {
                d[(k * me + x) * me + y] = 0.5 * pr[kc].conj();
                d_half[(k * me + x) * me + y] = 0.5 * ph[kc].conj();
            }
        }
    }
    let dmax = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let ddiff = d
        .iter()
        .zip(&d_half)
        .map(|(a, b)| (*a - *b).norm())
        .fold(0.0, f64::max);
    // d_half repeats the extrapolation one halving further down. Floor the
    // scale at a small fraction of the linear rates so that a vanishing D
    // (odd nonlinearities about a symmetric trim) is not reported as sensitive.
    let lmax = rom.basis.lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max);
    rom.meta.epsilon_sensitivity = ddiff / dmax.max(1e-6 * lmax).max(f64::MIN_POSITIVE);
    if rom.meta.epsilon_sensitivity > 1e-4 {
        let msg = format!(
            "quadratic coefficients change by {:.3e} (relative) between epsilon and epsilon/2",
            rom.meta.epsilon_sensitivity
        );
        log::warn!("{msg}");
        rom.meta.warnings.push(msg);
    }
    rom.d = Some(d);

    if order == RomOrder::Cubic {
        let mut e = vec![C0; m * me * me * me];
        let idx = |k: usize, a: usize, b: usize, c: usize| ((k * me + a) * me + b) * me + c;
        for t in &triples {
            let coarse = mixed_difference(&sampler, &cache, t, 2);
            let fine = mixed_difference(&sampler, &cache, t, 3);
            let pr = project(&richardson(&coarse, &fine));
            let (a, b, c) = (t[0], t[1], t[2]);
            for k in 0..m {
                for (x, y, z) in permutations3(a, b, c) {
                    e[idx(k, x, y, z)] = pr[k] / 6.0;
                }
                for (x, y, z) in permutations3(conj[a], conj[b], conj[c]) {
                    e[idx(k, x, y, z)] = pr[conj[k]].conj() / 6.0;
                }
            }
        }
        rom.e = Some(e);
    }
    Ok(rom)
}

fn permutations3(a: usize, b: usize, c: usize) -> [(usize, usize, usize); 6] {
    [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
}

/// Evaluates `dz/dt` for the stored coordinates.
pub fn rom_rates(rom: &ReducedModel, z: &[Complex64], uc: &[f64], ud: &[f64], out: &mut [Complex64]) {
    let m = rom.m();
    let me = rom.extended_len();
    let mut zeta = Vec::with_capacity(me);
    zeta.extend_from_slice(z);
    for k in 0..m {
        if rom.basis.kinds[k] == ModeKind::ComplexPair {
            zeta.push(z[k].conj());
        }
    }
    for k in 0..m {
        let mut acc = rom.basis.lambdas[k] * z[k];
        for (j, u) in uc.iter().enumerate() {
            acc += rom.input_c[(k, j)] * (*u - rom.uc0[j]);
        }
        for (j, u) in ud.iter().enumerate() {
            acc += rom.input_g[(k, j)] * (*u - rom.ud0[j]);
        }
        out[k] = acc;
    }
    if let Some(d) = &rom.d {
        let mut pair = vec![C0; me * (me + 1) / 2];
        let mut p = 0;
        for a in 0..me {
            for b in a..me {
                pair[p] = zeta[a] * zeta[b];
                p += 1;
            }
        }
        for (k, o) in out.iter_mut().enumerate().take(m) {
            let row = &d[k * me * me..(k + 1) * me * me];
            let mut acc = C0;
            let mut p = 0;
            for a in 0..me {
                acc += row[a * me + a] * pair[p];
                p += 1;
                for b in a + 1..me {
                    acc += row[a * me + b] * pair[p] * 2.0;
                    p += 1;
                }
            }
            *o += acc;
        }
        if let Some(e) = &rom.e {
            for (k, o) in out.iter_mut().enumerate().take(m) {
                let row = &e[k * me * me * me..(k + 1) * me * me * me];
                let mut acc = C0;
                for a in 0..me {
                    let za = zeta[a];
                    for b in 0..me {
                        let zab = za * zeta[b];
                        let base = (a * me + b) * me;
                        let mut inner = C0;
                        for c in 0..me {
                            inner += row[base + c] * zeta[c];
                        }
                        acc += zab * inner;
                    }
                }
                *o += acc;
            }
        }
    }
}

/// Physical state from reduced coordinates, with the imaginary residue of the
/// expansion (zero up to round-off for a consistent basis).
pub fn reconstruct(rom: &ReducedModel, z: &[Complex64]) -> (Vec<f64>, f64) {
    let n = rom.basis.n();
    let mut dw = vec![C0; n];
    for k in 0..rom.m() {
        let col = rom.basis.phis.column(k);
        let pair = rom.basis.kinds[k] == ModeKind::ComplexPair;
        for (i, x) in dw.iter_mut().enumerate() {
            let v = col[i] * z[k];
            *x += if pair { v + v.conj() } else { v };
        }
    }
    let imag = dw.iter().map(|x| x.im * x.im).sum::<f64>().sqrt();
    let w = rom.w0.iter().zip(&dw).map(|(w0, x)| w0 + x.re).collect();
    (w, imag)
}
