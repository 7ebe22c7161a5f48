//! Full-order model contract: residual evaluation, trim and Jacobians.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Partition sizes of a full-order state vector `w = {w_f, w_s, w_r}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateLayout {
    /// Augmented aerodynamic (fluid) states.
    pub n_f: usize,
    /// Structural displacements and velocities.
    pub n_s: usize,
    /// Rigid-body states, quaternion included.
    pub n_r: usize,
    /// Control inputs.
    pub n_c: usize,
    /// Disturbance inputs.
    pub n_d: usize,
}

impl StateLayout {
    pub fn n(&self) -> usize {
        self.n_f + self.n_s + self.n_r
    }
}

/// A full-order model `dw/dt = R(w, u_c, u_d)`.
///
/// Implementations must be pure: the same inputs give bit-identical outputs,
/// and no interior mutability is allowed so that Jacobian columns and
/// independent simulations can be evaluated from several threads.
pub trait FomModel: Send + Sync {
    fn name(&self) -> &str;

    fn layout(&self) -> StateLayout;

    fn residual_real(&self, w: &[f64], uc: &[f64], ud: &[f64], out: &mut [f64]);

    /// Same residual, continued to complex states. Only called when
    /// [`FomModel::is_analytic`] returns true.
    fn residual_complex(
        &self,
        w: &[Complex64],
        uc: &[Complex64],
        ud: &[Complex64],
        out: &mut [Complex64],
    );

    fn is_analytic(&self) -> bool {
        true
    }

    /// Characteristic magnitude of each state, used to size finite-difference steps.
    fn state_scales(&self) -> Vec<f64> {
        vec![1.0; self.layout().n()]
    }

    /// Start index of the 4-component attitude quaternion, if the model carries one.
    fn quaternion_offset(&self) -> Option<usize> {
        None
    }

    /// Unit of the model clock ("s" or "tau").
    fn time_unit(&self) -> &str {
        "s"
    }

    /// Names of the derived output channels.
    fn output_names(&self) -> Vec<String>;

    /// Derived outputs for a real state at given inputs.
    fn outputs(&self, w: &[f64], uc: &[f64], ud: &[f64]) -> Vec<f64>;

    /// Canonical textual description of every parameter; hashed into archive fingerprints.
    fn describe(&self) -> String;

    /// Analytic input matrices `(B_c, B_g)`, if the model provides them.
    fn input_matrices(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        None
    }

    /// Default trim free-state mask: every state except the quaternion block.
    fn default_trim_mask(&self) -> Vec<bool> {
        let n = self.layout().n();
        let mut mask = vec![true; n];
        if let Some(q) = self.quaternion_offset() {
            mask[q..q + 4].iter_mut().for_each(|m| *m = false);
        }
        mask
    }
}

fn check_dims(model: &dyn FomModel, w: usize, uc: usize, ud: usize) -> Result<()> {
    let l = model.layout();
    if w != l.n() {
        return Err(Error::Dimension {
            what: "state",
            expected: l.n(),
            got: w,
        });
    }
    if uc != l.n_c {
        return Err(Error::Dimension {
            what: "control input",
            expected: l.n_c,
            got: uc,
        });
    }
    if ud != l.n_d {
        return Err(Error::Dimension {
            what: "disturbance input",
            expected: l.n_d,
            got: ud,
        });
    }
    Ok(())
}

/// Checked real residual evaluation.
pub fn evaluate_residual(model: &dyn FomModel, w: &[f64], uc: &[f64], ud: &[f64]) -> Result<Vec<f64>> {
    check_dims(model, w.len(), uc.len(), ud.len())?;
    if let Some(index) = w.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut out = vec![0.0; w.len()];
    model.residual_real(w, uc, ud, &mut out);
    if let Some(index) = out.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(out)
}

/// Checked complex residual evaluation.
pub fn evaluate_residual_complex(
    model: &dyn FomModel,
    w: &[Complex64],
    uc: &[Complex64],
    ud: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_dims(model, w.len(), uc.len(), ud.len())?;
    if !model.is_analytic() {
        return Err(Error::Reduction(format!(
            "model `{}` is not flagged analytic; complex evaluation unavailable",
            model.name()
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); w.len()];
    model.residual_complex(w, uc, ud, &mut out);
    if let Some(index) = out.iter().position(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::NonFinite { index });
    }
    Ok(out)
}

/// Equilibrium about which the model is expanded.
#[derive(Clone, Debug, PartialEq)]
pub struct TrimState {
    pub w0: Vec<f64>,
    pub uc0: Vec<f64>,
    pub ud0: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct TrimOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relative finite-difference step for the Newton Jacobian.
    pub fd_step: f64,
    pub max_halvings: usize,
    /// Accepted residual norm once the Newton step has hit round-off
    /// (stiff models cannot reach `tolerance` in absolute terms).
    pub stagnation_tolerance: f64,
}

impl Default for TrimOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
            fd_step: 1e-6,
            max_halvings: 8,
            stagnation_tolerance: 1e-6,
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton solve of `R(w) = 0` over the states flagged in `free_mask`.
///
/// Held states keep their guess values; the equations solved are the residual
/// rows of the free states. The reported norm covers the full residual.
pub fn find_trim(
    model: &dyn FomModel,
    guess: &[f64],
    uc: &[f64],
    ud: &[f64],
    free_mask: &[bool],
    opts: &TrimOptions,
) -> Result<TrimState> {
    check_dims(model, guess.len(), uc.len(), ud.len())?;
    if free_mask.len() != guess.len() {
        return Err(Error::Dimension {
            what: "trim mask",
            expected: guess.len(),
            got: free_mask.len(),
        });
    }
    if let Some(index) = guess.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let free: Vec<usize> = (0..guess.len()).filter(|&i| free_mask[i]).collect();
    let scales = model.state_scales();
    let mut w = guess.to_vec();
    let mut r = evaluate_residual(model, &w, uc, ud)?;
    let free_norm = |r: &[f64]| free.iter().map(|&i| r[i] * r[i]).sum::<f64>().sqrt();
    let mut fnorm = free_norm(&r);

    for iter in 0..=opts.max_iterations {
        if fnorm <= opts.tolerance {
            return Ok(TrimState {
                w0: w,
                uc0: uc.to_vec(),
                ud0: ud.to_vec(),
                residual_norm: norm2(&r),
                iterations: iter,
            });
        }
        if iter == opts.max_iterations {
            break;
        }
        let k = free.len();
        let cols: Vec<Result<Vec<f64>>> = free
            .par_iter()
            .map(|&j| {
                let h = opts.fd_step * scales[j].max(w[j].abs());
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let rp = evaluate_residual(model, &wp, uc, ud)?;
                let rm = evaluate_residual(model, &wm, uc, ud)?;
                Ok(free.iter().map(|&i| (rp[i] - rm[i]) / (2.0 * h)).collect())
            })
            .collect();
        let mut jac = DMatrix::<f64>::zeros(k, k);
        for (c, col) in cols.into_iter().enumerate() {
            let col = col?;
            for (rrow, v) in col.into_iter().enumerate() {
                jac[(rrow, c)] = v;
            }
        }
        let rhs = DVector::from_iterator(k, free.iter().map(|&i| -r[i]));
        let step = jac.lu().solve(&rhs).ok_or(Error::SingularTrim)?;
        if step.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularTrim);
        }
        // Round-off floor: the Newton correction no longer moves the state.
        let wmax = free.iter().fold(1.0f64, |m, &i| m.max(w[i].abs()));
        if step.amax() <= 1e-10 * wmax && fnorm <= opts.stagnation_tolerance {
            return Ok(TrimState {
                w0: w,
                uc0: uc.to_vec(),
                ud0: ud.to_vec(),
                residual_norm: norm2(&r),
                iterations: iter,
            });
        }

        let mut alpha = 1.0;
        let mut accepted = false;
        let before = fnorm;
        for _ in 0..=opts.max_halvings {
            let mut trial = w.clone();
            for (s, &i) in free.iter().enumerate() {
                trial[i] += alpha * step[s];
            }
            if let Ok(rt) = evaluate_residual(model, &trial, uc, ud) {
                let tn = free_norm(&rt);
                if tn < fnorm || alpha < 1.0 / 2f64.powi(opts.max_halvings as i32 - 1) {
                    w = trial;
                    r = rt;
                    fnorm = tn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        // Stalled at the round-off floor of the residual.
        if fnorm <= opts.stagnation_tolerance && fnorm > 0.5 * before {
            return Ok(TrimState {
                w0: w,
                uc0: uc.to_vec(),
                ud0: ud.to_vec(),
                residual_norm: norm2(&r),
                iterations: iter + 1,
            });
        }
    }
    Err(Error::TrimFailure {
        iterations: opts.max_iterations,
        residual_norm: norm2(&r),
    })
}

/// Dense Jacobian at trim together with the per-state steps used.
#[derive(Clone, Debug)]
pub struct Jacobian {
    pub matrix: DMatrix<f64>,
    pub steps: Vec<f64>,
}

/// Central-difference Jacobian `A[:, i] = (R(w0 + h e_i) - R(w0 - h e_i)) / 2h`,
/// with `h = step * scale_i`. Columns are evaluated in parallel.
pub fn jacobian_fd(model: &dyn FomModel, trim: &TrimState, step: f64) -> Result<Jacobian> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step".into(),
            reason: "must be positive".into(),
        });
    }
    let n = trim.w0.len();
    check_dims(model, n, trim.uc0.len(), trim.ud0.len())?;
    let scales = model.state_scales();
    let steps: Vec<f64> = scales.iter().map(|s| step * s).collect();
    let cols: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let h = steps[j];
            let mut wp = trim.w0.clone();
            let mut wm = trim.w0.clone();
            wp[j] += h;
            wm[j] -= h;
            let mut rp = vec![0.0; n];
            let mut rm = vec![0.0; n];
            model.residual_real(&wp, &trim.uc0, &trim.ud0, &mut rp);
            model.residual_real(&wm, &trim.uc0, &trim.ud0, &mut rm);
            let col: Vec<f64> = rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * h)).collect();
            if col.iter().any(|x| !x.is_finite()) {
                return Err(Error::JacobianColumn { index: j });
            }
            Ok(col)
        })
        .collect();
    let mut matrix = DMatrix::<f64>::zeros(n, n);
    for (j, col) in cols.into_iter().enumerate() {
        matrix.set_column(j, &DVector::from_vec(col?));
    }
    Ok(Jacobian { matrix, steps })
}

/// Input matrices `B_c = dR/du_c`, `B_g = dR/du_d` at trim (analytic when offered).
pub fn input_matrices(model: &dyn FomModel, trim: &TrimState) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if let Some(b) = model.input_matrices() {
        return Ok(b);
    }
    let n = trim.w0.len();
    let l = model.layout();
    let column = |which: usize, j: usize| -> Result<DVector<f64>> {
        let mut up = (trim.uc0.clone(), trim.ud0.clone());
        let mut um = (trim.uc0.clone(), trim.ud0.clone());
        let base = if which == 0 { trim.uc0[j] } else { trim.ud0[j] };
        let h = 1e-6 * base.abs().max(1.0);
        if which == 0 {
            up.0[j] += h;
            um.0[j] -= h;
        } else {
            up.1[j] += h;
            um.1[j] -= h;
        }
        let rp = evaluate_residual(model, &trim.w0, &up.0, &up.1)?;
        let rm = evaluate_residual(model, &trim.w0, &um.0, &um.1)?;
        Ok(DVector::from_iterator(n, rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * h))))
    };
    let mut bc = DMatrix::zeros(n, l.n_c);
    for j in 0..l.n_c {
        bc.set_column(j, &column(0, j)?);
    }
    let mut bg = DMatrix::zeros(n, l.n_d);
    for j in 0..l.n_d {
        bg.set_column(j, &column(1, j)?);
    }
    Ok((bc, bg))
}
