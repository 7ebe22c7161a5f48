//! Fixed-step time integration of full and reduced models.

use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gust::GustSignal;
use crate::reduction::{reconstruct, rom_rates, ReducedModel};
use crate::scalar::Scalar;
use crate::statespace::{FomModel, TrimState};

/// Input values as a function of model time.
pub trait InputSchedule: Send + Sync {
    fn inputs(&self, t: f64, uc: &mut [f64], ud: &mut [f64]);
}

/// Inputs held at the trim values.
#[derive(Clone, Debug)]
pub struct ConstantInputs {
    pub uc: Vec<f64>,
    pub ud: Vec<f64>,
}

impl InputSchedule for ConstantInputs {
    fn inputs(&self, _t: f64, uc: &mut [f64], ud: &mut [f64]) {
        uc.copy_from_slice(&self.uc);
        ud.copy_from_slice(&self.ud);
    }
}

/// Trim inputs plus `gain * w_g(t * time_scale)` on every disturbance channel.
pub struct GustInputs {
    pub uc: Vec<f64>,
    pub ud: Vec<f64>,
    pub gust: Arc<dyn GustSignal>,
    /// Converts gust velocity into the model's disturbance units.
    pub gain: f64,
    /// Converts model time into gust time (seconds).
    pub time_scale: f64,
    // RK4 asks for the same instants repeatedly; spectral gusts are costly.
    recent: Mutex<[(f64, f64); 2]>,
}

impl GustInputs {
    pub fn new(uc: Vec<f64>, ud: Vec<f64>, gust: Arc<dyn GustSignal>, gain: f64, time_scale: f64) -> Self {
        Self {
            uc,
            ud,
            gust,
            gain,
            time_scale,
            recent: Mutex::new([(f64::NAN, 0.0); 2]),
        }
    }

    fn gust_at(&self, t: f64) -> f64 {
        let mut recent = self.recent.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(&(_, v)) = recent.iter().find(|(s, _)| *s == t) {
            return v;
        }
        let v = self.gain * self.gust.value(t * self.time_scale);
        recent[1] = recent[0];
        recent[0] = (t, v);
        v
    }
}

impl Clone for GustInputs {
    fn clone(&self) -> Self {
        Self::new(self.uc.clone(), self.ud.clone(), self.gust.clone(), self.gain, self.time_scale)
    }
}

impl InputSchedule for GustInputs {
    fn inputs(&self, t: f64, uc: &mut [f64], ud: &mut [f64]) {
        uc.copy_from_slice(&self.uc);
        let g = self.gust_at(t);
        for (o, base) in ud.iter_mut().zip(&self.ud) {
            *o = base + g;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record outputs every this many steps.
    pub output_every: usize,
    pub record_states: bool,
    /// Any state component beyond this magnitude counts as divergence.
    pub blowup: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 1.0,
            output_every: 1,
            record_states: false,
            blowup: 1e12,
        }
    }
}

impl SimOptions {
    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_end >= 0.0) || self.output_every == 0 {
            return Err(Error::InvalidParameter {
                name: "dt".into(),
                reason: "need dt > 0, t_end >= 0 and output_every >= 1".into(),
            });
        }
        Ok((self.t_end / self.dt).round() as usize)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryMeta {
    pub model: String,
    pub dt: f64,
    pub steps: usize,
    pub wall_clock: f64,
    /// Largest `| |q| - 1 |` seen before renormalization.
    pub max_quaternion_drift: f64,
    /// Largest imaginary residue of a ROM reconstruction.
    pub max_imaginary_residue: f64,
}

/// Sampled time history with named output channels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub channels: Vec<String>,
    /// One series per channel, aligned with `times`.
    pub series: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().position(|c| c == name).map(|i| self.series[i].as_slice())
    }

    fn push(&mut self, t: f64, outputs: Vec<f64>) {
        self.times.push(t);
        for (s, v) in self.series.iter_mut().zip(outputs) {
            s.push(v);
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t")?;
        for c in &self.channels {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{t:e}")?;
            for s in &self.series {
                write!(out, ",{:e}", s[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Classical RK4 with fixed step. `rates(t, y, dy)`; `after_step` may
/// project the state (e.g. renormalize a quaternion) and `observe` sees every
/// accepted step.
pub fn rk4<T, F, P, O>(
    mut rates: F,
    y0: &[T],
    dt: f64,
    steps: usize,
    blowup: f64,
    mut after_step: P,
    mut observe: O,
) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(f64, &[T], &mut [T]),
    P: FnMut(&mut [T]),
    O: FnMut(usize, f64, &[T]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let mut tmp = vec![T::zero(); n];
    observe(0, 0.0, &y);
    for step in 0..steps {
        let t = step as f64 * dt;
        rates(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + k1[i].scale(0.5 * dt);
        }
        rates(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + k2[i].scale(0.5 * dt);
        }
        rates(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + k3[i].scale(dt);
        }
        let t_next = (step + 1) as f64 * dt;
        rates(t_next, &tmp, &mut k4);
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]).scale(2.0) + k4[i]).scale(dt / 6.0);
        }
        if y.iter().any(|v| !v.is_finite_value() || v.real_part().abs() > blowup) {
            return Err(Error::Divergence { time: t_next });
        }
        after_step(&mut y);
        observe(step + 1, t_next, &y);
    }
    Ok(y)
}

/// Integrates the full model from `w_init`.
pub fn simulate_fom(
    model: &dyn FomModel,
    w_init: &[f64],
    inputs: &dyn InputSchedule,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let steps = opts.steps()?;
    let l = model.layout();
    if w_init.len() != l.n() {
        return Err(Error::Dimension {
            what: "initial state",
            expected: l.n(),
            got: w_init.len(),
        });
    }
    let mut traj = Trajectory {
        channels: model.output_names(),
        ..Default::default()
    };
    traj.series = vec![Vec::new(); traj.channels.len()];
    let quat = model.quaternion_offset();
    let mut uc = vec![0.0; l.n_c];
    let mut ud = vec![0.0; l.n_d];
    let mut drift: f64 = 0.0;
    let start = Instant::now();
    rk4(
        |t, w, dw| {
            inputs.inputs(t, &mut uc, &mut ud);
            model.residual_real(w, &uc, &ud, dw);
        },
        w_init,
        opts.dt,
        steps,
        opts.blowup,
        |w| {
            if let Some(q) = quat {
                let norm = w[q..q + 4].iter().map(|x| x * x).sum::<f64>().sqrt();
                drift = drift.max((norm - 1.0).abs());
                w[q..q + 4].iter_mut().for_each(|x| *x /= norm);
            }
        },
        |step, t, w| {
            if step % opts.output_every == 0 {
                let mut uc = vec![0.0; l.n_c];
                let mut ud = vec![0.0; l.n_d];
                inputs.inputs(t, &mut uc, &mut ud);
                traj.push(t, model.outputs(w, &uc, &ud));
                if opts.record_states {
                    traj.states.push(w.to_vec());
                }
            }
        },
    )?;
    traj.meta = TrajectoryMeta {
        model: model.name().to_string(),
        dt: opts.dt,
        steps,
        wall_clock: start.elapsed().as_secs_f64(),
        max_quaternion_drift: drift,
        max_imaginary_residue: 0.0,
    };
    Ok(traj)
}

/// Integrates a reduced model from reduced coordinates `z0`. Outputs are
/// computed from reconstructed states using the full model's output map, plus
/// `|z_k|` channels.
pub fn simulate_rom(
    rom: &ReducedModel,
    model: &dyn FomModel,
    z0: &[Complex64],
    inputs: &dyn InputSchedule,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let steps = opts.steps()?;
    let m = rom.m();
    if z0.len() != m {
        return Err(Error::Dimension {
            what: "reduced state",
            expected: m,
            got: z0.len(),
        });
    }
    let nc = rom.uc0.len();
    let nd = rom.ud0.len();
    let mut channels = model.output_names();
    channels.extend((0..m).map(|k| format!("|z{k}|")));
    let mut traj = Trajectory {
        series: vec![Vec::new(); channels.len()],
        channels,
        ..Default::default()
    };
    let mut uc = vec![0.0; nc];
    let mut ud = vec![0.0; nd];
    let mut imag: f64 = 0.0;
    let start = Instant::now();
    let mut samples: Vec<(f64, Vec<Complex64>)> = Vec::new();
    rk4(
        |t, z, dz| {
            inputs.inputs(t, &mut uc, &mut ud);
            rom_rates(rom, z, &uc, &ud, dz);
        },
        z0,
        opts.dt,
        steps,
        opts.blowup,
        |_| {},
        |step, t, z| {
            if step % opts.output_every == 0 {
                samples.push((t, z.to_vec()));
            }
        },
    )?;
    let integration = start.elapsed().as_secs_f64();
    for (t, z) in samples {
        let (w, residue) = reconstruct(rom, &z);
        imag = imag.max(residue);
        let mut uc = vec![0.0; nc];
        let mut ud = vec![0.0; nd];
        inputs.inputs(t, &mut uc, &mut ud);
        let mut out = model.outputs(&w, &uc, &ud);
        out.extend(z.iter().map(|v| v.norm()));
        traj.push(t, out);
        if opts.record_states {
            traj.states.push(w);
        }
    }
    traj.meta = TrajectoryMeta {
        model: format!("{}-rom{}", model.name(), rom.order.as_int()),
        dt: opts.dt,
        steps,
        wall_clock: integration,
        max_quaternion_drift: 0.0,
        max_imaginary_residue: imag,
    };
    Ok(traj)
}

/// Initial state `w0 + dw` with its reduced coordinates.
pub fn perturbed_start(rom: &ReducedModel, dw: &[f64]) -> (Vec<f64>, Vec<Complex64>) {
    let w = rom.w0.iter().zip(dw).map(|(a, b)| a + b).collect();
    (w, rom.basis.project(dw))
}

/// RMS of `a - b` divided by the peak magnitude of `b`.
pub fn rms_error_of_peak(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let rms = (a[..n].iter().zip(&b[..n]).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n as f64).sqrt();
    let peak = b[..n].iter().fold(0.0f64, |p, v| p.max(v.abs()));
    if peak > 0.0 {
        rms / peak
    } else {
        rms
    }
}

/// Trim state with the given inputs, for models whose origin is an equilibrium.
pub fn origin_trim(model: &dyn FomModel) -> TrimState {
    let l = model.layout();
    TrimState {
        w0: vec![0.0; l.n()],
        uc0: vec![0.0; l.n_c],
        ud0: vec![0.0; l.n_d],
        residual_norm: 0.0,
        iterations: 0,
    }
}
