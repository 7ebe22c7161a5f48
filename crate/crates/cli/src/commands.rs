//! The five verbs. Each returns a report struct and writes its files under
//! the configured output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use nmor_core::eig::{eig_full, Spectrum};
use nmor_core::reduction::{build_rom, reconstruct, select_basis, BasisSelection, PairRanking, ReducedModel, RomOptions, RomOrder};
use nmor_core::romstore::{self, ArchiveSummary, Provenance};
use nmor_core::sim::{
    perturbed_start, rms_error_of_peak, simulate_fom, simulate_rom, ConstantInputs, GustInputs, InputSchedule, SimOptions,
    Trajectory,
};
use nmor_core::statespace::{find_trim, jacobian_fd, FomModel, TrimOptions, TrimState};

use crate::config::{ConfigError, RunConfig, RunKind};
use crate::registry::{ModelDefaults, Registry};

/// A configured model, ready for trim / reduction / simulation.
pub struct Session {
    pub cfg: RunConfig,
    pub model: Arc<dyn FomModel>,
    pub defaults: ModelDefaults,
}

fn value_err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        reason: reason.into(),
    }
}

impl Session {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let built = Registry::default().build(&cfg.model, &cfg.params)?;
        Ok(Self {
            cfg,
            model: Arc::from(built.model),
            defaults: built.defaults,
        })
    }

    pub fn trim_options(&self) -> TrimOptions {
        let d = TrimOptions::default();
        let t = &self.cfg.trim;
        TrimOptions {
            tolerance: t.tolerance.unwrap_or(d.tolerance),
            max_iterations: t.max_iterations.unwrap_or(d.max_iterations),
            fd_step: t.fd_step.unwrap_or(d.fd_step),
            ..d
        }
    }

    pub fn trim(&self) -> Result<TrimState> {
        let l = self.model.layout();
        let trim = find_trim(
            self.model.as_ref(),
            &vec![0.0; l.n()],
            &vec![0.0; l.n_c],
            &vec![0.0; l.n_d],
            &self.model.default_trim_mask(),
            &self.trim_options(),
        )?;
        Ok(trim)
    }

    pub fn selection(&self) -> Result<BasisSelection> {
        let b = &self.cfg.basis;
        let d = self.defaults.selection;
        let ranking = match &b.ranking {
            Some(r) => PairRanking::from_label(r)
                .ok_or_else(|| value_err("basis.ranking", format!("`{r}` is not one of damping, frequency")))?,
            None => d.ranking,
        };
        Ok(BasisSelection {
            n_real: b.modes_real.unwrap_or(d.n_real),
            n_complex: b.modes_complex.unwrap_or(d.n_complex),
            origin_radius: b.origin_radius.unwrap_or(d.origin_radius),
            ranking,
        })
    }

    pub fn order(&self) -> Result<RomOrder> {
        let o = self.cfg.rom.order.unwrap_or(2);
        RomOrder::from_int(o).map_err(|_| value_err("rom.order", format!("{o} is not 1, 2 or 3")).into())
    }

    pub fn rom_options(&self) -> RomOptions {
        let d = RomOptions::default();
        RomOptions {
            epsilon: self.cfg.rom.epsilon.unwrap_or(d.epsilon),
            epsilon_cubic: self.cfg.rom.epsilon_cubic.or(d.epsilon_cubic),
        }
    }

    pub fn spectrum(&self, trim: &TrimState) -> Result<Spectrum> {
        let step = self.cfg.trim.jacobian_step.unwrap_or(self.defaults.jacobian_step);
        let jac = jacobian_fd(self.model.as_ref(), trim, step)?;
        Ok(eig_full(&jac.matrix)?)
    }

    /// Loads the configured archive (checking its fingerprint) or builds a new model.
    pub fn reduced_model(&self, trim: &TrimState) -> Result<(ReducedModel, Provenance, f64)> {
        if let Some(path) = &self.cfg.rom.archive {
            let (rom, prov) = romstore::load_rom(path)?;
            romstore::check_fingerprint(&prov, self.model.as_ref(), trim)
                .with_context(|| format!("archive {} does not match the configured model", path.display()))?;
            return Ok((rom, prov, 0.0));
        }
        let start = Instant::now();
        let spectrum = self.spectrum(trim)?;
        let sel = self.selection()?;
        let basis = select_basis(&spectrum, &sel)?;
        let rom = build_rom(self.model.as_ref(), trim, basis, self.order()?, &self.rom_options())?;
        let prov = Provenance::new(self.model.as_ref(), trim, Some(sel));
        Ok((rom, prov, start.elapsed().as_secs_f64()))
    }

    pub fn inputs(&self, trim: &TrimState) -> Result<Arc<dyn InputSchedule>> {
        Ok(match &self.cfg.gust {
            None => Arc::new(ConstantInputs {
                uc: trim.uc0.clone(),
                ud: trim.ud0.clone(),
            }),
            Some(spec) => {
                let gust = spec.build(spec.speed.unwrap_or(self.defaults.gust_speed))?;
                Arc::new(GustInputs::new(trim.uc0.clone(), trim.ud0.clone(), gust, 1.0, 1.0))
            }
        })
    }

    pub fn output_dir(&self) -> Result<PathBuf> {
        let dir = self.cfg.output_dir.clone();
        fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(dir)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

// ---------------------------------------------------------------- trim

#[derive(Clone, Debug)]
pub struct TrimReport {
    pub trim: TrimState,
    pub outputs: Vec<(String, f64)>,
    pub summary: String,
}

pub fn cmd_trim(cfg: RunConfig) -> Result<TrimReport> {
    let s = Session::new(cfg)?;
    let trim = s.trim()?;
    let outputs: Vec<(String, f64)> = s
        .model
        .output_names()
        .into_iter()
        .zip(s.model.outputs(&trim.w0, &trim.uc0, &trim.ud0))
        .collect();
    let mut summary = format!(
        "model: {}\nstates: {}\nresidual_norm: {:e}\niterations: {}\n",
        s.model.name(),
        trim.w0.len(),
        trim.residual_norm,
        trim.iterations
    );
    for (name, v) in &outputs {
        writeln!(summary, "{name}: {v:e}").ok();
    }
    let dir = s.output_dir()?;
    let mut csv = String::from("index,value\n");
    for (i, v) in trim.w0.iter().enumerate() {
        writeln!(csv, "{i},{v:e}").ok();
    }
    write_file(&dir.join("trim.csv"), &csv)?;
    write_file(&dir.join("trim_summary.txt"), &summary)?;
    Ok(TrimReport { trim, outputs, summary })
}

// ---------------------------------------------------------------- eig

#[derive(Clone, Debug)]
pub struct EigReport {
    pub spectrum: Spectrum,
    /// Spectrum indices of the selected modes (pair representatives only).
    pub selected: Vec<usize>,
    pub biorthonormality_error: f64,
    pub summary: String,
}

pub fn cmd_eig(cfg: RunConfig) -> Result<EigReport> {
    let s = Session::new(cfg)?;
    let trim = s.trim()?;
    let spectrum = s.spectrum(&trim)?;
    let basis = select_basis(&spectrum, &s.selection()?)?;
    let selected: Vec<usize> = basis
        .lambdas
        .iter()
        .filter_map(|l| spectrum.values.iter().position(|v| v == l))
        .collect();
    let dir = s.output_dir()?;
    let mut csv = String::from("index,re,im,damping_ratio,selected\n");
    for (i, l) in spectrum.values.iter().enumerate() {
        let zeta = if l.norm() > 0.0 { -l.re / l.norm() } else { 0.0 };
        writeln!(csv, "{i},{:e},{:e},{:e},{}", l.re, l.im, zeta, u8::from(selected.contains(&i))).ok();
    }
    write_file(&dir.join("spectrum.csv"), &csv)?;
    let err = basis.biorthonormality_error();
    let unstable = spectrum.values.iter().filter(|l| l.re > 0.0).count();
    let mut summary = format!(
        "model: {}\nstates: {}\nunstable eigenvalues: {unstable}\nmax eigen-residual: {:e}\nselected modes: {}\nbiorthonormality error: {err:e}\n",
        s.model.name(),
        spectrum.values.len(),
        spectrum.max_residual,
        selected.len()
    );
    for (l, k) in basis.lambdas.iter().zip(&basis.kinds) {
        writeln!(summary, "  {:>16} {:+.6e} {:+.6e}i", k.label(), l.re, l.im).ok();
    }
    Ok(EigReport {
        spectrum,
        selected,
        biorthonormality_error: err,
        summary,
    })
}

// ---------------------------------------------------------------- build-rom

#[derive(Clone, Debug)]
pub struct BuildReport {
    pub archive: ArchiveSummary,
    pub rom: ReducedModel,
    pub build_seconds: f64,
    pub summary: String,
}

pub fn cmd_build_rom(cfg: RunConfig) -> Result<BuildReport> {
    let s = Session::new(cfg)?;
    let trim = s.trim()?;
    let (rom, prov, build_seconds) = s.reduced_model(&trim)?;
    let path = s.output_dir()?.join(format!("rom.{}", romstore::EXTENSION));
    let archive = romstore::save_rom(&rom, &prov, &path)?;
    let meta = &rom.meta;
    let mut summary = format!(
        "archive: {}\nbytes: {}\nfingerprint: {}\norder: {}\nmodes: {} ({} extended)\nbilinear tuples: {}\nbilinear stencil evaluations: {}\ntrilinear tuples: {}\ntrilinear stencil evaluations: {}\ntotal residual evaluations: {}\nepsilon sensitivity: {:e}\nbuild seconds: {:.3}\n",
        path.display(),
        archive.bytes,
        archive.fingerprint,
        rom.order.as_int(),
        rom.m(),
        rom.extended_len(),
        meta.tuples[0],
        meta.stencil_evaluations[0],
        meta.tuples[1],
        meta.stencil_evaluations[1],
        meta.residual_evaluations,
        meta.epsilon_sensitivity,
        build_seconds
    );
    for w in &meta.warnings {
        writeln!(summary, "warning: {w}").ok();
    }
    Ok(BuildReport {
        archive,
        rom,
        build_seconds,
        summary,
    })
}

// ---------------------------------------------------------------- simulate

#[derive(Clone, Debug, Default)]
pub struct ChannelStats {
    pub name: String,
    /// Output value at trim.
    pub trim: f64,
    /// Largest `|y - y_trim|` in each run.
    pub peak_fom: Option<f64>,
    pub peak_rom: Option<f64>,
    /// RMS of the ROM-FOM difference over the FOM peak deviation.
    pub rms_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SimReport {
    pub fom: Option<Trajectory>,
    pub rom: Option<Trajectory>,
    pub channels: Vec<ChannelStats>,
}

impl SimReport {
    pub fn channel(&self, name: &str) -> Option<&ChannelStats> {
        self.channels.iter().find(|c| c.name == name)
    }
}

/// Steps, output stride and horizon for both integrations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing {
    pub fom: SimOptions,
    pub rom: SimOptions,
}

fn stride(interval: f64, dt: f64) -> Result<usize, ConfigError> {
    let k = (interval / dt).round();
    if !(k >= 1.0) || ((k * dt - interval).abs() > 1e-9 * interval) {
        return Err(value_err(
            "simulate.output_interval",
            format!("{interval} is not a whole multiple of the step {dt}"),
        ));
    }
    Ok(k as usize)
}

pub fn timing(s: &Session) -> Result<Timing> {
    let c = &s.cfg.simulate;
    let dt = c.dt.unwrap_or(s.defaults.dt);
    let rom_dt = c.rom_dt.or(if c.dt.is_some() { None } else { s.defaults.rom_dt }).unwrap_or(dt);
    let t_end = c.t_end.unwrap_or(s.defaults.t_end);
    let interval = c.output_interval.unwrap_or(dt.max(rom_dt));
    let base = SimOptions {
        t_end,
        record_states: c.record_states,
        ..SimOptions::default()
    };
    Ok(Timing {
        fom: SimOptions {
            dt,
            output_every: stride(interval, dt)?,
            ..base
        },
        rom: SimOptions {
            dt: rom_dt,
            output_every: stride(interval, rom_dt)?,
            ..base
        },
    })
}

/// Runs the configured simulation with an already trimmed model (and ROM, when needed).
pub fn simulate_with(s: &Session, trim: &TrimState, rom: Option<&ReducedModel>) -> Result<SimReport> {
    let c = &s.cfg.simulate;
    let n = trim.w0.len();
    let mut dw = vec![0.0; n];
    for &(i, v) in &c.perturbation {
        if i >= n {
            return Err(value_err("simulate.perturbation", format!("state index {i} out of range (n = {n})")).into());
        }
        dw[i] += v;
    }
    let inputs = s.inputs(trim)?;
    let t = timing(s)?;
    let model = s.model.as_ref();

    let (w_start, z0) = match rom {
        Some(r) => {
            let (w_raw, z) = perturbed_start(r, &dw);
            let w = if c.project_initial { reconstruct(r, &z).0 } else { w_raw };
            (w, Some(z))
        }
        None => (trim.w0.iter().zip(&dw).map(|(a, b)| a + b).collect(), None),
    };
    let fom = match c.run {
        RunKind::Both | RunKind::Fom => Some(simulate_fom(model, &w_start, inputs.as_ref(), &t.fom)?),
        RunKind::Rom => None,
    };
    let rom_traj = match (c.run, rom, z0) {
        (RunKind::Both | RunKind::Rom, Some(r), Some(z)) => Some(simulate_rom(r, model, &z, inputs.as_ref(), &t.rom)?),
        _ => None,
    };

    let y0 = model.outputs(&trim.w0, &trim.uc0, &trim.ud0);
    let peak = |tr: &Trajectory, k: usize| tr.series[k].iter().fold(0.0f64, |m, v| m.max((v - y0[k]).abs()));
    let channels = model
        .output_names()
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let rms_error = match (&fom, &rom_traj) {
                (Some(f), Some(r)) => {
                    let a: Vec<f64> = r.series[k].iter().map(|v| v - y0[k]).collect();
                    let b: Vec<f64> = f.series[k].iter().map(|v| v - y0[k]).collect();
                    Some(rms_error_of_peak(&a, &b))
                }
                _ => None,
            };
            ChannelStats {
                trim: y0[k],
                peak_fom: fom.as_ref().map(|f| peak(f, k)),
                peak_rom: rom_traj.as_ref().map(|r| peak(r, k)),
                rms_error,
                name,
            }
        })
        .collect();
    Ok(SimReport {
        fom,
        rom: rom_traj,
        channels,
    })
}

fn comparison_csv(model: &dyn FomModel, fom: &Trajectory, rom: &Trajectory) -> String {
    let names = model.output_names();
    let mut out = String::from("t");
    for c in &names {
        write!(out, ",{c}_fom,{c}_rom,{c}_err").ok();
    }
    out.push('\n');
    let rows = fom.times.len().min(rom.times.len());
    for i in 0..rows {
        write!(out, "{:e}", fom.times[i]).ok();
        for k in 0..names.len() {
            let (a, b) = (fom.series[k][i], rom.series[k][i]);
            write!(out, ",{a:e},{b:e},{:e}", b - a).ok();
        }
        out.push('\n');
    }
    out
}

pub fn cmd_simulate(cfg: RunConfig) -> Result<SimReport> {
    let s = Session::new(cfg)?;
    let trim = s.trim()?;
    let rom = match s.cfg.simulate.run {
        RunKind::Fom if s.cfg.simulate.perturbation.is_empty() || !s.cfg.simulate.project_initial => None,
        _ => Some(s.reduced_model(&trim)?.0),
    };
    let report = simulate_with(&s, &trim, rom.as_ref())?;
    let dir = s.output_dir()?;
    let save = |name: &str, t: &Trajectory| -> Result<()> {
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        fs::write(dir.join(name), buf).with_context(|| format!("writing {name}"))
    };
    if let Some(f) = &report.fom {
        save("fom.csv", f)?;
    }
    if let Some(r) = &report.rom {
        save("rom.csv", r)?;
    }
    if let (Some(f), Some(r)) = (&report.fom, &report.rom) {
        write_file(&dir.join("comparison.csv"), &comparison_csv(s.model.as_ref(), f, r))?;
    }
    Ok(report)
}

pub fn describe_sim(report: &SimReport) -> String {
    let mut out = String::new();
    for (label, t) in [("fom", &report.fom), ("rom", &report.rom)] {
        if let Some(t) = t {
            writeln!(
                out,
                "{label}: {} steps of {:e}, {:.3} s wall clock",
                t.meta.steps, t.meta.dt, t.meta.wall_clock
            )
            .ok();
        }
    }
    for c in &report.channels {
        write!(out, "{:>18}: trim {:+.6e}", c.name, c.trim).ok();
        if let Some(p) = c.peak_fom {
            write!(out, "  peak(fom) {p:.6e}").ok();
        }
        if let Some(p) = c.peak_rom {
            write!(out, "  peak(rom) {p:.6e}").ok();
        }
        if let Some(e) = c.rms_error {
            write!(out, "  rms/peak {:.4}%", 100.0 * e).ok();
        }
        out.push('\n');
    }
    out
}
