//! Parameter sweeps: every case runs on the full and the reduced model.
//!
//! Reduced models are built once per distinct model configuration, so a
//! gust sweep pays the reduction cost a single time while a `params.*` sweep
//! rebuilds per case.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use anyhow::{anyhow, Context, Result};
use nmor_core::reduction::ReducedModel;
use nmor_core::statespace::TrimState;
use rayon::prelude::*;

use crate::commands::{simulate_with, ChannelStats, Session};
use crate::config::{ConfigError, RunConfig, RunKind};

#[derive(Clone, Debug)]
pub struct CaseResult {
    pub value: f64,
    /// `Err` carries the failure message; the sweep continues.
    pub outcome: Result<CaseOutcome, String>,
}

#[derive(Clone, Debug)]
pub struct CaseOutcome {
    pub fom_seconds: f64,
    pub rom_seconds: f64,
    pub channels: Vec<ChannelStats>,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub parameter: String,
    pub cases: Vec<CaseResult>,
    pub fom_seconds: f64,
    pub rom_seconds: f64,
    /// Sum of FOM over sum of ROM integration wall clock, successful cases only.
    pub speedup: f64,
    pub rom_builds: usize,
    pub rom_build_seconds: f64,
    pub fom_dt: f64,
    pub rom_dt: f64,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| c.outcome.is_err()).count()
    }

    /// Per-case value of `f` for a channel, `None` for failed cases.
    pub fn series(&self, channel: &str, f: impl Fn(&ChannelStats) -> Option<f64>) -> Vec<Option<f64>> {
        self.cases
            .iter()
            .map(|c| {
                c.outcome
                    .as_ref()
                    .ok()
                    .and_then(|o| o.channels.iter().find(|s| s.name == channel))
                    .and_then(&f)
            })
            .collect()
    }
}

/// Sections that change the model or its reduction.
fn model_key(cfg: &RunConfig) -> String {
    let t = cfg.to_table();
    ["model", "params", "trim", "basis", "rom"]
        .iter()
        .map(|k| t.get(*k).map(|v| v.to_string()).unwrap_or_default())
        .collect::<Vec<_>>()
        .join("\u{1f}")
}

struct Prepared {
    session: Session,
    trim: TrimState,
    rom: ReducedModel,
    build_seconds: f64,
}

fn prepare(cfg: RunConfig) -> Result<Prepared> {
    let session = Session::new(cfg)?;
    let trim = session.trim()?;
    let (rom, _, build_seconds) = session.reduced_model(&trim)?;
    Ok(Prepared {
        session,
        trim,
        rom,
        build_seconds,
    })
}

fn run_case(p: &Prepared, cfg: RunConfig) -> Result<CaseOutcome> {
    // Same model, different excitation or integration settings.
    let session = Session {
        cfg,
        model: p.session.model.clone(),
        defaults: p.session.defaults,
    };
    let report = simulate_with(&session, &p.trim, Some(&p.rom))?;
    let fom = report.fom.as_ref().ok_or_else(|| anyhow!("full-order run missing"))?;
    let rom = report.rom.as_ref().ok_or_else(|| anyhow!("reduced run missing"))?;
    Ok(CaseOutcome {
        fom_seconds: fom.meta.wall_clock,
        rom_seconds: rom.meta.wall_clock,
        channels: report.channels,
    })
}

pub fn run_sweep(cfg: &RunConfig, jobs: usize) -> Result<SweepReport> {
    let sweep = cfg.sweep.clone().ok_or_else(|| ConfigError::Value {
        key: "sweep".into(),
        reason: "a [sweep] table is required".into(),
    })?;
    let grid = sweep.grid()?;
    let mut base = cfg.clone();
    base.simulate.run = RunKind::Both;
    let case_cfgs: Vec<Result<RunConfig, String>> = grid
        .iter()
        .map(|&v| base.with_value(&sweep.parameter, v).map_err(|e| e.to_string()))
        .collect();
    // Fail fast on a parameter the config cannot hold at all.
    if let Some(Err(e)) = case_cfgs.first() {
        return Err(ConfigError::Value {
            key: sweep.parameter.clone(),
            reason: e.clone(),
        }
        .into());
    }

    let mut prepared: BTreeMap<String, Result<Prepared, String>> = BTreeMap::new();
    for c in case_cfgs.iter().flatten() {
        let key = model_key(c);
        if !prepared.contains_key(&key) {
            log::info!("building reduced model for {} = {}", sweep.parameter, crate::config::get_dotted(&c.to_table(), &sweep.parameter).map(|v| v.to_string()).unwrap_or_default());
            prepared.insert(key, prepare(c.clone()).map_err(|e| format!("{e:#}")));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("starting worker pool")?;
    let cases: Vec<CaseResult> = pool.install(|| {
        grid.par_iter()
            .zip(case_cfgs.par_iter())
            .map(|(&value, c)| {
                let outcome = match c {
                    Err(e) => Err(e.clone()),
                    Ok(c) => match &prepared[&model_key(c)] {
                        Err(e) => Err(e.clone()),
                        Ok(p) => run_case(p, c.clone()).map_err(|e| format!("{e:#}")),
                    },
                };
                CaseResult { value, outcome }
            })
            .collect()
    });

    let ok = cases.iter().filter_map(|c| c.outcome.as_ref().ok());
    let (fom_seconds, rom_seconds) = ok.fold((0.0, 0.0), |(f, r), o| (f + o.fom_seconds, r + o.rom_seconds));
    let built: Vec<&Prepared> = prepared.values().filter_map(|p| p.as_ref().ok()).collect();
    let timing = match built.first() {
        Some(p) => Some(crate::commands::timing(&p.session)?),
        None => None,
    };
    Ok(SweepReport {
        parameter: sweep.parameter,
        speedup: if rom_seconds > 0.0 { fom_seconds / rom_seconds } else { f64::NAN },
        fom_seconds,
        rom_seconds,
        rom_builds: built.len(),
        rom_build_seconds: built.iter().map(|p| p.build_seconds).sum(),
        fom_dt: timing.map_or(f64::NAN, |t| t.fom.dt),
        rom_dt: timing.map_or(f64::NAN, |t| t.rom.dt),
        cases,
    })
}

/// Deterministic per-case table (no timings).
pub fn summary_csv(report: &SweepReport) -> String {
    let channels: Vec<String> = report
        .cases
        .iter()
        .find_map(|c| c.outcome.as_ref().ok())
        .map(|o| o.channels.iter().map(|c| c.name.clone()).collect())
        .unwrap_or_default();
    let mut out = format!("case,{},status", report.parameter);
    for c in &channels {
        write!(out, ",{c}_trim,{c}_peak_fom,{c}_peak_rom,{c}_rms_error").ok();
    }
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for (i, case) in report.cases.iter().enumerate() {
        write!(out, "{i},{:e}", case.value).ok();
        match &case.outcome {
            Ok(o) => {
                out.push_str(",ok");
                for s in &o.channels {
                    write!(out, ",{:e},{},{},{}", s.trim, opt(s.peak_fom), opt(s.peak_rom), opt(s.rms_error)).ok();
                }
            }
            Err(e) => {
                write!(out, ",\"failed: {}\"", e.replace('"', "'")).ok();
                for _ in &channels {
                    out.push_str(",,,,");
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn speedup_report(report: &SweepReport) -> String {
    let mut out = format!(
        "parameter: {}\ncases: {} ({} failed)\nfom dt: {:e}\nrom dt: {:e}\nfom integration seconds: {:.3}\nrom integration seconds: {:.4}\nspeedup: {:.1}\nrom builds: {} ({:.3} s)\n\ncase,value,fom_seconds,rom_seconds\n",
        report.parameter,
        report.cases.len(),
        report.failures(),
        report.fom_dt,
        report.rom_dt,
        report.fom_seconds,
        report.rom_seconds,
        report.speedup,
        report.rom_builds,
        report.rom_build_seconds
    );
    for (i, c) in report.cases.iter().enumerate() {
        match &c.outcome {
            Ok(o) => writeln!(out, "{i},{:e},{:.4},{:.5}", c.value, o.fom_seconds, o.rom_seconds),
            Err(e) => writeln!(out, "{i},{:e},failed,{e}", c.value),
        }
        .ok();
    }
    out
}

pub fn cmd_sweep(cfg: RunConfig, jobs: usize) -> Result<SweepReport> {
    let report = run_sweep(&cfg, jobs)?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    fs::write(cfg.output_dir.join("sweep.csv"), summary_csv(&report)).context("writing sweep.csv")?;
    fs::write(cfg.output_dir.join("speedup.txt"), speedup_report(&report)).context("writing speedup.txt")?;
    Ok(report)
}
