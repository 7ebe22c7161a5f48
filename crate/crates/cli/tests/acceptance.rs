//! Acceptance suite. Prints one PASS/FAIL line per criterion. The exit code
//! reports failures only with `NMOR_ACCEPTANCE_STRICT=1`, so a workspace test
//! run still reaches the remaining test targets.

use std::cell::OnceCell;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use nmor_cli::config::RunConfig;
use nmor_cli::sweep::run_sweep;
use nmor_core::aero::{kussner, wagner, INDICIAL};
use nmor_core::eig::{eig_full, Spectrum};
use nmor_core::gust::{GustSignal, OneMinusCosine, VonKarman};
use nmor_core::models::aerofoil::{build_aerofoil_fom, flutter_speed_scan, AerofoilParams, ALPHA_INDEX};
use nmor_core::models::flexwing::{build_flexwing_fom, FlexWing, WingParams};
use nmor_core::models::polynomial::PolynomialModel;
use nmor_core::reduction::{
    build_rom, reconstruct, select_basis, BasisSelection, PairRanking, ReducedModel, RomOptions, RomOrder,
};
use nmor_core::romstore::{decode, encode, Provenance};
use nmor_core::sim::{
    perturbed_start, rk4, rms_error_of_peak, simulate_fom, simulate_rom, ConstantInputs, GustInputs, InputSchedule,
    SimOptions, Trajectory,
};
use nmor_core::statespace::{find_trim, jacobian_fd, FomModel, TrimOptions, TrimState};
use nmor_core::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn trim_at_rest(model: &dyn FomModel) -> TrimState {
    let l = model.layout();
    find_trim(
        model,
        &vec![0.0; l.n()],
        &vec![0.0; l.n_c],
        &vec![0.0; l.n_d],
        &model.default_trim_mask(),
        &TrimOptions::default(),
    )
    .expect("trim")
}

fn spectrum(model: &dyn FomModel, trim: &TrimState) -> Spectrum {
    eig_full(&jacobian_fd(model, trim, 1e-6).expect("jacobian").matrix).expect("eigensolver")
}

fn still() -> ConstantInputs {
    ConstantInputs {
        uc: vec![0.0],
        ud: vec![0.0],
    }
}

fn wing_selection(n_real: usize, n_complex: usize) -> BasisSelection {
    BasisSelection {
        n_real,
        n_complex,
        origin_radius: 100.0,
        ranking: PairRanking::Frequency,
    }
}

fn flutter_speed() -> f64 {
    flutter_speed_scan(&AerofoilParams::default(), 4.0, 8.0, 9)
        .expect("flutter scan")
        .crossing
        .expect("flutter crossing")
}

fn aerofoil_at(u_star: f64) -> (Box<dyn FomModel>, TrimState) {
    let model = build_aerofoil_fom(AerofoilParams {
        u_star,
        ..Default::default()
    })
    .expect("aerofoil");
    let trim = trim_at_rest(&model);
    (Box::new(model), trim)
}

fn rom_for(model: &dyn FomModel, trim: &TrimState, sel: &BasisSelection, order: RomOrder) -> ReducedModel {
    let basis = select_basis(&spectrum(model, trim), sel).expect("basis");
    build_rom(model, trim, basis, order, &RomOptions::default()).expect("reduction")
}

fn peak_dev(series: &[f64], reference: f64) -> f64 {
    series.iter().fold(0.0, |m, v| m.max((v - reference).abs()))
}

fn deviations(series: &[f64], reference: f64) -> Vec<f64> {
    series.iter().map(|v| v - reference).collect()
}

// ------------------------------------------------------------------ 1

fn biorthonormality() -> Verdict {
    let aerofoil = build_aerofoil_fom(AerofoilParams::default()).unwrap();
    let wing = build_flexwing_fom(WingParams::default()).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for (model, sel) in [
        (&aerofoil as &dyn FomModel, BasisSelection::default()),
        (&wing, wing_selection(4, 5)),
    ] {
        let trim = trim_at_rest(model);
        let basis = select_basis(&spectrum(model, &trim), &sel).unwrap();
        let err = basis.biorthonormality_error();
        pass &= err <= 1e-8 && basis.m() <= 9;
        parts.push(format!("{} m={} err={err:.2e}", model.name(), basis.m()));
    }
    Verdict::new(pass, parts.join(", "))
}

// ------------------------------------------------------------------ 2

/// `D_kab = psi_k^H H[phi_a, phi_b] / 2`, `E_kabc = psi_k^H T[phi_a, phi_b, phi_c] / 6`
/// from exact monomial derivatives.
fn oracle(model: &PolynomialModel, w0: &[f64], rom: &ReducedModel) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = model.n;
    let phi = rom.basis.extended_phis();
    let psi = rom.basis.extended_psis();
    let (m, me) = (rom.m(), rom.extended_len());
    let mut d = vec![Complex64::default(); m * me * me];
    let mut e = vec![Complex64::default(); m * me * me * me];
    for i in 0..n {
        let hess = DMatrix::from_fn(n, n, |j, l| model.partial(i, &[j, l], w0));
        let third: Vec<f64> = (0..n * n * n)
            .map(|x| model.partial(i, &[x / (n * n), x / n % n, x % n], w0))
            .collect();
        for k in 0..m {
            let p = psi[(i, k)].conj();
            for a in 0..me {
                for b in 0..me {
                    let mut h = Complex64::default();
                    for j in 0..n {
                        for l in 0..n {
                            h += phi[(j, a)] * phi[(l, b)] * hess[(j, l)];
                        }
                    }
                    d[(k * me + a) * me + b] += p * h * 0.5;
                    for c in 0..me {
                        let mut t = Complex64::default();
                        for (x, v) in third.iter().enumerate() {
                            if *v != 0.0 {
                                t += phi[(x / (n * n), a)] * phi[(x / n % n, b)] * phi[(x % n, c)] * *v;
                            }
                        }
                        e[((k * me + a) * me + b) * me + c] += p * t / 6.0;
                    }
                }
            }
        }
    }
    (d, e)
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn fd_oracle() -> Verdict {
    let (mut worst_d, mut worst_e) = (0.0f64, 0.0f64);
    let mut failures = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 5) as usize;
        let model = PolynomialModel::random(&mut rng, n, 3, 4);
        let w0: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let jac = DMatrix::from_fn(n, n, |i, j| model.partial(i, &[j], &w0));
        let run = || -> Result<(f64, f64), Error> {
            let spectrum = eig_full(&jac)?;
            let n_complex = spectrum.values.iter().filter(|l| l.im > 0.0).count();
            let sel = BasisSelection {
                n_real: n - 2 * n_complex,
                n_complex,
                ..Default::default()
            };
            let basis = select_basis(&spectrum, &sel)?;
            let trim = TrimState {
                w0: w0.clone(),
                uc0: vec![],
                ud0: vec![],
                residual_norm: 0.0,
                iterations: 0,
            };
            let rom = build_rom(&model, &trim, basis, RomOrder::Cubic, &RomOptions::default())?;
            let (d, e) = oracle(&model, &w0, &rom);
            Ok((max_diff(rom.d.as_ref().unwrap(), &d), max_diff(rom.e.as_ref().unwrap(), &e)))
        };
        match run() {
            Ok((dd, de)) => {
                worst_d = worst_d.max(dd);
                worst_e = worst_e.max(de);
            }
            Err(_) => failures += 1,
        }
    }
    Verdict::new(
        failures == 0 && worst_d <= 1e-7 && worst_e <= 1e-7,
        format!("100 systems, n 2..6, worst |dD|={worst_d:.2e} |dE|={worst_e:.2e}, build failures {failures}"),
    )
}

// ------------------------------------------------------------------ 3

fn subcritical() -> Verdict {
    let u = 0.9 * flutter_speed();
    let (model, trim) = aerofoil_at(u);
    let rom = rom_for(model.as_ref(), &trim, &BasisSelection::default(), RomOrder::Quadratic);
    let mut dw = vec![0.0; model.layout().n()];
    dw[ALPHA_INDEX] = 0.05;
    let (_, z0) = perturbed_start(&rom, &dw);
    let (w_start, _) = reconstruct(&rom, &z0);
    let opts = SimOptions {
        dt: 0.05,
        t_end: 600.0,
        ..Default::default()
    };
    let full = simulate_fom(model.as_ref(), &w_start, &still(), &opts).unwrap();
    let reduced = simulate_rom(&rom, model.as_ref(), &z0, &still(), &opts).unwrap();
    let mut worst = 0.0f64;
    let mut parts = vec![format!("U*={u:.4}, m={}", rom.m())];
    for ch in ["xi", "alpha", "delta"] {
        let err = rms_error_of_peak(reduced.channel(ch).unwrap(), full.channel(ch).unwrap());
        worst = worst.max(err);
        parts.push(format!("{ch} {:.2}%", 100.0 * err));
    }
    Verdict::new(rom.m() == 4 && worst <= 0.02, parts.join(", "))
}

// ------------------------------------------------------------------ 4, 5

const LCO_HORIZON: f64 = 2500.0;

/// Pitch local maxima after the transient.
fn pitch_peaks(tr: &Trajectory, after: f64) -> Vec<f64> {
    let a = tr.channel("alpha").unwrap();
    (1..a.len() - 1)
        .filter(|&i| tr.times[i] >= after && a[i] > a[i - 1] && a[i] >= a[i + 1] && a[i] > 0.0)
        .map(|i| a[i])
        .collect()
}

struct LcoRun {
    amplitude: Option<f64>,
    diverged_at: Option<f64>,
}

fn rom_lco(model: &dyn FomModel, rom: &ReducedModel, dw: &[f64]) -> LcoRun {
    let z0 = rom.basis.project(dw);
    let opts = SimOptions {
        dt: 0.05,
        t_end: LCO_HORIZON,
        blowup: 1e3,
        ..Default::default()
    };
    match simulate_rom(rom, model, &z0, &still(), &opts) {
        Ok(tr) => LcoRun {
            amplitude: pitch_peaks(&tr, LCO_HORIZON / 2.0).into_iter().reduce(f64::max),
            diverged_at: None,
        },
        Err(Error::Divergence { time }) => LcoRun {
            amplitude: None,
            diverged_at: Some(time),
        },
        Err(e) => panic!("reduced run failed: {e}"),
    }
}

fn describe(run: &LcoRun) -> String {
    match (run.amplitude, run.diverged_at) {
        (Some(a), _) => format!("{a:.4}"),
        (None, Some(t)) => format!("unbounded (t={t:.0})"),
        _ => "no peaks".into(),
    }
}

struct AerofoilLco {
    u_f: f64,
    fom_amplitude: f64,
    fom_drift: f64,
    orders: [LcoRun; 3],
}

fn aerofoil_lco() -> AerofoilLco {
    let u_f = flutter_speed();
    let (model, trim) = aerofoil_at(1.1 * u_f);
    let mut dw = vec![0.0; model.layout().n()];
    dw[ALPHA_INDEX] = 0.01;
    let opts = SimOptions {
        dt: 0.05,
        t_end: LCO_HORIZON,
        ..Default::default()
    };
    let full = simulate_fom(model.as_ref(), &dw, &still(), &opts).unwrap();
    let peaks = pitch_peaks(&full, LCO_HORIZON / 2.0);
    let fom_drift = peaks.windows(2).map(|w| (w[1] / w[0] - 1.0).abs()).fold(0.0, f64::max);
    let cubic = rom_for(model.as_ref(), &trim, &BasisSelection::default(), RomOrder::Cubic);
    let orders = [RomOrder::Linear, RomOrder::Quadratic, RomOrder::Cubic]
        .map(|o| rom_lco(model.as_ref(), &cubic.truncated(o), &dw));
    AerofoilLco {
        u_f,
        fom_amplitude: peaks.iter().cloned().fold(0.0, f64::max),
        fom_drift,
        orders,
    }
}

fn lco_capture(lco: &AerofoilLco) -> Verdict {
    let bounded = lco.fom_drift < 0.01 && lco.fom_amplitude > 0.0;
    let order2 = lco.orders[1].amplitude.map(|a| (a / lco.fom_amplitude - 1.0).abs());
    let order1_unbounded = lco.orders[0].diverged_at.is_some();
    let order3 = lco.orders[2].amplitude.map(|a| a / lco.fom_amplitude - 1.0);
    Verdict::new(
        bounded && order2.is_some_and(|e| e <= 0.05) && order1_unbounded,
        format!(
            "U_F*={:.4} (reference 6.285), run at 1.1 U_F; FOM amplitude {:.4} drift {:.2e}; order 1 {}; order 2 {}; order 3 {} ({})",
            lco.u_f,
            lco.fom_amplitude,
            lco.fom_drift,
            describe(&lco.orders[0]),
            describe(&lco.orders[1]),
            describe(&lco.orders[2]),
            order3.map_or("n/a".into(), |e| format!("{:+.2}% vs FOM", 100.0 * e)),
        ),
    )
}

fn gust_inputs(trim: &TrimState, gust: Arc<dyn GustSignal>) -> GustInputs {
    GustInputs::new(trim.uc0.clone(), trim.ud0.clone(), gust, 1.0, 1.0)
}

fn wing_tip_peak_rom(wing: &FlexWing, trim: &TrimState, rom: &ReducedModel, inputs: &dyn InputSchedule, t_end: f64) -> (f64, Trajectory) {
    let opts = SimOptions {
        dt: 1e-2,
        t_end,
        ..Default::default()
    };
    let tr = simulate_rom(rom, wing, &vec![Complex64::default(); rom.m()], inputs, &opts).unwrap();
    let tip0 = trim.w0[wing.tip_index()];
    (peak_dev(tr.channel("tip_displacement").unwrap(), tip0), tr)
}

fn quadratic_sufficiency(lco: &AerofoilLco) -> Verdict {
    let aerofoil = match (lco.orders[1].amplitude, lco.orders[2].amplitude) {
        (Some(a2), Some(a3)) => Some((a3 / a2 - 1.0).abs()),
        _ => None,
    };

    let wing = build_flexwing_fom(WingParams::default()).unwrap();
    let trim = trim_at_rest(&wing);
    let cubic = rom_for(&wing, &trim, &wing_selection(4, 5), RomOrder::Cubic);
    let inputs = gust_inputs(&trim, Arc::new(OneMinusCosine { wg_max: 1.25, t_g: 2.0 }));
    let (p3, _) = wing_tip_peak_rom(&wing, &trim, &cubic, &inputs, 12.0);
    let (p2, _) = wing_tip_peak_rom(&wing, &trim, &cubic.truncated(RomOrder::Quadratic), &inputs, 12.0);
    let wing_change = (p3 / p2 - 1.0).abs();

    Verdict::new(
        aerofoil.is_some_and(|e| e < 0.01) && wing_change < 0.01,
        format!(
            "aerofoil LCO order 3 vs 2: {} (order 2 {}); flexwing gust tip peak order 2 {p2:.4} m, order 3 {p3:.4} m, change {:.2}%",
            aerofoil.map_or("undefined".into(), |e| format!("{:.2}%", 100.0 * e)),
            describe(&lco.orders[1]),
            100.0 * wing_change
        ),
    )
}

// ------------------------------------------------------------------ 6

fn mode_convergence() -> Verdict {
    let p = WingParams::default();
    let speed = p.u;
    let wing = build_flexwing_fom(p).unwrap();
    let trim = trim_at_rest(&wing);
    let spectrum = spectrum(&wing, &trim);
    let gust = Arc::new(VonKarman::new(0.25, 750.0, speed, 7, VonKarman::DEFAULT_COMPONENTS).unwrap());
    let inputs = gust_inputs(&trim, gust);
    let t_end = 30.0;
    let fom = simulate_fom(
        &wing,
        &trim.w0,
        &inputs,
        &SimOptions {
            dt: 1e-4,
            t_end,
            output_every: 100,
            ..Default::default()
        },
    )
    .unwrap();
    let tip0 = trim.w0[wing.tip_index()];
    let reference = deviations(fom.channel("tip_displacement").unwrap(), tip0);
    let mut errors = Vec::new();
    for (nr, nc) in [(0, 1), (1, 3), (1, 4), (4, 5)] {
        let basis = select_basis(&spectrum, &wing_selection(nr, nc)).unwrap();
        let rom = build_rom(&wing, &trim, basis, RomOrder::Quadratic, &RomOptions::default()).unwrap();
        let (_, tr) = wing_tip_peak_rom(&wing, &trim, &rom, &inputs, t_end);
        let err = rms_error_of_peak(&deviations(tr.channel("tip_displacement").unwrap(), tip0), &reference);
        errors.push((rom.m(), err));
    }
    let decreasing = errors.windows(2).all(|w| w[1].1 < w[0].1);
    let last = errors.last().unwrap().1;
    Verdict::new(
        decreasing && last <= 0.03,
        format!(
            "von Karman 0.25 m/s, L=750 m, seed 7, 30 s; {}; decreasing: {decreasing}",
            errors
                .iter()
                .map(|(m, e)| format!("{m} modes {:.3}%", 100.0 * e))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

// ------------------------------------------------------------------ 7

fn speedup() -> Verdict {
    let text = r#"
model = "flexwing"

[rom]
order = 2

[simulate]
dt = 1e-4
rom_dt = 1e-2
t_end = 22.0

[gust]
kind = "one-minus-cosine"
wg_max = 1.25
t_g = 2.0

[sweep]
parameter = "gust.t_g"
start = 0.5
stop = 20.0
count = 37
"#;
    let cfg = RunConfig::from_sources(text, &[]).unwrap();
    let n = build_flexwing_fom(WingParams::default()).unwrap().layout().n();
    let report = run_sweep(&cfg, 1).unwrap();
    let worst = report
        .series("tip_displacement", |c| c.rms_error)
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);
    Verdict::new(
        n >= 400 && report.cases.len() == 37 && report.failures() == 0 && report.speedup >= 50.0,
        format!(
            "{n} states, {} cases ({} failed), FOM {:.1} s at dt {:e}, ROM {:.2} s at dt {:e}, speedup {:.0}x, worst tip RMS error {:.2}%",
            report.cases.len(),
            report.failures(),
            report.fom_seconds,
            report.fom_dt,
            report.rom_seconds,
            report.rom_dt,
            report.speedup,
            100.0 * worst
        ),
    )
}

// ------------------------------------------------------------------ 8

fn flexibility_trend() -> Verdict {
    let mut fom_peaks = Vec::new();
    let mut rom_peaks = Vec::new();
    for sigma in [0.5, 1.0, 2.0, 4.0] {
        let wing = build_flexwing_fom(WingParams {
            sigma,
            ..Default::default()
        })
        .unwrap();
        let trim = trim_at_rest(&wing);
        let inputs = gust_inputs(&trim, Arc::new(OneMinusCosine { wg_max: 1.25, t_g: 2.0 }));
        let opts = SimOptions {
            dt: 1e-4,
            t_end: 12.0,
            output_every: 100,
            ..Default::default()
        };
        let fom = simulate_fom(&wing, &trim.w0, &inputs, &opts).unwrap();
        fom_peaks.push(peak_dev(fom.channel("tip_displacement").unwrap(), trim.w0[wing.tip_index()]));
        let rom = rom_for(&wing, &trim, &wing_selection(4, 5), RomOrder::Quadratic);
        rom_peaks.push(wing_tip_peak_rom(&wing, &trim, &rom, &inputs, 12.0).0);
    }
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let fmt = |v: &[f64]| v.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" < ");
    Verdict::new(
        increasing(&fom_peaks) && increasing(&rom_peaks),
        format!(
            "sigma 0.5/1/2/4, 1-cos 1.25 m/s t_g 2 s: FOM tip peaks {} m, ROM {} m",
            fmt(&fom_peaks),
            fmt(&rom_peaks)
        ),
    )
}

// ------------------------------------------------------------------ 9

fn numerics() -> Verdict {
    let wing = build_flexwing_fom(WingParams {
        n_elements: 10,
        n_strips: 10,
        free_flight: true,
        gravity: false,
        aero: false,
        thrust: 0.0,
        payload_mass: 50.0,
        ..Default::default()
    })
    .unwrap();
    let o = wing.rigid_offset().unwrap();
    let mut w0 = wing.initial_state();
    w0[o + 3..o + 6].copy_from_slice(&[0.3, -0.5, 0.7]);
    let tr = simulate_fom(
        &wing,
        &w0,
        &still(),
        &SimOptions {
            dt: 0.01,
            t_end: 10.0,
            ..Default::default()
        },
    )
    .unwrap();
    let drift = tr.meta.max_quaternion_drift;

    let rk4_error = |dt: f64| {
        let y = rk4(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = -2.0 * y[0],
            &[1.0],
            dt,
            (1.0 / dt).round() as usize,
            1e12,
            |_| {},
            |_, _, _| {},
        )
        .unwrap();
        (y[0] - (-2.0f64).exp()).abs()
    };
    let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&dt| rk4_error(dt)).collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let ratios_ok = ratios.iter().all(|r| (r / 16.0 - 1.0).abs() <= 0.2);

    let c = INDICIAL;
    let endpoints = [
        (wagner(0.0).unwrap(), 1.0 - c.psi1 - c.psi2),
        (kussner(0.0).unwrap(), 1.0 - c.psi3 - c.psi4),
        (wagner(1e4).unwrap(), 1.0),
        (kussner(1e4).unwrap(), 1.0),
    ];
    let endpoints_exact = endpoints.iter().all(|(a, b)| a == b);

    Verdict::new(
        drift < 1e-8 && ratios_ok && endpoints_exact,
        format!(
            "quaternion drift {drift:.1e}; RK4 ratios {}; Wagner(0)={} Kussner(0)={:e}, both 1 at large tau: {endpoints_exact}",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join("/"),
            endpoints[0].0,
            endpoints[1].0
        ),
    )
}

// ------------------------------------------------------------------ 10

fn persistence() -> Verdict {
    let prov = Provenance {
        model: "synthetic".into(),
        fingerprint: "0f".repeat(32),
        selection: Some(BasisSelection::default()),
        created_unix: 1_700_000_000,
    };
    let mut exact = 0;
    let (mut corruptions, mut detected) = (0usize, 0usize);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n_real = rng.random_range(0..3);
        let n_complex = rng.random_range(1..4);
        let n = rng.random_range(n_real + 2 * n_complex..24);
        let order = RomOrder::from_int(rng.random_range(1..=3)).unwrap();
        let rom = ReducedModel::synthetic(&mut rng, n, n_real, n_complex, (1, 1), order);
        let bytes = encode(&rom, &prov).unwrap();
        let (back, p) = decode(&bytes).unwrap();
        if back == rom && p == prov && encode(&back, &p).unwrap() == bytes {
            exact += 1;
        }
        for i in 0..bytes.len() {
            let mut bad = bytes.clone();
            bad[i] ^= 1 << rng.random_range(0..8);
            corruptions += 1;
            detected += usize::from(decode(&bad).is_err());
        }
        let cut = rng.random_range(0..bytes.len());
        corruptions += 1;
        detected += usize::from(decode(&bytes[..cut]).is_err());
    }
    Verdict::new(
        exact == 20 && detected == corruptions,
        format!("{exact}/20 bit-exact round trips; {detected}/{corruptions} corruptions detected"),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    // Shared by criteria 4 and 5.
    let lco = OnceCell::new();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("biorthonormality", Box::new(biorthonormality)),
        ("finite-difference oracle", Box::new(fd_oracle)),
        ("sub-critical fidelity", Box::new(subcritical)),
        ("LCO capture", Box::new(|| lco_capture(lco.get_or_init(aerofoil_lco)))),
        ("quadratic sufficiency", Box::new(|| quadratic_sufficiency(lco.get_or_init(aerofoil_lco)))),
        ("mode-count convergence", Box::new(mode_convergence)),
        ("speedup", Box::new(speedup)),
        ("flexibility trend", Box::new(flexibility_trend)),
        ("numerics hygiene", Box::new(numerics)),
        ("persistence", Box::new(persistence)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "criterion {:>2} {} {name}: {} [{:.1} s]",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.0} s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 || std::env::var_os("NMOR_ACCEPTANCE_STRICT").is_none() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
