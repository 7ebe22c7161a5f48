use nalgebra::DMatrix;
use nmor_core::eig::{eig_full, Spectrum};
use nmor_core::models::aerofoil::{build_aerofoil_fom, AerofoilParams, ALPHA_INDEX};
use nmor_core::models::flexwing::{build_flexwing_fom, WingParams};
use nmor_core::models::linear::LinearModel;
use nmor_core::models::polynomial::PolynomialModel;
use nmor_core::reduction::{
    build_rom, reconstruct, ModeKind, select_basis, BasisSelection, PairRanking, ReducedModel, RomOptions, RomOrder,
};
use nmor_core::sim::{simulate_fom, simulate_rom, ConstantInputs, SimOptions};
use nmor_core::statespace::{find_trim, jacobian_fd, FomModel, TrimOptions, TrimState};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn everything(spectrum: &Spectrum) -> BasisSelection {
    let n_complex = spectrum.values.iter().filter(|l| l.im > 0.0).count();
    BasisSelection {
        n_real: spectrum.values.len() - 2 * n_complex,
        n_complex,
        ..Default::default()
    }
}

/// Interaction tensors from exact monomial derivatives:
/// `D_kab = psi_k^H H[phi_a, phi_b] / 2`, `E_kabc = psi_k^H T[phi_a, phi_b, phi_c] / 6`.
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fd_tensors_match_the_derivative_oracle(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = PolynomialModel::random(&mut rng, n, 3, 4);
        let w0: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let jac = DMatrix::from_fn(n, n, |i, j| model.partial(i, &[j], &w0));
        let spectrum = eig_full(&jac).unwrap();
        let basis = select_basis(&spectrum, &everything(&spectrum)).unwrap();
        let trim = TrimState { w0: w0.clone(), uc0: vec![], ud0: vec![], residual_norm: 0.0, iterations: 0 };
        let rom = build_rom(&model, &trim, basis, RomOrder::Cubic, &RomOptions::default()).unwrap();
        let (d, e) = oracle(&model, &w0, &rom);
        let dd = max_diff(rom.d.as_ref().unwrap(), &d);
        let de = max_diff(rom.e.as_ref().unwrap(), &e);
        prop_assert!(dd <= 1e-7, "D off by {dd:e}");
        prop_assert!(de <= 1e-7, "E off by {de:e}");
    }
}

#[test]
fn selected_bases_are_biorthonormal_for_both_models() {
    let aerofoil = build_aerofoil_fom(AerofoilParams::default()).unwrap();
    let wing = build_flexwing_fom(WingParams::default()).unwrap();
    let wing_sel = BasisSelection {
        n_real: 4,
        n_complex: 5,
        origin_radius: 100.0,
        ranking: PairRanking::Frequency,
    };
    for (model, sel) in [(&aerofoil as &dyn FomModel, BasisSelection::default()), (&wing, wing_sel)] {
        let n = model.layout().n();
        let trim = find_trim(model, &vec![0.0; n], &[0.0], &[0.0], &model.default_trim_mask(), &TrimOptions::default())
            .unwrap();
        let jac = jacobian_fd(model, &trim, 1e-6).unwrap();
        let spectrum = eig_full(&jac.matrix).unwrap();
        let basis = select_basis(&spectrum, &sel).unwrap();
        assert!(basis.m() <= 9);
        let err = basis.biorthonormality_error();
        assert!(err <= 1e-8, "{}: {err:e}", model.name());
    }
}

#[test]
fn quadratic_coefficients_are_robust_to_the_step() {
    // A steady flap deflection moves the trim off the symmetric point, so D is not zero.
    let model = build_aerofoil_fom(AerofoilParams::default()).unwrap();
    let n = model.layout().n();
    let trim = find_trim(&model, &vec![0.0; n], &[0.05], &[0.0], &model.default_trim_mask(), &TrimOptions::default())
        .unwrap();
    assert!(trim.w0[ALPHA_INDEX].abs() > 1e-4);
    let spectrum = eig_full(&jacobian_fd(&model, &trim, 1e-6).unwrap().matrix).unwrap();
    let basis = select_basis(&spectrum, &BasisSelection::default()).unwrap();
    let build = |epsilon: f64| {
        let opts = RomOptions {
            epsilon,
            ..Default::default()
        };
        build_rom(&model, &trim, basis.clone(), RomOrder::Quadratic, &opts).unwrap()
    };
    let coarse = build(1e-3);
    let fine = build(5e-4);
    let d1 = coarse.d.as_ref().unwrap();
    let dmax = d1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(dmax > 1e-3, "D should be non-trivial, max {dmax:e}");
    let rel = max_diff(d1, fine.d.as_ref().unwrap()) / dmax;
    assert!(rel <= 1e-4, "relative change {rel:e}");
    assert!(coarse.meta.epsilon_sensitivity <= 1e-4);
    assert!(coarse.meta.warnings.is_empty());
}

#[test]
fn linear_rom_reproduces_the_linearized_model() {
    let aerofoil = build_aerofoil_fom(AerofoilParams::default()).unwrap();
    let origin = TrimState {
        w0: vec![0.0; aerofoil.layout().n()],
        uc0: vec![0.0],
        ud0: vec![0.0],
        residual_norm: 0.0,
        iterations: 0,
    };
    let a = jacobian_fd(&aerofoil, &origin, 1e-6).unwrap().matrix;
    let n = a.nrows();
    let linear = LinearModel::new(a.clone(), DMatrix::zeros(n, 1), DMatrix::zeros(n, 1)).unwrap();
    let spectrum = eig_full(&a).unwrap();
    let basis = select_basis(&spectrum, &BasisSelection::default()).unwrap();
    let rom = build_rom(&linear, &origin, basis, RomOrder::Linear, &RomOptions::default()).unwrap();
    let z0: Vec<Complex64> = (0..rom.m())
        .map(|k| match rom.basis.kinds[k] {
            ModeKind::ComplexPair => Complex64::new(1e-3, -5e-4 * k as f64),
            ModeKind::RealNearOrigin => Complex64::new(2e-3, 0.0),
        })
        .collect();
    let (w_start, imag) = reconstruct(&rom, &z0);
    assert!(imag < 1e-15);
    let still = ConstantInputs {
        uc: vec![0.0],
        ud: vec![0.0],
    };
    let opts = SimOptions {
        dt: 0.05,
        t_end: 200.0,
        ..Default::default()
    };
    let full = simulate_fom(&linear, &w_start, &still, &opts).unwrap();
    let reduced = simulate_rom(&rom, &linear, &z0, &still, &opts).unwrap();
    // Relative RMS over the whole state history (the gust lag states stay at zero).
    let (mut num, mut den) = (0.0, 0.0);
    for (name, f) in full.channels.iter().zip(&full.series) {
        let r = reduced.channel(name).unwrap();
        num += r.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        den += f.iter().map(|b| b * b).sum::<f64>();
    }
    let rel = (num / den).sqrt();
    assert!(rel <= 1e-6, "relative RMS {rel:e}");
}

#[test]
fn truncating_a_cubic_model_drops_the_higher_tensors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rom = ReducedModel::synthetic(&mut rng, 8, 2, 2, (1, 1), RomOrder::Cubic);
    let quad = rom.truncated(RomOrder::Quadratic);
    assert!(quad.d.is_some() && quad.e.is_none());
    assert_eq!(quad.d, rom.d);
    let lin = rom.truncated(RomOrder::Linear);
    assert!(lin.d.is_none() && lin.e.is_none());
    assert_eq!(lin.basis, rom.basis);
}
