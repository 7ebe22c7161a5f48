use nmor_core::aero::{kussner, strip_state_rates, wagner, SectionMotion, StripGeometry, INDICIAL};
use nmor_core::sim::rk4;

fn geometry(flap: bool) -> StripGeometry {
    StripGeometry {
        b: 0.5,
        a: -0.5,
        u: 25.0,
        rho: 0.0889,
        flap_hinge: flap.then_some(0.8),
    }
}

#[test]
fn indicial_functions_are_bounded_and_monotone() {
    for f in [wagner, kussner] {
        let mut prev = f(0.0).unwrap();
        for i in 1..=20_000 {
            let v = f(i as f64 * 0.01).unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
        assert!(f(-1e-9).is_err());
    }
}

#[test]
fn indicial_endpoints() {
    let c = INDICIAL;
    assert_eq!(wagner(0.0).unwrap(), 1.0 - c.psi1 - c.psi2);
    assert!((wagner(0.0).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(kussner(0.0).unwrap(), 1.0 - c.psi3 - c.psi4);
    assert!(kussner(0.0).unwrap().abs() < 1e-15);
    assert_eq!(wagner(1e4).unwrap(), 1.0);
    assert_eq!(kussner(1e4).unwrap(), 1.0);
}

type Motion = SectionMotion<f64>;

fn rates(geom: &StripGeometry, m: &Motion, gust: f64, aug: &[f64]) -> (Vec<f64>, [f64; 3]) {
    let mut out = vec![0.0; aug.len()];
    let l = strip_state_rates(geom, m, gust, aug, &mut out);
    (out, [l.cl, l.cm, l.ch])
}

#[test]
fn augmented_dynamics_superpose() {
    let geom = geometry(true);
    let m1 = Motion {
        alpha: 0.03,
        alpha_dot: -0.2,
        h_dot: 0.4,
        delta: 0.01,
        delta_dot: 0.3,
    };
    let m2 = Motion {
        alpha: -0.01,
        alpha_dot: 0.5,
        h_dot: -1.1,
        delta: -0.02,
        delta_dot: 0.1,
    };
    let x1: Vec<f64> = (0..8).map(|i| 0.01 * i as f64).collect();
    let x2: Vec<f64> = (0..8).map(|i| -0.003 * (i * i) as f64).collect();
    let (g1, g2) = (0.7, -1.3);
    let (a, b) = (2.0, -0.5);
    let sum = Motion {
        alpha: a * m1.alpha + b * m2.alpha,
        alpha_dot: a * m1.alpha_dot + b * m2.alpha_dot,
        h_dot: a * m1.h_dot + b * m2.h_dot,
        delta: a * m1.delta + b * m2.delta,
        delta_dot: a * m1.delta_dot + b * m2.delta_dot,
    };
    let xs: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + b * q).collect();
    let (r1, l1) = rates(&geom, &m1, g1, &x1);
    let (r2, l2) = rates(&geom, &m2, g2, &x2);
    let (rs, ls) = rates(&geom, &sum, a * g1 + b * g2, &xs);
    for i in 0..8 {
        let expect = a * r1[i] + b * r2[i];
        assert!((rs[i] - expect).abs() <= 1e-13 * (1.0 + expect.abs()), "rate {i}");
    }
    for i in 0..3 {
        let expect = a * l1[i] + b * l2[i];
        assert!((ls[i] - expect).abs() <= 1e-13 * (1.0 + expect.abs()), "load {i}");
    }
}

#[test]
fn gust_states_decay_at_kussner_rates() {
    let geom = geometry(false);
    let still = Motion::rigid(0.0, 0.0, 0.0);
    let dt = 1e-3;
    let steps = 500;
    let y = rk4(
        |_, y: &[f64], dy: &mut [f64]| {
            strip_state_rates(&geom, &still, 0.0, y, dy);
        },
        &[0.0, 0.0, 1.0, 1.0],
        dt,
        steps,
        1e12,
        |_| {},
        |_, _, _| {},
    )
    .unwrap();
    let t = dt * steps as f64;
    let c = INDICIAL;
    for (x, eps) in [(y[2], c.eps3), (y[3], c.eps4)] {
        let fitted = -x.ln() / t;
        let expected = eps * geom.u / geom.b;
        assert!((fitted / expected - 1.0).abs() < 0.01, "fitted {fitted}, expected {expected}");
    }
    assert_eq!(&y[..2], &[0.0, 0.0]);
}

#[test]
fn steady_lift_slope_is_two_pi() {
    let geom = geometry(false);
    let m = Motion::rigid(0.01, 0.0, 0.0);
    let c = INDICIAL;
    let aug = [0.01 / c.eps1, 0.01 / c.eps2, 0.0, 0.0];
    let (r, l) = rates(&geom, &m, 0.0, &aug);
    assert!(r.iter().all(|v| v.abs() < 1e-15));
    assert!((l[0] - 2.0 * std::f64::consts::PI * 0.01).abs() < 1e-14);
}
