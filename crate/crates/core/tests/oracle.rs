// Closed-form packet solutions: the release-time form, conservation laws,
// the certified backflow constructor, and the quadrature helpers.

use approx::assert_relative_eq;
use arrival_core::constants::Constants;
use arrival_core::error::OracleError;
use arrival_core::grid::Grid1;
use arrival_core::oracle::{
    analytic_density, analytic_flux, analytic_gaussian, analytic_logderiv, analytic_osmotic,
    analytic_velocity, cumulative_curve, gaussian_arrival_curve, integrate_adaptive,
    make_backflow_state, GaussianParams, SuperposedGaussians,
};
use arrival_core::scalar::C;

fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + h * i as f64);
    }
    acc * h
}

#[test]
fn release_time_form_is_the_plain_gaussian() {
    let p = GaussianParams::new(-3.0, 1.4, 2.3, 0.7).unwrap();
    let cs = Constants::natural();
    let norm = (2.0 * std::f64::consts::PI * p.s * p.s).powf(-0.25);
    for &x in &[-5.0, -3.0, -1.2, 0.0, 2.6] {
        let xt = x - p.x0;
        let expect = C::from_polar(norm * (-xt * xt / (4.0 * p.s * p.s)).exp(), p.k0 * xt);
        let got = analytic_gaussian(&p, &cs, x, p.t0);
        assert_relative_eq!(got.re, expect.re, epsilon = 1e-14, max_relative = 1e-13);
        assert_relative_eq!(got.im, expect.im, epsilon = 1e-14, max_relative = 1e-13);
    }

    // at the release time the form cannot depend on hbar or the mass
    let other = Constants::new(0.31, 2.7);
    for &x in &[-4.0, -2.5, 1.0] {
        let a = analytic_gaussian(&p, &cs, x, p.t0);
        let b = analytic_gaussian(&p, &other, x, p.t0);
        assert_relative_eq!(a.re, b.re, epsilon = 1e-15);
        assert_relative_eq!(a.im, b.im, epsilon = 1e-15);
    }
}

#[test]
fn packet_stays_normalized_while_it_spreads() {
    let p = GaussianParams::new(0.0, 1.0, 2.0, 0.0).unwrap();
    let cs = Constants::natural();
    for &t in &[0.0, 1.7, 6.3] {
        let n = trapezoid(|x| analytic_density(&p, &cs, x, t), -80.0, 80.0, 16000);
        assert!((n - 1.0).abs() <= 1e-10, "norm at t = {t}: {n}");
    }

    // variance follows the complex-width law s^2 (1 + (hbar t / 2 m s^2)^2)
    let t = 3.0;
    let centre = p.x0 + cs.hbar_over_m() * p.k0 * t;
    let var = trapezoid(
        |x| (x - centre).powi(2) * analytic_density(&p, &cs, x, t),
        -80.0,
        80.0,
        16000,
    );
    let expect = p.s * p.s * (1.0 + (cs.hbar * t / (2.0 * cs.mass * p.s * p.s)).powi(2));
    assert_relative_eq!(var, expect, max_relative = 1e-8);
}

#[test]
fn closed_form_satisfies_the_schrodinger_equation() {
    // nontrivial constants so a dropped hbar or mass would show
    let cs = Constants::new(0.7, 1.3);
    let p = GaussianParams::new(-3.0, 1.3, 1.7, 0.4).unwrap();
    let h = 5e-3;
    for &(x, t) in &[(0.7, 0.9), (-2.3, 2.1), (5.1, 4.2)] {
        let f = |x: f64, t: f64| analytic_gaussian(&p, &cs, x, t);
        let dpsi_dt = (-f(x, t + 2.0 * h) + f(x, t + h) * 8.0 - f(x, t - h) * 8.0
            + f(x, t - 2.0 * h))
            / (12.0 * h);
        let d2psi = (-f(x + 2.0 * h, t) + f(x + h, t) * 16.0 - f(x, t) * 30.0
            + f(x - h, t) * 16.0
            - f(x - 2.0 * h, t))
            / (12.0 * h * h);
        let lhs = C::new(0.0, cs.hbar) * dpsi_dt;
        let rhs = d2psi * (-cs.hbar * cs.hbar / (2.0 * cs.mass));
        let resid = (lhs - rhs).norm();
        assert!(resid <= 1e-7, "residual {resid} at ({x}, {t})");

        // the log derivative is the derivative of the log
        let hd = 1e-4;
        let fd = (f(x + hd, t) - f(x - hd, t)) / (2.0 * hd) / f(x, t);
        let ld = analytic_logderiv(&p, &cs, x, t);
        assert!((fd - ld).norm() <= 1e-6 * (1.0 + ld.norm()));
    }
}

#[test]
fn field_decomposition_is_consistent() {
    let cs = Constants::new(0.9, 1.8);
    let p = GaussianParams::new(-1.0, 1.2, 1.5, 0.0).unwrap();
    let h = 1e-4;
    for &(x, t) in &[(0.4, 0.8), (-2.0, 1.9), (1.3, 3.2)] {
        // osmotic velocity against a finite-difference density ratio
        let drho = (analytic_density(&p, &cs, x + h, t) - analytic_density(&p, &cs, x - h, t))
            / (2.0 * h);
        let u_fd = 0.5 * cs.hbar_over_m() * drho / analytic_density(&p, &cs, x, t);
        assert_relative_eq!(analytic_osmotic(&p, &cs, x, t), u_fd, max_relative = 1e-6);

        // flux = rho v, all from the same log derivative
        let j = analytic_flux(&p, &cs, x, t);
        let rv = analytic_density(&p, &cs, x, t) * analytic_velocity(&p, &cs, x, t);
        assert_relative_eq!(j, rv, epsilon = 1e-300, max_relative = 1e-13);
    }

    // at the moving centre the velocity is exactly the group velocity and
    // the flux vanishes with the wavenumber
    let still = GaussianParams::new(0.0, 1.0, 0.0, 0.0).unwrap();
    assert_eq!(analytic_flux(&still, &cs, 0.0, 0.0), 0.0);
    let moving = GaussianParams::new(0.0, 1.0, 4.0, 0.0).unwrap();
    let vc = analytic_velocity(&moving, &cs, cs.hbar_over_m() * 4.0 * 2.5, 2.5);
    assert_relative_eq!(vc, cs.hbar_over_m() * 4.0, max_relative = 1e-12);
}

#[test]
fn superposition_norm_matches_the_overlap_formula() {
    let cs = Constants::natural();
    let p1 = GaussianParams::new(-4.0, 1.2, 1.0, 0.0).unwrap();
    let p2 = GaussianParams::new(-4.0, 1.2, 2.5, 0.0).unwrap();
    let mut terms = SuperposedGaussians {
        terms: vec![
            (C::new(0.8, 0.0), p1),
            (C::from_polar(0.6, 0.7), p2),
        ],
    };
    let closed = terms.norm_sq();
    let numeric = trapezoid(|x| terms.density(&cs, x, 0.0), -60.0, 60.0, 24000);
    assert_relative_eq!(closed, numeric, max_relative = 1e-10);

    terms.rescale(closed.sqrt().recip());
    let renorm = trapezoid(|x| terms.density(&cs, x, 0.0), -60.0, 60.0, 24000);
    assert!((renorm - 1.0).abs() <= 1e-10);
}

#[test]
fn backflow_state_comes_with_a_verified_witness() {
    let grid = Grid1::new(38.0, 512).unwrap();
    let cs = Constants::natural();
    let state = make_backflow_state(
        &grid,
        &cs,
        1.0,
        2.0,
        (C::new(1.0, 0.0), C::from_polar(0.7, std::f64::consts::PI)),
        2.0,
        -16.0,
        12.0,
    )
    .unwrap();

    assert!(state.witness.flux < -1e-4, "witness flux {}", state.witness.flux);
    assert!(state.witness.t > 0.0 && state.witness.t <= 12.0);
    assert_eq!(state.witness.x, 0.0);
    assert!(state.witness.verify(&state.terms, &cs));
    assert!((state.terms.norm_sq() - 1.0).abs() <= 1e-12);
    assert!((state.wave.norm_sq() - 1.0).abs() <= 1e-12);

    // a witness that disagrees with the closed form must not verify
    let mut fake = state.witness;
    fake.flux = state.witness.flux * 2.0;
    assert!(!fake.verify(&state.terms, &cs));
    let mut positive = state.witness;
    positive.t = 0.01;
    positive.flux = state.terms.flux(&cs, 0.0, 0.01);
    assert!(!positive.verify(&state.terms, &cs) || positive.flux < 0.0);
}

#[test]
fn degenerate_backflow_requests_are_refused() {
    let grid = Grid1::new(38.0, 256).unwrap();
    let cs = Constants::natural();
    let w = (C::new(1.0, 0.0), C::new(1.0, 0.0));

    // two equal packets are one packet; its face flux never turns negative
    let same = make_backflow_state(&grid, &cs, 2.0, 2.0, w, 1.0, -10.0, 10.0);
    match same {
        Err(OracleError::NoBackflowFound { best_flux, t_samples, .. }) => {
            assert!(best_flux > 0.0, "best flux should stay positive, got {best_flux}");
            assert!(t_samples >= 1000);
        }
        other => panic!("expected the search to come up empty, got {other:?}"),
    }

    assert!(matches!(
        make_backflow_state(&grid, &cs, -1.0, 2.0, w, 1.0, -10.0, 10.0),
        Err(OracleError::Degenerate(_))
    ));
    assert!(matches!(
        make_backflow_state(&grid, &cs, 1.0, 2.0, w, 1.0, -10.0, 0.0),
        Err(OracleError::Degenerate(_))
    ));
    assert!(matches!(
        make_backflow_state(&grid, &cs, 1.0, 2.0, (C::new(0.0, 0.0), C::new(1.0, 0.0)), 1.0, -10.0, 10.0),
        Err(OracleError::Degenerate(_))
    ));
    assert!(GaussianParams::new(0.0, -1.0, 1.0, 0.0).is_err());
}

#[test]
fn adaptive_quadrature_hits_textbook_values() {
    let s = integrate_adaptive(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13);
    assert!((s - 2.0).abs() <= 1e-12, "integral of sin: {s}");
    let q = integrate_adaptive(|x: f64| 4.0 / (1.0 + x * x), 0.0, 1.0, 1e-13);
    assert!((q - std::f64::consts::PI).abs() <= 1e-12, "quarter circle: {q}");
    assert_eq!(integrate_adaptive(|_| 1.0f64, 2.0, 2.0, 1e-13), 0.0);
    assert_eq!(integrate_adaptive(|_| 1.0f64, 3.0, 2.0, 1e-13), 0.0);

    let times = [0.5, 1.0, 2.0];
    let c = cumulative_curve(|t: f64| t.cos(), &times, 1e-13);
    for (k, &t) in times.iter().enumerate() {
        assert!((c[k] - t.sin()).abs() <= 1e-12);
    }
}

#[test]
fn arrival_curve_obeys_the_continuity_law() {
    // the time integral of the face flux must equal the density that has
    // moved past the face, because mass beyond x = 0 changes only through
    // that point on the free line
    let p = GaussianParams::new(-10.0, 1.0, 2.0, 0.0).unwrap();
    let cs = Constants::natural();
    let times: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64).collect();
    let curve = gaussian_arrival_curve(&p, &cs, 0.0, &times);

    let beyond = |t: f64| integrate_adaptive(|x| analytic_density(&p, &cs, x, t), 0.0, 90.0, 1e-13);
    let base = beyond(0.0);
    for (k, &t) in times.iter().enumerate() {
        let expect = beyond(t) - base;
        assert!(
            (curve[k] - expect).abs() <= 1e-9,
            "t = {t}: flux integral {} vs displaced mass {expect}",
            curve[k]
        );
    }

    // single right-moving packet: the curve never backs up and plateaus
    // just short of unity inside this horizon
    for pair in curve.windows(2) {
        assert!(pair[1] >= pair[0] - 1e-15);
    }
    let last = *curve.last().unwrap();
    assert!(last > 0.9745 && last < 0.9756, "plateau {last}");
}
