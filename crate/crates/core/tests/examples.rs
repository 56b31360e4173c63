//! Worked examples with independently computed reference values.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use kslab::capacity::{
    c_lambda, capacity_functional, j_lower_bound, kappa, riccati_oracle, t_infinity_bound, BlowupCase,
    BoundaryTraces, CapacityData, Profile,
};
use kslab::evolve::{integrate, l2_growth_check, picard_local_solve, step, Monitor, Outcome, RunConfig};
use kslab::field::{
    derivative, interpolation_check, lp_norm, neg_laplacian_power, norms, BoundaryKind, Field, Grid, VectorField,
};
use kslab::flows::{
    integrate_flow, leray_project, random_solenoidal, recover_pressure, regularity_monitor, rhs_flow,
    taylor_green, FlowMonitor, FlowState,
};
use kslab::kernels::{fit_decay, fundamental_solution, heat_semigroup_apply, kernel_grid, kernel_residual, Kernel};
use kslab::models::{apply_bcs, critical_exponents, rhs, Family, ModelSpec};
use kslab::rescale::{
    ck_rescale, designated_norm, reference_spectrum, scaling_coefficients, to_selfsimilar, Limit, ScalingKind,
    SpectrumCase,
};
use kslab::volterra::{volterra_beta, volterra_bound};
use num_rational::Rational64;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn sample(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Field {
    Field::from_fn(grid.clone(), f).unwrap()
}

fn two_pi(n: usize) -> Arc<Grid> {
    Grid::periodic_1d(0.0, 2.0 * PI, n).unwrap()
}

fn two_pi_square(n: usize) -> Arc<Grid> {
    Grid::periodic_cube(2, 2.0 * PI, n).unwrap()
}

fn vector(grid: &Arc<Grid>, u: impl Fn(&[f64]) -> f64, v: impl Fn(&[f64]) -> f64) -> VectorField {
    VectorField::from_fields(&[sample(grid, u), sample(grid, v)]).unwrap()
}

fn vector_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| max_diff(x, y))
        .fold(0.0, f64::max)
}

// ---- field core ----

#[test]
fn gaussian_second_derivative() {
    let g = Grid::periodic_1d(-10.0, 10.0, 256).unwrap();
    let f = sample(&g, |x| (-x[0] * x[0]).exp());
    let d2 = derivative(&f, 0, 2).unwrap();
    let exact = sample(&g, |x| (4.0 * x[0] * x[0] - 2.0) * (-x[0] * x[0]).exp());
    assert!(max_diff(d2.values(), exact.values()) <= 1e-8);
}

#[test]
fn first_derivative_and_fourth_derivative_of_sine() {
    let g = two_pi(64);
    let f = sample(&g, |x| x[0].sin());
    let d1 = derivative(&f, 0, 1).unwrap();
    assert!(max_diff(d1.values(), sample(&g, |x| x[0].cos()).values()) <= 1e-12);
    // Roundoff in the top modes is amplified by k⁴ ≈ 1e6.
    let d4 = derivative(&f, 0, 4).unwrap();
    assert!(max_diff(d4.values(), f.values()) <= 1e-9);
}

#[test]
fn laplacian_powers_on_eigenfunctions() {
    let g = two_pi(64);
    let s1 = sample(&g, |x| x[0].sin());
    let s2 = sample(&g, |x| (2.0 * x[0]).sin());
    let out = neg_laplacian_power(&s2, 2.0).unwrap();
    let expected: Vec<f64> = s2.values().iter().map(|v| 16.0 * v).collect();
    assert!(max_diff(out.values(), &expected) <= 1e-9);
    assert!(max_diff(neg_laplacian_power(&s1, 1.0).unwrap().values(), s1.values()) <= 1e-12);
    assert!(max_diff(neg_laplacian_power(&s1, -1.0).unwrap().values(), s1.values()) <= 1e-12);
}

#[test]
fn constant_and_zero_norms() {
    let g = two_pi(64);
    let one = norms(&sample(&g, |_| 1.0), &[3.0]).unwrap();
    assert!((one.l2 - (2.0 * PI).sqrt()).abs() <= 1e-12);
    let zero = norms(&Field::zeros(g), &[1.0, 3.0]).unwrap();
    assert_eq!(zero.l2, 0.0);
    assert_eq!(zero.linf, 0.0);
    assert_eq!(zero.lp(3.0), Some(0.0));
    assert_eq!(zero.hminus1, Some(0.0));
}

#[test]
fn sine_l2_and_hminus1() {
    let r = norms(&sample(&two_pi(64), |x| x[0].sin()), &[]).unwrap();
    assert!((r.l2 - PI.sqrt()).abs() <= 1e-12);
    assert!((r.hminus1.unwrap() - PI.sqrt()).abs() <= 1e-12);
}

/// Hinged grid on (-1/2, 1/2), i.e. the unit interval shifted.
fn unit_hinged() -> Arc<Grid> {
    Grid::interval(0.5, 257, BoundaryKind::Navier).unwrap()
}

#[test]
fn single_mode_saturates_the_interpolation_inequality() {
    let g = unit_hinged();
    let r = interpolation_check(&sample(&g, |x| (PI * (x[0] + 0.5)).sin())).unwrap();
    assert!(r.gagliardo.satisfied);
    assert!((r.gagliardo.lhs - r.gagliardo.rhs).abs() <= 1e-10 * r.gagliardo.rhs);
    // Closed form: ∫|Dv|² = π²/2 for sin(πx) on (0, 1).
    assert!((r.gagliardo.lhs - PI * PI / 2.0).abs() <= 1e-3);
}

#[test]
fn two_modes_are_strictly_inside() {
    let g = unit_hinged();
    let v = sample(&g, |x| {
        let s = x[0] + 0.5;
        (PI * s).sin() + 0.3 * (3.0 * PI * s).sin()
    });
    let r = interpolation_check(&v).unwrap();
    // Parseval: coefficients 1 and 0.3 on modes π and 3π, each with weight 1/2.
    let e0 = 0.5 * (1.0 + 0.09);
    let e1 = 0.5 * (PI.powi(2) + 0.09 * (3.0 * PI).powi(2));
    let e2 = 0.5 * (PI.powi(4) + 0.09 * (3.0 * PI).powi(4));
    assert!(e1 < (e0 * e2).sqrt());
    assert!((r.gagliardo.lhs - e1).abs() <= 1e-3 * e1);
    assert!(r.gagliardo.satisfied && r.gagliardo.lhs < r.gagliardo.rhs * (1.0 - 1e-3));
    assert!(r.embedding.satisfied);
    let zero = interpolation_check(&Field::zeros(g)).unwrap();
    assert!(zero.gagliardo.satisfied && zero.gagliardo.lhs == 0.0);
}

// ---- models ----

#[test]
fn zero_is_a_stationary_point() {
    let g = Grid::interval(4.0, 129, BoundaryKind::Navier).unwrap();
    let out = rhs(&ModelSpec::kse_ibvp(), &Field::zeros(g)).unwrap();
    assert!(out.values().iter().all(|&v| v == 0.0));
}

#[test]
fn mkse_of_sine() {
    let g = two_pi(64);
    let out = rhs(&ModelSpec::mkse(1, 2.0, 1), &sample(&g, |x| x[0].sin())).unwrap();
    let expected = sample(&g, |x| 0.5 * (2.0 * x[0]).sin());
    assert!(max_diff(out.values(), expected.values()) <= 1e-9);
}

#[test]
fn non_divergent_constant_only_feels_the_absorption() {
    let g = two_pi(32);
    let c = 0.7;
    let out = rhs(&ModelSpec::new(Family::NonDivergent, 2, 3.0, 1), &sample(&g, |_| c)).unwrap();
    assert!(out.values().iter().all(|v| (v + c * c * c).abs() <= 1e-14));
}

#[test]
fn exponent_examples() {
    let r = critical_exponents(2, 1, Some(Rational64::from_integer(2))).unwrap();
    assert_eq!(r.p0_mkse, Rational64::from_integer(7));
    assert!(r.mkse_subcritical(Rational64::from_integer(2)));
    assert_eq!(r.gamma0, Some(Rational64::new(3, 10)));
    let r = critical_exponents(1, 3, None).unwrap();
    assert_eq!(r.p0_burnett, Rational64::from_integer(3));
}

#[test]
fn hinged_projection() {
    let g = Grid::interval(2.0, 257, BoundaryKind::Navier).unwrap();
    let l = 2.0;
    let basis = sample(&g, |x| (PI * (x[0] + l) / (2.0 * l)).sin());
    assert!(max_diff(apply_bcs(&basis).unwrap().values(), basis.values()) <= 1e-12);
    let c = sample(&g, |x| (PI * x[0] / l).cos());
    let projected = apply_bcs(&c).unwrap();
    let vals = projected.values();
    assert!(vals[0].abs() <= 1e-12 && vals[vals.len() - 1].abs() <= 1e-12);
    // Trapezoid sine-series projection onto sin(kπ(x+L)/2L), k < n-1; the
    // discrete series reproduces the interior samples.
    let xs = g.coordinates(0);
    let h = g.spacing(0);
    let mut reference = vec![0.0; xs.len()];
    for k in 1..xs.len() - 1 {
        let phi: Vec<f64> = xs.iter().map(|x| (k as f64 * PI * (x + l) / (2.0 * l)).sin()).collect();
        let coef: f64 = c.values().iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() * h / l;
        for (r, p) in reference.iter_mut().zip(&phi) {
            *r += coef * p;
        }
    }
    assert!(max_diff(vals, &reference) <= 1e-12);
}

#[test]
fn clamped_ends_vanish() {
    let g = Grid::interval(1.0, 257, BoundaryKind::Dirichlet).unwrap();
    let v = apply_bcs(&sample(&g, |x| 1.0 + x[0] + x[0].powi(3))).unwrap();
    let vals = v.values();
    let n = vals.len();
    let h = g.spacing(0);
    assert!(vals[0].abs() <= 1e-14 && vals[n - 1].abs() <= 1e-14);
    // Second-order one-sided first derivatives at both ends.
    let left = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h);
    let right = (3.0 * vals[n - 1] - 4.0 * vals[n - 2] + vals[n - 3]) / (2.0 * h);
    assert!(left.abs() <= 1e-8 && right.abs() <= 1e-8, "{left} {right}");
}

// ---- evolve ----

#[test]
fn linearized_kse_symbols() {
    let g = two_pi(64);
    let spec = ModelSpec::mkse(1, 2.0, 1).with_drift(vec![0.0]);
    let s1 = sample(&g, |x| x[0].sin());
    assert!(max_diff(step(&spec, &s1, 0.37).unwrap().values(), s1.values()) <= 1e-12);
    let dt: f64 = 0.05;
    let s2 = sample(&g, |x| (2.0 * x[0]).sin());
    let expected: Vec<f64> = s2.values().iter().map(|v| (-12.0 * dt).exp() * v).collect();
    assert!(max_diff(step(&spec, &s2, dt).unwrap().values(), &expected) <= 1e-14);
}

#[test]
fn heat_decay_of_first_mode() {
    let g = two_pi(64);
    let spec = ModelSpec::new(Family::PureDivergent, 1, 2.0, 1).with_drift(vec![0.0]);
    let s = sample(&g, |x| x[0].sin());
    let dt: f64 = 0.1;
    let expected: Vec<f64> = s.values().iter().map(|v| (-dt).exp() * v).collect();
    assert!(max_diff(step(&spec, &s, dt).unwrap().values(), &expected) <= 1e-14);
}

#[test]
fn short_hinged_kse_decays() {
    let l = FRAC_PI_2;
    let g = Grid::interval(l, 129, BoundaryKind::Navier).unwrap();
    let v0 = sample(&g, |x| (PI * x[0] / l).sin());
    let cfg = RunConfig::new(ModelSpec::kse_ibvp(), v0, 1e-3, 2.0).with_monitors(&[Monitor::L2]);
    let t = integrate(&cfg).unwrap();
    assert_eq!(t.outcome, Outcome::Completed);
    let l2 = t.series("l2").unwrap();
    assert!(l2.windows(2).all(|w| w[1] <= w[0]));
    assert!(l2[l2.len() - 1] < 1e-3 * l2[0]);
}

#[test]
fn cahn_hilliard_large_data_blows_up() {
    let v0 = sample(&two_pi(512), |x| 10.0 * x[0].sin());
    let spec = ModelSpec::new(Family::CahnHilliard, 2, 3.0, 1);
    let cfg = RunConfig::new(spec, v0, 1e-8, 1e-2).with_monitors(&[Monitor::SupNorm]);
    let t = integrate(&cfg).unwrap();
    let Outcome::BlowUp { lower, upper } = t.outcome else {
        panic!("expected blow-up, got {:?}", t.outcome);
    };
    assert!(lower < upper && upper < 1e-3);
    assert!(t.series("sup_norm").unwrap().last().unwrap() > &1e6);
}

#[test]
fn zero_data_gives_zero_trajectory() {
    let cfg = RunConfig::new(ModelSpec::mkse(1, 2.0, 1), Field::zeros(two_pi(32)), 1e-2, 1.0);
    let t = integrate(&cfg).unwrap();
    assert_eq!(t.outcome, Outcome::Completed);
    assert!(t.series.iter().all(|(_, v)| v.iter().all(|&x| x == 0.0)));
    assert_eq!(l2_growth_check(&t, 0.0).unwrap().max_ratio, 0.0);
}

#[test]
fn kse_ibvp_respects_the_l2_bound() {
    let g = Grid::interval(4.0, 129, BoundaryKind::Navier).unwrap();
    let v0 = sample(&g, |x| (PI * x[0] / 4.0).sin());
    let cfg = RunConfig::new(ModelSpec::kse_ibvp(), v0, 1e-3, 5.0).with_monitors(&[Monitor::L2BoundRatio]);
    let r = l2_growth_check(&integrate(&cfg).unwrap(), 1e-6).unwrap();
    assert!(r.within_bound, "max ratio {}", r.max_ratio);
}

#[test]
fn heat_stays_below_the_l2_bound() {
    let g = two_pi(64);
    let spec = ModelSpec::new(Family::PureDivergent, 1, 2.0, 1).with_drift(vec![0.0]);
    let cfg = RunConfig::new(spec, sample(&g, |x| x[0].sin()), 1e-2, 2.0).with_monitors(&[Monitor::L2]);
    let r = l2_growth_check(&integrate(&cfg).unwrap(), 0.0).unwrap();
    assert!(r.within_bound && r.max_ratio <= 1.0);
}

#[test]
fn picard_without_nonlinearity_is_the_semigroup() {
    let g = two_pi(64);
    let spec = ModelSpec::new(Family::PureDivergent, 2, 2.0, 1).with_drift(vec![0.0]);
    let v0 = sample(&g, |x| x[0].sin() + 0.5 * (3.0 * x[0]).cos());
    let r = picard_local_solve(&spec, &v0, 0.2, 1).unwrap();
    let exact = heat_semigroup_apply(2, 0.2, &v0).unwrap();
    assert!(max_diff(r.solution.values(), exact.values()) <= 1e-14);
}

#[test]
fn picard_agrees_with_the_stepper() {
    let g = two_pi(64);
    let spec = ModelSpec::mkse(1, 2.0, 1);
    let v0 = sample(&g, |x| 0.01 * x[0].sin());
    let r = picard_local_solve(&spec, &v0, 0.01, 8).unwrap();
    let t = integrate(&RunConfig::new(spec, v0, 1e-4, 0.01)).unwrap();
    assert!(max_diff(r.solution.values(), t.final_state[0].values()) <= 1e-5);
    assert!(r.contraction_ratios.iter().all(|&q| q < 0.5), "{:?}", r.contraction_ratios);
}

// ---- kernels and bounds ----

fn kernel(m: u32, grid: &Arc<Grid>) -> Kernel {
    fundamental_solution(m, grid).unwrap()
}

#[test]
fn heat_kernel_is_the_gaussian() {
    let g = kernel_grid(1, 40.0, 2048).unwrap();
    let k = kernel(1, &g);
    let gaussian = sample(&g, |y| (-y[0] * y[0] / 4.0).exp() / (4.0 * PI).sqrt());
    let centre = k.profile.values()[1024];
    assert!((centre - 0.282_094_791_773_878_1).abs() <= 1e-10);
    assert!(max_diff(k.profile.values(), gaussian.values()) <= 1e-10);
    assert!((k.mass - 1.0).abs() <= 1e-8);
    assert!(kernel_residual(&k).unwrap() <= 1e-8);
}

#[test]
fn biharmonic_kernel_oscillates() {
    let g = kernel_grid(1, 40.0, 2048).unwrap();
    let k = kernel(2, &g);
    assert!((k.mass - 1.0).abs() <= 1e-8);
    assert!(k.profile.values().iter().any(|&v| v < -1e-3));
    assert!(kernel_residual(&k).unwrap() <= 1e-6);
}

#[test]
fn perturbed_kernel_is_detected() {
    let g = kernel_grid(1, 40.0, 2048).unwrap();
    let mut k = kernel(2, &g);
    let bumped: Vec<f64> = k
        .profile
        .values()
        .iter()
        .zip(g.coordinates(0))
        .map(|(v, y)| v + 0.01 * (-(y - 2.0).powi(2)).exp())
        .collect();
    k.profile = Field::new(g.clone(), bumped).unwrap();
    assert!(kernel_residual(&k).unwrap() > 1e-3);
}

#[test]
fn decay_exponents() {
    let g = kernel_grid(1, 40.0, 2048).unwrap();
    let mut k1 = kernel(1, &g);
    assert!((fit_decay(&mut k1).unwrap().alpha - 2.0).abs() <= 0.02);
    let mut k2 = kernel(2, &kernel_grid(1, 120.0, 2048).unwrap());
    let alpha = fit_decay(&mut k2).unwrap().alpha;
    assert!((alpha - 4.0 / 3.0).abs() <= 0.05 * 4.0 / 3.0, "{alpha}");
    assert!(k2.decay.is_some());
}

#[test]
fn semigroup_examples() {
    let g = two_pi(64);
    let s = sample(&g, |x| x[0].sin());
    assert_eq!(heat_semigroup_apply(2, 0.0, &s).unwrap().values(), s.values());
    let out = heat_semigroup_apply(2, 1.0, &s).unwrap();
    let expected: Vec<f64> = s.values().iter().map(|v| v / std::f64::consts::E).collect();
    assert!(max_diff(out.values(), &expected) <= 1e-14);
}

#[test]
fn semigroup_sup_bound() {
    let l1 = kernel(2, &kernel_grid(1, 120.0, 2048).unwrap()).l1_norm();
    assert!(l1 > 1.0);
    let g = Grid::periodic_1d(-20.0, 20.0, 512).unwrap();
    let v0 = sample(&g, |x| (x[0] * 1.3).sin().signum() * (x[0].cos().abs() + 0.1));
    for t in [0.01, 0.3, 2.0] {
        let out = heat_semigroup_apply(2, t, &v0).unwrap();
        assert!(out.sup_norm() <= l1 * v0.sup_norm() * (1.0 + 1e-12));
    }
}

#[test]
fn capacity_constants() {
    assert!((kappa(7.0, 1.0) - (63.0f64 / 4.0).sqrt()).abs() <= 1e-12);
    let exact = 42.0 * (400.0 + 40.0 / 3.0 + 1.0 / 5.0);
    assert!((c_lambda(7.0, 1.0).unwrap() - exact).abs() <= 1e-9 * exact);
    let zero = CapacityData {
        boundary: BoundaryTraces::default(),
        interior: Profile::Constant { value: 0.0 },
    };
    let c = capacity_functional(&zero, 7.0, 1.0).unwrap();
    assert_eq!((c.j, c.b0), (0.0, 0.0));
    assert_eq!(c.h, -c.c_lambda);
}

#[test]
fn closed_form_certificates() {
    let strict = BlowupCase::Strict { a: 1.0 };
    assert!((t_infinity_bound(&strict, 1.0, 0.0).unwrap() - FRAC_PI_2).abs() <= 1e-15);
    assert!((t_infinity_bound(&BlowupCase::Zero, 2.0, 1.0).unwrap() - 0.25).abs() <= 1e-15);
    assert!((j_lower_bound(&BlowupCase::Zero, 2.0, 1.0, 0.1).unwrap() - 1.0 / 0.6).abs() <= 1e-12);
    let negative = BlowupCase::Negative { a: 1.0 };
    assert!((t_infinity_bound(&negative, 1.0, 2.0).unwrap() - 0.5 * 3.0f64.ln()).abs() <= 1e-15);
}

#[test]
fn riccati_oracle_tracks_the_closed_forms() {
    for (case, k, j0) in [
        (BlowupCase::Strict { a: 1.0 }, 1.0, 0.0),
        (BlowupCase::Zero, 2.0, 1.0),
        (BlowupCase::Negative { a: 1.0 }, 1.0, 2.0),
    ] {
        let t_inf = t_infinity_bound(&case, k, j0).unwrap();
        let ts: Vec<f64> = (0..=90).map(|i| 0.01 * i as f64 * t_inf).collect();
        let series = riccati_oracle(&case, k, j0, &ts).unwrap();
        assert_eq!(series.times.len(), ts.len());
        for (t, j) in series.times.iter().zip(&series.values) {
            let exact = j_lower_bound(&case, k, j0, *t).unwrap();
            assert!((j - exact).abs() <= 1e-8 * exact.abs().max(1e-300), "{} t={t}", case.name());
        }
    }
}

#[test]
fn riccati_equilibria() {
    let ts: Vec<f64> = (0..=10).map(|i| 0.1 * i as f64).collect();
    let zero = riccati_oracle(&BlowupCase::Zero, 1.0, 0.0, &ts).unwrap();
    assert!(zero.values.iter().all(|&j| j == 0.0));
    let (a, k) = (1.5, 2.0);
    let rest = riccati_oracle(&BlowupCase::Negative { a }, k, a / k, &ts).unwrap();
    assert!(rest.values.iter().all(|&j| (j - a / k).abs() <= 1e-14));
}

#[test]
fn volterra_examples() {
    assert_eq!(volterra_beta(2.0, 2, 1), 5.0 / 8.0);
    let r = volterra_bound(2.0, 2, 1, 3.0).unwrap();
    assert_eq!(r.v[0], 1.0);
    assert!(r.bounded);
    assert!(r.v.iter().zip(&r.v_hat).all(|(v, b)| v <= b));
}

// ---- flows ----

#[test]
fn projector_annihilates_gradients() {
    let g = two_pi_square(32);
    let u = vector(&g, |x| x[0].cos() * x[1].cos(), |x| -x[0].sin() * x[1].sin());
    let p = leray_project(&u).unwrap();
    assert!(p.sup_norm() <= 1e-14);
}

#[test]
fn projector_fixes_solenoidal_fields() {
    let g = two_pi_square(32);
    // ψ = sin x sin y
    let u = vector(&g, |x| -x[0].sin() * x[1].cos(), |x| x[0].cos() * x[1].sin());
    assert!(vector_diff(&leray_project(&u).unwrap(), &u) <= 1e-14);
}

#[test]
fn projector_splits_a_mixed_field() {
    let g = two_pi_square(32);
    let u = vector(
        &g,
        |x| x[1].sin() + x[0].cos() * x[1].sin(),
        |x| x[0].sin() * x[1].cos(),
    );
    let expected = vector(&g, |x| x[1].sin(), |_| 0.0);
    assert!(vector_diff(&leray_project(&u).unwrap(), &expected) <= 1e-14);
}

#[test]
fn taylor_green_right_hand_sides() {
    let g = two_pi_square(32);
    let v = taylor_green(&g, 1.0).unwrap();
    for (m, rate) in [(1u32, 2.0), (2, 4.0)] {
        let out = rhs_flow(&FlowState::new(v.clone(), m).unwrap()).unwrap();
        let expected = VectorField::new(
            g.clone(),
            v.components().iter().map(|c| c.iter().map(|x| -rate * x).collect()).collect(),
        )
        .unwrap();
        assert!(vector_diff(&out, &expected) <= 1e-10);
    }
    let zero = VectorField::new(g.clone(), vec![vec![0.0; g.len()]; 2]).unwrap();
    assert_eq!(rhs_flow(&FlowState::new(zero, 1).unwrap()).unwrap().sup_norm(), 0.0);
}

#[test]
fn taylor_green_decay_rates() {
    let g = two_pi_square(64);
    for (m, rate) in [(1u32, 2.0), (2, 4.0)] {
        let s = FlowState::new(taylor_green(&g, 1.0).unwrap(), m).unwrap();
        let (t, end) = integrate_flow(&s, 1e-3, 1.0, &[FlowMonitor::SupNorm], 0).unwrap();
        assert_eq!(t.outcome, Outcome::Completed);
        let expected = (-rate as f64).exp();
        assert!((end.velocity.sup_norm() - expected).abs() <= 1e-8);
    }
}

#[test]
fn random_flow_energy() {
    let g = two_pi_square(32);
    let s = FlowState::new(random_solenoidal(&g, 3, 6, 1.0).unwrap(), 1).unwrap();
    let (t, _) = integrate_flow(&s, 5e-4, 0.5, &[FlowMonitor::Energy, FlowMonitor::EnergyResidual], 0).unwrap();
    let e = t.series("energy").unwrap();
    assert!(e.windows(2).all(|w| w[1] <= w[0]));
    assert!(t.series("energy_residual").unwrap().iter().all(|&r| r <= 1e-6));
}

#[test]
fn regularity_thresholds() {
    let g = two_pi_square(32);
    let s = FlowState::new(taylor_green(&g, 1.0).unwrap(), 1).unwrap();
    let (t, _) = integrate_flow(&s, 1e-2, 1.0, &[FlowMonitor::Lp(2.0), FlowMonitor::Lp(3.0)], 0).unwrap();
    let r = regularity_monitor(&t, 1, 2, 2.0, 1.0).unwrap();
    assert_eq!(r.p0, 2.0);
    assert!(r.critical && !r.above_threshold);
    let r3 = regularity_monitor(&t, 2, 3, 3.0, 1.0).unwrap();
    assert_eq!(r3.p0, 1.0);
    assert!(r3.above_threshold);
    // ‖v(t)‖₃³ = ‖v₀‖₃³ e^{-6t}, so the Serrin average never exceeds its initial size.
    let cap = lp_norm(&s.velocity.magnitude(), 3.0).unwrap().powi(3);
    assert!(!r.serrin.is_empty());
    assert!(r.serrin.iter().all(|&(_, v)| v.is_finite() && v <= cap * (1.0 + 1e-9)));
}

#[test]
fn taylor_green_pressure_and_shift() {
    let g = two_pi_square(32);
    let zero = VectorField::new(g.clone(), vec![vec![0.0; g.len()]; 2]).unwrap();
    assert_eq!(recover_pressure(&FlowState::new(zero, 1).unwrap()).unwrap().sup_norm(), 0.0);

    let p = recover_pressure(&FlowState::new(taylor_green(&g, 1.0).unwrap(), 1).unwrap()).unwrap();
    let exact = sample(&g, |x| -0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()));
    assert!(max_diff(p.values(), exact.values()) <= 1e-13);

    let h = 2.0 * PI / 32.0;
    let (sx, sy) = (3.0 * h, 5.0 * h);
    let shifted = vector(
        &g,
        |x| (x[0] - sx).cos() * (x[1] - sy).sin(),
        |x| -(x[0] - sx).sin() * (x[1] - sy).cos(),
    );
    let ps = recover_pressure(&FlowState::new(shifted, 1).unwrap()).unwrap();
    let moved = sample(&g, |x| -0.25 * ((2.0 * (x[0] - sx)).cos() + (2.0 * (x[1] - sy)).cos()));
    assert!(max_diff(ps.values(), moved.values()) <= 1e-13);
}

// ---- rescale ----

#[test]
fn coefficient_exponents() {
    let l = scaling_coefficients(ScalingKind::CkL2, 2, 1, 2.0, 10.0).unwrap();
    assert!((l.get("nu_k").unwrap() - 1e-5).abs() <= 1e-17);
    assert_eq!(l.limit, Some(Limit::Subcritical));
    for ck in [2.0, 17.0] {
        let c = scaling_coefficients(ScalingKind::CkLp, 1, 3, 3.0, ck).unwrap();
        assert_eq!(c.get("nu_k"), Some(1.0));
        assert_eq!(c.limit, Some(Limit::Critical));
    }
    let six = scaling_coefficients(ScalingKind::CkL2, 2, 6, 2.0, 10.0).unwrap();
    assert_eq!(six.limit, Some(Limit::Critical));
    let tt = scaling_coefficients(ScalingKind::TminusT, 2, 1, 2.0, 1.0).unwrap();
    assert_eq!(tt.get("alpha"), Some(0.75));
}

#[test]
fn unit_distance_slice_is_the_identity() {
    let g = two_pi(64);
    let v = sample(&g, |x| x[0].sin() + 0.2 * (3.0 * x[0]).cos());
    let (w, tau) = to_selfsimilar(&v, 2.0, 1.0, 2, 2.0, None).unwrap();
    assert_eq!(tau, 0.0);
    assert_eq!(w.values(), v.values());
    assert_eq!(w.grid().extents(), g.extents());
}

#[test]
fn self_similar_data_is_a_fixed_profile() {
    let (m, p, big_t) = (2u32, 3.0, 1.0f64);
    let alpha = (2.0 * m as f64 - 1.0) / (2.0 * m as f64 * (p - 1.0));
    let target = Grid::periodic_1d(-PI, PI, 64).unwrap();
    let f = |y: f64| y.sin() + 0.4 * (2.0 * y).cos() + 0.1;
    let reference = sample(&target, |y| f(y[0]));
    for t in [0.0, 0.5, 0.9] {
        let s = (big_t - t).powf(1.0 / (2.0 * m as f64));
        // The x-grid is the self-similar period scaled back, so v is band-limited on it.
        let g = Grid::periodic_1d(-PI * s, PI * s, 64).unwrap();
        let v = sample(&g, |x| (big_t - t).powf(-alpha) * f(x[0] / s));
        let (w, _) = to_selfsimilar(&v, big_t, t, m, p, Some(&target)).unwrap();
        assert!(max_diff(w.values(), reference.values()) <= 1e-8, "t = {t}");
    }
}

#[test]
fn ck_examples() {
    let g = two_pi(64);
    let v = sample(&g, |x| x[0].sin());
    let one = scaling_coefficients(ScalingKind::CkL2, 2, 1, 2.0, 1.0).unwrap();
    let same = ck_rescale(&v, &one, None).unwrap();
    assert_eq!(same.values(), v.values());

    let law = scaling_coefficients(ScalingKind::CkL2, 2, 1, 2.0, 4.0).unwrap();
    assert_eq!(law.get("a_k"), Some(1.0 / 16.0));
    let w = ck_rescale(&v, &law, None).unwrap();
    let (a, b) = (lp_norm(&v, 2.0).unwrap(), lp_norm(&w, 2.0).unwrap());
    assert!((a - b).abs() <= 1e-10);

    let g3 = Grid::periodic_cube(3, 2.0 * PI, 16).unwrap();
    let v3 = sample(&g3, |x| x[0].sin() * x[1].cos() + 0.5 * (x[2] - x[1]).sin() + 0.1);
    let law3 = scaling_coefficients(ScalingKind::CkLp, 1, 3, 3.0, 6.0).unwrap();
    let w3 = ck_rescale(&v3, &law3, None).unwrap();
    let (a3, b3) = (
        designated_norm(&v3, ScalingKind::CkLp, 3.0).unwrap(),
        designated_norm(&w3, ScalingKind::CkLp, 3.0).unwrap(),
    );
    assert!((a3 - b3).abs() <= 1e-9);
}

#[test]
fn spectra_examples() {
    assert_eq!(reference_spectrum(SpectrumCase::Nse, 1, 2), vec![-0.5, -1.0, -1.5]);
    assert_eq!(reference_spectrum(SpectrumCase::Burnett, 2, 0), vec![-0.75]);
    let generic = reference_spectrum(SpectrumCase::Generic { alpha: 0.75 }, 2, 2);
    assert_eq!(generic[1], -1.0);
}
