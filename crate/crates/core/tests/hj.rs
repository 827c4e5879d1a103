use proptest::prelude::*;
use velojump::field::uniform_axis;
use velojump::hj::{lax_friedrichs_solve, lax_friedrichs_stencil, Boundary, HopfLax, LaxFriedrichsOptions};
use velojump::VelocityMeasure;

fn interval() -> VelocityMeasure<f64> {
    VelocityMeasure::uniform_interval(-1.0, 1.0).unwrap()
}

fn double_well(y: &[f64]) -> f64 {
    (y[0] - 1.0).abs().min((y[0] + 1.0).abs())
}

fn h_interval(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p / p.tanh() - 1.0
    }
}

/// Dense brute-force Hopf-Lax for the symmetric interval, with
/// `L(v) = sup_p [p v − H(p)]` from a dense `p` scan.
fn brute_hopf_lax(phi0: impl Fn(f64) -> f64, t: f64, x: f64) -> f64 {
    let ps: Vec<f64> = (0..=40_000).map(|k| -40.0 + 80.0 * k as f64 / 40_000.0).collect();
    let hs: Vec<f64> = ps.iter().map(|&p| h_interval(p)).collect();
    let rate = |v: f64| {
        ps.iter()
            .zip(&hs)
            .map(|(p, h)| p * v - h)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    (0..=4000)
        .map(|k| {
            let v = -1.0 + 2.0 * k as f64 / 4000.0;
            phi0(x - t * v) + t * rate(v)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn hopf_lax_abs_matches_dense_grid_oracle() {
    let m = interval();
    let hl = HopfLax::new(&m).unwrap();
    for (t, x) in [(0.5, 0.0), (0.3, 0.1), (1.0, -0.4)] {
        let v = hl.eval(&|y: &[f64]| y[0].abs(), t, &[x]).unwrap();
        let oracle = brute_hopf_lax(|y| y.abs(), t, x);
        assert!((v - oracle).abs() < 2e-4, "t = {t}, x = {x}: {v} vs {oracle}");
    }
}

#[test]
fn hopf_lax_double_well_minimum_of_plane_waves() {
    // at x = 0 both wells contribute; the minimizer sits where the slope is ±1
    let m = interval();
    let hl = HopfLax::new(&m).unwrap();
    let t = 0.5;
    let v = hl.eval(&double_well, t, &[0.0]).unwrap();
    // φ = min over branches of 1 - t H(±1) when the ramp is not yet truncated
    let expected = 1.0 - t * h_interval(1.0);
    assert!((v - expected).abs() < 1e-8, "{v} vs {expected}");
}

#[test]
fn lax_friedrichs_matches_hopf_lax_on_double_well() {
    let m = interval();
    let x = uniform_axis(-3.0, 3.0, 6001, false).unwrap();
    let phi0: Vec<f64> = x.iter().map(|&xi| double_well(&[xi])).collect();
    let t = 0.5;
    let lf = lax_friedrichs_solve(&m, &x, None, &phi0, t, &Default::default()).unwrap();
    let hl = HopfLax::new(&m).unwrap();
    let mut err: f64 = 0.0;
    for i in (1000..=5000).step_by(20) {
        let exact = hl.eval(&double_well, t, &[x[i]]).unwrap();
        err = err.max((lf.last()[i] - exact).abs());
    }
    assert!(err <= 2e-2, "sup error {err}");
    lf.check_lipschitz(1.0, 1e-6).unwrap();
}

#[test]
fn plane_wave_slope_preserved() {
    let m = interval();
    let p = 0.7;
    let x = uniform_axis(-1.0, 1.0, 201, false).unwrap();
    let phi0: Vec<f64> = x.iter().map(|&xi| p * xi).collect();
    let t = 0.4;
    let f = lax_friedrichs_solve(&m, &x, None, &phi0, t, &Default::default()).unwrap();
    for (i, &xi) in x.iter().enumerate() {
        let exact = p * xi - t * h_interval(p);
        assert!((f.last()[i] - exact).abs() < 1e-12, "x = {xi}");
    }
}

#[test]
fn comparison_principle_both_methods() {
    let m = interval();
    let x = uniform_axis(-2.0, 2.0, 401, false).unwrap();
    let lo: Vec<f64> = x.iter().map(|&xi| double_well(&[xi])).collect();
    let hi: Vec<f64> = x.iter().map(|&xi| double_well(&[xi]).max(0.5 - xi.abs())).collect();
    let opts = LaxFriedrichsOptions { output_times: vec![0.2, 0.4], ..Default::default() };
    let a = lax_friedrichs_solve(&m, &x, None, &lo, 0.6, &opts).unwrap();
    let b = lax_friedrichs_solve(&m, &x, None, &hi, 0.6, &opts).unwrap();
    for k in 0..a.times.len() {
        for (u, w) in a.values[k].iter().zip(&b.values[k]) {
            assert!(*u <= w + 1e-12);
        }
    }
    let hl = HopfLax::with_lattice_step(&m, 1e-2).unwrap();
    let upper = |y: &[f64]| double_well(y).max(0.5 - y[0].abs());
    for xi in [-1.3, -0.2, 0.0, 0.45, 1.0] {
        let u = hl.eval(&double_well, 0.6, &[xi]).unwrap();
        let w = hl.eval(&upper, 0.6, &[xi]).unwrap();
        assert!(u <= w + 1e-12);
    }
}

#[test]
fn finite_speed_of_propagation() {
    let m = interval();
    let hl = HopfLax::with_lattice_step(&m, 1e-2).unwrap();
    let t = 0.3;
    let bumped = |y: &[f64]| double_well(y) + if y[0] > 0.95 { 5.0 } else { 0.0 };
    // x = 0.5: cone [0.2, 0.8] misses the bump
    let a = hl.eval(&double_well, t, &[0.5]).unwrap();
    let b = hl.eval(&bumped, t, &[0.5]).unwrap();
    assert!((a - b).abs() < 1e-12);

    // the scheme's numerical cone has speed R/cfl
    let x = uniform_axis(-2.0, 2.0, 401, false).unwrap();
    let phi_a: Vec<f64> = x.iter().map(|&xi| double_well(&[xi])).collect();
    let phi_b: Vec<f64> = x.iter().map(|&xi| bumped(&[xi])).collect();
    let fa = lax_friedrichs_solve(&m, &x, None, &phi_a, t, &Default::default()).unwrap();
    let fb = lax_friedrichs_solve(&m, &x, None, &phi_b, t, &Default::default()).unwrap();
    let reach = t / 0.9 + 0.02;
    for (i, &xi) in x.iter().enumerate() {
        if xi < 0.95 - reach {
            assert_eq!(fa.last()[i], fb.last()[i], "x = {xi}");
        }
    }
}

#[test]
fn periodic_boundary_keeps_periodic_data_periodic() {
    let m = interval();
    let x: Vec<f64> = uniform_axis(-2.0, 2.0, 400, true).unwrap();
    let phi0: Vec<f64> = x.iter().map(|&xi| xi.abs().min(1.0)).collect();
    let opts = LaxFriedrichsOptions { boundary: Boundary::Periodic, ..Default::default() };
    let f = lax_friedrichs_solve(&m, &x, None, &phi0, 0.5, &opts).unwrap();
    // symmetric data stays symmetric: φ(x) = φ(−x), and x = −2 ≡ 2
    let last = f.last();
    for i in 1..200 {
        assert!((last[i] - last[400 - i]).abs() < 1e-12);
    }
    f.check_bounds(0.0, 1.0, 1e-12).unwrap();
}

#[test]
fn two_dimensional_cone_agrees_with_hopf_lax() {
    let m = VelocityMeasure::uniform_ball(2, 1.0).unwrap();
    let n = 121;
    let x = uniform_axis(-1.5, 1.5, n, false).unwrap();
    let cone = |y: &[f64]| (y[0] * y[0] + y[1] * y[1]).sqrt();
    let mut phi0 = Vec::with_capacity(n * n);
    for &xi in &x {
        for &yj in &x {
            phi0.push(cone(&[xi, yj]));
        }
    }
    let t = 0.3;
    let lf = lax_friedrichs_solve(&m, &x, Some(&x), &phi0, t, &Default::default()).unwrap();
    let hl = HopfLax::with_lattice_step(&m, 1e-2).unwrap();
    // away from the apex, where the scheme smears the convex kink
    for (i, j) in [(90, 60), (80, 90), (40, 30), (60, 20)] {
        let exact = hl.eval(&cone, t, &[x[i], x[j]]).unwrap();
        let got = lf.value(1, i, j);
        assert!((got - exact).abs() < 3e-2, "({i}, {j}): {got} vs {exact}");
    }
}

#[test]
fn two_dimensional_atomic_hopf_lax_plane_wave() {
    use velojump::Atom;
    let m = VelocityMeasure::atomic(vec![
        Atom::new(vec![1.0, 0.0], 0.5),
        Atom::new(vec![-1.0, 1.0], 0.25),
        Atom::new(vec![-1.0, -1.0], 0.25),
    ])
    .unwrap();
    let hl = HopfLax::new(&m).unwrap();
    let p = [0.4, -0.3];
    let t = 0.5;
    let v = hl.eval(&|y: &[f64]| p[0] * y[0] + p[1] * y[1], t, &[0.1, 0.2]).unwrap();
    let exact = p[0] * 0.1 + p[1] * 0.2 - t * m.hamiltonian(&p).unwrap();
    assert!((v - exact).abs() < 1e-6, "{v} vs {exact}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn stencil_monotone_under_random_perturbation(
        s in prop::collection::vec(-1.0..1.0f64, 3),
        bump in 0.0..0.05f64,
        which in 0usize..3,
        cfl in 0.1..0.99f64,
    ) {
        let dx = 0.01;
        let dt = cfl * dx;
        // values kept 1-Lipschitz so gradients stay in the data's range
        let base = [s[0] * dx, s[1] * dx, s[2] * dx];
        let out = |v: [f64; 3]| {
            let p = (v[2] - v[0]) / (2.0 * dx);
            lax_friedrichs_stencil(v[1], &[(v[0], v[2])], h_interval(p), &[dx], dt, 1.0)
        };
        let mut up = base;
        up[which] += bump * dx;
        prop_assert!(out(up) >= out(base) - 1e-15);
    }
}
