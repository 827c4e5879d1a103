use proptest::prelude::*;
use velojump::field::uniform_axis;
use velojump::kinetic::{
    convergence_report, exchange_rate, kinetic_solve, linear_f_solve, periodize, KineticOptions,
};
use velojump::{Error, VelocityMeasure};

fn interval() -> VelocityMeasure<f64> {
    VelocityMeasure::uniform_interval(-1.0, 1.0).unwrap()
}

fn tent(x: &[f64]) -> f64 {
    x[0].abs().min(1.0)
}

fn grid(n: usize) -> Vec<f64> {
    uniform_axis(-2.0, 2.0, n, true).unwrap()
}

#[test]
fn constant_data_is_stationary() {
    let m = interval();
    let x = grid(200);
    let phi0 = vec![0.6; 200];
    let f = kinetic_solve(&m, &x, &phi0, 0.1, 0.5, &Default::default()).unwrap();
    assert!(f.values.last().unwrap().iter().all(|&p| p == 0.6));
    let report = convergence_report(&m, &|_: &[f64]| 0.6, &x, &[0.2, 0.1], 0.5, &Default::default()).unwrap();
    for row in &report.rows {
        assert!(row.error < 1e-12 && row.v_spread == 0.0, "{row:?}");
    }
}

#[test]
fn a_priori_bounds_hold_for_all_epsilons() {
    let m = interval();
    let x = grid(500);
    let phi0: Vec<f64> = x.iter().map(|&xi| tent(&[xi])).collect();
    for eps in [1.0, 0.3, 0.05, 0.01] {
        let opts = KineticOptions { output_times: vec![0.1, 0.2, 0.3], ..Default::default() };
        let f = kinetic_solve(&m, &x, &phi0, eps, 0.4, &opts).unwrap();
        for k in 0..f.times.len() {
            let (lo, hi) = f.values[k].iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            assert!(lo >= -1e-8 && hi <= 1.0 + 1e-8);
            assert!(f.v_lipschitz(k) <= f.times[k] * (1.0 + 1e-8) + 1e-8);
        }
    }
}

#[test]
fn step_limits() {
    let m = interval();
    let x = grid(100);
    let phi0: Vec<f64> = x.iter().map(|&xi| tent(&[xi])).collect();
    // dx = 0.04: transport limit 0.036, stiff limit eps/4 = 0.005
    let opts = KineticOptions { dt: Some(0.01), ..Default::default() };
    let err = kinetic_solve(&m, &x, &phi0, 0.02, 0.1, &opts).unwrap_err();
    assert!(matches!(err, Error::CflViolation { .. }));
    let opts = KineticOptions { dt: Some(0.004), ..Default::default() };
    let f = kinetic_solve(&m, &x, &phi0, 0.02, 0.1, &opts).unwrap();
    assert!(f.dt <= 0.004 + 1e-15);
}

#[test]
fn epsilon_list_must_decrease() {
    let m = interval();
    let x = grid(50);
    let err = convergence_report(&m, &tent, &x, &[0.1, 0.2], 0.1, &Default::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn linear_formulation_conserves_mass() {
    let m = interval();
    let x = grid(400);
    let phi0: Vec<f64> = x.iter().map(|&xi| tent(&[xi])).collect();
    let opts = KineticOptions { output_times: vec![0.1, 0.2, 0.3, 0.4], ..Default::default() };
    let f = linear_f_solve(&m, &x, &phi0, 0.1, 0.5, &opts).unwrap();
    assert!(f.mass_drift() < 1e-12, "drift {}", f.mass_drift());
    assert!(f.density.iter().flatten().all(|&g| g >= 0.0));
}

#[test]
fn linear_formulation_constant_is_stationary() {
    let m = interval();
    let x = grid(100);
    let phi0 = vec![0.3; 100];
    let f = linear_f_solve(&m, &x, &phi0, 0.2, 0.5, &Default::default()).unwrap();
    let g0 = (-0.3f64 / 0.2).exp();
    for &g in f.density.last().unwrap() {
        assert!((g - g0).abs() <= 1e-15 * g0);
    }
}

#[test]
fn linear_formulation_underflow_guard() {
    let m = interval();
    let x = grid(50);
    let phi0: Vec<f64> = x.iter().map(|&xi| tent(&[xi])).collect();
    let err = linear_f_solve(&m, &x, &phi0, 1e-3, 0.1, &Default::default()).unwrap_err();
    assert!(matches!(err, Error::UnderflowRisk { .. }));
}

#[test]
fn two_formulations_agree_at_moderate_epsilon() {
    let m = interval();
    let x = grid(2000);
    let phi0: Vec<f64> = x.iter().map(|&xi| tent(&[xi])).collect();
    let eps = 0.5;
    let opts = KineticOptions { output_times: vec![0.25], ..Default::default() };
    let a = kinetic_solve(&m, &x, &phi0, eps, 0.5, &opts).unwrap();
    let b = linear_f_solve(&m, &x, &phi0, eps, 0.5, &opts).unwrap().recovered_potential();
    for k in 0..a.times.len() {
        let d = a.values[k]
            .iter()
            .zip(&b.values[k])
            .fold(0.0f64, |d, (p, q)| d.max((p - q).abs()));
        assert!(d < 5e-3, "t = {}: {d}", a.times[k]);
    }
}

#[test]
fn grid_refinement_smaller_than_epsilon_gap() {
    let m = interval();
    let phi0 = periodize(-2.0, 2.0, tent);
    let coarse = convergence_report(&m, &phi0, &grid(500), &[0.2, 0.1], 0.5, &Default::default()).unwrap();
    let fine = convergence_report(&m, &phi0, &grid(1000), &[0.2, 0.1], 0.5, &Default::default()).unwrap();
    let gap = coarse.rows[0].error - coarse.rows[1].error;
    for (c, f) in coarse.rows.iter().zip(&fine.rows) {
        assert!((c.error - f.error).abs() < gap, "eps {}: {} vs {}", c.epsilon, c.error, f.error);
    }
    assert!(coarse.errors_decreasing() && coarse.spreads_decreasing());
}

proptest! {
    #[test]
    fn max_shift_identity(
        row in prop::collection::vec(0.0..1.0f64, 2..12),
        eps in 0.2..2.0f64,
        pick in 0usize..12,
    ) {
        let n = row.len();
        let w = vec![1.0 / n as f64; n];
        let a = pick % n;
        let shifted = exchange_rate(&row, &w, a, eps, true);
        let direct = exchange_rate(&row, &w, a, eps, false);
        prop_assert!((shifted - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }
}
