use proptest::prelude::*;
use velojump::measure::Atom;
use velojump::{Regime, VelocityMeasure};

fn interval() -> VelocityMeasure<f64> {
    VelocityMeasure::uniform_interval(-1.0, 1.0).unwrap()
}

fn ball(n: usize) -> VelocityMeasure<f64> {
    VelocityMeasure::uniform_ball(n, 1.0).unwrap()
}

fn skewed_atoms() -> VelocityMeasure<f64> {
    VelocityMeasure::atomic(vec![
        Atom::new(vec![1.0, 0.0], 0.5),
        Atom::new(vec![-1.0, 1.0], 0.25),
        Atom::new(vec![-1.0, -1.0], 0.25),
    ])
    .unwrap()
}

fn shells() -> VelocityMeasure<f64> {
    VelocityMeasure::tabulated_radial(2, 1.0, vec![2.0, 1.5, 1.0, 0.5]).unwrap()
}

/// `∫ M/(a − v·p)` for the uniform 3-ball, `|p| = b`, in closed form.
fn ball3_resolvent(a: f64, b: f64) -> f64 {
    let l = ((a + b) / (a - b)).ln();
    0.75 * ((b * b - a * a) * l + 2.0 * a * b) / b.powi(3)
}

/// Independent root of the 3-ball dispersion relation by plain bisection.
fn ball3_h(b: f64) -> f64 {
    let (mut lo, mut hi) = (b - 1.0, b + 10.0);
    lo += f64::EPSILON * (1.0 + lo.abs());
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if ball3_resolvent(1.0 + mid, b) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn interval_matches_coth_closed_form() {
    let m = interval();
    for k in 0..200 {
        let p = -8.0 + 16.0 * k as f64 / 199.0;
        if p == 0.0 {
            continue;
        }
        let exact = p / p.tanh() - 1.0;
        let h = m.hamiltonian(&[p]).unwrap();
        assert!((h - exact).abs() <= 1e-12 * (1.0 + exact), "p = {p}: {h} vs {exact}");
    }
}

#[test]
fn shifted_interval_is_tilted_symmetric_one() {
    // M uniform on [c-1, c+1] has H(p) = c p + p coth p - 1
    let m = VelocityMeasure::uniform_interval(-0.75, 1.25).unwrap();
    for p in [-3.0, -0.4, 0.2, 1.0, 4.0] {
        let exact = 0.25 * p + p / f64::tanh(p) - 1.0;
        let h = m.hamiltonian(&[p]).unwrap();
        assert!((h - exact).abs() < 1e-11, "p = {p}");
    }
}

#[test]
fn ball3_matches_closed_form_dispersion() {
    let m = ball(3);
    for b in [0.05, 0.3, 0.8, 1.2, 1.45, 1.499] {
        let h = m.hamiltonian(&[0.0, b, 0.0]).unwrap();
        let oracle = ball3_h(b);
        assert!((h - oracle).abs() < 1e-10, "|p| = {b}: {h} vs {oracle}");
    }
    for b in [1.5001, 2.0, 7.0] {
        let e = m.solve_h(&[b, 0.0, 0.0]).unwrap();
        assert_eq!(e.regime, Regime::Singular);
        assert_eq!(e.h, b - 1.0);
    }
}

#[test]
fn ball_rotational_invariance() {
    let m = ball(3);
    let a = m.hamiltonian(&[1.1, 0.0, 0.0]).unwrap();
    let s = 1.1 / 3f64.sqrt();
    let b = m.hamiltonian(&[s, -s, s]).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn quadrature_order_doubling_is_converged() {
    for n in [2, 3, 5] {
        let coarse = ball(n);
        let fine = ball(n).with_quadrature_order(400).unwrap();
        for r in [0.2, 0.9, 1.2] {
            let mut p = vec![0.0; n];
            p[0] = r;
            let a = coarse.hamiltonian(&p).unwrap();
            let b = fine.hamiltonian(&p).unwrap();
            assert!((a - b).abs() < 1e-9, "n = {n}, |p| = {r}");
        }
    }
}

#[test]
fn atom_weight_on_singular_set() {
    for n in [2usize, 3, 4] {
        let m = ball(n);
        let nf = n as f64;
        for r in [1.1, 2.0, 5.0] {
            let rho = r * nf / (nf - 1.0);
            let mut p = vec![0.0; n];
            p[n - 1] = rho;
            let q = m.eigenpair(&p).unwrap();
            // singular integral of the unit ball is n/((n-1)|p|)
            let alpha = 1.0 - nf / ((nf - 1.0) * rho);
            assert!((q.atom_weight - alpha).abs() < 1e-9, "n = {n}, rho = {rho}");
        }
    }
}

#[test]
fn sing_boundary_radius_of_ellipsoid_like_measures() {
    // ball of radius R: Sing boundary at n/((n-1) R)
    let m = VelocityMeasure::uniform_ball(3, 2.0).unwrap();
    let r: f64 = m.sing_boundary_radius(&[1.0, 1.0, 0.0]).unwrap();
    assert!((r - 0.75).abs() < 1e-9);
    assert!(skewed_atoms().sing_boundary_radius(&[0.3, 1.0]).unwrap().is_infinite());
}

#[test]
fn legendre_interval_first_order_condition() {
    let m = interval();
    for v in [-0.9, -0.3, 0.25, 0.7, 0.99] {
        let l = m.legendre(&[v]).unwrap();
        let p = l.argmax.unwrap()[0];
        let g = m.grad_h(&[p]).unwrap()[0];
        assert!((g - v).abs() < 1e-6, "v = {v}: grad {g}");
        assert!(l.value > 0.0);
    }
}

#[test]
fn f32_smoke() {
    let m = VelocityMeasure::<f32>::uniform_interval(-1.0, 1.0).unwrap();
    let h = m.hamiltonian(&[1.0]).unwrap();
    assert!((h - (1.0 / 1f32.tanh() - 1.0)).abs() < 1e-5);
    let b = VelocityMeasure::<f32>::uniform_ball(3, 1.0).unwrap();
    assert_eq!(b.classify(&[2.0, 0.0, 0.0]).unwrap(), Regime::Singular);
    let h = b.hamiltonian(&[0.5, 0.0, 0.0]).unwrap();
    assert!((h as f64 - ball3_h(0.5)).abs() < 1e-4);
}

fn measures() -> Vec<VelocityMeasure<f64>> {
    vec![
        interval(),
        VelocityMeasure::uniform_interval(-0.5, 2.0).unwrap(),
        ball(2),
        ball(3),
        skewed_atoms(),
        shells(),
    ]
}

fn momentum(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0..4.0f64, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bounded_below_by_mu_minus_one_and_mean(idx in 0usize..6, raw in momentum(3)) {
        let m = &measures()[idx];
        let p = &raw[..m.dimension()];
        let e = m.solve_h(p).unwrap();
        let mean = m.mean_velocity();
        let linear: f64 = mean.iter().zip(p).map(|(a, b)| a * b).sum();
        prop_assert!(e.h >= e.mu - 1.0 - 1e-12);
        prop_assert!(e.h >= linear - 1e-10);
        prop_assert!(e.h <= e.mu + 1e-12);
    }

    #[test]
    fn midpoint_convexity(idx in 0usize..6, a in momentum(3), b in momentum(3)) {
        let m = &measures()[idx];
        let n = m.dimension();
        let (a, b) = (&a[..n], &b[..n]);
        let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let hm = m.hamiltonian(&mid).unwrap();
        let ha = m.hamiltonian(a).unwrap();
        let hb = m.hamiltonian(b).unwrap();
        prop_assert!(hm <= 0.5 * (ha + hb) + 1e-10, "{hm} > avg of {ha}, {hb}");
    }

    #[test]
    fn dispersion_monotone_in_h(idx in 0usize..6, raw in momentum(3), s in 0.01..3.0f64) {
        let m = &measures()[idx];
        let p = &raw[..m.dimension()];
        let mu = m.mu(p).unwrap();
        let h1 = mu - 1.0 + s;
        let h2 = h1 + 0.1;
        prop_assert!(m.resolvent_integral(p, h2).unwrap() < m.resolvent_integral(p, h1).unwrap());
    }

    #[test]
    fn gradient_matches_finite_differences(idx in 0usize..6, raw in momentum(3)) {
        let m = &measures()[idx];
        let p = &raw[..m.dimension()];
        prop_assume!(m.classify(p).unwrap() == Regime::Regular);
        let step = 1e-5;
        // skip points whose stencil straddles the singular boundary
        for i in 0..p.len() {
            for s in [-step, step] {
                let mut q = p.to_vec();
                q[i] += s;
                prop_assume!(m.classify(&q).unwrap() == Regime::Regular);
            }
        }
        let g = m.grad_h(p).unwrap();
        for i in 0..p.len() {
            let mut up = p.to_vec();
            let mut dn = p.to_vec();
            up[i] += step;
            dn[i] -= step;
            let fd = (m.hamiltonian(&up).unwrap() - m.hamiltonian(&dn).unwrap()) / (2.0 * step);
            prop_assert!((fd - g[i]).abs() < 1e-6, "component {i}: fd {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn eigen_measure_has_unit_mass(idx in 0usize..6, raw in momentum(3)) {
        let m = &measures()[idx];
        let p = &raw[..m.dimension()];
        prop_assume!(p.iter().any(|&x| x != 0.0));
        let q = m.eigenpair(p);
        prop_assume!(q.is_ok());
        let q = q.unwrap();
        // ∫ M Q = 1 is the eigen relation for Q = c/(1 + H - v.p) + α δ_w
        let mass = match q.regime {
            Regime::Regular => q.density_scale * m.resolvent_integral(p, q.h).unwrap(),
            Regime::Singular => m.singular_integral(p).unwrap() + q.atom_weight,
        };
        prop_assert!((mass - 1.0).abs() < 1e-9, "mass {mass}");
        prop_assert!(q.atom_weight >= 0.0);
    }

    #[test]
    fn regime_dichotomy(idx in 0usize..6, raw in momentum(3)) {
        let m = &measures()[idx];
        let p = &raw[..m.dimension()];
        let e = m.solve_h(p).unwrap();
        prop_assert_eq!(e.regime, m.classify(p).unwrap());
        match e.regime {
            Regime::Singular => prop_assert_eq!(e.h, e.mu - 1.0),
            Regime::Regular => {
                prop_assert!(e.h >= e.mu - 1.0);
                prop_assert!(e.residual < 1e-10);
            }
        }
    }

    #[test]
    fn fenchel_young(idx in 0usize..4, raw in momentum(3), w in prop::collection::vec(-1.0..1.0f64, 3)) {
        let m = &measures()[[0, 1, 2, 3][idx]];
        let n = m.dimension();
        let p = &raw[..n];
        // map w into the interior of the hull
        let v: Vec<f64> = if n == 1 {
            let (lo, hi) = if idx == 0 { (-1.0, 1.0) } else { (-0.5, 2.0) };
            vec![lo + (hi - lo) * 0.5 * (w[0] * 0.98 + 1.0)]
        } else {
            let r = w[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = if r > 0.98 { 0.98 / r } else { 1.0 };
            w[..n].iter().map(|x| x * s).collect()
        };
        let l = m.legendre(&v).unwrap();
        let h = m.hamiltonian(p).unwrap();
        let pv: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        prop_assert!(l.value + h >= pv - 1e-9, "L {} + H {h} < p.v {pv}", l.value);
        prop_assert!(l.value >= 0.0);
    }
}
