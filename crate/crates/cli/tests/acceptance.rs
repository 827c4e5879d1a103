//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any FAIL.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use velojump::field::uniform_axis;
use velojump::hj::{lax_friedrichs_solve, Boundary, LaxFriedrichsOptions};
use velojump::kinetic::{hj_reference, kinetic_solve, periodize, KineticOptions};
use velojump::pdmp::{empirical_moment_check, sample_paths};
use velojump::{Atom, VelocityMeasure};
use velojump_cli::{run, Command, RunConfig};

type Outcome = Result<String, String>;

fn ball(n: usize) -> VelocityMeasure<f64> {
    VelocityMeasure::uniform_ball(n, 1.0).unwrap()
}

fn interval() -> VelocityMeasure<f64> {
    VelocityMeasure::uniform_interval(-1.0, 1.0).unwrap()
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_boundary() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for n in [2usize, 3, 4] {
        let m = ball(n);
        for _ in 0..3 {
            let e = random_unit(&mut rng, n);
            let start = Instant::now();
            let r = m.sing_boundary_radius(&e).map_err(|e| e.to_string())?;
            slowest = slowest.max(start.elapsed().as_secs_f64());
            worst = worst.max((r - n as f64 / (n as f64 - 1.0)).abs());
        }
    }
    check(worst <= 1e-8 && slowest < 1.0, format!("max |r - n/(n-1)| = {worst:.2e}, slowest {slowest:.3} s"))
}

fn c2_singular_integral() -> Outcome {
    let m = ball(3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0, 3.0] {
        let p: Vec<f64> = random_unit(&mut rng, 3).iter().map(|x| r * x).collect();
        let i = m.singular_integral(&p).map_err(|e| e.to_string())?;
        worst = worst.max((i - 1.5 / r).abs());
    }
    check(worst <= 1e-8, format!("max |I - 1.5/|p|| = {worst:.2e}"))
}

/// `p coth p − 1`, with its series where the direct form cancels.
fn coth_closed_form(p: f64) -> f64 {
    if p < 1e-2 {
        let q = p * p;
        q / 3.0 - q * q / 45.0 + 2.0 * q * q * q / 945.0
    } else {
        p / p.tanh() - 1.0
    }
}

/// Bisection on `ln((1+h+p)/(1+h−p)) / (2p) = 1`, decreasing in `h`.
fn bisection_oracle(p: f64) -> f64 {
    let f = |h: f64| ((1.0 + h + p) / (1.0 + h - p)).ln() / (2.0 * p) - 1.0;
    let (mut lo, mut hi) = (p - 1.0 + 1e-300, p);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c3_closed_form() -> Outcome {
    let m = interval();
    let mut worst: f64 = 0.0;
    let mut oracle_gap: f64 = 0.0;
    for k in 0..50 {
        let p = 1e-3 * (5.0f64 / 1e-3).powf(k as f64 / 49.0);
        let h = m.hamiltonian(&[p]).map_err(|e| e.to_string())?;
        let exact = coth_closed_form(p);
        worst = worst.max((h - exact).abs());
        oracle_gap = oracle_gap.max((bisection_oracle(p) - exact).abs());
    }
    check(
        worst <= 1e-9 && oracle_gap <= 1e-9,
        format!("max |H - (p coth p - 1)| = {worst:.2e}; bisection oracle vs closed form {oracle_gap:.2e}"),
    )
}

struct Curve {
    p: Vec<f64>,
    h: Vec<f64>,
    mu1: Vec<f64>,
}

fn read_curve(path: &std::path::Path) -> Curve {
    let text = std::fs::read_to_string(path).unwrap();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (ip, ih, im) = (col("p_norm"), col("H"), col("mu_minus_1"));
    let mut c = Curve { p: Vec::new(), h: Vec::new(), mu1: Vec::new() };
    for rec in r.records() {
        let rec = rec.unwrap();
        c.p.push(rec[ip].parse().unwrap());
        c.h.push(rec[ih].parse().unwrap());
        c.mu1.push(rec[im].parse().unwrap());
    }
    c
}

/// One-sided difference gap at `|p| = 1.5`, step `1e-3`, recorded when the
/// suite was first run.
const FROZEN_KINK_GAP: f64 = 0.108280;

fn c4_figure() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig::from_toml("[figure1]\np_max = 4.0\npoints = 4001\n").map_err(|e| e.to_string())?;
    let files = run(Command::Figure1, &cfg, dir.path(), 0).map_err(|e| e.to_string())?;
    let n1 = read_curve(&files[0]);
    let n3 = read_curve(&files[1]);
    let below = n1.h.iter().zip(&n1.mu1).chain(n3.h.iter().zip(&n3.mu1)).filter(|(h, m)| h < m).count();
    let kink = n3.p.iter().position(|&p| p == 1.5).ok_or("1.5 is not a grid point")?;
    let off = (kink..n3.p.len()).filter(|&i| n3.h[i] != n3.mu1[i]).count();
    let step = n3.p[kink + 1] - n3.p[kink];
    let right = (n3.h[kink + 1] - n3.h[kink]) / step;
    let left = (n3.h[kink] - n3.h[kink - 1]) / step;
    let gap = right - left;
    // FD error carried by the 1e-9 accuracy of H at step 1e-3
    let tolerance = 2.0 * 1e-9 / 1e-3;
    check(
        below == 0 && off == 0 && (step - 1e-3).abs() < 1e-15 && gap > 10.0 * tolerance && (gap - FROZEN_KINK_GAP).abs() < 1e-5,
        format!(
            "rows below mu-1: {below}; n=3 rows off mu-1 beyond 1.5: {off}; one-sided slopes {left:.6}/{right:.6}, gap {gap:.6} (> {:.0e}, frozen {FROZEN_KINK_GAP})",
            10.0 * tolerance
        ),
    )
}

fn shipped_measures() -> Vec<(&'static str, VelocityMeasure<f64>)> {
    vec![
        ("interval", interval()),
        ("shifted interval", VelocityMeasure::uniform_interval(-0.5, 1.5).unwrap()),
        ("disc", ball(2)),
        ("3-ball", ball(3)),
        ("4-ball", ball(4)),
        (
            "atoms",
            VelocityMeasure::atomic(vec![
                Atom::new(vec![1.0, 0.0], 0.5),
                Atom::new(vec![-1.0, 1.0], 0.25),
                Atom::new(vec![-1.0, -1.0], 0.25),
            ])
            .unwrap(),
        ),
        ("tabulated 3-D", VelocityMeasure::tabulated_radial(3, 1.0, vec![2.0, 1.0, 0.5, 0.25]).unwrap()),
    ]
}

fn c5_convexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::NEG_INFINITY;
    let mut names = Vec::new();
    for (name, m) in shipped_measures() {
        let n = m.dimension();
        for _ in 0..1000 {
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
            let h = |x: &[f64]| m.hamiltonian(x).map_err(|e| format!("{name}: {e}"));
            let excess = h(&mid)? - 0.5 * (h(&p)? + h(&q)?);
            worst = worst.max(excess);
        }
        names.push(name);
    }
    check(
        worst <= 1e-9,
        format!("max H(mid) - mean = {worst:.2e} over 1000 pairs each for {}", names.join(", ")),
    )
}

fn c6_atom_weight() -> Outcome {
    let m = ball(3);
    let a3 = m.eigenpair(&[0.0, 3.0, 0.0]).map_err(|e| e.to_string())?.atom_weight;
    let a15 = m.eigenpair(&[0.0, 0.0, 1.5]).map_err(|e| e.to_string())?.atom_weight;
    check(
        (a3 - 0.5).abs() <= 1e-8 && a15.abs() <= 1e-8,
        format!("alpha(|p|=3) = {a3:.12}, alpha(|p|=1.5) = {a15:.2e}"),
    )
}

const EPSILONS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
/// Sweep values recorded when the suite was first run (error, v-spread).
const FROZEN_SWEEP: [(f64, f64); 4] = [
    (0.374330, 0.546371),
    (0.233051, 0.341828),
    (0.135149, 0.188901),
    (0.078948, 0.097447),
];

fn sweep_config() -> String {
    format!(
        "[measure]\nkind = \"uniform_interval\"\n[converge]\nepsilons = {EPSILONS:?}\nx = {{ lower = -2.0, upper = 2.0, points = 2000 }}\ninitial = {{ kind = \"truncated_abs\", cap = 1.0 }}\nfinal_time = 0.5\n"
    )
}

fn c7_convergence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig::from_toml(&sweep_config()).map_err(|e| e.to_string())?;
    let files = run(Command::Converge, &cfg, dir.path(), 0).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(&files[0]).map_err(|e| e.to_string())?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<(f64, f64)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[1].parse().unwrap(), rec[2].parse().unwrap())
        })
        .collect();
    let errors_down = rows.windows(2).all(|w| w[1].0 < w[0].0);
    let spreads_down = rows.windows(2).all(|w| w[1].1 < w[0].1);
    let drift = rows
        .iter()
        .zip(FROZEN_SWEEP)
        .fold(0.0f64, |d, (a, b)| d.max((a.0 - b.0).abs()).max((a.1 - b.1).abs()));
    let listing: Vec<String> = rows.iter().map(|(e, s)| format!("{e:.4}/{s:.4}")).collect();
    check(
        rows.len() == 4 && errors_down && spreads_down && drift < 1e-5,
        format!("error/spread {} ; max drift from frozen {drift:.1e}", listing.join(" > ")),
    )
}

fn c8_bounds() -> Outcome {
    let m = interval();
    let x = uniform_axis(-2.0, 2.0, 2000, true).map_err(|e| e.to_string())?;
    let phi0 = periodize(-2.0, 2.0, |y: &[f64]| y[0].abs().min(1.0));
    let samples: Vec<f64> = x.iter().map(|&xi| phi0(&[xi])).collect();
    let sup0 = samples.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let times: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let opts = KineticOptions { output_times: times, ..Default::default() };
    let mut frames = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for eps in EPSILONS {
        // the solver itself fails on any bound violation at an output time
        let f = kinetic_solve(&m, &x, &samples, eps, 0.5, &opts).map_err(|e| format!("eps {eps}: {e}"))?;
        for frame in &f.values {
            frames += 1;
            for &v in frame {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    check(
        lo >= 0.0 && hi <= sup0,
        format!("{frames} frames over 4 runs: min {lo:.3e}, max {hi:.12} (bound {sup0})"),
    )
}

fn c9_scheme() -> Outcome {
    let m = interval();
    let phi0 = periodize(-2.0, 2.0, |y: &[f64]| y[0].abs().min(1.0));
    let t = 0.5;
    let start = Instant::now();
    let mut errors = Vec::new();
    for n in [1000usize, 2000, 4000] {
        let x = uniform_axis(-2.0, 2.0, n, true).map_err(|e| e.to_string())?;
        let data: Vec<f64> = x.iter().map(|&xi| phi0(&[xi])).collect();
        let opts = LaxFriedrichsOptions { boundary: Boundary::Periodic, ..Default::default() };
        let lf = lax_friedrichs_solve(&m, &x, None, &data, t, &opts).map_err(|e| e.to_string())?;
        let hl = hj_reference(&m, &phi0, &x, &[t]).map_err(|e| e.to_string())?;
        let d = lf.last().iter().zip(&hl.values[0]).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        errors.push(d);
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let elapsed = start.elapsed().as_secs_f64();
    check(
        errors[2] <= 2e-2 && orders.iter().all(|&o| o >= 0.5) && elapsed < 60.0,
        format!(
            "sup |LF - HL| at dx 4e-3/2e-3/1e-3: {:.5}/{:.5}/{:.5}; observed orders {:.2}, {:.2} ({elapsed:.1} s)",
            errors[0], errors[1], errors[2], orders[0], orders[1]
        ),
    )
}

fn c10_drift() -> Outcome {
    let m = VelocityMeasure::atomic(vec![Atom::new(vec![-1.0], 0.25), Atom::new(vec![1.0], 0.75)])
        .map_err(|e| e.to_string())?;
    let batch = sample_paths(&m, 100_000, 100.0, 10, 0).map_err(|e| e.to_string())?;
    let r = empirical_moment_check(&batch, &m).map_err(|e| e.to_string())?;
    check(
        r.pass && r.expected_drift == [0.5],
        format!(
            "drift {:.5} +- {:.5} vs exact {} (z = {:.2})",
            r.drift[0], r.standard_error[0], r.expected_drift[0], r.max_z
        ),
    )
}

fn c11_fenchel_young() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_eq: f64 = 0.0;
    let mut worst_ineq = f64::NEG_INFINITY;
    let mut at_mean: f64 = 0.0;
    for (name, m) in [("interval", interval()), ("disc", ball(2))] {
        let n = m.dimension();
        let err = |e: velojump::Error| format!("{name}: {e}");
        for _ in 0..100 {
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let eval = m.solve_h(&p).map_err(err)?;
            let l = m.legendre(&eval.grad).map_err(err)?.value;
            let pv: f64 = p.iter().zip(&eval.grad).map(|(a, b)| a * b).sum();
            worst_eq = worst_eq.max((l + eval.h - pv).abs());

            let v: Vec<f64> = random_unit(&mut rng, n).iter().map(|x| x * rng.random_range(0.0..0.999)).collect();
            let lv = m.legendre(&v).map_err(err)?.value;
            let pv: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
            worst_ineq = worst_ineq.max(pv - eval.h - lv);
        }
        let mean = m.mean_velocity();
        at_mean = at_mean.max(m.legendre(&mean).map_err(err)?.value.abs());
    }
    check(
        worst_eq <= 1e-6 && worst_ineq <= 1e-6 && at_mean <= 1e-6,
        format!("max |L(grad H) + H - p.grad H| = {worst_eq:.2e}; max p.v - H - L = {worst_ineq:.2e}; |L(E[v])| = {at_mean:.1e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("singular-set boundary of the uniform ball", c1_boundary),
        ("singular integral of the 3-ball", c2_singular_integral),
        ("1-D closed form", c3_closed_form),
        ("Hamiltonian profiles n = 1, 3", c4_figure),
        ("midpoint convexity", c5_convexity),
        ("eigen-atom weight", c6_atom_weight),
        ("epsilon convergence", c7_convergence),
        ("a priori bounds", c8_bounds),
        ("Lax-Friedrichs vs Hopf-Lax", c9_scheme),
        ("velocity jump drift", c10_drift),
        ("Fenchel-Young and L(E[v]) = 0", c11_fenchel_young),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} [{secs:6.2} s] {name}: {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
