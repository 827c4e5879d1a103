//! One function per subcommand. Each reads its section of the config,
//! writes its files into the output directory and returns their paths.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use velojump::hamiltonian::{write_profile_csv, ProfileRow};
use velojump::hj::{lax_friedrichs_solve, HopfLax};
use velojump::kinetic::{convergence_report, kinetic_solve, periodize, RunManifest, BOUND_TOL};
use velojump::pdmp::{drift_check, empirical_moment_check, sample_paths, sample_paths_with, VelocitySampler};
use velojump::{
    Boundary, EigenPair, GridField, InitialProfile, KineticOptions, LaxFriedrichsOptions, MeasureKind,
    VelocityMeasure,
};

use crate::config::{check_times, HjMethod, RunConfig};
use crate::error::CliError;

/// Collects the files written by a command.
struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Outputs { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    fn field(&mut self, stem: &str, f: &GridField<f64>) -> Result<(), CliError> {
        let io = |e: velojump::Error| std::io::Error::other(e.to_string());
        self.write(&format!("{stem}.csv"), |w| f.write_csv(w).map_err(io))?;
        self.write(&format!("{stem}.bin"), |w| f.write_binary(w).map_err(io))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn check_dimension(what: &str, len: usize, dim: usize) -> Result<(), CliError> {
    if len != dim {
        return Err(CliError::Config(format!("{what} has dimension {len}, measure has {dim}")));
    }
    Ok(())
}

/// `H` along the ray, failing with the offending momentum.
fn profile_rows(m: &VelocityMeasure<f64>, direction: &[f64], radii: &[f64]) -> Result<Vec<ProfileRow<f64>>, CliError> {
    let len = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    if !(len > 0.0 && len.is_finite()) {
        return Err(CliError::Config("hamiltonian.direction must be non-zero".into()));
    }
    let momenta: Vec<Vec<f64>> = radii.iter().map(|&r| direction.iter().map(|d| r * d / len).collect()).collect();
    m.solve_h_many(&momenta)
        .into_iter()
        .zip(radii.iter().zip(&momenta))
        .map(|(res, (&r, p))| {
            res.map(|eval| ProfileRow { p_norm: r.abs(), eval })
                .map_err(CliError::numerical(format!("H at p = {p:?}")))
        })
        .collect()
}

pub fn hamiltonian(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let m = cfg.measure_config()?.build()?;
    let h = cfg.section("hamiltonian", &cfg.hamiltonian)?;
    check_dimension("hamiltonian.direction", h.direction.len(), m.dimension())?;
    if !(h.p_min.is_finite() && h.p_max.is_finite() && h.p_min <= h.p_max) {
        return Err(CliError::Config("hamiltonian: need finite p_min <= p_max".into()));
    }
    let rows = profile_rows(&m, &h.direction, &linspace(h.p_min, h.p_max, h.points))?;
    let mut o = Outputs::new(out)?;
    o.write("hamiltonian.csv", |w| write_profile_csv(w, m.dimension(), &rows))?;
    Ok(o.written)
}

#[derive(Serialize)]
struct BoundaryRow {
    direction: Vec<f64>,
    /// `None` when the ray never meets the singular set.
    radius: Option<f64>,
    unbounded: bool,
}

#[derive(Serialize)]
struct BoundaryReport {
    schema: &'static str,
    measure: String,
    results: Vec<BoundaryRow>,
}

pub fn sing_boundary(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let m = cfg.measure_config()?.build()?;
    let s = cfg.section("sing_boundary", &cfg.sing_boundary)?;
    let mut results = Vec::with_capacity(s.directions.len());
    for d in &s.directions {
        check_dimension("sing_boundary.directions entry", d.len(), m.dimension())?;
        let r = m
            .sing_boundary_radius(d)
            .map_err(CliError::numerical(format!("boundary along {d:?}")))?;
        results.push(BoundaryRow {
            direction: d.clone(),
            radius: r.is_finite().then_some(r),
            unbounded: !r.is_finite(),
        });
    }
    let report = BoundaryReport { schema: "sing_boundary/1", measure: m.fingerprint(), results };
    let mut o = Outputs::new(out)?;
    o.json("sing_boundary.json", &report)?;
    Ok(o.written)
}

#[derive(Serialize)]
struct EigenReport {
    schema: &'static str,
    measure: String,
    pairs: Vec<EigenPair<f64>>,
}

pub fn eigen(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let m = cfg.measure_config()?.build()?;
    let e = cfg.section("eigen", &cfg.eigen)?;
    let mut pairs = Vec::with_capacity(e.points.len());
    for p in &e.points {
        check_dimension("eigen.points entry", p.len(), m.dimension())?;
        pairs.push(m.eigenpair(p).map_err(CliError::numerical(format!("eigenpair at p = {p:?}")))?);
    }
    let mut o = Outputs::new(out)?;
    o.json("eigen.json", &EigenReport { schema: "eigen/1", measure: m.fingerprint(), pairs })?;
    Ok(o.written)
}

pub fn legendre(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let m = cfg.measure_config()?.build()?;
    let l = cfg.section("legendre", &cfg.legendre)?;
    let n = m.dimension();
    let mut rows = Vec::with_capacity(l.points.len());
    for v in &l.points {
        check_dimension("legendre.points entry", v.len(), n)?;
        rows.push(m.legendre(v).map_err(CliError::numerical(format!("L at v = {v:?}")))?);
    }
    let mut o = Outputs::new(out)?;
    o.write("legendre.csv", |w| {
        writeln!(w, "# schema=legendre/1")?;
        let mut header: Vec<String> = (0..n).map(|i| format!("v_{i}")).collect();
        header.extend(["L".to_string(), "attained".to_string()]);
        header.extend((0..n).map(|i| format!("argmax_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for r in &rows {
            let mut cells: Vec<String> = r.v.iter().map(f64::to_string).collect();
            cells.push(r.value.to_string());
            cells.push(r.attained.to_string());
            match &r.argmax {
                Some(p) => cells.extend(p.iter().map(f64::to_string)),
                None => cells.extend((0..n).map(|_| String::new())),
            }
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    })?;
    Ok(o.written)
}

fn check_profile(section: &str, profile: &InitialProfile<f64>, dim: usize) -> Result<(), CliError> {
    profile.validate(dim).map_err(|e| CliError::Config(format!("{section}.initial: {e}")))
}

fn all_times(output_times: &[f64], final_time: f64) -> Vec<f64> {
    let mut t = output_times.to_vec();
    if t.last() != Some(&final_time) {
        t.push(final_time);
    }
    t
}

pub fn hj_solve(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let m = cfg.measure_config()?.build()?;
    let h = cfg.section("hj", &cfg.hj)?;
    let dim = 1 + h.y.is_some() as usize;
    check_dimension("hj grid", dim, m.dimension())?;
    check_profile("hj", &h.initial, dim)?;
    check_times("hj", h.final_time, &h.output_times)?;
    let periodic = h.boundary == Boundary::Periodic;
    let x = h.x.axis("hj.x", periodic)?;
    let y = h.y.as_ref().map(|a| a.axis("hj.y", periodic)).transpose()?;
    let field = match h.method {
        HjMethod::LaxFriedrichs => {
            let mut phi0 = Vec::with_capacity(x.len() * y.as_ref().map_or(1, Vec::len));
            for &xi in &x {
                match &y {
                    Some(y) => phi0.extend(y.iter().map(|&yj| h.initial.eval(&[xi, yj]))),
                    None => phi0.push(h.initial.eval(&[xi])),
                }
            }
            let opts = LaxFriedrichsOptions {
                cfl: h.cfl,
                dt: h.dt,
                output_times: h.output_times.clone(),
                boundary: h.boundary,
            };
            lax_friedrichs_solve(&m, &x, y.as_deref(), &phi0, h.final_time, &opts)
                .map_err(CliError::numerical("lax-friedrichs"))?
        }
        HjMethod::HopfLax => {
            if periodic && dim == 2 {
                return Err(CliError::Config("hj: periodic Hopf-Lax is one-dimensional only".into()));
            }
            let hl = HopfLax::with_lattice_step(&m, h.lattice_step).map_err(CliError::numerical("hopf-lax lattice"))?;
            let times = all_times(&h.output_times, h.final_time);
            let result = if periodic {
                let phi0 = periodize(h.x.lower, h.x.upper, |p: &[f64]| h.initial.eval(p));
                hl.field(&phi0, &x, None, &times)
            } else {
                hl.field(&|p: &[f64]| h.initial.eval(p), &x, y.as_deref(), &times)
            };
            result.map_err(CliError::numerical("hopf-lax"))?
        }
    };
    let mut o = Outputs::new(out)?;
    o.field("hj", &field)?;
    Ok(o.written)
}

fn manifest(
    command: &str,
    m: &VelocityMeasure<f64>,
    epsilons: Vec<f64>,
    x: &crate::config::AxisConfig,
    final_time: f64,
    cfl: f64,
    seed: Option<u64>,
) -> String {
    RunManifest {
        command: command.into(),
        measure_fingerprint: m.fingerprint(),
        epsilons,
        grid: (x.lower, x.upper, x.points),
        final_time,
        cfl,
        bound_tolerance: BOUND_TOL,
        seed,
    }
    .to_text()
}

pub fn kinetic(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let m = cfg.measure_config()?.build()?;
    let k = cfg.section("kinetic", &cfg.kinetic)?;
    check_dimension("kinetic grid", 1, m.dimension())?;
    check_profile("kinetic", &k.initial, 1)?;
    check_times("kinetic", k.final_time, &k.output_times)?;
    let x = k.x.axis("kinetic.x", true)?;
    let phi0 = periodize(k.x.lower, k.x.upper, |p: &[f64]| k.initial.eval(p));
    let samples: Vec<f64> = x.iter().map(|&xi| phi0(&[xi])).collect();
    let opts = KineticOptions { cfl: k.cfl, dt: k.dt, output_times: k.output_times.clone() };
    let f = kinetic_solve(&m, &x, &samples, k.epsilon, k.final_time, &opts)
        .map_err(CliError::numerical(format!("kinetic solve at eps = {}", k.epsilon)))?;
    let mean = f.velocity_mean().map_err(CliError::numerical("velocity mean"))?;
    let mut o = Outputs::new(out)?;
    o.write("kinetic_summary.csv", |w| {
        writeln!(w, "# schema=kinetic_summary/1")?;
        writeln!(w, "t,min,max,v_spread,v_lipschitz")?;
        for (j, t) in f.times.iter().enumerate() {
            let (lo, hi) = f.values[j].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            writeln!(w, "{t},{lo},{hi},{},{}", f.v_spread(j), f.v_lipschitz(j))?;
        }
        Ok(())
    })?;
    if k.full_field {
        o.write("kinetic.csv", |w| {
            writeln!(w, "# schema=kinetic_field/1")?;
            writeln!(w, "t,x,v,weight,phi")?;
            for (j, t) in f.times.iter().enumerate() {
                for (i, x) in f.x.iter().enumerate() {
                    for (a, (v, wt)) in f.velocities.iter().zip(&f.weights).enumerate() {
                        writeln!(w, "{t},{x},{v},{wt},{}", f.value(j, i, a))?;
                    }
                }
            }
            Ok(())
        })?;
    }
    o.field("kinetic_mean", &mean)?;
    let text = manifest("kinetic-solve", &m, vec![k.epsilon], &k.x, k.final_time, k.cfl, None);
    o.write("kinetic_manifest.txt", |w| w.write_all(text.as_bytes()))?;
    Ok(o.written)
}

pub fn converge(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let m = cfg.measure_config()?.build()?;
    let c = cfg.section("converge", &cfg.converge)?;
    check_dimension("converge grid", 1, m.dimension())?;
    check_profile("converge", &c.initial, 1)?;
    check_times("converge", c.final_time, &[])?;
    if c.epsilons.is_empty() || c.epsilons.windows(2).any(|w| w[1] >= w[0]) || c.epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(CliError::Config("converge.epsilons must be positive and strictly decreasing".into()));
    }
    let x = c.x.axis("converge.x", true)?;
    let phi0 = periodize(c.x.lower, c.x.upper, |p: &[f64]| c.initial.eval(p));
    let opts = KineticOptions { cfl: c.cfl, ..Default::default() };
    let report = convergence_report(&m, &phi0, &x, &c.epsilons, c.final_time, &opts)
        .map_err(CliError::numerical("convergence sweep"))?;
    let mut o = Outputs::new(out)?;
    o.write("convergence.csv", |w| report.write_csv(w))?;
    let text = manifest("converge", &m, c.epsilons.clone(), &c.x, c.final_time, c.cfl, None);
    o.write("converge_manifest.txt", |w| w.write_all(text.as_bytes()))?;
    Ok(o.written)
}

pub fn simulate(cfg: &RunConfig, out: &Path, seed: u64) -> Result<Vec<PathBuf>, CliError> {
    let mc = cfg.measure_config()?;
    let s = cfg.section("simulate", &cfg.simulate)?;
    if s.count == 0 || !(s.horizon > 0.0 && s.horizon.is_finite()) {
        return Err(CliError::Config("simulate: count must be positive and horizon positive and finite".into()));
    }
    let limit = s.record_limit.min(s.count);
    let (batch, report) = match (mc.build(), mc.kind()?) {
        (Ok(m), _) => {
            let batch = sample_paths(&m, s.count, s.horizon, seed, limit).map_err(CliError::numerical("simulation"))?;
            let report = empirical_moment_check(&batch, &m).map_err(CliError::numerical("moment check"))?;
            (batch, report)
        }
        // degenerate atomic laws (e.g. one atom) only need the sampler
        (Err(_), kind @ MeasureKind::Atomic { .. }) => {
            let sampler = VelocitySampler::from_kind(&kind).map_err(|e| CliError::Config(format!("measure: {e}")))?;
            let batch = sample_paths_with(&sampler, s.count, s.horizon, seed, limit)
                .map_err(CliError::numerical("simulation"))?;
            let report = drift_check(&batch, sampler.mean()).map_err(CliError::numerical("moment check"))?;
            (batch, report)
        }
        (Err(e), _) => return Err(e),
    };
    let mut o = Outputs::new(out)?;
    o.json("simulate.json", &report)?;
    o.write("paths.csv", |w| batch.write_paths_csv(w, limit))?;
    Ok(o.written)
}

/// Both panels: the interval `(−1, 1)` and the unit 3-ball along `e₁`.
pub fn figure1(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let f = cfg.figure1.clone().unwrap_or_default();
    if !(f.p_max > 0.0 && f.p_max.is_finite()) {
        return Err(CliError::Config("figure1.p_max must be positive".into()));
    }
    let radii = linspace(0.0, f.p_max, f.points);
    let line = VelocityMeasure::uniform_interval(-1.0, 1.0).map_err(CliError::numerical("interval"))?;
    let ball = VelocityMeasure::uniform_ball(3, 1.0).map_err(CliError::numerical("ball"))?;
    let n1 = profile_rows(&line, &[1.0], &radii)?;
    let n3 = profile_rows(&ball, &[1.0, 0.0, 0.0], &radii)?;
    let mut o = Outputs::new(out)?;
    o.write("figure1_n1.csv", |w| write_profile_csv(w, 1, &n1))?;
    o.write("figure1_n3.csv", |w| write_profile_csv(w, 3, &n3))?;
    Ok(o.written)
}
