//! The ε-scaled kinetic equation in Hopf-Cole form,
//!
//! ```text
//! ∂tφ + v ∂xφ = ∫ M(v′) (1 − e^{(φ − φ′)/ε}) dv′,
//! ```
//!
//! its linear counterpart for `f = M e^{−φ/ε}`, and the ε → 0 convergence
//! study against the Hamilton-Jacobi limit. One space dimension, periodic.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::GridField;
use crate::hj::HopfLax;
use crate::measure::VelocityMeasure;
use crate::scalar::Scalar;

/// Tolerance of the runtime a priori bound checks.
pub const BOUND_TOL: f64 = 1e-8;
/// Largest `‖φ₀‖∞/ε` accepted by [`linear_f_solve`].
pub const UNDERFLOW_GUARD: f64 = 600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct KineticOptions<T> {
    pub cfl: T,
    /// Requested step; must respect both stability limits.
    pub dt: Option<T>,
    /// Intermediate output times; the final time is always stored.
    pub output_times: Vec<T>,
}

impl<T: Scalar> Default for KineticOptions<T> {
    fn default() -> Self {
        KineticOptions { cfl: T::lit(0.9), dt: None, output_times: Vec::new() }
    }
}

/// `φ^ε(tₖ, xᵢ, vₐ)`; frame `k` holds `nx·nv` values, velocity fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KineticField<T> {
    pub epsilon: T,
    pub x: Vec<T>,
    pub velocities: Vec<T>,
    pub weights: Vec<T>,
    pub times: Vec<T>,
    pub values: Vec<Vec<T>>,
    pub dt: T,
    pub steps: usize,
}

impl<T: Scalar> KineticField<T> {
    pub fn nv(&self) -> usize {
        self.velocities.len()
    }

    pub fn value(&self, k: usize, i: usize, a: usize) -> T {
        self.values[k][i * self.nv() + a]
    }

    /// `max_x (max_v φ − min_v φ)` in frame `k`.
    pub fn v_spread(&self, k: usize) -> T {
        self.values[k]
            .chunks(self.nv())
            .map(|row| {
                let (lo, hi) = min_max(row);
                hi - lo
            })
            .fold(T::zero(), T::max)
    }

    /// Largest difference quotient between adjacent velocity nodes in
    /// frame `k` (nodes are sorted, so this is the sup over all pairs).
    pub fn v_lipschitz(&self, k: usize) -> T {
        v_lipschitz(&self.values[k], &self.velocities)
    }

    /// Velocity average `∫ M φ dv` as a grid field.
    pub fn velocity_mean(&self) -> Result<GridField<T>> {
        let frames = self
            .values
            .iter()
            .map(|f| {
                f.chunks(self.nv())
                    .map(|row| row.iter().zip(&self.weights).fold(T::zero(), |s, (&p, &w)| s + p * w))
                    .collect()
            })
            .collect();
        GridField::new(self.x.clone(), None, self.times.clone(), frames)
    }

    /// `sup_{x,v} |φ^ε(tₖ,x,v) − ψ(x)|` against a reference frame on the
    /// same spatial grid.
    pub fn sup_distance(&self, k: usize, reference: &[T]) -> T {
        self.values[k]
            .chunks(self.nv())
            .zip(reference)
            .flat_map(|(row, &r)| row.iter().map(move |&p| (p - r).abs()))
            .fold(T::zero(), T::max)
    }

    /// Frame index of time `t`, if stored.
    pub fn frame_at(&self, t: T) -> Option<usize> {
        let tol = T::tol(1e-12) * (T::one() + t.abs());
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }
}

fn v_lipschitz<T: Scalar>(frame: &[T], velocities: &[T]) -> T {
    frame
        .chunks(velocities.len())
        .flat_map(|row| {
            row.windows(2)
                .zip(velocities.windows(2))
                .map(|(p, w)| (p[1] - p[0]).abs() / (w[1] - w[0]))
        })
        .fold(T::zero(), T::max)
}

fn min_max<T: Scalar>(row: &[T]) -> (T, T) {
    row.iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)))
}

/// `ln(1 + eˣ)` without overflow.
fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln Σ w_b e^{−(φ_b − m)/ε}` with `m = min φ`; every exponent is ≤ 0.
fn log_partition<T: Scalar>(row: &[T], weights: &[T], eps: T) -> (T, T) {
    let (m, _) = min_max(row);
    let s = row
        .iter()
        .zip(weights)
        .fold(T::zero(), |s, (&p, &w)| s + w * (-(p - m) / eps).exp());
    (m, s.ln())
}

/// Exchange term `∫ M(v′)(1 − e^{(φₐ − φ′)/ε}) dv′` at node `a`, evaluated
/// either through the min-shifted log partition sum or directly.
pub fn exchange_rate<T: Scalar>(row: &[T], weights: &[T], a: usize, eps: T, shifted: bool) -> T {
    if shifted {
        let (m, ls) = log_partition(row, weights, eps);
        T::one() - ((row[a] - m) / eps + ls).exp()
    } else {
        row.iter()
            .zip(weights)
            .fold(T::zero(), |s, (&p, &w)| s + w * (T::one() - ((row[a] - p) / eps).exp()))
    }
}

/// Integrates the exchange over one step with the other velocities frozen.
/// With `u = e^{φₐ/ε}` the local equation is logistic, `ε u′ = u − S u²`,
/// and is solved exactly: no overshoot, so the update stays inside
/// `[min φ, max φ]` for any step.
fn exchange_step<T: Scalar>(row: &mut [T], weights: &[T], eps: T, log_growth: T, dt: T) {
    let (m, hi) = min_max(row);
    if hi == m {
        return;
    }
    let (_, ls) = log_partition(row, weights, eps);
    for p in row.iter_mut() {
        let la = (*p - m) / eps + ls + log_growth;
        *p = *p + dt - eps * softplus(la);
    }
}

fn check_grid<T: Scalar>(x: &[T], phi0: &[T]) -> Result<T> {
    if x.len() < 3 || phi0.len() != x.len() {
        return Err(Error::InvalidArgument(
            "need at least three grid points and one initial value per point".into(),
        ));
    }
    // validates the axis
    GridField::new(x.to_vec(), None, vec![T::zero()], vec![phi0.to_vec()])?;
    Ok(x[1] - x[0])
}

/// Discrete Lipschitz constant of periodic samples.
fn periodic_lipschitz<T: Scalar>(phi: &[T], dx: T) -> T {
    let n = phi.len();
    (0..n)
        .map(|i| (phi[(i + 1) % n] - phi[i]).abs() / dx)
        .fold(T::zero(), T::max)
}

fn sorted_quadrature<T: Scalar>(m: &VelocityMeasure<T>) -> Result<(Vec<T>, Vec<T>)> {
    let (v, w) = m.velocity_quadrature()?;
    let mut pairs: Vec<(T, T)> = v.into_iter().zip(w).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

struct Schedule<T> {
    dt_max: T,
    outputs: Vec<T>,
}

fn schedule<T: Scalar>(limit: T, dt: Option<T>, output_times: &[T], t_final: T) -> Result<Schedule<T>> {
    if !(t_final > T::zero()) {
        return Err(Error::InvalidArgument("final time must be positive".into()));
    }
    let dt_max = match dt {
        Some(dt) if dt > limit => {
            return Err(Error::CflViolation { dt: dt.as_f64(), limit: limit.as_f64() })
        }
        Some(dt) if dt > T::zero() => dt,
        Some(_) => return Err(Error::InvalidArgument("time step must be positive".into())),
        None => limit,
    };
    let mut outputs: Vec<T> = output_times
        .iter()
        .copied()
        .filter(|&t| t > T::zero() && t < t_final)
        .collect();
    if outputs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("output times must increase".into()));
    }
    outputs.push(t_final);
    Ok(Schedule { dt_max, outputs })
}

/// First-order upwind transport of every velocity row on a periodic grid.
fn transport<T: Scalar>(cur: &[T], next: &mut [T], velocities: &[T], courant: T) {
    let nv = velocities.len();
    let nx = cur.len() / nv;
    next.par_chunks_mut(nv).enumerate().for_each(|(i, row)| {
        let left = ((i + nx - 1) % nx) * nv;
        let right = ((i + 1) % nx) * nv;
        let here = i * nv;
        for (a, out) in row.iter_mut().enumerate() {
            let v = velocities[a];
            let c = cur[here + a];
            *out = if v > T::zero() {
                c - courant * v * (c - cur[left + a])
            } else {
                c - courant * v * (cur[right + a] - c)
            };
        }
    });
}

/// Solves the kinetic equation for `φ^ε` on the periodic grid `x` with
/// velocity-independent initial data `phi0`.
///
/// Every stored frame is checked against `min φ₀ ≤ φ ≤ max φ₀` (which
/// gives `0 ≤ φ ≤ ‖φ₀‖∞` for non-negative data) and against the velocity-Lipschitz
/// bound `t·Lip(φ₀)`; a violation beyond 1e-8 is reported as
/// [`Error::BoundViolation`].
pub fn kinetic_solve<T: Scalar>(
    m: &VelocityMeasure<T>,
    x: &[T],
    phi0: &[T],
    epsilon: T,
    t_final: T,
    options: &KineticOptions<T>,
) -> Result<KineticField<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if !(options.cfl > T::zero() && options.cfl <= T::one()) {
        return Err(Error::InvalidArgument("cfl must lie in (0, 1]".into()));
    }
    let dx = check_grid(x, phi0)?;
    let (velocities, weights) = sorted_quadrature(m)?;
    let nv = velocities.len();
    let speed = velocities.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    let limit = (options.cfl * dx / speed).min(epsilon / T::lit(4.0));
    let plan = schedule(limit, options.dt, &options.output_times, t_final)?;

    let lip0 = periodic_lipschitz(phi0, dx);
    let (lo0, hi0) = min_max(phi0);
    let mut phi: Vec<T> = phi0.iter().flat_map(|&p| std::iter::repeat_n(p, nv)).collect();
    let mut next = vec![T::zero(); phi.len()];
    let mut times = vec![T::zero()];
    let mut frames = vec![phi.clone()];
    let mut t = T::zero();
    let mut steps = 0;
    let mut dt_used = T::zero();
    for &t_out in &plan.outputs {
        let span = t_out - t;
        let n = (span / plan.dt_max).ceil().to_usize().unwrap_or(1).max(1);
        let dt = span / T::from_count(n);
        dt_used = dt_used.max(dt);
        let courant = dt / dx;
        let log_growth = (dt / epsilon).exp_m1().ln();
        for _ in 0..n {
            transport(&phi, &mut next, &velocities, courant);
            next.par_chunks_mut(nv)
                .for_each(|row| exchange_step(row, &weights, epsilon, log_growth, dt));
            std::mem::swap(&mut phi, &mut next);
        }
        steps += n;
        t = t_out;
        check_kinetic_bounds(&phi, &velocities, lo0, hi0, t * lip0)?;
        times.push(t);
        frames.push(phi.clone());
    }
    Ok(KineticField {
        epsilon,
        x: x.to_vec(),
        velocities,
        weights,
        times,
        values: frames,
        dt: dt_used,
        steps,
    })
}

fn check_kinetic_bounds<T: Scalar>(frame: &[T], velocities: &[T], lo: T, hi: T, v_lip: T) -> Result<()> {
    let tol = T::lit(BOUND_TOL);
    let (a, b) = min_max(frame);
    if a < lo - tol {
        return Err(Error::BoundViolation { what: "kinetic lower bound", value: a.as_f64(), bound: lo.as_f64() });
    }
    if b > hi + tol {
        return Err(Error::BoundViolation { what: "kinetic upper bound", value: b.as_f64(), bound: hi.as_f64() });
    }
    let lip = v_lipschitz(frame, velocities);
    let bound = v_lip * (T::one() + tol) + tol;
    if lip > bound {
        return Err(Error::BoundViolation {
            what: "kinetic velocity-Lipschitz bound",
            value: lip.as_f64(),
            bound: bound.as_f64(),
        });
    }
    Ok(())
}

/// Density `f/M = e^{−φ/ε}` on the same layout as [`KineticField`], with
/// the total mass of each frame and the recovered potential `−ε ln(f/M)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearField<T> {
    pub epsilon: T,
    pub x: Vec<T>,
    pub velocities: Vec<T>,
    pub weights: Vec<T>,
    pub times: Vec<T>,
    pub density: Vec<Vec<T>>,
    pub mass: Vec<T>,
    pub steps: usize,
}

impl<T: Scalar> LinearField<T> {
    /// `−ε ln(f/M)` in the layout of a [`KineticField`].
    pub fn recovered_potential(&self) -> KineticField<T> {
        let eps = self.epsilon;
        KineticField {
            epsilon: eps,
            x: self.x.clone(),
            velocities: self.velocities.clone(),
            weights: self.weights.clone(),
            times: self.times.clone(),
            values: self
                .density
                .iter()
                .map(|f| f.iter().map(|&g| -eps * g.ln()).collect())
                .collect(),
            dt: T::zero(),
            steps: self.steps,
        }
    }

    /// Largest relative deviation of the stored masses from the initial one.
    pub fn mass_drift(&self) -> T {
        let m0 = self.mass[0];
        self.mass.iter().fold(T::zero(), |d, &m| d.max(((m - m0) / m0).abs()))
    }
}

fn total_mass<T: Scalar>(f: &[T], weights: &[T], dx: T) -> T {
    // fixed-order summation keeps the result independent of thread count
    f.chunks(weights.len())
        .map(|row| row.iter().zip(weights).fold(T::zero(), |s, (&g, &w)| s + g * w))
        .fold(T::zero(), |s, r| s + r)
        * dx
}

/// Solves `∂t f + v ∂x f = (ρ − f)/ε` for `f/M` from `f₀/M = e^{−φ₀/ε}`.
/// The relaxation is integrated exactly, `f ← ρ + (f − ρ) e^{−Δt/ε}`, so
/// only the transport limits the step.
pub fn linear_f_solve<T: Scalar>(
    m: &VelocityMeasure<T>,
    x: &[T],
    phi0: &[T],
    epsilon: T,
    t_final: T,
    options: &KineticOptions<T>,
) -> Result<LinearField<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let dx = check_grid(x, phi0)?;
    let sup = phi0.iter().fold(T::zero(), |s, p| s.max(p.abs()));
    let ratio = sup / epsilon;
    if ratio > T::lit(UNDERFLOW_GUARD) {
        return Err(Error::UnderflowRisk { ratio: ratio.as_f64() });
    }
    let (velocities, weights) = sorted_quadrature(m)?;
    let nv = velocities.len();
    let speed = velocities.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    let limit = options.cfl * dx / speed;
    let plan = schedule(limit, options.dt, &options.output_times, t_final)?;

    let mut f: Vec<T> = phi0
        .iter()
        .flat_map(|&p| std::iter::repeat_n((-p / epsilon).exp(), nv))
        .collect();
    let mut next = vec![T::zero(); f.len()];
    let mut times = vec![T::zero()];
    let mut frames = vec![f.clone()];
    let mut mass = vec![total_mass(&f, &weights, dx)];
    let mut t = T::zero();
    let mut steps = 0;
    for &t_out in &plan.outputs {
        let span = t_out - t;
        let n = (span / plan.dt_max).ceil().to_usize().unwrap_or(1).max(1);
        let dt = span / T::from_count(n);
        let decay = (-dt / epsilon).exp();
        for _ in 0..n {
            transport(&f, &mut next, &velocities, dt / dx);
            next.par_chunks_mut(nv).for_each(|row| {
                let rho = row.iter().zip(&weights).fold(T::zero(), |s, (&g, &w)| s + g * w);
                for g in row.iter_mut() {
                    *g = rho + (*g - rho) * decay;
                }
            });
            std::mem::swap(&mut f, &mut next);
        }
        steps += n;
        t = t_out;
        times.push(t);
        mass.push(total_mass(&f, &weights, dx));
        frames.push(f.clone());
    }
    Ok(LinearField { epsilon, x: x.to_vec(), velocities, weights, times, density: frames, mass, steps })
}

/// One line of the ε-convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow<T> {
    pub epsilon: T,
    /// `sup |φ^ε − φ|` over the grid, the velocity nodes and the check times.
    pub error: T,
    /// `max (max_v φ^ε − min_v φ^ε)` over the same set.
    pub v_spread: T,
    pub dt: T,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport<T> {
    pub check_times: Vec<T>,
    pub rows: Vec<ConvergenceRow<T>>,
}

impl<T: Scalar> ConvergenceReport<T> {
    pub fn errors_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    pub fn spreads_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].v_spread < w[0].v_spread)
    }

    pub const SCHEMA: &'static str = "convergence/1";

    /// CSV `epsilon,error,v_spread,dt,steps` after a schema line.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# schema={}", Self::SCHEMA)?;
        writeln!(out, "epsilon,error,v_spread,dt,steps")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.epsilon, r.error, r.v_spread, r.dt, r.steps)?;
        }
        Ok(())
    }
}

/// Hopf-Lax reference at `times` on the periodic grid `x` for the
/// periodic initial profile `phi0`.
pub fn hj_reference<T: Scalar, F>(m: &VelocityMeasure<T>, phi0: &F, x: &[T], times: &[T]) -> Result<GridField<T>>
where
    F: Fn(&[T]) -> T + Sync,
{
    HopfLax::new(m)?.field(phi0, x, None, times)
}

/// Runs [`kinetic_solve`] for each ε (strictly decreasing) and measures the
/// distance to the Hamilton-Jacobi limit at `T/2` and `T`.
pub fn convergence_report<T: Scalar, F>(
    m: &VelocityMeasure<T>,
    phi0: &F,
    x: &[T],
    epsilons: &[T],
    t_final: T,
    options: &KineticOptions<T>,
) -> Result<ConvergenceReport<T>>
where
    F: Fn(&[T]) -> T + Sync,
{
    let check_times = vec![t_final * T::lit(0.5), t_final];
    let reference = hj_reference(m, phi0, x, &check_times)?;
    convergence_against(m, phi0, x, epsilons, t_final, options, &reference)
}

/// As [`convergence_report`] with a precomputed reference whose frames
/// hold the check times.
pub fn convergence_against<T: Scalar, F>(
    m: &VelocityMeasure<T>,
    phi0: &F,
    x: &[T],
    epsilons: &[T],
    t_final: T,
    options: &KineticOptions<T>,
    reference: &GridField<T>,
) -> Result<ConvergenceReport<T>>
where
    F: Fn(&[T]) -> T + Sync,
{
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("epsilon list must be non-empty and strictly decreasing".into()));
    }
    let samples: Vec<T> = x.iter().map(|&xi| phi0(&[xi])).collect();
    let check_times = reference.times.clone();
    let mut opts = options.clone();
    opts.output_times = check_times.clone();
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let field = kinetic_solve(m, x, &samples, eps, t_final, &opts)?;
        let mut error = T::zero();
        let mut spread = T::zero();
        for (r, &t) in check_times.iter().enumerate() {
            let k = field
                .frame_at(t)
                .ok_or_else(|| Error::InvalidArgument(format!("no frame at t = {t}")))?;
            error = error.max(field.sup_distance(k, &reference.values[r]));
            spread = spread.max(field.v_spread(k));
        }
        rows.push(ConvergenceRow { epsilon: eps, error, v_spread: spread, dt: field.dt, steps: field.steps });
    }
    Ok(ConvergenceReport { check_times, rows })
}

/// Plain-text record of a kinetic run or sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub measure_fingerprint: String,
    pub epsilons: Vec<f64>,
    pub grid: (f64, f64, usize),
    pub final_time: f64,
    pub cfl: f64,
    pub bound_tolerance: f64,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "measure = {}", self.measure_fingerprint);
        let eps: Vec<String> = self.epsilons.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(s, "epsilon = [{}]", eps.join(", "));
        let _ = writeln!(s, "grid = [{}, {}) with {} points, periodic", self.grid.0, self.grid.1, self.grid.2);
        let _ = writeln!(s, "final_time = {}", self.final_time);
        let _ = writeln!(s, "cfl = {}", self.cfl);
        let _ = writeln!(s, "bound_tolerance = {}", self.bound_tolerance);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        s
    }
}

/// Periodic extension of `f` from `[lo, hi)` (first coordinate).
pub fn periodize<T: Scalar, F>(lo: T, hi: T, f: F) -> impl Fn(&[T]) -> T + Sync
where
    F: Fn(&[T]) -> T + Sync,
{
    move |x: &[T]| {
        if x[0] >= lo && x[0] < hi {
            return f(x);
        }
        let len = hi - lo;
        let mut y = x.to_vec();
        let r = (x[0] - lo) % len;
        y[0] = lo + if r < T::zero() { r + len } else { r };
        f(&y)
    }
}
