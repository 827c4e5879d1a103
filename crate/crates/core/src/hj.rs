//! Viscosity solutions of `∂tφ + H(∇φ) = 0`: the Hopf-Lax formula and a
//! monotone Lax-Friedrichs scheme.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::GridField;
use crate::measure::VelocityMeasure;
use crate::roots::golden_max;
use crate::scalar::{norm, Scalar};

/// Lattice step of the memoized `L` table, relative to the support radius.
pub const LATTICE_STEP: f64 = 1e-3;
/// Same for the tensor lattice used with non-rotational 2-D measures.
pub const LATTICE_STEP_PLANE: f64 = 2e-2;
/// Angular resolution of the coarse scan for rotational 2-D measures.
pub const ANGLES: usize = 256;
/// Polishing stops once the search step is below this times `R`.
pub const POLISH_TOL: f64 = 1e-9;

enum Lattice<T> {
    /// `L(lo + k·step)`; the last node is the right end of the hull.
    Line { lo: T, hi: T, step: T, values: Vec<T> },
    /// `ℓ(k·step)` with `L(v) = ℓ(|v|)`.
    Radial { step: T, values: Vec<T> },
    /// Tensor grid over the bounding box; `+∞` outside the hull.
    Plane { lo: [T; 2], step: T, n: [usize; 2], values: Vec<T> },
}

/// Hopf-Lax evaluator `φ(t,x) = min_v [φ₀(x − t v) + t L(v)]`, with `v`
/// ranging over the convex hull of the velocity support.
pub struct HopfLax<'m, T> {
    measure: &'m VelocityMeasure<T>,
    lattice: Lattice<T>,
}

fn hull_extent<T: Scalar>(m: &VelocityMeasure<T>, axis: usize) -> Result<(T, T)> {
    let mut e = vec![T::zero(); m.dimension()];
    e[axis] = T::one();
    let hi = m.mu(&e)?;
    e[axis] = -T::one();
    let lo = -m.mu(&e)?;
    Ok((lo, hi))
}

impl<'m, T: Scalar> HopfLax<'m, T> {
    pub fn new(measure: &'m VelocityMeasure<T>) -> Result<Self> {
        let rel = if measure.dimension() == 2 && !measure.is_rotationally_invariant() {
            LATTICE_STEP_PLANE
        } else {
            LATTICE_STEP
        };
        Self::with_lattice_step(measure, T::lit(rel))
    }

    /// `relative_step` is the lattice spacing divided by the support radius.
    pub fn with_lattice_step(measure: &'m VelocityMeasure<T>, relative_step: T) -> Result<Self> {
        if !(relative_step > T::zero()) || relative_step > T::one() {
            return Err(Error::InvalidArgument("lattice step must lie in (0, 1]".into()));
        }
        let r = measure.support_radius();
        let target = relative_step * r;
        let lattice = match measure.dimension() {
            1 => {
                let (lo, hi) = hull_extent(measure, 0)?;
                let n = ((hi - lo) / target).ceil().to_usize().unwrap_or(1).max(1) + 1;
                let step = (hi - lo) / T::from_count(n - 1);
                let nodes: Vec<T> = (0..n)
                    .map(|k| if k + 1 == n { hi } else { lo + step * T::from_count(k) })
                    .collect();
                let values = nodes
                    .par_iter()
                    .map(|&v| measure.legendre(&[v]).map(|l| l.value))
                    .collect::<Result<_>>()?;
                Lattice::Line { lo, hi, step, values }
            }
            2 if measure.is_rotationally_invariant() => {
                let n = (T::one() / relative_step).ceil().to_usize().unwrap_or(1).max(1) + 1;
                let step = r / T::from_count(n - 1);
                let values = (0..n)
                    .into_par_iter()
                    .map(|k| {
                        let rho = if k + 1 == n { r } else { step * T::from_count(k) };
                        measure.legendre(&[rho, T::zero()]).map(|l| l.value)
                    })
                    .collect::<Result<_>>()?;
                Lattice::Radial { step, values }
            }
            2 => {
                let (x0, x1) = hull_extent(measure, 0)?;
                let (y0, y1) = hull_extent(measure, 1)?;
                let count = |len: T| (len / target).ceil().to_usize().unwrap_or(1).max(1) + 1;
                let n = [count(x1 - x0), count(y1 - y0)];
                let step = target;
                let values = (0..n[0] * n[1])
                    .into_par_iter()
                    .map(|idx| {
                        let v = [
                            (x0 + step * T::from_count(idx / n[1])).min(x1),
                            (y0 + step * T::from_count(idx % n[1])).min(y1),
                        ];
                        match measure.legendre(&v) {
                            Ok(l) => Ok(l.value),
                            Err(Error::OutsideHull { .. }) => Ok(T::infinity()),
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<_>>()?;
                Lattice::Plane { lo: [x0, y0], step, n, values }
            }
            d => {
                return Err(Error::InvalidArgument(format!(
                    "Hopf-Lax is implemented in 1-D and 2-D, got {d}-D"
                )))
            }
        };
        Ok(HopfLax { measure, lattice })
    }

    /// `L(v)` evaluated directly; `+∞` outside the hull.
    fn rate(&self, v: &[T]) -> Result<T> {
        match self.measure.legendre(v) {
            Ok(l) => Ok(l.value),
            Err(Error::OutsideHull { .. }) => Ok(T::infinity()),
            Err(e) => Err(e),
        }
    }

    /// `φ(t, x)` for initial data `phi0`.
    pub fn eval<F>(&self, phi0: &F, t: T, x: &[T]) -> Result<T>
    where
        F: Fn(&[T]) -> T + ?Sized,
    {
        if t < T::zero() {
            return Err(Error::InvalidArgument("time must be non-negative".into()));
        }
        if x.len() != self.measure.dimension() {
            return Err(Error::InvalidArgument("point has the wrong dimension".into()));
        }
        if t == T::zero() {
            return Ok(phi0(x));
        }
        let objective = |v: &[T], l: T| -> T {
            let y: Vec<T> = x.iter().zip(v).map(|(&a, &b)| a - t * b).collect();
            phi0(&y) + t * l
        };
        match &self.lattice {
            Lattice::Line { lo, hi, step, values } => {
                let node = |k: usize| {
                    if k + 1 == values.len() {
                        *hi
                    } else {
                        *lo + *step * T::from_count(k)
                    }
                };
                let (best, best_val) = values
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| (k, objective(&[node(k)], l)))
                    .fold((0, T::infinity()), |acc, c| if c.1 < acc.1 { c } else { acc });
                let a = node(best.saturating_sub(1));
                let b = node((best + 1).min(values.len() - 1));
                let mut fail = None;
                let (_, neg) = golden_max(
                    |v: T| match self.rate(&[v]) {
                        Ok(l) => -objective(&[v], l),
                        Err(e) => {
                            fail.get_or_insert(e);
                            T::neg_infinity()
                        }
                    },
                    a,
                    b,
                    T::lit(POLISH_TOL) * self.measure.support_radius(),
                    200,
                );
                if let Some(e) = fail {
                    return Err(e);
                }
                Ok(best_val.min(-neg))
            }
            Lattice::Radial { step, values } => {
                let mut best = (T::infinity(), [T::zero(), T::zero()]);
                for (k, &l) in values.iter().enumerate() {
                    let rho = *step * T::from_count(k);
                    let angles = if k == 0 { 1 } else { ANGLES };
                    for a in 0..angles {
                        let th = T::TAU() * T::from_count(a) / T::from_count(ANGLES);
                        let v = [rho * th.cos(), rho * th.sin()];
                        let val = objective(&v, l);
                        if val < best.0 {
                            best = (val, v);
                        }
                    }
                }
                self.compass(&objective, best.1, best.0, *step * T::lit(2.0))
            }
            Lattice::Plane { lo, step, n, values } => {
                let mut best = (T::infinity(), [T::zero(), T::zero()]);
                for (idx, &l) in values.iter().enumerate() {
                    if l.is_infinite() {
                        continue;
                    }
                    let v = [
                        lo[0] + *step * T::from_count(idx / n[1]),
                        lo[1] + *step * T::from_count(idx % n[1]),
                    ];
                    let val = objective(&v, l);
                    if val < best.0 {
                        best = (val, v);
                    }
                }
                // the mean velocity is the zero of L and may fall between nodes
                let mean = self.measure.mean_velocity();
                let at_mean = objective(&mean, T::zero());
                if at_mean < best.0 {
                    best = (at_mean, [mean[0], mean[1]]);
                }
                self.compass(&objective, best.1, best.0, *step)
            }
        }
    }

    /// Compass search on the 2-D objective with direct `L`, started from the
    /// best lattice point.
    fn compass<O>(&self, objective: &O, mut v: [T; 2], mut value: T, mut step: T) -> Result<T>
    where
        O: Fn(&[T], T) -> T,
    {
        let stop = T::lit(POLISH_TOL) * self.measure.support_radius();
        let half = T::lit(0.5);
        // re-anchor on the direct rate; lattice values are exact at nodes
        // but the scan may have used an interpolated location
        let l0 = self.rate(&v)?;
        value = value.min(objective(&v, l0));
        while step > stop {
            let mut moved = false;
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let w = [v[0] + step * T::lit(dx as f64), v[1] + step * T::lit(dy as f64)];
                let l = self.rate(&w)?;
                if l.is_infinite() {
                    continue;
                }
                let val = objective(&w, l);
                if val < value {
                    value = val;
                    v = w;
                    moved = true;
                    break;
                }
            }
            if !moved {
                step = step * half;
            }
        }
        Ok(value)
    }

    /// Evaluates `φ` on a tensor grid at each of `times`.
    pub fn field<F>(&self, phi0: &F, x: &[T], y: Option<&[T]>, times: &[T]) -> Result<GridField<T>>
    where
        F: Fn(&[T]) -> T + Sync + ?Sized,
    {
        let ny = y.map_or(1, <[T]>::len);
        let values = times
            .iter()
            .map(|&t| {
                (0..x.len() * ny)
                    .into_par_iter()
                    .map(|idx| {
                        let (i, j) = (idx / ny, idx % ny);
                        match y {
                            Some(y) => self.eval(phi0, t, &[x[i], y[j]]),
                            None => self.eval(phi0, t, &[x[i]]),
                        }
                    })
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<_>>()?;
        GridField::new(x.to_vec(), y.map(<[T]>::to_vec), times.to_vec(), values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Ghost values continue the boundary slope (constant-gradient
    /// extrapolation).
    Extrapolate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaxFriedrichsOptions<T> {
    pub cfl: T,
    /// Requested step; must not exceed the CFL limit. Chosen from `cfl`
    /// when absent.
    pub dt: Option<T>,
    /// Times at which frames are stored, increasing; the final time is
    /// always stored.
    pub output_times: Vec<T>,
    pub boundary: Boundary,
}

impl<T: Scalar> Default for LaxFriedrichsOptions<T> {
    fn default() -> Self {
        LaxFriedrichsOptions {
            cfl: T::lit(0.9),
            dt: None,
            output_times: Vec::new(),
            boundary: Boundary::Extrapolate,
        }
    }
}

/// `H` as used by the grid scheme: direct solves, or for rotationally
/// invariant 2-D measures a cubic Hermite table in `|p|` built from exact
/// values and slopes.
pub struct HamiltonianTable<'m, T> {
    measure: &'m VelocityMeasure<T>,
    radial: Option<(T, Vec<(T, T)>)>,
}

/// Table spacing in `|p|` for [`HamiltonianTable`].
pub const TABLE_STEP: f64 = 1e-3;

impl<'m, T: Scalar> HamiltonianTable<'m, T> {
    pub fn direct(measure: &'m VelocityMeasure<T>) -> Self {
        HamiltonianTable { measure, radial: None }
    }

    /// Tabulates on `|p| ≤ p_max`; larger momenta fall back to direct solves.
    pub fn radial(measure: &'m VelocityMeasure<T>, p_max: T) -> Result<Self> {
        if !measure.is_rotationally_invariant() || measure.dimension() < 2 {
            return Ok(Self::direct(measure));
        }
        let step = T::lit(TABLE_STEP);
        let n = (p_max / step).ceil().to_usize().unwrap_or(0) + 2;
        let n_dim = measure.dimension();
        let rows = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut p = vec![T::zero(); n_dim];
                p[0] = step * T::from_count(k);
                let e = measure.solve_h(&p)?;
                Ok((e.h, e.grad[0]))
            })
            .collect::<Result<_>>()?;
        Ok(HamiltonianTable { measure, radial: Some((step, rows)) })
    }

    pub fn eval(&self, p: &[T]) -> Result<T> {
        if let Some((step, rows)) = &self.radial {
            let r = norm(p);
            let s = r / *step;
            let k = s.floor().to_usize().unwrap_or(usize::MAX);
            if k + 1 < rows.len() {
                let u = s - T::from_count(k);
                let (h0, d0) = rows[k];
                let (h1, d1) = rows[k + 1];
                let u2 = u * u;
                let u3 = u2 * u;
                let two = T::lit(2.0);
                let three = T::lit(3.0);
                return Ok(h0 * (two * u3 - three * u2 + T::one())
                    + d0 * *step * (u3 - two * u2 + u)
                    + h1 * (three * u2 - two * u3)
                    + d1 * *step * (u3 - u2));
            }
        }
        self.measure.hamiltonian(p)
    }
}

/// One Lax-Friedrichs update from a centre value, its neighbours along each
/// axis and `H` at the central-difference gradient.
#[inline]
pub fn lax_friedrichs_stencil<T: Scalar>(
    centre: T,
    neighbours: &[(T, T)],
    h_of_grad: T,
    spacings: &[T],
    dt: T,
    alpha: T,
) -> T {
    let half = T::lit(0.5);
    let mut out = centre - dt * h_of_grad;
    for (&(left, right), &dx) in neighbours.iter().zip(spacings) {
        out = out + alpha * dt * half / dx * (right - centre - centre + left);
    }
    out
}

/// Largest stable step for viscosity `alpha` and the given spacings.
pub fn cfl_limit<T: Scalar>(cfl: T, alpha: T, spacings: &[T]) -> T {
    let rate = spacings.iter().fold(T::zero(), |s, &dx| s + alpha / dx);
    cfl / rate
}

/// Monotone Lax-Friedrichs scheme with viscosity `α = R` on the grid given
/// by `x` (and `y` in 2-D), starting from `phi0` (same layout as a
/// [`GridField`] frame).
pub fn lax_friedrichs_solve<T: Scalar>(
    measure: &VelocityMeasure<T>,
    x: &[T],
    y: Option<&[T]>,
    phi0: &[T],
    t_final: T,
    options: &LaxFriedrichsOptions<T>,
) -> Result<GridField<T>> {
    let dims = if y.is_some() { 2 } else { 1 };
    if measure.dimension() != dims {
        return Err(Error::InvalidArgument(format!(
            "{dims}-D grid for a {}-D measure",
            measure.dimension()
        )));
    }
    if !(options.cfl > T::zero() && options.cfl < T::one()) {
        return Err(Error::InvalidArgument("cfl must lie in (0, 1)".into()));
    }
    if !(t_final > T::zero()) {
        return Err(Error::InvalidArgument("final time must be positive".into()));
    }
    let probe = GridField::new(x.to_vec(), y.map(<[T]>::to_vec), vec![T::zero()], vec![phi0.to_vec()])?;
    let (nx, ny) = (probe.nx(), probe.ny());
    let mut spacings = vec![probe.dx()];
    if let Some(y) = y {
        spacings.push(y[1] - y[0]);
    }
    let alpha = measure.support_radius();
    let limit = cfl_limit(options.cfl, alpha, &spacings);
    let dt_max = match options.dt {
        Some(dt) if dt > limit => {
            return Err(Error::CflViolation { dt: dt.as_f64(), limit: limit.as_f64() })
        }
        Some(dt) if dt > T::zero() => dt,
        Some(_) => return Err(Error::InvalidArgument("time step must be positive".into())),
        None => limit,
    };

    let mut outputs: Vec<T> = options
        .output_times
        .iter()
        .copied()
        .filter(|&t| t > T::zero() && t < t_final)
        .collect();
    if outputs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("output times must increase".into()));
    }
    outputs.push(t_final);

    let table = if dims == 2 && measure.is_rotationally_invariant() {
        HamiltonianTable::radial(measure, probe.lipschitz(0) * T::lit(1.5) + T::lit(0.1))?
    } else {
        HamiltonianTable::direct(measure)
    };

    let index = |i: isize, j: isize| -> Option<(usize, usize)> {
        let wrap = |k: isize, n: usize| k.rem_euclid(n as isize) as usize;
        match options.boundary {
            Boundary::Periodic => Some((wrap(i, nx), wrap(j, ny))),
            Boundary::Extrapolate => {
                if i >= 0 && (i as usize) < nx && j >= 0 && (j as usize) < ny {
                    Some((i as usize, j as usize))
                } else {
                    None
                }
            }
        }
    };
    let get = |phi: &[T], i: usize, j: usize, di: isize, dj: isize| -> T {
        let (ii, jj) = (i as isize + di, j as isize + dj);
        match index(ii, jj) {
            Some((a, b)) => phi[a * ny + b],
            None => {
                // ghost: continue the slope from the two nearest interior cells
                let c = phi[i * ny + j];
                let inner = phi[((i as isize - di) as usize) * ny + (j as isize - dj) as usize];
                c + c - inner
            }
        }
    };

    let mut phi = phi0.to_vec();
    let mut next = vec![T::zero(); phi.len()];
    let mut times = vec![T::zero()];
    let mut frames = vec![phi.clone()];
    let mut t = T::zero();
    for &t_out in &outputs {
        let span = t_out - t;
        let steps = (span / dt_max).ceil().to_usize().unwrap_or(1).max(1);
        let dt = span / T::from_count(steps);
        for _ in 0..steps {
            let cur = &phi;
            next.par_iter_mut().enumerate().try_for_each(|(idx, out)| -> Result<()> {
                let (i, j) = (idx / ny, idx % ny);
                let c = cur[idx];
                let mut nb = [(c, c); 2];
                let mut grad = [T::zero(); 2];
                nb[0] = (get(cur, i, j, -1, 0), get(cur, i, j, 1, 0));
                grad[0] = (nb[0].1 - nb[0].0) / (spacings[0] + spacings[0]);
                if dims == 2 {
                    nb[1] = (get(cur, i, j, 0, -1), get(cur, i, j, 0, 1));
                    grad[1] = (nb[1].1 - nb[1].0) / (spacings[1] + spacings[1]);
                }
                let h = table.eval(&grad[..dims])?;
                *out = lax_friedrichs_stencil(c, &nb[..dims], h, &spacings, dt, alpha);
                Ok(())
            })?;
            std::mem::swap(&mut phi, &mut next);
        }
        t = t_out;
        times.push(t);
        frames.push(phi.clone());
    }
    GridField::new(x.to_vec(), y.map(<[T]>::to_vec), times, frames)
}
