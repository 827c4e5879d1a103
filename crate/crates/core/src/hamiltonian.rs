//! Effective Hamiltonian of the velocity jump process.
//!
//! For a momentum `p` the Hamiltonian is the principal eigenvalue of the
//! tilted operator `Q ↦ (v·p − 1)Q + ∫ M Q`. Off the singular set it is the
//! unique root of `F(H) = ∫ M/(1 + H − v·p) = 1`; on the singular set
//! (where `∫ M/(μ(p) − v·p) ≤ 1`) it is pinned to `μ(p) − 1` and the
//! eigen-measure acquires an atom at the maximizing velocity.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::VelocityMeasure;
use crate::roots::newton_bisect;
use crate::scalar::{dot, is_zero, norm, scaled, Scalar};

/// Stop the Newton iteration once `|F(H) − 1|` is below this.
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MAX_ROOT_ITER: usize = 200;
/// Below this offset the lower-bracket search takes coarser steps.
pub const OFFSET_COARSE: f64 = 1e-14;
pub const MAX_DOUBLINGS: usize = 60;
/// Bisection resolution of [`VelocityMeasure::sing_boundary_radius`].
pub const BOUNDARY_XTOL: f64 = 1e-11;
/// Search horizon of [`VelocityMeasure::sing_boundary_radius`].
pub const BOUNDARY_HORIZON: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    Regular,
    Singular,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Regular => "Regular",
            Regime::Singular => "Singular",
        }
    }
}

/// `H(p)` with its regime, gradient (or chosen subgradient) and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianEval<T> {
    pub p: Vec<T>,
    #[serde(rename = "H")]
    pub h: T,
    pub mu: T,
    pub regime: Regime,
    pub grad: Vec<T>,
    /// `|F(H) − 1|`; zero on the singular branch.
    pub residual: T,
    /// `1 + H − μ(p)`.
    pub offset: T,
    /// True when the singular-branch maximizer was not unique and `grad`
    /// is the lexicographically smallest candidate.
    pub degenerate_subgradient: bool,
    pub iterations: usize,
}

/// Positive eigen-measure `Q = c/(1 + H − v·p) dv + α δ_w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair<T> {
    pub p: Vec<T>,
    #[serde(rename = "H")]
    pub h: T,
    pub regime: Regime,
    pub density_scale: T,
    pub atom_weight: T,
    pub atom_location: Option<Vec<T>>,
}

impl<T: Scalar> EigenPair<T> {
    /// Density part of `Q` at `v` (off the atom).
    pub fn density_at(&self, v: &[T]) -> T {
        self.density_scale / (T::one() + self.h - dot(v, &self.p))
    }
}

/// Convex conjugate `L(v) = sup_p [p·v − H(p)]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendreEval<T> {
    pub v: Vec<T>,
    #[serde(rename = "L")]
    pub value: T,
    /// Maximizing momentum when the supremum is attained.
    pub argmax: Option<Vec<T>>,
    /// False for `v` on the hull boundary, where the supremum is a limit.
    pub attained: bool,
}

enum Probe<T> {
    Singular { mu: T },
    /// `lower` has `F(lower) ≥ 1`; zero when even the smallest positive
    /// offset leaves `F < 1` in floating point.
    Regular { mu: T, lower: T },
}

impl<T: Scalar> VelocityMeasure<T> {
    fn probe(&self, p: &[T]) -> Result<Probe<T>> {
        let mu = self.mu(p)?;
        if is_zero(p) {
            return Ok(Probe::Regular { mu, lower: T::one() });
        }
        if self.singular_integral(p)? <= T::one() {
            return Ok(Probe::Singular { mu });
        }
        // F increases to the singular integral as the offset goes to zero,
        // so a lower bracket exists; near the boundary it can be very small
        let floor = T::min_positive_value();
        let coarse = T::lit(OFFSET_COARSE);
        let mut delta = T::lit(1e-2) * (T::one() + mu.abs());
        loop {
            if self.moments_at_offset(p, delta).f >= T::one() {
                return Ok(Probe::Regular { mu, lower: delta });
            }
            if delta <= floor {
                return Ok(Probe::Regular { mu, lower: T::zero() });
            }
            let factor = if delta > coarse { T::lit(10.0) } else { T::lit(1e8) };
            delta = (delta / factor).max(floor);
        }
    }

    /// Regular iff `∫ M/(μ(p) − v·p) > 1`, i.e. `p ∉ Sing(M)`.
    pub fn classify(&self, p: &[T]) -> Result<Regime> {
        if is_zero(p) {
            self.mu(p)?;
            return Ok(Regime::Regular);
        }
        Ok(if self.singular_integral(p)? <= T::one() {
            Regime::Singular
        } else {
            Regime::Regular
        })
    }

    /// Solves for `H(p)`.
    pub fn solve_h(&self, p: &[T]) -> Result<HamiltonianEval<T>> {
        match self.probe(p)? {
            Probe::Singular { mu } => {
                let q = self.support_mu(p)?;
                let grad = q.maximizer().map(<[T]>::to_vec).unwrap_or_default();
                Ok(HamiltonianEval {
                    p: p.to_vec(),
                    h: mu - T::one(),
                    mu,
                    regime: Regime::Singular,
                    grad,
                    residual: T::zero(),
                    offset: T::zero(),
                    degenerate_subgradient: q.is_degenerate(),
                    iterations: 0,
                })
            }
            Probe::Regular { mu, lower } if is_zero(p) => {
                debug_assert_eq!(lower, T::one());
                Ok(HamiltonianEval {
                    p: p.to_vec(),
                    h: T::zero(),
                    mu,
                    regime: Regime::Regular,
                    grad: self.mean_velocity(),
                    residual: T::zero(),
                    offset: T::one(),
                    degenerate_subgradient: false,
                    iterations: 0,
                })
            }
            Probe::Regular { mu, lower } if lower == T::zero() => {
                let grad = self
                    .support_mu(p)?
                    .maximizer()
                    .map(<[T]>::to_vec)
                    .unwrap_or_default();
                let tiny = T::min_positive_value();
                Ok(HamiltonianEval {
                    p: p.to_vec(),
                    h: mu - T::one(),
                    mu,
                    regime: Regime::Regular,
                    grad,
                    residual: (self.moments_at_offset(p, tiny).f - T::one()).abs(),
                    offset: T::zero(),
                    degenerate_subgradient: false,
                    iterations: 0,
                })
            }
            Probe::Regular { mu, lower } => {
                let two = T::lit(2.0);
                let mut upper = (lower * two).max(T::one());
                let mut doublings = 0;
                while self.moments_at_offset(p, upper).f >= T::one() {
                    doublings += 1;
                    if doublings > MAX_DOUBLINGS {
                        return Err(Error::NoBracket {
                            p_norm: norm(p).as_f64(),
                        });
                    }
                    upper = upper * two;
                }
                // Newton in u = ln δ: the offset spans many decades near the
                // singular threshold
                let root = newton_bisect(
                    |u: T| {
                        let d = u.exp();
                        let m = self.moments_at_offset(p, d);
                        (m.f - T::one(), -m.g0 * d)
                    },
                    lower.ln(),
                    upper.ln(),
                    T::tol(RESIDUAL_TOL),
                    MAX_ROOT_ITER,
                );
                let delta = root.x.exp();
                let m = self.moments_at_offset(p, delta);
                let grad = m.g1.iter().map(|&g| g / m.g0).collect();
                Ok(HamiltonianEval {
                    p: p.to_vec(),
                    h: mu - T::one() + delta,
                    mu,
                    regime: Regime::Regular,
                    grad,
                    residual: (m.f - T::one()).abs(),
                    offset: delta,
                    degenerate_subgradient: false,
                    iterations: root.iterations,
                })
            }
        }
    }

    /// `H(p)` only.
    pub fn hamiltonian(&self, p: &[T]) -> Result<T> {
        Ok(self.solve_h(p)?.h)
    }

    /// `∇H(p)`: `∫Mv/(·)² / ∫M/(·)²` off the singular set, the maximizing
    /// velocity on it.
    pub fn grad_h(&self, p: &[T]) -> Result<Vec<T>> {
        let e = self.solve_h(p)?;
        if e.regime == Regime::Singular && e.degenerate_subgradient {
            let count = self.support_mu(p)?.maximizer_count();
            return Err(Error::DegenerateMaximizer {
                p_norm: norm(p).as_f64(),
                count,
            });
        }
        Ok(e.grad)
    }

    /// Evaluates many momenta in parallel; order of results follows input.
    pub fn solve_h_many(&self, momenta: &[Vec<T>]) -> Vec<Result<HamiltonianEval<T>>> {
        momenta.par_iter().map(|p| self.solve_h(p)).collect()
    }

    /// Eigen-measure at `p`, normalized so that `∫ M Q = 1` off the singular
    /// set; on it the density part has unit scale and the atom carries
    /// `α(p) = 1 − ∫ M/(μ(p) − v·p)`.
    pub fn eigenpair(&self, p: &[T]) -> Result<EigenPair<T>> {
        let e = self.solve_h(p)?;
        match e.regime {
            Regime::Regular => {
                let f = if e.offset > T::zero() {
                    self.moments_at_offset(p, e.offset).f
                } else {
                    T::one()
                };
                Ok(EigenPair {
                    p: p.to_vec(),
                    h: e.h,
                    regime: e.regime,
                    density_scale: T::one() / f,
                    atom_weight: T::zero(),
                    atom_location: None,
                })
            }
            Regime::Singular => {
                let q = self.support_mu(p)?;
                if q.is_degenerate() {
                    return Err(Error::DegenerateMaximizer {
                        p_norm: norm(p).as_f64(),
                        count: q.maximizer_count(),
                    });
                }
                let alpha = (T::one() - self.singular_integral(p)?).max(T::zero());
                let location = if alpha > T::zero() {
                    q.maximizer().map(<[T]>::to_vec)
                } else {
                    None
                };
                Ok(EigenPair {
                    p: p.to_vec(),
                    h: e.h,
                    regime: e.regime,
                    density_scale: T::one(),
                    atom_weight: alpha,
                    atom_location: location,
                })
            }
        }
    }

    /// Radius at which the ray `ρ·direction` enters `Sing(M)`, or `+∞` if it
    /// stays regular up to radius 10⁶. `Sing(M)ᶜ` is convex and contains 0,
    /// so there is at most one crossing.
    pub fn sing_boundary_radius(&self, direction: &[T]) -> Result<T> {
        let len = norm(direction);
        if !(len > T::zero()) {
            return Err(Error::InvalidArgument("direction must be non-zero".into()));
        }
        let e = scaled(direction, T::one() / len);
        let regular = |rho: T| -> Result<bool> {
            Ok(self.classify(&scaled(&e, rho))? == Regime::Regular)
        };
        let horizon = T::lit(BOUNDARY_HORIZON);
        if regular(horizon)? {
            return Ok(T::infinity());
        }
        let two = T::lit(2.0);
        let mut outside = T::one();
        while regular(outside)? {
            outside = (outside * two).min(horizon);
        }
        let mut inside = T::zero();
        if outside > T::one() {
            inside = outside / two;
        }
        let xtol = T::tol(BOUNDARY_XTOL);
        let mut err = None;
        let rho = crate::roots::bisect(
            |r| match regular(r) {
                Ok(b) => b,
                Err(e) => {
                    err = Some(e);
                    true
                }
            },
            inside,
            outside,
            xtol,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(rho),
        }
    }

    /// Rate function `L(v) = sup_p [p·v − H(p)]`.
    pub fn legendre(&self, v: &[T]) -> Result<LegendreEval<T>> {
        let excess = self.hull_excess(v)?;
        let slack = T::tol(1e-12) * (T::one() + self.support_radius());
        if excess > slack {
            return Err(Error::OutsideHull {
                excess: excess.as_f64(),
            });
        }
        let boundary = excess >= -slack;
        let mean = self.mean_velocity();
        let dv: Vec<T> = v.iter().zip(&mean).map(|(&a, &b)| a - b).collect();
        if norm(&dv) <= T::epsilon() * (T::one() + self.support_radius()) {
            return Ok(LegendreEval {
                v: v.to_vec(),
                value: T::zero(),
                argmax: Some(vec![T::zero(); v.len()]),
                attained: true,
            });
        }
        let cap = T::lit(BOUNDARY_HORIZON);
        let xtol = T::tol(1e-12);
        let (value, p) = if self.dimension() == 1 || self.is_rotationally_invariant() {
            // along the ray through v − E[v] (E[v] = 0 for rotational
            // measures) the objective is concave; bisect on its slope
            let e = scaled(&dv, T::one() / norm(&dv));
            let target = dot(&e, v);
            let mut fail = None;
            let mut ascending = |rho: T| match self.solve_h(&scaled(&e, rho)) {
                Ok(h) => target > dot(&e, &h.grad),
                Err(err) => {
                    fail.get_or_insert(err);
                    false
                }
            };
            let two = T::lit(2.0);
            let mut hi = T::one();
            while hi < cap && ascending(hi) {
                hi = (hi * two).min(cap);
            }
            let rho = if hi >= cap && ascending(cap) {
                cap
            } else {
                crate::roots::bisect(&mut ascending, T::zero(), hi, xtol * (T::one() + hi))
            };
            if let Some(err) = fail {
                return Err(err);
            }
            let p = scaled(&e, rho);
            (dot(&p, v) - self.hamiltonian(&p)?, p)
        } else {
            self.newton_ascent(v, cap)?
        };
        Ok(LegendreEval {
            v: v.to_vec(),
            value: value.max(T::zero()),
            argmax: if boundary { None } else { Some(p) },
            attained: !boundary,
        })
    }

    /// Damped Newton ascent on the concave `p·v − H(p)`, with a
    /// finite-difference Hessian of `H` and a gradient step whenever the
    /// Newton direction fails to ascend.
    fn newton_ascent(&self, v: &[T], cap: T) -> Result<(T, Vec<T>)> {
        let n = v.len();
        let mut p = vec![T::zero(); n];
        let mut value = T::zero();
        let mut grad: Vec<T> = v
            .iter()
            .zip(self.mean_velocity())
            .map(|(&a, b)| a - b)
            .collect();
        let half = T::lit(0.5);
        let mut quiet = 0;
        for _ in 0..500 {
            let gnorm = norm(&grad);
            if gnorm <= T::tol(1e-13) {
                break;
            }
            let mut dir = self
                .hessian_h(&p)
                .ok()
                .and_then(|hess| solve_dense(hess, grad.clone()))
                .filter(|d| dot(d, &grad) > T::zero())
                .unwrap_or_else(|| grad.clone());
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<T> = p.iter().zip(&dir).map(|(&a, &d)| a + d).collect();
                if norm(&trial) <= cap {
                    let e = self.solve_h(&trial)?;
                    let trial_value = dot(&trial, v) - e.h;
                    if trial_value >= value + T::lit(1e-4) * dot(&dir, &grad) {
                        accepted = Some((trial, trial_value, e.grad));
                        break;
                    }
                }
                dir = scaled(&dir, half);
            }
            let Some((trial, trial_value, g)) = accepted else {
                break;
            };
            let gain = trial_value - value;
            p = trial;
            value = trial_value;
            grad = v.iter().zip(&g).map(|(&a, &b)| a - b).collect();
            quiet = if gain <= T::tol(1e-15) * (T::one() + value.abs()) { quiet + 1 } else { 0 };
            if quiet >= 3 {
                break;
            }
        }
        Ok((value, p))
    }

    /// Central-difference Hessian of `H` from exact gradients.
    fn hessian_h(&self, p: &[T]) -> Result<Vec<Vec<T>>> {
        let n = p.len();
        let h = T::lit(1e-6) * (T::one() + norm(p));
        let mut rows = vec![vec![T::zero(); n]; n];
        for j in 0..n {
            let mut up = p.to_vec();
            let mut dn = p.to_vec();
            up[j] = up[j] + h;
            dn[j] = dn[j] - h;
            let gu = self.solve_h(&up)?.grad;
            let gd = self.solve_h(&dn)?.grad;
            for i in 0..n {
                rows[i][j] = (gu[i] - gd[i]) / (h + h);
            }
        }
        Ok(rows)
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(T::zero(), |m, x| m.max(x.abs()));
    if !(scale > T::zero()) || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() <= T::tol(1e-12) * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] = a[row][k] - f * a[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s = (i + 1..n).fold(b[i], |s, k| s - a[i][k] * x[k]);
        x[i] = s / a[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// One row of the Hamiltonian profile table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow<T> {
    pub p_norm: T,
    pub eval: HamiltonianEval<T>,
}

/// Evaluates `H` along `ρ·direction` for each `ρ` in `radii`.
pub fn radial_profile<T: Scalar>(
    measure: &VelocityMeasure<T>,
    direction: &[T],
    radii: &[T],
) -> Result<Vec<ProfileRow<T>>> {
    let len = norm(direction);
    if !(len > T::zero()) {
        return Err(Error::InvalidArgument("direction must be non-zero".into()));
    }
    let e = scaled(direction, T::one() / len);
    let momenta: Vec<Vec<T>> = radii.iter().map(|&r| scaled(&e, r)).collect();
    measure
        .solve_h_many(&momenta)
        .into_iter()
        .zip(radii)
        .map(|(res, &r)| res.map(|eval| ProfileRow { p_norm: r.abs(), eval }))
        .collect()
}

pub const PROFILE_SCHEMA: &str = "hamiltonian/1";

/// Writes profile rows as CSV:
/// `p_norm,p_0..p_{n-1},H,mu_minus_1,regime,grad_0..grad_{n-1}`, preceded by
/// a `# schema=hamiltonian/1` line. With no rows only the header is written.
pub fn write_profile_csv<T: Scalar, W: Write>(
    mut out: W,
    dimension: usize,
    rows: &[ProfileRow<T>],
) -> std::io::Result<()> {
    writeln!(out, "# schema={PROFILE_SCHEMA}")?;
    let mut header = vec!["p_norm".to_string()];
    header.extend((0..dimension).map(|i| format!("p_{i}")));
    header.extend(["H", "mu_minus_1", "regime"].map(String::from));
    header.extend((0..dimension).map(|i| format!("grad_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let e = &row.eval;
        let mut cells = vec![row.p_norm.to_string()];
        cells.extend(e.p.iter().map(|x| x.to_string()));
        cells.push(e.h.to_string());
        cells.push((e.mu - T::one()).to_string());
        cells.push(e.regime.as_str().to_string());
        cells.extend(e.grad.iter().map(|x| x.to_string()));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
