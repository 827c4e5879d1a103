//! Velocity measures with compact support.
//!
//! Every integral the Hamiltonian needs has the form `∫ M(v) g(v·p) dv`, so
//! it depends on `M` only through the law of the projection `v·p̂`. Each
//! measure kind is therefore lowered to a [`Shape`]: a mixture of uniform
//! balls (n ≥ 2), a mixture of uniform intervals (n = 1), or a finite atom
//! list. Balls are integrated in the angle variable `s = r cos θ`, which
//! turns the projected density `(r² − s²)^{(n−1)/2} ds` into `sin^n θ dθ`;
//! intervals and atoms have closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::{dot, is_zero, norm, scaled, unit_ball_volume, Scalar};

/// Default number of Gauss-Legendre nodes per panel of the reduced rule.
pub const DEFAULT_QUADRATURE_ORDER: usize = 200;

/// A singular integral larger than this is reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// A velocity atom of an [`MeasureKind::Atomic`] measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom<T> {
    pub velocity: Vec<T>,
    pub weight: T,
}

impl<T> Atom<T> {
    pub fn new(velocity: Vec<T>, weight: T) -> Self {
        Atom { velocity, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureKind<T> {
    /// Normalized Lebesgue measure on the closed ball of radius `radius`.
    UniformBall { dimension: usize, radius: T },
    /// Uniform density on `[lower, upper]`, one dimension.
    UniformInterval { lower: T, upper: T },
    /// Finite velocity set with positive weights summing to one.
    Atomic { atoms: Vec<Atom<T>> },
    /// Rotationally invariant density, constant on each of the equal-width
    /// shells `[R i/K, R (i+1)/K)`; `shell_density` is stored normalized.
    TabulatedRadial {
        dimension: usize,
        radius: T,
        shell_density: Vec<T>,
    },
}

/// Reduced representation used by the integrals.
#[derive(Debug, Clone, PartialEq)]
enum Shape<T> {
    /// Uniform balls `(radius, weight)` in dimension ≥ 2; weights may be
    /// negative for tabulated densities but sum to one.
    Balls {
        dimension: usize,
        ball_ratio: T,
        components: Vec<(T, T)>,
    },
    /// Uniform intervals `(lower, upper, weight)` in one dimension.
    Intervals { components: Vec<(T, T, T)> },
    Atoms(Vec<Atom<T>>),
}

/// Argmax data of the support function.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Maximizers<T> {
    /// Unique maximizer.
    Point(Vec<T>),
    /// Several extreme points tie (a flat face); sorted lexicographically.
    Face(Vec<Vec<T>>),
    /// `p = 0`: every point of the hull maximizes.
    WholeHull,
}

/// Result of [`VelocityMeasure::support_mu`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportQuery<T> {
    pub p: Vec<T>,
    pub mu: T,
    pub maximizers: Maximizers<T>,
}

impl<T: Scalar> SupportQuery<T> {
    /// True unless the maximizer is a single point.
    pub fn is_degenerate(&self) -> bool {
        !matches!(self.maximizers, Maximizers::Point(_))
    }

    /// The unique maximizer, or the lexicographically smallest vertex of a
    /// face. `None` for `p = 0`.
    pub fn maximizer(&self) -> Option<&[T]> {
        match &self.maximizers {
            Maximizers::Point(w) => Some(w),
            Maximizers::Face(ws) => ws.first().map(|w| w.as_slice()),
            Maximizers::WholeHull => None,
        }
    }

    pub fn maximizer_count(&self) -> usize {
        match &self.maximizers {
            Maximizers::Point(_) => 1,
            Maximizers::Face(ws) => ws.len(),
            Maximizers::WholeHull => usize::MAX,
        }
    }
}

/// The three resolvent integrals at offset `δ = 1 + h − μ(p)`:
/// `f = ∫M/(δ+μ−v·p)`, `g0 = ∫M/(·)²`, `g1 = ∫M v/(·)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub f: T,
    pub g0: T,
    pub g1: Vec<T>,
}

/// A compactly supported velocity probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityMeasure<T> {
    kind: MeasureKind<T>,
    dimension: usize,
    quadrature_order: usize,
    rule: GaussLegendre<T>,
    shape: Shape<T>,
    support_radius: T,
}

fn finite<T: Scalar>(x: T, what: &str) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidMeasure(format!("{what} must be finite")))
    }
}

impl<T: Scalar> VelocityMeasure<T> {
    pub fn uniform_ball(dimension: usize, radius: T) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidMeasure("dimension must be at least 1".into()));
        }
        if !(finite(radius, "radius")? > T::zero()) {
            return Err(Error::InvalidMeasure("radius must be positive".into()));
        }
        let shape = if dimension == 1 {
            Shape::Intervals {
                components: vec![(-radius, radius, T::one())],
            }
        } else {
            Shape::Balls {
                dimension,
                ball_ratio: ball_ratio(dimension),
                components: vec![(radius, T::one())],
            }
        };
        Ok(Self::assemble(
            MeasureKind::UniformBall { dimension, radius },
            dimension,
            shape,
            radius,
        ))
    }

    pub fn uniform_interval(lower: T, upper: T) -> Result<Self> {
        let (lower, upper) = (finite(lower, "lower")?, finite(upper, "upper")?);
        if !(lower < T::zero() && T::zero() < upper) {
            return Err(Error::InvalidMeasure(format!(
                "0 must lie strictly inside [{lower}, {upper}]"
            )));
        }
        Ok(Self::assemble(
            MeasureKind::UniformInterval { lower, upper },
            1,
            Shape::Intervals {
                components: vec![(lower, upper, T::one())],
            },
            lower.abs().max(upper.abs()),
        ))
    }

    pub fn atomic(atoms: Vec<Atom<T>>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidMeasure("atom list is empty".into()))?;
        let dimension = first.velocity.len();
        if dimension == 0 {
            return Err(Error::InvalidMeasure("atoms must have dimension ≥ 1".into()));
        }
        let mut total = T::zero();
        for a in &atoms {
            if a.velocity.len() != dimension {
                return Err(Error::InvalidMeasure("atoms have mixed dimensions".into()));
            }
            if a.velocity.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidMeasure("atom velocity must be finite".into()));
            }
            if !(finite(a.weight, "atom weight")? > T::zero()) {
                return Err(Error::InvalidMeasure("atom weights must be positive".into()));
            }
            total = total + a.weight;
        }
        if (total - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::InvalidMeasure(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        // 0 must be interior to the hull: mu(u) > 0 on every sampled direction
        let min_mu = direction_sample(dimension)
            .iter()
            .map(|u| {
                let u: Vec<T> = u.iter().map(|&x| T::lit(x)).collect();
                atoms
                    .iter()
                    .map(|a| dot(&a.velocity, &u))
                    .fold(T::neg_infinity(), T::max)
            })
            .fold(T::infinity(), T::min);
        if !(min_mu > T::zero()) {
            return Err(Error::InvalidMeasure(
                "0 is not in the interior of the convex hull of the atoms".into(),
            ));
        }
        let radius = atoms
            .iter()
            .map(|a| norm(&a.velocity))
            .fold(T::zero(), T::max);
        Ok(Self::assemble(
            MeasureKind::Atomic {
                atoms: atoms.clone(),
            },
            dimension,
            Shape::Atoms(atoms),
            radius,
        ))
    }

    /// Radial density constant on `samples.len()` equal-width shells of the
    /// ball of radius `radius`. Samples are rescaled to unit mass; trailing
    /// empty shells are dropped.
    pub fn tabulated_radial(dimension: usize, radius: T, samples: Vec<T>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidMeasure("dimension must be at least 1".into()));
        }
        if !(finite(radius, "radius")? > T::zero()) {
            return Err(Error::InvalidMeasure("radius must be positive".into()));
        }
        if samples.iter().any(|&g| !g.is_finite() || g < T::zero()) {
            return Err(Error::InvalidMeasure(
                "radial density samples must be finite and non-negative".into(),
            ));
        }
        let shells = samples.len();
        let used = samples
            .iter()
            .rposition(|&g| g > T::zero())
            .ok_or_else(|| Error::InvalidMeasure("radial density is identically zero".into()))?
            + 1;
        let width = radius / T::from_count(shells);
        let mut density: Vec<T> = samples[..used].to_vec();
        let edge = |i: usize| width * T::from_count(i);
        let n = dimension as i32;
        let omega = T::lit(unit_ball_volume(dimension));
        let mass: T = density
            .iter()
            .enumerate()
            .map(|(i, &g)| g * omega * (edge(i + 1).powi(n) - edge(i).powi(n)))
            .sum();
        density.iter_mut().for_each(|g| *g = *g / mass);
        let support = edge(used);
        // g = Σ_j (c_{j-1} − c_j) 1_{B(ρ_j)}, each indicator = ω ρ^n × uniform ball
        let components: Vec<(T, T)> = (1..=used)
            .map(|j| {
                let outer = density[j - 1];
                let inner = if j < used { density[j] } else { T::zero() };
                let rho = edge(j);
                (rho, (outer - inner) * omega * rho.powi(n))
            })
            .filter(|&(_, w)| w != T::zero())
            .collect();
        let shape = if dimension == 1 {
            Shape::Intervals {
                components: components.iter().map(|&(r, w)| (-r, r, w)).collect(),
            }
        } else {
            Shape::Balls {
                dimension,
                ball_ratio: ball_ratio(dimension),
                components,
            }
        };
        Ok(Self::assemble(
            MeasureKind::TabulatedRadial {
                dimension,
                radius: support,
                shell_density: density,
            },
            dimension,
            shape,
            support,
        ))
    }

    fn assemble(kind: MeasureKind<T>, dimension: usize, shape: Shape<T>, support_radius: T) -> Self {
        VelocityMeasure {
            kind,
            dimension,
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
            rule: GaussLegendre::new(DEFAULT_QUADRATURE_ORDER),
            shape,
            support_radius,
        }
    }

    /// Replaces the reduced-rule order (nodes per panel).
    pub fn with_quadrature_order(mut self, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidMeasure("quadrature_order must be positive".into()));
        }
        self.quadrature_order = order;
        self.rule = GaussLegendre::new(order);
        Ok(self)
    }

    pub fn kind(&self) -> &MeasureKind<T> {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    /// Smallest `R` with `M = 0` outside `B(0, R)`; also `max |∇H|`.
    pub fn support_radius(&self) -> T {
        self.support_radius
    }

    pub fn is_rotationally_invariant(&self) -> bool {
        matches!(
            self.kind,
            MeasureKind::UniformBall { .. } | MeasureKind::TabulatedRadial { .. }
        )
    }

    /// `∫ v M(v) dv`.
    pub fn mean_velocity(&self) -> Vec<T> {
        match &self.shape {
            Shape::Balls { .. } => vec![T::zero(); self.dimension],
            Shape::Intervals { components } => {
                let m = components
                    .iter()
                    .map(|&(a, b, w)| w * (a + b) * T::lit(0.5))
                    .sum();
                vec![m]
            }
            Shape::Atoms(atoms) => {
                let mut m = vec![T::zero(); self.dimension];
                for a in atoms {
                    for (mi, &vi) in m.iter_mut().zip(&a.velocity) {
                        *mi = *mi + a.weight * vi;
                    }
                }
                m
            }
        }
    }

    /// Total mass as represented (sum of mixture or atom weights).
    pub fn total_mass(&self) -> T {
        match &self.shape {
            Shape::Balls { components, .. } => components.iter().map(|c| c.1).sum(),
            Shape::Intervals { components } => components.iter().map(|c| c.2).sum(),
            Shape::Atoms(atoms) => atoms.iter().map(|a| a.weight).sum(),
        }
    }

    /// Stable 64-bit FNV-1a digest of the measure description, for run
    /// manifests and cache keys.
    pub fn fingerprint(&self) -> String {
        let text = format!("{:?}|order={}", self.kind, self.quadrature_order);
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    fn check_dim(&self, v: &[T], what: &str) -> Result<()> {
        if v.len() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "{what} has dimension {}, measure has {}",
                v.len(),
                self.dimension
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("{what} must be finite")));
        }
        Ok(())
    }

    /// Support function `μ(p) = max{v·p : v ∈ Conv(V)}` and its maximizers.
    pub fn support_mu(&self, p: &[T]) -> Result<SupportQuery<T>> {
        self.check_dim(p, "momentum")?;
        if is_zero(p) {
            return Ok(SupportQuery {
                p: p.to_vec(),
                mu: T::zero(),
                maximizers: Maximizers::WholeHull,
            });
        }
        let (mu, maximizers) = match &self.shape {
            Shape::Balls { .. } => {
                let r = self.support_radius;
                let lam = norm(p);
                (r * lam, Maximizers::Point(scaled(p, r / lam)))
            }
            Shape::Intervals { components } => {
                let lo = components.iter().map(|c| c.0).fold(T::infinity(), T::min);
                let hi = components.iter().map(|c| c.1).fold(T::neg_infinity(), T::max);
                let w = if p[0] > T::zero() { hi } else { lo };
                (w * p[0], Maximizers::Point(vec![w]))
            }
            Shape::Atoms(atoms) => {
                let mu = atoms
                    .iter()
                    .map(|a| dot(&a.velocity, p))
                    .fold(T::neg_infinity(), T::max);
                let slack = T::tol(1e-12) * (T::one() + mu.abs());
                let mut ties: Vec<Vec<T>> = atoms
                    .iter()
                    .filter(|a| dot(&a.velocity, p) >= mu - slack)
                    .map(|a| a.velocity.clone())
                    .collect();
                ties.sort_by(|a, b| lex_cmp(a, b));
                ties.dedup();
                if ties.len() == 1 {
                    (mu, Maximizers::Point(ties.pop().unwrap()))
                } else {
                    (mu, Maximizers::Face(ties))
                }
            }
        };
        Ok(SupportQuery {
            p: p.to_vec(),
            mu,
            maximizers,
        })
    }

    /// `μ(p)` alone.
    pub fn mu(&self, p: &[T]) -> Result<T> {
        Ok(self.support_mu(p)?.mu)
    }

    /// `∫ M(v) / (μ(p) − v·p) dv`, possibly `+∞`.
    pub fn singular_integral(&self, p: &[T]) -> Result<T> {
        self.check_dim(p, "momentum")?;
        if is_zero(p) {
            return Err(Error::ZeroMomentum);
        }
        let mu = self.mu(p)?;
        let value = match &self.shape {
            Shape::Balls {
                dimension,
                ball_ratio,
                components,
            } => {
                let lam = norm(p);
                let mut acc = T::zero();
                for &(r, w) in components {
                    let offset = lam * (self.support_radius - r);
                    acc = acc + w * self.ball_singular(*dimension, *ball_ratio, r, lam, offset);
                }
                acc
            }
            // the uniform density does not vanish at the maximizing endpoint:
            // ∫ dv/(b − v) diverges logarithmically
            Shape::Intervals { .. } => T::infinity(),
            Shape::Atoms(atoms) => {
                let mut acc = T::zero();
                for a in atoms {
                    let d = mu - dot(&a.velocity, p);
                    if d <= T::zero() {
                        return Ok(T::infinity());
                    }
                    acc = acc + a.weight / d;
                }
                acc
            }
        };
        if !value.is_finite() || value > T::lit(DIVERGENCE_THRESHOLD) {
            Ok(T::infinity())
        } else {
            Ok(value)
        }
    }

    /// `F(h) = ∫ M(v) / (1 + h − v·p) dv`.
    pub fn resolvent_integral(&self, p: &[T], h: T) -> Result<T> {
        let delta = self.offset(p, h)?;
        Ok(self.moments_at_offset(p, delta).f)
    }

    /// `∫ M(v) / (1 + h − v·p)² dv`.
    pub fn resolvent_moment0(&self, p: &[T], h: T) -> Result<T> {
        let delta = self.offset(p, h)?;
        Ok(self.moments_at_offset(p, delta).g0)
    }

    /// `∫ M(v) v / (1 + h − v·p)² dv`.
    pub fn resolvent_moment1(&self, p: &[T], h: T) -> Result<Vec<T>> {
        let delta = self.offset(p, h)?;
        Ok(self.moments_at_offset(p, delta).g1)
    }

    fn offset(&self, p: &[T], h: T) -> Result<T> {
        let mu = self.mu(p)?;
        let delta = T::one() + h - mu;
        if !(delta > T::zero()) {
            return Err(Error::DenominatorNotPositive {
                offset: delta.as_f64(),
            });
        }
        Ok(delta)
    }

    /// All resolvent integrals at offset `δ = 1 + h − μ(p) > 0`.
    ///
    /// Parametrizing by the offset keeps the near-threshold denominator
    /// exact even when `μ(p)` is large.
    pub fn moments_at_offset(&self, p: &[T], delta: T) -> Moments<T> {
        debug_assert!(delta > T::zero());
        let n = self.dimension;
        let lam = norm(p);
        match &self.shape {
            Shape::Balls {
                dimension,
                ball_ratio,
                components,
            } => {
                let (mut f, mut g0, mut g1s) = (T::zero(), T::zero(), T::zero());
                for &(r, w) in components {
                    let off = delta + lam * (self.support_radius - r);
                    let (cf, cg0, cg1) = self.ball_moments(*dimension, *ball_ratio, r, lam, off);
                    f = f + w * cf;
                    g0 = g0 + w * cg0;
                    g1s = g1s + w * cg1;
                }
                let g1 = if lam > T::zero() {
                    scaled(p, g1s / lam)
                } else {
                    vec![T::zero(); n]
                };
                Moments { f, g0, g1 }
            }
            Shape::Intervals { components } => {
                let sign = if p[0] < T::zero() { -T::one() } else { T::one() };
                let mu = self.mu(p).unwrap_or(T::zero());
                let (mut f, mut g0, mut g1s) = (T::zero(), T::zero(), T::zero());
                for &(lo, hi, w) in components {
                    // project onto s = sign·v
                    let (a, b) = if sign > T::zero() { (lo, hi) } else { (-hi, -lo) };
                    let d_hi = delta + mu - lam * b;
                    let (cf, cg0, cg1) = interval_moments(a, b, lam, d_hi);
                    f = f + w * cf;
                    g0 = g0 + w * cg0;
                    g1s = g1s + w * cg1;
                }
                Moments {
                    f,
                    g0,
                    g1: vec![sign * g1s],
                }
            }
            Shape::Atoms(atoms) => {
                let mu = self.mu(p).unwrap_or(T::zero());
                let (mut f, mut g0) = (T::zero(), T::zero());
                let mut g1 = vec![T::zero(); n];
                for a in atoms {
                    let d = delta + (mu - dot(&a.velocity, p)).max(T::zero());
                    let inv = a.weight / d;
                    let inv2 = inv / d;
                    f = f + inv;
                    g0 = g0 + inv2;
                    for (gi, &vi) in g1.iter_mut().zip(&a.velocity) {
                        *gi = *gi + inv2 * vi;
                    }
                }
                Moments { f, g0, g1 }
            }
        }
    }

    /// `(∫ m/(c−λs), ∫ m/(c−λs)², ∫ m s/(c−λs)²)` for one uniform ball of
    /// radius `r`, with `c − λr = offset`.
    fn ball_moments(&self, n: usize, ratio: T, r: T, lam: T, offset: T) -> (T, T, T) {
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let scale = graded_scale(offset, lam * r);
        let (mut f, mut g0, mut g1) = (T::zero(), T::zero(), T::zero());
        self.rule.for_each_graded(T::PI(), scale, |theta, w| {
            let sh = (theta * half).sin();
            let den = offset + two * lam * r * sh * sh;
            let num = w * theta.sin().powi(n as i32) / den;
            f = f + num;
            let num2 = num / den;
            g0 = g0 + num2;
            g1 = g1 + num2 * r * theta.cos();
        });
        (ratio * f, ratio * g0, ratio * g1)
    }

    /// `∫ m/(μ − λs)` for one ball, with `μ − λr = offset ≥ 0`.
    fn ball_singular(&self, n: usize, ratio: T, r: T, lam: T, offset: T) -> T {
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        if offset > T::zero() {
            return self.ball_moments(n, ratio, r, lam, offset).0;
        }
        // sin^n θ / (2 sin²(θ/2)) = 2^{n−1} sin^{n−2}(θ/2) cos^n(θ/2)
        let v = self.rule.integrate(T::zero(), T::PI(), |theta| {
            let (s, c) = (theta * half).sin_cos();
            two.powi(n as i32 - 1) * s.powi(n as i32 - 2) * c.powi(n as i32)
        });
        ratio * v / (lam * r)
    }

    /// Velocity nodes and probability weights for discrete-velocity solvers
    /// (one dimension only): Gauss-Legendre on each interval component, or
    /// the atoms themselves.
    pub fn velocity_quadrature(&self) -> Result<(Vec<T>, Vec<T>)> {
        if self.dimension != 1 {
            return Err(Error::InvalidArgument(
                "discrete-velocity solvers need a one-dimensional measure".into(),
            ));
        }
        match &self.shape {
            Shape::Intervals { components } if components.len() == 1 => {
                let (a, b, _) = components[0];
                let len = b - a;
                Ok(self.rule.mapped(a, b).map(|(x, w)| (x, w / len)).unzip())
            }
            Shape::Intervals { .. } => {
                // tabulated: integrate shell by shell, both signs
                let MeasureKind::TabulatedRadial { shell_density, radius, .. } = &self.kind else {
                    unreachable!("multi-component intervals only come from tabulated kinds")
                };
                let k = shell_density.len();
                let width = *radius / T::from_count(k);
                let per = (self.quadrature_order / (2 * k)).max(2);
                let rule = GaussLegendre::<T>::new(per);
                let mut pts: Vec<(T, T)> = Vec::with_capacity(2 * k * per);
                for (i, &g) in shell_density.iter().enumerate() {
                    let a = width * T::from_count(i);
                    let b = a + width;
                    for (x, w) in rule.mapped(a, b) {
                        pts.push((x, w * g));
                        pts.push((-x, w * g));
                    }
                }
                pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                Ok(pts.into_iter().unzip())
            }
            Shape::Atoms(atoms) => {
                let mut pts: Vec<(T, T)> = atoms.iter().map(|a| (a.velocity[0], a.weight)).collect();
                pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                Ok(pts.into_iter().unzip())
            }
            Shape::Balls { .. } => unreachable!("balls have dimension ≥ 2"),
        }
    }

    /// Largest `u·v − μ(u)` over sampled unit directions `u`. Positive means
    /// `v` is certified outside `Conv(V)`; near zero means on the boundary.
    pub fn hull_excess(&self, v: &[T]) -> Result<T> {
        self.check_dim(v, "velocity")?;
        match &self.shape {
            Shape::Balls { .. } => Ok(norm(v) - self.support_radius),
            Shape::Intervals { components } => {
                let lo = components.iter().map(|c| c.0).fold(T::infinity(), T::min);
                let hi = components.iter().map(|c| c.1).fold(T::neg_infinity(), T::max);
                Ok((v[0] - hi).max(lo - v[0]))
            }
            Shape::Atoms(_) => {
                let mut excess = T::neg_infinity();
                for u in direction_sample(self.dimension) {
                    let u: Vec<T> = u.iter().map(|&x| T::lit(x)).collect();
                    excess = excess.max(dot(&u, v) - self.mu(&u)?);
                }
                Ok(excess)
            }
        }
    }
}

/// `ω_{n−1} / ω_n`, the normalization of the projected ball density.
fn ball_ratio<T: Scalar>(n: usize) -> T {
    T::lit(unit_ball_volume(n - 1) / unit_ball_volume(n))
}

/// First graded panel width in θ: where `2λr sin²(θ/2)` reaches the offset.
fn graded_scale<T: Scalar>(offset: T, lam_r: T) -> T {
    if !(lam_r > T::zero()) {
        return T::zero();
    }
    let q = offset / (T::lit(2.0) * lam_r);
    if q >= T::one() {
        T::zero()
    } else {
        T::lit(2.0) * q.sqrt().asin()
    }
}

/// Closed-form moments of the uniform law on `[a, b]` (projected coordinate
/// `s`) against `1/(c − λs)` with `c − λb = d`.
fn interval_moments<T: Scalar>(a: T, b: T, lam: T, d: T) -> (T, T, T) {
    let w = b - a;
    let x = lam * w / d;
    let d_lo = d + lam * w;
    // ln(1+x)/x and (ln(1+x) − x/(1+x))/x², by series near 0
    let (l1, q) = if x < T::lit(1e-3) {
        let mut l1 = T::zero();
        let mut q = T::zero();
        let mut xk = T::one();
        for k in 0..12 {
            let kf = T::from_count(k);
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            l1 = l1 + sign * xk / (kf + T::one());
            q = q + sign * xk * (kf + T::one()) / (kf + T::lit(2.0));
            xk = xk * x;
        }
        (l1, q)
    } else {
        let ln = x.ln_1p();
        (ln / x, (ln - x / (T::one() + x)) / (x * x))
    };
    let f = l1 / d;
    let g0 = T::one() / (d * d_lo);
    let g1 = b * g0 - q * w / (d * d);
    (f, g0, g1)
}

fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Deterministic sample of unit directions used for hull certificates:
/// `±1` in 1-D, 720 angles in 2-D, axes plus 4096 seeded Gaussian directions
/// beyond.
pub(crate) fn direction_sample(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..720)
            .map(|k| {
                let t = k as f64 * std::f64::consts::PI / 360.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(2 * n + 4096);
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = s;
                    out.push(e);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1c7);
            while out.len() < 2 * n + 4096 {
                let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let l = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if l > 1e-12 {
                    out.push(g.iter().map(|x| x / l).collect());
                }
            }
            out
        }
    }
}
