//! Gauss-Legendre rules and the graded composite rule used for the
//! near-singular reduced integrals.

use crate::scalar::Scalar;

/// An `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    /// Builds the rule. Nodes are found by Newton iteration on `P_n` in
    /// `f64` and then narrowed to `T`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes on `[-1, 1]`, ascending.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + w * f(mid + half * x);
        }
        acc * half
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }

    /// Composite integral over `[0, end]` on panels graded geometrically
    /// (ratio 2) away from 0, the first panel being `[0, scale]`. Falls back
    /// to a single panel when `scale` is not small against `end`.
    pub fn integrate_graded<F: FnMut(T) -> T>(&self, end: T, scale: T, mut f: F) -> T {
        let mut acc = T::zero();
        self.for_each_graded(end, scale, |x, w| acc = acc + w * f(x));
        acc
    }

    /// Visits every (node, weight) pair of the graded composite rule used by
    /// [`integrate_graded`](Self::integrate_graded).
    pub fn for_each_graded<F: FnMut(T, T)>(&self, end: T, scale: T, mut visit: F) {
        if !(scale > T::zero()) || scale >= end * T::lit(1.0 / 64.0) {
            self.mapped(T::zero(), end).for_each(|(x, w)| visit(x, w));
            return;
        }
        let two = T::lit(2.0);
        self.mapped(T::zero(), scale).for_each(|(x, w)| visit(x, w));
        let mut a = scale;
        while a < end {
            let mut b = a * two;
            // merge a short tail into the last panel
            if b * T::lit(1.5) >= end {
                b = end;
            }
            self.mapped(a, b).for_each(|(x, w)| visit(x, w));
            a = b;
        }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
