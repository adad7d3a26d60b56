//! Gauss–Legendre rules, tensor-product integration and adaptive 1-D quadrature.
//!
//! Every integral in the estimators (marginal integration against `q`, kernel
//! moments, oracle constants) goes through this module.

use crate::error::{Error, Result};

/// Largest dimension accepted by [`tensor_quadrature`]. Cost grows as `nodes^dim`.
pub const TENSOR_DIM_GUARD: usize = 4;

/// Default number of Gauss–Legendre nodes per axis.
pub const DEFAULT_NODES: usize = 64;

/// Nodes and weights on `[-1, 1]`.
///
/// A rule built from `panels` copies of an `n`-point Gauss–Legendre rule integrates
/// piecewise polynomials of degree `2n - 1` exactly as long as the pieces line up with
/// the panels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exact_degree: usize,
}

impl QuadratureRule {
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let (nodes, weights) = gauss_legendre_nodes(n);
        Self {
            nodes,
            weights,
            exact_degree: 2 * n - 1,
        }
    }

    /// Composite rule: `[-1, 1]` split into `panels` equal pieces, `n` nodes each.
    pub fn composite(n: usize, panels: usize) -> Self {
        assert!(panels >= 1, "at least one panel");
        let base = Self::gauss_legendre(n);
        let width = 2.0 / panels as f64;
        let mut nodes = Vec::with_capacity(n * panels);
        let mut weights = Vec::with_capacity(n * panels);
        for p in 0..panels {
            let lo = -1.0 + width * p as f64;
            let mid = lo + 0.5 * width;
            for (x, w) in base.nodes.iter().zip(&base.weights) {
                nodes.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        Self {
            nodes,
            weights,
            exact_degree: base.exact_degree,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly (per panel).
    pub fn exact_degree(&self) -> usize {
        self.exact_degree
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Integrates over `[a, b]`, applying the rule separately on each piece delimited by
    /// the `breaks` that fall strictly inside the interval.
    pub fn integrate_piecewise<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> f64 {
        if b <= a {
            return 0.0;
        }
        let cuts = interior_cuts(a, b, breaks);
        cuts.windows(2)
            .map(|w| self.integrate(&f, w[0], w[1]))
            .sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_NODES)
    }
}

pub(crate) fn interior_cuts(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut cuts = Vec::with_capacity(breaks.len() + 2);
    cuts.push(a);
    cuts.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    cuts
}

fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
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
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product quadrature of `f` over the box `bounds[0] × … × bounds[dim-1]`.
pub fn tensor_quadrature<F>(f: F, bounds: &[(f64, f64)], rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = bounds.len();
    if dim > TENSOR_DIM_GUARD {
        return Err(Error::DimensionGuard {
            dim,
            max: TENSOR_DIM_GUARD,
        });
    }
    if dim == 0 {
        return Ok(f(&[]));
    }
    let axes: Vec<Vec<(f64, f64)>> = bounds
        .iter()
        .map(|&(a, b)| rule.mapped(a, b).collect())
        .collect();
    let mut point = vec![0.0; dim];
    let mut idx = vec![0usize; dim];
    let m = rule.len();
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            let (x, wk) = axes[k][i];
            point[k] = x;
            w *= wk;
        }
        total += w * f(&point);

        let mut k = dim;
        loop {
            if k == 0 {
                return Ok(total);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Adaptive bisection driven by a 10-point Gauss–Legendre rule: a panel is accepted
/// once the one-panel and two-half-panel estimates agree to `tol`.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rule = QuadratureRule::gauss_legendre(10);
    let whole = rule.integrate(&f, a, b);
    adaptive_step(&f, &rule, a, b, whole, tol.max(1e-15), 0)
}

/// [`adaptive_integrate`] with the interval first split at `breaks` (kinks, jumps).
pub fn adaptive_integrate_piecewise<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let cuts = interior_cuts(a, b, breaks);
    let pieces = (cuts.len() - 1) as f64;
    cuts.windows(2)
        .map(|w| adaptive_integrate(&f, w[0], w[1], tol / pieces))
        .sum()
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    rule: &QuadratureRule,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(f, a, mid);
    let right = rule.integrate(f, mid, b);
    let halves = left + right;
    if (halves - whole).abs() <= tol || depth >= 40 || mid <= a || mid >= b {
        return halves;
    }
    adaptive_step(f, rule, a, mid, left, 0.5 * tol, depth + 1)
        + adaptive_step(f, rule, mid, b, right, 0.5 * tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_positive_and_sum_to_two() {
        for n in [1, 2, 5, 16, 64] {
            let r = QuadratureRule::gauss_legendre(n);
            assert!(r.weights().iter().all(|&w| w > 0.0));
            let s: f64 = r.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_on_monomials_up_to_declared_degree() {
        for n in [3, 8, 20, 64] {
            let r = QuadratureRule::gauss_legendre(n);
            for k in 0..=r.exact_degree() {
                let got = r.integrate(|x| x.powi(k as i32), -1.0, 1.0);
                let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let err = (got - want).abs();
                assert!(
                    err <= 1e-13 * want.abs().max(1.0),
                    "n={n} k={k} got={got} want={want}"
                );
            }
        }
    }

    #[test]
    fn composite_rule_covers_interval() {
        let r = QuadratureRule::composite(4, 10);
        assert_eq!(r.len(), 40);
        let got = r.integrate(|x| x.exp(), 0.0, 1.0);
        assert!((got - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn tensor_examples() {
        let r = QuadratureRule::default();
        let b = [(-1.0, 1.0), (-1.0, 1.0)];
        let one = tensor_quadrature(|_| 1.0, &b, &r).unwrap();
        assert!((one - 4.0).abs() < 1e-12);
        let odd = tensor_quadrature(|u| u[0] * u[1], &b, &r).unwrap();
        assert!(odd.abs() < 1e-14);
        let c = tensor_quadrature(|u| u[0].cos().powi(2), &[(-1.0, 1.0)], &r).unwrap();
        assert!((c - (1.0 + 2f64.sin() / 2.0)).abs() < 1e-12);
        assert!((c - 1.454649).abs() < 1e-6);
    }

    #[test]
    fn tensor_guard() {
        let r = QuadratureRule::gauss_legendre(2);
        let b = vec![(0.0, 1.0); TENSOR_DIM_GUARD + 1];
        assert!(matches!(
            tensor_quadrature(|_| 1.0, &b, &r),
            Err(Error::DimensionGuard { dim: 5, .. })
        ));
        let ok = tensor_quadrature(|_| 1.0, &b[..TENSOR_DIM_GUARD], &r).unwrap();
        assert!((ok - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let got = adaptive_integrate_piecewise(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 1e-12);
        assert!((got - 2.5).abs() < 1e-12);
        let log = adaptive_integrate(|y| 1.0 / (1.0 - y), 0.4, 0.9, 1e-12);
        assert!((log - 6f64.ln()).abs() < 1e-10);
    }
}
