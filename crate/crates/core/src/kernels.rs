//! Compactly supported smoothing kernels and their moment checks.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quadrature::{tensor_quadrature, QuadratureRule};

/// Univariate kernel with support `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// `0.75 (1 - u²)`, order 2.
    Epanechnikov,
    /// `0.5 · 1[-1,1]`, order 2.
    Uniform,
    /// `15/16 (1 - u²)²`, order 2.
    Biweight,
    /// `15/32 (3 - 10u² + 7u⁴)`, order 4. Takes negative values.
    Poly4,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [
        Kernel::Epanechnikov,
        Kernel::Uniform,
        Kernel::Biweight,
        Kernel::Poly4,
    ];

    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        let u2 = u * u;
        match self {
            Kernel::Epanechnikov => 0.75 * (1.0 - u2),
            Kernel::Uniform => 0.5,
            Kernel::Biweight => {
                let t = 1.0 - u2;
                0.9375 * t * t
            }
            Kernel::Poly4 => 0.46875 * (3.0 - 10.0 * u2 + 7.0 * u2 * u2),
        }
    }

    /// `K((x - center)/h) / h`.
    #[inline]
    pub fn scaled(self, x: f64, center: f64, h: f64) -> f64 {
        self.eval((x - center) / h) / h
    }

    pub fn support(self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    pub fn declared_order(self) -> u32 {
        match self {
            Kernel::Poly4 => 4,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Uniform => "uniform",
            Kernel::Biweight => "biweight",
            Kernel::Poly4 => "poly4",
        }
    }

    pub fn sup_norm(self) -> f64 {
        match self {
            Kernel::Epanechnikov => 0.75,
            Kernel::Uniform => 0.5,
            Kernel::Biweight => 0.9375,
            Kernel::Poly4 => 1.40625,
        }
    }

    /// Total variation `∫ |dK|`, including the jumps at the support edges.
    pub fn total_variation(self) -> f64 {
        let (lo, hi) = self.support();
        let steps = 20_000;
        let mut prev = 0.0;
        let mut tv = 0.0;
        for k in 0..=steps {
            let u = lo + (hi - lo) * k as f64 / steps as f64;
            let v = self.eval(u);
            tv += (v - prev).abs();
            prev = v;
        }
        tv + prev.abs()
    }

    /// Polynomial pieces are exact under a 64-node rule; the support has no interior kinks.
    pub fn integrate<F: Fn(f64) -> f64>(self, f: F) -> f64 {
        let (lo, hi) = self.support();
        QuadratureRule::default().integrate(|u| f(u) * self.eval(u), lo, hi)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            "uniform" => Ok(Kernel::Uniform),
            "biweight" => Ok(Kernel::Biweight),
            "poly4" => Ok(Kernel::Poly4),
            other => Err(Error::invalid(format!("unknown kernel `{other}`"))),
        }
    }
}

/// `∫ u^j K(u) du`.
pub fn kernel_moment(k: Kernel, j: u32) -> f64 {
    k.integrate(|u| u.powi(j as i32))
}

/// `∫ K²`.
pub fn l2_norm_sq(k: Kernel) -> f64 {
    k.integrate(|u| k.eval(u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub gamma: u32,
    /// `(j, ∫ u^j K)` for `j = 0..=gamma`.
    pub moments: Vec<(u32, f64)>,
    /// The first non-vanishing moment candidate, `∫ u^γ K`.
    pub leading_moment: f64,
    pub passed: bool,
}

/// Order-`gamma` check: moments `1..gamma-1` vanish to `tol` and the `gamma`-th is finite.
pub fn verify_order(k: Kernel, gamma: u32, tol: f64) -> Result<OrderReport> {
    if gamma < 1 {
        return Err(Error::invalid("kernel order must be at least 1"));
    }
    let moments: Vec<(u32, f64)> = (0..=gamma).map(|j| (j, kernel_moment(k, j))).collect();
    let leading_moment = moments[gamma as usize].1;
    let vanish = moments[1..gamma as usize]
        .iter()
        .all(|&(_, m)| m.abs() <= tol);
    let normalized = (moments[0].1 - 1.0).abs() <= tol.max(1e-9);
    Ok(OrderReport {
        gamma,
        moments,
        leading_moment,
        passed: vanish && normalized && leading_moment.is_finite(),
    })
}

/// Mixed moment `∫ u₁^{e₁}…u_d^{e_d} ∏ K_ℓ(u_ℓ) du` of the product kernel, computed by
/// tensor quadrature over the product support.
pub fn product_moment(kernels: &[Kernel], exponents: &[u32]) -> Result<f64> {
    if kernels.len() != exponents.len() {
        return Err(Error::invalid("one exponent per kernel axis is required"));
    }
    let bounds: Vec<(f64, f64)> = kernels.iter().map(|k| k.support()).collect();
    tensor_quadrature(
        |u| {
            kernels
                .iter()
                .zip(exponents)
                .zip(u)
                .map(|((k, &e), &x)| x.powi(e as i32) * k.eval(x))
                .product()
        },
        &bounds,
        &QuadratureRule::default(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductOrderReport {
    pub order: u32,
    /// Every multi-index of total degree `1..order-1` with its mixed moment.
    pub moments: Vec<(Vec<u32>, f64)>,
    pub passed: bool,
}

/// Order check for the product kernel `∏ K_ℓ`: all mixed moments of total degree
/// `1..order-1` vanish to `tol`.
pub fn verify_product_order(kernels: &[Kernel], order: u32, tol: f64) -> Result<ProductOrderReport> {
    if order < 1 {
        return Err(Error::invalid("kernel order must be at least 1"));
    }
    let mut moments = Vec::new();
    for total in 1..order {
        for exps in compositions(total, kernels.len()) {
            let m = product_moment(kernels, &exps)?;
            moments.push((exps, m));
        }
    }
    let passed = moments.iter().all(|(_, m)| m.abs() <= tol);
    Ok(ProductOrderReport {
        order,
        moments,
        passed,
    })
}

/// All vectors of `parts` nonnegative integers summing to `total`.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        return out;
    }
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epanechnikov_moments() {
        let k = Kernel::Epanechnikov;
        assert!((kernel_moment(k, 0) - 1.0).abs() < 1e-12);
        assert!(kernel_moment(k, 1).abs() < 1e-12);
        assert!((kernel_moment(k, 2) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn l2_norms() {
        assert!((l2_norm_sq(Kernel::Epanechnikov) - 0.6).abs() < 1e-9);
        assert!((l2_norm_sq(Kernel::Uniform) - 0.5).abs() < 1e-9);
        assert!((l2_norm_sq(Kernel::Biweight) - 5.0 / 7.0).abs() < 1e-9);
    }

    #[test]
    fn scaled_kernel_l2() {
        let h = 0.25;
        let k = Kernel::Epanechnikov;
        let got = QuadratureRule::default().integrate(|x| k.scaled(x, 0.0, h).powi(2), -h, h);
        assert!((got - l2_norm_sq(k) / h).abs() < 1e-9);
    }

    #[test]
    fn order_checks() {
        assert!(verify_order(Kernel::Epanechnikov, 2, 1e-10).unwrap().passed);
        let r4 = verify_order(Kernel::Epanechnikov, 4, 1e-10).unwrap();
        assert!(!r4.passed);
        assert!((r4.moments[2].1 - 0.2).abs() < 1e-12);
        assert!(verify_order(Kernel::Uniform, 2, 1e-10).unwrap().passed);
        assert!(verify_order(Kernel::Epanechnikov, 0, 1e-10).is_err());
    }

    #[test]
    fn shipped_kernels_pass_declared_order() {
        for k in Kernel::ALL {
            let rep = verify_order(k, k.declared_order(), 1e-10).unwrap();
            assert!(rep.passed, "{k}: {rep:?}");
            assert!(rep.leading_moment.abs() > 1e-6, "{k} leading moment vanishes");
        }
    }

    #[test]
    fn total_variation_values() {
        assert!((Kernel::Epanechnikov.total_variation() - 1.5).abs() < 1e-6);
        assert!((Kernel::Uniform.total_variation() - 1.0).abs() < 1e-6);
        assert!((Kernel::Biweight.total_variation() - 1.875).abs() < 1e-6);
        // 2·(45/32 + 2·60/224)
        assert!((Kernel::Poly4.total_variation() - (2.8125 + 240.0 / 224.0)).abs() < 1e-5);
    }

    #[test]
    fn zero_outside_support_and_names_roundtrip() {
        for k in Kernel::ALL {
            assert_eq!(k.eval(1.0001), 0.0);
            assert_eq!(k.eval(-3.0), 0.0);
            assert_eq!(k.name().parse::<Kernel>().unwrap(), k);
            let m = (0..=2000)
                .map(|i| k.eval(-1.0 + i as f64 / 1000.0).abs())
                .fold(0.0, f64::max);
            assert!(m <= k.sup_norm() + 1e-12);
        }
        assert!("gaussian".parse::<Kernel>().is_err());
    }

    #[test]
    fn product_kernel_order() {
        let two = [Kernel::Epanechnikov, Kernel::Epanechnikov];
        let rep = verify_product_order(&two, 2, 1e-10).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.moments.len(), 2);
        let four = [Kernel::Poly4, Kernel::Poly4, Kernel::Poly4];
        assert!(verify_product_order(&four, 4, 1e-10).unwrap().passed);
        assert!(!verify_product_order(&two, 4, 1e-10).unwrap().passed);
    }

    #[test]
    fn composition_count() {
        // C(total + parts - 1, parts - 1)
        assert_eq!(compositions(3, 3).len(), 10);
        assert!(compositions(2, 2).iter().all(|c| c.iter().sum::<u32>() == 2));
    }
}
