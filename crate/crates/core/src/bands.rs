//! Variance constants, the plug-in scale estimate `τ̂` and simultaneous confidence bands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::data::{fmt_f64, CensoredSample, PsiFunction, Region};
use crate::error::{Error, Result};
use crate::ipcw::{DensityModel, EstimatorConfig, KernelDensity};
use crate::kernels::{l2_norm_sq, Kernel};
use crate::marginal::{AdditiveFit, IntegrationDensities};
use crate::quadrature::{tensor_quadrature, QuadratureRule, TENSOR_DIM_GUARD};
use crate::simulation::SimulationTruth;

/// Default number of grid points used for suprema over `C_ℓ`.
pub const SUP_GRID_POINTS: usize = 201;

/// How the integration density enters `φ_{ψ,ℓ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QConvention {
    /// `∫ H q_{-ℓ}² / f(·|x_ℓ)`, the form that matches the variance limit of `m̃*`.
    #[default]
    Squared,
    /// `∫ H q_{-ℓ} / f(·|x_ℓ)`.
    Single,
}

type PointFn<'a> = Box<dyn Fn(&[f64]) -> Result<f64> + Sync + 'a>;
type DensityFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;
type MarginalFn<'a> = Box<dyn Fn(usize, f64) -> f64 + Sync + 'a>;

/// The population ingredients of the variance constants: `H_ψ`, the joint covariate
/// density and its marginals.
pub struct VarianceModel<'a> {
    dim: usize,
    h: PointFn<'a>,
    f: DensityFn<'a>,
    f_marginal: MarginalFn<'a>,
}

impl<'a> VarianceModel<'a> {
    pub fn new(
        dim: usize,
        h: impl Fn(&[f64]) -> Result<f64> + Sync + 'a,
        f: impl Fn(&[f64]) -> f64 + Sync + 'a,
        f_marginal: impl Fn(usize, f64) -> f64 + Sync + 'a,
    ) -> Self {
        Self {
            dim,
            h: Box::new(h),
            f: Box::new(f),
            f_marginal: Box::new(f_marginal),
        }
    }

    /// Simulation truth with a given `ψ`.
    pub fn from_truth(truth: &'a SimulationTruth, psi: &'a PsiFunction) -> Self {
        Self::new(
            truth.dim(),
            move |u| truth.h_psi(u, psi),
            move |x| truth.f(x),
            move |_, x| truth.f_marginal(x),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `φ_{ψ,ℓ}(x_ℓ) = ∫ H(u) q_{-ℓ}^k(u_{-ℓ}) / f(u_{-ℓ} | x_ℓ) du_{-ℓ}` with `k = 2` or `1`.
    pub fn phi(&self, ell: usize, x_ell: f64, q: &IntegrationDensities, conv: QConvention) -> Result<f64> {
        let d = self.dim;
        if q.dim() != d || ell >= d {
            return Err(Error::invalid("axis or integration densities do not match the dimension"));
        }
        let f_ell = (self.f_marginal)(ell, x_ell);
        if !(f_ell > 0.0) {
            return Err(Error::DegenerateDensity(format!(
                "marginal density of axis {} vanishes at {x_ell}",
                ell + 1
            )));
        }
        let others: Vec<usize> = (0..d).filter(|&k| k != ell).collect();
        let bounds: Vec<(f64, f64)> = others.iter().map(|&k| q.axis(k).support()).collect();
        let failure = std::sync::Mutex::new(None);
        let mut u = vec![0.0; d];
        u[ell] = x_ell;
        let u = std::cell::RefCell::new(u);
        let value = tensor_quadrature(
            |v| {
                let mut u = u.borrow_mut();
                let mut qprod = 1.0;
                for (&k, &val) in others.iter().zip(v) {
                    u[k] = val;
                    qprod *= q.axis(k).eval(val);
                }
                if qprod == 0.0 {
                    return 0.0;
                }
                let joint = (self.f)(&u);
                if !(joint > 0.0) {
                    *failure.lock().unwrap() = Some(Error::DegenerateDensity(format!(
                        "covariate density vanishes at {:?} inside the support of q",
                        *u
                    )));
                    return 0.0;
                }
                let cond = joint / f_ell;
                let weight = match conv {
                    QConvention::Squared => qprod * qprod,
                    QConvention::Single => qprod,
                };
                match (self.h)(&u) {
                    Ok(h) => h * weight / cond,
                    Err(e) => {
                        *failure.lock().unwrap() = Some(e);
                        0.0
                    }
                }
            },
            &bounds,
            &QuadratureRule::gauss_legendre(32),
        )?;
        match failure.into_inner().unwrap() {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    /// `τ²(x_ℓ) = φ_{ψ,ℓ}(x_ℓ) / f_ℓ(x_ℓ)`.
    pub fn tau_sq(&self, ell: usize, x_ell: f64, q: &IntegrationDensities, conv: QConvention) -> Result<f64> {
        Ok(self.phi(ell, x_ell, q, conv)? / (self.f_marginal)(ell, x_ell))
    }

    /// `σ_{ψ,ℓ} = sup_{x ∈ C_ℓ} √(φ/f_ℓ · ∫K²)` over `grid_points` equispaced points.
    pub fn sigma(
        &self,
        ell: usize,
        q: &IntegrationDensities,
        kernel: Kernel,
        c_ell: (f64, f64),
        grid_points: usize,
        conv: QConvention,
    ) -> Result<SigmaReport> {
        if grid_points < 2 {
            return Err(Error::invalid("grids need at least 2 points"));
        }
        let (a, b) = c_ell;
        let grid: Vec<f64> = (0..grid_points)
            .map(|k| a + (b - a) * k as f64 / (grid_points - 1) as f64)
            .collect();
        let k2 = l2_norm_sq(kernel);
        let values = grid
            .par_iter()
            .map(|&x| Ok((self.tau_sq(ell, x, q, conv)? * k2).max(0.0).sqrt()))
            .collect::<Result<Vec<f64>>>()?;
        let (imax, &sigma) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty grid");
        Ok(SigmaReport {
            ell,
            argmax: grid[imax],
            grid,
            values,
            sigma,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaReport {
    pub ell: usize,
    pub grid: Vec<f64>,
    /// `√(φ/f_ℓ · ∫K²)` at each grid point.
    pub values: Vec<f64>,
    pub sigma: f64,
    pub argmax: f64,
}

/// `H_ψ(u) = E(ψ²(Y)/G(Y) | X = u)` under the simulation truth.
pub fn h_psi_oracle(truth: &SimulationTruth, u: &[f64], psi: &PsiFunction) -> Result<f64> {
    truth.h_psi(u, psi)
}

/// `σ_{ψ,ℓ}` for the simulation truth over the region axis `C_ℓ`.
pub fn sigma_oracle(
    truth: &SimulationTruth,
    psi: &PsiFunction,
    ell: usize,
    q: &IntegrationDensities,
    kernel: Kernel,
    region: &Region,
    conv: QConvention,
) -> Result<SigmaReport> {
    VarianceModel::from_truth(truth, psi).sigma(ell, q, kernel, region.axis(ell), SUP_GRID_POINTS, conv)
}

/// `σ = Σ_ℓ max_{ψ ∈ family} σ_{ψ,ℓ}` for a finite family.
pub fn sigma_total(
    truth: &SimulationTruth,
    family: &[PsiFunction],
    q: &IntegrationDensities,
    kernels: &[Kernel],
    region: &Region,
    conv: QConvention,
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::invalid("empty psi family"));
    }
    let mut total = 0.0;
    for ell in 0..truth.dim() {
        let mut best = 0.0f64;
        for psi in family {
            best = best.max(sigma_oracle(truth, psi, ell, q, kernels[ell], region, conv)?.sigma);
        }
        total += best;
    }
    Ok(total)
}

/// Panel width of the composite rule for the inner `τ̂` integral, relative to the
/// smallest bandwidth. Kernel kinks are then resolved by at most one panel each.
const TAU_PANELS_PER_BANDWIDTH: f64 = 4.0;
const TAU_NODES_PER_PANEL: usize = 4;

/// Which population quantity the plug-in scale targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauForm {
    /// The displayed estimator: inner weight `q_{-ℓ}/f̂`. Its limit is `∫ H q_{-ℓ}`, which
    /// differs from `φ/f_ℓ` unless `q_{-ℓ} = f(·|x_ℓ)`.
    #[default]
    Printed,
    /// Inner weight `q_{-ℓ}²/f̂²`, whose limit is `∫ H q_{-ℓ}²/f = φ/f_ℓ` with the squared
    /// convention.
    VarianceLimit,
}

/// The plug-in estimate
/// `τ̂(x_ℓ) = n⁻¹ Σ_i [δ_i ψ²(Z_i)/G²(Z_i)] K_{h_ℓ}(x_ℓ − X_{iℓ})
///           ∫ ∏_{j≠ℓ} K_{h_j}(x_j − X_{ij}) / f̂(x) q_{-ℓ}(x_{-ℓ}) dx_{-ℓ}`,
/// read as an estimate of `τ² = φ/f_ℓ`.
///
/// The inner integral uses a composite Gauss–Legendre tensor rule with `f̂` evaluated
/// at the nodes.
pub struct TauHatPlugin {
    n: usize,
    d: usize,
    kernels: Vec<Kernel>,
    h: Vec<f64>,
    density: DensityEval,
    q: IntegrationDensities,
    /// Contributing observations: covariates and `δ ψ² / G²`.
    x: Vec<Vec<f64>>,
    v: Vec<f64>,
    form: TauForm,
}

enum DensityEval {
    Kde(KernelDensity),
    Known(crate::ipcw::DensityFn),
}

impl DensityEval {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            DensityEval::Kde(k) => k.eval(x),
            DensityEval::Known(f) => f(x),
        }
    }
}

impl TauHatPlugin {
    pub fn new(sample: &CensoredSample, cfg: &EstimatorConfig, q: &IntegrationDensities) -> Result<Self> {
        let d = sample.dim();
        if cfg.plan.dim() != d || cfg.kernels.len() != d || q.dim() != d {
            return Err(Error::invalid("configuration does not match the sample dimension"));
        }
        if d - 1 > TENSOR_DIM_GUARD {
            return Err(Error::DimensionGuard {
                dim: d - 1,
                max: TENSOR_DIM_GUARD,
            });
        }
        let density = match &cfg.density {
            DensityModel::Estimated(k) => DensityEval::Kde(KernelDensity::new(sample, *k, cfg.plan.h_density())?),
            DensityModel::Known(f) => DensityEval::Known(f.clone()),
        };
        let mut x = Vec::new();
        let mut v = Vec::new();
        for o in sample.iter() {
            if !o.delta {
                continue;
            }
            let g = cfg.g.eval(o.z);
            if g <= 0.0 {
                continue;
            }
            let p = cfg.psi.eval(o.z);
            if p == 0.0 {
                continue;
            }
            x.push(o.x.clone());
            v.push(p * p / (g * g));
        }
        Ok(Self {
            n: sample.len(),
            d,
            kernels: cfg.kernels.clone(),
            h: cfg.plan.h_axis().to_vec(),
            density,
            q: q.clone(),
            x,
            v,
            form: TauForm::Printed,
        })
    }

    pub fn with_form(mut self, form: TauForm) -> Self {
        self.form = form;
        self
    }

    pub fn form(&self) -> TauForm {
        self.form
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self, ell: usize) -> f64 {
        self.h[ell]
    }

    pub fn kernel(&self, ell: usize) -> Kernel {
        self.kernels[ell]
    }

    /// Mapped nodes, quadrature weights and `q_k` at the node for axis `k`.
    fn axis_nodes(&self, k: usize) -> Vec<(f64, f64, f64)> {
        let (a, b) = self.q.axis(k).support();
        let hmin = self.h.iter().copied().fold(f64::INFINITY, f64::min);
        let panels = (((b - a) / hmin) * TAU_PANELS_PER_BANDWIDTH).ceil().max(1.0) as usize;
        let rule = QuadratureRule::composite(TAU_NODES_PER_PANEL, panels);
        rule.mapped(a, b)
            .map(|(x, w)| (x, w, self.q.axis(k).eval(x)))
            .filter(|&(_, _, qv)| qv != 0.0)
            .collect()
    }

    pub fn eval(&self, ell: usize, x_ell: f64) -> Result<f64> {
        if ell >= self.d {
            return Err(Error::invalid(format!("axis {ell} out of range for d = {}", self.d)));
        }
        let others: Vec<usize> = (0..self.d).filter(|&k| k != ell).collect();
        let axes: Vec<Vec<(f64, f64, f64)>> = others.iter().map(|&k| self.axis_nodes(k)).collect();
        // tensor nodes with weight / f̂; None where f̂ vanishes
        let mut nodes: Vec<(Vec<f64>, Option<f64>)> = Vec::new();
        let mut counter = vec![0usize; axes.len()];
        let mut point = vec![0.0; self.d];
        point[ell] = x_ell;
        if axes.iter().any(|a| a.is_empty()) {
            return Ok(0.0);
        }
        loop {
            let (mut w, mut qprod) = (1.0, 1.0);
            let mut coords = Vec::with_capacity(axes.len());
            for (slot, (&k, &c)) in others.iter().zip(&counter).enumerate() {
                let (xv, wv, qv) = axes[slot][c];
                point[k] = xv;
                coords.push(xv);
                w *= wv;
                qprod *= qv;
            }
            let f = self.density.eval(&point);
            let weight = match self.form {
                TauForm::Printed => w * qprod / f,
                TauForm::VarianceLimit => w * qprod * qprod / (f * f),
            };
            nodes.push((coords, if f > 0.0 { Some(weight) } else { None }));
            let mut slot = 0;
            loop {
                if slot == axes.len() {
                    break;
                }
                counter[slot] += 1;
                if counter[slot] < axes[slot].len() {
                    break;
                }
                counter[slot] = 0;
                slot += 1;
            }
            if slot == axes.len() {
                break;
            }
        }
        let (kl, hl) = (self.kernels[ell], self.h[ell]);
        let mut acc = 0.0;
        for (xi, &vi) in self.x.iter().zip(&self.v) {
            let outer = kl.scaled(x_ell, xi[ell], hl);
            if outer == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for (coords, wf) in &nodes {
                let mut prod = 1.0;
                for (&k, &c) in others.iter().zip(coords) {
                    prod *= self.kernels[k].scaled(c, xi[k], self.h[k]);
                    if prod == 0.0 {
                        break;
                    }
                }
                if prod == 0.0 {
                    continue;
                }
                match wf {
                    Some(w) => inner += prod * w,
                    None => {
                        return Err(Error::DegenerateDensity(format!(
                            "density estimate vanishes inside the kernel window of X = {xi:?}"
                        )))
                    }
                }
            }
            acc += vi * outer * inner;
        }
        Ok(acc / self.n as f64)
    }
}

/// `τ̂` for one point; see [`TauHatPlugin`].
pub fn tau_hat_plugin(
    sample: &CensoredSample,
    ell: usize,
    x_ell: f64,
    cfg: &EstimatorConfig,
    q: &IntegrationDensities,
) -> Result<f64> {
    TauHatPlugin::new(sample, cfg, q)?.eval(ell, x_ell)
}

/// `L_n = √(2|log h| / (n h) · τ̂) · √(∫K²)`.
pub fn band_halfwidth(tau_sq_hat: f64, n: usize, h: f64, kernel: Kernel) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::invalid(format!("band bandwidth must lie in (0, 1), got {h}")));
    }
    if n == 0 {
        return Err(Error::invalid("n >= 1 required"));
    }
    if !(tau_sq_hat >= 0.0) {
        return Err(Error::invalid(format!("scale estimate must be nonnegative, got {tau_sq_hat}")));
    }
    let rate = 2.0 * h.ln().abs() / (n as f64 * h);
    Ok((rate * tau_sq_hat).sqrt() * l2_norm_sq(kernel).sqrt())
}

/// `[η̂_ℓ − (1+ε)L_n, η̂_ℓ + (1+ε)L_n]` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub ell: usize,
    pub grid: Vec<f64>,
    pub center: Vec<f64>,
    /// Uninflated `L_n`.
    pub base_halfwidth: Vec<f64>,
    pub epsilon: f64,
    pub boundary: Vec<bool>,
}

impl ConfidenceBand {
    pub fn from_halfwidths(
        ell: usize,
        grid: Vec<f64>,
        center: Vec<f64>,
        base_halfwidth: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        if grid.len() != center.len() || grid.len() != base_halfwidth.len() {
            return Err(Error::invalid("grid, center and half-widths must have equal length"));
        }
        if base_halfwidth.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::invalid("half-widths must be nonnegative"));
        }
        if !(epsilon > -1.0) {
            return Err(Error::invalid("inflation must exceed -1"));
        }
        let boundary = vec![false; grid.len()];
        Ok(Self {
            ell,
            grid,
            center,
            base_halfwidth,
            epsilon,
            boundary,
        })
    }

    /// Same band with another inflation factor.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut b = Self::from_halfwidths(
            self.ell,
            self.grid.clone(),
            self.center.clone(),
            self.base_halfwidth.clone(),
            epsilon,
        )?;
        b.boundary = self.boundary.clone();
        Ok(b)
    }

    pub fn halfwidth(&self, i: usize) -> f64 {
        (1.0 + self.epsilon) * self.base_halfwidth[i]
    }

    pub fn lower(&self, i: usize) -> f64 {
        self.center[i] - self.halfwidth(i)
    }

    pub fn upper(&self, i: usize) -> f64 {
        self.center[i] + self.halfwidth(i)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Fraction of grid points in `[a, b]` whose `truth` value lies inside the band.
    pub fn coverage<F: Fn(f64) -> f64>(&self, truth: F, a: f64, b: f64) -> Option<f64> {
        let mut total = 0usize;
        let mut hit = 0usize;
        for (i, &x) in self.grid.iter().enumerate() {
            if x < a - 1e-12 || x > b + 1e-12 {
                continue;
            }
            total += 1;
            let t = truth(x);
            if self.lower(i) <= t && t <= self.upper(i) {
                hit += 1;
            }
        }
        (total > 0).then(|| hit as f64 / total as f64)
    }
}

/// Band for component `ell` of `fit`, with `τ̂` from `plugin` at each grid point.
pub fn component_band(fit: &AdditiveFit, ell: usize, plugin: &TauHatPlugin, epsilon: f64) -> Result<ConfidenceBand> {
    if ell >= fit.dim() {
        return Err(Error::invalid(format!("axis {ell} out of range")));
    }
    let grid = fit.grids[ell].points().to_vec();
    let (n, h, k) = (plugin.sample_size(), plugin.bandwidth(ell), plugin.kernel(ell));
    let base = grid
        .par_iter()
        .map(|&x| band_halfwidth(plugin.eval(ell, x)?, n, h, k))
        .collect::<Result<Vec<f64>>>()?;
    let mut band = ConfidenceBand::from_halfwidths(ell, grid, fit.eta[ell].clone(), base, epsilon)?;
    band.boundary = (0..band.len()).map(|i| fit.grids[ell].is_boundary(i)).collect();
    Ok(band)
}

/// `ell,x,eta_hat,halfwidth,lower,upper` with axes numbered from 1.
pub fn write_bands_csv_to<W: Write>(bands: &[ConfidenceBand], mut w: W) -> std::io::Result<()> {
    writeln!(w, "ell,x,eta_hat,halfwidth,lower,upper")?;
    for b in bands {
        for i in 0..b.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                b.ell + 1,
                fmt_f64(b.grid[i]),
                fmt_f64(b.center[i]),
                fmt_f64(b.halfwidth(i)),
                fmt_f64(b.lower(i)),
                fmt_f64(b.upper(i))
            )?;
        }
    }
    w.flush()
}

pub fn write_bands_csv(bands: &[ConfidenceBand], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_bands_csv_to(bands, BufWriter::new(file)).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::SimulationModel;

    #[test]
    fn halfwidth_examples() {
        assert_eq!(band_halfwidth(0.0, 1000, 0.1, Kernel::Epanechnikov).unwrap(), 0.0);
        let l = band_halfwidth(1.0, 1000, 0.1, Kernel::Epanechnikov).unwrap();
        // √(2 ln 10 / 100) · √0.6 = 0.1662258...
        assert!((l - 0.166226).abs() < 1e-6, "{l}");
        let l2 = band_halfwidth(1.0, 2000, 0.1, Kernel::Epanechnikov).unwrap();
        assert!((l2 - l / 2f64.sqrt()).abs() < 1e-14);
        assert!(band_halfwidth(1.0, 1000, 1.0, Kernel::Epanechnikov).is_err());
        assert!(band_halfwidth(1.0, 1000, 0.0, Kernel::Epanechnikov).is_err());
    }

    #[test]
    fn scaling_law_is_exact() {
        for &t in &[0.3, 1.0, 2.5, 7.0] {
            let a = band_halfwidth(4.0 * t, 500, 0.2, Kernel::Biweight).unwrap();
            let b = band_halfwidth(t, 500, 0.2, Kernel::Biweight).unwrap();
            assert_eq!(a, 2.0 * b);
        }
    }

    #[test]
    fn band_inflation() {
        let b = ConfidenceBand::from_halfwidths(0, vec![0.0, 1.0], vec![0.5, 0.6], vec![0.1, 0.2], 0.0).unwrap();
        let c = b.with_epsilon(0.1).unwrap();
        for i in 0..2 {
            assert!((c.halfwidth(i) - 1.1 * b.halfwidth(i)).abs() < 1e-15);
            assert!(c.lower(i) <= c.center[i] && c.center[i] <= c.upper(i));
        }
        let zero = ConfidenceBand::from_halfwidths(0, vec![0.0], vec![0.5], vec![0.0], 0.0).unwrap();
        assert_eq!(zero.lower(0), zero.upper(0));
        assert_eq!(zero.coverage(|_| 0.5, -1.0, 1.0), Some(1.0));
        assert_eq!(zero.coverage(|_| 0.6, -1.0, 1.0), Some(0.0));
    }

    #[test]
    fn sigma_constant_case() {
        let vm = VarianceModel::new(2, |_| Ok(1.0), |_| 0.25, |_, _| 0.5);
        let q = IntegrationDensities::uniform_cube(2, -1.0, 1.0).unwrap();
        let rep = vm.sigma(0, &q, Kernel::Epanechnikov, (-1.0, 1.0), 21, QConvention::Squared).unwrap();
        // φ/f₁ = ∫ q²/f du₂ = 2·0.25/0.25 = 2, σ² = 2·0.6
        assert!(rep.values.iter().all(|v| (v - 1.2f64.sqrt()).abs() < 1e-12));
        let single = vm.sigma(0, &q, Kernel::Epanechnikov, (-1.0, 1.0), 21, QConvention::Single).unwrap();
        assert!((single.sigma - 2.4f64.sqrt()).abs() < 1e-12);
        let zero = VarianceModel::new(2, |_| Ok(0.0), |_| 0.25, |_, _| 0.5);
        assert_eq!(zero.sigma(0, &q, Kernel::Epanechnikov, (-1.0, 1.0), 5, QConvention::Squared).unwrap().sigma, 0.0);
    }

    #[test]
    fn h_oracle_value() {
        let t = SimulationModel::reference(0).truth();
        let h = h_psi_oracle(&t, &[0.0, 0.0], t.model().psi()).unwrap();
        assert!((h - 1.791759).abs() < 1e-6);
    }

    #[test]
    fn tau_hat_vanishes_without_events() {
        let model = SimulationModel::reference(5);
        let s = model.generate_replication(200, 0).unwrap();
        let q = IntegrationDensities::uniform_cube(2, -1.0, 1.0).unwrap();
        let plan = crate::ipcw::BandwidthPlan::isotropic(2, 0.3).unwrap();
        let cfg = EstimatorConfig::standard(&s, plan, Kernel::Epanechnikov, PsiFunction::constant(0.0));
        assert_eq!(tau_hat_plugin(&s, 0, 0.0, &cfg, &q).unwrap(), 0.0);
    }
}
