//! Kernel density estimation, IPCW transforms and the internal IPCW regression
//! estimator `m̃*`.

use std::fmt;
use std::sync::{Arc, Mutex};

use crate::data::{CensoredObservation, CensoredSample, PsiFunction};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::marginal::{AdditiveFunction, IntegrationDensities, IntegrationDensity, RegressionSurface};
use crate::quadrature::{adaptive_integrate, QuadratureRule};
use crate::survival::{km_censoring_survival, SurvivalCurve};

const INVERSE_INTEGRAL_TOL: f64 = 1e-10;
const KNOWN_G_CHECK_UPPER: f64 = 10.0;
const KNOWN_G_CHECK_STEPS: usize = 1000;
/// Nodes used for the one-dimensional kernel-times-`q` integrals. Exact for the shipped
/// polynomial kernels against uniform `q`.
const J_NODES: usize = 24;

/// Power-law schedule `h = c · n^{-a}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub c: f64,
    pub a: f64,
}

impl PowerLaw {
    pub fn new(c: f64, a: f64) -> Result<Self> {
        if !(c > 0.0 && a > 0.0) || !c.is_finite() || !a.is_finite() {
            return Err(Error::invalid(format!("power law needs c > 0 and a > 0, got c={c}, a={a}")));
        }
        Ok(Self { c, a })
    }

    pub fn at(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(-self.a)
    }
}

/// Density bandwidth `h_n` plus one regression bandwidth `h_ℓ` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthPlan {
    h_density: f64,
    h_axis: Vec<f64>,
    schedule: Option<(PowerLaw, Vec<PowerLaw>, usize)>,
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("bandwidths must be positive and finite, got {h}")))
    }
}

impl BandwidthPlan {
    pub fn new(h_density: f64, h_axis: Vec<f64>) -> Result<Self> {
        check_bandwidth(h_density)?;
        if h_axis.is_empty() {
            return Err(Error::invalid("at least one axis bandwidth is required"));
        }
        for &h in &h_axis {
            check_bandwidth(h)?;
        }
        Ok(Self {
            h_density,
            h_axis,
            schedule: None,
        })
    }

    /// Every bandwidth equal to `h`.
    pub fn isotropic(d: usize, h: f64) -> Result<Self> {
        Self::new(h, vec![h; d])
    }

    /// Bandwidths bound to sample size `n` from power-law schedules.
    pub fn power_law(n: usize, density: PowerLaw, axes: Vec<PowerLaw>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n >= 1 required"));
        }
        let mut plan = Self::new(density.at(n), axes.iter().map(|p| p.at(n)).collect())?;
        plan.schedule = Some((density, axes, n));
        Ok(plan)
    }

    /// Rebinds a power-law plan to a new sample size. Fixed plans are returned unchanged.
    pub fn bind(&self, n: usize) -> Result<Self> {
        match &self.schedule {
            Some((dens, axes, _)) => Self::power_law(n, *dens, axes.clone()),
            None => Ok(self.clone()),
        }
    }

    pub fn schedule(&self) -> Option<(&PowerLaw, &[PowerLaw], usize)> {
        self.schedule.as_ref().map(|(a, b, n)| (a, b.as_slice(), *n))
    }

    pub fn h_density(&self) -> f64 {
        self.h_density
    }

    pub fn h_axis(&self) -> &[f64] {
        &self.h_axis
    }

    pub fn h(&self, ell: usize) -> f64 {
        self.h_axis[ell]
    }

    pub fn dim(&self) -> usize {
        self.h_axis.len()
    }

    /// Halves (or otherwise rescales) every bandwidth.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.h_density * factor,
            self.h_axis.iter().map(|h| h * factor).collect(),
        )
    }
}

pub type SurvivalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Censoring survival function used inside the weights.
#[derive(Clone)]
pub enum GModel {
    Estimated(SurvivalCurve),
    Known(SurvivalFn),
}

impl GModel {
    pub fn kaplan_meier(sample: &CensoredSample) -> Self {
        GModel::Estimated(km_censoring_survival(sample))
    }

    /// Analytic `G`, checked to lie in `[0, 1]` and be nonincreasing on a grid of `[0, 10]`.
    pub fn known(g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let mut prev = f64::INFINITY;
        for k in 0..=KNOWN_G_CHECK_STEPS {
            let t = KNOWN_G_CHECK_UPPER * k as f64 / KNOWN_G_CHECK_STEPS as f64;
            let v = g(t);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("G({t}) = {v} lies outside [0, 1]")));
            }
            if v > prev {
                return Err(Error::invalid(format!("G increases near t = {t}")));
            }
            prev = v;
        }
        Ok(GModel::Known(Arc::new(g)))
    }

    pub fn known_unchecked(g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        GModel::Known(Arc::new(g))
    }

    /// `G ≡ 1`: no censoring.
    pub fn one() -> Self {
        GModel::Estimated(SurvivalCurve::one())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            GModel::Estimated(c) => c.eval(t),
            GModel::Known(g) => g(t),
        }
    }

    /// `∫₀^z dt / G(t)`: exact for step functions, adaptive quadrature otherwise.
    pub fn integral_of_inverse(&self, z: f64) -> Result<f64> {
        match self {
            GModel::Estimated(c) => c.integral_of_inverse(z),
            GModel::Known(g) => {
                if z <= 0.0 {
                    return Ok(0.0);
                }
                if g(z) <= 0.0 {
                    // locate inf{t : G(t) = 0} by bisection
                    let (mut lo, mut hi) = (0.0, z);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if g(mid) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    return Err(Error::Divergence { t: hi });
                }
                Ok(adaptive_integrate(|t| 1.0 / g(t), 0.0, z, INVERSE_INTEGRAL_TOL))
            }
        }
    }
}

impl fmt::Debug for GModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GModel::Estimated(c) => write!(f, "Estimated({} jumps)", c.jump_times().len()),
            GModel::Known(_) => f.write_str("Known(<fn>)"),
        }
    }
}

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Covariate density used by the internal estimator.
#[derive(Clone)]
pub enum DensityModel {
    /// Kernel density estimate with the plan's `h_density` and the product of this kernel.
    Estimated(Kernel),
    Known(DensityFn),
}

impl DensityModel {
    pub fn known(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        DensityModel::Known(Arc::new(f))
    }
}

impl fmt::Debug for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityModel::Estimated(k) => write!(f, "Estimated({k})"),
            DensityModel::Known(_) => f.write_str("Known(<fn>)"),
        }
    }
}

/// Indices of `keys` (sorted ascending) lying in `[lo, hi]`.
#[inline]
fn window(keys: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
    let a = keys.partition_point(|&v| v < lo);
    let b = keys.partition_point(|&v| v <= hi);
    a..b.max(a)
}

/// Product-kernel density estimate `f̂(x) = (n h^d)⁻¹ Σ 𝕂((x − X_i)/h)`.
///
/// Points are stored sorted on the first axis so evaluation only visits the window
/// `|x₁ − X_{i1}| ≤ h`.
#[derive(Debug, Clone)]
pub struct KernelDensity {
    kernel: Kernel,
    h: f64,
    n: usize,
    d: usize,
    points: Vec<f64>,
    keys: Vec<f64>,
}

impl KernelDensity {
    pub fn new(sample: &CensoredSample, kernel: Kernel, h: f64) -> Result<Self> {
        check_bandwidth(h)?;
        Ok(Self::from_points(sample.iter().map(|o| o.x.as_slice()), sample.dim(), kernel, h))
    }

    fn from_points<'a>(xs: impl Iterator<Item = &'a [f64]>, d: usize, kernel: Kernel, h: f64) -> Self {
        let mut rows: Vec<&[f64]> = xs.collect();
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let n = rows.len();
        let keys = rows.iter().map(|r| r[0]).collect();
        let points = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self {
            kernel,
            h,
            n,
            d,
            points,
            keys,
        }
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let h = self.h;
        let mut acc = 0.0;
        for i in window(&self.keys, x[0] - h, x[0] + h) {
            let row = &self.points[i * self.d..(i + 1) * self.d];
            let mut prod = 1.0;
            for (&xv, &pv) in x.iter().zip(row) {
                prod *= self.kernel.eval((xv - pv) / h);
                if prod == 0.0 {
                    break;
                }
            }
            acc += prod;
        }
        acc / (self.n as f64 * h.powi(self.d as i32))
    }
}

/// `f̂_n(x)` for a single point.
pub fn kde(sample: &CensoredSample, x: &[f64], plan: &BandwidthPlan, kernel: Kernel) -> Result<f64> {
    if x.len() != sample.dim() {
        return Err(Error::invalid(format!(
            "point has dimension {}, sample has {}",
            x.len(),
            sample.dim()
        )));
    }
    Ok(KernelDensity::new(sample, kernel, plan.h_density())?.eval(x))
}

/// `δ ψ(Z) / G(Z)`, with `G` evaluated right-continuously at `Z`. Observations where
/// `G(Z) = 0` get weight 0 and a warning.
pub fn ipcw_weight(obs: &CensoredObservation, psi: &PsiFunction, g: &GModel) -> f64 {
    if !obs.delta {
        return 0.0;
    }
    let gz = g.eval(obs.z);
    if gz <= 0.0 {
        log::warn!("G vanishes at Z = {}; IPCW weight set to 0", obs.z);
        return 0.0;
    }
    psi.eval(obs.z) / gz
}

/// Synthetic response `δ Θ₁(Z) + (1 − δ) Θ₂(Z)` with
/// `Θ₂(z) = (1 + ρ) ∫₀^z dt/G` and `Θ₁(z) = Θ₂(z) − ρ z / G(z)`.
///
/// `ρ = −1` gives the IPCW weight with `ψ` the identity, bit for bit.
pub fn synthetic_transform(obs: &CensoredObservation, g: &GModel, rho: f64) -> Result<f64> {
    if rho == -1.0 {
        return Ok(ipcw_weight(obs, &PsiFunction::Identity, g));
    }
    let theta2 = (1.0 + rho) * g.integral_of_inverse(obs.z)?;
    if !obs.delta || rho == 0.0 {
        return Ok(theta2);
    }
    let gz = g.eval(obs.z);
    if gz <= 0.0 {
        return Err(Error::Divergence { t: obs.z });
    }
    Ok(theta2 - rho * obs.z / gz)
}

/// Synthetic responses for a whole sample. Warns when some uncensored `Θ₁(Z) ≤ 0`,
/// which the transform's unbiasedness argument excludes.
pub fn synthetic_responses(sample: &CensoredSample, g: &GModel, rho: f64) -> Result<Vec<f64>> {
    let out: Vec<f64> = sample
        .iter()
        .map(|o| synthetic_transform(o, g, rho))
        .collect::<Result<_>>()?;
    let nonpositive = sample
        .iter()
        .zip(&out)
        .filter(|(o, &v)| o.delta && v <= 0.0)
        .count();
    if nonpositive > 0 {
        log::warn!("rho = {rho}: {nonpositive} uncensored synthetic responses are not positive");
    }
    Ok(out)
}

/// Everything the internal estimator needs besides the sample.
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub plan: BandwidthPlan,
    pub kernels: Vec<Kernel>,
    pub psi: PsiFunction,
    pub g: GModel,
    pub density: DensityModel,
}

impl EstimatorConfig {
    /// Same kernel on every axis, Kaplan–Meier `G`, kernel density estimate with that kernel.
    pub fn standard(sample: &CensoredSample, plan: BandwidthPlan, kernel: Kernel, psi: PsiFunction) -> Self {
        let d = plan.dim();
        Self {
            plan,
            kernels: vec![kernel; d],
            psi,
            g: GModel::kaplan_meier(sample),
            density: DensityModel::Estimated(kernel),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.plan.dim() != d || self.kernels.len() != d {
            return Err(Error::invalid(format!(
                "configuration has {} bandwidths and {} kernels for d = {d}",
                self.plan.dim(),
                self.kernels.len()
            )));
        }
        Ok(())
    }
}

/// `J(v) = ∫ K_h(x − v) q(x) dx` restricted to the support of `q`.
fn kernel_against_q(k: Kernel, h: f64, v: f64, q: &IntegrationDensity, rule: &QuadratureRule) -> f64 {
    let (lo, hi) = q.support();
    let a = lo.max(v - h);
    let b = hi.min(v + h);
    if a >= b {
        return 0.0;
    }
    rule.integrate(|x| k.scaled(x, v, h) * q.eval(x), a, b)
}

struct JCache {
    q: IntegrationDensities,
    /// For axis `ℓ`, in the axis-`ℓ` sort order: `c_i ∏_{j≠ℓ} J_j(X_ij)`.
    partial: Vec<Vec<f64>>,
    /// Same order: observation has an unusable density and a nonzero factor.
    partial_bad: Vec<Vec<bool>>,
    full: Result<f64>,
}

/// The internal IPCW kernel estimator
/// `m̃*(x) = n⁻¹ Σ [w_i / f(X_i)] ∏_ℓ K_{h_ℓ}(x_ℓ − X_{iℓ})` with `w_i = δ_i ψ(Z_i)/G(Z_i)`.
///
/// Integrals against product densities factorize over the kernel product, so
/// [`RegressionSurface::partial_integral`] and [`RegressionSurface::full_integral`] are
/// computed from one-dimensional kernel integrals, cached per `q`.
pub struct IpcwEstimator {
    n: usize,
    d: usize,
    kernels: Vec<Kernel>,
    h: Vec<f64>,
    /// Contributing observations only (nonzero weight), row-major.
    x: Vec<f64>,
    coef: Vec<f64>,
    bad: Vec<bool>,
    /// Per axis: sorted coordinates and the matching row indices.
    sorted: Vec<(Vec<f64>, Vec<usize>)>,
    cache: Mutex<Option<Arc<JCache>>>,
}

impl IpcwEstimator {
    pub fn new(sample: &CensoredSample, cfg: &EstimatorConfig) -> Result<Self> {
        let d = sample.dim();
        cfg.validate(d)?;
        let n = sample.len();
        let kde = match &cfg.density {
            DensityModel::Estimated(k) => Some(KernelDensity::new(sample, *k, cfg.plan.h_density())?),
            DensityModel::Known(_) => None,
        };
        let mut x = Vec::new();
        let mut coef = Vec::new();
        let mut bad = Vec::new();
        for o in sample.iter() {
            let w = ipcw_weight(o, &cfg.psi, &cfg.g);
            if w == 0.0 {
                continue;
            }
            let f = match (&kde, &cfg.density) {
                (Some(k), _) => k.eval(&o.x),
                (None, DensityModel::Known(f)) => f(&o.x),
                (None, DensityModel::Estimated(_)) => unreachable!(),
            };
            x.extend_from_slice(&o.x);
            if f > 0.0 && f.is_finite() {
                coef.push(w / f);
                bad.push(false);
            } else {
                coef.push(0.0);
                bad.push(true);
            }
        }
        let m = coef.len();
        let sorted = (0..d)
            .map(|ell| {
                let mut idx: Vec<usize> = (0..m).collect();
                idx.sort_by(|&a, &b| x[a * d + ell].total_cmp(&x[b * d + ell]));
                let keys = idx.iter().map(|&i| x[i * d + ell]).collect();
                (keys, idx)
            })
            .collect();
        Ok(Self {
            n,
            d,
            kernels: cfg.kernels.clone(),
            h: cfg.plan.h_axis().to_vec(),
            x,
            coef,
            bad,
            sorted,
            cache: Mutex::new(None),
        })
    }

    /// Number of observations with a nonzero IPCW weight.
    pub fn contributing(&self) -> usize {
        self.coef.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    fn degenerate(&self, i: usize) -> Error {
        Error::DegenerateDensity(format!(
            "covariate density is not positive at X = {:?}, which carries nonzero weight",
            self.row(i)
        ))
    }

    fn j_cache(&self, q: &IntegrationDensities) -> Result<Arc<JCache>> {
        if q.dim() != self.d {
            return Err(Error::invalid(format!(
                "{} integration densities for d = {}",
                q.dim(),
                self.d
            )));
        }
        let mut guard = self.cache.lock().expect("cache lock");
        if let Some(c) = guard.as_ref() {
            if c.q == *q {
                return Ok(Arc::clone(c));
            }
        }
        let rule = QuadratureRule::gauss_legendre(J_NODES);
        let m = self.coef.len();
        let d = self.d;
        let mut j = vec![0.0; m * d];
        for i in 0..m {
            for k in 0..d {
                j[i * d + k] = kernel_against_q(self.kernels[k], self.h[k], self.x[i * d + k], q.axis(k), &rule);
            }
        }
        let mut partial = Vec::with_capacity(d);
        let mut partial_bad = Vec::with_capacity(d);
        for ell in 0..d {
            let idx = &self.sorted[ell].1;
            let mut w = Vec::with_capacity(m);
            let mut b = Vec::with_capacity(m);
            for &i in idx {
                let prod: f64 = (0..d).filter(|&k| k != ell).map(|k| j[i * d + k]).product();
                w.push(self.coef[i] * prod);
                b.push(self.bad[i] && prod != 0.0);
            }
            partial.push(w);
            partial_bad.push(b);
        }
        let mut full = Ok(0.0);
        let mut acc = 0.0;
        for i in 0..m {
            let prod: f64 = j[i * d..(i + 1) * d].iter().product();
            if self.bad[i] && prod != 0.0 {
                full = Err(self.degenerate(i));
                break;
            }
            acc += self.coef[i] * prod;
        }
        let full = full.map(|_| acc / self.n as f64);
        let cache = Arc::new(JCache {
            q: q.clone(),
            partial,
            partial_bad,
            full,
        });
        *guard = Some(Arc::clone(&cache));
        Ok(cache)
    }
}

impl RegressionSurface for IpcwEstimator {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::invalid(format!("point has dimension {}, expected {}", x.len(), self.d)));
        }
        let (keys, idx) = &self.sorted[0];
        let mut acc = 0.0;
        for &i in &idx[window(keys, x[0] - self.h[0], x[0] + self.h[0])] {
            let row = self.row(i);
            let mut prod = 1.0;
            for k in 0..self.d {
                prod *= self.kernels[k].scaled(x[k], row[k], self.h[k]);
                if prod == 0.0 {
                    break;
                }
            }
            if prod != 0.0 {
                if self.bad[i] {
                    return Err(self.degenerate(i));
                }
                acc += self.coef[i] * prod;
            }
        }
        Ok(acc / self.n as f64)
    }

    fn partial_integral(&self, ell: usize, x_ell: f64, q: &IntegrationDensities) -> Result<f64> {
        if ell >= self.d {
            return Err(Error::invalid(format!("axis {ell} out of range for d = {}", self.d)));
        }
        let cache = self.j_cache(q)?;
        let (keys, idx) = &self.sorted[ell];
        let (k, h) = (self.kernels[ell], self.h[ell]);
        let mut acc = 0.0;
        for pos in window(keys, x_ell - h, x_ell + h) {
            let kv = k.scaled(x_ell, keys[pos], h);
            if kv == 0.0 {
                continue;
            }
            if cache.partial_bad[ell][pos] {
                return Err(self.degenerate(idx[pos]));
            }
            acc += kv * cache.partial[ell][pos];
        }
        Ok(acc / self.n as f64)
    }

    fn full_integral(&self, q: &IntegrationDensities) -> Result<f64> {
        match &self.j_cache(q)?.full {
            Ok(v) => Ok(*v),
            Err(Error::DegenerateDensity(msg)) => Err(Error::DegenerateDensity(msg.clone())),
            Err(e) => Err(Error::Consistency(e.to_string())),
        }
    }
}

/// `m̃*(x)` for a single point.
pub fn m_tilde_star(sample: &CensoredSample, x: &[f64], cfg: &EstimatorConfig) -> Result<f64> {
    IpcwEstimator::new(sample, cfg)?.eval(x)
}

/// Expectation of `m̃*` when `G` and `f` are known and `m_ψ` is additive:
/// `E m̃*(x) = ∫_S m_ψ(u) ∏_ℓ K_{h_ℓ}(x_ℓ − u_ℓ) du` over the covariate support `S`.
///
/// Everything factorizes over axes, so values and marginal integrals reduce to
/// one-dimensional quadratures.
pub struct SmoothedTruth {
    m: AdditiveFunction,
    support: Vec<(f64, f64)>,
    kernels: Vec<Kernel>,
    h: Vec<f64>,
    rule: QuadratureRule,
}

impl SmoothedTruth {
    pub fn new(m: AdditiveFunction, support: Vec<(f64, f64)>, kernels: Vec<Kernel>, plan: &BandwidthPlan) -> Result<Self> {
        let d = m.dim();
        if support.len() != d || kernels.len() != d || plan.dim() != d {
            return Err(Error::invalid("support, kernels and bandwidths must match the dimension"));
        }
        Ok(Self {
            m,
            support,
            kernels,
            h: plan.h_axis().to_vec(),
            rule: QuadratureRule::composite(16, 8),
        })
    }

    /// `∫ g(u) K_h(x − u) du` over the support of axis `k`.
    fn smooth<G: Fn(f64) -> f64>(&self, k: usize, x: f64, g: G) -> f64 {
        let (lo, hi) = self.support[k];
        let h = self.h[k];
        let (a, b) = (lo.max(x - h), hi.min(x + h));
        if a >= b {
            return 0.0;
        }
        self.rule.integrate(|u| g(u) * self.kernels[k].scaled(x, u, h), a, b)
    }

    /// `(∫ m_k(u) A_k(u) du, ∫ A_k(u) du)` for the per-axis weight `A_k`.
    fn axis_pair<A: Fn(f64) -> f64>(&self, k: usize, a: A, breaks: &[f64]) -> (f64, f64) {
        let (lo, hi) = self.support[k];
        let mk = self.m.component_fn(k);
        let with_m = self.rule.integrate_piecewise(|u| mk(u) * a(u), lo, hi, breaks);
        let plain = self.rule.integrate_piecewise(&a, lo, hi, breaks);
        (with_m, plain)
    }

    fn combine(&self, pairs: &[(f64, f64)]) -> f64 {
        let mut total = self.m.intercept() * pairs.iter().map(|p| p.1).product::<f64>();
        for k in 0..pairs.len() {
            let others: f64 = (0..pairs.len()).filter(|&j| j != k).map(|j| pairs[j].1).product();
            total += pairs[k].0 * others;
        }
        total
    }

    fn j(&self, k: usize, u: f64, q: &IntegrationDensity) -> f64 {
        kernel_against_q(self.kernels[k], self.h[k], u, q, &QuadratureRule::gauss_legendre(J_NODES))
    }

    fn q_breaks(&self, k: usize, q: &IntegrationDensity) -> Vec<f64> {
        let (a, b) = q.support();
        let h = self.h[k];
        vec![a - h, a, a + h, b - h, b, b + h]
    }
}

impl RegressionSurface for SmoothedTruth {
    fn dim(&self) -> usize {
        self.m.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        let pairs: Vec<(f64, f64)> = (0..self.dim())
            .map(|k| {
                let mk = self.m.component_fn(k);
                (self.smooth(k, x[k], |u| mk(u)), self.smooth(k, x[k], |_| 1.0))
            })
            .collect();
        Ok(self.combine(&pairs))
    }

    fn partial_integral(&self, ell: usize, x_ell: f64, q: &IntegrationDensities) -> Result<f64> {
        let pairs: Vec<(f64, f64)> = (0..self.dim())
            .map(|k| {
                if k == ell {
                    let mk = self.m.component_fn(k);
                    (self.smooth(k, x_ell, |u| mk(u)), self.smooth(k, x_ell, |_| 1.0))
                } else {
                    let qk = q.axis(k);
                    self.axis_pair(k, |u| self.j(k, u, qk), &self.q_breaks(k, qk))
                }
            })
            .collect();
        Ok(self.combine(&pairs))
    }

    fn full_integral(&self, q: &IntegrationDensities) -> Result<f64> {
        let pairs: Vec<(f64, f64)> = (0..self.dim())
            .map(|k| {
                let qk = q.axis(k);
                self.axis_pair(k, |u| self.j(k, u, qk), &self.q_breaks(k, qk))
            })
            .collect();
        Ok(self.combine(&pairs))
    }
}
