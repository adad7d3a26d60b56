//! Marginal integration: additive components recovered by integrating a
//! full-dimensional regression surface against product densities `q = ∏ q_ℓ`.
//!
//! For a surface `m` and axis `ℓ`,
//!
//! ```text
//! η_ℓ(x_ℓ) = ∫ m(x) q_{-ℓ}(x_{-ℓ}) dx_{-ℓ} − ∫ m(x) q(x) dx
//! ```
//!
//! and the additive reconstruction is `Σ_ℓ η_ℓ(x_ℓ) + ∫ m q`. The same code computes
//! the estimated components (from an IPCW surface) and the true ones (from an
//! [`AdditiveFunction`]).

use std::cell::RefCell;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::fmt_f64;
use crate::error::{Error, Result};
use crate::quadrature::{tensor_quadrature, QuadratureRule};

/// Integration dimension above which the generic route switches to Monte Carlo.
pub const MAX_TENSOR_INTEGRATION_DIM: usize = 3;
const MC_POINTS: usize = 1 << 18;
const MC_SEED: u64 = 0x005e_ed0f_1a7e;

/// Agreement required between the two routes in [`true_eta`].
pub const ROUTE_TOLERANCE: f64 = 1e-8;

pub type ComponentFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `m(x) = c + Σ_ℓ m_ℓ(x_ℓ)`.
#[derive(Clone)]
pub struct AdditiveFunction {
    components: Vec<ComponentFn>,
    intercept: f64,
}

impl AdditiveFunction {
    pub fn new(components: Vec<ComponentFn>, intercept: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("an additive function needs at least one component"));
        }
        Ok(Self {
            components,
            intercept,
        })
    }

    pub fn from_fns<F>(fns: Vec<F>, intercept: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            fns.into_iter().map(|f| Arc::new(f) as ComponentFn).collect(),
            intercept,
        )
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    #[inline]
    pub fn component(&self, ell: usize, x: f64) -> f64 {
        (self.components[ell])(x)
    }

    pub fn component_fn(&self, ell: usize) -> ComponentFn {
        self.components[ell].clone()
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .components
                .iter()
                .zip(x)
                .map(|(m, &v)| m(v))
                .sum::<f64>()
    }
}

impl fmt::Debug for AdditiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdditiveFunction")
            .field("dim", &self.dim())
            .field("intercept", &self.intercept)
            .finish()
    }
}

/// Density `q_ℓ` on one axis with compact support.
#[derive(Clone)]
pub enum IntegrationDensity {
    Uniform { lo: f64, hi: f64 },
    Custom {
        lo: f64,
        hi: f64,
        f: ComponentFn,
    },
}

impl IntegrationDensity {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("empty support [{lo}, {hi}]")));
        }
        Ok(Self::Uniform { lo, hi })
    }

    /// Validates nonnegativity on a grid and normalization to `1e-9`.
    pub fn custom(lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("empty support [{lo}, {hi}]")));
        }
        let f: ComponentFn = Arc::new(f);
        if (0..=1000).any(|k| f(lo + (hi - lo) * k as f64 / 1000.0) < 0.0) {
            return Err(Error::invalid("integration density takes negative values"));
        }
        let mass = QuadratureRule::default().integrate(|x| f(x), lo, hi);
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "integration density integrates to {mass}, not 1"
            )));
        }
        Ok(Self::Custom { lo, hi, f })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            IntegrationDensity::Uniform { lo, hi } => {
                if *lo <= x && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            IntegrationDensity::Custom { lo, hi, f } => {
                if *lo <= x && x <= *hi {
                    f(x)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            IntegrationDensity::Uniform { lo, hi } | IntegrationDensity::Custom { lo, hi, .. } => {
                (*lo, *hi)
            }
        }
    }

    /// `∫ g(x) q(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        let (lo, hi) = self.support();
        QuadratureRule::default().integrate(|x| g(x) * self.eval(x), lo, hi)
    }
}

impl PartialEq for IntegrationDensity {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Uniform { lo: a, hi: b }, Self::Uniform { lo: c, hi: d }) => a == c && b == d,
            (Self::Custom { lo: a, hi: b, f }, Self::Custom { lo: c, hi: d, f: g }) => {
                a == c && b == d && Arc::ptr_eq(f, g)
            }
            _ => false,
        }
    }
}

impl fmt::Debug for IntegrationDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrationDensity::Uniform { lo, hi } => write!(f, "Uniform[{lo}, {hi}]"),
            IntegrationDensity::Custom { lo, hi, .. } => write!(f, "Custom[{lo}, {hi}]"),
        }
    }
}

/// The product density `q(x) = ∏ q_ℓ(x_ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationDensities {
    axes: Vec<IntegrationDensity>,
}

impl IntegrationDensities {
    pub fn new(axes: Vec<IntegrationDensity>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid("at least one integration density is required"));
        }
        Ok(Self { axes })
    }

    pub fn uniform_cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![IntegrationDensity::uniform(lo, hi)?; d])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, ell: usize) -> &IntegrationDensity {
        &self.axes[ell]
    }

    pub fn axes(&self) -> &[IntegrationDensity] {
        &self.axes
    }
}

/// A function on `ℝ^d` that can be integrated against `q`.
///
/// The provided integrals use tensor Gauss–Legendre quadrature over the `q` supports
/// (Monte Carlo above [`MAX_TENSOR_INTEGRATION_DIM`] dimensions). Implementors with
/// product structure override them with exact forms.
pub trait RegressionSurface: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<f64>;

    /// `∫ m(x) q_{-ℓ}(x_{-ℓ}) dx_{-ℓ}` at `x_ℓ`.
    fn partial_integral(&self, ell: usize, x_ell: f64, q: &IntegrationDensities) -> Result<f64> {
        quadrature_partial_integral(self, ell, x_ell, q, &QuadratureRule::default())
    }

    /// `∫ m(x) q(x) dx`.
    fn full_integral(&self, q: &IntegrationDensities) -> Result<f64> {
        quadrature_full_integral(self, q, &QuadratureRule::default())
    }
}

impl RegressionSurface for AdditiveFunction {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.value(x))
    }
}

/// A constant surface; the trivial stub for marginal integration.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSurface {
    pub dim: usize,
    pub value: f64,
}

impl RegressionSurface for ConstantSurface {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.value)
    }
}

fn check_dims<S: RegressionSurface + ?Sized>(surface: &S, q: &IntegrationDensities) -> Result<()> {
    if surface.dim() != q.dim() {
        return Err(Error::invalid(format!(
            "surface dimension {} does not match {} integration densities",
            surface.dim(),
            q.dim()
        )));
    }
    Ok(())
}

/// Integrates `g(x)·∏_{k∈axes} q_k(x_k)` over the supports of the listed axes, with the
/// remaining coordinates of `base` held fixed.
fn integrate_axes<G>(
    g: G,
    base: &[f64],
    axes: &[usize],
    q: &IntegrationDensities,
    rule: &QuadratureRule,
) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<f64>,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let scratch = RefCell::new(base.to_vec());
    let integrand = |u: &[f64]| -> f64 {
        if failure.borrow().is_some() {
            return 0.0;
        }
        let mut x = scratch.borrow_mut();
        let mut weight = 1.0;
        for (&k, &v) in axes.iter().zip(u) {
            x[k] = v;
            weight *= q.axis(k).eval(v);
        }
        if weight == 0.0 {
            return 0.0;
        }
        match g(&x) {
            Ok(v) => v * weight,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let bounds: Vec<(f64, f64)> = axes.iter().map(|&k| q.axis(k).support()).collect();
    let value = if axes.len() <= MAX_TENSOR_INTEGRATION_DIM {
        tensor_quadrature(integrand, &bounds, rule)?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(MC_SEED);
        let volume: f64 = bounds.iter().map(|(a, b)| b - a).product();
        let mut u = vec![0.0; bounds.len()];
        let mut acc = 0.0;
        for _ in 0..MC_POINTS {
            for (slot, (a, b)) in u.iter_mut().zip(&bounds) {
                *slot = a + (b - a) * rng.gen::<f64>();
            }
            acc += integrand(&u);
        }
        volume * acc / MC_POINTS as f64
    };
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Generic quadrature route for `∫ m(x) q_{-ℓ}(x_{-ℓ}) dx_{-ℓ}`.
pub fn quadrature_partial_integral<S: RegressionSurface + ?Sized>(
    surface: &S,
    ell: usize,
    x_ell: f64,
    q: &IntegrationDensities,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_dims(surface, q)?;
    let d = surface.dim();
    if ell >= d {
        return Err(Error::invalid(format!("axis {ell} out of range for d = {d}")));
    }
    let mut base = vec![0.0; d];
    base[ell] = x_ell;
    let axes: Vec<usize> = (0..d).filter(|&k| k != ell).collect();
    integrate_axes(|x| surface.eval(x), &base, &axes, q, rule)
}

/// Generic quadrature route for `∫ m(x) q(x) dx`.
pub fn quadrature_full_integral<S: RegressionSurface + ?Sized>(
    surface: &S,
    q: &IntegrationDensities,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_dims(surface, q)?;
    let d = surface.dim();
    let axes: Vec<usize> = (0..d).collect();
    integrate_axes(|x| surface.eval(x), &vec![0.0; d], &axes, q, rule)
}

/// `∫ m̃ q`, the constant term of the additive reconstruction.
pub fn mu_hat<S: RegressionSurface + ?Sized>(surface: &S, q: &IntegrationDensities) -> Result<f64> {
    surface.full_integral(q)
}

/// Estimated component `η̂_ℓ(x_ℓ)`. Use [`MarginalIntegrator`] when evaluating many
/// points so the constant term is computed once.
pub fn eta_hat<S: RegressionSurface + ?Sized>(
    surface: &S,
    ell: usize,
    x_ell: f64,
    q: &IntegrationDensities,
) -> Result<f64> {
    Ok(surface.partial_integral(ell, x_ell, q)? - surface.full_integral(q)?)
}

/// Component evaluation with the `∫ m̃ q` term cached.
pub struct MarginalIntegrator<'a, S: RegressionSurface + ?Sized> {
    surface: &'a S,
    q: &'a IntegrationDensities,
    mu: OnceLock<f64>,
}

impl<'a, S: RegressionSurface + ?Sized> MarginalIntegrator<'a, S> {
    pub fn new(surface: &'a S, q: &'a IntegrationDensities) -> Result<Self> {
        check_dims(surface, q)?;
        Ok(Self {
            surface,
            q,
            mu: OnceLock::new(),
        })
    }

    pub fn mu(&self) -> Result<f64> {
        if let Some(v) = self.mu.get() {
            return Ok(*v);
        }
        let v = self.surface.full_integral(self.q)?;
        Ok(*self.mu.get_or_init(|| v))
    }

    pub fn eta(&self, ell: usize, x_ell: f64) -> Result<f64> {
        let mu = self.mu()?;
        Ok(self.surface.partial_integral(ell, x_ell, self.q)? - mu)
    }
}

/// Evaluation grid for one component. Points closer than `edge_margin` to either end
/// of `[lo, hi]` are flagged as boundary points.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid {
    lo: f64,
    hi: f64,
    points: Vec<f64>,
    edge_margin: f64,
}

impl AxisGrid {
    pub fn uniform(lo: f64, hi: f64, size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid("grids need at least 2 points"));
        }
        if !(lo < hi) {
            return Err(Error::invalid(format!("empty grid range [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (size - 1) as f64;
        let points = (0..size)
            .map(|k| if k + 1 == size { hi } else { lo + step * k as f64 })
            .collect();
        Ok(Self {
            lo,
            hi,
            points,
            edge_margin: 0.0,
        })
    }

    pub fn with_edge_margin(mut self, margin: f64) -> Self {
        self.edge_margin = margin.max(0.0);
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        let x = self.points[i];
        // small slack so that e.g. 0.9 on a [-1, 1] grid with margin 0.1 stays interior
        let slack = 1e-12 * (self.hi - self.lo);
        x < self.lo + self.edge_margin - slack || x > self.hi - self.edge_margin + slack
    }
}

/// Per-component estimates on grids plus the constant `μ̂ = ∫ m̃ q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveFit {
    pub grids: Vec<AxisGrid>,
    pub eta: Vec<Vec<f64>>,
    pub mu: f64,
}

impl AdditiveFit {
    pub fn dim(&self) -> usize {
        self.grids.len()
    }

    /// `Σ_ℓ η̂_ℓ(grid_ℓ[idx_ℓ]) + μ̂`.
    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.mu
            + self
                .eta
                .iter()
                .zip(idx)
                .map(|(eta, &i)| eta[i])
                .sum::<f64>()
    }

    /// Linear interpolation of each component, clamped to the grid range.
    pub fn component_at(&self, ell: usize, x: f64) -> f64 {
        let pts = self.grids[ell].points();
        let eta = &self.eta[ell];
        if x <= pts[0] {
            return eta[0];
        }
        if x >= pts[pts.len() - 1] {
            return eta[eta.len() - 1];
        }
        let k = pts.partition_point(|&p| p <= x);
        let (x0, x1) = (pts[k - 1], pts[k]);
        let t = (x - x0) / (x1 - x0);
        eta[k - 1] * (1.0 - t) + eta[k] * t
    }

    pub fn interpolate(&self, x: &[f64]) -> f64 {
        self.mu
            + (0..self.dim())
                .map(|ell| self.component_at(ell, x[ell]))
                .sum::<f64>()
    }

    /// `ell,x,eta_hat` rows (axes numbered from 1) followed by a `mu_hat` record.
    pub fn write_csv_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "ell,x,eta_hat")?;
        for (ell, (grid, eta)) in self.grids.iter().zip(&self.eta).enumerate() {
            for (x, e) in grid.points().iter().zip(eta) {
                writeln!(w, "{},{},{}", ell + 1, fmt_f64(*x), fmt_f64(*e))?;
            }
        }
        writeln!(w, "mu_hat,,{}", fmt_f64(self.mu))?;
        w.flush()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io)?;
        self.write_csv_to(BufWriter::new(file)).map_err(io)
    }
}

/// Estimates every component on its grid. Grid points are evaluated in parallel.
pub fn fit_additive<S: RegressionSurface + ?Sized>(
    surface: &S,
    grids: &[AxisGrid],
    q: &IntegrationDensities,
) -> Result<AdditiveFit> {
    if grids.len() != surface.dim() {
        return Err(Error::invalid(format!(
            "{} grids supplied for a {}-dimensional surface",
            grids.len(),
            surface.dim()
        )));
    }
    let integrator = MarginalIntegrator::new(surface, q)?;
    let mu = integrator.mu()?;
    let eta = grids
        .iter()
        .enumerate()
        .map(|(ell, grid)| {
            grid.points()
                .par_iter()
                .map(|&x| integrator.eta(ell, x))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdditiveFit {
        grids: grids.to_vec(),
        eta,
        mu,
    })
}

/// True component `η_ℓ(x_ℓ)` of an additive function.
///
/// Computed twice, as `m_ℓ(x_ℓ) − ∫ m_ℓ q_ℓ` and as the marginal-integration double
/// integral of the full function; the two must agree to [`ROUTE_TOLERANCE`].
pub fn true_eta(
    m: &AdditiveFunction,
    ell: usize,
    x_ell: f64,
    q: &IntegrationDensities,
) -> Result<f64> {
    check_dims(m, q)?;
    if ell >= m.dim() {
        return Err(Error::invalid(format!("axis {ell} out of range")));
    }
    let component = m.component_fn(ell);
    let direct = component(x_ell) - q.axis(ell).integrate(|u| component(u));
    let rule = QuadratureRule::default();
    let via_integration = quadrature_partial_integral(m, ell, x_ell, q, &rule)?
        - quadrature_full_integral(m, q, &rule)?;
    if (direct - via_integration).abs() > ROUTE_TOLERANCE {
        return Err(Error::Consistency(format!(
            "component {} at {x_ell}: direct {direct} vs integrated {via_integration}",
            ell + 1
        )));
    }
    Ok(direct)
}
