//! Replicated fits on simulated data and band coverage summaries.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::bands::{component_band, ConfidenceBand, TauForm, TauHatPlugin};
use crate::data::{empirical_censoring_rate, fmt_f64, CensoredSample};
use crate::error::{Error, Result};
use crate::ipcw::{BandwidthPlan, DensityModel, EstimatorConfig, GModel, IpcwEstimator};
use crate::kernels::Kernel;
use crate::marginal::{fit_additive, AdditiveFit, AxisGrid, IntegrationDensities};
use crate::simulation::{SimulationModel, SimulationTruth};

/// One simulation setup: design, estimator settings and evaluation grids.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub model: SimulationModel,
    pub n: usize,
    pub plan: BandwidthPlan,
    pub kernel: Kernel,
    pub density_kernel: Kernel,
    pub q: IntegrationDensities,
    pub grids: Vec<AxisGrid>,
    /// Coverage is assessed on grid points inside this interval.
    pub interior: (f64, f64),
    /// Use the true `G` instead of Kaplan–Meier.
    pub known_g: bool,
    /// Use the true covariate density instead of the kernel estimate.
    pub known_f: bool,
    pub tau_form: TauForm,
}

impl StudyConfig {
    /// `n = 1000`, `h = 0.1`, Epanechnikov kernels, `q = 0.5·1[-1,1]`, 201-point grids on
    /// `[-1, 1]` with the outer `0.1` flagged, coverage on `[-0.9, 0.9]`.
    pub fn reference(seed: u64) -> Self {
        let d = 2;
        Self {
            model: SimulationModel::reference(seed),
            n: 1000,
            plan: BandwidthPlan::isotropic(d, 0.1).expect("positive bandwidth"),
            kernel: Kernel::Epanechnikov,
            density_kernel: Kernel::Epanechnikov,
            q: IntegrationDensities::uniform_cube(d, -1.0, 1.0).expect("valid support"),
            grids: vec![
                AxisGrid::uniform(-1.0, 1.0, 201)
                    .expect("valid grid")
                    .with_edge_margin(0.1);
                d
            ],
            interior: (-0.9, 0.9),
            known_g: false,
            known_f: false,
            tau_form: TauForm::Printed,
        }
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.plan.dim() != d || self.q.dim() != d || self.grids.len() != d {
            return Err(Error::invalid(format!(
                "bandwidths, integration densities and grids must all have dimension {d}"
            )));
        }
        if self.n == 0 {
            return Err(Error::invalid("n >= 1 required"));
        }
        Ok(())
    }

    pub fn estimator_config(&self, sample: &CensoredSample, truth: &SimulationTruth) -> EstimatorConfig {
        let g = if self.known_g {
            truth.g_model()
        } else {
            GModel::kaplan_meier(sample)
        };
        let density = if self.known_f {
            let t = truth.clone();
            DensityModel::known(move |x| t.f(x))
        } else {
            DensityModel::Estimated(self.density_kernel)
        };
        EstimatorConfig {
            plan: self.plan.clone(),
            kernels: vec![self.kernel; self.dim()],
            psi: self.model.psi().clone(),
            g,
            density,
        }
    }

    /// True components on the evaluation grids.
    pub fn true_components(&self) -> Result<Vec<Vec<f64>>> {
        let truth = self.model.truth();
        self.grids
            .iter()
            .enumerate()
            .map(|(ell, g)| g.points().iter().map(|&x| truth.eta(ell, x, &self.q)).collect())
            .collect()
    }
}

/// A fitted replication with uninflated bands.
#[derive(Debug, Clone)]
pub struct Replication {
    pub rep: u64,
    pub sample: CensoredSample,
    pub fit: AdditiveFit,
    pub bands: Vec<ConfidenceBand>,
}

impl Replication {
    pub fn censoring_rate(&self) -> f64 {
        empirical_censoring_rate(&self.sample)
    }
}

/// Fits the estimator on replication `rep` of the design without computing bands.
pub fn fit_replication(cfg: &StudyConfig, rep: u64) -> Result<(CensoredSample, AdditiveFit)> {
    cfg.validate()?;
    let sample = cfg.model.generate_replication(cfg.n, rep)?;
    let truth = cfg.model.truth();
    let ecfg = cfg.estimator_config(&sample, &truth);
    let est = IpcwEstimator::new(&sample, &ecfg)?;
    let fit = fit_additive(&est, &cfg.grids, &cfg.q)?;
    Ok((sample, fit))
}

/// Fit plus bands for replication `rep`.
pub fn run_replication(cfg: &StudyConfig, rep: u64) -> Result<Replication> {
    let (sample, fit) = fit_replication(cfg, rep)?;
    let truth = cfg.model.truth();
    let ecfg = cfg.estimator_config(&sample, &truth);
    let plugin = TauHatPlugin::new(&sample, &ecfg, &cfg.q)?.with_form(cfg.tau_form);
    let bands = (0..cfg.dim())
        .map(|ell| component_band(&fit, ell, &plugin, 0.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(Replication {
        rep,
        sample,
        fit,
        bands,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub rep: u64,
    pub epsilon: f64,
    /// Interior coverage per component.
    pub per_axis: Vec<f64>,
    /// Interior coverage pooled over all components.
    pub pooled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTable {
    pub epsilons: Vec<f64>,
    pub rows: Vec<CoverageRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSummary {
    pub epsilon: f64,
    pub replications: usize,
    pub mean: f64,
    pub min: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl CoverageTable {
    pub fn pooled(&self, epsilon: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.epsilon == epsilon)
            .map(|r| r.pooled)
            .collect()
    }

    /// Replications whose pooled coverage is at least `threshold`.
    pub fn count_at_least(&self, epsilon: f64, threshold: f64) -> usize {
        self.pooled(epsilon).iter().filter(|&&c| c >= threshold).count()
    }

    pub fn summary(&self, epsilon: f64) -> Option<CoverageSummary> {
        let mut v = self.pooled(epsilon);
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(CoverageSummary {
            epsilon,
            replications: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v[0],
            q10: quantile(&v, 0.1),
            median: quantile(&v, 0.5),
            q90: quantile(&v, 0.9),
            max: v[v.len() - 1],
        })
    }

    /// `rep,epsilon,ell,coverage`, where `ell = all` is the pooled value.
    pub fn write_csv_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rep,epsilon,ell,coverage")?;
        for r in &self.rows {
            let eps = fmt_f64(r.epsilon);
            for (ell, c) in r.per_axis.iter().enumerate() {
                writeln!(w, "{},{},{},{}", r.rep, eps, ell + 1, fmt_f64(*c))?;
            }
            writeln!(w, "{},{},all,{}", r.rep, eps, fmt_f64(r.pooled))?;
        }
        w.flush()
    }
}

impl fmt::Display for CoverageSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epsilon={} reps={} mean={:.4} min={:.4} q10={:.4} median={:.4} q90={:.4} max={:.4}",
            self.epsilon, self.replications, self.mean, self.min, self.q10, self.median, self.q90, self.max
        )
    }
}

/// Interior coverage of each band, per axis and pooled.
pub fn band_coverage(bands: &[ConfidenceBand], truth: &[Vec<f64>], interior: (f64, f64)) -> (Vec<f64>, f64) {
    let (a, b) = interior;
    let mut per_axis = Vec::with_capacity(bands.len());
    let (mut hits, mut total) = (0usize, 0usize);
    for (band, t) in bands.iter().zip(truth) {
        let (mut h, mut n) = (0usize, 0usize);
        for i in 0..band.len() {
            let x = band.grid[i];
            if x < a - 1e-12 || x > b + 1e-12 {
                continue;
            }
            n += 1;
            if band.lower(i) <= t[i] && t[i] <= band.upper(i) {
                h += 1;
            }
        }
        per_axis.push(if n > 0 { h as f64 / n as f64 } else { f64::NAN });
        hits += h;
        total += n;
    }
    let pooled = if total > 0 { hits as f64 / total as f64 } else { f64::NAN };
    (per_axis, pooled)
}

/// Runs `replications` fits in parallel (replication `r` uses stream `seed ⊕ r`) and
/// records interior coverage for each inflation factor.
pub fn run_coverage(cfg: &StudyConfig, replications: u64, epsilons: &[f64]) -> Result<CoverageTable> {
    if epsilons.is_empty() {
        return Err(Error::invalid("at least one inflation factor is required"));
    }
    let truth = cfg.true_components()?;
    let per_rep = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let r = run_replication(cfg, rep)?;
            epsilons
                .iter()
                .map(|&eps| {
                    let bands = r
                        .bands
                        .iter()
                        .map(|b| b.with_epsilon(eps))
                        .collect::<Result<Vec<_>>>()?;
                    let (per_axis, pooled) = band_coverage(&bands, &truth, cfg.interior);
                    Ok(CoverageRow {
                        rep,
                        epsilon: eps,
                        per_axis,
                        pooled,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageTable {
        epsilons: epsilons.to_vec(),
        rows: per_rep.into_iter().flatten().collect(),
    })
}
