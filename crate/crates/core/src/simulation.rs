//! Simulation design with known ground truth.
//!
//! Covariates are i.i.d. `U(-1, 1)` per axis, `p(x) = Σ m_ℓ(x_ℓ)`, the response is
//! `Y | X = x ~ U(t₀ − p(x), t₀ − p(x) + 1)` so that `P(Y ≤ t₀ | X = x) = p(x)`, and the
//! censoring time is `C ~ U(0, c)` independent of everything else. The reference
//! configuration uses `m₁ = 0.5 cos²`, `m₂ = 0.5 sin²`, `t₀ = 0.9`, `c = 1` and
//! `ψ = 1{· ≤ 0.9}`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{CensoredObservation, CensoredSample, PsiFunction};
use crate::error::{Error, Result};
use crate::ipcw::GModel;
use crate::marginal::{true_eta, AdditiveFunction, IntegrationDensities};
use crate::quadrature::{adaptive_integrate_piecewise, tensor_quadrature, QuadratureRule};

const COVARIATE_LO: f64 = -1.0;
const COVARIATE_HI: f64 = 1.0;
const TRUTH_TOL: f64 = 1e-11;

/// Random stream for replication `rep` of a study seeded with `seed`.
pub fn substream(seed: u64, rep: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ rep)
}

#[derive(Debug, Clone)]
pub struct SimulationModel {
    components: AdditiveFunction,
    threshold: f64,
    censor_upper: f64,
    psi: PsiFunction,
    pub seed: u64,
}

impl SimulationModel {
    pub fn new(
        components: AdditiveFunction,
        threshold: f64,
        censor_upper: f64,
        psi: PsiFunction,
        seed: u64,
    ) -> Result<Self> {
        if components.dim() < 2 {
            return Err(Error::invalid("the simulation design needs d >= 2"));
        }
        if !(censor_upper > 0.0) || !censor_upper.is_finite() {
            return Err(Error::invalid("censoring upper bound must be positive"));
        }
        let model = Self {
            components,
            threshold,
            censor_upper,
            psi,
            seed,
        };
        let (lo, hi) = model.p_range();
        if !(lo > 0.0 && hi < 1.0) {
            return Err(Error::invalid(format!(
                "p(x) must lie in (0, 1) on the covariate support, found range [{lo}, {hi}]"
            )));
        }
        if threshold - hi < 0.0 {
            return Err(Error::invalid("responses must be nonnegative: need t0 >= max p"));
        }
        Ok(model)
    }

    /// `m₁ = 0.5 cos²`, `m₂ = 0.5 sin²`, `t₀ = 0.9`, `C ~ U(0, 1)`, `ψ = 1{· ≤ 0.9}`.
    pub fn reference(seed: u64) -> Self {
        Self::new(
            reference_components(),
            0.9,
            1.0,
            PsiFunction::Indicator { t: 0.9 },
            seed,
        )
        .expect("reference design satisfies its invariants")
    }

    pub fn with_censor_upper(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::invalid("censoring upper bound must be positive"));
        }
        self.censor_upper = c;
        Ok(self)
    }

    pub fn with_psi(mut self, psi: PsiFunction) -> Self {
        self.psi = psi;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.components.dim()
    }

    pub fn psi(&self) -> &PsiFunction {
        &self.psi
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn censor_upper(&self) -> f64 {
        self.censor_upper
    }

    pub fn components(&self) -> &AdditiveFunction {
        &self.components
    }

    #[inline]
    pub fn p(&self, x: &[f64]) -> f64 {
        self.components.value(x)
    }

    /// `[min p, max p]` over `[-1, 1]^d`; the design is additive so the extremes are
    /// sums of per-component extremes, located on a fine grid.
    pub fn p_range(&self) -> (f64, f64) {
        let steps = 200_000;
        let mut lo = self.components.intercept();
        let mut hi = lo;
        for ell in 0..self.dim() {
            let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..=steps {
                let x = COVARIATE_LO + (COVARIATE_HI - COVARIATE_LO) * k as f64 / steps as f64;
                let v = self.components.component(ell, x);
                mn = mn.min(v);
                mx = mx.max(v);
            }
            lo += mn;
            hi += mx;
        }
        (lo, hi)
    }

    /// Replication `rep` of a sample of size `n`; stream `seed ⊕ rep`.
    pub fn generate_replication(&self, n: usize, rep: u64) -> Result<CensoredSample> {
        if n == 0 {
            return Err(Error::invalid("n >= 1 required"));
        }
        let d = self.dim();
        let mut rng = substream(self.seed, rep);
        let mut observations = Vec::with_capacity(n);
        for _ in 0..n {
            let x: Vec<f64> = (0..d)
                .map(|_| COVARIATE_LO + (COVARIATE_HI - COVARIATE_LO) * rng.gen::<f64>())
                .collect();
            let lower = self.threshold - self.p(&x);
            let y = lower + rng.gen::<f64>();
            let c = self.censor_upper * rng.gen::<f64>();
            let delta = y <= c;
            observations.push(CensoredObservation {
                z: y.min(c),
                delta,
                x,
            });
        }
        CensoredSample::new(observations, d)
    }

    pub fn truth(&self) -> SimulationTruth {
        SimulationTruth {
            model: self.clone(),
        }
    }
}

pub fn reference_components() -> AdditiveFunction {
    AdditiveFunction::new(
        vec![
            Arc::new(|x: f64| 0.5 * x.cos().powi(2)),
            Arc::new(|x: f64| 0.5 * x.sin().powi(2)),
        ],
        0.0,
    )
    .expect("two components")
}

/// Draws a sample from `model` with its own seed (replication 0) and returns the truth.
pub fn generate_simulation(model: &SimulationModel, n: usize) -> Result<(CensoredSample, SimulationTruth)> {
    Ok((model.generate_replication(n, 0)?, model.truth()))
}

/// Closed-form and quadrature access to the population quantities of a
/// [`SimulationModel`].
#[derive(Debug, Clone)]
pub struct SimulationTruth {
    model: SimulationModel,
}

impl SimulationTruth {
    pub fn model(&self) -> &SimulationModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Lower end of the conditional response support at `x`.
    #[inline]
    pub fn response_lower(&self, x: &[f64]) -> f64 {
        self.model.threshold - self.model.p(x)
    }

    /// Censoring survival `G(t) = P(C > t)`.
    #[inline]
    pub fn g(&self, t: f64) -> f64 {
        let c = self.model.censor_upper;
        if t < 0.0 {
            1.0
        } else if t >= c {
            0.0
        } else {
            1.0 - t / c
        }
    }

    pub fn g_model(&self) -> GModel {
        let c = self.model.censor_upper;
        GModel::known_unchecked(move |t| {
            if t < 0.0 {
                1.0
            } else if t >= c {
                0.0
            } else {
                1.0 - t / c
            }
        })
    }

    /// Joint covariate density.
    #[inline]
    pub fn f(&self, x: &[f64]) -> f64 {
        if x.iter().all(|&v| (COVARIATE_LO..=COVARIATE_HI).contains(&v)) {
            (1.0 / (COVARIATE_HI - COVARIATE_LO)).powi(x.len() as i32)
        } else {
            0.0
        }
    }

    /// Marginal covariate density of any axis.
    #[inline]
    pub fn f_marginal(&self, x: f64) -> f64 {
        if (COVARIATE_LO..=COVARIATE_HI).contains(&x) {
            1.0 / (COVARIATE_HI - COVARIATE_LO)
        } else {
            0.0
        }
    }

    pub fn covariate_support(&self) -> (f64, f64) {
        (COVARIATE_LO, COVARIATE_HI)
    }

    /// `E(ψ(Y) | X = x)` for an arbitrary `ψ`, by quadrature over the response law.
    pub fn conditional_mean(&self, x: &[f64], psi: &PsiFunction) -> f64 {
        let a = self.response_lower(x);
        if let PsiFunction::Indicator { t } = psi {
            return (t - a).clamp(0.0, 1.0);
        }
        adaptive_integrate_piecewise(|y| psi.eval(y), a, a + 1.0, &psi.breaks(), TRUTH_TOL)
    }

    /// `m_ψ(x)` for the model's own `ψ`.
    pub fn m_psi(&self, x: &[f64]) -> f64 {
        self.conditional_mean(x, &self.model.psi)
    }

    /// `m_ψ` as an additive function. Only available when `ψ = 1{· ≤ t₀}`, the case in
    /// which the design is additive by construction.
    pub fn additive_truth(&self) -> Result<AdditiveFunction> {
        match self.model.psi {
            PsiFunction::Indicator { t } if t == self.model.threshold => Ok(self.model.components.clone()),
            _ => Err(Error::invalid(
                "m_psi is additive only for psi = 1{y <= t0} in this design",
            )),
        }
    }

    /// True component `η_ℓ(x_ℓ)` for integration densities `q`.
    pub fn eta(&self, ell: usize, x_ell: f64, q: &IntegrationDensities) -> Result<f64> {
        true_eta(&self.additive_truth()?, ell, x_ell, q)
    }

    /// `H_ψ(u) = E(ψ²(Y) / G(Y) | X = u)`.
    pub fn h_psi(&self, u: &[f64], psi: &PsiFunction) -> Result<f64> {
        let a = self.response_lower(u);
        let b = a + 1.0;
        let c = self.model.censor_upper;
        if b > c {
            // ψ must vanish wherever G does
            let lo = a.max(c);
            let nonzero = (0..=400).any(|k| psi.eval(lo + (b - lo) * k as f64 / 400.0) != 0.0);
            if nonzero {
                return Err(Error::Divergence { t: c });
            }
        }
        let top = b.min(c);
        let mut breaks = psi.breaks();
        if let Some(w) = psi.vanishes_above() {
            breaks.push(w);
        }
        let upper = psi.vanishes_above().map_or(top, |w| w.min(top));
        Ok(adaptive_integrate_piecewise(
            |y| {
                let v = psi.eval(y);
                if v == 0.0 {
                    0.0
                } else {
                    v * v / self.g(y)
                }
            },
            a,
            upper.max(a),
            &breaks,
            TRUTH_TOL,
        ))
    }

    fn integrate_over_covariates<F: Fn(&[f64]) -> f64>(&self, f: F, nodes: usize) -> Result<f64> {
        let d = self.dim();
        let density = self.f(&vec![0.0; d]);
        let bounds = vec![(COVARIATE_LO, COVARIATE_HI); d];
        let value = tensor_quadrature(|x| f(x), &bounds, &QuadratureRule::gauss_legendre(nodes))?;
        Ok(density * value)
    }

    /// `E ψ(Y)`.
    pub fn expected_psi(&self, psi: &PsiFunction) -> Result<f64> {
        self.integrate_over_covariates(|x| self.conditional_mean(x, psi), 48)
    }

    /// `P(δ = 1) = E ∫ G(y) dF(y | X)`.
    pub fn event_probability(&self) -> Result<f64> {
        let c = self.model.censor_upper;
        self.integrate_over_covariates(
            |x| {
                let a = self.response_lower(x);
                let b = (a + 1.0).min(c);
                if b <= a {
                    return 0.0;
                }
                // ∫_a^b (1 - y/c) dy
                (b - a) - (b * b - a * a) / (2.0 * c)
            },
            48,
        )
    }

    /// `T_G`, the right end of the censoring support.
    pub fn t_g(&self) -> f64 {
        self.model.censor_upper
    }

    /// `T_F`, the right end of the response support.
    pub fn t_f(&self) -> f64 {
        self.model.threshold - self.model.p_range().0 + 1.0
    }

    /// `T_H = min(T_F, T_G)`.
    pub fn t_h(&self) -> f64 {
        self.t_f().min(self.t_g())
    }

    /// `ω₀`: the truncation point of `ψ` when it has one, `T_F` otherwise.
    pub fn omega0(&self) -> f64 {
        self.model.psi.vanishes_above().unwrap_or_else(|| self.t_f())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::empirical_censoring_rate;

    #[test]
    fn p_range_matches_closed_form() {
        let (lo, hi) = SimulationModel::reference(1).p_range();
        let c1 = 1f64.cos().powi(2);
        let s1 = 1f64.sin().powi(2);
        assert!((lo - 0.5 * c1).abs() < 1e-12);
        assert!((hi - (0.5 + 0.5 * s1)).abs() < 1e-12);
        assert!((lo - 0.1460).abs() < 1e-4 && (hi - 0.8540).abs() < 1e-4);
    }

    #[test]
    fn same_seed_same_sample() {
        let m = SimulationModel::reference(42);
        let a = m.generate_replication(500, 3).unwrap();
        let b = m.generate_replication(500, 3).unwrap();
        assert_eq!(a, b);
        let c = m.generate_replication(500, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn observed_events_respect_bounds() {
        let m = SimulationModel::reference(7);
        let s = m.generate_replication(5000, 0).unwrap();
        for o in s.iter() {
            assert!(o.x.iter().all(|v| (-1.0..1.0).contains(v)));
            assert!(o.z <= 1.0);
            if o.delta {
                assert!(o.z <= 0.9 + (1.0 - m.p(&o.x)) + 1e-12);
            }
        }
        let rate = empirical_censoring_rate(&s);
        assert!((0.16..0.24).contains(&rate), "{rate}");
    }

    #[test]
    fn invariant_violation_rejected() {
        let bad = AdditiveFunction::new(vec![Arc::new(|x: f64| x), Arc::new(|_| 0.5)], 0.0).unwrap();
        assert!(SimulationModel::new(bad, 0.9, 1.0, PsiFunction::Indicator { t: 0.9 }, 0).is_err());
    }

    #[test]
    fn h_psi_closed_form() {
        let t = SimulationModel::reference(0).truth();
        let h = t.h_psi(&[0.0, 0.0], t.model().psi()).unwrap();
        assert!((h - 6f64.ln()).abs() < 1e-9, "{h}");
        assert_eq!(t.h_psi(&[0.0, 0.0], &PsiFunction::constant(0.0)).unwrap(), 0.0);
        assert!(matches!(
            t.h_psi(&[0.0, 0.0], &PsiFunction::Identity),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn truth_constants() {
        let t = SimulationModel::reference(0).truth();
        assert!((t.expected_psi(t.model().psi()).unwrap() - 0.5).abs() < 1e-12);
        let ey = t.expected_psi(&PsiFunction::Identity).unwrap();
        assert!((ey - 0.9).abs() < 1e-9, "{ey}");
        let p = t.event_probability().unwrap();
        assert!((p - 0.2).abs() < 0.01, "{p}");
        assert_eq!(t.t_g(), 1.0);
        assert_eq!(t.t_h(), 1.0);
        assert_eq!(t.omega0(), 0.9);
    }
}
