//! Product-limit estimation of the censoring survival function `G(t) = P(C > t)`.

use crate::data::CensoredSample;
use crate::error::{Error, Result};

/// Right-continuous, nonincreasing step function starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl SurvivalCurve {
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::invalid("one value per jump time is required"));
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("jump times must be strictly increasing"));
        }
        let mut prev = 1.0;
        for &v in &values {
            if !(0.0..=prev).contains(&v) {
                return Err(Error::invalid("survival values must be nonincreasing in [0, 1]"));
            }
            prev = v;
        }
        Ok(Self { jump_times, values })
    }

    /// The constant curve `≡ 1`.
    pub fn one() -> Self {
        Self {
            jump_times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `t`, right-continuous at jumps.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// First time at which the curve reaches zero.
    pub fn zero_time(&self) -> Option<f64> {
        self.values
            .iter()
            .position(|&v| v == 0.0)
            .map(|k| self.jump_times[k])
    }

    /// `∫₀^z dt / G(t)`, exact for the step function. Fails if `G` vanishes on `[0, z)`.
    pub fn integral_of_inverse(&self, z: f64) -> Result<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        let mut left = 0.0;
        let mut level = 1.0;
        for (&t, &v) in self.jump_times.iter().zip(&self.values) {
            if t >= z {
                break;
            }
            if t > left {
                total += (t - left) / level;
                left = t;
            }
            level = v;
            if level == 0.0 {
                return Err(Error::Divergence { t });
            }
        }
        Ok(total + (z - left) / level)
    }
}

/// Kaplan–Meier estimator of the censoring survival function: censored observations
/// (`δ = 0`) are the events.
///
/// At tied times, uncensored observations are ordered before censored ones, so the
/// at-risk count of a censoring event excludes failures recorded at the same time.
pub fn km_censoring_survival(sample: &CensoredSample) -> SurvivalCurve {
    let mut order: Vec<(f64, bool)> = sample.iter().map(|o| (o.z, o.delta)).collect();
    // delta = true sorts first among ties
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let n = order.len();
    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    let mut i = 0;
    while i < n {
        let t = order[i].0;
        let mut j = i;
        while j < n && order[j].0 == t && order[j].1 {
            j += 1;
        }
        // order[j..k] are the censoring events at t
        let mut k = j;
        while k < n && order[k].0 == t {
            k += 1;
        }
        let events = k - j;
        if events > 0 {
            let at_risk = n - j;
            surv *= 1.0 - events as f64 / at_risk as f64;
            jump_times.push(t);
            values.push(surv);
        }
        i = k;
    }
    SurvivalCurve { jump_times, values }
}
