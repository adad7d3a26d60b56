//! Censored samples, the response transform `ψ`, regions, and CSV ingestion.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One observation `(Z, δ, X)`: `Z = min(Y, C)`, `δ = 1{Y ≤ C}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredObservation {
    pub z: f64,
    pub delta: bool,
    pub x: Vec<f64>,
}

impl CensoredObservation {
    pub fn new(z: f64, delta: bool, x: Vec<f64>) -> Result<Self> {
        if !z.is_finite() || z < 0.0 {
            return Err(Error::invalid(format!("observed time must be finite and >= 0, got {z}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("covariates must be finite"));
        }
        Ok(Self { z, delta, x })
    }

    #[inline]
    pub fn delta_f64(&self) -> f64 {
        if self.delta {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    observations: Vec<CensoredObservation>,
    d: usize,
}

impl CensoredSample {
    pub fn new(observations: Vec<CensoredObservation>, d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::invalid("covariate dimension must be >= 1"));
        }
        if observations.is_empty() {
            return Err(Error::invalid("n >= 1 required"));
        }
        if let Some(i) = observations.iter().position(|o| o.x.len() != d) {
            return Err(Error::invalid(format!(
                "observation {} has {} covariates, expected {d}",
                i + 1,
                observations[i].x.len()
            )));
        }
        Ok(Self { observations, d })
    }

    pub fn observations(&self) -> &[CensoredObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CensoredObservation> {
        self.observations.iter()
    }
}

/// Fraction of uncensored observations, `mean(δ)`.
pub fn empirical_censoring_rate(sample: &CensoredSample) -> f64 {
    let events = sample.iter().filter(|o| o.delta).count();
    events as f64 / sample.len() as f64
}

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads `z,delta,x1,...,xd`. Row indices in errors are 1-based body rows.
pub fn load_csv(path: impl AsRef<Path>, d: usize) -> Result<CensoredSample> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, d)
}

pub fn read_csv<R: std::io::Read>(reader: R, d: usize) -> Result<CensoredSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    let expected: Vec<String> = ["z".to_string(), "delta".to_string()]
        .into_iter()
        .chain((1..=d).map(|k| format!("x{k}")))
        .collect();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Schema(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }

    let mut observations = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Validation {
            row,
            message: e.to_string(),
        })?;
        if record.len() != d + 2 {
            return Err(Error::Schema(format!(
                "row {row} has {} columns, expected {}",
                record.len(),
                d + 2
            )));
        }
        let num = |col: usize| -> Result<f64> {
            let cell = &record[col];
            cell.parse::<f64>().map_err(|_| Error::Validation {
                row,
                message: format!("non-numeric cell `{cell}` in column `{}`", expected[col]),
            })
        };
        let z = num(0)?;
        if !z.is_finite() || z < 0.0 {
            return Err(Error::Validation {
                row,
                message: format!("z must be finite and >= 0, got {z}"),
            });
        }
        let delta = match num(1)? {
            0.0 => false,
            1.0 => true,
            v => {
                return Err(Error::Validation {
                    row,
                    message: format!("delta must be 0 or 1, got {v}"),
                })
            }
        };
        let mut x = Vec::with_capacity(d);
        for col in 2..d + 2 {
            let v = num(col)?;
            if !v.is_finite() {
                return Err(Error::Validation {
                    row,
                    message: format!("non-finite covariate in column `{}`", expected[col]),
                });
            }
            x.push(v);
        }
        observations.push(CensoredObservation { z, delta, x });
    }
    if observations.is_empty() {
        return Err(Error::Validation {
            row: 0,
            message: "n >= 1 required".into(),
        });
    }
    CensoredSample::new(observations, d)
}

pub fn write_csv_to<W: Write>(sample: &CensoredSample, mut w: W) -> std::io::Result<()> {
    write!(w, "z,delta")?;
    for k in 1..=sample.dim() {
        write!(w, ",x{k}")?;
    }
    writeln!(w)?;
    for o in sample.iter() {
        write!(w, "{},{}", fmt_f64(o.z), u8::from(o.delta))?;
        for v in &o.x {
            write!(w, ",{}", fmt_f64(*v))?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn write_csv(sample: &CensoredSample, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_csv_to(sample, BufWriter::new(file)).map_err(io)
}

/// The transform `ψ` whose conditional mean is estimated.
#[derive(Clone)]
pub enum PsiFunction {
    /// `ψ(y) = y`. Unbounded; only meaningful when the response support sits below `T_G`.
    Identity,
    /// `ψ(y) = y·1{y ≤ ω}`.
    IdentityTruncated { omega: f64 },
    /// `ψ(y) = 1{y ≤ t}`.
    Indicator { t: f64 },
    /// Any bounded function. `breaks` lists discontinuities, used to split quadratures.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        bound: f64,
        breaks: Vec<f64>,
    },
}

impl PsiFunction {
    pub fn identity_truncated(omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::invalid("truncation point must be finite"));
        }
        Ok(Self::IdentityTruncated { omega })
    }

    pub fn indicator(t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::invalid("indicator threshold must be finite"));
        }
        Ok(Self::Indicator { t })
    }

    pub fn custom(
        name: impl Into<String>,
        bound: f64,
        breaks: Vec<f64>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::invalid("custom ψ needs a finite nonnegative bound"));
        }
        Ok(Self::Custom {
            name: name.into(),
            f: Arc::new(f),
            bound,
            breaks,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::Custom {
            name: format!("const:{c}"),
            f: Arc::new(move |_| c),
            bound: c.abs(),
            breaks: Vec::new(),
        }
    }

    /// `a·ψ₁ + b·ψ₂`.
    pub fn linear_combination(a: f64, p1: &PsiFunction, b: f64, p2: &PsiFunction) -> Self {
        let (q1, q2) = (p1.clone(), p2.clone());
        let mut breaks = p1.breaks();
        breaks.extend(p2.breaks());
        Self::Custom {
            name: format!("{a}*({p1})+{b}*({p2})"),
            f: Arc::new(move |y| a * q1.eval(y) + b * q2.eval(y)),
            bound: a.abs() * p1.bound() + b.abs() * p2.bound(),
            breaks,
        }
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            PsiFunction::Identity => y,
            PsiFunction::IdentityTruncated { omega } => {
                if y <= *omega {
                    y
                } else {
                    0.0
                }
            }
            PsiFunction::Indicator { t } => {
                if y <= *t {
                    1.0
                } else {
                    0.0
                }
            }
            PsiFunction::Custom { f, .. } => f(y),
        }
    }

    /// Sup-norm bound over the nonnegative half line.
    pub fn bound(&self) -> f64 {
        match self {
            PsiFunction::Identity => f64::INFINITY,
            PsiFunction::IdentityTruncated { omega } => omega.abs(),
            PsiFunction::Indicator { .. } => 1.0,
            PsiFunction::Custom { bound, .. } => *bound,
        }
    }

    /// Points where `ψ` may jump.
    pub fn breaks(&self) -> Vec<f64> {
        match self {
            PsiFunction::Identity => Vec::new(),
            PsiFunction::IdentityTruncated { omega } => vec![*omega],
            PsiFunction::Indicator { t } => vec![*t],
            PsiFunction::Custom { breaks, .. } => breaks.clone(),
        }
    }

    /// Point above which `ψ` vanishes, when known.
    pub fn vanishes_above(&self) -> Option<f64> {
        match self {
            PsiFunction::IdentityTruncated { omega } => Some(*omega),
            PsiFunction::Indicator { t } => Some(*t),
            _ => None,
        }
    }
}

impl fmt::Debug for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PsiFunction({self})")
    }
}

impl fmt::Display for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiFunction::Identity => f.write_str("identity"),
            PsiFunction::IdentityTruncated { omega } => write!(f, "identity-truncated:{omega}"),
            PsiFunction::Indicator { t } => write!(f, "indicator:{t}"),
            PsiFunction::Custom { name, .. } => f.write_str(name),
        }
    }
}

impl FromStr for PsiFunction {
    type Err = Error;

    /// `identity`, `identity-truncated:<ω>`, `indicator:<t>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::invalid(format!("ψ description `{s}` needs a numeric argument")))?
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number in ψ description `{s}`")))
        };
        match kind {
            "identity" => Ok(PsiFunction::Identity),
            "identity-truncated" => PsiFunction::identity_truncated(num(arg)?),
            "indicator" => PsiFunction::indicator(num(arg)?),
            _ => Err(Error::invalid(format!("unknown ψ description `{s}`"))),
        }
    }
}

/// Product of compact intervals `C_ℓ = [a_ℓ, c_ℓ]` with neighborhood radius `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    intervals: Vec<(f64, f64)>,
    alpha: f64,
}

impl Region {
    pub fn new(intervals: Vec<(f64, f64)>, alpha: f64) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::invalid("a region needs at least one interval"));
        }
        if let Some((a, c)) = intervals.iter().find(|(a, c)| !(a < c) || !a.is_finite() || !c.is_finite()) {
            return Err(Error::invalid(format!("interval [{a}, {c}] is empty or unbounded")));
        }
        if !(alpha > 0.0) {
            return Err(Error::invalid("neighborhood radius must be > 0"));
        }
        Ok(Self { intervals, alpha })
    }

    pub fn cube(d: usize, lo: f64, hi: f64, alpha: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); d], alpha)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn axis(&self, ell: usize) -> (f64, f64) {
        self.intervals[ell]
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.intervals)
                .all(|(v, (a, c))| *a <= *v && *v <= *c)
    }
}
