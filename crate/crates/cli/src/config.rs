//! Flat `key=value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ipcw_additive::{Kernel, PsiFunction, TauForm};

use crate::CliError;

/// Environment variable consulted for the default seed.
pub const SEED_ENV: &str = "IPCW_SEED";
pub const DEFAULT_SEED: u64 = 20240;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Fit,
    Simulate,
    Coverage,
    Km,
    CheckBandwidths,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Fit => "fit",
            Mode::Simulate => "simulate",
            Mode::Coverage => "coverage",
            Mode::Km => "km",
            Mode::CheckBandwidths => "check-bandwidths",
        }
    }
}

/// Every recognised key, in manifest order.
pub const KEYS: &[&str] = &[
    "data",
    "out",
    "d",
    "kernel",
    "density_kernel",
    "h",
    "h_density",
    "q_lo",
    "q_hi",
    "grid_lo",
    "grid_hi",
    "grid_size",
    "edge_margin",
    "interior_lo",
    "interior_hi",
    "psi",
    "tau_form",
    "epsilon",
    "epsilons",
    "seed",
    "n",
    "reps",
    "threshold",
    "censor_upper",
    "known_g",
    "known_f",
    "svg",
    "a0",
    "a",
    "s",
    "p",
];

/// Resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub d: usize,
    pub kernel: Kernel,
    pub density_kernel: Kernel,
    /// Per-axis bandwidths; a single value is broadcast.
    pub h: Vec<f64>,
    /// Defaults to the first axis bandwidth.
    pub h_density: Option<f64>,
    pub q_lo: f64,
    pub q_hi: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_size: usize,
    /// Defaults to the largest axis bandwidth.
    pub edge_margin: Option<f64>,
    pub interior_lo: f64,
    pub interior_hi: f64,
    pub psi: PsiFunction,
    pub tau_form: TauForm,
    /// Band inflation for `fit` and `simulate`.
    pub epsilon: f64,
    /// Inflation factors compared by `coverage`.
    pub epsilons: Vec<f64>,
    pub seed: u64,
    pub n: usize,
    pub reps: u64,
    pub threshold: f64,
    pub censor_upper: f64,
    pub known_g: bool,
    pub known_f: bool,
    pub svg: bool,
    pub a0: f64,
    pub a: Vec<f64>,
    pub s: u32,
    pub p: f64,
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Input(format!("config key `{key}`: cannot parse `{value}` as {what}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str, what: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| bad(key, v, what))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|x| num(key, x, "a comma-separated list of numbers")).collect()
}

fn boolean(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v, "a boolean")),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_tau_form(v: &str) -> Result<TauForm, CliError> {
    match v.trim() {
        "printed" => Ok(TauForm::Printed),
        "variance-limit" => Ok(TauForm::VarianceLimit),
        _ => Err(bad("tau_form", v, "`printed` or `variance-limit`")),
    }
}

fn tau_form_name(t: TauForm) -> &'static str {
    match t {
        TauForm::Printed => "printed",
        TauForm::VarianceLimit => "variance-limit",
    }
}

impl RunConfig {
    /// Defaults reproduce the reference simulation design.
    pub fn defaults(mode: Mode) -> Self {
        Self {
            mode,
            data: None,
            out: PathBuf::from("out"),
            d: 2,
            kernel: Kernel::Epanechnikov,
            density_kernel: Kernel::Epanechnikov,
            h: vec![0.1],
            h_density: None,
            q_lo: -1.0,
            q_hi: 1.0,
            grid_lo: -1.0,
            grid_hi: 1.0,
            grid_size: 201,
            edge_margin: None,
            interior_lo: -0.9,
            interior_hi: 0.9,
            psi: PsiFunction::Indicator { t: 0.9 },
            tau_form: TauForm::Printed,
            epsilon: 0.25,
            epsilons: vec![0.0, 0.25, 100.0],
            seed: DEFAULT_SEED,
            n: 1000,
            reps: 100,
            threshold: 0.9,
            censor_upper: 1.0,
            known_g: false,
            known_f: false,
            svg: true,
            a0: 0.05,
            a: vec![0.21, 0.21],
            s: 2,
            p: 0.5,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key.trim() {
            "data" => self.data = Some(PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "d" => self.d = num(key, v, "an integer")?,
            "kernel" => self.kernel = v.parse()?,
            "density_kernel" => self.density_kernel = v.parse()?,
            "h" => self.h = list(key, v)?,
            "h_density" => self.h_density = Some(num(key, v, "a number")?),
            "q_lo" => self.q_lo = num(key, v, "a number")?,
            "q_hi" => self.q_hi = num(key, v, "a number")?,
            "grid_lo" => self.grid_lo = num(key, v, "a number")?,
            "grid_hi" => self.grid_hi = num(key, v, "a number")?,
            "grid_size" => self.grid_size = num(key, v, "an integer")?,
            "edge_margin" => self.edge_margin = Some(num(key, v, "a number")?),
            "interior_lo" => self.interior_lo = num(key, v, "a number")?,
            "interior_hi" => self.interior_hi = num(key, v, "a number")?,
            "psi" => self.psi = v.parse()?,
            "tau_form" => self.tau_form = parse_tau_form(v)?,
            "epsilon" => self.epsilon = num(key, v, "a number")?,
            "epsilons" => self.epsilons = list(key, v)?,
            "seed" => self.seed = num(key, v, "an unsigned integer")?,
            "n" => self.n = num(key, v, "an integer")?,
            "reps" => self.reps = num(key, v, "an integer")?,
            "threshold" => self.threshold = num(key, v, "a number")?,
            "censor_upper" => self.censor_upper = num(key, v, "a number")?,
            "known_g" => self.known_g = boolean(key, v)?,
            "known_f" => self.known_f = boolean(key, v)?,
            "svg" => self.svg = boolean(key, v)?,
            "a0" => self.a0 = num(key, v, "a number")?,
            "a" => self.a = list(key, v)?,
            "s" => self.s = num(key, v, "an integer")?,
            "p" => self.p = num(key, v, "a number")?,
            other => return Err(CliError::Input(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn assign(&mut self, kv: &str) -> Result<(), CliError> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("expected key=value, got `{kv}`")))?;
        self.set(k, v)
    }

    /// Reads a config file: one `key=value` per line, `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.assign(line)
                .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = num(SEED_ENV, &v, "an unsigned integer")?;
        }
        Ok(())
    }

    /// Axis bandwidths expanded to dimension `d`.
    pub fn axis_bandwidths(&self) -> Result<Vec<f64>, CliError> {
        match self.h.len() {
            1 => Ok(vec![self.h[0]; self.d]),
            k if k == self.d => Ok(self.h.clone()),
            k => Err(CliError::Input(format!("{k} bandwidths given for d = {}", self.d))),
        }
    }

    pub fn density_bandwidth(&self) -> f64 {
        self.h_density.unwrap_or(self.h[0])
    }

    pub fn margin(&self) -> f64 {
        self.edge_margin
            .unwrap_or_else(|| self.h.iter().copied().fold(0.0, f64::max))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Input(m));
        if self.d < 2 {
            return fail(format!("d must be at least 2, got {}", self.d));
        }
        let h = self.axis_bandwidths()?;
        if h.iter().chain([self.density_bandwidth()].iter()).any(|&x| !(x > 0.0 && x.is_finite())) {
            return fail("bandwidths must be positive".into());
        }
        if self.grid_size < 2 {
            return fail(format!("grid_size must be at least 2, got {}", self.grid_size));
        }
        if !(self.grid_lo < self.grid_hi) || !(self.q_lo < self.q_hi) || !(self.interior_lo <= self.interior_hi) {
            return fail("interval bounds must satisfy lo < hi".into());
        }
        if self.epsilon < 0.0 || self.epsilons.iter().any(|&e| e < 0.0) {
            return fail("inflation factors must be nonnegative".into());
        }
        if matches!(self.mode, Mode::Fit | Mode::Km) && self.data.is_none() {
            return fail(format!("`{}` needs a data file (data=<path> or --data)", self.mode.name()));
        }
        if matches!(self.mode, Mode::Simulate | Mode::Coverage) && self.d != 2 {
            return fail("the simulation design is two-dimensional; set d=2".into());
        }
        if self.n == 0 {
            return fail("n must be positive".into());
        }
        Ok(())
    }

    /// The fully resolved configuration as `key=value` lines.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# ipcw-additive {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "mode={}", self.mode.name());
        for key in KEYS {
            let v = match *key {
                "data" => self.data.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                "out" => self.out.display().to_string(),
                "d" => self.d.to_string(),
                "kernel" => self.kernel.to_string(),
                "density_kernel" => self.density_kernel.to_string(),
                "h" => join(&self.h),
                "h_density" => self.density_bandwidth().to_string(),
                "q_lo" => self.q_lo.to_string(),
                "q_hi" => self.q_hi.to_string(),
                "grid_lo" => self.grid_lo.to_string(),
                "grid_hi" => self.grid_hi.to_string(),
                "grid_size" => self.grid_size.to_string(),
                "edge_margin" => self.margin().to_string(),
                "interior_lo" => self.interior_lo.to_string(),
                "interior_hi" => self.interior_hi.to_string(),
                "psi" => self.psi.to_string(),
                "tau_form" => tau_form_name(self.tau_form).to_string(),
                "epsilon" => self.epsilon.to_string(),
                "epsilons" => join(&self.epsilons),
                "seed" => self.seed.to_string(),
                "n" => self.n.to_string(),
                "reps" => self.reps.to_string(),
                "threshold" => self.threshold.to_string(),
                "censor_upper" => self.censor_upper.to_string(),
                "known_g" => self.known_g.to_string(),
                "known_f" => self.known_f.to_string(),
                "svg" => self.svg.to_string(),
                "a0" => self.a0.to_string(),
                "a" => join(&self.a),
                "s" => self.s.to_string(),
                "p" => self.p.to_string(),
                _ => unreachable!("manifest key without a value"),
            };
            let _ = writeln!(s, "{key}={v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let mut c = RunConfig::defaults(Mode::Simulate);
        c.assign("h=0.2,0.15").unwrap();
        c.assign("psi=identity-truncated:1.5").unwrap();
        c.assign("tau_form = variance-limit").unwrap();
        let text = c.manifest();
        let mut back = RunConfig::defaults(Mode::Simulate);
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("mode=")) {
            back.assign(line).unwrap();
        }
        assert_eq!(back.manifest(), text);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut c = RunConfig::defaults(Mode::Fit);
        assert!(matches!(c.assign("bandwidth=0.1"), Err(CliError::Input(_))));
        assert!(c.assign("h=abc").is_err());
        assert!(c.assign("kernel=gaussian").is_err());
        assert!(c.assign("novalue").is_err());
        c.assign("grid_size=1").unwrap();
        c.assign("data=x.csv").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn bandwidth_broadcast() {
        let mut c = RunConfig::defaults(Mode::Simulate);
        c.assign("d=3").unwrap();
        assert_eq!(c.axis_bandwidths().unwrap(), vec![0.1; 3]);
        c.assign("h=0.1,0.2").unwrap();
        assert!(c.axis_bandwidths().is_err());
    }
}
