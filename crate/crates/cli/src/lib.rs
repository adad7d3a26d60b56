//! Command logic behind the `ipcw-additive` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ipcw_additive::{
    check_power_law, component_band, empirical_censoring_rate, fit_additive, km_censoring_survival, load_csv,
    reference_components, run_coverage, run_replication, write_bands_csv, write_csv, AdditiveFit, AxisGrid,
    BandwidthPlan, CensoredSample, ConfidenceBand, EstimatorConfig, IntegrationDensities, IpcwEstimator,
    PowerLawSpec, SimulationModel, StudyConfig, TauHatPlugin,
};

pub use config::{Mode, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad files, schemas or settings. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// Numeric breakdown of an estimator. Exit code 3.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<ipcw_additive::Error> for CliError {
    fn from(e: ipcw_additive::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ipcw-additive", version, about = "Additive regression under right censoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit components and bands to a CSV dataset.
    Fit(RunArgs),
    /// Draw one sample from the simulation design, fit it and plot against the truth.
    Simulate(RunArgs),
    /// Replicated band coverage on the simulation design.
    Coverage(RunArgs),
    /// Kaplan–Meier estimate of the censoring survival function.
    Km(RunArgs),
    /// Check power-law bandwidth exponents against the rate conditions.
    CheckBandwidths(RunArgs),
}

/// Settings shared by all subcommands. Precedence: defaults, `IPCW_SEED`, config file,
/// `--set`, then the dedicated flags.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat key=value config file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Input CSV with header `z,delta,x1..xd`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample size for simulated data.
    #[arg(short, long)]
    pub n: Option<usize>,
    /// Replications for `coverage`.
    #[arg(long)]
    pub reps: Option<u64>,
}

impl Command {
    pub fn mode_and_args(&self) -> (Mode, &RunArgs) {
        match self {
            Command::Fit(a) => (Mode::Fit, a),
            Command::Simulate(a) => (Mode::Simulate, a),
            Command::Coverage(a) => (Mode::Coverage, a),
            Command::Km(a) => (Mode::Km, a),
            Command::CheckBandwidths(a) => (Mode::CheckBandwidths, a),
        }
    }
}

/// Merges defaults, environment, file and overrides into a validated config.
pub fn resolve(mode: Mode, args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(mode);
    cfg.apply_env()?;
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for kv in &args.set {
        cfg.assign(kv)?;
    }
    if let Some(v) = &args.data {
        cfg.data = Some(v.clone());
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.reps {
        cfg.reps = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// What a command produced; `code` is the process exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
    pub files: Vec<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let (mode, args) = cli.command.mode_and_args();
    let cfg = resolve(mode, args)?;
    execute(&cfg)
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Input(format!("cannot create output directory {}: {e}", cfg.out.display())))?;
    let mut out = Outcome {
        code: 0,
        report: String::new(),
        files: Vec::new(),
    };
    let manifest = cfg.out.join("manifest.txt");
    write_text(&manifest, &cfg.manifest())?;
    out.files.push(manifest);
    match cfg.mode {
        Mode::Fit => run_fit(cfg, &mut out)?,
        Mode::Simulate => run_simulate(cfg, &mut out)?,
        Mode::Coverage => run_coverage_cmd(cfg, &mut out)?,
        Mode::Km => run_km(cfg, &mut out)?,
        Mode::CheckBandwidths => run_check(cfg, &mut out)?,
    }
    Ok(out)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn grids(cfg: &RunConfig) -> Result<Vec<AxisGrid>, CliError> {
    let g = AxisGrid::uniform(cfg.grid_lo, cfg.grid_hi, cfg.grid_size)?.with_edge_margin(cfg.margin());
    Ok(vec![g; cfg.d])
}

fn plan(cfg: &RunConfig) -> Result<BandwidthPlan, CliError> {
    Ok(BandwidthPlan::new(cfg.density_bandwidth(), cfg.axis_bandwidths()?)?)
}

fn q(cfg: &RunConfig) -> Result<IntegrationDensities, CliError> {
    Ok(IntegrationDensities::uniform_cube(cfg.d, cfg.q_lo, cfg.q_hi)?)
}

fn study(cfg: &RunConfig) -> Result<StudyConfig, CliError> {
    let model = SimulationModel::new(reference_components(), cfg.threshold, cfg.censor_upper, cfg.psi.clone(), cfg.seed)?;
    Ok(StudyConfig {
        model,
        n: cfg.n,
        plan: plan(cfg)?,
        kernel: cfg.kernel,
        density_kernel: cfg.density_kernel,
        q: q(cfg)?,
        grids: grids(cfg)?,
        interior: (cfg.interior_lo, cfg.interior_hi),
        known_g: cfg.known_g,
        known_f: cfg.known_f,
        tau_form: cfg.tau_form,
    })
}

/// Writes fit.csv, bands.csv and optionally fit.svg.
fn emit_fit(
    cfg: &RunConfig,
    fit: &AdditiveFit,
    bands: &[ConfidenceBand],
    truth: Option<&[Vec<f64>]>,
    out: &mut Outcome,
) -> Result<(), CliError> {
    let fit_path = cfg.out.join("fit.csv");
    fit.write_csv(&fit_path)?;
    out.files.push(fit_path);
    let band_path = cfg.out.join("bands.csv");
    write_bands_csv(bands, &band_path)?;
    out.files.push(band_path);
    if cfg.svg {
        let svg_path = cfg.out.join("fit.svg");
        write_text(&svg_path, &svg::render(bands, truth, (cfg.interior_lo, cfg.interior_hi)))?;
        out.files.push(svg_path);
    }
    Ok(())
}

fn sample_report(sample: &CensoredSample) -> String {
    format!(
        "n = {}\nP(delta=1) = {:.4}\n",
        sample.len(),
        empirical_censoring_rate(sample)
    )
}

fn run_fit(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let path = cfg.data.as_ref().expect("validated");
    let sample = load_csv(path, cfg.d)?;
    let mut ecfg = EstimatorConfig::standard(&sample, plan(cfg)?, cfg.kernel, cfg.psi.clone());
    ecfg.density = ipcw_additive::DensityModel::Estimated(cfg.density_kernel);
    let q = q(cfg)?;
    let est = IpcwEstimator::new(&sample, &ecfg)?;
    let fit = fit_additive(&est, &grids(cfg)?, &q)?;
    let plugin = TauHatPlugin::new(&sample, &ecfg, &q)?.with_form(cfg.tau_form);
    let bands = (0..cfg.d)
        .map(|ell| component_band(&fit, ell, &plugin, cfg.epsilon))
        .collect::<ipcw_additive::Result<Vec<_>>>()?;
    emit_fit(cfg, &fit, &bands, None, out)?;
    out.report.push_str(&sample_report(&sample));
    out.report.push_str(&format!("mu_hat = {:.6}\n", fit.mu));
    Ok(())
}

fn run_simulate(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let study = study(cfg)?;
    let rep = run_replication(&study, 0)?;
    let sample_path = cfg.out.join("sample.csv");
    write_csv(&rep.sample, &sample_path)?;
    out.files.push(sample_path);
    let bands = rep
        .bands
        .iter()
        .map(|b| b.with_epsilon(cfg.epsilon))
        .collect::<ipcw_additive::Result<Vec<_>>>()?;
    // the overlay needs an additive truth, which only the indicator ψ at the threshold has
    let truth = study.true_components().ok();
    if truth.is_none() {
        log::warn!("ψ = {} has no additive truth; plot omits the overlay", cfg.psi);
    }
    emit_fit(cfg, &rep.fit, &bands, truth.as_deref(), out)?;
    out.report.push_str(&sample_report(&rep.sample));
    out.report.push_str(&format!("mu_hat = {:.6}\n", rep.fit.mu));
    if let Some(t) = &truth {
        let (_, pooled) = ipcw_additive::band_coverage(&bands, t, study.interior);
        out.report.push_str(&format!(
            "interior coverage (epsilon = {}) = {:.4}\n",
            cfg.epsilon, pooled
        ));
    }
    Ok(())
}

fn run_coverage_cmd(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let study = study(cfg)?;
    study.true_components().map_err(|e| {
        CliError::Input(format!("coverage needs ψ = indicator at the threshold: {e}"))
    })?;
    let table = run_coverage(&study, cfg.reps, &cfg.epsilons)?;
    let csv_path = cfg.out.join("coverage.csv");
    let file = fs::File::create(&csv_path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", csv_path.display())))?;
    table
        .write_csv_to(std::io::BufWriter::new(file))
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", csv_path.display())))?;
    out.files.push(csv_path);
    let mut summary = String::new();
    for &eps in &cfg.epsilons {
        if let Some(s) = table.summary(eps) {
            summary.push_str(&format!(
                "{s} at_least_0.95={}/{}\n",
                table.count_at_least(eps, 0.95),
                s.replications
            ));
        }
    }
    let summary_path = cfg.out.join("coverage_summary.txt");
    write_text(&summary_path, &summary)?;
    out.files.push(summary_path);
    out.report.push_str(&summary);
    Ok(())
}

fn run_km(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let path = cfg.data.as_ref().expect("validated");
    let sample = load_csv(path, cfg.d)?;
    let g = km_censoring_survival(&sample);
    let mut text = String::from("t,G\n");
    for (t, v) in g.jump_times().iter().zip(g.values()) {
        text.push_str(&format!(
            "{},{}\n",
            ipcw_additive::data::fmt_f64(*t),
            ipcw_additive::data::fmt_f64(*v)
        ));
    }
    let km_path = cfg.out.join("km.csv");
    write_text(&km_path, &text)?;
    out.files.push(km_path);
    out.report.push_str(&sample_report(&sample));
    out.report
        .push_str(&format!("censoring jumps = {}\n", g.jump_times().len()));
    Ok(())
}

fn run_check(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let spec = PowerLawSpec::new(cfg.a0, cfg.a.clone(), cfg.s, cfg.p)?;
    let report = check_power_law(&spec);
    let text = report.to_string();
    let path = cfg.out.join("conditions.txt");
    write_text(&path, &text)?;
    out.files.push(path);
    out.report.push_str(&text);
    if !report.all_passed() {
        out.code = 1;
    }
    Ok(())
}

/// Prints the report and returns the exit status.
pub fn main_with(cli: &Cli) -> i32 {
    match run(cli) {
        Ok(o) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let _ = lock.write_all(o.report.as_bytes());
            for f in &o.files {
                let _ = writeln!(lock, "wrote {}", f.display());
            }
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn invoke(args: &[&str]) -> Result<Outcome, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("ipcw-additive").chain(args.iter().copied())).unwrap();
        run(&cli)
    }

    fn path(dir: &Path, name: &str) -> String {
        dir.join(name).display().to_string()
    }

    #[test]
    fn simulate_then_fit_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sim_dir = path(dir.path(), "sim");
        let sim = invoke(&["simulate", "--seed", "9", "-o", &sim_dir]).unwrap();
        let p: f64 = sim
            .report
            .lines()
            .find_map(|l| l.strip_prefix("P(delta=1) = "))
            .unwrap()
            .parse()
            .unwrap();
        assert!((0.16..=0.24).contains(&p), "{p}");
        let svg = std::fs::read_to_string(dir.path().join("sim/fit.svg")).unwrap();
        assert_eq!(svg.matches("stroke-dasharray").count(), 2, "truth overlay per panel");

        let data = path(dir.path(), "sim/sample.csv");
        let fit = invoke(&["fit", "--data", &data, "-o", &path(dir.path(), "fit")]).unwrap();
        assert_eq!(fit.code, 0);
        let bands = std::fs::read_to_string(dir.path().join("fit/bands.csv")).unwrap();
        assert_eq!(bands.lines().next(), Some("ell,x,eta_hat,halfwidth,lower,upper"));
        for ell in ["1", "2"] {
            assert_eq!(bands.lines().filter(|l| l.split(',').next() == Some(ell)).count(), 201);
        }
        let manifest = std::fs::read_to_string(dir.path().join("fit/manifest.txt")).unwrap();
        assert!(manifest.contains("mode=fit\n"));
        assert!(manifest.contains(&format!("data={data}\n")));
    }

    #[test]
    fn input_errors_map_to_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = path(dir.path(), "x");
        let missing = invoke(&["fit", "--data", "/nonexistent/absent.csv", "-o", &out]).unwrap_err();
        assert_eq!(missing.exit_code(), 2);
        assert!(missing.to_string().contains("absent.csv"));

        invoke(&["simulate", "-n", "200", "-o", &path(dir.path(), "s")]).unwrap();
        let data = path(dir.path(), "s/sample.csv");
        let mismatch = invoke(&["fit", "--data", &data, "--set", "d=3", "-o", &out]).unwrap_err();
        assert_eq!(mismatch.exit_code(), 2);

        let unknown = invoke(&["simulate", "--set", "bandwidth=0.2", "-o", &out]).unwrap_err();
        assert_eq!(unknown.exit_code(), 2);
    }

    #[test]
    fn vanishing_density_maps_to_three() {
        let dir = tempfile::tempdir().unwrap();
        // two covariate clusters and a density bandwidth far below the smoothing bandwidth
        let mut csv = String::from("z,delta,x1,x2\n");
        for i in 0..20 {
            let x = if i % 2 == 0 { -0.5 } else { 0.5 };
            csv.push_str(&format!("{},1,{x},{x}\n", 0.1 + 0.01 * i as f64));
        }
        let data = path(dir.path(), "gap.csv");
        std::fs::write(&data, csv).unwrap();
        let e = invoke(&[
            "fit", "--data", &data, "--set", "h=0.3", "--set", "h_density=0.01", "-o", &path(dir.path(), "x"),
        ])
        .unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
    }

    #[test]
    fn config_file_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = path(dir.path(), "run.cfg");
        std::fs::write(&cfg_path, "# small run\nn = 300\nseed=5\nh=0.2\n").unwrap();
        let args = RunArgs {
            config: Some(cfg_path.into()),
            set: vec!["seed=6".into()],
            n: Some(250),
            ..Default::default()
        };
        let cfg = resolve(Mode::Simulate, &args).unwrap();
        assert_eq!((cfg.seed, cfg.n, cfg.h.clone()), (6, 250, vec![0.2]));
        let bad_line = path(dir.path(), "bad.cfg");
        std::fs::write(&bad_line, "n=10\nthis line is wrong\n").unwrap();
        let e = resolve(Mode::Simulate, &RunArgs { config: Some(bad_line.into()), ..Default::default() }).unwrap_err();
        assert!(e.to_string().contains(":2:"), "{e}");
    }

    #[test]
    fn km_and_checker() {
        let dir = tempfile::tempdir().unwrap();
        let data = path(dir.path(), "d.csv");
        std::fs::write(&data, "z,delta,x1,x2\n1,0,0,0\n2,1,0,0\n3,0,0,0\n4,1,0,0\n").unwrap();
        invoke(&["km", "--data", &data, "-o", &path(dir.path(), "k")]).unwrap();
        let km = std::fs::read_to_string(dir.path().join("k/km.csv")).unwrap();
        let rows: Vec<&str> = km.lines().collect();
        assert_eq!(rows[0], "t,G");
        assert_eq!(rows.len(), 3);
        assert!(rows[1].ends_with(",7.5000000000000000e-1"), "{km}");
        assert!(rows[2].ends_with(",3.7500000000000000e-1"), "{km}");

        let c = path(dir.path(), "c");
        assert_eq!(invoke(&["check-bandwidths", "-o", &c]).unwrap().code, 0);
        let fail = invoke(&["check-bandwidths", "--set", "a0=0.6", "-o", &c]).unwrap();
        assert_eq!(fail.code, 1);
        assert!(fail.report.contains("FAIL"));
    }
}
