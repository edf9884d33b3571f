//! `cv-teleport` command-line front end.
//!
//! Exit codes: 0 success, 1 selftest failure, 2 configuration error,
//! 3 convergence warning (files are still written).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    fringe_report, global_fringe_visibility, linspace, quadrature_distribution, wigner_function, write_quadrature_csv,
};
use crate::conditioning::{
    entanglement_entropy, entanglement_sweep, subtract_photons, subtract_photons_tmsv, tmsv_entropy_bits,
    tmsv_truncation_weight, write_sweep_csv, SubtractionEvent,
};
use crate::error::Error;
use crate::numerics::{gauss_legendre, oscillator_eigenfunctions};
use crate::states::{
    odd_cat_state, squeezed_vacuum_truncation_loss, two_mode_squeezed_vacuum, DensityMatrix, SingleModeState,
    StateDocument, TwoModeState,
};
use crate::teleport::{
    average_over_outcomes, conditional_fidelity, default_oracle_grid, kernel_b, kernel_b_matrix, kernel_d,
    kernel_d_matrix, outcome_surface, teleport_oracle, teleported_coefficients, write_surface_csv, HomodyneOutcome,
    OutcomeGrid,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_SELFTEST_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;

/// Relative outcome-probability loss above which a run is flagged.
pub const PROBABILITY_LOSS_WARNING: f64 = 1e-5;
/// Fock truncation weight above which a run is flagged.
pub const TRUNCATION_WARNING: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "cv-teleport", version, about = "Continuous-variable teleportation with photon-subtracted entanglement")]
pub struct Cli {
    /// Worker thread cap for grid evaluation.
    #[arg(long, global = true, env = "CV_TELEPORT_THREADS")]
    pub threads: Option<usize>,

    /// JSON file with parameter defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entanglement entropy and heralding probability versus reflectance.
    Entangle(ConfigArgs),
    /// Outcome-averaged teleportation of an odd cat state.
    Teleport(ConfigArgs),
    /// Oracle cross-checks of the numerical pipeline.
    Selftest(ConfigArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    /// Plain two-mode squeezed vacuum.
    Tmsv,
    /// Photon-subtracted squeezed vacuum.
    Subtracted,
    Both,
}

/// Every tunable parameter. All fields are optional so that a config file
/// and the command line can be layered.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigArgs {
    /// Squeezing parameter q of the two-mode squeezed vacuum.
    #[arg(long)]
    pub q: Option<f64>,
    /// Real part of the cat amplitude.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_re: Option<f64>,
    /// Imaginary part of the cat amplitude.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_im: Option<f64>,
    /// Photons detected behind beam splitter 1.
    #[arg(long)]
    pub n1: Option<usize>,
    /// Photons detected behind beam splitter 2.
    #[arg(long)]
    pub n2: Option<usize>,
    /// Reflectance of beam splitter 1.
    #[arg(long)]
    pub r1: Option<f64>,
    /// Reflectance of beam splitter 2.
    #[arg(long)]
    pub r2: Option<f64>,
    /// Fock truncation dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Half-width of the square outcome-integration domain.
    #[arg(long)]
    pub bound: Option<f64>,
    /// Gauss–Legendre nodes per outcome axis.
    #[arg(long)]
    pub order: Option<usize>,
    /// Reflectances for the entanglement sweep.
    #[arg(long, value_delimiter = ',')]
    pub r_values: Option<Vec<f64>>,
    /// Which entangled resource to teleport with.
    #[arg(long, value_enum)]
    pub resource: Option<Resource>,
    /// Evaluate a single homodyne outcome instead of averaging.
    #[arg(long, num_args = 2, value_names = ["X0", "P1"], allow_hyphen_values = true)]
    pub outcome: Option<Vec<f64>>,
    /// Half-width of the Wigner-function plot window.
    #[arg(long)]
    pub wigner_bound: Option<f64>,
    /// Samples per axis of the Wigner-function plot window.
    #[arg(long)]
    pub wigner_points: Option<usize>,
    /// Half-width of the fidelity/probability surface window.
    #[arg(long)]
    pub surface_bound: Option<f64>,
    /// Samples per axis of the fidelity/probability surface window.
    #[arg(long)]
    pub surface_points: Option<usize>,
    /// Half-width of the quadrature-distribution window.
    #[arg(long)]
    pub quadrature_bound: Option<f64>,
    /// Samples of the quadrature distribution.
    #[arg(long)]
    pub quadrature_points: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    pub out_dir: Option<PathBuf>,
}

macro_rules! layer {
    ($top:expr, $bottom:expr, $($field:ident),*) => {
        ConfigArgs { $($field: $top.$field.or($bottom.$field)),* }
    };
}

impl ConfigArgs {
    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: ConfigArgs) -> ConfigArgs {
        layer!(
            self, base, q, alpha_re, alpha_im, n1, n2, r1, r2, dim, bound, order, r_values, resource, outcome,
            wigner_bound, wigner_points, surface_bound, surface_points, quadrature_bound, quadrature_points, out_dir
        )
    }
}

/// Fully resolved and validated parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub q: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub n1: usize,
    pub n2: usize,
    pub r1: f64,
    pub r2: f64,
    pub dim: usize,
    pub bound: f64,
    pub order: usize,
    #[serde(skip)]
    pub r_values: Vec<f64>,
    pub resource: Resource,
    pub outcome: Option<(f64, f64)>,
    pub wigner_bound: f64,
    pub wigner_points: usize,
    pub surface_bound: f64,
    pub surface_points: usize,
    pub quadrature_bound: f64,
    pub quadrature_points: usize,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            q: 0.8178,
            alpha_re: 0.0,
            alpha_im: 1.5,
            n1: 1,
            n2: 1,
            r1: 0.15,
            r2: 0.15,
            dim: 64,
            bound: 8.0,
            order: 160,
            r_values: linspace(0.0, 0.5, 101),
            resource: Resource::Both,
            outcome: None,
            wigner_bound: 4.0,
            wigner_points: 81,
            surface_bound: 4.0,
            surface_points: 81,
            quadrature_bound: 6.0,
            quadrature_points: 1201,
            out_dir: PathBuf::from("cv-teleport-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl RunConfig {
    pub fn resolve(args: ConfigArgs) -> Result<Self, ConfigError> {
        let d = RunConfig::default();
        let outcome = match args.outcome {
            None => None,
            Some(v) if v.len() == 2 => Some((v[0], v[1])),
            Some(v) => return Err(ConfigError(format!("--outcome takes two values, got {}", v.len()))),
        };
        let cfg = RunConfig {
            q: args.q.unwrap_or(d.q),
            alpha_re: args.alpha_re.unwrap_or(d.alpha_re),
            alpha_im: args.alpha_im.unwrap_or(d.alpha_im),
            n1: args.n1.unwrap_or(d.n1),
            n2: args.n2.unwrap_or(d.n2),
            r1: args.r1.unwrap_or(d.r1),
            r2: args.r2.unwrap_or(d.r2),
            dim: args.dim.unwrap_or(d.dim),
            bound: args.bound.unwrap_or(d.bound),
            order: args.order.unwrap_or(d.order),
            r_values: args.r_values.unwrap_or(d.r_values),
            resource: args.resource.unwrap_or(d.resource),
            outcome,
            wigner_bound: args.wigner_bound.unwrap_or(d.wigner_bound),
            wigner_points: args.wigner_points.unwrap_or(d.wigner_points),
            surface_bound: args.surface_bound.unwrap_or(d.surface_bound),
            surface_points: args.surface_points.unwrap_or(d.surface_points),
            quadrature_bound: args.quadrature_bound.unwrap_or(d.quadrature_bound),
            quadrature_points: args.quadrature_points.unwrap_or(d.quadrature_points),
            out_dir: args.out_dir.unwrap_or(d.out_dir),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError(msg));
        if !(self.q > 0.0 && self.q < 1.0) {
            return fail(format!("q = {} must lie in (0, 1)", self.q));
        }
        for (name, r) in [("r1", self.r1), ("r2", self.r2)] {
            if !(0.0..1.0).contains(&r) {
                return fail(format!("{name} = {r} must lie in [0, 1)"));
            }
        }
        if let Some(r) = self.r_values.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return fail(format!("sweep reflectance {r} must lie in [0, 1)"));
        }
        if self.dim < 8 {
            return fail(format!("dim = {} must be at least 8", self.dim));
        }
        if !(self.bound > 0.0 && self.bound.is_finite()) || self.order == 0 {
            return fail("outcome grid needs bound > 0 and order >= 1".into());
        }
        if !self.alpha_re.is_finite() || !self.alpha_im.is_finite() {
            return fail("alpha must be finite".into());
        }
        if let Some((x0, p1)) = self.outcome {
            if !x0.is_finite() || !p1.is_finite() {
                return fail("outcome must be finite".into());
            }
        }
        for (name, b, n) in [
            ("wigner", self.wigner_bound, self.wigner_points),
            ("surface", self.surface_bound, self.surface_points),
            ("quadrature", self.quadrature_bound, self.quadrature_points),
        ] {
            if !(b > 0.0 && b.is_finite()) || n < 3 {
                return fail(format!("{name} window needs bound > 0 and at least 3 points"));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> C64 {
        C64::new(self.alpha_re, self.alpha_im)
    }

    pub fn event(&self) -> SubtractionEvent {
        SubtractionEvent::new(self.n1, self.n2, self.r1, self.r2).expect("validated reflectances")
    }
}

fn load_config_file(path: &Path) -> Result<ConfigArgs, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_CONFIG;
        }
        // a pool may already exist when called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let (args, kind) = match cli.command {
        Command::Entangle(a) => (a, "entangle"),
        Command::Teleport(a) => (a, "teleport"),
        Command::Selftest(a) => (a, "selftest"),
    };
    let args = match &cli.config {
        Some(path) => match load_config_file(path) {
            Ok(file) => args.over(file),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        },
        None => args,
    };
    let cfg = match RunConfig::resolve(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = match kind {
        "entangle" => cmd_entangle(&cfg),
        "teleport" => cmd_teleport(&cfg),
        _ => Ok(cmd_selftest(&cfg)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CommandError::Io(_) => EXIT_CONFIG,
                CommandError::Physics(Error::GridTruncation { .. } | Error::TruncationExceeded { .. }) => {
                    EXIT_CONVERGENCE
                }
                CommandError::Physics(_) => EXIT_CONFIG,
            }
        }
    }
}

#[derive(Debug)]
pub enum CommandError {
    Io(std::io::Error),
    Physics(Error),
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Io(e) => write!(f, "{e}"),
            CommandError::Physics(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError::Io(e)
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        CommandError::Physics(e)
    }
}

fn create(dir: &Path, name: &str) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> std::io::Result<()> {
    let mut out = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::other)?;
    writeln!(out)?;
    out.flush()
}

#[derive(Debug, Serialize)]
struct EntangleSummary {
    q: f64,
    n1: usize,
    n2: usize,
    dim: usize,
    tmsv_entropy_bits: f64,
    tmsv_entropy_bits_analytic: f64,
    max_entropy_gain_bits: Option<f64>,
    r_at_max_gain: Option<f64>,
    max_truncation_weight: f64,
    converged: bool,
}

/// Entropy/probability sweep over reflectance. Writes `entanglement.csv`
/// and `entangle_summary.json`.
pub fn cmd_entangle(cfg: &RunConfig) -> Result<u8, CommandError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let rows = entanglement_sweep(cfg.q, cfg.n1, cfg.n2, &cfg.r_values, cfg.dim)?;
    write_sweep_csv(&rows, create(&cfg.out_dir, "entanglement.csv")?)?;

    let tmsv = two_mode_squeezed_vacuum(cfg.q, cfg.dim)?;
    let base = entanglement_entropy(&tmsv, 2.0)?;
    let best = rows
        .iter()
        .filter_map(|row| row.entropy_bits.map(|e| (row.r, e - base)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let max_truncation_weight = rows
        .iter()
        .map(|r| r.truncation_weight)
        .fold(squeezed_vacuum_truncation_loss(cfg.q, cfg.dim), f64::max);
    let converged = max_truncation_weight <= TRUNCATION_WARNING;
    let summary = EntangleSummary {
        q: cfg.q,
        n1: cfg.n1,
        n2: cfg.n2,
        dim: cfg.dim,
        tmsv_entropy_bits: base,
        tmsv_entropy_bits_analytic: tmsv_entropy_bits(cfg.q),
        max_entropy_gain_bits: best.map(|b| b.1),
        r_at_max_gain: best.map(|b| b.0),
        max_truncation_weight,
        converged,
    };
    write_json(&cfg.out_dir, "entangle_summary.json", &summary)?;
    println!(
        "entropy of squeezed vacuum: {:.6} bits; max gain {} at r = {}",
        base,
        best.map_or("n/a".into(), |b| format!("{:.6} bits", b.1)),
        best.map_or("n/a".into(), |b| format!("{:.4}", b.0)),
    );
    if converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("warning: truncation weight {max_truncation_weight:e} exceeds {TRUNCATION_WARNING:e}; raise --dim");
        Ok(EXIT_CONVERGENCE)
    }
}

struct PreparedResource {
    label: &'static str,
    state: TwoModeState,
    success_probability: f64,
    truncation_weight: f64,
}

fn prepare_resources(cfg: &RunConfig) -> Result<Vec<PreparedResource>, Error> {
    let mut out = Vec::new();
    let tmsv = two_mode_squeezed_vacuum(cfg.q, cfg.dim)?;
    if matches!(cfg.resource, Resource::Tmsv | Resource::Both) {
        out.push(PreparedResource {
            label: "tmsv",
            state: tmsv.normalize()?,
            success_probability: 1.0,
            truncation_weight: squeezed_vacuum_truncation_loss(cfg.q, cfg.dim),
        });
    }
    if matches!(cfg.resource, Resource::Subtracted | Resource::Both) {
        let event = cfg.event();
        let (state, probability) = subtract_photons_tmsv(cfg.q, &event, cfg.dim)?;
        out.push(PreparedResource {
            label: "subtracted",
            state: state.normalize()?,
            success_probability: probability,
            truncation_weight: tmsv_truncation_weight(cfg.q, &event, cfg.dim),
        });
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ResourceSummary {
    resource: &'static str,
    success_probability: f64,
    truncation_weight: f64,
    entanglement_entropy_bits: f64,
    averaged_fidelity: f64,
    captured_probability: f64,
    relative_probability_loss: f64,
    output_mean_photon_number: f64,
    fringe_visibility: Option<f64>,
    fringe_visibility_global: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TeleportSummary {
    config: RunConfig,
    input_fringe_visibility: Option<f64>,
    resources: Vec<ResourceSummary>,
    converged: bool,
}

#[derive(Debug, Serialize)]
struct OutcomeSummary {
    resource: &'static str,
    x0: f64,
    p1: f64,
    success_probability: f64,
    probability_density: f64,
    fidelity: Option<f64>,
    output: StateDocument,
}

fn write_wigner(dir: &Path, stem: &str, rho: &DensityMatrix, cfg: &RunConfig) -> std::io::Result<()> {
    let axis = linspace(-cfg.wigner_bound, cfg.wigner_bound, cfg.wigner_points);
    let grid = wigner_function(rho, &axis, &axis);
    let mut out = create(dir, &format!("{stem}.csv"))?;
    grid.write_csv(&mut out)?;
    out.flush()?;
    write_json(dir, &format!("{stem}.json"), &grid.header(rho.trace()))
}

fn write_quadrature(dir: &Path, stem: &str, xs: &[f64], pr: &[f64]) -> std::io::Result<()> {
    let mut out = create(dir, &format!("{stem}.csv"))?;
    write_quadrature_csv(xs, pr, &mut out)?;
    out.flush()
}

/// Full teleportation run: averaged density matrices, fidelities, Wigner
/// grids, outcome surfaces and quadrature fringes for each resource. With
/// `--outcome` only the conditional output at that outcome is produced.
pub fn cmd_teleport(cfg: &RunConfig) -> Result<u8, CommandError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let dir = cfg.out_dir.as_path();
    let input = odd_cat_state(cfg.alpha(), cfg.dim)?;
    let resources = prepare_resources(cfg)?;

    if let Some((x0, p1)) = cfg.outcome {
        let outcome = HomodyneOutcome::new(x0, p1)?;
        for res in &resources {
            let out = teleported_coefficients(&input, &res.state, &outcome)?;
            let density = out.norm_squared();
            let fidelity = conditional_fidelity(&input, &res.state, &outcome).ok();
            let summary = OutcomeSummary {
                resource: res.label,
                x0,
                p1,
                success_probability: res.success_probability,
                probability_density: density,
                fidelity,
                output: StateDocument::from(&out),
            };
            write_json(dir, &format!("outcome_{}.json", res.label), &summary)?;
            if density > 0.0 {
                write_wigner(dir, &format!("wigner_outcome_{}", res.label), &out.normalize()?.projector(), cfg)?;
            }
            println!(
                "{}: P(X0,P1) = {density:.6e}, fidelity = {}",
                res.label,
                fidelity.map_or("undefined".into(), |f| format!("{f:.6}"))
            );
        }
        return Ok(EXIT_OK);
    }

    let grid = OutcomeGrid::square(cfg.bound, cfg.order)?;
    let xs = linspace(-cfg.quadrature_bound, cfg.quadrature_bound, cfg.quadrature_points);
    let input_rho = input.projector();
    write_wigner(dir, "wigner_input", &input_rho, cfg)?;
    let input_pr = quadrature_distribution(&input_rho, &xs);
    write_quadrature(dir, "quadrature_input", &xs, &input_pr)?;
    let input_fringe_visibility = fringe_report(&input_pr, &xs).ok().map(|r| r.visibility);

    let surface_axis = linspace(-cfg.surface_bound, cfg.surface_bound, cfg.surface_points);
    let mut summaries = Vec::new();
    let mut converged = true;
    for res in &resources {
        let started = Instant::now();
        let avg = average_over_outcomes(&input, &res.state, &grid)?;
        let loss = avg.relative_loss();
        if loss.abs() > PROBABILITY_LOSS_WARNING || res.truncation_weight > TRUNCATION_WARNING {
            converged = false;
            eprintln!(
                "warning: {}: outcome-probability loss {loss:e}, truncation weight {:e}",
                res.label, res.truncation_weight
            );
        }
        let fidelity = avg.rho.expectation(&input)?;
        let pr = quadrature_distribution(&avg.rho, &xs);
        let report = fringe_report(&pr, &xs).ok();
        let global = global_fringe_visibility(&pr, &xs).ok();

        write_json(dir, &format!("rho_{}.json", res.label), &StateDocument::from(&avg.rho))?;
        write_wigner(dir, &format!("wigner_{}", res.label), &avg.rho, cfg)?;
        write_quadrature(dir, &format!("quadrature_{}", res.label), &xs, &pr)?;
        let surface = outcome_surface(&input, &res.state, &surface_axis, &surface_axis)?;
        let mut out = create(dir, &format!("surface_{}.csv", res.label))?;
        write_surface_csv(&surface, &mut out)?;
        out.flush()?;

        println!(
            "{}: averaged fidelity {fidelity:.6}, success probability {:.6}, visibility {} ({:.2} s)",
            res.label,
            res.success_probability,
            report.as_ref().map_or("n/a".into(), |r| format!("{:.4}", r.visibility)),
            started.elapsed().as_secs_f64()
        );
        summaries.push(ResourceSummary {
            resource: res.label,
            success_probability: res.success_probability,
            truncation_weight: res.truncation_weight,
            entanglement_entropy_bits: entanglement_entropy(&res.state, 2.0)?,
            averaged_fidelity: fidelity,
            captured_probability: avg.captured,
            relative_probability_loss: loss,
            output_mean_photon_number: avg.rho.mean_photon_number(),
            fringe_visibility: report.map(|r| r.visibility),
            fringe_visibility_global: global,
        });
    }
    let summary = TeleportSummary { config: cfg.clone(), input_fringe_visibility, resources: summaries, converged };
    write_json(dir, "teleport_summary.json", &summary)?;
    Ok(if converged { EXIT_OK } else { EXIT_CONVERGENCE })
}

/// One selftest line.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn deviation_check(name: &'static str, measured: Result<f64, Error>, tolerance: f64) -> Check {
    match measured {
        Ok(dev) => Check {
            name,
            passed: dev <= tolerance,
            detail: format!("deviation {dev:.3e} (tolerance {tolerance:.0e})"),
        },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn probe_outcomes() -> [HomodyneOutcome; 3] {
    [
        HomodyneOutcome { x0: 0.7, p1: -0.3 },
        HomodyneOutcome { x0: -1.1, p1: 0.4 },
        HomodyneOutcome { x0: 0.1, p1: 0.2 },
    ]
}

fn kernel_integral_deviation(dim: usize) -> f64 {
    let grid = default_oracle_grid();
    let size = dim.min(8);
    let mut worst = 0.0_f64;
    for o in probe_outcomes() {
        for m in 0..size {
            for k in 0..size {
                let (b, d) = grid.iter().fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |(b, d), (x, w)| {
                    let f = oscillator_eigenfunctions(size, x);
                    let g = oscillator_eigenfunctions(size, x - std::f64::consts::SQRT_2 * o.x0);
                    let u = oscillator_eigenfunctions(size, (x - o.x0) / std::f64::consts::SQRT_2);
                    let v = oscillator_eigenfunctions(size, (x + o.x0) / std::f64::consts::SQRT_2);
                    (
                        b + C64::from_polar(w * f[m] * g[k], std::f64::consts::SQRT_2 * o.p1 * x),
                        d + C64::from_polar(w * u[m] * v[k], -o.p1 * x),
                    )
                });
                worst = worst
                    .max((kernel_b(m, k, &o) * o.ordering_phase() - b).norm())
                    .max((kernel_d(m, k, &o) - d).norm());
            }
        }
    }
    worst
}

fn kernel_symmetry_deviation(dim: usize) -> f64 {
    let mut worst = 0.0_f64;
    for o in probe_outcomes() {
        let b = kernel_b_matrix(dim, &o);
        let d = kernel_d_matrix(&b);
        for m in 0..dim {
            for k in 0..dim {
                let sign = if (k + m) % 2 == 0 { 1.0 } else { -1.0 };
                worst = worst
                    .max((b.entries[(k, m)] - b.entries[(m, k)].conj() * sign).norm())
                    .max((d.entries[(m, k)] - b.entries[(k, m)].conj() * std::f64::consts::SQRT_2).norm());
            }
        }
    }
    worst
}

fn max_deviation<'a, A, B>(a: A, b: B) -> f64
where
    A: IntoIterator<Item = &'a C64>,
    B: IntoIterator<Item = &'a C64>,
{
    a.into_iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn subtraction_paths_deviation(q: f64, dim: usize) -> Result<f64, Error> {
    let tmsv = two_mode_squeezed_vacuum(q, dim)?;
    let mut worst = 0.0_f64;
    for n1 in 0..=4 {
        for n2 in 0..=4 {
            for r in [0.05, 0.15, 0.3] {
                let event = SubtractionEvent::new(n1, n2, r, r)?;
                let (general, _) = subtract_photons(&tmsv, &event)?;
                let (closed, _) = subtract_photons_tmsv(q, &event, dim)?;
                worst = worst.max(max_deviation(general.coeffs(), closed.coeffs()));
            }
        }
    }
    Ok(worst)
}

fn oracle_deviation(input: &SingleModeState, entangled: &TwoModeState) -> Result<f64, Error> {
    let grid = default_oracle_grid();
    let mut worst = 0.0_f64;
    for o in probe_outcomes() {
        let fock = teleported_coefficients(input, entangled, &o)?;
        let direct = teleport_oracle(input, entangled, &o, &grid)?;
        worst = worst.max(max_deviation(fock.coeffs(), direct.coeffs()));
    }
    Ok(worst)
}

/// Runs every cross-check for the given configuration.
pub fn selftest_checks(cfg: &RunConfig) -> Vec<Check> {
    let mut checks = vec![
        deviation_check("kernel B/D vs defining integrals", Ok(kernel_integral_deviation(cfg.dim)), 1e-8),
        deviation_check("kernel symmetry and D = sqrt2 B^dagger", Ok(kernel_symmetry_deviation(cfg.dim)), 1e-10),
        deviation_check("general vs closed-form subtraction", subtraction_paths_deviation(cfg.q, cfg.dim), 1e-12),
    ];

    let squeezed_loss = squeezed_vacuum_truncation_loss(cfg.q, cfg.dim);
    checks.push(Check {
        name: "squeezed-vacuum truncation",
        passed: squeezed_loss <= TRUNCATION_WARNING,
        detail: format!("weight beyond dim {} is {squeezed_loss:.3e} (limit {TRUNCATION_WARNING:.0e})", cfg.dim),
    });
    let subtracted_loss = tmsv_truncation_weight(cfg.q, &cfg.event(), cfg.dim);
    checks.push(Check {
        name: "subtracted-state truncation",
        passed: subtracted_loss <= TRUNCATION_WARNING,
        detail: format!("weight beyond dim {} is {subtracted_loss:.3e} (limit {TRUNCATION_WARNING:.0e})", cfg.dim),
    });
    let input = odd_cat_state(cfg.alpha(), cfg.dim);
    checks.push(Check {
        name: "input-state truncation",
        passed: input.is_ok(),
        detail: match &input {
            Ok(_) => "cat state fits the basis".into(),
            Err(e) => format!("error: {e}"),
        },
    });

    let entropy = two_mode_squeezed_vacuum(cfg.q, cfg.dim)
        .and_then(|s| entanglement_entropy(&s, 2.0))
        .map(|e| (e - tmsv_entropy_bits(cfg.q)).abs());
    checks.push(deviation_check("squeezed-vacuum entropy vs analytic", entropy, 1e-6));

    let input = input.unwrap_or_else(|_| SingleModeState::vacuum(cfg.dim).expect("dim >= 8"));
    let oracle = two_mode_squeezed_vacuum(cfg.q, cfg.dim).and_then(|ent| oracle_deviation(&input, &ent));
    checks.push(deviation_check("Fock pipeline vs wave-function oracle", oracle, 1e-6));

    let normalization = two_mode_squeezed_vacuum(cfg.q, cfg.dim)
        .and_then(|ent| {
            let ent = ent.normalize()?;
            let grid = OutcomeGrid::square(cfg.bound, cfg.order)?;
            average_over_outcomes(&input, &ent, &grid)
        })
        .map(|avg| (avg.captured - 1.0).abs());
    checks.push(deviation_check("outcome probability normalization", normalization, 1e-5));

    let gl = gauss_legendre(64, -8.0, 8.0).map(|g| (g.integrate(|x| (-x * x).exp()) - std::f64::consts::PI.sqrt()).abs());
    checks.push(deviation_check("Gauss-Legendre Gaussian integral", gl, 1e-12));
    checks
}

/// Prints one line per check; exit code 0 iff all pass.
pub fn cmd_selftest(cfg: &RunConfig) -> u8 {
    let checks = selftest_checks(cfg);
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.passed {
            failed += 1;
        }
    }
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_SELFTEST_FAILED
    }
}
