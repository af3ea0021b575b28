//! Command-line front end. [`run`] parses arguments, dispatches to a
//! subcommand and returns the process exit code: 0 on success, 1 for usage,
//! I/O and parse errors, 2 for numerical failures and failed checks.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{run_experiment, write_csv, ExperimentConfig, ExperimentSidecar, TableKind};
use crate::io::{
    complex_pair, read_json, read_system, to_json_string, write_json, DescriptorJson, MatrixJson, PerturbationFile,
    SystemFile, FORMAT_VERSION,
};
use crate::linalg::{frobenius_list, generalized_eigenvalues, norm2};
use crate::pencil::{
    build_even_pencil, pencil_eigenvalues, random_structured_perturbation, DiagnosticTolerances, StructuredPerturbation,
};
use crate::restore::{full_restoration, ConvergenceCertificate, PolarBound, RestorationOptions};
use crate::stability::{destabilizing_perturbation, stability_radius, Frequency, StabilityOptions};
use crate::systems::{popov_grid_minimum, random_strictly_passive, validate_ph, DescriptorSystem, GeneratorOptions};

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "PENCIL_RESTORE_THREADS";

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "pencil-restore",
    version,
    about = "Structure restoration for even pencils of port-Hamiltonian descriptor systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded strictly passive pH system (and its descriptor form).
    Generate {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generator options as JSON (`epsilon`, `e_shift`, `target_rho`).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random structured perturbation of norm `delta`.
    Perturb {
        system: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perturb the system's even pencil and restore its structure.
    Restore {
        system: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use this perturbation file instead of a seeded random one.
        #[arg(long, conflicts_with_all = ["delta", "seed"])]
        perturbation: Option<PathBuf>,
        /// Restoration options as JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the full JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON report instead of the summary.
        #[arg(long)]
        json: bool,
    },
    /// Distance of `(E, A)` to instability.
    StabilityRadius {
        system: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Regularity, index, imaginary-axis and Popov checks.
    CheckPassivity {
        system: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Seeded experiment tables as CSV (plus a full-precision JSON sidecar).
    Experiment {
        #[arg(value_enum)]
        kind: KindArg,
        /// Experiment configuration as JSON; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the configured seeds (repeatable).
        #[arg(long)]
        seed: Vec<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Override the table3 perturbation norm.
        #[arg(long)]
        delta: Option<f64>,
        /// CSV path; the sidecar goes next to it with a `.json` extension.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON sidecar instead of the CSV.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Table1,
    Table2,
    Table3,
}

impl From<KindArg> for TableKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Table1 => TableKind::Table1,
            KindArg::Table2 => TableKind::Table2,
            KindArg::Table3 => TableKind::Table3,
        }
    }
}

/// Outcome of a subcommand that ran to completion: checks may still fail.
enum Outcome {
    Pass,
    ChecksFailed,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(Outcome::Pass) => EXIT_OK,
        Ok(Outcome::ChecksFailed) => EXIT_NUMERICAL,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let threads: usize =
            v.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
                Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))
            })?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker threads: {e}")))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<Outcome> {
    match command {
        Command::Generate {
            n,
            m,
            seed,
            config,
            out: path,
        } => {
            let opts: GeneratorOptions = match config {
                Some(p) => read_json(&p)?,
                None => GeneratorOptions::default(),
            };
            let ph = random_strictly_passive(n, m, seed, &opts)?;
            emit(
                out,
                path.as_deref(),
                &to_json_string(&SystemFile::from_ph(&ph, Some(seed)))?,
            )?;
            Ok(Outcome::Pass)
        }
        Command::Perturb {
            system,
            delta,
            seed,
            out: path,
        } => {
            let sys = read_system(&system)?.descriptor()?;
            let p = random_structured_perturbation(sys.order(), sys.ports(), delta, seed)?;
            emit(
                out,
                path.as_deref(),
                &to_json_string(&PerturbationFile::new(&p, Some(seed), Some(delta)))?,
            )?;
            Ok(Outcome::Pass)
        }
        Command::Restore {
            system,
            delta,
            seed,
            perturbation,
            config,
            out: path,
            json,
        } => {
            let sys = read_system(&system)?.descriptor()?;
            let opts: RestorationOptions = match config {
                Some(p) => read_json(&p)?,
                None => RestorationOptions::default(),
            };
            let (pert, seed, delta) = match perturbation {
                Some(p) => {
                    let file: PerturbationFile = read_json(&p)?;
                    (file.perturbation()?, file.seed, file.delta)
                }
                None => (
                    random_structured_perturbation(sys.order(), sys.ports(), delta, seed)?,
                    Some(seed),
                    Some(delta),
                ),
            };
            let report = restore_report(&sys, &pert, seed, delta, &opts)?;
            let text = to_json_string(&report)?;
            if let Some(p) = &path {
                fs::write(p, &text)?;
            }
            if json {
                out.write_all(text.as_bytes())?;
            } else {
                write_restore_summary(out, &report)?;
            }
            Ok(Outcome::Pass)
        }
        Command::StabilityRadius {
            system,
            out: path,
            json,
        } => {
            let sys = read_system(&system)?.descriptor()?;
            let report = stability_report(&sys)?;
            let text = to_json_string(&report)?;
            if let Some(p) = &path {
                fs::write(p, &text)?;
            }
            if json {
                out.write_all(text.as_bytes())?;
            } else {
                writeln!(out, "rho        {:.6e}", report.rho)?;
                writeln!(
                    out,
                    "omega_star {}",
                    report.omega_star.map_or("inf".to_string(), |w| format!("{w:.6e}"))
                )?;
                if let Some([re, im]) = report.unstable_eigenvalue {
                    writeln!(out, "unstable eigenvalue {re:.6e} {im:+.6e}i")?;
                }
                if let (Some(de), Some(da)) = (report.destabilizer_e_norm, report.destabilizer_a_norm) {
                    writeln!(out, "|dE|_F     {de:.6e}")?;
                    writeln!(out, "|dA|_F     {da:.6e}")?;
                }
            }
            Ok(Outcome::Pass)
        }
        Command::CheckPassivity {
            system,
            out: path,
            json,
        } => {
            let file = read_system(&system)?;
            let mut report = passivity_report(&file.descriptor()?)?;
            report.ph_structure = ph_check(&file);
            report.passed &= report.ph_structure != Some(false);
            let text = to_json_string(&report)?;
            if let Some(p) = &path {
                fs::write(p, &text)?;
            }
            if json {
                out.write_all(text.as_bytes())?;
            } else {
                write_passivity_summary(out, &report)?;
            }
            Ok(if report.passed {
                Outcome::Pass
            } else {
                Outcome::ChecksFailed
            })
        }
        Command::Experiment {
            kind,
            config,
            seed,
            n,
            m,
            delta,
            out: path,
            json,
        } => {
            let kind = TableKind::from(kind);
            let mut cfg: ExperimentConfig = match config {
                Some(p) => read_json(&p)?,
                None => ExperimentConfig::default(),
            };
            if !seed.is_empty() {
                cfg.seeds = seed;
            }
            if let Some(n) = n {
                cfg.n = n;
            }
            if let Some(m) = m {
                cfg.m = m;
            }
            if let Some(d) = delta {
                cfg.table3_delta = d;
            }
            if path.is_some() {
                cfg.output_path = path.clone();
            }
            let pool = thread_pool()?;
            let rows = pool.install(|| run_experiment(kind, &cfg))?;
            let sidecar = ExperimentSidecar {
                kind,
                config: cfg.clone(),
                rows,
            };
            let mut csv_bytes = Vec::new();
            write_csv(kind, &sidecar.rows, &mut csv_bytes)?;
            if let Some(p) = &cfg.output_path {
                fs::write(p, &csv_bytes)?;
                write_json(&p.with_extension("json"), &sidecar)?;
            }
            if json {
                out.write_all(to_json_string(&sidecar)?.as_bytes())?;
            } else if cfg.output_path.is_none() {
                out.write_all(&csv_bytes)?;
            }
            Ok(Outcome::Pass)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorErrorsJson {
    pub de: MatrixJson,
    pub da: MatrixJson,
    pub db: MatrixJson,
    pub dc: MatrixJson,
    pub dd: MatrixJson,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhErrorsJson {
    #[serde(rename = "dR")]
    pub dr: MatrixJson,
    #[serde(rename = "dJ")]
    pub dj: MatrixJson,
    #[serde(rename = "dG")]
    pub dg: MatrixJson,
    #[serde(rename = "dP")]
    pub dp: MatrixJson,
    pub norm: f64,
}

/// JSON report of `restore`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestoreReport {
    pub format_version: u32,
    pub n: usize,
    pub m: usize,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    /// `‖(Δℰ, Δ𝒜)‖_F`.
    pub perturbation_norm: f64,
    /// `‖(ℰ + Δℰ, 𝒜 + Δ𝒜)‖_F`.
    pub scale: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub y_norm: f64,
    pub structure_defect: f64,
    pub z: MatrixJson,
    pub y21: MatrixJson,
    pub y12: MatrixJson,
    pub y22: MatrixJson,
    pub certificate: ConvergenceCertificate,
    pub linear_bound: Option<f64>,
    pub polar_bound: Option<PolarBound>,
    pub backward_errors_descriptor: DescriptorErrorsJson,
    pub backward_errors_ph: PhErrorsJson,
    pub restored: DescriptorJson,
}

pub fn restore_report(
    sys: &DescriptorSystem,
    pert: &StructuredPerturbation,
    seed: Option<u64>,
    delta: Option<f64>,
    opts: &RestorationOptions,
) -> Result<RestoreReport> {
    let scale = build_even_pencil(sys).perturbed(pert)?.norm();
    let r = full_restoration(sys, pert, opts)?;
    let d = &r.backward_errors_descriptor;
    let p = &r.backward_errors_ph;
    Ok(RestoreReport {
        format_version: FORMAT_VERSION,
        n: sys.order(),
        m: sys.ports(),
        seed,
        delta,
        perturbation_norm: pert.norm(),
        scale,
        iterations: r.iterations,
        residual_history: r.residual_history.clone(),
        y_norm: r.y_norm,
        structure_defect: r.structure_defect,
        z: (&r.z).into(),
        y21: (&r.y21).into(),
        y12: (&r.y12).into(),
        y22: (&r.y22).into(),
        certificate: r.certificate.clone(),
        linear_bound: r.linear_bound,
        polar_bound: r.polar_bound.clone(),
        backward_errors_descriptor: DescriptorErrorsJson {
            de: (&d.de).into(),
            da: (&d.da).into(),
            db: (&d.db).into(),
            dc: (&d.dc).into(),
            dd: (&d.dd).into(),
            norm: d.norm(),
        },
        backward_errors_ph: PhErrorsJson {
            dr: (&p.dr).into(),
            dj: (&p.dj).into(),
            dg: (&p.dg).into(),
            dp: (&p.dp).into(),
            norm: p.norm(),
        },
        restored: (&r.restored).into(),
    })
}

fn write_restore_summary(out: &mut dyn Write, r: &RestoreReport) -> Result<()> {
    writeln!(out, "n = {}, m = {}", r.n, r.m)?;
    writeln!(out, "perturbation norm      {:.6e}", r.perturbation_norm)?;
    writeln!(out, "pencil norm            {:.6e}", r.scale)?;
    writeln!(out, "iterations             {}", r.iterations)?;
    for (k, d) in r.residual_history.iter().enumerate() {
        writeln!(out, "  delta_{k:<2}             {d:.6e}")?;
    }
    writeln!(out, "|(Y21, Y12)|_F         {:.6e}", r.y_norm)?;
    writeln!(out, "structure defect       {:.6e}", r.structure_defect)?;
    let c = &r.certificate;
    writeln!(
        out,
        "certificate            delta = {:.6e}, kappa1 = {:.6e}, bound = {:.6e}, {}",
        c.delta,
        c.kappa1,
        c.solution_bound,
        if c.precondition_ok { "holds" } else { "not applicable" }
    )?;
    writeln!(
        out,
        "backward error (E,A,B,C,D) {:.6e}",
        r.backward_errors_descriptor.norm
    )?;
    writeln!(out, "backward error (R,J,G,P)   {:.6e}", r.backward_errors_ph.norm)?;
    Ok(())
}

/// JSON report of `stability-radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rho: f64,
    /// `None` stands for `ω* = ∞`.
    pub omega_star: Option<f64>,
    pub unstable_eigenvalue: Option<[f64; 2]>,
    /// Norms of the destabilizing perturbation; absent when `ω* = ∞`.
    pub destabilizer_e_norm: Option<f64>,
    pub destabilizer_a_norm: Option<f64>,
    pub destabilizer_norm: Option<f64>,
}

pub fn stability_report(sys: &DescriptorSystem) -> Result<StabilityReport> {
    let res = stability_radius(&sys.e, &sys.a, &StabilityOptions::default())?;
    let destabilizer = match res.omega_star {
        Frequency::Finite(_) => Some(destabilizing_perturbation(&res)?),
        Frequency::Infinite => None,
    };
    Ok(StabilityReport {
        rho: res.rho,
        omega_star: res.omega_star.finite(),
        unstable_eigenvalue: res.unstable_eigenvalue.map(complex_pair),
        destabilizer_e_norm: destabilizer.as_ref().map(|(de, _)| de.norm()),
        destabilizer_a_norm: destabilizer.as_ref().map(|(_, da)| da.norm()),
        destabilizer_norm: destabilizer.as_ref().map(|(de, da)| frobenius_list(&[de, da])),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopovMinimum {
    pub omega: f64,
    pub lambda_min: f64,
}

/// JSON report of `check-passivity`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassivityReport {
    /// Even pencil is regular.
    pub regular: bool,
    pub infinite_eigenvalues: usize,
    pub index_at_most_one: bool,
    pub imaginary_axis_eigenvalues: Vec<[f64; 2]>,
    /// Smallest eigenvalue of the Popov function on a logarithmic grid.
    pub popov_minimum: Option<PopovMinimum>,
    /// Finite eigenvalues of `(E, A)` on the imaginary axis.
    pub state_imaginary_eigenvalues: Vec<[f64; 2]>,
    /// Finite eigenvalues of `(E, A)` in the open right half-plane.
    pub state_unstable_eigenvalues: Vec<[f64; 2]>,
    /// `None` when the file holds no pH form that could be validated.
    pub ph_structure: Option<bool>,
    pub passed: bool,
}

pub fn passivity_report(sys: &DescriptorSystem) -> Result<PassivityReport> {
    let tol = DiagnosticTolerances::default();
    let diag = pencil_eigenvalues(&build_even_pencil(sys), &tol)?;
    let popov_minimum = if diag.regular {
        popov_grid_minimum(sys, 1e-4, 1e4, 100)
            .ok()
            .map(|(omega, lambda_min)| PopovMinimum { omega, lambda_min })
    } else {
        None
    };

    let scale = norm2(&sys.e).max(norm2(&sys.a));
    let mut state_imaginary = Vec::new();
    let mut state_unstable = Vec::new();
    for ev in generalized_eigenvalues(&sys.a, &sys.e)? {
        if let Some(l) = ev.finite(tol.infinite * scale) {
            if l.re.abs() <= tol.imaginary * (1.0 + l.norm()) {
                state_imaginary.push(l);
            } else if l.re > 0.0 {
                state_unstable.push(l);
            }
        }
    }
    let pairs = |v: &[Complex64]| v.iter().copied().map(complex_pair).collect::<Vec<_>>();

    let passed = diag.passivity_verdict
        && diag.infinite_count == sys.ports()
        && popov_minimum.as_ref().is_some_and(|p| p.lambda_min > 0.0)
        && state_imaginary.is_empty()
        && state_unstable.is_empty();
    Ok(PassivityReport {
        regular: diag.regular,
        infinite_eigenvalues: diag.infinite_count,
        index_at_most_one: diag.index_at_most_one,
        imaginary_axis_eigenvalues: pairs(&diag.imaginary_axis_eigenvalues),
        popov_minimum,
        state_imaginary_eigenvalues: pairs(&state_imaginary),
        state_unstable_eigenvalues: pairs(&state_unstable),
        ph_structure: None,
        passed,
    })
}

fn write_passivity_summary(out: &mut dyn Write, r: &PassivityReport) -> Result<()> {
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    if !r.regular {
        writeln!(out, "even pencil is singular")?;
    }
    writeln!(out, "regular                    {}", mark(r.regular))?;
    writeln!(out, "infinite eigenvalues       {}", r.infinite_eigenvalues)?;
    writeln!(out, "index at most one          {}", mark(r.index_at_most_one))?;
    writeln!(
        out,
        "imaginary-axis eigenvalues {} ({})",
        r.imaginary_axis_eigenvalues.len(),
        mark(r.imaginary_axis_eigenvalues.is_empty())
    )?;
    match &r.popov_minimum {
        Some(p) => writeln!(
            out,
            "Popov minimum              {:.6e} at omega = {:.6e} ({})",
            p.lambda_min,
            p.omega,
            mark(p.lambda_min > 0.0)
        )?,
        None => writeln!(out, "Popov minimum              unavailable (FAIL)")?,
    }
    for [re, im] in &r.state_imaginary_eigenvalues {
        writeln!(
            out,
            "state pencil eigenvalue on the imaginary axis: {re:.6e} {im:+.6e}i"
        )?;
    }
    for [re, im] in &r.state_unstable_eigenvalues {
        writeln!(out, "unstable state pencil eigenvalue: {re:.6e} {im:+.6e}i")?;
    }
    if let Some(ok) = r.ph_structure {
        writeln!(out, "pH structure               {}", mark(ok))?;
    }
    writeln!(out, "{}", if r.passed { "PASSED" } else { "FAILED" })?;
    Ok(())
}

/// `check-passivity` additionally validates the pH form when the file has one.
fn ph_check(file: &SystemFile) -> Option<bool> {
    file.ph
        .as_ref()
        .and_then(|p| p.to_system().ok())
        .map(|ph| validate_ph(&ph, 1e-10).passed)
}
