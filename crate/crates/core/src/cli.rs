//! Scene files, reports and the `fqft-lab` command implementations.
//!
//! Commands return their output as a string with an exit code so the binary
//! stays a thin wrapper and tests can drive everything in-process.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::fock::DEFAULT_TRUNCATION;
use crate::fqft::{
    amplitude_with, glue_and_trace, verify_functoriality, Normalization, VerifyOptions,
    VerifyTolerances, MODE_DECOUPLING_TOL,
};
use crate::geom::{
    mode_frequencies, required_k_max, BordismScene, CircleObject, CylinderMorphism, PortRef,
    TheoryConfig, Wire,
};
use crate::zeta::{logdet_circle_continued, EpsteinZeta1D, LogDet, SeriesControl};

pub const REPORT_SCHEMA: &str = "fqft-lab/report/v1";
pub const DEFAULT_BLOCK_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_PREFACTOR_TOLERANCE: f64 = 1e-6;
/// Upper limit on the adaptive mode cutoff.
pub const MAX_ADAPTIVE_K: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid scene: {0}")]
    Scene(Error),
    #[error(transparent)]
    Compute(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySection {
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_degree: Option<usize>,
    /// Prefactor residual tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleEntry {
    pub label: String,
    pub circumference: f64,
    #[serde(default)]
    pub holonomy_angles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderEntry {
    pub label: String,
    pub circle: String,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireEntry {
    pub from_port: String,
    pub to_port: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub theory: TheorySection,
    pub circles: Vec<CircleEntry>,
    pub cylinders: Vec<CylinderEntry>,
    #[serde(default)]
    pub wiring: Vec<WireEntry>,
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// The mode cutoff: the configured one, or the smallest with every neglected
    /// `e^{−ωL}` below [`MODE_DECOUPLING_TOL`].
    pub fn effective_k_max(&self) -> usize {
        if let Some(k) = self.theory.k_max {
            return k;
        }
        let ell = self
            .circles
            .iter()
            .map(|c| c.circumference)
            .fold(0.0, f64::max);
        let min_len = self
            .cylinders
            .iter()
            .map(|c| c.length)
            .fold(f64::INFINITY, f64::min);
        if !(ell > 0.0 && min_len.is_finite() && min_len > 0.0) {
            return 1;
        }
        required_k_max(ell, min_len, MODE_DECOUPLING_TOL).min(MAX_ADAPTIVE_K)
    }

    pub fn tolerances(&self) -> VerifyTolerances {
        VerifyTolerances {
            block: self
                .theory
                .block_tolerance
                .unwrap_or(DEFAULT_BLOCK_TOLERANCE),
            prefactor: self.theory.tolerance.unwrap_or(DEFAULT_PREFACTOR_TOLERANCE),
            ..VerifyTolerances::default()
        }
    }

    pub fn to_scene(&self) -> Result<BordismScene, CliError> {
        let scene_err = CliError::Scene;
        let theory = TheoryConfig::new(
            self.theory.mass,
            self.effective_k_max(),
            self.theory.truncation_degree.unwrap_or(DEFAULT_TRUNCATION),
        )
        .map_err(scene_err)?;
        let mut circles = BTreeMap::new();
        for c in &self.circles {
            let obj =
                CircleObject::new(c.circumference, c.holonomy_angles.clone()).map_err(scene_err)?;
            if circles.insert(c.label.clone(), obj).is_some() {
                return Err(CliError::Scene(Error::Scene(format!(
                    "duplicate circle label {:?}",
                    c.label
                ))));
            }
        }
        let cylinders = self
            .cylinders
            .iter()
            .map(|c| {
                let y = circles.get(&c.circle).ok_or_else(|| {
                    Error::Scene(format!(
                        "cylinder {:?} refers to unknown circle {:?}",
                        c.label, c.circle
                    ))
                })?;
                CylinderMorphism::new(c.label.clone(), y.clone(), c.length)
            })
            .collect::<Result<Vec<_>, Error>>()
            .map_err(scene_err)?;
        let wiring = self
            .wiring
            .iter()
            .map(|w| {
                Ok(Wire {
                    from: w.from_port.parse::<PortRef>()?,
                    to: w.to_port.parse::<PortRef>()?,
                })
            })
            .collect::<Result<Vec<_>, Error>>()
            .map_err(scene_err)?;
        BordismScene::new(theory, circles, cylinders, wiring).map_err(scene_err)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fqft-lab",
    version,
    about = "Gaussian functorial field theory on circles and flat cylinders"
)]
pub struct Cli {
    /// Worker threads; 1 gives bitwise-reproducible reports.
    #[arg(long, global = true, env = "FQFT_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    pub timings: bool,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check composition, traces and determinant identities for a scene.
    Verify(SceneArgs),
    /// Zeta-regularized log-determinants.
    Zeta {
        #[command(subcommand)]
        operator: ZetaCommand,
    },
    /// Mode table of a circle.
    Spectrum(SpectrumArgs),
    /// Amplitudes of the glued cylinders of a scene and traces of its tori.
    Amplitude(SceneArgs),
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    pub scene: PathBuf,
    /// Drop the zeta prefactors and check the composition scalars instead.
    #[arg(long)]
    pub projective: bool,
    /// Prefactor residual tolerance (overrides the scene).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Block residual tolerance (overrides the scene).
    #[arg(long)]
    pub block_tolerance: Option<f64>,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct CircleArgs {
    /// Circumference.
    #[arg(long = "l")]
    pub ell: f64,
    #[arg(long = "m")]
    pub mass: f64,
    /// Twist angle of a line bundle.
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
}

#[derive(Debug, Subcommand)]
pub enum ZetaCommand {
    Circle(CircleArgs),
    Cylinder {
        #[command(flatten)]
        circle: CircleArgs,
        #[arg(long = "L")]
        length: f64,
    },
    Torus {
        #[command(flatten)]
        circle: CircleArgs,
        #[arg(long = "L")]
        length: f64,
    },
    Dtn {
        #[command(flatten)]
        circle: CircleArgs,
        #[arg(long = "L1")]
        l1: f64,
        #[arg(long = "L2")]
        l2: f64,
    },
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long = "l")]
    pub ell: f64,
    #[arg(long = "m")]
    pub mass: f64,
    /// Monodromy eigen-angles, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub holonomy: Option<Vec<f64>>,
    #[arg(long, default_value_t = 8)]
    pub k_max: usize,
    /// Cylinder length; adds the per-mode decay `e^{−ωL}`.
    #[arg(long = "L")]
    pub length: Option<f64>,
    #[arg(long)]
    pub csv: bool,
}

/// Exit code and the text destined for the report sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub output: String,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let start = Instant::now();
    let mut report = match pool.install(|| dispatch(&cli.command))? {
        Output::Report(r) => r,
        Output::Text(text) => {
            return Ok(Outcome {
                exit_code: 0,
                output: text,
            })
        }
    };
    if cli.timings {
        report.timings = Some(Timings {
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    let exit_code = if report.passed == Some(false) { 1 } else { 0 };
    Ok(Outcome {
        exit_code,
        output: report.to_json(),
    })
}

pub enum Output {
    Report(Report),
    Text(String),
}

fn dispatch(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Verify(args) => cmd_verify(args).map(Output::Report),
        Command::Amplitude(args) => cmd_amplitude(args).map(Output::Report),
        Command::Zeta { operator } => cmd_zeta(operator).map(Output::Report),
        Command::Spectrum(args) => cmd_spectrum(args),
    }
}

fn scene_inputs(file: &SceneFile, normalization: Normalization, tol: &VerifyTolerances) -> Value {
    json!({
        "scene": file,
        "effective_k_max": file.effective_k_max(),
        "normalization": normalization,
        "tolerances": tol,
    })
}

fn load_scene(args: &SceneArgs) -> Result<(SceneFile, BordismScene, VerifyOptions), CliError> {
    let file = SceneFile::load(&args.scene)?;
    let scene = file.to_scene()?;
    let mut tolerances = file.tolerances();
    if let Some(t) = args.tolerance {
        tolerances.prefactor = t;
    }
    if let Some(t) = args.block_tolerance {
        tolerances.block = t;
    }
    let normalization = if args.projective {
        Normalization::Projective
    } else {
        Normalization::Zeta
    };
    Ok((
        file,
        scene,
        VerifyOptions {
            normalization,
            tolerances,
            series: SeriesControl::default(),
        },
    ))
}

pub fn cmd_verify(args: &SceneArgs) -> Result<Report, CliError> {
    let (file, scene, opts) = load_scene(args)?;
    let report = verify_functoriality(&scene, &opts)?;
    Ok(Report {
        schema: REPORT_SCHEMA,
        command: "verify".into(),
        inputs: scene_inputs(&file, opts.normalization, &opts.tolerances),
        passed: Some(report.passed),
        result: serde_json::to_value(&report).expect("report serializes"),
        timings: None,
    })
}

pub fn cmd_amplitude(args: &SceneArgs) -> Result<Report, CliError> {
    let (file, scene, opts) = load_scene(args)?;
    let (glued, tori) = glue_and_trace(&scene, &opts)?;
    let mut cylinders = Vec::new();
    for c in glued.cylinders() {
        let a = amplitude_with(c, scene.theory(), opts.normalization, &opts.series)?;
        let modes: Vec<Value> = a
            .blocks()
            .map(|b| {
                json!({
                    "component": b.mode.label.component,
                    "k": b.mode.label.k,
                    "omega": b.mode.omega,
                    "multiplicity": b.mode.multiplicity,
                    "coupling": b.cayley.matrix()[(0, 1)],
                })
            })
            .collect();
        cylinders.push(json!({
            "label": c.label(),
            "parts": c.parts(),
            "length": c.length(),
            "log_prefactor": a.log_prefactor(),
            "error_estimate": a.error_estimate(),
            "modes": modes,
        }));
    }
    Ok(Report {
        schema: REPORT_SCHEMA,
        command: "amplitude".into(),
        inputs: scene_inputs(&file, opts.normalization, &opts.tolerances),
        passed: None,
        result: json!({ "cylinders": cylinders, "tori": tori }),
        timings: None,
    })
}

fn method_entry(name: &str, d: &LogDet) -> Value {
    json!({ "name": name, "logdet": d })
}

/// Largest pairwise difference between the values.
fn max_delta(ds: &[LogDet]) -> f64 {
    let mut out = 0.0f64;
    for (i, a) in ds.iter().enumerate() {
        for b in &ds[i + 1..] {
            out = out.max((a.value - b.value).abs());
        }
    }
    out
}

pub fn cmd_zeta(command: &ZetaCommand) -> Result<Report, CliError> {
    let ctl = SeriesControl::default();
    let epstein = |c: &CircleArgs| EpsteinZeta1D::new(c.ell, c.mass, c.theta).map_err(usage);
    let (name, params, methods): (&str, Value, Vec<(&str, LogDet)>) = match command {
        ZetaCommand::Circle(c) => {
            let z = epstein(c)?;
            (
                "circle",
                json!({ "l": c.ell, "m": c.mass, "theta": c.theta }),
                vec![
                    ("closed-form", crate::zeta::logdet_circle(&z)),
                    ("continuation", logdet_circle_continued(&z, &ctl)?),
                ],
            )
        }
        ZetaCommand::Cylinder { circle, length } => {
            let z = epstein(circle)?;
            check_positive("L", *length)?;
            let direct = crate::zeta::logdet_cylinder_dirichlet(&z, *length, &ctl)?;
            // the same determinant reassembled from two halves and their DtN sum
            let half = crate::zeta::logdet_cylinder_dirichlet(&z, length / 2.0, &ctl)?;
            let dtn = crate::zeta::logdet_dtn_sum(&z, length / 2.0, length / 2.0, &ctl)?;
            let glued = LogDet {
                value: 2.0 * half.value + dtn.value,
                method: half.method,
                error_estimate: 2.0 * half.error_estimate + dtn.error_estimate,
            };
            (
                "cylinder",
                json!({ "l": circle.ell, "m": circle.mass, "theta": circle.theta, "L": length }),
                vec![("continuation", direct), ("halves-glued", glued)],
            )
        }
        ZetaCommand::Torus { circle, length } => {
            let z = epstein(circle)?;
            check_positive("L", *length)?;
            let mut methods = vec![(
                "continuation",
                crate::zeta::logdet_torus(&z, *length, &ctl)?,
            )];
            if z.twist() == 0.0 {
                let swapped = EpsteinZeta1D::untwisted(*length, circle.mass)?;
                methods.push((
                    "swapped-circles",
                    crate::zeta::logdet_torus(&swapped, circle.ell, &ctl)?,
                ));
            }
            (
                "torus",
                json!({ "l": circle.ell, "m": circle.mass, "theta": circle.theta, "L": length }),
                methods,
            )
        }
        ZetaCommand::Dtn { circle, l1, l2 } => {
            let z = epstein(circle)?;
            check_positive("L1", *l1)?;
            check_positive("L2", *l2)?;
            (
                "dtn",
                json!({ "l": circle.ell, "m": circle.mass, "theta": circle.theta, "L1": l1, "L2": l2 }),
                vec![(
                    "continuation",
                    crate::zeta::logdet_dtn_sum(&z, *l1, *l2, &ctl)?,
                )],
            )
        }
    };
    let values: Vec<LogDet> = methods.iter().map(|(_, d)| *d).collect();
    let tolerance: f64 = values
        .iter()
        .map(|d| d.error_estimate)
        .sum::<f64>()
        .max(1e-10);
    let delta = max_delta(&values);
    Ok(Report {
        schema: REPORT_SCHEMA,
        command: format!("zeta {name}"),
        inputs: params,
        passed: Some(delta <= tolerance),
        result: json!({
            "methods": methods.iter().map(|(n, d)| method_entry(n, d)).collect::<Vec<_>>(),
            "agreement_delta": delta,
        }),
        timings: None,
    })
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<Output, CliError> {
    let circle =
        CircleObject::new(args.ell, args.holonomy.clone().unwrap_or_default()).map_err(usage)?;
    let cfg = TheoryConfig::new(args.mass, args.k_max, DEFAULT_TRUNCATION).map_err(usage)?;
    if let Some(l) = args.length {
        check_positive("L", l)?;
    }
    let spectrum = mode_frequencies(&circle, &cfg);
    let twisted = args.holonomy.is_some();
    if args.csv {
        let mut out = String::from("k,omega,multiplicity");
        if twisted {
            out.push_str(",twist");
        }
        if args.length.is_some() {
            out.push_str(",decay");
        }
        out.push('\n');
        for m in spectrum.modes() {
            out.push_str(&format!("{},{},{}", m.label.k, m.omega, m.multiplicity));
            if twisted {
                out.push_str(&format!(",{}", m.label.twist));
            }
            if let Some(l) = args.length {
                out.push_str(&format!(",{:e}", (-m.omega * l).exp()));
            }
            out.push('\n');
        }
        return Ok(Output::Text(out));
    }
    let modes: Vec<Value> = spectrum
        .modes()
        .iter()
        .map(|m| {
            let mut v = json!({ "k": m.label.k, "omega": m.omega, "multiplicity": m.multiplicity });
            if twisted {
                v["twist"] = json!(m.label.twist);
            }
            if let Some(l) = args.length {
                v["decay"] = json!((-m.omega * l).exp());
            }
            v
        })
        .collect();
    let report = Report {
        schema: REPORT_SCHEMA,
        command: "spectrum".into(),
        inputs: json!({ "l": args.ell, "m": args.mass, "holonomy": args.holonomy, "k_max": args.k_max, "L": args.length }),
        passed: None,
        result: json!({ "modes": modes }),
        timings: None,
    };
    Ok(Output::Report(report))
}
