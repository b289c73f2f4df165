//! The `shrinker` command line.
//!
//! Every subcommand writes its results as files into the output directory and
//! reports progress on stderr. Exit codes: 0 on success, 1 when the
//! computation fails, 2 for usage or configuration errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::export::{profile_curve, write_curve_csv, write_json};
use crate::mesh::{write_mesh, MeshSpec};
use crate::plot::{crossing_markers, event_markers, write_svg_plot, Marker};
use crate::shooting::{
    assemble_closed_curve, find_sphere_height, find_torus_radius, trace_profile, ShootReport,
    SPHERE_BRACKET, TORUS_BRACKET,
};
use crate::verify::{run_suite, Status};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SHRINKER_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "shrinker",
    version,
    about = "Rotationally symmetric self-shrinker profiles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace the profile launched from the axis at height --b.
    Trace,
    /// Shoot for the axis height that closes into an immersed sphere.
    ShootSphere,
    /// Shoot for the radius that closes into a torus.
    ShootTorus,
    /// Evaluate the analytic bounds at height --b.
    Verify,
    /// Write an OBJ surface of revolution.
    Mesh {
        #[arg(long, value_enum, default_value_t = Shape::Sphere)]
        shape: Shape,
    },
    /// Write an SVG plot of a closed profile.
    Plot {
        #[arg(long, value_enum, default_value_t = Shape::Sphere)]
        shape: Shape,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    /// The immersed sphere found by shooting.
    Sphere,
    /// The torus found by shooting.
    Torus,
    /// The round sphere of radius 2.
    Round,
}

impl Shape {
    fn stem(self) -> &'static str {
        match self {
            Shape::Sphere => "sphere",
            Shape::Torus => "torus",
            Shape::Round => "round",
        }
    }
}

/// Flags that override values from `--config`.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub n: Option<u32>,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, global = true)]
    pub bracket_lo: Option<f64>,
    #[arg(long, global = true)]
    pub bracket_hi: Option<f64>,
    /// Output directory. Defaults to $SHRINKER_OUT_DIR, then the current one.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub segments: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

impl Overrides {
    /// The configuration file (if any) with the flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).map_err(|e| match e {
                // An unreadable config file is the caller's mistake.
                Error::Io { path, source } => {
                    Error::Config(format!("{}: {source}", path.display()))
                }
                other => other,
            })?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.b {
            cfg.b = Some(v);
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.rel_tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            cfg.abs_tol = v;
        }
        if let Some(v) = self.bracket_lo {
            cfg.bracket_lo = Some(v);
        }
        if let Some(v) = self.bracket_hi {
            cfg.bracket_hi = Some(v);
        }
        if let Some(v) = &self.out {
            cfg.out_dir = Some(v.clone());
        }
        if let Some(v) = self.segments {
            cfg.segments = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = Some(v);
        }
        Ok(cfg)
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn required_b(cfg: &RunConfig) -> Result<f64> {
    cfg.b
        .ok_or_else(|| Error::Config("this command needs an axis height (--b or b = ...)".into()))
}

fn wrote(path: &Path) {
    eprintln!("wrote {}", path.display());
}

fn shoot_sphere(cfg: &RunConfig) -> Result<ShootReport> {
    let report = find_sphere_height(
        &cfg.params()?,
        &cfg.stepper()?,
        cfg.bracket(SPHERE_BRACKET),
        &cfg.shoot_options()?,
    )?;
    eprintln!(
        "b0 = {:.15} after {} iterations, closure residual {:.2e}, {} self-intersections",
        report.root,
        report.iterations,
        report.closure_residual,
        report.self_intersections.len()
    );
    Ok(report)
}

fn shoot_torus(cfg: &RunConfig) -> Result<ShootReport> {
    let report = find_torus_radius(
        &cfg.params()?,
        &cfg.stepper()?,
        cfg.bracket(TORUS_BRACKET),
        &cfg.shoot_options()?,
    )?;
    eprintln!(
        "r0 = {:.15} after {} iterations, closure residual {:.2e}",
        report.root, report.iterations, report.closure_residual
    );
    Ok(report)
}

/// A closed profile and its plot markers.
fn closed_shape(shape: Shape, cfg: &RunConfig) -> Result<(ClosedCurve, Vec<Marker>)> {
    match shape {
        Shape::Sphere | Shape::Torus => {
            let r = if shape == Shape::Sphere {
                shoot_sphere(cfg)?
            } else {
                shoot_torus(cfg)?
            };
            let mut markers = event_markers(&r.events, true);
            markers.extend(crossing_markers(&r.self_intersections));
            Ok((r.closed_curve, markers))
        }
        Shape::Round => {
            let d = trace_profile(2.0, &cfg.params()?, &cfg.stepper()?)?;
            let curve = assemble_closed_curve(&d, cfg.closure_tol)?;
            Ok((curve, event_markers(&d.gamma.events, true)))
        }
    }
}

fn write_shoot_outputs(stem: &str, report: &ShootReport, cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg);
    let json = dir.join(format!("{stem}_report.json"));
    write_json(report, &json)?;
    wrote(&json);
    let csv = dir.join(format!("{stem}_curve.csv"));
    write_curve_csv(&report.closed_curve, &csv)?;
    wrote(&csv);
    let mut markers = event_markers(&report.events, true);
    markers.extend(crossing_markers(&report.self_intersections));
    let svg = dir.join(format!("{stem}.svg"));
    write_svg_plot(
        &[&report.closed_curve],
        &markers,
        cfg.plot_width,
        cfg.plot_height,
        &svg,
    )?;
    wrote(&svg);
    Ok(())
}

/// Runs one parsed command.
pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = cli.overrides.resolve()?;
    let dir = out_dir(&cfg);
    match &cli.command {
        Command::Trace => {
            let d = trace_profile(required_b(&cfg)?, &cfg.params()?, &cfg.stepper()?)?;
            let csv = dir.join("profile.csv");
            write_curve_csv(&profile_curve(&d), &csv)?;
            wrote(&csv);
            let json = dir.join("events.json");
            write_json(&d.events(), &json)?;
            wrote(&json);
        }
        Command::ShootSphere => write_shoot_outputs("sphere", &shoot_sphere(&cfg)?, &cfg)?,
        Command::ShootTorus => write_shoot_outputs("torus", &shoot_torus(&cfg)?, &cfg)?,
        Command::Verify => {
            let b = required_b(&cfg)?;
            let reports = run_suite(b, &cfg.params()?, &cfg.stepper()?)?;
            let count = |s: Status| reports.iter().filter(|r| r.status == s).count();
            for r in reports.iter().filter(|r| r.status == Status::Fail) {
                let tag = if r.expected_fail { " (expected)" } else { "" };
                eprintln!("FAIL {}{tag}: lhs {:e}, rhs {:e}", r.claim_id, r.lhs, r.rhs);
            }
            eprintln!(
                "{} pass, {} fail, {} not applicable",
                count(Status::Pass),
                count(Status::Fail),
                count(Status::NotApplicable)
            );
            let json = dir.join("verify_report.json");
            write_json(&reports, &json)?;
            wrote(&json);
        }
        Command::Mesh { shape } => {
            let (curve, _) = closed_shape(*shape, &cfg)?;
            let mesh = MeshSpec::revolve(&curve, cfg.segments, cfg.samples, cfg.closure_tol)?;
            eprintln!(
                "{} vertices, {} faces, Euler characteristic {}",
                mesh.vertices.len(),
                mesh.faces.len(),
                mesh.euler_characteristic()
            );
            let obj = dir.join(format!("{}.obj", shape.stem()));
            write_mesh(&mesh, &obj)?;
            wrote(&obj);
        }
        Command::Plot { shape } => {
            let (curve, markers) = closed_shape(*shape, &cfg)?;
            let svg = dir.join(format!("{}.svg", shape.stem()));
            write_svg_plot(&[&curve], &markers, cfg.plot_width, cfg.plot_height, &svg)?;
            wrote(&svg);
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_computational() {
                1
            } else {
                2
            }
        }
    }
}
