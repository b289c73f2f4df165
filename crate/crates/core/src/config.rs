//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments run to the end of the line
//! n = 2
//! rel_tol = 1e-12
//! bracket_lo = 0.001
//! ```
//!
//! Unknown or repeated keys are rejected. [`RunConfig::to_text`] writes every
//! set key, so parsing its output gives back an equal value.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::StepperConfig;
use crate::ode::ShrinkerParams;
use crate::shooting::ShootOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: u32,
    pub b: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub event_tol: f64,
    pub s_max: f64,
    pub x_max: f64,
    pub x_min: f64,
    pub bracket_lo: Option<f64>,
    pub bracket_hi: Option<f64>,
    pub param_tol: f64,
    pub closure_tol: f64,
    pub out_dir: Option<PathBuf>,
    /// Azimuthal segments of a surface mesh.
    pub segments: usize,
    /// Profile samples of a surface mesh; `None` keeps the integrator's.
    pub samples: Option<usize>,
    pub plot_width: u32,
    pub plot_height: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = StepperConfig::default();
        let o = ShootOptions::default();
        RunConfig {
            n: 2,
            b: None,
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            max_step: s.max_step,
            event_tol: s.event_tol,
            s_max: s.s_max,
            x_max: s.x_max,
            x_min: s.x_min,
            bracket_lo: None,
            bracket_hi: None,
            param_tol: o.param_tol,
            closure_tol: o.closure_tol,
            out_dir: None,
            segments: 64,
            samples: None,
            plot_width: 640,
            plot_height: 640,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid value {raw:?} for {key}")))
}

impl RunConfig {
    /// Parses configuration text, starting from the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, val)) = content.split_once('=') else {
                return Err(Error::Config(format!("line {line}: expected key = value")));
            };
            let (key, val) = (key.trim(), val.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {line}: duplicate key {key}")));
            }
            match key {
                "n" => cfg.n = value(key, val, line)?,
                "b" => cfg.b = Some(value(key, val, line)?),
                "rel_tol" => cfg.rel_tol = value(key, val, line)?,
                "abs_tol" => cfg.abs_tol = value(key, val, line)?,
                "max_step" => cfg.max_step = value(key, val, line)?,
                "event_tol" => cfg.event_tol = value(key, val, line)?,
                "s_max" => cfg.s_max = value(key, val, line)?,
                "x_max" => cfg.x_max = value(key, val, line)?,
                "x_min" => cfg.x_min = value(key, val, line)?,
                "bracket_lo" => cfg.bracket_lo = Some(value(key, val, line)?),
                "bracket_hi" => cfg.bracket_hi = Some(value(key, val, line)?),
                "param_tol" => cfg.param_tol = value(key, val, line)?,
                "closure_tol" => cfg.closure_tol = value(key, val, line)?,
                "out_dir" => cfg.out_dir = Some(PathBuf::from(val)),
                "segments" => cfg.segments = value(key, val, line)?,
                "samples" => cfg.samples = Some(value(key, val, line)?),
                "plot_width" => cfg.plot_width = value(key, val, line)?,
                "plot_height" => cfg.plot_height = value(key, val, line)?,
                _ => return Err(Error::Config(format!("line {line}: unknown key {key}"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Renders every set key. Floats use the shortest representation that
    /// reads back to the same value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("n", self.n.to_string());
        if let Some(b) = self.b {
            put("b", format!("{b:?}"));
        }
        put("rel_tol", format!("{:?}", self.rel_tol));
        put("abs_tol", format!("{:?}", self.abs_tol));
        put("max_step", format!("{:?}", self.max_step));
        put("event_tol", format!("{:?}", self.event_tol));
        put("s_max", format!("{:?}", self.s_max));
        put("x_max", format!("{:?}", self.x_max));
        put("x_min", format!("{:?}", self.x_min));
        if let Some(v) = self.bracket_lo {
            put("bracket_lo", format!("{v:?}"));
        }
        if let Some(v) = self.bracket_hi {
            put("bracket_hi", format!("{v:?}"));
        }
        put("param_tol", format!("{:?}", self.param_tol));
        put("closure_tol", format!("{:?}", self.closure_tol));
        if let Some(d) = &self.out_dir {
            put("out_dir", d.display().to_string());
        }
        put("segments", self.segments.to_string());
        if let Some(s) = self.samples {
            put("samples", s.to_string());
        }
        put("plot_width", self.plot_width.to_string());
        put("plot_height", self.plot_height.to_string());
        out
    }

    pub fn params(&self) -> Result<ShrinkerParams> {
        ShrinkerParams::with_dimension(self.n)
    }

    pub fn stepper(&self) -> Result<StepperConfig> {
        let c = StepperConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            event_tol: self.event_tol,
            s_max: self.s_max,
            x_max: self.x_max,
            x_min: self.x_min,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn shoot_options(&self) -> Result<ShootOptions> {
        if !(self.param_tol > 0.0 && self.closure_tol > 0.0) {
            return Err(Error::Config(
                "param_tol and closure_tol must be positive".into(),
            ));
        }
        Ok(ShootOptions {
            param_tol: self.param_tol,
            closure_tol: self.closure_tol,
            ..ShootOptions::default()
        })
    }

    /// The configured bracket, with either end falling back to `default`.
    pub fn bracket(&self, default: (f64, f64)) -> (f64, f64) {
        (
            self.bracket_lo.unwrap_or(default.0),
            self.bracket_hi.unwrap_or(default.1),
        )
    }
}
