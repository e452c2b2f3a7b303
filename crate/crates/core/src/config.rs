//! Experiment configuration files.
//!
//! A config is a TOML document with one table per stage:
//!
//! ```toml
//! seed = 7
//!
//! [surface]
//! kind = "sphere"          # sphere | power | cylinder
//! n = 3
//! # power:    k = 2.0, radius = 1.0
//! # cylinder: radius = 1.0, omega = "band[1,0,1]", omega_box = [[0.0, 1.0]]
//!
//! [partition]
//! scheme = "intervals"     # intervals | digit-blocks | custom
//! r = 2
//! # digit-blocks: base = 3, positions = [1, 2, 3]
//! # custom:       classes = ["x2 > 0"]
//!
//! [cover]
//! parts = ["sector[0,0.5)", "sector[0.5,1)"]
//!
//! [harness]                # all optional
//! grid = 2048
//! samples_per_cell = 1000
//! certificate_samples = 100000
//! validation_samples = 100000
//! bisection_steps = 5
//! z = 3.0
//!
//! [output]                 # all optional, relative to the config file
//! report = "report.json"
//! slices = "slices.csv"
//! objective = "objective.csv"
//! ```
//!
//! Errors carry the file, line and column they refer to. Errors inside a
//! cover or class expression point into the config file itself.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::Spanned;

use crate::geometry::{Omega, SurfaceSpec};
use crate::harness::SearchConfig;
use crate::lang::{line_col, ParseError, SetExpr};
use crate::partition::BasePartition;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Invalid { path: String, line: usize, column: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSettings {
    /// Base-angle grid size `G`.
    pub grid: usize,
    pub samples_per_cell: u64,
    pub certificate_samples: u64,
    /// Samples used to estimate the mass a cover misses.
    pub validation_samples: u64,
    pub bisection_steps: u32,
    pub z: f64,
}

impl Default for HarnessSettings {
    fn default() -> Self {
        HarnessSettings {
            grid: 2048,
            samples_per_cell: 1000,
            certificate_samples: 100_000,
            validation_samples: 100_000,
            bisection_steps: 5,
            z: 3.0,
        }
    }
}

impl HarnessSettings {
    pub fn search(&self) -> SearchConfig {
        SearchConfig { bisection_steps: self.bisection_steps, certificate_samples: self.certificate_samples, z: self.z }
    }
}

/// Output files, already resolved against the config's directory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub slices: Option<PathBuf>,
    pub objective: Option<PathBuf>,
}

/// A fully parsed and validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub surface: SurfaceSpec,
    pub partition: BasePartition,
    pub cover: Vec<SetExpr>,
    pub harness: HarnessSettings,
    pub output: OutputPaths,
    /// Hex SHA-256 of the config file's bytes.
    pub config_sha256: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    surface: Spanned<RawSurface>,
    partition: Spanned<RawPartition>,
    cover: RawCover,
    harness: Option<Spanned<HarnessSettings>>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    kind: String,
    n: usize,
    k: Option<f64>,
    radius: Option<f64>,
    omega: Option<Spanned<String>>,
    omega_box: Option<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    scheme: String,
    r: usize,
    base: Option<u32>,
    positions: Option<Vec<u32>>,
    classes: Option<Vec<Spanned<String>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCover {
    parts: Spanned<Vec<Spanned<String>>>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    report: Option<PathBuf>,
    slices: Option<PathBuf>,
    objective: Option<PathBuf>,
}

/// Locates errors in one config document.
struct Source<'a> {
    path: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn at(&self, offset: usize, message: impl fmt::Display) -> ConfigError {
        let (line, column) = line_col(self.text, offset);
        ConfigError::Invalid { path: self.path.to_string(), line, column, message: message.to_string() }
    }

    /// Parses a quoted expression, mapping expression-relative error
    /// positions back into the document.
    fn expr(&self, s: &Spanned<String>, dim: usize, what: &str) -> Result<SetExpr, ConfigError> {
        SetExpr::parse(s.get_ref(), dim).map_err(|e: ParseError| {
            let start = s.span().start + 1;
            let (line0, col0) = line_col(self.text, start);
            let (line, column) = match e.location() {
                (1, c) => (line0, col0 + c - 1),
                (l, c) => (line0 + l - 1, c),
            };
            ConfigError::Invalid {
                path: self.path.to_string(),
                line,
                column,
                message: format!("{what}: {}", e.detail()),
            }
        })
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, path)
    }

    /// Parses config text. `origin` names the file in errors, and output
    /// paths are resolved against its directory.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let display = origin.display().to_string();
        let src = Source { path: &display, text };
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            src.at(offset, e.message().trim())
        })?;

        let surface = surface_spec(&src, &raw.surface)?;
        let partition = base_partition(&src, &raw.partition)?;

        let parts = raw.cover.parts.get_ref();
        if parts.is_empty() {
            return Err(src.at(raw.cover.parts.span().start, "cover needs at least one part"));
        }
        let cover = parts
            .iter()
            .enumerate()
            .map(|(i, p)| src.expr(p, surface.dim(), &format!("cover part {}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;

        let (harness, harness_at) = match &raw.harness {
            Some(h) => (*h.get_ref(), h.span().start),
            None => (HarnessSettings::default(), 0),
        };
        if harness.grid < 2 {
            return Err(src.at(harness_at, "harness.grid must be at least 2"));
        }
        if harness.samples_per_cell == 0 || harness.certificate_samples == 0 || harness.validation_samples == 0 {
            return Err(src.at(harness_at, "harness sample counts must be positive"));
        }
        if !(harness.z.is_finite() && harness.z > 0.0) {
            return Err(src.at(harness_at, "harness.z must be positive"));
        }

        let dir = origin.parent().unwrap_or(Path::new(""));
        let resolve = |p: Option<PathBuf>| p.map(|p| dir.join(p));
        let output = OutputPaths {
            report: resolve(raw.output.report),
            slices: resolve(raw.output.slices),
            objective: resolve(raw.output.objective),
        };

        Ok(ExperimentConfig {
            seed: raw.seed,
            surface,
            partition,
            cover,
            harness,
            output,
            config_sha256: sha256_hex(text.as_bytes()),
        })
    }

    /// The cover parts as written in canonical form.
    pub fn cover_source(&self) -> Vec<String> {
        self.cover.iter().map(ToString::to_string).collect()
    }
}

fn surface_spec(src: &Source<'_>, raw: &Spanned<RawSurface>) -> Result<SurfaceSpec, ConfigError> {
    let at = raw.span().start;
    let s = raw.get_ref();
    let radius = s.radius.unwrap_or(1.0);
    let spec = match s.kind.as_str() {
        "sphere" => SurfaceSpec::sphere(s.n),
        "power" => {
            let k = s.k.ok_or_else(|| src.at(at, "power surface needs `k`"))?;
            SurfaceSpec::power(s.n, k, radius)
        }
        "cylinder" => {
            if s.n < 3 {
                return Err(src.at(at, format!("cylinder needs n >= 3, got {}", s.n)));
            }
            let d = s.n - 2;
            let expr = match &s.omega {
                Some(e) => src.expr(e, d, "omega")?,
                None => SetExpr::whole(d),
            };
            let bbox = match &s.omega_box {
                Some(b) => b.iter().map(|&[lo, hi]| (lo, hi)).collect(),
                None => vec![(0.0, 1.0); d],
            };
            let omega = Omega::new(expr, bbox).map_err(|e| src.at(at, e))?;
            SurfaceSpec::cylinder(s.n, radius, omega)
        }
        other => return Err(src.at(at, format!("unknown surface kind `{other}` (expected sphere, power or cylinder)"))),
    };
    spec.map_err(|e| src.at(at, e))
}

fn base_partition(src: &Source<'_>, raw: &Spanned<RawPartition>) -> Result<BasePartition, ConfigError> {
    let at = raw.span().start;
    let p = raw.get_ref();
    let part = match p.scheme.as_str() {
        "intervals" => BasePartition::intervals(p.r),
        "digit-blocks" => {
            let base = p.base.ok_or_else(|| src.at(at, "digit-blocks partition needs `base`"))?;
            let positions =
                p.positions.clone().ok_or_else(|| src.at(at, "digit-blocks partition needs `positions`"))?;
            BasePartition::digit_blocks(p.r, base, positions)
        }
        "custom" => {
            let classes = p.classes.as_deref().ok_or_else(|| src.at(at, "custom partition needs `classes`"))?;
            let classes = classes
                .iter()
                .enumerate()
                .map(|(i, c)| src.expr(c, 2, &format!("partition class {}", i + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            BasePartition::custom(p.r, classes)
        }
        other => {
            return Err(
                src.at(at, format!("unknown partition scheme `{other}` (expected intervals, digit-blocks or custom)"))
            )
        }
    };
    part.map_err(|e| src.at(at, e))
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
