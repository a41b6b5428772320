//! Run configuration: flat sectioned `key = value` text.
//!
//! ```text
//! # comment
//! [beam]
//! l = 1
//! k_rho = 1.0
//!
//! [geometry]
//! r0 = 0, 0.5, 1, 2
//! ```
//!
//! Keys may also be written fully qualified (`beam.l = 1`) outside any
//! section. Unknown sections or keys, duplicates and malformed values are
//! errors carrying the offending line number.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use vortex_oam::{ChannelWindow, SelectionSign};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown output format '{other}' (expected csv or json)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub l: i32,
    pub k_rho: f64,
    pub k_rho_out: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionConfig {
    pub scale: f64,
    pub initial_n: u32,
    pub initial_m: i32,
    pub final_n: u32,
    pub alpha: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub r0: Vec<f64>,
    pub cluster_radii: Vec<f64>,
    pub n_samples: usize,
    pub limit_sequence: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceConfig {
    pub quad: f64,
    pub tail: f64,
    pub window_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TruncationConfig {
    pub p: Option<usize>,
    pub r_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub beam: BeamConfig,
    pub transition: TransitionConfig,
    pub geometry: GeometryConfig,
    pub window: ChannelWindow,
    pub tolerance: ToleranceConfig,
    pub selection_sign: SelectionSign,
    pub truncation: TruncationConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            beam: BeamConfig {
                l: 1,
                k_rho: 1.0,
                k_rho_out: 1.0,
            },
            transition: TransitionConfig {
                scale: 1.0,
                initial_n: 0,
                initial_m: 0,
                final_n: 0,
                alpha: 1,
            },
            geometry: GeometryConfig {
                r0: vec![0.0],
                cluster_radii: vec![0.0, 1.0, 2.0, 4.0],
                n_samples: 16,
                limit_sequence: vec![2.0, 1.0, 0.5, 0.25, 0.0],
            },
            window: ChannelWindow { lo: -6, hi: 8 },
            tolerance: ToleranceConfig {
                quad: 1e-6,
                tail: 1e-6,
                window_tail: 1e-3,
            },
            selection_sign: SelectionSign::Plus,
            truncation: TruncationConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "beam.l",
    "beam.k_rho",
    "beam.k_rho_out",
    "transition.scale",
    "transition.initial_n",
    "transition.initial_m",
    "transition.final_n",
    "transition.alpha",
    "geometry.r0",
    "geometry.cluster_radii",
    "geometry.n_samples",
    "geometry.limit_sequence",
    "window.l_min",
    "window.l_max",
    "tolerance.quad",
    "tolerance.tail",
    "tolerance.window_tail",
    "run.selection_sign",
    "truncation.p",
    "truncation.r_max",
    "output.path",
    "output.format",
];

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError::at(line, format!("invalid value '{raw}' for {key}")))
}

fn list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|v| value(line, key, v.trim())).collect()
}

/// Parses and validates a config; absent keys take their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section: Option<String> = None;
    let mut seen = BTreeSet::new();
    let mut k_out_given = false;
    let (mut l_min, mut l_max) = (cfg.window.lo, cfg.window.hi);

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?
                .trim();
            if !KEYS.iter().any(|k| k.split('.').next() == Some(name)) {
                return Err(ConfigError::at(line, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected key = value, got '{content}'")))?;
        let (k, v) = (k.trim(), v.trim());
        let key = match (&section, k.contains('.')) {
            (_, true) => k.to_string(),
            (Some(s), false) => format!("{s}.{k}"),
            (None, false) => return Err(ConfigError::at(line, format!("key '{k}' outside any section"))),
        };
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::at(line, format!("unknown key '{key}'")));
        }
        if !seen.insert(key.clone()) {
            return Err(ConfigError::at(line, format!("duplicate key '{key}'")));
        }
        match key.as_str() {
            "beam.l" => cfg.beam.l = value(line, &key, v)?,
            "beam.k_rho" => cfg.beam.k_rho = value(line, &key, v)?,
            "beam.k_rho_out" => {
                cfg.beam.k_rho_out = value(line, &key, v)?;
                k_out_given = true;
            }
            "transition.scale" => cfg.transition.scale = value(line, &key, v)?,
            "transition.initial_n" => cfg.transition.initial_n = value(line, &key, v)?,
            "transition.initial_m" => cfg.transition.initial_m = value(line, &key, v)?,
            "transition.final_n" => cfg.transition.final_n = value(line, &key, v)?,
            "transition.alpha" => cfg.transition.alpha = value(line, &key, v)?,
            "geometry.r0" => cfg.geometry.r0 = list(line, &key, v)?,
            "geometry.cluster_radii" => cfg.geometry.cluster_radii = list(line, &key, v)?,
            "geometry.n_samples" => cfg.geometry.n_samples = value(line, &key, v)?,
            "geometry.limit_sequence" => cfg.geometry.limit_sequence = list(line, &key, v)?,
            "window.l_min" => l_min = value(line, &key, v)?,
            "window.l_max" => l_max = value(line, &key, v)?,
            "tolerance.quad" => cfg.tolerance.quad = value(line, &key, v)?,
            "tolerance.tail" => cfg.tolerance.tail = value(line, &key, v)?,
            "tolerance.window_tail" => cfg.tolerance.window_tail = value(line, &key, v)?,
            "run.selection_sign" => {
                cfg.selection_sign = v.parse().map_err(|_| {
                    ConfigError::at(line, format!("invalid value '{v}' for {key} (expected plus or minus)"))
                })?
            }
            "truncation.p" => cfg.truncation.p = Some(value(line, &key, v)?),
            "truncation.r_max" => cfg.truncation.r_max = Some(value(line, &key, v)?),
            "output.path" => cfg.output.path = Some(v.to_string()),
            "output.format" => cfg.output.format = v.parse().map_err(|e: String| ConfigError::at(line, e))?,
            _ => unreachable!("key list and match arms out of sync"),
        }
    }
    if !k_out_given {
        cfg.beam.k_rho_out = cfg.beam.k_rho;
    }
    if l_min > l_max {
        return Err(ConfigError::invalid(format!(
            "window.l_min {l_min} exceeds window.l_max {l_max}"
        )));
    }
    cfg.window = ChannelWindow { lo: l_min, hi: l_max };
    cfg.validate()?;
    Ok(cfg)
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(format!(
            "{name} must be a finite number > 0, got {v}"
        )))
    }
}

fn non_negative(name: &str, vs: &[f64]) -> Result<(), ConfigError> {
    match vs.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        Some(v) => Err(ConfigError::invalid(format!(
            "{name} entries must be finite and >= 0, got {v}"
        ))),
        None => Ok(()),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("beam.k_rho", self.beam.k_rho)?;
        positive("beam.k_rho_out", self.beam.k_rho_out)?;
        positive("transition.scale", self.transition.scale)?;
        positive("tolerance.quad", self.tolerance.quad)?;
        positive("tolerance.tail", self.tolerance.tail)?;
        positive("tolerance.window_tail", self.tolerance.window_tail)?;
        if let Some(r) = self.truncation.r_max {
            positive("truncation.r_max", r)?;
        }
        if self.transition.alpha == 0 {
            return Err(ConfigError::invalid("transition.alpha must be nonzero"));
        }
        non_negative("geometry.r0", &self.geometry.r0)?;
        non_negative("geometry.cluster_radii", &self.geometry.cluster_radii)?;
        non_negative("geometry.limit_sequence", &self.geometry.limit_sequence)?;
        if self.geometry.n_samples == 0 {
            return Err(ConfigError::invalid("geometry.n_samples must be >= 1"));
        }
        let allowed = self.allowed_channel();
        if !self.window.contains(allowed) {
            return Err(ConfigError::invalid(format!(
                "window [{}, {}] must contain the allowed channel l + α = {allowed}",
                self.window.lo, self.window.hi
            )));
        }
        Ok(())
    }

    pub fn allowed_channel(&self) -> i32 {
        self.selection_sign.allowed_channel(self.beam.l, self.transition.alpha)
    }

    /// Canonical text form; `parse_config(&cfg.render()) == cfg`.
    pub fn render(&self) -> String {
        fn join(v: &[f64]) -> String {
            v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
        }
        let mut s = String::new();
        let _ = writeln!(
            s,
            "[beam]\nl = {}\nk_rho = {:?}\nk_rho_out = {:?}\n",
            self.beam.l, self.beam.k_rho, self.beam.k_rho_out
        );
        let t = &self.transition;
        let _ = writeln!(
            s,
            "[transition]\nscale = {:?}\ninitial_n = {}\ninitial_m = {}\nfinal_n = {}\nalpha = {}\n",
            t.scale, t.initial_n, t.initial_m, t.final_n, t.alpha
        );
        let g = &self.geometry;
        let _ = writeln!(
            s,
            "[geometry]\nr0 = {}\ncluster_radii = {}\nn_samples = {}\nlimit_sequence = {}\n",
            join(&g.r0),
            join(&g.cluster_radii),
            g.n_samples,
            join(&g.limit_sequence)
        );
        let _ = writeln!(s, "[window]\nl_min = {}\nl_max = {}\n", self.window.lo, self.window.hi);
        let tol = &self.tolerance;
        let _ = writeln!(
            s,
            "[tolerance]\nquad = {:?}\ntail = {:?}\nwindow_tail = {:?}\n",
            tol.quad, tol.tail, tol.window_tail
        );
        let _ = writeln!(s, "[run]\nselection_sign = {}\n", self.selection_sign.as_str());
        if self.truncation.p.is_some() || self.truncation.r_max.is_some() {
            s.push_str("[truncation]\n");
            if let Some(p) = self.truncation.p {
                let _ = writeln!(s, "p = {p}");
            }
            if let Some(r) = self.truncation.r_max {
                let _ = writeln!(s, "r_max = {r:?}");
            }
            s.push('\n');
        }
        s.push_str("[output]\n");
        if let Some(p) = &self.output.path {
            let _ = writeln!(s, "path = {p}");
        }
        let _ = writeln!(s, "format = {}", self.output.format);
        s
    }

    /// Canonical rendering without the `[output]` section: everything that
    /// determines the numbers, nothing that only says where they go.
    pub fn provenance_text(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let text = c.render();
        match text.find("[output]") {
            Some(i) => text[..i].trim_end().to_string() + "\n",
            None => text,
        }
    }

    /// SHA-256 of [`RunConfig::provenance_text`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.provenance_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
