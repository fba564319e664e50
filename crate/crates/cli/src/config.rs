//! Run configuration: defaults, `key = value` files and command-line
//! overrides, applied in that order.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use folbm::geometry::{ChartPoint, FoliatedModel};
use folbm::models::{EmbeddedTorusModel, KroneckerModel, ProductModel, DEFAULT_ALPHA, DEFAULT_B};
use thiserror::Error;

/// Problems with a configuration; every variant names the offending key.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },

    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: PathBuf, line: usize },

    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// The key the error refers to, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::UnknownKey { key } | Self::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Product,
    Kronecker,
    Torus3,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "product" => Ok(Self::Product),
            "kronecker" => Ok(Self::Kronecker),
            "torus3" => Ok(Self::Torus3),
            _ => Err(format!("expected one of product, kronecker, torus3; got `{s}`")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Product => "product",
            Self::Kronecker => "kronecker",
            Self::Torus3 => "torus3",
        })
    }
}

/// Which path construction `simulate` uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    /// Stratonovich Heun on the orthonormal frame bundle (any leaf dimension).
    FrameBundle,
    /// Leaf flow evaluated at the Brownian path (leaf dimension 1).
    Flow,
}

impl FromStr for Construction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "frame-bundle" | "frame_bundle" => Ok(Self::FrameBundle),
            "flow" => Ok(Self::Flow),
            _ => Err(format!("expected frame-bundle or flow; got `{s}`")),
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FrameBundle => "frame-bundle",
            Self::Flow => "flow",
        })
    }
}

/// Every key accepted in config files and as `--flag`, in echo order.
pub const KEYS: &[&str] = &[
    "model",
    "a",
    "b",
    "alpha",
    "q",
    "p",
    "dt",
    "steps",
    "n_paths",
    "seed",
    "bins",
    "grid",
    "samples",
    "stride",
    "start",
    "construction",
    "out",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    /// Kronecker slope.
    pub a: f64,
    /// Torus radius ratio.
    pub b: f64,
    /// Torus leaf slope.
    pub alpha: f64,
    /// Product model factor dimensions.
    pub q: usize,
    pub p: usize,
    pub dt: f64,
    pub steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Histogram bins per axis.
    pub bins: usize,
    /// Collocation points of the density solve.
    pub grid: usize,
    /// Occupation samples of the density command.
    pub samples: usize,
    pub stride: usize,
    /// Initial point; the chart origin when absent.
    pub start: Option<Vec<f64>>,
    pub construction: Construction,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Torus3,
            a: std::f64::consts::SQRT_2,
            b: DEFAULT_B,
            alpha: DEFAULT_ALPHA,
            q: 1,
            p: 1,
            dt: 1e-3,
            steps: 1000,
            n_paths: 100,
            seed: 0,
            bins: 16,
            grid: 256,
            samples: 100_000,
            stride: 1,
            start: None,
            construction: Construction::FrameBundle,
            out: PathBuf::from("."),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ConfigError::invalid(key, format!("cannot parse `{value}`: {e}")))
}

/// Accepts `1e5` style integers as long as they are exact.
fn parse_count(key: &str, value: &str) -> Result<usize, ConfigError> {
    if let Ok(n) = value.parse::<usize>() {
        return Ok(n);
    }
    let v: f64 = parse(key, value)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= 1e15 {
        Ok(v as usize)
    } else {
        Err(ConfigError::invalid(key, format!("expected a non-negative integer, got `{value}`")))
    }
}

/// Normalizes `n-paths` and `n_paths` to the same key.
pub fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = normalize_key(key);
        let value = value.trim();
        match key.as_str() {
            "model" => self.model = parse(&key, value)?,
            "a" => self.a = parse(&key, value)?,
            "b" => self.b = parse(&key, value)?,
            "alpha" => self.alpha = parse(&key, value)?,
            "q" => self.q = parse_count(&key, value)?,
            "p" => self.p = parse_count(&key, value)?,
            "dt" => self.dt = parse(&key, value)?,
            "steps" => self.steps = parse_count(&key, value)?,
            "n_paths" => self.n_paths = parse_count(&key, value)?,
            "seed" => self.seed = parse(&key, value)?,
            "bins" => self.bins = parse_count(&key, value)?,
            "grid" => self.grid = parse_count(&key, value)?,
            "samples" => self.samples = parse_count(&key, value)?,
            "stride" => self.stride = parse_count(&key, value)?,
            "start" => {
                self.start = if value == "origin" {
                    None
                } else {
                    Some(
                        value
                            .split(',')
                            .map(|c| parse::<f64>(&key, c.trim()))
                            .collect::<Result<_, _>>()?,
                    )
                }
            }
            "construction" => self.construction = parse(&key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(ConfigError::UnknownKey { key }),
        }
        Ok(())
    }

    /// Applies the assignments of a config file. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: origin.to_path_buf(),
                line: i + 1,
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Defaults, then `file`, then `overrides`; the result is validated.
    pub fn load<'a>(
        file: Option<&Path>,
        overrides: impl IntoIterator<Item = (&'a str, String)>,
    ) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            cfg.apply_text(&text, path)?;
        }
        for (key, value) in overrides {
            cfg.set(key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConfigError::invalid("dt", format!("must satisfy dt > 0, got {}", self.dt)));
        }
        for (key, v) in [
            ("steps", self.steps),
            ("n_paths", self.n_paths),
            ("bins", self.bins),
            ("samples", self.samples),
            ("stride", self.stride),
        ] {
            if v == 0 {
                return Err(ConfigError::invalid(key, "must be at least 1"));
            }
        }
        if self.grid < 4 || !self.grid.is_multiple_of(2) {
            return Err(ConfigError::invalid(
                "grid",
                format!("must be an even number of at least 4, got {}", self.grid),
            ));
        }
        if self.model == ModelKind::Product && (self.q == 0 || self.p == 0) {
            let key = if self.q == 0 { "q" } else { "p" };
            return Err(ConfigError::invalid(key, "factor dimensions must be at least 1"));
        }
        let model = self.build_model()?;
        if let Some(start) = &self.start {
            if start.len() != model.dim() || start.iter().any(|c| !c.is_finite()) {
                return Err(ConfigError::invalid(
                    "start",
                    format!("expected {} finite comma-separated coordinates", model.dim()),
                ));
            }
        }
        if self.construction == Construction::Flow && model.leaf_dim() != 1 {
            return Err(ConfigError::invalid(
                "construction",
                "the flow construction needs one-dimensional leaves",
            ));
        }
        Ok(())
    }

    /// The torus model with this configuration's `b` and `alpha`.
    pub fn torus(&self) -> Result<EmbeddedTorusModel, ConfigError> {
        EmbeddedTorusModel::new(self.b, self.alpha).map_err(model_error)
    }

    /// The Kronecker foliation of the flat torus with slope `a`.
    pub fn kronecker(&self) -> Result<KroneckerModel, ConfigError> {
        KroneckerModel::torus(self.a).map_err(model_error)
    }

    pub fn build_model(&self) -> Result<Box<dyn FoliatedModel>, ConfigError> {
        Ok(match self.model {
            ModelKind::Product => Box::new(ProductModel::new(self.q, self.p)),
            ModelKind::Kronecker => Box::new(self.kronecker()?),
            ModelKind::Torus3 => Box::new(self.torus()?),
        })
    }

    pub fn start_point(&self, dim: usize) -> ChartPoint {
        match &self.start {
            Some(c) => ChartPoint::new(c.clone()),
            None => ChartPoint::new(vec![0.0; dim]),
        }
    }

    /// `key = value` lines for every key; parsing them back reproduces
    /// this configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let value = match *key {
                "model" => self.model.to_string(),
                "a" => self.a.to_string(),
                "b" => self.b.to_string(),
                "alpha" => self.alpha.to_string(),
                "q" => self.q.to_string(),
                "p" => self.p.to_string(),
                "dt" => self.dt.to_string(),
                "steps" => self.steps.to_string(),
                "n_paths" => self.n_paths.to_string(),
                "seed" => self.seed.to_string(),
                "bins" => self.bins.to_string(),
                "grid" => self.grid.to_string(),
                "samples" => self.samples.to_string(),
                "stride" => self.stride.to_string(),
                "start" => match &self.start {
                    None => "origin".to_string(),
                    Some(c) => c.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
                },
                "construction" => self.construction.to_string(),
                "out" => self.out.display().to_string(),
                _ => unreachable!("every key has an echo"),
            };
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }
}

fn model_error(e: folbm::Error) -> ConfigError {
    match e {
        folbm::Error::InvalidParameter { name, reason } => ConfigError::invalid(name, reason),
        other => ConfigError::invalid("model", other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_flags_over_file_over_defaults() {
        let dir = std::env::temp_dir().join(format!("folbm-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "# experiment\nn-paths = 7\nseed = 3\n\nb = 3.5\n").unwrap();
        let cfg = RunConfig::load(Some(&path), [("seed", "9".to_string())]).unwrap();
        assert_eq!((cfg.n_paths, cfg.seed, cfg.b), (7, 9, 3.5));
        assert_eq!(cfg.dt, RunConfig::default().dt);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("start", "0.25, 1").unwrap();
        cfg.set("construction", "flow").unwrap();
        cfg.set("samples", "1e4").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text(), Path::new("echo")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_the_key() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.set("colour", "red").unwrap_err().key(), Some("colour"));
        assert_eq!(cfg.set("steps", "1.5").unwrap_err().key(), Some("steps"));
        cfg.b = 0.5;
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.key(), Some("b"));
        assert!(err.to_string().contains("b > 1"), "{err}");

        let mut cfg = RunConfig {
            model: ModelKind::Product,
            p: 2,
            construction: Construction::Flow,
            ..RunConfig::default()
        };
        assert_eq!(cfg.validate().unwrap_err().key(), Some("construction"));
        cfg.construction = Construction::FrameBundle;
        cfg.start = Some(vec![0.0, 0.0]);
        assert_eq!(cfg.validate().unwrap_err().key(), Some("start"));
    }
}
