//! Declarative experiment configuration.
//!
//! A config is a TOML file with `[kernel]`, `[potential]` and `[run]`
//! tables.  `include = ["shared.toml", ...]` pulls in other files (paths
//! relative to the including file); tables are merged key by key and the
//! including file wins.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{KernelError, WalkKernel};
use crate::lattice::Point;
use crate::potential::{GeometricSparse, PotentialError, PotentialSpec};

const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid kernel: {0}")]
    Kernel(#[from] KernelError),
    #[error("invalid potential: {0}")]
    Potential(#[from] PotentialError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Validate,
    Green,
    Bs,
    Spectrum,
    Essential,
    Decay,
    Gibbs,
    Doob,
    Fk,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Validate => "validate",
            ExperimentKind::Green => "green",
            ExperimentKind::Bs => "bs",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Essential => "essential",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Gibbs => "gibbs",
            ExperimentKind::Doob => "doob",
            ExperimentKind::Fk => "fk",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, ExperimentKind::Doob | ExperimentKind::Fk)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub offset: Vec<i64>,
    pub p: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub preset: Option<String>,
    pub entries: Option<Vec<KernelEntry>>,
}

impl KernelConfig {
    pub fn build(&self) -> Result<WalkKernel, ConfigError> {
        match (&self.preset, &self.entries) {
            (Some(name), None) => Ok(WalkKernel::preset(name)?),
            (None, Some(entries)) => {
                let dim = entries
                    .first()
                    .map(|e| e.offset.len())
                    .ok_or_else(|| ConfigError::Invalid("kernel.entries is empty".into()))?;
                let raw: Vec<(Vec<i64>, f64)> =
                    entries.iter().map(|e| (e.offset.clone(), e.p)).collect();
                Ok(WalkKernel::from_entries(dim, &raw)?)
            }
            _ => Err(ConfigError::Invalid(
                "kernel needs exactly one of `preset` or `entries`".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteValue {
    pub site: Vec<i64>,
    pub value: f64,
}

fn default_base() -> i64 {
    3
}

fn default_value() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialConfig {
    Geometric {
        #[serde(default = "default_value")]
        value: f64,
        values: Option<Vec<f64>>,
        #[serde(default = "default_base")]
        base: i64,
        #[serde(default)]
        all_axes: bool,
        anchor: Option<SiteValue>,
        box_radius: Option<i64>,
    },
    Decaying {
        amplitude: f64,
        base: f64,
        box_radius: Option<i64>,
    },
    Explicit {
        #[serde(default)]
        sites: Vec<SiteValue>,
        box_radius: Option<i64>,
    },
}

pub const DEFAULT_BOX_RADIUS: i64 = 100;

fn point_of(dim: usize, coords: &[i64]) -> Result<Point, ConfigError> {
    if coords.len() != dim {
        return Err(ConfigError::Invalid(format!(
            "site {coords:?} has {} coordinates, kernel dimension is {dim}",
            coords.len()
        )));
    }
    Ok(Point::new(coords))
}

impl PotentialConfig {
    pub fn build(&self, dim: usize) -> Result<PotentialSpec, ConfigError> {
        match self {
            PotentialConfig::Geometric {
                value,
                values,
                base,
                all_axes,
                anchor,
                box_radius,
            } => {
                let mut b = GeometricSparse::new(dim, *value, *base)
                    .all_axes(*all_axes)
                    .box_radius(box_radius.unwrap_or(DEFAULT_BOX_RADIUS));
                if let Some(vs) = values {
                    b = b.values(vs.clone());
                }
                if let Some(a) = anchor {
                    b = b.anchor(point_of(dim, &a.site)?, a.value);
                }
                Ok(b.build()?)
            }
            PotentialConfig::Decaying {
                amplitude,
                base,
                box_radius,
            } => Ok(PotentialSpec::decaying(
                dim,
                *amplitude,
                *base,
                box_radius.unwrap_or(DEFAULT_BOX_RADIUS),
            )?),
            PotentialConfig::Explicit { sites, box_radius } => {
                let mut map = BTreeMap::new();
                for s in sites {
                    map.insert(point_of(dim, &s.site)?, s.value);
                }
                Ok(PotentialSpec::explicit(
                    dim,
                    map,
                    box_radius.unwrap_or(DEFAULT_BOX_RADIUS),
                )?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl LambdaRange {
    pub fn points(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + h * i as f64).collect()
    }
}

/// Numeric knobs; each experiment reads the ones it needs and falls back to
/// its own defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub radii: Option<Vec<i64>>,
    pub lambdas: Option<Vec<f64>>,
    pub lambda_range: Option<LambdaRange>,
    pub sites: Option<Vec<Vec<i64>>>,
    pub points: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub steps: Option<usize>,
    pub horizon: Option<usize>,
    pub horizon_min: Option<usize>,
    pub marginal_length: Option<usize>,
    pub alpha: Option<f64>,
    pub excluded: Option<Vec<Vec<i64>>>,
    pub start: Option<Vec<i64>>,
    pub dump_paths: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub kernel: KernelConfig,
    pub potential: Option<PotentialConfig>,
    #[serde(default)]
    pub run: RunConfig,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let value: toml::Value = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
            path: PathBuf::from("<inline>"),
            message: e.to_string(),
        })?;
        Self::from_value(value, Path::new("<inline>"))
    }

    /// Loads `path`, resolving includes.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let value = load_merged(path, 0)?;
        Self::from_value(value, path)
    }

    fn from_value(mut value: toml::Value, path: &Path) -> Result<Self, ConfigError> {
        if let Some(t) = value.as_table_mut() {
            t.remove("include");
        }
        value.try_into().map_err(|e: toml::de::Error| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn kernel(&self) -> Result<WalkKernel, ConfigError> {
        self.kernel.build()
    }

    /// The configured potential, or `V ≡ 0` on the default box.
    pub fn potential(&self, dim: usize) -> Result<PotentialSpec, ConfigError> {
        match &self.potential {
            Some(p) => p.build(dim),
            None => Ok(PotentialSpec::zero(dim, DEFAULT_BOX_RADIUS)?),
        }
    }

    /// Checks the invariants that do not depend on the experiment's output.
    pub fn validate(&self, kind: ExperimentKind) -> Result<(), ConfigError> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(ConfigError::Invalid(format!(
                    "config is for `{k}` but `{kind}` was requested"
                )));
            }
        }
        let kernel = self.kernel()?;
        self.potential(kernel.dim())?;
        let r = &self.run;
        if let Some(t) = r.tolerance {
            if !(t > 0.0) {
                return Err(ConfigError::Invalid(format!("tolerance must be positive, got {t}")));
            }
        }
        if let Some(a) = r.alpha {
            if !(a > 0.0) {
                return Err(ConfigError::Invalid(format!("alpha must be positive, got {a}")));
            }
        }
        if let Some(radii) = &r.radii {
            if radii.is_empty() || radii.iter().any(|&l| l < 1) {
                return Err(ConfigError::Invalid("radii must be a non-empty list of positive integers".into()));
            }
        }
        if let Some(range) = &r.lambda_range {
            if range.steps == 0 || !(range.start.is_finite() && range.stop.is_finite()) {
                return Err(ConfigError::Invalid("lambda_range needs finite ends and steps > 0".into()));
            }
        }
        if kind.is_stochastic() && r.seed.is_none() {
            return Err(ConfigError::Invalid(format!(
                "`{kind}` is stochastic and needs run.seed (or --seed)"
            )));
        }
        Ok(())
    }
}

fn read_table(path: &Path) -> Result<toml::Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_merged(path: &Path, depth: usize) -> Result<toml::Value, ConfigError> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(ConfigError::Invalid(format!(
            "includes nested deeper than {MAX_INCLUDE_DEPTH} at {}",
            path.display()
        )));
    }
    let own = read_table(path)?;
    let includes: Vec<String> = match own.get("include") {
        None => Vec::new(),
        Some(toml::Value::String(s)) => vec![s.clone()],
        Some(toml::Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| ConfigError::Invalid("include entries must be strings".into()))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(ConfigError::Invalid("include must be a string or list".into())),
    };
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut merged = toml::Value::Table(toml::map::Map::new());
    for inc in includes {
        let sub = load_merged(&dir.join(inc), depth + 1)?;
        merge_into(&mut merged, sub);
    }
    merge_into(&mut merged, own);
    Ok(merged)
}

/// Recursively overlays `top` on `base`; non-table values are replaced.
pub fn merge_into(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(existing) => merge_into(existing, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    const SINGLE_DELTA: &str = r#"
        [kernel]
        preset = "simple1d"
        [potential]
        type = "explicit"
        sites = [{ site = [0], value = 1.0 }]
        box_radius = 60
    "#;

    #[test]
    fn parses_inline_config() {
        let cfg = ExperimentConfig::from_toml_str(SINGLE_DELTA).unwrap();
        let k = cfg.kernel().unwrap();
        let v = cfg.potential(k.dim()).unwrap();
        assert_eq!(v.value(&Point::new(&[0])), 1.0);
        assert_eq!(v.box_radius(), 60);
        cfg.validate(ExperimentKind::Spectrum).unwrap();
    }

    #[test]
    fn stochastic_kinds_need_seed() {
        let cfg = ExperimentConfig::from_toml_str(SINGLE_DELTA).unwrap();
        assert!(matches!(cfg.validate(ExperimentKind::Fk), Err(ConfigError::Invalid(_))));
        let mut seeded = cfg.clone();
        seeded.run.seed = Some(1);
        seeded.validate(ExperimentKind::Fk).unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = format!("{SINGLE_DELTA}\n[run]\ntolerance = -1.0\n");
        let cfg = ExperimentConfig::from_toml_str(&bad).unwrap();
        assert!(cfg.validate(ExperimentKind::Green).is_err());
        let unknown = ExperimentConfig::from_toml_str("[kernel]\npreset = \"nope\"\n").unwrap();
        assert!(unknown.validate(ExperimentKind::Validate).is_err());
        assert!(ExperimentConfig::from_toml_str("[kernel]\npreset = 1\n").is_err());
        let mismatch = ExperimentConfig::from_toml_str(&format!("kind = \"bs\"\n{SINGLE_DELTA}")).unwrap();
        assert!(mismatch.validate(ExperimentKind::Green).is_err());
    }

    #[test]
    fn includes_merge_deeply() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("base.toml"),
            "[kernel]\npreset = \"simple1d\"\n[potential]\ntype = \"geometric\"\nbox_radius = 40\n[run]\nradii = [10, 20, 30]\nseed = 3\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("exp.toml"),
            "include = [\"base.toml\"]\n[potential]\nanchor = { site = [0], value = 2.0 }\n[run]\nseed = 9\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::load(&dir.path().join("exp.toml")).unwrap();
        assert_eq!(cfg.run.seed, Some(9));
        assert_eq!(cfg.run.radii, Some(vec![10, 20, 30]));
        let v = cfg.potential(1).unwrap();
        assert_eq!(v.value(&Point::new(&[0])), 2.0);
        assert_eq!(v.value(&Point::new(&[9])), 1.0);
        assert_eq!(v.box_radius(), 40);
    }

    #[test]
    fn include_cycle_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.toml"), "include = \"a.toml\"\n").unwrap();
        assert!(matches!(
            ExperimentConfig::load(&dir.path().join("a.toml")),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn kernel_entries() {
        let cfg = ExperimentConfig::from_toml_str(
            "[kernel]\nentries = [{ offset = [1], p = 0.4 }, { offset = [-1], p = 0.4 }, { offset = [0], p = 0.2 }]\n",
        )
        .unwrap();
        assert_eq!(cfg.kernel().unwrap().lazy1d_parameter(), Some(0.2));
    }
}
