//! Experiment configuration: a strict JSON schema with defaults.

use matweight::apdim::DimConfig;
use matweight::dyadic::{CubeWindow, Domain};
use matweight::reducing::Method;
use matweight::spaces::{Kind, SpaceParams};
use matweight::transform::{build_filters, FilterPair};
use matweight::weights::{MatrixWeight, QuadSpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {source}")]
    Invalid { field: &'static str, source: matweight::Error },
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Read { .. } => "read",
            ConfigError::Parse(_) => "parse",
            ConfigError::Invalid { .. } => "invalid",
        }
    }
}

/// `"identity"` or a full weight description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Named(String),
    Weight(MatrixWeight),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    /// `[0, 1)^n`.
    Unit,
    /// `[-1/2, 1/2)^n`.
    Centered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSpec {
    pub domain: DomainSpec,
    pub j_min: i32,
    pub j_max: i32,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { domain: DomainSpec::Centered, j_min: 1, j_max: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSpec {
    /// `log2` of the grid size per axis; defaults to 9 for `n = 1` and 6 otherwise.
    pub level: Option<i32>,
    pub order: u32,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec { level: None, order: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimensionSpec {
    /// The working box is `[-2^e, 2^e)^n`.
    pub box_exponent: i32,
    pub j_min: i32,
    pub j_max: i32,
    pub i_max: u32,
    pub per_axis: Option<usize>,
}

impl Default for DimensionSpec {
    fn default() -> Self {
        DimensionSpec { box_exponent: 9, j_min: 0, j_max: 12, i_max: 8, per_axis: None }
    }
}

fn default_spaces() -> Vec<SpaceParams> {
    vec![
        SpaceParams { s: 0.5, tau: 0.0, p: 2.0, q: 2.0, kind: Kind::F },
        SpaceParams { s: 0.0, tau: 0.25, p: 2.0, q: f64::INFINITY, kind: Kind::B },
    ]
}

/// Everything a run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub weight: WeightSpec,
    #[serde(with = "matweight::spaces::exponent")]
    pub p: f64,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default = "default_spaces")]
    pub spaces: Vec<SpaceParams>,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default)]
    pub filters: FilterSpec,
    #[serde(default)]
    pub dimension: DimensionSpec,
    #[serde(default)]
    pub quadrature: QuadSpec,
    #[serde(default = "auto")]
    pub method: Method,
    #[serde(default = "twenty")]
    pub draws: usize,
    #[serde(default = "seven")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Thresholds for the ratio tier; `null` reports brackets without judging them.
    #[serde(default = "default_limits")]
    pub ratio_limits: Option<RatioLimits>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioLimits {
    /// Largest allowed max/min of a ratio over draws.
    pub width: f64,
    /// Largest allowed relative change of that width under grid refinement.
    pub drift: f64,
}

fn default_limits() -> Option<RatioLimits> {
    Some(RatioLimits { width: 50.0, drift: 0.2 })
}

fn one() -> usize {
    1
}
fn twenty() -> usize {
    20
}
fn seven() -> u64 {
    7
}
fn auto() -> Method {
    Method::Auto
}

fn invalid(field: &'static str) -> impl Fn(matweight::Error) -> ConfigError {
    move |source| ConfigError::Invalid { field, source }
}

impl ExperimentConfig {
    /// Parses a file path, or inline JSON when the argument starts with `{`.
    pub fn load(arg: &str) -> Result<Self, ConfigError> {
        let text = if arg.trim_start().starts_with('{') {
            arg.to_string()
        } else {
            std::fs::read_to_string(Path::new(arg)).map_err(|source| ConfigError::Read { path: arg.into(), source })?
        };
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Fills derived defaults and checks every module precondition.
    pub fn resolve(&mut self) -> Result<(), ConfigError> {
        if let WeightSpec::Weight(w) = &self.weight {
            self.n = w.n;
            self.m = w.m;
        }
        self.filters.level.get_or_insert(if self.n == 1 { 9 } else { 6 });
        if self.dimension.per_axis.is_none() {
            self.dimension.per_axis = Some(DimConfig::standard(self.n).per_axis);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.p > 0.0) || self.p.is_infinite() {
            return Err(ConfigError::Invalid {
                field: "p",
                source: matweight::Error::InvalidExponent { p: self.p, requirement: "p must be finite and positive" },
            });
        }
        self.weight().map_err(invalid("weight"))?.validate().map_err(invalid("weight"))?;
        for sp in &self.spaces {
            sp.validate().map_err(invalid("spaces"))?;
        }
        self.window().map_err(invalid("window"))?;
        self.filter_pair().map_err(invalid("filters"))?;
        self.dim_config().validate().map_err(invalid("dimension"))?;
        self.quadrature.validate().map_err(invalid("quadrature"))?;
        if let Method::Mvee { directions } = self.method {
            if directions < 2 * self.m {
                return Err(ConfigError::Invalid {
                    field: "method",
                    source: matweight::Error::Precondition(format!("{directions} directions cannot pin an ellipsoid in C^{}", self.m)),
                });
            }
        }
        if self.method == Method::ExactP2 && self.p != 2.0 {
            return Err(ConfigError::Invalid {
                field: "method",
                source: matweight::Error::InvalidVariant("exact_p2 requires p = 2".into()),
            });
        }
        Ok(())
    }

    pub fn weight(&self) -> matweight::Result<MatrixWeight> {
        match &self.weight {
            WeightSpec::Weight(w) => Ok(w.clone()),
            WeightSpec::Named(s) if s == "identity" => Ok(MatrixWeight::identity(self.n, self.m)),
            WeightSpec::Named(s) => Err(matweight::Error::InvalidVariant(format!("unknown weight name {s:?}"))),
        }
    }

    pub fn window(&self) -> matweight::Result<CubeWindow> {
        let domain = match self.window.domain {
            DomainSpec::Unit => Domain::unit(self.n),
            DomainSpec::Centered => Domain::centered(self.n),
        };
        CubeWindow::new(domain, self.window.j_min, self.window.j_max)
    }

    pub fn filter_pair(&self) -> matweight::Result<FilterPair> {
        build_filters(self.n, self.filters.level.unwrap_or(9), self.filters.order)
    }

    pub fn dim_config(&self) -> DimConfig {
        DimConfig {
            domain: Domain::centered_box(self.n, self.dimension.box_exponent),
            j_min: self.dimension.j_min,
            j_max: self.dimension.j_max,
            i_max: self.dimension.i_max,
            per_axis: self.dimension.per_axis.unwrap_or(12),
            quad: self.quadrature.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::parse(r#"{"weight": "identity", "p": 2}"#).unwrap();
        assert_eq!(cfg.n, 1);
        assert_eq!(cfg.filters.level, Some(9));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.method, Method::Auto);
        let again = ExperimentConfig::parse(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn bad_exponent_is_rejected() {
        let e = ExperimentConfig::parse(r#"{"weight": "identity", "p": -1}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { field: "p", .. }), "{e}");
    }

    #[test]
    fn divergent_power_is_rejected() {
        let text = r#"{"weight": {"n": 1, "m": 1, "kind": {"kind": "power_log", "a": -1.0, "b": 0.0}}, "p": 2}"#;
        let e = ExperimentConfig::parse(text).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { source: matweight::Error::Divergence(_), .. }), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::parse(r#"{"weight": "identity", "p": 2, "colour": 1}"#), Err(ConfigError::Parse(_))));
        assert!(ExperimentConfig::parse(r#"{"weight": "identity", "p": 2, "window": {"levels": 3}}"#).is_err());
    }

    #[test]
    fn unknown_weight_name() {
        assert!(ExperimentConfig::parse(r#"{"weight": "heavy", "p": 2}"#).is_err());
    }
}
