//! Strict JSON run configuration.

use std::fmt;
use std::path::Path;

use nonlocal_bbm::fields::catalog;
use nonlocal_bbm::geometry::{point_from_slice, Point};
use nonlocal_bbm::limits::AuditParts;
use nonlocal_bbm::quadrature::Preset;
use nonlocal_bbm::{AlphaSchedule, FieldSpec, QuadratureSpec, TailPolicy, TestField};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Constants,
    Eval,
    Sweep,
    Audit,
    Report,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Constants => "constants",
            Mode::Eval => "eval",
            Mode::Sweep => "sweep",
            Mode::Audit => "audit",
            Mode::Report => "report",
        }
    }
}

/// Operator evaluated by `eval` and swept by `sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `D^alpha_p f(x)`; swept as `(1 - alpha) D^alpha f(x)` against `K_n |grad f(x)|`.
    #[default]
    FracDerivative,
    /// `D^alpha f` restricted to `B(x, radius)`.
    Truncated,
    /// `(1 - alpha)^{1/p} I_alpha(D^alpha_p f)(x)`.
    Composed,
    /// `[f]_{W^{alpha,p}}`; swept as `(1 - alpha) [f]` against `K_n ||grad f||_1`.
    Seminorm,
    /// `I_1(|grad f|)(x)`; `eval` only.
    RieszOfGradient,
}

impl OperatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OperatorKind::FracDerivative => "frac_derivative",
            OperatorKind::Truncated => "truncated",
            OperatorKind::Composed => "composed",
            OperatorKind::Seminorm => "seminorm",
            OperatorKind::RieszOfGradient => "riesz_of_gradient",
        }
    }

    pub fn uses_points(&self) -> bool {
        !matches!(self, OperatorKind::Seminorm)
    }
}

/// A catalog name or an explicit field expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldRef {
    Catalog(String),
    Spec(FieldSpec),
}

/// Base preset plus optional per-field overrides.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_shells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_shells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauss_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_policy: Option<TailPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rel_error: Option<f64>,
}

impl QuadratureConfig {
    pub fn resolve(&self, dim: usize) -> QuadratureSpec {
        let base = QuadratureSpec::preset(self.preset.unwrap_or(Preset::Default), dim);
        QuadratureSpec {
            inner_shells: self.inner_shells.unwrap_or(base.inner_shells),
            outer_shells: self.outer_shells.unwrap_or(base.outer_shells),
            gauss_order: self.gauss_order.unwrap_or(base.gauss_order),
            sphere_order: self.sphere_order.unwrap_or(base.sphere_order),
            tail_policy: self.tail_policy.unwrap_or(base.tail_policy),
            target_rel_error: self.target_rel_error.unwrap_or(base.target_rel_error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_json")]
    pub json: String,
}

fn default_csv() -> String {
    "results.csv".into()
}

fn default_json() -> String {
    "summary.json".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            csv: default_csv(),
            json: default_json(),
        }
    }
}

fn default_p() -> f64 {
    1.0
}

/// The configuration file as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldRef>,
    /// Evaluation points; the origin when empty.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub schedule: AlphaSchedule,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub operator: OperatorKind,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Ball radius for the truncated operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default)]
    pub audit: AuditParts,
    #[serde(default)]
    pub outputs: Outputs,
    /// When present it must agree with the command being run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

/// A schema or range violation, reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " at line {l}, column {c}")?;
        }
        if !self.field.is_empty() {
            write!(f, " in field `{}`", self.field)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

/// A validated configuration with every derived object built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub field_name: String,
    pub field: Option<TestField>,
    pub points: Vec<Point>,
    pub spec: QuadratureSpec,
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = (inner.line(), inner.column());
        let text = inner.to_string();
        let suffix = format!(" at line {line} column {column}");
        ConfigError {
            field: if path == "." { String::new() } else { path },
            line: Some(line),
            column: Some(column),
            message: text.strip_suffix(&suffix).unwrap_or(&text).to_string(),
        }
    })?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::at("", format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

impl RunConfig {
    /// Range checks and construction of the field, points and quadrature spec.
    pub fn resolve(&self, preset_override: Option<Preset>) -> Result<Resolved, ConfigError> {
        let dim = self.dimension;
        if !(1..=3).contains(&dim) {
            return Err(ConfigError::at(
                "dimension",
                format!("must be 1, 2 or 3, got {dim}"),
            ));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(ConfigError::at(
                "p",
                format!("must be a finite value >= 1, got {}", self.p),
            ));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ConfigError::at(
                    "radius",
                    format!("must be positive and finite, got {r}"),
                ));
            }
        }
        let mut config = self.clone();
        if let Some(p) = preset_override {
            config.quadrature.preset = Some(p);
        }
        let spec = config.quadrature.resolve(dim);
        spec.validate()
            .map_err(|e| ConfigError::at("quadrature", e.to_string()))?;

        let (field_name, field) = match &config.field {
            None => (String::new(), None),
            Some(FieldRef::Catalog(name)) => {
                let entry = if name == "zero" {
                    Some(FieldSpec::Zero)
                } else {
                    catalog(dim)
                        .map_err(|e| ConfigError::at("field", e.to_string()))?
                        .into_iter()
                        .find(|e| e.name == name)
                        .map(|e| e.spec)
                };
                let spec = entry.ok_or_else(|| {
                    ConfigError::at("field", format!("unknown catalog field {name:?}"))
                })?;
                (
                    name.clone(),
                    Some(
                        spec.build(dim)
                            .map_err(|e| ConfigError::at("field", e.to_string()))?,
                    ),
                )
            }
            Some(FieldRef::Spec(s)) => (
                "custom".into(),
                Some(
                    s.build(dim)
                        .map_err(|e| ConfigError::at("field", e.to_string()))?,
                ),
            ),
        };

        let points = if config.points.is_empty() {
            vec![[0.0; 3]]
        } else {
            config
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if p.len() != dim {
                        return Err(ConfigError::at(
                            format!("points[{i}]"),
                            format!("expected {dim} coordinates, got {}", p.len()),
                        ));
                    }
                    point_from_slice(dim, p)
                        .map_err(|e| ConfigError::at(format!("points[{i}]"), e.to_string()))
                })
                .collect::<Result<_, _>>()?
        };
        Ok(Resolved {
            config,
            field_name,
            field,
            points,
            spec,
        })
    }
}

impl Resolved {
    /// Checks that depend on the command being run.
    pub fn check_mode(&self, mode: Mode) -> Result<(), ConfigError> {
        if let Some(m) = self.config.mode {
            if m != mode {
                return Err(ConfigError::at(
                    "mode",
                    format!(
                        "config asks for {} but the command is {}",
                        m.as_str(),
                        mode.as_str()
                    ),
                ));
            }
        }
        if mode == Mode::Constants {
            return Ok(());
        }
        if self.field.is_none() {
            return Err(ConfigError::at(
                "field",
                format!("required by {}", mode.as_str()),
            ));
        }
        let op = self.config.operator;
        let sweeps = matches!(mode, Mode::Sweep | Mode::Report);
        if op == OperatorKind::Truncated && self.config.radius.is_none() {
            return Err(ConfigError::at(
                "radius",
                "required by the truncated operator",
            ));
        }
        if sweeps {
            if op == OperatorKind::RieszOfGradient {
                return Err(ConfigError::at(
                    "operator",
                    "riesz_of_gradient has no alpha sweep",
                ));
            }
            if matches!(
                op,
                OperatorKind::FracDerivative | OperatorKind::Truncated | OperatorKind::Seminorm
            ) && self.config.p != 1.0
            {
                return Err(ConfigError::at(
                    "p",
                    format!("the {} sweep is defined for p = 1 only", op.as_str()),
                ));
            }
        }
        let composed = op == OperatorKind::Composed || matches!(mode, Mode::Audit | Mode::Report);
        if composed && !self.config.schedule.is_composed_compatible() {
            return Err(ConfigError::at(
                "schedule",
                "composed operators need every alpha in [1/2, 1)",
            ));
        }
        if (op == OperatorKind::Composed || op == OperatorKind::RieszOfGradient)
            && self.config.dimension == 1
        {
            return Err(ConfigError::at(
                "operator",
                format!("{} needs dimension >= 2", op.as_str()),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config_str(r#"{"dimension": 2, "field": "bump"}"#).unwrap();
        assert_eq!(c.schedule, AlphaSchedule::default());
        assert_eq!(c.p, 1.0);
        assert_eq!(c.operator, OperatorKind::FracDerivative);
        assert_eq!(c.outputs, Outputs::default());
        let r = c.resolve(None).unwrap();
        assert_eq!(r.spec, QuadratureSpec::default_for(2));
        assert_eq!(r.points, vec![[0.0; 3]]);
    }

    #[test]
    fn alpha_one_is_rejected_with_the_field_name() {
        let e = parse_config_str("{\"dimension\": 2,\n \"schedule\": [0.5, 1.0]}").unwrap_err();
        assert_eq!(e.field, "schedule");
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("outside (0, 1)"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_config_str(r#"{"dimension": 2, "alpha_max": 0.99}"#).unwrap_err();
        assert!(e.message.contains("alpha_max"), "{e}");
        let e = parse_config_str(r#"{"dimension": 2, "quadrature": {"gauss": 8}}"#).unwrap_err();
        assert_eq!(e.field, "quadrature.gauss");
    }

    #[test]
    fn range_checks() {
        let bad = |json: &str| {
            parse_config_str(json)
                .unwrap()
                .resolve(None)
                .unwrap_err()
                .field
        };
        assert_eq!(bad(r#"{"dimension": 4}"#), "dimension");
        assert_eq!(bad(r#"{"dimension": 2, "p": 0.5}"#), "p");
        assert_eq!(bad(r#"{"dimension": 2, "points": [[0.0]]}"#), "points[0]");
        assert_eq!(
            bad(r#"{"dimension": 2, "quadrature": {"gauss_order": 4}}"#),
            "quadrature"
        );
        assert_eq!(bad(r#"{"dimension": 2, "field": "nope"}"#), "field");
    }

    #[test]
    fn explicit_field_specs_and_presets() {
        let c = parse_config_str(
            r#"{"dimension": 1, "field": {"kind": "bump", "scale": 2.0}, "quadrature": {"preset": "fast", "gauss_order": 12}}"#,
        )
        .unwrap();
        let r = c.resolve(None).unwrap();
        assert_eq!(r.field_name, "custom");
        assert_eq!(r.spec.gauss_order, 12);
        assert_eq!(
            r.spec.inner_shells,
            QuadratureSpec::preset(Preset::Fast, 1).inner_shells
        );
        let high = c.resolve(Some(Preset::High)).unwrap();
        assert_eq!(
            high.spec.inner_shells,
            QuadratureSpec::preset(Preset::High, 1).inner_shells
        );
        assert_eq!(high.spec.gauss_order, 12);
    }

    #[test]
    fn mode_checks() {
        let r = parse_config_str(r#"{"dimension": 1, "field": "bump", "operator": "composed"}"#)
            .unwrap()
            .resolve(None)
            .unwrap();
        assert_eq!(r.check_mode(Mode::Eval).unwrap_err().field, "operator");
        let r = parse_config_str(r#"{"dimension": 2, "mode": "audit"}"#)
            .unwrap()
            .resolve(None)
            .unwrap();
        assert_eq!(r.check_mode(Mode::Sweep).unwrap_err().field, "mode");
        assert_eq!(r.check_mode(Mode::Audit).unwrap_err().field, "field");
    }
}
