//! Run configuration documents.
//!
//! A document is TOML or JSON. The model is given in exactly one of three
//! forms:
//!
//! ```toml
//! [model]                      # planar shorthand, B = diag(a1, a2)
//! a = [-3.0, -4.0]
//! b = [1.0, 2.0]
//! ```
//!
//! `A = [[..], [..], [..]]` (or `B = ...`) with `b = [b1, b2, b3]` for a
//! direct 3D model, or `lindblad_ops = [[[[re, im], [re, im]], [[re, im],
//! [re, im]]], ...]` for a list of 2×2 complex matrices.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{build_dissipation, pauli_decompose, Dimension, DissipationModel, LindbladOperator};
use crate::chimney::{boundary_conditions, find_apogee, BoundaryConditions, ChimneyGeometry};
use crate::error::{Error, Result};
use crate::variational::{Objective, ProblemSpec, SolverSettings, ZeroedControl};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_DELTA: f64 = 1e-3;
pub const DEFAULT_PANELS: usize = 1000;
pub const DEFAULT_STARTS_2D: usize = 25;
pub const DEFAULT_STARTS_3D: usize = 50;

/// Complex 2×2 matrix as `[[[re, im]; 2]; 2]`.
pub type ComplexRows = [[[f64; 2]; 2]; 2];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a_matrix: Option<[[f64; 3]; 3]>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b_matrix: Option<[[f64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lindblad_ops: Option<Vec<ComplexRows>>,
}

/// A document as written, before defaults. Every field is optional so that
/// command-line overrides can be merged in before [`RawConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: Option<RawModel>,
    pub dimension: Option<usize>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub objective: Option<Objective>,
    pub order: Option<usize>,
    pub panels: Option<usize>,
    pub starts: Option<usize>,
    pub seed: Option<u64>,
    pub start_radius: Option<f64>,
    pub zeroed_control: Option<ZeroedControl>,
    pub residual_tolerance: Option<f64>,
    pub restarts: Option<usize>,
    pub warm_start: Option<bool>,
    pub output_dir: Option<PathBuf>,
}

/// The resolved model description, kept in its input form so that output
/// documents can reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ModelSpec {
    Planar { a: [f64; 2], b: [f64; 2] },
    DirectA { a_matrix: [[f64; 3]; 3], b: [f64; 3] },
    DirectB { b_matrix: [[f64; 3]; 3], b: [f64; 3] },
    Lindblad { ops: Vec<ComplexRows> },
}

impl ModelSpec {
    pub fn build(&self) -> Result<DissipationModel> {
        match self {
            ModelSpec::Planar { a, b } => DissipationModel::planar(*a, *b),
            ModelSpec::DirectA { a_matrix, b } => {
                DissipationModel::from_a(rows_to_matrix(a_matrix), Vector3::from(*b))
            }
            ModelSpec::DirectB { b_matrix, b } => {
                DissipationModel::from_b(rows_to_matrix(b_matrix), Vector3::from(*b))
            }
            ModelSpec::Lindblad { ops } => {
                let ls = self.operators()?.unwrap_or_default();
                debug_assert_eq!(ls.len(), ops.len());
                build_dissipation(&ls.iter().map(pauli_decompose).collect::<Vec<_>>())
            }
        }
    }

    /// The Lindblad operators, if the model was given as a list of them.
    pub fn operators(&self) -> Result<Option<Vec<LindbladOperator>>> {
        let ModelSpec::Lindblad { ops } = self else {
            return Ok(None);
        };
        ops.iter()
            .enumerate()
            .map(|(i, rows)| {
                let m = Matrix2::from_fn(|r, c| Complex64::new(rows[r][c][0], rows[r][c][1]));
                LindbladOperator::new(m).map_err(|e| match e {
                    Error::Validation { reason, .. } => {
                        Error::validation(format!("model.lindblad_ops[{i}]"), reason)
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

fn rows_to_matrix(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| rows[r][c])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub dimension: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub objective: Objective,
    pub order: usize,
    pub panels: usize,
    pub starts: usize,
    pub seed: u64,
    pub start_radius: f64,
    pub zeroed_control: ZeroedControl,
    pub residual_tolerance: f64,
    pub restarts: usize,
    pub warm_start: bool,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn build_model(&self) -> Result<DissipationModel> {
        self.model.build()
    }

    /// Model, apogee and endpoints.
    pub fn geometry(&self) -> Result<(ChimneyGeometry, BoundaryConditions)> {
        let geom = find_apogee(&self.build_model()?)?;
        let bounds = boundary_conditions(&geom, self.epsilon, self.delta)?;
        Ok((geom, bounds))
    }

    pub fn problem(&self) -> Result<(ChimneyGeometry, ProblemSpec)> {
        let (geom, bounds) = self.geometry()?;
        let spec = ProblemSpec::new(geom.model, bounds, self.solver_settings())?;
        Ok((geom, spec))
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let mut s = SolverSettings::new(self.objective, self.order);
        s.panels = self.panels;
        s.starts = self.starts;
        s.seed = self.seed;
        s.start_radius = self.start_radius;
        s.zeroed_control = self.zeroed_control;
        s.residual_tolerance = self.residual_tolerance;
        s.restarts = self.restarts;
        s.warm_start = self.warm_start;
        s
    }
}

fn two(field: &str, v: &[f64]) -> Result<[f64; 2]> {
    <[f64; 2]>::try_from(v)
        .map_err(|_| Error::validation(field, format!("expected 2 numbers, got {}", v.len())))
}

fn three(field: &str, v: &[f64]) -> Result<[f64; 3]> {
    <[f64; 3]>::try_from(v)
        .map_err(|_| Error::validation(field, format!("expected 3 numbers, got {}", v.len())))
}

impl RawModel {
    fn resolve(self) -> Result<ModelSpec> {
        let forms = [
            self.a.is_some(),
            self.a_matrix.is_some(),
            self.b_matrix.is_some(),
            self.lindblad_ops.is_some(),
        ];
        match forms.iter().filter(|f| **f).count() {
            0 => {
                return Err(Error::validation(
                    "model",
                    "give one of `a` + `b` (planar), `A` + `b`, `B` + `b`, or `lindblad_ops`",
                ))
            }
            1 => {}
            _ => {
                return Err(Error::validation(
                    "model",
                    "`a`, `A`, `B` and `lindblad_ops` are mutually exclusive",
                ))
            }
        }
        if let Some(ops) = self.lindblad_ops {
            if self.b.is_some() {
                return Err(Error::validation("model.b", "not used with `lindblad_ops`"));
            }
            if ops.is_empty() {
                return Err(Error::validation("model.lindblad_ops", "need at least one operator"));
            }
            return Ok(ModelSpec::Lindblad { ops });
        }
        let b = self
            .b
            .ok_or_else(|| Error::validation("model.b", "missing drift vector"))?;
        if let Some(a) = self.a {
            return Ok(ModelSpec::Planar {
                a: two("model.a", &a)?,
                b: two("model.b", &b)?,
            });
        }
        let b = three("model.b", &b)?;
        if let Some(a_matrix) = self.a_matrix {
            return Ok(ModelSpec::DirectA { a_matrix, b });
        }
        Ok(ModelSpec::DirectB {
            b_matrix: self.b_matrix.expect("one form is present"),
            b,
        })
    }
}

fn renamed(field: &str, e: Error) -> Error {
    match e {
        Error::Validation { field: inner, reason } => {
            Error::validation(format!("{field}.{inner}"), reason)
        }
        other => other,
    }
}

impl RawConfig {
    /// Applies defaults and validates.
    pub fn resolve(self) -> Result<RunConfig> {
        let model = self
            .model
            .ok_or_else(|| Error::validation("model", "required field missing (the only required field)"))?
            .resolve()?;
        let built = model.build().map_err(|e| renamed("model", e))?;
        let natural = built.dimension().count();
        let dimension = self.dimension.unwrap_or(natural);
        Dimension::from_count(dimension).map_err(|e| renamed("dimension", e))?;
        if dimension != natural {
            return Err(Error::validation(
                "dimension",
                format!("model is {natural}-dimensional but dimension = {dimension}"),
            ));
        }
        built
            .require_negative_definite()
            .map_err(|e| renamed("model", e))?;

        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::validation(field, format!("must be positive and finite, got {v}")))
            }
        };
        let at_least_one = |field: &str, v: usize| {
            if v >= 1 {
                Ok(v)
            } else {
                Err(Error::validation(field, "must be at least 1"))
            }
        };
        let epsilon = positive("epsilon", self.epsilon.unwrap_or(DEFAULT_EPSILON))?;
        let delta = positive("delta", self.delta.unwrap_or(DEFAULT_DELTA))?;
        if delta > 1.0 {
            return Err(Error::validation("delta", format!("must not exceed 1, got {delta}")));
        }
        let default_starts = if dimension == 2 {
            DEFAULT_STARTS_2D
        } else {
            DEFAULT_STARTS_3D
        };
        let base = SolverSettings::new(Objective::Time, 1);
        Ok(RunConfig {
            model,
            dimension,
            epsilon,
            delta,
            objective: self.objective.unwrap_or(Objective::Time),
            order: at_least_one("order", self.order.unwrap_or(1))?,
            panels: at_least_one("panels", self.panels.unwrap_or(DEFAULT_PANELS))?,
            starts: at_least_one("starts", self.starts.unwrap_or(default_starts))?,
            seed: self.seed.unwrap_or(0),
            start_radius: positive("start_radius", self.start_radius.unwrap_or(base.start_radius))?,
            zeroed_control: self.zeroed_control.unwrap_or_default(),
            residual_tolerance: positive(
                "residual_tolerance",
                self.residual_tolerance.unwrap_or(base.residual_tolerance),
            )?,
            restarts: self.restarts.unwrap_or(base.restarts),
            warm_start: self.warm_start.unwrap_or(base.warm_start),
            output_dir: self.output_dir,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    /// JSON for `.json` files, TOML otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

pub fn parse_raw(text: &str, format: Format) -> Result<RawConfig> {
    match format {
        Format::Toml => toml::from_str(text).map_err(|e| Error::Config(e.to_string())),
        Format::Json => serde_json::from_str(text).map_err(|e| Error::Config(e.to_string())),
    }
}

pub fn parse_config(text: &str, format: Format) -> Result<RunConfig> {
    parse_raw(text, format)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_shorthand_with_defaults() {
        let c = parse_config("[model]\na = [-3.0, -4.0]\nb = [1.0, 2.0]\n", Format::Toml).unwrap();
        assert_eq!(c.dimension, 2);
        assert_eq!((c.epsilon, c.delta), (1e-3, 1e-3));
        assert_eq!(c.starts, 25);
        assert_eq!(c.panels, 1000);
        let m = c.build_model().unwrap();
        assert_eq!(m.b_matrix()[(0, 0)], -3.0);
        assert_eq!(m.b_matrix()[(1, 1)], -4.0);
    }

    #[test]
    fn direct_model_defaults_to_fifty_starts() {
        let doc = r#"{"model": {"B": [[-7,0,0],[0,-6,0],[0,0,-5]], "b": [1,2,3]}}"#;
        let c = parse_config(doc, Format::Json).unwrap();
        assert_eq!((c.dimension, c.starts), (3, 50));
        let doc = r#"{"model": {"A": [[2,0,0],[0,3,0],[0,0,4]], "b": [1,2,3]}}"#;
        let m = parse_config(doc, Format::Json).unwrap().build_model().unwrap();
        assert_eq!(m.b_matrix()[(0, 0)], -7.0);
    }

    #[test]
    fn non_negative_definite_b_is_rejected() {
        // A = diag(-7,-6,-5) is not even PSD
        let doc = r#"{"model": {"A": [[-7,0,0],[0,-6,0],[0,0,-5]], "b": [1,2,3]}}"#;
        let e = parse_config(doc, Format::Json).unwrap_err();
        assert!(e.to_string().contains("model"), "{e}");
        // A = diag(0,0,1) gives B = diag(-1,-1,0), singular
        let doc = r#"{"model": {"A": [[0,0,0],[0,0,0],[0,0,1]], "b": [1,2,3]}}"#;
        let e = parse_config(doc, Format::Json).unwrap_err();
        assert!(e.to_string().contains("negative definite"), "{e}");
    }

    #[test]
    fn empty_document_names_required_field() {
        let e = parse_config("", Format::Toml).unwrap_err();
        assert!(e.to_string().contains("model"), "{e}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let e = parse_config("[model]\na=[-3.0,-4.0]\nb=[1.0,2.0]\n\nordr = 3\n", Format::Toml)
            .unwrap_err();
        assert!(e.to_string().contains("ordr"), "{e}");
    }

    #[test]
    fn wrong_shapes_name_the_field() {
        let e = parse_config("[model]\na=[-3.0]\nb=[1.0,2.0]\n", Format::Toml).unwrap_err();
        assert!(e.to_string().contains("model.a"), "{e}");
        let e = parse_config("[model]\na=[-3.0,-4.0]\nb=[1.0,2.0]\ndelta=2.0\n", Format::Toml);
        assert!(e.is_err());
        let e = parse_config("delta = 2.0\n[model]\na=[-3.0,-4.0]\nb=[1.0,2.0]\n", Format::Toml)
            .unwrap_err();
        assert!(e.to_string().contains("delta"), "{e}");
        let e = parse_config("dimension = 3\n[model]\na=[-3.0,-4.0]\nb=[1.0,2.0]\n", Format::Toml)
            .unwrap_err();
        assert!(e.to_string().contains("dimension"), "{e}");
    }

    #[test]
    fn lindblad_ops_form() {
        // decay operator σ₋ = [[0, 0], [1, 0]]
        let doc = r#"{"model": {"lindblad_ops": [[[[0,0],[0,0]],[[1,0],[0,0]]]]}}"#;
        let c = parse_config(doc, Format::Json).unwrap();
        let m = c.build_model().unwrap();
        assert!((m.b_matrix()[(2, 2)] + 0.5).abs() < 1e-15);
        assert_eq!(c.model.operators().unwrap().unwrap().len(), 1);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = parse_config("[model]\na=[-3.0,-4.0]\nb=[1.0,2.0]\n", Format::Toml).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
