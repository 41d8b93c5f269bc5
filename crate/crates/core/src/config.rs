//! JSON run configuration for the command-line tool.
//!
//! Every section rejects unknown keys. Command-line flags take precedence
//! over values given here.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiments::FieldSource;
use crate::grid::GridSpec;
use crate::point::Point;
use crate::shapes::{circle_in_ring, RingParams, Shape, ShapeSpec};

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand this config is meant for; checked when present.
    pub operation: Option<String>,
    pub scene: Option<SceneConfig>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub parameters: Parameters,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

/// The pair of sets to compare.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneConfig {
    Shapes {
        a: ShapeSpec,
        b: ShapeSpec,
    },
    /// `A = B`.
    Identical(ShapeSpec),
    CircleInRing {
        dim: usize,
        displacement: Vec<f64>,
        #[serde(default)]
        ring: RingParams,
    },
}

impl SceneConfig {
    pub fn build(&self) -> Result<(Shape, Shape)> {
        match self {
            SceneConfig::Shapes { a, b } => {
                let (a, b) = (a.build()?, b.build()?);
                if a.dim() != b.dim() {
                    return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
                }
                Ok((a, b))
            }
            SceneConfig::Identical(s) => {
                let s = s.build()?;
                Ok((s.clone(), s))
            }
            SceneConfig::CircleInRing { dim, displacement, ring } => {
                if displacement.len() != *dim {
                    return Err(Error::DimensionMismatch { expected: *dim, found: displacement.len() });
                }
                circle_in_ring(*dim, Point::from_slice(displacement)?, ring)
            }
        }
    }
}

/// Operation parameters. Each subcommand reads the ones it needs.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Parameters {
    pub h: Option<f64>,
    pub source: Option<FieldSource>,
    pub oracle_gap: Option<f64>,
    pub suitable_gap: Option<f64>,
    pub sampled_m: Option<usize>,
    pub witness: Option<[Vec<f64>; 2]>,
    pub radius: Option<f64>,
    pub certify_gap: Option<f64>,
    pub dim: Option<usize>,
    pub displacement: Option<Vec<f64>>,
    pub displacements: Option<Vec<Vec<f64>>>,
    pub h_list: Option<Vec<f64>>,
    pub runs: Option<usize>,
    pub magnitude: Option<f64>,
    pub ring: Option<RingParams>,
    pub starts: Option<usize>,
    pub x0: Option<f64>,
    pub k: Option<f64>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<u64>>,
    pub scan_limit: Option<u64>,
    pub count: Option<usize>,
    pub bins: Option<usize>,
    pub trials: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn check_operation(&self, subcommand: &str) -> Result<()> {
        match &self.operation {
            Some(op) if op != subcommand => {
                Err(Error::Config(format!("config is for `{op}`, not `{subcommand}`")))
            }
            _ => Ok(()),
        }
    }
}
