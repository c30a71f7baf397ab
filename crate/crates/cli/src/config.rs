//! Experiment configuration: one JSON document per run.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use opticroute_core::costmodels::{MonteCarlo, Normalization};
use opticroute_core::io::read_field;
use opticroute_core::{
    CostModel, CostVariant, Expr, FieldKind, GridSpec, HopCostKind, Point2, ScalarField2D, SourceSet,
};
use serde::Deserialize;

use crate::CliError;

/// Seed radius used around point sources unless the config overrides it.
pub const DEFAULT_POINT_SEED_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Density {
    Expression(String),
    /// Field CSV with its JSON sidecar; relative paths resolve against the
    /// config file's directory.
    CsvPath(PathBuf),
}

/// A cost model entry: the model variant plus optional label and
/// normalization overrides.
#[derive(Debug, Clone, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub variant: CostVariant,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub normalization: Option<Normalization>,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarlo>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<CostModel, CliError> {
        let mut model = CostModel::new(self.variant.clone()).map_err(|e| CliError::config("cost_model", e))?;
        if let Some(n) = self.normalization {
            model = model
                .with_normalization(n)
                .map_err(|e| CliError::config("cost_model.normalization", e))?;
        }
        if let Some(mc) = self.monte_carlo {
            model = model
                .with_monte_carlo(mc)
                .map_err(|e| CliError::config("cost_model.monte_carlo", e))?;
        }
        Ok(model)
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            match &self.variant {
                CostVariant::Bandwidth => "bandwidth",
                CostVariant::Energy { .. } => "energy",
                CostVariant::MinHop => "min_hop",
                CostVariant::Constant { .. } => "constant",
                CostVariant::Tabulated { .. } => "tabulated",
            }
            .to_string()
        })
    }

    /// Per-hop cost matching the model's microscopic picture.
    pub fn hop_cost(&self) -> HopCostKind {
        match self.variant {
            CostVariant::Energy { a, b, c } => HopCostKind::Energy { a, b, c },
            _ => HopCostKind::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    pub a: Point2,
    pub b: Point2,
}

/// Ray start points spaced evenly on the segment `from`-`to`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fan {
    pub from: Point2,
    pub to: Point2,
    pub count: usize,
}

impl Fan {
    pub fn points(&self) -> Vec<Point2> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.from.lerp(self.to, 0.5)],
            n => (0..n)
                .map(|k| self.from.lerp(self.to, k as f64 / (n - 1) as f64))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EikonalSettings {
    /// Wavefront levels; defaults to eight levels evenly spaced below the
    /// largest S in the domain.
    #[serde(default)]
    pub levels: Option<Vec<f64>>,
    #[serde(default)]
    pub ray_starts: Vec<Point2>,
    #[serde(default)]
    pub ray_fan: Option<Fan>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LambdaGrid {
    List(Vec<f64>),
    LogSpaced { min: f64, max: f64, count: usize },
}

impl LambdaGrid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            LambdaGrid::List(ref v) => v.clone(),
            LambdaGrid::LogSpaced { min, max, count } => match count {
                0 => Vec::new(),
                1 => vec![min],
                n => (0..n)
                    .map(|k| match k {
                        0 => min,
                        _ if k == n - 1 => max,
                        _ => (min.ln() + (max.ln() - min.ln()) * k as f64 / (n - 1) as f64).exp(),
                    })
                    .collect(),
            },
        }
    }
}

fn default_lambdas() -> LambdaGrid {
    LambdaGrid::LogSpaced {
        min: 0.005,
        max: 0.5,
        count: 16,
    }
}

fn default_trials() -> usize {
    100_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopstatsSettings {
    #[serde(default = "default_lambdas")]
    pub lambdas: LambdaGrid,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
}

impl Default for HopstatsSettings {
    fn default() -> Self {
        HopstatsSettings {
            lambdas: default_lambdas(),
            n_trials: default_trials(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub density: Density,
    #[serde(default)]
    pub cost_model: Option<ModelConfig>,
    /// Several models at once, for the route overlay and cost curves.
    #[serde(default)]
    pub cost_models: Vec<ModelConfig>,
    #[serde(default)]
    pub source: Option<SourceSet>,
    #[serde(default)]
    pub endpoints: Option<Endpoints>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub point_seed_radius: Option<f64>,
    /// Hop cost for forwarding and the oracle; defaults to the one matching
    /// the first cost model.
    #[serde(default)]
    pub hop_cost: Option<HopCostKind>,
    #[serde(default)]
    pub max_edge: Option<f64>,
    #[serde(default)]
    pub eikonal: EikonalSettings,
    #[serde(default)]
    pub hopstats: HopstatsSettings,
    /// Directory the config was read from; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line overrides of individual keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub grid_h: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.apply(overrides);
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seeds = vec![seed];
        }
        if let Some(out) = &o.out {
            // Relative to the working directory, unlike the config key.
            self.output_dir = Some(std::path::absolute(out).unwrap_or_else(|_| out.clone()));
        }
        if let Some(h) = o.grid_h {
            self.domain.h = h;
        }
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        let d = &self.domain;
        GridSpec::from_extent(d.x_min, d.x_max, d.y_min, d.y_max, d.h).map_err(|e| CliError::config("domain", e))
    }

    pub fn density_field(&self) -> Result<Arc<ScalarField2D>, CliError> {
        let field = match &self.density {
            Density::Expression(text) => {
                let expr = Expr::parse(text).map_err(|e| CliError::config("density.expression", e))?;
                expr.rasterize(self.grid()?, FieldKind::Density)
                    .map_err(|e| CliError::config("density.expression", e))?
            }
            Density::CsvPath(p) => {
                let path = self.base_dir.join(p);
                let field = read_field(&path).map_err(|e| CliError::config("density.csv_path", e))?;
                if field.kind() != FieldKind::Density {
                    return Err(CliError::Config(format!(
                        "density.csv_path: {} holds a {} field",
                        path.display(),
                        field.kind().as_str()
                    )));
                }
                field
            }
        };
        Ok(Arc::new(field))
    }

    /// All configured models: `cost_models`, or the single `cost_model`.
    pub fn models(&self) -> Result<Vec<ModelConfig>, CliError> {
        if !self.cost_models.is_empty() {
            return Ok(self.cost_models.clone());
        }
        self.cost_model
            .clone()
            .map(|m| vec![m])
            .ok_or_else(|| CliError::Config("cost_model: missing (set cost_model or cost_models)".into()))
    }

    pub fn primary_model(&self) -> Result<ModelConfig, CliError> {
        Ok(self.models()?.remove(0))
    }

    pub fn endpoints(&self) -> Result<Endpoints, CliError> {
        self.endpoints
            .ok_or_else(|| CliError::Config("endpoints: missing {\"a\": ..., \"b\": ...}".into()))
    }

    pub fn source(&self) -> Result<SourceSet, CliError> {
        match (&self.source, self.endpoints) {
            (Some(s), _) => Ok(s.clone()),
            (None, Some(e)) => Ok(SourceSet::Point(e.a)),
            (None, None) => Err(CliError::Config("source: missing (set source or endpoints)".into())),
        }
    }

    pub fn seeds(&self) -> Result<&[u64], CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds: at least one seed is required".into()));
        }
        Ok(&self.seeds)
    }

    pub fn output_dir(&self) -> PathBuf {
        match &self.output_dir {
            Some(p) if p.is_relative() => self.base_dir.join(p),
            Some(p) => p.clone(),
            None => self.base_dir.join("out"),
        }
    }

    pub fn point_seed_radius(&self) -> Result<f64, CliError> {
        let r = self.point_seed_radius.unwrap_or(DEFAULT_POINT_SEED_RADIUS);
        if !(r >= 0.0 && r.is_finite()) {
            return Err(CliError::Config(format!("point_seed_radius: must be >= 0, got {r}")));
        }
        Ok(r)
    }

    pub fn hop_cost(&self) -> Result<HopCostKind, CliError> {
        let kind = match self.hop_cost {
            Some(k) => k,
            None => self.primary_model()?.hop_cost(),
        };
        kind.validate().map_err(|e| CliError::config("hop_cost", e))?;
        Ok(kind)
    }
}
