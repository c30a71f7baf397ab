//! Microscopic network models and the macroscopic cost functions they
//! induce.
//!
//! A [`CostModel`] maps local node density `lambda` (nodes/m^2) to a
//! unitless cost: the model's cost per meter of transport divided by the
//! cost per meter in a nominal network, `c_nominal`.
//!
//! | model       | cost per meter             | default normalization       |
//! |-------------|----------------------------|-----------------------------|
//! | bandwidth   | `(4 sqrt 2 / pi) / sqrt(l)`| `c_nominal = 4 sqrt 2 / pi` |
//! | min-hop     | `sqrt(l)`                  | `c_nominal = 1`             |
//! | constant    | `value`                    | `c_nominal = 1`             |
//! | tabulated   | log-linear table           | `c_nominal = 1`             |
//! | energy      | Monte-Carlo table          | passes through `(0.05, 1)`  |

mod hop;

pub use hop::{
    bandwidth_hop_formulas, d_opt, energy_cost_mc, hop_stats_mc, simulate_hops, HopCostKind, HopSample, HopStats,
    MIN_ENERGY_TRIALS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldKind, ScalarField2D};
use crate::rng::derive_seed;
use hop::{check_density, validate_energy};

/// `E[D^2] / E[X]` of the bandwidth-limited model at unit density.
pub const BANDWIDTH_COST_SCALE: f64 = 4.0 * std::f64::consts::SQRT_2 / std::f64::consts::PI;

/// Number of log-spaced densities in an energy cost table.
pub const ENERGY_TABLE_POINTS: usize = 64;

/// Density lookup table of raw cost per meter, interpolated linearly in
/// `ln(lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub lambdas: Vec<f64>,
    pub costs: Vec<f64>,
    /// Monte-Carlo standard errors; zeros for exact tables.
    pub std_errors: Vec<f64>,
}

impl CostTable {
    pub fn new(lambdas: Vec<f64>, costs: Vec<f64>, std_errors: Vec<f64>) -> Result<Self> {
        if lambdas.len() < 2 || lambdas.len() != costs.len() || costs.len() != std_errors.len() {
            return Err(Error::Parameter(format!(
                "cost table needs >= 2 rows of equal length, got {}/{}/{}",
                lambdas.len(),
                costs.len(),
                std_errors.len()
            )));
        }
        if lambdas[0] <= 0.0 || lambdas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter(
                "cost table densities must be positive and strictly increasing".into(),
            ));
        }
        if costs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::Parameter("cost table values must be positive".into()));
        }
        Ok(Self {
            lambdas,
            costs,
            std_errors,
        })
    }

    pub fn exact(lambdas: Vec<f64>, costs: Vec<f64>) -> Result<Self> {
        let n = lambdas.len();
        Self::new(lambdas, costs, vec![0.0; n])
    }

    pub fn lambda_range(&self) -> (f64, f64) {
        (self.lambdas[0], *self.lambdas.last().expect("non-empty"))
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = self.lambda_range();
        a <= lo && hi <= b
    }

    pub fn interpolate(&self, lambda: f64) -> Result<f64> {
        check_density(lambda)?;
        let (lo, hi) = self.lambda_range();
        if lambda < lo || lambda > hi {
            return Err(Error::Domain(format!(
                "density {lambda} outside the cost table range [{lo}, {hi}]"
            )));
        }
        let k = self
            .lambdas
            .partition_point(|&l| l <= lambda)
            .clamp(1, self.lambdas.len() - 1);
        let (l0, l1) = (self.lambdas[k - 1], self.lambdas[k]);
        let t = (lambda.ln() - l0.ln()) / (l1.ln() - l0.ln());
        Ok(self.costs[k - 1] + t * (self.costs[k] - self.costs[k - 1]))
    }
}

/// Which microscopic model produces the cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostVariant {
    Bandwidth,
    Energy { a: f64, b: f64, c: f64 },
    MinHop,
    Constant { value: f64 },
    Tabulated { table: CostTable },
}

/// How the nominal cost per meter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by this fixed value.
    Nominal(f64),
    /// Choose `c_nominal` so that `evaluate(lambda) == cost`.
    ThroughPoint { lambda: f64, cost: f64 },
}

/// Monte-Carlo settings for models that need a simulated table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            n_trials: MIN_ENERGY_TRIALS,
            seed: 0x0b71_c0de,
        }
    }
}

/// Density-to-cost mapping of one microscopic model.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    variant: CostVariant,
    normalization: Normalization,
    monte_carlo: MonteCarlo,
    energy_table: Option<CostTable>,
    /// Resolved `c_nominal` for energy models normalized through a point.
    energy_nominal: Option<f64>,
}

impl CostModel {
    pub fn new(variant: CostVariant) -> Result<Self> {
        let normalization = match &variant {
            CostVariant::Bandwidth => Normalization::Nominal(BANDWIDTH_COST_SCALE),
            CostVariant::Energy { a, b, c } => {
                validate_energy(*a, *b, *c)?;
                Normalization::ThroughPoint {
                    lambda: 0.05,
                    cost: 1.0,
                }
            }
            CostVariant::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(Error::Parameter(format!("constant cost must be > 0, got {value}")));
                }
                Normalization::Nominal(1.0)
            }
            CostVariant::MinHop | CostVariant::Tabulated { .. } => Normalization::Nominal(1.0),
        };
        Ok(Self {
            variant,
            normalization,
            monte_carlo: MonteCarlo::default(),
            energy_table: None,
            energy_nominal: None,
        })
    }

    pub fn bandwidth() -> Self {
        Self::new(CostVariant::Bandwidth).expect("valid")
    }

    pub fn min_hop() -> Self {
        Self::new(CostVariant::MinHop).expect("valid")
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(CostVariant::Constant { value })
    }

    pub fn energy(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(CostVariant::Energy { a, b, c })
    }

    pub fn tabulated(table: CostTable) -> Self {
        Self::new(CostVariant::Tabulated { table }).expect("valid")
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Result<Self> {
        match normalization {
            Normalization::Nominal(v) if !(v > 0.0 && v.is_finite()) => {
                return Err(Error::Parameter(format!("c_nominal must be > 0, got {v}")));
            }
            Normalization::ThroughPoint { lambda, cost } if !(lambda > 0.0 && cost > 0.0) => {
                return Err(Error::Parameter(format!(
                    "normalization point must be positive, got ({lambda}, {cost})"
                )));
            }
            _ => {}
        }
        self.normalization = normalization;
        self.energy_nominal = None;
        Ok(self)
    }

    pub fn with_monte_carlo(mut self, monte_carlo: MonteCarlo) -> Result<Self> {
        if monte_carlo.n_trials < MIN_ENERGY_TRIALS {
            return Err(Error::Parameter(format!(
                "Monte-Carlo n_trials must be at least {MIN_ENERGY_TRIALS}"
            )));
        }
        self.monte_carlo = monte_carlo;
        self.energy_table = None;
        self.energy_nominal = None;
        Ok(self)
    }

    pub fn variant(&self) -> &CostVariant {
        &self.variant
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn energy_table(&self) -> Option<&CostTable> {
        self.energy_table.as_ref()
    }

    /// Short lowercase name of the variant.
    pub fn name(&self) -> &'static str {
        match self.variant {
            CostVariant::Bandwidth => "bandwidth",
            CostVariant::Energy { .. } => "energy",
            CostVariant::MinHop => "min_hop",
            CostVariant::Constant { .. } => "constant",
            CostVariant::Tabulated { .. } => "tabulated",
        }
    }

    /// Cost per meter before normalization, in the model's own units.
    pub fn raw_cost(&self, lambda: f64) -> Result<f64> {
        check_density(lambda)?;
        match &self.variant {
            CostVariant::Bandwidth => Ok(BANDWIDTH_COST_SCALE / lambda.sqrt()),
            CostVariant::MinHop => Ok(lambda.sqrt()),
            CostVariant::Constant { value } => Ok(*value),
            CostVariant::Tabulated { table } => table.interpolate(lambda),
            CostVariant::Energy { .. } => self
                .energy_table
                .as_ref()
                .ok_or_else(|| Error::State("energy cost model evaluated before its density table was built".into()))?
                .interpolate(lambda),
        }
    }

    /// The divisor that turns raw cost per meter into unitless cost.
    pub fn c_nominal(&self) -> Result<f64> {
        match self.normalization {
            Normalization::Nominal(v) => Ok(v),
            Normalization::ThroughPoint { lambda, cost } => match self.variant {
                CostVariant::Energy { .. } => self
                    .energy_nominal
                    .ok_or_else(|| Error::State("energy cost model normalization not yet resolved".into())),
                _ => Ok(self.raw_cost(lambda)? / cost),
            },
        }
    }

    /// Unitless cost at density `lambda`.
    pub fn evaluate(&self, lambda: f64) -> Result<f64> {
        check_density(lambda)?;
        Ok(self.raw_cost(lambda)? / self.c_nominal()?)
    }

    /// True when [`CostModel::evaluate`] is usable over `[lo, hi]`.
    pub fn is_ready_for(&self, lo: f64, hi: f64) -> bool {
        match self.variant {
            CostVariant::Energy { .. } => {
                self.energy_table.as_ref().is_some_and(|t| t.covers(lo, hi)) && self.c_nominal().is_ok()
            }
            _ => true,
        }
    }

    /// For energy models, simulate the cost table over `[lo, hi]` with
    /// [`ENERGY_TABLE_POINTS`] log-spaced densities and resolve the
    /// normalization. Other variants are returned unchanged.
    pub fn prepared(&self, lo: f64, hi: f64) -> Result<Self> {
        let CostVariant::Energy { a, b, c } = self.variant else {
            return Ok(self.clone());
        };
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Parameter(format!("invalid table range [{lo}, {hi}]")));
        }
        let MonteCarlo { n_trials, seed } = self.monte_carlo;
        let n = ENERGY_TABLE_POINTS;
        let (log_lo, log_hi) = (lo.ln(), hi.ln());
        let mut lambdas = Vec::with_capacity(n);
        let mut costs = Vec::with_capacity(n);
        let mut errors = Vec::with_capacity(n);
        for k in 0..n {
            let lambda = if k == n - 1 {
                hi
            } else if k == 0 {
                lo
            } else {
                (log_lo + (log_hi - log_lo) * k as f64 / (n - 1) as f64).exp()
            };
            let stats = energy_cost_mc(lambda, a, b, c, n_trials, derive_seed(seed, k as u64))?;
            lambdas.push(lambda);
            costs.push(stats.cost_per_meter);
            errors.push(stats.se_cost_per_meter);
        }
        let mut model = self.clone();
        model.energy_table = Some(CostTable::new(lambdas, costs, errors)?);
        model.energy_nominal = match self.normalization {
            Normalization::Nominal(v) => Some(v),
            Normalization::ThroughPoint { lambda, cost } => {
                let stats = energy_cost_mc(lambda, a, b, c, n_trials, derive_seed(seed, u64::MAX))?;
                Some(stats.cost_per_meter / cost)
            }
        };
        Ok(model)
    }

    /// Energy model with a precomputed table, e.g. one loaded from CSV.
    pub fn with_energy_table(mut self, table: CostTable, c_nominal: f64) -> Result<Self> {
        if !matches!(self.variant, CostVariant::Energy { .. }) {
            return Err(Error::Parameter("only energy models take a simulated table".into()));
        }
        if !(c_nominal > 0.0) {
            return Err(Error::Parameter(format!("c_nominal must be > 0, got {c_nominal}")));
        }
        self.energy_table = Some(table);
        self.energy_nominal = Some(c_nominal);
        Ok(self)
    }

    /// `(a d_opt^b + c) / (d_opt c_nominal)`: the energy model's cost as
    /// density grows without bound.
    pub fn energy_floor(&self) -> Result<f64> {
        let CostVariant::Energy { a, b, c } = self.variant else {
            return Err(Error::Parameter("only energy models have a density floor".into()));
        };
        let d = d_opt(a, b, c)?;
        Ok((a * d.powf(b) + c) / d / self.c_nominal()?)
    }
}

/// Apply a cost model to every node of a density field. Energy models get a
/// table spanning `[min/2, 2 max]` of the density if they lack one.
pub fn build_cost_field(density: &ScalarField2D, model: &CostModel) -> Result<ScalarField2D> {
    if density.kind() != FieldKind::Density {
        return Err(Error::Parameter(format!(
            "expected a density field, got a {} field",
            density.kind().as_str()
        )));
    }
    let (lo, hi) = (density.min(), density.max());
    let prepared;
    let model = if model.is_ready_for(lo, hi) {
        model
    } else {
        prepared = model.prepared(lo / 2.0, hi * 2.0)?;
        &prepared
    };
    let c_nominal = model.c_nominal()?;
    let spec = *density.spec();
    let values = density
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &lambda)| {
            model
                .raw_cost(lambda)
                .map(|raw| raw / c_nominal)
                .map_err(|e| e.context(format!("grid node {}", spec.node_at(idx))))
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField2D::new(spec, values, FieldKind::Cost)
}
