//! Single-hop statistics of greedy cost-progress forwarding.
//!
//! The forwarding node sits at the origin and the trajectory runs along
//! +x. Under Rule B with the node just left of the trajectory, only nodes
//! in the positive quadrant are eligible, and the one minimizing
//! `cost(d) / x` is chosen. The quadrant process is generated in order of
//! increasing distance from the origin, which lets each trial stop as soon
//! as no farther node can beat the incumbent ratio; this is an exact
//! sample of the unbounded quadrant, with no truncation window.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Per-hop transmission cost as a function of hop length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HopCostKind {
    /// `d^2`: area reserved by a bandwidth-limited transmission.
    Quadratic,
    /// `a * d^b + c`: amplifier plus electronics energy.
    Energy { a: f64, b: f64, c: f64 },
}

impl HopCostKind {
    pub fn energy(a: f64, b: f64, c: f64) -> Result<Self> {
        validate_energy(a, b, c)?;
        Ok(HopCostKind::Energy { a, b, c })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            HopCostKind::Quadratic => Ok(()),
            HopCostKind::Energy { a, b, c } => validate_energy(a, b, c),
        }
    }

    pub fn cost(&self, d: f64) -> f64 {
        match *self {
            HopCostKind::Quadratic => d * d,
            HopCostKind::Energy { a, b, c } => a * d.powf(b) + c,
        }
    }

    /// Hop length minimizing cost per meter, if one exists.
    pub fn optimal_hop(&self) -> Option<f64> {
        match *self {
            HopCostKind::Quadratic => None,
            HopCostKind::Energy { a, b, c } => d_opt(a, b, c).ok(),
        }
    }

    /// Lower bound of `cost(d') / d'` over all `d' >= d`.
    fn ratio_floor_beyond(&self, d: f64) -> f64 {
        match *self {
            HopCostKind::Quadratic => d,
            HopCostKind::Energy { a, b, c } => {
                let knee = if a > 0.0 && b > 1.0 {
                    (c / ((b - 1.0) * a)).powf(1.0 / b)
                } else {
                    f64::INFINITY
                };
                let d = d.max(knee.min(f64::MAX));
                if d.is_finite() {
                    (a * d.powf(b) + c) / d
                } else {
                    0.0
                }
            }
        }
    }
}

pub(crate) fn validate_energy(a: f64, b: f64, c: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Parameter(format!("energy coefficient a must be > 0, got {a}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Parameter(format!("energy constant c must be > 0, got {c}")));
    }
    if !(b > 1.0 && b <= 6.0) {
        return Err(Error::Parameter(format!(
            "path-loss exponent b must lie in (1, 6], got {b}"
        )));
    }
    Ok(())
}

/// Hop length minimizing `(a d^b + c) / d`.
pub fn d_opt(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(b > 1.0) {
        return Err(Error::Domain(format!(
            "cost per meter has no interior minimum for b = {b} <= 1"
        )));
    }
    if !(a > 0.0 && c > 0.0) {
        return Err(Error::Domain(format!("d_opt needs a > 0 and c > 0, got a={a}, c={c}")));
    }
    Ok((c / ((b - 1.0) * a)).powf(1.0 / b))
}

/// One simulated hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopSample {
    pub x: f64,
    pub y: f64,
    pub distance: f64,
    pub cost: f64,
    pub ratio: f64,
}

/// Means and standard errors of progress, cost and cost-progress ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopStats {
    pub mean_progress: f64,
    pub mean_cost: f64,
    pub mean_ratio: f64,
    pub se_progress: f64,
    pub se_cost: f64,
    pub se_ratio: f64,
    /// Renewal-reward cost per meter, `E[C] / E[X]`.
    pub cost_per_meter: f64,
    /// Delta-method standard error of `cost_per_meter`.
    pub se_cost_per_meter: f64,
    /// Zero for closed-form statistics.
    pub n_trials: usize,
}

impl HopStats {
    pub fn from_samples(samples: &[HopSample]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 samples, got {n}")));
        }
        let nf = n as f64;
        let mean = |f: &dyn Fn(&HopSample) -> f64| samples.iter().map(f).sum::<f64>() / nf;
        let se = |f: &dyn Fn(&HopSample) -> f64, m: f64| {
            let var = samples.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / (nf - 1.0);
            (var / nf).sqrt()
        };
        let mx = mean(&|s| s.x);
        let mc = mean(&|s| s.cost);
        let mr = mean(&|s| s.ratio);
        let cpm = mc / mx;
        // Linearization of the ratio of means: residuals C - cpm * X.
        let se_cpm = se(&|s| s.cost - cpm * s.x, 0.0) / mx;
        Ok(Self {
            mean_progress: mx,
            mean_cost: mc,
            mean_ratio: mr,
            se_progress: se(&|s| s.x, mx),
            se_cost: se(&|s| s.cost, mc),
            se_ratio: se(&|s| s.ratio, mr),
            cost_per_meter: cpm,
            se_cost_per_meter: se_cpm,
            n_trials: n,
        })
    }
}

/// Closed-form single-hop expectations for `d^2` cost at density `lambda`:
/// `E[X] = 1/sqrt(2 lambda)`, `E[D^2] = 4/(pi lambda)`,
/// `E[R] = sqrt(2/lambda)`.
pub fn bandwidth_hop_formulas(lambda: f64) -> Result<HopStats> {
    check_density(lambda)?;
    let mean_progress = 1.0 / (2.0 * lambda).sqrt();
    let mean_cost = 4.0 / (std::f64::consts::PI * lambda);
    Ok(HopStats {
        mean_progress,
        mean_cost,
        mean_ratio: (2.0 / lambda).sqrt(),
        se_progress: 0.0,
        se_cost: 0.0,
        se_ratio: 0.0,
        cost_per_meter: mean_cost / mean_progress,
        se_cost_per_meter: 0.0,
        n_trials: 0,
    })
}

pub(crate) fn check_density(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "density must be positive and finite, got {lambda}"
        )))
    }
}

/// Simulate one hop. Nodes arrive in order of distance; the squared radii
/// of a quadrant Poisson process of intensity `lambda` have exponential
/// increments with rate `lambda * pi / 4`.
fn simulate_one(lambda: f64, kind: &HopCostKind, seed: u64, trial: u64) -> HopSample {
    let mut rng = stream_rng(seed, trial);
    let area_rate = lambda * std::f64::consts::FRAC_PI_4;
    let mut gamma = 0.0f64;
    let mut best: Option<HopSample> = None;
    loop {
        gamma += rng.sample::<f64, _>(Exp1);
        let d = (gamma / area_rate).sqrt();
        if let Some(b) = &best {
            // No node at distance >= d can have a strictly smaller ratio.
            if kind.ratio_floor_beyond(d) >= b.ratio {
                return *b;
            }
        }
        let theta = rng.random::<f64>() * std::f64::consts::FRAC_PI_2;
        let x = d * theta.cos();
        if x <= 0.0 {
            continue;
        }
        let cost = kind.cost(d);
        let ratio = cost / x;
        // Strict improvement only: ties keep the nearer node.
        if best.as_ref().is_none_or(|b| ratio < b.ratio) {
            best = Some(HopSample {
                x,
                y: d * theta.sin(),
                distance: d,
                cost,
                ratio,
            });
        }
    }
}

/// Raw per-trial samples; trial `k` uses random stream `(seed, k)`.
pub fn simulate_hops(lambda: f64, kind: &HopCostKind, n_trials: usize, seed: u64) -> Result<Vec<HopSample>> {
    check_density(lambda)?;
    if let HopCostKind::Energy { a, b, c } = *kind {
        // c = 0 is allowed here so that d^2 can be reached through the
        // energy path.
        if !(a > 0.0 && b > 1.0 && c >= 0.0) {
            return Err(Error::Parameter(format!("invalid hop cost a={a}, b={b}, c={c}")));
        }
    }
    Ok((0..n_trials as u64)
        .into_par_iter()
        .map(|k| simulate_one(lambda, kind, seed, k))
        .collect())
}

/// Monte-Carlo single-hop statistics for any hop-cost kind.
pub fn hop_stats_mc(lambda: f64, kind: &HopCostKind, n_trials: usize, seed: u64) -> Result<HopStats> {
    if n_trials < 2 {
        return Err(Error::Parameter(format!("n_trials must be at least 2, got {n_trials}")));
    }
    HopStats::from_samples(&simulate_hops(lambda, kind, n_trials, seed)?)
}

/// Smallest trial count accepted by [`energy_cost_mc`].
pub const MIN_ENERGY_TRIALS: usize = 10_000;

/// Monte-Carlo hop statistics under the energy cost `a d^b + c`.
pub fn energy_cost_mc(lambda: f64, a: f64, b: f64, c: f64, n_trials: usize, seed: u64) -> Result<HopStats> {
    check_density(lambda)?;
    validate_energy(a, b, c)?;
    if n_trials < MIN_ENERGY_TRIALS {
        return Err(Error::Parameter(format!(
            "n_trials must be at least {MIN_ENERGY_TRIALS}, got {n_trials}"
        )));
    }
    hop_stats_mc(lambda, &HopCostKind::Energy { a, b, c }, n_trials, seed)
}
