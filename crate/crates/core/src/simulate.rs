//! Random fluid-queue inputs and long-horizon stationary experiments.
//!
//! Arrival and service measures are built as piecewise-linear cumulatives
//! driven by a seeded ChaCha8 generator, one stream per measure, so a
//! scenario file plus its seed reproduces every path bit for bit.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::theta_at;
use crate::measure::{stieltjes, Cumulative, SignedPath};
use crate::reflection::reflect;
use crate::SCHEMA_VERSION;

/// Name of the generator recorded in every report.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng";

const ARRIVAL_STREAM: u64 = 0;
const SERVICE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceModel {
    /// `A(t) = a t`, `C(t) = c t`.
    ConstantRate,
    /// Arrivals alternate exponential on and off periods at a peak rate that
    /// makes the mean rate `a`; service at constant rate `c`.
    OnOff,
    /// Both rates redrawn uniformly on `[0, 2a)` and `[0, 2c)` every `grid_step`.
    PiecewiseUniformRate,
}

fn default_grid_step() -> f64 {
    1.0
}
fn default_warmup() -> f64 {
    0.1
}
fn default_period() -> f64 {
    1.0
}
fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub source_model: SourceModel,
    pub arrival_rate: f64,
    pub service_rate: f64,
    pub horizon: f64,
    pub seed: u64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    /// Mean on period of the on-off source, seconds.
    #[serde(default = "default_period")]
    pub on_mean: f64,
    /// Mean off period of the on-off source, seconds.
    #[serde(default = "default_period")]
    pub off_mean: f64,
    /// Number of evenly spaced times at which `Θ(Q*)` is compared with `Q*`.
    #[serde(default = "default_samples")]
    pub residual_samples: usize,
}

impl Scenario {
    pub fn new(source_model: SourceModel, arrival_rate: f64, service_rate: f64, horizon: f64, seed: u64) -> Self {
        Self {
            source_model,
            arrival_rate,
            service_rate,
            horizon,
            seed,
            grid_step: default_grid_step(),
            warmup_fraction: default_warmup(),
            on_mean: default_period(),
            off_mean: default_period(),
            residual_samples: default_samples(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("arrival_rate", self.arrival_rate),
            ("service_rate", self.service_rate),
            ("horizon", self.horizon),
            ("grid_step", self.grid_step),
            ("on_mean", self.on_mean),
            ("off_mean", self.off_mean),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Scenario(format!("{name} must be positive and finite, got {v}")));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::Scenario(format!(
                "warmup_fraction must lie in [0, 1), got {}",
                self.warmup_fraction
            )));
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Builds the arrival and service cumulatives of a scenario.
pub fn generate(sc: &Scenario) -> Result<SignedPath<f64>> {
    sc.validate()?;
    let (a, c, horizon) = (sc.arrival_rate, sc.service_rate, sc.horizon);
    let (arrivals, services) = match sc.source_model {
        SourceModel::ConstantRate => (Cumulative::linear(a, horizon)?, Cumulative::linear(c, horizon)?),
        SourceModel::OnOff => (on_off(sc, &mut sc.rng(ARRIVAL_STREAM))?, Cumulative::linear(c, horizon)?),
        SourceModel::PiecewiseUniformRate => (
            uniform_rates(a, sc, &mut sc.rng(ARRIVAL_STREAM))?,
            uniform_rates(c, sc, &mut sc.rng(SERVICE_STREAM))?,
        ),
    };
    SignedPath::new(arrivals, services)
}

fn on_off(sc: &Scenario, rng: &mut ChaCha8Rng) -> Result<Cumulative<f64>> {
    let peak = sc.arrival_rate * (sc.on_mean + sc.off_mean) / sc.on_mean;
    let on = Exp::new(1.0 / sc.on_mean).map_err(|e| Error::Scenario(e.to_string()))?;
    let off = Exp::new(1.0 / sc.off_mean).map_err(|e| Error::Scenario(e.to_string()))?;
    // Start in the stationary state distribution.
    let mut is_on = rng.gen::<f64>() < sc.on_mean / (sc.on_mean + sc.off_mean);
    let mut knots = vec![0.0];
    let mut values = vec![0.0];
    let mut t = 0.0;
    while t < sc.horizon {
        let length = if is_on { on.sample(rng) } else { off.sample(rng) };
        let end = (t + length).min(sc.horizon);
        if end > t {
            let rate = if is_on { peak } else { 0.0 };
            let v = values.last().unwrap() + rate * (end - t);
            knots.push(end);
            values.push(v);
            t = end;
        }
        is_on = !is_on;
    }
    Cumulative::from_breakpoints(knots, values)
}

fn uniform_rates(mean: f64, sc: &Scenario, rng: &mut ChaCha8Rng) -> Result<Cumulative<f64>> {
    let mut knots = vec![0.0];
    let mut values = vec![0.0];
    let mut i = 1u64;
    loop {
        let t0 = *knots.last().unwrap();
        let t1 = (i as f64 * sc.grid_step).min(sc.horizon);
        i += 1;
        if t1 <= t0 {
            continue;
        }
        let rate = rng.gen_range(0.0..2.0 * mean);
        values.push(values.last().unwrap() + rate * (t1 - t0));
        knots.push(t1);
        if t1 >= sc.horizon {
            break;
        }
    }
    Cumulative::from_breakpoints(knots, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub spec: String,
    pub source_model: SourceModel,
    pub seed: u64,
    pub rng: String,
    pub horizon: f64,
    pub warmup: f64,
    /// Time average of `Q*` over the retained window.
    pub time_avg_q: f64,
    /// `∫ Q* dA / A(window)`, the arrival-weighted average.
    pub palm_avg_q: f64,
    /// `time_avg_q / ((a / c) palm_avg_q)`; 1 by convention when both averages vanish.
    pub littles_ratio: f64,
    /// `sup |Q*(t) - Θ(Q*)(t)|` over the sampled times past the warmup.
    pub integral_rep_residual: f64,
    pub peak_q: f64,
    /// Set when the queue never builds up and the ratio is 0/0.
    pub degenerate: bool,
    pub empirical_arrival_rate: f64,
    pub empirical_service_rate: f64,
}

/// Reflects one long path, drops the warmup prefix and reports the
/// time-average and arrival-average content, their ratio against `a / c`,
/// and the integral-representation residual.
pub fn run_stationary(sc: &Scenario) -> Result<StationaryReport> {
    sc.validate()?;
    if sc.arrival_rate >= sc.service_rate {
        return Err(Error::Scenario(format!(
            "no stationary regime: requires a < c, got arrival_rate {} >= service_rate {}",
            sc.arrival_rate, sc.service_rate
        )));
    }
    let warmup = sc.warmup_fraction * sc.horizon;
    let window = sc.horizon - warmup;
    if window < sc.grid_step {
        return Err(Error::Scenario(format!(
            "horizon {} leaves a window of {window} after warmup, shorter than grid_step {}",
            sc.horizon, sc.grid_step
        )));
    }
    let x = generate(sc)?;
    let r = reflect(&x);
    let q = r.qstar();
    let a = x.arrivals();

    let time_avg_q = q.integral(warmup, sc.horizon) / window;
    let mass = a.at(sc.horizon) - a.at(warmup);
    let palm_avg_q = if mass > 0.0 {
        stieltjes(q, a, warmup, sc.horizon) / mass
    } else {
        0.0
    };
    let degenerate = time_avg_q == 0.0 && palm_avg_q == 0.0;
    let littles_ratio = if degenerate {
        1.0
    } else {
        time_avg_q / (sc.arrival_rate / sc.service_rate * palm_avg_q)
    };

    let n = sc.residual_samples.max(2);
    let ts: Vec<f64> = (0..n)
        .map(|j| (warmup + window * j as f64 / (n - 1) as f64).min(sc.horizon))
        .collect();
    let image = theta_at(q, &x, &ts)?;
    let integral_rep_residual = ts
        .iter()
        .zip(&image)
        .fold(0.0f64, |acc, (&t, &v)| acc.max((q.at(t) - v).abs()));

    Ok(StationaryReport {
        spec: SCHEMA_VERSION.to_string(),
        source_model: sc.source_model,
        seed: sc.seed,
        rng: RNG_ALGORITHM.to_string(),
        horizon: sc.horizon,
        warmup,
        time_avg_q,
        palm_avg_q,
        littles_ratio,
        integral_rep_residual,
        peak_q: q.max_value(),
        degenerate,
        empirical_arrival_rate: a.total() / sc.horizon,
        empirical_service_rate: x.services().total() / sc.horizon,
    })
}

/// A random path for property sweeps: horizon in `[1, 10)`, each cumulative
/// with between 2 and `max_knots` knots at uniform random times, and segment
/// rates uniform on `[0, 2)` with one segment in five flat.
pub fn random_path(seed: u64, max_knots: usize) -> SignedPath<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.gen_range(1.0..10.0);
    let a = random_cumulative(&mut rng, horizon, max_knots);
    let c = random_cumulative(&mut rng, horizon, max_knots);
    SignedPath::new(a, c).expect("shared horizon")
}

fn random_cumulative(rng: &mut ChaCha8Rng, horizon: f64, max_knots: usize) -> Cumulative<f64> {
    let n = rng.gen_range(2..=max_knots.max(2));
    let mut knots: Vec<f64> = (0..n - 2).map(|_| rng.gen_range(0.0..horizon)).collect();
    knots.push(0.0);
    knots.push(horizon);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut values = vec![0.0];
    for w in knots.windows(2) {
        let rate = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.0) };
        values.push(values.last().unwrap() + rate * (w[1] - w[0]));
    }
    Cumulative::from_breakpoints(knots, values).expect("sorted knots, nonnegative rates")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rate_is_exactly_linear() {
        let sc = Scenario::new(SourceModel::ConstantRate, 0.5, 1.0, 10.0, 7);
        let x = generate(&sc).unwrap();
        assert_eq!(x.arrivals().knots(), &[0.0, 10.0]);
        assert_eq!(x.arrivals().at(4.0), 2.0);
        assert_eq!(x.services().at(4.0), 4.0);
    }

    #[test]
    fn same_seed_same_path() {
        for model in [SourceModel::OnOff, SourceModel::PiecewiseUniformRate] {
            let sc = Scenario::new(model, 0.5, 1.0, 500.0, 42);
            assert_eq!(generate(&sc).unwrap(), generate(&sc).unwrap());
            let other = Scenario { seed: 43, ..sc.clone() };
            assert_ne!(generate(&sc).unwrap(), generate(&other).unwrap());
        }
    }

    #[test]
    fn on_off_mean_rate_matches_nominal() {
        let sc = Scenario::new(SourceModel::OnOff, 0.5, 1.0, 20_000.0, 3);
        let x = generate(&sc).unwrap();
        let rate = x.arrivals().total() / sc.horizon;
        assert!((rate - 0.5).abs() < 0.025, "{rate}");
    }

    #[test]
    fn constant_rate_drains_and_is_degenerate() {
        let sc = Scenario::new(SourceModel::ConstantRate, 0.5, 1.0, 100.0, 1);
        let report = run_stationary(&sc).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.littles_ratio, 1.0);
        assert_eq!(report.time_avg_q, 0.0);
        assert_eq!(report.integral_rep_residual, 0.0);
    }

    #[test]
    fn unstable_load_is_rejected() {
        let sc = Scenario::new(SourceModel::OnOff, 1.0, 1.0, 100.0, 1);
        let err = run_stationary(&sc).unwrap_err();
        assert!(err.to_string().contains("a < c"));
    }

    #[test]
    fn invalid_scenarios() {
        let mut sc = Scenario::new(SourceModel::OnOff, 0.5, 1.0, 100.0, 1);
        sc.warmup_fraction = 1.0;
        assert!(generate(&sc).is_err());
        sc.warmup_fraction = 0.1;
        sc.service_rate = -1.0;
        assert!(generate(&sc).is_err());
        let sc = Scenario {
            grid_step: 50.0,
            warmup_fraction: 0.9,
            ..Scenario::new(SourceModel::OnOff, 0.5, 1.0, 100.0, 1)
        };
        assert!(run_stationary(&sc).is_err());
        let bad = serde_json::from_str::<Scenario>(
            r#"{"source_model":"bursty","arrival_rate":1,"service_rate":2,"horizon":1,"seed":0}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn random_paths_are_reproducible() {
        assert_eq!(random_path(9, 50), random_path(9, 50));
        let x = random_path(10, 200);
        assert!(x.arrivals().knots().len() <= 200);
    }
}
