//! The full battery of structural checks on one or more paths, as run by
//! `skorokhod verify`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::integral::{check_fixed_point, iterate_theta, DEFAULT_MAX_ITER};
use crate::measure::{Cumulative, PiecewiseLinear, SignedPath};
use crate::oracle::{brute_reflect, DenseGrid};
use crate::reflection::{
    check_additive_continuation, check_complementarity, check_semigroup, identity_tolerance,
    reflect, ReflectionResult,
};
use crate::regulating::{
    bridge_residuals, is_regulating, iterate_phi, phi, phi_residual, sigma_b, u_from,
    RegulatingFunction,
};
use crate::scalar::Scalar;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub max_iter: usize,
    /// Random `(s, t)` pairs per path for the pairwise identities.
    pub pairs: usize,
    /// Largest `k` for the bridge identity.
    pub bridge_steps: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            pairs: 64,
            bridge_steps: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub statement: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub metric: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub spec: &'static str,
    pub instances: usize,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

fn f<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

struct Recorder(Vec<CheckOutcome>);

impl Recorder {
    fn bound<T: Scalar>(&mut self, name: &'static str, statement: &'static str, metric: T, threshold: T) {
        self.0.push(CheckOutcome {
            name,
            statement,
            passed: metric <= threshold,
            metric: f(metric),
            threshold: f(threshold),
        });
    }

    fn count(&mut self, name: &'static str, statement: &'static str, violations: usize) {
        self.0.push(CheckOutcome {
            name,
            statement,
            passed: violations == 0,
            metric: violations as f64,
            threshold: 0.0,
        });
    }
}

fn sample_times<T: Scalar>(r: &ReflectionResult<T>, rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    let knots = r.qstar().knots();
    let horizon = r.qstar().horizon();
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                knots[rng.gen_range(0..knots.len())]
            } else {
                horizon * T::lit(rng.gen::<f64>())
            }
        })
        .collect()
}

/// Runs every check on one path.
pub fn run_checks<T: Scalar>(x: &SignedPath<T>, cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = reflection_checks(x, cfg)?;
    out.extend(theta_checks(x, cfg)?);
    out.extend(phi_checks(x, cfg)?);
    Ok(out)
}

/// Reflection against the oracle, complementarity, the pathwise lemmas on
/// random `(s, t)` pairs, and the two fixed points of `Θ`.
pub fn reflection_checks<T: Scalar>(x: &SignedPath<T>, cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    let mut rec = Recorder(Vec::new());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tol = identity_tolerance(x);
    let a_scale = T::one() + x.arrivals().total();
    let r = reflect(x);
    let q = r.qstar();
    let c = x.services();

    // Reflection against the exhaustive oracle at the path knots.
    let dense = DenseGrid::covering(x, x.horizon() / T::lit(64.0))?;
    let brute = brute_reflect(x, &dense);
    let worst = dense
        .points()
        .iter()
        .zip(&brute)
        .filter(|(t, _)| x.grid().contains(**t))
        .fold(T::zero(), |acc, (&t, &b)| acc.max((q.at(t) - b).abs()));
    rec.bound(
        "reflection_matches_brute_force",
        "Q*(t) equals the exhaustive max over s <= t of X(s,t] at every knot",
        worst,
        T::lit(1e-12) * x.scale(),
    );

    let ymass = r.regulator().total();
    rec.bound(
        "complementarity",
        "∫ Q* dY = 0: the regulator grows only while the queue is empty",
        check_complementarity(&r),
        tol * ymass * q.max_value(),
    );

    let times = sample_times(&r, &mut rng, cfg.pairs);
    let mut monotone = 0;
    let mut bracket = 0;
    let mut sigma_identity = T::zero();
    for &t in &times {
        let ct = c.at(t);
        let mut above = false;
        for &s in q.knots().iter().take_while(|&&s| s <= t) {
            let excess = q.at(s) - (ct - c.at(s));
            if above && excess < -tol {
                monotone += 1;
            }
            above |= excess > tol;
        }
        let sigma = r.sigma_star(x, t)?;
        sigma_identity = sigma_identity.max((q.at(sigma) - (ct - c.at(sigma))).abs());
        for &s in q.knots().iter().take_while(|&&s| s < t) {
            let excess = q.at(s) - (ct - c.at(s));
            if (s < sigma && excess > tol) || (s > sigma && excess < -tol) {
                bracket += 1;
            }
        }
    }
    rec.count(
        "indicator_monotonicity",
        "Q*(s) > C(s,t] and s <= s' <= t imply Q*(s') > C(s',t]",
        monotone,
    );
    rec.count(
        "sigma_star_bracket",
        "Q*(s) <= C(s,t] before σ*(t) and Q*(s) > C(s,t] after it",
        bracket,
    );
    rec.bound(
        "sigma_star_identity",
        "Q*(σ*(t)) = C(σ*(t), t]",
        sigma_identity,
        tol,
    );

    let mut semigroup = 0;
    let mut continuation = 0;
    for pair in times.chunks(2) {
        let (s, t) = match pair {
            [u, v] => (u.min(*v), u.max(*v)),
            _ => continue,
        };
        semigroup += usize::from(!check_semigroup(x, &r, s, t)?);
        continuation += usize::from(!check_additive_continuation(x, &r, s, t)?);
    }
    rec.count(
        "semigroup_identity",
        "Q*(t) = max(sup_{s<=u<=t} X(u,t], Q*(s) + X(s,t])",
        semigroup,
    );
    rec.count(
        "additive_continuation",
        "Q*(s) >= C(s,t] implies Q*(t) = Q*(s) + X(s,t]",
        continuation,
    );

    rec.bound(
        "integral_representation",
        "Q* = Θ(Q*)",
        check_fixed_point(q, x)?,
        T::lit(1e-9) * a_scale,
    );

    let zero = PiecewiseLinear::constant(&x.grid(), T::zero());
    rec.bound(
        "non_maximal_fixed_point",
        "Θ(0) = 0: the zero function is a fixed point below Q*",
        check_fixed_point(&zero, x)?,
        T::zero(),
    );

    Ok(rec.0)
}

/// Convergence of `Q_k` to `Q*`.
pub fn theta_checks<T: Scalar>(x: &SignedPath<T>, cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    let mut rec = Recorder(Vec::new());
    let a_scale = T::one() + x.arrivals().total();
    let r = reflect(x);
    let q = r.qstar();
    let qtrace = iterate_theta(x, T::lit(1e-13) * a_scale, cfg.max_iter)?;
    rec.count(
        "theta_iterates_nonincreasing",
        "Q_1 = A >= Q_2 >= ... >= 0 pointwise",
        usize::from(!qtrace.is_nonincreasing()),
    );
    let qlimit = qtrace.limit();
    let distance = qlimit
        .knots()
        .iter()
        .zip(qlimit.values())
        .fold(T::zero(), |acc, (&t, &v)| acc.max((v - q.at(t)).abs()));
    rec.bound(
        "maximal_fixed_point",
        "lim Θ^k(∞) = Q*: the maximal solution of Q = Θ(Q) is the reflection",
        distance,
        T::lit(1e-6) * a_scale,
    );

    Ok(rec.0)
}

/// `Φ` on `B_1 = C` and a few of its iterates, the limit `B_∞`, the function
/// `U`, and the bridge identity.
pub fn phi_checks<T: Scalar>(x: &SignedPath<T>, cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    let mut rec = Recorder(Vec::new());
    let tol = identity_tolerance(x);
    let a_scale = T::one() + x.arrivals().total();
    let r = reflect(x);
    let q = r.qstar();
    let c = x.services();
    let btrace = iterate_phi(x, T::lit(1e-13) * a_scale, cfg.max_iter)?;
    let picks = [0, 1, 2, btrace.iterates.len() / 2, btrace.iterates.len() - 1];
    let mut phi_excess = T::neg_infinity();
    let mut hitting = T::zero();
    let mut modulus = T::neg_infinity();
    for &i in &picks {
        let curve = Cumulative::from_function(btrace.iterate(i + 1))?;
        let b = RegulatingFunction::new(curve, x, tol)?;
        let image = phi(&b, x)?;
        for (&t, &v) in image.curve().knots().iter().zip(image.curve().values()) {
            phi_excess = phi_excess.max(v - b.at(t));
            let sigma = sigma_b(&b, x, t)?;
            if sigma < t {
                hitting = hitting.max((x.arrivals().at(sigma) + b.at(sigma) - c.at(t)).abs());
            }
        }
        for (w, v) in image.curve().knots().windows(2).zip(image.curve().values().windows(2)) {
            let rise = v[1] - v[0];
            modulus = modulus.max(-rise).max(rise - (c.at(w[1]) - c.at(w[0])));
        }
    }
    rec.bound("phi_below_identity", "Φ(B) <= B", phi_excess, T::zero());
    rec.bound(
        "hitting_identity",
        "A(σ_B(t)) + B(σ_B(t)) = C(t) where σ_B(t) < t",
        hitting,
        T::lit(1e-9),
    );
    rec.bound(
        "phi_modulus",
        "0 <= Φ(B)(t') - Φ(B)(t) <= C(t') - C(t)",
        modulus,
        T::lit(1e-12),
    );
    rec.count(
        "phi_iterates_nonincreasing",
        "B_1 = C >= B_2 >= ... pointwise",
        usize::from(!btrace.is_nonincreasing()),
    );

    let blimit = RegulatingFunction::new(Cumulative::from_function(btrace.limit())?, x, tol)?;
    rec.bound(
        "phi_limit_fixed_point",
        "B_∞ = Φ(B_∞)",
        phi_residual(&blimit, x)?,
        T::lit(1e-6),
    );
    let u = u_from(x);
    let above_u = blimit
        .curve()
        .knots()
        .iter()
        .fold(T::neg_infinity(), |acc, &t| acc.max(blimit.at(t) - u.at(t)));
    rec.bound(
        "phi_limit_below_u",
        "every fixed point B of Φ satisfies B <= U; here B = B_∞",
        above_u,
        T::lit(1e-6),
    );
    rec.count(
        "u_regulating",
        "U = sup (C - A) is a regulating function",
        usize::from(!is_regulating(u.curve(), x, tol)),
    );
    rec.bound("u_fixed_point", "U = Φ(U)", phi_residual(&u, x)?, T::lit(1e-9));
    let u_gap = u
        .curve()
        .knots()
        .iter()
        .fold(T::zero(), |acc, &t| acc.max((u.at(t) - (q.at(t) - x.net(t))).abs()));
    rec.bound("u_equals_regulator", "U = Q* - X", u_gap, tol);

    let bridge = bridge_residuals(x, cfg.bridge_steps.max(1))?
        .into_iter()
        .fold(T::zero(), T::max);
    rec.bound(
        "bridge_identity",
        "Q_k + C = A + B_k for every k",
        bridge,
        tol,
    );

    Ok(rec.0)
}

/// Runs every check on every path; a check passes only if it passes on all.
pub fn run_suite<T: Scalar>(paths: &[SignedPath<T>], cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut merged: Vec<CheckOutcome> = Vec::new();
    for (i, x) in paths.iter().enumerate() {
        let cfg = SuiteConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            ..cfg.clone()
        };
        for outcome in run_checks(x, &cfg)? {
            match merged.iter_mut().find(|m| m.name == outcome.name) {
                Some(m) => {
                    m.passed &= outcome.passed;
                    if outcome.metric > m.metric || !outcome.passed {
                        m.metric = m.metric.max(outcome.metric);
                        m.threshold = outcome.threshold;
                    }
                }
                None => merged.push(outcome),
            }
        }
    }
    Ok(SuiteReport {
        spec: SCHEMA_VERSION,
        instances: paths.len(),
        passed: merged.iter().all(|m| m.passed),
        checks: merged,
    })
}
