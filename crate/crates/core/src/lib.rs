//! One-sided Skorokhod reflection for continuous piecewise-linear paths.
//!
//! A path is given as a pair of cumulative functions `(A, C)` of atomless
//! measures with `X = A - C`. The crate computes the reflected process
//! `Q*(t) = X(t) - min(0, inf_{s<=t} X(s))`, its regulator, and the last
//! emptiness time, and implements the two monotone operators that
//! characterize `Q*`:
//!
//! * the integral-representation operator
//!   `Θ(Q)(t) = ∫_0^t 1(Q(s) > C(s,t]) dA(s)`, whose maximal fixed point is
//!   `Q*`, together with the decreasing iteration `Q_{k+1} = Θ(Q_k)`;
//! * the regulating-function operator `Φ(B) = B ∘ σ_B`, its iteration
//!   `B_{k+1} = Φ(B_k)` started from `C`, and the running maximum
//!   `U = sup (C - A)` that dominates every fixed point of `Φ`.
//!
//! Brute-force oracles live in [`oracle`], fluid-queue experiments in
//! [`simulate`], and the full set of structural checks in [`suite`].
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64`/`*F32` aliases below fix the scalar type.

pub mod error;
pub mod integral;
pub mod io;
pub mod measure;
pub mod oracle;
pub mod reflection;
pub mod regulating;
pub mod scalar;
pub mod simulate;
pub mod suite;

pub use error::{Error, Result};
pub use integral::{
    check_fixed_point, check_theta_monotone, iterate_theta, iterate_theta_on, theta, theta_on_grid,
    Content, IterationTrace,
};
pub use measure::{refine, superlevel_measure, Cumulative, Grid, PiecewiseLinear, SignedPath};
pub use reflection::{
    check_additive_continuation, check_complementarity, check_semigroup, reflect, reflect_from,
    ReflectionResult,
};
pub use regulating::{
    bridge_identity, check_fixed_point_dominated, is_regulating, iterate_phi, iterate_phi_on, phi,
    phi_residual, sigma_b, u_from, RegulatingFunction,
};
pub use scalar::Scalar;

/// Schema tag carried by every JSON report.
pub const SCHEMA_VERSION: &str = "skorokhod-kit/1";

pub type CumulativeF64 = Cumulative<f64>;
pub type CumulativeF32 = Cumulative<f32>;
pub type PiecewiseLinearF64 = PiecewiseLinear<f64>;
pub type PiecewiseLinearF32 = PiecewiseLinear<f32>;
pub type SignedPathF64 = SignedPath<f64>;
pub type SignedPathF32 = SignedPath<f32>;
pub type GridF64 = Grid<f64>;
pub type GridF32 = Grid<f32>;
pub type ReflectionResultF64 = ReflectionResult<f64>;
pub type ReflectionResultF32 = ReflectionResult<f32>;
pub type IterationTraceF64 = IterationTrace<f64>;
pub type IterationTraceF32 = IterationTrace<f32>;
pub type RegulatingFunctionF64 = RegulatingFunction<f64>;
pub type RegulatingFunctionF32 = RegulatingFunction<f32>;
