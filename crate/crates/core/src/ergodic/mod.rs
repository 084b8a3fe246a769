//! Estimators for the ergodic properties of the base map and of f_λ on K_λ:
//! periodic points, entropy, Lyapunov exponents, correlations and
//! sensitivity.

mod entropy;
mod hash;
mod lyapunov;
mod mixing;
mod periodic;

pub use entropy::{
    brin_katok_entropy, brin_katok_hat, brin_katok_in, spanning_set_size, topological_entropy_estimate,
    BrinKatokReport, HatSpace, OrbitSpace, SpanningReport, MIN_SEGMENTS,
};
pub use lyapunov::{
    lyapunov_exponents, lyapunov_hat, retract_to_unit_circle, LyapunovOptions, LyapunovReport, Retraction, MIN_ORBIT,
};
pub use mixing::{
    correlation, sensitivity_probe, CorrelationReport, Observable, SensitivityReport, BUMP_RADIUS, SEPARATION,
};
pub use periodic::{
    entropy_from_periodic_growth, lefschetz_count, lift_periodic_set, periodic_distribution_compare,
    periodic_in_attractor, periodic_points, periodic_points_complete, periodic_points_p1_oracle, periodic_residual,
    DistributionReport, PeriodicOptions, PeriodicSet, PERIODIC_DEDUPE, PERIODIC_TOL,
};

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
