//! Lyapunov exponents from the chart-Jacobian cocycle with a QR step at
//! every iterate.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::history::{lift_map, Prehistory};
use crate::maps::{chart_jacobian_in, step_with_jacobian, MapKind};
use crate::projective::{ProjPoint, C64};
use crate::rng::par_map;

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovReport {
    /// Sorted descending, nats per iteration; one per complex chart dimension.
    pub exponents: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub orbit_count: usize,
    pub orbit_length: usize,
}

impl LyapunovReport {
    pub fn largest(&self) -> f64 {
        self.exponents[0]
    }

    pub fn smallest(&self) -> f64 {
        *self.exponents.last().expect("nonempty")
    }
}

/// Projection applied after every step, e.g. onto an invariant circle whose
/// neighborhood is numerically unstable.
pub type Retraction<'a> = &'a (dyn Fn(&ProjPoint) -> ProjPoint + Sync);

#[derive(Clone, Copy, Default)]
pub struct LyapunovOptions<'a> {
    /// Steps (of both the point and the frame) discarded before accumulating.
    pub burn_in: usize,
    pub retract: Option<Retraction<'a>>,
}

/// Shortest accepted orbit.
pub const MIN_ORBIT: usize = 100;

/// Relative rounding floor of an exponent estimate, applied to standard
/// errors so that exactly reproduced constants do not produce zero errors.
const SE_FLOOR: f64 = 16.0 * f64::EPSILON;

/// Neumaier-compensated running sum; long orbits otherwise accumulate a
/// rounding bias far above the floor below.
#[derive(Clone, Copy, Default)]
struct Sum {
    hi: f64,
    lo: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.hi + x;
        if self.hi.abs() >= x.abs() {
            self.lo += (self.hi - t) + x;
        } else {
            self.lo += (x - t) + self.hi;
        }
        self.hi = t;
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Re-orthonormalizes `jac * q` and accumulates the log-moduli of the diagonal.
fn qr_step(jac: &DMatrix<C64>, q: &mut DMatrix<C64>, sums: &mut [Sum]) {
    let qr = (jac * &*q).qr();
    let r = qr.r();
    let mut qn = qr.q();
    // keep the diagonal positive so the frame evolves continuously
    for i in 0..sums.len() {
        let d = r[(i, i)];
        sums[i].add(d.norm().ln());
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let mut col = qn.column_mut(i);
            col *= phase;
        }
    }
    *q = qn;
}

/// Cocycle along one orbit of `map` from `x`.
fn orbit_exponents(map: &MapKind, x0: &ProjPoint, len: usize, opts: &LyapunovOptions) -> Result<Vec<f64>> {
    let m = x0.dim();
    let mut x = x0.clone();
    let mut q = DMatrix::<C64>::identity(m, m);
    let mut sums = vec![Sum::default(); m];
    for step in 0..opts.burn_in + len {
        if step == opts.burn_in {
            sums.iter_mut().for_each(|s| *s = Sum::default());
        }
        let (mut y, jac) = step_with_jacobian(map, &x)?;
        let mut j = jac.to_dmatrix();
        if let Some(r) = opts.retract {
            y = r(&y);
            if y.max_index() != jac.image_chart {
                let t =
                    chart_jacobian_in(&MapKind::Identity { dim: m }, &y, Some(jac.image_chart), Some(y.max_index()))?;
                j = t.to_dmatrix() * j;
            }
        }
        qr_step(&j, &mut q, &mut sums);
        x = y;
    }
    Ok(sums.into_iter().map(|s| s.value() / len as f64).collect())
}

fn summarize(per_orbit: Vec<Vec<f64>>, len: usize) -> Result<LyapunovReport> {
    let count = per_orbit.len();
    if count == 0 {
        return Err(Error::InsufficientData("no orbits".into()));
    }
    let m = per_orbit[0].len();
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let vals: Vec<f64> = per_orbit.iter().map(|o| o[i]).collect();
            let mean = vals.iter().sum::<f64>() / count as f64;
            let se = if count > 1 {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
                (var / count as f64).sqrt()
            } else {
                f64::INFINITY
            };
            (mean, se.max(SE_FLOOR * mean.abs()))
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(LyapunovReport {
        exponents: pairs.iter().map(|p| p.0).collect(),
        standard_errors: pairs.iter().map(|p| p.1).collect(),
        orbit_count: count,
        orbit_length: len,
    })
}

/// Exponents of `map` averaged over orbits started at `starts` (which should
/// be distributed by the measure of interest). Standard errors are across
/// orbits.
pub fn lyapunov_exponents(
    map: &MapKind,
    starts: &[ProjPoint],
    orbit_length: usize,
    opts: &LyapunovOptions,
) -> Result<LyapunovReport> {
    if orbit_length < MIN_ORBIT {
        return Err(Error::InvalidParams(format!("orbit length {orbit_length} is below {MIN_ORBIT}")));
    }
    let per: Vec<Result<Vec<f64>>> = par_map(starts, |x| orbit_exponents(map, x, orbit_length, opts));
    summarize(per.into_iter().collect::<Result<_>>()?, orbit_length)
}

/// Exponents of the lifted map along lifted orbits. The lifted map acts on
/// the head of a prehistory by `f` and shifts the tail, so the cocycle is the
/// chart Jacobian of `f` at the head.
pub fn lyapunov_hat(starts: &[Prehistory], orbit_length: usize) -> Result<LyapunovReport> {
    if orbit_length < MIN_ORBIT {
        return Err(Error::InvalidParams(format!("orbit length {orbit_length} is below {MIN_ORBIT}")));
    }
    let per: Vec<Result<Vec<f64>>> = par_map(starts, |x0| {
        let map = x0.base_map();
        let m = x0.point(0).dim();
        let mut x = x0.clone();
        let mut q = DMatrix::<C64>::identity(m, m);
        let mut sums = vec![Sum::default(); m];
        for _ in 0..orbit_length {
            let (_, jac) = step_with_jacobian(&map, x.point(0))?;
            qr_step(&jac.to_dmatrix(), &mut q, &mut sums);
            x = lift_map(&x)?;
        }
        Ok(sums.into_iter().map(|s| s.value() / orbit_length as f64).collect())
    });
    summarize(per.into_iter().collect::<Result<_>>()?, orbit_length)
}

/// `[z : w] ↦ [z/|z| : w/|w|]`, the nearest point of the circle `|z| = |w|`.
pub fn retract_to_unit_circle(p: &ProjPoint) -> ProjPoint {
    let (z, w) = (p.coord(0), p.coord(1));
    let unit = |c: C64| if c.norm() > 0.0 { c / c.norm() } else { C64::new(1.0, 0.0) };
    ProjPoint::new([unit(z), unit(w)]).expect("unit coordinates")
}
