//! Correlation decay and sensitive dependence.

use rand::Rng;

use crate::error::{Error, Result};
use crate::green::Cloud;
use crate::maps::{HomogeneousMap, MapKind};
use crate::projective::{fs_distance, ChartCoords, ProjPoint, C64};
use crate::rng::{map_chunks, substream};

/// Chart radius of the default bump observables.
pub const BUMP_RADIUS: f64 = 0.3;
/// Separation threshold δ₀ of the sensitivity probe.
pub const SEPARATION: f64 = 0.1;

/// Bounded real observables on P^m.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Constant(f64),
    /// `|x_i| / max_j |x_j|`.
    CoordModulus(usize),
    /// `exp(1 - 1/(1 - r^2))` for `r = |u - center| / radius < 1` in the
    /// affine chart `x_chart = 1`, zero elsewhere.
    ChartBump {
        chart: usize,
        center: Vec<C64>,
        radius: f64,
    },
}

impl Observable {
    pub fn bump(chart: usize, center: Vec<C64>) -> Self {
        Observable::ChartBump { chart, center, radius: BUMP_RADIUS }
    }

    pub fn eval(&self, p: &ProjPoint) -> f64 {
        match self {
            Observable::Constant(c) => *c,
            Observable::CoordModulus(i) => p.coord(*i).norm(),
            Observable::ChartBump { chart, center, radius } => {
                let pc = p.coord(*chart);
                if pc.norm() < 1e-12 {
                    return 0.0;
                }
                let r2: f64 = (0..p.coords().len())
                    .filter(|&i| i != *chart)
                    .zip(center)
                    .map(|(i, c)| (p.coord(i) / pc - c).norm_sqr())
                    .sum::<f64>()
                    / (radius * radius);
                if r2 < 1.0 {
                    (1.0 - 1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationReport {
    pub n: usize,
    /// `⟨(φ∘f^n) ψ⟩ - ⟨φ⟩⟨ψ⟩`.
    pub value: f64,
    pub standard_error: f64,
}

/// Monte-Carlo correlation `C_n` on a cloud of the invariant measure.
pub fn correlation(
    cloud: &Cloud,
    map: &MapKind,
    phi: &Observable,
    psi: &Observable,
    n: usize,
) -> Result<CorrelationReport> {
    let pts = cloud.points();
    let pairs: Vec<Result<(f64, f64)>> = map_chunks(pts.len(), |_, range| {
        range.map(|i| Ok((phi.eval(&map.iterate(&pts[i], n)?), psi.eval(&pts[i])))).collect()
    });
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let w = cloud.weights();
    let constant = |f: &dyn Fn(&(f64, f64)) -> f64| pairs.iter().all(|p| f(p) == f(&pairs[0]));
    if constant(&|p| p.0) || constant(&|p| p.1) {
        return Ok(CorrelationReport { n, value: 0.0, standard_error: 0.0 });
    }
    let ma: f64 = pairs.iter().zip(w).map(|(p, w)| w * p.0).sum();
    let mb: f64 = pairs.iter().zip(w).map(|(p, w)| w * p.1).sum();
    let c: Vec<f64> = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).collect();
    let value: f64 = c.iter().zip(w).map(|(c, w)| w * c).sum();
    let var: f64 = c.iter().zip(w).map(|(c, w)| w * w * (c - value).powi(2)).sum();
    Ok(CorrelationReport { n, value, standard_error: var.sqrt() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub trials: usize,
    /// Fraction of pairs separated beyond [`SEPARATION`] within the horizon.
    pub fraction: f64,
    /// `histogram[j]` counts pairs first separated at step `j + 1`.
    pub histogram: Vec<usize>,
}

/// A point within chordal distance `r` of `x`, in a random chart direction.
fn perturb<R: Rng>(x: &ProjPoint, r: f64, rng: &mut R) -> ProjPoint {
    let a = x.max_index();
    let chart = x.to_chart(a).expect("max chart");
    let dir: Vec<C64> =
        chart.values.iter().map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = dir.iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let values = chart.values.iter().zip(&dir).map(|(v, d)| v + d * (r / norm)).collect();
    ProjPoint::from_chart(&ChartCoords { chart_index: a, values }).expect("nonzero")
}

/// Pairs `(x, y)` with `d(x, y) < delta / 100` started at `starts`; reports
/// how many orbit pairs separate beyond δ₀ within `horizon` steps.
pub fn sensitivity_probe(
    map: &MapKind,
    starts: &[ProjPoint],
    delta: f64,
    horizon: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    if starts.is_empty() {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParams("delta must be positive".into()));
    }
    let times: Vec<Result<Option<usize>>> = map_chunks(starts.len(), |chunk, range| {
        let mut rng = substream(seed, chunk as u64);
        range
            .map(|i| {
                let mut x = starts[i].clone();
                // chart displacement r moves the point by at most r in chordal distance
                let mut y = perturb(&x, 0.5 * delta / 100.0, &mut rng);
                for t in 1..=horizon {
                    x = map.apply(&x)?;
                    y = map.apply(&y)?;
                    if fs_distance(&x, &y)? > SEPARATION {
                        return Ok(Some(t));
                    }
                }
                Ok(None)
            })
            .collect()
    });
    let mut histogram = vec![0; horizon];
    let mut separated = 0;
    for t in times {
        if let Some(t) = t? {
            histogram[t - 1] += 1;
            separated += 1;
        }
    }
    Ok(SensitivityReport { trials: starts.len(), fraction: separated as f64 / starts.len() as f64, histogram })
}
