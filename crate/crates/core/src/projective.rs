//! Points of complex projective space P^m.
//!
//! A [`ProjPoint`] stores m+1 homogeneous coordinates. Every constructor in
//! this crate hands out the canonical representative: the coordinate of
//! largest modulus (lowest index on ties) is exactly `1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Inline storage for homogeneous coordinates; P^4 and below never allocate.
pub type Coords = SmallVec<[C64; 5]>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    coords: Coords,
}

/// Affine coordinates of a point in the chart `{z_chart = 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartCoords {
    pub chart_index: usize,
    pub values: Vec<C64>,
}

pub(crate) fn max_modulus_index(v: &[C64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, c) in v.iter().enumerate() {
        let n = c.norm();
        if n > best_norm {
            best = i;
            best_norm = n;
        }
    }
    (best, best_norm)
}

/// Scales `v` in place so that its max-modulus coordinate is exactly one.
/// Returns the index of that coordinate.
pub(crate) fn normalize_in_place(v: &mut [C64]) -> Result<usize> {
    let (j, m) = max_modulus_index(v);
    if !(m.is_finite() && m > f64::MIN_POSITIVE) {
        return Err(Error::ZeroVector);
    }
    let inv = v[j].inv();
    for c in v.iter_mut() {
        *c *= inv;
    }
    v[j] = C64::new(1.0, 0.0);
    Ok(j)
}

impl ProjPoint {
    /// Builds the canonical representative of `[coords]`.
    pub fn new(coords: impl IntoIterator<Item = C64>) -> Result<Self> {
        let mut coords: Coords = coords.into_iter().collect();
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: coords.len() });
        }
        normalize_in_place(&mut coords)?;
        Ok(ProjPoint { coords })
    }

    /// Convenience constructor from real coordinates.
    pub fn from_reals(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| C64::new(x, 0.0)))
    }

    /// Wraps coordinates that are already canonical. Callers guarantee the
    /// invariant; used on hot paths after [`normalize_in_place`].
    pub(crate) fn from_normalized(coords: Coords) -> Self {
        debug_assert!(coords.len() >= 2);
        ProjPoint { coords }
    }

    /// Projective dimension m (the point has m+1 coordinates).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> C64 {
        self.coords[i]
    }

    /// Index of the coordinate equal to one.
    pub fn max_index(&self) -> usize {
        max_modulus_index(&self.coords).0
    }

    /// Sup norm of the coordinates with index in `range`.
    pub fn max_norm_of(&self, range: std::ops::Range<usize>) -> f64 {
        self.coords[range].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn to_chart(&self, chart: usize) -> Result<ChartCoords> {
        let c = self.coords[chart];
        if c.norm() <= 1e-300 {
            return Err(Error::ChartSingular { chart });
        }
        let inv = c.inv();
        let values = self.coords.iter().enumerate().filter(|(i, _)| *i != chart).map(|(_, x)| x * inv).collect();
        Ok(ChartCoords { chart_index: chart, values })
    }

    pub fn from_chart(chart: &ChartCoords) -> Result<Self> {
        let m = chart.values.len();
        if chart.chart_index > m {
            return Err(Error::DimensionMismatch { expected: m, got: chart.chart_index });
        }
        let mut v: Coords = SmallVec::with_capacity(m + 1);
        v.extend_from_slice(&chart.values[..chart.chart_index]);
        v.push(C64::new(1.0, 0.0));
        v.extend_from_slice(&chart.values[chart.chart_index..]);
        Self::new(v)
    }

    /// Unit vector (Euclidean norm one) representing the same point.
    pub fn unit_vector(&self) -> Coords {
        let n = self.coords.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        self.coords.iter().map(|c| c / n).collect()
    }
}

/// Canonical representative: max-modulus coordinate equal to one, lowest
/// index on ties.
pub fn normalize(p: &ProjPoint) -> Result<ProjPoint> {
    ProjPoint::new(p.coords.iter().copied())
}

/// Chordal Fubini–Study distance `sqrt(1 - |<p,q>|^2 / (|p|^2 |q|^2))`.
///
/// Evaluated through the Lagrange identity
/// `|p|^2|q|^2 - |<p,q>|^2 = sum_{i<j} |p_i q_j - p_j q_i|^2`, which keeps full
/// relative accuracy for nearby points.
pub fn fs_distance(p: &ProjPoint, q: &ProjPoint) -> Result<f64> {
    if p.coords.len() != q.coords.len() {
        return Err(Error::DimensionMismatch { expected: p.coords.len(), got: q.coords.len() });
    }
    Ok(chordal(&p.coords, &q.coords))
}

/// Chordal distance between raw coordinate vectors of equal length.
pub(crate) fn chordal(p: &[C64], q: &[C64]) -> f64 {
    let np: f64 = p.iter().map(|c| c.norm_sqr()).sum();
    let nq: f64 = q.iter().map(|c| c.norm_sqr()).sum();
    let mut cross = 0.0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            cross += (p[i] * q[j] - p[j] * q[i]).norm_sqr();
        }
    }
    (cross / (np * nq)).sqrt().min(1.0)
}

/// Inclusion of Π = {t = 0} ≅ P^(k-1) into P^k.
pub fn embed_pi(q: &ProjPoint) -> ProjPoint {
    let mut v = q.coords.clone();
    v.push(C64::new(0.0, 0.0));
    ProjPoint::from_normalized(v)
}

/// Projection `[z : w : t] ↦ [z : w]` from the center `[0:…:0:1]`.
pub fn project_pi(p: &ProjPoint) -> Result<ProjPoint> {
    let base = &p.coords[..p.coords.len() - 1];
    if base.len() < 2 {
        return Err(Error::DimensionMismatch { expected: 3, got: p.coords.len() });
    }
    ProjPoint::new(base.iter().copied()).map_err(|_| Error::ProjectionUndefined)
}
