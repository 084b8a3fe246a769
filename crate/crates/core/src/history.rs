//! Truncated backward orbits of the base map f on Π ≅ P^(k-1).
//!
//! A [`Prehistory`] stores `(x_0, x_{-1}, …, x_{-n})` with `f(x_{-(i+1)}) = x_{-i}`.
//! It stands in for a point of the natural extension; every quantity computed
//! from it carries a truncation error of order `2^{-n}` in the hat metric.

use rand::Rng;

use crate::error::{Error, Result};
use crate::maps::{random_preimage_base, HomogeneousMap, MapKind};
use crate::projective::{fs_distance, ProjPoint};
use crate::rng::substream;

/// Tolerance for the backward-orbit condition.
pub const ORBIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Prehistory {
    points: Vec<ProjPoint>,
}

impl Prehistory {
    /// Validates `f(points[i+1]) = points[i]` for the base map of P^(k-1).
    pub fn new(points: Vec<ProjPoint>) -> Result<Self> {
        let pre = Prehistory { points };
        if pre.points.is_empty() {
            return Err(Error::InsufficientData("empty prehistory".into()));
        }
        pre.validate()?;
        Ok(pre)
    }

    #[cfg(test)]
    pub(crate) fn new_unchecked(points: Vec<ProjPoint>) -> Self {
        Prehistory { points }
    }

    pub fn validate(&self) -> Result<()> {
        let map = self.base_map();
        for i in 1..self.points.len() {
            let img = map.apply(&self.points[i])?;
            let residual = fs_distance(&img, &self.points[i - 1])?;
            if !(residual < ORBIT_TOL) {
                return Err(Error::InvalidPrehistory { index: i, residual });
            }
        }
        Ok(())
    }

    /// The constant prehistory at a fixed point.
    pub fn constant(x: ProjPoint, depth: usize) -> Result<Self> {
        Self::new(vec![x; depth + 1])
    }

    pub fn depth(&self) -> usize {
        self.points.len() - 1
    }

    /// `k` such that the points live on P^(k-1).
    pub fn k(&self) -> usize {
        self.points[0].dim() + 1
    }

    pub fn base_map(&self) -> MapKind {
        MapKind::Base { k: self.k() }
    }

    /// `x_{-i}`.
    pub fn point(&self, i: usize) -> &ProjPoint {
        &self.points[i]
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    /// Keeps `x_0, …, x_{-depth}`.
    pub fn truncate(&self, depth: usize) -> Self {
        Prehistory { points: self.points[..=depth.min(self.depth())].to_vec() }
    }
}

/// `Σ_{i=0}^{n} 2^{-i} d(x_{-i}, y_{-i})` over the common depth `n`.
pub fn hat_distance(x: &Prehistory, y: &Prehistory) -> f64 {
    let mut w = 1.0;
    let mut sum = 0.0;
    for (a, b) in x.points.iter().zip(&y.points) {
        sum += w * fs_distance(a, b).expect("same dimension");
        w *= 0.5;
    }
    sum
}

/// The lifted map: `(f(x_0), x_0, …, x_{-(n-1)})`.
pub fn lift_map(x: &Prehistory) -> Result<Prehistory> {
    let head = x.base_map().apply(&x.points[0])?;
    let mut points = Vec::with_capacity(x.points.len());
    points.push(head);
    points.extend_from_slice(&x.points[..x.points.len() - 1]);
    Ok(Prehistory { points })
}

/// Inverse of the lifted map: drops `x_0`.
pub fn unlift(x: &Prehistory) -> Result<Prehistory> {
    if x.depth() == 0 {
        return Err(Error::DepthExhausted);
    }
    Ok(Prehistory { points: x.points[1..].to_vec() })
}

/// Extends `a0` backwards by `depth` uniformly chosen preimages.
pub fn sample_prehistory_with<R: Rng + ?Sized>(k: usize, a0: &ProjPoint, depth: usize, rng: &mut R) -> Prehistory {
    let mut points = Vec::with_capacity(depth + 1);
    points.push(a0.clone());
    for _ in 0..depth {
        let next = random_preimage_base(k, points.last().unwrap(), rng);
        points.push(next);
    }
    Prehistory { points }
}

pub fn sample_prehistory(k: usize, a0: &ProjPoint, depth: usize, seed: u64) -> Prehistory {
    sample_prehistory_with(k, a0, depth, &mut substream(seed, 0))
}

/// Periodic prehistory of `x` with `f^n(x) = x`: `x_{-j} = f^{(n-j) mod n}(x)`.
pub fn lift_periodic(k: usize, x: &ProjPoint, n: usize, depth: usize) -> Result<Prehistory> {
    let map = MapKind::Base { k };
    let mut orbit = Vec::with_capacity(n);
    orbit.push(x.clone());
    for i in 1..n {
        orbit.push(map.apply(&orbit[i - 1])?);
    }
    let back = map.apply(&orbit[n - 1])?;
    let residual = fs_distance(&back, x)?;
    if !(residual < ORBIT_TOL) {
        return Err(Error::NotPeriodic { period: n, residual });
    }
    let points = (0..=depth).map(|j| orbit[(n - j % n) % n].clone()).collect();
    Ok(Prehistory { points })
}

/// A cylinder set `{x̂ : d(x_{-j}, center) < radius}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderSet {
    pub j: usize,
    pub center: ProjPoint,
    pub radius: f64,
}

impl CylinderSet {
    pub fn contains_point(&self, p: &ProjPoint) -> bool {
        fs_distance(p, &self.center).is_ok_and(|d| d < self.radius)
    }
}

/// Fraction of `samples` lying in the cylinder.
pub fn cylinder_mass(samples: &[Prehistory], c: &CylinderSet) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no prehistories".into()));
    }
    let mut hits = 0usize;
    for s in samples {
        if c.j > s.depth() {
            return Err(Error::IndexBeyondDepth { index: c.j, depth: s.depth() });
        }
        hits += usize::from(c.contains_point(&s.points[c.j]));
    }
    Ok(hits as f64 / samples.len() as f64)
}
