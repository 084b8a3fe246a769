//! Orbit-separation entropy estimators: greedy (n, ε)-spanning sets and
//! Brin–Katok local entropy from empirical Bowen-ball masses.

use super::hash::SpatialHash;
use super::lsq_slope;
use crate::error::{Error, Result};
use crate::green::Cloud;
use crate::history::{hat_distance, lift_map, Prehistory};
use crate::maps::{HomogeneousMap, MapKind};
use crate::projective::{chordal, ProjPoint};
use crate::rng::par_map;

/// A dynamical system with a metric, as needed by the Bowen-ball estimators.
pub trait OrbitSpace: Sync {
    type State: Clone + Send + Sync;
    fn step(&self, x: &Self::State) -> Result<Self::State>;
    fn distance(&self, a: &Self::State, b: &Self::State) -> f64;
    /// A point of projective space whose chordal distance to the anchor of
    /// another state never exceeds [`OrbitSpace::distance`].
    fn anchor<'a>(&self, x: &'a Self::State) -> &'a ProjPoint;
}

impl OrbitSpace for MapKind {
    type State = ProjPoint;
    fn step(&self, x: &ProjPoint) -> Result<ProjPoint> {
        self.apply(x)
    }
    fn distance(&self, a: &ProjPoint, b: &ProjPoint) -> f64 {
        chordal(a.coords(), b.coords())
    }
    fn anchor<'a>(&self, x: &'a ProjPoint) -> &'a ProjPoint {
        x
    }
}

/// Prehistories under the lifted map with the hat metric.
#[derive(Clone, Copy, Debug, Default)]
pub struct HatSpace;

impl OrbitSpace for HatSpace {
    type State = Prehistory;
    fn step(&self, x: &Prehistory) -> Result<Prehistory> {
        lift_map(x)
    }
    fn distance(&self, a: &Prehistory, b: &Prehistory) -> f64 {
        hat_distance(a, b)
    }
    fn anchor<'a>(&self, x: &'a Prehistory) -> &'a ProjPoint {
        x.point(0)
    }
}

/// Fewest orbit segments accepted by the spanning-set estimator.
pub const MIN_SEGMENTS: usize = 10_000;

fn segment<S: OrbitSpace>(space: &S, x: &S::State, n: usize) -> Result<Vec<S::State>> {
    let mut out = Vec::with_capacity(n);
    out.push(x.clone());
    for i in 1..n {
        out.push(space.step(&out[i - 1])?);
    }
    Ok(out)
}

fn within<S: OrbitSpace>(space: &S, a: &[S::State], b: &[S::State], eps: f64) -> bool {
    // the last time is the most discriminating one
    a.iter().zip(b).rev().all(|(x, y)| space.distance(x, y) < eps)
}

/// Size of a greedy (n, ε)-spanning set for the segments starting at
/// `starts`: a segment becomes a new center unless some center is within ε
/// in `d_n`.
pub fn spanning_set_size<S: OrbitSpace>(space: &S, starts: &[S::State], n: usize, eps: f64) -> Result<usize> {
    let mut hash = SpatialHash::new(eps);
    let mut centers: Vec<Vec<S::State>> = Vec::new();
    for x in starts {
        let seg = segment(space, x, n)?;
        let last = space.anchor(&seg[n - 1]);
        let covered = hash.candidates(last).any(|i| within(space, &centers[i], &seg, eps));
        if !covered {
            hash.insert(last, centers.len());
            centers.push(seg);
        }
    }
    Ok(centers.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpanningReport {
    pub ns: Vec<usize>,
    pub eps: Vec<f64>,
    /// `counts[e][i]` is `r_{ns[i]}(eps[e])`.
    pub counts: Vec<Vec<usize>>,
    /// Slope of `log r_n` against `n`, per ε.
    pub slopes: Vec<f64>,
    pub segments: usize,
}

impl SpanningReport {
    /// Slope at the smallest ε.
    pub fn estimate(&self) -> f64 {
        let i = (0..self.eps.len()).min_by(|&a, &b| self.eps[a].total_cmp(&self.eps[b])).expect("nonempty");
        self.slopes[i]
    }
}

/// Growth rate of greedy spanning sets over `ns` for every ε in `eps`.
pub fn topological_entropy_estimate<S: OrbitSpace>(
    space: &S,
    starts: &[S::State],
    ns: &[usize],
    eps: &[f64],
) -> Result<SpanningReport> {
    if starts.len() < MIN_SEGMENTS {
        return Err(Error::InsufficientData(format!("{} orbit segments, need {MIN_SEGMENTS}", starts.len())));
    }
    if ns.len() < 2 || eps.is_empty() || ns.contains(&0) {
        return Err(Error::InsufficientData("need at least two positive n and one ε".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..eps.len()).flat_map(|e| (0..ns.len()).map(move |i| (e, i))).collect();
    let sizes = par_map(&jobs, |&(e, i)| spanning_set_size(space, starts, ns[i], eps[e]));
    let mut counts = vec![vec![0; ns.len()]; eps.len()];
    for (&(e, i), s) in jobs.iter().zip(sizes) {
        counts[e][i] = s?;
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slopes =
        counts.iter().map(|c| lsq_slope(&xs, &c.iter().map(|&r| (r as f64).ln()).collect::<Vec<_>>())).collect();
    Ok(SpanningReport { ns: ns.to_vec(), eps: eps.to_vec(), counts, slopes, segments: starts.len() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrinKatokReport {
    pub n: usize,
    pub eps: f64,
    /// Mean of `-(1/n) log m_n(x)`.
    pub raw: f64,
    /// Mean of `(log m_{n0}(x) - log m_n(x)) / (n - n0)` with `n0 = ⌈n/2⌉`;
    /// removes the ε-dependent constant in `m_n ≈ C e^{-n h}`.
    pub differenced: f64,
    /// Mean `log m_j` for `j = 1..=n`.
    pub log_mass_profile: Vec<f64>,
    pub centers_used: usize,
    /// Centers whose n-ball held no other sample.
    pub empty: usize,
}

/// Brin–Katok estimate on a sample of states. The first `centers` states are
/// the ball centers, the rest carry the empirical measure.
pub fn brin_katok_in<S: OrbitSpace>(
    space: &S,
    states: &[S::State],
    n: usize,
    eps: f64,
    centers: usize,
) -> Result<BrinKatokReport> {
    if n < 2 {
        return Err(Error::InvalidParams("Brin–Katok needs n >= 2".into()));
    }
    if states.len() <= centers || centers == 0 {
        return Err(Error::InsufficientSamples { need: centers + 1, got: states.len() });
    }
    let (cs, rest) = states.split_at(centers);
    let mut hash = SpatialHash::new(eps);
    for (i, y) in rest.iter().enumerate() {
        hash.insert(space.anchor(y), i);
    }
    let total = rest.len() as f64;
    let profiles: Vec<Result<Vec<usize>>> = par_map(cs, |c| {
        let seg = segment(space, c, n)?;
        let mut alive: Vec<S::State> = hash
            .candidates(space.anchor(c))
            .map(|i| &rest[i])
            .filter(|y| space.distance(c, y) < eps)
            .cloned()
            .collect();
        let mut counts = vec![alive.len()];
        for x in seg.iter().skip(1) {
            let mut next = Vec::with_capacity(alive.len());
            for y in &alive {
                let y1 = space.step(y)?;
                if space.distance(x, &y1) < eps {
                    next.push(y1);
                }
            }
            alive = next;
            counts.push(alive.len());
        }
        Ok(counts)
    });
    let n0 = n.div_ceil(2);
    let mut raw = 0.0;
    let mut diff = 0.0;
    let mut profile = vec![0.0; n];
    let mut used = 0usize;
    let mut empty = 0usize;
    for p in profiles {
        let p = p?;
        if p[n - 1] == 0 {
            empty += 1;
            continue;
        }
        used += 1;
        let logs: Vec<f64> = p.iter().map(|&c| (c as f64 / total).ln()).collect();
        raw -= logs[n - 1] / n as f64;
        diff += (logs[n0 - 1] - logs[n - 1]) / (n - n0) as f64;
        for (a, l) in profile.iter_mut().zip(&logs) {
            *a += l;
        }
    }
    if used == 0 {
        return Err(Error::EmptyBall(centers));
    }
    let u = used as f64;
    Ok(BrinKatokReport {
        n,
        eps,
        raw: raw / u,
        differenced: diff / u,
        log_mass_profile: profile.into_iter().map(|l| l / u).collect(),
        centers_used: used,
        empty,
    })
}

/// [`brin_katok_in`] on a cloud of points under `map`.
pub fn brin_katok_entropy(cloud: &Cloud, map: &MapKind, n: usize, eps: f64, centers: usize) -> Result<BrinKatokReport> {
    brin_katok_in(map, cloud.points(), n, eps, centers)
}

/// [`brin_katok_in`] on prehistories under the lifted map.
pub fn brin_katok_hat(samples: &[Prehistory], n: usize, eps: f64, centers: usize) -> Result<BrinKatokReport> {
    brin_katok_in(&HatSpace, samples, n, eps, centers)
}
