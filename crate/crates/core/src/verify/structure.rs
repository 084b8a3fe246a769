//! Degree counts on invariant sets, critical orbits of the base map and the
//! low-degree curve witness for M = K_λ ∩ W.

use nalgebra::DMatrix;
use rand::Rng;
use smallvec::smallvec;

use super::{LemmaReport, Precision};
use crate::error::{Error, Result};
use crate::maps::{
    preimages_f_base, preimages_f_lambda, w_deviation, HomogeneousMap, MapKind, Params, PreimageSet, DEDUPE_RADIUS,
};
use crate::projective::{chordal, fs_distance, Coords, ProjPoint, C64};
use crate::rng::substream;
use crate::trap::random_trap_point;

/// Invariant algebraic sets with known restricted degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvariantSet {
    /// Π under f: degree 2^(k-1).
    Pi,
    /// L under f_λ (fiber map `t ↦ t^2 + λ`): degree 2.
    Line,
    /// W under g_λ = f_λ^k: degree (2^k)^2.
    W,
    /// P^k under f_λ: degree 2^k.
    Whole,
}

impl InvariantSet {
    pub fn expected_degree(self, k: usize) -> usize {
        match self {
            InvariantSet::Pi => 1 << (k - 1),
            InvariantSet::Line => 2,
            InvariantSet::W => 1 << (2 * k),
            InvariantSet::Whole => 1 << k,
        }
    }
}

fn random_coords<R: Rng>(rng: &mut R, n: usize) -> Coords {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn on_line(k: usize, p: &ProjPoint) -> bool {
    let c = p.coords();
    (1..k).all(|j| (c[j] - c[0]).norm() < 1e-7)
}

fn min_separation(points: &[ProjPoint]) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            d = d.min(chordal(points[i].coords(), points[j].coords()));
        }
    }
    d
}

/// Counts preimages of random targets that lie on the invariant set and
/// compares with the restricted degree. `min_residual` is the smallest
/// separation between distinct preimages found.
pub fn topological_degree_check(params: &Params, set: InvariantSet, trials: usize, seed: u64) -> Result<LemmaReport> {
    let k = params.k;
    let expected = set.expected_degree(k);
    let mut rng = substream(seed, 0);
    let f = MapKind::FLambda(*params);
    let mut report = LemmaReport::new(&format!("degree_{set:?}").to_lowercase(), DEDUPE_RADIUS, Precision::Double);
    let mut all_ok = true;
    let mut min_sep = f64::INFINITY;
    let mut max_fwd: f64 = 0.0;
    for _ in 0..trials {
        let (target, found): (ProjPoint, Vec<ProjPoint>) = match set {
            InvariantSet::Pi => {
                let target = ProjPoint::new(random_coords(&mut rng, k))?;
                let set = preimages_f_base(k, &target)?;
                for q in &set.points {
                    max_fwd = max_fwd.max(fs_distance(&MapKind::Base { k }.apply(q)?, &target)?);
                }
                (target, set.points)
            }
            InvariantSet::Line => {
                let t = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * params.rho;
                let target = params.point_on_line(t);
                let set = preimages_f_lambda(params, &target)?;
                let pts: Vec<ProjPoint> = set.points.into_iter().filter(|p| on_line(k, p)).collect();
                (target, pts)
            }
            InvariantSet::Whole => {
                let target = random_trap_point(params, &mut rng);
                (target.clone(), preimages_f_lambda(params, &target)?.points)
            }
            InvariantSet::W => {
                let mut v = random_coords(&mut rng, k + 1);
                for j in 2..k {
                    v[j] = v[1];
                }
                let target = ProjPoint::new(v)?;
                let mut level = PreimageSet { points: vec![target.clone()], multiplicities: vec![1] };
                for _ in 0..k {
                    let mut next = PreimageSet::default();
                    for p in &level.points {
                        for q in preimages_f_lambda(params, p)?.points {
                            next.points.push(q);
                        }
                    }
                    level = next;
                }
                let pts: Vec<ProjPoint> = level.points.into_iter().filter(|p| w_deviation(k, p) < 1e-7).collect();
                (target, pts)
            }
        };
        if !matches!(set, InvariantSet::Pi) {
            let steps = if set == InvariantSet::W { k } else { 1 };
            for q in &found {
                max_fwd = max_fwd.max(fs_distance(&f.iterate(q, steps)?, &target)?);
            }
        }
        if found.len() != expected {
            all_ok = false;
            report.witnesses.push(format!("target {:?}: {} preimages on set", target.coords(), found.len()));
        }
        min_sep = min_sep.min(min_separation(&found));
    }
    report.metric("expected", expected as f64);
    report.metric("max forward residual", max_fwd);
    report.min_residual = min_sep;
    report.passed = all_ok && min_sep > DEDUPE_RADIUS && max_fwd < 1e-10;
    Ok(report)
}

/// Hyperplanes of P^(k-1) tracked by the critical-orbit trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hyperplane {
    /// `{z_i = 0}`
    Zero(usize),
    /// `{z_i = z_j}`, i < j
    Diagonal(usize, usize),
}

impl std::fmt::Display for Hyperplane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hyperplane::Zero(i) => write!(f, "z{i}=0"),
            Hyperplane::Diagonal(i, j) => write!(f, "z{i}=z{j}"),
        }
    }
}

/// Fubini–Study distance from `p` to the hyperplane.
pub fn hyperplane_distance(p: &ProjPoint, h: Hyperplane) -> f64 {
    let c = p.coords();
    let n = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    match h {
        Hyperplane::Zero(i) => c[i].norm() / n,
        Hyperplane::Diagonal(i, j) => (c[i] - c[j]).norm() / (n * 2f64.sqrt()),
    }
}

fn diagonals(k: usize) -> Vec<Hyperplane> {
    let mut v = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            v.push(Hyperplane::Diagonal(i, j));
        }
    }
    v
}

/// Hyperplanes (coordinate or diagonal) containing `p` to `tol`.
pub fn containing_hyperplanes(p: &ProjPoint, tol: f64) -> Vec<Hyperplane> {
    let k = p.dim() + 1;
    let mut all: Vec<Hyperplane> = (0..k).map(Hyperplane::Zero).collect();
    all.extend(diagonals(k));
    all.into_iter().filter(|h| hyperplane_distance(p, *h) < tol).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentTrace {
    pub label: String,
    /// Per iterate, max over samples of the distance to the nearest diagonal.
    pub diagonal_distance: Vec<f64>,
    /// Hyperplanes containing the iterates of the first sample.
    pub path: Vec<Vec<Hyperplane>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalOrbitReport {
    pub components: Vec<ComponentTrace>,
    /// Distance to `[1 : … : 1]` after `iters` steps, for points where a
    /// critical component meets a diagonal.
    pub intersection_distances: Vec<f64>,
    /// Control: min over random non-critical points of the diagonal
    /// distance over the first three iterates.
    pub control_min_distance: f64,
}

fn nearest_diagonal(p: &ProjPoint) -> f64 {
    diagonals(p.dim() + 1).into_iter().map(|h| hyperplane_distance(p, h)).fold(f64::INFINITY, f64::min)
}

/// Iterates random points of each critical component `{z_0 = 0}`,
/// `{z_0 = 2z_j}` of the base map and records how they reach the diagonals.
pub fn critical_orbit_trace(k: usize, samples: usize, iters: usize, seed: u64) -> Result<CriticalOrbitReport> {
    if k < 2 {
        return Err(Error::InvalidParams("k must be at least 2".into()));
    }
    let f = MapKind::Base { k };
    let mut rng = substream(seed, 0);
    let mut components = Vec::new();
    for comp in 0..k {
        let label = if comp == 0 { "z0=0".to_string() } else { format!("z0=2z{comp}") };
        let mut dist = vec![0.0f64; iters + 1];
        let mut path = Vec::new();
        for s in 0..samples {
            let mut v = random_coords(&mut rng, k);
            if comp == 0 {
                v[0] = C64::new(0.0, 0.0);
            } else {
                v[0] = 2.0 * v[comp];
            }
            let mut x = ProjPoint::new(v)?;
            for (m, d) in dist.iter_mut().enumerate() {
                if k > 2 {
                    *d = d.max(nearest_diagonal(&x));
                }
                if s == 0 {
                    path.push(containing_hyperplanes(&x, 1e-10));
                }
                if m < iters {
                    x = f.apply(&x)?;
                }
            }
        }
        components.push(ComponentTrace { label, diagonal_distance: dist, path });
    }
    // critical components meet diagonals in points with integer coordinates
    let mut intersection_distances = Vec::new();
    let one = ProjPoint::new(smallvec![C64::new(1.0, 0.0); k] as Coords)?;
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    let mut zero_first = vec![1.0; k];
    zero_first[0] = 0.0;
    seeds.push(zero_first);
    let mut twice = vec![1.0; k];
    twice[0] = 2.0;
    seeds.push(twice);
    for s in seeds {
        let x = f.iterate(&ProjPoint::from_reals(&s)?, iters)?;
        intersection_distances.push(fs_distance(&x, &one)?);
    }
    let mut control = f64::INFINITY;
    for _ in 0..samples {
        let mut x = ProjPoint::new(random_coords(&mut rng, k))?;
        for _ in 0..3 {
            if k > 2 {
                control = control.min(nearest_diagonal(&x));
            }
            x = f.apply(&x)?;
        }
    }
    Ok(CriticalOrbitReport { components, intersection_distances, control_min_distance: control })
}

/// Chart coordinates `(u, s) = (z / w_1, t / w_1)` on W.
pub fn w_chart(k: usize, p: &ProjPoint) -> Option<(C64, C64)> {
    let w = p.coord(1);
    if w.norm() < 1e-300 {
        return None;
    }
    Some((p.coord(0) / w, p.coord(k) / w))
}

/// Points of M = K_λ ∩ W from forward g_λ orbits inside the chart window
/// `|u| <= window`.
pub fn sample_m_cloud(params: &Params, burn_in: usize, n: usize, window: f64, seed: u64) -> Vec<(C64, C64)> {
    let k = params.k;
    let f = MapKind::FLambda(*params);
    let mut rng = substream(seed, 0);
    let mut out = Vec::with_capacity(n);
    let mut x = params.p_lambda();
    let mut step = 0usize;
    while out.len() < n {
        if step.is_multiple_of(256) {
            let mut v: Coords = random_trap_point(params, &mut rng).coords().iter().copied().collect();
            for j in 2..k {
                v[j] = v[1];
            }
            x = ProjPoint::new(v).expect("nonzero");
            x = f.iterate(&x, k * burn_in).expect("holomorphic map");
        }
        x = f.iterate(&x, k).expect("holomorphic map");
        step += 1;
        if let Some((u, s)) = w_chart(k, &x) {
            if u.norm() <= window {
                out.push((u, s));
            }
        }
    }
    out
}

fn standardize(points: &[(C64, C64)]) -> Vec<(C64, C64)> {
    let n = points.len() as f64;
    let mu = points.iter().map(|p| p.0).sum::<C64>() / n;
    let ms = points.iter().map(|p| p.1).sum::<C64>() / n;
    let spread = |f: &dyn Fn(&(C64, C64)) -> f64| {
        let v = (points.iter().map(f).sum::<f64>() / n).sqrt();
        if v > 0.0 {
            v
        } else {
            1.0
        }
    };
    let su = spread(&|p| (p.0 - mu).norm_sqr());
    let ss = spread(&|p| (p.1 - ms).norm_sqr());
    points.iter().map(|p| ((p.0 - mu) / su, (p.1 - ms) / ss)).collect()
}

/// Monomials `u^i s^j`, `i + j <= d`.
pub fn monomial_count(d: usize) -> usize {
    (d + 1) * (d + 2) / 2
}

/// For each `D <= max_degree`, the ratio of smallest to largest singular
/// value of the column-normalized monomial evaluation matrix. The cloud lies
/// on a curve of degree `D` exactly when the ratio vanishes.
pub fn algebraicity_residual(points: &[(C64, C64)], max_degree: usize) -> Result<Vec<(usize, f64)>> {
    let need = 10 * monomial_count(max_degree);
    if points.len() < need {
        return Err(Error::InsufficientSamples { need, got: points.len() });
    }
    // an affine change of coordinates preserves algebraic degree; centering
    // and scaling keeps thin clouds such as s ≈ λ from collapsing the basis
    let points = standardize(points);
    let mut out = Vec::with_capacity(max_degree);
    for d in 1..=max_degree {
        let cols = monomial_count(d);
        let mut m = DMatrix::<C64>::zeros(points.len(), cols);
        for (r, (u, s)) in points.iter().enumerate() {
            let mut c = 0;
            for total in 0..=d {
                for j in 0..=total {
                    m[(r, c)] = u.powu((total - j) as u32) * s.powu(j as u32);
                    c += 1;
                }
            }
        }
        for mut col in m.column_iter_mut() {
            let n = col.norm();
            if n > 0.0 {
                col /= C64::new(n, 0.0);
            }
        }
        let sv = m.singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        out.push((d, min / max));
    }
    Ok(out)
}
