//! Periodic points: multi-start chart Newton search, the polynomial count
//! oracle on P^1, lifts into the attractor and growth-rate entropy.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::hash::SpatialHash;
use crate::error::{Error, Result};
use crate::green::Cloud;
use crate::maps::{chart_jacobian_in, preimage_branches_base, preimages_f_lambda, HomogeneousMap, MapKind, Params};
use crate::partition::{discrepancy, Partition};
use crate::projective::{fs_distance, ChartCoords, Coords, ProjPoint, C64};
use crate::rng::{map_chunks, par_map, substream};
use crate::trap::{fiber_step, with_fiber};
use crate::verify::{aberth, circle_start, AberthOptions};

/// Distinct periodic points are at least this far apart.
pub const PERIODIC_DEDUPE: f64 = 1e-7;
/// Forward residual `d(f^n(x), x)` accepted for a periodic point.
pub const PERIODIC_TOL: f64 = 1e-9;

/// `E_n(f)`: points with `f^n(x) = x`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicSet {
    pub n: usize,
    pub points: Vec<ProjPoint>,
    pub multiplicities: Vec<usize>,
    pub residuals: Vec<f64>,
    /// Theoretical count when one is known.
    pub expected: Option<usize>,
}

impl PeriodicSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.expected.is_none_or(|e| self.points.len() >= e)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Uniform measure on the set.
    pub fn to_cloud(&self) -> Result<Cloud> {
        Cloud::uniform(self.points.clone())
    }
}

/// Settings for [`periodic_points`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicOptions {
    /// Refuse runs whose theoretical count exceeds this.
    pub max_count: usize,
    /// Generic targets whose backward trees seed the search.
    pub targets: usize,
    /// Above this many tree leaves, random backward descents are used instead.
    pub max_tree: usize,
    /// Additional uniformly random starts.
    pub random_starts: usize,
    pub newton_iter: usize,
    pub seed: u64,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        PeriodicOptions {
            max_count: 1 << 16,
            targets: 2,
            max_tree: 1 << 14,
            random_starts: 256,
            newton_iter: 60,
            seed: 0,
        }
    }
}

/// Number of fixed points of `f^n` counted with multiplicity,
/// `Σ_{i=0}^{m} d^{n i}` on P^m.
pub fn lefschetz_count(map: &MapKind, n: usize) -> Option<usize> {
    let d = map.degree() as usize;
    if d < 2 {
        return None;
    }
    let dn = d.checked_pow(n as u32)?;
    let mut total = 0usize;
    let mut term = 1usize;
    for _ in 0..=map.dim() {
        total = total.checked_add(term)?;
        term = term.checked_mul(dn)?;
    }
    Some(total)
}

/// `d(f^n(x), x)`.
pub fn periodic_residual<M: HomogeneousMap + ?Sized>(map: &M, x: &ProjPoint, n: usize) -> Result<f64> {
    fs_distance(&map.iterate(x, n)?, x)
}

/// Every preimage of `p`, with repetition.
fn preimages_of(map: &MapKind, p: &ProjPoint) -> Result<Vec<ProjPoint>> {
    match map {
        MapKind::Base { k } => Ok(preimage_branches_base(*k, p)),
        MapKind::FLambda(params) => Ok(preimages_f_lambda(params, p)?.points),
        MapKind::Quadratic { lambda } => {
            let w = p.coord(1).sqrt();
            let z = (p.coord(0) - lambda * p.coord(1)).sqrt();
            Ok(vec![ProjPoint::new([z, w])?, ProjPoint::new([-z, w])?])
        }
        MapKind::Identity { .. } => Ok(vec![p.clone()]),
    }
}

fn random_point<R: Rng>(rng: &mut R, dim: usize) -> ProjPoint {
    let v: Coords = (0..=dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ProjPoint::new(v).unwrap_or_else(|_| ProjPoint::from_reals(&vec![1.0; dim + 1]).expect("nonzero"))
}

/// Chart Newton iteration for `f^n(x) = x` in the max-modulus chart of the
/// current iterate. Steps are capped at 0.5 in chart coordinates.
fn refine(map: &MapKind, start: &ProjPoint, n: usize, iters: usize) -> Option<ProjPoint> {
    let m = map.dim();
    let mut x = start.clone();
    for _ in 0..iters {
        let a = x.max_index();
        let mut y = x.clone();
        let mut prod = DMatrix::<C64>::identity(m, m);
        let mut chart = a;
        for j in 0..n {
            let next = map.apply(&y).ok()?;
            let out = if j + 1 == n { a } else { next.max_index() };
            let jac = chart_jacobian_in(map, &y, Some(chart), Some(out)).ok()?;
            prod = jac.to_dmatrix() * prod;
            chart = out;
            y = next;
        }
        let ya = y.coord(a);
        let others: Vec<usize> = (0..=m).filter(|&i| i != a).collect();
        let g = DVector::from_iterator(m, others.iter().map(|&i| y.coord(i) / ya - x.coord(i)));
        let lhs = prod - DMatrix::identity(m, m);
        let mut delta = lhs.lu().solve(&(-g))?;
        let size = delta.norm();
        if !size.is_finite() {
            return None;
        }
        if size > 0.5 {
            delta *= C64::new(0.5 / size, 0.0);
        }
        let values = others.iter().zip(delta.iter()).map(|(&i, d)| x.coord(i) + d).collect();
        x = ProjPoint::from_chart(&ChartCoords { chart_index: a, values }).ok()?;
        if size < 1e-15 {
            break;
        }
    }
    Some(x)
}

/// Keeps verified candidates at least [`PERIODIC_DEDUPE`] apart, in order.
fn dedupe(map: &MapKind, n: usize, candidates: Vec<ProjPoint>) -> (Vec<ProjPoint>, Vec<f64>) {
    let mut hash = SpatialHash::new(10.0 * PERIODIC_DEDUPE);
    let mut points: Vec<ProjPoint> = Vec::new();
    let mut residuals = Vec::new();
    for x in candidates {
        let Ok(r) = periodic_residual(map, &x, n) else { continue };
        if !(r < PERIODIC_TOL) {
            continue;
        }
        let dup = hash.candidates(&x).any(|i| fs_distance(&points[i], &x).is_ok_and(|d| d < PERIODIC_DEDUPE));
        if !dup {
            hash.insert(&x, points.len());
            points.push(x);
            residuals.push(r);
        }
    }
    (points, residuals)
}

/// Multi-start search for `E_n`. Starts are the leaves of depth-n backward
/// trees of generic targets (each periodic point has a leaf within the
/// contraction of the inverse branches along its orbit) plus uniform random
/// points; each start is refined by chart Newton and forward-verified.
pub fn periodic_points(map: &MapKind, n: usize, opts: &PeriodicOptions) -> Result<PeriodicSet> {
    if n == 0 {
        return Err(Error::InvalidParams("period must be positive".into()));
    }
    let expected = lefschetz_count(map, n);
    if expected.is_none_or(|e| e > opts.max_count) {
        return Err(Error::InvalidParams(format!("count for period {n} exceeds max_count {}", opts.max_count)));
    }
    let dim = map.dim();
    let branches = preimages_of(map, &random_point(&mut substream(opts.seed, 0), dim))?.len();
    let leaves = (branches as f64).powi(n as i32) * opts.targets as f64;
    let mut rng = substream(opts.seed, 1);
    let targets: Vec<ProjPoint> = (0..opts.targets).map(|_| random_point(&mut rng, dim)).collect();
    let mut starts: Vec<ProjPoint> = if leaves <= opts.max_tree as f64 {
        let mut all = Vec::new();
        for y in &targets {
            let mut level = vec![y.clone()];
            for _ in 0..n {
                let mut next = Vec::with_capacity(level.len() * branches);
                for p in &level {
                    next.extend(preimages_of(map, p)?);
                }
                level = next;
            }
            all.extend(level);
        }
        all
    } else {
        let seed = opts.seed;
        map_chunks(opts.max_tree, |chunk, range| {
            let mut rng = substream(seed, 2 + chunk as u64);
            range
                .map(|_| {
                    let mut x = random_point(&mut rng, dim);
                    for _ in 0..n {
                        let pre = preimages_of(map, &x).unwrap_or_else(|_| vec![x.clone()]);
                        x = pre[rng.gen_range(0..pre.len())].clone();
                    }
                    x
                })
                .collect()
        })
    };
    let mut rng = substream(opts.seed, 1 << 32);
    starts.extend((0..opts.random_starts).map(|_| random_point(&mut rng, dim)));
    let refined: Vec<Option<ProjPoint>> = par_map(&starts, |s| refine(map, s, n, opts.newton_iter));
    let (points, residuals) = dedupe(map, n, refined.into_iter().flatten().collect());
    let multiplicities = vec![1; points.len()];
    Ok(PeriodicSet { n, points, multiplicities, residuals, expected })
}

/// [`periodic_points`] that fails with `IncompleteEnumeration` when fewer
/// points than the theoretical count were found.
pub fn periodic_points_complete(map: &MapKind, n: usize, opts: &PeriodicOptions) -> Result<PeriodicSet> {
    let set = periodic_points(map, n, opts)?;
    match set.expected {
        Some(e) if set.len() < e => Err(Error::IncompleteEnumeration { found: set.len(), expected: e }),
        _ => Ok(set),
    }
}

/// Count oracle on P^1: all roots of `V_1(u) - u V_0(u)` with
/// `(V_0, V_1) = F^n(1, u)`, found by Aberth iteration on the implicit
/// Newton quotient. Both the value and the u-derivative of the lift are
/// carried and rescaled together, so the quotient never overflows.
pub fn periodic_points_p1_oracle(map: &MapKind, n: usize) -> Result<PeriodicSet> {
    if map.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: map.dim() });
    }
    let d = map.degree() as usize;
    let infinity = ProjPoint::from_reals(&[0.0, 1.0])?;
    let at_infinity = periodic_residual(map, &infinity, n)? < PERIODIC_TOL;
    let degree = d.pow(n as u32) + 1 - usize::from(at_infinity);
    let quotient = |u: C64| {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mut v = [one, u];
        let mut dv = [zero, one];
        let mut f = [zero; 2];
        let mut jac = [zero; 4];
        for _ in 0..n {
            map.lift(&v, &mut f);
            map.lift_jacobian(&v, &mut jac);
            let df = [jac[0] * dv[0] + jac[1] * dv[1], jac[2] * dv[0] + jac[3] * dv[1]];
            let s = f[0].norm().max(f[1].norm());
            if !(s > 0.0 && s.is_finite()) {
                return C64::new(f64::NAN, f64::NAN);
            }
            let inv = 1.0 / s;
            v = [f[0] * inv, f[1] * inv];
            dv = [df[0] * inv, df[1] * inv];
        }
        (v[1] - u * v[0]) / (dv[1] - v[0] - u * dv[0])
    };
    let out = aberth(circle_start(degree, 1.0), quotient, AberthOptions { max_iter: 1000, tol: 1e-13 });
    let mut candidates: Vec<ProjPoint> =
        out.roots.iter().filter_map(|u| ProjPoint::new([C64::new(1.0, 0.0), *u]).ok()).collect();
    if at_infinity {
        candidates.push(infinity);
    }
    // polish: Aberth roots of a high-degree product are accurate to a few ulps of the chart value
    let candidates = candidates.iter().map(|x| refine(map, x, n, 3).unwrap_or_else(|| x.clone())).collect();
    let (points, residuals) = dedupe(map, n, candidates);
    let multiplicities = vec![1; points.len()];
    Ok(PeriodicSet { n, points, multiplicities, residuals, expected: lefschetz_count(map, n) })
}

/// The f_λ-periodic point over a periodic base point: the fiber coordinate is
/// carried around the base cycle from `t = 0` until it stops moving.
pub fn periodic_in_attractor(params: &Params, base_point: &ProjPoint, n: usize) -> Result<ProjPoint> {
    const MAX_CYCLES: usize = 200;
    let k = params.k;
    let base = MapKind::Base { k };
    if base_point.dim() != k - 1 {
        return Err(Error::DimensionMismatch { expected: k - 1, got: base_point.dim() });
    }
    let mut orbit = vec![base_point.clone()];
    for i in 1..n {
        orbit.push(base.apply(&orbit[i - 1])?);
    }
    let residual = fs_distance(&base.apply(&orbit[n - 1])?, base_point)?;
    if !(residual < PERIODIC_TOL) {
        return Err(Error::NotPeriodic { period: n, residual });
    }
    let mut tau = C64::new(0.0, 0.0);
    let mut converged = false;
    for _ in 0..MAX_CYCLES {
        let prev = tau;
        for i in 0..n {
            tau = fiber_step(params.lambda, &orbit[i], &orbit[(i + 1) % n], tau);
        }
        if (tau - prev).norm() <= 1e-16 + 1e-14 * tau.norm() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("fiber coordinate over a period-{n} cycle")));
    }
    let x = with_fiber(base_point, tau);
    let r = periodic_residual(&MapKind::FLambda(*params), &x, n)?;
    if !(r < 1e-10) {
        return Err(Error::NoConvergence(format!("lifted periodic point has residual {r:e}")));
    }
    Ok(x)
}

/// Lifts every point of a base periodic set into the attractor.
pub fn lift_periodic_set(params: &Params, base: &PeriodicSet) -> Result<PeriodicSet> {
    let f = MapKind::FLambda(*params);
    let points: Vec<ProjPoint> =
        base.points.iter().map(|x| periodic_in_attractor(params, x, base.n)).collect::<Result<_>>()?;
    let residuals = points.iter().map(|x| periodic_residual(&f, x, base.n)).collect::<Result<_>>()?;
    Ok(PeriodicSet {
        n: base.n,
        multiplicities: base.multiplicities.clone(),
        points,
        residuals,
        expected: base.expected,
    })
}

/// Growth rate of `N_n`: least-squares slope of `log N_n` against `n` over
/// the upper half of the supplied periods (at least three). Lower-order terms
/// such as the `+1` in `2^n + 1` bias a fit over small `n`.
pub fn entropy_from_periodic_growth(counts: &[(usize, usize)]) -> Result<f64> {
    if counts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} periods, need at least 3", counts.len())));
    }
    if counts.iter().any(|c| c.1 == 0) {
        return Err(Error::InsufficientData("zero periodic count".into()));
    }
    let mut c = counts.to_vec();
    c.sort_unstable();
    let keep = c.len().div_ceil(2).max(3);
    let tail = &c[c.len() - keep..];
    let xs: Vec<f64> = tail.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|p| (p.1 as f64).ln()).collect();
    Ok(super::lsq_slope(&xs, &ys))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionReport {
    pub n: usize,
    pub discrepancy: f64,
    /// False when the periodic set was flagged incomplete.
    pub complete: bool,
}

/// Coarse-bin discrepancy between the uniform measure on `E_n` and `cloud`.
pub fn periodic_distribution_compare(
    pset: &PeriodicSet,
    cloud: &Cloud,
    partition: Partition,
) -> Result<DistributionReport> {
    let a = partition.masses(&pset.to_cloud()?);
    let b = partition.masses(cloud);
    Ok(DistributionReport { n: pset.n, discrepancy: discrepancy(&a, &b), complete: pset.is_complete() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base2() -> MapKind {
        MapKind::Base { k: 2 }
    }

    fn contains(set: &PeriodicSet, p: &ProjPoint) -> bool {
        set.points.iter().any(|q| fs_distance(p, q).unwrap() < 1e-9)
    }

    #[test]
    fn fixed_points_of_the_base_map() {
        let set = periodic_points(&base2(), 1, &PeriodicOptions::default()).unwrap();
        assert_eq!(set.len(), 3);
        for u in [C64::new(1.0, 0.0), C64::new(0.0, 0.5), C64::new(0.0, -0.5)] {
            assert!(contains(&set, &ProjPoint::new([C64::new(1.0, 0.0), u]).unwrap()), "{u}");
        }
    }

    #[test]
    fn search_matches_oracle_for_small_periods() {
        for n in 1..=6 {
            let oracle = periodic_points_p1_oracle(&base2(), n).unwrap();
            assert_eq!(oracle.len(), (1 << n) + 1, "oracle n={n}");
            let search = periodic_points_complete(&base2(), n, &PeriodicOptions::default()).unwrap();
            assert_eq!(search.len(), oracle.len(), "search n={n}");
            assert!(oracle.points.iter().all(|p| contains(&search, p)));
            assert!(search.max_residual() < PERIODIC_TOL);
        }
    }

    #[test]
    fn one_one_is_periodic_for_every_period() {
        let one = ProjPoint::from_reals(&[1.0, 1.0]).unwrap();
        for n in [2, 5] {
            assert!(contains(&periodic_points(&base2(), n, &PeriodicOptions::default()).unwrap(), &one));
        }
    }

    #[test]
    fn quadratic_polynomial_periods() {
        let q = MapKind::Quadratic { lambda: C64::new(-0.3, 0.2) };
        let set = periodic_points_p1_oracle(&q, 4).unwrap();
        assert_eq!(set.len(), 17);
        let search = periodic_points(&q, 4, &PeriodicOptions::default()).unwrap();
        assert_eq!(search.len(), 17);
    }

    #[test]
    fn identity_has_no_count() {
        assert!(periodic_points(&MapKind::Identity { dim: 1 }, 1, &PeriodicOptions::default()).is_err());
        assert_eq!(lefschetz_count(&MapKind::Base { k: 3 }, 2), Some(1 + 4 + 16));
    }

    #[test]
    fn attractor_lifts() {
        let params = Params::with_default_rho(2, C64::new(0.01, 0.0)).unwrap();
        let one = ProjPoint::from_reals(&[1.0, 1.0]).unwrap();
        let p = periodic_in_attractor(&params, &one, 1).unwrap();
        assert!(fs_distance(&p, &params.p_lambda()).unwrap() < 1e-14);
        let b = ProjPoint::new([C64::new(1.0, 0.0), C64::new(0.0, 0.5)]).unwrap();
        let x = periodic_in_attractor(&params, &b, 1).unwrap();
        assert!(fs_distance(&crate::projective::project_pi(&x).unwrap(), &b).unwrap() < 1e-15);
        assert!(crate::trap::in_trap(&params, &x).0);
        let not = ProjPoint::from_reals(&[1.0, 0.3]).unwrap();
        assert!(matches!(periodic_in_attractor(&params, &not, 1), Err(Error::NotPeriodic { .. })));
        let e4 = periodic_points_p1_oracle(&base2(), 4).unwrap();
        let lifted = lift_periodic_set(&params, &e4).unwrap();
        assert!(lifted.max_residual() < 1e-10);
        assert!(lifted.points.iter().all(|x| crate::trap::in_trap(&params, x).0));
    }

    #[test]
    fn growth_rate() {
        let counts: Vec<(usize, usize)> = (1..=10).map(|n| (n, (1 << n) + 1)).collect();
        let h = entropy_from_periodic_growth(&counts).unwrap();
        assert!((h - 2f64.ln()).abs() < 0.01, "{h}");
        let flat: Vec<(usize, usize)> = (1..=5).map(|n| (n, 7)).collect();
        assert!(entropy_from_periodic_growth(&flat).unwrap().abs() < 1e-15);
        assert!(entropy_from_periodic_growth(&counts[..2]).is_err());
        let p2: Vec<(usize, usize)> = (1..=8).map(|n| (n, (1 << (2 * n)) + (1 << n) + 1)).collect();
        assert!((entropy_from_periodic_growth(&p2).unwrap() - 2.0 * 2f64.ln()).abs() < 0.01);
    }

    #[test]
    fn distribution_of_a_set_against_itself() {
        let e3 = periodic_points_p1_oracle(&base2(), 3).unwrap();
        let rep = periodic_distribution_compare(&e3, &e3.to_cloud().unwrap(), Partition::Base { m: 1 }).unwrap();
        assert_eq!(rep.discrepancy, 0.0);
        assert!(rep.complete);
    }
}
