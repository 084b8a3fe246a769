//! The trapping region U_ρ, fiber contraction and the semiconjugacy φ_λ.
//!
//! U_ρ = {|t| < ρ · max(|z|, |w_1|, …, |w_{k-1}|)} is a neighborhood of Π that
//! f_λ maps strictly into itself. The vertical disc over a base point `a` is
//! V_a = U_ρ ∩ L_a, with L_a the line through `a` and `[0:…:0:1]`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::green::Cloud;
use crate::history::Prehistory;
use crate::maps::{HomogeneousMap, MapKind, Params};
use crate::projective::{chordal, embed_pi, fs_distance, Coords, ProjPoint, C64};
use crate::rng::{map_chunks, substream};

/// Number of boundary points used to estimate the diameter of an image disc.
pub const FIBER_SAMPLES: usize = 32;

/// Membership in U_ρ and the signed margin `ρ · max(|z|, |w_j|) - |t|`.
pub fn in_trap(params: &Params, p: &ProjPoint) -> (bool, f64) {
    let margin = params.rho * p.max_norm_of(0..params.k) - p.coord(params.k).norm();
    (margin > 0.0, margin)
}

/// `|t| / max(|z|, |w_j|)`, the quantity bounded by ρ inside U_ρ.
pub fn trap_ratio(k: usize, p: &ProjPoint) -> f64 {
    p.coord(k).norm() / p.max_norm_of(0..k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrapReport {
    pub samples: usize,
    pub max_image_ratio: f64,
    /// `ρ - max_image_ratio`.
    pub margin: f64,
    pub violations: usize,
    /// First sample whose image ratio reached 2|λ|.
    pub witness: Option<ProjPoint>,
}

/// A point of U_ρ: uniform chart coordinates in the unit box of a random
/// chart for the base, then `t` uniform in the open fiber disc.
pub fn random_trap_point<R: Rng + ?Sized>(params: &Params, rng: &mut R) -> ProjPoint {
    let k = params.k;
    let chart = rng.gen_range(0..k);
    let mut v: Coords =
        (0..k)
            .map(|i| {
                if i == chart {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }
            })
            .collect();
    let m = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let r = params.rho * m * rng.gen::<f64>().sqrt();
    v.push(C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU)));
    ProjPoint::new(v).expect("chart coordinate is one")
}

/// Maps `n_samples` random points of U_ρ once and records the image ratios.
/// Violations are images with ratio at least 2|λ|.
pub fn trap_forward_scan(params: &Params, n_samples: usize, seed: u64) -> TrapReport {
    let map = MapKind::FLambda(*params);
    let bound = 2.0 * params.lambda.norm();
    let parts = map_chunks(n_samples, |chunk, range| {
        let mut rng = substream(seed, chunk as u64);
        let mut max_ratio: f64 = 0.0;
        let mut violations = 0;
        let mut witness = None;
        for _ in range {
            let x = random_trap_point(params, &mut rng);
            let img = map.apply(&x).expect("holomorphic map");
            let r = trap_ratio(params.k, &img);
            max_ratio = max_ratio.max(r);
            if !(r < bound) {
                violations += 1;
                witness.get_or_insert(x);
            }
        }
        vec![(max_ratio, violations, witness)]
    });
    let mut report = TrapReport { samples: n_samples, max_image_ratio: 0.0, margin: 0.0, violations: 0, witness: None };
    for (r, v, w) in parts {
        report.max_image_ratio = report.max_image_ratio.max(r);
        report.violations += v;
        if report.witness.is_none() {
            report.witness = w;
        }
    }
    report.margin = params.rho - report.max_image_ratio;
    report
}

/// As [`trap_forward_scan`], failing with the first escaping sample.
pub fn trap_forward_check(params: &Params, n_samples: usize, seed: u64) -> Result<TrapReport> {
    let report = trap_forward_scan(params, n_samples, seed);
    match &report.witness {
        Some(w) => Err(Error::TrapViolation { ratio: report.max_image_ratio, witness: format!("{:?}", w.coords()) }),
        None => Ok(report),
    }
}

/// Boundary sample of V_a: `FIBER_SAMPLES` points at radius just inside ρ.
pub fn fiber_boundary(params: &Params, a: &ProjPoint) -> Vec<ProjPoint> {
    let k = params.k;
    let m = a.max_norm_of(0..k);
    (0..FIBER_SAMPLES)
        .map(|j| {
            let th = std::f64::consts::TAU * j as f64 / FIBER_SAMPLES as f64;
            let mut v: Coords = a.coords().iter().copied().collect();
            v.push(C64::from_polar(0.999 * params.rho * m, th));
            ProjPoint::new(v).expect("nonzero")
        })
        .collect()
}

fn diameter(points: &[ProjPoint]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            d = d.max(chordal(points[i].coords(), points[j].coords()));
        }
    }
    d
}

/// Estimates `diam f_λ^m(V_a)` for `m = 1..=n`.
pub fn fiber_contraction(params: &Params, a: &ProjPoint, n: usize) -> Vec<f64> {
    let map = MapKind::FLambda(*params);
    let mut pts = fiber_boundary(params, a);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for p in pts.iter_mut() {
            *p = map.apply(p).expect("holomorphic map");
        }
        out.push(diameter(&pts));
    }
    out
}

/// Options for [`phi_lambda_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiOptions {
    /// Stop once the images of the trap centre and of a trap edge point agree
    /// to this Fubini–Study distance.
    /// Zero disables early stopping.
    pub early_stop: f64,
    /// Also evolve the boundary of V_{a_{-n}} to bound the error.
    pub error_bound: bool,
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions { early_stop: 1e-12, error_bound: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiResult {
    pub point: ProjPoint,
    pub depth_used: usize,
    /// `diam f_λ^n(V_{a_{-n}})` when requested.
    pub error_bound: Option<f64>,
}

/// Carries the fiber coordinate `tau` over `from` to the fiber over `to`,
/// assuming `f(from) = to` (both canonical).
pub(crate) fn fiber_step(lambda: C64, from: &ProjPoint, to: &ProjPoint, tau: C64) -> C64 {
    let k = from.dim() + 1;
    let z = from.coord(0);
    let t_new = tau * tau + lambda * z * z;
    // the image lift of `from` is `c · to` with `c` read off in the max chart of `to`
    let j = to.max_index();
    let c = lift_slot(k, from.coords(), j);
    t_new / c
}

/// Slot `j` of the base lift `[(z_0-2z_1)^2 : … : z_0^2]`.
fn lift_slot(k: usize, v: &[C64], j: usize) -> C64 {
    if j == k - 1 {
        v[0] * v[0]
    } else {
        let d = v[0] - 2.0 * v[j + 1];
        d * d
    }
}

fn evolve_fiber(lambda: C64, pre: &Prehistory, depth: usize, tau0: C64) -> C64 {
    let mut tau = tau0;
    for i in (1..=depth).rev() {
        tau = fiber_step(lambda, pre.point(i), pre.point(i - 1), tau);
    }
    tau
}

pub(crate) fn with_fiber(base: &ProjPoint, tau: C64) -> ProjPoint {
    let mut v: Coords = base.coords().iter().copied().collect();
    v.push(tau);
    ProjPoint::new(v).expect("nonzero")
}

/// Depth-n approximation `f_λ^n(embed(a_{-n}))` of φ_λ(â), evaluated along the
/// given base points so that only the contracting fiber coordinate evolves.
pub fn phi_lambda_with(params: &Params, pre: &Prehistory, opts: PhiOptions) -> Result<PhiResult> {
    if pre.k() != params.k {
        return Err(Error::DimensionMismatch { expected: params.k - 1, got: pre.k() - 1 });
    }
    let n = pre.depth();
    let lambda = params.lambda;
    let zero = C64::new(0.0, 0.0);
    let mut depth_used = n;
    let mut point = embed_pi(pre.point(0));
    if opts.early_stop > 0.0 {
        // Consecutive depths can agree by accident; compare against a start
        // on the edge of the trap instead, which measures the contraction.
        for d in 1..=n {
            point = with_fiber(pre.point(0), evolve_fiber(lambda, pre, d, zero));
            depth_used = d;
            let edge = 0.999 * params.rho * pre.point(d).max_norm_of(0..params.k);
            let far = with_fiber(pre.point(0), evolve_fiber(lambda, pre, d, C64::new(edge, 0.0)));
            if fs_distance(&point, &far)? < opts.early_stop {
                break;
            }
        }
    } else if n > 0 {
        point = with_fiber(pre.point(0), evolve_fiber(lambda, pre, n, zero));
    }
    let error_bound = opts.error_bound.then(|| {
        let a = pre.point(depth_used);
        let m = a.max_norm_of(0..params.k);
        let ring: Vec<ProjPoint> = (0..FIBER_SAMPLES)
            .map(|j| {
                let th = std::f64::consts::TAU * j as f64 / FIBER_SAMPLES as f64;
                let tau = C64::from_polar(0.999 * params.rho * m, th);
                with_fiber(pre.point(0), evolve_fiber(lambda, pre, depth_used, tau))
            })
            .collect();
        diameter(&ring)
    });
    Ok(PhiResult { point, depth_used, error_bound })
}

/// [`phi_lambda_with`] at default options, after validating the prehistory.
pub fn phi_lambda(params: &Params, pre: &Prehistory) -> Result<ProjPoint> {
    pre.validate()?;
    Ok(phi_lambda_with(params, pre, PhiOptions::default())?.point)
}

/// Forward orbits from random points of U_ρ: after `burn_in` steps, each start
/// contributes up to `ORBIT_RUN` consecutive orbit points.
pub fn sample_attractor_forward(params: &Params, burn_in: usize, n_samples: usize, seed: u64) -> Cloud {
    const ORBIT_RUN: usize = 64;
    let map = MapKind::FLambda(*params);
    let points = map_chunks(n_samples, |chunk, range| {
        let mut rng = substream(seed, chunk as u64);
        let mut out = Vec::with_capacity(range.len());
        let mut x = params.p_lambda();
        for i in 0..range.len() {
            if i % ORBIT_RUN == 0 {
                x = random_trap_point(params, &mut rng);
                for _ in 0..burn_in {
                    x = map.apply(&x).expect("holomorphic map");
                }
            } else {
                x = map.apply(&x).expect("holomorphic map");
            }
            out.push(x.clone());
        }
        out
    });
    Cloud::uniform(points).expect("nonempty")
}

/// Forward orbit of `x` of the given length, starting at `x` itself.
pub fn forward_orbit(params: &Params, x: &ProjPoint, len: usize) -> Vec<ProjPoint> {
    let map = MapKind::FLambda(*params);
    let mut out = Vec::with_capacity(len);
    let mut y = x.clone();
    for _ in 0..len {
        out.push(y.clone());
        y = map.apply(&y).expect("holomorphic map");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{lift_map, sample_prehistory};
    use crate::projective::project_pi;

    fn params(k: usize, l: f64) -> Params {
        Params::with_default_rho(k, C64::new(l, 0.0)).unwrap()
    }

    #[test]
    fn membership_examples() {
        let p = params(2, 0.01);
        assert!(in_trap(&p, &ProjPoint::from_reals(&[1.0, 1.0, 0.03]).unwrap()).0);
        assert!(!in_trap(&p, &ProjPoint::from_reals(&[1.0, 1.0, 0.05]).unwrap()).0);
        let (inside, margin) = in_trap(&p, &embed_pi(&ProjPoint::from_reals(&[0.3, 1.0]).unwrap()));
        assert!(inside);
        assert!((margin - p.rho).abs() < 1e-16);
    }

    #[test]
    fn random_points_are_in_trap() {
        let p = params(3, 0.005);
        let mut rng = substream(1, 0);
        for _ in 0..1000 {
            assert!(in_trap(&p, &random_trap_point(&p, &mut rng)).0);
        }
    }

    #[test]
    fn forward_check_small() {
        let p = params(2, 0.01);
        let r = trap_forward_check(&p, 5000, 3).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_image_ratio < 0.02);
        assert!(r.margin > 0.0);
    }

    #[test]
    fn contraction_at_fixed_base_point() {
        let p = params(2, 0.01);
        let d = fiber_contraction(&p, &ProjPoint::from_reals(&[1.0, 1.0]).unwrap(), 25);
        assert!(d[0] > 0.0 && d[0] < 2.0 * p.rho);
        assert!(d[24] < d[0]);
        let ratio = d[24] / d[23];
        assert!((ratio - 2.0 * p.t_fixed().norm()).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn constant_history_gives_fixed_point() {
        let p = params(2, 0.01);
        let pre = Prehistory::constant(ProjPoint::from_reals(&[1.0, 1.0]).unwrap(), 40).unwrap();
        let x = phi_lambda(&p, &pre).unwrap();
        assert!(fs_distance(&x, &p.p_lambda()).unwrap() < 1e-10);
        let x0 = phi_lambda(&p, &pre.truncate(0)).unwrap();
        assert_eq!(x0, embed_pi(pre.point(0)));
    }

    #[test]
    fn phi_matches_plain_forward_iteration() {
        let p = params(3, 0.01);
        let pre = sample_prehistory(3, &ProjPoint::from_reals(&[2.0, 3.0, 4.0]).unwrap(), 12, 9);
        let opts = PhiOptions { early_stop: 0.0, error_bound: true };
        let res = phi_lambda_with(&p, &pre, opts).unwrap();
        let direct = MapKind::FLambda(p).iterate(&embed_pi(pre.point(12)), 12).unwrap();
        let err = fs_distance(&res.point, &direct).unwrap();
        assert!(err < 1e-9, "{err}");
        assert!(res.error_bound.unwrap() < 1e-12);
        assert!(in_trap(&p, &res.point).0);
        assert_eq!(project_pi(&res.point).unwrap(), *pre.point(0));
    }

    #[test]
    fn commuting_square() {
        let p = params(2, 0.01);
        for seed in 0..20 {
            let pre = sample_prehistory(2, &ProjPoint::from_reals(&[2.0, 3.0]).unwrap(), 40, seed);
            let a = MapKind::FLambda(p).apply(&phi_lambda(&p, &pre).unwrap()).unwrap();
            let b = phi_lambda(&p, &lift_map(&pre).unwrap()).unwrap();
            assert!(fs_distance(&a, &b).unwrap() < 1e-8);
        }
    }

    #[test]
    fn forward_samples_stay_trapped() {
        let p = params(2, 0.01);
        let cloud = sample_attractor_forward(&p, 20, 3000, 4);
        assert_eq!(cloud.len(), 3000);
        assert!(cloud.points().iter().all(|x| in_trap(&p, x).0));
        let fixed = forward_orbit(&p, &p.p_lambda(), 5);
        assert!(fixed.iter().all(|x| fs_distance(x, &p.p_lambda()).unwrap() < 1e-14));
    }
}
