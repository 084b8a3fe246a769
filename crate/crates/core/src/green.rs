//! Green function, empirical measures and the samplers for μ₀ and μ_λ.
//!
//! μ₀ on Π is sampled by independent backward random walks with a uniform
//! branch at every step. μ_λ on K_λ is the image of the history measure of μ₀
//! under φ_λ: a walk is continued past its endpoint `a_0` to a prehistory of
//! `a_0`, which φ_λ maps into the fiber over `a_0`.

use crate::error::{Error, Result};
use crate::history::{sample_prehistory_with, Prehistory};
use crate::maps::{preimage_branches_base, random_preimage_base, HomogeneousMap, Params};
use crate::partition::{discrepancy, Partition};
use crate::projective::{project_pi, ProjPoint, C64};
use crate::rng::{map_chunks, substream};
use crate::trap::{phi_lambda_with, PhiOptions};

/// Backward depth used to draw the endpoint `a_0` of a μ₀ walk.
pub const MU0_DEPTH: usize = 30;

/// A finite weighted point set on P^dim with weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Cloud {
    dim: usize,
    points: Vec<ProjPoint>,
    weights: Vec<f64>,
}

impl Cloud {
    pub fn uniform(points: Vec<ProjPoint>) -> Result<Self> {
        let n = points.len();
        Self::weighted(points, vec![1.0; n])
    }

    /// Rescales `weights` to sum to one.
    pub fn weighted(points: Vec<ProjPoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientSamples { need: 1, got: 0 });
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        let dim = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParams("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        // already-normalized weights are kept bit for bit
        let weights = if (total - 1.0).abs() <= 4.0 * weights.len() as f64 * f64::EPSILON {
            weights
        } else {
            weights.into_iter().map(|w| w / total).collect()
        };
        Ok(Cloud { dim, points, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_points(self) -> Vec<ProjPoint> {
        self.points
    }

    /// Image measure under `map`.
    pub fn push_forward<M: HomogeneousMap + ?Sized>(&self, map: &M) -> Result<Cloud> {
        let points = self.points.iter().map(|p| map.apply(p)).collect::<Result<Vec<_>>>()?;
        Ok(Cloud { dim: self.dim, points, weights: self.weights.clone() })
    }

    /// Image measure under the projection `[z : w : t] ↦ [z : w]`.
    pub fn project_pi(&self) -> Result<Cloud> {
        let points = self.points.iter().map(project_pi).collect::<Result<Vec<_>>>()?;
        Ok(Cloud { dim: self.dim - 1, points, weights: self.weights.clone() })
    }
}

/// `G(x) = lim 2^{-n} log |F^n(x)|` with the sup norm, accumulated on unit
/// representatives so the iterates never overflow.
pub fn green_function<M: HomogeneousMap + ?Sized>(map: &M, lift: &[C64], n_iter: usize) -> Result<f64> {
    let m = map.dim();
    if lift.len() != m + 1 {
        return Err(Error::DimensionMismatch { expected: m + 1, got: lift.len() });
    }
    let d = map.degree() as f64;
    let sup = |v: &[C64]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let n0 = sup(lift);
    if !(n0 > 0.0) {
        return Err(Error::ZeroVector);
    }
    let mut g = n0.ln();
    let mut y: Vec<C64> = lift.iter().map(|c| c / n0).collect();
    let mut fy = vec![C64::new(0.0, 0.0); m + 1];
    let mut w = 1.0;
    for _ in 0..n_iter {
        map.lift(&y, &mut fy);
        let s = sup(&fy);
        if !(s > 0.0) {
            return Err(Error::IndeterminacyHit);
        }
        w /= d;
        g += w * s.ln();
        for (a, b) in y.iter_mut().zip(&fy) {
            *a = b / s;
        }
    }
    Ok(g)
}

/// Default generic start `[2 : 3 : … : k+1]` for backward walks on P^(k-1).
pub fn default_start(k: usize) -> ProjPoint {
    let v: Vec<f64> = (0..k).map(|i| (i + 2) as f64).collect();
    ProjPoint::from_reals(&v).expect("nonzero")
}

/// `n_samples` endpoints of independent backward walks of length `depth`.
pub fn sample_mu0(k: usize, depth: usize, n_samples: usize, seed: u64) -> Cloud {
    sample_mu0_from(k, &default_start(k), depth, n_samples, seed)
}

pub fn sample_mu0_from(k: usize, start: &ProjPoint, depth: usize, n_samples: usize, seed: u64) -> Cloud {
    let points = map_chunks(n_samples, |chunk, range| {
        let mut rng = substream(seed, chunk as u64);
        range
            .map(|_| {
                let mut x = start.clone();
                for _ in 0..depth {
                    x = random_preimage_base(k, &x, &mut rng);
                }
                x
            })
            .collect()
    });
    Cloud::uniform(points).expect("nonempty")
}

/// Prehistories of depth `depth` whose heads are distributed by μ₀, i.e. a
/// sample of the history measure truncated to `depth`.
pub fn sample_histories(k: usize, depth: usize, n_samples: usize, seed: u64) -> Vec<Prehistory> {
    let start = default_start(k);
    map_chunks(n_samples, |chunk, range| {
        let mut rng = substream(seed, chunk as u64);
        range
            .map(|_| {
                let mut x = start.clone();
                for _ in 0..MU0_DEPTH {
                    x = random_preimage_base(k, &x, &mut rng);
                }
                sample_prehistory_with(k, &x, depth, &mut rng)
            })
            .collect()
    })
}

/// `n_samples` points `φ_λ(â)` with `â` drawn from the history measure of μ₀.
pub fn sample_mu_lambda(params: &Params, depth: usize, n_samples: usize, seed: u64) -> Cloud {
    let k = params.k;
    let start = default_start(k);
    let points = map_chunks(n_samples, |chunk, range| {
        let mut rng = substream(seed, chunk as u64);
        range
            .map(|_| {
                let mut x = start.clone();
                for _ in 0..MU0_DEPTH {
                    x = random_preimage_base(k, &x, &mut rng);
                }
                let pre = sample_prehistory_with(k, &x, depth, &mut rng);
                phi_lambda_with(params, &pre, PhiOptions::default()).expect("matching dimension").point
            })
            .collect()
    });
    Cloud::uniform(points).expect("nonempty")
}

/// Largest preimage tree enumerated exactly.
pub const MAX_TREE: u64 = 100_000;

/// All `2^{(k-1) depth}` leaves of the backward tree of `z`, with repetition.
pub fn preimage_tree(k: usize, z: &ProjPoint, depth: usize) -> Result<Vec<ProjPoint>> {
    let leaves = 1u64.checked_shl(((k - 1) * depth) as u32).unwrap_or(u64::MAX);
    if leaves > MAX_TREE {
        return Err(Error::TreeTooLarge(leaves));
    }
    let mut level = vec![z.clone()];
    for _ in 0..depth {
        level = level.iter().flat_map(|x| preimage_branches_base(k, x)).collect();
    }
    Ok(level)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquidistributionReport {
    pub depths: Vec<usize>,
    /// Whether the measure at each depth was sampled rather than enumerated.
    pub sampled: Vec<bool>,
    pub masses: Vec<Vec<f64>>,
    /// Discrepancy between consecutive depths.
    pub discrepancies: Vec<f64>,
}

/// Bin masses of the depth-n preimage measure of `z` for each requested
/// depth, exact when the tree is small and sampled with `MAX_TREE` walks
/// otherwise.
pub fn preimage_distribution_test(
    k: usize,
    z: &ProjPoint,
    depths: &[usize],
    seed: u64,
) -> Result<EquidistributionReport> {
    let part = Partition::Base { m: k - 1 };
    let mut masses = Vec::new();
    let mut sampled = Vec::new();
    for &d in depths {
        let cloud = match preimage_tree(k, z, d) {
            Ok(leaves) => {
                sampled.push(false);
                Cloud::uniform(leaves)?
            }
            Err(Error::TreeTooLarge(_)) => {
                sampled.push(true);
                sample_mu0_from(k, z, d, MAX_TREE as usize, seed)
            }
            Err(e) => return Err(e),
        };
        masses.push(part.masses(&cloud));
    }
    let discrepancies = masses.windows(2).map(|w| discrepancy(&w[0], &w[1])).collect();
    Ok(EquidistributionReport { depths: depths.to_vec(), sampled, masses, discrepancies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapKind;
    use crate::trap::in_trap;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn green_examples() {
        let f = MapKind::Base { k: 2 };
        assert_eq!(green_function(&f, &[c(1.0), c(1.0)], 60).unwrap(), 0.0);
        assert_eq!(green_function(&f, &[c(2.0), c(2.0)], 60).unwrap(), 2f64.ln());
        assert_eq!(green_function(&f, &[c(0.0), c(0.0)], 60), Err(Error::ZeroVector));
    }

    #[test]
    fn green_functional_equation() {
        let f = MapKind::Base { k: 3 };
        let x = [C64::new(0.3, -0.2), C64::new(1.1, 0.5), C64::new(-0.7, 0.1)];
        let mut fx = [c(0.0); 3];
        f.lift(&x, &mut fx);
        let g = green_function(&f, &x, 60).unwrap();
        let gf = green_function(&f, &fx, 60).unwrap();
        assert!((gf - 2.0 * g).abs() < 1e-8);
    }

    #[test]
    fn cloud_validation() {
        assert!(Cloud::uniform(vec![]).is_err());
        let p = ProjPoint::from_reals(&[1.0, 0.0]).unwrap();
        let q = ProjPoint::from_reals(&[1.0, 0.0, 0.0]).unwrap();
        assert!(Cloud::uniform(vec![p.clone(), q]).is_err());
        let cl = Cloud::weighted(vec![p.clone(), p], vec![1.0, 3.0]).unwrap();
        assert_eq!(cl.weights(), &[0.25, 0.75]);
    }

    #[test]
    fn depth_zero_is_a_delta() {
        let cl = sample_mu0(2, 0, 10, 1);
        assert!(cl.points().iter().all(|p| *p == default_start(2)));
    }

    #[test]
    fn mu_lambda_lies_in_trap() {
        let p = Params::with_default_rho(2, c(0.01)).unwrap();
        let cl = sample_mu_lambda(&p, 40, 2000, 3);
        assert!(cl.points().iter().all(|x| in_trap(&p, x).0));
        assert!((cl.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tree_sizes() {
        let z = default_start(2);
        assert_eq!(preimage_tree(2, &z, 5).unwrap().len(), 32);
        assert_eq!(preimage_tree(3, &default_start(3), 3).unwrap().len(), 64);
        assert!(matches!(preimage_tree(2, &z, 20), Err(Error::TreeTooLarge(_))));
    }
}
