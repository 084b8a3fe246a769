//! Closed-form inverse branches.
//!
//! Every preimage solver picks the principal square root for the first
//! coordinate (this fixes the projective scale) and enumerates both signs of
//! every remaining square root. Coincident candidates are merged and their
//! count recorded as a multiplicity, so multiplicities always sum to the
//! topological degree.

use rand::Rng;
use smallvec::SmallVec;

use super::Params;
use crate::error::{Error, Result};
use crate::projective::{chordal, normalize_in_place, Coords, ProjPoint, C64};

/// Candidates closer than this (Fubini–Study) are the same preimage.
pub const DEDUPE_RADIUS: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PreimageSet {
    pub points: Vec<ProjPoint>,
    pub multiplicities: Vec<usize>,
}

impl PreimageSet {
    /// Sum of multiplicities (the topological degree for a valid target).
    pub fn total(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when some preimage is a critical point (multiplicity above one).
    pub fn is_degenerate(&self) -> bool {
        self.multiplicities.iter().any(|&m| m > 1)
    }

    fn push(&mut self, p: ProjPoint) {
        for (q, m) in self.points.iter().zip(self.multiplicities.iter_mut()) {
            if chordal(q.coords(), p.coords()) < DEDUPE_RADIUS {
                *m += 1;
                return;
            }
        }
        self.points.push(p);
        self.multiplicities.push(1);
    }
}

/// Square roots of the target slots in the order they enter the inverse:
/// `r[0] = sqrt(c_{k-1})` gives `z_0`, `r[j] = sqrt(c_{j-1})` gives `z_j`.
fn base_roots(k: usize, c: &[C64]) -> SmallVec<[C64; 5]> {
    let mut r = SmallVec::with_capacity(k);
    r.push(c[k - 1].sqrt());
    for j in 1..k {
        r.push(c[j - 1].sqrt());
    }
    r
}

/// Assembles the base preimage for the sign pattern `signs` (bit j-1 set
/// means the minus branch for z_j).
fn base_candidate(k: usize, r: &[C64], signs: u64, out: &mut Coords) {
    out.clear();
    let z0 = r[0];
    out.push(z0);
    for (j, rj) in r.iter().enumerate().take(k).skip(1) {
        let s = if signs >> (j - 1) & 1 == 1 { -1.0 } else { 1.0 };
        out.push(0.5 * (z0 - s * rj));
    }
}

/// All 2^(k-1) preimages of `target ∈ P^(k-1)` under the base map f.
pub fn preimages_f_base(k: usize, target: &ProjPoint) -> Result<PreimageSet> {
    if target.dim() != k - 1 {
        return Err(Error::DimensionMismatch { expected: k - 1, got: target.dim() });
    }
    let r = base_roots(k, target.coords());
    let mut set = PreimageSet::default();
    let mut v = Coords::new();
    for signs in 0..(1u64 << (k - 1)) {
        base_candidate(k, &r, signs, &mut v);
        normalize_in_place(&mut v)?;
        set.push(ProjPoint::from_normalized(v.clone()));
    }
    Ok(set)
}

/// The 2^(k-1) branch values of the base inverse, in sign-pattern order and
/// without merging coincident points.
pub fn preimage_branches_base(k: usize, target: &ProjPoint) -> Vec<ProjPoint> {
    let r = base_roots(k, target.coords());
    let mut v = Coords::new();
    (0..(1u64 << (k - 1)))
        .map(|signs| {
            base_candidate(k, &r, signs, &mut v);
            normalize_in_place(&mut v).expect("preimage of a valid point is nonzero");
            ProjPoint::from_normalized(v.clone())
        })
        .collect()
}

/// One preimage drawn uniformly over the 2^(k-1) branches, i.e. with
/// probability proportional to multiplicity.
pub fn random_preimage_base<R: Rng + ?Sized>(k: usize, target: &ProjPoint, rng: &mut R) -> ProjPoint {
    let r = base_roots(k, target.coords());
    let signs: u64 = if k > 1 { rng.gen::<u64>() & ((1u64 << (k - 1)) - 1) } else { 0 };
    let mut v = Coords::new();
    base_candidate(k, &r, signs, &mut v);
    normalize_in_place(&mut v).expect("preimage of a valid point is nonzero");
    ProjPoint::from_normalized(v)
}

/// All 2^k preimages of `target ∈ P^k` under f_λ.
pub fn preimages_f_lambda(params: &Params, target: &ProjPoint) -> Result<PreimageSet> {
    let k = params.k;
    if target.dim() != k {
        return Err(Error::DimensionMismatch { expected: k, got: target.dim() });
    }
    let a = target.coords();
    let r = base_roots(k, a);
    let z0 = r[0];
    let tr = (a[k] - params.lambda * z0 * z0).sqrt();
    let mut set = PreimageSet::default();
    let mut v = Coords::new();
    for signs in 0..(1u64 << k) {
        base_candidate(k, &r, signs, &mut v);
        let s = if signs >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 };
        v.push(s * tr);
        normalize_in_place(&mut v)?;
        set.push(ProjPoint::from_normalized(v.clone()));
    }
    Ok(set)
}

/// All 2^depth solutions of `h_λ^depth(s) = w`, listed with multiplicity.
pub fn preimages_h(lambda: C64, w: C64, depth: usize) -> Vec<C64> {
    let mut level = vec![w];
    for _ in 0..depth {
        level = level
            .iter()
            .flat_map(|&y| {
                let r = (y - lambda).sqrt();
                [r, -r]
            })
            .collect();
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{apply_f_base, apply_f_lambda, apply_h, t_fixed, HomogeneousMap, MapKind};
    use crate::projective::fs_distance;
    use crate::rng::substream;

    fn pt(v: &[f64]) -> ProjPoint {
        ProjPoint::from_reals(v).unwrap()
    }

    fn random_point(rng: &mut impl Rng, n: usize) -> ProjPoint {
        ProjPoint::new((0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).unwrap()
    }

    #[test]
    fn base_preimages_of_fixed_point_k3() {
        let set = preimages_f_base(3, &pt(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(set.len(), 4);
        for expect in [[1.0, 0.0, 0.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0]] {
            assert!(set.points.iter().any(|p| fs_distance(p, &pt(&expect)).unwrap() < 1e-15));
        }
    }

    #[test]
    fn critical_value_has_double_preimage() {
        let set = preimages_f_base(2, &pt(&[1.0, 0.0])).unwrap();
        assert_eq!(set.points, vec![pt(&[0.0, 1.0])]);
        assert_eq!(set.multiplicities, vec![2]);
        assert!(set.is_degenerate());
    }

    #[test]
    fn generic_base_preimages_forward_check() {
        let mut rng = substream(11, 0);
        for k in 2..=5 {
            for _ in 0..50 {
                let target = random_point(&mut rng, k);
                let set = preimages_f_base(k, &target).unwrap();
                assert_eq!(set.len(), 1 << (k - 1));
                assert_eq!(set.total(), 1 << (k - 1));
                for q in &set.points {
                    assert!(fs_distance(&apply_f_base(k, q).unwrap(), &target).unwrap() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn f_lambda_preimages_of_p_lambda() {
        let p = Params::with_default_rho(2, C64::new(0.01, 0.0)).unwrap();
        let set = preimages_f_lambda(&p, &p.p_lambda()).unwrap();
        assert_eq!(set.len(), 4);
        for special in [p.p_lambda(), p.q_lambda()] {
            assert!(set.points.iter().any(|q| fs_distance(q, &special).unwrap() < 1e-14));
        }
        let set = preimages_f_lambda(&p, &pt(&[1.0, 1.0, 0.01])).unwrap();
        assert!(set.points.iter().any(|q| fs_distance(q, &pt(&[1.0, 0.0, 0.0])).unwrap() < 1e-14));
    }

    #[test]
    fn f_lambda_preimages_round_trip() {
        let mut rng = substream(12, 0);
        for k in 2..=4 {
            let params = Params::with_default_rho(k, C64::new(0.01, 0.002)).unwrap();
            for _ in 0..50 {
                let x = random_point(&mut rng, k + 1);
                let target = apply_f_lambda(&params, &x).unwrap();
                let set = preimages_f_lambda(&params, &target).unwrap();
                assert_eq!(set.total(), 1 << k);
                assert!(set.points.iter().any(|q| fs_distance(q, &x).unwrap() < 1e-9));
                for q in &set.points {
                    let img = MapKind::FLambda(params).apply(q).unwrap();
                    assert!(fs_distance(&img, &target).unwrap() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn random_branch_is_a_preimage() {
        let mut rng = substream(13, 0);
        for _ in 0..100 {
            let target = random_point(&mut rng, 3);
            let q = random_preimage_base(3, &target, &mut rng);
            assert!(fs_distance(&apply_f_base(3, &q).unwrap(), &target).unwrap() < 1e-10);
        }
    }

    #[test]
    fn h_preimages() {
        let mut s = preimages_h(C64::new(0.0, 0.0), C64::new(1.0, 0.0), 1);
        s.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_eq!(s, vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]);

        // inverse branches near the attracting fixed point expand by 1/(2t)
        let l = C64::new(1e-4, 0.0);
        let t = t_fixed(l);
        let s = preimages_h(l, t, 2);
        assert_eq!(s.len(), 4);
        assert!(s.iter().any(|x| (x - t).norm() < 1e-11));
        assert!(s.iter().any(|x| (x + t).norm() < 1e-11));
        let far: Vec<_> = s.iter().filter(|x| (x.norm() - t.norm()).abs() > 1e-6).collect();
        assert_eq!(far.len(), 2);
        for x in far {
            assert!((x.norm() - (2e-4f64).sqrt()).abs() < 1e-5);
        }

        let w = C64::new(0.3, -0.4);
        let s = preimages_h(C64::new(0.01, 0.0), w, 10);
        assert_eq!(s.len(), 1024);
        for x in s {
            let mut y = x;
            for _ in 0..10 {
                y = apply_h(C64::new(0.01, 0.0), y);
            }
            assert!((y - w).norm() < 1e-12 * w.norm().max(1.0));
        }
    }
}
