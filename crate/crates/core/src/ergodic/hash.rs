//! Grid hashing of projective points for fixed-radius neighbor queries.
//!
//! A point is keyed by `(P_00 / √2, Re P_01, Im P_01)` where `P = vv*` is the
//! projector of a unit representative. Every entry of `P - Q` is bounded by
//! the operator norm, which for rank-one projectors equals the chordal
//! distance, so points within chordal distance `r` of each other land in
//! adjacent cells when the cell size is `r`.

use std::collections::HashMap;
use std::f64::consts::SQRT_2;

use crate::projective::ProjPoint;

pub(crate) fn features(p: &ProjPoint) -> [f64; 3] {
    let v = p.unit_vector();
    let p01 = v[0] * v[1].conj();
    [v[0].norm_sqr() / SQRT_2, p01.re, p01.im]
}

pub(crate) struct SpatialHash {
    cell: f64,
    map: HashMap<[i64; 3], Vec<usize>>,
}

impl SpatialHash {
    pub(crate) fn new(radius: f64) -> Self {
        SpatialHash { cell: radius, map: HashMap::new() }
    }

    fn key(&self, f: &[f64; 3]) -> [i64; 3] {
        f.map(|x| (x / self.cell).floor() as i64)
    }

    pub(crate) fn insert(&mut self, p: &ProjPoint, index: usize) {
        let k = self.key(&features(p));
        self.map.entry(k).or_default().push(index);
    }

    /// Indices in the 27 cells around `p`; a superset of everything within
    /// chordal distance `radius`.
    pub(crate) fn candidates<'a>(&'a self, p: &ProjPoint) -> impl Iterator<Item = usize> + 'a {
        let [a, b, c] = self.key(&features(p));
        (-1..=1).flat_map(move |i| {
            (-1..=1).flat_map(move |j| {
                (-1..=1).flat_map(move |l| self.map.get(&[a + i, b + j, c + l]).into_iter().flatten().copied())
            })
        })
    }
}
