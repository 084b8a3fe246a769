//! Fixed coarse partitions used for bin-mass comparisons of clouds.
//!
//! A point of P^m falls in the cell given by its max-modulus index `i`, the
//! argument quadrant of the next coordinate `c = x_{(i+1) mod (m+1)}` and
//! whether `|c| < 1/2`. On P^1 this gives 16 cells. Attractor cells refine
//! the cell of the base projection by the sign of `Im τ`, where `τ` is the
//! fiber coordinate in the chart of the base max-modulus index.

use std::f64::consts::FRAC_PI_2;

use crate::green::Cloud;
use crate::projective::ProjPoint;

pub fn base_cell_count(m: usize) -> usize {
    (m + 1) * 8
}

pub fn base_cell(p: &ProjPoint) -> usize {
    let c = p.coords();
    cell_of(c)
}

fn cell_of(c: &[crate::projective::C64]) -> usize {
    let mut i = 0;
    let mut best = -1.0;
    for (j, x) in c.iter().enumerate() {
        if x.norm() > best {
            best = x.norm();
            i = j;
        }
    }
    let next = c[(i + 1) % c.len()] / c[i];
    let arg = next.arg().rem_euclid(4.0 * FRAC_PI_2);
    let sector = ((arg / FRAC_PI_2) as usize).min(3);
    let ring = usize::from(next.norm() >= 0.5);
    i * 8 + sector * 2 + ring
}

/// Cells on P^k: base cell of the projection times the sign of `Im τ`.
pub fn attractor_cell_count(k: usize) -> usize {
    2 * base_cell_count(k - 1)
}

pub fn attractor_cell(p: &ProjPoint) -> usize {
    let c = p.coords();
    let k = c.len() - 1;
    let base = &c[..k];
    let b = cell_of(base);
    let i = b / 8;
    let tau = c[k] / base[i];
    2 * b + usize::from(tau.im >= 0.0)
}

/// Which partition a comparison uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partition {
    /// Base cells on P^m.
    Base { m: usize },
    /// Attractor cells on P^k.
    Attractor { k: usize },
}

impl Partition {
    /// The natural partition for points of projective dimension `dim`.
    pub fn cells(&self) -> usize {
        match *self {
            Partition::Base { m } => base_cell_count(m),
            Partition::Attractor { k } => attractor_cell_count(k),
        }
    }

    pub fn cell(&self, p: &ProjPoint) -> usize {
        match self {
            Partition::Base { .. } => base_cell(p),
            Partition::Attractor { .. } => attractor_cell(p),
        }
    }

    /// Weighted mass of every cell.
    pub fn masses(&self, cloud: &Cloud) -> Vec<f64> {
        let mut out = vec![0.0; self.cells()];
        for (p, w) in cloud.points().iter().zip(cloud.weights()) {
            out[self.cell(p)] += w;
        }
        out
    }
}

/// Mean absolute difference of two bin-mass vectors.
pub fn discrepancy(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}
