//! The quadratic map family and its closed-form algebra.
//!
//! Coordinates on P^k are ordered `[z : w_1 : … : w_{k-1} : t]`, so `t` is the
//! last slot and Π = {t = 0} is identified with P^(k-1) by dropping it.

mod jacobian;
mod preimages;

pub use jacobian::{chart_jacobian, chart_jacobian_in, step_with_jacobian, ChartJacobian};
pub use preimages::{
    preimage_branches_base, preimages_f_base, preimages_f_lambda, preimages_h, random_preimage_base, PreimageSet,
    DEDUPE_RADIUS,
};

use serde::{Deserialize, Serialize};
use smallvec::smallvec;

use crate::error::{Error, Result};
use crate::projective::{normalize_in_place, Coords, ProjPoint, C64};

/// Tolerance for membership in W = {w_1 = … = w_(k-1)} on canonical coordinates.
pub const W_TOL: f64 = 1e-9;

/// Configuration `(k, λ, ρ)` of f_λ and its trapping region U_ρ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub k: usize,
    pub lambda: C64,
    pub rho: f64,
}

impl Params {
    /// Validates `k >= 2` and `0 < 2|λ| < ρ < sqrt|λ|`.
    pub fn new(k: usize, lambda: C64, rho: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParams(format!("k = {k} must be at least 2")));
        }
        let l = lambda.norm();
        if !(l > 0.0 && 2.0 * l < rho && rho < l.sqrt()) {
            return Err(Error::InvalidParams(format!(
                "need 0 < 2|lambda| < rho < sqrt|lambda|, got |lambda| = {l}, rho = {rho}"
            )));
        }
        Ok(Params { k, lambda, rho })
    }

    pub fn with_default_rho(k: usize, lambda: C64) -> Result<Self> {
        Self::new(k, lambda, default_rho(lambda)?)
    }

    pub fn t_fixed(&self) -> C64 {
        t_fixed(self.lambda)
    }

    /// The fixed point p_λ = [1 : … : 1 : t_λ].
    pub fn p_lambda(&self) -> ProjPoint {
        self.point_on_line(self.t_fixed())
    }

    /// q_λ = [1 : … : 1 : -t_λ], the second preimage of p_λ on L.
    pub fn q_lambda(&self) -> ProjPoint {
        self.point_on_line(-self.t_fixed())
    }

    /// `[1 : … : 1 : t]` on the invariant line L.
    pub fn point_on_line(&self, t: C64) -> ProjPoint {
        let mut v: Coords = smallvec![C64::new(1.0, 0.0); self.k + 1];
        v[self.k] = t;
        ProjPoint::new(v).expect("nonzero")
    }
}

/// ρ = sqrt(2) |λ|^(3/4), the geometric mean of the admissible bounds 2|λ| and sqrt|λ|.
pub fn default_rho(lambda: C64) -> Result<f64> {
    let l = lambda.norm();
    if !(l > 0.0 && l < 0.25) {
        return Err(Error::LambdaOutOfRange(l));
    }
    Ok(std::f64::consts::SQRT_2 * l.powf(0.75))
}

/// The attracting fixed point `t_λ = (1 - sqrt(1 - 4λ)) / 2` of `h_λ(z) = z^2 + λ`,
/// evaluated as `2λ / (1 + sqrt(1 - 4λ))` to avoid cancellation.
pub fn t_fixed(lambda: C64) -> C64 {
    let s = (C64::new(1.0, 0.0) - 4.0 * lambda).sqrt();
    2.0 * lambda / (1.0 + s)
}

pub fn apply_h(lambda: C64, z: C64) -> C64 {
    z * z + lambda
}

/// A holomorphic self-map of P^m given by homogeneous polynomials.
pub trait HomogeneousMap: Sync + Send {
    /// Projective dimension m; lifts act on C^(m+1).
    fn dim(&self) -> usize;

    /// Algebraic degree of the homogeneous lift.
    fn degree(&self) -> u32;

    fn lift(&self, v: &[C64], out: &mut [C64]);

    /// Jacobian of the lift, `(m+1) x (m+1)` row-major.
    fn lift_jacobian(&self, v: &[C64], jac: &mut [C64]);

    fn apply(&self, p: &ProjPoint) -> Result<ProjPoint> {
        let m = self.dim();
        if p.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, got: p.dim() });
        }
        let mut out: Coords = smallvec![C64::new(0.0, 0.0); m + 1];
        self.lift(p.coords(), &mut out);
        normalize_in_place(&mut out).map_err(|_| Error::IndeterminacyHit)?;
        Ok(ProjPoint::from_normalized(out))
    }

    fn iterate(&self, p: &ProjPoint, n: usize) -> Result<ProjPoint> {
        let mut x = p.clone();
        for _ in 0..n {
            x = self.apply(&x)?;
        }
        Ok(x)
    }
}

/// The maps this crate knows about, selectable by name from the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MapKind {
    /// f = f_0 restricted to Π, acting on P^(k-1).
    Base { k: usize },
    /// f_λ on P^k.
    FLambda(Params),
    /// `[z : w] ↦ [z^2 + λ w^2 : w^2]` on P^1.
    Quadratic { lambda: C64 },
    /// Identity on P^m (degree one); a no-expansion control.
    Identity { dim: usize },
}

impl HomogeneousMap for MapKind {
    fn dim(&self) -> usize {
        match self {
            MapKind::Base { k } => k - 1,
            MapKind::FLambda(p) => p.k,
            MapKind::Quadratic { .. } => 1,
            MapKind::Identity { dim } => *dim,
        }
    }

    fn degree(&self) -> u32 {
        match self {
            MapKind::Identity { .. } => 1,
            _ => 2,
        }
    }

    fn lift(&self, v: &[C64], out: &mut [C64]) {
        match *self {
            MapKind::Base { k } => base_lift(k, v, out),
            MapKind::FLambda(p) => {
                base_lift(p.k, &v[..p.k], &mut out[..p.k]);
                let (z, t) = (v[0], v[p.k]);
                out[p.k] = t * t + p.lambda * z * z;
            }
            MapKind::Quadratic { lambda } => {
                let (z, w) = (v[0], v[1]);
                out[0] = z * z + lambda * w * w;
                out[1] = w * w;
            }
            MapKind::Identity { .. } => out.copy_from_slice(v),
        }
    }

    fn lift_jacobian(&self, v: &[C64], jac: &mut [C64]) {
        let n = v.len();
        jac.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        match *self {
            MapKind::Base { k } => base_jacobian(k, v, jac, n),
            MapKind::FLambda(p) => {
                base_jacobian(p.k, v, jac, n);
                let (z, t) = (v[0], v[p.k]);
                jac[p.k * n] = 2.0 * p.lambda * z;
                jac[p.k * n + p.k] = 2.0 * t;
            }
            MapKind::Quadratic { lambda } => {
                jac[0] = 2.0 * v[0];
                jac[1] = 2.0 * lambda * v[1];
                jac[3] = 2.0 * v[1];
            }
            MapKind::Identity { .. } => {
                for i in 0..n {
                    jac[i * n + i] = C64::new(1.0, 0.0);
                }
            }
        }
    }
}

/// `[z_0 : … : z_{k-1}] ↦ [(z_0-2z_1)^2 : … : (z_0-2z_{k-1})^2 : z_0^2]`.
fn base_lift(k: usize, v: &[C64], out: &mut [C64]) {
    let z = v[0];
    for j in 1..k {
        let d = z - 2.0 * v[j];
        out[j - 1] = d * d;
    }
    out[k - 1] = z * z;
}

/// Writes the base rows of the Jacobian into a matrix with row stride `n`.
fn base_jacobian(k: usize, v: &[C64], jac: &mut [C64], n: usize) {
    let z = v[0];
    for j in 1..k {
        let d = z - 2.0 * v[j];
        jac[(j - 1) * n] = 2.0 * d;
        jac[(j - 1) * n + j] = -4.0 * d;
    }
    jac[(k - 1) * n] = 2.0 * z;
}

pub fn apply_f_lambda(params: &Params, p: &ProjPoint) -> Result<ProjPoint> {
    MapKind::FLambda(*params).apply(p)
}

pub fn apply_f_base(k: usize, q: &ProjPoint) -> Result<ProjPoint> {
    MapKind::Base { k }.apply(q)
}

/// Largest deviation from `w_1 = … = w_(k-1)` on the canonical representative.
pub fn w_deviation(k: usize, p: &ProjPoint) -> f64 {
    let c = p.coords();
    (2..k).map(|j| (c[j] - c[1]).norm()).fold(0.0, f64::max)
}

/// g_λ = f_λ^k restricted to the surface W.
pub fn apply_g_lambda(params: &Params, p: &ProjPoint) -> Result<ProjPoint> {
    let dev = w_deviation(params.k, p);
    if dev > W_TOL {
        return Err(Error::NotInW(dev));
    }
    MapKind::FLambda(*params).iterate(p, params.k)
}

/// Components of the critical set of the base map f.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalComponent {
    /// `{z_0 = 0}`
    ZeroFirst,
    /// `{z_0 = 2 z_j}`
    Diagonal(usize),
}

/// Reports which components `{z_0 = 0}`, `{z_0 = 2 z_j}` of the critical set
/// lie within Fubini–Study distance `tol` of `q`.
pub fn critical_set_membership(k: usize, q: &ProjPoint, tol: f64) -> Result<Vec<CriticalComponent>> {
    if q.dim() != k - 1 {
        return Err(Error::DimensionMismatch { expected: k - 1, got: q.dim() });
    }
    let c = q.coords();
    let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut out = Vec::new();
    if c[0].norm() / norm < tol {
        out.push(CriticalComponent::ZeroFirst);
    }
    for j in 1..k {
        if (c[0] - 2.0 * c[j]).norm() / (norm * 5f64.sqrt()) < tol {
            out.push(CriticalComponent::Diagonal(j));
        }
    }
    Ok(out)
}
