//! Dense univariate polynomials and simultaneous root finding.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::projective::C64;

/// Coefficients lowest degree first; trailing zeros are trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::new(0.0, 0.0));
        }
        Poly { coeffs }
    }

    pub fn from_reals(c: &[f64]) -> Self {
        Self::new(c.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// `x`.
    pub fn x() -> Self {
        Self::from_reals(&[0.0, 1.0])
    }

    /// `Π (x - r_i)`.
    pub fn from_roots(roots: &[C64]) -> Self {
        roots.iter().fold(Self::from_reals(&[1.0]), |p, r| &p * &Self::new(vec![-r, C64::new(1.0, 0.0)]))
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == C64::new(0.0, 0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    /// Value and derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect())
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Drops coefficients below `rel * norm` from the top.
    pub fn trim_relative(&self, rel: f64) -> Poly {
        let cut = rel * self.norm();
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().is_some_and(|x| x.norm() <= cut) {
            c.pop();
        }
        Poly::new(c)
    }

    /// `self ∘ q`.
    pub fn compose(&self, q: &Poly) -> Poly {
        self.coeffs.iter().rev().fold(Poly::constant(C64::new(0.0, 0.0)), |acc, c| &(&acc * q) + &Poly::constant(*c))
    }

    pub fn roots(&self) -> Result<Vec<C64>> {
        poly_roots(self)
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = C64::new(0.0, 0.0);
        Poly::new((0..n).map(|i| *self.coeffs.get(i).unwrap_or(&z) + *o.coeffs.get(i).unwrap_or(&z)).collect())
    }
}

impl std::ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = C64::new(0.0, 0.0);
        Poly::new((0..n).map(|i| *self.coeffs.get(i).unwrap_or(&z) - *o.coeffs.get(i).unwrap_or(&z)).collect())
    }
}

impl std::ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl std::ops::Mul<C64> for &Poly {
    type Output = Poly;
    fn mul(self, s: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

/// Settings for [`aberth`].
#[derive(Clone, Copy, Debug)]
pub struct AberthOptions {
    pub max_iter: usize,
    /// A root is frozen once its Newton step falls below `tol * max(1, |z|)`.
    pub tol: f64,
}

impl Default for AberthOptions {
    fn default() -> Self {
        AberthOptions { max_iter: 2000, tol: 1e-15 }
    }
}

/// Result of an Aberth–Ehrlich run.
#[derive(Clone, Debug)]
pub struct AberthOutput {
    pub roots: Vec<C64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Aberth–Ehrlich iteration on `n = init.len()` simultaneous approximations.
/// `newton(z)` returns the Newton quotient `p(z) / p'(z)` of a degree-n
/// polynomial; the coefficients themselves are never needed.
pub fn aberth<F>(init: Vec<C64>, newton: F, opts: AberthOptions) -> AberthOutput
where
    F: Fn(C64) -> C64 + Sync,
{
    let n = init.len();
    let mut z = init;
    let mut active = vec![true; n];
    for it in 0..opts.max_iter {
        let w: Vec<Option<C64>> =
            crate::rng::par_map(&(0..n).collect::<Vec<_>>(), |&i| active[i].then(|| newton(z[i])));
        let mut any = false;
        for i in 0..n {
            let Some(wi) = w[i] else { continue };
            if !(wi.re.is_finite() && wi.im.is_finite()) {
                continue;
            }
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let step = wi / (C64::new(1.0, 0.0) - wi * s);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
            }
            if step.norm() <= opts.tol * z[i].norm().max(1.0) {
                active[i] = false;
            } else {
                any = true;
            }
        }
        if !any {
            return AberthOutput { roots: z, converged: true, iterations: it + 1 };
        }
    }
    AberthOutput { roots: z, converged: false, iterations: opts.max_iter }
}

/// Starting points on a circle of radius `r`, rotated off the real axis.
pub fn circle_start(n: usize, r: f64) -> Vec<C64> {
    (0..n).map(|i| C64::from_polar(r, TAU * (i as f64 + 0.25) / n as f64 + 0.4)).collect()
}

/// All roots with multiplicity; residuals are checked against
/// `1e-8 · ‖p‖ · max(1, |z|^deg)`.
pub fn poly_roots(p: &Poly) -> Result<Vec<C64>> {
    let n = p.degree();
    if n == 0 {
        return Err(Error::InsufficientData("polynomial has degree 0".into()));
    }
    let c = p.coeffs();
    let r = (c[0].norm() / c[n].norm()).powf(1.0 / n as f64).max(1e-3);
    let out = aberth(
        circle_start(n, r),
        |z| {
            let (v, d) = p.eval_with_derivative(z);
            v / d
        },
        AberthOptions::default(),
    );
    let scale = p.norm();
    for z in &out.roots {
        let bound = 1e-8 * scale * z.norm().max(1.0).powi(n as i32);
        if !(p.eval(*z).norm() <= bound) {
            return Err(Error::NoConvergence(format!("root {z} has residual {:e}", p.eval(*z).norm())));
        }
    }
    Ok(out.roots)
}
