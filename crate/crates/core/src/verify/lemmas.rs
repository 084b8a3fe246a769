//! Checkers for the fixed-line, preimage-escape and hyperbolicity lemmas.
//!
//! In the chart `w = 1` of W, a line `t = αz + β` is fixed by g_λ only if
//!
//! ```text
//! (1)  h^k(α)           = α + β      (z = ∞)
//! (2)  h^k(α + β)       = α + β      (z = 1)
//! (3)  h^{k-1}((β/2)^2) = α + β      (z = 0)
//! ```
//!
//! with `|α|, |α + β|, |β| < ρ`. The fixed-line check evaluates the two
//! candidate families forced by (1) and (2) and also minimizes the residual
//! of the whole system over a neighborhood of the origin.

use smallvec::smallvec;

use super::dd::{h_iter, t_fixed_in, DdComplex, Scalar};
use super::poly::{poly_roots, Poly};
use super::{LemmaReport, Precision};
use crate::error::{Error, Result};
use crate::maps::{chart_jacobian_in, preimages_h, MapKind, Params};
use crate::projective::{Coords, ProjPoint, C64};
use crate::trap::in_trap;

/// Residual threshold `|λ|^{max(3, k)} / 10` for the fixed-line check.
pub fn fixed_line_threshold(lambda: C64, k: usize) -> f64 {
    lambda.norm().powi(k.max(3) as i32) / 10.0
}

/// The three residuals `(1) - rhs, (2) - rhs, (3) - rhs`.
pub fn line_equations<S: Scalar>(lambda: S, k: usize, alpha: S, beta: S) -> [S; 3] {
    let s = alpha + beta;
    let half = S::from_c64(C64::new(0.5, 0.0));
    let hb = beta * half;
    [h_iter(lambda, alpha, k) - s, h_iter(lambda, s, k) - s, h_iter(lambda, hb * hb, k - 1) - s]
}

fn max_norm<S: Scalar>(e: &[S; 3]) -> f64 {
    e.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `h^k` as a polynomial of degree `2^k`.
pub fn h_poly(lambda: C64, k: usize) -> Poly {
    let c = Poly::constant(lambda);
    (0..k).fold(Poly::x(), |p, _| &(&p * &p) + &c)
}

/// Roots of `h^k(x) = σx` inside `|x| < rho`, refined in `S`.
fn small_roots<S: Scalar>(lambda: C64, k: usize, sigma: f64, rho: f64) -> Result<Vec<S>> {
    let p = &h_poly(lambda, k) - &(&Poly::x() * C64::new(sigma, 0.0));
    let lam = S::from_c64(lambda);
    let sig = S::from_c64(C64::new(sigma, 0.0));
    let one = S::from_c64(C64::new(1.0, 0.0));
    let two = S::from_c64(C64::new(2.0, 0.0));
    let mut out = Vec::new();
    for r in poly_roots(&p)?.into_iter().filter(|r| r.norm() < rho) {
        let mut x = S::from_c64(r);
        for _ in 0..8 {
            let mut y = x;
            let mut d = one;
            for _ in 0..k {
                d = d * two * y;
                y = y * y + lam;
            }
            x = x - (y - sig * x) / (d - sig);
        }
        out.push(x);
    }
    Ok(out)
}

/// Case residuals in the scalar `S`: for each candidate `(label, α, β)`, the
/// max residual of the system and the arithmetic noise floor.
fn case_residuals<S: Scalar>(lambda: C64, k: usize, rho: f64) -> Result<Vec<(String, C64, f64, f64)>> {
    let lam = S::from_c64(lambda);
    let eps = 2f64.powi(-(S::BITS as i32));
    let two = S::from_c64(C64::new(2.0, 0.0));
    let zero = S::from_c64(C64::new(0.0, 0.0));
    let mut out = Vec::new();
    // β = 0: α is a fixed point of h^k
    for a in small_roots::<S>(lambda, k, 1.0, rho)? {
        let e = line_equations(lam, k, a, zero);
        let floor = 16.0 * k as f64 * eps * a.norm().max(lambda.norm());
        out.push(("beta = 0".to_string(), a.to_c64(), max_norm(&e), floor));
    }
    // β = -2α: h^k(α) = -α
    for a in small_roots::<S>(lambda, k, -1.0, rho)? {
        let b = -(two * a);
        if b.norm() >= rho {
            continue;
        }
        let e = line_equations(lam, k, a, b);
        let floor = 16.0 * k as f64 * eps * a.norm().max(lambda.norm());
        out.push(("beta = -2 alpha".to_string(), a.to_c64(), max_norm(&e), floor));
    }
    Ok(out)
}

/// Lower bound `sqrt(min Σ|e_i|^2 / 3)` on `max_i |e_i|` over
/// `|α| < ρ, |β| < 3ρ`: grid search followed by Levenberg–Marquardt from the
/// best grid cells. Returns the bound and the minimizing `(α, β)`.
pub fn fixed_line_sweep(lambda: C64, k: usize, rho: f64, grid: usize) -> (f64, C64, C64) {
    let disc = |r: f64| -> Vec<C64> {
        let mut v = Vec::new();
        for i in 0..grid {
            for j in 0..grid {
                let x = C64::new(
                    -r + 2.0 * r * (i as f64 + 0.5) / grid as f64,
                    -r + 2.0 * r * (j as f64 + 0.5) / grid as f64,
                );
                if x.norm() < r {
                    v.push(x);
                }
            }
        }
        v
    };
    let alphas = disc(rho);
    let betas = disc(3.0 * rho);
    let ss = |a: C64, b: C64| line_equations(lambda, k, a, b).iter().map(|e| e.norm_sqr()).sum::<f64>();
    let mut scored: Vec<(f64, C64, C64)> = crate::rng::par_map(&alphas, |&a| {
        let mut best = (f64::INFINITY, a, C64::new(0.0, 0.0));
        for &b in &betas {
            let s = ss(a, b);
            if s < best.0 {
                best = (s, a, b);
            }
        }
        best
    });
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));
    scored.truncate(16);
    let mut best = (f64::INFINITY, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for (s0, a0, b0) in scored {
        let (s, a, b) = levenberg_marquardt(lambda, k, rho, a0, b0, s0);
        if s < best.0 {
            best = (s, a, b);
        }
    }
    ((best.0 / 3.0).sqrt(), best.1, best.2)
}

/// Derivative of `h^n` at `x`.
fn h_iter_derivative(lambda: C64, x: C64, n: usize) -> C64 {
    let mut d = C64::new(1.0, 0.0);
    let mut y = x;
    for _ in 0..n {
        d *= 2.0 * y;
        y = y * y + lambda;
    }
    d
}

fn levenberg_marquardt(lambda: C64, k: usize, rho: f64, mut a: C64, mut b: C64, mut s: f64) -> (f64, C64, C64) {
    let one = C64::new(1.0, 0.0);
    let mut mu = 1e-3;
    for _ in 0..200 {
        let e = line_equations(lambda, k, a, b);
        let hb = 0.5 * b;
        // rows: ∂e_i/∂α, ∂e_i/∂β
        let j = [
            [h_iter_derivative(lambda, a, k) - one, -one],
            [h_iter_derivative(lambda, a + b, k) - one, h_iter_derivative(lambda, a + b, k) - one],
            [-one, h_iter_derivative(lambda, hb * hb, k - 1) * hb - one],
        ];
        // normal equations (J^H J + μ diag) δ = -J^H e
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        let mut g = [C64::new(0.0, 0.0); 2];
        for r in 0..3 {
            for p in 0..2 {
                g[p] -= j[r][p].conj() * e[r];
                for q in 0..2 {
                    m[p][q] += j[r][p].conj() * j[r][q];
                }
            }
        }
        m[0][0] *= 1.0 + mu;
        m[1][1] *= 1.0 + mu;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.norm() == 0.0 {
            break;
        }
        let da = (g[0] * m[1][1] - m[0][1] * g[1]) / det;
        let db = (m[0][0] * g[1] - m[1][0] * g[0]) / det;
        let (na, nb) = (a + da, b + db);
        let inside = na.norm() < rho && nb.norm() < 3.0 * rho;
        let ns = line_equations(lambda, k, na, nb).iter().map(|e| e.norm_sqr()).sum::<f64>();
        if inside && ns < s {
            let done = s - ns <= 1e-14 * s;
            a = na;
            b = nb;
            s = ns;
            mu = (mu * 0.3).max(1e-12);
            if done {
                break;
            }
        } else {
            mu *= 10.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    (s, a, b)
}

/// Resolves the arithmetic: an explicit request, else extended below |λ| = 1e-3.
pub fn resolve_precision(lambda: C64, requested: Option<Precision>) -> Precision {
    requested.unwrap_or(if lambda.norm() < 1e-3 { Precision::Extended } else { Precision::Double })
}

/// No line in U = U_ρ ∩ W is fixed by g_λ.
pub fn check_fixed_line(lambda: C64, rho: f64, k: usize, precision: Option<Precision>) -> Result<LemmaReport> {
    Params::new(k, lambda, rho)?;
    let mut prec = resolve_precision(lambda, precision);
    let cases = loop {
        let cases = match prec {
            Precision::Double => case_residuals::<C64>(lambda, k, rho)?,
            Precision::Extended => case_residuals::<DdComplex>(lambda, k, rho)?,
        };
        let noisy = cases.iter().find(|c| c.2 < 10.0 * c.3);
        match (noisy, prec) {
            (None, _) => break cases,
            (Some(_), Precision::Double) => prec = Precision::Extended,
            (Some(c), Precision::Extended) => return Err(Error::PrecisionInsufficient { residual: c.2, floor: c.3 }),
        }
    };
    let threshold = fixed_line_threshold(lambda, k);
    let (sweep, sa, sb) = fixed_line_sweep(lambda, k, rho, 48);
    let mut report = LemmaReport::new("fixed_line", threshold, prec);
    for (label, alpha, res, _) in &cases {
        report.witnesses.push(format!("{label}: alpha = {alpha}, residual = {res:e}"));
        report.metric(format!("case {label}"), *res);
    }
    report.witnesses.push(format!("sweep minimum near alpha = {sa}, beta = {sb}: residual >= {sweep:e}"));
    report.metric("sweep lower bound", sweep);
    let min_case = cases.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    report.min_residual = min_case.min(sweep);
    report.passed = report.min_residual > threshold;
    report.advisory = lambda.norm() > super::VALIDITY_RADIUS;
    Ok(report)
}

/// `[1 : x : … : x : s]`, canonicalized.
fn w_point(k: usize, z: C64, w: C64, s: C64) -> ProjPoint {
    let mut v: Coords = smallvec![w; k + 1];
    v[0] = z;
    v[k] = s;
    ProjPoint::new(v).expect("nonzero")
}

/// The polynomial `P_num(z) - P_den(z)` whose roots are the solutions of
/// `P(z) = 1`, where `g_λ([z : 1 : … : 1 : t]) = [P(z) : 1 : … : 1 : Q]`.
pub fn preimage_line_poly(k: usize) -> Poly {
    let one = Poly::from_reals(&[1.0]);
    let mut v: Vec<Poly> = vec![one; k];
    v[0] = Poly::x();
    for _ in 0..k {
        let z = v[0].clone();
        let mut next = Vec::with_capacity(k);
        for vj in &v[1..k] {
            let d = &z - &(vj * C64::new(2.0, 0.0));
            next.push(&d * &d);
        }
        next.push(&z * &z);
        v = next;
    }
    (&v[0] - &v[1]).trim_relative(1e-13)
}

/// Preimages of p_λ on L other than ±t_λ, and all g_λ-preimages of q_λ,
/// lie outside U.
pub fn check_preimage_escape(lambda: C64, rho: f64, k: usize) -> Result<LemmaReport> {
    let params = Params::new(k, lambda, rho)?;
    let t = params.t_fixed();
    let mut report = LemmaReport::new("preimage_escape", 0.0, Precision::Double);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let deficit = |p: &ProjPoint| -in_trap(&params, p).1;
    let mut min_def = f64::INFINITY;

    // (a) h^k(s) = t_λ on L, excluding s = ±t_λ
    let mut excluded = [0usize; 2];
    let mut min_a = f64::INFINITY;
    for s in preimages_h(lambda, t, k) {
        if (s - t).norm() < 1e-6 * t.norm() && excluded[0] == 0 {
            excluded[0] += 1;
            continue;
        }
        if (s + t).norm() < 1e-6 * t.norm() && excluded[1] == 0 {
            excluded[1] += 1;
            continue;
        }
        let d = deficit(&w_point(k, one, one, s));
        min_a = min_a.min(d);
    }
    report.metric("min deficit (a)", min_a);
    if excluded != [1, 1] {
        report.witnesses.push(format!("expected +t and -t once each among preimages, found {excluded:?}"));
        min_def = min_def.min(-1.0);
    }
    min_def = min_def.min(min_a);

    // (b) case (i): [1 : 0 : … : 0 : s] with h^k(s) = -t_λ
    let mut min_b = f64::INFINITY;
    for s in preimages_h(lambda, -t, k) {
        min_b = min_b.min(deficit(&w_point(k, one, zero, s)));
    }
    report.metric("min deficit (b)", min_b);
    min_def = min_def.min(min_b);

    // (c) case (ii): [z : 1 : … : 1 : s] with P(z) = 1 and h^{k-1}((s^2 + λz^2)/(z-2)^2) = -t_λ
    let zs = poly_roots(&preimage_line_poly(k))?;
    let ts = preimages_h(lambda, -t, k - 1);
    let mut min_c = f64::INFINITY;
    for z in &zs {
        for tv in &ts {
            let r = (tv * (z - 2.0) * (z - 2.0) - lambda * z * z).sqrt();
            for s in [r, -r] {
                min_c = min_c.min(deficit(&w_point(k, *z, one, s)));
            }
        }
    }
    report.metric("min deficit (c)", min_c);
    report.witnesses.push(format!("{} roots of P(z) = 1: {:?}", zs.len(), zs));
    min_def = min_def.min(min_c);

    // |h^{-j}(-t_λ)| / |λ|^{1/2^j} over all branches
    let mut ratios_ok = true;
    for j in 1..=k {
        let scale = lambda.norm().powf(0.5f64.powi(j as i32));
        let r: Vec<f64> = preimages_h(lambda, -t, j).iter().map(|s| s.norm() / scale).collect();
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.iter().copied().fold(0.0, f64::max);
        report.metric(format!("ratio min j={j}"), lo);
        report.metric(format!("ratio max j={j}"), hi);
        ratios_ok &= (0.5..=2.0).contains(&lo) && (0.5..=2.0).contains(&hi);
    }
    report.min_residual = min_def;
    report.passed = min_def > 0.0 && ratios_ok;
    report.advisory = lambda.norm() > super::VALIDITY_RADIUS;
    Ok(report)
}

/// Spectrum of the chart Jacobian at p_λ: one eigenvalue `2t_λ`, the rest of
/// modulus close to 4.
pub fn check_hyperbolic_eigenvalues(lambda: C64, k: usize) -> Result<LemmaReport> {
    let params = Params::with_default_rho(k, lambda)?;
    let t2 = 2.0 * params.t_fixed();
    let jac = chart_jacobian_in(&MapKind::FLambda(params), &params.p_lambda(), Some(0), Some(0))?;
    let mut ev = jac.eigenvalues();
    ev.sort_by(|a, b| (a - t2).norm().total_cmp(&(b - t2).norm()));
    let mut report = LemmaReport::new("hyperbolic_eigenvalues", 0.0, Precision::Double);
    let stable_err = (ev[0] - t2).norm();
    let unstable_dev = ev[1..].iter().map(|e| (e.norm() - 4.0).abs()).fold(0.0, f64::max);
    report.metric("|ev - 2t|", stable_err);
    report.metric("max ||ev| - 4|", unstable_dev);
    report.metric("|2t|", t2.norm());
    report.witnesses = ev.iter().map(|e| format!("{e}")).collect();
    report.min_residual = ev.iter().map(|e| (e.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    report.passed =
        report.min_residual > 0.0 && stable_err < 1e-8 && unstable_dev < 10.0 * lambda.norm() && t2.norm() < 1.0;
    report.advisory = lambda.norm() > super::VALIDITY_RADIUS;
    Ok(report)
}

/// Case residual for β = 0 evaluated directly: `|h^{k-1}(0) - t_λ|`.
pub fn fixed_line_case_residual(lambda: C64, k: usize, precision: Precision) -> f64 {
    match precision {
        Precision::Double => {
            let t: C64 = t_fixed_in(lambda);
            (h_iter(lambda, C64::new(0.0, 0.0), k - 1) - t).norm()
        }
        Precision::Extended => {
            let t: DdComplex = t_fixed_in(lambda);
            let l = DdComplex::from_c64(lambda);
            Scalar::norm(h_iter(l, DdComplex::default(), k - 1) - t)
        }
    }
}
