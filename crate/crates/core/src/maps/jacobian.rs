//! Jacobians of holomorphic maps in affine charts.
//!
//! For a lift `F` and a point `v` with `v_a = 1`, the chart map from chart `a`
//! to chart `b` is `u ↦ (F_i / F_b)_{i != b}`; its derivative is
//! `(DF_{ij} F_b - F_i DF_{bj}) / F_b^2` restricted to `i != b`, `j != a`.

use nalgebra::DMatrix;
use smallvec::smallvec;

use super::HomogeneousMap;
use crate::error::{Error, Result};
use crate::projective::{max_modulus_index, normalize_in_place, Coords, ProjPoint, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct ChartJacobian {
    pub base_chart: usize,
    pub image_chart: usize,
    /// Chart dimension m.
    pub dim: usize,
    /// Row-major `m x m`.
    pub matrix: Vec<C64>,
}

impl ChartJacobian {
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix[i * self.dim + j]
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        let m = self.to_dmatrix();
        let schur = m.schur();
        let (_, t) = schur.unpack();
        (0..self.dim).map(|i| t[(i, i)]).collect()
    }
}

/// Jacobian at `p` with input chart = max-modulus coordinate of `p` and
/// output chart = max-modulus coordinate of the image.
pub fn chart_jacobian<M: HomogeneousMap + ?Sized>(map: &M, p: &ProjPoint) -> Result<ChartJacobian> {
    chart_jacobian_in(map, p, None, None)
}

/// As [`chart_jacobian`] with explicit chart choices.
pub fn chart_jacobian_in<M: HomogeneousMap + ?Sized>(
    map: &M,
    p: &ProjPoint,
    base_chart: Option<usize>,
    image_chart: Option<usize>,
) -> Result<ChartJacobian> {
    let m = map.dim();
    if p.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: p.dim() });
    }
    let a = base_chart.unwrap_or_else(|| p.max_index());
    let pa = p.coord(a);
    if pa.norm() < 1e-300 {
        return Err(Error::ChartSingular { chart: a });
    }
    let v: Coords = p.coords().iter().map(|c| c / pa).collect();
    let mut f: Coords = smallvec![C64::new(0.0, 0.0); m + 1];
    map.lift(&v, &mut f);
    let b = image_chart.unwrap_or_else(|| max_modulus_index(&f).0);
    Ok(jacobian_from_lift(map, &v, &f, a, b)?.1)
}

fn jacobian_from_lift<M: HomogeneousMap + ?Sized>(
    map: &M,
    v: &[C64],
    f: &[C64],
    a: usize,
    b: usize,
) -> Result<((), ChartJacobian)> {
    let n = v.len();
    let m = n - 1;
    let fb = f[b];
    let scale = f.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(fb.norm() > 1e-14 * scale && fb.norm() > 1e-300) {
        return Err(Error::ChartSingular { chart: b });
    }
    let mut df = vec![C64::new(0.0, 0.0); n * n];
    map.lift_jacobian(v, &mut df);
    let inv2 = (fb * fb).inv();
    let mut matrix = Vec::with_capacity(m * m);
    for i in (0..n).filter(|&i| i != b) {
        for j in (0..n).filter(|&j| j != a) {
            matrix.push((df[i * n + j] * fb - f[i] * df[b * n + j]) * inv2);
        }
    }
    Ok(((), ChartJacobian { base_chart: a, image_chart: b, dim: m, matrix }))
}

/// Image of `p` together with the chart Jacobian whose output chart is the
/// max-modulus coordinate of that same image, so consecutive steps chain
/// without chart transitions.
pub fn step_with_jacobian<M: HomogeneousMap + ?Sized>(map: &M, p: &ProjPoint) -> Result<(ProjPoint, ChartJacobian)> {
    let m = map.dim();
    let a = p.max_index();
    let v: Coords = p.coords().iter().map(|c| c / p.coord(a)).collect();
    let mut f: Coords = smallvec![C64::new(0.0, 0.0); m + 1];
    map.lift(&v, &mut f);
    let (b, _) = max_modulus_index(&f);
    let ((), jac) = jacobian_from_lift(map, &v, &f, a, b)?;
    normalize_in_place(&mut f).map_err(|_| Error::IndeterminacyHit)?;
    Ok((ProjPoint::from_normalized(f), jac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{MapKind, Params};
    use crate::rng::substream;
    use rand::Rng;

    fn params(k: usize) -> Params {
        Params::with_default_rho(k, C64::new(0.01, 0.0)).unwrap()
    }

    /// Central finite differences of the chart map, step `h`.
    fn finite_difference(map: &MapKind, p: &ProjPoint, a: usize, b: usize, h: f64) -> Vec<C64> {
        let chart = p.to_chart(a).unwrap();
        let m = chart.values.len();
        let eval = |u: &[C64]| {
            let mut cc = chart.clone();
            cc.values = u.to_vec();
            let x = ProjPoint::from_chart(&cc).unwrap();
            map.apply(&x).unwrap().to_chart(b).unwrap().values
        };
        let mut out = vec![C64::new(0.0, 0.0); m * m];
        for j in 0..m {
            let mut up = chart.values.clone();
            let mut dn = chart.values.clone();
            up[j] += h;
            dn[j] -= h;
            let (fu, fd) = (eval(&up), eval(&dn));
            for i in 0..m {
                out[i * m + j] = (fu[i] - fd[i]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn fixed_point_jacobian_k2_in_w_chart() {
        let p = params(2);
        let t = p.t_fixed();
        let jac = chart_jacobian_in(&MapKind::FLambda(p), &p.p_lambda(), Some(1), Some(1)).unwrap();
        let expect = [C64::new(-4.0, 0.0), C64::new(0.0, 0.0), -2.0 * t * t, 2.0 * t];
        for (a, b) in jac.matrix.iter().zip(expect) {
            assert!((a - b).norm() < 1e-14, "{a} vs {b}");
        }
        let mut ev = jac.eigenvalues();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] + 4.0).norm() < 1e-12);
        assert!((ev[1] - 2.0 * t).norm() < 1e-14);
    }

    #[test]
    fn quadratic_derivative_at_fixed_point() {
        let l = C64::new(0.01, 0.0);
        let t = crate::maps::t_fixed(l);
        let x = ProjPoint::new([t, C64::new(1.0, 0.0)]).unwrap();
        let jac = chart_jacobian_in(&MapKind::Quadratic { lambda: l }, &x, Some(1), Some(1)).unwrap();
        assert!((jac.get(0, 0) - 2.0 * t).norm() < 1e-15);
    }

    #[test]
    fn agrees_with_finite_differences() {
        let mut rng = substream(21, 0);
        for k in [2usize, 3] {
            let p = params(k);
            let map = MapKind::FLambda(p);
            for _ in 0..100 {
                let mut v: Vec<C64> =
                    (0..k).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                v.push(C64::from_polar(rng.gen_range(0.0..0.9) * p.rho, rng.gen_range(0.0..6.3)));
                let x = ProjPoint::new(v).unwrap();
                let jac = chart_jacobian(&map, &x).unwrap();
                let fd = finite_difference(&map, &x, jac.base_chart, jac.image_chart, 1e-6);
                let scale = jac.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max);
                for (a, b) in jac.matrix.iter().zip(&fd) {
                    assert!((a - b).norm() <= 1e-6 * scale.max(1.0), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn step_is_consistent_with_apply() {
        let p = params(3);
        let map = MapKind::FLambda(p);
        let x = ProjPoint::from_reals(&[0.3, 1.0, -0.4, 0.01]).unwrap();
        let (img, jac) = step_with_jacobian(&map, &x).unwrap();
        assert_eq!(img, map.apply(&x).unwrap());
        assert_eq!(jac.image_chart, img.max_index());
        assert_eq!(jac, chart_jacobian(&map, &x).unwrap());
    }

    #[test]
    fn singular_output_chart() {
        let map = MapKind::Base { k: 2 };
        let x = ProjPoint::from_reals(&[0.0, 1.0]).unwrap();
        // image [4 : 0] has vanishing second coordinate
        assert_eq!(chart_jacobian_in(&map, &x, None, Some(1)), Err(Error::ChartSingular { chart: 1 }));
    }
}
