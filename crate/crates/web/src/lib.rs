//! WebAssembly bindings for the static demo page in `www/`.

use wasm_bindgen::prelude::*;

use pkattract::ergodic::{lyapunov_exponents, LyapunovOptions};
use pkattract::green::sample_mu_lambda;
use pkattract::io::{histogram, HistogramSpec};
use pkattract::verify::{check_fixed_line, check_hyperbolic_eigenvalues, check_preimage_escape};
use pkattract::{MapKind, Params, C64};

fn params(k: usize, re: f64, im: f64) -> Result<Params, JsError> {
    Params::with_default_rho(k, C64::new(re, im)).map_err(|e| JsError::new(&e.to_string()))
}

/// Samples μ_λ (k = 2) and returns the `(Re u, Re s)` density image as
/// `width * height` gray levels, row-major with the top row first.
#[wasm_bindgen]
pub fn render_slice(
    lambda_re: f64,
    lambda_im: f64,
    samples: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Vec<u8>, JsError> {
    let p = params(2, lambda_re, lambda_im)?;
    let cloud = sample_mu_lambda(&p, 40, samples.max(1), seed);
    let mut spec = HistogramSpec::attractor_slice(width, height);
    // the fiber coordinate scales like λ
    let l = p.lambda.norm();
    spec.y.min = -2.0 * l;
    spec.y.max = 4.0 * l;
    let hist = histogram(&cloud, &spec).map_err(|e| JsError::new(&e.to_string()))?;
    let top = hist.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    Ok(hist.counts.iter().map(|&c| (255.0 * (c as f64).ln_1p() / top.ln_1p()).round() as u8).collect())
}

/// Lyapunov spectrum of f_λ on P^k followed by the standard errors.
#[wasm_bindgen]
pub fn lyapunov(
    k: usize,
    lambda_re: f64,
    lambda_im: f64,
    orbits: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let p = params(k, lambda_re, lambda_im)?;
    let starts = sample_mu_lambda(&p, 40, orbits.max(2), seed);
    let r = lyapunov_exponents(&MapKind::FLambda(p), starts.points(), length, &LyapunovOptions::default())
        .map_err(|e| JsError::new(&e.to_string()))?;
    Ok(r.exponents.into_iter().chain(r.standard_errors).collect())
}

/// One line per lemma checker: `id passed residual threshold`.
#[wasm_bindgen]
pub fn verify(k: usize, lambda_re: f64, lambda_im: f64) -> Result<String, JsError> {
    let p = params(k, lambda_re, lambda_im)?;
    let err = |e: pkattract::Error| JsError::new(&e.to_string());
    let reports = [
        check_fixed_line(p.lambda, p.rho, k, None).map_err(err)?,
        check_preimage_escape(p.lambda, p.rho, k).map_err(err)?,
        check_hyperbolic_eigenvalues(p.lambda, k).map_err(err)?,
    ];
    Ok(reports
        .iter()
        .map(|r| {
            let flag = if r.advisory { " (outside calibrated range)" } else { "" };
            format!(
                "{:<24}{:<6} residual {:.3e}  threshold {:.3e}{flag}",
                r.lemma_id,
                if r.passed { "pass" } else { "FAIL" },
                r.min_residual,
                r.threshold
            )
        })
        .collect::<Vec<_>>()
        .join("\n"))
}
