//! Executable versions of the structural lemmas behind the nonalgebraicity
//! of K_λ, plus the polynomial and extended-precision tools they need.

pub mod dd;
mod lemmas;
pub mod poly;
mod structure;

pub use lemmas::{
    check_fixed_line, check_hyperbolic_eigenvalues, check_preimage_escape, fixed_line_case_residual, fixed_line_sweep,
    fixed_line_threshold, h_poly, line_equations, preimage_line_poly, resolve_precision,
};
pub use poly::{aberth, circle_start, poly_roots, AberthOptions, Poly};
pub use structure::{
    algebraicity_residual, containing_hyperplanes, critical_orbit_trace, hyperplane_distance, monomial_count,
    sample_m_cloud, topological_degree_check, w_chart, ComponentTrace, CriticalOrbitReport, Hyperplane, InvariantSet,
};

use serde::Serialize;

/// Reports outside `|λ| <= VALIDITY_RADIUS` are marked advisory.
pub const VALIDITY_RADIUS: f64 = 0.05;

/// Arithmetic used for lemma residuals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Precision {
    Double,
    Extended,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::Double => 53,
            Precision::Extended => 106,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" => Some(Precision::Double),
            "extended" => Some(Precision::Extended),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub passed: bool,
    pub min_residual: f64,
    pub threshold: f64,
    pub witnesses: Vec<String>,
    pub precision_bits: u32,
    /// Parameters outside the calibrated range of validity.
    pub advisory: bool,
    /// Named intermediate quantities.
    pub metrics: Vec<(String, f64)>,
}

impl LemmaReport {
    pub(crate) fn new(id: &str, threshold: f64, precision: Precision) -> Self {
        LemmaReport {
            lemma_id: id.to_string(),
            passed: false,
            min_residual: f64::NAN,
            threshold,
            witnesses: Vec::new(),
            precision_bits: precision.bits(),
            advisory: false,
            metrics: Vec::new(),
        }
    }

    pub(crate) fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.0 == name).map(|m| m.1)
    }
}
