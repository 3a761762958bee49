//! Finite-n evaluators for the lower and upper bounds on the number of tests.

mod counting;
mod exponent;
mod source;

use std::fmt;

use serde::Serialize;

pub use counting::{
    adaptive_lower_bound, constructive_upper_bounds, fano_lower_bound, method2_tests,
    nondisjunct_probability_bound, semiadaptive_upper_bound, FanoBound,
};
pub use exponent::{
    error_exponent, exponent_lower_estimate, ml_design_p, ml_error_bound, ml_tests_bounded_lambda,
    ml_tests_growing_lambda, mutual_info_t1, nonadaptive_ml_total_bound, ExponentPoint, MlTotalBound,
    RHO_GRID_STEPS,
};
pub use source::{huffman_expected_length, source_entropy, MAX_HUFFMAN_N};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Tests,
    Bits,
    Nats,
    Probability,
}

impl Unit {
    pub fn as_str(&self) -> &'static str {
        match self {
            Unit::Tests => "tests",
            Unit::Bits => "bits",
            Unit::Nats => "nats",
            Unit::Probability => "probability",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub unit: Unit,
    /// Regime notes and any assumption the inputs violate.
    pub assumptions: Vec<String>,
}

impl BoundReport {
    pub(crate) fn new(name: impl Into<String>, value: f64, unit: Unit) -> Self {
        Self {
            name: name.into(),
            value,
            unit,
            assumptions: Vec::new(),
        }
    }

    pub(crate) fn note(mut self, note: impl Into<String>) -> Self {
        self.assumptions.push(note.into());
        self
    }
}

pub(crate) const SPARSITY_WARNING: &str = "warning: lambda = o(n) violated (lambda >= n/2)";

/// Every bound that applies to `(λ, n)`: both counting forms at `epsilon`,
/// the constructive test counts with `v` flips, the adaptive and
/// semi-adaptive bounds, the source entropy, and the Huffman length when
/// `n ≤ MAX_HUFFMAN_N`. Bounds whose domain excludes the inputs are omitted.
pub fn bound_table(
    model: &crate::dist::TruncatedPoisson,
    regime: &crate::dist::Regime,
    v: u64,
    epsilon: f64,
) -> crate::error::Result<Vec<BoundReport>> {
    let (lambda, n) = (model.lambda(), model.n());
    let mut out = Vec::new();
    if let Ok(f) = fano_lower_bound(lambda, n, epsilon) {
        out.extend(f.into_reports());
    }
    if n >= 2 {
        out.extend(constructive_upper_bounds(model, regime, v)?);
    }
    out.extend(adaptive_lower_bound(lambda, n).ok());
    out.extend(semiadaptive_upper_bound(model.mean(), n).ok());
    out.push(source_entropy(model));
    if n <= MAX_HUFFMAN_N {
        out.push(huffman_expected_length(model)?);
    }
    Ok(out)
}
