//! Bipartite entanglement markers and the tripartite inseparability verdict.
//!
//! All three criteria act on the 2x2 blocks (A, C) of a symmetric two-mode
//! covariance matrix and share the same classical threshold: a marker below
//! one certifies entanglement. On vacuum blocks (A = I/2, C = 0) each marker
//! equals one exactly.

use nalgebra::{DMatrix, Matrix2};
use thiserror::Error;

use crate::spectra::{self, CovarianceMatrix, SpectraError};

/// Classical threshold shared by all three markers.
pub const THRESHOLD: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error("A block is not symmetric: |A12 - A21| = {0:.3e}")]
    NonSymmetricBlock(f64),
    #[error("marker evaluated to a non-finite value")]
    NonFiniteMarker,
    #[error("covariance lacks the required block structure: {0}")]
    BlockStructure(String),
    #[error("operation requires {expected} modes, covariance has {actual}")]
    WrongModeCount { expected: usize, actual: usize },
}

/// Which bipartite criterion to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Criterion {
    Simon,
    Product,
    Sum,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Simon, Criterion::Product, Criterion::Sum];

    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::Simon => "simon",
            Criterion::Product => "product",
            Criterion::Sum => "sum",
        }
    }

    pub fn evaluate(&self, a: &Matrix2<f64>, c: &Matrix2<f64>) -> Result<f64, EntanglementError> {
        match self {
            Criterion::Simon => simon_marker(a, c),
            Criterion::Product => product_marker(a, c),
            Criterion::Sum => sum_marker(a, c),
        }
    }

    /// Evaluates the marker on a pipeline covariance matrix through its
    /// sum/difference pair blocks. Near the mechanical resonance the
    /// common thermal content of A and C exceeds their difference by up to
    /// thirteen orders of magnitude; reading the difference from the
    /// relative sector keeps the markers accurate (and, at zero detuning,
    /// bitwise temperature-independent) where the A/C recombination would
    /// be pure cancellation noise.
    pub fn evaluate_on(&self, cov: &CovarianceMatrix) -> Result<f64, EntanglementError> {
        let (plus, minus) = cov
            .pair_sum_difference()
            .ok_or(EntanglementError::WrongModeCount {
                expected: 2,
                actual: cov.n_modes(),
            })?;
        let e = match self {
            // tr A + tr(C R) telescopes to the sum of the collective
            // amplitude and relative phase variances.
            Criterion::Sum => plus[(0, 0)] + minus[(1, 1)],
            // 4 (A11 + C11)(A22 - C22) in pair-block form.
            Criterion::Product => 4.0 * plus[(0, 0)] * minus[(1, 1)],
            Criterion::Simon => {
                let d_plus = plus.determinant();
                let d_minus = minus.determinant();
                let a = (plus + minus) * 0.5;
                let c = (plus - minus) * 0.5;
                simon_reduced(d_plus, d_minus, a.determinant(), c.determinant())
            }
        };
        finite(e)
    }
}

/// Simon marker in determinant form. For symmetric blocks the trace term
/// satisfies tr{A J C J A J C^T J} = m^2 - 2 det A det C with
/// m = det(A+C) - det A - det C, which collapses the marker to
///
///   E = 1 + 1/16 + det(A+C) det(A-C) - |det C|/2 - det A / 2,
///
/// a form with no cancellation between the quartic invariants.
fn simon_reduced(d_plus: f64, d_minus: f64, det_a: f64, det_c: f64) -> f64 {
    1.0 + 1.0 / 16.0 + d_plus * d_minus - 0.5 * det_c.abs() - 0.5 * det_a
}

fn j_matrix() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

fn r_matrix() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

fn check_blocks(a: &Matrix2<f64>, c: &Matrix2<f64>) -> Result<(), EntanglementError> {
    let scale = a
        .iter()
        .chain(c.iter())
        .map(|x| x.abs())
        .fold(1.0f64, f64::max);
    let asym = (a[(0, 1)] - a[(1, 0)]).abs();
    if asym > 1e-9 * scale {
        return Err(EntanglementError::NonSymmetricBlock(asym));
    }
    Ok(())
}

fn finite(e: f64) -> Result<f64, EntanglementError> {
    if e.is_finite() {
        Ok(e)
    } else {
        Err(EntanglementError::NonFiniteMarker)
    }
}

/// Simon marker, necessary and sufficient for two-mode Gaussian states with
/// equal diagonal blocks:
///
///   E = 1 + (det A)^2 + (1/4 - |det C|)^2 - tr{A J C J A J C^T J} - det A / 2.
pub fn simon_marker(a: &Matrix2<f64>, c: &Matrix2<f64>) -> Result<f64, EntanglementError> {
    check_blocks(a, c)?;
    let j = j_matrix();
    let det_a = a.determinant();
    let det_c = c.determinant();
    let trace_term = (a * j * c * j * a * j * c.transpose() * j).trace();
    finite(1.0 + det_a * det_a + (0.25 - det_c.abs()).powi(2) - trace_term - 0.5 * det_a)
}

/// Product criterion: E = 4 (A11 + C11)(A22 - C22).
pub fn product_marker(a: &Matrix2<f64>, c: &Matrix2<f64>) -> Result<f64, EntanglementError> {
    check_blocks(a, c)?;
    finite(4.0 * (a[(0, 0)] + c[(0, 0)]) * (a[(1, 1)] - c[(1, 1)]))
}

/// Sum criterion: E = tr A + tr(C R).
pub fn sum_marker(a: &Matrix2<f64>, c: &Matrix2<f64>) -> Result<f64, EntanglementError> {
    check_blocks(a, c)?;
    finite(a.trace() + (c * r_matrix()).trace())
}

/// Tripartite full-inseparability verdict on a 6x6 symmetric-mode
/// covariance matrix, using the given bipartite criterion on one mode pair.
/// The block symmetry extends a positive pairwise verdict to every grouping
/// of the three parties.
pub fn tripartite_verdict_with(
    v3: &DMatrix<f64>,
    criterion: Criterion,
) -> Result<bool, EntanglementError> {
    if v3.nrows() != 6 || v3.ncols() != 6 {
        return Err(EntanglementError::WrongModeCount {
            expected: 3,
            actual: v3.nrows() / 2,
        });
    }
    let (a, c) = spectra::symmetric_mode_blocks(v3).map_err(|e| match e {
        SpectraError::BlockStructure(msg) => EntanglementError::BlockStructure(msg),
        other => EntanglementError::BlockStructure(other.to_string()),
    })?;
    Ok(criterion.evaluate(&a, &c)? < THRESHOLD)
}

/// Tripartite verdict with the default (sum) criterion.
pub fn tripartite_verdict(v3: &DMatrix<f64>) -> Result<bool, EntanglementError> {
    tripartite_verdict_with(v3, Criterion::Sum)
}

/// Tripartite verdict evaluated directly on a pipeline covariance matrix,
/// using the numerically stable sector path for the pairwise marker.
pub fn tripartite_verdict_on(
    cov: &CovarianceMatrix,
    criterion: Criterion,
) -> Result<bool, EntanglementError> {
    if cov.n_modes() != 3 {
        return Err(EntanglementError::WrongModeCount {
            expected: 3,
            actual: cov.n_modes(),
        });
    }
    Ok(criterion.evaluate_on(cov)? < THRESHOLD)
}

/// Entanglement markers evaluated on one covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementReport {
    pub omega: f64,
    pub e_simon: Option<f64>,
    pub e_product: Option<f64>,
    pub e_sum: Option<f64>,
    pub entangled_simon: Option<bool>,
    pub entangled_product: Option<bool>,
    pub entangled_sum: Option<bool>,
    /// Only present for three-mode covariances.
    pub tripartite_fully_inseparable: Option<bool>,
}

impl EntanglementReport {
    /// Evaluates the requested criteria on the (A, C) blocks of `cov`.
    /// For a three-mode covariance the tripartite verdict (default
    /// criterion) is attached as well.
    pub fn evaluate(
        cov: &CovarianceMatrix,
        criteria: &[Criterion],
    ) -> Result<Self, EntanglementError> {
        let mut report = EntanglementReport {
            omega: cov.omega,
            e_simon: None,
            e_product: None,
            e_sum: None,
            entangled_simon: None,
            entangled_product: None,
            entangled_sum: None,
            tripartite_fully_inseparable: None,
        };
        for criterion in criteria {
            let e = criterion.evaluate_on(cov)?;
            let flag = e < THRESHOLD;
            match criterion {
                Criterion::Simon => {
                    report.e_simon = Some(e);
                    report.entangled_simon = Some(flag);
                }
                Criterion::Product => {
                    report.e_product = Some(e);
                    report.entangled_product = Some(flag);
                }
                Criterion::Sum => {
                    report.e_sum = Some(e);
                    report.entangled_sum = Some(flag);
                }
            }
        }
        if cov.n_modes() == 3 && !criteria.is_empty() {
            report.tripartite_fully_inseparable = Some(tripartite_verdict_on(cov, Criterion::Sum)?);
        }
        Ok(report)
    }
}
