//! Teleportation and telecloning fidelities over the ponderomotive channels.
//!
//! The unit-gain continuous-variable protocol transfers a Gaussian state
//! with correlation matrix D through the two-mode (or three-mode, for two
//! receivers) output channel. The fidelity collapses to a closed form in
//! the channel blocks,
//!
//!   F = 1 / sqrt(det(2D + R^T A R + R^T C + C^T R + A)),  R = diag(1, -1),
//!
//! checked here against direct 2-D quadrature of the underlying Gaussian
//! overlap integral.

use nalgebra::{DMatrix, Matrix2};
use thiserror::Error;

use crate::spectra::{self, CovarianceMatrix, SpectraError};

/// Best fidelity achievable for coherent inputs with no shared entanglement.
pub const CLASSICAL_BOUND: f64 = 0.5;

/// No-cloning ceiling for symmetric 1 -> 2 telecloning of coherent states.
pub const CLONING_BOUND: f64 = 2.0 / 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("input correlation matrix must be symmetric positive definite")]
    InvalidInput,
    #[error("channel is unphysical: fidelity quadratic form is not positive definite")]
    UnphysicalChannel,
    #[error("quadrature oracle failed to converge: {0}")]
    OracleNotConverged(String),
    #[error("covariance lacks the required block structure: {0}")]
    BlockStructure(String),
}

/// Correlation matrix of the Gaussian state to be transferred.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianInput {
    d: Matrix2<f64>,
}

impl GaussianInput {
    pub fn new(d: Matrix2<f64>) -> Result<Self, TransferError> {
        let sym = (d[(0, 1)] - d[(1, 0)]).abs()
            <= 1e-12 * d.iter().map(|x| x.abs()).fold(1.0f64, f64::max);
        let pd = d[(0, 0)] > 0.0 && d.determinant() > 0.0;
        if !sym || !pd || d.iter().any(|x| !x.is_finite()) {
            return Err(TransferError::InvalidInput);
        }
        Ok(Self { d })
    }

    /// Coherent state: D = diag(1/2, 1/2).
    pub fn coherent() -> Self {
        Self {
            d: Matrix2::identity() * 0.5,
        }
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.d
    }
}

fn r_matrix() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

/// The quadratic form 2D + R^T A R + R^T C + C^T R + A whose determinant
/// fixes the fidelity.
fn fidelity_form(a: &Matrix2<f64>, c: &Matrix2<f64>, d: &Matrix2<f64>) -> Matrix2<f64> {
    let r = r_matrix();
    d * 2.0 + r.transpose() * a * r + r.transpose() * c + c.transpose() * r + a
}

fn form_min_eigenvalue(q: &Matrix2<f64>) -> f64 {
    let half_tr = 0.5 * q.trace();
    let det = q.determinant();
    let disc = (half_tr * half_tr - det).max(0.0).sqrt();
    half_tr - disc
}

/// Teleportation fidelity of a Gaussian input over the two-mode channel
/// with blocks (A, C).
pub fn teleport_fidelity(
    a: &Matrix2<f64>,
    c: &Matrix2<f64>,
    input: &GaussianInput,
) -> Result<f64, TransferError> {
    let q = fidelity_form(a, c, &input.d);
    let q = 0.5 * (q + q.transpose());
    if form_min_eigenvalue(&q) <= 0.0 {
        return Err(TransferError::UnphysicalChannel);
    }
    Ok(1.0 / q.determinant().sqrt())
}

/// Teleportation fidelity evaluated directly on a pipeline covariance
/// matrix through its pair sum/difference blocks. For the symmetric
/// channel the quadratic form reduces to
///
///   2D + 2 diag((A+C)11, (A-C)22),
///
/// so only the collective amplitude and relative phase variances enter;
/// reading them from the sector blocks keeps the fidelity accurate where
/// resonant thermal content would cancel catastrophically in A - C.
pub fn teleport_fidelity_on(
    cov: &CovarianceMatrix,
    input: &GaussianInput,
) -> Result<f64, TransferError> {
    let (plus, minus) = cov
        .pair_sum_difference()
        .ok_or_else(|| TransferError::BlockStructure("transfer needs at least two modes".into()))?;
    let d = &input.d;
    let q = Matrix2::new(
        2.0 * d[(0, 0)] + 2.0 * plus[(0, 0)],
        2.0 * d[(0, 1)],
        2.0 * d[(0, 1)],
        2.0 * d[(1, 1)] + 2.0 * minus[(1, 1)],
    );
    if form_min_eigenvalue(&q) <= 0.0 {
        return Err(TransferError::UnphysicalChannel);
    }
    Ok(1.0 / q.determinant().sqrt())
}

/// Telecloning fidelity on a pipeline three-mode covariance; same closed
/// form as [`teleport_fidelity_on`], fed by the shared pair blocks.
pub fn teleclone_fidelity_on(
    cov: &CovarianceMatrix,
    input: &GaussianInput,
) -> Result<f64, TransferError> {
    if cov.n_modes() != 3 {
        return Err(TransferError::BlockStructure(format!(
            "telecloning needs three modes, covariance has {}",
            cov.n_modes()
        )));
    }
    teleport_fidelity_on(cov, input)
}

/// Telecloning fidelity at either receiver of the symmetric three-mode
/// channel. Tracing out the unused receiver leaves the same closed form as
/// teleportation, evaluated on the (A, C) blocks shared by every mode pair
/// of the three-mode covariance.
pub fn teleclone_fidelity(v3: &DMatrix<f64>, input: &GaussianInput) -> Result<f64, TransferError> {
    if v3.nrows() != 6 || v3.ncols() != 6 {
        return Err(TransferError::BlockStructure(format!(
            "expected a 6 x 6 covariance, got {} x {}",
            v3.nrows(),
            v3.ncols()
        )));
    }
    let (a, c) = spectra::symmetric_mode_blocks(v3).map_err(|e| match e {
        SpectraError::BlockStructure(msg) => TransferError::BlockStructure(msg),
        other => TransferError::BlockStructure(other.to_string()),
    })?;
    teleport_fidelity(&a, &c, input)
}

/// Controls for the quadrature oracle.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    /// Grid points per axis.
    pub points_per_axis: usize,
    /// Half-width of the integration square, in units of the widest
    /// standard deviation of the integrand.
    pub truncation_sigmas: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            points_per_axis: 512,
            truncation_sigmas: 8.0,
        }
    }
}

/// Direct 2-D quadrature of the fidelity integral
///
///   F = (1/4 pi) \int d^2 lambda  exp(-1/2 lambda^T D lambda)
///                 exp(-1/4 z^T V z),   z = (l1, -l2, l1, l2),
///
/// with V assembled from (A, C). Independent of the closed form; intended
/// for tests and self-checks. Doubling the truncation radius must move the
/// result by less than 1e-9, otherwise the integral is reported as
/// non-convergent.
pub fn fidelity_quadrature_oracle(
    a: &Matrix2<f64>,
    c: &Matrix2<f64>,
    input: &GaussianInput,
    spec: &QuadratureSpec,
) -> Result<f64, TransferError> {
    let d = &input.d;
    // Two-mode covariance [[A, C], [C^T, A]] applied to z by explicit loops.
    let mut v = [[0.0f64; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            v[i][j] = a[(i, j)];
            v[i + 2][j + 2] = a[(i, j)];
            v[i][j + 2] = c[(i, j)];
            v[i + 2][j] = c[(j, i)];
        }
    }
    let integrand = |l1: f64, l2: f64| -> f64 {
        let z = [l1, -l2, l1, l2];
        let mut zvz = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                zvz += z[i] * v[i][j] * z[j];
            }
        }
        let ldl = l1 * (d[(0, 0)] * l1 + d[(0, 1)] * l2) + l2 * (d[(1, 0)] * l1 + d[(1, 1)] * l2);
        (-0.5 * ldl - 0.25 * zvz).exp()
    };

    // Truncation radius from the smallest eigenvalue of the total quadratic
    // form: the integrand is exp(-1/4 lambda^T Q lambda).
    let q = fidelity_form(a, c, d);
    let q = 0.5 * (q + q.transpose());
    let lambda_min = form_min_eigenvalue(&q);
    if lambda_min <= 0.0 {
        return Err(TransferError::OracleNotConverged(
            "quadratic form is not positive definite".into(),
        ));
    }
    let sigma = (2.0 / lambda_min).sqrt();
    let radius = spec.truncation_sigmas * sigma;

    let value = trapezoid_2d(&integrand, radius, spec.points_per_axis);
    let widened = trapezoid_2d(&integrand, 2.0 * radius, 2 * spec.points_per_axis);
    if (value - widened).abs() > 1e-9 {
        return Err(TransferError::OracleNotConverged(format!(
            "radius doubling moved the integral by {:.3e}",
            (value - widened).abs()
        )));
    }
    Ok(value / (4.0 * std::f64::consts::PI))
}

fn trapezoid_2d(f: &dyn Fn(f64, f64) -> f64, radius: f64, n: usize) -> f64 {
    let h = 2.0 * radius / (n - 1) as f64;
    let mut total = 0.0;
    for i in 0..n {
        let l1 = -radius + i as f64 * h;
        let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut row = 0.0;
        for j in 0..n {
            let l2 = -radius + j as f64 * h;
            let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            row += wj * f(l1, l2);
        }
        total += wi * row;
    }
    total * h * h
}

/// Fidelities and bound comparisons at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub omega: f64,
    pub f_tele: Option<f64>,
    pub f_clone: Option<f64>,
    pub beats_classical_tele: Option<bool>,
    pub beats_classical_clone: Option<bool>,
}

impl TransferReport {
    pub fn new(omega: f64) -> Self {
        Self {
            omega,
            f_tele: None,
            f_clone: None,
            beats_classical_tele: None,
            beats_classical_clone: None,
        }
    }

    pub fn with_teleport(mut self, f: f64) -> Self {
        self.f_tele = Some(f);
        self.beats_classical_tele = Some(f > CLASSICAL_BOUND);
        self
    }

    pub fn with_teleclone(mut self, f: f64) -> Self {
        self.f_clone = Some(f);
        self.beats_classical_clone = Some(f > CLASSICAL_BOUND);
        self
    }
}
