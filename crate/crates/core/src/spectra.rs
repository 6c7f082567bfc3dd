//! Frequency-domain linear response and output covariance matrices.
//!
//! For each frequency the linearized fluctuation dynamics reduces to a
//! 2N x 2N complex linear system. Input vacuum noise and the mirror's
//! Brownian force propagate through it to the output quadratures; the
//! symmetrized, commutator-normalized second moments form the real
//! covariance matrix `V(omega)` that the entanglement and transfer layers
//! consume.
//!
//! Under symmetric driving every matrix in the chain is block-circulant
//! with equal off-diagonal blocks, so the dynamics splits into a collective
//! sector (the mode average, which couples to the mirror) and degenerate
//! relative sectors (mode differences, which reflect off an empty cavity).
//! [`covariance`] assembles `V` from the two 2x2 sector problems: besides
//! being cheaper, this keeps quantities that cancel analytically (threshold
//! identities at zero detuning, temperature-independent commutators) exact
//! to machine precision instead of losing them to cancellation between
//! large resonant matrix entries. The full-matrix operations remain the
//! reference path and the two are tested against each other.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{
    self, bath_force_commutator, bath_force_psd, bath_force_symmetric, mirror_susceptibility,
    PhysicalParams, SteadyState,
};

/// Condition-number bound beyond which a frequency is reported degenerate.
pub const CONDITION_BOUND: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("linear response singular at omega = {omega}: condition estimate {condition:.3e} exceeds {CONDITION_BOUND:.0e}")]
    DegenerateFrequency { omega: f64, condition: f64 },
    #[error("responses form no +/-omega pair: {0} vs {1}")]
    MismatchedPair(f64, f64),
    #[error("output commutator structure violated at omega = {omega}: {detail}")]
    CommutatorInconsistency { omega: f64, detail: String },
    #[error("covariance assembly at omega = {omega}: imaginary residue {residue:.3e} exceeds tolerance {tolerance:.3e}")]
    ImaginaryResidue {
        omega: f64,
        residue: f64,
        tolerance: f64,
    },
    #[error("matrix is not a symmetric-mode covariance: {0}")]
    BlockStructure(String),
    #[error(transparent)]
    Model(#[from] model::ModelError),
}

/// Per-frequency linear-response data.
#[derive(Debug, Clone)]
pub struct FrequencyResponse {
    pub omega: f64,
    /// Drift matrix M(omega), 2N x 2N.
    pub drift: DMatrix<Complex64>,
    /// L(omega) = i omega I - M(omega).
    pub l_matrix: DMatrix<Complex64>,
    pub l_inverse: DMatrix<Complex64>,
    /// K(omega) = gamma_c L^-1(omega) - I.
    pub k_matrix: DMatrix<Complex64>,
    /// Noise-coupling vector s(omega) multiplying the Brownian force.
    pub noise_coupling: DVector<Complex64>,
    /// Mechanical response chi(omega).
    pub susceptibility: Complex64,
    /// One-norm condition estimate of L.
    pub condition: f64,
}

/// Normalized symmetric covariance matrix of the output quadratures at one
/// frequency, with its block decomposition under symmetric driving.
///
/// Besides the A/C blocks, the matrix keeps its two sector blocks: the
/// collective sector A + (N-1)C (the mode average, which couples to the
/// mirror) and the relative sector A - C. Near the mechanical resonance
/// the thermal content of the collective sector dwarfs the relative one by
/// many orders of magnitude, so quantities that live in the relative
/// sector must be read from it directly instead of recombined from A and
/// C; the marker and fidelity evaluations do exactly that.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub omega: f64,
    /// 2N x 2N real symmetric matrix.
    pub v: DMatrix<f64>,
    /// Commutator scale c(omega) used for the normalization.
    pub c_omega: f64,
    /// Common diagonal 2x2 block.
    pub block_a: Matrix2<f64>,
    /// Common off-diagonal 2x2 block (absent for a single mode).
    pub block_c: Option<Matrix2<f64>>,
    /// Collective-sector block A + (N-1)C.
    pub block_collective: Matrix2<f64>,
    /// Relative-sector block A - C (absent for a single mode).
    pub block_relative: Option<Matrix2<f64>>,
}

impl CovarianceMatrix {
    pub fn n_modes(&self) -> usize {
        self.v.nrows() / 2
    }

    /// Sum and difference blocks (A + C, A - C) of any mode pair,
    /// assembled from the sector blocks without cancellation between large
    /// resonant entries.
    pub fn pair_sum_difference(&self) -> Option<(Matrix2<f64>, Matrix2<f64>)> {
        let relative = self.block_relative?;
        let n = self.n_modes() as f64;
        let plus = (self.block_collective * 2.0 + relative * (n - 2.0)) / n;
        Some((plus, relative))
    }

    /// Smallest eigenvalue of V + (i/2) Omega, where Omega is the
    /// block-diagonal symplectic form. Nonnegative (up to numerics) for a
    /// physical Gaussian state.
    ///
    /// The mode-basis rotation that diagonalizes the block structure leaves
    /// Omega invariant, so the spectrum is the union of the collective
    /// sector A + (N-1) C and the relative sector A - C, each a 2x2
    /// Hermitian problem solved in closed form. This keeps the result
    /// accurate in absolute terms even when resonant entries of V are many
    /// orders of magnitude above the uncertainty scale.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        match self.block_relative {
            None => uncertainty_block_min_eig(&self.block_collective),
            Some(relative) => uncertainty_block_min_eig(&self.block_collective)
                .min(uncertainty_block_min_eig(&relative)),
        }
    }
}

/// Smallest eigenvalue of the 2x2 Hermitian matrix V_sec + (i/2) J for one
/// real symmetric sector block. Uses lambda_min = det / lambda_max, which
/// stays accurate in absolute terms when the eigenvalues are far apart.
fn uncertainty_block_min_eig(block: &Matrix2<f64>) -> f64 {
    let a = block[(0, 0)];
    let d = block[(1, 1)];
    let off = 0.5 * (block[(0, 1)] + block[(1, 0)]);
    let z_sq = off * off + 0.25;
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + z_sq).sqrt();
    let lambda_max = mean + radius;
    if lambda_max <= 0.0 {
        return mean - radius;
    }
    (a * d - z_sq) / lambda_max
}

/// 2x2 unsymmetrized input correlation block: vacuum quadrature moments
/// <X X>, <X Y>, <Y X>, <Y Y> at (omega, -omega).
fn input_block() -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::new(0.5, 0.0),
        Complex64::new(0.0, 0.5),
        Complex64::new(0.0, -0.5),
        Complex64::new(0.5, 0.0),
    )
}

/// Diagonal 2x2 block of the drift matrix.
fn drift_diag(
    omega: f64,
    params: &PhysicalParams,
    steady: &SteadyState,
) -> (Matrix2<Complex64>, Complex64, Complex64) {
    let chi = mirror_susceptibility(omega, params);
    let beta = 2.0 * params.hbar * steady.coupling * steady.coupling * chi * steady.alpha_sq();
    let gc = params.gamma_c;
    let d = params.detuning;
    let m_d = Matrix2::new(
        Complex64::new(-0.5 * gc, 0.0),
        Complex64::new(-d * gc, 0.0),
        Complex64::new(d * gc, 0.0) + beta,
        Complex64::new(-0.5 * gc, 0.0),
    );
    (m_d, beta, chi)
}

/// Builds the full 2N x 2N response matrices at one frequency.
///
/// The drift matrix has identical diagonal blocks and identical
/// off-diagonal blocks whose only nonzero entry is the mirror-mediated
/// amplitude-to-phase coupling 2 hbar G^2 chi(omega) alpha^2.
pub fn build_drift(
    omega: f64,
    params: &PhysicalParams,
    steady: &SteadyState,
) -> Result<FrequencyResponse, SpectraError> {
    let n = params.mode_count;
    let dim = 2 * n;
    let (m_d, beta, chi) = drift_diag(omega, params, steady);

    let mut drift = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                drift.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&m_d);
            } else {
                drift[(2 * i + 1, 2 * j)] = beta;
            }
        }
    }

    let mut l_matrix = -drift.clone();
    for i in 0..dim {
        l_matrix[(i, i)] += Complex64::new(0.0, omega);
    }

    let l_inverse = l_matrix
        .clone()
        .try_inverse()
        .ok_or(SpectraError::DegenerateFrequency {
            omega,
            condition: f64::INFINITY,
        })?;
    let condition = one_norm(&l_matrix) * one_norm(&l_inverse);
    if !condition.is_finite() || condition > CONDITION_BOUND {
        return Err(SpectraError::DegenerateFrequency { omega, condition });
    }

    // The computed inverse must reproduce the identity to the accuracy the
    // conditioning permits; anything worse means the solve went bad.
    let product = &l_matrix * &l_inverse;
    let mut inversion_residual = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let expect = if i == j { 1.0 } else { 0.0 };
            inversion_residual =
                inversion_residual.max((product[(i, j)] - Complex64::new(expect, 0.0)).norm());
        }
    }
    if inversion_residual > 1e-10f64.max(1e-14 * condition) {
        return Err(SpectraError::DegenerateFrequency { omega, condition });
    }

    let mut k_matrix = &l_inverse * Complex64::new(params.gamma_c, 0.0);
    for i in 0..dim {
        k_matrix[(i, i)] -= Complex64::new(1.0, 0.0);
    }

    let mut noise_coupling = DVector::<Complex64>::zeros(dim);
    let s_y = Complex64::new(2.0f64.sqrt() * steady.coupling, 0.0)
        * chi
        * Complex64::new(-steady.alpha, 0.0);
    for i in 0..n {
        noise_coupling[2 * i + 1] = s_y;
    }

    Ok(FrequencyResponse {
        omega,
        drift,
        l_matrix,
        l_inverse,
        k_matrix,
        noise_coupling,
        susceptibility: chi,
        condition,
    })
}

/// Convenience: responses at +omega and -omega.
pub fn response_pair(
    omega: f64,
    params: &PhysicalParams,
    steady: &SteadyState,
) -> Result<(FrequencyResponse, FrequencyResponse), SpectraError> {
    Ok((
        build_drift(omega, params, steady)?,
        build_drift(-omega, params, steady)?,
    ))
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

/// Unsymmetrized output correlation matrix
/// U(omega) = <v_out(omega) v_out(-omega)^T>:
/// the reflected input-vacuum part plus the Brownian-force part.
pub fn unsymmetrized_output_correlations(
    fr_pos: &FrequencyResponse,
    fr_neg: &FrequencyResponse,
    params: &PhysicalParams,
) -> Result<DMatrix<Complex64>, SpectraError> {
    if fr_pos.omega != -fr_neg.omega {
        return Err(SpectraError::MismatchedPair(fr_pos.omega, fr_neg.omega));
    }
    let dim = fr_pos.k_matrix.nrows();

    let mut u = &fr_pos.k_matrix * input_matrix(dim) * fr_neg.k_matrix.transpose();

    let w_pos = &fr_pos.l_inverse * &fr_pos.noise_coupling;
    let w_neg = &fr_neg.l_inverse * &fr_neg.noise_coupling;
    let s_xi = bath_force_psd(fr_pos.omega, params);
    let weight = Complex64::new(params.gamma_c * s_xi, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            u[(i, j)] += weight * w_pos[i] * w_neg[j];
        }
    }
    Ok(u)
}

fn input_matrix(dim: usize) -> DMatrix<Complex64> {
    let mut n_in = DMatrix::<Complex64>::zeros(dim, dim);
    let block = input_block();
    for i in 0..dim / 2 {
        n_in.view_mut((2 * i, 2 * i), (2, 2)).copy_from(&block);
    }
    n_in
}

/// Result of the commutator analysis of a +/-omega correlation pair.
struct CommutatorCheck {
    c: f64,
    max_forbidden: f64,
    max_mode_mismatch: f64,
    scale: f64,
}

/// Antisymmetric (commutator) part of U(omega) - U(-omega)^T, with the
/// Brownian-force part assembled from its exact antisymmetric spectral
/// density so that the result carries no temperature content at all. The
/// commutator matrix must be i c(omega) times the symplectic form, with one
/// common c across modes and nothing anywhere else.
fn commutator_from_responses(
    fr_pos: &FrequencyResponse,
    fr_neg: &FrequencyResponse,
    params: &PhysicalParams,
) -> CommutatorCheck {
    let dim = fr_pos.k_matrix.nrows();
    let n = dim / 2;
    let n_in = input_matrix(dim);
    let u_pos = &fr_pos.k_matrix * &n_in * fr_neg.k_matrix.transpose();
    let u_neg = &fr_neg.k_matrix * &n_in * fr_pos.k_matrix.transpose();
    let w_pos = &fr_pos.l_inverse * &fr_pos.noise_coupling;
    let w_neg = &fr_neg.l_inverse * &fr_neg.noise_coupling;
    let s_comm = model::bath_force_commutator(fr_pos.omega, params);
    let thermal = params.gamma_c * s_comm;

    let mut anti = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let lam_ij = u_pos[(i, j)] - u_neg[(j, i)] + thermal * w_pos[i] * w_neg[j];
            let lam_ji = u_pos[(j, i)] - u_neg[(i, j)] + thermal * w_pos[j] * w_neg[i];
            anti[(i, j)] = 0.5 * (lam_ij - lam_ji).im;
        }
    }

    let per_mode: Vec<f64> = (0..n).map(|m| anti[(2 * m, 2 * m + 1)]).collect();
    let c = per_mode[0];

    let mut max_forbidden = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let canonical = i / 2 == j / 2 && i != j;
            if !canonical {
                max_forbidden = max_forbidden.max(anti[(i, j)].abs());
            }
        }
    }
    let max_mode_mismatch = per_mode
        .iter()
        .map(|cn| (cn - c).abs())
        .fold(0.0f64, f64::max);

    let thermal_scale = w_pos
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .powi(2)
        * thermal.abs();
    let scale = max_abs(&u_pos).max(max_abs(&u_neg)).max(thermal_scale);

    CommutatorCheck {
        c,
        max_forbidden,
        max_mode_mismatch,
        scale,
    }
}

/// Floating-point floor for structure checks: cancellations between entries
/// of magnitude `scale` cannot be resolved below ~eps * scale.
fn structure_tolerance(c: f64, scale: f64) -> f64 {
    (1e-9 * c.abs().max(1.0)).max(1e-13 * scale)
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0f64, f64::max)
}

/// Commutator scale c(omega) of the output quadratures, full-matrix path.
///
/// Fails if the commutator matrix is not (within tolerance) i c times the
/// symplectic form with c > 0 shared by all modes: that signals either an
/// assembly bug or an unphysical parameter regime.
pub fn commutator_scale(
    omega: f64,
    params: &PhysicalParams,
    steady: &SteadyState,
) -> Result<f64, SpectraError> {
    let (fr_pos, fr_neg) = response_pair(omega, params, steady)?;
    let check = commutator_from_responses(&fr_pos, &fr_neg, params);
    let tol = structure_tolerance(check.c, check.scale);
    if check.c <= 0.0 {
        return Err(SpectraError::CommutatorInconsistency {
            omega,
            detail: format!("nonpositive commutator scale c = {}", check.c),
        });
    }
    if check.max_forbidden > tol {
        return Err(SpectraError::CommutatorInconsistency {
            omega,
            detail: format!(
                "forbidden commutator element {:.3e} exceeds {:.3e}",
                check.max_forbidden, tol
            ),
        });
    }
    if check.max_mode_mismatch > tol {
        return Err(SpectraError::CommutatorInconsistency {
            omega,
            detail: format!(
                "per-mode commutator spread {:.3e} exceeds {:.3e}",
                check.max_mode_mismatch, tol
            ),
        });
    }
    Ok(check.c)
}

// ---------------------------------------------------------------------------
// Sector decomposition
// ---------------------------------------------------------------------------

/// Hermitian 2x2 averages (U(omega) + U(-omega))/2 of one sector, split
/// into real and imaginary parts assembled without large cancellations.
#[derive(Debug, Clone, Copy)]
struct SectorMoments {
    /// Re (U+ + U-)/2: the symmetrized correlation content.
    sym: Matrix2<f64>,
    /// Im (U+ + U-)/2: half the commutator content.
    anti: Matrix2<f64>,
}

fn invert_2x2(m: &Matrix2<Complex64>, omega: f64) -> Result<Matrix2<Complex64>, SpectraError> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let norm_m = m.iter().map(|z| z.norm()).sum::<f64>();
    if det.norm() == 0.0 {
        return Err(SpectraError::DegenerateFrequency {
            omega,
            condition: f64::INFINITY,
        });
    }
    let inv = Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det;
    let condition = norm_m * inv.iter().map(|z| z.norm()).sum::<f64>();
    if !condition.is_finite() || condition > CONDITION_BOUND {
        return Err(SpectraError::DegenerateFrequency { omega, condition });
    }
    Ok(inv)
}

/// Per-sector response at one signed frequency: K = gamma_c L_sec^-1 - I and
/// the propagated per-mode noise vector w = L_sec^-1 s2 (collective sector
/// only).
struct SectorResponse {
    k_collective: Matrix2<Complex64>,
    k_relative: Option<Matrix2<Complex64>>,
    w_collective: Vector2<Complex64>,
}

fn sector_response(
    omega: f64,
    params: &PhysicalParams,
    steady: &SteadyState,
) -> Result<SectorResponse, SpectraError> {
    let n = params.mode_count as f64;
    let (m_d, beta, chi) = drift_diag(omega, params, steady);
    let i_omega = Complex64::new(0.0, omega);
    // L blocks: D = i omega I - M_d, off-diagonal coupling -M_o.
    let mut d = -m_d;
    d[(0, 0)] += i_omega;
    d[(1, 1)] += i_omega;
    let mut o = Matrix2::<Complex64>::zeros();
    o[(1, 0)] = -beta;

    // Collective sector: D + (N-1) O; relative sectors: D - O.
    let l_coll = d + o * Complex64::new(n - 1.0, 0.0);
    let inv_coll = invert_2x2(&l_coll, omega)?;
    let gc = Complex64::new(params.gamma_c, 0.0);
    let mut k_collective = inv_coll * gc;
    k_collective[(0, 0)] -= Complex64::new(1.0, 0.0);
    k_collective[(1, 1)] -= Complex64::new(1.0, 0.0);

    let k_relative = if params.mode_count > 1 {
        let l_rel = d - o;
        let inv_rel = invert_2x2(&l_rel, omega)?;
        let mut k = inv_rel * gc;
        k[(0, 0)] -= Complex64::new(1.0, 0.0);
        k[(1, 1)] -= Complex64::new(1.0, 0.0);
        Some(k)
    } else {
        None
    };

    let s2 = Vector2::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(2.0f64.sqrt() * steady.coupling, 0.0)
            * chi
            * Complex64::new(-steady.alpha, 0.0),
    );
    let w_collective = inv_coll * s2;

    Ok(SectorResponse {
        k_collective,
        k_relative,
        w_collective,
    })
}

/// Reflected-vacuum part of (U(omega) + U(-omega))/2 for one sector.
fn vacuum_moments(k_pos: &Matrix2<Complex64>, k_neg: &Matrix2<Complex64>) -> SectorMoments {
    let n_in = input_block();
    let u_pos = k_pos * n_in * k_neg.transpose();
    let u_neg = k_neg * n_in * k_pos.transpose();
    let mut sym = Matrix2::<f64>::zeros();
    let mut anti = Matrix2::<f64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let h = 0.5 * (u_pos[(i, j)] + u_neg[(i, j)]);
            sym[(i, j)] = h.re;
            anti[(i, j)] = h.im;
        }
    }
    SectorMoments { sym, anti }
}

/// Brownian-force part of the collective-sector moments. The symmetric
/// half carries the temperature; the commutator half is assembled from the
/// analytically temperature-independent antisymmetric spectral density so
/// that c(omega) stays exactly temperature-invariant in floating point.
fn thermal_moments(
    omega: f64,
    params: &PhysicalParams,
    w_pos: &Vector2<Complex64>,
) -> SectorMoments {
    let n = params.mode_count as f64;
    let weight = n * params.gamma_c;
    let s_even = bath_force_symmetric(omega, params);
    let s_comm = bath_force_commutator(omega, params);
    let mut sym = Matrix2::<f64>::zeros();
    let mut anti = Matrix2::<f64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let z = w_pos[i] * w_pos[j].conj();
            sym[(i, j)] = weight * z.re * s_even;
            anti[(i, j)] = weight * z.im * 0.5 * s_comm;
        }
    }
    SectorMoments { sym, anti }
}

fn moments_scale(m: &SectorMoments) -> f64 {
    m.sym
        .iter()
        .chain(m.anti.iter())
        .map(|x| x.abs())
        .fold(0.0f64, f64::max)
}

/// Commutator scale and structure checks for one sector.
fn sector_commutator(
    omega: f64,
    moments: &SectorMoments,
    scale: f64,
    label: &str,
) -> Result<f64, SpectraError> {
    let c = 2.0 * moments.anti[(0, 1)];
    let tol = structure_tolerance(c, scale);
    let diag = moments.anti[(0, 0)].abs().max(moments.anti[(1, 1)].abs());
    if 2.0 * diag > tol {
        return Err(SpectraError::CommutatorInconsistency {
            omega,
            detail: format!(
                "{label} sector same-quadrature commutator {:.3e} exceeds {:.3e}",
                2.0 * diag,
                tol
            ),
        });
    }
    let skew = (moments.anti[(0, 1)] + moments.anti[(1, 0)]).abs();
    if 2.0 * skew > tol {
        return Err(SpectraError::CommutatorInconsistency {
            omega,
            detail: format!(
                "{label} sector commutator asymmetry {:.3e} exceeds {:.3e}",
                2.0 * skew,
                tol
            ),
        });
    }
    Ok(c)
}

/// Normalized symmetric covariance matrix of the output quadratures.
///
/// Propagates input vacuum and Brownian noise to the outputs at +/-omega,
/// averages the two unsymmetrized correlation matrices, normalizes by the
/// commutator scale c(omega) and returns the real symmetric result with its
/// common A (diagonal) and C (off-diagonal) blocks.
pub fn covariance(
    omega: f64,
    params: &PhysicalParams,
    steady: &SteadyState,
) -> Result<CovarianceMatrix, SpectraError> {
    let n = params.mode_count;
    let resp_pos = sector_response(omega, params, steady)?;
    let resp_neg = sector_response(-omega, params, steady)?;

    // Collective sector: reflected vacuum plus mirror noise.
    let mut coll = vacuum_moments(&resp_pos.k_collective, &resp_neg.k_collective);
    let th = thermal_moments(omega, params, &resp_pos.w_collective);
    coll.sym += th.sym;
    coll.anti += th.anti;

    // Relative sectors: reflected vacuum only.
    let rel = match (&resp_pos.k_relative, &resp_neg.k_relative) {
        (Some(kp), Some(kn)) => Some(vacuum_moments(kp, kn)),
        _ => None,
    };

    let scale = moments_scale(&coll).max(rel.as_ref().map_or(0.0, moments_scale));
    let c_coll = sector_commutator(omega, &coll, scale, "collective")?;
    let c = if let Some(rel) = &rel {
        let c_rel = sector_commutator(omega, rel, scale, "relative")?;
        let tol = structure_tolerance(c_coll, scale);
        if (c_coll - c_rel).abs() > tol {
            return Err(SpectraError::CommutatorInconsistency {
                omega,
                detail: format!(
                    "sector commutator scales disagree: {c_coll} vs {c_rel} (tol {tol:.3e})"
                ),
            });
        }
        // All per-mode commutators equal this common value.
        (c_coll + (n as f64 - 1.0) * c_rel) / n as f64
    } else {
        c_coll
    };
    if c <= 0.0 {
        return Err(SpectraError::CommutatorInconsistency {
            omega,
            detail: format!("nonpositive commutator scale c = {c}"),
        });
    }

    // Hermitian sector averages -> real symmetric sector blocks. The
    // imaginary residue of the symmetrization must be negligible.
    let residue = symmetrization_residue(&coll.anti).max(
        rel.as_ref()
            .map_or(0.0, |r| symmetrization_residue(&r.anti)),
    );
    let residue_tol = 1e-10 * scale.max(1.0);
    if residue > residue_tol {
        return Err(SpectraError::ImaginaryResidue {
            omega,
            residue,
            tolerance: residue_tol,
        });
    }

    let block_collective = symmetrize(&coll.sym) / c;
    let block_relative = rel.as_ref().map(|r| symmetrize(&r.sym) / c);

    let nf = n as f64;
    let (block_a, block_c) = match &block_relative {
        Some(relative) => (
            (block_collective + relative * (nf - 1.0)) / nf,
            Some((block_collective - relative) / nf),
        ),
        None => (block_collective, None),
    };

    let dim = 2 * n;
    let mut v = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let block = if i == j {
                &block_a
            } else {
                block_c.as_ref().unwrap()
            };
            v.view_mut((2 * i, 2 * j), (2, 2)).copy_from(block);
        }
    }

    Ok(CovarianceMatrix {
        omega,
        v,
        c_omega: c,
        block_a,
        block_c,
        block_collective,
        block_relative,
    })
}

/// Symmetric part of a real 2x2 matrix.
fn symmetrize(m: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(
        m[(0, 0)],
        0.5 * (m[(0, 1)] + m[(1, 0)]),
        0.5 * (m[(0, 1)] + m[(1, 0)]),
        m[(1, 1)],
    )
}

/// The imaginary content that survives symmetrization of a Hermitian block:
/// Im H is antisymmetric in exact arithmetic, so Im(H + H^T) measures
/// accumulated rounding.
fn symmetrization_residue(anti: &Matrix2<f64>) -> f64 {
    (anti[(0, 1)] + anti[(1, 0)])
        .abs()
        .max(anti[(0, 0)].abs())
        .max(anti[(1, 1)].abs())
}

/// Checks that a 2N x 2N real matrix has the symmetric-mode block structure
/// (equal diagonal blocks, one shared symmetric off-diagonal block, overall
/// symmetry) and returns the (A, C) pair.
pub fn symmetric_mode_blocks(
    v: &DMatrix<f64>,
) -> Result<(Matrix2<f64>, Matrix2<f64>), SpectraError> {
    let dim = v.nrows();
    if v.ncols() != dim || dim < 4 || !dim.is_multiple_of(2) {
        return Err(SpectraError::BlockStructure(format!(
            "expected a square 2N x 2N matrix with N >= 2, got {} x {}",
            v.nrows(),
            v.ncols()
        )));
    }
    let n = dim / 2;
    let scale = v.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    let tol = 1e-9 * scale.max(1.0);

    for i in 0..dim {
        for j in 0..dim {
            if (v[(i, j)] - v[(j, i)]).abs() > tol {
                return Err(SpectraError::BlockStructure(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let block = |i: usize, j: usize| {
        Matrix2::new(
            v[(2 * i, 2 * j)],
            v[(2 * i, 2 * j + 1)],
            v[(2 * i + 1, 2 * j)],
            v[(2 * i + 1, 2 * j + 1)],
        )
    };
    let a = block(0, 0);
    let c = block(0, 1);
    for i in 0..n {
        let d = block(i, i) - a;
        if d.iter().any(|x| x.abs() > tol) {
            return Err(SpectraError::BlockStructure(format!(
                "diagonal block {i} deviates from the shared A block"
            )));
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let off = if i < j { block(i, j) } else { block(j, i) };
            let d = off - c;
            if d.iter().any(|x| x.abs() > tol) {
                return Err(SpectraError::BlockStructure(format!(
                    "off-diagonal block ({i}, {j}) deviates from the shared C block"
                )));
            }
        }
    }
    Ok((a, c))
}
