//! Ponderomotive cavity output-field toolbox.
//!
//! A driven optical cavity with a movable end mirror correlates its output
//! modes through radiation pressure. This crate computes, from the physical
//! parameters of such a system, the frequency-resolved covariance matrix of
//! the output quadratures, evaluates Gaussian entanglement criteria on it,
//! and predicts teleportation / telecloning fidelities over the resulting
//! two- and three-mode channels.

pub mod constants;
pub mod entanglement;
pub mod model;
pub mod spectra;
pub mod transfer;

pub use entanglement::EntanglementReport;
pub use model::{PhysicalParams, SteadyState};
pub use spectra::{CovarianceMatrix, FrequencyResponse};
pub use transfer::{GaussianInput, TransferReport};
