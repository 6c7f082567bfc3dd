//! Built-in invariant suite behind `pondera check`: fast self-diagnostics
//! that exercise the vacuum identities, the fidelity oracle and the
//! commutator consistency on the reference parameters.

use pondera_core::entanglement::{product_marker, simon_marker, sum_marker};
use pondera_core::model::{steady_state_from_detuning, PhysicalParams};
use pondera_core::spectra::{commutator_scale, covariance};
use pondera_core::transfer::{
    fidelity_quadrature_oracle, teleport_fidelity, GaussianInput, QuadratureSpec,
};

pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn report(name: &'static str, result: Result<String, String>) -> CheckReport {
    match result {
        Ok(detail) => CheckReport {
            name,
            passed: true,
            detail,
        },
        Err(detail) => CheckReport {
            name,
            passed: false,
            detail,
        },
    }
}

fn vacuum_identities() -> Result<String, String> {
    let mut params = PhysicalParams::reference(2, 0.3, 150.0);
    params.input_power = 0.0;
    let steady = steady_state_from_detuning(&params).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 1..=25 {
        let omega = k as f64 * 1e5;
        let cov = covariance(omega, &params, &steady).map_err(|e| e.to_string())?;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 0.5 } else { 0.0 };
                worst = worst.max((cov.v[(i, j)] - expect).abs());
            }
        }
        let a = cov.block_a;
        let c = cov.block_c.unwrap();
        for marker in [
            simon_marker(&a, &c),
            product_marker(&a, &c),
            sum_marker(&a, &c),
        ] {
            worst = worst.max((marker.map_err(|e| e.to_string())? - 1.0).abs());
        }
        let f = teleport_fidelity(&a, &c, &GaussianInput::coherent()).map_err(|e| e.to_string())?;
        worst = worst.max((f - 0.5).abs());
    }
    if worst < 1e-9 {
        Ok(format!("worst vacuum deviation {worst:.2e}"))
    } else {
        Err(format!("vacuum deviation {worst:.2e} exceeds 1e-9"))
    }
}

fn oracle_agreement() -> Result<String, String> {
    let params = PhysicalParams::reference(2, 0.1, 10.0);
    let steady = steady_state_from_detuning(&params).map_err(|e| e.to_string())?;
    let spec = QuadratureSpec::default();
    let input = GaussianInput::coherent();
    let mut worst: f64 = 0.0;
    for omega in [3e5, 9e5, 1.8e6] {
        let cov = covariance(omega, &params, &steady).map_err(|e| e.to_string())?;
        let a = cov.block_a;
        let c = cov.block_c.unwrap();
        let closed = teleport_fidelity(&a, &c, &input).map_err(|e| e.to_string())?;
        let oracle =
            fidelity_quadrature_oracle(&a, &c, &input, &spec).map_err(|e| e.to_string())?;
        worst = worst.max((closed - oracle).abs());
    }
    if worst < 1e-6 {
        Ok(format!("worst closed-form/quadrature gap {worst:.2e}"))
    } else {
        Err(format!(
            "closed-form/quadrature gap {worst:.2e} exceeds 1e-6"
        ))
    }
}

fn commutator_consistency() -> Result<String, String> {
    let params = PhysicalParams::reference(2, 0.1, 0.0);
    let steady = steady_state_from_detuning(&params).map_err(|e| e.to_string())?;
    let mut hot = params.clone();
    hot.temperature = 300.0;
    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let omega = k as f64 * 4e4;
        let c_cold = commutator_scale(omega, &params, &steady).map_err(|e| e.to_string())?;
        let c_hot = commutator_scale(omega, &hot, &steady).map_err(|e| e.to_string())?;
        if c_cold <= 0.0 {
            return Err(format!("nonpositive commutator scale at omega = {omega}"));
        }
        worst = worst.max((c_cold - c_hot).abs() / c_cold.abs());
    }
    if worst < 1e-9 {
        Ok(format!("worst temperature drift {worst:.2e}"))
    } else {
        Err(format!(
            "commutator temperature drift {worst:.2e} exceeds 1e-9"
        ))
    }
}

fn physicality() -> Result<String, String> {
    let mut worst = f64::INFINITY;
    for (n, delta) in [(2usize, 0.0), (2, 0.1), (3, 0.1)] {
        for temp in [0.0, 100.0] {
            let params = PhysicalParams::reference(n, delta, temp);
            let steady = steady_state_from_detuning(&params).map_err(|e| e.to_string())?;
            for k in 1..=40 {
                let omega = k as f64 * 5e4;
                let cov = covariance(omega, &params, &steady).map_err(|e| e.to_string())?;
                worst = worst.min(cov.uncertainty_min_eigenvalue());
            }
        }
    }
    if worst >= -1e-9 {
        Ok(format!("min eigenvalue of V + (i/2)Omega is {worst:.2e}"))
    } else {
        Err(format!(
            "uncertainty relation violated: min eigenvalue {worst:.2e}"
        ))
    }
}

/// Runs the whole suite, returning one report per check.
pub fn run_all() -> Vec<CheckReport> {
    vec![
        report("vacuum-identities", vacuum_identities()),
        report("fidelity-oracle-agreement", oracle_agreement()),
        report("commutator-consistency", commutator_consistency()),
        report("physicality", physicality()),
    ]
}
