//! Deterministic frequency/temperature sweep over the covariance pipeline.
//!
//! Every (omega, T) point is an independent pure computation; workers pull
//! point indices from a shared counter and write into a preallocated slot
//! table, so the output is identical for any worker count. Per-point
//! failures land in the row's error column and the sweep carries on.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use pondera_core::entanglement::{tripartite_verdict_on, Criterion};
use pondera_core::model::{steady_state_from_detuning, SteadyState};
use pondera_core::spectra::covariance;
use pondera_core::transfer::{teleclone_fidelity_on, teleport_fidelity_on, CLASSICAL_BOUND};

use crate::config::{SweepConfig, TransferKind};

/// One output row of the sweep, ordered omega-major then temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub omega: f64,
    pub temperature: f64,
    pub e_simon: Option<f64>,
    pub e_product: Option<f64>,
    pub e_sum: Option<f64>,
    pub tripartite_fully_inseparable: Option<bool>,
    pub f_tele: Option<f64>,
    pub beats_classical_tele: Option<bool>,
    pub f_clone: Option<f64>,
    pub beats_classical_clone: Option<bool>,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(omega: f64, temperature: f64, error: String) -> Self {
        SweepRow {
            omega,
            temperature,
            e_simon: None,
            e_product: None,
            e_sum: None,
            tripartite_fully_inseparable: None,
            f_tele: None,
            beats_classical_tele: None,
            f_clone: None,
            beats_classical_clone: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Column names in emission order.
    pub columns: Vec<&'static str>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn errored_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Column layout implied by the configuration.
pub fn columns_for(config: &SweepConfig) -> Vec<&'static str> {
    let mut cols = vec!["omega", "T"];
    for criterion in &config.criteria {
        cols.push(match criterion {
            Criterion::Simon => "E_simon",
            Criterion::Product => "E_product",
            Criterion::Sum => "E_sum",
        });
    }
    if config.params.mode_count == 3 && !config.criteria.is_empty() {
        cols.push("tripartite_fully_inseparable");
    }
    if config.transfer.contains(&TransferKind::Teleport) {
        cols.push("F_tele");
        cols.push("beats_classical_tele");
    }
    if config.transfer.contains(&TransferKind::Teleclone) {
        cols.push("F_clone");
        cols.push("beats_classical_clone");
    }
    cols.push("error");
    cols
}

fn evaluate_point(
    config: &SweepConfig,
    steady: &SteadyState,
    omega: f64,
    temperature: f64,
) -> SweepRow {
    let mut params = config.params.clone();
    params.temperature = temperature;

    let cov = match covariance(omega, &params, steady) {
        Ok(c) => c,
        Err(e) => return SweepRow::failed(omega, temperature, e.to_string()),
    };

    let mut row = SweepRow {
        omega,
        temperature,
        e_simon: None,
        e_product: None,
        e_sum: None,
        tripartite_fully_inseparable: None,
        f_tele: None,
        beats_classical_tele: None,
        f_clone: None,
        beats_classical_clone: None,
        error: None,
    };

    for criterion in &config.criteria {
        match criterion.evaluate_on(&cov) {
            Ok(value) => match criterion {
                Criterion::Simon => row.e_simon = Some(value),
                Criterion::Product => row.e_product = Some(value),
                Criterion::Sum => row.e_sum = Some(value),
            },
            Err(e) => return SweepRow::failed(omega, temperature, e.to_string()),
        }
    }
    if !config.criteria.is_empty() && config.params.mode_count == 3 {
        match tripartite_verdict_on(&cov, config.tripartite_criterion) {
            Ok(v) => row.tripartite_fully_inseparable = Some(v),
            Err(e) => return SweepRow::failed(omega, temperature, e.to_string()),
        }
    }

    for kind in &config.transfer {
        match kind {
            TransferKind::Teleport => match teleport_fidelity_on(&cov, &config.input_state) {
                Ok(f) => {
                    row.f_tele = Some(f);
                    row.beats_classical_tele = Some(f > CLASSICAL_BOUND);
                }
                Err(e) => return SweepRow::failed(omega, temperature, e.to_string()),
            },
            TransferKind::Teleclone => match teleclone_fidelity_on(&cov, &config.input_state) {
                Ok(f) => {
                    row.f_clone = Some(f);
                    row.beats_classical_clone = Some(f > CLASSICAL_BOUND);
                }
                Err(e) => return SweepRow::failed(omega, temperature, e.to_string()),
            },
        }
    }

    row
}

/// Runs the sweep on `threads` workers. The row order (omega-major,
/// temperature-minor) and every computed byte are independent of the
/// worker count.
pub fn run_sweep(config: &SweepConfig, threads: usize) -> Result<SweepResult, String> {
    let steady = steady_state_from_detuning(&config.params).map_err(|e| e.to_string())?;

    let points: Vec<(f64, f64)> = config
        .omega_grid
        .iter()
        .flat_map(|&omega| config.temperatures.iter().map(move |&t| (omega, t)))
        .collect();

    let total = points.len();
    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; total]);
    let cursor = AtomicUsize::new(0);
    let workers = threads.max(1).min(total.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = cursor.fetch_add(1, Ordering::Relaxed);
                if idx >= total {
                    break;
                }
                let (omega, temperature) = points[idx];
                let row = evaluate_point(config, &steady, omega, temperature);
                slots.lock().unwrap()[idx] = Some(row);
            });
        }
    });

    let rows = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every sweep slot is filled"))
        .collect();

    Ok(SweepResult {
        columns: columns_for(config),
        rows,
    })
}
