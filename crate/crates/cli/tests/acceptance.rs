//! Acceptance suite: one test per criterion, each printing a PASS line on
//! success (run with `--nocapture` to see them) and failing loudly
//! otherwise. Tolerances are pinned in the assertions.

use std::time::Instant;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};

use pondera_cli::config::{parse_config, Preset, SweepConfig};
use pondera_cli::output::write_csv;
use pondera_cli::sweep::{run_sweep, SweepResult};
use pondera_core::entanglement::{product_marker, simon_marker, sum_marker, THRESHOLD};
use pondera_core::model::{
    derive_coupling, input_amplitude_sq, solve_bistability, steady_state_from_detuning,
    PhysicalParams,
};
use pondera_core::spectra::{commutator_scale, covariance};
use pondera_core::transfer::{
    fidelity_quadrature_oracle, teleclone_fidelity, teleport_fidelity, GaussianInput,
    QuadratureSpec, CLONING_BOUND,
};

fn preset_config(preset: Preset) -> SweepConfig {
    parse_config(&format!("preset = {}\n", preset.name())).unwrap()
}

fn preset_sweep(preset: Preset) -> SweepResult {
    run_sweep(&preset_config(preset), 4).unwrap()
}

#[test]
fn criterion_01_vacuum_identities() {
    let start = Instant::now();
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xacce_0001);
    let coherent = GaussianInput::coherent();
    for _ in 0..100 {
        let omega = rng.gen_range(1e2..3e6);
        let temp = rng.gen_range(0.0..300.0);
        let delta = rng.gen_range(-1.0..1.0);

        let mut params = PhysicalParams::reference(2, delta, temp);
        params.input_power = 0.0;
        let steady = steady_state_from_detuning(&params).unwrap();
        let cov = covariance(omega, &params, &steady).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!(
                    (cov.v[(i, j)] - expect).abs() < 1e-9,
                    "V deviates from vacuum at ({i},{j})"
                );
            }
        }
        let a = cov.block_a;
        let c = cov.block_c.unwrap();
        assert!((simon_marker(&a, &c).unwrap() - 1.0).abs() < 1e-9);
        assert!((product_marker(&a, &c).unwrap() - 1.0).abs() < 1e-9);
        assert!((sum_marker(&a, &c).unwrap() - 1.0).abs() < 1e-9);
        let f_tele = teleport_fidelity(&a, &c, &coherent).unwrap();
        assert!((f_tele - 0.5).abs() < 1e-12, "teleport fidelity {f_tele}");

        let mut params3 = PhysicalParams::reference(3, delta, temp);
        params3.input_power = 0.0;
        let steady3 = steady_state_from_detuning(&params3).unwrap();
        let cov3 = covariance(omega, &params3, &steady3).unwrap();
        let f_clone = teleclone_fidelity(&cov3.v, &coherent).unwrap();
        assert!(
            (f_clone - 0.5).abs() < 1e-12,
            "teleclone fidelity {f_clone}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    println!("criterion 01 PASS: vacuum identities on 100 random points in {elapsed:?}");
}

#[test]
fn criterion_02_fidelity_oracle_agreement() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let coherent = GaussianInput::coherent();
    let mut worst: f64 = 0.0;

    // Ten channels from each detuned sweep.
    for (delta, temp) in [(-0.1, 0.0), (0.1, 10.0)] {
        let params = PhysicalParams::reference(2, delta, temp);
        let steady = steady_state_from_detuning(&params).unwrap();
        for k in 0..10 {
            let omega = (k as f64 + 0.5) * 2e5;
            let cov = covariance(omega, &params, &steady).unwrap();
            let a = cov.block_a;
            let c = cov.block_c.unwrap();
            let closed = teleport_fidelity(&a, &c, &coherent).unwrap();
            let oracle = fidelity_quadrature_oracle(&a, &c, &coherent, &spec).unwrap();
            worst = worst.max((closed - oracle).abs());
        }
    }

    // Five synthetic (A, C, D) triples.
    let synthetic: [(Matrix2<f64>, Matrix2<f64>, GaussianInput); 5] = [
        (
            Matrix2::identity() * 0.5,
            Matrix2::zeros(),
            GaussianInput::coherent(),
        ),
        (
            Matrix2::identity() * 0.5,
            Matrix2::new(-0.3, 0.0, 0.0, 0.3),
            GaussianInput::coherent(),
        ),
        (
            Matrix2::identity() * 0.5,
            Matrix2::zeros(),
            GaussianInput::new(Matrix2::identity() * 2.0).unwrap(),
        ),
        (
            Matrix2::new(1.2, 0.1, 0.1, 0.9),
            Matrix2::new(-0.4, 0.05, 0.05, 0.35),
            GaussianInput::new(Matrix2::new(0.7, 0.1, 0.1, 0.4)).unwrap(),
        ),
        (
            Matrix2::identity() * 3.0,
            Matrix2::new(-2.5, 0.0, 0.0, 2.5),
            GaussianInput::coherent(),
        ),
    ];
    for (a, c, d) in &synthetic {
        let closed = teleport_fidelity(a, c, d).unwrap();
        let oracle = fidelity_quadrature_oracle(a, c, d, &spec).unwrap();
        worst = worst.max((closed - oracle).abs());
    }

    assert!(worst < 1e-6, "worst closed-form/quadrature gap {worst:.3e}");
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "took {elapsed:?}, budget 30 s"
    );
    println!(
        "criterion 02 PASS: oracle agreement on 25 channels, worst gap {worst:.3e} in {elapsed:?}"
    );
}

#[test]
fn criterion_03_physicality_across_presets() {
    let start = Instant::now();
    for preset in [
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
    ] {
        let preset_start = Instant::now();
        let config = preset_config(preset);
        let steady = steady_state_from_detuning(&config.params).unwrap();
        let mut worst = f64::INFINITY;
        for &omega in &config.omega_grid {
            for &temp in &config.temperatures {
                let mut params = config.params.clone();
                params.temperature = temp;
                let cov = covariance(omega, &params, &steady).unwrap();
                worst = worst.min(cov.uncertainty_min_eigenvalue());
            }
        }
        assert!(
            worst >= -1e-9,
            "{}: min eigenvalue of V + (i/2)Omega is {worst:.3e}",
            preset.name()
        );
        let elapsed = preset_start.elapsed();
        assert!(
            elapsed.as_secs_f64() < 60.0,
            "{} took {elapsed:?}, budget 60 s",
            preset.name()
        );
    }
    println!(
        "criterion 03 PASS: physicality on all preset sweeps in {:?}",
        start.elapsed()
    );
}

#[test]
fn criterion_04_zero_detuning_markers() {
    let config = preset_config(Preset::Fig2);
    assert_eq!(config.temperatures, vec![0.0, 300.0]);
    let result = run_sweep(&config, 4).unwrap();
    assert_eq!(result.rows.len(), 2000);

    let mut min_simon = f64::INFINITY;
    let mut max_curve_deviation: f64 = 0.0;
    let mut simon_only_point = false;
    for pair in result.rows.chunks(2) {
        let (cold, hot) = (&pair[0], &pair[1]);
        assert!(cold.error.is_none() && hot.error.is_none());
        min_simon = min_simon.min(cold.e_simon.unwrap());
        assert!(
            cold.e_product.unwrap() >= 1.0 - 1e-6,
            "product marker dipped at omega = {}",
            cold.omega
        );
        assert!(
            cold.e_sum.unwrap() >= 1.0 - 1e-6,
            "sum marker dipped at omega = {}",
            cold.omega
        );
        // The Simon criterion catches the amplitude-mediated correlations
        // that the sum and product criteria miss here.
        simon_only_point |= cold.e_simon.unwrap() < 1.0
            && cold.e_sum.unwrap() >= 1.0
            && cold.e_product.unwrap() >= 1.0;
        // Verdict invariance between 0 K and 300 K, all three criteria.
        for (c, h) in [
            (cold.e_simon.unwrap(), hot.e_simon.unwrap()),
            (cold.e_product.unwrap(), hot.e_product.unwrap()),
            (cold.e_sum.unwrap(), hot.e_sum.unwrap()),
        ] {
            assert_eq!(
                c < THRESHOLD,
                h < THRESHOLD,
                "verdict flips with temperature at omega = {}",
                cold.omega
            );
            let scale = c.abs().max(1.0);
            max_curve_deviation = max_curve_deviation.max((c - h).abs() / scale);
        }
    }
    assert!(min_simon < 1.0, "Simon marker never certified entanglement");
    assert!(
        simon_only_point,
        "expected grid points where only the Simon criterion certifies entanglement"
    );
    println!(
        "criterion 04 PASS: zero-detuning markers (min Simon {min_simon:.4}, sum/product on \
         threshold, verdicts T-invariant; max relative curve change over 0..300 K = \
         {max_curve_deviation:.3e})"
    );
}

fn sum_by_temperature(result: &SweepResult, temps: usize) -> Vec<Vec<(f64, f64)>> {
    let mut per_temp: Vec<Vec<(f64, f64)>> = vec![Vec::new(); temps];
    for (i, row) in result.rows.iter().enumerate() {
        assert!(
            row.error.is_none(),
            "errored point at omega = {}",
            row.omega
        );
        per_temp[i % temps].push((row.omega, row.e_sum.unwrap()));
    }
    per_temp
}

#[test]
fn criterion_05_detuned_entanglement_bands() {
    let omega_m = 1e6;

    // Delta = +0.1: entanglement in a low-frequency band and near the
    // mechanical resonance at T = 0.
    let fig4 = preset_sweep(Preset::Fig4);
    let by_temp4 = sum_by_temperature(&fig4, 4);
    let cold = &by_temp4[0];
    assert!(
        cold.iter().any(|&(w, e)| w <= 0.5 * omega_m && e < 1.0),
        "no low-frequency entanglement at T = 0, delta = +0.1"
    );
    assert!(
        cold.iter()
            .any(|&(w, e)| (0.8 * omega_m..=1.2 * omega_m).contains(&w) && e < 1.0),
        "no near-resonance entanglement at T = 0, delta = +0.1"
    );

    // Delta = -0.1: the near-resonance band at T = 0.
    let fig3 = preset_sweep(Preset::Fig3);
    let by_temp3 = sum_by_temperature(&fig3, 3);
    assert!(
        by_temp3[0]
            .iter()
            .any(|&(w, e)| (0.8 * omega_m..=1.2 * omega_m).contains(&w) && e < 1.0),
        "no near-resonance entanglement at T = 0, delta = -0.1"
    );

    // Pointwise monotonicity in temperature on both detuned sweeps.
    for by_temp in [&by_temp3, &by_temp4] {
        for hotter in 1..by_temp.len() {
            for (p_cold, p_hot) in by_temp[hotter - 1].iter().zip(&by_temp[hotter]) {
                assert!(
                    p_hot.1 >= p_cold.1 - 1e-9 * p_cold.1.abs().max(1.0),
                    "sum marker decreased with temperature at omega = {}",
                    p_cold.0
                );
            }
        }
    }

    // Survival at 10 K (second temperature of both presets).
    let min_at_10k = by_temp3[1]
        .iter()
        .chain(by_temp4[1].iter())
        .map(|&(_, e)| e)
        .fold(f64::INFINITY, f64::min);
    assert!(
        min_at_10k < 1.0,
        "no entanglement survives at T = 10 K (min E_sum = {min_at_10k:.4})"
    );
    println!("criterion 05 PASS: detuned entanglement bands, thermal monotonicity, 10 K survival");
}

#[test]
fn criterion_06_transfer_fidelities() {
    // Teleportation over the delta = +0.1 sweep.
    let fig5 = preset_sweep(Preset::Fig5);
    let temps = 4;
    let mut per_temp: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); temps];
    for (i, row) in fig5.rows.iter().enumerate() {
        assert!(row.error.is_none());
        per_temp[i % temps].push((row.omega, row.e_sum.unwrap(), row.f_tele.unwrap()));
    }
    // F_tele beats the classical bound where the sum marker is deepest at
    // T = 0; the 10 K half of this clause lives in its own test below.
    let best = per_temp[0]
        .iter()
        .cloned()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    assert!(
        best.2 > 0.5,
        "T = 0: F_tele = {:.4} at the E_sum minimizer (omega = {}, E_sum = {:.4})",
        best.2,
        best.0,
        best.1
    );
    // Pointwise nonincreasing in temperature.
    for hotter in 1..temps {
        for (cold, hot) in per_temp[hotter - 1].iter().zip(&per_temp[hotter]) {
            assert!(
                hot.2 <= cold.2 + 1e-9,
                "F_tele increased with temperature at omega = {}",
                cold.0
            );
        }
    }

    // Telecloning over the three-mode sweep.
    let fig6 = preset_sweep(Preset::Fig6);
    let mut clone_per_temp: Vec<Vec<(f64, f64)>> = vec![Vec::new(); temps];
    for (i, row) in fig6.rows.iter().enumerate() {
        assert!(row.error.is_none());
        let f = row.f_clone.unwrap();
        assert!(
            f <= CLONING_BOUND + 1e-9,
            "telecloning fidelity {f} beats the no-cloning bound at omega = {}",
            row.omega
        );
        clone_per_temp[i % temps].push((row.omega, f));
    }
    for hotter in 1..temps {
        for (cold, hot) in clone_per_temp[hotter - 1]
            .iter()
            .zip(&clone_per_temp[hotter])
        {
            assert!(
                hot.1 <= cold.1 + 1e-9,
                "F_clone increased with temperature at omega = {}",
                cold.0
            );
        }
    }
    println!("criterion 06 PASS: transfer fidelities (classical bound at the T = 0 marker minimum, thermal monotonicity, cloning bound)");
}

/// The remaining clause of criterion 06: the classical bound must also be
/// beaten at the E_sum-minimizing frequency at T = 10 K on the
/// delta = +0.1 sweep.
///
/// This is expected to fail: with the Brownian-force density normalized so
/// that the output commutator algebra closes exactly (the normalization
/// every other consistency gate in this suite requires), the thermal
/// coupling is 2 pi times stronger than the weakly-normalized variant, and
/// entanglement on the delta = +0.1 channel dies between 1 K and 10 K, so
/// its fidelity stays classical above roughly 2 K. At 10 K the bound is
/// still beaten on the mirrored detuning (the test below pins that).
#[test]
fn criterion_06_fidelity_beats_classical_bound_at_ten_kelvin() {
    let fig5 = preset_sweep(Preset::Fig5);
    let at_ten_kelvin: Vec<_> = fig5
        .rows
        .iter()
        .filter(|row| row.temperature == 10.0)
        .collect();
    let best = at_ten_kelvin
        .iter()
        .min_by(|a, b| a.e_sum.unwrap().partial_cmp(&b.e_sum.unwrap()).unwrap())
        .unwrap();
    assert!(
        best.f_tele.unwrap() > 0.5,
        "T = 10 K: F_tele = {:.6} at the E_sum minimizer (omega = {}, E_sum = {:.6}); \
         the commutator-closing bath normalization decorrelates this channel above ~2 K",
        best.f_tele.unwrap(),
        best.omega,
        best.e_sum.unwrap()
    );
    println!("criterion 06 PASS: classical bound beaten at the 10 K marker minimum");
}

/// Supporting evidence for the known-red clause above: at 10 K the
/// teleportation bound is beaten on the mirrored detuning, where the
/// above-resonance entanglement band survives the stronger bath coupling.
#[test]
fn ten_kelvin_fidelity_survives_on_mirrored_detuning() {
    use pondera_core::model::steady_state_from_detuning;
    use pondera_core::transfer::{teleport_fidelity_on, GaussianInput};

    let params = PhysicalParams::reference(2, -0.1, 10.0);
    let steady = steady_state_from_detuning(&params).unwrap();
    let mut best = (f64::INFINITY, 0.0);
    for i in 1..=1000 {
        let omega = i as f64 * 0.002 * 1e6;
        let cov = covariance(omega, &params, &steady).unwrap();
        let e = pondera_core::entanglement::Criterion::Sum
            .evaluate_on(&cov)
            .unwrap();
        if e < best.0 {
            best = (e, omega);
        }
    }
    assert!(best.0 < 1.0, "min E_sum = {:.4}", best.0);
    let cov = covariance(best.1, &params, &steady).unwrap();
    let f = teleport_fidelity_on(&cov, &GaussianInput::coherent()).unwrap();
    assert!(
        f > 0.5,
        "F_tele = {f:.6} at the 10 K minimizer of the mirrored detuning"
    );
    println!(
        "supporting: at 10 K, delta = -0.1 still beats the classical bound (F = {f:.4} at omega = {:.3} omega_m)",
        best.1 / 1e6
    );
}

#[test]
fn criterion_07_commutator_consistency() {
    for preset in [
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
    ] {
        let config = preset_config(preset);
        let steady = steady_state_from_detuning(&config.params).unwrap();
        for &omega in &config.omega_grid {
            let mut reference_c = None;
            for &temp in &config.temperatures {
                let mut params = config.params.clone();
                params.temperature = temp;
                // Full-matrix construction with its structural checks
                // (per-mode equality, forbidden elements, positivity).
                let c = commutator_scale(omega, &params, &steady).unwrap_or_else(|e| {
                    panic!("{}: {e}", preset.name());
                });
                assert!(c > 0.0);
                match reference_c {
                    None => reference_c = Some(c),
                    Some(c0) => assert!(
                        (c - c0).abs() <= 1e-9 * c0.abs(),
                        "{}: c(omega = {omega}) drifts with temperature: {c0} vs {c}",
                        preset.name()
                    ),
                }
            }
        }
    }
    println!("criterion 07 PASS: commutator scale positive, mode-uniform and temperature-invariant on all presets");
}

#[test]
fn criterion_08_fidelity_sum_marker_identity() {
    let coherent = GaussianInput::coherent();
    for i in 0..20 {
        let a_val = 0.5 + 4.5 * i as f64 / 19.0;
        for j in 0..20 {
            let c_val = (a_val - 0.01) * j as f64 / 19.0;
            let a = Matrix2::identity() * a_val;
            let c = Matrix2::new(-c_val, 0.0, 0.0, c_val);
            let f = teleport_fidelity(&a, &c, &coherent).unwrap();
            let e_sum = sum_marker(&a, &c).unwrap();
            assert!(
                (f - 1.0 / (1.0 + e_sum)).abs() < 1e-12,
                "identity broken at a = {a_val}, c = {c_val}"
            );
        }
    }
    println!("criterion 08 PASS: F = 1/(1 + E_sum) on the 20x20 symmetric family");
}

#[test]
fn criterion_09_bistability_residuals() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xacce_0009);
    for trial in 0..50 {
        let mut params = PhysicalParams::reference(2, 0.0, 0.0);
        params.input_power = 10f64.powf(rng.gen_range(-5.0..0.5));
        params.gamma_c = 10f64.powf(rng.gen_range(4.5..7.0));
        params.omega_m = 10f64.powf(rng.gen_range(5.0..6.5));
        params.mass = 10f64.powf(rng.gen_range(-5.0..-3.0));
        params.mode_count = if trial % 2 == 0 { 2 } else { 3 };
        let bare = rng.gen_range(-8.0..8.0) * params.gamma_c;

        let branches = solve_bistability(&params, bare).unwrap();
        assert!(
            branches.len() == 1 || branches.len() == 3,
            "trial {trial}: {} branches",
            branches.len()
        );
        let g = derive_coupling(&params).unwrap();
        let a_in = input_amplitude_sq(&params).unwrap();
        let b = 2.0 * params.hbar * g * g * params.mode_count as f64
            / (params.mass * params.omega_m * params.omega_m);
        for branch in &branches {
            let u = branch.alpha_sq;
            let d = bare + b * u;
            let res = u * (d * d + 0.25 * params.gamma_c * params.gamma_c) - a_in * params.gamma_c;
            let scale = (u * d * d).abs()
                + (u * 0.25 * params.gamma_c * params.gamma_c).abs()
                + (a_in * params.gamma_c).abs();
            assert!(
                res.abs() <= 1e-9 * scale,
                "trial {trial}: relative residual {:.3e}",
                res.abs() / scale
            );
        }
    }
    println!("criterion 09 PASS: bistability roots satisfy the cubic on 50 random parameter sets");
}

#[test]
fn criterion_10_determinism_across_worker_counts() {
    // In-process: byte-identical CSV from the library API.
    let config = preset_config(Preset::Fig4);
    let mut bytes_one = Vec::new();
    write_csv(
        &run_sweep(&config, 1).unwrap(),
        config.echo(),
        &mut bytes_one,
    )
    .unwrap();
    let mut bytes_eight = Vec::new();
    write_csv(
        &run_sweep(&config, 8).unwrap(),
        config.echo(),
        &mut bytes_eight,
    )
    .unwrap();
    assert_eq!(
        bytes_one, bytes_eight,
        "library sweep differs across worker counts"
    );

    // Through the binary, as shipped.
    let dir = std::env::temp_dir().join("pondera-acceptance-10");
    std::fs::create_dir_all(&dir).unwrap();
    let out_one = dir.join("one.csv");
    let out_eight = dir.join("eight.csv");
    for (out, threads) in [(&out_one, "1"), (&out_eight, "8")] {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_pondera"))
            .args(["sweep", "--preset", "fig4", "--threads", threads])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let one = std::fs::read(&out_one).unwrap();
    let eight = std::fs::read(&out_eight).unwrap();
    assert_eq!(one, eight, "binary output differs across worker counts");
    std::fs::remove_dir_all(&dir).unwrap();
    println!("criterion 10 PASS: fig4 sweep is byte-identical with 1 and 8 workers");
}
