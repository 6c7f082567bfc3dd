//! Physical parameters, the classical working point and the noise model.
//!
//! Everything downstream (response matrices, covariance spectra, markers,
//! fidelities) is a pure function of the data defined here. All quantities
//! are SI; quadratures are dimensionless.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::constants::{C_LIGHT, HBAR, K_B};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("input power must be nonnegative, got {0}")]
    NegativePower(f64),
    #[error("temperature must be nonnegative, got {0}")]
    NegativeTemperature(f64),
    #[error("mode count must be at least 1, got {0}")]
    ZeroModes(usize),
}

/// Non-fatal conditions reported by parameter validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelWarning {
    /// The mechanical frequency is no longer far below the cavity free
    /// spectral range; the single-mode adiabatic description is strained.
    AdiabaticLimitStrained {
        omega_m: f64,
        free_spectral_range: f64,
    },
}

impl std::fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelWarning::AdiabaticLimitStrained {
                omega_m,
                free_spectral_range,
            } => write!(
                f,
                "mechanical frequency {omega_m:.3e} rad/s is above 1% of the cavity free \
                 spectral range {free_spectral_range:.3e} rad/s; the single-mode description \
                 is strained"
            ),
        }
    }
}

/// Full experimental parameter set, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Number of driven cavity modes (N >= 1; 2 and 3 are the studied cases).
    pub mode_count: usize,
    /// Mechanical frequency of the movable mirror, rad/s.
    pub omega_m: f64,
    /// Drive laser frequency, shared by all modes, rad/s.
    pub omega_0: f64,
    /// Mirror mass, kg.
    pub mass: f64,
    /// Equilibrium cavity length, m.
    pub cavity_length: f64,
    /// Mechanical damping rate, 1/s.
    pub gamma_m: f64,
    /// Cavity input-output rate, 1/s.
    pub gamma_c: f64,
    /// Input power per driven mode, W. Zero means an undriven cavity.
    pub input_power: f64,
    /// Mirror bath temperature, K.
    pub temperature: f64,
    /// Dimensionless overall detuning.
    pub detuning: f64,
    /// Reduced Planck constant, J s. Override only for unit-audit tests.
    pub hbar: f64,
    /// Boltzmann constant, J/K. Override only for unit-audit tests.
    pub k_b: f64,
}

impl PhysicalParams {
    /// Reference parameter set at the scale of a macroscopic-mirror cavity
    /// experiment: omega_m = 1e6 rad/s, omega_0 = 1e15 rad/s, m = 0.1 g,
    /// L = 1 mm, gamma_m = 1 /s, gamma_c = 1e6 /s, 13 mW drive per mode.
    pub fn reference(mode_count: usize, detuning: f64, temperature: f64) -> Self {
        Self {
            mode_count,
            omega_m: 1e6,
            omega_0: 1e15,
            mass: 1e-4,
            cavity_length: 1e-3,
            gamma_m: 1.0,
            gamma_c: 1e6,
            input_power: 13e-3,
            temperature,
            detuning,
            hbar: HBAR,
            k_b: K_B,
        }
    }

    /// Checks the parameter invariants. Returns the list of non-fatal
    /// warnings on success.
    pub fn validate(&self) -> Result<Vec<ModelWarning>, ModelError> {
        if self.mode_count == 0 {
            return Err(ModelError::ZeroModes(self.mode_count));
        }
        let positive = [
            ("omega_m", self.omega_m),
            ("omega_0", self.omega_0),
            ("mass", self.mass),
            ("cavity_length", self.cavity_length),
            ("gamma_m", self.gamma_m),
            ("gamma_c", self.gamma_c),
            ("hbar", self.hbar),
            ("k_b", self.k_b),
        ];
        for (name, value) in positive {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
            if value <= 0.0 {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        if !self.input_power.is_finite() {
            return Err(ModelError::NonFinite {
                name: "input_power",
                value: self.input_power,
            });
        }
        if self.input_power < 0.0 {
            return Err(ModelError::NegativePower(self.input_power));
        }
        if !self.temperature.is_finite() {
            return Err(ModelError::NonFinite {
                name: "temperature",
                value: self.temperature,
            });
        }
        if self.temperature < 0.0 {
            return Err(ModelError::NegativeTemperature(self.temperature));
        }
        if !self.detuning.is_finite() {
            return Err(ModelError::NonFinite {
                name: "detuning",
                value: self.detuning,
            });
        }

        let mut warnings = Vec::new();
        let fsr = C_LIGHT / (2.0 * self.cavity_length);
        if self.omega_m > 0.01 * fsr {
            warnings.push(ModelWarning::AdiabaticLimitStrained {
                omega_m: self.omega_m,
                free_spectral_range: fsr,
            });
        }
        Ok(warnings)
    }
}

/// Classical working point of the driven cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Stationary mirror displacement, m.
    pub x: f64,
    /// Stationary mirror momentum, kg m/s. Always zero.
    pub y: f64,
    /// Real nonnegative intracavity amplitude; alpha^2 is the mean
    /// intracavity photon number per mode.
    pub alpha: f64,
    /// Input photon flux |alpha_in|^2, photons/s.
    pub alpha_in_sq: f64,
    /// Optomechanical coupling G, 1/(m s).
    pub coupling: f64,
}

impl SteadyState {
    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }

    /// Relative residual of the self-consistency identity
    /// alpha^2 = alpha_in^2 / (gamma_c (1/4 + Delta^2)).
    pub fn consistency_residual(&self, params: &PhysicalParams) -> f64 {
        let rhs = self.alpha_in_sq / (params.gamma_c * (0.25 + params.detuning * params.detuning));
        let scale = self.alpha_sq().abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        (self.alpha_sq() - rhs).abs() / scale
    }
}

/// Optomechanical coupling constant G = omega_0 / L, 1/(m s).
///
/// The drive frequency stands in for the cavity resonance; for the mode
/// indices of interest the two agree to well below the stated precision.
pub fn derive_coupling(params: &PhysicalParams) -> Result<f64, ModelError> {
    params.validate()?;
    Ok(params.omega_0 / params.cavity_length)
}

/// Input photon flux |alpha_in|^2 = P_in / (hbar omega_0), photons/s.
pub fn input_amplitude_sq(params: &PhysicalParams) -> Result<f64, ModelError> {
    params.validate()?;
    Ok(params.input_power / (params.hbar * params.omega_0))
}

/// Classical stationary state for a given dimensionless detuning.
///
/// The intracavity amplitude is taken real and nonnegative (the input phase
/// is rotated away; only alpha^2 enters the fluctuation dynamics), the
/// stationary momentum is exactly zero, and the displacement follows from
/// the balance of radiation pressure against the mechanical restoring force.
pub fn steady_state_from_detuning(params: &PhysicalParams) -> Result<SteadyState, ModelError> {
    let coupling = derive_coupling(params)?;
    let alpha_in_sq = input_amplitude_sq(params)?;
    let alpha_sq = alpha_in_sq / (params.gamma_c * (0.25 + params.detuning * params.detuning));
    let x = 2.0 * params.hbar * coupling * params.mode_count as f64 * alpha_sq
        / (params.mass * params.omega_m * params.omega_m);
    Ok(SteadyState {
        x,
        y: 0.0,
        alpha: alpha_sq.sqrt(),
        alpha_in_sq,
        coupling,
    })
}

/// One self-consistent working point of the driven cavity for a given bare
/// detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct BistabilityBranch {
    /// Stationary mirror displacement, m.
    pub x: f64,
    /// Dimensionless overall detuning on this branch.
    pub detuning: f64,
    /// Intracavity photon number per mode.
    pub alpha_sq: f64,
}

/// Solves the radiation-pressure bistability cubic.
///
/// Given the bare detuning delta_0 = omega_0 - omega_c (rad/s), the overall
/// detuning, displacement and intracavity intensity must satisfy
///
///   Delta = (delta_0 + G x) / gamma_c,
///   x = 2 hbar G N alpha^2 / (m omega_m^2),
///   alpha^2 = alpha_in^2 / (gamma_c (1/4 + Delta^2)),
///
/// which closes into a cubic in alpha^2. All real branches are returned,
/// sorted by increasing alpha^2; there are one or three of them.
pub fn solve_bistability(
    params: &PhysicalParams,
    bare_detuning: f64,
) -> Result<Vec<BistabilityBranch>, ModelError> {
    let coupling = derive_coupling(params)?;
    let alpha_in_sq = input_amplitude_sq(params)?;
    let gamma_c = params.gamma_c;
    // Radiation-pressure feedback rate per photon: b u = G x when u = alpha^2.
    let b = 2.0 * params.hbar * coupling * coupling * params.mode_count as f64
        / (params.mass * params.omega_m * params.omega_m);

    if alpha_in_sq == 0.0 {
        return Ok(vec![BistabilityBranch {
            x: 0.0,
            detuning: bare_detuning / gamma_c,
            alpha_sq: 0.0,
        }]);
    }

    // In y = b u the cubic is monic with coefficients that stay finite for
    // vanishing coupling:
    //   y^3 + 2 delta_0 y^2 + (delta_0^2 + gamma_c^2/4) y - A gamma_c b = 0.
    let p = 2.0 * bare_detuning;
    let q = bare_detuning * bare_detuning + 0.25 * gamma_c * gamma_c;
    let r = -alpha_in_sq * gamma_c * b;
    let roots = monic_cubic_real_roots(p, q, r);

    // Residual form u ((delta_0 + b u)^2 + gamma_c^2/4) - A gamma_c and its
    // derivative, used to polish the closed-form roots.
    let f = |u: f64| {
        let d = bare_detuning + b * u;
        u * (d * d + 0.25 * gamma_c * gamma_c) - alpha_in_sq * gamma_c
    };
    let fprime = |u: f64| {
        let d = bare_detuning + b * u;
        d * d + 0.25 * gamma_c * gamma_c + 2.0 * b * u * d
    };

    let mut branches: Vec<f64> = Vec::new();
    for y in roots {
        let mut u = y / b;
        for _ in 0..50 {
            let df = fprime(u);
            if df == 0.0 {
                break;
            }
            let step = f(u) / df;
            u -= step;
            if step.abs() <= 1e-15 * u.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        if u.is_finite() && u >= 0.0 {
            branches.push(u);
        }
    }
    branches.sort_by(|a, b| a.partial_cmp(b).unwrap());
    branches.dedup_by(|a, b| (*a - *b).abs() <= 1e-8 * a.abs().max(b.abs()));

    Ok(branches
        .into_iter()
        .map(|alpha_sq| {
            let x = 2.0 * params.hbar * coupling * params.mode_count as f64 * alpha_sq
                / (params.mass * params.omega_m * params.omega_m);
            BistabilityBranch {
                x,
                detuning: (bare_detuning + coupling * x) / gamma_c,
                alpha_sq,
            }
        })
        .collect())
}

/// Real roots of the monic cubic y^3 + p y^2 + q y + r.
fn monic_cubic_real_roots(p: f64, q: f64, r: f64) -> Vec<f64> {
    // Depressed form t^3 + at + b with y = t - p/3.
    let a = q - p * p / 3.0;
    let b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    let shift = -p / 3.0;
    let disc = 0.25 * b * b + a * a * a / 27.0;

    if disc > 0.0 {
        // One real root. Pick the cube root with the larger magnitude to
        // avoid cancellation, recover the other factor from a.
        let sd = disc.sqrt();
        let u = if b <= 0.0 {
            -0.5 * b + sd
        } else {
            -0.5 * b - sd
        };
        let s = u.cbrt();
        let t = if s == 0.0 { 0.0 } else { s - a / (3.0 * s) };
        vec![t + shift]
    } else if a == 0.0 && b == 0.0 {
        vec![shift]
    } else {
        // Three real roots (trigonometric form).
        let m = 2.0 * (-a / 3.0).sqrt();
        let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos() + shift)
            .collect()
    }
}

/// Mechanical response function chi(omega) = 1 / (m (omega_m^2 - omega^2
/// + 2 i gamma_m omega)), s^2/kg.
pub fn mirror_susceptibility(omega: f64, params: &PhysicalParams) -> Complex64 {
    let denom = Complex64::new(
        params.mass * (params.omega_m * params.omega_m - omega * omega),
        params.mass * 2.0 * params.gamma_m * omega,
    );
    denom.inv()
}

/// Brownian-force spectral density of the mirror bath: the coefficient of
/// delta(omega + omega') in the frequency-domain correlation,
///
///   S_xi(omega) = {1 + coth(hbar omega / 2 k_B T)} (m gamma_m hbar / pi) omega.
///
/// The T = 0 limit replaces coth by sign(omega); at omega = 0 the continuous
/// limit of omega coth is 2 k_B T / hbar. Neither limit produces NaN.
pub fn thermal_noise_psd(omega: f64, params: &PhysicalParams) -> f64 {
    let front = params.mass * params.gamma_m * params.hbar / PI;
    front * (omega + omega_coth(omega, params))
}

/// Symmetric (temperature-carrying) half of the Brownian spectral density:
/// (S_xi(omega) + S_xi(-omega)) / 2 = (m gamma_m hbar / pi) omega coth(...).
pub fn thermal_noise_symmetric(omega: f64, params: &PhysicalParams) -> f64 {
    let front = params.mass * params.gamma_m * params.hbar / PI;
    front * omega_coth(omega, params)
}

/// Antisymmetric (commutator) part of the Brownian spectral density:
/// S_xi(omega) - S_xi(-omega) = (2 m gamma_m hbar / pi) omega, independent
/// of temperature.
pub fn thermal_noise_commutator(omega: f64, params: &PhysicalParams) -> f64 {
    2.0 * params.mass * params.gamma_m * params.hbar * omega / PI
}

/// Brownian-force spectral density in the normalization that pairs with the
/// input-noise correlations and the mechanical damping kernel: the response
/// assembly in `spectra` uses this one. Requiring the output quadratures to
/// keep canonical commutators fixes both the scale (2 pi relative to
/// [`thermal_noise_psd`]) and the frequency orientation of the density:
///
///   S(omega) = 2 m gamma_m hbar omega [coth(hbar omega / 2 k_B T) - 1].
pub fn bath_force_psd(omega: f64, params: &PhysicalParams) -> f64 {
    bath_force_symmetric(omega, params) + 0.5 * bath_force_commutator(omega, params)
}

/// Symmetric (temperature-carrying) part of [`bath_force_psd`]:
/// 2 m gamma_m hbar omega coth(hbar omega / 2 k_B T), even in omega.
pub fn bath_force_symmetric(omega: f64, params: &PhysicalParams) -> f64 {
    2.0 * params.mass * params.gamma_m * params.hbar * omega_coth(omega, params)
}

/// Antisymmetric (commutator) part of [`bath_force_psd`]:
/// -4 m gamma_m hbar omega, independent of temperature. The sign and
/// magnitude are the unique pair under which the damped-mirror dynamics
/// preserves canonical commutators of the output fields.
pub fn bath_force_commutator(omega: f64, params: &PhysicalParams) -> f64 {
    -4.0 * params.mass * params.gamma_m * params.hbar * omega
}

/// omega * coth(hbar omega / (2 k_B T)) with its T -> 0 and omega -> 0 limits.
fn omega_coth(omega: f64, params: &PhysicalParams) -> f64 {
    if params.temperature == 0.0 {
        return omega.abs();
    }
    let scale = params.hbar / (2.0 * params.k_b * params.temperature);
    let x = scale * omega;
    if x.abs() < 1e-4 {
        // omega coth(scale omega) = (1/scale)(1 + x^2/3 - x^4/45 + ...)
        (1.0 + x * x / 3.0 - x * x * x * x / 45.0) / scale
    } else {
        omega * coth(x)
    }
}

fn coth(x: f64) -> f64 {
    let ax = x.abs();
    // 1 + 2/(e^{2x} - 1) is stable for moderate x and saturates cleanly.
    let c = if ax > 350.0 {
        1.0
    } else {
        1.0 + 2.0 / (2.0 * ax).exp_m1()
    };
    if x < 0.0 {
        -c
    } else {
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table_params() -> PhysicalParams {
        PhysicalParams::reference(2, 0.0, 0.0)
    }

    #[test]
    fn validation_rejects_nonpositive_core_parameters() {
        let mut p = table_params();
        p.omega_0 = 0.0;
        assert!(matches!(
            p.validate(),
            Err(ModelError::NonPositive {
                name: "omega_0",
                ..
            })
        ));
        let mut p = table_params();
        p.mode_count = 0;
        assert!(matches!(p.validate(), Err(ModelError::ZeroModes(0))));
        let mut p = table_params();
        p.temperature = -1.0;
        assert!(matches!(
            p.validate(),
            Err(ModelError::NegativeTemperature(_))
        ));
        let mut p = table_params();
        p.input_power = -1e-3;
        assert!(matches!(p.validate(), Err(ModelError::NegativePower(_))));
    }

    #[test]
    fn validation_flags_strained_adiabatic_regime() {
        let p = table_params();
        assert!(p.validate().unwrap().is_empty());
        // FSR = c/(2L) ~ 1.5e11 rad/s for L = 1 mm; push omega_m past 1%.
        let mut p = table_params();
        p.omega_m = 2e9;
        let warnings = p.validate().unwrap();
        assert!(matches!(
            warnings.as_slice(),
            [ModelWarning::AdiabaticLimitStrained { .. }]
        ));
    }

    #[test]
    fn coupling_is_drive_frequency_over_length() {
        let p = table_params();
        assert_eq!(derive_coupling(&p).unwrap(), 1e18);

        let mut scaled = table_params();
        scaled.omega_0 = 2e15;
        scaled.cavity_length = 2e-3;
        assert_eq!(derive_coupling(&scaled).unwrap(), 1e18);

        let mut bad = table_params();
        bad.omega_0 = 0.0;
        assert!(derive_coupling(&bad).is_err());
    }

    #[test]
    fn input_flux_matches_direct_substitution() {
        let p = table_params();
        let flux = input_amplitude_sq(&p).unwrap();
        // 13 mW / (hbar * 1e15 rad/s), CODATA hbar.
        let expected = 0.013 / (1.054571817e-34 * 1e15);
        assert_eq!(flux, expected);
        assert!((flux / 1.2327278038760635e17 - 1.0).abs() < 1e-12);

        let mut undriven = table_params();
        undriven.input_power = 0.0;
        assert_eq!(input_amplitude_sq(&undriven).unwrap(), 0.0);

        let mut doubled = table_params();
        doubled.input_power *= 2.0;
        let ratio = input_amplitude_sq(&doubled).unwrap() / flux;
        assert!((ratio - 2.0).abs() < 1e-15);
    }

    #[test]
    fn steady_state_matches_frozen_regression_values() {
        let ss = steady_state_from_detuning(&table_params()).unwrap();
        assert_eq!(ss.y, 0.0);
        // alpha^2 = alpha_in^2 / (gamma_c / 4) at zero detuning.
        assert!((ss.alpha_sq() / 4.930911215504254e11 - 1.0).abs() < 1e-12);
        // x = 8 G N P / (omega_0 gamma_c m omega_m^2); hbar cancels.
        assert!((ss.x / 2.08e-12 - 1.0).abs() < 1e-12);
        assert!(ss.consistency_residual(&table_params()) < 1e-12);
    }

    #[test]
    fn undriven_cavity_has_trivial_steady_state() {
        let mut p = table_params();
        p.input_power = 0.0;
        let ss = steady_state_from_detuning(&p).unwrap();
        assert_eq!(ss.alpha, 0.0);
        assert_eq!(ss.x, 0.0);
    }

    #[test]
    fn detuning_rescales_intensity_as_lorentzian() {
        let ss0 = steady_state_from_detuning(&table_params()).unwrap();
        let mut p = table_params();
        p.detuning = 0.5;
        let ss = steady_state_from_detuning(&p).unwrap();
        let ratio = ss.alpha_sq() / ss0.alpha_sq();
        assert!((ratio - 0.5).abs() < 1e-12);
    }

    fn cubic_relative_residual(
        params: &PhysicalParams,
        bare_detuning: f64,
        branch: &BistabilityBranch,
    ) -> f64 {
        let g = derive_coupling(params).unwrap();
        let a_in = input_amplitude_sq(params).unwrap();
        let b = 2.0 * params.hbar * g * g * params.mode_count as f64
            / (params.mass * params.omega_m * params.omega_m);
        let u = branch.alpha_sq;
        let d = bare_detuning + b * u;
        let res = u * (d * d + 0.25 * params.gamma_c * params.gamma_c) - a_in * params.gamma_c;
        let scale = (u * d * d).abs()
            + (u * 0.25 * params.gamma_c * params.gamma_c).abs()
            + (a_in * params.gamma_c).abs();
        res.abs() / scale.max(f64::MIN_POSITIVE)
    }

    #[test]
    fn undriven_bistability_has_single_trivial_branch() {
        let mut p = table_params();
        p.input_power = 0.0;
        let branches = solve_bistability(&p, -3e6).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].alpha_sq, 0.0);
        assert_eq!(branches[0].x, 0.0);
        assert!((branches[0].detuning - (-3.0)).abs() < 1e-15);
    }

    #[test]
    fn weak_coupling_limit_reduces_to_detuned_lorentzian() {
        // The feedback rate per drive photon scales with hbar G^2 alpha_in^2;
        // a weak drive makes it negligible and the response is a plain
        // detuned Lorentzian.
        let mut p = table_params();
        p.input_power = 1e-12;
        let branches = solve_bistability(&p, -2e6).unwrap();
        assert_eq!(branches.len(), 1);
        assert!((branches[0].detuning - (-2.0)).abs() < 1e-9);
        let expected = input_amplitude_sq(&p).unwrap() / (p.gamma_c * (0.25 + 4.0));
        assert!((branches[0].alpha_sq / expected - 1.0).abs() < 1e-9);
    }

    #[test]
    fn strong_drive_negative_detuning_is_bistable() {
        // Pick the drive so the intensity sits on the folded part of the
        // response: three branches, each an accurate cubic root.
        let mut p = table_params();
        let bare = -3e6;
        let g = 1e18;
        let b = 2.0 * p.hbar * g * g * 2.0 / (p.mass * p.omega_m * p.omega_m);
        let u_mid = 2e6 / b; // b u = 2e6, overall detuning -1e6 + feedback
        let d = bare + b * u_mid;
        let a_needed = u_mid * (d * d + 0.25 * p.gamma_c * p.gamma_c) / p.gamma_c;
        p.input_power = a_needed * p.hbar * p.omega_0;

        let branches = solve_bistability(&p, bare).unwrap();
        assert_eq!(branches.len(), 3);
        for w in branches.windows(2) {
            assert!(w[0].alpha_sq < w[1].alpha_sq);
        }
        for branch in &branches {
            assert!(cubic_relative_residual(&p, bare, branch) < 1e-9);
        }
    }

    #[test]
    fn bistability_residuals_on_random_parameter_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x00b1_57ab);
        for _ in 0..50 {
            let mut p = table_params();
            p.input_power = 10f64.powf(rng.gen_range(-4.0..0.0));
            p.gamma_c = 10f64.powf(rng.gen_range(5.0..7.0));
            p.omega_m = 10f64.powf(rng.gen_range(5.5..6.5));
            p.mass = 10f64.powf(rng.gen_range(-5.0..-3.0));
            let bare = rng.gen_range(-8.0..8.0) * p.gamma_c;
            let branches = solve_bistability(&p, bare).unwrap();
            assert!(
                branches.len() == 1 || branches.len() == 3,
                "{}",
                branches.len()
            );
            for branch in &branches {
                assert!(cubic_relative_residual(&p, bare, branch) < 1e-9);
            }
        }
    }

    #[test]
    fn susceptibility_static_and_resonant_anchors() {
        let p = table_params();
        let chi0 = mirror_susceptibility(0.0, &p);
        assert!((chi0.re - 1e-8).abs() < 1e-20);
        assert_eq!(chi0.im, 0.0);

        let chi_res = mirror_susceptibility(p.omega_m, &p);
        assert!(chi_res.re.abs() < 1e-18);
        // 1/(2 i m gamma_m omega_m) = -i * 5e-3
        assert!((chi_res.im + 5e-3).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn susceptibility_conjugate_symmetry(omega in -1e7f64..1e7) {
            let p = table_params();
            let plus = mirror_susceptibility(omega, &p);
            let minus = mirror_susceptibility(-omega, &p);
            prop_assert_eq!(plus.conj(), minus);
            if omega > 0.0 {
                prop_assert!(plus.im <= 0.0);
            }
        }

        #[test]
        fn thermal_psd_nonnegative_and_monotone_in_temperature(
            omega in -5e6f64..5e6,
            t_low in 0.0f64..200.0,
            dt in 0.0f64..200.0,
        ) {
            let mut p = table_params();
            p.temperature = t_low;
            let s_low = thermal_noise_psd(omega, &p);
            p.temperature = t_low + dt;
            let s_high = thermal_noise_psd(omega, &p);
            prop_assert!(s_low >= 0.0);
            prop_assert!(s_high >= s_low - 1e-12 * s_high.abs());
        }

        #[test]
        fn thermal_commutator_is_temperature_independent(
            omega in -5e6f64..5e6,
            temp in 0.0f64..400.0,
        ) {
            let mut p = table_params();
            p.temperature = temp;
            let diff = thermal_noise_psd(omega, &p) - thermal_noise_psd(-omega, &p);
            let expected = 2.0 * p.mass * p.gamma_m * p.hbar * omega / PI;
            // The difference is computed from two coth-dominated values, so
            // allow the cancellation floor on top of the relative tolerance.
            let floor = 1e-15 * thermal_noise_psd(omega, &p).abs();
            prop_assert!((diff - expected).abs() <= 1e-12 * expected.abs() + floor);
            // Closed forms recombine into the one-sided density.
            let s = thermal_noise_symmetric(omega, &p)
                + 0.5 * thermal_noise_commutator(omega, &p);
            let direct = thermal_noise_psd(omega, &p);
            prop_assert!((s - direct).abs() <= 1e-12 * direct.abs().max(1e-300));
        }

        #[test]
        fn bath_density_is_scaled_mirror_of_the_quoted_form(
            omega in -5e6f64..5e6,
            temp in 0.0f64..400.0,
        ) {
            let mut p = table_params();
            p.temperature = temp;
            let bath = bath_force_psd(omega, &p);
            let mirrored = 2.0 * PI * thermal_noise_psd(-omega, &p);
            prop_assert!((bath - mirrored).abs() <= 1e-12 * bath.abs().max(1e-300));
            // The bath stays a legitimate quantum spectral density: its
            // symmetric part dominates the commutator part.
            let slack = bath_force_symmetric(omega, &p)
                - 0.5 * bath_force_commutator(omega, &p).abs();
            prop_assert!(slack >= -1e-12 * bath_force_symmetric(omega, &p).abs());
        }
    }

    #[test]
    fn thermal_psd_zero_temperature_anchors() {
        let p = table_params();
        assert_eq!(thermal_noise_psd(-1e5, &p), 0.0);
        assert_eq!(thermal_noise_psd(0.0, &p), 0.0);
        let at_resonance = thermal_noise_psd(p.omega_m, &p);
        let expected = 2.0 * 1e-4 * 1.0 * 1.054571817e-34 * 1e6 / PI;
        assert!((at_resonance / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_psd_low_frequency_limit_matches_series() {
        let mut p = table_params();
        p.temperature = 300.0;
        let limit = 2.0 * p.mass * p.gamma_m * p.k_b * p.temperature / PI;
        assert!((thermal_noise_psd(0.0, &p) / limit - 1.0).abs() < 1e-12);
        // The full expression at omega = ±1e-3 rad/s brackets the limit.
        for omega in [1e-3, -1e-3] {
            let s = thermal_noise_psd(omega, &p);
            assert!((s / limit - 1.0).abs() < 1e-6, "omega = {omega}");
        }
    }
}
