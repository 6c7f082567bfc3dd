//! Flat key = value sweep configuration with figure presets.
//!
//! Parsing is whole-file: every problem is collected with its line number
//! instead of stopping at the first one. Resolution order is defaults,
//! then the preset (if any), then explicit keys — an explicit key always
//! wins over the preset regardless of where it appears in the file.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::Matrix2;
use pondera_core::entanglement::Criterion;
use pondera_core::model::PhysicalParams;
use pondera_core::transfer::GaussianInput;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Figure presets: reference parameters plus the figure's detuning,
/// temperature list, criteria and transfer protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Preset {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "fig2" => Some(Preset::Fig2),
            "fig3" => Some(Preset::Fig3),
            "fig4" => Some(Preset::Fig4),
            "fig5" => Some(Preset::Fig5),
            "fig6" => Some(Preset::Fig6),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
        }
    }

    fn apply(&self, s: &mut Settings) {
        s.mode_count = 2;
        s.detuning = 0.0;
        s.criteria = BTreeSet::new();
        s.transfer = BTreeSet::new();
        s.omega_start = 0.002;
        s.omega_stop = 2.0;
        s.omega_points = 1000;
        s.omega_in_mechanical_units = true;
        match self {
            Preset::Fig2 => {
                s.temperatures = vec![0.0, 300.0];
                s.criteria = Criterion::ALL.into_iter().collect();
            }
            Preset::Fig3 => {
                s.detuning = -0.1;
                s.temperatures = vec![0.0, 10.0, 50.0];
                s.criteria.insert(Criterion::Sum);
            }
            Preset::Fig4 => {
                s.detuning = 0.1;
                s.temperatures = vec![0.0, 10.0, 50.0, 100.0];
                s.criteria.insert(Criterion::Sum);
            }
            Preset::Fig5 => {
                s.detuning = 0.1;
                s.temperatures = vec![0.0, 10.0, 50.0, 100.0];
                s.criteria.insert(Criterion::Sum);
                s.transfer.insert(TransferKind::Teleport);
            }
            Preset::Fig6 => {
                s.mode_count = 3;
                s.detuning = 0.1;
                s.temperatures = vec![0.0, 10.0, 50.0, 100.0];
                s.criteria.insert(Criterion::Sum);
                s.transfer.insert(TransferKind::Teleclone);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TransferKind {
    Teleport,
    Teleclone,
}

impl TransferKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransferKind::Teleport => "teleport",
            TransferKind::Teleclone => "teleclone",
        }
    }
}

/// Mutable accumulation of every config knob before validation.
#[derive(Debug, Clone)]
struct Settings {
    mode_count: usize,
    omega_m: f64,
    omega_0: f64,
    mass: f64,
    cavity_length: f64,
    gamma_m: f64,
    gamma_c: f64,
    input_power: f64,
    detuning: f64,
    temperatures: Vec<f64>,
    omega_start: f64,
    omega_stop: f64,
    omega_points: usize,
    omega_in_mechanical_units: bool,
    criteria: BTreeSet<Criterion>,
    transfer: BTreeSet<TransferKind>,
    tripartite_criterion: Criterion,
    input_coherent: bool,
    d11: f64,
    d12: f64,
    d22: f64,
    preset: Option<Preset>,
}

impl Default for Settings {
    fn default() -> Self {
        let p = PhysicalParams::reference(2, 0.0, 0.0);
        Self {
            mode_count: p.mode_count,
            omega_m: p.omega_m,
            omega_0: p.omega_0,
            mass: p.mass,
            cavity_length: p.cavity_length,
            gamma_m: p.gamma_m,
            gamma_c: p.gamma_c,
            input_power: p.input_power,
            detuning: 0.0,
            temperatures: vec![0.0],
            omega_start: 0.002,
            omega_stop: 2.0,
            omega_points: 1000,
            omega_in_mechanical_units: true,
            criteria: [Criterion::Sum].into_iter().collect(),
            transfer: BTreeSet::new(),
            tripartite_criterion: Criterion::Sum,
            input_coherent: true,
            d11: 0.5,
            d12: 0.0,
            d22: 0.5,
            preset: None,
        }
    }
}

/// Fully validated sweep description.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub params: PhysicalParams,
    pub omega_grid: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub criteria: Vec<Criterion>,
    pub transfer: Vec<TransferKind>,
    pub tripartite_criterion: Criterion,
    pub input_state: GaussianInput,
    pub preset: Option<Preset>,
    echo: Vec<(String, String)>,
}

impl SweepConfig {
    /// Resolved configuration as ordered key/value pairs, echoed verbatim
    /// into the CSV header block.
    pub fn echo(&self) -> &[(String, String)] {
        &self.echo
    }
}

pub fn parse_config(text: &str) -> Result<SweepConfig, Vec<ConfigError>> {
    parse_config_with_preset(text, None)
}

/// Parses `text`, with `preset_override` (the --preset flag) taking
/// precedence over a `preset =` line in the file.
pub fn parse_config_with_preset(
    text: &str,
    preset_override: Option<Preset>,
) -> Result<SweepConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut entries: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((key, value)) => {
                let key = key.trim().to_string();
                let value = value.trim().to_string();
                if key.is_empty() {
                    errors.push(ConfigError::at(line_no, "missing key before `=`"));
                } else {
                    entries.push((line_no, key, value));
                }
            }
            None => errors.push(ConfigError::at(
                line_no,
                format!("expected `key = value`, got `{line}`"),
            )),
        }
    }

    // Duplicate keys are almost always an editing mistake; report them all.
    for i in 0..entries.len() {
        for j in (i + 1)..entries.len() {
            if entries[i].1 == entries[j].1 {
                errors.push(ConfigError::at(
                    entries[j].0,
                    format!(
                        "duplicate key `{}` (first set on line {})",
                        entries[j].1, entries[i].0
                    ),
                ));
            }
        }
    }

    let mut settings = Settings::default();

    // Preset first (flag wins over file), then explicit keys on top.
    let file_preset = entries.iter().find(|(_, k, _)| k == "preset");
    let preset = preset_override.or_else(|| {
        file_preset.and_then(|(line, _, value)| match Preset::from_name(value) {
            Some(p) => Some(p),
            None => {
                errors.push(ConfigError::at(
                    *line,
                    format!("unknown preset `{value}` (expected fig2..fig6)"),
                ));
                None
            }
        })
    });
    if let Some(p) = preset {
        p.apply(&mut settings);
        settings.preset = Some(p);
    }

    for (line, key, value) in &entries {
        apply_entry(&mut settings, *line, key, value, &mut errors);
    }

    // Invariant violations point at the line that set the offending key
    // when there is one (values inherited from defaults or a preset have
    // no line to blame).
    let key_line = |key: &str| -> Option<usize> {
        entries
            .iter()
            .rev()
            .find(|(_, k, _)| k == key)
            .map(|(line, _, _)| *line)
    };

    let config = build(settings, key_line, &mut errors);
    match config {
        Some(c) if errors.is_empty() => Ok(c),
        _ => Err(errors),
    }
}

fn parse_f64(value: &str, line: usize, key: &str, errors: &mut Vec<ConfigError>) -> Option<f64> {
    match value.parse::<f64>() {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(ConfigError::at(
                line,
                format!("`{key}` expects a number, got `{value}`"),
            ));
            None
        }
    }
}

fn parse_usize(
    value: &str,
    line: usize,
    key: &str,
    errors: &mut Vec<ConfigError>,
) -> Option<usize> {
    match value.parse::<usize>() {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(ConfigError::at(
                line,
                format!("`{key}` expects a nonnegative integer, got `{value}`"),
            ));
            None
        }
    }
}

fn apply_entry(
    s: &mut Settings,
    line: usize,
    key: &str,
    value: &str,
    errors: &mut Vec<ConfigError>,
) {
    match key {
        "preset" => {} // handled up front
        "mode_count" => {
            if let Some(v) = parse_usize(value, line, key, errors) {
                s.mode_count = v;
            }
        }
        "omega_m" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.omega_m = v;
            }
        }
        "omega_0" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.omega_0 = v;
            }
        }
        "mass" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.mass = v;
            }
        }
        "cavity_length" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.cavity_length = v;
            }
        }
        "gamma_m" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.gamma_m = v;
            }
        }
        "gamma_c" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.gamma_c = v;
            }
        }
        "input_power" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.input_power = v;
            }
        }
        "detuning" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.detuning = v;
            }
        }
        "temperatures" => {
            let mut temps = Vec::new();
            let mut ok = true;
            for part in value.split(',') {
                match part.trim().parse::<f64>() {
                    Ok(t) => temps.push(t),
                    Err(_) => {
                        errors.push(ConfigError::at(
                            line,
                            format!("`temperatures` expects comma-separated numbers, got `{part}`"),
                        ));
                        ok = false;
                    }
                }
            }
            if ok {
                s.temperatures = temps;
            }
        }
        "omega_start" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.omega_start = v;
            }
        }
        "omega_stop" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.omega_stop = v;
            }
        }
        "omega_points" => {
            if let Some(v) = parse_usize(value, line, key, errors) {
                s.omega_points = v;
            }
        }
        "omega_units" => match value {
            "omega_m" => s.omega_in_mechanical_units = true,
            "rad_s" => s.omega_in_mechanical_units = false,
            other => errors.push(ConfigError::at(
                line,
                format!("`omega_units` must be `omega_m` or `rad_s`, got `{other}`"),
            )),
        },
        "criteria" => {
            let mut set = BTreeSet::new();
            if value != "none" {
                for part in value.split(',') {
                    match part.trim() {
                        "simon" => {
                            set.insert(Criterion::Simon);
                        }
                        "product" => {
                            set.insert(Criterion::Product);
                        }
                        "sum" => {
                            set.insert(Criterion::Sum);
                        }
                        other => errors.push(ConfigError::at(
                            line,
                            format!("unknown criterion `{other}` (simon, product, sum)"),
                        )),
                    }
                }
            }
            s.criteria = set;
        }
        "transfer" => {
            let mut set = BTreeSet::new();
            if value != "none" {
                for part in value.split(',') {
                    match part.trim() {
                        "teleport" => {
                            set.insert(TransferKind::Teleport);
                        }
                        "teleclone" => {
                            set.insert(TransferKind::Teleclone);
                        }
                        other => errors.push(ConfigError::at(
                            line,
                            format!("unknown transfer protocol `{other}` (teleport, teleclone)"),
                        )),
                    }
                }
            }
            s.transfer = set;
        }
        "tripartite_criterion" => match value {
            "simon" => s.tripartite_criterion = Criterion::Simon,
            "product" => s.tripartite_criterion = Criterion::Product,
            "sum" => s.tripartite_criterion = Criterion::Sum,
            other => errors.push(ConfigError::at(
                line,
                format!("unknown criterion `{other}` (simon, product, sum)"),
            )),
        },
        "input_state" => match value {
            "coherent" => s.input_coherent = true,
            "explicit" => s.input_coherent = false,
            other => errors.push(ConfigError::at(
                line,
                format!("`input_state` must be `coherent` or `explicit`, got `{other}`"),
            )),
        },
        "d11" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.d11 = v;
            }
        }
        "d12" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.d12 = v;
            }
        }
        "d22" => {
            if let Some(v) = parse_f64(value, line, key, errors) {
                s.d22 = v;
            }
        }
        other => errors.push(ConfigError::at(line, format!("unknown key `{other}`"))),
    }
}

fn build(
    s: Settings,
    key_line: impl Fn(&str) -> Option<usize>,
    errors: &mut Vec<ConfigError>,
) -> Option<SweepConfig> {
    let locate = |key: &str, message: String| match key_line(key) {
        Some(line) => ConfigError::at(line, message),
        None => ConfigError::global(message),
    };

    let params = PhysicalParams {
        mode_count: s.mode_count,
        omega_m: s.omega_m,
        omega_0: s.omega_0,
        mass: s.mass,
        cavity_length: s.cavity_length,
        gamma_m: s.gamma_m,
        gamma_c: s.gamma_c,
        input_power: s.input_power,
        temperature: *s.temperatures.first().unwrap_or(&0.0),
        detuning: s.detuning,
        hbar: pondera_core::constants::HBAR,
        k_b: pondera_core::constants::K_B,
    };
    if let Err(e) = params.validate() {
        // Blame the line of the parameter named in the message when the
        // file set it.
        let offender = [
            "mode_count",
            "omega_m",
            "omega_0",
            "mass",
            "cavity_length",
            "gamma_m",
            "gamma_c",
            "input_power",
            "detuning",
        ]
        .into_iter()
        .find(|name| e.to_string().contains(name));
        match offender {
            Some(name) => errors.push(locate(name, format!("invalid parameters: {e}"))),
            None => errors.push(ConfigError::global(format!("invalid parameters: {e}"))),
        }
    }

    if s.omega_points < 2 {
        errors.push(locate(
            "omega_points",
            format!("omega_points must be at least 2, got {}", s.omega_points),
        ));
    }
    if s.omega_start.partial_cmp(&s.omega_stop) != Some(std::cmp::Ordering::Less) {
        let key = if key_line("omega_start").is_some() {
            "omega_start"
        } else {
            "omega_stop"
        };
        errors.push(locate(
            key,
            format!(
                "omega_start ({}) must be below omega_stop ({})",
                s.omega_start, s.omega_stop
            ),
        ));
    }
    if s.omega_start <= 0.0 {
        errors.push(locate(
            "omega_start",
            format!("omega_start must be positive, got {}", s.omega_start),
        ));
    }
    if s.temperatures.is_empty() {
        errors.push(locate(
            "temperatures",
            "temperatures must not be empty".into(),
        ));
    }
    for t in &s.temperatures {
        if !t.is_finite() || *t < 0.0 {
            errors.push(locate(
                "temperatures",
                format!("temperatures must be nonnegative, got {t}"),
            ));
        }
    }
    if s.transfer.contains(&TransferKind::Teleport) && s.mode_count != 2 {
        errors.push(locate(
            "transfer",
            format!("teleport requires mode_count = 2, got {}", s.mode_count),
        ));
    }
    if s.transfer.contains(&TransferKind::Teleclone) && s.mode_count != 3 {
        errors.push(locate(
            "transfer",
            format!("teleclone requires mode_count = 3, got {}", s.mode_count),
        ));
    }
    if (!s.criteria.is_empty() || !s.transfer.is_empty()) && s.mode_count < 2 {
        errors.push(locate(
            "mode_count",
            "entanglement criteria and transfer protocols require mode_count >= 2".into(),
        ));
    }

    let input_state = if s.input_coherent {
        Some(GaussianInput::coherent())
    } else {
        match GaussianInput::new(Matrix2::new(s.d11, s.d12, s.d12, s.d22)) {
            Ok(g) => Some(g),
            Err(e) => {
                errors.push(locate("input_state", format!("invalid input state: {e}")));
                None
            }
        }
    };

    if !errors.is_empty() {
        return None;
    }

    let unit = if s.omega_in_mechanical_units {
        s.omega_m
    } else {
        1.0
    };
    let step = (s.omega_stop - s.omega_start) / (s.omega_points - 1) as f64;
    let omega_grid: Vec<f64> = (0..s.omega_points)
        .map(|i| (s.omega_start + i as f64 * step) * unit)
        .collect();

    let criteria: Vec<Criterion> = s.criteria.iter().cloned().collect();
    let transfer: Vec<TransferKind> = s.transfer.iter().cloned().collect();

    let mut echo: Vec<(String, String)> = Vec::new();
    if let Some(p) = s.preset {
        echo.push(("preset".into(), p.name().into()));
    }
    echo.push(("mode_count".into(), s.mode_count.to_string()));
    echo.push(("omega_m".into(), s.omega_m.to_string()));
    echo.push(("omega_0".into(), s.omega_0.to_string()));
    echo.push(("mass".into(), s.mass.to_string()));
    echo.push(("cavity_length".into(), s.cavity_length.to_string()));
    echo.push(("gamma_m".into(), s.gamma_m.to_string()));
    echo.push(("gamma_c".into(), s.gamma_c.to_string()));
    echo.push(("input_power".into(), s.input_power.to_string()));
    echo.push(("detuning".into(), s.detuning.to_string()));
    echo.push((
        "temperatures".into(),
        s.temperatures
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(","),
    ));
    echo.push(("omega_start".into(), s.omega_start.to_string()));
    echo.push(("omega_stop".into(), s.omega_stop.to_string()));
    echo.push(("omega_points".into(), s.omega_points.to_string()));
    echo.push((
        "omega_units".into(),
        if s.omega_in_mechanical_units {
            "omega_m".into()
        } else {
            "rad_s".into()
        },
    ));
    echo.push((
        "criteria".into(),
        if criteria.is_empty() {
            "none".into()
        } else {
            criteria
                .iter()
                .map(|c| c.as_str())
                .collect::<Vec<_>>()
                .join(",")
        },
    ));
    echo.push((
        "transfer".into(),
        if transfer.is_empty() {
            "none".into()
        } else {
            transfer
                .iter()
                .map(|t| t.as_str())
                .collect::<Vec<_>>()
                .join(",")
        },
    ));
    if s.mode_count == 3 && !criteria.is_empty() {
        echo.push((
            "tripartite_criterion".into(),
            s.tripartite_criterion.as_str().into(),
        ));
    }
    let input_state = input_state.unwrap();
    let d = input_state.matrix();
    echo.push((
        "input_state".into(),
        if s.input_coherent {
            "coherent".into()
        } else {
            format!("d11={} d12={} d22={}", d[(0, 0)], d[(0, 1)], d[(1, 1)])
        },
    ));

    Some(SweepConfig {
        params,
        omega_grid,
        temperatures: s.temperatures,
        criteria,
        transfer,
        tripartite_criterion: s.tripartite_criterion,
        input_state,
        preset: s.preset,
        echo,
    })
}
