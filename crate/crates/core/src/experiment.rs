//! Torsional-oscillator budget: gravitational coupling, thermal occupation,
//! signal-to-noise and integration time, plus unit restoration of the
//! dimensionless noise bound.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::QuadraticHamiltonian;
use crate::error::{Error, Result};
use crate::kv::{parse_key_values, KeyValues};

/// CODATA 2018.
pub mod constants {
    /// Newtonian constant of gravitation, m³ kg⁻¹ s⁻².
    pub const G: f64 = 6.674_30e-11;
    /// Reduced Planck constant, J s (exact).
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Boltzmann constant, J/K (exact).
    pub const K_B: f64 = 1.380_649e-23;
    /// Julian year, s.
    pub const YEAR: f64 = 365.25 * 86_400.0;
}

use constants::{G, HBAR, K_B, YEAR};

/// How the `omega` input is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OmegaConvention {
    /// `omega` is a cyclic frequency in Hz; ω = 2π·omega.
    #[default]
    #[serde(rename = "hz-cycles")]
    HzCycles,
    /// `omega` is already an angular frequency in rad/s.
    #[serde(rename = "rad-s")]
    RadPerSecond,
}

impl OmegaConvention {
    pub const ALL: [OmegaConvention; 2] = [OmegaConvention::HzCycles, OmegaConvention::RadPerSecond];

    pub fn angular(self, omega: f64) -> f64 {
        match self {
            OmegaConvention::HzCycles => 2.0 * PI * omega,
            OmegaConvention::RadPerSecond => omega,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OmegaConvention::HzCycles => "hz-cycles",
            OmegaConvention::RadPerSecond => "rad-s",
        }
    }
}

impl fmt::Display for OmegaConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OmegaConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hz-cycles" => Ok(OmegaConvention::HzCycles),
            "rad-s" => Ok(OmegaConvention::RadPerSecond),
            other => Err(Error::invalid(format!("unknown omega convention `{other}` (expected hz-cycles or rad-s)"))),
        }
    }
}

fn default_geometry() -> f64 {
    1.0
}

fn default_sigma() -> f64 {
    5.0
}

/// Physical parameters in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// kg/m³.
    pub mass_density: f64,
    /// Read through `omega_convention`.
    pub omega: f64,
    #[serde(default)]
    pub omega_convention: OmegaConvention,
    pub quality_factor: f64,
    /// K.
    pub temperature: f64,
    #[serde(default = "default_geometry")]
    pub geometry_factor: f64,
    #[serde(default = "default_sigma")]
    pub sigma_target: f64,
    /// s; defaults to 1/g.
    #[serde(default)]
    pub shot_time: Option<f64>,
    /// kg m²; enables the restored noise bound.
    #[serde(default)]
    pub moment_of_inertia: Option<f64>,
}

const CONFIG_KEYS: [&str; 9] = [
    "mass_density",
    "omega",
    "omega_convention",
    "quality_factor",
    "temperature",
    "geometry_factor",
    "sigma_target",
    "shot_time",
    "moment_of_inertia",
];

impl ExperimentConfig {
    /// Platinum dumbbell, 1 mHz, Q = 10⁹, 10 mK.
    pub fn platinum() -> Self {
        ExperimentConfig {
            mass_density: 22_000.0,
            omega: 1e-3,
            omega_convention: OmegaConvention::HzCycles,
            quality_factor: 1e9,
            temperature: 0.01,
            geometry_factor: 1.0,
            sigma_target: 5.0,
            shot_time: None,
            moment_of_inertia: None,
        }
    }

    /// Parse `key = value` text, or JSON when the first non-blank character is `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let cfg: ExperimentConfig = serde_json::from_str(text)
                .map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
            cfg.validate()?;
            return Ok(cfg);
        }
        Self::from_key_values(&parse_key_values(text)?)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(&CONFIG_KEYS)?;
        let omega_convention = match kv.get_str("omega_convention") {
            None => OmegaConvention::default(),
            Some(s) => s.parse().map_err(|e: Error| Error::Parse {
                line: kv.line_of("omega_convention").unwrap_or(1),
                message: e.to_string(),
            })?,
        };
        let cfg = ExperimentConfig {
            mass_density: kv.require_f64("mass_density")?,
            omega: kv.require_f64("omega")?,
            omega_convention,
            quality_factor: kv.require_f64("quality_factor")?,
            temperature: kv.require_f64("temperature")?,
            geometry_factor: kv.get_f64("geometry_factor")?.unwrap_or(1.0),
            sigma_target: kv.get_f64("sigma_target")?.unwrap_or(5.0),
            shot_time: kv.get_f64("shot_time")?,
            moment_of_inertia: kv.get_f64("moment_of_inertia")?,
        };
        cfg.validate().map_err(|e| {
            let line = CONFIG_KEYS
                .iter()
                .find(|k| e.to_string().contains(*k))
                .and_then(|k| kv.line_of(k))
                .unwrap_or(1);
            Error::Parse { line, message: e.to_string() }
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_density", Some(self.mass_density)),
            ("omega", Some(self.omega)),
            ("quality_factor", Some(self.quality_factor)),
            ("temperature", Some(self.temperature)),
            ("sigma_target", Some(self.sigma_target)),
            ("shot_time", self.shot_time),
            ("moment_of_inertia", self.moment_of_inertia),
        ];
        for (name, value) in positive {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::invalid(format!("{name} must be finite and strictly positive, got {v}")));
                }
            }
        }
        if !(0.1..=10.0).contains(&self.geometry_factor) {
            return Err(Error::invalid(format!("geometry_factor must lie in [0.1, 10], got {}", self.geometry_factor)));
        }
        Ok(())
    }

    pub fn with_convention(&self, convention: OmegaConvention) -> Self {
        ExperimentConfig { omega_convention: convention, ..self.clone() }
    }

    /// Angular frequency in rad/s.
    pub fn angular_frequency(&self) -> f64 {
        self.omega_convention.angular(self.omega)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "mass_density = {}\nomega = {}\nomega_convention = {}\nquality_factor = {}\ntemperature = {}\ngeometry_factor = {}\nsigma_target = {}\n",
            self.mass_density, self.omega, self.omega_convention, self.quality_factor, self.temperature, self.geometry_factor, self.sigma_target
        );
        if let Some(t) = self.shot_time {
            s.push_str(&format!("shot_time = {t}\n"));
        }
        if let Some(i) = self.moment_of_inertia {
            s.push_str(&format!("moment_of_inertia = {i}\n"));
        }
        s
    }
}

/// g = geometry_factor · G n / ω, in s⁻¹.
pub fn coupling_g(config: &ExperimentConfig) -> Result<f64> {
    let omega = config.angular_frequency();
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::invalid("omega must be non-zero"));
    }
    Ok(config.geometry_factor * G * config.mass_density / omega)
}

/// n̄ = k_B T / ħω.
pub fn thermal_occupation(config: &ExperimentConfig) -> f64 {
    K_B * config.temperature / (HBAR * config.angular_frequency())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetReport {
    pub omega_convention: OmegaConvention,
    /// rad/s.
    pub omega: f64,
    /// s⁻¹.
    pub g: f64,
    pub nbar: f64,
    /// False when k_B T is not much larger than ħω, where n̄ ≈ k_B T/ħω fails.
    pub high_temperature: bool,
    /// s⁻¹.
    pub kappa: f64,
    /// s.
    pub tau: f64,
    /// S/N of a single pair of shots, g τ/(n̄ κ τ).
    pub snr_per_shot_group: f64,
    /// T_int solving S/N = sigma_target, s.
    pub t_int_5sigma: f64,
    pub t_int_5sigma_years: f64,
    /// (50/g)(k_B T/ħ g Q)², s.
    pub t_int_closed_form: f64,
    pub t_int_closed_form_years: f64,
    /// t_int_5sigma / t_int_closed_form.
    pub t_int_ratio: f64,
    /// 2 g ħ I ω, kg² m⁴ s⁻³, when I is known.
    pub noise_bound: Option<f64>,
}

pub fn budget(config: &ExperimentConfig) -> Result<BudgetReport> {
    config.validate()?;
    let omega = config.angular_frequency();
    let g = coupling_g(config)?;
    let nbar = thermal_occupation(config);
    let kappa = omega / config.quality_factor;
    let tau = config.shot_time.unwrap_or(1.0 / g);
    let snr_per_shot_group = g / (nbar * kappa);
    // S/N = (g/(n̄κ)) sqrt(T/2τ)  ⇒  T = 2τ (σ n̄κ/g)².
    let t_int = 2.0 * tau * (config.sigma_target * nbar * kappa / g).powi(2);
    let closed = (50.0 / g) * (K_B * config.temperature / (HBAR * g * config.quality_factor)).powi(2);
    Ok(BudgetReport {
        omega_convention: config.omega_convention,
        omega,
        g,
        nbar,
        high_temperature: nbar > 10.0,
        kappa,
        tau,
        snr_per_shot_group,
        t_int_5sigma: t_int,
        t_int_5sigma_years: t_int / YEAR,
        t_int_closed_form: closed,
        t_int_closed_form_years: closed / YEAR,
        t_int_ratio: t_int / closed,
        noise_bound: config.moment_of_inertia.map(|i| 2.0 * g * HBAR * i * omega),
    })
}

/// Order-of-magnitude claims the budget is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PublishedFigures {
    /// s⁻¹.
    pub g: f64,
    /// s, inclusive range for "a few thousand seconds".
    pub tau_range: (f64, f64),
    /// years, inclusive range for "a few thousand years".
    pub t_int_years_range: (f64, f64),
}

pub const PUBLISHED: PublishedFigures =
    PublishedFigures { g: 0.23e-3, tau_range: (1e3, 1e4), t_int_years_range: (1e3, 1e4) };

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConventionCheck {
    pub omega_convention: OmegaConvention,
    /// g / 0.23 mHz.
    pub g_ratio: f64,
    pub g_within_5_percent: bool,
    pub tau_in_range: bool,
    pub t_int_in_range: bool,
    /// log10(T_int / 3000 years).
    pub t_int_log10_offset: f64,
}

/// Budget under both ω readings plus the comparison with the quoted figures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanReport {
    pub config: ExperimentConfig,
    pub selected: BudgetReport,
    pub hz_cycles: BudgetReport,
    pub rad_s: BudgetReport,
    pub checks: Vec<ConventionCheck>,
    /// Human-readable summary of any inconsistency between the quoted figures.
    pub discrepancy: Vec<String>,
}

pub fn plan_experiment(config: &ExperimentConfig) -> Result<PlanReport> {
    let selected = budget(config)?;
    let hz = budget(&config.with_convention(OmegaConvention::HzCycles))?;
    let rad = budget(&config.with_convention(OmegaConvention::RadPerSecond))?;
    let checks: Vec<ConventionCheck> = [&hz, &rad]
        .iter()
        .map(|b| {
            let g_ratio = b.g / PUBLISHED.g;
            ConventionCheck {
                omega_convention: b.omega_convention,
                g_ratio,
                g_within_5_percent: (g_ratio - 1.0).abs() <= 0.05,
                tau_in_range: (PUBLISHED.tau_range.0..=PUBLISHED.tau_range.1).contains(&b.tau),
                t_int_in_range: (PUBLISHED.t_int_years_range.0..=PUBLISHED.t_int_years_range.1)
                    .contains(&b.t_int_closed_form_years),
                t_int_log10_offset: (b.t_int_closed_form_years / 3000.0).log10(),
            }
        })
        .collect();
    let mut discrepancy = Vec::new();
    for c in &checks {
        if c.g_within_5_percent && !c.t_int_in_range {
            discrepancy.push(format!(
                "{}: g matches 0.23 mHz (ratio {:.3}) but T_int is 10^{:.2} times 3000 years",
                c.omega_convention, c.g_ratio, c.t_int_log10_offset
            ));
        }
        if !c.g_within_5_percent && c.t_int_in_range {
            discrepancy.push(format!(
                "{}: T_int lands in the few-thousand-year range but g is {:.3} times 0.23 mHz",
                c.omega_convention, c.g_ratio
            ));
        }
    }
    if !checks.iter().any(|c| c.g_within_5_percent && c.t_int_in_range) {
        discrepancy.push("no single omega convention reproduces both the quoted g and the quoted T_int".into());
    }
    Ok(PlanReport { config: config.clone(), selected, hz_cycles: hz, rad_s: rad, checks, discrepancy })
}

/// Two torsional dumbbells: L²/2I + ½Iω(ω + g)θ² per mode and −Iωg θ_a θ_b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GravitationalHamiltonian {
    /// I = 2MR², kg m².
    pub inertia: f64,
    /// rad/s.
    pub omega: f64,
    /// s⁻¹.
    pub g: f64,
    /// Coefficient of L², 1/2I.
    pub kinetic: f64,
    /// Coefficient of θ², ½Iω(ω + g).
    pub stiffness: f64,
    /// Coefficient of θ_a θ_b, −Iωg.
    pub cross: f64,
}

impl GravitationalHamiltonian {
    /// In units of ħω with θ = q sqrt(ħ/Iω), L = p sqrt(ħIω) and time in 1/ω:
    /// level shifts g/ω and coupling −g/ω.
    pub fn dimensionless(&self) -> QuadraticHamiltonian {
        let r = self.g / self.omega;
        QuadraticHamiltonian::new(r, r, -r)
    }
}

/// Dumbbells of mass M at arm length R, spheres of radius r.
pub fn gravitational_hamiltonian(mass: f64, arm: f64, radius: f64, omega: f64, geometry_factor: f64) -> Result<GravitationalHamiltonian> {
    for (name, v) in [("mass", mass), ("arm length", arm), ("sphere radius", radius), ("omega", omega)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be finite and strictly positive, got {v}")));
        }
    }
    if radius >= arm {
        return Err(Error::invalid(format!("sphere radius {radius} must be smaller than the arm length {arm}")));
    }
    let density = mass / (4.0 / 3.0 * PI * radius.powi(3));
    let g = geometry_factor * G * density / omega;
    let inertia = 2.0 * mass * arm * arm;
    Ok(GravitationalHamiltonian {
        inertia,
        omega,
        g,
        kinetic: 1.0 / (2.0 * inertia),
        stiffness: 0.5 * inertia * omega * (omega + g),
        cross: -inertia * omega * g,
    })
}

/// Exponents of (kg, m, s).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Dimension(pub [i32; 3]);

impl Dimension {
    pub const NONE: Dimension = Dimension([0, 0, 0]);
    pub const TIME: Dimension = Dimension([0, 0, 1]);
    pub const RATE: Dimension = Dimension([0, 0, -1]);
    pub const ACTION: Dimension = Dimension([1, 2, -1]);
    pub const INERTIA: Dimension = Dimension([1, 2, 0]);

    pub fn mul(self, o: Dimension) -> Dimension {
        Dimension([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn div(self, o: Dimension) -> Dimension {
        Dimension([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn pow(self, k: i32) -> Dimension {
        Dimension([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }
}

/// A value with its SI dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub dim: Dimension,
}

/// Result of restoring units on the dimensionless bound d/ds Var^(e) ≥ 2|g̃|.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitsAudit {
    /// ħIω · ω · 2|g̃| with g̃ = g/ω.
    pub restored: Quantity,
    /// 2 g ħ I ω.
    pub expected: Quantity,
    /// Dimension of d Var(L)/dt.
    pub rate_of_angular_momentum_variance: Dimension,
    pub consistent: bool,
}

/// Var(L) = ħIω Var(p) and t = s/ω, so the dimensionless rate bound 2|g̃|
/// becomes 2|g̃| ħIω² in SI units.
pub fn units_audit(g: f64, inertia: f64, omega: f64) -> UnitsAudit {
    let g_tilde = g / omega;
    let variance_scale = Quantity { value: HBAR * inertia * omega, dim: Dimension::ACTION.mul(Dimension::INERTIA).mul(Dimension::RATE) };
    let time_scale = Quantity { value: 1.0 / omega, dim: Dimension::TIME };
    let restored = Quantity {
        value: 2.0 * g_tilde.abs() * variance_scale.value / time_scale.value,
        dim: variance_scale.dim.div(time_scale.dim),
    };
    let expected = Quantity {
        value: 2.0 * g * HBAR * inertia * omega,
        dim: Dimension::RATE.mul(Dimension::ACTION).mul(Dimension::INERTIA).mul(Dimension::RATE),
    };
    let angular_momentum = Dimension::ACTION;
    let rate_dim = angular_momentum.pow(2).div(Dimension::TIME);
    let consistent = restored.dim == expected.dim
        && expected.dim == rate_dim
        && (restored.value - expected.value).abs() <= 1e-12 * expected.value.abs();
    UnitsAudit { restored, expected, rate_of_angular_momentum_variance: rate_dim, consistent }
}
