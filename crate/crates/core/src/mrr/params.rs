use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{parse_quantity, Dimension};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const HBAR: f64 = 1.054_571_817e-34;

/// Static parameters of an add-drop silicon microring with two identical
/// couplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrrParams {
    /// Ring radius (m).
    pub radius: f64,
    /// Linear effective index entering the resonance condition.
    pub n0: f64,
    /// Group index, sets the round-trip time.
    pub n_group: f64,
    /// Thermo-optic coefficient (1/K).
    pub dn_dt: f64,
    /// Free-carrier dispersion coefficient (m³), index drop per carrier.
    pub dn_dn: f64,
    pub q_intrinsic: f64,
    /// Power coupling per coupler, κ².
    pub coupling_k2: f64,
    pub tau_fc: f64,
    pub tau_th: f64,
    /// Carrier generation by two-photon absorption, m⁻³ s⁻¹ per J².
    pub tpa_gen_coeff: f64,
    /// Two-photon energy loss rate per stored joule (1/(J·s)).
    pub tpa_loss_coeff: f64,
    /// Free-carrier absorption rate per carrier density (m³/s).
    pub fca_loss_coeff: f64,
    /// Temperature rise per absorbed joule (K/J).
    pub thermal_heating_coeff: f64,
    /// Share of the intrinsic loss that is absorbed and heats the ring.
    pub absorbed_fraction: f64,
    /// Cold resonance wavelength (m).
    pub cold_resonance_wavelength: f64,
}

/// Silicon material constants used to derive nonlinear coefficients.
const BETA_TPA: f64 = 8.4e-12; // m/W
const SIGMA_FCA: f64 = 1.45e-21; // m²
const RHO_CP: f64 = 1.63e6; // J/(m³·K)
const DN_DT_SI: f64 = 1.86e-4;
const DN_DN_SI: f64 = 1.73e-27;

/// Heated volume over optical mode volume for the shipped presets. Chosen
/// so the self-pulsing preset oscillates at 0.5 to 1.2 MHz.
pub const HEATED_VOLUME_FACTOR: f64 = 16.0;

impl MrrParams {
    /// Ring with silicon nonlinear coefficients derived from a 450×220 nm
    /// strip waveguide mode volume. `thermal_volume_factor` scales the
    /// heated volume relative to the optical mode volume.
    pub fn silicon(
        radius: f64,
        q_intrinsic: f64,
        coupling_k2: f64,
        tau_fc: f64,
        tau_th: f64,
        thermal_volume_factor: f64,
    ) -> Self {
        let n_group: f64 = 4.7;
        let lambda = 1.55e-6;
        let volume = 2.0 * PI * radius * 450e-9 * 220e-9;
        let omega = 2.0 * PI * SPEED_OF_LIGHT / lambda;
        let tpa_loss = BETA_TPA * SPEED_OF_LIGHT.powi(2) / (n_group.powi(2) * volume);
        Self {
            radius,
            n0: 2.45,
            n_group,
            dn_dt: DN_DT_SI,
            dn_dn: DN_DN_SI,
            q_intrinsic,
            coupling_k2,
            tau_fc,
            tau_th,
            tpa_gen_coeff: tpa_loss / (2.0 * HBAR * omega * volume),
            tpa_loss_coeff: tpa_loss,
            fca_loss_coeff: SPEED_OF_LIGHT * SIGMA_FCA / n_group,
            thermal_heating_coeff: 1.0 / (RHO_CP * volume * thermal_volume_factor),
            absorbed_fraction: 0.5,
            cold_resonance_wavelength: lambda,
        }
    }

    /// Same ring with every nonlinear coefficient set to zero.
    pub fn linearized(&self) -> Self {
        Self {
            tpa_gen_coeff: 0.0,
            tpa_loss_coeff: 0.0,
            fca_loss_coeff: 0.0,
            thermal_heating_coeff: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius", self.radius),
            ("n0", self.n0),
            ("n_group", self.n_group),
            ("dn_dt", self.dn_dt),
            ("dn_dn", self.dn_dn),
            ("q_intrinsic", self.q_intrinsic),
            ("tau_fc", self.tau_fc),
            ("tau_th", self.tau_th),
            ("cold_resonance_wavelength", self.cold_resonance_wavelength),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        let non_negative = [
            ("tpa_gen_coeff", self.tpa_gen_coeff),
            ("tpa_loss_coeff", self.tpa_loss_coeff),
            ("fca_loss_coeff", self.fca_loss_coeff),
            ("thermal_heating_coeff", self.thermal_heating_coeff),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(
                    name,
                    format!("must be non-negative, got {v}"),
                ));
            }
        }
        if !(self.coupling_k2 > 0.0 && self.coupling_k2 < 1.0) {
            return Err(Error::config("coupling_k2", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.absorbed_fraction) {
            return Err(Error::config("absorbed_fraction", "must lie in [0, 1]"));
        }
        if self.tau_fc >= self.tau_th {
            return Err(Error::config("tau_fc", "must be shorter than tau_th"));
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.tpa_gen_coeff == 0.0
            && self.tpa_loss_coeff == 0.0
            && self.fca_loss_coeff == 0.0
            && self.thermal_heating_coeff == 0.0
    }

    pub fn cold_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.cold_resonance_wavelength
    }

    pub fn round_trip_time(&self) -> f64 {
        2.0 * PI * self.radius * self.n_group / SPEED_OF_LIGHT
    }

    /// Resonance order `m` with `m·λ = 2πR·n0`.
    pub fn resonance_order(&self) -> u32 {
        (2.0 * PI * self.radius * self.n0 / self.cold_resonance_wavelength).round() as u32
    }

    /// Energy decay rate through one coupler, `2γ_e = κ²/T_rt`.
    pub fn coupling_rate(&self) -> f64 {
        self.coupling_k2 / self.round_trip_time()
    }

    pub fn intrinsic_decay_rate(&self) -> f64 {
        2.0 * PI * self.cold_frequency() / self.q_intrinsic
    }

    /// Loaded energy decay rate: intrinsic loss plus both couplers.
    pub fn loaded_decay_rate(&self) -> f64 {
        self.intrinsic_decay_rate() + 2.0 * self.coupling_rate()
    }

    /// Loaded photon (energy) lifetime τ_ph.
    pub fn photon_lifetime(&self) -> f64 {
        1.0 / self.loaded_decay_rate()
    }

    pub fn loaded_q(&self) -> f64 {
        2.0 * PI * self.cold_frequency() * self.photon_lifetime()
    }

    /// Full width at half maximum of the loaded resonance (Hz).
    pub fn linewidth(&self) -> f64 {
        self.loaded_decay_rate() / (2.0 * PI)
    }

    pub fn linewidth_wavelength(&self) -> f64 {
        self.cold_resonance_wavelength / self.loaded_q()
    }

    /// Default fixed RK4 step, τ_ph / 20.
    pub fn default_dt(&self) -> f64 {
        self.photon_lifetime() / 20.0
    }

    /// Refractive index change `dn/dT·ΔT − dn/dN·ΔN`.
    pub fn index_change(&self, delta_n: f64, delta_t: f64) -> f64 {
        self.dn_dt * delta_t - self.dn_dn * delta_n
    }

    /// Hot resonance wavelength from `m·λ = 2πR·n(P)`.
    pub fn resonance_wavelength(&self, delta_n: f64, delta_t: f64) -> f64 {
        self.cold_resonance_wavelength * (1.0 + self.index_change(delta_n, delta_t) / self.n0)
    }

    /// Laser detuning in Hz (`ν_laser − ν_cold`) for a wavelength offset
    /// `λ_laser − λ_cold`.
    pub fn detuning_from_wavelength(&self, delta_lambda: f64) -> f64 {
        let lambda = self.cold_resonance_wavelength;
        SPEED_OF_LIGHT / (lambda + delta_lambda) - SPEED_OF_LIGHT / lambda
    }

    /// Overwrite fields from a TOML document. Scalars may be bare SI
    /// numbers or unit-suffixed strings (`tau_fc = "45ns"`).
    pub fn apply_toml(&mut self, table: &toml::Table) -> Result<()> {
        for (key, value) in table {
            let dim = match key.as_str() {
                "radius" | "cold_resonance_wavelength" => Dimension::Length,
                "tau_fc" | "tau_th" => Dimension::Time,
                "preset" => continue,
                _ => Dimension::Dimensionless,
            };
            let v = match value {
                toml::Value::Float(f) => *f,
                toml::Value::Integer(i) => *i as f64,
                toml::Value::String(s) => {
                    parse_quantity(s, dim).map_err(|e| Error::config(key, e.to_string()))?
                }
                _ => {
                    return Err(Error::config(
                        key,
                        "expected a number or unit-suffixed string",
                    ))
                }
            };
            let slot = match key.as_str() {
                "radius" => &mut self.radius,
                "n0" => &mut self.n0,
                "n_group" => &mut self.n_group,
                "dn_dt" => &mut self.dn_dt,
                "dn_dn" => &mut self.dn_dn,
                "q_intrinsic" => &mut self.q_intrinsic,
                "coupling_k2" => &mut self.coupling_k2,
                "tau_fc" => &mut self.tau_fc,
                "tau_th" => &mut self.tau_th,
                "tpa_gen_coeff" => &mut self.tpa_gen_coeff,
                "tpa_loss_coeff" => &mut self.tpa_loss_coeff,
                "fca_loss_coeff" => &mut self.fca_loss_coeff,
                "thermal_heating_coeff" => &mut self.thermal_heating_coeff,
                "absorbed_fraction" => &mut self.absorbed_fraction,
                "cold_resonance_wavelength" => &mut self.cold_resonance_wavelength,
                _ => return Err(Error::config(key, "unknown ring parameter")),
            };
            *slot = v;
        }
        self.validate()
    }

    /// Parse a ring description. An optional `preset = "<name>"` key picks
    /// the base parameters; other keys override them.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.to_string()))?;
        let base = match table.get("preset") {
            Some(toml::Value::String(name)) => Preset::by_name(name)
                .ok_or_else(|| Error::config("preset", format!("unknown preset `{name}`")))?,
            Some(_) => return Err(Error::config("preset", "expected a string")),
            None => Preset::SelfPulsing,
        };
        let mut params = base.params();
        params.apply_toml(&table)?;
        Ok(params)
    }
}

/// Named device parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 7 µm ring, Q_i = 1.11e5, κ² = 0.063, τ_fc = 45 ns, τ_th = 270 ns;
    /// nonlinear coefficients calibrated to put self-pulsing in the sub-MHz band.
    SelfPulsing,
    /// Ring used for delayed logic tasks: τ_fc = 4.5 ns, τ_th = 100 ns.
    Logic,
    /// Ring for the external-feedback reservoir: loaded Q = 3.19e4,
    /// τ_fc = 3 ns, τ_th = 83 ns.
    Feedback,
    /// Self-pulsing geometry with every nonlinearity switched off.
    Linear,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::SelfPulsing,
        Preset::Logic,
        Preset::Feedback,
        Preset::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SelfPulsing => "self-pulsing",
            Preset::Logic => "logic",
            Preset::Feedback => "feedback",
            Preset::Linear => "linear",
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Preset::SelfPulsing => {
                "7 um ring, Qi=1.11e5, k2=0.063, tau_fc=45 ns, tau_th=270 ns, sub-MHz self-pulsing"
            }
            Preset::Logic => "7 um ring, tau_fc=4.5 ns, tau_th=100 ns, delayed logic reservoir",
            Preset::Feedback => {
                "7 um ring, loaded Q=3.19e4, tau_fc=3 ns, tau_th=83 ns, feedback reservoir"
            }
            Preset::Linear => "self-pulsing geometry with nonlinear coefficients zeroed",
        }
    }

    pub fn params(self) -> MrrParams {
        match self {
            Preset::SelfPulsing => {
                MrrParams::silicon(7e-6, 1.11e5, 0.063, 45e-9, 270e-9, HEATED_VOLUME_FACTOR)
            }
            Preset::Logic => {
                MrrParams::silicon(7e-6, 1.11e5, 0.063, 4.5e-9, 100e-9, HEATED_VOLUME_FACTOR)
            }
            Preset::Feedback => {
                MrrParams::silicon(7e-6, 2.0e5, 0.011, 3e-9, 83e-9, HEATED_VOLUME_FACTOR)
            }
            Preset::Linear => Preset::SelfPulsing.params().linearized(),
        }
    }
}
