//! Default scenario parameters, the key/value overrides they accept, and
//! the ligand species table.
//!
//! A [`ScenarioConfig`] holds raw knob values exactly as a config file
//! states them (geometry in mm, rates in 1/(M s), means as K_D multiples).
//! [`Scenario::from_config`] validates them and derives the working
//! quantities every model consumes: SI geometry, per-species unbinding
//! rates, molecule counts, and the count correlation matrix.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::units::{to_si, Quantity};
use crate::{Error, Result};

/// Avogadro constant, 1/mol.
pub const AVOGADRO_PER_MOL: f64 = 6.02214076e23;

/// Boltzmann constant in J/K, the rounded value the parameter tables use.
pub const BOLTZMANN_J_PER_K: f64 = 1.3807e-23;

/// Boltzmann constant in the mm-g-s table convention, mm^2 g/(K s^2).
pub const BOLTZMANN_MMGS: f64 = 1.3807e-14;

/// One row of the supported heavy-metal table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementEntry {
    pub symbol: &'static str,
    pub radius_pm: f64,
    pub molar_mass_g_mol: f64,
}

/// Metals the reservoir and capacity models know about.
pub const ELEMENTS: [ElementEntry; 5] = [
    ElementEntry { symbol: "zn", radius_pm: 142.0, molar_mass_g_mol: 65.39 },
    ElementEntry { symbol: "cu", radius_pm: 145.0, molar_mass_g_mol: 63.55 },
    ElementEntry { symbol: "cd", radius_pm: 161.0, molar_mass_g_mol: 112.41 },
    ElementEntry { symbol: "hg", radius_pm: 171.0, molar_mass_g_mol: 200.59 },
    ElementEntry { symbol: "pb", radius_pm: 154.0, molar_mass_g_mol: 207.20 },
];

/// Looks up an element by its lowercase symbol.
#[must_use]
pub fn element(symbol: &str) -> Option<&'static ElementEntry> {
    ELEMENTS.iter().find(|e| e.symbol == symbol)
}

/// One ligand species competing for the shared receptor.
#[derive(Debug, Clone, PartialEq)]
pub struct LigandSpecies {
    pub name: String,
    /// Atomic radius, used for stored-cargo volume fractions.
    pub radius_pm: f64,
    pub molar_mass_g_mol: f64,
    /// Binding rate constant, 1/(M s).
    pub k_on_per_molar_s: f64,
    /// Unbinding rate, 1/s.
    pub k_off_per_s: f64,
}

impl LigandSpecies {
    /// Dissociation constant K_D = k_off / k_on, in molar.
    #[must_use]
    pub fn k_d_molar(&self) -> f64 {
        self.k_off_per_s / self.k_on_per_molar_s
    }

    /// Atomic radius in metres.
    #[must_use]
    pub fn radius_m(&self) -> f64 {
        self.radius_pm * 1e-12
    }

    /// Mass of a single atom in kg.
    #[must_use]
    pub fn particle_mass_kg(&self) -> f64 {
        self.molar_mass_g_mol * 1e-3 / AVOGADRO_PER_MOL
    }

    fn validate(&self) -> Result<()> {
        let fields = [
            ("radius_pm", self.radius_pm),
            ("molar_mass_g_mol", self.molar_mass_g_mol),
            ("k_on_per_molar_s", self.k_on_per_molar_s),
            ("k_off_per_s", self.k_off_per_s),
        ];
        for (label, value) in fields {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Config(format!(
                    "species {}: {label} must be finite and positive, got {value}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Number of molecules of a species dissolved at concentration
/// `concentration_molar` in a reception volume of `volume_l` litres.
pub fn counts_from_concentration(concentration_molar: f64, volume_l: f64) -> Result<f64> {
    if !concentration_molar.is_finite() || concentration_molar < 0.0 {
        return Err(Error::Domain(format!(
            "concentration must be finite and non-negative, got {concentration_molar}"
        )));
    }
    if !volume_l.is_finite() || volume_l <= 0.0 {
        return Err(Error::Domain(format!(
            "volume must be finite and positive, got {volume_l} L"
        )));
    }
    Ok(concentration_molar * volume_l * AVOGADRO_PER_MOL)
}

/// Molar concentration corresponding to `count` molecules in `volume_l` litres.
pub fn concentration_from_counts(count: f64, volume_l: f64) -> Result<f64> {
    if !count.is_finite() || count < 0.0 {
        return Err(Error::Domain(format!(
            "count must be finite and non-negative, got {count}"
        )));
    }
    if !volume_l.is_finite() || volume_l <= 0.0 {
        return Err(Error::Domain(format!(
            "volume must be finite and positive, got {volume_l} L"
        )));
    }
    Ok(count / (volume_l * AVOGADRO_PER_MOL))
}

/// Unbinding rate of the lumped interferer: the fastest-unbinding metal's
/// rate divided by the affinity ratio, so the interferer always unbinds
/// faster than every metal while the ratio stays below one.
pub fn derive_interferer_unbinding(metal_k_offs: &[f64], affinity_ratio: f64) -> Result<f64> {
    if metal_k_offs.is_empty() {
        return Err(Error::Domain("need at least one metal unbinding rate".to_string()));
    }
    if !(affinity_ratio > 0.0 && affinity_ratio <= 1.0) {
        return Err(Error::Domain(format!(
            "affinity ratio must lie in (0, 1], got {affinity_ratio}"
        )));
    }
    let mut max = f64::NEG_INFINITY;
    for &k in metal_k_offs {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::Domain(format!(
                "unbinding rates must be finite and positive, got {k}"
            )));
        }
        max = max.max(k);
    }
    Ok(max / affinity_ratio)
}

/// Raw scenario knobs, exactly as a config file states them.
///
/// Geometry is in mm, water properties in the mm-g-s convention, rate
/// constants in 1/(M s), dissociation constants in molar, and ligand means
/// as multiples of the respective K_D.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub temperature_k: f64,
    pub water_viscosity_g_mm_s: f64,
    pub water_density_g_mm3: f64,
    pub water_volume_fraction: f64,
    pub device_radius_mm: f64,
    pub device_length_mm: f64,
    pub pump_inner_radius_mm: f64,
    pub pump_outer_radius_mm: f64,
    pub pump_rpm: f64,
    pub pump_aspect_ratio: f64,
    pub pump_swept_angle_rad: f64,
    pub k_on_zn: f64,
    pub kd_zn: f64,
    pub k_on_cd: f64,
    pub kd_cd: f64,
    pub k_on_in: f64,
    pub affinity_ratio: f64,
    pub volume_l: f64,
    pub interferer_mean_kd: f64,
    pub cd_mean_kd: f64,
    pub bit0_kd: f64,
    pub bit1_kd: f64,
    pub rho_zn_cd: f64,
    pub rho_zn_in: f64,
    pub rho_cd_in: f64,
    pub count_cov: f64,
    pub num_events: u64,
    pub population_samples: u64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            temperature_k: 300.0,
            water_viscosity_g_mm_s: 0.0008509,
            water_density_g_mm3: 996.64e-6,
            water_volume_fraction: 0.9,
            device_radius_mm: 3.0,
            device_length_mm: 12.0,
            pump_inner_radius_mm: 1.19,
            pump_outer_radius_mm: 2.38,
            pump_rpm: 500.0,
            pump_aspect_ratio: 0.1,
            pump_swept_angle_rad: core::f64::consts::FRAC_PI_2,
            k_on_zn: 5.1e7,
            kd_zn: 6.0e-6,
            k_on_cd: 5.7e7,
            kd_cd: 5.1e-6,
            k_on_in: 4.0e7,
            affinity_ratio: 0.2,
            volume_l: 4.0e-12,
            interferer_mean_kd: 2.0,
            cd_mean_kd: 3.0,
            bit0_kd: 4.0,
            bit1_kd: 5.0,
            rho_zn_cd: 0.7,
            rho_zn_in: 0.2,
            rho_cd_in: 0.2,
            count_cov: 0.1,
            num_events: 1000,
            population_samples: 20_000,
            seed: 42,
        }
    }
}

/// A parsed config value: most keys are floats, the sampling knobs are
/// unsigned integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfigValue {
    Float(f64),
    Integer(u64),
}

impl ConfigValue {
    #[must_use]
    pub fn as_f64(self) -> f64 {
        match self {
            ConfigValue::Float(v) => v,
            ConfigValue::Integer(v) => v as f64,
        }
    }
}

/// Every key a scenario config file may set, with its unit.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("temperature_k", "K"),
    ("water_viscosity_g_mm_s", "g/(mm s)"),
    ("water_density_g_mm3", "g/mm^3"),
    ("water_volume_fraction", "1"),
    ("device_radius_mm", "mm"),
    ("device_length_mm", "mm"),
    ("pump_inner_radius_mm", "mm"),
    ("pump_outer_radius_mm", "mm"),
    ("pump_rpm", "rpm"),
    ("pump_aspect_ratio", "1"),
    ("pump_swept_angle_rad", "rad"),
    ("k_on_zn", "1/(M s)"),
    ("kd_zn", "M"),
    ("k_on_cd", "1/(M s)"),
    ("kd_cd", "M"),
    ("k_on_in", "1/(M s)"),
    ("affinity_ratio", "1"),
    ("volume_l", "L"),
    ("interferer_mean_kd", "K_D multiples"),
    ("cd_mean_kd", "K_D multiples"),
    ("bit0_kd", "K_D multiples"),
    ("bit1_kd", "K_D multiples"),
    ("rho_zn_cd", "1"),
    ("rho_zn_in", "1"),
    ("rho_cd_in", "1"),
    ("count_cov", "1"),
    ("num_events", "events"),
    ("population_samples", "samples"),
    ("seed", "1"),
];

const INTEGER_KEYS: [&str; 3] = ["num_events", "population_samples", "seed"];

impl ScenarioConfig {
    /// Sets one knob from its config-file spelling. Unknown keys and
    /// malformed values are config errors.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        if INTEGER_KEYS.contains(&key) {
            let parsed: u64 = value.trim().parse().map_err(|_| {
                Error::Config(format!("key {key} needs an unsigned integer, got {value:?}"))
            })?;
            match key {
                "num_events" => self.num_events = parsed,
                "population_samples" => self.population_samples = parsed,
                "seed" => self.seed = parsed,
                _ => unreachable!(),
            }
            return Ok(());
        }
        let parsed: f64 = value.trim().parse().map_err(|_| {
            Error::Config(format!("key {key} needs a number, got {value:?}"))
        })?;
        let slot = match key {
            "temperature_k" => &mut self.temperature_k,
            "water_viscosity_g_mm_s" => &mut self.water_viscosity_g_mm_s,
            "water_density_g_mm3" => &mut self.water_density_g_mm3,
            "water_volume_fraction" => &mut self.water_volume_fraction,
            "device_radius_mm" => &mut self.device_radius_mm,
            "device_length_mm" => &mut self.device_length_mm,
            "pump_inner_radius_mm" => &mut self.pump_inner_radius_mm,
            "pump_outer_radius_mm" => &mut self.pump_outer_radius_mm,
            "pump_rpm" => &mut self.pump_rpm,
            "pump_aspect_ratio" => &mut self.pump_aspect_ratio,
            "pump_swept_angle_rad" => &mut self.pump_swept_angle_rad,
            "k_on_zn" => &mut self.k_on_zn,
            "kd_zn" => &mut self.kd_zn,
            "k_on_cd" => &mut self.k_on_cd,
            "kd_cd" => &mut self.kd_cd,
            "k_on_in" => &mut self.k_on_in,
            "affinity_ratio" => &mut self.affinity_ratio,
            "volume_l" => &mut self.volume_l,
            "interferer_mean_kd" => &mut self.interferer_mean_kd,
            "cd_mean_kd" => &mut self.cd_mean_kd,
            "bit0_kd" => &mut self.bit0_kd,
            "bit1_kd" => &mut self.bit1_kd,
            "rho_zn_cd" => &mut self.rho_zn_cd,
            "rho_zn_in" => &mut self.rho_zn_in,
            "rho_cd_in" => &mut self.rho_cd_in,
            "count_cov" => &mut self.count_cov,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        };
        *slot = parsed;
        Ok(())
    }

    /// Reads one knob back by its config-file spelling.
    #[must_use]
    pub fn value(&self, key: &str) -> Option<ConfigValue> {
        let v = match key {
            "temperature_k" => self.temperature_k,
            "water_viscosity_g_mm_s" => self.water_viscosity_g_mm_s,
            "water_density_g_mm3" => self.water_density_g_mm3,
            "water_volume_fraction" => self.water_volume_fraction,
            "device_radius_mm" => self.device_radius_mm,
            "device_length_mm" => self.device_length_mm,
            "pump_inner_radius_mm" => self.pump_inner_radius_mm,
            "pump_outer_radius_mm" => self.pump_outer_radius_mm,
            "pump_rpm" => self.pump_rpm,
            "pump_aspect_ratio" => self.pump_aspect_ratio,
            "pump_swept_angle_rad" => self.pump_swept_angle_rad,
            "k_on_zn" => self.k_on_zn,
            "kd_zn" => self.kd_zn,
            "k_on_cd" => self.k_on_cd,
            "kd_cd" => self.kd_cd,
            "k_on_in" => self.k_on_in,
            "affinity_ratio" => self.affinity_ratio,
            "volume_l" => self.volume_l,
            "interferer_mean_kd" => self.interferer_mean_kd,
            "cd_mean_kd" => self.cd_mean_kd,
            "bit0_kd" => self.bit0_kd,
            "bit1_kd" => self.bit1_kd,
            "rho_zn_cd" => self.rho_zn_cd,
            "rho_zn_in" => self.rho_zn_in,
            "rho_cd_in" => self.rho_cd_in,
            "count_cov" => self.count_cov,
            "num_events" => return Some(ConfigValue::Integer(self.num_events)),
            "population_samples" => return Some(ConfigValue::Integer(self.population_samples)),
            "seed" => return Some(ConfigValue::Integer(self.seed)),
            _ => return None,
        };
        Some(ConfigValue::Float(v))
    }
}

/// A validated scenario with all derived quantities in SI units.
///
/// `species` lists the metals first and the lumped interferer last;
/// `detected` indexes the signalled metal. `mean_counts` holds the
/// population mean molecule count per species, with the detected slot
/// carrying the bit-0 count (the per-bit population model overrides it).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub species: Vec<LigandSpecies>,
    pub detected: usize,
    pub mean_counts: Vec<f64>,
    pub correlations: DMatrix<f64>,
    pub bit0_concentration_molar: f64,
    pub bit1_concentration_molar: f64,
    pub count_cov: f64,
    pub num_events: usize,
    pub population_samples: usize,
    pub seed: u64,
    pub temperature_k: f64,
    pub water_viscosity_pa_s: f64,
    pub water_density_kg_m3: f64,
    pub water_volume_fraction: f64,
    pub volume_l: f64,
    pub device_radius_m: f64,
    pub device_length_m: f64,
    pub pump_inner_radius_m: f64,
    pub pump_outer_radius_m: f64,
    pub pump_rpm: f64,
    pub pump_aspect_ratio: f64,
    pub pump_swept_angle_rad: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::from_config(&ScenarioConfig::default())
            .expect("default scenario must validate")
    }
}

fn require(cond: bool, message: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(message()))
    }
}

impl Scenario {
    /// Validates raw knobs and derives the working scenario.
    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        let positive = [
            ("temperature_k", config.temperature_k),
            ("water_viscosity_g_mm_s", config.water_viscosity_g_mm_s),
            ("water_density_g_mm3", config.water_density_g_mm3),
            ("device_radius_mm", config.device_radius_mm),
            ("device_length_mm", config.device_length_mm),
            ("pump_inner_radius_mm", config.pump_inner_radius_mm),
            ("pump_outer_radius_mm", config.pump_outer_radius_mm),
            ("pump_rpm", config.pump_rpm),
            ("pump_aspect_ratio", config.pump_aspect_ratio),
            ("pump_swept_angle_rad", config.pump_swept_angle_rad),
            ("k_on_zn", config.k_on_zn),
            ("kd_zn", config.kd_zn),
            ("k_on_cd", config.k_on_cd),
            ("kd_cd", config.kd_cd),
            ("k_on_in", config.k_on_in),
            ("volume_l", config.volume_l),
            ("interferer_mean_kd", config.interferer_mean_kd),
            ("cd_mean_kd", config.cd_mean_kd),
            ("bit0_kd", config.bit0_kd),
            ("bit1_kd", config.bit1_kd),
            ("count_cov", config.count_cov),
        ];
        for (key, value) in positive {
            require(value.is_finite() && value > 0.0, || {
                format!("{key} must be finite and positive, got {value}")
            })?;
        }
        require(
            config.water_volume_fraction > 0.0 && config.water_volume_fraction <= 1.0,
            || format!("water_volume_fraction must lie in (0, 1], got {}", config.water_volume_fraction),
        )?;
        require(
            config.pump_inner_radius_mm < config.pump_outer_radius_mm,
            || format!(
                "pump_inner_radius_mm ({}) must be smaller than pump_outer_radius_mm ({})",
                config.pump_inner_radius_mm, config.pump_outer_radius_mm
            ),
        )?;
        require(
            config.pump_swept_angle_rad <= 2.0 * core::f64::consts::PI,
            || format!("pump_swept_angle_rad must not exceed 2*pi, got {}", config.pump_swept_angle_rad),
        )?;
        require(
            config.affinity_ratio > 0.0 && config.affinity_ratio <= 1.0,
            || format!("affinity_ratio must lie in (0, 1], got {}", config.affinity_ratio),
        )?;
        require(config.bit0_kd < config.bit1_kd, || {
            format!(
                "bit0_kd ({}) must be smaller than bit1_kd ({})",
                config.bit0_kd, config.bit1_kd
            )
        })?;
        for (key, rho) in [
            ("rho_zn_cd", config.rho_zn_cd),
            ("rho_zn_in", config.rho_zn_in),
            ("rho_cd_in", config.rho_cd_in),
        ] {
            require(rho.is_finite() && (-1.0..=1.0).contains(&rho), || {
                format!("{key} must lie in [-1, 1], got {rho}")
            })?;
        }
        require(config.num_events >= 1, || "num_events must be at least 1".to_string())?;
        require(config.population_samples >= 1, || {
            "population_samples must be at least 1".to_string()
        })?;

        let zinc = LigandSpecies {
            name: "zn".to_string(),
            radius_pm: 142.0,
            molar_mass_g_mol: 65.39,
            k_on_per_molar_s: config.k_on_zn,
            k_off_per_s: config.k_on_zn * config.kd_zn,
        };
        let cadmium = LigandSpecies {
            name: "cd".to_string(),
            radius_pm: 161.0,
            molar_mass_g_mol: 112.41,
            k_on_per_molar_s: config.k_on_cd,
            k_off_per_s: config.k_on_cd * config.kd_cd,
        };
        let interferer_k_off = derive_interferer_unbinding(
            &[zinc.k_off_per_s, cadmium.k_off_per_s],
            config.affinity_ratio,
        )?;
        // Placeholder size and mass: the interferer is never stored as cargo
        // and never enters a geometric or viscous computation.
        let interferer = LigandSpecies {
            name: "in".to_string(),
            radius_pm: 150.0,
            molar_mass_g_mol: 100.0,
            k_on_per_molar_s: config.k_on_in,
            k_off_per_s: interferer_k_off,
        };
        for species in [&zinc, &cadmium, &interferer] {
            species.validate()?;
        }

        let bit0_concentration = config.bit0_kd * zinc.k_d_molar();
        let bit1_concentration = config.bit1_kd * zinc.k_d_molar();
        let mean_counts = alloc::vec![
            counts_from_concentration(bit0_concentration, config.volume_l)?,
            counts_from_concentration(config.cd_mean_kd * cadmium.k_d_molar(), config.volume_l)?,
            counts_from_concentration(
                config.interferer_mean_kd * interferer.k_d_molar(),
                config.volume_l,
            )?,
        ];

        let correlations = DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0,
                config.rho_zn_cd,
                config.rho_zn_in,
                config.rho_zn_cd,
                1.0,
                config.rho_cd_in,
                config.rho_zn_in,
                config.rho_cd_in,
                1.0,
            ],
        );
        require(correlations.clone().cholesky().is_some(), || {
            "correlation matrix is not positive definite".to_string()
        })?;

        Ok(Scenario {
            species: alloc::vec![zinc, cadmium, interferer],
            detected: 0,
            mean_counts,
            correlations,
            bit0_concentration_molar: bit0_concentration,
            bit1_concentration_molar: bit1_concentration,
            count_cov: config.count_cov,
            num_events: config.num_events as usize,
            population_samples: config.population_samples as usize,
            seed: config.seed,
            temperature_k: config.temperature_k,
            water_viscosity_pa_s: to_si(Quantity::Viscosity, config.water_viscosity_g_mm_s),
            water_density_kg_m3: to_si(Quantity::Density, config.water_density_g_mm3),
            water_volume_fraction: config.water_volume_fraction,
            volume_l: config.volume_l,
            device_radius_m: to_si(Quantity::Length, config.device_radius_mm),
            device_length_m: to_si(Quantity::Length, config.device_length_mm),
            pump_inner_radius_m: to_si(Quantity::Length, config.pump_inner_radius_mm),
            pump_outer_radius_m: to_si(Quantity::Length, config.pump_outer_radius_mm),
            pump_rpm: config.pump_rpm,
            pump_aspect_ratio: config.pump_aspect_ratio,
            pump_swept_angle_rad: config.pump_swept_angle_rad,
            config: config.clone(),
        })
    }

    /// The metals, excluding the lumped interferer.
    #[must_use]
    pub fn metals(&self) -> &[LigandSpecies] {
        &self.species[..self.species.len() - 1]
    }

    /// The lumped interferer species.
    #[must_use]
    pub fn interferer(&self) -> &LigandSpecies {
        self.species.last().expect("scenario always has species")
    }

    /// The metal whose concentration carries the transmitted bit.
    #[must_use]
    pub fn detected_species(&self) -> &LigandSpecies {
        &self.species[self.detected]
    }

    /// Detected-metal concentration transmitted for `bit`.
    #[must_use]
    pub fn bit_concentration_molar(&self, bit: u8) -> f64 {
        if bit == 0 {
            self.bit0_concentration_molar
        } else {
            self.bit1_concentration_molar
        }
    }

    /// Detected-metal molecule count transmitted for `bit`.
    #[must_use]
    pub fn bit_count(&self, bit: u8) -> f64 {
        self.bit_concentration_molar(bit) * self.volume_l * AVOGADRO_PER_MOL
    }

    /// Pump angular velocity in rad/s.
    #[must_use]
    pub fn pump_angular_velocity(&self) -> f64 {
        self.pump_rpm * 2.0 * core::f64::consts::PI / 60.0
    }

    /// Same scenario with bit levels pushed into receptor saturation
    /// (39 and 40 dissociation constants of the detected metal).
    pub fn saturated(&self) -> Result<Scenario> {
        let mut config = self.config.clone();
        config.bit0_kd = 39.0;
        config.bit1_kd = 40.0;
        Scenario::from_config(&config)
    }

    /// Same scenario with a different interferer affinity ratio.
    pub fn with_affinity_ratio(&self, affinity_ratio: f64) -> Result<Scenario> {
        let mut config = self.config.clone();
        config.affinity_ratio = affinity_ratio;
        Scenario::from_config(&config)
    }

    /// Same scenario with the interferer population mean at `multiple`
    /// interferer dissociation constants.
    pub fn with_interferer_mean(&self, multiple: f64) -> Result<Scenario> {
        let mut config = self.config.clone();
        config.interferer_mean_kd = multiple;
        Scenario::from_config(&config)
    }

    /// Same scenario with the bit-0 level at `ratio` times the bit-1 level.
    pub fn with_bit_ratio(&self, ratio: f64) -> Result<Scenario> {
        let mut config = self.config.clone();
        config.bit0_kd = ratio * config.bit1_kd;
        Scenario::from_config(&config)
    }

    /// Same scenario with a different number of binding events per decision.
    pub fn with_num_events(&self, num_events: usize) -> Result<Scenario> {
        let mut config = self.config.clone();
        config.num_events = num_events as u64;
        Scenario::from_config(&config)
    }
}

/// Where a reported parameter value came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Built-in default.
    Default,
    /// Overridden by a config file at this line.
    File { line: usize },
    /// Computed from other parameters by the named rule.
    Derived { rule: String },
    /// Fixed physical constant.
    Constant,
}

/// One row of the parameter provenance report.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub key: String,
    pub value: ConfigValue,
    pub unit: &'static str,
    pub provenance: Provenance,
}

/// All configurable knobs of `config`, marked as defaults. Callers overlay
/// file provenance for keys a config file set.
#[must_use]
pub fn config_entries(config: &ScenarioConfig) -> Vec<ParamEntry> {
    CONFIG_KEYS
        .iter()
        .map(|&(key, unit)| ParamEntry {
            key: key.to_string(),
            value: config.value(key).expect("CONFIG_KEYS lists only valid keys"),
            unit,
            provenance: Provenance::Default,
        })
        .collect()
}

/// Quantities derived from the knobs, plus the physical constants.
#[must_use]
pub fn derived_entries(scenario: &Scenario) -> Vec<ParamEntry> {
    let derived = |key: &str, value: f64, unit: &'static str, rule: &str| ParamEntry {
        key: key.to_string(),
        value: ConfigValue::Float(value),
        unit,
        provenance: Provenance::Derived { rule: rule.to_string() },
    };
    let mut entries = alloc::vec![
        ParamEntry {
            key: "boltzmann_j_per_k".to_string(),
            value: ConfigValue::Float(BOLTZMANN_J_PER_K),
            unit: "J/K",
            provenance: Provenance::Constant,
        },
        ParamEntry {
            key: "avogadro_per_mol".to_string(),
            value: ConfigValue::Float(AVOGADRO_PER_MOL),
            unit: "1/mol",
            provenance: Provenance::Constant,
        },
    ];
    for species in &scenario.species {
        entries.push(derived(
            &format!("k_off_{}", species.name),
            species.k_off_per_s,
            "1/s",
            "k_on * K_D (interferer: max metal k_off / affinity_ratio)",
        ));
    }
    entries.push(derived(
        "kd_in",
        scenario.interferer().k_d_molar(),
        "M",
        "k_off_in / k_on_in",
    ));
    for (species, &count) in scenario.species.iter().zip(&scenario.mean_counts) {
        entries.push(derived(
            &format!("mean_count_{}", species.name),
            count,
            "molecules",
            "mean concentration * volume * N_A",
        ));
    }
    entries.push(derived(
        "bit0_count",
        scenario.bit_count(0),
        "molecules",
        "bit0_kd * kd_zn * volume * N_A",
    ));
    entries.push(derived(
        "bit1_count",
        scenario.bit_count(1),
        "molecules",
        "bit1_kd * kd_zn * volume * N_A",
    ));
    entries
}
