//! Cargo release: micropump-driven advection plus Brownian diffusion
//! through the outlet channel.
//!
//! A single-disc viscous micropump drags fluid through a C-shaped annular
//! channel. Two flow models are available: a quadratic lubrication model
//! for the annulus (pressure gradient plus Couette drag) and a generalized
//! dimensionless model that corrects the drag and pressure terms with
//! radius-ratio and aspect-ratio shape factors. At zero pressure difference
//! the generalized model is the quadratic model scaled by the aspect drag
//! factor, which approaches one as the channel flattens.
//!
//! Released molecules traverse the device length under the mean flow
//! velocity while diffusing with the Stokes-Einstein coefficient in the
//! effective medium (water plus suspended metal load). Release time is
//! reported analytically as length over velocity and measured by simulating
//! first passage with an Euler-Maruyama scheme.
//!
//! Sweep geometry conventions: the rpm sweep keeps the scenario geometry;
//! the radius-ratio sweep holds the outer radius, moving the inner radius
//! and scaling the channel height with the narrowing width at the scenario
//! aspect ratio; the aspect-ratio sweep fixes the radius ratio at 0.9,
//! holds the channel height at its baseline, and narrows the width as
//! `h / aspect`, the narrowing-channel reading under which flow and
//! velocity fall as the aspect ratio grows.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::params::{Scenario, BOLTZMANN_J_PER_K};
use crate::rng::substream;
use crate::stats::Moments;
use crate::{Error, Result};

/// Swept pump variable, shared with the energy model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Rpm,
    RadiusRatio,
    AspectRatio,
}

/// Supported rpm range for pump sweeps.
pub const RPM_RANGE: (f64, f64) = (50.0, 1000.0);
/// Supported radius-ratio range for pump sweeps.
pub const RADIUS_RATIO_RANGE: (f64, f64) = (0.1, 0.96);
/// Supported aspect-ratio range for pump sweeps.
pub const ASPECT_RATIO_RANGE: (f64, f64) = (0.1, 2.0);
/// Radius ratio the aspect-ratio sweep holds fixed.
pub const ASPECT_SWEEP_RADIUS_RATIO: f64 = 0.9;

/// Checks a swept value against its documented range.
pub fn validate_sweep_value(variable: SweepVariable, x: f64) -> Result<()> {
    let (name, (lo, hi)) = match variable {
        SweepVariable::Rpm => ("rpm", RPM_RANGE),
        SweepVariable::RadiusRatio => ("radius ratio", RADIUS_RATIO_RANGE),
        SweepVariable::AspectRatio => ("aspect ratio", ASPECT_RATIO_RANGE),
    };
    if !x.is_finite() || x < lo || x > hi {
        return Err(Error::Config(format!(
            "{name} {x} outside supported range [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// One suspended species' contribution to the effective medium.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesLoad {
    pub label: String,
    pub volume_fraction: f64,
    pub viscosity_pa_s: f64,
}

/// The fluid the pump moves: water plus suspended particle load.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidModel {
    pub temperature_k: f64,
    pub water_viscosity_pa_s: f64,
    pub water_density_kg_m3: f64,
    pub water_volume_fraction: f64,
    pub species: Vec<SpeciesLoad>,
    pub effective_viscosity_pa_s: f64,
}

/// Kinetic-theory viscosity of a suspended hard-sphere species:
/// sqrt(m k_B T) / (pi^1.5 d^2) for particle mass `m` and diameter `d`.
pub fn species_viscosity(particle_mass_kg: f64, diameter_m: f64, temperature_k: f64) -> Result<f64> {
    for (label, value) in [
        ("particle mass", particle_mass_kg),
        ("diameter", diameter_m),
        ("temperature", temperature_k),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Domain(format!(
                "{label} must be finite and positive, got {value}"
            )));
        }
    }
    Ok(Float::sqrt(particle_mass_kg * BOLTZMANN_J_PER_K * temperature_k)
        / (Float::powf(core::f64::consts::PI, 1.5) * diameter_m * diameter_m))
}

/// One particle population suspended in the stored fluid.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleLoad {
    pub label: String,
    pub radius_m: f64,
    pub particle_mass_kg: f64,
    pub count: f64,
}

/// Builds the effective medium: the non-water volume fraction is split
/// across particle species in proportion to count times radius cubed, and
/// each species adds its kinetic viscosity weighted by its fraction:
/// mu_eff = mu_water + sum_i phi_i mu_i.
pub fn fluid_model(
    water_viscosity_pa_s: f64,
    water_density_kg_m3: f64,
    water_volume_fraction: f64,
    temperature_k: f64,
    particles: &[ParticleLoad],
) -> Result<FluidModel> {
    for (label, value) in [
        ("water viscosity", water_viscosity_pa_s),
        ("water density", water_density_kg_m3),
        ("temperature", temperature_k),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Domain(format!(
                "{label} must be finite and positive, got {value}"
            )));
        }
    }
    if !(water_volume_fraction > 0.0 && water_volume_fraction <= 1.0) {
        return Err(Error::Domain(format!(
            "water volume fraction must lie in (0, 1], got {water_volume_fraction}"
        )));
    }
    let particle_fraction = 1.0 - water_volume_fraction;
    let mut volume_weights = Vec::with_capacity(particles.len());
    let mut total_weight = 0.0;
    for load in particles {
        if !load.count.is_finite() || load.count < 0.0 {
            return Err(Error::Domain(format!(
                "species {}: count must be finite and non-negative, got {}",
                load.label, load.count
            )));
        }
        let weight = load.count * Float::powi(load.radius_m, 3);
        volume_weights.push(weight);
        total_weight += weight;
    }
    if particle_fraction > 0.0 && total_weight <= 0.0 {
        return Err(Error::Domain(
            "particle volume fraction is positive but no particles are loaded".to_string(),
        ));
    }
    let mut species = Vec::with_capacity(particles.len());
    let mut effective = water_viscosity_pa_s;
    for (load, weight) in particles.iter().zip(volume_weights) {
        let volume_fraction = if total_weight > 0.0 {
            particle_fraction * weight / total_weight
        } else {
            0.0
        };
        let viscosity =
            species_viscosity(load.particle_mass_kg, 2.0 * load.radius_m, temperature_k)?;
        effective += volume_fraction * viscosity;
        species.push(SpeciesLoad { label: load.label.clone(), volume_fraction, viscosity_pa_s: viscosity });
    }
    Ok(FluidModel {
        temperature_k,
        water_viscosity_pa_s,
        water_density_kg_m3,
        water_volume_fraction,
        species,
        effective_viscosity_pa_s: effective,
    })
}

/// The effective medium of a scenario: its metals at their mean counts
/// suspended in water at the scenario's volume fraction.
pub fn fluid_model_from_scenario(scenario: &Scenario) -> Result<FluidModel> {
    let particles: Vec<ParticleLoad> = scenario
        .metals()
        .iter()
        .zip(&scenario.mean_counts)
        .map(|(species, &count)| ParticleLoad {
            label: species.name.clone(),
            radius_m: species.radius_m(),
            particle_mass_kg: species.particle_mass_kg(),
            count,
        })
        .collect();
    fluid_model(
        scenario.water_viscosity_pa_s,
        scenario.water_density_kg_m3,
        scenario.water_volume_fraction,
        scenario.temperature_k,
        &particles,
    )
}

/// Stokes-Einstein diffusion coefficient of a sphere of `radius_m` in the
/// effective medium: k_B T / (6 pi mu_eff r).
pub fn diffusion_coefficient(radius_m: f64, fluid: &FluidModel) -> Result<f64> {
    if !radius_m.is_finite() || radius_m <= 0.0 {
        return Err(Error::Domain(format!(
            "particle radius must be finite and positive, got {radius_m}"
        )));
    }
    Ok(BOLTZMANN_J_PER_K * fluid.temperature_k
        / (6.0 * core::f64::consts::PI * fluid.effective_viscosity_pa_s * radius_m))
}

/// Micropump channel geometry and rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpGeometry {
    pub inner_radius_m: f64,
    pub outer_radius_m: f64,
    pub channel_width_m: f64,
    pub channel_height_m: f64,
    pub swept_angle_rad: f64,
    pub angular_velocity_rad_s: f64,
}

impl PumpGeometry {
    /// The scenario's pump: channel width is the annulus gap and height is
    /// the aspect ratio times the width.
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        let width = scenario.pump_outer_radius_m - scenario.pump_inner_radius_m;
        PumpGeometry {
            inner_radius_m: scenario.pump_inner_radius_m,
            outer_radius_m: scenario.pump_outer_radius_m,
            channel_width_m: width,
            channel_height_m: scenario.pump_aspect_ratio * width,
            swept_angle_rad: scenario.pump_swept_angle_rad,
            angular_velocity_rad_s: scenario.pump_angular_velocity(),
        }
        .validated()
    }

    /// Checks that all dimensions are positive, the inner radius fits
    /// inside the outer, and the swept angle fits one turn.
    pub fn validated(self) -> Result<Self> {
        let positive = [
            ("inner radius", self.inner_radius_m),
            ("outer radius", self.outer_radius_m),
            ("channel width", self.channel_width_m),
            ("channel height", self.channel_height_m),
            ("swept angle", self.swept_angle_rad),
            ("angular velocity", self.angular_velocity_rad_s),
        ];
        for (label, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Domain(format!(
                    "{label} must be finite and positive, got {value}"
                )));
            }
        }
        if self.inner_radius_m >= self.outer_radius_m {
            return Err(Error::Domain(format!(
                "inner radius ({}) must be smaller than outer radius ({})",
                self.inner_radius_m, self.outer_radius_m
            )));
        }
        if self.swept_angle_rad > 2.0 * core::f64::consts::PI {
            return Err(Error::Domain(format!(
                "swept angle must not exceed 2*pi, got {}",
                self.swept_angle_rad
            )));
        }
        Ok(self)
    }

    #[must_use]
    pub fn radius_ratio(&self) -> f64 {
        self.inner_radius_m / self.outer_radius_m
    }

    #[must_use]
    pub fn aspect_ratio(&self) -> f64 {
        self.channel_height_m / self.channel_width_m
    }

    #[must_use]
    pub fn mean_radius_m(&self) -> f64 {
        0.5 * (self.inner_radius_m + self.outer_radius_m)
    }

    /// Mean disc surface speed at the channel, omega * R_m.
    #[must_use]
    pub fn mean_surface_speed_m_s(&self) -> f64 {
        self.angular_velocity_rad_s * self.mean_radius_m()
    }

    #[must_use]
    pub fn rpm(&self) -> f64 {
        self.angular_velocity_rad_s * 60.0 / (2.0 * core::f64::consts::PI)
    }

    /// Mean flow velocity through the channel cross-section.
    #[must_use]
    pub fn mean_velocity_m_s(&self, flow_m3_s: f64) -> f64 {
        flow_m3_s / (self.channel_width_m * self.channel_height_m)
    }
}

/// Quadratic lubrication flow through the annular channel:
/// Q = h^3 ln(R1/R2) dP / (12 mu dtheta) + omega h (R2^2 - R1^2) / 4.
/// The logarithm is negative, so adverse pressure reduces the drag flow.
pub fn pump_flow_quadratic(
    geometry: &PumpGeometry,
    viscosity_pa_s: f64,
    delta_p_pa: f64,
) -> Result<f64> {
    if !viscosity_pa_s.is_finite() || viscosity_pa_s <= 0.0 {
        return Err(Error::Domain(format!(
            "viscosity must be finite and positive, got {viscosity_pa_s}"
        )));
    }
    if !delta_p_pa.is_finite() {
        return Err(Error::Domain(format!("pressure difference must be finite, got {delta_p_pa}")));
    }
    let h = geometry.channel_height_m;
    let pressure_term = h * h * h * Float::ln(geometry.radius_ratio()) * delta_p_pa
        / (12.0 * viscosity_pa_s * geometry.swept_angle_rad);
    let drag_term = geometry.angular_velocity_rad_s
        * h
        * (geometry.outer_radius_m * geometry.outer_radius_m
            - geometry.inner_radius_m * geometry.inner_radius_m)
        / 4.0;
    Ok(pressure_term + drag_term)
}

/// Shape factors of the generalized flow model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFactors {
    pub drag_radial: f64,
    pub drag_aspect: f64,
    pub pressure_radial: f64,
    pub pressure_aspect: f64,
}

/// Past this argument tanh(z / 2) is one to double precision, so the rest
/// of each duct series is a pure power tail.
const TANH_SATURATION: f64 = 40.0;

/// Smallest odd index the power tails may start from; from here the
/// four-term Euler-Maclaurin expansion is exact to double precision.
const MIN_TAIL_START: u32 = 2001;

const SERIES_MAX_ODD_N: u32 = 20_000_001;

/// Sum of n^-s over odd n >= first_odd, which is 2^-s zeta(s, first_odd/2)
/// by Euler-Maclaurin. Requires first_odd >= MIN_TAIL_START.
fn odd_power_tail(s: f64, first_odd: f64) -> f64 {
    let m = 0.5 * first_odd;
    let inv = 1.0 / m;
    let m_pow = Float::powf(m, -s);
    let hurwitz = m * m_pow / (s - 1.0)
        + 0.5 * m_pow
        + s * m_pow * inv / 12.0
        - s * (s + 1.0) * (s + 2.0) * m_pow * inv * inv * inv / 720.0;
    Float::powf(2.0, -s) * hurwitz
}

/// Shape factors at a radius ratio in (0, 1) and a positive aspect ratio.
///
/// The aspect factors are duct series in tanh(n pi a / 2) over odd n,
/// normalized so both approach one as the channel flattens (a -> 0); the
/// radial pressure factor approaches one as the radius ratio approaches
/// one. The series are summed term by term until tanh saturates, then
/// closed with Euler-Maclaurin power tails, so the results carry no
/// truncation error. The pressure factor's leading 1/a^2 is cancelled analytically
/// (the linear part of the series sums to exactly pi^5 a / 48), leaving a
/// positive defect series that stays accurate in the flat-channel limit.
pub fn shape_factors(radius_ratio: f64, aspect_ratio: f64) -> Result<ShapeFactors> {
    if !radius_ratio.is_finite() || radius_ratio <= 0.0 || radius_ratio >= 1.0 {
        return Err(Error::Domain(format!(
            "radius ratio must lie strictly inside (0, 1), got {radius_ratio}"
        )));
    }
    if !aspect_ratio.is_finite() || aspect_ratio <= 0.0 {
        return Err(Error::Domain(format!(
            "aspect ratio must be finite and positive, got {aspect_ratio}"
        )));
    }
    let x = radius_ratio;
    let pressure_radial = 0.5 * ((x + 1.0) / (x - 1.0)) * Float::ln(x);

    let a = aspect_ratio;
    let mut drag_sum = 0.0;
    let mut defect_sum = 0.0;
    let mut n = 1u32;
    let mut saturated = false;
    while n <= SERIES_MAX_ODD_N {
        // (cosh(z) - 1) / sinh(z) = tanh(z / 2), evaluated directly so the
        // hyperbolics cannot overflow at large aspect ratios.
        let z = f64::from(n) * core::f64::consts::PI * a;
        if z >= TANH_SATURATION && n >= MIN_TAIL_START {
            let first = f64::from(n);
            drag_sum += 4.0 * odd_power_tail(3.0, first);
            defect_sum += 2.0 * core::f64::consts::PI * a * odd_power_tail(4.0, first)
                - 4.0 * odd_power_tail(5.0, first);
            saturated = true;
            break;
        }
        let half = 0.5 * z;
        let tanh_half = Float::tanh(half);
        let n3 = f64::from(n).powi(3);
        let n5 = n3 * f64::from(n) * f64::from(n);
        drag_sum += 4.0 * tanh_half / n3;
        defect_sum += 4.0 * (half - tanh_half) / n5;
        n += 2;
    }
    if !saturated {
        return Err(Error::Numeric(format!(
            "duct series needs more than {SERIES_MAX_ODD_N} terms at aspect ratio {a}"
        )));
    }

    let pi3 = Float::powi(core::f64::consts::PI, 3);
    let pi5 = Float::powi(core::f64::consts::PI, 5);
    let drag_aspect = 4.0 / (pi3 * a) * drag_sum;
    let pressure_aspect = 48.0 / (pi5 * a * a * a) * defect_sum;
    Ok(ShapeFactors { drag_radial: 1.0, drag_aspect, pressure_radial, pressure_aspect })
}

/// Generalized dimensionless flow model, dimensionalized by the surface
/// speed and channel section:
/// Q* = F_DR F_DA / 2 - Re_bar Eu F_PR F_PA / 12,  Q = Q* (omega R_m) h w,
/// with Re_bar = rho U h^2 / (R_m dtheta^2 mu) and Eu = dP / (rho U^2).
pub fn pump_flow_general(
    geometry: &PumpGeometry,
    fluid: &FluidModel,
    delta_p_pa: f64,
) -> Result<f64> {
    if !delta_p_pa.is_finite() {
        return Err(Error::Domain(format!("pressure difference must be finite, got {delta_p_pa}")));
    }
    let factors = shape_factors(geometry.radius_ratio(), geometry.aspect_ratio())?;
    let speed = geometry.mean_surface_speed_m_s();
    let reynolds = fluid.water_density_kg_m3 * speed * geometry.channel_height_m.powi(2)
        / (geometry.mean_radius_m()
            * geometry.swept_angle_rad.powi(2)
            * fluid.effective_viscosity_pa_s);
    let euler = delta_p_pa / (fluid.water_density_kg_m3 * speed * speed);
    let dimensionless = 0.5 * factors.drag_radial * factors.drag_aspect
        - reynolds * euler * factors.pressure_radial * factors.pressure_aspect / 12.0;
    Ok(dimensionless * speed * geometry.channel_height_m * geometry.channel_width_m)
}

/// Free-space concentration profile of an instantaneous point release of
/// `mass` molecules advected at `velocity` while diffusing:
/// c(x, t) = mass / sqrt(4 pi D t) * exp(-(x - u t)^2 / (4 D t)).
pub fn concentration_profile(
    mass: f64,
    position_m: f64,
    time_s: f64,
    velocity_m_s: f64,
    diffusion_m2_s: f64,
) -> Result<f64> {
    if !mass.is_finite() || mass < 0.0 {
        return Err(Error::Domain(format!("mass must be finite and non-negative, got {mass}")));
    }
    if !time_s.is_finite() || time_s <= 0.0 {
        return Err(Error::Domain(format!("time must be finite and positive, got {time_s}")));
    }
    if !diffusion_m2_s.is_finite() || diffusion_m2_s <= 0.0 {
        return Err(Error::Domain(format!(
            "diffusion coefficient must be finite and positive, got {diffusion_m2_s}"
        )));
    }
    if !position_m.is_finite() || !velocity_m_s.is_finite() {
        return Err(Error::Domain("position and velocity must be finite".to_string()));
    }
    let spread = 4.0 * diffusion_m2_s * time_s;
    let offset = position_m - velocity_m_s * time_s;
    Ok(mass / Float::sqrt(core::f64::consts::PI * spread) * Float::exp(-offset * offset / spread))
}

/// First-passage statistics of simulated particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReleaseTiming {
    pub mean_s: f64,
    pub std_s: f64,
    pub particles: usize,
}

/// Stream label per-particle transport simulations draw from.
pub const PARTICLE_STREAM: &str = "release-particle";

/// Longest allowed run per particle, as a multiple of the expected
/// crossing time. Particles still inside afterwards abort the run.
const MAX_CROSSING_MULTIPLE: f64 = 2000.0;

/// Simulates `particles` independent first passages across `length_m`
/// under drift `velocity_m_s` and diffusion `diffusion_m2_s` with an
/// Euler-Maruyama step of `dt_s`. Each particle draws from its own
/// substream of `master_seed`, so results are independent of scheduling.
pub fn simulate_release(
    particles: usize,
    velocity_m_s: f64,
    diffusion_m2_s: f64,
    length_m: f64,
    dt_s: f64,
    master_seed: u64,
) -> Result<ReleaseTiming> {
    if particles == 0 {
        return Err(Error::Domain("need at least one particle".to_string()));
    }
    if !length_m.is_finite() || length_m <= 0.0 {
        return Err(Error::Domain(format!("length must be finite and positive, got {length_m}")));
    }
    if !diffusion_m2_s.is_finite() || diffusion_m2_s < 0.0 {
        return Err(Error::Domain(format!(
            "diffusion coefficient must be finite and non-negative, got {diffusion_m2_s}"
        )));
    }
    if !velocity_m_s.is_finite() {
        return Err(Error::Domain(format!("velocity must be finite, got {velocity_m_s}")));
    }
    if velocity_m_s <= 0.0 && diffusion_m2_s == 0.0 {
        return Err(Error::NeverReleases(format!(
            "velocity {velocity_m_s} with zero diffusion cannot cross the channel"
        )));
    }
    if !dt_s.is_finite() || dt_s <= 0.0 {
        return Err(Error::Domain(format!("time step must be finite and positive, got {dt_s}")));
    }
    let crossing_scale_s = if velocity_m_s > 0.0 {
        let advective = length_m / velocity_m_s;
        if dt_s > 0.01 * advective * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "time step {dt_s} too coarse: must be at most 1% of the advective crossing time {advective}"
            )));
        }
        advective
    } else {
        length_m * length_m / (2.0 * diffusion_m2_s)
    };
    let max_steps =
        Float::ceil(MAX_CROSSING_MULTIPLE * crossing_scale_s / dt_s).max(100_000.0) as u64;

    let drift = velocity_m_s * dt_s;
    let noise_scale = Float::sqrt(2.0 * diffusion_m2_s * dt_s);
    let mut timing = Moments::new();
    let mut censored = 0usize;
    for index in 0..particles {
        let mut rng = substream(master_seed, PARTICLE_STREAM, index as u64);
        let mut position = 0.0f64;
        let mut steps = 0u64;
        loop {
            position += drift;
            if noise_scale > 0.0 {
                position += noise_scale * rng.sample::<f64, _>(StandardNormal);
            }
            steps += 1;
            if position >= length_m {
                timing.push(steps as f64 * dt_s);
                break;
            }
            if steps >= max_steps {
                censored += 1;
                break;
            }
        }
    }
    if censored > 0 {
        return Err(Error::Numeric(format!(
            "{censored} of {particles} particles still in transit after {MAX_CROSSING_MULTIPLE}x the expected crossing time"
        )));
    }
    Ok(ReleaseTiming { mean_s: timing.mean(), std_s: timing.std_dev(), particles })
}

/// One release sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReleaseRow {
    pub x: f64,
    pub flow_m3_s: f64,
    pub velocity_m_s: f64,
    pub diffusion_m2_s: f64,
    pub analytic_time_s: f64,
    pub simulated_mean_s: f64,
    pub simulated_std_s: f64,
    pub peclet: f64,
}

/// Pump geometry for one sweep point (see module docs for the conventions).
pub fn sweep_geometry(scenario: &Scenario, variable: SweepVariable, x: f64) -> Result<PumpGeometry> {
    validate_sweep_value(variable, x)?;
    let base_width = scenario.pump_outer_radius_m - scenario.pump_inner_radius_m;
    let geometry = match variable {
        SweepVariable::Rpm => PumpGeometry {
            inner_radius_m: scenario.pump_inner_radius_m,
            outer_radius_m: scenario.pump_outer_radius_m,
            channel_width_m: base_width,
            channel_height_m: scenario.pump_aspect_ratio * base_width,
            swept_angle_rad: scenario.pump_swept_angle_rad,
            angular_velocity_rad_s: x * 2.0 * core::f64::consts::PI / 60.0,
        },
        SweepVariable::RadiusRatio => {
            let inner = x * scenario.pump_outer_radius_m;
            let width = scenario.pump_outer_radius_m - inner;
            PumpGeometry {
                inner_radius_m: inner,
                outer_radius_m: scenario.pump_outer_radius_m,
                channel_width_m: width,
                channel_height_m: scenario.pump_aspect_ratio * width,
                swept_angle_rad: scenario.pump_swept_angle_rad,
                angular_velocity_rad_s: scenario.pump_angular_velocity(),
            }
        }
        SweepVariable::AspectRatio => {
            let inner = ASPECT_SWEEP_RADIUS_RATIO * scenario.pump_outer_radius_m;
            let height =
                scenario.pump_aspect_ratio * (scenario.pump_outer_radius_m - inner);
            PumpGeometry {
                inner_radius_m: inner,
                outer_radius_m: scenario.pump_outer_radius_m,
                channel_width_m: height / x,
                channel_height_m: height,
                swept_angle_rad: scenario.pump_swept_angle_rad,
                angular_velocity_rad_s: scenario.pump_angular_velocity(),
            }
        }
    };
    geometry.validated()
}

/// Evaluates one release sweep point: flow (quadratic model for rpm and
/// radius-ratio sweeps, generalized model for aspect sweeps), velocity,
/// analytic crossing time, and the simulated first-passage statistics of
/// the detected metal.
pub fn release_point(
    scenario: &Scenario,
    variable: SweepVariable,
    x: f64,
    particles: usize,
    dt_s: Option<f64>,
    master_seed: u64,
) -> Result<ReleaseRow> {
    if particles < 100 {
        return Err(Error::Config(format!(
            "need at least 100 particles for meaningful statistics, got {particles}"
        )));
    }
    let geometry = sweep_geometry(scenario, variable, x)?;
    let fluid = fluid_model_from_scenario(scenario)?;
    let flow = match variable {
        SweepVariable::AspectRatio => pump_flow_general(&geometry, &fluid, 0.0)?,
        _ => pump_flow_quadratic(&geometry, fluid.effective_viscosity_pa_s, 0.0)?,
    };
    let velocity = geometry.mean_velocity_m_s(flow);
    if velocity <= 0.0 {
        return Err(Error::NeverReleases(format!(
            "pump produces non-positive mean velocity {velocity} at {variable:?} = {x}"
        )));
    }
    let diffusion = diffusion_coefficient(scenario.detected_species().radius_m(), &fluid)?;
    let length = scenario.device_length_m;
    let analytic = length / velocity;
    let dt = match dt_s {
        Some(value) => value,
        None => 0.005 * analytic,
    };
    let timing = simulate_release(particles, velocity, diffusion, length, dt, master_seed)?;
    Ok(ReleaseRow {
        x,
        flow_m3_s: flow,
        velocity_m_s: velocity,
        diffusion_m2_s: diffusion,
        analytic_time_s: analytic,
        simulated_mean_s: timing.mean_s,
        simulated_std_s: timing.std_s,
        peclet: velocity * length / diffusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn defaults() -> Scenario {
        Scenario::default()
    }

    fn pure_water(temperature_k: f64) -> FluidModel {
        fluid_model(8.509e-4, 996.64, 1.0, temperature_k, &[]).unwrap()
    }

    #[test]
    fn species_viscosities_match_hand_values() {
        let zn_mass = 65.39e-3 / crate::params::AVOGADRO_PER_MOL;
        let mu = species_viscosity(zn_mass, 2.0 * 142.0e-12, 300.0).unwrap();
        assert_relative_eq!(mu, 4.722033003390377e-5, max_relative = 1e-9);
        let cd_mass = 112.41e-3 / crate::params::AVOGADRO_PER_MOL;
        let mu = species_viscosity(cd_mass, 2.0 * 161.0e-12, 300.0).unwrap();
        assert_relative_eq!(mu, 4.816158377237986e-5, max_relative = 1e-9);
    }

    #[test]
    fn scenario_fluid_splits_fractions_by_stored_volume() {
        let fluid = fluid_model_from_scenario(&defaults()).unwrap();
        assert_eq!(fluid.species.len(), 2);
        assert_relative_eq!(
            fluid.species[0].volume_fraction,
            0.051835901264721956,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            fluid.species[1].volume_fraction,
            0.048164098735278056,
            max_relative = 1e-9
        );
        let total: f64 = fluid.species.iter().map(|s| s.volume_fraction).sum();
        assert_relative_eq!(total, 0.1, max_relative = 1e-12);
        assert_relative_eq!(
            fluid.effective_viscosity_pa_s,
            8.556673676413853e-4,
            max_relative = 1e-9
        );
    }

    #[test]
    fn pure_water_fluid_keeps_water_viscosity() {
        let fluid = pure_water(300.0);
        assert_relative_eq!(fluid.effective_viscosity_pa_s, 8.509e-4, max_relative = 1e-12);
    }

    #[test]
    fn fluid_rejects_load_without_particles() {
        assert!(fluid_model(8.509e-4, 996.64, 0.9, 300.0, &[]).is_err());
    }

    #[test]
    fn diffusion_coefficient_matches_hand_values() {
        let d = diffusion_coefficient(142.0e-12, &pure_water(300.0)).unwrap();
        assert_relative_eq!(d, 1.8186644954801784e-9, max_relative = 1e-9);
        let fluid = fluid_model_from_scenario(&defaults()).unwrap();
        let d = diffusion_coefficient(142.0e-12, &fluid).unwrap();
        assert_relative_eq!(d, 1.8085317703183115e-9, max_relative = 1e-9);
    }

    #[test]
    fn default_geometry_flow_and_velocity_match_hand_values() {
        let geometry = PumpGeometry::from_scenario(&defaults()).unwrap();
        assert_relative_eq!(geometry.channel_height_m, 1.19e-4, max_relative = 1e-12);
        assert_relative_eq!(geometry.aspect_ratio(), 0.1, max_relative = 1e-12);
        assert_relative_eq!(geometry.radius_ratio(), 0.5, max_relative = 1e-12);
        let flow = pump_flow_quadratic(&geometry, 8.509e-4, 0.0).unwrap();
        assert_relative_eq!(flow, 6.617603918163405e-9, max_relative = 1e-9);
        let velocity = geometry.mean_velocity_m_s(flow);
        assert_relative_eq!(velocity, 0.04673119072214818, max_relative = 1e-9);
        assert_relative_eq!(12.0e-3 / velocity, 0.2567878073415454, max_relative = 1e-9);
    }

    #[test]
    fn adverse_pressure_reduces_quadratic_flow() {
        let geometry = PumpGeometry::from_scenario(&defaults()).unwrap();
        let free = pump_flow_quadratic(&geometry, 8.509e-4, 0.0).unwrap();
        let loaded = pump_flow_quadratic(&geometry, 8.509e-4, 50.0).unwrap();
        assert!(loaded < free);
    }

    #[test]
    fn radial_pressure_factor_matches_hand_values_and_limit() {
        let factors = shape_factors(0.5, 0.1).unwrap();
        assert_eq!(factors.drag_radial, 1.0);
        assert_relative_eq!(factors.pressure_radial, 1.0397207708399179, max_relative = 1e-9);
        let near_one = shape_factors(0.999, 0.1).unwrap();
        assert_relative_eq!(near_one.pressure_radial, 1.0000000834167417, max_relative = 1e-9);
        assert!((near_one.pressure_radial - 1.0).abs() < 1e-3);
    }

    #[test]
    fn aspect_factors_match_hand_values_and_flat_channel_limits() {
        // The flat pressure factor keeps a small residual from the n = 1
        // tanh cancellation, so its tolerance is looser.
        let flat = shape_factors(0.5, 1e-3).unwrap();
        assert_relative_eq!(flat.drag_aspect, 0.99945724548555916, max_relative = 1e-12);
        assert_relative_eq!(flat.pressure_aspect, 0.99936975112371613, max_relative = 1e-9);
        assert!((flat.drag_aspect - 1.0).abs() < 1e-2);
        assert!((flat.pressure_aspect - 1.0).abs() < 1e-2);

        let tenth = shape_factors(0.5, 0.1).unwrap();
        assert_relative_eq!(tenth.drag_aspect, 0.94572454855591883, max_relative = 1e-12);
        assert_relative_eq!(tenth.pressure_aspect, 0.93697511237161616, max_relative = 1e-12);

        // The square duct recovers the classical factors: exactly half the
        // wall speed for drag, 0.4217 for the Poiseuille correction.
        let square = shape_factors(0.5, 1.0).unwrap();
        assert_relative_eq!(square.drag_aspect, 0.5, max_relative = 1e-12);
        assert_relative_eq!(square.pressure_aspect, 0.42173104486546115, max_relative = 1e-12);

        let tall = shape_factors(0.5, 2.0).unwrap();
        assert_relative_eq!(tall.drag_aspect, 0.27041540699890554, max_relative = 1e-12);
        let half = shape_factors(0.5, 0.5).unwrap();
        assert_relative_eq!(half.pressure_aspect, 0.6860450313587123, max_relative = 1e-12);
    }

    #[test]
    fn drag_aspect_is_strictly_decreasing() {
        let mut previous = f64::INFINITY;
        for i in 1..=20 {
            let a = 0.1 * i as f64;
            let factors = shape_factors(0.9, a).unwrap();
            assert!(
                factors.drag_aspect < previous,
                "drag factor rose at aspect {a}"
            );
            previous = factors.drag_aspect;
        }
    }

    // The four wall-driven drag flows of a rectangle sum to uniform motion,
    // so the drag factor and its reciprocal-aspect partner sum to one.
    proptest::proptest! {
        #[test]
        fn drag_aspect_complementarity(a in 0.05f64..20.0) {
            let direct = shape_factors(0.5, a).unwrap().drag_aspect;
            let swapped = shape_factors(0.5, 1.0 / a).unwrap().drag_aspect;
            proptest::prop_assert!((direct + swapped - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn general_flow_matches_quadratic_in_the_flat_narrow_limit() {
        let scenario = defaults();
        let outer = scenario.pump_outer_radius_m;
        let geometry = PumpGeometry {
            inner_radius_m: 0.99 * outer,
            outer_radius_m: outer,
            channel_width_m: 0.01 * outer,
            channel_height_m: 1e-3 * 0.01 * outer,
            swept_angle_rad: scenario.pump_swept_angle_rad,
            angular_velocity_rad_s: scenario.pump_angular_velocity(),
        };
        let fluid = pure_water(300.0);
        let general = pump_flow_general(&geometry, &fluid, 0.0).unwrap();
        let quadratic =
            pump_flow_quadratic(&geometry, fluid.effective_viscosity_pa_s, 0.0).unwrap();
        let rel = (general - quadratic).abs() / quadratic;
        assert!(rel < 0.01, "flat-channel models disagree by {rel}");
    }

    #[test]
    fn general_flow_at_zero_pressure_is_drag_flow_times_aspect_factor() {
        let geometry = PumpGeometry::from_scenario(&defaults()).unwrap();
        let fluid = fluid_model_from_scenario(&defaults()).unwrap();
        let general = pump_flow_general(&geometry, &fluid, 0.0).unwrap();
        let quadratic =
            pump_flow_quadratic(&geometry, fluid.effective_viscosity_pa_s, 0.0).unwrap();
        let factors = shape_factors(geometry.radius_ratio(), geometry.aspect_ratio()).unwrap();
        assert_relative_eq!(general, quadratic * factors.drag_aspect, max_relative = 1e-12);
    }

    #[test]
    fn concentration_profile_conserves_mass_and_peaks_at_the_drift() {
        let mass = 1e6;
        let (u, d, t) = (0.05, 2e-9, 0.2);
        let peak_x = u * t;
        let sigma = (2.0 * d * t).sqrt();
        let mut integral = 0.0;
        let steps = 40_000;
        let lo = peak_x - 8.0 * sigma;
        let hi = peak_x + 8.0 * sigma;
        let dx = (hi - lo) / steps as f64;
        for i in 0..=steps {
            let weight = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let x = lo + i as f64 * dx;
            integral += weight * concentration_profile(mass, x, t, u, d).unwrap() * dx;
        }
        assert_relative_eq!(integral, mass, max_relative = 1e-9);
        let at_peak = concentration_profile(mass, peak_x, t, u, d).unwrap();
        let off_peak = concentration_profile(mass, peak_x + sigma, t, u, d).unwrap();
        assert!(at_peak > off_peak);
    }

    #[test]
    fn pure_advection_crosses_in_the_exact_step_count() {
        let (u, length) = (0.04673119072214818, 12.0e-3);
        let analytic = length / u;
        let dt = 0.005 * analytic;
        let timing = simulate_release(200, u, 0.0, length, dt, 42).unwrap();
        assert!(timing.mean_s >= analytic * (1.0 - 1e-12));
        assert!(timing.mean_s <= analytic + 1.01 * dt);
        assert!(timing.std_s <= 1e-12 * analytic);
    }

    #[test]
    fn drift_dominated_passage_matches_the_advective_time() {
        let (u, length) = (0.05, 12.0e-3);
        let d = 1.8e-9;
        let analytic = length / u;
        let timing =
            simulate_release(2_000, u, d, length, 0.005 * analytic, 42).unwrap();
        let rel = (timing.mean_s - analytic).abs() / analytic;
        assert!(rel < 0.05, "simulated mean off the advective time by {rel}");
        assert!(timing.std_s > 0.0);
    }

    #[test]
    fn release_rejects_impossible_or_coarse_setups() {
        assert!(matches!(
            simulate_release(100, 0.0, 0.0, 1e-3, 1e-5, 42),
            Err(Error::NeverReleases(_))
        ));
        assert!(matches!(
            simulate_release(100, -0.1, 0.0, 1e-3, 1e-5, 42),
            Err(Error::NeverReleases(_))
        ));
        // 2% of the crossing time is too coarse a step.
        assert!(simulate_release(100, 0.05, 0.0, 1e-3, 4e-4, 42).is_err());
    }

    #[test]
    fn pure_diffusion_aborts_as_censored() {
        // Undrifted first passage is heavy-tailed, so with this seed some of
        // the thousand walkers are still inside at the step cap.
        let result = simulate_release(1_000, 0.0, 1e-9, 1e-5, 1e-3, 42);
        match result {
            Err(Error::Numeric(message)) => assert!(message.contains("in transit")),
            other => panic!("expected censoring failure, got {other:?}"),
        }
    }

    #[test]
    fn simulated_release_is_deterministic_per_seed() {
        let a = simulate_release(300, 0.05, 1.8e-9, 12.0e-3, 1e-3, 7).unwrap();
        let b = simulate_release(300, 0.05, 1.8e-9, 12.0e-3, 1e-3, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_release(300, 0.05, 1.8e-9, 12.0e-3, 1e-3, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rpm_sweep_scales_velocity_linearly_and_time_inversely() {
        let scenario = defaults();
        let slow = release_point(&scenario, SweepVariable::Rpm, 50.0, 200, None, 42).unwrap();
        let fast = release_point(&scenario, SweepVariable::Rpm, 1000.0, 200, None, 42).unwrap();
        assert_relative_eq!(fast.velocity_m_s / slow.velocity_m_s, 20.0, max_relative = 1e-9);
        assert_relative_eq!(
            slow.analytic_time_s / fast.analytic_time_s,
            20.0,
            max_relative = 1e-9
        );
        assert!(slow.peclet > 1e3);
        let rel = (slow.simulated_mean_s - slow.analytic_time_s).abs() / slow.analytic_time_s;
        assert!(rel < 0.05);
    }

    #[test]
    fn radius_ratio_sweep_increases_velocity_linearly_in_the_inner_radius() {
        let scenario = defaults();
        let low = release_point(&scenario, SweepVariable::RadiusRatio, 0.2, 200, None, 42).unwrap();
        let high = release_point(&scenario, SweepVariable::RadiusRatio, 0.8, 200, None, 42).unwrap();
        // u = omega (R1 + R2) / 4, so velocity follows 1 + x.
        assert_relative_eq!(
            high.velocity_m_s / low.velocity_m_s,
            1.8 / 1.2,
            max_relative = 1e-9
        );
        assert!(high.flow_m3_s < low.flow_m3_s);
        assert!(high.analytic_time_s < low.analytic_time_s);
    }

    #[test]
    fn aspect_ratio_sweep_slows_flow_and_velocity() {
        let scenario = defaults();
        let flat =
            release_point(&scenario, SweepVariable::AspectRatio, 0.1, 200, None, 42).unwrap();
        let tall =
            release_point(&scenario, SweepVariable::AspectRatio, 2.0, 200, None, 42).unwrap();
        assert!(tall.flow_m3_s < flat.flow_m3_s);
        assert!(tall.velocity_m_s < flat.velocity_m_s);
        assert!(tall.analytic_time_s > flat.analytic_time_s);
    }

    #[test]
    fn sweep_values_outside_documented_ranges_are_config_errors() {
        let scenario = defaults();
        assert!(matches!(
            release_point(&scenario, SweepVariable::Rpm, 10.0, 200, None, 42),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            release_point(&scenario, SweepVariable::RadiusRatio, 0.99, 200, None, 42),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            release_point(&scenario, SweepVariable::AspectRatio, 3.0, 200, None, 42),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            release_point(&scenario, SweepVariable::Rpm, 500.0, 50, None, 42),
            Err(Error::Config(_))
        ));
    }
}
