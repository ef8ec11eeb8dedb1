//! Actuation energy of the viscous micropump.
//!
//! The rotating disc shears the fluid across the channel arc, losing
//! pressure to viscous drag. The loss follows the lubrication estimate
//! dP = 6 mu V dL / h^2, where V is the disc surface speed at the mean
//! channel radius and dL the mean arc length of the swept channel. Pump
//! power is that loss times the delivered flow, and actuation energy is
//! power times running time, so energy grows with the square of the
//! rotation rate.
//!
//! Sweep geometry conventions differ from the release module's in one
//! respect: the aspect-ratio sweep here holds the channel footprint (the
//! annulus gap) and grows the height as `aspect * gap`, the tall-channel
//! reading under which pressure loss falls with height squared while flow
//! only grows linearly, so taller channels cost less energy.

use alloc::format;

use crate::params::Scenario;
use crate::release::{
    fluid_model_from_scenario, pump_flow_quadratic, validate_sweep_value, PumpGeometry,
    SweepVariable, ASPECT_SWEEP_RADIUS_RATIO,
};
use crate::{Error, Result};

/// Viscous pressure loss across the swept channel arc:
/// dP = 6 mu V dL / h^2 with V the mean-radius surface speed and dL the
/// mean-radius arc length.
pub fn pressure_loss(geometry: &PumpGeometry, viscosity_pa_s: f64) -> Result<f64> {
    if !viscosity_pa_s.is_finite() || viscosity_pa_s <= 0.0 {
        return Err(Error::Domain(format!(
            "viscosity must be finite and positive, got {viscosity_pa_s}"
        )));
    }
    let speed = geometry.mean_surface_speed_m_s();
    let arc = geometry.swept_angle_rad * geometry.mean_radius_m();
    let h = geometry.channel_height_m;
    Ok(6.0 * viscosity_pa_s * speed * arc / (h * h))
}

/// One energy sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub x: f64,
    pub pressure_loss_pa: f64,
    pub flow_m3_s: f64,
    pub power_w: f64,
    pub energy_j: f64,
    pub duration_s: f64,
}

/// Pump geometry for one energy sweep point (see module docs for the
/// aspect convention).
pub fn energy_sweep_geometry(
    scenario: &Scenario,
    variable: SweepVariable,
    x: f64,
) -> Result<PumpGeometry> {
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
            let width = scenario.pump_outer_radius_m - inner;
            PumpGeometry {
                inner_radius_m: inner,
                outer_radius_m: scenario.pump_outer_radius_m,
                channel_width_m: width,
                channel_height_m: x * width,
                swept_angle_rad: scenario.pump_swept_angle_rad,
                angular_velocity_rad_s: scenario.pump_angular_velocity(),
            }
        }
    };
    geometry.validated()
}

/// Evaluates one energy sweep point in the scenario's effective medium:
/// pressure loss, free drag flow, their product as pump power, and the
/// energy spent over `duration_s`.
pub fn energy_point(
    scenario: &Scenario,
    variable: SweepVariable,
    x: f64,
    duration_s: f64,
) -> Result<EnergyRow> {
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(Error::Domain(format!(
            "duration must be finite and non-negative, got {duration_s}"
        )));
    }
    let geometry = energy_sweep_geometry(scenario, variable, x)?;
    let fluid = fluid_model_from_scenario(scenario)?;
    let loss = pressure_loss(&geometry, fluid.effective_viscosity_pa_s)?;
    let flow = pump_flow_quadratic(&geometry, fluid.effective_viscosity_pa_s, 0.0)?;
    let power = loss * flow;
    Ok(EnergyRow {
        x,
        pressure_loss_pa: loss,
        flow_m3_s: flow,
        power_w: power,
        energy_j: power * duration_s,
        duration_s,
    })
}
