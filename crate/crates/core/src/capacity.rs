//! Geometric cargo capacity of the cylindrical reservoir.
//!
//! Spherical particles of radius r stack in layers along the device axis;
//! within a layer they form concentric rings around the axis. Ring i at
//! radius 2ri holds floor(pi / asin(1/(2i))) particles, the layer holds one
//! centre particle plus all rings out to the device wall, and the device
//! holds h/(2r) layers. The capacity reported here keeps the per-ring
//! counts unfloored, so it is an upper bound within one particle per ring:
//!
//! C = (h / 2r) * (1 + sum_{i=1..m} pi / asin(1/(2i))),  m = floor((R-r)/(2r))
//!
//! For large ring counts the sum switches to a closed-form asymptotic tail;
//! [`ring_sum_with_switchover`] exposes the switch point so the tail can be
//! validated against direct summation.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use num_traits::Float;

use crate::{Error, Result};

/// Rings with index at or below this are summed term by term.
pub const DIRECT_SUM_LIMIT: u64 = 100_000;

const EULER_MASCHERONI: f64 = 0.5772156649015329;

/// Number-weighted mean radius of a particle mix given `(fraction, radius_m)`
/// pairs. Fractions must be non-negative and sum to one.
pub fn average_particle_radius(mix: &[(f64, f64)]) -> Result<f64> {
    if mix.is_empty() {
        return Err(Error::Domain("particle mix must not be empty".to_string()));
    }
    let mut total = 0.0;
    let mut avg = 0.0;
    for &(fraction, radius) in mix {
        if !fraction.is_finite() || fraction < 0.0 {
            return Err(Error::Domain(format!(
                "mix fractions must be finite and non-negative, got {fraction}"
            )));
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::Domain(format!(
                "particle radii must be finite and positive, got {radius}"
            )));
        }
        total += fraction;
        avg += fraction * radius;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("mix fractions must sum to 1, got {total}")));
    }
    Ok(avg)
}

/// Number of concentric rings of radius-`particle_radius_m` spheres that fit
/// in a layer of a cylinder of radius `device_radius_m`.
pub fn ring_count(device_radius_m: f64, particle_radius_m: f64) -> Result<u64> {
    if !particle_radius_m.is_finite() || particle_radius_m <= 0.0 {
        return Err(Error::Domain(format!(
            "particle radius must be finite and positive, got {particle_radius_m}"
        )));
    }
    if !device_radius_m.is_finite() || device_radius_m < particle_radius_m {
        return Err(Error::Domain(format!(
            "device radius must be finite and at least the particle radius, got {device_radius_m}"
        )));
    }
    Ok(((device_radius_m - particle_radius_m) / (2.0 * particle_radius_m)).floor() as u64)
}

/// Per-ring particle count pi / asin(1/(2i)), summed directly.
#[must_use]
pub fn ring_sum_direct(rings: u64) -> f64 {
    let mut sum = 0.0;
    for i in 1..=rings {
        sum += core::f64::consts::PI / Float::asin(1.0 / (2.0 * i as f64));
    }
    sum
}

/// Ring sum with terms beyond `switchover` replaced by the asymptotic tail
/// pi/asin(1/(2i)) ~ 2*pi*i - pi/(12 i), summed in closed form via harmonic
/// numbers. Exposed so the tail can be checked against direct summation.
#[must_use]
pub fn ring_sum_with_switchover(rings: u64, switchover: u64) -> f64 {
    if rings <= switchover {
        return ring_sum_direct(rings);
    }
    let head = ring_sum_direct(switchover);
    let a = (switchover + 1) as f64;
    let b = rings as f64;
    let linear = core::f64::consts::PI * (b * (b + 1.0) - a * (a - 1.0));
    let correction =
        core::f64::consts::PI / 12.0 * (harmonic_number(b) - harmonic_number(a - 1.0));
    head + linear - correction
}

/// Ring sum with the default direct-summation limit.
#[must_use]
pub fn ring_sum(rings: u64) -> f64 {
    ring_sum_with_switchover(rings, DIRECT_SUM_LIMIT)
}

fn harmonic_number(n: f64) -> f64 {
    if n < 1.0 {
        return 0.0;
    }
    Float::ln(n) + EULER_MASCHERONI + 1.0 / (2.0 * n) - 1.0 / (12.0 * n * n)
}

/// Total particle capacity of a cylinder of radius `device_radius_m` and
/// length `device_length_m` filled with particles of `particle_radius_m`.
pub fn total_capacity(
    device_radius_m: f64,
    device_length_m: f64,
    particle_radius_m: f64,
) -> Result<f64> {
    if !device_length_m.is_finite() || device_length_m <= 0.0 {
        return Err(Error::Domain(format!(
            "device length must be finite and positive, got {device_length_m}"
        )));
    }
    let rings = ring_count(device_radius_m, particle_radius_m)?;
    let layers = device_length_m / (2.0 * particle_radius_m);
    Ok(layers * (1.0 + ring_sum(rings)))
}

/// Capacity broken out for reporting: mean particle radius, rings per
/// layer, and total capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityReport {
    pub mean_radius_m: f64,
    pub rings_per_layer: u64,
    pub capacity: f64,
}

/// Capacity of a device for a particle mix of `(fraction, radius_m)` pairs.
pub fn capacity_for_mix(
    device_radius_m: f64,
    device_length_m: f64,
    mix: &[(f64, f64)],
) -> Result<CapacityReport> {
    let mean_radius_m = average_particle_radius(mix)?;
    Ok(CapacityReport {
        mean_radius_m,
        rings_per_layer: ring_count(device_radius_m, mean_radius_m)?,
        capacity: total_capacity(device_radius_m, device_length_m, mean_radius_m)?,
    })
}

/// Capacity at a grid of mean radii, for trend reporting.
pub fn capacity_over_radii(
    device_radius_m: f64,
    device_length_m: f64,
    radii_m: &[f64],
) -> Result<Vec<CapacityReport>> {
    radii_m
        .iter()
        .map(|&r| {
            Ok(CapacityReport {
                mean_radius_m: r,
                rings_per_layer: ring_count(device_radius_m, r)?,
                capacity: total_capacity(device_radius_m, device_length_m, r)?,
            })
        })
        .collect()
}
