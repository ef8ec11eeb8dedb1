//! Conversions between the millimetre-gram-second convention the source
//! tables use and the SI units all model code works in.
//!
//! mm-g-s is self-consistent: viscosity in g/(mm s) and pressure in
//! g/(mm s^2) are numerically equal to Pa s and Pa, so those factors are 1.

/// Quantity kinds that appear in the parameter tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// mm vs m.
    Length,
    /// mm/s vs m/s.
    Velocity,
    /// g/mm^3 vs kg/m^3.
    Density,
    /// g/(mm s) vs Pa s (numerically equal).
    Viscosity,
    /// g/(mm s^2) vs Pa (numerically equal).
    Pressure,
    /// g mm^2/s^2 vs J.
    Energy,
    /// mm^3/s vs m^3/s.
    FlowRate,
    /// g mm^2/(K s^2) vs J/K, for the Boltzmann constant.
    EnergyPerTemperature,
}

impl Quantity {
    /// Multiplicative factor taking a mm-g-s value to SI.
    #[must_use]
    pub fn mmgs_to_si_factor(self) -> f64 {
        match self {
            Quantity::Length | Quantity::Velocity => 1e-3,
            Quantity::Density => 1e6,
            Quantity::Viscosity | Quantity::Pressure => 1.0,
            Quantity::Energy | Quantity::FlowRate | Quantity::EnergyPerTemperature => 1e-9,
        }
    }
}

/// Converts a value from the mm-g-s table convention to SI.
#[must_use]
pub fn to_si(quantity: Quantity, value_mmgs: f64) -> f64 {
    value_mmgs * quantity.mmgs_to_si_factor()
}

/// Converts an SI value back to the mm-g-s table convention.
#[must_use]
pub fn from_si(quantity: Quantity, value_si: f64) -> f64 {
    value_si / quantity.mmgs_to_si_factor()
}
