//! Physical constants shared by every observable that is compared against
//! published numbers.

/// Boltzmann constant, exact SI value [J/K].
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Reduced Planck constant, exact SI value [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Mass of a 133Cs atom [kg].
pub const CESIUM_MASS: f64 = 2.206_946_50e-25;

/// Standard gravity [m/s^2], only used when a transport scenario enables gravity.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Converts a temperature in kelvin to an energy in joules.
pub fn kelvin_to_joule(t: f64) -> f64 {
    t * BOLTZMANN
}
