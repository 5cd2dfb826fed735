//! Shared CSV formatting.

/// Seventeen significant digits, enough for an exact IEEE-754 round trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn degrees(rad: f64) -> f64 {
    rad.to_degrees()
}
