//! Physical constants. Everything downstream works in geometric units
//! (G = c = 1) with lengths in meters; these are the only SI inputs.

/// Newtonian constant of gravitation, CODATA 2018 (m^3 kg^-1 s^-2).
pub const G: f64 = 6.674_30e-11;
/// Speed of light in vacuum, exact (m/s).
pub const C: f64 = 299_792_458.0;
/// Geocentric gravitational constant GM, IERS 2010 conventions (m^3 s^-2).
pub const GM_EARTH: f64 = 3.986_004_418e14;
/// Heliocentric gravitational constant GM, IAU 2015 nominal (m^3 s^-2).
pub const GM_SUN: f64 = 1.327_124_400_18e20;
/// Mean Earth radius (m).
pub const EARTH_RADIUS: f64 = 6_371_000.0;
/// Receiver altitude used by the near-Earth scenarios (m).
pub const GEO_ALTITUDE: f64 = 36_000_000.0;
/// Mass of M87* in solar masses. Commonly quoted value; only orders of
/// magnitude of the M87* results depend on it.
pub const M87_SOLAR_MASSES: f64 = 6.5e9;

/// Geometric mass GM/c^2 of the Earth (m), about 4.435 mm.
pub const EARTH_MASS_LENGTH: f64 = GM_EARTH / (C * C);
/// Geometric mass GM/c^2 of the Sun (m), about 1.477 km.
pub const SUN_MASS_LENGTH: f64 = GM_SUN / (C * C);

/// Convert a mass in kilograms to its geometric length GM/c^2.
pub fn mass_kg_to_length(mass_kg: f64) -> f64 {
    G * mass_kg / (C * C)
}
