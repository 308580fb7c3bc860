//! Physical constants and unit conversions.

use std::f64::consts::PI;

/// Reduced Planck constant in eV·s.
pub const HBAR_EV_S: f64 = 6.582119569e-16;

/// Boltzmann constant in eV/K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617333262e-5;

const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
const VACUUM_PERMITTIVITY_F_M: f64 = 8.854_187_812_8e-12;
const HBAR_J_S: f64 = 1.054_571_817e-34;
/// ħc in eV·m.
const HBAR_C_EV_M: f64 = 1.973_269_804e-7;

/// One Debye in C·m (defined as 10⁻²¹/c).
pub const DEBYE_C_M: f64 = 1e-21 / SPEED_OF_LIGHT_M_S;

/// Square of the 1 D reference dipole in natural Heaviside–Lorentz units
/// (ħ = c = ε₀ = 1), in eV⁻².
pub fn debye_squared_natural() -> f64 {
    let length_sq_m2 = DEBYE_C_M * DEBYE_C_M / (VACUUM_PERMITTIVITY_F_M * HBAR_J_S * SPEED_OF_LIGHT_M_S);
    length_sq_m2 / (HBAR_C_EV_M * HBAR_C_EV_M)
}

/// Dimensionless field coupling constant `S = n ν_c² |d_ref|² / 8π²` with a
/// 1 D reference dipole.
pub fn coupling_constant(refractive_index: f64, cutoff_energy: f64) -> f64 {
    refractive_index * cutoff_energy * cutoff_energy * debye_squared_natural() / (8.0 * PI * PI)
}

/// Converts a time in ħ/eV to seconds.
pub fn natural_time_to_seconds(t: f64) -> f64 {
    t * HBAR_EV_S
}

/// Converts a time in seconds to ħ/eV.
pub fn seconds_to_natural_time(t: f64) -> f64 {
    t / HBAR_EV_S
}

/// Converts a rate in eV (ħ = 1) to s⁻¹.
pub fn rate_to_per_second(rate: f64) -> f64 {
    rate / HBAR_EV_S
}

/// Thermal energy k_B T in eV.
pub fn thermal_energy(temperature_k: f64) -> f64 {
    BOLTZMANN_EV_PER_K * temperature_k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_constant_matches_vacuum_value() {
        // n = 1, ν_c = 10 eV gives S ≈ 1.29e-9.
        let s = coupling_constant(1.0, 10.0);
        assert!((s - 1.29e-9).abs() / 1.29e-9 < 5e-3, "S = {s:e}");
    }

    #[test]
    fn time_round_trip() {
        let t = 3.7e5;
        let back = seconds_to_natural_time(natural_time_to_seconds(t));
        assert!((back - t).abs() < 1e-9 * t);
    }
}
