//! Thermal optical field: cubic spectral density, Bose occupation, the
//! golden-rule kernel `γ(ω)` and the ψₙ weight functions used by the polaron
//! corrections.
//!
//! Kernel integrals are carried out with `S` factored out, so their relative
//! accuracy does not depend on how weak the coupling is.

use std::f64::consts::PI;

use thiserror::Error;

use crate::quadrature::{self, NotConverged, Tolerance};
use crate::units;
use crate::ErrorCategory;

const ANGULAR: f64 = 8.0 * PI / 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum BathError {
    #[error("invalid bath parameter {field}: {value}")]
    InvalidSpec { field: &'static str, value: f64 },
    #[error("spectral density needs a non-negative frequency, got {0}")]
    NegativeFrequency(f64),
    #[error("Bose occupation needs a positive frequency, got {0}")]
    NonPositiveFrequency(f64),
    #[error("rate kernel undefined at zero transition frequency")]
    ZeroFrequency,
    #[error(transparent)]
    Quadrature(#[from] NotConverged),
}

impl BathError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            BathError::Quadrature(_) => ErrorCategory::Numeric,
            _ => ErrorCategory::Config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    coupling_constant: f64,
    cutoff_energy: f64,
    temperature: f64,
}

impl BathSpec {
    /// `temperature` in K, `cutoff_energy` in eV.
    pub fn new(coupling_constant: f64, cutoff_energy: f64, temperature: f64) -> Result<Self, BathError> {
        if !(coupling_constant.is_finite() && coupling_constant >= 0.0) {
            return Err(BathError::InvalidSpec { field: "coupling_constant", value: coupling_constant });
        }
        if !(cutoff_energy.is_finite() && cutoff_energy > 0.0) {
            return Err(BathError::InvalidSpec { field: "cutoff_energy", value: cutoff_energy });
        }
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(BathError::InvalidSpec { field: "temperature", value: temperature });
        }
        Ok(BathSpec { coupling_constant, cutoff_energy, temperature })
    }

    /// Bath matching the medium of a dimer at the given temperature.
    pub fn for_dimer(cfg: &crate::model::DimerConfig, temperature: f64) -> Result<Self, BathError> {
        Self::new(cfg.coupling_constant(), cfg.cutoff_energy(), temperature)
    }

    pub fn coupling_constant(&self) -> f64 {
        self.coupling_constant
    }

    pub fn cutoff_energy(&self) -> f64 {
        self.cutoff_energy
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Inverse temperature in 1/eV; infinite at T = 0.
    pub fn beta(&self) -> f64 {
        if self.temperature == 0.0 {
            f64::INFINITY
        } else {
            1.0 / units::thermal_energy(self.temperature)
        }
    }

    pub fn with_coupling_constant(mut self, s: f64) -> Result<Self, BathError> {
        Self::new(s, self.cutoff_energy, self.temperature).map(|b| {
            self = b;
            self
        })
    }

    /// Length beyond which thermal weights are negligible.
    fn tail_length(&self) -> f64 {
        let kt = units::thermal_energy(self.temperature);
        (60.0 * self.cutoff_energy).min(80.0 * kt)
    }

    fn occupation(&self, nu: f64) -> f64 {
        if self.temperature == 0.0 {
            0.0
        } else {
            1.0 / (self.beta() * nu).exp_m1()
        }
    }
}

/// `J(ν) = S ν³/ν_c² e^(−ν/ν_c)`.
pub fn spectral_density(nu: f64, spec: &BathSpec) -> Result<f64, BathError> {
    if !(nu >= 0.0) {
        return Err(BathError::NegativeFrequency(nu));
    }
    Ok(spec.coupling_constant * unit_density(nu, spec.cutoff_energy))
}

fn unit_density(nu: f64, nc: f64) -> f64 {
    nu * nu * nu / (nc * nc) * (-nu / nc).exp()
}

/// `N(ω) = 1/(e^{βω} − 1)`, exactly 0 at T = 0.
pub fn bose_occupation(omega: f64, spec: &BathSpec) -> Result<f64, BathError> {
    if !(omega > 0.0) {
        return Err(BathError::NonPositiveFrequency(omega));
    }
    Ok(spec.occupation(omega))
}

/// Golden-rule kernel: emission branch `(8π/3)J(ω)(N+1)` for ω > 0, absorption
/// branch `(8π/3)J(|ω|)N(|ω|)` for ω < 0.
pub fn gamma(omega: f64, spec: &BathSpec) -> Result<f64, BathError> {
    if omega == 0.0 {
        return Err(BathError::ZeroFrequency);
    }
    if !omega.is_finite() {
        return Err(BathError::NonPositiveFrequency(omega));
    }
    Ok(spec.coupling_constant * unit_weight(PsiOrder::Zero, omega, spec))
}

/// Order `n` of a ψₙ kernel; the weight carries a factor `ν^{-n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PsiOrder {
    Zero,
    One,
    Two,
}

impl PsiOrder {
    pub fn from_index(n: usize) -> Option<Self> {
        match n {
            0 => Some(PsiOrder::Zero),
            1 => Some(PsiOrder::One),
            2 => Some(PsiOrder::Two),
            _ => None,
        }
    }

    pub fn index(self) -> i32 {
        match self {
            PsiOrder::Zero => 0,
            PsiOrder::One => 1,
            PsiOrder::Two => 2,
        }
    }
}

// Weight with S = 1. Emission side x > 0, absorption side x < 0.
fn unit_weight(order: PsiOrder, x: f64, spec: &BathSpec) -> f64 {
    let n = order.index();
    let nc = spec.cutoff_energy;
    if x == 0.0 {
        // Only J/ν² survives at the origin, through N ~ 1/(βν).
        return if n == 2 && spec.temperature > 0.0 { ANGULAR / (nc * nc * spec.beta()) } else { 0.0 };
    }
    let y = x.abs();
    let base = ANGULAR * y.powi(3 - n) / (nc * nc) * (-y / nc).exp();
    if x > 0.0 {
        base * (spec.occupation(y) + 1.0)
    } else {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign * base * spec.occupation(y)
    }
}

/// Frequency-domain weight of ψₙ at `x`:
/// `(8π/3)J(x)/xⁿ (N+1)` for x > 0 and `(8π/3)(−1)ⁿ J(|x|)/|x|ⁿ N(|x|)` for
/// x < 0. The ψ₀ weight is γ itself.
pub fn psi_weight(order: PsiOrder, x: f64, spec: &BathSpec) -> f64 {
    spec.coupling_constant * unit_weight(order, x, spec)
}

/// ψₙ weights sampled on a frequency grid.
pub fn psi_n(omega_grid: &[f64], order: PsiOrder, spec: &BathSpec) -> Vec<f64> {
    omega_grid.iter().map(|&x| psi_weight(order, x, spec)).collect()
}

/// Tolerances for kernel integrals, applied to the S-free integrand.
pub fn kernel_tolerance() -> Tolerance {
    Tolerance { abs: 1e-300, rel: 1e-10, max_intervals: 4000 }
}

// ∫_X^∞ x^m e^{-x/ν_c} dx for integer m.
fn upper_gamma_tail(m: i32, x: f64, nc: f64) -> f64 {
    let z = x / nc;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=m {
        term *= z / k as f64;
        sum += term;
    }
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    nc.powi(m + 1) * fact * (-z).exp() * sum
}

/// `ψₙ(0) = ∫ wₙ(x) dx`; for n = 2 this is `(8π/3)∫ J/ν² (2N+1) dν`.
pub fn psi_at_zero(order: PsiOrder, spec: &BathSpec, tol: Tolerance) -> Result<f64, BathError> {
    Ok(spec.coupling_constant * unit_psi_at_zero(order, spec, tol)?)
}

pub(crate) fn unit_psi_at_zero(order: PsiOrder, spec: &BathSpec, tol: Tolerance) -> Result<f64, BathError> {
    let nc = spec.cutoff_energy;
    let top = 60.0 * nc;
    let mut points = vec![0.0];
    for k in [0.5, 2.0, 6.0, 15.0, 30.0] {
        points.push(k * nc);
    }
    points.push(top);
    let pos = quadrature::integrate(|x| unit_weight(order, x, spec), &points, tol)?.value;
    let tail = ANGULAR / (nc * nc) * upper_gamma_tail(3 - order.index(), top, nc);
    let l = spec.tail_length();
    let neg = if l > 0.0 {
        let pts: Vec<f64> = [-l, -l / 4.0, -l / 16.0, -l / 64.0, 0.0].to_vec();
        quadrature::integrate(|x| unit_weight(order, x, spec), &pts, tol)?.value
    } else {
        0.0
    };
    Ok(pos + tail + neg)
}

/// Fourier transform of a product of two ψ kernels at ω, i.e. the
/// convolution `∫ w_a(x) w_b(ω − x) dx`.
pub fn convolve(a: PsiOrder, b: PsiOrder, omega: f64, spec: &BathSpec, tol: Tolerance) -> Result<f64, BathError> {
    let s = spec.coupling_constant;
    Ok(s * s * unit_convolve(a, b, omega, spec, tol)?)
}

pub(crate) fn unit_convolve(
    a: PsiOrder,
    b: PsiOrder,
    omega: f64,
    spec: &BathSpec,
    tol: Tolerance,
) -> Result<f64, BathError> {
    if !omega.is_finite() {
        return Err(BathError::NonPositiveFrequency(omega));
    }
    let l = spec.tail_length();
    let (lo, hi) = (omega.min(0.0), omega.max(0.0));
    let mut points = vec![lo - l];
    if l > 0.0 {
        points.push(lo - l / 8.0);
    }
    points.extend([lo, 0.5 * (lo + hi), hi]);
    if l > 0.0 {
        points.extend([hi + l / 8.0, hi + l]);
    }
    points.dedup();
    if points.len() < 2 {
        return Ok(0.0);
    }
    let f = |x: f64| unit_weight(a, x, spec) * unit_weight(b, omega - x, spec);
    Ok(quadrature::integrate(f, &points, tol)?.value)
}
