//! Rate corrections from the optical polaron dressing generated by the
//! permanent dipoles of the dimer eigenstates.
//!
//! The dressed rate for `b → a` is expanded to fourth order in the dipole
//! coupling. With `ω = E_b − E_a`, `d = d_ab` and `Δ = d_aa − d_bb`:
//!
//! ```text
//! Γ = |d|²γ(ω) − |d|²|Δ|² K_d(ω) + |d·Δ|² C₁₁(ω)
//!     − 2λ [((d·d_aa)² − (d·d_bb)²)/ω] γ(ω)
//! K_d(ω) = ψ₂(0)γ(ω) − FT[ψ₂ψ₀](ω),   C₁₁(ω) = FT[ψ₁²](ω)
//! ```
//!
//! Every term carries `|d|²` or `(d·…)²`, so a transition with `d_ab = 0`
//! stays exactly dark.

use thiserror::Error;

use crate::bath::{self, BathError, BathSpec, PsiOrder};
use crate::dynamics;
use crate::eigen::EigenSystem;
use crate::quadrature::Tolerance;
use crate::{ErrorCategory, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum PolaronError {
    #[error("states {a} and {b} are degenerate; the dressing is undefined")]
    Degenerate { a: usize, b: usize },
    #[error("a transition needs two different states, got {0} twice")]
    SameState(usize),
    #[error("state index {0} out of range")]
    BadState(usize),
    #[error("self-dipole strength must be finite, got {0}")]
    BadLambda(f64),
    #[error(transparent)]
    Bath(#[from] BathError),
}

impl PolaronError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            PolaronError::Degenerate { .. } => ErrorCategory::Secular,
            PolaronError::Bath(e) => e.category(),
            _ => ErrorCategory::Config,
        }
    }
}

/// Frequency at which the fourth-order expansion evaluates its kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateFrequency {
    /// Bare eigenstate splitting `E_b − E_a`.
    #[default]
    Bare,
    /// Splitting of the shifted energies `Ē_b − Ē_a`.
    Shifted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolaronFrame {
    pub lambda: f64,
    /// `Ē_a = E_a − λ|d_aa|²`.
    pub shifted_energies: [f64; 3],
    /// `d̄_ab`; the diagonal is left as `d_aa`.
    pub dressed_dipoles: [[Vec3; 3]; 3],
    /// `Δ̄_ab = d̄_aa − d̄_bb`.
    pub delta_dipoles: [[Vec3; 3]; 3],
}

impl PolaronFrame {
    pub fn shifted_frequency(&self, from: usize, to: usize) -> f64 {
        self.shifted_energies[from] - self.shifted_energies[to]
    }
}

/// Dresses the eigenbasis dipoles:
/// `d̄_ab = d_ab + λ (d_ab·(d_aa+d_bb))/(E_a−E_b) (d_aa−d_bb)`.
pub fn build_polaron_frame(es: &EigenSystem, lambda: f64) -> Result<PolaronFrame, PolaronError> {
    if !lambda.is_finite() {
        return Err(PolaronError::BadLambda(lambda));
    }
    if let Err(dynamics::DynamicsError::SecularBreakdown { a, b, .. }) = dynamics::check_secular(&es.energies) {
        return Err(PolaronError::Degenerate { a, b });
    }
    let d = &es.dipoles;
    let mut dressed = *d;
    let mut delta = [[Vec3::zeros(); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            delta[a][b] = d[a][a] - d[b][b];
            if a != b {
                let coef = lambda * d[a][b].dot(&(d[a][a] + d[b][b])) / (es.energies[a] - es.energies[b]);
                dressed[a][b] = d[a][b] + coef * delta[a][b];
            }
        }
    }
    let shifted_energies = [0, 1, 2].map(|a| es.energies[a] - lambda * d[a][a].norm_squared());
    Ok(PolaronFrame { lambda, shifted_energies, dressed_dipoles: dressed, delta_dipoles: delta })
}

/// Bath kernels for one bath, with `ψ₂(0)` computed once.
#[derive(Debug, Clone, Copy)]
pub struct PolaronKernels {
    spec: BathSpec,
    tol: Tolerance,
    psi2_zero: f64,
}

impl PolaronKernels {
    pub fn new(spec: &BathSpec) -> Result<Self, PolaronError> {
        Self::with_tolerance(spec, bath::kernel_tolerance())
    }

    pub fn with_tolerance(spec: &BathSpec, tol: Tolerance) -> Result<Self, PolaronError> {
        let psi2_zero = bath::psi_at_zero(PsiOrder::Two, spec, tol)?;
        Ok(PolaronKernels { spec: *spec, tol, psi2_zero })
    }

    pub fn spec(&self) -> &BathSpec {
        &self.spec
    }

    /// `ψ₂(0)`, dimensionless per Debye².
    pub fn psi2_zero(&self) -> f64 {
        self.psi2_zero
    }

    pub fn gamma(&self, omega: f64) -> Result<f64, PolaronError> {
        Ok(bath::gamma(omega, &self.spec)?)
    }

    /// `FT[ψ₂ψ₀](ω)`.
    pub fn convolution_20(&self, omega: f64) -> Result<f64, PolaronError> {
        Ok(bath::convolve(PsiOrder::Two, PsiOrder::Zero, omega, &self.spec, self.tol)?)
    }

    /// `FT[ψ₁ψ₁](ω)`.
    pub fn convolution_11(&self, omega: f64) -> Result<f64, PolaronError> {
        Ok(bath::convolve(PsiOrder::One, PsiOrder::One, omega, &self.spec, self.tol)?)
    }

    /// `K(ω) = γ(ω) − FT[ψ₂ψ₀](ω)`.
    pub fn kernel_k(&self, omega: f64) -> Result<f64, PolaronError> {
        Ok(self.gamma(omega)? - self.convolution_20(omega)?)
    }

    /// `K_d(ω) = ψ₂(0)γ(ω) − FT[ψ₂ψ₀](ω)`, the loss kernel multiplying
    /// `|d|²|Δ|²`.
    pub fn dressing_kernel(&self, omega: f64) -> Result<f64, PolaronError> {
        Ok(self.psi2_zero * self.gamma(omega)? - self.convolution_20(omega)?)
    }
}

/// `K(ω) = γ(ω) − FT[ψ₂ψ₀](ω)` evaluated by frequency-domain convolution.
pub fn kernel_k(omega: f64, spec: &BathSpec) -> Result<f64, PolaronError> {
    if omega == 0.0 {
        return Err(BathError::ZeroFrequency.into());
    }
    Ok(bath::gamma(omega, spec)?
        - bath::convolve(PsiOrder::Two, PsiOrder::Zero, omega, spec, bath::kernel_tolerance())?)
}

fn check_pair(from: usize, to: usize) -> Result<(), PolaronError> {
    if from > 2 {
        return Err(PolaronError::BadState(from));
    }
    if to > 2 {
        return Err(PolaronError::BadState(to));
    }
    if from == to {
        return Err(PolaronError::SameState(from));
    }
    Ok(())
}

/// Breakdown of the fourth-order rate for one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedRate {
    /// `|d|²γ(ω)`.
    pub bare: f64,
    /// `−|d|²|Δ|²K_d(ω)`.
    pub dressing: f64,
    /// `|d·Δ|²C₁₁(ω)`.
    pub cross: f64,
    /// `−2λ[((d·d_aa)² − (d·d_bb)²)/ω]γ(ω)`.
    pub self_dipole: f64,
}

impl CorrectedRate {
    pub fn correction(&self) -> f64 {
        self.dressing + self.cross + self.self_dipole
    }

    pub fn total(&self) -> f64 {
        self.bare + self.correction()
    }
}

/// Fourth-order rate for `from → to`.
pub fn corrected_rate_terms(
    frame: &PolaronFrame,
    es: &EigenSystem,
    kernels: &PolaronKernels,
    from: usize,
    to: usize,
    frequency: RateFrequency,
) -> Result<CorrectedRate, PolaronError> {
    check_pair(from, to)?;
    let (a, b) = (to, from);
    let d = es.dipoles[a][b];
    let omega_bare = es.energies[b] - es.energies[a];
    if omega_bare == 0.0 {
        return Err(PolaronError::Degenerate { a: a.min(b), b: a.max(b) });
    }
    let d2 = d.norm_squared();
    if d2 == 0.0 {
        return Ok(CorrectedRate { bare: 0.0, dressing: 0.0, cross: 0.0, self_dipole: 0.0 });
    }
    let omega = match frequency {
        RateFrequency::Bare => omega_bare,
        RateFrequency::Shifted => frame.shifted_frequency(b, a),
    };
    let delta = frame.delta_dipoles[a][b];
    let gamma = kernels.gamma(omega)?;
    let dressing =
        if delta.norm_squared() == 0.0 { 0.0 } else { -d2 * delta.norm_squared() * kernels.dressing_kernel(omega)? };
    let proj = d.dot(&delta);
    let cross = if proj == 0.0 { 0.0 } else { proj * proj * kernels.convolution_11(omega)? };
    let (pa, pb) = (d.dot(&es.dipoles[a][a]), d.dot(&es.dipoles[b][b]));
    let self_dipole = -2.0 * frame.lambda * (pa * pa - pb * pb) / omega_bare * gamma;
    Ok(CorrectedRate { bare: d2 * gamma, dressing, cross, self_dipole })
}

/// Fourth-order corrected rate for `from → to`, in eV.
pub fn corrected_rate(
    frame: &PolaronFrame,
    es: &EigenSystem,
    spec: &BathSpec,
    from: usize,
    to: usize,
) -> Result<f64, PolaronError> {
    let kernels = PolaronKernels::new(spec)?;
    Ok(corrected_rate_terms(frame, es, &kernels, from, to, RateFrequency::Bare)?.total())
}

/// Polaron-frame rate for `from → to` with the exponentiated ψ₂ kernel kept
/// to second order:
/// `|d̄|²[γ(ω̄)(1 − |Δ̄|²ψ₂(0)) + |Δ̄|²FT[ψ₂ψ₀](ω̄)] + |d̄·Δ̄|²FT[ψ₁²](ω̄)`.
pub fn full_polaron_rate_with(
    frame: &PolaronFrame,
    kernels: &PolaronKernels,
    from: usize,
    to: usize,
) -> Result<f64, PolaronError> {
    check_pair(from, to)?;
    let (a, b) = (to, from);
    let d = frame.dressed_dipoles[a][b];
    let d2 = d.norm_squared();
    if d2 == 0.0 {
        return Ok(0.0);
    }
    let omega = frame.shifted_frequency(b, a);
    if omega == 0.0 {
        return Err(PolaronError::Degenerate { a: a.min(b), b: a.max(b) });
    }
    let delta = frame.delta_dipoles[a][b];
    let dl2 = delta.norm_squared();
    let gamma = kernels.gamma(omega)?;
    let mut rate = d2 * gamma * (1.0 - dl2 * kernels.psi2_zero());
    if dl2 > 0.0 {
        rate += d2 * dl2 * kernels.convolution_20(omega)?;
    }
    let proj = d.dot(&delta);
    if proj != 0.0 {
        rate += proj * proj * kernels.convolution_11(omega)?;
    }
    Ok(rate)
}

pub fn full_polaron_rate(
    frame: &PolaronFrame,
    _es: &EigenSystem,
    spec: &BathSpec,
    from: usize,
    to: usize,
) -> Result<f64, PolaronError> {
    full_polaron_rate_with(frame, &PolaronKernels::new(spec)?, from, to)
}
