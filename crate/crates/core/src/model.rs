//! Monomer and dimer data, and assembly of the truncated site-basis
//! operators.
//!
//! The site basis is ordered `|0⟩` (both monomers in the ground state),
//! `|1⟩` (monomer 1 excited), `|2⟩` (monomer 2 excited). The doubly excited
//! state is not represented.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use thiserror::Error;

use crate::units;
use crate::Vec3;

/// Default high-frequency cutoff of the optical spectral density, in eV.
pub const DEFAULT_CUTOFF_ENERGY: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("monomer {index}: excitation energy must be positive and finite, got {value}")]
    ExcitationEnergy { index: usize, value: f64 },
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("cutoff energy must be positive, got {0}")]
    CutoffEnergy(f64),
    #[error("coupling constant must be non-negative, got {0}")]
    CouplingConstant(f64),
    #[error("refractive index must be positive, got {0}")]
    RefractiveIndex(f64),
    #[error("coupling matrix is not symmetric: q[{a}][{b}] = {ab} but q[{b}][{a}] = {ba}")]
    Asymmetric { a: usize, b: usize, ab: f64, ba: f64 },
}

/// Transition and permanent dipoles of one monomer, in Debye.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DipoleSet {
    /// Ground↔excited transition dipole (real by choice of site phases).
    pub mu: Vec3,
    pub perm_ground: Vec3,
    pub perm_excited: Vec3,
}

impl DipoleSet {
    pub fn new(mu: Vec3, perm_ground: Vec3, perm_excited: Vec3) -> Self {
        DipoleSet { mu, perm_ground, perm_excited }
    }

    /// Change of permanent dipole on excitation, `P_e − P_g`.
    pub fn delta(&self) -> Vec3 {
        self.perm_excited - self.perm_ground
    }

    fn max_norm(&self) -> f64 {
        self.mu.norm().max(self.perm_ground.norm()).max(self.perm_excited.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomer {
    excitation_energy: f64,
    pub dipoles: DipoleSet,
}

impl Monomer {
    /// `excitation_energy` is the bare gap `E_j − E_0` in eV.
    pub fn new(excitation_energy: f64, dipoles: DipoleSet) -> Result<Self, ModelError> {
        if !(excitation_energy.is_finite() && excitation_energy > 0.0) {
            return Err(ModelError::ExcitationEnergy { index: 0, value: excitation_energy });
        }
        Ok(Monomer { excitation_energy, dipoles })
    }

    pub fn excitation_energy(&self) -> f64 {
        self.excitation_energy
    }
}

/// Electrostatic couplings `Q_ab` over the site states, in eV. Always
/// symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingMatrix {
    q: [[f64; 3]; 3],
}

impl CouplingMatrix {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds the matrix from its six independent entries.
    pub fn from_entries(q00: f64, q11: f64, q22: f64, q01: f64, q02: f64, q12: f64) -> Self {
        CouplingMatrix { q: [[q00, q01, q02], [q01, q11, q12], [q02, q12, q22]] }
    }

    /// Only off-diagonal couplings, diagonal shifts zero.
    pub fn off_diagonal(q01: f64, q02: f64, q12: f64) -> Self {
        Self::from_entries(0.0, 0.0, 0.0, q01, q02, q12)
    }

    pub fn from_array(q: [[f64; 3]; 3]) -> Result<Self, ModelError> {
        for a in 0..3 {
            for b in (a + 1)..3 {
                if q[a][b] != q[b][a] {
                    return Err(ModelError::Asymmetric { a, b, ab: q[a][b], ba: q[b][a] });
                }
            }
        }
        Ok(CouplingMatrix { q })
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.q[a][b]
    }

    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        self.q[a][b] = value;
        self.q[b][a] = value;
    }

    pub fn as_array(&self) -> [[f64; 3]; 3] {
        self.q
    }
}

/// Two monomers, their electrostatic couplings and the optical medium.
#[derive(Debug, Clone, PartialEq)]
pub struct DimerConfig {
    pub monomers: [Monomer; 2],
    pub coupling: CouplingMatrix,
    /// Add `λ(d̂₁+d̂₂)²` to the electrostatic couplings.
    pub include_self_dipole: bool,
    cutoff_energy: f64,
    refractive_index: f64,
    coupling_constant: f64,
    lambda_override: Option<f64>,
}

impl DimerConfig {
    /// Vacuum medium (n = 1) with the default 10 eV cutoff; `S` is derived.
    pub fn new(monomer1: Monomer, monomer2: Monomer, coupling: CouplingMatrix) -> Result<Self, ModelError> {
        let cfg = DimerConfig {
            monomers: [monomer1, monomer2],
            coupling,
            include_self_dipole: false,
            cutoff_energy: DEFAULT_CUTOFF_ENERGY,
            refractive_index: 1.0,
            coupling_constant: units::coupling_constant(1.0, DEFAULT_CUTOFF_ENERGY),
            lambda_override: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets refractive index and cutoff and re-derives `S` from them.
    pub fn with_medium(mut self, refractive_index: f64, cutoff_energy: f64) -> Result<Self, ModelError> {
        if !(refractive_index.is_finite() && refractive_index > 0.0) {
            return Err(ModelError::RefractiveIndex(refractive_index));
        }
        if !(cutoff_energy.is_finite() && cutoff_energy > 0.0) {
            return Err(ModelError::CutoffEnergy(cutoff_energy));
        }
        self.refractive_index = refractive_index;
        self.cutoff_energy = cutoff_energy;
        self.coupling_constant = units::coupling_constant(refractive_index, cutoff_energy);
        Ok(self)
    }

    /// Supplies `S` directly instead of deriving it from the medium.
    pub fn with_coupling_constant(mut self, s: f64) -> Result<Self, ModelError> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(ModelError::CouplingConstant(s));
        }
        self.coupling_constant = s;
        Ok(self)
    }

    pub fn with_self_dipole(mut self, on: bool) -> Self {
        self.include_self_dipole = on;
        self
    }

    /// Replaces the self-dipole strength given by [`compute_lambda`].
    pub fn with_lambda_override(mut self, lambda: Option<f64>) -> Result<Self, ModelError> {
        if let Some(l) = lambda {
            if !l.is_finite() {
                return Err(ModelError::NonFinite { field: "lambda", value: l });
            }
        }
        self.lambda_override = lambda;
        Ok(self)
    }

    pub fn cutoff_energy(&self) -> f64 {
        self.cutoff_energy
    }

    pub fn refractive_index(&self) -> f64 {
        self.refractive_index
    }

    pub fn coupling_constant(&self) -> f64 {
        self.coupling_constant
    }

    pub fn lambda_override(&self) -> Option<f64> {
        self.lambda_override
    }

    /// Self-dipole strength in use: the override if present, else the formula.
    pub fn lambda(&self) -> f64 {
        self.lambda_override.unwrap_or_else(|| compute_lambda(self))
    }

    /// Effective site energies `ε_a = E_a + Q_aa − E_0 − Q_00` (ε₀ = 0).
    pub fn effective_energies(&self) -> [f64; 3] {
        let q = &self.coupling;
        [
            0.0,
            self.monomers[0].excitation_energy + q.get(1, 1) - q.get(0, 0),
            self.monomers[1].excitation_energy + q.get(2, 2) - q.get(0, 0),
        ]
    }

    pub fn max_dipole_norm(&self) -> f64 {
        self.monomers[0].dipoles.max_norm().max(self.monomers[1].dipoles.max_norm())
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (i, m) in self.monomers.iter().enumerate() {
            if !(m.excitation_energy.is_finite() && m.excitation_energy > 0.0) {
                return Err(ModelError::ExcitationEnergy { index: i + 1, value: m.excitation_energy });
            }
            let d = &m.dipoles;
            for v in [d.mu, d.perm_ground, d.perm_excited] {
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(ModelError::NonFinite { field: "dipole", value: v.norm() });
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let q = self.coupling.get(a, b);
                if !q.is_finite() {
                    return Err(ModelError::NonFinite { field: "coupling", value: q });
                }
            }
        }
        for e in self.effective_energies() {
            if !e.is_finite() {
                return Err(ModelError::NonFinite { field: "effective energy", value: e });
            }
        }
        Ok(())
    }
}

/// Real symmetric 3×3 Hamiltonian in the site basis, eV, with `h[0][0] = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteHamiltonian {
    pub h: Matrix3<f64>,
}

impl SiteHamiltonian {
    pub fn from_matrix(h: Matrix3<f64>) -> Self {
        SiteHamiltonian { h }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.h[(a, b)]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..3).all(|a| (0..3).all(|b| (self.h[(a, b)] - self.h[(b, a)]).abs() <= tol))
    }
}

/// Matrix of dipole vectors `⟨a|d̂₁+d̂₂|b⟩` over the site states, Debye.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteDipoleMatrix {
    pub d: [[Vec3; 3]; 3],
}

impl SiteDipoleMatrix {
    pub fn get(&self, a: usize, b: usize) -> Vec3 {
        self.d[a][b]
    }

    /// Transition dipole of monomer `j` (1 or 2).
    pub fn transition_dipole(&self, j: usize) -> Vec3 {
        self.d[0][j]
    }

    /// `Σ_ab d_ab·d_ab`, invariant under orthogonal basis changes.
    pub fn frobenius_sq(&self) -> f64 {
        frobenius_sq(&self.d)
    }

    /// `(D·D)[a][b] = Σ_c d[a][c]·d[c][b]`, the matrix of `(d̂₁+d̂₂)²`.
    pub fn squared(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|a, b| (0..3).map(|c| self.d[a][c].dot(&self.d[c][b])).sum())
    }

    /// Rotates into the basis whose rows of `u` are the new states.
    pub fn transform(&self, u: &Matrix3<f64>) -> [[Vec3; 3]; 3] {
        let mut out = [[Vec3::zeros(); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = Vec3::zeros();
                for s in 0..3 {
                    for t in 0..3 {
                        acc += u[(a, s)] * u[(b, t)] * self.d[s][t];
                    }
                }
                out[a][b] = acc;
            }
        }
        out
    }
}

pub(crate) fn frobenius_sq(d: &[[Vec3; 3]; 3]) -> f64 {
    d.iter().flat_map(|row| row.iter()).map(|v| v.norm_squared()).sum()
}

/// Self-dipole strength `λ = 16π ν_c S / 3`, in eV per Debye².
pub fn compute_lambda(cfg: &DimerConfig) -> f64 {
    16.0 * PI * cfg.cutoff_energy * cfg.coupling_constant / 3.0
}

pub fn site_dipole_matrix(cfg: &DimerConfig) -> SiteDipoleMatrix {
    let [m1, m2] = &cfg.monomers;
    let (d1, d2) = (&m1.dipoles, &m2.dipoles);
    let z = Vec3::zeros();
    SiteDipoleMatrix {
        d: [
            [d1.perm_ground + d2.perm_ground, d1.mu, d2.mu],
            [d1.mu, d1.perm_excited + d2.perm_ground, z],
            [d2.mu, z, d1.perm_ground + d2.perm_excited],
        ],
    }
}

/// `λ ⟨a|(d̂₁+d̂₂)²|b⟩` within the truncated three-state space.
pub fn self_dipole_shift(cfg: &DimerConfig, a: usize, b: usize) -> f64 {
    let d = site_dipole_matrix(cfg);
    cfg.lambda() * (0..3).map(|c| d.d[a][c].dot(&d.d[c][b])).sum::<f64>()
}

/// Couplings `Q'` actually entering the Hamiltonian: `Q` plus the self-dipole
/// term when it is switched on.
pub fn effective_coupling(cfg: &DimerConfig) -> CouplingMatrix {
    let mut q = cfg.coupling;
    if cfg.include_self_dipole {
        let lambda = cfg.lambda();
        let sq = site_dipole_matrix(cfg).squared();
        for a in 0..3 {
            for b in a..3 {
                q.set(a, b, cfg.coupling.get(a, b) + lambda * sq[(a, b)]);
            }
        }
    }
    q
}

pub fn assemble_site_hamiltonian(cfg: &DimerConfig) -> SiteHamiltonian {
    let q = effective_coupling(cfg);
    let e1 = cfg.monomers[0].excitation_energy + q.get(1, 1) - q.get(0, 0);
    let e2 = cfg.monomers[1].excitation_energy + q.get(2, 2) - q.get(0, 0);
    let (q01, q02, q12) = (q.get(0, 1), q.get(0, 2), q.get(1, 2));
    SiteHamiltonian {
        h: Matrix3::new(
            0.0, q01, q02, //
            q01, e1, q12, //
            q02, q12, e2,
        ),
    }
}
