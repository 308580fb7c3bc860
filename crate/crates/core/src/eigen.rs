//! Diagonalisation of the three-state dimer Hamiltonian and transformation of
//! the dipole operator into the eigenbasis.
//!
//! Three coupling geometries have closed forms:
//!
//! * direct (A): only `Q₁₂` couples, ground state untouched;
//! * indirect (B): degenerate monomers driven through `Q₀₁`, `Q₀₂` only;
//! * mixed (C): degenerate monomers with `Q₀₁ = Q₀₂ = Q_G` and `Q₁₂ = Q_X`.
//!
//! Anything else goes through [`diag_numeric`]. The closed forms produce the
//! eigenbasis dipoles from explicit expressions rather than by rotating the
//! site matrix, so they double as an independent check on the numeric path.

use std::f64::consts::SQRT_2;

use nalgebra::{Matrix3, SymmetricEigen};
use thiserror::Error;

use crate::model::{self, DimerConfig, Monomer, SiteDipoleMatrix, SiteHamiltonian};
use crate::{ErrorCategory, Vec3};

/// Tolerance on couplings or energy differences that a closed form requires
/// to vanish, in eV.
pub const PRECONDITION_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("case {case:?} precondition violated: {detail}")]
    Precondition { case: CaseTag, detail: String },
    #[error("site Hamiltonian is not symmetric (max asymmetry {0:e} eV)")]
    Asymmetric(f64),
    #[error("symmetric eigensolver did not converge")]
    NotConverged,
    #[error("monomer dipole undefined: zero denominator for this field")]
    DegenerateMonomer,
}

impl EigenError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            EigenError::NotConverged => ErrorCategory::Numeric,
            _ => ErrorCategory::Config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    DirectA,
    IndirectB,
    MixedC,
    Numeric,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::DirectA => "A",
            CaseTag::IndirectB => "B",
            CaseTag::MixedC => "C",
            CaseTag::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingAngles {
    pub chi: f64,
    /// Normalised driving terms `D_j = Q₀ⱼ/√(Q₀₁²+Q₀₂²)`, indirect case only.
    pub d1_weight: Option<f64>,
    pub d2_weight: Option<f64>,
}

impl MixingAngles {
    pub fn cos(&self) -> f64 {
        self.chi.cos()
    }

    pub fn sin(&self) -> f64 {
        self.chi.sin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    /// Ascending eigenenergies, eV.
    pub energies: [f64; 3],
    /// Rows are the eigenvectors expressed in the site basis.
    pub unitary: Matrix3<f64>,
    /// `d_ab` between eigenstates, Debye.
    pub dipoles: [[Vec3; 3]; 3],
    pub case_tag: CaseTag,
    pub mixing: Option<MixingAngles>,
    /// Site-basis dipoles the system was built from.
    pub site_dipoles: SiteDipoleMatrix,
}

impl EigenSystem {
    pub fn dipole(&self, a: usize, b: usize) -> Vec3 {
        self.dipoles[a][b]
    }

    /// `|d_ab|²` in Debye².
    pub fn strength(&self, a: usize, b: usize) -> f64 {
        self.dipoles[a][b].norm_squared()
    }

    pub fn frobenius_sq(&self) -> f64 {
        model::frobenius_sq(&self.dipoles)
    }

    /// Largest `|μ_j|²` of the two monomers, the reference for dark-state
    /// classification.
    pub fn max_monomer_strength(&self) -> f64 {
        self.site_dipoles.transition_dipole(1).norm_squared().max(self.site_dipoles.transition_dipole(2).norm_squared())
    }

    /// Smallest spacing between eigenenergies.
    pub fn min_gap(&self) -> f64 {
        let e = self.energies;
        (e[1] - e[0]).min(e[2] - e[1])
    }

    /// Eigenvector `a` in the site basis.
    pub fn eigenvector(&self, a: usize) -> [f64; 3] {
        [self.unitary[(a, 0)], self.unitary[(a, 1)], self.unitary[(a, 2)]]
    }
}

fn half_angles(cos_chi: f64, sin_sign: f64) -> (f64, f64) {
    let c = (0.5 * (1.0 + cos_chi)).max(0.0).sqrt();
    let s = (0.5 * (1.0 - cos_chi)).max(0.0).sqrt();
    (c, if sin_sign < 0.0 { -s } else { s })
}

// Roots of x² − p x − r with p = sum, r = −product, ordered (lower, upper),
// computed without cancellation.
fn quadratic_pair(sum: f64, product: f64, omega: f64) -> (f64, f64) {
    if sum >= 0.0 {
        let hi = 0.5 * (sum + omega);
        let lo = if hi != 0.0 { product / hi } else { 0.0 };
        (lo, hi)
    } else {
        let lo = 0.5 * (sum - omega);
        (lo, product / lo)
    }
}

fn sorted(energies: [f64; 3], u: Matrix3<f64>, d: [[Vec3; 3]; 3]) -> ([f64; 3], Matrix3<f64>, [[Vec3; 3]; 3]) {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| energies[i].total_cmp(&energies[j]));
    let e = [energies[idx[0]], energies[idx[1]], energies[idx[2]]];
    let u2 = Matrix3::from_fn(|a, s| u[(idx[a], s)]);
    let mut d2 = [[Vec3::zeros(); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            d2[a][b] = d[idx[a]][idx[b]];
        }
    }
    (e, u2, d2)
}

fn symmetric(d: [[Vec3; 3]; 3]) -> [[Vec3; 3]; 3] {
    let mut out = d;
    for a in 0..3 {
        for b in 0..a {
            out[a][b] = d[b][a];
        }
    }
    out
}

fn violation(case: CaseTag, detail: String) -> EigenError {
    EigenError::Precondition { case, detail }
}

struct Parts {
    p0: Vec3,
    mu1: Vec3,
    mu2: Vec3,
    delta1: Vec3,
    delta2: Vec3,
}

fn parts(cfg: &DimerConfig) -> Parts {
    let [m1, m2] = &cfg.monomers;
    Parts {
        p0: m1.dipoles.perm_ground + m2.dipoles.perm_ground,
        mu1: m1.dipoles.mu,
        mu2: m2.dipoles.mu,
        delta1: m1.dipoles.delta(),
        delta2: m2.dipoles.delta(),
    }
}

/// Direct coupling: `Q₀₁ = Q₀₂ = 0`.
///
/// Uses `cos χ = (ε₂−ε₁)/ω₁₂`, `sin χ = −2Q₁₂/ω₁₂` so that
/// `|1⟩ₐ = cos(χ/2)|1⟩ + sin(χ/2)|2⟩` is the lower excited state.
pub fn diag_case_a(cfg: &DimerConfig) -> Result<EigenSystem, EigenError> {
    let h = model::assemble_site_hamiltonian(cfg);
    let tag = CaseTag::DirectA;
    for (b, name) in [(1, "q01"), (2, "q02")] {
        if h.get(0, b).abs() > PRECONDITION_TOL {
            return Err(violation(tag, format!("{name} = {:e} must vanish", h.get(0, b))));
        }
    }
    let (e1, e2, q) = (h.get(1, 1), h.get(2, 2), h.get(1, 2));
    let omega = (e1 - e2).hypot(2.0 * q);
    let (cos_chi, sin_chi) = if omega > 0.0 { ((e2 - e1) / omega, -2.0 * q / omega) } else { (1.0, 0.0) };
    let (c, s) = half_angles(cos_chi, sin_chi);
    let (lo, hi) = quadratic_pair(e1 + e2, e1 * e2 - q * q, omega);

    let p = parts(cfg);
    let mut d = [[Vec3::zeros(); 3]; 3];
    d[0][0] = p.p0;
    d[0][1] = c * p.mu1 + s * p.mu2;
    d[0][2] = c * p.mu2 - s * p.mu1;
    d[1][2] = c * s * (p.delta2 - p.delta1);
    d[1][1] = p.p0 + c * c * p.delta1 + s * s * p.delta2;
    d[2][2] = p.p0 + s * s * p.delta1 + c * c * p.delta2;
    let u = Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, c, s, //
        0.0, -s, c,
    );
    let (energies, unitary, dipoles) = sorted([0.0, lo, hi], u, symmetric(d));
    Ok(EigenSystem {
        energies,
        unitary,
        dipoles,
        case_tag: tag,
        mixing: Some(MixingAngles { chi: sin_chi.atan2(cos_chi), d1_weight: None, d2_weight: None }),
        site_dipoles: model::site_dipole_matrix(cfg),
    })
}

/// Indirect coupling: `Q₁₂ = 0`, `ε₁ = ε₂`, and at least one of `Q₀₁`, `Q₀₂`
/// nonzero.
pub fn diag_case_b(cfg: &DimerConfig) -> Result<EigenSystem, EigenError> {
    let h = model::assemble_site_hamiltonian(cfg);
    let tag = CaseTag::IndirectB;
    if h.get(1, 2).abs() > PRECONDITION_TOL {
        return Err(violation(tag, format!("q12 = {:e} must vanish", h.get(1, 2))));
    }
    if (h.get(1, 1) - h.get(2, 2)).abs() > PRECONDITION_TOL {
        return Err(violation(tag, format!("site energies differ: {} vs {}", h.get(1, 1), h.get(2, 2))));
    }
    let (q01, q02) = (h.get(0, 1), h.get(0, 2));
    let r = q01.hypot(q02);
    if r == 0.0 {
        return Err(violation(tag, "q01 and q02 both vanish".into()));
    }
    let eps = 0.5 * (h.get(1, 1) + h.get(2, 2));
    let (d1, d2) = (q01 / r, q02 / r);
    let omega = (2.0 * r).hypot(eps);
    let (cos_chi, sin_chi) = (eps / omega, 2.0 * r / omega);
    let (c, s) = half_angles(cos_chi, sin_chi);
    let (lo, hi) = quadratic_pair(eps, -r * r, omega);

    let p = parts(cfg);
    let drive = d1 * p.mu1 + d2 * p.mu2;
    let orth = d2 * p.mu1 - d1 * p.mu2;
    let mixed = d1 * d1 * p.delta1 + d2 * d2 * p.delta2;
    let cross = d1 * d2 * (p.delta1 - p.delta2);
    let mut d = [[Vec3::zeros(); 3]; 3];
    d[0][1] = c * orth - s * cross;
    d[0][2] = cos_chi * drive - 0.5 * sin_chi * mixed;
    d[1][2] = s * orth + c * cross;
    d[0][0] = p.p0 - sin_chi * drive + s * s * mixed;
    d[1][1] = p.p0 + d2 * d2 * p.delta1 + d1 * d1 * p.delta2;
    d[2][2] = p.p0 + sin_chi * drive + c * c * mixed;
    let u = Matrix3::new(
        c,
        -s * d1,
        -s * d2, //
        0.0,
        d2,
        -d1, //
        s,
        c * d1,
        c * d2,
    );
    let (energies, unitary, dipoles) = sorted([lo, eps, hi], u, symmetric(d));
    Ok(EigenSystem {
        energies,
        unitary,
        dipoles,
        case_tag: tag,
        mixing: Some(MixingAngles { chi: sin_chi.atan2(cos_chi), d1_weight: Some(d1), d2_weight: Some(d2) }),
        site_dipoles: model::site_dipole_matrix(cfg),
    })
}

/// Mixed coupling: `ε₁ = ε₂ = ε`, `Q₀₁ = Q₀₂ = Q_G`, `Q₁₂ = Q_X`.
pub fn diag_case_c(cfg: &DimerConfig) -> Result<EigenSystem, EigenError> {
    let h = model::assemble_site_hamiltonian(cfg);
    let tag = CaseTag::MixedC;
    if (h.get(1, 1) - h.get(2, 2)).abs() > PRECONDITION_TOL {
        return Err(violation(tag, format!("site energies differ: {} vs {}", h.get(1, 1), h.get(2, 2))));
    }
    if (h.get(0, 1) - h.get(0, 2)).abs() > PRECONDITION_TOL {
        return Err(violation(tag, format!("q01 = {} differs from q02 = {}", h.get(0, 1), h.get(0, 2))));
    }
    let eps = 0.5 * (h.get(1, 1) + h.get(2, 2));
    let g = 0.5 * (h.get(0, 1) + h.get(0, 2));
    let x = h.get(1, 2);
    let shifted = eps + x;
    let omega = (2.0 * SQRT_2 * g).hypot(shifted);
    let (cos_chi, sin_chi) = if omega > 0.0 { (shifted / omega, 2.0 * SQRT_2 * g / omega) } else { (1.0, 0.0) };
    let (c, s) = half_angles(cos_chi, sin_chi);
    let (lo, hi) = quadratic_pair(shifted, -2.0 * g * g, omega);

    let p = parts(cfg);
    let mu_sum = p.mu1 + p.mu2;
    let mu_diff = p.mu1 - p.mu2;
    let dl_sum = p.delta1 + p.delta2;
    let dl_diff = p.delta1 - p.delta2;
    let mut d = [[Vec3::zeros(); 3]; 3];
    d[0][1] = c * mu_diff / SQRT_2 - 0.5 * s * dl_diff;
    d[0][2] = cos_chi * mu_sum / SQRT_2 - 0.25 * sin_chi * dl_sum;
    d[1][2] = s * mu_diff / SQRT_2 + 0.5 * c * dl_diff;
    d[0][0] = p.p0 - sin_chi / SQRT_2 * mu_sum + 0.5 * s * s * dl_sum;
    d[1][1] = p.p0 + 0.5 * dl_sum;
    d[2][2] = p.p0 + sin_chi / SQRT_2 * mu_sum + 0.5 * c * c * dl_sum;
    let r = 1.0 / SQRT_2;
    let u = Matrix3::new(
        c,
        -s * r,
        -s * r, //
        0.0,
        r,
        -r, //
        s,
        c * r,
        c * r,
    );
    let (energies, unitary, dipoles) = sorted([lo, eps - x, hi], u, symmetric(d));
    Ok(EigenSystem {
        energies,
        unitary,
        dipoles,
        case_tag: tag,
        mixing: Some(MixingAngles { chi: sin_chi.atan2(cos_chi), d1_weight: None, d2_weight: None }),
        site_dipoles: model::site_dipole_matrix(cfg),
    })
}

/// Numeric diagonalisation of any symmetric site Hamiltonian.
///
/// Eigenvectors are signed so their largest-magnitude component is
/// positive; among equal magnitudes the lowest index decides.
pub fn diag_numeric(h: &SiteHamiltonian, d: &SiteDipoleMatrix) -> Result<EigenSystem, EigenError> {
    let scale = h.h.amax().max(1.0);
    let asym = (0..3)
        .flat_map(|a| (0..3).map(move |b| (a, b)))
        .map(|(a, b)| (h.get(a, b) - h.get(b, a)).abs())
        .fold(0.0, f64::max);
    if asym > 1e-12 * scale {
        return Err(EigenError::Asymmetric(asym));
    }
    if !h.h.iter().all(|x| x.is_finite()) {
        return Err(EigenError::NotConverged);
    }
    let eig = SymmetricEigen::try_new(h.h, f64::EPSILON, 10_000).ok_or(EigenError::NotConverged)?;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let energies = [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]];
    let mut u = Matrix3::zeros();
    for (a, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let norm = col.norm();
        let mut v = [col[0] / norm, col[1] / norm, col[2] / norm];
        let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = v.iter().position(|x| x.abs() >= max - 1e-12).unwrap_or(0);
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for s in 0..3 {
            u[(a, s)] = v[s];
        }
    }
    Ok(EigenSystem {
        energies,
        unitary: u,
        dipoles: d.transform(&u),
        case_tag: CaseTag::Numeric,
        mixing: None,
        site_dipoles: *d,
    })
}

/// Closed form whose preconditions the configuration satisfies, if any.
pub fn classify(cfg: &DimerConfig) -> CaseTag {
    let h = model::assemble_site_hamiltonian(cfg);
    let small = |x: f64| x.abs() <= PRECONDITION_TOL;
    let degenerate = small(h.get(1, 1) - h.get(2, 2));
    if small(h.get(0, 1)) && small(h.get(0, 2)) {
        CaseTag::DirectA
    } else if degenerate && small(h.get(1, 2)) {
        CaseTag::IndirectB
    } else if degenerate && small(h.get(0, 1) - h.get(0, 2)) {
        CaseTag::MixedC
    } else {
        CaseTag::Numeric
    }
}

/// Diagonalises through the matching closed form, or numerically.
pub fn diagonalize(cfg: &DimerConfig) -> Result<EigenSystem, EigenError> {
    match classify(cfg) {
        CaseTag::DirectA => diag_case_a(cfg),
        CaseTag::IndirectB => diag_case_b(cfg),
        CaseTag::MixedC => diag_case_c(cfg),
        CaseTag::Numeric => diag_numeric(&model::assemble_site_hamiltonian(cfg), &model::site_dipole_matrix(cfg)),
    }
}

/// Transition dipole of a monomer perturbed by a uniform field `E` (eV per
/// Debye):
/// `((ε+Δ·E)μ − (μ·E)Δ) / √(((ε+Δ·E)/2)² + (μ·E)²)`.
///
/// At zero field this returns `2μ`.
pub fn uniform_field_monomer_dipole(monomer: &Monomer, field: &Vec3) -> Result<Vec3, EigenError> {
    let eps = monomer.excitation_energy();
    let mu = monomer.dipoles.mu;
    let delta = monomer.dipoles.delta();
    let shifted = eps + delta.dot(field);
    let drive = mu.dot(field);
    let den = (0.5 * shifted).hypot(drive);
    if den == 0.0 || !den.is_finite() {
        return Err(EigenError::DegenerateMonomer);
    }
    Ok((shifted * mu - drive * delta) / den)
}
