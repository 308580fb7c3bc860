//! The three numerical studies: relaxation of a directly coupled dimer,
//! dark-state scans over indirect couplings, and disorder ensembles over
//! mixed couplings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::bath::{BathError, BathSpec};
use crate::dynamics::{self, DarkReport, DynamicsError, PopulationTrajectory};
use crate::eigen::{self, CaseTag, EigenError, EigenSystem};
use crate::model::{self, CouplingMatrix, DimerConfig, DipoleSet, ModelError, Monomer};
use crate::units;
use crate::{ErrorCategory, Vec3};

/// Gap below which a perturbed spectrum is discarded and redrawn, eV.
pub const REDRAW_GAP: f64 = 1e-12;

const MAX_REDRAWS_PER_SAMPLE: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("invalid experiment setup: {0}")]
    InvalidSpec(String),
    #[error("no couplings reach splitting {splitting} eV at ratio {ratio}")]
    NoCouplingSolution { ratio: f64, splitting: f64 },
    #[error("sample {sample} kept drawing degenerate spectra")]
    RedrawLimit { sample: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Bath(#[from] BathError),
}

impl ExperimentError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ExperimentError::InvalidSpec(_) | ExperimentError::Model(_) => ErrorCategory::Config,
            ExperimentError::NoCouplingSolution { .. } | ExperimentError::RedrawLimit { .. } => ErrorCategory::Numeric,
            ExperimentError::Eigen(e) => e.category(),
            ExperimentError::Dynamics(e) => e.category(),
            ExperimentError::Bath(e) => e.category(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidSpec(msg.into())
}

fn unit_or_x(v: &Vec3) -> Vec3 {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        Vec3::x()
    }
}

// ---------------------------------------------------------------------------
// Population study

/// Directly coupled homodimer with 2.5/2.8 eV excitons, parallel 10 D
/// transition dipoles and a 60 D difference in the permanent-dipole changes.
pub fn fig3_config() -> DimerConfig {
    let x = Vec3::x();
    let m1 = Monomer::new(2.65, DipoleSet::new(10.0 * x, Vec3::zeros(), 60.0 * x)).expect("valid monomer");
    let m2 = Monomer::new(2.65, DipoleSet::new(10.0 * x, Vec3::zeros(), Vec3::zeros())).expect("valid monomer");
    DimerConfig::new(m1, m2, CouplingMatrix::off_diagonal(0.0, 0.0, 0.15)).expect("valid dimer")
}

/// Logarithmically spaced times between `t_min` and `t_max` (same unit as
/// the inputs), both ends included.
pub fn log_times(t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>, ExperimentError> {
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
        return Err(invalid(format!("log time axis needs 0 < t_min < t_max, got {t_min}..{t_max}")));
    }
    if points < 2 {
        return Err(invalid("log time axis needs at least two points"));
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    Ok((0..points)
        .map(|i| if i + 1 == points { t_max } else { (a + (b - a) * i as f64 / (points - 1) as f64).exp() })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeHorizon {
    pub t_min_s: f64,
    pub t_max_s: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationStudy {
    pub eigen: EigenSystem,
    pub rates: dynamics::RateMatrix,
    pub trajectory: PopulationTrajectory,
    pub gibbs: [f64; 3],
}

/// Relaxation of a directly coupled dimer on a logarithmic time axis.
pub fn run_population_study(
    cfg: &DimerConfig,
    spec: &BathSpec,
    initial: [f64; 3],
    horizon: TimeHorizon,
) -> Result<PopulationStudy, ExperimentError> {
    if eigen::classify(cfg) != CaseTag::DirectA {
        return Err(invalid("population study needs a directly coupled dimer (q01 = q02 = 0)"));
    }
    let es = eigen::diag_case_a(cfg)?;
    let rates = dynamics::build_rate_matrix(&es, spec)?;
    let times: Vec<f64> = log_times(horizon.t_min_s, horizon.t_max_s, horizon.points)?
        .into_iter()
        .map(units::seconds_to_natural_time)
        .collect();
    let trajectory = dynamics::evolve(&rates, initial, &times)?;
    let gibbs = dynamics::gibbs(&es.energies, spec);
    Ok(PopulationStudy { eigen: es, rates, trajectory, gibbs })
}

// ---------------------------------------------------------------------------
// Dark-state scan

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, min: f64, max: f64, steps: usize) -> Result<Self, ExperimentError> {
        let name = name.into();
        if steps == 0 || !min.is_finite() || !max.is_finite() {
            return Err(invalid(format!("axis {name}: need finite bounds and at least one step")));
        }
        if steps > 1 && max <= min {
            return Err(invalid(format!("axis {name}: max must exceed min")));
        }
        Ok(Axis { name, min, max, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.max } else { self.min + h * i as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanCell {
    pub q02: f64,
    pub q01: f64,
    pub delta: f64,
    /// False when the excited states are degenerate and the eigenbasis, hence
    /// the classification, is arbitrary.
    pub valid: bool,
    pub report: DarkReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub q02_values: Vec<f64>,
    pub cells: Vec<ScanCell>,
}

impl ScanGrid {
    pub fn expected_cells(&self) -> usize {
        self.q02_values.len() * self.x_axis.steps * self.y_axis.steps
    }
}

/// Indirectly coupled dimer with the template's monomers, permanent-dipole
/// changes `±|Δ|` along the first transition dipole and the given drives.
pub fn scan_config(template: &DimerConfig, q01: f64, q02: f64, delta: f64) -> Result<DimerConfig, ExperimentError> {
    let [m1, m2] = template.monomers;
    let dir = unit_or_x(&m1.dipoles.mu);
    let d1 = DipoleSet::new(m1.dipoles.mu, m1.dipoles.perm_ground, m1.dipoles.perm_ground + delta * dir);
    let d2 = DipoleSet::new(m2.dipoles.mu, m2.dipoles.perm_ground, m2.dipoles.perm_ground - delta * dir);
    let mut q = template.coupling;
    q.set(0, 1, q01);
    q.set(0, 2, q02);
    let mut cfg = template.clone();
    cfg.monomers = [Monomer::new(m1.excitation_energy(), d1)?, Monomer::new(m2.excitation_energy(), d2)?];
    cfg.coupling = q;
    Ok(cfg)
}

/// Dark-state classification over `(Q₀₁, |Δ|)` for each `Q₀₂`.
pub fn run_dark_scan(
    template: &DimerConfig,
    x_axis: &Axis,
    y_axis: &Axis,
    q02_values: &[f64],
    threshold: f64,
) -> Result<ScanGrid, ExperimentError> {
    if !(threshold > 0.0) {
        return Err(invalid(format!("threshold must be positive, got {threshold}")));
    }
    let h = model::assemble_site_hamiltonian(template);
    if (h.get(1, 1) - h.get(2, 2)).abs() > eigen::PRECONDITION_TOL || h.get(1, 2).abs() > eigen::PRECONDITION_TOL {
        return Err(invalid("dark scan template needs equal site energies and q12 = 0"));
    }
    let mut cells = Vec::with_capacity(q02_values.len() * x_axis.steps * y_axis.steps);
    for &q02 in q02_values {
        for q01 in x_axis.values() {
            for delta in y_axis.values() {
                let cfg = scan_config(template, q01, q02, delta)?;
                let es = eigen::diagonalize(&cfg)?;
                let valid = es.min_gap() >= REDRAW_GAP;
                cells.push(ScanCell { q02, q01, delta, valid, report: dynamics::dark_report(&es, threshold) });
            }
        }
    }
    Ok(ScanGrid { x_axis: x_axis.clone(), y_axis: y_axis.clone(), q02_values: q02_values.to_vec(), cells })
}

// ---------------------------------------------------------------------------
// Disorder ensemble

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    /// Monomer energies and transition dipoles; site energies must agree.
    /// Couplings and permanent-dipole changes are set per grid cell.
    pub base: DimerConfig,
    pub temperature: f64,
    /// Target splitting `E₂ − E₁` of the unperturbed excited states, eV.
    pub splitting: f64,
    /// Standard deviation of the Gaussian perturbations, eV.
    pub sigma: f64,
    pub samples: usize,
    pub master_seed: u64,
    /// Also perturb `Q₀₁`, `Q₀₂` and `Q₁₂`, not only the site energies.
    pub perturb_couplings: bool,
}

impl EnsembleSpec {
    /// Homodimer at 2.4 eV with parallel 10 D transition dipoles, 150 meV
    /// splitting, 25 meV disorder and 1000 samples at 300 K.
    pub fn standard(master_seed: u64) -> Self {
        let d = DipoleSet::new(10.0 * Vec3::x(), Vec3::zeros(), Vec3::zeros());
        let m = Monomer::new(2.4, d).expect("valid monomer");
        EnsembleSpec {
            base: DimerConfig::new(m, m, CouplingMatrix::zero()).expect("valid dimer"),
            temperature: 300.0,
            splitting: 0.15,
            sigma: 0.025,
            samples: 1000,
            master_seed,
            perturb_couplings: false,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if self.samples == 0 {
            return Err(invalid("ensemble needs at least one sample"));
        }
        if !(self.splitting > 0.0 && self.splitting.is_finite()) {
            return Err(invalid(format!("splitting must be positive, got {}", self.splitting)));
        }
        let [e1, e2] = self.site_energies();
        if (e1 - e2).abs() > eigen::PRECONDITION_TOL {
            return Err(invalid("ensemble base needs equal site energies"));
        }
        Ok(())
    }

    fn site_energies(&self) -> [f64; 2] {
        let e = self.base.effective_energies();
        [e[1], e[2]]
    }

    pub fn bath(&self) -> Result<BathSpec, ExperimentError> {
        Ok(BathSpec::for_dimer(&self.base, self.temperature)?)
    }
}

fn mixed_splitting(eps: f64, g: f64, x: f64) -> f64 {
    let upper = 0.5 * (eps + x + (8.0 * g * g + (eps + x) * (eps + x)).sqrt());
    upper - (eps - x)
}

/// Ground drive `Q_G ≥ 0` and exciton coupling `Q_X` for ratio
/// `r = Q_G/(Q_G + Q_X)` giving an upper-pair splitting `E₂ − E₁`.
///
/// `r = 0` is pure direct coupling (`Q_X = splitting/2`); `r = 1` is pure
/// indirect; `r > 1` continues with `Q_X < 0`.
pub fn solve_couplings(eps: f64, splitting: f64, ratio: f64) -> Result<(f64, f64), ExperimentError> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(invalid(format!("coupling ratio must be non-negative, got {ratio}")));
    }
    if ratio == 0.0 {
        return Ok((0.0, 0.5 * splitting));
    }
    let x_of = |g: f64| g * (1.0 - ratio) / ratio;
    let f = |g: f64| mixed_splitting(eps, g, x_of(g)) - splitting;
    let fail = ExperimentError::NoCouplingSolution { ratio, splitting };
    let mut lo = 0.0;
    let mut hi = splitting.max(1e-3);
    let mut tries = 0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 60 || !hi.is_finite() {
            return Err(fail);
        }
    }
    if f(lo) > 0.0 {
        return Err(fail);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = 0.5 * (lo + hi);
    Ok((g, x_of(g)))
}

/// Unperturbed mixed-coupling dimer for one ensemble cell.
pub fn ensemble_config(spec: &EnsembleSpec, ratio: f64, delta: f64) -> Result<DimerConfig, ExperimentError> {
    spec.validate()?;
    let [eps, _] = spec.site_energies();
    let (g, x) = solve_couplings(eps, spec.splitting, ratio)?;
    let [m1, m2] = spec.base.monomers;
    let dir = unit_or_x(&m1.dipoles.mu);
    let with_delta = |m: Monomer| -> Result<Monomer, ExperimentError> {
        let d = m.dipoles;
        Ok(Monomer::new(m.excitation_energy(), DipoleSet::new(d.mu, d.perm_ground, d.perm_ground + delta * dir))?)
    };
    let mut q = spec.base.coupling;
    q.set(0, 1, g);
    q.set(0, 2, g);
    q.set(1, 2, x);
    let mut cfg = spec.base.clone();
    cfg.monomers = [with_delta(m1)?, with_delta(m2)?];
    cfg.coupling = q;
    Ok(cfg)
}

/// Decay rates of one disorder realisation, eV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRates {
    pub rate_10: f64,
    pub rate_20: f64,
    pub rate_21: f64,
    pub redraws: usize,
}

/// RNG for sample `index`: the master seed selects the key, the sample index
/// the stream, so every sample's draws are fixed regardless of scheduling.
pub fn sample_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

fn sample_rates(
    cfg: &DimerConfig,
    spec: &EnsembleSpec,
    bath: &BathSpec,
    index: usize,
) -> Result<SampleRates, ExperimentError> {
    let mut rng = sample_rng(spec.master_seed, index);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let h0 = model::assemble_site_hamiltonian(cfg);
    let sd = model::site_dipole_matrix(cfg);
    for redraws in 0..=MAX_REDRAWS_PER_SAMPLE {
        // Always five draws so samples stay paired across settings.
        let z: [f64; 5] = std::array::from_fn(|_| spec.sigma * normal.sample(&mut rng));
        let mut h = h0;
        h.h[(1, 1)] += z[0];
        h.h[(2, 2)] += z[1];
        if spec.perturb_couplings {
            for (k, (a, b)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
                h.h[(a, b)] += z[2 + k];
                h.h[(b, a)] += z[2 + k];
            }
        }
        let es = eigen::diag_numeric(&h, &sd)?;
        if es.min_gap() < REDRAW_GAP {
            continue;
        }
        let rm = dynamics::build_rate_matrix(&es, bath)?;
        return Ok(SampleRates { rate_10: rm.get(1, 0), rate_20: rm.get(2, 0), rate_21: rm.get(2, 1), redraws });
    }
    Err(ExperimentError::RedrawLimit { sample: index })
}

/// Per-sample rates of one `(r, |Δ|)` cell, in sample order.
pub fn run_cell_samples(spec: &EnsembleSpec, ratio: f64, delta: f64) -> Result<Vec<SampleRates>, ExperimentError> {
    let cfg = ensemble_config(spec, ratio, delta)?;
    let bath = spec.bath()?;
    (0..spec.samples).into_par_iter().map(|i| sample_rates(&cfg, spec, &bath, i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

fn mean_stderr(xs: impl Iterator<Item = f64> + Clone) -> MeanStderr {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = if n > 1.0 { xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    MeanStderr { mean, stderr: (var / n).sqrt() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub ratio: f64,
    pub delta: f64,
    pub q_g: f64,
    pub q_x: f64,
    pub rate_10: MeanStderr,
    pub rate_20: MeanStderr,
    pub rate_21: MeanStderr,
    pub redraws: usize,
    pub master_seed: u64,
    pub samples: usize,
}

impl EnsembleStats {
    /// Seed provenance of sample `i`: (master seed, stream).
    pub fn sample_seed(&self, i: usize) -> (u64, u64) {
        (self.master_seed, i as u64)
    }

    pub fn from_samples(
        spec: &EnsembleSpec,
        ratio: f64,
        delta: f64,
        samples: &[SampleRates],
    ) -> Result<Self, ExperimentError> {
        let [eps, _] = spec.site_energies();
        let (q_g, q_x) = solve_couplings(eps, spec.splitting, ratio)?;
        Ok(EnsembleStats {
            ratio,
            delta,
            q_g,
            q_x,
            rate_10: mean_stderr(samples.iter().map(|s| s.rate_10)),
            rate_20: mean_stderr(samples.iter().map(|s| s.rate_20)),
            rate_21: mean_stderr(samples.iter().map(|s| s.rate_21)),
            redraws: samples.iter().map(|s| s.redraws).sum(),
            master_seed: spec.master_seed,
            samples: samples.len(),
        })
    }
}

/// Ensemble statistics for every `(r, |Δ|)` pair, ratio-major.
pub fn run_robustness_ensemble(
    spec: &EnsembleSpec,
    ratio_grid: &[f64],
    delta_grid: &[f64],
) -> Result<Vec<EnsembleStats>, ExperimentError> {
    spec.validate()?;
    let cells: Vec<(f64, f64)> = ratio_grid.iter().flat_map(|&r| delta_grid.iter().map(move |&d| (r, d))).collect();
    cells
        .par_iter()
        .map(|&(r, d)| {
            let samples = run_cell_samples(spec, r, d)?;
            EnsembleStats::from_samples(spec, r, d, &samples)
        })
        .collect()
}

/// Brighter of the two ground-state decay rates of the undisordered,
/// purely direct (`r = 0`, `|Δ| = 0`) dimer, eV. Ensemble rates are also
/// reported relative to it.
pub fn reference_bright_rate(spec: &EnsembleSpec) -> Result<f64, ExperimentError> {
    let cfg = ensemble_config(spec, 0.0, 0.0)?;
    let es = eigen::diagonalize(&cfg)?;
    let rm = dynamics::build_rate_matrix(&es, &spec.bath()?)?;
    Ok(rm.get(1, 0).max(rm.get(2, 0)))
}

/// `0, step, 2·step, …, max` inclusive.
pub fn uniform_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).round() as usize;
    (0..=n).map(|i| (i as f64 * step * 1e9).round() / 1e9).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_solution_hits_splitting() {
        for r in [0.0, 0.1, 0.5, 1.0, 1.5, 2.0] {
            let (g, x) = solve_couplings(2.4, 0.15, r).unwrap();
            assert!(g >= 0.0);
            assert!((mixed_splitting(2.4, g, x) - 0.15).abs() < 1e-12, "r = {r}");
            if r > 0.0 {
                assert!((g / (g + x) - r).abs() < 1e-9);
            }
        }
        let (g, x) = solve_couplings(2.4, 0.15, 1.0).unwrap();
        assert!(g > 0.0 && x.abs() < 1e-15);
    }

    #[test]
    fn axis_values() {
        let a = Axis::new("q01", 0.0, 0.1, 11).unwrap();
        let v = a.values();
        assert_eq!(v.len(), 11);
        assert_eq!(v[10], 0.1);
        assert!(Axis::new("bad", 1.0, 0.0, 3).is_err());
        assert_eq!(Axis::new("one", 0.3, 0.3, 1).unwrap().values(), vec![0.3]);
    }

    #[test]
    fn zero_sigma_reproduces_unperturbed_rates() {
        let mut spec = EnsembleSpec::standard(1);
        spec.sigma = 0.0;
        spec.samples = 8;
        let s = run_cell_samples(&spec, 0.0, 0.0).unwrap();
        assert!(s.iter().all(|x| x == &s[0]));
        assert_eq!(s[0].rate_10, 0.0);
        let stats = EnsembleStats::from_samples(&spec, 0.0, 0.0, &s).unwrap();
        assert_eq!(stats.rate_20.stderr, 0.0);
    }

    #[test]
    fn fig3_config_matches_caption() {
        let es = eigen::diagonalize(&fig3_config()).unwrap();
        assert_eq!(es.case_tag, CaseTag::DirectA);
        assert!((es.energies[1] - 2.5).abs() < 1e-12);
        assert!((es.energies[2] - 2.8).abs() < 1e-12);
    }

    #[test]
    fn log_axis() {
        let t = log_times(1e-9, 1e-3, 7).unwrap();
        assert_eq!(t.len(), 7);
        assert!((t[1] / t[0] - 10.0).abs() < 1e-9);
        assert_eq!(t[6], 1e-3);
        assert!(log_times(0.0, 1.0, 3).is_err());
    }
}
