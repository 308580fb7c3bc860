//! Secular population dynamics between dimer eigenstates.
//!
//! Populations obey the Pauli master equation `ṗ = G p` with
//! `G[a][b] = rate(b→a)` off the diagonal and `G[a][a] = −Σ rate(a→·)`.
//! Rates across a transition differ by Boltzmann factors of order e^{±100}
//! at room temperature, so propagation uses uniformization (a stochastic
//! Poisson series with scaling and squaring) and the steady state comes from
//! the matrix-tree theorem; neither subtracts large numbers.

use nalgebra::Matrix3;
use thiserror::Error;

use crate::bath::{self, BathError, BathSpec};
use crate::eigen::EigenSystem;
use crate::units;
use crate::ErrorCategory;

/// Minimum eigenenergy spacing for the secular approximation, eV.
pub const DEGENERACY_TOL: f64 = 1e-12;

const SERIES_STEP: f64 = 0.5;
const SERIES_TERMS: usize = 18;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("secular approximation breaks down: states {a} and {b} are {gap:e} eV apart")]
    SecularBreakdown { a: usize, b: usize, gap: f64 },
    #[error("rate graph has several closed classes {classes:?}; steady state is not unique")]
    MultipleSteadyStates { classes: Vec<Vec<usize>> },
    #[error("invalid initial populations: {0}")]
    InvalidInitial(String),
    #[error("invalid time grid: {0}")]
    InvalidTimes(String),
    #[error("rate {rate:e} eV times {time:e} ħ/eV overflows")]
    Overflow { time: f64, rate: f64 },
    #[error(transparent)]
    Bath(#[from] BathError),
}

impl DynamicsError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            DynamicsError::SecularBreakdown { .. } => ErrorCategory::Secular,
            DynamicsError::MultipleSteadyStates { .. } | DynamicsError::Overflow { .. } => ErrorCategory::Numeric,
            DynamicsError::Bath(e) => e.category(),
            _ => ErrorCategory::Config,
        }
    }
}

/// `rate[b][a]` is the transfer rate from state `b` to state `a`, in eV.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateMatrix {
    pub rate: [[f64; 3]; 3],
}

impl RateMatrix {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_rates(rate: [[f64; 3]; 3]) -> Self {
        let mut rate = rate;
        for (a, row) in rate.iter_mut().enumerate() {
            row[a] = 0.0;
        }
        RateMatrix { rate }
    }

    /// Rate of `from → to`.
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.rate[from][to]
    }

    /// Total loss rate out of `a`.
    pub fn outflow(&self, a: usize) -> f64 {
        (0..3).filter(|&b| b != a).map(|b| self.rate[a][b]).sum()
    }

    pub fn generator(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|a, b| if a == b { -self.outflow(a) } else { self.rate[b][a] })
    }
}

/// `rate(b→a) = |d_ab|² γ(E_b − E_a)` over every ordered pair.
pub fn build_rate_matrix(es: &EigenSystem, spec: &BathSpec) -> Result<RateMatrix, DynamicsError> {
    check_secular(&es.energies)?;
    let mut rate = [[0.0; 3]; 3];
    for b in 0..3 {
        for a in 0..3 {
            if a != b {
                let strength = es.strength(a, b);
                rate[b][a] =
                    if strength == 0.0 { 0.0 } else { strength * bath::gamma(es.energies[b] - es.energies[a], spec)? };
            }
        }
    }
    Ok(RateMatrix { rate })
}

pub(crate) fn check_secular(energies: &[f64; 3]) -> Result<(), DynamicsError> {
    for a in 0..3 {
        for b in (a + 1)..3 {
            let gap = (energies[b] - energies[a]).abs();
            if gap < DEGENERACY_TOL {
                return Err(DynamicsError::SecularBreakdown { a, b, gap });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTrajectory {
    /// Times in ħ/eV.
    pub times: Vec<f64>,
    pub populations: Vec<[f64; 3]>,
    /// Bound on the series truncation error of any population.
    pub error_bound: f64,
}

impl PopulationTrajectory {
    pub fn times_seconds(&self) -> Vec<f64> {
        self.times.iter().map(|&t| units::natural_time_to_seconds(t)).collect()
    }

    pub fn last(&self) -> Option<[f64; 3]> {
        self.populations.last().copied()
    }
}

fn validate_initial(p: &[f64; 3]) -> Result<(), DynamicsError> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(DynamicsError::InvalidInitial(format!("{p:?} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(DynamicsError::InvalidInitial(format!("populations sum to {total}, not 1")));
    }
    Ok(())
}

/// `exp(G t)` by uniformization, with the accumulated truncation bound.
fn propagator(g: &Matrix3<f64>, lambda: f64, t: f64) -> (Matrix3<f64>, f64) {
    let x = lambda * t;
    if x == 0.0 {
        return (Matrix3::identity(), 0.0);
    }
    let squarings = if x > SERIES_STEP { (x / SERIES_STEP).log2().ceil() as i32 } else { 0 };
    let half = squarings / 2;
    let h = x * 0.5f64.powi(half) * 0.5f64.powi(squarings - half);
    let p = Matrix3::identity() + g / lambda;
    let mut term = Matrix3::identity();
    let mut coef = 1.0;
    let mut sum = Matrix3::identity();
    for k in 1..=SERIES_TERMS {
        coef *= h / k as f64;
        term = p * term;
        sum += term * coef;
    }
    let mut m = sum * (-h).exp();
    // Poisson mass beyond the last term is below h^{K+1}/(K+1)!.
    let tail = coef * h / (SERIES_TERMS + 1) as f64;
    for _ in 0..squarings {
        m = m * m;
        // Entries are non-negative, so only the column sums drift; without
        // this the drift doubles on every squaring.
        normalize_columns(&mut m);
    }
    (m, tail * 2f64.powi(squarings))
}

fn normalize_columns(m: &mut Matrix3<f64>) {
    for mut col in m.column_iter_mut() {
        let s = col.sum();
        if s > 0.0 {
            col /= s;
        }
    }
}

/// Propagates `initial` to each requested time (ħ/eV).
pub fn evolve(rm: &RateMatrix, initial: [f64; 3], times: &[f64]) -> Result<PopulationTrajectory, DynamicsError> {
    validate_initial(&initial)?;
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(DynamicsError::InvalidTimes("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(DynamicsError::InvalidTimes("times must be ascending".into()));
    }
    let g = rm.generator();
    let lambda = (0..3).map(|a| rm.outflow(a)).fold(0.0, f64::max);
    let p0 = nalgebra::Vector3::from(initial);
    let mut populations = Vec::with_capacity(times.len());
    let mut error_bound: f64 = 0.0;
    for &t in times {
        if lambda == 0.0 {
            populations.push(initial);
            continue;
        }
        if !(lambda * t).is_finite() {
            return Err(DynamicsError::Overflow { time: t, rate: lambda });
        }
        let (m, err) = propagator(&g, lambda, t);
        error_bound = error_bound.max(err);
        let p = m * p0;
        populations.push([p[0].max(0.0), p[1].max(0.0), p[2].max(0.0)]);
    }
    Ok(PopulationTrajectory { times: times.to_vec(), populations, error_bound })
}

fn closed_classes(rm: &RateMatrix) -> Vec<Vec<usize>> {
    let mut reach = [[false; 3]; 3];
    for a in 0..3 {
        reach[a][a] = true;
        for b in 0..3 {
            if rm.rate[a][b] > 0.0 {
                reach[a][b] = true;
            }
        }
    }
    for k in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                reach[a][b] |= reach[a][k] && reach[k][b];
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for a in 0..3 {
        let class: Vec<usize> = (0..3).filter(|&b| reach[a][b] && reach[b][a]).collect();
        let closed = (0..3).all(|b| !reach[a][b] || class.contains(&b));
        if closed && !classes.contains(&class) {
            classes.push(class);
        }
    }
    classes
}

/// Stationary populations from the spanning-tree weights of the rate graph.
pub fn steady_state(rm: &RateMatrix) -> Result<[f64; 3], DynamicsError> {
    let k = |from: usize, to: usize| rm.rate[from][to];
    let mut w = [0.0; 3];
    for (a, wa) in w.iter_mut().enumerate() {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        *wa = k(b, a) * k(c, a) + k(c, b) * k(b, a) + k(b, c) * k(c, a);
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(DynamicsError::MultipleSteadyStates { classes: closed_classes(rm) });
    }
    Ok([w[0] / total, w[1] / total, w[2] / total])
}

/// Boltzmann populations over the given energies.
pub fn gibbs(energies: &[f64; 3], spec: &BathSpec) -> [f64; 3] {
    let beta = spec.beta();
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    if beta.is_infinite() {
        let n = energies.iter().filter(|&&e| e == e0).count() as f64;
        return energies.map(|e| if e == e0 { 1.0 / n } else { 0.0 });
    }
    let w = energies.map(|e| (-beta * (e - e0)).exp());
    let z: f64 = w.iter().sum();
    w.map(|x| x / z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkEntry {
    pub state: usize,
    /// `|d₀ₖ|²`, Debye².
    pub strength: f64,
    /// `|d₀ₖ|² / max_j |μ_j|²`.
    pub relative: f64,
    pub dark: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkReport {
    pub threshold: f64,
    pub states: [DarkEntry; 2],
}

impl DarkReport {
    pub fn state(&self, k: usize) -> &DarkEntry {
        &self.states[k - 1]
    }
}

/// Classifies the two excited eigenstates by their coupling to the ground
/// state.
pub fn dark_report(es: &EigenSystem, threshold: f64) -> DarkReport {
    let reference = es.max_monomer_strength();
    let entry = |k: usize| {
        let strength = es.strength(0, k);
        let relative = if reference > 0.0 {
            strength / reference
        } else if strength == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        DarkEntry { state: k, strength, relative, dark: relative < threshold }
    };
    DarkReport { threshold, states: [entry(1), entry(2)] }
}
