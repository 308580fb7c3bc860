//! Run configuration, command dispatch and CSV output for the
//! `dimer-optics` binary.
//!
//! A run is described by one TOML document:
//!
//! ```toml
//! command = "evolve"      # spectrum | rates | evolve | scan-dark | ensemble | polaron
//! seed = 7                # master seed (ensemble)
//! threshold = 1e-6        # dark-state threshold on |d0k|²/max|μ|²
//!
//! [dimer.monomer1]
//! energy = 2.65           # eV
//! mu = [10.0, 0.0, 0.0]   # Debye
//! perm_ground = [0.0, 0.0, 0.0]
//! perm_excited = [60.0, 0.0, 0.0]
//!
//! [dimer.monomer2]
//! energy = 2.65
//! mu = [10.0, 0.0, 0.0]
//!
//! [dimer.coupling]        # eV, unset entries are zero
//! q12 = 0.15
//!
//! [bath]                  # defaults shown
//! temperature = 300.0     # K
//! cutoff_energy = 10.0    # eV
//! refractive_index = 1.0
//!
//! [evolve]
//! initial = [0.0, 0.0, 1.0]
//! ```
//!
//! Only the block belonging to `command` may be present. Every output file
//! starts with `#` lines holding the tool version, the master seed and the
//! fully resolved configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::BathSpec;
use crate::dynamics;
use crate::eigen;
use crate::experiments::{self, Axis, EnsembleSpec, TimeHorizon};
use crate::model::{CouplingMatrix, DimerConfig, DipoleSet, Monomer};
use crate::polaron::{self, PolaronKernels, RateFrequency};
use crate::units;
use crate::{Error, ErrorCategory, Vec3};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config error at `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("command line: {0}")]
    Usage(String),
}

impl ConfigError {
    pub fn category(&self) -> ErrorCategory {
        ErrorCategory::Config
    }

    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Rates,
    Evolve,
    ScanDark,
    Ensemble,
    Polaron,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Rates => "rates",
            Command::Evolve => "evolve",
            Command::ScanDark => "scan-dark",
            Command::Ensemble => "ensemble",
            Command::Polaron => "polaron",
        }
    }

    fn block(self) -> Option<&'static str> {
        match self {
            Command::Evolve => Some("evolve"),
            Command::ScanDark => Some("scan_dark"),
            Command::Ensemble => Some("ensemble"),
            Command::Polaron => Some("polaron"),
            Command::Spectrum | Command::Rates => None,
        }
    }

    fn file_name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum.csv",
            Command::Rates => "rates.csv",
            Command::Evolve => "evolve.csv",
            Command::ScanDark => "scan_dark.csv",
            Command::Ensemble => "ensemble.csv",
            Command::Polaron => "polaron.csv",
        }
    }
}

fn zero3() -> [f64; 3] {
    [0.0; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomerSection {
    /// Bare excitation energy, eV.
    pub energy: f64,
    pub mu: [f64; 3],
    #[serde(default = "zero3")]
    pub perm_ground: [f64; 3],
    #[serde(default = "zero3")]
    pub perm_excited: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingSection {
    pub q00: f64,
    pub q11: f64,
    pub q22: f64,
    pub q01: f64,
    pub q02: f64,
    pub q12: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimerSection {
    #[serde(default)]
    pub include_self_dipole: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_override: Option<f64>,
    pub monomer1: MonomerSection,
    pub monomer2: MonomerSection,
    #[serde(default)]
    pub coupling: CouplingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    /// K.
    pub temperature: f64,
    /// ν_c, eV.
    pub cutoff_energy: f64,
    pub refractive_index: f64,
    /// Supplies S directly instead of deriving it from the medium.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_constant: Option<f64>,
}

impl Default for BathSection {
    fn default() -> Self {
        BathSection { temperature: 300.0, cutoff_energy: 10.0, refractive_index: 1.0, coupling_constant: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub initial: [f64; 3],
    pub t_min_s: f64,
    pub t_max_s: f64,
    pub points: usize,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection { initial: [0.0, 0.0, 1.0], t_min_s: 1e-12, t_max_s: 1e4, points: 161 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanDarkSection {
    /// Q₀₁ axis, eV.
    pub q01: AxisSection,
    /// |Δ| axis, Debye.
    pub delta: AxisSection,
    /// Q₀₂ values, eV.
    pub q02: Vec<f64>,
}

impl Default for ScanDarkSection {
    fn default() -> Self {
        ScanDarkSection {
            q01: AxisSection { min: 0.0, max: 0.1, steps: 101 },
            delta: AxisSection { min: 0.0, max: 200.0, steps: 201 },
            q02: vec![0.0, 0.05, 0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    /// Values of r = Q_G/(Q_G + Q_X).
    pub ratios: Vec<f64>,
    /// |Δ| values, Debye.
    pub deltas: Vec<f64>,
    /// eV.
    pub sigma: f64,
    pub samples: usize,
    /// Unperturbed E₂ − E₁, eV.
    pub splitting: f64,
    pub perturb_couplings: bool,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            ratios: experiments::uniform_grid(2.0, 0.05),
            deltas: vec![0.0, 10.0, 20.0, 40.0, 60.0, 80.0],
            sigma: 0.025,
            samples: 1000,
            splitting: 0.15,
            perturb_couplings: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyChoice {
    #[default]
    Bare,
    Shifted,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolaronSection {
    pub frequency: FrequencyChoice,
}

fn default_threshold() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub dimer: DimerSection,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_dark: Option<ScanDarkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polaron: Option<PolaronSection>,
}

/// Parses and validates a run configuration, filling in the command block
/// and the master seed.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::at("<document>", e.to_string()))?;
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::at(if path.is_empty() || path == "." { "<document>".into() } else { path }, e.inner().to_string())
    })?;
    cfg.resolve()?;
    Ok(cfg)
}

fn finite(path: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("must be finite, got {x}")))
    }
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("must be positive, got {x}")))
    }
}

fn non_negative(path: &str, x: f64) -> Result<(), ConfigError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("must be non-negative, got {x}")))
    }
}

impl RunConfig {
    fn resolve(&mut self) -> Result<(), ConfigError> {
        let present = [
            ("evolve", self.evolve.is_some()),
            ("scan_dark", self.scan_dark.is_some()),
            ("ensemble", self.ensemble.is_some()),
            ("polaron", self.polaron.is_some()),
        ];
        for (name, is_set) in present {
            if is_set && self.command.block() != Some(name) {
                return Err(ConfigError::at(name, format!("block not used by command `{}`", self.command.as_str())));
            }
        }
        match self.command {
            Command::Evolve => {
                self.evolve.get_or_insert_with(Default::default);
            }
            Command::ScanDark => {
                self.scan_dark.get_or_insert_with(Default::default);
            }
            Command::Ensemble => {
                self.ensemble.get_or_insert_with(Default::default);
            }
            Command::Polaron => {
                self.polaron.get_or_insert_with(Default::default);
            }
            Command::Spectrum | Command::Rates => {}
        }
        self.seed.get_or_insert(0);
        self.validate()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        positive("threshold", self.threshold)?;
        for (name, m) in [("dimer.monomer1", &self.dimer.monomer1), ("dimer.monomer2", &self.dimer.monomer2)] {
            positive(&format!("{name}.energy"), m.energy)?;
            for (field, v) in [("mu", m.mu), ("perm_ground", m.perm_ground), ("perm_excited", m.perm_excited)] {
                for (i, x) in v.iter().enumerate() {
                    finite(&format!("{name}.{field}[{i}]"), *x)?;
                }
            }
        }
        let c = &self.dimer.coupling;
        for (k, x) in [("q00", c.q00), ("q11", c.q11), ("q22", c.q22), ("q01", c.q01), ("q02", c.q02), ("q12", c.q12)] {
            finite(&format!("dimer.coupling.{k}"), x)?;
        }
        if let Some(l) = self.dimer.lambda_override {
            finite("dimer.lambda_override", l)?;
        }
        non_negative("bath.temperature", self.bath.temperature)?;
        positive("bath.cutoff_energy", self.bath.cutoff_energy)?;
        positive("bath.refractive_index", self.bath.refractive_index)?;
        if let Some(s) = self.bath.coupling_constant {
            non_negative("bath.coupling_constant", s)?;
        }
        if let Some(e) = &self.evolve {
            for (i, p) in e.initial.iter().enumerate() {
                non_negative(&format!("evolve.initial[{i}]"), *p)?;
            }
            let total: f64 = e.initial.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(ConfigError::at("evolve.initial", format!("populations must sum to 1, got {total}")));
            }
            positive("evolve.t_min_s", e.t_min_s)?;
            if !(e.t_max_s > e.t_min_s && e.t_max_s.is_finite()) {
                return Err(ConfigError::at("evolve.t_max_s", "must exceed t_min_s"));
            }
            if e.points < 2 {
                return Err(ConfigError::at("evolve.points", "need at least two points"));
            }
        }
        if let Some(s) = &self.scan_dark {
            for (name, a) in [("scan_dark.q01", &s.q01), ("scan_dark.delta", &s.delta)] {
                Axis::new(name, a.min, a.max, a.steps).map_err(|e| ConfigError::at(name, e.to_string()))?;
            }
            if s.q02.is_empty() {
                return Err(ConfigError::at("scan_dark.q02", "need at least one value"));
            }
            for (i, q) in s.q02.iter().enumerate() {
                finite(&format!("scan_dark.q02[{i}]"), *q)?;
            }
        }
        if let Some(e) = &self.ensemble {
            if e.ratios.is_empty() {
                return Err(ConfigError::at("ensemble.ratios", "need at least one value"));
            }
            for (i, r) in e.ratios.iter().enumerate() {
                non_negative(&format!("ensemble.ratios[{i}]"), *r)?;
            }
            if e.deltas.is_empty() {
                return Err(ConfigError::at("ensemble.deltas", "need at least one value"));
            }
            for (i, d) in e.deltas.iter().enumerate() {
                finite(&format!("ensemble.deltas[{i}]"), *d)?;
            }
            non_negative("ensemble.sigma", e.sigma)?;
            if e.samples == 0 {
                return Err(ConfigError::at("ensemble.samples", "need at least one sample"));
            }
            positive("ensemble.splitting", e.splitting)?;
        }
        self.dimer_config()?;
        Ok(())
    }

    pub fn master_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn dimer_config(&self) -> Result<DimerConfig, ConfigError> {
        let monomer = |name: &str, m: &MonomerSection| {
            let d = DipoleSet::new(Vec3::from(m.mu), Vec3::from(m.perm_ground), Vec3::from(m.perm_excited));
            Monomer::new(m.energy, d).map_err(|e| ConfigError::at(format!("dimer.{name}"), e.to_string()))
        };
        let c = &self.dimer.coupling;
        let q = CouplingMatrix::from_entries(c.q00, c.q11, c.q22, c.q01, c.q02, c.q12);
        let wrap = |e: crate::model::ModelError| ConfigError::at("dimer", e.to_string());
        let mut cfg =
            DimerConfig::new(monomer("monomer1", &self.dimer.monomer1)?, monomer("monomer2", &self.dimer.monomer2)?, q)
                .map_err(wrap)?
                .with_medium(self.bath.refractive_index, self.bath.cutoff_energy)
                .map_err(|e| ConfigError::at("bath", e.to_string()))?
                .with_self_dipole(self.dimer.include_self_dipole)
                .with_lambda_override(self.dimer.lambda_override)
                .map_err(wrap)?;
        if let Some(s) = self.bath.coupling_constant {
            cfg =
                cfg.with_coupling_constant(s).map_err(|e| ConfigError::at("bath.coupling_constant", e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn bath_spec(&self) -> Result<BathSpec, ConfigError> {
        let cfg = self.dimer_config()?;
        BathSpec::for_dimer(&cfg, self.bath.temperature).map_err(|e| ConfigError::at("bath", e.to_string()))
    }

    /// Canonical TOML form, as echoed into output headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }
}

/// Overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub lambda_override: Option<f64>,
}

impl RunConfig {
    pub fn apply(&mut self, opts: &RunOptions) -> Result<(), ConfigError> {
        if let Some(s) = opts.seed {
            self.seed = Some(s);
        }
        if let Some(l) = opts.lambda_override {
            self.dimer.lambda_override = Some(l);
        }
        if let Some(out) = &opts.out {
            self.output = Some(out.to_string_lossy().into_owned());
        }
        self.validate()
    }
}

fn header(cfg: &RunConfig) -> String {
    let mut s = format!(
        "# dimer-optics {VERSION}\n# command = {}\n# master_seed = {}\n",
        cfg.command.as_str(),
        cfg.master_seed()
    );
    s.push_str("# resolved config:\n");
    // The output location does not affect results; leaving it out keeps
    // artifacts byte-identical wherever they are written.
    let echoed = RunConfig { output: None, ..cfg.clone() };
    for line in echoed.to_toml().lines() {
        if line.is_empty() {
            s.push_str("#\n");
        } else {
            let _ = writeln!(s, "#   {line}");
        }
    }
    s
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn spectrum_csv(cfg: &RunConfig) -> Result<String, Error> {
    let dimer = cfg.dimer_config()?;
    let es = eigen::diagonalize(&dimer)?;
    let dark = dynamics::dark_report(&es, cfg.threshold);
    let mut s = format!("# case = {}\n", es.case_tag.as_str());
    s.push_str(
        "state,energy_eV,weight_site0,weight_site1,weight_site2,ground_dipole_sq_debye2,relative_dimensionless,dark\n",
    );
    for a in 0..3 {
        let v = es.eigenvector(a);
        let (strength, rel, flag) = if a == 0 {
            (es.strength(0, 0), f64::NAN, false)
        } else {
            let e = dark.state(a);
            (e.strength, e.relative, e.dark)
        };
        let _ = writeln!(
            s,
            "{a},{},{},{},{},{},{},{}",
            num(es.energies[a]),
            num(v[0]),
            num(v[1]),
            num(v[2]),
            num(strength),
            if a == 0 { "".into() } else { num(rel) },
            if a == 0 {
                ""
            } else if flag {
                "true"
            } else {
                "false"
            }
        );
    }
    s.push_str("#\n# dipoles\na,b,dx_debye,dy_debye,dz_debye,dipole_sq_debye2\n");
    for a in 0..3 {
        for b in a..3 {
            let d = es.dipole(a, b);
            let _ = writeln!(s, "{a},{b},{},{},{},{}", num(d.x), num(d.y), num(d.z), num(d.norm_squared()));
        }
    }
    Ok(s)
}

fn rates_csv(cfg: &RunConfig) -> Result<String, Error> {
    let dimer = cfg.dimer_config()?;
    let es = eigen::diagonalize(&dimer)?;
    let rm = dynamics::build_rate_matrix(&es, &cfg.bath_spec()?)?;
    let mut s = String::from("from,to,omega_eV,dipole_sq_debye2,rate_eV,rate_per_s\n");
    for b in 0..3 {
        for a in 0..3 {
            if a != b {
                let r = rm.get(b, a);
                let _ = writeln!(
                    s,
                    "{b},{a},{},{},{},{}",
                    num(es.energies[b] - es.energies[a]),
                    num(es.strength(a, b)),
                    num(r),
                    num(units::rate_to_per_second(r))
                );
            }
        }
    }
    Ok(s)
}

fn evolve_csv(cfg: &RunConfig) -> Result<String, Error> {
    let e = cfg.evolve.clone().unwrap_or_default();
    let dimer = cfg.dimer_config()?;
    let spec = cfg.bath_spec()?;
    let horizon = TimeHorizon { t_min_s: e.t_min_s, t_max_s: e.t_max_s, points: e.points };
    let study = experiments::run_population_study(&dimer, &spec, e.initial, horizon)?;
    let g = study.gibbs;
    let mut s = format!(
        "# gibbs = {},{},{}\n# truncation_bound = {}\n",
        num(g[0]),
        num(g[1]),
        num(g[2]),
        num(study.trajectory.error_bound)
    );
    s.push_str("time_s,pop0,pop1,pop2\n");
    for (t, p) in study.trajectory.times_seconds().iter().zip(&study.trajectory.populations) {
        let _ = writeln!(s, "{},{},{},{}", num(*t), num(p[0]), num(p[1]), num(p[2]));
    }
    Ok(s)
}

fn scan_dark_csv(cfg: &RunConfig) -> Result<String, Error> {
    let sd = cfg.scan_dark.clone().unwrap_or_default();
    let dimer = cfg.dimer_config()?;
    let x = Axis::new("q01", sd.q01.min, sd.q01.max, sd.q01.steps)?;
    let y = Axis::new("delta", sd.delta.min, sd.delta.max, sd.delta.steps)?;
    let grid = experiments::run_dark_scan(&dimer, &x, &y, &sd.q02, cfg.threshold)?;
    let mut s = String::from(
        "q02_eV,q01_eV,delta_debye,valid,d01_sq_debye2,d01_rel_dimensionless,dark_01,d02_sq_debye2,d02_rel_dimensionless,dark_02\n",
    );
    for c in &grid.cells {
        let (s1, s2) = (c.report.state(1), c.report.state(2));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            num(c.q02),
            num(c.q01),
            num(c.delta),
            c.valid,
            num(s1.strength),
            num(s1.relative),
            s1.dark,
            num(s2.strength),
            num(s2.relative),
            s2.dark
        );
    }
    Ok(s)
}

/// Ensemble specification resolved from a run configuration.
pub fn ensemble_spec(cfg: &RunConfig) -> Result<EnsembleSpec, ConfigError> {
    let e = cfg.ensemble.clone().unwrap_or_default();
    Ok(EnsembleSpec {
        base: cfg.dimer_config()?,
        temperature: cfg.bath.temperature,
        splitting: e.splitting,
        sigma: e.sigma,
        samples: e.samples,
        master_seed: cfg.master_seed(),
        perturb_couplings: e.perturb_couplings,
    })
}

fn ensemble_csv(cfg: &RunConfig) -> Result<String, Error> {
    let e = cfg.ensemble.clone().unwrap_or_default();
    let spec = ensemble_spec(cfg)?;
    let stats = experiments::run_robustness_ensemble(&spec, &e.ratios, &e.deltas)?;
    let reference = experiments::reference_bright_rate(&spec)?;
    let mut s = format!("# reference_bright_rate_eV = {}\n", num(reference));
    s.push_str(
        "ratio,delta_debye,mean_rate_10_eV,stderr_10,mean_rate_20_eV,stderr_20,mean_rate_21_eV,stderr_21,redraws,\
         rel_rate_10_dimensionless,rel_rate_20_dimensionless,rel_rate_21_dimensionless\n",
    );
    for c in &stats {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            num(c.ratio),
            num(c.delta),
            num(c.rate_10.mean),
            num(c.rate_10.stderr),
            num(c.rate_20.mean),
            num(c.rate_20.stderr),
            num(c.rate_21.mean),
            num(c.rate_21.stderr),
            c.redraws,
            num(c.rate_10.mean / reference),
            num(c.rate_20.mean / reference),
            num(c.rate_21.mean / reference)
        );
    }
    Ok(s)
}

fn polaron_csv(cfg: &RunConfig) -> Result<String, Error> {
    let p = cfg.polaron.clone().unwrap_or_default();
    let dimer = cfg.dimer_config()?;
    let es = eigen::diagonalize(&dimer)?;
    let spec = cfg.bath_spec()?;
    let lambda = dimer.lambda();
    let frame = polaron::build_polaron_frame(&es, lambda)?;
    let kernels = PolaronKernels::new(&spec)?;
    let freq = match p.frequency {
        FrequencyChoice::Bare => RateFrequency::Bare,
        FrequencyChoice::Shifted => RateFrequency::Shifted,
    };
    let mut s = format!("# lambda_eV = {}\n# psi2_zero = {}\n", num(lambda), num(kernels.psi2_zero()));
    s.push_str("from,to,omega_eV,uncorrected_rate_eV,corrected_rate_eV,full_polaron_rate_eV,relative_correction_dimensionless\n");
    for b in 0..3 {
        for a in 0..3 {
            if a != b {
                let c = polaron::corrected_rate_terms(&frame, &es, &kernels, b, a, freq)?;
                let full = polaron::full_polaron_rate_with(&frame, &kernels, b, a)?;
                let rel = if c.bare != 0.0 { c.correction() / c.bare } else { 0.0 };
                let _ = writeln!(
                    s,
                    "{b},{a},{},{},{},{},{}",
                    num(es.energies[b] - es.energies[a]),
                    num(c.bare),
                    num(c.total()),
                    num(full),
                    num(rel)
                );
            }
        }
    }
    Ok(s)
}

/// Output file name and full contents for a resolved configuration.
pub fn render(cfg: &RunConfig) -> Result<(String, String), Error> {
    let body = match cfg.command {
        Command::Spectrum => spectrum_csv(cfg)?,
        Command::Rates => rates_csv(cfg)?,
        Command::Evolve => evolve_csv(cfg)?,
        Command::ScanDark => scan_dark_csv(cfg)?,
        Command::Ensemble => ensemble_csv(cfg)?,
        Command::Polaron => polaron_csv(cfg)?,
    };
    Ok((cfg.command.file_name().to_string(), header(cfg) + &body))
}

/// Renders and writes the artifact, returning its path.
pub fn run(cfg: &RunConfig) -> Result<PathBuf, Error> {
    let (name, contents) = render(cfg)?;
    let dir = PathBuf::from(cfg.output.clone().unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Parser)]
#[command(
    name = "dimer-optics",
    version,
    about = "Optical rates, dark states and disorder ensembles of molecular dimers"
)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Self-dipole strength λ in eV, replacing the derived value.
    #[arg(long = "lambda-override", allow_negative_numbers = true)]
    lambda_override: Option<f64>,
}

fn load(args: &Args) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| io_error(&args.config, e))?;
    let mut cfg = parse_config(&text)?;
    cfg.apply(&RunOptions { out: args.out.clone(), seed: args.seed, lambda_override: args.lambda_override })?;
    Ok(cfg)
}

fn execute(args: &Args) -> Result<PathBuf, Error> {
    let cfg = load(args)?;
    match args.threads {
        Some(0) => Err(ConfigError::Usage("--threads must be at least 1".into()).into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ConfigError::Usage(e.to_string()))?;
            pool.install(|| run(&cfg))
        }
        None => run(&cfg),
    }
}

/// JSON line describing an error, as written to stderr.
pub fn error_json(err: &Error) -> String {
    serde_json::json!({
        "error": {
            "category": err.category().as_str(),
            "exit_code": err.category().exit_code(),
            "message": err.to_string(),
        }
    })
    .to_string()
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { ErrorCategory::Config.exit_code() } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args) {
        Ok(path) => {
            println!("{}", path.display());
            0
        }
        Err(err) => {
            eprintln!("{}", error_json(&err));
            err.category().exit_code()
        }
    }
}
