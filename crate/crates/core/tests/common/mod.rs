#![allow(dead_code)]

use dimer_optics::eigen::EigenSystem;
use dimer_optics::model::{CouplingMatrix, DimerConfig, DipoleSet, Monomer};
use dimer_optics::quadrature::{self, Tolerance};
use dimer_optics::Vec3;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn random_dipoles(rng: &mut ChaCha8Rng) -> DipoleSet {
    DipoleSet::new(random_vec(rng, 10.0), random_vec(rng, 10.0), random_vec(rng, 30.0))
}

fn dimer(e1: f64, e2: f64, q: CouplingMatrix, rng: &mut ChaCha8Rng) -> DimerConfig {
    let m1 = Monomer::new(e1, random_dipoles(rng)).unwrap();
    let m2 = Monomer::new(e2, random_dipoles(rng)).unwrap();
    DimerConfig::new(m1, m2, q).unwrap()
}

/// Direct coupling with random diagonal shifts.
pub fn random_case_a(rng: &mut ChaCha8Rng) -> DimerConfig {
    let q = CouplingMatrix::from_entries(
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
        0.0,
        0.0,
        rng.random_range(-0.3..0.3),
    );
    dimer(rng.random_range(1.5..3.5), rng.random_range(1.5..3.5), q, rng)
}

pub fn random_case_b(rng: &mut ChaCha8Rng) -> DimerConfig {
    let e = rng.random_range(1.5..3.5);
    let q = CouplingMatrix::off_diagonal(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 0.0);
    dimer(e, e, q, rng)
}

pub fn random_case_c(rng: &mut ChaCha8Rng) -> DimerConfig {
    let e = rng.random_range(1.5..3.5);
    let g = rng.random_range(-0.3..0.3);
    let q = CouplingMatrix::off_diagonal(g, g, rng.random_range(-0.3..0.3));
    dimer(e, e, q, rng)
}

/// Fully general couplings and site energies.
pub fn random_general(rng: &mut ChaCha8Rng) -> DimerConfig {
    let q = CouplingMatrix::off_diagonal(
        rng.random_range(-0.3..0.3),
        rng.random_range(-0.3..0.3),
        rng.random_range(-0.3..0.3),
    );
    dimer(rng.random_range(1.5..3.5), rng.random_range(1.5..3.5), q, rng)
}

pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Worst relative disagreement between two eigensystems: energies (1 meV
/// floor), eigenvector overlaps and every |d_ab|².
pub fn compare(x: &EigenSystem, y: &EigenSystem) -> f64 {
    let scale = x.site_dipoles.d.iter().flatten().map(|v| v.norm_squared()).fold(1.0, f64::max);
    let mut worst: f64 = 0.0;
    for a in 0..3 {
        worst = worst.max(rel(x.energies[a], y.energies[a], 1e-3));
        let (u, v) = (x.eigenvector(a), y.eigenvector(a));
        let overlap: f64 = (0..3).map(|s| u[s] * v[s]).sum();
        worst = worst.max((1.0 - overlap.abs()).abs());
        for b in 0..3 {
            worst = worst.max(rel(x.strength(a, b), y.strength(a, b), 1e-6 * scale));
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Time-domain ψ kernels

const ANGULAR: f64 = 8.0 * std::f64::consts::PI / 3.0;

// B_{2j}/(2j)! for j = 1..8.
const BERNOULLI_OVER_FACT: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
];

/// Hurwitz zeta `Σ_{k≥0} (q+k)^{-p}` for integer `p ≥ 2` and `Re q > 0`.
pub fn hurwitz(p: i32, q: Complex64) -> Complex64 {
    const K: usize = 24;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..K {
        sum += (q + k as f64).powi(-p);
    }
    let z = q + K as f64;
    sum += z.powi(1 - p) / (p as f64 - 1.0) + 0.5 * z.powi(-p);
    // Euler–Maclaurin corrections with rising factorials p(p+1)…(p+2j−2).
    let mut rising = p as f64;
    for (j, c) in BERNOULLI_OVER_FACT.iter().enumerate() {
        sum += *c * rising * z.powi(-p - 2 * j as i32 - 1);
        rising *= (p as f64 + 2.0 * j as f64 + 1.0) * (p as f64 + 2.0 * j as f64 + 2.0);
    }
    sum
}

/// `ψ_n(s) = ∫ w_n(x) e^{-ixs} dx` with S = 1, as a series over thermal
/// replicas.
pub fn psi_time(n: i32, s: f64, cutoff: f64, beta: f64) -> Complex64 {
    let m = 3 - n;
    let p = m + 1;
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    let pref = ANGULAR / (cutoff * cutoff) * fact;
    let a0 = 1.0 / cutoff;
    let i = Complex64::i();
    if beta.is_infinite() {
        return pref * (a0 + i * s).powi(-p);
    }
    // Σ_{k≥0} (a0 + kβ + is)^{-p} = β^{-p} ζ(p, (a0 + is)/β)
    let emission = beta.powf(-p as f64) * hurwitz(p, (a0 + i * s) / beta);
    // Σ_{k≥1} (a0 + kβ − is)^{-p} = β^{-p} ζ(p, (a0 + β − is)/β)
    let absorption = beta.powf(-p as f64) * hurwitz(p, (a0 + beta - i * s) / beta);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    pref * (emission + sign * absorption)
}

fn window(s: f64, plateau: f64, end: f64) -> f64 {
    if s <= plateau {
        1.0
    } else if s >= end {
        0.0
    } else {
        let x = (s - plateau) / (end - plateau);
        0.5 * (1.0 + (std::f64::consts::PI * x).cos())
    }
}

/// `(1/2π)∫ e^{iωs} ψ₂(s)ψ₀(s) ds` (S = 1) by windowed quadrature in time,
/// with its error estimate.
pub fn time_domain_convolution(omega: f64, cutoff: f64, beta: f64) -> (f64, f64) {
    let (plateau, end) = (300.0, 400.0);
    let f = |s: f64| {
        let z = Complex64::new(0.0, omega * s).exp() * psi_time(2, s, cutoff, beta) * psi_time(0, s, cutoff, beta);
        z.re * window(s, plateau, end)
    };
    let period = 2.0 * std::f64::consts::PI / omega.abs().max(0.1);
    let mut points = vec![0.0];
    let mut s = 0.0;
    while s < end {
        s = (s + period).min(end);
        points.push(s);
    }
    for p in [1.0, 5.0, 20.0, 60.0] {
        if p < end {
            points.push(p);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    // The integrand is ~10⁹ times the result near s = 0, so round-off caps
    // the attainable relative accuracy; accept anything below 1e-7.
    let tol = Tolerance { abs: 1e-300, rel: 1e-12, max_intervals: 200_000 };
    let (value, error) = match quadrature::integrate(f, &points, tol) {
        Ok(r) => (r.value, r.error),
        Err(e) if e.achieved <= 1e-7 * e.value.abs() => (e.value, e.achieved),
        Err(e) => panic!("time-domain quadrature: {e}"),
    };
    (value / std::f64::consts::PI, error / std::f64::consts::PI)
}
