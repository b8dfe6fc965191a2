//! Large deviations of time averages around the equilibrium state.
//!
//! The rate function is
//! `q(eps) = P(phi) - sup { h_nu + int phi dnu : |int psi dnu - int psi dm| >= eps }`,
//! computed either from the Legendre transform of `beta -> P(phi + beta psi)`
//! or by brute force over first-order Markov chains.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{substream, SuspendedMeasure};
use crate::potential::{CylinderPotential, FlowSystem, Potential};
use crate::sft::Symbol;
use crate::thermo::{equilibrium_state, working_cylinder, Transfer};

/// Finest simplex grid step of the direct optimizer.
pub const DIRECT_STEP: f64 = 0.02;
/// Largest number of kernels the direct optimizer evaluates.
pub const DIRECT_CAP: u64 = 200_000;
const GOLDEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMethod {
    Legendre,
    Direct,
}

impl fmt::Display for RateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Legendre => "legendre",
            Self::Direct => "direct",
        })
    }
}

impl FromStr for RateMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "legendre" => Ok(Self::Legendre),
            "direct" => Ok(Self::Direct),
            _ => Err(Error::InvalidArgument(format!("unknown rate method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub eps: f64,
    /// `f64::INFINITY` when no invariant measure deviates by `eps`.
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub method: RateMethod,
    pub pressure: f64,
    /// `int psi dm` under the equilibrium state `m` of `phi`.
    pub mean: f64,
    /// Range of `int psi dnu` over invariant measures.
    pub mean_range: (f64, f64),
    /// Simplex step actually used by the direct method.
    pub grid_step: Option<f64>,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn q(&self, eps: f64) -> Option<f64> {
        self.rows.iter().find(|r| (r.eps - eps).abs() < 1e-12).map(|r| r.q)
    }
}

fn psi_cylinder(psi: &Potential) -> Result<&CylinderPotential> {
    psi.as_cylinder()
        .ok_or_else(|| Error::NotFiberRepresentable("deviation observables must be cylinder potentials".into()))
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(fc.max(fd).max(f(a)?).max(f(b)?))
}

/// The rate function on `eps_grid`.
pub fn rate_function(
    system: &FlowSystem,
    phi: &Potential,
    psi: &Potential,
    eps_grid: &[f64],
    method: RateMethod,
) -> Result<RateTable> {
    let psi_c = psi_cylinder(psi)?;
    psi.validate(system)?;
    let phi_c = working_cylinder(system, phi)?;
    let sft = system.sft();
    let roof = system.roof();
    let (m, p0) = equilibrium_state(system, &Potential::Cylinder(phi_c.clone()))?;
    let mean = m.integral(psi_c);
    let mean_range = Transfer::new(sft, roof, psi_c)?.mean_range();
    let mut grid_step = None;
    let rows = match method {
        RateMethod::Legendre => {
            let norm = psi_c.table.values().chain(psi_c.default.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
            let bound = if norm > 0.0 { 20.0 / norm } else { 1.0 };
            let pressure_at = |beta: f64| -> Result<f64> {
                let c = phi_c.combine(beta, psi_c, sft);
                Ok(Transfer::new(sft, roof, &c)?.pressure()?.0)
            };
            let q_tilde = |u: f64| -> Result<f64> {
                if u < mean_range.0 - 1e-9 || u > mean_range.1 + 1e-9 {
                    return Ok(f64::INFINITY);
                }
                golden_max(|beta| Ok(beta * u - (pressure_at(beta)? - p0)), -bound, bound)
            };
            eps_grid
                .iter()
                .map(|&eps| {
                    let q = q_tilde(mean + eps)?.min(q_tilde(mean - eps)?);
                    Ok(RateRow { eps, q: q.max(0.0) })
                })
                .collect::<Result<Vec<_>>>()?
        }
        RateMethod::Direct => {
            let (step, candidates) = direct_candidates(system, &phi_c, psi_c)?;
            grid_step = Some(step);
            eps_grid
                .iter()
                .map(|&eps| {
                    let best = candidates
                        .iter()
                        .filter(|(_, m)| (m - mean).abs() >= eps - 1e-12)
                        .map(|(v, _)| *v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    RateRow {
                        eps,
                        q: (p0 - best).max(0.0),
                    }
                })
                .collect()
        }
    };
    Ok(RateTable {
        method,
        pressure: p0,
        mean,
        mean_range,
        grid_step,
        rows,
    })
}

/// All compositions of `n` into `k` nonnegative parts.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1u64, |acc, i| acc.saturating_mul(n + 1 - i) / i)
}

/// `sum over words w of pi(w) value(w) r(w[offset])` for a dense chain.
fn chain_fiber_mean(pi: &[f64], p: &[Vec<f64>], c: &CylinderPotential, roof: &crate::suspension::Roof) -> f64 {
    if let Some(v) = c.is_constant() {
        return v * pi.iter().enumerate().map(|(a, x)| x * roof.get(a)).sum::<f64>();
    }
    fn rec(
        p: &[Vec<f64>],
        c: &CylinderPotential,
        roof: &crate::suspension::Roof,
        word: &mut Vec<Symbol>,
        prob: f64,
        acc: &mut f64,
    ) {
        if word.len() == c.width {
            *acc += prob * c.word_value(word) * roof.get(word[c.offset]);
            return;
        }
        let last = *word.last().unwrap();
        for (b, &q) in p[last].iter().enumerate() {
            if q > 0.0 {
                word.push(b);
                rec(p, c, roof, word, prob * q, acc);
                word.pop();
            }
        }
    }
    let mut acc = 0.0;
    for (a, &x) in pi.iter().enumerate() {
        if x > 0.0 {
            rec(p, c, roof, &mut vec![a], x, &mut acc);
        }
    }
    acc
}

/// `(h + int phi, int psi)` for every first-order kernel on the simplex
/// grid that has a unique stationary vector.
fn direct_candidates(
    system: &FlowSystem,
    phi: &CylinderPotential,
    psi: &CylinderPotential,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let sft = system.sft();
    let roof = system.roof();
    let n = sft.n_symbols();
    if n > 4 {
        return Err(Error::InvalidArgument(format!(
            "the direct optimizer handles at most 4 symbols, got {n}"
        )));
    }
    let count = |steps: usize| -> u64 {
        (0..n)
            .map(|a| {
                let d = sft.successors(a).len() as u64;
                binomial(steps as u64 + d - 1, d - 1)
            })
            .fold(1u64, |x, y| x.saturating_mul(y))
    };
    let mut steps = (1.0 / DIRECT_STEP).round() as usize;
    while steps > 1 && count(steps) > DIRECT_CAP {
        steps -= 1;
    }
    let row_options: Vec<Vec<Vec<(usize, f64)>>> = (0..n)
        .map(|a| {
            let succ = sft.successors(a);
            compositions(steps, succ.len())
                .into_iter()
                .map(|c| {
                    succ.iter()
                        .zip(c)
                        .map(|(&b, k)| (b, k as f64 / steps as f64))
                        .collect()
                })
                .collect()
        })
        .collect();
    let total: usize = row_options.iter().map(Vec::len).product();
    let candidates: Vec<(f64, f64)> = (0..total)
        .into_par_iter()
        .filter_map(|mut idx| {
            let mut p = vec![vec![0.0; n]; n];
            for (a, opts) in row_options.iter().enumerate() {
                for &(b, x) in &opts[idx % opts.len()] {
                    p[a][b] = x;
                }
                idx /= opts.len();
            }
            let mut m = DMatrix::<f64>::zeros(n, n);
            for a in 0..n {
                for b in 0..n {
                    m[(b, a)] += p[a][b];
                }
                m[(a, a)] -= 1.0;
            }
            for j in 0..n {
                m[(n - 1, j)] = 1.0;
            }
            let mut rhs = DVector::<f64>::zeros(n);
            rhs[n - 1] = 1.0;
            let lu = m.lu();
            if lu.determinant().abs() < 1e-10 {
                return None;
            }
            let pi: Vec<f64> = lu.solve(&rhs)?.iter().map(|x| x.max(0.0)).collect();
            let mean_r: f64 = pi.iter().enumerate().map(|(a, x)| x * roof.get(a)).sum();
            let mut h = 0.0;
            for a in 0..n {
                for &q in &p[a] {
                    if q > 0.0 {
                        h -= pi[a] * q * q.ln();
                    }
                }
            }
            let value = (h + chain_fiber_mean(&pi, &p, phi, roof)) / mean_r;
            let mean = chain_fiber_mean(&pi, &p, psi, roof) / mean_r;
            Some((value, mean))
        })
        .collect();
    Ok((1.0 / steps as f64, candidates))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationEstimate {
    pub eps: f64,
    pub t: f64,
    pub samples: usize,
    pub hits: usize,
    pub frequency: f64,
    /// `(1/t) log frequency`; absent when there were no hits.
    pub log_rate: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: f64,
    /// Fewer than 10 hits: the estimate is not resolved.
    pub insufficient_resolution: bool,
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for a binomial proportion at 95%.
pub fn wilson_interval(hits: usize, n: usize) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    (lo, (centre + half).min(1.0))
}

/// Time average `(1/t) int_0^t psi(f_s x) ds` of a typical point drawn from `m`.
fn sample_average<R: rand::Rng + ?Sized>(
    m: &SuspendedMeasure,
    sampler: &crate::markov::PointSampler<'_>,
    psi: &CylinderPotential,
    t: f64,
    rng: &mut R,
) -> f64 {
    let rmin = m.roof.min();
    let n = (t / rmin).ceil() as usize + 2;
    let states = sampler.sample_states(rng, psi.offset, n + psi.width + 1);
    let labels: Vec<Symbol> = states.iter().map(|&s| m.base.labels()[s]).collect();
    let r0 = m.roof.get(labels[psi.offset]);
    let mut h = rng.random::<f64>() * r0;
    let mut remaining = t;
    let mut total = 0.0;
    let mut k = 0;
    while remaining > 0.0 {
        let r = m.roof.get(labels[psi.offset + k]);
        let stay = (r - h).min(remaining);
        total += psi.word_value(&labels[k..k + psi.width]) * stay;
        remaining -= stay;
        h = 0.0;
        k += 1;
    }
    total / t
}

/// Monte Carlo frequency of `|(1/t) int_0^t psi - int psi dm| >= eps` under `m`.
pub fn deviation_frequency(
    m: &SuspendedMeasure,
    psi: &Potential,
    eps: f64,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<DeviationEstimate> {
    let psi_c = psi_cylinder(psi)?;
    if n_samples == 0 || !(t > 0.0) {
        return Err(Error::InvalidArgument("need t > 0 and at least one sample".into()));
    }
    let mean = m.integral(psi_c);
    let sampler = m.sampler();
    let hits = (0..n_samples)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = substream(seed, i as u64);
            (sample_average(m, &sampler, psi_c, t, &mut rng) - mean).abs() >= eps
        })
        .count();
    let frequency = hits as f64 / n_samples as f64;
    let (lo, hi) = wilson_interval(hits, n_samples);
    Ok(DeviationEstimate {
        eps,
        t,
        samples: n_samples,
        hits,
        frequency,
        log_rate: (hits > 0).then(|| frequency.ln() / t),
        ci_lo: (lo > 0.0).then(|| lo.ln() / t),
        ci_hi: hi.ln() / t,
        insufficient_resolution: hits < 10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suspension::Suspension;

    fn bernoulli_setup() -> (FlowSystem, Potential) {
        let sys: FlowSystem = Suspension::unit(crate::sft::Sft::full(2).unwrap()).into();
        let psi = Potential::Cylinder(CylinderPotential::per_symbol(&[0.0, 1.0]));
        (sys, psi)
    }

    fn h(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn legendre_bernoulli_closed_form() {
        let (sys, psi) = bernoulli_setup();
        let t = rate_function(&sys, &Potential::zero(), &psi, &[0.0, 0.1, 0.5, 0.7], RateMethod::Legendre).unwrap();
        assert!(t.q(0.0).unwrap() < 1e-9);
        assert!((t.q(0.1).unwrap() - (2f64.ln() - h(0.6))).abs() < 1e-6);
        assert!((t.q(0.5).unwrap() - 2f64.ln()).abs() < 1e-6);
        assert!(t.q(0.7).unwrap().is_infinite());
        assert!((t.mean_range.0).abs() < 1e-9 && (t.mean_range.1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn direct_bernoulli_closed_form() {
        let (sys, psi) = bernoulli_setup();
        let t = rate_function(&sys, &Potential::zero(), &psi, &[0.0, 0.1, 0.5], RateMethod::Direct).unwrap();
        assert_eq!(t.grid_step, Some(0.02));
        assert!(t.q(0.0).unwrap() < 1e-12);
        assert!((t.q(0.1).unwrap() - (2f64.ln() - h(0.6))).abs() < 1e-9);
        assert!((t.q(0.5).unwrap() - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn zero_deviation_always_hits() {
        let (sys, psi) = bernoulli_setup();
        let (m, _) = equilibrium_state(&sys, &Potential::zero()).unwrap();
        let d = deviation_frequency(&m, &psi, 0.0, 10.0, 200, 5).unwrap();
        assert_eq!(d.hits, 200);
        assert_eq!(d.log_rate, Some(0.0));
    }

    #[test]
    fn wilson_contains_proportion() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }
}
