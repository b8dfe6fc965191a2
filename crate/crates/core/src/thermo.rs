//! Pressure, equilibrium states and Gibbs statistics.
//!
//! The spectral method reduces the flow to the base: `P(phi)` is the unique
//! `s` at which the Perron root of
//! `M(s)_ab = A_ab exp(phi_hat(a) - s r(a))` equals 1, where `phi_hat`
//! integrates `phi` over a fiber. Width-`w` potentials are handled on the
//! `w`-block shift.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{substream, MarkovMeasure, SuspendedMeasure};
use crate::potential::{CylinderPotential, FlowSystem, Potential};
use crate::sft::{BlockShift, Sft, Symbol};
use crate::suspension::{glue_depth, OrbitSegment, Roof, SuspPoint};
use crate::biword::BiWord;

/// Widths used to approximate a distance potential by cylinder potentials.
pub const DISTANCE_WIDTHS: [usize; 3] = [2, 4, 6];

const PERRON_TOL: f64 = 1e-13;
const PERRON_MAX_ITER: usize = 100_000;
const BISECTION_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PressureMethod {
    Spectral,
    Separated,
    Gurevic,
}

impl PressureMethod {
    pub const ALL: [PressureMethod; 3] = [Self::Spectral, Self::Separated, Self::Gurevic];
}

impl fmt::Display for PressureMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spectral => "spectral",
            Self::Separated => "separated",
            Self::Gurevic => "gurevic",
        })
    }
}

impl FromStr for PressureMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "separated" => Ok(Self::Separated),
            "gurevic" => Ok(Self::Gurevic),
            _ => Err(Error::InvalidArgument(format!("unknown pressure method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureReport {
    pub value: f64,
    pub error: f64,
    pub method: PressureMethod,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Perron data of one matrix `M(s)`.
#[derive(Debug, Clone)]
struct Perron {
    lo: f64,
    hi: f64,
    vector: Vec<f64>,
}

/// Transfer matrices `M(s)` on the block presentation matching a potential.
#[derive(Debug, Clone)]
pub struct Transfer {
    blocks: BlockShift,
    labels: Vec<Symbol>,
    n_symbols: usize,
    r: Vec<f64>,
    value: Vec<f64>,
    pred: Vec<Vec<usize>>,
}

impl Transfer {
    pub fn new(sft: &Sft, roof: &Roof, phi: &CylinderPotential) -> Result<Self> {
        if !sft.is_irreducible() {
            return Err(Error::WeakSpecificationFails);
        }
        phi.check_covers(sft)?;
        let blocks = sft.block_presentation(phi.width.max(1));
        let labels: Vec<Symbol> = blocks.words.iter().map(|w| w[phi.offset]).collect();
        let r = labels.iter().map(|&s| roof.get(s)).collect();
        let value = blocks.words.iter().map(|w| phi.word_value(w)).collect();
        let mut pred = vec![Vec::new(); blocks.len()];
        for (a, succ) in blocks.successors.iter().enumerate() {
            for &b in succ {
                pred[b].push(a);
            }
        }
        Ok(Self {
            blocks,
            labels,
            n_symbols: sft.n_symbols(),
            r,
            value,
            pred,
        })
    }

    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    fn row_weights(&self, s: f64) -> Vec<f64> {
        self.value
            .iter()
            .zip(&self.r)
            .map(|(v, r)| ((v - s) * r).exp())
            .collect()
    }

    fn apply(&self, c: &[f64], v: &[f64], out: &mut [f64], transpose: bool) {
        if transpose {
            for (b, o) in out.iter_mut().enumerate() {
                *o = self.pred[b].iter().map(|&a| c[a] * v[a]).sum();
            }
        } else {
            for (a, o) in out.iter_mut().enumerate() {
                *o = c[a] * self.blocks.successors[a].iter().map(|&b| v[b]).sum::<f64>();
            }
        }
    }

    /// Power iteration on `I + M(s)` with Collatz–Wielandt bounds on the
    /// Perron root. With `decide` it stops as soon as the bounds exclude 1.
    fn perron(&self, s: f64, transpose: bool, decide: bool) -> Result<Perron> {
        let n = self.n_states();
        let c = self.row_weights(s);
        let mut v = vec![1.0; n];
        let mut mv = vec![0.0; n];
        let mut prev = f64::NAN;
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        for it in 0..PERRON_MAX_ITER {
            self.apply(&c, &v, &mut mv, transpose);
            lo = f64::INFINITY;
            hi = 0.0;
            for (x, y) in mv.iter().zip(&v) {
                let q = x / y;
                lo = f64::min(lo, q);
                hi = f64::max(hi, q);
            }
            if decide && (lo > 1.0 || hi < 1.0) {
                break;
            }
            let est = 0.5 * (lo + hi);
            let settled = it > 20 && (est - prev).abs() <= PERRON_TOL * est && hi - lo <= 1e-9 * hi;
            if hi - lo <= PERRON_TOL * hi || settled {
                break;
            }
            prev = est;
            let mut top: f64 = 0.0;
            for (x, y) in v.iter_mut().zip(&mv) {
                *x += y;
                top = top.max(*x);
            }
            v.iter_mut().for_each(|x| *x /= top);
            if it + 1 == PERRON_MAX_ITER {
                return Err(Error::NonConvergence {
                    residual: (hi - lo) / hi,
                });
            }
        }
        Ok(Perron { lo, hi, vector: v })
    }

    /// Root of `log rho(M(s)) = 0` by bisection; returns `(value, error)`.
    pub fn pressure(&self) -> Result<(f64, f64)> {
        let rmin = self.r.iter().copied().fold(f64::INFINITY, f64::min);
        let vmin = self.value.iter().copied().fold(f64::INFINITY, f64::min);
        let vmax = self.value.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let deg = self.blocks.successors.iter().map(Vec::len).max().unwrap_or(1) as f64;
        let mut lo = vmin;
        let mut hi = vmax + deg.ln() / rmin;
        let mut slack = 0.0;
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            let p = self.perron(mid, false, true)?;
            if p.lo > 1.0 {
                lo = mid;
            } else if p.hi < 1.0 {
                hi = mid;
            } else {
                // The Perron root is within rounding of 1: d log rho / ds
                // is at most -min r in magnitude.
                slack = p.lo.ln().abs().max(p.hi.ln().abs()) / rmin;
                lo = mid;
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi), 0.5 * (hi - lo) + slack + f64::EPSILON * hi.abs()))
    }

    /// Base chain of the equilibrium state at pressure `p`:
    /// `P_ab = M_ab v_b / (rho v_a)`, stationary vector `u_a v_a`.
    pub fn equilibrium(&self, p: f64) -> Result<MarkovMeasure> {
        let right = self.perron(p, false, false)?;
        let left = self.perron(p, true, false)?;
        let c = self.row_weights(p);
        let v = &right.vector;
        let rows: Vec<Vec<(usize, f64)>> = self
            .blocks
            .successors
            .iter()
            .enumerate()
            .map(|(a, succ)| {
                let w: Vec<f64> = succ.iter().map(|&b| c[a] * v[b]).collect();
                let total: f64 = w.iter().sum();
                succ.iter().zip(w).map(|(&b, x)| (b, x / total)).collect()
            })
            .collect();
        let mut pi: Vec<f64> = left.vector.iter().zip(v).map(|(u, v)| u * v).collect();
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|x| *x /= total);
        MarkovMeasure::with_stationary(self.n_symbols, self.labels.clone(), rows.clone(), pi)
            .or_else(|_| MarkovMeasure::from_chain(self.n_symbols, self.labels.clone(), rows))
    }

    /// Whether some cycle has `sum (value - lambda) r > 0` (Bellman–Ford
    /// longest paths still improving after `n` rounds).
    fn has_positive_cycle(&self, lambda: f64, sign: f64) -> bool {
        let n = self.n_states();
        let w: Vec<f64> = self
            .value
            .iter()
            .zip(&self.r)
            .map(|(v, r)| sign * (v - lambda) * r)
            .collect();
        let mut dist = vec![0.0; n];
        for _ in 0..=n {
            let mut changed = false;
            for a in 0..n {
                let cand = dist[a] + w[a];
                for &b in &self.blocks.successors[a] {
                    if cand > dist[b] + 1e-12 {
                        dist[b] = cand;
                        changed = true;
                    }
                }
            }
            if !changed {
                return false;
            }
        }
        true
    }

    /// Extreme values of `int phi dmu` over invariant measures: the least
    /// and greatest time averages of `phi` around cycles.
    pub fn mean_range(&self) -> (f64, f64) {
        let vmin = self.value.iter().copied().fold(f64::INFINITY, f64::min);
        let vmax = self.value.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let search = |sign: f64| {
            let (mut lo, mut hi) = (vmin, vmax);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                // sign = 1: is the largest cycle average above mid?
                let above = self.has_positive_cycle(mid, sign);
                if (sign > 0.0) == above {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        (search(-1.0), search(1.0))
    }

    /// `Z(t)`: sum of `exp(Phi)` over the state words covering `[0, t]`.
    fn partition_sum(&self, t: f64, memo: &mut HashMap<(usize, i64), f64>) -> f64 {
        (0..self.n_states()).map(|a| self.partition_from(a, t, memo)).sum()
    }

    fn partition_from(&self, a: usize, rem: f64, memo: &mut HashMap<(usize, i64), f64>) -> f64 {
        let r = self.r[a];
        if rem <= r + 1e-12 {
            return (self.value[a] * rem.min(r)).exp();
        }
        let key = (a, (rem * 1e9).round() as i64);
        if let Some(&z) = memo.get(&key) {
            return z;
        }
        let inner: f64 = self.blocks.successors[a]
            .iter()
            .map(|&b| self.partition_from(b, rem - r, memo))
            .sum();
        let z = (self.value[a] * r).exp() * inner;
        memo.insert(key, z);
        z
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let se = if xs.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, se)
}

/// Cylinder potential used for computations that need a locally constant
/// potential (the width-6 approximation for distance potentials).
pub fn working_cylinder(system: &FlowSystem, phi: &Potential) -> Result<CylinderPotential> {
    phi.to_cylinder(system, *DISTANCE_WIDTHS.last().unwrap())
}

fn spectral(system: &FlowSystem, phi: &Potential) -> Result<PressureReport> {
    let mut diagnostics = BTreeMap::new();
    match phi {
        Potential::Cylinder(c) => {
            let tr = Transfer::new(system.sft(), system.roof(), c)?;
            let (value, error) = tr.pressure()?;
            diagnostics.insert("states".into(), tr.n_states() as f64);
            diagnostics.insert("bisection_error".into(), error);
            Ok(PressureReport {
                value,
                error,
                method: PressureMethod::Spectral,
                diagnostics,
            })
        }
        Potential::Distance(_) => {
            let mut values = Vec::new();
            let mut err = 0.0;
            for w in DISTANCE_WIDTHS {
                let c = phi.to_cylinder(system, w)?;
                let (v, e) = Transfer::new(system.sft(), system.roof(), &c)?.pressure()?;
                diagnostics.insert(format!("width_{w}"), v);
                values.push(v);
                err = e;
            }
            let n = values.len();
            Ok(PressureReport {
                value: values[n - 1],
                error: (values[n - 1] - values[n - 2]).abs() + err,
                method: PressureMethod::Spectral,
                diagnostics,
            })
        }
    }
}

fn separated(system: &FlowSystem, phi: &Potential, t_max: f64) -> Result<PressureReport> {
    let c = working_cylinder(system, phi)?;
    let tr = Transfer::new(system.sft(), system.roof(), &c)?;
    let mut memo = HashMap::new();
    let ks: Vec<usize> = (6..=12).collect();
    let ts: Vec<f64> = ks.iter().map(|&k| t_max * k as f64 / 12.0).collect();
    let logs: Vec<f64> = ts.iter().map(|&t| tr.partition_sum(t, &mut memo).ln()).collect();
    if logs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonConvergence { residual: f64::NAN });
    }
    let (slope, se) = least_squares(&ts, &logs);
    let (late, _) = least_squares(&ts[3..], &logs[3..]);
    // Two-sided 95% Student quantile for 5 degrees of freedom.
    let ci = 2.571 * se;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("t_max".into(), t_max);
    diagnostics.insert("slope_ci".into(), ci);
    diagnostics.insert("late_slope".into(), late);
    diagnostics.insert("log_z_t_max".into(), *logs.last().unwrap());
    Ok(PressureReport {
        value: slope,
        error: ci + (slope - late).abs(),
        method: PressureMethod::Separated,
        diagnostics,
    })
}

/// `exp(Phi)` around the closed orbit with the given cyclic word.
pub fn cyclic_integral(phi: &CylinderPotential, roof: &Roof, word: &[Symbol]) -> f64 {
    let n = word.len();
    let mut window = vec![0; phi.width];
    (0..n)
        .map(|i| {
            for (j, x) in window.iter_mut().enumerate() {
                *x = word[(i + n * phi.width + j - phi.offset) % n];
            }
            phi.word_value(&window) * roof.get(word[i])
        })
        .sum()
}

/// Primitive closed orbits of period at most `max_period` together with
/// `(length, Phi)`.
pub fn closed_orbits(
    system: &FlowSystem,
    phi: &CylinderPotential,
    max_period: f64,
) -> Vec<(Vec<Symbol>, f64, f64)> {
    let roof = system.roof();
    let cycles = system.sft().enumerate_weighted_cycles(roof.values(), max_period);
    cycles
        .into_par_iter()
        .map(|w| {
            let len = roof.word_time(&w);
            let integral = cyclic_integral(phi, roof, &w);
            (w, len, integral)
        })
        .collect()
}

fn gurevic(system: &FlowSystem, phi: &Potential, max_period: f64) -> Result<PressureReport> {
    let c = working_cylinder(system, phi)?;
    let orbits = closed_orbits(system, &c, max_period);
    if orbits.is_empty() {
        return Err(Error::NoClosedOrbits(max_period));
    }
    let shift = orbits.iter().map(|o| o.2).fold(f64::NEG_INFINITY, f64::max);
    let g = |t: f64| -> f64 {
        orbits
            .iter()
            .filter(|o| o.1 <= t + 1e-9)
            .map(|o| o.1 * (o.2 - shift).exp())
            .sum()
    };
    let delta = max_period / 3.0;
    let rate = |t: f64| (g(t) / g(t - delta)).ln() / delta;
    let value = rate(max_period);
    let previous = rate(max_period - delta / 2.0);
    if !value.is_finite() || !previous.is_finite() {
        return Err(Error::NoClosedOrbits(max_period - 1.5 * delta));
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("max_period".into(), max_period);
    diagnostics.insert("orbits".into(), orbits.len() as f64);
    diagnostics.insert("previous".into(), previous);
    Ok(PressureReport {
        value,
        error: (value - previous).abs(),
        method: PressureMethod::Gurevic,
        diagnostics,
    })
}

/// Topological pressure of `phi`. `horizon` is the largest time used by the
/// separated method and the largest period used by the Gurevic method.
pub fn pressure(
    system: &FlowSystem,
    phi: &Potential,
    method: PressureMethod,
    horizon: f64,
) -> Result<PressureReport> {
    phi.validate(system)?;
    match method {
        PressureMethod::Spectral => spectral(system, phi),
        PressureMethod::Separated => separated(system, phi, horizon),
        PressureMethod::Gurevic => gurevic(system, phi, horizon),
    }
}

/// The equilibrium state of `phi` (of its width-6 approximation for distance
/// potentials) with the pressure it was built at.
pub fn equilibrium_state(system: &FlowSystem, phi: &Potential) -> Result<(SuspendedMeasure, f64)> {
    phi.validate(system)?;
    let c = working_cylinder(system, phi)?;
    let tr = Transfer::new(system.sft(), system.roof(), &c)?;
    let (p, _) = tr.pressure()?;
    let base = tr.equilibrium(p)?;
    Ok((SuspendedMeasure::new(base, system.roof().clone())?, p))
}

/// `(h_mu, int phi dmu)` for the flow.
pub fn entropy_and_mean(system: &FlowSystem, mu: &SuspendedMeasure, phi: &Potential) -> Result<(f64, f64)> {
    let c = working_cylinder(system, phi)?;
    Ok((mu.entropy(), mu.integral(&c)))
}

/// `h_mu + int phi dmu`.
pub fn free_energy(system: &FlowSystem, mu: &SuspendedMeasure, phi: &Potential) -> Result<f64> {
    let (h, m) = entropy_and_mean(system, mu, phi)?;
    Ok(h + m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsRow {
    pub t: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl GibbsRow {
    pub fn band(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsStats {
    pub rho: f64,
    pub depth: usize,
    pub pressure: f64,
    pub rows: Vec<GibbsRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl GibbsStats {
    pub fn row(&self, t: f64) -> Option<&GibbsRow> {
        self.rows.iter().find(|r| (r.t - t).abs() < 1e-12)
    }
}

/// Measure of the Bowen ball `B_t(x, rho)`: the cylinder fixed by
/// rho-closeness over `[0, t]` times a height window of width `rho`.
pub fn ball_measure(system: &FlowSystem, mu: &SuspendedMeasure, x: &SuspPoint, t: f64, rho: f64) -> f64 {
    let k = glue_depth(rho / 2.0) as i64;
    let (_, n) = system.suspension().advance(x, t);
    let word = x.base.window(-k, n + k + 2);
    mu.base.word_probability(&word) * rho / mu.mean_roof
}

/// Extremes of `mu(B_t(x, rho)) / exp(-t P + Phi(x, t))` over sampled `x`.
#[allow(clippy::too_many_arguments)]
pub fn gibbs_ratio_stats(
    system: &FlowSystem,
    mu: &SuspendedMeasure,
    phi: &Potential,
    rho: f64,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<GibbsStats> {
    let scale = system.expansivity_scale();
    if !(rho > 0.0) || rho > scale {
        return Err(Error::AboveExpansivityScale { rho, scale });
    }
    let p = pressure(system, phi, PressureMethod::Spectral, 0.0)?.value;
    let k = glue_depth(rho / 2.0);
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let forward = (t_max / system.roof().min()).ceil() as usize + k + 4;
    let sampler = mu.sampler();
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let x = sampler.sample_point(&mut rng, system.sft(), k + 1, forward);
            t_grid
                .iter()
                .map(|&t| {
                    let seg = OrbitSegment {
                        start: x.clone(),
                        duration: t,
                    };
                    let big_phi = phi.birkhoff(system, &seg)?;
                    Ok(ball_measure(system, mu, &x, t, rho) / (-t * p + big_phi).exp())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<GibbsRow> = t_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let col = per_sample.iter().map(|r| r[j]);
            GibbsRow {
                t,
                min_ratio: col.clone().fold(f64::INFINITY, f64::min),
                max_ratio: col.fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(GibbsStats {
        rho,
        depth: k,
        pressure: p,
        min_ratio: rows.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min),
        max_ratio: rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BowenRow {
    pub s: f64,
    pub v: f64,
    pub pairs: usize,
}

fn random_walk<R: Rng + ?Sized>(sft: &Sft, rng: &mut R, from: Symbol, len: usize, backward: bool) -> Vec<Symbol> {
    let n = sft.n_symbols();
    let mut out = Vec::with_capacity(len);
    let mut s = from;
    for _ in 0..len {
        let options: Vec<Symbol> = if backward {
            (0..n).filter(|&a| sft.allows(a, s)).collect()
        } else {
            sft.successors(s).to_vec()
        };
        s = options[rng.random_range(0..options.len())];
        out.push(s);
    }
    if backward {
        out.reverse();
    }
    out
}

fn close_up(sft: &Sft, mut word: Vec<Symbol>, origin: usize) -> BiWord {
    word.extend(sft.shortest_gap(*word.last().unwrap(), word[0]));
    BiWord::new(word.clone(), Vec::new(), word, origin as i64).expect("nonempty word")
}

/// Sup of `|Phi(x, S) - Phi(y, S)|` over sampled pairs that stay
/// `eps`-close at every grid time in `[0, S]` (grid step 1/4).
pub fn bowen_constant_estimate(
    system: &FlowSystem,
    phi: &Potential,
    eps: f64,
    s_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<BowenRow>> {
    phi.validate(system)?;
    let sft = system.sft();
    let susp = system.suspension();
    let rmin = system.roof().min();
    let k0 = glue_depth(eps / 2.0);
    s_grid
        .iter()
        .enumerate()
        .map(|(row, &s)| {
            let diffs: Vec<Option<f64>> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = substream(seed, ((row as u64) << 32) | i as u64);
                    let k = k0 + rng.random_range(0..4);
                    let n = (s / rmin).ceil() as usize + 1;
                    let first = rng.random_range(0..sft.n_symbols());
                    let mut mid = vec![first];
                    mid.extend(random_walk(sft, &mut rng, first, 2 * k + n, false));
                    let pad = 3;
                    let mut w1 = random_walk(sft, &mut rng, mid[0], pad, true);
                    let mut w2 = random_walk(sft, &mut rng, mid[0], pad, true);
                    w1.extend(&mid);
                    w2.extend(&mid);
                    w1.extend(random_walk(sft, &mut rng, *mid.last().unwrap(), pad, false));
                    w2.extend(random_walk(sft, &mut rng, *mid.last().unwrap(), pad, false));
                    let x1 = close_up(sft, w1, pad + k);
                    let x2 = close_up(sft, w2, pad + k);
                    let r = system.roof().get(x1.at(0));
                    let h1 = rng.random::<f64>() * r;
                    let h2 = (h1 + (2.0 * rng.random::<f64>() - 1.0) * eps / 4.0).clamp(0.0, r * (1.0 - 1e-12));
                    let p1 = SuspPoint { base: x1, height: h1 };
                    let p2 = SuspPoint { base: x2, height: h2 };
                    let steps = (4.0 * s).ceil() as usize;
                    let close = (0..=steps).all(|j| {
                        let t = s * j as f64 / steps.max(1) as f64;
                        system.distance(&susp.flow(&p1, t), &susp.flow(&p2, t)) < eps
                    });
                    if !close {
                        return Ok(None);
                    }
                    let a = phi.birkhoff(system, &OrbitSegment { start: p1, duration: s })?;
                    let b = phi.birkhoff(system, &OrbitSegment { start: p2, duration: s })?;
                    Ok(Some((a - b).abs()))
                })
                .collect::<Result<_>>()?;
            let kept: Vec<f64> = diffs.into_iter().flatten().collect();
            Ok(BowenRow {
                s,
                v: kept.iter().copied().fold(0.0, f64::max),
                pairs: kept.len(),
            })
        })
        .collect()
}
