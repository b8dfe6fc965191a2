//! Entropy density of ergodic measures: explicit ergodic approximations of
//! convex combinations, separated sets of generic orbit segments, the glued
//! families used to count them, and gluing of countable segment streams.

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::markov::{stationary_distribution, substream, MarkovMeasure, SuspendedMeasure};
use crate::potential::FlowSystem;
use crate::sft::Symbol;
use crate::stats::{empirical_measure, weak_star_distance, EmpiricalMeasure, WeakStarConfig};
use crate::suspension::{glue_depth, horizon_for, GluingResult, OrbitSegment, Roof, SuspPoint, Suspension};

/// Gluing scale as a fraction of the expansivity scale.
pub const EPS_FRACTION: f64 = 0.3;
/// Samples in each half (level selection, certification) of a generic-set run.
pub const GENERIC_SAMPLES: usize = 200;
const SEPARATION_PAIRS: usize = 20;
const FAMILY_MEMBERS: usize = 6;
const WINDOW_SAMPLES: usize = 100;
const MIN_CYCLE: usize = 16;
const MAX_CYCLE: usize = 8192;
const CONFIDENCE: f64 = 0.95;

/// `mu = sum a_i mu_i` with ergodic first-order components, and a tolerance.
#[derive(Debug, Clone)]
pub struct ApproxTarget {
    pub components: Vec<(MarkovMeasure, f64)>,
    pub eta: f64,
}

impl ApproxTarget {
    pub fn new(components: Vec<(MarkovMeasure, f64)>, eta: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("no components".into()));
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
        }
        let total: f64 = components.iter().map(|c| c.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        let n = components[0].0.n_symbols();
        for (m, a) in &components {
            if !(*a > 0.0 && *a <= 1.0) || (*a == 1.0 && components.len() > 1) {
                return Err(Error::InvalidArgument(format!("weight {a} outside (0, 1)")));
            }
            if m.n_symbols() != n {
                return Err(Error::InvalidArgument("components on different alphabets".into()));
            }
            if !m.is_symbolic() {
                return Err(Error::InvalidArgument("components must be first-order chains on symbols".into()));
            }
        }
        Ok(Self { components, eta })
    }

    pub fn p(&self) -> usize {
        self.components.len()
    }

    pub fn flow_measures(&self, roof: &Roof) -> Result<Vec<SuspendedMeasure>> {
        self.components
            .iter()
            .map(|(m, _)| SuspendedMeasure::new(m.clone(), roof.clone()))
            .collect()
    }

    /// `h_mu = sum a_i h(mu_i)`, flow entropies.
    pub fn entropy(&self, roof: &Roof) -> Result<f64> {
        let ms = self.flow_measures(roof)?;
        Ok(ms.iter().zip(&self.components).map(|(m, c)| c.1 * m.entropy()).sum())
    }

    pub fn statistics(&self, roof: &Roof, cfg: &WeakStarConfig) -> Result<EmpiricalMeasure> {
        let ms = self.flow_measures(roof)?;
        let stats: Vec<EmpiricalMeasure> = ms.iter().map(|m| EmpiricalMeasure::from_suspended(m, cfg)).collect();
        let parts: Vec<(f64, &EmpiricalMeasure)> =
            self.components.iter().zip(&stats).map(|(c, s)| (c.1, s)).collect();
        EmpiricalMeasure::mixture(&parts)
    }

    fn check_support(&self, system: &FlowSystem) -> Result<Vec<Vec<Vec<f64>>>> {
        let sft = system.sft();
        if self.components[0].0.n_symbols() != sft.n_symbols() {
            return Err(Error::SystemMismatch("target and system disagree on the alphabet".into()));
        }
        let mut kernels = Vec::new();
        for (m, _) in &self.components {
            let k = m.symbol_kernel().expect("checked symbolic");
            for (a, row) in k.iter().enumerate() {
                for (b, &p) in row.iter().enumerate() {
                    if p > 0.0 && !sft.allows(a, b) {
                        return Err(Error::NotAdmissible(format!(
                            "component charges the forbidden transition {}",
                            sft.format_word(&[a, b])
                        )));
                    }
                }
            }
            kernels.push(k);
        }
        Ok(kernels)
    }
}

/// Shortest generic segment accepted at tolerance `eta`.
///
/// Closing a segment into a periodic orbit disturbs the statistics of at most
/// a depth's worth of windows, which moves `D` by about `2 max r / t`; the
/// threshold keeps that below `eta / 4`.
pub fn generic_threshold(roof: &Roof, eta: f64) -> f64 {
    8.0 * roof.max() / eta
}

/// The scale `eps` of the construction: sets are `3 eps`-separated and glued at
/// scale `eps`.
pub fn separation_scale(system: &FlowSystem) -> f64 {
    EPS_FRACTION * system.expansivity_scale()
}

/// Entropy targeted for a generic set of a measure with entropy `h`.
pub fn target_entropy(h: f64, eta: f64) -> f64 {
    if h <= 0.0 {
        0.0
    } else {
        (h - eta).max(0.0) + 0.1 * eta.min(h)
    }
}

/// One-sided lower confidence bound for a binomial proportion.
pub fn clopper_pearson_lower(hits: usize, n: usize, confidence: f64) -> f64 {
    if hits == 0 {
        return 0.0;
    }
    let beta = Beta::new(hits as f64, (n - hits) as f64 + 1.0).expect("positive shapes");
    beta.inverse_cdf(1.0 - confidence)
}

/// Whether the orbits of `x` and `y` get more than `threshold` apart at some
/// time in `[0, t]`.
fn separated_along(susp: &Suspension, x: &SuspPoint, y: &SuspPoint, t: f64, threshold: f64) -> bool {
    let step = (threshold / 2.0).min(susp.roof().min() / 8.0);
    let horizon = horizon_for(threshold);
    let n = (t / step).ceil().max(0.0) as usize;
    let h = if n == 0 { 0.0 } else { t / n as f64 };
    let mut px = x.clone();
    let mut py = y.clone();
    for i in 0..=n {
        if susp.bw_unchecked(&px, &py, horizon) > threshold {
            return true;
        }
        if i < n {
            susp.advance_in_place(&mut px, h);
            susp.advance_in_place(&mut py, h);
        }
    }
    false
}

/// A `(t, 3 eps)`-separated set of periodic points whose empirical measures
/// over `[0, t]` are within `eta` of a component, together with a certified
/// lower bound on its size.
///
/// Words are drawn from the component chain and stopped at the first length
/// whose roof time reaches `t`; stopped words form a prefix-free set, so any
/// subset `S` of words of probability at most `e^-a` each has
/// `#S >= mu(S) e^a`. The level `a` is picked on one half of the samples and
/// `mu(S)` is bounded from below on the other half.
#[derive(Debug, Clone, Serialize)]
pub struct GenericSet {
    pub t: f64,
    pub h: f64,
    pub eta: f64,
    pub eps: f64,
    pub measure_entropy: f64,
    /// `-log mu[w]` threshold defining the set.
    pub level: f64,
    pub samples: usize,
    pub hits: usize,
    pub mass_lower: f64,
    /// Certified lower bound on `log #Gamma`.
    pub log_size: f64,
    pub separation_pairs: usize,
    pub separation_violations: usize,
    pub certified: bool,
    #[serde(skip)]
    pub members: Vec<Vec<Symbol>>,
}

struct WordSample {
    word: Vec<Symbol>,
    info: f64,
    good: bool,
}

fn sample_stopped_word<R: Rng + ?Sized>(mu: &MarkovMeasure, roof: &Roof, t: f64, rng: &mut R) -> (Vec<Symbol>, f64) {
    let pi = mu.stationary();
    let mut s = mu.sample_state(rng, pi);
    let mut info = -pi[s].ln();
    let mut word = vec![mu.labels()[s]];
    let mut time = roof.get(word[0]);
    while time < t {
        let next = mu.sample_next(rng, s);
        let p = mu.rows()[s].iter().find(|e| e.0 == next).map(|e| e.1).unwrap_or(0.0);
        info -= p.ln();
        s = next;
        word.push(mu.labels()[s]);
        time += roof.get(word[word.len() - 1]);
    }
    (word, info)
}

pub fn separated_generic_set(
    system: &FlowSystem,
    mu: &MarkovMeasure,
    h: f64,
    t: f64,
    eta: f64,
    seed: u64,
) -> Result<GenericSet> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    if !mu.is_symbolic() || mu.n_symbols() != system.sft().n_symbols() {
        return Err(Error::InvalidArgument("measure must be a first-order chain on the system's symbols".into()));
    }
    let roof = system.roof();
    let flow_mu = SuspendedMeasure::new(mu.clone(), roof.clone())?;
    let h_mu = flow_mu.entropy();
    if !(h >= 0.0) || (h >= h_mu && !(h == 0.0 && h_mu <= 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "target entropy {h} must lie below the measure entropy {h_mu}"
        )));
    }
    let threshold = generic_threshold(roof, eta);
    if t < threshold {
        return Err(Error::IncreaseT(format!("t = {t} is below the threshold T(eta) = {threshold}")));
    }
    let susp = system.suspension();
    let sft = system.sft();
    let cfg = WeakStarConfig::for_roof(roof);
    let stats = EmpiricalMeasure::from_suspended(&flow_mu, &cfg);
    let eps = separation_scale(system);

    let samples: Vec<WordSample> = (0..2 * GENERIC_SAMPLES)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let (word, info) = sample_stopped_word(mu, roof, t, &mut rng);
            let good = sft.is_cyclically_admissible(&word)
                && susp
                    .periodic_point(&word)
                    .and_then(|x| empirical_measure(roof, &x, t, &cfg))
                    .and_then(|e| weak_star_distance(&e, &stats, &cfg))
                    .is_ok_and(|d| d <= eta);
            WordSample { word, info, good }
        })
        .collect();
    let (pilot, check) = samples.split_at(GENERIC_SAMPLES);

    // Level maximizing a + log(fraction of good samples at least that rare).
    let mut infos: Vec<f64> = pilot.iter().filter(|s| s.good).map(|s| s.info).collect();
    infos.sort_by(|a, b| b.total_cmp(a));
    let mut level = infos.last().copied().unwrap_or(0.0);
    let mut best = f64::NEG_INFINITY;
    // Levels keeping under a quarter of the samples overfit the pilot half.
    for (k, &a) in infos.iter().enumerate().skip(GENERIC_SAMPLES / 4 - 1) {
        let score = a + ((k + 1) as f64 / GENERIC_SAMPLES as f64).ln();
        if score > best {
            best = score;
            level = a;
        }
    }

    let chosen: Vec<&WordSample> = check.iter().filter(|s| s.good && s.info >= level).collect();
    let hits = chosen.len();
    let mass_lower = clopper_pearson_lower(hits, GENERIC_SAMPLES, CONFIDENCE);
    let log_size = if hits == 0 {
        f64::NEG_INFINITY
    } else {
        (level + mass_lower.ln()).max(0.0)
    };
    let mut members: Vec<Vec<Symbol>> = Vec::new();
    for s in chosen {
        if !members.contains(&s.word) {
            members.push(s.word.clone());
        }
    }

    let pairs: Vec<(usize, usize)> = (0..members.len().saturating_sub(1))
        .map(|i| (i, i + 1))
        .take(SEPARATION_PAIRS)
        .collect();
    let violations = pairs
        .par_iter()
        .filter(|&&(i, j)| {
            let x = susp.periodic_point(&members[i]).expect("admissible member");
            let y = susp.periodic_point(&members[j]).expect("admissible member");
            !separated_along(susp, &x, &y, t, 3.0 * eps)
        })
        .count();

    Ok(GenericSet {
        t,
        h,
        eta,
        eps,
        measure_entropy: h_mu,
        level,
        samples: GENERIC_SAMPLES,
        hits,
        mass_lower,
        log_size,
        separation_pairs: pairs.len(),
        separation_violations: violations,
        certified: hits > 0 && log_size >= t * h && violations == 0,
        members,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockCheck {
    pub member: usize,
    pub block: usize,
    pub distance: f64,
    pub passed: bool,
}

/// Glued products of generic sets and the count of their separated image.
#[derive(Debug, Clone, Serialize)]
pub struct GluedFamily {
    pub t: f64,
    pub m: usize,
    pub eta: f64,
    pub eps: f64,
    pub component_times: Vec<f64>,
    pub sets: Vec<GenericSet>,
    pub gap_bound: usize,
    /// Number of classes of transition lengths, `k`.
    pub partition_count: usize,
    /// `log C = p log k`.
    pub log_c: f64,
    pub max_transition: f64,
    /// Block time `c = sum t_i + (p - 1) tau`.
    pub block_time: f64,
    /// Diameter `M` of the statistics under `D`.
    pub diameter: f64,
    pub h_mu: f64,
    pub log_em: f64,
    pub log_em_rate: f64,
    pub bound: f64,
    pub certificate_holds: bool,
    pub block_checks: Vec<BlockCheck>,
    pub separation_pairs: usize,
    pub separation_violations: usize,
}

impl GluedFamily {
    pub fn block_checks_pass(&self) -> bool {
        self.block_checks.iter().all(|b| b.passed)
    }
}

fn glue_tuple(
    susp: &Suspension,
    sets: &[GenericSet],
    words: &[Vec<usize>],
    eps: f64,
) -> Result<(GluingResult, Vec<OrbitSegment>)> {
    let mut segs = Vec::new();
    for round in words {
        for (i, &w) in round.iter().enumerate() {
            segs.push(OrbitSegment {
                start: susp.periodic_point(&sets[i].members[w])?,
                duration: sets[i].t,
            });
        }
    }
    Ok((susp.glue_segments(&segs, eps)?, segs))
}

pub fn glue_generic_family(
    system: &FlowSystem,
    target: &ApproxTarget,
    t: f64,
    m: usize,
    seed: u64,
) -> Result<GluedFamily> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    target.check_support(system)?;
    let roof = system.roof();
    let susp = system.suspension();
    let cfg = WeakStarConfig::for_roof(roof);
    let eta = target.eta;
    let p = target.p();
    let eps = separation_scale(system);
    let diameter = cfg.diameter();
    let max_transition = susp.max_transition_time(eps)?;
    if p > 1 && p as f64 * max_transition / t >= eta / diameter {
        return Err(Error::RegimeViolation(format!(
            "p tau / t = {} is not below eta / M = {}",
            p as f64 * max_transition / t,
            eta / diameter
        )));
    }
    let gap_bound = system.sft().min_gap_bound()?;
    let flows = target.flow_measures(roof)?;
    let h_mu = target.entropy(roof)?;
    let stats = target.statistics(roof, &cfg)?;

    let mut sets = Vec::with_capacity(p);
    let mut times = Vec::with_capacity(p);
    for (i, (mu_i, a)) in target.components.iter().enumerate() {
        let t_i = a * t;
        let h_i = target_entropy(flows[i].entropy(), eta);
        let set = separated_generic_set(system, mu_i, h_i, t_i, eta, substream(seed, 1 + i as u64).random())?;
        if set.members.is_empty() {
            return Err(Error::IncreaseT(format!("no generic words found for component {i} at t_i = {t_i}")));
        }
        times.push(t_i);
        sets.push(set);
    }
    let m = if p == 1 { 1 } else { m };
    let partition_count = gap_bound + 1;
    let log_c = if p == 1 { 0.0 } else { p as f64 * (partition_count as f64).ln() };
    let block_time = times.iter().sum::<f64>() + (p - 1) as f64 * max_transition;

    let mut rng = substream(seed, 0);
    let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<usize>> {
        (0..m)
            .map(|_| sets.iter().map(|s| rng.random_range(0..s.members.len())).collect())
            .collect()
    };
    let tuples: Vec<Vec<Vec<usize>>> = (0..FAMILY_MEMBERS).map(|_| pick(&mut rng)).collect();
    // Each tuple is paired with a copy differing in one word, when possible.
    let variants: Vec<Option<Vec<Vec<usize>>>> = tuples
        .iter()
        .map(|tuple| {
            let choices: Vec<(usize, usize)> = (0..m)
                .flat_map(|r| (0..p).map(move |i| (r, i)))
                .filter(|&(_, i)| sets[i].members.len() > 1)
                .collect();
            choices.choose(&mut rng).map(|&(r, i)| {
                let mut other = tuple.clone();
                let n = sets[i].members.len();
                other[r][i] = (tuple[r][i] + rng.random_range(1..n)) % n;
                other
            })
        })
        .collect();

    let results: Vec<Result<(Vec<BlockCheck>, Option<bool>)>> = tuples
        .par_iter()
        .zip(&variants)
        .enumerate()
        .map(|(j, (tuple, variant))| {
            let (g, segs) = glue_tuple(susp, &sets, tuple, eps)?;
            let mut checks = Vec::with_capacity(m);
            for k in 0..m {
                let start = susp.flow(&g.point, g.block_starts[k * p]);
                let e = empirical_measure(roof, &start, block_time, &cfg)?;
                let d = weak_star_distance(&e, &stats, &cfg)?;
                checks.push(BlockCheck {
                    member: j,
                    block: k,
                    distance: d,
                    passed: d <= 5.0 * eta,
                });
            }
            let separated = match variant {
                Some(v) => {
                    let (g2, _) = glue_tuple(susp, &sets, v, eps)?;
                    let last = segs.len() - 1;
                    let span = g.block_starts[last] + segs[last].duration;
                    Some(separated_along(susp, &g.point, &g2.point, span, eps / 2.0))
                }
                None => None,
            };
            Ok((checks, separated))
        })
        .collect();
    let mut block_checks = Vec::new();
    let mut separation_pairs = 0;
    let mut separation_violations = 0;
    for r in results {
        let (checks, sep) = r?;
        block_checks.extend(checks);
        if let Some(ok) = sep {
            separation_pairs += 1;
            if !ok {
                separation_violations += 1;
            }
        }
    }

    let sum_log: f64 = sets.iter().map(|s| s.log_size).sum();
    let sum_h: f64 = sets.iter().map(|s| s.h).sum();
    let log_em = m as f64 * (sum_log - log_c);
    let log_em_rate = log_em / (t * m as f64);
    let bound = h_mu - eta - (sum_h + log_c) / t;
    let certificate_holds =
        sets.iter().all(|s| s.certified) && separation_violations == 0 && log_em_rate > bound;
    Ok(GluedFamily {
        t,
        m,
        eta,
        eps,
        component_times: times,
        sets,
        gap_bound,
        partition_count,
        log_c,
        max_transition,
        block_time,
        diameter,
        h_mu,
        log_em,
        log_em_rate,
        bound,
        certificate_holds,
        block_checks,
        separation_pairs,
        separation_violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowCheck {
    pub window: f64,
    pub samples: usize,
    pub max_distance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximationReport {
    pub eta: f64,
    #[serde(rename = "D")]
    pub distance: f64,
    pub h_mu: f64,
    pub h_nu: f64,
    /// Phases per cycle of the block chain.
    pub cycle_length: usize,
    /// Consecutive phases spent in each component.
    pub block_lengths: Vec<usize>,
    pub states: usize,
}

/// An ergodic measure close to the target, realized as a cyclic block chain
/// on states `(phase, symbol)`.
#[derive(Debug, Clone)]
pub struct Approximation {
    pub nu: MarkovMeasure,
    pub report: ApproximationReport,
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn to_rows(p: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
    p.iter()
        .map(|row| row.iter().enumerate().filter(|e| *e.1 > 0.0).map(|(j, &v)| (j, v)).collect())
        .collect()
}

/// Cyclic chain spending `lengths[i]` consecutive steps with kernel `i`.
fn block_chain(kernels: &[Vec<Vec<f64>>], lengths: &[usize]) -> Result<MarkovMeasure> {
    let n = kernels[0].len();
    let phases: Vec<usize> = lengths
        .iter()
        .enumerate()
        .flat_map(|(i, &l)| std::iter::repeat_n(i, l))
        .collect();
    let len = phases.len();
    let step = |k: usize| &kernels[phases[(k + 1) % len]];
    let mut product: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for k in 0..len {
        product = mat_mul(&product, step(k));
    }
    let mut dist = vec![stationary_distribution(&to_rows(&product))?];
    for k in 0..len - 1 {
        let d = &dist[k];
        let p = step(k);
        let next: Vec<f64> = (0..n).map(|b| (0..n).map(|a| d[a] * p[a][b]).sum()).collect();
        dist.push(next);
    }

    let mut index = vec![vec![usize::MAX; n]; len];
    let mut labels = Vec::new();
    let mut pi = Vec::new();
    for k in 0..len {
        for a in 0..n {
            if dist[k][a] > 0.0 {
                index[k][a] = labels.len();
                labels.push(a);
                pi.push(dist[k][a] / len as f64);
            }
        }
    }
    let mut rows = vec![Vec::new(); labels.len()];
    for k in 0..len {
        let p = step(k);
        let k1 = (k + 1) % len;
        for a in 0..n {
            let s = index[k][a];
            if s == usize::MAX {
                continue;
            }
            for b in 0..n {
                if p[a][b] > 0.0 {
                    if index[k1][b] == usize::MAX {
                        return Err(Error::InvalidModel("block chain lost mass at a phase boundary".into()));
                    }
                    rows[s].push((index[k1][b], p[a][b]));
                }
            }
        }
    }
    let total: f64 = pi.iter().sum();
    let pi = pi.into_iter().map(|x| x / total).collect();
    MarkovMeasure::with_stationary(n, labels, rows, pi)
}

/// Builds an ergodic `nu` with `D(mu, nu) < eta` and `|h_nu - h_mu| < eta`.
///
/// Blocks of each component kernel are concatenated cyclically with lengths
/// proportional to `a_i / mean roof_i`, so each component receives time
/// fraction `a_i`; the cycle is doubled until both tolerances are met.
pub fn ergodic_approximation(system: &FlowSystem, target: &ApproxTarget) -> Result<Approximation> {
    let kernels = target.check_support(system)?;
    let roof = system.roof();
    let cfg = WeakStarConfig::for_roof(roof);
    let eta = target.eta;
    let h_mu = target.entropy(roof)?;
    if target.p() == 1 {
        let nu = target.components[0].0.clone();
        return Ok(Approximation {
            report: ApproximationReport {
                eta,
                distance: 0.0,
                h_mu,
                h_nu: h_mu,
                cycle_length: 1,
                block_lengths: vec![1],
                states: nu.n_states(),
            },
            nu,
        });
    }
    let stats = target.statistics(roof, &cfg)?;
    let flows = target.flow_measures(roof)?;
    let rates: Vec<f64> = target
        .components
        .iter()
        .zip(&flows)
        .map(|((_, a), f)| a / f.mean_roof)
        .collect();
    let rate_sum: f64 = rates.iter().sum();

    let mut best = f64::INFINITY;
    let mut cycle = MIN_CYCLE;
    while cycle <= MAX_CYCLE {
        let lengths: Vec<usize> = rates
            .iter()
            .map(|r| ((cycle as f64 * r / rate_sum).round() as usize).max(1))
            .collect();
        let nu = block_chain(&kernels, &lengths)?;
        let flow_nu = SuspendedMeasure::new(nu.clone(), roof.clone())?;
        let h_nu = flow_nu.entropy();
        let d = weak_star_distance(&EmpiricalMeasure::from_suspended(&flow_nu, &cfg), &stats, &cfg)?;
        best = best.min(d.max((h_nu - h_mu).abs()));
        if d < eta && (h_nu - h_mu).abs() < eta {
            return Ok(Approximation {
                report: ApproximationReport {
                    eta,
                    distance: d,
                    h_mu,
                    h_nu,
                    cycle_length: lengths.iter().sum(),
                    block_lengths: lengths,
                    states: nu.n_states(),
                },
                nu,
            });
        }
        cycle *= 2;
    }
    Err(Error::Infeasible { eta, min_eta: best })
}

/// Samples `nu`-typical windows of a whole number of cycles (at least 2000
/// time units) and checks each empirical measure is within `6 eta` of `mu`.
pub fn window_check(system: &FlowSystem, target: &ApproxTarget, approx: &Approximation, seed: u64) -> Result<WindowCheck> {
    let roof = system.roof();
    let cfg = WeakStarConfig::for_roof(roof);
    let stats = target.statistics(roof, &cfg)?;
    let flow_nu = SuspendedMeasure::new(approx.nu.clone(), roof.clone())?;
    let cycle_time = approx.report.cycle_length as f64 * flow_nu.mean_roof;
    let window = cycle_time * (2000.0 / cycle_time).ceil().max(1.0);
    let forward = (window / roof.min()).ceil() as usize + cfg.depth + 2;
    let sampler = flow_nu.sampler();
    let sft = system.sft();
    let distances: Vec<Result<f64>> = (0..WINDOW_SAMPLES)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let x = sampler.sample_point(&mut rng, sft, 0, forward);
            let e = empirical_measure(roof, &x, window, &cfg)?;
            weak_star_distance(&e, &stats, &cfg)
        })
        .collect();
    let mut max_distance: f64 = 0.0;
    for d in distances {
        max_distance = max_distance.max(d?);
    }
    Ok(WindowCheck {
        window,
        samples: WINDOW_SAMPLES,
        max_distance,
        passed: max_distance <= 6.0 * target.eta,
    })
}

/// Gluing of the first `depth` segments of a stream. Coordinates below
/// `emitted_end` do not change when more segments are materialized.
#[derive(Debug, Clone)]
pub struct CountableGluing {
    pub gluing: GluingResult,
    pub segments: Vec<OrbitSegment>,
    pub emitted_end: i64,
}

impl CountableGluing {
    /// Base symbols on coordinates `from .. emitted_end`.
    pub fn emitted(&self, from: i64) -> Vec<Symbol> {
        self.gluing.point.base.window(from, self.emitted_end)
    }
}

pub fn glue_countable<I>(susp: &Suspension, segs: I, delta: f64, depth: usize) -> Result<CountableGluing>
where
    I: IntoIterator<Item = OrbitSegment>,
{
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let segments: Vec<OrbitSegment> = segs.into_iter().take(depth).collect();
    if segments.len() < depth {
        return Err(Error::InvalidArgument(format!(
            "stream ended after {} of {depth} segments",
            segments.len()
        )));
    }
    let gluing = susp.glue_segments(&segments, delta)?;
    let last = &segments[depth - 1];
    let crossings = susp.advance(&last.start, last.duration).1;
    // Later segments only replace what lies beyond the padded window of the
    // last one.
    let emitted_end = gluing.offsets[depth - 1] + crossings + 2 + glue_depth(delta) as i64;
    Ok(CountableGluing {
        gluing,
        segments,
        emitted_end,
    })
}
