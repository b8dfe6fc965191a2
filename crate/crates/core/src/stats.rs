//! Truncated weak* statistics of flow-invariant measures.
//!
//! A measure is summarized by the time fractions of the cylinders
//! `[w_0 .. w_{k-1}]` for `k <= depth` (the symbols of the current fiber and
//! the next `k - 1`) and a histogram of the height inside the fiber.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::markov::SuspendedMeasure;
use crate::sft::Symbol;
use crate::suspension::{Roof, SuspPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakStarConfig {
    /// Largest cylinder length.
    pub depth: usize,
    /// Width of the height-histogram bins.
    pub bin_width: f64,
    /// Weight of depth `k` is `decay^k`.
    pub decay: f64,
    pub height_weight: f64,
}

impl WeakStarConfig {
    pub const DEFAULT_DEPTH: usize = 6;

    /// Depth 6, bins of one eighth of the shortest roof, weights `2^-k`.
    pub fn for_roof(roof: &Roof) -> Self {
        Self::with_depth(roof, Self::DEFAULT_DEPTH)
    }

    pub fn with_depth(roof: &Roof, depth: usize) -> Self {
        Self {
            depth,
            bin_width: roof.min() / 8.0,
            decay: 0.5,
            height_weight: 0.5,
        }
    }

    /// Largest possible distance between two probability measures.
    pub fn diameter(&self) -> f64 {
        (1..=self.depth).map(|k| 2.0 * self.decay.powi(k as i32)).sum::<f64>() + 2.0 * self.height_weight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub depth: usize,
    pub bin_width: f64,
    /// `cylinders[k - 1]` holds the words of length `k`.
    pub cylinders: Vec<BTreeMap<Vec<Symbol>, f64>>,
    pub heights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn frequency(&self, word: &[Symbol]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        self.cylinders
            .get(word.len() - 1)
            .and_then(|m| m.get(word))
            .copied()
            .unwrap_or(0.0)
    }

    /// Total mass of each level (1 for a probability measure).
    pub fn masses(&self) -> Vec<f64> {
        self.cylinders.iter().map(|m| m.values().sum()).collect()
    }

    /// Largest discrepancy between a level and the marginal of the next.
    pub fn marginal_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 1..self.depth {
            let mut marg: HashMap<&[Symbol], f64> = HashMap::new();
            for (w, p) in &self.cylinders[k] {
                *marg.entry(&w[..k]).or_default() += p;
            }
            for (w, p) in &self.cylinders[k - 1] {
                worst = worst.max((marg.get(w.as_slice()).copied().unwrap_or(0.0) - p).abs());
            }
        }
        worst
    }

    /// Convex combination `sum a_i m_i`.
    pub fn mixture(parts: &[(f64, &EmpiricalMeasure)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut acc = Accumulator::new(first.depth, first.bin_width);
        for (a, m) in parts {
            if m.depth != first.depth || m.bin_width != first.bin_width {
                return Err(Error::DepthMismatch {
                    have: m.depth,
                    need: first.depth,
                });
            }
            acc.add_measure(*a, m);
        }
        Ok(acc.finish(1.0))
    }

    /// Statistics of the flow-invariant measure `mu`, computed exactly.
    pub fn from_suspended(mu: &SuspendedMeasure, cfg: &WeakStarConfig) -> Self {
        let mut acc = Accumulator::new(cfg.depth, cfg.bin_width);
        let deepest = mu.base.word_probabilities(cfg.depth);
        for (w, p) in &deepest {
            let r = mu.roof.get(w[0]);
            acc.add_fiber(w, 0.0, r, p / mu.mean_roof);
        }
        acc.finish(1.0)
    }
}

/// Unnormalized statistics under construction.
#[derive(Debug, Clone)]
pub struct Accumulator {
    depth: usize,
    bin_width: f64,
    cylinders: Vec<HashMap<Vec<Symbol>, f64>>,
    heights: Vec<f64>,
}

impl Accumulator {
    pub fn new(depth: usize, bin_width: f64) -> Self {
        Self {
            depth,
            bin_width,
            cylinders: vec![HashMap::new(); depth],
            heights: Vec::new(),
        }
    }

    /// Time spent at heights `[h0, h1)` of the fiber whose forward symbols
    /// start with `word` (at least `depth` long), scaled by `weight`.
    pub fn add_fiber(&mut self, word: &[Symbol], h0: f64, h1: f64, weight: f64) {
        let dt = (h1 - h0) * weight;
        if dt <= 0.0 {
            return;
        }
        for k in 1..=self.depth {
            *self.cylinders[k - 1].entry(word[..k].to_vec()).or_default() += dt;
        }
        let first = (h0 / self.bin_width).floor() as usize;
        let last = ((h1 / self.bin_width).ceil() as usize).max(first + 1);
        if self.heights.len() < last {
            self.heights.resize(last, 0.0);
        }
        for b in first..last {
            let lo = (b as f64 * self.bin_width).max(h0);
            let hi = ((b + 1) as f64 * self.bin_width).min(h1);
            if hi > lo {
                self.heights[b] += (hi - lo) * weight;
            }
        }
    }

    pub fn add_measure(&mut self, weight: f64, m: &EmpiricalMeasure) {
        for (k, level) in m.cylinders.iter().enumerate() {
            for (w, p) in level {
                *self.cylinders[k].entry(w.clone()).or_default() += weight * p;
            }
        }
        if self.heights.len() < m.heights.len() {
            self.heights.resize(m.heights.len(), 0.0);
        }
        for (b, p) in m.heights.iter().enumerate() {
            self.heights[b] += weight * p;
        }
    }

    /// Merge another accumulator (used for ordered parallel reductions).
    pub fn merge(&mut self, other: Accumulator) {
        for (k, level) in other.cylinders.into_iter().enumerate() {
            for (w, p) in level {
                *self.cylinders[k].entry(w).or_default() += p;
            }
        }
        if self.heights.len() < other.heights.len() {
            self.heights.resize(other.heights.len(), 0.0);
        }
        for (b, p) in other.heights.into_iter().enumerate() {
            self.heights[b] += p;
        }
    }

    pub fn finish(self, total: f64) -> EmpiricalMeasure {
        EmpiricalMeasure {
            depth: self.depth,
            bin_width: self.bin_width,
            cylinders: self
                .cylinders
                .into_iter()
                .map(|m| m.into_iter().map(|(w, p)| (w, p / total)).collect())
                .collect(),
            heights: self.heights.into_iter().map(|p| p / total).collect(),
        }
    }

    /// Adds the orbit piece `f_s x`, `s in [0, t)`, with total weight
    /// `weight * t`.
    pub fn add_orbit(&mut self, roof: &Roof, x: &SuspPoint, t: f64, weight: f64) {
        let mut remaining = t;
        let mut h = x.height;
        let mut n = 0i64;
        let depth = self.depth as i64;
        while remaining > 0.0 {
            let r = roof.get(x.base.at(n));
            let stay = (r - h).min(remaining);
            let word = x.base.window(n, n + depth);
            self.add_fiber(&word, h, h + stay, weight);
            remaining -= stay;
            h = 0.0;
            n += 1;
        }
    }
}

/// `E_t(x)`: the time average of the point masses along `f_s x`, `s in [0, t)`.
pub fn empirical_measure(roof: &Roof, x: &SuspPoint, t: f64, cfg: &WeakStarConfig) -> Result<EmpiricalMeasure> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("empirical measure needs t > 0, got {t}")));
    }
    let mut acc = Accumulator::new(cfg.depth, cfg.bin_width);
    acc.add_orbit(roof, x, t, 1.0);
    Ok(acc.finish(t))
}

fn l1<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut s = 0.0;
    for (k, p) in a {
        s += (p - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, q) in b {
        if !a.contains_key(k) {
            s += q.abs();
        }
    }
    s
}

/// `D(mu, nu) = sum_k decay^k sum_|w|=k |mu[w] - nu[w]| + height term`.
pub fn weak_star_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &WeakStarConfig) -> Result<f64> {
    for m in [mu, nu] {
        if m.depth < cfg.depth {
            return Err(Error::DepthMismatch {
                have: m.depth,
                need: cfg.depth,
            });
        }
        if (m.bin_width - cfg.bin_width).abs() > 1e-12 * cfg.bin_width {
            return Err(Error::InvalidArgument("height bins differ from the configuration".into()));
        }
    }
    let mut d = 0.0;
    for k in 1..=cfg.depth {
        d += cfg.decay.powi(k as i32) * l1(&mu.cylinders[k - 1], &nu.cylinders[k - 1]);
    }
    let n = mu.heights.len().max(nu.heights.len());
    let h: f64 = (0..n)
        .map(|b| (mu.heights.get(b).copied().unwrap_or(0.0) - nu.heights.get(b).copied().unwrap_or(0.0)).abs())
        .sum();
    Ok(d + cfg.height_weight * h)
}
