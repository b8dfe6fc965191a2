//! Markov measures on the base shift and their suspensions.
//!
//! A [`MarkovMeasure`] is a stationary chain on finitely many states, each
//! labelled by a base symbol; the measure on the shift is the law of the label
//! sequence. Plain symbol chains use the identity labelling, equilibrium
//! states live on higher-block states, and the entropy-density construction
//! adds a phase to the state.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::potential::CylinderPotential;
use crate::sft::{Sft, Symbol};
use crate::biword::BiWord;
use crate::suspension::{Roof, SuspPoint};

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    n_symbols: usize,
    labels: Vec<Symbol>,
    rows: Vec<Vec<(usize, f64)>>,
    pi: Vec<f64>,
}

/// Independent generator for sample `stream` of a run seeded with `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw<R: Rng + ?Sized>(rng: &mut R, row: &[(usize, f64)]) -> usize {
    let mut u = rng.random::<f64>();
    for &(j, p) in row {
        if u < p {
            return j;
        }
        u -= p;
    }
    row.last().map(|&(j, _)| j).expect("nonempty row")
}

fn check_rows(rows: &[Vec<(usize, f64)>]) -> Result<()> {
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        let mut sum = 0.0;
        for &(j, p) in row {
            if j >= n || !(p >= 0.0) {
                return Err(Error::InvalidModel(format!("bad kernel entry ({i}, {j}) = {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidModel(format!("kernel row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Stationary vector of an irreducible kernel by a direct linear solve.
pub fn stationary_distribution(rows: &[Vec<(usize, f64)>]) -> Result<Vec<f64>> {
    let n = rows.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for &(j, p) in row {
            a[(j, i)] += p;
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidModel("kernel is not irreducible".into()))?;
    Ok(pi.iter().map(|&x| x.max(0.0)).collect())
}

impl MarkovMeasure {
    /// Chain with an explicitly supplied stationary vector.
    pub fn with_stationary(
        n_symbols: usize,
        labels: Vec<Symbol>,
        rows: Vec<Vec<(usize, f64)>>,
        pi: Vec<f64>,
    ) -> Result<Self> {
        if labels.len() != rows.len() || pi.len() != rows.len() {
            return Err(Error::InvalidModel("state counts disagree".into()));
        }
        if labels.iter().any(|&l| l >= n_symbols) {
            return Err(Error::InvalidModel("state label out of range".into()));
        }
        check_rows(&rows)?;
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-9 || pi.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidModel("stationary vector must be positive with mass 1".into()));
        }
        let mut next = vec![0.0; pi.len()];
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                next[j] += pi[i] * p;
            }
        }
        let err = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err > STATIONARY_TOL {
            return Err(Error::InvalidModel(format!("vector is not stationary (error {err:e})")));
        }
        Ok(Self {
            n_symbols,
            labels,
            rows,
            pi,
        })
    }

    /// Chain whose stationary vector is found by a linear solve.
    pub fn from_chain(n_symbols: usize, labels: Vec<Symbol>, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        check_rows(&rows)?;
        let pi = stationary_distribution(&rows)?;
        if pi.iter().any(|&p| p <= 1e-300) {
            return Err(Error::InvalidModel("kernel is not irreducible".into()));
        }
        let total: f64 = pi.iter().sum();
        let pi = pi.iter().map(|p| p / total).collect();
        Self::with_stationary(n_symbols, labels, rows, pi)
    }

    /// First-order chain on the symbols of `sft` with the given dense kernel.
    pub fn from_symbol_kernel(sft: &Sft, p: &[Vec<f64>]) -> Result<Self> {
        let n = sft.n_symbols();
        if p.len() != n || p.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel("kernel shape does not match the shift".into()));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, r) in p.iter().enumerate() {
            let mut row = Vec::new();
            for (j, &x) in r.iter().enumerate() {
                if x > 0.0 {
                    if !sft.allows(i, j) {
                        return Err(Error::InvalidModel(format!(
                            "kernel charges the forbidden word {}",
                            sft.format_word(&[i, j])
                        )));
                    }
                    row.push((j, x));
                }
            }
            rows.push(row);
        }
        Self::from_chain(n, (0..n).collect(), rows)
    }

    /// Bernoulli measure on the full shift over `p.len()` symbols.
    pub fn bernoulli(p: &[f64]) -> Result<Self> {
        let n = p.len();
        let row: Vec<(usize, f64)> = p.iter().copied().enumerate().filter(|&(_, x)| x > 0.0).collect();
        let rows = vec![row; n];
        Self::with_stationary(n, (0..n).collect(), rows, p.to_vec())
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn labels(&self) -> &[Symbol] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// Whether the states are exactly the symbols.
    pub fn is_symbolic(&self) -> bool {
        self.labels.len() == self.n_symbols && self.labels.iter().enumerate().all(|(i, &l)| i == l)
    }

    /// Dense symbol kernel when the chain is a plain symbol chain.
    pub fn symbol_kernel(&self) -> Option<Vec<Vec<f64>>> {
        self.is_symbolic().then(|| {
            self.rows
                .iter()
                .map(|row| {
                    let mut r = vec![0.0; self.n_symbols];
                    for &(j, p) in row {
                        r[j] += p;
                    }
                    r
                })
                .collect()
        })
    }

    /// Entropy of the chain, `-sum pi_i P_ij log P_ij`.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            for &(_, p) in row {
                if p > 0.0 {
                    h -= self.pi[i] * p * p.ln();
                }
            }
        }
        h
    }

    pub fn symbol_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_symbols];
        for (s, &p) in self.pi.iter().enumerate() {
            m[self.labels[s]] += p;
        }
        m
    }

    fn start_vector(&self, first: Symbol) -> Vec<f64> {
        self.pi
            .iter()
            .enumerate()
            .map(|(s, &p)| if self.labels[s] == first { p } else { 0.0 })
            .collect()
    }

    fn step(&self, v: &[f64], next: Symbol) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (s, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for &(t, p) in &self.rows[s] {
                if self.labels[t] == next {
                    out[t] += x * p;
                }
            }
        }
        out
    }

    /// Measure of the cylinder `[w_0 ... w_{n-1}]` at coordinates `0..n`.
    pub fn word_probability(&self, word: &[Symbol]) -> f64 {
        let Some((&first, rest)) = word.split_first() else {
            return 1.0;
        };
        let mut v = self.start_vector(first);
        for &s in rest {
            v = self.step(&v, s);
        }
        v.iter().sum()
    }

    /// Every word of length `depth` with positive measure, in lexicographic order.
    pub fn word_probabilities(&self, depth: usize) -> Vec<(Vec<Symbol>, f64)> {
        let mut out = Vec::new();
        if depth == 0 {
            return out;
        }
        let mut word = Vec::with_capacity(depth);
        for first in 0..self.n_symbols {
            let v = self.start_vector(first);
            if v.iter().all(|&x| x == 0.0) {
                continue;
            }
            word.push(first);
            self.words_dfs(&v, depth, &mut word, &mut out);
            word.pop();
        }
        out
    }

    fn words_dfs(&self, v: &[f64], depth: usize, word: &mut Vec<Symbol>, out: &mut Vec<(Vec<Symbol>, f64)>) {
        if word.len() == depth {
            let p: f64 = v.iter().sum();
            if p > 0.0 {
                out.push((word.clone(), p));
            }
            return;
        }
        for s in 0..self.n_symbols {
            let next = self.step(v, s);
            if next.iter().all(|&x| x == 0.0) {
                continue;
            }
            word.push(s);
            self.words_dfs(&next, depth, word, out);
            word.pop();
        }
    }

    /// `E[phi(x) r(x_0)]` for a locally constant `phi` (its fiber integral).
    pub fn fiber_mean(&self, phi: &CylinderPotential, roof: &Roof) -> f64 {
        if let Some(c) = phi.is_constant() {
            return c * self.symbol_marginal().iter().enumerate().map(|(s, p)| p * roof.get(s)).sum::<f64>();
        }
        self.word_probabilities(phi.width)
            .iter()
            .map(|(w, p)| p * phi.word_value(w) * roof.get(w[phi.offset]))
            .sum()
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return i;
            }
            u -= w;
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, rng: &mut R, state: usize) -> usize {
        draw(rng, &self.rows[state])
    }

    /// Kernel of the time-reversed chain.
    pub fn reversed_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rev = vec![Vec::new(); self.n_states()];
        for (a, row) in self.rows.iter().enumerate() {
            for &(b, p) in row {
                rev[b].push((a, self.pi[a] * p / self.pi[b]));
            }
        }
        rev
    }

    /// Same state graph with every row multiplied by `exp(scale * noise)`
    /// and renormalized.
    pub fn perturbed<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let w: Vec<f64> = row
                    .iter()
                    .map(|&(_, p)| p * (scale * (2.0 * rng.random::<f64>() - 1.0)).exp())
                    .collect();
                let total: f64 = w.iter().sum();
                row.iter().zip(w).map(|(&(j, _), x)| (j, x / total)).collect()
            })
            .collect();
        Self::from_chain(self.n_symbols, self.labels.clone(), rows)
    }

    /// `n` consecutive states of the stationary chain.
    pub fn sample_states<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        let mut s = self.sample_state(rng, &self.pi);
        out.push(s);
        for _ in 1..n {
            s = self.sample_next(rng, s);
            out.push(s);
        }
        out
    }
}

/// Random first-order chain charging every allowed transition, rows drawn
/// uniformly from the simplex.
pub fn random_markov_measure<R: Rng + ?Sized>(sft: &Sft, rng: &mut R) -> Result<MarkovMeasure> {
    let n = sft.n_symbols();
    let rows = (0..n)
        .map(|a| {
            let w: Vec<f64> = sft
                .successors(a)
                .iter()
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let total: f64 = w.iter().sum();
            sft.successors(a).iter().zip(w).map(|(&b, x)| (b, x / total)).collect()
        })
        .collect();
    MarkovMeasure::from_chain(n, (0..n).collect(), rows)
}

/// Flow-invariant measure `nu x Lebesgue / int r d nu` on the suspension.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspendedMeasure {
    pub base: MarkovMeasure,
    pub roof: Roof,
    pub mean_roof: f64,
}

impl SuspendedMeasure {
    pub fn new(base: MarkovMeasure, roof: Roof) -> Result<Self> {
        if roof.len() != base.n_symbols() {
            return Err(Error::InvalidModel("roof and measure disagree on the alphabet".into()));
        }
        let mean_roof = base
            .symbol_marginal()
            .iter()
            .enumerate()
            .map(|(s, p)| p * roof.get(s))
            .sum();
        Ok(Self {
            base,
            roof,
            mean_roof,
        })
    }

    /// Flow entropy by the Abramov formula.
    pub fn entropy(&self) -> f64 {
        self.base.entropy() / self.mean_roof
    }

    pub fn integral(&self, phi: &CylinderPotential) -> f64 {
        self.base.fiber_mean(phi, &self.roof) / self.mean_roof
    }

    pub fn sampler(&self) -> PointSampler<'_> {
        PointSampler {
            measure: self,
            weights: self.state_time_weights(),
            reversed: self.base.reversed_rows(),
        }
    }

    /// Stationary weights for picking the fiber of a typical point.
    pub fn state_time_weights(&self) -> Vec<f64> {
        let labels = self.base.labels();
        self.base
            .stationary()
            .iter()
            .enumerate()
            .map(|(s, p)| p * self.roof.get(labels[s]))
            .collect()
    }
}

/// Draws points distributed according to a [`SuspendedMeasure`].
#[derive(Debug, Clone)]
pub struct PointSampler<'a> {
    measure: &'a SuspendedMeasure,
    weights: Vec<f64>,
    reversed: Vec<Vec<(usize, f64)>>,
}

impl<'a> PointSampler<'a> {
    /// States at coordinates `-back .. forward`, with the state at coordinate
    /// 0 drawn proportionally to stationary weight times roof.
    pub fn sample_states<R: Rng + ?Sized>(&self, rng: &mut R, back: usize, forward: usize) -> Vec<usize> {
        let base = &self.measure.base;
        let s0 = base.sample_state(rng, &self.weights);
        let mut before = Vec::with_capacity(back);
        let mut s = s0;
        for _ in 0..back {
            s = draw(rng, &self.reversed[s]);
            before.push(s);
        }
        before.reverse();
        let mut out = before;
        out.push(s0);
        let mut s = s0;
        for _ in 1..forward.max(1) {
            s = base.sample_next(rng, s);
            out.push(s);
        }
        out
    }

    /// A typical point: exact symbols on coordinates `-back .. forward`,
    /// closed up periodically outside, height uniform in its fiber.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, sft: &Sft, back: usize, forward: usize) -> SuspPoint {
        let states = self.sample_states(rng, back, forward);
        let labels = self.measure.base.labels();
        let mut word: Vec<Symbol> = states.iter().map(|&s| labels[s]).collect();
        word.extend(sft.shortest_gap(*word.last().unwrap(), word[0]));
        let base = BiWord::new(word.clone(), Vec::new(), word, back as i64).expect("nonempty word");
        let r = self.measure.roof.get(base.at(0));
        SuspPoint {
            base,
            height: rng.random::<f64>() * r,
        }
    }
}
