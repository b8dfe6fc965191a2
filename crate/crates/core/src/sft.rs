//! Subshifts of finite type on a finite alphabet.
//!
//! An [`Sft`] is a boolean transition matrix: the two-letter word `ij` is
//! allowed iff `transitions[i][j]`. Words are plain symbol slices; admissibility
//! is always checked against the owning shift.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Symbol = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sft {
    names: Vec<String>,
    transitions: Vec<Vec<bool>>,
    successors: Vec<Vec<Symbol>>,
}

impl Sft {
    /// Builds a shift from a square 0/1 matrix. Symbols are named by their index.
    pub fn new(transitions: Vec<Vec<bool>>) -> Result<Self> {
        let names = (0..transitions.len()).map(|i| i.to_string()).collect();
        Self::with_names(names, transitions)
    }

    pub fn with_names(names: Vec<String>, transitions: Vec<Vec<bool>>) -> Result<Self> {
        let n = transitions.len();
        if n == 0 {
            return Err(Error::InvalidModel("empty alphabet".into()));
        }
        if names.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} names for {} symbols",
                names.len(),
                n
            )));
        }
        if transitions.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidModel("transition matrix is not square".into()));
        }
        for i in 0..n {
            if !transitions[i].iter().any(|&b| b) {
                return Err(Error::InvalidModel(format!(
                    "symbol {} has no allowed successor",
                    names[i]
                )));
            }
            if !(0..n).any(|k| transitions[k][i]) {
                return Err(Error::InvalidModel(format!(
                    "symbol {} has no allowed predecessor",
                    names[i]
                )));
            }
        }
        let successors = transitions
            .iter()
            .map(|row| (0..n).filter(|&j| row[j]).collect())
            .collect();
        Ok(Self {
            names,
            transitions,
            successors,
        })
    }

    /// Full shift on `n` symbols.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(vec![vec![true; n]; n])
    }

    /// The golden-mean shift: symbol 1 may not follow itself.
    pub fn golden_mean() -> Self {
        Self::new(vec![vec![true, true], vec![true, false]]).expect("golden mean shift is valid")
    }

    pub fn from_01(rows: &[Vec<u8>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&b| b != 0).collect()).collect())
    }

    pub fn n_symbols(&self) -> usize {
        self.transitions.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, s: Symbol) -> &str {
        &self.names[s]
    }

    pub fn symbol_by_name(&self, name: &str) -> Option<Symbol> {
        self.names.iter().position(|n| n == name)
    }

    pub fn transitions(&self) -> &[Vec<bool>] {
        &self.transitions
    }

    #[inline]
    pub fn allows(&self, a: Symbol, b: Symbol) -> bool {
        self.transitions[a][b]
    }

    #[inline]
    pub fn successors(&self, a: Symbol) -> &[Symbol] {
        &self.successors[a]
    }

    pub fn max_out_degree(&self) -> usize {
        self.successors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        word.iter().all(|&s| s < self.n_symbols()) && word.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    pub fn check_admissible(&self, word: &[Symbol]) -> Result<()> {
        if self.is_admissible(word) {
            Ok(())
        } else {
            Err(Error::NotAdmissible(self.format_word(word)))
        }
    }

    /// True iff the cyclic word (seam included) is admissible.
    pub fn is_cyclically_admissible(&self, word: &[Symbol]) -> bool {
        !word.is_empty()
            && self.is_admissible(word)
            && self.allows(*word.last().unwrap(), word[0])
    }

    pub fn format_word(&self, word: &[Symbol]) -> String {
        let single = self.names.iter().all(|n| n.chars().count() == 1);
        let parts: Vec<&str> = word
            .iter()
            .map(|&s| self.names.get(s).map(String::as_str).unwrap_or("?"))
            .collect();
        if single {
            parts.concat()
        } else {
            parts.join(" ")
        }
    }

    /// Parses a word written with symbol names, either space separated or,
    /// when every name is a single character, concatenated.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Symbol>> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        let tokens: Vec<String> = if text.contains(char::is_whitespace) {
            text.split_whitespace().map(str::to_string).collect()
        } else if self.names.iter().all(|n| n.chars().count() == 1) {
            text.chars().map(|c| c.to_string()).collect()
        } else {
            vec![text.to_string()]
        };
        tokens
            .iter()
            .map(|t| {
                self.symbol_by_name(t)
                    .ok_or_else(|| Error::Parse(format!("unknown symbol {t:?}")))
            })
            .collect()
    }

    /// Number of transitions on a shortest path from every symbol to every
    /// other (`None` if unreachable). `dist[a][a]` is the shortest return.
    pub fn path_lengths(&self) -> Vec<Vec<Option<usize>>> {
        let n = self.n_symbols();
        (0..n)
            .map(|a| {
                let mut dist = vec![None; n];
                let mut queue = VecDeque::new();
                for &b in self.successors(a) {
                    if dist[b].is_none() {
                        dist[b] = Some(1);
                        queue.push_back(b);
                    }
                }
                while let Some(x) = queue.pop_front() {
                    let d = dist[x].unwrap();
                    for &y in self.successors(x) {
                        if dist[y].is_none() {
                            dist[y] = Some(d + 1);
                            queue.push_back(y);
                        }
                    }
                }
                dist
            })
            .collect()
    }

    pub fn is_irreducible(&self) -> bool {
        self.path_lengths()
            .iter()
            .all(|row| row.iter().all(Option::is_some))
    }

    /// Least `tau` such that any two admissible words can be joined by a gap
    /// of at most `tau` symbols.
    pub fn min_gap_bound(&self) -> Result<usize> {
        let dist = self.path_lengths();
        let mut tau = 0;
        for row in &dist {
            for d in row {
                match d {
                    Some(d) => tau = tau.max(d - 1),
                    None => return Err(Error::WeakSpecificationFails),
                }
            }
        }
        Ok(tau)
    }

    /// For each ordered symbol pair, the gap chosen by [`Sft::glue_words`].
    pub fn gap_witnesses(&self) -> Result<Vec<Vec<Vec<Symbol>>>> {
        let n = self.n_symbols();
        (0..n)
            .map(|a| (0..n).map(|b| self.glue_words(&[a], &[b])).collect())
            .collect()
    }

    /// Shortest gap `u` with `v u w` admissible; ties broken lexicographically.
    pub fn glue_words(&self, v: &[Symbol], w: &[Symbol]) -> Result<Vec<Symbol>> {
        if !self.is_irreducible() {
            return Err(Error::WeakSpecificationFails);
        }
        self.check_admissible(v)?;
        self.check_admissible(w)?;
        match (v.last(), w.first()) {
            (Some(&a), Some(&b)) => Ok(self.shortest_gap(a, b)),
            _ => Ok(Vec::new()),
        }
    }

    /// Lexicographically least among the shortest gaps from `a` to `b`.
    pub(crate) fn shortest_gap(&self, a: Symbol, b: Symbol) -> Vec<Symbol> {
        if self.allows(a, b) {
            return Vec::new();
        }
        // Distance (in transitions) from every symbol to `b`.
        let n = self.n_symbols();
        let mut to_b = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for x in 0..n {
            if self.allows(x, b) {
                to_b[x] = 1;
                queue.push_back(x);
            }
        }
        while let Some(y) = queue.pop_front() {
            for x in 0..n {
                if self.allows(x, y) && to_b[x] == usize::MAX {
                    to_b[x] = to_b[y] + 1;
                    queue.push_back(x);
                }
            }
        }
        let mut gap = Vec::new();
        let mut cur = a;
        let mut remaining = self
            .successors(a)
            .iter()
            .map(|&x| to_b[x])
            .min()
            .expect("irreducible");
        while remaining > 0 {
            let next = *self
                .successors(cur)
                .iter()
                .find(|&&x| to_b[x] == remaining)
                .expect("a shortest path continues");
            gap.push(next);
            cur = next;
            remaining -= 1;
        }
        gap
    }

    /// Number of admissible `n`-periodic sequences: `trace(A^n)`, saturating.
    pub fn periodic_point_count(&self, n: usize) -> u128 {
        let m = self.n_symbols();
        let a: Vec<Vec<u128>> = self
            .transitions
            .iter()
            .map(|r| r.iter().map(|&b| b as u128).collect())
            .collect();
        let mut p = a.clone();
        for _ in 1..n {
            let mut q = vec![vec![0u128; m]; m];
            for i in 0..m {
                for k in 0..m {
                    if p[i][k] == 0 {
                        continue;
                    }
                    for j in 0..m {
                        if a[k][j] != 0 {
                            q[i][j] = q[i][j].saturating_add(p[i][k]);
                        }
                    }
                }
            }
            p = q;
        }
        (0..m).fold(0u128, |acc, i| acc.saturating_add(p[i][i]))
    }

    /// All primitive cyclically admissible words of length at most `max_len`,
    /// one representative (the least rotation) per class.
    pub fn enumerate_primitive_cycles(&self, max_len: usize) -> Result<CycleEnumeration> {
        if max_len == 0 {
            return Err(Error::InvalidArgument("max_len must be at least 1".into()));
        }
        let weights = vec![1.0; self.n_symbols()];
        let cycles = self.enumerate_weighted_cycles(&weights, max_len as f64 + 0.5);
        let mut by_len = vec![0u128; max_len + 1];
        for c in &cycles {
            by_len[c.len()] += 1;
        }
        let trace_checks = (1..=max_len)
            .map(|n| {
                let from_cycles: u128 = (1..=n)
                    .filter(|d| n % d == 0)
                    .map(|d| d as u128 * by_len[d])
                    .sum();
                TraceCheck {
                    n,
                    from_cycles,
                    trace: self.periodic_point_count(n),
                }
            })
            .collect();
        Ok(CycleEnumeration {
            cycles,
            trace_checks,
        })
    }

    /// Primitive cycles (least-rotation representatives) with total weight at
    /// most `max_weight`. Enumeration is split by first symbol and merged in
    /// symbol order, so the output is independent of the thread count.
    pub fn enumerate_weighted_cycles(&self, weights: &[f64], max_weight: f64) -> Vec<Vec<Symbol>> {
        let n = self.n_symbols();
        let per_start: Vec<Vec<Vec<Symbol>>> = (0..n)
            .into_par_iter()
            .map(|s| {
                let mut out = Vec::new();
                if weights[s] > max_weight + 1e-12 {
                    return out;
                }
                let mut word = vec![s];
                self.cycle_dfs(weights, max_weight, weights[s], &mut word, &mut out);
                out
            })
            .collect();
        per_start.into_iter().flatten().collect()
    }

    fn cycle_dfs(
        &self,
        weights: &[f64],
        max_weight: f64,
        acc: f64,
        word: &mut Vec<Symbol>,
        out: &mut Vec<Vec<Symbol>>,
    ) {
        let first = word[0];
        let last = *word.last().unwrap();
        if self.allows(last, first) && is_lyndon(word) {
            out.push(word.clone());
        }
        for &next in self.successors(last) {
            if next < first {
                continue;
            }
            let w = acc + weights[next];
            if w > max_weight + 1e-12 {
                continue;
            }
            word.push(next);
            self.cycle_dfs(weights, max_weight, w, word, out);
            word.pop();
        }
    }

    /// The `width`-block presentation: states are admissible words of length
    /// `width`, with `a -> b` allowed when they overlap in `width - 1` symbols.
    pub fn block_presentation(&self, width: usize) -> BlockShift {
        assert!(width >= 1);
        let mut words: Vec<Vec<Symbol>> = (0..self.n_symbols()).map(|s| vec![s]).collect();
        for _ in 1..width {
            let mut next = Vec::new();
            for w in &words {
                for &s in self.successors(*w.last().unwrap()) {
                    let mut x = w.clone();
                    x.push(s);
                    next.push(x);
                }
            }
            words = next;
        }
        let index: HashMap<Vec<Symbol>, usize> =
            words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let successors = words
            .iter()
            .map(|w| {
                let last = *w.last().unwrap();
                self.successors(last)
                    .iter()
                    .map(|&s| {
                        let mut x: Vec<Symbol> = w[1..].to_vec();
                        x.push(s);
                        index[&x]
                    })
                    .collect()
            })
            .collect();
        BlockShift {
            width,
            words,
            index,
            successors,
        }
    }
}

/// Higher-block presentation of an [`Sft`].
#[derive(Debug, Clone)]
pub struct BlockShift {
    pub width: usize,
    pub words: Vec<Vec<Symbol>>,
    pub index: HashMap<Vec<Symbol>, usize>,
    pub successors: Vec<Vec<usize>>,
}

impl BlockShift {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn first_symbol(&self, state: usize) -> Symbol {
        self.words[state][0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceCheck {
    pub n: usize,
    pub from_cycles: u128,
    pub trace: u128,
}

#[derive(Debug, Clone)]
pub struct CycleEnumeration {
    pub cycles: Vec<Vec<Symbol>>,
    /// `sum_{d | n} d * #cycles(d)` against `trace(A^n)` for each `n`.
    pub trace_checks: Vec<TraceCheck>,
}

impl CycleEnumeration {
    pub fn traces_consistent(&self) -> bool {
        self.trace_checks.iter().all(|c| c.from_cycles == c.trace)
    }
}

/// True iff `s` is strictly smaller than each of its proper rotations.
pub fn is_lyndon(s: &[Symbol]) -> bool {
    let n = s.len();
    if n == 0 {
        return false;
    }
    let (mut i, mut j) = (0, 1);
    while j < n {
        match s[i].cmp(&s[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                i = 0;
                j += 1;
            }
            std::cmp::Ordering::Greater => return false,
        }
    }
    i == 0
}

/// Smallest `p` dividing `s.len()` with `s` a power of `s[..p]`.
pub fn primitive_root_len(s: &[Symbol]) -> usize {
    let n = s.len();
    (1..=n)
        .find(|&p| n.is_multiple_of(p) && (p..n).all(|i| s[i] == s[i - p]))
        .unwrap_or(n)
}

/// Rotation of a cyclic word starting at its least rotation.
pub fn least_rotation(s: &[Symbol]) -> Vec<Symbol> {
    let n = s.len();
    (0..n)
        .map(|k| {
            let mut r = s[k..].to_vec();
            r.extend_from_slice(&s[..k]);
            r
        })
        .min()
        .unwrap_or_default()
}
