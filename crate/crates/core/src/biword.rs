//! Eventually periodic bi-infinite words.
//!
//! A [`BiWord`] stands for `... L L core R R ...` with coordinate 0 at index
//! `origin` of `core` (indices past either end fall into the tails). Values
//! are kept in canonical form, so derived equality and hashing agree with
//! equality of the underlying sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sft::{least_rotation, primitive_root_len, Sft, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBiWord", into = "RawBiWord")]
pub struct BiWord {
    left: Vec<Symbol>,
    core: Vec<Symbol>,
    right: Vec<Symbol>,
    origin: i64,
}

#[derive(Serialize, Deserialize)]
struct RawBiWord {
    left_tail: Vec<Symbol>,
    core: Vec<Symbol>,
    right_tail: Vec<Symbol>,
    origin: i64,
}

impl TryFrom<RawBiWord> for BiWord {
    type Error = Error;
    fn try_from(r: RawBiWord) -> Result<Self> {
        BiWord::new(r.left_tail, r.core, r.right_tail, r.origin)
    }
}

impl From<BiWord> for RawBiWord {
    fn from(b: BiWord) -> Self {
        RawBiWord {
            left_tail: b.left,
            core: b.core,
            right_tail: b.right,
            origin: b.origin,
        }
    }
}

impl BiWord {
    pub fn new(left: Vec<Symbol>, core: Vec<Symbol>, right: Vec<Symbol>, origin: i64) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidArgument("tails must be nonempty".into()));
        }
        let mut b = Self {
            left,
            core,
            right,
            origin,
        };
        b.canonicalize();
        Ok(b)
    }

    /// The periodic sequence `... w w w ...` with `w[0]` at coordinate 0.
    pub fn periodic(word: &[Symbol]) -> Result<Self> {
        Self::new(word.to_vec(), Vec::new(), word.to_vec(), 0)
    }

    pub fn left_tail(&self) -> &[Symbol] {
        &self.left
    }

    pub fn core(&self) -> &[Symbol] {
        &self.core
    }

    pub fn right_tail(&self) -> &[Symbol] {
        &self.right
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn is_periodic(&self) -> bool {
        self.core.is_empty() && self.left == self.right
    }

    /// Least period when the sequence is periodic.
    pub fn period(&self) -> Option<usize> {
        self.is_periodic().then_some(self.right.len())
    }

    #[inline]
    fn at_index(&self, j: i64) -> Symbol {
        let c = self.core.len() as i64;
        if j < 0 {
            self.left[j.rem_euclid(self.left.len() as i64) as usize]
        } else if j < c {
            self.core[j as usize]
        } else {
            self.right[(j - c).rem_euclid(self.right.len() as i64) as usize]
        }
    }

    /// Symbol at coordinate `k`.
    #[inline]
    pub fn at(&self, k: i64) -> Symbol {
        self.at_index(k + self.origin)
    }

    /// Symbols at coordinates `a..b`.
    pub fn window(&self, a: i64, b: i64) -> Vec<Symbol> {
        (a..b).map(|k| self.at(k)).collect()
    }

    /// `sigma^n` of this word.
    pub fn shift(&self, n: i64) -> Self {
        let mut b = self.clone();
        b.shift_in_place(n);
        b
    }

    pub fn shift_in_place(&mut self, n: i64) {
        self.origin += n;
        if self.is_periodic() {
            self.origin = self.origin.rem_euclid(self.right.len() as i64);
        }
    }

    /// Least `|n| <= horizon` with differing symbols, if any.
    pub fn first_difference(&self, other: &BiWord, horizon: usize) -> Option<usize> {
        let h = horizon as i64;
        (0..=h)
            .find(|&n| self.at(n) != other.at(n) || self.at(-n) != other.at(-n))
            .map(|n| n as usize)
    }

    /// First difference between `sigma^i self` and `sigma^j other`.
    pub fn first_difference_shifted(
        &self,
        i: i64,
        other: &BiWord,
        j: i64,
        horizon: usize,
    ) -> Option<usize> {
        let h = horizon as i64;
        (0..=h)
            .find(|&n| self.at(n + i) != other.at(n + j) || self.at(i - n) != other.at(j - n))
            .map(|n| n as usize)
    }

    /// Sequence distance between `sigma^i self` and `sigma^j other`.
    pub fn distance_shifted(&self, i: i64, other: &BiWord, j: i64, horizon: usize) -> f64 {
        match self.first_difference_shifted(i, other, j, horizon) {
            Some(n) => 0.5f64.powi(n as i32),
            None => 0.0,
        }
    }

    /// Sequence metric `2^-i`, `i` the least `|n|` with `x_n != y_n`,
    /// searched up to `horizon` (0 beyond it).
    pub fn distance(&self, other: &BiWord, horizon: usize) -> f64 {
        match self.first_difference(other, horizon) {
            Some(i) => 0.5f64.powi(i as i32),
            None => 0.0,
        }
    }

    /// Coordinate of the first core symbol.
    pub fn core_start(&self) -> i64 {
        -self.origin
    }

    /// Coordinate one past the last core symbol.
    pub fn core_end(&self) -> i64 {
        self.core.len() as i64 - self.origin
    }

    pub fn check_admissible(&self, sft: &Sft) -> Result<()> {
        let n = sft.n_symbols();
        let all = self.left.iter().chain(&self.core).chain(&self.right);
        if all.clone().any(|&s| s >= n) {
            return Err(Error::SystemMismatch(format!(
                "symbol out of range for a {n}-symbol shift"
            )));
        }
        let ok = sft.is_cyclically_admissible(&self.left)
            && sft.is_cyclically_admissible(&self.right)
            && {
                let mut seam = vec![*self.left.last().unwrap()];
                seam.extend_from_slice(&self.core);
                seam.push(self.right[0]);
                sft.is_admissible(&seam)
            };
        if ok {
            Ok(())
        } else {
            Err(Error::NotAdmissible(format!(
                "({})^inf {} ({})^inf",
                sft.format_word(&self.left),
                sft.format_word(&self.core),
                sft.format_word(&self.right)
            )))
        }
    }

    fn canonicalize(&mut self) {
        let pl = primitive_root_len(&self.left);
        self.left.truncate(pl);
        let pr = primitive_root_len(&self.right);
        self.right.truncate(pr);

        // Absorb core symbols that continue the left tail.
        let mut eaten = 0;
        while eaten < self.core.len() && self.core[eaten] == self.left[0] {
            self.left.rotate_left(1);
            eaten += 1;
        }
        self.core.drain(..eaten);
        self.origin -= eaten as i64;

        // Absorb core symbols that continue the right tail backwards.
        while let Some(&last) = self.core.last() {
            if last != *self.right.last().unwrap() {
                break;
            }
            self.right.rotate_right(1);
            self.core.pop();
        }

        if !self.core.is_empty() {
            return;
        }
        if self.left == self.right {
            let rot = least_rotation(&self.right);
            let k = (0..self.right.len())
                .find(|&k| {
                    self.right[k..]
                        .iter()
                        .chain(&self.right[..k])
                        .eq(rot.iter())
                })
                .unwrap();
            self.left = rot.clone();
            self.right = rot;
            self.origin = (self.origin - k as i64).rem_euclid(self.right.len() as i64);
            return;
        }
        // Push the seam as far left as the right tail reaches. Two distinct
        // primitive tails can agree on fewer than |L| + |R| symbols.
        let limit = self.left.len() + self.right.len();
        let mut moved = 0;
        while moved < limit && self.left.last() == self.right.last() {
            self.left.rotate_right(1);
            self.right.rotate_right(1);
            self.origin += 1;
            moved += 1;
        }
        debug_assert!(moved < limit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(left: &[usize], core: &[usize], right: &[usize], origin: i64, k: i64) -> usize {
        let j = k + origin;
        let c = core.len() as i64;
        if j < 0 {
            left[j.rem_euclid(left.len() as i64) as usize]
        } else if j < c {
            core[j as usize]
        } else {
            right[(j - c) as usize % right.len()]
        }
    }

    #[test]
    fn periodic_canonical() {
        let a = BiWord::periodic(&[1, 0, 1, 0]).unwrap();
        let b = BiWord::periodic(&[0, 1]).unwrap().shift(1);
        assert_eq!(a, b);
        assert_eq!(a.period(), Some(2));
        assert_eq!(a.at(0), 1);
        assert_eq!(a.shift(2), a);
    }

    #[test]
    fn core_absorbed_into_tails() {
        let a = BiWord::new(vec![0], vec![0, 0, 1, 1], vec![1], 2).unwrap();
        assert!(a.core().is_empty());
        assert_eq!(a.at(-1), 0);
        assert_eq!(a.at(0), 1);
        let b = BiWord::new(vec![0], vec![1], vec![1], 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn heteroclinic_seam_is_unique() {
        // ...0101|1010...: seam cannot move.
        let a = BiWord::new(vec![0, 1], vec![], vec![1, 0], 0).unwrap();
        assert_eq!(a.window(-2, 2), vec![0, 1, 1, 0]);
        let b = BiWord::new(vec![1, 0], vec![1], vec![1, 0], 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn admissibility_checks_seams() {
        let g = Sft::golden_mean();
        assert!(BiWord::new(vec![0], vec![1], vec![0], 0).unwrap().check_admissible(&g).is_ok());
        assert!(BiWord::new(vec![0], vec![1, 1], vec![0], 0).unwrap().check_admissible(&g).is_err());
        assert!(BiWord::periodic(&[1]).unwrap().check_admissible(&g).is_err());
    }

    #[test]
    fn sequence_metric() {
        let x = BiWord::periodic(&[0]).unwrap();
        let y = BiWord::new(vec![0], vec![1], vec![0], -6).unwrap();
        assert_eq!(y.at(6), 1);
        assert_eq!(x.distance(&y, 10), 0.5f64.powi(6));
        assert_eq!(x.distance(&y, 5), 0.0);
    }

    proptest! {
        #[test]
        fn canonical_form_preserves_sequence(
            left in prop::collection::vec(0usize..2, 1..4),
            core in prop::collection::vec(0usize..2, 0..6),
            right in prop::collection::vec(0usize..2, 1..4),
            origin in -5i64..8,
        ) {
            let b = BiWord::new(left.clone(), core.clone(), right.clone(), origin).unwrap();
            for k in -30..30 {
                prop_assert_eq!(b.at(k), naive(&left, &core, &right, origin, k));
            }
        }

        #[test]
        fn equal_sequences_compare_equal(
            left in prop::collection::vec(0usize..2, 1..3),
            core in prop::collection::vec(0usize..2, 0..4),
            right in prop::collection::vec(0usize..2, 1..3),
            origin in -3i64..5,
            n in -4i64..4,
        ) {
            let b = BiWord::new(left.clone(), core.clone(), right.clone(), origin).unwrap();
            // Re-express the same sequence with a longer explicit core.
            let lo = b.core_start().min(0) - 3;
            let hi = b.core_end().max(0) + 3;
            let c2 = b.window(lo, hi);
            let r2 = b.window(hi, hi + right.len() as i64 * 2);
            let b2 = BiWord::new(b.window(lo - left.len() as i64, lo), c2, r2, -lo).unwrap();
            prop_assert_eq!(&b, &b2);
            prop_assert_eq!(b.shift(n).shift(-n), b.clone());
        }
    }
}
