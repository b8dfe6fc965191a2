//! Suspension flows over subshifts of finite type with a locally constant roof.
//!
//! Time is measured in the roof's units. Horizontal distances between fibers
//! are taken at equal normalized height `s / r(x_0)`; vertical legs cost their
//! length in time units.

use serde::{Deserialize, Serialize};

use crate::biword::BiWord;
use crate::error::{Error, Result};
use crate::sft::{Sft, Symbol};

/// Sequence-metric window used when no horizon is given explicitly.
pub const DEFAULT_HORIZON: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoofFile", into = "RoofFile")]
pub struct Roof(Vec<f64>);

#[derive(Serialize, Deserialize)]
struct RoofFile {
    roof: Vec<f64>,
}

impl TryFrom<RoofFile> for Roof {
    type Error = Error;
    fn try_from(f: RoofFile) -> Result<Self> {
        Roof::new(f.roof)
    }
}

impl From<Roof> for RoofFile {
    fn from(r: Roof) -> Self {
        RoofFile { roof: r.0 }
    }
}

impl Roof {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidModel("empty roof".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::InvalidModel(format!("roof value {v} is not a positive real")));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    #[inline]
    pub fn get(&self, s: Symbol) -> f64 {
        self.0[s]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::MAX, f64::min)
    }

    /// Sum of the roof over a word.
    pub fn word_time(&self, word: &[Symbol]) -> f64 {
        word.iter().map(|&s| self.0[s]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspPoint {
    #[serde(flatten)]
    pub base: BiWord,
    pub height: f64,
}

impl SuspPoint {
    pub fn symbol(&self) -> Symbol {
        self.base.at(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub start: SuspPoint,
    pub duration: f64,
}

#[derive(Debug, Clone)]
pub struct GluingResult {
    pub point: SuspPoint,
    /// Time spent between the end of segment `j` and the start of `j + 1`.
    pub transition_times: Vec<f64>,
    /// Flow time at which the glued orbit starts following segment `j`.
    pub block_starts: Vec<f64>,
    /// Base coordinate of the glued point carrying coordinate 0 of segment `j`.
    pub offsets: Vec<i64>,
    pub gaps: Vec<Vec<Symbol>>,
    /// Declared upper bound for every transition time at this scale.
    pub max_transition: f64,
    /// Symbolic padding used on both sides of each window.
    pub padding: usize,
}

#[derive(Debug, Clone)]
pub struct Closing {
    pub point: SuspPoint,
    /// Least rotation of the primitive periodic word.
    pub word: Vec<Symbol>,
    pub period: f64,
    pub excess: f64,
    /// Segment-independent bound on `excess` at this scale.
    pub bound: f64,
    pub sup_distance: f64,
}

/// Smallest `K >= 0` with `2^-(K+1) < delta`: agreement on `[-K, K]` puts two
/// sequences within `delta`.
pub fn glue_depth(delta: f64) -> usize {
    let mut k = 0;
    while 0.5f64.powi(k as i32 + 1) >= delta && k < 1000 {
        k += 1;
    }
    k
}

/// Sequence horizon large enough to resolve distances at scale `delta`.
pub fn horizon_for(delta: f64) -> usize {
    (glue_depth(delta) + 20).max(DEFAULT_HORIZON)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suspension {
    sft: Sft,
    roof: Roof,
}

impl Suspension {
    pub fn new(sft: Sft, roof: Roof) -> Result<Self> {
        if roof.len() != sft.n_symbols() {
            return Err(Error::InvalidModel(format!(
                "roof has {} values for {} symbols",
                roof.len(),
                sft.n_symbols()
            )));
        }
        Ok(Self { sft, roof })
    }

    /// Roof identically 1.
    pub fn unit(sft: Sft) -> Self {
        let roof = Roof::constant(sft.n_symbols(), 1.0).expect("unit roof");
        Self { sft, roof }
    }

    pub fn sft(&self) -> &Sft {
        &self.sft
    }

    pub fn roof(&self) -> &Roof {
        &self.roof
    }

    pub fn point(&self, base: BiWord, height: f64) -> Result<SuspPoint> {
        let p = SuspPoint { base, height };
        self.validate(&p)?;
        Ok(p)
    }

    pub fn validate(&self, p: &SuspPoint) -> Result<()> {
        p.base.check_admissible(&self.sft)?;
        let r = self.roof.get(p.symbol());
        if !(p.height >= 0.0 && p.height < r) {
            return Err(Error::SystemMismatch(format!(
                "height {} outside [0, {r})",
                p.height
            )));
        }
        Ok(())
    }

    pub fn segment(&self, start: SuspPoint, duration: f64) -> Result<OrbitSegment> {
        self.validate(&start)?;
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::InvalidArgument(format!("segment duration {duration}")));
        }
        Ok(OrbitSegment { start, duration })
    }

    /// Periodic orbit through `word` at height 0 of its first symbol.
    pub fn periodic_point(&self, word: &[Symbol]) -> Result<SuspPoint> {
        if !self.sft.is_cyclically_admissible(word) {
            return Err(Error::NotAdmissible(self.sft.format_word(word)));
        }
        self.point(BiWord::periodic(word)?, 0.0)
    }

    pub fn flow(&self, p: &SuspPoint, t: f64) -> SuspPoint {
        self.advance(p, t).0
    }

    /// Flows by `t` and also returns the net number of roof crossings.
    pub fn advance(&self, p: &SuspPoint, t: f64) -> (SuspPoint, i64) {
        let mut q = p.clone();
        let crossings = self.advance_in_place(&mut q, t);
        (q, crossings)
    }

    /// In-place [`Self::advance`]; avoids copying long words.
    pub fn advance_in_place(&self, p: &mut SuspPoint, t: f64) -> i64 {
        let base = &mut p.base;
        let mut h = p.height + t;
        let mut crossings = 0i64;
        let mut r = self.roof.get(base.at(0));
        while h >= r {
            h -= r;
            base.shift_in_place(1);
            crossings += 1;
            r = self.roof.get(base.at(0));
        }
        while h < 0.0 {
            base.shift_in_place(-1);
            crossings -= 1;
            r = self.roof.get(base.at(0));
            h += r;
            if h >= r {
                // Rounding put us exactly on the roof.
                h = 0.0;
                base.shift_in_place(1);
                crossings += 1;
            }
        }
        p.height = h;
        crossings
    }

    /// Representations of `p` on nearby fibers: `(shift, height, cost)` where
    /// the fiber is `sigma^shift x` and `cost` is the vertical leg to reach it.
    fn anchors(&self, p: &SuspPoint) -> [(i64, f64, f64); 3] {
        let r0 = self.roof.get(p.base.at(0));
        let r_below = self.roof.get(p.base.at(-1));
        [
            (0, p.height, 0.0),
            (-1, r_below, p.height),
            (1, 0.0, r0 - p.height),
        ]
    }

    fn bw_oneway(&self, p: &SuspPoint, q: &SuspPoint, horizon: usize) -> f64 {
        let mut best = f64::INFINITY;
        for &(i, a, ca) in &self.anchors(p) {
            let rx = self.roof.get(p.base.at(i));
            for &(j, b, cb) in &self.anchors(q) {
                let ry = self.roof.get(q.base.at(j));
                let d0 = p.base.distance_shifted(i, &q.base, j, horizon);
                let d1 = p.base.distance_shifted(i + 1, &q.base, j + 1, horizon);
                let base_cost = ca + cb;
                if base_cost >= best {
                    continue;
                }
                for u in [0.0, 1.0, (a / rx).min(1.0), (b / ry).min(1.0)] {
                    let c = base_cost
                        + (a - u * rx).abs()
                        + (1.0 - u) * d0
                        + u * d1
                        + (u * ry - b).abs();
                    best = best.min(c);
                }
            }
        }
        best
    }

    /// Bowen–Walters distance over chains of at most four legs.
    pub fn bw_distance(&self, p: &SuspPoint, q: &SuspPoint, horizon: usize) -> Result<f64> {
        self.validate(p)?;
        self.validate(q)?;
        Ok(self.bw_unchecked(p, q, horizon))
    }

    pub(crate) fn bw_unchecked(&self, p: &SuspPoint, q: &SuspPoint, horizon: usize) -> f64 {
        if p == q {
            return 0.0;
        }
        self.bw_oneway(p, q, horizon).min(self.bw_oneway(q, p, horizon))
    }

    /// Largest distance between `flow(y, s)` and `flow(x, s)` over a grid of
    /// `[0, t]` with step at most `step`.
    pub fn max_distance_along(
        &self,
        y: &SuspPoint,
        x: &SuspPoint,
        t: f64,
        step: f64,
        horizon: usize,
    ) -> f64 {
        let n = (t / step).ceil().max(0.0) as usize;
        let h = if n == 0 { 0.0 } else { t / n as f64 };
        let mut py = y.clone();
        let mut px = x.clone();
        let mut worst = self.bw_unchecked(&py, &px, horizon);
        for _ in 0..n {
            self.advance_in_place(&mut py, h);
            self.advance_in_place(&mut px, h);
            worst = worst.max(self.bw_unchecked(&py, &px, horizon));
        }
        worst
    }

    /// Whether `y` stays within `delta` of the segment on a grid of step
    /// `delta / 4`.
    pub fn shadows(&self, y: &SuspPoint, seg: &OrbitSegment, delta: f64) -> bool {
        let n = (seg.duration / (delta / 4.0)).ceil().max(0.0) as usize;
        let h = if n == 0 { 0.0 } else { seg.duration / n as f64 };
        let horizon = horizon_for(delta);
        let mut py = y.clone();
        let mut px = seg.start.clone();
        if self.bw_unchecked(&py, &px, horizon) >= delta {
            return false;
        }
        for _ in 0..n {
            self.advance_in_place(&mut py, h);
            self.advance_in_place(&mut px, h);
            if self.bw_unchecked(&py, &px, horizon) >= delta {
                return false;
            }
        }
        true
    }

    /// Symbolic transition bound at scale `delta`: the gap bound plus the
    /// padding on both sides of each window.
    pub fn base_transition(&self, delta: f64) -> Result<usize> {
        Ok(self.sft.min_gap_bound()? + 2 * glue_depth(delta))
    }

    /// Upper bound on every transition time produced by [`Self::glue_segments`].
    pub fn max_transition_time(&self, delta: f64) -> Result<f64> {
        Ok((self.base_transition(delta)? + 3) as f64 * self.roof.max())
    }

    /// Bound on the period excess produced by [`Self::close_segment`].
    pub fn closing_bound(&self, delta: f64) -> Result<f64> {
        self.max_transition_time(delta)
    }

    pub fn glue_segments(&self, segs: &[OrbitSegment], delta: f64) -> Result<GluingResult> {
        if segs.is_empty() {
            return Err(Error::InvalidArgument("no segments to glue".into()));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let max_transition = self.max_transition_time(delta)?;
        for s in segs {
            self.validate(&s.start)?;
            if !(s.duration.is_finite() && s.duration >= 0.0) {
                return Err(Error::InvalidArgument(format!("segment duration {}", s.duration)));
            }
        }
        let k = glue_depth(delta);
        let ki = k as i64;
        let ends: Vec<(SuspPoint, i64)> = segs
            .iter()
            .map(|s| self.advance(&s.start, s.duration))
            .collect();
        let last = segs.len() - 1;

        let first_base = &segs[0].start.base;
        let lo_first = first_base.core_start().min(-ki);
        let left = first_base.window(lo_first - first_base.left_tail().len() as i64, lo_first);
        let last_base = &segs[last].start.base;
        let hi_last = (last_base.core_end() - 1).max(ends[last].1 + 1 + ki) + 1;
        let right = last_base.window(hi_last, hi_last + last_base.right_tail().len() as i64);

        let mut core: Vec<Symbol> = Vec::new();
        let mut pos = Vec::with_capacity(segs.len());
        let mut gaps = Vec::new();
        for (j, s) in segs.iter().enumerate() {
            let lo = if j == 0 { lo_first } else { -ki };
            let hi = if j == last { hi_last } else { ends[j].1 + 2 + ki };
            let piece = s.start.base.window(lo, hi);
            if j > 0 {
                let gap = self
                    .sft
                    .shortest_gap(*core.last().unwrap(), piece[0]);
                core.extend_from_slice(&gap);
                gaps.push(gap);
            }
            pos.push(core.len() as i64 - lo);
            core.extend_from_slice(&piece);
        }
        let base = BiWord::new(left, core.clone(), right, pos[0])?;
        let point = SuspPoint {
            base,
            height: segs[0].start.height,
        };
        let offsets: Vec<i64> = pos.iter().map(|p| p - pos[0]).collect();

        let mut transition_times = Vec::with_capacity(last);
        let mut block_starts = vec![0.0];
        for j in 0..last {
            let from = (pos[j] + ends[j].1) as usize;
            let to = pos[j + 1] as usize;
            let tau = self.roof.word_time(&core[from..to]) - ends[j].0.height
                + segs[j + 1].start.height;
            transition_times.push(tau);
            let sj = block_starts[j];
            block_starts.push(sj + segs[j].duration + tau);
        }
        Ok(GluingResult {
            point,
            transition_times,
            block_starts,
            offsets,
            gaps,
            max_transition,
            padding: k,
        })
    }

    /// Start of segment `j` on the glued orbit, located exactly by its offset.
    pub fn glued_segment_start(&self, g: &GluingResult, segs: &[OrbitSegment], j: usize) -> SuspPoint {
        SuspPoint {
            base: g.point.base.shift(g.offsets[j]),
            height: segs[j].start.height,
        }
    }

    /// Checks that a gluing shadows each input segment at scale `delta`.
    pub fn verify_gluing(&self, g: &GluingResult, segs: &[OrbitSegment], delta: f64) -> bool {
        (0..segs.len()).all(|j| self.shadows(&self.glued_segment_start(g, segs, j), &segs[j], delta))
    }

    /// A periodic orbit of period at most `t + R(delta)` that shadows `seg`.
    pub fn close_segment(&self, seg: &OrbitSegment, delta: f64) -> Result<Closing> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let bound = self.closing_bound(delta)?;
        self.validate(&seg.start)?;
        let x = &seg.start;

        let already = x.base.period().and_then(|p| {
            let word = x.base.right_tail().to_vec();
            let period = self.roof.word_time(&word);
            debug_assert_eq!(word.len(), p);
            (period <= seg.duration + bound).then_some((x.base.clone(), word, period))
        });
        let (base, word, period) = match already {
            Some(v) => v,
            None => {
                let k = glue_depth(delta) as i64;
                let (_, n) = self.advance(x, seg.duration);
                let mut w = x.base.window(-k, n + 2 + k);
                let gap = self.sft.shortest_gap(*w.last().unwrap(), w[0]);
                w.extend_from_slice(&gap);
                let base = BiWord::new(w.clone(), Vec::new(), w, k)?;
                let word = base.right_tail().to_vec();
                let period = self.roof.word_time(&word);
                (base, word, period)
            }
        };
        let point = SuspPoint {
            base,
            height: x.height,
        };
        let sup_distance =
            self.max_distance_along(&point, x, seg.duration, delta / 4.0, horizon_for(delta));
        Ok(Closing {
            point,
            word,
            period,
            excess: period - seg.duration,
            bound,
            sup_distance,
        })
    }
}
