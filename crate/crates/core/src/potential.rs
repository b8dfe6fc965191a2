//! Flow systems and potentials on them.

use std::collections::HashMap;

use crate::biword::BiWord;
use crate::cat_graph::{Geodesic, GeodesicFlow};
use crate::error::{Error, Result};
use crate::sft::{Sft, Symbol};
use crate::suspension::{horizon_for, OrbitSegment, Roof, SuspPoint, Suspension};

/// Tail horizon used whenever a potential evaluates `d_GX`.
pub const DISTANCE_TAIL_HORIZON: f64 = 8.0;

/// A suspension flow, optionally realized as the geodesic flow of a graph.
#[derive(Debug, Clone)]
pub enum FlowSystem {
    Suspension(Suspension),
    Graph(GeodesicFlow),
}

impl From<Suspension> for FlowSystem {
    fn from(s: Suspension) -> Self {
        FlowSystem::Suspension(s)
    }
}

impl From<GeodesicFlow> for FlowSystem {
    fn from(g: GeodesicFlow) -> Self {
        FlowSystem::Graph(g)
    }
}

impl FlowSystem {
    pub fn suspension(&self) -> &Suspension {
        match self {
            FlowSystem::Suspension(s) => s,
            FlowSystem::Graph(g) => g.suspension(),
        }
    }

    pub fn graph(&self) -> Option<&GeodesicFlow> {
        match self {
            FlowSystem::Suspension(_) => None,
            FlowSystem::Graph(g) => Some(g),
        }
    }

    pub fn sft(&self) -> &Sft {
        self.suspension().sft()
    }

    pub fn roof(&self) -> &Roof {
        self.suspension().roof()
    }

    /// Scale below which distinct orbits are told apart: `eps0 / 2` on a
    /// graph, `min(1, min r) / 2` for a symbolic suspension.
    pub fn expansivity_scale(&self) -> f64 {
        match self {
            FlowSystem::Graph(g) => g.expansivity_scale(),
            FlowSystem::Suspension(s) => s.roof().min().min(1.0) / 2.0,
        }
    }

    /// `d_GX` on graphs, Bowen–Walters otherwise.
    pub fn distance(&self, p: &SuspPoint, q: &SuspPoint) -> f64 {
        match self {
            FlowSystem::Graph(g) => g.d_gx(p, q, DISTANCE_TAIL_HORIZON).value,
            FlowSystem::Suspension(s) => s.bw_unchecked(p, q, horizon_for(1e-6)),
        }
    }
}

/// Locally constant potential: the value at `(x, s)` is
/// `table[x_{-offset} .. x_{width - offset}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderPotential {
    pub width: usize,
    pub offset: usize,
    pub table: HashMap<Vec<Symbol>, f64>,
    /// Value for words missing from `table`.
    pub default: Option<f64>,
}

impl CylinderPotential {
    pub fn constant(c: f64) -> Self {
        Self {
            width: 1,
            offset: 0,
            table: HashMap::new(),
            default: Some(c),
        }
    }

    /// Width-1 potential with one value per symbol.
    pub fn per_symbol(values: &[f64]) -> Self {
        Self {
            width: 1,
            offset: 0,
            table: values.iter().enumerate().map(|(s, &v)| (vec![s], v)).collect(),
            default: None,
        }
    }

    pub fn from_table(width: usize, offset: usize, table: HashMap<Vec<Symbol>, f64>) -> Result<Self> {
        if width == 0 || offset >= width {
            return Err(Error::InvalidArgument(format!(
                "bad cylinder shape: width {width}, offset {offset}"
            )));
        }
        if table.keys().any(|k| k.len() != width) {
            return Err(Error::InvalidArgument("table word of the wrong width".into()));
        }
        Ok(Self {
            width,
            offset,
            table,
            default: None,
        })
    }

    #[inline]
    pub fn word_value(&self, word: &[Symbol]) -> f64 {
        match self.table.get(word) {
            Some(&v) => v,
            None => self.default.unwrap_or(f64::NAN),
        }
    }

    /// Value on the fiber over `x`.
    pub fn value(&self, x: &BiWord) -> f64 {
        let o = self.offset as i64;
        let w = x.window(-o, self.width as i64 - o);
        self.word_value(&w)
    }

    /// Checks that every admissible word of the width has a value.
    pub fn check_covers(&self, sft: &Sft) -> Result<()> {
        if self.default.is_some() {
            return Ok(());
        }
        let blocks = sft.block_presentation(self.width);
        match blocks.words.iter().find(|w| !self.table.contains_key(*w)) {
            None => Ok(()),
            Some(w) => Err(Error::InvalidModel(format!(
                "potential table misses word {}",
                sft.format_word(w)
            ))),
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        let mut values = self.table.values().copied().chain(self.default);
        let first = values.next()?;
        values.all(|v| v == first).then_some(first)
    }

    /// `self + beta * other`, on the common refinement of both shapes.
    pub fn combine(&self, beta: f64, other: &CylinderPotential, sft: &Sft) -> CylinderPotential {
        let offset = self.offset.max(other.offset);
        let right = (self.width - self.offset).max(other.width - other.offset);
        let width = offset + right;
        let blocks = sft.block_presentation(width);
        let table = blocks
            .words
            .iter()
            .map(|w| {
                let a = &w[offset - self.offset..offset - self.offset + self.width];
                let b = &w[offset - other.offset..offset - other.offset + other.width];
                (w.clone(), self.word_value(a) + beta * other.word_value(b))
            })
            .collect();
        CylinderPotential {
            width,
            offset,
            table,
            default: None,
        }
    }
}

/// `gamma -> scale * d_GX(gamma, reference)` on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DistancePotential {
    pub reference: Geodesic,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Cylinder(CylinderPotential),
    Distance(DistancePotential),
}

impl From<CylinderPotential> for Potential {
    fn from(c: CylinderPotential) -> Self {
        Potential::Cylinder(c)
    }
}

impl From<DistancePotential> for Potential {
    fn from(d: DistancePotential) -> Self {
        Potential::Distance(d)
    }
}

const GAUSS8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GAUSS8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-node Gauss–Legendre rule on `[a, b]`.
pub fn gauss8(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in GAUSS8_X.iter().zip(GAUSS8_W) {
        s += w * (f(c - h * x) + f(c + h * x));
    }
    s * h
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 18)
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Cylinder(CylinderPotential::constant(0.0))
    }

    pub fn constant(c: f64) -> Self {
        Potential::Cylinder(CylinderPotential::constant(c))
    }

    pub fn as_cylinder(&self) -> Option<&CylinderPotential> {
        match self {
            Potential::Cylinder(c) => Some(c),
            Potential::Distance(_) => None,
        }
    }

    /// Pointwise value.
    pub fn value(&self, system: &FlowSystem, p: &SuspPoint) -> Result<f64> {
        match self {
            Potential::Cylinder(c) => Ok(c.value(&p.base)),
            Potential::Distance(d) => {
                let g = system.graph().ok_or_else(|| {
                    Error::SystemMismatch("distance potentials need a graph".into())
                })?;
                Ok(d.scale * g.d_gx(p, &d.reference, DISTANCE_TAIL_HORIZON).value)
            }
        }
    }

    pub fn validate(&self, system: &FlowSystem) -> Result<()> {
        match self {
            Potential::Cylinder(c) => c.check_covers(system.sft()),
            Potential::Distance(d) => {
                let g = system.graph().ok_or_else(|| {
                    Error::SystemMismatch("distance potentials need a graph".into())
                })?;
                if !d.scale.is_finite() {
                    return Err(Error::InvalidModel("distance potential scale is not finite".into()));
                }
                g.suspension().validate(&d.reference)
            }
        }
    }

    /// `Phi(x, t) = int_0^t phi(f_s x) ds`.
    pub fn birkhoff(&self, system: &FlowSystem, seg: &OrbitSegment) -> Result<f64> {
        let susp = system.suspension();
        match self {
            Potential::Cylinder(c) => {
                let mut total = 0.0;
                let mut remaining = seg.duration;
                let mut base = seg.start.base.clone();
                let mut h = seg.start.height;
                while remaining > 0.0 {
                    let r = susp.roof().get(base.at(0));
                    let stay = (r - h).min(remaining);
                    total += c.value(&base) * stay;
                    remaining -= stay;
                    h = 0.0;
                    base.shift_in_place(1);
                }
                Ok(total)
            }
            Potential::Distance(_) => {
                self.validate(system)?;
                let mut total = 0.0;
                let mut remaining = seg.duration;
                let mut p = seg.start.clone();
                while remaining > 0.0 {
                    let r = susp.roof().get(p.symbol());
                    let stay = (r - p.height).min(remaining);
                    let start = p.clone();
                    let f = |s: f64| {
                        let q = SuspPoint {
                            base: start.base.clone(),
                            height: start.height + s,
                        };
                        self.value(system, &q).unwrap_or(f64::NAN)
                    };
                    total += adaptive_simpson(&f, 0.0, stay, 1e-8 * stay.max(1e-3));
                    remaining -= stay;
                    p = SuspPoint {
                        base: p.base.shift(1),
                        height: 0.0,
                    };
                }
                Ok(total)
            }
        }
    }

    /// Integral around a closed orbit given by a cyclic word.
    pub fn orbit_integral(&self, system: &FlowSystem, word: &[Symbol]) -> Result<f64> {
        let susp = system.suspension();
        let p = susp.periodic_point(word)?;
        let period = susp.roof().word_time(word);
        self.birkhoff(system, &OrbitSegment { start: p, duration: period })
    }

    /// Locally constant approximation of the given width (the potential
    /// itself when it is already locally constant).
    pub fn to_cylinder(&self, system: &FlowSystem, width: usize) -> Result<CylinderPotential> {
        match self {
            Potential::Cylinder(c) => Ok(c.clone()),
            Potential::Distance(d) => {
                self.validate(system)?;
                let g = system.graph().expect("validated");
                let sft = system.sft();
                let offset = (width - 1) / 2;
                let blocks = sft.block_presentation(width);
                let table = blocks
                    .words
                    .iter()
                    .map(|w| {
                        let mut cyc = w.clone();
                        cyc.extend(sft.shortest_gap(*w.last().unwrap(), w[0]));
                        let base = BiWord::new(cyc.clone(), Vec::new(), cyc, offset as i64)
                            .expect("nonempty word");
                        let r = system.roof().get(w[offset]);
                        let mean = gauss8(
                            |s| {
                                let q = SuspPoint {
                                    base: base.clone(),
                                    height: s,
                                };
                                d.scale * g.d_gx(&q, &d.reference, DISTANCE_TAIL_HORIZON).value
                            },
                            0.0,
                            r,
                        ) / r;
                        (w.clone(), mean)
                    })
                    .collect();
                CylinderPotential::from_table(width, offset, table)
            }
        }
    }
}
