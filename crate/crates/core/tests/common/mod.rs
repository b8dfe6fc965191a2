#![allow(dead_code)]

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thermoflow::{BiWord, FlowSystem, GeodesicFlow, MetricGraph, Roof, Sft, SuspPoint, Suspension, Symbol};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One line per check, written past the test harness capture.
pub fn report(id: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let tag = if pass { "PASS" } else { "FAIL" };
    writeln!(out, "criterion {id:<3} {tag}  {detail}").unwrap();
}

pub fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// Natural-log binary entropy.
pub fn h2(p: f64) -> f64 {
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

pub fn full2() -> FlowSystem {
    Suspension::unit(Sft::full(2).unwrap()).into()
}

pub fn golden() -> FlowSystem {
    Suspension::unit(Sft::golden_mean()).into()
}

pub fn golden_roofs() -> FlowSystem {
    Suspension::new(Sft::golden_mean(), Roof::new(vec![1.0, 2.0]).unwrap())
        .unwrap()
        .into()
}

pub fn rose2() -> GeodesicFlow {
    GeodesicFlow::new(MetricGraph::rose(2, 1.0)).unwrap()
}

pub fn golden_graphs() -> Vec<(&'static str, GeodesicFlow)> {
    vec![
        ("rose-2", rose2()),
        ("theta-3", GeodesicFlow::new(MetricGraph::theta(3, 1.0)).unwrap()),
        (
            "rose-2 (1, 3/2)",
            GeodesicFlow::new(MetricGraph::new(1, vec![(0, 0, 1.0), (0, 0, 1.5)])).unwrap(),
        ),
    ]
}

pub fn golden_systems() -> Vec<(&'static str, FlowSystem)> {
    vec![
        ("full 2-shift", full2()),
        ("golden mean", golden()),
        ("golden mean, roofs 1,2", golden_roofs()),
        ("rose-2", rose2().into()),
    ]
}

pub fn random_walk<R: Rng>(sft: &Sft, start: Symbol, len: usize, rng: &mut R) -> Vec<Symbol> {
    let mut w = vec![start];
    while w.len() < len {
        let succ = sft.successors(*w.last().unwrap());
        w.push(succ[rng.random_range(0..succ.len())]);
    }
    w
}

fn predecessors(sft: &Sft, b: Symbol) -> Vec<Symbol> {
    (0..sft.n_symbols()).filter(|&a| sft.allows(a, b)).collect()
}

/// Periodic point through `word` (closed by a gap word), with coordinate 0 at
/// `word[origin]` and the given height.
pub fn closed_point(susp: &Suspension, mut word: Vec<Symbol>, origin: usize, height: f64) -> SuspPoint {
    let sft = susp.sft();
    let gap = sft.glue_words(&word[word.len() - 1..], &word[..1]).unwrap();
    word.extend(gap);
    SuspPoint {
        base: BiWord::new(word.clone(), Vec::new(), word, origin as i64).unwrap(),
        height,
    }
}

/// A random point with random symbols on `-back .. forward`.
pub fn random_point<R: Rng>(susp: &Suspension, back: usize, forward: usize, rng: &mut R) -> SuspPoint {
    let sft = susp.sft();
    let start = rng.random_range(0..sft.n_symbols());
    let word = random_walk(sft, start, back + forward, rng);
    let r = susp.roof().get(word[back]);
    closed_point(susp, word, back, rng.random::<f64>() * r)
}

/// A random point agreeing with `x` on coordinates `lo .. hi`, with `pad`
/// random symbols on either side.
pub fn agreeing_point<R: Rng>(susp: &Suspension, x: &SuspPoint, lo: i64, hi: i64, pad: usize, rng: &mut R) -> SuspPoint {
    let sft = susp.sft();
    let core = x.base.window(lo, hi);
    let mut left = Vec::new();
    let mut first = core[0];
    for _ in 0..pad {
        let p = predecessors(sft, first);
        first = p[rng.random_range(0..p.len())];
        left.push(first);
    }
    left.reverse();
    let right = random_walk(sft, *core.last().unwrap(), pad + 1, rng);
    let mut word = left;
    word.extend_from_slice(&core);
    word.extend_from_slice(&right[1..]);
    closed_point(susp, word, (pad as i64 - lo) as usize, x.height)
}

pub fn random_irreducible_sft<R: Rng>(rng: &mut R) -> Sft {
    loop {
        let n = rng.random_range(1..=5);
        let density = rng.random_range(0.3..0.9);
        let rows: Vec<Vec<bool>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random::<f64>() < density).collect())
            .collect();
        if let Ok(s) = Sft::new(rows) {
            if s.is_irreducible() {
                return s;
            }
        }
    }
}

/// Shortest `u` with `a u b` admissible, by exhaustive search over words of
/// length at most `max_len`.
pub fn brute_force_gap(sft: &Sft, a: Symbol, b: Symbol, max_len: usize) -> Option<usize> {
    let n = sft.n_symbols();
    for len in 0..=max_len {
        let total = n.pow(len as u32);
        for code in 0..total {
            let mut u = Vec::with_capacity(len + 2);
            u.push(a);
            let mut c = code;
            for _ in 0..len {
                u.push(c % n);
                c /= n;
            }
            u.push(b);
            if u.windows(2).all(|p| sft.allows(p[0], p[1])) {
                return Some(len);
            }
        }
    }
    None
}

/// Root of `rho(A_ab e^{-s r_a}) = 1` by bisection, with the spectral radius
/// from the real Schur form. `phi[a]` is the integral of the potential over
/// the fiber above `a`, so the matrix entries are `e^{phi_a - s r_a}`.
pub fn pressure_oracle(sft: &Sft, roof: &[f64], phi: &[f64]) -> f64 {
    let n = sft.n_symbols();
    let radius = |s: f64| {
        let m = DMatrix::from_fn(n, n, |a, b| {
            if sft.allows(a, b) {
                (phi[a] - s * roof[a]).exp()
            } else {
                0.0
            }
        });
        m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if radius(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of a decreasing function by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
