//! Compact metric graphs and their geodesic flow.
//!
//! Each undirected edge `k` gives two directed edges, `2k` (from -> to) and
//! `2k + 1` (to -> from). Geodesics are non-backtracking bi-infinite edge paths
//! traversed at unit speed, i.e. points of the suspension of the edge shift
//! with roof equal to the edge lengths. The universal cover is a tree; points
//! of it are reduced edge paths from a root vertex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::biword::BiWord;
use crate::error::{Error, Result};
use crate::sft::{Sft, Symbol};
use crate::suspension::{Roof, SuspPoint, Suspension};

/// A geodesic is a point of the edge-shift suspension: the directed edge it
/// is on at time 0 and the distance travelled along it.
pub type Geodesic = SuspPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricGraph {
    pub vertices: usize,
    pub edges: Vec<GraphEdge>,
}

#[derive(Deserialize)]
struct RawGraph {
    vertices: usize,
    edges: Vec<RawEdge>,
}

#[derive(Deserialize)]
struct RawEdge {
    from: usize,
    to: usize,
    length: serde_json::Value,
}

impl<'de> Deserialize<'de> for MetricGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawGraph::deserialize(d)?;
        let edges = raw
            .edges
            .into_iter()
            .map(|e| {
                let length = match &e.length {
                    serde_json::Value::Number(n) => n.as_f64().ok_or("length out of range".to_string()),
                    serde_json::Value::String(s) => parse_length(s).map_err(|e| e.to_string()),
                    other => Err(format!("bad edge length {other}")),
                }
                .map_err(serde::de::Error::custom)?;
                Ok(GraphEdge {
                    from: e.from,
                    to: e.to,
                    length,
                })
            })
            .collect::<std::result::Result<_, D::Error>>()?;
        Ok(MetricGraph {
            vertices: raw.vertices,
            edges,
        })
    }
}

/// Parses `"1.25"`, `"5/4"` or `"3"`.
pub fn parse_length(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad length {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

impl MetricGraph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        Self {
            vertices,
            edges: edges
                .into_iter()
                .map(|(from, to, length)| GraphEdge { from, to, length })
                .collect(),
        }
    }

    /// One vertex with `k` loops of the given length.
    pub fn rose(k: usize, length: f64) -> Self {
        Self::new(1, (0..k).map(|_| (0, 0, length)).collect())
    }

    /// Two vertices joined by `k` parallel edges of the given length.
    pub fn theta(k: usize, length: f64) -> Self {
        Self::new(2, (0..k).map(|_| (0, 1, length)).collect())
    }

    pub fn betti_number(&self) -> i64 {
        self.edges.len() as i64 - self.vertices as i64 + 1
    }

    fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.from == v) as usize + (e.to == v) as usize)
            .sum()
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.vertices];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                    if a == v && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices == 0 || self.edges.is_empty() {
            return Err(Error::InvalidModel("graph has no vertices or no edges".into()));
        }
        for e in &self.edges {
            if e.from >= self.vertices || e.to >= self.vertices {
                return Err(Error::InvalidModel(format!(
                    "edge {}-{} refers to a missing vertex",
                    e.from, e.to
                )));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidModel(format!("edge length {} is not positive", e.length)));
            }
        }
        if !self.is_connected() {
            return Err(Error::InvalidModel("graph is not connected".into()));
        }
        let betti = self.betti_number();
        if betti < 2 {
            return Err(Error::ElementaryFundamentalGroup { betti });
        }
        if let Some(v) = (0..self.vertices).find(|&v| self.degree(v) < 2) {
            return Err(Error::InvalidModel(format!("vertex {v} has degree below 2")));
        }
        Ok(())
    }
}

/// Point of the universal-cover tree: the reduced edge path from the root,
/// with the last edge travelled for `h` in `(0, len]`. The root is the empty
/// path with `h = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePoint {
    pub path: Vec<usize>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedGeodesic {
    /// Least rotation of a primitive, cyclically non-backtracking edge word.
    pub word: Vec<Symbol>,
    pub period: f64,
}

/// `d_GX` together with a bound on its numerical error; the true value lies
/// in `[value, value + error]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgxValue {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct GeodesicFlow {
    graph: MetricGraph,
    susp: Suspension,
    vertex_dist: Vec<Vec<f64>>,
    eps0: f64,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn edge_name(k: usize, reversed: bool) -> String {
    if k < 26 {
        let c = (b'a' + k as u8) as char;
        if reversed {
            c.to_ascii_uppercase().to_string()
        } else {
            c.to_string()
        }
    } else if reversed {
        format!("E{k}")
    } else {
        format!("e{k}")
    }
}

impl GeodesicFlow {
    pub fn new(graph: MetricGraph) -> Result<Self> {
        graph.validate()?;
        let (sft, roof) = build_edge_sft(&graph)?;
        let susp = Suspension::new(sft, roof)?;

        let n = graph.vertices;
        let mut vertex_dist = vec![vec![f64::INFINITY; n]; n];
        for (v, row) in vertex_dist.iter_mut().enumerate() {
            row[v] = 0.0;
        }
        for e in &graph.edges {
            let d = vertex_dist[e.from][e.to].min(e.length);
            vertex_dist[e.from][e.to] = d;
            vertex_dist[e.to][e.from] = d;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = vertex_dist[i][k] + vertex_dist[k][j];
                    if via < vertex_dist[i][j] {
                        vertex_dist[i][j] = via;
                    }
                }
            }
        }
        let mut flow = Self {
            graph,
            susp,
            vertex_dist,
            eps0: 0.0,
        };
        flow.eps0 = 0.5 * flow.shortest_closed_geodesic();
        Ok(flow)
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn suspension(&self) -> &Suspension {
        &self.susp
    }

    pub fn sft(&self) -> &Sft {
        self.susp.sft()
    }

    pub fn roof(&self) -> &Roof {
        self.susp.roof()
    }

    pub fn n_directed(&self) -> usize {
        2 * self.graph.edges.len()
    }

    #[inline]
    pub fn rev(e: usize) -> usize {
        e ^ 1
    }

    #[inline]
    pub fn tail(&self, e: usize) -> usize {
        let g = &self.graph.edges[e / 2];
        if e.is_multiple_of(2) {
            g.from
        } else {
            g.to
        }
    }

    #[inline]
    pub fn head(&self, e: usize) -> usize {
        self.tail(Self::rev(e))
    }

    #[inline]
    pub fn len(&self, e: usize) -> f64 {
        self.graph.edges[e / 2].length
    }

    /// Half the length of the shortest closed geodesic.
    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    /// Separation scale used for expansivity checks on this graph.
    pub fn expansivity_scale(&self) -> f64 {
        self.eps0 / 2.0
    }

    fn shortest_closed_geodesic(&self) -> f64 {
        let m = self.n_directed();
        let sft = self.sft();
        let mut best = f64::INFINITY;
        for start in 0..m {
            // dist[e] = length of the shortest non-backtracking path that
            // starts with `start` and ends with `e` (both lengths included).
            let mut dist = vec![f64::INFINITY; m];
            let mut heap = BinaryHeap::new();
            dist[start] = self.len(start);
            heap.push(HeapItem(dist[start], start));
            while let Some(HeapItem(d, e)) = heap.pop() {
                if d > dist[e] || d >= best {
                    continue;
                }
                if sft.allows(e, start) {
                    best = best.min(d);
                }
                for &f in sft.successors(e) {
                    let nd = d + self.len(f);
                    if nd < dist[f] {
                        dist[f] = nd;
                        heap.push(HeapItem(nd, f));
                    }
                }
            }
        }
        best
    }

    pub fn geodesic(&self, base: BiWord, height: f64) -> Result<Geodesic> {
        self.susp.point(base, height)
    }

    /// Closed geodesic through a cyclic edge word, started at the tail of
    /// its first edge.
    pub fn closed_geodesic_point(&self, word: &[Symbol]) -> Result<Geodesic> {
        self.susp.periodic_point(word)
    }

    pub fn parse_edges(&self, text: &str) -> Result<Vec<Symbol>> {
        self.sft().parse_word(text)
    }

    /// Distance in the graph between the points at `s1` along `e1` and at
    /// `s2` along `e2` (measured from the tails).
    pub fn point_distance(&self, e1: usize, s1: f64, e2: usize, s2: f64) -> f64 {
        let ends = |e: usize, s: f64| [(self.tail(e), s), (self.head(e), self.len(e) - s)];
        let mut best = f64::INFINITY;
        if e1 / 2 == e2 / 2 {
            let p1 = if e1.is_multiple_of(2) { s1 } else { self.len(e1) - s1 };
            let p2 = if e2.is_multiple_of(2) { s2 } else { self.len(e2) - s2 };
            best = (p1 - p2).abs();
        }
        for (v, a) in ends(e1, s1) {
            for (w, b) in ends(e2, s2) {
                best = best.min(a + self.vertex_dist[v][w] + b);
            }
        }
        best
    }

    /// Position of `gamma(t)` in the graph as `(directed edge, distance from tail)`.
    pub fn position(&self, g: &Geodesic, t: f64) -> (usize, f64) {
        let p = self.susp.flow(g, t);
        (p.symbol(), p.height)
    }

    /// `d_X(gamma_1(s), gamma_2(t))`.
    pub fn d_x(&self, g1: &Geodesic, s: f64, g2: &Geodesic, t: f64) -> f64 {
        let (e1, a) = self.position(g1, s);
        let (e2, b) = self.position(g2, t);
        self.point_distance(e1, a, e2, b)
    }

    /// Tree point reached from the end of `sigma` by walking `walk`, the last
    /// edge only for `h` in `(0, len]`.
    fn reduce_walk(&self, sigma: &[usize], walk: &[usize], h: f64) -> TreePoint {
        let mut stack = sigma.to_vec();
        let vertex_point = |stack: Vec<usize>| {
            let h = stack.last().map(|&e| self.len(e)).unwrap_or(0.0);
            TreePoint { path: stack, h }
        };
        let Some((&last, init)) = walk.split_last() else {
            return vertex_point(stack);
        };
        for &f in init {
            if stack.last() == Some(&Self::rev(f)) {
                stack.pop();
            } else {
                stack.push(f);
            }
        }
        if stack.last() == Some(&Self::rev(last)) {
            let l = self.len(last);
            if h < l {
                return TreePoint {
                    path: stack,
                    h: l - h,
                };
            }
            stack.pop();
            return vertex_point(stack);
        }
        stack.push(last);
        TreePoint { path: stack, h }
    }

    /// `tilde gamma(t)` for the lift of `gamma` whose time `-height` point is
    /// the end of `sigma`.
    pub fn lift_point(&self, g: &Geodesic, sigma: &[usize], t: f64, window: usize) -> Result<TreePoint> {
        let tau = g.height + t;
        let mut walk = Vec::new();
        if tau > 0.0 {
            let mut cum = 0.0;
            let mut k = 0i64;
            loop {
                let e = g.base.at(k);
                walk.push(e);
                if walk.len() > window {
                    return Err(Error::InsufficientUnwinding { t, window });
                }
                let l = self.len(e);
                if tau <= cum + l {
                    return Ok(self.reduce_walk(sigma, &walk, tau - cum));
                }
                cum += l;
                k += 1;
            }
        } else if tau < 0.0 {
            let target = -tau;
            let mut cum = 0.0;
            let mut k = -1i64;
            loop {
                let e = Self::rev(g.base.at(k));
                walk.push(e);
                if walk.len() > window {
                    return Err(Error::InsufficientUnwinding { t, window });
                }
                let l = self.len(e);
                if target <= cum + l {
                    return Ok(self.reduce_walk(sigma, &walk, target - cum));
                }
                cum += l;
                k -= 1;
            }
        } else {
            Ok(self.reduce_walk(sigma, &[], 0.0))
        }
    }

    fn path_len(&self, p: &TreePoint, upto: usize) -> f64 {
        if upto == 0 {
            return 0.0;
        }
        let full: f64 = p.path[..upto - 1].iter().map(|&e| self.len(e)).sum();
        if upto == p.path.len() {
            full + p.h
        } else {
            full + self.len(p.path[upto - 1])
        }
    }

    pub fn tree_distance(&self, a: &TreePoint, b: &TreePoint) -> f64 {
        let c = a
            .path
            .iter()
            .zip(&b.path)
            .take_while(|(x, y)| x == y)
            .count();
        let (n, m) = (a.path.len(), b.path.len());
        let la = self.path_len(a, n);
        let lb = self.path_len(b, m);
        if c < n && c < m {
            let pref: f64 = a.path[..c].iter().map(|&e| self.len(e)).sum();
            (la - pref) + (lb - pref)
        } else if c == n && c == m {
            (a.h - b.h).abs()
        } else {
            (la - lb).abs()
        }
    }

    /// Reduced paths from the root (tail of `g1`'s edge at coordinate 0) to
    /// lifts of the tail of `g2`'s edge at coordinate 0, of length at most
    /// `max_len`.
    fn lift_roots(&self, g1: &Geodesic, g2: &Geodesic, max_len: f64) -> Vec<Vec<usize>> {
        let root = self.tail(g1.base.at(0));
        let target = self.tail(g2.base.at(0));
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.lift_dfs(root, target, max_len, 0.0, &mut path, &mut out);
        out
    }

    fn lift_dfs(
        &self,
        v: usize,
        target: usize,
        max_len: f64,
        acc: f64,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if v == target {
            out.push(path.clone());
        }
        for e in 0..self.n_directed() {
            if self.tail(e) != v || path.last() == Some(&Self::rev(e)) {
                continue;
            }
            let a = acc + self.len(e);
            if a > max_len + 1e-12 {
                continue;
            }
            path.push(e);
            self.lift_dfs(self.head(e), target, max_len, a, path, out);
            path.pop();
        }
    }

    /// Lifts of `g2` whose time-0 point lies within `radius` of `tilde g1(0)`,
    /// with that distance, nearest first.
    fn nearby_lifts(&self, g1: &Geodesic, g2: &Geodesic, radius: f64) -> Vec<(f64, Vec<usize>)> {
        let window = usize::MAX;
        let p1 = self.lift_point(g1, &[], 0.0, window).expect("unbounded window");
        let max_len = g1.height + radius + g2.height + 1e-9;
        let mut lifts: Vec<(f64, Vec<usize>)> = self
            .lift_roots(g1, g2, max_len)
            .into_iter()
            .filter_map(|sigma| {
                let p2 = self.lift_point(g2, &sigma, 0.0, window).expect("unbounded window");
                let d = self.tree_distance(&p1, &p2);
                (d <= radius + 1e-9).then_some((d, sigma))
            })
            .collect();
        lifts.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        lifts
    }

    /// Tree distance at time `t` between `tilde gamma_1` and the lift of
    /// `gamma_2` whose time-0 point is nearest `tilde gamma_1(0)`.
    pub fn lift_distance(&self, g1: &Geodesic, g2: &Geodesic, t: f64, window: usize) -> Result<f64> {
        let d0 = self.d_x(g1, 0.0, g2, 0.0);
        let lifts = self.nearby_lifts(g1, g2, d0 + 1e-9);
        let (_, sigma) = lifts
            .first()
            .ok_or_else(|| Error::InvalidArgument("no lift realizes the base distance".into()))?;
        let a = self.lift_point(g1, &[], t, window)?;
        let b = self.lift_point(g2, sigma, t, window)?;
        Ok(self.tree_distance(&a, &b))
    }

    /// Vertex-crossing times of `g` inside `(-horizon, horizon)`.
    fn crossing_times(&self, g: &Geodesic, horizon: f64, out: &mut Vec<f64>) {
        let mut t = -g.height;
        let mut k = 0i64;
        while t < horizon {
            if t > -horizon {
                out.push(t);
            }
            t += self.len(g.base.at(k));
            k += 1;
        }
        let mut t = -g.height;
        let mut k = -1i64;
        while t > -horizon {
            t -= self.len(g.base.at(k));
            if t > -horizon {
                out.push(t);
            }
            k -= 1;
        }
    }

    /// `int_{-H}^{H} d(t) e^{-2|t|} dt` for one lift pair, plus the tail bound.
    fn lift_integral(&self, g1: &Geodesic, g2: &Geodesic, sigma: &[usize], horizon: f64) -> DgxValue {
        let window = usize::MAX;
        let d = |t: f64| {
            let a = self.lift_point(g1, &[], t, window).expect("unbounded window");
            let b = self.lift_point(g2, sigma, t, window).expect("unbounded window");
            self.tree_distance(&a, &b)
        };
        let mut breaks = vec![-horizon, 0.0, horizon];
        self.crossing_times(g1, horizon, &mut breaks);
        self.crossing_times(g2, horizon, &mut breaks);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        let mut total = 0.0;
        let mut prev = (breaks[0], d(breaks[0]));
        for &b in &breaks[1..] {
            let fb = d(b);
            total += integrate_piece(&d, prev.0, prev.1, b, fb, 0);
            prev = (b, fb);
        }
        let tail = (-2.0 * horizon).exp() * ((d(horizon) + d(-horizon)) / 2.0 + 1.0);
        DgxValue {
            value: total,
            error: tail + 1e-12 * (1.0 + total),
        }
    }

    /// `d_GX(gamma_1, gamma_2)`, minimized over lift alignments.
    pub fn d_gx(&self, g1: &Geodesic, g2: &Geodesic, tail_horizon: f64) -> DgxValue {
        let horizon = tail_horizon.max(1.0);
        if g1 == g2 {
            return DgxValue {
                value: 0.0,
                error: 0.0,
            };
        }
        let d0 = self.d_x(g1, 0.0, g2, 0.0);
        let lifts = self.nearby_lifts(g1, g2, d0 + 2.0);
        let mut best = DgxValue {
            value: f64::INFINITY,
            error: 0.0,
        };
        for (dist, sigma) in &lifts {
            // A lift whose time-0 points are `D` apart integrates to at least
            // D - 1 + e^-D.
            if dist - 1.0 + (-dist).exp() >= best.value + best.error {
                continue;
            }
            let v = self.lift_integral(g1, g2, sigma, horizon);
            if v.value < best.value {
                best = v;
            }
        }
        best
    }

    /// `d_GX(g_s gamma_1, g_t gamma_2)`.
    pub fn d_gx_at(&self, g1: &Geodesic, s: f64, g2: &Geodesic, t: f64, tail_horizon: f64) -> DgxValue {
        let a = self.susp.flow(g1, s);
        let b = self.susp.flow(g2, t);
        self.d_gx(&a, &b, tail_horizon)
    }

    /// All primitive closed geodesics of length at most `max_period`, one per
    /// oriented orbit.
    pub fn enumerate_closed_geodesics(&self, max_period: f64) -> Vec<ClosedGeodesic> {
        if !(max_period > 0.0) {
            return Vec::new();
        }
        self.sft()
            .enumerate_weighted_cycles(self.roof().values(), max_period)
            .into_iter()
            .map(|word| {
                let period = self.roof().word_time(&word);
                ClosedGeodesic { word, period }
            })
            .collect()
    }

    pub fn format_word(&self, word: &[Symbol]) -> String {
        self.sft().format_word(word)
    }
}

/// Exact integral of a piecewise-linear `f` against `e^{-2|t|}` on `[a, b]`
/// (not straddling 0), splitting where `f` bends.
fn integrate_piece(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, depth: u32) -> f64 {
    if b - a <= 0.0 {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    let tol = 1e-11 * (1.0 + fa.abs() + fb.abs());
    if (fm - 0.5 * (fa + fb)).abs() <= tol || depth > 50 {
        return linear_exp_integral(a, fa, b, fb);
    }
    // The only kink inside an edge is where the two points meet head-on.
    let kink = a + fa / 2.0;
    let split = if kink > a && kink < b { kink } else { m };
    let fs = if split == m { fm } else { f(split) };
    integrate_piece(f, a, fa, split, fs, depth + 1) + integrate_piece(f, split, fs, b, fb, depth + 1)
}

/// `int_a^b f(t) e^{-2|t|} dt` for `f` linear with `f(a) = fa`, `f(b) = fb`.
pub fn linear_exp_integral(a: f64, fa: f64, b: f64, fb: f64) -> f64 {
    let beta = (fb - fa) / (b - a);
    if a >= 0.0 {
        (-2.0 * a).exp() * (fa / 2.0 + beta / 4.0) - (-2.0 * b).exp() * (fb / 2.0 + beta / 4.0)
    } else {
        debug_assert!(b <= 1e-15);
        (2.0 * b).exp() * (fb / 2.0 - beta / 4.0) - (2.0 * a).exp() * (fa / 2.0 - beta / 4.0)
    }
}

/// The non-backtracking edge shift and the edge-length roof.
pub fn build_edge_sft(graph: &MetricGraph) -> Result<(Sft, Roof)> {
    graph.validate()?;
    let m = 2 * graph.edges.len();
    let tail = |e: usize| {
        let g = &graph.edges[e / 2];
        if e.is_multiple_of(2) {
            g.from
        } else {
            g.to
        }
    };
    let head = |e: usize| tail(e ^ 1);
    let transitions = (0..m)
        .map(|e| (0..m).map(|f| head(e) == tail(f) && f != (e ^ 1)).collect())
        .collect();
    let names = (0..m).map(|e| edge_name(e / 2, e % 2 == 1)).collect();
    let sft = Sft::with_names(names, transitions)?;
    if !sft.is_irreducible() {
        return Err(Error::WeakSpecificationFails);
    }
    let roof = Roof::new((0..m).map(|e| graph.edges[e / 2].length).collect())?;
    Ok((sft, roof))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rose2() -> GeodesicFlow {
        GeodesicFlow::new(MetricGraph::rose(2, 1.0)).unwrap()
    }

    #[test]
    fn edge_shift_shapes() {
        let (sft, _) = build_edge_sft(&MetricGraph::rose(2, 1.0)).unwrap();
        assert_eq!(sft.n_symbols(), 4);
        assert!((0..4).all(|e| sft.successors(e).len() == 3));
        let (sft, _) = build_edge_sft(&MetricGraph::theta(3, 1.0)).unwrap();
        assert_eq!(sft.n_symbols(), 6);
        assert!((0..6).all(|e| sft.successors(e).len() == 2));
        assert_eq!(
            build_edge_sft(&MetricGraph::rose(1, 1.0)).unwrap_err(),
            Error::ElementaryFundamentalGroup { betti: 1 }
        );
    }

    #[test]
    fn rejects_leaves() {
        let g = MetricGraph::new(2, vec![(0, 0, 1.0), (0, 0, 1.0), (0, 1, 1.0)]);
        assert!(matches!(g.validate(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn eps0_values() {
        assert!((rose2().eps0() - 0.5).abs() < 1e-15);
        let theta = GeodesicFlow::new(MetricGraph::theta(3, 1.0)).unwrap();
        assert!((theta.eps0() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_geodesic_counts() {
        let f = rose2();
        assert_eq!(f.enumerate_closed_geodesics(1.0).len(), 4);
        assert_eq!(f.enumerate_closed_geodesics(2.0).len(), 8);
        let theta = GeodesicFlow::new(MetricGraph::theta(3, 1.0)).unwrap();
        assert_eq!(theta.enumerate_closed_geodesics(1.0).len(), 0);
    }

    #[test]
    fn lift_distance_example() {
        let f = rose2();
        let g1 = f.geodesic(BiWord::periodic(&[0]).unwrap(), 0.0).unwrap();
        let g2 = f
            .geodesic(BiWord::new(vec![0], vec![2], vec![0], -2).unwrap(), 0.0)
            .unwrap();
        assert_eq!(g2.base.at(2), 2);
        assert!((f.lift_distance(&g1, &g2, 2.5, 20).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(f.lift_distance(&g1, &g2, 1.5, 20).unwrap(), 0.0);
        assert!((f.lift_distance(&g1, &g2, 7.0, 20).unwrap() - 10.0).abs() < 1e-12);
        assert!(matches!(
            f.lift_distance(&g1, &g2, 7.0, 3),
            Err(Error::InsufficientUnwinding { .. })
        ));
    }

    #[test]
    fn d_gx_identity_and_divergence() {
        let f = rose2();
        let g1 = f.geodesic(BiWord::periodic(&[0]).unwrap(), 0.0).unwrap();
        assert_eq!(f.d_gx(&g1, &g1, 8.0).value, 0.0);
        // Agree on edges covering [-3, 3], diverge at unit speed beyond.
        let g2 = f
            .geodesic(BiWord::new(vec![2], vec![0; 6], vec![2], 3).unwrap(), 0.0)
            .unwrap();
        let v = f.d_gx(&g1, &g2, 10.0);
        let exact = (-6.0f64).exp();
        assert!((v.value - exact).abs() <= v.error + 1e-12, "{v:?} vs {exact}");
    }

    #[test]
    fn time_shift_pair_has_constant_distance() {
        let f = rose2();
        let g1 = f.closed_geodesic_point(&[0, 2]).unwrap();
        let g2 = f.suspension().flow(&g1, 0.3);
        let v = f.d_gx(&g1, &g2, 12.0);
        assert!((v.value - 0.3).abs() <= v.error + 1e-9, "{v:?}");
    }

    #[test]
    fn linear_integral_matches_closed_forms() {
        // int_0^inf e^{-2t} = 1/2; int_{-1}^{0} t e^{2t} dt.
        assert!((linear_exp_integral(0.0, 1.0, 40.0, 1.0) - 0.5).abs() < 1e-15);
        let exact = -0.25 + 0.75 * (-2.0f64).exp();
        assert!((linear_exp_integral(-1.0, -1.0, 0.0, 0.0) - exact).abs() < 1e-15);
    }

    #[test]
    fn lengths_parse_as_rationals() {
        assert_eq!(parse_length("5/4").unwrap(), 1.25);
        assert_eq!(parse_length("0.75").unwrap(), 0.75);
        let g: MetricGraph = serde_json::from_str(
            r#"{"vertices":1,"edges":[{"from":0,"to":0,"length":"3/2"},{"from":0,"to":0,"length":1}]}"#,
        )
        .unwrap();
        assert_eq!(g.edges[0].length, 1.5);
    }
}
