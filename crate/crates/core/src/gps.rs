//! Bicoloured perturbed lattice structures on boxes of R³ and R³ × time.
//!
//! Black sheets sit at even coordinates and orange sheets at odd ones. Each
//! colour's vertical x-sheets are staggered by `eps` on alternate y-strips and
//! its horizontal brick faces are lifted by `0`, `eps` or `2·eps` so that the
//! three bricks meeting along a vertical line sit at different heights. The
//! cell structure is the canonical decomposition of the union of all sheets,
//! computed over exact rationals.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::complex2::{prune_leaves, Cell, CollapsePair, CollapseSchedule, FaceId, Labels, TwoComplex};
use crate::error::{input_err, invariant_err, Error, Result};
use crate::graph::{EdgeId, Graph, SignedEdge, VertexId};

/// Exact coordinate type.
pub type Q = Rational64;

const T_AXIS: usize = 3;

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

pub fn default_eps() -> Q {
    Q::new(1, 8)
}

/// Parses `p/q` or an integer.
pub fn parse_rational(s: &str) -> Result<Q> {
    s.trim().parse::<Q>().map_err(|_| input_err!("not a rational number: {s:?}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GpsColour {
    Black,
    Orange,
    Temporal,
}

/// Axis-parallel box `lo ≤ p ≤ hi` in R³.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub lo: [Q; 3],
    pub hi: [Q; 3],
}

impl Bounds {
    pub fn new(lo: [Q; 3], hi: [Q; 3]) -> Result<Self> {
        for a in 0..3 {
            if lo[a] >= hi[a] {
                return Err(input_err!("empty bounds on axis {a}: {} .. {}", lo[a], hi[a]));
            }
        }
        Ok(Bounds { lo, hi })
    }

    /// The cube `[lo, hi]³`.
    pub fn cube(lo: i64, hi: i64) -> Result<Self> {
        Bounds::new([q(lo); 3], [q(hi); 3])
    }

    pub fn encloses(&self, other: &Bounds) -> bool {
        (0..3).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }

    pub fn contains(&self, p: &[Q]) -> bool {
        (0..3).all(|a| self.lo[a] <= p[a] && p[a] <= self.hi[a])
    }

    pub fn on_boundary(&self, p: &[Q]) -> bool {
        (0..3).any(|a| p[a] == self.lo[a] || p[a] == self.hi[a])
    }
}

/// A lattice structure with exact vertex coordinates `(x, y, z[, t])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GpsComplex {
    pub complex: TwoComplex,
    pub coords: BTreeMap<VertexId, Vec<Q>>,
    pub face_colour: BTreeMap<FaceId, GpsColour>,
    /// Spatial edges of the coarse sublattice of the given colour.
    pub coarse: BTreeMap<EdgeId, GpsColour>,
    pub eps: Q,
    pub bounds: Bounds,
    /// Integer slice times; empty in dimension 3.
    pub times: Vec<i64>,
}

impl GpsComplex {
    pub fn dim(&self) -> usize {
        if self.times.is_empty() {
            3
        } else {
            4
        }
    }

    /// The coordinate axis along which `e` runs (`3` is time).
    pub fn edge_axis(&self, e: EdgeId) -> Option<usize> {
        let (u, v) = self.complex.skeleton.endpoints(e)?;
        let (a, b) = (self.coords.get(&u)?, self.coords.get(&v)?);
        let diff: Vec<usize> = (0..a.len().min(b.len())).filter(|&i| a[i] != b[i]).collect();
        (diff.len() == 1).then(|| diff[0])
    }

    /// Colours of the faces through `e`, or `TEMPORAL` for a time edge.
    pub fn edge_colours(&self, e: EdgeId) -> BTreeSet<GpsColour> {
        if self.edge_axis(e) == Some(T_AXIS) {
            return BTreeSet::from([GpsColour::Temporal]);
        }
        self.complex
            .faces_on_edge(e)
            .filter_map(|(f, _)| self.face_colour.get(&f).copied())
            .collect()
    }

    fn time_of(&self, v: VertexId) -> i64 {
        self.coords[&v].get(T_AXIS).map_or(0, |t| t.to_integer())
    }
}

/// An axis-parallel rectangle of one colour; `lo[normal] == hi[normal]`.
#[derive(Debug, Clone)]
struct Sheet {
    normal: usize,
    lo: [Q; 3],
    hi: [Q; 3],
    colour: GpsColour,
    coarse: bool,
}

fn floor_div2(x: Q) -> i64 {
    (x / q(2)).floor().to_integer()
}

fn ceil_div2(x: Q) -> i64 {
    (x / q(2)).ceil().to_integer()
}

/// All sheets of both colours, clipped to the box.
fn sheets(bounds: &Bounds, eps: Q) -> Vec<Sheet> {
    let mut raw = Vec::new();
    for (o, colour) in [(0i64, GpsColour::Black), (1, GpsColour::Orange)] {
        let range = |a: usize| (floor_div2(bounds.lo[a] - q(o)) - 1, ceil_div2(bounds.hi[a] - q(o)));
        let (n0, n1) = range(1);
        let (m0, m1) = range(0);
        let (p0, p1) = range(2);
        for n in n0..=n1 {
            let y = q(2 * n + o);
            raw.push(Sheet {
                normal: 1,
                lo: [bounds.lo[0], y, bounds.lo[2]],
                hi: [bounds.hi[0], y, bounds.hi[2]],
                colour,
                coarse: n.rem_euclid(3) == 0,
            });
        }
        for n in n0..=n1 {
            let s = n.rem_euclid(2);
            let (y0, y1) = (q(2 * n + o), q(2 * n + 2 + o));
            for m in m0..=m1 {
                let x = q(2 * m + o) + eps * q(s);
                let x1 = x + q(2);
                raw.push(Sheet {
                    normal: 0,
                    lo: [x, y0, bounds.lo[2]],
                    hi: [x, y1, bounds.hi[2]],
                    colour,
                    coarse: m.rem_euclid(3) == 0,
                });
                let lift = eps * q((2 * m + s).rem_euclid(3));
                for p in p0..=p1 {
                    let z = q(2 * p + o) + lift;
                    raw.push(Sheet {
                        normal: 2,
                        lo: [x, y0, z],
                        hi: [x1, y1, z],
                        colour,
                        coarse: p.rem_euclid(3) == 0,
                    });
                }
            }
        }
    }
    raw.into_iter()
        .filter_map(|mut s| {
            for a in 0..3 {
                s.lo[a] = s.lo[a].max(bounds.lo[a]);
                s.hi[a] = s.hi[a].min(bounds.hi[a]);
                let ok = if a == s.normal { s.lo[a] == s.hi[a] } else { s.lo[a] < s.hi[a] };
                if !ok {
                    return None;
                }
            }
            Some(s)
        })
        .collect()
}

type FineEdge = (usize, [usize; 3]);

/// Canonical cell decomposition of a union of sheets in one spatial slice.
struct Arrangement {
    grid: [Vec<Q>; 3],
    points: Vec<[usize; 3]>,
    /// `(from, to, axis)` with `from` at the lower coordinate.
    edges: Vec<(usize, usize, usize)>,
    faces: Vec<(GpsColour, Vec<(usize, bool)>)>,
    coarse: Vec<(usize, GpsColour)>,
}

fn other_axes(n: usize) -> (usize, usize) {
    match n {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

impl Arrangement {
    fn build(sheets: &[Sheet], bounds: &Bounds) -> Result<Arrangement> {
        let mut vals: [BTreeSet<Q>; 3] = Default::default();
        for (a, v) in vals.iter_mut().enumerate() {
            v.insert(bounds.lo[a]);
            v.insert(bounds.hi[a]);
            for s in sheets {
                v.insert(s.lo[a]);
                v.insert(s.hi[a]);
            }
        }
        let grid: [Vec<Q>; 3] = vals.map(|s| s.into_iter().collect());
        let idx = |a: usize, x: Q| grid[a].binary_search(&x).expect("grid holds every sheet coordinate");

        let mut covered: HashSet<FineEdge> = HashSet::new();
        let mut mark = |axis: usize, base: [Q; 3], from: Q, to: Q| {
            let mut p = [0usize; 3];
            for b in 0..3 {
                if b != axis {
                    p[b] = idx(b, base[b]);
                }
            }
            for i in idx(axis, from)..idx(axis, to) {
                p[axis] = i;
                covered.insert((axis, p));
            }
        };
        for s in sheets {
            let (u, v) = other_axes(s.normal);
            for (along, across) in [(u, v), (v, u)] {
                for side in [s.lo[across], s.hi[across]] {
                    let mut base = s.lo;
                    base[across] = side;
                    mark(along, base, s.lo[along], s.hi[along]);
                }
            }
        }
        for (i, s1) in sheets.iter().enumerate() {
            for s2 in &sheets[i + 1..] {
                let (n1, n2) = (s1.normal, s2.normal);
                if n1 == n2 {
                    continue;
                }
                let a = 3 - n1 - n2;
                let (c1, c2) = (s1.lo[n1], s2.lo[n2]);
                if !(s2.lo[n1] <= c1 && c1 <= s2.hi[n1] && s1.lo[n2] <= c2 && c2 <= s1.hi[n2]) {
                    continue;
                }
                let lo = s1.lo[a].max(s2.lo[a]);
                let hi = s1.hi[a].min(s2.hi[a]);
                if lo < hi {
                    let mut base = [Q::zero(); 3];
                    base[n1] = c1;
                    base[n2] = c2;
                    mark(a, base, lo, hi);
                }
            }
        }

        let mut mask: HashMap<[usize; 3], u8> = HashMap::new();
        for &(a, p) in &covered {
            *mask.entry(p).or_insert(0) |= 1 << (2 * a);
            let mut q = p;
            q[a] += 1;
            *mask.entry(q).or_insert(0) |= 1 << (2 * a + 1);
        }
        let is_vertex = |m: u8| m != 0 && !(0..3).any(|a| m == 0b11 << (2 * a));
        let mut points: Vec<[usize; 3]> =
            mask.iter().filter(|(_, &m)| is_vertex(m)).map(|(&p, _)| p).collect();
        points.sort();
        let point_index: HashMap<[usize; 3], usize> =
            points.iter().enumerate().map(|(i, &p)| (p, i)).collect();

        let mut edges = Vec::new();
        let mut fine_to_edge: HashMap<FineEdge, usize> = HashMap::new();
        for (i, &p) in points.iter().enumerate() {
            for a in 0..3 {
                if mask[&p] & (1 << (2 * a)) == 0 {
                    continue;
                }
                let id = edges.len();
                let mut q = p;
                loop {
                    fine_to_edge.insert((a, q), id);
                    q[a] += 1;
                    if let Some(&j) = point_index.get(&q) {
                        edges.push((i, j, a));
                        break;
                    }
                }
            }
        }

        let mut owner: HashMap<(usize, usize, usize, usize), usize> = HashMap::new();
        let mut faces = Vec::new();
        for (si, s) in sheets.iter().enumerate() {
            let (u, v) = other_axes(s.normal);
            let plane = idx(s.normal, s.lo[s.normal]);
            let (i0, i1) = (idx(u, s.lo[u]), idx(u, s.hi[u]));
            let (j0, j1) = (idx(v, s.lo[v]), idx(v, s.hi[v]));
            let point = |i: usize, j: usize| {
                let mut p = [0usize; 3];
                p[s.normal] = plane;
                p[u] = i;
                p[v] = j;
                p
            };
            for i in i0..i1 {
                for j in j0..j1 {
                    if let Some(other) = owner.insert((s.normal, plane, i, j), si) {
                        return Err(invariant_err!("sheets {other} and {si} overlap"));
                    }
                }
            }
            let (w, h) = (i1 - i0, j1 - j0);
            let mut region = vec![usize::MAX; w * h];
            let mut regions: Vec<(usize, usize, usize, usize, usize)> = Vec::new();
            for start in 0..w * h {
                if region[start] != usize::MAX {
                    continue;
                }
                let r = regions.len();
                let mut stack = vec![start];
                region[start] = r;
                let (mut lo_i, mut hi_i, mut lo_j, mut hi_j, mut count) = (usize::MAX, 0, usize::MAX, 0, 0);
                while let Some(c) = stack.pop() {
                    let (i, j) = (c % w, c / w);
                    count += 1;
                    lo_i = lo_i.min(i);
                    hi_i = hi_i.max(i);
                    lo_j = lo_j.min(j);
                    hi_j = hi_j.max(j);
                    let mut next = Vec::with_capacity(4);
                    if i + 1 < w && !covered.contains(&(v, point(i0 + i + 1, j0 + j))) {
                        next.push(c + 1);
                    }
                    if i > 0 && !covered.contains(&(v, point(i0 + i, j0 + j))) {
                        next.push(c - 1);
                    }
                    if j + 1 < h && !covered.contains(&(u, point(i0 + i, j0 + j + 1))) {
                        next.push(c + w);
                    }
                    if j > 0 && !covered.contains(&(u, point(i0 + i, j0 + j))) {
                        next.push(c - w);
                    }
                    for n in next {
                        if region[n] == usize::MAX {
                            region[n] = r;
                            stack.push(n);
                        }
                    }
                }
                if count != (hi_i - lo_i + 1) * (hi_j - lo_j + 1) {
                    return Err(invariant_err!("a face of sheet {si} is not a rectangle"));
                }
                regions.push((i0 + lo_i, i0 + hi_i + 1, j0 + lo_j, j0 + hi_j + 1, r));
            }
            for (a0, a1, b0, b1, _) in regions {
                let mut walk: Vec<(usize, bool)> = Vec::new();
                let mut step = |fine: FineEdge, fwd: bool| -> Result<()> {
                    let e = *fine_to_edge
                        .get(&fine)
                        .ok_or_else(|| invariant_err!("uncovered face boundary in sheet {si}"))?;
                    if walk.last().map(|&(x, _)| x) != Some(e) {
                        walk.push((e, fwd));
                    }
                    Ok(())
                };
                for i in a0..a1 {
                    step((u, point(i, b0)), true)?;
                }
                for j in b0..b1 {
                    step((v, point(a1, j)), true)?;
                }
                for i in (a0..a1).rev() {
                    step((u, point(i, b1)), false)?;
                }
                for j in (b0..b1).rev() {
                    step((v, point(a0, j)), false)?;
                }
                faces.push((s.colour, walk));
            }
        }

        let mut coarse = Vec::new();
        for (ei, &(a, b, _)) in edges.iter().enumerate() {
            let (pa, pb) = (points[a], points[b]);
            let pos = |p: [usize; 3]| [grid[0][p[0]], grid[1][p[1]], grid[2][p[2]]];
            let (xa, xb) = (pos(pa), pos(pb));
            for colour in [GpsColour::Black, GpsColour::Orange] {
                let normals: BTreeSet<usize> = sheets
                    .iter()
                    .filter(|s| s.coarse && s.colour == colour)
                    .filter(|s| (0..3).all(|k| s.lo[k] <= xa[k].min(xb[k]) && xa[k].max(xb[k]) <= s.hi[k]))
                    .map(|s| s.normal)
                    .collect();
                if normals.len() >= 2 {
                    coarse.push((ei, colour));
                }
            }
        }
        Ok(Arrangement { grid, points, edges, faces, coarse })
    }

    fn coords(&self, i: usize) -> [Q; 3] {
        let p = self.points[i];
        [self.grid[0][p[0]], self.grid[1][p[1]], self.grid[2][p[2]]]
    }
}

fn check_eps(eps: Q) -> Result<()> {
    if eps.is_negative() || eps >= Q::new(1, 4) {
        return Err(input_err!("eps must lie in [0, 1/4), got {eps}"));
    }
    Ok(())
}

/// The spatial structure on `bounds`. `eps = 0` gives the unperturbed lattice.
pub fn build_gps3(bounds: &Bounds, eps: Q) -> Result<GpsComplex> {
    check_eps(eps)?;
    let arr = Arrangement::build(&sheets(bounds, eps), bounds)?;
    assemble(&arr, bounds, eps, Vec::new())
}

/// Spatial slices at consecutive integer times joined by temporal rectangles
/// over the vertical coarse black edges on bands `[t, t+1]` with `t+1` even and
/// over the vertical coarse orange edges on the other bands.
pub fn build_gps4(bounds: &Bounds, times: &[i64], eps: Q) -> Result<GpsComplex> {
    check_eps(eps)?;
    if times.len() < 2 {
        return Err(input_err!("need at least two time slices"));
    }
    if times.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(input_err!("slice times must be consecutive integers"));
    }
    let arr = Arrangement::build(&sheets(bounds, eps), bounds)?;
    assemble(&arr, bounds, eps, times.to_vec())
}

/// Colour of the temporal band `[t, t+1]`.
pub fn band_colour(t: i64) -> GpsColour {
    if (t + 1).rem_euclid(2) == 0 {
        GpsColour::Black
    } else {
        GpsColour::Orange
    }
}

fn assemble(arr: &Arrangement, bounds: &Bounds, eps: Q, times: Vec<i64>) -> Result<GpsComplex> {
    let slices: Vec<Option<i64>> =
        if times.is_empty() { vec![None] } else { times.iter().map(|&t| Some(t)).collect() };
    let (nv, ne, nf) = (arr.points.len() as u32, arr.edges.len() as u32, arr.faces.len() as u32);
    let mut g = Graph::new();
    let mut coords = BTreeMap::new();
    let mut coarse = BTreeMap::new();
    for (s, t) in slices.iter().enumerate() {
        let s = s as u32;
        for i in 0..arr.points.len() {
            let id = s * nv + i as u32;
            g.add_vertex(id);
            let mut c = arr.coords(i).to_vec();
            if let Some(t) = t {
                c.push(q(*t));
            }
            coords.insert(id, c);
        }
        for (i, &(a, b, _)) in arr.edges.iter().enumerate() {
            g.add_edge(s * ne + i as u32 + 1, s * nv + a as u32, s * nv + b as u32)?;
        }
        for &(e, colour) in &arr.coarse {
            coarse.insert(s * ne + e as u32 + 1, colour);
        }
    }
    let mut next_edge = slices.len() as u32 * ne + 1;
    let mut temporal_faces = Vec::new();
    for (b, w) in times.windows(2).enumerate() {
        let colour = band_colour(w[0]);
        let (lower, upper) = (b as u32, b as u32 + 1);
        let band_edges: Vec<usize> = arr
            .coarse
            .iter()
            .filter(|&&(e, c)| c == colour && arr.edges[e].2 == 2)
            .map(|&(e, _)| e)
            .collect();
        let band_points: BTreeSet<usize> =
            band_edges.iter().flat_map(|&e| [arr.edges[e].0, arr.edges[e].1]).collect();
        let mut rung = BTreeMap::new();
        for &p in &band_points {
            g.add_edge(next_edge, lower * nv + p as u32, upper * nv + p as u32)?;
            rung.insert(p, next_edge);
            next_edge += 1;
        }
        for &e in &band_edges {
            let (a, c, _) = arr.edges[e];
            temporal_faces.push(vec![
                SignedEdge::fwd(lower * ne + e as u32 + 1),
                SignedEdge::fwd(rung[&c]),
                SignedEdge::back(upper * ne + e as u32 + 1),
                SignedEdge::back(rung[&a]),
            ]);
        }
    }
    let mut k = TwoComplex::new(g);
    let mut face_colour = BTreeMap::new();
    for s in 0..slices.len() as u32 {
        for (i, (colour, walk)) in arr.faces.iter().enumerate() {
            let id = s * nf + i as u32 + 1;
            let walk = walk
                .iter()
                .map(|&(e, fwd)| SignedEdge { edge: s * ne + e as u32 + 1, forward: fwd })
                .collect();
            k.add_face(id, walk, Labels::none())?;
            face_colour.insert(id, *colour);
        }
    }
    let mut next_face = slices.len() as u32 * nf + 1;
    for walk in temporal_faces {
        k.add_face(next_face, walk, Labels::none())?;
        face_colour.insert(next_face, GpsColour::Temporal);
        next_face += 1;
    }
    Ok(GpsComplex { complex: k, coords, face_colour, coarse, eps, bounds: bounds.clone(), times })
}

/// Shape of the link of a vertex in one colour after suppressing degree-2 nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkType {
    Circle,
    Theta,
    K4,
    Other(String),
}

impl LinkType {
    pub fn is_generic(&self) -> bool {
        !matches!(self, LinkType::Other(_))
    }
}

/// Classifies a multigraph given by its edge list.
pub fn classify_link(arcs: &[(u8, u8)]) -> LinkType {
    let mut edges: Vec<(u8, u8)> = arcs.to_vec();
    let nodes: BTreeSet<u8> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    if nodes.is_empty() {
        return LinkType::Other("empty link".into());
    }
    let mut adj: BTreeMap<u8, Vec<u8>> = BTreeMap::new();
    for &(a, b) in &edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen = BTreeSet::from([*nodes.iter().next().expect("nonempty")]);
    let mut stack: Vec<u8> = seen.iter().copied().collect();
    while let Some(x) = stack.pop() {
        for &y in &adj[&x] {
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    if seen.len() != nodes.len() {
        return LinkType::Other("disconnected link".into());
    }
    let degree = |edges: &[(u8, u8)], x: u8| -> usize {
        edges.iter().map(|&(a, b)| usize::from(a == x) + usize::from(b == x)).sum()
    };
    if nodes.iter().all(|&x| degree(&edges, x) == 2) {
        return LinkType::Circle;
    }
    loop {
        let live: BTreeSet<u8> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        let Some(x) = live.into_iter().find(|&x| degree(&edges, x) == 2 && !edges.contains(&(x, x))) else {
            break;
        };
        let mut ends = Vec::new();
        edges.retain(|&(a, b)| {
            if a == x {
                ends.push(b);
                false
            } else if b == x {
                ends.push(a);
                false
            } else {
                true
            }
        });
        edges.push((ends[0].min(ends[1]), ends[0].max(ends[1])));
    }
    let live: BTreeSet<u8> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let simple: BTreeSet<(u8, u8)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let no_loops = edges.iter().all(|&(a, b)| a != b);
    match (live.len(), edges.len()) {
        (2, 3) if no_loops => LinkType::Theta,
        (4, 6) if no_loops && simple.len() == 6 => LinkType::K4,
        (n, m) => LinkType::Other(format!("{n} branch nodes and {m} arcs")),
    }
}

/// Pass/fail of one condition with a short explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub ok: bool,
    pub detail: String,
}

impl Check {
    pub(crate) fn pass(detail: impl Into<String>) -> Self {
        Check { ok: true, detail: detail.into() }
    }

    pub(crate) fn fail(detail: impl Into<String>) -> Self {
        Check { ok: false, detail: detail.into() }
    }
}

/// Outcome of checks a) to f) on a lattice structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definition5Report {
    pub a: Check,
    pub b: Check,
    pub c: Check,
    pub d: Check,
    pub e: Check,
    pub f: Check,
}

impl Definition5Report {
    pub fn all_ok(&self) -> bool {
        self.conditions().iter().all(|(_, c)| c.ok)
    }

    pub fn conditions(&self) -> [(char, &Check); 6] {
        [('a', &self.a), ('b', &self.b), ('c', &self.c), ('d', &self.d), ('e', &self.e), ('f', &self.f)]
    }

    pub fn failed(&self) -> Vec<char> {
        self.conditions().iter().filter(|(_, c)| !c.ok).map(|(n, _)| *n).collect()
    }
}

/// Per-face geometry derived from the coordinates.
struct Geometry {
    edge_axis: BTreeMap<EdgeId, usize>,
    /// Spanned axes and, for faces inside a slice, the fixed coordinate of the normal.
    face_axes: BTreeMap<FaceId, (usize, usize)>,
}

impl Geometry {
    fn new(k: &GpsComplex) -> Result<Geometry> {
        let width = k.dim();
        for (v, c) in &k.coords {
            if c.len() != width {
                return Err(input_err!("vertex {v} has {} coordinates, expected {width}", c.len()));
            }
        }
        for v in k.complex.skeleton.vertices() {
            if !k.coords.contains_key(&v) {
                return Err(input_err!("vertex {v} has no coordinates"));
            }
        }
        let mut edge_axis = BTreeMap::new();
        for e in k.complex.skeleton.edge_ids() {
            let a = k.edge_axis(e).ok_or_else(|| input_err!("edge {e} is not axis-parallel"))?;
            edge_axis.insert(e, a);
        }
        let mut face_axes = BTreeMap::new();
        for (f, face) in k.complex.faces() {
            let axes: BTreeSet<usize> = face.walk.iter().map(|se| edge_axis[&se.edge]).collect();
            let v: Vec<usize> = axes.into_iter().collect();
            if v.len() != 2 {
                return Err(input_err!("face {f} does not span exactly two axes"));
            }
            face_axes.insert(f, (v[0], v[1]));
        }
        Ok(Geometry { edge_axis, face_axes })
    }

    fn is_spatial(&self, f: FaceId) -> bool {
        self.face_axes[&f].1 < T_AXIS
    }

    fn normal(&self, f: FaceId) -> usize {
        let (a, b) = self.face_axes[&f];
        3 - a - b
    }
}

fn face_vertices(k: &GpsComplex, f: FaceId) -> Vec<VertexId> {
    k.complex.face(f).map_or_else(Vec::new, |face| {
        face.walk
            .iter()
            .map(|&se| k.complex.skeleton.oriented_ends(se).expect("walk edge exists").0)
            .collect()
    })
}

fn z_range(k: &GpsComplex, vs: &[VertexId]) -> (Q, Q) {
    let zs = vs.iter().map(|v| k.coords[v][2]);
    let lo = zs.clone().min().expect("nonempty");
    (lo, zs.max().expect("nonempty"))
}

/// Direction of travel along an arrow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlowDir {
    #[serde(rename = "-z")]
    DownZ,
    #[serde(rename = "+t")]
    UpT,
    #[serde(rename = "-t")]
    DownT,
}

/// A face collapsed from the edge `via` towards the opposite side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowArrow {
    pub face: FaceId,
    pub via: EdgeId,
    pub dir: FlowDir,
    pub colour: GpsColour,
    /// Time of the slice holding `via`.
    pub slice: i64,
}

/// The collapse of the structure minus its horizontal faces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlueFlow {
    /// Deleted horizontal faces.
    pub gamma1: Vec<FaceId>,
    pub schedule: CollapseSchedule,
    pub arrows: Vec<FlowArrow>,
    /// Next face down the same sheet.
    pub successor: BTreeMap<FaceId, FaceId>,
    /// Faces with more than one candidate successor.
    pub bifurcations: Vec<FaceId>,
    /// Cells on the floor and side walls of the box; the collapse target.
    pub frame: BTreeSet<Cell>,
}

impl BlueFlow {
    /// The complex with the horizontal faces removed.
    pub fn truncation(&self, k: &GpsComplex) -> TwoComplex {
        let mut out = k.complex.clone();
        for &f in &self.gamma1 {
            out.remove_face(f);
        }
        out
    }
}

/// Collapses every vertical and temporal face downwards from the top of the
/// box, then prunes the remaining graph onto the floor and side walls.
pub fn blue_flow(k: &GpsComplex, barriers: Option<&Bounds>) -> Result<BlueFlow> {
    if let Some(b) = barriers {
        if !b.encloses(&k.bounds) {
            return Err(input_err!("barriers do not enclose the truncation box"));
        }
    }
    let geo = Geometry::new(k)?;
    for (v, c) in &k.coords {
        if !k.bounds.contains(c) {
            return Err(input_err!("vertex {v} lies outside the box"));
        }
    }
    let on_barrier = |vs: &[VertexId]| {
        let walls = [(0, k.bounds.lo[0]), (0, k.bounds.hi[0]), (1, k.bounds.lo[1]), (1, k.bounds.hi[1]), (2, k.bounds.lo[2])];
        walls.iter().any(|&(a, x)| vs.iter().all(|v| k.coords[v][a] == x))
    };
    let mut frame: BTreeSet<Cell> = BTreeSet::new();
    for v in k.complex.skeleton.vertices() {
        if on_barrier(&[v]) {
            frame.insert(Cell::Vertex(v));
        }
    }
    for (e, u, v) in k.complex.skeleton.edges() {
        if on_barrier(&[u, v]) {
            frame.insert(Cell::Edge(e));
        }
    }
    let mut gamma1 = Vec::new();
    let mut items: Vec<(Reverse<Q>, u8, FaceId, EdgeId, FlowDir, i64)> = Vec::new();
    let mut successor = BTreeMap::new();
    let mut bifurcations = Vec::new();
    for (f, face) in k.complex.faces() {
        let (a, b) = geo.face_axes[&f];
        if a != 2 && b != 2 {
            gamma1.push(f);
            continue;
        }
        let vs = face_vertices(k, f);
        if on_barrier(&vs) {
            frame.insert(Cell::Face(f));
            continue;
        }
        let (zlo, ztop) = z_range(k, &vs);
        let at_z = |se: &SignedEdge, z: Q| {
            let (u, v) = k.complex.skeleton.endpoints(se.edge).expect("edge exists");
            k.coords[&u][2] == z && k.coords[&v][2] == z
        };
        if geo.is_spatial(f) {
            let via = face
                .walk
                .iter()
                .filter(|se| at_z(se, ztop))
                .map(|se| se.edge)
                .min()
                .ok_or_else(|| invariant_err!("face {f} has no top edge"))?;
            let slice = k.time_of(vs[0]);
            items.push((Reverse(ztop), 0, f, via, FlowDir::DownZ, slice));
            let plane = k.coords[&vs[0]][geo.normal(f)];
            let mut below = BTreeSet::new();
            for se in face.walk.iter().filter(|se| at_z(se, zlo)) {
                for (g, _) in k.complex.faces_on_edge(se.edge) {
                    if g != f
                        && geo.is_spatial(g)
                        && geo.face_axes[&g] == geo.face_axes[&f]
                        && k.coords[&face_vertices(k, g)[0]][geo.normal(g)] == plane
                    {
                        below.insert(g);
                    }
                }
            }
            match below.len() {
                0 => {}
                1 => {
                    successor.insert(f, *below.iter().next().expect("one"));
                }
                _ => bifurcations.push(f),
            }
        } else {
            let ts: BTreeSet<i64> = vs.iter().map(|&v| k.time_of(v)).collect();
            let (t0, t1) = (*ts.iter().next().expect("two times"), *ts.iter().next_back().expect("two times"));
            let (start, dir) = if t1.abs() > t0.abs() { (t1, FlowDir::DownT) } else { (t0, FlowDir::UpT) };
            let via = face
                .walk
                .iter()
                .find(|se| geo.edge_axis[&se.edge] == 2 && {
                    let (u, _) = k.complex.skeleton.endpoints(se.edge).expect("edge exists");
                    k.time_of(u) == start
                })
                .map(|se| se.edge)
                .ok_or_else(|| invariant_err!("temporal face {f} has no vertical edge at t = {start}"))?;
            items.push((Reverse(ztop), 1, f, via, dir, start));
        }
    }
    items.sort();
    let mut work = k.complex.clone();
    for &f in &gamma1 {
        work.remove_face(f);
    }
    let mut steps = Vec::with_capacity(items.len());
    let mut arrows = Vec::with_capacity(items.len());
    for &(_, kind, f, via, dir, slice) in &items {
        let pair = CollapsePair::edge_face(via, f);
        work.collapse_in_place(pair)
            .map_err(|_| invariant_err!("face {f} is not free along edge {via}"))?;
        steps.push(pair);
        let colour = if kind == 0 {
            k.face_colour.get(&f).copied().unwrap_or(GpsColour::Black)
        } else {
            let (lo_t, _) = if dir == FlowDir::DownT { (slice - 1, slice) } else { (slice, slice + 1) };
            band_colour(lo_t)
        };
        arrows.push(FlowArrow { face: f, via, dir, colour, slice });
    }
    if frame.is_empty() {
        return Err(invariant_err!("no cell lies on the barriers"));
    }
    steps.extend(prune_leaves(&mut work, &frame));
    let residue: Vec<Cell> = work.cells().difference(&frame).copied().collect();
    if !residue.is_empty() {
        return Err(invariant_err!(
            "{} cells above the floor survive the collapse, first {:?}",
            residue.len(),
            residue[0]
        ));
    }
    Ok(BlueFlow {
        gamma1,
        schedule: CollapseSchedule { steps },
        arrows,
        successor,
        bifurcations,
        frame,
    })
}

/// Signed axis direction from `v` along edge `e`, encoded as `2·axis + (negative)`.
fn direction(k: &GpsComplex, geo: &Geometry, v: VertexId, e: EdgeId) -> u8 {
    let a = geo.edge_axis[&e];
    let (x, y) = k.complex.skeleton.endpoints(e).expect("edge exists");
    let other = if x == v { y } else { x };
    let neg = k.coords[&other][a] < k.coords[&v][a];
    (2 * a + usize::from(neg)) as u8
}

/// Link arcs of the faces of one colour at each vertex of a slice.
fn colour_links(k: &GpsComplex, geo: &Geometry) -> BTreeMap<(VertexId, GpsColour), Vec<(u8, u8)>> {
    let mut out: BTreeMap<(VertexId, GpsColour), Vec<(u8, u8)>> = BTreeMap::new();
    for (f, face) in k.complex.faces() {
        if !geo.is_spatial(f) {
            continue;
        }
        let colour = k.face_colour.get(&f).copied().unwrap_or(GpsColour::Black);
        let vs = face_vertices(k, f);
        let n = face.walk.len();
        let (fa, fb) = geo.face_axes[&f];
        for i in 0..n {
            let v = vs[i];
            let d_in = direction(k, geo, v, face.walk[(i + n - 1) % n].edge);
            let d_out = direction(k, geo, v, face.walk[i].edge);
            let arcs = out.entry((v, colour)).or_default();
            if d_in / 2 == d_out / 2 {
                let w = if usize::from(d_in / 2) == fa { fb } else { fa };
                let neg = vs.iter().any(|u| k.coords[u][w] < k.coords[&v][w]);
                let mid = (2 * w + usize::from(neg)) as u8;
                arcs.push((d_in, mid));
                arcs.push((mid, d_out));
            } else {
                arcs.push((d_in, d_out));
            }
        }
    }
    out
}

/// Spatial edges of `X¹(colour)`: where that colour's faces are not two
/// coplanar faces meeting along the edge.
fn colour_skeleton(k: &GpsComplex, geo: &Geometry, colour: GpsColour) -> BTreeSet<EdgeId> {
    let mut out = BTreeSet::new();
    for (&e, &a) in &geo.edge_axis {
        if a == T_AXIS {
            continue;
        }
        let normals: Vec<usize> = k
            .complex
            .faces_on_edge(e)
            .filter(|(f, _)| geo.is_spatial(*f) && k.face_colour.get(f) == Some(&colour))
            .map(|(f, _)| geo.normal(f))
            .collect();
        let flat = normals.len() == 2 && normals[0] == normals[1];
        if !normals.is_empty() && !flat {
            out.insert(e);
        }
    }
    out
}

fn on_frontier_edge(k: &GpsComplex, e: EdgeId) -> bool {
    let (u, v) = k.complex.skeleton.endpoints(e).expect("edge exists");
    let (a, b) = (&k.coords[&u], &k.coords[&v]);
    (0..3).any(|i| a[i] == b[i] && (a[i] == k.bounds.lo[i] || a[i] == k.bounds.hi[i]))
}

fn check_a(k: &GpsComplex, geo: &Geometry) -> Check {
    let black = colour_skeleton(k, geo, GpsColour::Black);
    let orange = colour_skeleton(k, geo, GpsColour::Orange);
    let interior = |e: &EdgeId| !on_frontier_edge(k, *e);
    if let Some(e) = black.intersection(&orange).find(|e| interior(e)) {
        return Check::fail(format!("edge {e} lies in both colour skeleta"));
    }
    let ends = |set: &BTreeSet<EdgeId>| -> BTreeSet<VertexId> {
        set.iter()
            .filter(|e| interior(e))
            .flat_map(|&e| {
                let (u, v) = k.complex.skeleton.endpoints(e).expect("edge exists");
                [u, v]
            })
            .filter(|v| !k.bounds.on_boundary(&k.coords[v]))
            .collect()
    };
    let (bv, ov) = (ends(&black), ends(&orange));
    match bv.intersection(&ov).next() {
        Some(v) => Check::fail(format!("vertex {v} lies on both colour skeleta")),
        None => Check::pass(format!(
            "{} black and {} orange skeleton edges, disjoint",
            black.len(),
            orange.len()
        )),
    }
}

fn check_b(k: &GpsComplex, geo: &Geometry) -> Check {
    let links = colour_links(k, geo);
    let black = colour_skeleton(k, geo, GpsColour::Black);
    let orange = colour_skeleton(k, geo, GpsColour::Orange);
    type LinkEntry<'a> = (GpsColour, LinkType, &'a Vec<(u8, u8)>);
    let mut by_vertex: BTreeMap<VertexId, Vec<LinkEntry>> = BTreeMap::new();
    for ((v, colour), arcs) in &links {
        by_vertex.entry(*v).or_default().push((*colour, classify_link(arcs), arcs));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (v, entries) in &by_vertex {
        if k.bounds.on_boundary(&k.coords[v]) {
            continue;
        }
        for (colour, link, _) in entries {
            if !link.is_generic() {
                return Check::fail(format!("vertex {v}: {colour:?} link is not generic ({link:?})"));
            }
            let name = match link {
                LinkType::Circle => "circle",
                LinkType::Theta => "theta",
                _ => "K4",
            };
            *counts.entry(name).or_default() += 1;
        }
        if entries.len() == 2 {
            let singular: Vec<usize> =
                (0..2).filter(|&i| entries[i].1 != LinkType::Circle).collect();
            let plane_normal = |arcs: &Vec<(u8, u8)>| -> BTreeSet<u8> {
                let axes: BTreeSet<u8> = arcs.iter().flat_map(|&(a, b)| [a / 2, b / 2]).collect();
                (0..3u8).filter(|a| !axes.contains(a)).collect()
            };
            match singular.as_slice() {
                [] => {
                    if plane_normal(entries[0].2) == plane_normal(entries[1].2) {
                        return Check::fail(format!("vertex {v}: the two colours are tangent"));
                    }
                }
                [i] => {
                    let (colour, _, _) = entries[*i];
                    let skel = if colour == GpsColour::Black { &black } else { &orange };
                    let axes: BTreeSet<u8> = k
                        .complex
                        .skeleton
                        .incident_edges(*v)
                        .into_iter()
                        .filter(|e| skel.contains(e))
                        .map(|e| geo.edge_axis[&e] as u8)
                        .collect();
                    let normal = plane_normal(entries[1 - i].2);
                    if axes.len() != 1 || axes != normal {
                        return Check::fail(format!("vertex {v}: {colour:?} skeleton meets the other colour non-transversally"));
                    }
                }
                _ => return Check::fail(format!("vertex {v} is singular in both colours")),
            }
        }
    }
    let summary: Vec<String> = counts.iter().map(|(n, c)| format!("{c} {n}")).collect();
    Check::pass(format!("interior vertex links: {}", summary.join(", ")))
}

fn check_c(k: &GpsComplex, flow: &Result<BlueFlow>) -> Check {
    let flow = match flow {
        Ok(f) => f,
        Err(e) => return Check::fail(e.to_string()),
    };
    match flow.schedule.apply(&flow.truncation(k)) {
        Ok(rest) if rest.cells() == flow.frame => Check::pass(format!(
            "{} horizontal faces deleted, {} collapses reach the floor",
            flow.gamma1.len(),
            flow.schedule.len()
        )),
        Ok(_) => Check::fail("the collapse stops above the floor"),
        Err(e) => Check::fail(e.to_string()),
    }
}

fn check_d(k: &GpsComplex, geo: &Geometry, flow: &Result<BlueFlow>) -> Check {
    let flow = match flow {
        Ok(f) => f,
        Err(e) => return Check::fail(e.to_string()),
    };
    if let Some(f) = flow.bifurcations.first() {
        return Check::fail(format!("face {f} has more than one successor"));
    }
    for arrow in flow.arrows.iter().filter(|a| a.dir == FlowDir::DownZ) {
        let vs = face_vertices(k, arrow.face);
        let (_, top) = z_range(k, &vs);
        let (u, v) = k.complex.skeleton.endpoints(arrow.via).expect("edge exists");
        let (fa, fb) = geo.face_axes[&arrow.face];
        if fb != 2 || fa == 2 || geo.edge_axis[&arrow.via] != fa {
            return Check::fail(format!("arrow on face {} is not a z-segment", arrow.face));
        }
        if k.coords[&u][2] != top || k.coords[&v][2] != top {
            return Check::fail(format!("arrow on face {} does not start at its top", arrow.face));
        }
    }
    for (f, g) in &flow.successor {
        let (_, top_f) = z_range(k, &face_vertices(k, *f));
        let (_, top_g) = z_range(k, &face_vertices(k, *g));
        if top_g >= top_f {
            return Check::fail(format!("successor of face {f} does not lie lower"));
        }
    }
    Check::pass(format!(
        "{} z-arrows, {} successor links, no bifurcation",
        flow.arrows.iter().filter(|a| a.dir == FlowDir::DownZ).count(),
        flow.successor.len()
    ))
}

fn check_e(k: &GpsComplex, geo: &Geometry) -> Check {
    for v in k.complex.skeleton.vertices() {
        let n = k
            .complex
            .skeleton
            .incident_edges(v)
            .into_iter()
            .filter(|e| geo.edge_axis[e] == T_AXIS)
            .count();
        if n > 1 {
            return Check::fail(format!("vertex {v} has {n} temporal edges"));
        }
    }
    Check::pass("at most one temporal edge per vertex")
}

fn check_f(k: &GpsComplex) -> Check {
    if k.dim() == 3 {
        return Check::pass("single spatial slice");
    }
    for (v, c) in &k.coords {
        let t = c[T_AXIS];
        if !t.is_integer() || !k.times.contains(&t.to_integer()) {
            return Check::fail(format!("vertex {v} lies between slices at t = {t}"));
        }
    }
    Check::pass(format!("all vertices on the {} slices", k.times.len()))
}

/// Runs checks a) to f); malformed geometry fails every condition.
pub fn verify_definition5(k: &GpsComplex) -> Definition5Report {
    let geo = match Geometry::new(k) {
        Ok(g) => g,
        Err(e) => {
            let c = Check::fail(e.to_string());
            return Definition5Report { a: c.clone(), b: c.clone(), c: c.clone(), d: c.clone(), e: c.clone(), f: c };
        }
    };
    let flow = blue_flow(k, None);
    Definition5Report {
        a: check_a(k, &geo),
        b: check_b(k, &geo),
        c: check_c(k, &flow),
        d: check_d(k, &geo, &flow),
        e: check_e(k, &geo),
        f: check_f(k),
    }
}

#[derive(Serialize, Deserialize)]
struct VertexJson {
    id: VertexId,
    at: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    id: EdgeId,
    ends: [VertexId; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coarse: Option<GpsColour>,
}

#[derive(Serialize, Deserialize)]
struct FaceJson {
    id: FaceId,
    walk: Vec<i64>,
    colour: GpsColour,
}

#[derive(Serialize, Deserialize)]
struct GpsJson {
    dim: usize,
    eps: String,
    bounds: [[String; 2]; 3],
    #[serde(default)]
    times: Vec<i64>,
    vertices: Vec<VertexJson>,
    edges: Vec<EdgeJson>,
    faces: Vec<FaceJson>,
}

impl Serialize for GpsComplex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let j = GpsJson {
            dim: self.dim(),
            eps: self.eps.to_string(),
            bounds: [0, 1, 2].map(|a| [self.bounds.lo[a].to_string(), self.bounds.hi[a].to_string()]),
            times: self.times.clone(),
            vertices: self
                .coords
                .iter()
                .map(|(&id, c)| VertexJson { id, at: c.iter().map(|x| x.to_string()).collect() })
                .collect(),
            edges: self
                .complex
                .skeleton
                .edges()
                .map(|(id, u, v)| EdgeJson { id, ends: [u, v], coarse: self.coarse.get(&id).copied() })
                .collect(),
            faces: self
                .complex
                .faces()
                .map(|(id, f)| FaceJson {
                    id,
                    walk: f.walk.iter().map(|se| se.to_signed()).collect(),
                    colour: self.face_colour.get(&id).copied().unwrap_or(GpsColour::Black),
                })
                .collect(),
        };
        j.serialize(s)
    }
}

impl TryFrom<GpsJson> for GpsComplex {
    type Error = Error;

    fn try_from(j: GpsJson) -> Result<Self> {
        let eps = parse_rational(&j.eps)?;
        let mut lo = [Q::zero(); 3];
        let mut hi = [Q::zero(); 3];
        for a in 0..3 {
            lo[a] = parse_rational(&j.bounds[a][0])?;
            hi[a] = parse_rational(&j.bounds[a][1])?;
        }
        let bounds = Bounds::new(lo, hi)?;
        if (j.dim == 3) != j.times.is_empty() || !(j.dim == 3 || j.dim == 4) {
            return Err(input_err!("dim {} does not match {} slice times", j.dim, j.times.len()));
        }
        let mut g = Graph::new();
        let mut coords = BTreeMap::new();
        for v in &j.vertices {
            let c = v.at.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
            if c.len() != j.dim {
                return Err(input_err!("vertex {} has {} coordinates", v.id, c.len()));
            }
            if !g.add_vertex(v.id) {
                return Err(input_err!("duplicate vertex {}", v.id));
            }
            coords.insert(v.id, c);
        }
        let mut coarse = BTreeMap::new();
        for e in &j.edges {
            g.add_edge(e.id, e.ends[0], e.ends[1])?;
            if let Some(c) = e.coarse {
                coarse.insert(e.id, c);
            }
        }
        let mut k = TwoComplex::new(g);
        let mut face_colour = BTreeMap::new();
        for f in &j.faces {
            k.add_face_signed(f.id, &f.walk, Labels::none())?;
            face_colour.insert(f.id, f.colour);
        }
        Ok(GpsComplex { complex: k, coords, face_colour, coarse, eps, bounds, times: j.times })
    }
}

impl<'de> Deserialize<'de> for GpsComplex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = GpsJson::deserialize(d)?;
        GpsComplex::try_from(j).map_err(serde::de::Error::custom)
    }
}
