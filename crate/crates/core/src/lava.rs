//! State graphs of an easy matrix: nested boxes, trajectories, transversal
//! intervals and train tracks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{input_err, precondition_err, Result};
use crate::flowmatrix::{classify, Classification, IntersectionMatrix};
use crate::gps::Q;

pub type StateId = u32;
pub type ArrowId = usize;

/// Rationals as `"p/q"` strings.
mod qstr {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| serde::de::Error::custom(format!("not a rational: {s:?}")))
    }
}

/// Closed interval with exact endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "qstr")]
    pub lo: Q,
    #[serde(with = "qstr")]
    pub hi: Q,
}

impl Interval {
    pub fn new(lo: Q, hi: Q) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> Q {
        self.hi - self.lo
    }

    pub fn contains(&self, o: &Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    /// No common point.
    pub fn disjoint(&self, o: &Interval) -> bool {
        self.hi < o.lo || o.hi < self.lo
    }

    fn shift(&self, by: Q) -> Self {
        Interval { lo: self.lo + by, hi: self.hi + by }
    }
}

/// One arrow `from → to`: the box of `from` runs once through the box of `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrow {
    pub id: ArrowId,
    pub from: StateId,
    pub to: StateId,
    /// Slot `λ` inside `I_from` that is identified with `I_to`.
    pub lambda: Interval,
    /// Slot `μ` inside `D_to` that holds a translate of `D_from`.
    pub mu: Interval,
}

/// States with their box metrics and arrow placements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateGraph {
    /// Easy order: every arrow points to an earlier state.
    pub states: Vec<StateId>,
    pub arrows: Vec<Arrow>,
    /// `I_i = [0, length]`.
    #[serde(with = "qmap")]
    pub length: BTreeMap<StateId, Q>,
    /// `D_i = [0, diameter]`.
    #[serde(with = "qmap")]
    pub diameter: BTreeMap<StateId, Q>,
}

mod qmap {
    use super::{StateId, Q};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<StateId, Q>, s: S) -> Result<S::Ok, S::Error> {
        let v: BTreeMap<StateId, String> = m.iter().map(|(&k, x)| (k, x.to_string())).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<StateId, Q>, D::Error> {
        let v = BTreeMap::<StateId, String>::deserialize(d)?;
        v.into_iter()
            .map(|(k, s)| {
                s.parse().map(|x| (k, x)).map_err(|_| serde::de::Error::custom(format!("not a rational: {s:?}")))
            })
            .collect()
    }
}

/// Arrows `i → j` from the off-diagonal entries, one per unit of multiplicity.
fn arrow_pairs(m: &IntersectionMatrix) -> Vec<(StateId, StateId)> {
    let pairing = m.effective_pairing();
    let curve_of: BTreeMap<u32, u32> = pairing.iter().map(|(&c, &h)| (h, c)).collect();
    let mut out = Vec::new();
    for (c, h, n) in m.nonzero() {
        if pairing.get(&c) == Some(&h) {
            continue;
        }
        if let Some(&q) = curve_of.get(&h) {
            out.extend(std::iter::repeat_n((c, q), n as usize));
        }
    }
    out
}

/// Builds the state graph of an easy matrix and places the nested boxes.
///
/// Lengths grow along the easy order and each `I_i` has room for disjoint
/// slots of all its targets. Diameters shrink along the order, the first one
/// is 1, and each `D_j` has room for disjoint slots of all its sources.
pub fn build_state_graph(m: &IntersectionMatrix) -> Result<StateGraph> {
    let order: Vec<StateId> = match classify(m) {
        Classification::Easy { order } => order.into_iter().map(|(c, _)| c).collect(),
        other => {
            return Err(precondition_err!(
                "state graphs need an easy matrix, got {other:?}; see detect_degenerate"
            ))
        }
    };
    let pairs = arrow_pairs(m);
    let pos: BTreeMap<StateId, usize> = order.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let mut length: BTreeMap<StateId, Q> = BTreeMap::new();
    let mut prev = Q::from_integer(0);
    for &s in &order {
        let need: Q = pairs.iter().filter(|(a, _)| *a == s).map(|(_, b)| length[b] + 1).sum::<Q>() + 1;
        let l = need.max(prev + 1);
        length.insert(s, l);
        prev = l;
    }
    let mut width: BTreeMap<StateId, i64> = BTreeMap::new();
    let mut next = 0i64;
    for &s in order.iter().rev() {
        let need: i64 = pairs.iter().filter(|(_, b)| *b == s).map(|(a, _)| width[a] + 1).sum::<i64>() + 1;
        let w = need.max(next + 1);
        width.insert(s, w);
        next = w;
    }
    let unit = *width.values().max().unwrap_or(&1);
    let diameter: BTreeMap<StateId, Q> = width.iter().map(|(&s, &w)| (s, Q::new(w, unit))).collect();

    let mut arrows = Vec::with_capacity(pairs.len());
    let mut lambda_next: BTreeMap<StateId, Q> = order.iter().map(|&s| (s, Q::from_integer(1))).collect();
    let mut mu_next: BTreeMap<StateId, Q> = order.iter().map(|&s| (s, Q::new(1, unit))).collect();
    let mut sorted = pairs;
    sorted.sort_by_key(|&(a, b)| (pos[&a], pos[&b]));
    for (id, (a, b)) in sorted.into_iter().enumerate() {
        let l0 = lambda_next[&a];
        let lambda = Interval::new(l0, l0 + length[&b]);
        lambda_next.insert(a, lambda.hi + 1);
        let m0 = mu_next[&b];
        let mu = Interval::new(m0, m0 + diameter[&a]);
        mu_next.insert(b, mu.hi + Q::new(1, unit));
        arrows.push(Arrow { id, from: a, to: b, lambda, mu });
    }
    Ok(StateGraph { states: order, arrows, length, diameter })
}

impl StateGraph {
    pub fn incoming(&self, s: StateId) -> impl Iterator<Item = &Arrow> + '_ {
        self.arrows.iter().filter(move |a| a.to == s)
    }

    pub fn outgoing(&self, s: StateId) -> impl Iterator<Item = &Arrow> + '_ {
        self.arrows.iter().filter(move |a| a.from == s)
    }

    fn check_state(&self, s: StateId) -> Result<()> {
        if self.length.contains_key(&s) {
            Ok(())
        } else {
            Err(input_err!("unknown state {s}"))
        }
    }

    /// Weakly connected components, each sorted, ordered by smallest state.
    pub fn components(&self) -> Vec<BTreeSet<StateId>> {
        let mut comp: BTreeMap<StateId, StateId> = self.states.iter().map(|&s| (s, s)).collect();
        fn root(comp: &BTreeMap<StateId, StateId>, mut s: StateId) -> StateId {
            while comp[&s] != s {
                s = comp[&s];
            }
            s
        }
        for a in &self.arrows {
            let (x, y) = (root(&comp, a.from), root(&comp, a.to));
            if x != y {
                comp.insert(x.max(y), x.min(y));
            }
        }
        let mut out: BTreeMap<StateId, BTreeSet<StateId>> = BTreeMap::new();
        for &s in &self.states {
            out.entry(root(&comp, s)).or_default().insert(s);
        }
        let mut v: Vec<BTreeSet<StateId>> = out.into_values().collect();
        v.sort_by_key(|c| *c.iter().next().expect("non-empty"));
        v
    }

    /// States of `component` with no outgoing arrow.
    pub fn final_states(&self, component: &BTreeSet<StateId>) -> Vec<StateId> {
        component.iter().copied().filter(|&s| self.outgoing(s).next().is_none()).collect()
    }

    /// A component is elementary when it has exactly one final state.
    pub fn is_elementary(&self, component: &BTreeSet<StateId>) -> bool {
        self.final_states(component).len() == 1
    }

    /// Violations of the metric and placement laws, empty when all hold.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for w in self.states.windows(2) {
            if self.length[&w[0]] >= self.length[&w[1]] || self.diameter[&w[0]] <= self.diameter[&w[1]] {
                bad.push(format!("metrics not monotone between {} and {}", w[0], w[1]));
            }
        }
        for a in &self.arrows {
            if self.length[&a.from] <= self.length[&a.to] || self.diameter[&a.from] >= self.diameter[&a.to] {
                bad.push(format!("arrow {} breaks the box inequalities", a.id));
            }
            let i_from = Interval::new(Q::from_integer(0), self.length[&a.from]);
            let d_to = Interval::new(Q::from_integer(0), self.diameter[&a.to]);
            if !i_from.contains(&a.lambda) || a.lambda.len() != self.length[&a.to] {
                bad.push(format!("λ of arrow {} is misplaced", a.id));
            }
            if !d_to.contains(&a.mu) || a.mu.len() != self.diameter[&a.from] {
                bad.push(format!("μ of arrow {} is misplaced", a.id));
            }
        }
        for (i, a) in self.arrows.iter().enumerate() {
            for b in &self.arrows[i + 1..] {
                if a.from == b.from && !a.lambda.disjoint(&b.lambda) {
                    bad.push(format!("λ slots of arrows {} and {} overlap", a.id, b.id));
                }
                if a.to == b.to && !a.mu.disjoint(&b.mu) {
                    bad.push(format!("μ slots of arrows {} and {} overlap", a.id, b.id));
                }
            }
        }
        bad
    }
}

/// Arrow paths `i ← i₁ ← i₂ ← …` ending at `i`, listed from the last arrow
/// into `i` backwards, of every length up to `depth`.
pub fn enumerate_trajectories(sg: &StateGraph, i: StateId, depth: usize) -> Result<Vec<Vec<ArrowId>>> {
    sg.check_state(i)?;
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<(StateId, Vec<ArrowId>)> = vec![(i, Vec::new())];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (s, path) in &frontier {
            for a in sg.incoming(*s) {
                let mut p = path.clone();
                p.push(a.id);
                out.push(p.clone());
                next.push((a.from, p));
            }
        }
        frontier = next;
    }
    Ok(out)
}

/// One interval of a transversal family and the trajectory that cuts it out.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransversalPiece {
    pub interval: Interval,
    pub trajectory: Vec<ArrowId>,
}

/// Sub-intervals of `D_i` cut out by trajectories of exactly `depth` arrows,
/// sorted by position. Depth 0 gives `D_i` itself.
pub fn transversal_intervals(sg: &StateGraph, i: StateId, depth: usize) -> Result<Vec<TransversalPiece>> {
    sg.check_state(i)?;
    let mut level = vec![TransversalPiece {
        interval: Interval::new(Q::from_integer(0), sg.diameter[&i]),
        trajectory: Vec::new(),
    }];
    let mut source: Vec<StateId> = vec![i];
    for _ in 0..depth {
        let mut next = Vec::new();
        let mut next_source = Vec::new();
        for (piece, &s) in level.iter().zip(&source) {
            for a in sg.incoming(s) {
                let mut trajectory = piece.trajectory.clone();
                trajectory.push(a.id);
                next.push(TransversalPiece { interval: a.mu.shift(piece.interval.lo), trajectory });
                next_source.push(a.from);
            }
        }
        level = next;
        source = next_source;
    }
    level.sort();
    Ok(level)
}

/// Any two members nested or disjoint.
pub fn is_laminar(family: &[Interval]) -> bool {
    family.iter().enumerate().all(|(k, a)| {
        family[k + 1..].iter().all(|b| a.disjoint(b) || a.contains(b) || b.contains(a))
    })
}

/// A point of the quotient, with the arc positions it collects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackVertex {
    pub id: usize,
    pub points: Vec<(StateId, String)>,
    /// Contains an endpoint of some `I_i`.
    pub boundary: bool,
    pub degree: usize,
}

/// A smooth arc of the quotient with every occurrence on the `I_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackEdge {
    pub id: usize,
    pub ends: (usize, usize),
    pub occurrences: Vec<(StateId, Interval)>,
}

/// `M₀(p)` at a smooth point `p` of one track edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weight {
    pub edge: usize,
    /// `J(p)`: occurrence states, with repetition.
    pub occurrences: Vec<StateId>,
    /// Occurrence index pairs `(in I_i, in I_j)` for an arrow `i → j` whose slot holds the point.
    pub arrows: Vec<(usize, usize)>,
}

impl Weight {
    pub fn max_out_degree(&self) -> usize {
        let mut out: BTreeMap<usize, usize> = BTreeMap::new();
        for &(a, _) in &self.arrows {
            *out.entry(a).or_default() += 1;
        }
        out.into_values().max().unwrap_or(0)
    }
}

/// The quotient of the arcs `I_i` of one component by the `λ` gluings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTrack {
    pub states: Vec<StateId>,
    pub vertices: Vec<TrackVertex>,
    pub edges: Vec<TrackEdge>,
    /// Vertices of degree at least 3.
    pub branch: Vec<usize>,
    /// Vertices holding an arc endpoint.
    pub x0: Vec<usize>,
    pub weights: Vec<Weight>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (x, y) = (self.find(a), self.find(b));
        if x != y {
            self.0[x.max(y)] = x.min(y);
        }
    }
}

/// Builds the train track of the component containing `state`.
pub fn build_train_track(sg: &StateGraph, state: StateId) -> Result<TrainTrack> {
    sg.check_state(state)?;
    let component = sg.components().into_iter().find(|c| c.contains(&state)).expect("state is in a component");
    let states: Vec<StateId> = sg.states.iter().copied().filter(|s| component.contains(s)).collect();

    // Breakpoints of each arc, closed under the slot maps; targets come first in the order.
    let mut bps: BTreeMap<StateId, Vec<Q>> = BTreeMap::new();
    for &s in &states {
        let mut set: BTreeSet<Q> = BTreeSet::from([Q::from_integer(0), sg.length[&s]]);
        for a in sg.outgoing(s) {
            set.extend(bps[&a.to].iter().map(|&x| x + a.lambda.lo));
        }
        bps.insert(s, set.into_iter().collect());
    }
    let mut point_id: BTreeMap<(StateId, Q), usize> = BTreeMap::new();
    let mut seg_id: BTreeMap<(StateId, usize), usize> = BTreeMap::new();
    let mut segs: Vec<(StateId, usize)> = Vec::new();
    let mut pts: Vec<(StateId, Q)> = Vec::new();
    for &s in &states {
        for (k, &x) in bps[&s].iter().enumerate() {
            point_id.insert((s, x), pts.len());
            pts.push((s, x));
            if k + 1 < bps[&s].len() {
                seg_id.insert((s, k), segs.len());
                segs.push((s, k));
            }
        }
    }
    let mut pu = UnionFind::new(pts.len());
    let mut su = UnionFind::new(segs.len());
    let mut nested: Vec<(usize, usize)> = Vec::new();
    for &s in &states {
        for a in sg.outgoing(s) {
            let inner = &bps[&a.to];
            let start = bps[&s].iter().position(|&x| x == a.lambda.lo).expect("slot start is a breakpoint");
            for (k, &x) in inner.iter().enumerate() {
                pu.union(point_id[&(s, x + a.lambda.lo)], point_id[&(a.to, x)]);
                if k + 1 < inner.len() {
                    let outer_seg = seg_id[&(s, start + k)];
                    let inner_seg = seg_id[&(a.to, k)];
                    su.union(outer_seg, inner_seg);
                    nested.push((outer_seg, inner_seg));
                }
            }
        }
    }

    let mut vclass: BTreeMap<usize, usize> = BTreeMap::new();
    for p in 0..pts.len() {
        let r = pu.find(p);
        let n = vclass.len();
        vclass.entry(r).or_insert(n);
    }
    let mut vertices: Vec<TrackVertex> = (0..vclass.len())
        .map(|id| TrackVertex { id, points: Vec::new(), boundary: false, degree: 0 })
        .collect();
    for (p, &(s, x)) in pts.iter().enumerate() {
        let v = vclass[&pu.find(p)];
        vertices[v].points.push((s, x.to_string()));
        if x == Q::from_integer(0) || x == sg.length[&s] {
            vertices[v].boundary = true;
        }
    }
    let mut eclass: BTreeMap<usize, usize> = BTreeMap::new();
    let mut edges: Vec<TrackEdge> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (k, &(s, i)) in segs.iter().enumerate() {
        let r = su.find(k);
        let e = *eclass.entry(r).or_insert_with(|| {
            let b = &bps[&s];
            let ends = (vclass[&pu.find(point_id[&(s, b[i])])], vclass[&pu.find(point_id[&(s, b[i + 1])])]);
            edges.push(TrackEdge { id: edges.len(), ends, occurrences: Vec::new() });
            members.push(Vec::new());
            edges.len() - 1
        });
        let b = &bps[&s];
        edges[e].occurrences.push((s, Interval::new(b[i], b[i + 1])));
        members[e].push(k);
    }
    for e in &edges {
        vertices[e.ends.0].degree += 1;
        vertices[e.ends.1].degree += 1;
    }
    let branch: Vec<usize> = vertices.iter().filter(|v| v.degree >= 3).map(|v| v.id).collect();
    let x0: Vec<usize> = vertices.iter().filter(|v| v.boundary).map(|v| v.id).collect();

    let weights = edges
        .iter()
        .map(|e| {
            let local: BTreeMap<usize, usize> = members[e.id].iter().enumerate().map(|(i, &k)| (k, i)).collect();
            let occurrences = members[e.id].iter().map(|&k| segs[k].0).collect();
            let mut arrows: Vec<(usize, usize)> = nested
                .iter()
                .filter_map(|(o, i)| Some((*local.get(o)?, *local.get(i)?)))
                .collect();
            arrows.sort_unstable();
            Weight { edge: e.id, occurrences, arrows }
        })
        .collect();
    Ok(TrainTrack { states, vertices, edges, branch, x0, weights })
}

/// Verdict of [`detect_degenerate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Degeneracy {
    Ok,
    /// Closed trajectory `[c0, .., c0]`.
    NonCommutative { cycle: Vec<u32> },
}

/// Whether the trajectory digraph of `m` has an oriented cycle.
pub fn detect_degenerate(m: &IntersectionMatrix) -> Degeneracy {
    match m.trajectory_digraph().find_cycle() {
        None => Degeneracy::Ok,
        Some(cycle) => Degeneracy::NonCommutative { cycle },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> IntersectionMatrix {
        // State 3 runs through 2, and 2 through 1.
        IntersectionMatrix::from_rows(&[vec![1, 0, 0], vec![1, 1, 0], vec![0, 1, 1]]).unwrap()
    }

    fn sid(sg: &StateGraph, k: usize) -> StateId {
        sg.states[k]
    }

    #[test]
    fn chain_metrics() {
        let sg = build_state_graph(&chain()).unwrap();
        assert_eq!(sg.states.len(), 3);
        assert_eq!(sg.arrows.len(), 2);
        assert!(sg.check_invariants().is_empty());
        let (a, b, c) = (sid(&sg, 0), sid(&sg, 1), sid(&sg, 2));
        assert!(sg.length[&a] < sg.length[&b] && sg.length[&b] < sg.length[&c]);
        assert!(sg.diameter[&a] > sg.diameter[&b] && sg.diameter[&b] > sg.diameter[&c]);
    }

    #[test]
    fn single_state() {
        let m = IntersectionMatrix::from_rows(&[vec![1]]).unwrap();
        let sg = build_state_graph(&m).unwrap();
        assert!(sg.arrows.is_empty());
        let s = sg.states[0];
        assert_eq!(enumerate_trajectories(&sg, s, 3).unwrap(), vec![Vec::<ArrowId>::new()]);
        assert!(transversal_intervals(&sg, s, 1).unwrap().is_empty());
        let tt = build_train_track(&sg, s).unwrap();
        assert_eq!(tt.edges.len(), 1);
        assert_eq!(tt.x0.len(), 2);
        assert!(tt.branch.is_empty());
    }

    #[test]
    fn cyclic_matrix_is_degenerate() {
        let m = IntersectionMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert!(build_state_graph(&m).is_err());
        match detect_degenerate(&m) {
            Degeneracy::NonCommutative { cycle } => {
                assert_eq!(cycle.first(), cycle.last());
                assert_eq!(cycle.len(), 3);
            }
            Degeneracy::Ok => panic!("cycle missed"),
        }
        assert_eq!(detect_degenerate(&chain()), Degeneracy::Ok);
    }

    #[test]
    fn laminar_detects_overlap() {
        let q = |a, b| Interval::new(Q::from_integer(a), Q::from_integer(b));
        assert!(is_laminar(&[q(0, 4), q(1, 2), q(3, 4)]));
        assert!(!is_laminar(&[q(0, 2), q(1, 3)]));
    }
}
