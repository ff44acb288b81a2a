//! Finite multigraphs with edge-resident spots, Property P and tree predicates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{input_err, precondition_err, structural_err, Result};

pub type VertexId = u32;
pub type EdgeId = u32;

/// Colour class of a spot set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Colour {
    Red,
    Blue,
    Green,
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Colour::Red => "RED",
            Colour::Blue => "BLUE",
            Colour::Green => "GREEN",
        };
        f.write_str(s)
    }
}

/// An edge traversed in a given direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedEdge {
    pub edge: EdgeId,
    pub forward: bool,
}

impl SignedEdge {
    pub fn fwd(edge: EdgeId) -> Self {
        SignedEdge { edge, forward: true }
    }

    pub fn back(edge: EdgeId) -> Self {
        SignedEdge { edge, forward: false }
    }

    pub fn reversed(self) -> Self {
        SignedEdge { edge: self.edge, forward: !self.forward }
    }

    /// Signed integer form: `+id` forward, `-id` backward.
    pub fn to_signed(self) -> i64 {
        if self.forward {
            self.edge as i64
        } else {
            -(self.edge as i64)
        }
    }

    pub fn from_signed(x: i64) -> Result<Self> {
        if x == 0 {
            return Err(input_err!("signed edge id 0 has no orientation"));
        }
        let edge = EdgeId::try_from(x.unsigned_abs())
            .map_err(|_| input_err!("edge id {x} out of range"))?;
        Ok(SignedEdge { edge, forward: x > 0 })
    }
}

impl Serialize for SignedEdge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i64(self.to_signed())
    }
}

impl<'de> Deserialize<'de> for SignedEdge {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let x = i64::deserialize(d)?;
        SignedEdge::from_signed(x).map_err(serde::de::Error::custom)
    }
}

/// Finite multigraph; loops and parallel edges are allowed and edge ids are stable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, (VertexId, VertexId)>,
    /// Incident edge ids per vertex.
    incident: BTreeMap<VertexId, BTreeSet<EdgeId>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from vertex ids and `(id, u, v)` edge triples.
    pub fn from_parts(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = (EdgeId, VertexId, VertexId)>,
    ) -> Result<Self> {
        let mut g = Graph::new();
        for v in vertices {
            g.add_vertex(v);
        }
        for (id, u, v) in edges {
            g.add_edge(id, u, v)?;
        }
        Ok(g)
    }

    /// Path on vertices `0..n` with edges `1..n`, edge `i` joining `i-1` and `i`.
    pub fn path(n: u32) -> Self {
        let mut g = Graph::new();
        for v in 0..n {
            g.add_vertex(v);
        }
        for i in 1..n {
            g.add_edge(i, i - 1, i).expect("fresh ids");
        }
        g
    }

    /// Cycle on vertices `0..n` with edges `1..=n`, edge `i` joining `i-1` and `i mod n`.
    pub fn cycle(n: u32) -> Self {
        let mut g = Graph::new();
        for v in 0..n {
            g.add_vertex(v);
        }
        for i in 1..=n {
            g.add_edge(i, i - 1, i % n).expect("fresh ids");
        }
        g
    }

    pub fn add_vertex(&mut self, v: VertexId) -> bool {
        self.incident.entry(v).or_default();
        self.vertices.insert(v)
    }

    pub fn add_edge(&mut self, id: EdgeId, u: VertexId, v: VertexId) -> Result<()> {
        if self.edges.contains_key(&id) {
            return Err(input_err!("duplicate edge id {id}"));
        }
        if !self.vertices.contains(&u) || !self.vertices.contains(&v) {
            return Err(input_err!("edge {id} has an endpoint outside the vertex set"));
        }
        self.edges.insert(id, (u, v));
        self.incident.entry(u).or_default().insert(id);
        self.incident.entry(v).or_default().insert(id);
        Ok(())
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Option<(VertexId, VertexId)> {
        let ends = self.edges.remove(&id)?;
        for x in [ends.0, ends.1] {
            if let Some(set) = self.incident.get_mut(&x) {
                set.remove(&id);
            }
        }
        Some(ends)
    }

    /// Removes a vertex; fails if an edge is still incident to it.
    pub fn remove_vertex(&mut self, v: VertexId) -> Result<()> {
        if self.incident.get(&v).is_some_and(|s| !s.is_empty()) {
            return Err(precondition_err!("vertex {v} still has incident edges"));
        }
        self.vertices.remove(&v);
        self.incident.remove(&v);
        Ok(())
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, VertexId, VertexId)> + '_ {
        self.edges.iter().map(|(&id, &(u, v))| (id, u, v))
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn endpoints(&self, e: EdgeId) -> Option<(VertexId, VertexId)> {
        self.edges.get(&e).copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_vertex_id(&self) -> Option<VertexId> {
        self.vertices.iter().next_back().copied()
    }

    pub fn max_edge_id(&self) -> Option<EdgeId> {
        self.edges.keys().next_back().copied()
    }

    /// Tail and head of a signed edge.
    pub fn oriented_ends(&self, se: SignedEdge) -> Option<(VertexId, VertexId)> {
        self.endpoints(se.edge)
            .map(|(u, v)| if se.forward { (u, v) } else { (v, u) })
    }

    /// Number of edge ends at `v`; a loop counts twice.
    pub fn degree(&self, v: VertexId) -> usize {
        self.incident.get(&v).map_or(0, |set| {
            set.iter()
                .map(|e| if self.edges[e].0 == self.edges[e].1 { 2 } else { 1 })
                .sum()
        })
    }

    /// Edges incident to `v`, each listed once, in id order.
    pub fn incident_edges(&self, v: VertexId) -> Vec<EdgeId> {
        self.incident.get(&v).map_or_else(Vec::new, |set| set.iter().copied().collect())
    }

    /// Adjacency lists `v -> [(edge, other end)]`, loops listed twice.
    pub fn adjacency(&self) -> BTreeMap<VertexId, Vec<(EdgeId, VertexId)>> {
        let mut adj: BTreeMap<VertexId, Vec<(EdgeId, VertexId)>> =
            self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for (&id, &(u, v)) in &self.edges {
            adj.entry(u).or_default().push((id, v));
            adj.entry(v).or_default().push((id, u));
        }
        adj
    }

    /// Connected components as sorted vertex sets, ordered by smallest vertex.
    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in &self.vertices {
            if !seen.insert(start) {
                continue;
            }
            let mut block = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for &(_, y) in &adj[&x] {
                    if seen.insert(y) {
                        block.insert(y);
                        queue.push_back(y);
                    }
                }
            }
            out.push(block);
        }
        out
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    pub fn is_connected(&self) -> bool {
        !self.vertices.is_empty() && self.component_count() == 1
    }

    /// First Betti number `|E| - |V| + #components`.
    pub fn betti1(&self) -> usize {
        self.edge_count() + self.component_count() - self.vertex_count()
    }

    /// Connected with `|E| = |V| - 1`; the empty graph is not a tree.
    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.edge_count() + 1 == self.vertex_count()
    }

    /// Same vertices, only the edges in `keep`.
    pub fn edge_subgraph(&self, keep: &BTreeSet<EdgeId>) -> Graph {
        let mut out = Graph::new();
        for &v in &self.vertices {
            out.add_vertex(v);
        }
        for (&id, &(u, v)) in &self.edges {
            if keep.contains(&id) {
                out.add_edge(id, u, v).expect("edge of a valid graph");
            }
        }
        out
    }

    /// Vertices and edges of `other` added to `self`; shared edge ids must agree.
    pub fn union_with(&mut self, other: &Graph) -> Result<()> {
        for &v in &other.vertices {
            self.add_vertex(v);
        }
        for (&id, &ends) in &other.edges {
            match self.edges.get(&id) {
                Some(&mine) if mine != ends => {
                    return Err(input_err!("edge {id} has different endpoints in the two graphs"))
                }
                Some(_) => {}
                None => {
                    self.add_edge(id, ends.0, ends.1)?;
                }
            }
        }
        Ok(())
    }

    /// The unique simple path between two vertices of a forest, as a signed walk.
    pub fn forest_path(&self, from: VertexId, to: VertexId) -> Option<Vec<SignedEdge>> {
        let adj = self.adjacency();
        if !adj.contains_key(&from) || !adj.contains_key(&to) {
            return None;
        }
        let mut parent: BTreeMap<VertexId, (VertexId, SignedEdge)> = BTreeMap::new();
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            if x == to {
                break;
            }
            for &(e, y) in &adj[&x] {
                if seen.insert(y) {
                    let (a, _) = self.edges[&e];
                    let step = if a == x { SignedEdge::fwd(e) } else { SignedEdge::back(e) };
                    parent.insert(y, (x, step));
                    queue.push_back(y);
                }
            }
        }
        if !seen.contains(&to) {
            return None;
        }
        let mut walk = Vec::new();
        let mut cur = to;
        while cur != from {
            let (p, step) = parent[&cur];
            walk.push(step);
            cur = p;
        }
        walk.reverse();
        Some(walk)
    }

    /// Checks that a signed edge sequence is a closed walk.
    pub fn is_closed_walk(&self, walk: &[SignedEdge]) -> bool {
        if walk.is_empty() {
            return false;
        }
        let mut ends = Vec::with_capacity(walk.len());
        for &se in walk {
            match self.oriented_ends(se) {
                Some(x) => ends.push(x),
                None => return false,
            }
        }
        (0..ends.len()).all(|i| ends[i].1 == ends[(i + 1) % ends.len()].0)
    }
}

/// Edges carrying a spot of one colour; at most one spot per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpotSet {
    pub colour: Colour,
    pub spots: BTreeSet<EdgeId>,
}

impl SpotSet {
    pub fn new(colour: Colour, spots: impl IntoIterator<Item = EdgeId>) -> Self {
        SpotSet { colour, spots: spots.into_iter().collect() }
    }

    pub fn empty(colour: Colour) -> Self {
        SpotSet { colour, spots: BTreeSet::new() }
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.spots.contains(&e)
    }

    pub fn len(&self) -> usize {
        self.spots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spots.is_empty()
    }

    /// Spots on edges carrying both colours.
    pub fn shared_with(&self, other: &SpotSet) -> BTreeSet<EdgeId> {
        self.spots.intersection(&other.spots).copied().collect()
    }

    pub fn check_in(&self, g: &Graph) -> Result<()> {
        match self.spots.iter().find(|&&e| !g.has_edge(e)) {
            Some(e) => Err(input_err!("{} spot on unknown edge {e}", self.colour)),
            None => Ok(()),
        }
    }
}

/// Disjoint vertex blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub blocks: Vec<BTreeSet<VertexId>>,
}

impl Partition {
    pub fn block_of(&self, v: VertexId) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&v))
    }
}

pub fn is_tree(g: &Graph) -> bool {
    g.is_tree()
}

/// Removes the spotted edges, keeping every vertex.
pub fn delete_spots(g: &Graph, s: &SpotSet) -> Result<Graph> {
    s.check_in(g)?;
    let mut out = g.clone();
    for e in &s.spots {
        out.remove_edge(*e);
    }
    Ok(out)
}

/// `g` minus the spotted edges is a tree.
pub fn is_property_p(g: &Graph, s: &SpotSet) -> Result<bool> {
    Ok(delete_spots(g, s)?.is_tree())
}

/// Splits at one spot of a spot set whose other spots leave a tree.
///
/// Requires `spot ∈ s` and `g - (s - spot)` to be a tree. Returns the two
/// components of `g - s`, the one holding the first endpoint of `spot` first.
pub fn split_at_spot(g: &Graph, s: &SpotSet, spot: EdgeId) -> Result<Partition> {
    if !s.contains(spot) {
        return Err(precondition_err!("edge {spot} carries no {} spot", s.colour));
    }
    let (u, v) = g
        .endpoints(spot)
        .ok_or_else(|| input_err!("unknown edge {spot}"))?;
    if u == v {
        return Err(structural_err!("spotted loop {spot} cannot separate a tree"));
    }
    let mut rest = s.clone();
    rest.spots.remove(&spot);
    if !is_property_p(g, &rest)? {
        return Err(precondition_err!(
            "removing the other {} spots does not leave a tree",
            s.colour
        ));
    }
    let cut = delete_spots(g, s)?;
    let comps = cut.components();
    if comps.len() != 2 {
        return Err(structural_err!("expected 2 components after cutting, found {}", comps.len()));
    }
    let (x, y) = if comps[0].contains(&u) {
        (comps[0].clone(), comps[1].clone())
    } else {
        (comps[1].clone(), comps[0].clone())
    };
    if !y.contains(&v) {
        return Err(structural_err!("spot {spot} does not join the two components"));
    }
    Ok(Partition { blocks: vec![x, y] })
}
