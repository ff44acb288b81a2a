//! Combinatorial 2-complexes: labelled faces, elementary collapses, spine search,
//! mod-2 homology and face bisections.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{input_err, precondition_err, Result};
use crate::graph::{EdgeId, Graph, SignedEdge, VertexId};

pub type FaceId = u32;

/// Face labels of the two link partitions.
///
/// `Gamma`, `C` and `Gamma0` form the RED partition, `Eta` and `Gamma1` the BLUE one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Gamma,
    C,
    Gamma0,
    Eta,
    Gamma1,
    Unlabeled,
}

impl Label {
    pub fn is_red_family(self) -> bool {
        matches!(self, Label::Gamma | Label::C | Label::Gamma0)
    }

    pub fn is_blue_family(self) -> bool {
        matches!(self, Label::Eta | Label::Gamma1)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Label::Gamma => "GAMMA",
            Label::C => "C",
            Label::Gamma0 => "GAMMA0",
            Label::Eta => "ETA",
            Label::Gamma1 => "GAMMA1",
            Label::Unlabeled => "UNLABELED",
        };
        f.write_str(s)
    }
}

/// Labels of one face: at most one from each partition.
///
/// Serialises as a single label string, or a list when both partitions are set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Labels {
    pub red: Option<Label>,
    pub blue: Option<Label>,
}

impl Labels {
    pub fn none() -> Self {
        Labels::default()
    }

    pub fn red(l: Label) -> Self {
        Labels { red: Some(l), blue: None }
    }

    pub fn blue(l: Label) -> Self {
        Labels { red: None, blue: Some(l) }
    }

    pub fn both(red: Label, blue: Label) -> Self {
        Labels { red: Some(red), blue: Some(blue) }
    }

    pub fn from_list(list: &[Label]) -> Result<Self> {
        let mut out = Labels::none();
        for &l in list {
            let slot = if l.is_red_family() {
                &mut out.red
            } else if l.is_blue_family() {
                &mut out.blue
            } else {
                continue;
            };
            if slot.is_some_and(|x| x != l) {
                return Err(input_err!("face carries two labels of the same partition"));
            }
            *slot = Some(l);
        }
        Ok(out)
    }

    pub fn to_list(self) -> Vec<Label> {
        self.red.into_iter().chain(self.blue).collect()
    }

    pub fn has(self, l: Label) -> bool {
        if l == Label::Unlabeled {
            return self.red.is_none() && self.blue.is_none();
        }
        self.red == Some(l) || self.blue == Some(l)
    }
}

impl Serialize for Labels {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.to_list().as_slice() {
            [] => Label::Unlabeled.serialize(s),
            [one] => one.serialize(s),
            many => many.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Labels {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(Label),
            Many(Vec<Label>),
        }
        let list = match Raw::deserialize(d)? {
            Raw::One(l) => vec![l],
            Raw::Many(v) => v,
        };
        Labels::from_list(&list).map_err(serde::de::Error::custom)
    }
}

/// A 2-cell: a closed signed boundary walk plus labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub walk: Vec<SignedEdge>,
    pub labels: Labels,
}

/// A cell of a 2-complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    Vertex(VertexId),
    Edge(EdgeId),
    Face(FaceId),
}

impl Cell {
    pub fn dim(self) -> u8 {
        match self {
            Cell::Vertex(_) => 0,
            Cell::Edge(_) => 1,
            Cell::Face(_) => 2,
        }
    }
}

/// One elementary collapse: a free cell and its unique coface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CollapsePair {
    pub free: Cell,
    pub coface: Cell,
}

impl CollapsePair {
    pub fn edge_face(e: EdgeId, f: FaceId) -> Self {
        CollapsePair { free: Cell::Edge(e), coface: Cell::Face(f) }
    }

    pub fn vertex_edge(v: VertexId, e: EdgeId) -> Self {
        CollapsePair { free: Cell::Vertex(v), coface: Cell::Edge(e) }
    }
}

/// Ordered list of elementary collapses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CollapseSchedule {
    pub steps: Vec<CollapsePair>,
}

impl CollapseSchedule {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Applies every step with a freeness check.
    pub fn apply(&self, k: &TwoComplex) -> Result<TwoComplex> {
        let mut cur = k.clone();
        for (i, &p) in self.steps.iter().enumerate() {
            cur.collapse_in_place(p)
                .map_err(|e| precondition_err!("step {i}: {e}"))?;
        }
        Ok(cur)
    }
}

/// Result of a spine search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CollapseOutcome {
    Success(CollapseSchedule),
    /// Exhaustive search showed no schedule exists.
    Impossible,
    /// The face count exceeded the exhaustive bound and the greedy pass failed.
    NotFound,
}

impl CollapseOutcome {
    pub fn schedule(&self) -> Option<&CollapseSchedule> {
        match self {
            CollapseOutcome::Success(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, CollapseOutcome::Success(_))
    }
}

pub const DEFAULT_MAX_FACES: usize = 8;

/// Finite 2-complex over a multigraph skeleton.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TwoComplex {
    pub skeleton: Graph,
    faces: BTreeMap<FaceId, Face>,
    /// Traversal counts of each edge by each face.
    edge_faces: BTreeMap<EdgeId, BTreeMap<FaceId, usize>>,
}

impl TwoComplex {
    pub fn new(skeleton: Graph) -> Self {
        TwoComplex { skeleton, faces: BTreeMap::new(), edge_faces: BTreeMap::new() }
    }

    fn insert_face(&mut self, id: FaceId, face: Face) {
        self.remove_face(id);
        for se in &face.walk {
            *self.edge_faces.entry(se.edge).or_default().entry(id).or_insert(0) += 1;
        }
        self.faces.insert(id, face);
    }

    fn reindex(&mut self) {
        self.edge_faces.clear();
        for (&id, f) in &self.faces {
            for se in &f.walk {
                *self.edge_faces.entry(se.edge).or_default().entry(id).or_insert(0) += 1;
            }
        }
    }

    /// Faces whose walk traverses `e`, with traversal counts.
    pub fn faces_on_edge(&self, e: EdgeId) -> impl Iterator<Item = (FaceId, usize)> + '_ {
        self.edge_faces.get(&e).into_iter().flat_map(|m| m.iter().map(|(&f, &n)| (f, n)))
    }

    /// Total number of traversals of `e` over all face walks.
    pub fn edge_use(&self, e: EdgeId) -> usize {
        self.edge_faces.get(&e).map_or(0, |m| m.values().sum())
    }

    pub fn add_face(&mut self, id: FaceId, walk: Vec<SignedEdge>, labels: Labels) -> Result<()> {
        if self.faces.contains_key(&id) {
            return Err(input_err!("duplicate face id {id}"));
        }
        if !self.skeleton.is_closed_walk(&walk) {
            return Err(input_err!("face {id} boundary is not a closed walk in the skeleton"));
        }
        self.insert_face(id, Face { walk, labels });
        Ok(())
    }

    /// Adds a face whose walk is given in signed-integer form.
    pub fn add_face_signed(&mut self, id: FaceId, walk: &[i64], labels: Labels) -> Result<()> {
        let walk = walk
            .iter()
            .map(|&x| SignedEdge::from_signed(x))
            .collect::<Result<Vec<_>>>()?;
        self.add_face(id, walk, labels)
    }

    pub fn face(&self, id: FaceId) -> Option<&Face> {
        self.faces.get(&id)
    }

    pub fn faces(&self) -> impl Iterator<Item = (FaceId, &Face)> + '_ {
        self.faces.iter().map(|(&id, f)| (id, f))
    }

    pub fn face_ids(&self) -> impl Iterator<Item = FaceId> + '_ {
        self.faces.keys().copied()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn max_face_id(&self) -> Option<FaceId> {
        self.faces.keys().next_back().copied()
    }

    pub fn set_labels(&mut self, id: FaceId, labels: Labels) -> Result<()> {
        let f = self.faces.get_mut(&id).ok_or_else(|| input_err!("unknown face {id}"))?;
        f.labels = labels;
        Ok(())
    }

    /// Removes a face, leaving its boundary in the skeleton.
    pub fn remove_face(&mut self, id: FaceId) -> Option<Face> {
        let face = self.faces.remove(&id)?;
        for se in &face.walk {
            if let Some(m) = self.edge_faces.get_mut(&se.edge) {
                m.remove(&id);
                if m.is_empty() {
                    self.edge_faces.remove(&se.edge);
                }
            }
        }
        Some(face)
    }

    /// Deletes every face carrying `label`, keeping the boundaries.
    pub fn delete_by_label(&mut self, label: Label) -> Vec<FaceId> {
        let gone: Vec<FaceId> = self
            .faces
            .iter()
            .filter(|(_, f)| f.labels.has(label))
            .map(|(&id, _)| id)
            .collect();
        for id in &gone {
            self.remove_face(*id);
        }
        gone
    }

    pub fn has_cell(&self, c: Cell) -> bool {
        match c {
            Cell::Vertex(v) => self.skeleton.has_vertex(v),
            Cell::Edge(e) => self.skeleton.has_edge(e),
            Cell::Face(f) => self.faces.contains_key(&f),
        }
    }

    pub fn cells(&self) -> BTreeSet<Cell> {
        let mut out: BTreeSet<Cell> = self.skeleton.vertices().map(Cell::Vertex).collect();
        out.extend(self.skeleton.edge_ids().map(Cell::Edge));
        out.extend(self.faces.keys().map(|&f| Cell::Face(f)));
        out
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.skeleton.vertex_count() as i64 - self.skeleton.edge_count() as i64
            + self.faces.len() as i64
    }

    /// Unsigned number of traversals of each edge over all face walks.
    pub fn edge_incidence(&self) -> BTreeMap<EdgeId, usize> {
        self.edge_faces.iter().map(|(&e, m)| (e, m.values().sum())).collect()
    }

    /// Free pairs: edges traversed exactly once overall, and degree-1 vertices
    /// whose edge bounds no face.
    pub fn free_faces(&self) -> Vec<CollapsePair> {
        let inc = self.edge_incidence();
        let mut out = Vec::new();
        for (&fid, f) in &self.faces {
            for se in &f.walk {
                if inc.get(&se.edge) == Some(&1) {
                    out.push(CollapsePair::edge_face(se.edge, fid));
                }
            }
        }
        for v in self.skeleton.vertices() {
            if self.skeleton.degree(v) == 1 {
                let e = self.skeleton.incident_edges(v)[0];
                if !inc.contains_key(&e) {
                    out.push(CollapsePair::vertex_edge(v, e));
                }
            }
        }
        out.sort();
        out
    }

    pub fn is_free(&self, p: CollapsePair) -> bool {
        match (p.free, p.coface) {
            (Cell::Edge(e), Cell::Face(f)) => {
                self.faces.contains_key(&f)
                    && self.edge_faces.get(&e).is_some_and(|m| m.len() == 1 && m.get(&f) == Some(&1))
            }
            (Cell::Vertex(v), Cell::Edge(e)) => match self.skeleton.endpoints(e) {
                Some((a, b)) => {
                    (a == v || b == v)
                        && a != b
                        && self.skeleton.degree(v) == 1
                        && !self.edge_faces.contains_key(&e)
                }
                None => false,
            },
            _ => false,
        }
    }

    /// Removes a free pair in place.
    pub fn collapse_in_place(&mut self, p: CollapsePair) -> Result<()> {
        if !self.is_free(p) {
            return Err(precondition_err!("{p:?} is not a free pair"));
        }
        match (p.free, p.coface) {
            (Cell::Edge(e), Cell::Face(f)) => {
                self.remove_face(f);
                self.skeleton.remove_edge(e);
            }
            (Cell::Vertex(v), Cell::Edge(e)) => {
                self.skeleton.remove_edge(e);
                self.skeleton.remove_vertex(v)?;
            }
            _ => unreachable!("is_free rejects other shapes"),
        }
        Ok(())
    }

    /// Removes a free pair.
    pub fn elementary_collapse(&self, p: CollapsePair) -> Result<TwoComplex> {
        let mut out = self.clone();
        out.collapse_in_place(p)?;
        Ok(out)
    }

    /// Checks that `cells` is closed under taking boundaries.
    pub fn check_subcomplex(&self, cells: &BTreeSet<Cell>) -> Result<()> {
        for &c in cells {
            if !self.has_cell(c) {
                return Err(input_err!("{c:?} is not a cell of the complex"));
            }
            match c {
                Cell::Edge(e) => {
                    let (u, v) = self.skeleton.endpoints(e).expect("checked");
                    if !cells.contains(&Cell::Vertex(u)) || !cells.contains(&Cell::Vertex(v)) {
                        return Err(precondition_err!("edge {e} lacks an endpoint in the subcomplex"));
                    }
                }
                Cell::Face(f) => {
                    if self.faces[&f].walk.iter().any(|se| !cells.contains(&Cell::Edge(se.edge))) {
                        return Err(precondition_err!("face {f} lacks a boundary edge in the subcomplex"));
                    }
                }
                Cell::Vertex(_) => {}
            }
        }
        Ok(())
    }

    /// The subcomplex made of the given faces and their closures.
    pub fn closure_of_faces(&self, faces: &BTreeSet<FaceId>) -> BTreeSet<Cell> {
        let mut out = BTreeSet::new();
        for f in faces {
            if let Some(face) = self.faces.get(f) {
                out.insert(Cell::Face(*f));
                for se in &face.walk {
                    out.insert(Cell::Edge(se.edge));
                }
            }
        }
        self.close_edges(&mut out);
        out
    }

    /// Adds the endpoints of every edge in `cells`.
    pub fn close_edges(&self, cells: &mut BTreeSet<Cell>) {
        let edges: Vec<EdgeId> = cells
            .iter()
            .filter_map(|c| if let Cell::Edge(e) = c { Some(*e) } else { None })
            .collect();
        for e in edges {
            if let Some((u, v)) = self.skeleton.endpoints(e) {
                cells.insert(Cell::Vertex(u));
                cells.insert(Cell::Vertex(v));
            }
        }
    }

    /// Vertex shared by consecutive walk entries `i-1` and `i` (tail of entry `i`).
    pub fn corner_vertex(&self, face: FaceId, i: usize) -> Option<VertexId> {
        let f = self.faces.get(&face)?;
        let se = *f.walk.get(i)?;
        self.skeleton.oriented_ends(se).map(|(t, _)| t)
    }
}

fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let width = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..width * 64 {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let prow = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] & bit != 0 {
                for (a, b) in row.iter_mut().zip(&prow) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Betti numbers over GF(2) from boundary-matrix ranks.
pub fn gf2_homology_ranks(k: &TwoComplex) -> (usize, usize, usize) {
    let vidx: BTreeMap<VertexId, usize> =
        k.skeleton.vertices().enumerate().map(|(i, v)| (v, i)).collect();
    let eidx: BTreeMap<EdgeId, usize> =
        k.skeleton.edge_ids().enumerate().map(|(i, e)| (e, i)).collect();
    let (nv, ne, nf) = (vidx.len(), eidx.len(), k.face_count());

    // Rows of the edge boundary: one row per edge over vertex columns.
    let vw = nv.div_ceil(64).max(1);
    let d1: Vec<Vec<u64>> = k
        .skeleton
        .edges()
        .map(|(_, u, v)| {
            let mut row = vec![0u64; vw];
            if u != v {
                row[vidx[&u] / 64] ^= 1 << (vidx[&u] % 64);
                row[vidx[&v] / 64] ^= 1 << (vidx[&v] % 64);
            }
            row
        })
        .collect();
    let ew = ne.div_ceil(64).max(1);
    let d2: Vec<Vec<u64>> = k
        .faces()
        .map(|(_, f)| {
            let mut row = vec![0u64; ew];
            for se in &f.walk {
                let i = eidx[&se.edge];
                row[i / 64] ^= 1 << (i % 64);
            }
            row
        })
        .collect();
    let r1 = gf2_rank(d1);
    let r2 = gf2_rank(d2);
    (nv - r1, ne - r1 - r2, nf - r2)
}

pub fn free_faces(k: &TwoComplex) -> Vec<CollapsePair> {
    k.free_faces()
}

pub fn elementary_collapse(k: &TwoComplex, p: CollapsePair) -> Result<TwoComplex> {
    k.elementary_collapse(p)
}

/// Removes leaf edges outside `keep` until none is left and returns the steps.
/// The result does not depend on the order.
pub fn prune_leaves(k: &mut TwoComplex, keep: &BTreeSet<Cell>) -> Vec<CollapsePair> {
    let mut steps = Vec::new();
    prune_to_spine(k, keep, &mut steps);
    steps
}

fn prune_to_spine(k: &mut TwoComplex, spine: &BTreeSet<Cell>, steps: &mut Vec<CollapsePair>) {
    let mut work: Vec<VertexId> = k.skeleton.vertices().collect();
    work.reverse();
    while let Some(v) = work.pop() {
        if !k.skeleton.has_vertex(v) || spine.contains(&Cell::Vertex(v)) || k.skeleton.degree(v) != 1 {
            continue;
        }
        let e = k.skeleton.incident_edges(v)[0];
        if spine.contains(&Cell::Edge(e)) || k.edge_use(e) > 0 {
            continue;
        }
        let (a, b) = k.skeleton.remove_edge(e).expect("incident edge exists");
        k.skeleton.remove_vertex(v).expect("leaf has no other edge");
        steps.push(CollapsePair::vertex_edge(v, e));
        work.push(if a == v { b } else { a });
    }
}

/// Candidate face collapses outside the spine, longest walk first.
fn face_moves(k: &TwoComplex, spine: &BTreeSet<Cell>) -> Vec<CollapsePair> {
    let inc = k.edge_incidence();
    let mut moves: Vec<(usize, CollapsePair)> = Vec::new();
    for (fid, f) in k.faces() {
        if spine.contains(&Cell::Face(fid)) {
            continue;
        }
        let mut seen = BTreeSet::new();
        for se in &f.walk {
            if inc[&se.edge] == 1 && !spine.contains(&Cell::Edge(se.edge)) && seen.insert(se.edge) {
                moves.push((f.walk.len(), CollapsePair::edge_face(se.edge, fid)));
            }
        }
    }
    moves.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    moves.into_iter().map(|(_, p)| p).collect()
}

fn state_key(k: &TwoComplex) -> (Vec<FaceId>, Vec<EdgeId>) {
    (k.face_ids().collect(), k.skeleton.edge_ids().collect())
}

struct SpineSearch<'a> {
    spine: &'a BTreeSet<Cell>,
    exhaustive: bool,
    dead: HashSet<(Vec<FaceId>, Vec<EdgeId>)>,
}

impl SpineSearch<'_> {
    fn run(&mut self, k: &TwoComplex, steps: &mut Vec<CollapsePair>) -> bool {
        let pending = k.face_ids().any(|f| !self.spine.contains(&Cell::Face(f)));
        if !pending {
            let mut rest = k.clone();
            let mark = steps.len();
            prune_to_spine(&mut rest, self.spine, steps);
            if rest.cells() == *self.spine {
                return true;
            }
            steps.truncate(mark);
            return false;
        }
        let key = state_key(k);
        if self.dead.contains(&key) {
            return false;
        }
        let moves = face_moves(k, self.spine);
        let tries = if self.exhaustive { moves.len() } else { moves.len().min(1) };
        for &m in moves.iter().take(tries) {
            let next = k.elementary_collapse(m).expect("move is free");
            steps.push(m);
            if self.run(&next, steps) {
                return true;
            }
            steps.pop();
        }
        self.dead.insert(key);
        false
    }
}

/// Searches for a collapse of `k` onto the subcomplex `spine`.
///
/// Face removals are searched with backtracking when at most `max_faces` faces
/// lie outside the spine, otherwise one greedy pass is made. Leaf pruning of the
/// remaining graph is order independent and runs last.
pub fn collapse_to_spine(
    k: &TwoComplex,
    spine: &BTreeSet<Cell>,
    max_faces: usize,
) -> Result<CollapseOutcome> {
    k.check_subcomplex(spine)?;
    let outside = k.face_ids().filter(|f| !spine.contains(&Cell::Face(*f))).count();
    let exhaustive = outside <= max_faces;
    let mut search = SpineSearch { spine, exhaustive, dead: HashSet::new() };
    let mut steps = Vec::new();
    if search.run(k, &mut steps) {
        return Ok(CollapseOutcome::Success(CollapseSchedule { steps }));
    }
    Ok(if exhaustive { CollapseOutcome::Impossible } else { CollapseOutcome::NotFound })
}

/// An endpoint of a chord across a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChordEnd {
    /// The vertex where walk entry `i` starts.
    Corner(usize),
    /// The midpoint of walk entry `i`, created by splitting that edge.
    EdgeMid(usize),
}

/// Ids created by a bisection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bisection {
    pub complex: TwoComplex,
    pub chord: EdgeId,
    /// The two pieces; the first keeps the original face id.
    pub pieces: (FaceId, FaceId),
    /// Vertices inserted by edge splits.
    pub new_vertices: Vec<VertexId>,
}

fn fresh_vertex(g: &Graph) -> VertexId {
    g.max_vertex_id().map_or(0, |v| v + 1)
}

fn fresh_edge(g: &Graph) -> EdgeId {
    g.max_edge_id().map_or(1, |e| e + 1)
}

/// Splits edge `e` at a new vertex; every walk through `e` is rewritten.
/// Returns the new vertex and the id of the second half.
pub fn split_edge(k: &mut TwoComplex, e: EdgeId) -> Result<(VertexId, EdgeId)> {
    let (u, v) = k.skeleton.endpoints(e).ok_or_else(|| input_err!("unknown edge {e}"))?;
    let m = fresh_vertex(&k.skeleton);
    let e2 = fresh_edge(&k.skeleton);
    k.skeleton.remove_edge(e);
    k.skeleton.add_vertex(m);
    k.skeleton.add_edge(e, u, m)?;
    k.skeleton.add_edge(e2, m, v)?;
    for f in k.faces.values_mut() {
        let mut walk = Vec::with_capacity(f.walk.len() + 1);
        for &se in &f.walk {
            if se.edge != e {
                walk.push(se);
            } else if se.forward {
                walk.extend([SignedEdge::fwd(e), SignedEdge::fwd(e2)]);
            } else {
                walk.extend([SignedEdge::back(e2), SignedEdge::back(e)]);
            }
        }
        f.walk = walk;
    }
    k.reindex();
    Ok((m, e2))
}

/// Walk positions after splitting the edge at `pos`; the midpoint becomes corner `pos + 1`.
fn shift_after_split(walk_before: &[SignedEdge], e: EdgeId, p: usize) -> usize {
    p + walk_before[..p].iter().filter(|se| se.edge == e).count()
}

/// Cuts a face along a new chord edge.
///
/// Labels copy to both pieces, except that a `Gamma1` face leaves one `Gamma1`
/// piece and one `Eta` piece, and a `Gamma0` face one `Gamma0` and one `C` piece.
pub fn bisect_face(k: &TwoComplex, face: FaceId, a: ChordEnd, b: ChordEnd) -> Result<Bisection> {
    let f = k.face(face).ok_or_else(|| input_err!("unknown face {face}"))?;
    let n = f.walk.len();
    let idx = |c: ChordEnd| match c {
        ChordEnd::Corner(i) | ChordEnd::EdgeMid(i) => i,
    };
    if idx(a) >= n || idx(b) >= n {
        return Err(input_err!("chord position outside the walk of face {face}"));
    }
    if a == b {
        return Err(input_err!("chord endpoints coincide"));
    }
    let mut out = k.clone();
    let mut new_vertices = Vec::new();
    let mut pa = a;
    let mut pb = b;
    for which in 0..2 {
        let cur = if which == 0 { pa } else { pb };
        if let ChordEnd::EdgeMid(i) = cur {
            let before = out.faces[&face].walk.clone();
            let e = before[i].edge;
            let (m, _) = split_edge(&mut out, e)?;
            new_vertices.push(m);
            let corner = ChordEnd::Corner(shift_after_split(&before, e, i) + 1);
            let other = if which == 0 { pb } else { pa };
            let moved = match other {
                ChordEnd::Corner(j) => ChordEnd::Corner(shift_after_split(&before, e, j)),
                ChordEnd::EdgeMid(j) if before[j].edge == e => {
                    ChordEnd::Corner(shift_after_split(&before, e, j) + 1)
                }
                ChordEnd::EdgeMid(j) => ChordEnd::EdgeMid(shift_after_split(&before, e, j)),
            };
            if which == 0 {
                pa = corner;
                pb = moved;
            } else {
                pb = corner;
                pa = moved;
            }
        }
    }
    let (ChordEnd::Corner(i), ChordEnd::Corner(j)) = (pa, pb) else {
        unreachable!("both ends are corners after splitting");
    };
    if i == j {
        return Err(input_err!("chord endpoints coincide"));
    }
    let (i, j) = (i.min(j), i.max(j));
    let walk = out.faces[&face].walk.clone();
    let labels = out.faces[&face].labels;
    let vi = out.corner_vertex(face, i).expect("corner exists");
    let vj = out.corner_vertex(face, j).expect("corner exists");
    let chord = fresh_edge(&out.skeleton);
    out.skeleton.add_edge(chord, vi, vj)?;
    let mut w1: Vec<SignedEdge> = walk[i..j].to_vec();
    w1.push(SignedEdge::back(chord));
    let mut w2: Vec<SignedEdge> = walk[j..].iter().chain(&walk[..i]).copied().collect();
    w2.push(SignedEdge::fwd(chord));
    let mut l2 = labels;
    if labels.blue == Some(Label::Gamma1) {
        l2.blue = Some(Label::Eta);
    }
    if labels.red == Some(Label::Gamma0) {
        l2.red = Some(Label::C);
    }
    let f2 = out.max_face_id().map_or(0, |x| x + 1);
    out.insert_face(face, Face { walk: w1, labels });
    out.insert_face(f2, Face { walk: w2, labels: l2 });
    Ok(Bisection { complex: out, chord, pieces: (face, f2), new_vertices })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Triangle 0-1-2 with edges 1,2,3 and one face.
    pub fn disc() -> TwoComplex {
        let mut k = TwoComplex::new(Graph::cycle(3));
        k.add_face_signed(1, &[1, 2, 3], Labels::none()).unwrap();
        k
    }

    /// One vertex, loops a=1 and b=2, face a b a^-1 b^-1.
    pub fn torus() -> TwoComplex {
        let g = Graph::from_parts([0], [(1, 0, 0), (2, 0, 0)]).unwrap();
        let mut k = TwoComplex::new(g);
        k.add_face_signed(1, &[1, 2, -1, -2], Labels::none()).unwrap();
        k
    }

    /// One vertex, loop a, face a a a^-1.
    pub fn dunce() -> TwoComplex {
        let g = Graph::from_parts([0], [(1, 0, 0)]).unwrap();
        let mut k = TwoComplex::new(g);
        k.add_face_signed(1, &[1, 1, -1], Labels::none()).unwrap();
        k
    }

    /// Square 0-1-2-3 with edges 1..4 and one face.
    pub fn square(labels: Labels) -> TwoComplex {
        let mut k = TwoComplex::new(Graph::cycle(4));
        k.add_face_signed(1, &[1, 2, 3, 4], labels).unwrap();
        k
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn homology_examples() {
        assert_eq!(gf2_homology_ranks(&disc()), (1, 0, 0));
        assert_eq!(gf2_homology_ranks(&TwoComplex::new(Graph::cycle(3))), (1, 1, 0));
        assert_eq!(gf2_homology_ranks(&torus()), (1, 2, 1));
        assert_eq!(gf2_homology_ranks(&dunce()), (1, 0, 0));
    }

    #[test]
    fn free_face_examples() {
        let f = disc().free_faces();
        assert_eq!(
            f,
            vec![
                CollapsePair::edge_face(1, 1),
                CollapsePair::edge_face(2, 1),
                CollapsePair::edge_face(3, 1)
            ]
        );
        assert!(dunce().free_faces().is_empty());
        let tree = TwoComplex::new(Graph::path(4));
        assert_eq!(
            tree.free_faces(),
            vec![CollapsePair::vertex_edge(0, 1), CollapsePair::vertex_edge(3, 3)]
        );
    }

    #[test]
    fn collapse_disc_to_point() {
        let k = disc();
        let k1 = k.elementary_collapse(CollapsePair::edge_face(2, 1)).unwrap();
        assert_eq!(k1.face_count(), 0);
        assert!(k1.skeleton.is_tree());
        assert!(k.elementary_collapse(CollapsePair::vertex_edge(0, 1)).is_err());
        let spine = BTreeSet::from([Cell::Vertex(0)]);
        let out = collapse_to_spine(&k, &spine, DEFAULT_MAX_FACES).unwrap();
        let sched = out.schedule().unwrap();
        // One face, three edges and two vertices go, in pairs.
        assert_eq!(sched.len(), 3);
        assert_eq!(sched.apply(&k).unwrap().cells(), spine);
    }

    #[test]
    fn dunce_is_not_collapsible() {
        let spine = BTreeSet::from([Cell::Vertex(0)]);
        assert_eq!(
            collapse_to_spine(&dunce(), &spine, DEFAULT_MAX_FACES).unwrap(),
            CollapseOutcome::Impossible
        );
        assert_eq!(collapse_to_spine(&dunce(), &spine, 0).unwrap(), CollapseOutcome::NotFound);
    }

    #[test]
    fn spine_must_be_subcomplex() {
        let bad = BTreeSet::from([Cell::Edge(1)]);
        assert!(collapse_to_spine(&disc(), &bad, 8).is_err());
    }

    #[test]
    fn square_diagonal() {
        let k = square(Labels::none());
        let b = bisect_face(&k, 1, ChordEnd::Corner(0), ChordEnd::Corner(2)).unwrap();
        assert_eq!(b.complex.face_count(), 2);
        assert!(b.complex.faces().all(|(_, f)| f.walk.len() == 3));
        assert_eq!(b.complex.skeleton.edge_count(), 5);
        assert_eq!(gf2_homology_ranks(&b.complex), (1, 0, 0));
    }

    #[test]
    fn bisection_through_edge_midpoints() {
        let k = torus();
        let b = bisect_face(&k, 1, ChordEnd::EdgeMid(0), ChordEnd::EdgeMid(2)).unwrap();
        // Edge 1 is split once; both traversals meet the same midpoint.
        assert_eq!(b.new_vertices.len(), 1);
        assert_eq!(gf2_homology_ranks(&b.complex), (1, 2, 1));
        for (_, f) in b.complex.faces() {
            assert!(b.complex.skeleton.is_closed_walk(&f.walk));
        }
    }

    #[test]
    fn bisection_label_rules() {
        let k = square(Labels::both(Label::Gamma0, Label::Gamma1));
        let b = bisect_face(&k, 1, ChordEnd::Corner(1), ChordEnd::EdgeMid(3)).unwrap();
        let (p, q) = b.pieces;
        assert_eq!(b.complex.face(p).unwrap().labels, Labels::both(Label::Gamma0, Label::Gamma1));
        assert_eq!(b.complex.face(q).unwrap().labels, Labels::both(Label::C, Label::Eta));
        let k = square(Labels::both(Label::Gamma, Label::Eta));
        let b = bisect_face(&k, 1, ChordEnd::Corner(0), ChordEnd::Corner(2)).unwrap();
        assert!(b.complex.faces().all(|(_, f)| f.labels == Labels::both(Label::Gamma, Label::Eta)));
    }

    #[test]
    fn bisection_rejects_equal_ends() {
        let k = square(Labels::none());
        assert!(bisect_face(&k, 1, ChordEnd::Corner(1), ChordEnd::Corner(1)).is_err());
        assert!(bisect_face(&k, 1, ChordEnd::EdgeMid(1), ChordEnd::EdgeMid(1)).is_err());
        assert!(bisect_face(&k, 1, ChordEnd::Corner(0), ChordEnd::Corner(9)).is_err());
    }

    #[test]
    fn labels_json() {
        let l: Labels = serde_json::from_str("\"GAMMA1\"").unwrap();
        assert_eq!(l, Labels::blue(Label::Gamma1));
        let l: Labels = serde_json::from_str("[\"C\",\"ETA\"]").unwrap();
        assert_eq!(serde_json::to_string(&l).unwrap(), "[\"C\",\"ETA\"]");
        assert!(serde_json::from_str::<Labels>("[\"C\",\"GAMMA\"]").is_err());
        assert_eq!(serde_json::to_string(&Labels::none()).unwrap(), "\"UNLABELED\"");
    }
}
