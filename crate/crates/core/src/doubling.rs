//! The old, new and doubled complexes, and replayed RED and BLUE collapses of the double.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::complex2::{Cell, CollapsePair, CollapseSchedule, FaceId, Label, Labels, TwoComplex};
use crate::error::{input_err, invariant_err, precondition_err, Result};
use crate::flowmatrix::{build_matrix_for_faces, classify, Classification, IntersectionMatrix};
use crate::gps::Check;
use crate::graph::{is_property_p, Colour, EdgeId, SignedEdge, SpotSet, VertexId};

/// A labelled complex with RED and BLUE spots and the faces of Δ².
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OldComplex {
    pub complex: TwoComplex,
    pub red: SpotSet,
    pub blue: SpotSet,
    /// Faces of Δ². Their edges form Γ(1).
    pub delta: BTreeSet<FaceId>,
}

/// `X²[new]`: the old complex at level 0, the prism over Γ(1) and a copy of Δ² at level −1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewComplex {
    pub complex: TwoComplex,
    /// `R₀`.
    pub red: SpotSet,
    /// `B₀`.
    pub blue: SpotSet,
    /// Γ(1) vertex `P` to `P × (−1)`.
    pub lift: BTreeMap<VertexId, VertexId>,
    /// Γ(1) vertex `P` to the edge `P × [0, −1]`, oriented downwards.
    pub vertical: BTreeMap<VertexId, EdgeId>,
    /// Γ(1) edge `e` to `e × (−1)`.
    pub lower: BTreeMap<EdgeId, EdgeId>,
    /// Γ(1) edge `e` to the prism face `e × [0, −1]`.
    pub prism: BTreeMap<EdgeId, FaceId>,
    /// Δ² face to its copy at level −1.
    pub delta_low: BTreeMap<FaceId, FaceId>,
    /// `R_i × (−1)`: the RED spots of Γ(1) moved down.
    pub red_low: BTreeSet<EdgeId>,
}

/// Checks the spot sets of an input complex.
fn check_spots(k: &TwoComplex, red: &SpotSet, blue: &SpotSet) -> Result<()> {
    if red.colour != Colour::Red || blue.colour != Colour::Blue {
        return Err(input_err!("spot sets must be RED and BLUE"));
    }
    for s in [red, blue] {
        s.check_in(&k.skeleton)?;
        if !is_property_p(&k.skeleton, s)? {
            return Err(input_err!("{} spots do not leave a tree", s.colour));
        }
    }
    Ok(())
}

/// Pushes Δ² down to level −1 across a prism over Γ(1).
pub fn build_new(old: &OldComplex) -> Result<NewComplex> {
    let k0 = &old.complex;
    check_spots(k0, &old.red, &old.blue)?;
    if old.delta.is_empty() {
        return Err(input_err!("Δ² has no faces"));
    }
    let mut gamma_edges = BTreeSet::new();
    for &f in &old.delta {
        let face = k0.face(f).ok_or_else(|| input_err!("Δ² face {f} is not in the complex"))?;
        gamma_edges.extend(face.walk.iter().map(|se| se.edge));
    }
    let mut gamma_vertices = BTreeSet::new();
    for &e in &gamma_edges {
        let (u, v) = k0.skeleton.endpoints(e).expect("face edges exist");
        gamma_vertices.insert(u);
        gamma_vertices.insert(v);
    }

    let mut k = k0.clone();
    for &f in &old.delta {
        let mut labels = k.face(f).expect("checked").labels;
        labels.red = Some(Label::Gamma0);
        k.set_labels(f, labels)?;
    }
    let mut next_v = k.skeleton.max_vertex_id().map_or(0, |v| v + 1);
    let mut lift = BTreeMap::new();
    for &p in &gamma_vertices {
        k.skeleton.add_vertex(next_v);
        lift.insert(p, next_v);
        next_v += 1;
    }
    let mut next_e = k.skeleton.max_edge_id().unwrap_or(0) + 1;
    let mut vertical = BTreeMap::new();
    for &p in &gamma_vertices {
        k.skeleton.add_edge(next_e, p, lift[&p])?;
        vertical.insert(p, next_e);
        next_e += 1;
    }
    let mut lower = BTreeMap::new();
    for &e in &gamma_edges {
        let (u, v) = k0.skeleton.endpoints(e).expect("checked");
        k.skeleton.add_edge(next_e, lift[&u], lift[&v])?;
        lower.insert(e, next_e);
        next_e += 1;
    }
    let mut next_f = k.max_face_id().map_or(1, |f| f + 1);
    let mut prism = BTreeMap::new();
    for &e in &gamma_edges {
        let (u, v) = k0.skeleton.endpoints(e).expect("checked");
        let walk = vec![
            SignedEdge::fwd(e),
            SignedEdge::fwd(vertical[&v]),
            SignedEdge::back(lower[&e]),
            SignedEdge::back(vertical[&u]),
        ];
        k.add_face(next_f, walk, Labels::both(Label::C, Label::Eta))?;
        prism.insert(e, next_f);
        next_f += 1;
    }
    let mut delta_low = BTreeMap::new();
    for &f in &old.delta {
        let walk = k0.face(f).expect("checked").walk.iter()
            .map(|se| SignedEdge { edge: lower[&se.edge], forward: se.forward })
            .collect();
        k.add_face(next_f, walk, Labels::both(Label::Gamma, Label::Gamma1))?;
        delta_low.insert(f, next_f);
        next_f += 1;
    }

    let red_gamma: BTreeSet<EdgeId> = old.red.spots.intersection(&gamma_edges).copied().collect();
    let red_low: BTreeSet<EdgeId> = red_gamma.iter().map(|e| lower[e]).collect();
    let red = SpotSet::new(
        Colour::Red,
        red_low.iter().chain(&old.red.spots).chain(&gamma_edges).copied(),
    );
    let blue = SpotSet::new(Colour::Blue, old.blue.spots.iter().chain(lower.values()).copied());
    for s in [&red, &blue] {
        if !is_property_p(&k.skeleton, s)? {
            return Err(invariant_err!("new {} spots do not leave a tree", s.colour));
        }
    }
    Ok(NewComplex { complex: k, red, blue, lift, vertical, lower, prism, delta_low, red_low })
}

impl NewComplex {
    /// `X₀²[new]`: the complex without its γ⁰ faces.
    pub fn x0(&self) -> TwoComplex {
        let mut k = self.complex.clone();
        k.delete_by_label(Label::Gamma0);
        k
    }

    /// The h spots: `R₀` minus the RED spots at level −1.
    pub fn h_spots(&self) -> SpotSet {
        SpotSet::new(Colour::Red, self.red.spots.difference(&self.red_low).copied())
    }

    /// Faces labelled C in `X₀²[new]` against the h spots.
    pub fn red_matrix(&self) -> Result<IntersectionMatrix> {
        let k = self.x0();
        let faces: Vec<FaceId> = k.faces().filter(|(_, f)| f.labels.red == Some(Label::C)).map(|(id, _)| id).collect();
        build_matrix_for_faces(&k, &faces, &self.h_spots())
    }

    /// Faces labelled η against `B₀`.
    pub fn blue_matrix(&self) -> Result<IntersectionMatrix> {
        let faces: Vec<FaceId> =
            self.complex.faces().filter(|(_, f)| f.labels.blue == Some(Label::Eta)).map(|(id, _)| id).collect();
        build_matrix_for_faces(&self.complex, &faces, &self.blue)
    }

    /// Edges at level −1.
    pub fn is_low_edge(&self, e: EdgeId) -> bool {
        self.lower.values().any(|&x| x == e)
    }
}

/// How the band `e × [r, b]` over an edge `e` of Γ(∞) is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CaseTag {
    /// RED spot and no BLUE spot.
    I,
    /// Both spots.
    II,
    /// BLUE spot only.
    III,
    /// No spot.
    IV,
    /// Edge at level −1.
    Bis,
}

impl CaseTag {
    /// Bands whose edge carries a b: `c(b)`. The others are `c(r)`.
    pub fn is_cb(self) -> bool {
        matches!(self, CaseTag::II | CaseTag::III | CaseTag::Bis)
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::I => "I",
            CaseTag::II => "II",
            CaseTag::III => "III",
            CaseTag::IV => "IV",
            CaseTag::Bis => "BIS",
        })
    }
}

/// One band rectangle `e × [r, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    /// Edge of `X²[new]` under the band.
    pub edge: EdgeId,
    pub tag: CaseTag,
}

/// Extended curve families of the double and their dual spots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    pub c: Vec<FaceId>,
    /// The `c(b)` bands. The γ⁰ faces of `X²[new]` themselves are absent from the double.
    pub gamma0: Vec<FaceId>,
    /// γ⁰ faces of `X²[new]`, by their ids there.
    pub gamma0_absent: Vec<FaceId>,
    pub eta: Vec<FaceId>,
    pub gamma1: Vec<FaceId>,
    pub c_r: Vec<FaceId>,
    pub c_b: Vec<FaceId>,
    /// `R₁` minus the RED spots at level −1.
    pub h: Vec<EdgeId>,
    /// `B₀` spots on edges that lie on no face.
    pub very_trivial: Vec<EdgeId>,
    /// Extended C face to its h.
    pub red_pairing: BTreeMap<FaceId, EdgeId>,
    /// Extended η face to its b.
    pub blue_pairing: BTreeMap<FaceId, EdgeId>,
}

/// `2X²`: `X₀²[new] × r`, the bands `Γ(∞) × [r, b]` and the η faces at `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubledComplex {
    pub new: NewComplex,
    /// Every cell of `2X²`. `2X₀²` is this minus the `c(b)` bands.
    pub complex: TwoComplex,
    /// r-side copies keep the ids of `X²[new]`; vertex `v` to `v × b`.
    pub b_vertex: BTreeMap<VertexId, VertexId>,
    /// Edge `e` to `e × b`.
    pub b_edge: BTreeMap<EdgeId, EdgeId>,
    /// Vertex `v` to the rung `v × [r, b]`, oriented from r to b.
    pub rung: BTreeMap<VertexId, EdgeId>,
    /// r-side faces, the base `X₀²[new] × r`.
    pub base: BTreeSet<FaceId>,
    /// r-side prism faces.
    pub xi_band: BTreeSet<FaceId>,
    pub rb_band: BTreeMap<FaceId, Band>,
    /// b-side face to the η face of `X²[new]` it copies.
    pub b_side: BTreeMap<FaceId, FaceId>,
    /// `Δ² × (−1)` on the r-side.
    pub delta_low: BTreeSet<FaceId>,
    pub r1: SpotSet,
    pub b1: SpotSet,
    pub registry: Registry,
}

fn easy_pairing(m: &IntersectionMatrix, what: &str) -> Result<BTreeMap<FaceId, EdgeId>> {
    match classify(m) {
        Classification::Easy { order } => Ok(order.into_iter().collect()),
        other => Err(precondition_err!("{what} is not easy: {other:?}")),
    }
}

/// Builds the double of `X²[new]` with case tags, `R₁`, `B₁` and the curve registry.
pub fn build_double(new: &NewComplex) -> Result<DoubledComplex> {
    let red_pair = easy_pairing(&new.red_matrix()?, "C·h of X₀²[new]")?;
    let blue_pair = easy_pairing(&new.blue_matrix()?, "η·B of X²[new]")?;
    let x0 = new.x0();
    let g = &new.complex.skeleton;
    let voff = g.max_vertex_id().map_or(0, |v| v + 1);
    let eoff = g.max_edge_id().unwrap_or(0);
    let foff = new.complex.max_face_id().unwrap_or(0);

    let mut k = TwoComplex::new(g.clone());
    let mut b_vertex = BTreeMap::new();
    for v in g.vertices() {
        k.skeleton.add_vertex(v + voff);
        b_vertex.insert(v, v + voff);
    }
    let mut b_edge = BTreeMap::new();
    for (e, u, v) in g.edges() {
        k.skeleton.add_edge(e + eoff, u + voff, v + voff)?;
        b_edge.insert(e, e + eoff);
    }
    let mut rung = BTreeMap::new();
    let mut next_e = 2 * eoff + 1;
    for v in g.vertices() {
        k.skeleton.add_edge(next_e, v, v + voff)?;
        rung.insert(v, next_e);
        next_e += 1;
    }

    let mut base = BTreeSet::new();
    for (f, face) in x0.faces() {
        k.add_face(f, face.walk.clone(), face.labels)?;
        base.insert(f);
    }
    let xi_band: BTreeSet<FaceId> = new.prism.values().copied().collect();
    let mut b_side = BTreeMap::new();
    for (f, face) in new.complex.faces().filter(|(_, f)| f.labels.blue == Some(Label::Eta)) {
        let walk = face.walk.iter().map(|se| SignedEdge { edge: se.edge + eoff, forward: se.forward }).collect();
        k.add_face(f + foff, walk, Labels::both(Label::C, Label::Eta))?;
        b_side.insert(f + foff, f);
    }
    let mut rb_band = BTreeMap::new();
    let mut next_f = 2 * foff + 1;
    for (e, u, v) in g.edges() {
        let tag = if new.is_low_edge(e) {
            CaseTag::Bis
        } else {
            match (new.red.contains(e), new.blue.contains(e)) {
                (true, false) => CaseTag::I,
                (true, true) => CaseTag::II,
                (false, true) => CaseTag::III,
                (false, false) => CaseTag::IV,
            }
        };
        let walk = vec![
            SignedEdge::fwd(e),
            SignedEdge::fwd(rung[&v]),
            SignedEdge::back(e + eoff),
            SignedEdge::back(rung[&u]),
        ];
        let labels = if tag.is_cb() {
            Labels::both(Label::Gamma0, Label::Eta)
        } else {
            Labels::both(Label::C, Label::Eta)
        };
        k.add_face(next_f, walk, labels)?;
        rb_band.insert(next_f, Band { edge: e, tag });
        next_f += 1;
    }

    let e_r: Vec<EdgeId> = g.edge_ids().filter(|&e| !new.blue.contains(e)).collect();
    let shared: Vec<EdgeId> =
        new.blue.spots.iter().map(|e| e + eoff).chain(e_r.iter().map(|e| e + eoff)).collect();
    let r1 = SpotSet::new(Colour::Red, new.red.spots.iter().copied().chain(shared.iter().copied()));
    let b1 = SpotSet::new(Colour::Blue, new.blue.spots.iter().copied().chain(shared.iter().copied()));

    let c_r: Vec<FaceId> = rb_band.iter().filter(|(_, b)| !b.tag.is_cb()).map(|(&f, _)| f).collect();
    let c_b: Vec<FaceId> = rb_band.iter().filter(|(_, b)| b.tag.is_cb()).map(|(&f, _)| f).collect();
    let c_side: Vec<FaceId> = red_pair.keys().copied().collect();
    let mut registry = Registry {
        c: c_side.iter().chain(&c_r).chain(b_side.keys()).copied().collect(),
        gamma0: c_b.clone(),
        gamma0_absent: new.complex.faces().filter(|(_, f)| f.labels.red == Some(Label::Gamma0)).map(|(id, _)| id).collect(),
        eta: b_side.keys().chain(&c_r).chain(&c_b).copied().collect(),
        gamma1: base.iter().copied().collect(),
        c_r: c_r.clone(),
        c_b: c_b.clone(),
        h: r1.spots.iter().filter(|e| !new.red_low.contains(e)).copied().collect(),
        very_trivial: new.blue.spots.iter().filter(|&&e| new.complex.edge_use(e) == 0).copied().collect(),
        ..Registry::default()
    };
    registry.c.sort_unstable();
    registry.eta.sort_unstable();
    registry.red_pairing.extend(red_pair);
    for (&f, &b) in &b_side {
        let pair = blue_pair[&b] + eoff;
        registry.red_pairing.insert(f, pair);
        registry.blue_pairing.insert(f, pair);
    }
    for (&f, band) in &rb_band {
        if band.tag.is_cb() {
            registry.blue_pairing.insert(f, band.edge);
        } else {
            registry.red_pairing.insert(f, band.edge + eoff);
            registry.blue_pairing.insert(f, band.edge + eoff);
        }
    }
    let delta_low = new.delta_low.values().copied().collect();
    Ok(DoubledComplex {
        new: new.clone(),
        complex: k,
        b_vertex,
        b_edge,
        rung,
        base,
        xi_band,
        rb_band,
        b_side,
        delta_low,
        r1,
        b1,
        registry,
    })
}

impl DoubledComplex {
    /// `2X₀²`: the double without the `c(b)` bands.
    pub fn red_view(&self) -> TwoComplex {
        let mut k = self.complex.clone();
        for f in &self.registry.c_b {
            k.remove_face(*f);
        }
        k
    }

    /// Extended C faces against the extended h spots, paired by duality.
    pub fn red_matrix(&self) -> Result<IntersectionMatrix> {
        let k = self.red_view();
        let h = SpotSet::new(Colour::Red, self.registry.h.iter().copied());
        let mut m = build_matrix_for_faces(&k, &self.registry.c, &h)?;
        m.set_pairing(self.registry.red_pairing.iter().map(|(&f, &e)| (f, e)).collect())?;
        Ok(m)
    }

    /// Extended η faces against `B₁`, paired by duality.
    pub fn blue_matrix(&self) -> Result<IntersectionMatrix> {
        let mut m = build_matrix_for_faces(&self.complex, &self.registry.eta, &self.b1)?;
        m.set_pairing(self.registry.blue_pairing.iter().map(|(&f, &e)| (f, e)).collect())?;
        Ok(m)
    }

    /// Cells of `Δ² × (−1)` on the r-side.
    pub fn delta_low_cells(&self) -> BTreeSet<Cell> {
        self.complex.closure_of_faces(&self.delta_low)
    }

    pub fn tag_of_edge(&self, e: EdgeId) -> Option<CaseTag> {
        self.rb_band.values().find(|b| b.edge == e).map(|b| b.tag)
    }
}

/// One named phase of a collapse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub steps: CollapseSchedule,
}

/// Faces deleted outright, then collapse phases in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasedSchedule {
    pub deleted: Vec<FaceId>,
    pub phases: Vec<Phase>,
}

impl PhasedSchedule {
    /// All steps in order.
    pub fn schedule(&self) -> CollapseSchedule {
        CollapseSchedule { steps: self.phases.iter().flat_map(|p| p.steps.steps.iter().copied()).collect() }
    }

    /// Face to the free edge it collapses through.
    pub fn arrows(&self) -> BTreeMap<FaceId, EdgeId> {
        let mut out = BTreeMap::new();
        for p in &self.phases {
            for s in &p.steps.steps {
                if let (Cell::Edge(e), Cell::Face(f)) = (s.free, s.coface) {
                    out.insert(f, e);
                }
            }
        }
        out
    }

    pub fn phase(&self, name: &str) -> Option<&Phase> {
        self.phases.iter().find(|p| p.name == name)
    }

    /// Deletes and replays on `k`.
    pub fn replay(&self, k: &TwoComplex) -> Result<TwoComplex> {
        let mut cur = k.clone();
        for f in &self.deleted {
            cur.remove_face(*f).ok_or_else(|| precondition_err!("deleted face {f} is missing"))?;
        }
        self.schedule().apply(&cur)
    }
}

/// Collapses each face through its paired edge as soon as that edge is free.
fn run_phase(
    k: &mut TwoComplex,
    name: &str,
    faces: &[FaceId],
    pairing: &BTreeMap<FaceId, EdgeId>,
) -> Result<Phase> {
    let mut pending: BTreeSet<FaceId> = faces.iter().copied().collect();
    let mut steps = Vec::new();
    while !pending.is_empty() {
        let ready: Vec<FaceId> = pending
            .iter()
            .copied()
            .filter(|f| k.is_free(CollapsePair::edge_face(pairing[f], *f)))
            .collect();
        if ready.is_empty() {
            let stuck: Vec<String> = pending
                .iter()
                .map(|f| {
                    let e = pairing[f];
                    let on: Vec<FaceId> = k.faces_on_edge(e).map(|(g, _)| g).collect();
                    format!("face {f} via edge {e} (faces on it: {on:?})")
                })
                .collect();
            return Err(invariant_err!("{name} phase is stuck: {}", stuck.join("; ")));
        }
        for f in ready {
            let p = CollapsePair::edge_face(pairing[&f], f);
            if k.is_free(p) {
                k.collapse_in_place(p)?;
                steps.push(p);
                pending.remove(&f);
            }
        }
    }
    Ok(Phase { name: name.to_string(), steps: CollapseSchedule { steps } })
}

/// Collapses `2X₀²` onto `Δ² × (−1)`: the b-side faces, then the `c(r)` bands,
/// then the C faces of the r-side, then leaf pruning.
pub fn verify_red_collapse(d: &DoubledComplex) -> Result<PhasedSchedule> {
    let start = d.red_view();
    let mut k = start.clone();
    let pairing = &d.registry.red_pairing;
    let b_side: Vec<FaceId> = d.b_side.keys().copied().collect();
    let r_side: Vec<FaceId> = d.base.iter().copied().filter(|f| pairing.contains_key(f)).collect();
    let mut phases = vec![
        run_phase(&mut k, "b_side", &b_side, pairing)?,
        run_phase(&mut k, "c_r", &d.registry.c_r, pairing)?,
        run_phase(&mut k, "r_side", &r_side, pairing)?,
    ];
    let target = d.delta_low_cells();
    let steps = crate::complex2::prune_leaves(&mut k, &target);
    phases.push(Phase { name: "prune".into(), steps: CollapseSchedule { steps } });
    if k.cells() != target {
        let extra: Vec<Cell> = k.cells().difference(&target).copied().collect();
        return Err(invariant_err!("RED collapse leaves cells outside Δ² × (−1): {extra:?}"));
    }
    let out = PhasedSchedule { deleted: Vec::new(), phases };
    if out.replay(&start)?.cells() != target {
        return Err(invariant_err!("RED schedule replay disagrees"));
    }
    Ok(out)
}

/// Deletes the r-side faces of `2X²`, then collapses the `c(b)` bands, the
/// b-side faces and the `c(r)` bands. A tree must remain.
pub fn verify_blue_collapse(d: &DoubledComplex) -> Result<PhasedSchedule> {
    let mut k = d.complex.clone();
    let deleted = d.registry.gamma1.clone();
    for f in &deleted {
        k.remove_face(*f);
    }
    let pairing = &d.registry.blue_pairing;
    let b_side: Vec<FaceId> = d.b_side.keys().copied().collect();
    let phases = vec![
        run_phase(&mut k, "c_b", &d.registry.c_b, pairing)?,
        run_phase(&mut k, "b_side", &b_side, pairing)?,
        run_phase(&mut k, "c_r", &d.registry.c_r, pairing)?,
    ];
    if k.face_count() != 0 || !k.skeleton.is_tree() {
        return Err(invariant_err!(
            "BLUE collapse leaves {} faces and a graph with first Betti number {}",
            k.face_count(),
            k.skeleton.betti1()
        ));
    }
    let out = PhasedSchedule { deleted, phases };
    let after = out.replay(&d.complex)?;
    if after.face_count() != 0 || !after.skeleton.is_tree() {
        return Err(invariant_err!("BLUE schedule replay disagrees"));
    }
    Ok(out)
}

/// Faces collapsed in both schedules must use the same free edge.
pub fn check_arrows(red: &BTreeMap<FaceId, EdgeId>, blue: &BTreeMap<FaceId, EdgeId>) -> Check {
    let crossed: Vec<FaceId> = red.iter().filter(|(f, e)| blue.get(f).is_some_and(|b| b != *e)).map(|(&f, _)| f).collect();
    let common = red.keys().filter(|f| blue.contains_key(f)).count();
    if crossed.is_empty() {
        Check::pass(format!("{common} faces carry both arrows, all parallel"))
    } else {
        Check::fail(format!("arrows cross on faces {crossed:?}"))
    }
}

/// Outcome of the closing checks on a double.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PunchlineReport {
    /// `Δ² × (−1)` lies in the extended γ¹ family.
    pub a: Check,
    /// The RED and BLUE arrows never cross.
    pub b: Check,
    /// No band face of `2X₀²` shares an edge with `Δ² × (−1)`.
    pub c: Check,
    pub red_easy: Check,
    pub blue_easy: Check,
    /// Duality counts between curves and spots.
    pub counts: Check,
}

impl PunchlineReport {
    pub fn checks(&self) -> [(&'static str, &Check); 6] {
        [
            ("a", &self.a),
            ("b", &self.b),
            ("c", &self.c),
            ("red_easy", &self.red_easy),
            ("blue_easy", &self.blue_easy),
            ("counts", &self.counts),
        ]
    }

    pub fn all_ok(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.ok)
    }
}

fn matrix_check(m: Result<IntersectionMatrix>) -> Check {
    match m.map(|m| classify(&m)) {
        Ok(Classification::Easy { order }) => Check::pass(format!("easy of size {}", order.len())),
        Ok(other) => Check::fail(format!("{other:?}")),
        Err(e) => Check::fail(e.to_string()),
    }
}

/// Checks the closing statements on a double and its two schedules.
pub fn check_punchlines(d: &DoubledComplex, red: &PhasedSchedule, blue: &PhasedSchedule) -> PunchlineReport {
    let gamma1: BTreeSet<FaceId> = d.registry.gamma1.iter().copied().collect();
    let a = match d.delta_low.iter().find(|f| !gamma1.contains(f)) {
        None => Check::pass(format!("{} faces of Δ² × (−1) are extended γ¹", d.delta_low.len())),
        Some(f) => Check::fail(format!("face {f} of Δ² × (−1) is not extended γ¹")),
    };
    let b = check_arrows(&red.arrows(), &blue.arrows());

    let low_edges: BTreeSet<EdgeId> =
        d.delta_low_cells().into_iter().filter_map(|c| if let Cell::Edge(e) = c { Some(e) } else { None }).collect();
    let untagged: Vec<EdgeId> = d
        .new
        .lower
        .values()
        .copied()
        .filter(|&e| d.tag_of_edge(e) != Some(CaseTag::Bis))
        .collect();
    let red_view = d.red_view();
    let touching: Vec<FaceId> = d
        .rb_band
        .keys()
        .copied()
        .filter(|f| red_view.face(*f).is_some_and(|face| face.walk.iter().any(|se| low_edges.contains(&se.edge))))
        .collect();
    let c = if !untagged.is_empty() {
        Check::fail(format!("edges at level −1 not tagged BIS: {untagged:?}"))
    } else if !touching.is_empty() {
        Check::fail(format!("band faces {touching:?} meet Δ² × (−1) along an edge"))
    } else {
        Check::pass(format!("{} BIS bands, none left in 2X₀²", d.new.lower.len()))
    };

    let reg = &d.registry;
    let e_r_spots = reg.c_r.iter().filter(|f| d.r1.contains(d.b_edge[&d.rb_band[f].edge])).count();
    let b_spots = d.new.blue.len();
    let counts = if reg.c_r.len() == e_r_spots
        && d.b_side.len() == b_spots
        && reg.c_b.len() == b_spots
        && reg.c.len() == reg.h.len()
        && reg.eta.len() == d.b1.len()
    {
        Check::pass(format!(
            "|c(r)| = {}, |η × b| = |b × b| = {}, |C| = |h| = {}, |η| = |B₁| = {}",
            reg.c_r.len(),
            b_spots,
            reg.c.len(),
            reg.eta.len()
        ))
    } else {
        Check::fail(format!(
            "|c(r)| = {}, e(r) × b spots {}, |η × b| = {}, |c(b)| = {}, |B₀| = {}, |C| = {}, |h| = {}, |η| = {}, |B₁| = {}",
            reg.c_r.len(),
            e_r_spots,
            d.b_side.len(),
            reg.c_b.len(),
            b_spots,
            reg.c.len(),
            reg.h.len(),
            reg.eta.len(),
            d.b1.len()
        ))
    };
    PunchlineReport {
        a,
        b,
        c,
        red_easy: matrix_check(d.red_matrix()),
        blue_easy: matrix_check(d.blue_matrix()),
        counts,
    }
}

/// Worked inputs for the construction.
pub mod toys {
    use super::*;
    use crate::graph::Graph;

    fn old(k: TwoComplex, red: &[EdgeId], blue: &[EdgeId], delta: &[FaceId]) -> OldComplex {
        OldComplex {
            complex: k,
            red: SpotSet::new(Colour::Red, red.iter().copied()),
            blue: SpotSet::new(Colour::Blue, blue.iter().copied()),
            delta: delta.iter().copied().collect(),
        }
    }

    /// One square, which is all of Δ².
    pub fn square() -> OldComplex {
        let mut k = TwoComplex::new(Graph::cycle(4));
        k.add_face_signed(1, &[1, 2, 3, 4], Labels::both(Label::Gamma, Label::Eta)).expect("closed walk");
        old(k, &[1], &[2], &[1])
    }

    /// Two squares sharing edge 6. One b sits on an outer edge of the first, the other on edge 6.
    pub fn glued_squares() -> OldComplex {
        let g = Graph::from_parts(0..6, [(1, 0, 1), (2, 1, 2), (3, 3, 4), (4, 4, 5), (5, 0, 3), (6, 1, 4), (7, 2, 5)])
            .expect("fresh ids");
        let mut k = TwoComplex::new(g);
        let l = Labels::both(Label::Gamma, Label::Eta);
        k.add_face_signed(1, &[1, 6, -3, -5], l).expect("closed walk");
        k.add_face_signed(2, &[2, 7, -4, -6], l).expect("closed walk");
        old(k, &[3, 7], &[5, 6], &[1, 2])
    }

    /// An annulus of three quadrilaterals with a cone on its inner triangle.
    ///
    /// Vertices `a1..a3 = 0..2`, `o1..o3 = 3..5`, cone point 6. The annulus is Δ².
    pub fn annulus() -> OldComplex {
        let g = Graph::from_parts(
            0..7,
            [
                (1, 0, 1),
                (2, 1, 2),
                (3, 2, 0),
                (4, 3, 4),
                (5, 4, 5),
                (6, 5, 3),
                (7, 3, 0),
                (8, 4, 1),
                (9, 5, 2),
                (10, 6, 0),
                (11, 6, 1),
                (12, 6, 2),
            ],
        )
        .expect("fresh ids");
        let mut k = TwoComplex::new(g);
        let quad = Labels::both(Label::Gamma, Label::Eta);
        let cone = Labels::both(Label::C, Label::Eta);
        k.add_face_signed(1, &[4, 8, -1, -7], quad).expect("closed walk");
        k.add_face_signed(2, &[5, 9, -2, -8], quad).expect("closed walk");
        k.add_face_signed(3, &[6, 7, -3, -9], quad).expect("closed walk");
        k.add_face_signed(4, &[10, 1, -11], cone).expect("closed walk");
        k.add_face_signed(5, &[11, 2, -12], cone).expect("closed walk");
        k.add_face_signed(6, &[12, 3, -10], Labels::both(Label::Gamma0, Label::Eta)).expect("closed walk");
        old(k, &[6, 8, 9, 3, 10, 12], &[4, 5, 6, 1, 2, 3], &[1, 2, 3])
    }

    pub fn all() -> Vec<(&'static str, OldComplex)> {
        vec![("square", square()), ("glued_squares", glued_squares()), ("annulus", annulus())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_new_has_prism_and_copy() {
        let n = build_new(&toys::square()).unwrap();
        let faces: Vec<Labels> = n.complex.faces().map(|(_, f)| f.labels).collect();
        assert_eq!(faces.len(), 6);
        assert_eq!(faces.iter().filter(|l| l.red == Some(Label::Gamma0)).count(), 1);
        assert_eq!(faces.iter().filter(|l| l.red == Some(Label::C)).count(), 4);
        assert_eq!(faces.iter().filter(|l| l.blue == Some(Label::Gamma1)).count(), 1);
        for e in n.lower.values() {
            assert!(n.blue.contains(*e));
        }
        for e in n.vertical.values() {
            assert!(!n.red.contains(*e) && !n.blue.contains(*e));
        }
    }

    #[test]
    fn bad_delta_is_input_error() {
        let mut o = toys::square();
        o.delta.insert(9);
        assert!(matches!(build_new(&o), Err(crate::Error::Input(_))));
    }

    #[test]
    fn toys_double_and_collapse() {
        for (name, o) in toys::all() {
            let n = build_new(&o).unwrap();
            let d = build_double(&n).unwrap();
            let red = verify_red_collapse(&d).unwrap_or_else(|e| panic!("{name}: {e}"));
            let blue = verify_blue_collapse(&d).unwrap_or_else(|e| panic!("{name}: {e}"));
            let rep = check_punchlines(&d, &red, &blue);
            assert!(rep.all_ok(), "{name}: {rep:?}");
        }
    }

    #[test]
    fn crossed_arrows_fail() {
        let red = BTreeMap::from([(1, 10), (2, 20)]);
        let blue = BTreeMap::from([(1, 10), (2, 21)]);
        assert!(!check_arrows(&red, &blue).ok);
        assert!(check_arrows(&red, &BTreeMap::from([(2, 20), (3, 5)])).ok);
    }
}
