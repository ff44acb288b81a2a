//! Geometric intersection matrices between attaching curves and spotted edges,
//! the easy / difficult id+nilpotent classification and collapse certificates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::complex2::{CollapsePair, FaceId, Label, TwoComplex};
use crate::error::{input_err, invariant_err, precondition_err, Result};
use crate::graph::{is_property_p, Colour, EdgeId, SpotSet};

pub type CurveId = u32;
pub type HandleId = u32;

/// Crossing counts between curves (rows) and handles (columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct IntersectionMatrix {
    curves: Vec<CurveId>,
    handles: Vec<HandleId>,
    entries: BTreeMap<(CurveId, HandleId), u32>,
    pairing: Option<BTreeMap<CurveId, HandleId>>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    curves: Vec<CurveId>,
    handles: Vec<HandleId>,
    entries: Vec<(CurveId, HandleId, u32)>,
    #[serde(default)]
    pairing: Option<Vec<(CurveId, HandleId)>>,
}

impl TryFrom<MatrixJson> for IntersectionMatrix {
    type Error = crate::Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let mut m = IntersectionMatrix::new(j.curves, j.handles)?;
        for (c, h, n) in j.entries {
            m.add(c, h, n)?;
        }
        if let Some(p) = j.pairing {
            m.set_pairing(p)?;
        }
        Ok(m)
    }
}

impl From<IntersectionMatrix> for MatrixJson {
    fn from(m: IntersectionMatrix) -> Self {
        MatrixJson {
            entries: m.entries.iter().map(|(&(c, h), &n)| (c, h, n)).collect(),
            pairing: m.pairing.map(|p| p.into_iter().collect()),
            curves: m.curves,
            handles: m.handles,
        }
    }
}

impl IntersectionMatrix {
    pub fn new(curves: Vec<CurveId>, handles: Vec<HandleId>) -> Result<Self> {
        if curves.iter().collect::<BTreeSet<_>>().len() != curves.len() {
            return Err(input_err!("duplicate curve id"));
        }
        if handles.iter().collect::<BTreeSet<_>>().len() != handles.len() {
            return Err(input_err!("duplicate handle id"));
        }
        Ok(IntersectionMatrix { curves, handles, entries: BTreeMap::new(), pairing: None })
    }

    /// Dense constructor with curves and handles numbered from 1.
    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(input_err!("ragged rows"));
        }
        let mut m = IntersectionMatrix::new(
            (1..=rows.len() as u32).collect(),
            (1..=width as u32).collect(),
        )?;
        for (i, row) in rows.iter().enumerate() {
            for (j, &n) in row.iter().enumerate() {
                m.add(i as u32 + 1, j as u32 + 1, n)?;
            }
        }
        Ok(m)
    }

    /// Adds `n` crossings.
    pub fn add(&mut self, c: CurveId, h: HandleId, n: u32) -> Result<()> {
        if !self.curves.contains(&c) || !self.handles.contains(&h) {
            return Err(input_err!("entry ({c},{h}) outside the matrix"));
        }
        if n > 0 {
            *self.entries.entry((c, h)).or_insert(0) += n;
        }
        Ok(())
    }

    pub fn set_pairing(&mut self, pairs: Vec<(CurveId, HandleId)>) -> Result<()> {
        let mut map = BTreeMap::new();
        let mut used = BTreeSet::new();
        for (c, h) in pairs {
            if !self.curves.contains(&c) || !self.handles.contains(&h) {
                return Err(input_err!("pairing ({c},{h}) outside the matrix"));
            }
            if map.insert(c, h).is_some() || !used.insert(h) {
                return Err(input_err!("pairing is not injective"));
            }
        }
        self.pairing = Some(map);
        Ok(())
    }

    pub fn curves(&self) -> &[CurveId] {
        &self.curves
    }

    pub fn handles(&self) -> &[HandleId] {
        &self.handles
    }

    pub fn pairing(&self) -> Option<&BTreeMap<CurveId, HandleId>> {
        self.pairing.as_ref()
    }

    pub fn get(&self, c: CurveId, h: HandleId) -> u32 {
        self.entries.get(&(c, h)).copied().unwrap_or(0)
    }

    /// Nonzero entries as `(curve, handle, count)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (CurveId, HandleId, u32)> + '_ {
        self.entries.iter().map(|(&(c, h), &n)| (c, h, n))
    }

    pub fn is_square(&self) -> bool {
        self.curves.len() == self.handles.len()
    }

    /// The given pairing, or a maximum matching on 1-entries preferring low ids.
    pub fn effective_pairing(&self) -> BTreeMap<CurveId, HandleId> {
        if let Some(p) = &self.pairing {
            return p.clone();
        }
        let mut handles = self.handles.clone();
        handles.sort_unstable();
        let ones: BTreeMap<CurveId, Vec<HandleId>> = self
            .curves
            .iter()
            .map(|&c| (c, handles.iter().copied().filter(|&h| self.get(c, h) == 1).collect()))
            .collect();
        let mut owner: BTreeMap<HandleId, CurveId> = BTreeMap::new();
        fn augment(
            c: CurveId,
            ones: &BTreeMap<CurveId, Vec<HandleId>>,
            owner: &mut BTreeMap<HandleId, CurveId>,
            seen: &mut BTreeSet<HandleId>,
        ) -> bool {
            for &h in &ones[&c] {
                if !seen.insert(h) {
                    continue;
                }
                let free = match owner.get(&h) {
                    None => true,
                    Some(&d) => augment(d, ones, owner, seen),
                };
                if free {
                    owner.insert(h, c);
                    return true;
                }
            }
            false
        }
        let mut curves = self.curves.clone();
        curves.sort_unstable();
        for c in curves {
            augment(c, &ones, &mut owner, &mut BTreeSet::new());
        }
        owner.into_iter().map(|(h, c)| (c, h)).collect()
    }

    /// Arcs `j -> q` between curves for every off-diagonal entry of `j` on the
    /// handle paired with `q`.
    pub fn trajectory_digraph(&self) -> TrajectoryDigraph {
        let pairing = self.effective_pairing();
        let curve_of: BTreeMap<HandleId, CurveId> = pairing.iter().map(|(&c, &h)| (h, c)).collect();
        let mut arcs: BTreeMap<CurveId, BTreeSet<CurveId>> = BTreeMap::new();
        for (c, h, _) in self.nonzero() {
            if pairing.get(&c) == Some(&h) {
                continue;
            }
            if let Some(&q) = curve_of.get(&h) {
                arcs.entry(c).or_default().insert(q);
            }
        }
        let mut nodes: Vec<CurveId> = pairing.keys().copied().collect();
        nodes.sort_unstable();
        TrajectoryDigraph { nodes, arcs }
    }
}

/// Directed graph on paired curves derived from off-diagonal entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrajectoryDigraph {
    pub nodes: Vec<CurveId>,
    pub arcs: BTreeMap<CurveId, BTreeSet<CurveId>>,
}

impl TrajectoryDigraph {
    pub fn successors(&self, c: CurveId) -> impl Iterator<Item = CurveId> + '_ {
        self.arcs.get(&c).into_iter().flatten().copied()
    }

    /// A directed cycle `[c0, c1, .., c0]`, searched from the lowest node.
    pub fn find_cycle(&self) -> Option<Vec<CurveId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let mut mark: BTreeMap<CurveId, Mark> = BTreeMap::new();
        let mut all: BTreeSet<CurveId> = self.nodes.iter().copied().collect();
        for (a, bs) in &self.arcs {
            all.insert(*a);
            all.extend(bs);
        }
        for &root in &all {
            if mark.contains_key(&root) {
                continue;
            }
            let mut stack: Vec<(CurveId, Vec<CurveId>)> =
                vec![(root, self.successors(root).collect())];
            mark.insert(root, Mark::Open);
            while let Some((node, pending)) = stack.last_mut() {
                let node = *node;
                let Some(next) = pending.pop() else {
                    mark.insert(node, Mark::Done);
                    stack.pop();
                    continue;
                };
                match mark.get(&next) {
                    Some(Mark::Open) => {
                        let start = stack.iter().position(|(n, _)| *n == next).expect("open");
                        let mut cycle: Vec<CurveId> = stack[start..].iter().map(|(n, _)| *n).collect();
                        cycle.push(next);
                        return Some(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        mark.insert(next, Mark::Open);
                        let mut succ: Vec<CurveId> = self.successors(next).collect();
                        succ.reverse();
                        stack.push((next, succ));
                    }
                }
            }
        }
        None
    }

    /// Kahn order placing every curve after the curves it points to; lowest id first.
    pub fn dependency_order(&self) -> Option<Vec<CurveId>> {
        let mut out_deg: BTreeMap<CurveId, usize> =
            self.nodes.iter().map(|&c| (c, self.successors(c).count())).collect();
        let mut preds: BTreeMap<CurveId, Vec<CurveId>> = BTreeMap::new();
        for (&a, bs) in &self.arcs {
            for &b in bs {
                preds.entry(b).or_default().push(a);
            }
        }
        let mut ready: BTreeSet<CurveId> =
            out_deg.iter().filter(|(_, &d)| d == 0).map(|(&c, _)| c).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(c) = ready.pop_first() {
            order.push(c);
            for &p in preds.get(&c).into_iter().flatten() {
                let d = out_deg.get_mut(&p).expect("node");
                *d -= 1;
                if *d == 0 {
                    ready.insert(p);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }
}

/// Why a matrix is not of id+nilpotent type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Defect {
    /// No diagonal of 1-entries covers these curves.
    Diagonal { unmatched: Vec<CurveId> },
    /// A paired entry differs from 1.
    PairedEntry { curve: CurveId, handle: HandleId, value: u32 },
    /// Closed trajectory `[c0, .., c0]`.
    Cycle { cycle: Vec<CurveId> },
}

/// Verdict of [`classify`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    /// Diagonal 1 and every off-diagonal entry of a curve lies on a handle
    /// paired with an earlier curve. `order` lists `(curve, handle)` pairs.
    Easy { order: Vec<(CurveId, HandleId)> },
    /// Acyclic, but these curves depend on handles no curve cancels, so every
    /// admissible order runs away from the finite part.
    Difficult { frontier: Vec<HandleId>, dependent: Vec<CurveId> },
    NotIdNil { defect: Defect },
}

impl Classification {
    pub fn is_easy(&self) -> bool {
        matches!(self, Classification::Easy { .. })
    }
}

/// Sorts a matrix into easy, difficult or not id+nilpotent.
pub fn classify(m: &IntersectionMatrix) -> Classification {
    let pairing = m.effective_pairing();
    let mut unmatched: Vec<CurveId> =
        m.curves.iter().copied().filter(|c| !pairing.contains_key(c)).collect();
    unmatched.sort_unstable();
    if !unmatched.is_empty() {
        return Classification::NotIdNil { defect: Defect::Diagonal { unmatched } };
    }
    for (&c, &h) in &pairing {
        let value = m.get(c, h);
        if value != 1 {
            return Classification::NotIdNil {
                defect: Defect::PairedEntry { curve: c, handle: h, value },
            };
        }
    }
    let dg = m.trajectory_digraph();
    if let Some(cycle) = dg.find_cycle() {
        return Classification::NotIdNil { defect: Defect::Cycle { cycle } };
    }
    let paired: BTreeSet<HandleId> = pairing.values().copied().collect();
    let mut frontier: Vec<HandleId> =
        m.handles.iter().copied().filter(|h| !paired.contains(h)).collect();
    frontier.sort_unstable();
    let touching: BTreeSet<CurveId> = m
        .nonzero()
        .filter(|(_, h, _)| !paired.contains(h))
        .map(|(c, _, _)| c)
        .collect();
    if !touching.is_empty() {
        // Curves whose trajectories reach a frontier-touching curve.
        let mut dependent = touching.clone();
        loop {
            let grow: Vec<CurveId> = dg
                .nodes
                .iter()
                .copied()
                .filter(|c| !dependent.contains(c) && dg.successors(*c).any(|q| dependent.contains(&q)))
                .collect();
            if grow.is_empty() {
                break;
            }
            dependent.extend(grow);
        }
        return Classification::Difficult { frontier, dependent: dependent.into_iter().collect() };
    }
    let order = dg.dependency_order().expect("acyclic");
    Classification::Easy { order: order.into_iter().map(|c| (c, pairing[&c])).collect() }
}

/// Re-checks an easy order directly against the entries.
pub fn verify_easy_order(m: &IntersectionMatrix, order: &[(CurveId, HandleId)]) -> bool {
    if order.len() != m.curves.len() {
        return false;
    }
    let pos_curve: BTreeMap<CurveId, usize> =
        order.iter().enumerate().map(|(i, &(c, _))| (c, i)).collect();
    let pos_handle: BTreeMap<HandleId, usize> =
        order.iter().enumerate().map(|(i, &(_, h))| (h, i)).collect();
    if pos_curve.len() != order.len() || pos_handle.len() != order.len() {
        return false;
    }
    if m.curves.iter().any(|c| !pos_curve.contains_key(c)) {
        return false;
    }
    if order.iter().any(|&(c, h)| m.get(c, h) != 1) {
        return false;
    }
    m.nonzero().all(|(c, h, _)| match pos_handle.get(&h) {
        Some(&ph) => ph <= pos_curve[&c] && (ph < pos_curve[&c] || order[ph].0 == c),
        None => false,
    })
}

fn is_curve_face(labels: crate::complex2::Labels, colour: Colour) -> bool {
    if labels.has(Label::Unlabeled) {
        return true;
    }
    match colour {
        Colour::Red => labels.red == Some(Label::C),
        Colour::Blue => labels.blue == Some(Label::Eta),
        Colour::Green => false,
    }
}

/// Matrix of the curve faces of one colour against the spots.
///
/// RED curves are faces labelled `C`, BLUE curves faces labelled `ETA`;
/// unlabelled faces count for both.
pub fn build_matrix(k: &TwoComplex, spots: &SpotSet, colour: Colour) -> Result<IntersectionMatrix> {
    let faces: Vec<FaceId> = k
        .faces()
        .filter(|(_, f)| is_curve_face(f.labels, colour))
        .map(|(id, _)| id)
        .collect();
    build_matrix_for_faces(k, &faces, spots)
}

/// Matrix of the given faces against the spots.
pub fn build_matrix_for_faces(
    k: &TwoComplex,
    faces: &[FaceId],
    spots: &SpotSet,
) -> Result<IntersectionMatrix> {
    spots.check_in(&k.skeleton)?;
    let mut m = IntersectionMatrix::new(faces.to_vec(), spots.spots.iter().copied().collect())?;
    for &f in faces {
        let face = k.face(f).ok_or_else(|| input_err!("unknown face {f}"))?;
        for se in &face.walk {
            if spots.contains(se.edge) {
                m.add(f, se.edge, 1)?;
            }
        }
    }
    Ok(m)
}

/// Ordered `(spot, face)` removals, or the reason none exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GscCertificate {
    /// Each face is free over its spot at its turn; afterwards the tree is left.
    Witness { steps: Vec<(EdgeId, FaceId)> },
    Refutation { verdict: Classification },
    /// Spots that no face cancels; their edges survive any collapse.
    Uncovered { spots: Vec<EdgeId> },
}

impl GscCertificate {
    pub fn is_witness(&self) -> bool {
        matches!(self, GscCertificate::Witness { .. })
    }
}

/// Certificate that every face cancels against a spot down to the spot-free tree.
///
/// Uses every face of `k` as a curve; faces meant to be deleted by decree must be
/// removed beforehand.
pub fn gsc_certificate(k: &TwoComplex, spots: &SpotSet) -> Result<GscCertificate> {
    if !is_property_p(&k.skeleton, spots)? {
        return Err(precondition_err!("the spots do not leave a tree"));
    }
    let faces: Vec<FaceId> = k.face_ids().collect();
    let m = build_matrix_for_faces(k, &faces, spots)?;
    let verdict = classify(&m);
    let Classification::Easy { order } = verdict else {
        return Ok(GscCertificate::Refutation { verdict });
    };
    let paired: BTreeSet<EdgeId> = order.iter().map(|&(_, h)| h).collect();
    let uncovered: Vec<EdgeId> = spots.spots.iter().copied().filter(|e| !paired.contains(e)).collect();
    if !uncovered.is_empty() {
        return Ok(GscCertificate::Uncovered { spots: uncovered });
    }
    let steps: Vec<(EdgeId, FaceId)> = order.iter().rev().map(|&(f, h)| (h, f)).collect();
    verify_certificate(k, &steps)?;
    Ok(GscCertificate::Witness { steps })
}

/// Replays certificate steps as elementary collapses.
pub fn verify_certificate(k: &TwoComplex, steps: &[(EdgeId, FaceId)]) -> Result<TwoComplex> {
    let mut cur = k.clone();
    for &(e, f) in steps {
        cur = cur
            .elementary_collapse(CollapsePair::edge_face(e, f))
            .map_err(|_| invariant_err!("face {f} is not free over spot {e}"))?;
    }
    if cur.face_count() != 0 || !cur.skeleton.is_tree() {
        return Err(invariant_err!("certificate does not end on a tree"));
    }
    Ok(cur)
}

/// Entries are exactly the identity under the pairing.
pub fn is_cancelling_position(m: &IntersectionMatrix) -> bool {
    if !m.is_square() {
        return false;
    }
    let pairing = m.effective_pairing();
    pairing.len() == m.curves.len()
        && m.nonzero().all(|(c, h, n)| n == 1 && pairing.get(&c) == Some(&h))
        && pairing.iter().all(|(&c, &h)| m.get(c, h) == 1)
}

/// Whitehead-type truncation: curves `1..=n`, handles `1..=n+1`, curve `j`
/// crossing handle `j` once and handle `j+1` twice, with handle `n+1` left open.
pub fn whitehead_matrix(n: u32) -> IntersectionMatrix {
    let mut m = IntersectionMatrix::new((1..=n).collect(), (1..=n + 1).collect())
        .expect("distinct ids");
    for j in 1..=n {
        m.add(j, j, 1).expect("in range");
        m.add(j, j + 1, 2).expect("in range");
    }
    m.set_pairing((1..=n).map(|j| (j, j)).collect()).expect("injective");
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex2::Labels;
    use crate::graph::Graph;

    #[test]
    fn classify_small_examples() {
        let one = IntersectionMatrix::from_rows(&[vec![1]]).unwrap();
        assert_eq!(classify(&one), Classification::Easy { order: vec![(1, 1)] });
        let lower = IntersectionMatrix::from_rows(&[vec![1, 0], vec![1, 1]]).unwrap();
        assert_eq!(classify(&lower), Classification::Easy { order: vec![(1, 1), (2, 2)] });
        let full = IntersectionMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(
            classify(&full),
            Classification::NotIdNil { defect: Defect::Cycle { cycle: vec![1, 2, 1] } }
        );
    }

    #[test]
    fn diagonal_defects() {
        let twos = IntersectionMatrix::from_rows(&[vec![2]]).unwrap();
        assert_eq!(
            classify(&twos),
            Classification::NotIdNil { defect: Defect::Diagonal { unmatched: vec![1] } }
        );
        let mut m = IntersectionMatrix::from_rows(&[vec![1, 0], vec![0, 2]]).unwrap();
        m.set_pairing(vec![(1, 1), (2, 2)]).unwrap();
        assert!(matches!(
            classify(&m),
            Classification::NotIdNil { defect: Defect::PairedEntry { curve: 2, handle: 2, value: 2 } }
        ));
    }

    #[test]
    fn whitehead_is_difficult() {
        let m = whitehead_matrix(4);
        match classify(&m) {
            Classification::Difficult { frontier, dependent } => {
                assert_eq!(frontier, vec![5]);
                assert_eq!(dependent, vec![1, 2, 3, 4]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn easy_order_rechecks() {
        let m = IntersectionMatrix::from_rows(&[
            vec![1, 0, 0],
            vec![3, 1, 0],
            vec![0, 1, 1],
        ])
        .unwrap();
        let Classification::Easy { order } = classify(&m) else { panic!() };
        assert!(verify_easy_order(&m, &order));
        let mut bad = order.clone();
        bad.reverse();
        assert!(!verify_easy_order(&m, &bad));
    }

    #[test]
    fn cancelling_position() {
        let id = IntersectionMatrix::from_rows(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        assert!(is_cancelling_position(&id));
        let off = IntersectionMatrix::from_rows(&[vec![1, 0, 0], vec![0, 1, 1], vec![0, 0, 1]]).unwrap();
        assert!(!is_cancelling_position(&off));
    }

    #[test]
    fn matrix_from_faces() {
        let mut k = TwoComplex::new(Graph::cycle(3));
        k.add_face_signed(1, &[1, 2, 3], Labels::red(Label::C)).unwrap();
        let m = build_matrix(&k, &SpotSet::new(Colour::Red, [2]), Colour::Red).unwrap();
        assert_eq!(m.get(1, 2), 1);
        assert_eq!(build_matrix(&k, &SpotSet::new(Colour::Blue, [2]), Colour::Blue).unwrap().curves().len(), 0);

        let g = Graph::from_parts([0, 1], [(1, 0, 1), (2, 0, 1)]).unwrap();
        let mut k = TwoComplex::new(g);
        k.add_face_signed(1, &[1, -2, 1, -2], Labels::none()).unwrap();
        let m = build_matrix(&k, &SpotSet::new(Colour::Red, [1]), Colour::Red).unwrap();
        assert_eq!(m.get(1, 1), 2);
    }

    #[test]
    fn certificate_for_tree_plus_disc() {
        let mut k = TwoComplex::new(Graph::cycle(3));
        k.add_face_signed(1, &[1, 2, 3], Labels::none()).unwrap();
        let c = gsc_certificate(&k, &SpotSet::new(Colour::Red, [3])).unwrap();
        assert_eq!(c, GscCertificate::Witness { steps: vec![(3, 1)] });
    }

    #[test]
    fn json_round_trip() {
        let m = whitehead_matrix(2);
        let s = serde_json::to_string(&m).unwrap();
        let back: IntersectionMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"curves":[1],"handles":[1],"entries":[[1,2,1]]}"#;
        assert!(serde_json::from_str::<IntersectionMatrix>(bad).is_err());
    }
}
