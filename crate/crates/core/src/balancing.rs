//! Balancing a subgraph against two spot sets by geodetic arcs and handle slides.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input_err, invariant_err, precondition_err, Result};
use crate::graph::{delete_spots, is_property_p, Colour, EdgeId, Graph, SignedEdge, SpotSet, VertexId};

/// A graph, a connected subgraph and two spot sets with Property P.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancingInstance {
    pub g: Graph,
    pub sub: Graph,
    pub r: SpotSet,
    pub b: SpotSet,
}

/// One handle slide.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlideRecord {
    /// The slid RED spot.
    pub y: EdgeId,
    /// The other RED spots on the arc, in arc order.
    pub xs: Vec<EdgeId>,
    pub arc: Vec<SignedEdge>,
    /// Endpoints of `y` before and after the slide (equal for a mute slide).
    pub y_before: (VertexId, VertexId),
    pub y_after: (VertexId, VertexId),
    pub mute: bool,
}

/// Result of [`balance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Balanced {
    pub instance: BalancingInstance,
    pub records: Vec<SlideRecord>,
}

impl BalancingInstance {
    /// Validates the instance invariants.
    pub fn new(g: Graph, sub: Graph, r: SpotSet, b: SpotSet) -> Result<Self> {
        let inst = BalancingInstance { g, sub, r, b };
        inst.check()?;
        Ok(inst)
    }

    pub fn check(&self) -> Result<()> {
        for (id, u, v) in self.sub.edges() {
            if self.g.endpoints(id) != Some((u, v)) {
                return Err(input_err!("subgraph edge {id} is not an edge of the graph"));
            }
        }
        if let Some(v) = self.sub.vertices().find(|&v| !self.g.has_vertex(v)) {
            return Err(input_err!("subgraph vertex {v} is not in the graph"));
        }
        for s in [&self.r, &self.b] {
            if !is_property_p(&self.g, s)? {
                return Err(input_err!("{} spots do not leave a tree", s.colour));
            }
        }
        if !self.sub.is_connected() {
            return Err(input_err!("subgraph is not connected"));
        }
        if !delete_spots(&self.sub, &self.restrict(&self.r))?.is_tree() {
            return Err(input_err!("RED spots do not leave a tree inside the subgraph"));
        }
        Ok(())
    }

    /// Spots of `s` lying on subgraph edges.
    pub fn restrict(&self, s: &SpotSet) -> SpotSet {
        SpotSet::new(s.colour, s.spots.iter().copied().filter(|&e| self.sub.has_edge(e)))
    }

    fn sub_minus_blue(&self) -> Graph {
        delete_spots(&self.sub, &self.restrict(&self.b)).expect("restricted spots")
    }
}

/// Number of components of `sub - B`, minus one.
pub fn compute_chi(inst: &BalancingInstance) -> usize {
    inst.sub_minus_blue().component_count().saturating_sub(1)
}

/// `|sub ∩ B| - |sub ∩ R|`, which equals the value of [`compute_chi`] on valid instances.
pub fn spot_defect(inst: &BalancingInstance) -> i64 {
    inst.restrict(&inst.b).len() as i64 - inst.restrict(&inst.r).len() as i64
}

fn canonical(walk: Vec<SignedEdge>) -> Vec<SignedEdge> {
    let rev: Vec<SignedEdge> = walk.iter().rev().map(|s| s.reversed()).collect();
    let key = |w: &[SignedEdge]| w.iter().map(|s| s.edge).collect::<Vec<_>>();
    if key(&rev) < key(&walk) {
        rev
    } else {
        walk
    }
}

/// Shortest path in `g - B` joining two components of `sub - B` and meeting
/// `sub` only at its ends; ties go to the smallest edge-id sequence.
pub fn find_geodetic_arc(inst: &BalancingInstance) -> Result<Vec<SignedEdge>> {
    let pieces = inst.sub_minus_blue().components();
    if pieces.len() < 2 {
        return Err(precondition_err!("subgraph minus BLUE is connected; nothing to balance"));
    }
    let block: BTreeMap<VertexId, usize> = pieces
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.iter().map(move |&v| (v, i)))
        .collect();
    let forest = delete_spots(&inst.g, &inst.b)?;
    let sub_vertices: Vec<VertexId> = inst.sub.vertices().collect();
    let mut best: Option<Vec<SignedEdge>> = None;
    for (i, &a) in sub_vertices.iter().enumerate() {
        for &c in &sub_vertices[i + 1..] {
            if block[&a] == block[&c] {
                continue;
            }
            let Some(path) = forest.forest_path(a, c) else { continue };
            let interior_clear = path[..path.len() - 1].iter().all(|&se| {
                let (_, head) = forest.oriented_ends(se).expect("edge");
                !inst.sub.has_vertex(head)
            });
            if !interior_clear {
                continue;
            }
            let path = canonical(path);
            let better = match &best {
                None => true,
                Some(b) => {
                    (path.len(), path.iter().map(|s| s.edge).collect::<Vec<_>>())
                        < (b.len(), b.iter().map(|s| s.edge).collect::<Vec<_>>())
                }
            };
            if better {
                best = Some(path);
            }
        }
    }
    let arc = best.ok_or_else(|| invariant_err!("no arc joins two components of sub - B"))?;
    if !arc.iter().any(|s| inst.r.contains(s.edge)) {
        return Err(invariant_err!("geodetic arc carries no RED spot"));
    }
    Ok(arc)
}

/// Rank of each RED spot; later in the list is larger. Spots missing from the
/// list fall back to edge-id order below every listed spot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RedOrder {
    ranking: Vec<EdgeId>,
}

impl RedOrder {
    pub fn by_id() -> Self {
        RedOrder::default()
    }

    pub fn from_ranking(ranking: Vec<EdgeId>) -> Result<Self> {
        if ranking.iter().collect::<BTreeSet<_>>().len() != ranking.len() {
            return Err(input_err!("RED order lists a spot twice"));
        }
        Ok(RedOrder { ranking })
    }

    fn key(&self, e: EdgeId) -> (usize, EdgeId) {
        match self.ranking.iter().position(|&x| x == e) {
            Some(i) => (i + 1, e),
            None => (0, e),
        }
    }

    /// The maximal spot among `spots`.
    pub fn max(&self, spots: &[EdgeId]) -> Option<EdgeId> {
        spots.iter().copied().max_by_key(|&e| self.key(e))
    }
}

/// Slides the maximal RED spot `y` of the arc past the others and adjoins the
/// arc pieces to `sub`.
///
/// With RED spots `s_1 .. s_k` along the arc, `y` is re-attached between the
/// tail of `s_1` and the head of `s_k`; the segments before `s_1` and after
/// `s_k` join `sub`. When `y` is the only RED spot the arc joins `sub` unchanged.
pub fn slide_balance_step(
    inst: &BalancingInstance,
    arc: &[SignedEdge],
    order: &RedOrder,
    y: Option<EdgeId>,
) -> Result<(BalancingInstance, SlideRecord)> {
    let mut ends_seq = Vec::with_capacity(arc.len());
    for &se in arc {
        ends_seq.push(inst.g.oriented_ends(se).ok_or_else(|| input_err!("unknown arc edge {}", se.edge))?);
    }
    if arc.is_empty() || ends_seq.windows(2).any(|w| w[0].1 != w[1].0) {
        return Err(input_err!("arc is not a nonempty walk"));
    }
    if arc.iter().any(|s| inst.b.contains(s.edge)) {
        return Err(input_err!("arc meets a BLUE spot"));
    }
    let red_pos: Vec<usize> = (0..arc.len()).filter(|&i| inst.r.contains(arc[i].edge)).collect();
    if red_pos.is_empty() {
        return Err(invariant_err!("arc carries no RED spot"));
    }
    let on_arc: Vec<EdgeId> = red_pos.iter().map(|&i| arc[i].edge).collect();
    let top = order.max(&on_arc).expect("nonempty");
    let y = match y {
        Some(y) if y != top => {
            return Err(input_err!("spot {y} is not maximal on the arc (maximum is {top})"))
        }
        _ => top,
    };
    let xs: Vec<EdgeId> = on_arc.iter().copied().filter(|&e| e != y).collect();
    let y_before = inst.g.endpoints(y).expect("arc edge");
    let mut out = inst.clone();
    let ends = |se: SignedEdge| inst.g.oriented_ends(se).expect("arc edge");
    let add_to_sub = |out: &mut BalancingInstance, piece: &[SignedEdge]| -> Result<()> {
        for &se in piece {
            let (u, v) = ends(se);
            out.sub.add_vertex(u);
            out.sub.add_vertex(v);
            if !out.sub.has_edge(se.edge) {
                let (a, b) = out.g.endpoints(se.edge).expect("edge");
                out.sub.add_edge(se.edge, a, b)?;
            }
        }
        Ok(())
    };
    let (first, last) = (red_pos[0], *red_pos.last().expect("nonempty"));
    let mute = xs.is_empty();
    let y_after = if mute {
        add_to_sub(&mut out, arc)?;
        y_before
    } else {
        let (tail, _) = ends(arc[first]);
        let (_, head) = ends(arc[last]);
        out.g.remove_edge(y);
        out.g.add_edge(y, tail, head)?;
        add_to_sub(&mut out, &arc[..first])?;
        add_to_sub(&mut out, &arc[last + 1..])?;
        out.sub.add_vertex(tail);
        out.sub.add_vertex(head);
        out.sub.add_edge(y, tail, head)?;
        (tail, head)
    };
    let record = SlideRecord { y, xs, arc: arc.to_vec(), y_before, y_after, mute };
    if !is_property_p(&out.g, &out.r)? || !is_property_p(&out.g, &out.b)? {
        return Err(invariant_err!("slide of {y} broke Property P"));
    }
    if compute_chi(&out) + 1 != compute_chi(inst) {
        return Err(invariant_err!("slide of {y} did not merge two components"));
    }
    Ok((out, record))
}

/// Runs slides until `sub - B` is connected and checks the final balance.
pub fn balance(inst: &BalancingInstance, order: &RedOrder) -> Result<Balanced> {
    inst.check()?;
    let chi = compute_chi(inst);
    let mut cur = inst.clone();
    let mut records = Vec::with_capacity(chi);
    while compute_chi(&cur) > 0 {
        let arc = find_geodetic_arc(&cur)?;
        let (next, rec) = slide_balance_step(&cur, &arc, order, None)?;
        cur = next;
        records.push(rec);
    }
    if records.len() != chi {
        return Err(invariant_err!("{} slides for a defect of {chi}", records.len()));
    }
    check_balanced(&cur)?;
    Ok(Balanced { instance: cur, records })
}

/// All four complements are trees and `sub` carries as many RED as BLUE spots,
/// both equal to its first Betti number.
pub fn check_balanced(inst: &BalancingInstance) -> Result<()> {
    let trees = [
        delete_spots(&inst.g, &inst.r)?.is_tree(),
        delete_spots(&inst.g, &inst.b)?.is_tree(),
        delete_spots(&inst.sub, &inst.restrict(&inst.r))?.is_tree(),
        delete_spots(&inst.sub, &inst.restrict(&inst.b))?.is_tree(),
    ];
    if trees.contains(&false) {
        return Err(invariant_err!("complement trees after balancing: {trees:?}"));
    }
    let (nr, nb, b1) = (inst.restrict(&inst.r).len(), inst.restrict(&inst.b).len(), inst.sub.betti1());
    if nr != nb || nb != b1 {
        return Err(invariant_err!("unbalanced: |R| = {nr}, |B| = {nb}, b1 = {b1}"));
    }
    Ok(())
}

/// Random spanning tree containing `forced` (a forest), by shuffled Kruskal.
pub(crate) fn spanning_tree<R: Rng>(g: &Graph, forced: &[EdgeId], rng: &mut R) -> BTreeSet<EdgeId> {
    let mut parent: BTreeMap<VertexId, VertexId> = g.vertices().map(|v| (v, v)).collect();
    fn find(p: &mut BTreeMap<VertexId, VertexId>, v: VertexId) -> VertexId {
        let mut r = v;
        while p[&r] != r {
            r = p[&r];
        }
        let mut x = v;
        while p[&x] != r {
            let n = p[&x];
            p.insert(x, r);
            x = n;
        }
        r
    }
    let mut rest: Vec<EdgeId> = g.edge_ids().filter(|e| !forced.contains(e)).collect();
    rest.shuffle(rng);
    let mut tree = BTreeSet::new();
    for e in forced.iter().copied().chain(rest) {
        let (u, v) = g.endpoints(e).expect("edge");
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent.insert(a, b);
            tree.insert(e);
        }
    }
    tree
}

/// Random connected multigraph on `n` vertices with `extra` non-tree edges.
pub fn random_connected_graph<R: Rng>(n: u32, extra: u32, rng: &mut R) -> Graph {
    let mut g = Graph::new();
    for v in 0..n {
        g.add_vertex(v);
    }
    let mut id = 1;
    for v in 1..n {
        let u = rng.gen_range(0..v);
        g.add_edge(id, u, v).expect("fresh");
        id += 1;
    }
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let mut v = rng.gen_range(0..n);
        if n > 1 {
            while v == u {
                v = rng.gen_range(0..n);
            }
        }
        g.add_edge(id, u, v).expect("fresh");
        id += 1;
    }
    g
}

/// Random valid instance with the given defect, or `None` after `tries` attempts.
pub fn random_instance<R: Rng>(
    n: u32,
    extra: u32,
    chi: usize,
    tries: usize,
    rng: &mut R,
) -> Option<BalancingInstance> {
    for _ in 0..tries {
        let g = random_connected_graph(n, extra, rng);
        // Grow a connected vertex set, then take every graph edge inside it.
        let target = rng.gen_range(2..=n.max(2)) as usize;
        let mut verts = BTreeSet::from([rng.gen_range(0..n)]);
        let adj = g.adjacency();
        while verts.len() < target {
            let frontier: Vec<VertexId> = verts
                .iter()
                .flat_map(|v| adj[v].iter().map(|&(_, w)| w))
                .filter(|w| !verts.contains(w))
                .collect();
            let Some(&w) = frontier.choose(rng) else { break };
            verts.insert(w);
        }
        let mut sub = Graph::new();
        for &v in &verts {
            sub.add_vertex(v);
        }
        for (id, u, v) in g.edges() {
            if verts.contains(&u) && verts.contains(&v) && rng.gen_bool(0.8) {
                sub.add_edge(id, u, v).expect("fresh");
            }
        }
        if !sub.is_connected() {
            continue;
        }
        let sub_tree: Vec<EdgeId> = spanning_tree(&sub, &[], rng).into_iter().collect();
        let t_r = spanning_tree(&g, &sub_tree, rng);
        let t_b = spanning_tree(&g, &[], rng);
        let r = SpotSet::new(Colour::Red, g.edge_ids().filter(|e| !t_r.contains(e)));
        let b = SpotSet::new(Colour::Blue, g.edge_ids().filter(|e| !t_b.contains(e)));
        let inst = BalancingInstance { g, sub, r, b };
        if compute_chi(&inst) == chi && inst.check().is_ok() {
            return Some(inst);
        }
    }
    None
}
