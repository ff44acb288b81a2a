use std::collections::{BTreeMap, BTreeSet};

use gsckit::complex2::{
    bisect_face, collapse_to_spine, gf2_homology_ranks, prune_leaves, split_edge, Cell, ChordEnd, Labels, TwoComplex,
};
use gsckit::generate::{case_rng, random_complex};
use gsckit::graph::{Graph, SignedEdge};
use proptest::prelude::*;
use rand::Rng;

fn disc(n: u32) -> TwoComplex {
    let g = Graph::cycle(n);
    let walk: Vec<SignedEdge> = g.edge_ids().map(SignedEdge::fwd).collect();
    let mut k = TwoComplex::new(g);
    k.add_face(1, walk, Labels::none()).unwrap();
    k
}

/// Betti numbers over GF(2) from boundary matrices as bit sets.
fn betti(k: &TwoComplex) -> (usize, usize, usize) {
    fn rank(mut rows: Vec<BTreeSet<usize>>) -> usize {
        let mut r = 0;
        while let Some(i) = rows.iter().position(|x| !x.is_empty()) {
            let row = rows.swap_remove(i);
            let pivot = *row.iter().next().unwrap();
            for other in rows.iter_mut().filter(|x| x.contains(&pivot)) {
                *other = other.symmetric_difference(&row).copied().collect();
            }
            r += 1;
        }
        r
    }
    let vi: BTreeMap<_, _> = k.skeleton.vertices().enumerate().map(|(i, v)| (v, i)).collect();
    let ei: BTreeMap<_, _> = k.skeleton.edge_ids().enumerate().map(|(i, e)| (e, i)).collect();
    // A loop has zero boundary.
    let d1 = k
        .skeleton
        .edges()
        .map(|(_, u, v)| if u == v { BTreeSet::new() } else { BTreeSet::from([vi[&u], vi[&v]]) })
        .collect();
    let d2 = k
        .faces()
        .map(|(_, f)| {
            let mut s = BTreeSet::new();
            for se in &f.walk {
                if !s.insert(ei[&se.edge]) {
                    s.remove(&ei[&se.edge]);
                }
            }
            s
        })
        .collect();
    let (r1, r2) = (rank(d1), rank(d2));
    (vi.len() - r1, ei.len() - r1 - r2, k.face_count() - r2)
}

#[test]
fn disc_collapses_to_a_point() {
    let k = disc(4);
    assert_eq!(k.euler_characteristic(), 1);
    let spine: BTreeSet<Cell> = [Cell::Vertex(0)].into();
    let out = collapse_to_spine(&k, &spine, 8).unwrap();
    assert!(out.is_success());
    let rest = out.schedule().unwrap().apply(&k).unwrap();
    assert_eq!(rest.cells(), spine);
}

#[test]
fn projective_plane_homology() {
    let g = Graph::from_parts([0], [(1, 0, 0)]).unwrap();
    let mut k = TwoComplex::new(g);
    k.add_face_signed(1, &[1, 1], Labels::none()).unwrap();
    assert_eq!(gf2_homology_ranks(&k), (1, 1, 1));
    assert!(k.free_faces().is_empty());
}

#[test]
fn walks_must_close() {
    let mut k = TwoComplex::new(Graph::path(3));
    assert!(k.add_face_signed(1, &[1, 2], Labels::none()).is_err());
}

#[test]
fn prune_keeps_requested_cells() {
    let mut k = TwoComplex::new(Graph::path(4));
    let keep: BTreeSet<Cell> = [Cell::Vertex(1)].into();
    prune_leaves(&mut k, &keep);
    assert_eq!(k.cells(), keep);
}

#[test]
fn bisection_adds_one_face() {
    let k = disc(6);
    let b = bisect_face(&k, 1, ChordEnd::Corner(0), ChordEnd::Corner(3)).unwrap();
    assert_eq!(b.complex.face_count(), 2);
    assert_eq!(b.complex.euler_characteristic(), 1);
    let (p, q) = b.pieces;
    assert_eq!(b.complex.face(p).unwrap().walk.len() + b.complex.face(q).unwrap().walk.len(), 8);
}

proptest! {
    #[test]
    fn library_homology_matches_oracle(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let faces = rng.gen_range(1..=6);
        let cycles = rng.gen_range(1..=4);
        let k = random_complex(faces, cycles, &mut rng).complex;
        prop_assert_eq!(gf2_homology_ranks(&k), betti(&k));
    }

    #[test]
    fn moves_keep_homology(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 1);
        let mut k = random_complex(rng.gen_range(1..=5), rng.gen_range(1..=3), &mut rng).complex;
        let before = betti(&k);
        for _ in 0..20 {
            match rng.gen_range(0..3) {
                0 => {
                    if let Some(&p) = k.free_faces().first() {
                        k.collapse_in_place(p).unwrap();
                    }
                }
                1 => {
                    let first = k.skeleton.edge_ids().next();
                    if let Some(e) = first {
                        split_edge(&mut k, e).unwrap();
                    }
                }
                _ => {
                    let first = k.face_ids().next();
                    if let Some(f) = first {
                        let n = k.face(f).unwrap().walk.len();
                        if let Ok(b) = bisect_face(&k, f, ChordEnd::EdgeMid(0), ChordEnd::Corner(rng.gen_range(0..n))) {
                            k = b.complex;
                        }
                    }
                }
            }
            prop_assert_eq!(betti(&k), before);
        }
    }
}
