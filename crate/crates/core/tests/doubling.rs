use std::collections::BTreeSet;

use gsckit::complex2::{Cell, Label};
use gsckit::doubling::{
    build_double, build_new, check_punchlines, toys, verify_blue_collapse, verify_red_collapse, CaseTag,
};

fn chi(k: &gsckit::complex2::TwoComplex) -> i64 {
    k.skeleton.vertex_count() as i64 - k.skeleton.edge_count() as i64 + k.face_count() as i64
}

#[test]
fn square_counts_by_hand() {
    let n = build_new(&toys::square()).unwrap();
    // Four old vertices and four lifted ones; four old, four vertical and four lower edges.
    assert_eq!(n.complex.skeleton.vertex_count(), 8);
    assert_eq!(n.complex.skeleton.edge_count(), 12);
    assert_eq!(n.complex.face_count(), 6);
    // b on edge 2 plus one per lower edge; h on the four old edges plus the moved spot.
    assert_eq!(n.blue.len(), 5);
    assert_eq!(n.red.len(), 5);

    let d = build_double(&n).unwrap();
    let r = &d.registry;
    assert_eq!(r.c_b.len(), 5);
    assert_eq!(r.c_r.len(), 7);
    assert_eq!(d.b_side.len(), 5);
    assert_eq!(r.c.len(), 4 + 7 + 5);
    assert_eq!(r.h.len(), 4 + 5 + 7);
    assert_eq!(d.complex.skeleton.vertex_count(), 16);
    assert_eq!(d.complex.skeleton.edge_count(), 12 * 2 + 8);
    assert_eq!(d.complex.face_count(), 5 + 5 + 12);
    assert!(r.very_trivial.is_empty());
}

#[test]
fn euler_bookkeeping() {
    for (name, o) in toys::all() {
        let n = build_new(&o).unwrap();
        // Each new vertex brings one vertical edge; each lower edge one prism face.
        assert_eq!(chi(&n.complex), chi(&o.complex) + o.delta.len() as i64, "{name}");
        let d = build_double(&n).unwrap();
        let g = &n.complex.skeleton;
        let x0_faces = n.complex.faces().filter(|(_, f)| f.labels.red != Some(Label::Gamma0)).count() as i64;
        let eta_faces = n.complex.faces().filter(|(_, f)| f.labels.blue == Some(Label::Eta)).count() as i64;
        let expected = g.vertex_count() as i64 - g.edge_count() as i64 + x0_faces + eta_faces;
        assert_eq!(chi(&d.complex), expected, "{name}");
    }
}

#[test]
fn tags_follow_spots() {
    for (name, o) in toys::all() {
        let n = build_new(&o).unwrap();
        let d = build_double(&n).unwrap();
        let low: BTreeSet<u32> = n.lower.values().copied().collect();
        assert_eq!(d.rb_band.len(), n.complex.skeleton.edge_count(), "{name}");
        for band in d.rb_band.values() {
            let e = band.edge;
            let want = if low.contains(&e) {
                CaseTag::Bis
            } else {
                match (n.red.contains(e), n.blue.contains(e)) {
                    (true, false) => CaseTag::I,
                    (true, true) => CaseTag::II,
                    (false, true) => CaseTag::III,
                    (false, false) => CaseTag::IV,
                }
            };
            assert_eq!(band.tag, want, "{name} edge {e}");
        }
        for &p in n.vertical.values() {
            assert_eq!(d.tag_of_edge(p), Some(CaseTag::IV));
        }
    }
}

#[test]
fn shared_spots_live_on_b_side() {
    for (_, o) in toys::all() {
        let d = build_double(&build_new(&o).unwrap()).unwrap();
        let b_edges: BTreeSet<u32> = d.b_edge.values().copied().collect();
        let added_red: BTreeSet<u32> = d.r1.spots.difference(&d.new.red.spots).copied().collect();
        let added_blue: BTreeSet<u32> = d.b1.spots.difference(&d.new.blue.spots).copied().collect();
        assert_eq!(added_red, added_blue);
        assert!(added_red.is_subset(&b_edges));
        // One per b and one per edge without a b: every b-side edge.
        assert_eq!(added_red, b_edges);
    }
}

#[test]
fn red_phases_and_target() {
    for (name, o) in toys::all() {
        let d = build_double(&build_new(&o).unwrap()).unwrap();
        let red = verify_red_collapse(&d).unwrap();
        let first = red.phase("b_side").unwrap();
        assert!(!first.steps.is_empty());
        for s in &first.steps.steps {
            let Cell::Face(f) = s.coface else { panic!() };
            assert!(d.b_side.contains_key(&f), "{name}");
        }
        let left = red.replay(&d.red_view()).unwrap();
        let faces: BTreeSet<u32> = left.face_ids().collect();
        assert_eq!(faces, d.delta_low, "{name}");
    }
}

#[test]
fn blue_phases_and_tree() {
    for (name, o) in toys::all() {
        let d = build_double(&build_new(&o).unwrap()).unwrap();
        let blue = verify_blue_collapse(&d).unwrap();
        let cb = blue.phase("c_b").unwrap();
        assert_eq!(cb.steps.len(), d.registry.c_b.len());
        for s in &cb.steps.steps {
            let (Cell::Edge(e), Cell::Face(f)) = (s.free, s.coface) else { panic!() };
            assert_eq!(d.rb_band[&f].edge, e, "{name}: c(b) must go through e × r");
        }
        let arrows = blue.arrows();
        assert!(d.base.iter().all(|f| !arrows.contains_key(f)), "{name}");
        let left = blue.replay(&d.complex).unwrap();
        assert_eq!(left.face_count(), 0);
        assert!(left.skeleton.is_tree());
        let red = verify_red_collapse(&d).unwrap();
        let report = check_punchlines(&d, &red, &blue);
        assert!(report.all_ok(), "{name}: {report:?}");
    }
}

#[test]
fn broken_pairing_is_reported() {
    let d = build_double(&build_new(&toys::square()).unwrap()).unwrap();
    let mut bad = d.clone();
    // Send a b-side face through a rung, which is never free at that point.
    let f = *bad.b_side.keys().next().unwrap();
    let rung = *bad.rung.values().next().unwrap();
    bad.registry.red_pairing.insert(f, rung);
    assert!(verify_red_collapse(&bad).is_err());
}
