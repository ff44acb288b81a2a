use std::collections::{BTreeMap, BTreeSet};

use gsckit::complex2::{Labels, TwoComplex};
use gsckit::flowmatrix::{
    classify, gsc_certificate, verify_certificate, whitehead_matrix, Classification, GscCertificate,
    IntersectionMatrix,
};
use gsckit::generate::{case_rng, random_easy_matrix};
use gsckit::graph::{Colour, Graph, SpotSet};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// Same entries under new curve and handle ids.
fn relabel(m: &IntersectionMatrix, curve: &BTreeMap<u32, u32>, handle: &BTreeMap<u32, u32>) -> IntersectionMatrix {
    let mut out = IntersectionMatrix::new(
        m.curves().iter().map(|c| curve[c]).collect(),
        m.handles().iter().map(|h| handle[h]).collect(),
    )
    .unwrap();
    for (c, h, n) in m.nonzero() {
        out.add(curve[&c], handle[&h], n).unwrap();
    }
    out
}

fn shuffled(ids: &[u32], rng: &mut impl Rng) -> BTreeMap<u32, u32> {
    let mut to: Vec<u32> = ids.iter().map(|x| x + 100).collect();
    to.shuffle(rng);
    ids.iter().copied().zip(to).collect()
}

/// Every curve's entries sit on its own handle once, or on handles claimed earlier.
fn order_is_valid(m: &IntersectionMatrix, order: &[(u32, u32)]) -> bool {
    let mut claimed = BTreeSet::new();
    for &(c, h) in order {
        if m.get(c, h) != 1 {
            return false;
        }
        if m.nonzero().any(|(c2, h2, _)| c2 == c && h2 != h && !claimed.contains(&h2)) {
            return false;
        }
        claimed.insert(h);
    }
    claimed.len() == m.curves().len()
}

#[test]
fn whitehead_is_difficult() {
    for n in 1..6 {
        assert!(matches!(classify(&whitehead_matrix(n)), Classification::Difficult { .. }));
    }
}

#[test]
fn doubled_diagonal_is_not_id_nil() {
    let m = IntersectionMatrix::from_rows(&[vec![2, 0], vec![1, 1]]).unwrap();
    assert!(matches!(classify(&m), Classification::NotIdNil { .. }));
}

#[test]
fn disc_has_a_certificate() {
    let g = Graph::cycle(4);
    let mut k = TwoComplex::new(g);
    k.add_face_signed(1, &[1, 2, 3, 4], Labels::none()).unwrap();
    let cert = gsc_certificate(&k, &SpotSet::new(Colour::Red, [2])).unwrap();
    let GscCertificate::Witness { steps } = cert else { panic!("expected a witness") };
    assert_eq!(steps, vec![(2, 1)]);
    assert!(verify_certificate(&k, &steps).unwrap().skeleton.is_tree());
}

#[test]
fn spare_spot_is_uncovered() {
    let g = Graph::from_parts([0], [(1, 0, 0), (2, 0, 0)]).unwrap();
    let mut k = TwoComplex::new(g);
    k.add_face_signed(1, &[1], Labels::none()).unwrap();
    let cert = gsc_certificate(&k, &SpotSet::new(Colour::Red, [1, 2])).unwrap();
    assert_eq!(cert, GscCertificate::Uncovered { spots: vec![2] });
}

#[test]
fn non_property_p_spots_are_rejected() {
    let k = TwoComplex::new(Graph::cycle(3));
    assert!(gsc_certificate(&k, &SpotSet::empty(Colour::Red)).is_err());
}

proptest! {
    #[test]
    fn easy_orders_are_valid(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let m = random_easy_matrix(rng.gen_range(1..=7), 3, &mut rng);
        let Classification::Easy { order } = classify(&m) else { panic!("generator makes easy matrices") };
        prop_assert!(order_is_valid(&m, &order));
    }

    #[test]
    fn classification_ignores_labels(seed in any::<u64>(), hard in any::<bool>()) {
        let mut rng = case_rng(seed, 1);
        let m = if hard { whitehead_matrix(rng.gen_range(1..=5)) } else { random_easy_matrix(rng.gen_range(1..=7), 2, &mut rng) };
        let cm = shuffled(m.curves(), &mut rng);
        let hm = shuffled(m.handles(), &mut rng);
        let p = relabel(&m, &cm, &hm);
        let (a, b) = (classify(&m), classify(&p));
        prop_assert_eq!(std::mem::discriminant(&a), std::mem::discriminant(&b));
        if let (Classification::Easy { order: x }, Classification::Easy { order: y }) = (&a, &b) {
            let mapped: BTreeSet<(u32, u32)> = x.iter().map(|(c, h)| (cm[c], hm[h])).collect();
            prop_assert_eq!(mapped, y.iter().copied().collect::<BTreeSet<_>>());
            prop_assert!(order_is_valid(&p, y));
        }
    }
}
