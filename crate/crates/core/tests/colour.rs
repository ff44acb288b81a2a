use std::collections::BTreeSet;

use gsckit::colour::{colour_change_step, run_colour_change, run_colour_change_with, verify_trace, ColourChangeState};
use gsckit::generate::{case_rng, property_p_pair};
use gsckit::graph::{Colour, EdgeId, Graph, SpotSet};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn theta() -> Graph {
    Graph::from_parts([0, 1], [(1, 0, 1), (2, 0, 1), (3, 0, 1)]).unwrap()
}

#[test]
fn theta_single_swap() {
    let g = theta();
    let r = SpotSet::new(Colour::Red, [1, 2]);
    let b = SpotSet::new(Colour::Blue, [2, 3]);
    let t = run_colour_change(&g, &r, &b).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!((t.steps[0].r, t.steps[0].b), (1, 3));
    assert_eq!(t.phi(&r, &b).into_iter().collect::<Vec<_>>(), vec![(1, 3), (2, 2)]);
}

#[test]
fn equal_spots_need_no_steps() {
    let g = theta();
    let r = SpotSet::new(Colour::Red, [1, 2]);
    let b = SpotSet::new(Colour::Blue, [1, 2]);
    let t = run_colour_change(&g, &r, &b).unwrap();
    assert!(t.is_empty());
    assert!(verify_trace(&g, &r, &b, &t).ok);
}

#[test]
fn tampered_trace_is_rejected() {
    let g = theta();
    let r = SpotSet::new(Colour::Red, [1, 2]);
    let b = SpotSet::new(Colour::Blue, [2, 3]);
    let mut t = run_colour_change(&g, &r, &b).unwrap();
    t.steps[0].witness.pop();
    assert!(!verify_trace(&g, &r, &b, &t).ok);
}

#[test]
fn step_refuses_unknown_choice() {
    let g = theta();
    let s = ColourChangeState::new(&g, &SpotSet::new(Colour::Red, [1, 2]), &SpotSet::new(Colour::Blue, [2, 3])).unwrap();
    assert!(colour_change_step(&s, Some(1)).is_err());
}

proptest! {
    #[test]
    fn any_choice_order_succeeds(seed in any::<u64>()) {
        let (g, r, b) = property_p_pair(12, &mut case_rng(seed, 0));
        let want: BTreeSet<EdgeId> = b.spots.difference(&r.spots).copied().collect();
        let mut rng = case_rng(seed, 1);
        let first = run_colour_change(&g, &r, &b).unwrap();
        let last = run_colour_change_with(&g, &r, &b, |p| *p.last().unwrap()).unwrap();
        let random = run_colour_change_with(&g, &r, &b, |p| *p.choose(&mut rng).unwrap()).unwrap();
        for t in [&first, &last, &random] {
            prop_assert!(verify_trace(&g, &r, &b, t).ok);
            prop_assert_eq!(t.len(), want.len());
            prop_assert_eq!(t.steps.iter().map(|s| s.b).collect::<BTreeSet<_>>(), want.clone());
            let phi = t.phi(&r, &b);
            prop_assert_eq!(phi.keys().copied().collect::<BTreeSet<_>>(), r.spots.clone());
            prop_assert_eq!(phi.values().copied().collect::<BTreeSet<_>>(), b.spots.clone());
        }
    }
}
