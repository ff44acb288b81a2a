use gsckit::doubling::toys;
use gsckit::io::{complex_dot, graph_dot, parse_json, to_json, ComplexJson, GraphJson, OldComplexDoc, SpottedGraphDoc};
use gsckit::graph::{Colour, Graph, SpotSet};
use gsckit::Error;

#[test]
fn malformed_json_reports_position() {
    let err = parse_json::<GraphJson>("{\n  \"edges\": [\n    {\"id\": 1,, }\n  ]\n}").unwrap_err();
    let Error::Input(msg) = err else { panic!("expected an input error") };
    assert!(msg.contains("line 3"), "{msg}");
    assert!(msg.contains("column"), "{msg}");
}

#[test]
fn spotted_graph_needs_both_colours() {
    let doc: SpottedGraphDoc = parse_json(r#"{"edges": [{"id": 1, "ends": [0, 0]}], "red": [1]}"#).unwrap();
    assert!(doc.pair().is_err());
    assert_eq!(doc.graph.to_graph().unwrap().vertex_count(), 1);
}

#[test]
fn complex_round_trip_is_stable() {
    for (_, old) in toys::all() {
        let text = to_json(&ComplexJson::from_complex(&old.complex));
        let back: ComplexJson = parse_json(&text).unwrap();
        assert_eq!(back.to_complex().unwrap(), old.complex);
        assert_eq!(to_json(&back), text);
        let doc = OldComplexDoc::from_old(&old);
        let again: OldComplexDoc = parse_json(&to_json(&doc)).unwrap();
        assert_eq!(again.to_old().unwrap(), old);
    }
}

#[test]
fn dot_marks_spot_colours() {
    let g = Graph::cycle(3);
    let r = SpotSet::new(Colour::Red, [1, 2]);
    let b = SpotSet::new(Colour::Blue, [2]);
    let dot = graph_dot(&g, Some(&r), Some(&b));
    assert!(dot.starts_with("graph"));
    assert!(dot.contains("red") && dot.contains("purple"));
    assert!(!dot.contains("blue"));
    let (_, sq) = toys::all().into_iter().next().unwrap();
    assert!(complex_dot(&sq.complex, None, None).contains("graph"));
}
