use gsckit::fuzz::{run_cases, run_suite, FuzzParams, SUITES};
use gsckit::io::to_json;

fn small() -> FuzzParams {
    FuzzParams { depth: 3, max_faces: 5, steps: 20 }
}

#[test]
fn every_suite_behaves() {
    for suite in SUITES {
        let rep = run_suite(suite, 11, 8, &small()).unwrap();
        assert_eq!(rep.cases.len(), 8);
        assert!(rep.as_expected(), "{suite}: {:?}", rep.cases.iter().find(|c| c.ok == rep.expects_failures));
        if rep.expects_failures {
            assert_eq!(rep.failed, 8);
        } else {
            assert_eq!(rep.passed, 8);
        }
    }
}

#[test]
fn same_seed_same_report() {
    let a = to_json(&run_suite("gsc", 3, 12, &small()).unwrap());
    let b = to_json(&run_suite("gsc", 3, 12, &small()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn single_case_reproduces() {
    for suite in ["colour", "inject"] {
        let all = run_suite(suite, 9, 6, &small()).unwrap();
        let one = run_cases(suite, 9, 4, 1, &small()).unwrap();
        assert_eq!(one.cases[0], all.cases[4]);
    }
    let failed = run_cases("inject", 9, 4, 1, &small()).unwrap();
    assert_eq!(failed.cases[0].reproducer.as_deref(), Some("gsckit fuzz inject --seed 9 --case 4"));
}

#[test]
fn unknown_suite_is_an_input_error() {
    assert!(matches!(run_suite("nope", 0, 1, &small()), Err(gsckit::Error::Input(_))));
}
