//! Seeded fuzz suites with per-case verdicts and reproducer commands.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balancing::{balance, random_instance, RedOrder};
use crate::colour::{run_colour_change, verify_trace};
use crate::complex2::{bisect_face, collapse_to_spine, gf2_homology_ranks, split_edge, Cell, ChordEnd};
use crate::doubling::{build_double, build_new, check_punchlines, toys, verify_blue_collapse, verify_red_collapse};
use crate::error::{input_err, Result};
use crate::flowmatrix::gsc_certificate;
use crate::generate::{case_rng, property_p_pair, random_complex, random_easy_matrix};
use crate::gps::{blue_flow, build_gps3, verify_definition5, Bounds, Q};
use crate::lava::{build_state_graph, build_train_track, is_laminar, transversal_intervals};

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 9] = ["colour", "witness", "balance", "gsc", "homology", "lava", "double", "gps", "inject"];

/// Knobs shared by the suites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzParams {
    /// Transversal depth for `lava`.
    pub depth: usize,
    /// Exhaustive search bound for `gsc`.
    pub max_faces: usize,
    /// Steps per case for `homology`.
    pub steps: usize,
}

impl Default for FuzzParams {
    fn default() -> Self {
        FuzzParams { depth: 6, max_faces: 8, steps: 50 }
    }
}

/// Verdict of one case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub index: u64,
    pub ok: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reproducer: Option<String>,
}

/// Verdicts of a whole run, ordered by case index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub suite: String,
    pub seed: u64,
    pub count: u64,
    pub passed: u64,
    pub failed: u64,
    /// The suite plants a violation in every case, so each case should fail.
    pub expects_failures: bool,
    pub cases: Vec<CaseResult>,
}

impl FuzzReport {
    pub fn all_ok(&self) -> bool {
        self.failed == 0
    }

    /// Every case passed, or for a planted-violation suite, every case failed.
    pub fn as_expected(&self) -> bool {
        if self.expects_failures {
            self.passed == 0
        } else {
            self.failed == 0
        }
    }
}

type CaseFn = fn(u64, u64, &FuzzParams) -> std::result::Result<String, String>;

fn suite_fn(name: &str) -> Option<CaseFn> {
    Some(match name {
        "colour" => colour_case,
        "witness" => witness_case,
        "balance" => balance_case,
        "gsc" => gsc_case,
        "homology" => homology_case,
        "lava" => lava_case,
        "double" => double_case,
        "gps" => gps_case,
        "inject" => inject_case,
        _ => return None,
    })
}

/// Runs cases `first .. first + count` of a suite.
pub fn run_cases(suite: &str, seed: u64, first: u64, count: u64, params: &FuzzParams) -> Result<FuzzReport> {
    let f = suite_fn(suite).ok_or_else(|| input_err!("unknown suite {suite:?}; known: {}", SUITES.join(", ")))?;
    let cases: Vec<CaseResult> = (first..first + count)
        .into_par_iter()
        .map(|index| {
            let (ok, detail) = match f(seed, index, params) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            let reproducer = (!ok).then(|| format!("gsckit fuzz {suite} --seed {seed} --case {index}"));
            CaseResult { index, ok, detail, reproducer }
        })
        .collect();
    let passed = cases.iter().filter(|c| c.ok).count() as u64;
    Ok(FuzzReport {
        suite: suite.to_string(),
        seed,
        count,
        passed,
        failed: count - passed,
        expects_failures: suite == "inject",
        cases,
    })
}

/// Runs cases `0 .. count` of a suite.
pub fn run_suite(suite: &str, seed: u64, count: u64, params: &FuzzParams) -> Result<FuzzReport> {
    run_cases(suite, seed, 0, count, params)
}

fn colour_case(seed: u64, i: u64, _: &FuzzParams) -> std::result::Result<String, String> {
    let (g, r, b) = property_p_pair(12, &mut case_rng(seed, i));
    let trace = run_colour_change(&g, &r, &b).map_err(|e| e.to_string())?;
    let v = verify_trace(&g, &r, &b, &trace);
    if !v.ok {
        return Err(format!("trace rejected: {:?}", v.failure));
    }
    Ok(format!("{} vertices, {} steps", g.vertex_count(), trace.len()))
}

fn witness_case(seed: u64, i: u64, _: &FuzzParams) -> std::result::Result<String, String> {
    let (g, r, b) = property_p_pair(12, &mut case_rng(seed, i));
    let trace = run_colour_change(&g, &r, &b).map_err(|e| e.to_string())?;
    for s in &trace.steps {
        let count = |e| s.witness.iter().filter(|x| x.edge == e).count();
        if count(s.r) != 1 || count(s.b) != 1 {
            return Err(format!("step {}: crossings r {} b {}", s.j, count(s.r), count(s.b)));
        }
    }
    Ok(format!("{} witnesses", trace.len()))
}

fn balance_case(seed: u64, i: u64, _: &FuzzParams) -> std::result::Result<String, String> {
    let chi = (i % 4) as usize;
    let mut rng = case_rng(seed, i);
    let n = rng.gen_range(4..=9);
    let inst = random_instance(n, n, chi, 400, &mut rng).ok_or_else(|| format!("no instance with defect {chi}"))?;
    let out = balance(&inst, &RedOrder::by_id()).map_err(|e| e.to_string())?;
    if out.records.len() != chi {
        return Err(format!("{} slides for defect {chi}", out.records.len()));
    }
    Ok(format!("defect {chi}, {} slides", out.records.len()))
}

fn gsc_case(seed: u64, i: u64, p: &FuzzParams) -> std::result::Result<String, String> {
    let mut rng = case_rng(seed, i);
    let faces = rng.gen_range(1..=p.max_faces.max(1));
    let cycles = if rng.gen_bool(0.5) { faces as u32 } else { rng.gen_range(1..=faces as u32 + 1) };
    let s = random_complex(faces, cycles, &mut rng);
    let cert = gsc_certificate(&s.complex, &s.spots).map_err(|e| e.to_string())?;
    let spine: BTreeSet<Cell> = s
        .complex
        .skeleton
        .vertices()
        .map(Cell::Vertex)
        .chain(s.complex.skeleton.edge_ids().filter(|e| !s.spots.contains(*e)).map(Cell::Edge))
        .collect();
    let search = collapse_to_spine(&s.complex, &spine, p.max_faces).map_err(|e| e.to_string())?;
    if cert.is_witness() != search.is_success() {
        return Err(format!("certificate {} but spine search {:?}", cert.is_witness(), search.is_success()));
    }
    Ok(format!("{faces} faces, collapsible {}", search.is_success()))
}

fn homology_case(seed: u64, i: u64, p: &FuzzParams) -> std::result::Result<String, String> {
    let mut rng = case_rng(seed, i);
    let faces = rng.gen_range(2..=6);
    let cycles = rng.gen_range(1..=4);
    let mut k = random_complex(faces, cycles, &mut rng).complex;
    let want = gf2_homology_ranks(&k);
    let mut done = [0usize; 3];
    for step in 0..p.steps {
        let pick = rng.gen_range(0..3);
        match pick {
            0 => {
                let free = k.free_faces();
                let Some(&pair) = free.choose(&mut rng) else { continue };
                k.collapse_in_place(pair).map_err(|e| e.to_string())?;
            }
            1 => {
                let ids: Vec<u32> = k.face_ids().collect();
                let Some(&f) = ids.choose(&mut rng) else { continue };
                let n = k.face(f).expect("listed").walk.len();
                let end = |rng: &mut rand_chacha::ChaCha8Rng| {
                    let at = rng.gen_range(0..n);
                    if rng.gen_bool(0.5) { ChordEnd::Corner(at) } else { ChordEnd::EdgeMid(at) }
                };
                let (a, b) = (end(&mut rng), end(&mut rng));
                match bisect_face(&k, f, a, b) {
                    Ok(bis) => k = bis.complex,
                    Err(_) => continue,
                }
            }
            _ => {
                let ids: Vec<u32> = k.skeleton.edge_ids().collect();
                let Some(&e) = ids.choose(&mut rng) else { continue };
                split_edge(&mut k, e).map_err(|e| e.to_string())?;
            }
        }
        done[pick] += 1;
        let got = gf2_homology_ranks(&k);
        if got != want {
            return Err(format!("step {step}: Betti numbers {want:?} became {got:?}"));
        }
    }
    Ok(format!("Betti {want:?} kept over {} collapses, {} bisections, {} splits", done[0], done[1], done[2]))
}

fn lava_case(seed: u64, i: u64, p: &FuzzParams) -> std::result::Result<String, String> {
    let mut rng = case_rng(seed, i);
    let n = rng.gen_range(1..=6);
    let m = random_easy_matrix(n, 2, &mut rng);
    let sg = build_state_graph(&m).map_err(|e| e.to_string())?;
    let bad = sg.check_invariants();
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    let mut pieces = 0;
    for &s in &sg.states {
        let mut prev = transversal_intervals(&sg, s, 0).map_err(|e| e.to_string())?;
        for d in 1..=p.depth {
            let fam = transversal_intervals(&sg, s, d).map_err(|e| e.to_string())?;
            let ivs: Vec<_> = fam.iter().map(|x| x.interval).collect();
            if !is_laminar(&ivs) {
                return Err(format!("state {s} depth {d}: not laminar"));
            }
            for x in &fam {
                let parent = &x.trajectory[..x.trajectory.len() - 1];
                let Some(up) = prev.iter().find(|y| y.trajectory == parent) else {
                    return Err(format!("state {s} depth {d}: orphan piece"));
                };
                if !up.interval.contains(&x.interval) || x.interval.len() >= up.interval.len() {
                    return Err(format!("state {s} depth {d}: piece does not shrink inside its parent"));
                }
            }
            pieces += fam.len();
            prev = fam;
        }
        let tt = build_train_track(&sg, s).map_err(|e| e.to_string())?;
        if let Some(w) = tt.weights.iter().find(|w| w.max_out_degree() > 1) {
            return Err(format!("weight on edge {} has a state with two outgoing arrows", w.edge));
        }
        if let Some(v) = tt.branch.iter().find(|v| !tt.x0.contains(v)) {
            return Err(format!("branch vertex {v} off the arc endpoints"));
        }
    }
    Ok(format!("{n} states, {} arrows, {pieces} transversal pieces", sg.arrows.len()))
}

fn double_case(_: u64, i: u64, _: &FuzzParams) -> std::result::Result<String, String> {
    let all = toys::all();
    let (name, old) = &all[(i as usize) % all.len()];
    let run = || -> Result<bool> {
        let d = build_double(&build_new(old)?)?;
        let red = verify_red_collapse(&d)?;
        let blue = verify_blue_collapse(&d)?;
        Ok(check_punchlines(&d, &red, &blue).all_ok())
    };
    match run() {
        Ok(true) => Ok(format!("{name}: punchlines hold")),
        Ok(false) => Err(format!("{name}: punchline failed")),
        Err(e) => Err(format!("{name}: {e}")),
    }
}

fn gps_case(seed: u64, i: u64, _: &FuzzParams) -> std::result::Result<String, String> {
    let mut rng = case_rng(seed, i);
    let hi = rng.gen_range(3..=4);
    let eps = Q::new(rng.gen_range(1..=7), 32);
    let bounds = Bounds::cube(0, hi).map_err(|e| e.to_string())?;
    let k = build_gps3(&bounds, eps).map_err(|e| e.to_string())?;
    let rep = verify_definition5(&k);
    if !rep.all_ok() {
        return Err(format!("[0,{hi}]³ eps {eps}: failed {:?}", rep.failed()));
    }
    let flow = blue_flow(&k, None).map_err(|e| e.to_string())?;
    Ok(format!("[0,{hi}]³ eps {eps}: {} faces, {} steps", k.complex.face_count(), flow.schedule.len()))
}

/// Corrupts a colour-change witness; a sound verifier must reject it.
fn inject_case(seed: u64, i: u64, _: &FuzzParams) -> std::result::Result<String, String> {
    let mut rng = case_rng(seed, i);
    loop {
        let (g, r, b) = property_p_pair(12, &mut rng);
        let Ok(mut trace) = run_colour_change(&g, &r, &b) else { continue };
        let Some(step) = trace.steps.choose_mut(&mut rng) else { continue };
        let (jr, w) = (step.r, &mut step.witness);
        w.retain(|x| x.edge != jr);
        let v = verify_trace(&g, &r, &b, &trace);
        return if v.ok {
            Ok("corrupted witness slipped through".into())
        } else {
            let (j, why) = v.failure.unwrap_or_default();
            Err(format!("flagged at step {j}: {why}"))
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_are_deterministic() {
        let p = FuzzParams::default();
        let a = run_suite("colour", 7, 10, &p).unwrap();
        let b = run_suite("colour", 7, 10, &p).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.all_ok());
    }

    #[test]
    fn single_case_matches_full_run() {
        let p = FuzzParams::default();
        let all = run_suite("homology", 3, 4, &p).unwrap();
        let one = run_cases("homology", 3, 2, 1, &p).unwrap();
        assert_eq!(one.cases[0], all.cases[2]);
    }

    #[test]
    fn unknown_suite_is_input_error() {
        assert!(matches!(run_suite("nope", 1, 1, &FuzzParams::default()), Err(crate::Error::Input(_))));
    }

    #[test]
    fn injected_violations_are_flagged() {
        let r = run_suite("inject", 5, 8, &FuzzParams::default()).unwrap();
        assert!(r.expects_failures);
        assert_eq!(r.failed, 8);
    }
}
