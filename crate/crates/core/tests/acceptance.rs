//! Acceptance run: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use gsckit::balancing::{balance, random_instance, RedOrder};
use gsckit::colour::{run_colour_change, verify_trace};
use gsckit::complex2::{bisect_face, collapse_to_spine, split_edge, Cell, ChordEnd, TwoComplex};
use gsckit::doubling::{build_double, build_new, check_punchlines, toys, verify_blue_collapse, verify_red_collapse};
use gsckit::flowmatrix::{classify, gsc_certificate, whitehead_matrix, Classification, IntersectionMatrix};
use gsckit::generate::{case_rng, exhaustive_corpus, property_p_pair, random_complex, random_easy_matrix, SpottedComplex};
use gsckit::gps::{blue_flow, build_gps3, build_gps4, default_eps, verify_definition5, Bounds, GpsComplex, Q};
use gsckit::graph::{EdgeId, Graph, SignedEdge, SpotSet, VertexId};
use gsckit::lava::{build_state_graph, build_train_track, detect_degenerate, transversal_intervals, Degeneracy, Interval};

const SEED: u64 = 20_240_611;

/// Outcome of one criterion.
struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t <= limit, format!("{:.2} s of {} s", t.as_secs_f64(), limit.as_secs()))
}

/// Connected and acyclic, by union-find over the listed edges.
fn tree_oracle(vertices: &BTreeSet<VertexId>, edges: &[(VertexId, VertexId)]) -> bool {
    if vertices.is_empty() || edges.len() + 1 != vertices.len() {
        return false;
    }
    let mut parent: BTreeMap<VertexId, VertexId> = vertices.iter().map(|&v| (v, v)).collect();
    fn root(p: &BTreeMap<VertexId, VertexId>, mut v: VertexId) -> VertexId {
        while p[&v] != v {
            v = p[&v];
        }
        v
    }
    for &(u, v) in edges {
        let (a, b) = (root(&parent, u), root(&parent, v));
        if a == b {
            return false;
        }
        parent.insert(a, b);
    }
    true
}

fn minus_is_tree(g: &Graph, spots: &BTreeSet<EdgeId>) -> bool {
    let vs: BTreeSet<VertexId> = g.vertices().collect();
    let es: Vec<(VertexId, VertexId)> = g.edges().filter(|(e, _, _)| !spots.contains(e)).map(|(_, u, v)| (u, v)).collect();
    tree_oracle(&vs, &es)
}

fn closed_walk_oracle(g: &Graph, w: &[SignedEdge]) -> bool {
    let ends: Vec<(VertexId, VertexId)> = match w.iter().map(|&se| g.oriented_ends(se)).collect::<Option<Vec<_>>>() {
        Some(e) if !e.is_empty() => e,
        _ => return false,
    };
    ends.windows(2).all(|p| p[0].1 == p[1].0) && ends[ends.len() - 1].1 == ends[0].0
}

/// Rank over GF(2) by elimination on bit rows.
fn rank2(mut rows: Vec<Vec<bool>>) -> usize {
    let width = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col]) else { continue };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][col] {
                let pivot = rows[rank].clone();
                for (x, y) in rows[r].iter_mut().zip(pivot) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn betti_oracle(k: &TwoComplex) -> (usize, usize, usize) {
    let vs: Vec<VertexId> = k.skeleton.vertices().collect();
    let es: Vec<EdgeId> = k.skeleton.edge_ids().collect();
    let vi: BTreeMap<VertexId, usize> = vs.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let ei: BTreeMap<EdgeId, usize> = es.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let d1: Vec<Vec<bool>> = k
        .skeleton
        .edges()
        .map(|(_, u, v)| {
            let mut row = vec![false; vs.len()];
            row[vi[&u]] ^= true;
            row[vi[&v]] ^= true;
            row
        })
        .collect();
    let d2: Vec<Vec<bool>> = k
        .faces()
        .map(|(_, f)| {
            let mut row = vec![false; es.len()];
            for se in &f.walk {
                row[ei[&se.edge]] ^= true;
            }
            row
        })
        .collect();
    let (r1, r2) = (rank2(d1), rank2(d2));
    (vs.len() - r1, es.len() - r1 - r2, k.face_count() - r2)
}

/// Criteria 1 and 2 share the 500 colour-change runs.
fn colour_change() -> (Verdict, Verdict) {
    let start = Instant::now();
    let (mut sound, mut witnesses, mut cells) = (0, 0, 0);
    let mut first_bad: Option<String> = None;
    for i in 0..500 {
        let (g, r, b) = property_p_pair(12, &mut case_rng(SEED, i));
        let trace = match run_colour_change(&g, &r, &b) {
            Ok(t) => t,
            Err(e) => {
                first_bad.get_or_insert(format!("case {i}: {e}"));
                continue;
            }
        };
        let mut cur: BTreeSet<EdgeId> = r.spots.clone();
        let mut ok = minus_is_tree(&g, &cur);
        let mut all_witnesses = true;
        for s in &trace.steps {
            cells += 1;
            let count = |e: EdgeId| s.witness.iter().filter(|x| x.edge == e).count();
            let clean = closed_walk_oracle(&g, &s.witness)
                && count(s.r) == 1
                && count(s.b) == 1
                && cur.iter().all(|&e| e == s.r || count(e) == 0);
            if clean {
                witnesses += 1;
            } else {
                all_witnesses = false;
            }
            cur.remove(&s.r);
            cur.insert(s.b);
            ok &= minus_is_tree(&g, &cur);
        }
        ok &= cur == b.spots && verify_trace(&g, &r, &b, &trace).ok && all_witnesses;
        if ok {
            sound += 1;
        } else {
            first_bad.get_or_insert(format!("case {i}"));
        }
    }
    let (fast, time) = within(Duration::from_secs(30), start);
    let c1 = verdict(
        sound == 500 && fast,
        format!("{sound}/500 runs sound, {time}{}", first_bad.map(|b| format!(", first failure {b}")).unwrap_or_default()),
    );
    let c2 = verdict(witnesses == cells, format!("{witnesses}/{cells} witness cells cross r and b once and no other spot"));
    (c1, c2)
}

fn balancing() -> Verdict {
    let start = Instant::now();
    let mut good = 0;
    let mut missing = 0;
    let mut bad: Option<String> = None;
    for i in 0..200u64 {
        let chi = (i % 4) as usize;
        let mut rng = case_rng(SEED + 3, i);
        let Some(inst) = (0..10).find_map(|_| {
            let n = rng.gen_range(4..=9);
            random_instance(n, n, chi, 400, &mut rng)
        }) else {
            missing += 1;
            continue;
        };
        let out = match balance(&inst, &RedOrder::by_id()) {
            Ok(o) => o,
            Err(e) => {
                bad.get_or_insert(format!("case {i}: {e}"));
                continue;
            }
        };
        let f = &out.instance;
        let in_sub = |s: &SpotSet| s.spots.iter().copied().filter(|&e| f.sub.has_edge(e)).collect::<BTreeSet<_>>();
        let (rs, bs) = (in_sub(&f.r), in_sub(&f.b));
        let comps = f.sub.components().len();
        let b1 = f.sub.edge_count() + comps - f.sub.vertex_count();
        let ok = out.records.len() == chi
            && minus_is_tree(&f.g, &f.r.spots)
            && minus_is_tree(&f.g, &f.b.spots)
            && minus_is_tree(&f.sub, &rs)
            && minus_is_tree(&f.sub, &bs)
            && rs.len() == b1
            && bs.len() == b1;
        if ok {
            good += 1;
        } else {
            bad.get_or_insert(format!("case {i}"));
        }
    }
    let (fast, time) = within(Duration::from_secs(30), start);
    verdict(
        good == 200 && fast,
        format!(
            "{good}/200 balanced with exactly χ slides, {missing} not generated, {time}{}",
            bad.map(|b| format!(", first failure {b}")).unwrap_or_default()
        ),
    )
}

fn tree_spine(s: &SpottedComplex) -> BTreeSet<Cell> {
    let g = &s.complex.skeleton;
    g.vertices()
        .map(Cell::Vertex)
        .chain(g.edge_ids().filter(|e| !s.spots.contains(*e)).map(Cell::Edge))
        .collect()
}

fn gsc_oracle() -> Verdict {
    let start = Instant::now();
    let mut corpus = exhaustive_corpus(6);
    let exhaustive = corpus.len();
    let mut rng = case_rng(SEED + 4, 0);
    for i in 0..100 {
        let faces = 7 + i % 2;
        let cycles = if rng.gen_bool(0.6) { faces as u32 } else { rng.gen_range(2..=faces as u32) };
        corpus.push(random_complex(faces, cycles, &mut rng));
    }
    let (mut agree, mut collapsible) = (0, 0);
    let mut bad = None;
    for (i, s) in corpus.iter().enumerate() {
        let cert = gsc_certificate(&s.complex, &s.spots).map(|c| c.is_witness());
        let search = collapse_to_spine(&s.complex, &tree_spine(s), 8).map(|o| o.is_success());
        match (cert, search) {
            (Ok(a), Ok(b)) if a == b => {
                agree += 1;
                collapsible += a as usize;
            }
            other => {
                bad.get_or_insert(format!("case {i}: {other:?}"));
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(120), start);
    verdict(
        agree == corpus.len() && fast,
        format!(
            "{agree}/{} agree ({exhaustive} enumerated, 100 random, {collapsible} collapsible), {time}{}",
            corpus.len(),
            bad.map(|b| format!(", first disagreement {b}")).unwrap_or_default()
        ),
    )
}

fn classifier() -> Verdict {
    let w = whitehead_matrix(4);
    let refused = !classify(&w).is_easy();
    let difficult = matches!(classify(&w), Classification::Difficult { .. });
    let mut cyclic = IntersectionMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]).unwrap();
    cyclic.set_pairing(vec![(1, 1), (2, 2), (3, 3)]).unwrap();
    let witness_ok = match detect_degenerate(&cyclic) {
        Degeneracy::NonCommutative { cycle } => {
            // Handle d is paired with curve d, so a hop c -> d needs entry (c, d).
            cycle.len() >= 2
                && cycle.first() == cycle.last()
                && cycle.windows(2).all(|p| p[0] != p[1] && cyclic.get(p[0], p[1]) > 0)
        }
        Degeneracy::Ok => false,
    };
    let not_easy = !classify(&cyclic).is_easy();
    verdict(
        refused && difficult && witness_ok && not_easy,
        format!("whitehead refused {refused} (difficult {difficult}), cycle witness verified {witness_ok}"),
    )
}

fn on_box_side(k: &GpsComplex, vs: &[VertexId]) -> bool {
    let b = &k.bounds;
    let planes = [(0, b.lo[0]), (0, b.hi[0]), (1, b.lo[1]), (1, b.hi[1]), (2, b.lo[2])];
    planes.iter().any(|&(a, x)| vs.iter().all(|v| k.coords[v][a] == x))
}

fn cell_vertices(k: &TwoComplex, c: Cell) -> Vec<VertexId> {
    match c {
        Cell::Vertex(v) => vec![v],
        Cell::Edge(e) => {
            let (u, v) = k.skeleton.endpoints(e).unwrap();
            vec![u, v]
        }
        Cell::Face(f) => k.face(f).unwrap().walk.iter().map(|&se| k.skeleton.oriented_ends(se).unwrap().0).collect(),
    }
}

fn gps() -> Verdict {
    let start = Instant::now();
    let cube = Bounds::cube(0, 6).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    let k3 = build_gps3(&cube, default_eps()).unwrap();
    let k4 = build_gps4(&cube, &[0, 1, 2, 3, 4], default_eps()).unwrap();
    for (name, k) in [("3D", &k3), ("4D", &k4)] {
        let rep = verify_definition5(k);
        if !rep.all_ok() {
            ok = false;
            notes.push(format!("{name} fails {:?}", rep.failed()));
        }
        match blue_flow(k, None) {
            Ok(flow) => {
                let rest = flow.schedule.apply(&flow.truncation(k));
                let reached = rest.is_ok_and(|r| {
                    let cells = r.cells();
                    cells == flow.frame && cells.iter().all(|&c| on_box_side(k, &cell_vertices(&r, c)))
                });
                if !reached {
                    ok = false;
                    notes.push(format!("{name} flow does not replay onto the floor and walls"));
                }
            }
            Err(e) => {
                ok = false;
                notes.push(format!("{name} flow: {e}"));
            }
        }
    }
    let ideal = verify_definition5(&build_gps3(&cube, Q::from_integer(0)).unwrap());
    let only_b = ideal.failed() == vec!['b'];
    ok &= only_b;
    let (fast, time) = within(Duration::from_secs(10), start);
    verdict(
        ok && fast,
        format!(
            "3D {} faces, 4D {} faces pass a)-f) and replay; eps = 0 fails only b): {only_b}; {time}{}",
            k3.complex.face_count(),
            k4.complex.face_count(),
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    )
}

fn doubling() -> Verdict {
    let start = Instant::now();
    let mut passed = Vec::new();
    let mut notes = Vec::new();
    for (name, old) in toys::all() {
        let run = || -> Result<(), String> {
            let d = build_double(&build_new(&old).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let red = verify_red_collapse(&d).map_err(|e| e.to_string())?;
            let blue = verify_blue_collapse(&d).map_err(|e| e.to_string())?;
            let red_left = red.replay(&d.red_view()).map_err(|e| e.to_string())?;
            let mut target: BTreeSet<Cell> = BTreeSet::new();
            for &f in &d.delta_low {
                target.insert(Cell::Face(f));
                for se in &d.complex.face(f).unwrap().walk {
                    let (u, v) = d.complex.skeleton.endpoints(se.edge).unwrap();
                    target.extend([Cell::Edge(se.edge), Cell::Vertex(u), Cell::Vertex(v)]);
                }
            }
            if red_left.cells() != target {
                return Err("RED collapse misses Δ² × (−1)".into());
            }
            let blue_left = blue.replay(&d.complex).map_err(|e| e.to_string())?;
            let vs: BTreeSet<VertexId> = blue_left.skeleton.vertices().collect();
            let es: Vec<(VertexId, VertexId)> = blue_left.skeleton.edges().map(|(_, u, v)| (u, v)).collect();
            if blue_left.face_count() != 0 || !tree_oracle(&vs, &es) {
                return Err("BLUE collapse does not leave a tree".into());
            }
            let rep = check_punchlines(&d, &red, &blue);
            if !(rep.a.ok && rep.b.ok && rep.c.ok) {
                return Err(format!("punchlines {rep:?}"));
            }
            let easy = |m: IntersectionMatrix| classify(&m).is_easy();
            if !easy(d.red_matrix().map_err(|e| e.to_string())?) || !easy(d.blue_matrix().map_err(|e| e.to_string())?) {
                return Err("a registry is not easy".into());
            }
            Ok(())
        };
        match run() {
            Ok(()) => passed.push(name),
            Err(e) => notes.push(format!("{name}: {e}")),
        }
    }
    let (fast, time) = within(Duration::from_secs(10), start);
    verdict(
        notes.is_empty() && passed.len() >= 3 && fast,
        format!("{} toys pass ({}), {time}{}", passed.len(), passed.join(", "), if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }),
    )
}

fn homology() -> Verdict {
    let mut steps = 0;
    let mut counts = [0usize; 3];
    let mut bad = None;
    let mut case = 0;
    while steps < 1000 && bad.is_none() {
        let mut rng = case_rng(SEED + 8, case);
        case += 1;
        let faces = rng.gen_range(2..=6);
        let mut k = random_complex(faces, rng.gen_range(1..=4), &mut rng).complex;
        let want = betti_oracle(&k);
        for _ in 0..60 {
            let pick = rng.gen_range(0..3);
            let moved = match pick {
                0 => match k.free_faces().choose(&mut rng) {
                    Some(&p) => k.collapse_in_place(p).is_ok(),
                    None => false,
                },
                1 => {
                    let ids: Vec<u32> = k.face_ids().collect();
                    match ids.choose(&mut rng) {
                        Some(&f) => {
                            let n = k.face(f).unwrap().walk.len();
                            let mut end = || {
                                let at = rng.gen_range(0..n);
                                if rng.gen_bool(0.5) { ChordEnd::Corner(at) } else { ChordEnd::EdgeMid(at) }
                            };
                            let (a, b) = (end(), end());
                            match bisect_face(&k, f, a, b) {
                                Ok(bis) => {
                                    k = bis.complex;
                                    true
                                }
                                Err(_) => false,
                            }
                        }
                        None => false,
                    }
                }
                _ => {
                    let ids: Vec<EdgeId> = k.skeleton.edge_ids().collect();
                    match ids.choose(&mut rng) {
                        Some(&e) => split_edge(&mut k, e).is_ok(),
                        None => false,
                    }
                }
            };
            if !moved {
                continue;
            }
            steps += 1;
            counts[pick] += 1;
            let got = betti_oracle(&k);
            if got != want {
                bad = Some(format!("case {case} step {steps}: {want:?} became {got:?}"));
                break;
            }
            if steps == 1000 {
                break;
            }
        }
    }
    verdict(
        bad.is_none() && steps == 1000,
        format!(
            "{steps} steps ({} collapses, {} bisections, {} edge splits) keep GF(2) Betti numbers{}",
            counts[0],
            counts[1],
            counts[2],
            bad.map(|b| format!("; {b}")).unwrap_or_default()
        ),
    )
}

fn laminar(f: &[Interval]) -> bool {
    f.iter().enumerate().all(|(i, a)| {
        f[i + 1..].iter().all(|b| a.hi < b.lo || b.hi < a.lo || (a.lo <= b.lo && b.hi <= a.hi) || (b.lo <= a.lo && a.hi <= b.hi))
    })
}

fn lamination() -> Verdict {
    let start = Instant::now();
    let mut good = 0;
    let mut pieces = 0;
    let mut bad = None;
    for i in 0..20 {
        let mut rng = case_rng(SEED + 9, i);
        let n = rng.gen_range(2..=6);
        let m = random_easy_matrix(n, 2, &mut rng);
        let sg = build_state_graph(&m).unwrap();
        let mut ok = true;
        for &s in &sg.states {
            let mut prev = transversal_intervals(&sg, s, 0).unwrap();
            for d in 1..=6 {
                let fam = transversal_intervals(&sg, s, d).unwrap();
                let ivs: Vec<Interval> = fam.iter().map(|p| p.interval).collect();
                ok &= laminar(&ivs);
                for p in &fam {
                    // The parent is the same trajectory without its last arrow.
                    let parent = prev.iter().find(|q| q.trajectory[..] == p.trajectory[..p.trajectory.len() - 1]);
                    ok &= parent.is_some_and(|q| {
                        q.interval.lo <= p.interval.lo
                            && p.interval.hi <= q.interval.hi
                            && p.interval.hi - p.interval.lo < q.interval.hi - q.interval.lo
                    });
                }
                pieces += fam.len();
                prev = fam;
            }
            let tt = build_train_track(&sg, s).unwrap();
            for w in &tt.weights {
                let mut out: BTreeMap<usize, usize> = BTreeMap::new();
                for &(a, _) in &w.arrows {
                    *out.entry(a).or_default() += 1;
                }
                ok &= out.values().all(|&c| c <= 1);
            }
        }
        if ok {
            good += 1;
        } else {
            bad.get_or_insert(format!("graph {i}"));
        }
    }
    let (fast, time) = within(Duration::from_secs(10), start);
    verdict(
        good == 20 && fast,
        format!(
            "{good}/20 state graphs laminar, refining and shrinking to depth 6 ({pieces} pieces), weights obey the one-arrow law, {time}{}",
            bad.map(|b| format!(", first failure {b}")).unwrap_or_default()
        ),
    )
}

fn main() {
    let (c1, c2) = colour_change();
    let results = [
        ("colour-change soundness", c1),
        ("witness law", c2),
        ("balancing", balancing()),
        ("GSC oracle equivalence", gsc_oracle()),
        ("classifier sanity", classifier()),
        ("GPS validity", gps()),
        ("doubling dual collapses", doubling()),
        ("homology conservation", homology()),
        ("lamination combinatorics", lamination()),
    ];
    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        println!("criterion {} {name}: {} ({})", i + 1, if v.ok { "PASS" } else { "FAIL" }, v.detail);
        failed += !v.ok as usize;
    }
    println!("acceptance: {}/{} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
