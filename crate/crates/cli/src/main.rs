//! `gsckit`: JSON in, JSON out. Exit 0 on pass, 1 on a failed check, 2 on bad input.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::{json, Value};

use gsckit::balancing::{balance, check_balanced, compute_chi, BalancingInstance, RedOrder};
use gsckit::colour::{run_colour_change, verify_trace};
use gsckit::complex2::{collapse_to_spine, CollapseOutcome, DEFAULT_MAX_FACES};
use gsckit::doubling::{
    build_double, build_new, check_punchlines, toys, verify_blue_collapse, verify_red_collapse, DoubledComplex,
    OldComplex,
};
use gsckit::flowmatrix::{gsc_certificate, IntersectionMatrix};
use gsckit::fuzz::{run_cases, run_suite, FuzzParams, SUITES};
use gsckit::gps::{blue_flow, build_gps3, build_gps4, parse_rational, verify_definition5, Bounds, Q};
use gsckit::graph::{is_property_p, Colour, SpotSet};
use gsckit::io::{
    complex_dot, graph_dot, gps_obj, parse_json, state_graph_dot, to_json, BalanceDoc, ComplexDoc, DoubledJson,
    GpsJson, OldComplexDoc, SpottedGraphDoc,
};
use gsckit::lava::{build_state_graph, build_train_track, transversal_intervals, StateGraph, StateId};
use gsckit::{Error, Result};

#[derive(Parser)]
#[command(name = "gsckit", version, about = "Spot sets, collapses, intersection matrices, lattices and doubles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    files: Files,
}

#[derive(Args)]
struct Files {
    /// Input JSON; standard input when absent or `-`.
    #[arg(long = "in", global = true, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Output JSON; standard output when absent or `-`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write a DOT rendering here.
    #[arg(long, global = true, value_name = "PATH")]
    dot: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Graph checks.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Search for a collapse onto the `spine` subcomplex.
    Collapse {
        /// Backtrack over face orders when at most this many faces lie outside the spine.
        #[arg(long, default_value_t = DEFAULT_MAX_FACES)]
        max_faces: usize,
    },
    /// Certificate that the faces cancel the `spots` down to a tree.
    Gsc,
    /// Convert the RED spots into the BLUE ones, with witness cycles.
    ColourChange,
    /// Slide RED spots until the subgraph is balanced for both colours.
    Balance,
    /// Bicoloured lattice structures.
    #[command(subcommand)]
    Gps(GpsCmd),
    /// Doubled complexes and their two collapses.
    #[command(subcommand)]
    Double(DoubleCmd),
    /// State graphs, transversal intervals and train tracks of an easy matrix.
    #[command(subcommand)]
    Lava(LavaCmd),
    /// Run a seeded fuzz suite.
    Fuzz(FuzzArgs),
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Does deleting each given spot set leave a tree?
    CheckP,
}

#[derive(Subcommand)]
enum GpsCmd {
    /// Build a structure on a box.
    Build {
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
        dim: u8,
        /// `lo:hi` for a cube, or `x0,y0,z0:x1,y1,z1`.
        #[arg(long, default_value = "0:6")]
        bounds: String,
        /// Perturbation as `p/q`.
        #[arg(long, default_value = "1/8")]
        eps: String,
        /// Slice times for dimension 4.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        times: Vec<i64>,
        /// Also write an OBJ-style mesh here.
        #[arg(long, value_name = "PATH")]
        obj: Option<PathBuf>,
    },
    /// Check the six structure conditions and replay the BLUE flow.
    Verify,
}

#[derive(Args)]
struct DoubleSource {
    /// Use a built-in example instead of `--in`: square, glued_squares or annulus.
    #[arg(long)]
    toy: Option<String>,
}

#[derive(Subcommand)]
enum DoubleCmd {
    Build(DoubleSource),
    VerifyRed(DoubleSource),
    VerifyBlue(DoubleSource),
    Punchlines(DoubleSource),
}

#[derive(Subcommand)]
enum LavaCmd {
    Build,
    Transversal {
        /// Every state when absent.
        #[arg(long)]
        state: Option<StateId>,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    Traintrack {
        /// Every state when absent.
        #[arg(long)]
        state: Option<StateId>,
    },
}

#[derive(Args)]
struct FuzzArgs {
    /// One of colour, witness, balance, gsc, homology, lava, double, gps, inject.
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: u64,
    /// Run only this case index.
    #[arg(long)]
    case: Option<u64>,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_FACES)]
    max_faces: usize,
    /// Moves per homology case.
    #[arg(long, default_value_t = 50)]
    steps: usize,
}

/// What a subcommand produced.
struct Report {
    json: String,
    pass: bool,
    dot: Option<String>,
}

impl Report {
    fn new(value: &impl serde::Serialize, pass: bool) -> Self {
        Report { json: to_json(value), pass, dot: None }
    }

    fn with_dot(mut self, dot: String) -> Self {
        self.dot = Some(dot);
        self
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String> {
    let mut text = String::new();
    match path.as_deref() {
        Some(p) if p != Path::new("-") => {
            text = std::fs::read_to_string(p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
        }
        _ => {
            std::io::stdin().read_to_string(&mut text).map_err(|e| Error::Input(format!("stdin: {e}")))?;
        }
    }
    Ok(text)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn parse_bounds(s: &str) -> Result<Bounds> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| Error::Input(format!("bounds {s:?} need a ':'")))?;
    let side = |t: &str| -> Result<[Q; 3]> {
        let xs: Vec<Q> = t.split(',').map(parse_rational).collect::<Result<_>>()?;
        match xs.len() {
            1 => Ok([xs[0]; 3]),
            3 => Ok([xs[0], xs[1], xs[2]]),
            _ => Err(Error::Input(format!("bounds side {t:?} needs 1 or 3 numbers"))),
        }
    };
    Bounds::new(side(lo)?, side(hi)?)
}

fn old_complex(files: &Files, src: &DoubleSource) -> Result<OldComplex> {
    match &src.toy {
        Some(name) => toys::all()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, o)| o)
            .ok_or_else(|| Error::Input(format!("unknown toy {name:?}"))),
        None => parse_json::<OldComplexDoc>(&read_input(&files.input)?)?.to_old(),
    }
}

fn doubled(files: &Files, src: &DoubleSource) -> Result<DoubledComplex> {
    build_double(&build_new(&old_complex(files, src)?)?)
}

fn states(sg: &StateGraph, state: Option<StateId>) -> Vec<StateId> {
    state.map_or_else(|| sg.states.clone(), |s| vec![s])
}

fn graph_check_p(files: &Files) -> Result<Report> {
    let doc: SpottedGraphDoc = parse_json(&read_input(&files.input)?)?;
    let g = doc.graph.to_graph()?;
    let (r, b) = (doc.red(), doc.blue());
    if r.is_none() && b.is_none() {
        return Err(Error::Input("give \"red\", \"blue\" or both".into()));
    }
    let mut out = BTreeMap::new();
    let mut pass = true;
    for s in [&r, &b].into_iter().flatten() {
        let ok = is_property_p(&g, s)?;
        pass &= ok;
        out.insert(s.colour.to_string().to_lowercase(), json!({ "propertyP": ok, "spots": s.len() }));
    }
    out.insert("betti1".into(), json!(g.betti1()));
    Ok(Report::new(&out, pass).with_dot(graph_dot(&g, r.as_ref(), b.as_ref())))
}

fn collapse(files: &Files, max_faces: usize) -> Result<Report> {
    let doc: ComplexDoc = parse_json(&read_input(&files.input)?)?;
    let k = doc.complex.to_complex()?;
    let spine = doc.spine.as_ref().ok_or_else(|| Error::Input("missing \"spine\"".into()))?.cells(&k)?;
    let dot = complex_dot(&k, None, None);
    Ok(match collapse_to_spine(&k, &spine, max_faces)? {
        CollapseOutcome::Success(s) => Report::new(&json!({ "outcome": "success", "schedule": s }), true),
        CollapseOutcome::Impossible => Report::new(&json!({ "outcome": "impossible" }), false),
        CollapseOutcome::NotFound => Report::new(&json!({ "outcome": "not_found" }), false),
    }
    .with_dot(dot))
}

fn gsc(files: &Files) -> Result<Report> {
    let doc: ComplexDoc = parse_json(&read_input(&files.input)?)?;
    let k = doc.complex.to_complex()?;
    let spots = SpotSet::new(
        Colour::Red,
        doc.spots.ok_or_else(|| Error::Input("missing \"spots\"".into()))?,
    );
    let cert = gsc_certificate(&k, &spots)?;
    let dot = complex_dot(&k, Some(&spots), None);
    Ok(Report::new(&cert, cert.is_witness()).with_dot(dot))
}

fn colour_change(files: &Files) -> Result<Report> {
    let doc: SpottedGraphDoc = parse_json(&read_input(&files.input)?)?;
    let (g, r, b) = doc.pair()?;
    let trace = run_colour_change(&g, &r, &b)?;
    info!("colour change took {} steps", trace.len());
    let verdict = verify_trace(&g, &r, &b, &trace);
    if let Some((j, why)) = &verdict.failure {
        log::warn!("trace rejected at step {j}: {why}");
    }
    Ok(Report::new(&trace, verdict.ok).with_dot(graph_dot(&g, Some(&r), Some(&b))))
}

fn run_balance(files: &Files) -> Result<Report> {
    let doc: BalanceDoc = parse_json(&read_input(&files.input)?)?;
    let g = doc.graph.to_graph()?;
    let sub = doc.subgraph(&g)?;
    let inst = BalancingInstance::new(
        g,
        sub,
        SpotSet::new(Colour::Red, doc.red.iter().copied()),
        SpotSet::new(Colour::Blue, doc.blue.iter().copied()),
    )?;
    let chi = compute_chi(&inst);
    let out = balance(&inst, &RedOrder::from_ranking(doc.order.clone())?)?;
    let pass = check_balanced(&out.instance).is_ok();
    let after = &out.instance;
    let mut dot = graph_dot(&inst.g, Some(&inst.r), Some(&inst.b)).replacen("graph G", "graph before", 1);
    dot.push_str(&graph_dot(&after.g, Some(&after.r), Some(&after.b)).replacen("graph G", "graph after", 1));
    let value = json!({
        "chi": chi,
        "slides": out.records,
        "graph": gsckit::io::GraphJson::from_graph(&after.g),
        "red": after.r.spots,
        "blue": after.b.spots,
    });
    Ok(Report::new(&value, pass).with_dot(dot))
}

fn gps(files: &Files, cmd: &GpsCmd) -> Result<Report> {
    match cmd {
        GpsCmd::Build { dim, bounds, eps, times, obj } => {
            let bounds = parse_bounds(bounds)?;
            let eps = parse_rational(eps)?;
            let k = if *dim == 3 { build_gps3(&bounds, eps)? } else { build_gps4(&bounds, times, eps)? };
            info!("built {} faces", k.complex.face_count());
            if let Some(p) = obj {
                write_file(p, &gps_obj(&k))?;
            }
            Ok(Report::new(&GpsJson::from_gps(&k), true))
        }
        GpsCmd::Verify => {
            let k = parse_json::<GpsJson>(&read_input(&files.input)?)?.to_gps()?;
            let report = verify_definition5(&k);
            let flow = match blue_flow(&k, None) {
                Ok(flow) => {
                    let reached = flow.schedule.apply(&flow.truncation(&k)).map(|r| r.cells() == flow.frame);
                    json!({
                        "steps": flow.schedule.len(),
                        "deleted": flow.gamma1.len(),
                        "bifurcations": flow.bifurcations,
                        "reachesFrame": reached.as_ref().is_ok_and(|&x| x),
                    })
                }
                Err(e) => json!({ "error": e.to_string(), "reachesFrame": false }),
            };
            let pass = report.all_ok() && flow["reachesFrame"] == Value::Bool(true);
            Ok(Report::new(&json!({ "conditions": report, "failed": report.failed(), "flow": flow }), pass))
        }
    }
}

fn double(files: &Files, cmd: &DoubleCmd) -> Result<Report> {
    match cmd {
        DoubleCmd::Build(src) => {
            let d = doubled(files, src)?;
            let dot = complex_dot(&d.complex, Some(&d.r1), Some(&d.b1));
            Ok(Report::new(&DoubledJson::from_double(&d), true).with_dot(dot))
        }
        DoubleCmd::VerifyRed(src) => {
            let d = doubled(files, src)?;
            Ok(Report::new(&verify_red_collapse(&d)?, true))
        }
        DoubleCmd::VerifyBlue(src) => {
            let d = doubled(files, src)?;
            Ok(Report::new(&verify_blue_collapse(&d)?, true))
        }
        DoubleCmd::Punchlines(src) => {
            let d = doubled(files, src)?;
            let red = verify_red_collapse(&d)?;
            let blue = verify_blue_collapse(&d)?;
            let report = check_punchlines(&d, &red, &blue);
            Ok(Report::new(&report, report.all_ok()))
        }
    }
}

fn lava(files: &Files, cmd: &LavaCmd) -> Result<Report> {
    let m: IntersectionMatrix = parse_json(&read_input(&files.input)?)?;
    let sg = build_state_graph(&m)?;
    match cmd {
        LavaCmd::Build => {
            let ok = sg.check_invariants();
            for why in &ok {
                log::warn!("{why}");
            }
            Ok(Report::new(&sg, ok.is_empty()).with_dot(state_graph_dot(&sg)))
        }
        LavaCmd::Transversal { state, depth } => {
            let mut out = BTreeMap::new();
            for s in states(&sg, *state) {
                out.insert(s, transversal_intervals(&sg, s, *depth)?);
            }
            Ok(Report::new(&out, true))
        }
        LavaCmd::Traintrack { state } => {
            let mut out = BTreeMap::new();
            let mut pass = true;
            for s in states(&sg, *state) {
                let tt = build_train_track(&sg, s)?;
                pass &= tt.weights.iter().all(|w| w.max_out_degree() <= 1);
                out.insert(s, tt);
            }
            Ok(Report::new(&out, pass))
        }
    }
}

fn fuzz(args: &FuzzArgs) -> Result<Report> {
    let params = FuzzParams { depth: args.depth, max_faces: args.max_faces, steps: args.steps };
    let report = match args.case {
        Some(i) => run_cases(&args.suite, args.seed, i, 1, &params)?,
        None => run_suite(&args.suite, args.seed, args.count, &params)?,
    };
    info!("{}: {} passed, {} failed", report.suite, report.passed, report.failed);
    for c in report.cases.iter().filter(|c| !c.ok) {
        if let Some(r) = &c.reproducer {
            log::warn!("case {} failed: {} (reproduce with `{r}`)", c.index, c.detail);
        }
    }
    Ok(Report::new(&report, report.all_ok()))
}

fn run(cli: &Cli) -> Result<Report> {
    let f = &cli.files;
    match &cli.command {
        Command::Graph(GraphCmd::CheckP) => graph_check_p(f),
        Command::Collapse { max_faces } => collapse(f, *max_faces),
        Command::Gsc => gsc(f),
        Command::ColourChange => colour_change(f),
        Command::Balance => run_balance(f),
        Command::Gps(cmd) => gps(f, cmd),
        Command::Double(cmd) => double(f, cmd),
        Command::Lava(cmd) => lava(f, cmd),
        Command::Fuzz(args) => {
            if !SUITES.contains(&args.suite.as_str()) {
                return Err(Error::Input(format!("unknown suite {:?}; known: {}", args.suite, SUITES.join(", "))));
            }
            fuzz(args)
        }
    }
}

fn emit(cli: &Cli, report: &Report) -> Result<()> {
    match cli.files.out.as_deref() {
        Some(p) if p != Path::new("-") => write_file(p, &report.json)?,
        _ => print!("{}", report.json),
    }
    if let (Some(p), Some(dot)) = (&cli.files.dot, &report.dot) {
        write_file(p, dot)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GSCKIT_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|r| emit(&cli, &r).map(|()| r.pass));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("gsckit: {e}");
            ExitCode::from(if matches!(e, Error::Input(_)) { 2 } else { 1 })
        }
    }
}
