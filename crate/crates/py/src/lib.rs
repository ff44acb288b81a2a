//! Python module `gsckit`: graphs, complexes and matrices as classes, the
//! procedures as functions returning plain Python data.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use gsckit::balancing::{balance as run_balance, BalancingInstance, RedOrder};
use gsckit::colour::{run_colour_change, verify_trace};
use gsckit::complex2::{collapse_to_spine, gf2_homology_ranks, Cell, TwoComplex, DEFAULT_MAX_FACES};
use gsckit::doubling::{build_double, build_new, check_punchlines, toys, verify_blue_collapse, verify_red_collapse};
use gsckit::flowmatrix::{classify as classify_matrix, gsc_certificate, whitehead_matrix, IntersectionMatrix};
use gsckit::fuzz::{run_suite, FuzzParams};
use gsckit::gps::{build_gps3, build_gps4, parse_rational, verify_definition5, Bounds};
use gsckit::graph::{is_property_p, Colour, Graph as CoreGraph, SpotSet};
use gsckit::io::{parse_json, to_json, BalanceDoc, ComplexJson, GpsJson, GraphJson, OldComplexDoc};
use gsckit::lava::{build_state_graph, transversal_intervals};

fn err(e: gsckit::Error) -> PyErr {
    match e {
        gsckit::Error::Input(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Converts through JSON so the Python shape matches the CLI files.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (to_json(value),))
}

fn red(spots: Vec<u32>) -> SpotSet {
    SpotSet::new(Colour::Red, spots)
}

fn blue(spots: Vec<u32>) -> SpotSet {
    SpotSet::new(Colour::Blue, spots)
}

/// Multigraph with stable integer vertex and edge ids.
#[pyclass(module = "gsckit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Graph {
    inner: CoreGraph,
}

#[pymethods]
impl Graph {
    /// `edges` are `(id, u, v)` triples; edge ids start at 1.
    #[new]
    #[pyo3(signature = (edges, vertices = Vec::new()))]
    fn new(edges: Vec<(u32, u32, u32)>, vertices: Vec<u32>) -> PyResult<Self> {
        let mut vs: Vec<u32> = vertices;
        vs.extend(edges.iter().flat_map(|&(_, u, v)| [u, v]));
        Ok(Graph { inner: CoreGraph::from_parts(vs, edges).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: GraphJson = parse_json(text).map_err(err)?;
        Ok(Graph { inner: doc.to_graph().map_err(err)? })
    }

    fn to_json(&self) -> String {
        to_json(&GraphJson::from_graph(&self.inner))
    }

    #[getter]
    fn vertices(&self) -> Vec<u32> {
        self.inner.vertices().collect()
    }

    #[getter]
    fn edges(&self) -> Vec<(u32, u32, u32)> {
        self.inner.edges().collect()
    }

    fn betti1(&self) -> usize {
        self.inner.betti1()
    }

    fn is_tree(&self) -> bool {
        self.inner.is_tree()
    }

    /// Whether deleting `spots` leaves a tree.
    fn property_p(&self, spots: Vec<u32>) -> PyResult<bool> {
        is_property_p(&self.inner, &red(spots)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Graph(vertices={}, edges={})", self.inner.vertex_count(), self.inner.edge_count())
    }
}

/// 2-complex: a graph plus faces glued along closed walks of signed edge ids.
#[pyclass(module = "gsckit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Complex {
    inner: TwoComplex,
}

#[pymethods]
impl Complex {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: ComplexJson = parse_json(text).map_err(err)?;
        Ok(Complex { inner: doc.to_complex().map_err(err)? })
    }

    fn to_json(&self) -> String {
        to_json(&ComplexJson::from_complex(&self.inner))
    }

    #[getter]
    fn skeleton(&self) -> Graph {
        Graph { inner: self.inner.skeleton.clone() }
    }

    fn face_count(&self) -> usize {
        self.inner.face_count()
    }

    fn euler_characteristic(&self) -> i64 {
        self.inner.euler_characteristic()
    }

    /// Betti numbers `(b0, b1, b2)` over GF(2).
    fn homology(&self) -> (usize, usize, usize) {
        gf2_homology_ranks(&self.inner)
    }

    /// Collapse schedule onto the given cells, or `None` when there is none.
    #[pyo3(signature = (vertices, edges = Vec::new(), faces = Vec::new(), max_faces = DEFAULT_MAX_FACES))]
    fn collapse_to_spine<'py>(
        &self,
        py: Python<'py>,
        vertices: Vec<u32>,
        edges: Vec<u32>,
        faces: Vec<u32>,
        max_faces: usize,
    ) -> PyResult<Option<Bound<'py, PyAny>>> {
        let mut spine = self.inner.closure_of_faces(&faces.into_iter().collect());
        spine.extend(vertices.into_iter().map(Cell::Vertex));
        spine.extend(edges.into_iter().map(Cell::Edge));
        self.inner.close_edges(&mut spine);
        let out = collapse_to_spine(&self.inner, &spine, max_faces).map_err(err)?;
        out.schedule().map(|s| to_py(py, s)).transpose()
    }

    /// Certificate dict with `kind` one of `witness`, `refutation`, `uncovered`.
    fn gsc_certificate<'py>(&self, py: Python<'py>, spots: Vec<u32>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &gsc_certificate(&self.inner, &red(spots)).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        let g = &self.inner.skeleton;
        format!("Complex(vertices={}, edges={}, faces={})", g.vertex_count(), g.edge_count(), self.inner.face_count())
    }
}

/// Crossing counts of curves (rows) over handles (columns).
#[pyclass(module = "gsckit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Matrix {
    inner: IntersectionMatrix,
}

#[pymethods]
impl Matrix {
    /// Curves and handles are numbered from 1.
    #[staticmethod]
    fn from_rows(rows: Vec<Vec<u32>>) -> PyResult<Self> {
        Ok(Matrix { inner: IntersectionMatrix::from_rows(&rows).map_err(err)? })
    }

    #[staticmethod]
    fn whitehead(n: u32) -> Self {
        Matrix { inner: whitehead_matrix(n) }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Matrix { inner: parse_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        to_json(&self.inner)
    }

    fn get(&self, curve: u32, handle: u32) -> u32 {
        self.inner.get(curve, handle)
    }

    /// Verdict dict: `EASY` with an order, `DIFFICULT` or `NOT_ID_NIL`.
    fn classify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &classify_matrix(&self.inner))
    }

    fn is_easy(&self) -> bool {
        classify_matrix(&self.inner).is_easy()
    }

    fn state_graph<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &build_state_graph(&self.inner).map_err(err)?)
    }

    /// Intervals of state `state` cut out by trajectories of `depth` arrows.
    fn transversal<'py>(&self, py: Python<'py>, state: u32, depth: usize) -> PyResult<Bound<'py, PyAny>> {
        let sg = build_state_graph(&self.inner).map_err(err)?;
        to_py(py, &transversal_intervals(&sg, state, depth).map_err(err)?)
    }
}

/// Witness cells converting `red` into `blue`; raises if the trace does not verify.
#[pyfunction]
fn colour_change<'py>(py: Python<'py>, graph: &Graph, red_spots: Vec<u32>, blue_spots: Vec<u32>) -> PyResult<Bound<'py, PyAny>> {
    let (r, b) = (red(red_spots), blue(blue_spots));
    let trace = run_colour_change(&graph.inner, &r, &b).map_err(err)?;
    let verdict = verify_trace(&graph.inner, &r, &b, &trace);
    if !verdict.ok {
        return Err(PyRuntimeError::new_err(format!("trace rejected: {:?}", verdict.failure)));
    }
    to_py(py, &trace)
}

/// Balances a `balance` input document; returns the slide records and final spots.
#[pyfunction]
fn balance<'py>(py: Python<'py>, document: &str) -> PyResult<Bound<'py, PyAny>> {
    let doc: BalanceDoc = parse_json(document).map_err(err)?;
    let g = doc.graph.to_graph().map_err(err)?;
    let sub = doc.subgraph(&g).map_err(err)?;
    let inst = BalancingInstance::new(g, sub, red(doc.red.clone()), blue(doc.blue.clone())).map_err(err)?;
    let out = run_balance(&inst, &RedOrder::from_ranking(doc.order).map_err(err)?).map_err(err)?;
    let r: Vec<u32> = out.instance.r.spots.iter().copied().collect();
    to_py(py, &(out.records, r))
}

/// GPS structure JSON on the cube `[lo, hi]³` (times `0..=4` in dimension 4).
#[pyfunction]
#[pyo3(signature = (dim = 3, lo = 0, hi = 6, eps = "1/8"))]
fn gps_build(dim: u8, lo: i64, hi: i64, eps: &str) -> PyResult<String> {
    let bounds = Bounds::cube(lo, hi).map_err(err)?;
    let eps = parse_rational(eps).map_err(err)?;
    let k = match dim {
        3 => build_gps3(&bounds, eps),
        4 => build_gps4(&bounds, &[0, 1, 2, 3, 4], eps),
        _ => return Err(PyValueError::new_err("dim must be 3 or 4")),
    }
    .map_err(err)?;
    Ok(to_json(&GpsJson::from_gps(&k)))
}

/// The six structure checks of a GPS JSON document.
#[pyfunction]
fn gps_verify<'py>(py: Python<'py>, document: &str) -> PyResult<Bound<'py, PyAny>> {
    let k = parse_json::<GpsJson>(document).map_err(err)?.to_gps().map_err(err)?;
    to_py(py, &verify_definition5(&k))
}

/// Names of the built-in doubling examples.
#[pyfunction]
fn toy_names() -> Vec<&'static str> {
    toys::all().into_iter().map(|(n, _)| n).collect()
}

/// Builds the double of a toy (by name) or of a doubling input document, runs both
/// collapses and returns the punchline report.
#[pyfunction]
fn double_punchlines<'py>(py: Python<'py>, source: &str) -> PyResult<Bound<'py, PyAny>> {
    let old = match toys::all().into_iter().find(|(n, _)| *n == source) {
        Some((_, o)) => o,
        None => parse_json::<OldComplexDoc>(source).map_err(err)?.to_old().map_err(err)?,
    };
    let d = build_double(&build_new(&old).map_err(err)?).map_err(err)?;
    let r = verify_red_collapse(&d).map_err(err)?;
    let b = verify_blue_collapse(&d).map_err(err)?;
    to_py(py, &check_punchlines(&d, &r, &b))
}

/// Seeded fuzz report.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0, count = 100))]
fn fuzz<'py>(py: Python<'py>, suite: &str, seed: u64, count: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &run_suite(suite, seed, count, &FuzzParams::default()).map_err(err)?)
}

#[pymodule]
#[pyo3(name = "gsckit")]
fn gsckit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Complex>()?;
    m.add_class::<Matrix>()?;
    m.add_function(wrap_pyfunction!(colour_change, m)?)?;
    m.add_function(wrap_pyfunction!(balance, m)?)?;
    m.add_function(wrap_pyfunction!(gps_build, m)?)?;
    m.add_function(wrap_pyfunction!(gps_verify, m)?)?;
    m.add_function(wrap_pyfunction!(toy_names, m)?)?;
    m.add_function(wrap_pyfunction!(double_punchlines, m)?)?;
    m.add_function(wrap_pyfunction!(fuzz, m)?)?;
    Ok(())
}
