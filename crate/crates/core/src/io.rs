//! JSON documents for graphs, complexes and doubles, plus DOT and OBJ exports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::complex2::{Cell, FaceId, Labels, TwoComplex};
use crate::doubling::{CaseTag, DoubledComplex, OldComplex, Registry};
use crate::error::{input_err, Result};
use crate::gps::{parse_rational, Bounds, GpsColour, GpsComplex, Q};
use crate::graph::{Colour, EdgeId, Graph, SignedEdge, SpotSet, VertexId};
use crate::lava::StateGraph;

/// Parses JSON, reporting the line and column of syntax and shape errors.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| input_err!("line {} column {}: {}", e.line(), e.column(), e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub id: EdgeId,
    pub ends: [VertexId; 2],
}

/// `{"vertices": [..], "edges": [{"id", "ends"}]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    #[serde(default)]
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeJson>,
}

impl GraphJson {
    pub fn from_graph(g: &Graph) -> Self {
        GraphJson {
            vertices: g.vertices().collect(),
            edges: g.edges().map(|(id, u, v)| EdgeJson { id, ends: [u, v] }).collect(),
        }
    }

    /// Endpoints of edges count as vertices even when not listed.
    pub fn to_graph(&self) -> Result<Graph> {
        let mut g = Graph::new();
        for &v in &self.vertices {
            g.add_vertex(v);
        }
        for e in &self.edges {
            if e.id == 0 {
                return Err(input_err!("edge ids start at 1"));
            }
            g.add_vertex(e.ends[0]);
            g.add_vertex(e.ends[1]);
            g.add_edge(e.id, e.ends[0], e.ends[1])?;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceJson {
    pub id: FaceId,
    /// Signed edge ids.
    pub walk: Vec<i64>,
    #[serde(default)]
    pub label: Labels,
}

/// Graph JSON plus `"faces"`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexJson {
    #[serde(flatten)]
    pub graph: GraphJson,
    #[serde(default)]
    pub faces: Vec<FaceJson>,
}

impl ComplexJson {
    pub fn from_complex(k: &TwoComplex) -> Self {
        ComplexJson {
            graph: GraphJson::from_graph(&k.skeleton),
            faces: k
                .faces()
                .map(|(id, f)| FaceJson { id, walk: f.walk.iter().map(|se| se.to_signed()).collect(), label: f.labels })
                .collect(),
        }
    }

    pub fn to_complex(&self) -> Result<TwoComplex> {
        let mut k = TwoComplex::new(self.graph.to_graph()?);
        for f in &self.faces {
            k.add_face_signed(f.id, &f.walk, f.label)?;
        }
        Ok(k)
    }
}

fn spots(colour: Colour, ids: &Option<Vec<EdgeId>>) -> Option<SpotSet> {
    ids.as_ref().map(|v| SpotSet::new(colour, v.iter().copied()))
}

/// A graph with optional RED and BLUE spots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpottedGraphDoc {
    #[serde(flatten)]
    pub graph: GraphJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub red: Option<Vec<EdgeId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blue: Option<Vec<EdgeId>>,
}

impl SpottedGraphDoc {
    pub fn red(&self) -> Option<SpotSet> {
        spots(Colour::Red, &self.red)
    }

    pub fn blue(&self) -> Option<SpotSet> {
        spots(Colour::Blue, &self.blue)
    }

    /// Both spot sets, which must be present.
    pub fn pair(&self) -> Result<(Graph, SpotSet, SpotSet)> {
        let r = self.red().ok_or_else(|| input_err!("missing \"red\""))?;
        let b = self.blue().ok_or_else(|| input_err!("missing \"blue\""))?;
        Ok((self.graph.to_graph()?, r, b))
    }
}

/// Input of `balance`: a graph, a subgraph given by edge ids, and both spot sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceDoc {
    #[serde(flatten)]
    pub graph: GraphJson,
    /// Edge ids of the subgraph.
    pub sub: Vec<EdgeId>,
    /// Extra isolated subgraph vertices.
    #[serde(default)]
    pub sub_vertices: Vec<VertexId>,
    pub red: Vec<EdgeId>,
    pub blue: Vec<EdgeId>,
    /// RED spots in increasing order of priority.
    #[serde(default)]
    pub order: Vec<EdgeId>,
}

impl BalanceDoc {
    pub fn subgraph(&self, g: &Graph) -> Result<Graph> {
        let mut sub = Graph::new();
        for &v in &self.sub_vertices {
            sub.add_vertex(v);
        }
        for &e in &self.sub {
            let (u, v) = g.endpoints(e).ok_or_else(|| input_err!("subgraph edge {e} is not in the graph"))?;
            sub.add_vertex(u);
            sub.add_vertex(v);
            sub.add_edge(e, u, v)?;
        }
        Ok(sub)
    }
}

/// A complex with optional spots and a target subcomplex.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexDoc {
    #[serde(flatten)]
    pub complex: ComplexJson,
    /// Spot edges for `gsc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spots: Option<Vec<EdgeId>>,
    /// Target subcomplex for `collapse`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spine: Option<SpineJson>,
}

/// Cells of a subcomplex. Faces bring their closures; listed edges bring their ends.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpineJson {
    #[serde(default)]
    pub vertices: Vec<VertexId>,
    #[serde(default)]
    pub edges: Vec<EdgeId>,
    #[serde(default)]
    pub faces: Vec<FaceId>,
}

impl SpineJson {
    pub fn cells(&self, k: &TwoComplex) -> Result<BTreeSet<Cell>> {
        for &f in &self.faces {
            if k.face(f).is_none() {
                return Err(input_err!("spine face {f} is not in the complex"));
            }
        }
        let mut cells = k.closure_of_faces(&self.faces.iter().copied().collect());
        for &e in &self.edges {
            let (u, v) = k.skeleton.endpoints(e).ok_or_else(|| input_err!("spine edge {e} is not in the complex"))?;
            cells.extend([Cell::Edge(e), Cell::Vertex(u), Cell::Vertex(v)]);
        }
        for &v in &self.vertices {
            if !k.skeleton.has_vertex(v) {
                return Err(input_err!("spine vertex {v} is not in the complex"));
            }
            cells.insert(Cell::Vertex(v));
        }
        Ok(cells)
    }
}

/// Input of the doubling commands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OldComplexDoc {
    #[serde(flatten)]
    pub complex: ComplexJson,
    pub red: Vec<EdgeId>,
    pub blue: Vec<EdgeId>,
    /// Faces of Δ².
    pub delta: Vec<FaceId>,
}

impl OldComplexDoc {
    pub fn from_old(o: &OldComplex) -> Self {
        OldComplexDoc {
            complex: ComplexJson::from_complex(&o.complex),
            red: o.red.spots.iter().copied().collect(),
            blue: o.blue.spots.iter().copied().collect(),
            delta: o.delta.iter().copied().collect(),
        }
    }

    pub fn to_old(&self) -> Result<OldComplex> {
        Ok(OldComplex {
            complex: self.complex.to_complex()?,
            red: SpotSet::new(Colour::Red, self.red.iter().copied()),
            blue: SpotSet::new(Colour::Blue, self.blue.iter().copied()),
            delta: self.delta.iter().copied().collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseTagJson {
    pub face: FaceId,
    pub edge: EdgeId,
    pub tag: CaseTag,
}

/// Complex JSON of `2X²` plus `"caseTags"` and `"registry"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubledJson {
    #[serde(flatten)]
    pub complex: ComplexJson,
    #[serde(rename = "caseTags")]
    pub case_tags: Vec<CaseTagJson>,
    pub registry: Registry,
    pub r1: Vec<EdgeId>,
    pub b1: Vec<EdgeId>,
    pub base: Vec<FaceId>,
    pub xi_band: Vec<FaceId>,
    pub b_side: Vec<FaceId>,
    pub delta_low: Vec<FaceId>,
}

impl DoubledJson {
    pub fn from_double(d: &DoubledComplex) -> Self {
        DoubledJson {
            complex: ComplexJson::from_complex(&d.complex),
            case_tags: d.rb_band.iter().map(|(&face, b)| CaseTagJson { face, edge: b.edge, tag: b.tag }).collect(),
            registry: d.registry.clone(),
            r1: d.r1.spots.iter().copied().collect(),
            b1: d.b1.spots.iter().copied().collect(),
            base: d.base.iter().copied().collect(),
            xi_band: d.xi_band.iter().copied().collect(),
            b_side: d.b_side.keys().copied().collect(),
            delta_low: d.delta_low.iter().copied().collect(),
        }
    }
}

fn q_str(x: &Q) -> String {
    x.to_string()
}

fn q_parse(s: &str) -> Result<Q> {
    parse_rational(s)
}

/// Complex JSON plus exact coordinates (`"p/q"` strings), colours and the box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpsJson {
    #[serde(flatten)]
    pub complex: ComplexJson,
    pub coords: BTreeMap<VertexId, Vec<String>>,
    #[serde(rename = "faceColour")]
    pub face_colour: BTreeMap<FaceId, GpsColour>,
    pub coarse: BTreeMap<EdgeId, GpsColour>,
    pub eps: String,
    pub lo: [String; 3],
    pub hi: [String; 3],
    #[serde(default)]
    pub times: Vec<i64>,
}

impl GpsJson {
    pub fn from_gps(k: &GpsComplex) -> Self {
        GpsJson {
            complex: ComplexJson::from_complex(&k.complex),
            coords: k.coords.iter().map(|(&v, c)| (v, c.iter().map(q_str).collect())).collect(),
            face_colour: k.face_colour.clone(),
            coarse: k.coarse.clone(),
            eps: q_str(&k.eps),
            lo: k.bounds.lo.map(|x| q_str(&x)),
            hi: k.bounds.hi.map(|x| q_str(&x)),
            times: k.times.clone(),
        }
    }

    pub fn to_gps(&self) -> Result<GpsComplex> {
        let complex = self.complex.to_complex()?;
        let width = if self.times.is_empty() { 3 } else { 4 };
        let mut coords = BTreeMap::new();
        for v in complex.skeleton.vertices() {
            let c = self.coords.get(&v).ok_or_else(|| input_err!("vertex {v} has no coordinates"))?;
            if c.len() != width {
                return Err(input_err!("vertex {v} has {} coordinates, expected {width}", c.len()));
            }
            coords.insert(v, c.iter().map(|x| q_parse(x)).collect::<Result<Vec<Q>>>()?);
        }
        let parse3 = |xs: &[String; 3]| -> Result<[Q; 3]> { Ok([q_parse(&xs[0])?, q_parse(&xs[1])?, q_parse(&xs[2])?]) };
        Ok(GpsComplex {
            complex,
            coords,
            face_colour: self.face_colour.clone(),
            coarse: self.coarse.clone(),
            eps: q_parse(&self.eps)?,
            bounds: Bounds::new(parse3(&self.lo)?, parse3(&self.hi)?)?,
            times: self.times.clone(),
        })
    }
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

/// DOT of a graph; RED spots red, BLUE spots blue, shared spots purple.
pub fn graph_dot(g: &Graph, red: Option<&SpotSet>, blue: Option<&SpotSet>) -> String {
    let mut s = String::from("graph G {\n");
    for v in g.vertices() {
        let _ = writeln!(s, "  {v};");
    }
    for (e, u, v) in g.edges() {
        let r = red.is_some_and(|x| x.contains(e));
        let b = blue.is_some_and(|x| x.contains(e));
        let colour = match (r, b) {
            (true, true) => "purple",
            (true, false) => "red",
            (false, true) => "blue",
            (false, false) => "black",
        };
        let _ = writeln!(s, "  {u} -- {v} [label={}, color={colour}];", dot_id(&e.to_string()));
    }
    s.push_str("}\n");
    s
}

/// DOT of a complex: skeleton edges, plus one box node per face joined to its edges' ends.
pub fn complex_dot(k: &TwoComplex, red: Option<&SpotSet>, blue: Option<&SpotSet>) -> String {
    let mut s = graph_dot(&k.skeleton, red, blue);
    s.truncate(s.len() - 2);
    for (f, face) in k.faces() {
        let _ = writeln!(s, "  f{f} [shape=box, label={}];", dot_id(&format!("{f} {}", face.labels.to_list().iter().map(|l| l.to_string()).collect::<Vec<_>>().join("/"))));
        let corners: BTreeSet<VertexId> = face
            .walk
            .iter()
            .filter_map(|&se: &SignedEdge| k.skeleton.oriented_ends(se).map(|(a, _)| a))
            .collect();
        for v in corners {
            let _ = writeln!(s, "  f{f} -- {v} [style=dotted];");
        }
    }
    s.push_str("}\n");
    s
}

/// DOT of a state graph with arrow multiplicities as labels.
pub fn state_graph_dot(sg: &StateGraph) -> String {
    let mut mult: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for a in &sg.arrows {
        *mult.entry((a.from, a.to)).or_default() += 1;
    }
    let mut s = String::from("digraph M {\n");
    for &st in &sg.states {
        let _ = writeln!(s, "  {st};");
    }
    for ((a, b), n) in mult {
        let _ = writeln!(s, "  {a} -> {b} [label={}];", dot_id(&n.to_string()));
    }
    s.push_str("}\n");
    s
}

/// Vertices as `v x y z` and faces as `f i j k ..` (1-based), in the style of
/// Wavefront OBJ. Temporal faces of a 4D structure are skipped and the time
/// coordinate is dropped.
pub fn gps_obj(k: &GpsComplex) -> String {
    let mut index: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut s = format!("# eps {}\n", k.eps);
    for (i, (&v, c)) in k.coords.iter().enumerate() {
        index.insert(v, i + 1);
        let xyz: Vec<String> = c.iter().take(3).map(|x| format!("{}", *x.numer() as f64 / *x.denom() as f64)).collect();
        let _ = writeln!(s, "v {}", xyz.join(" "));
    }
    for (f, face) in k.complex.faces() {
        if k.face_colour.get(&f) == Some(&crate::gps::GpsColour::Temporal) {
            continue;
        }
        let corners: Vec<String> = face
            .walk
            .iter()
            .filter_map(|&se| k.complex.skeleton.oriented_ends(se).map(|(a, _)| index[&a].to_string()))
            .collect();
        let _ = writeln!(s, "f {}", corners.join(" "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doubling::toys;

    #[test]
    fn complex_round_trip() {
        let o = toys::annulus();
        let doc = OldComplexDoc::from_old(&o);
        let text = to_json(&doc);
        let back: OldComplexDoc = parse_json(&text).unwrap();
        assert_eq!(back.to_old().unwrap(), o);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_json::<GraphJson>("{\n  \"edges\": [\n    {\"id\": 1, \"ends\": [0, 1]\n  ]\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 4 column"), "{msg}");
    }

    #[test]
    fn gps_round_trip() {
        let k = crate::gps::build_gps3(&Bounds::cube(0, 2).unwrap(), crate::gps::default_eps()).unwrap();
        let doc = GpsJson::from_gps(&k);
        let back: GpsJson = parse_json(&to_json(&doc)).unwrap();
        assert_eq!(back.to_gps().unwrap(), k);
    }

    #[test]
    fn edge_id_zero_is_rejected() {
        let g: GraphJson = parse_json(r#"{"edges": [{"id": 0, "ends": [0, 1]}]}"#).unwrap();
        assert!(g.to_graph().is_err());
    }

    #[test]
    fn purple_marks_shared_spots() {
        let g = Graph::cycle(3);
        let r = SpotSet::new(Colour::Red, [1]);
        let b = SpotSet::new(Colour::Blue, [1, 2]);
        let dot = graph_dot(&g, Some(&r), Some(&b));
        assert!(dot.contains("color=purple"));
        assert!(dot.contains("color=blue"));
        assert!(dot.contains("color=black"));
    }
}
