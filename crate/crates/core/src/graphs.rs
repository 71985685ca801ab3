//! Metric graphs embedded in the plane, and builders for the graph families
//! used throughout the crate: the line, two half-lines glued at a point, the
//! integer graph, the square, graph paper, the circle and pencils of parallel
//! lines.
//!
//! Infinite families are always truncated to a square [`Window`]. Edges that
//! stand for an infinite ray carry `open_*` flags so that the line norms can
//! account for the part of the ray beyond the window.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

const GEOM_TOL: f64 = 1e-9;

/// Axis-aligned square `[cx - R, cx + R] x [cy - R, cy + R]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Point,
    pub half_width: f64,
}

impl Window {
    pub fn new(center: Point, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(invalid("half_width", format!("must be positive, got {half_width}")));
        }
        Ok(Window { center, half_width })
    }

    pub fn centered(half_width: f64) -> Result<Self> {
        Window::new([0.0, 0.0], half_width)
    }

    pub fn min(&self) -> Point {
        [self.center[0] - self.half_width, self.center[1] - self.half_width]
    }

    pub fn max(&self) -> Point {
        [self.center[0] + self.half_width, self.center[1] + self.half_width]
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = GEOM_TOL * self.half_width.max(1.0);
        (p[0] - self.center[0]).abs() <= self.half_width + tol
            && (p[1] - self.center[1]).abs() <= self.half_width + tol
    }
}

/// How an edge's arclength parameter maps into the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Embedding {
    /// `e(x) = start + x * dir`, `dir` a unit vector.
    Segment { start: Point, dir: Point },
    /// `e(x) = center + r (cos(θ0 + x/r), sin(θ0 + x/r))`.
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub embedding: Embedding,
    /// The edge is a truncated ray continuing beyond its start vertex.
    pub open_start: bool,
    /// The edge is a truncated ray continuing beyond its end vertex.
    pub open_end: bool,
}

impl Edge {
    pub fn point(&self, x: f64) -> Point {
        match self.embedding {
            Embedding::Segment { start, dir } => [start[0] + x * dir[0], start[1] + x * dir[1]],
            Embedding::Arc {
                center,
                radius,
                start_angle,
            } => {
                let t = start_angle + x / radius;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
        }
    }

    /// Unit tangent at parameter `x`.
    pub fn tangent(&self, x: f64) -> Point {
        match self.embedding {
            Embedding::Segment { dir, .. } => dir,
            Embedding::Arc {
                radius,
                start_angle,
                ..
            } => {
                let t = start_angle + x / radius;
                [-t.sin(), t.cos()]
            }
        }
    }

    pub fn is_segment(&self) -> bool {
        matches!(self.embedding, Embedding::Segment { .. })
    }
}

/// One end of an edge, used to orient the edge away from a junction vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeEnd {
    pub edge: usize,
    pub at_start: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JunctionShape {
    /// The two edges continue each other through the vertex.
    Straight,
    /// The two edges meet at an angle.
    Corner,
}

/// An unordered pair of edges meeting at `vertex`, each parameterized so that
/// parameter 0 is the shared vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub first: EdgeEnd,
    pub second: EdgeEnd,
    pub vertex: usize,
    pub shape: JunctionShape,
}

/// The families of graphs that have builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphFamily {
    IntervalLine,
    HalfLinePair,
    IntegerGraph { spacing: f64 },
    Square { side: f64 },
    GraphPaper { spacing: f64 },
    Circle { radius: f64 },
    Pencil { spacing: f64 },
}

impl GraphFamily {
    /// Graph paper with squares of side `m^n`.
    pub fn graph_paper_level(m: u32, n: i32) -> Self {
        GraphFamily::GraphPaper {
            spacing: (m as f64).powi(n),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GraphFamily::IntervalLine => "interval-line",
            GraphFamily::HalfLinePair => "half-line-pair",
            GraphFamily::IntegerGraph { .. } => "integer-graph",
            GraphFamily::Square { .. } => "square",
            GraphFamily::GraphPaper { .. } => "graph-paper",
            GraphFamily::Circle { .. } => "circle",
            GraphFamily::Pencil { .. } => "pencil",
        }
    }

    fn scale(&self) -> Option<(&'static str, f64)> {
        match *self {
            GraphFamily::IntervalLine | GraphFamily::HalfLinePair => None,
            GraphFamily::IntegerGraph { spacing } => Some(("spacing", spacing)),
            GraphFamily::Square { side } => Some(("side", side)),
            GraphFamily::GraphPaper { spacing } => Some(("spacing", spacing)),
            GraphFamily::Circle { radius } => Some(("radius", radius)),
            GraphFamily::Pencil { spacing } => Some(("spacing", spacing)),
        }
    }
}

/// A metric graph `G = (V, E, L_e)` with a plane embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    pub vertices: Vec<Point>,
    pub edges: Vec<Edge>,
    pub junctions: Vec<Junction>,
    /// The family the graph was built from, if any (kept by restriction).
    pub family: Option<GraphFamily>,
    pub window: Option<Window>,
}

impl MetricGraph {
    pub fn empty() -> Self {
        MetricGraph {
            vertices: Vec::new(),
            edges: Vec::new(),
            junctions: Vec::new(),
            family: None,
            window: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Builds a graph from vertices and straight edges given as vertex pairs;
    /// junctions are generated for every pair of edges sharing a vertex.
    pub fn from_segments(vertices: Vec<Point>, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            edges.push(segment(&vertices, a, b)?);
        }
        let mut g = MetricGraph {
            vertices,
            edges,
            junctions: Vec::new(),
            family: None,
            window: None,
        };
        g.junctions = all_junctions(&g);
        Ok(g)
    }

    /// Outward unit direction of an edge end at its junction vertex.
    pub fn outward(&self, end: EdgeEnd) -> Point {
        let e = &self.edges[end.edge];
        if end.at_start {
            e.tangent(0.0)
        } else {
            let t = e.tangent(e.length);
            [-t[0], -t[1]]
        }
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Checks the structural invariants: lengths agree with the embedding,
    /// junction edges meet at their vertex, and no junction is repeated.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.edges.iter().enumerate() {
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(invalid("edge length", format!("edge {i} has length {}", e.length)));
            }
            if e.a >= self.vertices.len() || e.b >= self.vertices.len() {
                return Err(invalid("edge", format!("edge {i} references a missing vertex")));
            }
            let tol = GEOM_TOL * e.length.max(1.0);
            if dist(e.point(0.0), self.vertices[e.a]) > tol
                || dist(e.point(e.length), self.vertices[e.b]) > tol
            {
                return Err(invalid("edge embedding", format!("edge {i} does not join its vertices")));
            }
            if let Embedding::Segment { .. } = e.embedding {
                let d = dist(self.vertices[e.a], self.vertices[e.b]);
                if (d - e.length).abs() > tol {
                    return Err(invalid(
                        "edge length",
                        format!("edge {i}: length {} but endpoints are {d} apart", e.length),
                    ));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for (k, j) in self.junctions.iter().enumerate() {
            let p = self.end_point(j.first);
            let q = self.end_point(j.second);
            let v = self.vertices[j.vertex];
            if dist(p, q) > GEOM_TOL || dist(p, v) > GEOM_TOL {
                return Err(invalid("junction", format!("junction {k} edges do not meet")));
            }
            let key = if j.first <= j.second {
                (j.first, j.second)
            } else {
                (j.second, j.first)
            };
            if !seen.insert(key) {
                return Err(invalid("junction", format!("junction {k} is listed twice")));
            }
        }
        Ok(())
    }

    fn end_point(&self, end: EdgeEnd) -> Point {
        let e = &self.edges[end.edge];
        if end.at_start {
            e.point(0.0)
        } else {
            e.point(e.length)
        }
    }

    /// Serializable form `{vertices, edges: [{a, b, len}], junctions: [[i, j]]}`.
    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    a: e.a,
                    b: e.b,
                    len: e.length,
                })
                .collect(),
            junctions: self
                .junctions
                .iter()
                .map(|j| [j.first.edge, j.second.edge])
                .collect(),
        }
    }

    /// Rebuilds a graph from its serialized form. Edges with `a != b` become
    /// segments; loops become circles whose angle-0 point is the vertex.
    pub fn from_doc(doc: &GraphDoc) -> Result<Self> {
        let mut edges = Vec::with_capacity(doc.edges.len());
        for e in &doc.edges {
            if e.a >= doc.vertices.len() || e.b >= doc.vertices.len() {
                return Err(invalid("edges", "vertex index out of range"));
            }
            if e.a == e.b {
                let r = e.len / (2.0 * PI);
                let v = doc.vertices[e.a];
                edges.push(Edge {
                    a: e.a,
                    b: e.b,
                    length: e.len,
                    embedding: Embedding::Arc {
                        center: [v[0] - r, v[1]],
                        radius: r,
                        start_angle: 0.0,
                    },
                    open_start: false,
                    open_end: false,
                });
            } else {
                let mut s = segment(&doc.vertices, e.a, e.b)?;
                s.length = e.len;
                edges.push(s);
            }
        }
        let mut g = MetricGraph {
            vertices: doc.vertices.clone(),
            edges,
            junctions: Vec::new(),
            family: None,
            window: None,
        };
        for &[i, j] in &doc.junctions {
            if i >= g.edges.len() || j >= g.edges.len() {
                return Err(invalid("junctions", "edge index out of range"));
            }
            let ends = if i == j {
                let e = &g.edges[i];
                Some((e.a, EdgeEnd { edge: i, at_start: true }, EdgeEnd { edge: i, at_start: false }))
            } else {
                shared_vertex(&g.edges[i], i, &g.edges[j], j)
            };
            let (vertex, first, second) =
                ends.ok_or_else(|| invalid("junctions", format!("edges {i} and {j} share no vertex")))?;
            let shape = shape_of(&g, first, second);
            g.junctions.push(Junction {
                first,
                second,
                vertex,
                shape,
            });
        }
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub a: usize,
    pub b: usize,
    pub len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub vertices: Vec<Point>,
    pub edges: Vec<EdgeDoc>,
    pub junctions: Vec<[usize; 2]>,
}

fn dist(p: Point, q: Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn segment(vertices: &[Point], a: usize, b: usize) -> Result<Edge> {
    let (p, q) = match (vertices.get(a), vertices.get(b)) {
        (Some(p), Some(q)) => (*p, *q),
        _ => return Err(invalid("edge", "vertex index out of range")),
    };
    let len = dist(p, q);
    if !(len > 0.0) {
        return Err(invalid("edge", format!("vertices {a} and {b} coincide")));
    }
    Ok(Edge {
        a,
        b,
        length: len,
        embedding: Embedding::Segment {
            start: p,
            dir: [(q[0] - p[0]) / len, (q[1] - p[1]) / len],
        },
        open_start: false,
        open_end: false,
    })
}

fn shared_vertex(e: &Edge, i: usize, f: &Edge, j: usize) -> Option<(usize, EdgeEnd, EdgeEnd)> {
    for (v, s1) in [(e.a, true), (e.b, false)] {
        for (w, s2) in [(f.a, true), (f.b, false)] {
            if v == w {
                return Some((v, EdgeEnd { edge: i, at_start: s1 }, EdgeEnd { edge: j, at_start: s2 }));
            }
        }
    }
    None
}

fn shape_of(g: &MetricGraph, first: EdgeEnd, second: EdgeEnd) -> JunctionShape {
    let u = g.outward(first);
    let v = g.outward(second);
    if (u[0] * v[0] + u[1] * v[1] + 1.0).abs() < 1e-9 {
        JunctionShape::Straight
    } else {
        JunctionShape::Corner
    }
}

/// Every unordered pair of edge ends meeting at a common vertex.
fn all_junctions(g: &MetricGraph) -> Vec<Junction> {
    let mut at: Vec<Vec<EdgeEnd>> = vec![Vec::new(); g.vertices.len()];
    for (i, e) in g.edges.iter().enumerate() {
        at[e.a].push(EdgeEnd { edge: i, at_start: true });
        at[e.b].push(EdgeEnd { edge: i, at_start: false });
    }
    let mut out = Vec::new();
    for (v, ends) in at.iter().enumerate() {
        for i in 0..ends.len() {
            for k in i + 1..ends.len() {
                out.push(Junction {
                    first: ends[i],
                    second: ends[k],
                    vertex: v,
                    shape: shape_of(g, ends[i], ends[k]),
                });
            }
        }
    }
    out
}

/// Integer lattice indices `k` with `k * step` inside `[lo, hi]`.
fn lattice_range(lo: f64, hi: f64, step: f64) -> std::ops::RangeInclusive<i64> {
    let tol = 1e-9;
    let first = (lo / step - tol).ceil() as i64;
    let last = (hi / step + tol).floor() as i64;
    first..=last
}

fn check_scale(family: &GraphFamily) -> Result<()> {
    if let Some((name, v)) = family.scale() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(name, format!("must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Truncates a graph family to a window.
pub fn build_graph(family: GraphFamily, window: Window) -> Result<MetricGraph> {
    check_scale(&family)?;
    let [cx, cy] = window.center;
    let r = window.half_width;
    let mut g = match family {
        GraphFamily::IntervalLine => {
            let vertices = vec![[cx - r, cy], [cx + r, cy]];
            let mut g = MetricGraph::from_segments(vertices, &[(0, 1)])?;
            g.edges[0].open_start = true;
            g.edges[0].open_end = true;
            g
        }
        GraphFamily::HalfLinePair => {
            let vertices = vec![[cx, cy], [cx - r, cy], [cx + r, cy]];
            let mut g = MetricGraph::from_segments(vertices, &[(0, 1), (0, 2)])?;
            g.edges[0].open_end = true;
            g.edges[1].open_end = true;
            g
        }
        GraphFamily::IntegerGraph { spacing } => {
            let ks: Vec<i64> = lattice_range(cx - r, cx + r, spacing).collect();
            if ks.len() < 2 {
                return Err(Error::WindowTooSmall { half_width: r, cell: spacing });
            }
            let vertices = ks.iter().map(|&k| [k as f64 * spacing, cy]).collect();
            let pairs: Vec<(usize, usize)> = (0..ks.len() - 1).map(|i| (i, i + 1)).collect();
            MetricGraph::from_segments(vertices, &pairs)?
        }
        GraphFamily::Square { side } => {
            if side > r {
                return Err(Error::WindowTooSmall { half_width: r, cell: side });
            }
            let vertices = vec![[cx, cy], [cx + side, cy], [cx + side, cy + side], [cx, cy + side]];
            // bottom, right, top, left; all parameterized in increasing coordinate
            MetricGraph::from_segments(vertices, &[(0, 1), (1, 2), (3, 2), (0, 3)])?
        }
        GraphFamily::GraphPaper { spacing } => {
            let js: Vec<i64> = lattice_range(cx - r, cx + r, spacing).collect();
            let ks: Vec<i64> = lattice_range(cy - r, cy + r, spacing).collect();
            if js.len() < 2 || ks.len() < 2 {
                return Err(Error::WindowTooSmall { half_width: r, cell: spacing });
            }
            let (nj, nk) = (js.len(), ks.len());
            let mut vertices = Vec::with_capacity(nj * nk);
            for &k in &ks {
                for &j in &js {
                    vertices.push([j as f64 * spacing, k as f64 * spacing]);
                }
            }
            let id = |j: usize, k: usize| k * nj + j;
            let mut pairs = Vec::with_capacity(2 * nj * nk);
            for k in 0..nk {
                for j in 0..nj - 1 {
                    pairs.push((id(j, k), id(j + 1, k)));
                }
            }
            for k in 0..nk - 1 {
                for j in 0..nj {
                    pairs.push((id(j, k), id(j, k + 1)));
                }
            }
            MetricGraph::from_segments(vertices, &pairs)?
        }
        GraphFamily::Circle { radius } => {
            if radius > r {
                return Err(Error::WindowTooSmall { half_width: r, cell: radius });
            }
            let edge = Edge {
                a: 0,
                b: 0,
                length: 2.0 * PI * radius,
                embedding: Embedding::Arc {
                    center: [cx, cy],
                    radius,
                    start_angle: 0.0,
                },
                open_start: false,
                open_end: false,
            };
            MetricGraph {
                vertices: vec![[cx + radius, cy]],
                edges: vec![edge],
                junctions: vec![Junction {
                    first: EdgeEnd { edge: 0, at_start: true },
                    second: EdgeEnd { edge: 0, at_start: false },
                    vertex: 0,
                    shape: JunctionShape::Straight,
                }],
                family: None,
                window: None,
            }
        }
        GraphFamily::Pencil { spacing } => {
            let ks: Vec<i64> = lattice_range(cy - r, cy + r, spacing).collect();
            if ks.len() < 2 {
                return Err(Error::WindowTooSmall { half_width: r, cell: spacing });
            }
            let mut vertices = Vec::with_capacity(2 * ks.len());
            let mut pairs = Vec::with_capacity(ks.len());
            for &k in &ks {
                let y = k as f64 * spacing;
                vertices.push([cx - r, y]);
                vertices.push([cx + r, y]);
                pairs.push((vertices.len() - 2, vertices.len() - 1));
            }
            let mut g = MetricGraph::from_segments(vertices, &pairs)?;
            for e in &mut g.edges {
                e.open_start = true;
                e.open_end = true;
            }
            g
        }
    };
    g.family = Some(family);
    g.window = Some(window);
    debug_assert!(g.validate().is_ok());
    Ok(g)
}

/// Keeps the edges lying inside `region` and the junctions between kept edges.
/// Vertices not used by a kept edge are dropped.
pub fn restrict_graph(g: &MetricGraph, region: Window) -> MetricGraph {
    let inside = |e: &Edge| match e.embedding {
        Embedding::Segment { .. } => region.contains(g.vertices[e.a]) && region.contains(g.vertices[e.b]),
        Embedding::Arc { center, radius, .. } => {
            region.contains([center[0] - radius, center[1] - radius])
                && region.contains([center[0] + radius, center[1] + radius])
        }
    };
    let mut edge_map = HashMap::new();
    let mut vertex_map = HashMap::new();
    let mut out = MetricGraph::empty();
    for (i, e) in g.edges.iter().enumerate() {
        if !inside(e) {
            continue;
        }
        let mut remap = |v: usize, out: &mut MetricGraph| {
            *vertex_map.entry(v).or_insert_with(|| {
                out.vertices.push(g.vertices[v]);
                out.vertices.len() - 1
            })
        };
        let a = remap(e.a, &mut out);
        let b = remap(e.b, &mut out);
        edge_map.insert(i, out.edges.len());
        out.edges.push(Edge { a, b, ..e.clone() });
    }
    for j in &g.junctions {
        if let (Some(&f), Some(&s)) = (edge_map.get(&j.first.edge), edge_map.get(&j.second.edge)) {
            out.junctions.push(Junction {
                first: EdgeEnd { edge: f, ..j.first },
                second: EdgeEnd { edge: s, ..j.second },
                vertex: vertex_map[&j.vertex],
                shape: j.shape,
            });
        }
    }
    if !out.edges.is_empty() {
        out.family = g.family;
        out.window = Some(region);
    }
    out
}
