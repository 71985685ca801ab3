//! Homogeneous fractional seminorms of piecewise-linear functions on metric
//! graphs: edge double integrals, junction integrals and their assembly into
//! the norms of the line, half-lines, the integer graph, the square, graph
//! paper, the circle, pencils of lines and the `H^β` norms on fractal graphs.

pub mod kernel;
pub mod pairs;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functions::EdgeFunction;
use crate::graphs::{Embedding, GraphFamily, JunctionShape, MetricGraph, Window};
use crate::reduce::pairwise_sum;
use kernel::{Banded, Chordal, Kernel, Power};
use pairs::{double_integral, exterior_cross, inverse_weighted_square, tail_integral, TailWeight};

/// Which seminorm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormKind {
    /// The general metric-graph norm: every edge plus every junction pair.
    HalfGraph,
    /// One infinite line, full kernel.
    HalfLine,
    /// One infinite line, kernel restricted to `|x - y| <= 1`.
    TildeHalfLine,
    IntegerGraph,
    Square,
    GraphPaper,
    Circle,
    PencilTilde,
    /// `|x - y|^-(1 + 2β)` on every edge, no junction terms.
    HBeta { beta: f64 },
}

impl NormKind {
    pub fn name(&self) -> &'static str {
        match self {
            NormKind::HalfGraph => "half-graph",
            NormKind::HalfLine => "half-line",
            NormKind::TildeHalfLine => "tilde-half-line",
            NormKind::IntegerGraph => "integer-graph",
            NormKind::Square => "square",
            NormKind::GraphPaper => "graph-paper",
            NormKind::Circle => "circle",
            NormKind::PencilTilde => "pencil-tilde",
            NormKind::HBeta { .. } => "h-beta",
        }
    }

    pub fn parse(name: &str, beta: Option<f64>) -> Result<Self> {
        Ok(match name {
            "half-graph" => NormKind::HalfGraph,
            "half-line" => NormKind::HalfLine,
            "tilde-half-line" | "tilde" => NormKind::TildeHalfLine,
            "integer-graph" => NormKind::IntegerGraph,
            "square" => NormKind::Square,
            "graph-paper" => NormKind::GraphPaper,
            "circle" => NormKind::Circle,
            "pencil-tilde" | "pencil" => NormKind::PencilTilde,
            "h-beta" => NormKind::HBeta {
                beta: beta.ok_or_else(|| invalid("beta", "h-beta needs a value for beta"))?,
            },
            other => return Err(invalid("kind", format!("unknown norm kind `{other}`"))),
        })
    }

    fn check(&self) -> Result<()> {
        if let NormKind::HBeta { beta } = *self {
            if !(beta > 0.5 && beta < 1.0) {
                return Err(invalid("beta", format!("must lie in (1/2, 1), got {beta}")));
            }
        }
        Ok(())
    }
}

/// How the parts of infinite rays outside the window are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Exterior {
    /// Integrate over the window only.
    Truncated,
    /// Continue every open edge by its end value and integrate the exterior
    /// exactly.
    #[default]
    ConstantTails,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub exterior: Exterior,
    /// Keep the straight-through junction sums of the graph-paper norm.
    pub straight_through: bool,
    /// Also evaluate at half the resolution and report the relative change.
    pub refinement: bool,
    /// Keep per-edge and per-junction values in the report.
    pub detail: bool,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            exterior: Exterior::ConstantTails,
            straight_through: true,
            refinement: true,
            detail: false,
        }
    }
}

/// Category totals of a seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    EdgeDouble,
    Junction,
    StraightThrough,
    Exterior,
    LineDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub term: TermKind,
    pub count: usize,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionInfo {
    pub min_cells: usize,
    pub max_cells: usize,
    pub min_spacing: f64,
}

impl ResolutionInfo {
    pub fn of(f: &EdgeFunction) -> Self {
        let mut info = ResolutionInfo {
            min_cells: usize::MAX,
            max_cells: 0,
            min_spacing: f64::INFINITY,
        };
        for e in 0..f.samples.len() {
            info.min_cells = info.min_cells.min(f.cells(e));
            info.max_cells = info.max_cells.max(f.cells(e));
            info.min_spacing = info.min_spacing.min(f.spacing(e));
        }
        if f.samples.is_empty() {
            info.min_cells = 0;
        }
        info
    }
}

/// A squared seminorm with its decomposition and quadrature metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub kind: NormKind,
    /// The squared norm; the pairwise sum of `breakdown`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub value: f64,
    pub breakdown: Vec<Term>,
    pub window: Option<Window>,
    pub resolution: ResolutionInfo,
    /// `|value(N) - value(N/2)| / value(N)` when requested and possible.
    #[serde(serialize_with = "crate::report::ser_opt_f64")]
    pub refinement_estimate: Option<f64>,
    /// Per-edge double integrals (with detail).
    #[serde(skip)]
    pub edge_terms: Vec<f64>,
    /// Per-junction terms, aligned with the graph's junction list (with detail).
    #[serde(skip)]
    pub junction_terms: Vec<f64>,
}

impl NormReport {
    pub fn term(&self, kind: TermKind) -> f64 {
        self.breakdown.iter().filter(|t| t.term == kind).map(|t| t.value).sum()
    }
}

fn kernel_for(kind: NormKind, g: &MetricGraph) -> Box<dyn Kernel> {
    match kind {
        NormKind::TildeHalfLine => Box::new(Banded { width: 1.0 }),
        NormKind::PencilTilde => Box::new(Banded {
            width: pencil_spacing(g).unwrap_or(1.0),
        }),
        NormKind::HBeta { beta } => Box::new(Power { p: 1.0 + 2.0 * beta }),
        NormKind::Circle => match g.edges.first().map(|e| e.embedding) {
            Some(Embedding::Arc { radius, .. }) => Box::new(Chordal { radius }),
            _ => Box::new(Power { p: 2.0 }),
        },
        _ => Box::new(Power { p: 2.0 }),
    }
}

fn pencil_spacing(g: &MetricGraph) -> Option<f64> {
    match g.family {
        Some(GraphFamily::Pencil { spacing }) => Some(spacing),
        _ => None,
    }
}

fn tail_weight(kernel: &dyn Kernel) -> TailWeight {
    match kernel.band() {
        Some(w) => TailWeight::Banded(w),
        None => TailWeight::Power(kernel.exponent()),
    }
}

/// `∫∫ |f(e(x)) - f(e(y))|^2 / |x - y|^p` over one edge, `2 <= p < 3`.
///
/// Only the diagonal blocks `e == e2` enter any of the norms; other pairs are
/// rejected.
pub fn edge_double_integral(f: &EdgeFunction, e: usize, e2: usize, p: f64) -> Result<f64> {
    if e >= f.samples.len() || e2 >= f.samples.len() {
        return Err(invalid("edge", format!("edge index out of range ({e}, {e2})")));
    }
    if e != e2 {
        return Err(invalid("edge", "double integrals are taken over a single edge"));
    }
    if !(2.0..3.0).contains(&p) {
        return Err(Error::Exponent(p));
    }
    double_integral(&f.samples[e], f.spacing(e), 0.0, &Power { p }, false)
}

/// `∫_0^L |f(e(x)) - f(e2(x))|^2 / x dx`, both edges parameterized from
/// their shared vertex, `L = min(L_e, L_e2)`.
pub fn junction_integral(f: &EdgeFunction, e: usize, e2: usize, length: Option<f64>) -> Result<f64> {
    let g = &f.graph;
    let j = g
        .junctions
        .iter()
        .find(|j| (j.first.edge == e && j.second.edge == e2) || (j.first.edge == e2 && j.second.edge == e))
        .ok_or_else(|| invalid("junction", format!("edges {e} and {e2} do not form a junction")))?;
    let (a, b) = if j.first.edge == e {
        (j.first, j.second)
    } else {
        (j.second, j.first)
    };
    Ok(junction_term(f, a.edge, a.at_start, b.edge, b.at_start, length))
}

fn junction_term(f: &EdgeFunction, e: usize, e_start: bool, e2: usize, e2_start: bool, length: Option<f64>) -> f64 {
    let g = &f.graph;
    let l = length
        .unwrap_or(f64::INFINITY)
        .min(g.edges[e].length)
        .min(g.edges[e2].length);
    let s1 = f.from_end(e, e_start);
    let s2 = f.from_end(e2, e2_start);
    let (h1, h2) = (f.spacing(e), f.spacing(e2));
    let scale = s1.iter().chain(&s2).fold(0.0f64, |m, v| m.max(v.abs()));
    if s1.len() == s2.len() && (h1 - h2).abs() <= 1e-12 * h1 && l >= g.edges[e].length * (1.0 - 1e-12) {
        let xs: Vec<f64> = (0..s1.len()).map(|i| i as f64 * h1).collect();
        let d: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a - b).collect();
        return inverse_weighted_square(&xs, &d, scale);
    }
    // merge the two breakpoint sets on [0, l]
    let mut xs: Vec<f64> = (0..s1.len())
        .map(|i| i as f64 * h1)
        .chain((0..s2.len()).map(|i| i as f64 * h2))
        .filter(|&x| x <= l * (1.0 + 1e-12))
        .collect();
    xs.push(l);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * l.max(1.0));
    let interp = |s: &[f64], h: f64, x: f64| {
        let t = (x / h).clamp(0.0, (s.len() - 1) as f64);
        let i = (t.floor() as usize).min(s.len() - 2);
        let w = t - i as f64;
        if w == 0.0 {
            s[i]
        } else {
            s[i] * (1.0 - w) + s[i + 1] * w
        }
    };
    let d: Vec<f64> = xs.iter().map(|&x| interp(&s1, h1, x) - interp(&s2, h2, x)).collect();
    inverse_weighted_square(&xs, &d, scale)
}

fn check_compatible(kind: NormKind, g: &MetricGraph) -> Result<()> {
    let fam = g.family;
    let fail = |reason: &str| {
        Err(Error::IncompatibleKind {
            kind: kind.name().into(),
            reason: reason.into(),
        })
    };
    let family_is = |want: fn(&GraphFamily) -> bool| fam.as_ref().map(want).unwrap_or(false);
    match kind {
        NormKind::HalfLine | NormKind::TildeHalfLine => {
            if g.edges.len() != 1 || !g.edges[0].is_segment() {
                return fail("needs a graph with a single straight edge");
            }
        }
        NormKind::IntegerGraph => {
            if !family_is(|f| matches!(f, GraphFamily::IntegerGraph { .. })) {
                return fail("needs an integer graph");
            }
        }
        NormKind::Square => {
            if !family_is(|f| matches!(f, GraphFamily::Square { .. })) {
                return fail("needs a square graph");
            }
        }
        NormKind::GraphPaper => {
            if !family_is(|f| matches!(f, GraphFamily::GraphPaper { .. })) {
                return fail("needs a graph-paper graph");
            }
        }
        NormKind::Circle => {
            if g.edges.len() != 1 || g.edges[0].is_segment() {
                return fail("needs a single closed circular edge");
            }
        }
        NormKind::PencilTilde => {
            if pencil_spacing(g).is_none() {
                return fail("needs a pencil of parallel lines");
            }
        }
        NormKind::HalfGraph | NormKind::HBeta { .. } => {}
    }
    Ok(())
}

/// Evaluates a seminorm with default options.
pub fn seminorm(f: &EdgeFunction, kind: NormKind) -> Result<NormReport> {
    seminorm_with(f, kind, &NormOptions::default())
}

pub fn seminorm_with(f: &EdgeFunction, kind: NormKind, opts: &NormOptions) -> Result<NormReport> {
    kind.check()?;
    check_compatible(kind, &f.graph)?;
    let mut report = assemble(f, kind, opts)?;
    if opts.refinement {
        if let Some(coarse) = coarsen(f) {
            let c = assemble(&coarse, kind, &NormOptions { detail: false, ..*opts })?;
            report.refinement_estimate = Some(if report.value == 0.0 {
                0.0
            } else {
                ((report.value - c.value) / report.value).abs()
            });
        }
    }
    Ok(report)
}

/// Every other sample, when all edges have an even number of cells of at
/// least 4 (and the result keeps any band aligned).
fn coarsen(f: &EdgeFunction) -> Option<EdgeFunction> {
    if f.samples.iter().any(|s| (s.len() - 1) % 2 != 0 || s.len() < 5) {
        return None;
    }
    let samples = f.samples.iter().map(|s| s.iter().step_by(2).copied().collect()).collect();
    Some(EdgeFunction {
        graph: f.graph.clone(),
        samples,
        continuous: f.continuous,
    })
}

struct Acc {
    edge_terms: Vec<f64>,
    junction_terms: Vec<f64>,
    straight: Vec<f64>,
    exterior: Vec<f64>,
    lines: Vec<f64>,
}

fn assemble(f: &EdgeFunction, kind: NormKind, opts: &NormOptions) -> Result<NormReport> {
    let g = &*f.graph;
    let kernel = kernel_for(kind, g);
    let periodic = kind == NormKind::Circle;
    // banded kernels shorter than a cell cannot be resolved
    if let Some(w) = kernel.band() {
        for e in 0..f.samples.len() {
            if f.spacing(e) > w * (1.0 + 1e-12) {
                return Err(Error::Misaligned(format!(
                    "edge {e}: cell width {} exceeds the kernel band {w}",
                    f.spacing(e)
                )));
            }
        }
    }
    let mut acc = Acc {
        edge_terms: Vec::with_capacity(g.edges.len()),
        junction_terms: Vec::new(),
        straight: Vec::new(),
        exterior: Vec::new(),
        lines: Vec::new(),
    };
    for e in 0..g.edges.len() {
        acc.edge_terms
            .push(double_integral(&f.samples[e], f.spacing(e), 0.0, kernel.as_ref(), periodic)?);
    }

    let with_junctions = !matches!(
        kind,
        NormKind::HBeta { .. } | NormKind::HalfLine | NormKind::TildeHalfLine | NormKind::PencilTilde | NormKind::Circle
    );
    if with_junctions {
        acc.junction_terms = vec![0.0; g.junctions.len()];
        for (k, j) in g.junctions.iter().enumerate() {
            let weight = junction_weight(kind, g, k, opts);
            if weight == 0.0 {
                continue;
            }
            let v = junction_term(f, j.first.edge, j.first.at_start, j.second.edge, j.second.at_start, None);
            acc.junction_terms[k] = v;
            if kind == NormKind::GraphPaper && j.shape == JunctionShape::Straight {
                acc.straight.push(v);
            }
            // beyond the window two open rays keep differing by their end values
            if opts.exterior == Exterior::ConstantTails {
                let (e1, e2) = (&g.edges[j.first.edge], &g.edges[j.second.edge]);
                let far_open = |e: &crate::graphs::Edge, at_start: bool| if at_start { e.open_end } else { e.open_start };
                if far_open(e1, j.first.at_start) && far_open(e2, j.second.at_start) {
                    let a = f.end_value(j.first.edge, !j.first.at_start);
                    let b = f.end_value(j.second.edge, !j.second.at_start);
                    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                        acc.exterior.push(f64::INFINITY);
                    }
                }
            }
        }
    }

    if opts.exterior == Exterior::ConstantTails && !periodic && !matches!(kind, NormKind::HBeta { .. }) {
        let w = tail_weight(kernel.as_ref());
        for (e, edge) in g.edges.iter().enumerate() {
            let h = f.spacing(e);
            if edge.open_start {
                acc.exterior.push(tail_integral(&f.samples[e], h, w));
            }
            if edge.open_end {
                let rev = f.from_end(e, false);
                acc.exterior.push(tail_integral(&rev, h, w));
            }
            if edge.open_start && edge.open_end {
                let s = &f.samples[e];
                // end values that agree to rounding are the same constant
                let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                let (a, b) = (s[0], s[s.len() - 1]);
                let b = if (a - b).abs() <= 1e-12 * scale { a } else { b };
                acc.exterior.push(exterior_cross(a, b, edge.length, w));
            }
        }
    }

    if kind == NormKind::PencilTilde {
        acc.lines = pencil_line_differences(f)?;
    }

    let edge_sum = pairwise_sum(&acc.edge_terms);
    let junction_total: Vec<f64> = match kind {
        NormKind::GraphPaper => {
            // corner pairs only; straight-through pairs are a separate category
            g.junctions
                .iter()
                .zip(&acc.junction_terms)
                .filter(|(j, _)| j.shape == JunctionShape::Corner)
                .map(|(_, v)| *v)
                .collect()
        }
        _ => acc.junction_terms.clone(),
    };
    let mut breakdown = vec![Term {
        term: TermKind::EdgeDouble,
        count: acc.edge_terms.len(),
        value: edge_sum,
    }];
    if with_junctions {
        breakdown.push(Term {
            term: TermKind::Junction,
            count: junction_total.iter().filter(|v| **v != 0.0).count(),
            value: pairwise_sum(&junction_total),
        });
    }
    if kind == NormKind::GraphPaper && opts.straight_through {
        breakdown.push(Term {
            term: TermKind::StraightThrough,
            count: acc.straight.len(),
            value: pairwise_sum(&acc.straight),
        });
    }
    if !acc.exterior.is_empty() {
        breakdown.push(Term {
            term: TermKind::Exterior,
            count: acc.exterior.len(),
            value: pairwise_sum(&acc.exterior),
        });
    }
    if kind == NormKind::PencilTilde {
        breakdown.push(Term {
            term: TermKind::LineDifference,
            count: acc.lines.len(),
            value: pairwise_sum(&acc.lines),
        });
    }
    let totals: Vec<f64> = breakdown.iter().map(|t| t.value).collect();
    Ok(NormReport {
        kind,
        value: pairwise_sum(&totals),
        breakdown,
        window: g.window,
        resolution: ResolutionInfo::of(f),
        refinement_estimate: None,
        edge_terms: if opts.detail { acc.edge_terms } else { Vec::new() },
        junction_terms: if opts.detail { acc.junction_terms } else { Vec::new() },
    })
}

/// Which junction pairs enter a norm. On graph paper only horizontal-vertical
/// pairs opening into the same quadrant (east-north and west-south) and the
/// straight-through pairs are weighted.
fn junction_weight(kind: NormKind, g: &MetricGraph, k: usize, opts: &NormOptions) -> f64 {
    let j = &g.junctions[k];
    match kind {
        NormKind::GraphPaper => match j.shape {
            JunctionShape::Straight => {
                if opts.straight_through {
                    1.0
                } else {
                    0.0
                }
            }
            JunctionShape::Corner => {
                let (u, v) = (g.outward(j.first), g.outward(j.second));
                let (sx, sy) = (u[0] + v[0], u[1] + v[1]);
                if sx * sy > 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        },
        _ => 1.0,
    }
}

/// `δ^-1 ∫ |f(x, y_{k+1}) - f(x, y_k)|^2 dx` for consecutive lines of a
/// pencil, on the common window grid.
fn pencil_line_differences(f: &EdgeFunction) -> Result<Vec<f64>> {
    let g = &*f.graph;
    let delta = pencil_spacing(g).ok_or_else(|| invalid("graph", "not a pencil"))?;
    let mut order: Vec<usize> = (0..g.edges.len()).collect();
    order.sort_by(|&a, &b| g.vertices[g.edges[a].a][1].total_cmp(&g.vertices[g.edges[b].a][1]));
    let mut out = Vec::with_capacity(order.len().saturating_sub(1));
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (sa, sb) = (&f.samples[a], &f.samples[b]);
        if sa.len() != sb.len() {
            return Err(Error::Misaligned(format!("pencil lines {a} and {b} are sampled differently")));
        }
        let h = f.spacing(a);
        let cells: Vec<f64> = (0..sa.len() - 1)
            .map(|i| crate::quadrature::linear_square(sb[i] - sa[i], sb[i + 1] - sa[i + 1], h))
            .collect();
        out.push(pairwise_sum(&cells) / delta);
    }
    Ok(out)
}

/// `∫_0^δ |f(x, 0) - f(x, δ)|^2 dx` and `∫_0^δ |f(0, y) - f(δ, y)|^2 dy` on a
/// square graph: the comparisons between opposite sides.
pub fn square_opposite_gaps(f: &EdgeFunction) -> Result<(f64, f64)> {
    let g = &*f.graph;
    if !matches!(g.family, Some(GraphFamily::Square { .. })) || g.edges.len() != 4 {
        return Err(Error::IncompatibleKind {
            kind: "square".into(),
            reason: "needs a square graph".into(),
        });
    }
    // edges are bottom, right, top, left, all in increasing coordinate
    let gap = |a: usize, b: usize| -> Result<f64> {
        let (sa, sb) = (&f.samples[a], &f.samples[b]);
        if sa.len() != sb.len() {
            return Err(Error::Misaligned("opposite sides sampled differently".into()));
        }
        let h = f.spacing(a);
        let cells: Vec<f64> = (0..sa.len() - 1)
            .map(|i| crate::quadrature::linear_square(sa[i] - sb[i], sa[i + 1] - sb[i + 1], h))
            .collect();
        Ok(pairwise_sum(&cells))
    };
    Ok((gap(0, 2)?, gap(3, 1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{sample_on_graph, FunctionFamily, Resolution};
    use crate::graphs::{build_graph, GraphFamily, Window};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn unit_edge(f: impl Fn(f64) -> f64, n: usize) -> EdgeFunction {
        let g = MetricGraph::from_segments(vec![[0.0, 0.0], [1.0, 0.0]], &[(0, 1)]).unwrap();
        let s = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        EdgeFunction::new(g, vec![s], true).unwrap()
    }

    #[test]
    fn edge_double_examples() {
        let f = unit_edge(|x| x, 8);
        assert!((edge_double_integral(&f, 0, 0, 2.0).unwrap() - 1.0).abs() < 1e-13);
        assert!(matches!(edge_double_integral(&f, 0, 0, 3.0), Err(Error::Exponent(_))));
        let c = unit_edge(|_| 4.0, 8);
        assert_eq!(edge_double_integral(&c, 0, 0, 2.5).unwrap(), 0.0);
    }

    #[test]
    fn junction_examples() {
        let g = build_graph(GraphFamily::HalfLinePair, Window::centered(1.0).unwrap()).unwrap();
        let g = Arc::new(g);
        // both edges start at the origin: f = x on one, -x on the other
        let f = EdgeFunction::new(
            g.clone(),
            vec![(0..=8).map(|i| i as f64 / 8.0).collect(), (0..=8).map(|i| -(i as f64) / 8.0).collect()],
            true,
        )
        .unwrap();
        assert!((junction_integral(&f, 0, 1, None).unwrap() - 2.0).abs() < 1e-14);
        let same = EdgeFunction::new(g.clone(), vec![vec![0.3; 5], vec![0.3; 5]], true).unwrap();
        assert_eq!(junction_integral(&same, 0, 1, None).unwrap(), 0.0);
        let jump = EdgeFunction::new(g, vec![vec![0.0; 5], vec![1.0; 5]], false).unwrap();
        assert!(junction_integral(&jump, 0, 1, None).unwrap().is_infinite());
    }

    #[test]
    fn junction_with_unequal_grids() {
        let g = Arc::new(build_graph(GraphFamily::HalfLinePair, Window::centered(1.0).unwrap()).unwrap());
        let f = EdgeFunction::new(
            g,
            vec![(0..=8).map(|i| i as f64 / 8.0).collect(), (0..=3).map(|i| -(i as f64) / 3.0).collect()],
            true,
        )
        .unwrap();
        assert!((junction_integral(&f, 0, 1, None).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn circle_cos_and_radius_invariance() {
        let mut values = Vec::new();
        for r in [1.0, 2.5] {
            let g = Arc::new(build_graph(GraphFamily::Circle { radius: r }, Window::centered(3.0).unwrap()).unwrap());
            let n = 1024;
            let s = (0..=n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
            let f = EdgeFunction::new(g, vec![s], true).unwrap();
            values.push(seminorm(&f, NormKind::Circle).unwrap().value);
        }
        assert!((values[0] - 2.0 * PI * PI).abs() < 1e-5 * values[0]);
        assert!((values[0] - values[1]).abs() < 1e-10 * values[0]);
    }

    #[test]
    fn constants_vanish_everywhere() {
        let w = Window::centered(2.0).unwrap();
        let c = FunctionFamily::Constant { value: 1.7 };
        let cases = [
            (GraphFamily::IntervalLine, NormKind::HalfLine),
            (GraphFamily::IntervalLine, NormKind::TildeHalfLine),
            (GraphFamily::HalfLinePair, NormKind::HalfGraph),
            (GraphFamily::IntegerGraph { spacing: 1.0 }, NormKind::IntegerGraph),
            (GraphFamily::Square { side: 1.0 }, NormKind::Square),
            (GraphFamily::GraphPaper { spacing: 1.0 }, NormKind::GraphPaper),
            (GraphFamily::Circle { radius: 1.0 }, NormKind::Circle),
            (GraphFamily::Pencil { spacing: 1.0 }, NormKind::PencilTilde),
            (GraphFamily::GraphPaper { spacing: 1.0 }, NormKind::HBeta { beta: 0.8 }),
        ];
        for (fam, kind) in cases {
            let g = build_graph(fam, w).unwrap();
            let f = sample_on_graph(&c, g, Resolution::PerUnit(8.0)).unwrap();
            let r = seminorm(&f, kind).unwrap();
            assert_eq!(r.value, 0.0, "{kind:?}");
        }
    }

    #[test]
    fn incompatible_kinds_rejected() {
        let g = build_graph(GraphFamily::GraphPaper { spacing: 1.0 }, Window::centered(1.0).unwrap()).unwrap();
        let f = sample_on_graph(&FunctionFamily::gaussian(), g, Resolution::PerEdge(4)).unwrap();
        for kind in [NormKind::Circle, NormKind::HalfLine, NormKind::Square, NormKind::PencilTilde] {
            assert!(matches!(seminorm(&f, kind), Err(Error::IncompatibleKind { .. })), "{kind:?}");
        }
        assert!(seminorm(&f, NormKind::HBeta { beta: 1.2 }).is_err());
    }

    #[test]
    fn value_is_sum_of_breakdown() {
        let g = build_graph(GraphFamily::GraphPaper { spacing: 0.5 }, Window::centered(1.0).unwrap()).unwrap();
        let f = sample_on_graph(&FunctionFamily::gaussian(), g, Resolution::PerEdge(8)).unwrap();
        let r = seminorm(&f, NormKind::GraphPaper).unwrap();
        let parts: Vec<f64> = r.breakdown.iter().map(|t| t.value).collect();
        assert_eq!(r.value, pairwise_sum(&parts));
        assert!(r.value > 0.0);
        assert!(r.refinement_estimate.unwrap() < 0.05);
        let dropped = seminorm_with(
            &f,
            NormKind::GraphPaper,
            &NormOptions {
                straight_through: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(dropped.value < r.value);
        assert_eq!(dropped.term(TermKind::Junction), r.term(TermKind::Junction));
    }

    #[test]
    fn graph_paper_weights_four_pairs_per_vertex() {
        let g = build_graph(GraphFamily::GraphPaper { spacing: 1.0 }, Window::centered(1.0).unwrap()).unwrap();
        let center = g.vertices.iter().position(|v| *v == [0.0, 0.0]).unwrap();
        let weighted = g
            .junctions
            .iter()
            .enumerate()
            .filter(|(_, j)| j.vertex == center)
            .filter(|(k, _)| junction_weight(NormKind::GraphPaper, &g, *k, &NormOptions::default()) > 0.0)
            .count();
        assert_eq!(weighted, 4);
    }

    #[test]
    fn x_on_line_graph_paper_has_only_edge_and_corner_terms() {
        // F = x: horizontal edges carry slope 1, vertical edges are constant
        let w = Window::centered(1.0).unwrap();
        let g = build_graph(GraphFamily::GraphPaper { spacing: 1.0 }, w).unwrap();
        let f = sample_on_graph(&FunctionFamily::linear(1.0, 0.0), g, Resolution::PerEdge(8)).unwrap();
        let r = seminorm(&f, NormKind::GraphPaper).unwrap();
        // six horizontal unit edges with f = x: 1 each
        assert!((r.term(TermKind::EdgeDouble) - 6.0).abs() < 1e-12);
        // east-west pairs: f(j+x) - f(j-x) = 2x, ∫ 4x^2/x = 2, at 3 interior columns x 3 rows
        assert!((r.term(TermKind::StraightThrough) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn pencil_second_sum_for_y() {
        let w = Window::centered(2.0).unwrap();
        let delta = 0.5;
        let g = build_graph(GraphFamily::Pencil { spacing: delta }, w).unwrap();
        let lines = g.edges.len();
        let f = sample_on_graph(&FunctionFamily::linear(0.0, 1.0), g, Resolution::PerUnit(4.0)).unwrap();
        let r = seminorm(&f, NormKind::PencilTilde).unwrap();
        let want = delta * 4.0 * (lines - 1) as f64;
        assert!((r.term(TermKind::LineDifference) - want).abs() < 1e-12);
        assert_eq!(r.term(TermKind::EdgeDouble), 0.0);
    }

    #[test]
    fn square_norm_of_x() {
        let g = build_graph(GraphFamily::Square { side: 1.0 }, Window::centered(1.0).unwrap()).unwrap();
        let f = sample_on_graph(&FunctionFamily::linear(1.0, 0.0), g, Resolution::PerEdge(16)).unwrap();
        let r = seminorm(&f, NormKind::Square).unwrap();
        // bottom/top: 1 each. corners: (0,0): x vs 0 -> 1/2; (1,0): 1-x vs 1 -> 1/2;
        // (1,1): 1 - x vs 1 -> 1/2; (0,1): x vs 0 -> 1/2
        assert!((r.value - 4.0).abs() < 1e-12, "{}", r.value);
        let (a, b) = square_opposite_gaps(&f).unwrap();
        assert!(a.abs() < 1e-15 && (b - 1.0).abs() < 1e-14);
    }

    #[test]
    fn half_line_tails_capture_the_exterior() {
        // f with compact support in the window: tails are exactly the
        // interaction with the zero exterior
        let mut v = Vec::new();
        for r in [4.0, 8.0] {
            let g = build_graph(GraphFamily::IntervalLine, Window::centered(r).unwrap()).unwrap();
            let f = sample_on_graph(&FunctionFamily::SmoothStep, g, Resolution::PerUnit(16.0)).unwrap();
            let bump = f.map(|x| x * (1.0 - x));
            v.push(seminorm(&bump, NormKind::HalfLine).unwrap().value);
        }
        assert!((v[0] - v[1]).abs() < 1e-9 * v[1], "{v:?}");
    }
}
