//! Trace norms carried over from the half-plane by conformal maps: the strip
//! `0 < y < π` (via `log`), the first quadrant (via `sqrt`) and circles, plus
//! the step function whose strip traces have no extension to the plane.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::functions::{fmt_f64, sample_on_graph, EdgeFunction, FunctionFamily, Resolution};
use crate::graphs::{build_graph, Embedding, GraphFamily, MetricGraph, Window};
use crate::reduce::pairwise_sum;
use crate::seminorms::kernel::{Quadrant, Sinh};
use crate::seminorms::pairs::{double_integral, inverse_weighted_square};
use crate::seminorms::{seminorm_with, Exterior, NormKind, NormOptions};

/// Height of the strip.
pub const STRIP_HEIGHT: f64 = std::f64::consts::PI;

fn no_refinement(exterior: Exterior) -> NormOptions {
    NormOptions {
        exterior,
        refinement: false,
        ..Default::default()
    }
}

/// `(x0, h, samples)` of a function on a single straight edge, `x0` the
/// parameter of the start along the edge direction.
fn line_data(f: &EdgeFunction) -> Result<(f64, f64, &[f64])> {
    match (f.graph.edges.len(), f.graph.edges.first().map(|e| e.embedding)) {
        (1, Some(Embedding::Segment { start, dir })) => {
            Ok((start[0] * dir[0] + start[1] * dir[1], f.spacing(0), &f.samples[0]))
        }
        _ => Err(Error::IncompatibleKind {
            kind: "line".into(),
            reason: "needs a graph with a single straight edge".into(),
        }),
    }
}

/// The traces `T_0 F(x) = F(x, 0)` and `T_1 F(x) = F(x, π)`.
#[derive(Debug, Clone)]
pub struct StripTrace {
    pub lower: EdgeFunction,
    pub upper: EdgeFunction,
}

impl StripTrace {
    pub fn new(lower: EdgeFunction, upper: EdgeFunction) -> Result<Self> {
        let (a, ha, sa) = line_data(&lower)?;
        let (b, hb, sb) = line_data(&upper)?;
        let tol = 1e-12 * ha.max(1.0) * sa.len() as f64;
        if sa.len() != sb.len() || (ha - hb).abs() > 1e-12 * ha || (a - b).abs() > tol {
            return Err(Error::Misaligned("strip traces need the same window and resolution".into()));
        }
        Ok(StripTrace { lower, upper })
    }

    /// Traces of a plane family on `[-R, R]`.
    pub fn from_family(fam: &FunctionFamily, half_width: f64, res: Resolution) -> Result<Self> {
        let line = |y: f64| -> Result<EdgeFunction> {
            let g = build_graph(GraphFamily::IntervalLine, Window::new([0.0, y], half_width)?)?;
            sample_on_graph(fam, g, res)
        };
        StripTrace::new(line(0.0)?, line(STRIP_HEIGHT)?)
    }
}

/// `∫ |f_0 - f_1|^2` of the linear interpolants.
pub fn l2_difference(t: &StripTrace) -> f64 {
    let (h, a, b) = (t.lower.spacing(0), &t.lower.samples[0], &t.upper.samples[0]);
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let cells: Vec<f64> = d.windows(2).map(|w| h * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0).collect();
    pairwise_sum(&cells)
}

#[derive(Debug, Clone, Serialize)]
pub struct StripNorm {
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub lower: f64,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub upper: f64,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub l2_difference: f64,
}

impl StripNorm {
    pub fn total(&self) -> f64 {
        self.lower + self.upper + self.l2_difference
    }
}

/// Tilde norms of both traces and the squared `L^2` distance between them.
pub fn strip_trace_norm(t: &StripTrace) -> Result<StripNorm> {
    let opts = no_refinement(Exterior::ConstantTails);
    Ok(StripNorm {
        lower: seminorm_with(&t.lower, NormKind::TildeHalfLine, &opts)?.value,
        upper: seminorm_with(&t.upper, NormKind::TildeHalfLine, &opts)?.value,
        l2_difference: l2_difference(t),
    })
}

/// The same three terms with the tilde norms replaced by the kernel the
/// half-plane norm turns into under `log`.
pub fn strip_sinh_norm(t: &StripTrace) -> Result<StripNorm> {
    Ok(StripNorm {
        lower: sinh_kernel_norm(&t.lower)?,
        upper: sinh_kernel_norm(&t.upper)?,
        l2_difference: l2_difference(t),
    })
}

/// `¼ ∫∫ |f(x) - f(y)|^2 / sinh^2((x - y)/2)` over the window.
///
/// The kernel decays like `e^{-|x-y|}`, so the part outside the window is left
/// out; for decaying data it is below the quadrature error.
pub fn sinh_kernel_norm(f: &EdgeFunction) -> Result<f64> {
    let (x0, h, s) = line_data(f)?;
    double_integral(s, h, x0, &Sinh, false)
}

/// The three integrals of the quadrant trace norm.
#[derive(Debug, Clone, Serialize)]
pub struct QuadrantNorm {
    /// `∫∫ |f_0(x) - f_0(y)|^2 / |x - y|^2 · xy / (x + y)^2`
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub lower: f64,
    /// The same for `f_1`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub upper: f64,
    /// `∫ |f_0(x) - f_1(x)|^2 dx / x`, infinite when `f_0(0) != f_1(0)`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub junction: f64,
}

impl QuadrantNorm {
    /// `4 lower + 4 upper + 2 junction`, the half-line norm pulled back by
    /// `z ↦ z^2`.
    pub fn total(&self) -> f64 {
        4.0 * self.lower + 4.0 * self.upper + 2.0 * self.junction
    }
}

/// A plane family restricted to `[0, R]` along the positive `x` axis
/// (`vertical = false`) or `y` axis.
pub fn half_axis(fam: &FunctionFamily, length: f64, vertical: bool, res: Resolution) -> Result<EdgeFunction> {
    if !(length > 0.0) {
        return Err(invalid("length", format!("must be positive, got {length}")));
    }
    let end = if vertical { [0.0, length] } else { [length, 0.0] };
    let g = Arc::new(MetricGraph::from_segments(vec![[0.0, 0.0], end], &[(0, 1)])?);
    sample_on_graph(fam, g, res)
}

/// Traces `f_0` and `f_1` on `[0, R]`, both parameterized from the corner.
pub fn quadrant_trace_norm(f0: &EdgeFunction, f1: &EdgeFunction) -> Result<QuadrantNorm> {
    let (a, h0, s0) = line_data(f0)?;
    let (b, h1, s1) = line_data(f1)?;
    if a.abs() > 1e-12 || b.abs() > 1e-12 {
        return Err(Error::Misaligned("quadrant traces must start at the corner".into()));
    }
    if s0.len() != s1.len() || (h0 - h1).abs() > 1e-12 * h0 {
        return Err(Error::Misaligned("quadrant traces need matching grids".into()));
    }
    let xs: Vec<f64> = (0..s0.len()).map(|k| k as f64 * h0).collect();
    let g: Vec<f64> = s0.iter().zip(s1).map(|(x, y)| x - y).collect();
    let scale = s0.iter().chain(s1).fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(QuadrantNorm {
        lower: double_integral(s0, h0, 0.0, &Quadrant, false)?,
        upper: double_integral(s1, h1, 0.0, &Quadrant, false)?,
        junction: inverse_weighted_square(&xs, &g, scale),
    })
}

/// Half-order norm on the circle of the given radius of `θ ↦ profile(θ)`.
pub fn circle_norm(profile: impl Fn(f64) -> f64, radius: f64, cells: usize) -> Result<f64> {
    let g = build_graph(GraphFamily::Circle { radius }, Window::centered(radius)?)?;
    let samples = (0..=cells)
        .map(|k| profile(2.0 * std::f64::consts::PI * (k % cells) as f64 / cells as f64))
        .collect();
    let f = EdgeFunction::new(g, vec![samples], true)?;
    Ok(seminorm_with(&f, NormKind::Circle, &no_refinement(Exterior::Truncated))?.value)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub half_width: f64,
    /// Full kernel, truncated to the window.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub full: f64,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub tilde: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Growth {
    pub rows: Vec<GrowthRow>,
    /// Least-squares slope of `full` against `ln R`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub slope: f64,
    /// Relative change of `tilde` between the two largest windows.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub tilde_change: f64,
}

impl Growth {
    /// Rows `half_width,full,tilde`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["half_width", "full", "tilde"])?;
        for r in &self.rows {
            w.write_record([fmt_f64(r.half_width), fmt_f64(r.full), fmt_f64(r.tilde)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Truncated full and tilde norms of `fam` on `[-R, R]` for growing `R`.
pub fn counterexample_growth_of(fam: &FunctionFamily, half_widths: &[f64], per_unit: f64) -> Result<Growth> {
    if half_widths.len() < 2 || half_widths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("R", "need at least two strictly increasing window half-widths"));
    }
    let opts = no_refinement(Exterior::Truncated);
    let rows: Vec<GrowthRow> = half_widths
        .iter()
        .map(|&r| {
            let g = build_graph(GraphFamily::IntervalLine, Window::centered(r)?)?;
            let f = sample_on_graph(fam, g, Resolution::PerUnit(per_unit))?;
            Ok(GrowthRow {
                half_width: r,
                full: seminorm_with(&f, NormKind::HalfLine, &opts)?.value,
                tilde: seminorm_with(&f, NormKind::TildeHalfLine, &opts)?.value,
            })
        })
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.half_width.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, rows.iter().map(|r| r.full).sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&rows).map(|(x, r)| (x - mx) * (r.full - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let (a, b) = (rows[rows.len() - 2].tilde, rows[rows.len() - 1].tilde);
    Ok(Growth {
        slope: sxy / sxx,
        tilde_change: if a == b { 0.0 } else { (b - a).abs() / a.abs().max(b.abs()) },
        rows,
    })
}

/// [`counterexample_growth_of`] for the smooth step.
pub fn counterexample_growth(half_widths: &[f64], per_unit: f64) -> Result<Growth> {
    counterexample_growth_of(&FunctionFamily::SmoothStep, half_widths, per_unit)
}
