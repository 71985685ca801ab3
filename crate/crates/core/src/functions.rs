//! Scalar functions on metric graphs and on plane grids.
//!
//! An [`EdgeFunction`] stores uniform samples along every edge and is treated
//! as the piecewise-linear interpolant of those samples everywhere downstream.
//! A [`PlaneField`] stores samples on a uniform rectangular grid.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graphs::{MetricGraph, Point, Window};

/// Built-in analytic families. Every family is a function of the plane point,
/// so sampling a graph evaluates it through the edge embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FunctionFamily {
    Constant {
        value: f64,
    },
    /// `exp(-scale |p - center|^2)`.
    Gaussian {
        scale: f64,
        #[serde(default)]
        center: Point,
    },
    /// `1 / (1 + |p|^2 / width^2)`.
    Cauchy {
        width: f64,
    },
    /// `(1 + |p|^2)^(-alpha)`.
    RadialPower {
        alpha: f64,
    },
    /// `g(x)`: 0 for `x <= 0`, 1 for `x >= 1`, `3x^2 - 2x^3` between.
    SmoothStep,
    Harmonic2D {
        form: HarmonicForm,
    },
    /// Raw per-edge samples; only meaningful for [`sample_on_graph`].
    Custom {
        samples: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum HarmonicForm {
    /// `a x + b y`
    Linear { a: f64, b: f64 },
    /// `x^2 - y^2`
    Saddle,
}

impl FunctionFamily {
    pub fn gaussian() -> Self {
        FunctionFamily::Gaussian {
            scale: std::f64::consts::PI,
            center: [0.0, 0.0],
        }
    }

    pub fn linear(a: f64, b: f64) -> Self {
        FunctionFamily::Harmonic2D {
            form: HarmonicForm::Linear { a, b },
        }
    }

    /// The decaying families: Gaussian, Cauchy and radial powers.
    pub fn decaying() -> Vec<FunctionFamily> {
        vec![
            FunctionFamily::gaussian(),
            FunctionFamily::Gaussian {
                scale: 1.0,
                center: [0.5, -0.25],
            },
            FunctionFamily::Cauchy { width: 1.0 },
            FunctionFamily::RadialPower { alpha: 1.5 },
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FunctionFamily::Gaussian { scale, .. } if !(scale > 0.0) => {
                Err(invalid("scale", format!("must be positive, got {scale}")))
            }
            FunctionFamily::Cauchy { width } if !(width > 0.0) => {
                Err(invalid("width", format!("must be positive, got {width}")))
            }
            FunctionFamily::RadialPower { alpha } if !(alpha > 0.0) => {
                Err(invalid("alpha", format!("must be positive, got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    /// Value at a plane point. `None` for custom samples.
    pub fn eval(&self, p: Point) -> Option<f64> {
        let [x, y] = p;
        Some(match self {
            FunctionFamily::Constant { value } => *value,
            FunctionFamily::Gaussian { scale, center } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                (-scale * (dx * dx + dy * dy)).exp()
            }
            FunctionFamily::Cauchy { width } => 1.0 / (1.0 + (x * x + y * y) / (width * width)),
            FunctionFamily::RadialPower { alpha } => (1.0 + x * x + y * y).powf(-alpha),
            FunctionFamily::SmoothStep => smooth_step(x),
            FunctionFamily::Harmonic2D { form } => match form {
                HarmonicForm::Linear { a, b } => a * x + b * y,
                HarmonicForm::Saddle => x * x - y * y,
            },
            FunctionFamily::Custom { .. } => return None,
        })
    }
}

pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * (3.0 - 2.0 * x)
    }
}

/// How many cells each edge is split into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    /// `N` cells on every edge.
    PerEdge(usize),
    /// `N` cells per unit length (rounded to the nearest integer per edge).
    PerUnit(f64),
}

impl Resolution {
    pub fn cells(&self, length: f64) -> usize {
        match *self {
            Resolution::PerEdge(n) => n,
            Resolution::PerUnit(n) => (length * n).round().max(1.0) as usize,
        }
    }

    /// A resolution with twice the cells.
    pub fn doubled(&self) -> Resolution {
        match *self {
            Resolution::PerEdge(n) => Resolution::PerEdge(2 * n),
            Resolution::PerUnit(n) => Resolution::PerUnit(2.0 * n),
        }
    }

    pub fn halved(&self) -> Resolution {
        match *self {
            Resolution::PerEdge(n) => Resolution::PerEdge((n / 2).max(1)),
            Resolution::PerUnit(n) => Resolution::PerUnit(n / 2.0),
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            Resolution::PerEdge(n) if n < 2 => Err(invalid("resolution", format!("need at least 2 cells per edge, got {n}"))),
            Resolution::PerUnit(n) if !(n > 0.0) || !n.is_finite() => {
                Err(invalid("resolution", format!("cells per unit must be positive, got {n}")))
            }
            _ => Ok(()),
        }
    }
}

/// A piecewise-linear function on a metric graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFunction {
    pub graph: Arc<MetricGraph>,
    /// `samples[e][i] = f(e(i h_e))`, `h_e = L_e / (samples[e].len() - 1)`.
    pub samples: Vec<Vec<f64>>,
    /// Samples at shared vertices agree across incident edges.
    pub continuous: bool,
}

impl EdgeFunction {
    pub fn new(graph: impl Into<Arc<MetricGraph>>, samples: Vec<Vec<f64>>, continuous: bool) -> Result<Self> {
        let graph = graph.into();
        if samples.len() != graph.edges.len() {
            return Err(invalid(
                "samples",
                format!("{} edges but {} sample rows", graph.edges.len(), samples.len()),
            ));
        }
        for (e, s) in samples.iter().enumerate() {
            if s.len() < 2 {
                return Err(Error::SampleCount { edge: e, expected: 2, got: s.len() });
            }
            if let Some(v) = s.iter().find(|v| !v.is_finite()) {
                return Err(invalid("samples", format!("edge {e} has non-finite value {v}")));
            }
        }
        Ok(EdgeFunction { graph, samples, continuous })
    }

    pub fn cells(&self, e: usize) -> usize {
        self.samples[e].len() - 1
    }

    pub fn spacing(&self, e: usize) -> f64 {
        self.graph.edges[e].length / self.cells(e) as f64
    }

    /// Value of the interpolant at parameter `x` on edge `e` (clamped).
    pub fn value(&self, e: usize, x: f64) -> f64 {
        let s = &self.samples[e];
        let h = self.spacing(e);
        let t = (x / h).clamp(0.0, (s.len() - 1) as f64);
        let i = (t.floor() as usize).min(s.len() - 2);
        let w = t - i as f64;
        s[i] * (1.0 - w) + s[i + 1] * w
    }

    /// Largest mismatch between samples at a vertex shared by junction pairs.
    pub fn continuity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in &self.graph.junctions {
            let a = self.end_value(j.first.edge, j.first.at_start);
            let b = self.end_value(j.second.edge, j.second.at_start);
            worst = worst.max((a - b).abs());
        }
        worst
    }

    pub fn end_value(&self, e: usize, at_start: bool) -> f64 {
        let s = &self.samples[e];
        if at_start {
            s[0]
        } else {
            s[s.len() - 1]
        }
    }

    /// Samples of edge `e` re-ordered so index 0 is the given end.
    pub fn from_end(&self, e: usize, at_start: bool) -> Vec<f64> {
        let mut s = self.samples[e].clone();
        if !at_start {
            s.reverse();
        }
        s
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> EdgeFunction {
        EdgeFunction {
            graph: self.graph.clone(),
            samples: self.samples.iter().map(|s| s.iter().map(|&v| f(v)).collect()).collect(),
            continuous: self.continuous,
        }
    }

    /// Writes rows `edge,parameter,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["edge", "parameter", "value"])?;
        for (e, s) in self.samples.iter().enumerate() {
            let h = self.spacing(e);
            for (i, v) in s.iter().enumerate() {
                w.write_record(&[e.to_string(), fmt_f64(i as f64 * h), fmt_f64(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows written by [`EdgeFunction::write_csv`] onto `graph`. Each
    /// edge's rows must form a uniform grid from 0 to the edge length.
    pub fn read_csv<R: std::io::Read>(graph: impl Into<Arc<MetricGraph>>, input: R, continuous: bool) -> Result<Self> {
        let graph = graph.into();
        let mut rows: Vec<Vec<(f64, f64)>> = vec![Vec::new(); graph.edges.len()];
        let mut r = csv::Reader::from_reader(input);
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| invalid("csv", format!("bad field {i} in {rec:?}")))
            };
            let e = rec
                .get(0)
                .and_then(|s| s.trim().parse::<usize>().ok())
                .filter(|&e| e < graph.edges.len())
                .ok_or_else(|| invalid("csv", format!("bad edge index in {rec:?}")))?;
            rows[e].push((parse(1)?, parse(2)?));
        }
        let mut samples = Vec::with_capacity(rows.len());
        for (e, mut r) in rows.into_iter().enumerate() {
            r.sort_by(|a, b| a.0.total_cmp(&b.0));
            let n = r.len();
            if n < 2 {
                return Err(Error::SampleCount { edge: e, expected: 2, got: n });
            }
            let h = graph.edges[e].length / (n - 1) as f64;
            for (i, (x, _)) in r.iter().enumerate() {
                if (x - i as f64 * h).abs() > 1e-9 * graph.edges[e].length.max(1.0) {
                    return Err(invalid("csv", format!("edge {e}: parameter {x} is off the uniform grid")));
                }
            }
            samples.push(r.into_iter().map(|(_, v)| v).collect());
        }
        EdgeFunction::new(graph, samples, continuous)
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Samples `fam` at `N_e + 1` equally spaced points of every edge. Edge end
/// points are evaluated at the exact vertex coordinates so that shared vertices
/// agree bit for bit.
pub fn sample_on_graph(fam: &FunctionFamily, g: impl Into<Arc<MetricGraph>>, res: Resolution) -> Result<EdgeFunction> {
    let g = g.into();
    fam.validate()?;
    res.check()?;
    if let FunctionFamily::Custom { samples } = fam {
        if samples.len() != g.edges.len() {
            return Err(invalid(
                "samples",
                format!("{} edges but {} sample rows", g.edges.len(), samples.len()),
            ));
        }
        for (e, s) in samples.iter().enumerate() {
            let want = res.cells(g.edges[e].length) + 1;
            if s.len() != want {
                return Err(Error::SampleCount { edge: e, expected: want, got: s.len() });
            }
        }
        return EdgeFunction::new(g, samples.clone(), false);
    }
    let mut out = Vec::with_capacity(g.edges.len());
    for e in &g.edges {
        let n = res.cells(e.length);
        let h = e.length / n as f64;
        let mut s = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let p = if i == 0 {
                g.vertices[e.a]
            } else if i == n {
                g.vertices[e.b]
            } else {
                e.point(i as f64 * h)
            };
            s.push(fam.eval(p).expect("analytic family"));
        }
        out.push(s);
    }
    EdgeFunction::new(g, out, true)
}

/// A function sampled on the uniform grid `origin + (i h, j h)`,
/// `0 <= i < nx`, `0 <= j < ny`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneField {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl PlaneField {
    pub fn new(origin: Point, h: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("h", format!("grid spacing must be positive, got {h}")));
        }
        if nx < 2 || ny < 2 {
            return Err(invalid("grid", format!("need at least 2x2 points, got {nx}x{ny}")));
        }
        if values.len() != nx * ny {
            return Err(invalid("values", format!("expected {} values, got {}", nx * ny, values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite value {v}")));
        }
        Ok(PlaneField { origin, h, nx, ny, values })
    }

    /// Grid points per side of a window, or an error if `h` does not divide it.
    pub fn window_points(window: &Window, h: f64) -> Result<usize> {
        if !(h > 0.0) {
            return Err(invalid("h", format!("grid spacing must be positive, got {h}")));
        }
        let cells = 2.0 * window.half_width / h;
        let n = cells.round();
        if (cells - n).abs() > 1e-9 * cells.max(1.0) || n < 1.0 {
            return Err(Error::Misaligned(format!(
                "spacing {h} does not divide window width {}",
                2.0 * window.half_width
            )));
        }
        Ok(n as usize + 1)
    }

    /// Samples `f` on the grid covering `window` with spacing `h`.
    pub fn from_fn(window: &Window, h: f64, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let n = Self::window_points(window, h)?;
        let origin = window.min();
        let values = grid_values(origin, h, n, n, &f);
        PlaneField::new(origin, h, n, n, values)
    }

    pub fn from_family(fam: &FunctionFamily, window: &Window, h: f64) -> Result<Self> {
        fam.validate()?;
        if matches!(fam, FunctionFamily::Custom { .. }) {
            return Err(invalid("family", "custom samples cannot be evaluated on a plane grid"));
        }
        Self::from_fn(window, h, |x, y| fam.eval([x, y]).expect("analytic family"))
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin[0] + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin[1] + j as f64 * self.h
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn max(&self) -> Point {
        [self.x(self.nx - 1), self.y(self.ny - 1)]
    }

    /// The window this field covers when it is square.
    pub fn window(&self) -> Option<Window> {
        if self.nx != self.ny {
            return None;
        }
        let r = 0.5 * (self.nx - 1) as f64 * self.h;
        Some(Window {
            center: [self.origin[0] + r, self.origin[1] + r],
            half_width: r,
        })
    }

    /// Bilinear interpolation at `p`, exact at grid points. `None` outside.
    pub fn interpolate(&self, p: Point) -> Option<f64> {
        let (i, s) = locate(p[0] - self.origin[0], self.h, self.nx)?;
        let (j, t) = locate(p[1] - self.origin[1], self.h, self.ny)?;
        let lerp = |a: f64, b: f64, w: f64| {
            if w == 0.0 {
                a
            } else if w == 1.0 {
                b
            } else {
                a * (1.0 - w) + b * w
            }
        };
        let row = |j: usize| lerp(self.at(i, j), self.at(i + 1, j), s);
        Some(if t == 0.0 {
            row(j)
        } else if t == 1.0 {
            row(j + 1)
        } else {
            lerp(row(j), row(j + 1), t)
        })
    }

    /// Writes `x,y,value` rows after a `#` header line carrying the grid.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# origin_x={} origin_y={} h={} nx={} ny={}",
            self.origin[0], self.origin[1], self.h, self.nx, self.ny
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "value"])?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                w.write_record(&[fmt_f64(self.x(i)), fmt_f64(self.y(j)), fmt_f64(self.at(i, j))])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let field = |key: &str| -> Result<&str> {
            header
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| invalid("csv", format!("missing `{key}` in grid header")))
        };
        let num = |key: &str| -> Result<f64> {
            field(key)?.parse().map_err(|_| invalid("csv", format!("bad `{key}` in grid header")))
        };
        let origin = [num("origin_x")?, num("origin_y")?];
        let h = num("h")?;
        let nx = num("nx")? as usize;
        let ny = num("ny")? as usize;
        let mut values = Vec::with_capacity(nx * ny);
        for rec in csv::Reader::from_reader(input).records() {
            let rec = rec?;
            let v: f64 = rec
                .get(2)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| invalid("csv", format!("bad value in {rec:?}")))?;
            values.push(v);
        }
        PlaneField::new(origin, h, nx, ny, values)
    }
}

pub(crate) fn grid_values(origin: Point, h: f64, nx: usize, ny: usize, f: &(impl Fn(f64, f64) -> f64 + Sync)) -> Vec<f64> {
    use rayon::prelude::*;
    (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            f(origin[0] + i as f64 * h, origin[1] + j as f64 * h)
        })
        .collect()
}

/// Cell index and fractional offset of `d` on a grid of `n` points, snapping
/// offsets within `1e-9` of a grid point to it.
fn locate(d: f64, h: f64, n: usize) -> Option<(usize, f64)> {
    let t = d / h;
    let last = (n - 1) as f64;
    if t < -1e-9 || t > last + 1e-9 {
        return None;
    }
    let r = t.round();
    if (t - r).abs() <= 1e-9 {
        let k = r as usize;
        return Some(if k == n - 1 { (k - 1, 1.0) } else { (k, 0.0) });
    }
    let i = (t.floor() as usize).min(n - 2);
    Some((i, t - i as f64))
}

/// Restricts `F` to the edges of `g`, sampling each edge at the given
/// resolution. Points on the plane grid are copied exactly; other points are
/// bilinearly interpolated.
pub fn trace_plane_to_graph(field: &PlaneField, g: impl Into<Arc<MetricGraph>>, res: Resolution) -> Result<EdgeFunction> {
    let g = g.into();
    res.check()?;
    let mut out = Vec::with_capacity(g.edges.len());
    for (k, e) in g.edges.iter().enumerate() {
        let n = res.cells(e.length);
        let h = e.length / n as f64;
        let mut s = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let p = if i == 0 {
                g.vertices[e.a]
            } else if i == n {
                g.vertices[e.b]
            } else {
                e.point(i as f64 * h)
            };
            let v = field.interpolate(p).ok_or_else(|| Error::EdgeOutsideWindow {
                edge: k,
                detail: format!("point ({}, {}) is outside the plane grid", p[0], p[1]),
            })?;
            s.push(v);
        }
        out.push(s);
    }
    EdgeFunction::new(g, out, true)
}
