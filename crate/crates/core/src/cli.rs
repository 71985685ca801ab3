//! The `tracelab` command line: one subcommand per experiment, a JSON
//! summary on stdout and in the output directory, and long-format CSV tables
//! next to it.
//!
//! Flags override values from `--config FILE`. The merged configuration is
//! echoed into every report. `--threads` only sizes the worker pool and is
//! not echoed, since it never changes a result.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conformal_lab::{self, StripTrace};
use crate::error::{invalid, Error, Result};
use crate::extension::{plane_energy, poisson_extend, rows_from};
use crate::fractal_lab::{self, build_fractal, FractalKind, VertexFunction};
use crate::functions::{fmt_f64, sample_on_graph, FunctionFamily, PlaneField, Resolution};
use crate::gp_lab;
use crate::graphs::{build_graph, GraphFamily, Window};
use crate::report::{json_f64, SCHEMA_VERSION};
use crate::seminorms::{seminorm_with, Exterior, NormKind, NormOptions};
use crate::spectral;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "TRACELAB_OUT";

#[derive(Debug, Parser)]
#[command(name = "tracelab", version, about = "Trace norms on metric graphs, fractals and plane domains")]
struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file with default values for any of the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Seminorm of a sampled family on a graph.
    Norm(Params),
    /// Fourier-side half-order norms of a line function.
    Spectrum(Params),
    /// Poisson extension of line data and its plane energy.
    Extend(Params),
    /// Graph-paper trace norms across levels.
    GpProfile(Params),
    /// Rebuild a plane field from nested graph-paper traces.
    GpReconstruct(Params),
    /// Energy and trace norms inside a region.
    GpLocal(Params),
    /// Trace norms on a pencil of horizontal lines.
    Pencil(Params),
    /// Renormalized gasket energies across levels.
    SgEnergy(Params),
    /// Gasket trace norms of exponent 1 + 2β.
    SgTrace(Params),
    /// Carpet resistances and their ratios.
    ScResistance(Params),
    /// Strip trace norms.
    Strip(Params),
    /// Quadrant trace norms.
    Quadrant(Params),
    /// Truncated norms of the smooth step for growing windows.
    Counterexample(Params),
    /// The constant 4π² linking the kernel and Fourier norms.
    ConstantC(Params),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Name {
    Norm,
    Spectrum,
    Extend,
    GpProfile,
    GpReconstruct,
    GpLocal,
    Pencil,
    SgEnergy,
    SgTrace,
    ScResistance,
    Strip,
    Quadrant,
    Counterexample,
    ConstantC,
}

impl Command {
    fn split(self) -> (Name, Params) {
        use Command as C;
        match self {
            C::Norm(p) => (Name::Norm, p),
            C::Spectrum(p) => (Name::Spectrum, p),
            C::Extend(p) => (Name::Extend, p),
            C::GpProfile(p) => (Name::GpProfile, p),
            C::GpReconstruct(p) => (Name::GpReconstruct, p),
            C::GpLocal(p) => (Name::GpLocal, p),
            C::Pencil(p) => (Name::Pencil, p),
            C::SgEnergy(p) => (Name::SgEnergy, p),
            C::SgTrace(p) => (Name::SgTrace, p),
            C::ScResistance(p) => (Name::ScResistance, p),
            C::Strip(p) => (Name::Strip, p),
            C::Quadrant(p) => (Name::Quadrant, p),
            C::Counterexample(p) => (Name::Counterexample, p),
            C::ConstantC(p) => (Name::ConstantC, p),
        }
    }
}

/// Every experiment parameter. Unset values fall back to the config file,
/// then to per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// constant, gaussian, cauchy, radial-power, smooth-step, linear, saddle
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cx: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cy: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// interval-line, half-line-pair, integer-graph, square, graph-paper,
    /// circle, pencil
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Norm kind, e.g. half-line or tilde-half-line.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Integrate over the window only instead of continuing open rays.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
    /// Window half-width.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Samples per unit length.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    /// Plane grid spacing.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Levels as `0..-4` or `0,-1,-3`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<String>,
    /// Base of the graph-paper levels, or a fractal level.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Gasket boundary values as `a,b,c`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    /// Region half-width for `gp-local`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_x: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_y: Option<f64>,
    /// Window half-widths as a list `4,8,16`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rs: Option<String>,
    /// Amplitude of random noise added to the coarsest traces.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturb: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Params {
    /// `self` with unset values taken from `base`.
    pub fn over(&self, base: &Params) -> Result<Params> {
        let mut merged = serde_json::to_value(base)?;
        if let (Value::Object(m), Value::Object(o)) = (&mut merged, serde_json::to_value(self)?) {
            for (k, v) in o {
                if !v.is_null() {
                    m.insert(k, v);
                }
            }
        }
        Ok(serde_json::from_value(merged)?)
    }

    fn family(&self, default: &str) -> Result<FunctionFamily> {
        let name = self.family.as_deref().unwrap_or(default);
        let fam = match name {
            "constant" => FunctionFamily::Constant {
                value: self.value.unwrap_or(1.0),
            },
            "gaussian" => FunctionFamily::Gaussian {
                scale: self.scale.unwrap_or(std::f64::consts::PI),
                center: [self.cx.unwrap_or(0.0), self.cy.unwrap_or(0.0)],
            },
            "cauchy" => FunctionFamily::Cauchy {
                width: self.width.unwrap_or(1.0),
            },
            "radial-power" => FunctionFamily::RadialPower {
                alpha: self.alpha.unwrap_or(1.5),
            },
            "smooth-step" => FunctionFamily::SmoothStep,
            "linear" => FunctionFamily::linear(self.a.unwrap_or(1.0), self.b.unwrap_or(0.0)),
            "saddle" => FunctionFamily::Harmonic2D {
                form: crate::functions::HarmonicForm::Saddle,
            },
            other => return Err(invalid("family", format!("unknown family `{other}`"))),
        };
        fam.validate()?;
        Ok(fam)
    }

    fn graph(&self) -> Result<GraphFamily> {
        let spacing = self.spacing.unwrap_or(1.0);
        Ok(match self.graph.as_deref().unwrap_or("interval-line") {
            "interval-line" => GraphFamily::IntervalLine,
            "half-line-pair" => GraphFamily::HalfLinePair,
            "integer-graph" => GraphFamily::IntegerGraph { spacing },
            "square" => GraphFamily::Square {
                side: self.side.unwrap_or(1.0),
            },
            "graph-paper" => GraphFamily::GraphPaper { spacing },
            "circle" => GraphFamily::Circle {
                radius: self.radius.unwrap_or(1.0),
            },
            "pencil" => GraphFamily::Pencil { spacing },
            other => return Err(invalid("graph", format!("unknown graph family `{other}`"))),
        })
    }

    fn window(&self, default: f64) -> Result<Window> {
        Window::centered(self.r.unwrap_or(default))
    }

    fn per_unit(&self, default: f64) -> Result<f64> {
        let n = self.n.unwrap_or(default);
        if !(n > 0.0) {
            return Err(invalid("N", format!("must be positive, got {n}")));
        }
        Ok(n)
    }

    fn levels(&self, default: &str) -> Result<Vec<i32>> {
        parse_levels(self.levels.as_deref().unwrap_or(default))
    }

    fn base(&self) -> Result<u32> {
        let m = self.m.unwrap_or(2);
        if m < 2 {
            return Err(invalid("m", format!("the base must be at least 2, got {m}")));
        }
        Ok(m)
    }

    fn list(&self, default: &str) -> Result<Vec<f64>> {
        self.rs
            .as_deref()
            .unwrap_or(default)
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| invalid("rs", format!("bad number `{s}`"))))
            .collect()
    }
}

/// `a..b` (inclusive, either direction) or a comma-separated list.
pub fn parse_levels(s: &str) -> Result<Vec<i32>> {
    let num = |t: &str| t.trim().parse::<i32>().map_err(|_| invalid("levels", format!("bad level `{t}`")));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        Ok(if a >= b { (b..=a).rev().collect() } else { (a..=b).collect() })
    } else {
        s.split(',').map(num).collect()
    }
}

/// What a command produces: the JSON result and named CSV tables.
struct Output {
    result: Value,
    tables: Vec<(String, Vec<u8>)>,
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Default plane spacing: a quarter of the finest level, capped at `1/16`.
fn default_h(m: u32, levels: &[i32]) -> f64 {
    let finest = levels.iter().copied().min().unwrap_or(0);
    ((m as f64).powi(finest) / 4.0).min(1.0 / 16.0)
}

fn plane_field(p: &Params, levels: &[i32], m: u32) -> Result<PlaneField> {
    let fam = p.family("gaussian")?;
    let h = p.h.unwrap_or_else(|| default_h(m, levels));
    PlaneField::from_family(&fam, &p.window(4.0)?, h)
}

fn run_command(name: Name, p: &Params) -> Result<Output> {
    match name {
        Name::ConstantC => {
            let c = spectral::kernel_constant();
            let target = 4.0 * std::f64::consts::PI.powi(2);
            Ok(Output {
                result: json!({ "c": c, "target": "4*pi^2", "rel_err": (c - target).abs() / target }),
                tables: vec![],
            })
        }
        Name::Norm => {
            let fam = p.family("gaussian")?;
            let kind = NormKind::parse(p.kind.as_deref().unwrap_or("half-line"), p.beta)?;
            let window = p.window(8.0)?;
            let n = p.per_unit(16.0)?;
            let g = build_graph(p.graph()?, window)?;
            let f = sample_on_graph(&fam, g, Resolution::PerUnit(n))?;
            let opts = NormOptions {
                exterior: if p.truncated.unwrap_or(false) { Exterior::Truncated } else { Exterior::ConstantTails },
                ..Default::default()
            };
            let r = seminorm_with(&f, kind, &opts)?;
            let rows = r.breakdown.iter().map(|t| {
                vec![
                    serde_json::to_value(t.term).unwrap().as_str().unwrap_or_default().to_string(),
                    t.count.to_string(),
                    fmt_f64(t.value),
                    fmt_f64(n),
                    fmt_f64(window.half_width),
                ]
            });
            let table = csv_table(&["term", "count", "value", "per_unit", "half_width"], rows.collect::<Vec<_>>())?;
            Ok(Output {
                result: serde_json::to_value(&r)?,
                tables: vec![("terms".into(), table)],
            })
        }
        Name::Spectrum => {
            let fam = p.family("gaussian")?;
            let window = p.window(8.0)?;
            let n = p.per_unit(64.0)?;
            let g = build_graph(GraphFamily::IntervalLine, window)?;
            let f = sample_on_graph(&fam, g, Resolution::PerUnit(n))?;
            let s = spectral::line_spectrum(&f)?;
            let rows = s.xi.iter().zip(&s.amplitude).map(|(x, a)| {
                vec![fmt_f64(*x), fmt_f64(a.re), fmt_f64(a.im), fmt_f64(n), fmt_f64(window.half_width)]
            });
            let table = csv_table(&["xi", "re", "im", "per_unit", "half_width"], rows.collect::<Vec<_>>())?;
            Ok(Output {
                result: serde_json::to_value(s.summary())?,
                tables: vec![("spectrum".into(), table)],
            })
        }
        Name::Extend => {
            let fam = p.family("gaussian")?;
            let window = p.window(8.0)?;
            let h = p.h.unwrap_or(1.0 / 16.0);
            let n = p.per_unit(1.0 / h)?;
            let g = build_graph(GraphFamily::IntervalLine, window)?;
            let f = sample_on_graph(&fam, g, Resolution::PerUnit(n))?;
            let ext = poisson_extend(&f, h, &window)?;
            let full = plane_energy(&ext.field)?;
            let half = plane_energy(&rows_from(&ext.field, ext.line_row)?)?;
            let line = seminorm_with(&f, NormKind::HalfLine, &NormOptions { refinement: false, ..Default::default() })?;
            let table = csv_table(
                &["region", "energy", "fourier_normalized", "h", "half_width"],
                [("plane", &full), ("upper-half", &half)]
                    .iter()
                    .map(|(name, e)| vec![name.to_string(), fmt_f64(e.energy), fmt_f64(e.fourier_normalized), fmt_f64(h), fmt_f64(window.half_width)])
                    .collect::<Vec<_>>(),
            )?;
            Ok(Output {
                result: json!({
                    "plane": full,
                    "upper_half": half,
                    "trace_half_line": json_f64(line.value),
                    "tails": [json_f64(ext.tails.0), json_f64(ext.tails.1)],
                    "warnings": ext.warnings,
                }),
                tables: vec![("energy".into(), table)],
            })
        }
        Name::GpProfile | Name::Pencil => {
            let m = p.base()?;
            let levels = p.levels("0..-4")?;
            let f = plane_field(p, &levels, m)?;
            let prof = if name == Name::Pencil {
                gp_lab::pencil_profile(&f, m, &levels)?
            } else {
                gp_lab::trace_profile(&f, m, &levels)?
            };
            let mut table = Vec::new();
            prof.write_csv(&mut table)?;
            Ok(Output {
                result: json!({
                    "profile": prof,
                    "sup": json_f64(prof.sup()),
                    "inf": json_f64(prof.inf()),
                    "sup_over_energy": json_f64(prof.sup_over_energy()),
                    "energy_over_inf": json_f64(prof.energy / prof.inf()),
                }),
                tables: vec![("profile".into(), table)],
            })
        }
        Name::GpReconstruct => {
            let m = p.base()?;
            let levels = p.levels("0..-4")?;
            let f = plane_field(p, &levels, m)?;
            let original = plane_energy(&f)?;
            let mut traces = gp_lab::trace_levels(&f, m, &levels)?;
            if let Some(amp) = p.perturb.filter(|a| *a != 0.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(p.seed.unwrap_or(0));
                for v in traces[0].1.samples.iter_mut().flatten() {
                    *v += amp * rng.gen_range(-1.0..1.0);
                }
            }
            let r = gp_lab::reconstruct_from_traces(&traces, m, true)?;
            let rows = r.levels.iter().map(|l| {
                vec![
                    l.n.to_string(),
                    fmt_f64(l.delta),
                    fmt_f64(l.norm),
                    fmt_f64(r.energy.energy),
                    fmt_f64(original.energy),
                    fmt_f64(f.h),
                    fmt_f64(f.window().map(|w| w.half_width).unwrap_or(f64::NAN)),
                ]
            });
            let table = csv_table(
                &["n", "delta", "norm2", "energy", "original_energy", "h", "half_width"],
                rows.collect::<Vec<_>>(),
            )?;
            Ok(Output {
                result: json!({
                    "reconstruction": r,
                    "original_energy": json_f64(original.energy),
                    "energy_ratio": json_f64(r.energy.energy / original.energy),
                }),
                tables: vec![("reconstruction".into(), table)],
            })
        }
        Name::GpLocal => {
            let m = p.base()?;
            let levels = p.levels("0..-2")?;
            let f = plane_field(p, &levels, m)?;
            let region = Window::new([p.region_x.unwrap_or(0.0), p.region_y.unwrap_or(0.0)], p.region.unwrap_or(1.0))?;
            let c = gp_lab::localized_compare(&f, &region, m, &levels)?;
            let mut table = Vec::new();
            c.profile.write_csv(&mut table)?;
            Ok(Output {
                result: serde_json::to_value(&c)?,
                tables: vec![("local".into(), table)],
            })
        }
        Name::SgEnergy => {
            let level = p.m.unwrap_or(6) as usize;
            let f = gasket_data(p, level)?;
            let prof = fractal_lab::sg_renormalized_profile(&f)?;
            let rows = prof.rows.iter().map(|r| vec![r.m.to_string(), fmt_f64(r.energy), fmt_f64(r.renormalized)]);
            let table = csv_table(&["m", "energy", "renormalized"], rows.collect::<Vec<_>>())?;
            Ok(Output {
                result: serde_json::to_value(&prof)?,
                tables: vec![("energy".into(), table)],
            })
        }
        Name::SgTrace => {
            let level = p.m.unwrap_or(6) as usize;
            let f = gasket_data(p, level)?;
            let beta = p.beta.unwrap_or_else(fractal_lab::gasket_beta);
            let prof = fractal_lab::h_beta_trace_profile(&f, beta, p.depth.unwrap_or(level.min(4)))?;
            let rows = prof.rows.iter().map(|r| {
                vec![r.m.to_string(), fmt_f64(r.norm), fmt_f64(r.renormalized), fmt_f64(beta), level.to_string()]
            });
            let table = csv_table(&["m", "norm2", "renormalized", "beta", "data_level"], rows.collect::<Vec<_>>())?;
            Ok(Output {
                result: serde_json::to_value(&prof)?,
                tables: vec![("h_beta".into(), table)],
            })
        }
        Name::ScResistance => {
            let rows = fractal_lab::sc_renorm_estimate(p.m.unwrap_or(3) as usize)?;
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            let table = csv_table(
                &["m", "resistance", "ratio", "beta"],
                rows.iter().map(|r| vec![r.m.to_string(), fmt_f64(r.resistance), opt(r.ratio), opt(r.beta)]).collect::<Vec<_>>(),
            )?;
            Ok(Output {
                result: json!({ "rows": rows }),
                tables: vec![("resistance".into(), table)],
            })
        }
        Name::Strip => {
            let fam = p.family("gaussian")?;
            let r = p.r.unwrap_or(16.0);
            let n = p.per_unit(16.0)?;
            let t = StripTrace::from_family(&fam, r, Resolution::PerUnit(n))?;
            let tilde = conformal_lab::strip_trace_norm(&t)?;
            let sinh = conformal_lab::strip_sinh_norm(&t)?;
            let table = csv_table(
                &["form", "lower", "upper", "l2_difference", "total", "per_unit", "half_width"],
                [("tilde", &tilde), ("sinh", &sinh)]
                    .iter()
                    .map(|(k, s)| {
                        vec![k.to_string(), fmt_f64(s.lower), fmt_f64(s.upper), fmt_f64(s.l2_difference), fmt_f64(s.total()), fmt_f64(n), fmt_f64(r)]
                    })
                    .collect::<Vec<_>>(),
            )?;
            Ok(Output {
                result: json!({
                    "tilde": tilde,
                    "sinh": sinh,
                    "ratio": json_f64(sinh.total() / tilde.total()),
                }),
                tables: vec![("strip".into(), table)],
            })
        }
        Name::Quadrant => {
            let fam = p.family("gaussian")?;
            let r = p.r.unwrap_or(8.0);
            let res = Resolution::PerUnit(p.per_unit(16.0)?);
            let f0 = conformal_lab::half_axis(&fam, r, false, res)?;
            let f1 = conformal_lab::half_axis(&fam, r, true, res)?;
            let q = conformal_lab::quadrant_trace_norm(&f0, &f1)?;
            let table = csv_table(
                &["lower", "upper", "junction", "total", "per_unit", "length"],
                [vec![fmt_f64(q.lower), fmt_f64(q.upper), fmt_f64(q.junction), fmt_f64(q.total()), fmt_f64(p.per_unit(16.0)?), fmt_f64(r)]],
            )?;
            Ok(Output {
                result: json!({ "norm": q, "total": json_f64(q.total()) }),
                tables: vec![("quadrant".into(), table)],
            })
        }
        Name::Counterexample => {
            let fam = p.family("smooth-step")?;
            let n = p.per_unit(8.0)?;
            let g = conformal_lab::counterexample_growth_of(&fam, &p.list("4,8,16,32,64")?, n)?;
            let table = csv_table(
                &["half_width", "full", "tilde", "per_unit"],
                g.rows.iter().map(|r| vec![fmt_f64(r.half_width), fmt_f64(r.full), fmt_f64(r.tilde), fmt_f64(n)]).collect::<Vec<_>>(),
            )?;
            Ok(Output {
                result: serde_json::to_value(&g)?,
                tables: vec![("growth".into(), table)],
            })
        }
    }
}

/// Gasket data at `level`: the harmonic extension of `--boundary`, or a plane
/// family evaluated at the vertices when `--family` is given.
fn gasket_data(p: &Params, level: usize) -> Result<VertexFunction> {
    if p.family.is_some() {
        let fam = p.family("gaussian")?;
        let a = build_fractal(FractalKind::Gasket, level)?;
        return VertexFunction::from_fn(Arc::new(a), |q| fam.eval(q).unwrap_or(0.0));
    }
    let vals: Vec<f64> = p
        .boundary
        .as_deref()
        .unwrap_or("0,0,1")
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| invalid("boundary", format!("bad value `{s}`"))))
        .collect::<Result<_>>()?;
    if vals.len() != 3 {
        return Err(invalid("boundary", "expected three values"));
    }
    let b = VertexFunction::new(build_fractal(FractalKind::Gasket, 0)?, vals)?;
    fractal_lab::sg_harmonic_extend(&b, level)
}

fn command_name(name: Name) -> String {
    serde_json::to_value(name).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn error_kind(e: &Error) -> (&'static str, i32) {
    match e {
        Error::InvalidParameter { .. } => ("invalid-parameter", 2),
        Error::WindowTooSmall { .. } => ("window-too-small", 2),
        Error::IncompatibleKind { .. } => ("incompatible-kind", 2),
        Error::LevelTooDeep { .. } => ("level-too-deep", 2),
        Error::Exponent(_) => ("exponent", 2),
        Error::Json(_) => ("config", 2),
        Error::EdgeOutsideWindow { .. } => ("edge-outside-window", 1),
        Error::SampleCount { .. } => ("sample-count", 1),
        Error::Misaligned(_) => ("misaligned", 1),
        Error::Inconsistent { .. } => ("inconsistent", 1),
        Error::SolverFailed { .. } => ("solver-failed", 1),
        Error::Empty(_) => ("empty", 1),
        Error::Io(_) => ("io", 1),
        Error::Csv(_) => ("csv", 1),
    }
}

fn error_json(command: Option<&str>, e: &Error) -> String {
    let (kind, _) = error_kind(e);
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "error": { "kind": kind, "message": e.to_string() },
    });
    serde_json::to_string_pretty(&v).unwrap_or_default()
}

fn out_dir(p: &Params) -> PathBuf {
    p.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_outputs(dir: &Path, name: &str, report: &str, tables: &[(String, Vec<u8>)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{name}.json")), report)?;
    for (t, bytes) in tables {
        std::fs::write(dir.join(format!("{name}-{t}.csv")), bytes)?;
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<Params> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Runs the command line `args` (program name first), writing the report to
/// `stdout` and diagnostics to `stderr`. Returns the exit code.
pub fn run(args: impl IntoIterator<Item = OsString>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(stdout, "{}", e.render());
            } else {
                let _ = write!(stderr, "{}", e.render());
            }
            return code;
        }
    };
    let (name, flags) = cli.command.split();
    let cmd = command_name(name);
    let fail = |e: Error, out: &mut dyn Write| -> i32 {
        let _ = writeln!(out, "{}", error_json(Some(&cmd), &e));
        error_kind(&e).1
    };
    let params = match cli.config.as_deref().map(load_config).transpose() {
        Ok(file) => match flags.over(&file.unwrap_or_default()) {
            Ok(p) => p,
            Err(e) => return fail(e, stdout),
        },
        Err(e) => return fail(e, stdout),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return fail(invalid("threads", e.to_string()), stdout),
    };
    let out = match pool.install(|| run_command(name, &params)) {
        Ok(o) => o,
        Err(e) => return fail(e, stdout),
    };
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": cmd,
        "config": params,
        "result": out.result,
    });
    let text = serde_json::to_string_pretty(&report).unwrap_or_default();
    if let Err(e) = write_outputs(&out_dir(&params), &cmd, &text, &out.tables) {
        return fail(e, stdout);
    }
    let _ = writeln!(stdout, "{text}");
    let _ = stderr.flush();
    0
}
