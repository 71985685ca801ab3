//! Traces of plane functions on nested graph paper, and the reverse
//! construction from consistent traces.
//!
//! A level `n` with base `m` is the graph paper of spacing `δ = m^n`. The
//! profile of a field lists the graph-paper seminorm of its trace per level;
//! for `F` of finite energy it stays bounded as `n` decreases, and conversely
//! bounded consistent traces come from a field of comparable energy. The sup
//! over levels is taken over the levels supplied (a limsup as `n → -∞` would
//! do as well).

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::extension::{fill_patch, localized_energy, patch_energy, plane_energy, EnergyReport};
use crate::functions::{fmt_f64, trace_plane_to_graph, EdgeFunction, FunctionFamily, PlaneField, Resolution};
use crate::graphs::{build_graph, restrict_graph, GraphFamily, MetricGraph, Point, Window};
use crate::reduce::pairwise_sum;
use crate::seminorms::{seminorm_with, NormKind, NormOptions};

/// One row of a profile.
#[derive(Debug, Clone, Serialize)]
pub struct LevelNorm {
    pub n: i32,
    pub delta: f64,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub norm: f64,
    pub edges: usize,
}

/// Per-level squared trace norms of one field.
#[derive(Debug, Clone, Serialize)]
pub struct NormProfile {
    pub kind: String,
    pub m: u32,
    pub levels: Vec<LevelNorm>,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub energy: f64,
    /// Plane grid spacing, which is also the trace resolution.
    pub h: f64,
    pub window: Window,
}

impl NormProfile {
    pub fn sup(&self) -> f64 {
        self.levels.iter().map(|l| l.norm).fold(0.0, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.levels.iter().map(|l| l.norm).fold(f64::INFINITY, f64::min)
    }

    /// `sup_n |T_n F|^2 / E(F)`.
    pub fn sup_over_energy(&self) -> f64 {
        self.sup() / self.energy
    }

    /// Rows `n,delta,norm2,energy,ratio,h,center_x,center_y,half_width`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "delta", "norm2", "energy", "ratio", "h", "center_x", "center_y", "half_width"])?;
        for l in &self.levels {
            w.write_record([
                l.n.to_string(),
                fmt_f64(l.delta),
                fmt_f64(l.norm),
                fmt_f64(self.energy),
                fmt_f64(l.norm / self.energy),
                fmt_f64(self.h),
                fmt_f64(self.window.center[0]),
                fmt_f64(self.window.center[1]),
                fmt_f64(self.window.half_width),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_levels(m: u32, levels: &[i32]) -> Result<()> {
    if m < 2 {
        return Err(invalid("m", format!("the base must be at least 2, got {m}")));
    }
    if levels.is_empty() {
        return Err(invalid("levels", "no levels given"));
    }
    if levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("levels", "levels must be strictly decreasing"));
    }
    Ok(())
}

fn field_window(f: &PlaneField) -> Result<Window> {
    f.window().ok_or_else(|| invalid("field", "traces need a square plane grid"))
}

fn level_delta(m: u32, n: i32, h: f64) -> Result<f64> {
    let delta = (m as f64).powi(n);
    if delta < 2.0 * h * (1.0 - 1e-12) {
        return Err(invalid(
            "levels",
            format!("level {n} has spacing {delta}, finer than two plane grid spacings ({h})"),
        ));
    }
    Ok(delta)
}

fn profile_with(
    f: &PlaneField,
    m: u32,
    levels: &[i32],
    kind: NormKind,
    graph: impl Fn(f64, Window) -> Result<MetricGraph> + Sync,
) -> Result<NormProfile> {
    check_levels(m, levels)?;
    let window = field_window(f)?;
    let energy = plane_energy(f)?.energy;
    let opts = NormOptions {
        refinement: false,
        ..Default::default()
    };
    let rows: Vec<Result<LevelNorm>> = levels
        .par_iter()
        .map(|&n| {
            let delta = level_delta(m, n, f.h)?;
            let g = graph(delta, window)?;
            let edges = g.edges.len();
            let t = trace_plane_to_graph(f, g, Resolution::PerUnit(1.0 / f.h))?;
            let norm = seminorm_with(&t, kind, &opts)?.value;
            Ok(LevelNorm { n, delta, norm, edges })
        })
        .collect();
    Ok(NormProfile {
        kind: kind.name().into(),
        m,
        levels: rows.into_iter().collect::<Result<_>>()?,
        energy,
        h: f.h,
        window,
    })
}

/// Graph-paper trace norms of `F` at spacings `m^n`.
pub fn trace_profile(f: &PlaneField, m: u32, levels: &[i32]) -> Result<NormProfile> {
    profile_with(f, m, levels, NormKind::GraphPaper, |d, w| {
        build_graph(GraphFamily::GraphPaper { spacing: d }, w)
    })
}

/// Trace norms on the horizontal lines only, with nearest-line differences.
pub fn pencil_profile(f: &PlaneField, m: u32, levels: &[i32]) -> Result<NormProfile> {
    profile_with(f, m, levels, NormKind::PencilTilde, |d, w| {
        build_graph(GraphFamily::Pencil { spacing: d }, w)
    })
}

/// Energy and graph-paper norms restricted to a region.
#[derive(Debug, Clone, Serialize)]
pub struct LocalizedComparison {
    pub region: Window,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub energy: f64,
    pub profile: NormProfile,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub sup: f64,
    /// `sup / energy`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub ratio: f64,
}

/// Energy of the cells inside `region` against the graph-paper norms
/// summed over the edges inside `region`.
pub fn localized_compare(f: &PlaneField, region: &Window, m: u32, levels: &[i32]) -> Result<LocalizedComparison> {
    let window = field_window(f)?;
    let (lo, hi, wlo, whi) = (region.min(), region.max(), window.min(), window.max());
    let tol = 1e-9 * f.h;
    if lo[0] < wlo[0] - tol || lo[1] < wlo[1] - tol || hi[0] > whi[0] + tol || hi[1] > whi[1] + tol {
        return Err(invalid("region", "must lie inside the field window"));
    }
    let mut profile = profile_with(f, m, levels, NormKind::GraphPaper, |d, w| {
        let g = restrict_graph(&build_graph(GraphFamily::GraphPaper { spacing: d }, w)?, *region);
        if g.is_empty() {
            return Err(Error::Empty(format!("no edges of spacing {d} lie inside the region")));
        }
        Ok(g)
    })?;
    let energy = localized_energy(f, region)?;
    profile.energy = energy;
    let sup = profile.sup();
    Ok(LocalizedComparison {
        region: *region,
        energy,
        profile,
        sup,
        ratio: sup / energy,
    })
}

/// A field rebuilt from graph-paper traces.
#[derive(Debug, Clone, Serialize)]
pub struct Reconstruction {
    #[serde(skip)]
    pub field: PlaneField,
    pub energy: EnergyReport,
    /// Sum of the energies of the finest squares taken one by one.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub square_energy_sum: f64,
    pub levels: Vec<LevelNorm>,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub sup: f64,
    /// `energy / sup`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub ratio: f64,
}

type Key = (i64, i64);

fn key(p: Point, q: f64) -> Option<Key> {
    let (a, b) = ((p[0] / q).round(), (p[1] / q).round());
    ((p[0] - a * q).abs() < 1e-9 * q && (p[1] - b * q).abs() < 1e-9 * q).then_some((a as i64, b as i64))
}

/// Values of `f` at its sample points, keyed on the lattice of spacing `q`.
fn sample_map(f: &EdgeFunction, q: f64) -> HashMap<Key, f64> {
    let g = &*f.graph;
    let mut out = HashMap::new();
    for (e, edge) in g.edges.iter().enumerate() {
        let h = f.spacing(e);
        for (k, &v) in f.samples[e].iter().enumerate() {
            let p = if k + 1 == f.samples[e].len() { g.vertices[edge.b] } else { edge.point(k as f64 * h) };
            if let Some(key) = key(p, q) {
                out.insert(key, v);
            }
        }
    }
    out
}

fn graph_paper_spacing(f: &EdgeFunction) -> Result<f64> {
    match f.graph.family {
        Some(GraphFamily::GraphPaper { spacing }) => Ok(spacing),
        _ => Err(Error::IncompatibleKind {
            kind: "graph-paper".into(),
            reason: "reconstruction needs traces on graph paper".into(),
        }),
    }
}

/// Traces of `F` on the graph paper of every level, sampled at the plane grid.
pub fn trace_levels(f: &PlaneField, m: u32, levels: &[i32]) -> Result<Vec<(i32, EdgeFunction)>> {
    check_levels(m, levels)?;
    let window = field_window(f)?;
    levels
        .iter()
        .map(|&n| {
            let delta = level_delta(m, n, f.h)?;
            let g = build_graph(GraphFamily::GraphPaper { spacing: delta }, window)?;
            Ok((n, trace_plane_to_graph(f, g, Resolution::PerUnit(1.0 / f.h))?))
        })
        .collect()
}

/// Checks that every coarser level agrees with the next finer one at their
/// shared sample points, then fills each square of the finest level with its
/// discrete harmonic extension.
pub fn reconstruct_from_traces(levels: &[(i32, EdgeFunction)], m: u32, check: bool) -> Result<Reconstruction> {
    let ns: Vec<i32> = levels.iter().map(|l| l.0).collect();
    check_levels(m, &ns)?;
    let deltas: Vec<f64> = levels.iter().map(|(_, f)| graph_paper_spacing(f)).collect::<Result<_>>()?;
    for ((n, _), d) in levels.iter().zip(&deltas) {
        let want = (m as f64).powi(*n);
        if (d - want).abs() > 1e-12 * want {
            return Err(invalid("levels", format!("level {n} has spacing {d}, expected {want}")));
        }
    }
    let (n_fine, fine) = levels.last().unwrap();
    let delta = *deltas.last().unwrap();
    let h = fine.spacing(0);
    if (0..fine.samples.len()).any(|e| (fine.spacing(e) - h).abs() > 1e-12 * h) {
        return Err(invalid("levels", "the finest level must use one sample spacing"));
    }
    let per = delta / h;
    if (per - per.round()).abs() > 1e-9 * per {
        return Err(Error::Misaligned(format!("sample spacing {h} does not divide {delta}")));
    }
    let per = per.round() as usize;

    if check {
        for pair in levels.windows(2) {
            let ((nc, coarse), (nf, finer)) = (&pair[0], &pair[1]);
            let q = finer.spacing(0);
            let fine_map = sample_map(finer, q);
            let scale = finer.samples.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
            let mut shared: Vec<(Key, f64)> = sample_map(coarse, q).into_iter().collect();
            shared.sort_by_key(|s| s.0);
            for (k, v) in shared {
                if let Some(&w) = fine_map.get(&k) {
                    if (v - w).abs() > 1e-12 * scale {
                        return Err(Error::Inconsistent {
                            level: *nc,
                            detail: format!(
                                "at ({}, {}) the value {v} differs from {w} on level {nf}",
                                k.0 as f64 * q,
                                k.1 as f64 * q
                            ),
                        });
                    }
                }
            }
        }
    }

    // the plane grid spanned by the finest graph paper
    let g = &*fine.graph;
    let lo = g.vertices.iter().fold([f64::INFINITY; 2], |a, v| [a[0].min(v[0]), a[1].min(v[1])]);
    let hi = g.vertices.iter().fold([f64::NEG_INFINITY; 2], |a, v| [a[0].max(v[0]), a[1].max(v[1])]);
    let nx = ((hi[0] - lo[0]) / h).round() as usize + 1;
    let ny = ((hi[1] - lo[1]) / h).round() as usize + 1;
    let mut values = vec![0.0; nx * ny];
    let mut known = vec![false; nx * ny];
    let lo_key = key(lo, h).ok_or_else(|| Error::Misaligned("graph paper off the sample lattice".into()))?;
    for (k, v) in sample_map(fine, h) {
        let (i, j) = ((k.0 - lo_key.0) as usize, (k.1 - lo_key.1) as usize);
        values[j * nx + i] = v;
        known[j * nx + i] = true;
    }
    let (cx, cy) = ((nx - 1) / per, (ny - 1) / per);
    for j in 0..ny {
        for i in 0..nx {
            if (i % per == 0 || j % per == 0) && !known[j * nx + i] {
                return Err(Error::Misaligned(format!("grid point ({i}, {j}) of level {n_fine} has no sample")));
            }
        }
    }
    let patches: Vec<Result<(Vec<f64>, f64)>> = (0..cx * cy)
        .into_par_iter()
        .map(|c| {
            let (a, b) = (c % cx, c / cx);
            let np = per + 1;
            let mut patch = Vec::with_capacity(np * np);
            for j in 0..np {
                let row = (b * per + j) * nx + a * per;
                patch.extend_from_slice(&values[row..row + np]);
            }
            fill_patch(&mut patch, np, np)?;
            let e = patch_energy(&PlaneField::new([0.0, 0.0], h, np, np, patch.clone())?);
            Ok((patch, e))
        })
        .collect();
    let mut square_energies = Vec::with_capacity(cx * cy);
    for (c, p) in patches.into_iter().enumerate() {
        let (patch, e) = p?;
        let (a, b) = (c % cx, c / cx);
        let np = per + 1;
        for j in 1..per {
            let row = (b * per + j) * nx + a * per;
            values[row + 1..row + per].copy_from_slice(&patch[j * np + 1..j * np + per]);
        }
        square_energies.push(e);
    }
    let field = PlaneField::new(lo, h, nx, ny, values)?;
    let energy = crate::extension::plane_energy(&field)?;

    let opts = NormOptions {
        refinement: false,
        ..Default::default()
    };
    let norms: Vec<LevelNorm> = levels
        .iter()
        .zip(&deltas)
        .map(|((n, f), d)| {
            Ok(LevelNorm {
                n: *n,
                delta: *d,
                norm: seminorm_with(f, NormKind::GraphPaper, &opts)?.value,
                edges: f.graph.edges.len(),
            })
        })
        .collect::<Result<_>>()?;
    let sup = norms.iter().map(|l| l.norm).fold(0.0, f64::max);
    Ok(Reconstruction {
        ratio: energy.energy / sup,
        square_energy_sum: pairwise_sum(&square_energies),
        field,
        energy,
        levels: norms,
        sup,
    })
}

/// Half-line norm of the trace of `(1 + x^2 + y^2)^(-α)` on the line
/// `y = n π`, against the dilation law `(1 + π^2 n^2)^(-2α)`.
#[derive(Debug, Clone, Serialize)]
pub struct LineDecay {
    pub n: i32,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub norm: f64,
    /// `norm / norm_0`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub measured: f64,
    /// `(1 + π^2 n^2)^(-2α)`.
    pub predicted: f64,
}

/// Per-line norms of the radial power field on the pencil of spacing `π`,
/// each line truncated to `[-R, R]` and sampled at `per_unit`.
pub fn radial_power_lines(alpha: f64, lines: &[i32], half_width: f64, per_unit: f64) -> Result<Vec<LineDecay>> {
    let fam = FunctionFamily::RadialPower { alpha };
    fam.validate()?;
    let pi = std::f64::consts::PI;
    let norm = |n: i32| -> Result<f64> {
        let w = Window::new([0.0, n as f64 * pi], half_width)?;
        let g = Arc::new(build_graph(GraphFamily::IntervalLine, w)?);
        let f = crate::functions::sample_on_graph(&fam, g, Resolution::PerUnit(per_unit))?;
        let opts = NormOptions {
            refinement: false,
            ..Default::default()
        };
        Ok(seminorm_with(&f, NormKind::HalfLine, &opts)?.value)
    };
    let base = norm(0)?;
    lines
        .iter()
        .map(|&n| {
            let v = if n == 0 { base } else { norm(n)? };
            Ok(LineDecay {
                n,
                norm: v,
                measured: v / base,
                predicted: (1.0 + pi * pi * (n as f64).powi(2)).powf(-2.0 * alpha),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(fam: &FunctionFamily, r: f64, h: f64) -> PlaneField {
        PlaneField::from_family(fam, &Window::centered(r).unwrap(), h).unwrap()
    }

    #[test]
    fn constants_give_zero_profiles() {
        let f = field(&FunctionFamily::Constant { value: 3.0 }, 2.0, 0.125);
        let p = trace_profile(&f, 2, &[0, -1, -2]).unwrap();
        assert!(p.levels.iter().all(|l| l.norm == 0.0));
        assert_eq!(p.energy, 0.0);
        let p = pencil_profile(&f, 2, &[0, -1]).unwrap();
        assert!(p.levels.iter().all(|l| l.norm == 0.0));
        let c = localized_compare(&f, &Window::centered(1.0).unwrap(), 2, &[0, -1]).unwrap();
        assert_eq!((c.energy, c.sup), (0.0, 0.0));
    }

    #[test]
    fn linear_field_profile_in_closed_form() {
        // F = x: each horizontal edge of length δ contributes ∫∫ 1 = δ^2 and
        // vertical edges carry constants
        let f = field(&FunctionFamily::linear(1.0, 0.0), 1.0, 1.0 / 16.0);
        let p = trace_profile(&f, 2, &[0, -1, -2]).unwrap();
        for l in &p.levels {
            let k = (2.0 / l.delta).round() as usize;
            let horizontal = (k * (k + 1)) as f64;
            let edge_sum = horizontal * l.delta * l.delta;
            let g = build_graph(GraphFamily::GraphPaper { spacing: l.delta }, Window::centered(1.0).unwrap()).unwrap();
            let t = crate::functions::sample_on_graph(&FunctionFamily::linear(1.0, 0.0), g, Resolution::PerUnit(16.0)).unwrap();
            let opts = NormOptions { refinement: false, ..Default::default() };
            let r = seminorm_with(&t, NormKind::GraphPaper, &opts).unwrap();
            assert!((r.term(crate::seminorms::TermKind::EdgeDouble) - edge_sum).abs() < 1e-9 * edge_sum);
            assert_eq!(l.norm, r.value, "{l:?}");
        }
    }

    #[test]
    fn levels_are_validated() {
        let f = field(&FunctionFamily::gaussian(), 1.0, 0.125);
        assert!(trace_profile(&f, 1, &[0]).is_err());
        assert!(trace_profile(&f, 2, &[0, 0]).is_err());
        assert!(trace_profile(&f, 2, &[0, -1, -2]).is_ok());
        assert!(trace_profile(&f, 2, &[-3, -4]).is_err());
    }

    #[test]
    fn nested_traces_agree() {
        let f = field(&FunctionFamily::gaussian(), 1.0, 1.0 / 16.0);
        let levels = trace_levels(&f, 2, &[0, -1, -2]).unwrap();
        let fine = sample_map(&levels[2].1, 1.0 / 16.0);
        for (_, coarse) in &levels[..2] {
            for (k, v) in sample_map(coarse, 1.0 / 16.0) {
                assert_eq!(fine[&k], v);
            }
        }
    }

    #[test]
    fn reconstruction_of_linear_data_is_exact() {
        let f = field(&FunctionFamily::linear(0.5, -2.0), 1.0, 1.0 / 16.0);
        let levels = trace_levels(&f, 2, &[0, -1, -2]).unwrap();
        let r = reconstruct_from_traces(&levels, 2, true).unwrap();
        assert_eq!((r.field.nx, r.field.ny), (f.nx, f.ny));
        for (a, b) in r.field.values.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-11);
        }
        assert!((r.square_energy_sum - r.energy.energy).abs() < 1e-12 * r.energy.energy);
    }

    #[test]
    fn round_trip_reproduces_level_norms() {
        let f = field(&FunctionFamily::gaussian(), 1.0, 1.0 / 16.0);
        let levels = trace_levels(&f, 2, &[0, -1, -2]).unwrap();
        let r = reconstruct_from_traces(&levels, 2, true).unwrap();
        let again = trace_profile(&r.field, 2, &[0, -1, -2]).unwrap();
        for (a, b) in again.levels.iter().zip(&r.levels) {
            assert!((a.norm - b.norm).abs() <= 1e-12 * b.norm, "{a:?} {b:?}");
        }
    }

    #[test]
    fn inconsistent_traces_are_rejected() {
        let f = field(&FunctionFamily::gaussian(), 1.0, 1.0 / 8.0);
        let mut levels = trace_levels(&f, 2, &[0, -1]).unwrap();
        levels[0].1.samples[3][2] += 0.01;
        match reconstruct_from_traces(&levels, 2, true) {
            Err(Error::Inconsistent { level, .. }) => assert_eq!(level, 0),
            other => panic!("{other:?}"),
        }
        assert!(reconstruct_from_traces(&levels, 2, false).is_ok());
    }

    #[test]
    fn full_region_matches_global_profile() {
        let f = field(&FunctionFamily::gaussian(), 2.0, 0.125);
        let p = trace_profile(&f, 2, &[0, -1]).unwrap();
        let c = localized_compare(&f, &Window::centered(2.0).unwrap(), 2, &[0, -1]).unwrap();
        assert!((c.energy - p.energy).abs() < 1e-12 * p.energy);
        for (a, b) in c.profile.levels.iter().zip(&p.levels) {
            assert_eq!(a.norm, b.norm);
        }
        assert!(localized_compare(&f, &Window::centered(3.0).unwrap(), 2, &[0]).is_err());
    }

    #[test]
    fn pencil_of_y_in_closed_form() {
        // F = y: lines are constant, so only the second sum survives:
        // per level δ^{-1} δ^2 (2R) (lines - 1)
        let r = 1.0;
        let f = field(&FunctionFamily::linear(0.0, 1.0), r, 1.0 / 16.0);
        let p = pencil_profile(&f, 2, &[0, -1, -2]).unwrap();
        for l in &p.levels {
            let lines = (2.0 * r / l.delta).round() + 1.0;
            let want = l.delta * 2.0 * r * (lines - 1.0);
            assert!((l.norm - want).abs() < 1e-12 * want, "{l:?} {want}");
        }
    }

    #[test]
    fn csv_rows_carry_resolution_and_window() {
        let f = field(&FunctionFamily::gaussian(), 1.0, 0.125);
        let p = trace_profile(&f, 2, &[0, -1]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(",0.125,0,0,1"), "{}", lines[1]);
    }
}
