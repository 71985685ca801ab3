//! The Sierpinski gasket: three maps `Φ_i(p) = (p + q_i) / 2` with
//! `q_0 = (0, 0)`, `q_1 = (1, 0)`, `q_2 = (1/2, √3/2)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{build_fractal, words, AffineMap, FractalApprox, FractalKind, Interner, VertexFunction};
use crate::error::{invalid, Result};
use crate::functions::EdgeFunction;
use crate::graphs::MetricGraph;
use crate::reduce::pairwise_sum;
use crate::seminorms::edge_double_integral;
use crate::solver::minimize_quadratic_energy;

const CORNERS: [[i64; 2]; 3] = [[0, 0], [1, 0], [0, 1]];
const RENORM: f64 = 5.0 / 3.0;

/// `β = 1/2 + log(5/3) / log 4`.
pub fn gasket_beta() -> f64 {
    0.5 + RENORM.ln() / 4f64.ln()
}

/// Factor `2^(1+2β) / 4` picked up by an edge integral of exponent `1 + 2β`
/// when an edge is halved and its data rescaled with it. It equals `5/3`
/// exactly at [`gasket_beta`].
pub fn edge_scaling_factor(beta: f64) -> f64 {
    2f64.powf(1.0 + 2.0 * beta) / 4.0
}

fn embed(p: [i64; 2], m: usize) -> [f64; 2] {
    let s = 0.5f64.powi(m as i32);
    [(p[0] as f64 + 0.5 * p[1] as f64) * s, p[1] as f64 * 3f64.sqrt() / 2.0 * s]
}

pub(super) fn build(m: usize) -> FractalApprox {
    let cells = words(&[0, 1, 2], m);
    let mut interner = Interner::default();
    let mut cell_vertices = Vec::with_capacity(cells.len());
    let mut edges = Vec::with_capacity(3 * cells.len());
    for w in &cells {
        let mut base = [0i64; 2];
        for (k, &d) in w.iter().enumerate() {
            let s = 1i64 << (m - k - 1);
            base[0] += s * CORNERS[d as usize][0];
            base[1] += s * CORNERS[d as usize][1];
        }
        let v: Vec<usize> = CORNERS.iter().map(|q| interner.id([base[0] + q[0], base[1] + q[1]])).collect();
        edges.extend([(v[0], v[1]), (v[0], v[2]), (v[1], v[2])]);
        cell_vertices.push(v);
    }
    let vertices = interner.lattice.iter().map(|&p| embed(p, m)).collect();
    let maps = (0..3)
        .map(|i| AffineMap {
            scale: 0.5,
            shift: embed(CORNERS[i], 1),
        })
        .collect();
    FractalApprox {
        kind: FractalKind::Gasket,
        level: m,
        cells,
        cell_vertices,
        lattice: interner.lattice,
        vertices,
        edges,
        maps,
        index: interner.index,
    }
}

fn check_gasket(f: &VertexFunction) -> Result<()> {
    if f.approx.kind != FractalKind::Gasket {
        return Err(invalid("function", "expected data on a gasket approximation"));
    }
    Ok(())
}

/// `E_m(f) = Σ_w Σ_{i<j} |f(Φ_w q_i) - f(Φ_w q_j)|^2` at the level of `f`.
pub fn sg_graph_energy(f: &VertexFunction) -> Result<f64> {
    check_gasket(f)?;
    let terms: Vec<f64> = f
        .approx
        .cell_vertices
        .par_iter()
        .map(|v| {
            let x = [f.values[v[0]], f.values[v[1]], f.values[v[2]]];
            (x[0] - x[1]).powi(2) + (x[0] - x[2]).powi(2) + (x[1] - x[2]).powi(2)
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Energy-minimizing extension of `f` to level `to`, keeping the values of
/// `f` at its own vertices.
pub fn sg_harmonic_extend(f: &VertexFunction, to: usize) -> Result<VertexFunction> {
    check_gasket(f)?;
    let m = f.level();
    if to < m {
        return Err(invalid("level", format!("cannot extend level {m} data down to level {to}")));
    }
    let fine = build_fractal(FractalKind::Gasket, to)?;
    let s = 1i64 << (to - m);
    let mut fixed = vec![None; fine.vertices.len()];
    for (p, &v) in f.approx.lattice.iter().zip(&f.values) {
        fixed[fine.vertex_at([p[0] * s, p[1] * s]).expect("nested vertex sets")] = Some(v);
    }
    let links: Vec<(usize, usize, f64)> = fine.edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
    let (values, _) = minimize_quadratic_energy(fine.vertices.len(), &links, &fixed, 1e-14)?;
    VertexFunction::new(fine, values)
}

/// `f ∘ Φ_i`, one level coarser than `f`.
pub fn compose_cell(f: &VertexFunction, i: usize) -> Result<VertexFunction> {
    check_gasket(f)?;
    let m = f.level();
    if m == 0 || i > 2 {
        return Err(invalid("cell", format!("no cell {i} at level {m}")));
    }
    let coarse = build_fractal(FractalKind::Gasket, m - 1)?;
    let s = 1i64 << (m - 1);
    let shift = [CORNERS[i][0] * s, CORNERS[i][1] * s];
    let values = coarse
        .lattice
        .iter()
        .map(|p| f.values[f.approx.vertex_at([p[0] + shift[0], p[1] + shift[1]]).expect("cell vertex")])
        .collect();
    VertexFunction::new(coarse, values)
}

#[derive(Debug, Clone, Serialize)]
pub struct RenormRow {
    pub m: usize,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub energy: f64,
    /// `(5/3)^m E_m`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub renormalized: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RenormProfile {
    pub rows: Vec<RenormRow>,
    /// Levels `m` with `(5/3)^m E_m` below its predecessor by more than
    /// `1e-12` relative.
    pub violations: Vec<usize>,
    /// Change between the last two renormalized values, a proxy for the
    /// distance to the limit.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub last_increment: f64,
}

/// `(5/3)^m E_m` of the restrictions of `f` for `m = 0..=M`.
pub fn sg_renormalized_profile(f: &VertexFunction) -> Result<RenormProfile> {
    check_gasket(f)?;
    let top = f.level();
    if top < 2 {
        return Err(invalid("level", format!("a profile needs data at level 2 or deeper, got {top}")));
    }
    let rows: Vec<RenormRow> = (0..=top)
        .map(|m| {
            let energy = sg_graph_energy(&f.restrict(m)?)?;
            Ok(RenormRow {
                m,
                energy,
                renormalized: RENORM.powi(m as i32) * energy,
            })
        })
        .collect::<Result<_>>()?;
    let violations = rows
        .windows(2)
        .filter(|w| w[1].renormalized < w[0].renormalized - 1e-12 * w[0].renormalized.abs())
        .map(|w| w[1].m)
        .collect();
    let last_increment = rows[top].renormalized - rows[top - 1].renormalized;
    Ok(RenormProfile {
        rows,
        violations,
        last_increment,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HBetaRow {
    pub m: usize,
    /// `Σ_e ∫∫_e |f(x) - f(y)|^2 / |x - y|^(1+2β)` over the edges of `SG_m`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub norm: f64,
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub renormalized: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HBetaProfile {
    pub beta: f64,
    /// Level of the vertex data.
    pub data_level: usize,
    pub rows: Vec<HBetaRow>,
    /// `max / min` of the norms, absent when some norm vanishes.
    #[serde(serialize_with = "crate::report::ser_opt_f64")]
    pub max_over_min: Option<f64>,
}

/// Edge function on `SG_m` through the level-`M` vertex values on each edge.
pub fn gasket_edge_trace(f: &VertexFunction, m: usize) -> Result<EdgeFunction> {
    check_gasket(f)?;
    let top = f.level();
    if m > top {
        return Err(invalid("level", format!("level {m} is finer than the data (level {top})")));
    }
    let coarse = build_fractal(FractalKind::Gasket, m)?;
    let s = 1i64 << (top - m);
    let samples = coarse
        .edges
        .iter()
        .map(|&(a, b)| {
            let (pa, pb) = (coarse.lattice[a], coarse.lattice[b]);
            (0..=s)
                .map(|k| {
                    let p = [pa[0] * s + k * (pb[0] - pa[0]), pa[1] * s + k * (pb[1] - pa[1])];
                    f.values[f.approx.vertex_at(p).expect("edge-resident vertex")]
                })
                .collect()
        })
        .collect();
    let g = Arc::new(MetricGraph::from_segments(coarse.vertices.clone(), &coarse.edges)?);
    EdgeFunction::new(g, samples, true)
}

/// Trace norms of exponent `1 + 2β` on `SG_m` for `m = 0..=depth`.
pub fn h_beta_trace_profile(f: &VertexFunction, beta: f64, depth: usize) -> Result<HBetaProfile> {
    if !(beta > 0.5 && beta < 1.0) {
        return Err(invalid("beta", format!("must lie in (1/2, 1), got {beta}")));
    }
    let rows: Vec<HBetaRow> = (0..=depth)
        .map(|m| {
            let t = gasket_edge_trace(f, m)?;
            let terms: Vec<f64> = (0..t.samples.len())
                .into_par_iter()
                .map(|e| edge_double_integral(&t, e, e, 1.0 + 2.0 * beta))
                .collect::<Result<_>>()?;
            Ok(HBetaRow {
                m,
                norm: pairwise_sum(&terms),
                renormalized: RENORM.powi(m as i32) * sg_graph_energy(&f.restrict(m)?)?,
            })
        })
        .collect::<Result<_>>()?;
    let max = rows.iter().map(|r| r.norm).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.norm).fold(f64::INFINITY, f64::min);
    Ok(HBetaProfile {
        beta,
        data_level: f.level(),
        rows,
        max_over_min: (min > 0.0).then(|| max / min),
    })
}
