//! The Sierpinski carpet: eight maps of ratio `1/3` onto the subsquares
//! other than the center one.

use rayon::prelude::*;
use serde::Serialize;

use super::{build_fractal, words, AffineMap, FractalApprox, FractalKind, Interner, VertexFunction};
use crate::error::{invalid, Result};
use crate::reduce::pairwise_sum;
use crate::solver::minimize_quadratic_energy;

/// Lower-left corners of the subsquares for digits `1..=8`.
const POSITIONS: [[i64; 2]; 8] = [[0, 0], [1, 0], [2, 0], [0, 1], [2, 1], [0, 2], [1, 2], [2, 2]];
const SQUARE: [[i64; 2]; 4] = [[0, 0], [1, 0], [1, 1], [0, 1]];

/// `β = 1/2 + log r / log 9`.
pub fn carpet_beta(r: f64) -> f64 {
    0.5 + r.ln() / 9f64.ln()
}

/// `3^(1+2β) / 9`, which returns `r` at `β = carpet_beta(r)`.
pub fn carpet_edge_scaling_factor(beta: f64) -> f64 {
    3f64.powf(1.0 + 2.0 * beta) / 9.0
}

pub(super) fn build(m: usize) -> FractalApprox {
    let cells = words(&[1, 2, 3, 4, 5, 6, 7, 8], m);
    let mut interner = Interner::default();
    let mut cell_vertices = Vec::with_capacity(cells.len());
    let mut sides = Vec::with_capacity(4 * cells.len());
    for w in &cells {
        let mut base = [0i64; 2];
        for (k, &d) in w.iter().enumerate() {
            let s = 3i64.pow((m - k - 1) as u32);
            base[0] += s * POSITIONS[d as usize - 1][0];
            base[1] += s * POSITIONS[d as usize - 1][1];
        }
        let v: Vec<usize> = SQUARE.iter().map(|q| interner.id([base[0] + q[0], base[1] + q[1]])).collect();
        for k in 0..4 {
            let (a, b) = (v[k], v[(k + 1) % 4]);
            sides.push((a.min(b), a.max(b)));
        }
        cell_vertices.push(v);
    }
    sides.sort_unstable();
    sides.dedup();
    let s = 3f64.powi(-(m as i32));
    let vertices = interner.lattice.iter().map(|p| [p[0] as f64 * s, p[1] as f64 * s]).collect();
    let maps = POSITIONS
        .iter()
        .map(|p| AffineMap {
            scale: 1.0 / 3.0,
            shift: [p[0] as f64 / 3.0, p[1] as f64 / 3.0],
        })
        .collect();
    FractalApprox {
        kind: FractalKind::Carpet,
        level: m,
        cells,
        cell_vertices,
        lattice: interner.lattice,
        vertices,
        edges: sides,
        maps,
        index: interner.index,
    }
}

/// Cell-additive conductances: each cell contributes half of the squared
/// differences along its four sides, so a side shared by two cells carries
/// weight one and a side on the boundary of the approximation weight 1/2.
fn links(a: &FractalApprox) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(a.edges.len());
    let mut count = std::collections::HashMap::with_capacity(a.edges.len());
    for v in &a.cell_vertices {
        for k in 0..4 {
            let (x, y) = (v[k], v[(k + 1) % 4]);
            *count.entry((x.min(y), x.max(y))).or_insert(0u8) += 1;
        }
    }
    for &(x, y) in &a.edges {
        out.push((x, y, 0.5 * count[&(x, y)] as f64));
    }
    out
}

/// `½ Σ_cells Σ_sides |f(u) - f(v)|^2` on `SC_m`.
pub fn sc_graph_energy(f: &VertexFunction) -> Result<f64> {
    if f.approx.kind != FractalKind::Carpet {
        return Err(invalid("function", "expected data on a carpet approximation"));
    }
    let terms: Vec<f64> = f
        .approx
        .cell_vertices
        .par_iter()
        .map(|v| (0..4).map(|k| (f.values[v[k]] - f.values[v[(k + 1) % 4]]).powi(2)).sum::<f64>() * 0.5)
        .collect();
    Ok(pairwise_sum(&terms))
}

#[derive(Debug, Clone, Serialize)]
pub struct ResistanceRow {
    pub m: usize,
    /// Resistance between the sides `x = 0` and `x = 1`.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub resistance: f64,
    /// `R_m / R_(m-1)`, absent at `m = 0`.
    #[serde(serialize_with = "crate::report::ser_opt_f64")]
    pub ratio: Option<f64>,
    /// `carpet_beta(ratio)`.
    #[serde(serialize_with = "crate::report::ser_opt_f64")]
    pub beta: Option<f64>,
}

/// Left-to-right resistance of `SC_m`: the reciprocal of the least energy
/// with the left side held at 0 and the right side at 1.
pub fn sc_resistance(m: usize) -> Result<f64> {
    let a = build_fractal(FractalKind::Carpet, m)?;
    let right = 3i64.pow(m as u32);
    let fixed: Vec<Option<f64>> = a
        .lattice
        .iter()
        .map(|p| match p[0] {
            0 => Some(0.0),
            x if x == right => Some(1.0),
            _ => None,
        })
        .collect();
    let (values, _) = minimize_quadratic_energy(a.vertices.len(), &links(&a), &fixed, 1e-13)?;
    let f = VertexFunction::new(a, values)?;
    Ok(1.0 / sc_graph_energy(&f)?)
}

/// Resistances for `m = 0..=max` and their successive ratios.
pub fn sc_renorm_estimate(max: usize) -> Result<Vec<ResistanceRow>> {
    if max > super::SC_MAX_LEVEL {
        return Err(crate::error::Error::LevelTooDeep {
            what: "the carpet",
            level: max,
            bound: super::SC_MAX_LEVEL,
        });
    }
    let rs: Vec<f64> = (0..=max).into_par_iter().map(sc_resistance).collect::<Result<_>>()?;
    Ok(rs
        .iter()
        .enumerate()
        .map(|(m, &r)| {
            let ratio = (m > 0).then(|| r / rs[m - 1]);
            ResistanceRow {
                m,
                resistance: r,
                ratio,
                beta: ratio.map(carpet_beta),
            }
        })
        .collect())
}
