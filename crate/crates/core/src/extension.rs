//! Extensions from line and graph data into the plane, and plane energies.
//!
//! Energies are the discrete Dirichlet form of the grid: every grid link
//! contributes `(ΔF)^2` (the `h^2` of the gradient and of the cell area
//! cancel), links on the outer boundary with weight 1/2. Equivalently each
//! cell carries half the sum over its four sides, so energies localize to
//! cells and are exactly additive. The 5-point harmonic fill is the exact
//! minimizer of this form.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::functions::{EdgeFunction, PlaneField};
use crate::graphs::{Embedding, GraphFamily, Point, Window};
use crate::quadrature::gl8;
use crate::reduce::pairwise_sum;
use crate::solver::{conjugate_gradient, CgOutcome};

/// `∫ |∇F|^2` of a grid field.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub energy: f64,
    /// `energy / 4π^2`, the same quantity in the Fourier normalization
    /// `∫∫ |ξ| |f̂|^2` of the line norms.
    #[serde(serialize_with = "crate::report::ser_f64")]
    pub fourier_normalized: f64,
    pub h: f64,
    pub origin: Point,
    pub nx: usize,
    pub ny: usize,
    /// Per-cell energies, row by row, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<Vec<f64>>,
}

/// Result of [`poisson_extend`].
#[derive(Debug, Clone)]
pub struct PoissonExtension {
    pub field: PlaneField,
    /// Grid row holding the line.
    pub line_row: usize,
    /// Constant values assumed for the data beyond its window, left and right.
    pub tails: (f64, f64),
    pub warnings: Vec<String>,
}

fn cell_energy(f: &PlaneField, i: usize, j: usize) -> f64 {
    let (a, b, c, d) = (f.at(i, j), f.at(i + 1, j), f.at(i, j + 1), f.at(i + 1, j + 1));
    0.5 * ((b - a).powi(2) + (d - c).powi(2) + (c - a).powi(2) + (d - b).powi(2))
}

fn cell_rows(f: &PlaneField) -> Vec<Vec<f64>> {
    (0..f.ny - 1)
        .into_par_iter()
        .map(|j| (0..f.nx - 1).map(|i| cell_energy(f, i, j)).collect())
        .collect()
}

fn report(f: &PlaneField, cells: Vec<Vec<f64>>, detail: bool) -> EnergyReport {
    let rows: Vec<f64> = cells.iter().map(|r| pairwise_sum(r)).collect();
    let energy = pairwise_sum(&rows);
    EnergyReport {
        energy,
        fourier_normalized: energy / (4.0 * PI * PI),
        h: f.h,
        origin: f.origin,
        nx: f.nx,
        ny: f.ny,
        breakdown: detail.then(|| cells.concat()),
    }
}

/// Grid energy of `F`. The grid needs at least 8 points per side.
pub fn plane_energy(f: &PlaneField) -> Result<EnergyReport> {
    plane_energy_with(f, false)
}

pub fn plane_energy_with(f: &PlaneField, detail: bool) -> Result<EnergyReport> {
    if f.nx < 8 || f.ny < 8 {
        return Err(invalid("grid", format!("energy needs at least 8x8 points, got {}x{}", f.nx, f.ny)));
    }
    Ok(report(f, cell_rows(f), detail))
}

/// Grid energy without the size requirement, for small patches.
pub(crate) fn patch_energy(f: &PlaneField) -> f64 {
    report(f, cell_rows(f), false).energy
}

/// Energy of the cells lying inside `region`.
pub fn localized_energy(f: &PlaneField, region: &Window) -> Result<f64> {
    let (lo, hi) = (region.min(), region.max());
    let tol = 1e-9 * f.h;
    let inside = |x: f64, y: f64| x >= lo[0] - tol && x <= hi[0] + tol && y >= lo[1] - tol && y <= hi[1] + tol;
    let rows: Vec<f64> = (0..f.ny - 1)
        .into_par_iter()
        .map(|j| {
            let terms: Vec<f64> = (0..f.nx - 1)
                .filter(|&i| inside(f.x(i), f.y(j)) && inside(f.x(i + 1), f.y(j + 1)))
                .map(|i| cell_energy(f, i, j))
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&rows))
}

/// `∫_{cell} P_y(u) du` and `∫_{cell} P_y(u) λ du` for the cell `[u0, u0 + g]`
/// with `λ = (u - u0) / g` and `P_y(u) = y / (π (u^2 + y^2))`.
fn cell_moments(u0: f64, g: f64, y: f64) -> (f64, f64) {
    let u1 = u0 + g;
    if u0.abs().min(u1.abs()) >= 4.0 * g {
        // smooth on the cell: Gauss-Legendre is exact to rounding
        let rule = gl8();
        let (mut b, mut a) = (0.0, 0.0);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = u0 + g * t;
            let p = y / (PI * (u * u + y * y));
            b += w * p;
            a += w * p * t;
        }
        return (b * g, a * g);
    }
    let den = y * y + u0 * u1;
    let b = if den > 0.0 {
        (g * y / den).atan() / PI
    } else {
        ((u1 / y).atan() - (u0 / y).atan()) / PI
    };
    let i1 = y / (2.0 * PI) * ((u1 * u1 - u0 * u0) / (u0 * u0 + y * y)).ln_1p();
    (b, (i1 - u0 * b) / g)
}

/// The Poisson extension `F(x, y0 ± y) = ∫ P_y(x - t) f(t) dt` of data on one
/// horizontal line, on the grid of `window` with spacing `h`.
///
/// The data is linear between its samples and constant beyond its window; both
/// parts are integrated in closed form, so `F` reproduces `f` on the line. The
/// line must be a grid row and `h` a multiple of the sample spacing, with the
/// plane grid columns on sample points.
pub fn poisson_extend(f: &EdgeFunction, h: f64, window: &Window) -> Result<PoissonExtension> {
    let g = &*f.graph;
    let start = match (g.edges.len(), g.edges.first().map(|e| e.embedding)) {
        (1, Some(Embedding::Segment { start, dir })) if dir[1].abs() < 1e-12 && dir[0] > 0.0 => start,
        _ => {
            return Err(Error::IncompatibleKind {
                kind: "poisson".into(),
                reason: "needs data on a single horizontal line".into(),
            })
        }
    };
    let n = PlaneField::window_points(window, h)?;
    let origin = window.min();
    let s = &f.samples[0];
    let cells = s.len() - 1;
    let gs = f.spacing(0);
    let integer = |v: f64, what: &str| -> Result<i64> {
        let r = v.round();
        if (v - r).abs() > 1e-6 {
            return Err(Error::Misaligned(format!("{what} ({v}) is not an integer")));
        }
        Ok(r as i64)
    };
    let row = integer((start[1] - origin[1]) / h, "line offset in plane cells")?;
    if row < 0 || row >= n as i64 {
        return Err(Error::Misaligned(format!("line y = {} is outside the window", start[1])));
    }
    let q = integer(h / gs, "plane spacing over sample spacing")?;
    if q < 1 {
        return Err(Error::Misaligned("plane spacing finer than the sample spacing".into()));
    }
    // column i sits on sample k = q i - off
    let off = integer((start[0] - origin[0]) / gs, "column offset in sample cells")?;

    let (fl, fr) = (s[0], s[cells]);
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let spread = s.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    let mut warnings = Vec::new();
    if spread > 0.0 && (fl - mean).abs().max((fr - mean).abs()) > 1e-3 * spread {
        warnings.push(format!(
            "data does not decay at the window edges (ends {fl}, {fr}); constant tails are assumed"
        ));
    }

    let x_of = |i: usize| origin[0] + i as f64 * h;
    let t0 = start[0];
    let tn = start[0] + cells as f64 * gs;
    // d = k - (q i - off) ranges over [dmin, dmax]
    let dmin = -(q * (n as i64 - 1) - off);
    let dmax = cells as i64 + off;
    let row_values = |y: f64| -> Vec<f64> {
        let len = (dmax - dmin + 2) as usize;
        // moments of cell c = [c g, (c + 1) g] in u = t - x, c from dmin - 1
        let mom: Vec<(f64, f64)> = (0..len).map(|k| cell_moments((dmin - 1 + k as i64) as f64 * gs, gs, y)).collect();
        let at = |c: i64| mom[(c - dmin + 1) as usize];
        (0..n)
            .map(|i| {
                let x = x_of(i);
                let base = q * i as i64 - off;
                let mut terms = Vec::with_capacity(cells + 3);
                for (k, &v) in s.iter().enumerate() {
                    let d = k as i64 - base;
                    let mut w = 0.0;
                    if k > 0 {
                        w += at(d - 1).1;
                    }
                    if k < cells {
                        let (b, a) = at(d);
                        w += b - a;
                    }
                    terms.push(v * w);
                }
                terms.push(fl * (0.5 + ((t0 - x) / y).atan() / PI));
                terms.push(fr * (0.5 - ((tn - x) / y).atan() / PI));
                pairwise_sum(&terms)
            })
            .collect()
    };
    let line: Vec<f64> = (0..n)
        .map(|i| {
            let k = q * i as i64 - off;
            if k < 0 {
                fl
            } else if k > cells as i64 {
                fr
            } else {
                s[k as usize]
            }
        })
        .collect();
    let row = row as usize;
    let depth = row.max(n - 1 - row);
    let by_distance: Vec<Vec<f64>> = (1..=depth).into_par_iter().map(|m| row_values(m as f64 * h)).collect();
    let mut values = Vec::with_capacity(n * n);
    for j in 0..n {
        let m = j.abs_diff(row);
        values.extend_from_slice(if m == 0 { &line } else { &by_distance[m - 1] });
    }
    Ok(PoissonExtension {
        field: PlaneField::new(origin, h, n, n, values)?,
        line_row: row,
        tails: (fl, fr),
        warnings,
    })
}

/// Rows `from_row..` of `F`, as a field of its own.
pub fn rows_from(f: &PlaneField, from_row: usize) -> Result<PlaneField> {
    if from_row + 2 > f.ny {
        return Err(invalid("row", format!("row {from_row} leaves fewer than 2 rows of {}", f.ny)));
    }
    PlaneField::new(
        [f.origin[0], f.y(from_row)],
        f.h,
        f.nx,
        f.ny - from_row,
        f.values[from_row * f.nx..].to_vec(),
    )
}

/// Reflects a field given on `y >= y0` (its first row) evenly across `y0`.
pub fn even_reflection(f: &PlaneField) -> PlaneField {
    let (nx, ny) = (f.nx, f.ny);
    let mut values = Vec::with_capacity(nx * (2 * ny - 1));
    for j in (1..ny).rev() {
        values.extend_from_slice(&f.values[j * nx..(j + 1) * nx]);
    }
    values.extend_from_slice(&f.values);
    PlaneField {
        origin: [f.origin[0], f.origin[1] - (ny - 1) as f64 * f.h],
        h: f.h,
        nx,
        ny: 2 * ny - 1,
        values,
    }
}

/// Fills the interior of an `nx` by `ny` grid patch with the discrete
/// harmonic function matching its outer ring of values.
pub(crate) fn fill_patch(values: &mut [f64], nx: usize, ny: usize) -> Result<CgOutcome> {
    let (mx, my) = (nx.saturating_sub(2), ny.saturating_sub(2));
    if mx == 0 || my == 0 {
        return Ok(CgOutcome { iterations: 0, residual: 0.0 });
    }
    let idx = |i: usize, j: usize| j * nx + i;
    // right-hand side from the boundary ring
    let mut b = vec![0.0; mx * my];
    for j in 0..my {
        for i in 0..mx {
            let (gi, gj) = (i + 1, j + 1);
            let mut acc = 0.0;
            if gi == 1 {
                acc += values[idx(0, gj)];
            }
            if gi == nx - 2 {
                acc += values[idx(nx - 1, gj)];
            }
            if gj == 1 {
                acc += values[idx(gi, 0)];
            }
            if gj == ny - 2 {
                acc += values[idx(gi, ny - 1)];
            }
            b[j * mx + i] = acc;
        }
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        for j in 0..my {
            for i in 0..mx {
                let mut acc = 4.0 * v[j * mx + i];
                if i > 0 {
                    acc -= v[j * mx + i - 1];
                }
                if i + 1 < mx {
                    acc -= v[j * mx + i + 1];
                }
                if j > 0 {
                    acc -= v[(j - 1) * mx + i];
                }
                if j + 1 < my {
                    acc -= v[(j + 1) * mx + i];
                }
                out[j * mx + i] = acc;
            }
        }
    };
    let mut x = vec![0.0; mx * my];
    let out = conjugate_gradient(apply, &b, &mut x, 1e-12, 20 * mx * my + 100)?;
    for j in 0..my {
        for i in 0..mx {
            values[idx(i + 1, j + 1)] = x[j * mx + i];
        }
    }
    Ok(out)
}

/// Max-norm of the 5-point Laplacian over the interior points.
pub fn laplacian_residual(f: &PlaneField) -> f64 {
    let mut worst = 0.0f64;
    for j in 1..f.ny - 1 {
        for i in 1..f.nx - 1 {
            let r = 4.0 * f.at(i, j) - f.at(i - 1, j) - f.at(i + 1, j) - f.at(i, j - 1) - f.at(i, j + 1);
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// The discrete harmonic function on a square with the boundary data `f`
/// (a function on a square graph), on a grid of spacing `h`.
pub fn harmonic_fill_square(boundary: &EdgeFunction, h: f64) -> Result<PlaneField> {
    let g = &*boundary.graph;
    let side = match g.family {
        Some(GraphFamily::Square { side }) => side,
        _ => {
            return Err(Error::IncompatibleKind {
                kind: "harmonic fill".into(),
                reason: "needs data on a square graph".into(),
            })
        }
    };
    let scale = boundary.samples.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let defect = boundary.continuity_defect();
    if defect > 1e-9 * scale {
        return Err(invalid("boundary", format!("data jumps by {defect:e} at a corner")));
    }
    let cells = side / h;
    let n = cells.round();
    if (cells - n).abs() > 1e-9 * cells || n < 2.0 {
        return Err(Error::Misaligned(format!("spacing {h} does not divide the side {side}")));
    }
    let n = n as usize;
    let origin = g.vertices.iter().fold([f64::INFINITY; 2], |m, v| [m[0].min(v[0]), m[1].min(v[1])]);
    let np = n + 1;
    let mut values = vec![0.0; np * np];
    for (e, edge) in g.edges.iter().enumerate() {
        for k in 0..=n {
            let x = k as f64 * h;
            let p = edge.point(x.min(edge.length));
            let i = ((p[0] - origin[0]) / h).round() as usize;
            let j = ((p[1] - origin[1]) / h).round() as usize;
            values[j * np + i] = boundary.value(e, x.min(edge.length));
        }
    }
    fill_patch(&mut values, np, np)?;
    PlaneField::new(origin, h, np, np, values)
}
