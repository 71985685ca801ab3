//! Graph approximations of the Sierpinski gasket and carpet, their
//! renormalized energies, harmonic extensions, trace norms of exponent
//! `1 + 2β`, and resistance estimates of the carpet constant.
//!
//! Vertices of a level-`m` approximation sit on an integer lattice of mesh
//! `2^-m` (gasket) or `3^-m` (carpet), so restriction between levels is an
//! exact index map.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graphs::{MetricGraph, Point};

pub mod carpet;
pub mod gasket;

pub use carpet::{carpet_beta, carpet_edge_scaling_factor, sc_graph_energy, sc_renorm_estimate, ResistanceRow};
pub use gasket::{
    compose_cell, edge_scaling_factor, gasket_beta, h_beta_trace_profile, sg_graph_energy, sg_harmonic_extend,
    sg_renormalized_profile, HBetaProfile, HBetaRow, RenormProfile, RenormRow,
};

/// Deepest supported gasket level.
pub const SG_MAX_LEVEL: usize = 8;
/// Deepest supported carpet level.
pub const SC_MAX_LEVEL: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FractalKind {
    Gasket,
    Carpet,
}

impl FractalKind {
    pub fn max_level(self) -> usize {
        match self {
            FractalKind::Gasket => SG_MAX_LEVEL,
            FractalKind::Carpet => SC_MAX_LEVEL,
        }
    }

    /// Contraction ratio of the defining maps.
    pub fn ratio(self) -> f64 {
        match self {
            FractalKind::Gasket => 0.5,
            FractalKind::Carpet => 1.0 / 3.0,
        }
    }

    fn base(self) -> i64 {
        match self {
            FractalKind::Gasket => 2,
            FractalKind::Carpet => 3,
        }
    }
}

/// `Φ(p) = scale p + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineMap {
    pub scale: f64,
    pub shift: Point,
}

impl AffineMap {
    pub fn apply(&self, p: Point) -> Point {
        [self.scale * p[0] + self.shift[0], self.scale * p[1] + self.shift[1]]
    }
}

/// Level-`m` approximation with deduplicated vertices.
#[derive(Debug, Clone)]
pub struct FractalApprox {
    pub kind: FractalKind,
    pub level: usize,
    /// Addresses: digits `0..3` for the gasket, `1..=8` for the carpet.
    pub cells: Vec<Vec<u8>>,
    /// Corner vertex ids per cell: `Φ_w q_0, Φ_w q_1, Φ_w q_2` for the
    /// gasket, counterclockwise from the lower left for the carpet.
    pub cell_vertices: Vec<Vec<usize>>,
    /// Integer coordinates in units of the level mesh. Gasket coordinates
    /// are in the basis `q_1, q_2`.
    pub lattice: Vec<[i64; 2]>,
    pub vertices: Vec<Point>,
    /// Cell sides; shared carpet sides appear once.
    pub edges: Vec<(usize, usize)>,
    pub maps: Vec<AffineMap>,
    index: HashMap<[i64; 2], usize>,
}

impl FractalApprox {
    /// Side length of a level cell.
    pub fn edge_length(&self) -> f64 {
        self.kind.ratio().powi(self.level as i32)
    }

    pub fn vertex_at(&self, lattice: [i64; 2]) -> Option<usize> {
        self.index.get(&lattice).copied()
    }

    /// The approximation as a metric graph of straight edges.
    pub fn to_metric_graph(&self) -> Result<MetricGraph> {
        MetricGraph::from_segments(self.vertices.clone(), &self.edges)
    }

    fn lattice_scale(&self, to: &FractalApprox) -> i64 {
        self.kind.base().pow((to.level - self.level) as u32)
    }
}

/// All level-`m` cells, their corners and sides.
pub fn build_fractal(kind: FractalKind, m: usize) -> Result<FractalApprox> {
    if m > kind.max_level() {
        return Err(Error::LevelTooDeep {
            what: match kind {
                FractalKind::Gasket => "the gasket",
                FractalKind::Carpet => "the carpet",
            },
            level: m,
            bound: kind.max_level(),
        });
    }
    match kind {
        FractalKind::Gasket => Ok(gasket::build(m)),
        FractalKind::Carpet => Ok(carpet::build(m)),
    }
}

/// All words of length `m` over `digits`, in lexicographic order.
fn words(digits: &[u8], m: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|w| {
                digits.iter().map(move |&d| {
                    let mut w = w.clone();
                    w.push(d);
                    w
                })
            })
            .collect();
    }
    out
}

/// Interns lattice points in order of first appearance.
#[derive(Default)]
struct Interner {
    index: HashMap<[i64; 2], usize>,
    lattice: Vec<[i64; 2]>,
}

impl Interner {
    fn id(&mut self, p: [i64; 2]) -> usize {
        let next = self.lattice.len();
        *self.index.entry(p).or_insert_with(|| {
            self.lattice.push(p);
            next
        })
    }
}

/// One value per vertex of an approximation.
#[derive(Debug, Clone)]
pub struct VertexFunction {
    pub approx: Arc<FractalApprox>,
    pub values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(approx: impl Into<Arc<FractalApprox>>, values: Vec<f64>) -> Result<Self> {
        let approx = approx.into();
        if values.len() != approx.vertices.len() {
            return Err(invalid(
                "values",
                format!("{} values for {} vertices", values.len(), approx.vertices.len()),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite value {v}")));
        }
        Ok(VertexFunction { approx, values })
    }

    /// Evaluates `f` at the vertex coordinates.
    pub fn from_fn(approx: impl Into<Arc<FractalApprox>>, f: impl Fn(Point) -> f64) -> Result<Self> {
        let approx = approx.into();
        let values = approx.vertices.iter().map(|&p| f(p)).collect();
        VertexFunction::new(approx, values)
    }

    pub fn level(&self) -> usize {
        self.approx.level
    }

    /// Restriction to the vertices of level `m <= self.level()`.
    pub fn restrict(&self, m: usize) -> Result<VertexFunction> {
        let fine = &*self.approx;
        if m > fine.level {
            return Err(invalid("level", format!("cannot restrict level {} data to level {m}", fine.level)));
        }
        if m == fine.level {
            return Ok(self.clone());
        }
        let coarse = build_fractal(fine.kind, m)?;
        let s = coarse.lattice_scale(fine);
        let values = coarse
            .lattice
            .iter()
            .map(|p| self.values[fine.vertex_at([p[0] * s, p[1] * s]).expect("nested vertex sets")])
            .collect();
        VertexFunction::new(coarse, values)
    }
}
