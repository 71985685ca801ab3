//! Fractional Sobolev seminorms on metric graphs, trace and extension
//! operators between the plane and embedded graphs, and renormalized energies
//! on the Sierpinski gasket and carpet.

pub mod cli;
pub mod conformal_lab;
pub mod error;
pub mod extension;
pub mod fractal_lab;
pub mod functions;
pub mod gp_lab;
pub mod graphs;
pub mod quadrature;
pub mod reduce;
pub mod report;
pub mod seminorms;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};

// The guide's code blocks run as doctests, one module per chapter.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/line-seminorms.md")]
    pub mod line_seminorms {}
    #[doc = include_str!("../../../book/src/metric-graphs.md")]
    pub mod metric_graphs {}
    #[doc = include_str!("../../../book/src/extension.md")]
    pub mod extension {}
    #[doc = include_str!("../../../book/src/graph-paper.md")]
    pub mod graph_paper {}
    #[doc = include_str!("../../../book/src/fractals.md")]
    pub mod fractals {}
    #[doc = include_str!("../../../book/src/conformal.md")]
    pub mod conformal {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
