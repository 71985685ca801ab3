use std::sync::Arc;

use proptest::prelude::*;
use tracelab::extension::{even_reflection, harmonic_fill_square, plane_energy};
use tracelab::fractal_lab::{
    build_fractal, carpet_edge_scaling_factor, compose_cell, sc_graph_energy, sg_graph_energy, sg_harmonic_extend,
    sg_renormalized_profile, FractalKind, VertexFunction,
};
use tracelab::functions::{sample_on_graph, EdgeFunction, FunctionFamily, PlaneField, Resolution};
use tracelab::gp_lab::trace_levels;
use tracelab::graphs::{build_graph, restrict_graph, GraphFamily, MetricGraph, Window};
use tracelab::seminorms::{edge_double_integral, seminorm_with, NormKind, NormOptions};
use tracelab::spectral::line_spectrum;

fn quick() -> NormOptions {
    NormOptions {
        refinement: false,
        ..Default::default()
    }
}

fn line(r: f64) -> Arc<MetricGraph> {
    Arc::new(build_graph(GraphFamily::IntervalLine, Window::centered(r).unwrap()).unwrap())
}

/// Random samples on `[-R, R]` that decay to zero at both ends.
fn bump_samples() -> impl Strategy<Value = Vec<f64>> {
    // 4k cells on a window of length 4 keep unit bands on the grid
    (2usize..10).prop_flat_map(|k| prop::collection::vec(-2.0f64..2.0, 4 * k + 1)).prop_map(|mut v| {
        let n = v.len();
        v[0] = 0.0;
        v[n - 1] = 0.0;
        v
    })
}

fn on_line(samples: Vec<f64>, r: f64) -> EdgeFunction {
    EdgeFunction::new(line(r), vec![samples], true).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn graph_paper_counts_and_validity(k in 2usize..12, j in 0i32..3) {
        let delta = 0.5f64.powi(j);
        let l = k as f64 * delta;
        let w = Window::centered(l / 2.0).unwrap();
        let g = build_graph(GraphFamily::GraphPaper { spacing: delta }, w).unwrap();
        // with the window centered on the lattice only even k fills it exactly
        if k % 2 == 0 {
            prop_assert_eq!(g.edges.len(), 2 * k * (k + 1));
        }
        prop_assert!(g.validate().is_ok());
        let region = Window::new([0.1, -0.2], l / 3.0).unwrap();
        let once = restrict_graph(&g, region);
        let twice = restrict_graph(&once, region);
        prop_assert_eq!(once.edges.len(), twice.edges.len());
        prop_assert_eq!(once.vertices, twice.vertices);
    }

    #[test]
    fn seminorm_is_a_quadratic_form_modulo_constants(s in bump_samples(), c in -3.0f64..3.0, a in -3.0f64..3.0) {
        let f = on_line(s.clone(), 2.0);
        let base = seminorm_with(&f, NormKind::HalfLine, &quick()).unwrap().value;
        prop_assert!(base >= 0.0);
        let shifted = seminorm_with(&f.map(|v| v + c), NormKind::HalfLine, &quick()).unwrap().value;
        prop_assert!(rel(base, shifted) < 1e-9, "{} {}", base, shifted);
        let scaled = seminorm_with(&f.map(|v| a * v), NormKind::HalfLine, &quick()).unwrap().value;
        prop_assert!((scaled - a * a * base).abs() <= 1e-12 * base.max(1e-300) + 1e-300);
        let tilde = seminorm_with(&f, NormKind::TildeHalfLine, &quick()).unwrap().value;
        prop_assert!(tilde <= base * (1.0 + 1e-12));
    }

    #[test]
    fn half_line_is_dilation_invariant(s in bump_samples(), a in 0.25f64..4.0) {
        let x = seminorm_with(&on_line(s.clone(), 2.0), NormKind::HalfLine, &quick()).unwrap().value;
        let y = seminorm_with(&on_line(s, 2.0 * a), NormKind::HalfLine, &quick()).unwrap().value;
        prop_assert!(rel(x, y) < 1e-10, "{} {}", x, y);
    }

    #[test]
    fn parseval(s in bump_samples()) {
        let f = on_line(s.clone(), 3.0);
        let spec = line_spectrum(&f).unwrap();
        let n = s.len() - 1;
        let h = f.spacing(0);
        let mut spatial: f64 = s[1..n].iter().map(|v| v * v).sum::<f64>() + (0.5 * (s[0] + s[n])).powi(2);
        spatial *= h;
        prop_assert!((spec.energy() - spatial).abs() <= 1e-8 * spatial.max(1e-300));
    }

    #[test]
    fn reflection_doubles_plane_energy(a in -2.0f64..2.0, b in 0.2f64..3.0, c in -1.0f64..1.0) {
        let w = Window::new([0.0, 1.0], 1.0).unwrap();
        let f = PlaneField::from_fn(&w, 1.0 / 16.0, |x, y| a * (b * x).sin() * (-y).exp() + c * x * y).unwrap();
        let (e1, e2) = (plane_energy(&f).unwrap().energy, plane_energy(&even_reflection(&f)).unwrap().energy);
        prop_assert!((e2 - 2.0 * e1).abs() <= 1e-12 * e2.max(1e-300));
    }

    #[test]
    fn harmonic_fill_beats_perturbations(a in -2.0f64..2.0, b in -2.0f64..2.0, noise in prop::collection::vec(-0.1f64..0.1, 49)) {
        let g = build_graph(GraphFamily::Square { side: 1.0 }, Window::centered(1.0).unwrap()).unwrap();
        let fam = FunctionFamily::Gaussian { scale: 1.0 + a * a, center: [a, b] };
        let boundary = sample_on_graph(&fam, g, Resolution::PerEdge(8)).unwrap();
        let f = harmonic_fill_square(&boundary, 0.125).unwrap();
        let e0 = plane_energy(&f).unwrap().energy;
        let mut g = f.clone();
        for j in 1..8 {
            for i in 1..8 {
                g.values[j * 9 + i] += noise[(j - 1) * 7 + (i - 1)];
            }
        }
        prop_assert!(plane_energy(&g).unwrap().energy >= e0 - 1e-9);
    }

    #[test]
    fn gasket_profiles_never_decrease(vals in prop::collection::vec(-1.0f64..1.0, 123)) {
        let a = build_fractal(FractalKind::Gasket, 4).unwrap();
        let f = VertexFunction::new(a, vals).unwrap();
        let p = sg_renormalized_profile(&f).unwrap();
        prop_assert!(p.violations.is_empty());
        let whole = (5.0f64 / 3.0).powi(4) * sg_graph_energy(&f).unwrap();
        let parts: f64 = (0..3).map(|i| (5.0f64 / 3.0).powi(4) * sg_graph_energy(&compose_cell(&f, i).unwrap()).unwrap()).sum();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1e-300));
    }

    #[test]
    fn gasket_harmonic_extensions_keep_energy(b in prop::collection::vec(-3.0f64..3.0, 3), m in 1usize..5) {
        let f = VertexFunction::new(build_fractal(FractalKind::Gasket, 0).unwrap(), b).unwrap();
        let e0 = sg_graph_energy(&f).unwrap();
        let h = sg_harmonic_extend(&f, m).unwrap();
        let e = (5.0f64 / 3.0).powi(m as i32) * sg_graph_energy(&h).unwrap();
        prop_assert!((e - e0).abs() <= 1e-12 * e0.max(1e-12));
    }

    #[test]
    fn carpet_energy_is_quadratic(vals in prop::collection::vec(-1.0f64..1.0, 16), a in -3.0f64..3.0) {
        let c = Arc::new(build_fractal(FractalKind::Carpet, 1).unwrap());
        let f = VertexFunction::new(c.clone(), vals.clone()).unwrap();
        let g = VertexFunction::new(c, vals.iter().map(|v| a * v).collect()).unwrap();
        let (e, ea) = (sc_graph_energy(&f).unwrap(), sc_graph_energy(&g).unwrap());
        prop_assert!(e >= 0.0);
        prop_assert!((ea - a * a * e).abs() <= 1e-12 * ea.max(1e-300) + 1e-15);
    }

    #[test]
    fn carpet_edge_scaling(beta in 0.55f64..0.95, m in 1i32..4) {
        let p = 1.0 + 2.0 * beta;
        let data: Vec<f64> = (0..=27).map(|k| (k as f64 / 27.0 * 5.0).cos()).collect();
        let edge = |len: f64| {
            let g = MetricGraph::from_segments(vec![[0.0, 0.0], [len, 0.0]], &[(0, 1)]).unwrap();
            edge_double_integral(&EdgeFunction::new(g, vec![data.clone()], true).unwrap(), 0, 0, p).unwrap()
        };
        let want = carpet_edge_scaling_factor(beta).powi(m) * edge(1.0);
        prop_assert!(rel(edge(3f64.powi(-m)), want) < 1e-10);
    }

    #[test]
    fn nested_traces_agree(cx in -0.5f64..0.5, cy in -0.5f64..0.5) {
        let fam = FunctionFamily::Gaussian { scale: 2.0, center: [cx, cy] };
        let f = PlaneField::from_family(&fam, &Window::centered(1.0).unwrap(), 1.0 / 16.0).unwrap();
        let levels = trace_levels(&f, 2, &[0, -1, -2]).unwrap();
        let fine = &levels[2].1;
        for (_, coarse) in &levels[..2] {
            for (e, edge) in coarse.graph.edges.iter().enumerate() {
                for (k, &v) in coarse.samples[e].iter().enumerate() {
                    let p = edge.point(k as f64 * coarse.spacing(e));
                    // locate the fine edge through p and compare the sample there
                    let hit = fine.graph.edges.iter().enumerate().find_map(|(e2, ed)| {
                        let q0 = fine.graph.vertices[ed.a];
                        let t = ((p[0] - q0[0]) + (p[1] - q0[1])) / ed.length * fine.cells(e2) as f64;
                        let on = ed.point(t.round() * fine.spacing(e2));
                        ((on[0] - p[0]).abs() < 1e-12 && (on[1] - p[1]).abs() < 1e-12 && t.round() >= 0.0 && t.round() as usize <= fine.cells(e2))
                            .then(|| fine.samples[e2][t.round() as usize])
                    });
                    prop_assert_eq!(hit, Some(v));
                }
            }
        }
    }
}

#[test]
fn thread_count_does_not_change_norms() {
    let f = sample_on_graph(&FunctionFamily::Cauchy { width: 1.0 }, line(16.0), Resolution::PerUnit(16.0)).unwrap();
    let g = build_graph(GraphFamily::GraphPaper { spacing: 0.5 }, Window::centered(2.0).unwrap()).unwrap();
    let gp = sample_on_graph(&FunctionFamily::gaussian(), g, Resolution::PerUnit(8.0)).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (
                seminorm_with(&f, NormKind::HalfLine, &NormOptions::default()).unwrap().value.to_bits(),
                seminorm_with(&gp, NormKind::GraphPaper, &NormOptions::default()).unwrap().value.to_bits(),
            )
        })
    };
    let one = run(1);
    for t in [2, 3, 8] {
        assert_eq!(run(t), one);
    }
}
