//! Gauss–Legendre rules and closed-form integrals of piecewise-linear data.

use std::sync::OnceLock;

/// Nodes and weights of a Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[0, 1]`, computed by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let h = b - a;
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(a + h * x);
        }
        acc * h
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The fixed 4-point rule used for every off-diagonal cell pair.
pub fn gl4() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(4))
}

pub(crate) fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

pub(crate) fn gl24() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

/// Integrates `f(x, y)` over the triangle `0 <= y <= x <= 1` with a
/// collapsed tensor rule.
pub fn triangle_lower<F: Fn(f64, f64) -> f64>(rule: &GaussLegendre, f: F) -> f64 {
    let mut acc = 0.0;
    for (xi, wi) in rule.nodes.iter().zip(&rule.weights) {
        for (eta, wj) in rule.nodes.iter().zip(&rule.weights) {
            acc += wi * wj * xi * f(*xi, xi * eta);
        }
    }
    acc
}

/// `∫ g(u)^2 dx` over a cell of width `h` where `g` is linear from `g0` to `g1`.
pub fn linear_square(g0: f64, g1: f64, h: f64) -> f64 {
    h * (g0 * g0 + g0 * g1 + g1 * g1) / 3.0
}

/// `∫_{u0}^{u1} g(u)^2 u^q du` for `g` linear from `g0` (at `u0`) to `g1`
/// (at `u1`), `q` in `(-2, -1]`.
///
/// Returns `+inf` when `u0 == 0` and `g0 != 0`, the only case where the
/// integral diverges.
pub fn linear_square_power(g0: f64, g1: f64, u0: f64, u1: f64, q: f64) -> f64 {
    let width = u1 - u0;
    let slope = (g1 - g0) / width;
    if u0 == 0.0 {
        if g0 != 0.0 {
            return f64::INFINITY;
        }
        return slope * slope * u1.powf(q + 3.0) / (q + 3.0);
    }
    if width <= 0.5 * u0 {
        // smooth on the cell: the nearest singularity is u0 away
        return gl8().integrate(0.0, width, |t| {
            let g = g0 + slope * t;
            g * g * (u0 + t).powf(q)
        });
    }
    let a = g0 - slope * u0;
    let b = slope;
    let pw = |k: f64| {
        let e = q + k;
        if e.abs() < 1e-14 {
            (u1 / u0).ln()
        } else {
            (u1.powf(e) - u0.powf(e)) / e
        }
    };
    a * a * pw(1.0) + 2.0 * a * b * pw(2.0) + b * b * pw(3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials() {
        for n in [1usize, 2, 4, 8, 24] {
            let r = GaussLegendre::new(n);
            let total: f64 = r.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-14, "n={n}");
            let deg = 2 * n - 1;
            let v = r.integrate(0.0, 2.0, |x| x.powi(deg as i32));
            let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert!((v - exact).abs() < 1e-12 * exact, "n={n}");
        }
    }

    #[test]
    fn triangle_area_and_moment() {
        let r = GaussLegendre::new(6);
        assert!((triangle_lower(&r, |_, _| 1.0) - 0.5).abs() < 1e-15);
        // ∫∫_{y<x} x y = 1/8
        assert!((triangle_lower(&r, |x, y| x * y) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn power_integrals_match_fine_quadrature() {
        let fine = GaussLegendre::new(40);
        for &(g0, g1, u0, u1, q) in &[
            (0.3, -0.7, 0.5, 0.75, -1.0),
            (1.0, 2.0, 0.1, 0.3, -1.0),
            (0.2, 0.9, 3.0, 3.25, -1.4),
            (-0.5, 0.5, 0.25, 0.5, -1.7),
        ] {
            let s = (g1 - g0) / (u1 - u0);
            let want = fine.integrate(u0, u1, |u| {
                let g: f64 = g0 + s * (u - u0);
                g * g * u.powf(q)
            });
            let got = linear_square_power(g0, g1, u0, u1, q);
            assert!((got - want).abs() < 1e-12 * want.abs().max(1e-300), "{got} {want}");
        }
    }

    #[test]
    fn first_cell_closed_form() {
        // ∫_0^h (s u)^2 / u du = s^2 h^2 / 2
        assert!((linear_square_power(0.0, 0.5, 0.0, 0.25, -1.0) - 4.0 * 0.0625 / 2.0).abs() < 1e-15);
        assert!(linear_square_power(0.1, 0.5, 0.0, 0.25, -1.0).is_infinite());
    }
}
