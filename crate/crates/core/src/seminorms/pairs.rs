//! The cell-pair engine for `∫∫ |f(x) - f(y)|^2 K(x, y) dx dy` over one
//! uniformly sampled edge, and the single integrals used for junctions and
//! for the parts of infinite rays lying outside the window.
//!
//! With `f` linear on each cell `[i h, (i + 1) h]` the double integral splits
//! into cell pairs:
//! * same cell: `c s^2 h^(4-p) 2/((3-p)(4-p))` exactly, plus the remainder;
//! * neighbouring cells: the singular part `c |Δ|^2 / |x - y|^p` reduces to two
//!   moments of the unit square that depend only on `p`, plus the remainder;
//! * all other pairs: 4-point Gauss–Legendre per axis.
//!
//! When the kernel is cut off at `|x - y| = band` the cut crosses exactly one
//! diagonal of cell pairs, integrated over the lower triangle.

use std::sync::OnceLock;

use rayon::prelude::*;

use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::quadrature::{gl24, gl4, gl8, linear_square, linear_square_power, triangle_lower};
use crate::reduce::pairwise_sum;

/// `∫∫_{[0,1]^2, |a-b|}` moment: `∫_0^1∫_0^1 |a - b|^(2-p) da db`.
fn same_cell_moment(p: f64) -> f64 {
    2.0 / ((3.0 - p) * (4.0 - p))
}

/// Moments `A = ∫∫ u^2 / (u+v)^p` and `B = ∫∫ u v / (u+v)^p` over the part of
/// the unit square with `u + v <= 1` (exact) and `u + v >= 1` (quadrature).
#[derive(Debug, Clone, Copy)]
struct AdjacentMoments {
    a_near: f64,
    b_near: f64,
    a_far: f64,
    b_far: f64,
}

impl AdjacentMoments {
    fn new(p: f64) -> Self {
        if p == 2.0 {
            static P2: OnceLock<AdjacentMoments> = OnceLock::new();
            return *P2.get_or_init(|| Self::compute(2.0));
        }
        Self::compute(p)
    }

    fn compute(p: f64) -> Self {
        // on u + v >= 1 write u = 1 - a, v = 1 - b with a + b <= 1, then
        // a = x - y, b = y over 0 <= y <= x <= 1
        let rule = gl24();
        let far = |g: &dyn Fn(f64, f64) -> f64| {
            triangle_lower(rule, |x, y| {
                let (u, v) = (1.0 - (x - y), 1.0 - y);
                g(u, v) / (u + v).powf(p)
            })
        };
        AdjacentMoments {
            a_near: 1.0 / (3.0 * (4.0 - p)),
            b_near: 1.0 / (6.0 * (4.0 - p)),
            a_far: far(&|u, _| u * u),
            b_far: far(&|u, v| u * v),
        }
    }
}

/// Cell values of `f` at the 4 Gauss nodes of every cell.
fn node_values(s: &[f64]) -> Vec<[f64; 4]> {
    let nodes = &gl4().nodes;
    s.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            [w[0] + d * nodes[0], w[0] + d * nodes[1], w[0] + d * nodes[2], w[0] + d * nodes[3]]
        })
        .collect()
}

/// `∫∫ |f(x) - f(y)|^2 K(x, y) dx dy` over `[0, L]^2` for the piecewise-linear
/// `f` with samples `s` at spacing `h`, parameters starting at `x0`.
///
/// With `periodic`, the parameter range is a circle of length `L` and the
/// first and last cells are neighbours; a mismatch `s[0] != s[N]` makes the
/// integral infinite.
pub fn double_integral(s: &[f64], h: f64, x0: f64, kernel: &dyn Kernel, periodic: bool) -> Result<f64> {
    let p = kernel.exponent();
    if !(2.0..3.0).contains(&p) {
        return Err(Error::Exponent(p));
    }
    let n = s.len().saturating_sub(1);
    if n == 0 {
        return Ok(0.0);
    }
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if periodic {
        if n < 4 {
            return Err(crate::error::invalid("resolution", "a closed edge needs at least 4 cells"));
        }
        if kernel.band().is_some() {
            return Err(crate::error::invalid("kernel", "banded kernels are not supported on closed edges"));
        }
        if (s[0] - s[n]).abs() > 1e-12 * scale {
            return Ok(f64::INFINITY);
        }
    }
    // pairs with index offset above `reach` contribute nothing
    let (reach, cut) = match kernel.band() {
        Some(w) => {
            let d = w / h;
            let dr = d.round();
            if (d - dr).abs() > 1e-9 * d.max(1.0) || dr < 1.0 {
                return Err(Error::Misaligned(format!(
                    "band {w} is not a positive multiple of the cell width {h}"
                )));
            }
            (dr as usize, Some(dr as usize))
        }
        None => (n - 1, None),
    };

    let c = kernel.singular_coeff();
    let hp = h.powf(4.0 - p);
    let same = c * hp * same_cell_moment(p);
    let mom = AdjacentMoments::new(p);
    let band_is_adjacent = cut == Some(1);
    let (a_adj, b_adj) = if band_is_adjacent {
        (mom.a_near, mom.b_near)
    } else {
        (mom.a_near + mom.a_far, mom.b_near + mom.b_far)
    };
    let slope: Vec<f64> = s.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let fv = node_values(s);
    let rule = gl4();
    let (xi, wi) = (&rule.nodes, &rule.weights);
    let period = n as f64 * h;
    let x_of = |i: usize| x0 + i as f64 * h;

    // kernel values per offset for translation-invariant kernels
    let table: Vec<[f64; 16]> = if kernel.translation_invariant() {
        (0..=reach.min(n - 1))
            .map(|d| {
                let mut t = [0.0; 16];
                if d >= 2 {
                    for a in 0..4 {
                        for b in 0..4 {
                            t[a * 4 + b] = kernel.eval(h * xi[a], h * (d as f64 + xi[b]));
                        }
                    }
                }
                t
            })
            .collect()
    } else {
        Vec::new()
    };

    let remainder_pair = |ia: usize, xa: f64, ib: usize, xb: f64| -> f64 {
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let d = fv[ia][a] - fv[ib][b];
                acc += wi[a] * wi[b] * d * d * kernel.remainder(xa + h * xi[a], xb + h * xi[b]);
            }
        }
        acc * h * h
    };
    // the neighbouring pair A = [c - h, c], B = [c, c + h]
    let adjacent = |ia: usize, xa: f64, ib: usize, xb: f64| -> f64 {
        let (s1, s2) = (slope[ia], slope[ib]);
        let mut v = c * hp * ((s1 * s1 + s2 * s2) * a_adj + 2.0 * s1 * s2 * b_adj);
        if kernel.has_remainder() {
            v += remainder_pair(ia, xa, ib, xb);
        }
        v
    };

    let row = |i: usize| -> f64 {
        let mut acc = same * slope[i] * slope[i];
        if kernel.has_remainder() {
            acc += remainder_pair(i, x_of(i), i, x_of(i));
        }
        let mut off = 0.0;
        let last = if periodic { n - 1 } else { (i + reach).min(n - 1) };
        for j in i + 1..=last {
            let d = j - i;
            let dd = if periodic { d.min(n - d) } else { d };
            let v = if dd == 1 {
                if d == 1 {
                    adjacent(i, x_of(i), j, x_of(j))
                } else {
                    // across the seam of a closed edge: cell n-1 then cell 0
                    adjacent(j, x_of(j), i, x_of(i) + period)
                }
            } else if Some(dd) == cut {
                // u = y - x <= band only below the pair's diagonal
                let (fi, fj) = (s[i], s[j]);
                let (gi, gj) = (s[i + 1] - s[i], s[j + 1] - s[j]);
                let base = d as f64;
                h * h
                    * triangle_lower(gl8(), |a, b| {
                        let diff = fi + gi * a - fj - gj * b;
                        let u = h * (base + b - a);
                        diff * diff / (u * u)
                    })
            } else {
                let mut t = 0.0;
                if kernel.translation_invariant() {
                    // closed edges: the kernel is periodic, so the plain offset works
                    let k = &table[d];
                    for a in 0..4 {
                        for b in 0..4 {
                            let df = fv[i][a] - fv[j][b];
                            t += wi[a] * wi[b] * df * df * k[a * 4 + b];
                        }
                    }
                } else {
                    for a in 0..4 {
                        for b in 0..4 {
                            let df = fv[i][a] - fv[j][b];
                            t += wi[a] * wi[b] * df * df * kernel.eval(x_of(i) + h * xi[a], x_of(j) + h * xi[b]);
                        }
                    }
                }
                t * h * h
            };
            off += v;
        }
        acc + 2.0 * off
    };
    let rows: Vec<f64> = (0..n).into_par_iter().map(row).collect();
    Ok(pairwise_sum(&rows))
}

/// `∫_0^L |g(x)|^2 / x dx` for `g` piecewise linear through `(x_k, g_k)`.
/// Infinite when `g(0)` is not zero (relative to `scale`).
pub fn inverse_weighted_square(xs: &[f64], g: &[f64], scale: f64) -> f64 {
    let tol = 1e-12 * scale.max(1.0);
    let mut terms = Vec::with_capacity(g.len());
    for k in 0..g.len() - 1 {
        let (u0, u1) = (xs[k], xs[k + 1]);
        if u1 <= u0 {
            continue;
        }
        let g0 = if k == 0 && g[0].abs() <= tol { 0.0 } else { g[k] };
        terms.push(linear_square_power(g0, g[k + 1], u0, u1, -1.0));
    }
    pairwise_sum(&terms)
}

/// Weight of the part of a ray beyond an open end: the double integral of a
/// function that stays constant past the end contributes
/// `2 ∫ |f(y) - f(end)|^2 w(u) dy`, `u` the distance from `y` to the end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailWeight {
    /// `w(u) = u^(1-p) / (p - 1)`
    Power(f64),
    /// `w(u) = 1/u - 1/band` for `u < band`
    Banded(f64),
}

/// The exterior contribution at one open end; `s[0]` is the sample at the end
/// and `s[k]` lies at distance `k h` from it.
pub fn tail_integral(s: &[f64], h: f64, weight: TailWeight) -> f64 {
    let end = s[0];
    let mut terms = Vec::with_capacity(s.len());
    for k in 0..s.len() - 1 {
        let (u0, u1) = (k as f64 * h, (k + 1) as f64 * h);
        let (g0, g1) = (s[k] - end, s[k + 1] - end);
        let t = match weight {
            TailWeight::Power(p) => linear_square_power(g0, g1, u0, u1, 1.0 - p) / (p - 1.0),
            TailWeight::Banded(w) => {
                if u0 >= w * (1.0 - 1e-12) {
                    break;
                }
                linear_square_power(g0, g1, u0, u1, -1.0) - linear_square(g0, g1, u1 - u0) / w
            }
        };
        terms.push(t);
    }
    2.0 * pairwise_sum(&terms)
}

/// Both ends of a segment of length `len` open, with limits `a` and `b`: the
/// interaction of the two exterior rays, `2 |a - b|^2 ∫∫ K` over
/// `x < 0`, `y > len`.
pub fn exterior_cross(a: f64, b: f64, len: f64, weight: TailWeight) -> f64 {
    let d2 = (a - b) * (a - b);
    if d2 == 0.0 {
        return 0.0;
    }
    match weight {
        TailWeight::Power(p) if p == 2.0 => f64::INFINITY,
        TailWeight::Power(p) => 2.0 * d2 * len.powf(2.0 - p) / ((p - 1.0) * (p - 2.0)),
        TailWeight::Banded(w) if w > len => 2.0 * d2 * ((w / len).ln() - (1.0 - len / w)),
        TailWeight::Banded(_) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::super::kernel::{Banded, Chordal, Power, Quadrant, Sinh};
    use super::*;
    use crate::quadrature::GaussLegendre;

    fn samples(n: usize, len: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=n).map(|i| f(i as f64 * len / n as f64)).collect()
    }

    /// Oracle for translation-invariant kernels:
    /// `2 ∫_0^umax K(u) ∫_0^{L-u} |f(x) - f(x+u)|^2 dx du` by composite
    /// Gauss-Legendre; no node ever sits on `u = 0`.
    fn oracle_ti(len: f64, umax: f64, f: impl Fn(f64) -> f64, k: impl Fn(f64) -> f64) -> f64 {
        oracle_kinked(len, umax, &[], f, k)
    }

    /// As [`oracle_ti`], splitting both integrals where `f` has kinks. The
    /// first outer piece is graded geometrically towards `u = 0`, where the
    /// integrand may be weakly singular.
    fn oracle_kinked(len: f64, umax: f64, kinks: &[f64], f: impl Fn(f64) -> f64, k: impl Fn(f64) -> f64) -> f64 {
        let rule = GaussLegendre::new(16);
        let composite = |a: f64, b: f64, pieces: usize, g: &dyn Fn(f64) -> f64| {
            let w = (b - a) / pieces as f64;
            (0..pieces).map(|i| rule.integrate(a + i as f64 * w, a + (i + 1) as f64 * w, g)).sum::<f64>()
        };
        let inner = |u: f64| {
            let mut cuts = vec![0.0, len - u];
            cuts.extend(kinks.iter().flat_map(|&c| [c, c - u]).filter(|&c| c > 0.0 && c < len - u));
            cuts.sort_by(f64::total_cmp);
            cuts.windows(2).map(|w| composite(w[0], w[1], 4, &|x| (f(x) - f(x + u)).powi(2))).sum::<f64>()
        };
        let outer = |u: f64| k(u) * inner(u);
        let mut marks = vec![0.0, len];
        marks.extend_from_slice(kinks);
        let mut cuts = vec![0.0, umax];
        for a in &marks {
            cuts.extend(marks.iter().map(|b| (a - b).abs()).filter(|&d| d > 1e-12 && d < umax));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        // below eps the differences cancel, so use I(u) ~ I(eps) (u / eps)^2
        let levels = 20;
        let eps = cuts[1] * 0.5f64.powi(levels);
        let mut acc = (0..levels)
            .map(|l| rule.integrate(cuts[1] * 0.5f64.powi(l + 1), cuts[1] * 0.5f64.powi(l), &outer))
            .sum::<f64>();
        let moment = (0..200)
            .map(|l| rule.integrate(eps * 0.5f64.powi(l + 1), eps * 0.5f64.powi(l), |u| u * u * k(u)))
            .sum::<f64>();
        acc += inner(eps) / (eps * eps) * moment;
        acc += cuts[1..].windows(2).map(|w| composite(w[0], w[1], 8, &outer)).sum::<f64>();
        2.0 * acc
    }

    /// Brute-force tensor rule for kernels without translation invariance;
    /// `diag` is the limit of the integrand on `x = y`.
    fn brute(len: f64, pieces: usize, g: impl Fn(f64, f64) -> f64, diag: impl Fn(f64) -> f64) -> f64 {
        let rule = GaussLegendre::new(12);
        let h = len / pieces as f64;
        let mut acc = 0.0;
        for i in 0..pieces {
            for j in 0..pieces {
                for (a, wa) in rule.nodes.iter().zip(&rule.weights) {
                    for (b, wb) in rule.nodes.iter().zip(&rule.weights) {
                        let (x, y) = ((i as f64 + a) * h, (j as f64 + b) * h);
                        acc += wa * wb * if x == y { diag(x) } else { g(x, y) };
                    }
                }
            }
        }
        acc * h * h
    }

    /// A piecewise-linear function with kinks at 1, 1.5 and 3.
    fn kinked(x: f64) -> f64 {
        if x < 1.0 {
            0.2 * x
        } else if x < 1.5 {
            0.2 + 1.6 * (x - 1.0)
        } else if x < 3.0 {
            1.0 - 0.5 * (x - 1.5)
        } else {
            0.25
        }
    }

    #[test]
    fn linear_function_unit_edge() {
        let s = samples(16, 1.0, |x| x);
        let v = double_integral(&s, 1.0 / 16.0, 0.0, &Power { p: 2.0 }, false).unwrap();
        assert!((v - 1.0).abs() < 1e-13, "{v}");
        let beta = 0.5 + (5.0f64 / 3.0).ln() / 4f64.ln();
        let p = 1.0 + 2.0 * beta;
        let want = 1.0 / ((1.0 - beta) * (3.0 - 2.0 * beta));
        let v = double_integral(&s, 1.0 / 16.0, 0.0, &Power { p }, false).unwrap();
        assert!((v - want).abs() < 1e-6 * want, "{v} {want}");
        assert!((want - 6.02008).abs() < 1e-5);
        // the closed form itself, against the one-dimensional reduction
        let oracle = oracle_ti(1.0, 1.0, |x| x, |u| u.powf(-p));
        assert!((oracle - want).abs() < 1e-7 * want, "{oracle}");
    }

    #[test]
    fn kinked_data_matches_oracle_for_every_kernel() {
        // the interpolant is the function itself, so only quadrature error remains
        let len = 4.0;
        let s = samples(32, len, kinked);
        let h = len / 32.0;
        let beta = 0.8;
        let cases: Vec<(Box<dyn Kernel>, f64, Box<dyn Fn(f64) -> f64>)> = vec![
            (Box::new(Power { p: 2.0 }), len, Box::new(|u: f64| 1.0 / (u * u))),
            (Box::new(Power { p: 1.0 + 2.0 * beta }), len, Box::new(move |u: f64| u.powf(-1.0 - 2.0 * beta))),
            (Box::new(Banded { width: 1.0 }), 1.0, Box::new(|u: f64| 1.0 / (u * u))),
            (Box::new(Banded { width: 0.125 }), 0.125, Box::new(|u: f64| 1.0 / (u * u))),
            (Box::new(Banded { width: 0.25 }), 0.25, Box::new(|u: f64| 1.0 / (u * u))),
            (Box::new(Sinh), len, Box::new(|u: f64| Sinh.eval(u, 0.0))),
        ];
        for (k, umax, kf) in cases {
            let v = double_integral(&s, h, 0.0, k.as_ref(), false).unwrap();
            let o = oracle_kinked(len, umax, &[1.0, 1.5, 3.0], kinked, kf);
            assert!((v - o).abs() < 2e-6 * o, "p={} band={:?}: {v} {o}", k.exponent(), k.band());
        }
    }

    #[test]
    fn smooth_data_converges_to_oracle() {
        let len = 6.0;
        let f = |x: f64| (-(x - 3.0) * (x - 3.0)).exp();
        for (k, kf) in [
            (&Power { p: 2.0 } as &dyn Kernel, &(|u: f64| 1.0 / (u * u)) as &dyn Fn(f64) -> f64),
            (&Sinh, &|u: f64| Sinh.eval(u, 0.0)),
        ] {
            let o = oracle_ti(len, len, f, kf);
            let err = |n: usize| (double_integral(&samples(n, len, f), len / n as f64, 0.0, k, false).unwrap() - o).abs() / o;
            let (e1, e2) = (err(192), err(768));
            assert!(e2 < 3e-5 && e1 / e2 > 10.0, "{e1} {e2}");
        }
    }

    #[test]
    fn band_of_one_cell() {
        // a band of one cell uses the near triangle of neighbouring cells only
        let s = samples(4, 4.0, |x| x);
        let v = double_integral(&s, 1.0, 0.0, &Banded { width: 1.0 }, false).unwrap();
        // slope 1: ∫∫_{|x-y|<=1} 1 over [0,4]^2 = 16 - 9 = 7
        assert!((v - 7.0).abs() < 1e-13, "{v}");
        assert!(double_integral(&s, 1.0, 0.0, &Banded { width: 1.5 }, false).is_err());
        let s = samples(8, 4.0, |x| x);
        let v = double_integral(&s, 0.5, 0.0, &Banded { width: 1.0 }, false).unwrap();
        assert!((v - 7.0).abs() < 1e-13, "{v}");
    }

    #[test]
    fn circle_cos() {
        let n = 1024;
        let l = 2.0 * std::f64::consts::PI;
        let s = samples(n, l, f64::cos);
        let v = double_integral(&s, l / n as f64, 0.0, &Chordal { radius: 1.0 }, true).unwrap();
        let want = 2.0 * std::f64::consts::PI.powi(2);
        assert!((v - want).abs() < 1e-5 * want, "{v} {want}");
    }

    #[test]
    fn quadrant_matches_oracle() {
        let len = 3.0;
        let f = |x: f64| x * (-x).exp();
        let df = |x: f64| (1.0 - x) * (-x).exp();
        let s = samples(768, len, f);
        let v = double_integral(&s, len / 768.0, 0.0, &Quadrant, false).unwrap();
        let oracle = brute(len, 48, |x, y| (f(x) - f(y)).powi(2) * Quadrant.eval(x, y), |x| 0.25 * df(x).powi(2));
        assert!((v - oracle).abs() < 2e-5 * oracle, "{v} {oracle}");
    }

    #[test]
    fn rejections_and_trivia() {
        let s = samples(8, 1.0, |x| x);
        assert!(matches!(
            double_integral(&s, 0.125, 0.0, &Power { p: 3.0 }, false),
            Err(Error::Exponent(_))
        ));
        let c = vec![2.5; 9];
        assert_eq!(double_integral(&c, 0.125, 0.0, &Power { p: 2.4 }, false).unwrap(), 0.0);
        let open = samples(8, 1.0, |x| x);
        assert!(double_integral(&open, 0.125, 0.0, &Chordal { radius: 1.0 / (2.0 * std::f64::consts::PI) }, true)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn junction_closed_forms() {
        let xs: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let g: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        assert!((inverse_weighted_square(&xs, &g, 1.0) - 2.0).abs() < 1e-14);
        let shifted: Vec<f64> = g.iter().map(|v| v + 0.1).collect();
        assert!(inverse_weighted_square(&xs, &shifted, 1.0).is_infinite());
    }

    #[test]
    fn tails() {
        // f(y) - f(end) = u on [0, 1]: 2 ∫ u^2 / u = 1
        let s: Vec<f64> = (0..=4).map(|k| k as f64 * 0.25).collect();
        assert!((tail_integral(&s, 0.25, TailWeight::Power(2.0)) - 1.0).abs() < 1e-14);
        // banded at width 1: 2 ∫_0^1 u^2 (1/u - 1) = 2 (1/2 - 1/3)
        assert!((tail_integral(&s, 0.25, TailWeight::Banded(1.0)) - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(exterior_cross(1.0, 1.0, 2.0, TailWeight::Power(2.0)), 0.0);
        assert!(exterior_cross(0.0, 1.0, 2.0, TailWeight::Power(2.0)).is_infinite());
        let fine = GaussLegendre::new(40);
        // 2 ∫_{len}^{w} (s - len)/s^2 ds
        let want = 2.0 * fine.integrate(2.0, 5.0, |t| (t - 2.0) / (t * t));
        assert!((exterior_cross(0.0, 1.0, 2.0, TailWeight::Banded(5.0)) - want).abs() < 1e-12);
    }
}
