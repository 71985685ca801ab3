//! Conjugate gradients for the symmetric positive-definite systems behind
//! harmonic fills, gasket extensions and carpet resistances.
//!
//! Everything here runs sequentially so that results never depend on the
//! thread count.

use crate::error::{Error, Result};

/// Iteration count and final relative residual of a converged solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for the operator `apply(v, out) = A v`, starting from the
/// contents of `x`. Converged when `|r| <= tol |b|`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = b.len();
    assert_eq!(x.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(CgOutcome { iterations: 0, residual: 0.0 });
    }
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 0..=max_iter {
        let res = rr.sqrt() / bnorm;
        if res <= tol {
            return Ok(CgOutcome { iterations: it, residual: res });
        }
        if it == max_iter {
            break;
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailed { iterations: it, residual: res });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailed {
        iterations: max_iter,
        residual: rr.sqrt() / bnorm,
    })
}

/// Square sparse matrix in compressed rows.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside a {n}x{n} matrix");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            out[i] = acc;
        }
    }

    pub fn solve(&self, b: &[f64], tol: f64) -> Result<(Vec<f64>, CgOutcome)> {
        let mut x = vec![0.0; self.n];
        let out = conjugate_gradient(|v, o| self.apply(v, o), b, &mut x, tol, 20 * self.n + 100)?;
        Ok((x, out))
    }
}

/// Minimizes `Σ_{(u,v)} w (x_u - x_v)^2` over the unknowns with `fixed`
/// entries held at their given values. Returns the full vector.
pub fn minimize_quadratic_energy(
    n: usize,
    links: &[(usize, usize, f64)],
    fixed: &[Option<f64>],
    tol: f64,
) -> Result<(Vec<f64>, CgOutcome)> {
    assert_eq!(fixed.len(), n);
    let mut index = vec![usize::MAX; n];
    let mut free = 0;
    for (i, f) in fixed.iter().enumerate() {
        if f.is_none() {
            index[i] = free;
            free += 1;
        }
    }
    let mut trip = Vec::with_capacity(4 * links.len());
    let mut rhs = vec![0.0; free];
    for &(u, v, w) in links {
        for (a, b) in [(u, v), (v, u)] {
            if let Some(ia) = (index[a] != usize::MAX).then_some(index[a]) {
                trip.push((ia, ia, w));
                match fixed[b] {
                    Some(val) => rhs[ia] += w * val,
                    None => trip.push((ia, index[b], -w)),
                }
            }
        }
    }
    let mut x: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    if free == 0 {
        return Ok((x, CgOutcome { iterations: 0, residual: 0.0 }));
    }
    let m = Csr::from_triplets(free, trip);
    let (sol, out) = m.solve(&rhs, tol)?;
    for i in 0..n {
        if index[i] != usize::MAX {
            x[i] = sol[index[i]];
        }
    }
    Ok((x, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_interpolates_linearly() {
        // 0 - 1 - 2 - 3 - 4 with ends clamped to 0 and 1
        let links: Vec<_> = (0..4).map(|i| (i, i + 1, 1.0)).collect();
        let mut fixed = vec![None; 5];
        fixed[0] = Some(0.0);
        fixed[4] = Some(1.0);
        let (x, out) = minimize_quadratic_energy(5, &links, &fixed, 1e-14).unwrap();
        for (i, v) in x.iter().enumerate() {
            assert!((v - i as f64 / 4.0).abs() < 1e-13);
        }
        assert!(out.residual <= 1e-14);
    }

    #[test]
    fn duplicates_are_summed() {
        let m = Csr::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.5)]);
        let mut out = [0.0; 2];
        m.apply(&[1.0, 1.0], &mut out);
        assert_eq!(out, [2.5, 2.5]);
        let (x, _) = m.solve(&[2.5, 2.5], 1e-14).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indefinite_operator_is_reported() {
        let mut x = [0.0; 2];
        let err = conjugate_gradient(|v, o| { o[0] = -v[0]; o[1] = -v[1]; }, &[1.0, 0.0], &mut x, 1e-12, 10);
        assert!(matches!(err, Err(Error::SolverFailed { .. })));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut x = [3.0; 3];
        let out = conjugate_gradient(|v, o| o.copy_from_slice(v), &[0.0; 3], &mut x, 1e-12, 10).unwrap();
        assert_eq!(x, [0.0; 3]);
        assert_eq!(out.iterations, 0);
    }
}
