//! Minimal dense linear algebra for the small systems this crate solves.
//!
//! Everything here operates on square matrices of side `p + 2` at most
//! (propensity coefficients plus a mixing intercept), so plain
//! `Vec`-backed storage and textbook algorithms are the right size.

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SquareMat {
    n: usize,
    data: Vec<f64>,
}

impl SquareMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    /// Matrix-vector product.
    #[cfg(test)]
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (i, slot) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *slot = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// Solve `A x = b` by LU decomposition with partial pivoting.
///
/// Returns `None` when a pivot falls below a scale-relative threshold,
/// i.e. the system is numerically singular.
pub(crate) fn lu_solve(a: &SquareMat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.n();
    debug_assert_eq!(b.len(), n);
    let mut m = a.data.clone();
    let mut x = b.to_vec();

    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    let tol = scale * 1e-13 * n as f64;

    for col in 0..n {
        // Partial pivot.
        let mut pivot_row = col;
        let mut pivot_val = m[col * n + col].abs();
        for r in (col + 1)..n {
            let v = m[r * n + col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val < tol {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        let inv_pivot = 1.0 / m[col * n + col];
        for r in (col + 1)..n {
            let factor = m[r * n + col] * inv_pivot;
            if factor == 0.0 {
                continue;
            }
            m[r * n + col] = 0.0;
            for j in (col + 1)..n {
                m[r * n + j] -= factor * m[col * n + j];
            }
            x[r] -= factor * x[col];
        }
    }

    // Back substitution.
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..n {
            acc -= m[i * n + j] * x[j];
        }
        x[i] = acc / m[i * n + i];
    }
    Some(x)
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns eigenvalues and the matrix whose columns are the matching
/// eigenvectors.
pub(crate) fn sym_eigen(a: &SquareMat) -> (Vec<f64>, SquareMat) {
    let n = a.n();
    let mut m = a.clone();
    let mut v = SquareMat::zeros(n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    if n <= 1 {
        return ((0..n).map(|i| m.get(i, i)).collect(), v);
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j).abs();
            }
        }
        let scale = (0..n)
            .map(|i| m.get(i, i).abs())
            .fold(off, f64::max)
            .max(1e-300);
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    ((0..n).map(|i| m.get(i, i)).collect(), v)
}

/// Quadratic form `g' pinv(S) g` for symmetric positive semidefinite `S`,
/// with eigenvalues below `rel_cutoff * max |eigenvalue|` treated as zero.
///
/// Also reports the condition number of `S` (max/min absolute eigenvalue,
/// infinite when effectively rank deficient).
pub(crate) fn pinv_quadratic_form(s: &SquareMat, g: &[f64], rel_cutoff: f64) -> (f64, f64) {
    let (values, vectors) = sym_eigen(s);
    let n = s.n();
    let max_abs = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max_abs == 0.0 {
        return (0.0, f64::INFINITY);
    }
    let cutoff = rel_cutoff * max_abs;
    let min_abs = values.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    let cond = if min_abs < cutoff {
        f64::INFINITY
    } else {
        max_abs / min_abs
    };

    let mut q = 0.0;
    for (k, &value) in values.iter().enumerate() {
        if value.abs() < cutoff {
            continue;
        }
        let proj: f64 = (0..n).map(|i| vectors.get(i, k) * g[i]).sum();
        q += proj * proj / value;
    }
    (q, cond)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(n: usize, entries: &[f64]) -> SquareMat {
        let mut m = SquareMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, entries[i * n + j]);
            }
        }
        m
    }

    #[test]
    fn solves_small_system() {
        let a = mat(3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let x_true = vec![1.0, -2.0, 3.0];
        let b = a.matvec(&x_true);
        let x = lu_solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_singularity() {
        let a = mat(2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(lu_solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn eigen_recovers_spectrum() {
        // Symmetric with known eigenvalues {1, 3} (basis rotated 45 degrees).
        let a = mat(2, &[2.0, 1.0, 1.0, 2.0]);
        let (mut values, vectors) = sym_eigen(&a);
        values.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((values[0] - 1.0).abs() < 1e-12);
        assert!((values[1] - 3.0).abs() < 1e-12);
        // Columns are orthonormal.
        let dot: f64 = (0..2).map(|i| vectors.get(i, 0) * vectors.get(i, 1)).sum();
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_matches_direct_inverse() {
        let a = mat(2, &[3.0, 1.0, 1.0, 2.0]);
        let g = [1.0, -1.0];
        // Inverse of [[3,1],[1,2]] is [[2,-1],[-1,3]]/5.
        let expected = {
            let inv = [[0.4, -0.2], [-0.2, 0.6]];
            let v0 = inv[0][0] * g[0] + inv[0][1] * g[1];
            let v1 = inv[1][0] * g[0] + inv[1][1] * g[1];
            g[0] * v0 + g[1] * v1
        };
        let (q, cond) = pinv_quadratic_form(&a, &g, 1e-12);
        assert!((q - expected).abs() < 1e-12);
        assert!(cond.is_finite());
    }

    #[test]
    fn rank_deficient_form_drops_null_space() {
        // Eigenpairs: ((1,1)/sqrt(2), 2) and ((1,-1)/sqrt(2), 0); the form
        // keeps only the span of the first.
        let a = mat(2, &[1.0, 1.0, 1.0, 1.0]);
        let (q, cond) = pinv_quadratic_form(&a, &[1.0, 1.0], 1e-12);
        assert!((q - 1.0).abs() < 1e-12);
        assert!(cond.is_infinite());
    }
}
