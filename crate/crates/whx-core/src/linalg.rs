//! Small dense complex linear algebra used by the solvers.
//!
//! Matrices are row-major `Vec<Complex64>` slices with an explicit dimension;
//! the sizes involved are tiny (contour matrices up to 8x8, residue systems,
//! least-squares normal equations), so hand-rolled elimination with partial
//! pivoting is adequate and keeps results bitwise deterministic.

use num_complex::Complex64;

use crate::error::{WhError, WhResult};

/// Multiply two row-major matrices: `a` is `m x k`, `b` is `k x n`.
pub fn mat_mul(m: usize, k: usize, n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m * n];
    for i in 0..m {
        for p in 0..k {
            let aip = a[i * k + p];
            if aip.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aip * b[p * n + j];
            }
        }
    }
    out
}

/// In-place LU factorization with partial pivoting. Returns the pivot vector
/// and the parity of the permutation, or `None` when a pivot vanishes.
fn lu_decompose(n: usize, a: &mut [Complex64]) -> Option<(Vec<usize>, bool)> {
    let mut piv = vec![0usize; n];
    let mut even = true;
    for col in 0..n {
        let mut best = col;
        let mut best_mag = a[col * n + col].norm();
        for row in col + 1..n {
            let mag = a[row * n + col].norm();
            if mag > best_mag {
                best = row;
                best_mag = mag;
            }
        }
        if best_mag == 0.0 {
            return None;
        }
        if best != col {
            for j in 0..n {
                a.swap(col * n + j, best * n + j);
            }
            even = !even;
        }
        piv[col] = best;
        let inv = Complex64::new(1.0, 0.0) / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            a[row * n + col] = factor;
            for j in col + 1..n {
                let sub = factor * a[col * n + j];
                a[row * n + j] -= sub;
            }
        }
    }
    Some((piv, even))
}

/// Determinant of a square matrix (destroys a copy).
pub fn det(n: usize, a: &[Complex64]) -> Complex64 {
    let mut work = a.to_vec();
    match lu_decompose(n, &mut work) {
        None => Complex64::new(0.0, 0.0),
        Some((_, even)) => {
            let mut d = if even {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            };
            for i in 0..n {
                d *= work[i * n + i];
            }
            d
        }
    }
}

/// Solve `a x = b` for several right-hand sides stored column-wise in a
/// row-major `n x nrhs` block. Returns `None` when `a` is singular.
pub fn solve(n: usize, a: &[Complex64], b: &[Complex64], nrhs: usize) -> Option<Vec<Complex64>> {
    let mut lu = a.to_vec();
    let (piv, _) = lu_decompose(n, &mut lu)?;
    let mut x = b.to_vec();
    // the stored factors are in fully pivoted row order, so the whole swap
    // sequence applies to the right-hand side before the elimination
    for col in 0..n {
        let p = piv[col];
        if p != col {
            for j in 0..nrhs {
                x.swap(col * nrhs + j, p * nrhs + j);
            }
        }
    }
    for col in 0..n {
        for row in col + 1..n {
            let factor = lu[row * n + col];
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..nrhs {
                let sub = factor * x[col * nrhs + j];
                x[row * nrhs + j] -= sub;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = Complex64::new(1.0, 0.0) / lu[col * n + col];
        for j in 0..nrhs {
            let mut v = x[col * nrhs + j];
            for p in col + 1..n {
                v -= lu[col * n + p] * x[p * nrhs + j];
            }
            x[col * nrhs + j] = v * inv;
        }
    }
    Some(x)
}

/// Inverse of a square matrix, or `None` when singular.
pub fn inverse(n: usize, a: &[Complex64]) -> Option<Vec<Complex64>> {
    let mut id = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        id[i * n + i] = Complex64::new(1.0, 0.0);
    }
    solve(n, a, &id, n)
}

/// One-norm (max column sum) of a row-major matrix.
pub fn one_norm(n: usize, a: &[Complex64]) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Condition number estimate from explicit inversion (fine for tiny systems).
pub fn condition_estimate(n: usize, a: &[Complex64]) -> f64 {
    match inverse(n, a) {
        None => f64::INFINITY,
        Some(inv) => one_norm(n, a) * one_norm(n, &inv),
    }
}

/// Nullspace basis of a square matrix obtained by row elimination with full
/// pivoting; entries below `rank_tol * scale` count as zero.
pub fn nullspace(n: usize, a: &[Complex64], rank_tol: f64) -> Vec<Vec<Complex64>> {
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    nullspace_abs(n, a, rank_tol * scale)
}

/// Nullspace with an absolute pivot threshold; used when the caller knows
/// the natural scale of the data better than the matrix values do.
pub fn nullspace_abs(n: usize, a: &[Complex64], abs_tol: f64) -> Vec<Vec<Complex64>> {
    let mut m = a.to_vec();
    let tol = abs_tol;
    let mut row_perm: Vec<usize> = (0..n).collect();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for step in 0..n {
        // full pivot search over the trailing block
        let mut best = (step, step);
        let mut best_mag = 0.0;
        for i in step..n {
            for j in step..n {
                let mag = m[row_perm[i] * n + col_perm[j]].norm();
                if mag > best_mag {
                    best_mag = mag;
                    best = (i, j);
                }
            }
        }
        if best_mag <= tol {
            break;
        }
        row_perm.swap(step, best.0);
        col_perm.swap(step, best.1);
        rank += 1;
        let pr = row_perm[step];
        let pc = col_perm[step];
        let inv = Complex64::new(1.0, 0.0) / m[pr * n + pc];
        for i in step + 1..n {
            let r = row_perm[i];
            let factor = m[r * n + pc] * inv;
            for j in step..n {
                let c = col_perm[j];
                let sub = factor * m[pr * n + c];
                m[r * n + c] -= sub;
            }
        }
    }
    // back-substitute one basis vector per free column
    let mut basis = Vec::new();
    for free in rank..n {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[col_perm[free]] = Complex64::new(1.0, 0.0);
        for step in (0..rank).rev() {
            let pr = row_perm[step];
            let pc = col_perm[step];
            let mut acc = Complex64::new(0.0, 0.0);
            for j in step + 1..n {
                let c = col_perm[j];
                acc += m[pr * n + c] * v[c];
            }
            v[pc] = -acc / m[pr * n + pc];
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        basis.push(v);
    }
    basis
}

/// Least-squares solve of an overdetermined `m x n` system via normal
/// equations. The bases used in this crate (monomials on the unit circle)
/// are well conditioned, so this is adequate.
pub fn least_squares(
    m: usize,
    n: usize,
    a: &[Complex64],
    b: &[Complex64],
) -> WhResult<Vec<Complex64>> {
    let mut ata = vec![Complex64::new(0.0, 0.0); n * n];
    let mut atb = vec![Complex64::new(0.0, 0.0); n];
    for r in 0..m {
        for i in 0..n {
            let ari = a[r * n + i].conj();
            atb[i] += ari * b[r];
            for j in 0..n {
                ata[i * n + j] += ari * a[r * n + j];
            }
        }
    }
    solve(n, &ata, &atb, 1).ok_or_else(|| WhError::IllConditioned {
        cond: f64::INFINITY,
    })
}

/// Dense LU solve of a general `n x n` complex system with one right-hand
/// side. Thin wrapper kept separate for call-site clarity in the Toeplitz
/// oracle.
pub fn solve_dense(n: usize, a: &[Complex64], b: &[Complex64]) -> Option<Vec<Complex64>> {
    solve(n, a, b, 1)
}

pub fn identity(n: usize) -> Vec<Complex64> {
    let mut id = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        id[i * n + i] = Complex64::new(1.0, 0.0);
    }
    id
}

fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a truncated series.
pub fn matrix_exp(n: usize, a: &[Complex64]) -> Vec<Complex64> {
    let norm = max_abs(a) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scale = Complex64::new(1.0 / f64::powi(2.0, squarings as i32), 0.0);
    let scaled: Vec<Complex64> = a.iter().map(|&v| v * scale).collect();
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=24 {
        term = mat_mul(n, n, n, &term, &scaled);
        let factor = Complex64::new(1.0 / k as f64, 0.0);
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t * factor;
        }
        term = term.iter().map(|&t| t * factor).collect::<Vec<_>>();
        // term now holds scaled^k / k!
        if max_abs(&term) < 1e-18 * (1.0 + max_abs(&result)) {
            break;
        }
    }
    let mut out = result;
    for _ in 0..squarings {
        out = mat_mul(n, n, n, &out, &out);
    }
    out
}

/// Principal square root by the coupled Newton iteration; fails on matrices
/// with eigenvalues on the closed negative real axis.
fn matrix_sqrt(n: usize, a: &[Complex64]) -> Option<Vec<Complex64>> {
    let mut y = a.to_vec();
    let mut z = identity(n);
    for _ in 0..60 {
        let y_inv = inverse(n, &y)?;
        let z_inv = inverse(n, &z)?;
        let y_next: Vec<Complex64> = y
            .iter()
            .zip(&z_inv)
            .map(|(&yv, &zi)| 0.5 * (yv + zi))
            .collect();
        let z_next: Vec<Complex64> = z
            .iter()
            .zip(&y_inv)
            .map(|(&zv, &yi)| 0.5 * (zv + yi))
            .collect();
        let delta = y_next
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        y = y_next;
        z = z_next;
        if delta < 1e-15 * (1.0 + max_abs(&y)) {
            break;
        }
    }
    Some(y)
}

/// Principal-branch matrix logarithm by inverse scaling and squaring.
pub fn matrix_log(n: usize, a: &[Complex64]) -> Option<Vec<Complex64>> {
    let id = identity(n);
    let mut x = a.to_vec();
    let mut sqrt_count = 0u32;
    for _ in 0..50 {
        let dist = x
            .iter()
            .zip(&id)
            .map(|(v, e)| (v - e).norm())
            .fold(0.0, f64::max);
        if dist < 0.3 {
            break;
        }
        x = matrix_sqrt(n, &x)?;
        sqrt_count += 1;
    }
    let log_near = log_near_identity(n, &x)?;
    let factor = Complex64::new(f64::powi(2.0, sqrt_count as i32), 0.0);
    Some(log_near.into_iter().map(|v| v * factor).collect())
}

/// Series logarithm of a matrix close to the identity.
pub fn log_near_identity(n: usize, a: &[Complex64]) -> Option<Vec<Complex64>> {
    let id = identity(n);
    let e: Vec<Complex64> = a.iter().zip(&id).map(|(v, i)| v - i).collect();
    if max_abs(&e) * n as f64 >= 1.0 {
        return None;
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
    let mut power = e.clone();
    for k in 1..=80 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let factor = Complex64::new(sign / k as f64, 0.0);
        for (r, p) in acc.iter_mut().zip(&power) {
            *r += p * factor;
        }
        if max_abs(&power) / (k as f64) < 1e-18 * (1.0 + max_abs(&acc)) {
            break;
        }
        power = mat_mul(n, n, n, &power, &e);
    }
    Some(acc)
}

/// Eigenvalues of a small matrix through the characteristic polynomial
/// (coefficients by the trace recursion, roots by simultaneous iteration).
pub fn eigenvalues(n: usize, a: &[Complex64]) -> crate::error::WhResult<Vec<Complex64>> {
    // Faddeev-LeVerrier: c_k coefficients of det(zI - A)
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut m = identity(n);
    for k in 1..=n {
        m = mat_mul(n, n, n, a, &m);
        let trace: Complex64 = (0..n).map(|i| m[i * n + i]).sum();
        let c = -trace / k as f64;
        coeffs[n - k] = c;
        for i in 0..n {
            m[i * n + i] += c;
        }
    }
    crate::poly::Poly::new(coeffs).roots()
}

/// Banded LU solve with partial pivoting for a system whose coefficients
/// vanish outside `|i - j| <= kl` (lower) / `ku` (upper). Pivoting widens the
/// upper band to `kl + ku`, which the band storage accounts for.
///
/// `band(i, j)` must return the matrix entry for any `i, j`; entries outside
/// the declared band are assumed zero.
pub fn solve_banded(
    n: usize,
    kl: usize,
    ku: usize,
    band: impl Fn(usize, usize) -> Complex64,
    rhs: &[Complex64],
) -> Option<Vec<Complex64>> {
    let ku_work = (ku + kl).min(n.saturating_sub(1));
    let width = kl + ku_work + 1;
    // ab[i][d] holds A[i][i - kl + d] for d in 0..width
    let mut ab = vec![Complex64::new(0.0, 0.0); n * width];
    for i in 0..n {
        let lo = i.saturating_sub(kl);
        let hi = (i + ku).min(n - 1);
        for j in lo..=hi {
            ab[i * width + (j + kl - i)] = band(i, j);
        }
    }
    let mut x = rhs.to_vec();
    for col in 0..n {
        let last_row = (col + kl).min(n - 1);
        let mut best = col;
        let mut best_mag = ab[col * width + kl].norm();
        for row in col + 1..=last_row {
            let d = col + kl - row;
            let mag = ab[row * width + d].norm();
            if mag > best_mag {
                best = row;
                best_mag = mag;
            }
        }
        if best_mag == 0.0 {
            return None;
        }
        if best != col {
            // swap the overlapping band segments of rows `col` and `best`
            for j in col..=(col + ku_work).min(n - 1) {
                let dc = j + kl - col;
                let db = j + kl - best;
                let tmp = ab[col * width + dc];
                ab[col * width + dc] = ab[best * width + db];
                ab[best * width + db] = tmp;
            }
            x.swap(col, best);
        }
        let pivot = ab[col * width + kl];
        let inv = Complex64::new(1.0, 0.0) / pivot;
        for row in col + 1..=last_row {
            let d = col + kl - row;
            let factor = ab[row * width + d] * inv;
            ab[row * width + d] = factor;
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for j in col + 1..=(col + ku_work).min(n - 1) {
                let sub = factor * ab[col * width + (j + kl - col)];
                ab[row * width + (j + kl - row)] -= sub;
            }
            let sub = factor * x[col];
            x[row] -= sub;
        }
    }
    for col in (0..n).rev() {
        let mut v = x[col];
        for j in col + 1..=(col + ku_work).min(n - 1) {
            v -= ab[col * width + (j + kl - col)] * x[j];
        }
        x[col] = v / ab[col * width + kl];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solve_round_trips() {
        let a = vec![c(2.0, 0.0), c(1.0, 1.0), c(0.0, -1.0), c(3.0, 0.5)];
        let x_true = vec![c(1.0, -2.0), c(0.5, 0.25)];
        let b = mat_mul(2, 2, 1, &a, &x_true);
        let x = solve(2, &a, &b, 1).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn solve_handles_row_swaps_on_larger_systems() {
        // a matrix that forces nontrivial pivoting at several steps; the
        // interleaved-swap variant of the solver got this wrong
        let a = vec![
            c(0.001, 0.0), c(2.0, 1.0), c(0.1, 0.0), c(-1.0, 0.5),
            c(3.0, -1.0), c(0.002, 0.0), c(0.5, 0.0), c(1.5, 0.0),
            c(0.2, 0.1), c(1.0, 0.0), c(0.003, 0.0), c(4.0, -0.5),
            c(1.0, 1.0), c(-2.0, 0.0), c(2.5, 0.3), c(0.004, 0.0),
        ];
        let x_true: Vec<Complex64> = (0..4).map(|i| c(i as f64 + 0.5, -(i as f64) / 3.0)).collect();
        let b = mat_mul(4, 4, 1, &a, &x_true);
        let x = solve(4, &a, &b, 1).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).norm() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn nullspace_of_rank_one_matrix() {
        // rank-1: rows proportional
        let a = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)];
        let basis = nullspace(2, &a, 1e-9);
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        let residual = (a[0] * v[0] + a[1] * v[1]).norm();
        assert!(residual < 1e-12);
    }

    #[test]
    fn banded_matches_dense() {
        let n = 40;
        let entry = |i: usize, j: usize| -> Complex64 {
            let d = i as i64 - j as i64;
            if d.abs() > 2 {
                c(0.0, 0.0)
            } else {
                c(1.0 / (1.0 + d.abs() as f64) + if d == 0 { 2.0 } else { 0.0 }, 0.1 * d as f64)
            }
        };
        let mut dense = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                dense[i * n + j] = entry(i, j);
            }
        }
        let rhs: Vec<Complex64> = (0..n).map(|i| c(i as f64, -(i as f64) / 3.0)).collect();
        let xb = solve_banded(n, 2, 2, entry, &rhs).unwrap();
        let xd = solve(n, &dense, &rhs, 1).unwrap();
        for (a, b) in xb.iter().zip(&xd) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
