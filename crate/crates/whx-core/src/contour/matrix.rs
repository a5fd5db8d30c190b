//! Matrix-valued contour functions and the factorization result record.

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::contour::laurent::{unit_circle_nodes, LaurentFunction};
use crate::error::{WhError, WhResult};
use crate::linalg;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which contour the stored circle representation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Native unit-circle data.
    Circle,
    /// Real-line data mapped to the circle through the Cayley ratio.
    LineMapped,
}

/// Rectangular matrix of Laurent functions sharing one contour.
#[derive(Debug, Clone)]
pub struct MatrixFunction {
    rows: usize,
    cols: usize,
    entries: Vec<LaurentFunction>,
    domain: Domain,
}

impl MatrixFunction {
    pub fn new(rows: usize, cols: usize, entries: Vec<LaurentFunction>, domain: Domain) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        MatrixFunction {
            rows,
            cols,
            entries,
            domain,
        }
    }

    pub fn identity(n: usize, domain: Domain) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(if i == j {
                    LaurentFunction::one()
                } else {
                    LaurentFunction::zero()
                });
            }
        }
        MatrixFunction::new(n, n, entries, domain)
    }

    pub fn zero_matrix(rows: usize, cols: usize, domain: Domain) -> Self {
        MatrixFunction::new(
            rows,
            cols,
            vec![LaurentFunction::zero(); rows * cols],
            domain,
        )
    }

    /// Diagonal matrix of monomials `t^{k_j}`.
    pub fn monomial_diag(kappas: &[i64], domain: Domain) -> Self {
        let n = kappas.len();
        let mut m = MatrixFunction::zero_matrix(n, n, domain);
        for (j, &k) in kappas.iter().enumerate() {
            *m.entry_mut(j, j) = LaurentFunction::monomial(k);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn set_domain(&mut self, domain: Domain) {
        self.domain = domain;
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentFunction {
        &self.entries[i * self.cols + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut LaurentFunction {
        &mut self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[LaurentFunction] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn map_entries(&self, f: impl Fn(&LaurentFunction) -> LaurentFunction) -> Self {
        MatrixFunction::new(
            self.rows,
            self.cols,
            self.entries.iter().map(f).collect(),
            self.domain,
        )
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.entry(i, j).clone());
            }
        }
        MatrixFunction::new(self.cols, self.rows, entries, self.domain)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        MatrixFunction::new(self.rows, self.cols, entries, self.domain)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect();
        MatrixFunction::new(self.rows, self.cols, entries, self.domain)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map_entries(|e| e.scale(c))
    }

    /// Exact coefficient-level matrix product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in matrix product");
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = LaurentFunction::zero();
                for k in 0..self.cols {
                    acc = acc.add(&self.entry(i, k).mul(other.entry(k, j)));
                }
                entries.push(acc);
            }
        }
        MatrixFunction::new(self.rows, other.cols, entries, self.domain)
    }

    /// Multiply by `diag(t^{k_j})` from the right (scales columns).
    pub fn mul_monomial_diag_right(&self, kappas: &[i64]) -> Self {
        assert_eq!(self.cols, kappas.len());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.entry_mut(i, j) = self.entry(i, j).shifted(kappas[j]);
            }
        }
        out
    }

    /// Multiply by `diag(t^{k_j})` from the left (scales rows).
    pub fn mul_monomial_diag_left(&self, kappas: &[i64]) -> Self {
        assert_eq!(self.rows, kappas.len());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.entry_mut(i, j) = self.entry(i, j).shifted(kappas[i]);
            }
        }
        out
    }

    /// Grid large enough for alias-free sampling of every entry.
    pub fn alias_free_grid(&self, floor: usize) -> usize {
        self.entries
            .iter()
            .map(|e| e.alias_free_grid(floor))
            .max()
            .unwrap_or(floor.next_power_of_two().max(8))
    }

    /// Row-major node matrices on the `n`-point grid.
    pub fn node_matrices(&self, n: usize) -> Vec<Vec<Complex64>> {
        let per_entry: Vec<Vec<Complex64>> = self.entries.iter().map(|e| e.samples(n)).collect();
        (0..n)
            .map(|j| per_entry.iter().map(|s| s[j]).collect())
            .collect()
    }

    /// Rebuild a matrix function from per-node values.
    pub fn from_node_matrices(
        rows: usize,
        cols: usize,
        nodes: &[Vec<Complex64>],
        domain: Domain,
    ) -> WhResult<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for idx in 0..rows * cols {
            let samples: Vec<Complex64> = nodes.iter().map(|m| m[idx]).collect();
            entries.push(LaurentFunction::from_samples(&samples)?);
        }
        Ok(MatrixFunction::new(rows, cols, entries, domain))
    }

    /// Entrywise sup norm over an alias-free grid.
    pub fn sup_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.sup_norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from another matrix on a shared grid.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.sub(other).sup_norm()
    }

    /// Determinant as a contour function, resolved on a refined grid.
    pub fn det(&self, tol: &Tolerances) -> WhResult<LaurentFunction> {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n0 = self.alias_free_grid(self.rows * 8);
        crate::contour::laurent::resolve_from_fn(tol, n0, |n| {
            let nodes = self.node_matrices(n);
            Ok(nodes
                .iter()
                .map(|m| linalg::det(self.rows, m))
                .collect())
        })
    }

    /// Minimum of `|det|` over the grid, used as the nonsingularity check.
    pub fn min_abs_det(&self, tol: &Tolerances) -> WhResult<f64> {
        let det = self.det(tol)?;
        Ok(det.min_abs())
    }

    /// Pointwise inverse, resolved on a refined grid.
    pub fn inverse(&self, tol: &Tolerances) -> WhResult<Self> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let dim = self.rows;
        let min_det = self.min_abs_det(tol)?;
        if min_det < tol.singularity {
            return Err(WhError::ContourSingularity {
                min_abs: min_det,
                tol: tol.singularity,
            });
        }
        let n0 = self.alias_free_grid(dim * 8);
        let mut inv_entries: Option<Vec<LaurentFunction>> = None;
        let mut n = n0;
        loop {
            let nodes = self.node_matrices(n);
            let mut inverted = Vec::with_capacity(n);
            let mut ok = true;
            for m in &nodes {
                match linalg::inverse(dim, m) {
                    Some(inv) => inverted.push(inv),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let mut entries = Vec::with_capacity(dim * dim);
                let mut tail_ok = true;
                for idx in 0..dim * dim {
                    let samples: Vec<Complex64> = inverted.iter().map(|m| m[idx]).collect();
                    let lf = LaurentFunction::from_samples(&samples)?;
                    let scale = lf.max_coeff();
                    let quarter = (n / 4) as i64;
                    let tail = lf
                        .iter_coeffs()
                        .filter(|(k, _)| k.abs() >= quarter)
                        .map(|(_, c)| c.norm())
                        .fold(0.0, f64::max);
                    if tail > tol.tail * (1.0 + scale) {
                        tail_ok = false;
                    }
                    entries.push(lf);
                }
                if tail_ok {
                    inv_entries = Some(entries);
                    break;
                }
            }
            if n >= tol.grid_cap {
                if let Some(entries) = inv_entries {
                    return Ok(MatrixFunction::new(dim, dim, entries, self.domain));
                }
                return Err(WhError::Resolution(
                    "matrix inverse did not resolve below the grid cap".into(),
                ));
            }
            n *= 2;
        }
        Ok(MatrixFunction::new(
            dim,
            dim,
            inv_entries.expect("loop sets entries before breaking"),
            self.domain,
        ))
    }

    /// Largest wrong-side coefficient over all entries for a plus factor.
    pub fn defect_plus(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.defect_plus())
            .fold(0.0, f64::max)
    }

    /// Largest wrong-side coefficient over all entries for a minus factor.
    pub fn defect_minus(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.defect_minus())
            .fold(0.0, f64::max)
    }

    /// Pointwise commutator norm `max_t |AB - BA|` on a shared grid.
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        let ab = self.mul(other);
        let ba = other.mul(self);
        ab.sup_distance(&ba)
    }
}

/// Whether the factors multiply as `plus * diag * minus` or in the reversed
/// order. Constructive methods on the circle produce the former; the
/// near-identity asymptotic scheme produces the latter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorOrder {
    PlusDiagMinus,
    MinusDiagPlus,
}

/// Result record of a matrix factorization: one-sided factors, the diagonal
/// monomial exponents, and the realized diagnostics.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub plus: MatrixFunction,
    pub minus: MatrixFunction,
    /// Diagonal exponents, sorted nonincreasing.
    pub partial_indices: Vec<i64>,
    /// Sup-norm reconstruction residual against the factored matrix.
    pub residual_inf: f64,
    /// Largest wrong-sided Laurent coefficient over both factors.
    pub analyticity_defect: f64,
    pub order: FactorOrder,
}

impl Factorization {
    /// Multiply the factors back together (with the index carrier).
    pub fn reconstruct(&self) -> MatrixFunction {
        match self.order {
            FactorOrder::PlusDiagMinus => self
                .plus
                .mul_monomial_diag_right(&self.partial_indices)
                .mul(&self.minus),
            FactorOrder::MinusDiagPlus => self
                .minus
                .mul_monomial_diag_right(&self.partial_indices)
                .mul(&self.plus),
        }
    }

    /// Fill the diagnostic fields by comparing against `g`.
    pub fn measure_against(&mut self, g: &MatrixFunction) {
        self.residual_inf = self.reconstruct().sub(g).sup_norm();
        self.analyticity_defect = self.plus.defect_plus().max(self.minus.defect_minus());
    }

    pub fn index_sum(&self) -> i64 {
        self.partial_indices.iter().sum()
    }
}

/// Sort partial indices nonincreasing, permuting factor columns/rows to
/// match: `plus * diag(k) * minus` is invariant under simultaneous
/// permutation.
pub fn sort_indices_with_factors(
    kappas: &mut Vec<i64>,
    plus: &mut MatrixFunction,
    minus: &mut MatrixFunction,
) {
    let n = kappas.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(kappas[j]));
    let new_kappas: Vec<i64> = order.iter().map(|&j| kappas[j]).collect();
    let mut new_plus = plus.clone();
    let mut new_minus = minus.clone();
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..plus.rows() {
            *new_plus.entry_mut(i, new_j) = plus.entry(i, old_j).clone();
        }
        for i in 0..minus.cols() {
            *new_minus.entry_mut(new_j, i) = minus.entry(old_j, i).clone();
        }
    }
    *kappas = new_kappas;
    *plus = new_plus;
    *minus = new_minus;
}

/// Evaluate a node-matrix list at the grid nodes of radius-one probes plus a
/// few interior/exterior points; used by canonical-matrix checks.
pub fn probe_points() -> Vec<Complex64> {
    let mut pts = Vec::new();
    for &r in &[0.35f64, 0.7, 1.45, 2.9] {
        for k in 0..4 {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.37) / 4.0;
            pts.push(Complex64::from_polar(r, angle));
        }
    }
    pts
}

/// Determinant of a matrix function evaluated at one off-contour point.
pub fn det_at_point(m: &MatrixFunction, z: Complex64) -> Complex64 {
    let n = m.rows();
    let vals: Vec<Complex64> = (0..n * n)
        .map(|idx| m.entries()[idx].eval(z))
        .collect();
    linalg::det(n, &vals)
}

/// Convenience: matrix of pointwise values at one contour node index.
pub fn value_at_node(m: &MatrixFunction, n: usize, j: usize) -> Vec<Complex64> {
    let nodes = unit_circle_nodes(n);
    let t = nodes[j];
    m.entries().iter().map(|e| e.eval(t)).collect()
}

/// Identity helper for building constant matrices.
pub fn constant_matrix(rows: usize, cols: usize, values: &[Complex64], domain: Domain) -> MatrixFunction {
    let entries = values
        .iter()
        .map(|&v| {
            if v == ZERO {
                LaurentFunction::zero()
            } else if v == ONE {
                LaurentFunction::one()
            } else {
                LaurentFunction::constant(v)
            }
        })
        .collect();
    MatrixFunction::new(rows, cols, entries, domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_product_leaves_matrix_unchanged() {
        let g = MatrixFunction::new(
            2,
            2,
            vec![
                LaurentFunction::new(-1, vec![c(0.3, 0.1), c(1.0, 0.0), c(0.2, 0.0)]),
                LaurentFunction::monomial(1),
                LaurentFunction::constant(c(0.5, -0.2)),
                LaurentFunction::new(0, vec![c(2.0, 0.0), c(0.0, 0.4)]),
            ],
            Domain::Circle,
        );
        let id = MatrixFunction::identity(2, Domain::Circle);
        let prod = id.mul(&g);
        assert!(prod.sup_distance(&g) < 1e-14);
    }

    #[test]
    fn det_of_monomial_diag_is_one() {
        let tol = Tolerances::default();
        let m = MatrixFunction::monomial_diag(&[1, -1], Domain::Circle);
        let det = m.det(&tol).unwrap();
        assert!((det.coeff(0) - c(1.0, 0.0)).norm() < 1e-13);
        assert!(det.sub(&LaurentFunction::one()).sup_norm() < 1e-12);
    }

    #[test]
    fn inverse_of_unipotent_matrix() {
        let tol = Tolerances::default();
        let mut g = MatrixFunction::identity(2, Domain::Circle);
        *g.entry_mut(0, 1) = LaurentFunction::monomial(1);
        let inv = g.inverse(&tol).unwrap();
        // expected [[1, -t], [0, 1]]
        assert!(inv.entry(0, 0).sub(&LaurentFunction::one()).sup_norm() < 1e-12);
        assert!(
            inv.entry(0, 1)
                .add(&LaurentFunction::monomial(1))
                .sup_norm()
                < 1e-12
        );
        assert!(inv.entry(1, 0).sup_norm() < 1e-12);
        let prod = g.mul(&inv);
        assert!(prod.sup_distance(&MatrixFunction::identity(2, Domain::Circle)) < 1e-12);
    }

    #[test]
    fn factorization_reconstruct_and_sort() {
        let plus = MatrixFunction::identity(2, Domain::Circle);
        let minus = MatrixFunction::identity(2, Domain::Circle);
        let mut f = Factorization {
            plus,
            minus,
            partial_indices: vec![-1, 1],
            residual_inf: 0.0,
            analyticity_defect: 0.0,
            order: FactorOrder::PlusDiagMinus,
        };
        sort_indices_with_factors(&mut f.partial_indices, &mut f.plus, &mut f.minus);
        assert_eq!(f.partial_indices, vec![1, -1]);
        // sorting permutes the factors so the reconstruction is unchanged
        let g = MatrixFunction::monomial_diag(&[-1, 1], Domain::Circle);
        f.measure_against(&g);
        assert!(f.residual_inf < 1e-13);
    }
}
