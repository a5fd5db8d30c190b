//! Complex polynomials in one variable and small polynomial matrices.
//!
//! Coefficients are stored in ascending degree. Root finding uses the
//! Aberth-Ehrlich simultaneous iteration with a final clustering pass, which
//! is robust for the moderate degrees (< ~100) produced by the rational
//! factorization pipeline.

use num_complex::Complex64;

use crate::error::{WhError, WhResult};
use crate::linalg;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense univariate polynomial with complex coefficients, ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    pub fn one() -> Self {
        Poly::constant(ONE)
    }

    /// The monomial `c * x^k`.
    pub fn monomial(c: Complex64, k: usize) -> Self {
        let mut coeffs = vec![ZERO; k + 1];
        coeffs[k] = c;
        Poly::new(coeffs)
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Poly::one();
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, ONE]));
        }
        p
    }

    fn trim(&mut self) {
        while let Some(last) = self.coeffs.last() {
            if last.norm() == 0.0 {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    /// Drop trailing coefficients that are negligible relative to the
    /// largest one; used after floating-point constructions.
    pub fn trim_relative(&mut self, rel: f64) {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            self.coeffs.clear();
            return;
        }
        while let Some(last) = self.coeffs.last() {
            if last.norm() <= rel * scale {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![ZERO; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * Complex64::new((i + 1) as f64, 0.0))
                .collect(),
        )
    }

    /// Synthetic division by `(x - z0)`; returns the quotient and remainder.
    pub fn div_linear(&self, z0: Complex64) -> (Poly, Complex64) {
        if self.coeffs.is_empty() {
            return (Poly::zero(), ZERO);
        }
        let n = self.coeffs.len();
        let mut q = vec![ZERO; n.saturating_sub(1)];
        let mut acc = ZERO;
        for k in (0..n).rev() {
            acc = self.coeffs[k] + acc * z0;
            if k > 0 {
                q[k - 1] = acc;
            }
        }
        // acc now holds p(z0)
        let mut rem = self.coeffs[0];
        if n > 1 {
            rem = acc;
        }
        (Poly::new(q), rem)
    }

    /// Long division; returns `(quotient, remainder)` with
    /// `self = quotient * divisor + remainder`.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.coeffs.len() - 1;
        if self.coeffs.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![ZERO; rem.len() - dd];
        let lead = divisor.coeffs[dd];
        for k in (dd..rem.len()).rev() {
            let factor = rem[k] / lead;
            quot[k - dd] = factor;
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..=dd {
                let sub = factor * divisor.coeffs[j];
                rem[k - dd + j] -= sub;
            }
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    /// All roots (with multiplicity) by Aberth-Ehrlich iteration.
    pub fn roots(&self) -> WhResult<Vec<Complex64>> {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() <= 1 {
            return Ok(vec![]);
        }
        // deflate exact roots at the origin
        let mut zero_roots = 0usize;
        while coeffs.first().map(|c| c.norm()) == Some(0.0) && coeffs.len() > 1 {
            coeffs.remove(0);
            zero_roots += 1;
        }
        let deg = coeffs.len() - 1;
        let mut roots = vec![ZERO; zero_roots];
        if deg == 0 {
            return Ok(roots);
        }
        if deg == 1 {
            roots.push(-coeffs[0] / coeffs[1]);
            return Ok(roots);
        }
        if deg == 2 {
            let (a, b, c) = (coeffs[2], coeffs[1], coeffs[0]);
            let disc = (b * b - 4.0 * a * c).sqrt();
            // pick the sign that avoids cancellation
            let q = if (b + disc).norm() >= (b - disc).norm() {
                -0.5 * (b + disc)
            } else {
                -0.5 * (b - disc)
            };
            roots.push(q / a);
            roots.push(c / q);
            return Ok(roots);
        }

        let p = Poly::new(coeffs.clone());
        let dp = p.derivative();
        let lead = coeffs[deg].norm();
        let radius = 1.0
            + coeffs[..deg]
                .iter()
                .map(|c| c.norm() / lead)
                .fold(0.0, f64::max);
        // staggered initial ring of guesses
        let mut z: Vec<Complex64> = (0..deg)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.3;
                Complex64::from_polar(0.5 * radius * (1.0 + 0.3 * (k as f64 / deg as f64)), angle)
            })
            .collect();
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut converged = false;
        for _ in 0..400 {
            let mut max_step = 0.0f64;
            for i in 0..deg {
                let pi = p.eval(z[i]);
                if pi.norm() <= 1e-300 {
                    continue;
                }
                let dpi = dp.eval(z[i]);
                let newton = if dpi.norm() > 1e-300 { pi / dpi } else { pi };
                let mut repulse = ZERO;
                for j in 0..deg {
                    if j != i {
                        let diff = z[i] - z[j];
                        if diff.norm() > 1e-300 {
                            repulse += ONE / diff;
                        }
                    }
                }
                let denom = ONE - newton * repulse;
                let step = if denom.norm() > 1e-300 {
                    newton / denom
                } else {
                    newton
                };
                z[i] -= step;
                max_step = max_step.max(step.norm());
            }
            if max_step < 1e-14 * radius.max(1.0) {
                converged = true;
                break;
            }
        }
        // Newton polish
        for zi in z.iter_mut() {
            for _ in 0..3 {
                let pv = p.eval(*zi);
                let dv = dp.eval(*zi);
                if dv.norm() > 1e-300 {
                    *zi -= pv / dv;
                }
            }
        }
        let worst = z.iter().map(|&zi| p.eval(zi).norm()).fold(0.0, f64::max);
        if !converged && worst > 1e-6 * scale {
            return Err(WhError::Resolution(format!(
                "root iteration stalled at residual {worst:.3e}"
            )));
        }
        roots.extend(z);
        Ok(roots)
    }
}

/// Group nearby roots into `(centroid, multiplicity)` clusters.
pub fn cluster_roots(roots: &[Complex64], radius: f64) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    let mut sorted = roots.to_vec();
    sorted.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for r in sorted {
        match clusters
            .iter_mut()
            .find(|(c, m)| (*c - r).norm() <= radius * (1.0 + c.norm()) * (*m as f64))
        {
            Some((c, m)) => {
                // running centroid
                let total = *m as f64;
                *c = (*c * total + r) / (total + 1.0);
                *m += 1;
            }
            None => clusters.push((r, 1)),
        }
    }
    clusters
}

/// Rectangular matrix of polynomials (row-major).
#[derive(Debug, Clone)]
pub struct PolyMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Poly>) -> Self {
        assert_eq!(entries.len(), rows * cols);
        PolyMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Poly::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = Poly::one();
        }
        PolyMatrix::new(n, n, entries)
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i * self.cols + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut Poly {
        &mut self.entries[i * self.cols + j]
    }

    pub fn eval(&self, z: Complex64) -> Vec<Complex64> {
        self.entries.iter().map(|p| p.eval(z)).collect()
    }

    pub fn mul(&self, other: &PolyMatrix) -> PolyMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = vec![Poly::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entry(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let term = a.mul(other.entry(k, j));
                    out[i * other.cols + j] = out[i * other.cols + j].add(&term);
                }
            }
        }
        PolyMatrix::new(self.rows, other.cols, out)
    }

    /// Largest entry degree in a given row.
    pub fn row_degree(&self, i: usize) -> Option<usize> {
        (0..self.cols)
            .filter_map(|j| self.entry(i, j).degree())
            .max()
    }

    /// Determinant by evaluation at scaled roots of unity and FFT-free
    /// interpolation through a Vandermonde solve is overkill here; instead we
    /// evaluate at `m` distinct points on the unit circle and recover the
    /// coefficients with a direct DFT, which is exact because the point count
    /// exceeds the degree bound.
    pub fn det_poly(&self) -> Poly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return Poly::one();
        }
        let bound: usize = (0..n).map(|i| self.row_degree(i).unwrap_or(0)).sum();
        let m = (bound + 1).next_power_of_two().max(2);
        let mut values = Vec::with_capacity(m);
        for k in 0..m {
            let t = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let node = self.eval(t);
            values.push(linalg::det(n, &node));
        }
        // inverse DFT: d_j = (1/m) sum_k values_k w^{-jk}
        let mut coeffs = vec![ZERO; bound + 1];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (k, &v) in values.iter().enumerate() {
                let w = Complex64::from_polar(
                    1.0,
                    -2.0 * std::f64::consts::PI * (j * k % m) as f64 / m as f64,
                );
                acc += v * w;
            }
            *c = acc / m as f64;
        }
        let mut p = Poly::new(coeffs);
        p.trim_relative(1e-13);
        p
    }
}
