//! Commutative factorizations: 2x2 kernels of the form `k0 I + k1 J` with
//! `J^2 = Delta^2 I`, their n x n generalization built from an entire matrix
//! with `E^n = q^n I` and traceless lower powers, and functionally
//! commutative matrices.
//!
//! All three classes reduce the matrix problem to scalar multiplicative
//! factorizations and additive splittings. The 2x2 kernel splits through
//! `r = sqrt(k0^2 - Delta^2 k1^2)` and the hyperbolic angle
//! `theta = artanh(k1 Delta / k0) / Delta`; the n x n class through the
//! logarithms of the symbol evaluated at the scaled roots of unity; the
//! functionally commutative case through a continuous matrix logarithm
//! split entrywise.

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::contour::laurent::{glued_log_samples, glued_sqrt_samples, LaurentFunction};
use crate::contour::matrix::{Domain, FactorOrder, Factorization, MatrixFunction};
use crate::contour::unit_circle_nodes;
use crate::error::{WhError, WhResult};
use crate::linalg;
use crate::poly::{Poly, PolyMatrix};
use crate::scalar_rh::factor_scalar;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// How far `|k1 Delta / k0|` must stay from 1 before the hyperbolic angle
/// is declared ambiguous.
const ARTANH_GUARD: f64 = 1e-6;

/// 2x2 kernel `K = k0 I + k1 J` with `J` a polynomial matrix squaring to a
/// scalar polynomial times the identity.
#[derive(Debug, Clone)]
pub struct KhrapkovKernel {
    pub k0: LaurentFunction,
    pub k1: LaurentFunction,
    pub j_mat: PolyMatrix,
    pub delta2: Poly,
}

impl KhrapkovKernel {
    pub fn new(
        k0: LaurentFunction,
        k1: LaurentFunction,
        j_mat: PolyMatrix,
        delta2: Poly,
    ) -> WhResult<Self> {
        if j_mat.rows != 2 || j_mat.cols != 2 {
            return Err(WhError::InvalidInput("deviator must be 2x2".into()));
        }
        if delta2.degree().unwrap_or(0) > 2 {
            return Err(WhError::NotInClass(
                "square of the deviator must have degree at most 2".into(),
            ));
        }
        // exact coefficient check of J^2 = Delta^2 I
        let j2 = j_mat.mul(&j_mat);
        let scale = (0..4)
            .map(|i| {
                j2.entry(i / 2, i % 2)
                    .coeffs()
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0, f64::max)
            })
            .fold(delta2.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max), f64::max)
            .max(1.0);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { delta2.clone() } else { Poly::zero() };
                let diff = j2.entry(i, j).sub(&want);
                let err = diff.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
                if err > 1e-12 * scale {
                    return Err(WhError::NotInClass(format!(
                        "deviator square deviates from the scalar identity by {err:.3e}"
                    )));
                }
            }
        }
        Ok(KhrapkovKernel {
            k0,
            k1,
            j_mat,
            delta2,
        })
    }

    /// The kernel as a sampled matrix function.
    pub fn matrix(&self, tol: &Tolerances) -> WhResult<MatrixFunction> {
        let n = self.grid(tol);
        let nodes = unit_circle_nodes(n);
        let k0 = self.k0.samples(n);
        let k1 = self.k1.samples(n);
        let mut entries = Vec::with_capacity(4);
        for i in 0..2 {
            for j in 0..2 {
                let jp = self.j_mat.entry(i, j);
                let samples: Vec<Complex64> = nodes
                    .iter()
                    .enumerate()
                    .map(|(idx, &t)| {
                        let diag = if i == j { k0[idx] } else { ZERO };
                        diag + k1[idx] * jp.eval(t)
                    })
                    .collect();
                entries.push(LaurentFunction::from_samples(&samples)?);
            }
        }
        Ok(MatrixFunction::new(2, 2, entries, Domain::Circle))
    }

    fn grid(&self, _tol: &Tolerances) -> usize {
        let deg = self.delta2.degree().unwrap_or(0)
            + (0..4)
                .map(|i| self.j_mat.entry(i / 2, i % 2).degree().unwrap_or(0))
                .max()
                .unwrap_or(0);
        (self
            .k0
            .alias_free_grid(64)
            .max(self.k1.alias_free_grid(64))
            * 4)
        .max((8 * (deg + 1)).next_power_of_two())
    }
}

/// Continuous samples of `sqrt(delta2)` along the grid plus the monodromy
/// sign over one loop.
fn glued_delta(delta2: &Poly, nodes: &[Complex64]) -> WhResult<(Vec<Complex64>, i64)> {
    let vals: Vec<Complex64> = nodes.iter().map(|&t| delta2.eval(t)).collect();
    glued_sqrt_samples(&vals)
}

/// Factor a 2x2 commutative kernel. The factors commute with each other and
/// with the kernel; the partial indices are equal.
pub fn factor_khrapkov(k: &KhrapkovKernel, tol: &Tolerances) -> WhResult<Factorization> {
    let mut n = k.grid(tol);
    loop {
        match try_factor_khrapkov(k, n, tol) {
            Err(WhError::Resolution(_)) if n < tol.grid_cap => {
                n *= 2;
                continue;
            }
            other => return other,
        }
    }
}

fn try_factor_khrapkov(
    k: &KhrapkovKernel,
    n: usize,
    tol: &Tolerances,
) -> WhResult<Factorization> {
    let nodes = unit_circle_nodes(n);
    let k0 = k.k0.samples(n);
    let k1 = k.k1.samples(n);
    let min_k0 = k0.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if min_k0 < tol.singularity {
        return Err(WhError::ContourSingularity {
            min_abs: min_k0,
            tol: tol.singularity,
        });
    }
    let nilpotent = k.delta2.is_zero();
    let (delta, _mono) = if nilpotent {
        (vec![ZERO; n], 1)
    } else {
        glued_delta(&k.delta2, &nodes)?
    };
    // r^2 = k0^2 - Delta^2 k1^2 and theta = artanh(k1 Delta / k0) / Delta
    let mut r2 = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    if nilpotent {
        for j in 0..n {
            r2.push(k0[j] * k0[j]);
            theta.push(k1[j] / k0[j]);
        }
    } else {
        let mut lam0 = Vec::with_capacity(n);
        let mut lam1 = Vec::with_capacity(n);
        for j in 0..n {
            let w = k1[j] * delta[j] / k0[j];
            if (w.norm() - 1.0).abs() < ARTANH_GUARD {
                return Err(WhError::BranchAmbiguity(format!(
                    "hyperbolic angle argument reaches modulus {:.6} on the contour",
                    w.norm()
                )));
            }
            lam0.push(k0[j] + k1[j] * delta[j]);
            lam1.push(k0[j] - k1[j] * delta[j]);
            r2.push(lam0[j] * lam1[j]);
        }
        let ratio: Vec<Complex64> = lam0.iter().zip(&lam1).map(|(&a, &b)| a / b).collect();
        let (log_ratio, _) = glued_log_samples(&ratio)?;
        for j in 0..n {
            theta.push(log_ratio[j] / (2.0 * delta[j]));
        }
        // single-valuedness of theta across the loop closure
        let wrap = {
            let inc = (ratio[0] / ratio[n - 1]).ln() + log_ratio[n - 1];
            // continue delta by the same gluing rule
            let mut d_wrap = k.delta2.eval(nodes[0]).sqrt();
            if (d_wrap - delta[n - 1]).norm() > (d_wrap + delta[n - 1]).norm() {
                d_wrap = -d_wrap;
            }
            inc / (2.0 * d_wrap)
        };
        let theta_scale = theta.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if (wrap - theta[0]).norm() > 1e-6 * (1.0 + theta_scale) {
            return Err(WhError::BranchAmbiguity(
                "hyperbolic angle does not return to its starting branch".into(),
            ));
        }
    }
    // scalar factor r: sqrt of r2 glued along the contour
    let (log_r2, winding_r2) = glued_log_samples(&r2)?;
    if winding_r2 % 2 != 0 {
        return Err(WhError::BranchAmbiguity(
            "scalar part winds oddly; no single-valued square root".into(),
        ));
    }
    let r_samples: Vec<Complex64> = log_r2.iter().map(|&u| (0.5 * u).exp()).collect();
    let r = LaurentFunction::from_samples(&r_samples)?;
    check_tail(&r, n, tol)?;
    let r_fact = factor_scalar(&r, tol)?;
    let theta_fn = LaurentFunction::from_samples(&theta)?;
    check_tail(&theta_fn, n, tol)?;
    let (theta_plus, theta_minus) = theta_fn.cauchy_split();
    // K(side) = r(side) exp(theta(side) J), with exp(theta J) assembled from
    // the even combinations cosh(theta Delta) and sinh(theta Delta)/Delta
    let assemble = |r_side: &LaurentFunction, th_side: &LaurentFunction| -> WhResult<MatrixFunction> {
        let rv = r_side.samples(n);
        let tv = th_side.samples(n);
        let mut node_mats = Vec::with_capacity(n);
        for j in 0..n {
            let (ch, sh_over) = if nilpotent {
                (ONE, tv[j])
            } else {
                let x = tv[j] * delta[j];
                (x.cosh(), if delta[j].norm() > 0.0 { x.sinh() / delta[j] } else { tv[j] })
            };
            let jm = k.j_mat.eval(nodes[j]);
            let mut m = vec![ZERO; 4];
            for (idx, v) in m.iter_mut().enumerate() {
                let diag = if idx % 3 == 0 { ch } else { ZERO };
                *v = rv[j] * (diag + sh_over * jm[idx]);
            }
            node_mats.push(m);
        }
        MatrixFunction::from_node_matrices(2, 2, &node_mats, Domain::Circle)
    };
    let plus = assemble(&r_fact.x_plus, &theta_plus)?;
    let minus = assemble(&r_fact.x_minus, &theta_minus)?;
    for f in [&plus, &minus] {
        for e in f.entries() {
            check_tail(e, n, tol)?;
        }
    }
    let mut fact = Factorization {
        plus,
        minus,
        partial_indices: vec![r_fact.kappa, r_fact.kappa],
        residual_inf: 0.0,
        analyticity_defect: 0.0,
        order: FactorOrder::PlusDiagMinus,
    };
    fact.measure_against(&k.matrix(tol)?);
    // the matrix factors inherit the polynomial growth of the structure
    // matrix at infinity; the construction controls the one-sidedness of
    // the scalar constituents, so that is what the defect reports
    fact.analyticity_defect = r_fact
        .analyticity_defect()
        .max(theta_plus.defect_plus())
        .max(theta_minus.defect_minus());
    Ok(fact)
}

fn check_tail(f: &LaurentFunction, n: usize, tol: &Tolerances) -> WhResult<()> {
    let quarter = (n / 4) as i64;
    let tail = f
        .iter_coeffs()
        .filter(|(k, _)| k.abs() >= quarter)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    if tail > tol.tail * (1.0 + f.max_coeff()) {
        return Err(WhError::Resolution(format!(
            "coefficient tail {tail:.3e} unresolved at {n} nodes"
        )));
    }
    Ok(())
}

/// n x n kernel `C = sum_{m=1}^n a_m E^m` with `E^n = q^n I` and
/// `tr E^r = 0` for `r < n`.
#[derive(Debug, Clone)]
pub struct JonesKernel {
    /// Coefficients `a_1 .. a_n`.
    pub coefficients: Vec<LaurentFunction>,
    pub e_mat: PolyMatrix,
    pub q: Poly,
}

impl JonesKernel {
    pub fn new(
        coefficients: Vec<LaurentFunction>,
        e_mat: PolyMatrix,
        q: Poly,
    ) -> WhResult<Self> {
        let n = e_mat.rows;
        if e_mat.cols != n || n < 2 {
            return Err(WhError::InvalidInput(
                "structure matrix must be square of size at least 2".into(),
            ));
        }
        if coefficients.len() != n {
            return Err(WhError::InvalidInput(format!(
                "expected {n} coefficient functions"
            )));
        }
        // powers, trace conditions, and E^n = q^n I on exact coefficients
        let mut power = PolyMatrix::identity(n);
        let mut qn = Poly::one();
        for r in 1..=n {
            power = power.mul(&e_mat);
            qn = qn.mul(&q);
            if r < n {
                let mut trace = Poly::zero();
                for i in 0..n {
                    trace = trace.add(power.entry(i, i));
                }
                let scale = power_scale(&power).max(1.0);
                let worst = trace.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
                if worst > 1e-12 * scale {
                    return Err(WhError::NotInClass(format!(
                        "trace of power {r} does not vanish (deviation {worst:.3e})"
                    )));
                }
            }
        }
        let scale = power_scale(&power)
            .max(qn.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max))
            .max(1.0);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { qn.clone() } else { Poly::zero() };
                let diff = power.entry(i, j).sub(&want);
                let err = diff.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
                if err > 1e-12 * scale {
                    return Err(WhError::NotInClass(format!(
                        "structure power deviates from the scalar identity by {err:.3e}"
                    )));
                }
            }
        }
        Ok(JonesKernel {
            coefficients,
            e_mat,
            q,
        })
    }

    pub fn size(&self) -> usize {
        self.e_mat.rows
    }

    /// Sample the kernel as a matrix function.
    pub fn matrix(&self, _tol: &Tolerances) -> WhResult<MatrixFunction> {
        let n = self.size();
        let grid = self.grid();
        let nodes = unit_circle_nodes(grid);
        let coeff_samples: Vec<Vec<Complex64>> =
            self.coefficients.iter().map(|a| a.samples(grid)).collect();
        let mut node_mats = Vec::with_capacity(grid);
        for (idx, &t) in nodes.iter().enumerate() {
            let mut acc = vec![ZERO; n * n];
            let e_val = self.e_mat.eval(t);
            let mut power = linalg::identity(n);
            for m in 1..=n {
                power = linalg::mat_mul(n, n, n, &power, &e_val);
                let a = coeff_samples[m - 1][idx];
                for (s, p) in acc.iter_mut().zip(&power) {
                    *s += a * p;
                }
            }
            node_mats.push(acc);
        }
        MatrixFunction::from_node_matrices(n, n, &node_mats, Domain::Circle)
    }

    fn grid(&self) -> usize {
        let deg = self.q.degree().unwrap_or(0)
            + (0..self.size() * self.size())
                .map(|i| {
                    self.e_mat
                        .entry(i / self.size(), i % self.size())
                        .degree()
                        .unwrap_or(0)
                })
                .max()
                .unwrap_or(0);
        let base = self
            .coefficients
            .iter()
            .map(|a| a.alias_free_grid(64))
            .max()
            .unwrap_or(64);
        (base * 4).max((16 * (deg + 1)).next_power_of_two())
    }
}

fn power_scale(p: &PolyMatrix) -> f64 {
    (0..p.rows * p.cols)
        .map(|i| {
            p.entry(i / p.cols, i % p.cols)
                .coeffs()
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Factor an n x n commutative kernel through the logarithms of its symbol
/// at the scaled roots of unity.
pub fn factor_jones(k: &JonesKernel, tol: &Tolerances) -> WhResult<Factorization> {
    let mut grid = k.grid();
    loop {
        match try_factor_jones(k, grid, tol) {
            Err(WhError::Resolution(_)) if grid < tol.grid_cap => {
                grid *= 2;
                continue;
            }
            other => return other,
        }
    }
}

fn try_factor_jones(k: &JonesKernel, grid: usize, tol: &Tolerances) -> WhResult<Factorization> {
    let n = k.size();
    let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / n as f64);
    let nodes = unit_circle_nodes(grid);
    let q_vals: Vec<Complex64> = nodes.iter().map(|&t| k.q.eval(t)).collect();
    let min_q = q_vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if min_q < tol.singularity {
        return Err(WhError::ContourSingularity {
            min_abs: min_q,
            tol: tol.singularity,
        });
    }
    let coeff_samples: Vec<Vec<Complex64>> =
        k.coefficients.iter().map(|a| a.samples(grid)).collect();
    // b_0 = a_n q^n, b_m = a_m for 1 <= m < n; the scalar symbols are
    // lambda_p = sum_m b_m q^m omega^{-mp}
    let mut lambda: Vec<Vec<Complex64>> = vec![Vec::with_capacity(grid); n];
    for idx in 0..grid {
        let qv = q_vals[idx];
        let qn = qv.powi(n as i32);
        let mut b = Vec::with_capacity(n);
        b.push(coeff_samples[n - 1][idx] * qn);
        for m in 1..n {
            b.push(coeff_samples[m - 1][idx]);
        }
        for (p, lam) in lambda.iter_mut().enumerate() {
            let mut acc = ZERO;
            let mut qpow = ONE;
            for (m, &bm) in b.iter().enumerate() {
                let phase = omega.powi(-((m * p) as i32 % n as i32));
                acc += bm * qpow * phase;
                qpow *= qv;
                let _ = m;
            }
            lam.push(acc);
        }
    }
    // glued logarithms; every scalar symbol must be zero-free and unwound
    let mut logs = Vec::with_capacity(n);
    for lam in &lambda {
        let min_abs = lam.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if min_abs < tol.singularity {
            return Err(WhError::ContourSingularity {
                min_abs,
                tol: tol.singularity,
            });
        }
        let (u, winding) = glued_log_samples(lam)?;
        if winding != 0 {
            return Err(WhError::NotInClass(format!(
                "scalar symbol winds {winding} times; logarithm branches collide"
            )));
        }
        logs.push(u);
    }
    // delta_s = sum_p omega^{sp} u_p / (n q^s) for s = 1..n-1, split additively
    let mut delta_plus: Vec<LaurentFunction> = Vec::with_capacity(n - 1);
    let mut delta_minus: Vec<LaurentFunction> = Vec::with_capacity(n - 1);
    for s in 1..n {
        let samples: Vec<Complex64> = (0..grid)
            .map(|idx| {
                let mut acc = ZERO;
                for (p, u) in logs.iter().enumerate() {
                    acc += omega.powi(((s * p) % n) as i32) * u[idx];
                }
                acc / (n as f64 * q_vals[idx].powi(s as i32))
            })
            .collect();
        let f = LaurentFunction::from_samples(&samples)?;
        check_tail(&f, grid, tol)?;
        let (fp, fm) = f.cauchy_split();
        delta_plus.push(fp);
        delta_minus.push(fm);
    }
    // scalar determinant factor: det C = prod_p lambda_p, n-th root of each
    // one-sided factor through the split of (sum_p u_p) / n
    let det_log: Vec<Complex64> = (0..grid)
        .map(|idx| logs.iter().map(|u| u[idx]).sum::<Complex64>() / n as f64)
        .collect();
    let det_log_fn = LaurentFunction::from_samples(&det_log)?;
    check_tail(&det_log_fn, grid, tol)?;
    let (det_log_plus, det_log_minus) = det_log_fn.cauchy_split();
    // assemble C(side) = det_root(side) sum_p gamma_p(side) E^p
    let assemble = |det_log_side: &LaurentFunction,
                    deltas: &[LaurentFunction]|
     -> WhResult<MatrixFunction> {
        let det_side = det_log_side.samples(grid);
        let delta_side: Vec<Vec<Complex64>> = deltas.iter().map(|d| d.samples(grid)).collect();
        let mut node_mats = Vec::with_capacity(grid);
        for (idx, &t) in nodes.iter().enumerate() {
            let qv = q_vals[idx];
            // gamma_p = sum_m omega^{mp} / (n q^p) exp(sum_r q^{n-r} omega^{rm} delta_{n-r})
            let mut exps = Vec::with_capacity(n);
            for m in 0..n {
                let mut arg = ZERO;
                for r in 1..n {
                    let d = delta_side[n - r - 1][idx];
                    arg += qv.powi((n - r) as i32) * omega.powi(((r * m) % n) as i32) * d;
                }
                exps.push(arg.exp());
            }
            let e_val = k.e_mat.eval(t);
            let mut acc = vec![ZERO; n * n];
            let mut e_pow = linalg::identity(n);
            for p in 0..n {
                let mut gamma = ZERO;
                for (m, &e) in exps.iter().enumerate() {
                    gamma += omega.powi(((m * p) % n) as i32) * e;
                }
                gamma /= n as f64 * qv.powi(p as i32);
                for (afull, ep) in acc.iter_mut().zip(&e_pow) {
                    *afull += gamma * ep;
                }
                e_pow = linalg::mat_mul(n, n, n, &e_pow, &e_val);
            }
            let det_root = det_side[idx].exp();
            for v in acc.iter_mut() {
                *v *= det_root;
            }
            node_mats.push(acc);
        }
        MatrixFunction::from_node_matrices(n, n, &node_mats, Domain::Circle)
    };
    let plus = assemble(&det_log_plus, &delta_plus)?;
    let minus = assemble(&det_log_minus, &delta_minus)?;
    for f in [&plus, &minus] {
        for e in f.entries() {
            check_tail(e, grid, tol)?;
        }
    }
    let mut fact = Factorization {
        plus,
        minus,
        partial_indices: vec![0; n],
        residual_inf: 0.0,
        analyticity_defect: 0.0,
        order: FactorOrder::PlusDiagMinus,
    };
    fact.measure_against(&k.matrix(tol)?);
    // as in the 2x2 class, the defect reports the one-sidedness of the
    // scalar splittings; the matrix factors carry the structure growth
    let mut split_defect: f64 = det_log_plus.defect_plus().max(det_log_minus.defect_minus());
    for d in &delta_plus {
        split_defect = split_defect.max(d.defect_plus());
    }
    for d in &delta_minus {
        split_defect = split_defect.max(d.defect_minus());
    }
    fact.analyticity_defect = split_defect;
    Ok(fact)
}

/// Witness of a commutativity violation: the two contour nodes and the
/// commutator magnitude there.
#[derive(Debug, Clone)]
pub struct CommutativityWitness {
    pub t: Complex64,
    pub tau: Complex64,
    pub commutator_norm: f64,
}

/// Check `G(t) G(tau) = G(tau) G(t)` over all pairs from a deterministic
/// subsample of `trials` grid nodes; returns the first violating pair.
pub fn is_functionally_commutative(
    g: &MatrixFunction,
    trials: usize,
) -> (bool, Option<CommutativityWitness>) {
    assert!(g.is_square(), "commutativity check needs a square matrix");
    let n = g.rows();
    let trials = trials.max(2);
    let grid = g.alias_free_grid(trials.next_power_of_two().max(64));
    let nodes = unit_circle_nodes(grid);
    let stride = grid / trials.min(grid);
    let picked: Vec<usize> = (0..trials.min(grid)).map(|k| k * stride).collect();
    let values: Vec<Vec<Complex64>> = picked
        .iter()
        .map(|&j| g.entries().iter().map(|e| e.eval(nodes[j])).collect())
        .collect();
    let scale = values
        .iter()
        .flat_map(|m| m.iter().map(|v| v.norm()))
        .fold(0.0, f64::max)
        .max(1e-300);
    for a in 0..picked.len() {
        for b in a + 1..picked.len() {
            let ab = linalg::mat_mul(n, n, n, &values[a], &values[b]);
            let ba = linalg::mat_mul(n, n, n, &values[b], &values[a]);
            let worst = ab
                .iter()
                .zip(&ba)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            if worst > 1e-10 * scale * scale {
                return (
                    false,
                    Some(CommutativityWitness {
                        t: nodes[picked[a]],
                        tau: nodes[picked[b]],
                        commutator_norm: worst,
                    }),
                );
            }
        }
    }
    (true, None)
}

/// Factor a functionally commutative matrix.
///
/// Dispatch: diagonal matrices factor entrywise; matrices with a constant
/// eigenbasis factor through it; the rest go through a continuous matrix
/// logarithm glued along the contour and split entrywise (which requires
/// the determinant winding to distribute evenly over the dimension).
pub fn factor_funcomm(g: &MatrixFunction, tol: &Tolerances) -> WhResult<Factorization> {
    if !g.is_square() {
        return Err(WhError::InvalidInput("matrix must be square".into()));
    }
    let (commutative, witness) = is_functionally_commutative(g, 32);
    if !commutative {
        let w = witness.expect("violation carries a witness");
        return Err(WhError::NotInClass(format!(
            "values at {} and {} fail to commute (norm {:.3e})",
            w.t, w.tau, w.commutator_norm
        )));
    }
    let n = g.rows();
    let scale = g.sup_norm().max(1e-300);
    // diagonal: factor entrywise
    let mut off_diag: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off_diag = off_diag.max(g.entry(i, j).sup_norm());
            }
        }
    }
    if off_diag < 1e-12 * scale {
        let entries: Vec<LaurentFunction> = (0..n).map(|i| g.entry(i, i).clone()).collect();
        return diagonal_factorization(g, &entries, None, tol);
    }
    // constant eigenbasis, probed at the node with the best eigenvalue
    // separation
    if let Some(fact) = try_constant_eigenbasis(g, tol)? {
        return Ok(fact);
    }
    matrix_log_factorization(g, tol)
}

fn diagonal_factorization(
    g: &MatrixFunction,
    diag: &[LaurentFunction],
    basis: Option<(Vec<Complex64>, Vec<Complex64>)>,
    tol: &Tolerances,
) -> WhResult<Factorization> {
    let n = diag.len();
    let mut plus = MatrixFunction::zero_matrix(n, n, Domain::Circle);
    let mut minus = MatrixFunction::zero_matrix(n, n, Domain::Circle);
    // factors sorted below together with the exponents
    let mut kappas = Vec::with_capacity(n);
    for (i, d) in diag.iter().enumerate() {
        let f = factor_scalar(d, tol)?;
        *plus.entry_mut(i, i) = f.x_plus.clone();
        *minus.entry_mut(i, i) = f.x_minus.clone();
        kappas.push(f.kappa);
    }
    // with an eigenbasis H: G = (H D+) diag (D- H^-1)
    if let Some((h, h_inv)) = basis {
        let hm = crate::contour::matrix::constant_matrix(n, n, &h, Domain::Circle);
        let hm_inv = crate::contour::matrix::constant_matrix(n, n, &h_inv, Domain::Circle);
        plus = hm.mul(&plus);
        minus = minus.mul(&hm_inv);
    }
    crate::contour::matrix::sort_indices_with_factors(&mut kappas, &mut plus, &mut minus);
    let mut fact = Factorization {
        plus,
        minus,
        partial_indices: kappas,
        residual_inf: 0.0,
        analyticity_defect: 0.0,
        order: FactorOrder::PlusDiagMinus,
    };
    fact.measure_against(g);
    Ok(fact)
}

fn try_constant_eigenbasis(
    g: &MatrixFunction,
    tol: &Tolerances,
) -> WhResult<Option<Factorization>> {
    let n = g.rows();
    let grid = g.alias_free_grid(128);
    let nodes = unit_circle_nodes(grid);
    let scale = g.sup_norm().max(1e-300);
    // probe a spread of nodes for the best-separated eigenvalues
    let mut best: Option<(usize, f64)> = None;
    for k in 0..16 {
        let j = k * (grid / 16);
        let vals: Vec<Complex64> = g.entries().iter().map(|e| e.eval(nodes[j])).collect();
        let eigs = match linalg::eigenvalues(n, &vals) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let mut sep = f64::INFINITY;
        for a in 0..n {
            for b in a + 1..n {
                sep = sep.min((eigs[a] - eigs[b]).norm());
            }
        }
        if best.map_or(true, |(_, s)| sep > s) {
            best = Some((j, sep));
        }
    }
    let (j_star, sep) = match best {
        Some(v) => v,
        None => return Ok(None),
    };
    if sep < 1e-6 * scale {
        return Ok(None);
    }
    let vals: Vec<Complex64> = g.entries().iter().map(|e| e.eval(nodes[j_star])).collect();
    let eigs = linalg::eigenvalues(n, &vals)?;
    let mut h = vec![ZERO; n * n];
    for (col, &lambda) in eigs.iter().enumerate() {
        let mut shifted = vals.clone();
        for i in 0..n {
            shifted[i * n + i] -= lambda;
        }
        let null = linalg::nullspace(n, &shifted, 1e-7);
        match null.first() {
            Some(v) => {
                for i in 0..n {
                    h[i * n + col] = v[i];
                }
            }
            None => return Ok(None),
        }
    }
    let h_inv = match linalg::inverse(n, &h) {
        Some(inv) => inv,
        None => return Ok(None),
    };
    // verify the basis diagonalizes the matrix along the whole contour and
    // collect the eigenvalue functions
    let mut diag_samples: Vec<Vec<Complex64>> = vec![Vec::with_capacity(grid); n];
    for &t in &nodes {
        let vals: Vec<Complex64> = g.entries().iter().map(|e| e.eval(t)).collect();
        let d = linalg::mat_mul(n, n, n, &h_inv, &linalg::mat_mul(n, n, n, &vals, &h));
        for i in 0..n {
            for j in 0..n {
                if i != j && d[i * n + j].norm() > 1e-8 * scale {
                    return Ok(None);
                }
            }
            diag_samples[i].push(d[i * n + i]);
        }
    }
    let mut diag = Vec::with_capacity(n);
    for s in &diag_samples {
        diag.push(LaurentFunction::from_samples(s)?);
    }
    diagonal_factorization(g, &diag, Some((h, h_inv)), tol).map(Some)
}

fn matrix_log_factorization(g: &MatrixFunction, tol: &Tolerances) -> WhResult<Factorization> {
    let n = g.rows();
    let det = g.det(tol)?;
    let kappa_det = det.winding(tol)?;
    if kappa_det % n as i64 != 0 {
        return Err(WhError::NotInClass(format!(
            "determinant winding {kappa_det} does not distribute over dimension {n}"
        )));
    }
    let carrier = kappa_det / n as i64;
    let mut grid = g.alias_free_grid(128);
    'refine: loop {
        let nodes = unit_circle_nodes(grid);
        // values of t^-carrier G along the contour
        let values: Vec<Vec<Complex64>> = nodes
            .iter()
            .map(|&t| {
                let shift = t.powi(-carrier as i32);
                g.entries().iter().map(|e| e.eval(t) * shift).collect()
            })
            .collect();
        // one honest logarithm at the first node, then incremental gluing
        let base = match linalg::matrix_log(n, &values[0]) {
            Some(l) => l,
            None => {
                return Err(WhError::Resolution(
                    "matrix logarithm failed at the base node".into(),
                ))
            }
        };
        let mut log_samples: Vec<Vec<Complex64>> = Vec::with_capacity(grid);
        let mut current = base.clone();
        log_samples.push(current.clone());
        for j in 1..=grid {
            let prev_inv = match linalg::inverse(n, &values[j - 1]) {
                Some(inv) => inv,
                None => {
                    return Err(WhError::ContourSingularity {
                        min_abs: 0.0,
                        tol: tol.singularity,
                    })
                }
            };
            let ratio = linalg::mat_mul(n, n, n, &prev_inv, &values[j % grid]);
            let inc = match linalg::log_near_identity(n, &ratio) {
                Some(l) => l,
                None => {
                    if grid < tol.grid_cap {
                        grid *= 2;
                        continue 'refine;
                    }
                    return Err(WhError::Resolution(
                        "adjacent values too far apart for the logarithm at the grid cap".into(),
                    ));
                }
            };
            for (c, i) in current.iter_mut().zip(&inc) {
                *c += i;
            }
            if j < grid {
                log_samples.push(current.clone());
            }
        }
        // closure: after a full loop the logarithm must return to its start
        let closure = current
            .iter()
            .zip(&base)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let log_scale = log_samples
            .iter()
            .flat_map(|m| m.iter().map(|v| v.norm()))
            .fold(0.0, f64::max);
        if closure > 1e-8 * (1.0 + log_scale) {
            return Err(WhError::Resolution(format!(
                "matrix logarithm fails to close over the loop (defect {closure:.3e})"
            )));
        }
        let log_fn = MatrixFunction::from_node_matrices(n, n, &log_samples, Domain::Circle)?;
        let mut tail_bad = false;
        for e in log_fn.entries() {
            if check_tail(e, grid, tol).is_err() {
                tail_bad = true;
            }
        }
        if tail_bad {
            if grid < tol.grid_cap {
                grid *= 2;
                continue 'refine;
            }
            return Err(WhError::Resolution(
                "matrix logarithm tail unresolved at the grid cap".into(),
            ));
        }
        let log_plus = log_fn.map_entries(|e| e.plus_part());
        let log_minus = log_fn.map_entries(|e| e.minus_part());
        let exp_side = |side: &MatrixFunction| -> WhResult<MatrixFunction> {
            let mats = side.node_matrices(grid);
            let exped: Vec<Vec<Complex64>> = mats
                .iter()
                .map(|m| linalg::matrix_exp(n, m))
                .collect();
            MatrixFunction::from_node_matrices(n, n, &exped, Domain::Circle)
        };
        let plus = exp_side(&log_plus)?;
        let minus = exp_side(&log_minus)?;
        let mut fact = Factorization {
            plus,
            minus,
            partial_indices: vec![carrier; n],
            residual_inf: 0.0,
            analyticity_defect: 0.0,
            order: FactorOrder::PlusDiagMinus,
        };
        fact.measure_against(g);
        return Ok(fact);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// J = [[0, 1], [delta2, 0]] squares to delta2 I.
    fn off_diag_deviator(delta2: &Poly) -> PolyMatrix {
        PolyMatrix::new(
            2,
            2,
            vec![Poly::zero(), Poly::one(), delta2.clone(), Poly::zero()],
        )
    }

    #[test]
    fn kernel_class_check_rejects_bad_deviator() {
        let j = PolyMatrix::new(
            2,
            2,
            vec![Poly::one(), Poly::one(), Poly::zero(), Poly::one()],
        );
        assert!(matches!(
            KhrapkovKernel::new(
                LaurentFunction::one(),
                LaurentFunction::zero(),
                j,
                Poly::one()
            ),
            Err(WhError::NotInClass(_))
        ));
    }

    #[test]
    fn decoupled_kernel_reduces_to_scalar_factorization() {
        // k1 = 0: K = k0 I, factors are the scalar factors times I
        let nodes = unit_circle_nodes(128);
        let samples: Vec<Complex64> = nodes.iter().map(|&t| 2.0 + 0.3 * t + 0.1 / t).collect();
        let k0 = LaurentFunction::from_samples(&samples).unwrap();
        let delta2 = Poly::new(vec![c(0.25, 0.0), c(0.0, 0.0), c(0.1, 0.0)]);
        let kernel = KhrapkovKernel::new(
            k0.clone(),
            LaurentFunction::zero(),
            off_diag_deviator(&delta2),
            delta2,
        )
        .unwrap();
        let fact = factor_khrapkov(&kernel, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![0, 0]);
        assert!(fact.residual_inf < 1e-9, "residual {}", fact.residual_inf);
        let sf = factor_scalar(&k0, &tol()).unwrap();
        assert!(fact.plus.entry(0, 0).sub(&sf.x_plus).sup_norm() < 1e-9);
        assert!(fact.plus.entry(0, 1).sup_norm() < 1e-10);
    }

    #[test]
    fn forward_constructed_angle_is_recovered() {
        // build K = exp(s J) so r = 1 and theta = s with a known split
        let s_plus = LaurentFunction::new(0, vec![c(0.2, 0.0), c(0.3, 0.1)]);
        let s_minus = LaurentFunction::new(-1, vec![c(0.4, -0.05), c(0.0, 0.0)]);
        let s = s_plus.add(&s_minus);
        let delta2 = Poly::new(vec![c(0.04, 0.0), c(0.04, 0.0), c(0.01, 0.0)]);
        let j = off_diag_deviator(&delta2);
        let grid = 256;
        let nodes = unit_circle_nodes(grid);
        let s_vals = s.samples(grid);
        let mut k0_vals = Vec::with_capacity(grid);
        let mut k1_vals = Vec::with_capacity(grid);
        for (idx, &t) in nodes.iter().enumerate() {
            let d = delta2.eval(t).sqrt();
            let x = s_vals[idx] * d;
            k0_vals.push(x.cosh());
            k1_vals.push(if d.norm() > 0.0 { x.sinh() / d } else { s_vals[idx] });
        }
        let k0 = LaurentFunction::from_samples(&k0_vals).unwrap();
        let k1 = LaurentFunction::from_samples(&k1_vals).unwrap();
        let kernel = KhrapkovKernel::new(k0, k1, j, delta2).unwrap();
        let fact = factor_khrapkov(&kernel, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![0, 0]);
        assert!(fact.residual_inf < 1e-8, "residual {}", fact.residual_inf);
        // the plus factor equals exp(s_plus J)
        let want_01 = {
            let mut vals = Vec::with_capacity(grid);
            let sp = s_plus.samples(grid);
            for (idx, &t) in nodes.iter().enumerate() {
                let d = kernel.delta2.eval(t).sqrt();
                let x = sp[idx] * d;
                let sh = if d.norm() > 0.0 { x.sinh() / d } else { sp[idx] };
                vals.push(sh * kernel.j_mat.entry(0, 1).eval(t));
            }
            LaurentFunction::from_samples(&vals).unwrap()
        };
        assert!(
            fact.plus.entry(0, 1).sub(&want_01).sup_norm() < 1e-7,
            "angle split mismatch"
        );
        // factors commute
        assert!(fact.plus.commutator_norm(&fact.minus) < 1e-9);
    }

    #[test]
    fn random_admissible_kernel_reconstructs_and_commutes() {
        let delta2 = Poly::new(vec![c(0.09, 0.0), c(-0.02, 0.01), c(0.03, 0.0)]);
        let j = off_diag_deviator(&delta2);
        let k0 = LaurentFunction::new(-1, vec![c(0.1, 0.05), c(2.5, 0.0), c(0.2, -0.1)]);
        let k1 = LaurentFunction::new(-1, vec![c(0.05, 0.0), c(0.3, 0.1), c(0.1, 0.0)]);
        let kernel = KhrapkovKernel::new(k0, k1, j, delta2).unwrap();
        let fact = factor_khrapkov(&kernel, &tol()).unwrap();
        assert!(fact.residual_inf < 1e-8, "residual {}", fact.residual_inf);
        assert!(fact.plus.commutator_norm(&fact.minus) < 1e-9);
        assert!(fact.analyticity_defect < 1e-9);
    }

    #[test]
    fn jones_matches_khrapkov_on_two_by_two_overlap() {
        // E = J with a polynomial square root of delta2: q = 0.2 + 0.1 t
        let q = Poly::new(vec![c(0.2, 0.0), c(0.1, 0.0)]);
        let delta2 = q.mul(&q);
        let j = off_diag_deviator(&delta2);
        let a1 = LaurentFunction::new(-1, vec![c(0.1, 0.02), c(0.4, 0.0), c(0.05, 0.0)]);
        let a2 = LaurentFunction::new(0, vec![c(3.0, 0.0), c(0.2, 0.1)]);
        // Khrapkov form: k0 = a2 q^2, k1 = a1
        let grid = 256;
        let nodes = unit_circle_nodes(grid);
        let a2_vals = a2.samples(grid);
        let k0_vals: Vec<Complex64> = nodes
            .iter()
            .zip(&a2_vals)
            .map(|(&t, &a)| a * delta2.eval(t))
            .collect();
        let k0 = LaurentFunction::from_samples(&k0_vals).unwrap();
        let kernel_k = KhrapkovKernel::new(k0, a1.clone(), j.clone(), delta2).unwrap();
        let kernel_j = JonesKernel::new(vec![a1, a2], j, q).unwrap();
        let fk = factor_khrapkov(&kernel_k, &tol()).unwrap();
        let fj = factor_jones(&kernel_j, &tol()).unwrap();
        assert!(fk.residual_inf < 1e-8);
        assert!(fj.residual_inf < 1e-8, "residual {}", fj.residual_inf);
        // same factorization up to the scalar constant freedom
        let diff = fk.plus.sub(&fj.plus).sup_norm();
        let scale = fk.plus.sup_norm();
        assert!(diff < 1e-6 * (1.0 + scale), "factor mismatch {diff}");
    }

    #[test]
    fn jones_scalar_reduction() {
        // coefficients chosen so C = c I: a_1 = 0, a_2 = c / q^2
        let q = Poly::new(vec![c(1.0, 0.0), c(0.2, 0.0)]);
        let j = off_diag_deviator(&q.mul(&q));
        let grid = 128;
        let nodes = unit_circle_nodes(grid);
        let scalar = |t: Complex64| 2.0 + 0.5 * t;
        let a2_vals: Vec<Complex64> = nodes
            .iter()
            .map(|&t| scalar(t) / q.eval(t).powi(2))
            .collect();
        let a2 = LaurentFunction::from_samples(&a2_vals).unwrap();
        let kernel = JonesKernel::new(vec![LaurentFunction::zero(), a2], j, q).unwrap();
        let fact = factor_jones(&kernel, &tol()).unwrap();
        assert!(fact.residual_inf < 1e-8, "residual {}", fact.residual_inf);
        // off-diagonal factors vanish and the diagonal carries the scalar
        // factorization of 2 + 0.5 t (analytic inside: plus factor)
        assert!(fact.plus.entry(0, 1).sup_norm() < 1e-8);
        assert!(fact.minus.entry(1, 0).sup_norm() < 1e-8);
    }

    #[test]
    fn jones_three_by_three_cyclic_structure() {
        // E = q P with P the cyclic permutation: E^3 = q^3 I, traceless
        let q = Poly::new(vec![c(1.0, 0.0), c(0.2, 0.0)]);
        let mut entries = vec![Poly::zero(); 9];
        entries[1] = q.clone(); // (0,1)
        entries[5] = q.clone(); // (1,2)
        entries[6] = q.clone(); // (2,0)
        let e = PolyMatrix::new(3, 3, entries);
        let a1 = LaurentFunction::new(-1, vec![c(0.05, 0.0), c(0.1, 0.02), c(0.02, 0.0)]);
        let a2 = LaurentFunction::new(0, vec![c(0.03, 0.01), c(0.02, 0.0)]);
        let a3 = LaurentFunction::constant(c(1.0, 0.0));
        let kernel = JonesKernel::new(vec![a1, a2, a3], e, q).unwrap();
        let fact = factor_jones(&kernel, &tol()).unwrap();
        assert!(fact.residual_inf < 1e-8, "residual {}", fact.residual_inf);
        assert!(fact.plus.commutator_norm(&fact.minus) < 1e-9);
        assert!(fact.analyticity_defect < 1e-9);
    }

    #[test]
    fn commutativity_detector_on_known_cases() {
        // unipotent polynomial matrix: values commute pairwise
        let mut g = MatrixFunction::identity(2, Domain::Circle);
        *g.entry_mut(0, 1) = LaurentFunction::monomial(1);
        let (ok, _) = is_functionally_commutative(&g, 32);
        assert!(ok);
        // [[1, t], [t^2, 1]] does not
        let mut h = MatrixFunction::identity(2, Domain::Circle);
        *h.entry_mut(0, 1) = LaurentFunction::monomial(1);
        *h.entry_mut(1, 0) = LaurentFunction::monomial(2);
        let (ok, witness) = is_functionally_commutative(&h, 32);
        assert!(!ok);
        let w = witness.unwrap();
        assert!(w.commutator_norm > 1e-6);
    }

    #[test]
    fn funcomm_diagonal_matrix_factors_entrywise() {
        let g = MatrixFunction::monomial_diag(&[0, 0], Domain::Circle);
        let fact = factor_funcomm(&g, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![0, 0]);
        assert!(fact.residual_inf < 1e-10);
    }

    #[test]
    fn funcomm_nilpotent_exponential() {
        // G = exp(phi N) with N = [[0,1],[0,0]] and phi a Laurent polynomial:
        // the factors are exp(phi_plus N) and exp(phi_minus N)
        let phi = LaurentFunction::new(-1, vec![c(0.4, 0.1), c(0.0, 0.0), c(0.7, 0.0)]);
        let mut g = MatrixFunction::identity(2, Domain::Circle);
        *g.entry_mut(0, 1) = phi.clone();
        let fact = factor_funcomm(&g, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![0, 0]);
        assert!(fact.residual_inf < 1e-8, "residual {}", fact.residual_inf);
        let (phi_plus, phi_minus) = phi.cauchy_split();
        assert!(fact.plus.entry(0, 1).sub(&phi_plus).sup_norm() < 1e-8);
        assert!(fact.minus.entry(0, 1).sub(&phi_minus).sup_norm() < 1e-8);
    }

    #[test]
    fn funcomm_scalar_multiple_of_identity() {
        let nodes = unit_circle_nodes(128);
        let samples: Vec<Complex64> = nodes.iter().map(|&t| 2.0 + 0.4 * t + 0.2 / t).collect();
        let s = LaurentFunction::from_samples(&samples).unwrap();
        let mut g = MatrixFunction::zero_matrix(2, 2, Domain::Circle);
        *g.entry_mut(0, 0) = s.clone();
        *g.entry_mut(1, 1) = s.clone();
        let fact = factor_funcomm(&g, &tol()).unwrap();
        assert!(fact.residual_inf < 1e-9);
        let sf = factor_scalar(&s, &tol()).unwrap();
        assert!(fact.plus.entry(0, 0).sub(&sf.x_plus).sup_norm() < 1e-8);
    }

    #[test]
    fn funcomm_constant_conjugated_diagonal_with_unequal_indices() {
        // H diag(t, 1) H^-1 is functionally commutative with indices (1, 0)
        let h = vec![c(1.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(-1.0, 0.0)];
        let h_inv = linalg::inverse(2, &h).unwrap();
        let nodes = unit_circle_nodes(128);
        let mut node_mats = Vec::new();
        for &t in &nodes {
            let d = vec![t, ZERO, ZERO, ONE];
            let m = linalg::mat_mul(2, 2, 2, &h, &linalg::mat_mul(2, 2, 2, &d, &h_inv));
            node_mats.push(m);
        }
        let g = MatrixFunction::from_node_matrices(2, 2, &node_mats, Domain::Circle).unwrap();
        let (ok, _) = is_functionally_commutative(&g, 32);
        assert!(ok);
        let fact = factor_funcomm(&g, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![1, 0]);
        assert!(fact.residual_inf < 1e-8, "residual {}", fact.residual_inf);
        assert!(fact.analyticity_defect < 1e-9);
    }

    #[test]
    fn funcomm_rejects_noncommutative_input() {
        let mut h = MatrixFunction::identity(2, Domain::Circle);
        *h.entry_mut(0, 1) = LaurentFunction::monomial(1);
        *h.entry_mut(1, 0) = LaurentFunction::monomial(2);
        assert!(matches!(
            factor_funcomm(&h, &tol()),
            Err(WhError::NotInClass(_))
        ));
    }
}
