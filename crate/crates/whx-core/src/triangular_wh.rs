//! Canonical-matrix factorization of triangular matrix functions.
//!
//! For a lower-triangular 2x2 matrix with nonvanishing diagonal the
//! homogeneous boundary problem has the explicit piecewise-analytic
//! candidate built from the canonical scalar solutions of the diagonal
//! entries and a Cauchy transform in the off-diagonal slot. The candidate
//! need not have the normal form at infinity; elementary polynomial column
//! operations (the continued-fraction scheme driven by the reciprocal of
//! the off-diagonal transform) rebuild the minus matrix until the column
//! orders at infinity add up to the index of the determinant. The column
//! orders are then the partial indices and the factorization follows from
//! `G+ = X+`, `G- = Lambda^-1 (X-)^-1`.
//!
//! The n x n case reduces recursively: factor the leading block, transport
//! the bottom row through the inverse minus factor, and factor the bordered
//! matrix with monomial diagonal that results.

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::contour::laurent::LaurentFunction;
use crate::contour::matrix::{
    det_at_point, probe_points, sort_indices_with_factors, Domain, FactorOrder, Factorization,
    MatrixFunction,
};
use crate::error::{WhError, WhResult};
use crate::scalar_rh::factor_scalar;

const ORDER_REL_THRESHOLD: f64 = 1e-9;

/// Lower-triangular 2x2 data: nonvanishing diagonal entries and the
/// lower-left coupling entry.
#[derive(Debug, Clone)]
pub struct Triangular2x2 {
    pub zeta1: LaurentFunction,
    pub zeta2: LaurentFunction,
    pub coupling: LaurentFunction,
}

impl Triangular2x2 {
    pub fn matrix(&self) -> MatrixFunction {
        MatrixFunction::new(
            2,
            2,
            vec![
                self.zeta1.clone(),
                LaurentFunction::zero(),
                self.coupling.clone(),
                self.zeta2.clone(),
            ],
            Domain::Circle,
        )
    }
}

/// A fundamental solution pair of the homogeneous boundary problem with
/// nowhere-vanishing determinant; `partial_indices` are the column orders of
/// the minus matrix at infinity once it has the normal form.
#[derive(Debug, Clone)]
pub struct CanonicalMatrix {
    pub x_plus: MatrixFunction,
    pub x_minus: MatrixFunction,
    /// Entry orders of the minus matrix at infinity (`None` for zero
    /// entries).
    pub orders_at_infinity: Vec<Vec<Option<i64>>>,
    pub partial_indices: Vec<i64>,
}

impl CanonicalMatrix {
    fn from_parts(x_plus: MatrixFunction, x_minus: MatrixFunction) -> Self {
        let orders = entry_orders(&x_minus);
        let indices = column_orders(&x_minus);
        CanonicalMatrix {
            x_plus,
            x_minus,
            orders_at_infinity: orders,
            partial_indices: indices,
        }
    }

    /// Sup residual of the boundary relation `X+ = G X-` on the grid.
    pub fn boundary_residual(&self, g: &MatrixFunction) -> f64 {
        self.x_plus.sub(&g.mul(&self.x_minus)).sup_norm()
    }

    /// Smallest `|det X|` over the contour grid and a ring of off-contour
    /// probe points (plus matrix inside, minus matrix outside).
    pub fn min_abs_det(&self, tol: &Tolerances) -> WhResult<f64> {
        let det_minus = self.x_minus.det(tol)?;
        let mut min = det_minus.min_abs();
        for z in probe_points() {
            let m = if z.norm() < 1.0 {
                &self.x_plus
            } else {
                &self.x_minus
            };
            min = min.min(det_at_point(m, z).norm());
        }
        Ok(min)
    }
}

/// Order at infinity of one entry: `f ~ z^-order`; `None` for a numerically
/// zero entry. The threshold is relative to `scale`.
fn order_with_scale(f: &LaurentFunction, scale: f64) -> Option<i64> {
    if scale == 0.0 {
        return None;
    }
    let mut top: Option<i64> = None;
    for (k, c) in f.iter_coeffs() {
        if c.norm() > ORDER_REL_THRESHOLD * scale {
            top = Some(top.map_or(k, |t: i64| t.max(k)));
        }
    }
    top.map(|t| -t)
}

fn entry_orders(m: &MatrixFunction) -> Vec<Vec<Option<i64>>> {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| {
                    let scale = column_scale(m, j);
                    order_with_scale(m.entry(i, j), scale)
                })
                .collect()
        })
        .collect()
}

fn column_scale(m: &MatrixFunction, j: usize) -> f64 {
    (0..m.rows())
        .map(|i| m.entry(i, j).max_coeff())
        .fold(0.0, f64::max)
}

/// Column order = minimum entry order (the column behaves like `z^-order`).
fn column_orders(m: &MatrixFunction) -> Vec<i64> {
    (0..m.cols())
        .map(|j| {
            let scale = column_scale(m, j);
            (0..m.rows())
                .filter_map(|i| order_with_scale(m.entry(i, j), scale))
                .min()
                .unwrap_or(i64::MAX)
        })
        .collect()
}

/// Leading coefficient vector of column `j` at its order.
fn leading_vector(m: &MatrixFunction, j: usize, order: i64) -> Vec<Complex64> {
    (0..m.rows()).map(|i| m.entry(i, j).coeff(-order)).collect()
}

/// Rebuild the minus matrix to the normal form at infinity by elementary
/// polynomial column operations applied simultaneously to both matrices.
/// Returns the number of quotient runs (consecutive reductions aimed at the
/// same column).
fn normalize_pair(
    x_plus: &mut MatrixFunction,
    x_minus: &mut MatrixFunction,
    tol: &Tolerances,
) -> WhResult<usize> {
    let n = x_minus.cols();
    let det = x_minus.det(tol)?;
    let sigma = order_with_scale(&det, det.max_coeff()).ok_or_else(|| {
        WhError::Resolution("determinant of the minus matrix is numerically zero".into())
    })?;
    let mut steps = 0usize;
    let mut prev_target: Option<usize> = None;
    let mut micro_ops = 0usize;
    loop {
        let orders = column_orders(x_minus);
        if orders.iter().any(|&o| o == i64::MAX) {
            return Err(WhError::Resolution(
                "a column of the minus matrix vanished during normalization".into(),
            ));
        }
        let total: i64 = orders.iter().sum();
        if total >= sigma {
            return Ok(steps);
        }
        // leading vectors as the columns of a small matrix
        let mut v = vec![Complex64::new(0.0, 0.0); n * n];
        for (j, &oj) in orders.iter().enumerate() {
            let col = leading_vector(x_minus, j, oj);
            for i in 0..n {
                v[i * n + j] = col[i];
            }
        }
        let null = crate::linalg::nullspace(n, &v, tol.rank);
        let alpha = match null.first() {
            Some(a) => a.clone(),
            None => {
                return Err(WhError::Resolution(
                    "leading vectors are independent but the order sum is deficient".into(),
                ))
            }
        };
        let amax = alpha.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let significant: Vec<usize> = (0..n)
            .filter(|&j| alpha[j].norm() > 1e-8 * amax)
            .collect();
        let min_order = significant.iter().map(|&j| orders[j]).min().unwrap();
        let target = match prev_target {
            Some(p) if significant.contains(&p) && orders[p] == min_order => p,
            _ => *significant
                .iter()
                .find(|&&j| orders[j] == min_order)
                .unwrap(),
        };
        if prev_target != Some(target) {
            steps += 1;
            if steps > tol.normalization_step_cap {
                return Err(WhError::Resolution(format!(
                    "normalization exceeded {} quotient steps",
                    tol.normalization_step_cap
                )));
            }
            prev_target = Some(target);
        }
        micro_ops += 1;
        if micro_ops > 16 * tol.normalization_step_cap {
            return Err(WhError::Resolution(
                "normalization stalled in elementary operations".into(),
            ));
        }
        // col_target += sum_j (alpha_j / alpha_target) t^{o_j - o_target} col_j
        for &j in &significant {
            if j == target {
                continue;
            }
            let coef = alpha[j] / alpha[target];
            let shift = orders[j] - orders[target];
            for i in 0..n {
                let upd_minus = x_minus.entry(i, j).shifted(shift).scale(coef);
                *x_minus.entry_mut(i, target) = x_minus.entry(i, target).add(&upd_minus);
                let upd_plus = x_plus.entry(i, j).shifted(shift).scale(coef);
                *x_plus.entry_mut(i, target) = x_plus.entry(i, target).add(&upd_plus);
            }
        }
        // sweep round-off so orders are measured on clean columns
        for i in 0..n {
            *x_minus.entry_mut(i, target) = x_minus.entry(i, target).cleaned(1e-13);
            *x_plus.entry_mut(i, target) = x_plus.entry(i, target).cleaned(1e-13);
        }
    }
}

/// Rebuild a candidate canonical pair to the normal form at infinity.
/// Returns the normalized matrix and the quotient-step count (zero when the
/// input already had the normal form).
pub fn normalize_at_infinity(
    cm: &CanonicalMatrix,
    tol: &Tolerances,
) -> WhResult<(CanonicalMatrix, usize)> {
    let mut x_plus = cm.x_plus.clone();
    let mut x_minus = cm.x_minus.clone();
    let steps = normalize_pair(&mut x_plus, &mut x_minus, tol)?;
    Ok((CanonicalMatrix::from_parts(x_plus, x_minus), steps))
}

/// Canonical pair for a lower-triangular matrix whose leading diagonal
/// carries the supplied canonical scalar pairs and whose last row couples
/// through `w`.
///
/// `diag_pairs[j] = (x_j^+, x_j^-)` with `x_j^+ = zeta_j x_j^-` on the
/// contour; `corner` is the scalar factorization of the lower-right entry.
fn bordered_canonical_pair(
    diag_pairs: &[(LaurentFunction, LaurentFunction)],
    w_row: &[LaurentFunction],
    corner_plus: &LaurentFunction,
    corner_plus_inv: &LaurentFunction,
    corner_minus: &LaurentFunction,
) -> (MatrixFunction, MatrixFunction) {
    let m = diag_pairs.len();
    let n = m + 1;
    let mut x_plus = MatrixFunction::zero_matrix(n, n, Domain::Circle);
    let mut x_minus = MatrixFunction::zero_matrix(n, n, Domain::Circle);
    for (j, (xp, xm)) in diag_pairs.iter().enumerate() {
        *x_plus.entry_mut(j, j) = xp.clone();
        *x_minus.entry_mut(j, j) = xm.clone();
    }
    *x_plus.entry_mut(m, m) = corner_plus.clone();
    *x_minus.entry_mut(m, m) = corner_minus.clone();
    for (j, w) in w_row.iter().enumerate() {
        // h_j = w_j x_j^- / x_n^+, split into boundary values of the
        // Cauchy transform
        let h = w.mul(&diag_pairs[j].1).mul(corner_plus_inv);
        let (h_plus, h_minus) = h.cauchy_split();
        *x_plus.entry_mut(m, j) = corner_plus.mul(&h_plus);
        *x_minus.entry_mut(m, j) = corner_minus.mul(&h_minus.neg());
    }
    (x_plus, x_minus)
}

/// Assemble the factorization `G = X+ . diag(t^kappa) . (Lambda^-1 (X-)^-1)`
/// from a normalized canonical pair.
fn factorization_from_canonical(
    g: &MatrixFunction,
    cm: &CanonicalMatrix,
    tol: &Tolerances,
) -> WhResult<Factorization> {
    let mut kappas = cm.partial_indices.clone();
    let mut plus = cm.x_plus.clone();
    let x_minus_inv = cm.x_minus.inverse(tol)?;
    let neg: Vec<i64> = kappas.iter().map(|&k| -k).collect();
    let mut minus = x_minus_inv.mul_monomial_diag_left(&neg);
    minus = minus.map_entries(|e| e.cleaned(1e-14));
    plus = plus.map_entries(|e| e.cleaned(1e-14));
    sort_indices_with_factors(&mut kappas, &mut plus, &mut minus);
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

/// Factor a lower-triangular 2x2 matrix with nonvanishing diagonal.
pub fn chebotarev_2x2(
    t2: &Triangular2x2,
    tol: &Tolerances,
) -> WhResult<(CanonicalMatrix, Factorization)> {
    let f1 = factor_scalar(&t2.zeta1, tol)?;
    let f2 = factor_scalar(&t2.zeta2, tol)?;
    let (x_plus, x_minus) = bordered_canonical_pair(
        &[(f1.canonical_plus(), f1.canonical_minus())],
        &[t2.coupling.clone()],
        &f2.canonical_plus(),
        &f2.x_plus_inverse(),
        &f2.canonical_minus(),
    );
    let candidate = CanonicalMatrix::from_parts(x_plus, x_minus);
    let (normalized, _steps) = normalize_at_infinity(&candidate, tol)?;
    let g = t2.matrix();
    let fact = factorization_from_canonical(&g, &normalized, tol)?;
    Ok((normalized, fact))
}

/// Factor an n x n lower-triangular matrix function by recursive reduction
/// to the 2x2 case. The recursion depth is capped at 8 to keep the grid
/// conditioning under control.
pub fn reduce_triangular_n(b: &MatrixFunction, tol: &Tolerances) -> WhResult<Factorization> {
    if !b.is_square() {
        return Err(WhError::InvalidInput("matrix must be square".into()));
    }
    let n = b.rows();
    if n == 0 || n > 8 {
        return Err(WhError::InvalidInput(
            "triangular reduction supports sizes 1 through 8".into(),
        ));
    }
    // the strictly upper part must vanish
    let scale = b.sup_norm().max(1e-300);
    for i in 0..n {
        for j in i + 1..n {
            if b.entry(i, j).sup_norm() > 1e-12 * scale {
                return Err(WhError::InvalidInput(
                    "matrix is not lower triangular".into(),
                ));
            }
        }
    }
    if n == 1 {
        let f = factor_scalar(b.entry(0, 0), tol)?;
        let plus = MatrixFunction::new(1, 1, vec![f.x_plus.clone()], Domain::Circle);
        let minus = MatrixFunction::new(1, 1, vec![f.x_minus.clone()], Domain::Circle);
        let mut fact = Factorization {
            plus,
            minus,
            partial_indices: vec![f.kappa],
            residual_inf: 0.0,
            analyticity_defect: 0.0,
            order: FactorOrder::PlusDiagMinus,
        };
        fact.measure_against(b);
        return Ok(fact);
    }
    if n == 2 {
        let t2 = Triangular2x2 {
            zeta1: b.entry(0, 0).clone(),
            zeta2: b.entry(1, 1).clone(),
            coupling: b.entry(1, 0).clone(),
        };
        return chebotarev_2x2(&t2, tol).map(|(_, f)| f);
    }
    // leading (n-1) block
    let m = n - 1;
    let mut a_entries = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            a_entries.push(b.entry(i, j).clone());
        }
    }
    let a = MatrixFunction::new(m, m, a_entries, Domain::Circle);
    let fact_a = reduce_triangular_n(&a, tol)?;
    // transported bottom row: w = b_row . (A-)^-1
    let a_minus_inv = fact_a.minus.inverse(tol)?;
    let mut w_row = Vec::with_capacity(m);
    for j in 0..m {
        let mut acc = LaurentFunction::zero();
        for k in 0..m {
            acc = acc.add(&b.entry(m, k).mul(a_minus_inv.entry(k, j)));
        }
        w_row.push(acc.cleaned(1e-14));
    }
    // bordered matrix with monomial diagonal diag(t^kappa_A) and corner c
    let corner = factor_scalar(b.entry(m, m), tol)?;
    let diag_pairs: Vec<(LaurentFunction, LaurentFunction)> = fact_a
        .partial_indices
        .iter()
        .map(|&k| (LaurentFunction::one(), LaurentFunction::monomial(-k)))
        .collect();
    let (x_plus, x_minus) = bordered_canonical_pair(
        &diag_pairs,
        &w_row,
        &corner.canonical_plus(),
        &corner.x_plus_inverse(),
        &corner.canonical_minus(),
    );
    let candidate = CanonicalMatrix::from_parts(x_plus, x_minus);
    let (normalized, _) = normalize_at_infinity(&candidate, tol)?;
    // reduced matrix D = diag(A+,1)^-1 B diag(A-,1)^-1 is factored by the
    // normalized pair; undo the border conjugation
    let mut d = MatrixFunction::monomial_diag(
        &fact_a
            .partial_indices
            .iter()
            .copied()
            .chain(std::iter::once(0))
            .collect::<Vec<_>>(),
        Domain::Circle,
    );
    for (j, w) in w_row.iter().enumerate() {
        *d.entry_mut(m, j) = w.clone();
    }
    *d.entry_mut(m, m) = b.entry(m, m).clone();
    let fact_d = factorization_from_canonical(&d, &normalized, tol)?;
    // B+ = diag(A+, 1) D+, B- = D- diag(A-, 1)
    let mut border_plus = MatrixFunction::identity(n, Domain::Circle);
    let mut border_minus = MatrixFunction::identity(n, Domain::Circle);
    for i in 0..m {
        for j in 0..m {
            *border_plus.entry_mut(i, j) = fact_a.plus.entry(i, j).clone();
            *border_minus.entry_mut(i, j) = fact_a.minus.entry(i, j).clone();
        }
    }
    let mut kappas = fact_d.partial_indices.clone();
    let mut plus = border_plus.mul(&fact_d.plus);
    let mut minus = fact_d.minus.mul(&border_minus);
    sort_indices_with_factors(&mut kappas, &mut plus, &mut minus);
    let mut fact = Factorization {
        plus,
        minus,
        partial_indices: kappas,
        residual_inf: 0.0,
        analyticity_defect: 0.0,
        order: FactorOrder::PlusDiagMinus,
    };
    fact.measure_against(b);
    Ok(fact)
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

    #[test]
    fn trivial_identity_diagonal() {
        let t2 = Triangular2x2 {
            zeta1: LaurentFunction::one(),
            zeta2: LaurentFunction::one(),
            coupling: LaurentFunction::zero(),
        };
        let (cm, fact) = chebotarev_2x2(&t2, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![0, 0]);
        assert!(cm.boundary_residual(&t2.matrix()) < 1e-12);
        assert!(fact.residual_inf < 1e-12);
    }

    #[test]
    fn decoupled_monomial_diagonal() {
        let t2 = Triangular2x2 {
            zeta1: LaurentFunction::monomial(1),
            zeta2: LaurentFunction::monomial(-1),
            coupling: LaurentFunction::zero(),
        };
        let (cm, fact) = chebotarev_2x2(&t2, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![1, -1]);
        assert!(cm.boundary_residual(&t2.matrix()) < 1e-12);
        assert!(fact.residual_inf < 1e-12);
    }

    #[test]
    fn coupling_collapses_unstable_indices() {
        // zeta = (t, 1/t) with a small constant coupling: the indices
        // collapse from (1, -1) to (0, 0) after normalization and the
        // factors blow up like 1/eps
        let eps = 0.1;
        let t2 = Triangular2x2 {
            zeta1: LaurentFunction::monomial(1),
            zeta2: LaurentFunction::monomial(-1),
            coupling: LaurentFunction::constant(c(eps, 0.0)),
        };
        let g = t2.matrix();
        let (cm, fact) = chebotarev_2x2(&t2, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![0, 0]);
        assert!(cm.boundary_residual(&g) < 1e-8);
        assert!(fact.residual_inf < 1e-8, "residual {}", fact.residual_inf);
        assert!(fact.analyticity_defect < 1e-9);
        let blowup = fact.plus.sup_norm().max(fact.minus.sup_norm());
        assert!(blowup > 0.5 / eps, "factors should grow like 1/eps");
        // determinant of the canonical pair never vanishes
        assert!(cm.min_abs_det(&tol()).unwrap() > 1e-6);
    }

    #[test]
    fn already_normal_input_is_returned_unchanged() {
        let t2 = Triangular2x2 {
            zeta1: LaurentFunction::one(),
            zeta2: LaurentFunction::one(),
            coupling: LaurentFunction::new(-1, vec![c(0.5, 0.0), c(0.0, 0.0), c(0.25, 0.0)]),
        };
        let f1 = factor_scalar(&t2.zeta1, &tol()).unwrap();
        let f2 = factor_scalar(&t2.zeta2, &tol()).unwrap();
        let (xp, xm) = bordered_canonical_pair(
            &[(f1.canonical_plus(), f1.canonical_minus())],
            &[t2.coupling.clone()],
            &f2.canonical_plus(),
            &f2.x_plus_inverse(),
            &f2.canonical_minus(),
        );
        let cm = CanonicalMatrix::from_parts(xp, xm);
        let (normalized, steps) = normalize_at_infinity(&cm, &tol()).unwrap();
        assert_eq!(steps, 0);
        assert!(normalized.x_minus.sup_distance(&cm.x_minus) < 1e-13);
    }

    #[test]
    fn spread_diagonal_with_unit_coupling_balances_indices() {
        let t2 = Triangular2x2 {
            zeta1: LaurentFunction::monomial(2),
            zeta2: LaurentFunction::monomial(-2),
            coupling: LaurentFunction::one(),
        };
        let g = t2.matrix();
        let (cm, fact) = chebotarev_2x2(&t2, &tol()).unwrap();
        assert_eq!(fact.index_sum(), 0);
        assert_eq!(fact.partial_indices, vec![0, 0]);
        assert!(cm.boundary_residual(&g) < 1e-10);
        assert!(fact.residual_inf < 1e-9);
    }

    #[test]
    fn forward_constructed_quotients_take_two_steps() {
        // zeta1 = t^4, zeta2 = 1, coupling chosen so the off-diagonal
        // transform is phi- = 1/t + 0.5/t^2: the reciprocal expands into
        // two continued-fraction quotients before the normal form appears
        let phi_target = LaurentFunction::new(-2, vec![c(0.5, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let coupling = phi_target.shifted(4).neg().neg(); // a = t^4 phi
        // h = a x1^- / x2^+ = a t^-4, so phi^- = -h_- = -a t^-4|_-
        let coupling = coupling.scale(c(-1.0, 0.0));
        let t2 = Triangular2x2 {
            zeta1: LaurentFunction::monomial(4),
            zeta2: LaurentFunction::one(),
            coupling,
        };
        let f1 = factor_scalar(&t2.zeta1, &tol()).unwrap();
        let f2 = factor_scalar(&t2.zeta2, &tol()).unwrap();
        let (xp, xm) = bordered_canonical_pair(
            &[(f1.canonical_plus(), f1.canonical_minus())],
            &[t2.coupling.clone()],
            &f2.canonical_plus(),
            &f2.x_plus_inverse(),
            &f2.canonical_minus(),
        );
        // confirm the off-diagonal really is the designed transform
        assert!(xm.entry(1, 0).sub(&phi_target).sup_norm() < 1e-12);
        let cm = CanonicalMatrix::from_parts(xp, xm);
        let (normalized, steps) = normalize_at_infinity(&cm, &tol()).unwrap();
        assert_eq!(steps, 2, "expected two quotient runs");
        let g = t2.matrix();
        assert!(normalized.boundary_residual(&g) < 1e-10);
        let fact = factorization_from_canonical(&g, &normalized, &tol()).unwrap();
        assert_eq!(fact.index_sum(), 4);
        assert!(fact.residual_inf < 1e-9);
    }

    #[test]
    fn three_by_three_diagonal_returns_scalar_windings() {
        let b = MatrixFunction::monomial_diag(&[1, 0, -2], Domain::Circle);
        let fact = reduce_triangular_n(&b, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![1, 0, -2]);
        assert!(fact.residual_inf < 1e-10);
    }

    #[test]
    fn three_by_three_unit_diagonal_with_subdiagonals() {
        let mut b = MatrixFunction::identity(3, Domain::Circle);
        *b.entry_mut(1, 0) = LaurentFunction::new(-1, vec![c(0.4, 0.0), c(0.0, 0.0), c(0.3, 0.1)]);
        *b.entry_mut(2, 0) = LaurentFunction::new(0, vec![c(0.2, 0.0), c(0.1, 0.0)]);
        *b.entry_mut(2, 1) = LaurentFunction::new(-2, vec![c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let fact = reduce_triangular_n(&b, &tol()).unwrap();
        assert_eq!(fact.partial_indices, vec![0, 0, 0]);
        assert!(fact.residual_inf < 1e-7, "residual {}", fact.residual_inf);
        assert!(fact.analyticity_defect < 1e-9);
    }

    #[test]
    fn rejects_non_triangular_input() {
        let mut b = MatrixFunction::identity(2, Domain::Circle);
        *b.entry_mut(0, 1) = LaurentFunction::one();
        assert!(matches!(
            reduce_triangular_n(&b, &tol()),
            Err(WhError::InvalidInput(_))
        ));
    }
}
