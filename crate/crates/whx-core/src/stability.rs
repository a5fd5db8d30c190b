//! Partial-index diagnostics: the stability predicate, the index-sum
//! identity, factorization-equivalence checking, and the canonical
//! instability demonstration.
//!
//! The index tuple of a factorization is unique, but it is stable under
//! small perturbations of the matrix exactly when the spread between the
//! largest and smallest index is at most one. The canonical counterexample
//! is `diag(t, 1/t)` with indices `(1, -1)`: an arbitrarily small constant
//! in the lower-left corner collapses the indices to `(0, 0)` while the
//! factors blow up like the reciprocal of the perturbation.

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::contour::laurent::LaurentFunction;
use crate::contour::matrix::{Domain, FactorOrder, Factorization, MatrixFunction};
use crate::contour::unit_circle_nodes;
use crate::error::{WhError, WhResult};
use crate::linalg;
use crate::poly::Poly;
use crate::rational_wh::{factor_rational, RationalMatrixFunction, RationalScalar};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A nonincreasing tuple of partial indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexTuple {
    kappas: Vec<i64>,
}

impl IndexTuple {
    /// Accepts any ordering and stores the sorted tuple.
    pub fn new(mut kappas: Vec<i64>) -> WhResult<Self> {
        if kappas.is_empty() {
            return Err(WhError::InvalidInput("index tuple must be nonempty".into()));
        }
        kappas.sort_unstable_by_key(|&k| std::cmp::Reverse(k));
        Ok(IndexTuple { kappas })
    }

    pub fn kappas(&self) -> &[i64] {
        &self.kappas
    }

    pub fn sum(&self) -> i64 {
        self.kappas.iter().sum()
    }

    pub fn spread(&self) -> i64 {
        self.kappas[0] - self.kappas[self.kappas.len() - 1]
    }
}

/// Stability of the index tuple under small perturbations: the spread
/// between the extreme indices is at most one.
pub fn is_stable(tuple: &IndexTuple) -> bool {
    tuple.spread() <= 1
}

/// Report of the index-sum identity check.
#[derive(Debug, Clone)]
pub struct IndexSumReport {
    pub winding_of_det: i64,
    pub index_sum: i64,
    pub residual: f64,
    pub pass: bool,
}

/// Recompute the winding of `det G` and compare with the claimed index sum;
/// also re-measures the reconstruction residual.
pub fn index_sum_check(
    g: &MatrixFunction,
    fact: &Factorization,
    tol: &Tolerances,
) -> WhResult<IndexSumReport> {
    let det = g.det(tol)?;
    let winding = det.winding(tol)?;
    let index_sum = fact.index_sum();
    let residual = fact.reconstruct().sub(g).sup_norm();
    Ok(IndexSumReport {
        winding_of_det: winding,
        index_sum,
        residual,
        pass: winding == index_sum && residual < tol.residual.max(10.0 * fact.residual_inf),
    })
}

/// Witness relating two factorizations of the same matrix.
#[derive(Debug, Clone)]
pub enum EquivalenceOutcome {
    /// Equal indices: the plus factors differ by a constant invertible
    /// matrix.
    Constant { h: Vec<Complex64> },
    /// Unequal 2x2 indices: the transfer matrix is upper triangular with
    /// constant diagonal and a polynomial corner of degree at most
    /// `kappa_1 - kappa_2`.
    UpperTriangularPolynomial {
        c1: Complex64,
        c2: Complex64,
        p: Poly,
    },
    /// The factorizations are not related by the admissible freedom.
    Mismatch { reason: String, deviation: f64 },
}

/// Compare two factorizations of the same matrix and recover the transfer
/// witness `H = (G1+)^-1 G2+` when it has the admissible structure.
pub fn equivalence_check(
    f1: &Factorization,
    f2: &Factorization,
    tol: &Tolerances,
) -> WhResult<EquivalenceOutcome> {
    if f1.order != FactorOrder::PlusDiagMinus || f2.order != FactorOrder::PlusDiagMinus {
        return Err(WhError::InvalidInput(
            "equivalence check expects plus-diag-minus factorizations".into(),
        ));
    }
    if f1.partial_indices != f2.partial_indices {
        return Ok(EquivalenceOutcome::Mismatch {
            reason: format!(
                "index tuples differ: {:?} vs {:?}",
                f1.partial_indices, f2.partial_indices
            ),
            deviation: f64::INFINITY,
        });
    }
    if f1.residual_inf > 1e-7 || f2.residual_inf > 1e-7 {
        return Err(WhError::InvalidInput(
            "both factorizations must reconstruct to 1e-7 before comparison".into(),
        ));
    }
    let n = f1.plus.rows();
    let plus1_inv = f1.plus.inverse(tol)?;
    let h = plus1_inv.mul(&f2.plus);
    // constant detection: grid standard deviation against the mean entry
    let grid = h.alias_free_grid(128);
    let node_values = h.node_matrices(grid);
    let mut mean = vec![ZERO; n * n];
    for m in &node_values {
        for (acc, v) in mean.iter_mut().zip(m) {
            *acc += v;
        }
    }
    for v in mean.iter_mut() {
        *v /= grid as f64;
    }
    let mean_mag = mean.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let spread = node_values
        .iter()
        .flat_map(|m| m.iter().zip(&mean).map(|(v, c)| (v - c).norm()))
        .fold(0.0, f64::max);
    if spread < 1e-8 * mean_mag {
        if linalg::inverse(n, &mean).is_none() {
            return Ok(EquivalenceOutcome::Mismatch {
                reason: "constant transfer matrix is singular".into(),
                deviation: spread,
            });
        }
        return Ok(EquivalenceOutcome::Constant { h: mean });
    }
    // non-constant transfer: admissible only for 2x2 with unequal indices
    if n == 2 && f1.partial_indices[0] > f1.partial_indices[1] {
        let deg = (f1.partial_indices[0] - f1.partial_indices[1]) as usize;
        let h11 = h.entry(0, 0);
        let h22 = h.entry(1, 1);
        let h21 = h.entry(1, 0);
        let h12 = h.entry(0, 1);
        let scale = h.sup_norm().max(1e-300);
        let c1 = h11.coeff(0);
        let c2 = h22.coeff(0);
        let c1_dev = h11.sub(&LaurentFunction::constant(c1)).sup_norm();
        let c2_dev = h22.sub(&LaurentFunction::constant(c2)).sup_norm();
        let lower = h21.sup_norm();
        // corner must be a polynomial of degree at most the index spread
        let mut p_coeffs = vec![ZERO; deg + 1];
        let mut corner_dev: f64 = 0.0;
        for (k, c) in h12.iter_coeffs() {
            if k >= 0 && k <= deg as i64 {
                p_coeffs[k as usize] = c;
            } else {
                corner_dev = corner_dev.max(c.norm());
            }
        }
        let deviation = c1_dev.max(c2_dev).max(lower).max(corner_dev);
        if deviation < 1e-7 * scale && c1.norm() > 1e-12 && c2.norm() > 1e-12 {
            return Ok(EquivalenceOutcome::UpperTriangularPolynomial {
                c1,
                c2,
                p: Poly::new(p_coeffs),
            });
        }
        return Ok(EquivalenceOutcome::Mismatch {
            reason: "transfer matrix lacks the upper-triangular polynomial form".into(),
            deviation,
        });
    }
    Ok(EquivalenceOutcome::Mismatch {
        reason: "transfer matrix is not constant".into(),
        deviation: spread,
    })
}

/// Report of the canonical instability experiment.
#[derive(Debug, Clone)]
pub struct PerturbationReport {
    pub eps: f64,
    /// Residual of the explicit perturbed factorization against the
    /// perturbed matrix.
    pub explicit_residual: f64,
    /// Indices recovered by the general rational factorization.
    pub recovered_indices: Vec<i64>,
    /// Largest factor entry magnitude of the explicit factorization.
    pub factor_sup: f64,
    /// The unperturbed indices for reference.
    pub base_indices: Vec<i64>,
}

/// The unperturbed diagonal matrix `diag(t, 1/t)` with indices `(1, -1)`.
pub fn unstable_base_matrix() -> MatrixFunction {
    MatrixFunction::monomial_diag(&[1, -1], Domain::Circle)
}

/// The perturbed matrix `[[t, 0], [eps, 1/t]]`.
pub fn perturbed_matrix(eps: f64) -> MatrixFunction {
    let mut g = unstable_base_matrix();
    *g.entry_mut(1, 0) = LaurentFunction::constant(Complex64::new(eps, 0.0));
    g
}

/// The explicit factorization of the perturbed matrix with identity
/// diagonal: plus factor `[[1, t], [0, eps]]`, minus factor
/// `[[0, -1/eps], [1, 1/(eps t)]]`.
pub fn perturbed_explicit_factorization(eps: f64) -> Factorization {
    let e = Complex64::new(eps, 0.0);
    let plus = MatrixFunction::new(
        2,
        2,
        vec![
            LaurentFunction::one(),
            LaurentFunction::monomial(1),
            LaurentFunction::zero(),
            LaurentFunction::constant(e),
        ],
        Domain::Circle,
    );
    let minus = MatrixFunction::new(
        2,
        2,
        vec![
            LaurentFunction::zero(),
            LaurentFunction::constant(-ONE / e),
            LaurentFunction::one(),
            LaurentFunction::scaled_monomial(ONE / e, -1),
        ],
        Domain::Circle,
    );
    let mut fact = Factorization {
        plus,
        minus,
        partial_indices: vec![0, 0],
        residual_inf: 0.0,
        analyticity_defect: 0.0,
        order: FactorOrder::PlusDiagMinus,
    };
    fact.measure_against(&perturbed_matrix(eps));
    fact
}

/// Build the perturbed matrix, verify the explicit factors reproduce it,
/// extract indices with the general rational machinery, and report how the
/// factor norms blow up as the perturbation shrinks.
pub fn perturbation_experiment(eps: f64, tol: &Tolerances) -> WhResult<PerturbationReport> {
    if eps == 0.0 || eps.abs() < 1e-12 {
        return Err(WhError::IllConditioned {
            cond: 1.0 / eps.abs().max(f64::MIN_POSITIVE),
        });
    }
    let explicit = perturbed_explicit_factorization(eps);
    // recover the indices independently through the rational factorization
    let entries = vec![
        RationalScalar::new(Poly::monomial(ONE, 1), Poly::one())?,
        RationalScalar::constant(ZERO),
        RationalScalar::constant(Complex64::new(eps, 0.0)),
        RationalScalar::new(Poly::one(), Poly::monomial(ONE, 1))?,
    ];
    let m = RationalMatrixFunction::new(2, 2, entries)?;
    let recovered = factor_rational(&m, tol)?;
    let base = factor_rational(
        &RationalMatrixFunction::new(
            2,
            2,
            vec![
                RationalScalar::new(Poly::monomial(ONE, 1), Poly::one())?,
                RationalScalar::constant(ZERO),
                RationalScalar::constant(ZERO),
                RationalScalar::new(Poly::one(), Poly::monomial(ONE, 1))?,
            ],
        )?,
        tol,
    )?;
    let factor_sup = explicit.plus.sup_norm().max(explicit.minus.sup_norm());
    Ok(PerturbationReport {
        eps,
        explicit_residual: explicit.residual_inf,
        recovered_indices: recovered.partial_indices,
        factor_sup,
        base_indices: base.partial_indices,
    })
}

/// Empirical smoothness probe for stable-index matrices: perturb by `delta`
/// times a fixed direction and measure how far the recovered factors move.
pub fn perturbation_sensitivity(
    m: &RationalMatrixFunction,
    delta: f64,
    tol: &Tolerances,
) -> WhResult<f64> {
    let base = factor_rational(m, tol)?;
    let n = m.rows;
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let e = m.entry(i, j);
            let num = if (i + j) % 2 == 0 {
                e.num.add(&e.den.scale(Complex64::new(delta, 0.0)))
            } else {
                e.num
                    .add(&e.den.scale(Complex64::new(0.0, delta * 0.5)))
            };
            entries.push(RationalScalar::new_lenient(num, e.den.clone())?);
        }
    }
    let perturbed = RationalMatrixFunction::new(n, n, entries)?;
    let fact = factor_rational(&perturbed, tol)?;
    if fact.partial_indices != base.partial_indices {
        return Err(WhError::NotInClass(
            "perturbation changed the partial indices".into(),
        ));
    }
    Ok(fact
        .plus
        .sup_distance(&base.plus)
        .max(fact.minus.sup_distance(&base.minus)))
}

/// Probe points helper re-exported for diagnostics on canonical systems.
pub fn det_min_on_probes(m: &MatrixFunction) -> f64 {
    let mut min = f64::INFINITY;
    for j in 0..16 {
        let t = unit_circle_nodes(64)[j * 4];
        let vals: Vec<Complex64> = m.entries().iter().map(|e| e.eval(t)).collect();
        min = min.min(linalg::det(m.rows(), &vals).norm());
    }
    min
}
