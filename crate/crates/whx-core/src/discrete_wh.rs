//! Discrete Wiener-Hopf systems: semi-infinite Toeplitz convolutions solved
//! through symbol factorization, paired two-sided systems, and a truncated
//! direct-solve oracle.
//!
//! The system `sum_k a_{n-k} x_k = c_n` (`n, k >= 0`) becomes
//! `A(t) X+(t) = C(t) + D-(t)` on the circle after the transform
//! `A(t) = sum_k t^k a_k`. For a nonvanishing symbol of winding zero the
//! factorization `A = A+ A-` gives the unique solution; winding `-m < 0`
//! leaves an `m`-parameter family, winding `m > 0` imposes `m` solvability
//! conditions on the right-hand side.

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::contour::laurent::LaurentFunction;
use crate::error::{WhError, WhResult};
use crate::linalg;
use crate::scalar_rh::{factor_scalar, solve_paired_symbols};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A finitely supported sequence `values[i] = x_{offset + i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub offset: i64,
    pub values: Vec<Complex64>,
}

impl Sequence {
    pub fn new(offset: i64, values: Vec<Complex64>) -> Self {
        Sequence { offset, values }
    }

    pub fn delta() -> Self {
        Sequence::new(0, vec![Complex64::new(1.0, 0.0)])
    }

    pub fn get(&self, n: i64) -> Complex64 {
        let idx = n - self.offset;
        if idx < 0 || idx >= self.values.len() as i64 {
            ZERO
        } else {
            self.values[idx as usize]
        }
    }

    pub fn support(&self) -> std::ops::RangeInclusive<i64> {
        self.offset..=(self.offset + self.values.len() as i64 - 1)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Convolution `(self * other)_n = sum_k self_{n-k} other_k`.
    pub fn convolve(&self, other: &Sequence) -> Sequence {
        if self.values.is_empty() || other.values.is_empty() {
            return Sequence::new(0, vec![]);
        }
        let mut out = vec![ZERO; self.values.len() + other.values.len() - 1];
        for (i, &a) in self.values.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, &b) in other.values.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Sequence::new(self.offset + other.offset, out)
    }
}

/// Transform a finitely supported sequence into its circle symbol
/// `A(t) = sum_k t^k a_k`; exact coefficient copy, round-trips with
/// [`inverse_z_transform`].
pub fn z_transform(seq: &Sequence) -> LaurentFunction {
    if seq.values.is_empty() {
        return LaurentFunction::zero();
    }
    LaurentFunction::new(seq.offset, seq.values.clone())
}

/// Read the coefficients of a symbol back into a sequence over its stored
/// window.
pub fn inverse_z_transform(f: &LaurentFunction) -> Sequence {
    let values: Vec<Complex64> = f.iter_coeffs().map(|(_, c)| c).collect();
    Sequence::new(f.k_min(), values)
}

/// Semi-infinite Toeplitz problem data: two-sided kernel, one-sided
/// right-hand side, and an optional decay certificate `(M, lambda)` claiming
/// `|a_n| < M / n^(1+lambda)` on the supplied support.
#[derive(Debug, Clone)]
pub struct DiscreteWHProblem {
    pub kernel: Sequence,
    pub rhs: Sequence,
    pub decay: Option<(f64, f64)>,
}

impl DiscreteWHProblem {
    pub fn new(kernel: Sequence, rhs: Sequence, decay: Option<(f64, f64)>) -> WhResult<Self> {
        if rhs.offset < 0 {
            return Err(WhError::InvalidInput(
                "right-hand side must be supported on n >= 0".into(),
            ));
        }
        if let Some((m, lambda)) = decay {
            if !(0.0 < lambda && lambda < 1.0) {
                return Err(WhError::InvalidInput(
                    "decay exponent must lie in (0, 1)".into(),
                ));
            }
            for (n, &a) in kernel
                .values
                .iter()
                .enumerate()
                .map(|(i, a)| (kernel.offset + i as i64, a))
            {
                if n != 0 && a.norm() >= m / (n.unsigned_abs() as f64).powf(1.0 + lambda) {
                    return Err(WhError::InvalidInput(format!(
                        "kernel entry at {n} violates the declared decay certificate"
                    )));
                }
            }
        }
        Ok(DiscreteWHProblem { kernel, rhs, decay })
    }
}

/// Outcome of the factorization-based discrete solve.
#[derive(Debug, Clone)]
pub enum DiscreteOutcome {
    /// Winding zero: the solution and the induced negative-side extension.
    Unique { x: Sequence, d: Sequence },
    /// Negative winding `-m`: particular solution plus an `m`-dimensional
    /// homogeneous family.
    Family {
        x: Sequence,
        d: Sequence,
        basis: Vec<Sequence>,
    },
    /// Positive winding `m`: the `m` solvability moments, and the solution
    /// once they vanish.
    Conditional {
        x: Sequence,
        d: Sequence,
        moments: Vec<Complex64>,
    },
}

impl DiscreteOutcome {
    pub fn solution(&self) -> &Sequence {
        match self {
            DiscreteOutcome::Unique { x, .. } => x,
            DiscreteOutcome::Family { x, .. } => x,
            DiscreteOutcome::Conditional { x, .. } => x,
        }
    }

    pub fn extension(&self) -> &Sequence {
        match self {
            DiscreteOutcome::Unique { d, .. } => d,
            DiscreteOutcome::Family { d, .. } => d,
            DiscreteOutcome::Conditional { d, .. } => d,
        }
    }
}

/// Residual of the defining convolution rows `n = 0 .. n_check - 1`.
pub fn discrete_residual(p: &DiscreteWHProblem, x: &Sequence, n_check: usize) -> f64 {
    let mut worst = 0.0f64;
    for n in 0..n_check as i64 {
        let mut acc = ZERO;
        for (k, &xk) in x
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (x.offset + i as i64, v))
        {
            if k < 0 {
                continue;
            }
            acc += p.kernel.get(n - k) * xk;
        }
        worst = worst.max((acc - p.rhs.get(n)).norm());
    }
    worst
}

/// Solve the semi-infinite system by symbol factorization.
pub fn solve_discrete_wh(p: &DiscreteWHProblem, tol: &Tolerances) -> WhResult<DiscreteOutcome> {
    let symbol = z_transform(&p.kernel);
    let min_abs = symbol.min_abs();
    if min_abs < tol.singularity {
        return Err(WhError::ContourSingularity {
            min_abs,
            tol: tol.singularity,
        });
    }
    let fact = factor_scalar(&symbol, tol)?;
    let kappa = fact.kappa;
    let c_sym = z_transform(&p.rhs);
    // t^kappa A+ X+ = (A-)^-1 C + (A-)^-1 D-: split W = (A-)^-1 C and
    // match the coefficient ranges of the two sides
    let w = fact.x_minus_inverse().mul(&c_sym);
    let (w_plus, w_minus) = w.cauchy_split();
    let a_plus_inv = fact.x_plus_inverse();
    // D- = -A- W- in every case
    let d_sym = fact.x_minus.mul(&w_minus).neg();
    let d = inverse_z_transform(&d_sym.cleaned(1e-14));
    if kappa == 0 {
        let x_sym = a_plus_inv.mul(&w_plus);
        let x = truncate_to_plus(&x_sym);
        Ok(DiscreteOutcome::Unique { x, d })
    } else if kappa < 0 {
        let m = (-kappa) as usize;
        // A+ X+ = t^{-kappa} W+ plus a free span of t^j, j = 0..m-1
        let x_sym = a_plus_inv.mul(&w_plus.shifted(-kappa));
        let x = truncate_to_plus(&x_sym);
        let mut basis = Vec::with_capacity(m);
        for j in 0..m as i64 {
            let h = a_plus_inv.shifted(j);
            basis.push(truncate_to_plus(&h));
        }
        Ok(DiscreteOutcome::Family { x, d, basis })
    } else {
        // kappa > 0: the first kappa coefficients of W+ must vanish
        let mut moments = Vec::with_capacity(kappa as usize);
        let scale = 1.0 + p.rhs.max_abs();
        let mut violated = false;
        for j in 0..kappa {
            let mj = w_plus.coeff(j);
            if mj.norm() > tol.residual * scale {
                violated = true;
            }
            moments.push(mj);
        }
        if violated {
            return Err(WhError::NoSolution { moments });
        }
        let x_sym = a_plus_inv.mul(&w_plus.shifted(-kappa).plus_part());
        let x = truncate_to_plus(&x_sym);
        Ok(DiscreteOutcome::Conditional { x, d, moments })
    }
}

fn truncate_to_plus(f: &LaurentFunction) -> Sequence {
    let plus = f.plus_part().cleaned(1e-14);
    inverse_z_transform(&plus)
}

/// Solve the paired discrete system
/// `sum_k a_{n-k} x_k = c_n (n >= 0)`, `sum_k b_{n-k} x_k = d_n (n < 0)`
/// with a two-sided unknown.
pub fn solve_discrete_dual(
    a: &Sequence,
    b: &Sequence,
    c: &Sequence,
    d: &Sequence,
    tol: &Tolerances,
) -> WhResult<Sequence> {
    if c.offset < 0 {
        return Err(WhError::InvalidInput(
            "first right-hand side must be supported on n >= 0".into(),
        ));
    }
    if !d.values.is_empty() && d.offset + d.values.len() as i64 > 0 {
        return Err(WhError::InvalidInput(
            "second right-hand side must be supported on n < 0".into(),
        ));
    }
    let g = z_transform(c).add(&z_transform(d));
    let f = solve_paired_symbols(&z_transform(a), &z_transform(b), &g, tol)?;
    Ok(inverse_z_transform(&f.cleaned(1e-13)))
}

/// Residuals of the two coefficient ranges of the paired discrete system.
pub fn discrete_dual_residuals(
    a: &Sequence,
    b: &Sequence,
    c: &Sequence,
    d: &Sequence,
    x: &Sequence,
) -> (f64, f64) {
    let ax = a.convolve(x);
    let bx = b.convolve(x);
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    let margin = (a.values.len() + b.values.len()) as i64 + 4;
    let lo = x.offset - margin;
    let hi = x.offset + x.values.len() as i64 + margin;
    for n in lo..=hi {
        if n >= 0 {
            r1 = r1.max((ax.get(n) - c.get(n)).norm());
        } else {
            r2 = r2.max((bx.get(n) - d.get(n)).norm());
        }
    }
    (r1, r2)
}

/// Direct solve of the `n x n` leading Toeplitz section; the brute-force
/// convergence oracle. Uses a banded elimination when the kernel bandwidth
/// is narrow and a dense one otherwise.
pub fn toeplitz_truncated_solve(
    p: &DiscreteWHProblem,
    n: usize,
    _tol: &Tolerances,
) -> WhResult<Sequence> {
    if n < 8 {
        return Err(WhError::InvalidInput(
            "truncation size must be at least 8".into(),
        ));
    }
    let rhs: Vec<Complex64> = (0..n as i64).map(|i| p.rhs.get(i)).collect();
    let band = p
        .kernel
        .support()
        .start()
        .unsigned_abs()
        .max(p.kernel.support().end().unsigned_abs()) as usize;
    let solution = if 3 * band + 1 < n / 4 {
        linalg::solve_banded(n, band, band, |i, j| p.kernel.get(i as i64 - j as i64), &rhs)
    } else {
        let mut dense = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                dense[i * n + j] = p.kernel.get(i as i64 - j as i64);
            }
        }
        linalg::solve_dense(n, &dense, &rhs)
    };
    match solution {
        Some(x) => Ok(Sequence::new(0, x)),
        None => Err(WhError::SingularTruncation { n }),
    }
}

/// Tail estimate `max |x_N - x_2N|` over the common support, reported to
/// judge truncation convergence.
pub fn truncation_tail_estimate(
    p: &DiscreteWHProblem,
    n: usize,
    tol: &Tolerances,
) -> WhResult<f64> {
    let xa = toeplitz_truncated_solve(p, n, tol)?;
    let xb = toeplitz_truncated_solve(p, 2 * n, tol)?;
    let m = xa.values.len().min(xb.values.len());
    Ok((0..m)
        .map(|i| (xa.values[i] - xb.values[i]).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::unit_circle_nodes;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn z_transform_of_delta_is_one() {
        let f = z_transform(&Sequence::delta());
        assert!(f.sub(&LaurentFunction::one()).sup_norm() < 1e-15);
    }

    #[test]
    fn z_transform_of_symmetric_pair() {
        let seq = Sequence::new(-1, vec![c64(0.5, 0.0), c64(0.0, 0.0), c64(0.5, 0.0)]);
        let f = z_transform(&seq);
        assert_eq!(f.coeff(-1), c64(0.5, 0.0));
        assert_eq!(f.coeff(1), c64(0.5, 0.0));
        assert_eq!(f.coeff(0), ZERO);
        assert_eq!(inverse_z_transform(&f), seq);
    }

    #[test]
    fn z_transform_of_truncated_geometric_matches_closed_form() {
        // a_n = 2^{-|n|} truncated at |n| = 40; the full two-sided sum is
        // 1/(1 - t/2) + 1/(1 - 1/(2t)) - 1, and the truncation error is
        // below 2^-40 on the contour
        let nmax = 40i64;
        let values: Vec<Complex64> = (-nmax..=nmax)
            .map(|n| c64(0.5f64.powi(n.unsigned_abs() as i32), 0.0))
            .collect();
        let f = z_transform(&Sequence::new(-nmax, values));
        for &t in unit_circle_nodes(32).iter() {
            let one = c64(1.0, 0.0);
            let closed = one / (one - t / 2.0) + one / (one - 1.0 / (2.0 * t)) - one;
            assert!((f.eval(t) - closed).norm() < 1e-10);
        }
    }

    #[test]
    fn identity_kernel_returns_rhs() {
        let p = DiscreteWHProblem::new(
            Sequence::delta(),
            Sequence::new(0, vec![c64(1.0, 0.0), c64(2.0, -1.0), c64(0.25, 0.0)]),
            None,
        )
        .unwrap();
        match solve_discrete_wh(&p, &tol()).unwrap() {
            DiscreteOutcome::Unique { x, d } => {
                assert!((x.get(0) - c64(1.0, 0.0)).norm() < 1e-12);
                assert!((x.get(1) - c64(2.0, -1.0)).norm() < 1e-12);
                assert!((x.get(2) - c64(0.25, 0.0)).norm() < 1e-12);
                assert!(d.max_abs() < 1e-12);
            }
            other => panic!("expected unique solution, got {other:?}"),
        }
    }

    #[test]
    fn tridiagonal_kernel_matches_truncated_oracle() {
        let kernel = Sequence::new(-1, vec![c64(0.25, 0.0), c64(1.0, 0.0), c64(0.25, 0.0)]);
        let p = DiscreteWHProblem::new(kernel, Sequence::delta(), None).unwrap();
        let outcome = solve_discrete_wh(&p, &tol()).unwrap();
        let x = outcome.solution();
        let oracle = toeplitz_truncated_solve(&p, 2000, &tol()).unwrap();
        for n in 0..60 {
            assert!(
                (x.get(n) - oracle.get(n)).norm() < 1e-6,
                "mismatch at {n}: {} vs {}",
                x.get(n),
                oracle.get(n)
            );
        }
        assert!(discrete_residual(&p, x, 50) < 1e-7);
    }

    #[test]
    fn negative_winding_yields_family_whose_members_solve_the_system() {
        // symbol t^-1 (1 + 0.2 t + 0.05 t^2) winds -1 (both polynomial
        // zeros lie outside the disc), leaving one degree of freedom
        let kernel = Sequence::new(-1, vec![c64(1.0, 0.0), c64(0.2, 0.0), c64(0.05, 0.0)]);
        let rhs = Sequence::new(0, vec![c64(1.0, 0.0), c64(0.5, 0.0)]);
        let p = DiscreteWHProblem::new(kernel, rhs, None).unwrap();
        match solve_discrete_wh(&p, &tol()).unwrap() {
            DiscreteOutcome::Family { x, basis, .. } => {
                assert_eq!(basis.len(), 1);
                assert!(discrete_residual(&p, &x, 40) < 1e-8);
                // adding a multiple of the homogeneous member still solves
                let h = &basis[0];
                let lo = x.offset.min(h.offset);
                let hi = (x.offset + x.values.len() as i64)
                    .max(h.offset + h.values.len() as i64);
                let mut vals = Vec::new();
                for n in lo..hi {
                    vals.push(x.get(n) + c64(0.7, -0.2) * h.get(n));
                }
                let shifted = Sequence::new(lo, vals);
                assert!(discrete_residual(&p, &shifted, 40) < 1e-8);
            }
            other => panic!("expected family, got {other:?}"),
        }
    }

    #[test]
    fn positive_winding_imposes_conditions() {
        // symbol t: the row n = 0 reads 0 = c_0, a solvability condition
        let kernel = Sequence::new(1, vec![c64(1.0, 0.0)]);
        let rhs = Sequence::new(0, vec![c64(1.0, 0.0)]);
        let p = DiscreteWHProblem::new(kernel, rhs, None).unwrap();
        assert!(matches!(
            solve_discrete_wh(&p, &tol()),
            Err(WhError::NoSolution { .. })
        ));
        let kernel = Sequence::new(1, vec![c64(1.0, 0.0)]);
        let rhs = Sequence::new(1, vec![c64(1.0, 0.0), c64(0.25, 0.0)]);
        let p = DiscreteWHProblem::new(kernel, rhs, None).unwrap();
        match solve_discrete_wh(&p, &tol()).unwrap() {
            DiscreteOutcome::Conditional { x, moments, .. } => {
                assert_eq!(moments.len(), 1);
                assert!(moments[0].norm() < 1e-12);
                assert!(discrete_residual(&p, &x, 20) < 1e-10);
            }
            other => panic!("expected conditional outcome, got {other:?}"),
        }
    }

    #[test]
    fn dual_delta_kernels_split_the_rhs() {
        let a = Sequence::delta();
        let b = Sequence::delta();
        let c_seq = Sequence::new(0, vec![c64(1.0, 0.0), c64(2.0, 0.0)]);
        let d_seq = Sequence::new(-2, vec![c64(0.5, 0.0), c64(-1.0, 0.0)]);
        let x = solve_discrete_dual(&a, &b, &c_seq, &d_seq, &tol()).unwrap();
        assert!((x.get(0) - c64(1.0, 0.0)).norm() < 1e-12);
        assert!((x.get(1) - c64(2.0, 0.0)).norm() < 1e-12);
        assert!((x.get(-1) - c64(-1.0, 0.0)).norm() < 1e-12);
        assert!((x.get(-2) - c64(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dual_equal_kernels_solve_full_line_convolution() {
        let a = Sequence::new(-1, vec![c64(0.2, 0.0), c64(1.0, 0.0), c64(0.3, 0.0)]);
        let c_seq = Sequence::new(0, vec![c64(1.0, 0.0)]);
        let d_seq = Sequence::new(-1, vec![c64(0.5, 0.0)]);
        let x = solve_discrete_dual(&a, &a, &c_seq, &d_seq, &tol()).unwrap();
        let (r1, r2) = discrete_dual_residuals(&a, &a, &c_seq, &d_seq, &x);
        assert!(r1 < 1e-9 && r2 < 1e-9, "residuals {r1}, {r2}");
    }

    #[test]
    fn dual_short_kernels_pass_residual_oracle() {
        let a = Sequence::new(-1, vec![c64(0.15, 0.1), c64(1.0, 0.0), c64(-0.2, 0.05)]);
        let b = Sequence::new(
            -2,
            vec![
                c64(0.05, 0.0),
                c64(0.1, -0.1),
                c64(1.0, 0.0),
                c64(0.2, 0.0),
                c64(-0.07, 0.02),
            ],
        );
        let c_seq = Sequence::new(0, vec![c64(1.0, 0.0)]);
        let d_seq = Sequence::new(-1, vec![]);
        let x = solve_discrete_dual(&a, &b, &c_seq, &d_seq, &tol()).unwrap();
        let (r1, r2) = discrete_dual_residuals(&a, &b, &c_seq, &d_seq, &x);
        assert!(r1 < 1e-7 && r2 < 1e-7, "residuals {r1}, {r2}");
    }

    #[test]
    fn oracle_identity_kernel_and_error_paths() {
        let p = DiscreteWHProblem::new(
            Sequence::delta(),
            Sequence::new(0, vec![c64(3.0, 0.0), c64(1.0, 0.0)]),
            None,
        )
        .unwrap();
        let x = toeplitz_truncated_solve(&p, 16, &tol()).unwrap();
        assert!((x.get(0) - c64(3.0, 0.0)).norm() < 1e-14);
        assert!((x.get(1) - c64(1.0, 0.0)).norm() < 1e-14);
        assert!(x.get(7).norm() < 1e-14);
        // identically zero kernel: singular truncation
        let p_bad =
            DiscreteWHProblem::new(Sequence::new(0, vec![ZERO]), Sequence::delta(), None).unwrap();
        assert!(matches!(
            toeplitz_truncated_solve(&p_bad, 16, &tol()),
            Err(WhError::SingularTruncation { .. })
        ));
        assert!(matches!(
            toeplitz_truncated_solve(&p, 4, &tol()),
            Err(WhError::InvalidInput(_))
        ));
    }

    #[test]
    fn decay_certificate_is_checked() {
        let kernel = Sequence::new(-1, vec![c64(0.9, 0.0), c64(1.0, 0.0), c64(0.9, 0.0)]);
        // |a_1| = 0.9 >= 0.5 / 1^1.5 violates the certificate
        assert!(
            DiscreteWHProblem::new(kernel.clone(), Sequence::delta(), Some((0.5, 0.5))).is_err()
        );
        // a generous constant admits the same kernel
        assert!(DiscreteWHProblem::new(kernel, Sequence::delta(), Some((2.0, 0.5))).is_ok());
    }
}
