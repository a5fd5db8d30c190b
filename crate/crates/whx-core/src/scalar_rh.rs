//! Scalar Riemann-Hilbert / Wiener-Hopf factorization and solves.
//!
//! For a nonvanishing coefficient `G` on the unit circle the factorization
//! is `G(t) = X+(t) * t^kappa * X-(t)` with `kappa` the winding number of
//! `G`, `X+` supported on `k >= 0` and `X-` on `k <= 0` (both nonvanishing
//! in their closed domains). The factors come from exponentiating the
//! additive split of a continuous logarithm of `t^-kappa G`.
//!
//! The boundary problem `Phi+ = G Phi- + g` is then solved by Gakhov's
//! formulas: for `kappa >= 0` the general solution carries a polynomial with
//! `kappa + 1` free coefficients; for `kappa < 0` the solution is unique
//! once the solvability moments of `g / X+` vanish.

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::contour::laurent::{glued_log_samples, LaurentFunction};
use crate::error::{WhError, WhResult};

/// A scalar boundary problem `Phi+ = G Phi- + g` on the unit circle.
#[derive(Debug, Clone)]
pub struct ScalarRHProblem {
    /// Nonvanishing coefficient.
    pub coefficient: LaurentFunction,
    /// Right-hand side.
    pub rhs: LaurentFunction,
}

/// Multiplicative factorization `G = X+ * t^kappa * X-`.
///
/// `x_minus` tends to 1 at infinity; the canonical homogeneous solutions
/// satisfying `X+ = G X-` on the contour are recovered by
/// [`ScalarFactorization::canonical_minus`].
#[derive(Debug, Clone)]
pub struct ScalarFactorization {
    pub x_plus: LaurentFunction,
    pub x_minus: LaurentFunction,
    pub kappa: i64,
    gamma_plus: LaurentFunction,
    gamma_minus: LaurentFunction,
}

impl ScalarFactorization {
    /// `X+ * t^kappa * X-`, for residual checks.
    pub fn reconstruct(&self) -> LaurentFunction {
        self.x_plus.shifted(self.kappa).mul(&self.x_minus)
    }

    /// Inverse of the plus factor (still a plus function).
    pub fn x_plus_inverse(&self) -> LaurentFunction {
        exp_of(&self.gamma_plus.neg())
    }

    /// Inverse of the minus factor (still a minus function).
    pub fn x_minus_inverse(&self) -> LaurentFunction {
        exp_of(&self.gamma_minus.neg())
    }

    /// Canonical homogeneous plus solution (equals the plus factor).
    pub fn canonical_plus(&self) -> LaurentFunction {
        self.x_plus.clone()
    }

    /// Canonical homogeneous minus solution `t^-kappa / X-`, satisfying
    /// `X+ = G X-` on the contour.
    pub fn canonical_minus(&self) -> LaurentFunction {
        self.x_minus_inverse().shifted(-self.kappa)
    }

    /// Largest wrong-sided coefficient across both factors.
    pub fn analyticity_defect(&self) -> f64 {
        self.x_plus.defect_plus().max(self.x_minus.defect_minus())
    }
}

/// Exponential of a one-sided Laurent function through its grid samples.
fn exp_of(f: &LaurentFunction) -> LaurentFunction {
    let n = f.alias_free_grid(64) * 2;
    let samples: Vec<Complex64> = f.samples(n).into_iter().map(|v| v.exp()).collect();
    LaurentFunction::from_samples(&samples).expect("power-of-two grid")
}

/// Factor a nonvanishing scalar contour function.
pub fn factor_scalar(g: &LaurentFunction, tol: &Tolerances) -> WhResult<ScalarFactorization> {
    let mut n = g.alias_free_grid(128);
    loop {
        let samples = g.samples(n);
        let min_abs = samples.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if min_abs < tol.singularity {
            return Err(WhError::ContourSingularity {
                min_abs,
                tol: tol.singularity,
            });
        }
        let glued = glued_log_samples(&samples);
        let (log_samples, kappa) = match glued {
            Ok(v) => v,
            Err(_) if n < tol.grid_cap => {
                n *= 2;
                continue;
            }
            Err(e) => return Err(e),
        };
        // log of t^-kappa G: subtract kappa * i * angle_j, which is exactly
        // single-valued after the glued unwrap
        let gamma_samples: Vec<Complex64> = log_samples
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let angle = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                v - Complex64::new(0.0, kappa as f64 * angle)
            })
            .collect();
        let gamma = LaurentFunction::from_samples(&gamma_samples)?;
        let quarter = (n / 4) as i64;
        let tail = gamma
            .iter_coeffs()
            .filter(|(k, _)| k.abs() >= quarter)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        if tail > tol.tail * (1.0 + gamma.max_coeff()) {
            if n >= tol.grid_cap {
                return Err(WhError::Resolution(
                    "logarithm tail did not resolve below the grid cap".into(),
                ));
            }
            n *= 2;
            continue;
        }
        let (gamma_plus, gamma_minus) = gamma.cauchy_split();
        let x_plus_samples: Vec<Complex64> = gamma_plus
            .samples(n)
            .into_iter()
            .map(|v| v.exp())
            .collect();
        let x_minus_samples: Vec<Complex64> = gamma_minus
            .samples(n)
            .into_iter()
            .map(|v| v.exp())
            .collect();
        let x_plus = LaurentFunction::from_samples(&x_plus_samples)?;
        let x_minus = LaurentFunction::from_samples(&x_minus_samples)?;
        // the factor tails must be resolved as well
        let factor_tail = [&x_plus, &x_minus]
            .iter()
            .map(|f| {
                f.iter_coeffs()
                    .filter(|(k, _)| k.abs() >= quarter)
                    .map(|(_, c)| c.norm())
                    .fold(0.0, f64::max)
                    / (1.0 + f.max_coeff())
            })
            .fold(0.0, f64::max);
        if factor_tail > tol.tail {
            if n >= tol.grid_cap {
                return Err(WhError::Resolution(
                    "factor tail did not resolve below the grid cap".into(),
                ));
            }
            n *= 2;
            continue;
        }
        return Ok(ScalarFactorization {
            x_plus,
            x_minus,
            kappa,
            gamma_plus,
            gamma_minus,
        });
    }
}

/// Behavior class of the minus unknown at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinusClass {
    /// `Phi-` bounded at infinity (constant term allowed).
    Bounded,
    /// `Phi-` vanishing at infinity (strictly negative indices).
    Vanishing,
}

/// Solution of the scalar boundary problem.
#[derive(Debug, Clone)]
pub struct ScalarRHSolution {
    /// Particular solution (free polynomial set to zero).
    pub phi_plus: LaurentFunction,
    pub phi_minus: LaurentFunction,
    pub kappa: i64,
    /// Homogeneous basis pairs, one per free polynomial coefficient.
    pub basis: Vec<(LaurentFunction, LaurentFunction)>,
    /// Solvability moment values (empty unless the index made them appear).
    pub moments: Vec<Complex64>,
}

impl ScalarRHSolution {
    pub fn degrees_of_freedom(&self) -> usize {
        self.basis.len()
    }
}

/// Solve `Phi+ = G Phi- + g` with `Phi-` bounded at infinity.
pub fn solve_scalar_rh(p: &ScalarRHProblem, tol: &Tolerances) -> WhResult<ScalarRHSolution> {
    solve_scalar_rh_in_class(p, MinusClass::Bounded, tol)
}

/// Solve `Phi+ = G Phi- + g` in the requested behavior class.
pub fn solve_scalar_rh_in_class(
    p: &ScalarRHProblem,
    class: MinusClass,
    tol: &Tolerances,
) -> WhResult<ScalarRHSolution> {
    let fact = factor_scalar(&p.coefficient, tol)?;
    let kappa = fact.kappa;
    // h = g / X+ on a shared grid
    let x_plus_inv = fact.x_plus_inverse();
    let n = p
        .rhs
        .alias_free_grid(64)
        .max(x_plus_inv.alias_free_grid(64));
    let h_samples: Vec<Complex64> = p
        .rhs
        .samples(n)
        .iter()
        .zip(x_plus_inv.samples(n))
        .map(|(&g, xi)| g * xi)
        .collect();
    let h = LaurentFunction::from_samples(&h_samples)?;
    let (h_plus, h_minus) = h.cauchy_split();

    // free polynomial degree (None when the solution is unique) and the
    // number of solvability conditions
    let (dof, conditions) = match class {
        MinusClass::Bounded => {
            if kappa >= 0 {
                ((kappa + 1) as usize, 0usize)
            } else {
                (0, (-kappa - 1) as usize)
            }
        }
        MinusClass::Vanishing => {
            if kappa >= 1 {
                (kappa as usize, 0)
            } else {
                (0, (-kappa) as usize)
            }
        }
    };

    let mut moments = Vec::with_capacity(conditions);
    if conditions > 0 {
        let scale = 1.0 + p.rhs.max_coeff();
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let mut violated = false;
        for k in 1..=conditions as i64 {
            let m = two_pi_i * h.coeff(-k);
            if m.norm() > tol.residual * scale {
                violated = true;
            }
            moments.push(m);
        }
        if violated {
            return Err(WhError::NoSolution { moments });
        }
    }

    let canonical_minus = fact.canonical_minus();
    let phi_plus = fact.x_plus.mul(&h_plus);
    let phi_minus = canonical_minus.mul(&h_minus.neg());
    let mut basis = Vec::with_capacity(dof);
    for k in 0..dof as i64 {
        basis.push((
            fact.x_plus.shifted(k),
            canonical_minus.shifted(k),
        ));
    }
    Ok(ScalarRHSolution {
        phi_plus,
        phi_minus,
        kappa,
        basis,
        moments,
    })
}

/// Sup-norm residual of the boundary condition for a candidate pair.
pub fn boundary_residual(
    p: &ScalarRHProblem,
    phi_plus: &LaurentFunction,
    phi_minus: &LaurentFunction,
) -> f64 {
    let lhs = phi_plus
        .sub(&p.coefficient.mul(phi_minus))
        .sub(&p.rhs);
    lhs.sup_norm()
}

/// Solution family of the strip-form problem `K Phi+ + Psi- + C = 0` for a
/// zero-index kernel: the particular pair plus one homogeneous pair per
/// coefficient of the entire polynomial allowed by the growth bound.
#[derive(Debug, Clone)]
pub struct WhStripSolution {
    pub phi_plus: LaurentFunction,
    pub psi_minus: LaurentFunction,
    /// Homogeneous pairs `(Phi+_j, Psi-_j)` for the polynomial basis `t^j`.
    pub basis: Vec<(LaurentFunction, LaurentFunction)>,
}

impl WhStripSolution {
    /// Assemble the member of the family for given polynomial coefficients.
    pub fn member(&self, j_coeffs: &[Complex64]) -> (LaurentFunction, LaurentFunction) {
        let mut phi = self.phi_plus.clone();
        let mut psi = self.psi_minus.clone();
        for (c, (bp, bm)) in j_coeffs.iter().zip(&self.basis) {
            phi = phi.add(&bp.scale(*c));
            psi = psi.add(&bm.scale(*c));
        }
        (phi, psi)
    }
}

/// Solve `K Phi+ + Psi- + C = 0` for a zero-index kernel `K`; the solution
/// is determined up to a polynomial of degree `growth_n` (so `growth_n + 1`
/// free constants; `growth_n = -1` pins the decaying solution).
pub fn solve_wh_strip(
    kernel: &LaurentFunction,
    forcing: &LaurentFunction,
    growth_n: i64,
    tol: &Tolerances,
) -> WhResult<WhStripSolution> {
    if growth_n < -1 {
        return Err(WhError::InvalidInput(
            "growth exponent must be at least -1".into(),
        ));
    }
    let fact = factor_scalar(kernel, tol)?;
    if fact.kappa != 0 {
        return Err(WhError::NotCanonical { index: fact.kappa });
    }
    // W = C / K-, split into plus and minus parts
    let k_minus_inv = fact.x_minus_inverse();
    let w = forcing.mul(&k_minus_inv);
    let (w_plus, w_minus) = w.cauchy_split();
    let k_plus_inv = fact.x_plus_inverse();
    let phi_plus = k_plus_inv.mul(&w_plus).neg();
    let psi_minus = fact.x_minus.mul(&w_minus).neg();
    let mut basis = Vec::new();
    for j in 0..=growth_n {
        basis.push((
            k_plus_inv.shifted(j),
            fact.x_minus.shifted(j).neg(),
        ));
    }
    Ok(WhStripSolution {
        phi_plus,
        psi_minus,
        basis,
    })
}

/// Solve the paired system
/// `[(1 + K1) f]_k = g_k` for `k >= 0`, `[(1 + K2) f]_k = g_k` for `k < 0`
/// by reduction to a scalar boundary problem with coefficient
/// `(1 + K2)/(1 + K1)`.
pub fn solve_dual(
    k1: &LaurentFunction,
    k2: &LaurentFunction,
    g: &LaurentFunction,
    tol: &Tolerances,
) -> WhResult<LaurentFunction> {
    let a = LaurentFunction::one().add(k1);
    let b = LaurentFunction::one().add(k2);
    solve_paired_symbols(&a, &b, g, tol)
}

/// Shared driver for the paired continuous and discrete systems: find `f`
/// with `[A f]_k = g_k (k >= 0)` and `[B f]_k = g_k (k < 0)`.
pub(crate) fn solve_paired_symbols(
    a: &LaurentFunction,
    b: &LaurentFunction,
    g: &LaurentFunction,
    tol: &Tolerances,
) -> WhResult<LaurentFunction> {
    for (name, s) in [("first", a), ("second", b)] {
        let min_abs = s.min_abs();
        if min_abs < tol.singularity {
            let _ = name;
            return Err(WhError::ContourSingularity {
                min_abs,
                tol: tol.singularity,
            });
        }
    }
    // ratio R = B / A and forcing T = (R - 1) g, resolved on a shared grid
    let n = a
        .alias_free_grid(128)
        .max(b.alias_free_grid(128))
        .max(g.alias_free_grid(128))
        * 2;
    let a_samples = a.samples(n);
    let b_samples = b.samples(n);
    let g_samples = g.samples(n);
    let r_samples: Vec<Complex64> = a_samples
        .iter()
        .zip(&b_samples)
        .map(|(&av, &bv)| bv / av)
        .collect();
    let t_samples: Vec<Complex64> = r_samples
        .iter()
        .zip(&g_samples)
        .map(|(&r, &gv)| (r - Complex64::new(1.0, 0.0)) * gv)
        .collect();
    let r = LaurentFunction::from_samples(&r_samples)?;
    let t = LaurentFunction::from_samples(&t_samples)?;
    // v = R u + T with v supported on k >= 0 and u strictly on k < 0
    let solution = solve_scalar_rh_in_class(
        &ScalarRHProblem {
            coefficient: r,
            rhs: t,
        },
        MinusClass::Vanishing,
        tol,
    )?;
    let u = solution.phi_minus;
    // f = (u + g) / A on the grid
    let u_samples = u.samples(n);
    let f_samples: Vec<Complex64> = u_samples
        .iter()
        .zip(&g_samples)
        .zip(&a_samples)
        .map(|((&uv, &gv), &av)| (uv + gv) / av)
        .collect();
    LaurentFunction::from_samples(&f_samples)
}

/// Residuals of the two defining coefficient ranges of the paired system;
/// used by tests and by the command-line verifier.
pub fn paired_residuals(
    a: &LaurentFunction,
    b: &LaurentFunction,
    g: &LaurentFunction,
    f: &LaurentFunction,
) -> (f64, f64) {
    let row1 = a.mul(f).sub(g);
    let row2 = b.mul(f).sub(g);
    let plus_defect = row1
        .iter_coeffs()
        .filter(|(k, _)| *k >= 0)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    let minus_defect = row2
        .iter_coeffs()
        .filter(|(k, _)| *k < 0)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    (plus_defect, minus_defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::unit_circle_nodes;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn factor_of_constant_one() {
        let f = factor_scalar(&LaurentFunction::one(), &tol()).unwrap();
        assert_eq!(f.kappa, 0);
        assert!(f.x_plus.sub(&LaurentFunction::one()).sup_norm() < 1e-12);
        assert!(f.x_minus.sub(&LaurentFunction::one()).sup_norm() < 1e-12);
    }

    #[test]
    fn factor_of_monomial() {
        let f = factor_scalar(&LaurentFunction::monomial(1), &tol()).unwrap();
        assert_eq!(f.kappa, 1);
        assert!(f.x_plus.sub(&LaurentFunction::one()).sup_norm() < 1e-12);
        assert!(f.x_minus.sub(&LaurentFunction::one()).sup_norm() < 1e-12);
    }

    #[test]
    fn factor_of_rational_kernel_matches_closed_form() {
        // G(t) = (t - 0.4)/(t - 3): winding 1, closed-form factors
        // X+ = 1/(t - 3) and X- = 1 - 0.4/t, derived by hand from the
        // inside zero at 0.4 and outside pole at 3.
        let n = 256;
        let nodes = unit_circle_nodes(n);
        let samples: Vec<Complex64> = nodes.iter().map(|&t| (t - 0.4) / (t - 3.0)).collect();
        let g = LaurentFunction::from_samples(&samples).unwrap();
        let f = factor_scalar(&g, &tol()).unwrap();
        assert_eq!(f.kappa, 1);
        let recon = f.reconstruct();
        assert!(recon.sub(&g).sup_norm() < 1e-9, "reconstruction residual");
        for &t in nodes.iter().take(16) {
            let want_plus = 1.0 / (t - 3.0);
            let want_minus = 1.0 - 0.4 / t;
            assert!((f.x_plus.eval(t) - want_plus).norm() < 1e-9);
            assert!((f.x_minus.eval(t) - want_minus).norm() < 1e-9);
        }
        assert!(f.analyticity_defect() < 1e-12);
    }

    #[test]
    fn factor_rejects_vanishing_kernel() {
        let g = LaurentFunction::new(0, vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            factor_scalar(&g, &tol()),
            Err(WhError::ContourSingularity { .. })
        ));
    }

    #[test]
    fn rh_solve_trivial_coefficient() {
        // G = 1, g = 0: one degree of freedom, particular solution zero
        let p = ScalarRHProblem {
            coefficient: LaurentFunction::one(),
            rhs: LaurentFunction::zero(),
        };
        let s = solve_scalar_rh(&p, &tol()).unwrap();
        assert_eq!(s.kappa, 0);
        assert_eq!(s.degrees_of_freedom(), 1);
        assert!(s.phi_plus.sup_norm() < 1e-13);
        assert!(s.phi_minus.sup_norm() < 1e-13);
        // the basis pair satisfies the homogeneous condition
        let (bp, bm) = &s.basis[0];
        assert!(boundary_residual(&p, bp, bm) < 1e-12);
    }

    #[test]
    fn rh_solve_splits_the_rhs() {
        // G = 1, g = 1/t: Phi+ = c, Phi- = -1/t + c
        let p = ScalarRHProblem {
            coefficient: LaurentFunction::one(),
            rhs: LaurentFunction::monomial(-1),
        };
        let s = solve_scalar_rh(&p, &tol()).unwrap();
        assert!(s.phi_plus.sup_norm() < 1e-13);
        assert!(
            s.phi_minus
                .add(&LaurentFunction::monomial(-1))
                .sup_norm()
                < 1e-12
        );
        assert!(boundary_residual(&p, &s.phi_plus, &s.phi_minus) < 1e-12);
    }

    #[test]
    fn rh_solve_negative_index_checks_moments() {
        // G = t^-2, g = 0: one solvability moment, unique zero solution
        let p = ScalarRHProblem {
            coefficient: LaurentFunction::monomial(-2),
            rhs: LaurentFunction::zero(),
        };
        let s = solve_scalar_rh(&p, &tol()).unwrap();
        assert_eq!(s.kappa, -2);
        assert_eq!(s.degrees_of_freedom(), 0);
        assert_eq!(s.moments.len(), 1);
        assert!(s.moments[0].norm() < 1e-12);
        assert!(s.phi_plus.sup_norm() < 1e-13);
        assert!(s.phi_minus.sup_norm() < 1e-13);
    }

    #[test]
    fn rh_solve_reports_violated_moments() {
        // G = t^-2 with g = 1/t violates the single moment
        let p = ScalarRHProblem {
            coefficient: LaurentFunction::monomial(-2),
            rhs: LaurentFunction::monomial(-1),
        };
        match solve_scalar_rh(&p, &tol()) {
            Err(WhError::NoSolution { moments }) => {
                assert_eq!(moments.len(), 1);
                assert!(moments[0].norm() > 1.0);
            }
            other => panic!("expected no-solution, got {other:?}"),
        }
    }

    #[test]
    fn strip_solve_trivial() {
        let s = solve_wh_strip(
            &LaurentFunction::one(),
            &LaurentFunction::zero(),
            -1,
            &tol(),
        )
        .unwrap();
        assert!(s.phi_plus.sup_norm() < 1e-13);
        assert!(s.psi_minus.sup_norm() < 1e-13);
        assert!(s.basis.is_empty());
    }

    #[test]
    fn strip_solve_constant_kernel_matches_direct_algebra() {
        // 2 Phi+ + Psi- + 1 = 0 with growth 0: at J = 0 the particular
        // solution is Phi+ = -1/2 (the plus split of C/K- divided by K+).
        let s = solve_wh_strip(
            &LaurentFunction::constant(c(2.0, 0.0)),
            &LaurentFunction::one(),
            0,
            &tol(),
        )
        .unwrap();
        assert!(
            s.phi_plus
                .sub(&LaurentFunction::constant(c(-0.5, 0.0)))
                .sup_norm()
                < 1e-12
        );
        assert_eq!(s.basis.len(), 1);
        // every member of the family satisfies the strip identity
        let kernel = LaurentFunction::constant(c(2.0, 0.0));
        for coeffs in [vec![c(0.0, 0.0)], vec![c(1.3, -0.4)]] {
            let (phi, psi) = s.member(&coeffs);
            let residual = kernel
                .mul(&phi)
                .add(&psi)
                .add(&LaurentFunction::one())
                .sup_norm();
            assert!(residual < 1e-12, "family member residual {residual}");
        }
    }

    #[test]
    fn strip_solve_rejects_nonzero_index() {
        let nodes = unit_circle_nodes(256);
        let samples: Vec<Complex64> = nodes.iter().map(|&t| (t - 0.4) / (t - 3.0)).collect();
        let k = LaurentFunction::from_samples(&samples).unwrap();
        assert!(matches!(
            solve_wh_strip(&k, &LaurentFunction::one(), 0, &tol()),
            Err(WhError::NotCanonical { index: 1 })
        ));
    }

    #[test]
    fn dual_identity_kernels_return_rhs() {
        let g = LaurentFunction::new(-2, vec![c(0.3, 0.0), c(1.0, 0.5), c(2.0, 0.0), c(0.1, 0.0), c(0.0, 0.7)]);
        let f = solve_dual(
            &LaurentFunction::zero(),
            &LaurentFunction::zero(),
            &g,
            &tol(),
        )
        .unwrap();
        assert!(f.sub(&g).sup_norm() < 1e-12);
    }

    #[test]
    fn dual_equal_kernels_reduce_to_full_line_convolution() {
        let k = LaurentFunction::new(-1, vec![c(0.2, 0.0), c(0.0, 0.0), c(0.1, 0.1)]);
        let g = LaurentFunction::new(-1, vec![c(0.5, 0.0), c(1.0, 0.0), c(0.25, 0.0)]);
        let f = solve_dual(&k, &k, &g, &tol()).unwrap();
        // (1 + K) f = g on all coefficients
        let a = LaurentFunction::one().add(&k);
        assert!(a.mul(&f).sub(&g).sup_norm() < 1e-10);
    }

    #[test]
    fn dual_distinct_kernels_satisfy_both_rows() {
        let k1 = LaurentFunction::new(-1, vec![c(0.15, 0.05), c(0.0, 0.0), c(0.2, 0.0)]);
        let k2 = LaurentFunction::new(-2, vec![c(0.1, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.3, -0.1)]);
        // smooth decaying right-hand side
        let n = 128;
        let g_samples: Vec<Complex64> = unit_circle_nodes(n)
            .iter()
            .map(|t| (-2.0 * (1.0 - t.re)).exp() * Complex64::new(1.0, 0.3 * t.im))
            .collect();
        let g = LaurentFunction::from_samples(&g_samples).unwrap();
        let a = LaurentFunction::one().add(&k1);
        let b = LaurentFunction::one().add(&k2);
        let f = solve_dual(&k1, &k2, &g, &tol()).unwrap();
        let (r1, r2) = paired_residuals(&a, &b, &g, &f);
        assert!(r1 < 1e-7, "row-1 residual {r1}");
        assert!(r2 < 1e-7, "row-2 residual {r2}");
    }

    #[test]
    fn factors_are_grid_independent_up_to_constant() {
        let nodes = unit_circle_nodes(256);
        let samples: Vec<Complex64> = nodes
            .iter()
            .map(|&t| (t - 0.4) / (t - 3.0) * (1.0 + 0.2 * t))
            .collect();
        let g1 = LaurentFunction::from_samples(&samples).unwrap();
        let f1 = factor_scalar(&g1, &tol()).unwrap();
        let nodes2 = unit_circle_nodes(512);
        let samples2: Vec<Complex64> = nodes2
            .iter()
            .map(|&t| (t - 0.4) / (t - 3.0) * (1.0 + 0.2 * t))
            .collect();
        let g2 = LaurentFunction::from_samples(&samples2).unwrap();
        let f2 = factor_scalar(&g2, &tol()).unwrap();
        // ratio of the plus factors is constant on the grid
        let probe = unit_circle_nodes(64);
        let ratios: Vec<Complex64> = probe
            .iter()
            .map(|&t| f1.x_plus.eval(t) / f2.x_plus.eval(t))
            .collect();
        let mean = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
        let spread = ratios
            .iter()
            .map(|r| (r - mean).norm())
            .fold(0.0, f64::max);
        assert!(spread < 1e-8 * mean.norm());
    }
}
