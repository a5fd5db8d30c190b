//! Approximate factorization schemes.
//!
//! Three routes are provided for kernels outside the exactly factorable
//! classes:
//!
//! - near-identity asymptotics: for `M = I + eps G` the factors are built
//!   order by order in `eps`, each step splitting the accumulated defect
//!   additively, so the whole matrix problem reduces to a sequence of
//!   scalar splittings;
//! - rational fitting: each entry is approximated by a rational function in
//!   a weighted least-squares sense on the contour grid and the approximant
//!   is factored exactly;
//! - an iterative solver for the 2x2 triangular system whose coupling
//!   carries the carrier `t^L`: each sweep solves one scalar problem and
//!   updates the second row by an additive splitting, converging
//!   geometrically as the separation `L` grows.

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::contour::laurent::LaurentFunction;
use crate::contour::matrix::{Domain, FactorOrder, Factorization, MatrixFunction};
use crate::contour::unit_circle_nodes;
use crate::error::{WhError, WhResult};
use crate::linalg;
use crate::rational_wh::{factor_rational, RationalMatrixFunction, RationalScalar};
use crate::poly::Poly;
use crate::scalar_rh::factor_scalar;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Running state of the near-identity recursion.
#[derive(Debug, Clone)]
pub struct AsymptoticState {
    /// Number of completed orders.
    pub step: usize,
    /// Partial product `I + sum eps^i G-_{i-1}`.
    pub s_minus: MatrixFunction,
    /// Partial product `I + sum eps^i G+_{i-1}`.
    pub s_plus: MatrixFunction,
    /// Sup norm of the defect after each step.
    pub delta_norm_history: Vec<f64>,
}

/// Factor `M = I + eps G` approximately as `S- S+` by the order-by-order
/// recursion; stops when the defect drops below `target` or after `j_max`
/// orders. The defect after step 1 is exactly `eps^2 G0- G0+`.
pub fn asymptotic_factor(
    g: &MatrixFunction,
    eps: f64,
    j_max: usize,
    target: f64,
    tol: &Tolerances,
) -> WhResult<(Factorization, AsymptoticState)> {
    if !g.is_square() {
        return Err(WhError::InvalidInput("matrix must be square".into()));
    }
    if j_max == 0 {
        return Err(WhError::InvalidInput("need at least one order".into()));
    }
    let n = g.rows();
    let contraction = eps.abs() * g.sup_norm();
    if contraction >= 1.0 {
        return Err(WhError::InvalidInput(format!(
            "perturbation norm {contraction:.3} is not small against the identity"
        )));
    }
    let _ = tol;
    let id = MatrixFunction::identity(n, Domain::Circle);
    let m = id.add(&g.scale(Complex64::new(eps, 0.0)));
    // order terms: parts[i] = (G-_i, G+_i)
    let mut parts: Vec<(MatrixFunction, MatrixFunction)> = Vec::new();
    let split = |m: &MatrixFunction| {
        (
            m.map_entries(|e| e.minus_part()),
            m.map_entries(|e| e.plus_part()),
        )
    };
    parts.push(split(g));
    let mut history = Vec::new();
    let assemble = |parts: &[(MatrixFunction, MatrixFunction)], side: usize| {
        let mut acc = MatrixFunction::identity(n, Domain::Circle);
        let mut eps_pow = 1.0;
        for (i, pair) in parts.iter().enumerate() {
            eps_pow *= eps;
            let term = if side == 0 { &pair.0 } else { &pair.1 };
            acc = acc.add(&term.scale(Complex64::new(eps_pow, 0.0)));
            let _ = i;
        }
        acc
    };
    let mut s_minus = assemble(&parts, 0);
    let mut s_plus = assemble(&parts, 1);
    // the defect is the product overshoot S- S+ - M; after the first order
    // it equals eps^2 G0- G0+ exactly
    let mut delta = s_minus.mul(&s_plus).sub(&m);
    history.push(delta.sup_norm());
    let mut rising = 0usize;
    while history.len() < j_max && *history.last().unwrap() > target {
        // next order: minus the cross terms of order eps^{j+1}
        let j = parts.len();
        let mut correction = MatrixFunction::zero_matrix(n, n, Domain::Circle);
        for a in 1..=j {
            let b = j + 1 - a;
            if b < 1 || b > parts.len() {
                continue;
            }
            correction = correction.add(&parts[a - 1].0.mul(&parts[b - 1].1));
        }
        let g_j = correction.scale(-ONE);
        parts.push(split(&g_j));
        s_minus = assemble(&parts, 0);
        s_plus = assemble(&parts, 1);
        delta = s_minus.mul(&s_plus).sub(&m);
        let norm = delta.sup_norm();
        if norm > *history.last().unwrap() {
            rising += 1;
        } else {
            rising = 0;
        }
        history.push(norm);
        if rising >= 2 {
            return Err(WhError::Divergence {
                steps: history.len(),
                history,
            });
        }
    }
    let state = AsymptoticState {
        step: parts.len(),
        s_minus: s_minus.clone(),
        s_plus: s_plus.clone(),
        delta_norm_history: history.clone(),
    };
    let fact = Factorization {
        plus: s_plus,
        minus: s_minus,
        partial_indices: vec![0; n],
        residual_inf: *history.last().unwrap(),
        analyticity_defect: state
            .s_minus
            .defect_minus()
            .max(state.s_plus.defect_plus()),
        order: FactorOrder::MinusDiagPlus,
    };
    Ok((fact, state))
}

/// Result of a rational fit followed by exact factorization.
#[derive(Debug, Clone)]
pub struct RationalFit {
    pub rational: RationalMatrixFunction,
    /// Sup error of the fit against the original kernel on the grid.
    pub fit_error: f64,
    pub factorization: Factorization,
    /// Residual of the exact factors against the original (not the fitted)
    /// kernel.
    pub factor_residual: f64,
}

/// Weighted linearized least-squares fit of one contour function by a
/// rational function of the given degrees, with two reweighting passes.
fn fit_entry(
    samples: &[Complex64],
    nodes: &[Complex64],
    num_deg: usize,
    den_deg: usize,
) -> WhResult<RationalScalar> {
    let n = samples.len();
    let unknowns = num_deg + 1 + den_deg;
    if unknowns >= n {
        return Err(WhError::InvalidInput(
            "fit degrees exceed the sample count".into(),
        ));
    }
    let mut weights = vec![1.0f64; n];
    let mut num = Poly::zero();
    let mut den = Poly::one();
    for _pass in 0..3 {
        let mut a = Vec::with_capacity(n * unknowns);
        let mut b = Vec::with_capacity(n);
        for (j, &t) in nodes.iter().enumerate() {
            let w = Complex64::new(weights[j], 0.0);
            let mut tp = ONE;
            for _ in 0..=num_deg {
                a.push(w * tp);
                tp *= t;
            }
            let mut tq = t;
            for _ in 1..=den_deg {
                a.push(-w * samples[j] * tq);
                tq *= t;
            }
            b.push(w * samples[j]);
        }
        let x = linalg::least_squares(n, unknowns, &a, &b)?;
        let mut num_c = x[..=num_deg].to_vec();
        let mut den_c = vec![ONE];
        den_c.extend_from_slice(&x[num_deg + 1..]);
        let mut np = Poly::new(std::mem::take(&mut num_c));
        let mut dp = Poly::new(std::mem::take(&mut den_c));
        np.trim_relative(1e-14);
        dp.trim_relative(1e-14);
        num = np;
        den = dp;
        for (j, &t) in nodes.iter().enumerate() {
            let d = den.eval(t).norm();
            weights[j] = 1.0 / d.max(1e-8);
        }
    }
    let min_den = nodes
        .iter()
        .map(|&t| den.eval(t).norm())
        .fold(f64::INFINITY, f64::min);
    if min_den < 1e-10 {
        return Err(WhError::ContourSingularity {
            min_abs: min_den,
            tol: 1e-10,
        });
    }
    RationalScalar::new_lenient(num, den)
}

/// Fit every entry of a kernel by a rational function and factor the
/// approximant exactly. Per entry the fit escalates through nested degree
/// ladders up to the requested pair and keeps the best candidate, so the
/// reported error is nonincreasing in the requested degrees. The returned
/// record carries both the fit error and the residual of the factors
/// against the original kernel.
pub fn rational_fit_factor(
    k: &MatrixFunction,
    num_deg: usize,
    den_deg: usize,
    tol: &Tolerances,
) -> WhResult<RationalFit> {
    if !k.is_square() {
        return Err(WhError::InvalidInput("kernel must be square".into()));
    }
    let dim = k.rows();
    let grid = k
        .alias_free_grid(8 * (num_deg + den_deg + 2))
        .max(256)
        .next_power_of_two();
    let nodes = unit_circle_nodes(grid);
    let mut entries = Vec::with_capacity(dim * dim);
    let mut fit_error: f64 = 0.0;
    for e in k.entries() {
        let samples = e.samples(grid);
        let mut best: Option<(f64, RationalScalar)> = None;
        for d in 0..=num_deg.max(den_deg) {
            let (p, q) = (d.min(num_deg), d.min(den_deg));
            let rat = match fit_entry(&samples, &nodes, p, q) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let err = nodes
                .iter()
                .zip(&samples)
                .map(|(&t, &s)| (rat.eval(t) - s).norm())
                .fold(0.0, f64::max);
            if best.as_ref().map_or(true, |(b, _)| err < *b) {
                best = Some((err, rat));
            }
        }
        let (err, rat) = best.ok_or_else(|| {
            WhError::Resolution("no admissible rational fit at any ladder degree".into())
        })?;
        fit_error = fit_error.max(err);
        entries.push(rat);
    }
    let rational = RationalMatrixFunction::new(dim, dim, entries)?;
    let factorization = factor_rational(&rational, tol)?;
    let factor_residual = factorization.reconstruct().sub(k).sup_norm();
    Ok(RationalFit {
        rational,
        fit_error,
        factorization,
        factor_residual,
    })
}

/// Scalar convenience wrapper around [`rational_fit_factor`].
pub fn rational_fit_factor_scalar(
    k: &LaurentFunction,
    num_deg: usize,
    den_deg: usize,
    tol: &Tolerances,
) -> WhResult<RationalFit> {
    let m = MatrixFunction::new(1, 1, vec![k.clone()], Domain::Circle);
    rational_fit_factor(&m, num_deg, den_deg, tol)
}

/// Sup fit error restricted to contour nodes whose angle lies in
/// `[angle_lo, angle_hi)`; used to measure windowed accuracy when the
/// kernel is singular somewhere on the contour.
pub fn windowed_fit_error(
    samples: &[Complex64],
    rat: &RationalScalar,
    angle_lo: f64,
    angle_hi: f64,
) -> f64 {
    let n = samples.len();
    let mut worst = 0.0f64;
    for (j, &s) in samples.iter().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        if angle >= angle_lo && angle < angle_hi {
            let t = Complex64::from_polar(1.0, angle);
            worst = worst.max((rat.eval(t) - s).norm());
        }
    }
    worst
}

/// The exponentially coupled pair of one-sided problems on the circle:
///
/// ```text
/// Psi+(0) = A Phi-(0) + B t^L  Psi+(L) + f1
/// Phi-(L) = A Psi+(L) + C t^-L Phi-(0) + f2
/// ```
///
/// The two half-line problems face away from each other across a gap of
/// width `L` (a positive integer carrier exponent): the `(0)` pair lives
/// about the left edge, the `(L)` pair about the right edge. Each cross
/// term transports the opposite edge's field through the gap, so its
/// influence is only the coefficient tail that leaks across, and the
/// alternating sweep contracts faster as `L` grows.
#[derive(Debug, Clone)]
pub struct ExponentialSystem {
    pub a: LaurentFunction,
    pub b: LaurentFunction,
    pub c: LaurentFunction,
    pub f1: LaurentFunction,
    pub f2: LaurentFunction,
    pub separation: u32,
}

impl ExponentialSystem {
    pub fn new(
        a: LaurentFunction,
        b: LaurentFunction,
        c: LaurentFunction,
        f1: LaurentFunction,
        f2: LaurentFunction,
        separation: u32,
    ) -> WhResult<Self> {
        if separation == 0 {
            return Err(WhError::InvalidInput(
                "separation must be a positive integer".into(),
            ));
        }
        Ok(ExponentialSystem {
            a,
            b,
            c,
            f1,
            f2,
            separation,
        })
    }
}

/// The four unknowns and the iteration record.
#[derive(Debug, Clone)]
pub struct ExponentialSolution {
    pub psi_plus_0: LaurentFunction,
    pub psi_plus_l: LaurentFunction,
    pub phi_minus_0: LaurentFunction,
    pub phi_minus_l: LaurentFunction,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub change_history: Vec<f64>,
}

impl ExponentialSolution {
    /// Largest wrong-sided coefficient across the four unknowns.
    pub fn analyticity_defect(&self) -> f64 {
        self.psi_plus_0
            .defect_plus()
            .max(self.psi_plus_l.defect_plus())
            .max(strict_minus_defect(&self.phi_minus_0))
            .max(strict_minus_defect(&self.phi_minus_l))
    }
}

fn strict_minus_defect(f: &LaurentFunction) -> f64 {
    f.iter_coeffs()
        .filter(|(k, _)| *k >= 0)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max)
}

/// Residuals of the two rows for a candidate state.
fn system_residuals(
    sys: &ExponentialSystem,
    psi0: &LaurentFunction,
    psil: &LaurentFunction,
    phi0: &LaurentFunction,
    phil: &LaurentFunction,
) -> (f64, f64) {
    let l = sys.separation as i64;
    let row1 = sys
        .a
        .mul(phi0)
        .add(&sys.b.mul(&psil.shifted(l)))
        .add(&sys.f1)
        .sub(psi0);
    let row2 = sys
        .a
        .mul(psil)
        .add(&sys.c.mul(&phi0.shifted(-l)))
        .add(&sys.f2)
        .sub(phil);
    (row1.sup_norm(), row2.sup_norm())
}

/// Alternating solve of the coupled system: the first row is a scalar
/// problem for the pair `(Psi+(0), Phi-(0))` with the cross term frozen,
/// the second row updates `(Psi+(L), Phi-(L))` by the additive splitting of
/// the transported forcing. Each handoff carries only the coefficient tail
/// shifted across the gap, so the sweep contracts geometrically with rate
/// improving as the separation grows; too-strong coupling at small
/// separation surfaces as a divergence error.
pub fn iterative_exponential_solve(
    sys: &ExponentialSystem,
    target: f64,
    max_iter: usize,
    tol: &Tolerances,
) -> WhResult<ExponentialSolution> {
    let fact = factor_scalar(&sys.a, tol)?;
    if fact.kappa != 0 {
        return Err(WhError::NotCanonical { index: fact.kappa });
    }
    let a_plus_inv = fact.x_plus_inverse();
    let a_minus_inv = fact.x_minus_inverse();
    let l = sys.separation as i64;
    let mut psi0 = LaurentFunction::zero();
    let mut psil = LaurentFunction::zero();
    let mut phi0;
    let mut phil;
    let mut residual_history = Vec::new();
    let mut change_history = Vec::new();
    let mut non_contracting = 0usize;
    for iter in 1..=max_iter {
        let prev = (psi0.clone(), psil.clone());
        // row 1 with the cross term frozen: Psi+(0) - A Phi-(0) = F1;
        // dividing by A+ separates the sides
        let forcing = sys.b.mul(&psil.shifted(l)).add(&sys.f1);
        let w = a_plus_inv.mul(&forcing);
        let (w_plus, w_minus) = w.cauchy_split();
        psi0 = fact.x_plus.mul(&w_plus).cleaned(1e-15);
        phi0 = fact
            .x_minus_inverse()
            .mul(&w_minus)
            .neg()
            .cleaned(1e-15);
        // row 2: Phi-(L) - A Psi+(L) = S; dividing by A- separates
        let s = sys.c.mul(&phi0.shifted(-l)).add(&sys.f2);
        let v = a_minus_inv.mul(&s);
        let (v_plus, v_minus) = v.cauchy_split();
        phil = fact.x_minus.mul(&v_minus).cleaned(1e-15);
        psil = a_plus_inv.mul(&v_plus).neg().cleaned(1e-15);
        let (r1, r2) = system_residuals(sys, &psi0, &psil, &phi0, &phil);
        let residual = r1.max(r2);
        residual_history.push(residual);
        let change = psi0
            .sub(&prev.0)
            .sup_norm()
            .max(psil.sub(&prev.1).sup_norm());
        change_history.push(change);
        if residual <= target {
            return Ok(ExponentialSolution {
                psi_plus_0: psi0,
                psi_plus_l: psil,
                phi_minus_0: phi0,
                phi_minus_l: phil,
                iterations: iter,
                residual_history,
                change_history,
            });
        }
        if iter >= 2 {
            let prev_res = residual_history[iter - 2];
            if residual >= prev_res {
                non_contracting += 1;
            } else {
                non_contracting = 0;
            }
            if non_contracting >= 3 {
                return Err(WhError::Divergence {
                    steps: iter,
                    history: residual_history,
                });
            }
        }
    }
    Err(WhError::Divergence {
        steps: max_iter,
        history: residual_history,
    })
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
    fn asymptotic_zero_eps_is_exact_immediately() {
        let g = MatrixFunction::new(
            2,
            2,
            vec![
                LaurentFunction::monomial(-1),
                LaurentFunction::one(),
                LaurentFunction::monomial(1),
                LaurentFunction::zero(),
            ],
            Domain::Circle,
        );
        let (fact, state) = asymptotic_factor(&g, 0.0, 3, 1e-14, &tol()).unwrap();
        assert!(state.delta_norm_history[0] < 1e-15);
        assert!(fact.residual_inf < 1e-15);
        let id = MatrixFunction::identity(2, Domain::Circle);
        assert!(fact.plus.sup_distance(&id) < 1e-14);
        assert!(fact.minus.sup_distance(&id) < 1e-14);
    }

    #[test]
    fn asymptotic_one_sided_constant_is_exact_after_one_step() {
        // constant matrices split entirely to the plus side, so
        // G0- = 0 and the defect vanishes after the first order
        let g = crate::contour::matrix::constant_matrix(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            Domain::Circle,
        );
        let (fact, state) = asymptotic_factor(&g, 0.5, 4, 1e-13, &tol()).unwrap();
        assert_eq!(state.step, 1);
        assert!(state.delta_norm_history[0] < 1e-14);
        let id = MatrixFunction::identity(2, Domain::Circle);
        assert!(fact.minus.sup_distance(&id) < 1e-14);
    }

    #[test]
    fn asymptotic_first_defect_matches_cross_term_exactly() {
        let g = MatrixFunction::new(
            2,
            2,
            vec![
                LaurentFunction::new(-1, vec![c(0.5, 0.0), c(0.2, 0.0), c(0.3, 0.0)]),
                LaurentFunction::new(-1, vec![c(0.1, 0.1), c(0.0, 0.0), c(0.4, 0.0)]),
                LaurentFunction::new(-2, vec![c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.2, 0.0)]),
                LaurentFunction::new(0, vec![c(0.6, 0.0), c(0.25, 0.0)]),
            ],
            Domain::Circle,
        );
        let eps = 0.2;
        let (_, state) = asymptotic_factor(&g, eps, 1, 0.0, &tol()).unwrap();
        // delta_1 = eps^2 G0- G0+ coefficientwise
        let g_minus = g.map_entries(|e| e.minus_part());
        let g_plus = g.map_entries(|e| e.plus_part());
        let want = g_minus.mul(&g_plus).scale(c(eps * eps, 0.0));
        let id = MatrixFunction::identity(2, Domain::Circle);
        let m = id.add(&g.scale(c(eps, 0.0)));
        let got = state.s_minus.mul(&state.s_plus).sub(&m);
        assert!(got.sup_distance(&want) < 1e-12);
        // one-sidedness of the order terms
        assert!(state.s_minus.defect_minus() < 1e-12);
        assert!(state.s_plus.defect_plus() < 1e-12);
    }

    #[test]
    fn asymptotic_defect_decays_like_eps_per_order() {
        let g = MatrixFunction::new(
            2,
            2,
            vec![
                LaurentFunction::new(-1, vec![c(0.5, 0.0), c(0.2, 0.0), c(0.3, 0.0)]),
                LaurentFunction::new(-1, vec![c(0.1, 0.1), c(0.0, 0.0), c(0.4, 0.0)]),
                LaurentFunction::new(-1, vec![c(0.3, 0.0), c(0.0, 0.0), c(0.2, 0.0)]),
                LaurentFunction::new(0, vec![c(0.6, 0.0), c(0.25, 0.0)]),
            ],
            Domain::Circle,
        );
        for eps in [0.1, 0.2] {
            let (_, state) = asymptotic_factor(&g, eps, 6, 0.0, &tol()).unwrap();
            let h = &state.delta_norm_history;
            assert!(h.len() >= 4);
            // average log-slope of the defect against the step index
            let slope = ((h[3] / h[0]).ln()) / 3.0;
            let expected = eps.ln();
            assert!(
                (slope - expected).abs() < 0.2 * expected.abs(),
                "slope {slope} vs log eps {expected}"
            );
        }
    }

    #[test]
    fn rational_fit_recovers_exact_rational_input() {
        let num = Poly::new(vec![c(1.0, 0.0), c(0.4, 0.1)]);
        let den = Poly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)]);
        let rat = RationalScalar::new(num, den).unwrap();
        let k = rat.to_laurent(&tol()).unwrap();
        let fit = rational_fit_factor_scalar(&k, 1, 2, &tol()).unwrap();
        assert!(fit.fit_error < 1e-12, "fit error {}", fit.fit_error);
        assert!(fit.factor_residual < 1e-10);
    }

    #[test]
    fn rational_fit_error_decreases_with_degree_on_branch_kernel() {
        // kernel with branch points at 0.35 and 0.6 inside the disc:
        // single-valued on the contour (even winding of the radicand) but
        // not rational; the square root is glued continuously
        let grid = 512;
        let nodes = unit_circle_nodes(grid);
        let radicand: Vec<Complex64> =
            nodes.iter().map(|&t| (t - 0.35) * (t - 0.6)).collect();
        let (roots, _) = crate::contour::glued_sqrt_samples(&radicand).unwrap();
        let samples: Vec<Complex64> = nodes
            .iter()
            .zip(&roots)
            .map(|(&t, &r)| r / t * 2.0 + 3.0)
            .collect();
        let k = LaurentFunction::from_samples(&samples).unwrap();
        let mut errors = Vec::new();
        for deg in [2usize, 4, 6, 8] {
            let fit = rational_fit_factor_scalar(&k, deg, deg, &tol()).unwrap();
            errors.push(fit.fit_error);
        }
        for w in errors.windows(2) {
            assert!(
                w[1] <= w[0] * 1.05,
                "fit error should not increase: {errors:?}"
            );
        }
        assert!(errors.last().unwrap() < &1e-3, "errors {errors:?}");
    }

    #[test]
    fn exponential_decoupled_converges_in_one_sweep() {
        let sys = ExponentialSystem::new(
            LaurentFunction::constant(c(2.0, 0.0)),
            LaurentFunction::zero(),
            LaurentFunction::zero(),
            LaurentFunction::new(-1, vec![c(0.5, 0.0), c(1.0, 0.0), c(0.25, 0.0)]),
            LaurentFunction::new(-1, vec![c(0.3, 0.0), c(0.2, 0.0), c(0.1, 0.0)]),
            2,
        )
        .unwrap();
        let sol = iterative_exponential_solve(&sys, 1e-10, 10, &tol()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.analyticity_defect() < 1e-12);
    }

    #[test]
    fn exponential_one_way_coupling_converges_in_two_sweeps() {
        let sys = ExponentialSystem::new(
            LaurentFunction::constant(c(2.0, 0.0)),
            LaurentFunction::new(0, vec![c(0.5, 0.0), c(0.2, 0.0)]),
            LaurentFunction::zero(),
            LaurentFunction::new(-1, vec![c(0.5, 0.0), c(1.0, 0.0), c(0.25, 0.0)]),
            LaurentFunction::new(-1, vec![c(0.3, 0.0), c(0.2, 0.0), c(0.1, 0.0)]),
            2,
        )
        .unwrap();
        let sol = iterative_exponential_solve(&sys, 1e-10, 10, &tol()).unwrap();
        assert_eq!(sol.iterations, 2);
        let (r1, r2) = system_residuals(
            &sys,
            &sol.psi_plus_0,
            &sol.psi_plus_l,
            &sol.phi_minus_0,
            &sol.phi_minus_l,
        );
        assert!(r1 < 1e-10 && r2 < 1e-10);
    }

    #[test]
    fn exponential_iterations_decrease_with_separation() {
        // the couplings need infinite one-sided tails for the cross-gap
        // leakage to decay smoothly with the separation: B carries a minus
        // tail (rate 0.75), C a plus tail (rate 0.7)
        let grid = 512;
        let nodes = unit_circle_nodes(grid);
        let a = LaurentFunction::new(-1, vec![c(0.3, 0.0), c(2.0, 0.0), c(0.3, 0.0)]);
        let b_samples: Vec<Complex64> = nodes.iter().map(|&t| 1.2 / (t - 0.75)).collect();
        let b = LaurentFunction::from_samples(&b_samples).unwrap();
        let c_samples: Vec<Complex64> = nodes
            .iter()
            .map(|&t| 1.1 / (1.0 - 0.7 * t))
            .collect();
        let cc = LaurentFunction::from_samples(&c_samples).unwrap();
        let f1 = LaurentFunction::new(
            -2,
            vec![c(0.2, 0.0), c(0.4, 0.0), c(1.0, 0.0), c(0.3, 0.0), c(0.1, 0.0)],
        );
        let f2 = LaurentFunction::new(
            -2,
            vec![c(0.1, 0.0), c(0.3, 0.0), c(0.6, 0.0), c(0.2, 0.0), c(0.05, 0.0)],
        );
        let mut counts = Vec::new();
        for l in [2u32, 5, 10] {
            let sys = ExponentialSystem::new(
                a.clone(),
                b.clone(),
                cc.clone(),
                f1.clone(),
                f2.clone(),
                l,
            )
            .unwrap();
            let sol = iterative_exponential_solve(&sys, 1e-8, 200, &tol()).unwrap();
            assert!(sol.analyticity_defect() < 1e-8);
            // geometric convergence: the recorded residuals decrease
            for w in sol.residual_history.windows(2) {
                assert!(w[1] < w[0] || w[1] < 1e-8);
            }
            counts.push(sol.iterations);
        }
        assert!(
            counts[0] > counts[1] && counts[1] > counts[2],
            "iteration counts {counts:?}"
        );
    }

    #[test]
    fn exponential_rejects_nonzero_index_kernel() {
        let sys = ExponentialSystem::new(
            LaurentFunction::monomial(1),
            LaurentFunction::zero(),
            LaurentFunction::zero(),
            LaurentFunction::one(),
            LaurentFunction::one(),
            2,
        )
        .unwrap();
        assert!(matches!(
            iterative_exponential_solve(&sys, 1e-8, 10, &tol()),
            Err(WhError::NotCanonical { .. })
        ));
    }
}
