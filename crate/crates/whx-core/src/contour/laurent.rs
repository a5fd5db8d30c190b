//! Scalar functions on the unit circle held as finite Laurent coefficient
//! windows, with FFT transforms between grid samples and coefficients.
//!
//! The coefficient window always contains the index 0, so the additive
//! plus/minus (Plemelj) splitting is an exact partition: indices `k >= 0`
//! form the part analytic inside the disc (bounded at the origin), indices
//! `k < 0` the part analytic outside (vanishing at infinity).

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::config::Tolerances;
use crate::error::{WhError, WhResult};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Run an FFT in place. `inverse` selects the conjugate transform; neither
/// direction applies the `1/n` normalization.
pub(crate) fn fft_in_place(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    fft.process(data);
}

/// The `n`-th roots of unity in contour order.
pub fn unit_circle_nodes(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
        .collect()
}

/// A scalar function on the unit circle stored as Laurent coefficients
/// `c_k` for `k = k_min ..= k_max`, with `k_min <= 0 <= k_max`.
#[derive(Debug, Clone)]
pub struct LaurentFunction {
    k_min: i64,
    coeffs: Vec<Complex64>,
    n_samples: usize,
}

impl LaurentFunction {
    /// Build from a coefficient window starting at `k_min`. The window is
    /// padded so that index 0 is always addressable.
    pub fn new(k_min: i64, coeffs: Vec<Complex64>) -> Self {
        let mut k_min = k_min;
        let mut coeffs = coeffs;
        if coeffs.is_empty() {
            coeffs.push(ZERO);
            k_min = 0;
        }
        // pad so that k_min <= 0 <= k_max
        if k_min > 0 {
            let mut pad = vec![ZERO; k_min as usize];
            pad.extend(coeffs);
            coeffs = pad;
            k_min = 0;
        }
        let k_max = k_min + coeffs.len() as i64 - 1;
        if k_max < 0 {
            coeffs.extend(std::iter::repeat_n(ZERO, (-k_max) as usize));
        }
        let mut f = LaurentFunction {
            k_min,
            coeffs,
            n_samples: 0,
        };
        f.shrink();
        f.n_samples = f.default_grid();
        f
    }

    /// Remove zero padding at both window ends (index 0 stays addressable).
    fn shrink(&mut self) {
        while self.coeffs.len() > 1 && self.k_min < 0 && self.coeffs[0].norm() == 0.0 {
            self.coeffs.remove(0);
            self.k_min += 1;
        }
        while self.coeffs.len() > 1
            && self.k_min + self.coeffs.len() as i64 - 1 > 0
            && self.coeffs.last().map(|c| c.norm()) == Some(0.0)
        {
            self.coeffs.pop();
        }
    }

    fn default_grid(&self) -> usize {
        (2 * self.coeffs.len()).next_power_of_two().max(8)
    }

    pub fn zero() -> Self {
        LaurentFunction::new(0, vec![ZERO])
    }

    pub fn constant(c: Complex64) -> Self {
        LaurentFunction::new(0, vec![c])
    }

    pub fn one() -> Self {
        LaurentFunction::constant(Complex64::new(1.0, 0.0))
    }

    /// The monomial `t^k`.
    pub fn monomial(k: i64) -> Self {
        LaurentFunction::scaled_monomial(Complex64::new(1.0, 0.0), k)
    }

    /// The monomial `c * t^k`.
    pub fn scaled_monomial(c: Complex64, k: i64) -> Self {
        let len = k.unsigned_abs() as usize + 1;
        let mut coeffs = vec![ZERO; len];
        if k >= 0 {
            coeffs[k as usize] = c;
            LaurentFunction::new(0, coeffs)
        } else {
            coeffs[0] = c;
            LaurentFunction::new(k, coeffs)
        }
    }

    /// Recover coefficients from samples at the roots of unity. The sample
    /// count must be a power of two, at least 4; coefficients are placed in
    /// the centered window `[-n/2, n/2)`.
    pub fn from_samples(samples: &[Complex64]) -> WhResult<Self> {
        let n = samples.len();
        if n < 4 || !n.is_power_of_two() {
            return Err(WhError::InvalidInput(format!(
                "sample count must be a power of two >= 4, got {n}"
            )));
        }
        let mut buf = samples.to_vec();
        fft_in_place(&mut buf, false);
        let half = n / 2;
        let inv_n = 1.0 / n as f64;
        let mut coeffs = vec![ZERO; n];
        for (m, v) in buf.into_iter().enumerate() {
            let k = if m < half { m as i64 } else { m as i64 - n as i64 };
            coeffs[(k + half as i64) as usize] = v * inv_n;
        }
        let mut f = LaurentFunction::new(-(half as i64), coeffs);
        f.n_samples = n;
        Ok(f)
    }

    /// Evaluate on the `n`-point root-of-unity grid. Coefficients outside
    /// the grid window fold modulo `n`, so `n` should exceed the support
    /// length for alias-free values.
    pub fn samples(&self, n: usize) -> Vec<Complex64> {
        assert!(n.is_power_of_two() && n >= 4, "grid must be a power of two >= 4");
        let mut spec = vec![ZERO; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            let k = self.k_min + i as i64;
            let m = k.rem_euclid(n as i64) as usize;
            spec[m] += c;
        }
        fft_in_place(&mut spec, true);
        spec
    }

    /// Grid large enough to sample this function without aliasing, never
    /// smaller than the stored transform resolution.
    pub fn alias_free_grid(&self, floor: usize) -> usize {
        self.coeffs
            .len()
            .next_power_of_two()
            .max(self.n_samples)
            .max(floor.next_power_of_two())
            .max(8)
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.coeffs.len() as i64 - 1
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn set_n_samples(&mut self, n: usize) {
        self.n_samples = n.next_power_of_two().max(8);
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k - self.k_min;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            ZERO
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Iterate over `(k, c_k)` pairs of the stored window.
    pub fn iter_coeffs(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.k_min + i as i64, c))
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop coefficients below `rel` times the largest magnitude.
    pub fn cleaned(&self, rel: f64) -> Self {
        let scale = self.max_coeff();
        if scale == 0.0 {
            return LaurentFunction::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| if c.norm() <= rel * scale { ZERO } else { c })
            .collect();
        let mut f = LaurentFunction::new(self.k_min, coeffs);
        f.n_samples = self.n_samples;
        f
    }

    /// Part with indices `k >= 0` (analytic inside, bounded at the origin).
    pub fn plus_part(&self) -> Self {
        let coeffs: Vec<Complex64> = self
            .iter_coeffs()
            .filter(|(k, _)| *k >= 0)
            .map(|(_, c)| c)
            .collect();
        let mut f = LaurentFunction::new(0, coeffs);
        f.n_samples = self.n_samples;
        f
    }

    /// Part with indices `k < 0` (analytic outside, vanishing at infinity).
    pub fn minus_part(&self) -> Self {
        let neg: Vec<Complex64> = self
            .iter_coeffs()
            .filter(|(k, _)| *k < 0)
            .map(|(_, c)| c)
            .collect();
        let mut f = if neg.is_empty() {
            LaurentFunction::zero()
        } else {
            let k_min = self.k_min.min(-1);
            LaurentFunction::new(k_min, neg)
        };
        f.n_samples = self.n_samples;
        f
    }

    /// Exact additive splitting into the inside- and outside-analytic parts.
    pub fn cauchy_split(&self) -> (Self, Self) {
        (self.plus_part(), self.minus_part())
    }

    /// Largest magnitude among coefficients with `k < 0`; zero for a clean
    /// plus factor.
    pub fn defect_plus(&self) -> f64 {
        self.iter_coeffs()
            .filter(|(k, _)| *k < 0)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    /// Largest magnitude among coefficients with `k > 0`; zero for a clean
    /// minus factor (the constant is allowed on the minus side).
    pub fn defect_minus(&self) -> f64 {
        self.iter_coeffs()
            .filter(|(k, _)| *k > 0)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut f = LaurentFunction::new(
            self.k_min,
            self.coeffs.iter().map(|&a| a * c).collect(),
        );
        f.n_samples = self.n_samples;
        f
    }

    pub fn add(&self, other: &Self) -> Self {
        let k_min = self.k_min.min(other.k_min);
        let k_max = self.k_max().max(other.k_max());
        let mut coeffs = vec![ZERO; (k_max - k_min + 1) as usize];
        for (k, c) in self.iter_coeffs() {
            coeffs[(k - k_min) as usize] += c;
        }
        for (k, c) in other.iter_coeffs() {
            coeffs[(k - k_min) as usize] += c;
        }
        let mut f = LaurentFunction::new(k_min, coeffs);
        f.n_samples = self.n_samples.max(other.n_samples);
        f
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Exact product by direct convolution of the coefficient windows.
    pub fn mul(&self, other: &Self) -> Self {
        if self.max_coeff() == 0.0 || other.max_coeff() == 0.0 {
            let mut f = LaurentFunction::zero();
            f.n_samples = self.n_samples.max(other.n_samples);
            return f;
        }
        let k_min = self.k_min + other.k_min;
        let len = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![ZERO; len];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let mut f = LaurentFunction::new(k_min, coeffs);
        f.n_samples = self.n_samples.max(other.n_samples);
        f
    }

    /// Multiply by the monomial `t^dk` (exact index shift).
    pub fn shifted(&self, dk: i64) -> Self {
        let mut f = LaurentFunction::new(self.k_min + dk, self.coeffs.clone());
        f.n_samples = self.n_samples;
        f
    }

    /// Evaluate at an arbitrary nonzero point of the plane.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut plus = ZERO;
        for (k, c) in self.iter_coeffs().filter(|(k, _)| *k >= 0) {
            plus += c * z.powi(k as i32);
        }
        let mut minus = ZERO;
        if z.norm() > 0.0 {
            let zi = Complex64::new(1.0, 0.0) / z;
            for (k, c) in self.iter_coeffs().filter(|(k, _)| *k < 0) {
                minus += c * zi.powi((-k) as i32);
            }
        }
        plus + minus
    }

    /// Sup norm over an alias-free oversampled grid.
    pub fn sup_norm(&self) -> f64 {
        let n = self.alias_free_grid(2 * self.coeffs.len());
        self.samples(n).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Minimum modulus over an alias-free oversampled grid.
    pub fn min_abs(&self) -> f64 {
        let n = self.alias_free_grid(2 * self.coeffs.len());
        self.samples(n)
            .iter()
            .map(|v| v.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number of the contour image around the origin, computed by
    /// phase unwrapping with automatic grid refinement. Also returns the
    /// rounding defect of the raw phase total.
    pub fn winding_with_defect(&self, tol: &Tolerances) -> WhResult<(i64, f64)> {
        let mut n = self.alias_free_grid(128);
        loop {
            let samples = self.samples(n);
            let min_abs = samples.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
            if min_abs < tol.singularity {
                return Err(WhError::ContourSingularity {
                    min_abs,
                    tol: tol.singularity,
                });
            }
            match unwrap_phase_total(&samples) {
                Some(total) => {
                    let turns = total / (2.0 * std::f64::consts::PI);
                    let rounded = turns.round();
                    let defect = (turns - rounded).abs();
                    if defect <= tol.winding_defect {
                        return Ok((rounded as i64, defect));
                    }
                }
                None => {}
            }
            if n >= tol.grid_cap {
                return Err(WhError::Resolution(format!(
                    "winding number did not stabilize below the grid cap {}",
                    tol.grid_cap
                )));
            }
            n *= 2;
        }
    }

    /// Winding number, discarding the rounding defect.
    pub fn winding(&self, tol: &Tolerances) -> WhResult<i64> {
        self.winding_with_defect(tol).map(|(w, _)| w)
    }
}

/// Total argument increment along the closed sample loop, or `None` when an
/// adjacent-sample jump is too close to a half turn to unwrap reliably.
fn unwrap_phase_total(samples: &[Complex64]) -> Option<f64> {
    let n = samples.len();
    let mut total = 0.0;
    for j in 0..n {
        let a = samples[j];
        let b = samples[(j + 1) % n];
        let inc = (b / a).arg();
        if inc.abs() > 0.995 * std::f64::consts::PI {
            return None;
        }
        total += inc;
    }
    Some(total)
}

/// Continuous logarithm along the sample loop. Returns the log samples and
/// the winding number of the input (the mismatch over one full loop).
pub fn glued_log_samples(samples: &[Complex64]) -> WhResult<(Vec<Complex64>, i64)> {
    let n = samples.len();
    let mut logs = Vec::with_capacity(n);
    let mut arg = samples[0].arg();
    logs.push(Complex64::new(samples[0].norm().ln(), arg));
    let mut total = 0.0;
    for j in 1..=n {
        let prev = samples[j - 1];
        let cur = samples[j % n];
        let inc = (cur / prev).arg();
        if inc.abs() > 0.995 * std::f64::consts::PI {
            return Err(WhError::Resolution(
                "phase step too large to unwrap; refine the grid".into(),
            ));
        }
        total += inc;
        if j < n {
            arg += inc;
            logs.push(Complex64::new(cur.norm().ln(), arg));
        }
    }
    let winding = (total / (2.0 * std::f64::consts::PI)).round() as i64;
    Ok((logs, winding))
}

/// Continuous square root along the sample loop, seeded with the principal
/// branch at the first node. Returns the root samples and the monodromy sign
/// picked up over one loop (`-1` when the input winds an odd number of
/// times).
pub fn glued_sqrt_samples(samples: &[Complex64]) -> WhResult<(Vec<Complex64>, i64)> {
    let n = samples.len();
    let mut out = Vec::with_capacity(n);
    let mut prev = samples[0].sqrt();
    out.push(prev);
    for &s in samples.iter().skip(1) {
        let mut r = s.sqrt();
        if (r - prev).norm() > (r + prev).norm() {
            r = -r;
        }
        out.push(r);
        prev = r;
    }
    // closure: compare the continuation back to the first node
    let mut closing = samples[0].sqrt();
    if (closing - prev).norm() > (closing + prev).norm() {
        closing = -closing;
    }
    let monodromy = if (closing - out[0]).norm() <= (closing + out[0]).norm() {
        1
    } else {
        -1
    };
    Ok((out, monodromy))
}

/// Sample a function on successively finer grids until the outer quarter of
/// the coefficient window falls below the tail tolerance.
pub fn resolve_from_fn(
    tol: &Tolerances,
    start: usize,
    mut f: impl FnMut(usize) -> WhResult<Vec<Complex64>>,
) -> WhResult<LaurentFunction> {
    let mut n = start.next_power_of_two().max(16);
    loop {
        let samples = f(n)?;
        let lf = LaurentFunction::from_samples(&samples)?;
        let scale = lf.max_coeff();
        let quarter = (n / 4) as i64;
        let tail = lf
            .iter_coeffs()
            .filter(|(k, _)| k.abs() >= quarter)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        if tail <= tol.tail * (1.0 + scale) {
            return Ok(lf);
        }
        if n >= tol.grid_cap {
            return Err(WhError::Resolution(format!(
                "coefficient tail {tail:.3e} above tolerance at the grid cap {n}"
            )));
        }
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_from_samples() {
        let samples = vec![c(1.0, 0.0); 8];
        let f = LaurentFunction::from_samples(&samples).unwrap();
        assert!((f.coeff(0) - c(1.0, 0.0)).norm() < 1e-14);
        for k in [-3i64, -2, -1, 1, 2, 3] {
            assert!(f.coeff(k).norm() < 1e-14);
        }
    }

    #[test]
    fn monomial_from_samples() {
        let nodes = unit_circle_nodes(8);
        let f = LaurentFunction::from_samples(&nodes).unwrap();
        assert!((f.coeff(1) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(f.coeff(0).norm() < 1e-14);
        assert!(f.coeff(-1).norm() < 1e-14);
    }

    #[test]
    fn geometric_expansion_of_simple_pole() {
        // 1/(t - 2) = -sum_{k>=0} t^k / 2^{k+1}, computed independently of
        // the transform from the geometric series.
        let nodes = unit_circle_nodes(64);
        let samples: Vec<Complex64> = nodes.iter().map(|&t| 1.0 / (t - 2.0)).collect();
        let f = LaurentFunction::from_samples(&samples).unwrap();
        for k in 0..12i64 {
            let expected = -(0.5f64).powi(k as i32 + 1);
            assert!(
                (f.coeff(k) - c(expected, 0.0)).norm() < 1e-12,
                "coefficient {k}"
            );
        }
        for k in 1..12i64 {
            assert!(f.coeff(-k).norm() < 1e-12);
        }
    }

    #[test]
    fn from_samples_rejects_bad_lengths() {
        assert!(LaurentFunction::from_samples(&[]).is_err());
        assert!(LaurentFunction::from_samples(&vec![c(1.0, 0.0); 6]).is_err());
    }

    #[test]
    fn split_partitions_coefficients() {
        let f = LaurentFunction::new(-1, vec![c(1.0, 0.0), c(5.0, 0.0), c(1.0, 0.0)]);
        let (p, m) = f.cauchy_split();
        assert!((p.coeff(0) - c(5.0, 0.0)).norm() == 0.0);
        assert!((p.coeff(1) - c(1.0, 0.0)).norm() == 0.0);
        assert!((m.coeff(-1) - c(1.0, 0.0)).norm() == 0.0);
        assert!(m.coeff(0).norm() == 0.0);
        let back = p.add(&m);
        for k in -2..=2 {
            assert_eq!(back.coeff(k), f.coeff(k));
        }
        // splitting the zero function
        let (zp, zm) = LaurentFunction::zero().cauchy_split();
        assert_eq!(zp.max_coeff(), 0.0);
        assert_eq!(zm.max_coeff(), 0.0);
    }

    #[test]
    fn split_of_outside_analytic_function_has_tiny_minus_part() {
        // 1/(t - 2) is analytic in |t| < 2, so its minus part is pure
        // aliasing. At 64 nodes the alias floor is sum_{k>=32} 2^-(k+1)
        // = 2^-32 ~ 2.3e-10; at 128 nodes it drops below 1e-10.
        let nodes = unit_circle_nodes(64);
        let samples: Vec<Complex64> = nodes.iter().map(|&t| 1.0 / (t - 2.0)).collect();
        let f = LaurentFunction::from_samples(&samples).unwrap();
        let (_, minus) = f.cauchy_split();
        assert!(minus.sup_norm() < 1e-9);

        let nodes = unit_circle_nodes(128);
        let samples: Vec<Complex64> = nodes.iter().map(|&t| 1.0 / (t - 2.0)).collect();
        let f = LaurentFunction::from_samples(&samples).unwrap();
        let (_, minus) = f.cauchy_split();
        assert!(minus.sup_norm() < 1e-10);
    }

    #[test]
    fn winding_of_monomials_and_constants() {
        let tol = Tolerances::default();
        assert_eq!(LaurentFunction::monomial(3).winding(&tol).unwrap(), 3);
        assert_eq!(
            LaurentFunction::constant(c(7.0, 0.0)).winding(&tol).unwrap(),
            0
        );
    }

    #[test]
    fn winding_counts_zeros_minus_poles_inside() {
        // f(t) = (t - 0.5)(t - 2)/t has one zero and one (monomial) pole
        // inside the unit disc.
        let tol = Tolerances::default();
        let f = LaurentFunction::new(
            -1,
            vec![c(1.0, 0.0), c(-2.5, 0.0), c(1.0, 0.0)],
        );
        assert_eq!(f.winding(&tol).unwrap(), 0);
    }

    #[test]
    fn winding_rejects_contour_zero() {
        let tol = Tolerances::default();
        // t - 1 vanishes at the node t = 1
        let f = LaurentFunction::new(0, vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            f.winding(&tol),
            Err(WhError::ContourSingularity { .. })
        ));
    }

    #[test]
    fn product_is_exact_on_coefficients() {
        let a = LaurentFunction::new(-1, vec![c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let b = LaurentFunction::new(0, vec![c(1.0, 0.0), c(3.0, 0.0)]);
        let p = a.mul(&b);
        // (2/t + t)(1 + 3t) = 2/t + 6 + t + 3t^2
        assert_eq!(p.coeff(-1), c(2.0, 0.0));
        assert_eq!(p.coeff(0), c(6.0, 0.0));
        assert_eq!(p.coeff(1), c(1.0, 0.0));
        assert_eq!(p.coeff(2), c(3.0, 0.0));
    }
}
