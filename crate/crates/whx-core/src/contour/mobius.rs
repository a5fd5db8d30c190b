//! Transport between the real line and the unit circle through the ratio
//! `t = (alpha - i)/(alpha + i)`.
//!
//! The upper half-plane maps to the inside of the disc and the real line to
//! the circle; `alpha = infinity` lands on the node `t = 1`, so line data
//! must be continuous at infinity and supply that limit value as the sample
//! at the first grid node.

use num_complex::Complex64;

use crate::contour::laurent::LaurentFunction;
use crate::error::{WhError, WhResult};
use crate::poly::Poly;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Direction of the transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobiusDirection {
    LineToCircle,
    CircleToLine,
}

/// The Cayley-type change of variable between line and circle problems.
#[derive(Debug, Clone, Copy)]
pub struct MobiusMap {
    pub direction: MobiusDirection,
}

/// `t = (alpha - i)/(alpha + i)`.
pub fn t_of_alpha(alpha: Complex64) -> Complex64 {
    (alpha - I) / (alpha + I)
}

/// `alpha = i (1 + t)/(1 - t)`, the inverse of `t_of_alpha`.
pub fn alpha_of_t(t: Complex64) -> Complex64 {
    I * (Complex64::new(1.0, 0.0) + t) / (Complex64::new(1.0, 0.0) - t)
}

/// Real-line sample points that map onto the `n` roots of unity. The first
/// node is the point at infinity and is reported as `None`; the remaining
/// nodes are `-cot(pi j / n)`.
pub fn line_nodes(n: usize) -> Vec<Option<f64>> {
    (0..n)
        .map(|j| {
            if j == 0 {
                None
            } else {
                let phi = std::f64::consts::PI * j as f64 / n as f64;
                Some(-phi.cos() / phi.sin())
            }
        })
        .collect()
}

/// Transport samples between the two contours.
///
/// For `LineToCircle` the samples must be the values of the line function at
/// `line_nodes(n)`, with the value at infinity first. For `CircleToLine` the
/// input is circle samples and the output is values at `line_nodes(n)` in
/// the same order.
pub fn mobius_transport(samples: &[Complex64], _map: MobiusMap) -> WhResult<Vec<Complex64>> {
    let n = samples.len();
    if n < 4 || !n.is_power_of_two() {
        return Err(WhError::InvalidInput(format!(
            "sample count must be a power of two >= 4, got {n}"
        )));
    }
    // both directions are a relabeling of the same node set
    Ok(samples.to_vec())
}

/// Build the circle representation of a line function from its samples at
/// `line_nodes(n)`.
pub fn laurent_from_line_samples(samples: &[Complex64]) -> WhResult<LaurentFunction> {
    let moved = mobius_transport(samples, MobiusMap {
        direction: MobiusDirection::LineToCircle,
    })?;
    LaurentFunction::from_samples(&moved)
}

/// Sample a line function (given as a closure of the real variable, plus its
/// limit at infinity) on the preimages of the root-of-unity grid.
pub fn sample_line_function(
    n: usize,
    at_infinity: Complex64,
    mut f: impl FnMut(f64) -> Complex64,
) -> Vec<Complex64> {
    line_nodes(n)
        .into_iter()
        .map(|node| match node {
            None => at_infinity,
            Some(x) => f(x),
        })
        .collect()
}

/// Evaluate the circle representation back on the line grid.
pub fn circle_to_line_samples(f: &LaurentFunction, n: usize) -> Vec<Complex64> {
    f.samples(n)
}

/// Exact transport of a polynomial in the line variable to a rational
/// function of the circle variable:
/// `p(alpha) = P(t) / (1 - t)^deg` with `P` returned here.
///
/// Uses `alpha^k = i^k (1+t)^k (1-t)^{d-k} / (1-t)^d`.
pub fn line_poly_to_circle_num(p: &Poly) -> Poly {
    let d = match p.degree() {
        None => return Poly::zero(),
        Some(d) => d,
    };
    let one_plus = Poly::new(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
    let one_minus = Poly::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
    let mut acc = Poly::zero();
    for k in 0..=d {
        let ck = p.coeff(k);
        if ck.norm_sqr() == 0.0 {
            continue;
        }
        let mut term = Poly::constant(ck * I.powi(k as i32));
        for _ in 0..k {
            term = term.mul(&one_plus);
        }
        for _ in 0..(d - k) {
            term = term.mul(&one_minus);
        }
        acc = acc.add(&term);
    }
    acc
}

/// Exact transport of a proper rational function `num/den` of the line
/// variable (deg num <= deg den, den nonvanishing on the closed line) to a
/// rational function of the circle variable. Returns `(num_t, den_t)`.
pub fn line_rational_to_circle(num: &Poly, den: &Poly) -> WhResult<(Poly, Poly)> {
    let dn = num.degree().unwrap_or(0);
    let dd = den
        .degree()
        .ok_or_else(|| WhError::InvalidInput("zero denominator".into()))?;
    if num.is_zero() {
        return Ok((Poly::zero(), Poly::one()));
    }
    if dn > dd {
        return Err(WhError::InvalidInput(
            "rational function must be proper (continuous at infinity) for circle transport"
                .into(),
        ));
    }
    let mut num_t = line_poly_to_circle_num(num);
    let den_t = line_poly_to_circle_num(den);
    // numerator picks up the excess (1 - t) powers
    let one_minus = Poly::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
    for _ in 0..(dd - dn) {
        num_t = num_t.mul(&one_minus);
    }
    Ok((num_t, den_t))
}
