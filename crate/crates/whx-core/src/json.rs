//! JSON encodings of the toolkit's value types.
//!
//! Conventions shared by every document:
//! - a complex number is a two-element array `[re, im]`;
//! - a scalar contour function is `{"k_min": int, "coeffs": [[re,im], ...]}`;
//! - a matrix function is `{"rows": r, "cols": c, "domain": "circle"|"line",
//!   "entries": [...]}` in row-major order;
//! - a sequence is `{"offset": int, "values": [[re,im], ...]}`;
//! - a rational entry is `{"num": [[re,im],...], "den": [[re,im],...]}` in
//!   ascending degree.
//!
//! Emission is deterministic: fixed key order and floating-point numbers
//! pinned to 17 significant digits, so identical inputs produce
//! byte-identical documents.

use num_complex::Complex64;
use serde_json::Value;

use crate::contour::laurent::LaurentFunction;
use crate::contour::matrix::{Domain, Factorization, MatrixFunction};
use crate::discrete_wh::Sequence;
use crate::error::{WhError, WhResult};
use crate::poly::{Poly, PolyMatrix};
use crate::rational_wh::{RationalMatrixFunction, RationalScalar};

/// Format one floating-point number with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    format!("{x:.16e}")
}

/// Format a complex number as `[re, im]`.
pub fn fmt_complex(z: Complex64) -> String {
    format!("[{},{}]", fmt_f64(z.re), fmt_f64(z.im))
}

fn fmt_complex_list(values: impl Iterator<Item = Complex64>) -> String {
    let parts: Vec<String> = values.map(fmt_complex).collect();
    format!("[{}]", parts.join(","))
}

/// Emit a scalar contour function.
pub fn emit_laurent(f: &LaurentFunction) -> String {
    format!(
        "{{\"k_min\":{},\"coeffs\":{}}}",
        f.k_min(),
        fmt_complex_list(f.iter_coeffs().map(|(_, c)| c))
    )
}

/// Emit a matrix function.
pub fn emit_matrix(m: &MatrixFunction) -> String {
    let entries: Vec<String> = m.entries().iter().map(emit_laurent).collect();
    let domain = match m.domain() {
        Domain::Circle => "circle",
        Domain::LineMapped => "line",
    };
    format!(
        "{{\"rows\":{},\"cols\":{},\"domain\":\"{}\",\"entries\":[{}]}}",
        m.rows(),
        m.cols(),
        domain,
        entries.join(",")
    )
}

/// Emit a sequence.
pub fn emit_sequence(s: &Sequence) -> String {
    format!(
        "{{\"offset\":{},\"values\":{}}}",
        s.offset,
        fmt_complex_list(s.values.iter().copied())
    )
}

/// Emit a factorization record.
pub fn emit_factorization(f: &Factorization) -> String {
    let indices: Vec<String> = f.partial_indices.iter().map(|k| k.to_string()).collect();
    let order = match f.order {
        crate::contour::matrix::FactorOrder::PlusDiagMinus => "plus-diag-minus",
        crate::contour::matrix::FactorOrder::MinusDiagPlus => "minus-diag-plus",
    };
    format!(
        "{{\"plus\":{},\"minus\":{},\"partial_indices\":[{}],\"residual_inf\":{},\"analyticity_defect\":{},\"order\":\"{}\"}}",
        emit_matrix(&f.plus),
        emit_matrix(&f.minus),
        indices.join(","),
        fmt_f64(f.residual_inf),
        fmt_f64(f.analyticity_defect),
        order
    )
}

fn invalid(msg: &str) -> WhError {
    WhError::InvalidInput(msg.to_string())
}

/// Parse a complex number from `[re, im]`.
pub fn parse_complex(v: &Value) -> WhResult<Complex64> {
    let arr = v.as_array().ok_or_else(|| invalid("expected [re, im]"))?;
    if arr.len() != 2 {
        return Err(invalid("complex value must have exactly two components"));
    }
    let re = arr[0]
        .as_f64()
        .ok_or_else(|| invalid("real part must be a number"))?;
    let im = arr[1]
        .as_f64()
        .ok_or_else(|| invalid("imaginary part must be a number"))?;
    Ok(Complex64::new(re, im))
}

pub fn parse_complex_list(v: &Value) -> WhResult<Vec<Complex64>> {
    v.as_array()
        .ok_or_else(|| invalid("expected an array of complex values"))?
        .iter()
        .map(parse_complex)
        .collect()
}

/// Parse a scalar contour function.
pub fn parse_laurent(v: &Value) -> WhResult<LaurentFunction> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("expected a {k_min, coeffs} object"))?;
    let k_min = obj
        .get("k_min")
        .and_then(Value::as_i64)
        .ok_or_else(|| invalid("missing integer field k_min"))?;
    let coeffs = parse_complex_list(
        obj.get("coeffs")
            .ok_or_else(|| invalid("missing field coeffs"))?,
    )?;
    if coeffs.is_empty() {
        return Err(invalid("coeffs must be nonempty"));
    }
    Ok(LaurentFunction::new(k_min, coeffs))
}

/// Parse a matrix function.
pub fn parse_matrix(v: &Value) -> WhResult<MatrixFunction> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("expected a matrix object"))?;
    let rows = obj
        .get("rows")
        .and_then(Value::as_u64)
        .ok_or_else(|| invalid("missing field rows"))? as usize;
    let cols = obj
        .get("cols")
        .and_then(Value::as_u64)
        .ok_or_else(|| invalid("missing field cols"))? as usize;
    let domain = match obj.get("domain").and_then(Value::as_str) {
        Some("line") => Domain::LineMapped,
        _ => Domain::Circle,
    };
    let entries_v = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("missing array field entries"))?;
    if entries_v.len() != rows * cols {
        return Err(invalid("entry count does not match rows * cols"));
    }
    let entries: WhResult<Vec<LaurentFunction>> = entries_v.iter().map(parse_laurent).collect();
    Ok(MatrixFunction::new(rows, cols, entries?, domain))
}

/// Parse a sequence.
pub fn parse_sequence(v: &Value) -> WhResult<Sequence> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("expected an {offset, values} object"))?;
    let offset = obj
        .get("offset")
        .and_then(Value::as_i64)
        .ok_or_else(|| invalid("missing integer field offset"))?;
    let values = parse_complex_list(
        obj.get("values")
            .ok_or_else(|| invalid("missing field values"))?,
    )?;
    Ok(Sequence::new(offset, values))
}

/// Parse a polynomial given as an ascending coefficient list.
pub fn parse_poly(v: &Value) -> WhResult<Poly> {
    Ok(Poly::new(parse_complex_list(v)?))
}

/// Parse a rational entry `{num, den}`.
pub fn parse_rational_scalar(v: &Value) -> WhResult<RationalScalar> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("expected a {num, den} object"))?;
    let num = parse_poly(obj.get("num").ok_or_else(|| invalid("missing field num"))?)?;
    let den = parse_poly(obj.get("den").ok_or_else(|| invalid("missing field den"))?)?;
    RationalScalar::new(num, den)
}

/// Parse a rational matrix `{rows, cols, entries: [{num, den}, ...]}`.
pub fn parse_rational_matrix(v: &Value) -> WhResult<RationalMatrixFunction> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("expected a rational matrix object"))?;
    let rows = obj
        .get("rows")
        .and_then(Value::as_u64)
        .ok_or_else(|| invalid("missing field rows"))? as usize;
    let cols = obj
        .get("cols")
        .and_then(Value::as_u64)
        .ok_or_else(|| invalid("missing field cols"))? as usize;
    let entries_v = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("missing array field entries"))?;
    if entries_v.len() != rows * cols {
        return Err(invalid("entry count does not match rows * cols"));
    }
    let entries: WhResult<Vec<RationalScalar>> =
        entries_v.iter().map(parse_rational_scalar).collect();
    RationalMatrixFunction::new(rows, cols, entries?)
}

/// Parse a factorization record previously written by
/// [`emit_factorization`]. The stored diagnostics are re-read as-is; use
/// [`crate::stability::index_sum_check`] to re-measure them.
pub fn parse_factorization(v: &Value) -> WhResult<Factorization> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("expected a factorization object"))?;
    let plus = parse_matrix(obj.get("plus").ok_or_else(|| invalid("missing field plus"))?)?;
    let minus = parse_matrix(
        obj.get("minus")
            .ok_or_else(|| invalid("missing field minus"))?,
    )?;
    let partial_indices: Vec<i64> = obj
        .get("partial_indices")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("missing array field partial_indices"))?
        .iter()
        .map(|x| x.as_i64().ok_or_else(|| invalid("indices must be integers")))
        .collect::<WhResult<_>>()?;
    if partial_indices.len() != plus.rows() {
        return Err(invalid("index count does not match the factor dimension"));
    }
    let order = match obj.get("order").and_then(Value::as_str) {
        Some("minus-diag-plus") => crate::contour::matrix::FactorOrder::MinusDiagPlus,
        _ => crate::contour::matrix::FactorOrder::PlusDiagMinus,
    };
    let residual_inf = obj
        .get("residual_inf")
        .and_then(Value::as_f64)
        .unwrap_or(f64::NAN);
    let analyticity_defect = obj
        .get("analyticity_defect")
        .and_then(Value::as_f64)
        .unwrap_or(f64::NAN);
    Ok(Factorization {
        plus,
        minus,
        partial_indices,
        residual_inf,
        analyticity_defect,
        order,
    })
}

/// Parse a polynomial matrix `{rows, cols, entries: [[...], ...]}`.
pub fn parse_poly_matrix(v: &Value) -> WhResult<PolyMatrix> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("expected a polynomial matrix object"))?;
    let rows = obj
        .get("rows")
        .and_then(Value::as_u64)
        .ok_or_else(|| invalid("missing field rows"))? as usize;
    let cols = obj
        .get("cols")
        .and_then(Value::as_u64)
        .ok_or_else(|| invalid("missing field cols"))? as usize;
    let entries_v = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("missing array field entries"))?;
    if entries_v.len() != rows * cols {
        return Err(invalid("entry count does not match rows * cols"));
    }
    let entries: WhResult<Vec<Poly>> = entries_v.iter().map(parse_poly).collect();
    Ok(PolyMatrix::new(rows, cols, entries?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn laurent_round_trip() {
        let f = LaurentFunction::new(-2, vec![c(0.5, -1.0), c(0.0, 0.0), c(1.0 / 3.0, 2.0)]);
        let text = emit_laurent(&f);
        let v: Value = serde_json::from_str(&text).unwrap();
        let back = parse_laurent(&v).unwrap();
        assert_eq!(back.k_min(), f.k_min());
        for k in -3..=3 {
            assert_eq!(back.coeff(k), f.coeff(k));
        }
    }

    #[test]
    fn matrix_round_trip_and_determinism() {
        let m = MatrixFunction::new(
            1,
            2,
            vec![
                LaurentFunction::monomial(1),
                LaurentFunction::constant(c(0.1, 0.2)),
            ],
            Domain::LineMapped,
        );
        let a = emit_matrix(&m);
        let b = emit_matrix(&parse_matrix(&serde_json::from_str(&a).unwrap()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn sequence_round_trip() {
        let s = Sequence::new(-1, vec![c(1.0, 0.0), c(2.0, -0.5)]);
        let v: Value = serde_json::from_str(&emit_sequence(&s)).unwrap();
        assert_eq!(parse_sequence(&v).unwrap(), s);
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let bad: Value = serde_json::from_str("{\"k_min\": 0}").unwrap();
        assert!(parse_laurent(&bad).is_err());
        let bad: Value = serde_json::from_str("{\"rows\": 2, \"cols\": 2, \"entries\": []}").unwrap();
        assert!(parse_matrix(&bad).is_err());
        let bad: Value = serde_json::from_str("[1.0]").unwrap();
        assert!(parse_complex(&bad).is_err());
    }
}
