//! JSON documents for loops, invariants and the intermediate stages.
//!
//! Floats are written with 17 significant digits so that identical inputs
//! give byte-identical documents. Every document carries the modulus `tau`.

use std::io;

use serde_json::{json, Map, Value};

use crate::align::AlignedForm;
use crate::config::ModulusConfig;
use crate::descent::DescentData;
use crate::error::{Error, Result};
use crate::invariant::{EPoint, EllipticInvariant, InvariantEntry};
use crate::lattice::{parse_rational, ExactEigen, ExactResonance};
use crate::series::LaurentMatrix;
use crate::{CMatrix, Complex};

/// Largest tolerated difference between a document's `tau` and the
/// configured one.
const TAU_MATCH: f64 = 1e-12;

struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // Negative zero would otherwise break byte-for-byte determinism.
        let v = if value == 0.0 { 0.0 } else { value };
        write!(writer, "{v:.16e}")
    }
}

/// Compact serialization with fixed-precision floats.
pub fn to_string(v: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    serde::Serialize::serialize(v, &mut ser).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn complex_to_json(z: Complex) -> Value {
    json!([z.re, z.im])
}

fn complex_from_json(v: &Value) -> Result<Complex> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(Complex::new(re, im)),
            _ => Err(Error::Parse(format!("complex entries must be numbers: {v}"))),
        },
        _ => match v.as_f64() {
            Some(re) => Ok(Complex::new(re, 0.0)),
            None => Err(Error::Parse(format!("expected [re, im], got {v}"))),
        },
    }
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("matrix must be a list of rows".into()))?;
    if rows.is_empty() {
        return Err(Error::Parse("matrix has no rows".into()));
    }
    let mut data = Vec::new();
    let mut cols = None;
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse("matrix row must be a list".into()))?;
        if *cols.get_or_insert(row.len()) != row.len() {
            return Err(Error::Parse("matrix rows have different lengths".into()));
        }
        for z in row {
            data.push(complex_from_json(z)?);
        }
    }
    Ok(CMatrix::from_row_slice(rows.len(), cols.unwrap_or(0), &data))
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Parse(format!("missing field {key:?}")))
}

fn int_field(v: &Value, key: &str) -> Result<i64> {
    field(v, key)?
        .as_i64()
        .ok_or_else(|| Error::Parse(format!("field {key:?} must be an integer")))
}

fn float_field(v: &Value, key: &str) -> Result<f64> {
    field(v, key)?
        .as_f64()
        .ok_or_else(|| Error::Parse(format!("field {key:?} must be a number")))
}

fn tau_json(cfg: &ModulusConfig) -> Value {
    complex_to_json(cfg.tau())
}

/// Rejects documents produced under a different modulus.
pub fn check_tau(v: &Value, cfg: &ModulusConfig) -> Result<()> {
    if let Some(t) = v.get("tau") {
        let t = complex_from_json(t)?;
        if (t - cfg.tau()).norm() > TAU_MATCH {
            return Err(Error::InvalidConfig(format!(
                "document was written for tau = {}{:+}i but the configured tau is {}{:+}i",
                t.re,
                t.im,
                cfg.tau().re,
                cfg.tau().im
            )));
        }
    }
    Ok(())
}

fn with_tau(mut v: Value, cfg: &ModulusConfig) -> Value {
    if let Value::Object(map) = &mut v {
        let mut out = Map::new();
        out.insert("tau".into(), tau_json(cfg));
        out.append(map);
        return Value::Object(out);
    }
    v
}

fn loop_body(a: &LaurentMatrix) -> Value {
    let (lo, hi) = a.window();
    let terms: Vec<Value> = a
        .terms()
        .map(|(k, c)| json!({ "k": k, "matrix": matrix_to_json(c) }))
        .collect();
    let mut v = json!({ "n": a.rows(), "m_cov": a.m_cov(), "window": [lo, hi], "terms": terms });
    if !a.is_square() {
        v["cols"] = json!(a.cols());
    }
    v
}

pub fn loop_to_json(a: &LaurentMatrix, cfg: &ModulusConfig) -> Value {
    with_tau(loop_body(a), cfg)
}

pub fn loop_from_json(v: &Value, cfg: &ModulusConfig) -> Result<LaurentMatrix> {
    check_tau(v, cfg)?;
    let n = int_field(v, "n")?;
    let cols = v.get("cols").and_then(Value::as_i64).unwrap_or(n);
    let m_cov = v.get("m_cov").map_or(Ok(1), |_| int_field(v, "m_cov"))?;
    if n <= 0 || cols <= 0 || m_cov <= 0 {
        return Err(Error::Parse("n and m_cov must be positive".into()));
    }
    let window = match field(v, "window")?.as_array().map(|a| a.as_slice()) {
        Some([lo, hi]) => match (lo.as_i64(), hi.as_i64()) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(Error::Parse("window bounds must be integers".into())),
        },
        _ => return Err(Error::Parse("window must be [lo, hi]".into())),
    };
    let mut terms = Vec::new();
    for t in field(v, "terms")?
        .as_array()
        .ok_or_else(|| Error::Parse("terms must be a list".into()))?
    {
        terms.push((int_field(t, "k")?, matrix_from_json(field(t, "matrix")?)?));
    }
    LaurentMatrix::new(n as usize, cols as usize, m_cov as u32, window, terms)
}

fn point_json(p: &EPoint) -> Value {
    json!({ "t_tau": p.t_tau, "t_one": p.t_one })
}

pub fn invariant_to_json(inv: &EllipticInvariant, cfg: &ModulusConfig) -> Value {
    let entries: Vec<Value> = inv
        .entries()
        .iter()
        .map(|e| json!({ "t_tau": e.point.t_tau, "t_one": e.point.t_one, "size": e.size }))
        .collect();
    with_tau(
        json!({
            "rank": inv.rank(),
            "entries": entries,
            "determinant": point_json(&inv.determinant_point()),
        }),
        cfg,
    )
}

pub fn invariant_from_json(v: &Value, cfg: &ModulusConfig) -> Result<EllipticInvariant> {
    check_tau(v, cfg)?;
    let mut entries = Vec::new();
    for e in field(v, "entries")?
        .as_array()
        .ok_or_else(|| Error::Parse("entries must be a list".into()))?
    {
        let size = int_field(e, "size")?;
        if size <= 0 {
            return Err(Error::Parse("entry sizes must be positive".into()));
        }
        entries.push(InvariantEntry {
            point: EPoint::new(float_field(e, "t_tau")?, float_field(e, "t_one")?),
            size: size as usize,
        });
    }
    let inv = EllipticInvariant::new(entries)?;
    if let Some(rank) = v.get("rank") {
        if rank.as_u64() != Some(inv.rank() as u64) {
            return Err(Error::Parse(format!("rank {rank} does not match entry sizes ({})", inv.rank())));
        }
    }
    Ok(inv)
}

pub fn descent_to_json(dd: &DescentData, cfg: &ModulusConfig) -> Value {
    with_tau(
        json!({
            "m": dd.m,
            "phi": dd.phi,
            "basis": matrix_to_json(&dd.basis),
            "c": matrix_to_json(&dd.c),
            "theta_a": matrix_to_json(&dd.theta_a),
            "residuals": {
                "witness": dd.witness_residual,
                "theta_order": dd.theta_order_residual,
                "commutator": dd.commutator_residual,
            },
        }),
        cfg,
    )
}

pub fn aligned_to_json(af: &AlignedForm, conjugator: &LaurentMatrix, cfg: &ModulusConfig) -> Value {
    with_tau(
        json!({
            "a0": matrix_to_json(&af.a0),
            "K": af.k,
            "xs": af.xs.iter().map(matrix_to_json).collect::<Vec<_>>(),
            "weight_residual": af.weight_residual(cfg),
            "conjugator": loop_body(conjugator),
        }),
        cfg,
    )
}

fn rational_json(r: &num_rational::Rational64) -> Value {
    Value::String(if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    })
}

pub fn exact_eigens_from_json(v: &Value) -> Result<Vec<ExactEigen>> {
    let list = v
        .get("eigenvalues")
        .unwrap_or(v)
        .as_array()
        .ok_or_else(|| Error::Parse("expected a list of symbolic eigenvalues".into()))?;
    list.iter()
        .map(|e| {
            let rat = |key: &str| -> Result<num_rational::Rational64> {
                match field(e, key)? {
                    Value::String(s) => parse_rational(s),
                    Value::Number(n) if n.is_i64() => Ok(num_rational::Rational64::from_integer(n.as_i64().unwrap())),
                    other => Err(Error::Parse(format!("field {key:?} must be \"p/q\", got {other}"))),
                }
            };
            let tag = match e.get("tag") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(other) => return Err(Error::Parse(format!("tag must be a string or null, got {other}"))),
            };
            Ok(ExactEigen { r: rat("r")?, r1: rat("r1")?, tag })
        })
        .collect()
}

pub fn exact_resonance_to_json(er: &ExactResonance) -> Value {
    let basis = |b: &[Vec<num_bigint::BigInt>]| -> Value {
        Value::Array(
            b.iter()
                .map(|v| Value::Array(v.iter().map(|x| Value::String(x.to_string())).collect()))
                .collect(),
        )
    };
    json!({
        "m": er.m,
        "phi": er.phi,
        "r": er.r.iter().map(rational_json).collect::<Vec<_>>(),
        "tags": er.tags,
        "lattice_basis": basis(&er.split.l_basis),
        "complement_basis": basis(&er.split.complement_basis),
        "unimodular": er.split.is_unimodular(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, jordan_block};

    #[test]
    fn loop_round_trip() {
        let cfg = ModulusConfig::default();
        let a = LaurentMatrix::new(
            2,
            2,
            2,
            (-1, 5),
            vec![(-1, jordan_block(c(0.1, -0.3), 2)), (3, jordan_block(c(1.0 / 3.0, 2.0), 2))],
        )
        .unwrap();
        let text = to_string(&loop_to_json(&a, &cfg));
        let back = loop_from_json(&parse(&text).unwrap(), &cfg).unwrap();
        assert_eq!(a, back);
        assert_eq!(text, to_string(&loop_to_json(&back, &cfg)));
        assert!(text.contains("\"tau\":[2.9999999999999999e-1,1.1000000000000001e0]"), "{text}");
    }

    #[test]
    fn invariant_round_trip() {
        let cfg = ModulusConfig::default();
        let inv = EllipticInvariant::new(vec![
            InvariantEntry { point: EPoint::new(0.5, 0.0), size: 1 },
            InvariantEntry { point: EPoint::new(0.123456789, 0.987654321), size: 2 },
        ])
        .unwrap();
        let text = to_string(&invariant_to_json(&inv, &cfg));
        let back = invariant_from_json(&parse(&text).unwrap(), &cfg).unwrap();
        assert_eq!(inv, back);
    }

    #[test]
    fn tau_mismatch_is_rejected() {
        let cfg = ModulusConfig::default();
        let other = ModulusConfig::new(c(0.0, 2.0)).unwrap();
        let doc = loop_to_json(&LaurentMatrix::identity(1, 2), &other);
        assert!(matches!(loop_from_json(&doc, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn exact_input() {
        let v = parse(r#"[{"r":"1/2","r1":"0","tag":null},{"r":"0","r1":"1/3","tag":"a"}]"#).unwrap();
        let e = exact_eigens_from_json(&v).unwrap();
        assert_eq!(e[0].r, num_rational::Rational64::new(1, 2));
        assert_eq!(e[1].tag.as_deref(), Some("a"));
        assert!(exact_eigens_from_json(&parse(r#"[{"r":"x","r1":"0"}]"#).unwrap()).is_err());
    }

    #[test]
    fn malformed_documents() {
        let cfg = ModulusConfig::default();
        for doc in [
            r#"{"n":2,"window":[0,1],"terms":[{"k":0,"matrix":[[[1,0]]]}]}"#,
            r#"{"n":1,"window":[0,1],"terms":[{"k":4,"matrix":[[[1,0]]]}]}"#,
            r#"{"n":1,"window":[0],"terms":[]}"#,
        ] {
            assert!(loop_from_json(&parse(doc).unwrap(), &cfg).is_err(), "{doc}");
        }
    }
}
