//! JSON documents for operators, frames, subspaces and reports.
//!
//! Complex numbers are stored as `[re, im]` pairs. Numbers are written in
//! shortest round-trip form, so saving and loading reproduces every finite
//! value bit for bit.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{FrameError, Result};
use crate::frames::FrameSystem;
use crate::opcore::{CMatrix, CVector, Operator, Subspace, Tolerance, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Operator(Operator),
    Frame(FrameSystem),
    Subspace(Subspace),
    /// Free-form result object; always carries `"kind": "report"`.
    Report(Map<String, Value>),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Operator(_) => "operator",
            Document::Frame(_) => "frame",
            Document::Subspace(_) => "subspace",
            Document::Report(_) => "report",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Document::Operator(op) => operator_json(op),
            Document::Frame(f) => json!({
                "kind": "frame",
                "dim": f.dim(),
                "vectors": f.vectors().iter().map(vector_json).collect::<Vec<_>>(),
            }),
            Document::Subspace(w) => json!({
                "kind": "subspace",
                "ambient_dim": w.ambient_dim(),
                "basis": operator_json(w.basis()),
            }),
            Document::Report(map) => {
                let mut map = map.clone();
                map.insert("kind".into(), json!("report"));
                Value::Object(map)
            }
        }
    }

    /// Parses and validates a document. Subspace bases are checked for
    /// orthonormality with `tol`.
    pub fn from_json(value: &Value, tol: &Tolerance) -> Result<Document> {
        let obj = value
            .as_object()
            .ok_or_else(|| schema("document must be a JSON object"))?;
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| schema("missing string field \"kind\""))?;
        match kind {
            "operator" => Ok(Document::Operator(parse_operator(obj)?)),
            "frame" => {
                let dim = dimension(obj, "dim")?;
                let vectors = obj
                    .get("vectors")
                    .and_then(Value::as_array)
                    .ok_or_else(|| schema("frame needs an array \"vectors\""))?;
                if vectors.is_empty() {
                    return Err(schema("frame needs at least one vector"));
                }
                let vs = vectors
                    .iter()
                    .enumerate()
                    .map(|(j, v)| parse_vector(v, dim, &format!("vectors[{j}]")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Document::Frame(FrameSystem::new(dim, vs)?))
            }
            "subspace" => {
                let n = dimension(obj, "ambient_dim")?;
                let basis = obj
                    .get("basis")
                    .and_then(Value::as_object)
                    .ok_or_else(|| schema("subspace needs an operator object \"basis\""))?;
                let basis = parse_operator(basis)?;
                if basis.rows() != n {
                    return Err(schema(format!(
                        "basis has {} rows but ambient_dim is {n}",
                        basis.rows()
                    )));
                }
                Ok(Document::Subspace(Subspace::new(basis, tol)?))
            }
            "report" => Ok(Document::Report(obj.clone())),
            other => Err(schema(format!("unknown document kind \"{other}\""))),
        }
    }

    pub fn to_string_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("JSON values serialize");
        s.push('\n');
        s
    }

    pub fn parse(text: &str, tol: &Tolerance) -> Result<Document> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| schema(format!("malformed JSON: {e}")))?;
        Document::from_json(&value, tol)
    }

    pub fn load(path: &Path, tol: &Tolerance) -> Result<Document> {
        let text = fs::read_to_string(path)
            .map_err(|e| FrameError::invalid(format!("cannot read {}: {e}", path.display())))?;
        Document::parse(&text, tol)
            .map_err(|e| FrameError::invalid(format!("{}: {}", path.display(), strip(e))))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_string_pretty())
            .map_err(|e| FrameError::invalid(format!("cannot write {}: {e}", path.display())))
    }
}

fn strip(e: FrameError) -> String {
    match e {
        FrameError::InvalidInput(msg) => msg,
        other => other.to_string(),
    }
}

fn schema(msg: impl Into<String>) -> FrameError {
    FrameError::invalid(msg)
}

fn complex_json(z: &C64) -> Value {
    json!([z.re, z.im])
}

fn vector_json(v: &CVector) -> Value {
    Value::Array(v.iter().map(complex_json).collect())
}

fn operator_json(op: &Operator) -> Value {
    let m = op.matrix();
    let entries: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(&m[(i, j)])).collect()))
        .collect();
    json!({
        "kind": "operator",
        "rows": op.rows(),
        "cols": op.cols(),
        "entries": entries,
    })
}

fn dimension(obj: &Map<String, Value>, field: &str) -> Result<usize> {
    let v = obj
        .get(field)
        .and_then(Value::as_u64)
        .ok_or_else(|| schema(format!("\"{field}\" must be a nonnegative integer")))?;
    if v == 0 {
        return Err(schema(format!("\"{field}\" must be positive")));
    }
    usize::try_from(v).map_err(|_| schema(format!("\"{field}\" is too large")))
}

fn parse_complex(v: &Value, at: &str) -> Result<C64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(schema(format!(
                "{at}: entries of a complex pair must be numbers"
            ))),
        },
        _ => Err(schema(format!("{at}: complex numbers are [re, im] pairs"))),
    }
}

fn parse_vector(v: &Value, len: usize, at: &str) -> Result<CVector> {
    let items = v
        .as_array()
        .ok_or_else(|| schema(format!("{at}: expected an array")))?;
    if items.len() != len {
        return Err(schema(format!(
            "{at}: expected {len} entries, found {}",
            items.len()
        )));
    }
    let zs = items
        .iter()
        .enumerate()
        .map(|(i, z)| parse_complex(z, &format!("{at}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(zs))
}

fn parse_operator(obj: &Map<String, Value>) -> Result<Operator> {
    if let Some(kind) = obj.get("kind") {
        if kind.as_str() != Some("operator") {
            return Err(schema("expected an operator document"));
        }
    }
    let rows = dimension(obj, "rows")?;
    let cols = dimension(obj, "cols")?;
    let entries = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("operator needs an array \"entries\""))?;
    if entries.len() != rows {
        return Err(schema(format!(
            "expected {rows} rows of entries, found {}",
            entries.len()
        )));
    }
    let mut m = CMatrix::zeros(rows, cols);
    for (i, row) in entries.iter().enumerate() {
        let row = parse_vector(row, cols, &format!("entries[{i}]"))?;
        m.row_mut(i).copy_from(&row.transpose());
    }
    Operator::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::mercedes_benz;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn round_trip(d: &Document) -> Document {
        Document::parse(&d.to_string_pretty(), &tol()).unwrap()
    }

    #[test]
    fn identity_round_trips() {
        let d = Document::Operator(Operator::identity(2));
        assert_eq!(round_trip(&d), d);
    }

    #[test]
    fn mercedes_benz_round_trips_bit_exactly() {
        let f = mercedes_benz();
        let Document::Frame(g) = round_trip(&Document::Frame(f.clone())) else {
            panic!("kind changed")
        };
        for (a, b) in f.vectors().iter().zip(g.vectors()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn subspace_and_report_round_trip() {
        let w = Subspace::range_of(&Operator::real_diag(&[1.0, 0.0, 2.0]), &tol()).unwrap();
        let d = Document::Subspace(w);
        assert_eq!(round_trip(&d), d);
        let mut map = Map::new();
        map.insert("residual".into(), json!(1.5e-17));
        let r = round_trip(&Document::Report(map));
        assert_eq!(r.kind(), "report");
    }

    #[test]
    fn schema_violations() {
        let bad = [
            r#"{"kind":"frame","dim":0,"vectors":[[[1,0]]]}"#,
            r#"{"kind":"frame","dim":2,"vectors":[[[1,0]]]}"#,
            r#"{"kind":"frame","dim":1,"vectors":[]}"#,
            r#"{"kind":"operator","rows":1,"cols":1,"entries":[[[1]]]}"#,
            r#"{"kind":"operator","rows":2,"cols":1,"entries":[[[1,0]]]}"#,
            r#"{"kind":"subspace","ambient_dim":2,"basis":{"rows":2,"cols":1,"entries":[[[1,0]],[[1,0]]]}}"#,
            r#"{"kind":"matrix"}"#,
            r#"[1,2]"#,
            r#"{"kind":"operator""#,
        ];
        for text in bad {
            assert!(
                matches!(
                    Document::parse(text, &tol()),
                    Err(FrameError::InvalidInput(_))
                ),
                "accepted {text}"
            );
        }
    }
}
