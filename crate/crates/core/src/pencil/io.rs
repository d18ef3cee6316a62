//! Pencil file formats: the canonical JSON schema and Matrix Market
//! (array and coordinate variants, `E` and `A` as a pair of files).

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::canonical::{format_g17, to_canonical_string};
use crate::error::{Error, Result};
use crate::pencil::{Pencil, PencilData};
use crate::scalar::{promote, Entry, Field};

/// JSON schema: `{"schema_version":1,"m":..,"n":..,"field":"real"|"complex",
/// "E":[[..]],"A":[[..]]}` with row-major numbers, or `[re, im]` pairs in
/// the complex case.
pub fn load_pencil_json(path: &Path) -> Result<PencilData> {
    let text = fs::read_to_string(path)?;
    parse_pencil_json(&text)
}

pub fn parse_pencil_json(text: &str) -> Result<PencilData> {
    let v: Value = serde_json::from_str(text)?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse("pencil JSON must be an object".into()))?;
    let schema = obj
        .get("schema_version")
        .and_then(Value::as_u64)
        .unwrap_or(1);
    if schema != 1 {
        return Err(Error::Parse(format!("unsupported schema_version {schema}")));
    }
    let m = obj
        .get("m")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Parse("missing integer field `m`".into()))? as usize;
    let n = obj
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Parse("missing integer field `n`".into()))? as usize;
    let field = match obj.get("field").and_then(Value::as_str).unwrap_or("real") {
        "real" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(Error::Parse(format!("unknown field `{other}`"))),
    };
    let e = obj
        .get("E")
        .ok_or_else(|| Error::Parse("missing matrix `E`".into()))?;
    let a = obj
        .get("A")
        .ok_or_else(|| Error::Parse("missing matrix `A`".into()))?;
    match field {
        Field::Real => {
            let e = parse_matrix::<f64>(e, m, n, "E")?;
            let a = parse_matrix::<f64>(a, m, n, "A")?;
            Ok(PencilData::Real(Pencil::new(e, a)?))
        }
        Field::Complex => {
            let e = parse_matrix::<Complex64>(e, m, n, "E")?;
            let a = parse_matrix::<Complex64>(a, m, n, "A")?;
            Ok(PencilData::Complex(Pencil::new(e, a)?))
        }
    }
}

fn parse_matrix<T: Entry>(v: &Value, m: usize, n: usize, name: &str) -> Result<DMatrix<T>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("matrix `{name}` must be an array of rows")))?;
    if rows.len() != m {
        return Err(Error::ShapeMismatch {
            expected: format!("{m} rows"),
            got: format!("{} rows", rows.len()),
            context: "pencil JSON",
        });
    }
    let mut out = DMatrix::<T>::zeros(m, n);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("row {i} of `{name}` must be an array")))?;
        if row.len() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} columns"),
                got: format!("{} columns in row {i}", row.len()),
                context: "pencil JSON",
            });
        }
        for (j, cell) in row.iter().enumerate() {
            out[(i, j)] = parse_entry(cell)?;
        }
    }
    Ok(out)
}

fn parse_entry<T: Entry>(v: &Value) -> Result<T> {
    match v {
        Value::Number(x) => {
            let re = x
                .as_f64()
                .ok_or_else(|| Error::Parse("bad number".into()))?;
            T::from_re_im(re, 0.0)
        }
        Value::Array(pair) if pair.len() == 2 => {
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| Error::Parse("bad [re, im] pair".into()))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| Error::Parse("bad [re, im] pair".into()))?;
            T::from_re_im(re, im)
        }
        other => Err(Error::Parse(format!("bad matrix entry `{other}`"))),
    }
}

pub fn pencil_json_value(p: &PencilData) -> Value {
    let (m, n) = p.shape();
    let (e, a) = match p {
        PencilData::Real(p) => (matrix_value(p.e()), matrix_value(p.a())),
        PencilData::Complex(p) => (matrix_value(p.e()), matrix_value(p.a())),
    };
    json!({
        "schema_version": 1,
        "m": m,
        "n": n,
        "field": p.field().to_string(),
        "E": e,
        "A": a,
    })
}

pub(crate) fn matrix_value<T: Entry>(m: &DMatrix<T>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            let cells: Vec<Value> = (0..m.ncols())
                .map(|j| {
                    let (re, im) = m[(i, j)].re_im();
                    match T::FIELD {
                        Field::Real => json!(re),
                        Field::Complex => json!([re, im]),
                    }
                })
                .collect();
            Value::Array(cells)
        })
        .collect();
    Value::Array(rows)
}

pub fn save_pencil_json(p: &PencilData, path: &Path) -> Result<()> {
    let mut text = to_canonical_string(&pencil_json_value(p))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// A dense matrix read from a Matrix Market file.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixMarketData {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl MatrixMarketData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixMarketData::Real(m) => m.shape(),
            MatrixMarketData::Complex(m) => m.shape(),
        }
    }

    fn to_complex(&self) -> DMatrix<Complex64> {
        match self {
            MatrixMarketData::Real(m) => promote(m),
            MatrixMarketData::Complex(m) => m.clone(),
        }
    }
}

pub fn load_matrix_market(path: &Path) -> Result<MatrixMarketData> {
    let text = fs::read_to_string(path)?;
    parse_matrix_market(&text)
}

pub fn parse_matrix_market(text: &str) -> Result<MatrixMarketData> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_lowercase())
        .collect();
    if tokens.len() < 4 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse("not a Matrix Market header".into()));
    }
    let format = tokens[2].as_str();
    let field = tokens[3].as_str();
    let symmetry = tokens.get(4).map(String::as_str).unwrap_or("general");
    if !matches!(symmetry, "general" | "symmetric") {
        return Err(Error::Parse(format!("unsupported symmetry `{symmetry}`")));
    }
    let complex = match field {
        "real" | "integer" | "double" => false,
        "complex" => true,
        other => return Err(Error::Parse(format!("unsupported field `{other}`"))),
    };

    let mut data = lines.filter(|l| !l.trim_start().starts_with('%') && !l.trim().is_empty());
    let size_line = data
        .next()
        .ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad size `{t}`")))
        })
        .collect::<Result<_>>()?;

    match format {
        "array" => {
            if dims.len() != 2 {
                return Err(Error::Parse("array size line must be `m n`".into()));
            }
            let (m, n) = (dims[0], dims[1]);
            let mut values = Vec::with_capacity(m * n);
            for line in data {
                for _ in parse_values(line, complex, &mut values)? {}
            }
            if values.len() != m * n {
                return Err(Error::Parse(format!(
                    "expected {} array entries, found {}",
                    m * n,
                    values.len()
                )));
            }
            // Array format is column-major.
            let mut out = DMatrix::<Complex64>::zeros(m, n);
            for (idx, v) in values.into_iter().enumerate() {
                out[(idx % m.max(1), idx / m.max(1))] = v;
            }
            if symmetry == "symmetric" {
                return Err(Error::Parse(
                    "symmetric array Matrix Market is not supported".into(),
                ));
            }
            Ok(pack(out, complex))
        }
        "coordinate" => {
            if dims.len() != 3 {
                return Err(Error::Parse(
                    "coordinate size line must be `m n nnz`".into(),
                ));
            }
            let (m, n, nnz) = (dims[0], dims[1], dims[2]);
            let mut out = DMatrix::<Complex64>::zeros(m, n);
            let mut count = 0usize;
            for line in data {
                let mut toks = line.split_whitespace();
                let i: usize = toks
                    .next()
                    .ok_or_else(|| Error::Parse("short coordinate line".into()))?
                    .parse()
                    .map_err(|_| Error::Parse("bad row index".into()))?;
                let j: usize = toks
                    .next()
                    .ok_or_else(|| Error::Parse("short coordinate line".into()))?
                    .parse()
                    .map_err(|_| Error::Parse("bad column index".into()))?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(Error::Parse(format!("coordinate ({i}, {j}) out of range")));
                }
                let rest: Vec<&str> = toks.collect();
                let v = parse_value_tokens(&rest, complex)?;
                out[(i - 1, j - 1)] += v;
                if symmetry == "symmetric" && i != j {
                    out[(j - 1, i - 1)] += v;
                }
                count += 1;
            }
            if count != nnz {
                return Err(Error::Parse(format!(
                    "expected {nnz} entries, found {count}"
                )));
            }
            Ok(pack(out, complex))
        }
        other => Err(Error::Parse(format!("unsupported format `{other}`"))),
    }
}

fn parse_values<'a>(
    line: &'a str,
    complex: bool,
    out: &mut Vec<Complex64>,
) -> Result<std::iter::Empty<&'a str>> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if complex {
        if !toks.len().is_multiple_of(2) {
            return Err(Error::Parse("complex values come in re/im pairs".into()));
        }
        for pair in toks.chunks(2) {
            out.push(parse_value_tokens(pair, true)?);
        }
    } else {
        for t in toks {
            out.push(parse_value_tokens(&[t], false)?);
        }
    }
    Ok(std::iter::empty())
}

fn parse_value_tokens(toks: &[&str], complex: bool) -> Result<Complex64> {
    let bad = |t: &str| Error::Parse(format!("bad value `{t}`"));
    if complex {
        if toks.len() != 2 {
            return Err(Error::Parse("complex entry needs `re im`".into()));
        }
        let re: f64 = toks[0].parse().map_err(|_| bad(toks[0]))?;
        let im: f64 = toks[1].parse().map_err(|_| bad(toks[1]))?;
        Ok(Complex64::new(re, im))
    } else {
        if toks.len() != 1 {
            return Err(Error::Parse("real entry needs one value".into()));
        }
        let re: f64 = toks[0].parse().map_err(|_| bad(toks[0]))?;
        Ok(Complex64::new(re, 0.0))
    }
}

fn pack(m: DMatrix<Complex64>, complex: bool) -> MatrixMarketData {
    if complex {
        MatrixMarketData::Complex(m)
    } else {
        MatrixMarketData::Real(m.map(|z| z.re))
    }
}

/// Write a dense matrix in Matrix Market array format.
pub fn save_matrix_market<T: Entry>(m: &DMatrix<T>, path: &Path) -> Result<()> {
    let field = match T::FIELD {
        Field::Real => "real",
        Field::Complex => "complex",
    };
    let mut out = format!("%%MatrixMarket matrix array {field} general\n");
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let (re, im) = m[(i, j)].re_im();
            match T::FIELD {
                Field::Real => out.push_str(&format!("{}\n", format_g17(re))),
                Field::Complex => out.push_str(&format!("{} {}\n", format_g17(re), format_g17(im))),
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load a pencil from a pair of Matrix Market files, `E` first. Mixed
/// real/complex pairs promote to complex.
pub fn load_pencil_matrix_market(e_path: &Path, a_path: &Path) -> Result<PencilData> {
    let e = load_matrix_market(e_path)?;
    let a = load_matrix_market(a_path)?;
    if e.shape() != a.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", e.shape()),
            got: format!("{:?}", a.shape()),
            context: "matrix market pencil pair",
        });
    }
    match (e, a) {
        (MatrixMarketData::Real(e), MatrixMarketData::Real(a)) => {
            Ok(PencilData::Real(Pencil::new(e, a)?))
        }
        (e, a) => Ok(PencilData::Complex(Pencil::new(
            e.to_complex(),
            a.to_complex(),
        )?)),
    }
}
