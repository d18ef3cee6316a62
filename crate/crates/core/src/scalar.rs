//! Scalar abstraction over the real and complex fields.
//!
//! All numerics run in double precision. Real pencils stay real except
//! where the spectrum genuinely lives in `C`; promotion happens through
//! [`Entry::into_c64`].

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Field tag carried by pencils and their serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Real => write!(f, "real"),
            Field::Complex => write!(f, "complex"),
        }
    }
}

/// Matrix entry type: `f64` or `Complex64`, with `f64` real parts.
pub trait Entry: ComplexField<RealField = f64> + Copy + 'static {
    const FIELD: Field;

    fn from_re_im(re: f64, im: f64) -> Result<Self>;
    fn re_im(&self) -> (f64, f64);
    fn into_c64(self) -> Complex64;
    fn is_finite_entry(&self) -> bool;
}

impl Entry for f64 {
    const FIELD: Field = Field::Real;

    fn from_re_im(re: f64, im: f64) -> Result<Self> {
        if im != 0.0 {
            return Err(Error::Parse(format!(
                "complex entry [{re}, {im}] in a real matrix"
            )));
        }
        Ok(re)
    }

    fn re_im(&self) -> (f64, f64) {
        (*self, 0.0)
    }

    fn into_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    fn is_finite_entry(&self) -> bool {
        self.is_finite()
    }
}

impl Entry for Complex64 {
    const FIELD: Field = Field::Complex;

    fn from_re_im(re: f64, im: f64) -> Result<Self> {
        Ok(Complex64::new(re, im))
    }

    fn re_im(&self) -> (f64, f64) {
        (self.re, self.im)
    }

    fn into_c64(self) -> Complex64 {
        self
    }

    fn is_finite_entry(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Promote a matrix to complex entries.
pub fn promote<T: Entry>(m: &DMatrix<T>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].into_c64())
}

/// Eigenvalues of a square matrix, always reported over `C`. Real input
/// promotes to complex before the Schur iteration so conjugate pairs come
/// out exactly as computed, with no pairing heuristics.
pub fn eigenvalues_c64<T: Entry>(m: &DMatrix<T>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{} x {}", n, m.ncols()),
            context: "eigenvalues",
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mc = promote(m);
    let schur = mc
        .try_schur(f64::EPSILON, 200 * n.max(5))
        .ok_or_else(|| Error::Internal("Schur iteration did not converge".into()))?;
    let eigs = schur
        .eigenvalues()
        .ok_or_else(|| Error::Internal("complex Schur form was not triangular".into()))?;
    Ok(eigs.iter().copied().collect())
}

/// Check every entry for NaN/Inf.
pub fn ensure_finite<T: Entry>(m: &DMatrix<T>, what: &'static str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite_entry() {
                return Err(Error::NonFinite {
                    what,
                    row: i,
                    col: j,
                });
            }
        }
    }
    Ok(())
}
