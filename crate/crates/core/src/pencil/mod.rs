//! Pencil representation, equivalence transformations, Kronecker-block
//! synthesis, and file I/O.

pub mod blocks;
pub mod io;

pub use blocks::{synthesize, Block, BlockSpec, Synthesized};
pub use io::{
    load_matrix_market, load_pencil_json, load_pencil_matrix_market, save_matrix_market,
    save_pencil_json, MatrixMarketData,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{ensure_finite, promote, Entry, Field};
use crate::subspace::{sigma_max, svd_parts, Tolerance};

/// An operator pencil: a pair `(E, A)` of same-shaped matrices acting from
/// `U = K^n` to `W = K^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil<T: Entry> {
    e: DMatrix<T>,
    a: DMatrix<T>,
}

impl<T: Entry> Pencil<T> {
    pub fn new(e: DMatrix<T>, a: DMatrix<T>) -> Result<Self> {
        if e.shape() != a.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} x {}", e.nrows(), e.ncols()),
                got: format!("{} x {}", a.nrows(), a.ncols()),
                context: "pencil (E, A)",
            });
        }
        ensure_finite(&e, "E")?;
        ensure_finite(&a, "A")?;
        Ok(Pencil { e, a })
    }

    pub fn e(&self) -> &DMatrix<T> {
        &self.e
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    /// `(rows, cols)`, i.e. `(dim W, dim U)`.
    pub fn shape(&self) -> (usize, usize) {
        self.e.shape()
    }

    pub fn is_square(&self) -> bool {
        self.e.nrows() == self.e.ncols()
    }

    /// Zero-shaped pencils terminate reduction chains.
    pub fn is_zero_shaped(&self) -> bool {
        self.e.nrows() == 0 || self.e.ncols() == 0
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    /// Largest singular values of `E` and `A`: the scales that pin rank
    /// decisions along a reduction chain.
    pub fn scales(&self) -> (f64, f64) {
        (sigma_max(&self.e), sigma_max(&self.a))
    }

    pub fn to_complex(&self) -> Pencil<Complex64> {
        Pencil {
            e: promote(&self.e),
            a: promote(&self.a),
        }
    }
}

/// A pencil over either field, as loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum PencilData {
    Real(Pencil<f64>),
    Complex(Pencil<Complex64>),
}

impl PencilData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            PencilData::Real(p) => p.shape(),
            PencilData::Complex(p) => p.shape(),
        }
    }

    pub fn field(&self) -> Field {
        match self {
            PencilData::Real(_) => Field::Real,
            PencilData::Complex(_) => Field::Complex,
        }
    }

    pub fn to_complex(&self) -> Pencil<Complex64> {
        match self {
            PencilData::Real(p) => p.to_complex(),
            PencilData::Complex(p) => p.clone(),
        }
    }
}

/// Change of bases `(P, Q)` with both factors invertible: pencils `(E, A)`
/// and `(P E Q, P A Q)` are equivalent.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalencePair<T: Entry> {
    p: DMatrix<T>,
    q: DMatrix<T>,
    cond_p: f64,
    cond_q: f64,
}

impl<T: Entry> EquivalencePair<T> {
    pub fn new(p: DMatrix<T>, q: DMatrix<T>, tol: &Tolerance) -> Result<Self> {
        let cond_p = checked_condition(&p, "P", tol)?;
        let cond_q = checked_condition(&q, "Q", tol)?;
        Ok(EquivalencePair {
            p,
            q,
            cond_p,
            cond_q,
        })
    }

    pub fn identity(m: usize, n: usize) -> Self {
        EquivalencePair {
            p: DMatrix::identity(m, m),
            q: DMatrix::identity(n, n),
            cond_p: 1.0,
            cond_q: 1.0,
        }
    }

    pub fn p(&self) -> &DMatrix<T> {
        &self.p
    }

    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }

    pub fn condition_numbers(&self) -> (f64, f64) {
        (self.cond_p, self.cond_q)
    }
}

fn checked_condition<T: Entry>(m: &DMatrix<T>, which: &str, tol: &Tolerance) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square transform".into(),
            got: format!("{} x {}", m.nrows(), m.ncols()),
            context: "equivalence pair",
        });
    }
    if m.nrows() == 0 {
        return Ok(1.0);
    }
    let parts = svd_parts(m)?;
    let smax = parts.singular_values.first().copied().unwrap_or(0.0);
    let smin = parts.singular_values.last().copied().unwrap_or(0.0);
    if smin <= tol.threshold(smax, m.nrows(), m.ncols()) {
        return Err(Error::PreconditionFailed(format!(
            "{which} is singular at the tolerance (sigma_min = {smin:.3e})"
        )));
    }
    Ok(smax / smin)
}

/// `(P E Q, P A Q)`.
pub fn apply_equivalence<T: Entry>(p: &Pencil<T>, t: &EquivalencePair<T>) -> Result<Pencil<T>> {
    let (m, n) = p.shape();
    if t.p.nrows() != m || t.q.nrows() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("P {m} x {m}, Q {n} x {n}"),
            got: format!(
                "P {} x {}, Q {} x {}",
                t.p.nrows(),
                t.p.ncols(),
                t.q.nrows(),
                t.q.ncols()
            ),
            context: "apply_equivalence",
        });
    }
    Pencil::new(&t.p * p.e() * &t.q, &t.p * p.a() * &t.q)
}

/// Seeded random equivalence pair with singular values clipped to
/// `[0.1, 10]`, hence condition numbers at most 100.
pub fn random_equivalence<T: Entry>(m: usize, n: usize, seed: u64) -> EquivalencePair<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_well_conditioned::<T>(&mut rng, m);
    let q = random_well_conditioned::<T>(&mut rng, n);
    EquivalencePair::new(p, q, &Tolerance::default())
        .expect("clipped singular values are invertible")
}

fn random_well_conditioned<T: Entry>(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<T> {
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = random_matrix::<T>(rng, k, k);
    let svd = g.svd(true, true);
    let u = svd.u.expect("u");
    let v_t = svd.v_t.expect("v_t");
    let clipped = DMatrix::<T>::from_fn(k, k, |i, j| {
        if i == j {
            T::from_real(svd.singular_values[i].clamp(0.1, 10.0))
        } else {
            T::zero()
        }
    });
    u * clipped * v_t
}

pub(crate) fn random_matrix<T: Entry>(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re = rng.random_range(-1.0..1.0);
        match T::FIELD {
            Field::Real => T::from_re_im(re, 0.0).unwrap(),
            Field::Complex => T::from_re_im(re, rng.random_range(-1.0..1.0)).unwrap(),
        }
    })
}

/// Small hand pencils used throughout the test suites and documentation.
pub mod fixtures {
    use super::Pencil;
    use nalgebra::DMatrix;

    /// `E = [0]`, `A = [1]`: one purely algebraic variable.
    pub fn p1() -> Pencil<f64> {
        Pencil::new(
            DMatrix::from_row_slice(1, 1, &[0.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
        )
        .unwrap()
    }

    /// `E = I`, `A = diag(1, 2)`: an irreducible, plainly regular pencil.
    pub fn p2() -> Pencil<f64> {
        Pencil::new(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
        )
        .unwrap()
    }

    /// The nilpotent block `N(2)`: `E` the upper shift, `A = I`.
    pub fn p3() -> Pencil<f64> {
        Pencil::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::identity(2, 2),
        )
        .unwrap()
    }

    /// The singular block `L(1)`: `E = [1 0]`, `A = [0 1]`.
    pub fn p4() -> Pencil<f64> {
        Pencil::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        )
        .unwrap()
    }

    /// The transposed singular block `LT(1)`.
    pub fn p5() -> Pencil<f64> {
        Pencil::new(
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap()
    }

    /// All hand pencils with their conventional names.
    pub fn all() -> Vec<(&'static str, Pencil<f64>)> {
        vec![
            ("P1", p1()),
            ("P2", p2()),
            ("P3", p3()),
            ("P4", p4()),
            ("P5", p5()),
        ]
    }
}
