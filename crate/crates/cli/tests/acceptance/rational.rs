//! Brute-force defect oracle in exact rational arithmetic.
//!
//! Completely independent of the floating-point implementation: plain
//! fractions, Gauss-Jordan elimination, non-orthogonal complements. Only
//! meant for tiny integer pencils, where it is exact by construction.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rat {
    num: i128,
    den: i128,
}

impl Rat {
    fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1) as i128;
        let sign = if den < 0 { -1 } else { 1 };
        Rat {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    fn int(n: i128) -> Self {
        Rat { num: n, den: 1 }
    }

    fn zero() -> Self {
        Rat::int(0)
    }

    fn one() -> Self {
        Rat::int(1)
    }

    fn is_zero(&self) -> bool {
        self.num == 0
    }

    fn add(self, o: Rat) -> Rat {
        Rat::new(
            self.num.checked_mul(o.den).unwrap() + o.num.checked_mul(self.den).unwrap(),
            self.den.checked_mul(o.den).unwrap(),
        )
    }

    fn sub(self, o: Rat) -> Rat {
        self.add(Rat {
            num: -o.num,
            den: o.den,
        })
    }

    fn mul(self, o: Rat) -> Rat {
        Rat::new(
            self.num.checked_mul(o.num).unwrap(),
            self.den.checked_mul(o.den).unwrap(),
        )
    }

    fn div(self, o: Rat) -> Rat {
        assert!(!o.is_zero(), "division by zero");
        Rat::new(
            self.num.checked_mul(o.den).unwrap(),
            self.den.checked_mul(o.num).unwrap(),
        )
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Exact dense matrix with explicit shape (so zero-row and zero-column
/// matrices keep their dimensions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMat {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl ExactMat {
    fn zeros(rows: usize, cols: usize) -> Self {
        ExactMat {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    fn identity(n: usize) -> Self {
        let mut m = ExactMat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Rat::one();
        }
        m
    }

    pub fn from_ints(rows: &[&[i128]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = ExactMat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                *m.at_mut(i, j) = Rat::int(x);
            }
        }
        m
    }

    fn at(&self, i: usize, j: usize) -> Rat {
        self.data[i * self.cols + j]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }

    fn mul(&self, other: &ExactMat) -> ExactMat {
        assert_eq!(self.cols, other.rows);
        let mut out = ExactMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Rat::zero();
                for k in 0..self.cols {
                    acc = acc.add(self.at(i, k).mul(other.at(k, j)));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    fn transpose(&self) -> ExactMat {
        let mut out = ExactMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j);
            }
        }
        out
    }

    fn hcat(&self, other: &ExactMat) -> ExactMat {
        assert_eq!(self.rows, other.rows);
        let mut out = ExactMat::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(i, j) = self.at(i, j);
            }
            for j in 0..other.cols {
                *out.at_mut(i, self.cols + j) = other.at(i, j);
            }
        }
        out
    }

    fn select_cols(&self, cols: &[usize]) -> ExactMat {
        let mut out = ExactMat::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                *out.at_mut(i, k) = self.at(i, j);
            }
        }
        out
    }

    fn rows_from(&self, start: usize) -> ExactMat {
        let mut out = ExactMat::zeros(self.rows - start, self.cols);
        for i in start..self.rows {
            for j in 0..self.cols {
                *out.at_mut(i - start, j) = self.at(i, j);
            }
        }
        out
    }
}

/// Gauss-Jordan elimination; returns the reduced matrix and pivot columns.
fn rref(m: &ExactMat) -> (ExactMat, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..a.cols {
        if row == a.rows {
            break;
        }
        let Some(p) = (row..a.rows).find(|&r| !a.at(r, col).is_zero()) else {
            continue;
        };
        for j in 0..a.cols {
            let tmp = a.at(row, j);
            *a.at_mut(row, j) = a.at(p, j);
            *a.at_mut(p, j) = tmp;
        }
        let inv = Rat::one().div(a.at(row, col));
        for j in 0..a.cols {
            *a.at_mut(row, j) = a.at(row, j).mul(inv);
        }
        for r in 0..a.rows {
            if r != row && !a.at(r, col).is_zero() {
                let factor = a.at(r, col);
                for j in 0..a.cols {
                    let v = a.at(r, j).sub(factor.mul(a.at(row, j)));
                    *a.at_mut(r, j) = v;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (a, pivots)
}

pub fn rank(m: &ExactMat) -> usize {
    rref(m).1.len()
}

/// Kernel basis as columns (cols x nullity).
pub fn kernel(m: &ExactMat) -> ExactMat {
    let (r, pivots) = rref(m);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = ExactMat::zeros(m.cols, free.len());
    for (k, &f) in free.iter().enumerate() {
        *basis.at_mut(f, k) = Rat::one();
        for (row, &p) in pivots.iter().enumerate() {
            *basis.at_mut(p, k) = Rat::zero().sub(r.at(row, f));
        }
    }
    basis
}

/// Pivot columns of the original matrix: a basis of the column space.
pub fn colspace(m: &ExactMat) -> ExactMat {
    let (_, pivots) = rref(m);
    m.select_cols(&pivots)
}

/// Rows annihilating the column span of `basis`.
fn left_annihilator(basis: &ExactMat) -> ExactMat {
    kernel(&basis.transpose()).transpose()
}

/// Solve `basis * x = y` where `basis` has full column rank and `y` lies
/// in its span.
fn coords_in(basis: &ExactMat, y: &ExactMat) -> ExactMat {
    let k = basis.cols;
    if k == 0 {
        return ExactMat::zeros(0, y.cols);
    }
    let (r, pivots) = rref(&basis.hcat(y));
    assert_eq!(pivots.len(), k, "basis does not have full column rank");
    assert!(
        pivots.iter().all(|&p| p < k),
        "target sticks out of the span"
    );
    let mut out = ExactMat::zeros(k, y.cols);
    for i in 0..k {
        for j in 0..y.cols {
            *out.at_mut(i, j) = r.at(i, k + j);
        }
    }
    out
}

/// Unit vectors extending the (independent) columns of `basis` to a basis
/// of the whole space.
fn complete_basis(basis: &ExactMat, dim: usize) -> ExactMat {
    let combined = basis.hcat(&ExactMat::identity(dim));
    let (_, pivots) = rref(&combined);
    let added: Vec<usize> = pivots.into_iter().filter(|&p| p >= basis.cols).collect();
    combined.select_cols(&added)
}

#[derive(Debug, Clone)]
pub struct ExactPencil {
    pub e: ExactMat,
    pub a: ExactMat,
}

impl ExactPencil {
    pub fn from_ints(e: &[&[i128]], a: &[&[i128]]) -> Self {
        let e = ExactMat::from_ints(e);
        let a = ExactMat::from_ints(a);
        assert_eq!((e.rows, e.cols), (a.rows, a.cols));
        ExactPencil { e, a }
    }

    fn shape(&self) -> (usize, usize) {
        (self.e.rows, self.e.cols)
    }
}

pub struct ObservationOutcome {
    pub reduced: ExactPencil,
    pub alpha: usize,
    pub beta_obs: usize,
}

pub fn observation_step(p: &ExactPencil) -> ObservationOutcome {
    let (m, n) = p.shape();
    let w1 = colspace(&p.e);
    let b = w1.cols;
    let annihilator = left_annihilator(&w1);
    let quotient_a = annihilator.mul(&p.a);
    let u1 = kernel(&quotient_a);
    let a_dim = u1.cols;

    let e_image = p.e.mul(&u1);
    let a_image = p.a.mul(&u1);
    let reduced = ExactPencil {
        e: coords_in(&w1, &e_image),
        a: coords_in(&w1, &a_image),
    };

    let beta_obs = (m - b) - rank(&quotient_a);
    // [E]: U/U*1 -> W*1/E(U*1) is onto, so its kernel dimension is the
    // difference of the two quotient dimensions.
    let b2 = rank(&e_image);
    let alpha = (n - a_dim) - (b - b2);
    let ker_e = kernel(&p.e).cols;
    let ker_e1 = kernel(&reduced.e).cols;
    assert_eq!(
        alpha,
        ker_e - ker_e1.min(ker_e),
        "exact alpha routes disagree"
    );
    ObservationOutcome {
        reduced,
        alpha,
        beta_obs,
    }
}

pub struct ControlOutcome {
    pub reduced: ExactPencil,
    pub beta_ctrl: usize,
}

pub fn control_step(p: &ExactPencil) -> ControlOutcome {
    let (m, n) = p.shape();
    let k = kernel(&p.e);
    let ak_image = p.a.mul(&k);
    let ak = colspace(&ak_image);
    let d = ak.cols;
    let beta_ctrl = k.cols - rank(&ak_image);

    let c = complete_basis(&k, n);
    let dd = complete_basis(&ak, m);
    let full = ak.hcat(&dd);
    let project = |image: &ExactMat| coords_in(&full, image).rows_from(d);
    let reduced = ExactPencil {
        e: project(&p.e.mul(&c)),
        a: project(&p.a.mul(&c)),
    };
    ControlOutcome { reduced, beta_ctrl }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactProfile {
    pub alpha: Vec<usize>,
    pub beta_obs: Vec<usize>,
    pub beta_ctrl: Vec<usize>,
    pub regular: bool,
}

/// Iterate both reductions exactly, recording defects until each chain is
/// irreducible in its own sense.
pub fn exact_profile(p: &ExactPencil) -> ExactProfile {
    let mut alpha = Vec::new();
    let mut beta_obs = Vec::new();
    let mut sys = p.clone();
    while rank(&sys.e) != sys.e.rows {
        let step = observation_step(&sys);
        alpha.push(step.alpha);
        beta_obs.push(step.beta_obs);
        sys = step.reduced;
    }
    let mut beta_ctrl = Vec::new();
    let mut sys = p.clone();
    while rank(&sys.e) != sys.e.cols {
        let step = control_step(&sys);
        beta_ctrl.push(step.beta_ctrl);
        sys = step.reduced;
    }
    let (m, n) = p.shape();
    let regular = m == n && beta_obs.iter().all(|&b| b == 0) && beta_ctrl.iter().all(|&b| b == 0);
    ExactProfile {
        alpha,
        beta_obs,
        beta_ctrl,
        regular,
    }
}
