//! Tolerance-controlled subspace primitives: ranges, kernels, preimages,
//! sums, intersections, orthogonal complements, and operators induced on
//! subspaces or quotients.
//!
//! Every subspace is stored as an orthonormal basis in its ambient space;
//! quotient spaces are represented by orthogonal complements. Rank
//! decisions go through one SVD with the threshold
//! `max(abs_floor, rel * sigma_max * max(rows, cols))`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{ensure_finite, Entry};

/// Relative rank threshold plus an absolute floor.
///
/// The floor is how a chain of reductions pins all rank decisions to the
/// scale of the *original* operators: derived matrices (restrictions,
/// quotients, pivots) inherit a floor of `rel * scale * dim` so that
/// entries which are roundoff relative to the parent do not resurrect
/// spurious rank.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs_floor: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-10,
            abs_floor: 0.0,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64) -> Self {
        assert!(rel > 0.0, "relative tolerance must be positive");
        Tolerance {
            rel,
            abs_floor: 0.0,
        }
    }

    /// Effective threshold for a matrix with the given extremal singular
    /// value and shape.
    pub fn threshold(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        let dim = rows.max(cols).max(1) as f64;
        self.abs_floor.max(self.rel * sigma_max * dim)
    }

    /// Derived tolerance whose floor is pinned at `rel * scale * dim`.
    /// Used inside reduction chains so every rank decision shares the
    /// scale of the parent pencil.
    pub fn pinned(&self, scale: f64, dim: usize) -> Tolerance {
        let floor = self.rel * scale * dim.max(1) as f64;
        Tolerance {
            rel: self.rel,
            abs_floor: self.abs_floor.max(floor),
        }
    }
}

/// A subspace of `R^n` (or `C^n`): ambient dimension plus an orthonormal
/// basis matrix of shape `ambient_dim x dim`. The zero subspace has a
/// basis with zero columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T: Entry> {
    ambient_dim: usize,
    basis: DMatrix<T>,
}

impl<T: Entry> Subspace<T> {
    /// Wrap a basis after checking orthonormality to `10 * eps * ambient_dim`.
    pub fn from_orthonormal(basis: DMatrix<T>) -> Result<Self> {
        let ambient_dim = basis.nrows();
        if basis.ncols() > ambient_dim {
            return Err(Error::ShapeMismatch {
                expected: format!("at most {ambient_dim} columns"),
                got: format!("{} columns", basis.ncols()),
                context: "subspace basis",
            });
        }
        let gram = basis.adjoint() * &basis;
        let dev = (&gram - DMatrix::<T>::identity(basis.ncols(), basis.ncols())).norm();
        let threshold = 10.0 * f64::EPSILON * ambient_dim.max(1) as f64;
        if dev > threshold {
            return Err(Error::NotOrthonormal {
                deviation: dev,
                threshold,
            });
        }
        Ok(Subspace { ambient_dim, basis })
    }

    /// Internal constructor for bases that are orthonormal by construction.
    /// Full subspaces snap to the identity basis so that reducing an
    /// irreducible pencil reproduces it bit-for-bit.
    pub(crate) fn from_columns_unchecked(basis: DMatrix<T>) -> Self {
        if basis.ncols() == basis.nrows() {
            return Subspace::full(basis.nrows());
        }
        Subspace {
            ambient_dim: basis.nrows(),
            basis,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// Orthogonal projector `B B^H` onto the subspace.
    pub fn projector(&self) -> DMatrix<T> {
        &self.basis * self.basis.adjoint()
    }

    /// Orthonormal basis of the orthogonal complement in the ambient space.
    ///
    /// Computed as the range of `I - B B^H`, whose singular values are
    /// exactly zeros and ones up to roundoff, so no tolerance parameter
    /// is needed.
    pub fn complement(&self) -> Subspace<T> {
        if self.is_zero() {
            return Subspace::full(self.ambient_dim);
        }
        if self.is_full() {
            return Subspace::zero(self.ambient_dim);
        }
        let residual_projector =
            DMatrix::<T>::identity(self.ambient_dim, self.ambient_dim) - self.projector();
        let parts = svd_parts(&residual_projector).expect("finite projector");
        let want = self.ambient_dim - self.dim();
        Subspace::from_columns_unchecked(parts.u.columns(0, want).into_owned())
    }

    /// Spectral norm of `(I - P_self) V` where `V` is the other basis:
    /// how far `other` sticks out of `self`.
    pub fn containment_residual(&self, other: &Subspace<T>) -> f64 {
        assert_eq!(self.ambient_dim, other.ambient_dim);
        if other.is_zero() {
            return 0.0;
        }
        let residual = other.basis() - &self.basis * (self.basis.adjoint() * other.basis());
        residual.norm()
    }

    /// Hausdorff-type gap `|| P_self - P_other ||_2` between two subspaces.
    pub fn gap(&self, other: &Subspace<T>) -> f64 {
        assert_eq!(self.ambient_dim, other.ambient_dim);
        let diff = self.projector() - other.projector();
        spectral_norm(&diff)
    }
}

pub(crate) use crate::svd::{sigma_max_of as sigma_max, svd_parts};

/// Spectral norm, zero for empty shapes.
pub fn spectral_norm<T: Entry>(m: &DMatrix<T>) -> f64 {
    sigma_max(m)
}

/// Numerical rank at the tolerance.
pub fn rank<T: Entry>(m: &DMatrix<T>, tol: &Tolerance) -> Result<usize> {
    let parts = svd_parts(m)?;
    Ok(rank_from_singular_values(
        &parts.singular_values,
        m.shape(),
        tol,
    ))
}

fn rank_from_singular_values(sv: &[f64], shape: (usize, usize), tol: &Tolerance) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    let threshold = tol.threshold(smax, shape.0, shape.1);
    sv.iter().filter(|s| **s > threshold).count()
}

/// Orthonormal basis of the column space of `M`.
pub fn range_basis<T: Entry>(m: &DMatrix<T>, tol: &Tolerance) -> Result<Subspace<T>> {
    ensure_finite(m, "range_basis input")?;
    let parts = svd_parts(m)?;
    let r = rank_from_singular_values(&parts.singular_values, m.shape(), tol);
    Ok(Subspace::from_columns_unchecked(
        parts.u.columns(0, r).into_owned(),
    ))
}

/// Orthonormal basis of `{ u : M u = 0 }` at the numerical rank.
///
/// The kernel is the orthogonal complement of the row space. Going
/// through the complement keeps the result orthonormal even when the
/// economy factors carry unnormalized directions for exactly-zero
/// singular values, and makes `dim kernel + dim range = cols` hold by
/// construction.
pub fn kernel_basis<T: Entry>(m: &DMatrix<T>, tol: &Tolerance) -> Result<Subspace<T>> {
    ensure_finite(m, "kernel_basis input")?;
    let parts = svd_parts(m)?;
    let r = rank_from_singular_values(&parts.singular_values, m.shape(), tol);
    let row_space = Subspace::from_columns_unchecked(parts.v_t.rows(0, r).adjoint());
    Ok(row_space.complement())
}

/// Orthonormal basis of `{ u : M u ∈ span(T) }`.
///
/// Computed as the kernel of `C^H M` where `C` spans the orthogonal
/// complement of `T`; this equals the kernel of the projected map
/// `(I - P_T) M` without forming the projector.
pub fn preimage_basis<T: Entry>(
    m: &DMatrix<T>,
    target: &Subspace<T>,
    tol: &Tolerance,
) -> Result<Subspace<T>> {
    ensure_finite(m, "preimage_basis input")?;
    if m.nrows() != target.ambient_dim() {
        return Err(Error::AmbientMismatch {
            left: m.nrows(),
            right: target.ambient_dim(),
        });
    }
    let complement = target.complement();
    let projected = complement.basis().adjoint() * m;
    kernel_basis(&projected, tol)
}

/// Orthonormal basis of `span(S) + span(T)`.
pub fn sum_basis<T: Entry>(
    s: &Subspace<T>,
    t: &Subspace<T>,
    tol: &Tolerance,
) -> Result<Subspace<T>> {
    Ok(sum_and_intersection(s, t, tol)?.0)
}

/// Orthonormal basis of `span(S) ∩ span(T)`.
///
/// The intersection dimension is taken from the same SVD that decides the
/// sum, so `dim S + dim T = dim sum + dim intersection` holds exactly on
/// the returned values.
pub fn intersect_basis<T: Entry>(
    s: &Subspace<T>,
    t: &Subspace<T>,
    tol: &Tolerance,
) -> Result<Subspace<T>> {
    Ok(sum_and_intersection(s, t, tol)?.1)
}

fn sum_and_intersection<T: Entry>(
    s: &Subspace<T>,
    t: &Subspace<T>,
    tol: &Tolerance,
) -> Result<(Subspace<T>, Subspace<T>)> {
    if s.ambient_dim() != t.ambient_dim() {
        return Err(Error::AmbientMismatch {
            left: s.ambient_dim(),
            right: t.ambient_dim(),
        });
    }
    let n = s.ambient_dim();
    let (ks, kt) = (s.dim(), t.dim());
    if ks == 0 || kt == 0 {
        let sum = if ks == 0 { t.clone() } else { s.clone() };
        return Ok((sum, Subspace::zero(n)));
    }
    // Stack [S, -T]; its column space is the sum, the S-part of its kernel
    // spans the intersection. Both rank decisions look at the same matrix,
    // so the dimension formula holds exactly.
    let mut stacked = DMatrix::zeros(n, ks + kt);
    stacked.columns_mut(0, ks).copy_from(s.basis());
    stacked.columns_mut(ks, kt).copy_from(&(-t.basis()));
    let sum = range_basis(&stacked, tol)?;
    let kern = kernel_basis(&stacked, tol)?;
    debug_assert_eq!(sum.dim() + kern.dim(), ks + kt);

    let inter_dim = kern.dim();
    if inter_dim == 0 {
        return Ok((sum, Subspace::zero(n)));
    }
    // Kernel coefficients [c; d] with S c = T d; the vectors S c span the
    // intersection and are linearly independent, so the first `inter_dim`
    // left singular vectors of S c recover an orthonormal basis without
    // another rank decision.
    let coeff_s = kern.basis().rows(0, ks).into_owned();
    let vectors = s.basis() * coeff_s;
    let vec_parts = svd_parts(&vectors)?;
    let basis = Subspace::from_columns_unchecked(vec_parts.u.columns(0, inter_dim).into_owned());
    Ok((sum, basis))
}

/// Orthogonal complement of `v` within `ambient`, i.e. the representative
/// of the quotient `ambient / v`.
pub fn quotient_basis<T: Entry>(
    ambient: &Subspace<T>,
    v: &Subspace<T>,
    tol: &Tolerance,
) -> Result<Subspace<T>> {
    if ambient.ambient_dim() != v.ambient_dim() {
        return Err(Error::AmbientMismatch {
            left: ambient.ambient_dim(),
            right: v.ambient_dim(),
        });
    }
    let residual = ambient.containment_residual(v);
    let threshold = tol.threshold(1.0, ambient.ambient_dim(), v.dim().max(1));
    if residual > threshold {
        return Err(Error::ContainmentViolation {
            residual,
            threshold,
        });
    }
    // Coordinates of v in the ambient basis, then complement there.
    let coords = Subspace::from_columns_unchecked(orthonormalize_coords(
        &(ambient.basis().adjoint() * v.basis()),
        v.dim(),
    ));
    let comp = coords.complement();
    Ok(Subspace::from_columns_unchecked(
        ambient.basis() * comp.basis(),
    ))
}

/// Re-orthonormalize coordinate columns that are orthonormal up to the
/// containment residual, keeping the column count fixed.
fn orthonormalize_coords<T: Entry>(coords: &DMatrix<T>, dim: usize) -> DMatrix<T> {
    if dim == 0 {
        return DMatrix::zeros(coords.nrows(), 0);
    }
    let parts = svd_parts(coords).expect("finite coordinates");
    parts.u.columns(0, dim).into_owned()
}

/// An operator expressed in orthonormal bases of a domain subspace and a
/// target (sub- or quotient-representative) space, with the
/// well-definedness residual `|| (I - P_target) M B_dom ||`.
#[derive(Debug, Clone)]
pub struct InducedOperator<T: Entry> {
    pub matrix: DMatrix<T>,
    pub residual: f64,
}

/// Matrix of the map induced by `M` from `span(dom)` into `span(target)`,
/// in the given bases. Fails when `M span(dom) ⊄ span(target)` at the
/// tolerance (the invariant-subspace hypothesis fails numerically).
pub fn induced_operator<T: Entry>(
    m: &DMatrix<T>,
    dom: &Subspace<T>,
    target: &Subspace<T>,
    tol: &Tolerance,
) -> Result<InducedOperator<T>> {
    ensure_finite(m, "induced_operator input")?;
    if m.ncols() != dom.ambient_dim() || m.nrows() != target.ambient_dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} x {}", target.ambient_dim(), dom.ambient_dim()),
            got: format!("{} x {}", m.nrows(), m.ncols()),
            context: "induced_operator",
        });
    }
    let image = m * dom.basis();
    let matrix = target.basis().adjoint() * &image;
    let residual = (&image - target.basis() * &matrix).norm();
    let threshold = tol.threshold(sigma_max(m), m.nrows(), m.ncols());
    if residual > threshold {
        return Err(Error::InvarianceViolation {
            residual,
            threshold,
        });
    }
    Ok(InducedOperator { matrix, residual })
}

/// Matrix of `M` between representative bases without the invariance
/// check. This is the right tool for quotient maps, where well-definedness
/// is a statement about the complementary subspaces, not about the
/// representatives.
pub fn matrix_in_bases<T: Entry>(
    m: &DMatrix<T>,
    dom: &Subspace<T>,
    codom: &Subspace<T>,
) -> DMatrix<T> {
    codom.basis().adjoint() * (m * dom.basis())
}
