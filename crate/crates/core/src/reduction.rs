//! Observation and control reduction of a pencil, pivot operators,
//! irreducibility, normality diagnostics, and the control-index-one
//! predicates.
//!
//! Observation: restrict to `U*1 = A^{-1}(range E)` mapping into
//! `W*1 = range E`; the pivot `[A*1]` is the map `A` induces between the
//! quotients `U/U*1 -> W/W*1` (always injective). Control: quotient by
//! `ker E` and `A ker E`; the pivot `[A^1]` is the restriction of `A`
//! from `ker E` onto `A ker E` (always surjective onto its codomain).
//! Quotients are represented by orthogonal complements throughout.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pencil::Pencil;
use crate::scalar::Entry;
use crate::subspace::{
    induced_operator, intersect_basis, kernel_basis, matrix_in_bases, preimage_basis, range_basis,
    rank, sigma_max, sum_basis, svd_parts, Subspace, Tolerance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionKind {
    Observation,
    Control,
}

impl std::fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReductionKind::Observation => write!(f, "observation"),
            ReductionKind::Control => write!(f, "control"),
        }
    }
}

/// Shared rank thresholds for one reduction chain: every decision is
/// pinned to the scale of the original `E` and `A`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChainTol {
    pub e: Tolerance,
    pub a: Tolerance,
}

impl ChainTol {
    pub fn new<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Self {
        let (se, sa) = p.scales();
        let dim = p.shape().0.max(p.shape().1);
        ChainTol {
            e: tol.pinned(se, dim),
            a: tol.pinned(sa, dim),
        }
    }
}

/// One reduction step: the distinguished subspaces, their complements,
/// the reduced pencil in the representative bases, and the pivot verdict.
#[derive(Debug, Clone)]
pub struct ReductionStep<T: Entry> {
    pub kind: ReductionKind,
    pub parent_shape: (usize, usize),
    /// Observation: `U*1`. Control: `ker E`.
    pub dom_space: Subspace<T>,
    /// Observation: `W*1 = range E`. Control: `A ker E`.
    pub codom_space: Subspace<T>,
    pub dom_complement: Subspace<T>,
    pub codom_complement: Subspace<T>,
    pub reduced: Pencil<T>,
    pub pivot: DMatrix<T>,
    /// `+inf` for the empty pivot.
    pub pivot_sigma_min: f64,
    pub pivot_invertible: bool,
    /// Set when the pivot's sigma_min lies within a factor 10 of the rank
    /// threshold; the invertibility verdict is then numerically fragile.
    pub pivot_marginal: bool,
    /// Observation only: norm of the quotient that `E` induces between
    /// `U/U*1` and `W/W*1`, which vanishes in exact arithmetic.
    pub e_quotient_norm: f64,
}

impl<T: Entry> ReductionStep<T> {
    /// The spec's `dom_map`: embedding for observation, projection for
    /// control.
    pub fn dom_map(&self) -> DMatrix<T> {
        match self.kind {
            ReductionKind::Observation => self.dom_space.basis().clone(),
            ReductionKind::Control => self.dom_complement.basis().adjoint(),
        }
    }

    pub fn codom_map(&self) -> DMatrix<T> {
        match self.kind {
            ReductionKind::Observation => self.codom_space.basis().clone(),
            ReductionKind::Control => self.codom_complement.basis().adjoint(),
        }
    }

    /// Orthonormal representatives of the reduced domain / codomain inside
    /// the parent spaces. For observation these are `U*1`, `W*1`; for
    /// control the complements of `ker E`, `A ker E`. Chains compose by
    /// multiplying these embeddings.
    pub fn dom_representative(&self) -> &Subspace<T> {
        match self.kind {
            ReductionKind::Observation => &self.dom_space,
            ReductionKind::Control => &self.dom_complement,
        }
    }

    pub fn codom_representative(&self) -> &Subspace<T> {
        match self.kind {
            ReductionKind::Observation => &self.codom_space,
            ReductionKind::Control => &self.codom_complement,
        }
    }

    /// Dimension of the cokernel of the pivot at the numerical rank; for
    /// an observation step this is the defect `beta*`.
    pub fn pivot_coker_dim(&self, tol: &Tolerance) -> Result<usize> {
        Ok(self.pivot.nrows() - rank(&self.pivot, tol)?)
    }

    /// Dimension of the kernel of the pivot; for a control step this is
    /// the defect `beta^`.
    pub fn pivot_kernel_dim(&self, tol: &Tolerance) -> Result<usize> {
        Ok(self.pivot.ncols() - rank(&self.pivot, tol)?)
    }
}

fn pivot_verdict<T: Entry>(pivot: &DMatrix<T>, tol: &Tolerance) -> (f64, bool, bool) {
    let (rows, cols) = pivot.shape();
    if rows == 0 && cols == 0 {
        return (f64::INFINITY, true, false);
    }
    if rows == 0 || cols == 0 {
        return (0.0, false, false);
    }
    let parts = svd_parts(pivot).expect("finite pivot");
    let smin = parts.singular_values.last().copied().unwrap_or(0.0);
    let smax = parts.singular_values.first().copied().unwrap_or(0.0);
    let threshold = tol.threshold(smax, rows, cols);
    let invertible = rows == cols && smin > threshold;
    let marginal =
        rows == cols && threshold > 0.0 && smin > threshold / 10.0 && smin <= threshold * 10.0;
    (smin, invertible, marginal)
}

/// Observation reduction: `W*1 = range E`, `U*1 = A^{-1} W*1`, reduced
/// operators by restriction, pivot `[A*1]` on the quotients.
pub fn observation_reduce<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<ReductionStep<T>> {
    observation_reduce_with(p, &ChainTol::new(p, tol))
}

pub(crate) fn observation_reduce_with<T: Entry>(
    p: &Pencil<T>,
    ct: &ChainTol,
) -> Result<ReductionStep<T>> {
    let w1 = range_basis(p.e(), &ct.e)?;
    let u1 = preimage_basis(p.a(), &w1, &ct.a)?;
    let dom_complement = u1.complement();
    let codom_complement = w1.complement();

    let e_red = induced_operator(p.e(), &u1, &w1, &ct.e)?;
    let a_red = induced_operator(p.a(), &u1, &w1, &ct.a)?;
    let pivot = matrix_in_bases(p.a(), &dom_complement, &codom_complement);
    let e_quotient_norm = matrix_in_bases(p.e(), &dom_complement, &codom_complement).norm();

    let (pivot_sigma_min, pivot_invertible, pivot_marginal) = pivot_verdict(&pivot, &ct.a);
    Ok(ReductionStep {
        kind: ReductionKind::Observation,
        parent_shape: p.shape(),
        dom_space: u1,
        codom_space: w1,
        dom_complement,
        codom_complement,
        reduced: Pencil::new(e_red.matrix, a_red.matrix)?,
        pivot,
        pivot_sigma_min,
        pivot_invertible,
        pivot_marginal,
        e_quotient_norm,
    })
}

/// Control reduction: quotient by `ker E` and `A ker E`; the pivot
/// `[A^1]` restricts `A` from `ker E` onto `A ker E`.
pub fn control_reduce<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<ReductionStep<T>> {
    control_reduce_with(p, &ChainTol::new(p, tol))
}

pub(crate) fn control_reduce_with<T: Entry>(
    p: &Pencil<T>,
    ct: &ChainTol,
) -> Result<ReductionStep<T>> {
    let k = kernel_basis(p.e(), &ct.e)?;
    let ak = range_basis(&(p.a() * k.basis()), &ct.a)?;
    let dom_complement = k.complement();
    let codom_complement = ak.complement();

    let pivot = induced_operator(p.a(), &k, &ak, &ct.a)?.matrix;
    let e_red = matrix_in_bases(p.e(), &dom_complement, &codom_complement);
    let a_red = matrix_in_bases(p.a(), &dom_complement, &codom_complement);

    let (pivot_sigma_min, pivot_invertible, pivot_marginal) = pivot_verdict(&pivot, &ct.a);
    Ok(ReductionStep {
        kind: ReductionKind::Control,
        parent_shape: p.shape(),
        dom_space: k,
        codom_space: ak,
        dom_complement,
        codom_complement,
        reduced: Pencil::new(e_red, a_red)?,
        pivot,
        pivot_sigma_min,
        pivot_invertible,
        pivot_marginal,
        e_quotient_norm: 0.0,
    })
}

pub(crate) fn reduce_with<T: Entry>(
    p: &Pencil<T>,
    kind: ReductionKind,
    ct: &ChainTol,
) -> Result<ReductionStep<T>> {
    match kind {
        ReductionKind::Observation => observation_reduce_with(p, ct),
        ReductionKind::Control => control_reduce_with(p, ct),
    }
}

/// `E` injective with full range; zero-shaped pencils count as
/// irreducible (the empty operator is invertible).
pub fn is_irreducible<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> bool {
    let ct = ChainTol::new(p, tol);
    is_irreducible_with(p, &ct)
}

pub(crate) fn is_irreducible_with<T: Entry>(p: &Pencil<T>, ct: &ChainTol) -> bool {
    let (m, n) = p.shape();
    let r = rank(p.e(), &ct.e).expect("finite pencil");
    r == m && r == n
}

/// `range E = W`: no observation reduction is possible.
pub(crate) fn observation_irreducible_with<T: Entry>(p: &Pencil<T>, ct: &ChainTol) -> bool {
    rank(p.e(), &ct.e).expect("finite pencil") == p.shape().0
}

/// `ker E = 0`: no control reduction is possible.
pub(crate) fn control_irreducible_with<T: Entry>(p: &Pencil<T>, ct: &ChainTol) -> bool {
    rank(p.e(), &ct.e).expect("finite pencil") == p.shape().1
}

/// Apply reductions in policy order, stopping once the system is
/// irreducible. Degenerate shapes (`0 x n`, `m x 0`) are still reducible
/// until they reach `0 x 0`, whose empty operator is invertible. All rank
/// decisions share the tolerance pinned at the original pencil's scale.
pub fn reduce_chain<T: Entry>(
    p: &Pencil<T>,
    policy: &[ReductionKind],
    max_steps: usize,
    tol: &Tolerance,
) -> Result<Vec<ReductionStep<T>>> {
    let ct = ChainTol::new(p, tol);
    let mut steps: Vec<ReductionStep<T>> = Vec::new();
    let mut current = p.clone();
    for kind in policy.iter().take(max_steps) {
        if is_irreducible_with(&current, &ct) {
            break;
        }
        let step = reduce_with(&current, *kind, &ct)?;
        current = step.reduced.clone();
        steps.push(step);
    }
    Ok(steps)
}

/// Reduce until irreducible, observation steps first whenever possible.
/// Every pencil has a unique underlying irreducible system; reductions
/// leave it unchanged, so the policy order does not matter for the result
/// up to unitary equivalence.
pub fn irreducible_core<T: Entry>(
    p: &Pencil<T>,
    tol: &Tolerance,
) -> Result<(Pencil<T>, Vec<ReductionStep<T>>)> {
    let ct = ChainTol::new(p, tol);
    let mut current = p.clone();
    let mut steps = Vec::new();
    let cap = p.shape().0 + p.shape().1 + 2;
    for _ in 0..cap {
        if is_irreducible_with(&current, &ct) {
            return Ok((current, steps));
        }
        let kind = if !observation_irreducible_with(&current, &ct) {
            ReductionKind::Observation
        } else {
            ReductionKind::Control
        };
        let step = reduce_with(&current, kind, &ct)?;
        current = step.reduced.clone();
        steps.push(step);
    }
    Err(Error::Internal(
        "irreducible core not reached within the dimension bound".into(),
    ))
}

/// Compose the representative embeddings of a chain: returns orthonormal
/// bases of the final domain and codomain inside the original spaces.
pub fn chain_embeddings<T: Entry>(
    original: &Pencil<T>,
    steps: &[ReductionStep<T>],
) -> (Subspace<T>, Subspace<T>) {
    let (m, n) = original.shape();
    let mut dom = DMatrix::<T>::identity(n, n);
    let mut codom = DMatrix::<T>::identity(m, m);
    for step in steps {
        dom *= step.dom_representative().basis();
        codom *= step.codom_representative().basis();
    }
    (
        Subspace::from_columns_unchecked(dom),
        Subspace::from_columns_unchecked(codom),
    )
}

/// The two subspace identities behind normality, evaluated as gaps.
/// Both vanish (up to roundoff) for every finite-dimensional pencil.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormalityDiagnostics {
    /// Gap between `range E + A ker E` computed from the two summands and
    /// the range of the concatenated operator `[E, A K]`.
    pub sum_gap: f64,
    /// Gap between `A ker E*1` and `range E ∩ A ker E`.
    pub int_gap: f64,
    pub normal: bool,
}

pub fn normality_check<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<NormalityDiagnostics> {
    let ct = ChainTol::new(p, tol);
    let (m, n) = p.shape();
    let eu = range_basis(p.e(), &ct.e)?;
    let k = kernel_basis(p.e(), &ct.e)?;
    let ak_image = p.a() * k.basis();
    let ak = range_basis(&ak_image, &ct.a)?;

    let lhs_sum = sum_basis(&eu, &ak, &ct.a)?;
    let mut stacked = DMatrix::<T>::zeros(m, n + ak_image.ncols());
    stacked.columns_mut(0, n).copy_from(p.e());
    stacked
        .columns_mut(n, ak_image.ncols())
        .copy_from(&ak_image);
    let rhs_sum = range_basis(&stacked, &ct.a.pinned(sigma_max(p.e()), m.max(n)))?;
    let sum_gap = lhs_sum.gap(&rhs_sum);

    let direct_int = intersect_basis(&eu, &ak, &ct.a)?;
    let u1 = preimage_basis(p.a(), &eu, &ct.a)?;
    let e_restricted = induced_operator(p.e(), &u1, &eu, &ct.e)?.matrix;
    let ker_e1 = kernel_basis(&e_restricted, &ct.e)?;
    let ker_e1_embedded = u1.basis() * ker_e1.basis();
    let via_restriction = range_basis(&(p.a() * ker_e1_embedded), &ct.a)?;
    let int_gap = direct_int.gap(&via_restriction);

    let threshold = 10.0 * tol.rel * m.max(n).max(1) as f64;
    Ok(NormalityDiagnostics {
        sum_gap,
        int_gap,
        normal: sum_gap <= threshold && int_gap <= threshold,
    })
}

/// Verdict of the control-index-one test with the two criteria that were
/// evaluated: `range E ∩ A ker E = 0` and `E^1` injective.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ControlIndexOne {
    pub index_one: bool,
    pub intersection_dim: usize,
    pub e1_kernel_dim: usize,
}

/// A pencil has control index one when one control reduction produces a
/// control-irreducible system. Both equivalent criteria are computed and
/// must agree.
pub fn control_index_one<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<ControlIndexOne> {
    let ct = ChainTol::new(p, tol);
    let eu = range_basis(p.e(), &ct.e)?;
    let k = kernel_basis(p.e(), &ct.e)?;
    let ak = range_basis(&(p.a() * k.basis()), &ct.a)?;
    let intersection_dim = intersect_basis(&eu, &ak, &ct.a)?.dim();

    let step = control_reduce_with(p, &ct)?;
    let e1_kernel_dim = kernel_basis(step.reduced.e(), &ct.e)?.dim();

    if (intersection_dim == 0) != (e1_kernel_dim == 0) {
        return Err(Error::TolerancePathology(format!(
            "control-index-one criteria disagree: dim(range E ∩ A ker E) = {intersection_dim}, \
             dim ker E^1 = {e1_kernel_dim}"
        )));
    }
    Ok(ControlIndexOne {
        index_one: intersection_dim == 0,
        intersection_dim,
        e1_kernel_dim,
    })
}

/// Variational systems `E = D^H D` with coercive `A` have control index
/// one. Fails with a precondition error when `A` is not coercive (the
/// test is then skipped, not falsified).
pub fn variational_index_one_check<T: Entry>(
    d: &DMatrix<T>,
    a: &DMatrix<T>,
    tol: &Tolerance,
) -> Result<bool> {
    if a.nrows() != a.ncols() || d.ncols() != a.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("A square of size {0} x {0}", d.ncols()),
            got: format!("{} x {}", a.nrows(), a.ncols()),
            context: "variational_index_one_check",
        });
    }
    let n = a.nrows();
    if n > 0 {
        let sym = hermitian_part(a);
        let min_eig = eigenvalue_range_hermitian(&sym).0;
        let threshold = tol.threshold(sigma_max(a), n, n);
        if min_eig <= threshold {
            return Err(Error::PreconditionFailed(format!(
                "A is not coercive: min symmetric eigenvalue {min_eig:.3e} <= {threshold:.3e}"
            )));
        }
    }
    let e = d.adjoint() * d;
    let verdict = control_index_one(&Pencil::new(e, a.clone())?, tol)?;
    if !verdict.index_one {
        return Err(Error::TolerancePathology(
            "coercive variational system failed the control-index-one test".into(),
        ));
    }
    Ok(verdict.index_one)
}

/// Smallest `beta >= 0` with `sym(E^H A) <= beta * E^H E` as quadratic
/// forms, or `Infinite` when no finite constant works.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YagiBound {
    Finite(f64),
    Infinite,
}

/// The bound is computed as the largest generalized Rayleigh quotient of
/// `(sym(E^H A), E^H E)` over the orthogonal complement of `ker E`, then
/// verified globally; a finite value forces control index one, which is
/// cross-checked.
pub fn yagi_bound<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<YagiBound> {
    let (m, n) = p.shape();
    if m != n {
        return Err(Error::ShapeMismatch {
            expected: "square pencil".into(),
            got: format!("{m} x {n}"),
            context: "yagi_bound",
        });
    }
    let ct = ChainTol::new(p, tol);
    let (scale_e, scale_a) = p.scales();
    let sym = {
        let ea = p.e().adjoint() * p.a();
        hermitian_part_of(&ea)
    };
    let gram = p.e().adjoint() * p.e();

    let kernel = kernel_basis(p.e(), &ct.e)?;
    let complement = kernel.complement();
    let beta = if complement.dim() == 0 {
        0.0
    } else {
        let s_c = complement.basis().adjoint() * &sym * complement.basis();
        let g_c = complement.basis().adjoint() * &gram * complement.basis();
        let floor = {
            let t = ct.e.threshold(scale_e, n, n);
            t * t
        };
        let whitened = whiten(&hermitian_part_of(&s_c), &hermitian_part_of(&g_c), floor);
        eigenvalue_range_hermitian(&whitened).1.max(0.0)
    };

    // Global verification of sym(E^H A) <= beta * E^H E.
    let slack = &sym - &gram * T::from_real(beta);
    let scale = scale_e * scale_a + beta * scale_e * scale_e;
    let threshold = tol.threshold(scale, n, n);
    if n > 0 && eigenvalue_range_hermitian(&hermitian_part_of(&slack)).1 > threshold {
        return Ok(YagiBound::Infinite);
    }
    let index = control_index_one(p, tol)?;
    if !index.index_one {
        return Err(Error::TolerancePathology(
            "finite dissipation bound but control index one fails".into(),
        ));
    }
    Ok(YagiBound::Finite(beta))
}

pub(crate) fn hermitian_part<T: Entry>(m: &DMatrix<T>) -> DMatrix<T> {
    hermitian_part_of(m)
}

fn hermitian_part_of<T: Entry>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.adjoint()) * T::from_real(0.5)
}

/// `(min, max)` eigenvalues of a Hermitian matrix; `(0, 0)` for empty.
pub(crate) fn eigenvalue_range_hermitian<T: Entry>(m: &DMatrix<T>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = m.clone().symmetric_eigen();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

/// `G^{-1/2} S G^{-1/2}` for Hermitian `S` and Hermitian positive
/// semi-definite `G`, with eigenvalues of `G` floored to stay invertible.
fn whiten<T: Entry>(s: &DMatrix<T>, g: &DMatrix<T>, floor: f64) -> DMatrix<T> {
    let eig = g.clone().symmetric_eigen();
    let k = eig.eigenvalues.len();
    let inv_sqrt = DMatrix::<T>::from_fn(k, k, |i, j| {
        if i == j {
            T::from_real(1.0 / eig.eigenvalues[i].max(floor).sqrt())
        } else {
            T::zero()
        }
    });
    let q = &eig.eigenvectors;
    let g_inv_sqrt = q * inv_sqrt * q.adjoint();
    &g_inv_sqrt * s * &g_inv_sqrt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::fixtures;
    use crate::testing::{rmat, seeded};
    use nalgebra::DMatrix;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn observation_of_p2_is_identity_step() {
        let p = fixtures::p2();
        let step = observation_reduce(&p, &tol()).unwrap();
        assert!(step.dom_space.is_full());
        assert!(step.codom_space.is_full());
        assert_eq!(step.reduced, p);
        assert_eq!(step.pivot.shape(), (0, 0));
        assert!(step.pivot_invertible);
    }

    #[test]
    fn observation_of_p1_empties_the_system() {
        let step = observation_reduce(&fixtures::p1(), &tol()).unwrap();
        assert!(step.dom_space.is_zero());
        assert!(step.codom_space.is_zero());
        assert_eq!(step.reduced.shape(), (0, 0));
        assert_eq!(step.pivot.shape(), (1, 1));
        assert!((step.pivot[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(step.pivot_invertible);
    }

    #[test]
    fn observation_of_p3_matches_hand_reduction() {
        let step = observation_reduce(&fixtures::p3(), &tol()).unwrap();
        assert_eq!(step.dom_space.dim(), 1);
        assert_eq!(step.codom_space.dim(), 1);
        // U*1 = W*1 = span{e1}.
        assert!(step.dom_space.basis()[(0, 0)].abs() > 0.99);
        assert!(step.codom_space.basis()[(0, 0)].abs() > 0.99);
        // Reduced system is (0, 1) on one-dimensional spaces.
        assert!(step.reduced.e().norm() < 1e-14);
        assert!((step.reduced.a().norm() - 1.0).abs() < 1e-12);
        assert_eq!(step.pivot.shape(), (1, 1));
        assert!(step.pivot_invertible);
        assert!(step.e_quotient_norm < 1e-14);
    }

    #[test]
    fn control_of_invertible_e_is_identity_step() {
        let p = fixtures::p2();
        let step = control_reduce(&p, &tol()).unwrap();
        assert!(step.dom_space.is_zero());
        assert_eq!(step.reduced, p);
        assert!(step.pivot_invertible);
    }

    #[test]
    fn control_of_p4_matches_hand_reduction() {
        let step = control_reduce(&fixtures::p4(), &tol()).unwrap();
        // ker E = span{e2}, A ker E = the full 1-dim codomain.
        assert_eq!(step.dom_space.dim(), 1);
        assert!(step.dom_space.basis()[(1, 0)].abs() > 0.99);
        assert!(step.codom_space.is_full());
        assert_eq!(step.reduced.shape(), (0, 1));
        assert_eq!(step.pivot.shape(), (1, 1));
        assert!(step.pivot_invertible);
    }

    #[test]
    fn irreducibility_matches_prop_2_2() {
        assert!(is_irreducible(&fixtures::p2(), &tol()));
        assert!(!is_irreducible(&fixtures::p1(), &tol()));
        assert!(!is_irreducible(&fixtures::p4(), &tol()));
        assert!(!is_irreducible(&fixtures::p5(), &tol()));
        let empty = Pencil::new(DMatrix::<f64>::zeros(0, 0), DMatrix::zeros(0, 0)).unwrap();
        assert!(is_irreducible(&empty, &tol()));
    }

    #[test]
    fn chain_on_p3_terminates_in_two_steps() {
        let policy = [ReductionKind::Observation, ReductionKind::Observation];
        let steps = reduce_chain(&fixtures::p3(), &policy, 10, &tol()).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[1].reduced.shape(), (0, 0));
        assert!(steps.iter().all(|s| s.pivot_invertible));
    }

    #[test]
    fn chain_on_irreducible_pencil_is_empty() {
        let steps = reduce_chain(
            &fixtures::p2(),
            &[ReductionKind::Observation, ReductionKind::Control],
            10,
            &tol(),
        )
        .unwrap();
        assert!(steps.is_empty());
    }

    #[test]
    fn chain_on_p5_has_singular_second_pivot() {
        let policy = [ReductionKind::Observation, ReductionKind::Observation];
        let steps = reduce_chain(&fixtures::p5(), &policy, 10, &tol()).unwrap();
        assert_eq!(steps.len(), 2);
        assert!(steps[0].pivot_invertible);
        assert_eq!(steps[1].pivot.shape(), (1, 0));
        assert!(!steps[1].pivot_invertible);
        assert_eq!(steps[1].pivot_coker_dim(&tol()).unwrap(), 1);
    }

    #[test]
    fn chain_embeddings_reproduce_reduced_pencil() {
        let mut rng = seeded(17);
        for _ in 0..10 {
            let p = Pencil::new(rmat(&mut rng, 5, 4), rmat(&mut rng, 5, 4)).unwrap();
            let steps = reduce_chain(
                &p,
                &[
                    ReductionKind::Observation,
                    ReductionKind::Control,
                    ReductionKind::Observation,
                ],
                10,
                &tol(),
            )
            .unwrap();
            if steps.is_empty() {
                continue;
            }
            let (dom, codom) = chain_embeddings(&p, &steps);
            let final_pencil = &steps.last().unwrap().reduced;
            let e_again = codom.basis().adjoint() * p.e() * dom.basis();
            assert!((e_again - final_pencil.e()).norm() < 1e-10);
        }
    }

    #[test]
    fn finite_pencils_are_normal() {
        for (_, p) in fixtures::all() {
            let d = normality_check(&p, &tol()).unwrap();
            assert!(d.normal, "{d:?}");
            assert!(d.sum_gap <= 1e-12);
            assert!(d.int_gap <= 1e-12);
        }
        let mut rng = seeded(3);
        for _ in 0..20 {
            let p = Pencil::new(rmat(&mut rng, 6, 5), rmat(&mut rng, 6, 5)).unwrap();
            assert!(normality_check(&p, &tol()).unwrap().normal);
        }
    }

    #[test]
    fn control_index_one_examples() {
        let invertible = fixtures::p2();
        assert!(control_index_one(&invertible, &tol()).unwrap().index_one);
        // P3: range E and A ker E are both span{e1}.
        assert!(
            !control_index_one(&fixtures::p3(), &tol())
                .unwrap()
                .index_one
        );
    }

    #[test]
    fn variational_examples() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert!(variational_index_one_check(&id, &id, &tol()).unwrap());

        let d = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(variational_index_one_check(&d, &id, &tol()).unwrap());

        let zero = DMatrix::<f64>::zeros(2, 2);
        assert!(variational_index_one_check(&zero, &id, &tol()).unwrap());

        let non_coercive = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(
            variational_index_one_check(&id, &non_coercive, &tol()),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn yagi_examples() {
        let id2 = Pencil::new(DMatrix::<f64>::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        match yagi_bound(&id2, &tol()).unwrap() {
            YagiBound::Finite(b) => assert!((b - 1.0).abs() < 1e-10),
            _ => panic!("expected finite"),
        }

        let zero_e = Pencil::new(DMatrix::<f64>::zeros(2, 2), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(yagi_bound(&zero_e, &tol()).unwrap(), YagiBound::Finite(0.0));

        assert_eq!(
            yagi_bound(&fixtures::p3(), &tol()).unwrap(),
            YagiBound::Infinite
        );
    }

    #[test]
    fn yagi_infinite_agrees_with_rayleigh_sweep() {
        // Brute-force oracle: sample many directions and watch the ratio
        // Re<Eu, Au> / ||Eu||^2 blow up for P3.
        let p = fixtures::p3();
        let mut rng = seeded(9);
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let u = rmat(&mut rng, 2, 1);
            let eu = p.e() * &u;
            let au = p.a() * &u;
            let denom = eu.norm_squared();
            if denom > 1e-12 {
                worst = worst.max(eu.dot(&au) / denom);
            }
        }
        assert!(worst > 1e2);
    }
}
