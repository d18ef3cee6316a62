//! Generalized resolvent of a pencil, its invariance along reductions,
//! the restriction/quotient five-lemma predicates, linear solves through
//! reduction chains, and ODE extraction for regular pencils.
//!
//! A point `lambda` belongs to the resolvent set when `lambda E + A` is
//! invertible. Reduction steps with invertible pivots preserve the
//! resolvent set; a non-invertible pivot empties it. Eigenvalues are only
//! ever computed on the irreducible core, where `E` is invertible,
//! never on the raw singular pencil.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::defects::{core_eigenvalues, defect_profile_default, DefectProfile};
use crate::error::{Error, Result};
use crate::pencil::Pencil;
use crate::reduction::{
    is_irreducible_with, observation_irreducible_with, observation_reduce_with, reduce_with,
    ChainTol, ReductionKind, ReductionStep,
};
use crate::scalar::Entry;
use crate::subspace::{
    induced_operator, matrix_in_bases, rank, sigma_max, svd_parts, Subspace, Tolerance,
};

/// Membership verdict for one `lambda`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResolventSample {
    pub lambda: (f64, f64),
    pub sigma_min: f64,
    pub member: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Evaluate `sigma_min(lambda E + A)` against the scale-invariant
/// threshold `rel * (|lambda| ||E|| + ||A||) * n`.
pub fn resolvent_member<T: Entry>(
    p: &Pencil<T>,
    lambda: Complex64,
    tol: &Tolerance,
) -> ResolventSample {
    let (m, n) = p.shape();
    let pc = p.to_complex();
    let shifted = promote_shift(&pc, lambda);
    let smin = smallest_singular_value(&shifted);
    if m != n {
        return ResolventSample {
            lambda: (lambda.re, lambda.im),
            sigma_min: smin,
            member: false,
            reason: Some("non-square".into()),
        };
    }
    let (se, sa) = p.scales();
    let threshold = tol.threshold(lambda.norm() * se + sa, m, n);
    ResolventSample {
        lambda: (lambda.re, lambda.im),
        sigma_min: smin,
        member: smin > threshold,
        reason: None,
    }
}

fn promote_shift(p: &Pencil<Complex64>, lambda: Complex64) -> DMatrix<Complex64> {
    p.e() * lambda + p.a()
}

fn smallest_singular_value(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 && m.ncols() == 0 {
        return f64::INFINITY;
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    svd_parts(m)
        .map(|p| p.singular_values.last().copied().unwrap_or(0.0))
        .unwrap_or(0.0)
}

/// Resolvent invariance along one reduction step: with an invertible
/// pivot, membership agrees between parent and reduced system at every
/// sample; with a singular pivot the parent resolvent set is empty.
///
/// When the step sits deep inside a chain, pass a tolerance pinned at
/// the chain root (`Tolerance::pinned`) so that reduced systems made of
/// roundoff are not rescaled into spurious members.
pub fn resolvent_invariance_check<T: Entry>(
    p: &Pencil<T>,
    step: &ReductionStep<T>,
    lambdas: &[Complex64],
    tol: &Tolerance,
) -> bool {
    lambdas.iter().all(|&lambda| {
        let parent = resolvent_member(p, lambda, tol);
        if step.pivot_invertible {
            let child = resolvent_member(&step.reduced, lambda, tol);
            parent.member == child.member
        } else {
            !parent.member
        }
    })
}

/// Deterministic `lambda` samples: the origin plus points uniform on a
/// disk whose radius reflects the pencil's spectral scale.
pub fn sample_disk_lambdas<T: Entry>(
    p: &Pencil<T>,
    count: usize,
    seed: u64,
    tol: &Tolerance,
) -> Vec<Complex64> {
    let (se, sa) = p.scales();
    let (m, n) = p.shape();
    let smallest_positive = svd_parts(p.e())
        .map(|parts| {
            let threshold = tol.threshold(se, m, n);
            parts
                .singular_values
                .iter()
                .rev()
                .find(|s| **s > threshold)
                .copied()
                .unwrap_or(1.0)
        })
        .unwrap_or(1.0);
    let radius = (sa + 1.0) / smallest_positive.max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Complex64::new(0.0, 0.0)];
    while out.len() < count.max(1) {
        let r = radius * rng.random_range(0.0..1.0f64).sqrt();
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        out.push(Complex64::from_polar(r, theta));
    }
    out
}

/// Injectivity/surjectivity of an operator, its restriction, and its
/// quotient, with the six implications that tie them together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FiveLemmaReport {
    pub full_injective: bool,
    pub full_surjective: bool,
    pub restricted_injective: bool,
    pub restricted_surjective: bool,
    pub quotient_injective: bool,
    pub quotient_surjective: bool,
}

impl FiveLemmaReport {
    /// The six implications; each premise/conclusion pair must hold.
    pub fn implications(&self) -> [(&'static str, bool); 6] {
        let imp = |premise: bool, conclusion: bool| !premise || conclusion;
        [
            (
                "full injective => restricted injective",
                imp(self.full_injective, self.restricted_injective),
            ),
            (
                "full surjective => quotient surjective",
                imp(self.full_surjective, self.quotient_surjective),
            ),
            (
                "full surjective and quotient injective => restricted surjective",
                imp(
                    self.full_surjective && self.quotient_injective,
                    self.restricted_surjective,
                ),
            ),
            (
                "restricted surjective and full injective => quotient injective",
                imp(
                    self.restricted_surjective && self.full_injective,
                    self.quotient_injective,
                ),
            ),
            (
                "quotient surjective and restricted surjective => full surjective",
                imp(
                    self.quotient_surjective && self.restricted_surjective,
                    self.full_surjective,
                ),
            ),
            (
                "quotient injective and restricted injective => full injective",
                imp(
                    self.quotient_injective && self.restricted_injective,
                    self.full_injective,
                ),
            ),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.implications().iter().all(|(_, ok)| *ok)
    }
}

/// Rank-based five-lemma predicates for `S` with invariant pair
/// `S(span X') ⊂ span Y'`.
pub fn five_lemma_predicates<T: Entry>(
    s: &DMatrix<T>,
    xsub: &Subspace<T>,
    ysub: &Subspace<T>,
    tol: &Tolerance,
) -> Result<FiveLemmaReport> {
    let scale = sigma_max(s);
    let dim = s.nrows().max(s.ncols());
    let pinned = tol.pinned(scale, dim);

    let restricted = induced_operator(s, xsub, ysub, &pinned)?.matrix;
    let quotient = matrix_in_bases(s, &xsub.complement(), &ysub.complement());

    let verdicts = |m: &DMatrix<T>| -> Result<(bool, bool)> {
        let r = rank(m, &pinned)?;
        Ok((r == m.ncols(), r == m.nrows()))
    };
    let (full_injective, full_surjective) = verdicts(s)?;
    let (restricted_injective, restricted_surjective) = verdicts(&restricted)?;
    let (quotient_injective, quotient_surjective) = verdicts(&quotient)?;
    Ok(FiveLemmaReport {
        full_injective,
        full_surjective,
        restricted_injective,
        restricted_surjective,
        quotient_injective,
        quotient_surjective,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SolveVerdict {
    /// All pivots invertible: solved by elimination along the chain, and
    /// invertibility of `A` is equivalent to invertibility of the core.
    ReducedChain,
    /// Some pivot was singular, so the chain certificate is unavailable;
    /// the solution comes from a direct dense solve.
    FallbackDirect { warning: String },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveCertificate {
    pub verdict: SolveVerdict,
    pub pivot_sigma_min: Vec<f64>,
    pub chain: Vec<(ReductionKind, (usize, usize))>,
    pub residual: f64,
}

/// Solve `A u = f` by reducing the auxiliary pencil `(E_aux, A)` and
/// eliminating variables along the chain.
pub fn solve_linear<T: Entry>(
    a_op: &DMatrix<T>,
    f: &DVector<T>,
    e_aux: &DMatrix<T>,
    tol: &Tolerance,
) -> Result<(DVector<T>, SolveCertificate)> {
    let n = a_op.nrows();
    if a_op.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: "square A".into(),
            got: format!("{} x {}", a_op.nrows(), a_op.ncols()),
            context: "solve_linear",
        });
    }
    if e_aux.shape() != a_op.shape() || f.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("E {n} x {n}, f of length {n}"),
            got: format!("E {:?}, f of length {}", e_aux.shape(), f.len()),
            context: "solve_linear",
        });
    }
    let pencil = Pencil::new(e_aux.clone(), a_op.clone())?;
    let ct = ChainTol::new(&pencil, tol);

    let mut steps: Vec<ReductionStep<T>> = Vec::new();
    let mut pencils = vec![pencil.clone()];
    let mut current = pencil;
    let mut all_pivots_fine = true;
    for _ in 0..(2 * n + 2) {
        if is_irreducible_with(&current, &ct) {
            break;
        }
        let kind = if !observation_irreducible_with(&current, &ct) {
            ReductionKind::Observation
        } else {
            ReductionKind::Control
        };
        let step = reduce_with(&current, kind, &ct)?;
        if !step.pivot_invertible {
            all_pivots_fine = false;
        }
        current = step.reduced.clone();
        pencils.push(current.clone());
        steps.push(step);
    }

    let pivot_sigma_min: Vec<f64> = steps.iter().map(|s| s.pivot_sigma_min).collect();
    let chain: Vec<(ReductionKind, (usize, usize))> =
        steps.iter().map(|s| (s.kind, s.reduced.shape())).collect();

    if !all_pivots_fine {
        // The chain equivalence "A invertible <=> core invertible" is
        // unavailable; fall back to a direct dense solve.
        let u = dense_solve(a_op, f, tol)?;
        let residual = (a_op * &u - f).norm();
        return Ok((
            u,
            SolveCertificate {
                verdict: SolveVerdict::FallbackDirect {
                    warning: "a pivot along the chain is singular".into(),
                },
                pivot_sigma_min,
                chain,
                residual,
            },
        ));
    }

    let core = pencils.last().expect("at least the original pencil");
    let core_dim = core.shape().0;
    if core_dim > 0 {
        let smin = smallest_singular_of(core.a());
        let threshold = ct.a.threshold(sigma_max(core.a()), core_dim, core_dim);
        if smin <= threshold {
            return Err(Error::Singular(format!(
                "all pivots invertible but the core A is singular (sigma_min = {smin:.3e}); \
                 A itself is singular"
            )));
        }
    }

    let u = eliminate(&steps, &pencils, f.clone())?;
    let residual = (a_op * &u - f).norm();
    Ok((
        u,
        SolveCertificate {
            verdict: SolveVerdict::ReducedChain,
            pivot_sigma_min,
            chain,
            residual,
        },
    ))
}

fn dense_solve<T: Entry>(a: &DMatrix<T>, f: &DVector<T>, tol: &Tolerance) -> Result<DVector<T>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    let smin = smallest_singular_of(a);
    if smin <= tol.threshold(sigma_max(a), n, n) {
        return Err(Error::Singular(format!(
            "A is singular at the tolerance (sigma_min = {smin:.3e})"
        )));
    }
    a.clone()
        .lu()
        .solve(f)
        .ok_or_else(|| Error::Singular("dense LU solve failed".into()))
}

fn smallest_singular_of<T: Entry>(m: &DMatrix<T>) -> f64 {
    svd_parts(m)
        .map(|p| p.singular_values.last().copied().unwrap_or(f64::INFINITY))
        .unwrap_or(0.0)
}

/// Back-substitution along the chain. At an observation step the pivot
/// determines the component of `u` outside `U*1` from the constraint
/// equations; at a control step the reduced system determines the class
/// of `u` and the pivot recovers the `ker E` component.
fn eliminate<T: Entry>(
    steps: &[ReductionStep<T>],
    pencils: &[Pencil<T>],
    f: DVector<T>,
) -> Result<DVector<T>> {
    if steps.is_empty() {
        let core = &pencils[0];
        if core.shape().0 == 0 {
            return Ok(DVector::zeros(0));
        }
        return core
            .a()
            .clone()
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::Singular("core solve failed".into()));
    }
    let step = &steps[0];
    let parent = &pencils[0];
    match step.kind {
        ReductionKind::Observation => {
            let pivot_rhs = step.codom_complement.basis().adjoint() * &f;
            let y = solve_square(&step.pivot, &pivot_rhs)?;
            let outside = step.dom_complement.basis() * &y;
            let reduced_rhs = step.codom_space.basis().adjoint() * (&f - parent.a() * &outside);
            let x = eliminate(&steps[1..], &pencils[1..], reduced_rhs)?;
            Ok(step.dom_space.basis() * x + outside)
        }
        ReductionKind::Control => {
            let reduced_rhs = step.codom_complement.basis().adjoint() * &f;
            let z = eliminate(&steps[1..], &pencils[1..], reduced_rhs)?;
            let lifted = step.dom_complement.basis() * z;
            let pivot_rhs = step.codom_space.basis().adjoint() * (&f - parent.a() * &lifted);
            let w = solve_square(&step.pivot, &pivot_rhs)?;
            Ok(lifted + step.dom_space.basis() * w)
        }
    }
}

fn solve_square<T: Entry>(m: &DMatrix<T>, rhs: &DVector<T>) -> Result<DVector<T>> {
    if m.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::Singular("pivot solve failed".into()))
}

/// One layer of eliminated (purely algebraic) variables.
#[derive(Debug, Clone)]
pub struct ConstraintLayer<T: Entry> {
    /// The eliminated directions, embedded in the original domain.
    pub eliminated: Subspace<T>,
    /// Maps a forcing term on the original codomain to the eliminated
    /// component (in the basis of `eliminated`), for the stationary
    /// constraint at this layer.
    pub solve_map: DMatrix<T>,
}

/// The explicit ODE hidden inside a regular pencil.
#[derive(Debug, Clone)]
pub struct OdeExtract<T: Entry> {
    /// `-E_core^{-1} A_core` in the core bases.
    pub ode_matrix: DMatrix<T>,
    /// Embedding of the core state space into the original domain.
    pub state_embedding: DMatrix<T>,
    pub constraints: Vec<ConstraintLayer<T>>,
}

/// Iterate observation reductions until `E` is invertible. Refuses
/// pencils that are not regular, naming the first failing defect.
pub fn reduce_to_ode<T: Entry>(
    p: &Pencil<T>,
    tol: &Tolerance,
    max_steps: usize,
) -> Result<OdeExtract<T>> {
    let profile = defect_profile_default(p, tol)?;
    ensure_regular(p, &profile)?;

    let ct = ChainTol::new(p, tol);
    let (m, n) = p.shape();
    let mut current = p.clone();
    let mut dom_embed = DMatrix::<T>::identity(n, n);
    let mut codom_embed = DMatrix::<T>::identity(m, m);
    let mut constraints = Vec::new();
    let mut steps_taken = 0usize;
    while !is_irreducible_with(&current, &ct) {
        if steps_taken >= max_steps {
            return Err(Error::Internal(
                "regular pencil did not reach an invertible core within max_steps".into(),
            ));
        }
        let step = observation_reduce_with(&current, &ct)?;
        let eliminated = Subspace::from_columns_unchecked(&dom_embed * step.dom_complement.basis());
        let pivot_lu = step.pivot.clone().lu();
        let pivot_inv = pivot_lu
            .try_inverse()
            .ok_or_else(|| Error::Internal("invertible pivot failed to invert".into()))?;
        let solve_map = pivot_inv * step.codom_complement.basis().adjoint() * codom_embed.adjoint();
        constraints.push(ConstraintLayer {
            eliminated,
            solve_map,
        });

        dom_embed = &dom_embed * step.dom_space.basis();
        codom_embed = &codom_embed * step.codom_space.basis();
        current = step.reduced.clone();
        steps_taken += 1;
    }

    let core_dim = current.shape().0;
    let ode_matrix = if core_dim == 0 {
        DMatrix::zeros(0, 0)
    } else {
        let lu = current.e().clone().lu();
        -(lu.solve(current.a())
            .ok_or_else(|| Error::Internal("core E is singular despite regularity".into()))?)
    };
    Ok(OdeExtract {
        ode_matrix,
        state_embedding: dom_embed,
        constraints,
    })
}

fn ensure_regular<T: Entry>(p: &Pencil<T>, profile: &DefectProfile) -> Result<()> {
    if profile.regular {
        return Ok(());
    }
    let (m, n) = p.shape();
    if m != n {
        return Err(Error::NotRegular(format!(
            "pencil is not square ({m} x {n})"
        )));
    }
    if let Some(k) = profile.beta_obs.iter().position(|&b| b > 0) {
        return Err(Error::NotRegular(format!(
            "observation defect beta*_{} = {}",
            k + 1,
            profile.beta_obs[k]
        )));
    }
    if let Some(k) = profile.beta_ctrl.iter().position(|&b| b > 0) {
        return Err(Error::NotRegular(format!(
            "control defect beta^_{} = {}",
            k + 1,
            profile.beta_ctrl[k]
        )));
    }
    Err(Error::NotRegular("termination hit the step cap".into()))
}

/// Eigenvalues of the regular pencil: the spectrum of `-E_core^{-1} A_core`,
/// which is exactly the complement of the resolvent set.
pub fn core_spectrum<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<Vec<Complex64>> {
    let profile = defect_profile_default(p, tol)?;
    ensure_regular(p, &profile)?;
    core_eigenvalues(p, &profile, tol)
}
