//! Defect sequences of a pencil: the constraint defects `alpha_k`, the
//! observation defects `beta*_k` (cokernels of observation pivots) and
//! the control defects `beta^_k` (kernels of control pivots), together
//! with their shift laws under reduction and the regularity verdict.
//!
//! The sequences are reported up to the point where the respective
//! reduction becomes impossible; the conceptual tails are zero, so the
//! truncation is lossless.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pencil::Pencil;
use crate::reduction::{
    control_irreducible_with, control_reduce_with, irreducible_core, observation_irreducible_with,
    observation_reduce_with, ChainTol, ReductionStep,
};
use crate::scalar::{eigenvalues_c64, Entry};
use crate::subspace::{
    kernel_basis, matrix_in_bases, quotient_basis, range_basis, rank, sigma_max, Tolerance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Both chains reached irreducibility.
    Exhausted,
    /// The step cap was hit first (cannot happen with the default cap).
    MaxSteps,
}

/// The integer invariants of a pencil, plus bookkeeping about how they
/// were obtained.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DefectProfile {
    pub alpha: Vec<usize>,
    pub beta_obs: Vec<usize>,
    pub beta_ctrl: Vec<usize>,
    pub steps_obs: usize,
    pub steps_ctrl: usize,
    /// Square pencil with every beta defect zero.
    pub regular: bool,
    pub termination: Termination,
    /// Chain positions whose pivot verdict was numerically fragile.
    pub marginal: Vec<String>,
}

impl DefectProfile {
    /// Sequences padded with their (conceptually infinite) zero tails.
    pub fn alpha_at(&self, k: usize) -> usize {
        self.alpha.get(k).copied().unwrap_or(0)
    }

    pub fn beta_obs_at(&self, k: usize) -> usize {
        self.beta_obs.get(k).copied().unwrap_or(0)
    }

    pub fn beta_ctrl_at(&self, k: usize) -> usize {
        self.beta_ctrl.get(k).copied().unwrap_or(0)
    }
}

pub fn default_max_steps(shape: (usize, usize)) -> usize {
    shape.0.min(shape.1) + 1
}

/// `alpha_1 = dim ker [E]` where `[E]` maps `U/U*1` onto `W*1 / E(U*1)`,
/// cross-checked against `dim ker E - dim ker E*1`.
pub fn alpha_defect<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<usize> {
    let ct = ChainTol::new(p, tol);
    let step = observation_reduce_with(p, &ct)?;
    alpha_from_step(p, &step, &ct)
}

fn alpha_from_step<T: Entry>(
    p: &Pencil<T>,
    step: &ReductionStep<T>,
    ct: &ChainTol,
) -> Result<usize> {
    // W*2 = E(U*1) inside W*1, and [E]: U/U*1 -> W*1/W*2.
    let w2 = range_basis(&(p.e() * step.dom_space.basis()), &ct.e)?;
    let quot_rep = quotient_basis(&step.codom_space, &w2, &ct.e)?;
    let bracket_e = matrix_in_bases(p.e(), &step.dom_complement, &quot_rep);
    let alpha = step.dom_complement.dim() - rank(&bracket_e, &ct.e)?;

    let ker_e = kernel_basis(p.e(), &ct.e)?.dim();
    let ker_e1 = kernel_basis(step.reduced.e(), &ct.e)?.dim();
    let check = ker_e - ker_e1.min(ker_e);
    if alpha != check {
        return Err(Error::TolerancePathology(format!(
            "alpha via [E] gives {alpha}, kernel identity gives {check}"
        )));
    }
    Ok(alpha)
}

/// `beta*_1 = dim coker [A*1]`.
pub fn beta_obs_defect<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<usize> {
    let ct = ChainTol::new(p, tol);
    let step = observation_reduce_with(p, &ct)?;
    step.pivot_coker_dim(&ct.a)
}

/// `beta^_1 = dim ker [A^1]`.
pub fn beta_ctrl_defect<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<usize> {
    let ct = ChainTol::new(p, tol);
    let step = control_reduce_with(p, &ct)?;
    step.pivot_kernel_dim(&ct.a)
}

/// Full defect profile: `alpha` and `beta*` along the observation chain,
/// `beta^` along the control chain, each stopped at irreducibility in the
/// respective sense.
pub fn defect_profile<T: Entry>(
    p: &Pencil<T>,
    tol: &Tolerance,
    max_steps: usize,
) -> Result<DefectProfile> {
    defect_profile_with(p, &ChainTol::new(p, tol), max_steps)
}

/// Profile under an externally pinned chain tolerance. Needed whenever the
/// pencil is itself a reduced system: entries that are roundoff relative
/// to the parent must not be resurrected by rescaling to the child.
pub(crate) fn defect_profile_with<T: Entry>(
    p: &Pencil<T>,
    chain_tol: &ChainTol,
    max_steps: usize,
) -> Result<DefectProfile> {
    let ct = *chain_tol;
    let mut alpha = Vec::new();
    let mut beta_obs = Vec::new();
    let mut beta_ctrl = Vec::new();
    let mut marginal = Vec::new();
    let mut termination = Termination::Exhausted;

    let mut sys = p.clone();
    let mut steps_obs = 0usize;
    while !observation_irreducible_with(&sys, &ct) {
        if steps_obs >= max_steps {
            termination = Termination::MaxSteps;
            break;
        }
        let step = observation_reduce_with(&sys, &ct)?;
        alpha.push(alpha_from_step(&sys, &step, &ct)?);
        beta_obs.push(step.pivot_coker_dim(&ct.a)?);
        if step.pivot_marginal {
            marginal.push(format!("observation step {}", steps_obs + 1));
        }
        sys = step.reduced;
        steps_obs += 1;
    }

    let mut sys = p.clone();
    let mut steps_ctrl = 0usize;
    while !control_irreducible_with(&sys, &ct) {
        if steps_ctrl >= max_steps {
            termination = Termination::MaxSteps;
            break;
        }
        let step = control_reduce_with(&sys, &ct)?;
        beta_ctrl.push(step.pivot_kernel_dim(&ct.a)?);
        if step.pivot_marginal {
            marginal.push(format!("control step {}", steps_ctrl + 1));
        }
        sys = step.reduced;
        steps_ctrl += 1;
    }

    let square = p.shape().0 == p.shape().1;
    let regular = square
        && termination == Termination::Exhausted
        && beta_obs.iter().all(|&b| b == 0)
        && beta_ctrl.iter().all(|&b| b == 0);
    Ok(DefectProfile {
        alpha,
        beta_obs,
        beta_ctrl,
        steps_obs,
        steps_ctrl,
        regular,
        termination,
        marginal,
    })
}

pub fn defect_profile_default<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<DefectProfile> {
    defect_profile(p, tol, default_max_steps(p.shape()))
}

fn padded_eq(a: &[usize], b: &[usize]) -> bool {
    let len = a.len().max(b.len());
    (0..len).all(|k| a.get(k).copied().unwrap_or(0) == b.get(k).copied().unwrap_or(0))
}

fn shifted_eq(original: &[usize], reduced: &[usize]) -> bool {
    let len = original.len().max(reduced.len() + 1);
    (0..len)
        .all(|k| original.get(k + 1).copied().unwrap_or(0) == reduced.get(k).copied().unwrap_or(0))
}

/// Shift laws: the observation reduction drops the leading entry of
/// `alpha` and `beta*` and preserves `beta^`; the control reduction drops
/// `alpha` and `beta^` and preserves `beta*`.
///
/// The reduced systems are profiled under the parent's chain tolerance:
/// one shared threshold governs every rank decision across the step.
pub fn shift_law_check<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<bool> {
    let max_steps = default_max_steps(p.shape());
    let ct = ChainTol::new(p, tol);
    let profile = defect_profile_with(p, &ct, max_steps)?;

    let obs = observation_reduce_with(p, &ct)?;
    let obs_profile = defect_profile_with(&obs.reduced, &ct, max_steps)?;
    let obs_ok = shifted_eq(&profile.alpha, &obs_profile.alpha)
        && shifted_eq(&profile.beta_obs, &obs_profile.beta_obs)
        && padded_eq(&profile.beta_ctrl, &obs_profile.beta_ctrl);

    let ctrl = control_reduce_with(p, &ct)?;
    let ctrl_profile = defect_profile_with(&ctrl.reduced, &ct, max_steps)?;
    let ctrl_ok = shifted_eq(&profile.alpha, &ctrl_profile.alpha)
        && shifted_eq(&profile.beta_ctrl, &ctrl_profile.beta_ctrl)
        && padded_eq(&profile.beta_obs, &ctrl_profile.beta_obs);

    Ok(obs_ok && ctrl_ok)
}

/// Necessary-condition comparison of two pencils: defect profiles plus the
/// spectra of the irreducible cores. Equivalent pencils always agree;
/// agreement does not certify equivalence.
pub fn invariants_equal<T: Entry>(p: &Pencil<T>, q: &Pencil<T>, tol: &Tolerance) -> Result<bool> {
    let pp = defect_profile_default(p, tol)?;
    let pq = defect_profile_default(q, tol)?;
    if !(padded_eq(&pp.alpha, &pq.alpha)
        && padded_eq(&pp.beta_obs, &pq.beta_obs)
        && padded_eq(&pp.beta_ctrl, &pq.beta_ctrl)
        && pp.regular == pq.regular)
    {
        return Ok(false);
    }
    let ev_p = core_eigenvalues(p, &pp, tol)?;
    let ev_q = core_eigenvalues(q, &pq, tol)?;
    Ok(eigen_multisets_match(&ev_p, &ev_q, 1e-6))
}

/// Eigenvalues of `-E_core^{-1} A_core` for the underlying irreducible
/// system.
pub(crate) fn core_eigenvalues<T: Entry>(
    p: &Pencil<T>,
    profile: &DefectProfile,
    tol: &Tolerance,
) -> Result<Vec<Complex64>> {
    let (core, _) = irreducible_core(p, tol)?;
    let n = core.shape().0;
    if n == 0 {
        return Ok(Vec::new());
    }
    let smin = {
        let parts = crate::subspace::svd_parts(core.e())?;
        parts.singular_values.last().copied().unwrap_or(0.0)
    };
    let threshold = tol.threshold(sigma_max(core.e()).max(sigma_max(p.e())), n, n);
    if smin <= threshold {
        if profile.regular {
            return Err(Error::Internal(
                "profile says regular but the core E is numerically singular".into(),
            ));
        }
        return Err(Error::TolerancePathology(
            "core E is numerically singular; spectra are not comparable".into(),
        ));
    }
    let lu = core.e().clone().lu();
    let solved = lu
        .solve(core.a())
        .ok_or_else(|| Error::Internal("core E solve failed after the rank check".into()))?;
    eigenvalues_c64(&(-solved))
}

pub(crate) fn eigen_multisets_match(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for x in a {
        let mut best: Option<(usize, f64)> = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) if d <= tol * (1.0 + x.norm()) => used[j] = true,
            _ => return false,
        }
    }
    true
}
