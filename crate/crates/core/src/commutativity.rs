//! The canonical maps identifying the two mixed-order reduced systems.
//!
//! Reducing observation-then-control or control-then-observation lands in
//! two a-priori different systems. The maps `J_U` ("forget the smaller
//! kernel") and `J_W` (quotient refinement) identify them; both have norm
//! at most one, and for normal systems (every finite-dimensional system)
//! they are isomorphisms intertwining the reduced operators. The
//! certificate also records the pivot-invertibility equivalences between
//! the pivots of the original system and of the once-reduced systems.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pencil::Pencil;
use crate::reduction::{control_reduce_with, observation_reduce_with, ChainTol, ReductionStep};
use crate::scalar::Entry;
use crate::subspace::{intersect_basis, range_basis, svd_parts, Tolerance};

/// The four reduction steps of the two mixed chains.
#[derive(Debug, Clone)]
pub struct MixedChains<T: Entry> {
    /// Observation reduction of the original system.
    pub obs_first: ReductionStep<T>,
    /// Control reduction of the observation-reduced system.
    pub then_ctrl: ReductionStep<T>,
    /// Control reduction of the original system.
    pub ctrl_first: ReductionStep<T>,
    /// Observation reduction of the control-reduced system.
    pub then_obs: ReductionStep<T>,
}

pub fn mixed_chains<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<MixedChains<T>> {
    let ct = ChainTol::new(p, tol);
    let obs_first = observation_reduce_with(p, &ct)?;
    let then_ctrl = control_reduce_with(&obs_first.reduced, &ct)?;
    let ctrl_first = control_reduce_with(p, &ct)?;
    let then_obs = observation_reduce_with(&ctrl_first.reduced, &ct)?;
    Ok(MixedChains {
        obs_first,
        then_ctrl,
        ctrl_first,
        then_obs,
    })
}

impl<T: Entry> MixedChains<T> {
    /// `J_U` in the chain bases, together with the residual of its image
    /// inside the obs-reduced domain of the control chain.
    fn ju_parts(&self) -> (DMatrix<T>, f64) {
        // A class u + ker E*1 is represented inside U*1; map it to
        // u + ker E (coordinates in the complement of ker E), then read
        // off coordinates in U^1*1.
        let embedded = self.ctrl_first.dom_complement.basis().adjoint()
            * (self.obs_first.dom_space.basis() * self.then_ctrl.dom_complement.basis());
        let ju = self.then_obs.dom_space.basis().adjoint() * &embedded;
        let residual = (&embedded - self.then_obs.dom_space.basis() * &ju).norm();
        (ju, residual)
    }

    fn jw_parts(&self) -> (DMatrix<T>, f64) {
        let embedded = self.ctrl_first.codom_complement.basis().adjoint()
            * (self.obs_first.codom_space.basis() * self.then_ctrl.codom_complement.basis());
        let jw = self.then_obs.codom_space.basis().adjoint() * &embedded;
        let residual = (&embedded - self.then_obs.codom_space.basis() * &jw).norm();
        (jw, residual)
    }
}

fn norm_and_sigma_min<T: Entry>(m: &DMatrix<T>) -> (f64, f64) {
    if m.nrows() == 0 && m.ncols() == 0 {
        return (0.0, f64::INFINITY);
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0.0, 0.0);
    }
    let parts = svd_parts(m).expect("finite map");
    (
        parts.singular_values.first().copied().unwrap_or(0.0),
        parts.singular_values.last().copied().unwrap_or(0.0),
    )
}

/// `J_U` alone; fails when the computed map is not injective at the
/// tolerance, which signals a rank inconsistency upstream.
pub fn build_ju<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<DMatrix<T>> {
    let chains = mixed_chains(p, tol)?;
    let (ju, _) = chains.ju_parts();
    let (_, smin) = norm_and_sigma_min(&ju);
    let threshold = tol.threshold(1.0, ju.nrows().max(1), ju.ncols().max(1));
    if ju.ncols() > 0 && smin <= threshold {
        return Err(Error::TolerancePathology(format!(
            "J_U is numerically singular (sigma_min = {smin:.3e})"
        )));
    }
    Ok(ju)
}

pub fn build_jw<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<DMatrix<T>> {
    let chains = mixed_chains(p, tol)?;
    let (jw, _) = chains.jw_parts();
    let (_, smin) = norm_and_sigma_min(&jw);
    let threshold = tol.threshold(1.0, jw.nrows().max(1), jw.ncols().max(1));
    if jw.ncols() > 0 && smin <= threshold {
        return Err(Error::TolerancePathology(format!(
            "J_W is numerically singular (sigma_min = {smin:.3e})"
        )));
    }
    Ok(jw)
}

/// The pivot-invertibility equivalences between the two chains.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PivotEquivalences {
    /// `[A*1]` of the original system.
    pub obs_pivot_invertible: bool,
    /// `[A^1*1]`: observation pivot of the control-reduced system.
    pub ctrl_obs_pivot_invertible: bool,
    /// `[A^1]` of the original system.
    pub ctrl_pivot_invertible: bool,
    /// `[A*1^1]`: control pivot of the observation-reduced system.
    pub obs_ctrl_pivot_invertible: bool,
    pub ctrl_pivot_kernel_dim: usize,
    pub obs_ctrl_pivot_kernel_dim: usize,
}

impl PivotEquivalences {
    pub fn hold(&self) -> bool {
        self.obs_pivot_invertible == self.ctrl_obs_pivot_invertible
            && self.ctrl_pivot_invertible == self.obs_ctrl_pivot_invertible
            && self.ctrl_pivot_kernel_dim == self.obs_ctrl_pivot_kernel_dim
    }
}

#[derive(Debug, Clone)]
pub struct CommutativityCertificate<T: Entry> {
    pub ju: DMatrix<T>,
    pub jw: DMatrix<T>,
    pub norm_ju: f64,
    pub norm_jw: f64,
    pub sigma_min_ju: f64,
    pub sigma_min_jw: f64,
    /// How far the image of each map sticks out of its claimed codomain.
    pub membership_residual_ju: f64,
    pub membership_residual_jw: f64,
    pub intertwine_residual_e: f64,
    pub intertwine_residual_a: f64,
    pub equivalent: bool,
    pub pivot_equivalences_hold: bool,
    pub pivots: PivotEquivalences,
}

/// Build both mixed chains, the maps `J_U`, `J_W`, the intertwining
/// residuals, and the pivot equivalences. Mathematical failures are
/// recorded in the certificate, never raised.
pub fn commute_check<T: Entry>(
    p: &Pencil<T>,
    tol: &Tolerance,
) -> Result<CommutativityCertificate<T>> {
    let ct = ChainTol::new(p, tol);
    let chains = mixed_chains(p, tol)?;
    let (ju, membership_residual_ju) = chains.ju_parts();
    let (jw, membership_residual_jw) = chains.jw_parts();
    let (norm_ju, sigma_min_ju) = norm_and_sigma_min(&ju);
    let (norm_jw, sigma_min_jw) = norm_and_sigma_min(&jw);

    // Intertwining: the control-then-observation operators composed with
    // J_U must equal J_W composed with the observation-then-control ones.
    let e_co = chains.then_obs.reduced.e();
    let a_co = chains.then_obs.reduced.a();
    let e_oc = chains.then_ctrl.reduced.e();
    let a_oc = chains.then_ctrl.reduced.a();
    let shapes_match = ju.nrows() == e_co.ncols()
        && jw.nrows() == e_co.nrows()
        && ju.ncols() == e_oc.ncols()
        && jw.ncols() == e_oc.nrows()
        && ju.nrows() == ju.ncols()
        && jw.nrows() == jw.ncols();
    let (intertwine_residual_e, intertwine_residual_a) = if shapes_match {
        (
            (e_co * &ju - &jw * e_oc).norm(),
            (a_co * &ju - &jw * a_oc).norm(),
        )
    } else {
        (f64::INFINITY, f64::INFINITY)
    };

    let pivots = PivotEquivalences {
        obs_pivot_invertible: chains.obs_first.pivot_invertible,
        ctrl_obs_pivot_invertible: chains.then_obs.pivot_invertible,
        ctrl_pivot_invertible: chains.ctrl_first.pivot_invertible,
        obs_ctrl_pivot_invertible: chains.then_ctrl.pivot_invertible,
        ctrl_pivot_kernel_dim: chains.ctrl_first.pivot_kernel_dim(&ct.a)?,
        obs_ctrl_pivot_kernel_dim: chains.then_ctrl.pivot_kernel_dim(&ct.a)?,
    };

    let (scale_e, scale_a) = p.scales();
    let scale = scale_e + scale_a;
    let dim = p.shape().0.max(p.shape().1);
    let residual_threshold = tol.threshold(scale, dim, dim);
    let sigma_threshold = tol.threshold(1.0, dim.max(1), dim.max(1));
    let equivalent = shapes_match
        && sigma_min_ju > sigma_threshold
        && sigma_min_jw > sigma_threshold
        && intertwine_residual_e <= residual_threshold
        && intertwine_residual_a <= residual_threshold
        && membership_residual_ju <= residual_threshold
        && membership_residual_jw <= residual_threshold;

    Ok(CommutativityCertificate {
        ju,
        jw,
        norm_ju,
        norm_jw,
        sigma_min_ju,
        sigma_min_jw,
        membership_residual_ju,
        membership_residual_jw,
        intertwine_residual_e,
        intertwine_residual_a,
        equivalent,
        pivot_equivalences_hold: pivots.hold(),
        pivots,
    })
}

/// Dimensions of the spaces in the two interwoven diagrams that summarize
/// one observation and one control reduction. In finite dimension every
/// row and column is exact, so all alternating sums vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DiagramDims {
    pub ker_e1: usize,
    pub ker_e: usize,
    pub akere_mod_eu: usize,
    pub u1: usize,
    pub u: usize,
    pub coker_e: usize,
    pub coker_obs_pivot: usize,
    pub u1c1: usize,
    pub uc1: usize,
    pub coker_ec1: usize,
    pub coker_ctrl_obs_pivot: usize,
    pub ker_obs_ctrl_pivot: usize,
    pub ker_ctrl_pivot: usize,
    pub w1: usize,
    pub w: usize,
    pub w1c1: usize,
    pub wc1: usize,
}

impl DiagramDims {
    /// Alternating sums of every row and column, as named signed totals.
    pub fn alternating_sums(&self) -> Vec<(&'static str, i64)> {
        let v = |x: usize| x as i64;
        vec![
            (
                "u_row_kernels",
                v(self.ker_e1) - v(self.ker_e) + v(self.akere_mod_eu),
            ),
            (
                "u_row_original",
                v(self.u1) - v(self.u) + v(self.coker_e) - v(self.coker_obs_pivot),
            ),
            (
                "u_row_reduced",
                v(self.u1c1) - v(self.uc1) + v(self.coker_ec1) - v(self.coker_ctrl_obs_pivot),
            ),
            ("u_col_first", v(self.ker_e1) - v(self.u1) + v(self.u1c1)),
            ("u_col_second", v(self.ker_e) - v(self.u) + v(self.uc1)),
            (
                "u_col_cokernels",
                v(self.akere_mod_eu) - v(self.coker_e) + v(self.coker_ec1),
            ),
            (
                "u_col_pivots",
                v(self.coker_obs_pivot) - v(self.coker_ctrl_obs_pivot),
            ),
            (
                "w_row_pivot_kernels",
                v(self.ker_obs_ctrl_pivot) - v(self.ker_ctrl_pivot),
            ),
            ("w_row_original", v(self.w1) - v(self.w) + v(self.coker_e)),
            (
                "w_row_reduced",
                v(self.w1c1) - v(self.wc1) + v(self.coker_ec1),
            ),
            (
                "w_col_first",
                v(self.ker_obs_ctrl_pivot) - v(self.ker_e1) + v(self.w1) - v(self.w1c1),
            ),
            (
                "w_col_second",
                v(self.ker_ctrl_pivot) - v(self.ker_e) + v(self.w) - v(self.wc1),
            ),
            (
                "w_col_cokernels",
                v(self.ker_e) - v(self.ker_e1) - v(self.coker_e) + v(self.coker_ec1),
            ),
        ]
    }

    pub fn all_exact(&self) -> bool {
        self.alternating_sums().iter().all(|(_, s)| *s == 0)
    }
}

/// Compute every space dimension in the interwoven diagrams.
pub fn diagram_dimensions<T: Entry>(p: &Pencil<T>, tol: &Tolerance) -> Result<DiagramDims> {
    let ct = ChainTol::new(p, tol);
    let chains = mixed_chains(p, tol)?;
    let (m, n) = p.shape();

    let eu = range_basis(p.e(), &ct.e)?;
    let ak = &chains.ctrl_first.codom_space;
    let ak_cap_eu = intersect_basis(&eu, ak, &ct.a)?;

    Ok(DiagramDims {
        ker_e1: chains.then_ctrl.dom_space.dim(),
        ker_e: chains.ctrl_first.dom_space.dim(),
        akere_mod_eu: ak.dim() - ak_cap_eu.dim(),
        u1: chains.obs_first.dom_space.dim(),
        u: n,
        coker_e: m - chains.obs_first.codom_space.dim(),
        coker_obs_pivot: chains.obs_first.pivot_coker_dim(&ct.a)?,
        u1c1: chains.obs_first.dom_space.dim() - chains.then_ctrl.dom_space.dim(),
        uc1: n - chains.ctrl_first.dom_space.dim(),
        coker_ec1: (m - chains.ctrl_first.codom_space.dim()) - chains.then_obs.codom_space.dim(),
        coker_ctrl_obs_pivot: chains.then_obs.pivot_coker_dim(&ct.a)?,
        ker_obs_ctrl_pivot: chains.then_ctrl.pivot_kernel_dim(&ct.a)?,
        ker_ctrl_pivot: chains.ctrl_first.pivot_kernel_dim(&ct.a)?,
        w1: chains.obs_first.codom_space.dim(),
        w: m,
        w1c1: chains.obs_first.codom_space.dim() - chains.then_ctrl.codom_space.dim(),
        wc1: m - chains.ctrl_first.codom_space.dim(),
    })
}
