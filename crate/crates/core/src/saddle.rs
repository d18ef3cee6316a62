//! Saddle-point pencils: `E = [[R, 0], [0, 0]]`, `A = [[A0, B^T], [B, 0]]`
//! on `U = X x M`, with the codomain expressed in dual coordinates.
//!
//! These systems are always normal, their reduction ladder is explicit
//! (`U*1 = ker B x M`, `U*1^1 = ker B`, ...), and the invertibility of
//! either pivot operator is exactly the inf-sup condition on `B`. The
//! solvability split "A invertible iff inf-sup holds and the restriction
//! of `A0` to `ker B` is invertible" falls out of the reduction chain.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pencil::Pencil;
use crate::reduction::{control_reduce, observation_reduce};
use crate::scalar::ensure_finite;
use crate::spectrum::{solve_linear, SolveCertificate};
use crate::subspace::{kernel_basis, sigma_max, svd_parts, Subspace, Tolerance};

/// The data of a saddle-point problem. `b` maps `X` to `M*`; `rx` and
/// `rm` are the Gram (Riesz) matrices of `X` and `M`, identity when the
/// coordinates are already orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSpec {
    pub a0: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub rx: Option<DMatrix<f64>>,
    pub rm: Option<DMatrix<f64>>,
}

impl SaddleSpec {
    pub fn new(a0: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let spec = SaddleSpec {
            a0,
            b,
            rx: None,
            rm: None,
        };
        spec.validate(&Tolerance::default())?;
        Ok(spec)
    }

    pub fn with_gram(mut self, rx: DMatrix<f64>, rm: DMatrix<f64>) -> Result<Self> {
        self.rx = Some(rx);
        self.rm = Some(rm);
        self.validate(&Tolerance::default())?;
        Ok(self)
    }

    pub fn dim_x(&self) -> usize {
        self.a0.nrows()
    }

    pub fn dim_m(&self) -> usize {
        self.b.nrows()
    }

    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        let nx = self.dim_x();
        if self.a0.ncols() != nx {
            return Err(Error::ShapeMismatch {
                expected: format!("{nx} x {nx}"),
                got: format!("{} x {}", self.a0.nrows(), self.a0.ncols()),
                context: "saddle A0",
            });
        }
        if self.b.ncols() != nx {
            return Err(Error::ShapeMismatch {
                expected: format!("{} x {nx}", self.dim_m()),
                got: format!("{} x {}", self.b.nrows(), self.b.ncols()),
                context: "saddle B",
            });
        }
        ensure_finite(&self.a0, "A0")?;
        ensure_finite(&self.b, "B")?;
        if let Some(rx) = &self.rx {
            check_spd(rx, nx, "RX", tol)?;
        }
        if let Some(rm) = &self.rm {
            check_spd(rm, self.dim_m(), "RM", tol)?;
        }
        Ok(())
    }

    fn rx_or_identity(&self) -> DMatrix<f64> {
        self.rx
            .clone()
            .unwrap_or_else(|| DMatrix::identity(self.dim_x(), self.dim_x()))
    }

    fn rm_or_identity(&self) -> DMatrix<f64> {
        self.rm
            .clone()
            .unwrap_or_else(|| DMatrix::identity(self.dim_m(), self.dim_m()))
    }
}

fn check_spd(m: &DMatrix<f64>, n: usize, name: &str, tol: &Tolerance) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} x {n}"),
            got: format!("{} x {}", m.nrows(), m.ncols()),
            context: "saddle Gram matrix",
        });
    }
    if n == 0 {
        return Ok(());
    }
    let asym = (m - m.transpose()).norm();
    if asym > tol.threshold(sigma_max(m), n, n) {
        return Err(Error::PreconditionFailed(format!(
            "{name} is not symmetric"
        )));
    }
    let eig = m.clone().symmetric_eigen();
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min <= tol.threshold(sigma_max(m), n, n) {
        return Err(Error::PreconditionFailed(format!(
            "{name} is not positive definite (min eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

/// Assemble `(E, A)` on `U = X x M` in dual codomain coordinates.
pub fn build_saddle_pencil(s: &SaddleSpec) -> Result<Pencil<f64>> {
    s.validate(&Tolerance::default())?;
    let (nx, nm) = (s.dim_x(), s.dim_m());
    let n = nx + nm;
    let mut e = DMatrix::<f64>::zeros(n, n);
    e.view_mut((0, 0), (nx, nx)).copy_from(&s.rx_or_identity());
    let mut a = DMatrix::<f64>::zeros(n, n);
    a.view_mut((0, 0), (nx, nx)).copy_from(&s.a0);
    a.view_mut((0, nx), (nx, nm)).copy_from(&s.b.transpose());
    a.view_mut((nx, 0), (nm, nx)).copy_from(&s.b);
    Pencil::new(e, a)
}

/// The inf-sup constant with the pivot cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InfSupResult {
    pub beta: f64,
    pub satisfied: bool,
    pub pivot_sigma_min_obs: f64,
    pub pivot_sigma_min_ctrl: f64,
}

/// `beta = inf over unit mu of the dual norm of B* mu`, computed as the
/// smallest singular value of the whitened `RX^{-1/2} B^T RM^{-1/2}` as a
/// map from `M`. Positivity is equivalent to invertibility of both the
/// observation pivot `[A*1]` and the control pivot `[A^1]`; the three
/// verdicts are compared and must agree. An empty `M` satisfies the
/// condition vacuously and reports `beta = 0`.
pub fn inf_sup_constant(s: &SaddleSpec, tol: &Tolerance) -> Result<InfSupResult> {
    s.validate(tol)?;
    let (nx, nm) = (s.dim_x(), s.dim_m());
    let whitened = inv_sqrt(&s.rx_or_identity()) * s.b.transpose() * inv_sqrt(&s.rm_or_identity());
    let (beta, smax) = if nm == 0 {
        (f64::INFINITY, 0.0)
    } else if nm > nx {
        (0.0, sigma_max(&whitened))
    } else {
        let parts = svd_parts(&whitened)?;
        (
            parts.singular_values.last().copied().unwrap_or(0.0),
            parts.singular_values.first().copied().unwrap_or(0.0),
        )
    };
    let satisfied = nm == 0 || beta > tol.threshold(smax, nx.max(1), nm.max(1));

    let pencil = build_saddle_pencil(s)?;
    let obs = observation_reduce(&pencil, tol)?;
    let ctrl = control_reduce(&pencil, tol)?;
    if obs.pivot_invertible != satisfied || ctrl.pivot_invertible != satisfied {
        return Err(Error::TolerancePathology(format!(
            "inf-sup criteria disagree: beta test {satisfied}, observation pivot \
             {}, control pivot {}",
            obs.pivot_invertible, ctrl.pivot_invertible
        )));
    }
    Ok(InfSupResult {
        beta: if nm == 0 { 0.0 } else { beta },
        satisfied,
        pivot_sigma_min_obs: obs.pivot_sigma_min,
        pivot_sigma_min_ctrl: ctrl.pivot_sigma_min,
    })
}

fn inv_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = m.clone().symmetric_eigen();
    let d = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            1.0 / eig.eigenvalues[i].max(f64::MIN_POSITIVE).sqrt()
        } else {
            0.0
        }
    });
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// All ten distinguished subspaces of the saddle reduction ladder, with
/// bases embedded in the original coordinates.
#[derive(Debug, Clone)]
pub struct SaddleLadder {
    pub u1: Subspace<f64>,
    pub w1: Subspace<f64>,
    pub ker_e: Subspace<f64>,
    pub a_ker_e: Subspace<f64>,
    pub u1c1: Subspace<f64>,
    pub w1c1: Subspace<f64>,
    pub uc1: Subspace<f64>,
    pub wc1: Subspace<f64>,
    pub uc1o1: Subspace<f64>,
    pub wc1o1: Subspace<f64>,
    pub ker_b_dim: usize,
}

/// Compute the ladder and assert the structural dimension identities
/// (`dim U*1 = dim ker B + dim M`, `dim U*1^1 = dim ker B`,
/// `dim W^1*1 = dim ker B`).
pub fn saddle_reduction_ladder(s: &SaddleSpec, tol: &Tolerance) -> Result<SaddleLadder> {
    let pencil = build_saddle_pencil(s)?;
    let chains = crate::commutativity::mixed_chains(&pencil, tol)?;
    let ker_b = kernel_basis(&s.b, tol)?;

    let embed = |outer: &Subspace<f64>, inner: &Subspace<f64>| {
        Subspace::from_columns_unchecked(outer.basis() * inner.basis())
    };
    let ladder = SaddleLadder {
        u1: chains.obs_first.dom_space.clone(),
        w1: chains.obs_first.codom_space.clone(),
        ker_e: chains.ctrl_first.dom_space.clone(),
        a_ker_e: chains.ctrl_first.codom_space.clone(),
        u1c1: embed(
            &chains.obs_first.dom_space,
            &chains.then_ctrl.dom_complement,
        ),
        w1c1: embed(
            &chains.obs_first.codom_space,
            &chains.then_ctrl.codom_complement,
        ),
        uc1: chains.ctrl_first.dom_complement.clone(),
        wc1: chains.ctrl_first.codom_complement.clone(),
        uc1o1: embed(
            &chains.ctrl_first.dom_complement,
            &chains.then_obs.dom_space,
        ),
        wc1o1: embed(
            &chains.ctrl_first.codom_complement,
            &chains.then_obs.codom_space,
        ),
        ker_b_dim: ker_b.dim(),
    };

    let nm = s.dim_m();
    let checks = [
        (
            "dim U*1 = dim ker B + dim M",
            ladder.u1.dim(),
            ladder.ker_b_dim + nm,
        ),
        ("dim U*1^1 = dim ker B", ladder.u1c1.dim(), ladder.ker_b_dim),
        (
            "dim W^1*1 = dim ker B",
            ladder.wc1o1.dim(),
            ladder.ker_b_dim,
        ),
        ("dim ker E = dim M", ladder.ker_e.dim(), nm),
    ];
    for (what, got, want) in checks {
        if got != want {
            return Err(Error::TolerancePathology(format!(
                "saddle ladder identity failed: {what} (got {got}, want {want})"
            )));
        }
    }
    Ok(ladder)
}

#[derive(Debug, Clone)]
pub struct SaddleSolveOutcome {
    pub invertible: bool,
    pub infsup: InfSupResult,
    /// Invertibility of the restriction of `A0` to `ker B`.
    pub schur_invertible: bool,
    pub solution: Option<DVector<f64>>,
    pub certificate: Option<SolveCertificate>,
    pub explanation: String,
}

/// Decide solvability both ways: directly on the assembled `A`, and via
/// the split "inf-sup holds and `i^T A0 i` is invertible on `ker B`".
/// Solves through the reduction chain when invertible.
pub fn solve_saddle(
    s: &SaddleSpec,
    f: &DVector<f64>,
    tol: &Tolerance,
) -> Result<SaddleSolveOutcome> {
    let pencil = build_saddle_pencil(s)?;
    let n = pencil.shape().0;
    if f.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("forcing of length {n}"),
            got: format!("length {}", f.len()),
            context: "solve_saddle",
        });
    }
    let infsup = inf_sup_constant(s, tol)?;

    let ker_b = kernel_basis(&s.b, tol)?;
    let restricted = ker_b.basis().transpose() * &s.a0 * ker_b.basis();
    let schur_invertible = if ker_b.dim() == 0 {
        true
    } else {
        let parts = svd_parts(&restricted)?;
        let smin = parts.singular_values.last().copied().unwrap_or(0.0);
        smin > tol.threshold(sigma_max(&s.a0), ker_b.dim(), ker_b.dim())
    };
    let split_invertible = infsup.satisfied && schur_invertible;

    let direct_smin = {
        let parts = svd_parts(pencil.a())?;
        parts
            .singular_values
            .last()
            .copied()
            .unwrap_or(f64::INFINITY)
    };
    let direct_invertible = n == 0 || direct_smin > tol.threshold(sigma_max(pencil.a()), n, n);

    if split_invertible != direct_invertible {
        return Err(Error::TolerancePathology(format!(
            "solvability criteria disagree: inf-sup and Schur give {split_invertible}, \
             direct sigma_min gives {direct_invertible} ({direct_smin:.3e})"
        )));
    }

    if !split_invertible {
        let explanation = if !infsup.satisfied {
            "the inf-sup condition fails, so A is singular".to_string()
        } else {
            "the restriction of A0 to ker B is singular, so A is singular".to_string()
        };
        return Ok(SaddleSolveOutcome {
            invertible: false,
            infsup,
            schur_invertible,
            solution: None,
            certificate: None,
            explanation,
        });
    }

    let (u, certificate) = solve_linear(pencil.a(), f, pencil.e(), tol)?;
    Ok(SaddleSolveOutcome {
        invertible: true,
        infsup,
        schur_invertible,
        solution: Some(u),
        certificate: Some(certificate),
        explanation: "inf-sup holds and A0 restricted to ker B is invertible".to_string(),
    })
}

/// A discretized multiplication-operator system: `E` masks out the nodes
/// of an interior interval, `A` is a first-difference operator.
#[derive(Debug, Clone)]
pub struct MultiplicationExample {
    pub pencil: Pencil<f64>,
    pub mask: Vec<f64>,
    /// The structure the continuous system exhibits: one control
    /// reduction, after which exactly one observation reduction remains.
    pub continuum_structure: &'static str,
    /// What the finite discretization actually does: the masked-diagonal
    /// pencil becomes irreducible after the single control reduction, so
    /// the discrete index disagrees with the continuum structure.
    pub discrete_note: &'static str,
}

/// Grid with `n_left`, `n_j`, `n_right` nodes; the mask vanishes on the
/// middle `n_j` nodes.
pub fn example_multiplication_discrete(
    n_left: usize,
    n_j: usize,
    n_right: usize,
    h: f64,
) -> Result<MultiplicationExample> {
    let n = n_left + n_j + n_right;
    if n == 0 || h <= 0.0 || !h.is_finite() {
        return Err(Error::PreconditionFailed(
            "need at least one grid node and a positive spacing".into(),
        ));
    }
    let mask: Vec<f64> = (0..n)
        .map(|i| {
            if i >= n_left && i < n_left + n_j {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    let e = DMatrix::<f64>::from_fn(n, n, |i, j| if i == j { mask[i] } else { 0.0 });
    // Backward differences with a Dirichlet row at the left end keep the
    // operator injective, matching the derivative on the line.
    let a = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            1.0 / h
        } else if j + 1 == i {
            -1.0 / h
        } else {
            0.0
        }
    });
    Ok(MultiplicationExample {
        pencil: Pencil::new(e, a)?,
        mask,
        continuum_structure:
            "control-irreducible after one control reduction, then observation-reducible exactly once",
        discrete_note:
            "the discrete pencil is already irreducible after the control reduction; the leftover \
             observation step of the continuous system is invisible at any finite resolution",
    })
}

/// 1-D mixed form of the Poisson problem: flux in the discrete H(div)
/// space of nodal values, pressure piecewise constant on cells. Returns a
/// saddle spec with the H(div) Gram matrix on the flux block.
pub fn example_mixed_poisson(n: usize) -> Result<SaddleSpec> {
    if n < 2 {
        return Err(Error::PreconditionFailed("need at least two cells".into()));
    }
    let h = 1.0 / n as f64;
    let n_flux = n + 1;
    let b = DMatrix::<f64>::from_fn(n, n_flux, |j, i| {
        if i == j {
            -1.0 / h
        } else if i == j + 1 {
            1.0 / h
        } else {
            0.0
        }
    });
    // P1 mass matrix on the flux nodes.
    let mass = DMatrix::<f64>::from_fn(n_flux, n_flux, |i, j| {
        if i == j {
            if i == 0 || i == n_flux - 1 {
                h / 3.0
            } else {
                2.0 * h / 3.0
            }
        } else if i.abs_diff(j) == 1 {
            h / 6.0
        } else {
            0.0
        }
    });
    let rm = DMatrix::<f64>::identity(n, n) * h;
    let rx = &mass + b.transpose() * &rm * &b;
    SaddleSpec {
        a0: mass,
        b,
        rx: Some(rx),
        rm: Some(rm),
    }
    .validated()
}

impl SaddleSpec {
    fn validated(self) -> Result<Self> {
        self.validate(&Tolerance::default())?;
        Ok(self)
    }
}
