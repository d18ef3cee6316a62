//! The serializable analysis report and the pipeline that fills it.
//!
//! Reports serialize to canonical JSON (sorted keys, fixed float format),
//! so identical inputs produce byte-identical files on every platform.
//! Randomized pieces (resolvent sampling) draw their seed from the input
//! digest, which keeps reports deterministic without hiding the sampling.

use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::canonical::canonical_document;
use crate::commutativity::{commute_check, CommutativityCertificate, PivotEquivalences};
use crate::defects::{default_max_steps, defect_profile, DefectProfile};
use crate::error::Result;
use crate::pencil::{Pencil, PencilData};
use crate::reduction::{normality_check, NormalityDiagnostics};
use crate::saddle::InfSupResult;
use crate::scalar::{Entry, Field};
use crate::spectrum::{
    core_spectrum, reduce_to_ode, resolvent_member, sample_disk_lambdas, ResolventSample,
};
use crate::subspace::Tolerance;

pub const SCHEMA_VERSION: u32 = 1;

/// A dense matrix in report form, field-tagged so empty matrices
/// round-trip unambiguously.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MatrixRepr {
    pub field: Field,
    pub rows: usize,
    pub cols: usize,
    /// Row-major `[re, im]` pairs.
    pub data: Vec<(f64, f64)>,
}

impl MatrixRepr {
    pub fn from_matrix<T: Entry>(m: &DMatrix<T>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)].re_im());
            }
        }
        MatrixRepr {
            field: T::FIELD,
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ShapeInfo {
    pub m: usize,
    pub n: usize,
    pub field: Field,
}

/// Serializable face of a commutativity certificate.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CommutativityReport {
    pub ju: MatrixRepr,
    pub jw: MatrixRepr,
    pub norm_ju: f64,
    pub norm_jw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_min_ju: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_min_jw: Option<f64>,
    pub intertwine_residual_e: f64,
    pub intertwine_residual_a: f64,
    pub equivalent: bool,
    pub pivot_equivalences_hold: bool,
    pub pivots: PivotEquivalences,
}

impl CommutativityReport {
    pub fn from_certificate<T: Entry>(cert: &CommutativityCertificate<T>) -> Self {
        CommutativityReport {
            ju: MatrixRepr::from_matrix(&cert.ju),
            jw: MatrixRepr::from_matrix(&cert.jw),
            norm_ju: cert.norm_ju,
            norm_jw: cert.norm_jw,
            sigma_min_ju: finite_or_none(cert.sigma_min_ju),
            sigma_min_jw: finite_or_none(cert.sigma_min_jw),
            intertwine_residual_e: cert.intertwine_residual_e,
            intertwine_residual_a: cert.intertwine_residual_a,
            equivalent: cert.equivalent,
            pivot_equivalences_hold: cert.pivot_equivalences_hold,
            pivots: cert.pivots,
        }
    }
}

/// `None` encodes an infinite value (empty pivots, mismatched shapes).
fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OdeReport {
    pub ode_matrix: MatrixRepr,
    pub state_embedding: MatrixRepr,
    pub eliminated_dims: Vec<usize>,
}

/// The full analysis bundle. Every section is optional so partial
/// reports (single subcommands) share the same schema.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Tolerance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defects: Option<DefectProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normality: Option<NormalityDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commutativity: Option<CommutativityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolvent_samples: Option<Vec<ResolventSample>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub core_spectrum: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saddle: Option<InfSupResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_extract: Option<OdeReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn empty() -> Self {
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            ..Default::default()
        }
    }
}

/// Content hash of a pencil: field, shape, and the IEEE-754 bytes of all
/// entries of `E` then `A`, little endian.
pub fn input_digest(p: &PencilData) -> String {
    let mut hasher = Sha256::new();
    let (m, n) = p.shape();
    hasher.update((m as u64).to_le_bytes());
    hasher.update((n as u64).to_le_bytes());
    hasher.update(match p.field() {
        Field::Real => [0u8],
        Field::Complex => [1u8],
    });
    let mut absorb_matrix = |mat: &DMatrix<f64>| {
        for i in 0..mat.nrows() {
            for j in 0..mat.ncols() {
                hasher.update(mat[(i, j)].to_le_bytes());
            }
        }
    };
    match p {
        PencilData::Real(p) => {
            absorb_matrix(p.e());
            absorb_matrix(p.a());
        }
        PencilData::Complex(p) => {
            for mat in [p.e(), p.a()] {
                for i in 0..mat.nrows() {
                    for j in 0..mat.ncols() {
                        hasher.update(mat[(i, j)].re.to_le_bytes());
                        hasher.update(mat[(i, j)].im.to_le_bytes());
                    }
                }
            }
        }
    }
    let bytes = hasher.finalize();
    let mut hex = String::with_capacity(7 + 2 * bytes.len());
    hex.push_str("sha256:");
    for b in bytes.iter() {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

fn seed_from_digest(digest: &str) -> u64 {
    let hex = digest.strip_prefix("sha256:").unwrap_or(digest);
    u64::from_str_radix(&hex[..16.min(hex.len())], 16).unwrap_or(0)
}

/// Number of resolvent samples taken by the full analysis: the origin
/// plus five draws from the spectral disk.
pub const RESOLVENT_SAMPLE_COUNT: usize = 6;

/// Run the full pipeline on one pencil.
pub fn analyze(
    p: &PencilData,
    tol: &Tolerance,
    max_steps: Option<usize>,
) -> Result<AnalysisReport> {
    let digest = input_digest(p);
    let seed = seed_from_digest(&digest);
    let mut report = match p {
        PencilData::Real(p) => analyze_typed(p, tol, max_steps, seed)?,
        PencilData::Complex(p) => analyze_typed(p, tol, max_steps, seed)?,
    };
    report.input_digest = Some(digest);
    Ok(report)
}

fn analyze_typed<T: Entry>(
    p: &Pencil<T>,
    tol: &Tolerance,
    max_steps: Option<usize>,
    seed: u64,
) -> Result<AnalysisReport> {
    let (m, n) = p.shape();
    let steps = max_steps.unwrap_or_else(|| default_max_steps(p.shape()));
    let mut warnings = Vec::new();

    let defects = defect_profile(p, tol, steps)?;
    for mark in &defects.marginal {
        warnings.push(format!("marginal pivot at {mark}"));
    }
    let normality = normality_check(p, tol)?;
    if !normality.normal {
        warnings.push("normality gaps exceed the tolerance".to_string());
    }
    let commutativity = commute_check(p, tol)?;
    if !commutativity.equivalent {
        warnings.push("mixed reductions failed to commute numerically".to_string());
    }

    let lambdas = sample_disk_lambdas(p, RESOLVENT_SAMPLE_COUNT, seed, tol);
    let samples: Vec<ResolventSample> = lambdas
        .iter()
        .map(|&l| resolvent_member(p, l, tol))
        .collect();

    let spectrum = if defects.regular {
        Some(
            core_spectrum(p, tol)?
                .into_iter()
                .map(|z| (z.re, z.im))
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };
    let ode = if defects.regular {
        let extract = reduce_to_ode(p, tol, steps)?;
        Some(OdeReport {
            ode_matrix: MatrixRepr::from_matrix(&extract.ode_matrix),
            state_embedding: MatrixRepr::from_matrix(&extract.state_embedding),
            eliminated_dims: extract
                .constraints
                .iter()
                .map(|c| c.eliminated.dim())
                .collect(),
        })
    } else {
        None
    };

    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        input_digest: None,
        tolerance: Some(*tol),
        shape: Some(ShapeInfo {
            m,
            n,
            field: T::FIELD,
        }),
        defects: Some(defects),
        normality: Some(normality),
        commutativity: Some(CommutativityReport::from_certificate(&commutativity)),
        resolvent_samples: Some(samples),
        core_spectrum: spectrum,
        saddle: None,
        ode_extract: ode,
        warnings,
    })
}

/// Canonical JSON bytes of a report.
pub fn report_to_string(r: &AnalysisReport) -> Result<String> {
    canonical_document(r)
}

pub fn save_report(r: &AnalysisReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_string(r)?)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<AnalysisReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
