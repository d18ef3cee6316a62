use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{json, Value};

use penred_core::canonical::{canonical_document, to_canonical_string};
use penred_core::commutativity::commute_check;
use penred_core::pencil::blocks::parse_complex;
use penred_core::pencil::{
    load_pencil_json, load_pencil_matrix_market, save_pencil_json, synthesize, BlockSpec, Pencil,
};
use penred_core::reduction::{reduce_chain, ReductionKind, ReductionStep};
use penred_core::report::{
    analyze as run_analysis, input_digest, save_report, AnalysisReport, CommutativityReport,
    MatrixRepr, ShapeInfo, RESOLVENT_SAMPLE_COUNT,
};
use penred_core::saddle::{
    build_saddle_pencil, inf_sup_constant, saddle_reduction_ladder, solve_saddle, SaddleSpec,
};
use penred_core::spectrum::{core_spectrum, resolvent_member, sample_disk_lambdas};
use penred_core::{Entry, Error, PencilData, Result, Tolerance};

use crate::summary;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Args)]
pub struct InputArgs {
    /// Pencil as a single JSON file.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["e", "a"])]
    json: Option<PathBuf>,
    /// Matrix Market file holding E (requires --A).
    #[arg(long = "E", alias = "e", value_name = "FILE", requires = "a")]
    e: Option<PathBuf>,
    /// Matrix Market file holding A (requires --E).
    #[arg(long = "A", alias = "a", value_name = "FILE", requires = "e")]
    a: Option<PathBuf>,
}

impl InputArgs {
    fn load(&self) -> Result<PencilData> {
        match (&self.json, &self.e, &self.a) {
            (Some(path), None, None) => load_pencil_json(path),
            (None, Some(e), Some(a)) => load_pencil_matrix_market(e, a),
            _ => Err(Error::Parse(
                "provide either --json FILE or both --e FILE and --a FILE".into(),
            )),
        }
    }
}

#[derive(Args)]
pub struct ToleranceArgs {
    /// Relative rank threshold.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Absolute floor added to every rank threshold.
    #[arg(long, default_value_t = 0.0)]
    abs_floor: f64,
}

impl ToleranceArgs {
    fn build(&self) -> Result<Tolerance> {
        if self.tol <= 0.0 || !self.tol.is_finite() || self.abs_floor < 0.0 {
            return Err(Error::Parse(
                "tolerances must be positive and finite".into(),
            ));
        }
        Ok(Tolerance {
            rel: self.tol,
            abs_floor: self.abs_floor,
        })
    }
}

fn emit(report: &AnalysisReport, format: OutputFormat, out: &Option<PathBuf>) -> Result<()> {
    match format {
        OutputFormat::Text => print!("{}", summary::render(report)),
        OutputFormat::Json => print!("{}", penred_core::report::report_to_string(report)?),
    }
    if let Some(path) = out {
        save_report(report, path)?;
    }
    Ok(())
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tolerance: ToleranceArgs,
    /// Cap on reduction steps per chain (default: min(m, n) + 1).
    #[arg(long)]
    max_steps: Option<usize>,
    /// Write the canonical JSON report here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Analyze every *.json pencil in a directory.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["json", "e", "a"])]
    batch: Option<PathBuf>,
    /// Report directory for --batch.
    #[arg(long, value_name = "DIR", requires = "batch")]
    out_dir: Option<PathBuf>,
}

pub fn analyze(args: AnalyzeArgs) -> Result<()> {
    let tol = args.tolerance.build()?;
    if let Some(dir) = &args.batch {
        let out_dir = args
            .out_dir
            .as_ref()
            .ok_or_else(|| Error::Parse("--batch requires --out-dir".into()))?;
        fs::create_dir_all(out_dir)?;
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        entries.sort();
        for path in entries {
            let pencil = load_pencil_json(&path)?;
            let report = run_analysis(&pencil, &tol, args.max_steps)?;
            let stem = path.file_stem().unwrap_or_default().to_string_lossy();
            let out = out_dir.join(format!("{stem}.report.json"));
            save_report(&report, &out)?;
            println!("{}: {}", path.display(), summary::one_line(&report));
        }
        return Ok(());
    }
    let pencil = args.input.load()?;
    let report = run_analysis(&pencil, &tol, args.max_steps)?;
    emit(&report, args.format, &args.out)
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Obs,
    Ctrl,
}

impl From<KindArg> for ReductionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Obs => ReductionKind::Observation,
            KindArg::Ctrl => ReductionKind::Control,
        }
    }
}

#[derive(Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tolerance: ToleranceArgs,
    /// Which reduction to apply.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// How many times to apply it.
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// Output file for the reduced pencil (JSON schema).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Optional file for the chain metadata (embeddings, pivots).
    #[arg(long, value_name = "FILE")]
    maps: Option<PathBuf>,
}

pub fn reduce(args: ReduceArgs) -> Result<()> {
    let tol = args.tolerance.build()?;
    let pencil = args.input.load()?;
    let kind: ReductionKind = args.kind.into();
    let policy = vec![kind; args.steps];

    let (reduced, chain_meta) = match &pencil {
        PencilData::Real(p) => {
            let steps = reduce_chain(p, &policy, args.steps, &tol)?;
            let reduced = steps
                .last()
                .map(|s| s.reduced.clone())
                .unwrap_or_else(|| p.clone());
            (PencilData::Real(reduced), chain_metadata(p, &steps))
        }
        PencilData::Complex(p) => {
            let steps = reduce_chain(p, &policy, args.steps, &tol)?;
            let reduced = steps
                .last()
                .map(|s| s.reduced.clone())
                .unwrap_or_else(|| p.clone());
            (PencilData::Complex(reduced), chain_metadata(p, &steps))
        }
    };

    if args.steps > 0 && reduced.shape() == pencil.shape() && reduced == pencil {
        eprintln!("warning: input is {kind}-irreducible; output unchanged");
    }
    save_pencil_json(&reduced, &args.out)?;
    if let Some(maps_path) = &args.maps {
        fs::write(maps_path, to_canonical_string(&chain_meta)? + "\n")?;
    }
    println!(
        "reduced {:?} -> {:?} in {} step(s)",
        pencil.shape(),
        reduced.shape(),
        chain_meta["steps"].as_array().map_or(0, Vec::len)
    );
    Ok(())
}

fn chain_metadata<T: Entry>(original: &Pencil<T>, steps: &[ReductionStep<T>]) -> Value {
    let step_values: Vec<Value> = steps
        .iter()
        .map(|s| {
            json!({
                "kind": s.kind.to_string(),
                "parent_shape": [s.parent_shape.0, s.parent_shape.1],
                "reduced_shape": [s.reduced.shape().0, s.reduced.shape().1],
                "dom_map": matrix_repr_value(&s.dom_map()),
                "codom_map": matrix_repr_value(&s.codom_map()),
                "pivot_sigma_min": if s.pivot_sigma_min.is_finite() { json!(s.pivot_sigma_min) } else { Value::Null },
                "pivot_invertible": s.pivot_invertible,
            })
        })
        .collect();
    json!({
        "schema_version": 1,
        "original_shape": [original.shape().0, original.shape().1],
        "steps": step_values,
    })
}

fn matrix_repr_value<T: Entry>(m: &DMatrix<T>) -> Value {
    serde_json::to_value(MatrixRepr::from_matrix(m)).expect("matrix repr serializes")
}

#[derive(Args)]
pub struct CommuteArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tolerance: ToleranceArgs,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

pub fn commute(args: CommuteArgs) -> Result<()> {
    let tol = args.tolerance.build()?;
    let pencil = args.input.load()?;
    let (m, n) = pencil.shape();
    let cert = match &pencil {
        PencilData::Real(p) => CommutativityReport::from_certificate(&commute_check(p, &tol)?),
        PencilData::Complex(p) => CommutativityReport::from_certificate(&commute_check(p, &tol)?),
    };
    let mut report = AnalysisReport::empty();
    report.input_digest = Some(input_digest(&pencil));
    report.tolerance = Some(tol);
    report.shape = Some(ShapeInfo {
        m,
        n,
        field: pencil.field(),
    });
    report.commutativity = Some(cert);
    emit(&report, args.format, &args.out)
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tolerance: ToleranceArgs,
    /// Comma-separated sample points, e.g. "0,1+2i,-3i".
    #[arg(long, value_name = "LIST", conflicts_with = "grid")]
    lambdas: Option<String>,
    /// Rectangular grid re0,re1,im0,im1,count.
    #[arg(long, value_name = "SPEC")]
    grid: Option<String>,
    /// Write samples as CSV (re,im,sigma_min,member).
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

pub fn spectrum(args: SpectrumArgs) -> Result<()> {
    let tol = args.tolerance.build()?;
    let pencil = args.input.load()?;
    let (m, n) = pencil.shape();

    let mut report = AnalysisReport::empty();
    report.input_digest = Some(input_digest(&pencil));
    report.tolerance = Some(tol);
    report.shape = Some(ShapeInfo {
        m,
        n,
        field: pencil.field(),
    });

    let lambdas = build_lambda_list(&args, &pencil, &tol)?;
    match &pencil {
        PencilData::Real(p) => fill_spectrum(p, &lambdas, &tol, &mut report)?,
        PencilData::Complex(p) => fill_spectrum(p, &lambdas, &tol, &mut report)?,
    }

    if let Some(csv_path) = &args.csv {
        let mut csv = String::from("re,im,sigma_min,member\n");
        for s in report.resolvent_samples.as_deref().unwrap_or(&[]) {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                penred_core::canonical::format_g17(s.lambda.0),
                penred_core::canonical::format_g17(s.lambda.1),
                penred_core::canonical::format_g17(s.sigma_min),
                s.member
            ));
        }
        fs::write(csv_path, csv)?;
    }
    emit(&report, args.format, &args.out)
}

fn build_lambda_list(
    args: &SpectrumArgs,
    pencil: &PencilData,
    tol: &Tolerance,
) -> Result<Vec<Complex64>> {
    if let Some(list) = &args.lambdas {
        return list.split(',').map(|s| parse_complex(s.trim())).collect();
    }
    if let Some(grid) = &args.grid {
        let parts: Vec<&str> = grid.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Parse("--grid wants re0,re1,im0,im1,count".into()));
        }
        let nums: Vec<f64> = parts[..4]
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad grid bound `{s}`")))
            })
            .collect::<Result<_>>()?;
        let count: usize = parts[4]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid count `{}`", parts[4])))?;
        if count < 2 {
            return Err(Error::Parse("grid count must be at least 2".into()));
        }
        let mut out = Vec::with_capacity(count * count);
        for i in 0..count {
            for j in 0..count {
                let re = nums[0] + (nums[1] - nums[0]) * i as f64 / (count - 1) as f64;
                let im = nums[2] + (nums[3] - nums[2]) * j as f64 / (count - 1) as f64;
                out.push(Complex64::new(re, im));
            }
        }
        return Ok(out);
    }
    let seed = {
        let digest = input_digest(pencil);
        u64::from_str_radix(&digest["sha256:".len().."sha256:".len() + 16], 16).unwrap_or(0)
    };
    Ok(match pencil {
        PencilData::Real(p) => sample_disk_lambdas(p, RESOLVENT_SAMPLE_COUNT, seed, tol),
        PencilData::Complex(p) => sample_disk_lambdas(p, RESOLVENT_SAMPLE_COUNT, seed, tol),
    })
}

fn fill_spectrum<T: Entry>(
    p: &Pencil<T>,
    lambdas: &[Complex64],
    tol: &Tolerance,
    report: &mut AnalysisReport,
) -> Result<()> {
    report.resolvent_samples = Some(
        lambdas
            .iter()
            .map(|&l| resolvent_member(p, l, tol))
            .collect(),
    );
    match core_spectrum(p, tol) {
        Ok(evs) => {
            report.core_spectrum = Some(evs.into_iter().map(|z| (z.re, z.im)).collect());
        }
        Err(Error::NotRegular(why)) => {
            report.warnings.push(format!("no core spectrum: {why}"));
        }
        Err(other) => return Err(other),
    }
    Ok(())
}

#[derive(Args)]
pub struct SaddleArgs {
    /// Saddle spec JSON: {"A0": [[..]], "B": [[..]], "RX": optional, "RM": optional}.
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    #[command(flatten)]
    tolerance: ToleranceArgs,
    /// Report the inf-sup constant (always computed; kept for scripts).
    #[arg(long)]
    infsup: bool,
    /// Print the reduction ladder dimensions.
    #[arg(long)]
    ladder: bool,
    /// Solve A u = f for the forcing in this JSON file.
    #[arg(long, value_name = "FILE")]
    solve: Option<PathBuf>,
    /// Where to write the solution vector (JSON).
    #[arg(long, value_name = "FILE", requires = "solve")]
    solution_out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

pub fn saddle(args: SaddleArgs) -> Result<()> {
    let tol = args.tolerance.build()?;
    let spec = load_saddle_spec(&args.spec)?;
    let pencil = build_saddle_pencil(&spec)?;
    let data = PencilData::Real(pencil.clone());

    let mut report = run_analysis(&data, &tol, None)?;
    report.saddle = Some(inf_sup_constant(&spec, &tol)?);

    if args.ladder {
        let ladder = saddle_reduction_ladder(&spec, &tol)?;
        println!(
            "ladder: dim U*1 = {}, dim W*1 = {}, dim ker E = {}, dim A ker E = {}",
            ladder.u1.dim(),
            ladder.w1.dim(),
            ladder.ker_e.dim(),
            ladder.a_ker_e.dim()
        );
        println!(
            "        dim U*1^1 = {}, dim W*1^1 = {}, dim U^1 = {}, dim W^1 = {}, \
             dim U^1*1 = {}, dim W^1*1 = {} (dim ker B = {})",
            ladder.u1c1.dim(),
            ladder.w1c1.dim(),
            ladder.uc1.dim(),
            ladder.wc1.dim(),
            ladder.uc1o1.dim(),
            ladder.wc1o1.dim(),
            ladder.ker_b_dim
        );
    }

    if let Some(f_path) = &args.solve {
        let f = load_vector(f_path, pencil.shape().0)?;
        let outcome = solve_saddle(&spec, &f, &tol)?;
        if let Some(u) = &outcome.solution {
            println!(
                "solve: unique solution, |u| = {:.6e}, residual = {:.3e}",
                u.norm(),
                outcome
                    .certificate
                    .as_ref()
                    .map_or(f64::NAN, |c| c.residual)
            );
            if let Some(path) = &args.solution_out {
                let values: Vec<f64> = u.iter().copied().collect();
                fs::write(path, canonical_document(&json!({ "u": values }))?)?;
            }
        } else {
            println!("solve: singular ({})", outcome.explanation);
            report.warnings.push(outcome.explanation.clone());
        }
    }

    emit(&report, args.format, &args.out)
}

fn load_saddle_spec(path: &Path) -> Result<SaddleSpec> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse("saddle spec must be a JSON object".into()))?;
    let a0 = json_matrix(
        obj.get("A0")
            .ok_or_else(|| Error::Parse("missing matrix `A0`".into()))?,
    )?;
    let b = json_matrix(
        obj.get("B")
            .ok_or_else(|| Error::Parse("missing matrix `B`".into()))?,
    )?;
    let mut spec = SaddleSpec::new(a0, b)?;
    if let (Some(rx), Some(rm)) = (obj.get("RX"), obj.get("RM")) {
        spec = spec.with_gram(json_matrix(rx)?, json_matrix(rm)?)?;
    } else if obj.contains_key("RX") || obj.contains_key("RM") {
        return Err(Error::Parse("provide both RX and RM, or neither".into()));
    }
    Ok(spec)
}

fn json_matrix(v: &Value) -> Result<DMatrix<f64>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("matrix must be an array of rows".into()))?;
    let nrows = rows.len();
    let ncols = rows.first().and_then(|r| r.as_array()).map_or(0, Vec::len);
    let mut out = DMatrix::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("row {i} must be an array")))?;
        if row.len() != ncols {
            return Err(Error::Parse(format!("ragged matrix at row {i}")));
        }
        for (j, cell) in row.iter().enumerate() {
            out[(i, j)] = cell
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("bad number at ({i}, {j})")))?;
        }
    }
    Ok(out)
}

fn load_vector(path: &Path, expected_len: usize) -> Result<DVector<f64>> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    let arr = match &v {
        Value::Array(a) => a.clone(),
        Value::Object(o) => o
            .get("f")
            .and_then(Value::as_array)
            .cloned()
            .ok_or_else(|| Error::Parse("forcing file wants an array or {\"f\": [..]}".into()))?,
        _ => {
            return Err(Error::Parse(
                "forcing file wants an array or {\"f\": [..]}".into(),
            ))
        }
    };
    let values: Vec<f64> = arr
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| Error::Parse("bad forcing entry".into()))
        })
        .collect::<Result<_>>()?;
    if values.len() != expected_len {
        return Err(Error::ShapeMismatch {
            expected: format!("forcing of length {expected_len}"),
            got: format!("length {}", values.len()),
            context: "saddle forcing",
        });
    }
    Ok(DVector::from_vec(values))
}

#[derive(Args)]
pub struct SynthArgs {
    /// Block list, e.g. "J(2,1.5),N(3),L(2),LT(1)".
    #[arg(long, value_name = "SPEC")]
    blocks: String,
    /// Seed for the scrambling equivalence.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scramble by a random equivalence with condition numbers <= 100.
    #[arg(long)]
    scramble: bool,
    /// Output pencil JSON.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Ground-truth sidecar (block spec, seed, shape).
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let spec = BlockSpec::parse(&args.blocks)?;
    let scramble_seed = args.scramble.then_some(args.seed);
    let (pencil, warnings) = if spec.is_real() {
        let s = synthesize::<f64>(&spec, scramble_seed)?;
        (PencilData::Real(s.pencil), s.warnings)
    } else {
        let s = synthesize::<Complex64>(&spec, scramble_seed)?;
        (PencilData::Complex(s.pencil), s.warnings)
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    save_pencil_json(&pencil, &args.out)?;
    if let Some(truth_path) = &args.truth {
        let (m, n) = pencil.shape();
        let truth = json!({
            "schema_version": 1,
            "blocks": spec.to_string(),
            "scrambled": args.scramble,
            "seed": if args.scramble { json!(args.seed) } else { Value::Null },
            "m": m,
            "n": n,
        });
        fs::write(truth_path, to_canonical_string(&truth)? + "\n")?;
    }
    println!(
        "wrote {:?} pencil to {}",
        pencil.shape(),
        args.out.display()
    );
    Ok(())
}
