//! Batch command-line front end for the factorization toolkit.
//!
//! Subcommands mirror the library: scalar and matrix factorization with
//! method dispatch, discrete and paired solves, the exponential-system
//! iteration, stability predicates, verification of stored factorizations,
//! and best-effort class detection. Results are written as deterministic
//! JSON plus per-node diagnostics CSV files; failures map to stable exit
//! codes (2 invalid input, 3 numerical failure, 4 not in class) with a
//! machine-readable error object on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::Value;

use whx_core::approx_wh::{
    asymptotic_factor, iterative_exponential_solve, rational_fit_factor, ExponentialSystem,
};
use whx_core::commutative_wh::{
    factor_funcomm, factor_jones, factor_khrapkov, is_functionally_commutative, JonesKernel,
    KhrapkovKernel,
};
use whx_core::contour::{Domain, Factorization, LaurentFunction, MatrixFunction};
use whx_core::discrete_wh::{
    discrete_residual, solve_discrete_wh, toeplitz_truncated_solve, DiscreteOutcome,
    DiscreteWHProblem,
};
use whx_core::error::{WhError, WhResult};
use whx_core::json as wjson;
use whx_core::poly::Poly;
use whx_core::rational_wh::{factor_rational, RationalMatrixFunction};
use whx_core::scalar_rh::{factor_scalar, solve_dual};
use whx_core::stability::{index_sum_check, is_stable, IndexTuple};
use whx_core::triangular_wh::{reduce_triangular_n, Triangular2x2};
use whx_core::Tolerances;

#[derive(Parser)]
#[command(
    name = "whx",
    about = "Constructive and approximate factorization of contour kernels",
    version
)]
struct Cli {
    /// Grid-refinement cap (power of two); WHX_GRID_CAP overrides this.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Residual tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor a nonvanishing scalar kernel.
    FactorScalar(FactorScalarArgs),
    /// Factor a square matrix kernel with explicit or automatic method
    /// dispatch.
    FactorMatrix(FactorMatrixArgs),
    /// Solve a semi-infinite discrete convolution system.
    SolveDiscrete(SolveDiscreteArgs),
    /// Solve the paired system with different kernels on the two ranges.
    SolveDual(SolveDualArgs),
    /// Solve the exponentially coupled pair of one-sided problems.
    SolveExponential(SolveExponentialArgs),
    /// Evaluate the index-tuple stability predicate.
    Stability(StabilityArgs),
    /// Verify a stored factorization against its matrix.
    Verify(VerifyArgs),
    /// Report which constructive classes accept the input.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct FactorScalarArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct FactorMatrixArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// auto, rational, khrapkov, jones, funcomm, triangular, asymptotic,
    /// rational-fit
    #[arg(long, default_value = "auto")]
    method: String,
    /// Perturbation size for the asymptotic method.
    #[arg(long)]
    eps: Option<f64>,
    /// Order cap for the asymptotic method.
    #[arg(long, default_value_t = 12)]
    jmax: usize,
    /// Fit degrees "P/Q" for the rational-fit method.
    #[arg(long)]
    deg: Option<String>,
}

#[derive(Args)]
struct SolveDiscreteArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Also run the truncated direct-solve oracle at this size.
    #[arg(long)]
    oracle: Option<usize>,
}

#[derive(Args)]
struct SolveDualArgs {
    #[arg(long)]
    k1: PathBuf,
    #[arg(long)]
    k2: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SolveExponentialArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    target: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

#[derive(Args)]
struct StabilityArgs {
    /// Comma-separated integer indices, e.g. "1,-1".
    #[arg(long)]
    indices: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    factorization: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut tol = match std::env::var("WHX_GRID_CAP") {
        Ok(v) => match v.parse::<usize>() {
            Ok(cap) => Tolerances::with_grid_cap(cap),
            Err(_) => {
                return fail(WhError::InvalidInput(
                    "WHX_GRID_CAP must be a positive integer".into(),
                ))
            }
        },
        Err(_) => Tolerances::default(),
    };
    if let Some(cap) = cli.grid {
        tol = Tolerances {
            grid_cap: cap.next_power_of_two().max(8),
            ..tol
        };
    }
    if let Some(r) = cli.tol {
        tol.residual = r;
    }
    let result = match &cli.command {
        Command::FactorScalar(args) => run_factor_scalar(args, &tol),
        Command::FactorMatrix(args) => run_factor_matrix(args, &tol),
        Command::SolveDiscrete(args) => run_solve_discrete(args, &tol),
        Command::SolveDual(args) => run_solve_dual(args, &tol),
        Command::SolveExponential(args) => run_solve_exponential(args, &tol),
        Command::Stability(args) => run_stability(args),
        Command::Verify(args) => run_verify(args, &tol),
        Command::Classify(args) => run_classify(args, &tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: WhError) -> ExitCode {
    eprintln!(
        "{{\"error\":{{\"kind\":\"{}\",\"message\":{},\"exit_code\":{}}}}}",
        e.kind(),
        serde_json::to_string(&e.to_string()).unwrap_or_else(|_| "\"\"".into()),
        e.exit_code()
    );
    ExitCode::from(e.exit_code() as u8)
}

fn read_json(path: &Path) -> WhResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| WhError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| WhError::InvalidInput(format!("malformed JSON in {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> WhResult<()> {
    std::fs::write(path, text)
        .map_err(|e| WhError::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Per-node diagnostics plus coefficient-decay tables for a factorization.
fn write_diagnostics(
    output: &Path,
    g: &MatrixFunction,
    fact: &Factorization,
) -> WhResult<(f64, PathBuf, PathBuf)> {
    let n = g
        .alias_free_grid(256)
        .max(fact.plus.alias_free_grid(256))
        .max(fact.minus.alias_free_grid(256));
    let recon = fact.reconstruct();
    let diff = recon.sub(g);
    let per_entry: Vec<Vec<Complex64>> = diff.entries().iter().map(|e| e.samples(n)).collect();
    let plus_defect = fact.plus.defect_plus();
    let minus_defect = fact.minus.defect_minus();
    let mut csv = String::from("angle,residual,plus_defect,minus_defect\n");
    let mut max_residual = 0.0f64;
    let mut residuals = Vec::with_capacity(n);
    for j in 0..n {
        let r = per_entry.iter().map(|s| s[j].norm()).fold(0.0, f64::max);
        max_residual = max_residual.max(r);
        residuals.push(r);
    }
    for (j, r) in residuals.iter().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            wjson::fmt_f64(angle),
            wjson::fmt_f64(*r),
            wjson::fmt_f64(plus_defect),
            wjson::fmt_f64(minus_defect)
        ));
    }
    let diag_path = with_suffix(output, ".diag.csv");
    write_text(&diag_path, &csv)?;
    // coefficient decay per factor entry
    let k_max = fact
        .plus
        .entries()
        .iter()
        .chain(fact.minus.entries())
        .map(|e| e.k_min().unsigned_abs().max(e.k_max().unsigned_abs()))
        .max()
        .unwrap_or(0) as i64;
    let rows = fact.plus.rows();
    let cols = fact.plus.cols();
    let mut decay = String::from("k");
    for i in 0..rows {
        for j in 0..cols {
            decay.push_str(&format!(",plus_{i}{j}"));
        }
    }
    for i in 0..rows {
        for j in 0..cols {
            decay.push_str(&format!(",minus_{i}{j}"));
        }
    }
    decay.push('\n');
    for k in 0..=k_max {
        decay.push_str(&k.to_string());
        for e in fact.plus.entries() {
            decay.push_str(&format!(",{}", wjson::fmt_f64(e.coeff(k).norm())));
        }
        for e in fact.minus.entries() {
            decay.push_str(&format!(",{}", wjson::fmt_f64(e.coeff(-k).norm())));
        }
        decay.push('\n');
    }
    let decay_path = with_suffix(output, ".decay.csv");
    write_text(&decay_path, &decay)?;
    Ok((max_residual, diag_path, decay_path))
}

fn run_factor_scalar(args: &FactorScalarArgs, tol: &Tolerances) -> WhResult<()> {
    let v = read_json(&args.input)?;
    let g = wjson::parse_laurent(&v)?;
    let fact = factor_scalar(&g, tol)?;
    let mut record = Factorization {
        plus: MatrixFunction::new(1, 1, vec![fact.x_plus.clone()], Domain::Circle),
        minus: MatrixFunction::new(1, 1, vec![fact.x_minus.clone()], Domain::Circle),
        partial_indices: vec![fact.kappa],
        residual_inf: 0.0,
        analyticity_defect: fact.analyticity_defect(),
        order: whx_core::contour::FactorOrder::PlusDiagMinus,
    };
    record.plus = record.plus.map_entries(|e| e.cleaned(1e-14));
    record.minus = record.minus.map_entries(|e| e.cleaned(1e-14));
    let g_m = MatrixFunction::new(1, 1, vec![g], Domain::Circle);
    record.measure_against(&g_m);
    write_text(&args.output, &wjson::emit_factorization(&record))?;
    let (max_r, diag, decay) = write_diagnostics(&args.output, &g_m, &record)?;
    println!("factor-scalar: kappa = {}", fact.kappa);
    println!("residual_inf = {}", wjson::fmt_f64(max_r));
    println!(
        "analyticity_defect = {}",
        wjson::fmt_f64(record.analyticity_defect)
    );
    println!("wrote {}", args.output.display());
    println!("wrote {}", diag.display());
    println!("wrote {}", decay.display());
    Ok(())
}

/// Input forms accepted by factor-matrix.
enum MatrixInput {
    Grid(MatrixFunction),
    Rational(RationalMatrixFunction),
    Khrapkov(KhrapkovKernel),
    Jones(JonesKernel),
    Triangular2(Triangular2x2),
}

fn parse_matrix_input(v: &Value) -> WhResult<MatrixInput> {
    let obj = v
        .as_object()
        .ok_or_else(|| WhError::InvalidInput("expected a JSON object".into()))?;
    if let Some(class) = obj.get("class").and_then(Value::as_str) {
        return match class {
            "khrapkov" => {
                let k0 = wjson::parse_laurent(require(obj, "k0")?)?;
                let k1 = wjson::parse_laurent(require(obj, "k1")?)?;
                let j = wjson::parse_poly_matrix(require(obj, "J")?)?;
                let delta2 = wjson::parse_poly(require(obj, "delta2")?)?;
                Ok(MatrixInput::Khrapkov(KhrapkovKernel::new(
                    k0, k1, j, delta2,
                )?))
            }
            "jones" => {
                let a_v = require(obj, "a")?
                    .as_array()
                    .ok_or_else(|| WhError::InvalidInput("field a must be an array".into()))?;
                let coeffs: WhResult<Vec<LaurentFunction>> =
                    a_v.iter().map(wjson::parse_laurent).collect();
                let e = wjson::parse_poly_matrix(require(obj, "E")?)?;
                let q = wjson::parse_poly(require(obj, "q")?)?;
                Ok(MatrixInput::Jones(JonesKernel::new(coeffs?, e, q)?))
            }
            "triangular" => {
                let zeta_v = require(obj, "zeta")?
                    .as_array()
                    .ok_or_else(|| WhError::InvalidInput("field zeta must be an array".into()))?;
                if zeta_v.len() == 2 {
                    let zeta1 = wjson::parse_laurent(&zeta_v[0])?;
                    let zeta2 = wjson::parse_laurent(&zeta_v[1])?;
                    let a = wjson::parse_laurent(require(obj, "a")?)?;
                    Ok(MatrixInput::Triangular2(Triangular2x2 {
                        zeta1,
                        zeta2,
                        coupling: a,
                    }))
                } else {
                    Err(WhError::InvalidInput(
                        "triangular descriptor carries two diagonal entries; pass a full matrix for larger sizes"
                            .into(),
                    ))
                }
            }
            other => Err(WhError::InvalidInput(format!(
                "unknown kernel class {other}"
            ))),
        };
    }
    let entries = obj.get("entries").and_then(Value::as_array);
    if let Some(list) = entries {
        let rational = list
            .first()
            .and_then(Value::as_object)
            .map(|o| o.contains_key("num"))
            .unwrap_or(false);
        if rational {
            return Ok(MatrixInput::Rational(wjson::parse_rational_matrix(v)?));
        }
        return Ok(MatrixInput::Grid(wjson::parse_matrix(v)?));
    }
    Err(WhError::InvalidInput("unrecognized matrix document".into()))
}

fn require<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> WhResult<&'a Value> {
    obj.get(key)
        .ok_or_else(|| WhError::InvalidInput(format!("missing field {key}")))
}

fn lower_triangular(m: &MatrixFunction) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.sup_norm().max(1e-300);
    for i in 0..m.rows() {
        for j in i + 1..m.cols() {
            if m.entry(i, j).sup_norm() > 1e-12 * scale {
                return false;
            }
        }
    }
    true
}

/// Detect a constant traceless deviator: `K = k0 I + k1 J` with `J` the
/// normalized traceless part at the best reference node. Returns the
/// reconstructed kernel when every node fits the decomposition.
fn detect_constant_deviator(m: &MatrixFunction) -> WhResult<Option<KhrapkovKernel>> {
    if m.rows() != 2 || m.cols() != 2 {
        return Ok(None);
    }
    let grid = m.alias_free_grid(128);
    let nodes = whx_core::contour::unit_circle_nodes(grid);
    let values: Vec<Vec<Complex64>> = nodes
        .iter()
        .map(|&t| m.entries().iter().map(|e| e.eval(t)).collect())
        .collect();
    let scale = values
        .iter()
        .flat_map(|v| v.iter().map(|x| x.norm()))
        .fold(0.0, f64::max)
        .max(1e-300);
    let traceless = |v: &[Complex64]| -> Vec<Complex64> {
        let half_tr = (v[0] + v[3]) / 2.0;
        vec![v[0] - half_tr, v[1], v[2], v[3] - half_tr]
    };
    let mut best = (0usize, 0.0f64);
    for (j, v) in values.iter().enumerate() {
        let t = traceless(v);
        let mag = t.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if mag > best.1 {
            best = (j, mag);
        }
    }
    if best.1 < 1e-10 * scale {
        return Ok(None);
    }
    let j_ref = traceless(&values[best.0]);
    let j_scale = j_ref.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let j_norm: Vec<Complex64> = j_ref.iter().map(|x| x / j_scale).collect();
    let jj: Complex64 = j_norm.iter().map(|x| x * x).sum();
    if jj.norm() < 1e-12 {
        return Ok(None);
    }
    let mut k0_samples = Vec::with_capacity(grid);
    let mut k1_samples = Vec::with_capacity(grid);
    for v in &values {
        let t = traceless(v);
        let k1: Complex64 = t
            .iter()
            .zip(&j_norm)
            .map(|(a, b)| a * b)
            .sum::<Complex64>()
            / jj;
        let mut worst = 0.0f64;
        for (a, b) in t.iter().zip(&j_norm) {
            worst = worst.max((a - k1 * b).norm());
        }
        if worst > 1e-8 * scale {
            return Ok(None);
        }
        k0_samples.push((v[0] + v[3]) / 2.0);
        k1_samples.push(k1);
    }
    let k0 = LaurentFunction::from_samples(&k0_samples)?;
    let k1 = LaurentFunction::from_samples(&k1_samples)?;
    let j_mat = whx_core::poly::PolyMatrix::new(
        2,
        2,
        j_norm.iter().map(|&c| Poly::constant(c)).collect(),
    );
    // a traceless 2x2 matrix squares to -det times the identity
    let det = j_norm[0] * j_norm[3] - j_norm[1] * j_norm[2];
    let delta2 = Poly::constant(-det);
    Ok(Some(KhrapkovKernel::new(k0, k1, j_mat, delta2)?))
}

fn run_factor_matrix(args: &FactorMatrixArgs, tol: &Tolerances) -> WhResult<()> {
    let v = read_json(&args.input)?;
    let input = parse_matrix_input(&v)?;
    let method = args.method.as_str();
    let (fact, g, method_used): (Factorization, MatrixFunction, &str) = match (method, input) {
        ("rational", MatrixInput::Rational(m)) | ("auto", MatrixInput::Rational(m)) => {
            let g = m.to_matrix_function(tol)?;
            (factor_rational(&m, tol)?, g, "rational")
        }
        ("khrapkov", MatrixInput::Khrapkov(k)) | ("auto", MatrixInput::Khrapkov(k)) => {
            let g = k.matrix(tol)?;
            (factor_khrapkov(&k, tol)?, g, "khrapkov")
        }
        ("jones", MatrixInput::Jones(k)) | ("auto", MatrixInput::Jones(k)) => {
            let g = k.matrix(tol)?;
            (factor_jones(&k, tol)?, g, "jones")
        }
        ("triangular", MatrixInput::Triangular2(t2)) | ("auto", MatrixInput::Triangular2(t2)) => {
            let g = t2.matrix();
            (chebotarev(&t2, tol)?, g, "triangular")
        }
        ("triangular", MatrixInput::Grid(m)) => {
            let fact = reduce_triangular_n(&m, tol)?;
            (fact, m, "triangular")
        }
        ("khrapkov", MatrixInput::Grid(m)) => {
            let kernel = detect_constant_deviator(&m)?.ok_or_else(|| {
                WhError::NotInClass(
                    "no constant deviator decomposition fits the input".into(),
                )
            })?;
            (factor_khrapkov(&kernel, tol)?, m, "khrapkov")
        }
        ("funcomm", MatrixInput::Grid(m)) => {
            let fact = factor_funcomm(&m, tol)?;
            (fact, m, "funcomm")
        }
        ("asymptotic", MatrixInput::Grid(m)) => {
            let eps = args.eps.ok_or_else(|| {
                WhError::InvalidInput("the asymptotic method requires --eps".into())
            })?;
            // the input is M = I + eps G
            let n = m.rows();
            let id = MatrixFunction::identity(n, Domain::Circle);
            let g_part = m.sub(&id).scale(Complex64::new(1.0 / eps, 0.0));
            let (fact, state) = asymptotic_factor(&g_part, eps, args.jmax, tol.residual, tol)?;
            println!(
                "asymptotic: {} order(s), final defect {}",
                state.step,
                wjson::fmt_f64(*state.delta_norm_history.last().unwrap_or(&f64::NAN))
            );
            (fact, m, "asymptotic")
        }
        ("rational-fit", MatrixInput::Grid(m)) => {
            let deg = args
                .deg
                .as_deref()
                .ok_or_else(|| WhError::InvalidInput("rational-fit requires --deg P/Q".into()))?;
            let (p, q) = parse_degrees(deg)?;
            let fit = rational_fit_factor(&m, p, q, tol)?;
            println!(
                "rational-fit: fit_error = {}, factor residual vs original = {}",
                wjson::fmt_f64(fit.fit_error),
                wjson::fmt_f64(fit.factor_residual)
            );
            (fit.factorization, m, "rational-fit")
        }
        ("auto", MatrixInput::Grid(m)) => auto_dispatch(m, tol)?,
        (name, _) => {
            return Err(WhError::InvalidInput(format!(
                "method {name} does not accept this input form"
            )))
        }
    };
    let mut fact = fact;
    fact.plus = fact.plus.map_entries(|e| e.cleaned(1e-14));
    fact.minus = fact.minus.map_entries(|e| e.cleaned(1e-14));
    write_text(&args.output, &wjson::emit_factorization(&fact))?;
    let (max_r, diag, decay) = write_diagnostics(&args.output, &g, &fact)?;
    let indices: Vec<String> = fact.partial_indices.iter().map(|k| k.to_string()).collect();
    let tuple = IndexTuple::new(fact.partial_indices.clone())?;
    println!("factor-matrix: method = {method_used}");
    println!("partial_indices = [{}]", indices.join(", "));
    println!(
        "stability = {}",
        if is_stable(&tuple) { "stable" } else { "unstable" }
    );
    println!("residual_inf = {}", wjson::fmt_f64(max_r));
    println!(
        "analyticity_defect = {}",
        wjson::fmt_f64(fact.analyticity_defect)
    );
    println!("wrote {}", args.output.display());
    println!("wrote {}", diag.display());
    println!("wrote {}", decay.display());
    Ok(())
}

fn chebotarev(t2: &Triangular2x2, tol: &Tolerances) -> WhResult<Factorization> {
    whx_core::triangular_wh::chebotarev_2x2(t2, tol).map(|(_, f)| f)
}

fn auto_dispatch(
    m: MatrixFunction,
    tol: &Tolerances,
) -> WhResult<(Factorization, MatrixFunction, &'static str)> {
    if lower_triangular(&m) {
        let fact = reduce_triangular_n(&m, tol)?;
        return Ok((fact, m, "triangular"));
    }
    if let Some(kernel) = detect_constant_deviator(&m)? {
        if let Ok(fact) = factor_khrapkov(&kernel, tol) {
            return Ok((fact, m, "khrapkov"));
        }
    }
    let (funcomm, _) = is_functionally_commutative(&m, 32);
    if funcomm {
        let fact = factor_funcomm(&m, tol)?;
        return Ok((fact, m, "funcomm"));
    }
    Err(WhError::NotInClass(
        "no exact constructive class accepts the input; use an approximate method explicitly"
            .into(),
    ))
}

fn parse_degrees(spec: &str) -> WhResult<(usize, usize)> {
    let parts: Vec<&str> = spec.split('/').collect();
    if parts.len() != 2 {
        return Err(WhError::InvalidInput("degrees must look like P/Q".into()));
    }
    let p = parts[0]
        .parse()
        .map_err(|_| WhError::InvalidInput("bad numerator degree".into()))?;
    let q = parts[1]
        .parse()
        .map_err(|_| WhError::InvalidInput("bad denominator degree".into()))?;
    Ok((p, q))
}

fn run_solve_discrete(args: &SolveDiscreteArgs, tol: &Tolerances) -> WhResult<()> {
    let kernel = wjson::parse_sequence(&read_json(&args.kernel)?)?;
    let rhs = wjson::parse_sequence(&read_json(&args.rhs)?)?;
    let problem = DiscreteWHProblem::new(kernel, rhs, None)?;
    let outcome = solve_discrete_wh(&problem, tol)?;
    let x = outcome.solution();
    let d = outcome.extension();
    let residual = discrete_residual(&problem, x, x.values.len().max(32));
    let (tag, extra) = match &outcome {
        DiscreteOutcome::Unique { .. } => ("unique", String::new()),
        DiscreteOutcome::Family { basis, .. } => {
            let members: Vec<String> = basis.iter().map(wjson::emit_sequence).collect();
            ("family", format!(",\"family\":[{}]", members.join(",")))
        }
        DiscreteOutcome::Conditional { moments, .. } => {
            let ms: Vec<String> = moments.iter().map(|&m| wjson::fmt_complex(m)).collect();
            ("conditional", format!(",\"moments\":[{}]", ms.join(",")))
        }
    };
    let mut oracle_note = String::new();
    if let Some(n) = args.oracle {
        let oracle = toeplitz_truncated_solve(&problem, n, tol)?;
        let mut dev = 0.0f64;
        for k in 0..(n as i64) {
            dev = dev.max((x.get(k) - oracle.get(k)).norm());
        }
        oracle_note = format!(",\"oracle_deviation\":{}", wjson::fmt_f64(dev));
        println!("oracle (n = {n}): max deviation = {}", wjson::fmt_f64(dev));
    }
    let doc = format!(
        "{{\"outcome\":\"{tag}\",\"x\":{},\"d\":{},\"residual\":{}{extra}{oracle_note}}}",
        wjson::emit_sequence(x),
        wjson::emit_sequence(d),
        wjson::fmt_f64(residual)
    );
    write_text(&args.output, &doc)?;
    println!("solve-discrete: outcome = {tag}");
    println!("residual = {}", wjson::fmt_f64(residual));
    println!("wrote {}", args.output.display());
    Ok(())
}

fn run_solve_dual(args: &SolveDualArgs, tol: &Tolerances) -> WhResult<()> {
    let k1 = wjson::parse_laurent(&read_json(&args.k1)?)?;
    let k2 = wjson::parse_laurent(&read_json(&args.k2)?)?;
    let g = wjson::parse_laurent(&read_json(&args.rhs)?)?;
    let f = solve_dual(&k1, &k2, &g, tol)?;
    let one = LaurentFunction::one();
    let (r1, r2) = whx_core::scalar_rh::paired_residuals(&one.add(&k1), &one.add(&k2), &g, &f);
    let doc = format!(
        "{{\"f\":{},\"residual_plus\":{},\"residual_minus\":{}}}",
        wjson::emit_laurent(&f),
        wjson::fmt_f64(r1),
        wjson::fmt_f64(r2)
    );
    write_text(&args.output, &doc)?;
    println!(
        "solve-dual: residuals = {}, {}",
        wjson::fmt_f64(r1),
        wjson::fmt_f64(r2)
    );
    println!("wrote {}", args.output.display());
    Ok(())
}

fn run_solve_exponential(args: &SolveExponentialArgs, tol: &Tolerances) -> WhResult<()> {
    let v = read_json(&args.system)?;
    let obj = v
        .as_object()
        .ok_or_else(|| WhError::InvalidInput("expected a system object".into()))?;
    let a = wjson::parse_laurent(require(obj, "A")?)?;
    let b = wjson::parse_laurent(require(obj, "B")?)?;
    let c = wjson::parse_laurent(require(obj, "C")?)?;
    let f1 = wjson::parse_laurent(require(obj, "f1")?)?;
    let f2 = wjson::parse_laurent(require(obj, "f2")?)?;
    let l = require(obj, "L")?
        .as_u64()
        .ok_or_else(|| WhError::InvalidInput("L must be a positive integer".into()))?;
    let sys = ExponentialSystem::new(a, b, c, f1, f2, l as u32)?;
    let sol = iterative_exponential_solve(&sys, args.target, args.max_iter, tol)?;
    let final_residual = *sol.residual_history.last().unwrap_or(&f64::NAN);
    let doc = format!(
        "{{\"psi_plus_0\":{},\"psi_plus_L\":{},\"phi_minus_0\":{},\"phi_minus_L\":{},\"iterations\":{},\"residual\":{}}}",
        wjson::emit_laurent(&sol.psi_plus_0),
        wjson::emit_laurent(&sol.psi_plus_l),
        wjson::emit_laurent(&sol.phi_minus_0),
        wjson::emit_laurent(&sol.phi_minus_l),
        sol.iterations,
        wjson::fmt_f64(final_residual)
    );
    write_text(&args.output, &doc)?;
    println!(
        "solve-exponential: {} iteration(s), residual {}",
        sol.iterations,
        wjson::fmt_f64(final_residual)
    );
    println!("wrote {}", args.output.display());
    Ok(())
}

fn run_stability(args: &StabilityArgs) -> WhResult<()> {
    let kappas: WhResult<Vec<i64>> = args
        .indices
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| WhError::InvalidInput(format!("bad index {s}")))
        })
        .collect();
    let tuple = IndexTuple::new(kappas?)?;
    let sorted: Vec<String> = tuple.kappas().iter().map(|k| k.to_string()).collect();
    println!(
        "{{\"indices\":[{}],\"sum\":{},\"spread\":{},\"stable\":{}}}",
        sorted.join(","),
        tuple.sum(),
        tuple.spread(),
        is_stable(&tuple)
    );
    Ok(())
}

fn run_verify(args: &VerifyArgs, tol: &Tolerances) -> WhResult<()> {
    let g = wjson::parse_matrix(&read_json(&args.matrix)?)?;
    let fact = wjson::parse_factorization(&read_json(&args.factorization)?)?;
    let report = index_sum_check(&g, &fact, tol)?;
    println!(
        "{{\"winding_of_det\":{},\"index_sum\":{},\"residual\":{},\"pass\":{}}}",
        report.winding_of_det,
        report.index_sum,
        wjson::fmt_f64(report.residual),
        report.pass
    );
    Ok(())
}

fn run_classify(args: &ClassifyArgs, tol: &Tolerances) -> WhResult<()> {
    let v = read_json(&args.input)?;
    let input = parse_matrix_input(&v)?;
    let mut findings: Vec<(String, bool, String)> = Vec::new();
    let grid_matrix = match input {
        MatrixInput::Rational(m) => {
            findings.push((
                "rational".into(),
                true,
                "entries supplied as numerator/denominator polynomials".into(),
            ));
            m.to_matrix_function(tol)?
        }
        MatrixInput::Khrapkov(k) => {
            findings.push((
                "khrapkov".into(),
                true,
                "descriptor supplied with a valid deviator".into(),
            ));
            k.matrix(tol)?
        }
        MatrixInput::Jones(k) => {
            findings.push((
                "jones".into(),
                true,
                "descriptor supplied with a valid structure matrix".into(),
            ));
            k.matrix(tol)?
        }
        MatrixInput::Triangular2(t2) => t2.matrix(),
        MatrixInput::Grid(m) => m,
    };
    if !grid_matrix.is_square() {
        return Err(WhError::InvalidInput(
            "classification needs a square matrix".into(),
        ));
    }
    let tri = lower_triangular(&grid_matrix);
    findings.push((
        "triangular".into(),
        tri,
        if tri {
            "strictly upper part vanishes".into()
        } else {
            let upper: f64 = (0..grid_matrix.rows())
                .flat_map(|i| {
                    let m = &grid_matrix;
                    (i + 1..m.cols()).map(move |j| m.entry(i, j).sup_norm())
                })
                .fold(0.0, f64::max);
            format!("upper part has sup norm {}", wjson::fmt_f64(upper))
        },
    ));
    match detect_constant_deviator(&grid_matrix)? {
        Some(kernel) => {
            findings.push((
                "khrapkov".into(),
                true,
                format!(
                    "constant deviator recovered; k0(1) = {}, k1(1) = {}",
                    wjson::fmt_complex(kernel.k0.eval(Complex64::new(1.0, 0.0))),
                    wjson::fmt_complex(kernel.k1.eval(Complex64::new(1.0, 0.0)))
                ),
            ));
        }
        None => {
            if grid_matrix.rows() == 2 {
                findings.push((
                    "khrapkov".into(),
                    false,
                    "no constant deviator fits the traceless part".into(),
                ));
            }
        }
    }
    let (funcomm, witness) = is_functionally_commutative(&grid_matrix, 32);
    findings.push((
        "funcomm".into(),
        funcomm,
        match witness {
            None => "values commute on the sampled pairs".into(),
            Some(w) => format!(
                "violation with commutator norm {}",
                wjson::fmt_f64(w.commutator_norm)
            ),
        },
    ));
    let applicable: Vec<&str> = findings
        .iter()
        .filter(|(_, ok, _)| *ok)
        .map(|(name, _, _)| name.as_str())
        .collect();
    let classes: Vec<String> = findings
        .iter()
        .map(|(name, ok, evidence)| {
            format!(
                "{{\"name\":\"{}\",\"applicable\":{},\"evidence\":{}}}",
                name,
                ok,
                serde_json::to_string(evidence).unwrap_or_else(|_| "\"\"".into())
            )
        })
        .collect();
    println!(
        "{{\"classes\":[{}],\"recommended\":{},\"note\":\"membership tests are sufficient, not exhaustive\"}}",
        classes.join(","),
        serde_json::to_string(&applicable).unwrap_or_else(|_| "[]".into())
    );
    Ok(())
}
