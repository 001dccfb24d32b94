//! `laakso`: spectra, heat traces and zeta functions of Laakso spaces
//! from the command line.
//!
//! Every command writes one document (JSON by default, CSV on request)
//! to stdout or `--out`. The document starts with the resolved
//! configuration so a run can be repeated exactly.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use laakso::compare::{compare, mesh_for_trusted, CompareOptions};
use laakso::eigen::{Method, SolverOptions};
use laakso::heat::{
    estimate_spectral_dimension, heat_trace_capped, heat_trace_grid, leading_term_j2, leading_term_j23, log_grid,
    log_period, poles, secondary_poles, spectral_zeta_closed, spectral_zeta_direct,
};
use laakso::reference::diff_table1;
use laakso::sequence::{dimensions, hausdorff_estimate, SequenceKind};
use laakso::spectrum::{first_distinct, full_spectrum_with, level_spectrum_with};
use laakso::{Complex64, Error, Execution, JSequence};
use serde::Serialize;
use serde_json::{json, Value};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "laakso", version, about = "Laplacian spectra of Laakso spaces")]
struct Cli {
    /// Defining sequence: "k" (constant), "a,b,..." (periodic) or "seq:a,b,..." (explicit prefix).
    #[arg(short = 'j', long = "seq", global = true, value_name = "SPEC")]
    seq: Option<String>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the document here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Seed of the eigensolver start block.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distinct eigenvalues with multiplicities.
    Spectrum(SpectrumArgs),
    /// Discretize F_n, solve numerically and match against the exact spectrum of F_n.
    Compare(CompareArgs),
    /// Hausdorff, spectral and walk dimensions.
    Dims,
    /// Heat-kernel trace over a grid of times.
    Heat(HeatArgs),
    /// Spectral zeta function, closed form and direct sum.
    Zeta(ZetaArgs),
    /// Complex dimensions (poles of the spectral zeta function).
    Poles(PolesArgs),
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// First N distinct eigenvalues.
    #[arg(long, conflicts_with = "lambda_max")]
    count: Option<usize>,
    /// Every eigenvalue up to this bound.
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Only levels up to n (the spectrum of F_n).
    #[arg(long)]
    level: Option<usize>,
    /// Diff against embedded reference data; exit 3 on any difference.
    #[arg(long, value_enum)]
    expect: Option<Expect>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Expect {
    Table1,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Level of the graph F_n.
    #[arg(short = 'n', long)]
    level: usize,
    /// Interior mesh points per edge; default: enough to trust 15 distinct eigenvalues.
    #[arg(short = 'm', long)]
    mesh: Option<usize>,
    /// Eigenvalues to compute; 0 means all below the trust cutoff.
    #[arg(short = 'k', long, default_value_t = 0)]
    count: usize,
    /// Residual tolerance of the eigensolver.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Relative gap separating clusters.
    #[arg(long, default_value_t = 1e-4)]
    rel_gap: f64,
    /// Allowed relative error of a matched value.
    #[arg(long, default_value_t = 5e-3)]
    value_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Args, Debug)]
struct HeatArgs {
    /// Times: a single value or "a:b:Nlog" for N log-spaced points.
    #[arg(long = "t", value_name = "GRID")]
    t: String,
    /// Bound on the omitted part of each trace.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Sum levels up to this one only (needed for explicit sequences).
    #[arg(long)]
    level_cap: Option<usize>,
    /// Fit the spectral dimension to the log-log slope.
    #[arg(long)]
    fit_ds: bool,
    /// Compare with the small-time leading terms (sequences 2 and 2,3 only).
    #[arg(long)]
    asymptotic: bool,
    /// Oscillatory terms kept in the leading-term formulas.
    #[arg(long, default_value_t = 5)]
    terms: usize,
}

#[derive(Args, Debug)]
struct ZetaArgs {
    /// Points: "x", "x+yi", "x-yi" or "yi". Repeat or separate with ';'.
    #[arg(short = 's', required = true, allow_hyphen_values = true, value_delimiter = ';')]
    s: Vec<String>,
    /// Cutoff of the table behind the direct sum.
    #[arg(long, default_value_t = 1e5)]
    lambda_max: f64,
}

#[derive(Args, Debug)]
struct PolesArgs {
    /// Index range "lo:hi" (inclusive).
    #[arg(short = 'm', long = "range", default_value = "-3:3", allow_hyphen_values = true)]
    range: String,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL };
        Failure { code, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_VALIDATION, message: message.into() }
}

/// What a command produced.
struct Report {
    config: Value,
    notes: Vec<String>,
    json: Value,
    /// Header line and rows.
    csv: String,
    /// Exit code after the report is written.
    code: u8,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    configure_threads(cli.threads)?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let spec = cli.seq.as_deref().ok_or_else(|| invalid("a sequence is required (-j SPEC)"))?;
    let seq = JSequence::parse(spec)?;

    let mut report = match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(&seq, a, exec)?,
        Command::Compare(a) => cmd_compare(&seq, a, cli.seed, exec)?,
        Command::Dims => cmd_dims(&seq)?,
        Command::Heat(a) => cmd_heat(&seq, a, exec)?,
        Command::Zeta(a) => cmd_zeta(&seq, a, exec)?,
        Command::Poles(a) => cmd_poles(&seq, a)?,
    };

    let mut config = json!({
        "command": command_name(&cli.command),
        "sequence": seq.to_string(),
        "format": cli.format,
        "seed": cli.seed,
        "execution": exec,
    });
    if let (Value::Object(base), Value::Object(extra)) = (&mut config, report.config.take()) {
        base.extend(extra);
    }
    let text = match cli.format {
        Format::Json => {
            let doc = json!({ "config": config, "notes": report.notes, "result": report.json });
            serde_json::to_string_pretty(&doc).expect("documents always serialize") + "\n"
        }
        Format::Csv => {
            let mut out = String::new();
            if let Value::Object(map) = &config {
                for (k, v) in map {
                    let v = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    out.push_str(&format!("# {k}={v}\n"));
                }
            }
            for note in &report.notes {
                out.push_str(&format!("# note: {note}\n"));
            }
            out + &report.csv
        }
    };
    match &cli.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure { code: EXIT_VALIDATION, message: format!("{}: {e}", path.display()) })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    Ok(report.code)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Spectrum(_) => "spectrum",
        Command::Compare(_) => "compare",
        Command::Dims => "dims",
        Command::Heat(_) => "heat",
        Command::Zeta(_) => "zeta",
        Command::Poles(_) => "poles",
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: usize) -> Result<(), Failure> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_threads: usize) -> Result<(), Failure> {
    Ok(())
}

fn finite_positive(name: &str, x: f64) -> Result<f64, Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

// ---------------------------------------------------------------------------

fn cmd_spectrum(seq: &JSequence, a: &SpectrumArgs, exec: Execution) -> Result<Report, Failure> {
    let mut table = match (a.count, a.lambda_max) {
        (Some(count), None) => first_distinct(seq, a.level, count)?,
        (None, Some(lm)) => match a.level {
            Some(n) => level_spectrum_with(seq, n, lm, exec)?,
            None => full_spectrum_with(seq, lm, exec)?,
        },
        _ => return Err(invalid("give exactly one of --count or --lambda-max")),
    };
    if let Some(count) = a.count {
        table.truncate(count);
    }

    let mut notes = Vec::new();
    if seq.kind() == SequenceKind::Explicit {
        let len = seq.values().len();
        notes.push(format!("explicit prefix of length {len}: levels above {len} are excluded"));
    }
    if table.prefix_exhausted {
        notes.push(format!(
            "levels beyond the prefix would contribute below {}; the table is a lower bound on multiplicities",
            table.lambda_max
        ));
    }

    let mut code = 0;
    let mut diffs = Value::Null;
    if let Some(Expect::Table1) = a.expect {
        if *seq != JSequence::periodic(&[2, 3])? || a.level.is_some() {
            return Err(invalid("--expect table1 applies to the full spectrum of the sequence 2,3"));
        }
        let d = diff_table1(&table);
        for x in &d {
            eprintln!("table1 k={}: {} expected {}, got {}", x.k, x.field, x.expected, x.got);
        }
        notes.push(format!("table1: {} difference(s)", d.len()));
        if !d.is_empty() {
            code = EXIT_MISMATCH;
        }
        diffs = Value::Array(
            d.iter()
                .map(|x| json!({ "k": x.k, "field": x.field, "expected": x.expected, "got": x.got }))
                .collect(),
        );
    }

    let mut result = serde_json::to_value(&table).expect("tables serialize");
    if !diffs.is_null() {
        result["table1_diffs"] = diffs;
    }
    Ok(Report {
        config: json!({
            "count": a.count,
            "lambda_max": a.lambda_max,
            "level": a.level,
            "expect": a.expect.map(|_| "table1"),
        }),
        notes,
        json: result,
        csv: table.to_csv(),
        code,
    })
}

fn cmd_compare(seq: &JSequence, a: &CompareArgs, seed: u64, exec: Execution) -> Result<Report, Failure> {
    finite_positive("--tol", a.tol)?;
    let mesh = match a.mesh {
        Some(m) => m,
        None => mesh_for_trusted(seq, a.level, 15)?.max(1),
    };
    let method = match a.method {
        MethodArg::Auto => Method::Auto,
        MethodArg::Dense => Method::Dense,
        MethodArg::Lanczos => Method::Lanczos,
    };
    let opts = CompareOptions {
        points_per_edge: mesh,
        k: a.count,
        rel_gap: a.rel_gap,
        value_tol: a.value_tol,
        solver: SolverOptions { method, tol: a.tol, seed, exec, ..SolverOptions::default() },
    };
    let report = compare(seq, a.level, &opts)?;

    let mut notes = vec![format!(
        "dimension {}, trust cutoff {:.6}, {} of {} eigenvalues converged",
        report.dimension, report.trust_cutoff, report.k_converged, report.k_solved
    )];
    let mut code = 0;
    if report.k_converged < report.k_solved {
        notes.push("eigensolver did not converge every requested eigenvalue".into());
        code = EXIT_NUMERICAL;
    }
    let failures = report.failures().count();
    if failures > 0 {
        notes.push(format!(
            "{failures} row(s) disagree below the trust cutoff ({} multiplicity mismatch(es))",
            report.multiplicity_mismatches()
        ));
        code = EXIT_MISMATCH;
    }
    Ok(Report {
        config: json!({
            "level": a.level,
            "mesh": mesh,
            "k": a.count,
            "tol": a.tol,
            "method": method,
            "rel_gap": a.rel_gap,
            "value_tol": a.value_tol,
        }),
        notes,
        json: serde_json::to_value(&report).expect("reports serialize"),
        csv: report.to_csv(),
        code,
    })
}

fn cmd_dims(seq: &JSequence) -> Result<Report, Failure> {
    let d = dimensions(seq)?;
    let estimate = hausdorff_estimate(seq, 100 * seq.period().unwrap_or(1))?;
    let rows = [
        ("r", d.r),
        ("hausdorff", d.hausdorff),
        ("spectral", d.spectral),
        ("walk", d.walk),
        ("einstein_spectral", d.einstein_spectral()),
        ("hausdorff_at_100_periods", estimate),
    ];
    let mut csv = String::from("quantity,value\n");
    let mut map = serde_json::Map::new();
    for (k, v) in rows {
        csv.push_str(&format!("{k},{v}\n"));
        map.insert(k.into(), json!(v));
    }
    Ok(Report { config: json!({}), notes: Vec::new(), json: Value::Object(map), csv, code: 0 })
}

/// `"x"` or `"a:b:Nlog"`.
fn parse_t_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| invalid(format!("bad number {s:?} in t grid")));
    match parts.as_slice() {
        [x] => Ok(vec![finite_positive("t", num(x)?)?]),
        [a, b, n] => {
            let count = n
                .trim()
                .strip_suffix("log")
                .ok_or_else(|| invalid(format!("t grid point count must end in 'log', got {n:?}")))?;
            let count: usize = count.parse().map_err(|_| invalid(format!("bad point count {n:?}")))?;
            Ok(log_grid(num(a)?, num(b)?, count)?)
        }
        _ => Err(invalid(format!("t grid must be 'x' or 'a:b:Nlog', got {text:?}"))),
    }
}

fn cmd_heat(seq: &JSequence, a: &HeatArgs, exec: Execution) -> Result<Report, Failure> {
    let ts = parse_t_grid(&a.t)?;
    finite_positive("--tol", a.tol)?;
    let samples = match a.level_cap {
        None => heat_trace_grid(seq, &ts, a.tol, exec)?,
        Some(cap) => ts.iter().map(|&t| heat_trace_capped(seq, t, a.tol, Some(cap))).collect::<Result<_, _>>()?,
    };

    let mut notes = Vec::new();
    let mut summary = serde_json::Map::new();
    if a.fit_ds {
        let ds = estimate_spectral_dimension(&samples, log_period(seq)?)?;
        let want = dimensions(seq)?.spectral;
        notes.push(format!("fitted spectral dimension {ds:.4} (exact {want:.4})"));
        summary.insert("fitted_spectral_dimension".into(), json!(ds));
        summary.insert("spectral_dimension".into(), json!(want));
    }

    let leading: Option<fn(f64, usize) -> laakso::Result<f64>> = if !a.asymptotic {
        None
    } else if *seq == JSequence::constant(2)? {
        Some(leading_term_j2)
    } else if *seq == JSequence::periodic(&[2, 3])? {
        Some(leading_term_j23)
    } else {
        notes.push("leading terms are available only for the sequences 2 and 2,3; --asymptotic ignored".into());
        None
    };

    let mut rows = Vec::with_capacity(samples.len());
    let mut csv = String::from(if leading.is_some() {
        "t,z,tail_bound,levels,leading,relative_difference\n"
    } else {
        "t,z,tail_bound,levels\n"
    });
    for s in &samples {
        let mut row = json!({ "t": s.t, "z": s.z, "tail_bound": s.tail_bound, "levels": s.levels });
        match leading {
            Some(f) => {
                let l = f(s.t, a.terms)?;
                let rel = (l - s.z) / s.z;
                row["leading"] = json!(l);
                row["relative_difference"] = json!(rel);
                csv.push_str(&format!("{:e},{:e},{:e},{},{:e},{:e}\n", s.t, s.z, s.tail_bound, s.levels, l, rel));
            }
            None => csv.push_str(&format!("{:e},{:e},{:e},{}\n", s.t, s.z, s.tail_bound, s.levels)),
        }
        rows.push(row);
    }
    summary.insert("samples".into(), Value::Array(rows));
    Ok(Report {
        config: json!({
            "t": a.t,
            "points": ts.len(),
            "tol": a.tol,
            "level_cap": a.level_cap,
            "fit_ds": a.fit_ds,
            "asymptotic": a.asymptotic,
            "terms": a.terms,
        }),
        notes,
        json: Value::Object(summary),
        csv,
        code: 0,
    })
}

/// `"x"`, `"x+yi"`, `"x-yi"` or `"yi"`.
fn parse_complex(text: &str) -> Result<Complex64, Failure> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || invalid(format!("bad complex number {text:?}"));
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0));
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| {
        (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
    });
    let imag = |s: &str| -> Result<f64, Failure> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => Ok(Complex64::new(body[..i].parse().map_err(|_| bad())?, imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn cmd_zeta(seq: &JSequence, a: &ZetaArgs, exec: Execution) -> Result<Report, Failure> {
    finite_positive("--lambda-max", a.lambda_max)?;
    let points: Vec<Complex64> = a.s.iter().map(|s| parse_complex(s)).collect::<Result<_, _>>()?;
    let table = full_spectrum_with(seq, a.lambda_max, exec)?;
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    let mut csv = String::from("s_re,s_im,closed_re,closed_im,direct_re,direct_im,direct_remainder_bound\n");
    for s in points {
        let closed = spectral_zeta_closed(seq, s)?;
        // The direct sum only converges right of the abscissa.
        let direct = match spectral_zeta_direct(&table, s) {
            Ok(d) => Some(d),
            Err(e @ Error::Divergent { .. }) => {
                notes.push(format!("s = {s}: direct sum skipped ({e})"));
                None
            }
            Err(e) => return Err(e.into()),
        };
        let cell = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        csv.push_str(&format!(
            "{:e},{:e},{:e},{:e},{},{},{}\n",
            s.re,
            s.im,
            closed.re,
            closed.im,
            cell(direct.map(|d| d.value.re)),
            cell(direct.map(|d| d.value.im)),
            cell(direct.map(|d| d.remainder_bound)),
        ));
        rows.push(json!({
            "s": [s.re, s.im],
            "closed": [closed.re, closed.im],
            "direct": direct.map(|d| json!({
                "value": [d.value.re, d.value.im],
                "tail": d.tail,
                "remainder_bound": d.remainder_bound,
            })),
        }));
    }
    Ok(Report {
        config: json!({ "s": a.s, "lambda_max": a.lambda_max }),
        notes,
        json: Value::Array(rows),
        csv,
        code: 0,
    })
}

fn cmd_poles(seq: &JSequence, a: &PolesArgs) -> Result<Report, Failure> {
    let (lo, hi) = a
        .range
        .split_once(':')
        .and_then(|(lo, hi)| Some((lo.trim().parse::<i64>().ok()?, hi.trim().parse::<i64>().ok()?)))
        .ok_or_else(|| invalid(format!("pole range must be 'lo:hi', got {:?}", a.range)))?;
    let main = poles(seq, lo, hi)?;
    let second = secondary_poles(seq, lo, hi)?;

    let mut csv = String::from("lattice,m,re,im\n");
    let mut lattices = Vec::new();
    for (name, lat) in [("leading", Some(&main)), ("secondary", second.as_ref())] {
        let Some(lat) = lat else { continue };
        for (m, s) in &lat.members {
            csv.push_str(&format!("{name},{m},{:e},{:e}\n", s.re, s.im));
        }
        lattices.push(json!({
            "lattice": name,
            "real_part": lat.real_part,
            "spacing": lat.spacing,
            "log_period": lat.log_period(),
            "members": lat.members.iter().map(|(m, s)| json!({ "m": m, "re": s.re, "im": s.im })).collect::<Vec<_>>(),
        }));
    }
    let notes = vec![format!("spacing {:.12} = pi / {:.12}", main.spacing, PI / main.spacing)];
    Ok(Report { config: json!({ "range": a.range }), notes, json: Value::Array(lattices), csv, code: 0 })
}
