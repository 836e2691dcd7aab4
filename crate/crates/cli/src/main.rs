//! `boolform` command-line interface.

mod output;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use boolform::complexity::{complexity, enumerate_expansions, expansion_estimate, lambda_bounds_for, Range};
use boolform::enumerate::{count_table, distribution, distribution_dp, Limits, DEFAULT_CAP};
use boolform::patterns::verify_pattern_lemmas;
use boolform::real::DEFAULT_PRECISION;
use boolform::series::{solve_model, SeriesKind};
use boolform::singular::{
    constant_estimate, dominant_singularity, model_ratios, reference_constant, Ladder, Method, Numerics, Target,
};
use boolform::{BoolFunc, Error, ModelId};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use output::{Format, Report};

const EXIT_USAGE: u8 = 64;
const EXIT_NUMERIC: u8 = 70;
const EXIT_CAP: u8 = 75;

#[derive(Parser, Debug)]
#[command(name = "boolform", version, about = "Random And/Or Boolean formulas in four tree models")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    out: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ModelVars {
    #[arg(long, value_parser = parse_model)]
    model: ModelId,
    /// Number of variables n.
    #[arg(long, default_value_t = 1)]
    vars: u32,
}

#[derive(Args, Debug, Clone)]
struct Numeric {
    /// Working precision in bits.
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    precision: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistMethod {
    Exhaustive,
    Dp,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Number of trees of size m.
    Count {
        #[command(flatten)]
        mv: ModelVars,
        #[arg(long)]
        size: usize,
        /// Print every size from 1 to --size.
        #[arg(long)]
        upto: bool,
    },
    /// Number of trees of size m computing each function.
    Distribution {
        #[command(flatten)]
        mv: ModelVars,
        #[arg(long)]
        size: usize,
        #[arg(long, value_enum, default_value_t = DistMethod::Exhaustive)]
        method: DistMethod,
        /// Largest number of trees to generate.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
    /// Exact coefficients of a generating function.
    Series {
        #[command(flatten)]
        mv: ModelVars,
        #[arg(long, default_value = "model", value_parser = parse_kind)]
        kind: SeriesKind,
        /// Coefficients z^0 .. z^(order-1).
        #[arg(long, default_value_t = 16)]
        order: usize,
    },
    /// Dominant singularity of the model.
    Singularity {
        #[command(flatten)]
        mv: ModelVars,
        #[command(flatten)]
        num: Numeric,
        #[arg(long, default_value_t = 30)]
        digits: usize,
    },
    /// Limiting ratio S'(z)/T'(z) at the singularity.
    Ratio {
        #[command(flatten)]
        mv: ModelVars,
        #[command(flatten)]
        num: Numeric,
        #[arg(long, default_value = "st_x", value_parser = parse_kind)]
        kind: SeriesKind,
        #[arg(long, default_value_t = 20)]
        digits: usize,
    },
    /// Limiting constants of True and of a literal, fitted on an n grid.
    ConstantsTable {
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        n_grid: Vec<u32>,
        #[arg(long, value_parser = parse_model)]
        model: Option<ModelId>,
        #[command(flatten)]
        num: Numeric,
    },
    /// Exhaustive check of the pattern lemmas.
    VerifyLemmas {
        #[arg(long, value_parser = parse_model)]
        model: ModelId,
        #[arg(long)]
        max_size: usize,
        #[arg(long, default_value_t = 1)]
        vars: u32,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
    /// Complexity, minimal trees, expansions and bounds of a function.
    Complexity {
        /// Truth table as `n:<vars>:<hex>`, or bare hex together with --vars.
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        vars: Option<u32>,
        #[arg(long, value_parser = parse_model)]
        model: Option<ModelId>,
        /// n at which the expansion estimate is evaluated.
        #[arg(long, default_value_t = 200)]
        n: u32,
        #[command(flatten)]
        num: Numeric,
    },
    /// Constants of every model next to the reference values.
    Report {
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        n_grid: Vec<u32>,
        #[command(flatten)]
        num: Numeric,
    },
}

fn parse_model(s: &str) -> std::result::Result<ModelId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<SeriesKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn models(m: Option<ModelId>) -> Vec<ModelId> {
    m.map_or(ModelId::ALL.to_vec(), |m| vec![m])
}

fn range<T: ToString + Copy>(r: &Range<T>) -> serde_json::Value {
    json!({
        "lower": r.lower.map(|x| x.to_string()),
        "upper": r.upper.map(|x| x.to_string()),
    })
}

fn run(cli: Cli) -> Result<(Report, bool)> {
    let report = match cli.command {
        Command::Count { mv, size, upto } => {
            let table = count_table(mv.model, size, mv.vars)?;
            let from = if upto { 1 } else { size };
            let rows: Vec<Vec<String>> = (from..=size).map(|m| vec![m.to_string(), table[m].to_string()]).collect();
            let counts: Vec<_> = rows.iter().map(|r| json!({"m": r[0].parse::<usize>().unwrap_or(0), "count": r[1]})).collect();
            let r = Report::table(
                vec!["m", "count"],
                rows.clone(),
                json!({"model": mv.model, "n": mv.vars, "counts": counts}),
            );
            if upto {
                r
            } else {
                r.with_scalar(table[size].to_string())
            }
        }
        Command::Distribution { mv, size, method, cap } => {
            let d = match method {
                DistMethod::Exhaustive => distribution(mv.model, size, mv.vars, &Limits::with_cap(cap))?,
                DistMethod::Dp => distribution_dp(mv.model, size, mv.vars)?,
            };
            let rows = d.rows().into_iter().map(|(f, c)| vec![f, c]).collect();
            let mut r = Report::table(vec!["function", "count"], rows, json!({}));
            r.json = d.to_json();
            r
        }
        Command::Series { mv, kind, order } => {
            if order == 0 {
                bail!(Error::Input("order must be positive".into()));
            }
            let s = solve_model(mv.model, mv.vars, order)?;
            let ps = s.get(kind)?;
            let coeffs: Vec<String> = (0..order).map(|k| ps.coeff(k).to_string()).collect();
            let rows = coeffs.iter().enumerate().map(|(k, c)| vec![k.to_string(), c.clone()]).collect();
            Report::table(
                vec!["k", "coeff"],
                rows,
                json!({"model": mv.model, "n": mv.vars, "kind": kind, "order": order, "coefficients": coeffs}),
            )
        }
        Command::Singularity { mv, num, digits } => {
            let r = dominant_singularity(mv.model, mv.vars, num.precision)?;
            let rows = vec![
                vec!["rho".into(), r.rho.to_sci(digits)],
                vec!["value_at_rho".into(), r.value_at_rho.to_sci(digits)],
                vec!["primary_at_rho".into(), r.primary_at_rho.to_sci(digits)],
                vec!["method".into(), serde_json::to_value(r.method)?.as_str().unwrap_or_default().to_string()],
            ];
            let mut j = serde_json::to_value(&r)?;
            j["precision"] = json!(num.precision);
            Report::table(vec!["quantity", "value"], rows, j)
        }
        Command::Ratio { mv, num, kind, digits } => {
            let res = Numerics::with_escalation(mv.model, mv.vars, num.precision, |nm| {
                let m = if mv.model.is_plane() { Method::ClosedForm } else { Method::NumericSystem };
                let rho = nm.singularity(m)?.rho;
                model_ratios(nm, &rho, &[kind], &Ladder::default())
            })?;
            let r = &res[0];
            let rows = vec![vec![kind.to_string(), r.value.to_sci(digits), r.error.to_sci(3)]];
            Report::table(
                vec!["numerator", "ratio", "error"],
                rows,
                json!({"model": mv.model, "n": mv.vars, "numerator": kind, "value": r.value, "error": r.error, "precision": num.precision}),
            )
            .with_scalar(r.value.to_sci(digits))
        }
        Command::ConstantsTable { n_grid, model, num } => {
            let mut rows = Vec::new();
            let mut entries = Vec::new();
            for m in models(model) {
                for t in [Target::True, Target::Literal] {
                    let e = constant_estimate(m, t, &n_grid, num.precision)?;
                    let (reference, form) = reference_constant(m, t);
                    rows.push(vec![
                        m.to_string(),
                        t.to_string(),
                        format!("{:.6}", e.lambda),
                        format!("{:.1e}", e.error),
                        format!("{reference:.6}"),
                        form.to_string(),
                        format!("{:+.2e}", e.lambda - reference),
                    ]);
                    let mut j = serde_json::to_value(&e)?;
                    j["reference"] = json!(reference);
                    j["reference_form"] = json!(form);
                    entries.push(j);
                }
            }
            Report::table(
                vec!["model", "target", "lambda", "error", "reference", "closed_form", "difference"],
                rows,
                json!({"n_grid": n_grid, "precision": num.precision, "rows": entries}),
            )
        }
        Command::VerifyLemmas { model, max_size, vars, cap } => {
            let r = verify_pattern_lemmas(model, max_size, vars, &Limits::with_cap(cap))?;
            let rows = r
                .rows
                .iter()
                .map(|l| {
                    vec![
                        l.name.to_string(),
                        l.checked.to_string(),
                        l.counterexamples.to_string(),
                        if l.passed() { "PASS" } else { "FAIL" }.to_string(),
                    ]
                })
                .collect();
            let passed = r.passed();
            let mut j = serde_json::to_value(&r)?;
            j["passed"] = json!(passed);
            return Ok((Report::table(vec!["lemma", "checked", "counterexamples", "status"], rows, j), passed));
        }
        Command::Complexity { function, vars, model, n, num } => {
            let f: BoolFunc = if function.contains(':') {
                function.parse()?
            } else {
                let v = vars.context("--vars is needed with a bare hex truth table")?;
                format!("n:{v}:{function}").parse()?
            };
            let mut rows = Vec::new();
            let mut entries = Vec::new();
            for m in models(model) {
                let ts = complexity(&f, m, &Limits::default())?;
                if ts.l == 0 {
                    rows.push(vec![m.to_string(), "0".into(), "0".into(), "-".into(), "-".into(), "-".into(), "-".into(), "-".into(), "-".into()]);
                    entries.push(json!({"model": m, "L": 0, "M": 0}));
                    continue;
                }
                let tally = enumerate_expansions(&ts)?;
                let b = lambda_bounds_for(m, ts.l, ts.count())?;
                let est = expansion_estimate(&tally, n, num.precision)?;
                let e = est.estimate.to_f64();
                let within = (b.lambda.lower.is_some() || b.lambda.upper.is_some()).then(|| b.lambda.contains(e));
                rows.push(vec![
                    m.to_string(),
                    ts.l.to_string(),
                    ts.count().to_string(),
                    tally.lambda_t.to_string(),
                    tally.lambda_x.to_string(),
                    b.lambda_t.to_string(),
                    b.lambda_x.to_string(),
                    format!("{:.6}", e),
                    match within {
                        Some(true) => "yes".into(),
                        Some(false) => "no".into(),
                        None => "-".into(),
                    },
                ]);
                entries.push(json!({
                    "model": m,
                    "L": ts.l,
                    "M": ts.count(),
                    "trees": ts.trees.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                    "lambda_t": tally.lambda_t,
                    "lambda_x": tally.lambda_x,
                    "per_tree": tally.per_tree,
                    "bounds": {
                        "lambda": range(&b.lambda),
                        "lambda_t": range(&b.lambda_t),
                        "lambda_x": range(&b.lambda_x),
                    },
                    "estimate": {"n": n, "value": est.estimate, "rho": est.rho, "w1": est.w1, "w2": est.w2},
                    "estimate_within_bounds": within,
                }));
            }
            Report::table(
                vec!["model", "L", "M", "lambda_T", "lambda_X", "T_bounds", "X_bounds", "estimate", "in_bounds"],
                rows,
                json!({"function": f.to_string(), "precision": num.precision, "models": entries}),
            )
        }
        Command::Report { n_grid, num } => {
            let mut rows = Vec::new();
            let mut entries = Vec::new();
            for m in ModelId::ALL {
                let t = constant_estimate(m, Target::True, &n_grid, num.precision)?;
                let l = constant_estimate(m, Target::Literal, &n_grid, num.precision)?;
                let (pt, ft) = reference_constant(m, Target::True);
                let (pl, fl) = reference_constant(m, Target::Literal);
                rows.push(vec![
                    m.to_string(),
                    format!("{:.6}", t.lambda),
                    format!("{pt:.6}"),
                    format!("{:.6}", l.lambda),
                    format!("{pl:.6}"),
                ]);
                entries.push(json!({
                    "model": m,
                    "true": {"lambda": t.lambda, "error": t.error, "reference": pt, "reference_form": ft},
                    "literal": {"lambda": l.lambda, "error": l.error, "reference": pl, "reference_form": fl},
                }));
            }
            Report::table(
                vec!["model", "lambda_true", "reference_true", "lambda_literal", "reference_literal"],
                rows,
                json!({"n_grid": n_grid, "precision": num.precision, "models": entries}),
            )
        }
    };
    Ok((report, true))
}

fn exit_code(e: &anyhow::Error) -> (u8, &'static str) {
    match e.downcast_ref::<Error>() {
        Some(Error::Resource { .. }) => (EXIT_CAP, "resource"),
        Some(Error::Numeric(_)) | Some(Error::IllFounded(_)) => (EXIT_NUMERIC, "numeric"),
        Some(Error::Input(_)) | Some(Error::Structure(_)) | Some(Error::Domain(_)) => (EXIT_USAGE, "usage"),
        None if e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) => (1, "io"),
        None => (EXIT_USAGE, "usage"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = cli.out;
    match run(cli) {
        Ok((report, passed)) => {
            let mut out = std::io::stdout().lock();
            if let Err(e) = report.write(format, &mut out).and_then(|_| Ok(out.flush()?)) {
                eprintln!("{e:#}");
                return ExitCode::from(1);
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let (code, kind) = exit_code(&e);
            let obj = json!({"schema": output::SCHEMA, "error": {"kind": kind, "message": format!("{e:#}"), "exit_code": code}});
            eprintln!("{obj}");
            ExitCode::from(code)
        }
    }
}
