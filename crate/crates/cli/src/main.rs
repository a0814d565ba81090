use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use temporal_qcsp::csp::{compile, Engine};
use temporal_qcsp::harness::{run_fuzz, run_known_facts, Fixtures, FuzzConfig, FuzzMode};
use temporal_qcsp::instance::{
    parse_document, CspInstance, Document, Instance, QcspInstance, RelationDecl,
};
use temporal_qcsp::normal_forms::{
    min_affine_form, min_clause_form, pp_clause_form, render_conjunction,
};
use temporal_qcsp::oracle::brute_instance;
use temporal_qcsp::qcsp::{brute_qcsp, solve_qcsp, SolveTrace};
use temporal_qcsp::{Error, Operation, Rational};

#[derive(Parser)]
#[command(
    name = "tqcsp",
    version,
    about = "Temporal CSP and QCSP toolkit over the rationals"
)]
struct Cli {
    /// Solver used by `solve` and `fuzz`.
    #[arg(long, global = true, value_enum, default_value_t = EngineArg::Auto)]
    engine: EngineArg,
    /// Print the per-level QCSP trace.
    #[arg(long, global = true)]
    trace: bool,
    /// Base seed for `fuzz`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Min,
    Mx,
    Auto,
    Brute,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Min,
    Pp,
    Mxaffine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Csp,
    Qcsp,
    NormalForm,
    Preserve,
}

#[derive(Subcommand)]
enum Command {
    /// Check whether a declared relation is preserved by an operation.
    CheckPoly {
        file: PathBuf,
        relation: String,
        /// One of min, max, mx, dual-mx, pp, dual-pp.
        op: String,
    },
    /// Synthesize a normal form for a declared relation.
    Normalize {
        file: PathBuf,
        relation: String,
        #[arg(value_enum)]
        form: FormArg,
    },
    /// Decide the csp or qcsp instance in a file.
    Solve { file: PathBuf },
    /// Differential testing of the solvers against the oracles.
    Fuzz {
        #[arg(long, value_enum, default_value_t = ModeArg::Csp)]
        mode: ModeArg,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long)]
        max_vars: Option<usize>,
        #[arg(long)]
        max_constraints: Option<usize>,
    },
    /// Run the regression suite of known polymorphism and normal-form facts.
    #[command(name = "paper-facts")]
    KnownFacts {
        /// Run only the named facts.
        #[arg(long = "only")]
        only: Vec<String>,
    },
}

enum Failure {
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(bool, String), Failure>;

fn load(path: &Path) -> Result<Document, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(parse_document(&text)?)
}

fn declared<'a>(doc: &'a Document, name: &str) -> Result<&'a RelationDecl, Failure> {
    doc.relation(name)
        .ok_or_else(|| Failure::Usage(Error::UndeclaredRelation(name.into()).to_string()))
}

fn check_poly(cli: &Cli, file: &Path, name: &str, op: &str) -> Outcome {
    let doc = load(file)?;
    let decl = declared(&doc, name)?;
    let op =
        Operation::parse(op).ok_or_else(|| Failure::Usage(format!("unknown operation `{op}`")))?;
    let report = temporal_qcsp::poly::preserves(op, &decl.relation);
    let out = match (cli.format, &report.counterexample) {
        (Format::Text, _) => format!("{report}\n"),
        (Format::Structured, None) => format!("relation={name} op={op} closed=true\n"),
        (Format::Structured, Some(cx)) => {
            let (t, u) = cx.pattern.witness_tuples();
            format!(
                "relation={name} op={op} closed=false first={} second={} image={}\n",
                tuple(&t),
                tuple(&u),
                cx.image
            )
        }
    };
    Ok((report.closed, out))
}

fn tuple(values: &[Rational]) -> String {
    let parts: Vec<String> = values.iter().map(Rational::to_string).collect();
    format!("({})", parts.join(","))
}

fn normalize(cli: &Cli, file: &Path, name: &str, form: FormArg) -> Outcome {
    let doc = load(file)?;
    let decl = declared(&doc, name)?;
    let names = &decl.params;
    let (op, rendered) = match form {
        FormArg::Min => (
            Operation::Min,
            min_clause_form(&decl.relation).map(|f| (render_conjunction(&f, names), vec![])),
        ),
        FormArg::Pp => (
            Operation::Pp,
            pp_clause_form(&decl.relation).map(|f| (render_conjunction(&f, names), vec![])),
        ),
        FormArg::Mxaffine => (
            Operation::Mx,
            min_affine_form(&decl.relation).map(|f| {
                let details = f
                    .iter()
                    .map(|c| {
                        let scope: Vec<&str> =
                            c.scope().iter().map(|&v| names[v].as_str()).collect();
                        let t: Vec<String> = c
                            .tuples()
                            .members()
                            .iter()
                            .map(ToString::to_string)
                            .collect();
                        (scope.join(","), t.join(","))
                    })
                    .collect();
                (render_conjunction(&f, names), details)
            }),
        ),
    };
    match rendered {
        Ok((formula, details)) => {
            let mut out = String::new();
            match cli.format {
                Format::Text => {
                    let _ = writeln!(out, "{formula}");
                    for (scope, t) in details {
                        let _ = writeln!(out, "# scope ({scope}), T = {{{t}}}");
                    }
                }
                Format::Structured => {
                    let _ = writeln!(
                        out,
                        "relation={name} form={} closed=true formula={formula:?}",
                        op
                    );
                    for (scope, t) in details {
                        let _ = writeln!(out, "conjunct scope={scope} T={t}");
                    }
                }
            }
            Ok((true, out))
        }
        Err(Error::NotClosed(_)) => Ok((
            false,
            match cli.format {
                Format::Text => "NOT CLOSED\n".to_string(),
                Format::Structured => format!("relation={name} form={op} closed=false\n"),
            },
        )),
        Err(e) => Err(e.into()),
    }
}

fn engine_of(arg: EngineArg) -> Engine {
    match arg {
        EngineArg::Min => Engine::Min,
        EngineArg::Mx => Engine::Mx,
        EngineArg::Auto | EngineArg::Brute => Engine::Auto,
    }
}

fn solve(cli: &Cli, file: &Path) -> Outcome {
    let doc = load(file)?;
    match doc.problem {
        None => Err(Failure::Usage(format!(
            "{}: no `csp` or `qcsp` line found",
            file.display()
        ))),
        Some(Instance::Csp(csp)) => solve_csp(cli, &csp),
        Some(Instance::Qcsp(q)) => solve_q(cli, &q),
    }
}

fn solve_csp(cli: &Cli, csp: &CspInstance) -> Outcome {
    let n = csp.variables.len();
    let values: Option<Vec<Rational>> = if cli.engine == EngineArg::Brute {
        brute_instance(csp)?.map(|w| {
            w.ranks()
                .iter()
                .map(|&r| Rational::from_int(r.into()))
                .collect()
        })
    } else {
        compile(n, &csp.constraints, engine_of(cli.engine))?
            .solve(None)
            .map(|s| s.values(n))
    };
    let mut out = String::new();
    match (&values, cli.format) {
        (None, Format::Text) => out.push_str("UNSAT\n"),
        (None, Format::Structured) => out.push_str("verdict=UNSAT\n"),
        (Some(values), format) => {
            out.push_str(if format == Format::Text {
                "SAT\n"
            } else {
                "verdict=SAT\n"
            });
            for (name, v) in csp.variables.iter().zip(values) {
                let _ = match format {
                    Format::Text => writeln!(out, "{name} = {v}"),
                    Format::Structured => writeln!(out, "assign {name}={v}"),
                };
            }
        }
    }
    Ok((values.is_some(), out))
}

fn structured_trace(trace: &SolveTrace) -> String {
    let mut out = String::new();
    for l in &trace.levels {
        let distinct = l.distinct.map_or("-".to_string(), |d| d.to_string());
        let forall = match l.check.map(|c| c.failing_region) {
            None => "-".to_string(),
            Some(None) => "OK".to_string(),
            Some(Some(r)) => format!("FAIL:{r}"),
        };
        let solves = l
            .check
            .map_or("-".to_string(), |c| c.pinned_solves.to_string());
        let _ = writeln!(
            out,
            "level={} constraints={} sat={} distinct={distinct} forall={forall} pinned_solves={solves}",
            l.level,
            l.constraints,
            if l.sat { "YES" } else { "NO" }
        );
    }
    out
}

fn solve_q(cli: &Cli, q: &QcspInstance) -> Outcome {
    let (verdict, trace) = if cli.engine == EngineArg::Brute {
        (brute_qcsp(q)?, None)
    } else {
        let (v, t) = solve_qcsp(q, engine_of(cli.engine))?;
        (v, Some(t))
    };
    let mut out = String::new();
    if cli.trace {
        if let Some(trace) = &trace {
            match cli.format {
                Format::Text => out.push_str(&trace.to_string()),
                Format::Structured => out.push_str(&structured_trace(trace)),
            }
        }
    }
    let word = if verdict { "TRUE" } else { "FALSE" };
    match cli.format {
        Format::Text => out.push_str(&format!("{word}\n")),
        Format::Structured => out.push_str(&format!("verdict={word}\n")),
    }
    Ok((verdict, out))
}

fn fuzz(
    cli: &Cli,
    mode: ModeArg,
    trials: u64,
    max_vars: Option<usize>,
    max_constraints: Option<usize>,
) -> Outcome {
    if cli.engine == EngineArg::Brute {
        return Err(Failure::Usage(
            "fuzz compares an engine against the oracle; choose min, mx or auto".into(),
        ));
    }
    let mode = match mode {
        ModeArg::Csp => FuzzMode::Csp,
        ModeArg::Qcsp => FuzzMode::Qcsp,
        ModeArg::NormalForm => FuzzMode::NormalForm,
        ModeArg::Preserve => FuzzMode::Preserve,
    };
    let mut config = FuzzConfig::new(mode, engine_of(cli.engine), cli.seed, trials);
    if let Some(v) = max_vars {
        config.max_vars = v;
    }
    if let Some(c) = max_constraints {
        config.max_constraints = c;
    }
    let report = run_fuzz(&config);
    let out = match cli.format {
        Format::Text => report.to_string(),
        Format::Structured => report.structured(),
    };
    Ok((report.passed(), out))
}

fn known_facts(cli: &Cli, only: &[String]) -> Outcome {
    let filter = (!only.is_empty()).then_some(only);
    let results = run_known_facts(&Fixtures::default(), filter);
    let mut out = String::new();
    for r in &results {
        let _ = match cli.format {
            Format::Text => writeln!(out, "{r}"),
            Format::Structured => writeln!(
                out,
                "fact={:?} passed={} detail={:?}",
                r.name, r.passed, r.detail
            ),
        };
    }
    Ok((results.iter().all(|r| r.passed), out))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::CheckPoly { file, relation, op } => check_poly(&cli, file, relation, op),
        Command::Normalize {
            file,
            relation,
            form,
        } => normalize(&cli, file, relation, *form),
        Command::Solve { file } => solve(&cli, file),
        Command::Fuzz {
            mode,
            trials,
            max_vars,
            max_constraints,
        } => fuzz(&cli, *mode, *trials, *max_vars, *max_constraints),
        Command::KnownFacts { only } => known_facts(&cli, only),
    };
    match outcome {
        Ok((positive, out)) => {
            print!("{out}");
            if positive {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
