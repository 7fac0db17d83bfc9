//! Command-line front end. `run` is the whole program minus process exit, so
//! it can be driven from tests.

use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand};
use num_bigint::{BigInt, BigUint};
use serde_json::{json, Value};

use crate::counting;
use crate::dimension;
use crate::formula::{parse, render, Formula};
use crate::interp::{self, Translation};
use crate::orders::{self, DefinableOrder};
use crate::qe;
use crate::semilinear;

#[derive(Parser, Debug)]
#[command(name = "presburger", version, about = "Presburger arithmetic over (N, +)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// A formula given inline, from `--file`, or from stdin as `-`.
#[derive(Args, Debug)]
struct Input {
    /// Formula text, or `-` to read stdin
    formula: Option<String>,
    /// Read the formula from a file
    #[arg(long)]
    file: Option<String>,
}

#[derive(Args, Debug)]
struct Vars {
    /// Coordinate order, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    vars: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Truth value of a sentence (exit 0 true, 1 false)
    Decide(Input),
    /// Equivalent quantifier-free formula
    Qe(Input),
    /// Disjoint fundamental lattices of a definable set
    Semilinear {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        vars: Vars,
        /// List the members with all coordinates <= N instead
        #[arg(long)]
        enumerate: Option<u64>,
    },
    /// Dimension of a definable set
    Dim {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        vars: Vars,
        /// Also print the witness piece
        #[arg(long)]
        json: bool,
    },
    /// Definable bijection of an infinite set with N^dim
    Bijection {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        vars: Vars,
        /// Print JSON including the decided verification sentences
        #[arg(long)]
        json: bool,
    },
    /// Section sizes as a piecewise polynomial in the last coordinates
    Count {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        vars: Vars,
        /// Number of leading (counted) coordinates
        #[arg(long)]
        split: usize,
    },
    /// Vector partition function of an integer matrix
    Partition {
        /// Rows separated by `;`, entries by spaces, e.g. "1 1; 0 1"
        #[arg(long)]
        matrix: String,
    },
    /// VD*-rank certificate of a definable linear order
    Rank(OrderArgs),
    /// Isomorphism of an order of type omega with (N, <)
    Iso(OrderArgs),
    /// Cantor polynomials
    Cantor {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        i: u8,
        /// Point "x,y" to evaluate
        #[arg(long, conflicts_with = "inverse")]
        eval: Option<String>,
        /// Number to decode
        #[arg(long)]
        inverse: Option<BigUint>,
    },
    /// Interpretations given as translation JSON
    Interp {
        #[command(subcommand)]
        action: InterpAction,
    },
    /// Linear bounds on multiplication by sqrt(s) through the Cantor bijection
    CantorExp {
        #[arg(long)]
        s: u64,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        i: u8,
        #[arg(long, default_value_t = 10_000)]
        bound: u64,
    },
}

#[derive(Args, Debug)]
struct OrderArgs {
    /// Domain formula over the first half of --vars
    #[arg(long)]
    domain: String,
    /// Strict order "first point < second point"
    #[arg(long)]
    order: String,
    /// Both points' variables: a1,..,am,b1,..,bm
    #[arg(long, value_delimiter = ',', required = true)]
    vars: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum InterpAction {
    /// Decide the basic conditions
    Verify { file: String },
    /// Certify a 1-dimensional self-interpretation
    Certify { file: String },
    /// Non-relative form with absolute equality
    Normalize { file: String },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

fn fail<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(msg.into()))
}

fn read_source(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure(format!("{path}: {e}")))
    }
}

impl Input {
    fn formula(&self) -> Result<Formula, Failure> {
        let text = match (&self.formula, &self.file) {
            (Some(f), None) if f == "-" => read_source("-")?,
            (Some(f), None) => f.clone(),
            (None, Some(p)) => read_source(p)?,
            (None, None) => return fail("no formula given (inline, --file PATH or - for stdin)"),
            (Some(_), Some(_)) => return fail("give the formula inline or with --file, not both"),
        };
        Ok(parse(text.trim())?)
    }
}

/// The formula's free variables must all be listed.
fn check_vars(f: &Formula, vars: &[String]) -> Result<(), Failure> {
    let missing: Vec<String> = f.free_vars().into_iter().filter(|v| !vars.contains(v)).collect();
    if !missing.is_empty() {
        return fail(format!("free variables not listed in --vars: {}", missing.join(",")));
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(d) = vars.iter().find(|v| !seen.insert(*v)) {
        return fail(format!("variable {d} listed twice"));
    }
    Ok(())
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<BigInt>>, Failure> {
    let rows: Vec<Vec<BigInt>> = text
        .split(';')
        .map(|r| r.split_whitespace().map(|x| x.parse::<BigInt>()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    if rows.is_empty() || rows[0].is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return fail("matrix rows must be nonempty and of equal length");
    }
    Ok(rows)
}

fn order(args: &OrderArgs) -> Result<DefinableOrder, Failure> {
    let k = args.vars.len();
    if k == 0 || !k.is_multiple_of(2) {
        return fail("--vars must list both points: a1,..,am,b1,..,bm");
    }
    let (xs, ys) = args.vars.split_at(k / 2);
    let domain = parse(&args.domain)?;
    let rel = parse(&args.order)?;
    check_vars(&domain, xs)?;
    check_vars(&rel, &args.vars)?;
    Ok(DefinableOrder::from_formulas(&domain, rel, xs.to_vec(), ys.to_vec()))
}

fn translation(file: &str) -> Result<Translation, Failure> {
    let v: Value = serde_json::from_str(&read_source(file)?)?;
    Ok(Translation::from_json(&v)?)
}

fn point_json(p: &[BigUint]) -> Value {
    Value::Array(p.iter().map(|x| Value::String(x.to_string())).collect())
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Decide(input) => {
            let f = input.formula()?;
            let v = qe::decide(&f)?;
            writeln!(out, "{v}")?;
            return Ok(if v { 0 } else { 1 });
        }
        Command::Qe(input) => {
            writeln!(out, "{}", render(qe::eliminate(&input.formula()?).formula()))?;
        }
        Command::Semilinear { input, vars, enumerate } => {
            let f = input.formula()?;
            check_vars(&f, &vars.vars)?;
            let s = semilinear::from_formula(&f, &vars.vars);
            let v = match enumerate {
                Some(n) => Value::Array(s.enumerate(n).iter().map(|p| point_json(p)).collect()),
                None => s.to_json(),
            };
            writeln!(out, "{v}")?;
        }
        Command::Dim { input, vars, json } => {
            let f = input.formula()?;
            check_vars(&f, &vars.vars)?;
            let r = dimension::dim(&semilinear::from_formula(&f, &vars.vars));
            let v = if json {
                json!({"dim": r.dim, "witness": r.witness.as_ref().map(semilinear::lattice_json)})
            } else {
                json!({"dim": r.dim})
            };
            writeln!(out, "{v}")?;
        }
        Command::Bijection { input, vars, json } => {
            let f = input.formula()?;
            check_vars(&f, &vars.vars)?;
            let s = semilinear::from_formula(&f, &vars.vars);
            let b = dimension::bijection_to_cube(&s, &vars.vars)?;
            if json {
                let checks: Vec<Value> = dimension::verification_sentences(&s, &b)
                    .into_iter()
                    .map(|(name, sentence)| {
                        let verdict = qe::decide(&sentence).expect("closed");
                        json!({"name": name, "sentence": render(&sentence), "verdict": verdict})
                    })
                    .collect();
                let v = json!({
                    "dim": b.dim,
                    "xs": b.xs,
                    "ys": b.ys,
                    "formula": render(&b.formula),
                    "checks": checks,
                });
                writeln!(out, "{v}")?;
            } else {
                writeln!(out, "{}", render(&b.formula))?;
            }
        }
        Command::Count { input, vars, split } => {
            let f = input.formula()?;
            check_vars(&f, &vars.vars)?;
            let s = semilinear::from_formula(&f, &vars.vars);
            writeln!(out, "{}", counting::section_count(&s, split)?.to_json())?;
        }
        Command::Partition { matrix } => {
            writeln!(out, "{}", counting::partition_function(&parse_matrix(&matrix)?).to_json())?;
        }
        Command::Rank(args) => {
            writeln!(out, "{}", orders::vd_rank(&order(&args)?)?.to_json())?;
        }
        Command::Iso(args) => {
            writeln!(out, "{}", orders::order_type_iso(&order(&args)?)?.to_json())?;
        }
        Command::Cantor { i, eval, inverse } => match (eval, inverse) {
            (Some(p), None) => {
                let xs: Vec<BigUint> =
                    p.split(',').map(|x| x.trim().parse::<BigUint>()).collect::<Result<_, _>>()?;
                let [x, y] = xs.as_slice() else { return fail("--eval expects \"x,y\"") };
                writeln!(out, "{}", orders::cantor_eval(i, (x, y)))?;
            }
            (None, Some(n)) => {
                let (x, y) = orders::cantor_inverse(i, &n);
                writeln!(out, "{x},{y}")?;
            }
            _ => return fail("give exactly one of --eval or --inverse"),
        },
        Command::Interp { action } => match action {
            InterpAction::Verify { file } => {
                let r = interp::verify_basics(&translation(&file)?);
                writeln!(out, "{}", r.to_json())?;
                return Ok(if r.ok() { 0 } else { 1 });
            }
            InterpAction::Certify { file } => {
                writeln!(out, "{}", interp::certify_self_interpretation_1d(&translation(&file)?)?.to_json())?;
            }
            InterpAction::Normalize { file } => {
                let (k, iso) = interp::normalize(&translation(&file)?)?;
                writeln!(out, "{}", json!({"kappa": k.to_json(), "iso": render(&iso)}))?;
            }
        },
        Command::CantorExp { s, i, bound } => {
            let r = interp::en_experiment(s, i, bound)?;
            writeln!(out, "{r}")?;
            return Ok(if r.holds() { 0 } else { 1 });
        }
    }
    Ok(0)
}

/// Parse `args` (including the program name) and execute. Exit codes: 0
/// success, 1 a negative answer (`decide` false, failed checks), 2 errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {}", msg.lines().next().unwrap_or(""));
            2
        }
    }
}
