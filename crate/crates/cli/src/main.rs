//! `presmot`: exact symbolic engine for constructible Presburger functions.

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;

use presmot_cli::run::{self, Format, Opts, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Structured,
}

#[derive(Parser, Debug)]
#[command(
    name = "presmot",
    about = "Exact nullity, equality, integrability, and fiberwise sums for \
             constructible functions on Presburger sets",
    version
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// Validation box radius for rectilinearization checks.
    #[arg(long = "box", global = true, default_value_t = 15)]
    box_radius: i128,

    /// Comma-separated specialization points q (integers or fractions > 1).
    #[arg(long = "q", global = true, default_value = "2,3,5/2")]
    q: String,

    /// Certified tail tolerance for numeric cross-checks (a fraction).
    #[arg(long = "epsilon", global = true, default_value = "1/1000000000")]
    epsilon: String,

    /// Search bound for non-null witnesses.
    #[arg(long = "witness-bound", global = true)]
    witness_bound: Option<i128>,

    /// Comma-separated fiber variable names; remaining variables are base.
    #[arg(long = "fibers", global = true)]
    fibers: Option<String>,

    /// Output format.
    #[arg(long = "format", global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Print the canonical form of a function.
    Canon { expr: String },
    /// Evaluate a function at an integer point.
    Eval {
        expr: String,
        /// Comma-separated integer coordinates.
        #[arg(long = "at")]
        at: String,
    },
    /// Decide whether a function is identically zero.
    Null { expr: String },
    /// Decide whether two functions are equal.
    Eq { expr1: String, expr2: String },
    /// Decide fiberwise integrability (summability).
    Integrable { expr: String },
    /// Compute the fiberwise sum (relative integral) in closed form.
    Integrate { expr: String },
    /// Partition a Presburger set into validated rectilinear pieces.
    Rectilinearize { expr: String },
    /// Evaluate the absolute integral at each specialization point q.
    Specialize { expr: String },
    /// Cross-validate the symbolic integral against certified partial sums.
    Crosscheck { expr: String },
    /// Run the built-in smoke-test battery.
    Selftest,
}

fn parse_rat(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
        let d: BigInt = d.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
        if d == BigInt::from(0) {
            return Err(format!("bad rational `{s}`: zero denominator"));
        }
        Ok(BigRational::new(n, d))
    } else {
        let n: BigInt = s.parse().map_err(|_| format!("bad rational `{s}`"))?;
        Ok(BigRational::from(n))
    }
}

fn build_opts(cli: &Cli) -> Result<Opts, String> {
    let qs = cli
        .q
        .split(',')
        .map(parse_rat)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("--q: {e}"))?;
    let epsilon = parse_rat(&cli.epsilon).map_err(|e| format!("--epsilon: {e}"))?;
    Ok(Opts {
        box_radius: cli.box_radius,
        qs,
        epsilon,
        witness_bound: cli.witness_bound,
        fibers: cli
            .fibers
            .as_ref()
            .map(|s| s.split(',').map(|v| v.trim().to_owned()).collect()),
        format: match cli.format {
            FormatArg::Text => Format::Text,
            FormatArg::Structured => Format::Structured,
        },
    })
}

fn main() {
    let cli = Cli::parse();
    let opts = match build_opts(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let outcome: Outcome = match &cli.verb {
        Verb::Canon { expr } => run::cmd_canon(expr, &opts),
        Verb::Eval { expr, at } => run::cmd_eval(expr, at, &opts),
        Verb::Null { expr } => run::cmd_null(expr, &opts),
        Verb::Eq { expr1, expr2 } => run::cmd_eq(expr1, expr2, &opts),
        Verb::Integrable { expr } => run::cmd_integrable(expr, &opts),
        Verb::Integrate { expr } => run::cmd_integrate(expr, &opts),
        Verb::Rectilinearize { expr } => run::cmd_rectilinearize(expr, &opts),
        Verb::Specialize { expr } => run::cmd_specialize(expr, &opts),
        Verb::Crosscheck { expr } => run::cmd_crosscheck(expr, &opts),
        Verb::Selftest => run::cmd_selftest(&opts),
    };
    if outcome.exit == 2 {
        eprintln!("{}", outcome.output);
    } else if !outcome.output.is_empty() {
        println!("{}", outcome.output);
    }
    std::process::exit(outcome.exit);
}
