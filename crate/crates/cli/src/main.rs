//! `bntune`: queries, constraint-driven tuning, log-odds bounds and the HTTP
//! service from the command line.
//!
//! Exit status is 0 on success, 2 for malformed input (bad files, unknown
//! names, grammar errors) and 3 for well-formed input that has no answer
//! (impossible evidence, probabilities at 0 or 1 where odds are needed).

use std::fmt;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use bntune_core::bounds::{self, Interval};
use bntune_core::inference::posterior;
use bntune_core::model::{apply_parameter_change, load_network, serialize_network};
use bntune_core::sensitivity::{self, Recommendation, RecommendationStatus};
use bntune_core::text::{format_number, parse_constraint, parse_event, parse_evidence, parse_param};
use bntune_core::BeliefNetwork;
use bntune_service::ServiceConfig;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bntune", version, about = "Belief-network parameter tuning")]
struct Cli {
    /// Significant digits in numeric output.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=17))]
    precision: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the posterior Pr(event | evidence).
    Query {
        #[arg(long)]
        net: PathBuf,
        /// Comma-separated `Var=value` list; may be empty.
        #[arg(long, default_value = "")]
        evidence: String,
        /// `Var=value`
        #[arg(long)]
        event: String,
    },
    /// List the parameter changes that enforce a constraint.
    Tune {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value = "")]
        evidence: String,
        /// e.g. `P(Fire=true) - P(Fire=false) >= 0`
        #[arg(long)]
        constraint: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Print the range a query is guaranteed to stay in after a change.
    Bound {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value = "")]
        evidence: String,
        #[arg(long)]
        event: String,
        /// `Child|Parent=v,...:value`
        #[arg(long)]
        param: String,
        #[arg(long)]
        new_value: f64,
    },
    /// CSV of parameter changes guaranteed to keep a query inside a range.
    Envelope {
        /// Current query value.
        #[arg(long)]
        current: f64,
        /// Target range `LO,HI`.
        #[arg(long)]
        range: String,
        #[arg(long, default_value_t = 0.005)]
        grid_step: f64,
    },
    /// Print the coefficients of f(τ) = (aτ + b) / (cτ + d).
    Sensfn {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value = "")]
        evidence: String,
        #[arg(long)]
        event: String,
        #[arg(long)]
        param: String,
    },
    /// Write a copy of the network with one parameter changed.
    Apply {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long)]
        value: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Static files served outside the API routes.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1024)]
        revision_cap: usize,
        #[arg(long, default_value_t = 20)]
        width_cap: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

enum Failure {
    Input(String),
    Semantic(String),
    /// Downstream reader went away, as with `| head`.
    Closed,
}

impl From<bntune_core::Error> for Failure {
    fn from(err: bntune_core::Error) -> Self {
        if err.is_input_error() {
            Failure::Input(err.to_string())
        } else {
            Failure::Semantic(err.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(err: io::Error) -> Self {
        if err.kind() == io::ErrorKind::BrokenPipe {
            Failure::Closed
        } else {
            Failure::Input(err.to_string())
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => io.into(),
            other => Failure::Input(format!("{other:?}")),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Semantic(m) => f.write_str(m),
            Failure::Closed => f.write_str("output closed"),
        }
    }
}

fn read_network(path: &PathBuf) -> Result<BeliefNetwork, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(load_network(&text)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            match failure {
                Failure::Input(_) => ExitCode::from(2),
                Failure::Semantic(_) | Failure::Closed => ExitCode::from(3),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let digits = cli.precision as usize;
    let num = |x: f64| format_number(x, digits);
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Query {
            net,
            evidence,
            event,
        } => {
            let net = read_network(&net)?;
            let evidence = parse_evidence(&net, &evidence)?;
            let event = parse_event(&net, &event)?;
            writeln!(out, "{}", num(posterior(&net, &evidence, event)?))?;
        }
        Command::Tune {
            net,
            evidence,
            constraint,
            format,
        } => {
            let net = read_network(&net)?;
            let evidence = parse_evidence(&net, &evidence)?;
            let constraint = parse_constraint(&net, &constraint)?;
            let report = sensitivity::tune(&net, &evidence, &constraint)?;
            let rows: Vec<&Recommendation> = if report.already_satisfied {
                Vec::new()
            } else {
                report.feasible().collect()
            };
            let summary = if report.already_satisfied {
                "constraint already satisfied; no change needed".to_string()
            } else {
                format!(
                    "{} recommendation(s); {} parameter(s) cannot enforce the constraint",
                    rows.len(),
                    report.irrelevant_count()
                )
            };
            match format {
                Format::Table => write_table(&mut out, &net, &rows, &num)?,
                Format::Csv => write_csv(&mut out, &net, &rows, &num)?,
            }
            // keep CSV on stdout machine-readable
            match format {
                Format::Table => writeln!(out, "{summary}")?,
                Format::Csv => eprintln!("{summary}"),
            }
        }
        Command::Bound {
            net,
            evidence,
            event,
            param,
            new_value,
        } => {
            let net = read_network(&net)?;
            let evidence = parse_evidence(&net, &evidence)?;
            let event = parse_event(&net, &event)?;
            let param = parse_param(&net, &param)?;
            let g = sensitivity::query_interval_after_change(&net, &evidence, event, &param, new_value)?;
            writeln!(out, "[{}, {}]", num(g.interval.lo), num(g.interval.hi))?;
        }
        Command::Envelope {
            current,
            range,
            grid_step,
        } => {
            let (lo, hi) = parse_range(&range)?;
            let grid = bounds::grid(grid_step);
            if grid.is_empty() {
                return Err(Failure::Input(format!("grid step {grid_step} must lie in (0, 1)")));
            }
            let env = bounds::permissible_envelope(current, Interval::new(lo, hi), &grid)
                .map_err(|e| Failure::Input(e.to_string()))?;
            eprintln!(
                "budget_upper={} budget_lower={}",
                num(env.budget_upper),
                num(env.budget_lower)
            );
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "p",
                "delta_min",
                "delta_max",
                "upper_delta_min",
                "upper_delta_max",
                "lower_delta_min",
                "lower_delta_max",
            ])?;
            for pt in &env.points {
                w.write_record([
                    num(pt.p),
                    num(pt.two_sided.lo),
                    num(pt.two_sided.hi),
                    num(pt.upper_guard.lo),
                    num(pt.upper_guard.hi),
                    num(pt.lower_guard.lo),
                    num(pt.lower_guard.hi),
                ])?;
            }
            w.flush()?;
        }
        Command::Sensfn {
            net,
            evidence,
            event,
            param,
        } => {
            let net = read_network(&net)?;
            let evidence = parse_evidence(&net, &evidence)?;
            let event = parse_event(&net, &event)?;
            let param = parse_param(&net, &param)?;
            let f = sensitivity::sensitivity_function(&net, &evidence, event, &param)?;
            writeln!(
                out,
                "a={} b={} c={} d={}",
                num(f.a),
                num(f.b),
                num(f.c),
                num(f.d)
            )?;
        }
        Command::Apply {
            net,
            param,
            value,
            out: path,
        } => {
            let net = read_network(&net)?;
            let param = parse_param(&net, &param)?;
            let next = apply_parameter_change(&net, &param, value)?;
            let mut text = serialize_network(&next);
            text.push('\n');
            std::fs::write(&path, text)
                .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
        }
        Command::Serve {
            port,
            ui_dir,
            revision_cap,
            width_cap,
        } => {
            let config = ServiceConfig {
                revision_cap,
                width_cap,
                ui_dir,
            };
            let addr = SocketAddr::from(([0, 0, 0, 0], port));
            eprintln!("listening on http://{addr}");
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(bntune_service::serve(addr, config))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_range(text: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Input(format!("range `{text}` must be `LO,HI` with LO < HI"));
    let (lo, hi) = text.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(bad())
    }
}

fn bound_symbol(rec: &Recommendation) -> &'static str {
    match rec.status {
        RecommendationStatus::Increase => ">=",
        RecommendationStatus::Decrease => "<=",
        _ => "=",
    }
}

fn distance(rec: &Recommendation, num: &dyn Fn(f64) -> String) -> String {
    rec.log_odds_distance.map_or_else(String::new, num)
}

fn write_table(
    out: &mut impl Write,
    net: &BeliefNetwork,
    rows: &[&Recommendation],
    num: &dyn Fn(f64) -> String,
) -> io::Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    let header = ["PARAMETER", "CURRENT", "BOUND", "ENDPOINT", "LOG-ODDS"];
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.param.describe(net),
                num(r.current),
                bound_symbol(r).to_string(),
                num(r.minimal_new_value.unwrap_or(r.current)),
                distance(r, num),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[&str]| {
        row.iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    writeln!(out, "{}", line(&header))?;
    for row in &cells {
        let refs: Vec<&str> = row.iter().map(String::as_str).collect();
        writeln!(out, "{}", line(&refs))?;
    }
    Ok(())
}

fn write_csv(
    out: &mut impl Write,
    net: &BeliefNetwork,
    rows: &[&Recommendation],
    num: &dyn Fn(f64) -> String,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "param",
        "current",
        "bound",
        "endpoint",
        "log_odds_distance",
        "feasible_lo",
        "feasible_hi",
    ])?;
    for r in rows {
        let iv = r.feasible.expect("listed rows are feasible");
        w.write_record([
            r.param.describe(net),
            num(r.current),
            bound_symbol(r).to_string(),
            num(r.minimal_new_value.unwrap_or(r.current)),
            distance(r, num),
            num(iv.lo),
            num(iv.hi),
        ])?;
    }
    w.flush()?;
    Ok(())
}
