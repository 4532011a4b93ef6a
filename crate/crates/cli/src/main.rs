use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetlift::bench::{self, Sweep, Problem, Sizes};
use hetlift::engine::{answer, parse_evidence, Engine, Input, RunConfig};
use hetlift::pfl::print_pfl;
use hetlift::{Error, Result};
use hetlift_core::problog::{translate, Style};

#[derive(Parser)]
#[command(name = "hetlift", version, about = "Exact lifted inference for probabilistic logic programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Compact,
    Verbose,
}

impl From<StyleArg> for Style {
    fn from(s: StyleArg) -> Style {
        match s {
            StyleArg::Compact => Style::Compact,
            StyleArg::Verbose => Style::Verbose,
        }
    }
}

#[derive(Args)]
struct Limits {
    /// Abort a run after this many milliseconds.
    #[arg(long)]
    timeout: Option<u64>,
    /// Most ground probabilistic facts the enum engine accepts.
    #[arg(long, default_value_t = hetlift_core::problog::DEFAULT_CAP)]
    enum_cap: usize,
    /// Largest table, in cells, an engine may build.
    #[arg(long, default_value_t = 10_000_000)]
    cell_budget: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the distribution of a ground atom.
    Query {
        file: PathBuf,
        #[arg(long)]
        query: String,
        /// Comma-separated ATOM=VALUE pairs.
        #[arg(long)]
        evidence: Option<String>,
        #[arg(long, value_enum, default_value = "lifted")]
        engine: Engine,
        #[arg(long, value_enum, default_value = "compact")]
        style: StyleArg,
        #[command(flatten)]
        limits: Limits,
        /// Print `atom,value,prob` rows.
        #[arg(long)]
        csv: bool,
    },
    /// Run a benchmark sweep and print CSV.
    Bench {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        w: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        x: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        y: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "lifted")]
        engine: Vec<Engine>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Models are deterministic; the seed is echoed for reproducibility records.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        limits: Limits,
        /// Accepted for symmetry with `query`; bench output is always CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Translate a ProbLog program to extended PFL.
    Translate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "compact")]
        style: StyleArg,
    },
    /// Check a `.pl` or `.pfl` file and list model diagnostics.
    Validate { file: PathBuf },
}

fn config(l: &Limits, style: Style) -> RunConfig {
    RunConfig {
        enum_cap: l.enum_cap,
        cell_budget: l.cell_budget,
        timeout: l.timeout.map(Duration::from_millis),
        style,
    }
}

fn or_default(v: &[usize], d: &[usize]) -> Vec<usize> {
    if v.is_empty() {
        d.to_vec()
    } else {
        v.to_vec()
    }
}

fn sizes_for(problem: Problem, n: Vec<usize>, m: Vec<usize>, w: Vec<usize>, x: Vec<usize>, y: Vec<usize>) -> Result<Vec<Sizes>> {
    let mut out = Vec::new();
    match problem {
        Problem::WorkshopsAttributes => {
            for &n in &or_default(&n, &[50]) {
                for &m in &or_default(&m, &[10, 100, 1000]) {
                    out.push(Sizes {
                        n: Some(n),
                        m: Some(m),
                        ..Sizes::default()
                    });
                }
            }
        }
        Problem::CompetingWorkshops => {
            for &w in &or_default(&w, &[10]) {
                for &n in &or_default(&n, &[1000, 2000, 4000]) {
                    out.push(Sizes {
                        n: Some(n),
                        w: Some(w),
                        ..Sizes::default()
                    });
                }
            }
        }
        Problem::Plates => {
            for &x in &or_default(&x, &[5]) {
                for &y in &or_default(&y, &[10, 100, 1000]) {
                    out.push(Sizes {
                        x: Some(x),
                        y: Some(y),
                        ..Sizes::default()
                    });
                }
            }
        }
    }
    if out.iter().any(|s| [s.n, s.m, s.w, s.x, s.y].iter().any(|v| *v == Some(0))) {
        return Err(Error::Usage("domain sizes must be positive".into()));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Query {
            file,
            query,
            evidence,
            engine,
            style,
            limits,
            csv,
        } => {
            let input = Input::load(&file)?;
            let ev = parse_evidence(evidence.as_deref().unwrap_or(""))?;
            let a = answer(&input, engine, &query, &ev, &config(&limits, style.into()))?;
            if csv {
                println!("atom,value,prob");
            }
            for (v, p) in a.values.iter().zip(&a.probs) {
                if csv {
                    println!("{},{v},{p}", query.trim());
                } else {
                    println!("P({} = {v}) = {p:.9}", query.trim());
                }
            }
            Ok(true)
        }
        Cmd::Bench {
            problem,
            n,
            m,
            w,
            x,
            y,
            engine,
            reps,
            seed: _,
            limits,
            csv: _,
        } => {
            if reps == 0 {
                return Err(Error::Usage("--reps must be positive".into()));
            }
            let timeout = Duration::from_millis(limits.timeout.unwrap_or(60_000));
            if timeout.is_zero() {
                return Err(Error::Usage("--timeout must be positive".into()));
            }
            let sweep = Sweep {
                problem,
                sizes: sizes_for(problem, n, m, w, x, y)?,
                engines: engine,
                reps,
                timeout,
                config: config(&limits, Style::Compact),
            };
            let records = bench::run(&sweep)?;
            for r in &records {
                if let Some(msg) = &r.message {
                    eprintln!("{} {:?} {}: {msg}", r.problem.name(), r.sizes, r.engine.name());
                }
            }
            bench::write_csv(&records, std::io::stdout()).map_err(|e| Error::Usage(e.to_string()))?;
            Ok(true)
        }
        Cmd::Translate { file, style } => match Input::load(&file)? {
            Input::ProbLog(p) => {
                print!("{}", print_pfl(&translate(&p, style.into())?)?);
                Ok(true)
            }
            Input::Pfl(_) => Err(Error::Usage("translate expects a .pl ProbLog program".into())),
        },
        Cmd::Validate { file } => {
            let m = match Input::load(&file)? {
                Input::ProbLog(p) => translate(&p, Style::Compact)?,
                Input::Pfl(m) => m,
            };
            let diags = m.validate();
            for d in &diags {
                println!("{d}");
            }
            if diags.is_empty() {
                println!("ok");
            }
            Ok(diags.is_empty())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
