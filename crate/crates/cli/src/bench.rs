//! Benchmark problems and the CSV sweep harness.

use std::fmt::Write as _;
use std::io;
use std::time::{Duration, Instant};

use crate::engine::{answer, Engine, Input, RunConfig};
use crate::error::Result;
use crate::pfl::parse_pfl;
use crate::problog::parse_problog;

pub const WORKSHOPS_ATTRIBUTES: &str = "\
series:- person(P),attends(P),sa(P).

0.501::sa(P):-person(P).

attends(P):- person(P),attr(A),at(P,A).

0.3::at(P,A):-person(P),attr(A).
";

pub const COMPETING_WORKSHOPS: &str = "\
bayes ch1(P),attends(P),sa(P);[1.0,1.0,1.0,0.0,
                               0.0,0.0,0.0,1.0];[person(P)].

het series1,ch1(P);[1.0, 0.0, 0.0, 1.0];[person(P)].

deputy series,series1;[].

bayes sa(P);[0.499,0.501];[person(P)].

het attends1(P),ch2(P,W);[1.0, 0.0, 0.0, 1.0];[person(P),workshop(W)].

deputy attends(P),attends1(P);[person(P)].

bayes ch2(P,W),hot(W),ah(P,W);[1.0,1.0,1.0,0.0,
                               0.0,0.0,0.0,1.0];[person(P),workshop(W)].

bayes ah(P,W);[0.2,0.8];[person(P),workshop(W)].
";

pub const PLATES: &str = "\
f:- e(Y).

e(Y) :- d(Y),n1(Y).
e(Y) :- y(Y),\\+ d(Y),n2(Y).

d(Y):- c(X,Y).

c(X,Y):-b(X),n3(X,Y).
c(X,Y):- x(X),\\+ b(X),n4(X,Y).

b(X):- a, n5(X).
b(X):- \\+ a,n6(X).

a:- n7.

0.1::n1(Y) :-y(Y).
0.2::n2(Y) :-y(Y).
0.3::n3(X,Y) :- x(X),y(Y).
0.4::n4(X,Y) :- x(X),y(Y).
0.5::n5(X) :-x(X).
0.6::n6(X) :-x(X).
0.7::n7.
";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Problem {
    WorkshopsAttributes,
    CompetingWorkshops,
    Plates,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::WorkshopsAttributes => "workshops-attributes",
            Problem::CompetingWorkshops => "competing-workshops",
            Problem::Plates => "plates",
        }
    }

    pub fn query(self) -> &'static str {
        match self {
            Problem::Plates => "f",
            _ => "series",
        }
    }
}

/// Domain sizes; only those the problem uses are set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Sizes {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub w: Option<usize>,
    pub x: Option<usize>,
    pub y: Option<usize>,
}

fn facts(out: &mut String, pred: &str, base: &str, k: usize) {
    for i in 1..=k {
        let _ = writeln!(out, "{pred}({base}{i}).");
    }
}

/// Program text of a problem: the fixed clauses followed by generated domain
/// facts. Competing workshops is a PFL model, the others ProbLog programs.
pub fn generate(problem: Problem, s: Sizes) -> String {
    let get = |v: Option<usize>, what: &str| v.unwrap_or_else(|| panic!("{} needs {what}", problem.name()));
    let mut out = String::new();
    match problem {
        Problem::WorkshopsAttributes => {
            out.push_str(WORKSHOPS_ATTRIBUTES);
            facts(&mut out, "person", "p", get(s.n, "n"));
            facts(&mut out, "attr", "a", get(s.m, "m"));
        }
        Problem::CompetingWorkshops => {
            out.push_str(COMPETING_WORKSHOPS);
            facts(&mut out, "person", "p", get(s.n, "n"));
            facts(&mut out, "workshop", "w", get(s.w, "w"));
        }
        Problem::Plates => {
            out.push_str(PLATES);
            facts(&mut out, "x", "x", get(s.x, "x"));
            facts(&mut out, "y", "y", get(s.y, "y"));
        }
    }
    out
}

pub fn load(problem: Problem, s: Sizes) -> Result<Input> {
    let text = generate(problem, s);
    Ok(match problem {
        Problem::CompetingWorkshops => Input::Pfl(parse_pfl(&text)?),
        _ => Input::ProbLog(parse_problog(&text)?),
    })
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub problem: Problem,
    pub sizes: Vec<Sizes>,
    pub engines: Vec<Engine>,
    pub reps: usize,
    pub timeout: Duration,
    pub config: RunConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Timeout,
    Refused,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Timeout => "timeout",
            Status::Refused => "refused",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchRecord {
    pub problem: Problem,
    pub sizes: Sizes,
    pub engine: Engine,
    pub rep: usize,
    pub ms: f64,
    pub prob: Option<f64>,
    pub status: Status,
    pub message: Option<String>,
}

/// Times one query; parsing is excluded, translation and shattering are not.
pub fn run_one(problem: Problem, sizes: Sizes, engine: Engine, rep: usize, timeout: Duration, config: &RunConfig) -> Result<BenchRecord> {
    let input = load(problem, sizes)?;
    let cfg = RunConfig {
        timeout: Some(timeout),
        ..*config
    };
    let start = Instant::now();
    let result = answer(&input, engine, problem.query(), &[], &cfg);
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let (prob, status, message) = match result {
        Ok(a) => (Some(a.p_true()), Status::Ok, None),
        Err(crate::Error::Core(hetlift_core::Error::Interrupted)) => (None, Status::Timeout, None),
        Err(e) => (None, Status::Refused, Some(e.to_string())),
    };
    Ok(BenchRecord {
        problem,
        sizes,
        engine,
        rep,
        ms,
        prob,
        status,
        message,
    })
}

/// One record per (size, engine, repetition), in that order.
pub fn run(sweep: &Sweep) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for &s in &sweep.sizes {
        for &e in &sweep.engines {
            for rep in 1..=sweep.reps {
                out.push(run_one(sweep.problem, s, e, rep, sweep.timeout, &sweep.config)?);
            }
        }
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 11] = ["problem", "n", "m", "w", "x", "y", "engine", "rep", "ms", "prob", "status"];

pub fn write_csv<W: io::Write>(records: &[BenchRecord], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in records {
        wr.write_record(row(r))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn row(r: &BenchRecord) -> Vec<String> {
    let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
    vec![
        r.problem.name().to_string(),
        opt(r.sizes.n),
        opt(r.sizes.m),
        opt(r.sizes.w),
        opt(r.sizes.x),
        opt(r.sizes.y),
        r.engine.name().to_string(),
        r.rep.to_string(),
        format!("{:.3}", r.ms),
        r.prob.map(|p| format!("{p}")).unwrap_or_default(),
        r.status.name().to_string(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_programs() {
        let s = Sizes {
            n: Some(2),
            m: Some(2),
            ..Sizes::default()
        };
        let text = generate(Problem::WorkshopsAttributes, s);
        assert!(text.contains("0.501::sa(P):-person(P)."));
        assert!(text.ends_with("attr(a2).\n"));
        let p = parse_problog(&generate(
            Problem::Plates,
            Sizes {
                x: Some(1),
                y: Some(1),
                ..Sizes::default()
            },
        ))
        .unwrap();
        assert_eq!(p.prob_facts.len(), 7);
        assert_eq!(p.rules.len(), 9);
    }

    #[test]
    fn csv_layout() {
        let r = run_one(
            Problem::WorkshopsAttributes,
            Sizes {
                n: Some(2),
                m: Some(2),
                ..Sizes::default()
            },
            Engine::Lifted,
            1,
            Duration::from_secs(10),
            &RunConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("problem,n,m,w,x,y,engine,rep,ms,prob,status"));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[0], "workshops-attributes");
        assert_eq!(fields[3], "");
        assert!((fields[9].parse::<f64>().unwrap() - 0.445735).abs() < 1e-6);
        assert_eq!(fields[10], "ok");
    }
}
