//! Loading inputs and answering queries with a chosen engine.

use std::path::Path;
use std::time::{Duration, Instant};

use hetlift_core::ground::{query_ve, query_ve1};
use hetlift_core::problog::{enumerate, translate, PredKind, Program, Style};
use hetlift_core::{lifted, GroundAtom, InferenceOptions, Model};

use crate::error::{Error, Result};
use crate::pfl::parse_pfl;
use crate::problog::{ground_atom, parse_problog};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Engine {
    Lifted,
    Ve1,
    Ve,
    Enum,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Lifted => "lifted",
            Engine::Ve1 => "ve1",
            Engine::Ve => "ve",
            Engine::Enum => "enum",
        }
    }
}

pub enum Input {
    ProbLog(Program),
    Pfl(Model),
}

impl Input {
    /// `.pl` files are ProbLog, anything else PFL.
    pub fn load(path: &Path) -> Result<Input> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if path.extension().is_some_and(|e| e == "pl") {
            Ok(Input::ProbLog(parse_problog(&src)?))
        } else {
            Ok(Input::Pfl(parse_pfl(&src)?))
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub enum_cap: usize,
    pub cell_budget: usize,
    pub timeout: Option<Duration>,
    pub style: Style,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            enum_cap: hetlift_core::problog::DEFAULT_CAP,
            cell_budget: InferenceOptions::default().cell_budget,
            timeout: None,
            style: Style::Compact,
        }
    }
}

/// A distribution over the named values of the query.
#[derive(Clone, Debug, PartialEq)]
pub struct Answer {
    pub values: Vec<String>,
    pub probs: Vec<f64>,
}

impl Answer {
    pub fn boolean(probs: Vec<f64>) -> Answer {
        Answer {
            values: vec!["f".into(), "t".into()],
            probs,
        }
    }

    /// Probability of `t`, or of the last value for non-Boolean queries.
    pub fn p_true(&self) -> f64 {
        *self.probs.last().expect("non-empty range")
    }
}

/// Splits `a=t,b(x)=f` at top-level commas.
pub fn parse_evidence(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    let mut parts = Vec::new();
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    for p in parts.into_iter().map(str::trim).filter(|p| !p.is_empty()) {
        let (a, v) = p
            .rsplit_once('=')
            .ok_or_else(|| Error::Usage(format!("evidence {p} is not of the form ATOM=VALUE")))?;
        out.push((a.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn bool_value(v: &str) -> Option<bool> {
    match v {
        "t" | "true" | "1" => Some(true),
        "f" | "false" | "0" => Some(false),
        _ => None,
    }
}

/// Runs one query. Timeouts surface as [`hetlift_core::Error::Interrupted`].
pub fn answer(input: &Input, engine: Engine, query: &str, evidence: &[(String, String)], cfg: &RunConfig) -> Result<Answer> {
    let start = Instant::now();
    let stop = move || cfg.timeout.is_some_and(|t| start.elapsed() > t);
    let opts = InferenceOptions {
        cell_budget: cfg.cell_budget,
        interrupt: Some(&stop),
    };
    match input {
        Input::Pfl(m) => {
            if engine == Engine::Enum {
                return Err(Error::Usage("the enum engine needs a ProbLog program".into()));
            }
            let q = ground_atom(query, &m.symbols)?;
            let mut ev = Vec::new();
            for (a, v) in evidence {
                let g = ground_atom(a, &m.symbols)?;
                let idx = m.value_index(g.functor, v).or_else(|e| match bool_value(v) {
                    Some(b) if m.range_size(g.functor) == 2 => Ok(usize::from(b)),
                    _ => Err(e),
                })?;
                ev.push((g, idx));
            }
            let probs = run_model(m, engine, &q, &ev, &opts)?;
            Ok(Answer {
                values: m.range_names(q.functor),
                probs,
            })
        }
        Input::ProbLog(p) => {
            let q = ground_atom(query, &p.symbols)?;
            let mut ev = Vec::new();
            for (a, v) in evidence {
                let b = bool_value(v).ok_or_else(|| Error::Usage(format!("{v} is not a Boolean value")))?;
                ev.push((ground_atom(a, &p.symbols)?, b));
            }
            if engine == Engine::Enum {
                return Ok(Answer::boolean(enumerate(p, &q, &ev, cfg.enum_cap, &opts)?));
            }
            let m = translate(p, cfg.style)?;
            let fixed = |a: &GroundAtom| -> Option<bool> {
                if m.covers(a) {
                    return None;
                }
                // Atoms no factor mentions are domain facts or never derivable.
                let kind = p.kinds().get(&a.functor).copied();
                Some(kind == Some(PredKind::Domain) && m.domains.get(&a.functor).is_some_and(|ts| ts.contains(&a.args)))
            };
            let mut kept = Vec::new();
            for (a, v) in &ev {
                match fixed(a) {
                    Some(truth) if truth != *v => return Err(hetlift_core::Error::InconsistentEvidence.into()),
                    Some(_) => {}
                    None => kept.push((a.clone(), usize::from(*v))),
                }
            }
            if let Some(truth) = fixed(&q) {
                // Still reject inconsistent evidence on the rest of the model.
                if !kept.is_empty() {
                    let anchor = kept[0].0.clone();
                    run_model(&m, engine, &anchor, &kept, &opts)?;
                }
                return Ok(Answer::boolean(if truth { vec![0.0, 1.0] } else { vec![1.0, 0.0] }));
            }
            Ok(Answer::boolean(run_model(&m, engine, &q, &kept, &opts)?))
        }
    }
}

fn run_model(m: &Model, engine: Engine, q: &GroundAtom, ev: &[(GroundAtom, usize)], opts: &InferenceOptions) -> Result<Vec<f64>> {
    Ok(match engine {
        Engine::Lifted => lifted::infer(m, q, ev, opts)?.distribution,
        Engine::Ve1 => query_ve1(m, q, ev, opts)?,
        Engine::Ve => query_ve(m, q, ev, opts)?,
        Engine::Enum => unreachable!("handled by the caller"),
    })
}
