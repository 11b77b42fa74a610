//! Counterexample traces and their text form.
//!
//! One line per transition followed by a terminal line:
//!
//! ```text
//! 0 0 main launch time=0
//! 1 1 host spawn time=0
//! ...
//! 311 2 clock halt time=44
//! FINAL time=44 wg=4 ts=4
//! ```
//!
//! The `time` column is the model time after the transition. Minimum-kernel
//! traces add `result=<glob[0]>` to the terminal line.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{initial_state, Action, Role, Transition};
use crate::model::{PlatformConfig, ProblemSpec, TuningParams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub transitions: Vec<Transition>,
    pub final_time: u64,
    pub params: TuningParams,
    pub steps: usize,
}

impl Trace {
    /// Renders the trace, replaying it to recover roles and timestamps.
    pub fn render(&self, platform: &PlatformConfig, problem: &ProblemSpec) -> Result<String> {
        let mut state = initial_state(platform, problem, self.params)?;
        let mut out = String::new();
        for (index, &t) in self.transitions.iter().enumerate() {
            let role = state
                .model()
                .role(t.pid)
                .ok_or_else(|| Error::CorruptTrace {
                    index,
                    reason: format!("no process with pid {}", t.pid),
                })?;
            state = state.apply(t).map_err(|e| Error::CorruptTrace {
                index,
                reason: e.to_string(),
            })?;
            writeln!(
                out,
                "{index} {} {role} {} time={}",
                t.pid,
                t.action,
                state.time()
            )
            .expect("writing to a String");
        }
        write!(
            out,
            "FINAL time={} wg={} ts={}",
            state.time(),
            self.params.wg,
            self.params.ts
        )
        .expect("writing to a String");
        if let Some(result) = state.result() {
            write!(out, " result={result}").expect("writing to a String");
        }
        out.push('\n');
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Trace> {
        let mut transitions = Vec::new();
        let mut final_line = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::TraceParse {
                line: line_no,
                reason,
            };
            if final_line.is_some() {
                return Err(err("content after the FINAL line".into()));
            }
            if let Some(rest) = line.strip_prefix("FINAL") {
                final_line = Some(parse_final(rest).map_err(err)?);
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 5 {
                return Err(err(format!(
                    "expected 5 or more fields, got {}",
                    fields.len()
                )));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|e| err(format!("bad index {:?}: {e}", fields[0])))?;
            if index != transitions.len() {
                return Err(err(format!(
                    "index {index} out of sequence, expected {}",
                    transitions.len()
                )));
            }
            let pid = fields[1]
                .parse()
                .map_err(|e| err(format!("bad pid {:?}: {e}", fields[1])))?;
            fields[2].parse::<Role>().map_err(err)?;
            let last = fields.len() - 1;
            if !fields[last].starts_with("time=") {
                return Err(err("missing time= column".into()));
            }
            let action: Action = fields[3..last].join(" ").parse().map_err(err)?;
            transitions.push(Transition::new(pid, action));
        }
        let (final_time, params) = final_line.ok_or(Error::TraceParse {
            line: text.lines().count(),
            reason: "missing FINAL line".into(),
        })?;
        Ok(Trace {
            steps: transitions.len(),
            transitions,
            final_time,
            params,
        })
    }

    pub fn write_to(
        &self,
        path: &Path,
        platform: &PlatformConfig,
        problem: &ProblemSpec,
    ) -> Result<()> {
        std::fs::write(path, self.render(platform, problem)?)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Trace> {
        Trace::parse(&std::fs::read_to_string(path)?)
    }
}

fn parse_final(rest: &str) -> std::result::Result<(u64, TuningParams), String> {
    let mut time = None;
    let mut wg = None;
    let mut ts = None;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("bad field {field:?}"))?;
        let num = |v: &str| v.parse::<u64>().map_err(|e| format!("bad {key}: {e}"));
        match key {
            "time" => time = Some(num(value)?),
            "wg" => wg = Some(num(value)? as u32),
            "ts" => ts = Some(num(value)? as u32),
            "result" => {}
            other => return Err(format!("unknown field {other:?}")),
        }
    }
    match (time, wg, ts) {
        (Some(t), Some(wg), Some(ts)) => Ok((t, TuningParams::new(wg, ts))),
        _ => Err("FINAL needs time, wg and ts".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{deterministic_run, Policy};

    #[test]
    fn render_parse_roundtrip() {
        let platform = PlatformConfig::new(1, 1, 4, 4).unwrap();
        let problem = ProblemSpec::minimum(vec![4, 2, 8, 6, 1, 7, 3, 5]).unwrap();
        let out = deterministic_run(
            &platform,
            &problem,
            TuningParams::new(2, 2),
            Policy::SeededRandom(3),
        )
        .unwrap();
        let text = out.trace.render(&platform, &problem).unwrap();
        assert!(text.starts_with("0 0 main launch time=0\n"));
        assert!(text.ends_with(&format!("FINAL time={} wg=2 ts=2 result=1\n", out.time)));
        let parsed = Trace::parse(&text).unwrap();
        assert_eq!(parsed, out.trace);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Trace::parse("0 0 main launch time=0\n2 1 host spawn time=0\n").unwrap_err();
        assert!(matches!(err, Error::TraceParse { line: 2, .. }));
        let err = Trace::parse("0 0 main launch time=0\n").unwrap_err();
        assert!(matches!(err, Error::TraceParse { .. }));
        let err = Trace::parse("0 0 main jump time=0\nFINAL time=0 wg=2 ts=2\n").unwrap_err();
        assert!(matches!(err, Error::TraceParse { line: 1, .. }));
    }

    #[test]
    fn render_rejects_disabled_steps() {
        let platform = PlatformConfig::default();
        let problem = ProblemSpec::abstract_kernel(8).unwrap();
        let trace = Trace {
            transitions: vec![Transition::new(2, Action::Tick)],
            final_time: 0,
            params: TuningParams::new(2, 2),
            steps: 1,
        };
        assert!(matches!(
            trace.render(&platform, &problem),
            Err(Error::CorruptTrace { index: 0, .. })
        ));
    }
}
